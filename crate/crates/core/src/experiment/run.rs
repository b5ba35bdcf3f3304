//! Dispatch of a run configuration to the numerical modules.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use super::config::{Kind, RunConfig, SCHEMA_VERSION};
use super::search::{counterexample_search, SearchReport};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hardy::{
    check_atom, make_atom, transform_atom, verify_dilation_h1, verify_ellipsoid_containment, verify_h1_bound,
    wraparound_estimate, AtomCheck,
};
use crate::norms::{compare_conditions, ConditionComparison};
use crate::operator::{apply_hausdorff, verify_l1_bound};
use crate::report::{Diagnostic, VerificationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub l_a: f64,
    pub l_star: f64,
    pub l_2: f64,
    pub ratio_l2_over_lstar: f64,
    pub ratio_la_over_l2: f64,
    pub max_relative_change: f64,
    pub max_skipped_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "index,value,l_a,l_star,l_2,ratio_l2_over_lstar,ratio_la_over_l2,max_relative_change,max_skipped_ratio\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.index,
                r.value,
                r.l_a,
                r.l_star,
                r.l_2,
                r.ratio_l2_over_lstar,
                r.ratio_la_over_l2,
                r.max_relative_change,
                r.max_skipped_ratio
            );
        }
        out
    }
}

/// Everything a run records. Wall-clock timing is kept out so that the
/// serialised bundle depends on the configuration alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub kind: Kind,
    pub pass: bool,
    pub config: RunConfig,
    pub checks: Vec<NamedCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<ConditionComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexamples: Option<SearchReport>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ReportBundle {
    fn new(config: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: config.kind,
            pass: true,
            config: config.clone(),
            checks: Vec::new(),
            norms: None,
            sweep: None,
            counterexamples: None,
            diagnostics: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, report: VerificationReport) {
        self.checks.push(NamedCheck {
            name: name.to_string(),
            report,
        });
    }

    fn atom_checks(&mut self, prefix: &str, c: AtomCheck) {
        self.check(&format!("{prefix}_support"), c.support);
        self.check(&format!("{prefix}_sup"), c.sup);
        self.check(&format!("{prefix}_mean"), c.mean);
    }

    fn diagnostic(&mut self, name: &str, value: f64) {
        self.diagnostics.push(Diagnostic {
            name: name.to_string(),
            value,
        });
    }

    fn finish(mut self) -> Self {
        self.pass = self.checks.iter().all(|c| c.report.pass);
        self
    }

    pub fn check_named(&self, name: &str) -> Option<&VerificationReport> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.report)
    }

    /// True when every stored flag agrees with its recorded inequality.
    pub fn flags_consistent(&self) -> bool {
        self.checks.iter().all(|c| c.report.pass == c.report.recomputed_pass())
            && self.pass == self.checks.iter().all(|c| c.report.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        text
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ReportBundle,
    /// `(stem, grid)`; written as `<stem>.grid.csv`.
    pub grids: Vec<(String, GridFunction)>,
}

impl RunOutput {
    /// Writes `report.json`, the grids when requested, and `sweep.csv` for sweeps.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report.to_json_string())?;
        if self.report.config.write_grids {
            for (stem, grid) in &self.grids {
                grid.write_csv(dir.join(format!("{stem}.grid.csv")))?;
            }
        }
        if let Some(table) = &self.report.sweep {
            std::fs::write(dir.join("sweep.csv"), table.to_csv_string())?;
        }
        Ok(())
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut report = ReportBundle::new(config);
    let mut grids = Vec::new();
    match config.kind {
        Kind::Norms => {
            let kernel = config.kernel.as_ref().expect("validated");
            let matrix = config.matrix.as_ref().expect("validated");
            let cmp = compare_conditions(kernel, matrix, &config.quadrature_for(kernel.dim()))?;
            report.diagnostic("ratio_l2_over_lstar", cmp.ratio_l2_over_lstar);
            report.diagnostic("ratio_la_over_l2", cmp.ratio_la_over_l2);
            report.norms = Some(cmp);
        }
        Kind::Apply => {
            let kernel = config.kernel.as_ref().expect("validated");
            let matrix = config.matrix.as_ref().expect("validated");
            let f = config.sample_function()?;
            let out = apply_hausdorff(kernel, matrix, &f, &config.quadrature_for(kernel.dim()))?;
            report.diagnostic("l1_f", f.l1_norm());
            report.diagnostic("l1_hf", out.grid.l1_norm());
            report.diagnostic("max_abs_hf", out.grid.max_abs());
            report.diagnostic("out_of_box_fraction", out.out_of_box_fraction);
            report.diagnostic("skipped_mass", out.skipped_mass);
            report.diagnostic("active_nodes", out.active_nodes as f64);
            grids.push(("f".to_string(), f));
            grids.push(("hf".to_string(), out.grid));
        }
        Kind::VerifyL1 => {
            let kernel = config.kernel.as_ref().expect("validated");
            let matrix = config.matrix.as_ref().expect("validated");
            let q = config.quadrature_for(kernel.dim());
            let f = config.sample_function()?;
            report.check(
                "l1_bound",
                verify_l1_bound(kernel, matrix, &f, &q, config.tolerances.l1_slack)?,
            );
            if config.write_grids {
                grids.push(("hf".to_string(), apply_hausdorff(kernel, matrix, &f, &q)?.grid));
                grids.insert(0, ("f".to_string(), f));
            }
        }
        Kind::VerifyH1 => {
            let kernel = config.kernel.as_ref().expect("validated");
            let matrix = config.matrix.as_ref().expect("validated");
            let q = config.quadrature_for(kernel.dim());
            let f = config.sample_function()?;
            report.check(
                "h1_bound",
                verify_h1_bound(kernel, matrix, &f, &q, config.tolerances.c_h1)?,
            );
            report.diagnostic("mean_f", f.mean());
            report.diagnostic("wraparound_relative_change", wraparound_estimate(&f)?);
            if let Some(a) = &config.dilation {
                let d = verify_dilation_h1(&f, a, config.tolerances.c_dil)?;
                report.check("dilation_h1", d.bound);
                if let Some(inv) = d.invariance {
                    report.check("dilation_invariance", inv);
                }
            }
            if config.write_grids {
                grids.push(("hf".to_string(), apply_hausdorff(kernel, matrix, &f, &q)?.grid));
                grids.insert(0, ("f".to_string(), f));
            }
        }
        Kind::AtomCheck => {
            let spec = config.atom.as_ref().expect("validated");
            let grid = config.grid.as_ref().expect("validated");
            let atom = spec.atom();
            let g = make_atom(&atom, grid.region()?, grid.resolution.clone())?.scale(spec.scale);
            let h = g.spacing().iter().cloned().fold(0.0, f64::max);
            let tol = config.tolerances.atom.unwrap_or_else(|| atom.sampling_tolerance(h));
            report.diagnostic("atom_tolerance", tol);
            report.atom_checks("atom", check_atom(&g, &atom.center, atom.radius, tol)?);
            if let Some(a) = &spec.transform {
                let t = transform_atom(&g, &atom, a)?;
                let th = t.grid.spacing().iter().cloned().fold(0.0, f64::max);
                let image_tol = config.tolerances.atom.unwrap_or_else(|| {
                    crate::hardy::Atom::new(t.center.clone(), t.radius, atom.profile).sampling_tolerance(th)
                });
                report.diagnostic("l1", t.l1);
                report.diagnostic("transformed_radius", t.radius);
                report.diagnostic("transformed_tolerance", image_tol);
                report.atom_checks("transformed", check_atom(&t.grid, &t.center, t.radius, image_tol)?);
                let e = verify_ellipsoid_containment(a, atom.radius, spec.ellipsoid_samples, config.seed)?;
                report.check("ellipsoid_containment", e.containment);
                report.check(
                    "ellipsoid_tightness",
                    VerificationReport::upper_bound(e.tightness_threshold, e.attained_ratio, 0.0),
                );
                grids.push(("atom".to_string(), g));
                grids.push(("transformed".to_string(), t.grid));
            } else {
                grids.push(("atom".to_string(), g));
            }
        }
        Kind::Sweep => {
            let sweep = config.sweep.as_ref().expect("validated");
            let points = sweep.points();
            let rows = points
                .par_iter()
                .enumerate()
                .map(|(index, &value)| sweep_row(config, &sweep.parameter, index, value))
                .collect::<Result<Vec<_>>>()?;
            report.diagnostic("points", rows.len() as f64);
            report.sweep = Some(SweepTable {
                parameter: sweep.parameter.clone(),
                rows,
            });
        }
        Kind::CounterexampleSearch => {
            let s = config.search.as_ref().expect("validated");
            let found = counterexample_search(config.seed, s.count, s.dim, s.symmetric_only)?;
            report.diagnostic("findings", found.findings.len() as f64);
            report.diagnostic(
                "max_ratio",
                found.findings.first().map_or(0.0, |f| f.ratio),
            );
            report.counterexamples = Some(found);
        }
    }
    Ok(RunOutput {
        report: report.finish(),
        grids,
    })
}

fn sweep_row(config: &RunConfig, parameter: &str, index: usize, value: f64) -> Result<SweepRow> {
    let point = config.with_parameter(parameter, value)?;
    let kernel = point
        .kernel
        .as_ref()
        .ok_or_else(|| Error::ConfigInvalid("sweep needs a kernel".into()))?;
    let matrix = point
        .matrix
        .as_ref()
        .ok_or_else(|| Error::ConfigInvalid("sweep needs a matrix field".into()))?;
    let c = compare_conditions(kernel, matrix, &point.quadrature_for(kernel.dim()))?;
    Ok(SweepRow {
        index,
        value,
        l_a: c.l_a.value,
        l_star: c.l_star.value,
        l_2: c.l_2.value,
        ratio_l2_over_lstar: c.ratio_l2_over_lstar,
        ratio_la_over_l2: c.ratio_la_over_l2,
        max_relative_change: c.l_a.relative_change.max(c.l_star.relative_change).max(c.l_2.relative_change),
        max_skipped_ratio: c.l_a.skipped_ratio.max(c.l_star.skipped_ratio).max(c.l_2.skipped_ratio),
    })
}

use serde::{Deserialize, Serialize};

/// Named scalar attached to a report for diagnosis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub name: String,
    #[serde(with = "real")]
    pub value: f64,
}

/// Outcome of a one-sided numerical inequality `lhs <= rhs * (1 + tolerance)`.
///
/// Every check in the toolkit is phrased this way so that `pass` can be
/// recomputed from the stored fields alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(with = "real")]
    pub lhs: f64,
    #[serde(with = "real")]
    pub rhs: f64,
    #[serde(with = "real")]
    pub ratio: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl VerificationReport {
    pub fn upper_bound(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let pass = lhs.is_finite() && rhs.is_finite() && lhs <= rhs * (1.0 + tolerance);
        Self {
            lhs,
            rhs,
            ratio,
            tolerance,
            pass,
            diagnostics: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.push(name, value);
        self
    }

    pub fn push(&mut self, name: &str, value: f64) {
        self.diagnostics.push(Diagnostic {
            name: name.to_string(),
            value,
        });
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics
            .iter()
            .find(|d| d.name == name)
            .map(|d| d.value)
    }

    /// Re-derives the pass flag from `lhs`, `rhs` and `tolerance`.
    pub fn recomputed_pass(&self) -> bool {
        self.lhs.is_finite() && self.rhs.is_finite() && self.lhs <= self.rhs * (1.0 + self.tolerance)
    }
}

/// JSON has no infinities: non-finite values are written as the strings
/// `"inf"`, `"-inf"` and `"nan"` and read back from either form.
pub mod real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

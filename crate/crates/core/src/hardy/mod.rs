//! Atoms, Riesz transforms and the H1 surrogate norm.

mod atom;
mod h1;
mod riesz;

pub use atom::{
    ball_volume, check_atom, make_atom, transform_atom, unit_ball_volume, verify_ellipsoid_containment, Atom,
    AtomCheck, AtomProfile, EllipsoidReport, TransformedAtom,
};
pub use h1::{dilate, verify_dilation_h1, verify_h1_bound, DilationCheck, DEFAULT_C_DIL, DEFAULT_C_H1, DILATION_INVARIANCE_TOL};
pub use riesz::{
    h1_surrogate, h1_surrogate_norm, riesz_transform, wraparound_estimate, H1Surrogate, RieszOutput, SpectralGrid,
    Spectrum, MAX_IMAGINARY_RESIDUE,
};

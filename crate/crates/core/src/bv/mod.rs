//! BV calculus in one variable and synthetic fields in up to three, used to
//! check slicing and jump-density identities with exact measures.

mod field;
mod geometry;
mod profile;
mod verify;

pub use field::{
    ac_density, apply_operator_analytic, finite_difference_crosscheck, slab_measure,
    slab_variation, FieldSpec, FieldTerm, MeasureRep, MeasureTerm, SyntheticField, TermSpec,
};
pub use geometry::{area_pieces, section_area, slab_area, BoxN};
pub use profile::{
    cantor_function, cantor_moments, cantor_partial_moments, integrate_abs, poly_against_cantor,
    AcPiece, BvProfile1D, CantorPiece, Jump, Part, Poly, ProfileSpec,
};
pub use verify::{
    section, verify_hyperplane_slicing, verify_jump_density, verify_line_slicing,
    HyperplaneSlicingReport,
    JumpDensityReport, LineSlicingReport, PartValues,
};

/// Exact 1-D measure of a finite union of closed intervals.
pub fn bv1d_measure(profile: &BvProfile1D, intervals: &[(f64, f64)], part: Part) -> f64 {
    profile.measure_union(intervals, part)
}

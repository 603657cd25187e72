//! Numerical checks of the weighted inequalities on polar quadrature grids.

mod checks;
mod cutoff;
mod field;
mod grid;

pub use checks::*;
pub use cutoff::{smoothstep, CutoffProfile, KernelSplit};
pub use field::{make_test_field, Component, Family, FieldError, FieldSpec, Profile, TestField};
pub use grid::{GridSpec, Node, PolarGrid};

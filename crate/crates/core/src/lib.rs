//! Numerical laboratory for algebraic curvature operators: the isotropic
//! curvature cones PIC/PIC1/PIC2, the pinching transform `l_{a,b}`, the
//! Hamilton ODE `dR/dt = Q(R)` and closed-form shrinking soliton models.
//!
//! Conventions: a tensor in dimension `n` is stored as a symmetric matrix on
//! the 2-forms `e_i∧e_j`, `i<j`, in lexicographic order, with
//! `R(e_i∧e_j, e_k∧e_l) = R_ijkl`. Public indices are 0-based except in
//! component lists read by [`CurvatureTensor::from_components`].

pub mod cone;
pub mod curvature;
pub mod error;
pub mod frame;
pub mod sampling;
pub mod soliton;

pub use curvature::{CurvatureTensor, SymmetricForm};
pub use error::{Error, Result};
pub use frame::{FrameConfig, MembershipReport, Mode, SearchBudget};

//! Numerical toolkit for weighted sub-Laplacians `L^w` with `w = exp(-N^alpha)`
//! on two-step Métivier groups.
//!
//! The crate covers the group calculus in exponential coordinates, the
//! Kaplan norm and its horizontal derivatives, the Schrödinger potential
//! `V_alpha` obtained from the ground-state transform, quadrature of the
//! associated quadratic forms, Weyl quasi-modes, sublevel-set thinness
//! integrals and a finite-difference eigenproblem for `L + V_alpha`.

pub mod error;
pub mod forms;
pub mod group;
pub mod lanczos;
pub mod linalg;
pub mod norm;
pub mod potential;
pub mod sampling;
pub mod sparse;
pub mod spectral;
pub mod sublevel;
pub mod suite;

pub use error::{Error, Result};
pub use forms::{
    apply_sub_laplacian, apply_xj, conjugation_residual, dirichlet_form, weyl_residual, weyl_sequence,
    QuadratureGrid, SmoothBump, TestFunction, WeylRecord,
};
pub use group::{
    dilate, homogeneous_dimension, inverse, make_block_diagonal, make_heisenberg, multiply, verify_metivier,
    ConditionEstimate, GroupPoint, MetivierStructure,
};
pub use lanczos::{eigen_count_below, lanczos_lowest, EigenCount, SpectrumResult};
pub use norm::{estimate_gamma, in_ball, kaplan_norm, quasi_distance, weight, BallSpec, GammaEstimate};
pub use potential::{
    check_sandwich, essential_inf_estimate, grad_norm_sq, grad_weight, laplacian_weight, potential_bounds,
    potential_value, sub_laplacian_norm, PotentialConstants,
};
pub use sparse::SparseSymmetricOperator;
pub use spectral::{assemble_derivative, assemble_operator, box_convergence_study, Grid3};
pub use sublevel::{
    ball_intersection_volume, cylinder_radius, in_sublevel, scaling_fit, thinness_integral, SublevelSpec,
    ThinnessEstimate,
};

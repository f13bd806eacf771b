//! Boundary-integral tools for 2D inclusions: Neumann-Poincare operators, generalized
//! polarization tensors, Helmholtz scattering coefficients, first-order shape derivatives
//! and Newton-type shape reconstruction.

pub mod bessel;
pub mod error;
pub mod geometry;
pub mod gpt;
pub mod inversion;
pub mod potentials;
pub mod scattering;
pub mod sensitivity;
pub mod spectra;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{curvature_profile, make_shape, perturb_curve, BoundaryCurve, FourierMode, PerturbationField, ShapeSpec};
pub use gpt::{compute_gpt, gpt_from_far_field, harmonic_trace, scattered_potential, GptMatrix};
pub use potentials::{
    assemble_helmholtz_ops, assemble_np_adjoint, assemble_single_layer, interior_dtn, solve_electrostatic,
    solve_helmholtz_transmission, surface_laplacian, BoundaryOperator, DensityVector, HelmholtzParams, OperatorKind,
};
pub use sensitivity::{assemble_k1, gpt_jacobian, gpt_sensitivity, sensitivity_map, BasisKind, SensitivityJacobian};
pub use spectra::{np_spectrum, SpectrumReport};
pub use inversion::{
    change_of_basis, lb_eigenbasis, newton_reconstruct, recover_hh, BasisMaps, NewtonOptions, ReconstructionState,
};
pub use scattering::{compute_sc, sc_from_far_field, wave_change_of_basis, wave_trace, ScatteringMatrix};

//! Numerical laboratory for the elliptic sine-Gordon equation Δu = sin u:
//! explicit 2n-end solutions, Bäcklund/bilinear identity verification,
//! Morse index certification and end geometry.

pub mod config;
pub mod gauge;
pub mod geometry;
pub mod scattering;
pub mod spectral;
pub mod tau;

pub use config::{HyperbolicConfig, SgError, SolitonConfig, WaveVector, MAX_N};
pub use gauge::{
    gauge_quad, hirota_d, lemma_back_residual, xi_weights, BacklundLab, CJet, GaugeEngine,
    GaugeJet, GaugeQuad, SingularPoint,
};
pub use geometry::{end_profile_error, h_profile, predicted_ends, trace_nodal, EndDescriptor};
pub use scattering::{
    evolution_check, integrate_lax, integrate_lax_with, max_reflection, scattering_coeffs,
    Mat2, ScatteringSample, LAMBDA_GRID, MAT2_ID,
};
pub use spectral::{
    count_negative, count_negative_matrix, grid_survey, kernel_residual_norm,
    kernel_residual_ratio, lanczos_survey,
    morse_index, num_threads, probe_residual_norm, sample_cos_u, sturm_count,
    tridiag_eigenvalues, BandMatrix, GridSpec, GridSurvey, LanczosSurvey, MorseVerdict,
    SpectralReport,
};
pub use tau::{
    alpha_elliptic, alpha_hyperbolic, eval_hyperbolic, eval_jet, eval_solution,
    four_end_closed_form, heteroclinic, hirota_coefficient, kernel_element, pde_residual,
    tau_pair, HyperbolicEngine, Jet2, TauEngine, TauPair,
};

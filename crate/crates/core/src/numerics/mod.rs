//! Numerical kernels shared by the bath, NRG and criticality code.

mod ddouble;
mod eigen;
mod fit;
mod quad;

pub use ddouble::DDouble;
pub use eigen::{
    extremal_expectation, sym_eig, sym_eig_partial, sym_eig_selected, sym_eigenvalues, EigenDecomposition, SymMatrix};
pub use fit::{fit_divergence, fit_divergence_with, DivergenceFit, FitOptions};
pub use quad::{integrate, integrate_with, QuadConfig};

/// Every numerical tolerance used by the kernels, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigen-residual bound relative to `‖A‖_max`.
    pub eig_residual: f64,
    /// Bound on `‖VᵀV − I‖_max`.
    pub eig_orthogonality: f64,
    /// Relative asymmetry accepted when building a [`SymMatrix`].
    pub symmetry: f64,
    /// Default relative tolerance for [`integrate`].
    pub quad_rel_tol: f64,
    /// Width of the pole search window beyond the largest sampled α.
    pub fit_window: f64,
    /// Bracket width (in ln(α_c − α_max)) at which golden-section stops.
    pub fit_golden_tol: f64,
    /// Largest overlap tolerated between chain-mapping Lanczos vectors.
    pub chain_orthogonality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_residual: 1e-10,
            eig_orthogonality: 1e-10,
            symmetry: 1e-12,
            quad_rel_tol: 1e-12,
            fit_window: 2.0,
            fit_golden_tol: 1e-13,
            chain_orthogonality: 1e-25,
        }
    }
}

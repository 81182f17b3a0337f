//! Kernel machines: epsilon-SVR and Gaussian process regression.

mod functions;
mod gpr;
mod svr;

pub use functions::{kernel_eval, rbf, KernelId, KernelParams};
pub use gpr::{
    gpr_fit, gpr_lml_gradient, gpr_log_marginal_likelihood, gpr_predict, gpr_predict_mean, gram_matrix, GprBounds,
    GprModel, GprPrediction, GprSpec, GPR_WARN_ROWS,
};
pub use svr::{
    svr_fit, svr_fit_with_info, svr_kkt_violation, svr_predict, SvrFitInfo, SvrModel, SvrParams, DEFAULT_CACHE_BYTES,
};

//! Accuracy, dynamic-response and deployment-cost indicators.

mod dynamics;
mod footprint;
mod mae;
mod sv_scan;

pub use dynamics::{
    bin_index, derivative_binned_mae, detect_steps, transient_response, BinSpec, DerivativeBinReport, TransientEvent,
    TransientReport, T90_HOLD,
};
pub use footprint::{esn_stored, footprint, gpr_stored, mlp_stored, mlr_stored, svr_stored, FootprintReport};
pub use mae::{compute_mae, observed_range, MaeReport, STD_CONVENTION};
pub use sv_scan::{sv_tradeoff_scan, SvScanRow, SV_SCAN_HEADER};

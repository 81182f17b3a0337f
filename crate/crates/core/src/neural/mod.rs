//! Feedforward network and echo state network.

mod esn;
mod mlp;

pub use esn::{
    esn_build, esn_fit_readout, esn_predict, esn_readout, esn_run_states, esn_train_readout, hold_missing, ReadoutFit,
    spectral_radius, EsnModel, EsnSpec, READOUT_RIDGE_SCALE,
};
pub use mlp::{mlp_forward, mlp_gradient, mlp_train, MlpModel, MlpTrainOutcome, MlpTrainSpec};

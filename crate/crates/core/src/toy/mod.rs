//! Desk-scale rectified-flow trainer used to check the timestep sampler and
//! the spectral loss end to end.

mod flow;
mod model;
mod texture;
mod train;

pub use self::flow::{forward_diffuse, velocity_target, FlowState};
pub use self::model::{
    loss_and_grad, predict, time_bin, LossBreakdown, Objective, PredictorParams, KERNEL_SIZE,
    PARAM_COUNT, TIME_BINS,
};
pub use self::texture::{gen_texture, high_band_fraction, Texture, TextureSpec};
pub use self::train::{
    band_error, compare_arms, experiment_compare, init_params, train, BandErrors, CompareReport,
    EvalSet, SeedComparison, StepLoss, TrainConfig, TrainOutcome, LOW_BAND_TOLERANCE,
};

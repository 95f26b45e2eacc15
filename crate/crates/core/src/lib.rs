//! Framed slotted-ALOHA random access: simulator, traffic models, single-frame
//! backlog estimators and the online LSTM backlog predictor.

mod error;
pub mod estimators;
pub mod export;
pub mod predictor;
pub mod sim;
pub mod traffic;

pub use error::{CoreError, Result};
pub use estimators::{
    expected_moments, ml_estimate, mom_idle_estimate, mom_mae_estimate, occupancy_likelihoods, BacklogDistribution,
    MlEstimate, MlEstimator, MomentTable, MomentTriple, OccupancyTable,
};
pub use predictor::{
    make_label, mean_abs_error, predict, predict_on_trace, pretrain_offline, run_prediction_episode, LabelStrategy,
    LabeledSample, Labeler, MomVariant, ObservationWindow, OnlineLearner, PredictionRecord, PredictionSetup,
    PredictorConfig, PredictorMode, ReplayBuffer,
};
pub use sim::{
    run_episode, run_frame, step_backlog, DeviceId, DeviceState, FrameObservation, FrameOutcome, FrameTrace, SimConfig,
    Simulator,
};
pub use traffic::{beta_offset_pmf, PeriodicProfile, TrafficConfig, TrafficSource};

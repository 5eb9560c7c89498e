//! Training, evaluation and experiment sweeps over generated datasets.

mod config;
mod grid;
mod train;

pub use config::{artifact_hash, Featurizer, ModelChoice, PreparedFeaturizer, TrainConfig, TrainMode};
pub use grid::{run_experiment_grid, CellMode, CellOutcome, GridCell, GridModels, GridReport, GridSpec, GRID_CSV};
pub use train::{
    evaluate, evaluate_all, featurize_split, fit, load_checkpoint, model_graph, predict, test_splits, train,
    Evaluation, ExperimentRecord, FeatureSet, Teacher, CHECKPOINT_FILE, RECORD_FILE,
};

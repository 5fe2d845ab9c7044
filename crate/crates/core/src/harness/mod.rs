//! Data ingestion, metrics, scenario evaluation, reports and model files.

pub mod metrics;
pub mod mnist;
pub mod model;
pub mod report;
pub mod scenario;

pub use metrics::{compute_metrics, confusion, impact_pct, metrics_from_confusion, roc_auc, Confusion, Metrics};
pub use mnist::{load_mnist_idx, split_dataset, synth_digits, DatasetSplit, Sample, SplitOptions};
pub use model::{load_model, load_model_file, save_model, save_model_file, ModelFile, MODEL_SCHEMA_VERSION};
pub use report::{render_report, ReportFormat};
pub use scenario::{run_experiment, scenario_program, AttackKind, BackendSpec, EvalReport, Scenario, ScenarioDescriptor};

//! End-to-end runs: configuration, trial generation, metric execution,
//! exploration, aggregation and reporting.

mod config;
mod dataset;
mod hotlist;
mod judge;
mod report;
mod run;

pub use config::{
    game_metric, AggregateConfig, CapabilityConfig, ControlProbe, DatasetSection, InteractionConfig,
    PredictabilityConfig, RunConfig, RunSection, SystemConfig, SystemKindConfig,
};
pub use dataset::load_dataset;
pub use hotlist::{divergence_hotlist, HotItem, Hotlist};
pub use judge::{bundled_suite, judge_reliability, CaseScore, JudgeReport, SuiteCase, PASS_FRACTION};
pub use report::{
    emit_report, AggregationSection, Audit, AuditCounts, CalibrationSection, Format, GameSummary, GamesSection,
    MetricResult, MetricStatus, ReportBundle, RiskSection, RunLedger, Section, Seeds, SkipNote, SystemCalibration,
    SystemSummary, TrialStats, TIMESTAMP_FIELD,
};
pub use run::{
    play_games, run_games_only, run_pipeline, write_matches, write_outputs, GamesOutput, Purpose, RunOutput,
    TaggedTrial, TrialFailure, HUMAN_TAG, TOOL_NAME,
};

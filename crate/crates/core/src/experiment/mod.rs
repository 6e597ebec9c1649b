//! Runs, sweeps and regret tracking.

mod config;
mod inspect;
mod metrics;
mod runner;
mod sweep;

pub use config::{
    deep_merge, preset, preset_value, resolve, resolve_sweep, BeliefSpec, ExperimentConfig, GameSpec, PRESET_GAMES,
    PRESET_SAMPLERS, RG_UCB_DELTAS,
};
pub use inspect::{inspect, EntrySnapshot, InspectOptions, Snapshot};
pub use metrics::{regret_jb, regret_jf, regret_jm, RANK_TOLERANCE};
pub use runner::{
    dump_ground_truth, entry_proportions, eval_schedule, observe_round, run, run_seed, setup, write_record, EvalPoint,
    RunRecord,
};
pub use sweep::{curve_csv, mean_se, summary_csv, sweep, trapezoid_auc, write_sweep, CurvePoint, SweepCell};

//! Scenario configuration, seeded generation and experiment plans.

mod config;
mod experiments;
mod generate;
mod output;

pub use config::{read_config, write_config, Fading, ParamSpec, ScenarioConfig, KEYS};
pub use experiments::{
    closed_form_backoff, efm_table, experiment_config, fixed_blocks, harvesting_ratio_comparison,
    ratio_comparison_config, run_experiment, run_experiment_with, table_sensing_energy, EfmTableRow, RatioComparison,
    EXPERIMENTS, TABLE_EFM, TABLE_HARVEST_RATE,
};
pub use generate::{availability_order, generate_scenario, pu_band, stream_rng};
pub use output::{check_config_hash, format_sig, write_results, ExperimentResult, ExperimentRow, SIGNIFICANT_DIGITS};

//! Experiment harness: configuration, sweeps, trace I/O, and SVG reporting.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod trace;

pub use config::{
    DetectorChoice, DetectorParams, ExperimentConfig, ExperimentKind, GridParams, OutputParams,
    SimulateParams, StrategyParams, SCHEMA_VERSION,
};
pub use experiment::{
    detect_on_trace, run_experiment, simulate_streams, AssertionOutcome, SweepResult,
};
pub use plot::{render_plots, render_svg, PlotSpec, Series};
pub use trace::{parse_trace, read_trace, trace_to_string, write_trace, TRACE_HEADER};

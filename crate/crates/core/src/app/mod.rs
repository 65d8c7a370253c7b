//! Command-line front end, configuration files, sweeps and figure data.

mod cli;
pub mod config;
pub mod fig3;
pub mod sweep;

pub use cli::{run, Cli, Command};
pub use config::Config;
pub use sweep::{find_crossing, optimize, sweep, EfficiencyCurve, Optimum, SweepParameter, SweepSpec};

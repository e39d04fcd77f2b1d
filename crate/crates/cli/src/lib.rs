//! Config-driven pipeline runner: offline stages (snapshot generation, POD,
//! operator assembly and closure fitting) and online stages (ROM integration
//! and error reports) behind one subcommand interface.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Variant;
use crate::config::{load_config, FormatSpec, PipelineConfig};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "romclose", version, about = "POD-Galerkin ROMs with data-driven closure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Pipeline configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,

    /// Override a scalar config field, e.g. --set rom.r=4 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Output directory, overriding output.dir from the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<PipelineConfig> {
        load_config(&self.config, &self.set, self.out.as_deref())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full-order solver and store snapshots.
    Fom(CommonArgs),
    /// Extract the POD basis from stored snapshots.
    Pod(CommonArgs),
    /// Assemble ROM operators and fit the data-driven closure.
    Train(CommonArgs),
    /// Integrate one ROM variant from the stored operators.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Which reduced model to integrate.
        #[arg(long, value_enum)]
        variant: Variant,
    },
    /// Compute error series and summary ratios for all three variants.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Emit only this format instead of the configured list.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Measure against projected snapshots (removes the projection floor).
        #[arg(long)]
        against_projection: bool,
    },
    /// Run the three-mode demonstration pipeline end to end.
    Toy(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for FormatSpec {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => FormatSpec::Csv,
            FormatArg::Json => FormatSpec::Json,
        }
    }
}

/// Executes a parsed command line. The caller maps errors to exit codes.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fom(common) => commands::cmd_fom(&common.load()?),
        Command::Pod(common) => commands::cmd_pod(&common.load()?),
        Command::Train(common) => commands::cmd_train(&common.load()?),
        Command::Simulate { common, variant } => commands::cmd_simulate(&common.load()?, variant),
        Command::Report {
            common,
            format,
            against_projection,
        } => commands::cmd_report(&common.load()?, format.map(Into::into), against_projection),
        Command::Toy(common) => commands::cmd_toy(&common.load()?),
    }
}

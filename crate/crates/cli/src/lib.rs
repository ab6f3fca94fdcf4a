//! Subcommands of the `drgcn` binary. Each writes its artifacts under
//! `--out` and embeds a [`manifest::RunManifest`] in every JSON report.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 bad bundle or
//! checkpoint (including "no Dr layers"), 3 training divergence,
//! 4 verification failure.

pub mod args;
pub mod convert_check;
pub mod exit;
pub mod manifest;
pub mod meanfield;
pub mod measure_k;
pub mod train;

use args::Command;

pub fn dispatch(cmd: &Command) -> anyhow::Result<()> {
    match cmd {
        Command::Train(a) => train::run(a),
        Command::Meanfield(a) => meanfield::run(a),
        Command::MeasureK(a) => measure_k::run(a),
        Command::ConvertCheck(a) => convert_check::run(a),
    }
}

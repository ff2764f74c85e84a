use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "swapsim",
    version,
    about = "Simulate out-of-core NN inference on microcontrollers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and print its report row.
    Simulate(SimulateArgs),
    /// Run every (network, SRAM, buffer) combination of a grid.
    Sweep(SweepArgs),
    /// Check network and hardware files and print layer classifications.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct HardwareArgs {
    /// Hardware profile JSON; defaults to the built-in STM32F746 profile.
    #[arg(long)]
    pub hw: Option<PathBuf>,
    /// Per-transaction IO overhead in seconds, overriding the profile.
    #[arg(long, value_name = "SECONDS")]
    pub io_overhead: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Network JSON file, or one of: vgg16, alexnet, mobilenet.
    #[arg(long)]
    pub nn: String,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    /// SRAM size (K/M/G suffixes are powers of 1024); defaults to the profile's.
    #[arg(long, value_parser = parse_size)]
    pub sram: Option<u64>,
    /// Buffer (tile) size.
    #[arg(long, value_parser = parse_size)]
    pub buffer: u64,
    #[arg(long, default_value_t = 1)]
    pub frames: u32,
    /// Seconds between frame releases; 0 releases all frames at once.
    #[arg(long, value_name = "SECONDS", default_value_t = 0.0)]
    pub arrival_interval: f64,
    /// Write the schedule trace here: CSV if the name ends in .csv, else
    /// trace-viewer JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Report CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated network files or built-in names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nn: Vec<String>,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    /// Comma-separated SRAM sizes.
    #[arg(long, value_delimiter = ',', value_parser = parse_size, required = true)]
    pub sram: Vec<u64>,
    /// Comma-separated buffer sizes.
    #[arg(long, value_delimiter = ',', value_parser = parse_size, required = true)]
    pub buffer: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    pub frames: u32,
    #[arg(long, value_name = "SECONDS", default_value_t = 0.0)]
    pub arrival_interval: f64,
    /// Also write one trace-viewer JSON per grid point into the output
    /// directory.
    #[arg(long)]
    pub trace: bool,
    /// Output directory for report.csv (and traces); report goes to stdout
    /// when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Network and hardware JSON files.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Hardware used for classification; the built-in profile by default.
    #[arg(long)]
    pub hw: Option<PathBuf>,
}

/// Byte size with an optional K, M or G suffix (powers of 1024) and an
/// optional trailing B.
pub fn parse_size(text: &str) -> Result<u64> {
    let t = text.trim();
    let t = t.strip_suffix(['B', 'b']).unwrap_or(t);
    let (digits, shift) = match t.chars().last() {
        Some('K' | 'k') => (&t[..t.len() - 1], 10),
        Some('M' | 'm') => (&t[..t.len() - 1], 20),
        Some('G' | 'g') => (&t[..t.len() - 1], 30),
        _ => (t, 0),
    };
    let n: u64 = digits
        .trim()
        .parse()
        .with_context(|| format!("invalid size `{text}`"))?;
    if n == 0 {
        bail!("size must be positive: `{text}`");
    }
    n.checked_mul(1 << shift)
        .with_context(|| format!("size `{text}` is too large"))
}

pub fn secs_to_ns(sec: f64) -> Result<u64> {
    if !(sec.is_finite() && sec >= 0.0) {
        bail!("interval must be a non-negative number of seconds, got {sec}");
    }
    Ok((sec * 1e9).round() as u64)
}

/// Compact size label for file names: 512K, 8M, 1000.
pub fn size_label(bytes: u64) -> String {
    for (shift, suffix) in [(30, "G"), (20, "M"), (10, "K")] {
        if bytes >= 1 << shift && bytes.is_multiple_of(1 << shift) {
            return format!("{}{suffix}", bytes >> shift);
        }
    }
    bytes.to_string()
}

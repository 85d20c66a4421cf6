pub mod cost;
pub mod fit;
pub mod predict;
pub mod simulate;
pub mod spectrum;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};

use isl_core::curve::log_spaced_ks;
use isl_core::fitting::CoverageModel;
use isl_core::{CoverageCurve, TrialMatrix};

use crate::error::{CliError, CliResult};

/// Largest number of rows a k grid may expand to.
pub const MAX_GRID_POINTS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub quiet: bool,
}

impl Context {
    pub fn say(&self, msg: impl fmt::Display) {
        if !self.quiet {
            // A closed pipe (e.g. `| head`) is not an error for a summary.
            let _ = writeln!(std::io::stdout(), "{msg}");
        }
    }
}

/// Inclusive `LO:HI` interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: FromStr + PartialOrd + Copy + fmt::Display> FromStr for Span<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<T>()
                .map_err(|_| format!("`{v}` is not a valid bound"))
        };
        let (lo, hi) = (parse(a)?, parse(b)?);
        if !(lo <= hi) {
            return Err(format!("range {lo}:{hi} is empty"));
        }
        Ok(Span { lo, hi })
    }
}

/// Which `k` values to evaluate.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct KSelection {
    /// Comma-separated list of k values.
    #[arg(long = "k", value_delimiter = ',', conflicts_with = "k_range")]
    pub k: Vec<u64>,
    /// Every integer in LO:HI, or LOG_POINTS log-spaced ones.
    #[arg(long)]
    pub k_range: Option<Span<u64>>,
    #[arg(long, requires = "k_range")]
    pub log_points: Option<usize>,
}

impl KSelection {
    pub fn is_empty(&self) -> bool {
        self.k.is_empty() && self.k_range.is_none()
    }

    pub fn resolve(&self) -> CliResult<Vec<u64>> {
        let ks = match (&self.k_range, self.log_points) {
            (None, _) => {
                let mut ks = self.k.clone();
                ks.sort_unstable();
                ks.dedup();
                ks
            }
            (Some(span), Some(points)) => {
                if points < 2 {
                    return Err(CliError::usage("--log-points needs at least 2"));
                }
                if span.lo == 0 {
                    return Err(CliError::usage("log-spaced k ranges must start at 1 or above"));
                }
                log_spaced_ks(span.lo, span.hi, points.min(MAX_GRID_POINTS as usize))
            }
            (Some(span), None) => {
                if span.hi - span.lo >= MAX_GRID_POINTS {
                    return Err(CliError::Core(isl_core::Error::ResourceGuard(format!(
                        "k range {}:{} has more than {MAX_GRID_POINTS} values; use --log-points",
                        span.lo, span.hi
                    ))));
                }
                (span.lo..=span.hi).collect()
            }
        };
        if ks.is_empty() {
            return Err(CliError::usage("give k values with --k or --k-range"));
        }
        Ok(ks)
    }
}

pub fn prepare_output_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_output(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    write_output(dir, name, text.as_bytes())
}

fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|e| CliError::io(path, e))
}

fn input_error(path: &Path) -> impl FnOnce(isl_core::Error) -> CliError + '_ {
    move |source| CliError::Input {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_curve(path: &Path) -> CliResult<CoverageCurve> {
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    isl_core::io::read_curve_csv(open(path)?, label).map_err(input_error(path))
}

pub fn read_model(path: &Path) -> CliResult<CoverageModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    isl_core::io::parse_model_json(&text).map_err(input_error(path))
}

pub fn read_matrix(path: &Path) -> CliResult<TrialMatrix> {
    isl_core::io::read_trial_matrix_csv(open(path)?).map_err(input_error(path))
}

/// Joins values into one CSV line using shortest round-trip float formatting.
pub fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

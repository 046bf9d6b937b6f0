//! The `endurq` command line.
//!
//! Exit codes are uniform across subcommands: 0 on success, 1 when a file
//! cannot be read or written, 2 when arguments or input content are invalid.
//! Diagnostics go to standard error at the level named by `ENDURQ_LOG`
//! (`error`, `info` or `debug`; default `error`).

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::{ackermann, ackermann_trace, DEFAULT_CAP};
use crate::heatmap::{build_heatmap, export_heatmap, ExportFormat};
use crate::metrics::{
    aggregate_stack, compute_capacity, partition_systems, CapacityScore, DisjointPartition, SystemMetrics, Window,
};
use crate::product_form::normalizing_constant;
use crate::queue::MigrateDepth;
use crate::sim::{compare_baseline, generate_workload, run_simulation, SimConfig, WorkloadKind, WorkloadProfile};
use crate::trace::EventTrace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "endurq", version, about = "Endurance queue simulator and analysis tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and print the report as JSON.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Shrink the queue to its occupancy on every migration.
        #[arg(long)]
        migrate_reset: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the queue depth timeline as CSV.
        #[arg(long)]
        timeline_out: Option<PathBuf>,
        /// Also write the run's heat map as CSV.
        #[arg(long)]
        heatmap_out: Option<PathBuf>,
    },
    /// Run the endurance policy and the fixed depth-1 baseline on the same workload.
    Compare {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Shrink the queue to its occupancy on every migration.
        #[arg(long)]
        migrate_reset: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bucket a `timestamp,system_id,item_count` trace into a heat map.
    Heatmap {
        trace: PathBuf,
        #[arg(long)]
        bucket_width: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Capacity scores from a metrics CSV (`system_id,p,u,D,dt,S`).
    Capacity {
        metrics: PathBuf,
        /// Also partition the systems into this many groups.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalizing constants G(0)..G(N) of a closed product-form network.
    Gn {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        demands: Vec<f64>,
        #[arg(long)]
        population: u64,
    },
    /// Evaluate A(m, n) with saturation, optionally printing the reduction steps.
    Ackermann {
        m: u64,
        n: u64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Generate a seeded arrival trace as CSV.
    TraceGen {
        #[arg(long, value_enum)]
        profile: Profile,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        base_rate: Option<f64>,
        #[arg(long)]
        burst_rate: Option<f64>,
        #[arg(long)]
        burst_duration: Option<f64>,
        #[arg(long)]
        period: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        gap: f64,
        #[arg(long)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "source")]
        source: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Ppm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Poisson,
    Bursty,
    Sparse,
}

/// One row of the metrics CSV. The window defaults to `[0, 1)`.
#[derive(Debug, Deserialize)]
struct MetricsRow {
    system_id: String,
    p: f64,
    u: f64,
    #[serde(rename = "D")]
    d: f64,
    dt: f64,
    #[serde(rename = "S")]
    s: f64,
    window_start: Option<f64>,
    window_end: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CapacityOutput {
    scores: Vec<CapacityScore>,
    partition: DisjointPartition,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("ENDURQ_LOG", "error")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("endurq: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn load_config(path: &Path, seed: Option<u64>, migrate_reset: bool) -> Result<SimConfig> {
    let mut cfg = SimConfig::from_json_file(path)?;
    if migrate_reset {
        cfg.migrate_depth = MigrateDepth::Reset;
    }
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn read_trace(path: &Path) -> Result<EventTrace> {
    EventTrace::from_csv(BufReader::new(File::open(path)?))
}

fn read_metrics(path: &Path) -> Result<Vec<SystemMetrics>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(File::open(path)?));
    rdr.deserialize::<MetricsRow>()
        .map(|row| {
            let row = row?;
            Ok(SystemMetrics {
                system_id: row.system_id,
                throughput: row.p,
                utilization: row.u,
                service_demand: row.d,
                data_density: row.dt,
                service_time: row.s,
                window: Window::new(row.window_start.unwrap_or(0.0), row.window_end.unwrap_or(1.0))?,
            })
        })
        .collect()
}

fn need(flag: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::invalid(format!("--{flag}"), "required by this profile"))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            seed,
            migrate_reset,
            out,
            timeline_out,
            heatmap_out,
        } => {
            let cfg = load_config(&config, seed, migrate_reset)?;
            let report = run_simulation(&cfg)?;
            if let Some(path) = timeline_out {
                report.queue_stats.write_timeline_csv(File::create(path)?)?;
            }
            if let Some(path) = heatmap_out {
                std::fs::write(path, export_heatmap(&report.heatmap, ExportFormat::Csv))?;
            }
            write_output(out.as_deref(), &json_bytes(&report)?)
        }
        Command::Compare {
            config,
            seed,
            migrate_reset,
            out,
        } => {
            let cfg = load_config(&config, seed, migrate_reset)?;
            let cmp = compare_baseline(&cfg)?;
            log::info!(
                "drops: endurance {} vs fixed {}",
                cmp.endurance.dropped,
                cmp.fixed.dropped
            );
            write_output(out.as_deref(), &json_bytes(&cmp)?)
        }
        Command::Heatmap {
            trace,
            bucket_width,
            format,
            out,
        } => {
            let trace = read_trace(&trace)?;
            let mut systems: Vec<String> = trace.events.iter().map(|e| e.system_id.clone()).collect();
            systems.sort();
            systems.dedup();
            let hm = build_heatmap(&trace, bucket_width, &systems)?;
            let format = match format {
                Format::Csv => ExportFormat::Csv,
                Format::Ppm => ExportFormat::Ppm,
            };
            write_output(out.as_deref(), &export_heatmap(&hm, format))
        }
        Command::Capacity { metrics, k, out } => {
            let metrics = read_metrics(&metrics)?;
            let totals = aggregate_stack(&metrics)?;
            let scores = metrics
                .iter()
                .map(|m| compute_capacity(m, &totals))
                .collect::<Result<Vec<_>>>()?;
            let bytes = match k {
                Some(k) => {
                    let partition = partition_systems(&scores, k)?;
                    json_bytes(&CapacityOutput { scores, partition })?
                }
                None => json_bytes(&scores)?,
            };
            write_output(out.as_deref(), &bytes)
        }
        Command::Gn { demands, population } => {
            let g = normalizing_constant(&demands, population)?;
            let text: String = g.iter().map(|v| format!("{v:.9}\n")).collect();
            write_output(None, text.as_bytes())
        }
        Command::Ackermann {
            m,
            n,
            cap,
            trace,
            max_steps,
        } => {
            let mut text = String::new();
            if trace {
                let t = ackermann_trace(m, n, cap, max_steps);
                for step in &t.steps {
                    text.push_str(&format!("{step}\n"));
                }
                if t.truncated {
                    text.push_str("truncated\n");
                }
            }
            text.push_str(&format!("{}\n", ackermann(m, n, cap)));
            write_output(None, text.as_bytes())
        }
        Command::TraceGen {
            profile,
            rate,
            base_rate,
            burst_rate,
            burst_duration,
            period,
            gap,
            duration,
            seed,
            source,
            out,
        } => {
            let kind = match profile {
                Profile::Poisson => WorkloadKind::Poisson {
                    rate: need("rate", rate)?,
                },
                Profile::Bursty => WorkloadKind::Bursty {
                    base_rate: need("base-rate", base_rate)?,
                    burst_rate: need("burst-rate", burst_rate)?,
                    burst_duration: need("burst-duration", burst_duration)?,
                    period: need("period", period)?,
                },
                Profile::Sparse => WorkloadKind::Sparse {
                    rate: need("rate", rate)?,
                    gap,
                },
            };
            let profile = WorkloadProfile {
                source,
                ..WorkloadProfile::new(kind, duration, seed)
            };
            let trace = generate_workload(&profile)?;
            write_output(out.as_deref(), &trace.to_csv_bytes()?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_tree_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn parse_errors_exit_2() {
        assert_eq!(run(["endurq", "no-such-command"]), EXIT_INVALID);
        assert_eq!(
            run(["endurq", "gn", "--demands", "1", "--population", "x"]),
            EXIT_INVALID
        );
        assert_eq!(run(["endurq", "ackermann", "1"]), EXIT_INVALID);
    }

    #[test]
    fn negative_demand_exit_2() {
        assert_eq!(
            run(["endurq", "gn", "--demands", "-1", "--population", "2"]),
            EXIT_INVALID
        );
    }

    #[test]
    fn missing_config_exit_1() {
        assert_eq!(run(["endurq", "simulate", "/nonexistent/cfg.json"]), EXIT_IO);
    }
}

//! `telepovm` command line.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use num_complex::Complex64;

use super::config::{ExperimentConfig, PartialConfig, PayloadMode, XMode};
use super::{run_experiment, Experiment};
use crate::analysis::{conditional_success_probability, enumerate_all_branches, total_success_probability};
use crate::error::{Error, Result};
use crate::povm::{build_povm, derive_all_plans, min_valid_x, DistortionVector, PovmOutcome};
use crate::protocol::{Channel, Payload};

pub const SEED_ENV: &str = "TELEPOVM_SEED";

#[derive(Debug, Parser)]
#[command(name = "telepovm", version, about = "Probabilistic two-qubit teleportation via POVM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the POVM for a channel and check its invariants.
    Validate(ChannelArgs),
    /// Closed-form probabilities and the exact sixteen-branch table.
    Analyze {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Payload used for the branch table (default: uniform superposition).
        #[arg(long, value_parser = parse_payload, allow_hyphen_values = true)]
        payload: Option<[Complex64; 4]>,
    },
    /// One verbose trial with stage-by-stage state dumps.
    Run {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, value_parser = parse_payload, allow_hyphen_values = true)]
        payload: [Complex64; 4],
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial_id: u64,
    },
    /// Full Monte Carlo experiment; writes CSV records and a JSON summary.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// alpha,beta,gamma,delta (rescaled to unit norm).
    #[arg(long, value_parser = parse_channel, allow_hyphen_values = true)]
    channel: [f64; 4],
    /// POVM parameter x (default: smallest feasible value).
    #[arg(long)]
    x: Option<f64>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_channel, allow_hyphen_values = true)]
    channel: Option<[f64; 4]>,
    /// Fixed payload a,b,c,d (default: Haar-random per trial).
    #[arg(long, value_parser = parse_payload, allow_hyphen_values = true)]
    payload: Option<[Complex64; 4]>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record CSV path; the summary goes to `<stem>.summary.json`.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<[T; 4], String> {
    let items: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("cannot parse `{p}`")))
        .collect::<std::result::Result<_, _>>()?;
    items
        .try_into()
        .map_err(|v: Vec<T>| format!("expected 4 comma-separated values, got {}", v.len()))
}

fn parse_channel(s: &str) -> std::result::Result<[f64; 4], String> {
    parse_list(s)
}

fn parse_payload(s: &str) -> std::result::Result<[Complex64; 4], String> {
    parse_list(s)
}

fn channel_from(raw: [f64; 4], err: &mut dyn Write) -> Result<Channel> {
    let channel = Channel::normalized(raw)?;
    let drift = raw.iter().zip(channel.coefficients()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if drift > 1e-12 {
        let _ = writeln!(err, "note: channel rescaled to unit norm (max change {drift:.3e})");
    }
    Ok(channel)
}

fn payload_from(raw: [Complex64; 4], err: &mut dyn Write) -> Result<Payload> {
    let payload = Payload::normalized(raw)?;
    let drift = raw
        .iter()
        .zip(payload.coefficients())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if drift > 1e-12 {
        let _ = writeln!(err, "note: payload rescaled to unit norm (max change {drift:.3e})");
    }
    Ok(payload)
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer"))),
        Err(_) => Ok(None),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
                if !rendered.contains("Usage:") {
                    let _ = writeln!(err, "\n{}", Cli::command().render_usage());
                }
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Validate(args) => validate(args, out, err),
        Command::Analyze { channel, payload } => analyze(channel, payload, out, err),
        Command::Run {
            channel,
            payload,
            seed,
            trial_id,
        } => run(channel, payload, seed, trial_id, out, err),
        Command::Experiment(args) => experiment(args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn validate(args: ChannelArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let channel = channel_from(args.channel, err)?;
    let d = DistortionVector::from_channel(&channel);
    let x_min = min_valid_x(&d);
    let x = args.x.unwrap_or(x_min);
    writeln!(out, "channel = {}", d).ok();
    writeln!(out, "x_min = {x_min}").ok();
    writeln!(out, "x = {x}").ok();
    let set = match build_povm(&d, x) {
        Ok(set) => set,
        Err(e @ (Error::InfeasibleX { .. } | Error::XOutOfRange(_))) => {
            writeln!(out, "FAIL: {e}").ok();
            return Ok(1);
        }
        Err(e) => return Err(e),
    };
    let diag = set.diagnostics()?;
    writeln!(out, "completeness residual = {:.3e}", diag.completeness_residual).ok();
    writeln!(out, "min eigenvalue = {:.3e}", diag.min_eigenvalue()).ok();
    writeln!(out, "P5 min eigenvalue = {:.3e}", diag.min_eigenvalues[4]).ok();
    writeln!(out, "P1..P4 rank one = {:?}", diag.rank_one).ok();
    let plans = derive_all_plans(&channel)?;
    writeln!(out, "branch plans derived = {}", plans.len()).ok();
    if diag.passes() {
        writeln!(out, "PASS").ok();
        Ok(0)
    } else {
        writeln!(out, "FAIL").ok();
        Ok(1)
    }
}

fn analyze(args: ChannelArgs, payload: Option<[Complex64; 4]>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let channel = channel_from(args.channel, err)?;
    let payload = match payload {
        Some(raw) => payload_from(raw, err)?,
        None => Payload::from_real(0.5, 0.5, 0.5, 0.5)?,
    };
    let d = DistortionVector::from_channel(&channel);
    let x_min = min_valid_x(&d);
    let x = args.x.unwrap_or(x_min);
    writeln!(out, "channel = {d}").ok();
    writeln!(out, "S = {}", d.reciprocal_sum()).ok();
    writeln!(out, "x_min = {x_min}").ok();
    writeln!(out, "x = {x}").ok();
    writeln!(out, "per-branch success = {}", conditional_success_probability(&channel, x)?).ok();
    writeln!(out, "p = {}", total_success_probability(&channel, x)?).ok();

    let plans = derive_all_plans(&channel)?;
    let e = enumerate_all_branches(&payload, &channel, x)?;
    writeln!(out).ok();
    writeln!(
        out,
        "{:<6} {:<6} {:<8} {:<44} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>14}",
        "bell23", "bell14", "pre", "distortion", "p_bell", "P1", "P2", "P3", "P4", "P5", "p_success", "min_fidelity"
    )
    .ok();
    for (b, plan) in e.branches.iter().zip(&plans) {
        let min_fid = b.success_fidelities.iter().flatten().copied().reduce(f64::min);
        write!(
            out,
            "{:<6} {:<6} {:<8} {:<44} {:>10.6}",
            b.pair.pair23.as_str(),
            b.pair.pair14.as_str(),
            plan.pre_correction.to_string(),
            plan.distortion.to_string(),
            b.bell_probability
        )
        .ok();
        for o in PovmOutcome::all() {
            write!(out, " {:>10.6}", b.povm_probabilities[o.get() as usize - 1]).ok();
        }
        match min_fid {
            Some(f) => writeln!(out, " {:>10.6} {:>14.12}", b.success_probability, f).ok(),
            None => writeln!(out, " {:>10.6} {:>14}", b.success_probability, "-").ok(),
        };
    }
    writeln!(out, "total = {}", e.total).ok();
    Ok(0)
}

fn run(
    args: ChannelArgs,
    payload: [Complex64; 4],
    seed: Option<u64>,
    trial_id: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let channel = channel_from(args.channel, err)?;
    let payload = payload_from(payload, err)?;
    let seed = match seed {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(0),
    };
    let mut config = ExperimentConfig::new(&channel, 1, seed, "-").with_payload(&payload);
    if let Some(x) = args.x {
        config = config.with_x(x);
    }
    let experiment = Experiment::prepare(&config)?;
    writeln!(out, "seed = {seed}, trial_id = {trial_id}, x = {}", experiment.x()).ok();
    let record = experiment.run_trial_traced(trial_id, &mut |stage, text| {
        let _ = writeln!(out, "[{stage}] {text}");
    })?;
    writeln!(
        out,
        "result: povm_outcome = {}, success = {}, fidelity = {}",
        record.povm_outcome, record.success, record.fidelity
    )
    .ok();
    Ok(0)
}

fn experiment(args: ExperimentArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let file = match &args.config {
        Some(path) => PartialConfig::load(path)?,
        None => PartialConfig::default(),
    };
    let raw_channel = args
        .channel
        .or(file.channel)
        .ok_or_else(|| Error::Config("a channel is required (--channel or config file)".into()))?;
    let channel = channel_from(raw_channel, err)?;
    let payload_mode = match (args.payload, file.payload_mode) {
        (Some(raw), _) => PayloadMode::explicit(&payload_from(raw, err)?),
        (None, Some(PayloadMode::Explicit(raw))) => {
            PayloadMode::explicit(&payload_from(raw.map(|[re, im]| Complex64::new(re, im)), err)?)
        }
        (None, other) => other.unwrap_or(PayloadMode::RandomHaar),
    };
    let master_seed = match args.seed.or(file.master_seed) {
        Some(s) => s,
        None => seed_from_env()?.unwrap_or(0),
    };
    let config = ExperimentConfig {
        payload_mode,
        channel: channel.coefficients(),
        x_mode: args.x.map(XMode::Explicit).or(file.x_mode).unwrap_or(XMode::AutoMin),
        trials: args.trials.or(file.trials).unwrap_or(10_000),
        master_seed,
        output_path: args
            .output
            .or(file.output_path)
            .unwrap_or_else(|| PathBuf::from("records.csv")),
    };
    let summary = run_experiment(&config)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&summary).expect("summary serializes")).ok();
    writeln!(
        out,
        "records: {}, summary: {}",
        config.output_path.display(),
        config.summary_path().display()
    )
    .ok();
    writeln!(
        out,
        "{}: empirical p = {:.6}, analytic p = {:.6}, 3 sigma = {:.6}",
        summary.verdict, summary.empirical_p, summary.analytic_p, summary.three_sigma
    )
    .ok();
    Ok(0)
}

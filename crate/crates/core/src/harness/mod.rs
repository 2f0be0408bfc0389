//! Seeded Monte Carlo runs of the full protocol.
//!
//! Each trial owns its random stream. The stream for trial `t` is a
//! `ChaCha8Rng` seeded (via `SeedableRng::seed_from_u64`) with
//!
//! ```text
//! trial_seed(master, t) = splitmix64(master ^ splitmix64(t))
//! splitmix64(z):  z += 0x9E3779B97F4A7C15
//!                 z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                 z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                 return z ^ (z >> 31)          (all arithmetic mod 2^64)
//! ```
//!
//! so results depend only on `(master_seed, trial_id)`, never on trial order
//! or thread count.

pub mod cli;
pub mod config;
pub mod records;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{ExperimentConfig, PartialConfig, PayloadMode, XMode};
pub use records::{read_records, write_records, ExperimentSummary, TrialRecord, Verdict, INCONCLUSIVE_FIDELITY};

use crate::analysis::{fidelity, total_success_probability};
use crate::error::Result;
use crate::povm::{build_povm, derive_all_plans, min_valid_x, sample_povm, BranchPlan, DistortionVector, PostMeasurement, PovmSet};
use crate::protocol::{build_world_state, measure_bell_pairs, Channel, Payload, BOB_LABELS};

pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial_id: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial_id))
}

pub fn trial_rng(master_seed: u64, trial_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial_id))
}

/// A validated configuration with the branch plans and POVMs precomputed.
#[derive(Clone, Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    channel: Channel,
    payload: Option<Payload>,
    x: f64,
    plans: Vec<BranchPlan>,
    povms: Vec<PovmSet>,
}

impl Experiment {
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let channel = config.channel()?;
        let payload = config.payload_mode.payload()?;
        let x = match config.x_mode {
            XMode::AutoMin => min_valid_x(&DistortionVector::from_channel(&channel)),
            XMode::Explicit(x) => x,
        };
        let plans = derive_all_plans(&channel).map_err(|e| e.at_stage("derive_branch_plan"))?;
        let povms = plans
            .iter()
            .map(|p| build_povm(&p.distortion, x))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_stage("build_povm"))?;
        Ok(Self {
            config: config.clone(),
            channel,
            payload,
            x,
            plans,
            povms,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn plans(&self) -> &[BranchPlan] {
        &self.plans
    }

    pub fn analytic_p(&self) -> Result<f64> {
        total_success_probability(&self.channel, self.x)
    }

    pub fn run_trial(&self, trial_id: u64) -> Result<TrialRecord> {
        self.run_trial_traced(trial_id, &mut |_, _| {})
    }

    /// Runs one trial, reporting each intermediate state to `trace` as
    /// `(stage, description)`.
    pub fn run_trial_traced(&self, trial_id: u64, trace: &mut dyn FnMut(&'static str, String)) -> Result<TrialRecord> {
        let mut rng = trial_rng(self.config.master_seed, trial_id);
        let payload = match self.payload {
            Some(p) => p,
            None => Payload::random_haar(&mut rng),
        };
        let target = payload.to_state(BOB_LABELS);
        trace("payload", payload.to_state(["1", "2"]).to_string());

        let world = build_world_state(&payload, &self.channel).map_err(|e| e.at_stage("build_world_state"))?;
        trace("world", world.to_string());

        let (bell, collapsed) = measure_bell_pairs(&world, &mut rng).map_err(|e| e.at_stage("measure_bell_pairs"))?;
        trace(
            "bell_measurement",
            format!("{} with probability {:.12}", bell.pair, bell.probability),
        );
        trace("collapsed", collapsed.to_string());

        let plan = &self.plans[bell.pair.ordinal()];
        let povm = &self.povms[bell.pair.ordinal()];
        trace(
            "branch_plan",
            format!("pre-correction {}, distortion {}", plan.pre_correction, plan.distortion),
        );
        let register = plan.prepare_register(&collapsed).map_err(|e| e.at_stage("bob_stage"))?;
        trace("register", register.to_string());

        let result = sample_povm(&register, povm, &mut rng).map_err(|e| e.at_stage("sample_povm"))?;
        trace(
            "povm",
            format!("{} with probability {:.12}", result.outcome, result.probability),
        );

        let (success, fid) = match &result.post_state {
            PostMeasurement::Conclusive(post) => {
                let recovered = plan
                    .recover(result.outcome, post)
                    .map_err(|e| e.at_stage("success_correction"))?;
                trace(
                    "recovered",
                    format!("{recovered} after {}", plan.post_correction(result.outcome)?),
                );
                (true, fidelity(&recovered, &target).map_err(|e| e.at_stage("fidelity"))?)
            }
            PostMeasurement::Inconclusive(post) => {
                trace("inconclusive", post.to_string());
                (false, INCONCLUSIVE_FIDELITY)
            }
        };
        Ok(TrialRecord {
            trial_id,
            bell23: bell.pair.pair23,
            bell14: bell.pair.pair14,
            povm_outcome: result.outcome.get(),
            success,
            fidelity: fid,
        })
    }

    /// All trials in `trial_id` order (computed in parallel).
    pub fn run_trials(&self) -> Result<Vec<TrialRecord>> {
        (0..self.config.trials)
            .into_par_iter()
            .map(|id| self.run_trial(id))
            .collect()
    }

    pub fn summarize(&self, records: &[TrialRecord]) -> Result<ExperimentSummary> {
        Ok(ExperimentSummary::from_records(
            records,
            self.analytic_p()?,
            self.x,
            self.config.master_seed,
        ))
    }
}

/// One trial of `config`, fully determined by `(master_seed, trial_id)`.
pub fn run_trial(config: &ExperimentConfig, trial_id: u64) -> Result<TrialRecord> {
    Experiment::prepare(config)?.run_trial(trial_id)
}

/// Runs every trial, writes the CSV records to `output_path` and the JSON
/// summary next to it (see [`ExperimentConfig::summary_path`]).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let experiment = Experiment::prepare(config)?;
    let records = experiment.run_trials()?;
    write_records(&config.output_path, &records)?;
    let summary = experiment.summarize(&records)?;
    summary.write_json(&config.summary_path())?;
    Ok(summary)
}

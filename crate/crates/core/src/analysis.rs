//! Closed-form success probabilities, fidelity, and an exact enumeration of
//! every Bell branch and POVM outcome that serves as the sampling-free oracle.

use crate::error::{Error, Result};
use crate::povm::{
    build_povm, check_x, conclusive_branch, derive_all_plans, povm_probabilities, DistortionVector, PovmOutcome,
};
use crate::protocol::{bell_branches, build_world_state, BellPair, Channel, Payload, BOB_LABELS};
use crate::statevec::StateVector;

/// `|<psi|phi>|^2`. Insensitive to global phase; both states must carry the
/// same labels in the same order.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    if psi.labels() != phi.labels() {
        return Err(Error::LabelError(format!(
            "fidelity between states on {:?} and {:?}",
            psi.labels(),
            phi.labels()
        )));
    }
    Ok(psi.inner(phi)?.norm_sqr())
}

/// Probability that Alice obtains one given Bell outcome *and* Bob's POVM is
/// conclusive: `1 / (x S)` with `S = 1/alpha^2 + 1/beta^2 + 1/gamma^2 +
/// 1/delta^2`. It depends on neither the payload nor the Bell outcome.
pub fn conditional_success_probability(channel: &Channel, x: f64) -> Result<f64> {
    let d = DistortionVector::from_channel(channel);
    check_x(&d, x)?;
    Ok(1.0 / (x * d.reciprocal_sum()))
}

/// Overall success probability `16 / (x S)`; at `x = x_min` this is
/// `4 min(alpha^2, beta^2, gamma^2, delta^2)`.
pub fn total_success_probability(channel: &Channel, x: f64) -> Result<f64> {
    Ok(16.0 * conditional_success_probability(channel, x)?)
}

#[derive(Clone, Debug)]
pub struct BranchReport {
    pub pair: BellPair,
    pub bell_probability: f64,
    /// POVM outcome probabilities given this Bell outcome (all zero for a
    /// null branch).
    pub povm_probabilities: [f64; 5],
    /// `bell_probability * (p_1 + p_2 + p_3 + p_4)`.
    pub success_probability: f64,
    /// Fidelity of the corrected state with the payload for outcomes 1..4;
    /// `None` for null branches or vanishing POVM outcomes.
    pub success_fidelities: [Option<f64>; 4],
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub x: f64,
    pub branches: Vec<BranchReport>,
    pub total: f64,
}

impl Enumeration {
    pub fn min_success_fidelity(&self) -> Option<f64> {
        self.branches
            .iter()
            .flat_map(|b| b.success_fidelities.iter().flatten().copied())
            .reduce(f64::min)
    }

    pub fn bell_probability_sum(&self) -> f64 {
        self.branches.iter().map(|b| b.bell_probability).sum()
    }
}

/// Walks all sixteen Bell outcomes (in [`BellPair::all`] order) and every
/// POVM outcome exactly, without sampling.
pub fn enumerate_all_branches(payload: &Payload, channel: &Channel, x: f64) -> Result<Enumeration> {
    check_x(&DistortionVector::from_channel(channel), x)?;
    let plans = derive_all_plans(channel)?;
    let target = payload.to_state(BOB_LABELS);
    let world = build_world_state(payload, channel)?;

    let mut branches = Vec::with_capacity(16);
    for ((pair, projection), plan) in bell_branches(&world)?.into_iter().zip(&plans) {
        debug_assert_eq!(pair, plan.pair);
        if projection.null {
            branches.push(BranchReport {
                pair,
                bell_probability: projection.probability,
                povm_probabilities: [0.0; 5],
                success_probability: 0.0,
                success_fidelities: [None; 4],
            });
            continue;
        }
        let set = build_povm(&plan.distortion, x)?;
        let register = plan.prepare_register(&projection.conditional()?)?;
        let povm_probabilities = povm_probabilities(&register, &set)?;
        let mut success_fidelities = [None; 4];
        for outcome in PovmOutcome::conclusive() {
            let branch = conclusive_branch(&register, &set, outcome)?;
            if branch.null {
                continue;
            }
            let recovered = plan.recover(outcome, &branch.conditional()?)?;
            success_fidelities[outcome.get() as usize - 1] = Some(fidelity(&recovered, &target)?);
        }
        let conclusive: f64 = povm_probabilities[..4].iter().sum();
        branches.push(BranchReport {
            pair,
            bell_probability: projection.probability,
            povm_probabilities,
            success_probability: projection.probability * conclusive,
            success_fidelities,
        });
    }
    let total = branches.iter().map(|b| b.success_probability).sum();
    Ok(Enumeration { x, branches, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::min_valid_x;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example_channel() -> Channel {
        Channel::new(0.7, 0.5, 0.4, 0.1f64.sqrt()).unwrap()
    }

    #[test]
    fn fidelity_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = Payload::random_haar(&mut rng).to_state(BOB_LABELS);
        assert!((fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-12);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let rotated = psi.scale(Complex64::from_polar(1.0, theta));
        assert!((fidelity(&psi, &rotated).unwrap() - 1.0).abs() < 1e-12);
        let e00 = StateVector::basis(BOB_LABELS, 0).unwrap();
        let e01 = StateVector::basis(BOB_LABELS, 1).unwrap();
        assert_eq!(fidelity(&e00, &e01).unwrap(), 0.0);
        let other = StateVector::basis(["1", "2"], 0).unwrap();
        assert!(matches!(fidelity(&e00, &other), Err(Error::LabelError(_))));
    }

    #[test]
    fn closed_form_probabilities() {
        let max = Channel::maximally_entangled();
        assert!((conditional_success_probability(&max, 1.0).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!((total_success_probability(&max, 1.0).unwrap() - 1.0).abs() < 1e-15);

        let ch = example_channel();
        let x_min = min_valid_x(&DistortionVector::from_channel(&ch));
        assert!((conditional_success_probability(&ch, x_min).unwrap() - 0.025).abs() < 1e-12);
        assert!((total_success_probability(&ch, x_min).unwrap() - 0.4).abs() < 1e-12);

        let doubled = (2.0 * x_min).min(4.0);
        let ratio = total_success_probability(&ch, x_min).unwrap() / total_success_probability(&ch, doubled).unwrap();
        assert!((ratio - doubled / x_min).abs() < 1e-12);

        assert!(matches!(total_success_probability(&ch, 1.0), Err(Error::InfeasibleX { .. })));
    }

    #[test]
    fn maximal_channel_enumeration_is_deterministic_teleportation() {
        let payload = Payload::random_haar(&mut ChaCha8Rng::seed_from_u64(1));
        let e = enumerate_all_branches(&payload, &Channel::maximally_entangled(), 1.0).unwrap();
        assert!((e.total - 1.0).abs() < 1e-12);
        for b in &e.branches {
            assert!((b.success_probability - b.bell_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_matches_closed_form_and_is_payload_free() {
        let ch = example_channel();
        let x = min_valid_x(&DistortionVector::from_channel(&ch));
        for payload in [
            Payload::from_real(1.0, 0.0, 0.0, 0.0).unwrap(),
            Payload::from_real(0.5, 0.5, 0.5, 0.5).unwrap(),
        ] {
            let e = enumerate_all_branches(&payload, &ch, x).unwrap();
            assert!((e.total - 0.4).abs() < 1e-10);
            for b in &e.branches {
                assert!((b.success_probability - 0.025).abs() < 1e-10);
                assert!((b.povm_probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
            assert!(e.min_success_fidelity().unwrap() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn enumeration_order_is_pair23_major() {
        let payload = Payload::from_real(0.5, 0.5, 0.5, 0.5).unwrap();
        let e = enumerate_all_branches(&payload, &Channel::maximally_entangled(), 1.0).unwrap();
        let order: Vec<BellPair> = e.branches.iter().map(|b| b.pair).collect();
        assert_eq!(order, BellPair::all().collect::<Vec<_>>());
    }
}

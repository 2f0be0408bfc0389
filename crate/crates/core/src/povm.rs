//! Bob's unambiguous-discrimination POVM on the ancillas and the correction
//! plans for all sixteen Bell outcomes.
//!
//! After the CNOTs the register `5,6,a,b` is
//! `sum_k payload_k d_k |k>|k>`, which regroups as `1/4 sum_i (sum_k s_i(k)
//! payload_k |k>) (x) (sum_k s_i(k) d_k |k>)` with the sign patterns `s_i` of
//! [`SIGN_PATTERNS`]. The ancilla states `|phi_i> ~ sum_k s_i(k)/d_k |k>` are
//! orthogonal to every ancilla factor except the `i`-th, so the rank-one
//! elements `P_i = |phi_i><phi_i| / x` identify the sign pattern without error.
//! `P_5 = I - sum P_i` is the inconclusive element and is diagonal.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::protocol::{
    apply_cnots, attach_ancilla, build_world_state, collapsed_terms, project_bell_pair, BellPair, Channel, Payload,
    ANCILLA_LABELS, BOB_LABELS, BOB_REGISTER_LABELS, MIN_CHANNEL_COEFFICIENT,
};
use crate::statevec::{sample_index, Operator, Projection, StateVector, NORM_TOL};

/// Completeness and positivity tolerance for a validated POVM.
pub const POVM_TOL: f64 = 1e-10;

/// Upper end of the admissible range of `x`.
pub const X_MAX: f64 = 4.0;

/// Sign patterns over `|00>,|01>,|10>,|11>` for outcomes 1..4.
pub const SIGN_PATTERNS: [[f64; 4]; 4] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// Per-basis coefficients multiplying the payload amplitudes in a collapsed
/// state (after the branch's pre-correction).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionVector([f64; 4]);

impl DistortionVector {
    pub fn new(components: [f64; 4]) -> Result<Self> {
        if let Some(v) = components.iter().find(|v| !v.is_finite() || v.abs() < MIN_CHANNEL_COEFFICIENT) {
            return Err(Error::InvalidChannel(format!(
                "distortion component {v} (each needs |.| >= {MIN_CHANNEL_COEFFICIENT})"
            )));
        }
        Ok(Self(components))
    }

    pub fn from_channel(channel: &Channel) -> Self {
        Self(channel.coefficients())
    }

    pub fn components(&self) -> [f64; 4] {
        self.0
    }

    /// `S = sum_k 1/d_k^2`.
    pub fn reciprocal_sum(&self) -> f64 {
        self.0.iter().map(|d| 1.0 / (d * d)).sum()
    }
}

impl fmt::Display for DistortionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a:.6}, {b:.6}, {c:.6}, {d:.6})")
    }
}

/// Smallest `x` for which every diagonal entry of `P_5` is nonnegative:
/// `4 max_k(1/d_k^2) / S`. Always in `[1, 4]`.
pub fn min_valid_x(d: &DistortionVector) -> f64 {
    let largest = d.0.iter().map(|v| 1.0 / (v * v)).fold(0.0, f64::max);
    4.0 * largest / d.reciprocal_sum()
}

/// Checks that `x` lies in `[x_min, 4]` (relative slack of `1e-12` at the
/// lower end so that `x_min` itself is always accepted).
pub fn check_x(d: &DistortionVector, x: f64) -> Result<()> {
    let x_min = min_valid_x(d);
    if !x.is_finite() || x < x_min * (1.0 - 1e-12) {
        return Err(Error::InfeasibleX { x, x_min });
    }
    if x > X_MAX * (1.0 + 1e-12) {
        return Err(Error::XOutOfRange(x));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PovmSet {
    elements: [Operator; 5],
    ancilla_states: [StateVector; 4],
    x: f64,
    source: DistortionVector,
}

/// Numerical health of a POVM.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmDiagnostics {
    /// `max |sum_i P_i - I|` over entries.
    pub completeness_residual: f64,
    /// Smallest eigenvalue of each element.
    pub min_eigenvalues: [f64; 5],
    /// Whether each of `P_1..P_4` has three eigenvalues below `POVM_TOL`.
    pub rank_one: [bool; 4],
    pub max_hermitian_residual: f64,
}

impl PovmDiagnostics {
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self) -> bool {
        self.completeness_residual <= POVM_TOL
            && self.min_eigenvalue() >= -POVM_TOL
            && self.rank_one.iter().all(|&r| r)
            && self.max_hermitian_residual <= NORM_TOL
    }
}

pub fn build_povm(d: &DistortionVector, x: f64) -> Result<PovmSet> {
    check_x(d, x)?;
    let norm = d.reciprocal_sum().sqrt();
    let ancilla_states: [StateVector; 4] = std::array::from_fn(|i| {
        let amps = (0..4)
            .map(|k| Complex64::new(SIGN_PATTERNS[i][k] / (d.0[k] * norm), 0.0))
            .collect();
        StateVector::new(ANCILLA_LABELS, amps).expect("two labels")
    });
    let mut elements: Vec<Operator> = Vec::with_capacity(5);
    for phi in &ancilla_states {
        elements.push(Operator::outer(phi.amplitudes())?.scale(1.0 / x));
    }
    let mut p5 = Operator::identity(4);
    for p in &elements {
        p5 = p5.sub(p)?;
    }
    elements.push(p5);
    let set = PovmSet {
        elements: elements.try_into().expect("five elements"),
        ancilla_states,
        x,
        source: *d,
    };
    let diag = set.diagnostics()?;
    if !diag.passes() {
        return Err(Error::NumericalError(format!("POVM failed validation: {diag:?}")));
    }
    Ok(set)
}

impl PovmSet {
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn source(&self) -> &DistortionVector {
        &self.source
    }

    pub fn elements(&self) -> &[Operator; 5] {
        &self.elements
    }

    /// `P_i` for `i` in `1..=5`.
    pub fn element(&self, outcome: PovmOutcome) -> &Operator {
        &self.elements[outcome.index()]
    }

    /// Normalized ancilla state `|phi_i>` behind `P_i`, `i` in `1..=4`.
    pub fn ancilla_state(&self, outcome: PovmOutcome) -> Result<&StateVector> {
        if !outcome.is_conclusive() {
            return Err(Error::NotApplicable(outcome.get()));
        }
        Ok(&self.ancilla_states[outcome.index()])
    }

    pub fn diagnostics(&self) -> Result<PovmDiagnostics> {
        let mut sum = Operator::zeros(4);
        for p in &self.elements {
            sum = sum.add(p)?;
        }
        let completeness_residual = sum.max_abs_diff(&Operator::identity(4))?;
        let mut min_eigenvalues = [0.0; 5];
        let mut rank_one = [false; 4];
        for (i, p) in self.elements.iter().enumerate() {
            let values = p.eigh()?.values;
            min_eigenvalues[i] = values[0];
            if i < 4 {
                rank_one[i] = values.iter().filter(|v| v.abs() < POVM_TOL).count() == 3;
            }
        }
        let max_hermitian_residual = self.elements.iter().map(Operator::hermitian_residual).fold(0.0, f64::max);
        Ok(PovmDiagnostics {
            completeness_residual,
            min_eigenvalues,
            rank_one,
            max_hermitian_residual,
        })
    }
}

/// POVM outcome label, `1..=4` conclusive, `5` inconclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PovmOutcome(u8);

impl PovmOutcome {
    pub const INCONCLUSIVE: PovmOutcome = PovmOutcome(5);

    pub fn new(value: u8) -> Result<Self> {
        if (1..=5).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::NotApplicable(value))
        }
    }

    pub fn all() -> impl Iterator<Item = PovmOutcome> {
        (1..=5).map(PovmOutcome)
    }

    pub fn conclusive() -> impl Iterator<Item = PovmOutcome> {
        (1..=4).map(PovmOutcome)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn is_conclusive(self) -> bool {
        self.0 <= 4
    }
}

impl fmt::Display for PovmOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Post-measurement state of a POVM run.
#[derive(Clone, Debug)]
pub enum PostMeasurement {
    /// Normalized state of `5,6` after projecting the ancillas on `|phi_i>`.
    Conclusive(StateVector),
    /// Normalized `5,6,a,b` state after the Kraus operator `sqrt(P_5)`; Bob
    /// learns nothing and discards it.
    Inconclusive(StateVector),
}

#[derive(Clone, Debug)]
pub struct PovmResult {
    pub outcome: PovmOutcome,
    pub probability: f64,
    pub post_state: PostMeasurement,
}

fn require_register(state: &StateVector) -> Result<()> {
    if !state.labels().iter().map(String::as_str).eq(BOB_REGISTER_LABELS) {
        return Err(Error::LabelError(format!(
            "POVM register must be {BOB_REGISTER_LABELS:?}, got {:?}",
            state.labels()
        )));
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NumericalError(format!("POVM input has squared norm {norm}")));
    }
    Ok(())
}

/// Born probabilities `<state| I_56 (x) P_i |state>` for `i = 1..5`.
pub fn povm_probabilities(state: &StateVector, set: &PovmSet) -> Result<[f64; 5]> {
    require_register(state)?;
    let mut out = [0.0; 5];
    for (slot, p) in out.iter_mut().zip(&set.elements) {
        *slot = state.expectation(p, &ANCILLA_LABELS)?;
    }
    Ok(out)
}

/// Unnormalized `5,6` residual of a conclusive outcome, with its probability
/// (`|<phi_i|..>|^2 / x`).
pub fn conclusive_branch(state: &StateVector, set: &PovmSet, outcome: PovmOutcome) -> Result<Projection> {
    require_register(state)?;
    let mut proj = state.project(set.ancilla_state(outcome)?)?;
    proj.probability /= set.x;
    Ok(proj)
}

pub fn sample_povm<R: Rng + ?Sized>(state: &StateVector, set: &PovmSet, rng: &mut R) -> Result<PovmResult> {
    let probabilities = povm_probabilities(state, set)?;
    let outcome = PovmOutcome(sample_index(&probabilities, rng)? as u8 + 1);
    let post_state = if outcome.is_conclusive() {
        PostMeasurement::Conclusive(state.project(set.ancilla_state(outcome)?)?.conditional()?)
    } else {
        let kraus = set.element(outcome).sqrt_psd()?;
        PostMeasurement::Inconclusive(state.apply_gate(&kraus, &ANCILLA_LABELS)?.normalize()?)
    };
    Ok(PovmResult {
        outcome,
        probability: probabilities[outcome.index()],
        post_state,
    })
}

/// Single-qubit Pauli correction; `XZ` applies X first, then Z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Z,
    XZ,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ];

    pub fn operator(self) -> Operator {
        match self {
            Pauli::I => Operator::identity(2),
            Pauli::X => Operator::pauli_x(),
            Pauli::Z => Operator::pauli_z(),
            Pauli::XZ => Operator::pauli_z().matmul(&Operator::pauli_x()).expect("2x2"),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Z => "Z",
            Pauli::XZ => "ZX",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliCorrection {
    pub on5: Pauli,
    pub on6: Pauli,
}

impl PauliCorrection {
    pub const IDENTITY: PauliCorrection = PauliCorrection::new(Pauli::I, Pauli::I);

    pub const fn new(on5: Pauli, on6: Pauli) -> Self {
        Self { on5, on6 }
    }

    /// The sixteen pairs, `on5` major.
    pub fn all() -> impl Iterator<Item = PauliCorrection> {
        Pauli::ALL
            .into_iter()
            .flat_map(|p5| Pauli::ALL.into_iter().map(move |p6| PauliCorrection::new(p5, p6)))
    }

    /// 4x4 operator on `(5, 6)`.
    pub fn operator(&self) -> Operator {
        self.on5.operator().kron(&self.on6.operator())
    }

    /// Applies the correction to qubits `5,6` of any state that carries them.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if *self == Self::IDENTITY {
            return Ok(state.clone());
        }
        state.apply_gate(&self.operator(), &BOB_LABELS)
    }
}

impl fmt::Display for PauliCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(x){}", self.on5, self.on6)
    }
}

/// Correction that maps the post-measurement state of a conclusive outcome
/// back to the payload.
pub fn success_correction(outcome: PovmOutcome) -> Result<PauliCorrection> {
    use Pauli::{I, Z};
    match outcome.get() {
        1 => Ok(PauliCorrection::new(I, I)),
        2 => Ok(PauliCorrection::new(Z, I)),
        3 => Ok(PauliCorrection::new(I, Z)),
        4 => Ok(PauliCorrection::new(Z, Z)),
        other => Err(Error::NotApplicable(other)),
    }
}

/// How Bob handles one Bell outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchPlan {
    pub pair: BellPair,
    /// Applied to `5,6` before the ancillas are attached.
    pub pre_correction: PauliCorrection,
    pub distortion: DistortionVector,
    /// Corrections for POVM outcomes 1..4, in order.
    pub post_corrections: [PauliCorrection; 4],
}

impl BranchPlan {
    pub fn post_correction(&self, outcome: PovmOutcome) -> Result<PauliCorrection> {
        if !outcome.is_conclusive() {
            return Err(Error::NotApplicable(outcome.get()));
        }
        Ok(self.post_corrections[outcome.index()])
    }

    /// Pre-correction, ancilla attachment and CNOTs: the register the POVM
    /// acts on.
    pub fn prepare_register(&self, collapsed56: &StateVector) -> Result<StateVector> {
        apply_cnots(&attach_ancilla(&self.pre_correction.apply(collapsed56)?)?)
    }

    /// Final correction of a conclusive post-measurement state of `5,6`.
    pub fn recover(&self, outcome: PovmOutcome, post56: &StateVector) -> Result<StateVector> {
        self.post_correction(outcome)?.apply(post56)
    }
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in (0..4).filter(|&b| b != a) {
            for c in (0..4).filter(|&c| c != a && c != b) {
                out.push([a, b, c, 6 - a - b - c]);
            }
        }
    }
    out
}

/// Real 4x4 matrix sending payload amplitudes to the (unnormalized, factor
/// 1/2 dropped) collapsed state of `5,6`.
fn collapse_matrix(pair: BellPair, channel: &Channel) -> [[f64; 4]; 4] {
    let coeffs = channel.coefficients();
    let mut m = [[0.0; 4]; 4];
    for (k, term) in collapsed_terms(pair).iter().enumerate() {
        m[term.basis][k] = if term.negative { -1.0 } else { 1.0 } * coeffs[term.coefficient];
    }
    m
}

const PLAN_TOL: f64 = 1e-12;
const PLAN_VALIDATION_PAYLOADS: usize = 5;
const NEVER_WRONG_TOL: f64 = 1e-10;

/// Finds the pre-correction and distortion vector that reduce a Bell outcome
/// to the canonical form `sum_k payload_k d_k |k>`.
///
/// Every pre-correction Pauli pair is tried against every permutation of the
/// channel coefficients with every sign assignment; the match with the fewest
/// sign flips wins (ties broken by Pauli order). The plan is then executed
/// end to end, through direct projection of the six-qubit state, on a few
/// random payloads and rejected unless each conclusive outcome recovers the
/// payload with fidelity `1 - 1e-10`.
pub fn derive_branch_plan(pair: BellPair, channel: &Channel) -> Result<BranchPlan> {
    let m = collapse_matrix(pair, channel);
    let coeffs = channel.coefficients();
    let perms = permutations4();

    let mut best: Option<(u32, PauliCorrection, [f64; 4])> = None;
    for correction in PauliCorrection::all() {
        let op = correction.operator();
        let mut pm = [[0.0; 4]; 4];
        for (i, row) in pm.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = (0..4).map(|k| op.get(i, k).re * m[k][j]).sum();
            }
        }
        let diagonal = (0..4).all(|i| (0..4).all(|j| i == j || pm[i][j].abs() < PLAN_TOL));
        if !diagonal {
            continue;
        }
        let d = [pm[0][0], pm[1][1], pm[2][2], pm[3][3]];
        for perm in &perms {
            for signs in 0u32..16 {
                let matches = (0..4).all(|k| {
                    let s = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                    (d[k] - s * coeffs[perm[k]]).abs() < PLAN_TOL
                });
                if matches && best.as_ref().is_none_or(|(flips, _, _)| signs.count_ones() < *flips) {
                    best = Some((signs.count_ones(), correction, d));
                }
            }
        }
    }

    let (_, pre_correction, d) = best.ok_or_else(|| Error::DerivationFailure(pair.to_string()))?;
    let plan = BranchPlan {
        pair,
        pre_correction,
        distortion: DistortionVector::new(d)?,
        post_corrections: std::array::from_fn(|i| {
            success_correction(PovmOutcome(i as u8 + 1)).expect("conclusive outcome")
        }),
    };
    validate_plan(&plan, channel)?;
    Ok(plan)
}

/// Sixteen plans in [`BellPair::all`] order.
pub fn derive_all_plans(channel: &Channel) -> Result<Vec<BranchPlan>> {
    BellPair::all().map(|pair| derive_branch_plan(pair, channel)).collect()
}

fn validate_plan(plan: &BranchPlan, channel: &Channel) -> Result<()> {
    let set = build_povm(&plan.distortion, min_valid_x(&plan.distortion))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x706c_616e_0000 + plan.pair.ordinal() as u64);
    let fail = |why: String| Error::DerivationFailure(format!("{}: {why}", plan.pair));
    for _ in 0..PLAN_VALIDATION_PAYLOADS {
        let payload = Payload::random_haar(&mut rng);
        let target = payload.to_state([BOB_LABELS[0], BOB_LABELS[1]]);
        let world = build_world_state(&payload, channel)?;
        let collapsed = project_bell_pair(&world, plan.pair)?.conditional()?;
        let register = plan.prepare_register(&collapsed)?;
        for outcome in PovmOutcome::conclusive() {
            let branch = conclusive_branch(&register, &set, outcome)?;
            let recovered = plan.recover(outcome, &branch.conditional()?)?;
            let fidelity = recovered.inner(&target)?.norm_sqr();
            if fidelity < 1.0 - NEVER_WRONG_TOL {
                return Err(fail(format!("{outcome} recovers with fidelity {fidelity}")));
            }
        }
    }
    Ok(())
}

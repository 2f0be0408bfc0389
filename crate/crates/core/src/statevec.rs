//! Dense statevectors over labelled qubits and small dense operators.
//!
//! Amplitude indices are big-endian in the label list: the first label is the
//! most significant bit, so `|0110>` on labels `3,4,5,6` is index `0b0110`.
//! Every operation returns a new value; nothing here mutates in place.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Norm tolerance used when an input is required to be normalized.
pub const NORM_TOL: f64 = 1e-12;

/// Residual probability below which a projection is reported as a null branch.
pub const NULL_PROBABILITY: f64 = 1e-24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_finite(values: &[Complex64], what: &str) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalError(format!("{what} contains NaN or Inf")))
    }
}

/// A square matrix whose dimension is a power of two, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Operator {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::ShapeError(format!("operator dimension {dim} is not a power of two")));
        }
        if entries.len() != dim * dim {
            return Err(Error::ShapeError(format!(
                "operator of dimension {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        check_finite(&entries, "operator")?;
        Ok(Self { dim, entries })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim.is_power_of_two(), "operator dimension must be a power of two");
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut op = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            op.entries[i * op.dim + i] = Complex64::new(v, 0.0);
        }
        op
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).expect("static shape")
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, &[1.0, 0.0, 0.0, -1.0]).expect("static shape")
    }

    /// CNOT with the first target label as control and the second as target.
    pub fn cnot() -> Self {
        #[rustfmt::skip]
        let m = [
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        Self::from_real(4, &m).expect("static shape")
    }

    /// `|v><v|` for an arbitrary (not necessarily normalized) vector.
    pub fn outer(v: &[Complex64]) -> Result<Self> {
        let dim = v.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for vi in v {
            for vj in v {
                entries.push(vi * vj.conj());
            }
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::ShapeError(format!("matmul of {} x {} operators", self.dim, rhs.dim)));
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product; `self` acts on the more significant qubits.
    pub fn kron(&self, rhs: &Operator) -> Self {
        let n = self.dim * rhs.dim;
        let mut out = Self::zeros(n);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        out.set(i * rhs.dim + k, j * rhs.dim + l, a * rhs.get(k, l));
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                self.entries[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn zip_with(&self, rhs: &Operator, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::ShapeError(format!("{} x {} operand dimensions", self.dim, rhs.dim)));
        }
        Ok(Self {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, rhs: &Operator) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &Operator) -> Result<f64> {
        Ok(self.sub(rhs)?.max_abs())
    }

    /// `max |A_ij - conj(A_ji)|`.
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self.get(i, j);
                    if z.im.abs() < 1e-15 {
                        format!("{:>10.6}", z.re)
                    } else {
                        format!("{:.6}{:+.6}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Dense amplitudes over an ordered list of distinct qubit labels.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    labels: Vec<String>,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new<L, S>(labels: L, amps: Vec<Complex64>) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::LabelError(format!("duplicate label `{l}`")));
            }
        }
        if amps.len() != 1usize << labels.len() {
            return Err(Error::ShapeError(format!(
                "{} labels need {} amplitudes, got {}",
                labels.len(),
                1usize << labels.len(),
                amps.len()
            )));
        }
        check_finite(&amps, "state")?;
        Ok(Self { labels, amps })
    }

    pub fn from_real<L, S>(labels: L, amps: &[f64]) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(labels, amps.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Computational basis state `|index>`.
    pub fn basis<L, S>(labels: L, index: usize) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let len = 1usize << labels.len();
        if index >= len {
            return Err(Error::ShapeError(format!("basis index {index} out of range for {len} amplitudes")));
        }
        let mut amps = vec![ZERO; len];
        amps[index] = ONE;
        Self::new(labels, amps)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::LabelError(format!("unknown label `{label}` (have {:?})", self.labels)))
    }

    /// Bit offset of a label inside an amplitude index.
    fn bit_of(&self, label: &str) -> Result<usize> {
        Ok(self.labels.len() - 1 - self.position(label)?)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n < NULL_PROBABILITY {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        Ok(Self {
            labels: self.labels.clone(),
            amps: self.amps.iter().map(|a| a * s).collect(),
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            labels: self.labels.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// `<self|other>`; both states must carry the same labels in the same order.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.labels != other.labels {
            return Err(Error::LabelError(format!(
                "inner product over {:?} and {:?}",
                self.labels, other.labels
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn tensor(&self, right: &StateVector) -> Result<Self> {
        if let Some(dup) = right.labels.iter().find(|l| self.labels.contains(l)) {
            return Err(Error::LabelCollision(dup.clone()));
        }
        let mut amps = Vec::with_capacity(self.amps.len() * right.amps.len());
        for a in &self.amps {
            for b in &right.amps {
                amps.push(a * b);
            }
        }
        let labels = self.labels.iter().chain(&right.labels).cloned().collect();
        Ok(Self { labels, amps })
    }

    /// Applies `gate` to the listed qubits (first target = most significant
    /// qubit of the gate), identity elsewhere.
    pub fn apply_gate(&self, gate: &Operator, targets: &[&str]) -> Result<Self> {
        if gate.dim() != 1usize << targets.len() {
            return Err(Error::ShapeError(format!(
                "gate of dimension {} applied to {} targets",
                gate.dim(),
                targets.len()
            )));
        }
        let bits = self.target_bits(targets)?;
        let mask: usize = bits.iter().map(|b| 1usize << b).sum();
        let k = bits.len();
        let spread = |g: usize| -> usize {
            (0..k)
                .filter(|t| g >> (k - 1 - t) & 1 == 1)
                .map(|t| 1usize << bits[t])
                .sum()
        };
        let offsets: Vec<usize> = (0..gate.dim()).map(spread).collect();

        let mut out = vec![ZERO; self.amps.len()];
        let mut local = vec![ZERO; gate.dim()];
        for base in (0..self.amps.len()).filter(|i| i & mask == 0) {
            for (slot, off) in local.iter_mut().zip(&offsets) {
                *slot = self.amps[base | off];
            }
            for (v, off) in gate.apply(&local).into_iter().zip(&offsets) {
                out[base | off] = v;
            }
        }
        Ok(Self {
            labels: self.labels.clone(),
            amps: out,
        })
    }

    fn target_bits(&self, targets: &[&str]) -> Result<Vec<usize>> {
        let mut bits = Vec::with_capacity(targets.len());
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(Error::LabelError(format!("target `{t}` listed twice")));
            }
            bits.push(self.bit_of(t)?);
        }
        Ok(bits)
    }

    /// Contracts `<basis_vector|` on the basis vector's labels. The residual is
    /// left unnormalized; its squared norm is the outcome probability.
    pub fn project(&self, basis_vector: &StateVector) -> Result<Projection> {
        let norm = basis_vector.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NumericalError(format!(
                "projection basis vector has squared norm {norm}"
            )));
        }
        let on_bits = self.target_bits(&basis_vector.labels.iter().map(String::as_str).collect::<Vec<_>>())?;
        let rest_labels: Vec<String> = self
            .labels
            .iter()
            .filter(|l| !basis_vector.labels.contains(l))
            .cloned()
            .collect();
        let rest_bits: Vec<usize> = rest_labels
            .iter()
            .map(|l| self.bit_of(l))
            .collect::<Result<_>>()?;

        let gather = |i: usize, bits: &[usize]| -> usize {
            bits.iter().fold(0, |acc, &b| (acc << 1) | (i >> b & 1))
        };
        let mut residual = vec![ZERO; 1usize << rest_labels.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            if *amp == ZERO {
                continue;
            }
            let j = gather(i, &on_bits);
            let r = gather(i, &rest_bits);
            residual[r] += basis_vector.amps[j].conj() * amp;
        }
        let state = Self {
            labels: rest_labels,
            amps: residual,
        };
        let probability = state.norm_sqr();
        Ok(Projection {
            null: probability < NULL_PROBABILITY,
            state,
            probability,
        })
    }

    /// `<psi| op |psi>` with `op` acting on `on_labels`. The state is used as
    /// given (not renormalized).
    pub fn expectation(&self, op: &Operator, on_labels: &[&str]) -> Result<f64> {
        let residual = op.hermitian_residual();
        if residual > NORM_TOL {
            return Err(Error::HermiticityError { residual });
        }
        let value = self.inner(&self.apply_gate(op, on_labels)?)?;
        if value.im.abs() > NORM_TOL * value.re.abs().max(1.0) {
            return Err(Error::NumericalError(format!(
                "expectation of a Hermitian operator has imaginary part {:e}",
                value.im
            )));
        }
        Ok(value.re)
    }

    /// Same amplitudes under new labels (same count, no reordering).
    pub fn relabel<L, S>(&self, labels: L) -> Result<Self>
    where
        L: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(labels, self.amps.clone())
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.labels.len();
        let mut first = true;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if a.im.abs() < 1e-12 {
                write!(f, "{:.6}", a.re)?;
            } else {
                write!(f, "({:.6}{:+.6}i)", a.re, a.im)?;
            }
            write!(f, "|{:0width$b}>", i, width = n)?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, "_{{{}}}", self.labels.join(","))
    }
}

/// Tolerance on the total of a probability vector before sampling from it.
pub const PROBABILITY_DRIFT_TOL: f64 = 1e-9;

/// Draws an index with the given (Born) probabilities. Totals within
/// [`PROBABILITY_DRIFT_TOL`] of one are renormalized; zero-probability entries
/// are never selected.
pub fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = probabilities.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > PROBABILITY_DRIFT_TOL {
        return Err(Error::NumericalError(format!("outcome probabilities sum to {total}")));
    }
    if let Some(p) = probabilities.iter().find(|p| **p < -PROBABILITY_DRIFT_TOL) {
        return Err(Error::NumericalError(format!("negative outcome probability {p}")));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last)
}

/// Result of contracting a basis vector out of a state.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Unnormalized residual on the remaining labels.
    pub state: StateVector,
    pub probability: f64,
    /// Set when the branch has (numerically) zero probability; the residual
    /// must not be normalized.
    pub null: bool,
}

impl Projection {
    pub fn conditional(&self) -> Result<StateVector> {
        if self.null {
            return Err(Error::ZeroNorm);
        }
        self.state.normalize()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn approx_state(a: &StateVector, b: &StateVector, tol: f64) {
        assert_eq!(a.labels(), b.labels());
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < tol, "{a} vs {b}");
        }
    }

    fn random_state(labels: &[&str], raw: &[(f64, f64)]) -> StateVector {
        StateVector::new(labels.iter().copied(), raw.iter().map(|&(r, i)| c(r, i)).collect())
            .unwrap()
            .normalize()
            .unwrap()
    }

    #[test]
    fn tensor_of_basis_states() {
        let s = StateVector::basis(["1"], 0).unwrap().tensor(&StateVector::basis(["2"], 0).unwrap()).unwrap();
        assert_eq!(s.labels(), ["1", "2"]);
        assert_eq!(s.amplitude(0), ONE);
        assert!(s.amplitudes()[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn tensor_rejects_shared_labels() {
        let a = StateVector::basis(["1", "2"], 0).unwrap();
        let b = StateVector::basis(["2"], 0).unwrap();
        assert!(matches!(a.tensor(&b), Err(Error::LabelCollision(l)) if l == "2"));
    }

    #[test]
    fn construction_rejects_bad_shapes() {
        assert!(matches!(StateVector::new(["1", "1"], vec![ZERO; 4]), Err(Error::LabelError(_))));
        assert!(matches!(StateVector::new(["1"], vec![ZERO; 3]), Err(Error::ShapeError(_))));
        assert!(matches!(
            StateVector::new(["1"], vec![c(f64::NAN, 0.0), ZERO]),
            Err(Error::NumericalError(_))
        ));
        assert!(Operator::new(3, vec![ZERO; 9]).is_err());
    }

    #[test]
    fn x_flips_the_named_qubit() {
        let s = StateVector::basis(["5", "6"], 0b00).unwrap();
        let out = s.apply_gate(&Operator::pauli_x(), &["5"]).unwrap();
        approx_state(&out, &StateVector::basis(["5", "6"], 0b10).unwrap(), 1e-15);
    }

    #[test]
    fn cnot_truth_table() {
        let s = StateVector::basis(["5", "a"], 0b10).unwrap();
        let out = s.apply_gate(&Operator::cnot(), &["5", "a"]).unwrap();
        approx_state(&out, &StateVector::basis(["5", "a"], 0b11).unwrap(), 1e-15);
        // control on the less significant qubit
        let s = StateVector::basis(["a", "5"], 0b01).unwrap();
        let out = s.apply_gate(&Operator::cnot(), &["5", "a"]).unwrap();
        approx_state(&out, &StateVector::basis(["a", "5"], 0b11).unwrap(), 1e-15);
    }

    #[test]
    fn zz_against_explicit_matrix() {
        let (a, b, cc, d) = (0.1, 0.3, -0.5, 0.7);
        let s = StateVector::from_real(["5", "6"], &[a, -b, -cc, d]).unwrap();
        let zz = Operator::pauli_z().kron(&Operator::pauli_z());
        let out = s.apply_gate(&zz, &["5", "6"]).unwrap();
        // diag(1,-1,-1,1) times the column vector, written out
        let expected = StateVector::from_real(["5", "6"], &[a, b, cc, d]).unwrap();
        approx_state(&out, &expected, 1e-15);
    }

    #[test]
    fn gate_errors() {
        let s = StateVector::basis(["5", "6"], 0).unwrap();
        assert!(matches!(s.apply_gate(&Operator::cnot(), &["5"]), Err(Error::ShapeError(_))));
        assert!(matches!(s.apply_gate(&Operator::pauli_x(), &["7"]), Err(Error::LabelError(_))));
        assert!(matches!(s.apply_gate(&Operator::cnot(), &["5", "5"]), Err(Error::LabelError(_))));
    }

    #[test]
    fn projecting_a_factor_returns_the_other_factor() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_real(["2", "3"], &[h, 0.0, 0.0, h]).unwrap();
        let psi = random_state(&["5", "6"], &[(0.3, 0.1), (-0.2, 0.4), (0.5, 0.0), (0.1, -0.6)]);
        let joint = bell.tensor(&psi).unwrap();
        let p = joint.project(&bell).unwrap();
        assert!((p.probability - 1.0).abs() < 1e-12);
        assert!(!p.null);
        approx_state(&p.state, &psi, 1e-12);
    }

    #[test]
    fn null_projection_is_flagged() {
        let s = StateVector::basis(["1", "2"], 0b00).unwrap();
        let p = s.project(&StateVector::basis(["1"], 1).unwrap()).unwrap();
        assert!(p.null);
        assert_eq!(p.probability, 0.0);
        assert!(matches!(p.conditional(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn projection_requires_normalized_basis_vector() {
        let s = StateVector::basis(["1", "2"], 0).unwrap();
        let b = StateVector::from_real(["1"], &[1.0, 1.0]).unwrap();
        assert!(s.project(&b).is_err());
    }

    #[test]
    fn expectation_checks_hermiticity() {
        let s = StateVector::basis(["1"], 0).unwrap();
        let not_herm = Operator::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(s.expectation(&not_herm, &["1"]), Err(Error::HermiticityError { .. })));
        let e = s.expectation(&Operator::identity(2), &["1"]).unwrap();
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kron_matches_sequential_application() {
        let s = random_state(&["5", "6"], &[(0.3, 0.1), (-0.2, 0.4), (0.5, 0.0), (0.1, -0.6)]);
        let zx = Operator::pauli_z().kron(&Operator::pauli_x());
        let a = s.apply_gate(&zx, &["5", "6"]).unwrap();
        let b = s
            .apply_gate(&Operator::pauli_z(), &["5"])
            .unwrap()
            .apply_gate(&Operator::pauli_x(), &["6"])
            .unwrap();
        approx_state(&a, &b, 1e-15);
    }

    fn amps_strategy(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
            .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
    }

    // Random unitary from a product of Hadamard-like rotations and phases.
    fn unitary_strategy() -> impl Strategy<Value = Operator> {
        (0.0f64..6.3, 0.0f64..6.3, 0.0f64..6.3).prop_map(|(t, p, q)| {
            let (s, co) = t.sin_cos();
            let u1 = Operator::new(
                2,
                vec![c(co, 0.0), -Complex64::from_polar(s, q), Complex64::from_polar(s, p), Complex64::from_polar(co, p + q)],
            )
            .unwrap();
            u1.kron(&Operator::pauli_x()).matmul(&Operator::cnot()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn tensor_preserves_norm(a in amps_strategy(2), b in amps_strategy(1)) {
            let psi = random_state(&["1", "2"], &a);
            let phi = random_state(&["3"], &b);
            prop_assert!((psi.tensor(&phi).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn unitary_gates_preserve_norm(a in amps_strategy(3), u in unitary_strategy()) {
            let psi = random_state(&["a", "b", "c"], &a);
            let out = psi.apply_gate(&u, &["c", "a"]).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn product_basis_projection_recovers_amplitudes(a in amps_strategy(3)) {
            let psi = random_state(&["x", "y", "z"], &a);
            for idx in 0..4 {
                let b = StateVector::basis(["y", "z"], idx).unwrap();
                let p = psi.project(&b).unwrap();
                prop_assert_eq!(p.state.labels(), ["x"]);
                prop_assert!((p.state.amplitude(0) - psi.amplitude(idx)).norm() < 1e-12);
                prop_assert!((p.state.amplitude(1) - psi.amplitude(4 + idx)).norm() < 1e-12);
            }
        }
    }
}

//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classical real Jacobi rotation that zeroes it.
//! Sweeps run until the off-diagonal Frobenius norm drops below
//! [`OFF_DIAGONAL_TOL`] (scaled by the matrix norm when that exceeds one).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::{Operator, NORM_TOL};

pub const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order; `vectors` holds the matching unit
/// eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Operator,
}

fn off_diagonal_norm(a: &Operator) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn frobenius(a: &Operator) -> f64 {
    a.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn eigh(op: &Operator) -> Result<HermitianEigen> {
    let residual = op.hermitian_residual();
    if residual > NORM_TOL {
        return Err(Error::HermiticityError { residual });
    }
    let n = op.dim();
    let mut a = op.clone();
    let mut v = Operator::identity(n);
    let tol = OFF_DIAGONAL_TOL * frobenius(op).max(1.0);

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NumericalError(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {:e})",
                off_diagonal_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).re.total_cmp(&a.get(j, j).re));
    let values = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = Operator::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    Ok(HermitianEigen { values, vectors })
}

fn rotate(a: &mut Operator, v: &mut Operator, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = (apq / r).conj();
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U restricted to the (p, q) plane.
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase * s;
    let u_qq = phase * c;

    let n = a.dim();
    // A <- A U
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * u_pp + akq * u_qp);
        a.set(k, q, akp * u_pq + akq * u_qq);
    }
    // A <- U^H A
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, u_pp.conj() * apj + u_qp.conj() * aqj);
        a.set(q, j, u_pq.conj() * apj + u_qq.conj() * aqj);
    }
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
    a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));
    // V <- V U
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * u_pp + vkq * u_qp);
        v.set(k, q, vkp * u_pq + vkq * u_qq);
    }
}

impl Operator {
    pub fn eigh(&self) -> Result<HermitianEigen> {
        eigh(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.values[0])
    }

    /// Principal square root of a positive semidefinite operator. Eigenvalues
    /// in `[-1e-10, 0)` are treated as zero; anything more negative is an error.
    pub fn sqrt_psd(&self) -> Result<Operator> {
        let HermitianEigen { values, vectors } = self.eigh()?;
        if values[0] < -1e-10 {
            return Err(Error::NumericalError(format!(
                "square root of an operator with eigenvalue {:e}",
                values[0]
            )));
        }
        let roots: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        vectors.matmul(&Operator::diagonal(&roots))?.matmul(&vectors.adjoint())
    }
}

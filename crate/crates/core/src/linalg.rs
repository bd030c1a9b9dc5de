//! Sparse helpers on top of `sprs` and `sprs-ldl`.

use sprs::CsMat;
use sprs_ldl::{Ldl, LdlNumeric};

use crate::error::{Error, Result};

/// `y = A x` for a CSR or CSC matrix (symmetric matrices only need one).
pub fn spmv(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    if a.is_csr() {
        for (i, row) in a.outer_iterator().enumerate() {
            y[i] = row.iter().map(|(j, &v)| v * x[j]).sum();
        }
    } else {
        for (j, col) in a.outer_iterator().enumerate() {
            let xj = x[j];
            for (i, &v) in col.iter() {
                y[i] += v * xj;
            }
        }
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Largest absolute row sum, an upper bound on the spectral radius.
pub fn inf_norm_bound(a: &CsMat<f64>) -> f64 {
    let csr = if a.is_csr() { a.clone() } else { a.to_csr() };
    csr.outer_iterator()
        .map(|row| row.iter().map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LDLᵀ factorization of a symmetric positive definite matrix with
/// reverse Cuthill-McKee ordering.
pub struct SpdFactor {
    ldl: LdlNumeric<f64, usize>,
}

impl SpdFactor {
    pub fn new(a: &CsMat<f64>) -> Result<SpdFactor> {
        let csc = if a.is_csc() { a.clone() } else { a.to_csc() };
        let ldl = Ldl::new()
            .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(csc.view())
            .map_err(|e| Error::LinearSolve(format!("{e}")))?;
        let d = ldl.d();
        let d_max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some((i, v)) = d
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 1e-14 * d_max))
        {
            return Err(Error::LinearSolve(format!(
                "matrix is singular or indefinite (pivot {i} = {v:e}, max {d_max:e})"
            )));
        }
        Ok(SpdFactor { ldl })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.ldl.solve(&rhs.to_vec())
    }
}

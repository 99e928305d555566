//! Penalised continuous relaxation of the binary association problem.
//!
//! For a nonnegative `m x m` matrix `U` with row sums at most one, the relaxed
//! objective is
//!
//! ```text
//! f(U) = <U U^T, Abar> + d * ( <U^T U, P_o> + <U U^T, P_d> + <U^T U - U^T - U, 1> )
//! ```
//!
//! with `Abar = l * 1 - 2 * sum_k S_k`, `P_o = 1 - I` and `P_d` the
//! block-diagonal within-set indicator without its diagonal. On feasible binary
//! points every penalty vanishes except the constant `-m`, and
//! `<U U^T, Abar> + sum_k ||S_k||_F^2` equals the Frobenius objective
//! `sum_k ||U U^T - S_k||_F^2`.
//!
//! `P_o` and `P_d` are kept as dense matrices for inspection, but objective and
//! gradient evaluation use their structure, so the only `O(m^3)` work per call
//! is the product `Abar * U`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{build_modality_matrices, offsets_of, Assignment, Instance, ModalityMatrices};

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationData {
    pub abar: DMatrix<f64>,
    pub p_o: DMatrix<f64>,
    pub p_d: DMatrix<f64>,
    /// `sum_k ||S_k||_F^2`.
    pub frob_const: f64,
    set_sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl RelaxationData {
    pub fn num_elements(&self) -> usize {
        self.abar.nrows()
    }

    pub fn set_sizes(&self) -> &[usize] {
        &self.set_sizes
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Frobenius objective of a binary assignment, through the expansion
    /// `<U U^T, Abar> + frob_const`. Only valid for feasible assignments.
    pub fn assignment_value(&self, assignment: &Assignment) -> f64 {
        let cols = assignment.columns();
        let mut acc = 0.0;
        for a in 0..cols.len() {
            for b in 0..cols.len() {
                if cols[a] == cols[b] {
                    acc += self.abar[(a, b)];
                }
            }
        }
        acc + self.frob_const
    }
}

/// Penalty weight `d >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PenaltyWeight(f64);

impl PenaltyWeight {
    pub fn new(d: f64) -> Result<Self> {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidConfig(format!("penalty weight must be finite and >= 0, got {d}")));
        }
        Ok(Self(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn build_relaxation(instance: &Instance) -> RelaxationData {
    build_relaxation_from(&build_modality_matrices(instance), instance.set_sizes())
}

pub fn build_relaxation_from(scores: &ModalityMatrices, set_sizes: &[usize]) -> RelaxationData {
    let l = scores.mats.len() as f64;
    let m = scores.mats[0].nrows();
    let abar = DMatrix::from_element(m, m, l) - scores.sum() * 2.0;
    let frob_const = scores.mats.iter().map(|s| s.norm_squared()).sum();
    let p_o = DMatrix::from_element(m, m, 1.0) - DMatrix::identity(m, m);
    let offsets = offsets_of(set_sizes);
    let mut p_d = DMatrix::zeros(m, m);
    for w in offsets.windows(2) {
        for a in w[0]..w[1] {
            for b in w[0]..w[1] {
                if a != b {
                    p_d[(a, b)] = 1.0;
                }
            }
        }
    }
    RelaxationData { abar, p_o, p_d, frob_const, set_sizes: set_sizes.to_vec(), offsets }
}

fn check_shape(u: &DMatrix<f64>, data: &RelaxationData) -> Result<()> {
    let m = data.num_elements();
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: format!("{m}x{m}"),
            got: format!("{}x{}", u.nrows(), u.ncols()),
        });
    }
    Ok(())
}

fn check_nonnegative(u: &DMatrix<f64>) -> Result<()> {
    for c in 0..u.ncols() {
        for r in 0..u.nrows() {
            let v = u[(r, c)];
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("U[({r}, {c})] = {v}")));
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry { row: r, col: c, value: v });
            }
        }
    }
    Ok(())
}

/// Value of the relaxed objective at a nonnegative `U`.
pub fn relaxed_objective(u: &DMatrix<f64>, data: &RelaxationData, d: PenaltyWeight) -> Result<f64> {
    check_shape(u, data)?;
    check_nonnegative(u)?;
    Ok(Evaluation::new(u, data).objective(d.value()))
}

/// Gradient of the relaxed objective:
/// `2 (Abar + d P_d) U + 2 d U P_o + 2 d (U 1 - 1) 1^T`.
pub fn relaxed_gradient(u: &DMatrix<f64>, data: &RelaxationData, d: PenaltyWeight) -> Result<DMatrix<f64>> {
    check_shape(u, data)?;
    check_nonnegative(u)?;
    Ok(Evaluation::new(u, data).gradient(d.value()))
}

/// Cached quantities shared by objective and gradient evaluation.
pub(crate) struct Evaluation<'a> {
    u: &'a DMatrix<f64>,
    data: &'a RelaxationData,
    abar_u: DMatrix<f64>,
    row_sums: DVector<f64>,
    /// Column sums of each set's row block, one row per set.
    block_col_sums: DMatrix<f64>,
}

impl<'a> Evaluation<'a> {
    pub(crate) fn new(u: &'a DMatrix<f64>, data: &'a RelaxationData) -> Self {
        let abar_u = &data.abar * u;
        let row_sums = u.column_sum();
        let offsets = data.offsets();
        let n = offsets.len() - 1;
        let mut block_col_sums = DMatrix::zeros(n, u.ncols());
        for i in 0..n {
            let rows = u.rows(offsets[i], offsets[i + 1] - offsets[i]);
            block_col_sums.set_row(i, &rows.row_sum());
        }
        Self { u, data, abar_u, row_sums, block_col_sums }
    }

    pub(crate) fn data_term(&self) -> f64 {
        self.abar_u.dot(self.u)
    }

    /// `<U^T U, P_o> + <U U^T, P_d> + ||U 1 - 1||^2 - m`.
    pub(crate) fn penalty_term(&self) -> f64 {
        let m = self.u.nrows() as f64;
        let fro2 = self.u.norm_squared();
        let orth = self.row_sums.norm_squared() - fro2;
        let dist = self.block_col_sums.norm_squared() - fro2;
        let rows = self.row_sums.map(|s| s - 1.0).norm_squared() - m;
        orth + dist + rows
    }

    pub(crate) fn objective(&self, d: f64) -> f64 {
        self.data_term() + d * self.penalty_term()
    }

    pub(crate) fn gradient(&self, d: f64) -> DMatrix<f64> {
        let u = self.u;
        let offsets = self.data.offsets();
        let mut g = &self.abar_u * 2.0;
        if d == 0.0 {
            return g;
        }
        let mut set = 0;
        for r in 0..u.nrows() {
            while r >= offsets[set + 1] {
                set += 1;
            }
            let s = self.row_sums[r];
            for c in 0..u.ncols() {
                let pd_u = self.block_col_sums[(set, c)] - u[(r, c)];
                let u_po = s - u[(r, c)];
                g[(r, c)] += 2.0 * d * (pd_u + u_po + (s - 1.0));
            }
        }
        g
    }
}

/// `sum_k ||U U^T - S_k||_F^2`, the Frobenius objective of the binary
/// problem, evaluated per modality.
pub fn frobenius_objective(u: &DMatrix<f64>, instance: &Instance) -> Result<f64> {
    frobenius_objective_with(u, &build_modality_matrices(instance))
}

pub fn frobenius_objective_with(u: &DMatrix<f64>, scores: &ModalityMatrices) -> Result<f64> {
    let m = scores.mats[0].nrows();
    if u.nrows() != m {
        return Err(Error::DimensionMismatch { expected: format!("{m} rows"), got: format!("{} rows", u.nrows()) });
    }
    let gram = u * u.transpose();
    Ok(scores.mats.iter().map(|s| (&gram - s).norm_squared()).sum())
}

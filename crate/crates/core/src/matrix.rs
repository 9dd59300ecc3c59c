//! Positive reciprocal comparison matrices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{TernaryValue, Theta};

/// Relative tolerance used when checking `a_ij * a_ji = 1` on real-valued input.
const RECIPROCAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("matrix order must be at least 1")]
    Empty,
    #[error("expected {expected} entries for order {order}, got {got}")]
    Shape { order: usize, expected: usize, got: usize },
    #[error("entry ({row}, {col}) = {value} is not a positive finite number")]
    NonPositive { row: usize, col: usize, value: f64 },
    #[error("diagonal entry ({index}, {index}) = {value}, expected 1")]
    Diagonal { index: usize, value: f64 },
    #[error("entries ({row}, {col}) and ({col}, {row}) are not reciprocal")]
    NotReciprocal { row: usize, col: usize },
}

impl MatrixError {
    pub fn code(&self) -> &'static str {
        match self {
            MatrixError::Empty => "matrix_empty",
            MatrixError::Shape { .. } => "matrix_shape",
            MatrixError::NonPositive { .. } => "non_positive_entry",
            MatrixError::Diagonal { .. } => "matrix_diagonal",
            MatrixError::NotReciprocal { .. } => "not_reciprocal",
        }
    }
}

/// A square positive reciprocal matrix, row-major.
///
/// Matrices built from ternary judgments also remember the symbolic value of
/// every entry, so reciprocity can be checked exactly rather than up to
/// floating-point rounding of `θ · (1/θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    order: usize,
    entries: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symbolic: Option<Vec<TernaryValue>>,
}

impl ComparisonMatrix {
    /// Build from a full row-major entry list, checking positivity, unit
    /// diagonal and reciprocity.
    pub fn new(order: usize, entries: Vec<f64>) -> Result<Self, MatrixError> {
        if order == 0 {
            return Err(MatrixError::Empty);
        }
        if entries.len() != order * order {
            return Err(MatrixError::Shape {
                order,
                expected: order * order,
                got: entries.len(),
            });
        }
        for row in 0..order {
            for col in 0..order {
                let value = entries[row * order + col];
                if !(value.is_finite() && value > 0.0) {
                    return Err(MatrixError::NonPositive { row, col, value });
                }
            }
        }
        for i in 0..order {
            let value = entries[i * order + i];
            if (value - 1.0).abs() > RECIPROCAL_TOL {
                return Err(MatrixError::Diagonal { index: i, value });
            }
            for j in (i + 1)..order {
                let product = entries[i * order + j] * entries[j * order + i];
                if (product - 1.0).abs() > RECIPROCAL_TOL {
                    return Err(MatrixError::NotReciprocal { row: i, col: j });
                }
            }
        }
        Ok(ComparisonMatrix {
            order,
            entries,
            symbolic: None,
        })
    }

    /// Build from the strict upper triangle (row by row); the lower triangle
    /// is filled with reciprocals.
    pub fn from_upper(order: usize, upper: &[f64]) -> Result<Self, MatrixError> {
        if order == 0 {
            return Err(MatrixError::Empty);
        }
        let expected = order * (order - 1) / 2;
        if upper.len() != expected {
            return Err(MatrixError::Shape {
                order,
                expected,
                got: upper.len(),
            });
        }
        let mut entries = vec![1.0; order * order];
        let mut k = 0;
        for i in 0..order {
            for j in (i + 1)..order {
                let value = upper[k];
                if !(value.is_finite() && value > 0.0) {
                    return Err(MatrixError::NonPositive { row: i, col: j, value });
                }
                entries[i * order + j] = value;
                entries[j * order + i] = 1.0 / value;
                k += 1;
            }
        }
        Ok(ComparisonMatrix {
            order,
            entries,
            symbolic: None,
        })
    }

    /// The consistent matrix `a_ij = w_i / w_j`.
    pub fn from_weights(weights: &[f64]) -> Result<Self, MatrixError> {
        let n = weights.len();
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                upper.push(weights[i] / weights[j]);
            }
        }
        Self::from_upper(n, &upper)
    }

    /// Realize ternary judgments given for the strict upper triangle.
    pub fn from_ternary(order: usize, theta: Theta, upper: &[TernaryValue]) -> Result<Self, MatrixError> {
        if order == 0 {
            return Err(MatrixError::Empty);
        }
        let expected = order * (order - 1) / 2;
        if upper.len() != expected {
            return Err(MatrixError::Shape {
                order,
                expected,
                got: upper.len(),
            });
        }
        let mut symbolic = vec![TernaryValue::Equal; order * order];
        let mut entries = vec![1.0; order * order];
        let mut k = 0;
        for i in 0..order {
            for j in (i + 1)..order {
                let v = upper[k];
                symbolic[i * order + j] = v;
                symbolic[j * order + i] = v.reciprocal();
                entries[i * order + j] = v.realize(theta);
                entries[j * order + i] = v.reciprocal().realize(theta);
                k += 1;
            }
        }
        Ok(ComparisonMatrix {
            order,
            entries,
            symbolic: Some(symbolic),
        })
    }

    /// All-ones matrix of the given order (every pair judged equal).
    pub fn ones(order: usize) -> Self {
        ComparisonMatrix {
            order,
            entries: vec![1.0; order * order],
            symbolic: Some(vec![TernaryValue::Equal; order * order]),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.order + col]
    }

    /// Symbolic ternary value of an entry, when the matrix came from judgments.
    pub fn ternary(&self, row: usize, col: usize) -> Option<TernaryValue> {
        self.symbolic.as_ref().map(|s| s[row * self.order + col])
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `A · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.order);
        (0..self.order)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// `P · A · Pᵀ` where row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.order;
        assert_eq!(perm.len(), n, "permutation length must equal matrix order");
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        let symbolic = self.symbolic.as_ref().map(|s| {
            let mut out = vec![TernaryValue::Equal; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = s[perm[i] * n + perm[j]];
                }
            }
            out
        });
        ComparisonMatrix {
            order: n,
            entries,
            symbolic,
        }
    }

    /// Cardinal consistency: `a_ij · a_jk = a_ik` for every triple, within `tol`
    /// relative error.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let n = self.order;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs = self.get(i, j) * self.get(j, k);
                    let rhs = self.get(i, k);
                    if ((lhs - rhs) / rhs).abs() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}

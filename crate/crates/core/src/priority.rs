//! Local priority vectors and consistency statistics.
//!
//! The default prioritization is the principal (Perron) eigenvector found by
//! power iteration. The row geometric mean is available as a cross-check.
//! Both attach `λ_max`, the consistency index `CI = (λ_max − n)/(n − 1)` and
//! the consistency ratio `CR = CI / RI(n)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::ComparisonMatrix;
use crate::model::NodeId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Eigenvector,
    GeometricMean,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Eigenvector => "eigenvector",
            Method::GeometricMean => "geometric-mean",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eigenvector" => Ok(Method::Eigenvector),
            "geometric-mean" => Ok(Method::GeometricMean),
            other => Err(format!("unknown prioritization method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriorityError {
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },
    #[error("no random index for matrices of order {0}")]
    OrderOutsideTable(usize),
    #[error("invalid iteration parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid random index table: {0}")]
    InvalidTable(String),
}

impl PriorityError {
    pub fn code(&self) -> &'static str {
        match self {
            PriorityError::NonConvergence { .. } => "non_convergence",
            PriorityError::OrderOutsideTable(_) => "order_outside_table",
            PriorityError::InvalidParameters(_) => "invalid_parameters",
            PriorityError::InvalidTable(_) => "invalid_random_index_table",
        }
    }
}

/// Random consistency index by matrix order, `RI(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RandomIndexTable {
    values: Vec<f64>,
}

impl RandomIndexTable {
    pub const MAX_ORDER: usize = 15;

    /// Saaty's random indices for orders 1 through 15.
    pub const SAATY: [f64; 15] = [
        0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49, 1.51, 1.54, 1.56, 1.58, 1.59,
    ];

    pub fn saaty() -> Self {
        RandomIndexTable {
            values: Self::SAATY.to_vec(),
        }
    }

    /// A custom table, `values[n - 1] = RI(n)`. Must start with two zeros and
    /// be non-negative and non-decreasing.
    pub fn new(values: Vec<f64>) -> Result<Self, PriorityError> {
        if values.len() < 2 {
            return Err(PriorityError::InvalidTable(
                "needs entries for at least n = 1, 2".into(),
            ));
        }
        if values[0] != 0.0 || values[1] != 0.0 {
            return Err(PriorityError::InvalidTable("RI(1) and RI(2) must be 0".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(PriorityError::InvalidTable(
                "entries must be finite and non-negative".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(PriorityError::InvalidTable("entries must be non-decreasing".into()));
        }
        Ok(RandomIndexTable { values })
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn max_order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Default for RandomIndexTable {
    fn default() -> Self {
        Self::saaty()
    }
}

impl TryFrom<Vec<f64>> for RandomIndexTable {
    type Error = PriorityError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<RandomIndexTable> for Vec<f64> {
    fn from(t: RandomIndexTable) -> Self {
        t.values
    }
}

/// Power iteration stopping rule: max-norm change between successive
/// sum-normalized iterates below `tol`, or give up after `max_iter` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Normalized local weights of one matrix with its consistency statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityVector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<NodeId>,
    pub weights: Vec<f64>,
    pub lambda_max: f64,
    pub ci: f64,
    pub cr: f64,
    pub method: Method,
}

impl PriorityVector {
    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn with_context(mut self, context: NodeId) -> Self {
        self.context = Some(context);
        self
    }

    /// `cr <= threshold`.
    pub fn passes_gate(&self, threshold: f64) -> bool {
        self.cr <= threshold
    }
}

/// Acceptance gate on the consistency ratio. Boundary inclusive: a ratio equal
/// to the threshold passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyGate {
    pub threshold: f64,
}

impl ConsistencyGate {
    pub const DEFAULT_THRESHOLD: f64 = 0.1;

    pub fn new(threshold: f64) -> Self {
        ConsistencyGate { threshold }
    }

    pub fn passes(&self, pv: &PriorityVector) -> bool {
        pv.passes_gate(self.threshold)
    }
}

impl Default for ConsistencyGate {
    fn default() -> Self {
        ConsistencyGate {
            threshold: Self::DEFAULT_THRESHOLD,
        }
    }
}

/// `(CI, CR)` for a matrix of order `n` with principal eigenvalue `lambda_max`.
///
/// Orders 1 and 2 are always consistent: both are reported as 0. An excess
/// of `lambda_max` over `n` at rounding level (below `1e-12·n`, either sign)
/// counts as exactly consistent.
pub fn consistency_ratio(lambda_max: f64, n: usize, table: &RandomIndexTable) -> Result<(f64, f64), PriorityError> {
    let ri = table.get(n).ok_or(PriorityError::OrderOutsideTable(n))?;
    if n <= 2 {
        return Ok((0.0, 0.0));
    }
    let excess = lambda_max - n as f64;
    let ci = if excess <= 1e-12 * n as f64 {
        0.0
    } else {
        excess / (n as f64 - 1.0)
    };
    let cr = if ri > 0.0 { ci / ri } else { 0.0 };
    Ok((ci, cr))
}

/// Mean of the component ratios `(A·w)_i / w_i`.
fn lambda_estimate(m: &ComparisonMatrix, w: &[f64]) -> f64 {
    let aw = m.mul_vec(w);
    aw.iter().zip(w).map(|(a, x)| a / x).sum::<f64>() / w.len() as f64
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Principal eigenvector by power iteration from the uniform start vector.
pub fn principal_eigenvector(
    m: &ComparisonMatrix,
    params: &PowerIteration,
    table: &RandomIndexTable,
) -> Result<PriorityVector, PriorityError> {
    let n = m.order();
    principal_eigenvector_from(m, &vec![1.0; n], params, table)
}

/// Principal eigenvector by power iteration from a caller-supplied positive
/// start vector.
pub fn principal_eigenvector_from(
    m: &ComparisonMatrix,
    start: &[f64],
    params: &PowerIteration,
    table: &RandomIndexTable,
) -> Result<PriorityVector, PriorityError> {
    let n = m.order();
    if params.tol.is_nan() || params.tol <= 0.0 || params.max_iter == 0 {
        return Err(PriorityError::InvalidParameters(format!(
            "tol = {}, max_iter = {}",
            params.tol, params.max_iter
        )));
    }
    if start.len() != n || start.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(PriorityError::InvalidParameters(
            "start vector must be positive with one entry per row".into(),
        ));
    }
    let mut w = start.to_vec();
    normalize(&mut w);
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iter {
        let mut next = m.mul_vec(&w);
        normalize(&mut next);
        residual = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if residual < params.tol {
            let lambda_max = lambda_estimate(m, &w);
            let (ci, cr) = consistency_ratio(lambda_max, n, table)?;
            return Ok(PriorityVector {
                context: None,
                weights: w,
                lambda_max,
                ci,
                cr,
                method: Method::Eigenvector,
            });
        }
    }
    Err(PriorityError::NonConvergence {
        iterations: params.max_iter,
        residual,
        last: w,
    })
}

/// Weights proportional to the geometric mean of each row.
pub fn geometric_mean_priorities(
    m: &ComparisonMatrix,
    table: &RandomIndexTable,
) -> Result<PriorityVector, PriorityError> {
    let n = m.order();
    // Mean of logs keeps large orders away from overflow.
    let mut w: Vec<f64> = (0..n)
        .map(|i| (m.row(i).iter().map(|a| a.ln()).sum::<f64>() / n as f64).exp())
        .collect();
    normalize(&mut w);
    let lambda_max = lambda_estimate(m, &w);
    let (ci, cr) = consistency_ratio(lambda_max, n, table)?;
    Ok(PriorityVector {
        context: None,
        weights: w,
        lambda_max,
        ci,
        cr,
        method: Method::GeometricMean,
    })
}

pub fn prioritize(
    m: &ComparisonMatrix,
    method: Method,
    params: &PowerIteration,
    table: &RandomIndexTable,
) -> Result<PriorityVector, PriorityError> {
    match method {
        Method::Eigenvector => principal_eigenvector(m, params, table),
        Method::GeometricMean => geometric_mean_priorities(m, table),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{TernaryValue, Theta};

    fn eig(m: &ComparisonMatrix) -> PriorityVector {
        principal_eigenvector(m, &PowerIteration::default(), &RandomIndexTable::saaty()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn consensus_matrix_is_uniform() {
        let pv = eig(&ComparisonMatrix::ones(4));
        assert!(pv.weights.iter().all(|w| close(*w, 0.25, 1e-12)));
        assert!(close(pv.lambda_max, 4.0, 1e-12));
        assert_eq!((pv.ci, pv.cr), (0.0, 0.0));
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = ComparisonMatrix::from_upper(2, &[3.0]).unwrap();
        for pv in [
            eig(&m),
            geometric_mean_priorities(&m, &RandomIndexTable::saaty()).unwrap(),
        ] {
            assert!(close(pv.weights[0], 0.75, 1e-10), "{:?}", pv.weights);
            assert!(close(pv.weights[1], 0.25, 1e-10));
            assert!(close(pv.lambda_max, 2.0, 1e-10));
            assert_eq!(pv.cr, 0.0);
        }
    }

    #[test]
    fn cyclic_ternary_matrix() {
        use TernaryValue::*;
        let m = ComparisonMatrix::from_ternary(
            3,
            Theta::new(3.0).unwrap(),
            &[MoreImportant, LessImportant, MoreImportant],
        )
        .unwrap();
        let pv = eig(&m);
        for w in &pv.weights {
            assert!(close(*w, 1.0 / 3.0, 1e-12));
        }
        assert!(close(pv.lambda_max, 1.0 + 3.0 + 1.0 / 3.0, 1e-10));
        // CI = 2/3, CR = (2/3)/0.58
        assert!(close(pv.ci, 2.0 / 3.0, 1e-10));
        assert!(close(pv.cr, (2.0 / 3.0) / 0.58, 1e-10));
        assert!(!pv.passes_gate(0.1));
    }

    #[test]
    fn consistency_ratio_examples() {
        let t = RandomIndexTable::saaty();
        assert_eq!(consistency_ratio(4.0, 4, &t).unwrap(), (0.0, 0.0));
        let (ci, cr) = consistency_ratio(4.0 + 1.0 / 3.0, 3, &t).unwrap();
        assert!(close(ci, 0.6667, 1e-4));
        assert!(close(cr, 1.149, 1e-3));
        assert_eq!(consistency_ratio(2.5, 2, &t).unwrap(), (0.0, 0.0));
        assert_eq!(
            consistency_ratio(17.0, 16, &t),
            Err(PriorityError::OrderOutsideTable(16))
        );
        assert_eq!(consistency_ratio(1.0, 0, &t), Err(PriorityError::OrderOutsideTable(0)));
    }

    #[test]
    fn gate_boundary_is_inclusive() {
        let mut pv = eig(&ComparisonMatrix::ones(3));
        let gate = ConsistencyGate::default();
        pv.cr = 0.04;
        assert!(gate.passes(&pv));
        pv.cr = 0.1;
        assert!(gate.passes(&pv));
        pv.cr = f64::from_bits(0.1f64.to_bits() + 1);
        assert!(!gate.passes(&pv));
    }

    #[test]
    fn order_one() {
        let pv = eig(&ComparisonMatrix::ones(1));
        assert_eq!(pv.weights, vec![1.0]);
        assert_eq!((pv.ci, pv.cr), (0.0, 0.0));
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let m = ComparisonMatrix::from_upper(3, &[3.0, 1.0 / 3.0, 3.0]).unwrap();
        let params = PowerIteration {
            tol: 1e-10,
            max_iter: 1,
        };
        // Uniform start is already the eigenvector of this circulant, so start elsewhere.
        let err = principal_eigenvector_from(&m, &[1.0, 2.0, 3.0], &params, &RandomIndexTable::saaty()).unwrap_err();
        match err {
            PriorityError::NonConvergence {
                iterations,
                last,
                residual,
            } => {
                assert_eq!(iterations, 1);
                assert_eq!(last.len(), 3);
                assert!(residual > 1e-10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_validation() {
        assert!(RandomIndexTable::new(vec![0.0, 0.0, 0.5, 0.4]).is_err());
        assert!(RandomIndexTable::new(vec![0.1, 0.0]).is_err());
        assert!(RandomIndexTable::new(vec![0.0, 0.0, 0.52, 0.89]).is_ok());
        let t = RandomIndexTable::saaty();
        assert_eq!(t.get(3), Some(0.58));
        assert_eq!(t.get(10), Some(1.49));
        assert_eq!(t.max_order(), 15);
    }
}

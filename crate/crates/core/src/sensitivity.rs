//! One-criterion weight sensitivity with exact score lines.
//!
//! Moving top-level criterion `k` from its base weight `w₀` to `t` and scaling
//! the other criteria by `(1 − t)/(1 − w₀)` leaves every local vector
//! untouched, so each alternative's score is linear in `t`:
//!
//! ```text
//! S(t) = t·p + (1 − t)·R
//! ```
//!
//! where `p` is the alternative's aggregate priority inside `k`'s subtree and
//! `R = (S(w₀) − w₀·p)/(1 − w₀)` is its renormalized score from everything
//! else. Crossovers between two alternatives follow in closed form; the rank
//! order between consecutive crossovers is constant.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{DecisionModel, Level, NodeId};
use crate::synthesis::{synthesize, SolveOptions, SynthesisError, SynthesisResult};

/// Score differences at or below this are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

/// Default spacing for grid tables and plots.
pub const DEFAULT_GRID_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error("`{0}` is not a top-level criterion")]
    NotACriterion(NodeId),
    #[error("criterion `{0}` carries all the weight; there is nothing to redistribute")]
    DegenerateWeights(NodeId),
    #[error("perturbation weight {0} is outside [0, 1]")]
    InvalidT(f64),
    #[error("criterion index {index} out of range for {len} weights")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("weight {0} of the perturbed criterion is 1; redistribution is undefined")]
    FullWeight(f64),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

impl SensitivityError {
    pub fn code(&self) -> &'static str {
        match self {
            SensitivityError::NotACriterion(_) => "unknown_criterion",
            SensitivityError::DegenerateWeights(_) | SensitivityError::FullWeight(_) => "degenerate_weights",
            SensitivityError::InvalidT(_) => "invalid_t",
            SensitivityError::IndexOutOfRange { .. } => "index_out_of_range",
            SensitivityError::NotNormalized(_) => "weights_not_normalized",
            SensitivityError::Synthesis(e) => e.code(),
        }
    }
}

/// Sets `weights[k] = t` and rescales the others proportionally so the
/// result still sums to 1.
pub fn perturb_weights(weights: &[f64], k: usize, t: f64) -> Result<Vec<f64>, SensitivityError> {
    if k >= weights.len() {
        return Err(SensitivityError::IndexOutOfRange {
            index: k,
            len: weights.len(),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(SensitivityError::InvalidT(t));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SensitivityError::NotNormalized(total));
    }
    let base = weights[k];
    if base >= 1.0 {
        if t == 1.0 {
            return Ok(weights.to_vec());
        }
        return Err(SensitivityError::FullWeight(base));
    }
    let scale = (1.0 - t) / (1.0 - base);
    Ok(weights
        .iter()
        .enumerate()
        .map(|(j, w)| if j == k { t } else { w * scale })
        .collect())
}

/// Score of one alternative as a linear function of the perturbed weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub alternative: NodeId,
    pub criterion: NodeId,
    /// Score at `t = 1`: priority of the alternative inside the criterion's branch.
    pub slope_point: f64,
    /// Score at `t = 0`: contribution of all other criteria, renormalized.
    pub rest_point: f64,
}

impl ScoreLine {
    pub fn score_at(&self, t: f64) -> f64 {
        t * self.slope_point + (1.0 - t) * self.rest_point
    }
}

/// Builds one line per alternative for top-level criterion `criterion`.
pub fn score_lines(
    model: &DecisionModel,
    result: &SynthesisResult,
    criterion: &str,
) -> Result<Vec<ScoreLine>, SensitivityError> {
    let node = model
        .node(criterion)
        .filter(|n| n.level == Level::Criterion)
        .ok_or_else(|| SensitivityError::NotACriterion(criterion.into()))?;
    let base = result
        .global_weight(criterion)
        .ok_or_else(|| SynthesisError::MissingLocal(node.id.clone()))?;
    if base >= 1.0 {
        return Err(SensitivityError::DegenerateWeights(node.id.clone()));
    }

    let n_alt = model.alternatives().len();
    let mut branch = vec![0.0; n_alt];
    for leaf in model.leaves_under(criterion) {
        let g = result
            .global_weight(leaf.as_str())
            .ok_or_else(|| SynthesisError::MissingLocal(leaf.clone()))?;
        let local = result
            .local(leaf.as_str())
            .ok_or_else(|| SynthesisError::MissingLocal(leaf.clone()))?;
        let share = g / base;
        for (p, w) in branch.iter_mut().zip(&local.weights) {
            *p += share * w;
        }
    }

    Ok(result
        .alternative_scores
        .iter()
        .zip(branch)
        .map(|(s, p)| ScoreLine {
            alternative: s.id.clone(),
            criterion: node.id.clone(),
            slope_point: p,
            rest_point: (s.score - base * p) / (1.0 - base),
        })
        .collect())
}

/// Two score lines meeting strictly inside `(0, 1)`.
///
/// `a` scores higher just below `t`, `b` just above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub a: NodeId,
    pub b: NodeId,
    pub t: f64,
    pub score: f64,
    /// Three or more lines meet at this point.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossoverSet {
    pub crossovers: Vec<Crossover>,
    /// Pairs whose lines coincide: tied for every `t`.
    pub standing_ties: Vec<(NodeId, NodeId)>,
}

/// Pairwise intersections of score lines inside `(0, 1)`, sorted by `t`.
pub fn crossovers(lines: &[ScoreLine]) -> CrossoverSet {
    let mut set = CrossoverSet::default();
    for (i, la) in lines.iter().enumerate() {
        for lb in &lines[i + 1..] {
            let dp = la.slope_point - lb.slope_point;
            let dr = lb.rest_point - la.rest_point;
            if dp.abs() <= TIE_TOL && dr.abs() <= TIE_TOL {
                set.standing_ties.push((la.alternative.clone(), lb.alternative.clone()));
                continue;
            }
            let denom = dp + dr;
            if denom == 0.0 {
                continue;
            }
            let t = dr / denom;
            if !(t > 0.0 && t < 1.0) {
                continue;
            }
            // Difference a − b just below t* has the sign of (R_a − R_b) = −dr.
            let (a, b) = if dr < 0.0 {
                (la.alternative.clone(), lb.alternative.clone())
            } else {
                (lb.alternative.clone(), la.alternative.clone())
            };
            set.crossovers.push(Crossover {
                a,
                b,
                t,
                score: la.score_at(t),
                degenerate: false,
            });
        }
    }
    set.crossovers.sort_by(|x, y| x.t.total_cmp(&y.t));
    // Any two crossovers at the same point that share an alternative mean at
    // least three lines pass through it.
    let n = set.crossovers.len();
    let mut degenerate = vec![false; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (&set.crossovers[i], &set.crossovers[j]);
            if (y.t - x.t).abs() > TIE_TOL {
                break;
            }
            let shares = x.a == y.a || x.a == y.b || x.b == y.a || x.b == y.b;
            if shares && (x.score - y.score).abs() <= TIE_TOL {
                degenerate[i] = true;
                degenerate[j] = true;
            }
        }
    }
    for (c, d) in set.crossovers.iter_mut().zip(degenerate) {
        c.degenerate = d;
    }
    set
}

/// Ranking at one point: alternatives by descending score, ties in
/// declaration order, with the tied pairs listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ties: Vec<(NodeId, NodeId)>,
}

pub fn rank_at(lines: &[ScoreLine], t: f64) -> Ranking {
    let scores: Vec<f64> = lines.iter().map(|l| l.score_at(t)).collect();
    rank_scores(lines, &scores)
}

fn rank_scores(lines: &[ScoreLine], scores: &[f64]) -> Ranking {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        if (scores[a] - scores[b]).abs() <= TIE_TOL {
            a.cmp(&b)
        } else {
            scores[b].total_cmp(&scores[a])
        }
    });
    let mut ties = Vec::new();
    for w in idx.windows(2) {
        if (scores[w[0]] - scores[w[1]]).abs() <= TIE_TOL {
            ties.push((lines[w[0]].alternative.clone(), lines[w[1]].alternative.clone()));
        }
    }
    Ranking {
        order: idx.into_iter().map(|i| lines[i].alternative.clone()).collect(),
        ties,
    }
}

/// Interval of `t` over which the ranking is constant (ranking taken at the
/// interior; endpoints are crossover points or 0/1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSegment {
    pub start: f64,
    pub end: f64,
    pub ranking: Vec<NodeId>,
}

impl RankSegment {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

fn rank_segments(lines: &[ScoreLine], set: &CrossoverSet) -> Vec<RankSegment> {
    let mut cuts = vec![0.0];
    for c in &set.crossovers {
        if c.t - cuts.last().copied().unwrap_or(0.0) > TIE_TOL {
            cuts.push(c.t);
        }
    }
    cuts.push(1.0);
    let mut segments: Vec<RankSegment> = Vec::new();
    for w in cuts.windows(2) {
        let ranking = rank_at(lines, 0.5 * (w[0] + w[1])).order;
        match segments.last_mut() {
            Some(prev) if prev.ranking == ranking => prev.end = w[1],
            _ => segments.push(RankSegment {
                start: w[0],
                end: w[1],
                ranking,
            }),
        }
    }
    segments
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: f64,
    pub scores: Vec<f64>,
    pub ranking: Vec<NodeId>,
}

/// Full what-if analysis for one top-level criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub criterion: NodeId,
    pub criterion_label: String,
    pub base_weight: f64,
    pub lines: Vec<ScoreLine>,
    pub crossovers: Vec<Crossover>,
    pub standing_ties: Vec<(NodeId, NodeId)>,
    /// Partition of `[0, 1]` into constant-ranking intervals.
    pub rank_segments: Vec<RankSegment>,
    pub base_ranking: Ranking,
    pub ranking_at_zero: Ranking,
    /// The ranking at `t = 0` differs from the base ranking.
    pub reversal_at_zero: bool,
    /// Pairs ordered differently at `t = 0` than at the base weight
    /// (first element was ahead at the base weight).
    pub swaps_at_zero: Vec<(NodeId, NodeId)>,
    /// The top alternative changes somewhere on `[0, w₀]`.
    pub rank_one_changes_below_base: bool,
    /// The top alternative changes somewhere on `[0, 1)`.
    pub rank_one_changes: bool,
}

impl SensitivityReport {
    pub fn scores_at(&self, t: f64) -> Vec<f64> {
        self.lines.iter().map(|l| l.score_at(t)).collect()
    }

    pub fn ranking_at(&self, t: f64) -> Ranking {
        rank_at(&self.lines, t)
    }

    /// Evaluation on `0, step, 2·step, …, 1` for tables and plots.
    pub fn grid(&self, step: f64) -> Vec<GridPoint> {
        let step = if step > 0.0 { step } else { DEFAULT_GRID_STEP };
        let n = (1.0 / step).round().max(1.0) as usize;
        (0..=n)
            .map(|i| {
                let t = (i as f64 / n as f64).min(1.0);
                GridPoint {
                    t,
                    scores: self.scores_at(t),
                    ranking: self.ranking_at(t).order,
                }
            })
            .collect()
    }
}

/// Builds the report for one top-level criterion from a synthesis result.
pub fn sensitivity_report(
    model: &DecisionModel,
    result: &SynthesisResult,
    criterion: &str,
) -> Result<SensitivityReport, SensitivityError> {
    let lines = score_lines(model, result, criterion)?;
    let base_weight = result.global_weight(criterion).unwrap_or_default();
    let set = crossovers(&lines);
    let rank_segments = rank_segments(&lines, &set);

    let base_scores: Vec<f64> = result.alternative_scores.iter().map(|s| s.score).collect();
    let base_ranking = rank_scores(&lines, &base_scores);
    let ranking_at_zero = rank_at(&lines, 0.0);

    let position = |ranking: &Ranking, id: &NodeId| ranking.order.iter().position(|x| x == id);
    let mut swaps_at_zero = Vec::new();
    for (i, a) in base_ranking.order.iter().enumerate() {
        for b in &base_ranking.order[i + 1..] {
            if position(&ranking_at_zero, a) > position(&ranking_at_zero, b) {
                swaps_at_zero.push((a.clone(), b.clone()));
            }
        }
    }

    let top = base_ranking.order.first().cloned();
    let changes_on = |hi: f64| {
        ranking_at_zero.order.first() != top.as_ref()
            || rank_segments
                .iter()
                .filter(|s| s.start < hi)
                .any(|s| s.ranking.first() != top.as_ref())
    };
    let rank_one_changes_below_base = changes_on(base_weight);
    let rank_one_changes = changes_on(1.0);

    Ok(SensitivityReport {
        criterion: criterion.into(),
        criterion_label: model.label(criterion).unwrap_or_default().to_owned(),
        base_weight,
        lines,
        crossovers: set.crossovers,
        standing_ties: set.standing_ties,
        rank_segments,
        reversal_at_zero: ranking_at_zero.order != base_ranking.order,
        base_ranking,
        ranking_at_zero,
        swaps_at_zero,
        rank_one_changes_below_base,
        rank_one_changes,
    })
}

/// Reports for every top-level criterion of an already synthesized model.
pub fn reports_for(
    model: &DecisionModel,
    result: &SynthesisResult,
    execution: Execution,
) -> Result<Vec<SensitivityReport>, SensitivityError> {
    execution
        .map(model.criteria(), |c| sensitivity_report(model, result, c.as_str()))
        .into_iter()
        .collect()
}

/// Synthesizes the model and reports on every top-level criterion.
pub fn reversal_report(model: &DecisionModel, opts: &SolveOptions) -> Result<Vec<SensitivityReport>, SensitivityError> {
    let result = synthesize(model, opts)?;
    reports_for(model, &result, opts.execution)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(alt: &str, p: f64, r: f64) -> ScoreLine {
        ScoreLine {
            alternative: alt.into(),
            criterion: "k".into(),
            slope_point: p,
            rest_point: r,
        }
    }

    #[test]
    fn perturbation_arithmetic() {
        let base = [0.241, 0.175, 0.175, 0.409];
        let zero = perturb_weights(&base, 3, 0.0).unwrap();
        let expected = [0.241 / 0.591, 0.175 / 0.591, 0.175 / 0.591, 0.0];
        for (z, e) in zero.iter().zip(expected) {
            assert!((z - e).abs() < 1e-15);
        }
        assert!((zero[0] - 0.4078).abs() < 5e-5);
        assert!((zero[1] - 0.2961).abs() < 5e-5);

        let same = perturb_weights(&base, 3, 0.409).unwrap();
        for (s, b) in same.iter().zip(base) {
            assert!((s - b).abs() < 1e-15);
        }
        assert_eq!(perturb_weights(&base, 3, 1.0).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn perturbation_errors() {
        assert_eq!(
            perturb_weights(&[1.0, 0.0], 0, 0.5).unwrap_err(),
            SensitivityError::FullWeight(1.0)
        );
        assert_eq!(perturb_weights(&[1.0, 0.0], 0, 1.0).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(
            perturb_weights(&[0.5, 0.5], 0, 1.5),
            Err(SensitivityError::InvalidT(_))
        ));
        assert!(matches!(
            perturb_weights(&[0.5, 0.6], 0, 0.5),
            Err(SensitivityError::NotNormalized(_))
        ));
        assert!(matches!(
            perturb_weights(&[0.5, 0.5], 2, 0.5),
            Err(SensitivityError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn line_reproduces_base_score() {
        let l = line("a", 0.6, 0.3);
        assert!((l.score_at(0.25) - 0.375).abs() < 1e-15);
        let flat = line("b", 0.4, 0.4);
        assert!((flat.score_at(0.0) - flat.score_at(1.0)).abs() < 1e-15);
    }

    #[test]
    fn crossover_closed_form() {
        let set = crossovers(&[line("a", 0.6, 0.3), line("b", 0.2, 0.5)]);
        assert_eq!(set.crossovers.len(), 1);
        let c = &set.crossovers[0];
        assert!((c.t - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.score - 0.4).abs() < 1e-15);
        // b leads at t = 0, a at t = 1.
        assert_eq!((c.a.as_str(), c.b.as_str()), ("b", "a"));
        assert!(!c.degenerate);
    }

    #[test]
    fn identical_lines_are_a_standing_tie() {
        let set = crossovers(&[line("a", 0.5, 0.5), line("b", 0.5, 0.5)]);
        assert!(set.crossovers.is_empty());
        assert_eq!(set.standing_ties, vec![(NodeId::from("a"), NodeId::from("b"))]);
    }

    #[test]
    fn three_lines_through_one_point_are_degenerate() {
        // All pass through (0.5, 0.4).
        let set = crossovers(&[line("a", 0.6, 0.2), line("b", 0.2, 0.6), line("c", 0.4, 0.4)]);
        assert_eq!(set.crossovers.len(), 3);
        assert!(set.crossovers.iter().all(|c| c.degenerate && (c.t - 0.5).abs() < 1e-12));
    }

    #[test]
    fn segments_partition_unit_interval() {
        let lines = [line("a", 0.6, 0.3), line("b", 0.2, 0.5), line("c", 0.2, 0.2)];
        let set = crossovers(&lines);
        let segs = rank_segments(&lines, &set);
        assert_eq!(segs.first().unwrap().start, 0.0);
        assert_eq!(segs.last().unwrap().end, 1.0);
        for w in segs.windows(2) {
            assert_eq!(w[0].end, w[1].start);
            assert_ne!(w[0].ranking, w[1].ranking);
        }
        assert_eq!(segs.len(), 2);
    }
}

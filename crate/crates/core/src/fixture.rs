//! The bundled information-security evaluation case and the search that
//! produced its judgments.
//!
//! Only aggregate results of that evaluation are published: criteria weights,
//! alternative scores, an overall inconsistency figure and two qualitative
//! sensitivity observations. [`fit_fixture`] searches the finite space of
//! ternary judgments for a model reproducing them, and records how close it
//! got in a [`Provenance`] report that ships next to the fixture.
//!
//! Search outline:
//!
//! 1. The goal's criteria matrix is enumerated exhaustively
//!    (`3^(n(n−1)/2)` candidates, 729 for four criteria) and ranked by max-norm
//!    residual against the criteria targets.
//! 2. With criteria weights fixed, every other context picks one of the
//!    ternary matrices of its order that pass the consistency gate. A
//!    coordinate-descent local search with seeded random restarts minimizes
//!    score residual + sensitivity-constraint hinge penalties +
//!    distance to the target overall inconsistency.
//! 3. The best assignment is rebuilt as a real model and re-checked through
//!    [`synthesize`] and [`reports_for`].
//!
//! θ = 3 is tried first; only if that is infeasible are other θ in `(1, 9]`
//! scanned.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::document::{parse, serialize};
use crate::exec::Execution;
use crate::matrix::ComparisonMatrix;
use crate::model::{ContextKind, DecisionModel, ModelError, NodeId, TernaryValue, Theta};
use crate::priority::{principal_eigenvector, ConsistencyGate, PowerIteration, PriorityVector, RandomIndexTable};
use crate::sensitivity::reports_for;
use crate::synthesis::{synthesize, SolveOptions, SynthesisError};

/// Fixture model document.
pub const INFOSEC_DOCUMENT: &str = include_str!("../fixtures/infosec.json");
/// Provenance report written by the search that produced [`INFOSEC_DOCUMENT`].
pub const INFOSEC_PROVENANCE: &str = include_str!("../fixtures/infosec.provenance.json");

pub fn infosec_model() -> DecisionModel {
    parse(INFOSEC_DOCUMENT).expect("bundled fixture parses")
}

pub fn infosec_provenance() -> Provenance {
    serde_json::from_str(INFOSEC_PROVENANCE).expect("bundled provenance parses")
}

/// Hierarchy of the information-security case without judgments.
///
/// Culture's two sub-criteria are named in the published case; the other
/// eight sub-criteria are unnamed there and carry placeholder labels.
pub fn infosec_skeleton() -> DecisionModel {
    let mut b = DecisionModel::builder("infosec-evaluation")
        .theta(Theta::DEFAULT.get())
        .goal("infosec", "Information Security Evaluation")
        .criterion("management", "Management")
        .criterion("technology", "Technology")
        .criterion("economy", "Economy")
        .criterion("culture", "Culture");
    for (parent, prefix, count) in [
        ("management", "Management", 3),
        ("technology", "Technology", 3),
        ("economy", "Economy", 2),
    ] {
        for k in 1..=count {
            b = b.sub_criterion(
                parent,
                format!("{parent}-{k}"),
                format!("{prefix} sub-criterion {k} (placeholder)"),
            );
        }
    }
    b.sub_criterion("culture", "security-education", "Security education")
        .sub_criterion("culture", "reward-punishment", "Reward/punishment")
        .alternative("confidentiality", "Confidentiality")
        .alternative("integrity", "Integrity")
        .alternative("availability", "Availability")
        .build()
        .expect("skeleton is well formed")
}

/// Published aggregates of the information-security case.
pub fn infosec_targets() -> FitTargets {
    let t = |id: &str, value: f64| Target { id: id.into(), value };
    let ids = |v: &[&str]| v.iter().map(|s| NodeId::from(*s)).collect::<Vec<_>>();
    let usual = ids(&["confidentiality", "integrity", "availability"]);
    FitTargets {
        criteria: vec![
            t("management", 0.241),
            t("technology", 0.175),
            t("economy", 0.175),
            t("culture", 0.409),
        ],
        alternatives: vec![
            t("confidentiality", 0.409),
            t("integrity", 0.314),
            t("availability", 0.277),
        ],
        overall_inconsistency: Some(0.04),
        rank_one_stable: true,
        rankings_at_zero: vec![
            ZeroRanking {
                criterion: "management".into(),
                ranking: usual.clone(),
            },
            ZeroRanking {
                criterion: "technology".into(),
                ranking: usual.clone(),
            },
            ZeroRanking {
                criterion: "economy".into(),
                ranking: usual,
            },
            ZeroRanking {
                criterion: "culture".into(),
                ranking: ids(&["confidentiality", "availability", "integrity"]),
            },
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub id: NodeId,
    pub value: f64,
}

/// Expected ranking when a criterion's weight is lowered to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRanking {
    pub criterion: NodeId,
    pub ranking: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTargets {
    /// Local weights of the goal's criteria.
    pub criteria: Vec<Target>,
    /// Final alternative scores.
    pub alternatives: Vec<Target>,
    #[serde(default)]
    pub overall_inconsistency: Option<f64>,
    /// The top-scoring alternative must stay on top for every criterion over the whole of `[0, 1]`.
    #[serde(default)]
    pub rank_one_stable: bool,
    #[serde(default)]
    pub rankings_at_zero: Vec<ZeroRanking>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Max-norm residual accepted on every target.
    pub tolerance: f64,
    /// Score gap the search asks for wherever an ordering is constrained.
    pub margin: f64,
    /// θ tried first.
    pub preferred_theta: f64,
    /// Spacing of the fallback θ scan over `(1, 9]`.
    pub theta_step: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Every context of the fitted model must pass this gate.
    pub gate: ConsistencyGate,
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tolerance: 0.005,
            margin: 0.005,
            preferred_theta: Theta::DEFAULT.get(),
            theta_step: 0.05,
            restarts: 96,
            seed: 0x7a4e_5eed,
            gate: ConsistencyGate::default(),
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Achieved {
    pub id: NodeId,
    pub target: f64,
    pub achieved: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub thetas_tried: usize,
    pub criteria_candidates: usize,
    pub restarts: usize,
    pub seed: u64,
    pub objective: f64,
}

/// What the fitted model achieves against its targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub note: String,
    pub theta: f64,
    pub tolerance: f64,
    pub criteria: Vec<Achieved>,
    pub alternatives: Vec<Achieved>,
    pub overall_inconsistency: f64,
    pub overall_inconsistency_target: Option<f64>,
    pub max_residual: f64,
    pub max_context_cr: f64,
    pub within_tolerance: bool,
    pub sensitivity_constraints_met: bool,
    pub search: SearchStats,
}

impl Provenance {
    pub fn feasible(&self) -> bool {
        self.within_tolerance && self.sensitivity_constraints_met
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: DecisionModel,
    pub provenance: Provenance,
}

impl FitOutcome {
    pub fn document(&self) -> String {
        serialize(&self.model)
    }

    pub fn provenance_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.provenance).expect("provenance serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("no judgment assignment meets the targets; best max residual {:.4}", .0.provenance.max_residual)]
    Infeasible(Box<FitOutcome>),
}

impl FitError {
    pub fn code(&self) -> &'static str {
        match self {
            FitError::InvalidTargets(_) => "invalid_targets",
            FitError::TooLarge(_) => "search_too_large",
            FitError::Model(e) => e.code(),
            FitError::Synthesis(e) => e.code(),
            FitError::Infeasible(_) => "infeasible_targets",
        }
    }
}

/// Largest context order whose ternary matrices are enumerated.
const MAX_ENUMERATED_ORDER: usize = 5;

/// All upper-triangle assignments for an order-`n` matrix, Equal-first.
fn assignments(n: usize) -> Vec<Vec<TernaryValue>> {
    let pairs = n * n.saturating_sub(1) / 2;
    let total = 3usize.pow(pairs as u32);
    (0..total)
        .map(|mut code| {
            (0..pairs)
                .map(|_| {
                    let v = TernaryValue::ALL[code % 3];
                    code /= 3;
                    v
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone)]
struct MatrixOption {
    upper: Vec<TernaryValue>,
    pv: PriorityVector,
}

fn options_for(order: usize, theta: Theta, gate: ConsistencyGate, execution: Execution) -> Vec<MatrixOption> {
    let table = RandomIndexTable::saaty();
    let params = PowerIteration::default();
    let candidates = assignments(order);
    execution
        .map(&candidates, |upper| {
            let m = ComparisonMatrix::from_ternary(order, theta, upper).ok()?;
            let pv = principal_eigenvector(&m, &params, &table).ok()?;
            gate.passes(&pv).then(|| MatrixOption {
                upper: upper.clone(),
                pv,
            })
        })
        .into_iter()
        .flatten()
        .collect()
}

fn check_targets(model: &DecisionModel, targets: &FitTargets) -> Result<(Vec<f64>, Vec<f64>), FitError> {
    fn ordered(expected: &[NodeId], given: &[Target], what: &str) -> Result<Vec<f64>, FitError> {
        if given.len() != expected.len() {
            return Err(FitError::InvalidTargets(format!(
                "{} {what} targets for {} {what}",
                given.len(),
                expected.len()
            )));
        }
        let values = expected
            .iter()
            .map(|id| {
                given
                    .iter()
                    .find(|t| t.id == *id)
                    .map(|t| t.value)
                    .ok_or_else(|| FitError::InvalidTargets(format!("no {what} target for `{id}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(FitError::InvalidTargets(format!("{what} targets must be positive")));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(FitError::InvalidTargets(format!(
                "{what} targets sum to {sum}, expected 1"
            )));
        }
        Ok(values)
    }
    let criteria = ordered(model.criteria(), &targets.criteria, "criteria")?;
    let alternatives = ordered(model.alternatives(), &targets.alternatives, "alternatives")?;
    for z in &targets.rankings_at_zero {
        if !model.criteria().contains(&z.criterion) {
            return Err(FitError::InvalidTargets(format!(
                "`{}` is not a top-level criterion",
                z.criterion
            )));
        }
        let mut sorted = z.ranking.clone();
        sorted.sort();
        let mut alts = model.alternatives().to_vec();
        alts.sort();
        if sorted != alts {
            return Err(FitError::InvalidTargets(format!(
                "ranking for `{}` is not a permutation of the alternatives",
                z.criterion
            )));
        }
    }
    Ok((criteria, alternatives))
}

/// Index-based view of the model used inside the local search.
struct Problem {
    criteria_weights: Vec<f64>,
    goal_ci: f64,
    goal_ri: f64,
    /// Per criterion: `None` for a leaf criterion, else its sub-criteria context.
    branches: Vec<Branch>,
    /// Context order of every decision variable.
    var_orders: Vec<usize>,
    alt_targets: Vec<f64>,
    ci_target: Option<f64>,
    top: Option<usize>,
    zero_orders: Vec<(usize, Vec<usize>)>,
    margin: f64,
}

struct Branch {
    /// Variable index of the sub-criteria context, if the criterion has one.
    sub: Option<usize>,
    /// Variable indices of the alternative contexts under this criterion.
    leaves: Vec<usize>,
}

struct Tables {
    ri: RandomIndexTable,
    /// Options by context order.
    by_order: Vec<Vec<MatrixOption>>,
}

impl Tables {
    fn options(&self, order: usize) -> &[MatrixOption] {
        &self.by_order[order]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    objective: f64,
    residual: f64,
    penalty: f64,
}

impl Problem {
    fn evaluate(&self, tables: &Tables, choice: &[usize]) -> Score {
        let n_alt = self.alt_targets.len();
        let pv = |var: usize| &tables.options(self.var_orders[var])[choice[var]].pv;
        let ri = |n: usize| tables.ri.get(n).unwrap_or(0.0);

        let mut num = self.goal_ci;
        let mut den = self.goal_ri;
        let mut branch_p = vec![vec![0.0; n_alt]; self.branches.len()];
        let mut scores = vec![0.0; n_alt];
        for (k, br) in self.branches.iter().enumerate() {
            let wk = self.criteria_weights[k];
            let shares: Vec<f64> = match br.sub {
                Some(sub) => {
                    let s = pv(sub);
                    num += wk * s.ci;
                    den += wk * ri(s.order());
                    s.weights.clone()
                }
                None => vec![1.0],
            };
            for (&leaf, share) in br.leaves.iter().zip(&shares) {
                let a = pv(leaf);
                let g = wk * share;
                num += g * a.ci;
                den += g * ri(a.order());
                for (p, w) in branch_p[k].iter_mut().zip(&a.weights) {
                    *p += share * w;
                }
            }
            for (s, p) in scores.iter_mut().zip(&branch_p[k]) {
                *s += wk * p;
            }
        }

        let residual = scores
            .iter()
            .zip(&self.alt_targets)
            .map(|(s, t)| (s - t).abs())
            .fold(0.0, f64::max);

        let hinge = |gap: f64| (self.margin - gap).max(0.0);
        let mut penalty = 0.0;
        for (k, p) in branch_p.iter().enumerate() {
            let wk = self.criteria_weights[k];
            if wk >= 1.0 {
                continue;
            }
            let rest: Vec<f64> = scores.iter().zip(p).map(|(s, pk)| (s - wk * pk) / (1.0 - wk)).collect();
            if let Some(top) = self.top {
                for a in (0..n_alt).filter(|&a| a != top) {
                    penalty += hinge(rest[top] - rest[a]) + hinge(p[top] - p[a]);
                }
            }
            for (_, order) in self.zero_orders.iter().filter(|(c, _)| *c == k) {
                for w in order.windows(2) {
                    penalty += hinge(rest[w[0]] - rest[w[1]]);
                }
            }
        }

        let crh = if den > 0.0 { num / den } else { 0.0 };
        let ci_term = self.ci_target.map_or(0.0, |t| 0.3 * (crh - t).abs());
        Score {
            objective: residual + penalty + ci_term,
            residual,
            penalty,
        }
    }

    fn local_search(&self, tables: &Tables, mut choice: Vec<usize>) -> (Vec<usize>, Score) {
        let mut current = self.evaluate(tables, &choice);
        loop {
            let mut improved = false;
            for var in 0..choice.len() {
                let count = tables.options(self.var_orders[var]).len();
                for option in 0..count {
                    if option == choice[var] {
                        continue;
                    }
                    let previous = choice[var];
                    choice[var] = option;
                    let score = self.evaluate(tables, &choice);
                    if score.objective < current.objective - 1e-12 {
                        current = score;
                        improved = true;
                    } else {
                        choice[var] = previous;
                    }
                }
            }
            if !improved {
                return (choice, current);
            }
        }
    }
}

struct Attempt {
    outcome: FitOutcome,
    objective: f64,
}

fn fit_at_theta(
    skeleton: &DecisionModel,
    targets: &FitTargets,
    criteria_targets: &[f64],
    alt_targets: &[f64],
    theta: Theta,
    opts: &FitOptions,
) -> Result<Attempt, FitError> {
    let mut model = skeleton.clone();
    model.set_theta(theta);
    let contexts = model.contexts().to_vec();
    let goal_ctx = &contexts[0];
    let n_crit = goal_ctx.order();
    if n_crit > MAX_ENUMERATED_ORDER {
        return Err(FitError::TooLarge(format!(
            "{n_crit} criteria (at most {MAX_ENUMERATED_ORDER})"
        )));
    }
    let ri = RandomIndexTable::saaty();

    // Stage 1: exhaustive criteria matrix.
    let all_goal = options_for(n_crit, theta, opts.gate, opts.execution);
    let criteria_candidates = assignments(n_crit).len();
    let residual = |pv: &PriorityVector| {
        pv.weights
            .iter()
            .zip(criteria_targets)
            .map(|(w, t)| (w - t).abs())
            .fold(0.0, f64::max)
    };
    let goal = all_goal
        .iter()
        .min_by(|a, b| residual(&a.pv).total_cmp(&residual(&b.pv)))
        .ok_or_else(|| FitError::InvalidTargets("no criteria matrix passes the consistency gate".into()))?
        .clone();

    // Stage 2: every other context is a decision variable.
    let var_contexts: Vec<_> = contexts[1..].to_vec();
    let max_order = var_contexts.iter().map(|c| c.order()).max().unwrap_or(1);
    if max_order > MAX_ENUMERATED_ORDER {
        return Err(FitError::TooLarge(format!(
            "context of order {max_order} (at most {MAX_ENUMERATED_ORDER})"
        )));
    }
    let by_order: Vec<Vec<MatrixOption>> = (0..=max_order)
        .map(|n| {
            if n == 0 {
                Vec::new()
            } else {
                options_for(n, theta, opts.gate, opts.execution)
            }
        })
        .collect();
    let tables = Tables {
        ri: ri.clone(),
        by_order,
    };
    let var_of = |id: &NodeId| var_contexts.iter().position(|c| c.id == *id);

    let branches = model
        .criteria()
        .iter()
        .map(|c| Branch {
            sub: var_contexts
                .iter()
                .position(|ctx| ctx.id == *c && ctx.kind == ContextKind::Criteria),
            leaves: model
                .leaves_under(c.as_str())
                .iter()
                .map(|leaf| var_of(leaf).expect("every leaf owns an alternative context"))
                .collect(),
        })
        .collect();
    let alternatives = model.alternatives().to_vec();
    let alt_index = |id: &NodeId| alternatives.iter().position(|a| a == id).expect("checked target ids");
    let problem = Problem {
        criteria_weights: goal.pv.weights.clone(),
        goal_ci: goal.pv.ci,
        goal_ri: ri.get(n_crit).unwrap_or(0.0),
        branches,
        var_orders: var_contexts.iter().map(|c| c.order()).collect(),
        alt_targets: alt_targets.to_vec(),
        ci_target: targets.overall_inconsistency,
        top: targets.rank_one_stable.then(|| {
            (0..alt_targets.len())
                .max_by(|&a, &b| alt_targets[a].total_cmp(&alt_targets[b]).then(b.cmp(&a)))
                .expect("at least two alternatives")
        }),
        zero_orders: targets
            .rankings_at_zero
            .iter()
            .map(|z| {
                let k = model
                    .criteria()
                    .iter()
                    .position(|c| *c == z.criterion)
                    .expect("checked");
                (k, z.ranking.iter().map(alt_index).collect())
            })
            .collect(),
        margin: opts.margin,
    };

    let n_vars = var_contexts.len();
    let restarts = opts.restarts.max(1);
    let runs = opts.execution.map_range(restarts, |r| {
        let start: Vec<usize> = if r == 0 {
            // Option 0 of every order is the all-Equal matrix.
            vec![0; n_vars]
        } else {
            let mut rng = StdRng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            problem
                .var_orders
                .iter()
                .map(|&n| rng.gen_range(0..tables.options(n).len()))
                .collect()
        };
        problem.local_search(&tables, start)
    });
    let (choice, score) = runs
        .into_iter()
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective))
        .expect("at least one restart");

    // Rebuild as a real model and check it through the public pipeline.
    let upper_pairs = |ctx: &crate::model::Context| {
        let mut pairs = Vec::new();
        for i in 0..ctx.order() {
            for j in (i + 1)..ctx.order() {
                pairs.push((ctx.members[i].clone(), ctx.members[j].clone()));
            }
        }
        pairs
    };
    for ((i, j), v) in upper_pairs(goal_ctx).into_iter().zip(&goal.upper) {
        model.set_judgment(goal_ctx.id.as_str(), i.as_str(), j.as_str(), *v)?;
    }
    for (var, ctx) in var_contexts.iter().enumerate() {
        let option = &tables.options(ctx.order())[choice[var]];
        for ((i, j), v) in upper_pairs(ctx).into_iter().zip(&option.upper) {
            model.set_judgment(ctx.id.as_str(), i.as_str(), j.as_str(), *v)?;
        }
    }

    let solve = SolveOptions {
        execution: opts.execution,
        ..SolveOptions::default()
    };
    let result = synthesize(&model, &solve)?;
    let reports = reports_for(&model, &result, opts.execution).map_err(|e| match e {
        crate::sensitivity::SensitivityError::Synthesis(s) => FitError::Synthesis(s),
        other => FitError::InvalidTargets(other.to_string()),
    })?;

    let achieved = |given: &[Target], value: &dyn Fn(&str) -> f64| -> Vec<Achieved> {
        given
            .iter()
            .map(|t| {
                let a = value(t.id.as_str());
                Achieved {
                    id: t.id.clone(),
                    target: t.value,
                    achieved: a,
                    residual: (a - t.value).abs(),
                }
            })
            .collect()
    };
    let criteria = achieved(&targets.criteria, &|id| result.global_weight(id).unwrap_or(f64::NAN));
    let alternatives_achieved = achieved(&targets.alternatives, &|id| result.score(id).unwrap_or(f64::NAN));
    let max_residual = criteria
        .iter()
        .chain(&alternatives_achieved)
        .map(|a| a.residual)
        .fold(0.0, f64::max);
    let max_context_cr = result.per_context.iter().map(|pv| pv.cr).fold(0.0, f64::max);

    let top = result.ranking().first().cloned();
    let stable = !targets.rank_one_stable
        || reports
            .iter()
            .all(|r| !r.rank_one_changes && r.base_ranking.order.first() == top.as_ref());
    let zero_ok = targets.rankings_at_zero.iter().all(|z| {
        reports
            .iter()
            .find(|r| r.criterion == z.criterion)
            .is_some_and(|r| r.ranking_at_zero.order == z.ranking)
    });

    let provenance = Provenance {
        note: "Judgments found by search against published aggregate weights; they are not elicited survey answers."
            .into(),
        theta: theta.get(),
        tolerance: opts.tolerance,
        criteria,
        alternatives: alternatives_achieved,
        overall_inconsistency: result.overall_inconsistency,
        overall_inconsistency_target: targets.overall_inconsistency,
        max_residual,
        max_context_cr,
        within_tolerance: max_residual <= opts.tolerance && max_context_cr <= opts.gate.threshold,
        sensitivity_constraints_met: stable && zero_ok,
        search: SearchStats {
            thetas_tried: 1,
            criteria_candidates,
            restarts,
            seed: opts.seed,
            objective: score.objective,
        },
    };
    Ok(Attempt {
        outcome: FitOutcome { model, provenance },
        objective: score.objective,
    })
}

/// Searches ternary judgments for `skeleton` that reproduce `targets`.
///
/// Returns [`FitError::Infeasible`] carrying the best attempt when nothing
/// meets the tolerance and sensitivity constraints at any θ.
pub fn fit_fixture(skeleton: &DecisionModel, targets: &FitTargets, opts: &FitOptions) -> Result<FitOutcome, FitError> {
    let (criteria_targets, alt_targets) = check_targets(skeleton, targets)?;
    if opts.tolerance.is_nan() || opts.tolerance <= 0.0 || opts.theta_step.is_nan() || opts.theta_step <= 0.0 {
        return Err(FitError::InvalidTargets(
            "tolerance and theta step must be positive".into(),
        ));
    }
    let preferred = Theta::new(opts.preferred_theta)?;
    let first = fit_at_theta(skeleton, targets, &criteria_targets, &alt_targets, preferred, opts)?;
    if first.outcome.provenance.feasible() {
        return Ok(first.outcome);
    }

    let mut best = first;
    let mut tried = 1;
    let steps = (8.0 / opts.theta_step).floor() as usize;
    for k in 1..=steps {
        let value = 1.0 + k as f64 * opts.theta_step;
        let Ok(theta) = Theta::new(value) else { continue };
        if (value - opts.preferred_theta).abs() < 1e-12 {
            continue;
        }
        tried += 1;
        let attempt = fit_at_theta(skeleton, targets, &criteria_targets, &alt_targets, theta, opts)?;
        let better = match (
            attempt.outcome.provenance.feasible(),
            best.outcome.provenance.feasible(),
        ) {
            (true, false) => true,
            (false, true) => false,
            _ => attempt.objective < best.objective,
        };
        if better {
            best = attempt;
        }
    }
    best.outcome.provenance.search.thetas_tried = tried;
    if best.outcome.provenance.feasible() {
        Ok(best.outcome)
    } else {
        Err(FitError::Infeasible(Box::new(best.outcome)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_enumeration() {
        assert_eq!(assignments(1), vec![Vec::<TernaryValue>::new()]);
        assert_eq!(assignments(3).len(), 27);
        assert_eq!(assignments(4).len(), 729);
        assert!(assignments(4)[0].iter().all(|v| *v == TernaryValue::Equal));
    }

    #[test]
    fn only_consistent_three_by_three_pass_the_gate_at_theta_three() {
        let opts = options_for(3, Theta::DEFAULT, ConsistencyGate::default(), Execution::Sequential);
        assert_eq!(opts.len(), 7);
        assert!(opts.iter().all(|o| o.pv.cr < 1e-9));
    }

    #[test]
    fn uniform_targets_give_all_equal_judgments() {
        let skeleton = DecisionModel::builder("u")
            .goal("g", "G")
            .criterion("a", "A")
            .criterion("b", "B")
            .criterion("c", "C")
            .alternative("x", "X")
            .alternative("y", "Y")
            .build()
            .unwrap();
        let third = 1.0 / 3.0;
        let targets = FitTargets {
            criteria: ["a", "b", "c"]
                .map(|id| Target {
                    id: id.into(),
                    value: third,
                })
                .to_vec(),
            alternatives: ["x", "y"]
                .map(|id| Target {
                    id: id.into(),
                    value: 0.5,
                })
                .to_vec(),
            overall_inconsistency: None,
            rank_one_stable: false,
            rankings_at_zero: Vec::new(),
        };
        let opts = FitOptions {
            restarts: 4,
            ..FitOptions::default()
        };
        let out = fit_fixture(&skeleton, &targets, &opts).unwrap();
        assert!(out.provenance.max_residual < 1e-12);
        for ctx in out.model.contexts() {
            for (_, _, v) in out.model.judgments_in(ctx.id.as_str()).unwrap() {
                assert_eq!(v, TernaryValue::Equal);
            }
        }
    }

    #[test]
    fn targets_must_sum_to_one() {
        let mut targets = infosec_targets();
        targets.criteria[0].value = 0.5;
        let err = fit_fixture(&infosec_skeleton(), &targets, &FitOptions::default()).unwrap_err();
        assert_eq!(err.code(), "invalid_targets");
    }

    #[test]
    fn skeleton_shape() {
        let s = infosec_skeleton();
        assert_eq!(s.contexts().len(), 15);
        assert_eq!(s.criteria().len(), 4);
        assert_eq!(s.alternatives().len(), 3);
    }
}

//! Bottom-up aggregation of local priorities into global weights and scores.
//!
//! Global weight of the goal is 1; every other criteria-tree node gets its
//! parent's global weight times its own local weight. An alternative's score
//! is the sum over criteria-tree leaves of `global(leaf) × local(alt | leaf)`.
//!
//! Overall inconsistency is the hierarchical ratio
//! `Σ g(c)·CI(c) / Σ g(c)·RI(n_c)` over all contexts `c`, with `g(c)` the
//! global weight of the node owning the context. It is 0 when every context
//! has order ≤ 2.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{DecisionModel, Level, ModelError, NodeId, ValidationReport};
use crate::priority::{self, Method, PowerIteration, PriorityError, PriorityVector, RandomIndexTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: Method,
    pub iteration: PowerIteration,
    pub random_index: RandomIndexTable,
    pub execution: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::Eigenvector,
            iteration: PowerIteration::default(),
            random_index: RandomIndexTable::saaty(),
            execution: Execution::Parallel,
        }
    }
}

impl SolveOptions {
    pub fn sequential() -> Self {
        SolveOptions {
            execution: Execution::Sequential,
            ..Self::default()
        }
    }
}

/// Unjudged pairs of one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingJudgments {
    pub context: NodeId,
    pub pairs: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("model is structurally invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("{} context(s) have missing judgments", .0.len())]
    Incomplete(Vec<MissingJudgments>),
    #[error("context `{context}`: {source}")]
    Priority {
        context: NodeId,
        #[source]
        source: PriorityError,
    },
    #[error("no local priority vector for context `{0}`")]
    MissingLocal(NodeId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SynthesisError {
    pub fn code(&self) -> &'static str {
        match self {
            SynthesisError::Invalid(_) => "invalid_model",
            SynthesisError::Incomplete(_) => "incomplete_model",
            SynthesisError::Priority { source, .. } => source.code(),
            SynthesisError::MissingLocal(_) => "missing_local",
            SynthesisError::Model(e) => e.code(),
        }
    }

    pub fn locus(&self) -> Option<&NodeId> {
        match self {
            SynthesisError::Priority { context, .. } | SynthesisError::MissingLocal(context) => Some(context),
            SynthesisError::Model(e) => e.locus(),
            SynthesisError::Incomplete(m) => m.first().map(|m| &m.context),
            SynthesisError::Invalid(r) => r.issues.iter().find_map(|i| i.locus.as_ref()),
        }
    }

    /// Computational failures, as opposed to problems with the model itself.
    pub fn is_computational(&self) -> bool {
        matches!(self, SynthesisError::Priority { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeWeight {
    pub id: NodeId,
    pub label: String,
    pub level: Level,
    pub parent: Option<NodeId>,
    pub local: f64,
    pub global: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeScore {
    pub id: NodeId,
    pub label: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub model: String,
    pub goal: NodeId,
    pub goal_label: String,
    pub theta: f64,
    pub method: Method,
    /// Criteria-tree nodes in pre-order, starting with the goal.
    pub global_weights: Vec<NodeWeight>,
    /// Alternatives in declaration order.
    pub alternative_scores: Vec<AlternativeScore>,
    pub overall_inconsistency: f64,
    /// One entry per context, in context order.
    pub per_context: Vec<PriorityVector>,
}

impl SynthesisResult {
    pub fn global_weight(&self, id: &str) -> Option<f64> {
        self.global_weights
            .iter()
            .find(|w| w.id.as_str() == id)
            .map(|w| w.global)
    }

    pub fn score(&self, id: &str) -> Option<f64> {
        self.alternative_scores
            .iter()
            .find(|s| s.id.as_str() == id)
            .map(|s| s.score)
    }

    pub fn local(&self, context: &str) -> Option<&PriorityVector> {
        self.per_context
            .iter()
            .find(|pv| pv.context.as_ref().is_some_and(|c| c.as_str() == context))
    }

    /// Top-level criteria weights in declaration order.
    pub fn criteria_weights(&self) -> impl Iterator<Item = &NodeWeight> {
        self.global_weights.iter().filter(|w| w.level == Level::Criterion)
    }

    /// Alternatives by descending score; ties keep declaration order.
    pub fn ranking(&self) -> Vec<NodeId> {
        let mut idx: Vec<usize> = (0..self.alternative_scores.len()).collect();
        idx.sort_by(|&a, &b| {
            self.alternative_scores[b]
                .score
                .total_cmp(&self.alternative_scores[a].score)
                .then(a.cmp(&b))
        });
        idx.into_iter().map(|i| self.alternative_scores[i].id.clone()).collect()
    }

    pub fn locals(&self) -> BTreeMap<NodeId, PriorityVector> {
        self.per_context
            .iter()
            .filter_map(|pv| pv.context.clone().map(|c| (c, pv.clone())))
            .collect()
    }
}

/// Prioritizes every context. Contexts are independent, so they are spread
/// over the thread pool when `opts.execution` allows.
pub fn compute_locals(
    model: &DecisionModel,
    opts: &SolveOptions,
) -> Result<BTreeMap<NodeId, PriorityVector>, SynthesisError> {
    let results = opts.execution.map(model.contexts(), |ctx| {
        let matrix = model.matrix_for(ctx.id.as_str())?;
        priority::prioritize(&matrix, opts.method, &opts.iteration, &opts.random_index)
            .map(|pv| pv.with_context(ctx.id.clone()))
            .map_err(|source| SynthesisError::Priority {
                context: ctx.id.clone(),
                source,
            })
    });
    results
        .into_iter()
        .map(|r| r.map(|pv| (pv.context.clone().expect("context attached"), pv)))
        .collect()
}

fn local_of<'a>(
    locals: &'a BTreeMap<NodeId, PriorityVector>,
    context: &NodeId,
) -> Result<&'a PriorityVector, SynthesisError> {
    locals
        .get(context)
        .ok_or_else(|| SynthesisError::MissingLocal(context.clone()))
}

/// Global weight of every criteria-tree node, goal included (= 1).
pub fn global_weights(
    model: &DecisionModel,
    locals: &BTreeMap<NodeId, PriorityVector>,
) -> Result<BTreeMap<NodeId, f64>, SynthesisError> {
    let mut out = BTreeMap::new();
    let goal = model.goal().id.clone();
    let mut stack = vec![(goal, 1.0)];
    while let Some((id, weight)) = stack.pop() {
        let node = model
            .node(id.as_str())
            .ok_or_else(|| ModelError::UnknownNode(id.clone()))?;
        if !node.children.is_empty() {
            let pv = local_of(locals, &id)?;
            for (child, local) in node.children.iter().zip(&pv.weights) {
                stack.push((child.clone(), weight * local));
            }
        }
        out.insert(id, weight);
    }
    Ok(out)
}

/// Final score of every alternative, in declaration order.
pub fn alternative_scores(
    model: &DecisionModel,
    locals: &BTreeMap<NodeId, PriorityVector>,
    globals: &BTreeMap<NodeId, f64>,
) -> Result<Vec<f64>, SynthesisError> {
    let mut scores = vec![0.0; model.alternatives().len()];
    for leaf in model.leaves_under(model.goal().id.as_str()) {
        let g = *globals
            .get(&leaf)
            .ok_or_else(|| SynthesisError::MissingLocal(leaf.clone()))?;
        let pv = local_of(locals, &leaf)?;
        for (s, w) in scores.iter_mut().zip(&pv.weights) {
            *s += g * w;
        }
    }
    Ok(scores)
}

/// Hierarchical consistency ratio over all contexts.
pub fn overall_inconsistency(
    model: &DecisionModel,
    locals: &BTreeMap<NodeId, PriorityVector>,
    globals: &BTreeMap<NodeId, f64>,
    table: &RandomIndexTable,
) -> Result<f64, SynthesisError> {
    let mut weighted_ci = 0.0;
    let mut weighted_ri = 0.0;
    for ctx in model.contexts() {
        let g = *globals
            .get(&ctx.id)
            .ok_or_else(|| SynthesisError::MissingLocal(ctx.id.clone()))?;
        let pv = local_of(locals, &ctx.id)?;
        let ri = table.get(ctx.order()).ok_or_else(|| SynthesisError::Priority {
            context: ctx.id.clone(),
            source: PriorityError::OrderOutsideTable(ctx.order()),
        })?;
        weighted_ci += g * pv.ci;
        weighted_ri += g * ri;
    }
    Ok(if weighted_ri > 0.0 {
        weighted_ci / weighted_ri
    } else {
        0.0
    })
}

/// Validates, prioritizes every context and aggregates.
pub fn synthesize(model: &DecisionModel, opts: &SolveOptions) -> Result<SynthesisResult, SynthesisError> {
    let report = model.validate();
    if report.structural().next().is_some() {
        return Err(SynthesisError::Invalid(ValidationReport {
            issues: report.structural().cloned().collect(),
        }));
    }
    if !report.is_empty() {
        return Err(SynthesisError::Incomplete(
            report
                .issues
                .into_iter()
                .filter_map(|i| {
                    i.locus.map(|context| MissingJudgments {
                        context,
                        pairs: i.missing,
                    })
                })
                .collect(),
        ));
    }
    let locals = compute_locals(model, opts)?;
    assemble(model, locals, opts)
}

/// Builds a full result from precomputed local vectors.
pub fn assemble(
    model: &DecisionModel,
    locals: BTreeMap<NodeId, PriorityVector>,
    opts: &SolveOptions,
) -> Result<SynthesisResult, SynthesisError> {
    let globals = global_weights(model, &locals)?;
    let scores = alternative_scores(model, &locals, &globals)?;
    let overall = overall_inconsistency(model, &locals, &globals, &opts.random_index)?;

    let mut weights = Vec::new();
    let mut stack = vec![(model.goal().id.clone(), 1.0)];
    while let Some((id, local)) = stack.pop() {
        let node = model.node(id.as_str()).expect("node from model");
        if let Some(pv) = locals.get(&id).filter(|_| !node.children.is_empty()) {
            for (child, w) in node.children.iter().zip(&pv.weights).rev() {
                stack.push((child.clone(), *w));
            }
        }
        weights.push(NodeWeight {
            id: id.clone(),
            label: node.label.clone(),
            level: node.level,
            parent: node.parent.clone(),
            local,
            global: globals[&id],
        });
    }

    let alternative_scores = model
        .alternatives()
        .iter()
        .zip(scores)
        .map(|(id, score)| AlternativeScore {
            id: id.clone(),
            label: model.label(id.as_str()).unwrap_or_default().to_owned(),
            score,
        })
        .collect();

    let per_context = model
        .contexts()
        .iter()
        .map(|c| local_of(&locals, &c.id).cloned())
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SynthesisResult {
        model: model.name().to_owned(),
        goal: model.goal().id.clone(),
        goal_label: model.goal().label.clone(),
        theta: model.theta().get(),
        method: per_context.first().map_or(opts.method, |pv| pv.method),
        global_weights: weights,
        alternative_scores,
        overall_inconsistency: overall,
        per_context,
    })
}

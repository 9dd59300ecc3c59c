//! Decision hierarchy, ternary judgment scale and judgment storage.
//!
//! A model is a tree rooted at a single goal. The goal's children are
//! criteria; a criterion may group sub-criteria. Alternatives are a single
//! shared ordered set, compared once under every leaf of the criteria tree.
//!
//! Each node of the criteria tree owns exactly one *comparison context*:
//! an inner node compares its children, a leaf compares the alternatives.
//! Contexts are therefore identified by the id of the node that owns them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::ComparisonMatrix;

/// Opaque node identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Goal,
    Criterion,
    #[serde(rename = "subcriterion")]
    SubCriterion,
    Alternative,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Goal => "goal",
            Level::Criterion => "criterion",
            Level::SubCriterion => "subcriterion",
            Level::Alternative => "alternative",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        match s {
            "goal" => Some(Level::Goal),
            "criterion" => Some(Level::Criterion),
            "subcriterion" => Some(Level::SubCriterion),
            "alternative" => Some(Level::Alternative),
            _ => None,
        }
    }

    /// The level a child of this node must have inside the criteria tree.
    fn child_level(self) -> Option<Level> {
        match self {
            Level::Goal => Some(Level::Criterion),
            Level::Criterion => Some(Level::SubCriterion),
            Level::SubCriterion | Level::Alternative => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ternary judgment: row element compared with column element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TernaryValue {
    /// Equally important (`1`).
    #[serde(rename = "eq")]
    Equal,
    /// Row element more important (`θ`).
    #[serde(rename = "gt")]
    MoreImportant,
    /// Row element less important (`1/θ`).
    #[serde(rename = "lt")]
    LessImportant,
}

impl TernaryValue {
    pub const ALL: [TernaryValue; 3] = [
        TernaryValue::Equal,
        TernaryValue::MoreImportant,
        TernaryValue::LessImportant,
    ];

    pub fn reciprocal(self) -> Self {
        match self {
            TernaryValue::Equal => TernaryValue::Equal,
            TernaryValue::MoreImportant => TernaryValue::LessImportant,
            TernaryValue::LessImportant => TernaryValue::MoreImportant,
        }
    }

    pub fn realize(self, theta: Theta) -> f64 {
        match self {
            TernaryValue::Equal => 1.0,
            TernaryValue::MoreImportant => theta.get(),
            TernaryValue::LessImportant => 1.0 / theta.get(),
        }
    }

    /// Document code: `eq`, `gt` or `lt`.
    pub fn code(self) -> &'static str {
        match self {
            TernaryValue::Equal => "eq",
            TernaryValue::MoreImportant => "gt",
            TernaryValue::LessImportant => "lt",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "eq" => Some(TernaryValue::Equal),
            "gt" => Some(TernaryValue::MoreImportant),
            "lt" => Some(TernaryValue::LessImportant),
            _ => None,
        }
    }
}

/// Scale parameter realizing "more important"; always finite and `> 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Theta(f64);

impl Theta {
    pub const DEFAULT: Theta = Theta(3.0);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if value.is_finite() && value > 1.0 {
            Ok(Theta(value))
        } else {
            Err(ModelError::InvalidTheta(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Theta {
    fn default() -> Self {
        Theta::DEFAULT
    }
}

impl<'de> Deserialize<'de> for Theta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Theta::new(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("theta must be a finite number greater than 1, got {0}")]
    InvalidTheta(f64),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(NodeId),
    #[error("model needs exactly one goal, found {0}")]
    GoalCount(usize),
    #[error("model needs at least one criterion")]
    NoCriteria,
    #[error("model needs at least 2 alternatives, found {0}")]
    TooFewAlternatives(usize),
    #[error("hierarchy contains a cycle through `{0}`")]
    CyclicHierarchy(NodeId),
    #[error("node `{node}` references unknown parent `{parent}`")]
    UnknownParent { node: NodeId, parent: NodeId },
    #[error("node `{node}` ({level}) cannot sit under `{parent}` ({parent_level})")]
    LevelOrder {
        node: NodeId,
        level: Level,
        parent: NodeId,
        parent_level: Level,
    },
    #[error("node `{0}` has no parent")]
    Orphan(NodeId),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("unknown comparison context `{0}`")]
    UnknownContext(NodeId),
    #[error("cannot compare `{0}` with itself")]
    SelfComparison(NodeId),
    #[error("`{node}` is not compared in context `{context}`")]
    NotInContext { context: NodeId, node: NodeId },
    #[error("context `{context}` is missing {} judgment(s): {}", missing.len(), format_pairs(missing))]
    IncompleteContext {
        context: NodeId,
        missing: Vec<(NodeId, NodeId)>,
    },
}

fn format_pairs(pairs: &[(NodeId, NodeId)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::InvalidTheta(_) => "invalid_theta",
            ModelError::DuplicateNode(_) => "duplicate_node",
            ModelError::GoalCount(_) => "goal_count",
            ModelError::NoCriteria => "no_criteria",
            ModelError::TooFewAlternatives(_) => "too_few_alternatives",
            ModelError::CyclicHierarchy(_) => "cyclic_hierarchy",
            ModelError::UnknownParent { .. } => "unknown_parent",
            ModelError::LevelOrder { .. } => "level_order",
            ModelError::Orphan(_) => "orphan_node",
            ModelError::UnknownNode(_) => "unknown_node",
            ModelError::UnknownContext(_) => "unknown_context",
            ModelError::SelfComparison(_) => "self_comparison",
            ModelError::NotInContext { .. } => "not_in_context",
            ModelError::IncompleteContext { .. } => "incomplete_context",
        }
    }

    /// The node or context the error is about, if any.
    pub fn locus(&self) -> Option<&NodeId> {
        match self {
            ModelError::DuplicateNode(id)
            | ModelError::CyclicHierarchy(id)
            | ModelError::Orphan(id)
            | ModelError::UnknownNode(id)
            | ModelError::UnknownContext(id)
            | ModelError::SelfComparison(id) => Some(id),
            ModelError::UnknownParent { node, .. } | ModelError::LevelOrder { node, .. } => Some(node),
            ModelError::NotInContext { context, .. } | ModelError::IncompleteContext { context, .. } => Some(context),
            ModelError::InvalidTheta(_)
            | ModelError::GoalCount(_)
            | ModelError::NoCriteria
            | ModelError::TooFewAlternatives(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub level: Level,
    pub parent: Option<NodeId>,
    /// Criteria-tree children in declaration order; empty for leaves and alternatives.
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    /// Compares the children of an inner criteria-tree node.
    Criteria,
    /// Compares the alternatives under a criteria-tree leaf.
    Alternatives,
}

/// One comparison context: the node owning it and the ordered members compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub id: NodeId,
    pub kind: ContextKind,
    pub members: Vec<NodeId>,
}

impl Context {
    pub fn order(&self) -> usize {
        self.members.len()
    }

    /// `n(n-1)/2`.
    pub fn required_judgments(&self) -> usize {
        let n = self.order();
        n * n.saturating_sub(1) / 2
    }

    fn position(&self, id: &str) -> Option<usize> {
        self.members.iter().position(|m| m.as_str() == id)
    }
}

#[derive(Debug, Clone)]
struct NodeSpec {
    id: NodeId,
    label: String,
    level: Level,
    parent: Option<NodeId>,
}

/// Collects a hierarchy description and turns it into a [`DecisionModel`].
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    name: String,
    theta: f64,
    nodes: Vec<NodeSpec>,
    alternatives: Vec<(NodeId, String)>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ModelBuilder {
            name: name.into(),
            theta: Theta::DEFAULT.get(),
            nodes: Vec::new(),
            alternatives: Vec::new(),
        }
    }

    pub fn theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn goal(self, id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        self.node(id, label, Level::Goal, None::<NodeId>)
    }

    /// Adds a criterion under the goal (the goal must be declared first).
    pub fn criterion(self, id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        let goal = self.nodes.iter().find(|n| n.level == Level::Goal).map(|n| n.id.clone());
        self.node(id, label, Level::Criterion, goal)
    }

    pub fn sub_criterion(self, parent: impl Into<NodeId>, id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        self.node(id, label, Level::SubCriterion, Some(parent.into()))
    }

    pub fn alternative(mut self, id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        self.alternatives.push((id.into(), label.into()));
        self
    }

    /// Adds a criteria-tree node with an explicit parent.
    pub fn node(
        mut self,
        id: impl Into<NodeId>,
        label: impl Into<String>,
        level: Level,
        parent: Option<impl Into<NodeId>>,
    ) -> Self {
        self.nodes.push(NodeSpec {
            id: id.into(),
            label: label.into(),
            level,
            parent: parent.map(Into::into),
        });
        self
    }

    /// Builds and fully checks the structure, including the minimum counts
    /// (one criterion, two alternatives).
    pub fn build(self) -> Result<DecisionModel, ModelError> {
        let criteria = self.nodes.iter().filter(|n| n.level == Level::Criterion).count();
        let alternatives = self.alternatives.len();
        let model = self.build_lenient()?;
        if criteria == 0 {
            return Err(ModelError::NoCriteria);
        }
        if alternatives < 2 {
            return Err(ModelError::TooFewAlternatives(alternatives));
        }
        Ok(model)
    }

    /// Builds without enforcing minimum counts; [`DecisionModel::validate`]
    /// reports those instead. Ids, levels, parents and cycles are still checked.
    pub fn build_lenient(self) -> Result<DecisionModel, ModelError> {
        let theta = Theta::new(self.theta)?;

        let mut seen = HashSet::new();
        for id in self
            .nodes
            .iter()
            .map(|n| &n.id)
            .chain(self.alternatives.iter().map(|(id, _)| id))
        {
            if !seen.insert(id.clone()) {
                return Err(ModelError::DuplicateNode(id.clone()));
            }
        }

        let goals = self.nodes.iter().filter(|n| n.level == Level::Goal).count();
        if goals != 1 {
            return Err(ModelError::GoalCount(goals));
        }

        let by_id: HashMap<&NodeId, &NodeSpec> = self.nodes.iter().map(|n| (&n.id, n)).collect();
        for spec in &self.nodes {
            match &spec.parent {
                Some(parent) if !by_id.contains_key(parent) => {
                    return Err(if seen.contains(parent) {
                        // Parent is an alternative.
                        ModelError::LevelOrder {
                            node: spec.id.clone(),
                            level: spec.level,
                            parent: parent.clone(),
                            parent_level: Level::Alternative,
                        }
                    } else {
                        ModelError::UnknownParent {
                            node: spec.id.clone(),
                            parent: parent.clone(),
                        }
                    });
                }
                None if spec.level != Level::Goal => return Err(ModelError::Orphan(spec.id.clone())),
                _ => {}
            }
        }

        // Walk parent links from every node; revisiting a node on the same walk is a cycle.
        for spec in &self.nodes {
            let mut on_path = HashSet::new();
            let mut cursor = Some(spec);
            while let Some(node) = cursor {
                if !on_path.insert(&node.id) {
                    return Err(ModelError::CyclicHierarchy(node.id.clone()));
                }
                cursor = node.parent.as_ref().and_then(|p| by_id.get(p).copied());
            }
        }

        for spec in &self.nodes {
            if spec.level == Level::Alternative {
                return Err(ModelError::LevelOrder {
                    node: spec.id.clone(),
                    level: spec.level,
                    parent: spec.parent.clone().unwrap_or_else(|| spec.id.clone()),
                    parent_level: Level::Alternative,
                });
            }
            match &spec.parent {
                None => {}
                Some(parent) => {
                    let parent_level = by_id[parent].level;
                    if parent_level.child_level() != Some(spec.level) {
                        return Err(ModelError::LevelOrder {
                            node: spec.id.clone(),
                            level: spec.level,
                            parent: parent.clone(),
                            parent_level,
                        });
                    }
                }
            }
            if spec.level == Level::Goal && spec.parent.is_some() {
                let parent = spec.parent.clone().unwrap();
                let parent_level = by_id[&parent].level;
                return Err(ModelError::LevelOrder {
                    node: spec.id.clone(),
                    level: spec.level,
                    parent,
                    parent_level,
                });
            }
        }

        let mut nodes: Vec<Node> = self
            .nodes
            .iter()
            .map(|s| Node {
                id: s.id.clone(),
                label: s.label.clone(),
                level: s.level,
                parent: s.parent.clone(),
                children: Vec::new(),
            })
            .collect();
        let mut index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        for i in 0..nodes.len() {
            if let Some(parent) = nodes[i].parent.clone() {
                let child = nodes[i].id.clone();
                let p = index[&parent];
                nodes[p].children.push(child);
            }
        }
        let goal = nodes.iter().position(|n| n.level == Level::Goal).unwrap();
        let alternatives: Vec<NodeId> = self.alternatives.iter().map(|(id, _)| id.clone()).collect();
        for (id, label) in &self.alternatives {
            index.insert(id.clone(), nodes.len());
            nodes.push(Node {
                id: id.clone(),
                label: label.clone(),
                level: Level::Alternative,
                parent: None,
                children: Vec::new(),
            });
        }

        let contexts = enumerate_contexts(&nodes, &index, goal, &alternatives);
        let context_index = contexts.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
        let judgments = vec![BTreeMap::new(); contexts.len()];

        Ok(DecisionModel {
            name: self.name,
            theta,
            nodes,
            index,
            goal,
            alternatives,
            contexts,
            context_index,
            judgments,
        })
    }
}

/// Criteria contexts top-down (breadth first), then alternative contexts in
/// depth-first leaf order.
fn enumerate_contexts(
    nodes: &[Node],
    index: &HashMap<NodeId, usize>,
    goal: usize,
    alternatives: &[NodeId],
) -> Vec<Context> {
    let mut contexts = Vec::new();
    let mut queue = std::collections::VecDeque::from([goal]);
    while let Some(i) = queue.pop_front() {
        let node = &nodes[i];
        if !node.children.is_empty() {
            contexts.push(Context {
                id: node.id.clone(),
                kind: ContextKind::Criteria,
                members: node.children.clone(),
            });
            queue.extend(node.children.iter().map(|c| index[c]));
        }
    }
    let mut stack = vec![goal];
    let mut leaves = Vec::new();
    while let Some(i) = stack.pop() {
        let node = &nodes[i];
        if node.children.is_empty() {
            leaves.push(i);
        } else {
            stack.extend(node.children.iter().rev().map(|c| index[c]));
        }
    }
    for leaf in leaves {
        contexts.push(Context {
            id: nodes[leaf].id.clone(),
            kind: ContextKind::Alternatives,
            members: alternatives.to_vec(),
        });
    }
    contexts
}

/// A validated decision hierarchy with its (possibly incomplete) judgments.
///
/// Judgments are stored symbolically, once per unordered pair, oriented by
/// member declaration order; the reciprocal is derived on read. Changing θ
/// therefore never invalidates stored judgments.
#[derive(Debug, Clone)]
pub struct DecisionModel {
    name: String,
    theta: Theta,
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    goal: usize,
    alternatives: Vec<NodeId>,
    contexts: Vec<Context>,
    context_index: HashMap<NodeId, usize>,
    judgments: Vec<BTreeMap<(usize, usize), TernaryValue>>,
}

impl PartialEq for DecisionModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.theta == other.theta
            && self.nodes == other.nodes
            && self.alternatives == other.alternatives
            && self.contexts == other.contexts
            && self.judgments == other.judgments
    }
}

impl DecisionModel {
    pub fn builder(name: impl Into<String>) -> ModelBuilder {
        ModelBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn set_theta(&mut self, theta: Theta) {
        self.theta = theta;
    }

    pub fn goal(&self) -> &Node {
        &self.nodes[self.goal]
    }

    /// All nodes: the criteria tree in declaration order followed by the alternatives.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn alternatives(&self) -> &[NodeId] {
        &self.alternatives
    }

    /// Top-level criteria in declaration order.
    pub fn criteria(&self) -> &[NodeId] {
        &self.goal().children
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.node(id).map(|n| n.label.as_str())
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn context(&self, id: &str) -> Option<&Context> {
        self.context_index.get(id).map(|&i| &self.contexts[i])
    }

    /// Criteria-tree leaves at or below `id`, depth-first in declaration order.
    pub fn leaves_under(&self, id: &str) -> Vec<NodeId> {
        let mut out = Vec::new();
        let Some(&start) = self.index.get(id) else {
            return out;
        };
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.level == Level::Alternative {
                continue;
            }
            if node.children.is_empty() {
                out.push(node.id.clone());
            } else {
                stack.extend(node.children.iter().rev().map(|c| self.index[c]));
            }
        }
        out
    }

    fn locate(&self, context: &str, i: &str, j: &str) -> Result<(usize, usize, usize), ModelError> {
        let &c = self
            .context_index
            .get(context)
            .ok_or_else(|| ModelError::UnknownContext(context.into()))?;
        if i == j {
            return Err(ModelError::SelfComparison(i.into()));
        }
        let ctx = &self.contexts[c];
        let not_in = |node: &str| ModelError::NotInContext {
            context: ctx.id.clone(),
            node: node.into(),
        };
        let pi = ctx.position(i).ok_or_else(|| not_in(i))?;
        let pj = ctx.position(j).ok_or_else(|| not_in(j))?;
        Ok((c, pi, pj))
    }

    /// Records `i` compared with `j` in `context` (and implicitly the reciprocal).
    /// Overwrites any earlier judgment on the pair.
    pub fn set_judgment(&mut self, context: &str, i: &str, j: &str, value: TernaryValue) -> Result<(), ModelError> {
        let (c, pi, pj) = self.locate(context, i, j)?;
        let (key, stored) = if pi < pj {
            ((pi, pj), value)
        } else {
            ((pj, pi), value.reciprocal())
        };
        self.judgments[c].insert(key, stored);
        Ok(())
    }

    /// Consuming variant of [`set_judgment`](Self::set_judgment).
    pub fn with_judgment(mut self, context: &str, i: &str, j: &str, value: TernaryValue) -> Result<Self, ModelError> {
        self.set_judgment(context, i, j, value)?;
        Ok(self)
    }

    pub fn clear_judgment(&mut self, context: &str, i: &str, j: &str) -> Result<(), ModelError> {
        let (c, pi, pj) = self.locate(context, i, j)?;
        self.judgments[c].remove(&(pi.min(pj), pi.max(pj)));
        Ok(())
    }

    /// The judgment of `i` versus `j`, if one has been recorded.
    pub fn judgment(&self, context: &str, i: &str, j: &str) -> Result<Option<TernaryValue>, ModelError> {
        let (c, pi, pj) = self.locate(context, i, j)?;
        let stored = self.judgments[c].get(&(pi.min(pj), pi.max(pj))).copied();
        Ok(if pi < pj {
            stored
        } else {
            stored.map(TernaryValue::reciprocal)
        })
    }

    /// Stored judgments of one context as `(i, j, value)` with `i` declared before `j`.
    pub fn judgments_in(&self, context: &str) -> Result<Vec<(NodeId, NodeId, TernaryValue)>, ModelError> {
        let &c = self
            .context_index
            .get(context)
            .ok_or_else(|| ModelError::UnknownContext(context.into()))?;
        let ctx = &self.contexts[c];
        Ok(self.judgments[c]
            .iter()
            .map(|(&(i, j), &v)| (ctx.members[i].clone(), ctx.members[j].clone(), v))
            .collect())
    }

    pub fn judgment_count(&self) -> usize {
        self.judgments.iter().map(BTreeMap::len).sum()
    }

    /// Unjudged pairs of a context, in declaration order.
    pub fn missing_pairs(&self, context: &str) -> Result<Vec<(NodeId, NodeId)>, ModelError> {
        let &c = self
            .context_index
            .get(context)
            .ok_or_else(|| ModelError::UnknownContext(context.into()))?;
        let ctx = &self.contexts[c];
        let n = ctx.order();
        let mut missing = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if !self.judgments[c].contains_key(&(i, j)) {
                    missing.push((ctx.members[i].clone(), ctx.members[j].clone()));
                }
            }
        }
        Ok(missing)
    }

    pub fn is_context_complete(&self, context: &str) -> Result<bool, ModelError> {
        let &c = self
            .context_index
            .get(context)
            .ok_or_else(|| ModelError::UnknownContext(context.into()))?;
        Ok(self.judgments[c].len() == self.contexts[c].required_judgments())
    }

    pub fn is_complete(&self) -> bool {
        self.contexts
            .iter()
            .zip(&self.judgments)
            .all(|(c, j)| j.len() == c.required_judgments())
    }

    /// Full reciprocal matrix of a context with entries realized through θ.
    pub fn matrix_for(&self, context: &str) -> Result<ComparisonMatrix, ModelError> {
        let &c = self
            .context_index
            .get(context)
            .ok_or_else(|| ModelError::UnknownContext(context.into()))?;
        let missing = self.missing_pairs(context)?;
        if !missing.is_empty() {
            return Err(ModelError::IncompleteContext {
                context: self.contexts[c].id.clone(),
                missing,
            });
        }
        let upper: Vec<TernaryValue> = self.judgments[c].values().copied().collect();
        Ok(
            ComparisonMatrix::from_ternary(self.contexts[c].order(), self.theta, &upper)
                .expect("judgment count matches context order"),
        )
    }

    /// Structural and completeness check; an empty report means the model
    /// can be synthesized.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        if self.theta.get() <= 1.0 {
            issues.push(ValidationIssue {
                code: "invalid_theta".into(),
                locus: None,
                message: format!("theta must exceed 1, got {}", self.theta.get()),
                missing: Vec::new(),
            });
        }
        if self.criteria().is_empty() {
            issues.push(ValidationIssue {
                code: "no_criteria".into(),
                locus: Some(self.goal().id.clone()),
                message: "the goal has no criteria".into(),
                missing: Vec::new(),
            });
        }
        if self.alternatives.len() < 2 {
            issues.push(ValidationIssue {
                code: "too_few_alternatives".into(),
                locus: None,
                message: format!(
                    "at least 2 alternatives are required, found {}",
                    self.alternatives.len()
                ),
                missing: Vec::new(),
            });
        }
        for node in &self.nodes {
            if node.level == Level::Goal || node.level == Level::Alternative {
                continue;
            }
            match node.parent.as_ref().and_then(|p| self.node(p.as_str())) {
                None => issues.push(ValidationIssue {
                    code: "orphan_node".into(),
                    locus: Some(node.id.clone()),
                    message: format!("`{}` is not attached to the hierarchy", node.id),
                    missing: Vec::new(),
                }),
                Some(parent) if parent.level.child_level() != Some(node.level) => issues.push(ValidationIssue {
                    code: "level_order".into(),
                    locus: Some(node.id.clone()),
                    message: format!(
                        "`{}` ({}) sits under `{}` ({})",
                        node.id, node.level, parent.id, parent.level
                    ),
                    missing: Vec::new(),
                }),
                Some(_) => {}
            }
        }
        for (c, ctx) in self.contexts.iter().enumerate() {
            if ctx.order() > crate::priority::RandomIndexTable::MAX_ORDER {
                issues.push(ValidationIssue {
                    code: "context_too_large".into(),
                    locus: Some(ctx.id.clone()),
                    message: format!(
                        "context `{}` compares {} elements; at most {} are supported",
                        ctx.id,
                        ctx.order(),
                        crate::priority::RandomIndexTable::MAX_ORDER
                    ),
                    missing: Vec::new(),
                });
            }
            let required = ctx.required_judgments();
            let stored = self.judgments[c].len();
            if stored < required {
                let missing = self.missing_pairs(ctx.id.as_str()).unwrap_or_default();
                issues.push(ValidationIssue {
                    code: "incomplete_context".into(),
                    locus: Some(ctx.id.clone()),
                    message: format!(
                        "context `{}` has {stored} of {required} judgments ({} missing)",
                        ctx.id,
                        required - stored
                    ),
                    missing,
                });
            }
        }
        ValidationReport { issues }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: String,
    pub locus: Option<NodeId>,
    pub message: String,
    /// For incomplete contexts: the unjudged pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// Total number of missing judgments over all incomplete contexts.
    pub fn missing_judgments(&self) -> usize {
        self.issues.iter().map(|i| i.missing.len()).sum()
    }

    /// Only the structural problems (everything except missing judgments).
    pub fn structural(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.code != "incomplete_context")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "model is valid");
        }
        for issue in &self.issues {
            match &issue.locus {
                Some(locus) => writeln!(f, "[{}] {}: {}", issue.code, locus, issue.message)?,
                None => writeln!(f, "[{}] {}", issue.code, issue.message)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TernaryValue::*;

    fn small() -> DecisionModel {
        DecisionModel::builder("small")
            .goal("g", "Goal")
            .criterion("a", "A")
            .criterion("b", "B")
            .alternative("x", "X")
            .alternative("y", "Y")
            .build()
            .unwrap()
    }

    fn survey_shape() -> DecisionModel {
        let mut b = DecisionModel::builder("survey")
            .goal("g", "Goal")
            .criterion("m", "M")
            .criterion("t", "T")
            .criterion("e", "E")
            .criterion("c", "C");
        for (parent, count) in [("m", 3), ("t", 3), ("e", 2), ("c", 2)] {
            for k in 0..count {
                b = b.sub_criterion(parent, format!("{parent}{k}"), format!("{parent}{k}"));
            }
        }
        b.alternative("conf", "Confidentiality")
            .alternative("int", "Integrity")
            .alternative("avail", "Availability")
            .build()
            .unwrap()
    }

    #[test]
    fn survey_hierarchy_has_fifteen_contexts() {
        let m = survey_shape();
        assert_eq!(m.contexts().len(), 15);
        assert_eq!(m.contexts()[0].id.as_str(), "g");
        assert_eq!(
            m.contexts()
                .iter()
                .filter(|c| c.kind == ContextKind::Alternatives)
                .count(),
            10
        );
    }

    #[test]
    fn smallest_tree_has_three_contexts() {
        let m = small();
        let ids: Vec<_> = m.contexts().iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["g", "a", "b"]);
    }

    #[test]
    fn theta_must_exceed_one() {
        let err = DecisionModel::builder("t")
            .theta(1.0)
            .goal("g", "G")
            .criterion("a", "A")
            .alternative("x", "X")
            .alternative("y", "Y")
            .build()
            .unwrap_err();
        assert_eq!(err, ModelError::InvalidTheta(1.0));
        assert!(Theta::new(f64::NAN).is_err());
    }

    #[test]
    fn structural_errors() {
        let dup = DecisionModel::builder("d")
            .goal("g", "G")
            .criterion("a", "A")
            .alternative("a", "dup")
            .alternative("y", "Y")
            .build();
        assert_eq!(dup.unwrap_err(), ModelError::DuplicateNode("a".into()));

        let few = DecisionModel::builder("f")
            .goal("g", "G")
            .criterion("a", "A")
            .alternative("x", "X")
            .build();
        assert_eq!(few.unwrap_err(), ModelError::TooFewAlternatives(1));

        let cyclic = DecisionModel::builder("c")
            .goal("g", "G")
            .node("a", "A", Level::Criterion, Some("b"))
            .node("b", "B", Level::SubCriterion, Some("a"))
            .alternative("x", "X")
            .alternative("y", "Y")
            .build();
        assert!(matches!(cyclic.unwrap_err(), ModelError::CyclicHierarchy(_)));

        let skipped = DecisionModel::builder("s")
            .goal("g", "G")
            .node("a", "A", Level::SubCriterion, Some("g"))
            .alternative("x", "X")
            .alternative("y", "Y")
            .build();
        assert!(matches!(skipped.unwrap_err(), ModelError::LevelOrder { .. }));
    }

    #[test]
    fn judgment_reciprocity() {
        let mut m = small();
        m.set_judgment("g", "a", "b", MoreImportant).unwrap();
        assert_eq!(m.judgment("g", "b", "a").unwrap(), Some(LessImportant));
        let mat = m.matrix_for("g").unwrap();
        assert_eq!(mat.get(0, 1), 3.0);
        assert_eq!(mat.get(1, 0), 1.0 / 3.0);

        m.set_judgment("g", "b", "a", Equal).unwrap();
        assert_eq!(m.judgment("g", "a", "b").unwrap(), Some(Equal));
        assert_eq!(m.judgment_count(), 1);
    }

    #[test]
    fn judgment_errors() {
        let mut m = small();
        assert_eq!(
            m.set_judgment("g", "a", "a", Equal).unwrap_err(),
            ModelError::SelfComparison("a".into())
        );
        assert!(matches!(
            m.set_judgment("g", "a", "x", Equal).unwrap_err(),
            ModelError::NotInContext { .. }
        ));
        assert_eq!(
            m.set_judgment("nope", "a", "b", Equal).unwrap_err(),
            ModelError::UnknownContext("nope".into())
        );
    }

    #[test]
    fn incomplete_matrix_lists_missing_pair() {
        let mut m = survey_shape();
        let pairs = [("m", "t"), ("m", "e"), ("m", "c"), ("t", "e"), ("t", "c")];
        for (i, j) in pairs {
            m.set_judgment("g", i, j, Equal).unwrap();
        }
        match m.matrix_for("g").unwrap_err() {
            ModelError::IncompleteContext { missing, .. } => {
                assert_eq!(missing, vec![(NodeId::from("e"), NodeId::from("c"))]);
            }
            other => panic!("unexpected {other:?}"),
        }
        m.set_judgment("g", "e", "c", Equal).unwrap();
        let mat = m.matrix_for("g").unwrap();
        assert_eq!(mat.order(), 4);
    }

    #[test]
    fn validate_reports_every_incomplete_context() {
        let m = survey_shape();
        let report = m.validate();
        assert_eq!(report.issues.len(), 15);
        assert!(report.issues.iter().all(|i| i.code == "incomplete_context"));
        // 6 + 3 + 3 + 1 + 1 + 10 * 3
        assert_eq!(report.missing_judgments(), 44);
    }

    #[test]
    fn validate_flags_single_alternative() {
        let m = DecisionModel::builder("one")
            .goal("g", "G")
            .criterion("a", "A")
            .alternative("x", "X")
            .build_lenient()
            .unwrap();
        let report = m.validate();
        assert!(report.structural().any(|i| i.code == "too_few_alternatives"));
    }

    #[test]
    fn theta_change_keeps_judgments() {
        let mut m = small();
        m.set_judgment("g", "a", "b", MoreImportant).unwrap();
        m.set_theta(Theta::new(5.0).unwrap());
        assert_eq!(m.matrix_for("g").unwrap().get(0, 1), 5.0);
    }

    #[test]
    fn leaves_under_criterion() {
        let m = survey_shape();
        let leaves: Vec<_> = m.leaves_under("e").into_iter().map(|n| n.to_string()).collect();
        assert_eq!(leaves, ["e0", "e1"]);
        assert_eq!(m.leaves_under("g").len(), 10);
    }
}

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use tahp_core::{ComparisonMatrix, DecisionModel, Level, ModelBuilder, TernaryValue, Theta};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_upper(rng: &mut StdRng, n: usize) -> Vec<TernaryValue> {
    (0..n * (n - 1) / 2)
        .map(|_| TernaryValue::ALL[rng.gen_range(0..3)])
        .collect()
}

pub fn random_theta(rng: &mut StdRng) -> Theta {
    Theta::new(rng.gen_range(1.05..9.0)).unwrap()
}

pub fn random_matrix(rng: &mut StdRng, n: usize, theta: Theta) -> ComparisonMatrix {
    ComparisonMatrix::from_ternary(n, theta, &random_upper(rng, n)).unwrap()
}

/// A hierarchy described by ids only, so it can be rebuilt in any declaration order.
#[derive(Debug, Clone)]
pub struct Spec {
    pub theta: f64,
    /// Criteria with their sub-criteria (empty = leaf criterion).
    pub criteria: Vec<(String, Vec<String>)>,
    pub alternatives: Vec<String>,
    /// (context, i, j, value) with i before j in declaration order.
    pub judgments: Vec<(String, String, String, TernaryValue)>,
}

impl Spec {
    pub fn random(rng: &mut StdRng, min_criteria: usize) -> Spec {
        let theta = random_theta(rng).get();
        let n_crit = rng.gen_range(min_criteria.max(1)..=5);
        let criteria: Vec<(String, Vec<String>)> = (0..n_crit)
            .map(|c| {
                let subs = match rng.gen_range(0..3) {
                    0 => 0,
                    _ => rng.gen_range(1..=5),
                };
                (format!("c{c}"), (0..subs).map(|s| format!("c{c}s{s}")).collect())
            })
            .collect();
        let alternatives: Vec<String> = (0..rng.gen_range(2..=5)).map(|a| format!("a{a}")).collect();

        let mut contexts: Vec<(String, Vec<String>)> =
            vec![("g".into(), criteria.iter().map(|(c, _)| c.clone()).collect())];
        for (c, subs) in &criteria {
            if subs.is_empty() {
                contexts.push((c.clone(), alternatives.clone()));
            } else {
                contexts.push((c.clone(), subs.clone()));
                for s in subs {
                    contexts.push((s.clone(), alternatives.clone()));
                }
            }
        }
        let mut judgments = Vec::new();
        for (ctx, members) in &contexts {
            let upper = random_upper(rng, members.len());
            let mut k = 0;
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    judgments.push((ctx.clone(), members[i].clone(), members[j].clone(), upper[k]));
                    k += 1;
                }
            }
        }
        Spec {
            theta,
            criteria,
            alternatives,
            judgments,
        }
    }

    pub fn build(&self) -> DecisionModel {
        let order: Vec<usize> = (0..self.criteria.len()).collect();
        self.build_with_criteria_order(&order)
    }

    pub fn build_with_criteria_order(&self, order: &[usize]) -> DecisionModel {
        let mut b = ModelBuilder::new("random").theta(self.theta).goal("g", "Goal");
        for &k in order {
            let (c, subs) = &self.criteria[k];
            b = b.node(c.as_str(), c.clone(), Level::Criterion, Some("g"));
            for s in subs {
                b = b.node(s.as_str(), s.clone(), Level::SubCriterion, Some(c.as_str()));
            }
        }
        for a in &self.alternatives {
            b = b.alternative(a.as_str(), a.clone());
        }
        let mut m = b.build().unwrap();
        for (ctx, i, j, v) in &self.judgments {
            m.set_judgment(ctx, i, j, *v).unwrap();
        }
        m
    }

    /// Replaces every alternative-context judgment by the same matrix.
    pub fn with_identical_alternative_matrices(&self, upper: &[TernaryValue]) -> Spec {
        let mut out = self.clone();
        let leaves: Vec<String> = self
            .criteria
            .iter()
            .flat_map(|(c, subs)| if subs.is_empty() { vec![c.clone()] } else { subs.clone() })
            .collect();
        out.judgments.retain(|(ctx, ..)| !leaves.contains(ctx));
        for leaf in leaves {
            let mut k = 0;
            for i in 0..self.alternatives.len() {
                for j in (i + 1)..self.alternatives.len() {
                    out.judgments.push((
                        leaf.clone(),
                        self.alternatives[i].clone(),
                        self.alternatives[j].clone(),
                        upper[k],
                    ));
                    k += 1;
                }
            }
        }
        out
    }

    pub fn shuffled_criteria_order(&self, rng: &mut StdRng) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.criteria.len()).collect();
        order.shuffle(rng);
        order
    }
}

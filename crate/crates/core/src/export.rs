//! Result export as aligned text, CSV or JSON lines.
//!
//! Text output rounds to three decimals; CSV and JSON lines carry full
//! precision. Every export states the θ it was computed with. All functions
//! here are pure.

use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{Level, NodeId};
use crate::priority::ConsistencyGate;
use crate::sensitivity::SensitivityReport;
use crate::synthesis::SynthesisResult;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExportFormat {
    #[default]
    TableText,
    Csv,
    JsonLines,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" | "table-text" | "text" => Ok(ExportFormat::TableText),
            "csv" => Ok(ExportFormat::Csv),
            "json-lines" | "jsonl" => Ok(ExportFormat::JsonLines),
            other => Err(format!("unknown format `{other}` (table-text, csv, json-lines)")),
        }
    }
}

fn gate_word(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// One exported fact. Shared by the CSV and JSON-lines writers.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record<'a> {
    Theta {
        value: f64,
        method: &'static str,
    },
    NodeWeight {
        id: &'a NodeId,
        label: &'a str,
        level: Level,
        parent: Option<&'a NodeId>,
        local: f64,
        global: f64,
    },
    AlternativeScore {
        id: &'a NodeId,
        label: &'a str,
        rank: usize,
        score: f64,
    },
    ContextConsistency {
        context: &'a NodeId,
        order: usize,
        lambda_max: f64,
        ci: f64,
        cr: f64,
        gate: &'static str,
    },
    OverallInconsistency {
        value: f64,
    },
    Crossover {
        criterion: &'a NodeId,
        a: &'a NodeId,
        b: &'a NodeId,
        t: f64,
        score: f64,
        degenerate: bool,
    },
}

const RESULT_CSV_HEADER: [&str; 7] = ["record", "context", "id", "label", "peer", "value", "extra"];

impl Record<'_> {
    /// Flat CSV row matching [`RESULT_CSV_HEADER`].
    fn csv_row(&self) -> [String; 7] {
        let s = |x: &str| x.to_owned();
        let f = |x: f64| x.to_string();
        match self {
            Record::Theta { value, method } => [s("theta"), s(""), s(""), s(""), s(""), f(*value), s(method)],
            Record::NodeWeight {
                id,
                label,
                parent,
                local,
                global,
                ..
            } => [
                s("node_weight"),
                parent.map(|p| p.to_string()).unwrap_or_default(),
                id.to_string(),
                s(label),
                s(""),
                f(*global),
                f(*local),
            ],
            Record::AlternativeScore { id, label, rank, score } => [
                s("alternative_score"),
                s(""),
                id.to_string(),
                s(label),
                s(""),
                f(*score),
                rank.to_string(),
            ],
            Record::ContextConsistency { context, cr, gate, .. } => [
                s("context_cr"),
                context.to_string(),
                s(""),
                s(""),
                s(""),
                f(*cr),
                s(gate),
            ],
            Record::OverallInconsistency { value } => {
                [s("overall_inconsistency"), s(""), s(""), s(""), s(""), f(*value), s("")]
            }
            Record::Crossover {
                criterion,
                a,
                b,
                t,
                score,
                degenerate,
            } => [
                s("crossover"),
                criterion.to_string(),
                a.to_string(),
                s(""),
                b.to_string(),
                f(*t),
                if *degenerate { s("degenerate") } else { f(*score) },
            ],
        }
    }
}

fn result_records<'a>(
    result: &'a SynthesisResult,
    reports: &'a [SensitivityReport],
    gate: ConsistencyGate,
) -> Vec<Record<'a>> {
    let mut out = vec![Record::Theta {
        value: result.theta,
        method: result.method.as_str(),
    }];
    for w in result.global_weights.iter().filter(|w| w.level != Level::Goal) {
        out.push(Record::NodeWeight {
            id: &w.id,
            label: &w.label,
            level: w.level,
            parent: w.parent.as_ref(),
            local: w.local,
            global: w.global,
        });
    }
    let ranking = result.ranking();
    for s in &result.alternative_scores {
        out.push(Record::AlternativeScore {
            id: &s.id,
            label: &s.label,
            rank: ranking.iter().position(|r| *r == s.id).unwrap_or(0) + 1,
            score: s.score,
        });
    }
    for pv in &result.per_context {
        if let Some(context) = &pv.context {
            out.push(Record::ContextConsistency {
                context,
                order: pv.order(),
                lambda_max: pv.lambda_max,
                ci: pv.ci,
                cr: pv.cr,
                gate: gate_word(gate.passes(pv)),
            });
        }
    }
    out.push(Record::OverallInconsistency {
        value: result.overall_inconsistency,
    });
    out.extend(crossover_records(reports));
    out
}

fn crossover_records(reports: &[SensitivityReport]) -> impl Iterator<Item = Record<'_>> {
    reports.iter().flat_map(|r| {
        r.crossovers.iter().map(move |c| Record::Crossover {
            criterion: &r.criterion,
            a: &c.a,
            b: &c.b,
            t: c.t,
            score: c.score,
            degenerate: c.degenerate,
        })
    })
}

fn write_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

fn write_json_lines<T: Serialize>(records: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Criteria weights, alternative scores, per-context consistency, overall
/// inconsistency and any sensitivity crossovers.
pub fn export_results(
    result: &SynthesisResult,
    reports: &[SensitivityReport],
    format: ExportFormat,
    gate: ConsistencyGate,
) -> String {
    match format {
        ExportFormat::TableText => results_table(result, reports, gate),
        ExportFormat::Csv => write_csv(
            &RESULT_CSV_HEADER,
            result_records(result, reports, gate).iter().map(Record::csv_row),
        ),
        ExportFormat::JsonLines => write_json_lines(result_records(result, reports, gate)),
    }
}

fn results_table(result: &SynthesisResult, reports: &[SensitivityReport], gate: ConsistencyGate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Synthesis with respect to: {}", result.goal_label);
    let _ = writeln!(
        out,
        "model: {}   theta: {}   method: {}",
        result.model,
        result.theta,
        result.method.as_str()
    );
    let _ = writeln!(out);

    let width = result
        .global_weights
        .iter()
        .map(|w| w.label.chars().count() + 4)
        .chain(result.alternative_scores.iter().map(|s| s.label.chars().count() + 2))
        .fold(40, usize::max);
    let _ = writeln!(out, "{:<width$} {:>7} {:>7}", "Criteria", "local", "global");
    for w in result.global_weights.iter().filter(|w| w.level != Level::Goal) {
        let indent = if w.level == Level::SubCriterion { "    " } else { "  " };
        let name = format!("{indent}{}", w.label);
        let _ = writeln!(out, "{name:<width$} {:>7.3} {:>7.3}", w.local, w.global);
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "{:<width$} {:>7} {:>5}", "Alternatives", "score", "rank");
    let ranking = result.ranking();
    for s in &result.alternative_scores {
        let rank = ranking.iter().position(|r| *r == s.id).unwrap_or(0) + 1;
        let name = format!("  {}", s.label);
        let _ = writeln!(out, "{name:<width$} {:>7.3} {:>5}", s.score, rank);
    }
    let _ = writeln!(out);

    let _ = writeln!(
        out,
        "{:<28} {:>3} {:>10} {:>7} {:>7}  gate (CR <= {})",
        "Consistency", "n", "lambda_max", "CI", "CR", gate.threshold
    );
    for pv in &result.per_context {
        let name = pv.context.as_ref().map(ToString::to_string).unwrap_or_default();
        let _ = writeln!(
            out,
            "  {name:<26} {:>3} {:>10.3} {:>7.3} {:>7.3}  {}",
            pv.order(),
            pv.lambda_max,
            pv.ci,
            pv.cr,
            gate_word(gate.passes(pv))
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Overall inconsistency = {:.3}", result.overall_inconsistency);

    if !reports.is_empty() {
        let _ = writeln!(out);
        out.push_str(&sensitivity_table(reports));
    }
    out
}

/// Sensitivity reports on their own. The CSV form lists crossovers only, so a
/// model without crossovers exports the header row alone.
pub fn export_sensitivity(reports: &[SensitivityReport], format: ExportFormat) -> String {
    match format {
        ExportFormat::TableText => sensitivity_table(reports),
        ExportFormat::Csv => write_csv(
            &["criterion", "a", "b", "t", "score", "degenerate"],
            reports.iter().flat_map(|r| {
                r.crossovers.iter().map(move |c| {
                    [
                        r.criterion.to_string(),
                        c.a.to_string(),
                        c.b.to_string(),
                        c.t.to_string(),
                        c.score.to_string(),
                        c.degenerate.to_string(),
                    ]
                })
            }),
        ),
        ExportFormat::JsonLines => {
            #[derive(Serialize)]
            struct Summary<'a> {
                record: &'static str,
                criterion: &'a NodeId,
                base_weight: f64,
                base_ranking: &'a [NodeId],
                ranking_at_zero: &'a [NodeId],
                reversal_at_zero: bool,
                swaps_at_zero: &'a [(NodeId, NodeId)],
                rank_one_changes_below_base: bool,
                rank_one_changes: bool,
            }
            let mut out = String::new();
            for r in reports {
                out.push_str(&write_json_lines([Summary {
                    record: "sensitivity",
                    criterion: &r.criterion,
                    base_weight: r.base_weight,
                    base_ranking: &r.base_ranking.order,
                    ranking_at_zero: &r.ranking_at_zero.order,
                    reversal_at_zero: r.reversal_at_zero,
                    swaps_at_zero: &r.swaps_at_zero,
                    rank_one_changes_below_base: r.rank_one_changes_below_base,
                    rank_one_changes: r.rank_one_changes,
                }]));
                out.push_str(&write_json_lines(crossover_records(std::slice::from_ref(r))));
            }
            out
        }
    }
}

fn sensitivity_table(reports: &[SensitivityReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Sensitivity (one criterion moved over [0, 1], the rest rescaled proportionally)"
    );
    for r in reports {
        let _ = writeln!(out);
        let _ = writeln!(out, "  {} (base weight {:.3})", r.criterion_label, r.base_weight);
        let _ = writeln!(
            out,
            "    {:<30} {:>8} {:>8} {:>8}",
            "alternative", "S(0)", "S(base)", "S(1)"
        );
        for l in &r.lines {
            let _ = writeln!(
                out,
                "    {:<30} {:>8.3} {:>8.3} {:>8.3}",
                l.alternative.as_str(),
                l.rest_point,
                l.score_at(r.base_weight),
                l.slope_point
            );
        }
        if r.crossovers.is_empty() {
            let _ = writeln!(out, "    no crossovers");
        }
        for c in &r.crossovers {
            let _ = writeln!(
                out,
                "    crossover at t = {:.3}: {} / {} (score {:.3}){}",
                c.t,
                c.a,
                c.b,
                c.score,
                if c.degenerate { " [degenerate]" } else { "" }
            );
        }
        for (a, b) in &r.standing_ties {
            let _ = writeln!(out, "    standing tie: {a} = {b}");
        }
        let join = |v: &[NodeId]| v.iter().map(NodeId::as_str).collect::<Vec<_>>().join(" > ");
        let _ = writeln!(out, "    ranking at base: {}", join(&r.base_ranking.order));
        let _ = writeln!(out, "    ranking at t = 0: {}", join(&r.ranking_at_zero.order));
        let _ = writeln!(
            out,
            "    rank 1 changes when lowered to 0: {}   anywhere on [0, 1): {}",
            if r.rank_one_changes_below_base { "yes" } else { "no" },
            if r.rank_one_changes { "yes" } else { "no" }
        );
    }
    out
}

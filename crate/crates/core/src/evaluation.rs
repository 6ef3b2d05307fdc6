//! Filtered link-prediction ranking and MR / MRR / Hits@N.

use std::fmt;

use rayon::prelude::*;

use crate::data::{FilterIndex, Triple, Vocab};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Head,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankResult {
    pub triple: Triple,
    pub side: Side,
    /// Tie-averaged rank, at least 1.
    pub rank: f64,
}

/// `1 + #{greater} + #{ties}/2` over the candidates that survive `skip`.
///
/// `skip(e)` is consulted for every `e != target`. A NaN candidate counts as
/// greater.
pub fn rank_from_scores(scores: &[f64], target: usize, skip: impl Fn(usize) -> bool) -> f64 {
    let s0 = scores[target];
    let mut greater = 0usize;
    let mut ties = 0usize;
    for (e, &s) in scores.iter().enumerate() {
        if e == target || skip(e) {
            continue;
        }
        if s == s0 {
            ties += 1;
        } else if !(s < s0) {
            greater += 1;
        }
    }
    1.0 + greater as f64 + ties as f64 / 2.0
}

/// Rank of `triple` against every corruption of `side`. With a filter, other
/// known-true triples are removed from the candidates.
pub fn rank_triple(model: &Model, triple: Triple, filter: Option<&FilterIndex>, side: Side) -> Result<RankResult> {
    let mut scores = vec![0.0; model.num_entities()];
    rank_with_buffer(model, triple, filter, side, &mut scores)
}

fn rank_with_buffer(
    model: &Model,
    triple: Triple,
    filter: Option<&FilterIndex>,
    side: Side,
    scores: &mut [f64],
) -> Result<RankResult> {
    model.check_entity(triple.h)?;
    model.check_entity(triple.t)?;
    let (target, known) = match side {
        Side::Tail => {
            model.score_all_tails(triple.h, triple.r, scores)?;
            (triple.t, filter.and_then(|f| f.true_tails(triple.h, triple.r)))
        }
        Side::Head => {
            model.score_all_heads(triple.r, triple.t, scores)?;
            (triple.h, filter.and_then(|f| f.true_heads(triple.r, triple.t)))
        }
    };
    if !scores[target].is_finite() {
        return Err(Error::Numeric(format!(
            "score of ({}, {}, {})",
            triple.h, triple.r, triple.t
        )));
    }
    let rank = rank_from_scores(scores, target, |e| known.is_some_and(|k| k.contains(&e)));
    Ok(RankResult { triple, side, rank })
}

/// Head and tail ranks of every triple, in split order (head first).
pub fn rank_split(model: &Model, split: &[Triple], filter: Option<&FilterIndex>) -> Result<Vec<RankResult>> {
    let per_triple: Vec<[RankResult; 2]> = split
        .par_iter()
        .map_init(
            || vec![0.0; model.num_entities()],
            |buf, &t| {
                Ok([
                    rank_with_buffer(model, t, filter, Side::Head, buf)?,
                    rank_with_buffer(model, t, filter, Side::Tail, buf)?,
                ])
            },
        )
        .collect::<Result<_>>()?;
    Ok(per_triple.into_iter().flatten().collect())
}

/// Aggregate ranking metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    /// Number of rank samples (twice the triple count).
    pub samples: usize,
}

impl MetricsReport {
    pub const TSV_HEADER: &'static str = "MR\tMRR\tH@1\tH@3\tH@10";

    pub fn from_ranks(ranks: &[f64]) -> Self {
        let n = ranks.len();
        if n == 0 {
            return MetricsReport::default();
        }
        let nf = n as f64;
        let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / nf;
        MetricsReport {
            mr: ranks.iter().sum::<f64>() / nf,
            mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / nf,
            hits1: hits(1.0),
            hits3: hits(3.0),
            hits10: hits(10.0),
            samples: n,
        }
    }

    /// Tab-separated values in shortest round-trip form.
    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.mr, self.mrr, self.hits1, self.hits3, self.hits10
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MR {:.3}  MRR {:.4}  H@1 {:.4}  H@3 {:.4}  H@10 {:.4}  ({} ranks)",
            self.mr, self.mrr, self.hits1, self.hits3, self.hits10, self.samples
        )
    }
}

/// Filtered metrics over both corruption sides of every triple in `split`.
pub fn evaluate(model: &Model, split: &[Triple], filter: &FilterIndex) -> Result<MetricsReport> {
    let ranks: Vec<f64> = rank_split(model, split, Some(filter))?.iter().map(|r| r.rank).collect();
    Ok(MetricsReport::from_ranks(&ranks))
}

/// Metrics for one relation's triples.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationReport {
    pub relation: usize,
    pub name: Option<String>,
    pub triples: usize,
    pub metrics: MetricsReport,
}

/// Groups `split` by relation (ascending id) and evaluates each group.
pub fn per_relation_report(
    model: &Model,
    split: &[Triple],
    filter: &FilterIndex,
    vocab: Option<&Vocab>,
) -> Result<Vec<RelationReport>> {
    let ranks = rank_split(model, split, Some(filter))?;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); model.num_relations()];
    for r in &ranks {
        groups[r.triple.r].push(r.rank);
    }
    Ok(groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(r, g)| RelationReport {
            relation: r,
            name: vocab.and_then(|v| v.relations.name(r)).map(str::to_string),
            triples: g.len() / 2,
            metrics: MetricsReport::from_ranks(g),
        })
        .collect())
}

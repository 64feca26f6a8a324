//! Backed-off relative-frequency estimates for dependencies and gap tags, and
//! log-space scoring of whole analyses.

use std::fmt::Write as _;

use thiserror::Error;

use crate::counts::{CtxKey, Family, Model};
use crate::depextract::{Dependency, Extraction, Gap, GapTag, HeadRef, ReducedSentence, RelationTriple};
use crate::distance::{delta_indexed, CommaIndex, Delta};
use crate::treebank::TaggedSentence;
use crate::ROOT_MARKER;

/// Probability given to a tag missing from a token's distribution.
pub const TAG_PROB_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EstimatorError {
    #[error("tag-distribution scoring needs a sentence with tag distributions")]
    NoDistributions,
    #[error("{found} tags given for a {expected}-token sentence")]
    Length { found: usize, expected: usize },
}

/// The pieces of one backed-off estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackoffEstimate {
    pub eta: [u32; 4],
    pub delta: [u32; 4],
    pub e1: Option<f64>,
    pub e23: Option<f64>,
    pub e4: Option<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub value: f64,
}

impl BackoffEstimate {
    pub const ZERO: BackoffEstimate = BackoffEstimate {
        eta: [0; 4],
        delta: [0; 4],
        e1: None,
        e23: None,
        e4: None,
        lambda1: 0.0,
        lambda2: 0.0,
        value: 0.0,
    };

    pub fn log_value(&self) -> f64 {
        self.value.ln()
    }
}

/// δ/(δ+1).
pub fn lambda(delta: u64) -> f64 {
    delta as f64 / (delta as f64 + 1.0)
}

fn ratio(n: u64, d: u64) -> Option<f64> {
    (d > 0).then(|| n as f64 / d as f64)
}

/// Interpolate from (η, δ) at the four levels.
pub fn combine(counts: [(u32, u32); 4]) -> BackoffEstimate {
    let eta = counts.map(|c| c.0);
    let delta = counts.map(|c| c.1);
    let [n1, n2, n3, n4] = eta.map(u64::from);
    let [d1, d2, d3, d4] = delta.map(u64::from);
    let e1 = ratio(n1, d1);
    let e23 = ratio(n2 + n3, d2 + d3);
    let e4 = ratio(n4, d4);
    let lambda1 = lambda(d1);
    let lambda2 = lambda(d2 + d3);
    // Written as b + λ(a − b) so that equal estimates combine exactly.
    let value = match (e1, e23) {
        (Some(a), Some(b)) => b + lambda1 * (a - b),
        (Some(a), None) => {
            let b = e4.unwrap_or(0.0);
            b + lambda1 * (a - b)
        }
        (None, Some(b)) => {
            let c = e4.unwrap_or(0.0);
            c + lambda2 * (b - c)
        }
        (None, None) => e4.unwrap_or(0.0),
    };
    BackoffEstimate {
        eta,
        delta,
        e1,
        e23,
        e4,
        lambda1,
        lambda2,
        value: value.clamp(0.0, 1.0),
    }
}

/// Query interface over a model. `tag_blind` selects the tag-summed
/// dependency tables.
#[derive(Debug, Clone, Copy)]
pub struct Estimator<'m> {
    pub model: &'m Model,
    pub tag_blind: bool,
}

impl<'m> Estimator<'m> {
    pub fn new(model: &'m Model, tag_blind: bool) -> Self {
        Estimator { model, tag_blind }
    }

    fn family(&self) -> Family {
        if self.tag_blind {
            Family::TagBlind
        } else {
            Family::Tagged
        }
    }

    /// Estimate from symbol ids; `triple` is a model triple id.
    pub fn dependency_prob_ids(&self, triple: u32, modifier: (u32, u32), head: (u32, u32), delta: u8) -> BackoffEstimate {
        let key = CtxKey {
            a: modifier.0,
            b: modifier.1,
            c: head.0,
            d: head.1,
            x: delta,
        };
        combine(self.model.dependency_counts(self.family(), key, triple))
    }

    pub fn dependency_prob(&self, relation: &RelationTriple, modifier: (&str, &str), head: (&str, &str), delta: Delta) -> BackoffEstimate {
        let Some(r) = self.model.triple_id(relation) else {
            return BackoffEstimate::ZERO;
        };
        let m = &self.model;
        self.dependency_prob_ids(
            r,
            (m.symbol_or_unknown(modifier.0), m.symbol_or_unknown(modifier.1)),
            (m.symbol_or_unknown(head.0), m.symbol_or_unknown(head.1)),
            delta.code(),
        )
    }

    pub fn gap_prob_ids(&self, tag: GapTag, left: (u32, u32), right: (u32, u32), comma: bool) -> BackoffEstimate {
        let key = CtxKey {
            a: left.0,
            b: left.1,
            c: right.0,
            d: right.1,
            x: comma as u8,
        };
        combine(self.model.gap_counts(key, tag))
    }

    pub fn gap_prob(&self, tag: GapTag, left: (&str, &str), right: (&str, &str), comma: bool) -> BackoffEstimate {
        let m = &self.model;
        self.gap_prob_ids(
            tag,
            (m.symbol_or_unknown(left.0), m.symbol_or_unknown(left.1)),
            (m.symbol_or_unknown(right.0), m.symbol_or_unknown(right.1)),
            comma,
        )
    }

    fn arc_estimate(&self, reduced: &ReducedSentence, commas: &CommaIndex, d: &Dependency) -> BackoffEstimate {
        let it = &reduced.items[d.modifier];
        let head = match d.head {
            HeadRef::Word(h) => (reduced.items[h].word.as_str(), reduced.items[h].tag.as_str()),
            HeadRef::Root => (ROOT_MARKER, ROOT_MARKER),
        };
        let delta = delta_indexed(reduced, commas, d.modifier, d.head);
        self.dependency_prob(&d.relation, (&it.word, &it.tag), head, delta)
    }

    /// Σ log F̂ over the dependencies; −∞ if any factor is zero.
    pub fn score_dependencies(&self, reduced: &ReducedSentence, sentence: &TaggedSentence, deps: &[Dependency]) -> f64 {
        let commas = CommaIndex::new(sentence, self.model.punctuation());
        deps.iter().map(|d| self.arc_estimate(reduced, &commas, d).log_value()).sum()
    }

    /// Σ log P̂(G_i | context) over the gaps of the unreduced sentence.
    pub fn score_gaps(&self, sentence: &TaggedSentence, gaps: &[Gap]) -> f64 {
        gaps.iter()
            .map(|g| {
                let (l, r) = (&sentence.tokens[g.left], &sentence.tokens[g.right]);
                self.gap_prob(g.tag, (&l.word, &l.tag), (&r.word, &r.tag), g.comma).log_value()
            })
            .sum()
    }

    /// Log of the ranking quantity for an extracted analysis, without any
    /// tag-distribution term.
    pub fn score_extraction(&self, ex: &Extraction) -> TreeScore {
        let dependencies = self.score_dependencies(&ex.reduced, &ex.sentence, &ex.dependencies);
        let gaps = self.score_gaps(&ex.sentence, &ex.gaps);
        TreeScore {
            dependencies,
            gaps,
            tags: 0.0,
        }
    }

    /// Per-arc and per-gap breakdown.
    pub fn explain(&self, ex: &Extraction) -> String {
        let commas = CommaIndex::new(&ex.sentence, self.model.punctuation());
        let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        let mut out = String::new();
        for d in &ex.dependencies {
            let e = self.arc_estimate(&ex.reduced, &commas, d);
            let head = match d.head {
                HeadRef::Word(h) => ex.reduced.items[h].word.clone(),
                HeadRef::Root => ROOT_MARKER.to_string(),
            };
            let _ = writeln!(
                out,
                "arc {} -> {} {}\tE1={} E23={} E4={} l1={:.6} l2={:.6} delta={:?}/{:?} p={:.6e}",
                ex.reduced.items[d.modifier].word,
                head,
                d.relation,
                fmt_opt(e.e1),
                fmt_opt(e.e23),
                fmt_opt(e.e4),
                e.lambda1,
                e.lambda2,
                e.delta,
                e.eta,
                e.value
            );
        }
        for g in &ex.gaps {
            let (l, r) = (&ex.sentence.tokens[g.left], &ex.sentence.tokens[g.right]);
            let e = self.gap_prob(g.tag, (&l.word, &l.tag), (&r.word, &r.tag), g.comma);
            let _ = writeln!(
                out,
                "gap {} {} {} c={}\tE1={} E23={} E4={} l1={:.6} l2={:.6} p={:.6e}",
                l.word,
                g.tag.letter(),
                r.word,
                g.comma as u8,
                fmt_opt(e.e1),
                fmt_opt(e.e23),
                fmt_opt(e.e4),
                e.lambda1,
                e.lambda2,
                e.value
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeScore {
    pub dependencies: f64,
    pub gaps: f64,
    pub tags: f64,
}

impl TreeScore {
    pub fn total(&self) -> f64 {
        self.dependencies + self.gaps + self.tags
    }
}

/// Probability of `tag` for token `i`, floored.
pub fn tag_prob(sentence: &TaggedSentence, i: usize, tag: &str) -> Result<f64, EstimatorError> {
    let dists = sentence.tag_distributions.as_ref().ok_or(EstimatorError::NoDistributions)?;
    Ok(dists[i].iter().find(|(t, _)| t == tag).map_or(TAG_PROB_FLOOR, |(_, p)| p.max(TAG_PROB_FLOOR)))
}

/// Σ_i log P(t_i | S) for the chosen tags.
pub fn tag_distribution_term(sentence: &TaggedSentence, tags: &[&str]) -> Result<f64, EstimatorError> {
    if tags.len() != sentence.len() {
        return Err(EstimatorError::Length {
            found: tags.len(),
            expected: sentence.len(),
        });
    }
    let mut sum = 0.0;
    for (i, t) in tags.iter().enumerate() {
        sum += tag_prob(sentence, i, t)?.ln();
    }
    Ok(sum)
}

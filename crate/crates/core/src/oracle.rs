//! Brute-force reference search for tests: every analysis the chart could
//! build is constructed explicitly, re-extracted and scored through
//! [`Estimator::score_extraction`].

use thiserror::Error;

use crate::chart::assemble::{better, place_punctuation, tie_key};
use crate::chart::{comma_rule_check, ParserConfig, Variant};
use crate::counts::Model;
use crate::depextract::{
    extract_gap_tags, reduce, BaseNpSet, Extraction, HeadRef, ReducedSentence, RelationTriple, TokenSpan,
};
use crate::distance::delta;
use crate::estimator::Estimator;
use crate::headrules::{HeadRuleTable, HeadedNode};
use crate::treebank::{ParseTree, TaggedSentence};
use crate::NP_LABEL;

/// Longest sentence, in words, the enumeration accepts.
pub const MAX_ORACLE_WORDS: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("cannot enumerate an empty sentence")]
    EmptySentence,
    #[error("{words} words exceeds the enumeration bound of {max}")]
    TooLong { words: usize, max: usize },
    #[error("variant {0} is not supported by the enumerator")]
    Unsupported(u8),
}

/// One complete analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// With punctuation placed.
    pub headed: HeadedNode,
    pub tree: ParseTree,
    pub log_score: f64,
    /// Bracketing without punctuation, the tie-break key.
    pub key: String,
}

#[derive(Clone)]
struct Cons {
    node: HeadedNode,
    label: String,
    head_item: usize,
    has_np: bool,
}

struct Ctx<'a> {
    model: &'a Model,
    sentence: &'a TaggedSentence,
    est: Estimator<'a>,
    comma_rule: bool,
    triples: Vec<RelationTriple>,
}

impl Ctx<'_> {
    fn arc_ok(&self, reduced: &ReducedSentence, rel: &RelationTriple, m: usize, h: usize) -> bool {
        let (mi, hi) = (&reduced.items[m], &reduced.items[h]);
        let d = delta(reduced, self.sentence, self.model.punctuation(), m, HeadRef::Word(h));
        self.est.dependency_prob(rel, (&mi.word, &mi.tag), (&hi.word, &hi.tag), d).value > 0.0
    }

    /// Complete constituents over items `a..b`, indexed `[a][b]`.
    fn constituents(&self, reduced: &ReducedSentence) -> Vec<Vec<Vec<Cons>>> {
        let n = reduced.len();
        let mut table: Vec<Vec<Vec<Cons>>> = vec![vec![Vec::new(); n + 1]; n + 1];
        for (a, it) in reduced.items.iter().enumerate() {
            let cons = if it.base_np {
                let leaves: Vec<HeadedNode> = (it.span.start..it.span.end)
                    .map(|i| &self.sentence.tokens[i])
                    .filter(|t| !self.model.punctuation().is_punctuation(&t.tag))
                    .map(|t| HeadedNode::leaf(t.clone()))
                    .collect();
                let hc = leaves.iter().position(|l| l.head == it.orig_index).unwrap();
                Cons {
                    node: HeadedNode::internal(NP_LABEL, leaves, hc),
                    label: NP_LABEL.to_string(),
                    head_item: a,
                    has_np: true,
                }
            } else {
                let t = self.sentence.tokens[it.orig_index].clone();
                Cons {
                    label: t.tag.clone(),
                    node: HeadedNode::leaf(t),
                    head_item: a,
                    has_np: false,
                }
            };
            table[a][a + 1].push(cons);
        }
        for len in 2..=n {
            for a in 0..=n - len {
                let b = a + len;
                let mut out = Vec::new();
                let mut seqs = Vec::new();
                sequences(&table, a, b, &mut Vec::new(), &mut seqs);
                for kids in seqs.iter().filter(|k| k.len() >= 2) {
                    if self.comma_rule && !self.commas_ok(kids) {
                        continue;
                    }
                    for h in 0..kids.len() {
                        self.headed_by(reduced, kids, h, &mut out);
                    }
                }
                table[a][b] = out;
            }
        }
        table
    }

    fn commas_ok(&self, kids: &[&Cons]) -> bool {
        let toks = &self.sentence.tokens;
        let punct = self.model.punctuation();
        kids.windows(2)
            .all(|w| comma_rule_check(toks, punct, w[0].node.end - 1, w[1].node.start, w[1].node.end - 1))
    }

    fn headed_by(&self, reduced: &ReducedSentence, kids: &[&Cons], h: usize, out: &mut Vec<Cons>) {
        let hc = &kids[h].label;
        let has_np = kids.iter().any(|k| k.has_np);
        for p in self.parents(kids, h) {
            if p == NP_LABEL && !has_np {
                continue;
            }
            let arcs_ok = kids.iter().enumerate().filter(|&(i, _)| i != h).all(|(_, k)| {
                let rel = RelationTriple::new(k.label.clone(), p.clone(), hc.clone());
                self.arc_ok(reduced, &rel, k.head_item, kids[h].head_item)
            });
            if arcs_ok {
                out.push(Cons {
                    node: HeadedNode::internal(p.clone(), kids.iter().map(|k| k.node.clone()).collect(), h),
                    label: p,
                    head_item: kids[h].head_item,
                    has_np,
                });
            }
        }
    }

    /// Parents P with every ⟨child, P, head child⟩ attested.
    fn parents(&self, kids: &[&Cons], h: usize) -> Vec<String> {
        let hc = &kids[h].label;
        let mut found: Option<Vec<String>> = None;
        for (i, k) in kids.iter().enumerate() {
            if i == h {
                continue;
            }
            let here: Vec<String> = self
                .triples
                .iter()
                .filter(|t| !t.is_root() && t.modifier == k.label && &t.head_child == hc)
                .map(|t| t.parent.clone())
                .collect();
            found = Some(match found {
                None => here,
                Some(prev) => prev.into_iter().filter(|p| here.contains(p)).collect(),
            });
        }
        let mut v = found.unwrap_or_default();
        v.sort();
        v.dedup();
        v
    }
}

/// All ways to cover items `a..b` with a left-to-right sequence of
/// constituents.
fn sequences<'t>(table: &'t [Vec<Vec<Cons>>], a: usize, b: usize, prefix: &mut Vec<&'t Cons>, out: &mut Vec<Vec<&'t Cons>>) {
    if a == b {
        out.push(prefix.clone());
        return;
    }
    for c in a + 1..=b {
        if prefix.is_empty() && c == b {
            // A single child spanning everything is not a new constituent.
            continue;
        }
        for cons in &table[a][c] {
            prefix.push(cons);
            sequences(table, c, b, prefix, out);
            prefix.pop();
        }
    }
}

/// Every baseNP segmentation over the word positions `words`.
fn segmentations(words: &[usize]) -> Vec<BaseNpSet> {
    let mut out = Vec::new();
    fn go(words: &[usize], k: usize, acc: &mut Vec<TokenSpan>, out: &mut Vec<BaseNpSet>) {
        if k == words.len() {
            out.push(BaseNpSet::new(acc.clone()));
            return;
        }
        go(words, k + 1, acc, out);
        for e in k + 1..=words.len() {
            acc.push(TokenSpan::new(words[k], words[e - 1] + 1));
            go(words, e, acc, out);
            acc.pop();
        }
    }
    go(words, 0, &mut Vec::new(), &mut out);
    out
}

/// Every analysis with nonzero probability, in enumeration order.
pub fn enumerate(
    sentence: &TaggedSentence,
    model: &Model,
    rules: &HeadRuleTable,
    config: &ParserConfig,
) -> Result<Vec<Candidate>, OracleError> {
    if sentence.is_empty() {
        return Err(OracleError::EmptySentence);
    }
    if config.variant == Variant::TagDistributions {
        return Err(OracleError::Unsupported(config.variant.number()));
    }
    let punct = model.punctuation();
    let words: Vec<usize> = sentence
        .tokens
        .iter()
        .filter(|t| !punct.is_punctuation(&t.tag))
        .map(|t| t.index)
        .collect();
    if words.is_empty() {
        return Err(OracleError::EmptySentence);
    }
    if words.len() > MAX_ORACLE_WORDS {
        return Err(OracleError::TooLong {
            words: words.len(),
            max: MAX_ORACLE_WORDS,
        });
    }
    let ctx = Ctx {
        model,
        sentence,
        est: Estimator::new(model, config.variant.tag_blind()),
        comma_rule: config.variant.punctuation_rule(),
        triples: model.triples().map(|(t, _)| t).collect(),
    };
    let root_label = model.most_frequent_root_label().unwrap_or_else(|| "S".to_string());
    let mut out = Vec::new();
    for b in segmentations(&words) {
        let gaps = extract_gap_tags(sentence, &b, punct);
        if ctx.est.score_gaps(sentence, &gaps) == f64::NEG_INFINITY {
            continue;
        }
        let reduced = reduce(sentence, &b, rules, punct);
        let table = ctx.constituents(&reduced);
        for top in &table[0][reduced.len()] {
            if top.label == NP_LABEL && !top.has_np {
                continue;
            }
            if model.triple_id(&RelationTriple::root(top.label.clone())).is_none() {
                continue;
            }
            let headed = place_punctuation(top.node.clone(), &sentence.tokens, &root_label);
            let log_score = rescore(&headed, model, rules, config.variant);
            if log_score == f64::NEG_INFINITY {
                continue;
            }
            out.push(Candidate {
                tree: headed.to_tree(),
                key: tie_key(&top.node),
                headed,
                log_score,
            });
        }
    }
    Ok(out)
}

/// The highest-scoring analysis under the shared tie-break, or `None` when
/// every analysis has probability zero.
pub fn enumerate_best(
    sentence: &TaggedSentence,
    model: &Model,
    rules: &HeadRuleTable,
    config: &ParserConfig,
) -> Result<Option<Candidate>, OracleError> {
    let mut best: Option<Candidate> = None;
    for c in enumerate(sentence, model, rules, config)? {
        let wins = match &best {
            None => true,
            Some(b) => better(c.log_score, &|| c.key.clone(), b.log_score, &|| b.key.clone()),
        };
        if wins {
            best = Some(c);
        }
    }
    Ok(best)
}

/// Log-score of a headed tree by direct extraction; −∞ if it cannot be
/// extracted or has a zero factor.
pub fn rescore(tree: &HeadedNode, model: &Model, rules: &HeadRuleTable, variant: Variant) -> f64 {
    match Extraction::from_headed(tree, rules, model.punctuation()) {
        Ok(ex) => Estimator::new(model, variant.tag_blind()).score_extraction(&ex).total(),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::parse;
    use crate::counts::{train, TrainConfig};
    use crate::treebank::{read_tagged_sentence, read_trees, ReaderConfig};

    fn setup(s: &str) -> (Model, HeadRuleTable) {
        let rules = HeadRuleTable::standard();
        let t = read_trees(s, &ReaderConfig::default()).unwrap();
        (train(&t, &rules, &TrainConfig::default()).unwrap(), rules)
    }

    #[test]
    fn two_words_one_triple() {
        // Only ⟨NN,S,VBD⟩ (plus the root triple) is attested.
        let (m, rules) = setup("(S (NN a) (VBD b))");
        let s = read_tagged_sentence("a/NN b/VBD").unwrap();
        let cfg = ParserConfig::exhaustive(Variant::TagBlind);
        let all = enumerate(&s, &m, &rules, &cfg).unwrap();
        let keys: Vec<&str> = all.iter().map(|c| c.key.as_str()).collect();
        assert_eq!(keys, ["(S (NN a) (VBD b))"]);
        let best = enumerate_best(&s, &m, &rules, &cfg).unwrap().unwrap();
        let chart = parse(&s, &m, &rules, &cfg).unwrap();
        assert!((best.log_score - chart.log_score).abs() < 1e-9);
        assert_eq!(best.tree, chart.tree);
    }

    #[test]
    fn segmentations_cover_all_choices() {
        // Each of 3 words alone, or inside one of the contiguous blocks.
        let segs = segmentations(&[0, 1, 2]);
        assert_eq!(segs.len(), 13);
        assert!(segs.contains(&BaseNpSet::new(vec![])));
        assert!(segs.contains(&BaseNpSet::new(vec![TokenSpan::new(0, 3)])));
    }

    #[test]
    fn refusals() {
        let (m, rules) = setup("(S (NN a) (VBD b))");
        let cfg = ParserConfig::exhaustive(Variant::Base);
        assert_eq!(
            enumerate(&TaggedSentence::new(vec![]), &m, &rules, &cfg),
            Err(OracleError::EmptySentence)
        );
        let long = read_tagged_sentence("a/NN a/NN a/NN a/NN a/NN a/NN a/NN b/VBD").unwrap();
        assert!(matches!(enumerate(&long, &m, &rules, &cfg), Err(OracleError::TooLong { words: 8, .. })));
        let v4 = ParserConfig::exhaustive(Variant::TagDistributions);
        assert_eq!(enumerate(&long, &m, &rules, &v4), Err(OracleError::Unsupported(4)));
    }

    #[test]
    fn agrees_with_chart_on_small_corpus() {
        let (m, rules) = setup(
            "(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (DT a) (NN cat))) (. .)) \
             (S (NP (NNP Kim)) (, ,) (VP (VBD saw) (NP (DT the) (NN cat)) (PP (IN with) (NP (DT a) (NN hat)))))",
        );
        let s = read_tagged_sentence("the/DT cat/NN saw/VBD a/DT dog/NN ./.").unwrap();
        for v in [Variant::Base, Variant::PunctuationRule, Variant::TagBlind] {
            let cfg = ParserConfig::exhaustive(v);
            let best = enumerate_best(&s, &m, &rules, &cfg).unwrap().unwrap();
            let chart = parse(&s, &m, &rules, &cfg).unwrap();
            assert!((best.log_score - chart.log_score).abs() < 1e-9, "{v:?}");
            assert_eq!(best.tree, chart.tree);
        }
    }
}

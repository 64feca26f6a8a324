//! Bottom-up chart parsing over the non-punctuation words of a sentence.
//!
//! Seeds are single words and every contiguous span as a baseNP candidate.
//! Adjacent edges combine either under a new parent (an attested triple,
//! with the head on either side) or by adding a modifier to an existing
//! phrase. Right modifiers attach before left ones so each n-ary
//! constituent has one derivation. Every join adds the junction gap factor
//! and the dependency factor.

pub mod assemble;

use std::cmp::Ordering;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counts::{Model, ANY};
use crate::depextract::GapTag;
use crate::distance::{is_verb_tag, CommaBucket, CommaIndex, Delta};
use crate::estimator::{tag_prob, Estimator, EstimatorError};
use crate::headrules::{HeadRuleTable, HeadedNode};
use crate::treebank::{ParseTree, Punctuation, TaggedSentence, Token};
use crate::NP_LABEL;

use assemble::{better, flat_tree, place_punctuation, tie_key};

/// Cumulative model configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    Base = 1,
    PunctuationRule = 2,
    TagBlind = 3,
    TagDistributions = 4,
}

impl Variant {
    pub fn from_number(n: u8) -> Option<Variant> {
        match n {
            1 => Some(Variant::Base),
            2 => Some(Variant::PunctuationRule),
            3 => Some(Variant::TagBlind),
            4 => Some(Variant::TagDistributions),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn punctuation_rule(self) -> bool {
        self >= Variant::PunctuationRule
    }

    pub fn tag_blind(self) -> bool {
        self >= Variant::TagBlind
    }

    pub fn tag_distributions(self) -> bool {
        self == Variant::TagDistributions
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParserConfig {
    /// Per-span beam β; edges below best/β are dropped. Infinity disables.
    pub beam: f64,
    /// Initial per-factor probability threshold; `None` disables.
    pub threshold: Option<f64>,
    pub threshold_decay: f64,
    pub threshold_floor: f64,
    pub variant: Variant,
    /// Longer sentences (in words) get the fallback tree.
    pub max_len: Option<usize>,
    /// With tag distributions: keep tags with p ≥ ratio × p(best).
    pub tag_ratio: f64,
    pub max_tags: usize,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            beam: 1000.0,
            threshold: Some(1e-12),
            threshold_decay: 1e-3,
            threshold_floor: 1e-24,
            variant: Variant::TagBlind,
            max_len: None,
            tag_ratio: 0.01,
            max_tags: 3,
        }
    }
}

impl ParserConfig {
    /// No beam and no threshold.
    pub fn exhaustive(variant: Variant) -> Self {
        ParserConfig {
            beam: f64::INFINITY,
            threshold: None,
            variant,
            ..ParserConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ParseError> {
        let bad = |m: &str| Err(ParseError::BadConfig(m.to_string()));
        if self.beam.is_nan() || self.beam < 1.0 {
            return bad("beam must be at least 1");
        }
        if !(self.threshold_decay > 0.0 && self.threshold_decay < 1.0) {
            return bad("threshold decay must lie in (0, 1)");
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t <= 1.0) || !(self.threshold_floor > 0.0 && self.threshold_floor <= t) {
                return bad("thresholds must satisfy 0 < floor <= initial <= 1");
            }
        }
        if self.max_tags == 0 || !(0.0..=1.0).contains(&self.tag_ratio) {
            return bad("tag ratio must lie in [0, 1] and max tags be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("cannot parse an empty sentence")]
    EmptySentence,
    #[error("bad parser configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// No analysis survived at the lowest threshold.
    NoParse,
    TooLong,
    /// Only punctuation.
    NoWords,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub tree: ParseTree,
    /// The analysis with the parser's head choices.
    pub headed: HeadedNode,
    /// Log of the ranking quantity; −∞ for fallback trees.
    pub log_score: f64,
    pub fallback: Option<Fallback>,
    /// Chart runs made (threshold retries + 1).
    pub attempts: usize,
    /// Edges kept over all runs.
    pub edges: usize,
}

/// Whether Y, whose last word is token `y_last`, may follow a sibling it is
/// separated from by a comma: it must be directly followed by a comma or end
/// the sentence's words.
pub fn comma_follows_or_final(tokens: &[Token], punct: &Punctuation, y_last: usize) -> bool {
    let last_word = tokens.iter().rposition(|t| !punct.is_punctuation(&t.tag));
    Some(y_last) == last_word || tokens.get(y_last + 1).is_some_and(|t| punct.is_comma(&t.tag))
}

/// The comma constraint for adjacent children X (last word `x_last`) and Y
/// (words `y_first..=y_last`).
pub fn comma_rule_check(tokens: &[Token], punct: &Punctuation, x_last: usize, y_first: usize, y_last: usize) -> bool {
    let separated = tokens[x_last + 1..y_first].iter().any(|t| punct.is_comma(&t.tag));
    !separated || comma_follows_or_final(tokens, punct, y_last)
}

const ITEMS_L: u16 = 1;
const ITEMS_R: u16 = 2;
const VERB_L: u16 = 4;
const VERB_R: u16 = 8;
const NP_L: u16 = 16;
const NP_R: u16 = 32;
const LEFT_MOD: u16 = 64;
const FIRST_OK: u16 = 128;
const HAS_NP: u16 = 256;

/// Beyond this many per-span tag combinations only the likeliest are seeded.
const MAX_BASE_NP_TAGINGS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Kind {
    Word,
    BaseNp,
    Phrase,
}

/// Everything the rest of the search can observe about an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    kind: Kind,
    label: u32,
    hc: u32,
    head_pos: u16,
    head_tag: u8,
    item_start: u16,
    item_end: u16,
    first_tag: u8,
    last_tag: u8,
    flags: u16,
}

impl Key {
    fn has(&self, f: u16) -> bool {
        self.flags & f != 0
    }
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    NewHeadLeft,
    NewHeadRight,
    ExtendRight,
    ExtendLeft,
}

#[derive(Debug, Clone)]
enum Back {
    Word,
    BaseNp(Vec<u8>),
    Join { left: (u32, u32), right: (u32, u32), mode: Mode },
}

#[derive(Debug, Clone)]
struct Edge {
    key: Key,
    score: f64,
    factors: u32,
    back: Back,
}

struct TagChoice {
    sym: u32,
    name: String,
    logp: f64,
    verb: bool,
}

struct Word {
    tok: usize,
    word: u32,
    tags: Vec<TagChoice>,
}

/// A model prepared for parsing.
pub struct Parser<'m> {
    model: &'m Model,
    rules: &'m HeadRuleTable,
    config: ParserConfig,
    est: Estimator<'m>,
    by_children: FxHashMap<(u32, u32), Vec<(u32, u32)>>,
    root_triples: FxHashMap<u32, u32>,
    np: u32,
    root: u32,
    root_label: String,
}

impl<'m> Parser<'m> {
    pub fn new(model: &'m Model, rules: &'m HeadRuleTable, config: ParserConfig) -> Result<Self, ParseError> {
        config.validate()?;
        if rules.digest() != model.meta().head_rule_digest {
            log::warn!("head rules differ from those the model was trained with");
        }
        let root = model.root_symbol();
        let mut by_children: FxHashMap<(u32, u32), Vec<(u32, u32)>> = FxHashMap::default();
        let mut root_triples = FxHashMap::default();
        for id in 0..model.num_triples() as u32 {
            let [m, p, h] = model.triple_symbols(id);
            if m == root && h == root {
                root_triples.insert(p, id);
            } else {
                by_children.entry((m, h)).or_default().push((p, id));
            }
        }
        Ok(Parser {
            model,
            rules,
            est: Estimator::new(model, config.variant.tag_blind()),
            config,
            by_children,
            root_triples,
            np: model.symbol_or_unknown(NP_LABEL),
            root,
            root_label: model.most_frequent_root_label().unwrap_or_else(|| "S".to_string()),
        })
    }

    pub fn config(&self) -> &ParserConfig {
        &self.config
    }

    pub fn parse(&self, sentence: &TaggedSentence) -> Result<ParseOutcome, ParseError> {
        if sentence.is_empty() {
            return Err(ParseError::EmptySentence);
        }
        let v4 = self.config.variant.tag_distributions();
        if v4 && sentence.tag_distributions.is_none() {
            return Err(EstimatorError::NoDistributions.into());
        }
        let punct = self.model.punctuation();
        let words = self.words(sentence)?;
        let fallback = |kind, attempts, edges| ParseOutcome {
            headed: flat_tree(&sentence.tokens, &self.root_label, self.rules, punct),
            tree: flat_tree(&sentence.tokens, &self.root_label, self.rules, punct).to_tree(),
            log_score: f64::NEG_INFINITY,
            fallback: Some(kind),
            attempts,
            edges,
        };
        if words.is_empty() {
            return Ok(fallback(Fallback::NoWords, 0, 0));
        }
        if self.config.max_len.is_some_and(|m| words.len() > m) {
            return Ok(fallback(Fallback::TooLong, 0, 0));
        }
        let mut punct_tags = 0.0;
        if v4 {
            for t in &sentence.tokens {
                if punct.is_punctuation(&t.tag) {
                    punct_tags += tag_prob(sentence, t.index, &t.tag)?.ln();
                }
            }
        }
        let mut chart = Chart::new(self, sentence, words);
        let mut threshold = self.config.threshold;
        let mut attempts = 0;
        let mut edges = 0;
        loop {
            attempts += 1;
            let found = chart.run(threshold.map(f64::ln));
            edges += chart.edge_count();
            if let Some((score, cell, idx)) = found {
                let node = chart.build(&chart.cells[cell][idx]);
                let tokens = chart.output_tokens(&node);
                let headed = place_punctuation(node, &tokens, &self.root_label);
                return Ok(ParseOutcome {
                    tree: headed.to_tree(),
                    headed,
                    log_score: score + punct_tags,
                    fallback: None,
                    attempts,
                    edges,
                });
            }
            match threshold {
                Some(t) if t * self.config.threshold_decay >= self.config.threshold_floor * (1.0 - 1e-9) => {
                    threshold = Some(t * self.config.threshold_decay);
                }
                _ => break,
            }
        }
        Ok(fallback(Fallback::NoParse, attempts, edges))
    }

    fn words(&self, sentence: &TaggedSentence) -> Result<Vec<Word>, ParseError> {
        let punct = self.model.punctuation();
        let v4 = self.config.variant.tag_distributions();
        let mut out = Vec::new();
        for t in &sentence.tokens {
            if punct.is_punctuation(&t.tag) {
                continue;
            }
            let mut tags: Vec<(String, f64)> = if v4 {
                let dist = &sentence.tag_distributions.as_ref().unwrap()[t.index];
                let best = tag_prob(sentence, t.index, &t.tag)?;
                let mut c: Vec<(String, f64)> = dist
                    .iter()
                    .filter(|(g, p)| *p >= self.config.tag_ratio * best && !punct.is_punctuation(g))
                    .cloned()
                    .collect();
                c.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
                c.truncate(self.config.max_tags);
                c
            } else {
                vec![(t.tag.clone(), 1.0)]
            };
            if tags.is_empty() {
                tags.push((t.tag.clone(), tag_prob(sentence, t.index, &t.tag)?));
            }
            out.push(Word {
                tok: t.index,
                word: self.model.symbol_or_unknown(&t.word),
                tags: tags
                    .into_iter()
                    .map(|(name, p)| TagChoice {
                        sym: self.model.symbol_or_unknown(&name),
                        verb: is_verb_tag(&name),
                        logp: if v4 { p.max(crate::estimator::TAG_PROB_FLOOR).ln() } else { 0.0 },
                        name,
                    })
                    .collect(),
            });
        }
        Ok(out)
    }
}

/// Parse with a freshly prepared [`Parser`].
pub fn parse(
    sentence: &TaggedSentence,
    model: &Model,
    rules: &HeadRuleTable,
    config: &ParserConfig,
) -> Result<ParseOutcome, ParseError> {
    Parser::new(model, rules, config.clone())?.parse(sentence)
}

struct Cell {
    edges: Vec<Edge>,
    index: FxHashMap<Key, usize>,
}

struct Chart<'p, 'm> {
    p: &'p Parser<'m>,
    sentence: &'p TaggedSentence,
    words: Vec<Word>,
    commas: CommaIndex,
    /// comma_before[k]: a comma lies between words k-1 and k.
    comma_before: Vec<bool>,
    /// ok_end[e]: a constituent ending with word e-1 satisfies the comma rule.
    ok_end: Vec<bool>,
    cells: Vec<Vec<Edge>>,
    gap_memo: FxHashMap<(u16, u8, u8, u8), f64>,
    dep_memo: FxHashMap<(u32, u32, u32, u32, u32, u8), f64>,
}

impl<'p, 'm> Chart<'p, 'm> {
    fn new(p: &'p Parser<'m>, sentence: &'p TaggedSentence, words: Vec<Word>) -> Self {
        let punct = p.model.punctuation();
        let toks = &sentence.tokens;
        let w = words.len();
        let comma_before = (0..w)
            .map(|k| k > 0 && toks[words[k - 1].tok + 1..words[k].tok].iter().any(|t| punct.is_comma(&t.tag)))
            .collect();
        let ok_end = (0..=w)
            .map(|e| e > 0 && comma_follows_or_final(toks, punct, words[e - 1].tok))
            .collect();
        Chart {
            p,
            sentence,
            commas: CommaIndex::new(sentence, punct),
            comma_before,
            ok_end,
            cells: Vec::new(),
            gap_memo: FxHashMap::default(),
            dep_memo: FxHashMap::default(),
            words,
        }
    }

    fn cell_id(&self, i: usize, j: usize) -> usize {
        i * (self.words.len() + 1) + j
    }

    fn edge_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    fn head_word(&self, k: &Key) -> (u32, u32) {
        let w = &self.words[k.head_pos as usize];
        (w.word, w.tags[k.head_tag as usize].sym)
    }

    fn head_verb(&self, k: &Key) -> bool {
        self.words[k.head_pos as usize].tags[k.head_tag as usize].verb
    }

    fn any_verb(&self, k: &Key) -> bool {
        k.has(VERB_L) || k.has(VERB_R) || self.head_verb(k)
    }

    fn complete(&self, k: &Key) -> bool {
        !(k.kind == Kind::Phrase && k.label == self.p.np && !k.has(HAS_NP))
    }

    fn gap_cost(&mut self, k: usize, lt: u8, rt: u8, g: GapTag) -> f64 {
        let key = (k as u16, lt, rt, g.code());
        if let Some(&v) = self.gap_memo.get(&key) {
            return v;
        }
        let (l, r) = (&self.words[k - 1], &self.words[k]);
        let v = self
            .p
            .est
            .gap_prob_ids(g, (l.word, l.tags[lt as usize].sym), (r.word, r.tags[rt as usize].sym), self.comma_before[k])
            .value
            .ln();
        self.gap_memo.insert(key, v);
        v
    }

    fn arc_cost(&mut self, triple: u32, m: (u32, u32), h: (u32, u32), delta: u8) -> f64 {
        let key = (triple, m.0, m.1, h.0, h.1, delta);
        if let Some(&v) = self.dep_memo.get(&key) {
            return v;
        }
        let v = self.p.est.dependency_prob_ids(triple, m, h, delta).value.ln();
        self.dep_memo.insert(key, v);
        v
    }

    /// Δ for a modifier/head pair drawn from adjacent edges `l` and `r`.
    fn delta_between(&self, l: &Key, r: &Key, head_left: bool) -> u8 {
        let l_end = self.words[l.item_end as usize - 1].tok + 1;
        let r_start = self.words[r.item_start as usize].tok;
        let (commas, after, before) = self.commas.between(l_end, r_start);
        Delta::Pair {
            head_precedes: head_left,
            adjacent: !l.has(ITEMS_R) && !r.has(ITEMS_L),
            verb_between: l.has(VERB_R) || r.has(VERB_L),
            commas: if l_end >= r_start { CommaBucket::Zero } else { commas },
            comma_after_first: after,
            comma_before_second: before,
        }
        .code()
    }

    #[allow(clippy::too_many_arguments)]
    fn combined(&self, l: &Key, r: &Key, head_left: bool, label: u32, hc: u32, left_mod: bool, first_ok: bool) -> Key {
        let h = if head_left { l } else { r };
        let mut flags = 0;
        let mut set = |f: u16, on: bool| {
            if on {
                flags |= f
            }
        };
        if head_left {
            set(ITEMS_L, l.has(ITEMS_L));
            set(VERB_L, l.has(VERB_L));
            set(ITEMS_R, true);
            set(VERB_R, l.has(VERB_R) || self.any_verb(r));
        } else {
            set(ITEMS_L, true);
            set(VERB_L, r.has(VERB_L) || self.any_verb(l));
            set(ITEMS_R, r.has(ITEMS_R));
            set(VERB_R, r.has(VERB_R));
        }
        set(NP_L, l.has(NP_L));
        set(NP_R, r.has(NP_R));
        set(HAS_NP, l.has(HAS_NP) || r.has(HAS_NP));
        set(LEFT_MOD, left_mod);
        set(FIRST_OK, first_ok);
        Key {
            kind: Kind::Phrase,
            label,
            hc,
            head_pos: h.head_pos,
            head_tag: h.head_tag,
            item_start: h.item_start,
            item_end: h.item_end,
            first_tag: l.first_tag,
            last_tag: r.last_tag,
            flags,
        }
    }

    fn insert(&self, cell: &mut Cell, edge: Edge) {
        match cell.index.get(&edge.key) {
            None => {
                cell.index.insert(edge.key, cell.edges.len());
                cell.edges.push(edge);
            }
            Some(&i) => {
                let old = &cell.edges[i];
                if better(edge.score, &|| tie_key(&self.build(&edge)), old.score, &|| tie_key(&self.build(old))) {
                    cell.edges[i] = edge;
                }
            }
        }
    }

    fn seed(&mut self, i: usize, j: usize, cell: &mut Cell) {
        let np = self.p.np;
        if j == i + 1 {
            for (c, t) in self.words[i].tags.iter().enumerate() {
                let key = Key {
                    kind: Kind::Word,
                    label: t.sym,
                    hc: ANY,
                    head_pos: i as u16,
                    head_tag: c as u8,
                    item_start: i as u16,
                    item_end: j as u16,
                    first_tag: c as u8,
                    last_tag: c as u8,
                    flags: 0,
                };
                let v4 = self.p.config.variant.tag_distributions();
                self.insert(
                    cell,
                    Edge {
                        key,
                        score: t.logp,
                        factors: v4 as u32,
                        back: Back::Word,
                    },
                );
            }
        }
        // Tag sequences for the span, likeliest first.
        let mut combos: Vec<(Vec<u8>, f64)> = vec![(Vec::new(), 0.0)];
        for k in i..j {
            let mut next = Vec::new();
            for (seq, lp) in &combos {
                for (c, t) in self.words[k].tags.iter().enumerate() {
                    let mut s = seq.clone();
                    s.push(c as u8);
                    next.push((s, lp + t.logp));
                }
            }
            next.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
            next.truncate(MAX_BASE_NP_TAGINGS);
            combos = next;
        }
        let punct = self.p.model.punctuation().clone();
        let v4 = self.p.config.variant.tag_distributions();
        for (seq, tag_lp) in combos {
            let mut score = tag_lp;
            for k in i + 1..j {
                score += self.gap_cost(k, seq[k - 1 - i], seq[k - i], GapTag::Continue);
            }
            if score == f64::NEG_INFINITY {
                continue;
            }
            let (t0, t1) = (self.words[i].tok, self.words[j - 1].tok);
            let mut tags: Vec<&str> = Vec::with_capacity(t1 + 1 - t0);
            let mut w = i;
            for tok in &self.sentence.tokens[t0..=t1] {
                if w < j && self.words[w].tok == tok.index {
                    tags.push(&self.words[w].tags[seq[w - i] as usize].name);
                    w += 1;
                } else {
                    tags.push(&tok.tag);
                }
            }
            let h_tok = t0 + self.p.rules.head_child_excluding(NP_LABEL, &tags, |x| punct.is_punctuation(tags[x]));
            let head_pos = (i..j).find(|&k| self.words[k].tok == h_tok).unwrap_or(j - 1);
            let key = Key {
                kind: Kind::BaseNp,
                label: np,
                hc: ANY,
                head_pos: head_pos as u16,
                head_tag: seq[head_pos - i],
                item_start: i as u16,
                item_end: j as u16,
                first_tag: seq[0],
                last_tag: seq[j - 1 - i],
                flags: NP_L | NP_R | HAS_NP,
            };
            let factors = (j - i - 1) as u32 + if v4 { (j - i) as u32 } else { 0 };
            self.insert(
                cell,
                Edge {
                    key,
                    score,
                    factors,
                    back: Back::BaseNp(seq),
                },
            );
        }
    }

    fn join_all(&mut self, i: usize, k: usize, j: usize, cell: &mut Cell) {
        let (lc, rc) = (self.cell_id(i, k), self.cell_id(k, j));
        let punct_rule = self.p.config.variant.punctuation_rule();
        let comma_sep = self.comma_before[k];
        let y_ok = !punct_rule || !comma_sep || self.ok_end[j];
        let first_ok = self.ok_end[k];
        let (nl, nr) = (self.cells[lc].len(), self.cells[rc].len());
        for li in 0..nl {
            for ri in 0..nr {
                let (l, r) = (self.cells[lc][li].key, self.cells[rc][ri].key);
                let junction = GapTag::junction(l.has(NP_R), r.has(NP_L));
                let gap = self.gap_cost(k, l.last_tag, r.first_tag, junction);
                if gap == f64::NEG_INFINITY {
                    continue;
                }
                let base = self.cells[lc][li].score + self.cells[rc][ri].score + gap;
                let factors = self.cells[lc][li].factors + self.cells[rc][ri].factors + 2;
                let (l_ref, r_ref) = ((lc as u32, li as u32), (rc as u32, ri as u32));
                let (l_ok, r_ok) = (self.complete(&l), self.complete(&r));
                let d_left = self.delta_between(&l, &r, true);
                let d_right = self.delta_between(&l, &r, false);
                let (hw_l, hw_r) = (self.head_word(&l), self.head_word(&r));
                let mut emit = |this: &mut Self, key: Key, cost: f64, mode: Mode| {
                    if cost == f64::NEG_INFINITY {
                        return;
                    }
                    this.insert(
                        cell,
                        Edge {
                            key,
                            score: base + cost,
                            factors,
                            back: Back::Join {
                                left: l_ref,
                                right: r_ref,
                                mode,
                            },
                        },
                    );
                };
                if l_ok && r_ok && y_ok {
                    if let Some(parents) = self.p.by_children.get(&(l.label, r.label)) {
                        for &(p, t) in parents {
                            let cost = self.arc_cost(t, hw_l, hw_r, d_right);
                            let key = self.combined(&l, &r, false, p, r.label, true, first_ok);
                            emit(self, key, cost, Mode::NewHeadRight);
                        }
                    }
                    if let Some(parents) = self.p.by_children.get(&(r.label, l.label)) {
                        for &(p, t) in parents {
                            let cost = self.arc_cost(t, hw_r, hw_l, d_left);
                            let key = self.combined(&l, &r, true, p, l.label, false, first_ok);
                            emit(self, key, cost, Mode::NewHeadLeft);
                        }
                    }
                }
                if l.kind == Kind::Phrase && !l.has(LEFT_MOD) && r_ok && y_ok {
                    if let Some(t) = self.p.model.triple_id_by_symbols([r.label, l.label, l.hc]) {
                        let cost = self.arc_cost(t, hw_r, hw_l, d_left);
                        let key = self.combined(&l, &r, true, l.label, l.hc, false, l.has(FIRST_OK));
                        emit(self, key, cost, Mode::ExtendRight);
                    }
                }
                if r.kind == Kind::Phrase && l_ok && (!punct_rule || !comma_sep || r.has(FIRST_OK)) {
                    if let Some(t) = self.p.model.triple_id_by_symbols([l.label, r.label, r.hc]) {
                        let cost = self.arc_cost(t, hw_l, hw_r, d_right);
                        let key = self.combined(&l, &r, false, r.label, r.hc, true, first_ok);
                        emit(self, key, cost, Mode::ExtendLeft);
                    }
                }
            }
        }
    }

    fn prune(&self, cell: Cell, log_threshold: Option<f64>) -> Vec<Edge> {
        let best = cell.edges.iter().map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
        let floor = best - self.p.config.beam.ln();
        cell.edges
            .into_iter()
            .filter(|e| e.score >= floor && log_threshold.is_none_or(|t| e.score >= e.factors as f64 * t))
            .collect()
    }

    /// Fill the chart; returns the best root (score, cell, index).
    fn run(&mut self, log_threshold: Option<f64>) -> Option<(f64, usize, usize)> {
        let w = self.words.len();
        self.cells = vec![Vec::new(); (w + 1) * (w + 1)];
        for len in 1..=w {
            for i in 0..=w - len {
                let j = i + len;
                let mut cell = Cell {
                    edges: Vec::new(),
                    index: FxHashMap::default(),
                };
                self.seed(i, j, &mut cell);
                for k in i + 1..j {
                    self.join_all(i, k, j, &mut cell);
                }
                let id = self.cell_id(i, j);
                self.cells[id] = self.prune(cell, log_threshold);
            }
        }
        let top = self.cell_id(0, w);
        let root = (self.p.root, self.p.root);
        let mut best: Option<(f64, usize)> = None;
        for idx in 0..self.cells[top].len() {
            let key = self.cells[top][idx].key;
            if !self.complete(&key) {
                continue;
            }
            let Some(&t) = self.p.root_triples.get(&key.label) else { continue };
            let s = self.cells[top][idx].score + self.arc_cost(t, self.head_word(&key), root, Delta::ROOT_CODE);
            if s == f64::NEG_INFINITY {
                continue;
            }
            let wins = match best {
                None => true,
                Some((bs, bi)) => better(
                    s,
                    &|| tie_key(&self.build(&self.cells[top][idx])),
                    bs,
                    &|| tie_key(&self.build(&self.cells[top][bi])),
                ),
            };
            if wins {
                best = Some((s, idx));
            }
        }
        best.map(|(s, i)| (s, top, i))
    }

    fn token(&self, pos: usize, tag: u8) -> Token {
        let w = &self.words[pos];
        Token::new(self.sentence.tokens[w.tok].word.clone(), w.tags[tag as usize].name.clone(), w.tok)
    }

    /// The analysis of an edge, without punctuation.
    fn build(&self, e: &Edge) -> HeadedNode {
        let k = &e.key;
        match &e.back {
            Back::Word => HeadedNode::leaf(self.token(k.head_pos as usize, k.head_tag)),
            Back::BaseNp(seq) => {
                let start = k.item_start as usize;
                let leaves = (start..k.item_end as usize)
                    .map(|p| HeadedNode::leaf(self.token(p, seq[p - start])))
                    .collect();
                HeadedNode::internal(NP_LABEL, leaves, k.head_pos as usize - start)
            }
            Back::Join { left, right, mode } => {
                let l = self.build(&self.cells[left.0 as usize][left.1 as usize]);
                let r = self.build(&self.cells[right.0 as usize][right.1 as usize]);
                let label = self.p.model.name(k.label);
                match mode {
                    Mode::NewHeadLeft => HeadedNode::internal(label, vec![l, r], 0),
                    Mode::NewHeadRight => HeadedNode::internal(label, vec![l, r], 1),
                    Mode::ExtendRight => {
                        let hc = l.head_child.unwrap_or(0);
                        let mut kids = l.children;
                        kids.push(r);
                        HeadedNode::internal(label, kids, hc)
                    }
                    Mode::ExtendLeft => {
                        let hc = r.head_child.unwrap_or(0) + 1;
                        let mut kids = vec![l];
                        kids.extend(r.children);
                        HeadedNode::internal(label, kids, hc)
                    }
                }
            }
        }
    }

    /// Sentence tokens with the tags the analysis chose.
    fn output_tokens(&self, node: &HeadedNode) -> Vec<Token> {
        let mut toks = self.sentence.tokens.clone();
        for t in node.tokens() {
            let i = t.index;
            toks[i] = t;
        }
        toks
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{train, TrainConfig};
    use crate::depextract::Extraction;
    use crate::treebank::{read_tagged_sentence, read_trees, ReaderConfig};

    fn setup(treebank: &str) -> (Model, HeadRuleTable) {
        let rules = HeadRuleTable::standard();
        let t = read_trees(treebank, &ReaderConfig::default()).unwrap();
        (train(&t, &rules, &TrainConfig::default()).unwrap(), rules)
    }

    #[test]
    fn memorizes_one_tree() {
        let gold = "(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (DT a) (NN cat))) (. .))";
        let (m, rules) = setup(gold);
        let s = read_tagged_sentence("the/DT dog/NN saw/VBD a/DT cat/NN ./.").unwrap();
        let out = parse(&s, &m, &rules, &ParserConfig::default()).unwrap();
        assert_eq!(out.fallback, None);
        assert_eq!(out.tree.to_string(), gold);
    }

    #[test]
    fn score_agrees_with_rescoring() {
        let (m, rules) = setup(
            "(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (DT a) (NN cat))) (. .)) \
             (S (NP (NNP Kim)) (, ,) (VP (VBD saw) (NP (DT the) (NN cat)) (PP (IN with) (NP (DT a) (NN hat)))))",
        );
        let s = read_tagged_sentence("Kim/NNP ,/, saw/VBD a/DT dog/NN with/IN the/DT hat/NN ./.").unwrap();
        for v in [Variant::Base, Variant::PunctuationRule, Variant::TagBlind] {
            let out = parse(&s, &m, &rules, &ParserConfig::exhaustive(v)).unwrap();
            assert!(out.fallback.is_none());
            let ex = Extraction::from_headed(&out.headed, &rules, m.punctuation()).unwrap();
            let re = Estimator::new(&m, v.tag_blind()).score_extraction(&ex).total();
            assert!((re - out.log_score).abs() < 1e-9, "{re} vs {}", out.log_score);
        }
    }

    #[test]
    fn explicit_no_parse_falls_back() {
        let (m, rules) = setup("(S (NP (NN a)) (VP (VBD b)))");
        let s = read_tagged_sentence("x/JJ y/RB").unwrap();
        let out = parse(&s, &m, &rules, &ParserConfig::default()).unwrap();
        assert_eq!(out.fallback, Some(Fallback::NoParse));
        assert_eq!(out.attempts, 5);
        assert_eq!(out.tree.to_string(), "(S (JJ x) (RB y))");
        assert_eq!(out.log_score, f64::NEG_INFINITY);
        assert!(parse(&TaggedSentence::new(vec![]), &m, &rules, &ParserConfig::default()).is_err());
    }

    #[test]
    fn comma_rule_cases() {
        let p = Punctuation::default();
        let s = read_tagged_sentence("a/NN ,/, b/NN ,/, c/VB d/NN").unwrap();
        assert!(comma_rule_check(&s.tokens, &p, 0, 2, 2));
        assert!(!comma_rule_check(&s.tokens, &p, 0, 2, 4));
        assert!(comma_rule_check(&s.tokens, &p, 4, 5, 5));
        assert!(comma_rule_check(&s.tokens, &p, 2, 4, 5));
    }

    #[test]
    fn config_validation() {
        assert!(ParserConfig { beam: 0.5, ..ParserConfig::default() }.validate().is_err());
        assert!(ParserConfig { threshold_decay: 1.0, ..ParserConfig::default() }.validate().is_err());
        assert!(ParserConfig::default().validate().is_ok());
        assert_eq!(Variant::from_number(3), Some(Variant::TagBlind));
        assert!(Variant::TagDistributions.tag_blind());
        assert!(!Variant::Base.punctuation_rule());
    }
}

//! Labeled precision/recall and crossing brackets.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::treebank::{ParseTree, Punctuation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{gold} gold trees but {test} test trees")]
    Count { gold: usize, test: usize },
    #[error("sentence {sentence}: gold and test words differ ({message})")]
    Alignment { sentence: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Treat PRT as ADVP.
    pub collapse_advp_prt: bool,
    pub exclude_root: bool,
    pub punctuation: Punctuation,
}

/// (label, first word, one past last word) over non-punctuation positions.
pub type Constituent = (String, usize, usize);

/// Labeled constituents of a tree, excluding preterminals. `mask[i]` says
/// whether token `i` counts as a word.
pub fn constituents(tree: &ParseTree, mask: &[bool], opts: &EvalOptions) -> Vec<Constituent> {
    let mut word_index = Vec::with_capacity(mask.len() + 1);
    let mut n = 0;
    for &m in mask {
        word_index.push(n);
        n += m as usize;
    }
    word_index.push(n);
    let mut out = Vec::new();
    fn go(t: &ParseTree, pos: &mut usize, wi: &[usize], root: bool, opts: &EvalOptions, out: &mut Vec<Constituent>) {
        match t {
            ParseTree::Leaf(_) => *pos += 1,
            ParseTree::Node { label, children } => {
                let start = *pos;
                for c in children {
                    go(c, pos, wi, false, opts, out);
                }
                let (a, b) = (wi[start], wi[*pos]);
                if b > a && !(root && opts.exclude_root) {
                    let label = if opts.collapse_advp_prt && label == "PRT" { "ADVP".to_string() } else { label.clone() };
                    out.push((label, a, b));
                }
            }
        }
    }
    let mut pos = 0;
    go(tree, &mut pos, &word_index, true, opts, &mut out);
    out
}

/// Per-sentence counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SentenceEval {
    pub words: usize,
    pub gold: usize,
    pub test: usize,
    pub matched: usize,
    pub crossing: usize,
}

fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
    (a.0 < b.0 && b.0 < a.1 && a.1 < b.1) || (b.0 < a.0 && a.0 < b.1 && b.1 < a.1)
}

pub fn evaluate_sentence(index: usize, gold: &ParseTree, test: &ParseTree, opts: &EvalOptions) -> Result<SentenceEval, EvalError> {
    let (gl, tl) = (gold.leaves(), test.leaves());
    if gl.len() != tl.len() {
        return Err(EvalError::Alignment {
            sentence: index,
            message: format!("{} vs {} tokens", gl.len(), tl.len()),
        });
    }
    let mask: Vec<bool> = gl.iter().map(|t| !opts.punctuation.is_punctuation(&t.tag)).collect();
    if let Some(i) = (0..gl.len()).find(|&i| mask[i] && gl[i].word != tl[i].word) {
        return Err(EvalError::Alignment {
            sentence: index,
            message: format!("token {i}: {:?} vs {:?}", gl[i].word, tl[i].word),
        });
    }
    let g = constituents(gold, &mask, opts);
    let t = constituents(test, &mask, opts);
    let mut counts: HashMap<&Constituent, usize> = HashMap::new();
    for c in &g {
        *counts.entry(c).or_default() += 1;
    }
    let mut matched = 0;
    for c in &t {
        if let Some(n) = counts.get_mut(c) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    let crossing = t.iter().filter(|c| g.iter().any(|d| crosses((c.1, c.2), (d.1, d.2)))).count();
    Ok(SentenceEval {
        words: mask.iter().filter(|&&m| m).count(),
        gold: g.len(),
        test: t.len(),
        matched,
        crossing,
    })
}

/// Aggregate over a set of sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Metrics {
    pub sentences: usize,
    pub gold: usize,
    pub test: usize,
    pub matched: usize,
    pub crossing: usize,
    pub zero_cb: usize,
    pub le2_cb: usize,
}

fn pct(n: usize, d: usize) -> f64 {
    if d == 0 {
        100.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

impl Metrics {
    fn add(&mut self, s: &SentenceEval) {
        self.sentences += 1;
        self.gold += s.gold;
        self.test += s.test;
        self.matched += s.matched;
        self.crossing += s.crossing;
        self.zero_cb += (s.crossing == 0) as usize;
        self.le2_cb += (s.crossing <= 2) as usize;
    }

    pub fn labeled_recall(&self) -> f64 {
        pct(self.matched, self.gold)
    }

    pub fn labeled_precision(&self) -> f64 {
        pct(self.matched, self.test)
    }

    pub fn crossing_per_sentence(&self) -> f64 {
        if self.sentences == 0 {
            0.0
        } else {
            self.crossing as f64 / self.sentences as f64
        }
    }

    pub fn pct_zero_cb(&self) -> f64 {
        pct(self.zero_cb, self.sentences)
    }

    pub fn pct_le2_cb(&self) -> f64 {
        pct(self.le2_cb, self.sentences)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub all: Metrics,
    pub le40: Metrics,
    pub le100: Metrics,
    pub sentences: Vec<SentenceEval>,
}

pub fn evaluate(gold: &[ParseTree], test: &[ParseTree], opts: &EvalOptions) -> Result<EvalReport, EvalError> {
    if gold.len() != test.len() {
        return Err(EvalError::Count {
            gold: gold.len(),
            test: test.len(),
        });
    }
    let sentences: Vec<SentenceEval> = gold
        .par_iter()
        .zip(test)
        .enumerate()
        .map(|(i, (g, t))| evaluate_sentence(i, g, t, opts))
        .collect::<Result<_, _>>()?;
    let mut report = EvalReport {
        all: Metrics::default(),
        le40: Metrics::default(),
        le100: Metrics::default(),
        sentences,
    };
    for s in &report.sentences {
        report.all.add(s);
        if s.words <= 40 {
            report.le40.add(s);
        }
        if s.words <= 100 {
            report.le100.add(s);
        }
    }
    Ok(report)
}

impl EvalReport {
    /// Aligned table followed by tab-separated rows.
    pub fn render(&self) -> String {
        let rows = [("<=40", &self.le40), ("<=100", &self.le100), ("all", &self.all)];
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}{:>10}{:>8}{:>8}{:>8}{:>8}{:>9}", "Length", "Sentences", "LR", "LP", "CBs", "0 CBs", "<=2 CBs");
        for (name, m) in rows {
            let _ = writeln!(
                out,
                "{:<8}{:>10}{:>7.1}%{:>7.1}%{:>8.2}{:>7.1}%{:>8.1}%",
                name,
                m.sentences,
                m.labeled_recall(),
                m.labeled_precision(),
                m.crossing_per_sentence(),
                m.pct_zero_cb(),
                m.pct_le2_cb()
            );
        }
        out.push('\n');
        for (name, m) in rows {
            let _ = writeln!(
                out,
                "eval\t{name}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                m.sentences,
                m.labeled_recall(),
                m.labeled_precision(),
                m.crossing_per_sentence(),
                m.pct_zero_cb(),
                m.pct_le2_cb()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{read_trees, ReaderConfig};

    fn t(s: &str) -> Vec<ParseTree> {
        read_trees(s, &ReaderConfig::default()).unwrap()
    }

    #[test]
    fn identity_is_perfect() {
        let g = t("(S (NP (DT a) (NN b)) (VP (VBD c) (PP (IN d) (NP (NN e)))) (. .))");
        let r = evaluate(&g, &g, &EvalOptions::default()).unwrap();
        assert_eq!(r.all.labeled_recall(), 100.0);
        assert_eq!(r.all.labeled_precision(), 100.0);
        assert_eq!(r.all.crossing_per_sentence(), 0.0);
    }

    #[test]
    fn five_against_four() {
        // gold: S, NP(0,2), VP(2,5), PP(3,5), NP(4,5)
        // test: S, NP(0,2), VP(2,5), NP(3,5): 3 of 4 correct
        let g = t("(S (NP (DT a) (NN b)) (VP (VBD c) (PP (IN d) (NP (NN e)))))");
        let s = t("(S (NP (DT a) (NN b)) (VP (VBD c) (NP (IN d) (NN e))))");
        let r = evaluate(&g, &s, &EvalOptions::default()).unwrap();
        assert_eq!((r.all.gold, r.all.test, r.all.matched), (5, 4, 3));
        assert!((r.all.labeled_precision() - 75.0).abs() < 1e-12);
        assert!((r.all.labeled_recall() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_and_multiplicity() {
        let g = t("(S (A (X x) (Y y)) (Z z))");
        let s = t("(S (X x) (B (Y y) (Z z)))");
        let r = evaluate(&g, &s, &EvalOptions::default()).unwrap();
        assert_eq!(r.all.crossing, 1);
        assert_eq!(r.all.pct_zero_cb(), 0.0);
        let g = t("(S (A (A (X x) (Y y))) (Z z))");
        let s = t("(S (A (X x) (Y y)) (Z z))");
        let r = evaluate(&g, &s, &EvalOptions::default()).unwrap();
        assert_eq!((r.all.gold, r.all.test, r.all.matched), (3, 2, 2));
    }

    #[test]
    fn punctuation_ignored_and_prt_collapse() {
        let g = t("(S (NP (NN a)) (, ,) (VP (VBD b) (PRT (RP up))) (. .))");
        let s = t("(S (NP (NN a) (, ,)) (VP (VBD b) (ADVP (RP up)) (. .)))");
        let plain = evaluate(&g, &s, &EvalOptions::default()).unwrap();
        assert_eq!(plain.all.matched, 3);
        let opts = EvalOptions {
            collapse_advp_prt: true,
            ..EvalOptions::default()
        };
        assert_eq!(evaluate(&g, &s, &opts).unwrap().all.matched, 4);
        let no_root = EvalOptions {
            exclude_root: true,
            ..EvalOptions::default()
        };
        assert_eq!(evaluate(&g, &g, &no_root).unwrap().all.gold, 3);
    }

    #[test]
    fn misaligned_is_an_error() {
        let g = t("(S (NN a) (NN b))");
        let s = t("(S (NN a) (NN c))");
        assert!(matches!(evaluate(&g, &s, &EvalOptions::default()), Err(EvalError::Alignment { sentence: 0, .. })));
        assert!(evaluate(&g, &[], &EvalOptions::default()).is_err());
    }
}

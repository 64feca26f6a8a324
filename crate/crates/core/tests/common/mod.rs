#![allow(dead_code)]

//! Seeded synthetic treebanks shared by the integration tests.

use lexdep::treebank::{read_trees, ReaderConfig};
use lexdep::{HeadRuleTable, Model, ParseTree, TrainConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DT: &[&str] = &["the", "a"];
const NN: &[&str] = &["dog", "cat", "man", "park", "ball", "city"];
const NNS: &[&str] = &["dogs", "cats", "men"];
const JJ: &[&str] = &["big", "old", "red"];
const NNP: &[&str] = &["Kim", "Lee", "Sam"];
const PRP: &[&str] = &["he", "she"];
const VBD: &[&str] = &["saw", "liked", "chased", "found"];
const VBZ: &[&str] = &["sees", "likes"];
const IN: &[&str] = &["with", "in", "near"];
const RB: &[&str] = &["quickly", "often"];
const RB_MOD: &[&str] = &["very", "quite"];

pub struct Synth {
    rng: ChaCha8Rng,
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).unwrap()
}

impl Synth {
    pub fn new(seed: u64) -> Self {
        Synth {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn base_np(&mut self) -> String {
        let r = &mut self.rng;
        match r.gen_range(0..10) {
            0..=3 => format!("(NP (DT {}) (NN {}))", pick(r, DT), pick(r, NN)),
            4 => format!("(NP (DT {}) (JJ {}) (NN {}))", pick(r, DT), pick(r, JJ), pick(r, NN)),
            5 | 6 => format!("(NP (NNP {}))", pick(r, NNP)),
            7 => format!("(NP (PRP {}))", pick(r, PRP)),
            8 => format!("(NP (NNS {}))", pick(r, NNS)),
            _ => format!("(NP (JJ {}) (NNS {}))", pick(r, JJ), pick(r, NNS)),
        }
    }

    fn advp(&mut self) -> String {
        let r = &mut self.rng;
        format!("(ADVP (RB {}) (RB {}))", pick(r, RB_MOD), pick(r, RB))
    }

    fn pp(&mut self) -> String {
        let p = pick(&mut self.rng, IN);
        format!("(PP (IN {p}) {})", self.base_np())
    }

    fn object(&mut self, depth: usize) -> String {
        if depth == 0 && self.rng.gen_bool(0.15) {
            format!("(NP {} {})", self.base_np(), self.pp())
        } else {
            self.base_np()
        }
    }

    fn vp(&mut self, depth: usize) -> String {
        let v = if self.rng.gen_bool(0.8) {
            format!("(VBD {})", pick(&mut self.rng, VBD))
        } else {
            format!("(VBZ {})", pick(&mut self.rng, VBZ))
        };
        match self.rng.gen_range(0..10) {
            0..=4 => format!("(VP {v} {})", self.object(depth)),
            5 | 6 => format!("(VP {v} {} {})", self.object(depth + 1), self.pp()),
            7 => format!("(VP {v} {} {})", self.object(depth), self.advp()),
            _ => format!("(VP {} {v} {})", self.advp(), self.object(depth)),
        }
    }

    /// One sentence, bracketed.
    pub fn sentence(&mut self) -> String {
        let subj = self.base_np();
        let vp = self.vp(0);
        let comma = self.rng.gen_bool(0.15);
        let period = self.rng.gen_bool(0.8);
        let mut s = String::from("(S ");
        s.push_str(&subj);
        if comma {
            s.push_str(" (, ,)");
        }
        s.push(' ');
        s.push_str(&vp);
        if period {
            s.push_str(" (. .)");
        }
        s.push(')');
        s
    }

    pub fn trees(&mut self, n: usize) -> Vec<ParseTree> {
        let text: Vec<String> = (0..n).map(|_| self.sentence()).collect();
        read_trees(&text.join("\n"), &ReaderConfig::default()).unwrap()
    }

    /// `n` trees with at most `max_words` non-punctuation words.
    pub fn short_trees(&mut self, n: usize, max_words: usize) -> Vec<ParseTree> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let t = self.trees(1).pop().unwrap();
            if words(&t) <= max_words {
                out.push(t);
            }
        }
        out
    }
}

/// Random bracketings with random labels over a small tag inventory: a dense
/// model with many competing analyses.
pub struct RandomTrees {
    rng: ChaCha8Rng,
}

const R_TAGS: &[(&str, &[&str])] = &[
    ("DT", &["the", "a"]),
    ("NN", &["dog", "cat"]),
    ("JJ", &["big"]),
    ("VBD", &["saw", "ran"]),
    ("IN", &["in", "on"]),
    ("RB", &["now"]),
];
const R_LABELS: &[&str] = &["S", "VP", "NP", "PP", "ADJP"];

impl RandomTrees {
    pub fn new(seed: u64) -> Self {
        RandomTrees {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn leaf(&mut self) -> String {
        let (tag, words) = R_TAGS[self.rng.gen_range(0..R_TAGS.len())];
        format!("({tag} {})", pick(&mut self.rng, words))
    }

    fn node(&mut self, n: usize, top: bool) -> String {
        if n == 1 {
            return self.leaf();
        }
        let k = self.rng.gen_range(2..=n.min(3));
        // Random composition of n into k positive parts.
        let mut cuts: Vec<usize> = (1..n).collect();
        cuts.shuffle(&mut self.rng);
        let mut cuts: Vec<usize> = cuts[..k - 1].to_vec();
        cuts.sort();
        let mut sizes = Vec::new();
        let mut prev = 0;
        for c in cuts.into_iter().chain([n]) {
            sizes.push(c - prev);
            prev = c;
        }
        let label = if top { "S" } else { pick(&mut self.rng, R_LABELS) };
        let mut s = format!("({label}");
        for (i, size) in sizes.into_iter().enumerate() {
            if i > 0 && self.rng.gen_bool(0.1) {
                s.push_str(" (, ,)");
            }
            s.push(' ');
            s.push_str(&self.node(size, false));
        }
        s.push(')');
        s
    }

    pub fn trees(&mut self, n: usize, min_words: usize, max_words: usize) -> Vec<ParseTree> {
        let text: Vec<String> = (0..n)
            .map(|_| {
                let w = self.rng.gen_range(min_words..=max_words);
                self.node(w, true)
            })
            .collect();
        read_trees(&text.join("\n"), &ReaderConfig::default()).unwrap()
    }
}

pub fn words(t: &ParseTree) -> usize {
    let p = lexdep::Punctuation::default();
    t.leaves().iter().filter(|l| !p.is_punctuation(&l.tag)).count()
}

pub fn train_on(trees: &[ParseTree]) -> (Model, HeadRuleTable) {
    let rules = HeadRuleTable::standard();
    let m = lexdep::train(trees, &rules, &TrainConfig::default()).unwrap();
    (m, rules)
}

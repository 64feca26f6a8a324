//! The six-question distance feature bundle and corpus distance statistics.

use std::fmt;

use thiserror::Error;

use crate::depextract::{Extraction, HeadRef, ReducedSentence};
use crate::treebank::{Punctuation, TaggedSentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CommaBucket {
    Zero,
    One,
    Two,
    Many,
}

impl CommaBucket {
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => CommaBucket::Zero,
            1 => CommaBucket::One,
            2 => CommaBucket::Two,
            _ => CommaBucket::Many,
        }
    }
}

/// Δ for one ordered (modifier, head) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Delta {
    Root,
    Pair {
        /// The head comes before the modifier.
        head_precedes: bool,
        adjacent: bool,
        verb_between: bool,
        commas: CommaBucket,
        comma_after_first: bool,
        comma_before_second: bool,
    },
}

impl Delta {
    pub const ROOT_CODE: u8 = 128;

    /// Dense code in `0..=128`; 128 is the ROOT value.
    pub fn code(self) -> u8 {
        match self {
            Delta::Root => Self::ROOT_CODE,
            Delta::Pair {
                head_precedes,
                adjacent,
                verb_between,
                commas,
                comma_after_first,
                comma_before_second,
            } => {
                (head_precedes as u8)
                    | (adjacent as u8) << 1
                    | (verb_between as u8) << 2
                    | (commas as u8) << 3
                    | (comma_after_first as u8) << 5
                    | (comma_before_second as u8) << 6
            }
        }
    }

    pub fn from_code(c: u8) -> Option<Delta> {
        if c == Self::ROOT_CODE {
            return Some(Delta::Root);
        }
        if c > Self::ROOT_CODE {
            return None;
        }
        let commas = [CommaBucket::Zero, CommaBucket::One, CommaBucket::Two, CommaBucket::Many][(c >> 3 & 3) as usize];
        Some(Delta::Pair {
            head_precedes: c & 1 != 0,
            adjacent: c & 2 != 0,
            verb_between: c & 4 != 0,
            commas,
            comma_after_first: c & 32 != 0,
            comma_before_second: c & 64 != 0,
        })
    }

    /// The same pair seen from the other end.
    pub fn reversed(self) -> Delta {
        match self {
            Delta::Root => Delta::Root,
            Delta::Pair { head_precedes, adjacent, verb_between, commas, comma_after_first, comma_before_second } => Delta::Pair {
                head_precedes: !head_precedes,
                adjacent,
                verb_between,
                commas,
                comma_after_first,
                comma_before_second,
            },
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Root => f.write_str("ROOT"),
            Delta::Pair { head_precedes, adjacent, verb_between, commas, comma_after_first, comma_before_second } => write!(
                f,
                "{} adj={} verb={} commas={:?} after={} before={}",
                if *head_precedes { "head-left" } else { "head-right" },
                adjacent,
                verb_between,
                commas,
                comma_after_first,
                comma_before_second
            ),
        }
    }
}

pub fn is_verb_tag(tag: &str) -> bool {
    tag.starts_with("VB")
}

/// Comma positions of a sentence, for constant-time comma questions.
#[derive(Debug, Clone)]
pub struct CommaIndex {
    prefix: Vec<u32>,
    is_comma: Vec<bool>,
}

impl CommaIndex {
    pub fn new(sentence: &TaggedSentence, punct: &Punctuation) -> Self {
        let is_comma: Vec<bool> = sentence.tokens.iter().map(|t| punct.is_comma(&t.tag)).collect();
        let mut prefix = Vec::with_capacity(is_comma.len() + 1);
        prefix.push(0);
        for &c in &is_comma {
            prefix.push(prefix.last().unwrap() + c as u32);
        }
        CommaIndex { prefix, is_comma }
    }

    /// Commas among tokens `from..to`.
    pub fn count(&self, from: usize, to: usize) -> usize {
        if to <= from {
            0
        } else {
            (self.prefix[to] - self.prefix[from]) as usize
        }
    }

    pub fn is_comma(&self, i: usize) -> bool {
        self.is_comma.get(i).copied().unwrap_or(false)
    }

    /// Comma questions for the tokens between an earlier item ending at
    /// `first_end` (exclusive) and a later item starting at `second_start`.
    pub fn between(&self, first_end: usize, second_start: usize) -> (CommaBucket, bool, bool) {
        if second_start <= first_end {
            return (CommaBucket::Zero, false, false);
        }
        (
            CommaBucket::from_count(self.count(first_end, second_start)),
            self.is_comma(first_end),
            self.is_comma(second_start - 1),
        )
    }
}

pub fn delta(reduced: &ReducedSentence, sentence: &TaggedSentence, punct: &Punctuation, j: usize, h: HeadRef) -> Delta {
    delta_indexed(reduced, &CommaIndex::new(sentence, punct), j, h)
}

pub fn delta_indexed(reduced: &ReducedSentence, commas: &CommaIndex, j: usize, h: HeadRef) -> Delta {
    let h = match h {
        HeadRef::Root => return Delta::Root,
        HeadRef::Word(h) => h,
    };
    assert_ne!(j, h, "delta of an item with itself");
    let (a, b) = (j.min(h), j.max(h));
    let verb_between = reduced.items[a + 1..b].iter().any(|it| is_verb_tag(&it.tag));
    let (commas, after, before) = commas.between(reduced.items[a].span.end, reduced.items[b].span.start);
    Delta::Pair {
        head_precedes: h < j,
        adjacent: b == a + 1,
        verb_between,
        commas,
        comma_after_first: after,
        comma_before_second: before,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("no dependencies to report on")]
    Empty,
}

/// Cumulative distance and intervening-verb distributions over non-ROOT
/// dependencies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DistanceStats {
    pub arcs: u64,
    /// Arcs at reduced distance ≤ 1, 2, 5, 10.
    pub distance_le: [u64; 4],
    /// Arcs with ≤ 0, 1, 2 verbs between the two words.
    pub verbs_le: [u64; 3],
}

impl DistanceStats {
    pub const DISTANCE_CUTOFFS: [usize; 4] = [1, 2, 5, 10];
    pub const VERB_CUTOFFS: [usize; 3] = [0, 1, 2];

    pub fn add(&mut self, ex: &Extraction) {
        for d in &ex.dependencies {
            let HeadRef::Word(h) = d.head else { continue };
            let (a, b) = (d.modifier.min(h), d.modifier.max(h));
            let dist = b - a;
            let verbs = ex.reduced.items[a + 1..b].iter().filter(|it| is_verb_tag(&it.tag)).count();
            self.arcs += 1;
            for (k, &c) in Self::DISTANCE_CUTOFFS.iter().enumerate() {
                self.distance_le[k] += (dist <= c) as u64;
            }
            for (k, &c) in Self::VERB_CUTOFFS.iter().enumerate() {
                self.verbs_le[k] += (verbs <= c) as u64;
            }
        }
    }

    pub fn from_extractions<'a>(exs: impl IntoIterator<Item = &'a Extraction>) -> Result<Self, StatsError> {
        let mut s = DistanceStats::default();
        for e in exs {
            s.add(e);
        }
        if s.arcs == 0 {
            return Err(StatsError::Empty);
        }
        Ok(s)
    }

    fn pct(&self, n: u64) -> f64 {
        if self.arcs == 0 {
            0.0
        } else {
            100.0 * n as f64 / self.arcs as f64
        }
    }

    pub fn distance_pct(&self) -> [f64; 4] {
        self.distance_le.map(|n| self.pct(n))
    }

    pub fn verbs_pct(&self) -> [f64; 3] {
        self.verbs_le.map(|n| self.pct(n))
    }

    /// Aligned tables followed by tab-separated `table cutoff percent` rows.
    pub fn render(&self) -> String {
        let mut out = format!("dependencies: {}\n\n", self.arcs);
        out.push_str("Distance   Percentage\n");
        for (c, p) in Self::DISTANCE_CUTOFFS.iter().zip(self.distance_pct()) {
            let label = if *c == 1 { "1".to_string() } else { format!("<= {c}") };
            out.push_str(&format!("{label:<10} {p:>9.1}%\n"));
        }
        out.push_str("\nVerbs      Percentage\n");
        for (c, p) in Self::VERB_CUTOFFS.iter().zip(self.verbs_pct()) {
            let label = if *c == 0 { "0".to_string() } else { format!("<= {c}") };
            out.push_str(&format!("{label:<10} {p:>9.1}%\n"));
        }
        out.push('\n');
        for (c, p) in Self::DISTANCE_CUTOFFS.iter().zip(self.distance_pct()) {
            out.push_str(&format!("distance\t{c}\t{p:.4}\n"));
        }
        for (c, p) in Self::VERB_CUTOFFS.iter().zip(self.verbs_pct()) {
            out.push_str(&format!("verbs\t{c}\t{p:.4}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::headrules::HeadRuleTable;
    use crate::treebank::{read_trees, ReaderConfig};

    fn ex(s: &str) -> Extraction {
        let t = read_trees(s, &ReaderConfig::default()).unwrap().remove(0);
        Extraction::from_tree(&t, &HeadRuleTable::standard(), &Punctuation::default()).unwrap()
    }

    #[test]
    fn codes_round_trip() {
        for c in 0..=128u8 {
            assert_eq!(Delta::from_code(c).unwrap().code(), c);
        }
        assert!(Delta::from_code(129).is_none());
    }

    #[test]
    fn verb_between_far_attachment() {
        // "to" may attach to "rose" or, across it, to "escaped".
        let e = ex("(S (NP (NNS shares)) (VP (VBD escaped) (SBAR (S (NP (NNS prices)) (VP (VBD rose) (PP (TO to) (NP (CD 5))))))))");
        let p = Punctuation::default();
        let to = e.reduced.items.iter().position(|i| i.word == "to").unwrap();
        let escaped = e.reduced.items.iter().position(|i| i.word == "escaped").unwrap();
        let rose = e.reduced.items.iter().position(|i| i.word == "rose").unwrap();
        let far = delta(&e.reduced, &e.sentence, &p, to, HeadRef::Word(escaped));
        let near = delta(&e.reduced, &e.sentence, &p, to, HeadRef::Word(rose));
        assert!(matches!(far, Delta::Pair { verb_between: true, head_precedes: true, adjacent: false, .. }));
        assert!(matches!(near, Delta::Pair { verb_between: false, adjacent: true, .. }));
    }

    #[test]
    fn adjacent_without_punctuation() {
        let e = ex("(NP (NP (NNS sales)) (PP (IN of) (NP (NNS cars))))");
        let p = Punctuation::default();
        let d = delta(&e.reduced, &e.sentence, &p, 1, HeadRef::Word(0));
        assert_eq!(
            d,
            Delta::Pair {
                head_precedes: true,
                adjacent: true,
                verb_between: false,
                commas: CommaBucket::Zero,
                comma_after_first: false,
                comma_before_second: false
            }
        );
        assert_eq!(delta(&e.reduced, &e.sentence, &p, 0, HeadRef::Word(1)), d.reversed());
    }

    #[test]
    fn comma_questions() {
        let e = ex("(S (NP (NNP Smith)) (, ,) (NP (NNP Jones)) (, ,) (: ;) (VP (VBD left)))");
        let p = Punctuation::default();
        let d = delta(&e.reduced, &e.sentence, &p, 0, HeadRef::Word(2));
        assert!(matches!(d, Delta::Pair { commas: CommaBucket::Many, comma_after_first: true, comma_before_second: true, .. }));
        let d = delta(&e.reduced, &e.sentence, &p, 1, HeadRef::Word(2));
        assert!(matches!(d, Delta::Pair { commas: CommaBucket::Two, adjacent: true, .. }));
    }

    #[test]
    fn two_word_corpus_stats() {
        let e = ex("(X (A a) (B b))");
        let s = DistanceStats::from_extractions([&e, &e]).unwrap();
        assert_eq!(s.distance_pct(), [100.0; 4]);
        assert_eq!(s.verbs_pct(), [100.0; 3]);
        assert_eq!(DistanceStats::from_extractions([]), Err(StatsError::Empty));
        assert!(s.render().contains("distance\t1\t100.0000"));
    }
}

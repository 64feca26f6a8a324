//! From head-annotated trees to baseNPs, reduced sentences, dependencies and
//! baseNP gap tags.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::headrules::{annotate_heads, HeadRuleTable, HeadedNode};
use crate::treebank::{ParseTree, Punctuation, TaggedSentence};
use crate::{NP_LABEL, ROOT_MARKER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("token {token} ({word:?}) is inside a baseNP but is not its head")]
    NonHeadInBaseNp { token: usize, word: String },
    #[error("baseNP span {start}..{end} has no reduced item")]
    MissingBaseNp { start: usize, end: usize },
    #[error("non-punctuation child under a punctuation-headed constituent {label}")]
    PunctuationHead { label: String },
    #[error("dependency structure does not assign one head per reduced word ({found} arcs for {expected} words)")]
    Incomplete { found: usize, expected: usize },
    #[error("sentence has no words once punctuation is removed")]
    NoWords,
    #[error("dependencies of item {item} do not nest into constituents")]
    Inconsistent { item: usize },
    #[error("leaf {position} carries token index {index}")]
    TokenIndex { position: usize, index: usize },
}

/// Half-open range of token positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(start: usize, end: usize) -> Self {
        TokenSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

/// Non-recursive NPs of a sentence, as spans trimmed to their first and last
/// non-punctuation token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BaseNpSet {
    pub spans: Vec<TokenSpan>,
}

impl BaseNpSet {
    pub fn new(mut spans: Vec<TokenSpan>) -> Self {
        spans.sort();
        BaseNpSet { spans }
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Span index containing token `i`.
    pub fn span_of(&self, i: usize) -> Option<usize> {
        self.spans.iter().position(|s| s.contains(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedItem {
    pub word: String,
    pub tag: String,
    /// Token index of the head word in the full sentence.
    pub orig_index: usize,
    /// The baseNP span, or the single token.
    pub span: TokenSpan,
    pub base_np: bool,
}

/// The sentence with punctuation removed and baseNPs collapsed to their heads.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReducedSentence {
    pub items: Vec<ReducedItem>,
}

impl ReducedSentence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// ⟨modifier, parent, head-child⟩ labels of a dependency.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationTriple {
    pub modifier: String,
    pub parent: String,
    pub head_child: String,
}

impl RelationTriple {
    pub fn new(modifier: impl Into<String>, parent: impl Into<String>, head_child: impl Into<String>) -> Self {
        RelationTriple {
            modifier: modifier.into(),
            parent: parent.into(),
            head_child: head_child.into(),
        }
    }

    /// The relation of the sentential head to the ROOT pseudo-token.
    pub fn root(label: impl Into<String>) -> Self {
        RelationTriple::new(ROOT_MARKER, label, ROOT_MARKER)
    }

    pub fn is_root(&self) -> bool {
        self.modifier == ROOT_MARKER && self.head_child == ROOT_MARKER
    }
}

impl fmt::Display for RelationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            write!(f, "<{}>", self.parent)
        } else {
            write!(f, "<{},{},{}>", self.modifier, self.parent, self.head_child)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeadRef {
    Word(usize),
    Root,
}

/// One arrow: reduced word `modifier` depends on `head`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependency {
    pub modifier: usize,
    pub head: HeadRef,
    pub relation: RelationTriple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GapTag {
    Start,
    Continue,
    End,
    Between,
    Null,
}

impl GapTag {
    pub const ALL: [GapTag; 5] = [GapTag::Start, GapTag::Continue, GapTag::End, GapTag::Between, GapTag::Null];

    /// Tag forced by whether the words either side are inside baseNPs, for
    /// words in different baseNPs.
    pub fn junction(left_in_np: bool, right_in_np: bool) -> GapTag {
        match (left_in_np, right_in_np) {
            (true, true) => GapTag::Between,
            (true, false) => GapTag::End,
            (false, true) => GapTag::Start,
            (false, false) => GapTag::Null,
        }
    }

    /// Whether the word right of the gap is inside a baseNP.
    pub fn enters_np(self) -> bool {
        matches!(self, GapTag::Start | GapTag::Continue | GapTag::Between)
    }

    /// Whether the tag may follow a word whose baseNP status is `in_np`.
    pub fn allowed_after(self, in_np: bool) -> bool {
        if in_np {
            matches!(self, GapTag::Continue | GapTag::End | GapTag::Between)
        } else {
            matches!(self, GapTag::Start | GapTag::Null)
        }
    }

    pub fn letter(self) -> char {
        match self {
            GapTag::Start => 'S',
            GapTag::Continue => 'C',
            GapTag::End => 'E',
            GapTag::Between => 'B',
            GapTag::Null => 'N',
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<GapTag> {
        GapTag::ALL.get(c as usize).copied()
    }
}

/// A gap between two consecutive non-punctuation tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    pub tag: GapTag,
    pub left: usize,
    pub right: usize,
    /// A comma-class token lies between the two words.
    pub comma: bool,
}

/// Token positions of the non-punctuation tokens.
pub fn word_positions(sentence: &TaggedSentence, punct: &Punctuation) -> Vec<usize> {
    sentence
        .tokens
        .iter()
        .filter(|t| !punct.is_punctuation(&t.tag))
        .map(|t| t.index)
        .collect()
}

/// Every NP without an NP descendant.
pub fn extract_base_nps(tree: &HeadedNode, punct: &Punctuation) -> BaseNpSet {
    let mut spans = Vec::new();
    fn go(n: &HeadedNode, punct: &Punctuation, spans: &mut Vec<TokenSpan>) {
        if n.is_base_np() {
            if let Some(s) = trimmed_span(n, punct) {
                spans.push(s);
            }
            return;
        }
        for c in &n.children {
            go(c, punct, spans);
        }
    }
    go(tree, punct, &mut spans);
    BaseNpSet::new(spans)
}

fn trimmed_span(n: &HeadedNode, punct: &Punctuation) -> Option<TokenSpan> {
    let toks = n.tokens();
    let words: Vec<usize> = toks
        .iter()
        .filter(|t| !punct.is_punctuation(&t.tag))
        .map(|t| t.index)
        .collect();
    Some(TokenSpan::new(*words.first()?, words.last()? + 1))
}

/// Token index of the head of a baseNP span, found by the NP head rule over
/// the span's tags.
pub fn base_np_head(sentence: &TaggedSentence, span: TokenSpan, rules: &HeadRuleTable, punct: &Punctuation) -> usize {
    let tags: Vec<&str> = sentence.tokens[span.start..span.end].iter().map(|t| t.tag.as_str()).collect();
    span.start + rules.head_child_excluding(NP_LABEL, &tags, |i| punct.is_punctuation(tags[i]))
}

pub fn reduce(
    sentence: &TaggedSentence,
    base_nps: &BaseNpSet,
    rules: &HeadRuleTable,
    punct: &Punctuation,
) -> ReducedSentence {
    let mut items = Vec::new();
    let mut i = 0;
    let mut spans = base_nps.spans.iter().peekable();
    while i < sentence.len() {
        if let Some(span) = spans.next_if(|s| s.start == i) {
            let h = base_np_head(sentence, *span, rules, punct);
            let tok = &sentence.tokens[h];
            items.push(ReducedItem {
                word: tok.word.clone(),
                tag: tok.tag.clone(),
                orig_index: h,
                span: *span,
                base_np: true,
            });
            i = span.end;
            continue;
        }
        let tok = &sentence.tokens[i];
        if !punct.is_punctuation(&tok.tag) {
            items.push(ReducedItem {
                word: tok.word.clone(),
                tag: tok.tag.clone(),
                orig_index: i,
                span: TokenSpan::new(i, i + 1),
                base_np: false,
            });
        }
        i += 1;
    }
    ReducedSentence { items }
}

/// One dependency per reduced word. Arcs internal to baseNPs are not part of
/// the structure.
pub fn extract_dependencies(
    tree: &HeadedNode,
    reduced: &ReducedSentence,
    punct: &Punctuation,
) -> Result<Vec<Dependency>, ExtractError> {
    let mut by_np = HashMap::new();
    let mut by_token = HashMap::new();
    for (k, it) in reduced.items.iter().enumerate() {
        if it.base_np {
            by_np.insert(it.span, k);
        } else {
            by_token.insert(it.orig_index, k);
        }
    }
    let np_tokens: Vec<TokenSpan> = reduced.items.iter().filter(|it| it.base_np).map(|it| it.span).collect();

    struct Ctx<'a> {
        by_np: HashMap<TokenSpan, usize>,
        by_token: HashMap<usize, usize>,
        np_tokens: Vec<TokenSpan>,
        punct: &'a Punctuation,
        deps: Vec<Dependency>,
    }

    fn visit(n: &HeadedNode, cx: &mut Ctx<'_>) -> Result<Option<usize>, ExtractError> {
        if n.is_base_np() {
            return match trimmed_span(n, cx.punct) {
                None => Ok(None),
                Some(s) => cx
                    .by_np
                    .get(&s)
                    .copied()
                    .map(Some)
                    .ok_or(ExtractError::MissingBaseNp { start: s.start, end: s.end }),
            };
        }
        if let Some(tok) = &n.token {
            if cx.punct.is_punctuation(&tok.tag) {
                return Ok(None);
            }
            return match cx.by_token.get(&tok.index) {
                Some(&k) => Ok(Some(k)),
                None if cx.np_tokens.iter().any(|s| s.contains(tok.index)) => Err(ExtractError::NonHeadInBaseNp {
                    token: tok.index,
                    word: tok.word.clone(),
                }),
                None => Err(ExtractError::Incomplete { found: 0, expected: 1 }),
            };
        }
        let mut items = Vec::with_capacity(n.children.len());
        for c in &n.children {
            items.push(visit(c, cx)?);
        }
        let hc = n.head_child.unwrap_or(0);
        let head = items[hc];
        for (i, it) in items.iter().enumerate() {
            if i == hc {
                continue;
            }
            if let Some(m) = *it {
                let h = head.ok_or_else(|| ExtractError::PunctuationHead { label: n.label.clone() })?;
                cx.deps.push(Dependency {
                    modifier: m,
                    head: HeadRef::Word(h),
                    relation: RelationTriple::new(n.children[i].label.clone(), n.label.clone(), n.children[hc].label.clone()),
                });
            }
        }
        Ok(head)
    }

    let mut cx = Ctx {
        by_np,
        by_token,
        np_tokens,
        punct,
        deps: Vec::new(),
    };
    if let Some(r) = visit(tree, &mut cx)? {
        cx.deps.push(Dependency {
            modifier: r,
            head: HeadRef::Root,
            relation: RelationTriple::root(tree.label.clone()),
        });
    }
    let mut deps = cx.deps;
    deps.sort_by_key(|d| d.modifier);
    let complete = deps.len() == reduced.len() && deps.iter().enumerate().all(|(i, d)| d.modifier == i);
    if !complete {
        return Err(ExtractError::Incomplete {
            found: deps.len(),
            expected: reduced.len(),
        });
    }
    Ok(deps)
}

/// Gap tags between consecutive non-punctuation tokens of the unreduced
/// sentence.
pub fn extract_gap_tags(sentence: &TaggedSentence, base_nps: &BaseNpSet, punct: &Punctuation) -> Vec<Gap> {
    let words = word_positions(sentence, punct);
    let np_of: Vec<Option<usize>> = (0..sentence.len()).map(|i| base_nps.span_of(i)).collect();
    words
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let tag = match (np_of[a], np_of[b]) {
                (Some(x), Some(y)) if x == y => GapTag::Continue,
                (l, r) => GapTag::junction(l.is_some(), r.is_some()),
            };
            let comma = sentence.tokens[a + 1..b].iter().any(|t| punct.is_comma(&t.tag));
            Gap {
                tag,
                left: a,
                right: b,
                comma,
            }
        })
        .collect()
}

/// Whether a gap-tag sequence is accepted by the two-state in/out automaton.
pub fn gap_sequence_valid(tags: &[GapTag]) -> bool {
    let Some(first) = tags.first() else { return true };
    let mut in_np = matches!(first, GapTag::Continue | GapTag::End | GapTag::Between);
    for t in tags {
        if !t.allowed_after(in_np) {
            return false;
        }
        in_np = t.enters_np();
    }
    true
}

/// Rebuild the baseNP spans from a gap sequence. Single-word sentences have
/// no gaps, so their baseNP status cannot be recovered and the result is
/// empty.
pub fn decode_gap_tags(gaps: &[Gap]) -> BaseNpSet {
    let mut spans = Vec::new();
    let Some(first) = gaps.first() else {
        return BaseNpSet::default();
    };
    let mut open: Option<usize> = matches!(first.tag, GapTag::Continue | GapTag::End | GapTag::Between).then_some(first.left);
    let mut last_word = first.left;
    for g in gaps {
        match g.tag {
            GapTag::Continue => {}
            GapTag::End | GapTag::Between => {
                if let Some(s) = open.take() {
                    spans.push(TokenSpan::new(s, last_word + 1));
                }
            }
            GapTag::Start | GapTag::Null => {}
        }
        if matches!(g.tag, GapTag::Start | GapTag::Between) {
            open = Some(g.right);
        }
        last_word = g.right;
    }
    if let Some(s) = open {
        spans.push(TokenSpan::new(s, last_word + 1));
    }
    BaseNpSet::new(spans)
}

/// Rebuild the bracketing over non-punctuation tokens implied by an
/// extraction. Adjacent modifiers with the same triple at successive levels
/// cannot be told apart and share one constituent, so `(P (P (P h a) b) c)`
/// comes back as `(P (P h a) b c)`. Unary nodes are never rebuilt.
pub fn reconstruct(ex: &Extraction, punct: &Punctuation) -> Result<HeadedNode, ExtractError> {
    let items = &ex.reduced.items;
    let mut mods: Vec<Vec<&Dependency>> = vec![Vec::new(); items.len()];
    let mut root = None;
    for d in &ex.dependencies {
        match d.head {
            HeadRef::Word(h) => mods[h].push(d),
            HeadRef::Root => root = Some(d),
        }
    }
    let root = root.ok_or(ExtractError::Incomplete {
        found: ex.dependencies.len(),
        expected: items.len(),
    })?;

    fn base(ex: &Extraction, k: usize, punct: &Punctuation) -> HeadedNode {
        let it = &ex.reduced.items[k];
        if !it.base_np {
            return HeadedNode::leaf(ex.sentence.tokens[it.orig_index].clone());
        }
        let leaves: Vec<HeadedNode> = ex.sentence.tokens[it.span.start..it.span.end]
            .iter()
            .filter(|t| !punct.is_punctuation(&t.tag))
            .map(|t| HeadedNode::leaf(t.clone()))
            .collect();
        let hc = leaves.iter().position(|l| l.head == it.orig_index).unwrap_or(0);
        HeadedNode::internal(NP_LABEL, leaves, hc)
    }

    fn project(ex: &Extraction, k: usize, want: &str, mods: &[Vec<&Dependency>], punct: &Punctuation) -> Result<HeadedNode, ExtractError> {
        let mut built = Vec::with_capacity(mods[k].len());
        for d in &mods[k] {
            built.push((*d, project(ex, d.modifier, &d.relation.modifier, mods, punct)?));
        }
        // Nearest modifiers last, so each side pops outward.
        let mut left: Vec<&(&Dependency, HeadedNode)> = built.iter().filter(|(d, _)| d.modifier < k).collect();
        let mut right: Vec<&(&Dependency, HeadedNode)> = built.iter().filter(|(d, _)| d.modifier > k).collect();
        left.sort_by_key(|(d, _)| d.modifier);
        right.sort_by_key(|(d, _)| std::cmp::Reverse(d.modifier));
        grow(ex.reduced.items[k].orig_index, base(ex, k, punct), want, left, right).ok_or(ExtractError::Inconsistent { item: k })
    }

    // Wraps `cur` in one level at a time, trying each parent label the
    // nearest modifiers allow.
    fn grow(
        head: usize,
        cur: HeadedNode,
        want: &str,
        left: Vec<&(&Dependency, HeadedNode)>,
        right: Vec<&(&Dependency, HeadedNode)>,
    ) -> Option<HeadedNode> {
        if left.is_empty() && right.is_empty() {
            return (cur.label == want).then_some(cur);
        }
        let mut parents: Vec<&str> = [left.last(), right.last()]
            .into_iter()
            .flatten()
            .filter(|(d, _)| d.relation.head_child == cur.label)
            .map(|(d, _)| d.relation.parent.as_str())
            .collect();
        parents.sort_by_key(|p| *p != cur.label);
        parents.dedup();
        for parent in parents {
            let (mut l, mut r) = (left.clone(), right.clone());
            let same = |e: &&(&Dependency, HeadedNode)| e.0.relation.head_child == cur.label && e.0.relation.parent == parent;
            let mut kids = vec![cur.clone()];
            for side in [&mut l, &mut r] {
                while side.last().is_some_and(same) {
                    kids.push(side.pop().unwrap().1.clone());
                }
            }
            kids.sort_by_key(|c| c.start);
            let hc = kids.iter().position(|c| c.head == head).unwrap_or(0);
            if let Some(done) = grow(head, HeadedNode::internal(parent, kids, hc), want, l, r) {
                return Some(done);
            }
        }
        None
    }

    let top = project(ex, root.modifier, &root.relation.parent, &mods, punct)?;
    Ok(top)
}

/// Everything the model reads off one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub sentence: TaggedSentence,
    pub base_nps: BaseNpSet,
    pub reduced: ReducedSentence,
    pub dependencies: Vec<Dependency>,
    pub gaps: Vec<Gap>,
}

impl Extraction {
    pub fn from_tree(tree: &ParseTree, rules: &HeadRuleTable, punct: &Punctuation) -> Result<Self, ExtractError> {
        Self::from_headed(&annotate_heads(tree, rules, punct), rules, punct)
    }

    /// Extraction under the head choices already recorded in `tree`.
    pub fn from_headed(tree: &HeadedNode, rules: &HeadRuleTable, punct: &Punctuation) -> Result<Self, ExtractError> {
        let tokens = tree.tokens();
        if let Some((position, t)) = tokens.iter().enumerate().find(|(i, t)| t.index != *i) {
            return Err(ExtractError::TokenIndex { position, index: t.index });
        }
        let sentence = TaggedSentence::new(tokens);
        let base_nps = extract_base_nps(tree, punct);
        let reduced = reduce(&sentence, &base_nps, rules, punct);
        if reduced.is_empty() {
            return Err(ExtractError::NoWords);
        }
        let dependencies = extract_dependencies(tree, &reduced, punct)?;
        let gaps = extract_gap_tags(&sentence, &base_nps, punct);
        Ok(Extraction {
            sentence,
            base_nps,
            reduced,
            dependencies,
            gaps,
        })
    }

    /// `B = {...}` and `D = {...}` with 1-based reduced positions and 0 for
    /// the root.
    pub fn describe(&self) -> String {
        let nps: Vec<String> = self
            .base_nps
            .spans
            .iter()
            .map(|s| {
                let words: Vec<&str> = self.sentence.tokens[s.start..s.end].iter().map(|t| t.word.as_str()).collect();
                format!("[{}]", words.join(" "))
            })
            .collect();
        let arcs: Vec<String> = self
            .dependencies
            .iter()
            .map(|d| {
                let h = match d.head {
                    HeadRef::Word(h) => h + 1,
                    HeadRef::Root => 0,
                };
                format!("AF({})=({},{})", d.modifier + 1, h, d.relation)
            })
            .collect();
        let words: Vec<String> = self.reduced.items.iter().map(|it| format!("<{},{}>", it.word, it.tag)).collect();
        format!(
            "S' = {}\nB = {{ {} }}\nD = {{ {} }}",
            words.join(" "),
            nps.join(", "),
            arcs.join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{read_trees, ReaderConfig};

    fn tree(s: &str) -> ParseTree {
        read_trees(s, &ReaderConfig::default()).unwrap().remove(0)
    }

    fn ex(s: &str) -> Extraction {
        Extraction::from_tree(&tree(s), &HeadRuleTable::standard(), &Punctuation::default()).unwrap()
    }

    #[test]
    fn reconstruct_inverts_extraction() {
        let p = Punctuation::default();
        let s = "(S (NP (NNP Kim)) (VP (VBD saw) (NP (NP (DT the) (NN dog)) (PP (IN in) (NP (NN town))))))";
        assert_eq!(reconstruct(&ex(s), &p).unwrap().to_tree().to_string(), s);
        // Punctuation is dropped.
        let back = reconstruct(&ex("(S (NP (PRP he)) (VP (VBD left) (RB early)) (. .))"), &p).unwrap();
        assert_eq!(back.to_tree().to_string(), "(S (NP (PRP he)) (VP (VBD left) (RB early)))");
    }

    #[test]
    fn reconstruct_flattens_self_nesting() {
        let e = ex("(S (NP (NN a)) (VP (VP (VP (VBD b) (RB c)) (RB d)) (RB e)))");
        let back = reconstruct(&e, &Punctuation::default()).unwrap();
        assert_eq!(back.to_tree().to_string(), "(S (NP (NN a)) (VP (VP (VBD b) (RB c)) (RB d) (RB e)))");
    }

    #[test]
    fn reconstruct_rejects_dangling_relations() {
        let mut e = ex("(S (NP (NN a)) (VP (VBD b)))");
        e.dependencies[0].relation.head_child = "PP".into();
        assert!(matches!(reconstruct(&e, &Punctuation::default()), Err(ExtractError::Inconsistent { .. })));
    }

    #[test]
    fn reindexed_leaves_are_rejected() {
        let h = reconstruct(&ex("(S (, ,) (NP (NN a)) (VBD b))"), &Punctuation::default()).unwrap();
        let err = Extraction::from_headed(&h, &HeadRuleTable::standard(), &Punctuation::default()).unwrap_err();
        assert_eq!(err, ExtractError::TokenIndex { position: 0, index: 1 });
    }

    #[test]
    fn no_np_means_no_base_nps_and_null_gaps() {
        let e = ex("(S (VB go) (RB now) (RB please))");
        assert!(e.base_nps.is_empty());
        assert!(e.gaps.iter().all(|g| g.tag == GapTag::Null));
        assert_eq!(e.reduced.len(), 3);
    }

    #[test]
    fn only_inner_np_is_base() {
        let e = ex("(NP (NP (DT the) (NN dog)) (PP (IN in) (NP (NN town))))");
        assert_eq!(e.base_nps.spans, vec![TokenSpan::new(0, 2), TokenSpan::new(3, 4)]);
        let e = ex("(NP (NP (NN dog)))");
        assert_eq!(e.base_nps.spans, vec![TokenSpan::new(0, 1)]);
    }

    #[test]
    fn whole_sentence_one_base_np() {
        let e = ex("(NP (DT the) (JJ big) (NN dog))");
        assert_eq!(e.reduced.len(), 1);
        assert_eq!(e.reduced.items[0].word, "dog");
        assert_eq!(e.dependencies.len(), 1);
        assert_eq!(e.dependencies[0].head, HeadRef::Root);
        assert_eq!(e.dependencies[0].relation, RelationTriple::root("NP"));
    }

    #[test]
    fn single_word() {
        let e = ex("(VB go)");
        assert_eq!(e.reduced.len(), 1);
        assert!(e.gaps.is_empty());
    }

    #[test]
    fn figure_three_constituent() {
        let e = ex("(VP (VBD announced) (NP (PRP$ his) (NN resignation)) (NP (NN yesterday)))");
        let non_root: Vec<_> = e.dependencies.iter().filter(|d| d.head != HeadRef::Root).collect();
        assert_eq!(non_root.len(), 2);
        for d in non_root {
            assert_eq!(d.head, HeadRef::Word(0));
            assert_eq!(d.relation, RelationTriple::new("NP", "VP", "VBD"));
        }
    }

    #[test]
    fn comma_flag_on_straddling_gap() {
        let e = ex("(S (NP (NNP Smith)) (, ,) (VP (VBD left)))");
        assert_eq!(e.gaps.len(), 1);
        assert!(e.gaps[0].comma);
        assert_eq!(e.gaps[0].tag, GapTag::End);
    }

    #[test]
    fn mismatched_reduced_sentence_is_an_error() {
        let t = annotate_heads(
            &tree("(S (NP (DT the) (NN dog)) (VBD ran))"),
            &HeadRuleTable::standard(),
            &Punctuation::default(),
        );
        let s = TaggedSentence::new(t.tokens());
        let p = Punctuation::default();
        let wrong = reduce(&s, &BaseNpSet::new(vec![TokenSpan::new(0, 3)]), &HeadRuleTable::standard(), &p);
        assert!(extract_dependencies(&t, &wrong, &p).is_err());
        let unreduced = reduce(&s, &BaseNpSet::default(), &HeadRuleTable::standard(), &p);
        assert!(extract_dependencies(&t, &unreduced, &p).is_err());
    }

    #[test]
    fn automaton() {
        use GapTag::*;
        assert!(gap_sequence_valid(&[Continue, Between, End, Start, End, Null]));
        assert!(!gap_sequence_valid(&[Null, Continue]));
        assert!(!gap_sequence_valid(&[End, End]));
    }
}

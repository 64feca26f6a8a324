//! Bracketed parse trees, tagged sentences and punctuation classes.
//!
//! Trees are read from Penn-Treebank style bracketings where every leaf is a
//! preterminal of the form `(TAG word)`. Tagged sentences are one per line as
//! whitespace separated `word/TAG` items, optionally carrying a tag
//! distribution: `word/TAG1:p1,TAG2:p2`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tag for treebank empty elements (traces, null complementizers).
pub const EMPTY_ELEMENT_TAG: &str = "-NONE-";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreebankError {
    #[error("line {line}, column {column}: unbalanced parentheses: {message}")]
    Unbalanced {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: empty constituent")]
    EmptyConstituent { line: usize, column: usize },
    #[error("line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("tree at line {line} has no tokens once empty elements are removed")]
    NoTokens { line: usize },
    #[error("empty sentence")]
    EmptySentence,
    #[error("item {item:?} has no word/TAG separator")]
    MissingTag { item: String },
    #[error("item {item:?}: {message}")]
    BadDistribution { item: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// A tagged word at a fixed position of its sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub word: String,
    pub tag: String,
    pub index: usize,
}

impl Token {
    pub fn new(word: impl Into<String>, tag: impl Into<String>, index: usize) -> Self {
        Token {
            word: word.into(),
            tag: tag.into(),
            index,
        }
    }
}

/// Labeled constituent tree. Leaves are preterminals carrying their token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParseTree {
    Node {
        label: String,
        children: Vec<ParseTree>,
    },
    Leaf(Token),
}

impl ParseTree {
    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        ParseTree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn leaf(tag: impl Into<String>, word: impl Into<String>, index: usize) -> Self {
        ParseTree::Leaf(Token::new(word, tag, index))
    }

    /// Node label, or the POS tag for a leaf.
    pub fn label(&self) -> &str {
        match self {
            ParseTree::Node { label, .. } => label,
            ParseTree::Leaf(tok) => &tok.tag,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, ParseTree::Leaf(_))
    }

    pub fn children(&self) -> &[ParseTree] {
        match self {
            ParseTree::Node { children, .. } => children,
            ParseTree::Leaf(_) => &[],
        }
    }

    /// Leaf tokens, left to right.
    pub fn leaves(&self) -> Vec<&Token> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Token>) {
        match self {
            ParseTree::Leaf(tok) => out.push(tok),
            ParseTree::Node { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ParseTree::Leaf(_) => 1,
            ParseTree::Node { children, .. } => children.iter().map(ParseTree::len).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The tagged sentence at the leaves.
    pub fn sentence(&self) -> TaggedSentence {
        TaggedSentence::new(self.leaves().into_iter().cloned().collect())
    }

    /// Renumber leaves consecutively from 0.
    pub fn reindex(&mut self) {
        fn go(t: &mut ParseTree, next: &mut usize) {
            match t {
                ParseTree::Leaf(tok) => {
                    tok.index = *next;
                    *next += 1;
                }
                ParseTree::Node { children, .. } => {
                    for c in children {
                        go(c, next);
                    }
                }
            }
        }
        let mut next = 0;
        go(self, &mut next);
    }

    /// Remove every leaf whose tag satisfies `drop`, pruning internal nodes
    /// left without children. Returns `None` if nothing remains.
    pub fn without_leaves(&self, drop: &dyn Fn(&Token) -> bool) -> Option<ParseTree> {
        match self {
            ParseTree::Leaf(tok) => (!drop(tok)).then(|| self.clone()),
            ParseTree::Node { label, children } => {
                let kept: Vec<ParseTree> =
                    children.iter().filter_map(|c| c.without_leaves(drop)).collect();
                (!kept.is_empty()).then(|| ParseTree::node(label.clone(), kept))
            }
        }
    }

    /// Replace every unary internal node by its child, except nodes for which
    /// `keep` holds. A unary root keeps its label and takes over its child's
    /// children, unless the child is a preterminal or kept.
    pub fn collapse_unary(&self, keep: &dyn Fn(&ParseTree) -> bool) -> ParseTree {
        fn inner(t: &ParseTree, keep: &dyn Fn(&ParseTree) -> bool) -> ParseTree {
            match t {
                ParseTree::Leaf(_) => t.clone(),
                ParseTree::Node { label, children } => {
                    if children.len() == 1 && !keep(t) {
                        return inner(&children[0], keep);
                    }
                    ParseTree::node(label.clone(), children.iter().map(|c| inner(c, keep)).collect())
                }
            }
        }
        match self {
            ParseTree::Leaf(_) => self.clone(),
            ParseTree::Node { label, children } => {
                let mut kids: Vec<ParseTree> = children.iter().map(|c| inner(c, keep)).collect();
                while kids.len() == 1 {
                    match &kids[0] {
                        ParseTree::Node { children, .. } if !keep(&kids[0]) => {
                            kids = children.clone();
                        }
                        _ => break,
                    }
                }
                ParseTree::node(label.clone(), kids)
            }
        }
    }

    /// True for a node labeled `label` with no descendant of that label.
    pub fn is_minimal(&self, label: &str) -> bool {
        fn has(t: &ParseTree, label: &str) -> bool {
            t.children().iter().any(|c| (!c.is_leaf() && c.label() == label) || has(c, label))
        }
        !self.is_leaf() && self.label() == label && !has(self, label)
    }

    fn write_into(&self, out: &mut String) {
        match self {
            ParseTree::Leaf(tok) => {
                out.push('(');
                out.push_str(&tok.tag);
                out.push(' ');
                out.push_str(&tok.word);
                out.push(')');
            }
            ParseTree::Node { label, children } => {
                out.push('(');
                out.push_str(label);
                for c in children {
                    out.push(' ');
                    c.write_into(out);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_into(&mut s);
        f.write_str(&s)
    }
}

/// What to do with an outer unlabeled bracket such as `( (S ...) )`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootWrapper {
    /// Drop the wrapper and return its single child.
    Strip,
    /// Keep the wrapper under the given label.
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReaderConfig {
    pub root_wrapper: RootWrapper,
    /// Strip `-SBJ`, `-1`, `=2` style suffixes from internal labels.
    pub strip_function_tags: bool,
    /// Remove `-NONE-` leaves and constituents left empty by the removal.
    pub strip_empty_elements: bool,
}

impl Default for ReaderConfig {
    fn default() -> Self {
        ReaderConfig {
            root_wrapper: RootWrapper::Strip,
            strip_function_tags: true,
            strip_empty_elements: true,
        }
    }
}

#[derive(Debug)]
enum Sx {
    Atom(String, usize, usize),
    List(Vec<Sx>, usize, usize),
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(s: &'a str) -> Self {
        Lexer {
            chars: s.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn atom(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    /// Parse one list starting at the current `(`.
    fn list(&mut self) -> Result<Sx, TreebankError> {
        let (line, column) = (self.line, self.column);
        self.bump();
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.chars.peek() {
                None => {
                    return Err(TreebankError::Unbalanced {
                        line: self.line,
                        column: self.column,
                        message: format!("bracket opened at line {line}, column {column} is never closed (end of input)"),
                    })
                }
                Some('(') => items.push(self.list()?),
                Some(')') => {
                    self.bump();
                    return Ok(Sx::List(items, line, column));
                }
                Some(_) => {
                    let (l, c) = (self.line, self.column);
                    items.push(Sx::Atom(self.atom(), l, c));
                }
            }
        }
    }
}

fn strip_function_tag(label: &str) -> &str {
    // Labels such as -NONE- or -LRB- start with the separator and are kept.
    match label.char_indices().skip(1).find(|&(_, c)| c == '-' || c == '=') {
        Some((i, _)) => &label[..i],
        None => label,
    }
}

fn convert(sx: &Sx, config: &ReaderConfig, is_root: bool) -> Result<ParseTree, TreebankError> {
    match sx {
        Sx::Atom(a, line, column) => Err(TreebankError::Malformed {
            line: *line,
            column: *column,
            message: format!("bare word {a:?} outside a (TAG word) leaf"),
        }),
        Sx::List(items, line, column) => {
            let (line, column) = (*line, *column);
            match items.as_slice() {
                [] => Err(TreebankError::EmptyConstituent { line, column }),
                [Sx::Atom(_, _, _)] => Err(TreebankError::EmptyConstituent { line, column }),
                [Sx::Atom(tag, _, _), Sx::Atom(word, _, _)] => Ok(ParseTree::leaf(tag.clone(), word.clone(), 0)),
                [Sx::Atom(label, _, _), rest @ ..] => {
                    let mut children = Vec::with_capacity(rest.len());
                    for c in rest {
                        children.push(convert(c, config, false)?);
                    }
                    let label = if config.strip_function_tags {
                        strip_function_tag(label)
                    } else {
                        label.as_str()
                    };
                    Ok(ParseTree::node(label, children))
                }
                [Sx::List(..), ..] => {
                    if !is_root {
                        return Err(TreebankError::Malformed {
                            line,
                            column,
                            message: "constituent without a label".into(),
                        });
                    }
                    let mut children = Vec::with_capacity(items.len());
                    for c in items {
                        children.push(convert(c, config, false)?);
                    }
                    match &config.root_wrapper {
                        RootWrapper::Strip if children.len() == 1 => Ok(children.pop().unwrap()),
                        RootWrapper::Strip => Err(TreebankError::Malformed {
                            line,
                            column,
                            message: "unlabeled root wrapper with several children cannot be stripped".into(),
                        }),
                        RootWrapper::Name(l) => Ok(ParseTree::node(l.clone(), children)),
                    }
                }
            }
        }
    }
}

/// Read every tree in `input`, in file order.
pub fn read_trees(input: &str, config: &ReaderConfig) -> Result<Vec<ParseTree>, TreebankError> {
    let mut lx = Lexer::new(input);
    let mut trees = Vec::new();
    loop {
        lx.skip_ws();
        match lx.chars.peek() {
            None => break,
            Some('(') => {
                let start = lx.line;
                let sx = lx.list()?;
                let tree = convert(&sx, config, true)?;
                let tree = if config.strip_empty_elements {
                    tree.without_leaves(&|t| t.tag == EMPTY_ELEMENT_TAG)
                        .ok_or(TreebankError::NoTokens { line: start })?
                } else {
                    tree
                };
                let mut tree = tree;
                tree.reindex();
                trees.push(tree);
            }
            Some(')') => {
                return Err(TreebankError::Unbalanced {
                    line: lx.line,
                    column: lx.column,
                    message: "unexpected ')'".into(),
                })
            }
            Some(_) => {
                let (line, column) = (lx.line, lx.column);
                let a = lx.atom();
                return Err(TreebankError::Malformed {
                    line,
                    column,
                    message: format!("unexpected text {a:?} between trees"),
                });
            }
        }
    }
    Ok(trees)
}

pub fn read_trees_from<R: Read>(mut reader: R, config: &ReaderConfig) -> Result<Vec<ParseTree>, TreebankError> {
    let mut s = String::new();
    reader
        .read_to_string(&mut s)
        .map_err(|e| TreebankError::Io(e.to_string()))?;
    read_trees(&s, config)
}

/// Tokens plus an optional tag distribution per token.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSentence {
    pub tokens: Vec<Token>,
    pub tag_distributions: Option<Vec<Vec<(String, f64)>>>,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        TaggedSentence {
            tokens,
            tag_distributions: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tags(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.tag.as_str()).collect()
    }

    /// Same words, new tags.
    pub fn with_tags(&self, tags: &[String]) -> TaggedSentence {
        let tokens = self
            .tokens
            .iter()
            .zip(tags)
            .map(|(t, tag)| Token::new(t.word.clone(), tag.clone(), t.index))
            .collect();
        TaggedSentence {
            tokens,
            tag_distributions: self.tag_distributions.clone(),
        }
    }
}

impl fmt::Display for TaggedSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}/", t.word)?;
            match self.tag_distributions.as_ref().map(|d| &d[i]) {
                Some(dist) if dist.len() > 1 || dist.first().is_some_and(|(_, p)| *p != 1.0) => {
                    for (k, (tag, p)) in dist.iter().enumerate() {
                        if k > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{tag}:{p}")?;
                    }
                }
                _ => f.write_str(&t.tag)?,
            }
        }
        Ok(())
    }
}

/// Parse `TAG1:p1,TAG2:p2` if the whole string has that shape. Tags may
/// themselves contain ':' or ',' (the colon and comma tags do).
fn parse_distribution(s: &str) -> Option<Vec<(String, f64)>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < s.len() {
        let mut found = None;
        let mut i = pos + 1;
        while i < s.len() {
            if bytes[i] == b':' {
                let end = s[i + 1..].find(',').map_or(s.len(), |k| i + 1 + k);
                if let Ok(p) = s[i + 1..end].parse::<f64>() {
                    found = Some((i, end, p));
                    break;
                }
            }
            i += 1;
        }
        let (colon, end, p) = found?;
        out.push((s[pos..colon].to_string(), p));
        if end == s.len() {
            return Some(out);
        }
        pos = end + 1;
    }
    None
}

/// Read one `word/TAG ...` line.
pub fn read_tagged_sentence(line: &str) -> Result<TaggedSentence, TreebankError> {
    let mut tokens = Vec::new();
    let mut dists = Vec::new();
    let mut any_dist = false;
    for (index, item) in line.split_whitespace().enumerate() {
        let (word, tagpart) = item
            .rsplit_once('/')
            .filter(|(w, t)| !w.is_empty() && !t.is_empty())
            .ok_or_else(|| TreebankError::MissingTag { item: item.to_string() })?;
        match parse_distribution(tagpart) {
            Some(dist) => {
                any_dist = true;
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-6 {
                    return Err(TreebankError::BadDistribution {
                        item: item.to_string(),
                        message: format!("probabilities sum to {total}"),
                    });
                }
                if dist.iter().any(|(t, p)| t.is_empty() || !(0.0..=1.0).contains(p)) {
                    return Err(TreebankError::BadDistribution {
                        item: item.to_string(),
                        message: "empty tag or probability outside [0, 1]".into(),
                    });
                }
                let best = dist
                    .iter()
                    .fold(&dist[0], |b, e| if e.1 > b.1 { e } else { b })
                    .0
                    .clone();
                tokens.push(Token::new(word, best, index));
                dists.push(dist);
            }
            None => {
                tokens.push(Token::new(word, tagpart, index));
                dists.push(vec![(tagpart.to_string(), 1.0)]);
            }
        }
    }
    if tokens.is_empty() {
        return Err(TreebankError::EmptySentence);
    }
    Ok(TaggedSentence {
        tokens,
        tag_distributions: any_dist.then_some(dists),
    })
}

/// The two punctuation classes used by the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Punctuation {
    /// Tags counted as commas by the distance and gap features.
    pub comma_tags: BTreeSet<String>,
    /// Tags dropped from reduced sentences and ignored by PARSEVAL.
    pub eval_punct_tags: BTreeSet<String>,
}

impl Default for Punctuation {
    fn default() -> Self {
        Punctuation {
            comma_tags: [",", ":"].iter().map(|s| s.to_string()).collect(),
            eval_punct_tags: [",", ":", "``", "''", "."].iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Punctuation {
    pub fn is_comma(&self, tag: &str) -> bool {
        self.comma_tags.contains(tag)
    }

    pub fn is_punctuation(&self, tag: &str) -> bool {
        self.eval_punct_tags.contains(tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<Vec<ParseTree>, TreebankError> {
        read_trees(s, &ReaderConfig::default())
    }

    #[test]
    fn reads_simple_tree() {
        let t = read("(S (NP (NNP John)) (VP (VBD ran)))").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].label(), "S");
        let leaves = t[0].leaves();
        assert_eq!(leaves.len(), 2);
        assert_eq!(leaves[1].word, "ran");
        assert_eq!(leaves[1].index, 1);
    }

    #[test]
    fn unbalanced_reports_position() {
        match read("(S (NP") {
            Err(TreebankError::Unbalanced { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(read("(S (NN a)))"), Err(TreebankError::Unbalanced { .. })));
    }

    #[test]
    fn empty_constituents_rejected() {
        assert!(matches!(read("()"), Err(TreebankError::EmptyConstituent { .. })));
        assert!(matches!(read("(S (NP) (VB x))"), Err(TreebankError::EmptyConstituent { .. })));
    }

    #[test]
    fn root_wrapper_and_function_tags() {
        let src = "( (S (NP-SBJ-1 (NNP John)) (VP (VBD ran) (NP (-NONE- *T*-1)))) )";
        let t = read(src).unwrap();
        assert_eq!(t[0].to_string(), "(S (NP (NNP John)) (VP (VBD ran)))");
        let named = read_trees(
            src,
            &ReaderConfig {
                root_wrapper: RootWrapper::Name("TOP".into()),
                ..ReaderConfig::default()
            },
        )
        .unwrap();
        assert_eq!(named[0].label(), "TOP");
    }

    #[test]
    fn several_trees_across_lines() {
        let t = read("(S (NN a)\n (NN b))\n\n(X (Y z))").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].leaves()[0].index, 0);
    }

    #[test]
    fn tagged_sentence_basic() {
        let s = read_tagged_sentence("John/NNP Smith/NNP ,/, the/DT president/NN").unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.tokens[2].tag, ",");
        assert!(s.tag_distributions.is_none());
        assert!(matches!(read_tagged_sentence(""), Err(TreebankError::EmptySentence)));
        assert!(matches!(
            read_tagged_sentence("John/NNP Smith"),
            Err(TreebankError::MissingTag { item }) if item == "Smith"
        ));
    }

    #[test]
    fn tagged_sentence_with_distribution() {
        let s = read_tagged_sentence("flies/NNS:0.7,VBZ:0.3").unwrap();
        assert_eq!(s.tokens[0].tag, "NNS");
        let d = &s.tag_distributions.as_ref().unwrap()[0];
        assert_eq!(d, &vec![("NNS".to_string(), 0.7), ("VBZ".to_string(), 0.3)]);
        let s = read_tagged_sentence(";/::0.9,,:0.1 1/2/CD").unwrap();
        assert_eq!(s.tokens[0].tag, ":");
        assert_eq!(s.tokens[1].word, "1/2");
        assert!(read_tagged_sentence("x/NN:0.5,VB:0.2").is_err());
        // plain punctuation tags are not mistaken for distributions
        let s = read_tagged_sentence(",/, :/:").unwrap();
        assert_eq!(s.tags(), vec![",", ":"]);
    }

    #[test]
    fn punctuation_classes() {
        let p = Punctuation::default();
        assert!(p.is_comma(",") && p.is_punctuation(","));
        assert!(!p.is_comma("NN") && !p.is_punctuation("NN"));
        assert!(!p.is_comma("``") && p.is_punctuation("``"));
    }

    #[test]
    fn collapse_unary_keeps_root_label() {
        let keep = |t: &ParseTree| t.is_minimal("NP");
        let t = &read("(S (NP (NNP John)) (VP (VBD ran)))").unwrap()[0];
        assert_eq!(t.collapse_unary(&keep).to_string(), "(S (NP (NNP John)) (VBD ran))");
        let t = &read("(S (VP (VBD ran) (NP (NP (NN x)))))").unwrap()[0];
        assert_eq!(t.collapse_unary(&keep).to_string(), "(S (VBD ran) (NP (NN x)))");
        let t = &read("(S (NP (DT the) (NN dog)))").unwrap()[0];
        assert_eq!(t.collapse_unary(&keep).to_string(), "(S (NP (DT the) (NN dog)))");
    }
}

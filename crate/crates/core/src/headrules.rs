//! Head-child selection and head-word propagation.

use std::collections::HashMap;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::treebank::{ParseTree, Punctuation, Token};

const STANDARD_RULES: &str = include_str!("../data/head_rules.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeadRuleError {
    #[error("head rules line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Pass {
    direction: Direction,
    /// Stop at the first child matching any label, rather than trying labels
    /// one at a time.
    by_position: bool,
    labels: Vec<String>,
}

/// Per-parent head-finding passes, loaded from a text table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadRuleTable {
    rules: HashMap<String, Vec<Pass>>,
    default: Vec<Pass>,
    digest: String,
}

impl HeadRuleTable {
    /// The bundled Magerman-style table.
    pub fn standard() -> Self {
        Self::parse(STANDARD_RULES).expect("bundled head rules parse")
    }

    pub fn parse(text: &str) -> Result<Self, HeadRuleError> {
        let mut rules: HashMap<String, Vec<Pass>> = HashMap::new();
        let mut default = vec![Pass {
            direction: Direction::LeftToRight,
            by_position: false,
            labels: Vec::new(),
        }];
        let mut default_seen = false;
        let mut canonical = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let parent = fields.next().unwrap();
            let dir = fields.next().ok_or_else(|| HeadRuleError::Syntax {
                line: i + 1,
                message: format!("missing direction for {parent}"),
            })?;
            let (direction, by_position) = match dir {
                "left" => (Direction::LeftToRight, false),
                "right" => (Direction::RightToLeft, false),
                "leftdis" => (Direction::LeftToRight, true),
                "rightdis" => (Direction::RightToLeft, true),
                other => {
                    return Err(HeadRuleError::Syntax {
                        line: i + 1,
                        message: format!("unknown direction {other:?}"),
                    })
                }
            };
            let labels: Vec<String> = fields.map(str::to_string).collect();
            canonical.push_str(&format!("{parent} {dir} {}\n", labels.join(" ")));
            let pass = Pass {
                direction,
                by_position,
                labels,
            };
            if parent == "*" {
                if !default_seen {
                    default.clear();
                    default_seen = true;
                }
                default.push(pass);
            } else {
                rules.entry(parent.to_string()).or_default().push(pass);
            }
        }
        let digest = Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Ok(HeadRuleTable {
            rules,
            default,
            digest,
        })
    }

    /// Hex SHA-256 of the normalized rule text.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Index of the head child among `children`.
    pub fn head_child(&self, parent: &str, children: &[&str]) -> usize {
        self.head_child_excluding(parent, children, |_| false)
    }

    /// Like [`head_child`](Self::head_child), but children for which `skip`
    /// holds are only chosen when every child is skipped.
    pub fn head_child_excluding(&self, parent: &str, children: &[&str], skip: impl Fn(usize) -> bool) -> usize {
        assert!(!children.is_empty(), "head_child on an empty child list");
        let eligible: Vec<usize> = (0..children.len()).filter(|&i| !skip(i)).collect();
        let eligible = if eligible.is_empty() {
            (0..children.len()).collect()
        } else {
            eligible
        };
        let passes = self.rules.get(parent).unwrap_or(&self.default);
        for pass in passes {
            let order: Vec<usize> = match pass.direction {
                Direction::LeftToRight => eligible.clone(),
                Direction::RightToLeft => eligible.iter().rev().copied().collect(),
            };
            if pass.by_position {
                if let Some(&i) = order.iter().find(|&&i| pass.labels.iter().any(|l| l == children[i])) {
                    return i;
                }
            } else {
                for l in &pass.labels {
                    if let Some(&i) = order.iter().find(|&&i| children[i] == l) {
                        return i;
                    }
                }
            }
        }
        match passes.first().map_or(Direction::LeftToRight, |p| p.direction) {
            Direction::LeftToRight => eligible[0],
            Direction::RightToLeft => *eligible.last().unwrap(),
        }
    }
}

/// A tree node annotated with its token span, head token and head child.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadedNode {
    pub label: String,
    /// Half-open token range.
    pub start: usize,
    pub end: usize,
    /// Token index of the head word.
    pub head: usize,
    /// Index into `children` of the head child; `None` for leaves.
    pub head_child: Option<usize>,
    pub children: Vec<HeadedNode>,
    /// The token, for leaves.
    pub token: Option<Token>,
}

impl HeadedNode {
    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }

    pub fn leaf(token: Token) -> Self {
        HeadedNode {
            label: token.tag.clone(),
            start: token.index,
            end: token.index + 1,
            head: token.index,
            head_child: None,
            children: Vec::new(),
            token: Some(token),
        }
    }

    /// Internal node over `children`, headed by `children[head_child]`.
    pub fn internal(label: impl Into<String>, children: Vec<HeadedNode>, head_child: usize) -> Self {
        HeadedNode {
            label: label.into(),
            start: children.first().map_or(0, |c| c.start),
            end: children.last().map_or(0, |c| c.end),
            head: children[head_child].head,
            head_child: Some(head_child),
            children,
            token: None,
        }
    }

    pub fn tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        fn go(n: &HeadedNode, out: &mut Vec<Token>) {
            match &n.token {
                Some(t) => out.push(t.clone()),
                None => n.children.iter().for_each(|c| go(c, out)),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn to_tree(&self) -> ParseTree {
        match &self.token {
            Some(t) => ParseTree::Leaf(t.clone()),
            None => ParseTree::node(self.label.clone(), self.children.iter().map(HeadedNode::to_tree).collect()),
        }
    }

    /// True for an NP with no NP below it.
    pub fn is_base_np(&self) -> bool {
        fn has_np(n: &HeadedNode) -> bool {
            n.children.iter().any(|c| (!c.is_leaf() && c.label == crate::NP_LABEL) || has_np(c))
        }
        !self.is_leaf() && self.label == crate::NP_LABEL && !has_np(self)
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a HeadedNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

/// Annotate every node with its head. Punctuation children are never chosen
/// as head while a non-punctuation child exists.
pub fn annotate_heads(tree: &ParseTree, rules: &HeadRuleTable, punct: &Punctuation) -> HeadedNode {
    match tree {
        ParseTree::Leaf(tok) => HeadedNode::leaf(tok.clone()),
        ParseTree::Node { label, children } => {
            let kids: Vec<HeadedNode> = children.iter().map(|c| annotate_heads(c, rules, punct)).collect();
            let labels: Vec<&str> = kids.iter().map(|k| k.label.as_str()).collect();
            let h = rules.head_child_excluding(label, &labels, |i| kids[i].is_leaf() && punct.is_punctuation(&kids[i].label));
            HeadedNode::internal(label.clone(), kids, h)
        }
    }
}

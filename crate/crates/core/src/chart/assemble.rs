//! Turning word-level analyses into full trees: punctuation placement, the
//! shared tie-break key and the flat fallback tree.

use crate::headrules::{HeadRuleTable, HeadedNode};
use crate::treebank::{Punctuation, Token};

/// Insert every token not covered by `node` (punctuation) into the lowest
/// constituent spanning both of its neighbours, between them. Tokens before
/// the first or after the last word attach to the root; a bare word root is
/// wrapped in `root_label` first.
pub fn place_punctuation(node: HeadedNode, tokens: &[Token], root_label: &str) -> HeadedNode {
    let mut root = fill(node, tokens);
    let (start, end) = (root.start, root.end);
    if start == 0 && end == tokens.len() {
        return root;
    }
    if root.is_leaf() {
        root = HeadedNode::internal(root_label, vec![root], 0);
    }
    let mut children: Vec<HeadedNode> = tokens[..start].iter().cloned().map(HeadedNode::leaf).collect();
    let shift = children.len();
    children.extend(root.children);
    children.extend(tokens[end..].iter().cloned().map(HeadedNode::leaf));
    HeadedNode::internal(root.label, children, root.head_child.unwrap_or(0) + shift)
}

fn fill(node: HeadedNode, tokens: &[Token]) -> HeadedNode {
    if node.is_leaf() {
        return node;
    }
    let hc = node.head_child.unwrap_or(0);
    let kids: Vec<HeadedNode> = node.children.into_iter().map(|c| fill(c, tokens)).collect();
    let mut out = Vec::with_capacity(kids.len());
    let mut new_hc = 0;
    let mut prev_end = None;
    for (i, c) in kids.into_iter().enumerate() {
        if let Some(e) = prev_end {
            out.extend(tokens[e..c.start].iter().cloned().map(HeadedNode::leaf));
        }
        if i == hc {
            new_hc = out.len();
        }
        prev_end = Some(c.end);
        out.push(c);
    }
    HeadedNode::internal(node.label, out, new_hc)
}

/// Key used to break score ties: the bracketed string of the analysis
/// before punctuation placement. Smaller wins.
pub fn tie_key(node: &HeadedNode) -> String {
    node.to_tree().to_string()
}

/// Scores this close are treated as equal.
pub const TIE_EPSILON: f64 = 1e-9;

/// Whether candidate (score `s`, key `k`) beats the incumbent.
pub fn better(s: f64, k: &dyn Fn() -> String, best_s: f64, best_k: &dyn Fn() -> String) -> bool {
    if s > best_s + TIE_EPSILON {
        true
    } else if s < best_s - TIE_EPSILON {
        false
    } else {
        k() < best_k()
    }
}

/// All tokens as children of one `label` node.
pub fn flat_tree(tokens: &[Token], label: &str, rules: &HeadRuleTable, punct: &Punctuation) -> HeadedNode {
    let tags: Vec<&str> = tokens.iter().map(|t| t.tag.as_str()).collect();
    let h = rules.head_child_excluding(label, &tags, |i| punct.is_punctuation(tags[i]));
    HeadedNode::internal(label, tokens.iter().cloned().map(HeadedNode::leaf).collect(), h)
}

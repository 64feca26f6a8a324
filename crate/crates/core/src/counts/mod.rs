//! Co-occurrence, relation and gap count tables, accumulated from a treebank.

mod format;

use std::collections::BTreeSet;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::depextract::{Extraction, GapTag, HeadRef, RelationTriple};
use crate::distance::{delta_indexed, CommaIndex, Delta};
use crate::headrules::HeadRuleTable;
use crate::treebank::{ParseTree, Punctuation};
use crate::{NP_LABEL, ROOT_MARKER};

pub use format::{ModelFormatError, MODEL_MAGIC, MODEL_VERSION};

/// Wildcard field of a backed-off key.
pub const ANY: u32 = u32::MAX;
/// Symbol id for strings never seen in training.
pub const UNKNOWN: u32 = u32::MAX - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountsError {
    #[error("count overflow in {table}")]
    Overflow { table: &'static str },
    #[error("cannot merge models trained with different configurations ({left} vs {right})")]
    ConfigMismatch { left: String, right: String },
}

/// Five-field context key: two (word, tag) pairs and one small feature
/// (Δ code for dependencies, comma flag for gaps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtxKey {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub x: u8,
}

/// How a full key is projected onto the four backoff levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// (w_j,t_j,w_h,t_h), (w_j,t_j,t_h), (t_j,w_h,t_h), (t_j,t_h).
    Tagged,
    /// (w_j,w_h), (w_j,t_h), (t_j,w_h), (t_j,t_h).
    TagBlind,
}

impl Family {
    pub fn project(self, level: usize, k: CtxKey) -> CtxKey {
        let CtxKey { a, b, c, d, x } = k;
        let (a, b, c, d) = match (self, level) {
            (Family::Tagged, 0) => (a, b, c, d),
            (Family::Tagged, 1) => (a, b, ANY, d),
            (Family::Tagged, 2) => (ANY, b, c, d),
            (Family::TagBlind, 0) => (a, ANY, c, ANY),
            (Family::TagBlind, 1) => (a, ANY, ANY, d),
            (Family::TagBlind, 2) => (ANY, b, c, ANY),
            (_, 3) => (ANY, b, ANY, d),
            _ => panic!("backoff level {level} out of range"),
        };
        CtxKey { a, b, c, d, x }
    }
}

/// Denominator and outcome-conditioned numerator counts at one level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Level {
    pub(crate) denom: FxHashMap<CtxKey, u32>,
    pub(crate) numer: FxHashMap<(CtxKey, u32), u32>,
}

impl Level {
    pub fn denom(&self, k: &CtxKey) -> u32 {
        self.denom.get(k).copied().unwrap_or(0)
    }

    pub fn numer(&self, k: &CtxKey, outcome: u32) -> u32 {
        self.numer.get(&(*k, outcome)).copied().unwrap_or(0)
    }

    pub fn denom_entries(&self) -> impl Iterator<Item = (&CtxKey, &u32)> {
        self.denom.iter()
    }

    pub fn numer_entries(&self) -> impl Iterator<Item = (&(CtxKey, u32), &u32)> {
        self.numer.iter()
    }

    pub fn len(&self) -> usize {
        self.denom.len() + self.numer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn bump<K: std::hash::Hash + Eq>(map: &mut FxHashMap<K, u32>, k: K, by: u32, table: &'static str) -> Result<(), CountsError> {
    let e = map.entry(k).or_insert(0);
    *e = e.checked_add(by).ok_or(CountsError::Overflow { table })?;
    Ok(())
}

/// Four backoff levels of one table family.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Backoff {
    pub(crate) levels: [Level; 4],
}

impl Backoff {
    fn add_context(&mut self, fam: Family, key: CtxKey) -> Result<(), CountsError> {
        for (l, level) in self.levels.iter_mut().enumerate() {
            bump(&mut level.denom, fam.project(l, key), 1, "denominator")?;
        }
        Ok(())
    }

    fn add_outcome(&mut self, fam: Family, key: CtxKey, outcome: u32) -> Result<(), CountsError> {
        for (l, level) in self.levels.iter_mut().enumerate() {
            bump(&mut level.numer, (fam.project(l, key), outcome), 1, "numerator")?;
        }
        Ok(())
    }

    /// (η, δ) at each level for a full key.
    pub fn counts(&self, fam: Family, key: CtxKey, outcome: u32) -> [(u32, u32); 4] {
        std::array::from_fn(|l| {
            let k = fam.project(l, key);
            (self.levels[l].numer(&k, outcome), self.levels[l].denom(&k))
        })
    }

    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l]
    }

    fn remap(&self, sym: &dyn Fn(u32) -> u32, outcome: &dyn Fn(u32) -> u32) -> Backoff {
        let key = |k: &CtxKey| CtxKey {
            a: sym(k.a),
            b: sym(k.b),
            c: sym(k.c),
            d: sym(k.d),
            x: k.x,
        };
        let levels = std::array::from_fn(|l| Level {
            denom: self.levels[l].denom.iter().map(|(k, &v)| (key(k), v)).collect(),
            numer: self.levels[l].numer.iter().map(|((k, o), &v)| ((key(k), outcome(*o)), v)).collect(),
        });
        Backoff { levels }
    }

    fn absorb(&mut self, other: &Backoff) -> Result<(), CountsError> {
        for (mine, theirs) in self.levels.iter_mut().zip(&other.levels) {
            for (k, &v) in &theirs.denom {
                bump(&mut mine.denom, *k, v, "denominator")?;
            }
            for (k, &v) in &theirs.numer {
                bump(&mut mine.numer, *k, v, "numerator")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Symbols {
    pub(crate) names: Vec<String>,
    index: FxHashMap<String, u32>,
}

impl Symbols {
    pub(crate) fn from_names(names: Vec<String>) -> Self {
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Symbols { names, index }
    }

    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }

    fn get(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Collapse unary chains before extraction, keeping baseNPs. The parser
    /// never builds unary constituents.
    pub collapse_unary: bool,
    pub punctuation: Punctuation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            collapse_unary: true,
            punctuation: Punctuation::default(),
        }
    }
}

impl TrainConfig {
    pub fn hash(&self, rules: &HeadRuleTable) -> String {
        let canon = format!(
            "collapse_unary={}\ncomma={:?}\npunct={:?}\nhead_rules={}\n",
            self.collapse_unary,
            self.punctuation.comma_tags,
            self.punctuation.eval_punct_tags,
            rules.digest()
        );
        Sha256::digest(canon.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The tree as the model sees it.
    pub fn prepare(&self, tree: &ParseTree) -> ParseTree {
        if self.collapse_unary {
            tree.collapse_unary(&|t| t.is_minimal(NP_LABEL))
        } else {
            tree.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMeta {
    pub config_hash: String,
    pub head_rule_digest: String,
    pub collapse_unary: bool,
    pub punctuation: Punctuation,
    pub sentences: u64,
    pub skipped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableSizes {
    pub symbols: usize,
    pub triples: usize,
    pub dependency_entries: usize,
    pub tag_blind_entries: usize,
    pub gap_entries: usize,
}

/// All training counts plus metadata. Immutable once trained or loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub(crate) symbols: Symbols,
    pub(crate) triples: Vec<[u32; 3]>,
    pub(crate) triple_counts: Vec<u32>,
    pub(crate) triple_index: FxHashMap<[u32; 3], u32>,
    /// Indexed by family: tagged, tag-blind.
    pub(crate) dep: [Backoff; 2],
    pub(crate) gap: Backoff,
    pub(crate) words: BTreeSet<u32>,
    pub(crate) tags: BTreeSet<u32>,
    pub(crate) meta: ModelMeta,
}

fn family_index(f: Family) -> usize {
    match f {
        Family::Tagged => 0,
        Family::TagBlind => 1,
    }
}

impl Model {
    pub fn empty(config: &TrainConfig, rules: &HeadRuleTable) -> Self {
        Model {
            symbols: Symbols::default(),
            triples: Vec::new(),
            triple_counts: Vec::new(),
            triple_index: FxHashMap::default(),
            dep: Default::default(),
            gap: Backoff::default(),
            words: BTreeSet::new(),
            tags: BTreeSet::new(),
            meta: ModelMeta {
                config_hash: config.hash(rules),
                head_rule_digest: rules.digest().to_string(),
                collapse_unary: config.collapse_unary,
                punctuation: config.punctuation.clone(),
                sentences: 0,
                skipped: 0,
            },
        }
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn punctuation(&self) -> &Punctuation {
        &self.meta.punctuation
    }

    pub fn symbol(&self, s: &str) -> Option<u32> {
        self.symbols.get(s)
    }

    pub fn symbol_or_unknown(&self, s: &str) -> u32 {
        self.symbols.get(s).unwrap_or(UNKNOWN)
    }

    pub fn name(&self, id: u32) -> &str {
        match id {
            ANY => "*",
            UNKNOWN => "<UNK>",
            _ => &self.symbols.names[id as usize],
        }
    }

    pub fn root_symbol(&self) -> u32 {
        self.symbol_or_unknown(ROOT_MARKER)
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    /// Symbol ids of (modifier, parent, head-child).
    pub fn triple_symbols(&self, id: u32) -> [u32; 3] {
        self.triples[id as usize]
    }

    pub fn triple_count(&self, id: u32) -> u32 {
        self.triple_counts[id as usize]
    }

    pub fn triple(&self, id: u32) -> RelationTriple {
        let [m, p, h] = self.triples[id as usize];
        RelationTriple::new(self.name(m), self.name(p), self.name(h))
    }

    pub fn triple_id_by_symbols(&self, t: [u32; 3]) -> Option<u32> {
        self.triple_index.get(&t).copied()
    }

    pub fn triple_id(&self, t: &RelationTriple) -> Option<u32> {
        let s = [self.symbol(&t.modifier)?, self.symbol(&t.parent)?, self.symbol(&t.head_child)?];
        self.triple_id_by_symbols(s)
    }

    /// Attested triples in canonical order, with their counts.
    pub fn triples(&self) -> impl Iterator<Item = (RelationTriple, u32)> + '_ {
        (0..self.triples.len() as u32).map(|i| (self.triple(i), self.triple_count(i)))
    }

    /// Most frequent label attached to ROOT; ties go to the smallest label.
    pub fn most_frequent_root_label(&self) -> Option<String> {
        let root = self.symbol(ROOT_MARKER)?;
        let mut best: Option<(u32, u32)> = None;
        for (i, t) in self.triples.iter().enumerate() {
            if t[0] == root && t[2] == root {
                let c = self.triple_counts[i];
                if best.is_none_or(|(bc, _)| c > bc) {
                    best = Some((c, t[1]));
                }
            }
        }
        best.map(|(_, l)| self.name(l).to_string())
    }

    pub fn dependency_counts(&self, fam: Family, key: CtxKey, triple: u32) -> [(u32, u32); 4] {
        self.dep[family_index(fam)].counts(fam, key, triple)
    }

    pub fn gap_counts(&self, key: CtxKey, tag: GapTag) -> [(u32, u32); 4] {
        self.gap.counts(Family::Tagged, key, tag.code() as u32)
    }

    pub fn dependency_table(&self, fam: Family) -> &Backoff {
        &self.dep[family_index(fam)]
    }

    pub fn gap_table(&self) -> &Backoff {
        &self.gap
    }

    fn pair_key(&self, modifier: (&str, &str), head: (&str, &str), x: u8) -> CtxKey {
        CtxKey {
            a: self.symbol_or_unknown(modifier.0),
            b: self.symbol_or_unknown(modifier.1),
            c: self.symbol_or_unknown(head.0),
            d: self.symbol_or_unknown(head.1),
            x,
        }
    }

    /// Times `modifier` and `head` were seen in the same reduced sentence in
    /// that order of roles, summed over Δ.
    pub fn cooccurrence(&self, modifier: (&str, &str), head: (&str, &str)) -> u64 {
        (0..Delta::ROOT_CODE)
            .map(|x| self.dep[0].levels[0].denom(&self.pair_key(modifier, head, x)) as u64)
            .sum()
    }

    /// Times `modifier` was seen modifying `head` with `relation`, summed over Δ.
    pub fn relation_count(&self, relation: &RelationTriple, modifier: (&str, &str), head: (&str, &str)) -> u64 {
        let Some(r) = self.triple_id(relation) else { return 0 };
        (0..Delta::ROOT_CODE)
            .map(|x| self.dep[0].levels[0].numer(&self.pair_key(modifier, head, x), r) as u64)
            .sum()
    }

    pub fn vocab(&self) -> Vec<&str> {
        self.words.iter().map(|&w| self.name(w)).collect()
    }

    pub fn tag_set(&self) -> Vec<&str> {
        self.tags.iter().map(|&t| self.name(t)).collect()
    }

    pub fn table_sizes(&self) -> TableSizes {
        let size = |b: &Backoff| b.levels.iter().map(Level::len).sum();
        TableSizes {
            symbols: self.symbols.names.len(),
            triples: self.triples.len(),
            dependency_entries: size(&self.dep[0]),
            tag_blind_entries: size(&self.dep[1]),
            gap_entries: size(&self.gap),
        }
    }

    fn intern_triple(&mut self, t: [u32; 3], by: u32) -> Result<u32, CountsError> {
        let id = match self.triple_index.get(&t) {
            Some(&id) => id,
            None => {
                let id = self.triples.len() as u32;
                self.triples.push(t);
                self.triple_counts.push(0);
                self.triple_index.insert(t, id);
                id
            }
        };
        let c = &mut self.triple_counts[id as usize];
        *c = c.checked_add(by).ok_or(CountsError::Overflow { table: "triples" })?;
        Ok(id)
    }

    /// Add one sentence's counts. Leaves the model uncanonicalized.
    pub fn add_extraction(&mut self, ex: &Extraction) -> Result<(), CountsError> {
        let items: Vec<(u32, u32)> = ex
            .reduced
            .items
            .iter()
            .map(|it| (self.symbols.intern(&it.word), self.symbols.intern(&it.tag)))
            .collect();
        for t in &ex.sentence.tokens {
            let (w, g) = (self.symbols.intern(&t.word), self.symbols.intern(&t.tag));
            self.words.insert(w);
            self.tags.insert(g);
        }
        let root = self.symbols.intern(ROOT_MARKER);
        let mut arcs = Vec::with_capacity(ex.dependencies.len());
        for d in &ex.dependencies {
            let r = &d.relation;
            let t = [self.symbols.intern(&r.modifier), self.symbols.intern(&r.parent), self.symbols.intern(&r.head_child)];
            arcs.push((d.head, self.intern_triple(t, 1)?));
        }
        let commas = CommaIndex::new(&ex.sentence, &self.meta.punctuation);
        let m = items.len();
        for k in 0..m {
            let heads = (0..m).filter(|&l| l != k).map(HeadRef::Word).chain([HeadRef::Root]);
            for h in heads {
                let (hw, ht) = match h {
                    HeadRef::Word(l) => items[l],
                    HeadRef::Root => (root, root),
                };
                let key = CtxKey {
                    a: items[k].0,
                    b: items[k].1,
                    c: hw,
                    d: ht,
                    x: delta_indexed(&ex.reduced, &commas, k, h).code(),
                };
                let attested = (arcs[k].0 == h).then_some(arcs[k].1);
                for fam in [Family::Tagged, Family::TagBlind] {
                    let table = &mut self.dep[family_index(fam)];
                    table.add_context(fam, key)?;
                    if let Some(r) = attested {
                        table.add_outcome(fam, key, r)?;
                    }
                }
            }
        }
        for g in &ex.gaps {
            let (l, r) = (&ex.sentence.tokens[g.left], &ex.sentence.tokens[g.right]);
            let key = CtxKey {
                a: self.symbols.intern(&l.word),
                b: self.symbols.intern(&l.tag),
                c: self.symbols.intern(&r.word),
                d: self.symbols.intern(&r.tag),
                x: g.comma as u8,
            };
            self.gap.add_context(Family::Tagged, key)?;
            self.gap.add_outcome(Family::Tagged, key, g.tag.code() as u32)?;
        }
        self.meta.sentences += 1;
        Ok(())
    }

    /// Renumber symbols and triples in sorted order so that equal counts give
    /// equal models regardless of accumulation order.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<u32> = (0..self.symbols.names.len() as u32).collect();
        order.sort_by(|&x, &y| self.symbols.names[x as usize].cmp(&self.symbols.names[y as usize]));
        let mut new_of = vec![0u32; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_of[old as usize] = new as u32;
        }
        let sym = |s: u32| if s >= UNKNOWN { s } else { new_of[s as usize] };
        let names = order.iter().map(|&o| self.symbols.names[o as usize].clone()).collect();

        let renamed: Vec<[u32; 3]> = self.triples.iter().map(|t| t.map(sym)).collect();
        let mut torder: Vec<u32> = (0..renamed.len() as u32).collect();
        torder.sort_by_key(|&i| renamed[i as usize]);
        let mut tnew = vec![0u32; torder.len()];
        for (new, &old) in torder.iter().enumerate() {
            tnew[old as usize] = new as u32;
        }
        let trip = |o: u32| tnew[o as usize];

        self.dep = [self.dep[0].remap(&sym, &trip), self.dep[1].remap(&sym, &trip)];
        self.gap = self.gap.remap(&sym, &|o| o);
        self.triples = torder.iter().map(|&o| renamed[o as usize]).collect();
        self.triple_counts = torder.iter().map(|&o| self.triple_counts[o as usize]).collect();
        self.triple_index = self.triples.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
        self.words = self.words.iter().map(|&w| sym(w)).collect();
        self.tags = self.tags.iter().map(|&t| sym(t)).collect();
        self.symbols = Symbols::from_names(names);
    }

    /// Cell-wise sum with another model trained under the same configuration.
    pub fn merge(&mut self, other: &Model) -> Result<(), CountsError> {
        if self.meta.config_hash != other.meta.config_hash {
            return Err(CountsError::ConfigMismatch {
                left: self.meta.config_hash.clone(),
                right: other.meta.config_hash.clone(),
            });
        }
        let map: Vec<u32> = other.symbols.names.iter().map(|n| self.symbols.intern(n)).collect();
        let sym = |s: u32| if s >= UNKNOWN { s } else { map[s as usize] };
        let mut tmap = Vec::with_capacity(other.triples.len());
        for (t, &c) in other.triples.iter().zip(&other.triple_counts) {
            tmap.push(self.intern_triple(t.map(sym), c)?);
        }
        let trip = |o: u32| tmap[o as usize];
        self.dep[0].absorb(&other.dep[0].remap(&sym, &trip))?;
        self.dep[1].absorb(&other.dep[1].remap(&sym, &trip))?;
        self.gap.absorb(&other.gap.remap(&sym, &|o| o))?;
        self.words.extend(other.words.iter().map(|&w| sym(w)));
        self.tags.extend(other.tags.iter().map(|&t| sym(t)));
        self.meta.sentences += other.meta.sentences;
        self.meta.skipped += other.meta.skipped;
        self.canonicalize();
        Ok(())
    }

    pub fn save(&self, sink: &mut impl std::io::Write) -> std::io::Result<()> {
        sink.write_all(&format::encode(self))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        format::encode(self)
    }

    pub fn load(source: &mut impl std::io::Read) -> Result<Model, ModelFormatError> {
        let mut buf = Vec::new();
        source.read_to_end(&mut buf).map_err(|e| ModelFormatError::Io(e.to_string()))?;
        format::decode(&buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Model, ModelFormatError> {
        format::decode(bytes)
    }
}

fn train_chunk(trees: &[ParseTree], rules: &HeadRuleTable, config: &TrainConfig) -> Result<Model, CountsError> {
    let mut model = Model::empty(config, rules);
    for (i, tree) in trees.iter().enumerate() {
        match Extraction::from_tree(&config.prepare(tree), rules, &config.punctuation) {
            Ok(ex) => model.add_extraction(&ex)?,
            Err(e) => {
                log::warn!("skipping tree {i}: {e}");
                model.meta.skipped += 1;
            }
        }
    }
    Ok(model)
}

/// Count every tree of the treebank. Trees the extraction pipeline rejects
/// are skipped with a warning.
pub fn train(trees: &[ParseTree], rules: &HeadRuleTable, config: &TrainConfig) -> Result<Model, CountsError> {
    let mut model = train_chunk(trees, rules, config)?;
    model.canonicalize();
    if model.meta.skipped > 0 {
        log::warn!("skipped {} of {} trees", model.meta.skipped, trees.len());
    }
    Ok(model)
}

/// Train on chunks in parallel and merge. Gives the same model as [`train`].
pub fn train_parallel(trees: &[ParseTree], rules: &HeadRuleTable, config: &TrainConfig, chunk: usize) -> Result<Model, CountsError> {
    let parts: Vec<Model> = trees
        .par_chunks(chunk.max(1))
        .map(|c| train_chunk(c, rules, config))
        .collect::<Result<_, _>>()?;
    let mut model = Model::empty(config, rules);
    for p in &parts {
        model.merge(p)?;
    }
    model.canonicalize();
    if model.meta.skipped > 0 {
        log::warn!("skipped {} of {} trees", model.meta.skipped, trees.len());
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{read_trees, ReaderConfig};

    fn trees(s: &str) -> Vec<ParseTree> {
        read_trees(s, &ReaderConfig::default()).unwrap()
    }

    fn model(s: &str) -> Model {
        train(&trees(s), &HeadRuleTable::standard(), &TrainConfig::default()).unwrap()
    }

    /// Trained with B as the head child of X.
    fn model_b_head(s: &str) -> Model {
        let rules = HeadRuleTable::parse("X left B\n").unwrap();
        train(&trees(s), &rules, &TrainConfig::default()).unwrap()
    }

    #[test]
    fn repeated_pair_counts_twice() {
        let m = model("(X (b a) (d c) (d c))");
        assert_eq!(m.cooccurrence(("a", "b"), ("c", "d")), 2);
        assert_eq!(m.cooccurrence(("c", "d"), ("a", "b")), 2);
        assert_eq!(m.cooccurrence(("c", "d"), ("c", "d")), 2);
    }

    #[test]
    fn two_word_tree_by_hand() {
        let m = model_b_head("(X (A a) (B b))");
        let r = RelationTriple::new("A", "X", "B");
        assert_eq!(m.relation_count(&r, ("a", "A"), ("b", "B")), 1);
        assert_eq!(m.relation_count(&r, ("b", "B"), ("a", "A")), 0);
        assert_eq!(m.cooccurrence(("a", "A"), ("b", "B")), 1);
        assert_eq!(m.cooccurrence(("b", "B"), ("a", "A")), 1);
        assert_eq!(m.num_triples(), 2);
        assert_eq!(m.most_frequent_root_label().as_deref(), Some("X"));
        // a->b is adjacency with the head to the right
        let key = CtxKey {
            a: m.symbol("a").unwrap(),
            b: m.symbol("A").unwrap(),
            c: m.symbol("b").unwrap(),
            d: m.symbol("B").unwrap(),
            x: Delta::Pair {
                head_precedes: false,
                adjacent: true,
                verb_between: false,
                commas: crate::distance::CommaBucket::Zero,
                comma_after_first: false,
                comma_before_second: false,
            }
            .code(),
        };
        let rid = m.triple_id(&r).unwrap();
        assert_eq!(m.dependency_counts(Family::Tagged, key, rid), [(1, 1); 4]);
        let gap_key = CtxKey { x: 0, ..key };
        assert_eq!(m.gap_counts(gap_key, GapTag::Null), [(1, 1); 4]);
    }

    #[test]
    fn tag_blind_sums_over_tags() {
        let m = model_b_head("(X (A a) (B b)) (X (C a) (B b))");
        let key = |t: &str| CtxKey {
            a: m.symbol("a").unwrap(),
            b: m.symbol(t).unwrap(),
            c: m.symbol("b").unwrap(),
            d: m.symbol("B").unwrap(),
            x: 2,
        };
        let ra = m.triple_id(&RelationTriple::new("A", "X", "B")).unwrap();
        let rc = m.triple_id(&RelationTriple::new("C", "X", "B")).unwrap();
        assert_eq!(m.dependency_counts(Family::TagBlind, key("C"), rc)[0], (1, 2));
        assert_eq!(m.dependency_counts(Family::Tagged, key("A"), ra)[0], (1, 1));
        assert_eq!(m.dependency_counts(Family::TagBlind, key("A"), ra)[0], (1, 2));
    }

    #[test]
    fn training_order_does_not_matter() {
        let a = model("(X (A a) (B b)) (Y (C c) (A a))");
        let b = model("(Y (C c) (A a)) (X (A a) (B b))");
        assert_eq!(a, b);
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn merge_mismatch_rejected() {
        let rules = HeadRuleTable::standard();
        let mut a = Model::empty(&TrainConfig::default(), &rules);
        let b = Model::empty(
            &TrainConfig {
                collapse_unary: false,
                ..TrainConfig::default()
            },
            &rules,
        );
        assert!(matches!(a.merge(&b), Err(CountsError::ConfigMismatch { .. })));
    }

    #[test]
    fn overflow_detected() {
        let mut map = FxHashMap::default();
        bump(&mut map, 1u8, u32::MAX, "t").unwrap();
        assert!(bump(&mut map, 1u8, 1, "t").is_err());
    }
}

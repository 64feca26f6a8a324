//! Binary model file: magic, version, config hash, then tagged
//! length-prefixed sections. All integers little-endian; entries sorted.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;
use thiserror::Error;

use super::{Backoff, CtxKey, Level, Model, ModelMeta, Symbols, ANY, UNKNOWN};
use crate::treebank::Punctuation;

pub const MODEL_MAGIC: &[u8; 8] = b"LXDPMODL";
pub const MODEL_VERSION: u32 = 1;

const SECTIONS: [&[u8; 4]; 8] = [b"META", b"SYMS", b"TRIP", b"VOCB", b"TAGS", b"DEPT", b"DEPB", b"GAPS"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelFormatError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model file version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("model file truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("corrupt model file at byte {offset}: {message}")]
    Corrupt { offset: usize, message: String },
    #[error("reading model: {0}")]
    Io(String),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn strs<'a>(&mut self, it: impl ExactSizeIterator<Item = &'a String>) {
        self.u32(it.len() as u32);
        for s in it {
            self.str(s);
        }
    }
    fn key(&mut self, k: &CtxKey) {
        for v in [k.a, k.b, k.c, k.d] {
            self.u32(v);
        }
        self.u8(k.x);
    }
    fn section(&mut self, tag: &[u8; 4], body: Writer) {
        self.0.extend_from_slice(tag);
        self.u64(body.0.len() as u64);
        self.0.extend_from_slice(&body.0);
    }
}

fn backoff_body(b: &Backoff) -> Writer {
    let mut w = Writer(Vec::new());
    for level in &b.levels {
        let mut d: Vec<_> = level.denom.iter().collect();
        d.sort();
        w.u64(d.len() as u64);
        for (k, v) in d {
            w.key(k);
            w.u32(*v);
        }
        let mut n: Vec<_> = level.numer.iter().collect();
        n.sort();
        w.u64(n.len() as u64);
        for ((k, o), v) in n {
            w.key(k);
            w.u32(*o);
            w.u32(*v);
        }
    }
    w
}

pub(crate) fn encode(m: &Model) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MODEL_MAGIC);
    w.u32(MODEL_VERSION);
    w.str(&m.meta.config_hash);

    let mut meta = Writer(Vec::new());
    meta.str(&m.meta.head_rule_digest);
    meta.u8(m.meta.collapse_unary as u8);
    meta.strs(m.meta.punctuation.comma_tags.iter());
    meta.strs(m.meta.punctuation.eval_punct_tags.iter());
    meta.u64(m.meta.sentences);
    meta.u64(m.meta.skipped);
    w.section(SECTIONS[0], meta);

    let mut syms = Writer(Vec::new());
    syms.strs(m.symbols.names.iter());
    w.section(SECTIONS[1], syms);

    let mut trip = Writer(Vec::new());
    trip.u32(m.triples.len() as u32);
    for (t, c) in m.triples.iter().zip(&m.triple_counts) {
        t.iter().for_each(|&s| trip.u32(s));
        trip.u32(*c);
    }
    w.section(SECTIONS[2], trip);

    for (tag, set) in [(SECTIONS[3], &m.words), (SECTIONS[4], &m.tags)] {
        let mut s = Writer(Vec::new());
        s.u32(set.len() as u32);
        set.iter().for_each(|&v| s.u32(v));
        w.section(tag, s);
    }
    w.section(SECTIONS[5], backoff_body(&m.dep[0]));
    w.section(SECTIONS[6], backoff_body(&m.dep[1]));
    w.section(SECTIONS[7], backoff_body(&m.gap));
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelFormatError> {
        if self.buf.len() - self.pos < n {
            return Err(ModelFormatError::Truncated { offset: self.buf.len() });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ModelFormatError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, ModelFormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ModelFormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn corrupt(&self, message: impl Into<String>) -> ModelFormatError {
        ModelFormatError::Corrupt {
            offset: self.pos,
            message: message.into(),
        }
    }
    fn str(&mut self) -> Result<String, ModelFormatError> {
        let n = self.u32()? as usize;
        let at = self.pos;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| ModelFormatError::Corrupt {
            offset: at,
            message: "string is not UTF-8".into(),
        })
    }
    fn strs(&mut self) -> Result<Vec<String>, ModelFormatError> {
        let n = self.u32()?;
        (0..n).map(|_| self.str()).collect()
    }
    fn count(&mut self, entry_size: usize) -> Result<usize, ModelFormatError> {
        let n = self.u64()?;
        if n > ((self.buf.len() - self.pos) / entry_size) as u64 {
            return Err(self.corrupt(format!("entry count {n} exceeds remaining data")));
        }
        Ok(n as usize)
    }
    fn symbol(&mut self, nsym: usize, wild_ok: bool) -> Result<u32, ModelFormatError> {
        let v = self.u32()?;
        if (v as usize) < nsym || (wild_ok && (v == ANY || v == UNKNOWN)) {
            Ok(v)
        } else {
            Err(ModelFormatError::Corrupt {
                offset: self.pos - 4,
                message: format!("symbol id {v} out of range"),
            })
        }
    }
    fn key(&mut self, nsym: usize) -> Result<CtxKey, ModelFormatError> {
        Ok(CtxKey {
            a: self.symbol(nsym, true)?,
            b: self.symbol(nsym, true)?,
            c: self.symbol(nsym, true)?,
            d: self.symbol(nsym, true)?,
            x: self.u8()?,
        })
    }
    fn section(&mut self, tag: &[u8; 4]) -> Result<Reader<'a>, ModelFormatError> {
        let at = self.pos;
        let found = self.take(4)?;
        if found != tag {
            return Err(ModelFormatError::Corrupt {
                offset: at,
                message: format!(
                    "expected section {}, found {:?}",
                    String::from_utf8_lossy(tag),
                    String::from_utf8_lossy(found)
                ),
            });
        }
        let len = self.u64()?;
        if len > (self.buf.len() - self.pos) as u64 {
            return Err(ModelFormatError::Truncated { offset: self.buf.len() });
        }
        let start = self.pos;
        self.pos += len as usize;
        Ok(Reader {
            buf: &self.buf[..start + len as usize],
            pos: start,
        })
    }
    fn finish(&self) -> Result<(), ModelFormatError> {
        if self.pos != self.buf.len() {
            return Err(self.corrupt("trailing bytes"));
        }
        Ok(())
    }
}

fn read_backoff(r: &mut Reader<'_>, nsym: usize, max_outcome: u32) -> Result<Backoff, ModelFormatError> {
    let mut levels: [Level; 4] = Default::default();
    for level in &mut levels {
        let n = r.count(21)?;
        let mut denom = FxHashMap::default();
        denom.reserve(n);
        for _ in 0..n {
            let k = r.key(nsym)?;
            denom.insert(k, r.u32()?);
        }
        let n = r.count(25)?;
        let mut numer = FxHashMap::default();
        numer.reserve(n);
        for _ in 0..n {
            let k = r.key(nsym)?;
            let o = r.u32()?;
            if o >= max_outcome {
                return Err(r.corrupt(format!("outcome id {o} out of range")));
            }
            numer.insert((k, o), r.u32()?);
        }
        *level = Level { denom, numer };
    }
    r.finish()?;
    Ok(Backoff { levels })
}

pub(crate) fn decode(buf: &[u8]) -> Result<Model, ModelFormatError> {
    let mut r = Reader { buf, pos: 0 };
    if buf.len() < 8 {
        return Err(ModelFormatError::Truncated { offset: buf.len() });
    }
    if r.take(8)? != MODEL_MAGIC {
        return Err(ModelFormatError::BadMagic);
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(ModelFormatError::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let config_hash = r.str()?;

    let mut s = r.section(SECTIONS[0])?;
    let head_rule_digest = s.str()?;
    let collapse_unary = s.u8()? != 0;
    let comma_tags = s.strs()?.into_iter().collect();
    let eval_punct_tags = s.strs()?.into_iter().collect();
    let sentences = s.u64()?;
    let skipped = s.u64()?;
    s.finish()?;

    let mut s = r.section(SECTIONS[1])?;
    let names = s.strs()?;
    s.finish()?;
    let nsym = names.len();

    let mut s = r.section(SECTIONS[2])?;
    let nt = s.u32()?;
    let mut triples = Vec::new();
    let mut triple_counts = Vec::new();
    for _ in 0..nt {
        triples.push([s.symbol(nsym, false)?, s.symbol(nsym, false)?, s.symbol(nsym, false)?]);
        triple_counts.push(s.u32()?);
    }
    s.finish()?;

    let mut sets: Vec<BTreeSet<u32>> = Vec::new();
    for tag in [SECTIONS[3], SECTIONS[4]] {
        let mut s = r.section(tag)?;
        let n = s.u32()?;
        let set = (0..n).map(|_| s.symbol(nsym, false)).collect::<Result<_, _>>()?;
        s.finish()?;
        sets.push(set);
    }
    let tags = sets.pop().unwrap();
    let words = sets.pop().unwrap();

    let dep_t = read_backoff(&mut r.section(SECTIONS[5])?, nsym, nt)?;
    let dep_b = read_backoff(&mut r.section(SECTIONS[6])?, nsym, nt)?;
    let gap = read_backoff(&mut r.section(SECTIONS[7])?, nsym, 5)?;
    r.finish()?;

    let triple_index = triples.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
    Ok(Model {
        symbols: Symbols::from_names(names),
        triples,
        triple_counts,
        triple_index,
        dep: [dep_t, dep_b],
        gap,
        words,
        tags,
        meta: ModelMeta {
            config_hash,
            head_rule_digest,
            collapse_unary,
            punctuation: Punctuation {
                comma_tags,
                eval_punct_tags,
            },
            sentences,
            skipped,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{train, TrainConfig};
    use crate::headrules::HeadRuleTable;
    use crate::treebank::{read_trees, ReaderConfig};

    fn trained() -> Model {
        let t = read_trees(
            "(S (NP (DT the) (NN dog)) (VP (VBD saw) (NP (DT a) (NN cat))) (. .)) (S (NP (NNP Kim)) (, ,) (VP (VBD ran)))",
            &ReaderConfig::default(),
        )
        .unwrap();
        train(&t, &HeadRuleTable::standard(), &TrainConfig::default()).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = trained();
        let bytes = encode(&m);
        assert_eq!(decode(&bytes).unwrap(), m);
        assert_eq!(encode(&decode(&bytes).unwrap()), bytes);
    }

    #[test]
    fn empty_model_round_trip() {
        let m = Model::empty(&TrainConfig::default(), &HeadRuleTable::standard());
        assert_eq!(decode(&encode(&m)).unwrap(), m);
    }

    #[test]
    fn version_and_magic_checked() {
        let mut bytes = encode(&trained());
        bytes[8] ^= 0xff;
        assert!(matches!(decode(&bytes), Err(ModelFormatError::Version { .. })));
        let mut bytes = encode(&trained());
        bytes[0] = b'X';
        assert_eq!(decode(&bytes), Err(ModelFormatError::BadMagic));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode(&trained());
        for cut in [3, 12, bytes.len() / 2, bytes.len() - 1] {
            match decode(&bytes[..cut]) {
                Err(ModelFormatError::Truncated { .. }) | Err(ModelFormatError::Corrupt { .. }) => {}
                other => panic!("cut at {cut}: {other:?}"),
            }
        }
    }
}

//! Triple files, vocabularies and the filtered-evaluation index.
//!
//! A dataset directory holds `train.txt`, `valid.txt` and `test.txt`, one
//! `head<TAB>relation<TAB>tail` triple per line. Optional `entities.dict` and
//! `relations.dict` (`id<TAB>name`) fix the numbering; otherwise ids follow
//! first appearance in train, then valid, then test.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A triple of dense ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub h: usize,
    pub r: usize,
    pub t: usize,
}

impl Triple {
    pub fn new(h: usize, r: usize, t: usize) -> Self {
        Triple { h, r, t }
    }
}

/// A triple of surface names as read from disk.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl RawTriple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        RawTriple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

/// Parses TSV text. `source` names the input in error messages.
pub fn parse_tsv(text: &str, source: &str) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |msg: String| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            msg,
        };
        if line.is_empty() {
            return Err(err("blank line".into()));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(err("empty field".into()));
        }
        out.push(RawTriple::new(fields[0], fields[1], fields[2]));
    }
    Ok(out)
}

pub fn load_tsv(path: impl AsRef<Path>) -> Result<Vec<RawTriple>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: format!("invalid UTF-8: {e}"),
    })?;
    parse_tsv(&text, &path.display().to_string())
}

pub fn format_tsv(triples: &[RawTriple]) -> String {
    let mut s = String::new();
    for t in triples {
        s.push_str(&t.head);
        s.push('\t');
        s.push_str(&t.relation);
        s.push('\t');
        s.push_str(&t.tail);
        s.push('\n');
    }
    s
}

pub fn write_tsv(path: impl AsRef<Path>, triples: &[RawTriple]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_tsv(triples)).map_err(|e| Error::io(path, e))
}

/// Insertion-ordered bijection between names and dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Names {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Names {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of `name`, assigning the next id on first sight.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// `id<TAB>name` lines.
    pub fn to_dict(&self) -> String {
        self.names.iter().enumerate().map(|(i, n)| format!("{i}\t{n}\n")).collect()
    }

    /// Parses `id<TAB>name` lines; ids must be exactly `0..n` in some order.
    pub fn parse_dict(text: &str, source: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: i + 1,
                msg,
            };
            let (id, name) = line.split_once('\t').ok_or_else(|| err("expected id<TAB>name".into()))?;
            let id: usize = id.parse().map_err(|_| err(format!("bad id `{id}`")))?;
            if name.is_empty() || name.contains('\t') {
                return Err(err("bad name".into()));
            }
            pairs.push((id, name.to_string(), i + 1));
        }
        pairs.sort();
        let mut out = Names::new();
        for (expected, (id, name, line)) in pairs.into_iter().enumerate() {
            let err = |msg: String| Error::Parse {
                path: source.to_string(),
                line,
                msg,
            };
            if id != expected {
                return Err(err(format!("ids are not dense: expected {expected}, found {id}")));
            }
            if out.id(&name).is_some() {
                return Err(err(format!("duplicate name `{name}`")));
            }
            out.intern(&name);
        }
        Ok(out)
    }

    pub fn load_dict(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_dict(&text, &path.display().to_string())
    }
}

/// Entity and relation vocabularies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    pub entities: Names,
    pub relations: Names,
}

impl Vocab {
    /// First-appearance numbering over the given splits in order.
    pub fn build(splits: &[&[RawTriple]]) -> Self {
        let mut v = Vocab::default();
        for split in splits {
            for t in split.iter() {
                v.entities.intern(&t.head);
                v.relations.intern(&t.relation);
                v.entities.intern(&t.tail);
            }
        }
        v
    }

    pub fn encode(&self, t: &RawTriple) -> Result<Triple> {
        let lookup = |names: &Names, kind: &str, name: &str| {
            names
                .id(name)
                .ok_or_else(|| Error::Config(format!("unknown {kind} `{name}`")))
        };
        Ok(Triple {
            h: lookup(&self.entities, "entity", &t.head)?,
            r: lookup(&self.relations, "relation", &t.relation)?,
            t: lookup(&self.entities, "entity", &t.tail)?,
        })
    }

    pub fn decode(&self, t: &Triple) -> Result<RawTriple> {
        let name = |names: &Names, kind: &'static str, id: usize| {
            names.name(id).map(str::to_string).ok_or(Error::IdOutOfRange {
                kind,
                id,
                bound: names.len(),
            })
        };
        Ok(RawTriple {
            head: name(&self.entities, "entity", t.h)?,
            relation: name(&self.relations, "relation", t.r)?,
            tail: name(&self.entities, "entity", t.t)?,
        })
    }

    pub fn encode_all(&self, triples: &[RawTriple]) -> Result<Vec<Triple>> {
        triples.iter().map(|t| self.encode(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Valid => "valid.txt",
            Split::Test => "test.txt",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split `{s}` (expected train, valid or test)"))),
        }
    }
}

/// Encoded train/valid/test splits with their vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub vocab: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

impl Dataset {
    pub fn from_raw(train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple]) -> Self {
        let vocab = Vocab::build(&[train, valid, test]);
        let enc = |s: &[RawTriple]| vocab.encode_all(s).expect("vocabulary covers every split");
        Dataset {
            train: enc(train),
            valid: enc(valid),
            test: enc(test),
            vocab,
        }
    }

    /// Loads a dataset directory. Missing `valid.txt` / `test.txt` are treated as empty.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let train = load_tsv(dir.join(Split::Train.file_name()))?;
        let optional = |s: Split| -> Result<Vec<RawTriple>> {
            let p = dir.join(s.file_name());
            if p.exists() {
                load_tsv(p)
            } else {
                Ok(Vec::new())
            }
        };
        let valid = optional(Split::Valid)?;
        let test = optional(Split::Test)?;
        let mut vocab = Vocab::build(&[&train, &valid, &test]);
        let ent_dict = dir.join("entities.dict");
        if ent_dict.exists() {
            vocab.entities = Names::load_dict(ent_dict)?;
        }
        let rel_dict = dir.join("relations.dict");
        if rel_dict.exists() {
            vocab.relations = Names::load_dict(rel_dict)?;
        }
        let enc = |s: &[RawTriple], split: Split| {
            vocab.encode_all(s).map_err(|e| Error::Parse {
                path: dir.join(split.file_name()).display().to_string(),
                line: 0,
                msg: e.to_string(),
            })
        };
        Ok(Dataset {
            train: enc(&train, Split::Train)?,
            valid: enc(&valid, Split::Valid)?,
            test: enc(&test, Split::Test)?,
            vocab,
        })
    }

    /// Writes the splits and both dictionaries to `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for s in [Split::Train, Split::Valid, Split::Test] {
            let raw = self
                .split(s)
                .iter()
                .map(|t| self.vocab.decode(t))
                .collect::<Result<Vec<_>>>()?;
            write_tsv(dir.join(s.file_name()), &raw)?;
        }
        self.write_dicts(dir)
    }

    pub fn write_dicts(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (file, names) in [("entities.dict", &self.vocab.entities), ("relations.dict", &self.vocab.relations)] {
            let p = dir.join(file);
            fs::write(&p, names.to_dict()).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    pub fn split(&self, s: Split) -> &[Triple] {
        match s {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.relations.len()
    }

    pub fn filter_index(&self) -> FilterIndex {
        FilterIndex::build(&[&self.train, &self.valid, &self.test])
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            entities: self.num_entities(),
            relations: self.num_relations(),
            train: self.train.len(),
            valid: self.valid.len(),
            test: self.test.len(),
        }
    }
}

/// Known-true tails per `(h, r)` and heads per `(r, t)` across all splits.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    tails: HashMap<(usize, usize), HashSet<usize>>,
    heads: HashMap<(usize, usize), HashSet<usize>>,
}

impl FilterIndex {
    pub fn build(splits: &[&[Triple]]) -> Self {
        let mut idx = FilterIndex::default();
        for s in splits {
            for &t in s.iter() {
                idx.insert(t);
            }
        }
        idx
    }

    pub fn insert(&mut self, t: Triple) {
        self.tails.entry((t.h, t.r)).or_default().insert(t.t);
        self.heads.entry((t.r, t.t)).or_default().insert(t.h);
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.tails.get(&(t.h, t.r)).is_some_and(|s| s.contains(&t.t))
    }

    pub fn true_tails(&self, h: usize, r: usize) -> Option<&HashSet<usize>> {
        self.tails.get(&(h, r))
    }

    pub fn true_heads(&self, r: usize, t: usize) -> Option<&HashSet<usize>> {
        self.heads.get(&(r, t))
    }

    /// Number of distinct triples.
    pub fn len(&self) -> usize {
        self.tails.values().map(HashSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tails.is_empty()
    }
}

/// Entity, relation and per-split triple counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "entities={} relations={} train={} valid={} test={}",
            self.entities, self.relations, self.train, self.valid, self.test
        )
    }
}

/// Counts for split lists that are not encoded yet: entities and relations are
/// the distinct names across all splits.
pub fn dataset_stats(train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple]) -> DatasetStats {
    let vocab = Vocab::build(&[train, valid, test]);
    DatasetStats {
        entities: vocab.entities.len(),
        relations: vocab.relations.len(),
        train: train.len(),
        valid: valid.len(),
        test: test.len(),
    }
}

/// Published statistics of the public benchmarks, for checking a local copy.
pub const BENCHMARK_STATS: [(&str, DatasetStats); 3] = [
    (
        "WN18RR",
        DatasetStats {
            entities: 40_943,
            relations: 11,
            train: 86_835,
            valid: 3_034,
            test: 3_134,
        },
    ),
    (
        "FB15k-237",
        DatasetStats {
            entities: 14_541,
            relations: 237,
            train: 272_115,
            valid: 17_535,
            test: 20_466,
        },
    ),
    (
        "YAGO3-10",
        DatasetStats {
            entities: 123_182,
            relations: 37,
            train: 1_079_040,
            valid: 5_000,
            test: 5_000,
        },
    ),
];

pub fn benchmark_stats(name: &str) -> Option<DatasetStats> {
    BENCHMARK_STATS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, s)| *s)
}

//! WordNet 3.0 database (`data.*`) parsing.
//!
//! Each non-header line of a data file describes one synset:
//!
//! ```text
//! offset lex_filenum ss_type w_cnt word lex_id [word lex_id ...] p_cnt [ptr ...] [frames] | gloss
//! ```
//!
//! `w_cnt` and `lex_id` are hexadecimal, `p_cnt` is decimal and every pointer
//! is `symbol offset pos source/target`. A `source/target` of `0000` marks a
//! synset-level pointer; anything else is a lexical pointer between lemmas,
//! which is lifted to the synsets containing them.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pointer symbol used for antonymy in every part of speech.
pub const ANTONYM: &str = "!";

/// Part of speech. Adjective satellites are folded into [`Pos::Adj`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl Pos {
    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv];

    pub fn as_char(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adj => 'a',
            Pos::Adv => 'r',
        }
    }

    /// Accepts `n`, `v`, `a`, `s` (satellite) and `r`.
    pub fn from_char(c: char) -> Option<Pos> {
        match c {
            'n' => Some(Pos::Noun),
            'v' => Some(Pos::Verb),
            'a' | 's' => Some(Pos::Adj),
            'r' => Some(Pos::Adv),
            _ => None,
        }
    }

    pub fn data_file(self) -> &'static str {
        match self {
            Pos::Noun => "data.noun",
            Pos::Verb => "data.verb",
            Pos::Adj => "data.adj",
            Pos::Adv => "data.adv",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A synset identifier: part of speech plus the byte offset of its line in
/// the corresponding data file. Rendered as `pos#offset`, e.g. `n#02355227`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SynsetId {
    pub pos: Pos,
    pub offset: u32,
}

impl SynsetId {
    pub fn new(pos: Pos, offset: u32) -> Self {
        SynsetId { pos, offset }
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{:08}", self.pos, self.offset)
    }
}

impl FromStr for SynsetId {
    type Err = Error;

    /// Parses `n#02355227` or `02355227-n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed synset id {s:?}"));
        let (pos, offset) = if let Some((p, o)) = s.split_once('#') {
            (p, o)
        } else if let Some((o, p)) = s.rsplit_once('-') {
            (p, o)
        } else {
            return Err(bad());
        };
        let mut chars = pos.chars();
        let pos = match (chars.next(), chars.next()) {
            (Some(c), None) => Pos::from_char(c).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        if offset.is_empty() || !offset.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let offset = offset.parse().map_err(|_| bad())?;
        Ok(SynsetId { pos, offset })
    }
}

impl From<SynsetId> for String {
    fn from(id: SynsetId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for SynsetId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// One pointer out of a synset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub symbol: String,
    pub target: SynsetId,
    /// True for lemma-level pointers (`source/target` other than `0000`).
    pub lexical: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synset {
    pub id: SynsetId,
    /// Lemmas in file order, multiword lemmas joined with `_`.
    pub lemmas: Vec<String>,
    pub relations: Vec<Relation>,
    pub antonyms: BTreeSet<SynsetId>,
    #[serde(default)]
    pub satellite: bool,
    #[serde(default)]
    pub gloss: String,
}

impl Synset {
    /// Builds a synset with the given lemmas and no relations; duplicates are
    /// dropped keeping the first occurrence.
    pub fn new<S: Into<String>>(id: SynsetId, lemmas: impl IntoIterator<Item = S>) -> Self {
        let mut synset = Synset {
            id,
            lemmas: Vec::new(),
            relations: Vec::new(),
            antonyms: BTreeSet::new(),
            satellite: false,
            gloss: String::new(),
        };
        for lemma in lemmas {
            synset.push_lemma(lemma.into());
        }
        synset
    }

    pub fn with_relation(mut self, symbol: &str, target: SynsetId) -> Self {
        self.push_relation(symbol, target, false);
        self
    }

    fn push_lemma(&mut self, lemma: String) {
        if !self.lemmas.contains(&lemma) {
            self.lemmas.push(lemma);
        }
    }

    /// Returns false (and records nothing) for self-loops.
    fn push_relation(&mut self, symbol: &str, target: SynsetId, lexical: bool) -> bool {
        if target == self.id {
            return false;
        }
        if symbol == ANTONYM {
            self.antonyms.insert(target);
        }
        self.relations.push(Relation {
            symbol: symbol.to_string(),
            target,
            lexical,
        });
        true
    }
}

/// Counters gathered while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub synsets: usize,
    pub pointers: usize,
    /// Pointers whose target is their own synset (lemma-level pointers between
    /// synonyms). They never become relations.
    pub self_loops: usize,
}

/// The loaded sense inventory: synsets in `(pos, offset)` order plus lemma
/// indexes. Position in `synsets` is the dense node index used by the graph.
#[derive(Debug, Clone)]
pub struct WordNet {
    synsets: Vec<Synset>,
    index: HashMap<SynsetId, usize>,
    by_lemma: HashMap<String, Vec<usize>>,
    by_lower: HashMap<String, Vec<usize>>,
}

impl WordNet {
    /// Builds the inventory from already-resolved synsets, checking that ids
    /// are unique and every pointer target exists.
    pub fn from_synsets(mut synsets: Vec<Synset>) -> Result<Self> {
        synsets.sort_by_key(|s| s.id);
        let mut index = HashMap::with_capacity(synsets.len());
        for (i, s) in synsets.iter().enumerate() {
            if index.insert(s.id, i).is_some() {
                return Err(Error::Integrity(format!("duplicate synset id {}", s.id)));
            }
            if s.lemmas.is_empty() {
                return Err(Error::Integrity(format!("synset {} has no lemmas", s.id)));
            }
        }
        for s in &synsets {
            for r in &s.relations {
                if !index.contains_key(&r.target) {
                    return Err(Error::Integrity(format!(
                        "pointer {} from {} targets missing synset {}",
                        r.symbol, s.id, r.target
                    )));
                }
            }
        }
        let mut by_lemma: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_lower: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, s) in synsets.iter().enumerate() {
            for lemma in &s.lemmas {
                by_lemma.entry(lemma.clone()).or_default().push(i);
                let lower = by_lower.entry(lemma.to_lowercase()).or_default();
                if lower.last() != Some(&i) {
                    lower.push(i);
                }
            }
        }
        Ok(WordNet {
            synsets,
            index,
            by_lemma,
            by_lower,
        })
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn synsets(&self) -> &[Synset] {
        &self.synsets
    }

    pub fn index_of(&self, id: SynsetId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn get(&self, id: SynsetId) -> Result<&Synset> {
        self.index_of(id)
            .map(|i| &self.synsets[i])
            .ok_or_else(|| Error::UnknownSynset(id.to_string()))
    }

    /// The mapping function: the lemmas a synset contains, in file order.
    pub fn lemmas_of(&self, id: SynsetId) -> Result<&[String]> {
        self.get(id).map(|s| s.lemmas.as_slice())
    }

    /// True iff an antonymy pointer connects the two synsets in either
    /// direction.
    pub fn antonym_linked(&self, a: SynsetId, b: SynsetId) -> Result<bool> {
        let sa = self.get(a)?;
        let sb = self.get(b)?;
        if a == b {
            return Ok(false);
        }
        Ok(sa.antonyms.contains(&b) || sb.antonyms.contains(&a))
    }

    /// Synsets containing `word` exactly; with `case_fallback`, a word with no
    /// exact match is compared case-insensitively.
    pub fn synsets_of_word(&self, word: &str, case_fallback: bool) -> Vec<SynsetId> {
        let hits = match self.by_lemma.get(word) {
            Some(hits) => Some(hits),
            None if case_fallback => self.by_lower.get(&word.to_lowercase()),
            None => None,
        };
        hits.map(|h| h.iter().map(|&i| self.synsets[i].id).collect())
            .unwrap_or_default()
    }

    /// Total number of (lemma, synset) word senses.
    pub fn sense_count(&self) -> usize {
        self.synsets.iter().map(|s| s.lemmas.len()).sum()
    }
}

/// Parses the four WordNet data files in `dir`.
pub fn parse_wordnet(dir: impl AsRef<Path>) -> Result<(WordNet, ParseStats)> {
    let dir = dir.as_ref();
    for pos in Pos::ALL {
        let path = dir.join(pos.data_file());
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
    }
    let parsed: Vec<(Vec<Synset>, ParseStats)> = Pos::ALL
        .par_iter()
        .map(|&pos| {
            let path = dir.join(pos.data_file());
            let bytes = fs::read(&path)?;
            parse_data_file(&bytes, pos, &path.display().to_string())
        })
        .collect::<Result<_>>()?;

    let mut stats = ParseStats::default();
    let mut synsets = Vec::new();
    for (mut s, st) in parsed {
        stats.synsets += st.synsets;
        stats.pointers += st.pointers;
        stats.self_loops += st.self_loops;
        synsets.append(&mut s);
    }
    Ok((WordNet::from_synsets(synsets)?, stats))
}

/// Parses one data file's contents. `label` names the file in errors.
pub fn parse_data_file(bytes: &[u8], pos: Pos, label: &str) -> Result<(Vec<Synset>, ParseStats)> {
    let mut synsets = Vec::new();
    let mut stats = ParseStats::default();
    let mut start = 0usize;
    while start < bytes.len() {
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |p| start + p);
        let line = &bytes[start..end];
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if !line.starts_with(b"  ") && !line.iter().all(u8::is_ascii_whitespace) {
            let line = std::str::from_utf8(line)
                .map_err(|_| Error::parse(label, start as u64, "line is not valid UTF-8"))?;
            let (synset, pointers, self_loops) = parse_line(line, pos, start as u64, label)?;
            stats.synsets += 1;
            stats.pointers += pointers;
            stats.self_loops += self_loops;
            synsets.push(synset);
        }
        start = end + 1;
    }
    Ok((synsets, stats))
}

fn strip_marker(lemma: &str) -> &str {
    for marker in ["(a)", "(p)", "(ip)"] {
        if let Some(stripped) = lemma.strip_suffix(marker) {
            return stripped;
        }
    }
    lemma
}

fn parse_line(line: &str, pos: Pos, offset: u64, label: &str) -> Result<(Synset, usize, usize)> {
    let err = |msg: String| Error::parse(label, offset, msg);
    let (body, gloss) = match line.find('|') {
        Some(i) => (&line[..i], line[i + 1..].trim()),
        None => (line, ""),
    };
    let mut tokens = body.split_ascii_whitespace();
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| err(format!("line ends before {what}")))
    };

    let offset_field = next("synset offset")?;
    let parsed_offset: u32 = offset_field
        .parse()
        .map_err(|_| err(format!("bad synset offset {offset_field:?}")))?;
    if u64::from(parsed_offset) != offset {
        return Err(err(format!(
            "synset offset {offset_field} does not match line position {offset}"
        )));
    }
    let lex_filenum = next("lex_filenum")?;
    if lex_filenum.parse::<u32>().is_err() {
        return Err(err(format!("bad lex_filenum {lex_filenum:?}")));
    }
    let ss_type = next("ss_type")?;
    let satellite = ss_type == "s";
    let ss_pos = ss_type
        .chars()
        .next()
        .filter(|_| ss_type.len() == 1)
        .and_then(Pos::from_char)
        .ok_or_else(|| err(format!("bad ss_type {ss_type:?}")))?;
    if ss_pos != pos {
        return Err(err(format!(
            "ss_type {ss_type} does not belong in this file"
        )));
    }

    let id = SynsetId::new(pos, parsed_offset);
    let mut synset = Synset::new(id, std::iter::empty::<String>());
    synset.satellite = satellite;
    synset.gloss = gloss.to_string();

    let w_cnt = next("w_cnt")?;
    let w_cnt =
        usize::from_str_radix(w_cnt, 16).map_err(|_| err(format!("bad w_cnt {w_cnt:?}")))?;
    if w_cnt == 0 {
        return Err(err("synset has no words".into()));
    }
    for _ in 0..w_cnt {
        let word = next("word")?;
        let lex_id = next("lex_id")?;
        if u32::from_str_radix(lex_id, 16).is_err() {
            return Err(err(format!("bad lex_id {lex_id:?}")));
        }
        synset.push_lemma(strip_marker(word).to_string());
    }

    let p_cnt = next("p_cnt")?;
    let p_cnt: usize = p_cnt
        .parse()
        .map_err(|_| err(format!("bad p_cnt {p_cnt:?}")))?;
    let mut self_loops = 0;
    for _ in 0..p_cnt {
        let symbol = next("pointer symbol")?;
        let target_offset = next("pointer offset")?;
        let target_pos = next("pointer pos")?;
        let source_target = next("pointer source/target")?;
        let target_offset: u32 = target_offset
            .parse()
            .map_err(|_| err(format!("bad pointer offset {target_offset:?}")))?;
        let target_pos = target_pos
            .chars()
            .next()
            .filter(|_| target_pos.len() == 1)
            .and_then(Pos::from_char)
            .ok_or_else(|| err(format!("bad pointer pos {target_pos:?}")))?;
        if source_target.len() != 4 || u32::from_str_radix(source_target, 16).is_err() {
            return Err(err(format!("bad pointer source/target {source_target:?}")));
        }
        let target = SynsetId::new(target_pos, target_offset);
        if !synset.push_relation(symbol, target, source_target != "0000") {
            self_loops += 1;
        }
    }
    Ok((synset, p_cnt, self_loops))
}

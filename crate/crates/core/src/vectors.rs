//! Pre-trained word vectors: word2vec binary/text loading, lookup and
//! cosine nearest-neighbor search.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    Binary,
    Text,
}

impl VectorFormat {
    /// `.bin` files are binary, everything else text.
    pub fn guess(path: &Path) -> VectorFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => VectorFormat::Binary,
            _ => VectorFormat::Text,
        }
    }
}

impl FromStr for VectorFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" | "bin" => Ok(VectorFormat::Binary),
            "text" | "txt" => Ok(VectorFormat::Text),
            _ => Err(Error::InvalidParameter(format!(
                "unknown vector format {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookupPolicy {
    /// Replaces `_` and spaces in multiword lemmas.
    pub multiword_joiner: char,
    /// Try the lowercased form when the exact string is absent.
    pub case_fallback: bool,
}

impl Default for LookupPolicy {
    fn default() -> Self {
        LookupPolicy {
            multiword_joiner: '_',
            case_fallback: true,
        }
    }
}

impl LookupPolicy {
    /// Candidate keys for `word`, most preferred first.
    pub fn candidates(&self, word: &str) -> Vec<String> {
        let joined: String = word
            .chars()
            .map(|c| {
                if c == '_' || c == ' ' {
                    self.multiword_joiner
                } else {
                    c
                }
            })
            .collect();
        let mut out = vec![joined];
        if self.case_fallback {
            let lower = out[0].to_lowercase();
            if lower != out[0] {
                out.push(lower);
            }
        }
        out
    }
}

/// Word vectors of a fixed dimension, stored contiguously as `f32`.
#[derive(Debug, Clone)]
pub struct VectorStore {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    norms: Vec<f32>,
    duplicates: usize,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        VectorStore {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            norms: Vec::new(),
            duplicates: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Entries skipped because their word was already present.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// Adds a vector. A repeated word keeps its first vector and returns false.
    pub fn push(&mut self, word: impl Into<String>, vector: &[f32]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "vector has non-finite components".into(),
            ));
        }
        let word = word.into();
        if self.index.contains_key(&word) {
            self.duplicates += 1;
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        self.norms.push(norm_f32(vector) as f32);
        Ok(true)
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Exact-match lookup.
    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index_of(word).map(|i| self.vector(i))
    }

    /// Lookup following `policy`: exact match first, then fallbacks.
    pub fn lookup(&self, word: &str, policy: &LookupPolicy) -> Option<&[f32]> {
        if let Some(v) = self.get(word) {
            return Some(v);
        }
        policy.candidates(word).iter().find_map(|c| self.get(c))
    }

    pub fn load(path: impl AsRef<Path>, format: VectorFormat) -> Result<Self> {
        let path = path.as_ref();
        let label = path.display().to_string();
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => e.into(),
        })?;
        let reader = BufReader::with_capacity(1 << 20, file);
        match format {
            VectorFormat::Binary => read_binary(reader, &label),
            VectorFormat::Text => read_text(reader, &label),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, format: VectorFormat) -> Result<()> {
        let out = BufWriter::new(File::create(path)?);
        match format {
            VectorFormat::Binary => self.write_binary(out),
            VectorFormat::Text => self.write_text(out),
        }
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for i in 0..self.len() {
            out.write_all(self.words[i].as_bytes())?;
            out.write_all(b" ")?;
            for x in self.vector(i) {
                out.write_all(&x.to_le_bytes())?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Text output; every `f32` is written in its shortest exact form.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for i in 0..self.len() {
            out.write_all(self.words[i].as_bytes())?;
            for x in self.vector(i) {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads the word2vec binary format: an ASCII `count dim` header line, then
/// per entry the word, one space, and `dim` little-endian `f32`s.
pub fn read_binary<R: BufRead>(mut input: R, label: &str) -> Result<VectorStore> {
    let mut pos = 0u64;
    let mut header = Vec::new();
    let n = input.read_until(b'\n', &mut header)?;
    pos += n as u64;
    let header = String::from_utf8_lossy(&header);
    let (count, dim) =
        parse_header(&header).ok_or_else(|| Error::parse(label, 0, "malformed header"))?;
    let mut store = VectorStore::new(dim);
    let mut word = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut vector = vec![0f32; dim];
    for entry in 0..count {
        // Separators left over from the previous entry.
        loop {
            let buf = input.fill_buf()?;
            match buf.first() {
                Some(b'\n') | Some(b'\r') => {
                    input.consume(1);
                    pos += 1;
                }
                Some(_) => break,
                None => {
                    return Err(Error::parse(
                        label,
                        pos,
                        format!("file ends after {entry} of {count} entries"),
                    ))
                }
            }
        }
        let entry_start = pos;
        word.clear();
        let n = input.read_until(b' ', &mut word)?;
        pos += n as u64;
        if word.last() != Some(&b' ') {
            return Err(Error::parse(label, pos, "file ends inside a word"));
        }
        word.pop();
        let mut filled = 0;
        while filled < raw.len() {
            let n = input.read(&mut raw[filled..])?;
            if n == 0 {
                return Err(Error::parse(
                    label,
                    pos + filled as u64,
                    format!("file ends inside vector {entry}"),
                ));
            }
            filled += n;
        }
        for (v, chunk) in vector.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(label, pos, "non-finite vector component"));
        }
        pos += raw.len() as u64;
        let text = String::from_utf8_lossy(&word);
        if text.is_empty() {
            return Err(Error::parse(label, entry_start, "empty word"));
        }
        store.push(text.into_owned(), &vector)?;
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if let Some(i) = rest.iter().position(|b| !b.is_ascii_whitespace()) {
        return Err(Error::parse(
            label,
            pos + i as u64,
            format!("data after the {count} entries announced in the header"),
        ));
    }
    Ok(store)
}

/// Reads the word2vec text format. A first line holding exactly two integers
/// is the `count dim` header; without it the dimension is taken from the
/// first entry.
pub fn read_text<R: BufRead>(input: R, label: &str) -> Result<VectorStore> {
    let mut store: Option<VectorStore> = None;
    let mut expected: Option<usize> = None;
    let mut pos = 0u64;
    let mut entries = 0usize;
    let mut vector = Vec::new();
    for (lineno, line) in input.split(b'\n').enumerate() {
        let raw = line?;
        let start = pos;
        pos += raw.len() as u64 + 1;
        let line = String::from_utf8_lossy(&raw);
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 {
            if let Some((count, dim)) = parse_header(line) {
                expected = Some(count);
                store = Some(VectorStore::new(dim));
                continue;
            }
        }
        let mut tokens = line.split_ascii_whitespace();
        let word = tokens.next().expect("non-empty line");
        vector.clear();
        for t in tokens {
            let x: f32 = t
                .parse()
                .map_err(|_| Error::parse(label, start, format!("bad number {t:?}")))?;
            if !x.is_finite() {
                return Err(Error::parse(label, start, "non-finite vector component"));
            }
            vector.push(x);
        }
        let store = store.get_or_insert_with(|| VectorStore::new(vector.len()));
        if vector.len() != store.dim() || vector.is_empty() {
            return Err(Error::parse(
                label,
                start,
                format!(
                    "expected {} components, found {}",
                    store.dim(),
                    vector.len()
                ),
            ));
        }
        store.push(word, &vector)?;
        entries += 1;
    }
    if let Some(count) = expected {
        if entries != count {
            return Err(Error::parse(
                label,
                pos.saturating_sub(1),
                format!("header announces {count} entries, found {entries}"),
            ));
        }
    }
    store.ok_or_else(|| Error::parse(label, 0, "no vectors"))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_ascii_whitespace();
    let count = it.next()?.parse().ok()?;
    let dim: usize = it.next()?.parse().ok()?;
    if it.next().is_some() || dim == 0 {
        return None;
    }
    Some((count, dim))
}

fn norm_f32(v: &[f32]) -> f64 {
    v.iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// Cosine similarity clamped to `[-1, 1]`; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        (dot / denom).clamp(-1.0, 1.0)
    }
}

/// Top `top_n` entries across `stores` by cosine to `query`, skipping keys in
/// `exclude`. Ties break by key.
pub fn nearest(
    stores: &[&VectorStore],
    query: &[f64],
    top_n: usize,
    exclude: &HashSet<String>,
) -> Result<Vec<(String, f64)>> {
    let qn = norm(query);
    if qn == 0.0 {
        return Err(Error::ZeroVector("nearest-neighbor query".into()));
    }
    let mut scored: Vec<(&str, f64)> = Vec::new();
    for store in stores {
        if store.dim() != query.len() {
            return Err(Error::DimensionMismatch {
                expected: store.dim(),
                found: query.len(),
            });
        }
        let part: Vec<(&str, f64)> = (0..store.len())
            .into_par_iter()
            .filter(|&i| !exclude.contains(store.word(i)))
            .map(|i| {
                let n = f64::from(store.norms[i]);
                let cos = if n == 0.0 {
                    0.0
                } else {
                    let dot: f64 = store
                        .vector(i)
                        .iter()
                        .zip(query)
                        .map(|(&x, y)| f64::from(x) * y)
                        .sum();
                    (dot / (n * qn)).clamp(-1.0, 1.0)
                };
                (store.word(i), cos)
            })
            .collect();
        scored.extend(part);
    }
    let cmp = |a: &(&str, f64), b: &(&str, f64)| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0));
    if top_n < scored.len() {
        scored.select_nth_unstable_by(top_n, cmp);
        scored.truncate(top_n);
    }
    scored.sort_unstable_by(cmp);
    Ok(scored
        .into_iter()
        .map(|(k, c)| (k.to_string(), c))
        .collect())
}

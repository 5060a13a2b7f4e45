//! Sense-biasing word lists.
//!
//! A synset's list starts with its own lemmas and continues with the lemmas of
//! every other synset, visited in descending PPR score (ties broken by node
//! index), keeping only the first occurrence of each word.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::graph::SemanticGraph;
use crate::ppr::{PprConfig, PprVector, Transition};
use crate::wordnet::{SynsetId, WordNet};
use crate::{Error, Result};

/// Default list length.
pub const DEFAULT_K: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasEntry {
    pub word: String,
    /// 0-based position in the list.
    pub rank: usize,
    /// Synset the word was taken from. Unknown for lists read back from text.
    pub origin: Option<SynsetId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasList {
    pub target: SynsetId,
    pub entries: Vec<BiasEntry>,
}

impl BiasList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    /// The first `k` entries.
    pub fn truncated(&self, k: usize) -> BiasList {
        BiasList {
            target: self.target,
            entries: self.entries.iter().take(k).cloned().collect(),
        }
    }

    /// A list made only of the target's own lemmas.
    pub fn from_lemmas(target: SynsetId, lemmas: &[String], k: usize) -> BiasList {
        let mut builder = Builder::new(target, k);
        for lemma in lemmas {
            builder.push(lemma, target);
        }
        builder.finish()
    }
}

struct Builder<'w> {
    list: BiasList,
    seen: HashSet<&'w str>,
    k: usize,
}

impl<'w> Builder<'w> {
    fn new(target: SynsetId, k: usize) -> Self {
        Builder {
            list: BiasList {
                target,
                entries: Vec::new(),
            },
            seen: HashSet::new(),
            k,
        }
    }

    fn full(&self) -> bool {
        self.list.entries.len() >= self.k
    }

    fn push(&mut self, word: &'w str, origin: SynsetId) {
        if !self.full() && self.seen.insert(word) {
            let rank = self.list.entries.len();
            self.list.entries.push(BiasEntry {
                word: word.to_string(),
                rank,
                origin: Some(origin),
            });
        }
    }

    fn finish(self) -> BiasList {
        self.list
    }
}

/// Descending score, then ascending node index. Equal scores, including
/// +0.0 and -0.0, fall through to the index.
fn by_score(scores: &[f64]) -> impl Fn(&u32, &u32) -> Ordering + '_ {
    move |&a, &b| {
        scores[b as usize]
            .partial_cmp(&scores[a as usize])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

/// Builds the list for `ppr.target`, truncated to `k` entries. Use
/// `usize::MAX` for the untruncated list.
pub fn extract_bias_list(
    wordnet: &WordNet,
    graph: &SemanticGraph,
    ppr: &PprVector,
    k: usize,
) -> Result<BiasList> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if ppr.scores.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "empty PPR vector for {}",
            ppr.target
        )));
    }
    if ppr.scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite PPR score for {}",
            ppr.target
        )));
    }
    if ppr.scores.len() != graph.node_count() || wordnet.len() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            found: ppr.scores.len(),
        });
    }
    let t = graph.require(ppr.target)?;
    let synsets = wordnet.synsets();
    let mut builder = Builder::new(ppr.target, k);
    for lemma in &synsets[t].lemmas {
        builder.push(lemma, ppr.target);
    }

    let mut order: Vec<u32> = (0..graph.node_count() as u32)
        .filter(|&i| i as usize != t)
        .collect();
    let cmp = by_score(&ppr.scores);
    // Sort only as much of the ranking as is needed to fill k slots, growing
    // the sorted prefix when duplicates exhaust it.
    let mut sorted = 0usize;
    let mut window = k.saturating_mul(4).max(64);
    while !builder.full() && sorted < order.len() {
        let end = sorted.saturating_add(window).min(order.len());
        let rest = &mut order[sorted..];
        let want = end - sorted;
        if want < rest.len() {
            rest.select_nth_unstable_by(want, &cmp);
        }
        rest[..want].sort_unstable_by(&cmp);
        for &node in &order[sorted..end] {
            let s = &synsets[node as usize];
            for lemma in &s.lemmas {
                builder.push(lemma, s.id);
            }
            if builder.full() {
                break;
            }
        }
        sorted = end;
        window = window.saturating_mul(4);
    }
    Ok(builder.finish())
}

/// Bias lists for the whole inventory, in node order.
#[derive(Debug, Clone, Default)]
pub struct Materialized {
    pub lists: Vec<BiasList>,
    pub failures: Vec<(SynsetId, String)>,
}

/// Runs PPR and list extraction for every synset on a pool of `threads`
/// workers (0 = rayon default). Isolated synsets end up in `failures`.
pub fn materialize_all(
    wordnet: &WordNet,
    m: &Transition<'_>,
    config: &PprConfig,
    k: usize,
    threads: usize,
) -> Result<Materialized> {
    let targets: Vec<SynsetId> = m.graph().ids().to_vec();
    materialize(wordnet, m, &targets, config, k, threads)
}

/// Like [`materialize_all`] for a chosen set of targets.
pub fn materialize(
    wordnet: &WordNet,
    m: &Transition<'_>,
    targets: &[SynsetId],
    config: &PprConfig,
    k: usize,
    threads: usize,
) -> Result<Materialized> {
    config.validate()?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let graph = m.graph();
    let results = crate::with_threads(threads, || {
        m.map_ppr(targets, config, |_, ppr| {
            ppr.and_then(|p| extract_bias_list(wordnet, graph, &p, k))
        })
    });
    let mut out = Materialized::default();
    for (t, r) in targets.iter().zip(results) {
        match r {
            Ok(list) => out.lists.push(list),
            Err(e) => out.failures.push((*t, e.to_string())),
        }
    }
    Ok(out)
}

/// Writes one line per list, ordered by `(pos, offset)`:
/// `pos offset<TAB>word:rank,word:rank,...`.
pub fn write_bias_lists<'a, W: Write>(
    lists: impl IntoIterator<Item = &'a BiasList>,
    mut out: W,
) -> Result<()> {
    let mut lists: Vec<&BiasList> = lists.into_iter().collect();
    lists.sort_by_key(|l| l.target);
    for list in lists {
        write!(out, "{} {:08}\t", list.target.pos, list.target.offset)?;
        for (i, e) in list.entries.iter().enumerate() {
            if i > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{}:{}", e.word, e.rank)?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads lists written by [`write_bias_lists`]. `label` names the source in
/// errors.
pub fn read_bias_lists<R: BufRead>(input: R, label: &str) -> Result<Vec<BiasList>> {
    let mut lists = Vec::new();
    let mut offset = 0u64;
    for line in input.split(b'\n') {
        let raw = line?;
        let line_start = offset;
        offset += raw.len() as u64 + 1;
        let err = |msg: &str| Error::parse(label, line_start, msg);
        let line = std::str::from_utf8(&raw).map_err(|_| err("line is not valid UTF-8"))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (head, body) = line
            .split_once('\t')
            .ok_or_else(|| err("missing tab separator"))?;
        let (pos, off) = head
            .split_once(' ')
            .ok_or_else(|| err("malformed synset field"))?;
        let target: SynsetId = format!("{pos}#{off}")
            .parse()
            .map_err(|_| err("malformed synset field"))?;
        let mut entries = Vec::new();
        // Words may themselves contain commas, so a piece only closes an entry
        // when it ends in `:<rank>`.
        let mut pending = String::new();
        for piece in body.split(',') {
            if !pending.is_empty() {
                pending.push(',');
            }
            pending.push_str(piece);
            if let Some((word, rank)) = pending.rsplit_once(':') {
                if !rank.is_empty() && rank.bytes().all(|b| b.is_ascii_digit()) && !word.is_empty()
                {
                    let rank: usize = rank.parse().map_err(|_| err("bad rank"))?;
                    if rank != entries.len() {
                        return Err(err("ranks must be consecutive from 0"));
                    }
                    entries.push(BiasEntry {
                        word: word.to_string(),
                        rank,
                        origin: None,
                    });
                    pending.clear();
                }
            }
        }
        if !pending.is_empty() {
            return Err(err("trailing entry without rank"));
        }
        lists.push(BiasList { target, entries });
    }
    Ok(lists)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, RelationFilter};
    use crate::ppr::build_transition;
    use crate::wordnet::{Pos, Synset};

    fn nid(i: u32) -> SynsetId {
        SynsetId::new(Pos::Noun, i)
    }

    fn path3() -> WordNet {
        WordNet::from_synsets(vec![
            Synset::new(nid(1), ["a"]).with_relation("@", nid(2)),
            Synset::new(nid(2), ["b"]).with_relation("@", nid(3)),
            Synset::new(nid(3), ["c"]),
        ])
        .unwrap()
    }

    #[test]
    fn path_list_follows_scores() {
        let wn = path3();
        let g = build_graph(&wn, &RelationFilter::All);
        let m = build_transition(&g).unwrap();
        let ppr = m
            .personalized_pagerank(nid(1), &PprConfig::default())
            .unwrap();
        let list = extract_bias_list(&wn, &g, &ppr, 3).unwrap();
        assert_eq!(list.words().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(list.entries[1].origin, Some(nid(2)));
        assert!(extract_bias_list(&wn, &g, &ppr, 0).is_err());
    }

    #[test]
    fn shared_lemmas_appear_once() {
        let wn = WordNet::from_synsets(vec![
            Synset::new(nid(1), ["bank", "depository"]).with_relation("@", nid(2)),
            Synset::new(nid(2), ["bank", "institution"]).with_relation("@", nid(3)),
            Synset::new(nid(3), ["institution", "establishment"]),
        ])
        .unwrap();
        let g = build_graph(&wn, &RelationFilter::All);
        let m = build_transition(&g).unwrap();
        let ppr = m
            .personalized_pagerank(nid(1), &PprConfig::default())
            .unwrap();
        let list = extract_bias_list(&wn, &g, &ppr, usize::MAX).unwrap();
        assert_eq!(
            list.words().collect::<Vec<_>>(),
            ["bank", "depository", "institution", "establishment"]
        );
        let ranks: Vec<usize> = list.entries.iter().map(|e| e.rank).collect();
        assert_eq!(ranks, [0, 1, 2, 3]);
    }

    #[test]
    fn small_k_keeps_target_prefix() {
        let wn = WordNet::from_synsets(vec![
            Synset::new(nid(1), ["x", "y", "z"]).with_relation("@", nid(2)),
            Synset::new(nid(2), ["w"]),
        ])
        .unwrap();
        let g = build_graph(&wn, &RelationFilter::All);
        let m = build_transition(&g).unwrap();
        let ppr = m
            .personalized_pagerank(nid(1), &PprConfig::default())
            .unwrap();
        let list = extract_bias_list(&wn, &g, &ppr, 2).unwrap();
        assert_eq!(list.words().collect::<Vec<_>>(), ["x", "y"]);
    }

    #[test]
    fn empty_ppr_is_an_error() {
        let wn = path3();
        let g = build_graph(&wn, &RelationFilter::All);
        let ppr = PprVector {
            target: nid(1),
            scores: Vec::new(),
            iterations: 0,
            converged: false,
            residuals: Vec::new(),
        };
        assert!(extract_bias_list(&wn, &g, &ppr, 5).is_err());
    }

    #[test]
    fn signed_zero_scores_tie_by_index() {
        let wn = WordNet::from_synsets(vec![
            Synset::new(nid(1), ["t"]).with_relation("@", nid(2)),
            Synset::new(nid(2), ["u"]),
            Synset::new(nid(3), ["p"]),
            Synset::new(nid(4), ["q"]),
        ])
        .unwrap();
        let g = build_graph(&wn, &RelationFilter::All);
        let mut ppr = PprVector {
            target: nid(1),
            scores: vec![0.6, 0.4, 0.0, -0.0],
            iterations: 1,
            converged: true,
            residuals: vec![0.0],
        };
        let list = extract_bias_list(&wn, &g, &ppr, usize::MAX).unwrap();
        assert_eq!(list.words().collect::<Vec<_>>(), ["t", "u", "p", "q"]);
        ppr.scores = vec![-0.0, 0.4, -0.0, 0.0];
        let list = extract_bias_list(&wn, &g, &ppr, usize::MAX).unwrap();
        assert_eq!(list.words().collect::<Vec<_>>(), ["t", "u", "p", "q"]);
        ppr.scores[2] = f64::NAN;
        assert!(extract_bias_list(&wn, &g, &ppr, 5).is_err());
    }

    #[test]
    fn text_round_trip() {
        let lists = vec![
            BiasList {
                target: SynsetId::new(Pos::Verb, 42),
                entries: vec![
                    BiasEntry {
                        word: "run".into(),
                        rank: 0,
                        origin: None,
                    },
                    BiasEntry {
                        word: "a,b".into(),
                        rank: 1,
                        origin: None,
                    },
                ],
            },
            BiasList::from_lemmas(nid(7), &["x".to_string()], 25),
        ];
        let mut buf = Vec::new();
        write_bias_lists(&lists, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "n 00000007\tx:0\nv 00000042\trun:0,a,b:1\n");
        let back = read_bias_lists(&buf[..], "mem").unwrap();
        assert_eq!(back[1].words().collect::<Vec<_>>(), ["run", "a,b"]);
        assert_eq!(back[0].target, nid(7));
        assert!(read_bias_lists(&b"n 00000007\tx:1\n"[..], "mem").is_err());
        assert!(read_bias_lists(&b"n 00000007 x:0\n"[..], "mem").is_err());
    }
}

//! Undirected semantic graph over synsets.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::wordnet::{Synset, SynsetId, WordNet};
use crate::{Error, Result};

/// Which pointers become graph edges.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RelationFilter {
    /// Every pointer, lexical pointers lifted to their synsets.
    #[default]
    All,
    /// Only synset-level pointers (`source/target` of `0000`).
    SynsetLevel,
    /// Only the listed pointer symbols.
    Symbols(BTreeSet<String>),
}

impl RelationFilter {
    pub fn keeps(&self, relation: &crate::wordnet::Relation) -> bool {
        match self {
            RelationFilter::All => true,
            RelationFilter::SynsetLevel => !relation.lexical,
            RelationFilter::Symbols(symbols) => symbols.contains(&relation.symbol),
        }
    }
}

impl fmt::Display for RelationFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationFilter::All => f.write_str("all"),
            RelationFilter::SynsetLevel => f.write_str("synset"),
            RelationFilter::Symbols(s) => {
                let v: Vec<&str> = s.iter().map(String::as_str).collect();
                f.write_str(&v.join(","))
            }
        }
    }
}

impl FromStr for RelationFilter {
    type Err = Error;

    /// `all`, `synset`, or a comma-separated list of pointer symbols.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" | "ALL" => Ok(RelationFilter::All),
            "synset" => Ok(RelationFilter::SynsetLevel),
            list => {
                let symbols: BTreeSet<String> = list
                    .split(',')
                    .map(str::trim)
                    .filter(|x| !x.is_empty())
                    .map(String::from)
                    .collect();
                if symbols.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "empty relation list {s:?}"
                    )));
                }
                Ok(RelationFilter::Symbols(symbols))
            }
        }
    }
}

/// Immutable undirected graph in compressed sparse row form. Node `i`
/// corresponds to `ids[i]`; neighbor lists are sorted and duplicate-free.
#[derive(Debug, Clone)]
pub struct SemanticGraph {
    ids: Vec<SynsetId>,
    index: HashMap<SynsetId, u32>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl SemanticGraph {
    /// Builds a graph over `ids` from undirected edges given as index pairs.
    /// Self-loops are dropped and duplicate edges collapse.
    pub fn from_edges(
        ids: Vec<SynsetId>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = ids.len();
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter("graph too large".into()));
        }
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range"
                )));
            }
            if a != b {
                lists[a].push(b as u32);
                lists[b].push(a as u32);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(*id, i as u32).is_some() {
                return Err(Error::Integrity(format!("duplicate node {id}")));
            }
        }
        Ok(SemanticGraph {
            ids,
            index,
            offsets,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn is_isolated(&self, node: usize) -> bool {
        self.degree(node) == 0
    }

    pub fn id_of(&self, node: usize) -> SynsetId {
        self.ids[node]
    }

    pub fn ids(&self) -> &[SynsetId] {
        &self.ids
    }

    pub fn index_of(&self, id: SynsetId) -> Option<usize> {
        self.index.get(&id).map(|&i| i as usize)
    }

    pub fn require(&self, id: SynsetId) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::UnknownSynset(id.to_string()))
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                for &w in self.neighbors(v) {
                    let w = w as usize;
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

/// Builds the semantic graph of `wordnet`. Node order follows the inventory's
/// `(pos, offset)` order; an edge joins two synsets when any retained pointer
/// connects them in either direction.
pub fn build_graph(wordnet: &WordNet, filter: &RelationFilter) -> SemanticGraph {
    let ids: Vec<SynsetId> = wordnet.synsets().iter().map(|s| s.id).collect();
    let edges = wordnet.synsets().iter().enumerate().flat_map(|(i, s)| {
        s.relations
            .iter()
            .filter(|r| filter.keeps(r))
            .filter_map(move |r| wordnet.index_of(r.target).map(|j| (i, j)))
    });
    // ids are unique and every target resolves: WordNet::from_synsets checked both.
    SemanticGraph::from_edges(ids, edges).expect("inventory ids are unique")
}

/// Content hash of the parsed inventory and the relation filter.
pub fn fingerprint(wordnet: &WordNet, filter: &RelationFilter) -> String {
    let mut hasher = Sha256::new();
    for s in wordnet.synsets() {
        hasher.update(s.id.to_string().as_bytes());
        hasher.update(b"\t");
        hasher.update(s.lemmas.join(" ").as_bytes());
        hasher.update(b"\t");
        for r in &s.relations {
            let lexical = if r.lexical { "l" } else { "s" };
            hasher.update(format!("{}>{}{} ", r.symbol, r.target, lexical).as_bytes());
        }
        hasher.update(b"\n");
    }
    hasher.update(format!("relations={filter}").as_bytes());
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

const GRAPH_FORMAT: &str = "sensevec-graph";
const GRAPH_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct GraphFile {
    format: String,
    version: u32,
    fingerprint: String,
    relations: String,
    synsets: Vec<Synset>,
}

/// Inventory, graph and fingerprint as stored by `build-graph`.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    pub wordnet: WordNet,
    pub graph: SemanticGraph,
    pub filter: RelationFilter,
    pub fingerprint: String,
}

impl GraphBundle {
    pub fn new(wordnet: WordNet, filter: RelationFilter) -> Self {
        let graph = build_graph(&wordnet, &filter);
        let fingerprint = fingerprint(&wordnet, &filter);
        GraphBundle {
            wordnet,
            graph,
            filter,
            fingerprint,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = GraphFile {
            format: GRAPH_FORMAT.into(),
            version: GRAPH_VERSION,
            fingerprint: self.fingerprint.clone(),
            relations: self.filter.to_string(),
            synsets: self.wordnet.synsets().to_vec(),
        };
        let mut out = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer(&mut out, &file).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    /// Loads a graph file, rebuilding the adjacency and checking the stored
    /// fingerprint against the content.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let label = path.display().to_string();
        let file = fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => e.into(),
        })?;
        let file: GraphFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(label.clone(), 0, e.to_string()))?;
        if file.format != GRAPH_FORMAT || file.version != GRAPH_VERSION {
            return Err(Error::parse(
                label,
                0,
                format!("unsupported graph file {} v{}", file.format, file.version),
            ));
        }
        let filter: RelationFilter = file.relations.parse()?;
        let bundle = GraphBundle::new(WordNet::from_synsets(file.synsets)?, filter);
        if bundle.fingerprint != file.fingerprint {
            return Err(Error::Integrity(format!(
                "{label}: stored fingerprint {} does not match content {}",
                file.fingerprint, bundle.fingerprint
            )));
        }
        Ok(bundle)
    }
}

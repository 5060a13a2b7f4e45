//! Personalized PageRank by power iteration.
//!
//! The iterate is `p' = (1 - σ) e_t + σ Mᵀ p`, where `M` is the row-stochastic
//! transition matrix with `M[i][j] = 1 / deg(i)` for every edge `{i, j}` and
//! `e_t` is one-hot at the target. Multiplying by the transpose keeps `p` a
//! probability distribution: every node gathers `p[j] / deg(j)` from each of
//! its neighbors `j`. Isolated nodes have no row, cannot be targets, and
//! always score zero.

use rayon::prelude::*;

use crate::graph::SemanticGraph;
use crate::wordnet::SynsetId;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprConfig {
    /// Probability of following an edge instead of teleporting back.
    pub damping: f64,
    pub max_iterations: usize,
    /// Iteration stops once the L1 change between iterates drops below this.
    pub tolerance: f64,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            damping: 0.85,
            max_iterations: 30,
            tolerance: 1e-9,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A PPR distribution for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct PprVector {
    pub target: SynsetId,
    /// Entry `i` is the score of graph node `i`.
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// L1 change between successive iterates, one per iteration.
    pub residuals: Vec<f64>,
}

/// Row-stochastic transition matrix over a semantic graph, stored as the
/// graph's adjacency plus inverse degrees.
#[derive(Debug, Clone)]
pub struct Transition<'g> {
    graph: &'g SemanticGraph,
    inv_degree: Vec<f64>,
}

/// Builds `M` for `graph`. Isolated nodes get an all-zero row.
pub fn build_transition(graph: &SemanticGraph) -> Result<Transition<'_>> {
    if graph.node_count() == 0 {
        return Err(Error::InvalidParameter("graph has no nodes".into()));
    }
    let inv_degree = (0..graph.node_count())
        .map(|i| match graph.degree(i) {
            0 => 0.0,
            d => 1.0 / d as f64,
        })
        .collect();
    Ok(Transition { graph, inv_degree })
}

impl<'g> Transition<'g> {
    pub fn graph(&self) -> &'g SemanticGraph {
        self.graph
    }

    /// Non-zero entries `(j, M[i][j])` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let w = self.inv_degree[i];
        self.graph
            .neighbors(i)
            .iter()
            .map(move |&j| (j as usize, w))
    }

    /// Nodes with no neighbors; their rows are zero.
    pub fn isolated(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.graph.node_count()).filter(|&i| self.graph.is_isolated(i))
    }

    /// Power iteration from a one-hot start at `target`.
    pub fn personalized_pagerank(&self, target: SynsetId, config: &PprConfig) -> Result<PprVector> {
        config.validate()?;
        let graph = self.graph;
        let t = graph.require(target)?;
        if graph.is_isolated(t) {
            return Err(Error::IsolatedTarget(target));
        }
        let n = graph.node_count();
        let mut current = vec![0.0f64; n];
        let mut next = vec![0.0f64; n];
        let mut share = vec![0.0f64; n];
        current[t] = 1.0;

        let mut residuals = Vec::new();
        let mut converged = false;
        for _ in 0..config.max_iterations {
            for ((s, &p), &w) in share.iter_mut().zip(&current).zip(&self.inv_degree) {
                *s = p * w;
            }
            for (i, out) in next.iter_mut().enumerate() {
                // fold from +0.0: an empty `sum` is -0.0, which would sort
                // below other zero scores.
                let gathered = graph
                    .neighbors(i)
                    .iter()
                    .fold(0.0, |acc, &j| acc + share[j as usize]);
                *out = config.damping * gathered;
            }
            next[t] += 1.0 - config.damping;
            let delta: f64 = next.iter().zip(&current).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut current, &mut next);
            residuals.push(delta);
            if delta < config.tolerance {
                converged = true;
                break;
            }
        }
        Ok(PprVector {
            target,
            scores: current,
            iterations: residuals.len(),
            converged,
            residuals,
        })
    }

    /// Applies `f` to the PPR result of every target, in parallel on the
    /// current rayon pool, returning outputs in input order. Each target is
    /// computed sequentially, so results do not depend on the worker count.
    pub fn map_ppr<T, F>(&self, targets: &[SynsetId], config: &PprConfig, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(SynsetId, Result<PprVector>) -> T + Sync,
    {
        targets
            .par_iter()
            .map(|&t| f(t, self.personalized_pagerank(t, config)))
            .collect()
    }
}

/// Free-function form of [`Transition::personalized_pagerank`].
pub fn personalized_pagerank(
    m: &Transition<'_>,
    target: SynsetId,
    config: &PprConfig,
) -> Result<PprVector> {
    m.personalized_pagerank(target, config)
}

/// Streams PPR vectors for `targets` in input order. Targets are computed in
/// parallel chunks on a pool of `threads` workers (0 = rayon default);
/// per-target failures are yielded and also recorded in [`PprStream::failures`].
pub fn batch_ppr<'a>(
    m: &'a Transition<'a>,
    targets: &'a [SynsetId],
    config: PprConfig,
    threads: usize,
) -> Result<PprStream<'a>> {
    config.validate()?;
    let pool = if threads > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?,
        )
    } else {
        None
    };
    Ok(PprStream {
        transition: m,
        targets,
        config,
        pool,
        chunk: 64,
        position: 0,
        buffer: Vec::new().into_iter(),
        failures: Vec::new(),
    })
}

pub struct PprStream<'a> {
    transition: &'a Transition<'a>,
    targets: &'a [SynsetId],
    config: PprConfig,
    pool: Option<rayon::ThreadPool>,
    chunk: usize,
    position: usize,
    buffer: std::vec::IntoIter<Result<PprVector>>,
    failures: Vec<(SynsetId, String)>,
}

impl PprStream<'_> {
    /// Targets that failed so far, with the error message.
    pub fn failures(&self) -> &[(SynsetId, String)] {
        &self.failures
    }

    fn fill(&mut self) {
        let end = (self.position + self.chunk).min(self.targets.len());
        let slice = &self.targets[self.position..end];
        let m = self.transition;
        let config = self.config;
        let run = || m.map_ppr(slice, &config, |_, r| r);
        let results = match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        };
        for (t, r) in slice.iter().zip(&results) {
            if let Err(e) = r {
                self.failures.push((*t, e.to_string()));
            }
        }
        self.position = end;
        self.buffer = results.into_iter();
    }
}

impl Iterator for PprStream<'_> {
    type Item = Result<PprVector>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(item) = self.buffer.next() {
            return Some(item);
        }
        if self.position >= self.targets.len() {
            return None;
        }
        self.fill();
        self.buffer.next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordnet::Pos;
    use approx::assert_abs_diff_eq;

    fn ids(n: usize) -> Vec<SynsetId> {
        (0..n as u32).map(|i| SynsetId::new(Pos::Noun, i)).collect()
    }

    fn path3() -> SemanticGraph {
        SemanticGraph::from_edges(ids(3), [(0, 1), (1, 2)]).unwrap()
    }

    fn tight() -> PprConfig {
        PprConfig {
            max_iterations: 2000,
            tolerance: 1e-15,
            ..PprConfig::default()
        }
    }

    /// Dense solve of (I - σ Mᵀ) p = (1 - σ) e_t.
    fn dense_oracle(g: &SemanticGraph, t: usize, damping: f64) -> Vec<f64> {
        let n = g.node_count();
        let mut a = nalgebra::DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for &j in g.neighbors(i) {
                // Mᵀ[j][i] = M[i][j] = 1/deg(i)
                a[(j as usize, i)] -= damping / g.degree(i) as f64;
            }
        }
        let mut b = nalgebra::DVector::<f64>::zeros(n);
        b[t] = 1.0 - damping;
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn transition_rows() {
        let g = path3();
        let m = build_transition(&g).unwrap();
        let row: Vec<_> = m.row(1).collect();
        assert_eq!(row, vec![(0, 0.5), (2, 0.5)]);
        let tri = SemanticGraph::from_edges(ids(3), [(0, 1), (1, 2), (2, 0)]).unwrap();
        let m = build_transition(&tri).unwrap();
        for i in 0..3 {
            assert!(m.row(i).all(|(j, w)| j != i && w == 0.5));
            assert_eq!(m.row(i).count(), 2);
        }
        let empty = SemanticGraph::from_edges(Vec::new(), []).unwrap();
        assert!(build_transition(&empty).is_err());
    }

    #[test]
    fn path_matches_dense_solve() {
        let g = path3();
        let m = build_transition(&g).unwrap();
        let v = m.personalized_pagerank(g.id_of(0), &tight()).unwrap();
        let oracle = dense_oracle(&g, 0, 0.85);
        for (a, b) in v.scores.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        assert!(v.scores[1] > v.scores[2]);
        assert_abs_diff_eq!(v.scores.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tiny_damping_is_one_hot() {
        let g = path3();
        let m = build_transition(&g).unwrap();
        let cfg = PprConfig {
            damping: 1e-9,
            ..PprConfig::default()
        };
        let v = m.personalized_pagerank(g.id_of(2), &cfg).unwrap();
        assert_abs_diff_eq!(v.scores[2], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(v.scores[0], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn star_leaves_are_equal() {
        let g = SemanticGraph::from_edges(ids(5), (1..5).map(|i| (0, i))).unwrap();
        let m = build_transition(&g).unwrap();
        let v = m
            .personalized_pagerank(g.id_of(0), &PprConfig::default())
            .unwrap();
        for i in 2..5 {
            assert_eq!(v.scores[i], v.scores[1]);
        }
    }

    #[test]
    fn isolated_and_unknown_targets() {
        let g = SemanticGraph::from_edges(ids(3), [(0, 1)]).unwrap();
        let m = build_transition(&g).unwrap();
        assert!(matches!(
            m.personalized_pagerank(g.id_of(2), &PprConfig::default()),
            Err(Error::IsolatedTarget(_))
        ));
        assert!(matches!(
            m.personalized_pagerank(SynsetId::new(Pos::Verb, 0), &PprConfig::default()),
            Err(Error::UnknownSynset(_))
        ));
        let v = m
            .personalized_pagerank(g.id_of(0), &PprConfig::default())
            .unwrap();
        assert_eq!(v.scores[2], 0.0);
        assert_eq!(m.isolated().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn config_validation() {
        for bad in [0.0, 1.0, -0.1, f64::NAN] {
            let cfg = PprConfig {
                damping: bad,
                ..PprConfig::default()
            };
            assert!(cfg.validate().is_err());
        }
        let cfg = PprConfig {
            tolerance: -1.0,
            ..PprConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn residuals_never_increase() {
        let g = SemanticGraph::from_edges(
            ids(6),
            [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)],
        )
        .unwrap();
        let m = build_transition(&g).unwrap();
        let v = m.personalized_pagerank(g.id_of(3), &tight()).unwrap();
        assert!(v.converged);
        for w in v.residuals[1..].windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn stream_matches_single_calls() {
        let g = SemanticGraph::from_edges(ids(4), [(0, 1), (1, 2)]).unwrap();
        let m = build_transition(&g).unwrap();
        let targets = g.ids().to_vec();
        let mut stream = batch_ppr(&m, &targets, PprConfig::default(), 2).unwrap();
        let mut out = Vec::new();
        for r in stream.by_ref() {
            out.push(r);
        }
        assert_eq!(out.len(), 4);
        for (t, r) in targets.iter().zip(&out).take(3) {
            let single = m.personalized_pagerank(*t, &PprConfig::default()).unwrap();
            assert_eq!(r.as_ref().unwrap(), &single);
        }
        assert!(out[3].is_err());
        assert_eq!(stream.failures().len(), 1);
        assert_eq!(stream.failures()[0].0, targets[3]);
    }
}

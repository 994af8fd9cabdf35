//! The evolving causal adjacency: original edges start undirected, edges
//! with a strong dependency asymmetry keep only their cause→effect message,
//! and high mutual-information triangle closures are added.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dependency::{DependencyScore, MiScore, ThresholdStats};
use crate::error::{Error, Result};
use crate::graph::{canonical, Edge, EdgeStatus, GraphDataset};
use crate::nn::{normalize_adjacency, NormalizationMode, SparsePropagator};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Directed,
    Added,
}

/// One line of `edits.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub iteration: usize,
    pub kind: EditKind,
    pub u: usize,
    pub v: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cause: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub effect: Option<usize>,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StructureCounts {
    pub undirected: usize,
    pub directed: usize,
    pub added: usize,
}

impl StructureCounts {
    pub fn total(&self) -> usize {
        self.undirected + self.directed + self.added
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalStructure {
    n: usize,
    edges: BTreeMap<Edge, EdgeStatus>,
    neighbors: Vec<BTreeSet<usize>>,
    log: Vec<EditRecord>,
}

impl CausalStructure {
    /// Every edge undirected, empty log.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut s = Self {
            n,
            edges: BTreeMap::new(),
            neighbors: vec![BTreeSet::new(); n],
            log: Vec::new(),
        };
        for (u, v) in edges {
            s.check_node(u)?;
            s.check_node(v)?;
            if u != v {
                s.insert(canonical(u, v), EdgeStatus::Undirected);
            }
        }
        Ok(s)
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::NodeOutOfRange {
                index: i,
                n_nodes: self.n,
            });
        }
        Ok(())
    }

    fn insert(&mut self, e: Edge, status: EdgeStatus) {
        self.edges.insert(e, status);
        self.neighbors[e.0].insert(e.1);
        self.neighbors[e.1].insert(e.0);
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn status(&self, u: usize, v: usize) -> Option<EdgeStatus> {
        self.edges.get(&canonical(u, v)).copied()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.edges.contains_key(&canonical(u, v))
    }

    /// Canonical edges in ascending order with their status.
    pub fn edges(&self) -> impl Iterator<Item = (Edge, EdgeStatus)> + '_ {
        self.edges.iter().map(|(&e, &s)| (e, s))
    }

    /// Neighbors in the undirected skeleton.
    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.neighbors[i]
    }

    pub fn log(&self) -> &[EditRecord] {
        &self.log
    }

    pub fn counts(&self) -> StructureCounts {
        let mut c = StructureCounts::default();
        for s in self.edges.values() {
            match s {
                EdgeStatus::Undirected => c.undirected += 1,
                EdgeStatus::Directed { .. } => c.directed += 1,
                EdgeStatus::Added => c.added += 1,
            }
        }
        c
    }

    pub fn has_directed(&self) -> bool {
        self.edges.values().any(|s| matches!(s, EdgeStatus::Directed { .. }))
    }

    /// Message pairs `(receiver, sender)`. A directed edge only carries the
    /// cause's message to the effect.
    pub fn messages(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.edges.len());
        for (&(u, v), s) in &self.edges {
            match *s {
                EdgeStatus::Directed { cause, effect } => out.push((effect, cause)),
                EdgeStatus::Undirected | EdgeStatus::Added => {
                    out.push((u, v));
                    out.push((v, u));
                }
            }
        }
        out
    }

    /// In-degree normalization once any edge is directed, symmetric before.
    pub fn default_mode(&self) -> NormalizationMode {
        if self.has_directed() {
            NormalizationMode::InDegree
        } else {
            NormalizationMode::Symmetric
        }
    }

    pub fn to_propagator<T: Scalar>(&self, mode: NormalizationMode) -> Result<SparsePropagator<T>> {
        normalize_adjacency(self.n, self.messages(), mode)
    }

    pub fn propagator<T: Scalar>(&self) -> Result<SparsePropagator<T>> {
        self.to_propagator(self.default_mode())
    }

    /// Edges with at least one endpoint among `centers`, ascending.
    pub fn scored_edges(&self, centers: &[usize]) -> Vec<Edge> {
        let mut out = BTreeSet::new();
        for &c in centers {
            if c < self.n {
                out.extend(self.neighbors[c].iter().map(|&j| canonical(c, j)));
            }
        }
        out.into_iter().collect()
    }

    /// Non-adjacent pairs that share a center as a common neighbor, ascending.
    pub fn triangle_candidates(&self, centers: &[usize]) -> Vec<Edge> {
        let mut out = BTreeSet::new();
        for &k in centers {
            if k >= self.n {
                continue;
            }
            let nb: Vec<usize> = self.neighbors[k].iter().copied().collect();
            for (a, &i) in nb.iter().enumerate() {
                for &j in &nb[a + 1..] {
                    if !self.neighbors[i].contains(&j) {
                        out.insert((i, j));
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Orients every selected undirected or added edge; directed edges are
    /// left alone. Returns the number of newly directed edges.
    pub fn apply_direction_prunes<T: Scalar>(
        &mut self,
        iteration: usize,
        scores: &[DependencyScore<T>],
        stats: &ThresholdStats,
    ) -> Result<usize> {
        let mut pruned = 0;
        for s in scores {
            let delta = s.delta.as_f64();
            if !stats.selects(delta) {
                continue;
            }
            let Some((cause, effect)) = s.direction else {
                continue;
            };
            let e = canonical(cause, effect);
            let Some(status) = self.edges.get_mut(&e) else {
                return Err(Error::InvalidArgument(format!("scored pair {e:?} is not an edge")));
            };
            if matches!(status, EdgeStatus::Directed { .. }) {
                continue;
            }
            *status = EdgeStatus::Directed { cause, effect };
            self.log.push(EditRecord {
                iteration,
                kind: EditKind::Directed,
                u: e.0,
                v: e.1,
                cause: Some(cause),
                effect: Some(effect),
                score: delta,
            });
            pruned += 1;
        }
        Ok(pruned)
    }

    /// Adds every selected candidate as an undirected `Added` edge.
    pub fn apply_edge_additions<T: Scalar>(
        &mut self,
        iteration: usize,
        mi_scores: &[MiScore<T>],
        stats: &ThresholdStats,
    ) -> Result<usize> {
        let mut added = 0;
        for s in mi_scores {
            let mi = s.mi.as_f64();
            if !stats.selects(mi) {
                continue;
            }
            let e = canonical(s.pair.0, s.pair.1);
            self.check_node(e.1)?;
            if e.0 == e.1 || self.edges.contains_key(&e) {
                return Err(Error::InvalidArgument(format!("candidate {e:?} is already adjacent")));
            }
            self.insert(e, EdgeStatus::Added);
            self.log.push(EditRecord {
                iteration,
                kind: EditKind::Added,
                u: e.0,
                v: e.1,
                cause: None,
                effect: None,
                score: mi,
            });
            added += 1;
        }
        Ok(added)
    }

    /// Re-applies an edit log on top of `self`.
    pub fn replay(&self, log: &[EditRecord]) -> Result<Self> {
        let mut s = self.clone();
        for r in log {
            let e = canonical(r.u, r.v);
            match r.kind {
                EditKind::Added => {
                    s.check_node(e.1)?;
                    s.insert(e, EdgeStatus::Added);
                }
                EditKind::Directed => {
                    let (Some(cause), Some(effect)) = (r.cause, r.effect) else {
                        return Err(Error::InvalidArgument("directed edit without cause".into()));
                    };
                    let Some(st) = s.edges.get_mut(&e) else {
                        return Err(Error::InvalidArgument(format!("edit on missing edge {e:?}")));
                    };
                    *st = EdgeStatus::Directed { cause, effect };
                }
            }
            s.log.push(*r);
        }
        Ok(s)
    }

    /// Iteration of the latest edit touching each edge.
    fn last_edit(&self) -> BTreeMap<Edge, usize> {
        self.log
            .iter()
            .map(|r| (canonical(r.u, r.v), r.iteration))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let last = self.last_edit();
        let mut out = String::from("u,v,status,cause,iteration\n");
        for (&e, s) in &self.edges {
            let cause = match s {
                EdgeStatus::Directed { cause, .. } => cause.to_string(),
                _ => String::new(),
            };
            let it = last.get(&e).map(|i| i.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{}\n", e.0, e.1, s.name(), cause, it));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_edits(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for r in &self.log {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a `causal_structure.csv`. The edit log is not restored.
    pub fn read_csv(path: &Path, n: usize) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = path.display().to_string();
        let bad = |line: usize, message: String| Error::Parse {
            file: file.clone(),
            line,
            message,
        };
        let mut s = Self::from_edges(n, [])?;
        for (no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(no + 1, format!("expected 5 fields, found {}", f.len())));
            }
            let node = |x: &str| -> Result<usize> {
                x.trim()
                    .parse()
                    .map_err(|_| bad(no + 1, format!("bad node index {x:?}")))
            };
            let (u, v) = (node(f[0])?, node(f[1])?);
            s.check_node(u)?;
            s.check_node(v)?;
            let e = canonical(u, v);
            let status = match f[2].trim() {
                "undirected" => EdgeStatus::Undirected,
                "added" => EdgeStatus::Added,
                "directed" => {
                    let cause = node(f[3])?;
                    if cause != u && cause != v {
                        return Err(bad(no + 1, format!("cause {cause} is not an endpoint")));
                    }
                    let effect = if cause == u { v } else { u };
                    EdgeStatus::Directed { cause, effect }
                }
                other => return Err(bad(no + 1, format!("unknown status {other:?}"))),
            };
            s.insert(e, status);
        }
        Ok(s)
    }
}

/// `A_c^{(0)} = A`.
pub fn init_structure<T: Scalar>(graph: &GraphDataset<T>) -> CausalStructure {
    CausalStructure::from_edges(graph.n_nodes(), graph.edges().iter().copied())
        .expect("dataset edges are validated")
}

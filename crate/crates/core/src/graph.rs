//! Undirected record graph induced by shared relationship-attribute values.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Atom, Database};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordGraph {
    /// Sorted neighbour lists, indexed by record position.
    adjacency: Vec<Vec<u32>>,
    relationships: Vec<Vec<Atom>>,
}

impl RecordGraph {
    /// Graph from an explicit edge list; used by tests and tools.
    pub fn from_edges(vertices: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); vertices];
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= vertices {
                    return Err(Error::UnknownVertex(w as usize));
                }
            }
            if u != v {
                adjacency[u as usize].push(v);
                adjacency[v as usize].push(u);
            }
        }
        for n in &mut adjacency {
            n.sort_unstable();
            n.dedup();
        }
        Ok(RecordGraph {
            adjacency,
            relationships: Vec::new(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn relationships(&self) -> &[Vec<Atom>] {
        &self.relationships
    }

    pub fn neighbours(&self, v: usize) -> Result<&[u32]> {
        self.adjacency
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownVertex(v))
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.neighbours(v).map(<[u32]>::len)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|n| n.binary_search(&(v as u32)).is_ok())
    }

    /// Edges as `(u, v)` with `u < v`, in order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, ns)| {
            ns.iter()
                .filter(move |&&v| (u as u32) < v)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Realized fraction of possible edges among `v` and its neighbours;
    /// zero when the egonet has a single vertex.
    pub fn egonet_density(&self, v: usize) -> Result<f64> {
        let ns = self.neighbours(v)?;
        let size = ns.len() + 1;
        if size <= 1 {
            return Ok(0.0);
        }
        let mut inner = 0usize;
        for (i, &a) in ns.iter().enumerate() {
            let na = &self.adjacency[a as usize];
            inner += ns[i + 1..]
                .iter()
                .filter(|&&b| na.binary_search(&b).is_ok())
                .count();
        }
        let edges = ns.len() + inner;
        Ok(2.0 * edges as f64 / (size * (size - 1)) as f64)
    }
}

/// Connects records that agree on every atom of at least one relationship
/// set. Absent values never agree.
pub fn build_record_graph(db: &Database, relationships: &[Vec<Atom>]) -> Result<RecordGraph> {
    for set in relationships {
        if set.is_empty() {
            return Err(Error::InvalidParameter(
                "empty relationship set".to_string(),
            ));
        }
        for atom in set {
            if atom.attribute >= db.schema().len() {
                return Err(Error::UnknownAttribute(format!("#{}", atom.attribute)));
            }
        }
    }
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for set in relationships {
        let mut groups: HashMap<Vec<String>, Vec<u32>> = HashMap::new();
        for (i, r) in db.records().iter().enumerate() {
            let key: Option<Vec<String>> = set.iter().map(|a| a.value(r)).collect();
            if let Some(key) = key {
                groups.entry(key).or_default().push(i as u32);
            }
        }
        for members in groups.values().filter(|m| m.len() > 1) {
            for (i, &u) in members.iter().enumerate() {
                for &v in &members[i + 1..] {
                    edges.push((u, v));
                }
            }
        }
    }
    let mut graph = RecordGraph::from_edges(db.len(), &edges)?;
    graph.relationships = relationships.to_vec();
    Ok(graph)
}

//! Attributed-network representation and level-set/connectivity primitives.
//!
//! Node identifiers are opaque strings externally and dense `usize`
//! indices internally; the mapping is fixed at construction time and
//! preserved in all outputs.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::density::{DensityParams, DensityVector, EstimatorTag};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge references unknown node id `{0}`")]
    UnknownNodeId(String),
    #[error("duplicate edge between `{0}` and `{1}`")]
    DuplicateEdge(String, String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate node id `{0}` in attribute table")]
    DuplicateNodeId(String),
    #[error("non-finite attribute value for node `{id}` in column {column}")]
    NonFiniteAttribute { id: String, column: usize },
    #[error("attribute row for node `{id}` has {got} values, expected {expected}")]
    RaggedAttributeRow {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("density vector has length {got}, network has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}

/// Undirected simple graph with an `n x p` attribute matrix.
///
/// Immutable after construction; safe to share across concurrent readers.
#[derive(Debug, Clone)]
pub struct AttributedNetwork {
    node_ids: Vec<String>,
    index_of: HashMap<String, usize>,
    /// Unordered pairs stored as `(i, j)` with `i < j`, sorted, no duplicates.
    edges: Vec<(usize, usize)>,
    /// Sorted neighbor lists.
    adjacency: Vec<Vec<usize>>,
    attributes: DMatrix<f64>,
}

impl AttributedNetwork {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn attr_dim(&self) -> usize {
        self.attributes.ncols()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, index: usize) -> &str {
        &self.node_ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index_of.get(id).copied()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.adjacency[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.adjacency[index].len()
    }

    pub fn attributes(&self) -> &DMatrix<f64> {
        &self.attributes
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Builds a network directly from index pairs and an attribute matrix.
    ///
    /// Node ids default to `n0`, `n1`, ... Intended for generated data where
    /// indices are already contiguous; rejects the same malformed input as
    /// [`build_network`].
    pub fn from_indexed(
        n: usize,
        edges: &[(usize, usize)],
        attributes: DMatrix<f64>,
    ) -> Result<Self, GraphError> {
        let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let edge_ids: Vec<(String, String)> = edges
            .iter()
            .map(|&(a, b)| (ids[a].clone(), ids[b].clone()))
            .collect();
        let mut rows = Vec::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            let row: Vec<f64> = attributes.row(i).iter().copied().collect();
            rows.push((id.clone(), row));
        }
        build_network(&edge_ids, Some(&rows))
    }
}

/// A subset of a network's nodes, as a boolean mask plus its cardinality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSubset {
    mask: Vec<bool>,
    count: usize,
}

impl NodeSubset {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        let count = mask.iter().filter(|&&m| m).count();
        NodeSubset { mask, count }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut mask = vec![false; n];
        for &i in indices {
            mask[i] = true;
        }
        Self::from_mask(mask)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn universe_len(&self) -> usize {
        self.mask.len()
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    pub fn is_subset_of(&self, other: &NodeSubset) -> bool {
        self.mask
            .iter()
            .zip(&other.mask)
            .all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint_from(&self, other: &NodeSubset) -> bool {
        self.mask
            .iter()
            .zip(&other.mask)
            .all(|(&a, &b)| !(a && b))
    }
}

/// Subgraph induced by a node subset: retains exactly the parent edges with
/// both endpoints flagged.
#[derive(Debug, Clone)]
pub struct InducedSubgraph<'a> {
    pub parent: &'a AttributedNetwork,
    pub nodes: NodeSubset,
    pub edges: Vec<(usize, usize)>,
}

/// Component labels over the parent's node set. Nodes outside the subset
/// carry `None`; retained nodes carry the component index. Components are
/// numbered by their smallest contained node index, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabels {
    pub labels: Vec<Option<usize>>,
    pub count: usize,
}

/// Builds an [`AttributedNetwork`] from an edge list and an optional
/// attribute table.
///
/// Ids are mapped to contiguous indices in first-appearance order of the
/// attribute table (or of the edge list when the table is omitted, yielding
/// `p = 0`). Duplicate edges and self-loops are rejected.
pub fn build_network(
    edge_list: &[(String, String)],
    attribute_table: Option<&[(String, Vec<f64>)]>,
) -> Result<AttributedNetwork, GraphError> {
    let mut node_ids: Vec<String> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();

    let attributes = match attribute_table {
        Some(rows) => {
            let p = rows.first().map(|(_, v)| v.len()).unwrap_or(0);
            let mut data = Vec::with_capacity(rows.len() * p);
            for (id, values) in rows {
                if index_of.contains_key(id) {
                    return Err(GraphError::DuplicateNodeId(id.clone()));
                }
                if values.len() != p {
                    return Err(GraphError::RaggedAttributeRow {
                        id: id.clone(),
                        expected: p,
                        got: values.len(),
                    });
                }
                for (column, &v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(GraphError::NonFiniteAttribute {
                            id: id.clone(),
                            column,
                        });
                    }
                    data.push(v);
                }
                index_of.insert(id.clone(), node_ids.len());
                node_ids.push(id.clone());
            }
            DMatrix::from_row_slice(node_ids.len(), p, &data)
        }
        None => {
            for (a, b) in edge_list {
                for id in [a, b] {
                    if !index_of.contains_key(id) {
                        index_of.insert(id.clone(), node_ids.len());
                        node_ids.push(id.clone());
                    }
                }
            }
            DMatrix::zeros(node_ids.len(), 0)
        }
    };

    let n = node_ids.len();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(edge_list.len());
    for (a, b) in edge_list {
        let i = *index_of
            .get(a)
            .ok_or_else(|| GraphError::UnknownNodeId(a.clone()))?;
        let j = *index_of
            .get(b)
            .ok_or_else(|| GraphError::UnknownNodeId(b.clone()))?;
        if i == j {
            return Err(GraphError::SelfLoop(a.clone()));
        }
        edges.push((i.min(j), i.max(j)));
    }
    edges.sort_unstable();
    if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
        let (i, j) = w[0];
        return Err(GraphError::DuplicateEdge(
            node_ids[i].clone(),
            node_ids[j].clone(),
        ));
    }

    let mut adjacency = vec![Vec::new(); n];
    for &(i, j) in &edges {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    Ok(AttributedNetwork {
        node_ids,
        index_of,
        edges,
        adjacency,
        attributes,
    })
}

/// Upper-level set at threshold `lambda`: retains exactly the nodes with
/// density `>= lambda` (inclusive) and the edges with both endpoints
/// retained.
pub fn upper_level_set<'a>(
    net: &'a AttributedNetwork,
    delta: &DensityVector,
    lambda: f64,
) -> Result<InducedSubgraph<'a>, GraphError> {
    let n = net.node_count();
    if delta.len() != n {
        return Err(GraphError::LengthMismatch {
            expected: n,
            got: delta.len(),
        });
    }
    let mask: Vec<bool> = delta.values().iter().map(|&d| d >= lambda).collect();
    let nodes = NodeSubset::from_mask(mask);
    let edges = net
        .edges()
        .iter()
        .copied()
        .filter(|&(i, j)| nodes.contains(i) && nodes.contains(j))
        .collect();
    Ok(InducedSubgraph {
        parent: net,
        nodes,
        edges,
    })
}

/// Connected components of an induced subgraph, labeled deterministically:
/// components are numbered by smallest contained node index, ascending.
pub fn connected_components(sub: &InducedSubgraph<'_>) -> ComponentLabels {
    let n = sub.parent.node_count();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &sub.edges {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut count = 0;
    // Scanning in index order makes component numbers ascend with the
    // smallest contained node index.
    for start in 0..n {
        if !sub.nodes.contains(start) || labels[start].is_some() {
            continue;
        }
        let label = count;
        count += 1;
        let mut stack = vec![start];
        labels[start] = Some(label);
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if labels[v].is_none() {
                    labels[v] = Some(label);
                    stack.push(v);
                }
            }
        }
    }
    ComponentLabels { labels, count }
}

/// Structural density for the DeCoDe special case: node degree.
pub fn degree_density(net: &AttributedNetwork) -> DensityVector {
    let values: Vec<f64> = (0..net.node_count())
        .map(|i| net.degree(i) as f64)
        .collect();
    DensityVector::new(values, EstimatorTag::Degree, DensityParams::default())
        .expect("degrees are finite and non-negative")
}

/// Structural density for the DeCoDe special case: closed-ego-network edge
/// density, `|edges among N[v]| / C(|N[v]|, 2)` with `N[v]` the closed
/// neighborhood. Nodes with `|N[v]| < 2` get 0.
pub fn local_density(net: &AttributedNetwork) -> DensityVector {
    let n = net.node_count();
    let mut values = vec![0.0; n];
    for i in 0..n {
        let mut hood: Vec<usize> = net.neighbors(i).to_vec();
        hood.push(i);
        hood.sort_unstable();
        let size = hood.len();
        if size < 2 {
            continue;
        }
        let mut internal = 0usize;
        for (a_pos, &a) in hood.iter().enumerate() {
            for &b in &hood[a_pos + 1..] {
                if net.has_edge(a, b) {
                    internal += 1;
                }
            }
        }
        let possible = size * (size - 1) / 2;
        values[i] = internal as f64 / possible as f64;
    }
    DensityVector::new(values, EstimatorTag::Local, DensityParams::default())
        .expect("ego densities are finite and non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn attrs(ids: &[&str]) -> Vec<(String, Vec<f64>)> {
        ids.iter().map(|id| (id.to_string(), vec![0.0])).collect()
    }

    fn path_abc() -> AttributedNetwork {
        build_network(&pairs(&[("a", "b"), ("b", "c")]), Some(&attrs(&["a", "b", "c"]))).unwrap()
    }

    fn density(values: Vec<f64>) -> DensityVector {
        DensityVector::new(values, EstimatorTag::External, DensityParams::default()).unwrap()
    }

    #[test]
    fn build_maps_ids_in_attribute_table_order() {
        let net = path_abc();
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge_count(), 2);
        assert_eq!(net.node_ids(), &["a", "b", "c"]);
        assert_eq!(net.index_of("c"), Some(2));
        assert!(net.has_edge(0, 1));
        assert!(!net.has_edge(0, 2));
    }

    #[test]
    fn build_rejects_self_loop() {
        let err = build_network(&pairs(&[("a", "a")]), Some(&attrs(&["a"]))).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop("a".into()));
    }

    #[test]
    fn build_rejects_unknown_id() {
        let err = build_network(&pairs(&[("a", "b")]), Some(&attrs(&["a"]))).unwrap_err();
        assert_eq!(err, GraphError::UnknownNodeId("b".into()));
    }

    #[test]
    fn build_rejects_duplicate_edge_in_either_orientation() {
        let err = build_network(
            &pairs(&[("a", "b"), ("b", "a")]),
            Some(&attrs(&["a", "b"])),
        )
        .unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge("a".into(), "b".into()));
    }

    #[test]
    fn build_rejects_non_finite_attribute() {
        let rows = vec![("a".to_string(), vec![f64::NAN])];
        let err = build_network(&[], Some(&rows)).unwrap_err();
        assert!(matches!(err, GraphError::NonFiniteAttribute { .. }));
    }

    #[test]
    fn build_without_attribute_table_uses_edge_order() {
        let net = build_network(&pairs(&[("x", "y"), ("y", "z")]), None).unwrap();
        assert_eq!(net.node_ids(), &["x", "y", "z"]);
        assert_eq!(net.attr_dim(), 0);
    }

    #[test]
    fn level_set_is_inclusive_and_drops_broken_edges() {
        let net = path_abc();
        let sub = upper_level_set(&net, &density(vec![0.9, 0.5, 0.8]), 0.6).unwrap();
        assert!(sub.nodes.contains(0));
        assert!(!sub.nodes.contains(1));
        assert!(sub.nodes.contains(2));
        assert!(sub.edges.is_empty());
    }

    #[test]
    fn level_set_vacuous_and_empty_thresholds() {
        let net = path_abc();
        let d = density(vec![0.9, 0.5, 0.8]);
        let all = upper_level_set(&net, &d, f64::NEG_INFINITY).unwrap();
        assert_eq!(all.nodes.count(), 3);
        assert_eq!(all.edges.len(), 2);
        let none = upper_level_set(&net, &d, 1.0).unwrap();
        assert_eq!(none.nodes.count(), 0);
        assert!(none.edges.is_empty());
    }

    #[test]
    fn level_set_rejects_length_mismatch() {
        let net = path_abc();
        let err = upper_level_set(&net, &density(vec![0.9, 0.5]), 0.5).unwrap_err();
        assert!(matches!(err, GraphError::LengthMismatch { .. }));
    }

    #[test]
    fn components_on_split_path() {
        let net = path_abc();
        let sub = upper_level_set(&net, &density(vec![0.9, 0.5, 0.8]), 0.6).unwrap();
        let comps = connected_components(&sub);
        assert_eq!(comps.count, 2);
        assert_eq!(comps.labels, vec![Some(0), None, Some(1)]);
    }

    #[test]
    fn components_on_connected_path_and_disjoint_triangles() {
        let net = path_abc();
        let sub = upper_level_set(&net, &density(vec![1.0, 1.0, 1.0]), 0.5).unwrap();
        assert_eq!(connected_components(&sub).count, 1);

        let tri2 = build_network(
            &pairs(&[("a", "b"), ("b", "c"), ("a", "c"), ("d", "e"), ("e", "f"), ("d", "f")]),
            Some(&attrs(&["a", "b", "c", "d", "e", "f"])),
        )
        .unwrap();
        let sub = upper_level_set(&tri2, &density(vec![1.0; 6]), 0.0).unwrap();
        let comps = connected_components(&sub);
        assert_eq!(comps.count, 2);
        assert_eq!(comps.labels[0], Some(0));
        assert_eq!(comps.labels[3], Some(1));
    }

    #[test]
    fn degree_density_examples() {
        let tri = build_network(
            &pairs(&[("a", "b"), ("b", "c"), ("a", "c")]),
            Some(&attrs(&["a", "b", "c"])),
        )
        .unwrap();
        assert_eq!(degree_density(&tri).values(), &[2.0, 2.0, 2.0]);

        let star = build_network(
            &pairs(&[("c", "l1"), ("c", "l2"), ("c", "l3")]),
            Some(&attrs(&["c", "l1", "l2", "l3"])),
        )
        .unwrap();
        assert_eq!(degree_density(&star).values(), &[3.0, 1.0, 1.0, 1.0]);

        let isolated = build_network(&[], Some(&attrs(&["a", "b"]))).unwrap();
        assert_eq!(degree_density(&isolated).values(), &[0.0, 0.0]);
    }

    #[test]
    fn degree_density_sums_to_twice_edge_count() {
        let net = path_abc();
        let total: f64 = degree_density(&net).values().iter().sum();
        assert_eq!(total, 2.0 * net.edge_count() as f64);
    }

    #[test]
    fn local_density_examples() {
        let tri = build_network(
            &pairs(&[("a", "b"), ("b", "c"), ("a", "c")]),
            Some(&attrs(&["a", "b", "c"])),
        )
        .unwrap();
        assert_eq!(local_density(&tri).values(), &[1.0, 1.0, 1.0]);

        let star = build_network(
            &pairs(&[("c", "l1"), ("c", "l2"), ("c", "l3")]),
            Some(&attrs(&["c", "l1", "l2", "l3"])),
        )
        .unwrap();
        assert_eq!(local_density(&star).values()[0], 0.5);

        let isolated = build_network(&[], Some(&attrs(&["a"]))).unwrap();
        assert_eq!(local_density(&isolated).values(), &[0.0]);
    }
}

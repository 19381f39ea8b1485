//! The AttDeCoDe engine: sweep density thresholds, build the cluster tree,
//! extract leaf clusters and core nodes, attach non-core members.
//!
//! The threshold grid is the sorted distinct density values (the only
//! points where level sets change), swept in decreasing order. Components
//! of the growing level-set subgraph are tracked incrementally; a tree
//! leaf is born when a component first appears, components merge into
//! internal vertices as the threshold drops, and the sweep ends at the
//! minimum density, where the level set is the whole graph.
//!
//! Passing a structural density (degree or local edge density) recovers
//! plain DeCoDe; the algorithm itself only depends on the density order
//! and the level-set topology.

use thiserror::Error;

use crate::density::DensityVector;
use crate::graph::{AttributedNetwork, NodeSubset};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("density vector has length {got}, network has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}

/// Knobs for the sweep. `min_cluster_size` defers a component's leaf birth
/// until it reaches the bound; components that never do and never meet a
/// born vertex end up unassigned.
#[derive(Debug, Clone, Copy)]
pub struct DetectOptions {
    pub min_cluster_size: usize,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            min_cluster_size: 1,
        }
    }
}

/// One vertex of the cluster tree.
#[derive(Debug, Clone)]
pub struct TreeVertex {
    /// Threshold at which this component appeared (leaf) or was formed by a
    /// merge (internal vertex).
    pub birth_lambda: f64,
    /// Component content at birth.
    pub members_at_birth: NodeSubset,
    /// Component content at the last threshold before the parent merge, or
    /// at the end of the sweep. For a leaf this is its maximal extent and
    /// defines the cluster core.
    pub extent: NodeSubset,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// Merge hierarchy of level-set components. A forest in general: each
/// connected component of the network contributes one root.
#[derive(Debug, Clone)]
pub struct ClusterTree {
    pub vertices: Vec<TreeVertex>,
    pub roots: Vec<usize>,
    pub leaves: Vec<usize>,
}

/// Leaf cores in label order (cluster `l` has core set `cores[l - 1]`).
#[derive(Debug, Clone)]
pub struct Extraction {
    pub cores: Vec<NodeSubset>,
    pub k_hat: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Core,
    Member,
    Unassigned,
}

/// Final clustering: memberships in `{1..k_hat}` with 0 reserved for
/// unassigned nodes, per-node roles, and the tree that produced them.
#[derive(Debug, Clone)]
pub struct Partition {
    pub membership: Vec<usize>,
    pub roles: Vec<Role>,
    pub k_hat: usize,
    pub tree: ClusterTree,
    pub density: DensityVector,
}

/// Union-find over nodes carrying, per root, the component member list and
/// the ids of the tree vertices the component currently descends from.
struct SweepState {
    parent: Vec<usize>,
    members: Vec<Vec<usize>>,
    vertex_ids: Vec<Vec<usize>>,
    active: Vec<bool>,
}

impl SweepState {
    fn new(n: usize) -> Self {
        SweepState {
            parent: (0..n).collect(),
            members: vec![Vec::new(); n],
            vertex_ids: vec![Vec::new(); n],
            active: vec![false; n],
        }
    }

    fn activate(&mut self, u: usize) {
        self.active[u] = true;
        self.members[u] = vec![u];
        self.vertex_ids[u].clear();
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return;
        }
        if self.members[ra].len() < self.members[rb].len() {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        let moved = std::mem::take(&mut self.members[rb]);
        self.members[ra].extend(moved);
        let moved_ids = std::mem::take(&mut self.vertex_ids[rb]);
        for id in moved_ids {
            if !self.vertex_ids[ra].contains(&id) {
                self.vertex_ids[ra].push(id);
            }
        }
    }
}

pub fn build_cluster_tree(
    net: &AttributedNetwork,
    delta: &DensityVector,
) -> Result<ClusterTree, DetectError> {
    build_cluster_tree_with(net, delta, &DetectOptions::default())
}

pub fn build_cluster_tree_with(
    net: &AttributedNetwork,
    delta: &DensityVector,
    options: &DetectOptions,
) -> Result<ClusterTree, DetectError> {
    let n = net.node_count();
    if delta.len() != n {
        return Err(DetectError::LengthMismatch {
            expected: n,
            got: delta.len(),
        });
    }
    let min_size = options.min_cluster_size.max(1);

    // Nodes grouped by density value, highest first; equal values enter the
    // level set together.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        delta
            .get(b)
            .total_cmp(&delta.get(a))
            .then_with(|| a.cmp(&b))
    });

    let mut state = SweepState::new(n);
    let mut vertices: Vec<TreeVertex> = Vec::new();
    let mut pos = 0;
    while pos < order.len() {
        let lambda = delta.get(order[pos]);
        let mut entering = Vec::new();
        while pos < order.len() && delta.get(order[pos]) == lambda {
            entering.push(order[pos]);
            pos += 1;
        }
        entering.sort_unstable();

        for &u in &entering {
            state.activate(u);
        }
        for &u in &entering {
            for &v in net.neighbors(u) {
                if state.active[v] {
                    state.union(u, v);
                }
            }
        }

        // Components touched this batch, in deterministic order.
        let mut batch_roots: Vec<usize> = entering.iter().map(|&u| state.find(u)).collect();
        batch_roots.sort_unstable();
        batch_roots.dedup();
        batch_roots.sort_by_key(|&r| state.members[r].iter().copied().min().unwrap());

        for &root in &batch_roots {
            let mut olds = state.vertex_ids[root].clone();
            olds.sort_unstable();
            match olds.len() {
                0 => {
                    if state.members[root].len() >= min_size {
                        let id = vertices.len();
                        vertices.push(TreeVertex {
                            birth_lambda: lambda,
                            members_at_birth: NodeSubset::from_indices(n, &state.members[root]),
                            extent: NodeSubset::from_indices(n, &state.members[root]),
                            children: Vec::new(),
                            parent: None,
                        });
                        state.vertex_ids[root] = vec![id];
                    }
                }
                1 => {}
                _ => {
                    let id = vertices.len();
                    for &child in &olds {
                        vertices[child].parent = Some(id);
                    }
                    vertices.push(TreeVertex {
                        birth_lambda: lambda,
                        members_at_birth: NodeSubset::from_indices(n, &state.members[root]),
                        extent: NodeSubset::from_indices(n, &state.members[root]),
                        children: olds,
                        parent: None,
                    });
                    state.vertex_ids[root] = vec![id];
                }
            }
        }

        // Freeze the live vertices' extents as of this threshold; merged
        // children keep the extent frozen at the previous one.
        let mut seen_roots: Vec<usize> = Vec::new();
        for &u in &entering {
            let r = state.find(u);
            if !seen_roots.contains(&r) {
                seen_roots.push(r);
            }
        }
        for u in 0..n {
            if state.active[u] {
                let r = state.find(u);
                if !seen_roots.contains(&r) {
                    seen_roots.push(r);
                }
            }
        }
        for &r in &seen_roots {
            if let [id] = state.vertex_ids[r][..] {
                vertices[id].extent = NodeSubset::from_indices(n, &state.members[r]);
            }
        }
    }

    let mut roots: Vec<usize> = (0..vertices.len())
        .filter(|&id| vertices[id].parent.is_none())
        .collect();
    roots.sort_unstable();
    let leaves: Vec<usize> = (0..vertices.len())
        .filter(|&id| vertices[id].children.is_empty())
        .collect();

    Ok(ClusterTree {
        vertices,
        roots,
        leaves,
    })
}

/// Clusters are the tree leaves; each leaf's core is its maximal pre-merge
/// extent. Labels `1..=k_hat` are assigned by ascending smallest core node
/// index, so outputs are reproducible.
pub fn extract_clusters(tree: &ClusterTree) -> Extraction {
    let mut leaf_ids: Vec<usize> = tree.leaves.clone();
    leaf_ids.sort_by_key(|&id| {
        tree.vertices[id]
            .extent
            .indices()
            .into_iter()
            .min()
            .unwrap_or(usize::MAX)
    });
    let cores: Vec<NodeSubset> = leaf_ids
        .iter()
        .map(|&id| tree.vertices[id].extent.clone())
        .collect();
    Extraction {
        k_hat: cores.len(),
        cores,
    }
}

/// Attaches non-core nodes: in decreasing density order (ties to the lower
/// index), each takes the label of its highest-density already-labeled
/// neighbor (ties to the lower label), iterating to a fixed point. Nodes
/// with no path to any core stay unassigned (label 0).
fn attach_members(
    net: &AttributedNetwork,
    delta: &DensityVector,
    cores: &[NodeSubset],
) -> (Vec<usize>, Vec<Role>) {
    let n = net.node_count();
    let mut membership = vec![0usize; n];
    let mut roles = vec![Role::Unassigned; n];
    for (label0, core) in cores.iter().enumerate() {
        for u in core.indices() {
            membership[u] = label0 + 1;
            roles[u] = Role::Core;
        }
    }

    let mut pending: Vec<usize> = (0..n).filter(|&u| membership[u] == 0).collect();
    pending.sort_by(|&a, &b| {
        delta
            .get(b)
            .total_cmp(&delta.get(a))
            .then_with(|| a.cmp(&b))
    });

    loop {
        let mut changed = false;
        let mut still_pending = Vec::new();
        for &u in &pending {
            let mut best: Option<(f64, usize)> = None;
            for &v in net.neighbors(u) {
                if membership[v] == 0 {
                    continue;
                }
                let cand = (delta.get(v), membership[v]);
                best = Some(match best {
                    None => cand,
                    Some(cur) => {
                        if cand.0 > cur.0 || (cand.0 == cur.0 && cand.1 < cur.1) {
                            cand
                        } else {
                            cur
                        }
                    }
                });
            }
            if let Some((_, label)) = best {
                membership[u] = label;
                roles[u] = Role::Member;
                changed = true;
            } else {
                still_pending.push(u);
            }
        }
        pending = still_pending;
        if !changed || pending.is_empty() {
            break;
        }
    }

    (membership, roles)
}

/// End-to-end detection: build the tree, extract leaf cores, attach
/// non-core members.
pub fn run_attdecode(
    net: &AttributedNetwork,
    delta: &DensityVector,
) -> Result<Partition, DetectError> {
    run_attdecode_with(net, delta, &DetectOptions::default())
}

pub fn run_attdecode_with(
    net: &AttributedNetwork,
    delta: &DensityVector,
    options: &DetectOptions,
) -> Result<Partition, DetectError> {
    let tree = build_cluster_tree_with(net, delta, options)?;
    let extraction = extract_clusters(&tree);
    let (membership, roles) = attach_members(net, delta, &extraction.cores);
    Ok(Partition {
        membership,
        roles,
        k_hat: extraction.k_hat,
        tree,
        density: delta.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DensityParams, EstimatorTag};
    use crate::graph::build_network;

    fn net_from(edges: &[(&str, &str)], ids: &[&str]) -> AttributedNetwork {
        let edge_list: Vec<(String, String)> = edges
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let attrs: Vec<(String, Vec<f64>)> =
            ids.iter().map(|id| (id.to_string(), vec![0.0])).collect();
        build_network(&edge_list, Some(&attrs)).unwrap()
    }

    fn density(values: Vec<f64>) -> DensityVector {
        DensityVector::new(values, EstimatorTag::External, DensityParams::default()).unwrap()
    }

    /// Two triangles {1,2,3} and {4,5,6} joined by the edge 3-4.
    fn two_triangles() -> AttributedNetwork {
        net_from(
            &[
                ("1", "2"),
                ("2", "3"),
                ("1", "3"),
                ("4", "5"),
                ("5", "6"),
                ("4", "6"),
                ("3", "4"),
            ],
            &["1", "2", "3", "4", "5", "6"],
        )
    }

    #[test]
    fn two_triangle_sweep_builds_two_leaves_and_one_merge() {
        let net = two_triangles();
        let delta = density(vec![0.9, 0.8, 0.7, 0.7, 0.8, 0.9]);
        let tree = build_cluster_tree(&net, &delta).unwrap();
        assert_eq!(tree.leaves.len(), 2);
        assert_eq!(tree.vertices.len(), 3);
        assert_eq!(tree.roots.len(), 1);
        let root = &tree.vertices[tree.roots[0]];
        assert_eq!(root.children.len(), 2);
        assert_eq!(root.birth_lambda, 0.7);
        assert_eq!(root.members_at_birth.count(), 6);
        for &leaf in &tree.leaves {
            let v = &tree.vertices[leaf];
            assert_eq!(v.birth_lambda, 0.9);
            assert_eq!(v.members_at_birth.count(), 1);
            assert_eq!(v.extent.count(), 2);
        }
    }

    #[test]
    fn two_triangle_partition_matches_hand_propagation() {
        let net = two_triangles();
        let delta = density(vec![0.9, 0.8, 0.7, 0.7, 0.8, 0.9]);
        let part = run_attdecode(&net, &delta).unwrap();
        assert_eq!(part.k_hat, 2);
        assert_eq!(part.membership, vec![1, 1, 1, 2, 2, 2]);
        assert_eq!(
            part.roles,
            vec![
                Role::Core,
                Role::Core,
                Role::Member,
                Role::Member,
                Role::Core,
                Role::Core
            ]
        );
    }

    #[test]
    fn constant_density_connected_graph_is_single_leaf() {
        let net = net_from(&[("a", "b"), ("b", "c")], &["a", "b", "c"]);
        let part = run_attdecode(&net, &density(vec![1.0, 1.0, 1.0])).unwrap();
        assert_eq!(part.k_hat, 1);
        assert_eq!(part.membership, vec![1, 1, 1]);
        assert!(part.roles.iter().all(|&r| r == Role::Core));
        assert_eq!(part.tree.vertices.len(), 1);
    }

    #[test]
    fn constant_density_disjoint_components_give_one_leaf_each() {
        let net = net_from(&[("a", "b"), ("c", "d"), ("e", "f")], &["a", "b", "c", "d", "e", "f"]);
        let part = run_attdecode(&net, &density(vec![1.0; 6])).unwrap();
        assert_eq!(part.k_hat, 3);
        assert_eq!(part.tree.leaves.len(), 3);
        assert_eq!(part.tree.roots.len(), 3);
        assert_eq!(part.membership, vec![1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn single_node_network() {
        let net = net_from(&[], &["only"]);
        let part = run_attdecode(&net, &density(vec![0.5])).unwrap();
        assert_eq!(part.k_hat, 1);
        assert_eq!(part.membership, vec![1]);
        assert_eq!(part.roles, vec![Role::Core]);
    }

    #[test]
    fn isolated_node_stays_unassigned_only_when_disconnected() {
        let net = net_from(&[("a", "b")], &["a", "b", "z"]);
        let part = run_attdecode(&net, &density(vec![0.9, 0.8, 0.1])).unwrap();
        // The isolated node is its own leaf under the default options: it is
        // a component of the full graph.
        assert_eq!(part.k_hat, 2);
        assert_eq!(part.membership[2], 2);

        // With a minimum size of 2 it never births and has no core to reach.
        let opts = DetectOptions {
            min_cluster_size: 2,
        };
        let part = run_attdecode_with(&net, &density(vec![0.9, 0.8, 0.1]), &opts).unwrap();
        assert_eq!(part.k_hat, 1);
        assert_eq!(part.membership[2], 0);
        assert_eq!(part.roles[2], Role::Unassigned);
    }

    #[test]
    fn equal_density_neighbors_tie_to_lower_label() {
        // Path: core1 - x - core2 where both cores have the same density and
        // x must choose between equal-density labeled neighbors.
        let net = net_from(&[("a", "x"), ("x", "b")], &["a", "x", "b"]);
        let part = run_attdecode(&net, &density(vec![1.0, 0.5, 1.0])).unwrap();
        assert_eq!(part.k_hat, 2);
        assert_eq!(part.membership[1], 1);
        assert_eq!(part.roles[1], Role::Member);
    }

    #[test]
    fn min_cluster_size_defers_birth_to_reaching_the_bound() {
        // Chain with densities stepping down from one end: singleton births
        // are deferred until the component has two nodes.
        let net = net_from(&[("a", "b"), ("b", "c"), ("c", "d")], &["a", "b", "c", "d"]);
        let delta = density(vec![0.9, 0.7, 0.5, 0.3]);
        let opts = DetectOptions {
            min_cluster_size: 2,
        };
        let tree = build_cluster_tree_with(&net, &delta, &opts).unwrap();
        assert_eq!(tree.leaves.len(), 1);
        let leaf = &tree.vertices[tree.leaves[0]];
        assert_eq!(leaf.birth_lambda, 0.7);
        assert_eq!(leaf.members_at_birth.count(), 2);
    }

    #[test]
    fn merge_absorbs_provisional_component_into_existing_vertex() {
        // With min size 3, the pair {e, f} never births; when d enters it
        // connects the pair to the main component: still a single leaf.
        let net = net_from(
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "f")],
            &["a", "b", "c", "d", "e", "f"],
        );
        let delta = density(vec![0.9, 0.9, 0.9, 0.2, 0.5, 0.5]);
        let opts = DetectOptions {
            min_cluster_size: 3,
        };
        let tree = build_cluster_tree_with(&net, &delta, &opts).unwrap();
        assert_eq!(tree.leaves.len(), 1);
        assert_eq!(tree.vertices.len(), 1);
        let part = run_attdecode_with(&net, &delta, &opts).unwrap();
        assert_eq!(part.k_hat, 1);
        assert_eq!(part.membership, vec![1; 6]);
    }

    #[test]
    fn deterministic_across_runs() {
        let net = two_triangles();
        let delta = density(vec![0.9, 0.8, 0.7, 0.7, 0.8, 0.9]);
        let a = run_attdecode(&net, &delta).unwrap();
        let b = run_attdecode(&net, &delta).unwrap();
        assert_eq!(a.membership, b.membership);
        assert_eq!(a.k_hat, b.k_hat);
        assert_eq!(a.roles, b.roles);
    }

    #[test]
    fn rejects_length_mismatch() {
        let net = two_triangles();
        let err = run_attdecode(&net, &density(vec![1.0])).unwrap_err();
        assert!(matches!(err, DetectError::LengthMismatch { .. }));
    }
}

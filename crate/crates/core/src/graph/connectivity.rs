use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ArticulatedObject, JointType};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub node_id: usize,
    pub semantic_label: String,
    pub joint_type: JointType,
}

/// Part semantics, joint types and parent → child edges of an object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityGraph {
    pub nodes: Vec<GraphNode>,
    /// `(parent_id, child_id)` pairs.
    pub edges: Vec<(usize, usize)>,
    pub root_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphViolation {
    Empty,
    DuplicateNode(usize),
    MissingRoot(usize),
    RootNotFixed(usize),
    UnknownNode { edge: (usize, usize) },
    SelfLoop(usize),
    DuplicateEdge((usize, usize)),
    RootHasParent(usize),
    MultipleParents(usize),
    MultipleRoots(Vec<usize>),
    Cycle(Vec<usize>),
    Unreachable(usize),
}

impl fmt::Display for GraphViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "graph has no nodes"),
            Self::DuplicateNode(id) => write!(f, "node id {id} appears more than once"),
            Self::MissingRoot(id) => write!(f, "root {id} is not a node"),
            Self::RootNotFixed(id) => write!(f, "root {id} must have a fixed joint"),
            Self::UnknownNode { edge } => write!(f, "edge {edge:?} references an unknown node"),
            Self::SelfLoop(id) => write!(f, "node {id} is its own parent"),
            Self::DuplicateEdge(e) => write!(f, "edge {e:?} listed more than once"),
            Self::RootHasParent(id) => write!(f, "root {id} has a parent"),
            Self::MultipleParents(id) => write!(f, "node {id} has more than one parent"),
            Self::MultipleRoots(ids) => write!(f, "nodes {ids:?} have no parent"),
            Self::Cycle(ids) => write!(f, "cycle through nodes {ids:?}"),
            Self::Unreachable(id) => write!(f, "node {id} is not reachable from the root"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphReport {
    pub violations: Vec<GraphViolation>,
}

impl GraphReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for GraphReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl ConnectivityGraph {
    /// Structure of `object`: one node per part in part order, one edge per parent link.
    pub fn from_object<T: Scalar>(object: &ArticulatedObject<T>) -> Self {
        Self {
            nodes: object
                .parts
                .iter()
                .map(|p| GraphNode {
                    node_id: p.part_id,
                    semantic_label: p.semantic_label.clone(),
                    joint_type: p.joint.joint_type,
                })
                .collect(),
            edges: object.parts.iter().filter_map(|p| p.parent_id.map(|q| (q, p.part_id))).collect(),
            root_id: object.root_id,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node id → position in `nodes`.
    pub fn positions(&self) -> Result<BTreeMap<usize, usize>> {
        let mut map = BTreeMap::new();
        for (k, n) in self.nodes.iter().enumerate() {
            if map.insert(n.node_id, k).is_some() {
                return Err(Error::Structure(format!("node id {} appears more than once", n.node_id)));
            }
        }
        Ok(map)
    }

    /// Parent position for every node position, `None` for the root.
    pub fn parent_positions(&self) -> Result<Vec<Option<usize>>> {
        let report = validate_graph(self);
        if !report.is_valid() {
            return Err(Error::Structure(report.to_string().trim_end().replace('\n', "; ")));
        }
        let pos = self.positions()?;
        let mut parents = vec![None; self.nodes.len()];
        for &(p, c) in &self.edges {
            parents[pos[&c]] = Some(pos[&p]);
        }
        Ok(parents)
    }
}

/// Checks that the edges form a single tree over the nodes rooted at `root_id`.
pub fn validate_graph(g: &ConnectivityGraph) -> GraphReport {
    let mut v = Vec::new();
    if g.nodes.is_empty() {
        v.push(GraphViolation::Empty);
        return GraphReport { violations: v };
    }
    let mut ids = BTreeSet::new();
    for n in &g.nodes {
        if !ids.insert(n.node_id) {
            v.push(GraphViolation::DuplicateNode(n.node_id));
        }
    }
    match g.nodes.iter().find(|n| n.node_id == g.root_id) {
        None => v.push(GraphViolation::MissingRoot(g.root_id)),
        Some(n) if n.joint_type != JointType::Fixed => v.push(GraphViolation::RootNotFixed(g.root_id)),
        Some(_) => {}
    }
    let mut seen_edges = BTreeSet::new();
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    for &e in &g.edges {
        let (p, c) = e;
        if !ids.contains(&p) || !ids.contains(&c) {
            v.push(GraphViolation::UnknownNode { edge: e });
            continue;
        }
        if p == c {
            v.push(GraphViolation::SelfLoop(c));
            continue;
        }
        if !seen_edges.insert(e) {
            v.push(GraphViolation::DuplicateEdge(e));
            continue;
        }
        if c == g.root_id {
            v.push(GraphViolation::RootHasParent(c));
            continue;
        }
        if parent.insert(c, p).is_some() {
            v.push(GraphViolation::MultipleParents(c));
        }
    }
    let orphans: Vec<usize> = ids.iter().copied().filter(|id| *id != g.root_id && !parent.contains_key(id)).collect();
    if !orphans.is_empty() && ids.contains(&g.root_id) {
        let mut all = vec![g.root_id];
        all.extend(&orphans);
        v.push(GraphViolation::MultipleRoots(all));
    }
    // walk up from every node; revisiting a node on the current walk is a cycle
    let mut reported = BTreeSet::new();
    for &start in &ids {
        let mut path = Vec::new();
        let mut cur = start;
        while let Some(&p) = parent.get(&cur) {
            path.push(cur);
            if let Some(k) = path.iter().position(|&x| x == p) {
                let mut cyc = path[k..].to_vec();
                let m = cyc.iter().enumerate().min_by_key(|(_, &x)| x).map(|(i, _)| i).unwrap_or(0);
                cyc.rotate_left(m);
                if reported.insert(cyc.clone()) {
                    v.push(GraphViolation::Cycle(cyc));
                }
                break;
            }
            cur = p;
        }
    }
    if ids.contains(&g.root_id) {
        let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&c, &p) in &parent {
            children.entry(p).or_default().push(c);
        }
        let mut reach = BTreeSet::from([g.root_id]);
        let mut stack = vec![g.root_id];
        while let Some(n) = stack.pop() {
            for &c in children.get(&n).map(Vec::as_slice).unwrap_or(&[]) {
                if reach.insert(c) {
                    stack.push(c);
                }
            }
        }
        for &id in &ids {
            if !reach.contains(&id) && !orphans.contains(&id) {
                v.push(GraphViolation::Unreachable(id));
            }
        }
    }
    GraphReport { violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::chain;

    pub(crate) fn node(id: usize, label: &str, jt: JointType) -> GraphNode {
        GraphNode { node_id: id, semantic_label: label.into(), joint_type: jt }
    }

    #[test]
    fn chain_graph_is_valid() {
        let g = ConnectivityGraph::from_object(&chain(3));
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
        assert!(validate_graph(&g).is_valid());
    }

    #[test]
    fn duplicated_edge() {
        let mut g = ConnectivityGraph::from_object(&chain(3));
        g.edges.push((1, 2));
        assert!(validate_graph(&g).violations.contains(&GraphViolation::DuplicateEdge((1, 2))));
    }

    #[test]
    fn two_roots() {
        let mut g = ConnectivityGraph::from_object(&chain(3));
        g.edges.pop();
        let r = validate_graph(&g);
        assert_eq!(r.violations, vec![GraphViolation::MultipleRoots(vec![0, 2])]);
    }

    #[test]
    fn cycle_detected() {
        let g = ConnectivityGraph {
            nodes: vec![
                node(0, "base", JointType::Fixed),
                node(1, "a", JointType::Revolute),
                node(2, "b", JointType::Revolute),
            ],
            edges: vec![(2, 1), (1, 2)],
            root_id: 0,
        };
        let r = validate_graph(&g);
        assert!(r.violations.contains(&GraphViolation::Cycle(vec![1, 2])), "{r}");
        assert!(g.parent_positions().is_err());
    }

    #[test]
    fn empty_and_missing_root() {
        let g = ConnectivityGraph { nodes: vec![], edges: vec![], root_id: 0 };
        assert_eq!(validate_graph(&g).violations, vec![GraphViolation::Empty]);
        let g = ConnectivityGraph { nodes: vec![node(1, "x", JointType::Fixed)], edges: vec![], root_id: 0 };
        assert!(validate_graph(&g).violations.contains(&GraphViolation::MissingRoot(0)));
    }
}

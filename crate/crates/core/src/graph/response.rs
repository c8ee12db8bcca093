//! The JSON document a structure-prior backend returns:
//! `{"root": 0, "nodes": [{"id": 0, "label": "base", "joint_type": "fixed"}], "edges": [[0, 1]]}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::connectivity::{validate_graph, ConnectivityGraph, GraphNode};
use crate::model::JointType;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Payload {
    root: usize,
    nodes: Vec<PayloadNode>,
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayloadNode {
    id: usize,
    label: String,
    joint_type: String,
}

fn parse_error(message: String, offset: Option<usize>, payload: &str) -> Error {
    Error::Parse { message, offset, payload: Some(payload.to_string()) }
}

/// Byte offset of a 1-based line/column position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses and validates a structure response. Nothing is returned unless the
/// whole document is well formed and describes a tree.
pub fn parse_structure_response(payload: &str) -> Result<ConnectivityGraph> {
    let doc: Payload = serde_json::from_str(payload)
        .map_err(|e| parse_error(e.to_string(), Some(byte_offset(payload, e.line(), e.column())), payload))?;
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in doc.nodes {
        let joint_type: JointType = n.joint_type.parse().map_err(|_| {
            let offset = payload.find(&format!("\"{}\"", n.joint_type));
            parse_error(
                format!("unknown joint type `{}` (expected one of fixed, revolute, continuous, prismatic, screw)", n.joint_type),
                offset,
                payload,
            )
        })?;
        nodes.push(GraphNode { node_id: n.id, semantic_label: n.label, joint_type });
    }
    let graph = ConnectivityGraph { nodes, edges: doc.edges.into_iter().map(|[p, c]| (p, c)).collect(), root_id: doc.root };
    let report = validate_graph(&graph);
    if !report.is_valid() {
        let msg = report.to_string().trim_end().replace('\n', "; ");
        return Err(parse_error(format!("response is not a valid tree: {msg}"), None, payload));
    }
    Ok(graph)
}

/// Inverse of [`parse_structure_response`].
pub fn serialize_structure(g: &ConnectivityGraph) -> String {
    let doc = Payload {
        root: g.root_id,
        nodes: g
            .nodes
            .iter()
            .map(|n| PayloadNode { id: n.node_id, label: n.semantic_label.clone(), joint_type: n.joint_type.to_string() })
            .collect(),
        edges: g.edges.iter().map(|&(p, c)| [p, c]).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::chain;

    #[test]
    fn single_node() {
        let g = parse_structure_response(r#"{"root": 0, "nodes": [{"id": 0, "label": "body", "joint_type": "fixed"}], "edges": []}"#)
            .unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn hinge_is_named() {
        let text = r#"{"root": 0, "nodes": [{"id": 0, "label": "b", "joint_type": "fixed"}, {"id": 1, "label": "d", "joint_type": "hinge"}], "edges": [[0, 1]]}"#;
        match parse_structure_response(text).unwrap_err() {
            Error::Parse { message, offset, payload } => {
                assert!(message.contains("hinge"));
                assert_eq!(offset, text.find("\"hinge\""));
                assert_eq!(payload.as_deref(), Some(text));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn malformed_text_reports_offset() {
        let text = "{\"root\": 0,\n \"nodes\": [}";
        match parse_structure_response(text).unwrap_err() {
            Error::Parse { offset: Some(o), .. } => assert_eq!(&text[o..o + 1], "}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn missing_root_and_unknown_fields() {
        assert!(matches!(
            parse_structure_response(r#"{"nodes": [], "edges": []}"#),
            Err(Error::Parse { .. })
        ));
        assert!(parse_structure_response(
            r#"{"root": 0, "nodes": [{"id": 0, "label": "b", "joint_type": "fixed", "x": 1}], "edges": []}"#
        )
        .is_err());
    }

    #[test]
    fn round_trip() {
        let g = ConnectivityGraph::from_object(&chain(4));
        assert_eq!(parse_structure_response(&serialize_structure(&g)).unwrap(), g);
    }
}

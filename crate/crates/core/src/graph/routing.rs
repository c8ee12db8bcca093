use sha2::{Digest, Sha256};

use crate::graph::connectivity::ConnectivityGraph;
use crate::model::JointType;
use crate::scalar::Scalar;

pub const JOINT_EMBEDDING_DIM: usize = 5;
pub const SEMANTIC_EMBEDDING_DIM: usize = 16;
pub const ROUTING_DIM: usize = JOINT_EMBEDDING_DIM + SEMANTIC_EMBEDDING_DIM;

/// Joint-type one-hot followed by the hashed label embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingEmbedding<T = f64>(pub Vec<T>);

impl<T: Scalar> RoutingEmbedding<T> {
    pub fn new(joint_type: JointType, label: &str, seed: u64) -> Self {
        let mut v = vec![T::zero(); ROUTING_DIM];
        v[joint_type.index()] = T::one();
        for (k, x) in semantic_hash(label, seed).into_iter().enumerate() {
            v[JOINT_EMBEDDING_DIM + k] = T::lit(x);
        }
        Self(v)
    }

    pub fn joint_slice(&self) -> &[T] {
        &self.0[..JOINT_EMBEDDING_DIM]
    }

    pub fn semantic_slice(&self) -> &[T] {
        &self.0[JOINT_EMBEDDING_DIM..]
    }
}

/// Dense label vector with entries in `[-1, 1]` taken from SHA-256 of the
/// seed and the label bytes.
pub fn semantic_hash(label: &str, seed: u64) -> [f64; SEMANTIC_EMBEDDING_DIM] {
    let digest = Sha256::new().chain_update(seed.to_le_bytes()).chain_update(label.as_bytes()).finalize();
    let mut out = [0.0; SEMANTIC_EMBEDDING_DIM];
    for (k, pair) in digest.chunks_exact(2).enumerate() {
        let word = u16::from_le_bytes([pair[0], pair[1]]);
        out[k] = f64::from(word) / 32767.5 - 1.0;
    }
    out
}

/// One embedding per node, in node order.
pub fn encode_routing_embeddings<T: Scalar>(g: &ConnectivityGraph, seed: u64) -> Vec<RoutingEmbedding<T>> {
    g.nodes.iter().map(|n| RoutingEmbedding::new(n.joint_type, &n.semantic_label, seed)).collect()
}

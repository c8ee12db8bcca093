//! Connectivity graphs and what the denoiser derives from them: adjacency,
//! attention masks and expert-routing embeddings. Graphs either come from an
//! existing object or from a structure-prior backend.

pub mod connectivity;
pub mod mask;
pub mod provider;
pub mod response;
pub mod routing;

pub use connectivity::{validate_graph, ConnectivityGraph, GraphNode, GraphReport, GraphViolation};
pub use mask::{adjacency_to_attention_mask, to_adjacency_matrix, AttentionMask, BoolMatrix};
pub use provider::{
    infer_structure, Capabilities, Condition, HttpProvider, HttpProviderConfig, MockProvider, PromptTemplates,
    StructurePriorProvider, TOKEN_ENV,
};
pub use response::{parse_structure_response, serialize_structure};
pub use routing::{encode_routing_embeddings, semantic_hash, RoutingEmbedding, ROUTING_DIM};

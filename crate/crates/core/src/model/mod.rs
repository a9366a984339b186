//! Forward structure of the auto-encoder: node masking, the shared
//! graph-attention encoder, the attention decoder, the projector, and the
//! attention-guided choice of discrepancy targets.

mod discrepancy;
mod gat;
mod mask;
mod params;

pub use discrepancy::{
    embedding_discrepancy, masked_discrepancy_target, select_discrepancy_edges,
    selection_probability, EdgeSelectionMask,
};
pub use gat::{
    bridge, decode, embed, encode, gat_layer, project, AttentionArcs, AttentionWeights, Encoded,
};
pub use mask::{apply_mask, sample_mask, MaskPlan};
pub use params::{Architecture, GatLayerParams, ModelParams, Projector, LEAKY_SLOPE};

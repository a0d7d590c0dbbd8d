//! Visible/NIR image fusion driven by inter-band complementarity.
//!
//! Each channel of a registered visible RGB + NIR pair is split into a base
//! layer, a texture layer and an edge layer ([`decompose`]). XDoG responses of
//! visible-minus-NIR difference maps and of the NIR layers ([`structure`])
//! feed an arctan-shaped weight ([`fusion`]) that decides, per pixel and
//! scale, how much detail comes from each band. The visible base layer is
//! kept, so chroma stays with the visible capture.
//!
//! Row loops and independent channels run on rayon when the `parallel`
//! feature is enabled (the default); otherwise everything is sequential.
//! Results are identical either way.

pub mod decompose;
pub mod error;
pub mod fusion;
pub mod metrics;
mod par;
pub mod plane;
pub mod structure;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use decompose::{
    decompose, edge_aware_weight, guided_filter, weighted_guided_filter,
    weighted_guided_filter_with_weight, FilterParams, LayerStack,
};
pub use error::{FusionError, Result};
pub use fusion::{
    arctan_i, fuse_layers, fuse_pair, fusion_weights, reconstruct, reconstruct_unclamped,
    ArctanIParams, FusionOutput, FusionParams, StageTimings, WeightMap,
};
pub use metrics::{color_distance, metrics_report, psnr, psnr_plane, ssim, MetricsReport};
pub use plane::{box_mean, normalize01, plane_stats, ImagePair, Plane, RgbImage};
pub use structure::{
    difference_map, gaussian_blur, structure_maps, xdog, ChannelStacks, StructureMaps, XDogParams,
};

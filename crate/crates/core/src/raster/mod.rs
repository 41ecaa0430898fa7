//! Tile-based rasterizer: binning, single global sort, per-tile front-to-back
//! blending, and the matching back-to-front gradient traversal.

mod backward;
pub mod binning;
pub mod blend;
mod forward;
pub mod key;

pub use backward::render_backward;
pub use binning::{bin_and_sort, TileBinning, TileGrid, TILE_SIZE};
pub use blend::{splat_weight, Weight, ALPHA_MAX, ALPHA_MIN, TRANSMITTANCE_MIN};
pub use forward::{render_forward, RenderOutput};
pub use key::SortKey;

/// How work is scheduled across tiles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    /// Tiles processed by the rayon pool; gradient merges are
    /// order-nondeterministic.
    #[default]
    Parallel,
    /// Single-threaded, fixed visitation order; bit-reproducible.
    Deterministic,
}

use super::binning::TileBinning;
use super::blend::{splat_weight, TRANSMITTANCE_MIN};
use super::ExecMode;
use crate::gaussian::ProjectedSplat;
use crate::image::Image;
use crate::real::Real;
use nalgebra::Vector3;
use rayon::prelude::*;

/// Splats a tile loads and walks through at once.
const BATCH: usize = 256;

#[derive(Clone, Debug)]
pub struct RenderOutput<T: Real> {
    pub image: Image<T>,
    /// Transmittance left after the last blended splat, per pixel.
    /// Empty unless rendered in training mode.
    pub final_transmittance: Vec<T>,
    /// Per pixel: one past the position (within its tile's sorted range) of
    /// the last splat that was blended; 0 if none was. Empty unless rendered
    /// in training mode.
    pub last_contributor: Vec<u32>,
}

impl<T: Real> RenderOutput<T> {
    pub fn is_training(&self) -> bool {
        !self.final_transmittance.is_empty()
    }
}

#[derive(Clone, Copy)]
struct PixelState<T: Real> {
    color: Vector3<T>,
    transmittance: T,
    last: u32,
    done: bool,
}

struct TileResult<T: Real> {
    tile: u32,
    pixels: Vec<PixelState<T>>,
}

/// Front-to-back saturating alpha blend of every tile.
pub fn render_forward<T: Real>(
    binning: &TileBinning,
    splats: &[ProjectedSplat<T>],
    background: &Vector3<T>,
    training: bool,
    mode: ExecMode,
) -> RenderOutput<T> {
    let grid = binning.grid;
    let tiles = grid.num_tiles() as u32;
    let tile_results: Vec<TileResult<T>> = match mode {
        ExecMode::Parallel => (0..tiles)
            .into_par_iter()
            .map(|t| render_tile(binning, splats, t))
            .collect(),
        ExecMode::Deterministic => (0..tiles)
            .map(|t| render_tile(binning, splats, t))
            .collect(),
    };

    let mut image = Image::new(grid.width, grid.height);
    let n = image.num_pixels();
    let (mut final_transmittance, mut last_contributor) = if training {
        (vec![T::zero(); n], vec![0u32; n])
    } else {
        (Vec::new(), Vec::new())
    };
    for res in tile_results {
        let (x0, y0, x1, _) = grid.tile_bounds(res.tile);
        let tw = x1 - x0;
        for (i, p) in res.pixels.iter().enumerate() {
            let (x, y) = (x0 + i as u32 % tw, y0 + i as u32 / tw);
            image.set_pixel(x, y, p.color + background * p.transmittance);
            if training {
                let idx = (y * grid.width + x) as usize;
                final_transmittance[idx] = p.transmittance;
                last_contributor[idx] = p.last;
            }
        }
    }
    RenderOutput {
        image,
        final_transmittance,
        last_contributor,
    }
}

fn render_tile<T: Real>(
    binning: &TileBinning,
    splats: &[ProjectedSplat<T>],
    tile: u32,
) -> TileResult<T> {
    let (x0, y0, x1, y1) = binning.grid.tile_bounds(tile);
    let tw = x1 - x0;
    let mut pixels = vec![
        PixelState {
            color: Vector3::zeros(),
            transmittance: T::one(),
            last: 0,
            done: false,
        };
        (tw * (y1 - y0)) as usize
    ];
    let ids = binning.tile_splats(tile);
    let t_min = T::lit(TRANSMITTANCE_MIN);
    let mut active = pixels.len();
    let mut local: Vec<ProjectedSplat<T>> = Vec::with_capacity(BATCH.min(ids.len()));

    for (b, batch) in ids.chunks(BATCH).enumerate() {
        if active == 0 {
            break;
        }
        let base = b * BATCH;
        local.clear();
        local.extend(batch.iter().map(|&id| splats[id as usize].clone()));
        for (i, px) in pixels.iter_mut().enumerate() {
            if px.done {
                continue;
            }
            let (x, y) = (x0 + i as u32 % tw, y0 + i as u32 / tw);
            for (j, s) in local.iter().enumerate() {
                let Some(w) = splat_weight(s, x, y) else {
                    continue;
                };
                let next_t = px.transmittance * (T::one() - w.alpha);
                if next_t < t_min {
                    px.done = true;
                    active -= 1;
                    break;
                }
                px.color += s.color * (w.alpha * px.transmittance);
                px.transmittance = next_t;
                px.last = (base + j + 1) as u32;
            }
        }
    }
    TileResult { tile, pixels }
}

use super::binning::TileBinning;
use super::forward::RenderOutput;
use super::ExecMode;
use crate::gaussian::ProjectedSplat;
use crate::gradients::{backward_blend, SplatGrads};
use crate::image::Image;
use crate::real::Real;
use nalgebra::Vector3;
use rayon::prelude::*;

/// Loss gradients w.r.t. every splat's 2D mean, conic, color and alpha.
///
/// Re-traverses each tile's sorted range back to front. Each pixel starts at
/// its recorded last contributor, so it never visits splats it did not blend.
pub fn render_backward<T: Real>(
    d_image: &Image<T>,
    output: &RenderOutput<T>,
    binning: &TileBinning,
    splats: &[ProjectedSplat<T>],
    background: &Vector3<T>,
    mode: ExecMode,
) -> Vec<SplatGrads<T>> {
    assert!(
        output.is_training(),
        "backward pass needs a training-mode forward pass"
    );
    let tiles = binning.grid.num_tiles() as u32;
    let n = splats.len();
    let accumulate_tile = |grads: &mut Vec<SplatGrads<T>>, tile: u32| {
        let ids = binning.tile_splats(tile);
        if ids.is_empty() {
            return;
        }
        let (x0, y0, x1, y1) = binning.grid.tile_bounds(tile);
        for y in y0..y1 {
            for x in x0..x1 {
                let idx = (y * binning.grid.width + x) as usize;
                let last = output.last_contributor[idx] as usize;
                if last == 0 {
                    continue;
                }
                backward_blend(
                    (x, y),
                    &d_image.pixel(x, y),
                    output.final_transmittance[idx],
                    &ids[..last],
                    splats,
                    background,
                    grads,
                );
            }
        }
    };

    match mode {
        ExecMode::Deterministic => {
            let mut grads = vec![SplatGrads::zero(); n];
            for t in 0..tiles {
                accumulate_tile(&mut grads, t);
            }
            grads
        }
        ExecMode::Parallel => (0..tiles)
            .into_par_iter()
            .fold(
                || vec![SplatGrads::zero(); n],
                |mut g, t| {
                    accumulate_tile(&mut g, t);
                    g
                },
            )
            .reduce(
                || vec![SplatGrads::zero(); n],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            ),
    }
}

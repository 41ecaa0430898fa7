//! End-to-end frame rendering and its backward pass over a Gaussian set.

use crate::error::Result;
use crate::gaussian::{project, Camera, Gaussian, ProjectedSplat};
use crate::gradients::{backward_projection, GaussianGrads};
use crate::image::Image;
use crate::raster::{
    bin_and_sort, render_backward, render_forward, ExecMode, RenderOutput, TileBinning,
};
use crate::real::Real;
use nalgebra::Vector3;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct RenderSettings<T: Real> {
    pub background: Vector3<T>,
    pub sh_degree: usize,
    pub mode: ExecMode,
}

impl<T: Real> Default for RenderSettings<T> {
    fn default() -> Self {
        Self {
            background: Vector3::zeros(),
            sh_degree: crate::gaussian::MAX_SH_DEGREE,
            mode: ExecMode::Parallel,
        }
    }
}

/// Everything produced by rendering one view, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Frame<T: Real> {
    pub camera: Camera<T>,
    /// Splats that survived culling.
    pub splats: Vec<ProjectedSplat<T>>,
    /// Index into the Gaussian list for each entry of `splats`.
    pub sources: Vec<usize>,
    pub binning: TileBinning,
    pub output: RenderOutput<T>,
}

impl<T: Real> Frame<T> {
    pub fn image(&self) -> &Image<T> {
        &self.output.image
    }
}

pub fn project_all<T: Real>(
    gaussians: &[Gaussian<T>],
    camera: &Camera<T>,
    sh_degree: usize,
    mode: ExecMode,
) -> (Vec<ProjectedSplat<T>>, Vec<usize>) {
    let projected: Vec<Option<ProjectedSplat<T>>> = match mode {
        ExecMode::Parallel => gaussians
            .par_iter()
            .map(|g| project(g, camera, sh_degree))
            .collect(),
        ExecMode::Deterministic => gaussians
            .iter()
            .map(|g| project(g, camera, sh_degree))
            .collect(),
    };
    let mut splats = Vec::new();
    let mut sources = Vec::new();
    for (i, p) in projected.into_iter().enumerate() {
        if let Some(s) = p {
            splats.push(s);
            sources.push(i);
        }
    }
    (splats, sources)
}

/// Projects, bins, sorts and blends `gaussians` as seen from `camera`.
pub fn render<T: Real>(
    gaussians: &[Gaussian<T>],
    camera: &Camera<T>,
    settings: &RenderSettings<T>,
    training: bool,
) -> Result<Frame<T>> {
    let (splats, sources) = project_all(gaussians, camera, settings.sh_degree, settings.mode);
    let binning = bin_and_sort(&splats, camera.width, camera.height)?;
    let output = render_forward(
        &binning,
        &splats,
        &settings.background,
        training,
        settings.mode,
    );
    Ok(Frame {
        camera: camera.clone(),
        splats,
        sources,
        binning,
        output,
    })
}

/// Per-Gaussian parameter gradients of a loss whose gradient w.r.t. the
/// rendered image is `d_image`. Culled Gaussians get exact zeros.
pub fn backward<T: Real>(
    gaussians: &[Gaussian<T>],
    frame: &Frame<T>,
    settings: &RenderSettings<T>,
    d_image: &Image<T>,
) -> Result<Vec<GaussianGrads<T>>> {
    frame.output.image.same_size(d_image)?;
    let splat_grads = render_backward(
        d_image,
        &frame.output,
        &frame.binning,
        &frame.splats,
        &settings.background,
        settings.mode,
    );
    let per_splat = |i: usize| {
        backward_projection(
            &gaussians[frame.sources[i]],
            &frame.camera,
            settings.sh_degree,
            &frame.splats[i],
            &splat_grads[i],
        )
    };
    let chained: Vec<GaussianGrads<T>> = match settings.mode {
        ExecMode::Parallel => (0..frame.splats.len())
            .into_par_iter()
            .map(per_splat)
            .collect(),
        ExecMode::Deterministic => (0..frame.splats.len()).map(per_splat).collect(),
    };
    let mut grads = vec![GaussianGrads::zero(); gaussians.len()];
    for (src, g) in frame.sources.iter().zip(chained) {
        grads[*src] = g;
    }
    Ok(grads)
}

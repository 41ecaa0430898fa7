use super::key::{radix_sort_pairs, tile_index_bits, SortKey};
use crate::error::{Error, Result};
use crate::gaussian::{PixelRect, ProjectedSplat};
use crate::real::Real;
use std::ops::Range;

pub const TILE_SIZE: u32 = 16;

/// Partition of the image into 16×16 pixel tiles, numbered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileGrid {
    pub width: u32,
    pub height: u32,
    pub tiles_x: u32,
    pub tiles_y: u32,
}

impl TileGrid {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            tiles_x: width.div_ceil(TILE_SIZE),
            tiles_y: height.div_ceil(TILE_SIZE),
        }
    }

    #[inline]
    pub fn num_tiles(&self) -> u64 {
        self.tiles_x as u64 * self.tiles_y as u64
    }

    /// Pixel bounds `[x0, x1) × [y0, y1)` of `tile`.
    pub fn tile_bounds(&self, tile: u32) -> (u32, u32, u32, u32) {
        let tx = tile % self.tiles_x;
        let ty = tile / self.tiles_x;
        let x0 = tx * TILE_SIZE;
        let y0 = ty * TILE_SIZE;
        (
            x0,
            y0,
            (x0 + TILE_SIZE).min(self.width),
            (y0 + TILE_SIZE).min(self.height),
        )
    }

    #[inline]
    pub fn tile_of(&self, x: u32, y: u32) -> u32 {
        (y / TILE_SIZE) * self.tiles_x + x / TILE_SIZE
    }

    /// Tiles holding at least one pixel of `rect`, iterated row-major.
    pub fn tiles_touching(&self, rect: &PixelRect) -> impl Iterator<Item = u32> + '_ {
        let (tx0, tx1) = (rect.x0 / TILE_SIZE, rect.x1 / TILE_SIZE);
        let (ty0, ty1) = (rect.y0 / TILE_SIZE, rect.y1 / TILE_SIZE);
        (ty0..=ty1).flat_map(move |ty| (tx0..=tx1).map(move |tx| ty * self.tiles_x + tx))
    }

    fn count_touching(&self, rect: &PixelRect) -> u64 {
        let w = (rect.x1 / TILE_SIZE - rect.x0 / TILE_SIZE + 1) as u64;
        let h = (rect.y1 / TILE_SIZE - rect.y0 / TILE_SIZE + 1) as u64;
        w * h
    }
}

/// Depth-sorted splat instances grouped by tile.
#[derive(Clone, Debug)]
pub struct TileBinning {
    pub grid: TileGrid,
    /// Sorted packed keys, one per instance.
    pub keys: Vec<u64>,
    /// Splat index of each instance, parallel to `keys`.
    pub splat_ids: Vec<u32>,
    /// Per-tile `[start, end)` into `keys`/`splat_ids`.
    pub ranges: Vec<Range<u32>>,
}

impl TileBinning {
    /// Splat indices of `tile`, front to back.
    #[inline]
    pub fn tile_splats(&self, tile: u32) -> &[u32] {
        let r = &self.ranges[tile as usize];
        &self.splat_ids[r.start as usize..r.end as usize]
    }

    pub fn num_instances(&self) -> usize {
        self.keys.len()
    }
}

/// Instantiates each splat once per tile its pixel rect touches, builds the
/// keys, radix-sorts them and identifies per-tile ranges.
pub fn bin_and_sort<T: Real>(
    splats: &[ProjectedSplat<T>],
    width: u32,
    height: u32,
) -> Result<TileBinning> {
    let grid = TileGrid::new(width, height);
    let num_tiles = grid.num_tiles();
    let tile_bits = tile_index_bits(num_tiles)?;
    if splats.len() > u32::MAX as usize {
        return Err(Error::ResourceLimit(format!(
            "{} splats exceed 32-bit indexing",
            splats.len()
        )));
    }

    let total: u64 = splats.iter().map(|s| grid.count_touching(&s.rect)).sum();
    if total > u32::MAX as u64 {
        return Err(Error::ResourceLimit(format!(
            "{total} tile instances exceed 32-bit indexing"
        )));
    }
    let total = total as usize;
    let mut keys = Vec::new();
    let mut splat_ids = Vec::new();
    keys.try_reserve_exact(total)
        .and_then(|_| splat_ids.try_reserve_exact(total))
        .map_err(|e| {
            Error::ResourceLimit(format!("cannot allocate {total} tile instances: {e}"))
        })?;

    for (i, s) in splats.iter().enumerate() {
        let depth = s.depth.as_f32();
        for tile in grid.tiles_touching(&s.rect) {
            keys.push(SortKey::new(tile, depth).0);
            splat_ids.push(i as u32);
        }
    }
    radix_sort_pairs(&mut keys, &mut splat_ids, 32 + tile_bits);

    let mut ranges = vec![0..0; num_tiles as usize];
    let mut start = 0usize;
    while start < keys.len() {
        let tile = SortKey(keys[start]).tile();
        let mut end = start + 1;
        while end < keys.len() && SortKey(keys[end]).tile() == tile {
            end += 1;
        }
        ranges[tile as usize] = start as u32..end as u32;
        start = end;
    }

    Ok(TileBinning {
        grid,
        keys,
        splat_ids,
        ranges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector2, Vector3};

    fn splat(x: f64, y: f64, radius: u32, depth: f64, w: u32, h: u32) -> ProjectedSplat<f64> {
        let mean2d = Vector2::new(x, y);
        ProjectedSplat {
            mean2d,
            conic: [1.0, 0.0, 1.0],
            cov2d: [1.0, 0.0, 1.0],
            depth,
            radius,
            rect: PixelRect::around(&mean2d, radius, w, h).unwrap(),
            color: Vector3::zeros(),
            alpha: 0.5,
            min_power: f64::NEG_INFINITY,
        }
    }

    #[test]
    fn single_small_splat_lands_in_one_tile() {
        let b = bin_and_sort(&[splat(8.0, 8.0, 1, 1.0, 32, 32)], 32, 32).unwrap();
        assert_eq!(b.num_instances(), 1);
        assert_eq!(b.ranges[0], 0..1);
        assert!(b.ranges[1..].iter().all(|r| r.is_empty()));
    }

    #[test]
    fn corner_splat_covers_four_tiles_at_one_depth() {
        let b = bin_and_sort(&[splat(16.0, 16.0, 20, 2.5, 32, 32)], 32, 32).unwrap();
        assert_eq!(b.num_instances(), 4);
        for t in 0..4 {
            assert_eq!(b.tile_splats(t), &[0]);
        }
        assert!(b.keys.iter().all(|&k| SortKey(k).depth() == 2.5));
    }

    #[test]
    fn ranges_are_depth_sorted() {
        let splats: Vec<_> = [3.0, 1.0, 2.0]
            .iter()
            .map(|&d| splat(10.0, 10.0, 2, d, 32, 32))
            .collect();
        let b = bin_and_sort(&splats, 32, 32).unwrap();
        assert_eq!(b.tile_splats(0), &[1, 2, 0]);
    }

    #[test]
    fn equal_depths_keep_input_order() {
        let splats: Vec<_> = (0..5).map(|_| splat(10.0, 10.0, 2, 1.0, 32, 32)).collect();
        let b = bin_and_sort(&splats, 32, 32).unwrap();
        assert_eq!(b.tile_splats(0), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn partial_edge_tiles() {
        let g = TileGrid::new(40, 20);
        assert_eq!((g.tiles_x, g.tiles_y), (3, 2));
        assert_eq!(g.tile_bounds(5), (32, 16, 40, 20));
        assert_eq!(g.tile_of(39, 19), 5);
    }
}

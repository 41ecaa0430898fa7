//! Exact k-nearest-neighbor distances on a uniform grid.

use nalgebra::Vector3;

/// Mean Euclidean distance from each point to its `k` nearest other points
/// (fewer when the set is smaller). `None` for a lone point.
pub fn mean_knn_distance(points: &[Vector3<f64>], k: usize) -> Vec<Option<f64>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.min(n - 1);
    if k == 0 {
        return vec![None; n];
    }
    let grid = Grid::new(points);
    (0..n)
        .map(|i| {
            let d = grid.knn_sq(points, i, k);
            Some(d.iter().map(|v| v.sqrt()).sum::<f64>() / k as f64)
        })
        .collect()
}

struct Grid {
    lo: Vector3<f64>,
    cell: f64,
    dims: [i64; 3],
    cells: Vec<Vec<u32>>,
}

impl Grid {
    fn new(points: &[Vector3<f64>]) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ext = (hi - lo).map(|e| e.max(1e-9));
        // About two points per cell for a uniform spread; never more cells than points.
        let volume = ext.x * ext.y * ext.z;
        let mut cell = (2.0 * volume / points.len() as f64).cbrt();
        let max_ext = ext.max();
        cell = cell.max(max_ext / 1024.0);
        let dims_for = |c: f64| ext.map(|e| ((e / c).floor() as i64 + 1).max(1));
        let mut d = dims_for(cell);
        while (d.x * d.y * d.z) as usize > 2 * points.len() + 8 {
            cell *= 1.25;
            d = dims_for(cell);
        }
        let dims = [d.x, d.y, d.z];
        let mut cells = vec![Vec::new(); (dims[0] * dims[1] * dims[2]) as usize];
        let mut grid = Self {
            lo,
            cell,
            dims,
            cells: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let c = grid.coord(p);
            cells[grid.flat(c)].push(i as u32);
        }
        grid.cells = cells;
        grid
    }

    fn coord(&self, p: &Vector3<f64>) -> [i64; 3] {
        std::array::from_fn(|a| {
            (((p[a] - self.lo[a]) / self.cell).floor() as i64).clamp(0, self.dims[a] - 1)
        })
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        ((c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]) as usize
    }

    /// Squared distances to the `k` nearest other points, ascending.
    fn knn_sq(&self, points: &[Vector3<f64>], query: usize, k: usize) -> Vec<f64> {
        let q = points[query];
        let c = self.coord(&q);
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        let max_ring = self.dims.iter().copied().max().unwrap_or(1);
        for r in 0..=max_ring {
            for z in c[2] - r..=c[2] + r {
                for y in c[1] - r..=c[1] + r {
                    for x in c[0] - r..=c[0] + r {
                        let ring = (x - c[0]).abs().max((y - c[1]).abs()).max((z - c[2]).abs());
                        if ring != r
                            || x < 0
                            || y < 0
                            || z < 0
                            || x >= self.dims[0]
                            || y >= self.dims[1]
                            || z >= self.dims[2]
                        {
                            continue;
                        }
                        for &j in &self.cells[self.flat([x, y, z])] {
                            if j as usize == query {
                                continue;
                            }
                            let d = (points[j as usize] - q).norm_squared();
                            if best.len() < k || d < best[k - 1] {
                                let pos = best.partition_point(|v| *v <= d);
                                best.insert(pos, d);
                                best.truncate(k);
                            }
                        }
                    }
                }
            }
            // Anything in ring r + 1 or beyond is at least r cells away.
            let reach = r as f64 * self.cell;
            if best.len() == k && best[k - 1] <= reach * reach {
                break;
            }
        }
        best
    }
}

use std::sync::OnceLock;

use super::{bbox, euclid};

const TARGET_OCCUPANCY: usize = 8;
const MIN_CELL_CAP: usize = 4096;
/// Searches still open after this many rings fall back to the k-d tree.
const FAR_RING: usize = 4;

/// Uniform-grid nearest-neighbour index over a fixed set of points.
///
/// Cells are stored in compressed-row form. Queries outside the grid are
/// clamped to the border cell; the ring bound stays valid because projecting
/// onto the bounding box never increases per-axis separation. Queries still
/// open after a few rings go to a k-d tree built on first use.
#[derive(Debug, Clone)]
pub struct GridIndex {
    points: Vec<[f64; 2]>,
    lo: [f64; 2],
    h: f64,
    nx: usize,
    ny: usize,
    cell_start: Vec<usize>,
    order: Vec<u32>,
    tree: OnceLock<KdTree>,
}

impl GridIndex {
    /// `points` must be nonempty.
    pub fn new(points: &[[f64; 2]]) -> Self {
        assert!(!points.is_empty(), "GridIndex needs at least one point");
        let n = points.len();
        let (lo, hi) = bbox(points);
        let wx = hi[0] - lo[0];
        let wy = hi[1] - lo[1];
        let cap = (4 * n).max(MIN_CELL_CAP);
        let extent = wx.max(wy);
        if extent == 0.0 {
            return Self::build(points, lo, 1.0, 1, 1);
        }
        let mut h = if wx > 0.0 && wy > 0.0 { (wx * wy / n as f64).sqrt() } else { extent / n as f64 };
        // Cells never exceed `cap` so the grid stays O(n) in memory.
        h = h.max(cell_size_for_cap(wx, wy, cap));
        let mut grid = Self::build_h(points, lo, wx, wy, h);
        loop {
            let occupied = grid.cell_start.windows(2).filter(|w| w[1] > w[0]).count();
            if n <= TARGET_OCCUPANCY * occupied {
                break;
            }
            let h2 = h / 2.0;
            if cells_for(wx, wy, h2) > cap {
                break;
            }
            h = h2;
            grid = Self::build_h(points, lo, wx, wy, h);
        }
        grid
    }

    fn build_h(points: &[[f64; 2]], lo: [f64; 2], wx: f64, wy: f64, h: f64) -> Self {
        let nx = ((wx / h).floor() as usize + 1).max(1);
        let ny = ((wy / h).floor() as usize + 1).max(1);
        Self::build(points, lo, h, nx, ny)
    }

    fn build(points: &[[f64; 2]], lo: [f64; 2], h: f64, nx: usize, ny: usize) -> Self {
        let mut counts = vec![0usize; nx * ny + 1];
        let cells: Vec<usize> = points
            .iter()
            .map(|p| {
                let (i, j) = cell_of(p, lo, h, nx, ny);
                j * nx + i
            })
            .collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut order = vec![0u32; points.len()];
        for (idx, &c) in cells.iter().enumerate() {
            order[fill[c]] = idx as u32;
            fill[c] += 1;
        }
        GridIndex { points: points.to_vec(), lo, h, nx, ny, cell_start: counts, order, tree: OnceLock::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_size(&self) -> f64 {
        self.h
    }

    /// Exact distance from `q` to the nearest indexed point.
    pub fn nearest_distance(&self, q: &[f64; 2]) -> f64 {
        self.nearest_distance_above(q, f64::NEG_INFINITY)
    }

    /// Nearest distance from `q`, abandoning the search as soon as some point
    /// within `cutoff` is found. The return value is exact whenever it exceeds
    /// `cutoff`; otherwise it is only guaranteed to be `<= cutoff`.
    pub fn nearest_distance_above(&self, q: &[f64; 2], cutoff: f64) -> f64 {
        let (ci, cj) = cell_of(q, self.lo, self.h, self.nx, self.ny);
        let max_ring = ci.max(self.nx - 1 - ci).max(cj).max(self.ny - 1 - cj);
        let mut best = f64::INFINITY;
        for r in 0..=max_ring {
            if r == FAR_RING {
                let tree = self.tree.get_or_init(|| KdTree::new(&self.points));
                tree.nearest_above(&self.points, q, cutoff, &mut best);
                return best;
            }
            if self.scan_ring(q, ci, cj, r, cutoff, &mut best) {
                return best;
            }
            // Every unvisited point is farther than r*h along some axis.
            if best <= r as f64 * self.h {
                break;
            }
        }
        best
    }

    /// Scans cells at Chebyshev ring `r`; returns true on early exit.
    fn scan_ring(&self, q: &[f64; 2], ci: usize, cj: usize, r: usize, cutoff: f64, best: &mut f64) -> bool {
        let (ci, cj, r) = (ci as isize, cj as isize, r as isize);
        let j_lo = (cj - r).max(0);
        let j_hi = (cj + r).min(self.ny as isize - 1);
        for j in j_lo..=j_hi {
            let edge_row = j == cj - r || j == cj + r;
            if edge_row {
                let i_lo = (ci - r).max(0);
                let i_hi = (ci + r).min(self.nx as isize - 1);
                for i in i_lo..=i_hi {
                    if self.scan_cell(q, i as usize, j as usize, cutoff, best) {
                        return true;
                    }
                }
            } else {
                for i in [ci - r, ci + r] {
                    if i >= 0 && i < self.nx as isize && self.scan_cell(q, i as usize, j as usize, cutoff, best) {
                        return true;
                    }
                    if r == 0 {
                        break;
                    }
                }
            }
        }
        false
    }

    #[inline]
    fn scan_cell(&self, q: &[f64; 2], i: usize, j: usize, cutoff: f64, best: &mut f64) -> bool {
        let c = j * self.nx + i;
        for &k in &self.order[self.cell_start[c]..self.cell_start[c + 1]] {
            let d = euclid(q, &self.points[k as usize]);
            if d < *best {
                *best = d;
                if d <= cutoff {
                    return true;
                }
            }
        }
        false
    }
}

const LEAF_SIZE: usize = 8;
/// Box bounds are inflated by this relative amount before pruning so that
/// rounding never discards the true nearest point.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
struct KdNode {
    lo: [f64; 2],
    hi: [f64; 2],
    start: u32,
    end: u32,
    /// Child indices, or `u32::MAX` for a leaf.
    left: u32,
    right: u32,
}

/// Static k-d tree with per-node bounding boxes, split at the median of
/// the longer box side.
#[derive(Debug, Clone)]
struct KdTree {
    nodes: Vec<KdNode>,
    order: Vec<u32>,
}

impl KdTree {
    fn new(points: &[[f64; 2]]) -> Self {
        let mut tree = KdTree { nodes: Vec::new(), order: (0..points.len() as u32).collect() };
        tree.build(points, 0, points.len());
        tree
    }

    fn build(&mut self, points: &[[f64; 2]], start: usize, end: usize) -> u32 {
        let ids: Vec<[f64; 2]> = self.order[start..end].iter().map(|&k| points[k as usize]).collect();
        let (lo, hi) = bbox(&ids);
        let id = self.nodes.len() as u32;
        self.nodes.push(KdNode { lo, hi, start: start as u32, end: end as u32, left: u32::MAX, right: u32::MAX });
        if end - start > LEAF_SIZE && (hi[0] > lo[0] || hi[1] > lo[1]) {
            let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
            let mid = (end - start) / 2;
            self.order[start..end].select_nth_unstable_by(mid, |a, b| points[*a as usize][axis].total_cmp(&points[*b as usize][axis]));
            let l = self.build(points, start, start + mid);
            let r = self.build(points, start + mid, end);
            self.nodes[id as usize].left = l;
            self.nodes[id as usize].right = r;
        }
        id
    }

    fn box_distance(n: &KdNode, q: &[f64; 2]) -> f64 {
        let dx = (n.lo[0] - q[0]).max(q[0] - n.hi[0]).max(0.0);
        let dy = (n.lo[1] - q[1]).max(q[1] - n.hi[1]).max(0.0);
        (dx * dx + dy * dy).sqrt() * (1.0 - PRUNE_SLACK)
    }

    /// Lowers `best` to the nearest distance, stopping once it is `<= cutoff`.
    fn nearest_above(&self, points: &[[f64; 2]], q: &[f64; 2], cutoff: f64, best: &mut f64) {
        let mut stack: Vec<(u32, f64)> = vec![(0, Self::box_distance(&self.nodes[0], q))];
        while let Some((id, bound)) = stack.pop() {
            if bound >= *best {
                continue;
            }
            let n = &self.nodes[id as usize];
            if n.left == u32::MAX {
                for &k in &self.order[n.start as usize..n.end as usize] {
                    let d = euclid(q, &points[k as usize]);
                    if d < *best {
                        *best = d;
                        if d <= cutoff {
                            return;
                        }
                    }
                }
                continue;
            }
            let (a, b) = (n.left, n.right);
            let (da, db) = (Self::box_distance(&self.nodes[a as usize], q), Self::box_distance(&self.nodes[b as usize], q));
            // Nearer child on top of the stack.
            if da <= db {
                stack.push((b, db));
                stack.push((a, da));
            } else {
                stack.push((a, da));
                stack.push((b, db));
            }
        }
    }
}

fn cells_for(wx: f64, wy: f64, h: f64) -> usize {
    let nx = (wx / h).floor() + 1.0;
    let ny = (wy / h).floor() + 1.0;
    let c = nx * ny;
    if c > usize::MAX as f64 {
        usize::MAX
    } else {
        c as usize
    }
}

fn cell_size_for_cap(wx: f64, wy: f64, cap: usize) -> f64 {
    // Smallest h with (wx/h + 1)(wy/h + 1) <= cap, approximated conservatively.
    let cap = cap as f64;
    if wx > 0.0 && wy > 0.0 {
        let a = cap - 1.0;
        let b = -(wx + wy);
        let c = -(wx * wy);
        // Solve a u^2 + b u + c = 0 for u = h > 0 from (wx+h)(wy+h) = cap h^2.
        (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
    } else {
        (wx + wy) / (cap - 1.0)
    }
}

fn cell_of(p: &[f64; 2], lo: [f64; 2], h: f64, nx: usize, ny: usize) -> (usize, usize) {
    let fi = ((p[0] - lo[0]) / h).floor();
    let fj = ((p[1] - lo[1]) / h).floor();
    let i = if fi.is_nan() || fi < 0.0 { 0 } else { (fi as usize).min(nx - 1) };
    let j = if fj.is_nan() || fj < 0.0 { 0 } else { (fj as usize).min(ny - 1) };
    (i, j)
}

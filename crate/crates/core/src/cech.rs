//! Cech complex construction for a family of disk cells, both centralized
//! and as the union of per-cell local views discovered under the
//! right-hand rule.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{common_intersection_nonempty, disks_overlap, Disk, Tolerance};
use crate::homology::{Simplex, SimplicialComplex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CechError {
    #[error("inconsistent views: cell {0} reported with conflicting disk data")]
    InconsistentViews(CellId),
}

/// Identifier of a cell; doubles as the vertex id of its 0-simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A cell: an identified disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub disk: Disk,
}

impl Cell {
    pub fn new(id: u32, x: f64, y: f64, r: f64) -> Self {
        Self {
            id: CellId(id),
            disk: Disk::new(crate::geometry::Point2::new(x, y), r),
        }
    }
}

/// The right-hand rule: a strict total order on cells so that every
/// simplex is discovered by exactly one cell, its least element.
/// Ordered by x, then y, then id for coincident centers.
pub fn right_hand_precedes(a: &Cell, b: &Cell) -> bool {
    let (ax, ay) = (a.disk.center.x, a.disk.center.y);
    let (bx, by) = (b.disk.center.x, b.disk.center.y);
    (ax, ay, a.id) < (bx, by, b.id)
}

/// The simplices one cell discovers plus the disk data of every cell
/// mentioned, as exchanged between neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalView {
    pub owner: CellId,
    pub complex: SimplicialComplex,
    pub disks: BTreeMap<CellId, Disk>,
}

impl LocalView {
    pub fn single(cell: &Cell) -> Self {
        let mut complex = SimplicialComplex::new();
        complex.insert(Simplex::new(vec![cell.id.0]));
        let mut disks = BTreeMap::new();
        disks.insert(cell.id, cell.disk);
        Self {
            owner: cell.id,
            complex,
            disks,
        }
    }

    /// Unions another view's simplices and disk data into this one.
    pub fn absorb(&mut self, other: &LocalView) {
        for k in 0..=other.complex.top_dim().unwrap_or(0) {
            for s in other.complex.simplices(k) {
                self.complex.insert_unchecked(s.clone());
            }
        }
        for (id, disk) in &other.disks {
            self.disks.insert(*id, *disk);
        }
    }
}

/// Simplices discovered by `me` over its right-hand neighbors: the edges
/// to each right neighbor, and for 2 <= k <= dim_max every (k+1)-subset
/// of {me} and k right neighbors whose disks share a common point.
///
/// Subsets are grown incrementally; a candidate is only extended when the
/// smaller subset already intersects, which cannot lose simplices because
/// common intersection is anti-monotone under adding disks.
pub fn local_simplices(
    me: &Cell,
    right_neighbors: &[Cell],
    dim_max: usize,
    tol: Tolerance,
) -> LocalView {
    debug_assert!(right_neighbors
        .iter()
        .all(|n| right_hand_precedes(me, n) && disks_overlap(&me.disk, &n.disk, tol)));
    let mut view = LocalView::single(me);
    let mut rights: Vec<Cell> = right_neighbors.to_vec();
    rights.sort_by_key(|c| c.id);
    for n in &rights {
        view.disks.insert(n.id, n.disk);
        view.complex.insert(Simplex::new(vec![me.id.0, n.id.0]));
    }
    // frontier holds index sets into `rights` whose union with `me` has a
    // non-empty common intersection
    let mut frontier: Vec<Vec<usize>> = (0..rights.len()).map(|i| vec![i]).collect();
    for _k in 2..=dim_max {
        let mut next: Vec<Vec<usize>> = Vec::new();
        for subset in &frontier {
            let last = *subset.last().expect("non-empty subset");
            for cand in (last + 1)..rights.len() {
                let pairwise_ok = subset
                    .iter()
                    .all(|i| disks_overlap(&rights[*i].disk, &rights[cand].disk, tol));
                if !pairwise_ok {
                    continue;
                }
                let mut disks: Vec<Disk> = subset.iter().map(|i| rights[*i].disk).collect();
                disks.push(rights[cand].disk);
                disks.push(me.disk);
                if common_intersection_nonempty(&disks, tol).expect("non-empty family") {
                    let mut grown = subset.clone();
                    grown.push(cand);
                    let mut vertices: Vec<u32> = grown.iter().map(|i| rights[*i].id.0).collect();
                    vertices.push(me.id.0);
                    view.complex.insert(Simplex::new(vertices));
                    next.push(grown);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    view
}

/// Adjacency of the strict pairwise-overlap graph.
fn overlap_adjacency(cells: &[Cell], tol: Tolerance) -> Vec<Vec<bool>> {
    let n = cells.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if disks_overlap(&cells[i].disk, &cells[j].disk, tol) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}

/// Expands cliques of `adj` level by level, keeping a set only when
/// `accept` holds for it; `accept` must be anti-monotone. Index sets are
/// grown in ascending order so each candidate is generated exactly once,
/// which keeps the output deterministic under parallel evaluation.
fn expand_cliques<F>(n: usize, adj: &[Vec<bool>], dim_max: usize, accept: F) -> Vec<Vec<Vec<usize>>>
where
    F: Fn(&[usize]) -> bool + Sync + Send,
{
    let mut levels: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i][j] {
                edges.push(vec![i, j]);
            }
        }
    }
    levels.push(edges);
    for k in 2..=dim_max {
        let prev = &levels[k - 2];
        let grow = |subset: &Vec<usize>| -> Vec<Vec<usize>> {
            let last = *subset.last().expect("non-empty subset");
            let mut out = Vec::new();
            for cand in (last + 1)..n {
                if subset.iter().all(|i| adj[*i][cand]) {
                    let mut grown = subset.clone();
                    grown.push(cand);
                    if accept(&grown) {
                        out.push(grown);
                    }
                }
            }
            out
        };
        let next: Vec<Vec<usize>> = map_flatten(prev, grow);
        if next.is_empty() {
            levels.push(next);
            break;
        }
        levels.push(next);
    }
    levels
}

#[cfg(feature = "parallel")]
fn map_flatten<F>(items: &[Vec<usize>], f: F) -> Vec<Vec<usize>>
where
    F: Fn(&Vec<usize>) -> Vec<Vec<usize>> + Sync + Send,
{
    use rayon::prelude::*;
    // collect the indexed map first so the concatenation order never
    // depends on the rayon schedule
    let nested: Vec<Vec<Vec<usize>>> = items.par_iter().map(f).collect();
    nested.into_iter().flatten().collect()
}

#[cfg(not(feature = "parallel"))]
fn map_flatten<F>(items: &[Vec<usize>], f: F) -> Vec<Vec<usize>>
where
    F: Fn(&Vec<usize>) -> Vec<Vec<usize>> + Sync + Send,
{
    items.iter().flat_map(|s| f(s)).collect()
}

fn build_cech_from_levels(cells: &[Cell], levels: Vec<Vec<Vec<usize>>>) -> SimplicialComplex {
    let mut complex = SimplicialComplex::new();
    for c in cells {
        complex.insert(Simplex::new(vec![c.id.0]));
    }
    for level in levels {
        for subset in level {
            let vertices: Vec<u32> = subset.iter().map(|i| cells[*i].id.0).collect();
            complex.insert(Simplex::new(vertices));
        }
    }
    complex
}

/// The Cech complex of the cells, truncated at `dim_max`: one k-simplex
/// per (k+1)-subset of disks with a non-empty common intersection.
///
/// Uses the pairwise-overlap graph to prune: only supersets of
/// intersecting subsets are tested. Runs the level expansion in parallel
/// when the `parallel` feature is enabled; the result is identical to
/// [`build_cech_centralized_seq`].
pub fn build_cech_centralized(cells: &[Cell], dim_max: usize, tol: Tolerance) -> SimplicialComplex {
    let adj = overlap_adjacency(cells, tol);
    let accept = |subset: &[usize]| -> bool {
        let disks: Vec<Disk> = subset.iter().map(|i| cells[*i].disk).collect();
        common_intersection_nonempty(&disks, tol).expect("non-empty family")
    };
    let levels = expand_cliques(cells.len(), &adj, dim_max, accept);
    build_cech_from_levels(cells, levels)
}

/// Sequential reference path for [`build_cech_centralized`], available
/// regardless of the `parallel` feature. Used by the benchmark suite.
pub fn build_cech_centralized_seq(
    cells: &[Cell],
    dim_max: usize,
    tol: Tolerance,
) -> SimplicialComplex {
    let adj = overlap_adjacency(cells, tol);
    let accept = |subset: &[usize]| -> bool {
        let disks: Vec<Disk> = subset.iter().map(|i| cells[*i].disk).collect();
        common_intersection_nonempty(&disks, tol).expect("non-empty family")
    };
    let mut levels: Vec<Vec<Vec<usize>>> = Vec::new();
    let n = cells.len();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if adj[i][j] {
                edges.push(vec![i, j]);
            }
        }
    }
    levels.push(edges);
    for k in 2..=dim_max {
        let mut next = Vec::new();
        for subset in &levels[k - 2] {
            let last = *subset.last().expect("non-empty subset");
            for cand in (last + 1)..n {
                if subset.iter().all(|i| adj[*i][cand]) {
                    let mut grown = subset.clone();
                    grown.push(cand);
                    if accept(&grown) {
                        next.push(grown);
                    }
                }
            }
        }
        let stop = next.is_empty();
        levels.push(next);
        if stop {
            break;
        }
    }
    build_cech_from_levels(cells, levels)
}

/// Unions per-cell views into the global complex, enforcing face closure.
/// Views reporting conflicting disk data for the same cell are rejected.
pub fn merge_views(views: &[LocalView], dim_max: usize) -> Result<SimplicialComplex, CechError> {
    let mut disks: BTreeMap<CellId, Disk> = BTreeMap::new();
    for view in views {
        for (id, disk) in &view.disks {
            match disks.get(id) {
                Some(seen) if seen != disk => return Err(CechError::InconsistentViews(*id)),
                Some(_) => {}
                None => {
                    disks.insert(*id, *disk);
                }
            }
        }
    }
    let mut merged = SimplicialComplex::new();
    for view in views {
        for k in 0..=view.complex.top_dim().unwrap_or(0) {
            for s in view.complex.simplices(k) {
                merged.insert(s.clone());
            }
        }
    }
    merged.truncate(dim_max);
    Ok(merged)
}

/// One simplex per line as space-separated sorted vertex ids, ordered by
/// dimension then lexicographically.
pub fn complex_to_text(x: &SimplicialComplex) -> String {
    let mut out = String::new();
    for k in 0..=x.top_dim().unwrap_or(0) {
        for s in x.simplices(k) {
            out.push_str(&s.to_string());
            out.push('\n');
        }
    }
    out
}

/// Seeded uniform deployment: `count` cells with centers in the box and
/// radii in `r_range`. Stream 0 of the scenario seed is reserved for
/// deployment so the draw is independent of protocol timers.
pub fn random_cells(seed: u64, count: u32, bbox: [f64; 4], r_range: [f64; 2]) -> Vec<Cell> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let [x0, y0, x1, y1] = bbox;
    let [r0, r1] = r_range;
    (0..count)
        .map(|id| {
            let x = rng.random_range(x0..=x1);
            let y = rng.random_range(y0..=y1);
            let r = rng.random_range(r0..=r1);
            Cell::new(id, x, y, r)
        })
        .collect()
}

/// The seven-cell deployment used throughout the tests: a four-cell
/// cluster sharing a common point on the left and a four-cell ring
/// enclosing a coverage hole on the right.
pub fn example_seven_cells() -> Vec<Cell> {
    vec![
        Cell::new(0, 0.0, 1.05, 0.8),
        Cell::new(1, -0.1, 0.15, 0.6),
        Cell::new(2, 0.6, 0.0, 0.6),
        Cell::new(3, 1.4, 0.15, 0.45),
        Cell::new(4, 2.2, 0.15, 0.5),
        Cell::new(5, 2.15, 1.15, 0.65),
        Cell::new(6, 0.9, 0.9, 0.8),
    ]
}

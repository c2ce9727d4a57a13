//! Simplicial homology over GF(2): abstract complexes, boundary matrices,
//! ranks by Gaussian elimination, and Betti numbers.
//!
//! Coefficients are taken in GF(2), which matches the integer Betti numbers
//! in dimensions 0 and 1 for nerves of planar disks (torsion-free) and
//! removes orientation bookkeeping.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("complex not closed: missing face {0}")]
    NotClosed(Simplex),
}

/// A simplex as a strictly increasing list of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Simplex {
    vertices: Vec<u32>,
}

impl Simplex {
    /// Builds a simplex from any vertex order; duplicates are rejected.
    pub fn new(mut vertices: Vec<u32>) -> Self {
        vertices.sort_unstable();
        assert!(
            vertices.windows(2).all(|w| w[0] < w[1]),
            "duplicate vertex in simplex"
        );
        assert!(!vertices.is_empty(), "empty simplex");
        Self { vertices }
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn contains(&self, v: u32) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// The (dim-1)-faces, each obtained by dropping one vertex. A vertex
    /// has no facets.
    pub fn facets(&self) -> impl Iterator<Item = Simplex> + '_ {
        let n = if self.vertices.len() > 1 {
            self.vertices.len()
        } else {
            0
        };
        (0..n).map(move |skip| {
            let vs = self
                .vertices
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| *v)
                .collect();
            Simplex { vertices: vs }
        })
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.vertices {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// A face-closed collection of simplices, grouped by dimension.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimplicialComplex {
    dims: Vec<BTreeSet<Simplex>>,
}

impl SimplicialComplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a simplex together with all of its faces.
    pub fn insert(&mut self, s: Simplex) {
        if s.dim() > 0 {
            for f in s.facets().collect::<Vec<_>>() {
                self.insert(f);
            }
        }
        self.insert_unchecked(s);
    }

    /// Inserts a single simplex without closing its faces. Only useful for
    /// constructing deliberately broken complexes in tests.
    pub fn insert_unchecked(&mut self, s: Simplex) {
        let d = s.dim();
        while self.dims.len() <= d {
            self.dims.push(BTreeSet::new());
        }
        self.dims[d].insert(s);
    }

    pub fn from_simplices<I: IntoIterator<Item = Simplex>>(simplices: I) -> Self {
        let mut c = Self::new();
        for s in simplices {
            c.insert(s);
        }
        c
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.dims.get(s.dim()).is_some_and(|set| set.contains(s))
    }

    /// Simplices of dimension `k` in sorted order.
    pub fn simplices(&self, k: usize) -> impl Iterator<Item = &Simplex> + '_ {
        self.dims.get(k).into_iter().flatten()
    }

    pub fn count(&self, k: usize) -> usize {
        self.dims.get(k).map_or(0, BTreeSet::len)
    }

    /// Highest dimension with at least one simplex, or None when empty.
    pub fn top_dim(&self) -> Option<usize> {
        self.dims.iter().rposition(|set| !set.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.dims.iter().all(BTreeSet::is_empty)
    }

    /// Counts per dimension, up to and including `top_dim`.
    pub fn counts(&self) -> Vec<usize> {
        (0..=self.top_dim().map_or(0, |d| d))
            .map(|k| self.count(k))
            .collect()
    }

    /// Drops every simplex of dimension greater than `dim_max`.
    pub fn truncate(&mut self, dim_max: usize) {
        self.dims.truncate(dim_max + 1);
    }

    pub fn validate_closed(&self) -> Result<(), HomologyError> {
        for k in 1..self.dims.len() {
            for s in &self.dims[k] {
                for f in s.facets() {
                    if !self.contains(&f) {
                        return Err(HomologyError::NotClosed(f));
                    }
                }
            }
        }
        Ok(())
    }
}

/// GF(2) matrix of the boundary operator from k-chains to (k-1)-chains.
/// Rows are indexed by the sorted (k-1)-simplices, columns by the sorted
/// k-simplices; the column of a simplex has a one at each of its facets.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    num_rows: usize,
    num_cols: usize,
    words_per_row: usize,
    rows: Vec<u64>,
}

impl BoundaryMatrix {
    pub fn rows(&self) -> usize {
        self.num_rows
    }

    pub fn cols(&self) -> usize {
        self.num_cols
    }

    pub fn bit(&self, r: usize, c: usize) -> bool {
        self.rows[r * self.words_per_row + c / 64] >> (c % 64) & 1 == 1
    }

    fn zero(num_rows: usize, num_cols: usize) -> Self {
        let words_per_row = num_cols.div_ceil(64).max(1);
        Self {
            num_rows,
            num_cols,
            words_per_row,
            rows: vec![0; num_rows * words_per_row],
        }
    }

    fn set(&mut self, r: usize, c: usize) {
        self.rows[r * self.words_per_row + c / 64] |= 1 << (c % 64);
    }

    /// Matrix product over GF(2); used to check the chain condition.
    pub fn multiply(&self, other: &BoundaryMatrix) -> BoundaryMatrix {
        assert_eq!(self.num_cols, other.num_rows);
        let mut out = BoundaryMatrix::zero(self.num_rows, other.num_cols);
        for r in 0..self.num_rows {
            for k in 0..self.num_cols {
                if self.bit(r, k) {
                    for w in 0..other.words_per_row {
                        out.rows[r * out.words_per_row + w] ^=
                            other.rows[k * other.words_per_row + w];
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|w| *w == 0)
    }
}

/// Builds the boundary matrix of dimension `k >= 1` for a face-closed
/// complex. A complex without k-simplices yields a zero-column matrix.
pub fn boundary_matrix(x: &SimplicialComplex, k: usize) -> Result<BoundaryMatrix, HomologyError> {
    assert!(k >= 1, "boundary matrix requires k >= 1");
    let rows: Vec<&Simplex> = x.simplices(k - 1).collect();
    let cols: Vec<&Simplex> = x.simplices(k).collect();
    let mut m = BoundaryMatrix::zero(rows.len(), cols.len());
    for (ci, s) in cols.iter().enumerate() {
        for f in s.facets() {
            let ri = rows
                .binary_search(&&f)
                .map_err(|_| HomologyError::NotClosed(f.clone()))?;
            m.set(ri, ci);
        }
    }
    Ok(m)
}

/// Rank over GF(2) by row elimination on bitset rows.
pub fn rank_gf2(m: &BoundaryMatrix) -> usize {
    let w = m.words_per_row;
    let mut pivots: Vec<Vec<u64>> = Vec::new();
    let mut pivot_cols: Vec<usize> = Vec::new();
    for r in 0..m.num_rows {
        let mut row = m.rows[r * w..(r + 1) * w].to_vec();
        loop {
            let Some(lead) = first_set_bit(&row) else {
                break;
            };
            match pivot_cols.iter().position(|c| *c == lead) {
                Some(p) => {
                    for (a, b) in row.iter_mut().zip(&pivots[p]) {
                        *a ^= *b;
                    }
                }
                None => {
                    pivot_cols.push(lead);
                    pivots.push(row);
                    break;
                }
            }
        }
    }
    pivots.len()
}

fn first_set_bit(words: &[u64]) -> Option<usize> {
    words
        .iter()
        .position(|w| *w != 0)
        .map(|i| i * 64 + words[i].trailing_zeros() as usize)
}

/// The k-th Betti number of a face-closed complex:
/// |C_k| - rank d_k - rank d_{k+1}, with rank d_0 = 0.
pub fn betti(x: &SimplicialComplex, k: usize) -> Result<usize, HomologyError> {
    let c_k = x.count(k);
    if c_k == 0 {
        return Ok(0);
    }
    let rank_k = if k == 0 {
        0
    } else {
        rank_gf2(&boundary_matrix(x, k)?)
    };
    let rank_k1 = rank_gf2(&boundary_matrix(x, k + 1)?);
    Ok(c_k - rank_k - rank_k1)
}

/// True iff the given GF(2) 1-cycle (a set of edges) is a boundary, i.e.
/// lies in the image of the dimension-2 boundary operator.
pub fn edge_cycle_is_boundary(
    x: &SimplicialComplex,
    cycle_edges: &[Simplex],
) -> Result<bool, HomologyError> {
    let d2 = boundary_matrix(x, 2)?;
    let rows: Vec<&Simplex> = x.simplices(1).collect();
    let mut augmented = BoundaryMatrix::zero(d2.num_rows, d2.num_cols + 1);
    for r in 0..d2.num_rows {
        for c in 0..d2.num_cols {
            if d2.bit(r, c) {
                augmented.set(r, c);
            }
        }
    }
    for e in cycle_edges {
        let ri = rows
            .binary_search(&e)
            .map_err(|_| HomologyError::NotClosed(e.clone()))?;
        augmented.set(ri, d2.num_cols);
    }
    Ok(rank_gf2(&augmented) == rank_gf2(&d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simplex(vs: &[u32]) -> Simplex {
        Simplex::new(vs.to_vec())
    }

    fn hollow_triangle() -> SimplicialComplex {
        SimplicialComplex::from_simplices([simplex(&[0, 1]), simplex(&[1, 2]), simplex(&[0, 2])])
    }

    fn filled_triangle() -> SimplicialComplex {
        SimplicialComplex::from_simplices([simplex(&[0, 1, 2])])
    }

    #[test]
    fn boundary_matrix_hollow_triangle() {
        let m = boundary_matrix(&hollow_triangle(), 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 3));
        for c in 0..3 {
            let ones = (0..3).filter(|r| m.bit(*r, c)).count();
            assert_eq!(ones, 2);
        }
    }

    #[test]
    fn boundary_matrix_filled_triangle_dim2() {
        let m = boundary_matrix(&filled_triangle(), 2).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 1));
        assert!((0..3).all(|r| m.bit(r, 0)));
    }

    #[test]
    fn boundary_matrix_no_k_simplices() {
        let x = SimplicialComplex::from_simplices([simplex(&[0])]);
        let m = boundary_matrix(&x, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 0));
    }

    #[test]
    fn boundary_matrix_rejects_open_complex() {
        let mut x = SimplicialComplex::new();
        x.insert_unchecked(simplex(&[0, 1, 2]));
        assert!(matches!(boundary_matrix(&x, 2), Err(HomologyError::NotClosed(_))));
    }

    #[test]
    fn rank_hand_checked() {
        // the hollow triangle's d1 has rank 2 by hand elimination
        assert_eq!(rank_gf2(&boundary_matrix(&hollow_triangle(), 1).unwrap()), 2);
        let zero = BoundaryMatrix::zero(4, 7);
        assert_eq!(rank_gf2(&zero), 0);
        let mut id = BoundaryMatrix::zero(4, 4);
        for i in 0..4 {
            id.set(i, i);
        }
        assert_eq!(rank_gf2(&id), 4);
    }

    #[test]
    fn betti_triangles() {
        let hollow = hollow_triangle();
        assert_eq!(betti(&hollow, 0).unwrap(), 1);
        assert_eq!(betti(&hollow, 1).unwrap(), 1);
        let filled = filled_triangle();
        assert_eq!(betti(&filled, 0).unwrap(), 1);
        assert_eq!(betti(&filled, 1).unwrap(), 0);
    }

    #[test]
    fn betti_two_disjoint_vertices() {
        let x = SimplicialComplex::from_simplices([simplex(&[0]), simplex(&[5])]);
        assert_eq!(betti(&x, 0).unwrap(), 2);
        assert_eq!(betti(&x, 1).unwrap(), 0);
    }

    /// Annulus triangulated with 8 outer and 8 inner vertices; one
    /// component, one hole.
    #[test]
    fn betti_octagonal_annulus() {
        let mut x = SimplicialComplex::new();
        for k in 0..8u32 {
            let k1 = (k + 1) % 8;
            x.insert(simplex(&[k, k1, 8 + k]));
            x.insert(simplex(&[k1, 8 + k, 8 + k1]));
        }
        assert_eq!(betti(&x, 0).unwrap(), 1);
        assert_eq!(betti(&x, 1).unwrap(), 1);
    }

    /// Independent route for beta_0: union-find over the 1-skeleton.
    fn components_union_find(x: &SimplicialComplex) -> usize {
        let verts: Vec<u32> = x.simplices(0).map(|s| s.vertices()[0]).collect();
        let index = |v: u32| verts.binary_search(&v).unwrap();
        let mut parent: Vec<usize> = (0..verts.len()).collect();
        fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for e in x.simplices(1) {
            let (a, b) = (index(e.vertices()[0]), index(e.vertices()[1]));
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        (0..verts.len()).filter(|i| find(&mut parent, *i) == *i).count()
    }

    fn arb_complex() -> impl Strategy<Value = SimplicialComplex> {
        proptest::collection::vec(
            proptest::collection::btree_set(0u32..12, 1..5),
            1..25,
        )
        .prop_map(|sets| {
            SimplicialComplex::from_simplices(
                sets.into_iter().map(|s| Simplex::new(s.into_iter().collect())),
            )
        })
    }

    proptest! {
        #[test]
        fn boundary_of_boundary_is_zero(x in arb_complex()) {
            for k in 2..=x.top_dim().unwrap_or(0) {
                let dk = boundary_matrix(&x, k).unwrap();
                let dk1 = boundary_matrix(&x, k - 1).unwrap();
                prop_assert!(dk1.multiply(&dk).is_zero());
            }
        }

        #[test]
        fn betti0_matches_union_find(x in arb_complex()) {
            prop_assert_eq!(betti(&x, 0).unwrap(), components_union_find(&x));
        }

        #[test]
        fn betti_invariant_under_relabeling(x in arb_complex(), shift in 1u32..50) {
            let relabeled = SimplicialComplex::from_simplices(
                x.dims.iter().flatten().map(|s| {
                    Simplex::new(s.vertices().iter().map(|v| (v * 7 + shift) % 97).collect())
                }),
            );
            // the affine map mod 97 is injective on 0..12
            prop_assert_eq!(betti(&x, 0).unwrap(), betti(&relabeled, 0).unwrap());
            prop_assert_eq!(betti(&x, 1).unwrap(), betti(&relabeled, 1).unwrap());
        }

    }

    #[test]
    fn filling_a_hollow_boundary_drops_betti1() {
        let hollow = hollow_triangle();
        let filled = filled_triangle();
        assert_eq!(betti(&hollow, 1).unwrap(), 1);
        assert_eq!(betti(&filled, 1).unwrap(), 0);
        assert_eq!(betti(&hollow, 0).unwrap(), betti(&filled, 0).unwrap());
    }

    #[test]
    fn cycle_boundary_detection() {
        // hollow triangle: its own cycle is not a boundary
        let hollow = hollow_triangle();
        let cycle = [simplex(&[0, 1]), simplex(&[1, 2]), simplex(&[0, 2])];
        assert!(!edge_cycle_is_boundary(&hollow, &cycle).unwrap());
        // filled: the same cycle bounds
        let filled = filled_triangle();
        assert!(edge_cycle_is_boundary(&filled, &cycle).unwrap());
    }
}

//! Predicates on closed disks in the plane: pairwise overlap, common
//! intersection of a disk family, and side-of-edge orientation.
//!
//! All predicates resolve near-degenerate inputs through an explicit
//! [`Tolerance`] so that results are deterministic across platforms.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("degenerate: coincident circles")]
    CoincidentCircles,
    #[error("degenerate edge")]
    DegenerateEdge,
    #[error("empty family")]
    EmptyFamily,
}

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite(), "non-finite coordinate");
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A closed disk: all points within `radius` of `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point2, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative radius");
        Self { center, radius }
    }

    /// Closed membership with an epsilon slack: distance <= radius + eps.
    pub fn contains(&self, p: &Point2, tol: Tolerance) -> bool {
        self.center.distance(p) <= self.radius + tol.eps
    }
}

/// Absolute epsilon (meters) used to resolve near-degenerate predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub eps: f64,
}

impl Tolerance {
    pub fn new(eps: f64) -> Self {
        assert!(eps > 0.0, "tolerance must be positive");
        Self { eps }
    }

    /// Default tolerance for a disk family: 1e-9 times the smallest
    /// positive radius, with a floor for all-degenerate input.
    pub fn for_disks(disks: &[Disk]) -> Self {
        let min_r = disks
            .iter()
            .map(|d| d.radius)
            .filter(|r| *r > 0.0)
            .fold(f64::INFINITY, f64::min);
        if min_r.is_finite() {
            Self::new(1e-9 * min_r)
        } else {
            Self::new(1e-12)
        }
    }
}

/// Strict pairwise overlap test: true iff the center distance is less
/// than the sum of radii by more than `eps`. Distances within `eps` of
/// tangency count as non-overlapping.
pub fn disks_overlap(a: &Disk, b: &Disk, tol: Tolerance) -> bool {
    a.center.distance(&b.center) < a.radius + b.radius - tol.eps
}

/// Intersection points of the two boundary circles.
///
/// Tangency within `eps` yields exactly one point; separation or strict
/// containment yields none. Coincident circles are an error, callers
/// with duplicated disks are expected to deduplicate first.
pub fn circle_intersection_points(
    a: &Disk,
    b: &Disk,
    tol: Tolerance,
) -> Result<Vec<Point2>, GeometryError> {
    let d = a.center.distance(&b.center);
    let eps = tol.eps;
    if d <= eps && (a.radius - b.radius).abs() <= eps {
        return Err(GeometryError::CoincidentCircles);
    }
    let sum = a.radius + b.radius;
    let diff = (a.radius - b.radius).abs();
    if d - eps > sum || d + eps < diff {
        return Ok(Vec::new());
    }
    let ux = (b.center.x - a.center.x) / d;
    let uy = (b.center.y - a.center.y) / d;
    if (d - sum).abs() <= eps {
        // external tangency
        return Ok(vec![Point2::new(
            a.center.x + a.radius * ux,
            a.center.y + a.radius * uy,
        )]);
    }
    if (d - diff).abs() <= eps {
        // internal tangency: touch point lies away from the smaller disk
        let s = if a.radius >= b.radius { 1.0 } else { -1.0 };
        return Ok(vec![Point2::new(
            a.center.x + s * a.radius * ux,
            a.center.y + s * a.radius * uy,
        )]);
    }
    let along = (a.radius * a.radius - b.radius * b.radius + d * d) / (2.0 * d);
    let h2 = a.radius * a.radius - along * along;
    if h2 <= 0.0 {
        return Ok(Vec::new());
    }
    let h = h2.sqrt();
    let px = a.center.x + along * ux;
    let py = a.center.y + along * uy;
    Ok(vec![
        Point2::new(px - h * uy, py + h * ux),
        Point2::new(px + h * uy, py - h * ux),
    ])
}

/// True iff some point lies in every closed disk of the family.
///
/// Exact for convex disks: the deepest point of a non-empty intersection
/// is witnessed either by a disk center contained in all disks or by an
/// intersection point of two boundary circles contained in all disks.
pub fn common_intersection_nonempty(
    disks: &[Disk],
    tol: Tolerance,
) -> Result<bool, GeometryError> {
    if disks.is_empty() {
        return Err(GeometryError::EmptyFamily);
    }
    let mut family: Vec<Disk> = Vec::with_capacity(disks.len());
    for d in disks {
        if !family.contains(d) {
            family.push(*d);
        }
    }
    if family.len() == 1 {
        return Ok(true);
    }
    let in_all = |p: &Point2| family.iter().all(|d| d.contains(p, tol));
    if family.iter().any(|d| in_all(&d.center)) {
        return Ok(true);
    }
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            // near-coincident circles contribute no corner candidates;
            // their interiors are covered by the center candidates
            let pts = match circle_intersection_points(&family[i], &family[j], tol) {
                Ok(pts) => pts,
                Err(GeometryError::CoincidentCircles) => continue,
                Err(e) => return Err(e),
            };
            if pts.iter().any(&in_all) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Which side of the directed edge `a -> b` the point `p` lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Colinear,
}

/// Sign of the cross product (b - a) x (p - a), with a colinear band of
/// width `eps * |b - a|`.
pub fn side_of_edge(
    p: &Point2,
    a: &Point2,
    b: &Point2,
    tol: Tolerance,
) -> Result<Side, GeometryError> {
    if a == b {
        return Err(GeometryError::DegenerateEdge);
    }
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    let len = a.distance(b);
    if cross.abs() <= tol.eps * len {
        Ok(Side::Colinear)
    } else if cross > 0.0 {
        Ok(Side::Left)
    } else {
        Ok(Side::Right)
    }
}

/// Signed clearance of the family: the depth of the deepest common point,
/// max over x of min over disks of (radius - distance to center).
///
/// Positive iff the common intersection is non-empty, and its magnitude
/// measures how far the family is from the tangency boundary. Computed by
/// bisecting over a uniform inflation of all radii.
pub fn intersection_clearance(disks: &[Disk], tol: Tolerance) -> Result<f64, GeometryError> {
    if disks.is_empty() {
        return Err(GeometryError::EmptyFamily);
    }
    let max_r = disks.iter().map(|d| d.radius).fold(0.0, f64::max);
    let mut span: f64 = 0.0;
    for i in 0..disks.len() {
        for j in (i + 1)..disks.len() {
            span = span.max(disks[i].center.distance(&disks[j].center));
        }
    }
    let nonempty_at = |t: f64| -> bool {
        if disks.iter().any(|d| d.radius + t < 0.0) {
            return false;
        }
        let inflated: Vec<Disk> = disks
            .iter()
            .map(|d| Disk::new(d.center, d.radius + t))
            .collect();
        common_intersection_nonempty(&inflated, tol).expect("non-empty family")
    };
    let mut lo = -(max_r + 1.0); // empty: every disk deflated away
    let mut hi = span + 1.0; // non-empty: every center is mutually covered
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if nonempty_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(-0.5 * (lo + hi))
}

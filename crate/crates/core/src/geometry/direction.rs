use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site, either on the plane lattice or on the line lattice.
///
/// The two kinds never share a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Site {
    Plane(i64, i64),
    Line(i64),
}

impl Site {
    pub fn norm_sq(&self) -> i64 {
        match *self {
            Site::Plane(a, b) => a * a + b * b,
            Site::Line(x) => x * x,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn plane(&self) -> Option<(i64, i64)> {
        match *self {
            Site::Plane(a, b) => Some((a, b)),
            Site::Line(_) => None,
        }
    }

    pub fn line(&self) -> Option<i64> {
        match *self {
            Site::Line(x) => Some(x),
            Site::Plane(..) => None,
        }
    }

    pub fn is_origin(&self) -> bool {
        self.norm_sq() == 0
    }

    /// Squared Euclidean distance between sites of the same kind.
    pub fn dist_sq(&self, other: &Site) -> i64 {
        match (*self, *other) {
            (Site::Plane(a, b), Site::Plane(c, d)) => (a - c) * (a - c) + (b - d) * (b - d),
            (Site::Line(x), Site::Line(y)) => (x - y) * (x - y),
            _ => i64::MAX,
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Plane(a, b) => write!(f, "({a},{b})"),
            Site::Line(x) => write!(f, "{x}"),
        }
    }
}

/// A primitive integer vector, standing for a rational-slope point of the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Direction {
    p: i64,
    q: i64,
}

impl Direction {
    /// Reduce a non-zero integer vector to its primitive representative.
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if p == 0 && q == 0 {
            return Err(Error::ZeroDirection);
        }
        let g = p.gcd(&q);
        Ok(Direction { p: p / g, q: q / g })
    }

    pub(crate) fn from_wide(p: i128, q: i128) -> Result<Self> {
        if p == 0 && q == 0 {
            return Err(Error::ZeroDirection);
        }
        let g = p.gcd(&q);
        let (p, q) = (p / g, q / g);
        let p = i64::try_from(p).map_err(|_| Error::InvalidArgument("direction overflow".into()))?;
        let q = i64::try_from(q).map_err(|_| Error::InvalidArgument("direction overflow".into()))?;
        Ok(Direction { p, q })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub const EAST: Direction = Direction { p: 1, q: 0 };
    pub const NORTH: Direction = Direction { p: 0, q: 1 };
    pub const WEST: Direction = Direction { p: -1, q: 0 };
    pub const SOUTH: Direction = Direction { p: 0, q: -1 };

    /// Quarter-turn counter-clockwise.
    pub fn rotate_quarter(&self) -> Direction {
        Direction {
            p: -self.q,
            q: self.p,
        }
    }

    /// Angle in radians, in `[0, 2π)`. Only for reporting and plotting.
    pub fn angle(&self) -> f64 {
        let a = (self.q as f64).atan2(self.p as f64);
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    /// Unit complex number with this argument.
    pub fn unit(&self) -> (f64, f64) {
        let n = ((self.p * self.p + self.q * self.q) as f64).sqrt();
        (self.p as f64 / n, self.q as f64 / n)
    }
}

impl TryFrom<(i64, i64)> for Direction {
    type Error = Error;
    fn try_from(v: (i64, i64)) -> Result<Self> {
        Direction::new(v.0, v.1)
    }
}

impl From<Direction> for (i64, i64) {
    fn from(d: Direction) -> Self {
        (d.p, d.q)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// Primitive direction of the ray through a plane site.
pub fn direction_of(x: Site) -> Result<Direction> {
    match x {
        Site::Plane(0, 0) => Err(Error::OriginDirection),
        Site::Plane(a, b) => Direction::new(a, b),
        Site::Line(_) => Err(Error::Representation {
            expected: "Z2".into(),
            found: "Z".into(),
        }),
    }
}

fn cross(a: Direction, b: Direction) -> i128 {
    a.p as i128 * b.q as i128 - a.q as i128 * b.p as i128
}

fn dot(a: Direction, b: Direction) -> i128 {
    a.p as i128 * b.p as i128 + a.q as i128 * b.q as i128
}

/// 0 when the counter-clockwise angle from `base` to `v` lies in `[0, π)`, else 1.
fn half(base: Direction, v: Direction) -> u8 {
    let c = cross(base, v);
    if c > 0 || (c == 0 && dot(base, v) > 0) {
        0
    } else {
        1
    }
}

/// Compare the counter-clockwise angles `base → a` and `base → b`, both taken in `[0, 2π)`.
pub fn ccw_cmp(base: Direction, a: Direction, b: Direction) -> Ordering {
    let (ha, hb) = (half(base, a), half(base, b));
    if ha != hb {
        return ha.cmp(&hb);
    }
    match cross(a, b) {
        c if c > 0 => Ordering::Less,
        c if c < 0 => Ordering::Greater,
        _ => Ordering::Equal,
    }
}

/// Compare absolute angles measured from the positive first axis.
pub fn angle_cmp(a: Direction, b: Direction) -> Ordering {
    ccw_cmp(Direction::EAST, a, b)
}

/// Closed counter-clockwise arc of rational-slope directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arc {
    Full,
    Sweep { start: Direction, end: Direction },
}

impl Arc {
    pub fn new(start: Direction, end: Direction) -> Self {
        Arc::Sweep { start, end }
    }

    /// Closed arc between two integer vectors, reduced to primitive endpoints.
    pub fn from_vectors(start: (i64, i64), end: (i64, i64)) -> Result<Self> {
        Ok(Arc::Sweep {
            start: Direction::new(start.0, start.1)?,
            end: Direction::new(end.0, end.1)?,
        })
    }

    pub fn contains(&self, d: Direction) -> bool {
        match *self {
            Arc::Full => true,
            Arc::Sweep { start, end } => ccw_cmp(start, d, end) != Ordering::Greater,
        }
    }

    /// Whether this arc, closed, contains the direction of a plane site. The origin is never contained.
    pub fn contains_site(&self, x: Site) -> bool {
        match direction_of(x) {
            Ok(d) => self.contains(d),
            Err(_) => false,
        }
    }

    pub fn start(&self) -> Option<Direction> {
        match *self {
            Arc::Full => None,
            Arc::Sweep { start, .. } => Some(start),
        }
    }

    pub fn end(&self) -> Option<Direction> {
        match *self {
            Arc::Full => None,
            Arc::Sweep { end, .. } => Some(end),
        }
    }

    /// Enlarge both ends by the angle `atan(2^{1-k})`, which dominates `2^{-k}`.
    ///
    /// Endpoints stay exact integer vectors and the family shrinks monotonically
    /// towards `self` as `k` grows. Returns `Full` once the enlarged ends overlap.
    pub fn widen(&self, k: u32) -> Arc {
        let (start, end) = match *self {
            Arc::Full => return Arc::Full,
            Arc::Sweep { start, end } => (start, end),
        };
        let k = k.clamp(1, MAX_WIDEN_LEVEL);
        let lo = rotate_by_tangent(start, k, false);
        let hi = rotate_by_tangent(end, k, true);
        if start != end {
            // complement gap from `end` to `start` is at most twice the offset
            let hi2 = rotate_by_tangent(hi, k, true);
            if (Arc::Sweep { start: end, end: hi2 }).contains(start) {
                return Arc::Full;
            }
        }
        Arc::Sweep { start: lo, end: hi }
    }

    /// Arc `[d - α_k, d + α_k]` around a single direction; `Full` when `d` is absent.
    pub fn around(d: Option<Direction>, k: u32) -> Arc {
        match d {
            None => Arc::Full,
            Some(d) => Arc::Sweep { start: d, end: d }.widen(k),
        }
    }
}

/// Largest refinement level used by [`Arc::widen`]. At this level no other
/// direction with coordinates below `2^18` fits inside a widened point arc.
pub const MAX_WIDEN_LEVEL: u32 = 40;

fn rotate_by_tangent(v: Direction, k: u32, ccw: bool) -> Direction {
    let scale: i128 = 1i128 << k;
    let (p, q) = (v.p as i128, v.q as i128);
    let (np, nq) = if ccw {
        (scale * p - 2 * q, scale * q + 2 * p)
    } else {
        (scale * p + 2 * q, scale * q - 2 * p)
    };
    Direction::from_wide(np, nq).expect("rotation of a non-zero vector is non-zero")
}

/// True iff no direction lies in both closed arcs.
pub fn arcs_disjoint(i: &Arc, j: &Arc) -> bool {
    match (i, j) {
        (Arc::Full, _) | (_, Arc::Full) => false,
        (Arc::Sweep { start: si, .. }, Arc::Sweep { start: sj, .. }) => {
            !(i.contains(*sj) || j.contains(*si))
        }
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arc::Full => write!(f, "*"),
            Arc::Sweep { start, end } => write!(f, "{start}..{end}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: i64, q: i64) -> Direction {
        Direction::new(p, q).unwrap()
    }

    #[test]
    fn direction_of_examples() {
        assert_eq!(direction_of(Site::Plane(1, 1)).unwrap(), d(1, 1));
        assert_eq!(direction_of(Site::Plane(2, 4)).unwrap(), d(1, 2));
        assert_eq!(direction_of(Site::Plane(0, -3)).unwrap(), d(0, -1));
        assert!(matches!(
            direction_of(Site::Plane(0, 0)),
            Err(Error::OriginDirection)
        ));
    }

    #[test]
    fn arc_contains_examples() {
        let j = Arc::new(d(1, 0), d(0, 1));
        assert!(j.contains(d(1, 1)));
        assert!(!j.contains(d(-1, 0)));
        assert!(j.contains(d(1, 0)));
        assert!(j.contains(d(0, 1)));
        assert!(!j.contains(d(1, -1)));
    }

    #[test]
    fn wrapping_arc() {
        // from the fourth quadrant across the positive axis into the first
        let j = Arc::new(d(1, -1), d(1, 1));
        assert!(j.contains(d(1, 0)));
        assert!(j.contains(d(5, -3)));
        assert!(!j.contains(d(-1, 0)));
        assert!(!j.contains(d(0, 1)));
    }

    #[test]
    fn point_arc_contains_only_itself() {
        let j = Arc::new(d(2, 3), d(2, 3));
        assert!(j.contains(d(2, 3)));
        assert!(!j.contains(d(3, 2)));
        assert!(!j.contains(d(-2, -3)));
    }

    #[test]
    fn disjoint_examples() {
        let a = Arc::new(d(1, 0), d(0, 1));
        let b = Arc::new(d(-1, 0), d(0, -1));
        let c = Arc::new(d(0, 1), d(-1, 0));
        assert!(arcs_disjoint(&a, &b));
        assert!(!arcs_disjoint(&a, &c));
        assert!(!arcs_disjoint(&a, &a));
        assert!(!arcs_disjoint(&a, &Arc::Full));
    }

    #[test]
    fn widen_encloses_and_shrinks() {
        let j = Arc::new(d(1, 0), d(0, 1));
        let mut prev = Arc::Full;
        for k in 1..20 {
            let w = j.widen(k);
            assert!(w.contains(d(1, 0)) && w.contains(d(0, 1)) && w.contains(d(1, 1)));
            if let Arc::Sweep { start, end } = w {
                // strictly outside the original arc
                assert!(!j.contains(start) && !j.contains(end));
                let real = (start.angle() - std::f64::consts::TAU).abs().min(start.angle());
                assert!(real >= 0.5f64.powi(k as i32) - 1e-15);
            }
            if let Arc::Sweep { start, end } = w {
                assert!(prev.contains(start) && prev.contains(end));
            }
            prev = w;
        }
    }

    #[test]
    fn widen_large_arc_becomes_full() {
        let j = Arc::new(d(1, 1), d(1, -1)); // everything but a sliver around east
        assert_eq!(j.widen(1), Arc::Full);
        assert_ne!(j.widen(8), Arc::Full);
    }

    #[test]
    fn angle_order_is_total_on_quadrants() {
        let mut v = vec![d(0, -1), d(1, 0), d(-1, 0), d(0, 1), d(1, 1), d(-1, -1)];
        v.sort_by(|a, b| angle_cmp(*a, *b));
        assert_eq!(v, vec![d(1, 0), d(1, 1), d(0, 1), d(-1, 0), d(-1, -1), d(0, -1)]);
    }
}

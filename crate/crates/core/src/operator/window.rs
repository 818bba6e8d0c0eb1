use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc as Shared;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_cmp, direction_of, inside_closed_ball, Rational, Site};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Representation {
    Z2,
    Z,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Z2 => write!(f, "Z2"),
            Representation::Z => write!(f, "Z"),
        }
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z2" | "z2" => Ok(Representation::Z2),
            "Z" | "z" => Ok(Representation::Z),
            _ => Err(Error::InvalidArgument(format!("unknown representation `{s}`"))),
        }
    }
}

/// Finite ball of lattice sites with a fixed enumeration, possibly amplified
/// into `copies` stacked copies (basis index `copy * n_sites + site`).
#[derive(Debug, Clone)]
pub struct TruncationWindow {
    representation: Representation,
    radius: Rational,
    copies: usize,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl PartialEq for TruncationWindow {
    fn eq(&self, other: &Self) -> bool {
        self.representation == other.representation
            && self.radius == other.radius
            && self.copies == other.copies
    }
}

impl Eq for TruncationWindow {}

/// Canonical order on plane sites: norm, then angle from the first axis, then coordinates.
fn plane_order(a: &Site, b: &Site) -> Ordering {
    a.norm_sq().cmp(&b.norm_sq()).then_with(|| {
        match (direction_of(*a), direction_of(*b)) {
            (Ok(da), Ok(db)) => angle_cmp(da, db),
            _ => Ordering::Equal,
        }
        .then_with(|| a.cmp(b))
    })
}

impl TruncationWindow {
    pub fn new(representation: Representation, radius: Rational) -> Result<Self> {
        Self::with_copies(representation, radius, 1)
    }

    pub fn plane(radius: i64) -> Result<Self> {
        Self::new(Representation::Z2, Rational::from_integer(radius))
    }

    pub fn line(radius: i64) -> Result<Self> {
        Self::new(Representation::Z, Rational::from_integer(radius))
    }

    pub fn with_copies(representation: Representation, radius: Rational, copies: usize) -> Result<Self> {
        if radius < Rational::from_integer(0) {
            return Err(Error::InvalidArgument("window radius must be non-negative".into()));
        }
        if copies == 0 {
            return Err(Error::InvalidArgument("window needs at least one copy".into()));
        }
        let bound = radius.to_integer();
        let mut sites = Vec::new();
        match representation {
            Representation::Z2 => {
                for a in -bound..=bound {
                    for b in -bound..=bound {
                        let s = Site::Plane(a, b);
                        if inside_closed_ball(&s, radius) {
                            sites.push(s);
                        }
                    }
                }
                sites.sort_by(plane_order);
            }
            Representation::Z => {
                sites.extend((-bound..=bound).map(Site::Line));
                sites.sort_by_key(|s| {
                    let x = s.line().unwrap();
                    (x.abs(), x)
                });
            }
        }
        let index = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(TruncationWindow {
            representation,
            radius,
            copies,
            sites,
            index,
        })
    }

    /// The same sites stacked `copies` times.
    pub fn amplified(&self, copies: usize) -> Result<Self> {
        Self::with_copies(self.representation, self.radius, copies)
    }

    /// Window with a single copy and the same sites.
    pub fn base(&self) -> Self {
        Self::with_copies(self.representation, self.radius, 1).expect("valid window")
    }

    pub fn shared(self) -> Shared<Self> {
        Shared::new(self)
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn radius(&self) -> Rational {
        self.radius
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn dimension(&self) -> usize {
        self.sites.len() * self.copies
    }

    /// Index of a site in the first copy.
    pub fn index_of(&self, s: &Site) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn index_in_copy(&self, s: &Site, copy: usize) -> Option<usize> {
        if copy >= self.copies {
            return None;
        }
        self.index_of(s).map(|i| copy * self.sites.len() + i)
    }

    /// `(copy, site)` of a basis index.
    pub fn site_of(&self, i: usize) -> (usize, Site) {
        let n = self.sites.len();
        (i / n, self.sites[i % n])
    }

    /// Tag naming the enumeration order, stored in file headers.
    pub fn basis_order(&self) -> &'static str {
        match self.representation {
            Representation::Z2 => "norm-angle-lex",
            Representation::Z => "abs-then-value",
        }
    }

    /// Distance from a site to the window boundary, `radius - ‖x‖`.
    pub fn depth(&self, s: &Site) -> f64 {
        let r = *self.radius.numer() as f64 / *self.radius.denom() as f64;
        r - s.norm()
    }

    pub fn check_same(&self, other: &TruncationWindow) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::WindowMismatch(format!("{self} vs {other}")))
        }
    }
}

impl fmt::Display for TruncationWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[r={}", self.representation, self.radius)?;
        if self.copies > 1 {
            write!(f, ",copies={}", self.copies)?;
        }
        write!(f, "]")
    }
}

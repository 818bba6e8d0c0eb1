use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::direction::{direction_of, Arc, Direction, Site};
use crate::error::{Error, Result};
use crate::operator::TruncationWindow;

pub type Rational = Ratio<i64>;

/// Symbolic lattice subset. Realized inside a window as a finite site set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Region {
    /// Plane sites whose direction lies in the closed arc; never the origin.
    Cone(Arc),
    /// Open ball `‖x‖ < r`.
    Ball(Rational),
    /// `r_in ≤ ‖x‖ < r_out`.
    Annulus(Rational, Rational),
    Explicit(BTreeSet<Site>),
    /// Line sites `x ≥ from`.
    HalfLine(i64),
    Complement(Box<Region>),
    Union(Box<Region>, Box<Region>),
    Intersection(Box<Region>, Box<Region>),
}

/// `‖x‖² < r²` decided in integers.
pub fn inside_ball(x: &Site, r: Rational) -> bool {
    if *r.numer() <= 0 {
        return false;
    }
    let n2 = x.norm_sq() as i128;
    let den = *r.denom() as i128;
    let num = *r.numer() as i128;
    n2 * den * den < num * num
}

/// `‖x‖² ≤ r²` decided in integers.
pub fn inside_closed_ball(x: &Site, r: Rational) -> bool {
    if *r.numer() < 0 {
        return false;
    }
    let n2 = x.norm_sq() as i128;
    let den = *r.denom() as i128;
    let num = *r.numer() as i128;
    n2 * den * den <= num * num
}

impl Region {
    pub fn empty() -> Region {
        Region::Explicit(BTreeSet::new())
    }

    pub fn everything() -> Region {
        Region::Complement(Box::new(Region::empty()))
    }

    pub fn cone(arc: Arc) -> Region {
        Region::Cone(arc)
    }

    pub fn ball(r: i64) -> Region {
        Region::Ball(Rational::from_integer(r))
    }

    pub fn annulus(r_in: i64, r_out: i64) -> Region {
        Region::Annulus(Rational::from_integer(r_in), Rational::from_integer(r_out))
    }

    pub fn explicit<I: IntoIterator<Item = Site>>(sites: I) -> Region {
        Region::Explicit(sites.into_iter().collect())
    }

    /// Plane sites outside the closed arc, origin excluded.
    pub fn cone_complement(arc: Arc) -> Region {
        Region::Intersection(
            Box::new(Region::Complement(Box::new(Region::Cone(arc)))),
            Box::new(Region::Complement(Box::new(Region::explicit([Site::Plane(0, 0)])))),
        )
    }

    pub fn complement(self) -> Region {
        Region::Complement(Box::new(self))
    }

    pub fn union(self, other: Region) -> Region {
        Region::Union(Box::new(self), Box::new(other))
    }

    pub fn intersect(self, other: Region) -> Region {
        Region::Intersection(Box::new(self), Box::new(other))
    }

    pub fn contains(&self, x: &Site) -> bool {
        match self {
            Region::Cone(arc) => match x {
                Site::Plane(..) => arc.contains_site(*x),
                Site::Line(_) => false,
            },
            Region::Ball(r) => inside_ball(x, *r),
            Region::Annulus(r_in, r_out) => !inside_ball(x, *r_in) && inside_ball(x, *r_out),
            Region::Explicit(set) => set.contains(x),
            Region::HalfLine(from) => matches!(x, Site::Line(v) if *v >= *from),
            Region::Complement(r) => !r.contains(x),
            Region::Union(a, b) => a.contains(x) || b.contains(x),
            Region::Intersection(a, b) => a.contains(x) && b.contains(x),
        }
    }

    /// Window sites in the region, in the window's canonical enumeration order.
    pub fn realize(&self, window: &TruncationWindow) -> Vec<Site> {
        window.sites().iter().copied().filter(|x| self.contains(x)).collect()
    }

    /// Window basis indices (first copy) of the realized sites.
    pub fn indices(&self, window: &TruncationWindow) -> Vec<usize> {
        window
            .sites()
            .iter()
            .enumerate()
            .filter(|(_, x)| self.contains(x))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Finite site set of a region inside a window.
pub fn realize_region(region: &Region, window: &TruncationWindow) -> Vec<Site> {
    region.realize(window)
}

/// Directions of all non-origin plane sites of a window, deduplicated, in angle order.
pub fn window_directions(window: &TruncationWindow) -> Vec<Direction> {
    let mut dirs: Vec<Direction> = window
        .sites()
        .iter()
        .filter_map(|x| direction_of(*x).ok())
        .collect::<std::collections::HashSet<_>>()
        .into_iter()
        .collect();
    dirs.sort_by(|a, b| super::direction::angle_cmp(*a, *b));
    dirs
}

fn fmt_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Cone(arc) => write!(f, "cone[{arc}]"),
            Region::Ball(r) => write!(f, "ball[{}]", fmt_rational(r)),
            Region::Annulus(a, b) => write!(f, "ann[{},{}]", fmt_rational(a), fmt_rational(b)),
            Region::Explicit(set) => {
                write!(f, "set[")?;
                for (i, s) in set.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "]")
            }
            Region::HalfLine(v) => write!(f, "half[{v}]"),
            Region::Complement(r) => write!(f, "!{r}"),
            Region::Union(a, b) => write!(f, "({a}|{b})"),
            Region::Intersection(a, b) => write!(f, "({a}&{b})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser {
            src: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::parse(self.pos, format!("expected `{}`", c as char)))
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn keyword(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.src.len() && (self.src[self.pos] == b'-' || self.src[self.pos] == b'+') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(start, "expected integer"))
    }

    fn rational(&mut self) -> Result<Rational> {
        let n = self.integer()?;
        if self.eat(b'/') {
            let pos = self.pos;
            let d = self.integer()?;
            if d == 0 {
                return Err(Error::parse(pos, "zero denominator"));
            }
            Ok(Rational::new(n, d))
        } else {
            Ok(Rational::from_integer(n))
        }
    }

    fn pair(&mut self) -> Result<(i64, i64)> {
        self.expect(b'(')?;
        let a = self.integer()?;
        self.expect(b',')?;
        let b = self.integer()?;
        self.expect(b')')?;
        Ok((a, b))
    }

    fn direction(&mut self) -> Result<Direction> {
        let pos = self.pos;
        let (p, q) = self.pair()?;
        Direction::new(p, q).map_err(|_| Error::parse(pos, "zero direction"))
    }

    fn arc(&mut self) -> Result<Arc> {
        if self.eat(b'*') {
            return Ok(Arc::Full);
        }
        let start = self.direction()?;
        self.expect(b'.')?;
        self.expect(b'.')?;
        let end = self.direction()?;
        Ok(Arc::Sweep { start, end })
    }

    fn site(&mut self) -> Result<Site> {
        if self.peek() == Some(b'(') {
            let (a, b) = self.pair()?;
            Ok(Site::Plane(a, b))
        } else {
            Ok(Site::Line(self.integer()?))
        }
    }

    fn atom(&mut self) -> Result<Region> {
        let pos = self.pos;
        let kw = self.keyword();
        self.expect(b'[')?;
        let region = match kw.as_str() {
            "cone" => Region::Cone(self.arc()?),
            "ball" => Region::Ball(self.rational()?),
            "ann" => {
                let a = self.rational()?;
                self.expect(b',')?;
                let b = self.rational()?;
                Region::Annulus(a, b)
            }
            "set" => {
                let mut set = BTreeSet::new();
                if self.peek() != Some(b']') {
                    loop {
                        set.insert(self.site()?);
                        if !self.eat(b',') {
                            break;
                        }
                    }
                }
                Region::Explicit(set)
            }
            "half" => Region::HalfLine(self.integer()?),
            other => return Err(Error::parse(pos, format!("unknown region `{other}`"))),
        };
        self.expect(b']')?;
        Ok(region)
    }

    fn factor(&mut self) -> Result<Region> {
        if self.eat(b'!') {
            return Ok(Region::Complement(Box::new(self.factor()?)));
        }
        if self.eat(b'(') {
            let r = self.expr()?;
            self.expect(b')')?;
            return Ok(r);
        }
        self.atom()
    }

    fn term(&mut self) -> Result<Region> {
        let mut lhs = self.factor()?;
        while self.eat(b'&') {
            let rhs = self.factor()?;
            lhs = Region::Intersection(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn expr(&mut self) -> Result<Region> {
        let mut lhs = self.term()?;
        while self.eat(b'|') {
            let rhs = self.term()?;
            lhs = Region::Union(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn finish(&mut self) -> Result<()> {
        if self.peek().is_some() {
            Err(Error::parse(self.pos, "trailing input"))
        } else {
            Ok(())
        }
    }
}

impl FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser::new(s);
        let r = p.expr()?;
        p.finish()?;
        Ok(r)
    }
}

impl FromStr for Arc {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser::new(s);
        let a = p.arc()?;
        p.finish()?;
        Ok(a)
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Arc {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Arc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

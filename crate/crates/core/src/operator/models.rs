//! Model unitaries, circle functions and the polar decomposition.

use std::sync::Arc as Shared;

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::linalg;
use super::matrix::Operator;
use super::window::{Representation, TruncationWindow};
use crate::error::{Error, Result};
use crate::geometry::Site;

/// Default unitarity tolerance for functional calculus.
pub const TOL_UNITARY: f64 = 1e-8;
/// Default invertibility threshold.
pub const TOL_INV: f64 = 1e-8;

/// Diagonal phase `(x₁ + i x₂)/|x₁ + i x₂|`, with 1 at the origin.
pub fn laughlin_operator(window: Shared<TruncationWindow>) -> Result<Operator> {
    if window.representation() != Representation::Z2 {
        return Err(Error::Representation {
            expected: "Z2".into(),
            found: window.representation().to_string(),
        });
    }
    let diag: Vec<C64> = (0..window.dimension())
        .map(|i| match window.site_of(i).1 {
            Site::Plane(0, 0) => C64::new(1.0, 0.0),
            Site::Plane(a, b) => {
                let z = C64::new(a as f64, b as f64);
                z / z.norm()
            }
            Site::Line(_) => unreachable!(),
        })
        .collect();
    Ok(Operator::from_diagonal(window, &diag)?.named("L"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// `δ_x ↦ δ_{x+k}` on a line window.
pub fn shift_operator(window: Shared<TruncationWindow>, k: i64, boundary: Boundary) -> Result<Operator> {
    if window.representation() != Representation::Z {
        return Err(Error::Representation {
            expected: "Z".into(),
            found: window.representation().to_string(),
        });
    }
    let n = window.dimension();
    let half = window.radius().to_integer();
    let period = 2 * half + 1;
    let mut m = Array2::zeros((n, n));
    for j in 0..n {
        let (copy, site) = window.site_of(j);
        let x = site.line().unwrap();
        let mut y = x + k;
        if boundary == Boundary::Periodic {
            y = (y + half).rem_euclid(period) - half;
        }
        if let Some(i) = window.index_in_copy(&Site::Line(y), copy) {
            m[[i, j]] = C64::new(1.0, 0.0);
        }
    }
    let name = match boundary {
        Boundary::Open => format!("R^{k}"),
        Boundary::Periodic => format!("R^{k}(periodic)"),
    };
    Ok(Operator::new(window, m)?.named(name))
}

/// Laurent polynomial `Σ_{n=−d}^{d} c_n zⁿ` on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleFunction {
    /// `coeffs[n + d]` is `c_n`.
    coeffs: Vec<C64>,
}

impl CircleFunction {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::InvalidArgument(
                "Laurent coefficient list must have odd length 2d+1".into(),
            ));
        }
        Ok(CircleFunction { coeffs })
    }

    /// From `(n, c_n)` pairs.
    pub fn from_terms(terms: &[(i32, C64)]) -> Self {
        let d = terms.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * d + 1];
        for (n, c) in terms {
            coeffs[(*n as isize + d as isize) as usize] += *c;
        }
        CircleFunction { coeffs }
    }

    pub fn constant(c: C64) -> Self {
        CircleFunction { coeffs: vec![c] }
    }

    pub fn monomial(n: i32) -> Self {
        Self::from_terms(&[(n, C64::new(1.0, 0.0))])
    }

    /// `((1 + Re(z w̄))/2)^d`, a bump of height 1 at `w` vanishing at `−w`.
    pub fn bump(w: C64, d: u32) -> Self {
        let w = w / w.norm();
        // (1/2 + z w̄/4 + z̄ w/4)
        let base = CircleFunction {
            coeffs: vec![w * 0.25, C64::new(0.5, 0.0), w.conj() * 0.25],
        };
        let mut f = Self::constant(C64::new(1.0, 0.0));
        for _ in 0..d {
            f = f.mul(&base);
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeff(&self, n: i32) -> C64 {
        let d = self.degree() as i32;
        if n.abs() > d {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + d) as usize]
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: C64) -> C64 {
        let d = self.degree() as i32;
        (-d..=d).map(|n| self.coeff(n) * z.powi(n)).sum()
    }

    /// `Σ |c_n|`, an upper bound for `sup |f|`.
    pub fn coefficient_bound(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn mul(&self, other: &CircleFunction) -> CircleFunction {
        let (da, db) = (self.degree() as i32, other.degree() as i32);
        let mut terms = Vec::new();
        for a in -da..=da {
            for b in -db..=db {
                terms.push((a + b, self.coeff(a) * other.coeff(b)));
            }
        }
        Self::from_terms(&terms)
    }
}

/// `Σ c_n Aⁿ` with `A^{−n} := (A*)ⁿ`, no unitarity check.
pub fn evaluate_laurent(f: &CircleFunction, a: &Operator) -> Result<Operator> {
    let n = a.dim();
    let d = f.degree() as i32;
    let mut acc = linalg::identity(n).mapv(|z| z * f.coeff(0));
    if a.is_diagonal() {
        let diag = a.diagonal();
        let vals: Vec<C64> = diag
            .iter()
            .map(|z| (-d..=d).map(|k| f.coeff(k) * laurent_power(*z, k)).sum())
            .collect();
        return Operator::from_diagonal(a.shared_window(), &vals);
    }
    let adj = linalg::adjoint(a.view());
    let mut pos = linalg::identity(n);
    let mut neg = linalg::identity(n);
    for k in 1..=d {
        pos = pos.dot(a.entries());
        neg = neg.dot(&adj);
        let (cp, cn) = (f.coeff(k), f.coeff(-k));
        if cp != C64::new(0.0, 0.0) {
            acc.scaled_add(cp, &pos);
        }
        if cn != C64::new(0.0, 0.0) {
            acc.scaled_add(cn, &neg);
        }
    }
    a.with_entries(acc)
}

fn laurent_power(z: C64, k: i32) -> C64 {
    if k >= 0 {
        z.powi(k)
    } else {
        z.conj().powi(-k)
    }
}

/// `f(U)` for a unitary `U`; diagonal `U` is handled entrywise.
pub fn apply_circle_function(f: &CircleFunction, u: &Operator) -> Result<Operator> {
    apply_circle_function_tol(f, u, TOL_UNITARY)
}

pub fn apply_circle_function_tol(f: &CircleFunction, u: &Operator, tol: f64) -> Result<Operator> {
    let defect = if u.is_diagonal() {
        u.diagonal()
            .iter()
            .map(|z| (z.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        u.unitarity_defect()?
    };
    if defect > tol {
        return Err(Error::NotUnitary { defect, tol });
    }
    evaluate_laurent(f, u)
}

/// `G = U |G|` from one SVD `G = W Σ V*`: `U = W V*`, `|G| = V Σ V*`.
#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    pub unitary: Array2<C64>,
    /// Right singular vectors as columns.
    pub v: Array2<C64>,
    pub sigma: Vec<f64>,
}

impl PolarDecomposition {
    pub fn new(g: &Operator, tol_inv: f64) -> Result<Self> {
        let (w, s, vt) = linalg::svd(g.view())?;
        let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
        if smin <= tol_inv {
            return Err(Error::Singular { sigma_min: smin, tol: tol_inv });
        }
        Ok(PolarDecomposition {
            unitary: w.dot(&vt),
            v: linalg::adjoint(vt.view()),
            sigma: s.to_vec(),
        })
    }

    /// `|G|^p = V Σ^p V*`.
    pub fn abs_power(&self, p: f64) -> Array2<C64> {
        let mut vs = self.v.clone();
        for (j, mut col) in vs.axis_iter_mut(Axis(1)).enumerate() {
            let f = self.sigma[j].powf(p);
            col.mapv_inplace(|z| z * f);
        }
        vs.dot(&linalg::adjoint(self.v.view()))
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Unitary factor of `G = U|G|`.
pub fn polar_part(g: &Operator) -> Result<Operator> {
    polar_part_tol(g, TOL_INV)
}

pub fn polar_part_tol(g: &Operator, tol_inv: f64) -> Result<Operator> {
    let pd = PolarDecomposition::new(g, tol_inv)?;
    Ok(g.with_entries(pd.unitary)?.named(format!("polar({})", g.name)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Region;
    use crate::operator::Projection;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn laughlin_entries() {
        let w = TruncationWindow::plane(3).unwrap().shared();
        let l = laughlin_operator(w.clone()).unwrap();
        let at = |s: Site| l.get(w.index_of(&s).unwrap(), w.index_of(&s).unwrap());
        assert_eq!(at(Site::Plane(0, 0)), c(1.0, 0.0));
        assert_eq!(at(Site::Plane(1, 0)), c(1.0, 0.0));
        assert_eq!(at(Site::Plane(0, 1)), c(0.0, 1.0));
        let r = at(Site::Plane(1, 1));
        assert!((r - c(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn laughlin_commutes_with_region_projections() {
        let w = TruncationWindow::plane(5).unwrap().shared();
        let l = laughlin_operator(w.clone()).unwrap();
        let p = Projection::from_region(&"(cone[(1,0)..(0,1)]|ball[2])".parse::<Region>().unwrap(), w);
        let lp = l.compose(p.operator()).unwrap();
        let pl = p.operator().compose(&l).unwrap();
        assert_eq!(lp.entries(), pl.entries());
    }

    #[test]
    fn shift_examples() {
        let w = TruncationWindow::line(6).unwrap().shared();
        let id = shift_operator(w.clone(), 0, Boundary::Open).unwrap();
        assert_eq!(id.entries(), &linalg::identity(13));
        let r = shift_operator(w.clone(), 1, Boundary::Periodic).unwrap();
        let rr = r.adjoint().compose(&r).unwrap();
        assert_eq!(rr.entries(), &linalg::identity(13));
        let open = shift_operator(w.clone(), 1, Boundary::Open).unwrap();
        let rrs = open.compose(&open.adjoint()).unwrap();
        assert!(rrs.is_diagonal());
        let kernel = rrs.diagonal().iter().filter(|z| z.re == 0.0).count();
        assert_eq!(kernel, 1);
        let edge = w.index_of(&Site::Line(-6)).unwrap();
        assert_eq!(rrs.get(edge, edge), c(0.0, 0.0));
    }

    #[test]
    fn circle_function_examples() {
        let w = TruncationWindow::line(5).unwrap().shared();
        let r = shift_operator(w.clone(), 1, Boundary::Periodic).unwrap();
        let one = apply_circle_function(&CircleFunction::constant(c(1.0, 0.0)), &r).unwrap();
        assert_eq!(one.entries(), &linalg::identity(11));
        let z = apply_circle_function(&CircleFunction::monomial(1), &r).unwrap();
        assert_eq!(z.entries(), r.entries());

        let pw = TruncationWindow::plane(4).unwrap().shared();
        let l = laughlin_operator(pw.clone()).unwrap();
        let f = CircleFunction::from_terms(&[(1, c(1.0, 0.0)), (-1, c(1.0, 0.0))]);
        let fl = apply_circle_function(&f, &l).unwrap();
        for (i, s) in pw.sites().iter().enumerate() {
            if let Site::Plane(a, b) = *s {
                if (a, b) != (0, 0) {
                    let cos = a as f64 / ((a * a + b * b) as f64).sqrt();
                    assert!((fl.get(i, i) - c(2.0 * cos, 0.0)).norm() < 1e-14);
                }
            }
        }
        let open = shift_operator(w, 1, Boundary::Open).unwrap();
        assert!(matches!(
            apply_circle_function(&CircleFunction::monomial(1), &open),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn bump_profile() {
        let f = CircleFunction::bump(c(0.0, 1.0), 6);
        assert!((f.eval(c(0.0, 1.0)) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(f.eval(c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn polar_examples() {
        let w = TruncationWindow::plane(2).unwrap().shared();
        let two = Operator::identity(w.clone()).scale(c(2.0, 0.0));
        let u = polar_part(&two).unwrap();
        assert!(u.max_diff(&Operator::identity(w.clone())).unwrap() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = w.dimension();
        let g = Operator::new(
            w.clone(),
            Array2::from_shape_fn((n, n), |_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)),
        )
        .unwrap();
        let pd = PolarDecomposition::new(&g, 1e-8).unwrap();
        let back = pd.unitary.dot(&pd.abs_power(1.0));
        assert!(linalg::max_abs((&back - g.entries()).view()) < 1e-12);
        let ug = g.with_entries(pd.unitary.clone()).unwrap();
        assert!(ug.unitarity_defect().unwrap() < 1e-12);
        assert!(matches!(
            polar_part(&Operator::zeros(w)),
            Err(Error::Singular { .. })
        ));
    }
}

use std::sync::Arc as Shared;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;

use super::linalg;
use super::window::TruncationWindow;
use crate::error::{Error, Result};
use crate::geometry::{Region, Site};

/// Dense complex matrix over the basis of a window.
#[derive(Debug, Clone)]
pub struct Operator {
    window: Shared<TruncationWindow>,
    entries: Array2<C64>,
    pub name: String,
    pub lineage: Vec<String>,
}

impl PartialEq for Operator {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.entries == other.entries
    }
}

impl Operator {
    pub fn new(window: Shared<TruncationWindow>, entries: Array2<C64>) -> Result<Self> {
        let n = window.dimension();
        if entries.dim() != (n, n) {
            return Err(Error::WindowMismatch(format!(
                "entries {:?} vs window dimension {n}",
                entries.dim()
            )));
        }
        Ok(Operator {
            window,
            entries,
            name: String::new(),
            lineage: Vec::new(),
        })
    }

    pub fn identity(window: Shared<TruncationWindow>) -> Self {
        let n = window.dimension();
        Self::new(window, linalg::identity(n)).expect("square")
    }

    pub fn zeros(window: Shared<TruncationWindow>) -> Self {
        let n = window.dimension();
        Self::new(window, Array2::zeros((n, n))).expect("square")
    }

    pub fn from_diagonal(window: Shared<TruncationWindow>, diag: &[C64]) -> Result<Self> {
        let n = window.dimension();
        if diag.len() != n {
            return Err(Error::WindowMismatch(format!("{} diagonal entries for dimension {n}", diag.len())));
        }
        let mut m = Array2::zeros((n, n));
        for (i, d) in diag.iter().enumerate() {
            m[[i, i]] = *d;
        }
        Self::new(window, m)
    }

    /// `δ_y ⊗ δ_x*`, mapping `δ_x` to `δ_y`.
    pub fn matrix_unit(window: Shared<TruncationWindow>, y: &Site, x: &Site) -> Result<Self> {
        let (i, j) = match (window.index_of(y), window.index_of(x)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(Error::InvalidArgument("site outside window".into())),
        };
        let mut op = Self::zeros(window);
        op.entries[[i, j]] = C64::new(1.0, 0.0);
        Ok(op)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn derived(mut self, step: impl Into<String>) -> Self {
        self.lineage.push(step.into());
        self
    }

    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    pub fn shared_window(&self) -> Shared<TruncationWindow> {
        self.window.clone()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.entries.view()
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[[i, j]]
    }

    /// Same window, new entries.
    pub fn with_entries(&self, entries: Array2<C64>) -> Result<Self> {
        Operator::new(self.window.clone(), entries)
    }

    fn check(&self, other: &Operator) -> Result<()> {
        self.window.check_same(&other.window)
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        self.with_entries(&self.entries + &other.entries)
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        self.with_entries(&self.entries - &other.entries)
    }

    pub fn scale(&self, c: C64) -> Operator {
        self.with_entries(self.entries.mapv(|z| z * c)).expect("same shape")
    }

    /// `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        self.with_entries(self.entries.dot(&other.entries))
    }

    pub fn adjoint(&self) -> Operator {
        self.with_entries(linalg::adjoint(self.view())).expect("same shape")
    }

    /// Operator norm, largest singular value.
    pub fn norm(&self) -> Result<f64> {
        linalg::op_norm(self.view())
    }

    /// `‖A*A − 𝟙‖`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        Ok(linalg::unitarity_and_sigma_min(self.view())?.0)
    }

    pub fn sigma_min(&self) -> Result<f64> {
        let s = linalg::singular_values(self.view())?;
        Ok(s.last().copied().unwrap_or(0.0))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.entries.diag().to_vec()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries
            .indexed_iter()
            .all(|((i, j), z)| i == j || *z == C64::new(0.0, 0.0))
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        self.entries.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Row indices with non-zero entries in column `j`.
    pub fn column_support(&self, j: usize) -> Vec<usize> {
        self.entries
            .column(j)
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != C64::new(0.0, 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Maximum entrywise distance.
    pub fn max_diff(&self, other: &Operator) -> Result<f64> {
        self.check(other)?;
        Ok(linalg::max_abs((&self.entries - &other.entries).view()))
    }

    /// Operator-norm distance.
    pub fn dist(&self, other: &Operator) -> Result<f64> {
        self.sub(other)?.norm()
    }

    /// `Λ_rows · A · Λ_cols` as a dense matrix on the listed indices.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Array2<C64> {
        linalg::block(self.view(), rows, cols)
    }

    /// `‖Λ_rows A Λ_cols‖`.
    pub fn block_norm(&self, rows: &[usize], cols: &[usize]) -> Result<f64> {
        linalg::op_norm(self.block(rows, cols).view())
    }

    /// `M Λ` for a 0/1 diagonal mask (zeroes columns).
    pub fn mask_columns(&self, mask: &[bool]) -> Operator {
        let mut e = self.entries.clone();
        for (j, keep) in mask.iter().enumerate() {
            if !keep {
                e.column_mut(j).fill(C64::new(0.0, 0.0));
            }
        }
        self.with_entries(e).expect("same shape")
    }

    /// `Λ M` for a 0/1 diagonal mask (zeroes rows).
    pub fn mask_rows(&self, mask: &[bool]) -> Operator {
        let mut e = self.entries.clone();
        for (i, keep) in mask.iter().enumerate() {
            if !keep {
                e.row_mut(i).fill(C64::new(0.0, 0.0));
            }
        }
        self.with_entries(e).expect("same shape")
    }
}

/// Orthogonal projection, with a diagonal mask when it is `Λ_S`.
#[derive(Debug, Clone)]
pub struct Projection {
    op: Operator,
    region: Option<Region>,
    mask: Option<Vec<bool>>,
}

pub const TOL_IDEM: f64 = 1e-10;

impl Projection {
    /// `Λ_S` on the first copy of the window.
    pub fn from_region(region: &Region, window: Shared<TruncationWindow>) -> Self {
        let n = window.n_sites();
        let mut mask = vec![false; window.dimension()];
        for i in region.indices(&window) {
            mask[i] = true;
        }
        debug_assert!(mask.len() >= n);
        let mut p = Self::from_mask(mask, window);
        p.region = Some(region.clone());
        p.op.name = format!("Λ[{region}]");
        p
    }

    pub fn from_mask(mask: Vec<bool>, window: Shared<TruncationWindow>) -> Self {
        let diag: Vec<C64> = mask
            .iter()
            .map(|&b| if b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            .collect();
        let op = Operator::from_diagonal(window, &diag).expect("mask matches window");
        Projection {
            op,
            region: None,
            mask: Some(mask),
        }
    }

    pub fn from_indices(indices: &[usize], window: Shared<TruncationWindow>) -> Self {
        let mut mask = vec![false; window.dimension()];
        for &i in indices {
            mask[i] = true;
        }
        Self::from_mask(mask, window)
    }

    /// Wrap a general operator after checking `‖P − P*‖` and `‖P² − P‖` against `tol`.
    pub fn from_operator(op: Operator, tol: f64) -> Result<Self> {
        let herm = op.sub(&op.adjoint())?.norm()?;
        let idem = op.compose(&op)?.sub(&op)?.norm()?;
        if herm > tol || idem > tol {
            return Err(Error::Precondition(format!(
                "not a projection: ‖P−P*‖ = {herm:.3e}, ‖P²−P‖ = {idem:.3e}"
            )));
        }
        let mask = if op.is_diagonal() {
            let d = op.diagonal();
            if d.iter().all(|z| *z == C64::new(0.0, 0.0) || *z == C64::new(1.0, 0.0)) {
                Some(d.iter().map(|z| z.re == 1.0).collect())
            } else {
                None
            }
        } else {
            None
        };
        Ok(Projection { op, region: None, mask })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn region(&self) -> Option<&Region> {
        self.region.as_ref()
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Indices where a diagonal projection is 1.
    pub fn support(&self) -> Option<Vec<usize>> {
        self.mask
            .as_ref()
            .map(|m| m.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect())
    }

    pub fn window(&self) -> &TruncationWindow {
        self.op.window()
    }

    /// `P⊥ = 𝟙 − P`.
    pub fn complement(&self) -> Projection {
        match &self.mask {
            Some(m) => {
                let mut p = Projection::from_mask(m.iter().map(|b| !b).collect(), self.op.shared_window());
                p.region = self.region.clone().map(Region::complement);
                p
            }
            None => {
                let id = Operator::identity(self.op.shared_window());
                Projection {
                    op: id.sub(&self.op).expect("same window"),
                    region: None,
                    mask: None,
                }
            }
        }
    }

    /// `P A P`.
    pub fn compress(&self, a: &Operator) -> Result<Operator> {
        match &self.mask {
            Some(m) => Ok(a.mask_rows(m).mask_columns(m)),
            None => self.op.compose(a)?.compose(&self.op),
        }
    }

    /// `P A`.
    pub fn left(&self, a: &Operator) -> Result<Operator> {
        match &self.mask {
            Some(m) => Ok(a.mask_rows(m)),
            None => self.op.compose(a),
        }
    }

    /// `A P`.
    pub fn right(&self, a: &Operator) -> Result<Operator> {
        match &self.mask {
            Some(m) => Ok(a.mask_columns(m)),
            None => a.compose(&self.op),
        }
    }

    pub fn trace(&self) -> f64 {
        self.op.diagonal().iter().map(|z| z.re).sum()
    }

    /// `max(‖P − P*‖, ‖P² − P‖)`.
    pub fn defect(&self) -> Result<f64> {
        if self.mask.is_some() {
            return Ok(0.0);
        }
        let herm = self.op.sub(&self.op.adjoint())?.norm()?;
        let idem = self.op.compose(&self.op)?.sub(&self.op)?.norm()?;
        Ok(herm.max(idem))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(r: i64) -> Shared<TruncationWindow> {
        TruncationWindow::plane(r).unwrap().shared()
    }

    #[test]
    fn projection_examples() {
        let win = w(4);
        assert_eq!(Projection::from_region(&Region::empty(), win.clone()).trace(), 0.0);
        let all = Projection::from_region(&Region::everything(), win.clone());
        assert_eq!(all.operator(), &Operator::identity(win.clone()));
        assert_eq!(Projection::from_region(&Region::ball(2), win).trace(), 9.0);
    }

    #[test]
    fn norm_examples() {
        let win = w(3);
        assert!((Operator::identity(win.clone()).norm().unwrap() - 1.0).abs() < 1e-15);
        let e = Operator::matrix_unit(win, &Site::Plane(1, 0), &Site::Plane(0, 2)).unwrap();
        assert_eq!(e.norm().unwrap(), 1.0);
    }

    #[test]
    fn window_mismatch_is_an_error() {
        let a = Operator::identity(w(2));
        let b = Operator::identity(w(3));
        assert!(matches!(a.add(&b), Err(Error::WindowMismatch(_))));
        assert!(a.compose(&b).is_err());
    }

    #[test]
    fn general_projection_check() {
        let win = w(1);
        let mut m = Array2::zeros((5, 5));
        m[[0, 0]] = C64::new(0.5, 0.0);
        m[[0, 1]] = C64::new(0.5, 0.0);
        m[[1, 0]] = C64::new(0.5, 0.0);
        m[[1, 1]] = C64::new(0.5, 0.0);
        let p = Projection::from_operator(Operator::new(win.clone(), m).unwrap(), 1e-10).unwrap();
        assert!(p.mask().is_none());
        assert!((p.complement().trace() - 4.0).abs() < 1e-15);
        let mut bad = Array2::zeros((5, 5));
        bad[[0, 1]] = C64::new(1.0, 0.0);
        assert!(Projection::from_operator(Operator::new(win, bad).unwrap(), 1e-10).is_err());
    }
}

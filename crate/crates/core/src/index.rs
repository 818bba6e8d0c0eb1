//! Fredholm index estimators, the projection index `ind(P·base·P + P⊥)`,
//! non-triviality probes and the index-k factory on the line.

use std::collections::BTreeSet;
use std::sync::Arc as Shared;

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Region, Site};
use crate::operator::{
    apply_circle_function, evaluate_laurent, linalg, shift_operator, Boundary, CircleFunction, Operator, Projection,
    Representation, TruncationWindow, TOL_IDEM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    KernelCount,
    TraceFormula,
    PartialPermutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    pub sv_threshold: f64,
    pub trace_power: u32,
    pub compact_floor: f64,
    /// Fraction of the window radius kept clear of the boundary.
    pub buffer: f64,
    /// Distance from the cut locus within which kernel mass counts; `None` is radius/4.
    pub cut_radius: Option<f64>,
    /// Singular values in `[sv_threshold, gap_floor)` mean no clean gap.
    pub gap_floor: f64,
    pub tol_idem: f64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            sv_threshold: 1e-6,
            trace_power: 4,
            compact_floor: 1e-3,
            buffer: 0.25,
            cut_radius: None,
            gap_floor: 1e-3,
            tol_idem: TOL_IDEM,
        }
    }
}

fn radius_f64(w: &TruncationWindow) -> f64 {
    let r = w.radius();
    *r.numer() as f64 / *r.denom() as f64
}

impl IndexConfig {
    pub fn cut_radius_for(&self, w: &TruncationWindow) -> f64 {
        self.cut_radius.unwrap_or(radius_f64(w) / 4.0)
    }

    pub fn buffer_for(&self, w: &TruncationWindow) -> f64 {
        self.buffer * radius_f64(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    Cut,
    Edge,
}

/// Mass of one near-kernel direction inside the cut neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelVector {
    pub cut_mass: f64,
    pub attribution: Attribution,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexDiagnostics {
    pub near_zero: Vec<f64>,
    pub kernel: Vec<KernelVector>,
    pub cokernel: Vec<KernelVector>,
    pub trace_raw: Option<f64>,
    pub trace_residual: Option<f64>,
    pub cut_locus: Vec<Site>,
    pub cut_radius: f64,
    /// Value of the cross-check method, when one ran.
    pub cross_check: Option<(IndexMethod, i64)>,
    pub config: Option<IndexConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub value: i64,
    pub method: IndexMethod,
    pub diagnostics: IndexDiagnostics,
}

impl IndexResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sites within `r` of the locus, or at depth at least `buffer` when the locus is empty.
fn cut_mask(w: &TruncationWindow, locus: Option<&[Site]>, r: f64, buffer: f64) -> Vec<bool> {
    let n = w.n_sites();
    (0..w.dimension())
        .map(|i| {
            let site = w.sites()[i % n];
            match locus {
                Some(l) => l.iter().any(|c| (c.dist_sq(&site) as f64) <= r * r),
                None => w.depth(&site) >= buffer,
            }
        })
        .collect()
}

fn contaminated(what: &str) -> Error {
    Error::BoundaryContaminated(format!("{what}; try a larger window"))
}

/// Split a null space by the mass each direction keeps on `mask`.
fn classify(basis: &Array2<C64>, mask: &[bool]) -> Result<Vec<KernelVector>> {
    if basis.ncols() == 0 {
        return Ok(Vec::new());
    }
    let rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let sub = basis.select(Axis(0), &rows);
    let gram = linalg::adjoint(sub.view()).dot(&sub);
    let (vals, _) = gram.eigh(UPLO::Upper)?;
    vals.iter()
        .map(|&m| {
            let m = m.clamp(0.0, 1.0);
            if m >= 0.9 {
                Ok(KernelVector { cut_mass: m, attribution: Attribution::Cut })
            } else if m <= 0.1 {
                Ok(KernelVector { cut_mass: m, attribution: Attribution::Edge })
            } else {
                Err(contaminated(&format!("kernel direction with {:.0}% of its mass at the cut", 100.0 * m)))
            }
        })
        .collect()
}

fn count_cut(v: &[KernelVector]) -> i64 {
    v.iter().filter(|k| k.attribution == Attribution::Cut).count() as i64
}

fn kernel_count(t: &Operator, mask: &[bool], config: &IndexConfig, diag: &mut IndexDiagnostics) -> Result<i64> {
    let (u, s, vt) = linalg::svd(t.view())?;
    if let Some(bad) = s.iter().find(|&&x| x >= config.sv_threshold && x < config.gap_floor) {
        return Err(contaminated(&format!("singular value {bad:.3e} inside the threshold gap")));
    }
    let zero: Vec<usize> = (0..s.len()).filter(|&i| s[i] < config.sv_threshold).collect();
    diag.near_zero = zero.iter().map(|&i| s[i]).collect();
    let right = linalg::adjoint(vt.view()).select(Axis(1), &zero);
    let left = u.select(Axis(1), &zero);
    diag.kernel = classify(&right, mask)?;
    diag.cokernel = classify(&left, mask)?;
    Ok(count_cut(&diag.kernel) - count_cut(&diag.cokernel))
}

fn defect_power(a: &Array2<C64>, m: u32) -> Array2<C64> {
    let mut p = a.clone();
    for _ in 1..m {
        p = p.dot(a);
    }
    p
}

fn trace_formula(t: &Operator, mask: &[bool], config: &IndexConfig, diag: &mut IndexDiagnostics) -> Result<i64> {
    let n = t.dim();
    let id = linalg::identity(n);
    let adj = linalg::adjoint(t.view());
    let m = config.trace_power.max(1);
    let left = defect_power(&(&id - &adj.dot(t.entries())), m);
    let right = defect_power(&(&id - &t.entries().dot(&adj)), m);
    let raw: f64 = (0..n).filter(|&i| mask[i]).map(|i| left[[i, i]].re - right[[i, i]].re).sum();
    let value = raw.round();
    let residual = (raw - value).abs();
    diag.trace_raw = Some(raw);
    diag.trace_residual = Some(residual);
    if residual > 0.25 {
        return Err(contaminated(&format!("trace {raw:.4} is not near an integer")));
    }
    Ok(value as i64)
}

/// At most one entry per row and column, each of modulus at least 1/2.
fn is_partial_permutation(t: &Operator) -> bool {
    let n = t.dim();
    let mut col_count = vec![0usize; n];
    for i in 0..n {
        let mut row_count = 0;
        for j in 0..n {
            let z = t.get(i, j);
            if z != C64::new(0.0, 0.0) {
                if z.norm() < 0.5 {
                    return false;
                }
                row_count += 1;
                col_count[j] += 1;
                if row_count > 1 || col_count[j] > 1 {
                    return false;
                }
            }
        }
    }
    true
}

fn partial_permutation(t: &Operator, mask: &[bool], diag: &mut IndexDiagnostics) -> Result<i64> {
    if !is_partial_permutation(t) {
        return Err(Error::InvalidArgument("operator is not a partial permutation".into()));
    }
    let n = t.dim();
    let zero = C64::new(0.0, 0.0);
    let attribute = |i: usize| KernelVector {
        cut_mass: if mask[i] { 1.0 } else { 0.0 },
        attribution: if mask[i] { Attribution::Cut } else { Attribution::Edge },
    };
    diag.kernel = (0..n).filter(|&j| t.entries().column(j).iter().all(|z| *z == zero)).map(attribute).collect();
    diag.cokernel = (0..n).filter(|&i| t.entries().row(i).iter().all(|z| *z == zero)).map(attribute).collect();
    diag.near_zero = vec![0.0; diag.kernel.len()];
    Ok(count_cut(&diag.kernel) - count_cut(&diag.cokernel))
}

/// Index of `T` with near-kernel directions attributed to the cut locus.
/// Without a locus, the interior (depth ≥ buffer) plays the role of the cut.
pub fn fredholm_index_at(
    t: &Operator,
    method: IndexMethod,
    locus: Option<&[Site]>,
    config: &IndexConfig,
) -> Result<IndexResult> {
    let w = t.window();
    let r = config.cut_radius_for(w);
    let mask = cut_mask(w, locus, r, config.buffer_for(w));
    let mut diag = IndexDiagnostics {
        cut_locus: locus.map(|l| l.to_vec()).unwrap_or_default(),
        cut_radius: r,
        config: Some(config.clone()),
        ..Default::default()
    };
    let value = match method {
        IndexMethod::KernelCount => kernel_count(t, &mask, config, &mut diag)?,
        IndexMethod::TraceFormula => trace_formula(t, &mask, config, &mut diag)?,
        IndexMethod::PartialPermutation => partial_permutation(t, &mask, &mut diag)?,
    };
    Ok(IndexResult { value, method, diagnostics: diag })
}

pub fn fredholm_index(t: &Operator, method: IndexMethod, config: &IndexConfig) -> Result<IndexResult> {
    fredholm_index_at(t, method, None, config)
}

fn neighbors(s: &Site) -> Vec<Site> {
    match *s {
        Site::Line(x) => vec![Site::Line(x - 1), Site::Line(x + 1)],
        Site::Plane(a, b) => vec![
            Site::Plane(a + 1, b),
            Site::Plane(a - 1, b),
            Site::Plane(a, b + 1),
            Site::Plane(a, b - 1),
        ],
    }
}

/// Sites where `P` is not a 0/1 diagonal entry, plus sites whose rounded
/// diagonal differs from a lattice neighbor.
pub fn cut_locus(p: &Projection) -> Vec<Site> {
    let op = p.operator();
    let w = op.window();
    let n = w.n_sites();
    let mut locus = BTreeSet::new();
    let mut level = vec![0u8; op.dim()];
    for i in 0..op.dim() {
        let d = op.get(i, i).re;
        let off: f64 = (0..op.dim()).filter(|&j| j != i).map(|j| op.get(i, j).norm_sqr()).sum();
        level[i] = u8::from(d >= 0.5);
        if off > 1e-16 || (d - d.round()).abs() > 1e-8 {
            locus.insert(i);
        }
    }
    for i in 0..op.dim() {
        let (copy, site) = w.site_of(i);
        for nb in neighbors(&site) {
            if let Some(j) = w.index_in_copy(&nb, copy) {
                if level[i] != level[j] {
                    locus.insert(i);
                }
            }
        }
    }
    let mut sites: Vec<Site> = locus.into_iter().map(|i| w.sites()[i % n]).collect();
    sites.sort_by_key(|s| w.index_of(s));
    sites.dedup();
    sites
}

/// `P·base·P + P⊥`.
pub fn compressed(p: &Projection, base: &Operator) -> Result<Operator> {
    let pbp = p.compress(base)?;
    pbp.add(p.complement().operator())
}

/// `ind(P·base·P + P⊥)`: partial permutation counting when the structure
/// admits it, kernel counting otherwise, with the trace formula as cross-check.
pub fn projection_index(p: &Projection, base: &Operator) -> Result<IndexResult> {
    projection_index_with(p, base, &IndexConfig::default())
}

pub fn projection_index_with(p: &Projection, base: &Operator, config: &IndexConfig) -> Result<IndexResult> {
    p.window().check_same(base.window())?;
    let t = compressed(p, base)?;
    let locus = cut_locus(p);
    let primary = if is_partial_permutation(&t) {
        IndexMethod::PartialPermutation
    } else {
        IndexMethod::KernelCount
    };
    let mut result = fredholm_index_at(&t, primary, Some(&locus), config)?;
    let check = fredholm_index_at(&t, IndexMethod::TraceFormula, Some(&locus), config)?;
    if check.value != result.value {
        return Err(Error::Precondition(format!(
            "index methods disagree: {:?} = {}, trace formula = {}",
            primary, result.value, check.value
        )));
    }
    result.diagnostics.trace_raw = check.diagnostics.trace_raw;
    result.diagnostics.trace_residual = check.diagnostics.trace_residual;
    result.diagnostics.cross_check = Some((IndexMethod::TraceFormula, check.value));
    Ok(result)
}

/// Open shift `R^{−k}` and the half-line projection `Λ_{x ≥ 1}`.
pub fn index_k_projection(k: i64, window: Shared<TruncationWindow>) -> Result<(Operator, Projection)> {
    if window.representation() != Representation::Z {
        return Err(Error::Representation {
            expected: Representation::Z.to_string(),
            found: window.representation().to_string(),
        });
    }
    if (4 * k.abs()) as f64 > radius_f64(&window) {
        return Err(Error::Precondition(format!("|k| = {} exceeds radius/4", k.abs())));
    }
    let base = shift_operator(window.clone(), -k, Boundary::Open)?;
    let p = Projection::from_region(&Region::HalfLine(1), window);
    Ok((base, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Projection,
    Complement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub side: Side,
    pub function: usize,
    pub site: Site,
    pub norm: f64,
    /// Whether the probe lies on this side and away from the cut.
    pub far: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub side: Side,
    pub function: usize,
    pub far_min: Option<f64>,
    pub far_probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NontrivialityReport {
    pub entries: Vec<ProbeEntry>,
    pub summary: Vec<ProbeSummary>,
    /// Functions whose far-probe minimum falls below the floor on some side.
    pub trivial_suspect: Vec<usize>,
    /// Zero functions.
    pub degenerate: Vec<usize>,
    pub compact_floor: f64,
}

impl NontrivialityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Column norms `‖P f(base) P δ_x‖` and `‖P⊥ f(base) P⊥ δ_x‖` at each probe.
pub fn nontriviality_probe(
    p: &Projection,
    base: &Operator,
    fns: &[CircleFunction],
    probes: &[Site],
    config: &IndexConfig,
) -> Result<NontrivialityReport> {
    if fns.is_empty() || probes.is_empty() {
        return Err(Error::InvalidArgument("need at least one function and one probe".into()));
    }
    let w = p.window();
    w.check_same(base.window())?;
    let buffer = config.buffer_for(w);
    let idx: Vec<usize> = probes
        .iter()
        .map(|x| match w.index_of(x) {
            Some(i) if w.depth(x) >= buffer => Ok(i),
            _ => Err(Error::Precondition(format!("probe {x} is within {buffer} of the boundary"))),
        })
        .collect::<Result<_>>()?;
    let locus = cut_locus(p);
    let far_r = config.cut_radius_for(w);
    let away = |x: &Site| locus.iter().all(|c| (c.dist_sq(x) as f64) > far_r * far_r);
    let q = p.complement();
    let sides = [(Side::Projection, p), (Side::Complement, &q)];

    let mut entries = Vec::new();
    let mut summary = Vec::new();
    let mut trivial_suspect = Vec::new();
    let mut degenerate = Vec::new();
    for (fi, f) in fns.iter().enumerate() {
        if f.is_zero() {
            degenerate.push(fi);
        }
        let fa = evaluate_laurent(f, base)?;
        let mut suspect = false;
        for (side, proj) in &sides {
            let c = proj.compress(&fa)?;
            let mut far_min: Option<f64> = None;
            let mut far_probes = 0;
            for (x, &i) in probes.iter().zip(&idx) {
                let norm = c.column_norm(i);
                let on_side = proj.operator().get(i, i).re >= 0.5;
                let far = on_side && away(x);
                if far {
                    far_probes += 1;
                    far_min = Some(far_min.map_or(norm, |m: f64| m.min(norm)));
                }
                entries.push(ProbeEntry { side: *side, function: fi, site: *x, norm, far });
            }
            if far_min.is_some_and(|m| m < config.compact_floor) {
                suspect = true;
            }
            summary.push(ProbeSummary { side: *side, function: fi, far_min, far_probes });
        }
        if suspect {
            trivial_suspect.push(fi);
        }
    }
    Ok(NontrivialityReport {
        entries,
        summary,
        trivial_suspect,
        degenerate,
        compact_floor: config.compact_floor,
    })
}

/// Spread of the column norms of `f(R)` for the periodic shift.
pub fn translation_invariance_check(f: &CircleFunction, window: Shared<TruncationWindow>) -> Result<f64> {
    let r = shift_operator(window, 1, Boundary::Periodic)?;
    let fr = apply_circle_function(f, &r)?;
    let norms: Array1<f64> = (0..fr.dim()).map(|j| fr.column_norm(j)).collect();
    let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(r: i64) -> Shared<TruncationWindow> {
        TruncationWindow::line(r).unwrap().shared()
    }

    #[test]
    fn compressed_shift_is_minus_one() {
        let w = line(16);
        let r = shift_operator(w.clone(), 1, Boundary::Open).unwrap();
        let p = Projection::from_region(&Region::HalfLine(1), w);
        let t = compressed(&p, &r).unwrap();
        let locus = cut_locus(&p);
        assert_eq!(locus, vec![Site::Line(0), Site::Line(1)]);
        let cfg = IndexConfig::default();
        for m in [IndexMethod::KernelCount, IndexMethod::TraceFormula, IndexMethod::PartialPermutation] {
            assert_eq!(fredholm_index_at(&t, m, Some(&locus), &cfg).unwrap().value, -1, "{m:?}");
        }
        assert_eq!(fredholm_index(&t, IndexMethod::KernelCount, &cfg).unwrap().value, -1);
    }

    #[test]
    fn periodic_shift_has_index_zero() {
        let w = line(10);
        let r = shift_operator(w, 1, Boundary::Periodic).unwrap();
        let cfg = IndexConfig::default();
        assert_eq!(fredholm_index(&r, IndexMethod::KernelCount, &cfg).unwrap().value, 0);
        assert_eq!(fredholm_index(&r, IndexMethod::TraceFormula, &cfg).unwrap().value, 0);
    }

    #[test]
    fn two_step_left_shift() {
        let w = line(20);
        let r = shift_operator(w.clone(), -2, Boundary::Open).unwrap();
        let p = Projection::from_region(&Region::HalfLine(1), w);
        assert_eq!(projection_index(&p, &r).unwrap().value, 2);
    }

    #[test]
    fn factory_rejects_large_k() {
        assert!(index_k_projection(5, line(16)).is_err());
        assert!(index_k_projection(4, line(16)).is_ok());
    }

    #[test]
    fn trivial_projections() {
        let w = line(12);
        let (base, _) = index_k_projection(1, w.clone()).unwrap();
        let zero = Projection::from_region(&Region::empty(), w.clone());
        let one = Projection::from_region(&Region::everything(), w);
        assert_eq!(projection_index(&zero, &base).unwrap().value, 0);
        assert_eq!(projection_index(&one, &base).unwrap().value, 0);
    }

    #[test]
    fn probe_half_line() {
        let w = line(32);
        let (base, p) = index_k_projection(-1, w).unwrap();
        let f = CircleFunction::monomial(1);
        let rep = nontriviality_probe(&p, &base, &[f], &[Site::Line(-12), Site::Line(12)], &IndexConfig::default()).unwrap();
        assert!(rep.trivial_suspect.is_empty());
        for s in &rep.summary {
            assert_eq!(s.far_min, Some(1.0));
        }
        let zero = CircleFunction::constant(C64::new(0.0, 0.0));
        let rep = nontriviality_probe(&p, &base, &[zero], &[Site::Line(12)], &IndexConfig::default()).unwrap();
        assert_eq!(rep.degenerate, vec![0]);
    }

    #[test]
    fn translation_spread() {
        let f = CircleFunction::monomial(1);
        assert!(translation_invariance_check(&f, line(8)).unwrap() < 1e-15);
    }
}

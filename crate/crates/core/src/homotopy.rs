//! Operator paths: segments, concatenation, certification by sampling, and
//! the two assembled pipelines.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc as Shared;

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Arc, Direction, DirectionEnumerator, Rational, Region};
use crate::index::{projection_index_with, IndexConfig};
use crate::operator::{
    export_operator, linalg, Encoding, Operator, PolarDecomposition, Projection, TruncationWindow, TOL_INV,
    TOL_UNITARY,
};
use crate::surgery::{corrective_unitary, greedy_isometry, localized_centers, CentersPlan, MixingReport, PartialIsometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    StraightLine,
    Polar,
    BlockPeel,
    Log,
    Conjugation,
    BlockUnitary,
}

/// `Z diag(e^{i(1−t)θ}) Z*` on the index set `idx`, identity elsewhere.
#[derive(Debug, Clone)]
pub struct LogBlock {
    pub idx: Vec<usize>,
    pub z: Array2<C64>,
    pub phases: Vec<f64>,
}

impl LogBlock {
    fn at(&self, t: f64) -> Array2<C64> {
        let d: Vec<C64> = self.phases.iter().map(|th| C64::from_polar(1.0, (1.0 - t) * th)).collect();
        linalg::reconstruct(self.z.view(), &d)
    }
}

#[derive(Debug, Clone)]
enum Payload {
    StraightLine { a0: Array2<C64>, a1: Array2<C64> },
    Polar { wv: Array2<C64>, pd: PolarDecomposition },
    BlockPeel { first: Array2<C64>, corner: Array2<C64> },
    Log { dim: usize, blocks: Vec<LogBlock> },
    Conjugation { q: Array2<C64>, upath: Box<HomotopyPath> },
    BlockUnitary { n_sites: usize, sigma: Vec<Option<usize>>, inner: Box<HomotopyPath> },
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub kind: SegmentKind,
    pub label: String,
    pub reversed: bool,
    /// Exactly constant in the parameter.
    pub constant: bool,
    payload: Payload,
    right: Option<Shared<Array2<C64>>>,
}

impl Segment {
    fn new(kind: SegmentKind, label: impl Into<String>, payload: Payload, constant: bool) -> Self {
        Segment {
            kind,
            label: label.into(),
            reversed: false,
            constant,
            payload,
            right: None,
        }
    }

    fn param(&self, s: f64) -> f64 {
        if self.reversed {
            1.0 - s
        } else {
            s
        }
    }

    /// Value at local parameter `s ∈ [0, 1]`.
    pub fn sample(&self, s: f64) -> Array2<C64> {
        let t = self.param(s);
        if let (Payload::Log { blocks, .. }, Some(g)) = (&self.payload, &self.right) {
            // only the rows touched by a block change
            let mut out = g.as_ref().clone();
            for b in blocks {
                let rows = g.select(Axis(0), &b.idx);
                let new = b.at(t).dot(&rows);
                for (k, &i) in b.idx.iter().enumerate() {
                    out.row_mut(i).assign(&new.row(k));
                }
            }
            return out;
        }
        let a = match &self.payload {
            Payload::StraightLine { a0, a1 } => a0 * C64::new(1.0 - t, 0.0) + a1 * C64::new(t, 0.0),
            Payload::Polar { wv, pd, .. } => {
                let mut scaled = wv.clone();
                for (j, mut col) in scaled.axis_iter_mut(Axis(1)).enumerate() {
                    let f = pd.sigma[j].powf(1.0 - t);
                    col.mapv_inplace(|z| z * f);
                }
                scaled.dot(&linalg::adjoint(pd.v.view()))
            }
            Payload::BlockPeel { first, corner } => {
                let mut m = linalg::identity(first.nrows());
                m.scaled_add(C64::new(t, 0.0), corner);
                first.dot(&m)
            }
            Payload::Log { dim, blocks } => {
                let mut m = linalg::identity(*dim);
                for b in blocks {
                    linalg::scatter(&mut m, &b.idx, b.at(t).view());
                }
                m
            }
            Payload::Conjugation { q, upath } => {
                let u = upath.sample(t);
                linalg::adjoint(u.view()).dot(q).dot(&u)
            }
            Payload::BlockUnitary { n_sites, sigma, inner } => block_unitary_at(*n_sites, sigma, inner, t),
        };
        match &self.right {
            Some(g) => a.dot(g.as_ref()),
            None => a,
        }
    }
}

/// Segments concatenated with equal parameter weight.
#[derive(Debug, Clone)]
pub struct HomotopyPath {
    window: Shared<TruncationWindow>,
    pub segments: Vec<Segment>,
    /// Whether the path is projection valued.
    pub projection: bool,
    start: Array2<C64>,
    end: Array2<C64>,
}

pub const TOL_CONTINUITY: f64 = 1e-9;

impl HomotopyPath {
    fn single(window: Shared<TruncationWindow>, seg: Segment) -> Self {
        let start = seg.sample(0.0);
        let end = seg.sample(1.0);
        HomotopyPath {
            window,
            segments: vec![seg],
            projection: false,
            start,
            end,
        }
    }

    pub fn window(&self) -> &TruncationWindow {
        &self.window
    }

    pub fn shared_window(&self) -> Shared<TruncationWindow> {
        self.window.clone()
    }

    /// Declared endpoints.
    pub fn endpoints(&self) -> (&Array2<C64>, &Array2<C64>) {
        (&self.start, &self.end)
    }

    /// Override the declared endpoints after checking them against the samples.
    pub fn declare(mut self, start: &Operator, end: &Operator) -> Result<Self> {
        let e0 = linalg::max_abs((&self.sample(0.0) - start.entries()).view());
        let e1 = linalg::max_abs((&self.sample(1.0) - end.entries()).view());
        if e0 > TOL_CONTINUITY || e1 > TOL_CONTINUITY {
            return Err(Error::Precondition(format!(
                "declared endpoints off by {e0:.3e} and {e1:.3e}"
            )));
        }
        self.start = start.entries().clone();
        self.end = end.entries().clone();
        Ok(self)
    }

    pub fn reversed(mut self) -> Self {
        self.segments.reverse();
        for s in &mut self.segments {
            s.reversed = !s.reversed;
        }
        std::mem::swap(&mut self.start, &mut self.end);
        self
    }

    /// Concatenate, checking that the joint agrees within `1e−9`.
    pub fn then(mut self, other: HomotopyPath) -> Result<Self> {
        self.window.check_same(&other.window)?;
        let gap = linalg::max_abs((&self.end - &other.start).view());
        if gap > TOL_CONTINUITY {
            return Err(Error::Precondition(format!("segments do not meet: gap {gap:.3e}")));
        }
        self.segments.extend(other.segments);
        self.end = other.end;
        self.projection = self.projection && other.projection;
        Ok(self)
    }

    /// `t ↦ A_t·G` for every segment.
    pub fn right_multiply(mut self, g: &Operator) -> Result<Self> {
        self.window.check_same(g.window())?;
        let shared = Shared::new(g.entries().clone());
        for s in &mut self.segments {
            s.right = Some(match &s.right {
                Some(r) => Shared::new(r.dot(g.entries())),
                None => shared.clone(),
            });
        }
        self.start = self.start.dot(g.entries());
        self.end = self.end.dot(g.entries());
        Ok(self)
    }

    /// Segment and local parameter for a global `t`.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let m = self.segments.len();
        let x = t.clamp(0.0, 1.0) * m as f64;
        let i = (x.floor() as usize).min(m - 1);
        (i, x - i as f64)
    }

    pub fn sample(&self, t: f64) -> Array2<C64> {
        let (i, s) = self.locate(t);
        self.segments[i].sample(s)
    }

    pub fn sample_operator(&self, t: f64) -> Result<Operator> {
        Operator::new(self.window.clone(), self.sample(t))
    }

    /// Largest mismatch between adjacent segment endpoints.
    pub fn continuity_gap(&self) -> f64 {
        self.segments
            .windows(2)
            .map(|w| linalg::max_abs((&w[0].sample(1.0) - &w[1].sample(0.0)).view()))
            .fold(0.0, f64::max)
    }

    /// Write each segment's endpoints as `opmat` files and return the manifest.
    pub fn write_manifest(&self, dir: &Path) -> Result<PathManifest> {
        std::fs::create_dir_all(dir)?;
        let mut segments = Vec::new();
        for (i, s) in self.segments.iter().enumerate() {
            let mut files = Vec::new();
            for (tag, t) in [("start", 0.0), ("end", 1.0)] {
                let name = format!("segment{i:02}_{tag}.opmat");
                let op = Operator::new(self.window.clone(), s.sample(t))?.named(format!("{} {tag}", s.label));
                export_operator(&op, &dir.join(&name), Encoding::Binary)?;
                files.push(name);
            }
            segments.push(ManifestSegment {
                kind: s.kind,
                label: s.label.clone(),
                reversed: s.reversed,
                payload: files,
            });
        }
        let manifest = PathManifest {
            window: self.window.to_string(),
            projection: self.projection,
            segments,
        };
        std::fs::write(dir.join("path.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSegment {
    pub kind: SegmentKind,
    pub label: String,
    pub reversed: bool,
    pub payload: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathManifest {
    pub window: String,
    pub projection: bool,
    pub segments: Vec<ManifestSegment>,
}

/// `t ↦ (1−t)A0 + tA1`.
pub fn straight_line(a0: &Operator, a1: &Operator) -> Result<HomotopyPath> {
    a0.window().check_same(a1.window())?;
    let constant = a0.entries() == a1.entries();
    let seg = Segment::new(
        SegmentKind::StraightLine,
        format!("{} → {}", a0.name, a1.name),
        Payload::StraightLine {
            a0: a0.entries().clone(),
            a1: a1.entries().clone(),
        },
        constant,
    );
    Ok(HomotopyPath::single(a0.shared_window(), seg))
}

/// `t ↦ U|G|^{1−t}` from `G` to its polar part `U`.
pub fn polar_path(g: &Operator) -> Result<HomotopyPath> {
    let pd = PolarDecomposition::new(g, TOL_INV)?;
    let constant = pd.sigma.iter().all(|&s| s == 1.0);
    let seg = Segment::new(
        SegmentKind::Polar,
        format!("polar({})", g.name),
        Payload::Polar {
            wv: pd.unitary.dot(&pd.v),
            pd,
        },
        constant,
    );
    Ok(HomotopyPath::single(g.shared_window(), seg))
}

/// Factors of `M = (P + P⊥MP⊥)(𝟙 + PMP⊥)`.
#[derive(Debug, Clone)]
pub struct Peel {
    pub first: Operator,
    pub second: Operator,
    pub path: HomotopyPath,
    pub product_error: f64,
}

/// Split `M` with `PMP = P`, `P⊥MP = 0` and return the path
/// `t ↦ (P + P⊥MP⊥)(𝟙 + tPMP⊥)` from the first factor to `M`.
pub fn block_peel(m: &Operator, p: &Projection) -> Result<Peel> {
    let q = p.complement();
    let pmp = p.compress(m)?;
    let r_diag = pmp.sub(p.operator())?.norm()?;
    let r_low = q.left(&p.right(m)?)?.norm()?;
    if r_diag > 1e-8 || r_low > 1e-8 {
        return Err(Error::BlockForm(format!(
            "‖PMP − P‖ = {r_diag:.3e}, ‖P⊥MP‖ = {r_low:.3e}"
        )));
    }
    let corner = p.left(&q.right(m)?)?;
    let first = p.operator().add(&q.compress(m)?)?.named("P + P⊥MP⊥");
    let second = Operator::identity(m.shared_window()).add(&corner)?.named("𝟙 + PMP⊥");
    let product_error = linalg::max_abs((&first.entries().dot(second.entries()) - m.entries()).view());
    if product_error > 1e-10 {
        return Err(Error::BlockForm(format!("factor product off by {product_error:.3e}")));
    }
    let constant = corner.entries().iter().all(|z| *z == C64::new(0.0, 0.0));
    let seg = Segment::new(
        SegmentKind::BlockPeel,
        "block peel",
        Payload::BlockPeel {
            first: first.entries().clone(),
            corner: corner.into_entries(),
        },
        constant,
    );
    let path = HomotopyPath::single(m.shared_window(), seg);
    Ok(Peel { first, second, path, product_error })
}

/// Connected components of the non-identity part of `u`.
fn active_components(u: &Array2<C64>) -> Vec<Vec<usize>> {
    let n = u.nrows();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut active = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            let z = u[[i, j]];
            let off = if i == j { z != one } else { z != zero };
            if off {
                active[i] = true;
                active[j] = true;
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in (0..n).filter(|&i| active[i]) {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Eigen-logarithm path `t ↦ W e^{i(1−t)Θ} W*` from `U` to `𝟙`, computed
/// block by block on the connected non-identity part of `U`.
/// Eigenphases lie in `(−π, π]`.
pub fn log_path(u: &Operator) -> Result<HomotopyPath> {
    let defect = u.unitarity_defect()?;
    if defect > TOL_UNITARY {
        return Err(Error::NotUnitary { defect, tol: TOL_UNITARY });
    }
    log_path_unchecked(u)
}

fn log_path_unchecked(u: &Operator) -> Result<HomotopyPath> {
    let mut blocks = Vec::new();
    for idx in active_components(u.entries()) {
        let sub = linalg::gather(u.view(), &idx);
        let (z, w) = linalg::schur(sub.view())?;
        let phases = w.iter().map(|&e| linalg::principal_phase(e)).collect();
        blocks.push(LogBlock { idx, z, phases });
    }
    let constant = blocks.is_empty();
    let seg = Segment::new(
        SegmentKind::Log,
        format!("log({})", u.name),
        Payload::Log { dim: u.dim(), blocks },
        constant,
    );
    let mut path = HomotopyPath::single(u.shared_window(), seg);
    path.start = u.entries().clone();
    Ok(path)
}

/// `t ↦ U_t* Q U_t`.
pub fn conjugation_path(q: &Projection, upath: &HomotopyPath) -> Result<HomotopyPath> {
    q.window().check_same(upath.window())?;
    let constant = upath.segments.iter().all(|s| s.constant);
    let seg = Segment::new(
        SegmentKind::Conjugation,
        format!("conj({})", q.operator().name),
        Payload::Conjugation {
            q: q.operator().entries().clone(),
            upath: Box::new(upath.clone()),
        },
        constant,
    );
    let mut path = HomotopyPath::single(upath.shared_window(), seg);
    path.projection = true;
    Ok(path)
}

/// `U ⊕ 𝟙_n` on the amplified window with `copies` copies.
pub fn amplify(u: &Operator, copies: usize) -> Result<Operator> {
    let w = u.window().base().amplified(copies)?.shared();
    let mut m = linalg::identity(w.dimension());
    let n = u.dim();
    m.slice_mut(ndarray::s![..n, ..n]).assign(u.entries());
    Operator::new(w, m)
}

/// Row map of a partial permutation: `σ(i) = j` when `V[i, j] = 1`.
fn partial_permutation_map(v: &Operator) -> Option<Vec<Option<usize>>> {
    let n = v.dim();
    let mut sigma = vec![None; n];
    let mut used = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            let z = v.get(i, j);
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            if z != C64::new(1.0, 0.0) || sigma[i].is_some() || used[j] {
                return None;
            }
            sigma[i] = Some(j);
            used[j] = true;
        }
    }
    Some(sigma)
}

/// `Z_t = V W_t V* + (𝟙 − VV*)` restricted to the first copy.
fn block_unitary_at(n_sites: usize, sigma: &[Option<usize>], inner: &HomotopyPath, t: f64) -> Array2<C64> {
    let mut z = linalg::identity(n_sites);
    if let [seg] = inner.segments.as_slice() {
        if let (Payload::Log { blocks, .. }, None) = (&seg.payload, &seg.right) {
            // W_t is the identity off its blocks, so only their preimages move
            let mut pre = HashMap::new();
            for (i, s) in sigma.iter().enumerate().take(n_sites) {
                if let Some(s) = s {
                    pre.insert(*s, i);
                }
            }
            let lt = seg.param(t);
            for b in blocks {
                let wb = b.at(lt);
                let rows: Vec<(usize, usize)> =
                    b.idx.iter().enumerate().filter_map(|(k, j)| pre.get(j).map(|&i| (k, i))).collect();
                for &(a, i) in &rows {
                    for &(c, j) in &rows {
                        z[[i, j]] = wb[[a, c]];
                    }
                }
            }
            return z;
        }
    }
    let w = inner.sample(t);
    let rows: Vec<(usize, usize)> = (0..n_sites).filter_map(|i| sigma[i].map(|s| (i, s))).collect();
    for &(i, si) in &rows {
        for &(j, sj) in &rows {
            z[[i, j]] = w[[si, sj]];
        }
    }
    z
}

/// Residuals checked by [`block_unitary_homotopy`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockUnitaryChecks {
    pub block_form: f64,
    pub isometry: f64,
    /// Largest entry of `W_t − 𝟙` outside `V*V`, sampled at the inner endpoints.
    pub uncovered: f64,
    pub inner_start: f64,
    pub inner_end: f64,
    pub z0: f64,
    pub z1: f64,
    /// Sites of the first copy outside the range of `V`.
    pub range_gap: usize,
}

/// Path `Z_t = V W_t V* + (𝟙 − VV*)` on the first copy, from `𝟙` to `U`.
///
/// `v_iso` lives on the amplified window and must be a partial permutation
/// whose rows sit in the first copy. The inner path runs from `𝟙` to
/// `U ⊕ 𝟙_n` and must move only vectors in the initial space of `V`.
pub fn block_unitary_homotopy(
    u: &Operator,
    p: &Projection,
    v_iso: &Operator,
    inner: &HomotopyPath,
) -> Result<(HomotopyPath, BlockUnitaryChecks)> {
    let mut checks = BlockUnitaryChecks::default();
    let q = p.complement();
    let pup = p.compress(u)?.sub(p.operator())?.norm()?;
    let cross = p.left(&q.right(u)?)?.norm()?.max(q.left(&p.right(u)?)?.norm()?);
    checks.block_form = pup.max(cross);
    if checks.block_form > 1e-8 {
        return Err(Error::Precondition(format!("U ≠ P + P⊥UP⊥: residual {:.3e}", checks.block_form)));
    }
    let n_sites = u.dim();
    let amp = v_iso.window();
    if amp.base() != u.window().base() || inner.window() != amp {
        return Err(Error::WindowMismatch("V, inner path and U must share the base window".into()));
    }
    let sigma = partial_permutation_map(v_iso)
        .ok_or_else(|| Error::Precondition("V is not a partial isometry of permutation type".into()))?;
    if sigma[n_sites..].iter().any(Option::is_some) {
        return Err(Error::Precondition("V has rows outside the first copy".into()));
    }
    // V*V and VV* are exact 0/1 diagonals for a partial permutation
    checks.isometry = 0.0;
    let mut initial = vec![false; amp.dimension()];
    for s in sigma.iter().flatten() {
        initial[*s] = true;
    }
    checks.range_gap = sigma[..n_sites].iter().filter(|s| s.is_none()).count();

    let amp_u = amplify(u, amp.copies())?;
    let (w0, w1) = (inner.sample(0.0), inner.sample(1.0));
    checks.inner_start = linalg::max_abs((&w0 - &linalg::identity(w0.nrows())).view());
    checks.inner_end = linalg::max_abs((&w1 - amp_u.entries()).view());
    if checks.inner_start > 1e-8 || checks.inner_end > 1e-8 {
        return Err(Error::Precondition(format!(
            "inner path endpoints off by {:.3e} and {:.3e}",
            checks.inner_start, checks.inner_end
        )));
    }
    let mut uncovered = 0.0f64;
    for wt in [&w0, &w1, &inner.sample(0.5)] {
        for ((i, j), z) in wt.indexed_iter() {
            if !(initial[i] && initial[j]) {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                uncovered = uncovered.max((z - target).norm());
            }
        }
    }
    checks.uncovered = uncovered;
    if uncovered > 1e-10 {
        return Err(Error::Precondition(format!("inner path moves vectors outside V*V ({uncovered:.3e})")));
    }

    let seg = Segment::new(
        SegmentKind::BlockUnitary,
        "block unitary",
        Payload::BlockUnitary {
            n_sites,
            sigma,
            inner: Box::new(inner.clone()),
        },
        inner.segments.iter().all(|s| s.constant),
    );
    let path = HomotopyPath::single(u.shared_window(), seg);
    let (s, e) = path.endpoints();
    checks.z0 = linalg::max_abs((s - &linalg::identity(n_sites)).view());
    checks.z1 = linalg::max_abs((e - u.entries()).view());
    if checks.z0 > 1e-8 || checks.z1 > 1e-8 {
        return Err(Error::Precondition(format!("Z_0, Z_1 off by {:.3e}, {:.3e}", checks.z0, checks.z1)));
    }
    Ok((path, checks))
}

/// `V_iso = [P⊥ 0 … 0] + T` on the amplified window.
pub fn block_isometry(p: &Projection, t: &PartialIsometry) -> Result<Operator> {
    let mask = p
        .mask()
        .ok_or_else(|| Error::Precondition("block isometry needs a diagonal projection".into()))?;
    let mut m = t.v.entries().clone();
    for (i, &inside) in mask.iter().enumerate() {
        if !inside {
            m[[i, i]] = C64::new(1.0, 0.0);
        }
    }
    let v = Operator::new(t.v.shared_window(), m)?.named("V_iso");
    if partial_permutation_map(&v).is_none() {
        return Err(Error::Precondition("T overlaps P⊥".into()));
    }
    Ok(v)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub samples: usize,
    pub arc_pairs: Vec<(Arc, Arc)>,
    /// Cone sites inside this ball form the finite-rank allowance; `None` is radius/2.
    pub allowance_radius: Option<Rational>,
    pub index: IndexConfig,
    /// Below this bound the Gershgorin estimate of `‖A*A − 𝟙‖` is reported
    /// instead of an SVD.
    pub estimate_below: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            samples: 100,
            arc_pairs: Vec::new(),
            allowance_radius: None,
            index: IndexConfig::default(),
            estimate_below: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub kind: SegmentKind,
    pub label: String,
    pub t: Vec<f64>,
    pub unitarity: Vec<f64>,
    pub sigma_min: Vec<f64>,
    pub locality: Vec<f64>,
    pub max_unitarity_defect: f64,
    pub min_singular_value: f64,
    pub max_locality_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub samples: usize,
    pub max_unitarity_defect: f64,
    pub min_singular_value: f64,
    pub max_locality_defect: f64,
    /// Index at each sample of a projection path; empty otherwise.
    pub index_trace: Vec<i64>,
    /// `(‖A_0 − start‖, ‖A_1 − end‖)` in operator norm.
    pub endpoint_errors: (f64, f64),
    /// `max ‖A_t² − A_t‖` on projection paths.
    pub max_idempotency_defect: Option<f64>,
    /// Whether every unitarity figure came from an SVD rather than the bound.
    pub exact: bool,
    pub segments: Vec<SegmentReport>,
}

impl CertificateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per sample: `t,segment,kind,unitarity,sigma_min,locality`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "segment", "kind", "unitarity_defect", "sigma_min", "locality_defect"])
            .map_err(crate::locality::csv_err)?;
        for (i, s) in self.segments.iter().enumerate() {
            let kind = serde_json::to_value(s.kind)?.as_str().unwrap_or_default().to_string();
            for k in 0..s.t.len() {
                w.write_record([
                    format!("{}", s.t[k]),
                    i.to_string(),
                    kind.clone(),
                    format!("{:e}", s.unitarity[k]),
                    format!("{}", s.sigma_min[k]),
                    format!("{:e}", s.locality[k]),
                ])
                .map_err(crate::locality::csv_err)?;
            }
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Linalg(e.to_string()))?)
            .map_err(|e| Error::Linalg(e.to_string()))
    }
}

/// `(‖A*A − 𝟙‖, σ_min, exact)`: the Gershgorin bound when it is already
/// small, one SVD otherwise.
fn unitarity_metrics(a: &Array2<C64>, estimate_below: f64) -> Result<(f64, f64, bool)> {
    let n = a.nrows();
    let mut h = linalg::adjoint(a.view()).dot(a);
    for i in 0..n {
        h[[i, i]] -= C64::new(1.0, 0.0);
    }
    let bound = h
        .axis_iter(Axis(0))
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if bound < estimate_below {
        return Ok((bound, (1.0 - bound).max(0.0).sqrt(), false));
    }
    let (d, s) = linalg::unitarity_and_sigma_min(a.view())?;
    Ok((d, s, true))
}

struct LocalityBlocks {
    pairs: Vec<(Vec<usize>, Vec<usize>)>,
}

impl LocalityBlocks {
    fn new(w: &TruncationWindow, pairs: &[(Arc, Arc)], allowance: Rational) -> Self {
        let far = Region::Ball(allowance).complement();
        let mut out = Vec::new();
        if w.representation() == crate::operator::Representation::Z2 {
            for (i, j) in pairs {
                let ci = Region::Cone(*i).indices(w);
                let cj = Region::Cone(*j).indices(w);
                let fi = Region::Cone(*i).intersect(far.clone()).indices(w);
                let fj = Region::Cone(*j).intersect(far.clone()).indices(w);
                out.push((fj, ci));
                out.push((fi, cj));
            }
        }
        LocalityBlocks { pairs: out }
    }

    fn defect(&self, a: &Array2<C64>) -> Result<f64> {
        let mut m = 0.0f64;
        for (rows, cols) in &self.pairs {
            m = m.max(linalg::op_norm(linalg::block(a.view(), rows, cols).view())?);
        }
        Ok(m)
    }
}

/// Sample the path on a uniform grid of `config.samples` points.
pub fn certify_path(path: &HomotopyPath, config: &CertifyConfig) -> Result<CertificateReport> {
    certify_with_base(path, config, None)
}

/// As [`certify_path`], recording `projection_index(A_t, base)` for projection paths.
pub fn certify_with_base(
    path: &HomotopyPath,
    config: &CertifyConfig,
    index_base: Option<&Operator>,
) -> Result<CertificateReport> {
    let n = config.samples.max(2);
    let w = path.shared_window();
    let r = w.radius();
    let allowance = config.allowance_radius.unwrap_or(r / 2);
    let blocks = LocalityBlocks::new(&w, &config.arc_pairs, allowance);
    let mut segments: Vec<SegmentReport> = path
        .segments
        .iter()
        .map(|s| SegmentReport {
            kind: s.kind,
            label: s.label.clone(),
            t: Vec::new(),
            unitarity: Vec::new(),
            sigma_min: Vec::new(),
            locality: Vec::new(),
            max_unitarity_defect: 0.0,
            min_singular_value: f64::INFINITY,
            max_locality_defect: 0.0,
        })
        .collect();
    let mut cache: HashMap<usize, (f64, f64, f64, bool, Option<f64>, Option<i64>)> = HashMap::new();
    let mut index_trace = Vec::new();
    let mut idem: Option<f64> = None;
    let mut exact = true;
    let mut first = None;
    let mut last = None;
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let (si, s) = path.locate(t);
        let seg = &path.segments[si];
        let need_matrix = k == 0 || k == n - 1;
        let cached = if seg.constant { cache.get(&si).cloned() } else { None };
        let (ud, sm, loc, ex, id, ix) = match cached {
            Some(v) if !need_matrix => v,
            _ => {
                let a = seg.sample(s);
                let (ud, sm, ex) = unitarity_metrics(&a, config.estimate_below)?;
                let loc = blocks.defect(&a)?;
                let (id, ix) = if path.projection {
                    let d = linalg::op_norm((&a.dot(&a) - &a).view())?;
                    let ix = match index_base {
                        Some(base) => {
                            let p = Projection::from_operator(Operator::new(w.clone(), a.clone())?, 1e-6)?;
                            Some(projection_index_with(&p, base, &config.index)?.value)
                        }
                        None => None,
                    };
                    (Some(d), ix)
                } else {
                    (None, None)
                };
                if k == 0 {
                    first = Some(a.clone());
                }
                if k == n - 1 {
                    last = Some(a);
                }
                let v = (ud, sm, loc, ex, id, ix);
                if seg.constant {
                    cache.insert(si, v);
                }
                v
            }
        };
        exact &= ex;
        if let Some(d) = id {
            idem = Some(idem.map_or(d, |m: f64| m.max(d)));
        }
        if let Some(i) = ix {
            index_trace.push(i);
        }
        let r = &mut segments[si];
        r.t.push(t);
        r.unitarity.push(ud);
        r.sigma_min.push(sm);
        r.locality.push(loc);
        r.max_unitarity_defect = r.max_unitarity_defect.max(ud);
        r.min_singular_value = r.min_singular_value.min(sm);
        r.max_locality_defect = r.max_locality_defect.max(loc);
    }
    let (start, end) = path.endpoints();
    let e0 = linalg::op_norm((first.as_ref().unwrap() - start).view())?;
    let e1 = linalg::op_norm((last.as_ref().unwrap() - end).view())?;
    let fold = |f: fn(&SegmentReport) -> f64, init: f64, op: fn(f64, f64) -> f64| {
        segments.iter().filter(|s| !s.t.is_empty()).map(f).fold(init, op)
    };
    Ok(CertificateReport {
        samples: n,
        max_unitarity_defect: fold(|s| s.max_unitarity_defect, 0.0, f64::max),
        min_singular_value: fold(|s| s.min_singular_value, f64::INFINITY, f64::min),
        max_locality_defect: fold(|s| s.max_locality_defect, 0.0, f64::max),
        index_trace,
        endpoint_errors: (e0, e1),
        max_idempotency_defect: idem,
        exact,
        segments,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem1Config {
    /// Number of centers tried first; reduced while the window runs out.
    pub centers: usize,
    /// Extra copies `n` in `U ⊕ 𝟙_n`.
    pub copies: usize,
    pub certify: CertifyConfig,
}

impl Default for Theorem1Config {
    fn default() -> Self {
        Theorem1Config {
            centers: 8,
            copies: 1,
            certify: CertifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Theorem1Outcome {
    pub path: HomotopyPath,
    pub report: CertificateReport,
    pub plan: CentersPlan,
    pub mixing: Vec<MixingReport>,
    pub g: Operator,
    pub v: Operator,
    pub w: Operator,
    pub block_checks: BlockUnitaryChecks,
    pub isometry: PartialIsometry,
}

/// `U ∼ G ∼ VG ∼ P + P⊥WP⊥ ∼ 𝟙`, certified.
pub fn theorem1_pipeline(u: &Operator, eps: f64, config: &Theorem1Config) -> Result<Theorem1Outcome> {
    let stage = |name: &'static str| move |e: Error| e.in_stage(name);
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must lie in (0, 1)")).in_stage("precondition"));
    }
    let defect = u.unitarity_defect()?;
    if defect > TOL_UNITARY {
        return Err(Error::NotUnitary { defect, tol: TOL_UNITARY }.in_stage("precondition"));
    }
    let w = u.shared_window();

    let mut n = config.centers;
    let localized = loop {
        let thetas: Vec<Direction> = DirectionEnumerator::new().take(n).collect();
        match localized_centers(u, &thetas, eps, &config.certify.arc_pairs) {
            Err(Error::WindowExhausted { .. }) if n > 0 => n -= 1,
            other => break other.map_err(stage("localized_centers"))?,
        }
    };
    let plan = localized.plan;

    // unit center columns, so that VG acts as 𝟙 on the centers
    let center_idx: Vec<usize> = plan.centers.iter().map(|x| w.index_of(x).unwrap()).collect();
    let mut g = localized.b.entries().clone();
    for &c in &center_idx {
        let norm = g.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::VanishingColumn { index: c }.in_stage("rescale"));
        }
        g.column_mut(c).mapv_inplace(|z| z / norm);
    }
    let g = Operator::new(w.clone(), g)?.named("G");
    let line = straight_line(u, &g)?;

    let corr = corrective_unitary(&g, &plan).map_err(stage("corrective_unitary"))?;
    let v = corr.v.clone();
    let vpath = log_path(&v).map_err(stage("corrective_log"))?.reversed().right_multiply(&g)?;
    let m = v.compose(&g)?.named("VG");

    let p = Projection::from_indices(&center_idx, w.clone());
    let peel = block_peel(&m, &p).map_err(stage("block_peel"))?;
    let polar = polar_path(&peel.first).map_err(stage("polar"))?;
    let (_, polar_end) = polar.endpoints();
    let wq = p.operator().add(&p.complement().compress(&Operator::new(w.clone(), polar_end.clone())?)?)?;
    let wq = wq.named("W");

    let s = Region::explicit(plan.centers.iter().copied());
    let t = greedy_isometry(&s, config.copies, &w, Some(&plan.thetas)).map_err(stage("greedy_isometry"))?;
    let v_iso = block_isometry(&p, &t).map_err(stage("block_isometry"))?;
    let inner = log_path_unchecked(&amplify(&wq, config.copies + 1)?)
        .map_err(stage("inner_log"))?
        .reversed();
    let (bu, block_checks) = block_unitary_homotopy(&wq, &p, &v_iso, &inner).map_err(stage("block_unitary"))?;

    let path = line
        .then(vpath)
        .and_then(|x| x.then(peel.path.clone().reversed()))
        .and_then(|x| x.then(polar))
        .and_then(|x| x.then(bu.reversed()))
        .map_err(stage("assemble"))?;
    let path = path.declare(u, &Operator::identity(w.clone())).map_err(stage("assemble"))?;
    let report = certify_path(&path, &config.certify).map_err(stage("certify"))?;
    Ok(Theorem1Outcome {
        path,
        report,
        plan,
        mixing: localized.mixing,
        g,
        v,
        w: wq,
        block_checks,
        isometry: t,
    })
}

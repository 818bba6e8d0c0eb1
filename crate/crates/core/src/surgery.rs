//! Matrix surgery: inclusion–exclusion deletion of blocks, localized centers,
//! the corrective unitary and the greedy partial isometry.

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc as Shared;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    arcs_disjoint, direction_of, inside_ball, window_directions, Arc, Direction, DirectionEnumerator,
    Rational, Region, Site,
};
use crate::locality::{annulus_confine, cone_split};
use crate::operator::{linalg, Operator, Projection, TruncationWindow};

/// Centers `x_k`, outer radii `r_k`, interaction ranges `Y_k` and budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentersPlan {
    pub centers: Vec<Site>,
    pub thetas: Vec<Direction>,
    pub radii: Vec<Rational>,
    pub ranges: Vec<Vec<Site>>,
    pub budgets: Vec<f64>,
    /// Recomputed masked-norm bound for each center.
    pub achieved: Vec<f64>,
    pub source: String,
}

impl CentersPlan {
    pub fn new(source: impl Into<String>) -> Self {
        CentersPlan {
            centers: Vec::new(),
            thetas: Vec::new(),
            radii: Vec::new(),
            ranges: Vec::new(),
            budgets: Vec::new(),
            achieved: Vec::new(),
            source: source.into(),
        }
    }

    pub(crate) fn push(&mut self, x: Site, theta: Direction, r: Rational, range: Vec<Site>, budget: f64, achieved: f64) {
        self.centers.push(x);
        self.thetas.push(theta);
        self.radii.push(r);
        self.ranges.push(range);
        self.budgets.push(budget);
        self.achieved.push(achieved);
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Inner radius `r_{k−1}` of the k-th annulus.
    pub fn inner_radius(&self, k: usize) -> Rational {
        if k == 0 {
            Rational::from_integer(0)
        } else {
            self.radii[k - 1]
        }
    }

    /// Re-check the structural invariants: each center in its range with the
    /// requested direction, ranges inside their annuli and pairwise disjoint.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for k in 0..self.len() {
            let x = self.centers[k];
            if !self.ranges[k].contains(&x) {
                return Err(Error::Precondition(format!("center {k} missing from its range")));
            }
            if direction_of(x)? != self.thetas[k] {
                return Err(Error::Precondition(format!("center {k} has the wrong direction")));
            }
            for y in &self.ranges[k] {
                if !inside_ball(y, self.radii[k]) || inside_ball(y, self.inner_radius(k)) {
                    return Err(Error::SupportLeak { index: k, leak: 1.0 });
                }
                if !seen.insert(*y) {
                    return Err(Error::Precondition(format!("ranges overlap at {y}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A pair `(P, Q)` with the bound `‖P A Q‖` for the operator in context.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub p: Projection,
    pub q: Projection,
    pub bound: f64,
}

impl ProjectionPair {
    pub fn new(p: Projection, q: Projection, a: &Operator) -> Result<Self> {
        let bound = pair_norm(&p, &q, a)?;
        Ok(ProjectionPair { p, q, bound })
    }
}

fn pair_norm(p: &Projection, q: &Projection, a: &Operator) -> Result<f64> {
    match (p.support(), q.support()) {
        (Some(r), Some(c)) => a.block_norm(&r, &c),
        _ => p.left(&q.right(a)?)?.norm(),
    }
}

/// Budget `ε / 2^{2k−1}` of the k-th pair, `k ≥ 1`.
pub fn pair_budget(eps: f64, k: usize) -> f64 {
    eps / 2f64.powi(2 * k as i32 - 1)
}

/// Result of [`deletion_series`].
#[derive(Debug, Clone)]
pub struct Deletion {
    pub b: Operator,
    pub s: Operator,
    /// Measured `ε_k = ‖P_k A Q_k‖`.
    pub pair_norms: Vec<f64>,
    /// `‖P_k B Q_k‖` after deletion.
    pub residuals: Vec<f64>,
    /// `Σ 2^{k−1} ε_k`.
    pub series_bound: f64,
    pub s_norm: f64,
}

/// `B = A − S_n` with `S_{n+1} = S_n + P_{n+1} A Q_{n+1} − P_{n+1} S_n Q_{n+1}`.
///
/// When both projections of a pair are diagonal the update only rewrites the
/// block `P × Q` of `S` with the matching block of `A`, so deleted entries of
/// `B` are exact zeros.
pub fn deletion_series(a: &Operator, pairs: &[ProjectionPair], eps: f64) -> Result<Deletion> {
    let mut pair_norms = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let k = i + 1;
        let norm = pair_norm(&pair.p, &pair.q, a)?;
        let budget = pair_budget(eps, k);
        if norm > budget {
            return Err(Error::PairBudget { index: k, norm, budget });
        }
        pair_norms.push(norm);
    }
    let mut s = Array2::<C64>::zeros((a.dim(), a.dim()));
    for pair in pairs {
        match (pair.p.support(), pair.q.support()) {
            (Some(rows), Some(cols)) => {
                for &i in &rows {
                    for &j in &cols {
                        s[[i, j]] = a.get(i, j);
                    }
                }
            }
            _ => {
                let pm = pair.p.operator().entries();
                let qm = pair.q.operator().entries();
                let pas = pm.dot(&(a.entries() - &s)).dot(qm);
                s += &pas;
            }
        }
    }
    let s = a.with_entries(s)?;
    let b = a.sub(&s)?.named(format!("{}−S", a.name)).derived("deletion_series");
    let residuals = pairs
        .iter()
        .map(|pair| pair_norm(&pair.p, &pair.q, &b))
        .collect::<Result<Vec<_>>>()?;
    let series_bound = pair_norms
        .iter()
        .enumerate()
        .map(|(i, e)| 2f64.powi(i as i32) * e)
        .sum();
    let s_norm = s.norm()?;
    Ok(Deletion {
        b,
        s,
        pair_norms,
        residuals,
        series_bound,
        s_norm,
    })
}

/// Cross-cone mixing of the ranges for one pair of disjoint arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub arcs: (Arc, Arc),
    /// Indices `k` with `Y_k` meeting both cones.
    pub mixed: Vec<usize>,
    /// Size of the union of the mixed ranges.
    pub mixed_sites: usize,
}

/// Output of [`localized_centers`].
#[derive(Debug, Clone)]
pub struct Localized {
    pub b: Operator,
    pub plan: CentersPlan,
    pub deletion: Deletion,
    pub mixing: Vec<MixingReport>,
    /// Arcs `J_k` used for the cone pairs.
    pub arcs: Vec<Arc>,
}

/// Arcs `J_k = [e_{2k−1}, e_{2k}]` from consecutive enumerated directions.
pub fn enumeration_arcs(n: usize) -> Vec<Arc> {
    let dirs: Vec<Direction> = DirectionEnumerator::new().take(2 * n).collect();
    dirs.chunks(2).map(|c| Arc::new(c[0], c[1])).collect()
}

/// Mixing of the ranges between two disjoint arcs.
pub fn mixing(plan: &CentersPlan, i: &Arc, j: &Arc) -> MixingReport {
    let mut mixed = Vec::new();
    let mut sites = BTreeSet::new();
    for (k, y) in plan.ranges.iter().enumerate() {
        let hits_i = y.iter().any(|s| i.contains_site(*s));
        let hits_j = y.iter().any(|s| j.contains_site(*s));
        if hits_i && hits_j {
            mixed.push(k);
            sites.extend(y.iter().copied());
        }
    }
    MixingReport {
        arcs: (*i, *j),
        mixed,
        mixed_sites: sites.len(),
    }
}

/// Cone pairs from [`cone_split`] and annulus pairs from [`annulus_confine`],
/// with budgets `ε_k = ε/2^{2k−1}`, fed into [`deletion_series`].
pub fn localized_centers(
    a: &Operator,
    thetas: &[Direction],
    eps: f64,
    arc_pairs: &[(Arc, Arc)],
) -> Result<Localized> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    for (i, j) in arc_pairs {
        if !arcs_disjoint(i, j) {
            return Err(Error::InvalidArgument(format!("arcs {i} and {j} are not disjoint")));
        }
    }
    let n = thetas.len();
    let w = a.shared_window();
    let arcs = enumeration_arcs(n);
    let annulus_budgets: Vec<f64> = (1..=n).map(|k| pair_budget(eps, 2 * k)).collect();
    let confined = annulus_confine(a, thetas, &annulus_budgets)?;

    let mut pairs = Vec::with_capacity(2 * n);
    for k in 0..n {
        let split = cone_split(a, &arcs[k], pair_budget(eps, 2 * k + 1))?;
        let p = Projection::from_region(&Region::Explicit(split.bad.iter().copied().collect()), w.clone());
        let q = Projection::from_region(&Region::Cone(arcs[k]), w.clone());
        pairs.push(ProjectionPair::new(p, q, a)?);

        let r_out = confined.radii[k];
        let r_in = confined.inner_radius(k);
        let outside = Region::Ball(r_out).complement().union(Region::Ball(r_in));
        let p = Projection::from_region(&outside, w.clone());
        let q = Projection::from_region(&Region::explicit([confined.centers[k]]), w.clone());
        pairs.push(ProjectionPair::new(p, q, a)?);
    }
    let deletion = deletion_series(a, &pairs, eps)?;
    let b = deletion.b.clone();

    let mut plan = confined;
    plan.source = format!(
        "localized_centers: eps={eps:e}; J_k = {}",
        arcs.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ")
    );
    for k in 0..n {
        let x = plan.centers[k];
        let col = w.index_of(&x).expect("center in window");
        let mut range: Vec<Site> = b.column_support(col).into_iter().map(|i| w.site_of(i).1).collect();
        if !range.contains(&x) {
            range.push(x);
        }
        range.sort_by_key(|s| w.index_of(s));
        plan.ranges[k] = range;
        plan.budgets[k] = pair_budget(eps, 2 * k + 2);
    }
    plan.validate()?;
    let mixing = arc_pairs.iter().map(|(i, j)| mixing(&plan, i, j)).collect();
    Ok(Localized {
        b,
        plan,
        deletion,
        mixing,
        arcs,
    })
}

/// Unitary block on the index set `idx`.
#[derive(Debug, Clone)]
pub struct UnitaryBlock {
    pub idx: Vec<usize>,
    pub block: Array2<C64>,
}

/// Output of [`corrective_unitary`].
#[derive(Debug, Clone)]
pub struct Corrective {
    pub v: Operator,
    pub blocks: Vec<UnitaryBlock>,
    /// `‖B δ_{x_k}‖`.
    pub column_norms: Vec<f64>,
}

const LEAK_TOL: f64 = 1e-12;

/// Orthonormal basis starting with `u`, completed from standard basis vectors
/// by Gram–Schmidt with largest-residual pivoting.
fn complete_basis(u: &[C64], pivot_last: usize) -> Vec<Vec<C64>> {
    let m = u.len();
    let mut basis = vec![u.to_vec()];
    let mut candidates: Vec<usize> = (0..m).filter(|&i| i != pivot_last).collect();
    candidates.push(pivot_last);
    while basis.len() < m {
        let mut best: Option<(f64, Vec<C64>, usize)> = None;
        for (ci, &e) in candidates.iter().enumerate() {
            let mut v = vec![C64::new(0.0, 0.0); m];
            v[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &basis {
                    let dot: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi -= dot * bi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(n, _, _)| norm > *n + 1e-14) {
                best = Some((norm, v, ci));
            }
        }
        let (norm, v, ci) = best.expect("candidates remain");
        basis.push(v.into_iter().map(|z| z / norm).collect());
        candidates.remove(ci);
    }
    basis
}

/// Block unitary `V` with `V (Bδ_{x_k}/‖Bδ_{x_k}‖) = δ_{x_k}`, identity off `∪ Y_k`.
pub fn corrective_unitary(b: &Operator, plan: &CentersPlan) -> Result<Corrective> {
    let w = b.shared_window();
    let mut v = linalg::identity(b.dim());
    let mut blocks = Vec::with_capacity(plan.len());
    let mut column_norms = Vec::with_capacity(plan.len());
    for k in 0..plan.len() {
        let x = plan.centers[k];
        let col = w.index_of(&x).ok_or_else(|| Error::InvalidArgument("center outside window".into()))?;
        let idx: Vec<usize> = plan.ranges[k]
            .iter()
            .map(|s| w.index_of(s).ok_or_else(|| Error::InvalidArgument("range outside window".into())))
            .collect::<Result<_>>()?;
        let inside: HashSet<usize> = idx.iter().copied().collect();
        let leak = (0..b.dim())
            .filter(|i| !inside.contains(i))
            .map(|i| b.get(i, col).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if leak > LEAK_TOL {
            return Err(Error::SupportLeak { index: k, leak });
        }
        let col_vals: Vec<C64> = idx.iter().map(|&i| b.get(i, col)).collect();
        let norm = col_vals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::VanishingColumn { index: k });
        }
        column_norms.push(norm);
        let u: Vec<C64> = col_vals.iter().map(|z| z / norm).collect();
        let xpos = idx.iter().position(|&i| i == col).expect("center in its range");
        let basis = complete_basis(&u, xpos);
        // targets: δ_x first, then the other sites of Y_k in order
        let mut targets = vec![xpos];
        targets.extend((0..idx.len()).filter(|&i| i != xpos));
        let m = idx.len();
        let mut block = Array2::<C64>::zeros((m, m));
        for (bvec, &t) in basis.iter().zip(&targets) {
            for c in 0..m {
                block[[t, c]] += bvec[c].conj();
            }
        }
        linalg::scatter(&mut v, &idx, block.view());
        blocks.push(UnitaryBlock { idx, block });
    }
    let v = Operator::new(w, v)?.named("V").derived("corrective_unitary");
    Ok(Corrective { v, blocks, column_norms })
}

/// Partial permutation from the amplified window onto `S` (first copy).
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    /// Operator on the amplified window mapping `δ_{y_k}` to `δ_{x_k}`.
    pub v: Operator,
    /// `(y_k, x_k)` as amplified basis indices, in enumeration order.
    pub matching: Vec<(usize, usize)>,
    /// Domain points `y_k` left without a partner inside the window.
    pub unmatched: Vec<usize>,
    /// Sites of `S` never used as a target.
    pub unused: Vec<Site>,
    pub copies: usize,
}

impl PartialIsometry {
    /// `σ(x) = y` for every matched target `x`.
    pub fn preimage(&self) -> Vec<Option<usize>> {
        let n = self.v.window().n_sites();
        let mut pre = vec![None; n];
        for &(y, x) in &self.matching {
            pre[x] = Some(y);
        }
        pre
    }
}

/// Greedy matching of `Λ_S ⊕ 𝟙_n` into `Λ_S`.
///
/// Domain points `y_k` (sites of `S` in copy 0, every site in copies `1..=n`)
/// are taken in window order, copies interleaved. Each `y_k` is sent to the
/// shortest unused `x ∈ S` whose direction lies in `I_k = Arc::around(arg y_k, k)`;
/// the origin and the level cap give the full circle and level 40.
/// `universe` lists the directions `S` must realize; `None` means every
/// direction present in the window.
pub fn greedy_isometry(
    s: &Region,
    n: usize,
    window: &TruncationWindow,
    universe: Option<&[Direction]>,
) -> Result<PartialIsometry> {
    let base = window.base();
    let s_sites: Vec<Site> = s.realize(&base);
    let realized: HashSet<Direction> = s_sites.iter().filter_map(|x| direction_of(*x).ok()).collect();
    let needed: Vec<Direction> = match universe {
        Some(u) => u.to_vec(),
        None => window_directions(&base),
    };
    let missing: Vec<String> = needed
        .iter()
        .filter(|d| !realized.contains(d))
        .map(|d| d.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UncoveredDirections(missing.join(" ")));
    }

    let amp = base.amplified(n + 1)?.shared();
    let ns = base.n_sites();
    let in_s: HashSet<Site> = s_sites.iter().copied().collect();
    let mut domain = Vec::new();
    for (i, site) in base.sites().iter().enumerate() {
        if in_s.contains(site) {
            domain.push(i);
        }
        for c in 1..=n {
            domain.push(c * ns + i);
        }
    }
    let targets: Vec<usize> = s_sites.iter().map(|x| base.index_of(x).unwrap()).collect();
    let mut used = vec![false; targets.len()];
    let mut matching = Vec::new();
    let mut unmatched = Vec::new();
    for (k, &y) in domain.iter().enumerate() {
        let site = amp.site_of(y).1;
        let level = (k + 1).min(crate::geometry::MAX_WIDEN_LEVEL as usize) as u32;
        let arc = Arc::around(direction_of(site).ok(), level);
        let pick = targets
            .iter()
            .enumerate()
            .find(|(t, &x)| !used[*t] && arc.contains_site(base.sites()[x]));
        match pick {
            Some((t, &x)) => {
                used[t] = true;
                matching.push((y, x));
            }
            None => unmatched.push(y),
        }
    }
    let dim = amp.dimension();
    let mut m = Array2::<C64>::zeros((dim, dim));
    for &(y, x) in &matching {
        m[[x, y]] = C64::new(1.0, 0.0);
    }
    let unused = targets
        .iter()
        .enumerate()
        .filter(|(t, _)| !used[*t])
        .map(|(_, &x)| base.sites()[x])
        .collect();
    Ok(PartialIsometry {
        v: Operator::new(amp, m)?.named("T").derived("greedy_isometry"),
        matching,
        unmatched,
        unused,
        copies: n + 1,
    })
}

/// Shared helper for callers building amplified windows.
pub fn amplified_window(window: &TruncationWindow, n: usize) -> Result<Shared<TruncationWindow>> {
    Ok(window.amplified(n + 1)?.shared())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(r: i64) -> Shared<TruncationWindow> {
        TruncationWindow::line(r).unwrap().shared()
    }

    fn diag_pair(rows: &[usize], cols: &[usize], win: &Shared<TruncationWindow>, a: &Operator) -> ProjectionPair {
        ProjectionPair::new(
            Projection::from_indices(rows, win.clone()),
            Projection::from_indices(cols, win.clone()),
            a,
        )
        .unwrap()
    }

    fn small(win: &Shared<TruncationWindow>) -> Operator {
        let n = win.dimension();
        let m = Array2::from_shape_fn((n, n), |(i, j)| C64::new(1e-3 / (1 + i + 2 * j) as f64, 1e-4 * (i as f64 - j as f64)));
        Operator::new(win.clone(), m).unwrap()
    }

    #[test]
    fn one_pair_is_plain_deletion() {
        let win = w(3);
        let a = small(&win);
        let pair = diag_pair(&[0, 2], &[1, 3, 4], &win, &a);
        let d = deletion_series(&a, std::slice::from_ref(&pair), 1.0).unwrap();
        let pq = pair.p.left(&pair.q.right(&a).unwrap()).unwrap();
        assert_eq!(d.b, a.sub(&pq).unwrap());
        assert!((d.s_norm - d.pair_norms[0]).abs() < 1e-15);
    }

    #[test]
    fn two_pairs_match_inclusion_exclusion() {
        let win = w(3);
        let a = small(&win);
        let p1 = diag_pair(&[0, 1, 2], &[3, 4], &win, &a);
        let p2 = diag_pair(&[1, 2, 5], &[4, 6], &win, &a);
        let d = deletion_series(&a, &[p1.clone(), p2.clone()], 1.0).unwrap();
        let t1 = p1.p.left(&p1.q.right(&a).unwrap()).unwrap();
        let t2 = p2.p.left(&p2.q.right(&a).unwrap()).unwrap();
        let both = p1.p.left(&p2.p.left(&p1.q.right(&p2.q.right(&a).unwrap()).unwrap()).unwrap()).unwrap();
        let s2 = t1.add(&t2).unwrap().sub(&both).unwrap();
        assert!(d.s.max_diff(&s2).unwrap() < 1e-18);
        assert!(d.s_norm <= d.pair_norms[0] + 2.0 * d.pair_norms[1] + 1e-15);
    }

    #[test]
    fn orthogonal_pairs_have_no_cross_terms() {
        let win = w(3);
        let a = small(&win);
        let p1 = diag_pair(&[0, 1], &[2, 3], &win, &a);
        let p2 = diag_pair(&[4, 5], &[6], &win, &a);
        let d = deletion_series(&a, &[p1.clone(), p2.clone()], 1.0).unwrap();
        let t1 = p1.p.left(&p1.q.right(&a).unwrap()).unwrap();
        let t2 = p2.p.left(&p2.q.right(&a).unwrap()).unwrap();
        assert_eq!(d.b, a.sub(&t1).unwrap().sub(&t2).unwrap());
    }

    #[test]
    fn budget_violation_names_the_pair() {
        let win = w(3);
        let a = Operator::identity(win.clone());
        let ok = diag_pair(&[0], &[1], &win, &a);
        let bad = diag_pair(&[2], &[2], &win, &a);
        match deletion_series(&a, &[ok, bad], 1.0) {
            Err(Error::PairBudget { index, norm, .. }) => {
                assert_eq!(index, 2);
                assert_eq!(norm, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn corrective_transposition() {
        let win = TruncationWindow::plane(3).unwrap().shared();
        let x = Site::Plane(1, 0);
        let y = Site::Plane(2, 0);
        let (ix, iy) = (win.index_of(&x).unwrap(), win.index_of(&y).unwrap());
        let mut m = linalg::identity(win.dimension());
        m[[ix, ix]] = C64::new(0.0, 0.0);
        m[[iy, iy]] = C64::new(0.0, 0.0);
        m[[iy, ix]] = C64::new(1.0, 0.0);
        m[[ix, iy]] = C64::new(1.0, 0.0);
        let b = Operator::new(win.clone(), m).unwrap();
        let mut plan = CentersPlan::new("test");
        plan.push(x, Direction::EAST, Rational::from_integer(3), vec![x, y], 0.0, 0.0);
        let c = corrective_unitary(&b, &plan).unwrap();
        assert_eq!(c.blocks[0].block, ndarray::array![[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]]);
        let id = Operator::identity(win.clone());
        let plan1 = {
            let mut p = CentersPlan::new("id");
            p.push(x, Direction::EAST, Rational::from_integer(2), vec![x], 0.0, 0.0);
            p
        };
        assert_eq!(corrective_unitary(&id, &plan1).unwrap().v, id);
    }

    #[test]
    fn greedy_premise_failure_lists_directions() {
        let win = TruncationWindow::plane(2).unwrap();
        let s = Region::Cone(Arc::new(Direction::EAST, Direction::NORTH));
        match greedy_isometry(&s, 1, &win, None) {
            Err(Error::UncoveredDirections(msg)) => assert!(msg.contains("(-1,0)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn greedy_is_a_partial_permutation() {
        let win = TruncationWindow::plane(4).unwrap();
        let s = Region::Ball(Rational::from_integer(1)).complement();
        let t = greedy_isometry(&s, 1, &win, None).unwrap();
        let vv = t.v.adjoint().compose(&t.v).unwrap();
        assert!(vv.is_diagonal());
        let xs: HashSet<usize> = t.matching.iter().map(|m| m.1).collect();
        assert_eq!(xs.len(), t.matching.len());
    }
}

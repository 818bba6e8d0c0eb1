//! Finite-scale locality diagnostics: cone block norms, decay profiles,
//! finite-support approximation, cone splitting and annulus confinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{arcs_disjoint, inside_ball, Arc, Direction, Rational, Region, Site};
use crate::operator::{Operator, Representation, TruncationWindow};
use crate::surgery::CentersPlan;

fn require_plane(w: &TruncationWindow) -> Result<()> {
    if w.representation() != Representation::Z2 {
        return Err(Error::Representation {
            expected: "Z2".into(),
            found: w.representation().to_string(),
        });
    }
    Ok(())
}

fn cone_indices(arc: &Arc, w: &TruncationWindow) -> Vec<usize> {
    Region::Cone(*arc).indices(w)
}

/// `‖Λ_J A Λ_I‖`: the part of `A` carrying the cone of `I` into the cone of `J`.
pub fn block_norm(a: &Operator, i: &Arc, j: &Arc) -> Result<f64> {
    require_plane(a.window())?;
    let cols = cone_indices(i, a.window());
    let rows = cone_indices(j, a.window());
    a.block_norm(&rows, &cols)
}

/// Norms of a masked block at increasing cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub radii: Vec<Rational>,
    pub values: Vec<f64>,
}

impl DecayProfile {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["radius", "value"]).map_err(csv_err)?;
        for (r, v) in self.radii.iter().zip(&self.values) {
            w.write_record([r.to_string(), format!("{v:e}")]).map_err(csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Value at cutoff `r` is `‖Λ_{outside B_r} Λ_J A Λ_I‖`.
pub fn compactness_profile(a: &Operator, i: &Arc, j: &Arc, cutoffs: &[Rational]) -> Result<DecayProfile> {
    require_plane(a.window())?;
    if !arcs_disjoint(i, j) {
        return Err(Error::InvalidArgument(format!("arcs {i} and {j} are not disjoint")));
    }
    if cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("cutoffs must be strictly increasing".into()));
    }
    let w = a.window();
    let cols = cone_indices(i, w);
    let rows = cone_indices(j, w);
    let mut values = Vec::with_capacity(cutoffs.len());
    for r in cutoffs {
        let outer: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&k| !inside_ball(&w.site_of(k).1, *r))
            .collect();
        values.push(a.block_norm(&outer, &cols)?);
    }
    Ok(DecayProfile {
        radii: cutoffs.to_vec(),
        values,
    })
}

/// Smallest `m` in `0..=len` with `residual(m) ≤ eps`, for a residual that is
/// non-increasing in `m` and vanishes at `len`.
fn shortest_prefix(len: usize, eps: f64, mut residual: impl FnMut(usize) -> Result<f64>) -> Result<usize> {
    if residual(0)? <= eps {
        return Ok(0);
    }
    let (mut lo, mut hi) = (0usize, len);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if residual(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Row indices of `rows` in greedy order: largest row norm first, ties by enumeration.
fn greedy_order(a: &Operator, rows: &[usize], cols: &[usize]) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = rows
        .iter()
        .map(|&r| {
            let n: f64 = cols.iter().map(|&c| a.get(r, c).norm_sqr()).sum();
            (n, r)
        })
        .collect();
    keyed.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// Finite `F ⊆ E` with `‖Λ_F K − Λ_E K‖ ≤ ε`.
///
/// Rows of `E` are added heaviest first; the shortest prefix meeting the bound
/// is returned, in window order.
pub fn finite_support_approx(k: &Operator, e: &Region, eps: f64) -> Result<Vec<Site>> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let w = k.window();
    let rows = e.indices(w);
    let all: Vec<usize> = (0..k.dim()).collect();
    let idx = support_rows(k, &rows, &all, eps)?;
    Ok(idx.into_iter().map(|i| w.site_of(i).1).collect())
}

/// Shortest greedy subset `F` of `rows` with `‖Λ_{rows∖F} A Λ_cols‖ ≤ eps`, sorted.
fn support_rows(a: &Operator, rows: &[usize], cols: &[usize], eps: f64) -> Result<Vec<usize>> {
    let order = greedy_order(a, rows, cols);
    let m = shortest_prefix(order.len(), eps, |m| a.block_norm(&order[m..], cols))?;
    let mut f = order[..m].to_vec();
    f.sort_unstable();
    Ok(f)
}

/// Partition of the complement cone `C_{J^c}` into good and bad sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSplit {
    pub good: Vec<Site>,
    pub bad: Vec<Site>,
    /// `‖Λ_{E^b} A Λ_J‖`, recomputed from the final sets.
    pub achieved_bound: f64,
    /// Number of neighborhoods `N_k` used.
    pub levels: u32,
}

impl ConeSplit {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["site", "kind"]).map_err(csv_err)?;
        for s in &self.good {
            w.write_record([s.to_string(), "good".into()]).map_err(csv_err)?;
        }
        for s in &self.bad {
            w.write_record([s.to_string(), "bad".into()]).map_err(csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Split `C_{J^c}` into `E^g ∪ E^b` with `‖Λ_{E^b} A Λ_J‖ ≤ ε`.
///
/// For `k = 1, 2, …` the neighborhood `N_k = J.widen(k)` is formed and the
/// sites of `C_{N_k^c}` are split into a greedy finite part `E^g_k` and a rest
/// `E^b_k` with `‖Λ_{E^b_k} A Λ_J‖ ≤ ε/2^k`. `E^b` is the union of the `E^b_k`.
/// Levels stop once `C_{N_k^c}` covers all of `C_{J^c}` inside the window,
/// since the nested bad sets no longer change after that.
pub fn cone_split(a: &Operator, j: &Arc, eps: f64) -> Result<ConeSplit> {
    require_plane(a.window())?;
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let w = a.window();
    let cols = cone_indices(j, w);
    let complement: Vec<usize> = (0..w.n_sites())
        .filter(|&i| {
            let s = w.sites()[i];
            !s.is_origin() && !j.contains_site(s)
        })
        .collect();
    let mut bad = vec![false; w.n_sites()];
    let mut levels = 0;
    for k in 1..=crate::geometry::MAX_WIDEN_LEVEL {
        levels = k;
        let nk = j.widen(k);
        let outside: Vec<usize> = complement
            .iter()
            .copied()
            .filter(|&i| !nk.contains_site(w.sites()[i]))
            .collect();
        let good_k = support_rows(a, &outside, &cols, eps / 2f64.powi(k as i32))?;
        let mut gi = good_k.iter().peekable();
        for &i in &outside {
            if gi.peek() == Some(&&i) {
                gi.next();
            } else {
                bad[i] = true;
            }
        }
        if outside.len() == complement.len() {
            break;
        }
    }
    let bad_idx: Vec<usize> = complement.iter().copied().filter(|&i| bad[i]).collect();
    let achieved_bound = a.block_norm(&bad_idx, &cols)?;
    Ok(ConeSplit {
        good: complement
            .iter()
            .filter(|&&i| !bad[i])
            .map(|&i| w.sites()[i])
            .collect(),
        bad: bad_idx.iter().map(|&i| w.sites()[i]).collect(),
        achieved_bound,
        levels,
    })
}

/// Rows `‖y‖ ≥ r_out` or `‖y‖ < r_in`.
fn outside_annulus(w: &TruncationWindow, r_in: Rational, r_out: Rational) -> Vec<usize> {
    (0..w.n_sites())
        .filter(|&i| {
            let s = w.sites()[i];
            !inside_ball(&s, r_out) || inside_ball(&s, r_in)
        })
        .collect()
}

fn column_norm_on(a: &Operator, rows: &[usize], col: usize) -> f64 {
    rows.iter().map(|&r| a.get(r, col).norm_sqr()).sum::<f64>().sqrt()
}

/// Place centers `x_i` along the given directions with each `A δ_{x_i}`
/// confined, up to `ε_i`, to the annulus `B_{r_i} ∖ B_{r_{i−1}}`.
///
/// Alternates three picks: a radius `t_{i−1} > r_{i−1}` with
/// `‖Λ_{B_{r_{i−1}}} A Λ_{B_t^c}‖ ≤ ε_i/2`, the shortest multiple `x_i` of
/// `θ_i` with `‖x_i‖ ≥ t_{i−1}`, and the smallest integer `r_i > ‖x_i‖` with
/// `‖Λ_{B_{r_i}^c} A δ_{x_i}‖ ≤ ε_i/2`. The first center uses the full `ε_1`.
pub fn annulus_confine(a: &Operator, thetas: &[Direction], epsilons: &[f64]) -> Result<CentersPlan> {
    require_plane(a.window())?;
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("no directions given".into()));
    }
    if thetas.len() != epsilons.len() {
        return Err(Error::InvalidArgument("one budget per direction is required".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("budgets must be positive".into()));
    }
    let w = a.window();
    let max_r = w.radius().to_integer() + 2;
    let zero = Rational::from_integer(0);
    let mut plan = CentersPlan::new("annulus_confine");
    let mut r_prev = zero;
    for (i, (theta, eps)) in thetas.iter().zip(epsilons).enumerate() {
        let (t, x_budget) = if i == 0 {
            (zero, *eps)
        } else {
            let inner: Vec<usize> = (0..w.n_sites())
                .filter(|&k| inside_ball(&w.sites()[k], r_prev))
                .collect();
            let mut t = r_prev.to_integer() + 1;
            loop {
                let tr = Rational::from_integer(t);
                let outer: Vec<usize> = (0..w.n_sites())
                    .filter(|&k| !inside_ball(&w.sites()[k], tr))
                    .collect();
                if a.block_norm(&inner, &outer)? <= eps / 2.0 || t > max_r {
                    break;
                }
                t += 1;
            }
            (Rational::from_integer(t), eps / 2.0)
        };
        // shortest multiple of θ with ‖x‖ ≥ t and outside B_{r_{i−1}}
        let mut m = 1i64;
        let x = loop {
            let x = Site::Plane(m * theta.p(), m * theta.q());
            if !inside_ball(&x, t) && !inside_ball(&x, r_prev) {
                break x;
            }
            m += 1;
        };
        let col = w.index_of(&x).ok_or(Error::WindowExhausted { index: i })?;
        let mut r = (x.norm().floor() as i64) + 1;
        loop {
            let rr = Rational::from_integer(r);
            let outer: Vec<usize> = (0..w.n_sites())
                .filter(|&k| !inside_ball(&w.sites()[k], rr))
                .collect();
            if column_norm_on(a, &outer, col) <= x_budget || r > max_r {
                break;
            }
            r += 1;
        }
        let r_i = Rational::from_integer(r);
        let rows = outside_annulus(w, r_prev, r_i);
        let achieved = column_norm_on(a, &rows, col);
        if achieved > eps + 1e-12 {
            return Err(Error::PairBudget {
                index: i,
                norm: achieved,
                budget: *eps,
            });
        }
        let mut range: Vec<Site> = a
            .column_support(col)
            .into_iter()
            .map(|k| w.site_of(k).1)
            .filter(|s| inside_ball(s, r_i) && !inside_ball(s, r_prev))
            .collect();
        if !range.contains(&x) {
            range.push(x);
        }
        plan.push(x, *theta, r_i, range, *eps, achieved);
        r_prev = r_i;
    }
    Ok(plan)
}

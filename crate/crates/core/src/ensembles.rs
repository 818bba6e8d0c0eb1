//! Seeded operator families used by experiments and tests.

use std::sync::Arc as Shared;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{direction_of, Direction, Region, Site};
use crate::operator::{linalg, Operator, Projection, TruncationWindow};
use crate::surgery::{pair_budget, ProjectionPair};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Diagonal phases `exp(i g(arg x))` for a random real trigonometric
/// polynomial `g` of degree 3; the origin gets phase 1.
pub fn phase_diagonal(window: Shared<TruncationWindow>, seed: u64) -> Result<Operator> {
    let mut r = rng(seed);
    let coeffs: Vec<(f64, f64)> = (0..4).map(|_| (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    let diag: Vec<C64> = window
        .sites()
        .iter()
        .map(|x| {
            let th = match direction_of(*x) {
                Ok(d) => d.angle(),
                Err(_) => return C64::new(1.0, 0.0),
            };
            let g: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| a * (k as f64 * th).cos() + b * (k as f64 * th).sin())
                .sum();
            C64::from_polar(1.0, g)
        })
        .collect();
    Ok(Operator::from_diagonal(window, &diag)?.named("f(L)"))
}

/// Layer of random 2-site rotations on the bonds `{x, x + e}` with
/// `x·e` even, `e` a unit vector.
fn rotation_layer(window: &TruncationWindow, e: (i64, i64), r: &mut ChaCha8Rng) -> Array2<C64> {
    let n = window.dimension();
    let mut m = linalg::identity(n);
    for (i, x) in window.sites().iter().enumerate() {
        let (a, b) = x.plane().expect("plane window");
        let along = if e.0 != 0 { a } else { b };
        if along.rem_euclid(2) != 0 {
            continue;
        }
        let Some(j) = window.index_of(&Site::Plane(a + e.0, b + e.1)) else { continue };
        let th: f64 = r.gen_range(0.0..std::f64::consts::FRAC_PI_2);
        let ph: f64 = r.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let (c, s) = (th.cos(), th.sin());
        m[[i, i]] = C64::new(c, 0.0);
        m[[j, j]] = C64::new(c, 0.0);
        m[[i, j]] = -C64::from_polar(s, ph);
        m[[j, i]] = C64::from_polar(s, -ph);
    }
    m
}

/// Two layers of nearest-neighbor rotations, horizontal then vertical.
pub fn finite_range_unitary(window: Shared<TruncationWindow>, seed: u64) -> Result<Operator> {
    let mut r = rng(seed);
    let h = rotation_layer(&window, (1, 0), &mut r);
    let v = rotation_layer(&window, (0, 1), &mut r);
    Ok(Operator::new(window, v.dot(&h))?.named("E"))
}

/// `f(L)·E`: diagonal phase times a finite-range perturbation.
pub fn local_unitary(window: Shared<TruncationWindow>, seed: u64) -> Result<Operator> {
    let d = phase_diagonal(window.clone(), seed)?;
    let e = finite_range_unitary(window, seed.wrapping_add(0x9e37_79b9))?;
    Ok(d.compose(&e)?.named(format!("local_unitary[{seed}]")))
}

/// Nearest-neighbor rotations on the line inside `|x| ≤ reach`.
pub fn line_local_unitary(window: Shared<TruncationWindow>, reach: i64, seed: u64) -> Result<Operator> {
    let mut r = rng(seed);
    let mut m = linalg::identity(window.dimension());
    for layer in 0..2 {
        let mut step = linalg::identity(window.dimension());
        for x in -reach..reach {
            if (x - layer).rem_euclid(2) != 0 {
                continue;
            }
            let (Some(i), Some(j)) = (window.index_of(&Site::Line(x)), window.index_of(&Site::Line(x + 1))) else {
                continue;
            };
            let th: f64 = r.gen_range(0.2..1.3);
            let ph: f64 = r.gen_range(-3.0..3.0);
            step[[i, i]] = C64::new(th.cos(), 0.0);
            step[[j, j]] = C64::new(th.cos(), 0.0);
            step[[i, j]] = -C64::from_polar(th.sin(), ph);
            step[[j, i]] = C64::from_polar(th.sin(), -ph);
        }
        m = step.dot(&m);
    }
    Ok(Operator::new(window, m)?.named(format!("line_unitary[{seed}]")))
}

/// Dense operator with entries uniform in the unit square around 0.
pub fn random_operator(window: Shared<TruncationWindow>, seed: u64) -> Result<Operator> {
    let mut r = rng(seed);
    let n = window.dimension();
    let m = Array2::from_shape_fn((n, n), |_| C64::new(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5)));
    Ok(Operator::new(window, m)?.named(format!("random[{seed}]")))
}

/// Random operator and `pairs` diagonal projection pairs, with the blocks
/// scaled down until every pair meets `‖P_k A Q_k‖ ≤ ε/2^{2k−1}`.
pub fn admissible_instance(
    window: Shared<TruncationWindow>,
    pairs: usize,
    eps: f64,
    seed: u64,
) -> Result<(Operator, Vec<(Vec<usize>, Vec<usize>)>)> {
    let mut a = random_operator(window.clone(), seed)?.into_entries();
    let mut r = rng(seed ^ 0x5555);
    let n = window.dimension();
    let mut idx: Vec<usize> = (0..n).collect();
    let blocks: Vec<(Vec<usize>, Vec<usize>)> = (0..pairs)
        .map(|_| {
            let rows = r.gen_range(n / 10..n / 3);
            let cols = r.gen_range(n / 10..n / 3);
            idx.shuffle(&mut r);
            let mut p = idx[..rows].to_vec();
            idx.shuffle(&mut r);
            let mut q = idx[..cols].to_vec();
            p.sort_unstable();
            q.sort_unstable();
            (p, q)
        })
        .collect();
    // later blocks may raise earlier norms only by shrinking them, so one sweep per pair in order of budget suffices
    for _ in 0..3 {
        for (k, (p, q)) in blocks.iter().enumerate() {
            let budget = pair_budget(eps, k + 1) * 0.5;
            let norm = linalg::op_norm(linalg::block(a.view(), p, q).view())?;
            if norm > budget {
                let f = budget / norm;
                for &i in p {
                    for &j in q {
                        a[[i, j]] *= f;
                    }
                }
            }
        }
    }
    Ok((Operator::new(window, a)?.named(format!("admissible[{seed}]")), blocks))
}

/// Wrap index blocks as projection pairs for `a`.
pub fn pairs_for(a: &Operator, blocks: &[(Vec<usize>, Vec<usize>)]) -> Result<Vec<ProjectionPair>> {
    let w = a.shared_window();
    blocks
        .iter()
        .map(|(p, q)| {
            ProjectionPair::new(
                Projection::from_indices(p, w.clone()),
                Projection::from_indices(q, w.clone()),
                a,
            )
        })
        .collect()
}

/// Seeded region containing, for every direction of the window, one random
/// multiple of it inside the window, plus a random sprinkle of other sites.
pub fn ray_dense_region(window: &TruncationWindow, seed: u64) -> Region {
    let mut r = rng(seed);
    let mut by_dir: std::collections::BTreeMap<(i64, i64), Vec<Site>> = Default::default();
    for x in window.sites() {
        if let Ok(d) = direction_of(*x) {
            by_dir.entry((d.p(), d.q())).or_default().push(*x);
        }
    }
    let mut sites = Vec::new();
    for v in by_dir.values() {
        sites.push(*v.choose(&mut r).expect("nonempty"));
    }
    for x in window.sites() {
        if r.gen_bool(0.2) {
            sites.push(*x);
        }
    }
    Region::explicit(sites)
}

/// Directions realized by the sites of a region inside the window.
pub fn region_directions(region: &Region, window: &TruncationWindow) -> Vec<Direction> {
    let mut d: Vec<Direction> = region.realize(window).into_iter().filter_map(|x| direction_of(x).ok()).collect();
    d.sort_by(|a, b| crate::geometry::angle_cmp(*a, *b));
    d.dedup();
    d
}

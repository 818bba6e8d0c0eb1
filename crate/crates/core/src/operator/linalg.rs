//! Dense kernels shared by the operator layer.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Drop all-zero rows and columns. The singular values other than zero are unchanged.
pub fn compress(a: ArrayView2<C64>) -> Array2<C64> {
    let rows: Vec<usize> = (0..a.nrows())
        .filter(|&i| a.row(i).iter().any(|z| *z != C64::new(0.0, 0.0)))
        .collect();
    let cols: Vec<usize> = (0..a.ncols())
        .filter(|&j| a.column(j).iter().any(|z| *z != C64::new(0.0, 0.0)))
        .collect();
    if rows.len() == a.nrows() && cols.len() == a.ncols() {
        return a.to_owned();
    }
    a.select(Axis(0), &rows).select(Axis(1), &cols)
}

/// Singular values in decreasing order.
pub fn singular_values(a: ArrayView2<C64>) -> Result<Array1<f64>> {
    if a.is_empty() {
        return Ok(Array1::zeros(0));
    }
    let owned = a.as_standard_layout().to_owned();
    let (_, s, _) = owned.svddc(JobSvd::None)?;
    Ok(s)
}

/// Largest singular value.
pub fn op_norm(a: ArrayView2<C64>) -> Result<f64> {
    let c = compress(a);
    if c.is_empty() {
        return Ok(0.0);
    }
    if c.nrows() == 1 || c.ncols() == 1 {
        return Ok(c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    Ok(singular_values(c.view())?[0])
}

/// Full SVD `A = U diag(s) Vᴴ`, returning `(U, s, Vᴴ)`.
pub fn svd(a: ArrayView2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    let owned = a.as_standard_layout().to_owned();
    let (u, s, vt) = owned.svddc(JobSvd::All)?;
    match (u, vt) {
        (Some(u), Some(vt)) => Ok((u, s, vt)),
        _ => Err(Error::Linalg("svd returned no vectors".into())),
    }
}

/// `(‖A*A − 𝟙‖, σ_min(A))` from one SVD of a square matrix.
pub fn unitarity_and_sigma_min(a: ArrayView2<C64>) -> Result<(f64, f64)> {
    if a.is_empty() {
        return Ok((0.0, 1.0));
    }
    let s = singular_values(a)?;
    let smax = s[0];
    let smin = s[s.len() - 1];
    Ok(((smax * smax - 1.0).abs().max((1.0 - smin * smin).abs()), smin))
}

pub fn adjoint(a: ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

pub fn max_abs(a: ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn frobenius(a: ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex Schur decomposition `A = Z T Zᴴ`; returns `(Z, diag T)`.
///
/// For a normal matrix `T` is diagonal up to rounding, so the columns of `Z`
/// are orthonormal eigenvectors.
pub fn schur(a: ArrayView2<C64>) -> Result<(Array2<C64>, Vec<C64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument("schur needs a square matrix".into()));
    }
    if n == 0 {
        return Ok((Array2::zeros((0, 0)), Vec::new()));
    }
    // column-major copy of A is the row-major copy of Aᵀ
    let mut buf: Vec<C64> = a.t().iter().copied().collect();
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut vs = vec![C64::new(0.0, 0.0); n * n];
    let mut rwork = vec![0.0f64; n];
    let mut bwork = vec![0i32; n];
    let ni = n as i32;
    let mut sdim = 0i32;
    let mut info = 0i32;
    let jobvs = b'V' as std::os::raw::c_char;
    let sort = b'N' as std::os::raw::c_char;

    let mut query = C64::new(0.0, 0.0);
    let mut lwork = -1i32;
    unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &ni,
            buf.as_mut_ptr() as *mut _,
            &ni,
            &mut sdim,
            w.as_mut_ptr() as *mut _,
            vs.as_mut_ptr() as *mut _,
            &ni,
            &mut query as *mut C64 as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!("zgees workspace query failed ({info})")));
    }
    lwork = (query.re as i32).max(2 * ni);
    let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &ni,
            buf.as_mut_ptr() as *mut _,
            &ni,
            &mut sdim,
            w.as_mut_ptr() as *mut _,
            vs.as_mut_ptr() as *mut _,
            &ni,
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Linalg(format!("zgees failed ({info})")));
    }
    let z = Array2::from_shape_vec((n, n), vs)
        .map_err(|e| Error::Linalg(e.to_string()))?
        .reversed_axes()
        .as_standard_layout()
        .to_owned();
    Ok((z, w))
}

/// Eigenphase in `(−π, π]`; phases within `1e−12` of `−π` are taken as `+π`.
pub fn principal_phase(z: C64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI + 1e-12 {
        std::f64::consts::PI
    } else {
        a
    }
}

/// `Z diag(d) Zᴴ`.
pub fn reconstruct(z: ArrayView2<C64>, d: &[C64]) -> Array2<C64> {
    let mut zd = z.to_owned();
    for (j, mut col) in zd.axis_iter_mut(Axis(1)).enumerate() {
        col.mapv_inplace(|v| v * d[j]);
    }
    zd.dot(&adjoint(z))
}

/// Copy `src` into the principal block of `dst` at the given index list.
pub fn scatter(dst: &mut Array2<C64>, idx: &[usize], src: ArrayView2<C64>) {
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            dst[[i, j]] = src[[a, b]];
        }
    }
}

/// Principal submatrix on an index list.
pub fn gather(a: ArrayView2<C64>, idx: &[usize]) -> Array2<C64> {
    a.select(Axis(0), idx).select(Axis(1), idx)
}

pub fn block(a: ArrayView2<C64>, rows: &[usize], cols: &[usize]) -> Array2<C64> {
    if rows.is_empty() || cols.is_empty() {
        return Array2::zeros((rows.len(), cols.len()));
    }
    a.select(Axis(0), rows).select(Axis(1), cols)
}

/// Upper-left `k × k` block.
pub fn leading(a: ArrayView2<C64>, k: usize) -> Array2<C64> {
    a.slice(s![..k, ..k]).to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Array2<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    #[test]
    fn norm_of_identity_and_rank_one() {
        assert!((op_norm(identity(7).view()).unwrap() - 1.0).abs() < 1e-14);
        let mut e = Array2::zeros((6, 6));
        e[[2, 4]] = C64::new(1.0, 0.0);
        assert_eq!(op_norm(e.view()).unwrap(), 1.0);
        assert_eq!(op_norm(Array2::<C64>::zeros((4, 4)).view()).unwrap(), 0.0);
    }

    #[test]
    fn compression_keeps_norm() {
        let mut a = random(9, 3);
        a.row_mut(2).fill(C64::new(0.0, 0.0));
        a.column_mut(5).fill(C64::new(0.0, 0.0));
        let full = singular_values(a.view()).unwrap()[0];
        assert!((op_norm(a.view()).unwrap() - full).abs() < 1e-12);
    }

    #[test]
    fn schur_of_unitary_diagonalizes() {
        let a = random(12, 5);
        let (u, _, vt) = svd(a.view()).unwrap();
        let q = u.dot(&vt);
        let (z, w) = schur(q.view()).unwrap();
        let back = reconstruct(z.view(), &w);
        assert!(max_abs((&back - &q).view()) < 1e-12);
        for e in w {
            assert!((e.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_cut() {
        assert_eq!(principal_phase(C64::new(-1.0, 0.0)), std::f64::consts::PI);
        assert_eq!(principal_phase(C64::new(-1.0, -1e-15)), std::f64::consts::PI);
        assert!((principal_phase(C64::new(0.0, -1.0)) + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}

//! Symmetric eigensolvers.
//!
//! Small problems go through Householder tridiagonalization followed by the
//! implicit QL algorithm (the EISPACK `tred2`/`tql2` pair). Large problems
//! where only the leading eigenpairs are wanted use Lanczos with full
//! reorthogonalization; its tridiagonal projection is solved with the same QL
//! routine.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenpairs sorted by descending eigenvalue; eigenvectors are the columns
/// of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    pub vectors: Array2<T>,
}

impl<T: Scalar> EigenPairs<T> {
    fn sorted_descending(values: Vec<T>, vectors: Array2<T>, keep: usize) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        order.truncate(keep);
        let n = vectors.nrows();
        let mut out = Array2::zeros((n, order.len()));
        for (dst, &src) in order.iter().enumerate() {
            out.column_mut(dst).assign(&vectors.column(src));
        }
        EigenPairs {
            values: order.iter().map(|&i| values[i]).collect(),
            vectors: out,
        }
    }

    /// Flips each eigenvector so that its largest-magnitude entry (first one
    /// on ties) is positive.
    pub fn fix_signs(&mut self) {
        for mut col in self.vectors.columns_mut() {
            let mut best = 0;
            for (i, v) in col.iter().enumerate() {
                if v.abs() > col[best].abs() {
                    best = i;
                }
            }
            if col[best] < T::zero() {
                col.mapv_inplace(|v| -v);
            }
        }
    }
}

/// Full eigendecomposition of a dense symmetric matrix; returns the `keep`
/// largest eigenpairs.
pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<T>, keep: usize) -> Result<EigenPairs<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid("matrix is not square"));
    }
    if n == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: Array2::zeros((0, 0)),
        });
    }
    let mut v: Vec<T> = a.iter().copied().collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;
    let vectors = Array2::from_shape_vec((n, n), v).unwrap();
    Ok(EigenPairs::sorted_descending(d, vectors, keep.min(n)))
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and sub-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen<T: Scalar>(diag: &[T], off: &[T]) -> Result<EigenPairs<T>> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1));
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let mut d = diag.to_vec();
    // tql2 expects e[i] to be the sub-diagonal entry left of d[i]
    let mut e = vec![T::zero(); n];
    e[1..n].copy_from_slice(off);
    tql2(n, &mut v, &mut d, &mut e)?;
    let vectors = Array2::from_shape_vec((n, n), v).unwrap();
    Ok(EigenPairs::sorted_descending(d, vectors, n))
}

/// Householder reduction to tridiagonal form. On return `v` holds the
/// orthogonal transform, `d` the diagonal and `e[1..]` the sub-diagonal.
fn tred2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let idx = |r: usize, c: usize| r * n + c;
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for dk in d.iter().take(i) {
            scale = scale + dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = zero;
                v[idx(j, i)] = zero;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g = g + v[idx(k, j)] * d[k];
                    e[k] = e[k] + v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] = v[idx(k, j)] - (f * e[k] + g * d[k]);
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g = g + v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] = v[idx(k, j)] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = zero;
    }
    v[idx(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

/// Implicit QL iterations on a symmetric tridiagonal matrix, accumulating
/// rotations into `v`.
fn tql2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let idx = |r: usize, c: usize| r * n + c;
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Degenerate(
                        "eigenvalue iteration did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[idx(k, i + 1)];
                        v[idx(k, i + 1)] = s * v[idx(k, i)] + c * h;
                        v[idx(k, i)] = c * v[idx(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = zero;
    }
    Ok(())
}

/// Dense symmetric matrix-vector product, parallel over rows.
pub fn symmetric_matvec<T: Scalar>(a: &Array2<T>, x: &[T], y: &mut [T]) {
    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
        *yi = a.row(i).iter().zip(x).map(|(&aij, &xj)| aij * xj).sum();
    });
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Removes the components of `w` along every vector of `basis` (two passes).
fn orthogonalize<T: Scalar>(w: &mut [T], basis: &[Vec<T>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(w, q);
            for (wi, &qi) in w.iter_mut().zip(q) {
                *wi = *wi - c * qi;
            }
        }
    }
}

/// Deterministic pseudo-random vector for restarting after breakdown.
fn restart_vector<T: Scalar>(n: usize, salt: u64) -> Vec<T> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ salt.wrapping_mul(0xD134_2543_DE82_EF95);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            T::of((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect()
}

/// Largest `k` eigenpairs of the symmetric operator `op` on `R^n` by Lanczos
/// with full reorthogonalization, starting from `start`.
///
/// The Krylov space grows until every wanted Ritz pair has residual below
/// `T::solver_tolerance()` or the space reaches dimension `n`.
pub fn lanczos<T, F>(n: usize, k: usize, op: F, start: &[T]) -> Result<EigenPairs<T>>
where
    T: Scalar,
    F: Fn(&[T], &mut [T]),
{
    let k = k.min(n);
    if k == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: Array2::zeros((n, 0)),
        });
    }
    let tol = T::solver_tolerance();
    let mut q0 = start.to_vec();
    let nrm = norm(&q0);
    if !(nrm > T::zero()) {
        return Err(Error::invalid("Lanczos start vector is zero"));
    }
    q0.iter_mut().for_each(|x| *x = *x / nrm);

    let mut basis: Vec<Vec<T>> = vec![q0];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut w = vec![T::zero(); n];
    let mut next_check = (2 * k + 20).max(40).min(n);
    let mut scale = T::zero();

    loop {
        let j = basis.len() - 1;
        op(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        scale = scale.max(a.abs());
        orthogonalize(&mut w, &basis);
        let b = norm(&w);

        let steps = alpha.len();
        if steps >= next_check || steps == n {
            let t = tridiagonal_eigen(&alpha, &beta)?;
            let converged = (0..k.min(steps)).all(|i| {
                let last = t.vectors[[steps - 1, i]];
                (b * last).abs() <= tol * t.values[i].abs().max(T::one())
            });
            if (converged && steps >= k) || steps == n {
                let mut vectors = Array2::zeros((n, k.min(steps)));
                for i in 0..k.min(steps) {
                    let s = t.vectors.column(i);
                    let mut y = Array1::zeros(n);
                    for (q, &c) in basis.iter().zip(s.iter()) {
                        y.iter_mut().zip(q).for_each(|(yi, &qi)| *yi = *yi + c * qi);
                    }
                    vectors.column_mut(i).assign(&y);
                }
                return Ok(EigenPairs {
                    values: t.values[..k.min(steps)].to_vec(),
                    vectors,
                });
            }
            next_check = (next_check + next_check / 2).min(n);
        }

        if b <= T::epsilon() * scale.max(T::one()) * T::of_usize(n).sqrt() {
            // invariant subspace found: continue from a fresh orthogonal direction
            let mut r = restart_vector::<T>(n, steps as u64);
            orthogonalize(&mut r, &basis);
            let rn = norm(&r);
            r.iter_mut().for_each(|x| *x = *x / rn);
            beta.push(T::zero());
            basis.push(r);
        } else {
            beta.push(b);
            basis.push(w.iter().map(|&x| x / b).collect());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    }

    /// Eigenvalues from nalgebra, used as an independent reference.
    fn reference_values(a: &Array2<f64>) -> Vec<f64> {
        let n = a.nrows();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
        let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v
    }

    #[test]
    fn dense_matches_reference() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (40, 4)] {
            let a = random_symmetric(n, seed);
            let e = symmetric_eigen(a.view(), n).unwrap();
            for (x, y) in e.values.iter().zip(reference_values(&a)) {
                assert_abs_diff_eq!(*x, y, epsilon = 1e-10);
            }
            // A v = lambda v
            for i in 0..n {
                let v = e.vectors.column(i);
                let av = a.dot(&v);
                for r in 0..n {
                    assert_abs_diff_eq!(av[r], e.values[i] * v[r], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn dense_vectors_are_orthonormal() {
        let a = random_symmetric(25, 9);
        let e = symmetric_eigen(a.view(), 25).unwrap();
        let g = e.vectors.t().dot(&e.vectors);
        for i in 0..25 {
            for j in 0..25 {
                assert_abs_diff_eq!(g[[i, j]], (i == j) as u8 as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = symmetric_eigen(Array2::<f64>::eye(3).view(), 3).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn tridiagonal_two_by_two() {
        let e = tridiagonal_eigen(&[2.0f64, 2.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(e.values[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lanczos_matches_dense_top_k() {
        // positive semidefinite: B^T B
        let b = random_symmetric(300, 11);
        let a = b.t().dot(&b);
        let dense = symmetric_eigen(a.view(), 5).unwrap();
        let start: Vec<f64> = (0..300).map(|i| 1.0 + (i % 7) as f64).collect();
        let lz = lanczos(300, 5, |x, y| symmetric_matvec(&a, x, y), &start).unwrap();
        for i in 0..5 {
            let rel = (lz.values[i] - dense.values[i]).abs() / dense.values[i];
            assert!(rel < 1e-10, "{i}: {} vs {}", lz.values[i], dense.values[i]);
            let c: f64 = lz
                .vectors
                .column(i)
                .iter()
                .zip(dense.vectors.column(i))
                .map(|(x, y)| x * y)
                .sum();
            assert!((c.abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn lanczos_survives_invariant_subspaces() {
        // diagonal operator, start vector inside a 2-dimensional eigenspace
        let diag: Vec<f64> = (0..60).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let mut start = vec![0.0; 60];
        start[0] = 1.0;
        start[1] = 1.0;
        let e = lanczos(
            60,
            4,
            |x, y| {
                for i in 0..60 {
                    y[i] = diag[i] * x[i];
                }
            },
            &start,
        )
        .unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(e.values[i], diag[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = random_symmetric(20, 5).mapv(|v| v as f32);
        let e = symmetric_eigen(a.view(), 20).unwrap();
        let a64 = a.mapv(|v| v as f64);
        for (x, y) in e.values.iter().zip(reference_values(&a64)) {
            assert!((*x as f64 - y).abs() < 1e-4);
        }
    }

    #[test]
    fn sign_convention() {
        let mut e = EigenPairs {
            values: vec![1.0],
            vectors: Array2::from_shape_vec((3, 1), vec![0.1, -0.9, 0.2]).unwrap(),
        };
        e.fix_signs();
        assert_eq!(e.vectors.column(0).to_vec(), vec![-0.1, 0.9, -0.2]);
    }
}

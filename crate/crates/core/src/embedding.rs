//! Diffusion-map embedding of the training matrix.

use log::warn;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::BinaryFeatureMatrix;
use crate::ingest::subsample_indices;
use crate::linalg::{lanczos, symmetric_eigen, symmetric_matvec, EigenPairs};
use crate::scalar::Scalar;

/// Problems up to this size are decomposed densely; larger ones use Lanczos.
const DENSE_LIMIT: usize = 400;

/// Anything with pairwise squared Euclidean distances.
pub trait PointSet: Sync {
    fn n_points(&self) -> usize;
    fn sq_dist<T: Scalar>(&self, i: usize, j: usize) -> T;
}

impl PointSet for BinaryFeatureMatrix {
    fn n_points(&self) -> usize {
        self.rows()
    }

    fn sq_dist<T: Scalar>(&self, i: usize, j: usize) -> T {
        T::of_usize(BinaryFeatureMatrix::sq_dist(self, i, j) as usize)
    }
}

impl<S: Scalar> PointSet for ArrayView2<'_, S> {
    fn n_points(&self) -> usize {
        self.nrows()
    }

    fn sq_dist<T: Scalar>(&self, i: usize, j: usize) -> T {
        let d: S = self
            .row(i)
            .iter()
            .zip(self.row(j))
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        T::of(d.as_f64())
    }
}

impl<S: Scalar> PointSet for Array2<S> {
    fn n_points(&self) -> usize {
        self.nrows()
    }

    fn sq_dist<T: Scalar>(&self, i: usize, j: usize) -> T {
        self.view().sq_dist(i, j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig<T> {
    /// Kernel width; `None` selects it from the L-curve.
    pub epsilon: Option<T>,
    /// Embedding dimension; `None` uses the largest eigengap.
    pub dims: Option<usize>,
    pub epsilon_sample_size: usize,
    /// Grid bounds as multiples of the median squared distance.
    pub grid_min: T,
    pub grid_max: T,
    pub grid_points: usize,
    /// Number of eigenpairs computed (capped at N).
    pub n_eigen: usize,
    /// Use `λ ψ` with `ψ = v / sqrt(π)` so Euclidean distances equal
    /// diffusion distances, instead of `λ v`.
    pub scaled_eigenvectors: bool,
    pub seed: u64,
}

impl<T: Scalar> Default for DiffusionConfig<T> {
    fn default() -> Self {
        DiffusionConfig {
            epsilon: None,
            dims: None,
            epsilon_sample_size: 200,
            grid_min: T::of(1e-4),
            grid_max: T::of(1e4),
            grid_points: 41,
            n_eigen: 30,
            scaled_eigenvectors: false,
            seed: 0,
        }
    }
}

impl<T: Scalar> DiffusionConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon {
            if !(e > T::zero()) || !e.is_finite() {
                return Err(Error::invalid(format!("epsilon must be positive, got {e}")));
            }
        }
        if self.dims == Some(0) {
            return Err(Error::invalid("dims must be at least 1"));
        }
        if !(self.grid_min > T::zero() && self.grid_min < self.grid_max) {
            return Err(Error::invalid("epsilon grid needs 0 < min < max"));
        }
        if self.grid_points < 3 {
            return Err(Error::invalid("epsilon grid needs at least 3 points"));
        }
        if self.epsilon_sample_size < 2 {
            return Err(Error::invalid("epsilon sample size must be at least 2"));
        }
        if self.n_eigen < 2 {
            return Err(Error::invalid("need at least 2 eigenpairs"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonScan<T> {
    /// `(ε, L(ε))` in increasing ε.
    pub points: Vec<(T, T)>,
    pub chosen_epsilon: T,
    /// Median squared pairwise distance of the sample.
    pub median_sq_dist: T,
    pub sample_size: usize,
}

impl<T: Scalar> EpsilonScan<T> {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("epsilon\tL\n");
        for (e, l) in &self.points {
            s.push_str(&format!("{:e}\t{:e}\n", e.as_f64(), l.as_f64()));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    /// Leading eigenvalues of `D^-1/2 W D^-1/2`, descending.
    pub eigenvalues: Vec<T>,
    /// Matching unit eigenvectors as columns (N × K).
    pub eigenvectors: Array2<T>,
    /// Row sums of W.
    pub degrees: Vec<T>,
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn eigenvalues_tsv(&self) -> String {
        let mut s = String::from("index\teigenvalue\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{}\t{:e}\n", i + 1, l.as_f64()));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    /// N × d diffusion coordinates.
    pub coords: Array2<T>,
    pub dims: usize,
}

/// All pairwise squared distances; zero diagonal.
pub fn pairwise_sq_dist<T: Scalar, P: PointSet>(x: &P) -> Array2<T> {
    kernel_matrix(x, |d: T| d)
}

fn kernel_matrix<T: Scalar, P: PointSet>(x: &P, f: impl Fn(T) -> T + Sync) -> Array2<T> {
    let n = x.n_points();
    let mut m = Array2::zeros((n, n));
    m.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for j in 0..n {
                row[j] = if i == j { f(T::zero()) } else { f(x.sq_dist(i, j)) };
            }
        });
    m
}

/// Gaussian affinities `W_ij = exp(-|x_i - x_j|^2 / ε)`.
pub fn compute_affinity<T: Scalar, P: PointSet>(x: &P, epsilon: T) -> Result<Array2<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(kernel_matrix(x, |d: T| (-d / epsilon).exp()))
}

fn median<T: Scalar>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    }
}

/// Sum of the kernel matrix over a log-spaced ε grid, evaluated on a seeded
/// row sample. The chosen ε maximizes the log-log slope of L(ε).
pub fn scan_epsilon<T: Scalar, P: PointSet>(
    x: &P,
    config: &DiffusionConfig<T>,
) -> Result<EpsilonScan<T>> {
    config.validate()?;
    let n = x.n_points();
    let sample = subsample_indices(n, config.epsilon_sample_size.min(n), config.seed);
    let s = sample.len();
    let dists: Vec<T> = (0..s)
        .into_par_iter()
        .flat_map_iter(|a| {
            let sample = &sample;
            (a + 1..s).map(move |b| x.sq_dist(sample[a], sample[b]))
        })
        .collect();
    let nonzero: Vec<T> = dists.iter().copied().filter(|&d| d > T::zero()).collect();
    if nonzero.is_empty() {
        return Err(Error::Degenerate("data has duplicate-only rows".into()));
    }
    let mut m = median(dists.clone());
    if m == T::zero() {
        m = median(nonzero);
    }

    let lo = (config.grid_min * m).ln();
    let hi = (config.grid_max * m).ln();
    let steps = T::of_usize(config.grid_points - 1);
    let points: Vec<(T, T)> = (0..config.grid_points)
        .into_par_iter()
        .map(|g| {
            let eps = (lo + (hi - lo) * T::of_usize(g) / steps).exp();
            let off: T = dists.iter().map(|&d| (-d / eps).exp()).sum();
            (eps, T::of_usize(s) + T::of(2.0) * off)
        })
        .collect();

    let mut best = 1;
    let mut best_slope = T::neg_infinity();
    for g in 1..points.len() - 1 {
        let slope = (points[g + 1].1.ln() - points[g - 1].1.ln())
            / (points[g + 1].0.ln() - points[g - 1].0.ln());
        if slope >= best_slope {
            best_slope = slope;
            best = g;
        }
    }
    Ok(EpsilonScan {
        chosen_epsilon: points[best].0,
        points,
        median_sq_dist: m,
        sample_size: s,
    })
}

/// Degrees of W and the symmetric operator `D^-1/2 W D^-1/2`.
pub fn normalized_operator<T: Scalar>(w: &Array2<T>) -> Result<(Array2<T>, Vec<T>)> {
    let degrees: Vec<T> = w.rows().into_iter().map(|r| r.sum()).collect();
    if let Some(i) = degrees.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::Degenerate(format!("row {} of W has zero sum", i + 1)));
    }
    let mut p = w.clone();
    p.axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v / (degrees[i] * degrees[j]).sqrt();
            }
        });
    Ok((p, degrees))
}

/// Row-stochastic transition matrix `P = D^-1 W`.
pub fn transition_matrix<T: Scalar>(w: &Array2<T>) -> Array2<T> {
    let mut p = w.clone();
    for mut row in p.rows_mut() {
        let d = row.sum();
        row.mapv_inplace(|v| v / d);
    }
    p
}

/// Leading `k` eigenpairs of `D^-1/2 W D^-1/2`.
pub fn spectral_decompose<T: Scalar>(w: &Array2<T>, k: usize) -> Result<SpectralDecomposition<T>> {
    let n = w.nrows();
    let k = k.min(n);
    let (p, degrees) = normalized_operator(w)?;
    let mut pairs: EigenPairs<T> = if n <= DENSE_LIMIT || 2 * k >= n {
        symmetric_eigen(p.view(), k)?
    } else {
        // The start vector depends only on each row's own statistics, so
        // duplicate rows start (and end) with equal entries.
        let dmax = degrees.iter().copied().fold(T::zero(), T::max);
        let start: Vec<T> = p
            .rows()
            .into_iter()
            .zip(&degrees)
            .map(|(row, &d)| {
                let q: T = row.iter().map(|&v| v * v).sum();
                d.sqrt() * (T::of(2.0) + (T::of(37.0) * d / dmax).sin() + (T::of(53.0) * q).cos())
            })
            .collect();
        lanczos(n, k, |x, y| symmetric_matvec(&p, x, y), &start)?
    };
    pairs.fix_signs();
    Ok(SpectralDecomposition {
        eigenvalues: pairs.values,
        eigenvectors: pairs.vectors,
        degrees,
    })
}

/// Number of nontrivial coordinates to keep: the position of the largest
/// gap among `λ_2, λ_3, ...`. Ties go to the smaller dimension; if every gap
/// is equal all `K - 1` nontrivial coordinates are kept.
pub fn select_dimension<T: Scalar>(eigenvalues: &[T]) -> usize {
    let k = eigenvalues.len();
    if k <= 2 {
        return 1;
    }
    let gaps: Vec<T> = eigenvalues[1..].windows(2).map(|w| w[0] - w[1]).collect();
    let max = gaps.iter().copied().fold(T::neg_infinity(), T::max);
    let min = gaps.iter().copied().fold(T::infinity(), T::min);
    let flat = max <= T::solver_tolerance() || (gaps.len() > 1 && max - min <= T::solver_tolerance());
    if flat {
        warn!("no eigengap among {} eigenvalues; keeping {} dimensions", k, k - 1);
        return k - 1;
    }
    gaps.iter().position(|&g| g == max).unwrap() + 1
}

/// Diffusion coordinates of every row of `x`.
pub fn embed<T: Scalar, P: PointSet>(
    x: &P,
    config: &DiffusionConfig<T>,
) -> Result<(Embedding<T>, SpectralDecomposition<T>, EpsilonScan<T>)> {
    config.validate()?;
    let n = x.n_points();
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 points to embed, got {n}")));
    }
    let scan = match (config.epsilon, scan_epsilon(x, config)) {
        (None, r) => r?,
        (Some(e), Ok(s)) => EpsilonScan {
            chosen_epsilon: e,
            ..s
        },
        (Some(e), Err(_)) => EpsilonScan {
            points: vec![],
            chosen_epsilon: e,
            median_sq_dist: T::zero(),
            sample_size: 0,
        },
    };
    let w = compute_affinity(x, scan.chosen_epsilon)?;
    let spectral = spectral_decompose(&w, config.n_eigen.min(n))?;
    drop(w);

    let available = spectral.eigenvalues.len() - 1;
    let dims = match config.dims {
        Some(d) if d > available => {
            warn!("requested {d} dimensions but only {available} are available");
            available
        }
        Some(d) => d,
        None => select_dimension(&spectral.eigenvalues),
    };
    let total: T = spectral.degrees.iter().copied().sum();
    let coords = Array2::from_shape_fn((n, dims), |(i, c)| {
        let lambda = spectral.eigenvalues[c + 1];
        let v = spectral.eigenvectors[[i, c + 1]];
        if config.scaled_eigenvectors {
            lambda * v * (total / spectral.degrees[i]).sqrt()
        } else {
            lambda * v
        }
    });
    Ok((Embedding { coords, dims }, spectral, scan))
}

//! k-means on embedded coordinates, silhouette-based choice of k, and the
//! mapping from clusters to classes.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel<T> {
    pub k: usize,
    /// k × d.
    pub centroids: Array2<T>,
    /// Zero-based cluster of each point. Clusters are numbered in order of
    /// their first member.
    pub assignment: Vec<usize>,
    pub inertia: T,
    pub seed: u64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<T>,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignment {
            s[a] += 1;
        }
        s
    }
}

fn sq_dist<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid (lowest ordinal on ties) and its squared distance.
fn nearest<T: Scalar>(p: ArrayView1<T>, centroids: &Array2<T>) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(p, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn distinct_rows<T: Scalar>(points: ArrayView2<T>) -> usize {
    points
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.as_f64().to_bits()).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    seed ^ (restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn plus_plus<T: Scalar>(points: ArrayView2<T>, k: usize, rng: &mut ChaCha8Rng) -> Array2<T> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points
        .rows()
        .into_iter()
        .map(|p| sq_dist(p, points.row(first)).as_f64())
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(pick)).as_f64());
        }
    }
    centroids
}

struct Run<T> {
    centroids: Array2<T>,
    assignment: Vec<usize>,
    inertia: T,
    trace: Vec<T>,
}

fn lloyd<T: Scalar>(points: ArrayView2<T>, mut centroids: Array2<T>) -> Run<T> {
    let (n, d) = points.dim();
    let k = centroids.nrows();
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<(usize, T)> = (0..n)
            .into_par_iter()
            .map(|i| nearest(points.row(i), &centroids))
            .collect();
        let inertia: T = next.iter().map(|x| x.1).sum();
        trace.push(inertia);
        let mut new_assignment: Vec<usize> = next.iter().map(|x| x.0).collect();

        let mut counts = vec![0usize; k];
        for &a in &new_assignment {
            counts[a] += 1;
        }
        // empty clusters take the point farthest from its own centroid
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[new_assignment[i]] > 1)
                .max_by(|&a, &b| {
                    let da = sq_dist(points.row(a), centroids.row(new_assignment[a]));
                    let db = sq_dist(points.row(b), centroids.row(new_assignment[b]));
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .expect("k <= n");
            counts[new_assignment[far]] -= 1;
            counts[empty] = 1;
            new_assignment[far] = empty;
            centroids.row_mut(empty).assign(&points.row(far));
        }

        let converged = new_assignment == assignment;
        assignment = new_assignment;
        if converged {
            break;
        }
        let mut sums = Array2::<T>::zeros((k, d));
        for (i, &a) in assignment.iter().enumerate() {
            sums.row_mut(a).zip_mut_with(&points.row(i), |s, &v| *s = *s + v);
        }
        for c in 0..k {
            let cnt = T::of_usize(counts[c]);
            centroids.row_mut(c).assign(&sums.row(c).mapv(|v| v / cnt));
        }
    }
    let inertia = assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(points.row(i), centroids.row(a)))
        .sum();
    Run {
        centroids,
        assignment,
        inertia,
        trace,
    }
}

/// Renumbers clusters in order of their first member.
fn canonical<T: Scalar>(run: Run<T>) -> Run<T> {
    let k = run.centroids.nrows();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &a in &run.assignment {
        if map[a] == usize::MAX {
            map[a] = next;
            next += 1;
        }
    }
    let mut centroids = run.centroids.clone();
    for (old, &new) in map.iter().enumerate() {
        centroids.row_mut(new).assign(&run.centroids.row(old));
    }
    Run {
        centroids,
        assignment: run.assignment.iter().map(|&a| map[a]).collect(),
        ..run
    }
}

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
/// inertia wins (earliest restart on ties).
pub fn kmeans<T: Scalar>(
    points: ArrayView2<T>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel<T>> {
    let n = points.nrows();
    if k < 1 || k > n {
        return Err(Error::invalid(format!("k = {k} must be between 1 and N = {n}")));
    }
    let distinct = distinct_rows(points);
    if distinct < k {
        return Err(Error::Degenerate(format!(
            "only {distinct} distinct points for k = {k}"
        )));
    }
    let runs: Vec<Run<T>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, r));
            lloyd(points, plus_plus(points, k, &mut rng))
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.inertia < runs[best].inertia {
            best = i;
        }
    }
    let run = canonical(runs.into_iter().nth(best).unwrap());
    debug!("k-means k={k}: inertia {} after {} steps", run.inertia, run.trace.len());
    Ok(ClusterModel {
        k,
        centroids: run.centroids,
        assignment: run.assignment,
        inertia: run.inertia,
        seed,
        inertia_trace: run.trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteReport<T> {
    pub per_point: Vec<T>,
    /// Mean distance to the other members of the point's own cluster.
    pub a: Vec<T>,
    /// Smallest mean distance to the members of another cluster.
    pub b: Vec<T>,
    /// Mean silhouette of each cluster ordinal (0 for empty ordinals).
    pub per_cluster: Vec<T>,
    pub mean: T,
}

/// Silhouette coefficients with Euclidean dissimilarity. Points alone in
/// their cluster get 0.
pub fn silhouette<T: Scalar>(
    points: ArrayView2<T>,
    assignment: &[usize],
) -> Result<SilhouetteReport<T>> {
    let n = points.nrows();
    if assignment.len() != n {
        return Err(Error::invalid("assignment length differs from point count"));
    }
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignment {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::invalid("silhouette needs at least two clusters"));
    }
    let rows: Vec<(T, T, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sums = vec![T::zero(); k];
            for j in 0..n {
                if j != i {
                    sums[assignment[j]] = sums[assignment[j]] + sq_dist(points.row(i), points.row(j)).sqrt();
                }
            }
            let own = assignment[i];
            if sizes[own] == 1 {
                return (T::zero(), T::zero(), T::zero());
            }
            let a = sums[own] / T::of_usize(sizes[own] - 1);
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / T::of_usize(sizes[c]))
                .fold(T::infinity(), T::min);
            let m = a.max(b);
            let s = if m > T::zero() { (b - a) / m } else { T::zero() };
            (s, a, b)
        })
        .collect();
    let per_point: Vec<T> = rows.iter().map(|r| r.0).collect();
    let mut per_cluster = vec![T::zero(); k];
    for (i, &a) in assignment.iter().enumerate() {
        per_cluster[a] = per_cluster[a] + per_point[i];
    }
    for c in 0..k {
        if sizes[c] > 0 {
            per_cluster[c] = per_cluster[c] / T::of_usize(sizes[c]);
        }
    }
    Ok(SilhouetteReport {
        mean: per_point.iter().copied().sum::<T>() / T::of_usize(n),
        a: rows.iter().map(|r| r.1).collect(),
        b: rows.iter().map(|r| r.2).collect(),
        per_point,
        per_cluster,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection<T> {
    pub k: usize,
    /// `(k, mean silhouette)` for every k tried.
    pub curve: Vec<(usize, T)>,
    pub model: ClusterModel<T>,
}

impl<T: Scalar> KSelection<T> {
    pub fn curve_tsv(&self) -> String {
        let mut s = String::from("k\tsilhouette\n");
        for (k, v) in &self.curve {
            s.push_str(&format!("{k}\t{}\n", v.as_f64()));
        }
        s
    }
}

/// Runs k-means for every k in `k_min..=k_max` and keeps the k with the
/// highest mean silhouette (smallest k on ties).
pub fn select_k<T: Scalar>(
    points: ArrayView2<T>,
    k_min: usize,
    k_max: usize,
    seed: u64,
    restarts: usize,
) -> Result<KSelection<T>> {
    let n = points.nrows();
    if k_min < 2 || k_min > k_max || k_max + 1 > n {
        return Err(Error::invalid(format!(
            "k range {k_min}..={k_max} must lie within 2..={}",
            n.saturating_sub(1)
        )));
    }
    let results: Vec<(usize, Result<(ClusterModel<T>, T)>)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let r = kmeans(points, k, seed, restarts)
                .and_then(|m| silhouette(points, &m.assignment).map(|s| (m, s.mean)));
            (k, r)
        })
        .collect();
    let mut curve = Vec::new();
    let mut best: Option<(usize, ClusterModel<T>, T)> = None;
    for (k, r) in results {
        match r {
            Ok((m, s)) => {
                curve.push((k, s));
                if best.as_ref().is_none_or(|b| s > b.2) {
                    best = Some((k, m, s));
                }
            }
            Err(Error::Degenerate(msg)) => warn!("skipping k = {k}: {msg}"),
            Err(e) => return Err(e),
        }
    }
    let (k, model, _) = best.ok_or_else(|| Error::Degenerate("no k in range could be clustered".into()))?;
    Ok(KSelection { k, curve, model })
}

/// How clusters become classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelStrategy {
    /// The biggest cluster is `normal`, every other one `attack`.
    LargestIsNormal,
    /// The listed one-based cluster ordinals are `normal`, the rest `attack`.
    Manual(Vec<usize>),
    /// Cluster `c` becomes class `"c"` (one-based).
    PerCluster,
}

pub const NORMAL: &str = "normal";
pub const ATTACK: &str = "attack";

impl fmt::Display for LabelStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelStrategy::LargestIsNormal => write!(f, "largest"),
            LabelStrategy::PerCluster => write!(f, "per-cluster"),
            LabelStrategy::Manual(list) => {
                let s: Vec<String> = list.iter().map(|c| c.to_string()).collect();
                write!(f, "manual:{}", s.join(","))
            }
        }
    }
}

impl FromStr for LabelStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "largest" | "largest-is-normal" => Ok(LabelStrategy::LargestIsNormal),
            "per-cluster" | "per-cluster-classes" => Ok(LabelStrategy::PerCluster),
            _ => {
                let list = s
                    .strip_prefix("manual:")
                    .ok_or_else(|| Error::invalid(format!("unknown labeling {s:?}")))?;
                let ords = list
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::invalid(format!("bad cluster ordinal {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(LabelStrategy::Manual(ords))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassLabeling {
    /// Class vocabulary.
    pub classes: Vec<String>,
    /// Class index of each cluster.
    pub cluster_class: Vec<usize>,
    /// Class index of each point.
    pub point_class: Vec<usize>,
}

impl ClassLabeling {
    pub fn label(&self, i: usize) -> &str {
        &self.classes[self.point_class[i]]
    }

    /// Labeling from explicit per-point class names; classes are numbered
    /// in order of first appearance and each point is its own "cluster".
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut classes: Vec<String> = Vec::new();
        let point_class = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                match classes.iter().position(|c| c == l) {
                    Some(i) => i,
                    None => {
                        classes.push(l.to_string());
                        classes.len() - 1
                    }
                }
            })
            .collect();
        ClassLabeling {
            cluster_class: (0..classes.len()).collect(),
            classes,
            point_class,
        }
    }
}

pub fn label_clusters(
    assignment: &[usize],
    k: usize,
    strategy: &LabelStrategy,
) -> Result<ClassLabeling> {
    let mut sizes = vec![0usize; k];
    for &a in assignment {
        sizes[a] += 1;
    }
    let (classes, cluster_class): (Vec<String>, Vec<usize>) = match strategy {
        LabelStrategy::PerCluster => ((1..=k).map(|c| c.to_string()).collect(), (0..k).collect()),
        LabelStrategy::LargestIsNormal => {
            let mut largest = 0;
            for c in 0..k {
                if sizes[c] > sizes[largest] {
                    largest = c;
                }
            }
            (
                vec![NORMAL.into(), ATTACK.into()],
                (0..k).map(|c| (c != largest) as usize).collect(),
            )
        }
        LabelStrategy::Manual(list) => {
            if list.is_empty() {
                return Err(Error::invalid("manual labeling names no cluster"));
            }
            if let Some(bad) = list.iter().find(|&&c| c == 0 || c > k) {
                return Err(Error::invalid(format!(
                    "cluster {bad} does not exist (clusters are 1..={k})"
                )));
            }
            (
                vec![NORMAL.into(), ATTACK.into()],
                (0..k).map(|c| !list.contains(&(c + 1)) as usize).collect(),
            )
        }
    };
    Ok(ClassLabeling {
        point_class: assignment.iter().map(|&a| cluster_class[a]).collect(),
        classes,
        cluster_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest, ProptestConfig, Strategy};

    fn pairs() -> Array2<f64> {
        array![[0.0, 0.0], [0.0, 1.0], [100.0, 0.0], [100.0, 1.0]]
    }

    #[test]
    fn two_distant_pairs() {
        let m = kmeans(pairs().view(), 2, 1, 10).unwrap();
        assert_eq!(m.assignment, vec![0, 0, 1, 1]);
        assert_eq!(m.centroids, array![[0.0, 0.5], [100.0, 0.5]]);
        assert_abs_diff_eq!(m.inertia, 1.0);
        let s = silhouette(pairs().view(), &m.assignment).unwrap();
        assert!(s.mean > 0.9);
        // a = 1, b = (100 + sqrt(100^2 + 1)) / 2
        let b = (100.0 + (10001f64).sqrt()) / 2.0;
        assert_abs_diff_eq!(s.per_point[0], (b - 1.0) / b, epsilon = 1e-12);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let m = kmeans(pairs().view(), 4, 3, 2).unwrap();
        assert_eq!(m.inertia, 0.0);
        assert_eq!(m.sizes(), vec![1; 4]);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kmeans(pairs().view(), 5, 0, 1).is_err());
        let dup = array![[1.0], [1.0], [2.0]];
        assert!(matches!(kmeans(dup.view(), 3, 0, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn silhouette_edge_cases() {
        // point 1 is equidistant from its own cluster and the other one
        let p = array![[0.0], [1.0], [2.0]];
        let s = silhouette(p.view(), &[0, 0, 1]).unwrap();
        assert_eq!(s.per_point[1], 0.0);
        assert_eq!(s.per_point[2], 0.0); // singleton
        assert!(silhouette(p.view(), &[0, 0, 0]).is_err());
    }

    #[test]
    fn uniform_points_score_below_tight_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = Array2::from_shape_fn((60, 2), |_| rng.random::<f64>());
        let m = kmeans(p.view(), 2, 0, 5).unwrap();
        let s = silhouette(p.view(), &m.assignment).unwrap().mean;
        assert!(s > 0.0 && s < 0.6, "{s}");
    }

    #[test]
    fn select_k_on_three_groups() {
        let mut rows = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)] {
            for i in 0..10 {
                rows.push([cx + (i % 3) as f64 * 0.1, cy + (i / 3) as f64 * 0.1]);
            }
        }
        let p = Array2::from(rows);
        let sel = select_k(p.view(), 2, 6, 7, 5).unwrap();
        assert_eq!(sel.k, 3);
        let max = sel.curve.iter().map(|c| c.1).fold(f64::MIN, f64::max);
        assert_eq!(sel.curve.iter().find(|c| c.0 == sel.k).unwrap().1, max);
        assert!(select_k(p.view(), 2, 30, 7, 5).is_err());
    }

    #[test]
    fn labeling_strategies() {
        let a = [0, 1, 1, 2, 1];
        let l = label_clusters(&a, 3, &LabelStrategy::LargestIsNormal).unwrap();
        assert_eq!(l.cluster_class, vec![1, 0, 1]);
        assert_eq!(l.label(1), "normal");
        assert_eq!(l.label(0), "attack");
        let l = label_clusters(&a, 3, &LabelStrategy::Manual(vec![3])).unwrap();
        assert_eq!(l.label(3), "normal");
        assert_eq!(l.label(1), "attack");
        let l = label_clusters(&a, 3, &LabelStrategy::PerCluster).unwrap();
        assert_eq!(l.classes, ["1", "2", "3"]);
        assert_eq!(l.label(3), "3");
        assert!(label_clusters(&a, 3, &LabelStrategy::Manual(vec![4])).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("manual:4".parse::<LabelStrategy>().unwrap(), LabelStrategy::Manual(vec![4]));
        assert_eq!(
            "manual:1, 2".parse::<LabelStrategy>().unwrap(),
            LabelStrategy::Manual(vec![1, 2])
        );
        assert_eq!("largest".parse::<LabelStrategy>().unwrap(), LabelStrategy::LargestIsNormal);
        assert!("manual:x".parse::<LabelStrategy>().is_err());
        let s = LabelStrategy::Manual(vec![2, 5]);
        assert_eq!(s.to_string().parse::<LabelStrategy>().unwrap(), s);
    }

    fn cloud() -> impl Strategy<Value = Array2<f64>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 8..40)
            .prop_map(|v| Array2::from_shape_fn((v.len(), 2), |(i, j)| if j == 0 { v[i].0 } else { v[i].1 }))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn lloyd_never_increases_inertia(p in cloud(), k in 2usize..5, seed in 0u64..100) {
            let m = kmeans(p.view(), k, seed, 3).unwrap();
            for w in m.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            prop_assert!(m.sizes().iter().all(|&s| s > 0));
            for (i, &a) in m.assignment.iter().enumerate() {
                prop_assert_eq!(nearest(p.row(i), &m.centroids).0, a);
            }
        }

        #[test]
        fn same_seed_same_model(p in cloud(), seed in 0u64..100) {
            prop_assert_eq!(kmeans(p.view(), 3, seed, 4).unwrap(), kmeans(p.view(), 3, seed, 4).unwrap());
        }

        #[test]
        fn more_restarts_never_hurt(p in cloud(), seed in 0u64..100) {
            let few = kmeans(p.view(), 3, seed, 2).unwrap().inertia;
            let many = kmeans(p.view(), 3, seed, 6).unwrap().inertia;
            prop_assert!(many <= few);
        }

        #[test]
        fn silhouettes_are_bounded(p in cloud(), seed in 0u64..100) {
            let m = kmeans(p.view(), 3, seed, 2).unwrap();
            let s = silhouette(p.view(), &m.assignment).unwrap();
            prop_assert!(s.per_point.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }
}

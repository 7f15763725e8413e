//! Random instance generators for property checks and benchmarks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::eigen::smallest_eigenpair_dense;
use crate::error::Result;
use crate::linalg::{validate_graph_metric, GraphMetric, SymmetricMatrix, DEFAULT_PD_TOL};
use crate::objective::ObjectiveContext;

/// A random graph metric of size `k`.
///
/// A random spanning tree guarantees connectivity and extra edges appear with
/// probability 0.3. Diagonals are drawn around the off-diagonal row sums, so
/// plain Gershgorin discs often cross zero; a final shift sets `lambda_min`
/// to a random value in `[0.01, 0.5]` whenever it would fall below that.
pub fn random_graph_metric<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Result<GraphMetric> {
    let mut m = SymmetricMatrix::zeros(k)?;
    for i in 1..k {
        let j = rng.random_range(0..i);
        m.set(i, j, -rng.random_range(0.1..1.0));
    }
    for i in 0..k {
        for j in i + 1..k {
            if m.get(i, j) == 0.0 && rng.random_bool(0.3) {
                m.set(i, j, -rng.random_range(0.0..1.0));
            }
        }
    }
    for i in 0..k {
        let r: f64 = (0..k).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
        m.set(i, i, r * rng.random_range(0.5..1.5) + rng.random_range(0.0..0.1));
    }
    let floor = rng.random_range(0.01..0.5);
    let lambda = smallest_eigenpair_dense(&m)?.value;
    if lambda < floor {
        for i in 0..k {
            m.set(i, i, m.get(i, i) + floor - lambda);
        }
    }
    validate_graph_metric(&m, DEFAULT_PD_TOL)
}

/// `n` feature vectors of length `k` with independent standard normal entries.
pub fn random_features<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..k).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

/// `n >= 2` labels in `{+1, -1}` with both values present.
pub fn random_signs<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut z: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    z[0] = 1.0;
    z[n - 1] = -1.0;
    z
}

/// Two Gaussian clusters separated along a random direction, with `+1`/`-1`
/// labels, plus the matching objective. Features are scaled by `scale`.
pub fn two_cluster_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    scale: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, ObjectiveContext)> {
    let shift: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let z = random_signs(rng, n);
    let features: Vec<Vec<f64>> = random_features(rng, n, k)
        .into_iter()
        .zip(&z)
        .map(|(f, &zi)| {
            f.iter()
                .zip(&shift)
                .map(|(x, s)| scale * (x + zi * s))
                .collect()
        })
        .collect();
    let ctx = ObjectiveContext::new(&features, &z)?;
    Ok((features, z, ctx))
}

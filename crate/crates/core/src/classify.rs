//! k-nearest-neighbour and graph-based (label propagation) classifiers under a
//! learned metric.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{edge_weight, mahalanobis, SymmetricMatrix};

/// Diagonal shift applied to a singular unlabeled block.
pub const SINGULAR_SHIFT: f64 = 1e-10;

pub const DEFAULT_K: usize = 5;

fn check_training<R: AsRef<[f64]>>(train: &[R], labels: &[usize], metric: &SymmetricMatrix, k: usize) -> Result<()> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if labels.len() != train.len() {
        return Err(Error::DimensionMismatch {
            expected: train.len(),
            found: labels.len(),
        });
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be in 1..={}",
            train.len()
        )));
    }
    for row in train {
        metric.check_len(row.as_ref().len())?;
    }
    Ok(())
}

/// Indices of the `k` training points nearest to `query`, nearest first.
/// Distance ties go to the lower training index.
pub fn nearest_neighbors<R: AsRef<[f64]>>(
    train: &[R],
    query: &[f64],
    metric: &SymmetricMatrix,
    k: usize,
) -> Result<Vec<usize>> {
    metric.check_len(query.len())?;
    let mut dist = train
        .iter()
        .enumerate()
        .map(|(i, f)| Ok((mahalanobis(f.as_ref(), query, metric)?, i)))
        .collect::<Result<Vec<(f64, usize)>>>()?;
    let k = k.min(dist.len());
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k, by_distance);
        dist.truncate(k);
    }
    dist.sort_by(by_distance);
    Ok(dist.into_iter().map(|(_, i)| i).collect())
}

/// Majority vote among the `k` nearest training points; vote ties go to the
/// smallest label.
pub fn knn_classify<R: AsRef<[f64]>>(
    train: &[R],
    labels: &[usize],
    query: &[f64],
    metric: &SymmetricMatrix,
    k: usize,
) -> Result<usize> {
    check_training(train, labels, metric, k)?;
    let nn = nearest_neighbors(train, query, metric, k)?;
    let num_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut votes = vec![0usize; num_labels];
    for i in nn {
        votes[labels[i]] += 1;
    }
    Ok(argmax_lowest(votes.iter().map(|&v| v as f64)))
}

/// Fraction of the `k` nearest training points carrying label `class`.
pub fn knn_class_share<R: AsRef<[f64]>>(
    train: &[R],
    labels: &[usize],
    query: &[f64],
    metric: &SymmetricMatrix,
    k: usize,
    class: usize,
) -> Result<f64> {
    check_training(train, labels, metric, k)?;
    let nn = nearest_neighbors(train, query, metric, k)?;
    let hits = nn.iter().filter(|&&i| labels[i] == class).count();
    Ok(hits as f64 / k as f64)
}

/// Index of the largest value; ties and NaN-free equal maxima go to the
/// lowest index.
pub fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// A dense similarity graph with some nodes carrying known `+1`/`-1` labels.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    n: usize,
    weights: Vec<f64>,
    known: Vec<(usize, f64)>,
}

impl LabeledGraph {
    /// Weights `exp(-(f_i - f_j)^T M (f_i - f_j))` over all pairs.
    pub fn from_features<R: AsRef<[f64]>>(
        features: &[R],
        metric: &SymmetricMatrix,
        known: &[(usize, f64)],
    ) -> Result<Self> {
        let n = features.len();
        for f in features {
            metric.check_len(f.as_ref().len())?;
        }
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = mahalanobis(features[i].as_ref(), features[j].as_ref(), metric)?;
                // roundoff can leave a tiny negative distance between near-identical points
                let w = edge_weight(d.max(0.0))?;
                weights[i * n + j] = w;
                weights[j * n + i] = w;
            }
        }
        Self::build(n, weights, known)
    }

    /// From an explicit symmetric weight matrix with zero diagonal and
    /// entries in `[0, 1]`.
    pub fn from_weights<R: AsRef<[f64]>>(weights: &[R], known: &[(usize, f64)]) -> Result<Self> {
        let n = weights.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in weights.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &w) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&w) || (i == j && w != 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "weight ({i}, {j}) = {w} outside [0, 1] or on the diagonal"
                    )));
                }
                if w != weights[j].as_ref()[i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
            flat.extend_from_slice(row);
        }
        Self::build(n, flat, known)
    }

    fn build(n: usize, weights: Vec<f64>, known: &[(usize, f64)]) -> Result<Self> {
        if known.is_empty() {
            return Err(Error::InvalidArgument("at least one known label is required".into()));
        }
        let mut seen = vec![false; n];
        for &(i, z) in known {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, dim: n });
            }
            if seen[i] {
                return Err(Error::InvalidArgument(format!("node {i} labelled twice")));
            }
            if z != 1.0 && z != -1.0 {
                return Err(Error::InvalidArgument(format!("label of node {i} is {z}, expected +1 or -1")));
            }
            seen[i] = true;
        }
        Ok(Self {
            n,
            weights,
            known: known.to_vec(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn known(&self) -> &[(usize, f64)] {
        &self.known
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.weights[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Entry `(i, j)` of `L = D - W`.
    pub fn laplacian(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.degree(i)
        } else {
            -self.weight(i, j)
        }
    }

    /// `z^T L z`.
    pub fn smoothness(&self, z: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let d = z[i] - z[j];
                total += self.weight(i, j) * d * d;
            }
        }
        total
    }

    /// Minimizes `z^T L z` with the known entries fixed, by solving
    /// `L_UU z_U = -L_UL z_L`.
    pub fn propagate(&self) -> Result<Vec<f64>> {
        let mut z = vec![0.0; self.n];
        let mut is_known = vec![false; self.n];
        for &(i, v) in &self.known {
            z[i] = v;
            is_known[i] = true;
        }
        let unknown: Vec<usize> = (0..self.n).filter(|&i| !is_known[i]).collect();
        if unknown.is_empty() {
            return Ok(z);
        }
        let u = unknown.len();
        let mut l_uu = DMatrix::from_fn(u, u, |a, b| self.laplacian(unknown[a], unknown[b]));
        let rhs = DVector::from_fn(u, |a, _| {
            let i = unknown[a];
            self.known.iter().map(|&(j, v)| self.weight(i, j) * v).sum::<f64>()
        });
        let solution = match l_uu.clone().cholesky() {
            Some(c) if c.l().diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) => c.solve(&rhs),
            _ => {
                log::warn!(
                    "unlabeled block of the graph Laplacian is singular; adding {SINGULAR_SHIFT:e} to its diagonal"
                );
                for a in 0..u {
                    l_uu[(a, a)] += SINGULAR_SHIFT;
                }
                l_uu.cholesky()
                    .ok_or_else(|| {
                        Error::InvalidArgument("graph Laplacian block is not positive semidefinite".into())
                    })?
                    .solve(&rhs)
            }
        };
        for (a, &i) in unknown.iter().enumerate() {
            z[i] = solution[a];
        }
        Ok(z)
    }
}

/// Scores for every node after propagating the known `+1`/`-1` labels over the
/// graph built from `features` under `metric`. Known entries pass through.
pub fn graph_classify<R: AsRef<[f64]>>(
    features: &[R],
    known: &[(usize, f64)],
    metric: &SymmetricMatrix,
) -> Result<Vec<f64>> {
    LabeledGraph::from_features(features, metric, known)?.propagate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn euclidean_knn(train: &[Vec<f64>], labels: &[usize], q: &[f64], k: usize) -> usize {
        let mut d: Vec<(f64, usize)> = train
            .iter()
            .enumerate()
            .map(|(i, f)| (f.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes = [0usize; 3];
        for &(_, i) in &d[..k] {
            votes[labels[i]] += 1;
        }
        let best = *votes.iter().max().unwrap();
        votes.iter().position(|&v| v == best).unwrap()
    }

    #[test]
    fn knn_exact_match() {
        let train = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0]];
        let labels = [0, 1, 2];
        let m = SymmetricMatrix::identity(2).unwrap();
        assert_eq!(knn_classify(&train, &labels, &[1.0, 1.0], &m, 1).unwrap(), 1);
    }

    #[test]
    fn knn_matches_euclidean_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = SymmetricMatrix::identity(3).unwrap();
        for _ in 0..100 {
            let n = rng.random_range(5..30);
            let train: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let k = rng.random_range(1..=n.min(7));
            assert_eq!(
                knn_classify(&train, &labels, &q, &m, k).unwrap(),
                euclidean_knn(&train, &labels, &q, k)
            );
        }
    }

    #[test]
    fn knn_invariant_under_metric_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = SymmetricMatrix::from_rows(&[[2.0, -0.5], [-0.5, 1.0]]).unwrap();
        let train: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random(), rng.random()]).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        for _ in 0..20 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            let base = knn_classify(&train, &labels, &q, &m, 5).unwrap();
            for c in [1e-3, 0.5, 7.0, 1e4] {
                assert_eq!(knn_classify(&train, &labels, &q, &m.scale(c), 5).unwrap(), base);
            }
        }
    }

    #[test]
    fn knn_tie_rules() {
        // equidistant neighbours: the lower index wins the last slot
        let train = vec![vec![1.0], vec![-1.0], vec![1.0]];
        let m = SymmetricMatrix::identity(1).unwrap();
        assert_eq!(nearest_neighbors(&train, &[0.0], &m, 2).unwrap(), vec![0, 1]);
        // one vote each: the smaller label wins
        assert_eq!(knn_classify(&train, &[1, 0, 1], &[0.0], &m, 2).unwrap(), 0);
        assert!(knn_classify(&Vec::<Vec<f64>>::new(), &[], &[0.0], &m, 1).is_err());
        assert!(knn_classify(&train, &[0, 0, 0], &[0.0], &m, 4).is_err());
        assert_eq!(knn_class_share(&train, &[1, 0, 1], &[0.0], &m, 3, 1).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn graph_all_known() {
        let f = vec![vec![0.0], vec![1.0]];
        let m = SymmetricMatrix::identity(1).unwrap();
        let z = graph_classify(&f, &[(0, 1.0), (1, -1.0)], &m).unwrap();
        assert_eq!(z, vec![1.0, -1.0]);
    }

    #[test]
    fn graph_path_of_three() {
        let w = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let g = LabeledGraph::from_weights(&w, &[(0, 1.0), (2, -1.0)]).unwrap();
        let z = g.propagate().unwrap();
        assert_eq!(z[1], 0.0);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| g.laplacian(i, j)).sum();
            assert!(row.abs() < 1e-10);
        }
    }

    #[test]
    fn graph_disconnected_cliques() {
        let mut w = vec![vec![0.0; 6]; 6];
        for block in [0..3, 3..6] {
            for i in block.clone() {
                for j in block.clone() {
                    if i != j {
                        w[i][j] = 0.5;
                    }
                }
            }
        }
        let g = LabeledGraph::from_weights(&w, &[(0, 1.0), (3, -1.0)]).unwrap();
        let z = g.propagate().unwrap();
        for i in 1..3 {
            assert!(z[i] > 0.0, "{z:?}");
            assert!(z[i + 3] < 0.0, "{z:?}");
        }
    }

    #[test]
    fn graph_singular_block_is_regularized() {
        // node 2 has no edges at all
        let w = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let z = LabeledGraph::from_weights(&w, &[(0, 1.0)]).unwrap().propagate().unwrap();
        assert!((z[1] - 1.0).abs() < 1e-8);
        assert_eq!(z[2], 0.0);
    }

    #[test]
    fn graph_rejects_bad_labels() {
        let f = vec![vec![0.0], vec![1.0]];
        let m = SymmetricMatrix::identity(1).unwrap();
        assert!(graph_classify(&f, &[], &m).is_err());
        assert!(graph_classify(&f, &[(0, 0.5)], &m).is_err());
        assert!(graph_classify(&f, &[(2, 1.0)], &m).is_err());
        assert!(graph_classify(&f, &[(0, 1.0), (0, -1.0)], &m).is_err());
    }

    #[test]
    fn graph_scores_obey_maximum_principle_and_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = SymmetricMatrix::from_rows(&[[1.0, -0.2], [-0.2, 0.5]]).unwrap();
        for _ in 0..30 {
            let n = rng.random_range(4..20);
            let f: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                .collect();
            let mut known = Vec::new();
            for i in 0..n {
                if rng.random_bool(0.4) {
                    known.push((i, if rng.random_bool(0.5) { 1.0 } else { -1.0 }));
                }
            }
            if known.is_empty() {
                continue;
            }
            let g = LabeledGraph::from_features(&f, &m, &known).unwrap();
            let z = g.propagate().unwrap();
            let lo = known.iter().map(|k| k.1).fold(f64::INFINITY, f64::min);
            let hi = known.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max);
            let base = g.smoothness(&z);
            for i in 0..n {
                assert!(z[i] >= lo - 1e-9 && z[i] <= hi + 1e-9);
                if known.iter().any(|k| k.0 == i) {
                    continue;
                }
                for h in [1e-3, -1e-3] {
                    let mut zp = z.clone();
                    zp[i] += h;
                    assert!(g.smoothness(&zp) >= base);
                }
            }
        }
    }

    #[test]
    fn argmax_prefers_lowest() {
        assert_eq!(argmax_lowest([0.2, 0.7, 0.7]), 1);
        assert_eq!(argmax_lowest([-1.0, -1.0]), 0);
    }
}

//! Smallest eigenpair of a symmetric matrix.
//!
//! [`smallest_eigenpair_lobpcg`] is a single-vector LOBPCG iteration used in
//! the optimizer's inner loop, where the previous eigenvector is an excellent
//! starting guess. [`smallest_eigenpair_dense`] performs a full symmetric
//! eigendecomposition and serves as the reference answer.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 200;

/// Largest dimension accepted by the dense solver.
pub const DENSE_MAX_DIM: usize = 500;

/// Gram matrix condition number above which the search basis is
/// orthogonalized a second time.
const REORTHO_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit 2-norm eigenvector.
    pub vector: Vec<f64>,
    /// `||M v - value v||_2`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct LobpcgSolution {
    pub pair: EigenPair,
    /// Rayleigh-Ritz updates performed; zero when the start vector already met
    /// the tolerance.
    pub iterations: usize,
}

pub fn residual_norm(m: &SymmetricMatrix, value: f64, v: &[f64]) -> f64 {
    let k = m.dim();
    let mut acc = 0.0;
    for i in 0..k {
        let mut mv = 0.0;
        for (j, vj) in v.iter().enumerate() {
            mv += m.get(i, j) * vj;
        }
        let r = mv - value * v[i];
        acc += r * r;
    }
    acc.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips `v` so that its first entry that is not negligible is positive.
fn normalize_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-10 * max) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn finish(m: &SymmetricMatrix, mut v: Vec<f64>) -> EigenPair {
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    normalize_sign(&mut v);
    let mv = m.mul_vec(&v).expect("dimension checked by caller");
    let value = dot(&v, &mv);
    let residual = residual_norm(m, value, &v);
    EigenPair {
        value,
        vector: v,
        residual,
    }
}

pub(crate) fn to_nalgebra(m: &SymmetricMatrix) -> DMatrix<f64> {
    let k = m.dim();
    DMatrix::from_fn(k, k, |i, j| m.get(i, j))
}

/// Smallest eigenpair from a full symmetric eigendecomposition.
pub fn smallest_eigenpair_dense(m: &SymmetricMatrix) -> Result<EigenPair> {
    let k = m.dim();
    if k > DENSE_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "dense eigensolve limited to dimension {DENSE_MAX_DIM}, got {k}"
        )));
    }
    let eig = SymmetricEigen::new(to_nalgebra(m));
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("dimension is at least 1");
    let mut vector: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let n = norm(&vector);
    vector.iter_mut().for_each(|x| *x /= n);
    normalize_sign(&mut vector);
    let residual = residual_norm(m, value, &vector);
    Ok(EigenPair {
        value,
        vector,
        residual,
    })
}

/// Modified Gram-Schmidt of `candidates` against `basis` (assumed
/// orthonormal) and each other. Vectors that lose almost all of their norm
/// are dropped.
fn orthonormalize(basis: &mut Vec<Vec<f64>>, candidates: Vec<Vec<f64>>, passes: usize) {
    for mut w in candidates {
        let original = norm(&w);
        if original == 0.0 || !original.is_finite() {
            continue;
        }
        for _ in 0..passes {
            for q in basis.iter() {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let n = norm(&w);
        if n > 1e-12 * original {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
}

/// Condition number of the Gram matrix of the unit-normalized vectors.
fn gram_condition(vectors: &[&[f64]]) -> f64 {
    let units: Vec<Vec<f64>> = vectors
        .iter()
        .filter_map(|v| {
            let n = norm(v);
            (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
        })
        .collect();
    let b = units.len();
    if b < 2 {
        return 1.0;
    }
    let gram = DMatrix::from_fn(b, b, |i, j| dot(&units[i], &units[j]));
    let ev = SymmetricEigen::new(gram).eigenvalues;
    let max = ev.iter().cloned().fold(f64::MIN, f64::max);
    let min = ev.iter().cloned().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Smallest eigenpair by block-size-one LOBPCG without preconditioning.
///
/// Converges when `||M x - lambda x||_2 <= tol`. The default start vector is
/// the normalized all-ones vector. On exhaustion returns
/// [`Error::NoConvergence`] carrying the best pair found.
pub fn smallest_eigenpair_lobpcg(
    m: &SymmetricMatrix,
    warm_start: Option<&[f64]>,
    tol: f64,
    max_iters: usize,
) -> Result<LobpcgSolution> {
    let k = m.dim();
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be positive".into()));
    }
    let x0 = match warm_start {
        Some(w) => {
            m.check_len(w.len())?;
            if !(norm(w) > 0.0) {
                return Err(Error::InvalidArgument("warm start must have nonzero norm".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; k],
    };

    let mut x = x0;
    let n = norm(&x);
    x.iter_mut().for_each(|v| *v /= n);
    let mut ax = m.mul_vec(&x)?;
    let mut lambda = dot(&x, &ax);
    let mut r: Vec<f64> = ax.iter().zip(&x).map(|(a, xi)| a - lambda * xi).collect();
    let mut p: Option<Vec<f64>> = None;
    let mut iterations = 0;

    loop {
        if norm(&r) <= tol {
            break;
        }
        if iterations == max_iters {
            let best = finish(m, x);
            return Err(Error::NoConvergence {
                iterations,
                best: Box::new(best),
            });
        }
        iterations += 1;

        let mut candidates = vec![r.clone()];
        if let Some(p) = &p {
            candidates.push(p.clone());
        }
        let passes = {
            let mut all: Vec<&[f64]> = vec![&x];
            all.extend(candidates.iter().map(|c| c.as_slice()));
            if gram_condition(&all) > REORTHO_CONDITION {
                2
            } else {
                1
            }
        };
        let mut basis = vec![x.clone()];
        orthonormalize(&mut basis, candidates, passes);

        let b = basis.len();
        if b == 1 {
            // residual direction collapsed into x; nothing left to improve
            break;
        }
        let a_basis: Vec<Vec<f64>> = basis.iter().map(|q| m.mul_vec(q)).collect::<Result<_>>()?;
        let h = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&basis[i], &a_basis[j]) + dot(&basis[j], &a_basis[i])));
        let eig = SymmetricEigen::new(h);
        let (idx, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty basis");
        let c: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();

        let mut new_x = vec![0.0; k];
        let mut new_p = vec![0.0; k];
        for (j, q) in basis.iter().enumerate() {
            for i in 0..k {
                new_x[i] += c[j] * q[i];
                if j > 0 {
                    new_p[i] += c[j] * q[i];
                }
            }
        }
        let nx = norm(&new_x);
        new_x.iter_mut().for_each(|v| *v /= nx);
        x = new_x;
        p = Some(new_p);
        ax = m.mul_vec(&x)?;
        lambda = dot(&x, &ax);
        r = ax.iter().zip(&x).map(|(a, xi)| a - lambda * xi).collect();
    }

    Ok(LobpcgSolution {
        pair: finish(m, x),
        iterations,
    })
}

//! Convex objectives over metric matrices and the graph Laplacian regularizer.
//!
//! The regularizer is `Q(M) = sum_{i,j} exp(-(f_i - f_j)^T M (f_i - f_j)) (z_i - z_j)^2`
//! taken over all ordered pairs, so every unordered pair counts twice.

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

/// Products cached per pair are capped at this many entries; larger problems
/// recompute distances from the difference vectors.
const PRODUCT_CACHE_LIMIT: usize = 1 << 24;

/// A convex differentiable function of the metric matrix.
///
/// Gradients treat the matrix as symmetric: the derivative with respect to an
/// off-diagonal entry moves `m[r][c]` and `m[c][r]` together.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, m: &SymmetricMatrix) -> Result<f64>;

    /// `dQ/dm_kk` for every `k`.
    fn grad_diag(&self, m: &SymmetricMatrix) -> Result<Vec<f64>>;

    /// `dQ/dm_{r,col}` for every `r != col`, in ascending `r`.
    fn grad_offdiag_col(&self, m: &SymmetricMatrix, col: usize) -> Result<Vec<f64>>;

    /// Restriction of the objective to the line `m + t * direction`.
    fn line<'a>(
        &'a self,
        m: &SymmetricMatrix,
        direction: &SymmetricMatrix,
    ) -> Result<Box<dyn LineRestriction + 'a>> {
        m.check_len(self.dim())?;
        direction.check_len(self.dim())?;
        Ok(Box::new(GenericLine {
            objective: self,
            base: m.clone(),
            direction: direction.clone(),
        }))
    }
}

/// `phi(t) = Q(M + t D)`.
pub trait LineRestriction {
    fn value(&self, t: f64) -> f64;

    /// `phi'(t)` when cheaply available.
    fn slope(&self, _t: f64) -> Option<f64> {
        None
    }
}

struct GenericLine<'a, O: ?Sized> {
    objective: &'a O,
    base: SymmetricMatrix,
    direction: SymmetricMatrix,
}

impl<O: Objective + ?Sized> LineRestriction for GenericLine<'_, O> {
    fn value(&self, t: f64) -> f64 {
        let k = self.base.dim();
        let m = SymmetricMatrix::from_fn(k, |i, j| self.base.get(i, j) + t * self.direction.get(i, j))
            .expect("dimension is positive");
        self.objective.value(&m).unwrap_or(f64::INFINITY)
    }
}

/// Features, labels and the per-pair data the regularizer needs.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    num_samples: usize,
    dim: usize,
    labels: Vec<f64>,
    /// `2 (z_i - z_j)^2` for each stored unordered pair.
    pair_weights: Vec<f64>,
    /// `f_i - f_j`, `dim` entries per stored pair.
    diffs: Vec<f64>,
    /// `d_a d_b` (doubled off the diagonal) in packed upper order, when cached.
    products: Option<Vec<f64>>,
}

impl ObjectiveContext {
    /// `features` holds one row per sample; `labels` one signal value per sample.
    pub fn new<R: AsRef<[f64]>>(features: &[R], labels: &[f64]) -> Result<Self> {
        let n = features.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if labels.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument("labels must be finite".into()));
        }
        let dim = features[0].as_ref().len();
        if dim == 0 {
            return Err(Error::InvalidArgument("samples must have at least one feature".into()));
        }
        for f in features {
            let f = f.as_ref();
            if f.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: f.len(),
                });
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("features must be finite".into()));
            }
        }

        let mut pair_weights = Vec::new();
        let mut diffs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let dz = labels[i] - labels[j];
                let w = dz * dz;
                if w == 0.0 {
                    continue;
                }
                pair_weights.push(2.0 * w);
                let (fi, fj) = (features[i].as_ref(), features[j].as_ref());
                diffs.extend(fi.iter().zip(fj).map(|(a, b)| a - b));
            }
        }

        let packed = dim * (dim + 1) / 2;
        let products = (pair_weights.len() * packed <= PRODUCT_CACHE_LIMIT).then(|| {
            let mut out = Vec::with_capacity(pair_weights.len() * packed);
            for d in diffs.chunks_exact(dim) {
                for a in 0..dim {
                    out.push(d[a] * d[a]);
                    for b in (a + 1)..dim {
                        out.push(2.0 * d[a] * d[b]);
                    }
                }
            }
            out
        });

        Ok(Self {
            num_samples: n,
            dim,
            labels: labels.to_vec(),
            pair_weights,
            diffs,
            products,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Number of unordered pairs with differing labels.
    pub fn num_active_pairs(&self) -> usize {
        self.pair_weights.len()
    }

    /// Feature distance of every stored pair under `m`.
    fn distances(&self, m: &SymmetricMatrix) -> Result<Vec<f64>> {
        m.check_len(self.dim)?;
        let packed = m.packed();
        Ok(match &self.products {
            Some(products) => products
                .chunks_exact(packed.len())
                .map(|p| p.iter().zip(packed).map(|(a, b)| a * b).sum())
                .collect(),
            None => self
                .diffs
                .chunks_exact(self.dim)
                .map(|d| m.quadratic_form(d).expect("length checked"))
                .collect(),
        })
    }

    /// `c_p exp(-delta_p)` for every stored pair.
    fn pair_terms(&self, m: &SymmetricMatrix) -> Result<Vec<f64>> {
        Ok(self
            .distances(m)?
            .into_iter()
            .zip(&self.pair_weights)
            .map(|(delta, c)| c * (-delta).exp())
            .collect())
    }

    fn check_col(&self, col: usize) -> Result<()> {
        if col >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: col,
                dim: self.dim,
            });
        }
        Ok(())
    }
}

impl Objective for ObjectiveContext {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, m: &SymmetricMatrix) -> Result<f64> {
        glr_value(self, m)
    }

    fn grad_diag(&self, m: &SymmetricMatrix) -> Result<Vec<f64>> {
        glr_grad_diag(self, m)
    }

    fn grad_offdiag_col(&self, m: &SymmetricMatrix, col: usize) -> Result<Vec<f64>> {
        glr_grad_offdiag_col(self, m, col)
    }

    fn line<'a>(
        &'a self,
        m: &SymmetricMatrix,
        direction: &SymmetricMatrix,
    ) -> Result<Box<dyn LineRestriction + 'a>> {
        let base = self.distances(m)?;
        let rate = self.distances(direction)?;
        Ok(Box::new(GlrLine {
            weights: &self.pair_weights,
            base,
            rate,
        }))
    }
}

/// `phi(t) = sum_p c_p exp(-a_p - t b_p)`; distances are linear in `M`.
struct GlrLine<'a> {
    weights: &'a [f64],
    base: Vec<f64>,
    rate: Vec<f64>,
}

impl LineRestriction for GlrLine<'_> {
    fn value(&self, t: f64) -> f64 {
        self.weights
            .iter()
            .zip(self.base.iter().zip(&self.rate))
            .map(|(c, (a, b))| c * (-a - t * b).exp())
            .sum()
    }

    fn slope(&self, t: f64) -> Option<f64> {
        Some(
            self.weights
                .iter()
                .zip(self.base.iter().zip(&self.rate))
                .map(|(c, (a, b))| -b * c * (-a - t * b).exp())
                .sum(),
        )
    }
}

/// Graph Laplacian regularizer `z^T L(M) z` over all ordered pairs.
pub fn glr_value(ctx: &ObjectiveContext, m: &SymmetricMatrix) -> Result<f64> {
    Ok(ctx.pair_terms(m)?.into_iter().sum())
}

pub fn glr_grad_diag(ctx: &ObjectiveContext, m: &SymmetricMatrix) -> Result<Vec<f64>> {
    let terms = ctx.pair_terms(m)?;
    let k = ctx.dim;
    let mut grad = vec![0.0; k];
    for (d, t) in ctx.diffs.chunks_exact(k).zip(&terms) {
        for (g, x) in grad.iter_mut().zip(d) {
            *g -= t * x * x;
        }
    }
    Ok(grad)
}

pub fn glr_grad_offdiag_col(ctx: &ObjectiveContext, m: &SymmetricMatrix, col: usize) -> Result<Vec<f64>> {
    ctx.check_col(col)?;
    let terms = ctx.pair_terms(m)?;
    let k = ctx.dim;
    let mut grad = vec![0.0; k];
    for (d, t) in ctx.diffs.chunks_exact(k).zip(&terms) {
        let dc = d[col];
        if dc == 0.0 {
            continue;
        }
        for (g, x) in grad.iter_mut().zip(d) {
            *g -= 2.0 * t * x * dc;
        }
    }
    grad.remove(col);
    Ok(grad)
}

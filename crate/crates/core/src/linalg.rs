//! Dense symmetric matrices, graph metric certification and Gershgorin disc
//! arithmetic.
//!
//! A *graph metric* is a positive definite generalized graph Laplacian: positive
//! diagonal, non-positive off-diagonal entries and a connected sparsity graph.
//! For such a matrix the first eigenvector is strictly positive, and the
//! diagonal similarity transform `S = diag(1/v)` moves every Gershgorin disc
//! left-end of `S M S^-1` onto `lambda_min`. The optimizer relies on that
//! alignment to turn the positive definite constraint into linear ones.

use std::collections::VecDeque;
use std::fmt;

use crate::eigen::{self, EigenPair};
use crate::error::{Error, Result};

/// Off-diagonal entries with magnitude at or below this value are not edges.
pub const CONNECTIVITY_EPS: f64 = 1e-12;

/// Default relative positive definite floor: `lambda_min > tol * trace / K`.
pub const DEFAULT_PD_TOL: f64 = 1e-10;

/// Relative tolerance on the eigenpair carried by a [`GraphMetric`].
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Dimension up to which validation uses the dense eigensolver.
const DENSE_VALIDATION_MAX_DIM: usize = 200;

/// Dense `K x K` symmetric matrix stored as a packed upper triangle.
#[derive(Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
        }
        Ok(Self {
            dim,
            upper: vec![0.0; dim * (dim + 1) / 2],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    /// Builds a matrix from the upper triangle produced by `f(i, j)`, `i <= j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        Ok(m)
    }

    /// Builds a matrix from full rows. The rows must be square and exactly
    /// symmetric.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for j in 0..i {
                if row[j] != rows[j].as_ref()[i] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
            for (j, &v) in row.iter().enumerate().skip(i) {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries of length `dim * dim`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let rows: Vec<&[f64]> = entries.chunks(dim).collect();
        Self::from_rows(&rows)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.index(i, j);
        self.upper[k] = value;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i)).collect()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.to_rows().concat()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect())
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += self.get(i, i) * x[i] * x[i];
            for j in (i + 1)..self.dim {
                acc += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            upper: self.upper.iter().map(|v| v * c).collect(),
        }
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Result<Self> {
        other.check_len(self.dim)?;
        Ok(Self {
            dim: self.dim,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        })
    }

    /// Packed upper triangle, row by row.
    pub(crate) fn packed(&self) -> &[f64] {
        &self.upper
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }

    /// Connected components of the graph with an edge wherever
    /// `|m[i][j]| > eps`, each listed in ascending node order.
    pub fn components(&self, eps: f64) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.dim];
        let mut out = Vec::new();
        for start in 0..self.dim {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for v in 0..self.dim {
                    if v != u && !seen[v] && self.get(u, v).abs() > eps {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self, eps: f64) -> bool {
        self.components(eps).len() == 1
    }
}

impl fmt::Debug for SymmetricMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricMatrix")
            .field("dim", &self.dim)
            .field("rows", &self.to_rows())
            .finish()
    }
}

/// A reason a matrix fails to be a graph metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveDiagonal { index: usize, value: f64 },
    PositiveOffDiagonal { row: usize, col: usize, value: f64 },
    Disconnected { components: usize },
    NotPositiveDefinite { lambda_min: f64 },
    /// The eigenpair offered as a certificate is inaccurate or not positive.
    InvalidCertificate(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveDiagonal { index, value } => {
                write!(f, "non-positive diagonal m[{index}][{index}] = {value}")
            }
            Violation::PositiveOffDiagonal { row, col, value } => {
                write!(f, "positive off-diagonal m[{row}][{col}] = {value}")
            }
            Violation::Disconnected { components } => {
                write!(f, "disconnected graph ({components} components)")
            }
            Violation::NotPositiveDefinite { lambda_min } => {
                write!(f, "not positive definite (lambda_min = {lambda_min})")
            }
            Violation::InvalidCertificate(msg) => write!(f, "invalid certificate: {msg}"),
        }
    }
}

/// Every condition a candidate matrix violated.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub violations: Vec<Violation>,
}

impl Rejection {
    pub fn is_disconnected(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::Disconnected { .. }))
    }

    pub fn is_not_positive_definite(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::NotPositiveDefinite { .. }))
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for Rejection {}

/// A symmetric matrix certified to be a graph metric, together with its
/// smallest eigenpair.
#[derive(Debug, Clone)]
pub struct GraphMetric {
    matrix: SymmetricMatrix,
    lambda_min: f64,
    eigvec: Vec<f64>,
}

impl GraphMetric {
    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Strictly positive, unit-norm first eigenvector.
    pub fn eigvec(&self) -> &[f64] {
        &self.eigvec
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn into_matrix(self) -> SymmetricMatrix {
        self.matrix
    }

    /// Certifies `matrix` using an eigenpair computed elsewhere. Rejects pairs
    /// that are inaccurate, not the smallest, or have a non-positive vector.
    /// The stored vector is recomputed so that even tiny entries are accurate.
    pub fn certify(
        matrix: SymmetricMatrix,
        pair: &EigenPair,
        pd_tol: f64,
    ) -> std::result::Result<Self, Rejection> {
        let mut violations = structural_violations(&matrix);
        let k = matrix.dim();
        let floor = pd_tol * matrix.trace() / k as f64;
        if !(pair.value > floor) {
            violations.push(Violation::NotPositiveDefinite {
                lambda_min: pair.value,
            });
        }

        let mut v = pair.vector.clone();
        if v.len() != k {
            violations.push(Violation::InvalidCertificate(format!(
                "eigenvector has length {}, expected {k}",
                v.len()
            )));
            return Err(Rejection { violations });
        }
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            violations.push(Violation::InvalidCertificate("zero eigenvector".into()));
            return Err(Rejection { violations });
        }
        v.iter_mut().for_each(|x| *x /= norm);

        // these only make sense to check once the structure is right
        if violations.is_empty() {
            let residual = eigen::residual_norm(&matrix, pair.value, &v);
            let scale = matrix.diagonal().iter().fold(1.0_f64, |a, d| a.max(d.abs()));
            if residual > CERTIFICATE_TOL * scale {
                violations.push(Violation::InvalidCertificate(format!(
                    "eigenpair residual {residual:e} exceeds {:e}",
                    CERTIFICATE_TOL * scale
                )));
            }
            // positive pivots in the refinement show lambda lies below the rest
            // of the spectrum, so a positive vector then certifies the smallest pair
            match refine_perron_vector(&matrix, pair.value, &v) {
                Some(w) if eigen::residual_norm(&matrix, pair.value, &w) <= residual.max(CERTIFICATE_TOL * scale) => {
                    v = w
                }
                _ => violations.push(Violation::InvalidCertificate(format!(
                    "eigenvalue {} is not the smallest one",
                    pair.value
                ))),
            }
            if let Some((i, &x)) = v
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .filter(|(_, &x)| x <= 0.0)
            {
                violations.push(Violation::InvalidCertificate(format!(
                    "first eigenvector entry {i} is {x}, expected strictly positive"
                )));
            }
        }

        if violations.is_empty() {
            Ok(Self {
                matrix,
                lambda_min: pair.value,
                eigvec: v,
            })
        } else {
            Err(Rejection { violations })
        }
    }
}

/// Recomputes the first eigenvector so that every entry, however small, has
/// a small relative error.
///
/// With `b` the largest entry of `v`, the other entries solve
/// `(M_SS - lambda I) v_S = |M_Sb| v_b`. That matrix is a nonsingular
/// M-matrix when `lambda` is the smallest eigenvalue of an irreducible graph
/// metric, so elimination without pivoting only combines right-hand side and
/// off-diagonal terms of one sign. Returns `None` if a pivot is not positive
/// or the result is not strictly positive.
fn refine_perron_vector(m: &SymmetricMatrix, lambda: f64, v: &[f64]) -> Option<Vec<f64>> {
    let k = m.dim();
    let b = (0..k).max_by(|&i, &j| v[i].total_cmp(&v[j]))?;
    let idx: Vec<usize> = (0..k).filter(|&i| i != b).collect();
    let n = idx.len();
    let mut a: Vec<f64> = Vec::with_capacity(n * n);
    for &r in &idx {
        for &c in &idx {
            a.push(if r == c { m.get(r, r) - lambda } else { m.get(r, c) });
        }
    }
    let mut rhs: Vec<f64> = idx.iter().map(|&r| -m.get(r, b)).collect();
    for p in 0..n {
        let piv = a[p * n + p];
        if !(piv > 0.0) {
            return None;
        }
        for r in p + 1..n {
            let f = a[r * n + p] / piv;
            if f == 0.0 {
                continue;
            }
            for c in p + 1..n {
                a[r * n + c] -= f * a[p * n + c];
            }
            rhs[r] -= f * rhs[p];
        }
    }
    let mut x = vec![0.0; n];
    for p in (0..n).rev() {
        let tail: f64 = (p + 1..n).map(|c| a[p * n + c] * x[c]).sum();
        x[p] = (rhs[p] - tail) / a[p * n + p];
    }
    let mut w = vec![1.0; k];
    for (p, &i) in idx.iter().enumerate() {
        w[i] = x[p];
    }
    if !w.iter().all(|&x| x > 0.0 && x.is_finite()) {
        return None;
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    Some(w)
}

fn structural_violations(m: &SymmetricMatrix) -> Vec<Violation> {
    let k = m.dim();
    let mut out = Vec::new();
    for i in 0..k {
        let d = m.get(i, i);
        if !(d > 0.0) {
            out.push(Violation::NonPositiveDiagonal { index: i, value: d });
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let v = m.get(i, j);
            if v > 0.0 {
                out.push(Violation::PositiveOffDiagonal {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    let comps = m.components(CONNECTIVITY_EPS).len();
    if comps > 1 {
        out.push(Violation::Disconnected { components: comps });
    }
    out
}

/// Checks every graph metric condition and certifies `m` when all hold.
///
/// `tol` is the relative positive definite floor: the smallest eigenvalue
/// must exceed `tol * trace(m) / K`.
pub fn validate_graph_metric(m: &SymmetricMatrix, tol: f64) -> Result<GraphMetric> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {tol}")));
    }
    let pair = if m.dim() <= DENSE_VALIDATION_MAX_DIM {
        eigen::smallest_eigenpair_dense(m)?
    } else {
        match eigen::smallest_eigenpair_lobpcg(m, None, eigen::DEFAULT_TOL, eigen::DEFAULT_MAX_ITERS) {
            Ok(sol) => sol.pair,
            Err(Error::NoConvergence { best, .. }) => *best,
            Err(e) => return Err(e),
        }
    };
    GraphMetric::certify(m.clone(), &pair, tol).map_err(Error::Rejected)
}

/// Positive scalars `s_1..s_K` defining `S = diag(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GershgorinScalars(Vec<f64>);

impl GershgorinScalars {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("scalars must be non-empty".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "scalar s[{i}] = {v} is not strictly positive and finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn ones(dim: usize) -> Self {
        Self(vec![1.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `s_i / s_j`, the factor applied to `|m_ij|` in row `i`'s radius.
    #[inline]
    pub fn ratio(&self, i: usize, j: usize) -> f64 {
        self.0[i] / self.0[j]
    }
}

/// `m_ii - sum_{j != i} |m_ij|` for every row.
pub fn gershgorin_left_ends(m: &SymmetricMatrix) -> Vec<f64> {
    let k = m.dim();
    (0..k)
        .map(|i| {
            let radius: f64 = (0..k).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
            m.get(i, i) - radius
        })
        .collect()
}

/// Disc left-ends of `S M S^-1`: `m_ii - s_i * sum_{j != i} |m_ij| / s_j`.
pub fn scaled_left_ends(m: &SymmetricMatrix, s: &GershgorinScalars) -> Result<Vec<f64>> {
    m.check_len(s.len())?;
    let k = m.dim();
    Ok((0..k)
        .map(|i| m.get(i, i) - scaled_radius(m, s, i, None))
        .collect())
}

/// `s_i * sum_{j != i, j != skip} |m_ij| / s_j`.
pub(crate) fn scaled_radius(
    m: &SymmetricMatrix,
    s: &GershgorinScalars,
    i: usize,
    skip: Option<usize>,
) -> f64 {
    (0..m.dim())
        .filter(|&j| j != i && Some(j) != skip)
        .map(|j| m.get(i, j).abs() * s.ratio(i, j))
        .sum()
}

/// Scalars `s_k = 1 / v_k` from the certified first eigenvector.
pub fn alignment_scalars(g: &GraphMetric) -> Result<GershgorinScalars> {
    scalars_from_eigvec(g.eigvec())
}

pub(crate) fn scalars_from_eigvec(v: &[f64]) -> Result<GershgorinScalars> {
    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
        return Err(Error::Certification(format!(
            "first eigenvector entry {i} is {x}; a graph metric has a strictly positive one"
        )));
    }
    GershgorinScalars::new(v.iter().map(|x| 1.0 / x).collect())
}

/// Edge weight `exp(-delta)` for a feature distance `delta >= 0`.
pub fn edge_weight(delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "feature distance must be non-negative, got {delta}"
        )));
    }
    Ok((-delta).exp())
}

/// Mahalanobis feature distance `(f_i - f_j)^T M (f_i - f_j)`.
pub fn mahalanobis(fi: &[f64], fj: &[f64], m: &SymmetricMatrix) -> Result<f64> {
    if fi.len() != fj.len() {
        return Err(Error::DimensionMismatch {
            expected: fi.len(),
            found: fj.len(),
        });
    }
    let diff: Vec<f64> = fi.iter().zip(fj).map(|(a, b)| a - b).collect();
    m.quadratic_form(&diff)
}

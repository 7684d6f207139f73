//! Dense symmetric linear algebra.
//!
//! Matrices here are small (d up to a few dozen), so everything is plain
//! row-major `Vec<f64>` storage and cyclic Jacobi for eigenproblems. Besides
//! the decomposition itself this module hosts the numerical checkers for the
//! perturbation and concentration bounds (Weyl, Davis-Kahan, matrix Azuma)
//! and the trust-region norm maximizer used when refining norm estimates.

use crate::error::{invalid, Error, Result};

/// Tolerance on `|m_ij - m_ji|` (relative to the largest entry) accepted when
/// building a [`SymMatrix`] from raw data.
pub const SYMMETRY_TOL: f64 = 1e-9;

const JACOBI_REL_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const PD_FLOOR: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a + k * b`
pub fn axpy(a: &[f64], k: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + k * y).collect()
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|x| x * k).collect()
}

/// Standard basis vector `e_i` in `dim` dimensions.
pub fn basis(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn check_dim(v: &[f64], dim: usize) -> Result<()> {
    if v.len() == dim {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        })
    }
}

/// Real symmetric matrix with row-major storage.
///
/// All constructors and mutators keep `m[i][j] == m[j][i]` bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix dimension must be >= 1");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds from row-major data, validating finiteness and symmetry. Entries
    /// within tolerance of symmetric are averaged so the stored matrix is
    /// exactly symmetric.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("matrix dimension must be >= 1"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        check_finite(&data, "matrix entries")?;
        let scale = data.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
        let mut worst = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                worst = worst.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if worst > SYMMETRY_TOL * scale {
            return Err(Error::Asymmetric(worst));
        }
        let mut m = Self { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (m.data[i * dim + j] + m.data[j * dim + i]);
                m.data[i * dim + j] = avg;
                m.data[j * dim + i] = avg;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("matrix rows must all have length equal to the row count"));
        }
        Self::from_row_major(dim, rows.concat())
    }

    /// `sum_k w_k * v_k v_k^T` for the given vectors and weights.
    pub fn from_outer_sum<'a, I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (f64, &'a [f64])>,
    {
        let mut m = Self::zeros(dim);
        for (w, v) in terms {
            m.add_outer(v, w);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), x)).collect()
    }

    /// `x^T M x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// `M += w * x x^T`
    pub fn add_outer(&mut self, x: &[f64], w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        for i in 0..d {
            for j in i..d {
                let v = self.data[i * d + j] + w * (x[i] * x[j]);
                self.data[i * d + j] = v;
                self.data[j * d + i] = v;
            }
        }
    }

    pub fn add_scaled_identity(&mut self, value: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += value;
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scaled(&self, k: f64) -> SymMatrix {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    /// Dense product `self * other`; the result is generally not symmetric.
    pub fn matmul(&self, other: &SymMatrix) -> Result<Vec<f64>> {
        self.same_dim(other)?;
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        Ok(out)
    }

    /// `self * inner * self`, symmetric for symmetric `self` and `inner`.
    pub fn congruence(&self, inner: &SymMatrix) -> Result<SymMatrix> {
        let left = self.matmul(inner)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in i..d {
                let v = (0..d).map(|k| left[i * d + k] * self.data[k * d + j]).sum();
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        eig_sym(self)
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.eig()?.lambda_min())
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(self.eig()?.lambda_max())
    }

    /// Spectral norm `max |lambda_i|`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let e = self.eig()?;
        Ok(e.lambda_max().abs().max(e.lambda_min().abs()))
    }

    /// Inverse of a positive-definite matrix.
    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        let e = self.eig()?;
        e.require_pd()?;
        Ok(e.map_spectrum(|l| 1.0 / l))
    }

    fn same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            })
        }
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Eigenvector of the smallest eigenvalue.
    pub fn bottom_vector(&self) -> &[f64] {
        self.eigenvectors.last().expect("non-empty spectrum")
    }

    pub fn top_vector(&self) -> &[f64] {
        &self.eigenvectors[0]
    }

    /// `sum_i f(lambda_i) u_i u_i^T`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        SymMatrix::from_outer_sum(
            self.dim(),
            self.eigenvalues
                .iter()
                .zip(&self.eigenvectors)
                .map(|(&l, u)| (f(l), u.as_slice())),
        )
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map_spectrum(|l| l)
    }

    pub(crate) fn require_pd(&self) -> Result<()> {
        let scale = self.lambda_max().abs().max(1.0);
        let lmin = self.lambda_min();
        if lmin > PD_FLOOR * scale {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite(lmin))
        }
    }
}

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-12 * ||M||_F`. Eigenvalues are returned in non-increasing order and
/// each eigenvector has its first non-negligible coordinate positive.
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix entries"));
    }
    let n = m.dim;
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let total = m.frobenius_norm();

    if total > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a[i * n + j] * a[i * n + j];
                    }
                }
            }
            if off.sqrt() < JACOBI_REL_TOL * total {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps sweep order for exact ties.
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));

    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&col| {
            let mut u: Vec<f64> = (0..n).map(|k| v[k * n + col]).collect();
            if let Some(first) = u.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    u.iter_mut().for_each(|x| *x = -*x);
                }
            }
            u
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone)]
pub struct WeylReport {
    pub holds: bool,
    /// `lambda_i(A) + lambda_max(H) - lambda_i(A + H)` for each index.
    pub slack_per_index: Vec<f64>,
}

/// Numerically checks `lambda_i(A + H) <= lambda_i(A) + lambda_max(H)`.
pub fn weyl_check(a: &SymMatrix, h: &SymMatrix) -> Result<WeylReport> {
    let sum = a.add(h)?;
    let ea = a.eig()?;
    let hmax = h.lambda_max()?;
    let es = sum.eig()?;
    let slack: Vec<f64> = ea
        .eigenvalues
        .iter()
        .zip(&es.eigenvalues)
        .map(|(la, ls)| la + hmax - ls)
        .collect();
    Ok(WeylReport {
        holds: slack.iter().all(|&s| s >= -1e-9),
        slack_per_index: slack,
    })
}

#[derive(Debug, Clone)]
pub struct DavisKahanReport {
    /// `||H|| / delta`
    pub bound: f64,
    /// `|| u_1(A)^T [u_2(A+H) ... u_d(A+H)] ||_2`
    pub alignment: f64,
    /// `lambda_1(A) - lambda_2(A + H)`
    pub separation: f64,
    pub holds: bool,
}

/// Checks the sin-theta bound between the top eigenvector of `A` and the
/// trailing eigenspace of `A + H`.
pub fn davis_kahan_check(a: &SymMatrix, h: &SymMatrix) -> Result<DavisKahanReport> {
    let sum = a.add(h)?;
    let ea = a.eig()?;
    let es = sum.eig()?;
    let hnorm = h.spectral_norm()?;
    if a.dim() == 1 {
        return Ok(DavisKahanReport {
            bound: 0.0,
            alignment: 0.0,
            separation: f64::INFINITY,
            holds: true,
        });
    }
    let separation = ea.lambda_max() - es.eigenvalues[1];
    if separation <= 0.0 {
        return Err(Error::NoSeparation(separation));
    }
    let u1 = ea.top_vector();
    let alignment = es.eigenvectors[1..]
        .iter()
        .map(|u| dot(u1, u).powi(2))
        .sum::<f64>()
        .sqrt();
    let bound = hnorm / separation;
    Ok(DavisKahanReport {
        bound,
        alignment,
        separation,
        holds: alignment <= bound + 1e-9,
    })
}

/// Matrix-Azuma tail `d * exp(-t^2 / (8 sigma^2))` for
/// `P(lambda_min(sum of martingale differences) <= -t)`. Not clamped to 1.
pub fn matrix_azuma_tail(t: f64, sigma_sq: f64, d: usize) -> Result<f64> {
    if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
        return Err(invalid(format!("sigma_sq must be positive, got {sigma_sq}")));
    }
    if !(t >= 0.0) {
        return Err(invalid(format!("t must be non-negative, got {t}")));
    }
    if d == 0 {
        return Err(invalid("d must be >= 1"));
    }
    Ok(d as f64 * (-t * t / (8.0 * sigma_sq)).exp())
}

#[derive(Debug, Clone)]
pub struct TrustRegionSolution {
    pub maximizer: Vec<f64>,
    pub max_norm: f64,
}

/// Global maximizer of `||theta||` over `{theta : ||theta - center||_shape <= radius}`.
///
/// Works in the eigenbasis of `shape`: stationarity gives
/// `y_i = c_i / (mu s_i - 1)` with `mu >= 1 / s_min`, and `mu` is the root of
/// the secular equation `sum_i s_i c_i^2 / (mu s_i - 1)^2 = radius^2`.
/// When the center has no component on the bottom eigenspace and the secular
/// function at `mu = 1/s_min` is already below `radius^2` (the hard case),
/// the remaining budget is spent along that eigenspace. Within a degenerate
/// bottom eigenspace the direction is the normalized projection of the first
/// standard basis vector that projects non-trivially.
pub fn trust_region_max_norm(center: &[f64], shape: &SymMatrix, radius: f64) -> Result<TrustRegionSolution> {
    let d = shape.dim();
    check_dim(center, d)?;
    check_finite(center, "trust-region center")?;
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(invalid(format!("radius must be finite and >= 0, got {radius}")));
    }
    let e = shape.eig()?;
    e.require_pd()?;
    if radius == 0.0 {
        return Ok(TrustRegionSolution {
            maximizer: center.to_vec(),
            max_norm: norm(center),
        });
    }

    let s = &e.eigenvalues;
    let s_min = e.lambda_min();
    let c: Vec<f64> = e.eigenvectors.iter().map(|u| dot(u, center)).collect();
    let scale = norm(center) + radius / s_min.sqrt();
    let bottom: Vec<usize> = (0..d).filter(|&i| s[i] <= s_min * (1.0 + 1e-10)).collect();
    let bottom_weight = bottom.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt();

    let secular = |mu: f64, skip_bottom: bool| -> f64 {
        (0..d)
            .filter(|&i| !(skip_bottom && bottom.contains(&i)) && c[i] != 0.0)
            .map(|i| {
                let den = mu * s[i] - 1.0;
                s[i] * c[i] * c[i] / (den * den)
            })
            .sum()
    };

    let r2 = radius * radius;
    let mu0 = 1.0 / s_min;
    let mut y = vec![0.0; d];

    let hard = bottom_weight <= 1e-14 * scale.max(1e-300) && secular(mu0, true) <= r2;
    if hard {
        for i in 0..d {
            if !bottom.contains(&i) {
                y[i] = c[i] / (mu0 * s[i] - 1.0);
            }
        }
        let used: f64 = (0..d).map(|i| s[i] * y[i] * y[i]).sum();
        let rest = ((r2 - used).max(0.0) / s_min).sqrt();
        let dir = bottom_direction(&e, &bottom);
        // `dir` is in original coordinates; express it in the eigenbasis.
        for &i in &bottom {
            y[i] += rest * dot(&e.eigenvectors[i], &dir);
        }
    } else {
        // Secular function is decreasing on (mu0, inf); bracket then bisect.
        let mut lo = mu0;
        let mut hi = mu0 * 2.0;
        while secular(hi, false) > r2 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if secular(mid, false) > r2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        for i in 0..d {
            y[i] = c[i] / (mu * s[i] - 1.0);
        }
    }

    // Put the step exactly on the boundary.
    let q: f64 = (0..d).map(|i| s[i] * y[i] * y[i]).sum();
    if q > 0.0 {
        let k = radius / q.sqrt();
        y.iter_mut().for_each(|v| *v *= k);
    }

    let mut maximizer = center.to_vec();
    for (yi, u) in y.iter().zip(&e.eigenvectors) {
        for (m, uk) in maximizer.iter_mut().zip(u) {
            *m += yi * uk;
        }
    }
    let max_norm = norm(&maximizer);
    Ok(TrustRegionSolution { maximizer, max_norm })
}

/// Deterministic unit vector in the span of the given eigenvectors.
fn bottom_direction(e: &EigenDecomposition, bottom: &[usize]) -> Vec<f64> {
    let d = e.dim();
    for k in 0..d {
        let mut p = vec![0.0; d];
        for &i in bottom {
            let w = e.eigenvectors[i][k];
            for (pj, uj) in p.iter_mut().zip(&e.eigenvectors[i]) {
                *pj += w * uj;
            }
        }
        let n = norm(&p);
        if n > 1e-8 {
            return scale(&p, 1.0 / n);
        }
    }
    e.eigenvectors[bottom[0]].clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn diagonal_eigs() {
        let e = eig_sym(&SymMatrix::from_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(e.eigenvectors[0], vec![0.0, 1.0]);
        assert_eq!(e.eigenvectors[1], vec![1.0, 0.0]);
    }

    #[test]
    fn two_by_two_eigs() {
        let m = SymMatrix::from_rows(&[vec![10.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = eig_sym(&m).unwrap();
        let r = 104f64.sqrt();
        assert!(close(e.eigenvalues[0], (10.0 + r) / 2.0, 1e-12));
        assert!(close(e.eigenvalues[1], (10.0 - r) / 2.0, 1e-12));
        assert!(e.eigenvectors[0][0] > 0.0 && e.eigenvectors[1][0] > 0.0);
    }

    #[test]
    fn identity_eigs() {
        let e = eig_sym(&SymMatrix::identity(4)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| l == 1.0));
        for (i, u) in e.eigenvectors.iter().enumerate() {
            assert_eq!(u, &basis(4, i));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]),
            Err(Error::Asymmetric(_))
        ));
        assert!(matches!(
            SymMatrix::from_rows(&[vec![1.0, f64::NAN], vec![f64::NAN, 1.0]]),
            Err(Error::NonFinite(_))
        ));
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0 + 1e-12], vec![2.0, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn weyl_examples() {
        let r = weyl_check(&SymMatrix::from_diag(&[5.0, 2.0]), &SymMatrix::zeros(2)).unwrap();
        assert!(r.holds);
        assert!(r.slack_per_index.iter().all(|s| s.abs() < 1e-12));

        let h = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = weyl_check(&SymMatrix::from_diag(&[10.0, 0.0]), &h).unwrap();
        assert!(r.holds);
        let lam2 = (10.0 - 104f64.sqrt()) / 2.0;
        assert!(close(r.slack_per_index[1], 1.0 - lam2, 1e-12));
        assert!(close(r.slack_per_index[1], 1.09902, 1e-5));

        let i2 = SymMatrix::identity(2);
        let r = weyl_check(&i2, &i2).unwrap();
        assert!(r.holds && r.slack_per_index.iter().all(|s| s.abs() < 1e-12));

        assert!(weyl_check(&i2, &SymMatrix::identity(3)).is_err());
    }

    #[test]
    fn davis_kahan_examples() {
        let h = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = davis_kahan_check(&SymMatrix::from_diag(&[10.0, 0.0]), &h).unwrap();
        let lam1 = (10.0 + 104f64.sqrt()) / 2.0;
        // closed-form trailing eigenvector of [[10,1],[1,0]] is (1, -lam1) normalized
        let expected_alignment = 1.0 / (1.0 + lam1 * lam1).sqrt();
        assert!(close(r.bound, 1.0 / lam1, 1e-12));
        assert!(close(r.bound, 0.09902, 1e-5));
        assert!(close(r.alignment, expected_alignment, 1e-12));
        assert!(close(r.alignment, 0.09853, 1e-5));
        assert!(r.holds);

        let r = davis_kahan_check(&SymMatrix::from_diag(&[3.0, 1.0]), &SymMatrix::zeros(2)).unwrap();
        assert!(r.holds && r.bound == 0.0 && r.alignment < 1e-15);

        let mut a = SymMatrix::zeros(2);
        a.add_outer(&[1.0, 0.0], 100.0);
        let r = davis_kahan_check(&a, &SymMatrix::from_diag(&[0.0, 5.0])).unwrap();
        assert!(close(r.bound, 5.0 / 95.0, 1e-12));
        assert!(r.alignment < 1e-15 && r.holds);

        let err = davis_kahan_check(&SymMatrix::identity(2), &SymMatrix::zeros(2));
        assert!(matches!(err, Err(Error::NoSeparation(_))));
    }

    #[test]
    fn azuma_examples() {
        assert_eq!(matrix_azuma_tail(0.0, 1.0, 3).unwrap(), 3.0);
        assert!(close(
            matrix_azuma_tail(4.0, 1.0, 2).unwrap(),
            2.0 * (-2.0f64).exp(),
            1e-15
        ));
        assert!(close(matrix_azuma_tail(4.0, 1.0, 2).unwrap(), 0.27067, 1e-5));
        assert!(matrix_azuma_tail(1e6, 1.0, 5).unwrap() < 1e-300);
        assert!(matrix_azuma_tail(1.0, 0.0, 2).is_err());
    }

    #[test]
    fn trust_region_isotropic() {
        let r = trust_region_max_norm(&[3.0, 4.0], &SymMatrix::identity(2), 1.0).unwrap();
        assert!(close(r.max_norm, 6.0, 1e-10));
        assert!(close(r.maximizer[0], 3.6, 1e-10) && close(r.maximizer[1], 4.8, 1e-10));
    }

    #[test]
    fn trust_region_anisotropic_hard_case() {
        let shape = SymMatrix::from_diag(&[4.0, 1.0]);
        let r = trust_region_max_norm(&[1.0, 0.0], &shape, 2.0).unwrap();
        assert!(close(r.max_norm, (16.0f64 / 3.0).sqrt(), 1e-10));
        assert!(close(r.maximizer[0], 4.0 / 3.0, 1e-10));
        assert!(close(r.maximizer[1].abs(), 4.0 * 2f64.sqrt() / 3.0, 1e-10));

        let r = trust_region_max_norm(&[0.0, 0.0], &shape, 2.0).unwrap();
        assert!(close(r.max_norm, 2.0, 1e-12));
        assert!(close(r.maximizer[1], 2.0, 1e-12) && r.maximizer[0].abs() < 1e-12);
    }

    #[test]
    fn trust_region_degenerate_bottom_space_prefers_e1() {
        let r = trust_region_max_norm(&[0.0, 0.0, 0.0], &SymMatrix::identity(3), 0.5).unwrap();
        assert!(close(r.maximizer[0], 0.5, 1e-12));
    }

    #[test]
    fn trust_region_rejects_indefinite() {
        let shape = SymMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            trust_region_max_norm(&[1.0, 0.0], &shape, 1.0),
            Err(Error::NotPositiveDefinite(_))
        ));
    }
}

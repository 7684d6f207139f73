//! Action-set geometries.
//!
//! Every geometry exposes an exact linear maximizer, a UCB maximizer over a
//! confidence ellipsoid, surface sampling, and residual checks. The module
//! also carries the sphere perturbation geometry (cap angles, step size) and
//! the local quadratic (completed-square) ellipsoid of a smooth surface.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, check_dim, check_finite, dot, norm, SymMatrix};

/// Tolerance for "x lies on the action space".
pub const ON_SPACE_TOL: f64 = 1e-8;

const MEMBERSHIP_SLACK: f64 = 1e-12;
const ALTERNATING_TOL: f64 = 1e-8;
const ALTERNATING_MAX_ITERS: usize = 10_000;
const ALTERNATING_SEED: u64 = 0x5eed_ba11;

/// Surface `{x : (x - center)^T A^{-1} (x - center) = level}`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    shape: SymMatrix,
    level: f64,
    center: Vec<f64>,
    shape_sqrt: SymMatrix,
    shape_inv_sqrt: SymMatrix,
    shape_inv: SymMatrix,
}

impl Ellipsoid {
    pub fn new(shape: SymMatrix, level: f64, center: Vec<f64>) -> Result<Self> {
        if !(level > 0.0) || !level.is_finite() {
            return Err(invalid(format!("ellipsoid level must be > 0, got {level}")));
        }
        check_dim(&center, shape.dim())?;
        check_finite(&center, "ellipsoid center")?;
        let e = shape.eig()?;
        e.require_pd()?;
        Ok(Self {
            shape_sqrt: e.map_spectrum(f64::sqrt),
            shape_inv_sqrt: e.map_spectrum(|l| 1.0 / l.sqrt()),
            shape_inv: e.map_spectrum(|l| 1.0 / l),
            shape,
            level,
            center,
        })
    }

    pub fn shape(&self) -> &SymMatrix {
        &self.shape
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// `(x - a)^T A^{-1} (x - a)`
    pub fn form(&self, x: &[f64]) -> f64 {
        self.shape_inv.quad_form(&linalg::sub(x, &self.center))
    }

    /// Maps a unit vector `u` to the surface point `a + sqrt(c) A^{1/2} u`.
    fn surface_point(&self, u: &[f64]) -> Vec<f64> {
        linalg::axpy(&self.center, self.level.sqrt(), &self.shape_sqrt.mul_vec(u))
    }

    fn is_centered(&self) -> bool {
        self.center.iter().all(|&v| v == 0.0)
    }
}

/// A playable action set.
#[derive(Debug, Clone)]
pub enum ActionSpace {
    UnitSphere {
        dim: usize,
    },
    Ellipsoid(Ellipsoid),
    /// `{x : ||x||_p <= radius}`; maximizers live on the boundary.
    PNormBall {
        dim: usize,
        p: f64,
        radius: f64,
    },
    FiniteSet {
        points: Vec<Vec<f64>>,
    },
}

impl ActionSpace {
    pub fn unit_sphere(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("sphere dimension must be >= 1"));
        }
        Ok(Self::UnitSphere { dim })
    }

    pub fn ellipsoid(shape: SymMatrix, level: f64, center: Vec<f64>) -> Result<Self> {
        Ok(Self::Ellipsoid(Ellipsoid::new(shape, level, center)?))
    }

    pub fn pnorm_ball(dim: usize, p: f64, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("p-norm ball dimension must be >= 1"));
        }
        if !(p >= 2.0) || !p.is_finite() {
            return Err(invalid(format!("p-norm ball needs finite p >= 2, got {p}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("p-norm ball radius must be > 0, got {radius}")));
        }
        Ok(Self::PNormBall { dim, p, radius })
    }

    pub fn finite_set(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| invalid("finite action set must be non-empty"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(invalid("finite action set points must have dimension >= 1"));
        }
        for p in &points {
            check_dim(p, dim)?;
            check_finite(p, "finite action set point")?;
        }
        Ok(Self::FiniteSet { points })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UnitSphere { dim } | Self::PNormBall { dim, .. } => *dim,
            Self::Ellipsoid(e) => e.center.len(),
            Self::FiniteSet { points } => points[0].len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::UnitSphere { .. } => "sphere",
            Self::Ellipsoid(_) => "ellipsoid",
            Self::PNormBall { .. } => "pnorm_ball",
            Self::FiniteSet { .. } => "finite",
        }
    }

    /// Constraint violation of `x` (0 when exactly on the space).
    pub fn residual(&self, x: &[f64]) -> f64 {
        match self {
            Self::UnitSphere { .. } => (norm(x) - 1.0).abs(),
            Self::Ellipsoid(e) => ((e.form(x) / e.level).sqrt() - 1.0).abs(),
            Self::PNormBall { p, radius, .. } => (pnorm(x, *p) / radius - 1.0).max(0.0),
            Self::FiniteSet { points } => points
                .iter()
                .map(|q| norm(&linalg::sub(x, q)))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `argmax_{x in space} <x, theta>`. Finite sets break ties by lowest index.
    pub fn linear_argmax(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(theta, self.dim())?;
        check_finite(theta, "theta")?;
        if norm(theta) == 0.0 {
            return Err(Error::ZeroDirection);
        }
        Ok(match self {
            Self::UnitSphere { .. } => linalg::scale(theta, 1.0 / norm(theta)),
            Self::Ellipsoid(e) => {
                let a_theta = e.shape.mul_vec(theta);
                let a_norm = dot(theta, &a_theta).sqrt();
                linalg::axpy(&e.center, e.level.sqrt() / a_norm, &a_theta)
            }
            Self::PNormBall { p, radius, .. } => {
                // Hoelder duality with q = p / (p - 1).
                let q = p / (p - 1.0);
                let qn = pnorm(theta, q);
                theta
                    .iter()
                    .map(|&t| radius * t.signum() * (t.abs() / qn).powf(q - 1.0))
                    .collect()
            }
            Self::FiniteSet { points } => {
                let mut best = 0;
                let mut best_val = dot(&points[0], theta);
                for (i, pt) in points.iter().enumerate().skip(1) {
                    let v = dot(pt, theta);
                    if v > best_val {
                        best = i;
                        best_val = v;
                    }
                }
                points[best].clone()
            }
        })
    }

    /// `sup_{x in space} <x, theta>`, computed in closed form where available.
    pub fn opt_value(&self, theta: &[f64]) -> Result<f64> {
        match self {
            Self::UnitSphere { .. } => {
                check_dim(theta, self.dim())?;
                Ok(norm(theta))
            }
            Self::Ellipsoid(e) => {
                check_dim(theta, self.dim())?;
                Ok(dot(&e.center, theta) + e.level.sqrt() * e.shape.quad_form(theta).sqrt())
            }
            Self::PNormBall { p, radius, .. } => {
                check_dim(theta, self.dim())?;
                Ok(radius * pnorm(theta, p / (p - 1.0)))
            }
            Self::FiniteSet { .. } => Ok(dot(&self.linear_argmax(theta)?, theta)),
        }
    }

    pub fn eps_neighborhood(&self, theta: &[f64], eps: f64) -> Result<EpsNeighborhood> {
        if !(eps >= 0.0) {
            return Err(invalid(format!("eps must be >= 0, got {eps}")));
        }
        let opt_value = if norm(theta) == 0.0 {
            check_dim(theta, self.dim())?;
            0.0
        } else {
            self.opt_value(theta)?
        };
        Ok(EpsNeighborhood {
            theta: theta.to_vec(),
            eps,
            opt_value,
        })
    }

    /// Membership of `x` in `OPT_eps(theta) = {x : <x, theta> >= sup <., theta> - eps}`.
    pub fn eps_optimal_contains(&self, theta: &[f64], eps: f64, x: &[f64]) -> Result<bool> {
        self.eps_neighborhood(theta, eps)?.contains(self, x)
    }

    /// `argmax_x max_{||theta - center||_shape <= radius} <x, theta>`.
    ///
    /// Sphere and centered ellipsoid are exact through the trust-region norm
    /// maximizer; a finite set scores each arm exactly. The p-norm ball and
    /// off-center ellipsoids use alternating ascent from several seeds and are
    /// approximate (a local optimum of a non-concave problem).
    pub fn ucb_argmax(&self, center: &[f64], shape: &SymMatrix, radius: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        check_dim(center, d)?;
        check_finite(center, "ucb center")?;
        if shape.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: shape.dim(),
            });
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(invalid(format!("radius must be finite and >= 0, got {radius}")));
        }
        let e = shape.eig()?;
        e.require_pd()?;
        match self {
            Self::UnitSphere { .. } => {
                let tr = linalg::trust_region_max_norm(center, shape, radius)?;
                if tr.max_norm == 0.0 {
                    Ok(linalg::basis(d, 0))
                } else {
                    Ok(linalg::scale(&tr.maximizer, 1.0 / tr.max_norm))
                }
            }
            Self::Ellipsoid(el) if el.is_centered() => {
                // Whitening: x = sqrt(c) B u with B = A^{1/2}, so
                // max_x <x, theta> = sqrt(c) ||B theta||; maximize ||phi||
                // over the image ellipsoid phi = B theta.
                let b = &el.shape_sqrt;
                let bi = &el.shape_inv_sqrt;
                let whitened = bi.congruence(shape)?;
                let tr = linalg::trust_region_max_norm(&b.mul_vec(center), &whitened, radius)?;
                let u = if tr.max_norm == 0.0 {
                    linalg::basis(d, 0)
                } else {
                    linalg::scale(&tr.maximizer, 1.0 / tr.max_norm)
                };
                Ok(el.surface_point(&u))
            }
            Self::FiniteSet { points } => {
                let shape_inv = e.map_spectrum(|l| 1.0 / l);
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (i, x) in points.iter().enumerate() {
                    let v = ucb_value(x, center, &shape_inv, radius);
                    if v > best_val {
                        best = i;
                        best_val = v;
                    }
                }
                Ok(points[best].clone())
            }
            Self::Ellipsoid(_) | Self::PNormBall { .. } => {
                let shape_inv = e.map_spectrum(|l| 1.0 / l);
                self.alternating_ucb(center, &shape_inv, radius)
            }
        }
    }

    fn alternating_ucb(&self, center: &[f64], shape_inv: &SymMatrix, radius: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut seeds = Vec::with_capacity(4);
        if norm(center) > 0.0 {
            seeds.push(self.linear_argmax(center)?);
            seeds.push(self.linear_argmax(&linalg::scale(center, -1.0))?);
        }
        seeds.push(self.linear_argmax(&linalg::basis(d, 0))?);
        let mut rng = ChaCha8Rng::seed_from_u64(ALTERNATING_SEED);
        seeds.push(self.sample_uniform(&mut rng));

        let mut best: Option<(f64, Vec<f64>)> = None;
        for mut x in seeds {
            let mut val = ucb_value(&x, center, shape_inv, radius);
            for _ in 0..ALTERNATING_MAX_ITERS {
                // theta-step: maximizer of <x, theta> over the confidence ellipsoid.
                let sx = shape_inv.mul_vec(&x);
                let sx_norm = dot(&x, &sx).sqrt();
                let theta = if sx_norm > 0.0 {
                    linalg::axpy(center, radius / sx_norm, &sx)
                } else {
                    center.to_vec()
                };
                if norm(&theta) == 0.0 {
                    break;
                }
                let next = self.linear_argmax(&theta)?;
                let next_val = ucb_value(&next, center, shape_inv, radius);
                let step = norm(&linalg::sub(&next, &x));
                if next_val < val {
                    break;
                }
                x = next;
                val = next_val;
                if step < ALTERNATING_TOL {
                    break;
                }
            }
            if best.as_ref().is_none_or(|(bv, _)| val > *bv) {
                best = Some((val, x));
            }
        }
        Ok(best.expect("at least one seed").1)
    }

    /// A random point on the space's surface.
    ///
    /// The ellipsoid sample is the pushforward of a uniform sphere point
    /// through `A^{1/2}`, which is not uniform in surface measure. The p-norm
    /// sample uses generalized-normal coordinates (density `exp(-|t|^p)`)
    /// normalized to the boundary.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Self::UnitSphere { dim } => sphere_sample(*dim, rng),
            Self::Ellipsoid(e) => e.surface_point(&sphere_sample(e.center.len(), rng)),
            Self::PNormBall { dim, p, radius } => {
                let gamma = Gamma::new(1.0 / p, 1.0).expect("valid gamma parameters");
                loop {
                    let g: Vec<f64> = (0..*dim)
                        .map(|_| {
                            let mag: f64 = gamma.sample(rng).powf(1.0 / p);
                            if rng.random::<bool>() {
                                mag
                            } else {
                                -mag
                            }
                        })
                        .collect();
                    let n = pnorm(&g, *p);
                    if n > 0.0 {
                        return linalg::scale(&g, radius / n);
                    }
                }
            }
            Self::FiniteSet { points } => points[rng.random_range(0..points.len())].clone(),
        }
    }

    /// Whether `OPT_eps(theta)` and `OPT_eps(theta_prime)` are disjoint.
    ///
    /// Exact on the sphere (cap angles) and on finite sets (enumeration). For
    /// other geometries this is a one-sided Monte-Carlo test: `true` means no
    /// sampled surface point (nor either optimum) lies in both sets.
    pub fn check_disjoint_eps_sets<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        theta_prime: &[f64],
        eps: f64,
        n_samples: usize,
        rng: &mut R,
    ) -> Result<bool> {
        if !(eps >= 0.0) {
            return Err(invalid(format!("eps must be >= 0, got {eps}")));
        }
        check_dim(theta, self.dim())?;
        check_dim(theta_prime, self.dim())?;
        match self {
            Self::UnitSphere { .. } => {
                let (n1, n2) = (norm(theta), norm(theta_prime));
                if n1 == 0.0 || n2 == 0.0 {
                    return Ok(false);
                }
                let cap = |n: f64| (1.0 - eps / n).clamp(-1.0, 1.0).acos();
                let cos = (dot(theta, theta_prime) / (n1 * n2)).clamp(-1.0, 1.0);
                Ok(cos.acos() > cap(n1) + cap(n2))
            }
            Self::FiniteSet { points } => {
                let a = self.eps_neighborhood(theta, eps)?;
                let b = self.eps_neighborhood(theta_prime, eps)?;
                Ok(!points.iter().any(|x| a.holds_for(x) && b.holds_for(x)))
            }
            _ => {
                if n_samples < 1000 {
                    return Err(invalid("Monte-Carlo disjointness needs n_samples >= 1000"));
                }
                let a = self.eps_neighborhood(theta, eps)?;
                let b = self.eps_neighborhood(theta_prime, eps)?;
                let mut witnesses = Vec::new();
                for t in [theta, theta_prime] {
                    if norm(t) > 0.0 {
                        witnesses.push(self.linear_argmax(t)?);
                    }
                }
                if witnesses.iter().any(|x| a.holds_for(x) && b.holds_for(x)) {
                    return Ok(false);
                }
                for _ in 0..n_samples {
                    let x = self.sample_uniform(rng);
                    if a.holds_for(&x) && b.holds_for(&x) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// `OPT_eps(theta)` with its optimal value cached.
#[derive(Debug, Clone)]
pub struct EpsNeighborhood {
    pub theta: Vec<f64>,
    pub eps: f64,
    pub opt_value: f64,
}

impl EpsNeighborhood {
    /// Membership test; errors when `x` is off the space.
    pub fn contains(&self, space: &ActionSpace, x: &[f64]) -> Result<bool> {
        check_dim(x, space.dim())?;
        let r = space.residual(x);
        if !(r <= ON_SPACE_TOL) {
            return Err(Error::OffSpace(r));
        }
        Ok(self.holds_for(x))
    }

    fn holds_for(&self, x: &[f64]) -> bool {
        // Rounding slack so the exact optimizer is always a member at eps = 0.
        let slack = MEMBERSHIP_SLACK * self.opt_value.abs().max(1.0);
        dot(x, &self.theta) >= self.opt_value - self.eps - slack
    }
}

/// `<x, center> + radius * ||x||_{shape^{-1}}`, the optimistic value of `x`.
pub fn ucb_value(x: &[f64], center: &[f64], shape_inv: &SymMatrix, radius: f64) -> f64 {
    dot(x, center) + radius * shape_inv.quad_form(x).max(0.0).sqrt()
}

pub fn pnorm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn sphere_sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&g);
        if n > 0.0 {
            return linalg::scale(&g, 1.0 / n);
        }
    }
}

/// Completed-square ellipsoid of a surface `{f = const}` at `x_star`, given
/// `grad = grad f(x_star)` and `quad` the exact quadratic-form coefficient
/// (`Hess f / 2`).
///
/// Returns `{x : (x - a)^T M^{-1} (x - a) = 1}` with
/// `a = x* - quad^{-1} grad / 2` and `M^{-1} = 4 quad / (grad^T quad^{-1} grad)`.
pub fn lch_local_ellipsoid(x_star: &[f64], grad: &[f64], quad: &SymMatrix) -> Result<ActionSpace> {
    let d = quad.dim();
    check_dim(x_star, d)?;
    check_dim(grad, d)?;
    check_finite(x_star, "x_star")?;
    check_finite(grad, "gradient")?;
    if norm(grad) == 0.0 {
        return Err(invalid("gradient at x_star must be non-zero"));
    }
    let quad_inv = quad.inverse_pd()?;
    let qig = quad_inv.mul_vec(grad);
    let g_qi_g = dot(grad, &qig);
    let center = linalg::axpy(x_star, -0.5, &qig);
    // M = (g^T quad^{-1} g / 4) quad^{-1}
    let shape = quad_inv.scaled(g_qi_g / 4.0);
    let el = Ellipsoid::new(shape, 1.0, center)?;
    ensure_on_surface(&el, x_star, 1e-6)?;
    Ok(ActionSpace::Ellipsoid(el))
}

/// Errors when `x` misses the ellipsoid equation by more than `tol`.
pub fn ensure_on_surface(el: &Ellipsoid, x: &[f64], tol: f64) -> Result<()> {
    let miss = (el.form(x) - el.level).abs();
    if miss > tol {
        Err(Error::OffSpace(miss))
    } else {
        Ok(())
    }
}

/// Cap half-angle `psi = arccos(1 - eps)` of `OPT_eps(theta)` for unit
/// `theta` on the unit sphere.
pub fn cap_angle(eps: f64) -> f64 {
    (1.0 - eps).clamp(-1.0, 1.0).acos()
}

/// Step size `alpha = sin(2 psi) / cos(delta + 2 psi)` with
/// `psi = arccos(1 - eps)` and `delta = arcsin(alignment)`.
///
/// Moving a unit `theta` by `alpha` along a unit direction whose component
/// on `theta` is `alignment` rotates it by at least `2 psi`, which separates
/// the two eps-caps.
pub fn perturbation_alpha_sphere(eps: f64, alignment: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(0.0..1.0).contains(&alignment) {
        return Err(invalid(format!("alignment must lie in [0, 1), got {alignment}")));
    }
    let psi = cap_angle(eps);
    let delta = alignment.asin();
    let total = delta + 2.0 * psi;
    if total >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::DegenerateGeometry(total));
    }
    Ok((2.0 * psi).sin() / total.cos())
}

/// Small-angle form `2 sqrt(2 eps) / sqrt(80/81)` of the step size at
/// alignment `1/9`.
pub fn perturbation_alpha_small_angle(eps: f64) -> f64 {
    2.0 * (2.0 * eps).sqrt() / (80.0f64 / 81.0).sqrt()
}

/// Perturbation of a unit parameter along a direction (typically the bottom
/// eigenvector of the expected design) large enough to separate eps-caps.
#[derive(Debug, Clone)]
pub struct PerturbationPlan {
    pub eps: f64,
    pub psi: f64,
    pub delta_angle: f64,
    pub alpha: f64,
    pub direction: Vec<f64>,
}

impl PerturbationPlan {
    pub fn for_unit_sphere(theta: &[f64], direction: &[f64], eps: f64) -> Result<Self> {
        check_dim(direction, theta.len())?;
        if (norm(theta) - 1.0).abs() > 1e-9 {
            return Err(invalid("perturbation plan expects a unit-norm theta"));
        }
        let dn = norm(direction);
        if dn == 0.0 {
            return Err(Error::ZeroDirection);
        }
        let direction = linalg::scale(direction, 1.0 / dn);
        let alignment = dot(theta, &direction).abs().min(1.0);
        let alpha = perturbation_alpha_sphere(eps, alignment)?;
        Ok(Self {
            eps,
            psi: cap_angle(eps),
            delta_angle: alignment.asin(),
            alpha,
            direction,
        })
    }

    /// `theta + alpha * direction`
    pub fn perturbed(&self, theta: &[f64]) -> Vec<f64> {
        linalg::axpy(theta, self.alpha, &self.direction)
    }
}

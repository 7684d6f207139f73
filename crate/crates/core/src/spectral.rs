//! Spectral diagnostics of the design matrix.
//!
//! Minimum-eigenvalue traces and their growth exponents, trial ensembles,
//! Monte-Carlo expected design matrices, and the numerical ingredients of the
//! lower-bound argument: eigenvector alignment with the optimal arm,
//! eps-neighborhood counts, the Bernoulli/Pinsker information inequality, the
//! quadratic KL term and the high-probability reference curve.

use crate::actionspace::ActionSpace;
use crate::bandit::{run_trials, BanditInstance, Checkpoint, EpisodeSpec, Policy, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::fmt::{fmt_f64, CsvTable};
use crate::linalg::{self, check_dim, SymMatrix};

/// Tail window used for the slope stored on a [`SpectralTrace`].
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Eigen-gap below which [`alignment_check`] reports a degenerate spectrum.
pub const DEGENERATE_GAP: f64 = 1e-9;

/// `lambda_min(V_n + lambda I)` over checkpoints, with the raw exponent
/// `ln lambda_min / ln n` per checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTrace {
    pub rounds: Vec<usize>,
    pub lambda_min: Vec<f64>,
    pub raw_exponent: Vec<f64>,
    /// Log-log slope over the last [`DEFAULT_TAIL_FRACTION`] of checkpoints
    /// (NaN with fewer than two checkpoints).
    pub fitted_slope: f64,
}

impl SpectralTrace {
    /// Checkpoints with `round < 2` are dropped (`ln 1 = 0`).
    pub fn new(rounds: Vec<usize>, lambda_min: Vec<f64>) -> Result<Self> {
        if rounds.len() != lambda_min.len() {
            return Err(invalid("rounds and lambda_min must have equal length"));
        }
        let (rounds, lambda_min): (Vec<usize>, Vec<f64>) =
            rounds.into_iter().zip(lambda_min).filter(|(r, _)| *r >= 2).unzip();
        if lambda_min.iter().any(|l| !(*l > 0.0)) {
            return Err(invalid("lambda_min values must be positive"));
        }
        let raw_exponent = rounds
            .iter()
            .zip(&lambda_min)
            .map(|(&r, l)| l.ln() / (r as f64).ln())
            .collect();
        let mut trace = Self {
            rounds,
            lambda_min,
            raw_exponent,
            fitted_slope: f64::NAN,
        };
        if trace.rounds.len() >= 2 {
            trace.fitted_slope = trace.tail_slope(DEFAULT_TAIL_FRACTION);
        }
        Ok(trace)
    }

    pub fn from_checkpoints(checkpoints: &[Checkpoint]) -> Result<Self> {
        Self::new(
            checkpoints.iter().map(|c| c.round).collect(),
            checkpoints.iter().map(|c| c.lambda_min).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    fn tail_start(&self, tail_fraction: f64) -> usize {
        let n = self.len();
        let k = ((tail_fraction * n as f64).ceil() as usize).clamp(2.min(n), n);
        n - k
    }

    fn tail_slope(&self, tail_fraction: f64) -> f64 {
        let s = self.tail_start(tail_fraction);
        log_log_slope(&self.rounds[s..], &self.lambda_min[s..])
    }

    /// Columns `round, lambda_min, raw_exponent`.
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(["round", "lambda_min", "raw_exponent"]);
        for i in 0..self.len() {
            t.push(vec![
                self.rounds[i].to_string(),
                fmt_f64(self.lambda_min[i]),
                fmt_f64(self.raw_exponent[i]),
            ]);
        }
        t.render()
    }
}

/// Least-squares slope of `ln value` against `ln round`.
pub fn log_log_slope(rounds: &[usize], values: &[f64]) -> f64 {
    let xs: Vec<f64> = rounds.iter().map(|&r| (r as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub fitted_slope: f64,
    /// First checkpoint from which the raw exponent stays `>= threshold`.
    pub n0_hat: Option<usize>,
    /// `min lambda_min / sqrt(n)` over the tail window.
    pub gamma_hat: f64,
    pub tail_start_round: usize,
}

pub fn exponent_estimate(trace: &SpectralTrace, threshold: f64, tail_fraction: f64) -> Result<ExponentReport> {
    if trace.len() < 5 {
        return Err(Error::TooFewCheckpoints {
            needed: 5,
            have: trace.len(),
        });
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(invalid(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let start = trace.tail_start(tail_fraction);
    let mut n0_hat = None;
    for i in (0..trace.len()).rev() {
        if trace.raw_exponent[i] >= threshold {
            n0_hat = Some(trace.rounds[i]);
        } else {
            break;
        }
    }
    let gamma_hat = (start..trace.len())
        .map(|i| trace.lambda_min[i] / (trace.rounds[i] as f64).sqrt())
        .fold(f64::INFINITY, f64::min);
    Ok(ExponentReport {
        fitted_slope: trace.tail_slope(tail_fraction),
        n0_hat,
        gamma_hat,
        tail_start_round: trace.rounds[start],
    })
}

/// Per-checkpoint mean and sample standard deviation of the raw exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleBand {
    pub rounds: Vec<usize>,
    /// Across-trial mean of `lambda_min`.
    pub lambda_min: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub k_sigma: f64,
}

impl EnsembleBand {
    pub fn lower(&self) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| m - self.k_sigma * s)
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| m + self.k_sigma * s)
            .collect()
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("non-empty band")
    }

    /// Columns `round, lambda_min, raw_exponent, mean, std, band_lo, band_hi`;
    /// `raw_exponent` is that of the mean `lambda_min`, `mean` is the mean of
    /// the per-trial raw exponents.
    pub fn to_csv(&self) -> String {
        let (lo, hi) = (self.lower(), self.upper());
        let mut t = CsvTable::new([
            "round",
            "lambda_min",
            "raw_exponent",
            "mean",
            "std",
            "band_lo",
            "band_hi",
        ]);
        for i in 0..self.rounds.len() {
            t.push(vec![
                self.rounds[i].to_string(),
                fmt_f64(self.lambda_min[i]),
                fmt_f64(self.lambda_min[i].ln() / (self.rounds[i] as f64).ln()),
                fmt_f64(self.mean[i]),
                fmt_f64(self.std[i]),
                fmt_f64(lo[i]),
                fmt_f64(hi[i]),
            ]);
        }
        t.render()
    }
}

pub fn ensemble_band(traces: &[SpectralTrace], k_sigma: f64) -> Result<EnsembleBand> {
    if traces.len() < 2 {
        return Err(invalid("ensemble band needs at least two traces"));
    }
    let rounds = traces[0].rounds.clone();
    if traces.iter().any(|t| t.rounds != rounds) {
        return Err(Error::MisalignedTraces);
    }
    let m = traces.len() as f64;
    let mut lambda_min = Vec::with_capacity(rounds.len());
    let mut mean = Vec::with_capacity(rounds.len());
    let mut std = Vec::with_capacity(rounds.len());
    for i in 0..rounds.len() {
        let mu = traces.iter().map(|t| t.raw_exponent[i]).sum::<f64>() / m;
        let var = traces.iter().map(|t| (t.raw_exponent[i] - mu).powi(2)).sum::<f64>() / (m - 1.0);
        mean.push(mu);
        std.push(var.sqrt());
        lambda_min.push(traces.iter().map(|t| t.lambda_min[i]).sum::<f64>() / m);
    }
    Ok(EnsembleBand {
        rounds,
        lambda_min,
        mean,
        std,
        k_sigma,
    })
}

/// Average over trials of the final design `V_n` (ridge term removed).
pub fn mc_expected_design(
    policy: &dyn Policy,
    instance: &BanditInstance,
    spec: &EpisodeSpec,
    trials: usize,
    master_seed: u64,
) -> Result<SymMatrix> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let trajectories = run_trials(policy, instance, spec, trials, master_seed)?;
    Ok(average_design(&trajectories))
}

/// Mean of `V_n` over trajectories, summed in trajectory order.
pub fn average_design(trajectories: &[Trajectory]) -> SymMatrix {
    let d = trajectories[0].final_state.dim();
    let mut acc = SymMatrix::zeros(d);
    for t in trajectories {
        acc = acc.add(&t.final_state.design()).expect("equal dimensions");
    }
    acc.scaled(1.0 / trajectories.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    /// `max_{i >= 2} |<v, u_i>|` over the eigenvectors of `gbar`.
    pub alignment: f64,
    pub degenerate: bool,
    /// Eigenvector of the smallest eigenvalue.
    pub bottom_vector: Vec<f64>,
    pub lambda_min: f64,
}

pub fn alignment_check(gbar: &SymMatrix, opt_direction: &[f64]) -> Result<AlignmentReport> {
    check_dim(opt_direction, gbar.dim())?;
    let e = gbar.eig()?;
    let alignment = e.eigenvectors[1..]
        .iter()
        .map(|u| linalg::dot(u, opt_direction).abs())
        .fold(0.0, f64::max);
    let gap = if e.dim() >= 2 {
        e.eigenvalues[0] - e.eigenvalues[1]
    } else {
        f64::INFINITY
    };
    Ok(AlignmentReport {
        alignment,
        degenerate: gap < DEGENERATE_GAP * e.lambda_max().abs().max(1.0),
        bottom_vector: e.bottom_vector().to_vec(),
        lambda_min: e.lambda_min(),
    })
}

/// `N_{eps,n}(theta)` and `Z = N / n` for a trajectory.
pub fn eps_fraction(trajectory: &Trajectory, theta: &[f64], eps: f64, space: &ActionSpace) -> Result<(usize, f64)> {
    if trajectory.is_empty() {
        return Err(invalid("trajectory is empty"));
    }
    let hood = space.eps_neighborhood(theta, eps)?;
    let mut count = 0;
    for a in &trajectory.actions {
        if hood.contains(space, a)? {
            count += 1;
        }
    }
    Ok((count, count as f64 / trajectory.len() as f64))
}

/// `eps = c / (0.01 sqrt(n))`; `c = 0.1` gives `10 / sqrt(n)`.
pub fn default_eps(n: usize, c: f64) -> f64 {
    c / (0.01 * (n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerReport {
    /// `2 (z1 - z2)^2`
    pub bound: f64,
    /// `KL(Ber(z1) || Ber(z2))`; `f64::INFINITY` when unbounded.
    pub kl: f64,
}

pub fn pinsker_bound(z1: f64, z2: f64) -> Result<PinskerReport> {
    for z in [z1, z2] {
        if !(0.0..=1.0).contains(&z) {
            return Err(invalid(format!("probabilities must lie in [0, 1], got {z}")));
        }
    }
    Ok(PinskerReport {
        bound: 2.0 * (z1 - z2) * (z1 - z2),
        kl: bernoulli_kl(z1, z2),
    })
}

pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    fn term(a: f64, b: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    }
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// `(theta - theta')^T gbar (theta - theta') / 2`, the KL divergence between
/// the reward laws under the two parameters with unit-variance noise.
pub fn kl_quadratic_lhs(theta: &[f64], theta_prime: &[f64], gbar: &SymMatrix) -> Result<f64> {
    check_dim(theta, gbar.dim())?;
    check_dim(theta_prime, gbar.dim())?;
    Ok(0.5 * gbar.quad_form(&linalg::sub(theta, theta_prime)))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("delta must lie in (0, 1], got {delta}")))
    }
}

/// `gamma sqrt(n) - (2 + C) sqrt(8 n ln(d / delta))`; may be negative.
pub fn highprob_reference(gamma: f64, c_stab: f64, d: usize, delta: f64, n: usize) -> Result<f64> {
    check_delta(delta)?;
    if d == 0 {
        return Err(invalid("d must be >= 1"));
    }
    let nf = n as f64;
    Ok(gamma * nf.sqrt() - (2.0 + c_stab) * (8.0 * nf * (d as f64 / delta).ln()).sqrt())
}

/// Slope `gamma - (2 + C) sqrt(8 ln(d / delta))` of the reference curve in `sqrt(n)`.
pub fn highprob_gamma2(gamma: f64, c_stab: f64, d: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(gamma - (2.0 + c_stab) * (8.0 * (d as f64 / delta).ln()).sqrt())
}

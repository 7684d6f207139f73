//! Linear-bandit interaction: ridge design state, confidence sets, episode
//! simulation and regret accounting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::actionspace::ActionSpace;
use crate::error::{invalid, Error, Result};
use crate::fmt::{fmt_f64, CsvTable};
use crate::linalg::{self, check_dim, check_finite, SymMatrix};

/// RNG used for every simulated stream.
pub type SimRng = ChaCha8Rng;

/// Stream for trial `trial` under `master_seed`: seeded with
/// `master_seed + trial` (wrapping).
pub fn trial_rng(master_seed: u64, trial: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(master_seed.wrapping_add(trial))
}

/// Exact re-inversion period of the incremental inverse.
pub const REFRESH_INTERVAL: usize = 512;

/// Ground truth for a simulation: `Y_t = <A_t, theta*> + sigma * N(0, 1)`.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    pub theta_star: Vec<f64>,
    pub noise_sigma: f64,
    pub space: ActionSpace,
}

impl BanditInstance {
    pub fn new(theta_star: Vec<f64>, noise_sigma: f64, space: ActionSpace) -> Result<Self> {
        check_dim(&theta_star, space.dim())?;
        check_finite(&theta_star, "theta_star")?;
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(invalid(format!("noise_sigma must be >= 0, got {noise_sigma}")));
        }
        Ok(Self {
            theta_star,
            noise_sigma,
            space,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    /// `max_x <x, theta*>`
    pub fn opt_value(&self) -> Result<f64> {
        self.space.opt_value(&self.theta_star)
    }
}

/// Regularized least-squares state: `V = sum a a^T + lambda I`, its inverse
/// (Sherman-Morrison, re-inverted every [`REFRESH_INTERVAL`] updates),
/// `X^T y` and the ridge estimate.
#[derive(Debug, Clone)]
pub struct DesignState {
    lambda: f64,
    gram: SymMatrix,
    gram_inv: SymMatrix,
    xty: Vec<f64>,
    theta_hat: Vec<f64>,
    n: usize,
}

impl DesignState {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("design dimension must be >= 1"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("ridge lambda must be > 0, got {lambda}")));
        }
        Ok(Self {
            lambda,
            gram: SymMatrix::scaled_identity(dim, lambda),
            gram_inv: SymMatrix::scaled_identity(dim, 1.0 / lambda),
            xty: vec![0.0; dim],
            theta_hat: vec![0.0; dim],
            n: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `V_n + lambda I`
    pub fn gram(&self) -> &SymMatrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &SymMatrix {
        &self.gram_inv
    }

    pub fn xty(&self) -> &[f64] {
        &self.xty
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    /// Rounds observed so far.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `V_n` without the ridge term.
    pub fn design(&self) -> SymMatrix {
        let mut v = self.gram.clone();
        v.add_scaled_identity(-self.lambda);
        v
    }

    /// `lambda_min(V_n + lambda I)`
    pub fn lambda_min(&self) -> Result<f64> {
        self.gram.lambda_min()
    }

    pub fn update(&mut self, action: &[f64], reward: f64) -> Result<()> {
        check_dim(action, self.dim())?;
        check_finite(action, "action")?;
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        self.gram.add_outer(action, 1.0);
        for (acc, a) in self.xty.iter_mut().zip(action) {
            *acc += reward * a;
        }
        self.n += 1;
        if self.n.is_multiple_of(REFRESH_INTERVAL) {
            self.gram_inv = self.gram.inverse_pd()?;
        } else {
            let u = self.gram_inv.mul_vec(action);
            let denom = 1.0 + linalg::dot(action, &u);
            self.gram_inv.add_outer(&u, -1.0 / denom);
        }
        self.theta_hat = self.gram_inv.mul_vec(&self.xty);
        Ok(())
    }

    /// Confidence ellipsoid around the ridge estimate for norm bound `b`.
    pub fn confidence_set(&self, b: f64, delta: f64) -> Result<ConfidenceSet> {
        Ok(ConfidenceSet {
            center: self.theta_hat.clone(),
            shape: self.gram.clone(),
            radius: confidence_radius(b, self.lambda, self.n, self.dim(), delta)?,
        })
    }
}

/// `{theta : ||theta - center||_shape <= radius}`
#[derive(Debug, Clone)]
pub struct ConfidenceSet {
    pub center: Vec<f64>,
    pub shape: SymMatrix,
    pub radius: f64,
}

/// `b sqrt(lambda) + sqrt(2 ln(1/delta) + d ln(1 + n / (lambda d)))`, the
/// self-normalized radius for unit-variance Gaussian noise.
pub fn confidence_radius(b: f64, lambda: f64, n: usize, d: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(invalid(format!("norm bound must be >= 0, got {b}")));
    }
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be > 0, got {lambda}")));
    }
    if d == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    let df = d as f64;
    let log_det = df * (1.0 + n as f64 / (lambda * df)).ln();
    Ok(b * lambda.sqrt() + (2.0 * (1.0 / delta).ln() + log_det).sqrt())
}

/// Action-selection rule.
pub trait Policy: Sync {
    fn select(&self, state: &DesignState, space: &ActionSpace, rng: &mut SimRng) -> Result<Vec<f64>>;
}

/// Rounds at which `lambda_min(V_n + lambda I)` is recorded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckpointSchedule {
    rounds: Vec<usize>,
}

impl CheckpointSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn from_rounds(mut rounds: Vec<usize>) -> Self {
        rounds.retain(|&r| r >= 1);
        rounds.sort_unstable();
        rounds.dedup();
        Self { rounds }
    }

    /// Powers of two up to `n`, multiples of `n / 100`, and `n` itself.
    pub fn default_for(n: usize) -> Self {
        let mut rounds = Vec::new();
        let mut p = 1;
        while p <= n {
            rounds.push(p);
            p *= 2;
        }
        let step = n / 100;
        if step > 0 {
            rounds.extend((1..=100).map(|k| k * step).filter(|&r| r <= n));
        }
        rounds.push(n);
        Self::from_rounds(rounds)
    }

    /// `count` rounds spaced geometrically from `first` to `last` (deduplicated
    /// after rounding, so possibly fewer).
    pub fn geometric(count: usize, first: usize, last: usize) -> Self {
        if count == 0 || last == 0 {
            return Self::none();
        }
        let first = first.clamp(1, last);
        if count == 1 || first == last {
            return Self::from_rounds(vec![last]);
        }
        let ratio = (last as f64 / first as f64).ln() / (count - 1) as f64;
        let rounds = (0..count)
            .map(|k| ((first as f64).ln() + ratio * k as f64).exp().round() as usize)
            .chain([first, last])
            .collect();
        Self::from_rounds(rounds)
    }

    pub fn rounds(&self) -> &[usize] {
        &self.rounds
    }

    pub fn contains(&self, round: usize) -> bool {
        self.rounds.binary_search(&round).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub round: usize,
    pub lambda_min: f64,
}

/// Parameters of one simulated episode.
#[derive(Debug, Clone)]
pub struct EpisodeSpec {
    pub rounds: usize,
    pub lambda: f64,
    pub schedule: CheckpointSchedule,
}

impl EpisodeSpec {
    pub fn new(rounds: usize, lambda: f64) -> Self {
        Self {
            rounds,
            lambda,
            schedule: CheckpointSchedule::default_for(rounds),
        }
    }

    pub fn with_schedule(mut self, schedule: CheckpointSchedule) -> Self {
        self.schedule = schedule;
        self
    }
}

/// Full record of an episode.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub instantaneous_regrets: Vec<f64>,
    pub cumulative_regret: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub final_state: DesignState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    /// CSV with columns `round, a_1..a_d, reward, inst_regret, cum_regret,
    /// lambda_min`; `lambda_min` is filled on checkpoint rows only.
    pub fn to_csv(&self) -> String {
        let d = self.final_state.dim();
        let mut header = vec!["round".to_string()];
        header.extend((1..=d).map(|i| format!("a_{i}")));
        header.extend(["reward", "inst_regret", "cum_regret", "lambda_min"].map(String::from));
        let mut table = CsvTable::new(header);
        let mut cp = self.checkpoints.iter().peekable();
        for t in 0..self.len() {
            let round = t + 1;
            let mut row = vec![round.to_string()];
            row.extend(self.actions[t].iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(self.rewards[t]));
            row.push(fmt_f64(self.instantaneous_regrets[t]));
            row.push(fmt_f64(self.cumulative_regret[t]));
            match cp.peek() {
                Some(c) if c.round == round => {
                    row.push(fmt_f64(c.lambda_min));
                    cp.next();
                }
                _ => row.push(String::new()),
            }
            table.push(row);
        }
        table.render()
    }
}

/// Simulates `spec.rounds` rounds of `policy` against `instance`.
///
/// Each round draws the policy's action first, then one standard normal for
/// the reward noise (always drawn, even when `noise_sigma == 0`, so RNG
/// streams stay aligned across noise levels).
pub fn run_episode(
    policy: &dyn Policy,
    instance: &BanditInstance,
    spec: &EpisodeSpec,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    run_episode_from(
        policy,
        instance,
        spec,
        DesignState::new(instance.dim(), spec.lambda)?,
        rng,
    )
}

/// Like [`run_episode`] but continuing from an existing design state.
pub fn run_episode_from(
    policy: &dyn Policy,
    instance: &BanditInstance,
    spec: &EpisodeSpec,
    mut state: DesignState,
    rng: &mut SimRng,
) -> Result<Trajectory> {
    if spec.rounds == 0 {
        return Err(invalid("episode needs at least one round"));
    }
    let d = instance.dim();
    if state.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: state.dim(),
        });
    }
    let opt = instance.opt_value()?;
    let mut traj = Trajectory {
        actions: Vec::with_capacity(spec.rounds),
        rewards: Vec::with_capacity(spec.rounds),
        instantaneous_regrets: Vec::with_capacity(spec.rounds),
        cumulative_regret: Vec::with_capacity(spec.rounds),
        checkpoints: Vec::new(),
        final_state: state.clone(),
    };
    let mut cum = 0.0;
    for t in 1..=spec.rounds {
        let action = policy.select(&state, &instance.space, rng)?;
        check_dim(&action, d)?;
        let mean = linalg::dot(&action, &instance.theta_star);
        let noise: f64 = StandardNormal.sample(rng);
        let reward = mean + instance.noise_sigma * noise;
        state.update(&action, reward)?;
        let inst = opt - mean;
        cum += inst;
        traj.actions.push(action);
        traj.rewards.push(reward);
        traj.instantaneous_regrets.push(inst);
        traj.cumulative_regret.push(cum);
        if spec.schedule.contains(t) {
            traj.checkpoints.push(Checkpoint {
                round: t,
                lambda_min: state.lambda_min()?,
            });
        }
    }
    traj.final_state = state;
    Ok(traj)
}

/// Runs `trials` independent episodes (trial `t` uses [`trial_rng`]`(master_seed, t)`)
/// on the current rayon pool; results come back in trial order.
pub fn run_trials(
    policy: &dyn Policy,
    instance: &BanditInstance,
    spec: &EpisodeSpec,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<Trajectory>> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_episode(policy, instance, spec, &mut trial_rng(master_seed, t as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_update() {
        let mut s = DesignState::new(2, 1.0).unwrap();
        s.update(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(s.gram(), &SymMatrix::from_diag(&[2.0, 1.0]));
        assert!(close(s.theta_hat()[0], 0.5, 1e-15) && s.theta_hat()[1] == 0.0);
        s.update(&[0.0, 1.0], 1.0).unwrap();
        assert!(close(s.theta_hat()[0], 0.5, 1e-15) && close(s.theta_hat()[1], 0.5, 1e-15));
        assert_eq!(s.n(), 2);
    }

    #[test]
    fn update_rejects_bad_input() {
        let mut s = DesignState::new(2, 1.0).unwrap();
        assert!(s.update(&[1.0], 1.0).is_err());
        assert!(s.update(&[f64::NAN, 0.0], 1.0).is_err());
        assert!(s.update(&[1.0, 0.0], f64::INFINITY).is_err());
        assert!(DesignState::new(2, 0.0).is_err());
    }

    #[test]
    fn radius_examples() {
        assert_eq!(confidence_radius(0.0, 1.0, 0, 3, 1.0).unwrap(), 0.0);
        let expected = 1.0 + (2.0 * 10f64.ln() + 2.0 * 51f64.ln()).sqrt();
        let r = confidence_radius(1.0, 1.0, 100, 2, 0.1).unwrap();
        assert!(close(r, expected, 1e-14));
        assert!(close(r, 4.53113, 1e-5));
        assert_eq!(confidence_radius(1.0, 1.0, 0, 5, 1.0).unwrap(), 1.0);
        assert!(confidence_radius(1.0, 1.0, 0, 5, 0.0).is_err());
        assert!(confidence_radius(1.0, 1.0, 0, 5, 1.5).is_err());
    }

    #[test]
    fn geometric_schedule_shape() {
        let s = CheckpointSchedule::geometric(64, 16, 8192);
        assert_eq!(s.rounds().first(), Some(&16));
        assert_eq!(s.rounds().last(), Some(&8192));
        assert!(s.rounds().len() > 55 && s.rounds().len() <= 64);
        let d = CheckpointSchedule::default_for(1000);
        for r in [1, 2, 4, 512, 10, 990, 1000] {
            assert!(d.contains(r), "{r}");
        }
    }
}

//! Action-selection rules.

use rand_distr::{Distribution, StandardNormal};

use crate::actionspace::ActionSpace;
use crate::bandit::{confidence_radius, DesignState, Policy, SimRng};
use crate::error::{invalid, Result};
use crate::linalg::{self, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Oful,
    LinTs,
    Uniform,
}

impl PolicyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oful" => Ok(Self::Oful),
            "lints" | "ts" | "thompson" => Ok(Self::LinTs),
            "uniform" => Ok(Self::Uniform),
            other => Err(invalid(format!("unknown policy kind '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Oful => "oful",
            Self::LinTs => "lints",
            Self::Uniform => "uniform",
        }
    }
}

/// Policy parameters. `ts_scale = None` makes LinTS inflate its posterior by
/// the current confidence radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub delta: f64,
    pub norm_bound: f64,
    pub ts_scale: Option<f64>,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, delta: f64, norm_bound: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        if !(norm_bound >= 0.0) || !norm_bound.is_finite() {
            return Err(invalid(format!("norm bound must be >= 0, got {norm_bound}")));
        }
        Ok(Self {
            kind,
            delta,
            norm_bound,
            ts_scale: None,
        })
    }

    pub fn oful(delta: f64, norm_bound: f64) -> Result<Self> {
        Self::new(PolicyKind::Oful, delta, norm_bound)
    }

    pub fn lints(delta: f64, norm_bound: f64) -> Result<Self> {
        Self::new(PolicyKind::LinTs, delta, norm_bound)
    }

    pub fn uniform() -> Self {
        Self {
            kind: PolicyKind::Uniform,
            delta: 1.0,
            norm_bound: 0.0,
            ts_scale: None,
        }
    }

    pub fn with_ts_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(invalid(format!("ts_scale must be >= 0, got {scale}")));
        }
        self.ts_scale = Some(scale);
        Ok(self)
    }

    /// Confidence radius at the state's current round count.
    pub fn radius(&self, state: &DesignState) -> Result<f64> {
        confidence_radius(self.norm_bound, state.lambda(), state.n(), state.dim(), self.delta)
    }
}

impl Policy for PolicyConfig {
    fn select(&self, state: &DesignState, space: &ActionSpace, rng: &mut SimRng) -> Result<Vec<f64>> {
        match self.kind {
            PolicyKind::Oful => oful_select(state, space, self),
            PolicyKind::LinTs => lints_select(state, space, self, rng),
            PolicyKind::Uniform => Ok(uniform_select(space, rng)),
        }
    }
}

/// Optimistic action over the ridge confidence ellipsoid.
pub fn oful_select(state: &DesignState, space: &ActionSpace, cfg: &PolicyConfig) -> Result<Vec<f64>> {
    oful_select_with_radius(state, space, cfg.radius(state)?)
}

pub fn oful_select_with_radius(state: &DesignState, space: &ActionSpace, radius: f64) -> Result<Vec<f64>> {
    space.ucb_argmax(state.theta_hat(), state.gram(), radius)
}

/// Greedy action for `theta_hat + scale * L z`, `L L^T = gram^{-1}`,
/// `z ~ N(0, I)`. A zero sample is redrawn once, then `e_1` is played.
pub fn lints_select(
    state: &DesignState,
    space: &ActionSpace,
    cfg: &PolicyConfig,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    let scale = match cfg.ts_scale {
        Some(s) => s,
        None => cfg.radius(state)?,
    };
    let d = state.dim();
    // gram = U diag(g) U^T, so L = U diag(g^{-1/2}) is a square root of gram^{-1}.
    let eig = state.gram().eig()?;
    for _ in 0..2 {
        let mut theta = state.theta_hat().to_vec();
        for (g, u) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
            let z: f64 = StandardNormal.sample(rng);
            let w = scale * z / g.sqrt();
            for (t, ui) in theta.iter_mut().zip(u) {
                *t += w * ui;
            }
        }
        if norm(&theta) > 0.0 {
            return space.linear_argmax(&theta);
        }
    }
    space.linear_argmax(&linalg::basis(d, 0))
}

pub fn uniform_select(space: &ActionSpace, rng: &mut SimRng) -> Vec<f64> {
    space.sample_uniform(rng)
}

/// Plays `linear_argmax(theta)` every round; useful as a zero-regret baseline.
#[derive(Debug, Clone)]
pub struct GreedyOracle {
    pub theta: Vec<f64>,
}

impl Policy for GreedyOracle {
    fn select(&self, _state: &DesignState, space: &ActionSpace, _rng: &mut SimRng) -> Result<Vec<f64>> {
        space.linear_argmax(&self.theta)
    }
}

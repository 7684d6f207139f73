//! Norm-adaptive OFUL: epochs of doubling length, each played with the
//! current norm estimate, which is then refined from that epoch's confidence
//! ellipsoid.

use rayon::prelude::*;

use crate::bandit::{run_episode, trial_rng, BanditInstance, CheckpointSchedule, ConfidenceSet, EpisodeSpec, SimRng};
use crate::error::{invalid, Result};
use crate::fmt::{fmt_f64, CsvTable};
use crate::linalg::{norm, trust_region_max_norm};
use crate::policies::PolicyConfig;

/// Epoch lengths `n_i = 2^(i-1) n1` and levels `delta_i = delta / 2^(i-1)`,
/// with the last epoch truncated to the round budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSchedule {
    pub n1: usize,
    pub delta: f64,
    /// `(n_i, delta_i, rounds actually played)`
    pub epochs: Vec<(usize, f64, usize)>,
}

impl EpochSchedule {
    pub fn new(n1: usize, delta: f64, total_rounds: usize) -> Result<Self> {
        if n1 == 0 {
            return Err(invalid("n1 must be >= 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        let mut epochs = Vec::new();
        let (mut n_i, mut delta_i, mut left) = (n1, delta, total_rounds);
        while left > 0 {
            let played = n_i.min(left);
            epochs.push((n_i, delta_i, played));
            left -= played;
            n_i = n_i.checked_mul(2).ok_or_else(|| invalid("epoch length overflow"))?;
            delta_i /= 2.0;
        }
        Ok(Self { n1, delta, epochs })
    }

    /// Rounds covered by the first `epochs` full epochs.
    pub fn rounds_for_epochs(n1: usize, epochs: u32) -> usize {
        n1 * ((1usize << epochs) - 1)
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.epochs.iter().map(|e| e.2).collect()
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMode {
    /// Maximum norm over the confidence ellipsoid (trust-region solve).
    Exact,
    /// `||center|| + radius / sqrt(lambda_min(shape))`.
    Bound,
}

impl RefineMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Self::Exact),
            "bound" => Ok(Self::Bound),
            other => Err(invalid(format!("unknown refine mode '{other}'"))),
        }
    }
}

pub fn refine_norm_estimate(conf: &ConfidenceSet, mode: RefineMode) -> Result<f64> {
    match mode {
        RefineMode::Exact => Ok(trust_region_max_norm(&conf.center, &conf.shape, conf.radius)?.max_norm),
        RefineMode::Bound => {
            let e = conf.shape.eig()?;
            e.require_pd()?;
            Ok(norm(&conf.center) + conf.radius / e.lambda_min().sqrt())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlbConfig {
    pub b_init: f64,
    pub n1: usize,
    pub delta: f64,
    pub total_rounds: usize,
    pub lambda: f64,
    pub mode: RefineMode,
}

impl AlbConfig {
    pub fn new(b_init: f64, n1: usize, delta: f64, total_rounds: usize) -> Self {
        Self {
            b_init,
            n1,
            delta,
            total_rounds,
            lambda: 1.0,
            mode: RefineMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub n_i: usize,
    pub delta_i: f64,
    pub b_i: f64,
    pub rounds: usize,
    pub epoch_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlbReport {
    pub epochs: Vec<EpochRecord>,
    /// `b^(1), b^(2), ...`; one longer than the number of complete epochs.
    pub b_sequence: Vec<f64>,
    pub cumulative_regret: f64,
    pub theta_hat_final: Vec<f64>,
}

impl AlbReport {
    pub fn per_epoch_regret(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.epoch_regret).collect()
    }

    /// Columns `epoch, n_i, delta_i, b_i, epoch_regret, cum_regret`.
    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(["epoch", "n_i", "delta_i", "b_i", "epoch_regret", "cum_regret"]);
        for e in &self.epochs {
            t.push(vec![
                e.epoch.to_string(),
                e.n_i.to_string(),
                fmt_f64(e.delta_i),
                fmt_f64(e.b_i),
                fmt_f64(e.epoch_regret),
                fmt_f64(e.cum_regret),
            ]);
        }
        t.render()
    }
}

/// One run of the epoch-doubling algorithm. Every epoch starts from a fresh
/// ridge state; the norm estimate is refined after each complete epoch only.
pub fn alb_run(instance: &BanditInstance, cfg: &AlbConfig, rng: &mut SimRng) -> Result<AlbReport> {
    if !(cfg.b_init >= 0.0) || !cfg.b_init.is_finite() {
        return Err(invalid(format!("b_init must be >= 0, got {}", cfg.b_init)));
    }
    if cfg.total_rounds == 0 {
        return Err(invalid("total_rounds must be >= 1"));
    }
    let schedule = EpochSchedule::new(cfg.n1, cfg.delta, cfg.total_rounds)?;
    let mut b = cfg.b_init;
    let mut b_sequence = vec![b];
    let mut epochs = Vec::with_capacity(schedule.epochs.len());
    let mut cum = 0.0;
    let mut theta_hat_final = vec![0.0; instance.dim()];
    for (i, &(n_i, delta_i, played)) in schedule.epochs.iter().enumerate() {
        let policy = PolicyConfig::oful(delta_i, b)?;
        let spec = EpisodeSpec::new(played, cfg.lambda).with_schedule(CheckpointSchedule::none());
        let traj = run_episode(&policy, instance, &spec, rng)?;
        let regret = traj.total_regret();
        cum += regret;
        epochs.push(EpochRecord {
            epoch: i + 1,
            n_i,
            delta_i,
            b_i: b,
            rounds: played,
            epoch_regret: regret,
            cum_regret: cum,
        });
        theta_hat_final = traj.final_state.theta_hat().to_vec();
        if played == n_i {
            let conf = traj.final_state.confidence_set(b, delta_i)?;
            b = refine_norm_estimate(&conf, cfg.mode)?;
            b_sequence.push(b);
        }
    }
    Ok(AlbReport {
        epochs,
        b_sequence,
        cumulative_regret: cum,
        theta_hat_final,
    })
}

/// Independent runs; run `r` uses [`trial_rng`]`(master_seed, r)`. Results
/// come back in run order.
pub fn alb_runs(instance: &BanditInstance, cfg: &AlbConfig, runs: usize, master_seed: u64) -> Result<Vec<AlbReport>> {
    (0..runs)
        .into_par_iter()
        .map(|r| alb_run(instance, cfg, &mut trial_rng(master_seed, r as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actionspace::ActionSpace;
    use crate::linalg::SymMatrix;

    fn conf(center: Vec<f64>, shape: SymMatrix, radius: f64) -> ConfidenceSet {
        ConfidenceSet { center, shape, radius }
    }

    #[test]
    fn refine_examples() {
        let c = conf(vec![3.0, 4.0], SymMatrix::identity(2), 1.0);
        assert!((refine_norm_estimate(&c, RefineMode::Exact).unwrap() - 6.0).abs() < 1e-10);
        let c = conf(vec![3.0, 4.0], SymMatrix::from_diag(&[4.0, 4.0]), 2.0);
        assert!((refine_norm_estimate(&c, RefineMode::Bound).unwrap() - 6.0).abs() < 1e-12);
        let c = conf(vec![3.0, 4.0], SymMatrix::from_diag(&[4.0, 1.0]), 0.0);
        assert_eq!(refine_norm_estimate(&c, RefineMode::Exact).unwrap(), 5.0);
        assert_eq!(refine_norm_estimate(&c, RefineMode::Bound).unwrap(), 5.0);
        let bad = conf(vec![1.0, 0.0], SymMatrix::from_diag(&[1.0, -1.0]), 1.0);
        assert!(refine_norm_estimate(&bad, RefineMode::Exact).is_err());
        assert!(refine_norm_estimate(&bad, RefineMode::Bound).is_err());
    }

    #[test]
    fn exact_never_exceeds_bound() {
        let shapes = [
            SymMatrix::from_diag(&[9.0, 1.0, 4.0]),
            SymMatrix::from_rows(&[vec![5.0, 1.0, 0.0], vec![1.0, 2.0, 0.5], vec![0.0, 0.5, 3.0]]).unwrap(),
        ];
        for shape in shapes {
            for center in [vec![0.0, 0.0, 0.0], vec![1.0, -2.0, 0.5], vec![0.0, 0.0, 3.0]] {
                for r in [0.1, 1.0, 5.0] {
                    let c = conf(center.clone(), shape.clone(), r);
                    let ex = refine_norm_estimate(&c, RefineMode::Exact).unwrap();
                    let bd = refine_norm_estimate(&c, RefineMode::Bound).unwrap();
                    assert!(ex <= bd + 1e-8, "{ex} > {bd}");
                }
            }
        }
    }

    #[test]
    fn schedule_doubling() {
        let s = EpochSchedule::new(100, 0.1, 700).unwrap();
        assert_eq!(s.lengths(), vec![100, 200, 400]);
        assert_eq!(s.deltas(), vec![0.1, 0.05, 0.025]);
        let s = EpochSchedule::new(100, 0.1, 650).unwrap();
        assert_eq!(s.lengths(), vec![100, 200, 350]);
        assert_eq!(s.epochs[2].0, 400);
        assert_eq!(EpochSchedule::rounds_for_epochs(256, 4), 3840);
        assert!(EpochSchedule::new(0, 0.1, 10).is_err());
    }

    fn half_norm_instance(sigma: f64) -> BanditInstance {
        BanditInstance::new(vec![0.3, 0.4, 0.0], sigma, ActionSpace::unit_sphere(3).unwrap()).unwrap()
    }

    #[test]
    fn noiseless_refinement_shrinks_toward_true_norm() {
        let inst = half_norm_instance(0.0);
        let cfg = AlbConfig::new(10.0, 256, 0.05, EpochSchedule::rounds_for_epochs(256, 4));
        let rep = alb_run(&inst, &cfg, &mut trial_rng(7, 0)).unwrap();
        assert_eq!(rep.b_sequence[0], 10.0);
        assert_eq!(rep.b_sequence.len(), 5);
        assert!(rep.b_sequence.iter().all(|b| *b >= 0.5));
        assert!(rep.b_sequence[1..].windows(2).all(|w| w[1] < w[0]));
        assert!(rep.b_sequence[1] < 10.0);
        let last = *rep.b_sequence.last().unwrap();
        assert!(last - 0.5 < 0.2, "final estimate {last}");
    }

    #[test]
    fn exact_initial_bound_stays_above_truth() {
        let inst = half_norm_instance(0.0);
        let cfg = AlbConfig::new(0.5, 256, 0.05, EpochSchedule::rounds_for_epochs(256, 3));
        let rep = alb_run(&inst, &cfg, &mut trial_rng(8, 0)).unwrap();
        assert!(rep.b_sequence.iter().all(|b| *b >= 0.5 - 1e-9));
    }

    #[test]
    fn truncated_epoch_is_not_refined() {
        let inst = half_norm_instance(1.0);
        let cfg = AlbConfig::new(2.0, 50, 0.05, 120);
        let rep = alb_run(&inst, &cfg, &mut trial_rng(1, 0)).unwrap();
        assert_eq!(rep.epochs.len(), 2);
        assert_eq!(rep.epochs[1].rounds, 70);
        assert_eq!(rep.b_sequence.len(), 2);
        let total: f64 = rep.per_epoch_regret().iter().sum();
        assert!((total - rep.cumulative_regret).abs() < 1e-9);
        assert_eq!(rep.to_csv().lines().count(), 3);
    }
}

//! Clustering agents by their final OFUL estimates, without any forced
//! exploration: each agent plays OFUL alone, then the center links agents whose
//! estimates are within a threshold and returns the connected components.

use rayon::prelude::*;

use crate::actionspace::ActionSpace;
use crate::bandit::{run_episode, trial_rng, BanditInstance, CheckpointSchedule, EpisodeSpec, Trajectory};
use crate::error::{invalid, Result};
use crate::fmt::{fmt_f64, CsvTable};
use crate::linalg::{check_dim, norm, sub};
use crate::policies::PolicyConfig;

/// `(4 / n^(1/4)) sqrt(2 d ln(n/delta) / (gamma ln(d/delta)))`
pub fn cluster_threshold(n: usize, d: usize, delta: f64, gamma: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n must be >= 2"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be > 0, got {gamma}")));
    }
    let log_d = (d as f64 / delta).ln();
    if !(log_d > 0.0) {
        return Err(invalid(format!("ln(d/delta) = {log_d} must be positive")));
    }
    let nf = n as f64;
    let inner = 2.0 * d as f64 * (nf / delta).ln() / (gamma * log_d);
    Ok(4.0 / nf.powf(0.25) * inner.sqrt())
}

/// Advisory comparison of the separation against `2 eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationCheck {
    pub separation: f64,
    pub required: f64,
    pub satisfied: bool,
}

pub fn separation_condition(separation: f64, eta: f64) -> SeparationCheck {
    SeparationCheck {
        separation,
        required: 2.0 * eta,
        satisfied: separation > 2.0 * eta,
    }
}

/// Smallest pairwise distance between distinct parameters (`INFINITY` for one).
pub fn min_separation(params: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..params.len() {
        for j in i + 1..params.len() {
            best = best.min(norm(&sub(&params[i], &params[j])));
        }
    }
    best
}

/// Disjoint sets of agent indices, each sorted, ordered by smallest member.
pub type Partition = Vec<Vec<usize>>;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the graph linking `i` and `j` when
/// `||est_i - est_j|| <= eta`.
pub fn edge_cluster(estimates: &[Vec<f64>], eta: f64) -> Result<Partition> {
    let Some(first) = estimates.first() else {
        return Err(invalid("no estimates to cluster"));
    };
    if !(eta >= 0.0) {
        return Err(invalid(format!("eta must be >= 0, got {eta}")));
    }
    for e in estimates {
        check_dim(e, first.len())?;
    }
    let n = estimates.len();
    let mut uf = UnionFind((0..n).collect());
    for i in 0..n {
        for j in i + 1..n {
            if norm(&sub(&estimates[i], &estimates[j])) <= eta {
                uf.union(i, j);
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    Ok(partition_from_labels(&labels))
}

/// Groups indices by label; the result is canonical regardless of label values.
pub fn partition_from_labels<L: PartialEq>(labels: &[L]) -> Partition {
    let mut parts: Partition = Vec::new();
    let mut reps: Vec<&L> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match reps.iter().position(|r| *r == l) {
            Some(k) => parts[k].push(i),
            None => {
                reps.push(l);
                parts.push(vec![i]);
            }
        }
    }
    parts
}

/// Equality up to relabeling.
pub fn same_partition(a: &Partition, b: &Partition) -> bool {
    let canon = |p: &Partition| {
        let mut p: Vec<Vec<usize>> = p
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.sort_unstable();
                s
            })
            .collect();
        p.sort();
        p
    };
    canon(a) == canon(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiAgentConfig {
    pub cluster_params: Vec<Vec<f64>>,
    /// Cluster index of each agent.
    pub assignment: Vec<usize>,
    pub rounds: usize,
    pub delta: f64,
    /// `None` uses [`cluster_threshold`] with `gamma`.
    pub eta: Option<f64>,
    pub gamma: f64,
    pub lambda: f64,
    /// OFUL norm bound; `None` uses the largest cluster parameter norm.
    pub norm_bound: Option<f64>,
}

impl MultiAgentConfig {
    pub fn new(cluster_params: Vec<Vec<f64>>, assignment: Vec<usize>, rounds: usize) -> Self {
        Self {
            cluster_params,
            assignment,
            rounds,
            delta: 0.05,
            eta: None,
            gamma: 1.0,
            lambda: 1.0,
            norm_bound: None,
        }
    }

    /// `agents` agents assigned round-robin to the clusters.
    pub fn round_robin(cluster_params: Vec<Vec<f64>>, agents: usize, rounds: usize) -> Self {
        let k = cluster_params.len().max(1);
        Self::new(cluster_params, (0..agents).map(|i| i % k).collect(), rounds)
    }

    pub fn agents(&self) -> usize {
        self.assignment.len()
    }

    fn validate(&self, space: &ActionSpace) -> Result<()> {
        if self.cluster_params.is_empty() || self.assignment.is_empty() {
            return Err(invalid("need at least one cluster and one agent"));
        }
        for p in &self.cluster_params {
            check_dim(p, space.dim())?;
        }
        if let Some(&bad) = self.assignment.iter().find(|&&a| a >= self.cluster_params.len()) {
            return Err(invalid(format!("agent assigned to unknown cluster {bad}")));
        }
        if self.cluster_params.len() >= 2 && !(min_separation(&self.cluster_params) > 0.0) {
            return Err(invalid("cluster parameters must be pairwise distinct"));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds must be >= 1"));
        }
        Ok(())
    }

    pub fn eta(&self, d: usize) -> Result<f64> {
        match self.eta {
            Some(e) => Ok(e),
            None => cluster_threshold(self.rounds, d, self.delta, self.gamma),
        }
    }

    pub fn truth(&self) -> Partition {
        partition_from_labels(&self.assignment)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub partition: Partition,
    pub exact_recovery: bool,
    pub eta: f64,
    pub truth: Partition,
    pub assignment: Vec<usize>,
    pub per_agent_regret: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    pub separation: SeparationCheck,
}

impl ClusterReport {
    /// Index of the found component containing each agent.
    pub fn assigned_cluster(&self) -> Vec<usize> {
        let mut out = vec![0; self.estimates.len()];
        for (k, part) in self.partition.iter().enumerate() {
            for &i in part {
                out[i] = k;
            }
        }
        out
    }

    /// Columns `agent, true_cluster, assigned_cluster, est_1..est_d, cum_regret`.
    pub fn to_csv(&self) -> String {
        let d = self.estimates.first().map_or(0, Vec::len);
        let mut header: Vec<String> = ["agent", "true_cluster", "assigned_cluster"].map(String::from).to_vec();
        header.extend((1..=d).map(|i| format!("est_{i}")));
        header.push("cum_regret".into());
        let mut t = CsvTable::new(header);
        let assigned = self.assigned_cluster();
        for i in 0..self.estimates.len() {
            let mut row = vec![i.to_string(), self.assignment[i].to_string(), assigned[i].to_string()];
            row.extend(self.estimates[i].iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(self.per_agent_regret[i]));
            t.push(row);
        }
        t.render()
    }

    /// Single line, e.g. `partition={0 2}|{1 3};exact_recovery=true;eta=...`
    /// (no commas, so it can sit in a CSV cell).
    pub fn summary_line(&self) -> String {
        let parts: Vec<String> = self
            .partition
            .iter()
            .map(|p| format!("{{{}}}", p.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")))
            .collect();
        format!(
            "partition={};exact_recovery={};eta={}",
            parts.join("|"),
            self.exact_recovery,
            fmt_f64(self.eta)
        )
    }
}

/// Agent `i` plays OFUL for `cfg.rounds` rounds with [`trial_rng`]`(master_seed, i)`
/// against its cluster's parameter; the final ridge estimates are then clustered.
pub fn run_multi_agent_clustering(
    cfg: &MultiAgentConfig,
    space: &ActionSpace,
    noise_sigma: f64,
    master_seed: u64,
) -> Result<ClusterReport> {
    cfg.validate(space)?;
    let d = space.dim();
    let eta = cfg.eta(d)?;
    let b = cfg
        .norm_bound
        .unwrap_or_else(|| cfg.cluster_params.iter().map(|p| norm(p)).fold(0.0, f64::max));
    let policy = PolicyConfig::oful(cfg.delta, b)?;
    let spec = EpisodeSpec::new(cfg.rounds, cfg.lambda).with_schedule(CheckpointSchedule::none());
    let trajectories: Vec<Trajectory> = (0..cfg.agents())
        .into_par_iter()
        .map(|i| {
            let inst = BanditInstance::new(
                cfg.cluster_params[cfg.assignment[i]].clone(),
                noise_sigma,
                space.clone(),
            )?;
            run_episode(&policy, &inst, &spec, &mut trial_rng(master_seed, i as u64))
        })
        .collect::<Result<_>>()?;
    let estimates: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|t| t.final_state.theta_hat().to_vec())
        .collect();
    let partition = edge_cluster(&estimates, eta)?;
    let truth = cfg.truth();
    Ok(ClusterReport {
        exact_recovery: same_partition(&partition, &truth),
        partition,
        eta,
        truth,
        assignment: cfg.assignment.clone(),
        per_agent_regret: trajectories.iter().map(Trajectory::total_regret).collect(),
        estimates,
        separation: separation_condition(min_separation(&cfg.cluster_params), eta),
    })
}

/// Master seed of repetition `s`, strided by the agent count so agent
/// streams never overlap across repetitions.
pub fn repetition_seed(base: u64, s: usize, agents: usize) -> u64 {
    base.wrapping_add((s as u64).wrapping_mul(agents as u64))
}

/// Fraction of `seeds` repetitions (see [`repetition_seed`]) with exact recovery.
pub fn recovery_rate(
    cfg: &MultiAgentConfig,
    space: &ActionSpace,
    noise_sigma: f64,
    first_seed: u64,
    seeds: usize,
) -> Result<f64> {
    let mut hits = 0usize;
    for s in 0..seeds {
        let master = repetition_seed(first_seed, s, cfg.agents());
        if run_multi_agent_clustering(cfg, space, noise_sigma, master)?.exact_recovery {
            hits += 1;
        }
    }
    Ok(hits as f64 / seeds as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let eta = cluster_threshold(10_000, 2, 0.05, 0.5).unwrap();
        let want = 0.4 * (4.0 * 200_000f64.ln() / (0.5 * 40f64.ln())).sqrt();
        assert!((eta - want).abs() < 1e-12);
        assert!((eta - 2.0580).abs() < 1e-4);
        let doubled = cluster_threshold(10_000, 2, 0.05, 1.0).unwrap();
        assert!((eta / doubled - 2f64.sqrt()).abs() < 1e-12);
        let tail: Vec<f64> = [20, 30, 40, 50]
            .iter()
            .map(|k| cluster_threshold(1 << k, 2, 0.05, 0.5).unwrap())
            .collect();
        assert!(tail.windows(2).all(|w| w[1] < w[0] / 4.0));
        assert!(cluster_threshold(100, 1, 1.0, 0.5).is_err());
        assert!(cluster_threshold(1, 2, 0.05, 0.5).is_err());
    }

    #[test]
    fn edge_cluster_examples() {
        let p = edge_cluster(&[vec![0.0, 0.0], vec![0.1, 0.0], vec![5.0, 5.0]], 0.5).unwrap();
        assert_eq!(p, vec![vec![0, 1], vec![2]]);
        let p = edge_cluster(&[vec![0.0, 0.0], vec![0.4, 0.0], vec![0.8, 0.0]], 0.5).unwrap();
        assert_eq!(p, vec![vec![0, 1, 2]]);
        let p = edge_cluster(&[vec![0.0], vec![1.0], vec![2.0]], 0.0).unwrap();
        assert_eq!(p, vec![vec![0], vec![1], vec![2]]);
        let p = edge_cluster(&[vec![5.0], vec![0.0], vec![5.1], vec![0.2]], 0.5).unwrap();
        assert_eq!(p, vec![vec![0, 2], vec![1, 3]]);
        assert!(edge_cluster(&[], 1.0).is_err());
        assert!(edge_cluster(&[vec![0.0], vec![0.0, 1.0]], 1.0).is_err());
    }

    #[test]
    fn partition_equality_ignores_labels() {
        let a = partition_from_labels(&[7, 3, 7, 3]);
        assert_eq!(a, vec![vec![0, 2], vec![1, 3]]);
        assert!(same_partition(&a, &vec![vec![3, 1], vec![2, 0]]));
        assert!(!same_partition(&a, &vec![vec![0, 1], vec![2, 3]]));
    }

    #[test]
    fn separation_is_advisory() {
        let s = separation_condition(2.0, 0.9);
        assert!(s.satisfied && (s.required - 1.8).abs() < 1e-15);
        assert!(!separation_condition(2.0, 1.0).satisfied);
        assert_eq!(min_separation(&[vec![1.0, 0.0], vec![-1.0, 0.0]]), 2.0);
    }

    fn two_clusters(rounds: usize) -> MultiAgentConfig {
        let mut cfg = MultiAgentConfig::round_robin(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], 6, rounds);
        cfg.eta = Some(1.0);
        cfg
    }

    #[test]
    fn single_cluster_recovered() {
        let mut cfg = MultiAgentConfig::round_robin(vec![vec![0.0, 1.0]], 4, 1024);
        cfg.eta = Some(1.0);
        let space = ActionSpace::unit_sphere(2).unwrap();
        let r = run_multi_agent_clustering(&cfg, &space, 0.1, 3).unwrap();
        assert!(r.exact_recovery);
        assert_eq!(r.partition, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn two_clusters_recovered_and_regret_matches_solo_run() {
        let cfg = two_clusters(2048);
        let space = ActionSpace::unit_sphere(2).unwrap();
        let r = run_multi_agent_clustering(&cfg, &space, 0.1, 20).unwrap();
        assert!(r.exact_recovery, "{}", r.summary_line());
        assert_eq!(r.partition, vec![vec![0, 2, 4], vec![1, 3, 5]]);

        let inst = BanditInstance::new(vec![-1.0, 0.0], 0.1, space.clone()).unwrap();
        let spec = EpisodeSpec::new(2048, 1.0).with_schedule(CheckpointSchedule::none());
        let solo = run_episode(
            &PolicyConfig::oful(0.05, 1.0).unwrap(),
            &inst,
            &spec,
            &mut trial_rng(20, 3),
        )
        .unwrap();
        assert_eq!(solo.total_regret().to_bits(), r.per_agent_regret[3].to_bits());
        assert_eq!(solo.final_state.theta_hat(), r.estimates[3].as_slice());

        let mut wide = cfg.clone();
        wide.eta = Some(100.0);
        assert_eq!(
            run_multi_agent_clustering(&wide, &space, 0.1, 20)
                .unwrap()
                .partition
                .len(),
            1
        );
        assert_eq!(r.to_csv().lines().count(), 7);
        assert!(r
            .summary_line()
            .starts_with("partition={0 2 4}|{1 3 5};exact_recovery=true"));
    }

    #[test]
    fn rejects_bad_configs() {
        let space = ActionSpace::unit_sphere(2).unwrap();
        let mut cfg = two_clusters(10);
        cfg.assignment[0] = 5;
        assert!(run_multi_agent_clustering(&cfg, &space, 0.1, 0).is_err());
        let cfg = MultiAgentConfig::round_robin(vec![vec![1.0, 0.0], vec![1.0, 0.0]], 2, 10);
        assert!(run_multi_agent_clustering(&cfg, &space, 0.1, 0).is_err());
    }
}

//! Scenario execution and output writing.

use std::fs;
use std::path::{Path, PathBuf};

use crate::actionspace::ActionSpace;
use crate::bandit::{run_trials, BanditInstance, CheckpointSchedule, EpisodeSpec, Trajectory};
use crate::clustering::{repetition_seed, run_multi_agent_clustering, MultiAgentConfig};
use crate::error::{Error, Result};
use crate::fmt::{fmt_f64, CsvTable};
use crate::linalg::{axpy, norm, scale};
use crate::model_selection::{alb_runs, AlbConfig};
use crate::policies::PolicyConfig;
use crate::spectral::{
    alignment_check, average_design, default_eps, ensemble_band, eps_fraction, exponent_estimate, kl_quadratic_lhs,
    pinsker_bound, EnsembleBand, ExponentReport, SpectralTrace,
};

use super::config::{ExperimentConfig, Scenario};
use super::svg::{Plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    CsvSvg,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "csv+svg" => Ok(Self::CsvSvg),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (expected csv or csv+svg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub files: Vec<OutputFile>,
    pub warnings: Vec<String>,
}

impl ExperimentOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }
}

struct Outputs {
    files: Vec<OutputFile>,
    svg: bool,
}

impl Outputs {
    fn csv(&mut self, name: &str, contents: String) {
        self.files.push(OutputFile {
            name: name.to_string(),
            contents,
        });
    }

    fn svg(&mut self, name: &str, plot: impl FnOnce() -> Plot) {
        if self.svg {
            self.files.push(OutputFile {
                name: name.to_string(),
                contents: plot().render(),
            });
        }
    }
}

fn summary_csv(rows: &[(&str, String)]) -> String {
    let mut t = CsvTable::new(["metric", "value"]);
    for (k, v) in rows {
        t.push(vec![k.to_string(), v.clone()]);
    }
    t.render()
}

/// Runs the scenario on the current rayon pool. Nothing touches the disk.
pub fn run_experiment(cfg: &ExperimentConfig, format: OutputFormat) -> Result<ExperimentOutput> {
    let mut out = Outputs {
        files: Vec::new(),
        svg: format == OutputFormat::CsvSvg,
    };
    match cfg.scenario {
        Scenario::EigenTrace | Scenario::ConvexCounterexample => eigen_trace(cfg, &mut out)?,
        Scenario::DimSweep => dim_sweep(cfg, &mut out)?,
        Scenario::Alb => alb(cfg, &mut out)?,
        Scenario::Clustering => clustering(cfg, &mut out)?,
        Scenario::VerifyTheory => verify_theory(cfg, &mut out)?,
    }
    Ok(ExperimentOutput {
        files: out.files,
        warnings: cfg.warnings(),
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (`None`: rayon's default).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        if k == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        b = b.num_threads(k);
    }
    let pool = b.build().map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(f))
}

/// Writes every file under `dir` by staging to a temporary name and renaming.
/// Staged files are removed if any write fails.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::new();
    for f in &output.files {
        let tmp = dir.join(format!(".{}.tmp", f.name));
        if let Err(e) = fs::write(&tmp, &f.contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        staged.push((tmp, dir.join(&f.name)));
    }
    let mut written = Vec::new();
    for (tmp, dst) in staged {
        fs::rename(&tmp, &dst)?;
        written.push(dst);
    }
    Ok(written)
}

struct TraceRun {
    traces: Vec<SpectralTrace>,
    trajectories: Vec<Trajectory>,
    band: EnsembleBand,
    mean_trace: SpectralTrace,
    report: ExponentReport,
}

fn trace_run(cfg: &ExperimentConfig, d: usize) -> Result<TraceRun> {
    let theta = cfg.theta.build(d)?;
    let space = cfg.space.build(d)?;
    let policy = cfg.policy.build(&theta, cfg.delta)?;
    let inst = BanditInstance::new(theta, cfg.sigma, space)?;
    let spec = EpisodeSpec::new(cfg.n, cfg.lambda).with_schedule(cfg.schedule());
    let trajectories = run_trials(&policy, &inst, &spec, cfg.trials, cfg.seed)?;
    let traces = trajectories
        .iter()
        .map(|t| SpectralTrace::from_checkpoints(&t.checkpoints))
        .collect::<Result<Vec<_>>>()?;
    let band = if traces.len() >= 2 {
        ensemble_band(&traces, cfg.k_sigma)?
    } else {
        let t = &traces[0];
        EnsembleBand {
            rounds: t.rounds.clone(),
            lambda_min: t.lambda_min.clone(),
            mean: t.raw_exponent.clone(),
            std: vec![0.0; t.len()],
            k_sigma: cfg.k_sigma,
        }
    };
    let mean_trace = SpectralTrace::new(band.rounds.clone(), band.lambda_min.clone())?;
    let report = exponent_estimate(&mean_trace, cfg.threshold, cfg.tail_fraction)?;
    Ok(TraceRun {
        traces,
        trajectories,
        band,
        mean_trace,
        report,
    })
}

fn opt_round(r: Option<usize>) -> String {
    r.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn eigen_trace(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let run = trace_run(cfg, cfg.d)?;
    let mut traces = CsvTable::new(["trial", "round", "lambda_min", "raw_exponent"]);
    let mut trials = CsvTable::new([
        "trial",
        "fitted_slope",
        "final_lambda_min",
        "final_raw_exponent",
        "total_regret",
    ]);
    for (i, (t, tr)) in run.traces.iter().zip(&run.trajectories).enumerate() {
        for j in 0..t.len() {
            traces.push(vec![
                i.to_string(),
                t.rounds[j].to_string(),
                fmt_f64(t.lambda_min[j]),
                fmt_f64(t.raw_exponent[j]),
            ]);
        }
        trials.push(vec![
            i.to_string(),
            fmt_f64(t.fitted_slope),
            fmt_f64(*t.lambda_min.last().expect("checkpoints")),
            fmt_f64(*t.raw_exponent.last().expect("checkpoints")),
            fmt_f64(tr.total_regret()),
        ]);
    }
    let last = run.band.rounds.len() - 1;
    let mean_slope = run.traces.iter().map(|t| t.fitted_slope).sum::<f64>() / run.traces.len() as f64;
    out.csv("traces.csv", traces.render());
    out.csv("trials.csv", trials.render());
    out.csv("band.csv", run.band.to_csv());
    out.csv(
        "summary.csv",
        summary_csv(&[
            ("scenario", cfg.scenario.name().into()),
            ("seed", cfg.seed.to_string()),
            ("d", cfg.d.to_string()),
            ("n", cfg.n.to_string()),
            ("trials", cfg.trials.to_string()),
            ("final_round", run.band.rounds[last].to_string()),
            ("final_mean", fmt_f64(run.band.mean[last])),
            ("final_std", fmt_f64(run.band.std[last])),
            ("final_band_lo", fmt_f64(run.band.lower()[last])),
            ("mean_fitted_slope", fmt_f64(mean_slope)),
            ("mean_trace_fitted_slope", fmt_f64(run.mean_trace.fitted_slope)),
            ("n0_hat", opt_round(run.report.n0_hat)),
            ("gamma_hat", fmt_f64(run.report.gamma_hat)),
        ]),
    );
    let title = format!("{} (d = {})", cfg.name, cfg.d);
    out.svg("band.svg", || Plot {
        title,
        x_label: "round n".into(),
        y_label: "ln lambda_min / ln n".into(),
        series: vec![Series {
            label: format!("mean, {} sigma", cfg.k_sigma),
            x: run.band.rounds.iter().map(|&r| r as f64).collect(),
            y: run.band.mean.clone(),
            band: Some((run.band.lower(), run.band.upper())),
        }],
        benchmark: Some(0.5),
    });
    Ok(())
}

fn dim_sweep(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let mut table = CsvTable::new([
        "d",
        "n0_hat",
        "gamma_hat",
        "fitted_slope",
        "final_mean",
        "final_band_lo",
    ]);
    let mut series = Vec::new();
    for &d in &cfg.dims {
        let run = trace_run(cfg, d)?;
        let last = run.band.rounds.len() - 1;
        table.push(vec![
            d.to_string(),
            opt_round(run.report.n0_hat),
            fmt_f64(run.report.gamma_hat),
            fmt_f64(run.report.fitted_slope),
            fmt_f64(run.band.mean[last]),
            fmt_f64(run.band.lower()[last]),
        ]);
        out.csv(&format!("band_d{d}.csv"), run.band.to_csv());
        series.push(Series {
            label: format!("d = {d}"),
            x: run.band.rounds.iter().map(|&r| r as f64).collect(),
            y: run.band.mean.clone(),
            band: None,
        });
    }
    out.csv("dim_sweep.csv", table.render());
    out.svg("dim_sweep.svg", || Plot {
        title: cfg.name.clone(),
        x_label: "round n".into(),
        y_label: "mean ln lambda_min / ln n".into(),
        series,
        benchmark: Some(0.5),
    });
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn alb(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let theta = cfg.theta.build(cfg.d)?;
    let inst = BanditInstance::new(theta.clone(), cfg.sigma, cfg.space.build(cfg.d)?)?;
    let true_norm = norm(&theta);
    let mut alb_cfg = AlbConfig::new(cfg.alb.b_init, cfg.alb.n1, cfg.delta, cfg.n);
    alb_cfg.lambda = cfg.lambda;
    alb_cfg.mode = cfg.alb.mode;
    let reports = alb_runs(&inst, &alb_cfg, cfg.trials, cfg.seed)?;
    let oracle = PolicyConfig::oful(cfg.delta, true_norm)?;
    let spec = EpisodeSpec::new(cfg.n, cfg.lambda).with_schedule(CheckpointSchedule::none());
    let oracle_runs = run_trials(&oracle, &inst, &spec, cfg.trials, cfg.seed)?;

    let mut epochs = CsvTable::new(["run", "epoch", "n_i", "delta_i", "b_i", "epoch_regret", "cum_regret"]);
    let mut runs = CsvTable::new(["run", "alb_regret", "oracle_regret", "b_final"]);
    for (r, (rep, orc)) in reports.iter().zip(&oracle_runs).enumerate() {
        for e in &rep.epochs {
            epochs.push(vec![
                r.to_string(),
                e.epoch.to_string(),
                e.n_i.to_string(),
                fmt_f64(e.delta_i),
                fmt_f64(e.b_i),
                fmt_f64(e.epoch_regret),
                fmt_f64(e.cum_regret),
            ]);
        }
        runs.push(vec![
            r.to_string(),
            fmt_f64(rep.cumulative_regret),
            fmt_f64(orc.total_regret()),
            fmt_f64(*rep.b_sequence.last().expect("b_init")),
        ]);
    }
    let n_epochs = reports.iter().map(|r| r.epochs.len()).min().unwrap_or(0);
    let mut summary = CsvTable::new(["epoch", "median_gap", "frac_b_at_least_norm"]);
    for i in 0..n_epochs {
        let b: Vec<f64> = reports.iter().map(|r| r.epochs[i].b_i).collect();
        let frac = b.iter().filter(|&&x| x >= true_norm).count() as f64 / b.len() as f64;
        summary.push(vec![
            (i + 1).to_string(),
            fmt_f64(median(b.iter().map(|x| x - true_norm).collect())),
            fmt_f64(frac),
        ]);
    }
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    out.csv("alb_epochs.csv", epochs.render());
    out.csv("alb_runs.csv", runs.render());
    out.csv("alb_summary.csv", summary.render());
    out.csv(
        "summary.csv",
        summary_csv(&[
            ("scenario", "alb".into()),
            ("seed", cfg.seed.to_string()),
            ("runs", cfg.trials.to_string()),
            ("rounds", cfg.n.to_string()),
            ("true_norm", fmt_f64(true_norm)),
            (
                "mean_alb_regret",
                fmt_f64(mean(reports.iter().map(|r| r.cumulative_regret).collect())),
            ),
            (
                "mean_oracle_regret",
                fmt_f64(mean(oracle_runs.iter().map(Trajectory::total_regret).collect())),
            ),
        ]),
    );
    Ok(())
}

fn clustering(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let space = cfg.space.build(cfg.d)?;
    let mut mc = MultiAgentConfig::round_robin(cfg.cluster.params.clone(), cfg.cluster.agents, cfg.n);
    mc.delta = cfg.delta;
    mc.eta = cfg.cluster.eta;
    mc.gamma = cfg.cluster.gamma;
    mc.lambda = cfg.lambda;
    mc.norm_bound = cfg.policy.norm_bound;
    let mut agents_header = vec![
        "seed".to_string(),
        "agent".into(),
        "true_cluster".into(),
        "assigned_cluster".into(),
    ];
    agents_header.extend((1..=cfg.d).map(|i| format!("est_{i}")));
    agents_header.push("cum_regret".into());
    let mut agents = CsvTable::new(agents_header);
    let mut seeds = CsvTable::new([
        "seed",
        "partition",
        "exact_recovery",
        "components",
        "eta",
        "separation",
        "required_separation",
    ]);
    let mut hits = 0;
    for s in 0..cfg.trials {
        let master = repetition_seed(cfg.seed, s, mc.agents());
        let rep = run_multi_agent_clustering(&mc, &space, cfg.sigma, master)?;
        hits += rep.exact_recovery as usize;
        let assigned = rep.assigned_cluster();
        for i in 0..rep.estimates.len() {
            let mut row = vec![
                master.to_string(),
                i.to_string(),
                rep.assignment[i].to_string(),
                assigned[i].to_string(),
            ];
            row.extend(rep.estimates[i].iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(rep.per_agent_regret[i]));
            agents.push(row);
        }
        let line = rep.summary_line();
        let partition = line
            .split(';')
            .next()
            .unwrap_or("")
            .trim_start_matches("partition=")
            .to_string();
        seeds.push(vec![
            master.to_string(),
            partition,
            rep.exact_recovery.to_string(),
            rep.partition.len().to_string(),
            fmt_f64(rep.eta),
            fmt_f64(rep.separation.separation),
            fmt_f64(rep.separation.required),
        ]);
    }
    out.csv("clustering_agents.csv", agents.render());
    out.csv("clustering_seeds.csv", seeds.render());
    out.csv(
        "summary.csv",
        summary_csv(&[
            ("scenario", "clustering".into()),
            ("seed", cfg.seed.to_string()),
            ("seeds", cfg.trials.to_string()),
            ("agents", mc.agents().to_string()),
            ("rounds", cfg.n.to_string()),
            ("recovery_rate", fmt_f64(hits as f64 / cfg.trials as f64)),
        ]),
    );
    Ok(())
}

/// Values of the lower-bound proof chain on a Monte-Carlo expected design.
#[derive(Debug, Clone)]
pub struct TheoryChain {
    pub alignment: f64,
    pub degenerate: bool,
    pub lambda_min: f64,
    pub eps: f64,
    pub alpha: f64,
    pub disjoint: bool,
    pub kl_lhs: f64,
    pub kl_closed_form: f64,
    pub z_theta: f64,
    pub z_theta_prime: f64,
    pub pinsker: f64,
}

pub fn theory_chain(cfg: &ExperimentConfig) -> Result<TheoryChain> {
    let d = cfg.d;
    let theta = cfg.theta.build(d)?;
    let space = cfg.space.build(d)?;
    if !matches!(space, ActionSpace::UnitSphere { .. }) {
        return Err(Error::Config("verify_theory runs on the unit sphere".into()));
    }
    let theta = scale(&theta, 1.0 / norm(&theta));
    let policy = cfg.policy.build(&theta, cfg.delta)?;
    let spec = EpisodeSpec::new(cfg.n, cfg.lambda).with_schedule(CheckpointSchedule::none());
    let inst = BanditInstance::new(theta.clone(), cfg.sigma, space.clone())?;
    let runs = run_trials(&policy, &inst, &spec, cfg.trials, cfg.seed)?;
    let gbar = average_design(&runs);
    let opt = space.linear_argmax(&theta)?;
    let al = alignment_check(&gbar, &opt)?;
    let eps = default_eps(cfg.n, cfg.eps_c);
    let alpha = crate::actionspace::perturbation_alpha_sphere(eps, al.alignment)?;
    let theta_prime = axpy(&theta, alpha, &al.bottom_vector);
    let mut rng = crate::bandit::trial_rng(cfg.seed, u64::MAX);
    let disjoint = space.check_disjoint_eps_sets(&theta, &theta_prime, eps, 0, &mut rng)?;
    let kl_lhs = kl_quadratic_lhs(&theta, &theta_prime, &gbar)? / (cfg.sigma * cfg.sigma).max(f64::MIN_POSITIVE);
    let kl_closed_form = 0.5 * alpha * alpha * al.lambda_min / (cfg.sigma * cfg.sigma).max(f64::MIN_POSITIVE);

    let perturbed = BanditInstance::new(theta_prime.clone(), cfg.sigma, space.clone())?;
    let runs_prime = run_trials(&policy, &perturbed, &spec, cfg.trials, cfg.seed)?;
    let mean_z = |runs: &[Trajectory]| -> Result<f64> {
        let mut acc = 0.0;
        for t in runs {
            acc += eps_fraction(t, &theta, eps, &space)?.1;
        }
        Ok(acc / runs.len() as f64)
    };
    let z_theta = mean_z(&runs)?;
    let z_theta_prime = mean_z(&runs_prime)?;
    Ok(TheoryChain {
        alignment: al.alignment,
        degenerate: al.degenerate,
        lambda_min: al.lambda_min,
        eps,
        alpha,
        disjoint,
        kl_lhs,
        kl_closed_form,
        z_theta,
        z_theta_prime,
        pinsker: pinsker_bound(z_theta, z_theta_prime)?.bound,
    })
}

fn verify_theory(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let c = theory_chain(cfg)?;
    let mut t = CsvTable::new(["check", "value", "reference", "pass"]);
    let mut row = |name: &str, value: f64, reference: f64, pass: bool| {
        t.push(vec![
            name.to_string(),
            fmt_f64(value),
            fmt_f64(reference),
            pass.to_string(),
        ]);
    };
    row("alignment", c.alignment, 0.2, c.alignment < 0.2 && !c.degenerate);
    row("eps", c.eps, f64::NAN, true);
    row("alpha", c.alpha, f64::NAN, c.alpha.is_finite());
    row("disjoint_caps", c.disjoint as u8 as f64, 1.0, c.disjoint);
    row(
        "kl_quadratic",
        c.kl_lhs,
        c.kl_closed_form,
        (c.kl_lhs - c.kl_closed_form).abs() <= 1e-9,
    );
    row("z_theta", c.z_theta, f64::NAN, true);
    row("z_theta_prime", c.z_theta_prime, f64::NAN, true);
    row("information_inequality", c.kl_lhs, c.pinsker, c.kl_lhs >= c.pinsker);
    out.csv("verify_theory.csv", t.render());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn eigen_trace_files_and_schema() {
        let cfg = small("scenario = eigen_trace\nn = 256\ntrials = 3\ncheckpoints.count = 8");
        let out = run_experiment(&cfg, OutputFormat::CsvSvg).unwrap();
        let names: Vec<&str> = out.files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            ["traces.csv", "trials.csv", "band.csv", "summary.csv", "band.svg"]
        );
        assert!(out
            .file("band.csv")
            .unwrap()
            .starts_with("round,lambda_min,raw_exponent,mean,std,band_lo,band_hi\n"));
        let csv_only = run_experiment(&cfg, OutputFormat::Csv).unwrap();
        assert_eq!(csv_only.files.len(), 4);
    }

    #[test]
    fn single_trial_band_has_zero_width() {
        let cfg = small("scenario = eigen_trace\nn = 128\ntrials = 1\ncheckpoints.count = 6");
        let out = run_experiment(&cfg, OutputFormat::Csv).unwrap();
        let summary = out.file("summary.csv").unwrap();
        assert!(summary.contains("final_std,0.0000000000000000e0"));
    }

    #[test]
    fn writes_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let out = ExperimentOutput {
            files: vec![
                OutputFile {
                    name: "a.csv".into(),
                    contents: "x\n1\n".into(),
                },
                OutputFile {
                    name: "b.csv".into(),
                    contents: "y\n".into(),
                },
            ],
            warnings: vec![],
        };
        let paths = write_outputs(&dir.path().join("sub"), &out).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(fs::read_to_string(&paths[0]).unwrap(), "x\n1\n");
        let leftovers: Vec<_> = fs::read_dir(dir.path().join("sub"))
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = small("scenario = eigen_trace\nn = 200\ntrials = 5\ncheckpoints.count = 8");
        let one = with_workers(Some(1), || run_experiment(&cfg, OutputFormat::Csv))
            .unwrap()
            .unwrap();
        let four = with_workers(Some(4), || run_experiment(&cfg, OutputFormat::Csv))
            .unwrap()
            .unwrap();
        assert_eq!(one.files, four.files);
        assert!(with_workers(Some(0), || ()).is_err());
    }
}

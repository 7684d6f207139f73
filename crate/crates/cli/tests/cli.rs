use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "scenario = eigen_trace\nd = 3\nn = 256\ntrials = 4\ncheckpoints.count = 8\nseed = 11\n";

fn banditlab(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_banditlab"));
    cmd.args(args).env_remove("BANDITLAB_SEED");
    if let Some(s) = env_seed {
        cmd.env("BANDITLAB_SEED", s);
    }
    cmd.output().expect("spawn banditlab")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.conf");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run_into(config: &str, out: &Path, extra: &[&str], env_seed: Option<&str>) -> Output {
    let mut args = vec!["run", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    banditlab(&args, env_seed)
}

fn summary_seed(dir: &Path) -> String {
    let s = fs::read_to_string(dir.join("summary.csv")).unwrap();
    s.lines().find_map(|l| l.strip_prefix("seed,")).unwrap().to_string()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_into(&cfg, &a, &["--workers", "1", "--format", "csv+svg"], None)
        .status
        .success());
    assert!(run_into(&cfg, &b, &["--workers", "4", "--format", "csv+svg"], None)
        .status
        .success());
    let files = listing(&a);
    assert_eq!(files, listing(&b));
    assert!(files.contains(&"band.svg".to_string()));
    for f in files {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    assert!(run_into(&cfg, &out, &[], None).status.success());
    assert_eq!(listing(&out), ["band.csv", "summary.csv", "traces.csv", "trials.csv"]);
    let header = |f: &str| {
        fs::read_to_string(out.join(f))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(
        header("band.csv"),
        "round,lambda_min,raw_exponent,mean,std,band_lo,band_hi"
    );
    assert_eq!(header("traces.csv"), "trial,round,lambda_min,raw_exponent");
    assert_eq!(header("summary.csv"), "metric,value");
    let band = fs::read_to_string(out.join("band.csv")).unwrap();
    let row: Vec<&str> = band.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "16");
    // 17 significant digits in scientific notation
    let mantissa = row[1].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{}", row[1]);
    assert_eq!(
        row[1].parse::<f64>().unwrap().to_bits(),
        format!("{:.16e}", row[1].parse::<f64>().unwrap())
            .parse::<f64>()
            .unwrap()
            .to_bits()
    );
}

#[test]
fn invalid_config_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    for bad in [
        "scenario = eigen_trace\nbogus = 1\n",
        "scenario = eigen_trace\nd = 3\nd = 4\n",
        "scenario = nope\n",
        "d = 3\n",
        "scenario = eigen_trace\nn = -5\n",
    ] {
        let cfg = write_config(tmp.path(), bad);
        let o = run_into(&cfg, &out, &[], None);
        assert!(!o.status.success(), "{bad:?} accepted");
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
        assert!(!out.exists(), "{bad:?} wrote output");
    }
    let o = banditlab(&["run", "/nonexistent/exp.conf"], None);
    assert!(!o.status.success());
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = |name: &str, extra: &[&str], env: Option<&str>| {
        let out = tmp.path().join(name);
        let o = run_into(&cfg, &out, extra, env);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        summary_seed(&out)
    };
    assert_eq!(run("cfg", &[], None), "11");
    assert_eq!(run("env", &[], Some("22")), "22");
    assert_eq!(run("flag", &["--seed", "33"], Some("22")), "33");
    assert_ne!(
        fs::read(tmp.path().join("cfg/band.csv")).unwrap(),
        fs::read(tmp.path().join("env/band.csv")).unwrap()
    );
    let o = run_into(&cfg, &tmp.path().join("bad"), &[], Some("abc"));
    assert!(!o.status.success());
}

#[test]
fn alb_warns_on_small_first_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "scenario = alb\nalb.n1 = 32\nalb.epochs = 3\ntrials = 2\n");
    let o = run_into(&cfg, &tmp.path().join("o"), &[], None);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: alb.n1 = 32"));
}

#[test]
fn verify_reports_checks() {
    let o = banditlab(&["verify", "closed_forms"], None);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 4);
    assert!(text
        .lines()
        .all(|l| l.starts_with("PASS [8]") || l.starts_with("FAIL [8]")));
    // the pinned step-size target does not match its formula
    assert!(!o.status.success());

    let o = banditlab(&["verify", "nope"], None);
    assert_eq!(o.status.code(), Some(2));
}

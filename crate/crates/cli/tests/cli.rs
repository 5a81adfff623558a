use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_plate-lab")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("plate-lab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("PLATE_LAB_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn body(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn admissible_pairs_in_three_dimensions() {
    let out = scratch("pairs");
    let o = run(&out, &["admissible-pairs", "d=3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = body(&out.join("admissible-pairs_pairs.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(concat!("# plate-lab ", env!("CARGO_PKG_VERSION"), " admissible-pairs")));
    assert_eq!(lines.next(), Some("q,r"));
    let rows: Vec<&str> = lines.collect();
    for pair in ["inf,2", "2,6", "4,3"] {
        assert!(rows.contains(&pair), "missing {pair} in {rows:?}");
    }
}

#[test]
fn ground_state_closed_form() {
    let out = scratch("gs1");
    let o = run(&out, &["ground-state", "d=1"]);
    assert_eq!(o.status.code(), Some(0));
    let report = body(&out.join("ground-state_report.csv"));
    assert!(report.contains("second_order,"));
    let profile = body(&out.join("ground-state_profile.csv"));
    let first = profile.lines().nth(2).unwrap();
    let v: Vec<f64> = first.split(',').map(|x| x.parse().unwrap()).collect();
    // x = 0: v = 3/2, W = -(10/3)(9/4) + 5(3/2)
    assert_eq!(v[0], 0.0);
    assert!((v[1] - 1.5).abs() < 1e-12);
    assert!((v[2] - 0.0).abs() < 1e-12);
}

#[test]
fn same_config_and_seed_give_identical_csv() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    let args = ["kato-ponce", "count=3", "seed=11", "d=1"];
    assert_eq!(run(&a, &args).status.code(), Some(0));
    assert_eq!(run(&b, &args).status.code(), Some(0));
    for f in ["kato-ponce_ratios.csv", "kato-ponce_dilation.csv"] {
        assert_eq!(body(&a.join(f)), body(&b.join(f)), "{f}");
    }
}

#[test]
fn config_file_with_overrides() {
    let out = scratch("cfg");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("exp.cfg");
    std::fs::write(&cfg, "[run]\ncommand = admissible-pairs\n[grid]\nd = 2\n[options]\nden = 4\n").unwrap();
    let o = run(&out, &["--config", cfg.to_str().unwrap(), "d=1"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = body(&out.join("admissible-pairs_pairs.csv"));
    // d = 1 with 1/q in (1/4)Z: only (inf, 2) and (4, inf)
    assert!(csv.contains("inf,2"));
    assert!(csv.contains("4,inf"));
}

#[test]
fn config_errors_exit_with_two_and_list_everything() {
    let out = scratch("bad");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("bad.cfg");
    std::fs::write(
        &cfg,
        "[run]\ncommand = verify-strichartz\n[grid]\nd = 2\nn = 16\nn = 32\nL = 8\n[time]\nt_end = 1\nm = 5\n[indices]\nq = 2\nr = inf\n[ensemble]\ncount = 2\nseed = 1\n",
    )
    .unwrap();
    let o = run(&out, &["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("duplicate key `n` in [grid] (lines 5 and 6)"), "{err}");
    assert!(err.contains("excluded endpoint"), "{err}");
    assert!(err.contains("\"exit\":2"), "{err}");
    assert!(!out.join("verify-strichartz_quotients.csv").exists());
}

#[test]
fn budget_failures_exit_with_four() {
    let out = scratch("budget");
    let o = run(&out, &["verify-dispersive", "d=1", "n=64", "L=10", "t_end=20", "m=5"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("validity window"));
}

#[test]
fn certification_failures_exit_with_three() {
    // the closed-form residual cannot reach 1e-8 on a coarse grid
    let out = scratch("cert");
    let o = run(&out, &["ground-state", "d=1", "n=64", "L=40"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn dispersive_and_simulate_succeed() {
    let out = scratch("flows");
    let o = run(&out, &["verify-dispersive", "d=1", "n=256", "L=20", "t_end=40", "m=9"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&out, &["simulate", "d=2", "n=32", "L=10", "t_end=1", "m=11"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = body(&out.join("simulate_trajectory.csv"));
    assert_eq!(csv.lines().nth(1), Some("t,l2,h2,rel_error"));
    assert_eq!(csv.lines().count(), 2 + 11);
}

#[test]
fn counterexample_schedule() {
    let out = scratch("cx");
    let o = run(&out, &["counterexample", "d=3", "s=2", "q=4", "r=3", "alpha=2", "beta=3", "terms=50"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = body(&out.join("counterexample_schedule.csv"));
    assert_eq!(csv.lines().nth(1), Some("k,eps_k,T_k,term_k,S_k,R_k"));
    assert_eq!(csv.lines().count(), 2 + 50);
    let o = run(&out, &["counterexample", "d=3", "s=2", "q=2", "r=6", "alpha=1", "beta=3/2"]);
    assert_eq!(o.status.code(), Some(2));
}

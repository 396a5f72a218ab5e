use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
road_length_m = 2000
vehicles = 12
spacing_m = 20
duration_s = 5
access_jitter_ms = 100
initial_power_spread_dbm = 8
seed = 9
";

fn bpcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpcsim")).args(args).output().expect("spawn bpcsim")
}

fn write_scenario(dir: &Path) -> String {
    let path = dir.join("small.conf");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

fn columns(csv: &str, idx: &[usize]) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            idx.iter().map(|&i| f[i].to_owned()).collect()
        })
        .collect()
}

#[test]
fn missing_scenario_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpcsim(&["run", "/definitely/not/here.conf", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cannot read scenario"), "{err}");
}

#[test]
fn bad_scenario_lists_each_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    fs::write(&path, "road_length_m = 100\nvehicles = 0\nspacing_m = x\nduration_s = 1\nwarp = 9\n").unwrap();
    let out = bpcsim(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("line 5"), "{err}");
}

#[test]
fn run_writes_both_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = bpcsim(&["run", &scenario, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs.push((
            fs::read_to_string(out_dir.join("metrics.csv")).unwrap(),
            fs::read_to_string(out_dir.join("summary.csv")).unwrap(),
        ));
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0].0.lines().count(), 1 + 12 * 5);
    assert!(csvs[0].1.starts_with("protocol,seed,mean_delivery,mean_busy,mean_pow_u,convergence_s\nbpc,9,"));
}

#[test]
fn seed_and_protocol_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let out_dir = dir.path().join("o");
    let out = bpcsim(&["run", &scenario, "--out", out_dir.to_str().unwrap(), "--seed", "4", "--protocol", "fixed"]);
    assert!(out.status.success());
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("fixed,4,"), "{summary}");
}

#[test]
fn compare_arms_share_the_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path());
    let out_dir = dir.path().join("cmp");
    let out = bpcsim(&["compare", &scenario, "--out", out_dir.to_str().unwrap(), "--seeds", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for seed in [9, 10] {
        let bpc = fs::read_to_string(out_dir.join(format!("metrics_bpc_seed{seed}.csv"))).unwrap();
        let fixed = fs::read_to_string(out_dir.join(format!("metrics_fixed_seed{seed}.csv"))).unwrap();
        assert_eq!(columns(&bpc, &[0, 1, 6]), columns(&fixed, &[0, 1, 6]));
        assert!(columns(&fixed, &[2]).iter().all(|p| p[0] == "33.00"));
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let arms: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(arms, ["bpc", "fixed", "bpc", "fixed"]);
}

#[test]
fn golden_prints_the_example() {
    let out = bpcsim(&["golden"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("A,13,8,10,80.00,1.5385,78.46"), "{text}");
    assert!(text.contains("PD = 4"));
    assert!(text.contains("PowU = 27.5388 dBm (congested)"));
}

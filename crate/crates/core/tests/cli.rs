use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use schurlab::mtx::read_vector;
use schurlab::saddle::io::write_system;
use schurlab::saddle::random::{random_semispd_system, random_spd_system};

fn schurlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schurlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SCHURLAB_OUT")
        .output()
        .expect("binary runs")
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-300_f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[test]
fn zero_trials_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = schurlab(&["verify", "--trials", "0"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_grids_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["darcy", "--n", "8,4"][..],
        &["stokes", "--n", "1,4"],
        &["feti", "--n", "1"],
        &["alm", "--eps", "-1"],
        &["solve", "/nonexistent/system"],
    ] {
        let o = schurlab(args, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn malformed_matrix_market_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let sys = tmp.path().join("sys");
    write_system(&sys, &random_spd_system(3).unwrap()).unwrap();
    fs::write(sys.join("A.mtx"), "%%MatrixMarket matrix array real general\n2 2\n1.0\nnot-a-number\n").unwrap();
    let o = schurlab(&["solve", sys.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strategies_agree() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in 0..5u64 {
        let dir = tmp.path().join(format!("spd{seed}"));
        write_system(&dir, &random_spd_system(seed).unwrap()).unwrap();
        let mut sols = Vec::new();
        for strategy in ["direct", "schur-cg", "alm", "minres-mgw"] {
            let out = dir.join(strategy);
            let o = schurlab(&["solve", dir.to_str().unwrap(), "--strategy", strategy], &out);
            assert_eq!(o.status.code(), Some(0), "{strategy}: {}", String::from_utf8_lossy(&o.stderr));
            sols.push((read_vector(&out.join("u.mtx")).unwrap(), read_vector(&out.join("p.mtx")).unwrap()));
        }
        for (u, p) in &sols[1..] {
            assert!(rel_diff(u, &sols[0].0) <= 1e-7);
            assert!(rel_diff(p, &sols[0].1) <= 1e-7);
        }
    }
}

#[test]
fn semidefinite_systems_route_through_the_projection() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("semi");
    write_system(&dir, &random_semispd_system(11).unwrap()).unwrap();
    let mut sols = Vec::new();
    for strategy in ["direct", "schur-cg"] {
        let out = dir.join(strategy);
        let o = schurlab(&["solve", dir.to_str().unwrap(), "--strategy", strategy], &out);
        assert_eq!(o.status.code(), Some(0));
        sols.push(read_vector(&out.join("u.mtx")).unwrap());
    }
    assert!(rel_diff(&sols[1], &sols[0]) <= 1e-7);
    // the other two strategies need an invertible A
    let o = schurlab(&["solve", dir.to_str().unwrap(), "--strategy", "alm"], &dir.join("alm"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 6] = [
        &["verify", "--trials", "6", "--seed", "9"],
        &["alm", "--trials", "3"],
        &["darcy", "--n", "4,8"],
        &["stokes", "--n", "4,6"],
        &["feti", "--n", "2,4", "--precond", "--dump"],
        &["fetidp", "--M", "2,3", "--n", "2,4"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let a = tmp.path().join(format!("{i}a"));
        let b = tmp.path().join(format!("{i}b"));
        let oa = schurlab(args, &a);
        let ob = schurlab(args, &b);
        assert_eq!(oa.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&oa.stderr));
        assert_eq!(ob.status.code(), Some(0));
        let (sa, sb) = (snapshot(&a), snapshot(&b));
        assert!(!sa.is_empty());
        assert_eq!(sa, sb, "{args:?}");
    }
}

#[test]
fn out_flag_overrides_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_schurlab"))
        .args(["alm", "--trials", "1", "--eps", "1"])
        .env("SCHURLAB_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("alm.csv").exists());

    let flag_dir = tmp.path().join("flag");
    let o = Command::new(env!("CARGO_BIN_EXE_schurlab"))
        .args(["alm", "--trials", "1", "--eps", "1", "--out"])
        .arg(&flag_dir)
        .env("SCHURLAB_OUT", tmp.path().join("unused"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join("alm.csv").exists());
    assert!(!tmp.path().join("unused").exists());
}

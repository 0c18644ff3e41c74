use std::path::PathBuf;
use std::process::{Command, Output};

fn qreduce(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qreduce")).args(args).output().expect("binary runs")
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn reduce_aklt_passes_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.txt");
    let o = qreduce(&["reduce", "--protocol", "aklt-alternating", "--n", "12", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("protocol aklt-alternating\n"));
    assert!(text.contains("seed 7\n"));
    assert!(text.lines().last().unwrap().starts_with("verdict pass"));
}

#[test]
fn fnw_angle_out_of_range_is_a_usage_error() {
    let o = qreduce(&["reduce", "--protocol", "fnw", "--theta", "1.9"]);
    assert_eq!(code(&o), 1);
    let o = qreduce(&["reduce", "--protocol", "fnw"]);
    assert_eq!(code(&o), 1);
    let o = qreduce(&["frobnicate"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn wire_filter_at_quarter_pi_has_no_retries() {
    let o = qreduce(&["reduce", "--protocol", "wire-filter", "--gamma", "0.7854", "--n", "6", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\nretries 0\n"));
}

#[test]
fn oversized_chain_hits_the_cap() {
    let o = qreduce(&["reduce", "--protocol", "aklt-alternating", "--n", "40", "--seed", "1"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn verify_examples() {
    let w = data("aklt_witness_n4.json");
    let o = qreduce(&["verify", "--input", &data("aklt_xyz_n4.json"), "--target", &data("aklt_ixz_n4.json"), "--witness", &w]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = qreduce(&["verify", "--input", &data("ghz_n4.json"), "--target", &data("cluster_n4.json")]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("verdict fail"));
    let o = qreduce(&["verify", "--input", &data("cluster_n4.json"), "--target", &data("cluster_n4.json")]);
    assert_eq!(code(&o), 0);
    let o = qreduce(&["verify", "--input", &data("cluster_n4.json"), "--target", &data("aklt_xyz_n4.json")]);
    assert_eq!(code(&o), 1);
    let o = qreduce(&["verify", "--input", "/nonexistent.json", "--target", &data("cluster_n4.json")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn peps_grid_reduces_to_cluster() {
    let o = qreduce(&["peps", "--lattice", &data("grid2x2.json"), "--seed", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("fidelity 1.00000000000e0"));
    let o = qreduce(&["peps", "--lattice", &data("chain3_legs.json"), "--exhaustive"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("assignments 27"));
}

#[test]
fn syncwalk_odd_diff_never_meets() {
    let o = qreduce(&["syncwalk", "--diff", "3", "--trials", "10000", "--cap", "200", "--seed", "5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[9], "0");
    let o = qreduce(&["syncwalk", "--diff", "5", "--cap", "3"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn outputs_are_byte_identical_for_equal_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["cost", "--protocol", "aklt-alternating", "--n", "8,12", "--trials", "300", "--seed", "3"],
        &["reduce", "--protocol", "fnw", "--theta", "0.6", "--n", "10", "--seed", "4"],
        &["syncwalk", "--diff", "2", "--trials", "500", "--cap", "40", "--seed", "5"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut files = Vec::new();
        for round in 0..2 {
            let p = dir.path().join(format!("{k}-{round}"));
            let mut a: Vec<&str> = args.to_vec();
            let ps = p.to_str().unwrap().to_string();
            a.extend(["--out", &ps]);
            assert_eq!(code(&qreduce(&a)), 0);
            files.push(std::fs::read(&p).unwrap());
        }
        assert_eq!(files[0], files[1]);
    }
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddcolor")).args(args).output().unwrap()
}

fn run_on(cmd: &str, file: &str, extra: &[&str]) -> Output {
    let path = data(file);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ddcolor-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn bounds_lp_values() {
    let k4 = run_on("bounds", "k4.col", &["--mode", "lp", "--json"]);
    assert_eq!(k4.status.code(), Some(0));
    let j = json(&k4);
    assert_eq!((j["chi_f"]["num"].as_str(), j["chi_f"]["den"].as_str()), (Some("4"), Some("1")));
    assert_eq!(j["instance"], "k4");

    let c5 = run_on("bounds", "c5.col", &["--mode", "lp", "--json"]);
    let j = json(&c5);
    assert_eq!((j["chi_f"]["num"].as_str(), j["chi_f"]["den"].as_str()), (Some("5"), Some("2")));
    assert_eq!(j["chi_lb"], 3);
    assert!(j["ilp_status"].is_null());

    let text = stdout(&run_on("bounds", "c5.col", &["--mode", "lp"]));
    assert!(text.contains("chi_f        5/2 (2.50)"), "{text}");
}

#[test]
fn bounds_both_on_myciel3() {
    let o = run_on("bounds", "myciel3.col", &["--mode", "both", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!((j["chi_lb"].as_u64(), j["chi_ub"].as_u64()), (Some(4), Some(4)));
    assert_eq!(j["ilp_status"], "optimal");
    assert!(j["dd_nodes"].as_u64().unwrap() > 0);
    for key in [
        "instance", "n", "m", "dd_nodes", "dd_arcs", "dd_time_s", "chi_f", "chi_lb", "chi_ub", "dsatur_ub",
        "ilp_status", "solve_time_s",
    ] {
        assert!(j.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn json_is_stable_apart_from_times() {
    let strip = |mut j: serde_json::Value| {
        j["dd_time_s"] = 0.into();
        j["solve_time_s"] = 0.into();
        j
    };
    let a = strip(json(&run_on("bounds", "petersen.col", &["--json"])));
    let b = strip(json(&run_on("bounds", "petersen.col", &["--json"])));
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    assert_eq!(run_on("bounds", "k4.col", &[]).status.code(), Some(0));

    let bad = temp_file("bad.col", "p edge x\n");
    let o = run(&["bounds", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["bounds", "/nonexistent/graph.col"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run_on("bounds", "queen5_5.col", &["--node-limit", "10"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("dsatur_ub    5"));

    let o = run_on("dump", "queen5_5.col", &["--node-limit", "10"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run_on("bounds", "queen6_6.col", &["--time-limit", "0", "--json"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&o)["status"], "timeout");
}

#[test]
fn color_output() {
    let o = run_on("color", "fig1.col", &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("c status optimal"));
    assert!(text.contains("c verified proper"));
    assert!(text.contains("c colors 3"));
    let colors: Vec<(usize, usize)> = text
        .lines()
        .filter_map(|l| l.strip_prefix("s "))
        .map(|l| {
            let (v, c) = l.split_once(' ').unwrap();
            (v.parse().unwrap(), c.parse().unwrap())
        })
        .collect();
    assert_eq!(colors.len(), 4);
    for (u, v) in [(1, 3), (3, 4), (4, 2), (2, 1), (3, 2)] {
        assert_ne!(colors[u - 1].1, colors[v - 1].1);
    }

    let text = stdout(&run_on("color", "edgeless5.col", &[]));
    assert!(text.contains("c colors 1"));
}

#[test]
fn verify_cover_command() {
    let graph = data("fig1.col");
    let good = temp_file("good.cov", "w=1 S={1,4}\nw=1 S={2}\nw=1 S={3}\ntotal=3\n");
    let o = run(&["verify-cover", graph.to_str().unwrap(), good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("total    3"));

    let unstable = temp_file("unstable.cov", "w=1 S={2,3}\nw=1 S={1,4}\n");
    let o = run(&["verify-cover", graph.to_str().unwrap(), unstable.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("contains edge 2-3"));

    let garbage = temp_file("garbage.cov", "weight one\n");
    let o = run(&["verify-cover", graph.to_str().unwrap(), garbage.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_is_deterministic() {
    let args = ["check", "--max-n", "9", "--trials", "40", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("result pass (40/40 trials)"));
}

#[test]
fn check_with_no_trials_passes() {
    let o = run(&["check", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("result pass (0/0 trials)"));
}

#[test]
fn dump_lists_nodes_and_arcs() {
    let text = stdout(&run_on("dump", "fig1.col", &[]));
    assert_eq!(text.lines().filter(|l| l.starts_with("node ")).count(), 9);
    assert!(text.lines().any(|l| l.starts_with("arc ")));
}

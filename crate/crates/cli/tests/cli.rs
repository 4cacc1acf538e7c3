use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pexp-slicer")).args(args).env_remove("PEXP_COLOR").output().expect("binary runs")
}

fn run_on(args: &[&str], name: &str) -> Output {
    let path = fixture(name);
    let mut all = args.to_vec();
    all.push(path.to_str().unwrap());
    run(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_valid_spec_exits_zero() {
    let o = run_on(&["check"], "coin_game.pexp");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("verification conditions valid"));
    assert!(!stdout(&o).contains("INVALID"));
}

#[test]
fn check_reports_witness_for_weak_variant_decrease() {
    let o = run_on(&["check"], "coin_game_eps1.pexp");
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("INVALID"));
    assert!(out.contains("witness: invalid at {"));
    assert!(out.contains("variant-decrease"));
}

#[test]
fn slice_refuses_programs_violating_their_spec() {
    let o = run_on(&["slice"], "coin_game_eps1.pexp");
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not satisfy"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["check", "/nonexistent/file.pexp"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate", "x"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run_on(&["oracle", "--tolerance", "0"], "jones.pexp").status.code(), Some(2));
    assert_eq!(run_on(&["graph", "--format", "csv"], "jones.pexp").status.code(), Some(2));
    assert_eq!(run_on(&["slice", "--skip-weight", "abc"], "jones.pexp").status.code(), Some(2));
}

#[test]
fn parse_errors_exit_two() {
    let dir = std::env::temp_dir().join(format!("pexp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.pexp");
    std::fs::write(&bad, "domains { x in {0, 1}; }\nspec partial pre{ 1 } post{ 1 }\nprogram { x := ; }\n").unwrap();
    let o = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn mode_flag_overrides_file() {
    // the partial fixture has no termination annotations
    let o = run_on(&["check", "--mode", "total"], "prog1.pexp");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("mode: total"));
}

#[test]
fn loop_free_program_has_one_vc() {
    let o = run_on(&["vcs"], "forward.pexp");
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["vcs"].as_array().unwrap().len(), 1);
    assert_eq!(v["mode"], "partial");
}

#[test]
fn graph_marks_shortcuts() {
    let o = run_on(&["graph"], "randint_weak.pexp");
    assert_eq!(o.status.code(), Some(0));
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("style=bold"));
    assert!(dot.trim_end().ends_with('}'));
}

#[test]
fn graph_json_is_well_formed() {
    let o = run_on(&["graph", "--format", "json"], "jones.pexp");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["nodes"].as_array().is_some_and(|n| !n.is_empty()));
    assert!(v["edges"].as_array().is_some_and(|e| !e.is_empty()));
}

#[test]
fn slice_text_and_json_agree() {
    let text = stdout(&run_on(&["slice"], "prog1.pexp"));
    let (prog, report) = text.split_once("\n--\n").unwrap();
    assert_eq!(prog.trim(), "x := 3/2 - y*y");
    assert!(report.contains("verified: yes"));
    let json = run_on(&["slice", "--format", "json"], "prog1.pexp");
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["program"].as_str().unwrap().trim(), prog.trim());
    assert_eq!(v["verified"], true);
    assert_eq!(v["engine"], "graph");
}

#[test]
fn greedy_engine_is_selectable() {
    let o = run_on(&["slice", "--greedy", "--format", "json"], "jones.pexp");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["engine"], "greedy");
    assert_eq!(v["verified"], true);
}

#[test]
fn oracle_csv_has_a_row_per_state() {
    let o = run_on(&["oracle"], "jones.pexp");
    assert_eq!(stdout(&o), "x,value\n0,1/2\n1,1/2\n");
}

#[test]
fn sampled_oracle_is_seeded() {
    let a = stdout(&run_on(&["oracle", "--samples", "400", "--seed", "3"], "jones.pexp"));
    let b = stdout(&run_on(&["oracle", "--samples", "400", "--seed", "3"], "jones.pexp"));
    assert_eq!(a, b);
    for line in a.lines().skip(1) {
        let est: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((est - 0.5).abs() < 0.1, "{line}");
    }
}

#[test]
fn outputs_are_deterministic() {
    for cmd in ["slice", "graph", "vcs", "check"] {
        assert_eq!(run_on(&[cmd], "bayes_tl.pexp").stdout, run_on(&[cmd], "bayes_tl.pexp").stdout, "{cmd}");
    }
}

#[test]
fn color_only_when_requested() {
    let path = fixture("jones.pexp");
    let plain = run(&["check", path.to_str().unwrap()]);
    assert!(!stdout(&plain).contains('\x1b'));
    let colored = Command::new(env!("CARGO_BIN_EXE_pexp-slicer"))
        .args(["check", path.to_str().unwrap()])
        .env("PEXP_COLOR", "1")
        .output()
        .unwrap();
    assert!(stdout(&colored).contains("\x1b[32mvalid"));
}

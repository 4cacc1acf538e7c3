mod support;

use pexp_core::corpus::{corpus_space, Case};
use pexp_core::lang::{parse_expectation, parse_prog, parse_program, pretty_print, Mode};
use pexp_core::semantics::{simulate, wlp_eval, wp_eval};
use pexp_core::slicegraph::{build_lcfg, build_slice_graph, export_dot, GraphOptions};
use pexp_core::slicing::satisfies;
use num_traits::ToPrimitive;

#[test]
fn fixtures_survive_a_print_parse_round_trip() {
    for name in support::fixture_names() {
        let file = parse_program(&support::fixture(&name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let printed = pretty_print(&file.prog);
        let again = parse_prog(&printed).unwrap_or_else(|e| panic!("{name} reprinted: {e}\n{printed}"));
        assert_eq!(again, file.prog, "{name}");
        assert_eq!(pretty_print(&again), printed, "{name}");
    }
}

#[test]
fn fixture_specs_hold_except_the_weak_variant() {
    for name in support::fixture_names() {
        let f = parse_program(&support::fixture(&name)).unwrap();
        let ok = satisfies(&f.pre, &f.prog, &f.post, f.mode, &f.space).unwrap();
        assert_eq!(ok, name != "coin_game_eps1.pexp", "{name}");
    }
}

/// Loop at the very end whose exit condition alone breaks the spec: the
/// body, prefix and (empty) suffix all hold, the whole verdict does not.
#[test]
fn last_loop_needs_its_exit_entailment() {
    let source = "x := 0; while (x = 1) @invariant{1} do { skip }".to_string();
    let c = Case {
        prog: parse_prog(&source).unwrap(),
        source,
        space: corpus_space(1),
        pre: parse_expectation("0").unwrap(),
        post: parse_expectation("[x = 1]").unwrap(),
        mode: Mode::Partial,
    };
    let d = support::decomposition(&c);
    assert_eq!(d.checked, 1);
    assert_eq!(d.last_loop_refuted, 1);
    assert!(d.violations.is_empty(), "{:?}", d.violations);
}

#[test]
fn oracle_rejects_runs_leaving_the_domains() {
    // coin_game counts flips without bound; n := n + 1 eventually leaves {0..3}
    let f = parse_program(&support::fixture("coin_game.pexp")).unwrap();
    assert!(wp_eval(&f.prog, &f.post, &f.space, 1e-12, 1000).is_err());
}

#[test]
fn sampled_runs_match_the_oracle() {
    for (name, samples) in [("jones.pexp", 4000), ("geometric.pexp", 500), ("prog1.pexp", 400)] {
        let f = parse_program(&support::fixture(name)).unwrap();
        let eval = if f.mode == Mode::Total { wp_eval } else { wlp_eval };
        let table = eval(&f.prog, &f.post, &f.space, 1e-12, 1_000_000).unwrap();
        for (i, (s, v)) in table.iter().enumerate() {
            let sim = simulate(&f.prog, &s, samples, 11 + i as u64).unwrap();
            assert_eq!(sim.censored, 0);
            let hits: f64 = sim
                .outcomes()
                .iter()
                .map(|(t, n)| f.post.evaluate(t).unwrap().to_f64().unwrap() * *n as f64)
                .sum();
            let est = hits / samples as f64;
            // five standard deviations of a Bernoulli mean at worst
            let tol = 5.0 * (0.25 / samples as f64).sqrt();
            assert!((est - v.to_f64()).abs() <= tol, "{name} at {s}: sampled {est}, oracle {v}");
        }
    }
}

#[test]
fn dot_export_lists_every_node_and_edge() {
    let f = parse_program(&support::fixture("randint_weak.pexp")).unwrap();
    let sg = build_slice_graph(&f.prog, &f.pre, &f.post, f.mode, &f.space, &GraphOptions::default()).unwrap();
    let dot = export_dot(&sg);
    assert!(dot.starts_with("digraph slice_graph {"));
    assert!(dot.ends_with("}\n"));
    let node_lines = dot
        .lines()
        .filter(|l| !l.contains("->") && l.trim_start().strip_prefix('n').is_some_and(|r| r.starts_with(|c: char| c.is_ascii_digit())))
        .count();
    let edge_lines = dot.lines().filter(|l| l.contains("->")).count();
    assert_eq!(node_lines, sg.nodes.len());
    assert_eq!(edge_lines, sg.edges.len());
    assert_eq!(dot.matches("style=bold").count(), sg.edges.iter().filter(|e| e.shortcut).count());
    assert!(sg.edges.iter().any(|e| e.shortcut));
}

#[test]
fn lcfg_has_no_shortcuts_and_sits_inside_the_slice_graph() {
    for name in support::fixture_names() {
        let f = parse_program(&support::fixture(&name)).unwrap();
        let lcfg = build_lcfg(&f.prog, &f.post, f.mode).unwrap();
        assert!(lcfg.edges.iter().all(|e| !e.shortcut), "{name}");
        assert!(lcfg.represents(&f.prog), "{name}");
        if name == "coin_game_eps1.pexp" {
            continue;
        }
        let sg = build_slice_graph(&f.prog, &f.pre, &f.post, f.mode, &f.space, &GraphOptions::default()).unwrap();
        let flow = sg.edges.iter().filter(|e| !e.shortcut).count();
        assert_eq!(flow, lcfg.edges.len(), "{name}");
        assert!(sg.min_slice().atomic_count <= f.prog.atomic_count(), "{name}");
    }
}

//! Commands behind the `pexp-slicer` binary. Each command takes the text
//! of a program file and a [`RunConfig`] and returns what to print and the
//! exit code, so they can be tested without spawning a process.

use std::fmt::Write as _;

use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use pexp_core::lang::parser::check_total_annotations;
use pexp_core::lang::{parse_arith, parse_program, pretty_print, Mode, Program, Q};
use pexp_core::semantics::{simulate, wlp_eval, wp_eval, TabulatedExpectation, DEFAULT_MAX_ITER};
use pexp_core::slicegraph::{build_slice_graph, export_dot, GraphOptions};
use pexp_core::slicing::{satisfies, slice_fixpoint, verify_slice, Removal, SliceOptions};
use pexp_core::vcgen::{discharge, vcg_in};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Dot,
    Csv,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::Dot => "dot",
            Format::Csv => "csv",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Overrides the mode of the file's `spec` line.
    pub mode: Option<Mode>,
    pub tolerance: Q,
    pub max_iter: usize,
    pub skip_weight: Q,
    pub allow_trivial_loop_slices: bool,
    pub seed: u64,
    /// Each command has its own default when unset.
    pub output_format: Option<Format>,
    pub greedy: bool,
    /// Sampled runs per state for the oracle's empirical column; 0 disables it.
    pub samples: u64,
    pub color: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            tolerance: Q::new(1.into(), 1_000_000_000.into()),
            max_iter: DEFAULT_MAX_ITER,
            skip_weight: Q::new(1.into(), 2.into()),
            allow_trivial_loop_slices: false,
            seed: 0,
            output_format: None,
            greedy: false,
            samples: 0,
            color: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.tolerance <= Q::zero() {
            return Err("tolerance must be positive".into());
        }
        if self.max_iter == 0 {
            return Err("max-iter must be at least 1".into());
        }
        if self.skip_weight < Q::zero() {
            return Err("skip weight must not be negative".into());
        }
        Ok(())
    }
}

/// Parses a non-negative rational such as `1/2`, `0.25` or `1e-9`.
pub fn parse_rational(s: &str) -> Option<Q> {
    let q = match parse_arith(s).ok().and_then(|a| a.as_const().cloned()) {
        Some(q) => q,
        None => Q::from_float(s.trim().parse::<f64>().ok()?)?,
    };
    (q >= Q::zero()).then_some(q)
}

/// What a command prints and how it exits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn usage(msg: impl std::fmt::Display) -> Outcome {
        Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {msg}\n") }
    }
}

fn paint(on: bool, code: &str, s: &str) -> String {
    if on {
        format!("\x1b[{code}m{s}\x1b[0m")
    } else {
        s.to_string()
    }
}

struct Loaded {
    file: Program,
    mode: Mode,
}

fn load(src: &str, cfg: &RunConfig) -> Result<Loaded, Outcome> {
    cfg.validate().map_err(Outcome::usage)?;
    let file = parse_program(src).map_err(Outcome::usage)?;
    let mode = cfg.mode.unwrap_or(file.mode);
    if mode == Mode::Total {
        check_total_annotations(&file.prog).map_err(Outcome::usage)?;
    }
    Ok(Loaded { file, mode })
}

fn format_or(cfg: &RunConfig, default: Format, allowed: &[Format]) -> Result<Format, Outcome> {
    let f = cfg.output_format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Outcome::usage(format!("format `{}` is not available for this command", f.name())))
    }
}

fn json_out(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
    s.push('\n');
    s
}

/// Discharges every VC of the file's specification.
pub fn cmd_check(src: &str, cfg: &RunConfig) -> Outcome {
    let run = || -> Result<Outcome, Outcome> {
        let Loaded { file, mode } = load(src, cfg)?;
        let format = format_or(cfg, Format::Text, &[Format::Text, Format::Json])?;
        let vcs = vcg_in(mode, &file.pre, &file.prog, &file.post, &[]).map_err(Outcome::usage)?;
        let d = discharge(&vcs, &file.space);
        let code = if d.is_valid() { EXIT_OK } else { EXIT_FAIL };
        let stdout = match format {
            Format::Json => {
                let mut v = d.to_json();
                v["mode"] = json!(mode.to_string());
                json_out(v)
            }
            _ => {
                let mut out = format!("mode: {mode}\n");
                for (i, (vc, verdict)) in d.results.iter().enumerate() {
                    let tag = if verdict.is_valid() {
                        paint(cfg.color, "32", "valid")
                    } else {
                        paint(cfg.color, "31", "INVALID")
                    };
                    let _ = writeln!(out, "vc {}: {tag}  {vc}", i + 1);
                    for o in &vc.origins {
                        let _ = writeln!(out, "  from {o}");
                    }
                    if !verdict.is_valid() {
                        let _ = writeln!(out, "  witness: {verdict}");
                    }
                }
                let valid = d.results.iter().filter(|(_, e)| e.is_valid()).count();
                let _ = writeln!(out, "{valid} of {} verification conditions valid", d.results.len());
                out
            }
        };
        Ok(Outcome { code, stdout, stderr: String::new() })
    };
    run().unwrap_or_else(|e| e)
}

fn removal_lines(out: &mut String, removals: &[Removal]) {
    if removals.is_empty() {
        out.push_str("removed: nothing\n");
        return;
    }
    out.push_str("removed:\n");
    for r in removals {
        let _ = writeln!(out, "  {}: {}", r.path, r.removed.join("; "));
        let _ = writeln!(out, "    because {}", r.justification);
    }
}

/// Least slice through the slice graph, or greedy slicing with `--greedy`.
pub fn cmd_slice(src: &str, cfg: &RunConfig) -> Outcome {
    let run = || -> Result<Outcome, Outcome> {
        let Loaded { file, mode } = load(src, cfg)?;
        let format = format_or(cfg, Format::Text, &[Format::Text, Format::Json])?;
        let (f, p, g, space) = (&file.pre, &file.prog, &file.post, &file.space);
        if !satisfies(f, p, g, mode, space).map_err(Outcome::usage)? {
            return Err(Outcome {
                code: EXIT_FAIL,
                stdout: String::new(),
                stderr: format!("error: the program does not satisfy its {mode} specification; run `check` for details\n"),
            });
        }
        let opts = SliceOptions { allow_trivial_loop_slices: cfg.allow_trivial_loop_slices };
        let (engine, program, removals, weight) = if cfg.greedy {
            let r = slice_fixpoint(p, f, g, mode, space, &opts).map_err(Outcome::usage)?;
            ("greedy", r.program, r.removals, None)
        } else {
            let gopts = GraphOptions { skip_weight: cfg.skip_weight.clone(), slice: opts };
            let m = build_slice_graph(p, f, g, mode, space, &gopts).map_err(Outcome::usage)?.min_slice();
            ("graph", m.program, m.removals, Some(m.weight))
        };
        let verified = verify_slice(&program, f, g, p, mode, space).map_err(Outcome::usage)?;
        let code = if verified { EXIT_OK } else { EXIT_FAIL };
        let stdout = match format {
            Format::Json => json_out(json!({
                "version": 1,
                "mode": mode.to_string(),
                "engine": engine,
                "program": pretty_print(&program),
                "weight": weight.as_ref().map(|w| w.to_string()),
                "atomic_count": program.atomic_count(),
                "original_atomic_count": p.atomic_count(),
                "removals": removals.iter().map(Removal::to_json).collect::<Vec<_>>(),
                "verified": verified,
            })),
            _ => {
                let mut out = pretty_print(&program);
                out.push_str("\n--\n");
                let _ = writeln!(out, "mode: {mode}, engine: {engine}");
                if let Some(w) = &weight {
                    let _ = writeln!(out, "weight: {w}");
                }
                let _ = writeln!(out, "atomic instructions: {} of {}", program.atomic_count(), p.atomic_count());
                removal_lines(&mut out, &removals);
                let _ = writeln!(out, "verified: {}", if verified { "yes" } else { "NO" });
                out
            }
        };
        Ok(Outcome { code, stdout, stderr: String::new() })
    };
    run().unwrap_or_else(|e| e)
}

/// Dumps the VCs without discharging them.
pub fn cmd_vcs(src: &str, cfg: &RunConfig) -> Outcome {
    let run = || -> Result<Outcome, Outcome> {
        let Loaded { file, mode } = load(src, cfg)?;
        let format = format_or(cfg, Format::Json, &[Format::Text, Format::Json])?;
        let vcs = vcg_in(mode, &file.pre, &file.prog, &file.post, &[]).map_err(Outcome::usage)?;
        Ok(Outcome::ok(match format {
            Format::Json => {
                let mut v = vcs.to_json();
                v["mode"] = json!(mode.to_string());
                json_out(v)
            }
            _ => vcs.iter().map(|vc| format!("{vc}\n")).collect(),
        }))
    };
    run().unwrap_or_else(|e| e)
}

/// The slice graph as DOT (default) or JSON.
pub fn cmd_graph(src: &str, cfg: &RunConfig) -> Outcome {
    let run = || -> Result<Outcome, Outcome> {
        let Loaded { file, mode } = load(src, cfg)?;
        let format = format_or(cfg, Format::Dot, &[Format::Dot, Format::Json])?;
        let gopts = GraphOptions {
            skip_weight: cfg.skip_weight.clone(),
            slice: SliceOptions { allow_trivial_loop_slices: cfg.allow_trivial_loop_slices },
        };
        let sg = build_slice_graph(&file.prog, &file.pre, &file.post, mode, &file.space, &gopts)
            .map_err(Outcome::usage)?;
        Ok(Outcome::ok(match format {
            Format::Json => json_out(sg.to_json()),
            _ => export_dot(&sg),
        }))
    };
    run().unwrap_or_else(|e| e)
}

/// Tabulates wp (total mode) or wlp (partial mode) of the post-expectation.
pub fn cmd_oracle(src: &str, cfg: &RunConfig) -> Outcome {
    let run = || -> Result<Outcome, Outcome> {
        let Loaded { file, mode } = load(src, cfg)?;
        let format = format_or(cfg, Format::Csv, &[Format::Csv, Format::Text, Format::Json])?;
        let tol = cfg.tolerance.to_f64().unwrap_or(f64::MIN_POSITIVE);
        let eval = if mode == Mode::Total { wp_eval } else { wlp_eval };
        let table = eval(&file.prog, &file.post, &file.space, tol, cfg.max_iter).map_err(Outcome::usage)?;
        let estimates = if cfg.samples > 0 { Some(estimate(&file, &table, cfg)?) } else { None };
        let mut stderr = String::new();
        if !table.converged {
            let _ = writeln!(stderr, "warning: no convergence after {} iterations", table.iterations);
        }
        let stdout = match format {
            Format::Json => {
                let mut v = table.to_json();
                v["transformer"] = json!(if mode == Mode::Total { "wp" } else { "wlp" });
                if let (Some(es), Some(rows)) = (&estimates, v["rows"].as_array_mut()) {
                    for (row, e) in rows.iter_mut().zip(es) {
                        row["estimate"] = json!(e);
                    }
                }
                json_out(v)
            }
            Format::Text => {
                let vars: Vec<&str> = table.space().vars().collect();
                let mut out = String::new();
                for (i, (s, v)) in table.iter().enumerate() {
                    let cells: Vec<String> = vars.iter().map(|x| format!("{x}={}", s.get(x).expect("total state"))).collect();
                    let _ = write!(out, "{}  ->  {v}", cells.join(" "));
                    if let Some(es) = &estimates {
                        let _ = write!(out, "  (sampled {:.6})", es[i]);
                    }
                    out.push('\n');
                }
                out
            }
            _ => {
                let mut out: String = table.space().vars().map(|x| format!("{x},")).collect();
                out.push_str(if estimates.is_some() { "value,estimate\n" } else { "value\n" });
                for (i, (s, v)) in table.iter().enumerate() {
                    for (_, q) in s.iter() {
                        let _ = write!(out, "{q},");
                    }
                    let _ = write!(out, "{v}");
                    if let Some(es) = &estimates {
                        let _ = write!(out, ",{:.6}", es[i]);
                    }
                    out.push('\n');
                }
                out
            }
        };
        Ok(Outcome { code: EXIT_OK, stdout, stderr })
    };
    run().unwrap_or_else(|e| e)
}

/// Monte Carlo estimate of the expected post-expectation from each state.
fn estimate(file: &Program, table: &TabulatedExpectation, cfg: &RunConfig) -> Result<Vec<f64>, Outcome> {
    let mut out = Vec::new();
    for (i, (s, _)) in table.iter().enumerate() {
        let sim = simulate(&file.prog, &s, cfg.samples, cfg.seed.wrapping_add(i as u64)).map_err(Outcome::usage)?;
        let mut total = 0.0;
        for (t, n) in sim.outcomes() {
            let v = file.post.evaluate(t).map_err(Outcome::usage)?;
            total += v.to_f64().unwrap_or(0.0) * *n as f64;
        }
        out.push(total / cfg.samples as f64);
    }
    Ok(out)
}

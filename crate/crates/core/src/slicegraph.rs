//! Labelled control-flow graphs, slice graphs and least slices.
//!
//! Every sequence of the program (the root, each branch, each loop body)
//! is a region. Edges belong to the region whose instructions they
//! connect; a compound instruction's in- and out-node are shared with its
//! nested regions. Shortcut edges skip spans that the region's local
//! specifications allow to remove.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::expectation::Expectation;
use crate::lang::ast::{qr, Bool, Inst, Prog, Q};
use crate::lang::printer::{bool_to_string, inst_to_string};
use crate::lang::state::StateSpace;
use crate::lang::Mode;
use crate::slicing::{analyze, span_allowed, Checker, Region, Removal, SliceError, SliceOptions, Step, SubprogramPath};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Start,
    End,
    /// `inserted` marks skip nodes added for whole-sequence bypasses.
    Skip { inserted: bool },
    Atomic(Inst),
    Bif(Bool),
    Fib,
    Pif(Q),
    Fip,
    Don(Bool),
    Od,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Instruction path, empty for start/end and inserted skips.
    pub path: String,
}

impl Node {
    pub fn label(&self) -> String {
        match &self.kind {
            NodeKind::Start => "start".into(),
            NodeKind::End => "end".into(),
            NodeKind::Skip { .. } => "skip".into(),
            NodeKind::Atomic(i) => inst_to_string(i),
            NodeKind::Bif(g) => format!("if ({})", bool_to_string(g)),
            NodeKind::Fib => "fi".into(),
            NodeKind::Pif(p) => format!("pif [{p}]"),
            NodeKind::Fip => "fip".into(),
            NodeKind::Don(g) => format!("while ({})", bool_to_string(g)),
            NodeKind::Od => "od".into(),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            NodeKind::Start => "start",
            NodeKind::End => "end",
            NodeKind::Skip { .. } => "skip",
            NodeKind::Atomic(_) => "atomic",
            NodeKind::Bif(_) => "bif",
            NodeKind::Fib => "fib",
            NodeKind::Pif(_) => "pif",
            NodeKind::Fip => "fip",
            NodeKind::Don(_) => "don",
            NodeKind::Od => "od",
        }
    }

    fn is_skip(&self) -> bool {
        matches!(self.kind, NodeKind::Skip { .. })
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// One expectation per local specification of the region; empty on shortcuts.
    pub labels: Vec<Expectation>,
    pub weight: Q,
    pub shortcut: bool,
    /// Index of the owning region.
    pub region: usize,
    /// Instructions `(j, k)` of the region bypassed by a shortcut.
    pub span: Option<(usize, usize)>,
    pub justification: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RegionInfo {
    pub path: SubprogramPath,
    pub prog: Prog,
    pub entry: NodeId,
    pub exit: NodeId,
    /// in/out node of each instruction (equal for atomic ones)
    pub ins: Vec<NodeId>,
    pub outs: Vec<NodeId>,
    pub children: Vec<(usize, Vec<usize>)>,
}

impl RegionInfo {
    fn children_of(&self, j: usize) -> &[usize] {
        self.children.iter().find(|(k, _)| *k == j).map_or(&[], |(_, c)| c)
    }
}

#[derive(Clone, Debug)]
pub struct GraphOptions {
    pub skip_weight: Q,
    pub slice: SliceOptions,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { skip_weight: qr(1, 2), slice: SliceOptions::default() }
    }
}

/// A labelled control-flow graph, possibly extended with shortcut edges.
#[derive(Clone, Debug)]
pub struct SliceGraph {
    pub mode: Mode,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub regions: Vec<RegionInfo>,
    pub start: NodeId,
    pub end: NodeId,
}

/// The labelled control-flow graph is a slice graph without shortcuts.
pub type Lcfg = SliceGraph;

struct Builder<'a> {
    regions: &'a [Region],
    nodes: Vec<Node>,
    infos: Vec<RegionInfo>,
}

impl Builder<'_> {
    fn node(&mut self, kind: NodeKind, path: String) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { id, kind, path });
        id
    }

    /// Allocates the nodes of region `r` in reading order; a closing node
    /// comes after everything nested in its instruction.
    fn alloc(&mut self, r: usize, entry: NodeId, exit: NodeId) {
        let reg = &self.regions[r];
        let (mut ins, mut outs) = (Vec::new(), Vec::new());
        for (k, inst) in reg.prog.insts().iter().enumerate() {
            let j = k + 1;
            let path = reg.path.child(Step::Index(j)).to_string();
            let (open, close) = match inst {
                Inst::Skip => (NodeKind::Skip { inserted: false }, None),
                Inst::Assign(..) => (NodeKind::Atomic(inst.clone()), None),
                Inst::Cond(g, ..) => (NodeKind::Bif(g.clone()), Some(NodeKind::Fib)),
                Inst::PChoice(_, p, _) => (NodeKind::Pif(p.clone()), Some(NodeKind::Fip)),
                Inst::While { guard, .. } => (NodeKind::Don(guard.clone()), Some(NodeKind::Od)),
            };
            let a = self.node(open, path.clone());
            let b = match close {
                None => a,
                Some(kind) => {
                    let kids = reg.children_of(j).to_vec();
                    for &c in &kids {
                        self.alloc(c, a, usize::MAX);
                    }
                    let b = self.node(kind, path);
                    for &c in &kids {
                        self.infos[c].exit = b;
                    }
                    b
                }
            };
            ins.push(a);
            outs.push(b);
        }
        let info = &mut self.infos[r];
        info.entry = entry;
        info.exit = exit;
        info.ins = ins;
        info.outs = outs;
    }
}

fn weight_of(nodes: &[Node], from: NodeId, to: NodeId, skip_weight: &Q) -> Q {
    if nodes[from].is_skip() || nodes[to].is_skip() {
        skip_weight.clone()
    } else {
        Q::one()
    }
}

fn assemble(regions: &[Region], mode: Mode, opts: &GraphOptions) -> SliceGraph {
    let infos = regions
        .iter()
        .map(|r| RegionInfo {
            path: r.path.clone(),
            prog: r.prog.clone(),
            entry: 0,
            exit: 0,
            ins: Vec::new(),
            outs: Vec::new(),
            children: r.children.clone(),
        })
        .collect();
    let mut b = Builder { regions, nodes: Vec::new(), infos };
    let start = b.node(NodeKind::Start, String::new());
    b.alloc(0, start, usize::MAX);
    let end = b.node(NodeKind::End, String::new());
    b.infos[0].exit = end;

    let mut edges = Vec::new();
    for (r, reg) in regions.iter().enumerate() {
        let info = &b.infos[r];
        let n = reg.len();
        let tuple = |pos: usize| reg.labels.iter().map(|l| l[pos].clone()).collect::<Vec<_>>();
        let mut push = |from: NodeId, to: NodeId, labels: Vec<Expectation>| {
            edges.push(Edge {
                from,
                to,
                labels,
                weight: weight_of(&b.nodes, from, to, &opts.skip_weight),
                shortcut: false,
                region: r,
                span: None,
                justification: None,
            });
        };
        push(info.entry, info.ins[0], tuple(0));
        for j in 1..n {
            push(info.outs[j - 1], info.ins[j], tuple(j));
        }
        push(info.outs[n - 1], info.exit, tuple(n));
    }
    SliceGraph { mode, nodes: b.nodes, edges, regions: b.infos, start, end }
}

/// Control-flow graph of `p` labelled with the backward propagation of
/// `g` (tuples of expectations where loops induce several specifications).
pub fn build_lcfg(p: &Prog, g: &Expectation, mode: Mode) -> Result<Lcfg, SliceError> {
    let regions = analyze(p, &Expectation::zero(), g, mode)?;
    Ok(assemble(&regions, mode, &GraphOptions::default()))
}

/// The labelled control-flow graph plus one shortcut per removable span of
/// every region; a span covering a whole region goes through a new skip node.
pub fn build_slice_graph(
    p: &Prog,
    f: &Expectation,
    g: &Expectation,
    mode: Mode,
    space: &StateSpace,
    opts: &GraphOptions,
) -> Result<SliceGraph, SliceError> {
    let regions = analyze(p, f, g, mode)?;
    let mut sg = assemble(&regions, mode, opts);
    let mut checker = Checker::new(space);
    for (r, reg) in regions.iter().enumerate() {
        let n = reg.len();
        for j in 1..=n {
            for k in j..=n {
                if !span_allowed(reg, j, k, &opts.slice) {
                    continue;
                }
                let Some(reasons) = checker.span(&regions, r, j, k) else { continue };
                let why = Some(crate::slicing::justify(reg, j, k, &reasons));
                let info = &sg.regions[r];
                let (entry, exit) = (info.entry, info.exit);
                let add = |sg: &mut SliceGraph, from: NodeId, to: NodeId| {
                    let weight = weight_of(&sg.nodes, from, to, &opts.skip_weight);
                    sg.edges.push(Edge {
                        from,
                        to,
                        labels: Vec::new(),
                        weight,
                        shortcut: true,
                        region: r,
                        span: Some((j, k)),
                        justification: why.clone(),
                    });
                };
                if j == 1 && k == n {
                    let id = sg.nodes.len();
                    sg.nodes.push(Node { id, kind: NodeKind::Skip { inserted: true }, path: String::new() });
                    add(&mut sg, entry, id);
                    add(&mut sg, id, exit);
                } else {
                    let from = if j == 1 { entry } else { info.outs[j - 2] };
                    let to = if k == n { exit } else { info.ins[k] };
                    add(&mut sg, from, to);
                }
            }
        }
    }
    Ok(sg)
}

/// Least slice found in a slice graph.
#[derive(Clone, Debug)]
pub struct MinSlice {
    pub program: Prog,
    /// Sum of edge weights along the chosen path, branches collapsed.
    pub weight: Q,
    pub atomic_count: usize,
    /// Each collapsed compound instruction: its path, collapsed weight and the weights of its branches.
    pub collapsed: Vec<(String, Q, Vec<Q>)>,
    /// Shortcuts taken, outermost first.
    pub removals: Vec<Removal>,
}

#[derive(Clone)]
struct Best {
    weight: Q,
    seq: Vec<NodeId>,
}

impl SliceGraph {
    /// Outgoing edges of each node restricted to region `r`.
    fn region_edges(&self, r: usize) -> HashMap<NodeId, Vec<usize>> {
        let mut out: HashMap<NodeId, Vec<usize>> = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.region == r {
                out.entry(edge.from).or_default().push(e);
            }
        }
        out
    }

    pub fn shortcut_count(&self) -> usize {
        self.edges.iter().filter(|e| e.shortcut).count()
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    /// Shortest weighted path per region, innermost regions first; a
    /// compound instruction weighs one plus the least weights of its
    /// nested regions. Ties go to the lexicographically least node sequence.
    pub fn min_slice(&self) -> MinSlice {
        let mut best: Vec<Option<(Best, Prog)>> = vec![None; self.regions.len()];
        let mut collapsed = Vec::new();
        for r in (0..self.regions.len()).rev() {
            let info = &self.regions[r];
            let adj = self.region_edges(r);
            // collapsed edge per compound instruction
            let mut virt: HashMap<NodeId, (NodeId, Q)> = HashMap::new();
            for (j, kids) in &info.children {
                let mut s = Q::one();
                let mut parts = Vec::new();
                for &c in kids {
                    let w = best[c].as_ref().map(|(b, _)| b.weight.clone()).expect("children first");
                    parts.push(w.clone());
                    s += w;
                }
                collapsed.push((info.path.child(Step::Index(*j)).to_string(), s.clone(), parts));
                virt.insert(info.ins[j - 1], (info.outs[j - 1], s));
            }
            let mut memo: HashMap<NodeId, Option<Best>> = HashMap::new();
            let path = self.shortest(info.entry, info.exit, &adj, &virt, &mut memo).expect("the original sequence is a path");
            let prog = self.rebuild(r, &path.seq, &best);
            best[r] = Some((path, prog));
        }
        let mut removals = Vec::new();
        self.report(0, &best, &mut removals);
        let (b, program) = best[0].take().expect("root region");
        collapsed.reverse();
        let atomic_count = program.atomic_count();
        MinSlice { program, weight: b.weight, atomic_count, collapsed, removals }
    }

    fn report(&self, r: usize, best: &[Option<(Best, Prog)>], out: &mut Vec<Removal>) {
        let info = &self.regions[r];
        let seq = &best[r].as_ref().expect("all regions solved").0.seq;
        for w in seq.windows(2) {
            let taken = self.edges.iter().find(|e| {
                e.region == r && e.shortcut && e.from == w[0] && e.to == w[1] && !matches!(self.nodes[e.from].kind, NodeKind::Skip { inserted: true })
            });
            if let Some(Edge { span: Some((j, k)), justification, .. }) = taken {
                out.push(Removal {
                    path: info.path.child(Step::Span(*j, *k)),
                    removed: info.prog.insts()[j - 1..*k].iter().map(inst_to_string).collect(),
                    justification: justification.clone().unwrap_or_default(),
                });
            }
        }
        for (j, kids) in &info.children {
            if seq.contains(&info.ins[j - 1]) {
                for &c in kids {
                    self.report(c, best, out);
                }
            }
        }
    }

    fn shortest(
        &self,
        v: NodeId,
        exit: NodeId,
        adj: &HashMap<NodeId, Vec<usize>>,
        virt: &HashMap<NodeId, (NodeId, Q)>,
        memo: &mut HashMap<NodeId, Option<Best>>,
    ) -> Option<Best> {
        if v == exit {
            return Some(Best { weight: Q::zero(), seq: vec![v] });
        }
        if let Some(b) = memo.get(&v) {
            return b.clone();
        }
        let mut cands: Vec<(NodeId, Q)> = Vec::new();
        if let Some((to, w)) = virt.get(&v) {
            cands.push((*to, w.clone()));
        } else if let Some(es) = adj.get(&v) {
            cands.extend(es.iter().map(|&e| (self.edges[e].to, self.edges[e].weight.clone())));
        }
        let mut result: Option<Best> = None;
        for (to, w) in cands {
            let Some(rest) = self.shortest(to, exit, adj, virt, memo) else { continue };
            let weight = w + &rest.weight;
            let mut seq = vec![v];
            seq.extend(rest.seq);
            let better = match &result {
                None => true,
                Some(b) => weight < b.weight || (weight == b.weight && seq < b.seq),
            };
            if better {
                result = Some(Best { weight, seq });
            }
        }
        memo.insert(v, result.clone());
        result
    }

    fn rebuild(&self, r: usize, seq: &[NodeId], best: &[Option<(Best, Prog)>]) -> Prog {
        let info = &self.regions[r];
        if seq.iter().any(|&v| matches!(self.nodes[v].kind, NodeKind::Skip { inserted: true })) {
            return Prog::skip();
        }
        let mut kept = Vec::new();
        for (k, inst) in info.prog.insts().iter().enumerate() {
            if !seq.contains(&info.ins[k]) {
                continue;
            }
            let kid = |i: usize| best[info.children_of(k + 1)[i]].as_ref().expect("children first").1.clone();
            kept.push(match inst {
                Inst::Cond(g, _, _) => Inst::Cond(g.clone(), kid(0), kid(1)),
                Inst::PChoice(_, p, _) => Inst::PChoice(kid(0), p.clone(), kid(1)),
                Inst::While { guard, invariant, total, .. } => {
                    Inst::While { guard: guard.clone(), invariant: invariant.clone(), total: total.clone(), body: kid(0) }
                }
                atomic => atomic.clone(),
            });
        }
        Prog::new(kept)
    }

    /// Whether `candidate` is the program of some start-to-end path.
    pub fn represents(&self, candidate: &Prog) -> bool {
        self.region_represents(0, candidate)
    }

    fn region_represents(&self, r: usize, cand: &Prog) -> bool {
        let info = &self.regions[r];
        let connected = |from: NodeId, to: NodeId| self.edges.iter().any(|e| e.region == r && e.from == from && e.to == to);
        if cand.is_skip() {
            let via_skip = self.edges.iter().any(|e| {
                e.region == r && e.from == info.entry && matches!(self.nodes[e.to].kind, NodeKind::Skip { inserted: true })
            });
            if via_skip {
                return true;
            }
        }
        let n = info.prog.len();
        let m = cand.len();
        // reach[t][j]: first t candidate instructions matched, the last one by instruction j
        let mut reach = vec![vec![false; n + 1]; m + 1];
        for t in 1..=m {
            for j in 1..=n {
                if !self.inst_represents(r, j, &cand.insts()[t - 1]) {
                    continue;
                }
                reach[t][j] = if t == 1 {
                    connected(info.entry, info.ins[j - 1])
                } else {
                    (1..j).any(|i| reach[t - 1][i] && connected(info.outs[i - 1], info.ins[j - 1]))
                };
            }
        }
        (1..=n).any(|j| reach[m][j] && connected(info.outs[j - 1], info.exit))
    }

    fn inst_represents(&self, r: usize, j: usize, c: &Inst) -> bool {
        let info = &self.regions[r];
        let kids = info.children_of(j);
        match (&info.prog.insts()[j - 1], c) {
            (Inst::Cond(g, ..), Inst::Cond(h, a, b)) => {
                g == h && self.region_represents(kids[0], a) && self.region_represents(kids[1], b)
            }
            (Inst::PChoice(_, p, _), Inst::PChoice(a, q0, b)) => {
                p == q0 && self.region_represents(kids[0], a) && self.region_represents(kids[1], b)
            }
            (Inst::While { guard, invariant, total, .. }, Inst::While { guard: g2, invariant: i2, total: t2, body }) => {
                guard == g2 && invariant == i2 && total == t2 && self.region_represents(kids[0], body)
            }
            (o, c) => o == c,
        }
    }

    fn edge_label(e: &Edge) -> String {
        match e.labels.len() {
            0 => String::new(),
            1 => e.labels[0].to_string(),
            _ => format!("({})", e.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "version": 1,
            "mode": self.mode.to_string(),
            "nodes": self.nodes.iter().map(|n| json!({
                "id": n.id,
                "kind": n.kind_name(),
                "label": n.label(),
                "path": n.path,
            })).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|e| json!({
                "from": e.from,
                "to": e.to,
                "labels": e.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                "weight": e.weight.to_string(),
                "shortcut": e.shortcut,
                "region": self.regions[e.region].path.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// Graphviz rendering; shortcut edges are bold.
pub fn export_dot(g: &SliceGraph) -> String {
    let mut out = String::from("digraph slice_graph {\n  node [shape=box, fontname=\"monospace\"];\n");
    for n in &g.nodes {
        let shape = match n.kind {
            NodeKind::Start | NodeKind::End => ", shape=oval",
            NodeKind::Skip { inserted: true } => ", style=dashed",
            _ => "",
        };
        let _ = writeln!(out, "  n{} [label=\"{}\"{shape}];", n.id, dot_escape(&n.label()));
    }
    for e in &g.edges {
        let mut attrs = vec![format!("label=\"{}\"", dot_escape(&SliceGraph::edge_label(e)))];
        if e.shortcut {
            attrs.push("style=bold".into());
        }
        if e.weight != Q::one() {
            attrs.push(format!("xlabel=\"w={}\"", e.weight));
        }
        let _ = writeln!(out, "  n{} -> n{} [{}];", e.from, e.to, attrs.join(", "));
    }
    out.push_str("}\n");
    out
}

/// Parses a rational weight such as `1/2` or `0.5`.
pub fn parse_weight(s: &str) -> Option<Q> {
    match crate::lang::parser::parse_arith(s).ok()?.as_const() {
        Some(w) if *w >= Q::zero() => Some(w.clone()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::{parse_expectation, parse_prog};
    use crate::lang::ast::q;
    use crate::lang::printer::pretty_print;
    use crate::lang::state::VarDomain;

    fn e(s: &str) -> Expectation {
        parse_expectation(s).unwrap()
    }

    fn bits(vars: &[&str]) -> StateSpace {
        StateSpace::new(vars.iter().map(|x| VarDomain { var: x.to_string(), values: vec![q(0), q(1)] }).collect()).unwrap()
    }

    #[test]
    fn skip_program_graph() {
        let g = build_lcfg(&Prog::skip(), &e("[x = 1]"), Mode::Partial).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|ed| ed.labels == vec![e("[x = 1]")]));
        let dot = export_dot(&g);
        assert_eq!(dot.matches("[label=").count(), 5);
    }

    #[test]
    fn no_shortcuts_keeps_program() {
        let sp = bits(&["x", "y"]);
        let p = parse_prog("x := 1 - x; y := x").unwrap();
        // the spec pins every instruction
        let (f, g) = (e("[x = 0]"), e("[y = 1]"));
        let sg = build_slice_graph(&p, &f, &g, Mode::Partial, &sp, &GraphOptions::default()).unwrap();
        assert_eq!(sg.shortcut_count(), 0);
        let m = sg.min_slice();
        assert_eq!(m.program, p);
        assert_eq!(m.atomic_count, 2);
        assert_eq!(m.weight, q(3));
    }

    #[test]
    fn bypass_in_straight_line() {
        let sp = bits(&["x", "y"]);
        let p = parse_prog("y := 0; x := 1; y := 1").unwrap();
        let sg = build_slice_graph(&p, &e("1"), &e("[x = 1]"), Mode::Partial, &sp, &GraphOptions::default()).unwrap();
        let m = sg.min_slice();
        assert_eq!(pretty_print(&m.program), "x := 1");
        assert!(sg.represents(&m.program));
        assert!(sg.represents(&p));
    }

    #[test]
    fn branches_collapse() {
        let sp = bits(&["x", "y"]);
        let p = parse_prog("{ y := 1 } [1/2] { x := 0 }; x := 1").unwrap();
        let sg = build_slice_graph(&p, &e("1"), &e("[x = 1]"), Mode::Partial, &sp, &GraphOptions::default()).unwrap();
        let m = sg.min_slice();
        assert_eq!(pretty_print(&m.program), "x := 1");
        for (_, s, parts) in &m.collapsed {
            assert_eq!(*s, Q::one() + parts.iter().cloned().sum::<Q>());
        }
    }
}

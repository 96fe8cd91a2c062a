//! Circuit ingestion: stage graphs, gate-level netlists, and a seeded
//! random benchmark generator.
//!
//! A stage abstracts the combinational logic between two flip-flops into its
//! maximum and minimum path delays. Wires carry no delay; all delay lives on
//! gates. Clock skew is zero: every flip-flop sees the same edge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ParseError;

/// A combinational path between two flip-flops with its delay extremes (ps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub src: usize,
    pub dst: usize,
    pub d_max: f64,
    pub d_min: f64,
}

/// Flip-flops and the directed stages between them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageGraph {
    names: Vec<String>,
    stages: Vec<Stage>,
}

impl StageGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ff_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, ff: usize) -> &str {
        &self.names[ff]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn add_ff(&mut self, name: impl Into<String>) -> Result<usize, String> {
        let name = name.into();
        if self.find(&name).is_some() {
            return Err(format!("duplicate flip-flop '{name}'"));
        }
        self.names.push(name);
        Ok(self.names.len() - 1)
    }

    pub fn add_stage(&mut self, src: usize, dst: usize, d_max: f64, d_min: f64) -> Result<(), String> {
        if src >= self.names.len() || dst >= self.names.len() {
            return Err("stage references an unknown flip-flop".into());
        }
        if !(0.0 <= d_min && d_min <= d_max) {
            return Err(format!("need 0 <= dmin <= dmax, got dmin={d_min} dmax={d_max}"));
        }
        if self.stages.iter().any(|s| s.src == src && s.dst == dst) {
            return Err(format!(
                "duplicate stage {} -> {}",
                self.names[src], self.names[dst]
            ));
        }
        self.stages.push(Stage { src, dst, d_max, d_min });
        Ok(())
    }

    /// Writes the graph in the grammar accepted by [`parse_stage_graph`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for name in &self.names {
            out.push_str(&format!("ff {name}\n"));
        }
        for s in &self.stages {
            out.push_str(&format!(
                "stage {} {} dmax={} dmin={}\n",
                self.names[s.src], self.names[s.dst], s.d_max, s.d_min
            ));
        }
        out
    }
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_keyed_number(field: &str, key: &str, line: usize) -> Result<f64, ParseError> {
    let value = field
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| ParseError::new(line, format!("expected {key}=<ps>, found '{field}'")))?;
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::new(line, format!("malformed number '{value}'")))
}

/// Parses the stage grammar: `ff <name>` and
/// `stage <src> <dst> dmax=<ps> dmin=<ps>` lines, `#` comments.
pub fn parse_stage_graph(text: &str) -> Result<StageGraph, ParseError> {
    let mut graph = StageGraph::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields[0] {
            "ff" => {
                if fields.len() != 2 {
                    return Err(ParseError::new(line, "expected: ff <name>"));
                }
                if !valid_name(fields[1]) {
                    return Err(ParseError::new(line, format!("invalid name '{}'", fields[1])));
                }
                graph.add_ff(fields[1]).map_err(|m| ParseError::new(line, m))?;
            }
            "stage" => {
                if fields.len() != 5 {
                    return Err(ParseError::new(
                        line,
                        "expected: stage <src> <dst> dmax=<ps> dmin=<ps>",
                    ));
                }
                let src = graph
                    .find(fields[1])
                    .ok_or_else(|| ParseError::new(line, format!("unknown flip-flop '{}'", fields[1])))?;
                let dst = graph
                    .find(fields[2])
                    .ok_or_else(|| ParseError::new(line, format!("unknown flip-flop '{}'", fields[2])))?;
                let d_max = parse_keyed_number(fields[3], "dmax", line)?;
                let d_min = parse_keyed_number(fields[4], "dmin", line)?;
                graph
                    .add_stage(src, dst, d_max, d_min)
                    .map_err(|m| ParseError::new(line, m))?;
            }
            other => {
                return Err(ParseError::new(line, format!("unknown directive '{other}'")));
            }
        }
    }
    Ok(graph)
}

/// One combinational gate with its delay extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub d_min: f64,
    pub d_max: f64,
}

/// Element endpoint of a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Ff(usize),
    Gate(usize),
}

/// A gate-level netlist: flip-flops, gates, and directed nets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub ffs: Vec<String>,
    pub gates: Vec<Gate>,
    pub nets: Vec<(NodeRef, NodeRef)>,
}

impl Netlist {
    fn resolve(&self, name: &str) -> Option<NodeRef> {
        if let Some(i) = self.ffs.iter().position(|n| n == name) {
            return Some(NodeRef::Ff(i));
        }
        self.gates
            .iter()
            .position(|g| g.name == name)
            .map(NodeRef::Gate)
    }

    /// Detects a cycle running through gates only. Flip-flops legitimately
    /// break feedback loops.
    fn gate_cycle(&self) -> Option<&str> {
        let n = self.gates.len();
        let mut adj = vec![Vec::new(); n];
        for (src, dst) in &self.nets {
            if let (NodeRef::Gate(a), NodeRef::Gate(b)) = (src, dst) {
                adj[*a].push(*b);
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done.
        let mut state = vec![0u8; n];
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start] = 1;
            while let Some(&mut (node, ref mut edge)) = stack.last_mut() {
                if *edge < adj[node].len() {
                    let next = adj[node][*edge];
                    *edge += 1;
                    match state[next] {
                        0 => {
                            state[next] = 1;
                            stack.push((next, 0));
                        }
                        1 => return Some(&self.gates[next].name),
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Gates in topological order of the gate-induced subgraph.
    fn gate_topo_order(&self) -> Vec<usize> {
        let n = self.gates.len();
        let mut indeg = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for (src, dst) in &self.nets {
            if let (NodeRef::Gate(a), NodeRef::Gate(b)) = (src, dst) {
                adj[*a].push(*b);
                indeg[*b] += 1;
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        while let Some(g) = queue.pop() {
            order.push(g);
            for &next in &adj[g] {
                indeg[next] -= 1;
                if indeg[next] == 0 {
                    queue.push(next);
                }
            }
        }
        order
    }
}

/// Parses the gate grammar: `ff <name>`, `gate <name> dmin=<ps> dmax=<ps>`,
/// `net <src> <dst>` lines, `#` comments. Validates references and rejects
/// combinational loops.
pub fn parse_gate_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut netlist = Netlist::default();
    let mut pending_nets: Vec<(String, String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields[0] {
            "ff" => {
                if fields.len() != 2 || !valid_name(fields[1]) {
                    return Err(ParseError::new(line, "expected: ff <name>"));
                }
                if netlist.resolve(fields[1]).is_some() {
                    return Err(ParseError::new(line, format!("duplicate element '{}'", fields[1])));
                }
                netlist.ffs.push(fields[1].to_string());
            }
            "gate" => {
                if fields.len() != 4 || !valid_name(fields[1]) {
                    return Err(ParseError::new(line, "expected: gate <name> dmin=<ps> dmax=<ps>"));
                }
                if netlist.resolve(fields[1]).is_some() {
                    return Err(ParseError::new(line, format!("duplicate element '{}'", fields[1])));
                }
                let d_min = parse_keyed_number(fields[2], "dmin", line)?;
                let d_max = parse_keyed_number(fields[3], "dmax", line)?;
                if !(0.0 <= d_min && d_min <= d_max) {
                    return Err(ParseError::new(line, format!("need 0 <= dmin <= dmax, got dmin={d_min} dmax={d_max}")));
                }
                netlist.gates.push(Gate { name: fields[1].to_string(), d_min, d_max });
            }
            "net" => {
                if fields.len() != 3 {
                    return Err(ParseError::new(line, "expected: net <src> <dst>"));
                }
                pending_nets.push((fields[1].to_string(), fields[2].to_string(), line));
            }
            other => {
                return Err(ParseError::new(line, format!("unknown directive '{other}'")));
            }
        }
    }
    for (src, dst, line) in pending_nets {
        let s = netlist
            .resolve(&src)
            .ok_or_else(|| ParseError::new(line, format!("unknown element '{src}'")))?;
        let d = netlist
            .resolve(&dst)
            .ok_or_else(|| ParseError::new(line, format!("unknown element '{dst}'")))?;
        if !netlist.nets.contains(&(s, d)) {
            netlist.nets.push((s, d));
        }
    }
    if let Some(member) = netlist.gate_cycle() {
        return Err(ParseError::new(0, format!("combinational loop through gate '{member}'")));
    }
    Ok(netlist)
}

/// Extracts the stage graph: for each ordered flip-flop pair connected by at
/// least one all-gate path, the maximum and minimum path delay sums, by
/// dynamic programming over a topological order. Direct FF-to-FF nets give a
/// zero-delay stage.
pub fn extract_stages(netlist: &Netlist) -> StageGraph {
    let mut graph = StageGraph::new();
    for name in &netlist.ffs {
        graph.add_ff(name.clone()).expect("netlist names are unique");
    }
    let order = netlist.gate_topo_order();
    let ng = netlist.gates.len();

    // Gate fan-in lists, separated by driver kind.
    let mut gate_in_gates = vec![Vec::new(); ng];
    let mut gate_in_ffs = vec![Vec::new(); ng];
    let mut ff_in_gates = vec![Vec::new(); netlist.ffs.len()];
    let mut ff_in_ffs = vec![Vec::new(); netlist.ffs.len()];
    for (src, dst) in &netlist.nets {
        match (src, dst) {
            (NodeRef::Gate(a), NodeRef::Gate(b)) => gate_in_gates[*b].push(*a),
            (NodeRef::Ff(f), NodeRef::Gate(b)) => gate_in_ffs[*b].push(*f),
            (NodeRef::Gate(a), NodeRef::Ff(f)) => ff_in_gates[*f].push(*a),
            (NodeRef::Ff(a), NodeRef::Ff(b)) => ff_in_ffs[*b].push(*a),
        }
    }

    for src_ff in 0..netlist.ffs.len() {
        // Longest/shortest delay from src_ff's output to each gate's output.
        let mut dmax = vec![f64::NEG_INFINITY; ng];
        let mut dmin = vec![f64::INFINITY; ng];
        for &g in &order {
            let mut best_max = f64::NEG_INFINITY;
            let mut best_min = f64::INFINITY;
            if gate_in_ffs[g].contains(&src_ff) {
                best_max = 0.0;
                best_min = 0.0;
            }
            for &pred in &gate_in_gates[g] {
                best_max = best_max.max(dmax[pred]);
                best_min = best_min.min(dmin[pred]);
            }
            if best_max > f64::NEG_INFINITY {
                dmax[g] = best_max + netlist.gates[g].d_max;
                dmin[g] = best_min + netlist.gates[g].d_min;
            }
        }
        for dst_ff in 0..netlist.ffs.len() {
            let mut best_max = f64::NEG_INFINITY;
            let mut best_min = f64::INFINITY;
            if ff_in_ffs[dst_ff].contains(&src_ff) {
                best_max = 0.0;
                best_min = 0.0;
            }
            for &g in &ff_in_gates[dst_ff] {
                if dmax[g] > f64::NEG_INFINITY {
                    best_max = best_max.max(dmax[g]);
                    best_min = best_min.min(dmin[g]);
                }
            }
            if best_max > f64::NEG_INFINITY {
                graph
                    .add_stage(src_ff, dst_ff, best_max, best_min)
                    .expect("one stage per ordered pair");
            }
        }
    }
    graph
}

/// Deterministically generates a random stage graph: `n_stage` distinct
/// ordered pairs (self-loops included) with `d_max` uniform in `dmax_range`
/// and `d_min` a uniform fraction of it.
pub fn generate_random_stage_graph(
    n_ff: usize,
    n_stage: usize,
    dmax_range: (f64, f64),
    dmin_fraction_range: (f64, f64),
    seed: u64,
) -> Result<StageGraph, String> {
    if n_ff == 0 {
        return Err("need at least one flip-flop".into());
    }
    let pair_count = n_ff * n_ff;
    if n_stage > pair_count {
        return Err(format!(
            "{n_stage} stages impossible: only {pair_count} ordered pairs including self-loops"
        ));
    }
    if !(dmax_range.0 > 0.0 && dmax_range.0 <= dmax_range.1) {
        return Err("dmax_range must satisfy 0 < lo <= hi".into());
    }
    if !(0.0 <= dmin_fraction_range.0
        && dmin_fraction_range.0 <= dmin_fraction_range.1
        && dmin_fraction_range.1 <= 1.0)
    {
        return Err("dmin_fraction_range must lie within [0, 1]".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = StageGraph::new();
    for i in 0..n_ff {
        graph.add_ff(format!("ff{i}")).unwrap();
    }
    // Partial Fisher-Yates over the flattened pair index space.
    let mut pairs: Vec<usize> = (0..pair_count).collect();
    for k in 0..n_stage {
        let pick = rng.gen_range(k..pair_count);
        pairs.swap(k, pick);
    }
    for &pair in pairs.iter().take(n_stage) {
        let (src, dst) = (pair / n_ff, pair % n_ff);
        let d_max = if dmax_range.0 == dmax_range.1 {
            dmax_range.0
        } else {
            rng.gen_range(dmax_range.0..dmax_range.1)
        };
        let frac = if dmin_fraction_range.0 == dmin_fraction_range.1 {
            dmin_fraction_range.0
        } else {
            rng.gen_range(dmin_fraction_range.0..dmin_fraction_range.1)
        };
        graph
            .add_stage(src, dst, d_max, frac * d_max)
            .expect("pairs are distinct");
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_stage_graph() {
        let g = parse_stage_graph("ff A\nff B\nstage A B dmax=500 dmin=50\n").unwrap();
        assert_eq!(g.ff_count(), 2);
        assert_eq!(g.stages().len(), 1);
        assert_eq!(g.stages()[0], Stage { src: 0, dst: 1, d_max: 500.0, d_min: 50.0 });
    }

    #[test]
    fn dmin_above_dmax_rejected_with_line() {
        let err = parse_stage_graph("ff A\nff B\nstage A B dmax=1 dmin=2\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("dmin"));
    }

    #[test]
    fn unknown_ff_rejected() {
        let err = parse_stage_graph("ff A\nstage A B dmax=1 dmin=0\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unknown flip-flop 'B'"));
    }

    #[test]
    fn duplicate_stage_rejected() {
        let text = "ff A\nff B\nstage A B dmax=5 dmin=1\nstage A B dmax=7 dmin=2\n";
        let err = parse_stage_graph(text).unwrap_err();
        assert_eq!(err.line, 4);
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let g = parse_stage_graph("# header\n\nff A # trailing\nff B\nstage A B dmax=2 dmin=1\n").unwrap();
        assert_eq!(g.ff_count(), 2);
    }

    #[test]
    fn stage_graph_round_trips_through_writer() {
        let g = parse_stage_graph("ff A\nff B\nff C\nstage A B dmax=500 dmin=50\nstage B C dmax=300 dmin=50\nstage C C dmax=10 dmin=1\n").unwrap();
        let again = parse_stage_graph(&g.to_text()).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn parse_simple_netlist() {
        let n = parse_gate_netlist("ff FF1\nff FF2\ngate g1 dmin=10 dmax=20\nnet FF1 g1\nnet g1 FF2\n").unwrap();
        assert_eq!(n.ffs.len(), 2);
        assert_eq!(n.gates.len(), 1);
        assert_eq!(n.nets.len(), 2);
    }

    #[test]
    fn combinational_loop_detected() {
        let text = "ff FF1\ngate g1 dmin=1 dmax=2\ngate g2 dmin=1 dmax=2\nnet g1 g2\nnet g2 g1\n";
        let err = parse_gate_netlist(text).unwrap_err();
        assert!(err.message.contains("combinational loop"), "{err}");
        assert!(err.message.contains("g1") || err.message.contains("g2"));
    }

    #[test]
    fn undeclared_reference_rejected() {
        let err = parse_gate_netlist("ff FF1\nnet FF1 g9\n").unwrap_err();
        assert!(err.message.contains("unknown element 'g9'"));
    }

    #[test]
    fn extract_single_path() {
        let n = parse_gate_netlist("ff FF1\nff FF2\ngate g1 dmin=10 dmax=20\nnet FF1 g1\nnet g1 FF2\n").unwrap();
        let g = extract_stages(&n);
        assert_eq!(g.stages(), &[Stage { src: 0, dst: 1, d_max: 20.0, d_min: 10.0 }]);
    }

    #[test]
    fn extract_parallel_paths_takes_extremes() {
        let text = "ff FF1\nff FF2\ngate g1 dmin=10 dmax=20\ngate g2 dmin=5 dmax=50\nnet FF1 g1\nnet FF1 g2\nnet g1 FF2\nnet g2 FF2\n";
        let g = extract_stages(&parse_gate_netlist(text).unwrap());
        assert_eq!(g.stages(), &[Stage { src: 0, dst: 1, d_max: 50.0, d_min: 5.0 }]);
    }

    #[test]
    fn extract_chain_sums_delays() {
        let text = "ff FF1\nff FF2\ngate g1 dmin=10 dmax=20\ngate g2 dmin=5 dmax=5\nnet FF1 g1\nnet g1 g2\nnet g2 FF2\n";
        let g = extract_stages(&parse_gate_netlist(text).unwrap());
        assert_eq!(g.stages(), &[Stage { src: 0, dst: 1, d_max: 25.0, d_min: 15.0 }]);
    }

    #[test]
    fn direct_ff_net_gives_zero_delay_stage() {
        let g = extract_stages(&parse_gate_netlist("ff A\nff B\nnet A B\n").unwrap());
        assert_eq!(g.stages(), &[Stage { src: 0, dst: 1, d_max: 0.0, d_min: 0.0 }]);
    }

    /// Brute-force path enumeration for cross-checking the DP on small nets.
    fn brute_force_stages(netlist: &Netlist) -> Vec<Stage> {
        fn walk(
            netlist: &Netlist,
            node: NodeRef,
            dst: usize,
            sum_max: f64,
            sum_min: f64,
            best: &mut Option<(f64, f64)>,
        ) {
            if let NodeRef::Ff(f) = node {
                if f == dst {
                    let entry = best.get_or_insert((f64::NEG_INFINITY, f64::INFINITY));
                    entry.0 = entry.0.max(sum_max);
                    entry.1 = entry.1.min(sum_min);
                }
                return;
            }
            for (s, d) in &netlist.nets {
                if *s == node {
                    let (add_max, add_min) = match d {
                        NodeRef::Gate(g) => (netlist.gates[*g].d_max, netlist.gates[*g].d_min),
                        NodeRef::Ff(_) => (0.0, 0.0),
                    };
                    walk(netlist, *d, dst, sum_max + add_max, sum_min + add_min, best);
                }
            }
        }
        let mut stages = Vec::new();
        for src in 0..netlist.ffs.len() {
            for dst in 0..netlist.ffs.len() {
                let mut best = None;
                for (s, d) in &netlist.nets {
                    if *s == NodeRef::Ff(src) {
                        let (add_max, add_min) = match d {
                            NodeRef::Gate(g) => (netlist.gates[*g].d_max, netlist.gates[*g].d_min),
                            NodeRef::Ff(_) => (0.0, 0.0),
                        };
                        walk(netlist, *d, dst, add_max, add_min, &mut best);
                    }
                }
                if let Some((d_max, d_min)) = best {
                    stages.push(Stage { src, dst, d_max, d_min });
                }
            }
        }
        stages
    }

    #[test]
    fn dp_matches_brute_force_enumeration() {
        let text = "\
ff A\nff B\nff C\n\
gate g1 dmin=3 dmax=7\ngate g2 dmin=1 dmax=9\ngate g3 dmin=2 dmax=2\ngate g4 dmin=5 dmax=6\n\
net A g1\nnet A g2\nnet g1 g3\nnet g2 g3\nnet g3 B\nnet g2 g4\nnet g4 C\nnet B g4\nnet A B\n";
        let netlist = parse_gate_netlist(text).unwrap();
        let dp = extract_stages(&netlist);
        let mut brute = brute_force_stages(&netlist);
        brute.sort_by_key(|s| (s.src, s.dst));
        let mut got: Vec<Stage> = dp.stages().to_vec();
        got.sort_by_key(|s| (s.src, s.dst));
        assert_eq!(got, brute);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_random_stage_graph(5, 8, (100.0, 500.0), (0.1, 0.5), 42).unwrap();
        let b = generate_random_stage_graph(5, 8, (100.0, 500.0), (0.1, 0.5), 42).unwrap();
        assert_eq!(a, b);
        let c = generate_random_stage_graph(5, 8, (100.0, 500.0), (0.1, 0.5), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_output_satisfies_invariants() {
        let g = generate_random_stage_graph(3, 2, (100.0, 500.0), (0.1, 0.5), 1).unwrap();
        assert_eq!(g.ff_count(), 3);
        assert_eq!(g.stages().len(), 2);
        let mut seen = std::collections::HashSet::new();
        for s in g.stages() {
            assert!(0.0 <= s.d_min && s.d_min <= s.d_max);
            assert!(seen.insert((s.src, s.dst)), "duplicate pair");
        }
    }

    #[test]
    fn generator_rejects_impossible_stage_count() {
        let err = generate_random_stage_graph(2, 5, (1.0, 2.0), (0.0, 1.0), 0).unwrap_err();
        assert!(err.contains("4 ordered pairs"), "{err}");
    }
}

//! Linear AC small-signal evaluator via modified nodal analysis.
//!
//! Supply and ground are AC reference; every other net gets a node
//! equation, and IO inputs are driven by ideal sources through MNA branch
//! rows. Transistors are replaced by their quasi-linear equivalents: a
//! transconductance `gm` from gate-source voltage into the drain-source
//! branch plus an output conductance `1/ro`. A bias-plausibility gate
//! stands in for the DC operating point: every MOS must sit on a
//! supply-to-ground conduction path through its drain and source, or the
//! design is simulation-invalid.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use super::{EvaluatorSpec, SimResult};
use crate::graph::{conduction_path_exists, CircuitGraph, EdgeKind, NodeId, NodeKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MnaError {
    #[error("singular system at {0} Hz")]
    SingularSystem(f64),
    #[error("no AC input (expected io nets 'in' or 'inp'/'inn')")]
    NoInput,
    #[error("no AC output (expected io nets 'out' or 'outp'/'outn')")]
    NoOutput,
}

/// Result of a frequency sweep: per-output transfer values and the worst
/// relative residual of all solves.
#[derive(Debug, Clone)]
pub struct AcAnalysis {
    pub outputs: Vec<String>,
    pub max_residual: f64,
}

struct System {
    /// Matrix index per non-reference net.
    index: BTreeMap<NodeId, usize>,
    n: usize,
    /// (node index, drive amplitude) per source; each takes one branch row.
    sources: Vec<(usize, f64)>,
    outputs: Vec<(String, usize)>,
}

fn build_system(g: &CircuitGraph, _spec: &EvaluatorSpec) -> Result<System, MnaError> {
    let mut index = BTreeMap::new();
    for u in g.nets() {
        match g.kind(u) {
            NodeKind::SupplyNet | NodeKind::GroundNet => {}
            _ => {
                let next = index.len();
                index.insert(u, next);
            }
        }
    }
    let n = index.len();

    let mut sources = Vec::new();
    if let (Some(p), Some(m)) = (g.find_io("inp"), g.find_io("inn")) {
        sources.push((index[&p], 0.5));
        sources.push((index[&m], -0.5));
    } else if let Some(i) = g.find_io("in") {
        sources.push((index[&i], 1.0));
    } else {
        return Err(MnaError::NoInput);
    }

    let mut outputs = Vec::new();
    if let (Some(p), Some(m)) = (g.find_io("outp"), g.find_io("outn")) {
        outputs.push(("outp".to_string(), index[&p]));
        outputs.push(("outn".to_string(), index[&m]));
    } else if let Some(o) = g.find_io("out") {
        outputs.push(("out".to_string(), index[&o]));
    } else {
        return Err(MnaError::NoOutput);
    }

    Ok(System { index, n, sources, outputs })
}

/// Index helper: reference nets map to `None`.
fn node_idx(sys: &System, u: NodeId) -> Option<usize> {
    sys.index.get(&u).copied()
}

fn stamp_admittance(
    a: &mut [Complex64],
    dim: usize,
    i: Option<usize>,
    j: Option<usize>,
    y: Complex64,
) {
    if let Some(i) = i {
        a[i * dim + i] += y;
    }
    if let Some(j) = j {
        a[j * dim + j] += y;
    }
    if let (Some(i), Some(j)) = (i, j) {
        a[i * dim + j] -= y;
        a[j * dim + i] -= y;
    }
}

/// `a[row][col] += v` when both exist.
fn stamp_entry(a: &mut [Complex64], dim: usize, row: Option<usize>, col: Option<usize>, v: f64) {
    if let (Some(r), Some(c)) = (row, col) {
        a[r * dim + c] += Complex64::new(v, 0.0);
    }
}

/// Assemble and solve `G(jw) x = b` at one frequency; returns per-output
/// complex node voltages and the relative residual.
pub fn transfer(
    g: &CircuitGraph,
    spec: &EvaluatorSpec,
    freq: f64,
) -> Result<(BTreeMap<String, Complex64>, f64), MnaError> {
    let sys = build_system(g, spec)?;
    let dim = sys.n + sys.sources.len();
    let omega = 2.0 * std::f64::consts::PI * freq;
    let mut a = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut b = vec![Complex64::new(0.0, 0.0); dim];

    for c in g.components() {
        match g.kind(c) {
            NodeKind::Resistor => {
                let p = node_idx(&sys, g.terminal_net(c, EdgeKind::PassivePlus).unwrap());
                let m = node_idx(&sys, g.terminal_net(c, EdgeKind::PassiveMinus).unwrap());
                stamp_admittance(&mut a, dim, p, m, Complex64::new(1.0 / spec.unit_r, 0.0));
            }
            NodeKind::Capacitor => {
                let p = node_idx(&sys, g.terminal_net(c, EdgeKind::PassivePlus).unwrap());
                let m = node_idx(&sys, g.terminal_net(c, EdgeKind::PassiveMinus).unwrap());
                stamp_admittance(&mut a, dim, p, m, Complex64::new(0.0, omega * spec.unit_c));
            }
            NodeKind::Nmos | NodeKind::Pmos => {
                let d = node_idx(&sys, g.terminal_net(c, EdgeKind::Drain).unwrap());
                let s = node_idx(&sys, g.terminal_net(c, EdgeKind::Source).unwrap());
                let gt = node_idx(&sys, g.terminal_net(c, EdgeKind::Gate).unwrap());
                // i_ds = gm (v_g - v_s), drain to source.
                stamp_entry(&mut a, dim, d, gt, spec.gm);
                stamp_entry(&mut a, dim, d, s, -spec.gm);
                stamp_entry(&mut a, dim, s, gt, -spec.gm);
                stamp_entry(&mut a, dim, s, s, spec.gm);
                stamp_admittance(&mut a, dim, d, s, Complex64::new(1.0 / spec.ro, 0.0));
            }
            _ => {}
        }
    }

    // Load capacitance at every output net.
    for (_, o) in &sys.outputs {
        stamp_admittance(
            &mut a,
            dim,
            Some(*o),
            None,
            Complex64::new(0.0, omega * spec.c_load),
        );
    }

    // Voltage-source branch rows.
    for (k, (node, amp)) in sys.sources.iter().enumerate() {
        let row = sys.n + k;
        a[row * dim + node] = Complex64::new(1.0, 0.0);
        a[node * dim + row] = Complex64::new(1.0, 0.0);
        b[row] = Complex64::new(*amp, 0.0);
    }

    let a0 = a.clone();
    let b0 = b.clone();
    let x = solve_dense(&mut a, dim, &mut b).ok_or(MnaError::SingularSystem(freq))?;

    // Relative residual of the reported solve.
    let mut rnum = 0.0f64;
    let mut rden = 0.0f64;
    for i in 0..dim {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            acc += a0[i * dim + j] * x[j];
        }
        rnum += (acc - b0[i]).norm_sqr();
        rden += b0[i].norm_sqr();
    }
    let residual = (rnum / rden.max(f64::MIN_POSITIVE)).sqrt();

    let mut out = BTreeMap::new();
    for (name, idx) in &sys.outputs {
        out.insert(name.clone(), x[*idx]);
    }
    Ok((out, residual))
}

/// Gaussian elimination with partial pivoting; returns the solution or
/// `None` on a vanishing pivot.
fn solve_dense(a: &mut [Complex64], n: usize, b: &mut [Complex64]) -> Option<Vec<Complex64>> {
    let mut scale = 0.0f64;
    for v in a.iter() {
        scale = scale.max(v.norm());
    }
    let eps = scale.max(1.0) * 1e-14;
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].norm();
        for row in col + 1..n {
            let mag = a[row * n + col].norm();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best <= eps {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[row * n + j] -= factor * v;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= a[row * n + j] * x[j];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

fn differential(out: &BTreeMap<String, Complex64>) -> Complex64 {
    match (out.get("outp"), out.get("outn")) {
        (Some(p), Some(n)) => p - n,
        _ => *out.get("out").expect("single output present"),
    }
}

fn db20(x: f64) -> f64 {
    20.0 * x.max(1e-300).log10()
}

/// Every MOS must conduct between the rails through its channel.
fn bias_plausible(g: &CircuitGraph) -> bool {
    let (Some(vdd), Some(vss)) = (g.supply(), g.ground()) else {
        // Without rails there is nothing to check; pure passive fixtures
        // are evaluated as-is.
        return !g.components().any(|c| g.kind(c).is_mos());
    };
    g.components().all(|c| {
        if !g.kind(c).is_mos() {
            return true;
        }
        let (Some(d), Some(s)) = (
            g.terminal_net(c, EdgeKind::Drain),
            g.terminal_net(c, EdgeKind::Source),
        ) else {
            return false;
        };
        let down = |from: NodeId, to: NodeId| conduction_path_exists(g, from, to, Some(c), true);
        (down(vdd, d) && down(s, vss)) || (down(vdd, s) && down(d, vss))
    })
}

const RESIDUAL_LIMIT: f64 = 1e-9;

/// Full AC evaluation: low-frequency gain in dB, -3 dB bandwidth found by
/// bisection on a doubling sweep, and differential gain mismatch when two
/// outputs exist.
pub fn evaluate_mna_ac(g: &CircuitGraph, spec: &EvaluatorSpec) -> SimResult {
    if !bias_plausible(g) {
        return SimResult::invalid("bias-implausible: a MOS lacks a supply-ground channel path");
    }
    let mut max_residual = 0.0f64;
    let mut solve = |f: f64| -> Result<BTreeMap<String, Complex64>, MnaError> {
        let (out, res) = transfer(g, spec, f)?;
        max_residual = max_residual.max(res);
        Ok(out)
    };

    let base = match solve(spec.f_start) {
        Ok(o) => o,
        Err(e) => return SimResult::invalid(format!("{e}")),
    };
    let h0 = differential(&base).norm();
    if h0 < 1e-15 {
        return SimResult::invalid("no low-frequency transfer to the output");
    }
    let gain_db = db20(h0);

    // Find the -3 dB crossing on a doubling grid, then bisect.
    let target = h0 / 2.0_f64.sqrt();
    let mut lo = spec.f_start;
    let mut hi = spec.f_start;
    let mut crossed = false;
    while hi < spec.f_stop {
        hi = (hi * 2.0).min(spec.f_stop);
        match solve(hi) {
            Ok(o) => {
                if differential(&o).norm() < target {
                    crossed = true;
                    break;
                }
                lo = hi;
            }
            Err(e) => return SimResult::invalid(format!("{e}")),
        }
    }
    let bandwidth = if crossed {
        let mut a = lo;
        let mut b = hi;
        for _ in 0..80 {
            let mid = (a * b).sqrt();
            match solve(mid) {
                Ok(o) => {
                    if differential(&o).norm() < target {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                Err(e) => return SimResult::invalid(format!("{e}")),
            }
        }
        (a * b).sqrt()
    } else {
        spec.f_stop
    };

    if max_residual > RESIDUAL_LIMIT {
        return SimResult::invalid(format!("solver residual {max_residual:.3e} too large"));
    }

    let mut measurements = vec![
        ("gain".to_string(), gain_db),
        ("bandwidth".to_string(), bandwidth),
    ];
    if let (Some(p), Some(n)) = (base.get("outp"), base.get("outn")) {
        let mismatch = (db20(p.norm()) - db20(n.norm())).abs();
        measurements.push(("gain_mismatch".to_string(), mismatch));
    }
    let mut result = SimResult::valid(measurements)
        .with_unit("gain", "dB")
        .with_unit("bandwidth", "Hz");
    result.diagnostics = format!("max_residual={max_residual:.3e}");
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::NodeKind;

    fn divider() -> CircuitGraph {
        let mut g = CircuitGraph::default();
        let input = g.add_node(NodeKind::IoNet("in".into())).unwrap();
        let out = g.add_node(NodeKind::IoNet("out".into())).unwrap();
        let gnd = g.add_node(NodeKind::GroundNet).unwrap();
        let r1 = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r1, input, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r1, out, EdgeKind::PassiveMinus).unwrap();
        let r2 = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r2, out, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r2, gnd, EdgeKind::PassiveMinus).unwrap();
        g
    }

    #[test]
    fn divider_gain_minus_six_db() {
        let mut spec = EvaluatorSpec::default();
        spec.c_load = 0.0;
        let r = evaluate_mna_ac(&divider(), &spec);
        assert!(r.sim_valid, "{}", r.diagnostics);
        let gain = r.measurement("gain").unwrap();
        assert!((gain - (-6.0206)).abs() < 0.01, "gain={gain}");
    }

    #[test]
    fn rc_lowpass_bandwidth() {
        let mut g = CircuitGraph::default();
        let input = g.add_node(NodeKind::IoNet("in".into())).unwrap();
        let out = g.add_node(NodeKind::IoNet("out".into())).unwrap();
        let gnd = g.add_node(NodeKind::GroundNet).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r, input, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r, out, EdgeKind::PassiveMinus).unwrap();
        let c = g.add_node(NodeKind::Capacitor).unwrap();
        g.add_edge(c, out, EdgeKind::PassivePlus).unwrap();
        g.add_edge(c, gnd, EdgeKind::PassiveMinus).unwrap();
        let mut spec = EvaluatorSpec::default();
        spec.c_load = 0.0;
        let res = evaluate_mna_ac(&g, &spec);
        assert!(res.sim_valid, "{}", res.diagnostics);
        let expected = 1.0 / (2.0 * std::f64::consts::PI * spec.unit_r * spec.unit_c);
        let bw = res.measurement("bandwidth").unwrap();
        assert!((bw - expected).abs() / expected < 0.01, "bw={bw} vs {expected}");
    }

    #[test]
    fn common_source_matches_hand_formula() {
        let g = fixtures::common_source_r();
        let mut spec = EvaluatorSpec::default();
        spec.c_load = 0.0;
        let (out, residual) = transfer(&g, &spec, spec.f_start).unwrap();
        assert!(residual < 1e-9);
        let gain = out["out"].norm();
        let expected = spec.gm * (spec.ro * spec.unit_r) / (spec.ro + spec.unit_r);
        assert!(
            (gain - expected).abs() / expected < 1e-9,
            "gain={gain} expected={expected}"
        );
    }

    #[test]
    fn resistive_ota_gain_and_mismatch() {
        let g = fixtures::ota_resistive();
        let mut spec = EvaluatorSpec::default();
        spec.c_load = 2e-12;
        let r = evaluate_mna_ac(&g, &spec);
        assert!(r.sim_valid, "{}", r.diagnostics);
        let gain = r.measurement("gain").unwrap();
        let expected = 20.0 * (spec.gm * (spec.ro * spec.unit_r) / (spec.ro + spec.unit_r)).log10();
        assert!((gain - expected).abs() < 0.05, "gain={gain} vs {expected}");
        assert!(r.measurement("gain_mismatch").unwrap() < 1e-9);
        let bw = r.measurement("bandwidth").unwrap();
        assert!(bw < 10e6, "bw={bw}");
    }

    #[test]
    fn mirror_ota_gain() {
        let g = fixtures::ota_mirror();
        let r = evaluate_mna_ac(&g, &EvaluatorSpec::default());
        assert!(r.sim_valid, "{}", r.diagnostics);
        // gm * (ro/2) = 50x -> ~34 dB
        let gain = r.measurement("gain").unwrap();
        assert!(gain > 30.0 && gain < 37.0, "gain={gain}");
    }

    #[test]
    fn floating_gate_net_is_singular() {
        let mut g = fixtures::common_source_r();
        // Re-route the gate to a net touched by nothing else.
        let m = g.components().find(|c| g.kind(*c).is_mos()).unwrap();
        let input = g.find_io("in").unwrap();
        g.remove_edge(m, input, EdgeKind::Gate).unwrap();
        let lonely = g.add_node(NodeKind::GenericNet).unwrap();
        g.add_edge(m, lonely, EdgeKind::Gate).unwrap();
        let r = evaluate_mna_ac(&g, &EvaluatorSpec::default());
        assert!(!r.sim_valid);
    }

    #[test]
    fn bias_gate_catches_capacitor_only_paths() {
        // NMOS whose source reaches ground only through a capacitor: no DC
        // conduction, so the bias gate must reject it.
        let mut g = CircuitGraph::default();
        let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
        let vss = g.add_node(NodeKind::GroundNet).unwrap();
        let input = g.add_node(NodeKind::IoNet("in".into())).unwrap();
        let out = g.add_node(NodeKind::IoNet("out".into())).unwrap();
        let mid = g.add_node(NodeKind::GenericNet).unwrap();
        let m = g.add_node(NodeKind::Nmos).unwrap();
        g.add_edge(m, out, EdgeKind::Drain).unwrap();
        g.add_edge(m, input, EdgeKind::Gate).unwrap();
        g.add_edge(m, mid, EdgeKind::Source).unwrap();
        let r = g.add_node(NodeKind::Resistor).unwrap();
        g.add_edge(r, vdd, EdgeKind::PassivePlus).unwrap();
        g.add_edge(r, out, EdgeKind::PassiveMinus).unwrap();
        let c = g.add_node(NodeKind::Capacitor).unwrap();
        g.add_edge(c, mid, EdgeKind::PassivePlus).unwrap();
        g.add_edge(c, vss, EdgeKind::PassiveMinus).unwrap();
        let res = evaluate_mna_ac(&g, &EvaluatorSpec::default());
        assert!(!res.sim_valid);
        assert!(res.diagnostics.contains("bias-implausible"));
    }
}

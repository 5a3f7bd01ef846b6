//! Bundled circuits: task scaffolds and a small synthetic expert set
//! spanning oscillators, amplifiers, buffers and a comparator.

use crate::graph::{CircuitGraph, EdgeKind, NodeId, NodeKind};

fn mos(g: &mut CircuitGraph, kind: NodeKind, d: NodeId, gate: NodeId, s: NodeId) -> NodeId {
    let m = g.add_node(kind).unwrap();
    g.add_edge(m, d, EdgeKind::Drain).unwrap();
    g.add_edge(m, gate, EdgeKind::Gate).unwrap();
    g.add_edge(m, s, EdgeKind::Source).unwrap();
    m
}

/// Mirrored transistor pair: first member wired to the first element of
/// each terminal pair.
fn mos_pair(
    g: &mut CircuitGraph,
    kind: NodeKind,
    d: (NodeId, NodeId),
    gate: (NodeId, NodeId),
    s: (NodeId, NodeId),
) -> (NodeId, NodeId) {
    let (a, b) = g.add_symmetric_pair(kind).unwrap();
    g.add_edge(a, d.0, EdgeKind::Drain).unwrap();
    g.add_edge(a, gate.0, EdgeKind::Gate).unwrap();
    g.add_edge(a, s.0, EdgeKind::Source).unwrap();
    g.add_edge(b, d.1, EdgeKind::Drain).unwrap();
    g.add_edge(b, gate.1, EdgeKind::Gate).unwrap();
    g.add_edge(b, s.1, EdgeKind::Source).unwrap();
    (a, b)
}

fn resistor(g: &mut CircuitGraph, plus: NodeId, minus: NodeId) -> NodeId {
    let r = g.add_node(NodeKind::Resistor).unwrap();
    g.add_edge(r, plus, EdgeKind::PassivePlus).unwrap();
    g.add_edge(r, minus, EdgeKind::PassiveMinus).unwrap();
    r
}

fn resistor_pair(
    g: &mut CircuitGraph,
    plus: (NodeId, NodeId),
    minus: (NodeId, NodeId),
) -> (NodeId, NodeId) {
    let (a, b) = g.add_symmetric_pair(NodeKind::Resistor).unwrap();
    g.add_edge(a, plus.0, EdgeKind::PassivePlus).unwrap();
    g.add_edge(a, minus.0, EdgeKind::PassiveMinus).unwrap();
    g.add_edge(b, plus.1, EdgeKind::PassivePlus).unwrap();
    g.add_edge(b, minus.1, EdgeKind::PassiveMinus).unwrap();
    (a, b)
}

fn rails(g: &mut CircuitGraph) -> (NodeId, NodeId) {
    let vdd = g.add_node(NodeKind::SupplyNet).unwrap();
    let vss = g.add_node(NodeKind::GroundNet).unwrap();
    (vdd, vss)
}

fn io(g: &mut CircuitGraph, label: &str) -> NodeId {
    g.add_node(NodeKind::IoNet(label.into())).unwrap()
}

fn io_pair(g: &mut CircuitGraph, a: &str, b: &str) -> (NodeId, NodeId) {
    g.add_io_pair(a, b)
}

fn inverter(g: &mut CircuitGraph, vdd: NodeId, vss: NodeId, input: NodeId, output: NodeId) {
    mos(g, NodeKind::Pmos, output, input, vdd);
    mos(g, NodeKind::Nmos, output, input, vss);
}

/// Odd-stage inverter ring; the first stage drives the `out` IO net.
pub fn ring_oscillator(stages: usize) -> CircuitGraph {
    assert!(stages >= 1);
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let out = io(&mut g, "out");
    let mut nets = vec![g.add_node(NodeKind::GenericNet).unwrap(), out];
    for _ in 2..stages {
        nets.push(g.add_node(NodeKind::GenericNet).unwrap());
    }
    for i in 0..stages {
        let input = nets[i];
        let output = nets[(i + 1) % stages];
        inverter(&mut g, vdd, vss, input, output);
    }
    g.set_tag(format!("ring{stages}"));
    g
}

/// Two-stage buffer: in -> m -> out.
pub fn inverter_buffer() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let input = io(&mut g, "in");
    let out = io(&mut g, "out");
    let mid = g.add_node(NodeKind::GenericNet).unwrap();
    inverter(&mut g, vdd, vss, input, mid);
    inverter(&mut g, vdd, vss, mid, out);
    g.set_tag("inverter_buffer");
    g
}

/// Differential pair with resistive loads and differential outputs.
pub fn ota_resistive() -> CircuitGraph {
    let mut g = ota_scaffold();
    let vdd = g.supply().unwrap();
    let outn = g.find_io("outn").unwrap();
    let outp = g.find_io("outp").unwrap();
    resistor_pair(&mut g, (vdd, vdd), (outn, outp));
    g.set_tag("ota_resistive");
    g
}

/// Differential pair with two series resistors per side.
pub fn ota_series() -> CircuitGraph {
    let mut g = ota_scaffold();
    let vdd = g.supply().unwrap();
    let outn = g.find_io("outn").unwrap();
    let outp = g.find_io("outp").unwrap();
    let (mn, mp) = g.add_symmetric_pair(NodeKind::GenericNet).unwrap();
    resistor_pair(&mut g, (vdd, vdd), (mn, mp));
    resistor_pair(&mut g, (mn, mp), (outn, outp));
    g.set_tag("ota_series");
    g
}

/// Five-transistor OTA with a current-mirror load and single-ended output.
/// The mirror breaks left-right symmetry, so everything is common-mode.
pub fn ota_mirror() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let inp = io(&mut g, "inp");
    let inn = io(&mut g, "inn");
    let out = io(&mut g, "out");
    let tail = g.add_node(NodeKind::GenericNet).unwrap();
    let n3 = g.add_node(NodeKind::GenericNet).unwrap();
    mos(&mut g, NodeKind::Nmos, tail, vss, vss); // tail current device
    mos(&mut g, NodeKind::Nmos, n3, inp, tail);
    mos(&mut g, NodeKind::Nmos, out, inn, tail);
    mos(&mut g, NodeKind::Pmos, n3, n3, vdd); // diode-connected
    mos(&mut g, NodeKind::Pmos, out, n3, vdd); // mirror
    g.set_tag("ota_mirror");
    g
}

/// Common-source stage with resistive load.
pub fn common_source_r() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let input = io(&mut g, "in");
    let out = io(&mut g, "out");
    mos(&mut g, NodeKind::Nmos, out, input, vss);
    resistor(&mut g, vdd, out);
    g.set_tag("common_source_r");
    g
}

/// Common-source stage with a diode-connected PMOS load.
pub fn common_source_diode() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let input = io(&mut g, "in");
    let out = io(&mut g, "out");
    mos(&mut g, NodeKind::Nmos, out, input, vss);
    mos(&mut g, NodeKind::Pmos, out, out, vdd);
    g.set_tag("common_source_diode");
    g
}

/// NMOS source follower with resistive bias.
pub fn source_follower() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let input = io(&mut g, "in");
    let out = io(&mut g, "out");
    mos(&mut g, NodeKind::Nmos, vdd, input, out);
    resistor(&mut g, out, vss);
    g.set_tag("source_follower");
    g
}

/// Resistor-biased current mirror driving a resistive load.
pub fn current_mirror_stage() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let out = io(&mut g, "out");
    let n1 = g.add_node(NodeKind::GenericNet).unwrap();
    mos(&mut g, NodeKind::Nmos, n1, n1, vss); // diode reference
    mos(&mut g, NodeKind::Nmos, out, n1, vss); // mirror
    resistor(&mut g, vdd, n1);
    resistor(&mut g, vdd, out);
    g.set_tag("current_mirror_stage");
    g
}

/// Clocked regenerative comparator (StrongARM latch).
pub fn strongarm() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let clk = io(&mut g, "clk");
    let (inp, inn) = io_pair(&mut g, "inp", "inn");
    let (outn, outp) = io_pair(&mut g, "outn", "outp");
    let tail = g.add_node(NodeKind::GenericNet).unwrap();
    let (xn, xp) = g.add_symmetric_pair(NodeKind::GenericNet).unwrap();
    mos(&mut g, NodeKind::Nmos, tail, clk, vss);
    mos_pair(&mut g, NodeKind::Nmos, (xn, xp), (inp, inn), (tail, tail));
    // Cross-coupled NMOS latch over the input-pair drains.
    mos_pair(&mut g, NodeKind::Nmos, (outn, outp), (outp, outn), (xn, xp));
    // Cross-coupled PMOS latch.
    mos_pair(&mut g, NodeKind::Pmos, (outn, outp), (outp, outn), (vdd, vdd));
    // Precharge switches.
    mos_pair(&mut g, NodeKind::Pmos, (outn, outp), (clk, clk), (vdd, vdd));
    g.set_tag("strongarm");
    g
}

/// Ring-oscillator task seed: one wired inverter plus rails and the output
/// net.
pub fn ro_scaffold() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (vdd, vss) = rails(&mut g);
    let out = io(&mut g, "out");
    let n1 = g.add_node(NodeKind::GenericNet).unwrap();
    inverter(&mut g, vdd, vss, n1, out);
    g.set_tag("ro_scaffold");
    g
}

/// OTA task seed: differential pair and tail device; loads are left to the
/// agent. The supply net starts unwired.
pub fn ota_scaffold() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (_vdd, vss) = rails(&mut g);
    let (inp, inn) = io_pair(&mut g, "inp", "inn");
    let (outn, outp) = io_pair(&mut g, "outn", "outp");
    let tail = g.add_node(NodeKind::GenericNet).unwrap();
    mos(&mut g, NodeKind::Nmos, tail, vss, vss);
    mos_pair(&mut g, NodeKind::Nmos, (outn, outp), (inp, inn), (tail, tail));
    g.set_tag("ota_scaffold");
    g
}

/// Comparator task seed: clocked tail and input pair with internal drain
/// nets; latches are left to the agent.
pub fn comparator_scaffold() -> CircuitGraph {
    let mut g = CircuitGraph::default();
    let (_vdd, vss) = rails(&mut g);
    let clk = io(&mut g, "clk");
    let (inp, inn) = io_pair(&mut g, "inp", "inn");
    let (_outn, _outp) = io_pair(&mut g, "outn", "outp");
    let tail = g.add_node(NodeKind::GenericNet).unwrap();
    let (xn, xp) = g.add_symmetric_pair(NodeKind::GenericNet).unwrap();
    mos(&mut g, NodeKind::Nmos, tail, clk, vss);
    mos_pair(&mut g, NodeKind::Nmos, (xn, xp), (inp, inn), (tail, tail));
    g.set_tag("comparator_scaffold");
    g
}

/// The bundled expert set: twelve circuits across the design classes used
/// by the tasks.
pub fn expert_set() -> Vec<CircuitGraph> {
    vec![
        ring_oscillator(3),
        ring_oscillator(5),
        ring_oscillator(7),
        inverter_buffer(),
        ota_resistive(),
        ota_series(),
        ota_mirror(),
        common_source_r(),
        common_source_diode(),
        source_follower(),
        current_mirror_stage(),
        strongarm(),
    ]
}

//! SPICE-subset netlist ingestion.
//!
//! Documented grammar:
//! - `*` comment lines, `+` continuation lines, blank lines.
//! - `.subckt NAME ports...` / `.ends`: the last subcircuit defined is the
//!   device under test; its ports become IO nets (rails excluded).
//! - `M<name> d g s [b] <model>`: MOS card; the model token must name an
//!   nfet/nmos or pfet/pmos device. Trailing `k=v` parameters are ignored.
//! - `R<name> a b [value]`, `C<name> a b [value]`: passives, unit-sized,
//!   value token ignored.
//! - `X<name> nets... <subckt>`: instance expansion with `inst.` prefixes
//!   on internal nets.
//! - `.model` / `.param` / `.end` are accepted and ignored.
//! - Net names `vdd|vcc|vpwr` map to the supply net and `vss|gnd|0|vgnd`
//!   to ground. In flat netlists (no subckt), nets named `in*`, `out*`,
//!   `clk*` or `io*` become IO nets.
//!
//! Anything else — bipolar `Q` cards, inductors, sources, unknown dot
//! cards — is rejected.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{CircuitGraph, EdgeKind, GraphError, NodeId, NodeKind};

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("line {line}: unsupported device card `{card}`")]
    UnsupportedDevice { line: usize, card: String },
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
}

fn err(line: usize, msg: impl Into<String>) -> NetlistError {
    NetlistError::ParseError { line, msg: msg.into() }
}

#[derive(Debug, Clone)]
struct Card {
    line: usize,
    tokens: Vec<String>,
}

#[derive(Debug, Clone)]
struct Subckt {
    ports: Vec<String>,
    cards: Vec<Card>,
}

fn tokenize(text: &str) -> Vec<Card> {
    let mut cards: Vec<Card> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') || trimmed.starts_with(';') {
            continue;
        }
        let tokens: Vec<String> = trimmed.split_whitespace().map(str::to_lowercase).collect();
        if let Some(first) = trimmed.chars().next() {
            if first == '+' {
                if let Some(prev) = cards.last_mut() {
                    prev.tokens
                        .extend(trimmed[1..].split_whitespace().map(str::to_lowercase));
                }
                continue;
            }
        }
        cards.push(Card { line, tokens });
    }
    cards
}

fn is_supply(name: &str) -> bool {
    matches!(name, "vdd" | "vcc" | "vpwr")
}

fn is_ground(name: &str) -> bool {
    matches!(name, "vss" | "gnd" | "0" | "vgnd")
}

fn flat_io(name: &str) -> bool {
    ["in", "out", "clk", "io"].iter().any(|p| name.starts_with(p))
}

/// A flattened device card after subcircuit expansion.
#[derive(Debug, Clone)]
enum Device {
    Mos { kind: NodeKind, d: String, g: String, s: String, b: Option<String>, line: usize },
    Passive { kind: NodeKind, p: String, m: String },
}

struct Flattener<'a> {
    subckts: &'a BTreeMap<String, Subckt>,
    devices: Vec<Device>,
}

impl Flattener<'_> {
    fn expand(
        &mut self,
        cards: &[Card],
        net_map: &BTreeMap<String, String>,
        prefix: &str,
        depth: usize,
    ) -> Result<(), NetlistError> {
        if depth > 8 {
            return Err(err(0, "subcircuit nesting deeper than 8"));
        }
        for card in cards {
            let t = &card.tokens;
            let name = &t[0];
            let resolve = |net: &str| -> String {
                if let Some(mapped) = net_map.get(net) {
                    mapped.clone()
                } else if is_supply(net) || is_ground(net) {
                    net.to_string()
                } else {
                    format!("{prefix}{net}")
                }
            };
            match name.chars().next().unwrap() {
                'm' => {
                    // M d g s [b] model [params...]
                    let nets: Vec<&String> =
                        t[1..].iter().take_while(|x| !x.contains('=')).collect();
                    if nets.len() < 4 {
                        return Err(err(card.line, "MOS card needs d g s and a model"));
                    }
                    let (d, g, s, b, model) = if nets.len() >= 5 {
                        (nets[0], nets[1], nets[2], Some(nets[3]), nets[4])
                    } else {
                        (nets[0], nets[1], nets[2], None, nets[3])
                    };
                    let kind = if model.contains("nfet") || model.contains("nmos") {
                        NodeKind::Nmos
                    } else if model.contains("pfet") || model.contains("pmos") {
                        NodeKind::Pmos
                    } else {
                        return Err(err(card.line, format!("unknown MOS model `{model}`")));
                    };
                    self.devices.push(Device::Mos {
                        kind,
                        d: resolve(d),
                        g: resolve(g),
                        s: resolve(s),
                        b: b.map(|x| resolve(x)),
                        line: card.line,
                    });
                }
                'r' | 'c' => {
                    if t.len() < 3 {
                        return Err(err(card.line, "passive card needs two nets"));
                    }
                    let kind = if name.starts_with('r') {
                        NodeKind::Resistor
                    } else {
                        NodeKind::Capacitor
                    };
                    self.devices.push(Device::Passive {
                        kind,
                        p: resolve(&t[1]),
                        m: resolve(&t[2]),
                    });
                }
                'x' => {
                    if t.len() < 3 {
                        return Err(err(card.line, "instance card needs nets and a name"));
                    }
                    let sub_name = t.last().unwrap();
                    let sub = self.subckts.get(sub_name).ok_or_else(|| {
                        err(card.line, format!("unknown subcircuit `{sub_name}`"))
                    })?;
                    let nets = &t[1..t.len() - 1];
                    if nets.len() != sub.ports.len() {
                        return Err(err(
                            card.line,
                            format!(
                                "instance has {} nets, subckt `{sub_name}` has {} ports",
                                nets.len(),
                                sub.ports.len()
                            ),
                        ));
                    }
                    let mut inner_map = BTreeMap::new();
                    for (port, net) in sub.ports.iter().zip(nets) {
                        inner_map.insert(port.clone(), resolve(net));
                    }
                    let inst = name.trim_start_matches('x');
                    let inner_prefix = format!("{prefix}{inst}.");
                    self.expand(&sub.cards, &inner_map, &inner_prefix, depth + 1)?;
                }
                _ => {
                    return Err(NetlistError::UnsupportedDevice {
                        line: card.line,
                        card: t.join(" "),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parse a netlist into a circuit graph with an all-common-mode registry.
pub fn parse_netlist(text: &str) -> Result<CircuitGraph, NetlistError> {
    let cards = tokenize(text);

    // Separate subcircuit definitions from top-level cards.
    let mut subckts: BTreeMap<String, Subckt> = BTreeMap::new();
    let mut top: Vec<Card> = Vec::new();
    let mut current: Option<(String, Subckt)> = None;
    let mut last_subckt: Option<String> = None;
    for card in cards {
        let head = card.tokens[0].as_str();
        if head == ".subckt" {
            if current.is_some() {
                return Err(err(card.line, "nested .subckt definitions"));
            }
            if card.tokens.len() < 2 {
                return Err(err(card.line, ".subckt needs a name"));
            }
            let name = card.tokens[1].clone();
            let ports = card.tokens[2..].to_vec();
            last_subckt = Some(name.clone());
            current = Some((name, Subckt { ports, cards: Vec::new() }));
        } else if head == ".ends" {
            let (name, sub) = current
                .take()
                .ok_or_else(|| err(card.line, ".ends without .subckt"))?;
            subckts.insert(name, sub);
        } else if head == ".end" || head == ".model" || head == ".param" {
            continue;
        } else if head.starts_with('.') {
            return Err(err(card.line, format!("unknown dot card `{head}`")));
        } else if let Some((_, sub)) = current.as_mut() {
            sub.cards.push(card);
        } else {
            top.push(card);
        }
    }
    if current.is_some() {
        return Err(err(0, ".subckt not closed by .ends"));
    }

    // Determine the circuit body and its IO names.
    let (body, io_names): (Vec<Card>, Vec<String>) = if !top.is_empty() {
        (top, Vec::new())
    } else if let Some(name) = last_subckt {
        let sub = subckts[&name].clone();
        let io = sub
            .ports
            .iter()
            .filter(|p| !is_supply(p) && !is_ground(p))
            .cloned()
            .collect();
        (sub.cards.clone(), io)
    } else {
        return Err(err(0, "no circuit cards found"));
    };

    let io_set: Vec<String> = io_names;
    let explicit_io = !io_set.is_empty();
    let mut flat = Flattener { subckts: &subckts, devices: Vec::new() };
    let seed_map: BTreeMap<String, String> =
        io_set.iter().map(|p| (p.clone(), p.clone())).collect();
    flat.expand(&body, &seed_map, "", 0)?;

    // Build the graph: nets first (deterministic name order of first use),
    // then one component per device.
    let mut g = CircuitGraph::default();
    let mut nets: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut net_of = |g: &mut CircuitGraph, name: &str| -> Result<NodeId, NetlistError> {
        if let Some(id) = nets.get(name) {
            return Ok(*id);
        }
        let kind = if is_supply(name) {
            NodeKind::SupplyNet
        } else if is_ground(name) {
            NodeKind::GroundNet
        } else if io_set.iter().any(|p| p == name) || (!explicit_io && flat_io(name)) {
            NodeKind::IoNet(name.to_string())
        } else {
            NodeKind::GenericNet
        };
        let id = g.add_node(kind)?;
        nets.insert(name.to_string(), id);
        Ok(id)
    };

    let devices = std::mem::take(&mut flat.devices);
    for dev in &devices {
        match dev {
            Device::Mos { kind, d, g: gate, s, b, line } => {
                let dn = net_of(&mut g, d)?;
                let gn = net_of(&mut g, gate)?;
                let sn = net_of(&mut g, s)?;
                let m = g.add_node(kind.clone())?;
                g.add_edge(m, dn, EdgeKind::Drain)?;
                g.add_edge(m, gn, EdgeKind::Gate)?;
                g.add_edge(m, sn, EdgeKind::Source)?;
                if let Some(bulk) = b {
                    // Auto-bulk mode accepts only the default rail tie.
                    let default_ok = (*kind == NodeKind::Nmos && is_ground(bulk))
                        || (*kind == NodeKind::Pmos && is_supply(bulk));
                    if !default_ok {
                        return Err(err(
                            *line,
                            format!("bulk `{bulk}` must tie to its rail in auto-bulk mode"),
                        ));
                    }
                }
            }
            Device::Passive { kind, p, m } => {
                let pn = net_of(&mut g, p)?;
                let mn = net_of(&mut g, m)?;
                let c = g.add_node(kind.clone())?;
                g.add_edge(c, pn, EdgeKind::PassivePlus)?;
                g.add_edge(c, mn, EdgeKind::PassiveMinus)?;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{canonical_hash, validate_structure};
    use crate::sim::emit_netlist;

    #[test]
    fn mos_card_maps_terminals() {
        let g = parse_netlist("M1 out in vss vss nfet\n").unwrap();
        assert_eq!(g.node_count(), 4);
        let m = g.components().next().unwrap();
        assert_eq!(*g.kind(m), NodeKind::Nmos);
        assert_eq!(g.kind(g.terminal_net(m, EdgeKind::Drain).unwrap()).clone(), NodeKind::IoNet("out".into()));
        assert_eq!(*g.kind(g.terminal_net(m, EdgeKind::Source).unwrap()), NodeKind::GroundNet);
    }

    #[test]
    fn resistor_card() {
        let g = parse_netlist("R1 a b\n").unwrap();
        let r = g.components().next().unwrap();
        assert_eq!(*g.kind(r), NodeKind::Resistor);
        assert!(g.terminal_net(r, EdgeKind::PassivePlus).is_some());
        assert!(g.terminal_net(r, EdgeKind::PassiveMinus).is_some());
    }

    #[test]
    fn bipolar_rejected() {
        assert!(matches!(
            parse_netlist("Q1 c b e npn\n"),
            Err(NetlistError::UnsupportedDevice { .. })
        ));
    }

    #[test]
    fn wrong_bulk_rejected() {
        assert!(parse_netlist("M1 out in vss vdd nfet\n").is_err());
    }

    #[test]
    fn subckt_ports_become_io() {
        let text = ".subckt amp in out vdd vss\nM1 out in vss vss nfet\nR1 vdd out\n.ends\n";
        let g = parse_netlist(text).unwrap();
        assert!(g.find_io("in").is_some());
        assert!(g.find_io("out").is_some());
        assert!(validate_structure(&g).complete);
    }

    #[test]
    fn instance_expansion() {
        let text = "\
.subckt inv a y vdd vss
M1 y a vdd vdd pfet
M2 y a vss vss nfet
.ends
.subckt buf in out vdd vss
X1 in m vdd vss inv
X2 m out vdd vss inv
.ends
";
        let g = parse_netlist(text).unwrap();
        assert_eq!(g.components().count(), 4);
        assert!(validate_structure(&g).complete);
        // Structure matches the bundled buffer fixture.
        assert_eq!(canonical_hash(&g), canonical_hash(&crate::fixtures::inverter_buffer()));
    }

    #[test]
    fn emit_parse_round_trip_all_fixtures() {
        for g in crate::fixtures::expert_set() {
            let netlist = emit_netlist(&g, "dut").unwrap();
            let back = parse_netlist(&netlist)
                .unwrap_or_else(|e| panic!("{:?}: {e}\n{netlist}", g.tag()));
            assert_eq!(
                canonical_hash(&back),
                canonical_hash(&g),
                "{:?} round trip\n{netlist}",
                g.tag()
            );
        }
    }
}

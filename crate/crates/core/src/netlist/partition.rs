use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::twoport::{Element, ElementKind, SMatrix, Subcircuit, SwitchState, GROUND};

use super::{EntryKind, Netlist, NetlistError, ParamValues, SwitchDrive};

/// One tagged group extracted as a ground-referenced two-port.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ENetwork {
    pub label: String,
    /// Nominal-valued two-port, port 1 nearest the circuit input.
    pub subcircuit: Subcircuit,
    pub element_names: Vec<String>,
    /// Multiset of (kind, port-role connectivity); equal keys mean equal
    /// topology regardless of element names.
    pub topology_key: String,
}

impl ENetwork {
    pub fn port_nodes(&self) -> (&str, &str) {
        (&self.subcircuit.port1.0, &self.subcircuit.port2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Ordered along the signal path from the input port.
    pub enetworks: Vec<ENetwork>,
    /// Untagged element names in declaration order.
    pub residual: Vec<String>,
    /// Residual design parameters: sizable untagged values and the states
    /// (1 = on) of untagged controlling switches, in declaration order.
    pub residual_params: Vec<(String, f64)>,
}

impl Partition {
    /// Circuit-level topology key: the E-network keys in path order.
    pub fn topology_key(&self) -> String {
        self.enetworks.iter().map(|e| e.topology_key.as_str()).collect::<Vec<_>>().join(" | ")
    }

    /// The full circuit with every E-network replaced by an S-parameter
    /// block. Residual elements take `values` and `switches` as in
    /// [`Netlist::instantiate`].
    pub fn block_circuit(
        &self,
        n: &Netlist,
        blocks: &[SMatrix],
        z0: f64,
        values: &ParamValues,
        switches: &BTreeMap<String, SwitchState>,
    ) -> Result<Subcircuit, NetlistError> {
        assert_eq!(blocks.len(), self.enetworks.len(), "one S block per E-network");
        let full = n.instantiate(values, switches)?;
        let owner: HashMap<&str, usize> = self
            .enetworks
            .iter()
            .enumerate()
            .flat_map(|(i, e)| e.element_names.iter().map(move |name| (name.as_str(), i)))
            .collect();
        let mut placed = vec![false; blocks.len()];
        let mut elements = Vec::with_capacity(full.elements.len());
        for e in full.elements {
            match owner.get(e.name.as_str()) {
                None => elements.push(e),
                Some(&i) if !placed[i] => {
                    placed[i] = true;
                    let net = &self.enetworks[i];
                    let (p, q) = net.port_nodes();
                    elements.push(Element::new(
                        format!("X{}", net.label),
                        ElementKind::SParams { s: blocks[i], z0 },
                        p,
                        q,
                    ));
                }
                Some(_) => {}
            }
        }
        Ok(Subcircuit { elements, port1: full.port1, port2: full.port2 })
    }
}

pub fn partition(n: &Netlist) -> Result<Partition, NetlistError> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in n.entries.iter().enumerate() {
        if let Some(t) = &e.tag {
            groups.entry(t.as_str()).or_default().push(i);
        }
    }

    let dist = bfs_distances(n);
    let nominal = n.nominal();
    let port_nodes: BTreeSet<&str> = [n.ports.0.as_str(), n.ports.1.as_str()].into();

    let mut nets = Vec::new();
    for (label, members) in &groups {
        let inside: BTreeSet<usize> = members.iter().copied().collect();
        let group_nodes: BTreeSet<&str> =
            members.iter().flat_map(|&i| n.entries[i].terminals()).filter(|&t| t != GROUND).collect();
        let outside_nodes: BTreeSet<&str> = n
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| !inside.contains(i))
            .flat_map(|(_, e)| e.terminals())
            .collect();
        let boundary: Vec<&str> =
            group_nodes.iter().copied().filter(|v| outside_nodes.contains(v) || port_nodes.contains(v)).collect();
        if boundary.len() != 2 {
            return Err(NetlistError::NotTwoPort { label: label.to_string(), found: boundary.len() });
        }
        let ambiguous = || NetlistError::AmbiguousOrder { label: label.to_string() };
        let d0 = *dist.get(boundary[0]).ok_or_else(ambiguous)?;
        let d1 = *dist.get(boundary[1]).ok_or_else(ambiguous)?;
        let (p1, p2, key_dist) = match d0.cmp(&d1) {
            std::cmp::Ordering::Less => (boundary[0], boundary[1], d0),
            std::cmp::Ordering::Greater => (boundary[1], boundary[0], d1),
            std::cmp::Ordering::Equal => return Err(ambiguous()),
        };

        let elements: Vec<Element> = members.iter().map(|&i| nominal.elements[i].clone()).collect();
        let topology_key = topology_key(&elements, p1, p2);
        nets.push((
            key_dist,
            ENetwork {
                label: label.to_string(),
                subcircuit: Subcircuit::grounded(elements, p1, p2),
                element_names: members.iter().map(|&i| n.entries[i].name.clone()).collect(),
                topology_key,
            },
        ));
    }
    // Stable sort keeps lexicographic label order on distance ties.
    nets.sort_by_key(|(d, _)| *d);

    let residual: Vec<String> = n.entries.iter().filter(|e| e.tag.is_none()).map(|e| e.name.clone()).collect();
    let residual_params = n
        .entries
        .iter()
        .filter(|e| e.tag.is_none())
        .filter_map(|e| match &e.kind {
            EntryKind::Switch(SwitchDrive::State(s)) => Some((e.name.clone(), if s.is_on() { 1.0 } else { 0.0 })),
            k if e.is_sizable() => Some((e.name.clone(), k.value().expect("sizable"))),
            _ => None,
        })
        .collect();

    Ok(Partition { enetworks: nets.into_iter().map(|(_, e)| e).collect(), residual, residual_params })
}

/// Hop distance of every non-ground node from the input port node, treating
/// every element as connecting all of its non-ground terminals.
fn bfs_distances(n: &Netlist) -> HashMap<&str, usize> {
    let mut adj: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for e in &n.entries {
        let t: Vec<&str> = e.terminals().filter(|&t| t != GROUND).collect();
        for &a in &t {
            for &b in &t {
                if a != b {
                    adj.entry(a).or_default().insert(b);
                }
            }
        }
    }
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(n.ports.0.as_str(), 0);
    queue.push_back(n.ports.0.as_str());
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        for &w in adj.get(v).into_iter().flatten() {
            if !dist.contains_key(w) {
                dist.insert(w, d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

fn topology_key(elements: &[Element], p1: &str, p2: &str) -> String {
    let role = |node: &str| -> &'static str {
        if node == p1 {
            "p1"
        } else if node == p2 {
            "p2"
        } else if node == GROUND {
            "0"
        } else {
            "i"
        }
    };
    let mut items: Vec<String> = elements
        .iter()
        .map(|e| {
            let mut pair = [role(&e.nodes.0), role(&e.nodes.1)];
            let directed = matches!(e.kind, ElementKind::Vccs(_));
            if !directed {
                pair.sort_unstable();
            }
            match &e.control {
                Some((a, b)) => format!("{}({},{};{},{})", e.kind.label(), pair[0], pair[1], role(a), role(b)),
                None => format!("{}({},{})", e.kind.label(), pair[0], pair[1]),
            }
        })
        .collect();
    items.sort();
    items.join(" ")
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn untagged_vccs_between_networks_is_residual() {
        let n = parse(
            ".ports in out\nL1 in a 1n @m1\nC1 a 0 1p @m1\nG1 b 0 a 0 20m\nR1 b 0 300 fixed\nL2 b out 2n @m2\nC2 out 0 1p @m2\n.range G1 1m 50m\n",
        )
        .unwrap();
        let p = partition(&n).unwrap();
        assert_eq!(p.enetworks.len(), 2);
        assert_eq!(p.enetworks[0].label, "m1");
        assert_eq!(p.enetworks[0].port_nodes(), ("in", "a"));
        assert_eq!(p.enetworks[1].port_nodes(), ("b", "out"));
        assert_eq!(p.residual, ["G1", "R1"]);
        assert_eq!(p.residual_params, [("G1".to_string(), 20e-3)]);
    }

    #[test]
    fn whole_circuit_single_network() {
        let n = parse(".ports in out\nL1 in m 1n @all\nC1 m 0 1p @all\nL2 m out 1n @all\n").unwrap();
        let p = partition(&n).unwrap();
        assert_eq!(p.enetworks.len(), 1);
        assert!(p.residual.is_empty());
        assert_eq!(p.enetworks[0].port_nodes(), ("in", "out"));
    }

    #[test]
    fn untagged_only() {
        let n = parse(".ports in out\nR1 in out 10\nR2 out 0 50\n").unwrap();
        let p = partition(&n).unwrap();
        assert!(p.enetworks.is_empty());
        assert_eq!(p.residual.len(), 2);
    }

    #[test]
    fn three_boundary_nodes_is_not_two_port() {
        let n = parse(".ports in out\nL1 in a 1n @x\nL2 a b 1n @x\nR1 a 0 50\nR2 b out 10\n").unwrap();
        assert_eq!(partition(&n), Err(NetlistError::NotTwoPort { label: "x".into(), found: 3 }));
    }

    #[test]
    fn equidistant_ports_are_ambiguous() {
        // Both boundary nodes of x hang directly off the input node.
        let n = parse(".ports in out\nR1 in a 10\nR2 in b 10\nL1 a b 1n @x\nR3 b out 10\n").unwrap();
        assert_eq!(partition(&n), Err(NetlistError::AmbiguousOrder { label: "x".into() }));
    }

    #[test]
    fn order_ignores_declaration_order_within_group() {
        let a = parse(".ports in out\nL1 in m 1n @n1\nC1 m 0 1p @n1\nL2 m out 2n @n2\nC2 out 0 2p @n2\n").unwrap();
        let b = parse(".ports in out\nC2 out 0 2p @n2\nC1 m 0 1p @n1\nL2 m out 2n @n2\nL1 in m 1n @n1\n").unwrap();
        let (pa, pb) = (partition(&a).unwrap(), partition(&b).unwrap());
        let labels = |p: &Partition| p.enetworks.iter().map(|e| e.label.clone()).collect::<Vec<_>>();
        assert_eq!(labels(&pa), labels(&pb));
        assert_eq!(pa.topology_key(), pb.topology_key());
    }

    #[test]
    fn same_structure_same_key() {
        let n = parse(".ports in out\nL1 in a 1n @x\nC1 a 0 1p @x\nL2 a out 3n @y\nC2 out 0 2p @y\n").unwrap();
        let p = partition(&n).unwrap();
        assert_eq!(p.enetworks[0].topology_key, p.enetworks[1].topology_key);
        assert_eq!(p.enetworks[0].topology_key, "C(0,p2) L(p1,p2)");
    }
}

//! Modified nodal analysis of linear two-ports.
//!
//! Unknowns are the non-ground node voltages plus two port currents per
//! embedded S-parameter block. Both ports are terminated in `z0`; port `k`
//! is driven by a 1 V source behind `z0` (as a Norton current `1/z0`), so
//! `S_kk = 2·V_k − 1` and `S_jk = 2·V_j`.
//!
//! Shorts, inductors and closed switches are stamped as impedance branches
//! (`V_p − V_n − Z·I = 0`) with their own current unknown. As admittances
//! they would dwarf the port conductances (a 1 nH inductor is 1e8 S at 1 Hz)
//! and cost up to eight digits in elimination.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::element::{element_admittance, ElementKind, GROUND, SWITCH_ON_RESISTANCE};
use super::{linalg, Complex, Element, Frequency, ReferenceImpedance, SMatrix, SwitchState, TwoPortError};

/// A port is a (signal node, reference node) pair.
pub type Port = (String, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subcircuit {
    pub elements: Vec<Element>,
    pub port1: Port,
    pub port2: Port,
}

impl Subcircuit {
    /// Two-port with both ports referenced to ground.
    pub fn grounded(elements: Vec<Element>, in_node: &str, out_node: &str) -> Self {
        Self {
            elements,
            port1: (in_node.to_string(), GROUND.to_string()),
            port2: (out_node.to_string(), GROUND.to_string()),
        }
    }

    /// Checks element values and that both ports hang on the same connected
    /// piece of circuit.
    pub fn validate(&self) -> Result<(), TwoPortError> {
        for e in &self.elements {
            e.validate()?;
        }
        for (k, (node, reference)) in [(1, &self.port1), (2, &self.port2)] {
            if node == reference {
                return Err(TwoPortError::InvalidTopology(format!("port {k} node equals its reference")));
            }
        }

        let mut uf = UnionFind::default();
        for e in &self.elements {
            if matches!(e.kind, ElementKind::Open) {
                continue;
            }
            let t: Vec<&str> = e.terminals().collect();
            for w in t.windows(2) {
                uf.union(w[0], w[1]);
            }
            if matches!(e.kind, ElementKind::SParams { .. }) {
                uf.union(&e.nodes.0, GROUND);
            }
        }
        let touched: BTreeSet<&str> =
            self.elements.iter().filter(|e| !matches!(e.kind, ElementKind::Open)).flat_map(|e| e.terminals()).collect();
        for (k, (node, _)) in [(1, &self.port1), (2, &self.port2)] {
            if !touched.contains(node.as_str()) {
                return Err(TwoPortError::InvalidTopology(format!("port {k} node `{node}` is floating")));
            }
        }
        if uf.find(&self.port1.0) != uf.find(&self.port2.0) {
            return Err(TwoPortError::InvalidTopology("port nodes are not connected".into()));
        }
        Ok(())
    }
}

#[derive(Default)]
struct UnionFind {
    parent: HashMap<String, String>,
}

impl UnionFind {
    fn find(&mut self, x: &str) -> String {
        let p = self.parent.entry(x.to_string()).or_insert_with(|| x.to_string()).clone();
        if p == x {
            return p;
        }
        let root = self.find(&p);
        self.parent.insert(x.to_string(), root.clone());
        root
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }
}

struct System {
    index: HashMap<String, usize>,
    a: Vec<Vec<Complex>>,
}

impl System {
    fn node(&self, name: &str) -> Option<usize> {
        if name == GROUND {
            None
        } else {
            Some(self.index[name])
        }
    }

    fn add(&mut self, r: Option<usize>, c: Option<usize>, v: Complex) {
        if let (Some(r), Some(c)) = (r, c) {
            self.a[r][c] += v;
        }
    }

    fn stamp_admittance(&mut self, p: &str, n: &str, y: Complex) {
        let (p, n) = (self.node(p), self.node(n));
        self.add(p, p, y);
        self.add(n, n, y);
        self.add(p, n, -y);
        self.add(n, p, -y);
    }
}

fn branch_impedance(kind: &ElementKind, f: Frequency) -> Option<Complex> {
    match *kind {
        ElementKind::Short => Some(Complex::new(0.0, 0.0)),
        ElementKind::Inductor(l) => Some(f.laplace() * l),
        ElementKind::Switch(SwitchState::On) => Some(Complex::new(SWITCH_ON_RESISTANCE, 0.0)),
        _ => None,
    }
}

/// S-parameters of `c` at `f`, both ports terminated in `z0`.
pub fn mna_two_port(c: &Subcircuit, f: Frequency, z0: ReferenceImpedance) -> Result<SMatrix, TwoPortError> {
    c.validate()?;

    let mut order: Vec<String> = Vec::new();
    let mut index = HashMap::new();
    let port_nodes = [&c.port1.0, &c.port1.1, &c.port2.0, &c.port2.1];
    for name in port_nodes.into_iter().map(String::as_str).chain(c.elements.iter().flat_map(|e| e.terminals())) {
        if name != GROUND && !index.contains_key(name) {
            index.insert(name.to_string(), order.len());
            order.push(name.to_string());
        }
    }
    let n_nodes = order.len();
    let n_aux: usize = c
        .elements
        .iter()
        .map(|e| match e.kind {
            ElementKind::SParams { .. } => 2,
            _ if branch_impedance(&e.kind, f).is_some() => 1,
            _ => 0,
        })
        .sum();
    let dim = n_nodes + n_aux;
    let zero = Complex::new(0.0, 0.0);
    let mut sys = System { index, a: vec![vec![zero; dim]; dim] };

    let mut next_aux = n_nodes;
    for e in &c.elements {
        match &e.kind {
            ElementKind::Vccs(gm) => {
                let (cp, cn) = e.control.as_ref().expect("validated");
                let (op, on) = (sys.node(&e.nodes.0), sys.node(&e.nodes.1));
                let (cp, cn) = (sys.node(cp), sys.node(cn));
                let g = Complex::new(*gm, 0.0);
                sys.add(op, cp, g);
                sys.add(op, cn, -g);
                sys.add(on, cp, -g);
                sys.add(on, cn, g);
            }
            kind if branch_impedance(kind, f).is_some() => {
                e.validate()?;
                let z = branch_impedance(kind, f).expect("checked");
                let (p, n) = (sys.node(&e.nodes.0), sys.node(&e.nodes.1));
                let aux = Some(next_aux);
                next_aux += 1;
                let one = Complex::new(1.0, 0.0);
                sys.add(p, aux, one);
                sys.add(n, aux, -one);
                sys.add(aux, p, one);
                sys.add(aux, n, -one);
                sys.add(aux, aux, -z);
            }
            ElementKind::SParams { s, z0: zb } => {
                let ports = [sys.node(&e.nodes.0), sys.node(&e.nodes.1)];
                let aux = [next_aux, next_aux + 1];
                next_aux += 2;
                let sm = [[s.s11, s.s12], [s.s21, s.s22]];
                for k in 0..2 {
                    // Port current leaves the node into the block.
                    sys.add(ports[k], Some(aux[k]), Complex::new(1.0, 0.0));
                    // (I − S)·V − z0·(I + S)·I = 0
                    for j in 0..2 {
                        let delta = if j == k { 1.0 } else { 0.0 };
                        sys.add(Some(aux[k]), ports[j], Complex::new(delta, 0.0) - sm[k][j]);
                        sys.add(Some(aux[k]), Some(aux[j]), -(*zb) * (Complex::new(delta, 0.0) + sm[k][j]));
                    }
                }
            }
            _ => {
                let y = element_admittance(e, f)?;
                if y != zero {
                    sys.stamp_admittance(&e.nodes.0, &e.nodes.1, y);
                }
            }
        }
    }

    let g0 = Complex::new(1.0 / z0.ohms(), 0.0);
    sys.stamp_admittance(&c.port1.0, &c.port1.1, g0);
    sys.stamp_admittance(&c.port2.0, &c.port2.1, g0);

    let mut rhs = vec![vec![zero; 2]; dim];
    for (k, (p, n)) in [&c.port1, &c.port2].into_iter().enumerate() {
        if let Some(i) = sys.node(p) {
            rhs[i][k] += g0;
        }
        if let Some(i) = sys.node(n) {
            rhs[i][k] -= g0;
        }
    }

    let sol = linalg::solve(sys.a.clone(), rhs).ok_or(TwoPortError::SingularNetwork)?;
    let idx = sys.index;
    let port_v = |port: &Port, k: usize| -> Complex {
        let v = |name: &str| if name == GROUND { zero } else { sol[idx[name]][k] };
        v(&port.0) - v(&port.1)
    };
    let one = Complex::new(1.0, 0.0);
    let s = SMatrix {
        s11: 2.0 * port_v(&c.port1, 0) - one,
        s21: 2.0 * port_v(&c.port2, 0),
        s12: 2.0 * port_v(&c.port1, 1),
        s22: 2.0 * port_v(&c.port2, 1) - one,
    };
    if !s.is_finite() {
        return Err(TwoPortError::SingularNetwork);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoport::{abcd_to_s, check_reciprocity, AbcdMatrix, SwitchState};

    fn z0() -> ReferenceImpedance {
        ReferenceImpedance::default()
    }

    fn f(hz: f64) -> Frequency {
        Frequency::new(hz).unwrap()
    }

    #[test]
    fn through_connection() {
        let c = Subcircuit::grounded(vec![Element::new("W1", ElementKind::Short, "a", "b")], "a", "b");
        let s = mna_two_port(&c, f(1e9), z0()).unwrap();
        assert!(s.max_abs_diff(&SMatrix::identity()) < 1e-9);
        // Both ports on the same node is an exact through.
        let c = Subcircuit::grounded(vec![Element::resistor("R1", "a", "0", 1e12)], "a", "a");
        let s = mna_two_port(&c, f(1e9), z0()).unwrap();
        assert!(s.max_abs_diff(&SMatrix::identity()) < 1e-9);
    }

    #[test]
    fn series_resistor_matches_hand_formula() {
        let c = Subcircuit::grounded(vec![Element::resistor("R1", "a", "b", 30.0)], "a", "b");
        let s = mna_two_port(&c, f(1e6), z0()).unwrap();
        assert!((s.s11.re - 30.0 / 130.0).abs() < 1e-14);
        assert!((s.s21.re - 100.0 / 130.0).abs() < 1e-14);
    }

    #[test]
    fn short_to_ground_reflects() {
        let c = Subcircuit::grounded(
            vec![Element::resistor("R1", "a", "b", 10.0), Element::new("W1", ElementKind::Short, "b", "0")],
            "a",
            "b",
        );
        let s = mna_two_port(&c, f(1e9), z0()).unwrap();
        assert!((s.s22 + Complex::new(1.0, 0.0)).norm() < 1e-15);
        assert!(s.s21.norm() < 1e-15);
        assert!((s.s11.re - (10.0 - 50.0) / 60.0).abs() < 1e-15);
    }

    #[test]
    fn embedded_block_reproduces_itself() {
        let inner = Subcircuit::grounded(
            vec![
                Element::inductor("L1", "a", "m", 2e-9),
                Element::capacitor("C1", "m", "0", 1e-12),
                Element::resistor("R1", "m", "b", 7.0),
            ],
            "a",
            "b",
        );
        let s = mna_two_port(&inner, f(2e9), z0()).unwrap();
        let block =
            Subcircuit::grounded(vec![Element::new("X1", ElementKind::SParams { s, z0: 50.0 }, "p", "q")], "p", "q");
        let back = mna_two_port(&block, f(2e9), z0()).unwrap();
        assert!(back.max_abs_diff(&s) < 1e-12);
        // A through block works although it has no Y-matrix.
        let thru = Subcircuit::grounded(
            vec![Element::new("X1", ElementKind::SParams { s: SMatrix::identity(), z0: 50.0 }, "p", "q")],
            "p",
            "q",
        );
        assert!(mna_two_port(&thru, f(1.0), z0()).unwrap().max_abs_diff(&SMatrix::identity()) < 1e-12);
    }

    #[test]
    fn switch_states() {
        let on = Subcircuit::grounded(vec![Element::switch("S1", "a", "b", SwitchState::On)], "a", "b");
        let s = mna_two_port(&on, f(1e9), z0()).unwrap();
        let expected = abcd_to_s(&AbcdMatrix::series_impedance(Complex::new(1e-3, 0.0)), z0()).unwrap();
        assert!(s.max_abs_diff(&expected) < 1e-11);
        let off = Subcircuit::grounded(
            vec![Element::switch("S1", "a", "b", SwitchState::Off), Element::resistor("R1", "b", "0", 50.0)],
            "a",
            "b",
        );
        let s = mna_two_port(&off, f(1e9), z0()).unwrap();
        assert!((s.s11 - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!(s.s21.norm() < 1e-12);
    }

    #[test]
    fn floating_port_is_invalid_topology() {
        let c = Subcircuit::grounded(vec![Element::resistor("R1", "a", "0", 50.0)], "a", "b");
        assert!(matches!(mna_two_port(&c, f(1e9), z0()), Err(TwoPortError::InvalidTopology(_))));
        let c = Subcircuit::grounded(
            vec![Element::resistor("R1", "a", "x", 50.0), Element::resistor("R2", "b", "y", 50.0)],
            "a",
            "b",
        );
        assert!(matches!(mna_two_port(&c, f(1e9), z0()), Err(TwoPortError::InvalidTopology(_))));
    }

    #[test]
    fn isolated_capacitor_island_is_singular() {
        // x and y are only sensed by the vccs, never driven: floating island.
        let c = Subcircuit::grounded(
            vec![
                Element::resistor("R1", "a", "b", 10.0),
                Element::capacitor("C1", "x", "y", 1e-12),
                Element::vccs("G1", ("a", "0"), ("x", "y"), 1e-3),
            ],
            "a",
            "b",
        );
        assert!(matches!(mna_two_port(&c, f(1e9), z0()), Err(TwoPortError::SingularNetwork)));
    }

    #[test]
    fn vccs_stage_is_not_reciprocal() {
        let c = Subcircuit::grounded(
            vec![
                Element::resistor("Rg", "in", "0", 200.0),
                Element::capacitor("Cgd", "in", "out", 20e-15),
                Element::vccs("Gm", ("out", "0"), ("in", "0"), 40e-3),
                Element::resistor("Ro", "out", "0", 500.0),
            ],
            "in",
            "out",
        );
        let s = mna_two_port(&c, f(2e9), z0()).unwrap();
        assert!(!check_reciprocity(&s, 1e-3));
        // Common-source stage inverts: |S21| > 1 with phase near 180°.
        assert!(s.s21.norm() > 1.0);
    }
}

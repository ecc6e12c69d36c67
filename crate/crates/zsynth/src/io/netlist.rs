//! SPICE-style netlists. Node 0 is ground, node 1 the junction terminal;
//! node numbers increase into the ladder. Values are written in SI units.

use crate::brune::{BruneCircuit, PreambleKind, StageKind, Termination};
use crate::foster::FosterCircuit;
use std::fmt::Write;

struct Emitter {
    out: String,
    next_node: usize,
    counts: [usize; 4],
}

impl Emitter {
    fn new(title: &str) -> Self {
        Emitter { out: format!("* {title}\n"), next_node: 2, counts: [0; 4] }
    }
    fn node(&mut self) -> usize {
        let n = self.next_node;
        self.next_node += 1;
        n
    }
    fn name(&mut self, kind: char) -> String {
        let slot = match kind {
            'R' => 0,
            'L' => 1,
            'C' => 2,
            _ => 3,
        };
        self.counts[slot] += 1;
        format!("{kind}{}", self.counts[slot])
    }
    fn r(&mut self, a: usize, b: usize, ohm: f64) -> String {
        let n = self.name('R');
        writeln!(self.out, "{n} {a} {b} {ohm:e}").unwrap();
        n
    }
    fn l(&mut self, a: usize, b: usize, nh: f64) -> String {
        let n = self.name('L');
        writeln!(self.out, "{n} {a} {b} {:e}", nh * 1e-9).unwrap();
        n
    }
    fn c(&mut self, a: usize, b: usize, nf: f64) -> String {
        let n = self.name('C');
        writeln!(self.out, "{n} {a} {b} {:e}", nf * 1e-9).unwrap();
        n
    }
    fn k(&mut self, l1: &str, l2: &str, k: f64) {
        let n = self.name('K');
        writeln!(self.out, "{n} {l1} {l2} {k:e}").unwrap();
    }
}

fn preamble(e: &mut Emitter, kind: &PreambleKind, node: usize) -> usize {
    match *kind {
        PreambleKind::SeriesInductor { l } => {
            let nx = e.node();
            e.l(node, nx, l);
            nx
        }
        PreambleKind::SeriesCapacitor { c } => {
            let nx = e.node();
            e.c(node, nx, c);
            nx
        }
        PreambleKind::SeriesParallelLc { l, c } => {
            let nx = e.node();
            e.l(node, nx, l);
            e.c(node, nx, c);
            nx
        }
        PreambleKind::ShuntCapacitor { c } => {
            e.c(node, 0, c);
            node
        }
        PreambleKind::ShuntInductor { l } => {
            e.l(node, 0, l);
            node
        }
        PreambleKind::ShuntSeriesLc { l, c } => {
            let mid = e.node();
            e.l(node, mid, l);
            e.c(mid, 0, c);
            node
        }
    }
}

/// Coupled inductors are two `L` elements sharing the capacitor node plus a
/// `K` line with `k = M/√(L11·L22)`; dots at the outer ends.
pub fn brune_netlist(c: &BruneCircuit) -> String {
    let mut e = Emitter::new("Brune ladder (node 1 = junction terminal)");
    let mut node = 1;
    for pos in 0..=c.stages.len() {
        for el in c.preamble.iter().filter(|p| p.position == pos) {
            node = preamble(&mut e, &el.kind, node);
        }
        let Some(st) = c.stages.get(pos) else { break };
        let a = e.node();
        e.r(node, a, st.r);
        match st.kind {
            StageKind::CapacitiveDegenerate => {
                e.c(a, 0, st.c);
                node = a;
            }
            StageKind::InductiveDegenerate => {
                e.l(a, 0, st.shunt_l.unwrap_or(0.0));
                node = a;
            }
            StageKind::Regular => {
                let x = e.node();
                let out = e.node();
                let la = e.l(a, x, st.l11);
                let lb = e.l(out, x, st.l22);
                e.c(x, 0, st.c);
                e.k(&la, &lb, st.m / (st.l11 * st.l22).sqrt());
                node = out;
            }
        }
    }
    match c.termination {
        Termination::Resistor => {
            e.r(node, 0, c.r_terminal);
        }
        Termination::Short => {
            e.r(node, 0, 0.0);
        }
        Termination::Open => {}
    }
    e.out.push_str(".end\n");
    e.out
}

/// Series chain of parallel-RLC blocks, the last one returning to ground.
pub fn foster_netlist(c: &FosterCircuit) -> String {
    let mut e = Emitter::new("lossy Foster chain (node 1 = junction terminal)");
    let mut node = 1;
    for (i, st) in c.stages.iter().enumerate() {
        let nx = if i + 1 == c.stages.len() { 0 } else { e.node() };
        e.r(node, nx, st.r);
        e.l(node, nx, st.l);
        e.c(node, nx, st.c);
        node = nx;
    }
    e.out.push_str(".end\n");
    e.out
}

//! Shared test helpers: a small design builder and independent oracles
//! (exhaustive path enumeration for timing, exhaustive search for variant
//! assignment) used to cross-check the production algorithms.
#![allow(dead_code)]

use std::collections::BTreeMap;

use smt_core::library::default_library;
use smt_core::model::*;
use smt_core::timing::{gate_delay, NetParasitics};

/// Builder for small hand-made designs on the default library.
pub struct DesignBuilder {
    design: Design,
    declared: std::collections::BTreeSet<String>,
}

impl DesignBuilder {
    pub fn new() -> Self {
        DesignBuilder {
            design: Design {
                library: default_library(),
                constraints: Constraints::default(),
                die: Die {
                    x0: 0,
                    y0: 0,
                    x1: um_to_nm(1000.0),
                    y1: um_to_nm(1000.0),
                },
                cells: Vec::new(),
                nets: Vec::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                mte_net: "mte".into(),
                flow_stage: FlowStage::Input,
            },
            declared: std::collections::BTreeSet::new(),
        }
    }

    pub fn constraints(mut self, f: impl FnOnce(&mut Constraints)) -> Self {
        f(&mut self.design.constraints);
        self
    }

    pub fn cell(
        mut self,
        id: &str,
        kind: &str,
        variant: VthVariant,
        pos_um: (f64, f64),
        pins: &[(&str, &str)],
    ) -> Self {
        let pins: BTreeMap<String, String> = pins
            .iter()
            .map(|(p, n)| (p.to_string(), n.to_string()))
            .collect();
        for net in pins.values() {
            self.declared.insert(net.clone());
        }
        self.design.cells.push(CellInstance {
            id: id.into(),
            kind: kind.into(),
            variant,
            pos: Point {
                x: um_to_nm(pos_um.0),
                y: um_to_nm(pos_um.1),
            },
            pins,
        });
        self
    }

    pub fn input(mut self, net: &str) -> Self {
        self.design.inputs.push(net.into());
        self.declared.insert(net.into());
        self
    }

    pub fn output(mut self, net: &str) -> Self {
        self.design.outputs.push(net.into());
        self.declared.insert(net.into());
        self
    }

    pub fn stage(mut self, stage: FlowStage) -> Self {
        self.design.flow_stage = stage;
        self
    }

    pub fn build(mut self) -> Design {
        self.declared.insert("mte".into());
        self.design.nets = self
            .declared
            .iter()
            .map(|id| NetDecl {
                id: id.clone(),
                holder_attached: false,
            })
            .collect();
        if !self.design.inputs.contains(&"mte".to_string()) {
            self.design.inputs.push("mte".into());
        }
        self.design.canonicalize();
        self.design
    }
}

/// A chain of `n` inverters from PI `a` to a PO, cells 10 µm apart.
pub fn inv_chain(n: usize, t_clk: i64) -> Design {
    let mut b = DesignBuilder::new()
        .constraints(|c| c.t_clk = t_clk)
        .input("a");
    for i in 0..n {
        let src = if i == 0 {
            "a".to_string()
        } else {
            format!("n{}", i - 1)
        };
        let out = format!("n{i}");
        b = b.cell(
            &format!("u{i}"),
            "INV",
            VthVariant::LowVth,
            (10.0 * (i as f64 + 1.0), 10.0),
            &[("A", src.as_str()), ("Y", out.as_str())],
        );
    }
    b.output(&format!("n{}", n - 1)).build()
}

/// Per-cell stage delays computed the same way the production engine does,
/// but from first principles in the test.
pub fn stage_delays(design: &Design, par: &[NetParasitics], bounce: &[f64]) -> Vec<i64> {
    let conn = design.connectivity();
    let net_idx = design.net_index();
    design
        .cells
        .iter()
        .enumerate()
        .map(|(ci, cell)| {
            let kind = design.kind_of(cell);
            let Some(outp) = &kind.output else { return 0 };
            let Some(net) = cell.pins.get(outp) else {
                return 0;
            };
            let ni = net_idx[net.as_str()];
            let c_pins: f64 = conn.nets[ni]
                .sinks
                .iter()
                .map(|(si, _)| {
                    let s = &design.cells[*si];
                    design.kind_of(s).params(s.variant).c_in
                })
                .sum();
            gate_delay(
                kind,
                cell.variant,
                c_pins,
                &par[ni],
                bounce[ci],
                design.constraints.k_bounce,
                design.constraints.v_dd,
            )
        })
        .collect()
}

/// Exhaustive path-enumeration oracle: per net, (max, min) arrival over every
/// source-to-net path, or `None` for untimed nets. Exponential; for small
/// designs only.
pub fn brute_force_arrivals(
    design: &Design,
    par: &[NetParasitics],
    bounce: &[f64],
) -> Vec<Option<(i64, i64)>> {
    let delays = stage_delays(design, par, bounce);
    brute_force_arrivals_with_delays(design, &delays)
}

/// Path enumeration with externally supplied per-cell stage delays.
pub fn brute_force_arrivals_with_delays(
    design: &Design,
    delays: &[i64],
) -> Vec<Option<(i64, i64)>> {
    let conn = design.connectivity();
    let net_idx = design.net_index();
    let delays = delays.to_vec();
    let comb = |ci: usize| {
        let f = design.kind_of(&design.cells[ci]).function;
        f.is_logic() && f != LogicFunction::Dff
    };

    // source nets: primary inputs (except the standby root) and register outputs
    let mut source = vec![false; design.nets.len()];
    for (ni, nc) in conn.nets.iter().enumerate() {
        match &nc.driver {
            Some(NetDriver::PrimaryInput) => {
                source[ni] = design.nets[ni].id != design.mte_net;
            }
            Some(NetDriver::Cell(ci, _)) => {
                if design.kind_of(&design.cells[*ci]).function == LogicFunction::Dff {
                    source[ni] = true;
                }
            }
            None => {}
        }
    }

    // Recursive enumeration of every path arrival; no memoization so the
    // result is independent of the production propagation.
    fn paths(
        ni: usize,
        design: &Design,
        conn: &Connectivity,
        net_idx: &BTreeMap<&str, usize>,
        delays: &[i64],
        source: &[bool],
        comb: &dyn Fn(usize) -> bool,
        out: &mut Vec<i64>,
        acc: i64,
    ) {
        if source[ni] {
            out.push(acc);
            return;
        }
        let Some(NetDriver::Cell(ci, _)) = &conn.nets[ni].driver else {
            return;
        };
        if !comb(*ci) {
            return;
        }
        let cell = &design.cells[*ci];
        let kind = design.kind_of(cell);
        for pin in &kind.inputs {
            let src = net_idx[cell.pins[pin].as_str()];
            paths(
                src, design, conn, net_idx, delays, source, comb, out,
                acc + delays[*ci],
            );
        }
    }

    (0..design.nets.len())
        .map(|ni| {
            let mut arr = Vec::new();
            paths(
                ni, design, &conn, &net_idx, &delays, &source, &comb, &mut arr, 0,
            );
            if arr.is_empty() {
                if source[ni] {
                    Some((0, 0))
                } else {
                    None
                }
            } else {
                Some((
                    *arr.iter().max().unwrap(),
                    *arr.iter().min().unwrap(),
                ))
            }
        })
        .collect()
}

/// Worst endpoint slack of the current variant assignment under the same
/// pessimistic model the greedy replacement uses: parasitics scaled by the
/// worst routing detour, and (optionally) the full bounce penalty plus one
/// holder load anticipated on every cell that is not yet high-Vth.
/// Computed here by exhaustive path enumeration, independent of the
/// production engine.
pub fn derated_worst_slack(
    design: &Design,
    anticipate_bounce: bool,
    anticipate_holders: bool,
) -> i64 {
    let scale = 1.0 + design.constraints.detour_max;
    let par = smt_core::interconnect::estimate_rc_preroute_scaled(design, scale);
    let conn = design.connectivity();
    let net_idx = design.net_index();
    let holder_c_in = design
        .library
        .kinds
        .get("HOLDER")
        .map(|k| k.high_vth.c_in)
        .unwrap_or(0.0);

    let delays: Vec<i64> = design
        .cells
        .iter()
        .map(|cell| {
            let kind = design.kind_of(cell);
            let Some(outp) = &kind.output else { return 0 };
            let Some(net) = cell.pins.get(outp) else {
                return 0;
            };
            let ni = net_idx[net.as_str()];
            let mut c_pins: f64 = conn.nets[ni]
                .sinks
                .iter()
                .map(|(si, _)| {
                    let s = &design.cells[*si];
                    design.kind_of(s).params(s.variant).c_in
                })
                .sum();
            let prospective_mt = cell.variant != VthVariant::HighVth;
            if anticipate_holders && prospective_mt {
                c_pins += holder_c_in;
            }
            let (eff, v_bounce) = if anticipate_bounce && prospective_mt {
                (VthVariant::MtNoVgnd, design.constraints.v_bounce_max)
            } else {
                (cell.variant, 0.0)
            };
            gate_delay(
                kind,
                eff,
                c_pins,
                &par[ni],
                v_bounce,
                design.constraints.k_bounce,
                design.constraints.v_dd,
            )
        })
        .collect();

    let arrivals = brute_force_arrivals_with_delays(design, &delays);
    let mut worst = i64::MAX;
    for (ni, nc) in conn.nets.iter().enumerate() {
        let Some((amax, _)) = arrivals[ni] else {
            continue;
        };
        let feeds_dff = nc
            .sinks
            .iter()
            .any(|(ci, _)| design.kind_of(&design.cells[*ci]).function == LogicFunction::Dff);
        if nc.is_primary_output || feeds_dff {
            worst = worst.min(design.constraints.t_clk - amax);
        }
    }
    worst
}

/// Total leakage of a plain variant assignment (no switches), nA.
pub fn variant_leakage(design: &Design) -> f64 {
    design
        .cells
        .iter()
        .filter(|c| design.kind_of(c).function.is_logic())
        .map(|c| design.kind_of(c).params(c.variant).leak_standby)
        .sum()
}

/// All partitions of `items` into non-empty ordered-by-first-element blocks.
/// Used as the clustering feasibility oracle for small member sets.
pub fn all_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in all_partitions(n - 1) {
        // element n-1 joins each existing block or starts a new one
        for bi in 0..rest.len() {
            let mut p = rest.clone();
            p[bi].push(n - 1);
            out.push(p);
        }
        let mut p = rest.clone();
        p.push(vec![n - 1]);
        out.push(p);
    }
    out
}

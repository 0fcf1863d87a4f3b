//! Max- and min-delay static timing analysis with a bounce-aware delay model
//! for MT-cells.
//!
//! Delay model: single-segment lumped RC,
//! `d = [d0 + r_drive·(c_net + c_pins) + r_net·c_pins] · m` with
//! `m = 1 + k_bounce·(v_bounce / v_dd)` for MT variants and 1 otherwise.
//! kΩ·fF = ps; the wire resistance arrives in Ω and is converted. Delays are
//! rounded half-up to integer picoseconds so oracle comparisons are exact.

use crate::error::{Result, SmtError};
use crate::model::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RcStage {
    PreRoute,
    PostRoute,
}

/// Lumped parasitics of one net.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetParasitics {
    /// Ω
    pub r_net: f64,
    /// fF
    pub c_net: f64,
    /// µm
    pub routed_length: f64,
    pub stage: RcStage,
}

impl NetParasitics {
    pub fn zero(stage: RcStage) -> Self {
        NetParasitics {
            r_net: 0.0,
            c_net: 0.0,
            routed_length: 0.0,
            stage,
        }
    }
}

/// Stage delay of one driving cell, integer picoseconds.
pub fn gate_delay(
    kind: &CellKind,
    variant: VthVariant,
    c_pins: f64,
    net: &NetParasitics,
    v_bounce: f64,
    k_bounce: f64,
    v_dd: f64,
) -> i64 {
    let p = kind.params(variant);
    let raw = p.d0 + p.r_drive * (net.c_net + c_pins) + (net.r_net / 1000.0) * c_pins;
    let m = if variant.is_mt() {
        1.0 + k_bounce * (v_bounce / v_dd)
    } else {
        1.0
    };
    (raw * m + 0.5).floor() as i64
}

/// Arrival/required annotation from one STA run. Vectors are aligned with
/// `Design::nets` (arrivals, required) and `Design::cells` (stage delays).
#[derive(Debug, Clone)]
pub struct TimingAnnotation {
    pub arrival_max: Vec<i64>,
    pub arrival_min: Vec<i64>,
    /// Backward-propagated required time; `i64::MAX` off the timed cone.
    pub required: Vec<i64>,
    /// Whether the net carries functional timing (false for the MTE tree).
    pub timed: Vec<bool>,
    pub cell_delay: Vec<i64>,
    /// Nets observed by setup/hold endpoints (POs and register D inputs).
    pub endpoint_nets: Vec<usize>,
    pub worst_setup_slack: i64,
    pub worst_hold_slack: i64,
}

impl TimingAnnotation {
    pub fn slack(&self, net: usize) -> i64 {
        if self.required[net] == i64::MAX {
            i64::MAX
        } else {
            self.required[net] - self.arrival_max[net]
        }
    }
}

/// Per-cell VGND bounce in volts; zero for cells without a sleep switch.
pub type BounceMap = Vec<f64>;

/// Extra load model used by the assignment stage (anticipated holders);
/// `extra_net_load[net]` is added to the pin load of that net in fF.
pub struct DelayCtx<'a> {
    pub bounce: &'a [f64],
    pub extra_net_load: Option<&'a [f64]>,
}

pub(crate) fn pin_load(design: &Design, conn: &Connectivity, net: usize) -> f64 {
    conn.nets[net]
        .sinks
        .iter()
        .map(|(ci, _)| {
            let cell = &design.cells[*ci];
            design.kind_of(cell).params(cell.variant).c_in
        })
        .sum()
}

fn is_combinational(design: &Design, ci: usize) -> bool {
    let f = design.kind_of(&design.cells[ci]).function;
    f.is_logic() && f != LogicFunction::Dff
}

/// Topological longest/shortest path propagation from primary inputs and
/// register outputs to primary outputs and register inputs.
pub fn run_sta(design: &Design, par: &[NetParasitics], bounce: &[f64]) -> Result<TimingAnnotation> {
    run_sta_ext(
        design,
        par,
        &DelayCtx {
            bounce,
            extra_net_load: None,
        },
    )
}

pub fn run_sta_ext(
    design: &Design,
    par: &[NetParasitics],
    ctx: &DelayCtx<'_>,
) -> Result<TimingAnnotation> {
    if par.len() != design.nets.len() {
        return Err(SmtError::Contract(
            "parasitics must cover every net".into(),
        ));
    }
    if ctx.bounce.len() != design.cells.len() {
        return Err(SmtError::Contract(
            "bounce map must cover every cell".into(),
        ));
    }
    let conn = design.connectivity();
    let net_idx = design.net_index();
    let n_nets = design.nets.len();
    let n_cells = design.cells.len();

    // Net source kind: 0 = source (PI / register Q), 1 = combinational, 2 = untimed.
    let mut timed = vec![false; n_nets];
    let mut arrival_max = vec![0i64; n_nets];
    let mut arrival_min = vec![0i64; n_nets];
    let mut cell_delay = vec![0i64; n_cells];

    // Topological order over combinational cells (Kahn).
    let mut indeg = vec![0usize; n_cells];
    let mut ready: Vec<usize> = Vec::new();
    for ci in 0..n_cells {
        if !is_combinational(design, ci) {
            continue;
        }
        let cell = &design.cells[ci];
        let kind = design.kind_of(cell);
        let mut d = 0;
        for pin in &kind.inputs {
            let net = &cell.pins[pin];
            let nc = &conn.nets[net_idx[net.as_str()]];
            if let Some(NetDriver::Cell(src, _)) = &nc.driver {
                if is_combinational(design, *src) {
                    d += 1;
                }
            }
        }
        indeg[ci] = d;
        if d == 0 {
            ready.push(ci);
        }
    }

    // Source nets (PI and register outputs) start at t = 0.
    for (ni, nc) in conn.nets.iter().enumerate() {
        match &nc.driver {
            Some(NetDriver::PrimaryInput) => {
                timed[ni] = design.nets[ni].id != design.mte_net;
            }
            Some(NetDriver::Cell(ci, _)) => {
                let f = design.kind_of(&design.cells[*ci]).function;
                if f == LogicFunction::Dff {
                    timed[ni] = true;
                }
            }
            None => {}
        }
    }

    let eval_delay = |ci: usize, design: &Design| -> i64 {
        let cell = &design.cells[ci];
        let kind = design.kind_of(cell);
        let out_net = net_idx[cell.pins[kind.output.as_ref().expect("logic output")].as_str()];
        let mut c_pins = pin_load(design, &conn, out_net);
        if let Some(extra) = ctx.extra_net_load {
            c_pins += extra[out_net];
        }
        gate_delay(
            kind,
            cell.variant,
            c_pins,
            &par[out_net],
            ctx.bounce[ci],
            design.constraints.k_bounce,
            design.constraints.v_dd,
        )
    };

    let mut order = Vec::with_capacity(n_cells);
    let mut head = 0;
    while head < ready.len() {
        let ci = ready[head];
        head += 1;
        order.push(ci);
        let cell = &design.cells[ci];
        let kind = design.kind_of(cell);
        let out_net = net_idx[cell.pins[kind.output.as_ref().unwrap()].as_str()];

        let mut amax = 0i64;
        let mut amin = 0i64;
        let mut first = true;
        let mut any_timed = false;
        for pin in &kind.inputs {
            let ni = net_idx[cell.pins[pin].as_str()];
            if !timed[ni] {
                continue;
            }
            any_timed = true;
            if first {
                amax = arrival_max[ni];
                amin = arrival_min[ni];
                first = false;
            } else {
                amax = amax.max(arrival_max[ni]);
                amin = amin.min(arrival_min[ni]);
            }
        }
        let d = eval_delay(ci, design);
        cell_delay[ci] = d;
        if any_timed {
            timed[out_net] = true;
            arrival_max[out_net] = amax + d;
            arrival_min[out_net] = amin + d;
        }

        for (si, _) in &conn.nets[out_net].sinks {
            if is_combinational(design, *si) {
                indeg[*si] -= 1;
                if indeg[*si] == 0 {
                    ready.push(*si);
                }
            }
        }
    }
    let expected = (0..n_cells).filter(|&ci| is_combinational(design, ci)).count();
    if order.len() != expected {
        return Err(SmtError::Contract(
            "combinational cycle reached STA; run validate first".into(),
        ));
    }

    // Endpoints: primary outputs and register D inputs.
    let mut endpoint_nets = Vec::new();
    for (ni, nc) in conn.nets.iter().enumerate() {
        if !timed[ni] {
            continue;
        }
        let feeds_dff = nc.sinks.iter().any(|(ci, _)| {
            design.kind_of(&design.cells[*ci]).function == LogicFunction::Dff
        });
        if nc.is_primary_output || feeds_dff {
            endpoint_nets.push(ni);
        }
    }

    // Backward required times.
    let t_clk = design.constraints.t_clk;
    let mut required = vec![i64::MAX; n_nets];
    for &ni in &endpoint_nets {
        required[ni] = t_clk;
    }
    for &ci in order.iter().rev() {
        let cell = &design.cells[ci];
        let kind = design.kind_of(cell);
        let out_net = net_idx[cell.pins[kind.output.as_ref().unwrap()].as_str()];
        if required[out_net] == i64::MAX {
            continue;
        }
        let need_in = required[out_net] - cell_delay[ci];
        for pin in &kind.inputs {
            let ni = net_idx[cell.pins[pin].as_str()];
            if timed[ni] {
                required[ni] = required[ni].min(need_in);
            }
        }
    }

    let hold_min = design.constraints.hold_min;
    let mut worst_setup = i64::MAX;
    let mut worst_hold = i64::MAX;
    for &ni in &endpoint_nets {
        worst_setup = worst_setup.min(t_clk - arrival_max[ni]);
        worst_hold = worst_hold.min(arrival_min[ni] - hold_min);
    }

    Ok(TimingAnnotation {
        arrival_max,
        arrival_min,
        required,
        timed,
        cell_delay,
        endpoint_nets,
        worst_setup_slack: worst_setup,
        worst_hold_slack: worst_hold,
    })
}

/// Cells lying on some path whose slack is below `margin`: exactly the cells
/// whose output-net slack (required minus worst arrival) is below it.
pub fn critical_cells(design: &Design, ta: &TimingAnnotation, margin: i64) -> Vec<String> {
    let net_idx = design.net_index();
    let mut out = Vec::new();
    for cell in &design.cells {
        let kind = design.kind_of(cell);
        if !kind.function.is_logic() || kind.function == LogicFunction::Dff {
            continue;
        }
        let Some(outp) = &kind.output else { continue };
        let ni = net_idx[cell.pins[outp].as_str()];
        if ta.timed[ni] && ta.slack(ni) < margin {
            out.push(cell.id.clone());
        }
    }
    out
}

//! Slack-driven Vth replacement: greedy conversion of low-Vth cells to
//! high-Vth wherever timing allows, leaving the critical residue as MT-cells
//! (or as low-Vth cells in plain dual-Vth mode).
//!
//! The greedy evaluation derates timing pessimistically: parasitics scaled by
//! the worst-case routing detour, the full bounce penalty anticipated on
//! every cell that could end up as an MT-cell, and a holder load anticipated
//! on every net such a cell drives. A commit that keeps slack non-negative
//! under this model keeps it non-negative under the post-route numbers too.

use crate::error::{Result, SmtError};
use crate::interconnect::estimate_rc_preroute_scaled;
use crate::model::*;
use crate::timing::{gate_delay, NetParasitics};
use crate::transform::HOLDER_KIND;

/// Flow entry point: every logic cell starts low-Vth.
pub fn initialize_low_vth(design: &mut Design) {
    for cell in design.cells.iter_mut() {
        if design.library.kinds[&cell.kind].function.is_logic() {
            cell.variant = VthVariant::LowVth;
        }
    }
    design.flow_stage = FlowStage::AllLow;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignMode {
    /// Residual low-Vth logic becomes MT (without VGND ports).
    SelectiveMt,
    /// Residual critical cells stay low-Vth; no switches, no holders.
    DualVthOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct AssignOptions {
    /// Anticipate the full bounce penalty on every prospective MT-cell.
    pub anticipate_bounce: bool,
    /// Anticipate one holder load on every net a prospective MT-cell drives.
    pub anticipate_holders: bool,
}

pub fn assign_dual_vth(design: &mut Design) -> Result<()> {
    assign_vth(
        design,
        AssignMode::SelectiveMt,
        AssignOptions {
            anticipate_bounce: true,
            anticipate_holders: true,
        },
    )
}

/// Dual-Vth baseline. Uses the same pessimistic evaluation as the MT modes
/// so every mode converts the identical cell set; only the residue's fate
/// differs.
pub fn dual_vth_only_mode(design: &mut Design) -> Result<()> {
    assign_vth(
        design,
        AssignMode::DualVthOnly,
        AssignOptions {
            anticipate_bounce: true,
            anticipate_holders: true,
        },
    )
}

pub fn assign_vth(design: &mut Design, mode: AssignMode, opts: AssignOptions) -> Result<()> {
    if design.flow_stage != FlowStage::AllLow {
        return Err(SmtError::Contract(
            "Vth assignment requires the all-low-Vth stage".into(),
        ));
    }
    let mut engine = Engine::new(design, opts);

    if engine.worst_setup_slack() < 0 {
        let (net, slack) = engine.worst_endpoint();
        return Err(SmtError::InfeasibleTiming(format!(
            "all-low-Vth design misses timing: endpoint net `{}` slack {} ps",
            design.nets[net].id, slack
        )));
    }

    // Greedy conversion in reverse topological order: sinks before their
    // drivers. Converting an endpoint-side cell consumes slack on few paths,
    // while slowing a high-fanout driver early would eat margin on every
    // downstream endpoint and lock out several later conversions. A swap
    // that breaks timing is rolled back; committed swaps only add delay, so
    // skipping rejected cells for good loses nothing. Small blocks instead
    // use best-commit selection, which trials every remaining candidate per
    // round — near-optimal, but quadratic in swaps.
    let candidates: Vec<usize> = engine
        .topo_order()
        .iter()
        .rev()
        .copied()
        .filter(|&ci| engine.is_candidate(ci))
        .collect();
    if candidates.len() <= BEST_COMMIT_LIMIT {
        best_commit_rounds(design, &mut engine, candidates);
    } else {
        for ci in candidates {
            let changes = engine.swap(ci, VthVariant::HighVth);
            if engine.worst_setup_slack() < 0 {
                engine.rollback(ci, VthVariant::LowVth, changes);
            }
        }
    }

    let candidacy: Vec<bool> = (0..design.cells.len())
        .map(|ci| engine.is_candidate(ci))
        .collect();
    let variants = std::mem::take(&mut engine.variants);
    drop(engine);
    for ci in 0..design.cells.len() {
        let v = variants[ci];
        design.cells[ci].variant =
            if v == VthVariant::LowVth && mode == AssignMode::SelectiveMt && candidacy[ci] {
                VthVariant::MtNoVgnd
            } else {
                v
            };
    }
    design.flow_stage = FlowStage::Assigned;
    Ok(())
}

/// Candidate-count cutoff below which assignment trials every remaining
/// candidate per committed swap instead of a single ordered pass.
const BEST_COMMIT_LIMIT: usize = 32;

/// Each round trial-converts every remaining candidate and commits the one
/// with the highest leakage saving that consumes the least total endpoint
/// arrival. Candidates that turn infeasible are dropped for good.
fn best_commit_rounds(design: &Design, engine: &mut Engine<'_>, candidates: Vec<usize>) {
    let saving = |ci: usize| {
        let kind = design.kind_of(&design.cells[ci]);
        kind.low_vth.leak_standby - kind.high_vth.leak_standby
    };
    let mut remaining = candidates;
    loop {
        let mut best: Option<(f64, i64, usize)> = None;
        let mut feasible = Vec::new();
        for &ci in &remaining {
            let changes = engine.swap(ci, VthVariant::HighVth);
            if engine.worst_setup_slack() >= 0 {
                feasible.push(ci);
                let load = engine.endpoint_arrival_sum();
                let better = match &best {
                    None => true,
                    Some((bs, bl, bi)) => (saving(ci), -load, &design.cells[*bi].id)
                        .partial_cmp(&(*bs, *bl, &design.cells[ci].id))
                        .map(|o| o.is_gt())
                        .unwrap_or(false),
                };
                if better {
                    best = Some((saving(ci), -load, ci));
                }
            }
            engine.rollback(ci, VthVariant::LowVth, changes);
        }
        let Some((_, _, ci)) = best else { break };
        engine.swap(ci, VthVariant::HighVth);
        feasible.retain(|&x| x != ci);
        remaining = feasible;
    }
}

/// Incremental max-arrival engine over the combinational network. Owns the
/// working variant vector so trial swaps never touch the design.
pub(crate) struct Engine<'d> {
    design: &'d Design,
    opts: AssignOptions,
    par: Vec<NetParasitics>,
    holder_c_in: f64,
    pub(crate) variants: Vec<VthVariant>,
    /// topological order of combinational cells and each cell's position
    order: Vec<usize>,
    pos_in_order: Vec<usize>,
    out_net: Vec<Option<usize>>,
    in_nets: Vec<Vec<usize>>,
    /// per net: timing sink pin occurrences (cell index each)
    sink_pins: Vec<Vec<usize>>,
    /// per net: combinational sink cells to re-evaluate on change
    sink_comb: Vec<Vec<usize>>,
    timed: Vec<bool>,
    pub(crate) arrival: Vec<i64>,
    endpoints: Vec<usize>,
    /// per net: topo position of its combinational driver, MAX if none
    net_driver_pos: Vec<usize>,
}

impl<'d> Engine<'d> {
    pub(crate) fn new(design: &'d Design, opts: AssignOptions) -> Self {
        let scale = 1.0 + design.constraints.detour_max;
        let par = estimate_rc_preroute_scaled(design, scale);
        let conn = design.connectivity();
        let net_idx = design.net_index();
        let n_cells = design.cells.len();
        let n_nets = design.nets.len();

        let holder_c_in = design
            .library
            .kinds
            .get(HOLDER_KIND)
            .map(|k| k.high_vth.c_in)
            .unwrap_or(0.0);

        let mut out_net = vec![None; n_cells];
        let mut in_nets = vec![Vec::new(); n_cells];
        let mut sink_pins = vec![Vec::new(); n_nets];
        let mut sink_comb = vec![Vec::new(); n_nets];
        let mut timed = vec![false; n_nets];

        let comb = |ci: usize| {
            let f = design.kind_of(&design.cells[ci]).function;
            f.is_logic() && f != LogicFunction::Dff
        };

        for (ci, cell) in design.cells.iter().enumerate() {
            let kind = design.kind_of(cell);
            if let Some(outp) = &kind.output {
                if let Some(net) = cell.pins.get(outp) {
                    out_net[ci] = Some(net_idx[net.as_str()]);
                }
            }
            if comb(ci) {
                for pin in &kind.inputs {
                    in_nets[ci].push(net_idx[cell.pins[pin].as_str()]);
                }
            }
        }
        for (ni, nc) in conn.nets.iter().enumerate() {
            for (ci, _) in &nc.sinks {
                sink_pins[ni].push(*ci);
                if comb(*ci) {
                    sink_comb[ni].push(*ci);
                }
            }
            match &nc.driver {
                Some(NetDriver::PrimaryInput) => {
                    timed[ni] = design.nets[ni].id != design.mte_net;
                }
                Some(NetDriver::Cell(ci, _)) => {
                    if design.kind_of(&design.cells[*ci]).function == LogicFunction::Dff {
                        timed[ni] = true;
                    }
                }
                None => {}
            }
        }

        // Kahn order over combinational cells.
        let mut indeg = vec![0usize; n_cells];
        let mut ready = Vec::new();
        for ci in 0..n_cells {
            if !comb(ci) {
                continue;
            }
            let d = in_nets[ci]
                .iter()
                .filter(|&&ni| match &conn.nets[ni].driver {
                    Some(NetDriver::Cell(src, _)) => comb(*src),
                    _ => false,
                })
                .count();
            indeg[ci] = d;
            if d == 0 {
                ready.push(ci);
            }
        }
        let mut order = Vec::new();
        let mut head = 0;
        while head < ready.len() {
            let ci = ready[head];
            head += 1;
            order.push(ci);
            if let Some(on) = out_net[ci] {
                for &si in &sink_comb[on] {
                    indeg[si] -= 1;
                    if indeg[si] == 0 {
                        ready.push(si);
                    }
                }
            }
        }
        let mut pos_in_order = vec![usize::MAX; n_cells];
        for (p, &ci) in order.iter().enumerate() {
            pos_in_order[ci] = p;
        }
        let mut net_driver_pos = vec![usize::MAX; n_nets];
        for &ci in &order {
            if let Some(on) = out_net[ci] {
                net_driver_pos[on] = pos_in_order[ci];
            }
        }

        let mut endpoints = Vec::new();
        let variants: Vec<VthVariant> = design.cells.iter().map(|c| c.variant).collect();

        let mut engine = Engine {
            design,
            opts,
            par,
            holder_c_in,
            variants,
            order,
            pos_in_order,
            out_net,
            in_nets,
            sink_pins,
            sink_comb,
            timed,
            arrival: vec![0; n_nets],
            endpoints: Vec::new(),
            net_driver_pos,
        };
        engine.recompute_all();
        for (ni, nc) in conn.nets.iter().enumerate() {
            if !engine.timed[ni] {
                continue;
            }
            let feeds_dff = nc.sinks.iter().any(|(ci, _)| {
                design.kind_of(&design.cells[*ci]).function == LogicFunction::Dff
            });
            if nc.is_primary_output || feeds_dff {
                endpoints.push(ni);
            }
        }
        engine.endpoints = endpoints;
        engine
    }

    /// Topological order over the combinational cells.
    pub(crate) fn topo_order(&self) -> &[usize] {
        &self.order
    }

    /// Sum of arrivals over all endpoints: total timing margin consumed.
    pub(crate) fn endpoint_arrival_sum(&self) -> i64 {
        self.endpoints.iter().map(|&ni| self.arrival[ni]).sum()
    }

    pub(crate) fn is_candidate(&self, ci: usize) -> bool {
        let cell = &self.design.cells[ci];
        let f = self.design.kind_of(cell).function;
        f.is_logic() && f != LogicFunction::Dff
    }

    fn delay(&self, ci: usize) -> i64 {
        let cell = &self.design.cells[ci];
        let kind = self.design.kind_of(cell);
        let on = self.out_net[ci].expect("combinational output");
        let mut c_pins: f64 = self.sink_pins[on]
            .iter()
            .map(|&si| kind_params(self.design, si, self.variants[si]).c_in)
            .sum();
        let variant = self.variants[ci];
        let prospective_mt = variant != VthVariant::HighVth;
        if self.opts.anticipate_holders && prospective_mt {
            c_pins += self.holder_c_in;
        }
        let (eff_variant, v_bounce) = if self.opts.anticipate_bounce && prospective_mt {
            (VthVariant::MtNoVgnd, self.design.constraints.v_bounce_max)
        } else {
            (variant, 0.0)
        };
        gate_delay(
            kind,
            eff_variant,
            c_pins,
            &self.par[on],
            v_bounce,
            self.design.constraints.k_bounce,
            self.design.constraints.v_dd,
        )
    }

    fn eval(&mut self, ci: usize) -> Option<(usize, i64)> {
        let on = self.out_net[ci]?;
        let mut amax = i64::MIN;
        for &ni in &self.in_nets[ci] {
            if self.timed[ni] {
                amax = amax.max(self.arrival[ni]);
            }
        }
        if amax == i64::MIN {
            return None; // all inputs untimed; stays off the cone
        }
        self.timed[on] = true;
        Some((on, amax + self.delay(ci)))
    }

    pub(crate) fn recompute_all(&mut self) {
        for i in 0..self.order.len() {
            let ci = self.order[i];
            if let Some((on, a)) = self.eval(ci) {
                self.arrival[on] = a;
            }
        }
    }

    /// Applies a variant change and incrementally re-propagates arrivals.
    /// Returns the (net, previous arrival) list for rollback.
    pub(crate) fn swap(&mut self, ci: usize, v: VthVariant) -> Vec<(usize, i64)> {
        self.variants[ci] = v;
        let mut dirty = std::collections::BTreeSet::new();
        if self.pos_in_order[ci] != usize::MAX {
            dirty.insert(self.pos_in_order[ci]);
        }
        // input-net drivers see a changed pin load
        for &ni in &self.in_nets[ci] {
            let p = self.net_driver_pos[ni];
            if p != usize::MAX {
                dirty.insert(p);
            }
        }
        let mut changes = Vec::new();
        while let Some(&pos) = dirty.iter().next() {
            dirty.remove(&pos);
            let cell = self.order[pos];
            if let Some((on, a)) = self.eval(cell) {
                if a != self.arrival[on] {
                    changes.push((on, self.arrival[on]));
                    self.arrival[on] = a;
                    for &si in &self.sink_comb[on] {
                        dirty.insert(self.pos_in_order[si]);
                    }
                }
            }
        }
        changes
    }

    pub(crate) fn rollback(&mut self, ci: usize, v: VthVariant, changes: Vec<(usize, i64)>) {
        self.variants[ci] = v;
        for (ni, a) in changes {
            self.arrival[ni] = a;
        }
    }

    pub(crate) fn worst_setup_slack(&self) -> i64 {
        let t_clk = self.design.constraints.t_clk;
        self.endpoints
            .iter()
            .map(|&ni| t_clk - self.arrival[ni])
            .min()
            .unwrap_or(i64::MAX)
    }

    fn worst_endpoint(&self) -> (usize, i64) {
        let t_clk = self.design.constraints.t_clk;
        self.endpoints
            .iter()
            .map(|&ni| (ni, t_clk - self.arrival[ni]))
            .min_by_key(|&(ni, s)| (s, ni))
            .unwrap_or((0, i64::MAX))
    }

    /// Worst-case-derated critical delay of the current variant state; used
    /// by the benchmark generator to place t_clk.
    pub(crate) fn max_endpoint_arrival(&self) -> i64 {
        self.endpoints
            .iter()
            .map(|&ni| self.arrival[ni])
            .max()
            .unwrap_or(0)
    }
}

fn kind_params(design: &Design, ci: usize, variant: VthVariant) -> &VariantParams {
    design.kind_of(&design.cells[ci]).params(variant)
}

/// Derated critical delay of an all-low-Vth design under the same worst-case
/// model the assignment greedy uses.
pub fn derated_all_low_critical_delay(design: &Design, opts: AssignOptions) -> i64 {
    let engine = Engine::new(design, opts);
    engine.max_endpoint_arrival()
}

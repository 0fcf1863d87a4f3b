//! Structural and electrical validation. Diagnostics are the output; an
//! empty list means every invariant holds and the logic network is acyclic.

use std::collections::BTreeSet;

use crate::error::{Diagnostic, Result, SmtError};
use crate::model::*;

fn diag(rule: &'static str, entity: impl Into<String>, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        rule,
        entity: entity.into(),
        message: message.into(),
    }
}

pub fn validate(design: &Design) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    check_library(design, &mut out);
    check_constraints(design, &mut out);

    // Reference integrity first; the structural checks below assume
    // resolvable kinds and nets.
    let net_idx = design.net_index();
    let mut broken_refs = false;
    for cell in &design.cells {
        if !design.library.kinds.contains_key(&cell.kind) {
            out.push(diag(
                "unresolved-reference",
                &cell.id,
                format!("unknown cell kind `{}`", cell.kind),
            ));
            broken_refs = true;
        }
        for (pin, net) in &cell.pins {
            if !net_idx.contains_key(net.as_str()) {
                out.push(diag(
                    "unresolved-reference",
                    &cell.id,
                    format!("pin `{pin}` bound to undeclared net `{net}`"),
                ));
                broken_refs = true;
            }
        }
    }
    if !net_idx.contains_key(design.mte_net.as_str()) {
        out.push(diag(
            "unresolved-reference",
            &design.mte_net,
            "mte_net is not a declared net",
        ));
        broken_refs = true;
    }
    if broken_refs {
        return out;
    }

    check_cells(design, &mut out);
    check_nets(design, &mut out);
    check_cycles(design, &mut out);
    out
}

/// Validates and converts a non-empty diagnostic list into an error.
pub fn ensure_valid(design: &Design) -> Result<()> {
    let diags = validate(design);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(SmtError::Invalid(diags))
    }
}

fn check_library(design: &Design, out: &mut Vec<Diagnostic>) {
    for kind in design.library.kinds.values() {
        if !kind.function.is_logic() {
            continue;
        }
        if kind.high_vth.d0 <= kind.low_vth.d0 {
            out.push(diag(
                "library-delay-order",
                &kind.name,
                "high-Vth d0 must exceed low-Vth d0",
            ));
        }
        if kind.high_vth.r_drive < kind.low_vth.r_drive {
            out.push(diag(
                "library-delay-order",
                &kind.name,
                "high-Vth drive resistance must be >= low-Vth",
            ));
        }
        if kind.low_vth.leak_standby <= kind.high_vth.leak_standby {
            out.push(diag(
                "library-leak-order",
                &kind.name,
                "low-Vth standby leakage must exceed high-Vth",
            ));
        }
        if kind.high_vth.i_peak <= 0.0 || kind.low_vth.i_peak <= 0.0 {
            out.push(diag(
                "library-i-peak",
                &kind.name,
                "peak discharge current must be positive",
            ));
        }
    }
}

fn check_constraints(design: &Design, out: &mut Vec<Diagnostic>) {
    let c = &design.constraints;
    let positives: [(&str, f64); 10] = [
        ("t_clk", c.t_clk as f64),
        ("v_dd", c.v_dd),
        ("v_bounce_max", c.v_bounce_max),
        ("r0_switch", c.r0_switch),
        ("l_sw", c.l_sw),
        ("a_sw", c.a_sw),
        ("w_min", c.w_min),
        ("r_wire", c.r_wire),
        ("c_wire", c.c_wire),
        ("k_bounce", c.k_bounce),
    ];
    for (name, v) in positives {
        if v <= 0.0 {
            out.push(diag("constraint-positive", name, "must be strictly positive"));
        }
    }
    if c.l_vgnd_max < 0.0 {
        out.push(diag("constraint-positive", "l_vgnd_max", "must be non-negative"));
    }
    if !(c.alpha > 0.0 && c.alpha <= 1.0) {
        out.push(diag("constraint-alpha", "alpha", "must lie in (0, 1]"));
    }
    if c.v_bounce_max >= c.v_dd {
        out.push(diag(
            "constraint-bounce",
            "v_bounce_max",
            "must be below v_dd",
        ));
    }
    if c.n_cells_max == 0 || c.mte_max_fanout < 2 {
        out.push(diag(
            "constraint-count",
            "n_cells_max/mte_max_fanout",
            "cluster cap must be >= 1 and MTE fanout cap >= 2",
        ));
    }
}

fn check_cells(design: &Design, out: &mut Vec<Diagnostic>) {
    for cell in &design.cells {
        let kind = design.kind_of(cell);
        if !design.die.contains(cell.pos) {
            out.push(diag("placement-bounds", &cell.id, "position outside die"));
        }
        for pin in &kind.inputs {
            if !cell.pins.contains_key(pin) {
                out.push(diag(
                    "unbound-pin",
                    &cell.id,
                    format!("input pin `{pin}` is unbound"),
                ));
            }
        }
        if let Some(outp) = &kind.output {
            if !cell.pins.contains_key(outp) {
                out.push(diag(
                    "unbound-pin",
                    &cell.id,
                    format!("output pin `{outp}` is unbound"),
                ));
            }
        }
        for pin in cell.pins.keys() {
            let known = kind.inputs.iter().any(|p| p == pin)
                || kind.output.as_deref() == Some(pin.as_str())
                || pin == MTE_PIN;
            if !known {
                out.push(diag(
                    "unknown-pin",
                    &cell.id,
                    format!("pin `{pin}` not declared by kind `{}`", kind.name),
                ));
            }
        }
        check_variant(design, cell, out);
    }

    let has_vgnd = design
        .cells
        .iter()
        .any(|c| c.variant == VthVariant::MtWithVgnd);
    let has_builtin = design
        .cells
        .iter()
        .any(|c| c.variant == VthVariant::MtBuiltIn);
    if has_vgnd && has_builtin {
        out.push(diag(
            "variant-stage",
            "design",
            "shared-switch and built-in-switch MT-cells may not coexist",
        ));
    }
}

fn check_variant(design: &Design, cell: &CellInstance, out: &mut Vec<Diagnostic>) {
    let kind = design.kind_of(cell);
    let stage = design.flow_stage;
    match cell.variant {
        VthVariant::MtNoVgnd => {
            if !matches!(stage, FlowStage::Assigned | FlowStage::HoldersInserted) {
                out.push(diag(
                    "variant-stage",
                    &cell.id,
                    "MT-cell without VGND port is only legal between assignment and switch insertion",
                ));
            }
        }
        VthVariant::MtWithVgnd => {
            if !matches!(
                stage,
                FlowStage::SwitchesInserted | FlowStage::MteBuffered | FlowStage::Final
            ) {
                out.push(diag(
                    "variant-stage",
                    &cell.id,
                    "MT-cell with VGND port requires switch insertion to have run",
                ));
            }
        }
        VthVariant::MtBuiltIn => {
            if !matches!(stage, FlowStage::Conventional | FlowStage::Final) {
                out.push(diag(
                    "variant-stage",
                    &cell.id,
                    "built-in-switch MT-cell appears only in conventional-SMT mode",
                ));
            }
        }
        _ => {}
    }
    if cell.variant.is_mt() && !kind.function.is_logic() {
        out.push(diag(
            "variant-kind",
            &cell.id,
            "infrastructure cells cannot be MT variants",
        ));
    }
    if cell.variant.is_mt() && kind.function == LogicFunction::Dff {
        out.push(diag(
            "variant-kind",
            &cell.id,
            "registers are excluded from MT assignment",
        ));
    }
}

fn check_nets(design: &Design, out: &mut Vec<Diagnostic>) {
    let conn = design.connectivity();
    let net_idx = design.net_index();
    let mte_tree: BTreeSet<usize> = mte_tree_nets(design, &conn, &net_idx);

    // Driver counting (connectivity keeps only the last writer).
    let mut driver_count = vec![0usize; design.nets.len()];
    for id in &design.inputs {
        driver_count[net_idx[id.as_str()]] += 1;
    }
    for cell in &design.cells {
        let kind = design.kind_of(cell);
        if let Some(outp) = &kind.output {
            if let Some(net) = cell.pins.get(outp) {
                driver_count[net_idx[net.as_str()]] += 1;
            }
        }
    }

    for (ni, net) in design.nets.iter().enumerate() {
        let nc = &conn.nets[ni];
        match driver_count[ni] {
            0 => out.push(diag("undriven-net", &net.id, "net has no driver")),
            1 => {}
            n => out.push(diag(
                "multi-driven-net",
                &net.id,
                format!("net has {n} drivers"),
            )),
        }
        let sink_count = nc.sinks.len() + nc.mte_sinks.len() + usize::from(nc.is_primary_output);
        if sink_count == 0 && net.id != design.mte_net {
            out.push(diag("dangling-net", &net.id, "net has no sinks"));
        }
        if matches!(nc.driver, Some(NetDriver::PrimaryInput)) && nc.is_primary_output {
            out.push(diag(
                "pi-po-feedthrough",
                &net.id,
                "primary input may not feed a primary output directly",
            ));
        }

        // Holder bookkeeping: flag iff a holder instance senses this net.
        let holder_here = nc.sinks.iter().any(|(ci, _)| {
            design.kind_of(&design.cells[*ci]).function == LogicFunction::Holder
        });
        if net.holder_attached != holder_here {
            out.push(diag(
                "holder-flag",
                &net.id,
                "holder_attached flag disagrees with attached holder instances",
            ));
        }

        if mte_tree.contains(&ni) {
            for (ci, pin) in &nc.sinks {
                let cell = &design.cells[*ci];
                if design.kind_of(cell).function != LogicFunction::Mtebuf {
                    out.push(diag(
                        "mte-logic-sink",
                        &net.id,
                        format!("logic pin `{}.{}` sinks a standby-control net", cell.id, pin),
                    ));
                }
            }
        }
    }

    // Control pins must land on the MTE tree.
    for (ni, nc) in conn.nets.iter().enumerate() {
        if !nc.mte_sinks.is_empty() && !mte_tree.contains(&ni) {
            out.push(diag(
                "mte-binding",
                &design.nets[ni].id,
                "MTE pin bound to a net outside the standby-control tree",
            ));
        }
    }

    for cell in &design.cells {
        let kind = design.kind_of(cell);
        let needs_mte = matches!(
            kind.function,
            LogicFunction::Holder | LogicFunction::Switch
        ) || cell.variant == VthVariant::MtBuiltIn;
        if needs_mte && !cell.pins.contains_key(MTE_PIN) {
            out.push(diag(
                "unbound-pin",
                &cell.id,
                "standby-control cell is missing its MTE binding",
            ));
        }
    }
}

/// Nets of the standby-control tree: the MTE root plus everything driven by
/// an MTE buffer.
fn mte_tree_nets(
    design: &Design,
    conn: &Connectivity,
    net_idx: &std::collections::BTreeMap<&str, usize>,
) -> BTreeSet<usize> {
    let mut set = BTreeSet::new();
    set.insert(net_idx[design.mte_net.as_str()]);
    for (ni, nc) in conn.nets.iter().enumerate() {
        if let Some(NetDriver::Cell(ci, _)) = &nc.driver {
            if design.kind_of(&design.cells[*ci]).function == LogicFunction::Mtebuf {
                set.insert(ni);
            }
        }
    }
    set
}

fn check_cycles(design: &Design, out: &mut Vec<Diagnostic>) {
    // DFS over combinational cells; registers cut paths.
    let conn = design.connectivity();
    let net_idx = design.net_index();
    let n = design.cells.len();
    let mut state = vec![0u8; n]; // 0 unvisited, 1 on stack, 2 done
    let mut cycle_cells: BTreeSet<String> = BTreeSet::new();

    fn dfs(
        ci: usize,
        design: &Design,
        conn: &Connectivity,
        net_idx: &std::collections::BTreeMap<&str, usize>,
        state: &mut [u8],
        cycle: &mut BTreeSet<String>,
    ) -> bool {
        state[ci] = 1;
        let cell = &design.cells[ci];
        let kind = design.kind_of(cell);
        let mut in_cycle = false;
        if let Some(outp) = &kind.output {
            if let Some(net) = cell.pins.get(outp) {
                for (si, _) in &conn.nets[net_idx[net.as_str()]].sinks {
                    let sk = design.kind_of(&design.cells[*si]);
                    if !sk.function.is_logic() || sk.function == LogicFunction::Dff {
                        continue;
                    }
                    match state[*si] {
                        0 => {
                            if dfs(*si, design, conn, net_idx, state, cycle) {
                                cycle.insert(cell.id.clone());
                                in_cycle = true;
                            }
                        }
                        1 => {
                            cycle.insert(design.cells[*si].id.clone());
                            cycle.insert(cell.id.clone());
                            in_cycle = true;
                        }
                        _ => {}
                    }
                }
            }
        }
        state[ci] = 2;
        in_cycle
    }

    for ci in 0..n {
        let kind = design.kind_of(&design.cells[ci]);
        if state[ci] == 0 && kind.function.is_logic() && kind.function != LogicFunction::Dff {
            dfs(ci, design, &conn, &net_idx, &mut state, &mut cycle_cells);
        }
    }
    if !cycle_cells.is_empty() {
        let list = cycle_cells.into_iter().collect::<Vec<_>>().join(", ");
        out.push(diag(
            "combinational-cycle",
            "design",
            format!("cells on a combinational cycle: {list}"),
        ));
    }
}

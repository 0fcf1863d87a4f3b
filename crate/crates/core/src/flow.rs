//! End-to-end flow orchestration, the three comparison modes, the hold-fix
//! ECO, accounting, and reporting.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assign::{assign_vth, dual_vth_only_mode, initialize_low_vth, AssignMode, AssignOptions};
use crate::error::{Result, SmtError};
use crate::interconnect::{buffer_mte, extract_rc_postroute};
use crate::model::*;
use crate::timing::{run_sta, NetParasitics, TimingAnnotation};
use crate::transform::{
    cluster_switches, insert_holders, insert_initial_switch, reoptimize_switches, size_switch,
    ClusterStage, SwitchStructure, HOLDER_KIND,
};
use crate::validate::ensure_valid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    DualVth,
    ConventionalSmt,
    ImprovedSmt,
}

impl FlowMode {
    pub fn label(self) -> &'static str {
        match self {
            FlowMode::DualVth => "Dual-Vth",
            FlowMode::ConventionalSmt => "Con.-SMT",
            FlowMode::ImprovedSmt => "Imp.-SMT",
        }
    }
}

impl std::str::FromStr for FlowMode {
    type Err = SmtError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dualvth" => Ok(FlowMode::DualVth),
            "conventional" => Ok(FlowMode::ConventionalSmt),
            "improved" => Ok(FlowMode::ImprovedSmt),
            other => Err(SmtError::Parameter(format!(
                "unknown mode `{other}` (expected dualvth|conventional|improved)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCounts {
    pub hvt: usize,
    pub lvt: usize,
    pub mt: usize,
    pub holders: usize,
    pub switches: usize,
    pub mte_buffers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: FlowMode,
    /// µm², cells plus switch/holder overheads
    pub total_area: f64,
    /// nA
    pub standby_leakage: f64,
    pub worst_setup_slack: i64,
    pub worst_hold_slack: i64,
    pub timing_met: bool,
    pub counts: ComponentCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRow {
    pub mode: FlowMode,
    pub area_pct: f64,
    pub leakage_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMeta {
    pub seed: u64,
    pub config_hash: String,
    pub stages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub modes: Vec<ModeReport>,
    /// Normalized comparison rows, present when a Dual-Vth baseline exists.
    pub normalized: Vec<NormalizedRow>,
    pub meta: FlowMeta,
}

impl FlowReport {
    pub fn new(modes: Vec<ModeReport>, meta: FlowMeta) -> Self {
        let normalized = modes
            .iter()
            .find(|m| m.mode == FlowMode::DualVth)
            .map(|base| {
                modes
                    .iter()
                    .map(|m| NormalizedRow {
                        mode: m.mode,
                        area_pct: 100.0 * m.total_area / base.total_area,
                        leakage_pct: 100.0 * m.standby_leakage / base.standby_leakage,
                    })
                    .collect()
            })
            .unwrap_or_default();
        FlowReport {
            modes,
            normalized,
            meta,
        }
    }

    pub fn mode(&self, mode: FlowMode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Built-in switch sizing record for one conventional MT-cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuiltInSwitch {
    pub cell: String,
    pub width: f64,
    pub v_bounce: f64,
}

pub struct FlowOutcome {
    pub design: Design,
    pub structure: SwitchStructure,
    pub builtin: Vec<BuiltInSwitch>,
    pub parasitics: Vec<NetParasitics>,
    pub timing: TimingAnnotation,
    pub report: ModeReport,
    pub stages: Vec<String>,
}

/// Runs the full flow in one mode. A final setup violation is reported in
/// the returned `ModeReport` (`timing_met = false`), not as an error, so the
/// report can still be emitted.
pub fn run_flow(input: &Design, mode: FlowMode, seed: Option<u64>) -> Result<FlowOutcome> {
    let mut d = input.clone();
    if let Some(s) = seed {
        d.constraints.seed = s;
    }
    let seed = d.constraints.seed;
    let mut stages = vec!["validate".to_string()];
    ensure_valid(&d)?;
    if d.flow_stage != FlowStage::Input {
        return Err(SmtError::Contract(
            "run_flow expects a design at the input stage".into(),
        ));
    }

    initialize_low_vth(&mut d);
    stages.push("initialize_low_vth".into());

    let mut structure = SwitchStructure::empty(ClusterStage::Reoptimized);
    let mut builtin = Vec::new();
    let mut bounce_by_id: BTreeMap<String, f64> = BTreeMap::new();

    match mode {
        FlowMode::DualVth => {
            dual_vth_only_mode(&mut d)?;
            stages.push("dual_vth_assignment".into());
        }
        FlowMode::ConventionalSmt => {
            // same evaluation options in every mode: the converted cell set
            // is identical, only the residue's implementation differs
            assign_vth(
                &mut d,
                AssignMode::SelectiveMt,
                AssignOptions {
                    anticipate_bounce: true,
                    anticipate_holders: true,
                },
            )?;
            stages.push("vth_assignment".into());
            builtin = conventionalize(&mut d)?;
            for b in &builtin {
                bounce_by_id.insert(b.cell.clone(), b.v_bounce);
            }
            stages.push("builtin_switch_conversion".into());
            buffer_mte(&mut d)?;
            stages.push("buffer_mte".into());
        }
        FlowMode::ImprovedSmt => {
            assign_vth(
                &mut d,
                AssignMode::SelectiveMt,
                AssignOptions {
                    anticipate_bounce: true,
                    anticipate_holders: true,
                },
            )?;
            stages.push("vth_assignment".into());
            insert_holders(&mut d)?;
            stages.push("insert_holders".into());
            let initial = insert_initial_switch(&mut d)?;
            stages.push("insert_initial_switch".into());
            let clustered = cluster_switches(&mut d, &initial)?;
            stages.push("cluster_switches".into());
            structure = reoptimize_switches(&mut d, &clustered, seed)?;
            stages.push("reoptimize_switches".into());
            // Buffer after re-optimization: splits may add switches, and the
            // tree must cover the final switch set.
            buffer_mte(&mut d)?;
            stages.push("buffer_mte".into());
            for cl in &structure.clusters {
                for m in &cl.members {
                    bounce_by_id.insert(m.clone(), cl.v_bounce);
                }
            }
        }
    }

    d.flow_stage = FlowStage::Final;
    let eco_buffers = eco_hold_fix(&mut d, &bounce_by_id, seed)?;
    stages.push(format!("eco_hold_fix({eco_buffers} buffers)"));

    let parasitics = extract_rc_postroute(&d, seed);
    stages.push("extract_rc_postroute".into());
    let bounce = bounce_vec(&d, &bounce_by_id);
    let timing = run_sta(&d, &parasitics, &bounce)?;
    stages.push("final_sta".into());

    let report = account(&d, mode, &structure, &builtin, &timing);
    stages.push("accounting".into());

    Ok(FlowOutcome {
        design: d,
        structure,
        builtin,
        parasitics,
        timing,
        report,
        stages,
    })
}

/// Runs all three modes and assembles the normalized comparison.
pub fn compare(input: &Design, seed: Option<u64>) -> Result<(FlowReport, Vec<FlowOutcome>)> {
    let mut outcomes = Vec::new();
    for mode in [
        FlowMode::DualVth,
        FlowMode::ConventionalSmt,
        FlowMode::ImprovedSmt,
    ] {
        outcomes.push(run_flow(input, mode, seed)?);
    }
    let seed = seed.unwrap_or(input.constraints.seed);
    let meta = FlowMeta {
        seed,
        config_hash: config_hash(&input.constraints),
        stages: outcomes
            .iter()
            .flat_map(|o| {
                let label = o.report.mode.label();
                o.stages.iter().map(move |s| format!("{label}: {s}"))
            })
            .collect(),
    };
    let report = FlowReport::new(outcomes.iter().map(|o| o.report.clone()).collect(), meta);
    Ok((report, outcomes))
}

fn bounce_vec(design: &Design, by_id: &BTreeMap<String, f64>) -> Vec<f64> {
    design
        .cells
        .iter()
        .map(|c| by_id.get(&c.id).copied().unwrap_or(0.0))
        .collect()
}

/// Converts every MT-cell to the conventional form: built-in switch sized at
/// alpha = 1 with zero VGND wire, plus a built-in holder. No shared switches,
/// no VGND wiring.
pub fn conventionalize(design: &mut Design) -> Result<Vec<BuiltInSwitch>> {
    if design.flow_stage != FlowStage::Assigned {
        return Err(SmtError::Contract(
            "conventional conversion requires the assigned stage".into(),
        ));
    }
    let c = design.constraints.clone();
    let mut out = Vec::new();
    let mte = design.mte_net.clone();
    for ci in 0..design.cells.len() {
        if design.cells[ci].variant != VthVariant::MtNoVgnd {
            continue;
        }
        let i_peak = design
            .kind_of(&design.cells[ci])
            .params(VthVariant::LowVth)
            .i_peak;
        let (width, v_bounce) =
            size_switch(&[i_peak], &[0.0], 1.0, &c).expect("zero-wire sizing is always feasible");
        let cell = &mut design.cells[ci];
        cell.variant = VthVariant::MtBuiltIn;
        cell.pins.insert(MTE_PIN.to_string(), mte.clone());
        out.push(BuiltInSwitch {
            cell: cell.id.clone(),
            width,
            v_bounce,
        });
    }
    design.flow_stage = FlowStage::Conventional;
    Ok(out)
}

/// Inserts high-Vth buffers in front of hold-violating endpoints until the
/// minimum path delay clears `hold_min`, worst endpoint first.
pub fn eco_hold_fix(
    design: &mut Design,
    bounce_by_id: &BTreeMap<String, f64>,
    seed: u64,
) -> Result<usize> {
    let mut inserted = 0usize;
    for _ in 0..design.constraints.eco_iter_cap {
        let par = extract_rc_postroute(design, seed);
        let bounce = bounce_vec(design, bounce_by_id);
        let ta = run_sta(design, &par, &bounce)?;
        if ta.worst_hold_slack >= 0 {
            return Ok(inserted);
        }
        if !design.library.kinds.contains_key("BUF") {
            return Err(SmtError::Characterization(
                "hold fix needs a BUF kind in the library".into(),
            ));
        }
        // worst endpoint: smallest min arrival, net id tiebreak
        let &ni = ta
            .endpoint_nets
            .iter()
            .filter(|&&ni| ta.arrival_min[ni] < design.constraints.hold_min)
            .min_by_key(|&&ni| (ta.arrival_min[ni], design.nets[ni].id.clone()))
            .expect("violating endpoint exists");
        insert_eco_buffer(design, ni, inserted)?;
        inserted += 1;
    }
    let par = extract_rc_postroute(design, seed);
    let bounce = bounce_vec(design, bounce_by_id);
    let ta = run_sta(design, &par, &bounce)?;
    if ta.worst_hold_slack >= 0 {
        Ok(inserted)
    } else {
        Err(SmtError::InfeasibleTiming(format!(
            "hold violations remain after {inserted} ECO buffers (worst {} ps)",
            ta.worst_hold_slack
        )))
    }
}

fn insert_eco_buffer(design: &mut Design, net: usize, n: usize) -> Result<()> {
    let conn = design.connectivity();
    let nc = &conn.nets[net];
    let old_id = design.nets[net].id.clone();
    let new_id = format!("eco{n}_{old_id}");
    let pos = match &nc.driver {
        Some(NetDriver::Cell(ci, _)) => design.cells[*ci].pos,
        _ => Point {
            x: design.die.x0,
            y: design.die.y0,
        },
    };
    // Move the worst endpoint leg: the primary output if present, otherwise
    // the first register D input on the net.
    let mut moved = false;
    if design.outputs.iter().any(|o| o == &old_id) {
        design.outputs.retain(|o| o != &old_id);
        design.outputs.push(new_id.clone());
        moved = true;
    } else {
        let dff = nc
            .sinks
            .iter()
            .filter(|(ci, _)| design.kind_of(&design.cells[*ci]).function == LogicFunction::Dff)
            .min_by_key(|(ci, _)| design.cells[*ci].id.clone());
        if let Some((ci, pin)) = dff {
            design.cells[*ci].pins.insert(pin.clone(), new_id.clone());
            moved = true;
        }
    }
    if !moved {
        return Err(SmtError::Contract(
            "hold endpoint has neither PO nor register sink".into(),
        ));
    }
    design.nets.push(NetDecl {
        id: new_id.clone(),
        holder_attached: false,
    });
    let mut pins = BTreeMap::new();
    pins.insert("A".to_string(), old_id);
    pins.insert("Y".to_string(), new_id);
    design.cells.push(CellInstance {
        id: format!("ecobuf{n}"),
        kind: "BUF".to_string(),
        variant: VthVariant::HighVth,
        pos,
        pins,
    });
    design.canonicalize();
    Ok(())
}

/// Standby leakage under the mode's accounting rules, nA.
pub fn standby_leakage(
    design: &Design,
    mode: FlowMode,
    ss: &SwitchStructure,
    builtin: &[BuiltInSwitch],
) -> f64 {
    let c = &design.constraints;
    let holder_leak = design
        .library
        .kinds
        .get(HOLDER_KIND)
        .map(|k| k.high_vth.leak_standby)
        .unwrap_or(0.0);
    let mut leak = 0.0;
    for cell in &design.cells {
        let kind = design.kind_of(cell);
        leak += match cell.variant {
            VthVariant::HighVth => kind.high_vth.leak_standby,
            VthVariant::LowVth => kind.low_vth.leak_standby,
            // MT logic is cut off by its (off) high-Vth switch in standby.
            VthVariant::MtNoVgnd | VthVariant::MtWithVgnd | VthVariant::MtBuiltIn => 0.0,
        };
    }
    match mode {
        FlowMode::DualVth => {}
        FlowMode::ImprovedSmt => {
            leak += ss.clusters.iter().map(|cl| c.l_sw * cl.width).sum::<f64>();
        }
        FlowMode::ConventionalSmt => {
            leak += builtin
                .iter()
                .map(|b| c.l_sw * b.width + holder_leak)
                .sum::<f64>();
        }
    }
    leak
}

/// Total area under the mode's accounting rules, µm².
pub fn total_area(
    design: &Design,
    mode: FlowMode,
    ss: &SwitchStructure,
    builtin: &[BuiltInSwitch],
) -> f64 {
    let c = &design.constraints;
    let holder_area = design
        .library
        .kinds
        .get(HOLDER_KIND)
        .map(|k| k.high_vth.area)
        .unwrap_or(0.0);
    let mut area = design.cell_area();
    match mode {
        FlowMode::DualVth => {}
        FlowMode::ImprovedSmt => {
            area += ss.clusters.iter().map(|cl| c.a_sw * cl.width).sum::<f64>();
        }
        FlowMode::ConventionalSmt => {
            area += builtin
                .iter()
                .map(|b| c.a_sw * b.width + holder_area)
                .sum::<f64>();
        }
    }
    area
}

pub fn component_counts(design: &Design, ss: &SwitchStructure, builtin: &[BuiltInSwitch]) -> ComponentCounts {
    let mut counts = ComponentCounts::default();
    for cell in &design.cells {
        let f = design.kind_of(cell).function;
        match f {
            LogicFunction::Holder => counts.holders += 1,
            LogicFunction::Switch => counts.switches += 1,
            LogicFunction::Mtebuf => counts.mte_buffers += 1,
            _ => match cell.variant {
                VthVariant::HighVth => counts.hvt += 1,
                VthVariant::LowVth => counts.lvt += 1,
                _ => counts.mt += 1,
            },
        }
    }
    // built-in switches and holders are inside the conventional MT-cells
    counts.switches += builtin.len();
    counts.holders += builtin.len();
    debug_assert!(ss.clusters.len() <= counts.switches);
    counts
}

fn account(
    design: &Design,
    mode: FlowMode,
    ss: &SwitchStructure,
    builtin: &[BuiltInSwitch],
    ta: &TimingAnnotation,
) -> ModeReport {
    ModeReport {
        mode,
        total_area: total_area(design, mode, ss, builtin),
        standby_leakage: standby_leakage(design, mode, ss, builtin),
        worst_setup_slack: ta.worst_setup_slack,
        worst_hold_slack: ta.worst_hold_slack,
        timing_met: ta.worst_setup_slack >= 0 && ta.worst_hold_slack >= 0,
        counts: component_counts(design, ss, builtin),
    }
}

pub(crate) fn fnv1a64_bytes(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn config_hash(constraints: &Constraints) -> String {
    let json = serde_json::to_string(constraints).expect("constraints serialization");
    format!("{:016x}", fnv1a64_bytes(json.as_bytes()))
}

/// Renders the text comparison table, normalized to Dual-Vth = 100%.
pub fn render_table(report: &FlowReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>12} {:>12} {:>14} {:>14}\n",
        "Mode", "Area", "Leakage", "Area (um^2)", "Leakage (nA)"
    ));
    for m in &report.modes {
        let norm = report.normalized.iter().find(|r| r.mode == m.mode);
        let (a, l) = match norm {
            Some(r) => (format!("{:.2}%", r.area_pct), format!("{:.2}%", r.leakage_pct)),
            None => ("-".into(), "-".into()),
        };
        out.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>14.2} {:>14.2}\n",
            m.mode.label(),
            a,
            l,
            m.total_area,
            m.standby_leakage
        ));
    }
    out
}

/// Independent re-summation of component counts from the final design dump;
/// used to cross-check the accounting.
pub fn recount_from_design(design: &Design) -> ComponentCounts {
    let mut counts = ComponentCounts::default();
    for cell in &design.cells {
        match design.kind_of(cell).function {
            LogicFunction::Holder => counts.holders += 1,
            LogicFunction::Switch => counts.switches += 1,
            LogicFunction::Mtebuf => counts.mte_buffers += 1,
            _ => match cell.variant {
                VthVariant::HighVth => counts.hvt += 1,
                VthVariant::LowVth => counts.lvt += 1,
                VthVariant::MtBuiltIn => {
                    counts.mt += 1;
                    counts.switches += 1;
                    counts.holders += 1;
                }
                _ => counts.mt += 1,
            },
        }
    }
    counts
}

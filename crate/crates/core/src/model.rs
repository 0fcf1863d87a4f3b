//! Netlist, placement, library, and constraint data model.
//!
//! Coordinates are stored in integer nanometers so wirelength arithmetic is
//! exact; the file format exposes micrometers. Electrical quantities keep the
//! units they are labeled with in the file format (ps, nA, fF, kΩ, mA, V).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Reserved pin name used for the sleep-enable connection on switches,
/// holders, MTE buffers, and built-in-switch cells.
pub const MTE_PIN: &str = "MTE";

/// Threshold-voltage variant of a cell instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VthVariant {
    HighVth,
    LowVth,
    /// MT-cell before switch insertion: no VGND port defined yet.
    MtNoVgnd,
    /// MT-cell whose VGND port is wired to a shared sleep switch.
    MtWithVgnd,
    /// Conventional MT-cell: logic plus built-in switch and built-in holder.
    MtBuiltIn,
}

impl VthVariant {
    /// True for any of the three MT forms.
    pub fn is_mt(self) -> bool {
        matches!(
            self,
            VthVariant::MtNoVgnd | VthVariant::MtWithVgnd | VthVariant::MtBuiltIn
        )
    }
}

/// Logic function tag of a cell kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LogicFunction {
    Inv,
    Buf,
    Nand2,
    Nor2,
    And2,
    Dff,
    Holder,
    Switch,
    Mtebuf,
}

impl LogicFunction {
    /// Functional cells that carry signal timing (everything that is not
    /// standby-control infrastructure).
    pub fn is_logic(self) -> bool {
        !matches!(
            self,
            LogicFunction::Holder | LogicFunction::Switch | LogicFunction::Mtebuf
        )
    }
}

/// Electrical characterization of one Vth variant of a cell kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantParams {
    /// Cell area in µm².
    pub area: f64,
    /// Standby leakage in nA.
    pub leak_standby: f64,
    /// Intrinsic delay in ps.
    pub d0: f64,
    /// Drive resistance in kΩ.
    pub r_drive: f64,
    /// Input capacitance per input pin in fF.
    pub c_in: f64,
    /// Peak discharge current in mA.
    pub i_peak: f64,
}

/// A library cell: function, pin list, and per-variant characterization.
///
/// MT variants reuse the low-Vth delay parameters; their standby leakage is
/// accounted at the sleep switch rather than per cell, so only two physical
/// records are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKind {
    pub name: String,
    pub function: LogicFunction,
    pub inputs: Vec<String>,
    /// Holders and switches have no modeled output pin.
    pub output: Option<String>,
    pub high_vth: VariantParams,
    pub low_vth: VariantParams,
}

impl CellKind {
    /// Delay/load parameters for a variant. MT variants map to the low-Vth
    /// record by construction.
    pub fn params(&self, variant: VthVariant) -> &VariantParams {
        match variant {
            VthVariant::HighVth => &self.high_vth,
            _ => &self.low_vth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Library {
    pub kinds: BTreeMap<String, CellKind>,
}

/// A placement point in integer nanometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub fn manhattan(self, other: Point) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

pub fn um_to_nm(um: f64) -> i64 {
    (um * 1000.0).round() as i64
}

pub fn nm_to_um(nm: i64) -> f64 {
    nm as f64 / 1000.0
}

/// Die bounding box in nanometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Die {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl Die {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

/// A placed cell instance with pin-to-net bindings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInstance {
    pub id: String,
    pub kind: String,
    pub variant: VthVariant,
    pub pos: Point,
    /// Pin name → net id. May contain an extra `MTE` binding for
    /// standby-control sinks.
    pub pins: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDecl {
    pub id: String,
    pub holder_attached: bool,
}

/// Flow-stage tag carried by the design; validation rules for the transient
/// MT variants key off this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStage {
    Input,
    AllLow,
    Assigned,
    HoldersInserted,
    SwitchesInserted,
    MteBuffered,
    Conventional,
    Final,
}

/// Designer constraints and model coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    /// Required arrival at endpoints, ps.
    pub t_clk: i64,
    /// Minimum allowed path delay at endpoints, ps.
    pub hold_min: i64,
    /// Supply voltage, V.
    pub v_dd: f64,
    /// Upper limit on VGND voltage bounce, V.
    pub v_bounce_max: f64,
    /// Per-cluster VGND star wirelength cap, µm.
    pub l_vgnd_max: f64,
    /// Electromigration cap on cells sharing one switch.
    pub n_cells_max: usize,
    /// Simultaneous-switching derating factor in (0, 1].
    pub alpha: f64,
    /// Delay degradation coefficient for VGND bounce.
    pub k_bounce: f64,
    /// Switch resistance-width product, Ω·µm.
    pub r0_switch: f64,
    /// Switch leakage per width, nA/µm.
    pub l_sw: f64,
    /// Switch area per width, µm²/µm.
    pub a_sw: f64,
    /// Minimum switch width, µm.
    pub w_min: f64,
    /// Wire resistance, Ω/µm.
    pub r_wire: f64,
    /// Wire capacitance, fF/µm.
    pub c_wire: f64,
    /// Maximum fanout per node of the MTE buffer tree.
    pub mte_max_fanout: usize,
    /// Seed for the deterministic routing-detour model.
    pub seed: u64,
    /// Upper bound of the post-route detour factor minus one.
    pub detour_max: f64,
    /// Criticality margin for cell selection, as a fraction of t_clk.
    pub critical_margin_frac: f64,
    /// Iteration cap for the hold-fix ECO loop.
    pub eco_iter_cap: usize,
}

impl Default for Constraints {
    fn default() -> Self {
        Constraints {
            t_clk: 1000,
            hold_min: 0,
            v_dd: 1.0,
            v_bounce_max: 0.05,
            l_vgnd_max: 200.0,
            n_cells_max: 16,
            alpha: 0.5,
            k_bounce: 2.0,
            r0_switch: 100.0,
            l_sw: 30.0,
            a_sw: 48.0,
            w_min: 0.05,
            r_wire: 0.05,
            c_wire: 0.2,
            mte_max_fanout: 16,
            seed: 0,
            detour_max: 0.25,
            critical_margin_frac: 0.05,
            eco_iter_cap: 1000,
        }
    }
}

/// What drives a net.
#[derive(Debug, Clone, PartialEq)]
pub enum NetDriver {
    PrimaryInput,
    /// (cell index, output pin name)
    Cell(usize, String),
}

/// Derived connectivity of one net.
#[derive(Debug, Clone, Default)]
pub struct NetConn {
    pub driver: Option<NetDriver>,
    /// (cell index, input pin name), excluding MTE-control bindings.
    pub sinks: Vec<(usize, String)>,
    /// Standby-control sinks bound via the `MTE` pin.
    pub mte_sinks: Vec<usize>,
    pub is_primary_output: bool,
}

/// Connectivity view aligned with `Design::nets`.
#[derive(Debug, Clone, Default)]
pub struct Connectivity {
    pub nets: Vec<NetConn>,
}

/// The complete design: library, netlist, placement, and constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub library: Library,
    pub constraints: Constraints,
    pub die: Die,
    pub cells: Vec<CellInstance>,
    pub nets: Vec<NetDecl>,
    /// Net ids driven by primary inputs.
    pub inputs: Vec<String>,
    /// Net ids observed by primary outputs.
    pub outputs: Vec<String>,
    /// Distinguished standby-control net id.
    pub mte_net: String,
    pub flow_stage: FlowStage,
}

impl Design {
    /// Sorts cells and nets by id; all serialization goes through this.
    pub fn canonicalize(&mut self) {
        self.cells.sort_by(|a, b| a.id.cmp(&b.id));
        self.nets.sort_by(|a, b| a.id.cmp(&b.id));
        self.inputs.sort();
        self.outputs.sort();
    }

    pub fn cell_index(&self) -> BTreeMap<&str, usize> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.as_str(), i))
            .collect()
    }

    pub fn net_index(&self) -> BTreeMap<&str, usize> {
        self.nets
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect()
    }

    pub fn kind_of(&self, cell: &CellInstance) -> &CellKind {
        &self.library.kinds[&cell.kind]
    }

    /// Builds the driver/sink view of every net from pin bindings and ports.
    /// Assumes references resolve; `validate` reports dangling ones.
    pub fn connectivity(&self) -> Connectivity {
        let net_idx = self.net_index();
        let mut nets = vec![NetConn::default(); self.nets.len()];
        for id in &self.inputs {
            if let Some(&ni) = net_idx.get(id.as_str()) {
                nets[ni].driver = Some(NetDriver::PrimaryInput);
            }
        }
        for id in &self.outputs {
            if let Some(&ni) = net_idx.get(id.as_str()) {
                nets[ni].is_primary_output = true;
            }
        }
        for (ci, cell) in self.cells.iter().enumerate() {
            let kind = self.kind_of(cell);
            for (pin, net) in &cell.pins {
                let Some(&ni) = net_idx.get(net.as_str()) else {
                    continue;
                };
                if kind.output.as_deref() == Some(pin.as_str()) {
                    nets[ni].driver = Some(NetDriver::Cell(ci, pin.clone()));
                } else if pin == MTE_PIN {
                    // Standby-control binding, never a timing sink.
                    nets[ni].mte_sinks.push(ci);
                } else {
                    nets[ni].sinks.push((ci, pin.clone()));
                }
            }
        }
        Connectivity { nets }
    }

    /// Total placed area in µm², counting logic cells at their variant's
    /// characterized area. Switch/holder/buffer overheads are added by the
    /// flow accounting on top of this.
    pub fn cell_area(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| self.kind_of(c).params(c.variant).area)
            .sum()
    }
}

//! Textual design-file format (`format: 1`) and its parse/write pair.
//!
//! One self-contained UTF-8 JSON document holds library, constraints, die,
//! placement, netlist, and ports. Lengths are µm, times ps, leakage nA,
//! capacitance fF, resistance kΩ (cell drive) or Ω-based wire coefficients,
//! current mA, voltage V. `write_design` is canonical: entities are sorted by
//! id, so structurally equal designs serialize to identical bytes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmtError};
use crate::model::*;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct DesignFile {
    format: u32,
    flow_stage: FlowStage,
    die: DieFile,
    library: LibraryFile,
    constraints: ConstraintsFile,
    ports: PortsFile,
    mte_net: String,
    cells: Vec<CellFile>,
    nets: Vec<NetFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DieFile {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LibraryFile {
    kinds: Vec<CellKind>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PortsFile {
    inputs: Vec<String>,
    outputs: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CellFile {
    id: String,
    kind: String,
    variant: VthVariant,
    x: f64,
    y: f64,
    pins: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetFile {
    id: String,
    #[serde(default)]
    holder_attached: bool,
}

/// Constraints with µm-labeled fields kept as in `Constraints`; this mirror
/// exists so the file layout stays stable independently of internal changes.
#[derive(Debug, Serialize, Deserialize)]
struct ConstraintsFile {
    t_clk: i64,
    hold_min: i64,
    v_dd: f64,
    v_bounce_max: f64,
    l_vgnd_max: f64,
    n_cells_max: usize,
    alpha: f64,
    k_bounce: f64,
    r0_switch: f64,
    l_sw: f64,
    a_sw: f64,
    w_min: f64,
    r_wire: f64,
    c_wire: f64,
    mte_max_fanout: usize,
    seed: u64,
    detour_max: f64,
    critical_margin_frac: f64,
    eco_iter_cap: usize,
}

impl From<&Constraints> for ConstraintsFile {
    fn from(c: &Constraints) -> Self {
        ConstraintsFile {
            t_clk: c.t_clk,
            hold_min: c.hold_min,
            v_dd: c.v_dd,
            v_bounce_max: c.v_bounce_max,
            l_vgnd_max: c.l_vgnd_max,
            n_cells_max: c.n_cells_max,
            alpha: c.alpha,
            k_bounce: c.k_bounce,
            r0_switch: c.r0_switch,
            l_sw: c.l_sw,
            a_sw: c.a_sw,
            w_min: c.w_min,
            r_wire: c.r_wire,
            c_wire: c.c_wire,
            mte_max_fanout: c.mte_max_fanout,
            seed: c.seed,
            detour_max: c.detour_max,
            critical_margin_frac: c.critical_margin_frac,
            eco_iter_cap: c.eco_iter_cap,
        }
    }
}

impl From<ConstraintsFile> for Constraints {
    fn from(c: ConstraintsFile) -> Self {
        Constraints {
            t_clk: c.t_clk,
            hold_min: c.hold_min,
            v_dd: c.v_dd,
            v_bounce_max: c.v_bounce_max,
            l_vgnd_max: c.l_vgnd_max,
            n_cells_max: c.n_cells_max,
            alpha: c.alpha,
            k_bounce: c.k_bounce,
            r0_switch: c.r0_switch,
            l_sw: c.l_sw,
            a_sw: c.a_sw,
            w_min: c.w_min,
            r_wire: c.r_wire,
            c_wire: c.c_wire,
            mte_max_fanout: c.mte_max_fanout,
            seed: c.seed,
            detour_max: c.detour_max,
            critical_margin_frac: c.critical_margin_frac,
            eco_iter_cap: c.eco_iter_cap,
        }
    }
}

/// Parses a design file, resolving and checking every reference.
pub fn parse_design(text: &str) -> Result<Design> {
    let file: DesignFile = serde_json::from_str(text).map_err(|e| SmtError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.format != FORMAT_VERSION {
        return Err(SmtError::Format(file.format));
    }

    let mut kinds = BTreeMap::new();
    for k in file.library.kinds {
        if kinds.insert(k.name.clone(), k.clone()).is_some() {
            return Err(SmtError::Duplicate {
                what: "cell kind",
                name: k.name,
            });
        }
    }
    let library = Library { kinds };

    let mut net_ids = BTreeSet::new();
    for n in &file.nets {
        if !net_ids.insert(n.id.clone()) {
            return Err(SmtError::Duplicate {
                what: "net",
                name: n.id.clone(),
            });
        }
    }
    let mut cell_ids = BTreeSet::new();
    let mut cells = Vec::with_capacity(file.cells.len());
    for c in file.cells {
        if !cell_ids.insert(c.id.clone()) {
            return Err(SmtError::Duplicate {
                what: "cell",
                name: c.id.clone(),
            });
        }
        let kind = library
            .kinds
            .get(&c.kind)
            .ok_or_else(|| SmtError::Unresolved {
                what: "cell kind",
                name: c.kind.clone(),
                context: format!("cell `{}`", c.id),
            })?;
        for (pin, net) in &c.pins {
            if !net_ids.contains(net) {
                return Err(SmtError::Unresolved {
                    what: "net",
                    name: net.clone(),
                    context: format!("pin `{}` of cell `{}`", pin, c.id),
                });
            }
            let known = kind.inputs.iter().any(|p| p == pin)
                || kind.output.as_deref() == Some(pin.as_str())
                || pin == MTE_PIN;
            if !known {
                return Err(SmtError::Unresolved {
                    what: "pin",
                    name: pin.clone(),
                    context: format!("cell `{}` of kind `{}`", c.id, c.kind),
                });
            }
        }
        cells.push(CellInstance {
            id: c.id,
            kind: c.kind,
            variant: c.variant,
            pos: Point {
                x: um_to_nm(c.x),
                y: um_to_nm(c.y),
            },
            pins: c.pins,
        });
    }

    for (name, port) in file
        .ports
        .inputs
        .iter()
        .map(|n| (n, "primary input"))
        .chain(file.ports.outputs.iter().map(|n| (n, "primary output")))
        .chain(std::iter::once((&file.mte_net, "mte_net")))
    {
        if !net_ids.contains(name) {
            return Err(SmtError::Unresolved {
                what: "net",
                name: name.clone(),
                context: port.to_string(),
            });
        }
    }

    let mut design = Design {
        library,
        constraints: file.constraints.into(),
        die: Die {
            x0: um_to_nm(file.die.x0),
            y0: um_to_nm(file.die.y0),
            x1: um_to_nm(file.die.x1),
            y1: um_to_nm(file.die.y1),
        },
        cells,
        nets: file
            .nets
            .into_iter()
            .map(|n| NetDecl {
                id: n.id,
                holder_attached: n.holder_attached,
            })
            .collect(),
        inputs: file.ports.inputs,
        outputs: file.ports.outputs,
        mte_net: file.mte_net,
        flow_stage: file.flow_stage,
    };
    design.canonicalize();
    Ok(design)
}

/// Canonical serialization: pure function of design structure.
pub fn write_design(design: &Design) -> String {
    let mut d = design.clone();
    d.canonicalize();
    let file = DesignFile {
        format: FORMAT_VERSION,
        flow_stage: d.flow_stage,
        die: DieFile {
            x0: nm_to_um(d.die.x0),
            y0: nm_to_um(d.die.y0),
            x1: nm_to_um(d.die.x1),
            y1: nm_to_um(d.die.y1),
        },
        library: LibraryFile {
            kinds: d.library.kinds.values().cloned().collect(),
        },
        constraints: (&d.constraints).into(),
        ports: PortsFile {
            inputs: d.inputs.clone(),
            outputs: d.outputs.clone(),
        },
        mte_net: d.mte_net.clone(),
        cells: d
            .cells
            .iter()
            .map(|c| CellFile {
                id: c.id.clone(),
                kind: c.kind.clone(),
                variant: c.variant,
                x: nm_to_um(c.pos.x),
                y: nm_to_um(c.pos.y),
                pins: c.pins.clone(),
            })
            .collect(),
        nets: d
            .nets
            .iter()
            .map(|n| NetFile {
                id: n.id.clone(),
                holder_attached: n.holder_attached,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("design serialization");
    out.push('\n');
    out
}

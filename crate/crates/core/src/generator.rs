//! Seeded benchmark generator: layered random DAGs of simple gates with
//! row-based placement and a clock period placed relative to the all-low-Vth
//! critical path.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assign::{derated_all_low_critical_delay, initialize_low_vth, AssignOptions};
use crate::error::{Result, SmtError};
use crate::library::default_library;
use crate::model::*;

const ROW_PITCH_UM: f64 = 10.0;

/// Deterministic benchmark: same arguments and seed give a byte-identical
/// design file. `tightness` in (0, 1] scales the clock period relative to
/// the worst-case-derated all-low-Vth critical delay; 1.0 pins the derated
/// worst slack to exactly zero.
pub fn generate_benchmark(
    n_cells: usize,
    n_layers: usize,
    seed: u64,
    tightness: f64,
) -> Result<Design> {
    if n_cells == 0 {
        return Err(SmtError::Parameter("n_cells must be >= 1".into()));
    }
    if n_layers == 0 {
        return Err(SmtError::Parameter("n_layers must be >= 1".into()));
    }
    if !(tightness > 0.0 && tightness <= 1.0) {
        return Err(SmtError::Parameter("tightness must lie in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let library = default_library();
    let gate_kinds = ["INV", "NAND2", "NOR2", "AND2"];

    let n_layers = n_layers.min(n_cells);
    let mut layer_sizes = vec![n_cells / n_layers; n_layers];
    for size in layer_sizes.iter_mut().take(n_cells % n_layers) {
        *size += 1;
    }

    let id_width = n_cells.to_string().len();
    let mut cells = Vec::with_capacity(n_cells);
    let mut nets: Vec<NetDecl> = Vec::new();
    let mut layer_outputs: Vec<Vec<String>> = Vec::new();

    // Primary inputs: every first-layer cell has at least one input pin, so
    // capping at the layer size keeps round-robin coverage of every PI.
    let n_pi = (n_cells / 20).max(2).min(layer_sizes[0]).max(1);
    let pi_nets: Vec<String> = (0..n_pi).map(|i| format!("pi{i}")).collect();
    for id in &pi_nets {
        nets.push(NetDecl {
            id: id.clone(),
            holder_attached: false,
        });
    }
    nets.push(NetDecl {
        id: "mte".into(),
        holder_attached: false,
    });

    let mut cell_no = 0usize;
    let mut pi_cursor = 0usize;
    for (layer, &size) in layer_sizes.iter().enumerate() {
        let mut outputs = Vec::with_capacity(size);
        for col in 0..size {
            let kind_name = if n_cells == 1 {
                "INV"
            } else {
                gate_kinds[rng.gen_range(0..gate_kinds.len())]
            };
            let kind = &library.kinds[kind_name];
            let id = format!("u{cell_no:0id_width$}");
            let out_net = format!("n{cell_no}");
            cell_no += 1;

            let mut pins = BTreeMap::new();
            for pin in kind.inputs.clone() {
                let src = if layer == 0 {
                    // round-robin start so every PI gets at least one sink
                    let net = pi_nets[pi_cursor % pi_nets.len()].clone();
                    pi_cursor += 1;
                    net
                } else if rng.gen_bool(0.8) {
                    let prev = &layer_outputs[layer - 1];
                    prev[rng.gen_range(0..prev.len())].clone()
                } else {
                    // any earlier layer or a primary input
                    let l = rng.gen_range(0..=layer - 1);
                    if l == 0 && rng.gen_bool(0.3) {
                        pi_nets[rng.gen_range(0..pi_nets.len())].clone()
                    } else {
                        let src_layer = &layer_outputs[l];
                        src_layer[rng.gen_range(0..src_layer.len())].clone()
                    }
                };
                pins.insert(pin, src);
            }
            pins.insert(
                kind.output.clone().expect("gate output"),
                out_net.clone(),
            );
            nets.push(NetDecl {
                id: out_net.clone(),
                holder_attached: false,
            });
            cells.push(CellInstance {
                id,
                kind: kind_name.to_string(),
                variant: VthVariant::LowVth,
                pos: Point {
                    x: um_to_nm((col as f64 + 1.0) * ROW_PITCH_UM),
                    y: um_to_nm((layer as f64 + 1.0) * ROW_PITCH_UM),
                },
                pins,
            });
            outputs.push(out_net);
        }
        layer_outputs.push(outputs);
    }

    // Unused gate outputs become primary outputs.
    let mut used: BTreeMap<&str, bool> = nets.iter().map(|n| (n.id.as_str(), false)).collect();
    for cell in &cells {
        let kind = &library.kinds[&cell.kind];
        for pin in &kind.inputs {
            used.insert(cell.pins[pin].as_str(), true);
        }
    }
    let outputs: Vec<String> = cells
        .iter()
        .filter(|c| {
            let kind = &library.kinds[&c.kind];
            let out = &c.pins[kind.output.as_ref().unwrap()];
            !used[out.as_str()]
        })
        .map(|c| {
            let kind = &library.kinds[&c.kind];
            c.pins[kind.output.as_ref().unwrap()].clone()
        })
        .collect();

    let max_cols = layer_sizes.iter().copied().max().unwrap_or(1);
    let die = Die {
        x0: 0,
        y0: 0,
        x1: um_to_nm((max_cols as f64 + 1.0) * ROW_PITCH_UM),
        y1: um_to_nm((n_layers as f64 + 1.0) * ROW_PITCH_UM),
    };

    let mut inputs = pi_nets;
    inputs.push("mte".into());

    let mut design = Design {
        library,
        constraints: Constraints {
            seed,
            ..Constraints::default()
        },
        die,
        cells,
        nets,
        inputs,
        outputs,
        mte_net: "mte".into(),
        flow_stage: FlowStage::Input,
    };
    design.canonicalize();

    // Place the clock period against the worst-case-derated all-low-Vth
    // critical delay, so every mode stays feasible end to end.
    let mut probe = design.clone();
    initialize_low_vth(&mut probe);
    let critical = derated_all_low_critical_delay(
        &probe,
        AssignOptions {
            anticipate_bounce: true,
            anticipate_holders: true,
        },
    );
    design.constraints.t_clk = (critical as f64 / tightness).ceil() as i64;
    Ok(design)
}

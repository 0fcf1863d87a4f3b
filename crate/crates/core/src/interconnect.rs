//! Placement-based RC estimation, the deterministic post-route detour model,
//! and MTE buffer-tree insertion.

use std::collections::BTreeMap;

use crate::error::{Result, SmtError};
use crate::model::*;
use crate::morton;
use crate::timing::{NetParasitics, RcStage};

pub const MTEBUF_KIND: &str = "MTEBUF";

/// Half-perimeter wirelength of a net's pin bounding box, in nm. Ports carry
/// no geometry; only placed cell pins contribute.
pub fn hpwl_nm(design: &Design, conn: &Connectivity, net: usize) -> i64 {
    let nc = &conn.nets[net];
    let mut pts = Vec::new();
    if let Some(NetDriver::Cell(ci, _)) = &nc.driver {
        pts.push(design.cells[*ci].pos);
    }
    for (ci, _) in &nc.sinks {
        pts.push(design.cells[*ci].pos);
    }
    for ci in &nc.mte_sinks {
        pts.push(design.cells[*ci].pos);
    }
    if pts.len() < 2 {
        return 0;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    (x1 - x0) + (y1 - y0)
}

fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic routing detour in `[1.0, 1.0 + detour_max)`, a pure
/// function of (seed, net id).
pub fn detour_factor(seed: u64, net_id: &str, detour_max: f64) -> f64 {
    let z = splitmix64(seed ^ fnv1a64(net_id));
    let u = (z >> 11) as f64 / (1u64 << 53) as f64;
    1.0 + detour_max * u
}

fn rc_of(design: &Design, length_um: f64, stage: RcStage) -> NetParasitics {
    NetParasitics {
        r_net: design.constraints.r_wire * length_um,
        c_net: design.constraints.c_wire * length_um,
        routed_length: length_um,
        stage,
    }
}

/// Pre-route parasitics for every net from HPWL, optionally scaled by a
/// uniform factor (the assignment stage derates by the worst-case detour).
pub fn estimate_rc_preroute_scaled(design: &Design, scale: f64) -> Vec<NetParasitics> {
    let conn = design.connectivity();
    (0..design.nets.len())
        .map(|ni| rc_of(design, nm_to_um(hpwl_nm(design, &conn, ni)) * scale, RcStage::PreRoute))
        .collect()
}

pub fn estimate_rc_preroute(design: &Design) -> Vec<NetParasitics> {
    estimate_rc_preroute_scaled(design, 1.0)
}

/// Simulated extraction: per-net seeded detour over the HPWL estimate.
pub fn extract_rc_postroute(design: &Design, seed: u64) -> Vec<NetParasitics> {
    let conn = design.connectivity();
    (0..design.nets.len())
        .map(|ni| {
            let detour = detour_factor(seed, &design.nets[ni].id, design.constraints.detour_max);
            let len = nm_to_um(hpwl_nm(design, &conn, ni)) * detour;
            rc_of(design, len, RcStage::PostRoute)
        })
        .collect()
}

/// Buffers the MTE net so no node drives more than `mte_max_fanout` sinks.
/// Sinks are grouped in Morton order; one high-Vth MTE buffer per group at
/// the group centroid, applied level by level up to the root.
pub fn buffer_mte(design: &mut Design) -> Result<usize> {
    let fanout = design.constraints.mte_max_fanout;
    if fanout < 2 {
        return Err(SmtError::Contract("mte_max_fanout must be >= 2".into()));
    }
    // Current MTE sinks: every cell with an MTE binding.
    let mut nodes: Vec<(String, Point)> = design
        .cells
        .iter()
        .filter(|c| c.pins.contains_key(MTE_PIN))
        .map(|c| (c.id.clone(), c.pos))
        .collect();
    nodes.sort_by(|a, b| a.0.cmp(&b.0));

    let mut inserted = 0usize;
    let mut level = 0usize;
    // (cell id, pin to rebind): existing sinks rebind MTE, buffers rebind A.
    let mut pins: BTreeMap<String, &'static str> =
        nodes.iter().map(|(id, _)| (id.clone(), MTE_PIN)).collect();

    while nodes.len() > fanout {
        if !design.library.kinds.contains_key(MTEBUF_KIND) {
            return Err(SmtError::Characterization(
                "library has no MTEBUF kind".into(),
            ));
        }
        nodes.sort_by_key(|(id, pos)| (morton::point_code(*pos, design.die), id.clone()));
        let groups = nodes.len().div_ceil(fanout);
        let per = nodes.len().div_ceil(groups);
        let mut next = Vec::with_capacity(groups);
        for (gi, chunk) in nodes.chunks(per).enumerate() {
            let pts: Vec<Point> = chunk.iter().map(|(_, p)| *p).collect();
            let mut cx = Point {
                x: pts.iter().map(|p| p.x).sum::<i64>() / pts.len() as i64,
                y: pts.iter().map(|p| p.y).sum::<i64>() / pts.len() as i64,
            };
            cx.x = cx.x.clamp(design.die.x0, design.die.x1);
            cx.y = cx.y.clamp(design.die.y0, design.die.y1);
            let buf_id = format!("mtebuf_l{level}_g{gi}");
            let net_id = format!("mte_l{level}_g{gi}");
            design.nets.push(NetDecl {
                id: net_id.clone(),
                holder_attached: false,
            });
            // rebind every group member to the buffer's output net
            let cell_idx = design.cell_index();
            let rebinds: Vec<(usize, &'static str)> = chunk
                .iter()
                .map(|(id, _)| (cell_idx[id.as_str()], pins[id.as_str()]))
                .collect();
            for (ci, pin) in rebinds {
                design.cells[ci].pins.insert(pin.to_string(), net_id.clone());
            }
            let mut buf_pins = BTreeMap::new();
            buf_pins.insert("A".to_string(), design.mte_net.clone());
            buf_pins.insert("Y".to_string(), net_id);
            design.cells.push(CellInstance {
                id: buf_id.clone(),
                kind: MTEBUF_KIND.to_string(),
                variant: VthVariant::HighVth,
                pos: cx,
                pins: buf_pins,
            });
            pins.insert(buf_id.clone(), "A");
            next.push((buf_id, cx));
            inserted += 1;
        }
        nodes = next;
        level += 1;
    }
    // remaining nodes hang directly off the MTE root
    let cell_idx = design.cell_index();
    let rebinds: Vec<(usize, &'static str)> = nodes
        .iter()
        .map(|(id, _)| (cell_idx[id.as_str()], pins[id.as_str()]))
        .collect();
    let root = design.mte_net.clone();
    for (ci, pin) in rebinds {
        design.cells[ci].pins.insert(pin.to_string(), root.clone());
    }
    design.canonicalize();
    if design.flow_stage != FlowStage::Conventional {
        design.flow_stage = FlowStage::MteBuffered;
    }
    Ok(inserted)
}

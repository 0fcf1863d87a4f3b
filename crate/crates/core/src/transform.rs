//! Holder insertion, sleep-switch sizing, MT-cell clustering, and post-route
//! re-optimization of the switch structure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmtError};
use crate::interconnect::detour_factor;
use crate::model::*;
use crate::morton;

pub const HOLDER_KIND: &str = "HOLDER";
pub const SWITCH_KIND: &str = "SWITCH";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterStage {
    Initial,
    Clustered,
    Reoptimized,
}

/// A set of MT-cells sharing one sized sleep switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchCluster {
    pub id: String,
    pub members: Vec<String>,
    /// Switch location, nm.
    pub switch_pos: Point,
    /// Switch width, µm.
    pub width: f64,
    /// Star wirelength of the VGND lines, µm (routed at the reoptimized stage).
    pub vgnd_star_len: f64,
    /// Worst member VGND path resistance, Ω.
    pub vgnd_wire_r: f64,
    /// Voltage bounce at the sized width, V.
    pub v_bounce: f64,
    /// Effective simultaneous discharge current, mA.
    pub i_eff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchStructure {
    pub clusters: Vec<SwitchCluster>,
    pub stage: ClusterStage,
    next_id: usize,
}

impl SwitchStructure {
    pub fn empty(stage: ClusterStage) -> Self {
        SwitchStructure {
            clusters: Vec::new(),
            stage,
            next_id: 0,
        }
    }

    fn fresh_id(&mut self) -> String {
        let id = format!("c{}", self.next_id);
        self.next_id += 1;
        id
    }

    /// Per-cell bounce map for STA: cluster bounce for members, 0 elsewhere.
    pub fn bounce_map(&self, design: &Design) -> Vec<f64> {
        let cell_idx = design.cell_index();
        let mut map = vec![0.0; design.cells.len()];
        for cl in &self.clusters {
            for m in &cl.members {
                if let Some(&ci) = cell_idx.get(m.as_str()) {
                    map[ci] = cl.v_bounce;
                }
            }
        }
        map
    }
}

/// Minimal switch width meeting the bounce limit for a member set.
///
/// `i_peaks` in mA, `dists_um` member-to-switch Manhattan distances in µm.
/// Returns `None` when the wire IR term alone exceeds the bounce limit
/// (caller must split the cluster).
pub fn size_switch(
    i_peaks: &[f64],
    dists_um: &[f64],
    alpha: f64,
    c: &Constraints,
) -> Option<(f64, f64)> {
    assert!(!i_peaks.is_empty(), "size_switch needs members");
    let i_max_a = i_peaks.iter().cloned().fold(0.0, f64::max) * 1e-3;
    let d_max = dists_um.iter().cloned().fold(0.0, f64::max);
    let v_w = i_max_a * c.r_wire * d_max;
    if v_w >= c.v_bounce_max {
        return None;
    }
    let i_eff_a = alpha * i_peaks.iter().sum::<f64>() * 1e-3;
    let width = (c.r0_switch * i_eff_a / (c.v_bounce_max - v_w)).max(c.w_min);
    let v_bounce = i_eff_a * (c.r0_switch / width) + v_w;
    Some((width, v_bounce))
}

fn centroid(points: &[Point]) -> Point {
    let n = points.len() as i64;
    let sx: i64 = points.iter().map(|p| p.x).sum();
    let sy: i64 = points.iter().map(|p| p.y).sum();
    // round-half-up mean, stable for negative coordinates as well
    Point {
        x: (sx as f64 / n as f64).round() as i64,
        y: (sy as f64 / n as f64).round() as i64,
    }
}

/// Inserts one output holder on every net driven by an MT-cell that has at
/// least one non-MT sink (primary outputs count as non-MT).
pub fn insert_holders(design: &mut Design) -> Result<()> {
    if design.flow_stage != FlowStage::Assigned {
        return Err(SmtError::Contract(
            "insert_holders requires the assigned stage".into(),
        ));
    }
    if !design.library.kinds.contains_key(HOLDER_KIND)
        && design.cells.iter().any(|c| c.variant.is_mt())
    {
        return Err(SmtError::Characterization(
            "library has no HOLDER kind".into(),
        ));
    }
    let conn = design.connectivity();
    let mut new_cells = Vec::new();
    for (ni, net) in design.nets.iter_mut().enumerate() {
        let nc = &conn.nets[ni];
        let Some(NetDriver::Cell(ci, _)) = &nc.driver else {
            continue;
        };
        let driver = &design.cells[*ci];
        if !driver.variant.is_mt() {
            continue;
        }
        let needs = nc.is_primary_output
            || nc
                .sinks
                .iter()
                .any(|(si, _)| !design.cells[*si].variant.is_mt());
        if needs {
            let mut pins = BTreeMap::new();
            pins.insert("A".to_string(), net.id.clone());
            pins.insert(MTE_PIN.to_string(), design.mte_net.clone());
            new_cells.push(CellInstance {
                id: format!("holder_{}", net.id),
                kind: HOLDER_KIND.to_string(),
                variant: VthVariant::HighVth,
                pos: driver.pos,
                pins,
            });
            net.holder_attached = true;
        }
    }
    design.cells.extend(new_cells);
    design.canonicalize();
    design.flow_stage = FlowStage::HoldersInserted;
    Ok(())
}

/// Gives every MT-cell its VGND port and wires all of them to a single
/// switch at the members' centroid. Caps may be violated here; clustering
/// repairs that.
pub fn insert_initial_switch(design: &mut Design) -> Result<SwitchStructure> {
    if design.flow_stage != FlowStage::HoldersInserted {
        return Err(SmtError::Contract(
            "insert_initial_switch requires holders to be inserted".into(),
        ));
    }
    let mut members = Vec::new();
    let mut points = Vec::new();
    for cell in design.cells.iter_mut() {
        if cell.variant == VthVariant::MtNoVgnd {
            cell.variant = VthVariant::MtWithVgnd;
            members.push(cell.id.clone());
            points.push(cell.pos);
        }
    }
    design.flow_stage = FlowStage::SwitchesInserted;
    let mut ss = SwitchStructure::empty(ClusterStage::Initial);
    if members.is_empty() {
        materialize_switches(design, &ss)?;
        return Ok(ss);
    }
    let pos = centroid(&points);
    let id = ss.fresh_id();
    let cluster = build_cluster(design, id, members, pos, 1.0)
        .unwrap_or_else(|c| c); // initial stage keeps even an infeasible sizing
    ss.clusters.push(cluster);
    materialize_switches(design, &ss)?;
    Ok(ss)
}

/// Assembles cluster metrics for a member set with the switch at `pos`.
/// `Err` carries the cluster with `width = 0` when the wire term alone
/// breaks the bounce limit.
fn build_cluster(
    design: &Design,
    id: String,
    members: Vec<String>,
    pos: Point,
    detour: f64,
) -> std::result::Result<SwitchCluster, SwitchCluster> {
    let cell_idx = design.cell_index();
    let c = &design.constraints;
    let mut i_peaks = Vec::with_capacity(members.len());
    let mut dists = Vec::with_capacity(members.len());
    let mut star = 0.0;
    for m in &members {
        let cell = &design.cells[cell_idx[m.as_str()]];
        i_peaks.push(design.kind_of(cell).params(cell.variant).i_peak);
        let d = nm_to_um(cell.pos.manhattan(pos)) * detour;
        star += d;
        dists.push(d);
    }
    let d_max = dists.iter().cloned().fold(0.0, f64::max);
    let i_eff = c.alpha * i_peaks.iter().sum::<f64>();
    let sized = size_switch(&i_peaks, &dists, c.alpha, c);
    let (width, v_bounce) = sized.unwrap_or((0.0, f64::INFINITY));
    let cluster = SwitchCluster {
        id,
        members,
        switch_pos: pos,
        width,
        vgnd_star_len: star,
        vgnd_wire_r: c.r_wire * d_max,
        v_bounce,
        i_eff,
    };
    if sized.is_some() {
        Ok(cluster)
    } else {
        Err(cluster)
    }
}

/// Deterministic greedy clustering: MT-cells in Morton order, grow while the
/// member cap, the VGND star length cap, and switch sizing all stay feasible
/// and economical — a shared switch is kept only while its width stays at or
/// below the sum of the members' standalone widths, so sharing never costs
/// more leakage or area than giving each cell its own switch.
pub fn cluster_switches(design: &mut Design, ss: &SwitchStructure) -> Result<SwitchStructure> {
    if ss.stage != ClusterStage::Initial {
        return Err(SmtError::Contract(
            "cluster_switches expects the initial switch structure".into(),
        ));
    }
    let c = design.constraints.clone();
    let mut mt: Vec<(u64, String, Point)> = design
        .cells
        .iter()
        .filter(|cell| cell.variant == VthVariant::MtWithVgnd)
        .map(|cell| (morton::point_code(cell.pos, design.die), cell.id.clone(), cell.pos))
        .collect();
    mt.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut out = SwitchStructure::empty(ClusterStage::Clustered);
    let mut members: Vec<String> = Vec::new();
    let mut points: Vec<Point> = Vec::new();

    let feasible = |design: &Design, members: &[String], points: &[Point]| -> Option<SwitchCluster> {
        if members.len() > c.n_cells_max {
            return None;
        }
        let pos = centroid(points);
        let cl = build_cluster(design, String::new(), members.to_vec(), pos, 1.0).ok()?;
        if cl.vgnd_star_len > c.l_vgnd_max {
            return None;
        }
        if members.len() > 1 {
            let cell_idx = design.cell_index();
            let standalone: f64 = members
                .iter()
                .map(|m| {
                    let cell = &design.cells[cell_idx[m.as_str()]];
                    // individual switches carry the full peak (no simultaneity
                    // discount applies to a lone cell)
                    let i = design.kind_of(cell).params(cell.variant).i_peak * 1e-3;
                    (c.r0_switch * i / c.v_bounce_max).max(c.w_min)
                })
                .sum();
            if cl.width > standalone {
                return None;
            }
        }
        Some(cl)
    };

    let mut pending: Option<SwitchCluster> = None;
    for (_, id, pos) in mt {
        members.push(id.clone());
        points.push(pos);
        if let Some(cl) = feasible(design, &members, &points) {
            pending = Some(cl);
            continue;
        }
        // close the running cluster and open a new one with this cell
        if members.len() == 1 {
            return Err(SmtError::InfeasibleClustering(format!(
                "cell `{id}` cannot meet the bounce limit even in its own cluster"
            )));
        }
        members.pop();
        points.pop();
        let mut done = pending.take().expect("running cluster was feasible");
        done.id = out.fresh_id();
        out.clusters.push(done);
        members = vec![id.clone()];
        points = vec![pos];
        match feasible(design, &members, &points) {
            Some(cl) => pending = Some(cl),
            None => {
                return Err(SmtError::InfeasibleClustering(format!(
                    "cell `{id}` cannot meet the bounce limit even in its own cluster"
                )))
            }
        }
    }
    if let Some(mut cl) = pending.take() {
        cl.id = out.fresh_id();
        out.clusters.push(cl);
    }
    materialize_switches(design, &out)?;
    Ok(out)
}

/// Post-route resize: every cluster's VGND wiring is scaled by its detour
/// factor; clusters whose wire IR term breaks the limit shed their farthest
/// member until sizing succeeds.
pub fn reoptimize_switches(
    design: &mut Design,
    ss: &SwitchStructure,
    seed: u64,
) -> Result<SwitchStructure> {
    if ss.stage != ClusterStage::Clustered {
        return Err(SmtError::Contract(
            "reoptimize_switches expects a clustered structure".into(),
        ));
    }
    let c = design.constraints.clone();
    let cell_idx = design.cell_index();
    let mut out = SwitchStructure::empty(ClusterStage::Reoptimized);
    out.next_id = ss.next_id;

    let mut work: Vec<Vec<String>> = ss.clusters.iter().map(|cl| cl.members.clone()).collect();
    let mut ids: Vec<String> = ss.clusters.iter().map(|cl| cl.id.clone()).collect();
    while let Some(members) = work.pop() {
        let id = ids.pop().expect("id per work item");
        let detour = detour_factor(seed, &format!("vgnd:{id}"), c.detour_max);
        let points: Vec<Point> = members
            .iter()
            .map(|m| design.cells[cell_idx[m.as_str()]].pos)
            .collect();
        let pos = centroid(&points);
        let built = build_cluster(design, id.clone(), members.clone(), pos, detour);
        let ok = match &built {
            Ok(cl) => cl.vgnd_star_len <= c.l_vgnd_max,
            Err(_) => false,
        };
        if ok {
            out.clusters.push(built.unwrap());
            continue;
        }
        if members.len() == 1 {
            return Err(SmtError::InfeasibleClustering(format!(
                "cluster `{id}` is infeasible post-route even as a singleton"
            )));
        }
        // evict the member farthest from the centroid into a new cluster
        let (far_idx, _) = members
            .iter()
            .enumerate()
            .map(|(i, m)| (i, design.cells[cell_idx[m.as_str()]].pos.manhattan(pos)))
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| members[b.0].cmp(&members[a.0])))
            .expect("non-empty cluster");
        let mut rest = members;
        let evicted = rest.remove(far_idx);
        let new_id = out.fresh_id();
        work.push(rest);
        ids.push(id);
        work.push(vec![evicted]);
        ids.push(new_id);
    }
    out.clusters.sort_by(|a, b| a.id.cmp(&b.id));
    materialize_switches(design, &out)?;
    Ok(out)
}

/// Rebuilds the SWITCH instances in the design to mirror the structure: one
/// per cluster, at the cluster's switch location, enabled by the MTE net.
pub fn materialize_switches(design: &mut Design, ss: &SwitchStructure) -> Result<()> {
    if !ss.clusters.is_empty() && !design.library.kinds.contains_key(SWITCH_KIND) {
        return Err(SmtError::Characterization(
            "library has no SWITCH kind".into(),
        ));
    }
    design.cells.retain(|c| c.kind != SWITCH_KIND);
    for cl in &ss.clusters {
        let mut pins = BTreeMap::new();
        pins.insert(MTE_PIN.to_string(), design.mte_net.clone());
        let pos = Point {
            x: cl.switch_pos.x.clamp(design.die.x0, design.die.x1),
            y: cl.switch_pos.y.clamp(design.die.y0, design.die.y1),
        };
        design.cells.push(CellInstance {
            id: format!("switch_{}", cl.id),
            kind: SWITCH_KIND.to_string(),
            variant: VthVariant::HighVth,
            pos,
            pins,
        });
    }
    design.canonicalize();
    Ok(())
}

/// Checks the three construction constraints plus width minimality on every
/// cluster; returns violations as strings (empty = all good).
pub fn check_clusters(design: &Design, ss: &SwitchStructure) -> Vec<String> {
    let c = &design.constraints;
    let mut bad = Vec::new();
    let tol = 1e-9;
    for cl in &ss.clusters {
        if cl.members.is_empty() || cl.members.len() > c.n_cells_max {
            bad.push(format!("{}: member count {}", cl.id, cl.members.len()));
        }
        if cl.vgnd_star_len > c.l_vgnd_max * (1.0 + tol) {
            bad.push(format!("{}: star length {}", cl.id, cl.vgnd_star_len));
        }
        if cl.v_bounce > c.v_bounce_max * (1.0 + tol) {
            bad.push(format!("{}: bounce {}", cl.id, cl.v_bounce));
        }
        if cl.width < c.w_min * (1.0 - tol) {
            bad.push(format!("{}: width below minimum", cl.id));
        }
        // minimality: shaving the width must break the bounce bound unless clamped
        if cl.width > c.w_min * (1.0 + tol) {
            let shaved = cl.width * (1.0 - 1e-9);
            let i_eff_a = cl.i_eff * 1e-3;
            let v_w = cl.v_bounce - i_eff_a * (c.r0_switch / cl.width);
            let v = i_eff_a * (c.r0_switch / shaved) + v_w;
            if v <= c.v_bounce_max {
                bad.push(format!("{}: width not minimal", cl.id));
            }
        }
    }
    // partition: disjoint and covering all MT cells
    let mut seen = std::collections::BTreeSet::new();
    for cl in &ss.clusters {
        for m in &cl.members {
            if !seen.insert(m.clone()) {
                bad.push(format!("{}: member `{m}` in two clusters", cl.id));
            }
        }
    }
    for cell in &design.cells {
        if cell.variant == VthVariant::MtWithVgnd && !seen.contains(&cell.id) {
            bad.push(format!("unclustered MT cell `{}`", cell.id));
        }
    }
    bad
}

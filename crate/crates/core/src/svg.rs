//! SVG rendering of the placed design: cells colored by variant, cluster
//! hulls, switch locations, and the MTE buffer tree.

use crate::model::*;
use crate::transform::SwitchStructure;

fn variant_color(v: VthVariant) -> &'static str {
    match v {
        VthVariant::HighVth => "#4477aa",
        VthVariant::LowVth => "#ee6677",
        VthVariant::MtNoVgnd | VthVariant::MtWithVgnd => "#228833",
        VthVariant::MtBuiltIn => "#ccbb44",
    }
}

/// Monotone-chain convex hull, points in nm.
fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.x.cmp(&b.x).then(a.y.cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| -> i128 {
        (a.x as i128 - o.x as i128) * (b.y as i128 - o.y as i128)
            - (a.y as i128 - o.y as i128) * (b.x as i128 - o.x as i128)
    };
    let mut hull: Vec<Point> = Vec::new();
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

pub fn render_svg(design: &Design, ss: &SwitchStructure) -> String {
    let die = design.die;
    let scale = 1.0 / 1000.0; // nm -> drawing units (1 unit = 1 µm)
    let w = (die.x1 - die.x0) as f64 * scale;
    let h = (die.y1 - die.y0) as f64 * scale;
    let tx = |x: i64| (x - die.x0) as f64 * scale;
    // flip y so the origin sits bottom-left
    let ty = |y: i64| h - (y - die.y0) as f64 * scale;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-2 -2 {:.1} {:.1}\">\n",
        w + 4.0,
        h + 4.0
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"0.3\"/>\n"
    ));

    let cell_idx = design.cell_index();
    for cl in &ss.clusters {
        let pts: Vec<Point> = cl
            .members
            .iter()
            .map(|m| design.cells[cell_idx[m.as_str()]].pos)
            .collect();
        let hull = convex_hull(pts);
        if hull.len() >= 2 {
            let path: Vec<String> = hull
                .iter()
                .map(|p| format!("{:.1},{:.1}", tx(p.x), ty(p.y)))
                .collect();
            s.push_str(&format!(
                "<polygon points=\"{}\" fill=\"#22883322\" stroke=\"#228833\" stroke-width=\"0.2\"/>\n",
                path.join(" ")
            ));
        }
        for p in cl
            .members
            .iter()
            .map(|m| design.cells[cell_idx[m.as_str()]].pos)
        {
            s.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#22883366\" stroke-width=\"0.15\"/>\n",
                tx(p.x), ty(p.y), tx(cl.switch_pos.x), ty(cl.switch_pos.y)
            ));
        }
    }

    // MTE tree edges: each control sink to its driver buffer.
    let net_idx = design.net_index();
    let conn = design.connectivity();
    for cell in &design.cells {
        let Some(net) = cell.pins.get(MTE_PIN) else {
            continue;
        };
        if let Some(NetDriver::Cell(ci, _)) = &conn.nets[net_idx[net.as_str()]].driver {
            let from = design.cells[*ci].pos;
            s.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#bbbbbb\" stroke-width=\"0.1\"/>\n",
                tx(from.x), ty(from.y), tx(cell.pos.x), ty(cell.pos.y)
            ));
        }
    }

    for cell in &design.cells {
        let kind = design.kind_of(cell);
        match kind.function {
            LogicFunction::Switch => {
                s.push_str(&format!(
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"2\" height=\"2\" fill=\"#000000\"/>\n",
                    tx(cell.pos.x) - 1.0,
                    ty(cell.pos.y) - 1.0
                ));
            }
            LogicFunction::Mtebuf => {
                s.push_str(&format!(
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"1.6\" height=\"1.6\" fill=\"#aa3377\"/>\n",
                    tx(cell.pos.x) - 0.8,
                    ty(cell.pos.y) - 0.8
                ));
            }
            LogicFunction::Holder => {
                s.push_str(&format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"0.6\" fill=\"#66ccee\"/>\n",
                    tx(cell.pos.x),
                    ty(cell.pos.y)
                ));
            }
            _ => {
                s.push_str(&format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"0.9\" fill=\"{}\"/>\n",
                    tx(cell.pos.x),
                    ty(cell.pos.y),
                    variant_color(cell.variant)
                ));
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

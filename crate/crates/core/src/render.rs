//! SVG rendering of replay logs: one frame per sampled cycle, buildings
//! colored by burn stage, roads dashed while blocked, brigades as circles,
//! active missions as lines.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::bus::Payload;
use crate::error::{Error, Result};
use crate::replay::{CycleRecord, LogMeta};
use crate::world::{BrigadeId, BuildingId, Position};

const MARGIN_PX: f64 = 20.0;

fn stage_color(stage: u8) -> &'static str {
    match stage {
        0 => "white",
        1 => "yellow",
        2 => "orange",
        3 => "red",
        4 => "blue",
        _ => "black",
    }
}

/// Render every `every_n`-th cycle of a log to `out_dir/frame_CCCCCC.svg`.
/// Returns the number of frames written.
pub fn render_records(
    meta: &LogMeta,
    records: &[CycleRecord],
    out_dir: &Path,
    every_n: u32,
) -> Result<usize> {
    if every_n == 0 {
        return Err(Error::InvalidArgument("every_n must be positive".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let scenario = &meta.scenario;
    let map = scenario.map();

    let min_x = map.nodes.iter().map(|n| n.pos.x).chain(map.buildings.iter().map(|b| b.pos.x)).fold(f64::INFINITY, f64::min);
    let min_y = map.nodes.iter().map(|n| n.pos.y).chain(map.buildings.iter().map(|b| b.pos.y)).fold(f64::INFINITY, f64::min);
    let max_x = map.nodes.iter().map(|n| n.pos.x).chain(map.buildings.iter().map(|b| b.pos.x)).fold(f64::NEG_INFINITY, f64::max);
    let max_y = map.nodes.iter().map(|n| n.pos.y).chain(map.buildings.iter().map(|b| b.pos.y)).fold(f64::NEG_INFINITY, f64::max);
    let width = (max_x - min_x).max(1.0);
    let height = (max_y - min_y).max(1.0);
    let px = |x: f64| x - min_x + MARGIN_PX;
    // SVG y grows downward; flip so north stays up.
    let py = |y: f64| max_y - y + MARGIN_PX;

    let mut stages = vec![0u8; map.buildings.len()];
    for &b in &scenario.ignitions {
        stages[b.index()] = 1;
    }
    // Mission lines come from advice messages seen so far.
    let mut missions: BTreeMap<BrigadeId, (BuildingId, u32)> = BTreeMap::new();

    let mut frames = 0usize;
    for rec in records {
        // Apply this cycle's events first: the frame shows the state after
        // the cycle ran, matching the recorded score.
        for &b in &rec.ignitions {
            stages[b.index()] = 1;
        }
        for c in &rec.stage_changes {
            stages[c.building.index()] = c.to;
        }
        for m in &rec.messages {
            if let Payload::Advice { brigade, target, deadline, .. } = &m.payload {
                missions.insert(*brigade, (*target, *deadline));
            }
        }
        missions.retain(|_, (_, deadline)| rec.cycle <= *deadline);

        if rec.cycle % every_n != 0 {
            continue;
        }

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
            width + 2.0 * MARGIN_PX,
            height + 2.0 * MARGIN_PX,
            width + 2.0 * MARGIN_PX,
            height + 2.0 * MARGIN_PX
        );
        let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#f4f4f4"/>"##);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="14" font-size="12" font-family="monospace">cycle {} score {:.4}</text>"#,
            MARGIN_PX, rec.cycle, rec.score
        );

        // Roads: blocked ones are those initially blocked and not yet
        // opened by the schedule.
        for (i, road) in map.roads.iter().enumerate() {
            let opened = scenario
                .road_open_schedule
                .iter()
                .any(|o| o.road.index() == i && o.cycle <= rec.cycle);
            let blocked = road.initially_blocked && !opened;
            let a = map.nodes[road.a.index()].pos;
            let b = map.nodes[road.b.index()].pos;
            let dash = if blocked { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="gray" stroke-width="1.5"{dash}/>"#,
                px(a.x),
                py(a.y),
                px(b.x),
                py(b.y)
            );
        }

        for b in &map.buildings {
            let side = b.area_m2.sqrt().max(4.0);
            let _ = writeln!(
                svg,
                r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}" stroke="#555" stroke-width="0.8"{}/>"##,
                px(b.pos.x) - side / 2.0,
                py(b.pos.y) - side / 2.0,
                side,
                side,
                stage_color(stages[b.id.index()]),
                if b.is_refuge { r#" stroke-dasharray="2 1""# } else { "" }
            );
        }

        // Mission lines, then brigades on top.
        let brigade_pos = |snapshot: &crate::replay::BrigadeSnapshot| match snapshot.pos {
            Position::Node(n) => map.nodes[n.index()].pos,
            Position::Building(b) => map.buildings[b.index()].pos,
        };
        for snapshot in &rec.brigades {
            if let Some(&(target, _)) = missions.get(&snapshot.id) {
                let from = brigade_pos(snapshot);
                let to = map.buildings[target.index()].pos;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="purple" stroke-width="0.8" opacity="0.6"/>"#,
                    px(from.x),
                    py(from.y),
                    px(to.x),
                    py(to.y)
                );
            }
        }
        for snapshot in &rec.brigades {
            let p = brigade_pos(snapshot);
            let fill = if snapshot.incapacitated { "dimgray" } else { "limegreen" };
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{fill}" stroke="black" stroke-width="0.8"/>"#,
                px(p.x),
                py(p.y)
            );
        }

        let _ = writeln!(svg, "</svg>");
        let path = out_dir.join(format!("frame_{:06}.svg", rec.cycle));
        std::fs::write(path, svg)?;
        frames += 1;
    }
    Ok(frames)
}

/// Render a log file (see [`render_records`]).
pub fn render_log(log_path: &Path, out_dir: &Path, every_n: u32) -> Result<usize> {
    let (meta, records) = crate::replay::read_log(log_path)?;
    render_records(&meta, &records, out_dir, every_n)
}

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use dtg_core::world::GridWorld;

const W: f64 = 480.0;
const H: f64 = 300.0;
const PAD: f64 = 40.0;

pub fn histogram(title: &str, values: &[f64], bins: usize, range: (f64, f64)) -> String {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let f = ((v - range.0) / (range.1 - range.0) * bins as f64).floor();
        counts[(f.max(0.0) as usize).min(bins - 1)] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bw = (W - 2.0 * PAD) / bins as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{} (n = {})</text>"#,
        W / 2.0,
        title,
        values.len()
    );
    for (i, &c) in counts.iter().enumerate() {
        let h = (H - 2.0 * PAD) * c as f64 / peak;
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a78b5"/>"##,
            PAD + i as f64 * bw,
            H - PAD - h,
            (bw - 1.0).max(0.5),
            h
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
        y = H - PAD,
        x2 = W - PAD
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
            PAD + f * (W - 2.0 * PAD),
            H - PAD + 15.0,
            range.0 + f * (range.1 - range.0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
        PAD - 4.0,
        PAD + 4.0,
        peak
    );
    s.push_str("</svg>\n");
    s
}

fn read_xy(path: &Path, cols: (usize, usize)) -> Result<Vec<(String, [f64; 2])>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let x = f.get(cols.0).and_then(|v| v.parse().ok());
        let y = f.get(cols.1).and_then(|v| v.parse().ok());
        match (x, y) {
            (Some(x), Some(y)) => out.push((f[0].to_string(), [x, y])),
            _ => anyhow::bail!(dtg_core::Error::Format {
                kind: "trace",
                detail: format!("{}: bad row {line:?}", path.display()),
            }),
        }
    }
    Ok(out)
}

/// Top-down map with the driven path (blue), the plans (grey) and
/// interventions (red dots).
pub fn trace_svg(world: &GridWorld, poses: &[[f64; 2]], interventions: &[[f64; 2]], plans: &[Vec<[f64; 2]>]) -> String {
    let [wm, hm] = world.size_m();
    let scale = 800.0 / wm.max(hm);
    let (pw, ph) = (wm * scale, hm * scale);
    let px = |p: [f64; 2]| (p[0] * scale, ph - p[1] * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{pw:.0}" height="{ph:.0}" viewBox="0 0 {pw:.2} {ph:.2}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let res = world.resolution();
    let _ = write!(s, r##"<g fill="#333">"##);
    for row in 0..world.height() {
        let mut col = 0;
        while col < world.width() {
            if world.traversable()[row * world.width() + col] {
                col += 1;
                continue;
            }
            let start = col;
            while col < world.width() && !world.traversable()[row * world.width() + col] {
                col += 1;
            }
            let (x, y) = px([start as f64 * res, (row + 1) as f64 * res]);
            let _ = write!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}"/>"#,
                (col - start) as f64 * res * scale,
                res * scale
            );
        }
    }
    s.push_str("</g>\n");
    let poly = |pts: &[[f64; 2]]| {
        pts.iter()
            .map(|&p| {
                let (x, y) = px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    for plan in plans {
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#999" stroke-width="0.6" opacity="0.5"/>"##,
            poly(plan)
        );
    }
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f5fbf" stroke-width="1.6"/>"##,
        poly(poses)
    );
    for &p in interventions {
        let (x, y) = px(p);
        let _ = writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="#d22"/>"##);
    }
    s.push_str("</svg>\n");
    s
}

/// Render every `episode_*_poses.csv` (with its plans file) under `dir`.
pub fn render_traces(world: &GridWorld, dir: &Path, out: &Path) -> Result<usize> {
    let mut pose_files: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with("_poses.csv"))
        .collect();
    pose_files.sort();
    for pf in &pose_files {
        let name = pf.file_name().unwrap().to_string_lossy().replace("_poses.csv", "");
        let text = std::fs::read_to_string(pf)?;
        let interventions: Vec<[f64; 2]> = text
            .lines()
            .skip(1)
            .filter(|l| l.ends_with(",intervention"))
            .filter_map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                Some([f.get(1)?.parse().ok()?, f.get(2)?.parse().ok()?])
            })
            .collect();
        let poses: Vec<[f64; 2]> = read_xy(pf, (1, 2))?.into_iter().map(|(_, p)| p).collect();
        let mut plans: Vec<Vec<[f64; 2]>> = Vec::new();
        let plan_file = dir.join(format!("{name}_plans.csv"));
        if plan_file.exists() {
            let mut last = String::new();
            for (step, p) in read_xy(&plan_file, (2, 3))? {
                if step != last || plans.is_empty() {
                    plans.push(Vec::new());
                    last = step;
                }
                plans.last_mut().unwrap().push(p);
            }
        }
        std::fs::write(
            out.join(format!("{name}.svg")),
            trace_svg(world, &poses, &interventions, &plans),
        )?;
    }
    Ok(pose_files.len())
}

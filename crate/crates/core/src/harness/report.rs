//! CSV and SVG output. Same inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{EpochRecord, Metrics, TrainRun};
use crate::error::Result;

pub const EPOCHS_HEADER: &str = "epoch,train_loss,val_top1,val_top3,val_top5,link_acc";
pub const PERBEAM_HEADER: &str = "beam,count,mean_pred,stderr";
pub const HEATMAP_HEADER: &str = "x,y,gt_beam,pred_beam,link";
pub const REGIONS_HEADER: &str = "region,count,beam_top1,link_acc";

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

/// Writes the CSV tables and SVG figures into `out_dir` and returns their
/// paths. Missing inputs produce header-only tables.
pub fn emit_report(run: Option<&TrainRun>, metrics: Option<&Metrics>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let empty = Metrics::default();
    let m = metrics.unwrap_or(&empty);
    let rows: Vec<&EpochRecord> = run.map(|r| r.epochs.iter().collect()).unwrap_or_default();

    let mut files = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = out_dir.join(name);
        fs::write(&p, body)?;
        files.push(p);
        Ok(())
    };

    let mut s = format!("{EPOCHS_HEADER}\n");
    for r in &rows {
        writeln!(s, "{},{},{},{},{},{}", r.epoch, r.train_loss, r.val_top1, r.val_top3, r.val_top5, r.link_acc).unwrap();
    }
    put("epochs.csv", s)?;

    let mut s = format!("{PERBEAM_HEADER}\n");
    for b in &m.per_beam {
        writeln!(s, "{},{},{},{}", b.beam, b.count, b.mean_pred, b.stderr).unwrap();
    }
    put("perbeam.csv", s)?;

    let mut s = format!("{HEATMAP_HEADER}\n");
    for c in &m.heatmap {
        writeln!(s, "{},{},{},{},{}", c.x, c.y, c.gt_beam, c.pred_beam, c.link).unwrap();
    }
    put("heatmap.csv", s)?;

    let mut s = format!("{REGIONS_HEADER}\n");
    for r in &m.regions {
        writeln!(s, "{},{},{},{}", r.region, r.count, r.beam_top1, r.link_accuracy).unwrap();
    }
    put("regions.csv", s)?;

    put("epochs.svg", epochs_svg(&rows))?;
    put("perbeam.svg", perbeam_svg(m))?;
    put("heatmap.svg", heatmap_svg(m))?;
    Ok(files)
}

fn open(s: &mut String, w: f64, h: f64, title: &str) {
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0).unwrap();
}

fn axes(s: &mut String, xlabel: &str, ylabel: &str, xmax: f64, ymax: f64) {
    let (x0, y0, x1, y1) = (PAD, H - PAD, W - PAD, PAD);
    writeln!(s, r#"<path d="M{x0} {y1} V{y0} H{x1}" stroke="black" fill="none"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, (x0 + x1) / 2.0, H - 12.0).unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();
    writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="end">{}</text>"#, y0 + 16.0, fmt_tick(xmax)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 4.0, y1 + 4.0, fmt_tick(ymax)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">0</text>"#, x0 - 4.0, y0 + 4.0).unwrap();
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn sx(x: f64, xmax: f64) -> f64 {
    PAD + (W - 2.0 * PAD) * if xmax > 0.0 { x / xmax } else { 0.0 }
}

fn sy(y: f64, ymax: f64) -> f64 {
    H - PAD - (H - 2.0 * PAD) * if ymax > 0.0 { y / ymax } else { 0.0 }
}

fn epochs_svg(rows: &[&EpochRecord]) -> String {
    let mut s = String::new();
    open(&mut s, W, H, "Validation accuracy per epoch");
    let xmax = rows.last().map_or(1.0, |r| r.epoch.max(1) as f64);
    axes(&mut s, "epoch", "accuracy", xmax, 1.0);
    let series: [(&str, &str, fn(&EpochRecord) -> f64); 4] = [
        ("top-1", "#1f77b4", |r| r.val_top1),
        ("top-3", "#ff7f0e", |r| r.val_top3),
        ("top-5", "#2ca02c", |r| r.val_top5),
        ("link", "#d62728", |r| r.link_acc),
    ];
    for (i, (name, color, f)) in series.iter().enumerate() {
        if !rows.is_empty() {
            let pts: Vec<String> = rows
                .iter()
                .map(|r| format!("{:.2},{:.2}", sx(r.epoch as f64, xmax), sy(f(r), 1.0)))
                .collect();
            writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none"/>"#, pts.join(" ")).unwrap();
        }
        let ly = PAD + 16.0 * i as f64;
        writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}"/>"#, W - PAD - 70.0, W - PAD - 50.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, W - PAD - 45.0, ly + 4.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn perbeam_svg(m: &Metrics) -> String {
    let mut s = String::new();
    open(&mut s, W, H, "Predicted vs groundtruth beam");
    let max = m
        .per_beam
        .iter()
        .map(|b| (b.beam as f64).max(b.mean_pred + b.stderr))
        .fold(1.0f64, f64::max)
        .ceil();
    axes(&mut s, "groundtruth beam", "mean predicted beam", max, max);
    writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 3"/>"##,
        sx(0.0, max),
        sy(0.0, max),
        sx(max, max),
        sy(max, max)
    )
    .unwrap();
    for b in &m.per_beam {
        let x = sx(b.beam as f64, max);
        if b.stderr > 0.0 {
            writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                sy(b.mean_pred - b.stderr, max),
                sy(b.mean_pred + b.stderr, max)
            )
            .unwrap();
        }
        writeln!(s, r##"<circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="#1f77b4"/>"##, sy(b.mean_pred, max)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn beam_color(beam: usize, max: usize) -> String {
    let hue = 300.0 * beam as f64 / max.max(1) as f64;
    format!("hsl({hue:.1},70%,50%)")
}

fn heatmap_svg(m: &Metrics) -> String {
    let mut s = String::new();
    let panel = 300.0;
    let (w, h) = (2.0 * panel + 3.0 * 30.0, panel + 80.0);
    open(&mut s, w, h, "Groundtruth (left) and predicted (right) beam per x-y cell");
    let cells = &m.heatmap;
    if cells.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for c in cells {
        xmin = xmin.min(c.x);
        xmax = xmax.max(c.x);
        ymin = ymin.min(c.y);
        ymax = ymax.max(c.y);
    }
    let mut xs: Vec<f64> = cells.iter().map(|c| c.x).collect();
    let mut ys: Vec<f64> = cells.iter().map(|c| c.y).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let dx = xs.windows(2).map(|p| p[1] - p[0]).fold(f64::MAX, f64::min);
    let dy = ys.windows(2).map(|p| p[1] - p[0]).fold(f64::MAX, f64::min);
    let dx = if dx.is_finite() && dx < f64::MAX { dx } else { 1.0 };
    let dy = if dy.is_finite() && dy < f64::MAX { dy } else { 1.0 };
    let span = ((xmax - xmin) / dx + 1.0).max((ymax - ymin) / dy + 1.0);
    let cell = panel / span;
    let top_beam = cells.iter().map(|c| c.gt_beam.max(c.pred_beam)).max().unwrap_or(1);
    for (p, pick) in [(0.0, true), (1.0, false)] {
        let ox = 30.0 + p * (panel + 30.0);
        let oy = 40.0;
        writeln!(s, r#"<rect x="{ox}" y="{oy}" width="{panel}" height="{panel}" fill="none" stroke="black"/>"#).unwrap();
        for c in cells {
            let beam = if pick { c.gt_beam } else { c.pred_beam };
            let x = ox + (c.x - xmin) / dx * cell;
            let y = oy + panel - ((c.y - ymin) / dy + 1.0) * cell;
            let stroke = if c.link == 0 { r#" stroke="black" stroke-width="0.6""# } else { "" };
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}"{stroke}/>"#,
                beam_color(beam, top_beam)
            )
            .unwrap();
        }
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">outlined cells are served through the RIS</text>"#,
        w / 2.0,
        h - 14.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

//! Self-contained SVG figures: inter-agent distance over time and position
//! snapshots. Output depends only on the record, so it is byte-stable.

use std::fmt::Write;

use ftmp_core::sim::TrajectoryRecord;
use ftmp_core::WorldConfig;

/// Most points drawn per polyline.
const MAX_POINTS: usize = 1500;
/// Pair curves are drawn individually only up to this many kinetic pairs.
const MAX_PAIR_CURVES: usize = 10;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Round-number tick positions covering `[lo, hi]`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Keeps the smallest value of each bucket so that dips survive decimation.
fn bucket_min(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    let bucket = values.len().div_ceil(MAX_POINTS).max(1);
    times
        .chunks(bucket)
        .zip(values.chunks(bucket))
        .map(|(ts, vs)| {
            let (i, v) = vs.iter().enumerate().fold(
                (0, f64::INFINITY),
                |best, (i, &v)| if v < best.1 { (i, v) } else { best },
            );
            (ts[i], v)
        })
        .collect()
}

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn polyline(&self, out: &mut String, points: &[(f64, f64)], stroke: &str, width: f64, extra: &str) {
        let mut pts = String::new();
        for &(x, y) in points {
            if y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", self.px(x), self.py(y));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="{width}" {extra} points="{}"/>"#,
            pts.trim_end()
        );
    }
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Smallest inter-agent distance over time, the individual kinetic pairs when
/// there are few of them, and the clearance line.
pub fn distance_plot(rec: &TrajectoryRecord, clearance: f64) -> String {
    let times = &rec.times;
    let min_series = bucket_min(times, &rec.pairwise_min_distance);

    let n = rec.frames[0].len();
    let mut pairs = Vec::new();
    if n * n.saturating_sub(1) / 2 <= MAX_PAIR_CURVES {
        for i in 0..n {
            for j in i + 1..n {
                let d: Vec<f64> = rec
                    .frames
                    .iter()
                    .map(|f| f[i].position.distance(&f[j].position))
                    .collect();
                pairs.push(((rec.frames[0][i].id, rec.frames[0][j].id), bucket_min(times, &d)));
            }
        }
    }

    let t_end = times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let y_max = pairs
        .iter()
        .flat_map(|(_, s)| s.iter().map(|p| p.1))
        .chain(min_series.iter().map(|p| p.1))
        .filter(|v| v.is_finite())
        .fold(clearance, f64::max)
        * 1.05;
    let frame = Frame {
        left: 70.0,
        top: 30.0,
        width: 680.0,
        height: 360.0,
        x: (0.0, t_end),
        y: (0.0, y_max),
    };

    let mut out = String::new();
    header(&mut out, 800.0, 450.0);
    axes(&mut out, &frame, "time (s)", "distance (m)");
    for (k, ((a, b), series)) in pairs.iter().enumerate() {
        frame.polyline(&mut out, series, color(k), 1.0, r#"opacity="0.7""#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{}">{a}-{b}</text>"#,
            frame.left + frame.width - 60.0,
            frame.top + 16.0 * (k as f64 + 2.0),
            color(k)
        );
    }
    frame.polyline(&mut out, &min_series, "black", 2.0, "");
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">minimum</text>"#,
        frame.left + frame.width - 60.0,
        frame.top + 16.0
    );
    let yc = frame.py(clearance);
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{yc:.2}" x2="{:.2}" y2="{yc:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
        frame.left,
        frame.left + frame.width
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="{:.2}" fill="#d62728">d_c = {}</text>"##,
        frame.left + 6.0,
        yc - 4.0,
        fmt_tick(clearance)
    );
    out.push_str("</svg>\n");
    out
}

fn axes(out: &mut String, frame: &Frame, xlabel: &str, ylabel: &str) {
    let (l, t, w, h) = (frame.left, frame.top, frame.width, frame.height);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    );
    for x in nice_ticks(frame.x.0, frame.x.1, 8) {
        let px = frame.px(x);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            t + h,
            t + h + 5.0,
            t + h + 18.0,
            fmt_tick(x)
        );
    }
    for y in nice_ticks(frame.y.0, frame.y.1, 6) {
        let py = frame.py(y);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{l:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            py + 4.0,
            fmt_tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel}</text>"#,
        l + w / 2.0,
        t + h + 36.0
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">{ylabel}</text>"#,
        l - 50.0,
        t + h / 2.0
    );
}

/// One panel per snapshot fraction: arena, static ring, trails so far,
/// agent disks and goals.
pub fn snapshot_plot(rec: &TrajectoryRecord, world: &WorldConfig, fractions: &[f64]) -> String {
    let panel = 360.0;
    let gap = 20.0;
    let width = fractions.len() as f64 * (panel + gap) + gap;
    let height = panel + 60.0;
    let extent = world.arena_radius + 4.0;
    let last = rec.frames.len() - 1;

    let mut out = String::new();
    header(&mut out, width, height);
    for (p, &fraction) in fractions.iter().enumerate() {
        let k = (fraction * last as f64).round() as usize;
        let frame = Frame {
            left: gap + p as f64 * (panel + gap),
            top: 40.0,
            width: panel,
            height: panel,
            x: (-extent, extent),
            y: (-extent, extent),
        };
        let scale = panel / (2.0 * extent);
        let _ = writeln!(
            out,
            r#"<clipPath id="panel{p}"><rect x="{:.2}" y="{:.2}" width="{panel}" height="{panel}"/></clipPath>"#,
            frame.left, frame.top
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="28" text-anchor="middle">t = {}</text>"#,
            frame.left + panel / 2.0,
            fmt_tick(rec.times[k])
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{panel}" height="{panel}" fill="none" stroke="black"/>"#,
            frame.left, frame.top
        );
        let _ = writeln!(out, r#"<g clip-path="url(#panel{p})">"#);
        for s in &rec.statics {
            let _ = writeln!(
                out,
                r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#999"/>"##,
                frame.px(s.position[0]),
                frame.py(s.position[1]),
                (world.agent_radius * scale).max(0.6)
            );
        }
        for (i, a) in rec.frames[k].iter().enumerate() {
            let step = (k + 1).div_ceil(MAX_POINTS / 4).max(1);
            let mut trail: Vec<(f64, f64)> = (0..=k)
                .step_by(step)
                .map(|m| (rec.frames[m][i].position[0], rec.frames[m][i].position[1]))
                .collect();
            trail.push((a.position[0], a.position[1]));
            frame.polyline(&mut out, &trail, color(i), 1.0, "");
            let (gx, gy) = (frame.px(a.goal[0]), frame.py(a.goal[1]));
            let _ = writeln!(
                out,
                r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{}" stroke-width="1.5"/>"#,
                gx - 4.0,
                gy - 4.0,
                gx + 4.0,
                gy + 4.0,
                gx - 4.0,
                gy + 4.0,
                gx + 4.0,
                gy - 4.0,
                color(i)
            );
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{}"/>"#,
                frame.px(a.position[0]),
                frame.py(a.position[1]),
                (world.agent_radius * scale).max(2.0),
                color(i)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_in_range() {
        assert_eq!(nice_ticks(0.0, 50.0, 5), vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        let t = nice_ticks(0.0, 0.37, 4);
        assert_eq!(t.first(), Some(&0.0));
        assert!(t.iter().all(|v| (0.0..=0.37).contains(v)));
        assert_eq!(nice_ticks(3.0, 3.0, 5), vec![3.0]);
        assert_eq!(fmt_tick(0.1 + 0.2), "0.3");
        assert_eq!(fmt_tick(-0.0), "0");
    }

    #[test]
    fn bucket_min_keeps_dips() {
        let times: Vec<f64> = (0..10_000).map(|k| k as f64).collect();
        let mut values = vec![5.0; 10_000];
        values[4321] = 1.0;
        let series = bucket_min(&times, &values);
        assert!(series.len() <= MAX_POINTS);
        assert!(series.contains(&(4321.0, 1.0)));
    }
}

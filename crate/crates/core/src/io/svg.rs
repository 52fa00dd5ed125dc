//! SVG figures drawn from CSV tables only.
//!
//! Triangle-code glyphs: the corners of a small triangle stand for markets
//! 1 (bottom left), 2 (top) and 3 (bottom right). A filled circle marks a
//! large peak, an empty circle a small one, a star in the middle an
//! indifferent peak and a `?` an undetermined code. Colour identifies the
//! class.

use std::fmt::Write;

use crate::error::Result;

use super::table::Table;

const W: f64 = 640.0;
const H: f64 = 560.0;
const MARGIN: f64 = 60.0;

pub const CLASS_COLOURS: [&str; 6] = ["#1f5fbf", "#d0402b", "#2b9348", "#8e44ad", "#e08e0b", "#555555"];

fn colour(class: usize) -> &'static str {
    CLASS_COLOURS[class % CLASS_COLOURS.len()]
}

/// Linear map from a data box onto the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn sx(&self) -> f64 {
        (W - 2.0 * MARGIN) / (self.x.1 - self.x.0)
    }

    fn sy(&self) -> f64 {
        (H - 2.0 * MARGIN) / (self.y.1 - self.y.0)
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"##
    )
    .unwrap();
    writeln!(s, r##"<rect width="{W}" height="{H}" fill="white"/>"##).unwrap();
    writeln!(s, r##"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"##, W / 2.0, escape(title)).unwrap();
    s
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    writeln!(s, r##"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"##, x1 - x0, y0 - y1).unwrap();
    for t in ticks(f.x.0, f.x.1) {
        let p = f.px(t);
        writeln!(s, r##"<line x1="{p:.2}" y1="{y0}" x2="{p:.2}" y2="{}" stroke="black"/>"##, y0 + 5.0).unwrap();
        writeln!(s, r##"<text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"##, y0 + 18.0, label(t)).unwrap();
    }
    for t in ticks(f.y.0, f.y.1) {
        let p = f.py(t);
        writeln!(s, r##"<line x1="{}" y1="{p:.2}" x2="{x0}" y2="{p:.2}" stroke="black"/>"##, x0 - 5.0).unwrap();
        writeln!(s, r##"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"##, x0 - 8.0, p + 4.0, label(t)).unwrap();
    }
    writeln!(s, r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##, W / 2.0, H - 18.0, escape(xlabel)).unwrap();
    writeln!(
        s,
        r##"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"##,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    )
    .unwrap();
}

fn label(t: f64) -> String {
    let r = (t * 1e6).round() / 1e6;
    if r == 0.0 { "0".into() } else { format!("{r}") }
}

fn extent(v: &[f64]) -> (f64, f64) {
    v.iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Boundaries between preference zones in `(A1 - A2, A1 - A3)` space: rays
/// from the origin along +y (1|2), +x (1|3) and the negative diagonal (2|3).
fn zone_rays(s: &mut String, f: &Frame) {
    let r = (f.x.1 - f.x.0).max(f.y.1 - f.y.0) * 2.0;
    let o = (f.px(0.0), f.py(0.0));
    writeln!(s, r##"<g stroke="#444" stroke-dasharray="5,4" clip-path="url(#plot)">"##).unwrap();
    for (dx, dy) in [(0.0, r), (r, 0.0), (-r, -r)] {
        writeln!(s, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"##, o.0, o.1, f.px(dx), f.py(dy)).unwrap();
    }
    s.push_str("</g>\n");
    let d = 0.25 * (f.x.1 - f.x.0);
    for (m, (x, y)) in [(1, (d, d)), (2, (-0.6 * d, 1.2 * d)), (3, (1.2 * d, -0.6 * d))] {
        writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-size="16" fill="#444">zone {m}</text>"##,
            f.px(x),
            f.py(y)
        )
        .unwrap();
    }
}

fn clip(s: &mut String) {
    writeln!(
        s,
        r##"<defs><clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath></defs>"##,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    )
    .unwrap();
}

/// Heat map of a `histogram_table`, square-root colour scale, with the three
/// preference zones marked.
pub fn heatmap(hist: &Table, title: &str) -> Result<String> {
    let (x, y, mass) = (hist.numbers("x")?, hist.numbers("y")?, hist.numbers("mass")?);
    let n = (x.len() as f64).sqrt().round().max(1.0);
    let (xlo, xhi) = extent(&x);
    let (ylo, yhi) = extent(&y);
    let w = if n > 1.0 { (xhi - xlo) / (n - 1.0) } else { 1.0 };
    let f = Frame::new((xlo - 0.5 * w, xhi + 0.5 * w), (ylo - 0.5 * w, yhi + 0.5 * w));
    let max = mass.iter().cloned().filter(|m| m.is_finite()).fold(0.0, f64::max);
    let mut s = open(title);
    clip(&mut s);
    let (cw, ch) = (w * f.sx(), w * f.sy());
    for k in 0..x.len() {
        if !(mass[k] > 0.0) || max <= 0.0 {
            continue;
        }
        let v = (mass[k] / max).sqrt();
        let shade = |full: f64| (255.0 - v * (255.0 - full)).round() as u8;
        writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.3}" height="{:.3}" fill="rgb({},{},{})"/>"##,
            f.px(x[k]) - 0.5 * cw,
            f.py(y[k]) - 0.5 * ch,
            cw + 0.05,
            ch + 0.05,
            shade(8.0),
            shade(48.0),
            shade(107.0)
        )
        .unwrap();
    }
    zone_rays(&mut s, &f);
    axes(&mut s, &f, "A1 - A2", "A1 - A3");
    Ok(close(s))
}

fn stability_glyph(s: &mut String, x: f64, y: f64, kind: &str) {
    match kind {
        "stable" => writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="6" fill="black"/>"##),
        "unstable" => writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="6" fill="white" stroke="black" stroke-width="2"/>"##),
        "saddle" => writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="white" stroke="black" stroke-width="2" transform="rotate(45 {x:.2} {y:.2})"/>"##,
            x - 5.0,
            y - 5.0
        ),
        _ => writeln!(s, r##"<text x="{x:.2}" y="{y:.2}" text-anchor="middle">?</text>"##),
    }
    .unwrap();
}

/// Flow diagram of one class from a `flow_table`: normalised arrows,
/// fixed points from a `fixed_point_table` (filled circle stable, open
/// circle unstable, diamond saddle) and optional escape paths from a
/// `paths_table`.
pub fn flow(flow: &Table, points: &Table, paths: Option<&Table>, class: usize, title: &str) -> Result<String> {
    let want = (class + 1).to_string();
    let cls = flow.strings("class")?;
    let (x, y, u, v) = (flow.numbers("x")?, flow.numbers("y")?, flow.numbers("mu_x")?, flow.numbers("mu_y")?);
    let rows: Vec<usize> = (0..x.len()).filter(|&k| cls[k] == want).collect();
    let xs: Vec<f64> = rows.iter().map(|&k| x[k]).collect();
    let ys: Vec<f64> = rows.iter().map(|&k| y[k]).collect();
    let f = Frame::new(extent(&xs), extent(&ys));
    let n = (rows.len() as f64).sqrt().max(2.0);
    let len = 0.8 * (W - 2.0 * MARGIN) / n;
    let mut s = open(title);
    clip(&mut s);
    zone_rays(&mut s, &f);
    s.push_str("<g stroke=\"#777\" fill=\"#777\">\n");
    for &k in &rows {
        let (a, b) = (u[k] * f.sx(), -v[k] * f.sy());
        let norm = (a * a + b * b).sqrt();
        if !(norm > 0.0) {
            continue;
        }
        let (dx, dy) = (a / norm * len, b / norm * len);
        let (x0, y0) = (f.px(x[k]) - 0.5 * dx, f.py(y[k]) - 0.5 * dy);
        let (x1, y1) = (x0 + dx, y0 + dy);
        let (hx, hy) = (-dy * 0.3, dx * 0.3);
        writeln!(s, r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}"/>"##).unwrap();
        writeln!(
            s,
            r##"<polygon points="{x1:.2},{y1:.2} {:.2},{:.2} {:.2},{:.2}"/>"##,
            x1 - 0.35 * dx + 0.5 * hx,
            y1 - 0.35 * dy + 0.5 * hy,
            x1 - 0.35 * dx - 0.5 * hx,
            y1 - 0.35 * dy - 0.5 * hy
        )
        .unwrap();
    }
    s.push_str("</g>\n");
    if let Some(p) = paths {
        let (pc, pe) = (p.strings("class")?, p.strings("edge")?);
        let (px, py) = (p.numbers("x")?, p.numbers("y")?);
        let mut k = 0;
        while k < px.len() {
            let start = k;
            while k < px.len() && pe[k] == pe[start] && pc[k] == pc[start] {
                k += 1;
            }
            if pc[start] != want {
                continue;
            }
            let pts: Vec<String> = (start..k).map(|i| format!("{:.2},{:.2}", f.px(px[i]), f.py(py[i]))).collect();
            writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"##,
                pts.join(" "),
                colour(class)
            )
            .unwrap();
        }
    }
    let (pc, fx, fy, st) = (points.strings("class")?, points.numbers("x")?, points.numbers("y")?, points.strings("stability")?);
    for k in 0..fx.len() {
        if pc[k] == want {
            stability_glyph(&mut s, f.px(fx[k]), f.py(fy[k]), st[k]);
        }
    }
    axes(&mut s, &f, "A1 - A2", "A1 - A3");
    Ok(close(s))
}

/// Parsed code entry: (market 1..3 or 0 for indifferent, large).
fn parse_code(code: &str) -> Option<Vec<(usize, bool)>> {
    if code == "?" || code.is_empty() {
        return None;
    }
    code.split_whitespace()
        .map(|tok| {
            let mut c = tok.chars();
            let large = match c.next()? {
                'L' => true,
                's' => false,
                _ => return None,
            };
            let rest: String = c.collect();
            let m = if rest == "*" { 0 } else { rest.parse().ok()? };
            Some((m, large))
        })
        .collect()
}

fn star(s: &mut String, cx: f64, cy: f64, r: f64, fill: &str, stroke: &str) {
    let pts: Vec<String> = (0..10)
        .map(|k| {
            let a = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
            let rr = if k % 2 == 0 { r } else { 0.45 * r };
            format!("{:.2},{:.2}", cx + rr * a.cos(), cy + rr * a.sin())
        })
        .collect();
    writeln!(s, r##"<polygon points="{}" fill="{fill}" stroke="{stroke}"/>"##, pts.join(" ")).unwrap();
}

/// One triangle-code glyph centred at `(cx, cy)` with circumradius `r`.
pub fn code_glyph(s: &mut String, code: &str, cx: f64, cy: f64, r: f64, class: usize) {
    let col = colour(class);
    let Some(entries) = parse_code(code) else {
        writeln!(
            s,
            r##"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="{:.1}" fill="#999">?</text>"##,
            cy + 0.4 * r,
            1.2 * r
        )
        .unwrap();
        return;
    };
    let corner = |m: usize| -> (f64, f64) {
        let a = match m {
            1 => 210f64,
            2 => 90.0,
            _ => 330.0,
        }
        .to_radians();
        (cx + r * a.cos(), cy - r * a.sin())
    };
    let tri: Vec<String> = (1..=3).map(|m| corner(m)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    writeln!(s, r##"<polygon points="{}" fill="none" stroke="#bbb" stroke-width="0.7"/>"##, tri.join(" ")).unwrap();
    let dot = 0.28 * r;
    for (m, large) in entries {
        let fill = if large { col } else { "white" };
        if m == 0 {
            star(s, cx, cy, 1.6 * dot, fill, col);
        } else {
            let (x, y) = corner(m);
            writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="{dot:.2}" fill="{fill}" stroke="{col}"/>"##).unwrap();
        }
    }
}

/// Phase diagram from a `phase_table`: one glyph per class at every node,
/// bias along x and 1/beta along y; strongly fragmented nodes are shaded.
pub fn phase(table: &Table, axis: &str, title: &str) -> Result<String> {
    let (b, ib) = (table.numbers("bias")?, table.numbers("inv_beta")?);
    let strong = table.strings("strong")?;
    let classes: Vec<usize> = table
        .header
        .iter()
        .filter_map(|h| h.strip_prefix("code_").and_then(|k| k.parse().ok()))
        .collect();
    let codes: Vec<Vec<&str>> = classes.iter().map(|c| table.strings(&format!("code_{c}"))).collect::<Result<_>>()?;
    let distinct = |v: &[f64]| {
        let mut u: Vec<f64> = v.to_vec();
        u.sort_by(f64::total_cmp);
        u.dedup();
        u
    };
    let (ub, ui) = (distinct(&b), distinct(&ib));
    let step = |u: &[f64]| if u.len() > 1 { (u[u.len() - 1] - u[0]) / (u.len() - 1) as f64 } else { 1.0 };
    let (db, di) = (step(&ub), step(&ui));
    let f = Frame::new(
        (ub[0] - 0.5 * db, ub[ub.len() - 1] + 0.5 * db),
        (ui[0] - 0.5 * di, ui[ui.len() - 1] + 0.5 * di),
    );
    let (cw, ch) = (db * f.sx(), di * f.sy());
    let nc = classes.len().max(1) as f64;
    let r = (0.45 * cw / nc).min(0.4 * ch);
    let mut s = open(title);
    for k in 0..b.len() {
        if strong[k] == "true" {
            writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{cw:.2}" height="{ch:.2}" fill="#f6d5d0"/>"##,
                f.px(b[k]) - 0.5 * cw,
                f.py(ib[k]) - 0.5 * ch
            )
            .unwrap();
        }
    }
    for k in 0..b.len() {
        for (ci, &c) in classes.iter().enumerate() {
            let cx = f.px(b[k]) + (ci as f64 + 0.5 - 0.5 * nc) * (cw / nc);
            code_glyph(&mut s, codes[ci][k], cx, f.py(ib[k]), r, c - 1);
        }
    }
    axes(&mut s, &f, axis, "1/beta");
    Ok(close(s))
}

/// Aggregate time series: column `column` of every series table (thin,
/// grey when several), and optionally the same column of a trajectory
/// table (thick, red).
pub fn series(tables: &[&Table], trajectory: Option<&Table>, column: &str, title: &str) -> Result<String> {
    let mut curves: Vec<(Vec<f64>, Vec<f64>, &str, f64)> = Vec::new();
    let single = tables.len() == 1;
    for (k, t) in tables.iter().enumerate() {
        let c = if single { colour(0) } else if k == 0 { "#666" } else { "#aaa" };
        curves.push((t.numbers("t")?, t.numbers(column)?, c, 0.8));
    }
    if let Some(t) = trajectory {
        curves.push((t.numbers("t")?, t.numbers(column)?, colour(1), 2.5));
    }
    let xs: Vec<f64> = curves.iter().flat_map(|c| c.0.iter().cloned()).collect();
    let ys: Vec<f64> = curves.iter().flat_map(|c| c.1.iter().cloned()).collect();
    let f = Frame::new(extent(&xs), extent(&ys));
    let mut s = open(title);
    clip(&mut s);
    for (t, v, c, w) in &curves {
        let mut d = String::new();
        let mut pen = false;
        for (a, b) in t.iter().zip(v) {
            if !b.is_finite() {
                pen = false;
                continue;
            }
            write!(d, "{}{:.2},{:.2} ", if pen { "L" } else { "M" }, f.px(*a), f.py(*b)).unwrap();
            pen = true;
        }
        writeln!(s, r##"<path d="{d}" fill="none" stroke="{c}" stroke-width="{w}" clip-path="url(#plot)"/>"##).unwrap();
    }
    axes(&mut s, &f, "t = n r", column);
    Ok(close(s))
}

//! CSV tables. Every table has a fixed header; numbers are written in the
//! shortest form that parses back to the same `f64`.

use std::path::Path as FsPath;

use crate::bifurcation::{FixedPoint, RootSearch, ThresholdReport};
use crate::error::{Error, Result};
use crate::fw::{Edge, Path, PeakSize};
use crate::linalg::Vec2;
use crate::phases::{ClassAnalysis, FairThresholds, FeasiblePatterns, PeakOnset, PhaseDiagram, Preference};
use crate::simulate::{AttractionHistogram, PeakSet, SeriesRecord};
use crate::theory::{LangevinField, TrajectoryPoint};

/// A named CSV table held as text cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem; the table is written to `<name>.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

impl Table {
    pub fn new(name: impl Into<String>, header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            name: name.into(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header of {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidParameter(format!("table {} has no column {name}", self.name)))
    }

    /// Column parsed as numbers; empty cells become NaN.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                let s = r[c].as_str();
                if s.is_empty() {
                    return Ok(f64::NAN);
                }
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("{}: {name} = {s:?} is not a number", self.name)))
            })
            .collect()
    }

    pub fn strings(&self, name: &str) -> Result<Vec<&str>> {
        let c = self.column(name)?;
        Ok(self.rows.iter().map(|r| r[c].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
    }

    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| Ok(rec?.iter().map(String::from).collect()))
            .collect::<Result<_>>()?;
        Ok(Self {
            name: name.into(),
            header,
            rows,
        })
    }

    pub fn write(&self, dir: &FsPath) -> Result<()> {
        std::fs::write(dir.join(self.file_name()), self.to_csv()?)?;
        Ok(())
    }

    pub fn read(path: &FsPath) -> Result<Self> {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
        Self::from_csv(name, &std::fs::read_to_string(path)?)
    }
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |m| format!("{prefix}_{m}"))
}

/// `round,t,f_1..f_M,share_1..share_M`; an undefined ratio is an empty cell.
pub fn series_table(name: &str, series: &[SeriesRecord]) -> Table {
    let m = series.first().map_or(0, |s| s.shares.len());
    let mut t = Table::new(
        name,
        ["round".to_string(), "t".to_string()]
            .into_iter()
            .chain(indexed("f", m))
            .chain(indexed("share", m)),
    );
    for s in series {
        let mut row = vec![s.aggregates.round.to_string(), num(s.aggregates.t)];
        row.extend(s.aggregates.f.iter().map(|f| f.map_or(String::new(), num)));
        row.extend(s.shares.iter().map(|&x| num(x)));
        t.push(row);
    }
    t
}

/// `t,f_1..f_M` of the homogeneous-population dynamics.
pub fn trajectory_table(name: &str, traj: &[TrajectoryPoint]) -> Table {
    let m = traj.first().map_or(0, |p| p.f.len());
    let mut t = Table::new(name, std::iter::once("t".to_string()).chain(indexed("f", m)));
    for p in traj {
        t.push(std::iter::once(num(p.t)).chain(p.f.iter().map(|&f| num(f))).collect());
    }
    t
}

/// `class,i,j,x,y,zone,mass`: every bin with its centre, preferred market
/// (1-based) and share of the in-range mass. The bin count and range are
/// recoverable from the rows.
pub fn histogram_table(name: &str, h: &AttractionHistogram) -> Table {
    let n = h.normalized();
    let mut t = Table::new(name, ["class", "i", "j", "x", "y", "zone", "mass"]);
    for i in 0..h.bins {
        for j in 0..h.bins {
            let c = h.center(i, j);
            t.push(vec![
                (h.class_id + 1).to_string(),
                i.to_string(),
                j.to_string(),
                num(c[0]),
                num(c[1]),
                (h.zone(i, j) + 1).to_string(),
                num(n.get(i, j)),
            ]);
        }
    }
    t
}

/// `class,peak,x,y,zone,weight,bins`.
pub fn peaks_table(name: &str, sets: &[PeakSet]) -> Table {
    let mut t = Table::new(name, ["class", "peak", "x", "y", "zone", "weight", "bins"]);
    for s in sets {
        for (k, p) in s.peaks.iter().enumerate() {
            t.push(vec![
                (s.class_id + 1).to_string(),
                (k + 1).to_string(),
                num(p.location[0]),
                num(p.location[1]),
                (p.zone + 1).to_string(),
                num(p.weight),
                p.size.to_string(),
            ]);
        }
    }
    t
}

/// `class,x,y,mu_x,mu_y` on a square grid of `n` points per axis.
pub fn flow_rows(t: &mut Table, class: usize, field: &impl LangevinField, half: f64, n: usize) {
    for i in 0..n {
        for j in 0..n {
            let x: Vec2 = [
                -half + 2.0 * half * i as f64 / (n - 1) as f64,
                -half + 2.0 * half * j as f64 / (n - 1) as f64,
            ];
            let mu = field.drift(x);
            t.push(vec![(class + 1).to_string(), num(x[0]), num(x[1]), num(mu[0]), num(mu[1])]);
        }
    }
}

pub fn flow_table(name: &str) -> Table {
    Table::new(name, ["class", "x", "y", "mu_x", "mu_y"])
}

/// `class,x,y,stability,zone,re_1,im_1,re_2,im_2`; zone is 0 for an
/// indifferent point.
pub fn fixed_point_table(name: &str) -> Table {
    Table::new(name, ["class", "x", "y", "stability", "zone", "re_1", "im_1", "re_2", "im_2"])
}

pub fn fixed_point_rows(t: &mut Table, roots: &RootSearch, beta: f64) {
    for p in &roots.points {
        t.push(fixed_point_row(p, beta));
    }
}

fn fixed_point_row(p: &FixedPoint, beta: f64) -> Vec<String> {
    vec![
        (p.class_id + 1).to_string(),
        num(p.location[0]),
        num(p.location[1]),
        format!("{:?}", p.stability).to_lowercase(),
        p.zone(beta).map_or(0, |z| z + 1).to_string(),
        num(p.eigenvalues[0].re),
        num(p.eigenvalues[0].im),
        num(p.eigenvalues[1].re),
        num(p.eigenvalues[1].im),
    ]
}

/// `kind,label,inv_beta_lo,inv_beta_hi,before,after`.
pub fn transitions_table(name: &str, report: &ThresholdReport) -> Table {
    let mut t = Table::new(name, ["kind", "label", "inv_beta_lo", "inv_beta_hi", "before", "after"]);
    for tr in &report.transitions {
        t.push(vec![
            format!("{:?}", tr.kind),
            tr.label.clone(),
            num(tr.inv_beta_lo),
            num(tr.inv_beta_hi),
            tr.before.clone(),
            tr.after.clone(),
        ]);
    }
    t
}

/// `quantity,value` summary of the fair-market thresholds.
pub fn fair_table(name: &str, f: &FairThresholds) -> Table {
    let mut t = Table::new(name, ["quantity", "value"]);
    let mut put = |k: &str, v: String| t.push(vec![k.to_string(), v]);
    for (m, o) in f.onsets.iter().enumerate() {
        put(&format!("onset_{}", m + 1), num(*o));
    }
    put("onset_spread", num(f.spread));
    put("inv_beta_c", num(f.inv_beta_c));
    put("inv_beta_c_prime", num(f.inv_beta_c_prime));
    put("inv_beta_c_double_prime", num(f.inv_beta_c_double_prime));
    for (k, c) in f.counts.iter().enumerate() {
        put(&format!("non_repelling_{}", k + 1), c.to_string());
    }
    put("ordered", f.ordered().to_string());
    t
}

/// `class,market,inv_beta_lo,inv_beta_hi`, in order of appearance.
pub fn onsets_table(name: &str, onsets: &[PeakOnset]) -> Table {
    let mut t = Table::new(name, ["class", "market", "inv_beta_lo", "inv_beta_hi"]);
    for o in onsets {
        t.push(vec![
            (o.class + 1).to_string(),
            (o.market + 1).to_string(),
            num(o.inv_beta_lo),
            num(o.inv_beta_hi),
        ]);
    }
    t
}

fn preference(p: Preference) -> String {
    match p {
        Preference::Market(m) => (m + 1).to_string(),
        Preference::Indifferent => "*".into(),
    }
}

/// `class,attractor,x,y,preference,potential,deficit,size`.
pub fn attractors_table(name: &str) -> Table {
    Table::new(name, ["class", "attractor", "x", "y", "preference", "potential", "deficit", "size"])
}

pub fn attractor_rows(t: &mut Table, class: usize, a: &ClassAnalysis) {
    for (i, p) in a.attractors.iter().enumerate() {
        t.push(vec![
            (class + 1).to_string(),
            (i + 1).to_string(),
            num(p.location[0]),
            num(p.location[1]),
            preference(a.preference(i)),
            num(a.peaks.potential[i]),
            num(a.peaks.deficit(i)),
            if a.peaks.sizes[i] == PeakSize::Large { "large" } else { "small" }.into(),
        ]);
    }
}

/// `class,edge,from,to,saddle_x,saddle_y,action,converged`.
pub fn edges_table(name: &str) -> Table {
    Table::new(name, ["class", "edge", "from", "to", "saddle_x", "saddle_y", "action", "converged"])
}

pub fn edge_row(class: usize, k: usize, e: &Edge, saddle: Vec2) -> Vec<String> {
    vec![
        (class + 1).to_string(),
        (k + 1).to_string(),
        (e.from + 1).to_string(),
        (e.to + 1).to_string(),
        num(saddle[0]),
        num(saddle[1]),
        num(e.action),
        e.converged.to_string(),
    ]
}

/// `class,edge,k,t,x,y`: the optimal escape path of every edge.
pub fn paths_table(name: &str) -> Table {
    Table::new(name, ["class", "edge", "k", "t", "x", "y"])
}

pub fn path_rows(t: &mut Table, class: usize, edge: usize, path: &Path) {
    for (k, (p, s)) in path.points.iter().zip(path.times()).enumerate() {
        t.push(vec![
            (class + 1).to_string(),
            (edge + 1).to_string(),
            k.to_string(),
            num(s),
            num(p[0]),
            num(p[1]),
        ]);
    }
}

/// `bias,inv_beta,f_1..f_3,code_1..code_C,strong,mixed`.
pub fn phase_table(name: &str, d: &PhaseDiagram) -> Table {
    let classes = d.nodes.first().map_or(0, |n| n.codes.len());
    let mut t = Table::new(
        name,
        ["bias".to_string(), "inv_beta".to_string()]
            .into_iter()
            .chain(indexed("f", 3))
            .chain(indexed("code", classes))
            .chain(["strong".to_string(), "mixed".to_string()]),
    );
    for n in &d.nodes {
        let mut row = vec![num(n.bias), num(n.inv_beta)];
        if n.f.len() == 3 {
            row.extend(n.f.iter().map(|&f| num(f)));
        } else {
            row.extend(std::iter::repeat(String::new()).take(3));
        }
        row.extend(n.codes.iter().map(|c| c.to_string()));
        row.push(n.strong.to_string());
        row.push(n.mixed.to_string());
        t.push(row);
    }
    t
}

/// `bias,class,inv_beta_lo,inv_beta_hi,above,below`.
pub fn boundaries_table(name: &str, d: &PhaseDiagram) -> Table {
    let mut t = Table::new(name, ["bias", "class", "inv_beta_lo", "inv_beta_hi", "above", "below"]);
    for b in &d.boundaries {
        t.push(vec![
            num(b.bias),
            (b.class + 1).to_string(),
            num(b.inv_beta_lo),
            num(b.inv_beta_hi),
            b.above.clone(),
            b.below.clone(),
        ]);
    }
    t
}

/// `markets,classes,eta,groups,disjoint_possible`; `eta` is space separated.
pub fn patterns_table(name: &str, f: &FeasiblePatterns) -> Table {
    let mut t = Table::new(name, ["markets", "classes", "eta", "groups", "disjoint_possible"]);
    for p in &f.patterns {
        t.push(vec![
            p.markets.to_string(),
            p.classes().to_string(),
            p.eta.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "),
            p.groups().to_string(),
            p.disjoint_possible().to_string(),
        ]);
    }
    t
}

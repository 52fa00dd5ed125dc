//! Two-dimensional histograms over the attraction differences
//! `(A1 - A2, A1 - A3)` and peak detection on them.

use serde::{Deserialize, Serialize};

use crate::linalg::Vec2;

/// Market with the largest attraction at attraction differences `x`
/// (0-based). Ties go to the lower index.
pub fn zone_of(x: Vec2) -> usize {
    // attractions relative to market 1 are (0, -x_2, -x_3)
    let a = [0.0, -x[0], -x[1]];
    let mut best = 0;
    for m in 1..3 {
        if a[m] > a[best] {
            best = m;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractionHistogram {
    pub class_id: usize,
    pub bins: usize,
    /// The grid spans `[-range, range]` on both axes.
    pub range: f64,
    /// Row-major counts, row index along `A1 - A2`.
    pub counts: Vec<f64>,
    /// Mass that fell outside the grid.
    pub out_of_range: f64,
}

impl AttractionHistogram {
    pub fn new(class_id: usize, bins: usize, range: f64) -> Self {
        assert!(bins > 0 && range > 0.0, "histogram needs bins > 0 and range > 0");
        Self {
            class_id,
            bins,
            range,
            counts: vec![0.0; bins * bins],
            out_of_range: 0.0,
        }
    }

    /// Histogram of a set of points, each with unit mass.
    pub fn from_points(class_id: usize, bins: usize, range: f64, points: &[Vec2]) -> Self {
        let mut h = Self::new(class_id, bins, range);
        for p in points {
            h.add(*p, 1.0);
        }
        h
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.range / self.bins as f64
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let i = ((x + self.range) / self.bin_width()).floor();
        if i >= 0.0 && (i as usize) < self.bins {
            Some(i as usize)
        } else if x == self.range {
            Some(self.bins - 1)
        } else {
            None
        }
    }

    pub fn add(&mut self, p: Vec2, weight: f64) {
        match (self.bin_of(p[0]), self.bin_of(p[1])) {
            (Some(i), Some(j)) => self.counts[i * self.bins + j] += weight,
            _ => self.out_of_range += weight,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.bins + j]
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        let w = self.bin_width();
        [-self.range + (i as f64 + 0.5) * w, -self.range + (j as f64 + 0.5) * w]
    }

    /// Preferred market (0-based) at the centre of bin `(i, j)`.
    pub fn zone(&self, i: usize, j: usize) -> usize {
        zone_of(self.center(i, j))
    }

    /// In-range plus out-of-range mass.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum::<f64>() + self.out_of_range
    }

    /// Copy scaled to unit total mass.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        let mut h = self.clone();
        if t > 0.0 {
            for c in &mut h.counts {
                *c /= t;
            }
            h.out_of_range /= t;
        }
        h
    }

    /// Accumulates another histogram on the same grid.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.bins, other.bins);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.out_of_range += other.out_of_range;
    }

    /// Mass per preference zone (in-range bins only).
    pub fn zone_masses(&self) -> [f64; 3] {
        let mut z = [0.0; 3];
        for i in 0..self.bins {
            for j in 0..self.bins {
                z[self.zone(i, j)] += self.get(i, j);
            }
        }
        z
    }

    /// L1 distance between the normalized histograms.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let (a, b) = (self.normalized(), other.normalized());
        a.counts.iter().zip(&b.counts).map(|(x, y)| (x - y).abs()).sum::<f64>()
            + (a.out_of_range - b.out_of_range).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: Vec2,
    pub weight: f64,
    /// Preferred market (0-based) at the peak location.
    pub zone: usize,
    /// Number of bins in the component.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub class_id: usize,
    /// Sorted by decreasing weight.
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn total_weight(&self) -> f64 {
        self.peaks.iter().map(|p| p.weight).sum()
    }

    /// Summed weight of peaks whose location lies in `zone`.
    pub fn zone_weight(&self, zone: usize) -> f64 {
        self.peaks.iter().filter(|p| p.zone == zone).map(|p| p.weight).sum()
    }

    pub fn dominant(&self) -> Option<&Peak> {
        self.peaks.first()
    }
}

/// Default relative density threshold for peak detection.
pub const PEAK_THRESHOLD: f64 = 0.01;

/// Components holding less than this fraction of the histogram mass are
/// treated as sampling noise.
pub const NOISE_FLOOR: f64 = 1e-3;

/// 3x3 box average, used only to segment the grid.
fn smoothed(hist: &AttractionHistogram) -> Vec<f64> {
    let n = hist.bins;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            let mut cells = 0.0;
            for ni in i.saturating_sub(1)..=(i + 1).min(n - 1) {
                for nj in j.saturating_sub(1)..=(j + 1).min(n - 1) {
                    acc += hist.counts[ni * n + nj];
                    cells += 1.0;
                }
            }
            out[i * n + j] = acc / cells;
        }
    }
    out
}

/// Connected components (8-neighbourhood) of bins whose 3x3-smoothed density
/// exceeds `threshold` times the largest smoothed bin. Weights are component
/// mass (raw counts) over the mass of all retained components; locations are
/// mass centroids. Components below [`NOISE_FLOOR`] of the total are dropped.
pub fn detect_peaks_with(hist: &AttractionHistogram, threshold: f64) -> PeakSet {
    let n = hist.bins;
    let density = smoothed(hist);
    let max = density.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    if max <= 0.0 {
        return PeakSet {
            class_id: hist.class_id,
            peaks,
        };
    }
    let cut = threshold * max;
    let mut label = vec![usize::MAX; n * n];
    let mut stack = Vec::new();
    let mut comps: Vec<(f64, f64, f64, usize)> = Vec::new();
    for start in 0..n * n {
        if label[start] != usize::MAX || density[start] <= cut {
            continue;
        }
        let id = comps.len();
        let (mut mass, mut sx, mut sy, mut size) = (0.0, 0.0, 0.0, 0);
        label[start] = id;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k / n, k % n);
            let w = hist.counts[k];
            let c = hist.center(i, j);
            mass += w;
            sx += w * c[0];
            sy += w * c[1];
            size += 1;
            for ni in i.saturating_sub(1)..=(i + 1).min(n - 1) {
                for nj in j.saturating_sub(1)..=(j + 1).min(n - 1) {
                    let nk = ni * n + nj;
                    if label[nk] == usize::MAX && density[nk] > cut {
                        label[nk] = id;
                        stack.push(nk);
                    }
                }
            }
        }
        comps.push((mass, sx, sy, size));
    }
    let all: f64 = hist.counts.iter().sum();
    let heaviest = comps.iter().map(|c| c.0).fold(0.0, f64::max);
    // the heaviest component always survives, so a non-empty histogram has a peak
    comps.retain(|c| c.0 > 0.0 && (c.0 >= NOISE_FLOOR * all || c.0 == heaviest));
    let total: f64 = comps.iter().map(|c| c.0).sum();
    for (mass, sx, sy, size) in comps {
        let location = [sx / mass, sy / mass];
        peaks.push(Peak {
            location,
            weight: mass / total,
            zone: zone_of(location),
            size,
        });
    }
    peaks.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    PeakSet {
        class_id: hist.class_id,
        peaks,
    }
}

pub fn detect_peaks(hist: &AttractionHistogram) -> PeakSet {
    detect_peaks_with(hist, PEAK_THRESHOLD)
}

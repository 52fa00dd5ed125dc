//! Fixed-size 2-D helpers for the attraction-difference plane.

use num_complex::Complex64;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
pub fn transpose_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[1][0] * v[1], m[0][1] * v[0] + m[1][1] * v[1]]
}

#[inline]
pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

pub fn solve(m: &Mat2, b: Vec2) -> Option<Vec2> {
    inverse(m).map(|inv| mat_vec(&inv, b))
}

pub fn eigenvalues(m: &Mat2) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let disc = Complex64::new(tr * tr / 4.0 - det(m), 0.0).sqrt();
    let half = Complex64::new(tr / 2.0, 0.0);
    let (a, b) = (half + disc, half - disc);
    if a.re >= b.re {
        [a, b]
    } else {
        [b, a]
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &Mat2) -> [f64; 2] {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let r = half_diff.hypot(m[0][1]);
    [mean - r, mean + r]
}

/// Unit eigenvector of a real matrix for a real eigenvalue `lambda`.
pub fn eigenvector(m: &Mat2, lambda: f64) -> Vec2 {
    let a = [m[0][0] - lambda, m[0][1]];
    let b = [m[1][0], m[1][1] - lambda];
    let cand = if norm(a) >= norm(b) {
        [-a[1], a[0]]
    } else {
        [-b[1], b[0]]
    };
    let n = norm(cand);
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        scale(cand, 1.0 / n)
    }
}

/// 2-norm condition number of a symmetric positive definite matrix.
pub fn sym_condition(m: &Mat2) -> f64 {
    let [lo, hi] = sym_eigenvalues(m);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves the dense row-major system `a x = b` by Gaussian elimination with
/// partial pivoting; `None` if singular.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
        if a[p * n + k].abs() < 1e-300 {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let m = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= m * a[k * n + j];
            }
            b[i] -= m * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k * n + k];
    }
    Some(x)
}

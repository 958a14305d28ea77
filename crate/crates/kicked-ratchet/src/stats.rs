//! Momentum statistics, order-stable reductions, and the small linear
//! fits the scenarios need.
//!
//! All floating-point reductions over ensembles go through a fixed
//! pairwise-summation tree so results do not depend on worker count.

use serde::Serialize;

/// Pairwise (cascade) summation; deterministic for a fixed slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Histogram over uniform bins of width `bin_width`, bin k covering
/// [(k - 1/2) w, (k + 1/2) w). Mass is a float so quantum probability
/// weights and classical unit counts share one type.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Bin index of mass[0]; bin k is centered at k * bin_width.
    pub first_bin: i64,
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn new(bin_width: f64, first_bin: i64, n_bins: usize) -> Self {
        assert!(bin_width > 0.0 && bin_width.is_finite());
        Histogram {
            bin_width,
            first_bin,
            mass: vec![0.0; n_bins],
        }
    }

    /// Bin index for a value (nearest bin center).
    pub fn bin_of(bin_width: f64, value: f64) -> i64 {
        (value / bin_width).round() as i64
    }

    /// Build a histogram spanning [lo, hi] with the given bin width.
    pub fn spanning(bin_width: f64, lo: f64, hi: f64) -> Self {
        let first = Self::bin_of(bin_width, lo);
        let last = Self::bin_of(bin_width, hi);
        let n = (last - first + 1).max(1) as usize;
        Histogram::new(bin_width, first, n)
    }

    pub fn deposit(&mut self, value: f64, weight: f64) {
        let k = Self::bin_of(self.bin_width, value) - self.first_bin;
        assert!(
            k >= 0 && (k as usize) < self.mass.len(),
            "histogram deposit out of range: value {value}"
        );
        self.mass[k as usize] += weight;
    }

    pub fn center(&self, i: usize) -> f64 {
        (self.first_bin + i as i64) as f64 * self.bin_width
    }

    pub fn left_edge(&self, i: usize) -> f64 {
        self.center(i) - 0.5 * self.bin_width
    }

    pub fn right_edge(&self, i: usize) -> f64 {
        self.center(i) + 0.5 * self.bin_width
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.mass)
    }

    /// Merge histograms with identical bin width, growing the support.
    /// `others` is consumed in order so the merge is deterministic.
    pub fn merge_all(mut parts: Vec<Histogram>) -> Histogram {
        assert!(!parts.is_empty());
        let w = parts[0].bin_width;
        assert!(parts.iter().all(|h| h.bin_width == w));
        let first = parts.iter().map(|h| h.first_bin).min().unwrap();
        let last = parts
            .iter()
            .map(|h| h.first_bin + h.mass.len() as i64 - 1)
            .max()
            .unwrap();
        let mut out = Histogram::new(w, first, (last - first + 1) as usize);
        // element-wise pairwise reduction over the ordered parts
        while parts.len() > 1 {
            let mut next = Vec::with_capacity(parts.len().div_ceil(2));
            let mut it = parts.into_iter();
            while let Some(mut a) = it.next() {
                if let Some(b) = it.next() {
                    a = Self::merge_pair(a, b);
                }
                next.push(a);
            }
            parts = next;
        }
        let only = parts.pop().unwrap();
        let off = (only.first_bin - first) as usize;
        out.mass[off..off + only.mass.len()].copy_from_slice(&only.mass);
        out
    }

    fn merge_pair(a: Histogram, b: Histogram) -> Histogram {
        let first = a.first_bin.min(b.first_bin);
        let last = (a.first_bin + a.mass.len() as i64 - 1)
            .max(b.first_bin + b.mass.len() as i64 - 1);
        let mut out = Histogram::new(a.bin_width, first, (last - first + 1) as usize);
        for (i, m) in a.mass.iter().enumerate() {
            out.mass[(a.first_bin - first) as usize + i] += m;
        }
        for (i, m) in b.mass.iter().enumerate() {
            out.mass[(b.first_bin - first) as usize + i] += m;
        }
        out
    }

    /// Mass-weighted mean and variance of the binned variable.
    pub fn moments(&self) -> (f64, f64) {
        let total = self.total_mass();
        let m1: Vec<f64> = self
            .mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * self.center(i))
            .collect();
        let mean = pairwise_sum(&m1) / total;
        let m2: Vec<f64> = self
            .mass
            .iter()
            .enumerate()
            .map(|(i, m)| m * (self.center(i) - mean).powi(2))
            .collect();
        (mean, pairwise_sum(&m2) / total)
    }
}

/// Per-kick momentum statistics plus the final distribution.
#[derive(Debug, Clone, Serialize)]
pub struct MomentumStats {
    /// Nominal initial momentum the shifts are measured against.
    pub rho_l: f64,
    /// Ensemble size (trajectories or beta samples).
    pub ensemble_size: u64,
    /// <rho - rho_L> indexed by kick 0..=n_kicks.
    pub mean_shift: Vec<f64>,
    /// Central variance of rho per kick.
    pub variance: Vec<f64>,
    /// Standard error of mean_shift per kick.
    pub sem: Vec<f64>,
    /// Final momentum distribution N(rho).
    pub histogram: Histogram,
}

impl MomentumStats {
    pub fn n_kicks(&self) -> usize {
        self.mean_shift.len() - 1
    }

    pub fn final_mean_shift(&self) -> f64 {
        *self.mean_shift.last().unwrap()
    }

    pub fn final_sem(&self) -> f64 {
        *self.sem.last().unwrap()
    }
}

/// Ordinary least squares y = slope x + intercept.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "linear_fit: need at least two points");
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Sinusoid fit at a fixed angular frequency:
/// y = amplitude sin(omega x + phase) + offset, solved by linear least
/// squares on the (sin, cos, 1) basis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SinusoidFit {
    pub omega: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    /// Sum of squared residuals.
    pub sse: f64,
}

pub fn sinusoid_fit(x: &[f64], y: &[f64], omega: f64) -> SinusoidFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 3, "sinusoid_fit: need at least three points");
    // normal equations for [a, c, d] with model a sin + c cos + d
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let basis = [(omega * xi).sin(), (omega * xi).cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * yi;
        }
    }
    let sol = solve3(m, rhs);
    let (a, c, d) = (sol[0], sol[1], sol[2]);
    let mut sse = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let f = a * (omega * xi).sin() + c * (omega * xi).cos() + d;
        sse += (yi - f) * (yi - f);
    }
    SinusoidFit {
        omega,
        amplitude: a.hypot(c),
        phase: c.atan2(a),
        offset: d,
        sse,
    }
}

/// Scan a frequency window with the linear sinusoid fit and keep the
/// frequency with the smallest residual. A spectral scan, not a nonlinear
/// fit: each candidate is solved in closed form.
pub fn scan_sinusoid_period(
    x: &[f64],
    y: &[f64],
    omega_lo: f64,
    omega_hi: f64,
    n_scan: usize,
) -> SinusoidFit {
    assert!(n_scan >= 2 && omega_hi > omega_lo && omega_lo > 0.0);
    let mut best: Option<SinusoidFit> = None;
    for i in 0..n_scan {
        let omega = omega_lo + (omega_hi - omega_lo) * i as f64 / (n_scan - 1) as f64;
        let fit = sinusoid_fit(x, y, omega);
        if best.as_ref().is_none_or(|b| fit.sse < b.sse) {
            best = Some(fit);
        }
    }
    best.unwrap()
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    // Gaussian elimination with partial pivoting
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        assert!(m[col][col] != 0.0, "singular normal equations");
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x
}

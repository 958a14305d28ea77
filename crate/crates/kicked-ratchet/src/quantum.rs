//! Quantum Floquet propagation on a momentum ladder.
//!
//! The state lives on ladder sites of physical momentum
//! rho_m = hbar_eff (m + beta) with quasimomentum beta in [0, 1). One kick
//! applies the phase exp(-i K cos(phi) / hbar_eff) on the angle grid
//! (spectrally, via FFT), while the alternating linear rocking term is an
//! exact momentum translation: beta <- beta - (-1)^n A / hbar_eff mod 1,
//! with the integer carry absorbed into a ladder re-indexing shift. The
//! free flight multiplies site m by exp(-i rho_m^2 tau_n / (2 hbar_eff))
//! with tau_n alternating between 1+b and 1-b.
//!
//! The amplitude vector spans the full FFT ring of `n_phi` sites; the
//! outer half of the ring is a guard band. Population reaching half-way
//! out (the `m_max` monitor radius) triggers a grid doubling, so
//! amplitude is never silently truncated or aliased.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::Arc;

use crate::classical::Parity;
use crate::rng::{normal_quantile, SubstreamRng};
use crate::stats::{pairwise_sum, Histogram, MomentumStats};
use crate::units::DimensionlessParams;

/// Edge-population level that triggers a grid doubling.
pub const GROW_TRIGGER: f64 = 1e-8;

/// Ladder truncation: monitor radius `m_max` and FFT ring size `n_phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub m_max: usize,
    pub n_phi: usize,
}

impl GridSpec {
    /// Default grid for a given hbar_eff: the localization length scales
    /// as 1/hbar_eff, so m_max = 512 / hbar_eff (rounded up to a power of
    /// two, clamped to [64, 32768]), n_phi = 4 m_max.
    pub fn for_hbar(hbar_eff: f64) -> GridSpec {
        let target = (512.0 / hbar_eff).ceil().clamp(64.0, 32768.0) as usize;
        let m_max = target.next_power_of_two();
        GridSpec {
            m_max,
            n_phi: (4 * m_max).next_power_of_two(),
        }
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        if !self.n_phi.is_power_of_two() || self.n_phi < 2 * self.m_max + 1 {
            return Err(crate::error::Error::invalid(format!(
                "grid must satisfy n_phi a power of two and n_phi >= 2 m_max + 1 \
                 (got m_max {} n_phi {})",
                self.m_max, self.n_phi
            )));
        }
        Ok(())
    }
}

/// Complex amplitudes over the ladder window [base, base + n_phi - 1].
#[derive(Debug, Clone)]
pub struct QuantumLadderState {
    /// Quasimomentum in [0, 1).
    pub quasimomentum: f64,
    /// Ladder site of amps[0].
    pub base: i64,
    pub amps: Vec<C64>,
    pub hbar_eff: f64,
}

impl QuantumLadderState {
    /// A single plane wave at `site` with quasimomentum `beta`, centered
    /// in a fresh ring.
    pub fn plane_wave(grid: GridSpec, site: i64, beta: f64, hbar_eff: f64) -> Self {
        assert!((0.0..1.0).contains(&beta), "beta must be in [0,1)");
        let mut amps = vec![C64::new(0.0, 0.0); grid.n_phi];
        let center = grid.n_phi as i64 / 2;
        amps[center as usize] = C64::new(1.0, 0.0);
        QuantumLadderState {
            quasimomentum: beta,
            base: site - center,
            amps,
            hbar_eff,
        }
    }

    pub fn n_phi(&self) -> usize {
        self.amps.len()
    }

    /// Physical momentum of amps[i].
    #[inline]
    pub fn rho_at(&self, i: usize) -> f64 {
        self.hbar_eff * ((self.base + i as i64) as f64 + self.quasimomentum)
    }

    pub fn norm_sq(&self) -> f64 {
        let v: Vec<f64> = self.amps.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&v)
    }

    /// <rho> and <rho^2> of the site distribution.
    pub fn momentum_moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, c) in self.amps.iter().enumerate() {
            let p = c.norm_sqr();
            let rho = self.rho_at(i);
            m1 += p * rho;
            m2 += p * rho * rho;
        }
        (m1, m2)
    }

    /// Probability at ring distance >= m_max from the center.
    pub fn population_outside(&self, m_max: usize) -> f64 {
        let n = self.amps.len();
        let center = n / 2;
        let mut p = 0.0;
        for (i, c) in self.amps.iter().enumerate() {
            if center.abs_diff(i) >= m_max {
                p += c.norm_sqr();
            }
        }
        p
    }

    /// Double the ring, keeping the occupied window centered.
    fn grow(&mut self) {
        let n = self.amps.len();
        let mut amps = vec![C64::new(0.0, 0.0); 2 * n];
        let offset = n / 2;
        amps[offset..offset + n].copy_from_slice(&self.amps);
        self.base -= offset as i64;
        self.amps = amps;
    }
}

/// Cached drift phases, keyed by (base, beta, tau).
struct DriftTable {
    base: i64,
    beta: f64,
    tau: f64,
    phases: Vec<C64>,
}

/// A grid doubling that happened mid-run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridEvent {
    pub sample: usize,
    pub kick: u64,
    pub n_phi_before: usize,
    pub n_phi_after: usize,
}

/// One-period Floquet operator with cached FFT plans and phase tables.
pub struct FloquetPropagator {
    params: DimensionlessParams,
    parity: Parity,
    m_max: usize,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    kick_phase: Vec<C64>,
    buf: Vec<C64>,
    /// Drift phase tables for the two alternating (beta, tau) slots.
    drift_cache: [Option<DriftTable>; 2],
    /// Grid doublings seen so far (kick index recorded by the caller).
    pub events: Vec<(u64, usize, usize)>,
}

impl FloquetPropagator {
    pub fn new(params: DimensionlessParams, parity: Parity, grid: GridSpec) -> Self {
        let mut p = FloquetPropagator {
            params,
            parity,
            m_max: grid.m_max,
            fft_fwd: FftPlanner::new().plan_fft_forward(grid.n_phi),
            fft_inv: FftPlanner::new().plan_fft_inverse(grid.n_phi),
            kick_phase: Vec::new(),
            buf: vec![C64::new(0.0, 0.0); grid.n_phi],
            drift_cache: [None, None],
            events: Vec::new(),
        };
        p.build_tables(grid.n_phi);
        p
    }

    fn build_tables(&mut self, n_phi: usize) {
        let scale = self.params.kick_strength / self.params.hbar_eff;
        self.kick_phase = (0..n_phi)
            .map(|j| {
                let phi = TAU * j as f64 / n_phi as f64;
                let theta = scale * phi.cos();
                C64::new(theta.cos(), -theta.sin())
            })
            .collect();
        self.buf = vec![C64::new(0.0, 0.0); n_phi];
        self.drift_cache = [None, None];
    }

    fn replan(&mut self, n_phi: usize) {
        let mut planner = FftPlanner::new();
        self.fft_fwd = planner.plan_fft_forward(n_phi);
        self.fft_inv = planner.plan_fft_inverse(n_phi);
        self.build_tables(n_phi);
    }

    /// Kick n: cos-phase on the angle grid, then the exact rocking
    /// translation of quasimomentum (integer carry moves the window).
    pub fn kick(&mut self, state: &mut QuantumLadderState, n: u64) {
        let nphi = state.n_phi();
        debug_assert_eq!(nphi, self.buf.len());
        // ladder -> angle: place c at ring index (base + i) mod N, then
        // unnormalized inverse transform gives psi(phi_j)
        let mask = nphi - 1;
        let shift = state.base.rem_euclid(nphi as i64) as usize;
        for i in 0..nphi {
            self.buf[(i + shift) & mask] = state.amps[i];
        }
        self.fft_inv.process(&mut self.buf);
        for (b, k) in self.buf.iter_mut().zip(&self.kick_phase) {
            *b *= k;
        }
        self.fft_fwd.process(&mut self.buf);
        let inv_n = 1.0 / nphi as f64;
        for i in 0..nphi {
            state.amps[i] = self.buf[(i + shift) & mask] * inv_n;
        }
        // rocking boost
        let delta = crate::classical::rocking_impulse(n, self.params.rocking_amplitude);
        if delta != 0.0 {
            let raw = state.quasimomentum + delta / self.params.hbar_eff;
            let carry = raw.floor();
            state.quasimomentum = raw - carry;
            state.base += carry as i64;
        }
    }

    /// Free flight after kick n: diagonal phase
    /// exp(-i rho_m^2 tau_n / (2 hbar_eff)).
    pub fn drift(&mut self, state: &mut QuantumLadderState, n: u64) {
        let tau = self
            .parity
            .drift_duration(n, self.params.period_asymmetry);
        let slot = (n % 2) as usize;
        let hbar = self.params.hbar_eff;
        let needs_rebuild = match &self.drift_cache[slot] {
            Some(t) => {
                t.base != state.base
                    || t.beta != state.quasimomentum
                    || t.tau != tau
                    || t.phases.len() != state.n_phi()
            }
            None => true,
        };
        if needs_rebuild {
            let phases: Vec<C64> = (0..state.n_phi())
                .map(|i| {
                    let rho = state.rho_at(i);
                    let theta = rho * rho * tau / (2.0 * hbar);
                    C64::new(theta.cos(), -theta.sin())
                })
                .collect();
            self.drift_cache[slot] = Some(DriftTable {
                base: state.base,
                beta: state.quasimomentum,
                tau,
                phases,
            });
        }
        let table = &self.drift_cache[slot].as_ref().unwrap().phases;
        for (a, d) in state.amps.iter_mut().zip(table) {
            *a *= d;
        }
    }

    /// One full Floquet period (kick then free flight), growing the grid
    /// first if population has reached the monitor radius.
    pub fn step(&mut self, state: &mut QuantumLadderState, n: u64) {
        if state.population_outside(self.m_max) >= GROW_TRIGGER {
            let before = state.n_phi();
            state.grow();
            self.m_max *= 2;
            self.replan(state.n_phi());
            self.events.push((n, before, state.n_phi()));
        }
        self.kick(state, n);
        self.drift(state, n);
    }
}

/// Specification of a quantum ensemble run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumRunSpec {
    pub params: DimensionlessParams,
    pub rho_l: f64,
    pub sigma_p: f64,
    pub n_beta_samples: usize,
    pub n_kicks: u32,
    pub grid: GridSpec,
    pub seed: u64,
    #[serde(default)]
    pub parity: Parity,
}

impl QuantumRunSpec {
    pub fn validate(&self) -> crate::error::Result<()> {
        self.params.validate()?;
        self.grid.validate()?;
        if self.n_kicks < 1 {
            return Err(crate::error::Error::invalid("n_kicks must be >= 1"));
        }
        if self.n_beta_samples < 1 {
            return Err(crate::error::Error::invalid("n_beta_samples must be >= 1"));
        }
        if !(self.sigma_p.is_finite() && self.sigma_p >= 0.0) {
            return Err(crate::error::Error::invalid(format!(
                "sigma_p must satisfy sigma_p >= 0 (got {})",
                self.sigma_p
            )));
        }
        if !self.rho_l.is_finite() {
            return Err(crate::error::Error::invalid("rho_l must be finite"));
        }
        Ok(())
    }

    /// Antithetic mirror pairs apply on fully symmetric runs.
    pub fn antithetic(&self) -> bool {
        self.params.rocking_amplitude == 0.0 && self.rho_l == 0.0 && self.sigma_p > 0.0
    }
}

/// Result of a quantum run: aggregated statistics plus grid events.
#[derive(Debug, Clone)]
pub struct QuantumRunOutput {
    pub stats: MomentumStats,
    pub grid_events: Vec<GridEvent>,
    pub antithetic: bool,
}

struct SampleResult {
    mean_shift: Vec<f64>,
    mean_sq_shift: Vec<f64>,
    hist: Histogram,
    events: Vec<(u64, usize, usize)>,
}

/// Initial momenta: stratified Gaussian over the sample index, or exact
/// mirror pairs (+rho, -rho) on symmetric runs so odd sampling noise
/// cancels identically.
fn initial_momenta(spec: &QuantumRunSpec) -> Vec<f64> {
    let n = spec.n_beta_samples;
    if spec.sigma_p == 0.0 {
        return vec![spec.rho_l; n];
    }
    if spec.antithetic() {
        let half = n.div_ceil(2);
        let mut out = Vec::with_capacity(2 * half);
        for j in 0..half {
            let mut rng = SubstreamRng::new(spec.seed, j as u64);
            let u = ((j as f64) + rng.uniform()) / half as f64;
            let rho = spec.sigma_p * normal_quantile(u.clamp(1e-12, 1.0 - 1e-12));
            out.push(rho);
            out.push(-rho);
        }
        out
    } else {
        (0..n)
            .map(|i| {
                let mut rng = SubstreamRng::new(spec.seed, i as u64);
                let u = ((i as f64) + rng.uniform()) / n as f64;
                spec.rho_l
                    + spec.sigma_p * normal_quantile(u.clamp(1e-12, 1.0 - 1e-12))
            })
            .collect()
    }
}

/// Propagate `n_beta_samples` independent plane-wave samples and
/// aggregate their momentum statistics with equal weights.
///
/// Samples run concurrently; the reduction over sample index is a fixed
/// pairwise tree, so output is independent of worker count.
pub fn run_quantum(spec: &QuantumRunSpec) -> QuantumRunOutput {
    spec.validate().expect("invalid QuantumRunSpec");
    let momenta = initial_momenta(spec);
    let n = momenta.len();
    let rows = spec.n_kicks as usize + 1;
    let bin_width = spec.params.hbar_eff;

    let results: Vec<SampleResult> = momenta
        .par_iter()
        .map(|&rho0| {
            let x = rho0 / spec.params.hbar_eff;
            let site = x.floor();
            let beta = x - site;
            let mut state = QuantumLadderState::plane_wave(
                spec.grid,
                site as i64,
                beta,
                spec.params.hbar_eff,
            );
            let mut prop = FloquetPropagator::new(spec.params, spec.parity, spec.grid);
            let mut mean_shift = Vec::with_capacity(rows);
            let mut mean_sq_shift = Vec::with_capacity(rows);
            let record =
                |state: &QuantumLadderState, ms: &mut Vec<f64>, mq: &mut Vec<f64>| {
                    let (m1, m2) = state.momentum_moments();
                    ms.push(m1 - spec.rho_l);
                    mq.push(m2 - 2.0 * spec.rho_l * m1 + spec.rho_l * spec.rho_l);
                };
            record(&state, &mut mean_shift, &mut mean_sq_shift);
            for kick in 1..=spec.n_kicks as u64 {
                prop.step(&mut state, kick);
                record(&state, &mut mean_shift, &mut mean_sq_shift);
            }
            debug_assert!((state.norm_sq() - 1.0).abs() < 1e-9);
            let mut hist = {
                let lo = state.rho_at(0);
                let hi = state.rho_at(state.n_phi() - 1);
                Histogram::spanning(bin_width, lo, hi)
            };
            for (i, c) in state.amps.iter().enumerate() {
                let p = c.norm_sqr();
                if p > 0.0 {
                    hist.deposit(state.rho_at(i), p);
                }
            }
            SampleResult {
                mean_shift,
                mean_sq_shift,
                hist,
                events: prop.events.clone(),
            }
        })
        .collect();

    // aggregate in sample order
    let nf = n as f64;
    let mut mean_shift = Vec::with_capacity(rows);
    let mut variance = Vec::with_capacity(rows);
    let mut sem = Vec::with_capacity(rows);
    for row in 0..rows {
        let means: Vec<f64> = results.iter().map(|r| r.mean_shift[row]).collect();
        let sqs: Vec<f64> = results.iter().map(|r| r.mean_sq_shift[row]).collect();
        let m = pairwise_sum(&means) / nf;
        let msq = pairwise_sum(&sqs) / nf;
        variance.push((msq - m * m).max(0.0));
        // spread of per-sample means
        let dev: Vec<f64> = means.iter().map(|&v| (v - m) * (v - m)).collect();
        sem.push((pairwise_sum(&dev) / (nf * nf)).sqrt());
        mean_shift.push(m);
    }
    let mut grid_events = Vec::new();
    for (idx, r) in results.iter().enumerate() {
        for &(kick, before, after) in &r.events {
            grid_events.push(GridEvent {
                sample: idx,
                kick,
                n_phi_before: before,
                n_phi_after: after,
            });
        }
    }
    let hist = Histogram::merge_all(results.into_iter().map(|r| r.hist).collect());
    QuantumRunOutput {
        stats: MomentumStats {
            rho_l: spec.rho_l,
            ensemble_size: n as u64,
            mean_shift,
            variance,
            sem,
            histogram: hist,
        },
        grid_events,
        antithetic: spec.antithetic(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_j;

    fn params(k: f64, b: f64, a: f64, hbar: f64) -> DimensionlessParams {
        DimensionlessParams::new(k, b, a, hbar).unwrap()
    }

    fn small_grid() -> GridSpec {
        GridSpec { m_max: 64, n_phi: 256 }
    }

    #[test]
    fn grid_defaults() {
        assert_eq!(GridSpec::for_hbar(1.0), GridSpec { m_max: 512, n_phi: 2048 });
        assert_eq!(GridSpec::for_hbar(0.25), GridSpec { m_max: 2048, n_phi: 8192 });
        assert!(GridSpec { m_max: 64, n_phi: 100 }.validate().is_err());
        assert!(GridSpec { m_max: 64, n_phi: 64 }.validate().is_err());
    }

    #[test]
    fn zero_kick_is_identity() {
        // K -> 0+, A = 0: amplitudes unchanged up to roundoff
        let p = params(1e-14, 0.0625, 0.0, 1.0);
        let mut s = QuantumLadderState::plane_wave(small_grid(), 3, 0.25, 1.0);
        let before = s.amps.clone();
        let mut prop = FloquetPropagator::new(p, Parity::OddLong, small_grid());
        prop.kick(&mut s, 1);
        for (a, b) in s.amps.iter().zip(&before) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn one_kick_populations_are_bessel_weights() {
        // from site 0: |c_m|^2 = J_m(K/hbar)^2 (Jacobi-Anger), to 1e-9
        for (k, hbar) in [(2.6, 1.0), (5.0, 1.0), (2.1, 0.7)] {
            let p = params(k, 0.0625, 0.0, hbar);
            let mut s = QuantumLadderState::plane_wave(small_grid(), 0, 0.0, hbar);
            let mut prop = FloquetPropagator::new(p, Parity::OddLong, small_grid());
            prop.kick(&mut s, 1);
            let arg = k / hbar;
            for m in -20i64..=20 {
                let i = (m - s.base) as usize;
                let got = s.amps[i].norm_sqr();
                let want = bessel_j(m.unsigned_abs() as u32, arg).powi(2);
                assert!(
                    (got - want).abs() < 1e-9,
                    "K={k} hbar={hbar} m={m}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn rocking_boost_shifts_quasimomentum_exactly() {
        // A = pi/2, hbar = 1, odd kick: beta shifted by +pi/2 mod 1
        // (= 0.5708), integer carry absorbed into the ladder offset
        let a = std::f64::consts::FRAC_PI_2;
        let p = params(1e-14, 0.0625, a, 1.0);
        let mut s = QuantumLadderState::plane_wave(small_grid(), 0, 0.0, 1.0);
        let base0 = s.base;
        let mut prop = FloquetPropagator::new(p, Parity::EvenLong, small_grid());
        prop.kick(&mut s, 1);
        assert!((s.quasimomentum - (a - 1.0)).abs() < 1e-15);
        assert!((s.quasimomentum - 0.5707963267948966).abs() < 1e-15);
        assert_eq!(s.base, base0 + 1);
        // even kick undoes it
        prop.kick(&mut s, 2);
        assert!(s.quasimomentum.abs() < 1e-15);
        assert_eq!(s.base, base0);
    }

    #[test]
    fn drift_is_diagonal() {
        let p = params(2.6, 0.0625, 0.0, 1.0);
        let mut s = QuantumLadderState::plane_wave(small_grid(), 0, 0.3, 1.0);
        // spread a little first
        let mut prop = FloquetPropagator::new(p, Parity::OddLong, small_grid());
        prop.kick(&mut s, 1);
        let pops_before: Vec<f64> = s.amps.iter().map(|c| c.norm_sqr()).collect();
        prop.drift(&mut s, 1);
        let pops_after: Vec<f64> = s.amps.iter().map(|c| c.norm_sqr()).collect();
        for (a, b) in pops_before.iter().zip(&pops_after) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn drift_composition_exponent_additivity() {
        // explicit phase check: (1+b)+(1-b) = 2 exactly
        let b = 0.0625;
        let hbar = 1.0;
        let p = params(2.6, b, 0.0, hbar);
        let p0 = params(2.6, 0.0, 0.0, hbar);
        let mut sa = QuantumLadderState::plane_wave(small_grid(), 2, 0.4, hbar);
        let mut sb = sa.clone();
        let mut prop = FloquetPropagator::new(p, Parity::OddLong, small_grid());
        let mut prop0 = FloquetPropagator::new(p0, Parity::OddLong, small_grid());
        prop.drift(&mut sa, 1);
        prop.drift(&mut sa, 2);
        prop0.drift(&mut sb, 1);
        prop0.drift(&mut sb, 2);
        for (x, y) in sa.amps.iter().zip(&sb.amps) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn unitary_over_200_kicks() {
        let p = params(5.0, 0.0625, 0.9, 1.0);
        let grid = GridSpec { m_max: 256, n_phi: 1024 };
        let mut s = QuantumLadderState::plane_wave(grid, 0, 0.37, 1.0);
        let mut prop = FloquetPropagator::new(p, Parity::OddLong, grid);
        for n in 1..=200 {
            prop.step(&mut s, n);
        }
        assert!((s.norm_sq() - 1.0).abs() < 1e-10, "norm {}", s.norm_sq());
    }

    #[test]
    fn grid_grows_rather_than_truncating() {
        // strong kicks on a deliberately tiny ring
        let p = params(8.0, 0.0, 0.0, 1.0);
        let grid = GridSpec { m_max: 8, n_phi: 64 };
        let mut s = QuantumLadderState::plane_wave(grid, 0, 0.1, 1.0);
        let mut prop = FloquetPropagator::new(p, Parity::OddLong, grid);
        for n in 1..=40 {
            prop.step(&mut s, n);
        }
        assert!(!prop.events.is_empty(), "expected at least one grid doubling");
        assert!((s.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn run_deterministic_across_invocations() {
        let spec = QuantumRunSpec {
            params: params(2.6, 0.0625, 0.5, 1.0),
            rho_l: 0.0,
            sigma_p: 1.0,
            n_beta_samples: 8,
            n_kicks: 30,
            grid: small_grid(),
            seed: 42,
            parity: Parity::OddLong,
        };
        let a = run_quantum(&spec);
        let b = run_quantum(&spec);
        assert_eq!(a.stats.mean_shift, b.stats.mean_shift);
        assert_eq!(a.stats.histogram.mass, b.stats.histogram.mass);
    }

    #[test]
    fn symmetric_run_mean_vanishes() {
        // A = 0, rho_L = 0, antithetic pairs: |<rho>| < 1e-6 L at all times
        let k = 2.6;
        let spec = QuantumRunSpec {
            params: params(k, 0.0625, 0.0, 1.0),
            rho_l: 0.0,
            sigma_p: 1.0,
            n_beta_samples: 16,
            n_kicks: 60,
            grid: GridSpec { m_max: 128, n_phi: 512 },
            seed: 7,
            parity: Parity::OddLong,
        };
        assert!(spec.antithetic());
        let out = run_quantum(&spec);
        let scale = 1e-6 * crate::analytic::uncorrelated_diffusion(k);
        for (t, m) in out.stats.mean_shift.iter().enumerate() {
            assert!(m.abs() < scale, "kick {t}: <rho> = {m}");
        }
    }

    #[test]
    fn grid_independence() {
        // doubling the ladder and angle grid leaves <rho> unchanged to
        // 1e-6 in the ratchet sweep regime
        let mk = |grid| QuantumRunSpec {
            params: params(2.6, 0.0625, -std::f64::consts::FRAC_PI_2, 1.0),
            rho_l: 0.0,
            sigma_p: 0.5,
            n_beta_samples: 4,
            n_kicks: 120,
            grid,
            seed: 42,
            parity: Parity::default(),
        };
        let small = run_quantum(&mk(GridSpec { m_max: 512, n_phi: 2048 }));
        let large = run_quantum(&mk(GridSpec { m_max: 1024, n_phi: 4096 }));
        let d = (small.stats.final_mean_shift() - large.stats.final_mean_shift()).abs();
        assert!(d < 1e-6, "grid doubling changed <rho> by {d:.2e}");
    }

    #[test]
    fn histogram_mass_equals_sample_count() {
        let spec = QuantumRunSpec {
            params: params(2.6, 0.0625, 0.3, 1.0),
            rho_l: 2.0,
            sigma_p: 1.0,
            n_beta_samples: 6,
            n_kicks: 20,
            grid: small_grid(),
            seed: 3,
            parity: Parity::OddLong,
        };
        let out = run_quantum(&spec);
        assert!((out.stats.histogram.total_mass() - 6.0).abs() < 1e-9);
        assert_eq!(out.stats.ensemble_size, 6);
    }
}

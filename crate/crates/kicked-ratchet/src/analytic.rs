//! Closed-form predictions for the two-period kicked rotor with rocking:
//! saturated current amplitude, its time dependence, the ratchet and
//! localization timescales, the uncorrelated diffusion rate, and the
//! damping from a finite initial momentum width.

use serde::Serialize;

use crate::special::bessel_j;
use crate::units::DimensionlessParams;

/// Saturated current amplitude with the degenerate-symmetry marker.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaxCurrent {
    /// Signed amplitude I_0; the leading minus sign of the closed form is
    /// kept literally, so I_0 < 0 near the first maximum of J_2(K).
    pub value: f64,
    /// Set when b = 0: the numerator J_1(0) vanishes together with the
    /// denominator, and the physical limit of the ratio times the bracket
    /// is 0 (time symmetry restored, no current).
    pub degenerate_symmetry: bool,
}

/// I_0 = -K J_1(2Kb) / (1 - J_0(2Kb)^2) * [J_0(2Kb) J_2((1-b)K) + J_2((1+b)K)].
pub fn max_current(params: &DimensionlessParams) -> MaxCurrent {
    let k = params.kick_strength;
    let b = params.period_asymmetry;
    if b == 0.0 {
        return MaxCurrent {
            value: 0.0,
            degenerate_symmetry: true,
        };
    }
    let x = 2.0 * k * b;
    let prefactor = -k * bessel_j(1, x) / (1.0 - bessel_j(0, x).powi(2));
    let bracket =
        bessel_j(0, x) * bessel_j(2, (1.0 - b) * k) + bessel_j(2, (1.0 + b) * k);
    MaxCurrent {
        value: prefactor * bracket,
        degenerate_symmetry: false,
    }
}

/// Small-b limit of the current amplitude, J_2(K)/b. This is the
/// K^2 J_2(K)/b form of the simplified literature formula normalized by
/// K^2; the exact amplitude satisfies lim_{b->0} I_0 * b = -J_2(K).
pub fn simplified_max_current(kick_strength: f64, period_asymmetry: f64) -> f64 {
    bessel_j(2, kick_strength) / period_asymmetry
}

/// Saturation profile F(t) = 1 - J_0(2Kb)^{2t-2}, monotone from F(1) = 0
/// towards 1. `t` counts kicks.
///
/// *Panics* if `t < 1`.
pub fn time_factor(params: &DimensionlessParams, t: u32) -> f64 {
    assert!(t >= 1, "time_factor: t must be >= 1 (got {t})");
    let j0 = bessel_j(0, 2.0 * params.kick_strength * params.period_asymmetry);
    1.0 - j0.powi(2 * t as i32 - 2)
}

/// Phase of the current, (1-b) A - 2 b rho_L (radians).
pub fn phase(params: &DimensionlessParams, rho_l: f64) -> f64 {
    (1.0 - params.period_asymmetry) * params.rocking_amplitude
        - 2.0 * params.period_asymmetry * rho_l
}

/// Experimental phase coordinate Phi = (2 rho_L b - A) / pi used for the
/// current-vs-phase plots; differs from [`phase`] by sign and an O(b)
/// term on A.
pub fn phase_plot_coordinate(params: &DimensionlessParams, rho_l: f64) -> f64 {
    (2.0 * rho_l * params.period_asymmetry - params.rocking_amplitude)
        / std::f64::consts::PI
}

/// Momentum asymmetry I(t) = I_0 sin((1-b)A - 2b rho_L) F(t).
pub fn current(params: &DimensionlessParams, rho_l: f64, t: u32) -> f64 {
    max_current(params).value * phase(params, rho_l).sin() * time_factor(params, t)
}

/// Classical timescale for the current to develop, t_R = 1/(Kb)^2 kicks.
/// Infinite when b = 0.
pub fn ratchet_time(params: &DimensionlessParams) -> f64 {
    let kb = params.kick_strength * params.period_asymmetry;
    if kb == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (kb * kb)
    }
}

/// Order-of-magnitude localization time t* ~ K^2 / hbar_eff^2 kicks.
/// A heuristic scale, not a sharp prediction; comparisons against it use
/// factor-2 tolerances.
pub fn localization_time(params: &DimensionlessParams) -> f64 {
    (params.kick_strength / params.hbar_eff).powi(2)
}

/// Uncorrelated momentum diffusion rate D = K^2 / 2 per kick.
pub fn uncorrelated_diffusion(kick_strength: f64) -> f64 {
    kick_strength * kick_strength / 2.0
}

/// Damping of the current amplitude for an initial momentum spread
/// sigma_p: I_0 -> I_0 exp(-4 sigma_p^2 b^2).
pub fn width_damping(sigma_p: f64, period_asymmetry: f64) -> f64 {
    (-4.0 * sigma_p.powi(2) * period_asymmetry.powi(2)).exp()
}

/// All scalar predictions for one parameter set, as reported in CSV
/// headers and manifests.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalyticPrediction {
    pub max_current: f64,
    pub degenerate_symmetry: bool,
    pub ratchet_time: f64,
    pub localization_time: f64,
    pub uncorrelated_diffusion: f64,
    /// (1-b)A - 2b rho_L, radians.
    pub phase: f64,
    /// exp(-4 sigma_p^2 b^2).
    pub damping: f64,
}

impl AnalyticPrediction {
    pub fn evaluate(params: &DimensionlessParams, rho_l: f64, sigma_p: f64) -> Self {
        let mc = max_current(params);
        AnalyticPrediction {
            max_current: mc.value,
            degenerate_symmetry: mc.degenerate_symmetry,
            ratchet_time: ratchet_time(params),
            localization_time: localization_time(params),
            uncorrelated_diffusion: uncorrelated_diffusion(params.kick_strength),
            phase: phase(params, rho_l),
            damping: width_damping(sigma_p, params.period_asymmetry),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(k: f64, b: f64, a: f64, hbar: f64) -> DimensionlessParams {
        DimensionlessParams::new(k, b, a, hbar).unwrap()
    }

    #[test]
    fn amplitude_near_first_j2_maximum() {
        // frozen from the 40-digit evaluation of the closed form
        let mc = max_current(&params(2.6, 1.0 / 16.0, 0.0, 1.0));
        assert!((mc.value - (-7.250335279264375)).abs() < 1e-12);
        // |I_0| ~ 7.5 within 15%
        assert!((mc.value.abs() - 7.5).abs() / 7.5 < 0.15);
        assert!(!mc.degenerate_symmetry);
    }

    #[test]
    fn zero_asymmetry_is_degenerate() {
        let mc = max_current(&params(3.0, 0.0, 0.0, 1.0));
        assert_eq!(mc.value, 0.0);
        assert!(mc.degenerate_symmetry);
        assert_eq!(current(&params(3.0, 0.0, 1.0, 1.0), 2.0, 50), 0.0);
    }

    #[test]
    fn close_to_simplified_formula() {
        let exact = max_current(&params(2.6, 1.0 / 16.0, 0.0, 1.0)).value.abs();
        let simplified = simplified_max_current(2.6, 1.0 / 16.0);
        assert!((exact / simplified - 1.0).abs() < 0.20, "ratio {}", exact / simplified);
    }

    #[test]
    fn time_factor_profile() {
        let p = params(2.6, 1.0 / 16.0, 0.0, 1.0);
        assert_eq!(time_factor(&p, 1), 0.0);
        // frozen: 1 - J_0(0.325)^18
        assert!((time_factor(&p, 10) - 0.38028007671568934).abs() < 1e-12);
        assert!(time_factor(&p, 100_000) > 1.0 - 1e-9);
        // monotone nondecreasing; strictly below 1 over the experimental
        // horizon, saturating to 1.0 in floating point far beyond it
        for (k, b) in [(2.6, 1.0 / 16.0), (3.3, 1.0 / 32.0), (2.1, 1.0 / 8.0), (5.0, 0.3)] {
            let p = params(k, b, 0.0, 1.0);
            let mut prev = time_factor(&p, 1);
            for t in 2..300 {
                let f = time_factor(&p, t);
                assert!(f >= prev && (0.0..=1.0).contains(&f), "K={k} b={b} t={t}");
                if t <= 120 && (k, b) != (5.0, 0.3) {
                    assert!(f < 1.0, "K={k} b={b} t={t}");
                }
                prev = f;
            }
        }
    }

    #[test]
    #[should_panic]
    fn time_factor_rejects_t_zero() {
        time_factor(&params(2.6, 0.0625, 0.0, 1.0), 0);
    }

    #[test]
    fn current_vanishes_at_symmetric_point() {
        for k in [1.0, 2.6, 5.0] {
            for b in [0.01, 0.0625, 0.2] {
                let p = params(k, b, 0.0, 1.0);
                for t in [1, 7, 120] {
                    assert_eq!(current(&p, 0.0, t), 0.0);
                }
            }
        }
    }

    #[test]
    fn current_saturates_at_amplitude_for_phase_half_pi() {
        // A chosen for Phi = 0.5 at rho_L = 0 (A = -pi/2)
        let p = params(2.6, 1.0 / 16.0, -PI / 2.0, 1.0);
        assert!((phase_plot_coordinate(&p, 0.0) - 0.5).abs() < 1e-15);
        let i_inf = max_current(&p).value * phase(&p, 0.0).sin();
        assert!((i_inf - 7.215422933176503).abs() < 1e-12);
        // within 5% of |I_0| since sin((1-b)pi/2) ~ 0.995
        assert!((i_inf / 7.250335279264375 - 1.0).abs() < 0.05);
        // and the saturated current approaches it
        let i_500 = current(&p, 0.0, 500);
        assert!((i_500 / i_inf - 1.0).abs() < 1e-6);
    }

    #[test]
    fn current_antisymmetric_in_rho_l_without_rocking() {
        let p = params(3.3, 1.0 / 16.0, 0.0, 1.0);
        for rho_l in [0.5, 3.0, 11.0, 40.0] {
            for t in [2, 30, 120] {
                assert_eq!(current(&p, rho_l, t), -current(&p, -rho_l, t));
            }
        }
    }

    #[test]
    fn current_periodic_in_rho_l() {
        // period pi/b in rho_L at fixed A, t, via sin periodicity
        let b = 1.0 / 16.0;
        let p = params(3.3, b, 0.7, 1.0);
        let period = PI / b;
        for rho_l in [0.0, 1.3, 17.0] {
            let a = current(&p, rho_l, 60);
            let c = current(&p, rho_l + period, 60);
            assert!((a - c).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn amplitude_scales_inversely_with_b() {
        // I_0(b) * b approximately b-independent for small b at fixed K
        let i16 = max_current(&params(3.3, 1.0 / 16.0, 0.0, 1.0)).value;
        let i32 = max_current(&params(3.3, 1.0 / 32.0, 0.0, 1.0)).value;
        let ratio = (i16 / 16.0) / (i32 / 32.0);
        assert!((ratio - 1.0).abs() < 0.15, "ratio {ratio}");
    }

    #[test]
    fn timescales() {
        let p = params(2.6, 1.0 / 16.0, 0.0, 1.0);
        assert!((ratchet_time(&p) - 37.869822485207095).abs() < 1e-10);
        let p = params(2.1, 1.0 / 8.0, 0.0, 0.25);
        assert!((ratchet_time(&p) - 14.512471655328797).abs() < 1e-10);
        assert!((localization_time(&p) - 70.56).abs() < 1e-10);
        let p = params(5.0, 0.0, 0.0, 1.0);
        assert!(ratchet_time(&p).is_infinite());
        assert_eq!(localization_time(&p), 25.0);
        // t* scales as hbar^-2
        let p1 = params(5.0, 0.0, 0.0, 1.0);
        let p2 = params(5.0, 0.0, 0.0, 2.0);
        assert!((localization_time(&p1) / localization_time(&p2) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn diffusion_rate() {
        assert!((uncorrelated_diffusion(2.6) - 3.38).abs() < 1e-12);
        assert!((uncorrelated_diffusion(5.0) - 12.5).abs() < 1e-12);
        assert!(uncorrelated_diffusion(1e-9) < 1e-17);
    }

    #[test]
    fn damping_factor() {
        assert_eq!(width_damping(0.0, 0.125), 1.0);
        assert!((width_damping(1.0, 0.125) - (-1.0f64 / 16.0).exp()).abs() < 1e-15);
        assert!((width_damping(4.0, 0.0625) - (-0.25f64).exp()).abs() < 1e-15);
        assert!((width_damping(1.0, 0.125) - 0.9394130628134758).abs() < 1e-12);
        assert!((width_damping(4.0, 0.0625) - 0.7788007830714049).abs() < 1e-12);
    }
}

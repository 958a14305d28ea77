//! Counter-based random number generation with per-trajectory substreams.
//!
//! Every stochastic object in a run is drawn from a SplitMix64 stream
//! keyed by (seed, stream index), so results are bit-for-bit reproducible
//! regardless of how trajectories are scheduled across workers.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 substream keyed by (seed, stream).
#[derive(Debug, Clone)]
pub struct SubstreamRng {
    state: u64,
}

impl SubstreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        // decorrelate streams by hashing the stream index into the seed
        let state = mix64(seed ^ mix64(stream.wrapping_add(GOLDEN_GAMMA)));
        SubstreamRng { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Standard normal pair by Box-Muller.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        // reject u1 = 0 to keep ln finite
        let mut u1 = self.uniform();
        while u1 == 0.0 {
            u1 = self.uniform();
        }
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (mag * angle.cos(), mag * angle.sin())
    }

    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }
}

/// Derive a child seed for a named sub-task (scenario grid point, engine
/// run) from a base seed and a stable index.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_mul(GOLDEN_GAMMA) ^ 0xA5A5_A5A5_A5A5_A5A5))
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9). Used for stratified Gaussian sampling.
#[allow(clippy::excessive_precision)] // canonical published coefficients
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile: p must be in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_reproducible() {
        let mut a = SubstreamRng::new(42, 7);
        let mut b = SubstreamRng::new(42, 7);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substreams_distinct() {
        let va: Vec<u64> = {
            let mut r = SubstreamRng::new(42, 0);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let vb: Vec<u64> = {
            let mut r = SubstreamRng::new(42, 1);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_ne!(va, vb);
    }

    #[test]
    fn uniform_range_and_moments() {
        let mut r = SubstreamRng::new(1, 0);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn normal_moments() {
        let mut r = SubstreamRng::new(3, 11);
        let n = 200_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let z = r.normal();
            s += z;
            s2 += z * z;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn quantile_reference_points() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.9599639845400542).abs() < 1e-7);
        assert!((normal_quantile(0.025) + 1.9599639845400542).abs() < 1e-7);
        assert!((normal_quantile(0.8413447460685429) - 1.0).abs() < 1e-7);
        assert!((normal_quantile(1e-9) + 5.997807015007687).abs() < 1e-5);
        assert!((normal_quantile(0.9999999) - 5.199337582192817).abs() < 1e-5);
        // antisymmetry
        for p in [0.01, 0.2, 0.37, 0.49] {
            assert!((normal_quantile(p) + normal_quantile(1.0 - p)).abs() < 1e-12);
        }
    }
}

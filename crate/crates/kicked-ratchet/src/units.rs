//! Conversion between laboratory parameters and the dimensionless kicked
//! rotor parameters.
//!
//! Scalings: angle phi = 2 k_L x, momentum rho = 2 T k_L p / M, time
//! tau = t / T, effective Planck constant hbar_eff = 8 omega_R T. The
//! rocking amplitude produced by a linear frequency ramp of +/- delta_f
//! over one pulse is A = 2 pi t_p delta_f, and a constant AOM offset
//! Delta_f puts the atoms at rho_L = m lambda^2 Delta_f hbar_eff /
//! (4 pi hbar) in the lattice frame.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};

/// Laboratory parameters of a pulsed-lattice run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabParams {
    /// Atomic mass M (kg).
    pub atom_mass: f64,
    /// Lattice laser wavelength lambda (m).
    pub wavelength: f64,
    /// Atomic recoil frequency omega_R (rad/s). Taken as an input, not
    /// derived; see [`recoil_consistency`].
    pub recoil_freq: f64,
    /// Kick period T (s).
    pub pulse_period: f64,
    /// Kick width t_p (s).
    pub pulse_width: f64,
    /// Lattice depth V_0 (J), accepted as given.
    pub lattice_depth: f64,
    /// Constant AOM frequency offset Delta_f (Hz, signed); the two beams
    /// differ by 2 Delta_f.
    pub freq_offset: f64,
    /// Per-period linear frequency modulation amplitude delta_f (Hz,
    /// signed).
    pub freq_mod_amplitude: f64,
}

impl LabParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.atom_mass, "atom_mass"),
            (self.wavelength, "wavelength"),
            (self.recoil_freq, "recoil_freq"),
            (self.pulse_period, "pulse_period"),
            (self.pulse_width, "pulse_width"),
            (self.lattice_depth, "lattice_depth"),
        ];
        for (v, name) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be strictly positive (got {v})"
                )));
            }
        }
        for (v, name) in [
            (self.freq_offset, "freq_offset"),
            (self.freq_mod_amplitude, "freq_mod_amplitude"),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite (got {v})")));
            }
        }
        if self.pulse_width >= self.pulse_period {
            return Err(Error::invalid(format!(
                "pulse_width must be smaller than pulse_period ({} >= {})",
                self.pulse_width, self.pulse_period
            )));
        }
        Ok(())
    }

    /// Laser wavevector k_L = 2 pi / lambda (rad/m).
    pub fn wavevector(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// The four dimensionless knobs of the kicked rotor with broken symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// Stochasticity parameter K.
    pub kick_strength: f64,
    /// Period asymmetry b; free flights alternate between 1+b and 1-b.
    pub period_asymmetry: f64,
    /// Rocking amplitude A (signed).
    pub rocking_amplitude: f64,
    /// Effective Planck constant hbar_eff.
    pub hbar_eff: f64,
}

impl DimensionlessParams {
    pub fn new(
        kick_strength: f64,
        period_asymmetry: f64,
        rocking_amplitude: f64,
        hbar_eff: f64,
    ) -> Result<Self> {
        let p = DimensionlessParams {
            kick_strength,
            period_asymmetry,
            rocking_amplitude,
            hbar_eff,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kick_strength.is_finite() && self.kick_strength > 0.0) {
            return Err(Error::invalid(format!(
                "K must satisfy K > 0 (got {})",
                self.kick_strength
            )));
        }
        if !(self.period_asymmetry.is_finite()
            && (0.0..1.0).contains(&self.period_asymmetry))
        {
            return Err(Error::invalid(format!(
                "b must satisfy 0 <= b < 1 (got {})",
                self.period_asymmetry
            )));
        }
        if !self.rocking_amplitude.is_finite() {
            return Err(Error::invalid(format!(
                "A must be finite (got {})",
                self.rocking_amplitude
            )));
        }
        if !(self.hbar_eff.is_finite() && self.hbar_eff > 0.0) {
            return Err(Error::invalid(format!(
                "hbar_eff must satisfy hbar_eff > 0 (got {})",
                self.hbar_eff
            )));
        }
        Ok(())
    }
}

/// hbar_eff = 8 omega_R T.
pub fn hbar_eff_from_lab(lab: &LabParams) -> f64 {
    8.0 * lab.recoil_freq * lab.pulse_period
}

/// Scaled momentum of the lattice rest frame,
/// rho_L = M lambda^2 Delta_f hbar_eff / (4 pi hbar).
pub fn rho_l_from_lab(lab: &LabParams, hbar_eff: f64) -> f64 {
    lab.atom_mass * lab.wavelength.powi(2) * lab.freq_offset * hbar_eff / (4.0 * PI * HBAR)
}

/// Inverse of [`rho_l_from_lab`]: the constant AOM offset that realizes a
/// target rho_L.
pub fn freq_offset_for_rho_l(rho_l: f64, lab: &LabParams, hbar_eff: f64) -> f64 {
    rho_l * 4.0 * PI * HBAR / (lab.atom_mass * lab.wavelength.powi(2) * hbar_eff)
}

/// Rocking amplitude A = 2 pi t_p delta_f for square pulses of width t_p.
pub fn rocking_from_lab(lab: &LabParams) -> f64 {
    2.0 * PI * lab.pulse_width * lab.freq_mod_amplitude
}

/// Inverse of [`rocking_from_lab`].
pub fn freq_mod_for_rocking(rocking: f64, lab: &LabParams) -> f64 {
    rocking / (2.0 * PI * lab.pulse_width)
}

/// Scaled momentum rho = 2 T k_L p / M for a lab momentum p (kg m/s).
pub fn momentum_lab_to_scaled(p: f64, lab: &LabParams) -> f64 {
    2.0 * lab.pulse_period * lab.wavevector() * p / lab.atom_mass
}

/// Inverse of [`momentum_lab_to_scaled`].
pub fn momentum_scaled_to_lab(rho: f64, lab: &LabParams) -> f64 {
    rho * lab.atom_mass / (2.0 * lab.pulse_period * lab.wavevector())
}

/// Kick strength from the delta-pulse impulse area,
/// K = hbar_eff V_0 t_p / hbar.
pub fn kick_strength_from_lab(lab: &LabParams) -> f64 {
    hbar_eff_from_lab(lab) * lab.lattice_depth * lab.pulse_width / HBAR
}

/// Result of checking the quoted recoil frequency against
/// hbar k_L^2 / (2 M).
#[derive(Debug, Clone, Copy)]
pub struct RecoilCheck {
    pub given: f64,
    pub derived: f64,
    pub rel_err: f64,
    /// true when |given/derived - 1| <= 1%.
    pub consistent: bool,
}

/// Compare the input omega_R with the value implied by lambda and M.
/// Inconsistency is a warning, not an error: published recoil
/// frequencies are often rounded.
pub fn recoil_consistency(lab: &LabParams) -> RecoilCheck {
    let derived = HBAR * lab.wavevector().powi(2) / (2.0 * lab.atom_mass);
    let rel_err = (lab.recoil_freq - derived).abs() / derived;
    RecoilCheck {
        given: lab.recoil_freq,
        derived,
        rel_err,
        consistent: rel_err <= 0.01,
    }
}

/// Full lab-to-dimensionless conversion. Returns the parameter block, the
/// lattice-frame momentum rho_L, and the recoil consistency check.
pub fn dimensionless_from_lab(
    lab: &LabParams,
) -> Result<(DimensionlessParams, f64, RecoilCheck)> {
    lab.validate()?;
    let hbar_eff = hbar_eff_from_lab(lab);
    let params = DimensionlessParams::new(
        kick_strength_from_lab(lab),
        period_asymmetry_from_lab(lab),
        rocking_from_lab(lab),
        hbar_eff,
    )?;
    let rho_l = rho_l_from_lab(lab, hbar_eff);
    Ok((params, rho_l, recoil_consistency(lab)))
}

/// The period asymmetry is not itself a lab quantity (the pulse programmer
/// realizes T(1+b):T(1-b) directly); the convention here is b = t_p / T,
/// the smallest asymmetry resolvable with square pulses of width t_p.
/// Scenario code always overrides b explicitly.
fn period_asymmetry_from_lab(lab: &LabParams) -> f64 {
    lab.pulse_width / lab.pulse_period
}

/// Parse a key = value lab-parameters file.
///
/// Schema (all keys required, SI units, `#` starts a comment):
///
/// ```text
/// atom_mass_kg          = 2.2069469514537008e-25
/// wavelength_m          = 852e-9
/// recoil_freq_rad_s     = 13194.689145077132
/// pulse_period_s        = 9.47e-6
/// pulse_width_s         = 296e-9
/// lattice_depth_j       = 9.3e-28
/// freq_offset_hz        = 0.0
/// freq_mod_amplitude_hz = 0.0
/// ```
pub fn parse_lab_file(text: &str) -> Result<LabParams> {
    let mut fields: std::collections::BTreeMap<&str, f64> = Default::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("lab file line {}: expected key = value", lineno + 1))
        })?;
        let v: f64 = value.trim().parse().map_err(|_| {
            Error::Format(format!(
                "lab file line {}: cannot parse number {:?}",
                lineno + 1,
                value.trim()
            ))
        })?;
        fields.insert(key.trim_end(), v);
    }
    let get = |key: &str| {
        fields
            .iter()
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Format(format!("lab file: missing key {key}")))
    };
    let lab = LabParams {
        atom_mass: get("atom_mass_kg")?,
        wavelength: get("wavelength_m")?,
        recoil_freq: get("recoil_freq_rad_s")?,
        pulse_period: get("pulse_period_s")?,
        pulse_width: get("pulse_width_s")?,
        lattice_depth: get("lattice_depth_j")?,
        freq_offset: get("freq_offset_hz")?,
        freq_mod_amplitude: get("freq_mod_amplitude_hz")?,
    };
    lab.validate()?;
    Ok(lab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{CS133_MASS, CS_D2_WAVELENGTH};

    fn cesium_lab() -> LabParams {
        LabParams {
            atom_mass: CS133_MASS,
            wavelength: 852e-9,
            recoil_freq: 2.0 * PI * 2100.0,
            pulse_period: 9.47e-6,
            pulse_width: 296e-9,
            lattice_depth: 9.3e-28,
            freq_offset: 0.0,
            freq_mod_amplitude: 0.0,
        }
    }

    /// Same apparatus with omega_R derived from lambda and M, so the
    /// momentum-scale identities hold exactly.
    fn self_consistent_lab() -> LabParams {
        let mut lab = cesium_lab();
        lab.recoil_freq = HBAR * lab.wavevector().powi(2) / (2.0 * lab.atom_mass);
        lab
    }

    #[test]
    fn hbar_eff_near_one_for_quoted_numbers() {
        let h = hbar_eff_from_lab(&cesium_lab());
        assert!((0.98..=1.02).contains(&h), "hbar_eff = {h}");
        assert!((h - 0.9996296496310435).abs() < 1e-12);
    }

    #[test]
    fn hbar_eff_scales_linearly_with_period() {
        let mut lab = cesium_lab();
        let h1 = hbar_eff_from_lab(&lab);
        lab.pulse_period /= 4.0;
        assert!((hbar_eff_from_lab(&lab) - h1 / 4.0).abs() < 1e-15);
        // T = 2.3675 us gives hbar_eff ~ 0.25
        assert!((hbar_eff_from_lab(&lab) - 0.25).abs() < 0.01);
    }

    #[test]
    fn zero_period_rejected() {
        let mut lab = cesium_lab();
        lab.pulse_period = 0.0;
        assert!(lab.validate().is_err());
    }

    #[test]
    fn rho_l_zero_for_stationary_lattice() {
        assert_eq!(rho_l_from_lab(&cesium_lab(), 1.0), 0.0);
    }

    #[test]
    fn rho_l_linear_and_invertible() {
        let mut lab = cesium_lab();
        lab.freq_offset = 2.0e5;
        let r1 = rho_l_from_lab(&lab, 1.0);
        lab.freq_offset *= 2.0;
        let r2 = rho_l_from_lab(&lab, 1.0);
        assert!((r2 / r1 - 2.0).abs() < 1e-14);

        // choose Delta_f so rho_L = 8 pi, then recover it
        let target = 8.0 * PI;
        let df = freq_offset_for_rho_l(target, &lab, 1.0);
        assert!((df - 2.079001492605751e5).abs() < 1e-6, "df = {df}");
        lab.freq_offset = df;
        let back = rho_l_from_lab(&lab, 1.0);
        assert!((back / target - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rocking_matches_apparatus_limit() {
        let mut lab = cesium_lab();
        lab.freq_mod_amplitude = 1.25e6;
        let a = rocking_from_lab(&lab);
        let target = 3.0 * PI / 4.0;
        assert!((a / target - 1.0).abs() < 0.02, "A = {a}");
        assert!((a - 2.324778563656447).abs() < 1e-12);

        lab.freq_mod_amplitude = 0.0;
        assert_eq!(rocking_from_lab(&lab), 0.0);

        lab.freq_mod_amplitude = -1.25e6;
        assert!((rocking_from_lab(&lab) + 2.324778563656447).abs() < 1e-12);
    }

    #[test]
    fn momentum_scale_and_roundtrip() {
        let lab = self_consistent_lab();
        assert_eq!(momentum_lab_to_scaled(0.0, &lab), 0.0);

        // two-photon recoil maps to exactly one ladder unit
        let p = 2.0 * HBAR * lab.wavevector();
        let rho = momentum_lab_to_scaled(p, &lab);
        let hbar_eff = hbar_eff_from_lab(&lab);
        assert!((rho / hbar_eff - 1.0).abs() < 1e-12);

        let back = momentum_scaled_to_lab(rho, &lab);
        assert!((back / p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rocking_roundtrip() {
        let mut lab = cesium_lab();
        lab.freq_mod_amplitude = 7.5e5;
        let a = rocking_from_lab(&lab);
        assert!((freq_mod_for_rocking(a, &lab) / 7.5e5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recoil_check_flags_rounded_value() {
        // the rounded 2.1 kHz recoil frequency differs from the
        // wavelength-derived one by ~1.5%
        let check = recoil_consistency(&cesium_lab());
        assert!(!check.consistent);
        assert!((check.rel_err - 0.0152).abs() < 0.002, "rel_err = {}", check.rel_err);

        let mut lab = cesium_lab();
        lab.wavelength = CS_D2_WAVELENGTH;
        let check = recoil_consistency(&lab);
        assert!(check.rel_err < 0.02);
    }

    #[test]
    fn dimensionless_params_invariants() {
        assert!(DimensionlessParams::new(2.6, 0.0625, 0.0, 1.0).is_ok());
        assert!(DimensionlessParams::new(0.0, 0.0625, 0.0, 1.0).is_err());
        assert!(DimensionlessParams::new(2.6, 1.5, 0.0, 1.0).is_err());
        assert!(DimensionlessParams::new(2.6, -0.1, 0.0, 1.0).is_err());
        assert!(DimensionlessParams::new(2.6, 0.0625, f64::INFINITY, 1.0).is_err());
        assert!(DimensionlessParams::new(2.6, 0.0625, 0.0, 0.0).is_err());
    }

    #[test]
    fn lab_file_roundtrip() {
        let text = "\
# apparatus snapshot
atom_mass_kg          = 2.2069469514537008e-25
wavelength_m          = 852e-9
recoil_freq_rad_s     = 13194.689145077132   # 2 pi x 2100
pulse_period_s        = 9.47e-6
pulse_width_s         = 296e-9
lattice_depth_j       = 9.3e-28
freq_offset_hz        = 2.079e5
freq_mod_amplitude_hz = -1.25e6
";
        let lab = parse_lab_file(text).unwrap();
        assert!((lab.atom_mass - 2.206946951453701e-25).abs() < 1e-38);
        assert!((lab.freq_mod_amplitude + 1.25e6).abs() < 1e-6);
        let (params, rho_l, _) = dimensionless_from_lab(&lab).unwrap();
        assert!(params.kick_strength > 0.0);
        assert!(rho_l > 25.0 && rho_l < 26.0); // ~ 8 pi
    }

    #[test]
    fn lab_file_missing_key() {
        assert!(parse_lab_file("atom_mass_kg = 1e-25\n").is_err());
    }
}

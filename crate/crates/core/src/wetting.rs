//! Cassie-Baxter wetting of composite (air-trapping) surfaces.
//!
//! The apparent angle on a surface whose solid fraction is `f` follows
//!
//! ```text
//! cos θ* = f·cos θ + f − 1
//! ```
//!
//! where `θ` is the intrinsic angle on the flat, unstructured substrate. The composite
//! state is assumed stable for every input; no Cassie-to-Wenzel transition is modelled.
//!
//! Hysteresis is carried as a single flat-substrate value `Δθ` (advancing minus
//! receding). The apparent advancing/receding pair is the Cassie image of
//! `θ ± Δθ/2`. This is a modelling choice, not a roughness theory; set `Δθ = 0`
//! to disable it.
//!
//! Angles are degrees at every public boundary and radians inside this module.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surface tension of water at 20 °C in N/m.
pub const WATER_SURFACE_TENSION: f64 = 72.8e-3;

/// Intrinsic water contact angle on flat PMMA used as the default substrate, degrees.
pub const PMMA_WATER_THETA: f64 = 81.0;

/// How far outside [-1, 1] an arccos argument may stray before it is treated as a defect.
pub const ACOS_CLAMP_TOLERANCE: f64 = 1e-12;

#[inline]
fn to_rad(deg: f64) -> f64 {
    deg * (PI / 180.0)
}

#[inline]
fn to_deg(rad: f64) -> f64 {
    rad * (180.0 / PI)
}

/// Solid-liquid contact area per unit projected area, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Fraction(f64);

impl Fraction {
    pub const ZERO: Fraction = Fraction(0.0);
    pub const ONE: Fraction = Fraction(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Fraction(value))
        } else {
            Err(Error::invalid(
                "fraction",
                format!("{value} is not in [0, 1]"),
            ))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Fraction {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Fraction::new(value)
    }
}

impl From<Fraction> for f64 {
    fn from(f: Fraction) -> f64 {
        f.0
    }
}

/// Probe liquid on a substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialFields")]
pub struct Material {
    name: String,
    theta_flat: f64,
    hysteresis: f64,
    surface_tension: f64,
}

#[derive(Deserialize)]
struct MaterialFields {
    name: String,
    theta_flat: f64,
    hysteresis: f64,
    surface_tension: f64,
}

impl TryFrom<MaterialFields> for Material {
    type Error = Error;
    fn try_from(m: MaterialFields) -> Result<Self> {
        Material::new(m.name, m.theta_flat, m.hysteresis, m.surface_tension)
    }
}

impl Material {
    /// `theta_flat` and `hysteresis` in degrees, `surface_tension` in N/m.
    pub fn new(
        name: impl Into<String>,
        theta_flat: f64,
        hysteresis: f64,
        surface_tension: f64,
    ) -> Result<Self> {
        let problems = Material::problems(theta_flat, hysteresis, surface_tension);
        if !problems.is_empty() {
            return Err(Error::invalid("material", problems.join("; ")));
        }
        Ok(Material {
            name: name.into(),
            theta_flat,
            hysteresis,
            surface_tension,
        })
    }

    /// Every invariant the given values break, as `field: reason` strings.
    pub fn problems(theta_flat: f64, hysteresis: f64, surface_tension: f64) -> Vec<String> {
        let mut out = Vec::new();
        let theta_ok = theta_flat.is_finite() && theta_flat > 0.0 && theta_flat < 180.0;
        if !theta_ok {
            out.push(format!(
                "theta_flat: {theta_flat} is not in (0, 180) degrees"
            ));
        }
        if !(hysteresis.is_finite() && hysteresis >= 0.0) {
            out.push(format!("hysteresis: {hysteresis} must be >= 0 degrees"));
        } else if theta_ok
            && (theta_flat - hysteresis / 2.0 <= 0.0 || theta_flat + hysteresis / 2.0 >= 180.0)
        {
            out.push(format!(
                "hysteresis: theta_flat ± {}/2 leaves (0, 180) degrees",
                hysteresis
            ));
        }
        if !(surface_tension.is_finite() && surface_tension > 0.0) {
            out.push(format!(
                "surface_tension: {surface_tension} must be > 0 N/m"
            ));
        }
        out
    }

    /// Distilled water on flat PMMA: 81°, no hysteresis, 72.8 mN/m.
    pub fn water_on_pmma() -> Self {
        Material {
            name: "water/PMMA".into(),
            theta_flat: PMMA_WATER_THETA,
            hysteresis: 0.0,
            surface_tension: WATER_SURFACE_TENSION,
        }
    }

    pub fn with_hysteresis(&self, hysteresis: f64) -> Result<Self> {
        Material::new(
            self.name.clone(),
            self.theta_flat,
            hysteresis,
            self.surface_tension,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn theta_flat(&self) -> f64 {
        self.theta_flat
    }

    pub fn hysteresis(&self) -> f64 {
        self.hysteresis
    }

    pub fn surface_tension(&self) -> f64 {
        self.surface_tension
    }
}

/// A sessile droplet: volume in m³, centre position along the gradient axis in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Droplet {
    volume: f64,
    position: f64,
}

impl Droplet {
    pub fn new(volume: f64, position: f64) -> Result<Self> {
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::invalid(
                "droplet",
                format!("volume {volume} must be > 0 m³"),
            ));
        }
        if !position.is_finite() {
            return Err(Error::invalid("droplet", "position must be finite"));
        }
        Ok(Droplet { volume, position })
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn at(&self, position: f64) -> Self {
        Droplet { position, ..*self }
    }
}

fn check_theta(op: &'static str, theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta < 180.0 {
        Ok(())
    } else {
        Err(Error::domain(
            op,
            format!("angle {theta}° is not in (0, 180)"),
        ))
    }
}

fn checked_acos(op: &'static str, arg: f64) -> Result<f64> {
    if !arg.is_finite()
        || !(-1.0 - ACOS_CLAMP_TOLERANCE..=1.0 + ACOS_CLAMP_TOLERANCE).contains(&arg)
    {
        return Err(Error::domain(
            op,
            format!("arccos argument {arg} outside [-1, 1]"),
        ));
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

/// Apparent Cassie-Baxter angle (degrees) for solid fraction `f` on a substrate
/// with intrinsic angle `theta_flat` (degrees).
pub fn cassie_apparent_angle(f: Fraction, theta_flat: f64) -> Result<f64> {
    const OP: &str = "cassie_apparent_angle";
    check_theta(OP, theta_flat)?;
    let f = f.value();
    let arg = f * to_rad(theta_flat).cos() + f - 1.0;
    checked_acos(OP, arg).map(to_deg)
}

/// Solid fraction that produces `theta_star` on a substrate with angle `theta_flat`.
///
/// Only the composite branch exists, so `theta_flat <= theta_star <= 180`.
pub fn invert_cassie_fraction(theta_star: f64, theta_flat: f64) -> Result<Fraction> {
    const OP: &str = "invert_cassie_fraction";
    check_theta(OP, theta_flat)?;
    if !theta_star.is_finite() || theta_star > 180.0 {
        return Err(Error::domain(
            OP,
            format!("apparent angle {theta_star}° exceeds 180"),
        ));
    }
    if theta_star < theta_flat {
        return Err(Error::domain(
            OP,
            format!("apparent angle {theta_star}° is below the intrinsic {theta_flat}°; no composite state"),
        ));
    }
    if theta_star == 180.0 {
        return Ok(Fraction::ZERO);
    }
    // 1 + cos x = 2 cos²(x/2) keeps precision as θ* approaches 180°.
    let num = (to_rad(theta_star) / 2.0).cos().powi(2);
    let den = (to_rad(theta_flat) / 2.0).cos().powi(2);
    let f = num / den;
    if f > 1.0 + ACOS_CLAMP_TOLERANCE {
        return Err(Error::domain(OP, format!("fraction {f} exceeds 1")));
    }
    Fraction::new(f.clamp(0.0, 1.0))
}

/// Apparent (advancing, receding) angles in degrees.
pub fn apparent_advancing_receding(f: Fraction, material: &Material) -> Result<(f64, f64)> {
    let half = material.hysteresis() / 2.0;
    let adv = cassie_apparent_angle(f, material.theta_flat() + half)?;
    let rec = cassie_apparent_angle(f, material.theta_flat() - half)?;
    Ok((adv, rec))
}

/// `(2 − 3cos θ + cos³θ) / sin³θ`, written as `(1 − c)²(2 + c) / s³`.
fn cap_shape_factor(theta_rad: f64) -> f64 {
    let c = theta_rad.cos();
    let s = theta_rad.sin();
    (1.0 - c).powi(2) * (2.0 + c) / s.powi(3)
}

/// Volume (m³) of a spherical cap with base radius `radius` (m) and contact angle `theta` (degrees).
pub fn spherical_cap_volume(radius: f64, theta: f64) -> Result<f64> {
    const OP: &str = "spherical_cap_volume";
    check_theta(OP, theta)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::domain(OP, format!("radius {radius} must be > 0")));
    }
    Ok(PI * radius.powi(3) / 3.0 * cap_shape_factor(to_rad(theta)))
}

/// Base (contact patch) radius in m of a spherical-cap droplet of `volume` m³ at `theta` degrees.
pub fn spherical_cap_footprint_radius(volume: f64, theta: f64) -> Result<f64> {
    const OP: &str = "spherical_cap_footprint_radius";
    check_theta(OP, theta)?;
    if !(volume.is_finite() && volume > 0.0) {
        return Err(Error::domain(OP, format!("volume {volume} must be > 0")));
    }
    Ok((3.0 * volume / (PI * cap_shape_factor(to_rad(theta)))).cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f(v: f64) -> Fraction {
        Fraction::new(v).unwrap()
    }

    #[test]
    fn cassie_endpoints() {
        assert_relative_eq!(
            cassie_apparent_angle(f(1.0), 81.0).unwrap(),
            81.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            cassie_apparent_angle(f(0.0), 81.0).unwrap(),
            180.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn cassie_reference_values() {
        // mpmath at 40 digits: 119.60777958751160..., 141.28598563577850...
        let a = cassie_apparent_angle(f(0.4375), 81.0).unwrap();
        let b = cassie_apparent_angle(f(0.19), 81.0).unwrap();
        assert_relative_eq!(a, 119.607_779_587_511_6, epsilon = 1e-9);
        assert_relative_eq!(b, 141.285_985_635_778_5, epsilon = 1e-9);
    }

    #[test]
    fn cassie_rejects_bad_theta() {
        assert!(matches!(
            cassie_apparent_angle(f(0.5), 0.0),
            Err(Error::Domain { .. })
        ));
        assert!(cassie_apparent_angle(f(0.5), 180.0).is_err());
        assert!(cassie_apparent_angle(f(0.5), f64::NAN).is_err());
    }

    #[test]
    fn acos_clamp_only_within_tolerance() {
        assert_eq!(checked_acos("t", -1.0 - 5e-13).unwrap(), PI);
        assert!(checked_acos("t", -1.0 - 1e-9).is_err());
        assert!(checked_acos("t", 1.0 + 1e-9).is_err());
    }

    #[test]
    fn fraction_bounds() {
        assert!(Fraction::new(-0.01).is_err());
        assert!(Fraction::new(1.0001).is_err());
        assert!(Fraction::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<Fraction>("1.5").is_err());
        assert_eq!(
            serde_json::from_str::<Fraction>("0.5").unwrap().value(),
            0.5
        );
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(invert_cassie_fraction(180.0, 81.0).unwrap().value(), 0.0);
        assert_relative_eq!(
            invert_cassie_fraction(81.0, 81.0).unwrap().value(),
            1.0,
            epsilon = 1e-15
        );
        // (cos 141.28° + 1)/(cos 81° + 1) = 0.19005650359587848...
        assert_relative_eq!(
            invert_cassie_fraction(141.28, 81.0).unwrap().value(),
            0.190_056_503_595_878_5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn inversion_errors() {
        assert!(invert_cassie_fraction(80.0, 81.0).is_err());
        assert!(invert_cassie_fraction(180.5, 81.0).is_err());
    }

    #[test]
    fn hysteresis_examples() {
        let m = Material::new("x", 90.0, 0.0, 0.07).unwrap();
        let (a, r) = apparent_advancing_receding(f(0.5), &m).unwrap();
        assert_eq!(a, r);

        let m = Material::new("x", 90.0, 10.0, 0.07).unwrap();
        let (a, r) = apparent_advancing_receding(f(1.0), &m).unwrap();
        assert_relative_eq!(a, 95.0, epsilon = 1e-9);
        assert_relative_eq!(r, 85.0, epsilon = 1e-9);

        let m = Material::new("x", 81.0, 10.0, 0.07).unwrap();
        let (a, r) = apparent_advancing_receding(f(0.25), &m).unwrap();
        // Cassie at 86° and 76°: 137.10151361871722..., 133.59208722139616...
        assert_relative_eq!(a, 137.101_513_618_717_2, epsilon = 1e-9);
        assert_relative_eq!(r, 133.592_087_221_396_2, epsilon = 1e-9);
    }

    #[test]
    fn material_invariants_listed_together() {
        let err = Material::new("x", 200.0, -1.0, 0.0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("theta_flat"));
        assert!(err.contains("hysteresis"));
        assert!(err.contains("surface_tension"));
        assert!(Material::new("x", 5.0, 12.0, 0.07).is_err());
        assert!(Material::new("x", 175.0, 12.0, 0.07).is_err());
    }

    #[test]
    fn cap_radius_examples() {
        // (3V/2π)^(1/3) for V = 1.1 µl: 8.0682254251381885e-4 m
        let r = spherical_cap_footprint_radius(1.1e-9, 90.0).unwrap();
        assert_relative_eq!(r, 8.068_225_425_138_189e-4, max_relative = 1e-12);
        assert!(spherical_cap_footprint_radius(1.1e-9, 179.9).unwrap() < 1e-5);
        let r2 = spherical_cap_footprint_radius(2.2e-9, 90.0).unwrap();
        assert_relative_eq!(r2 / r, 2f64.cbrt(), max_relative = 1e-12);
    }

    #[test]
    fn cap_radius_errors() {
        assert!(spherical_cap_footprint_radius(0.0, 90.0).is_err());
        assert!(spherical_cap_footprint_radius(1e-9, 180.0).is_err());
        assert!(spherical_cap_footprint_radius(-1e-9, 90.0).is_err());
    }

    #[test]
    fn droplet_requires_positive_volume() {
        assert!(Droplet::new(0.0, 0.0).is_err());
        assert!(Droplet::new(1e-9, f64::INFINITY).is_err());
    }
}

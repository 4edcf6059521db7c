//! Quasi-static droplet transport on a gradient design.
//!
//! The droplet is a spherical cap whose contact line runs from `x − r` (rear) to
//! `x + r` (front). The driving force is the unbalanced Young term across the
//! footprint, `γ·2r·(cos θ*_front − cos θ*_rear)`, and it must exceed the
//! hysteresis retention `γ·2r·(cos θ*_rec − cos θ*_adv)` for the droplet to step.
//! This is the minimal standard contact-line model, with no inertia or viscosity.
//!
//! The footprint radius is taken at the mean of the front and rear angles, which are
//! themselves sampled at a first-guess radius from the angle under the droplet centre.

use std::fmt::Write as _;

use serde::Serialize;

use super::GradientDesign;
use crate::error::{Error, Result};
use crate::wetting::{
    apparent_advancing_receding, cassie_apparent_angle, spherical_cap_footprint_radius, Droplet,
    Fraction, Material,
};

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

const NM_PER_M: f64 = 1e9;

/// Apparent angle (degrees) of the column containing `x` (m).
pub fn local_apparent_angle(design: &GradientDesign, x: f64, material: &Material) -> Result<f64> {
    let length = design.length_m();
    if !(x.is_finite() && (0.0..=length).contains(&x)) {
        return Err(Error::domain(
            "local_apparent_angle",
            format!("x = {x} m is outside the design [0, {length}] m"),
        ));
    }
    angle_in_design(design, x, material)
}

fn angle_in_design(design: &GradientDesign, x: f64, material: &Material) -> Result<f64> {
    let k = design.column_at(x * NM_PER_M);
    cassie_apparent_angle(design.fraction_at_column(k), material.theta_flat())
}

/// `γ·width·(cos θ_front − cos θ_rear)`; angles in degrees.
pub fn contact_line_force(
    surface_tension: f64,
    width: f64,
    theta_front: f64,
    theta_rear: f64,
) -> f64 {
    surface_tension * width * (theta_front.to_radians().cos() - theta_rear.to_radians().cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Footprint {
    /// Contact patch radius, m.
    pub radius: f64,
    pub theta_front: f64,
    pub theta_rear: f64,
}

fn footprint_radius(
    design: &GradientDesign,
    x: f64,
    volume: f64,
    material: &Material,
) -> Result<f64> {
    let length = design.length_m();
    let centre = angle_in_design(design, x, material)?;
    let guess = spherical_cap_footprint_radius(volume, centre)?;
    let front = angle_in_design(design, (x + guess).min(length), material)?;
    let rear = angle_in_design(design, (x - guess).max(0.0), material)?;
    spherical_cap_footprint_radius(volume, (front + rear) / 2.0)
}

/// Contact-line geometry of `droplet` on `design`. Errors if the footprint overhangs
/// either channel end.
pub fn footprint(
    design: &GradientDesign,
    droplet: &Droplet,
    material: &Material,
) -> Result<Footprint> {
    const OP: &str = "footprint";
    let x = droplet.position();
    let length = design.length_m();
    if !(x.is_finite() && (0.0..=length).contains(&x)) {
        return Err(Error::domain(
            OP,
            format!("droplet centre {x} m is outside [0, {length}] m"),
        ));
    }
    let radius = footprint_radius(design, x, droplet.volume(), material)?;
    if x - radius < 0.0 || x + radius > length {
        return Err(Error::domain(
            OP,
            format!(
                "footprint [{}, {}] m overhangs the design [0, {length}] m",
                x - radius,
                x + radius
            ),
        ));
    }
    Ok(Footprint {
        radius,
        theta_front: angle_in_design(design, x + radius, material)?,
        theta_rear: angle_in_design(design, x - radius, material)?,
    })
}

/// Signed driving force in N along +x (toward the channel end).
pub fn net_driving_force(
    design: &GradientDesign,
    droplet: &Droplet,
    material: &Material,
) -> Result<f64> {
    let fp = footprint(design, droplet, material)?;
    Ok(contact_line_force(
        material.surface_tension(),
        2.0 * fp.radius,
        fp.theta_front,
        fp.theta_rear,
    ))
}

/// Hysteresis retention in N at local solid fraction `f_local`. Never negative.
pub fn retention_force(droplet: &Droplet, material: &Material, f_local: Fraction) -> Result<f64> {
    let theta = cassie_apparent_angle(f_local, material.theta_flat())?;
    let radius = spherical_cap_footprint_radius(droplet.volume(), theta)?;
    let (adv, rec) = apparent_advancing_receding(f_local, material)?;
    Ok(contact_line_force(material.surface_tension(), 2.0 * radius, rec, adv).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    ReachedEnd,
    ForceBalance,
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    /// Droplet centre, m.
    pub position: f64,
    pub theta_front: f64,
    pub theta_rear: f64,
    /// N, positive toward +x.
    pub net_force: f64,
    pub retention: f64,
    pub moved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub steps: Vec<TraceStep>,
    pub terminal_reason: TerminalReason,
    /// Centre after the last step, m.
    pub final_position: f64,
}

impl SimulationTrace {
    pub const CSV_HEADER: &'static str =
        "position_m,theta_front_deg,theta_rear_deg,net_force_N,moved";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.steps.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.position,
                s.theta_front,
                s.theta_rear,
                s.net_force,
                u8::from(s.moved)
            );
        }
        out
    }
}

/// Step the droplet by `step` m toward the net force while it beats retention.
///
/// Stops with `ForceBalance` when retention wins, `ReachedEnd` once the footprint
/// would cross a channel end, or `MaxSteps`.
pub fn simulate_droplet(
    design: &GradientDesign,
    droplet: &Droplet,
    material: &Material,
    step: f64,
    max_steps: usize,
) -> Result<SimulationTrace> {
    const OP: &str = "simulate_droplet";
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain(OP, format!("step {step} m must be > 0")));
    }
    // Validates that the start footprint lies inside the design.
    footprint(design, droplet, material)?;

    let length = design.length_m();
    let start = droplet.position();
    let mut x = start;
    // Net displacement in whole steps; avoids drift from repeated addition.
    let mut offset: i64 = 0;
    let mut steps = Vec::new();
    let mut terminal_reason = TerminalReason::MaxSteps;

    for _ in 0..max_steps {
        if !(0.0..=length).contains(&x) {
            terminal_reason = TerminalReason::ReachedEnd;
            break;
        }
        let radius = footprint_radius(design, x, droplet.volume(), material)?;
        if x - radius < 0.0 || x + radius > length {
            terminal_reason = TerminalReason::ReachedEnd;
            break;
        }
        let here = droplet.at(x);
        let fp = footprint(design, &here, material)?;
        let net = contact_line_force(
            material.surface_tension(),
            2.0 * fp.radius,
            fp.theta_front,
            fp.theta_rear,
        );
        let f_local = design.fraction_at_column(design.column_at(x * NM_PER_M));
        let retention = retention_force(&here, material, f_local)?;
        let moved = net.abs() > retention;
        steps.push(TraceStep {
            position: x,
            theta_front: fp.theta_front,
            theta_rear: fp.theta_rear,
            net_force: net,
            retention,
            moved,
        });
        if !moved {
            terminal_reason = TerminalReason::ForceBalance;
            break;
        }
        offset += net.signum() as i64;
        x = start + offset as f64 * step;
    }

    Ok(SimulationTrace {
        steps,
        terminal_reason,
        final_position: x,
    })
}

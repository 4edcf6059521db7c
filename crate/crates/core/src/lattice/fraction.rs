//! Surface-fraction measures of the unit cells.
//!
//! Two honeycomb measures exist and both are reported downstream:
//!
//! - the linear ratio `q = wall / pitch`;
//! - the solid area fraction `1 − (1 − q)²`: an opening of flat-to-flat size
//!   `pitch − wall` covers `(1 − q)²` of its hexagonal cell.
//!
//! [`monte_carlo_fraction`] classifies random points against the exact hexagons
//! and serves as an oracle for the closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{HoneycombSpec, PillarSpec};
use crate::error::{Error, Result};
use crate::wetting::Fraction;

/// Samples per work item. Fixed so that results never depend on the thread count.
pub const MC_CHUNK_SAMPLES: u64 = 1 << 16;

const MC_MIN_SAMPLES: u64 = 1000;

/// `a² / (a + b)²` for square pillars.
pub fn square_pillar_fraction(spec: &PillarSpec) -> Fraction {
    let a = spec.width_a() as i128;
    let period = a + spec.spacing_b() as i128;
    ratio(a * a, period * period)
}

/// `wall / pitch`.
pub fn honeycomb_linear_ratio(spec: &HoneycombSpec) -> Fraction {
    ratio(spec.wall() as i128, spec.pitch() as i128)
}

/// Solid area fraction `1 − (1 − wall/pitch)²`, evaluated as `wall·(2·pitch − wall) / pitch²`.
pub fn honeycomb_area_fraction(spec: &HoneycombSpec) -> Fraction {
    let w = spec.wall() as i128;
    let p = spec.pitch() as i128;
    ratio(w * (2 * p - w), p * p)
}

fn ratio(num: i128, den: i128) -> Fraction {
    Fraction::new(num as f64 / den as f64).expect("ratio of valid geometry lies in [0, 1]")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub fraction: f64,
    pub std_error: f64,
    pub samples: u64,
    pub solid_hits: u64,
}

/// Monte Carlo solid fraction of the honeycomb using the global rayon pool.
pub fn monte_carlo_fraction(spec: &HoneycombSpec, samples: u64, seed: u64) -> Result<McEstimate> {
    check_samples(samples)?;
    let solid_hits = count_solid(spec, samples, seed);
    Ok(estimate(solid_hits, samples))
}

/// As [`monte_carlo_fraction`], on a dedicated pool of `threads` workers.
pub fn monte_carlo_fraction_with_threads(
    spec: &HoneycombSpec,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<McEstimate> {
    check_samples(samples)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::invalid("thread pool", e.to_string()))?;
    let solid_hits = pool.install(|| count_solid(spec, samples, seed));
    Ok(estimate(solid_hits, samples))
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MC_MIN_SAMPLES {
        return Err(Error::domain(
            "monte_carlo_fraction",
            format!("{samples} samples; at least {MC_MIN_SAMPLES} required"),
        ));
    }
    Ok(())
}

fn estimate(solid_hits: u64, samples: u64) -> McEstimate {
    let p = solid_hits as f64 / samples as f64;
    McEstimate {
        fraction: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        solid_hits,
    }
}

/// Ideal (unsnapped) lattice. The sampling domain is the `pitch × √3·pitch`
/// rectangle, which holds exactly two cells.
struct IdealCell {
    pitch: f64,
    rect_height: f64,
    half_opening: f64,
}

impl IdealCell {
    fn new(spec: &HoneycombSpec) -> Self {
        let pitch = spec.pitch() as f64;
        IdealCell {
            pitch,
            rect_height: 3f64.sqrt() * pitch,
            half_opening: spec.comb_diameter() as f64 / 2.0,
        }
    }

    fn in_opening(&self, x: f64, y: f64) -> bool {
        let (p, h) = (self.pitch, self.rect_height);
        let centres = [(0.0, 0.0), (p, 0.0), (0.0, h), (p, h), (p / 2.0, h / 2.0)];
        centres.iter().any(|&(cx, cy)| {
            let dx = (x - cx).abs();
            let dy = (y - cy).abs();
            dx <= self.half_opening && 0.5 * dx + 0.5 * 3f64.sqrt() * dy <= self.half_opening
        })
    }
}

fn count_solid(spec: &HoneycombSpec, samples: u64, seed: u64) -> u64 {
    let cell = IdealCell::new(spec);
    let chunks = samples.div_ceil(MC_CHUNK_SAMPLES);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let n = MC_CHUNK_SAMPLES.min(samples - chunk * MC_CHUNK_SAMPLES);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut solid = 0u64;
            for _ in 0..n {
                let x = rng.random::<f64>() * cell.pitch;
                let y = rng.random::<f64>() * cell.rect_height;
                if !cell.in_opening(x, y) {
                    solid += 1;
                }
            }
            solid
        })
        .sum()
}

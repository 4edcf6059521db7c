//! Pattern geometry: honeycomb and square-pillar unit cells, placed zones, and the
//! fabrication limits they are checked against.
//!
//! The honeycomb is a triangular lattice of hexagonal openings. `pitch` is the
//! flat-to-flat cell period, `comb_diameter` the flat-to-flat size of an opening,
//! and `wall` the solid wall left between neighbouring openings, so
//! `comb_diameter + wall == pitch`. Rows run along x; each opening has flats facing
//! its in-row neighbours (vertices point along ±y).
//!
//! All pattern lengths are integer nanometers.

mod drc;
mod fraction;
mod tiling;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use drc::{check_design_rules, DrcTarget, Rule, Violation};
pub use fraction::{
    honeycomb_area_fraction, honeycomb_linear_ratio, monte_carlo_fraction,
    monte_carlo_fraction_with_threads, square_pillar_fraction, McEstimate, MC_CHUNK_SAMPLES,
};
pub use tiling::{
    clip_to_window, hexagon_opening, tile_zone, tile_zone_on_grid, Cell, CellGrid, LatticeFrame,
    Openings, Polygon, Window,
};

/// Integer nanometers.
pub type Nm = i64;

/// Default fabrication (writing) grid in nm.
pub const DEFAULT_FABRICATION_GRID: Nm = 10;

/// Side length of one zone of the two-zone sample, 10 mm.
pub const TWO_ZONE_SIDE: Nm = 10_000_000;

/// Round `value` to the nearest multiple of `grid`, ties toward +∞.
pub fn snap_to_grid(value: f64, grid: Nm) -> Nm {
    let g = grid as f64;
    ((value / g + 0.5).floor() * g) as Nm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: Nm,
    pub y: Nm,
}

impl Point {
    pub const fn new(x: Nm, y: Nm) -> Self {
        Point { x, y }
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Axis-aligned rectangle; covers `[x, x + width) × [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: Nm,
    pub y: Nm,
    pub width: Nm,
    pub height: Nm,
}

impl Rect {
    pub const fn new(x: Nm, y: Nm, width: Nm, height: Nm) -> Self {
        Rect {
            x,
            y,
            width,
            height,
        }
    }

    pub fn right(&self) -> Nm {
        self.x + self.width
    }

    pub fn top(&self) -> Nm {
        self.y + self.height
    }

    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }

    /// True when the interiors intersect; shared edges do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.right()
            && other.x < self.right()
            && self.y < other.top()
            && other.y < self.top()
    }

    pub fn union(&self, other: &Rect) -> Rect {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        Rect::new(
            x,
            y,
            self.right().max(other.right()) - x,
            self.top().max(other.top()) - y,
        )
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x = self.x.max(other.x);
        let y = self.y.max(other.y);
        let r = self.right().min(other.right());
        let t = self.top().min(other.top());
        (r > x && t > y).then(|| Rect::new(x, y, r - x, t - y))
    }
}

/// Honeycomb unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "HoneycombFields")]
pub struct HoneycombSpec {
    pitch: Nm,
    wall: Nm,
    comb_diameter: Nm,
    height: Nm,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HoneycombFields {
    pitch: Nm,
    wall: Nm,
    #[serde(default)]
    comb_diameter: Option<Nm>,
    height: Nm,
}

impl TryFrom<HoneycombFields> for HoneycombSpec {
    type Error = Error;
    fn try_from(h: HoneycombFields) -> Result<Self> {
        let spec = HoneycombSpec::new(h.pitch, h.wall, h.height)?;
        match h.comb_diameter {
            Some(c) if c != spec.comb_diameter => Err(Error::invalid(
                "honeycomb",
                format!("comb_diameter {c} + wall {} != pitch {}", h.wall, h.pitch),
            )),
            _ => Ok(spec),
        }
    }
}

impl HoneycombSpec {
    pub fn new(pitch: Nm, wall: Nm, height: Nm) -> Result<Self> {
        if pitch <= 0 || height <= 0 {
            return Err(Error::invalid(
                "honeycomb",
                format!("pitch {pitch} and height {height} must be > 0 nm"),
            ));
        }
        if wall <= 0 || wall >= pitch {
            return Err(Error::invalid(
                "honeycomb",
                format!("wall {wall} must lie in (0, pitch = {pitch}) nm"),
            ));
        }
        Ok(HoneycombSpec {
            pitch,
            wall,
            comb_diameter: pitch - wall,
            height,
        })
    }

    /// Build from wall thickness and opening size; the pitch is their sum.
    pub fn from_wall_and_comb(wall: Nm, comb_diameter: Nm, height: Nm) -> Result<Self> {
        if comb_diameter <= 0 {
            return Err(Error::invalid("honeycomb", "comb_diameter must be > 0 nm"));
        }
        HoneycombSpec::new(wall + comb_diameter, wall, height)
    }

    /// 1000 nm walls, 3000 nm combs, 4 µm pitch and height.
    pub fn paper_design_1() -> Self {
        HoneycombSpec {
            pitch: 4000,
            wall: 1000,
            comb_diameter: 3000,
            height: 4000,
        }
    }

    /// 400 nm walls, 3600 nm combs, 4 µm pitch and height.
    pub fn paper_design_2() -> Self {
        HoneycombSpec {
            pitch: 4000,
            wall: 400,
            comb_diameter: 3600,
            height: 4000,
        }
    }

    pub fn pitch(&self) -> Nm {
        self.pitch
    }

    pub fn wall(&self) -> Nm {
        self.wall
    }

    pub fn comb_diameter(&self) -> Nm {
        self.comb_diameter
    }

    pub fn height(&self) -> Nm {
        self.height
    }

    pub fn with_height(&self, height: Nm) -> Result<Self> {
        HoneycombSpec::new(self.pitch, self.wall, height)
    }
}

/// Height over wall thickness.
pub fn aspect_ratio(spec: &HoneycombSpec) -> f64 {
    spec.height as f64 / spec.wall as f64
}

/// Square-section pillar array: pillar width `a`, gap `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PillarSpec {
    width_a: Nm,
    spacing_b: Nm,
    height: Nm,
}

impl PillarSpec {
    pub fn new(width_a: Nm, spacing_b: Nm, height: Nm) -> Result<Self> {
        if width_a <= 0 || spacing_b < 0 || height <= 0 {
            return Err(Error::invalid(
                "pillar",
                format!("need width_a > 0, spacing_b >= 0, height > 0 (got {width_a}, {spacing_b}, {height})"),
            ));
        }
        Ok(PillarSpec {
            width_a,
            spacing_b,
            height,
        })
    }

    pub fn width_a(&self) -> Nm {
        self.width_a
    }

    pub fn spacing_b(&self) -> Nm {
        self.spacing_b
    }

    pub fn height(&self) -> Nm {
        self.height
    }
}

/// One patterned rectangle. The lattice is anchored at the extent origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ZoneFields")]
pub struct Zone {
    spec: HoneycombSpec,
    extent: Rect,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneFields {
    spec: HoneycombSpec,
    extent: Rect,
}

impl TryFrom<ZoneFields> for Zone {
    type Error = Error;
    fn try_from(z: ZoneFields) -> Result<Self> {
        Zone::new(z.spec, z.extent)
    }
}

impl Zone {
    pub fn new(spec: HoneycombSpec, extent: Rect) -> Result<Self> {
        if extent.width <= 0 || extent.height <= 0 {
            return Err(Error::invalid(
                "zone",
                format!(
                    "extent {}×{} nm must be positive",
                    extent.width, extent.height
                ),
            ));
        }
        Ok(Zone { spec, extent })
    }

    pub fn spec(&self) -> &HoneycombSpec {
        &self.spec
    }

    pub fn extent(&self) -> &Rect {
        &self.extent
    }
}

/// Ordered set of non-overlapping zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutFields")]
pub struct Layout {
    label: String,
    zones: Vec<Zone>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutFields {
    label: String,
    zones: Vec<Zone>,
}

impl TryFrom<LayoutFields> for Layout {
    type Error = Error;
    fn try_from(l: LayoutFields) -> Result<Self> {
        Layout::new(l.label, l.zones)
    }
}

impl Layout {
    pub fn new(label: impl Into<String>, zones: Vec<Zone>) -> Result<Self> {
        for (i, a) in zones.iter().enumerate() {
            for (j, b) in zones.iter().enumerate().skip(i + 1) {
                if a.extent.overlaps(&b.extent) {
                    return Err(Error::invalid(
                        "layout",
                        format!("zones {i} and {j} overlap"),
                    ));
                }
            }
        }
        Ok(Layout {
            label: label.into(),
            zones,
        })
    }

    pub fn empty(label: impl Into<String>) -> Self {
        Layout {
            label: label.into(),
            zones: Vec::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn bounding_box(&self) -> Option<Rect> {
        self.zones
            .iter()
            .map(|z| z.extent)
            .reduce(|a, b| a.union(&b))
    }

    /// Keep only `[x0, x0 + width) × [y0, y0 + height)` of the bounding box.
    /// Zone origins (and so the lattice phase) are preserved.
    pub fn crop(&self, width: Nm, height: Nm) -> Layout {
        let Some(bbox) = self.bounding_box() else {
            return self.clone();
        };
        let window = Rect::new(bbox.x, bbox.y, width, height);
        let zones = self
            .zones
            .iter()
            .filter_map(|z| {
                let cut = z.extent.intersection(&window)?;
                // The lattice is anchored at the extent origin, so keep it.
                (cut.x == z.extent.x && cut.y == z.extent.y).then_some(Zone {
                    spec: z.spec,
                    extent: cut,
                })
            })
            .collect();
        Layout {
            label: self.label.clone(),
            zones,
        }
    }
}

/// Two abutting 10×10 mm zones along x with no gap, forming a 20×10 mm sample.
pub fn build_two_zone_layout(spec_a: HoneycombSpec, spec_b: HoneycombSpec) -> Result<Layout> {
    if spec_a.pitch != spec_b.pitch {
        return Err(Error::invalid(
            "layout",
            format!(
                "zone pitches differ ({} vs {} nm)",
                spec_a.pitch, spec_b.pitch
            ),
        ));
    }
    let a = Zone::new(spec_a, Rect::new(0, 0, TWO_ZONE_SIDE, TWO_ZONE_SIDE))?;
    let b = Zone::new(
        spec_b,
        Rect::new(TWO_ZONE_SIDE, 0, TWO_ZONE_SIDE, TWO_ZONE_SIDE),
    )?;
    Layout::new("two-zone", vec![a, b])
}

/// Fabrication limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleFields")]
pub struct DesignRules {
    min_wall: Nm,
    max_aspect_ratio: f64,
    max_height: Nm,
    fabrication_grid: Nm,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFields {
    min_wall: Nm,
    max_aspect_ratio: f64,
    max_height: Nm,
    fabrication_grid: Nm,
}

impl TryFrom<RuleFields> for DesignRules {
    type Error = Error;
    fn try_from(r: RuleFields) -> Result<Self> {
        DesignRules::new(
            r.min_wall,
            r.max_aspect_ratio,
            r.max_height,
            r.fabrication_grid,
        )
    }
}

impl Default for DesignRules {
    /// 400 nm walls, aspect ratio 10, 4 µm height, 10 nm grid.
    fn default() -> Self {
        DesignRules {
            min_wall: 400,
            max_aspect_ratio: 10.0,
            max_height: 4000,
            fabrication_grid: DEFAULT_FABRICATION_GRID,
        }
    }
}

impl DesignRules {
    pub fn new(
        min_wall: Nm,
        max_aspect_ratio: f64,
        max_height: Nm,
        fabrication_grid: Nm,
    ) -> Result<Self> {
        let problems =
            DesignRules::problems(min_wall, max_aspect_ratio, max_height, fabrication_grid);
        if !problems.is_empty() {
            return Err(Error::invalid("design rules", problems.join("; ")));
        }
        Ok(DesignRules {
            min_wall,
            max_aspect_ratio,
            max_height,
            fabrication_grid,
        })
    }

    pub fn problems(
        min_wall: Nm,
        max_aspect_ratio: f64,
        max_height: Nm,
        fabrication_grid: Nm,
    ) -> Vec<String> {
        let mut out = Vec::new();
        if min_wall <= 0 {
            out.push(format!("min_wall: {min_wall} must be > 0 nm"));
        }
        if !(max_aspect_ratio.is_finite() && max_aspect_ratio > 0.0) {
            out.push(format!("max_aspect_ratio: {max_aspect_ratio} must be > 0"));
        }
        if max_height <= 0 {
            out.push(format!("max_height: {max_height} must be > 0 nm"));
        }
        if fabrication_grid <= 0 {
            out.push(format!(
                "fabrication_grid: {fabrication_grid} must be > 0 nm"
            ));
        }
        out
    }

    pub fn min_wall(&self) -> Nm {
        self.min_wall
    }

    pub fn max_aspect_ratio(&self) -> f64 {
        self.max_aspect_ratio
    }

    pub fn max_height(&self) -> Nm {
        self.max_height
    }

    pub fn fabrication_grid(&self) -> Nm {
        self.fabrication_grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_designs_close_the_pitch() {
        for s in [
            HoneycombSpec::paper_design_1(),
            HoneycombSpec::paper_design_2(),
        ] {
            assert_eq!(s.comb_diameter() + s.wall(), s.pitch());
            assert_eq!(
                HoneycombSpec::new(s.pitch(), s.wall(), s.height()).unwrap(),
                s
            );
        }
        assert_eq!(
            HoneycombSpec::from_wall_and_comb(1000, 3000, 4000).unwrap(),
            HoneycombSpec::paper_design_1()
        );
    }

    #[test]
    fn honeycomb_rejects_degenerate_walls() {
        assert!(HoneycombSpec::new(4000, 0, 4000).is_err());
        assert!(HoneycombSpec::new(4000, 4000, 4000).is_err());
        assert!(HoneycombSpec::new(4000, 400, 0).is_err());
        let bad = r#"{"pitch":4000,"wall":400,"comb_diameter":3000,"height":4000}"#;
        assert!(serde_json::from_str::<HoneycombSpec>(bad).is_err());
    }

    #[test]
    fn aspect_ratio_examples() {
        assert_eq!(aspect_ratio(&HoneycombSpec::paper_design_1()), 4.0);
        assert_eq!(aspect_ratio(&HoneycombSpec::paper_design_2()), 10.0);
        assert_eq!(
            aspect_ratio(&HoneycombSpec::new(4000, 1500, 1500).unwrap()),
            1.0
        );
    }

    #[test]
    fn snapping_rounds_half_up() {
        assert_eq!(snap_to_grid(3464.1, 10), 3460);
        assert_eq!(snap_to_grid(405.0, 10), 410);
        assert_eq!(snap_to_grid(404.999, 10), 400);
        assert_eq!(snap_to_grid(399.999_999_9, 10), 400);
    }

    #[test]
    fn two_zone_layout_abuts() {
        let l = build_two_zone_layout(
            HoneycombSpec::paper_design_1(),
            HoneycombSpec::paper_design_2(),
        )
        .unwrap();
        let (a, b) = (l.zones()[0].extent(), l.zones()[1].extent());
        assert_eq!(a.right(), b.x);
        assert!(!a.overlaps(b));
        assert_eq!(
            l.bounding_box().unwrap(),
            Rect::new(0, 0, 20_000_000, 10_000_000)
        );

        let same = build_two_zone_layout(
            HoneycombSpec::paper_design_1(),
            HoneycombSpec::paper_design_1(),
        )
        .unwrap();
        assert_eq!(same.zones().len(), 2);
        assert_eq!(same.zones()[0].spec(), same.zones()[1].spec());
    }

    #[test]
    fn two_zone_layout_requires_equal_pitch() {
        let other = HoneycombSpec::new(5000, 1000, 4000).unwrap();
        assert!(build_two_zone_layout(HoneycombSpec::paper_design_1(), other).is_err());
    }

    #[test]
    fn layout_rejects_overlap() {
        let s = HoneycombSpec::paper_design_1();
        let a = Zone::new(s, Rect::new(0, 0, 100, 100)).unwrap();
        let b = Zone::new(s, Rect::new(50, 50, 100, 100)).unwrap();
        assert!(Layout::new("x", vec![a, b]).is_err());
        assert!(Zone::new(s, Rect::new(0, 0, 0, 10)).is_err());
    }

    #[test]
    fn crop_keeps_origins() {
        let l = build_two_zone_layout(
            HoneycombSpec::paper_design_1(),
            HoneycombSpec::paper_design_2(),
        )
        .unwrap();
        let c = l.crop(100_000, 100_000);
        assert_eq!(c.zones().len(), 1);
        assert_eq!(*c.zones()[0].extent(), Rect::new(0, 0, 100_000, 100_000));
        let both = l.crop(20_000_000, 50_000);
        assert_eq!(both.zones().len(), 2);
    }

    #[test]
    fn default_rules() {
        let r = DesignRules::default();
        assert_eq!(
            (
                r.min_wall(),
                r.max_aspect_ratio(),
                r.max_height(),
                r.fabrication_grid()
            ),
            (400, 10.0, 4000, 10)
        );
        assert!(
            DesignRules::new(0, -1.0, 0, 0)
                .unwrap_err()
                .to_string()
                .matches("must be")
                .count()
                == 4
        );
    }
}

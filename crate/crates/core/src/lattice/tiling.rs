//! Zone tiling on the triangular lattice.
//!
//! Cell centres sit at `(i·pitch + (j mod 2)·pitch/2, j·row_period)` relative to the
//! extent origin, with `row_period = pitch·√3/2`. Lattice periods are snapped to the
//! fabrication grid; hexagon vertices are quantized to whole nanometers relative to
//! their centre, so every opening of a given size is an exact translate of one shape.
//!
//! A cell belongs to the zone when its centre lies in the half-open extent. Openings
//! that reach past the extent are clipped to it.
//!
//! A [`CellGrid`] is lazy: a 10 mm zone holds ~7 million cells, so centres and
//! polygons are produced on demand in row-major order.

use super::{snap_to_grid, Nm, Point, Rect, Zone, DEFAULT_FABRICATION_GRID};

/// Lattice periods in nm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeFrame {
    pub pitch: Nm,
    pub half_offset: Nm,
    pub row_period: Nm,
}

impl LatticeFrame {
    pub fn new(pitch: Nm, grid: Nm) -> Self {
        let p = pitch as f64;
        LatticeFrame {
            pitch,
            half_offset: snap_to_grid(p / 2.0, grid),
            row_period: snap_to_grid(p * 3f64.sqrt() / 2.0, grid),
        }
    }
}

/// Simple polygon, counter-clockwise, implicitly closed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polygon(pub Vec<Point>);

impl Polygon {
    pub fn vertices(&self) -> &[Point] {
        &self.0
    }

    pub fn translate(&self, by: Point) -> Polygon {
        Polygon(self.0.iter().map(|&p| p + by).collect())
    }

    /// Twice the signed area, exact.
    pub fn doubled_area(&self) -> i128 {
        let v = &self.0;
        (0..v.len())
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                a.x as i128 * b.y as i128 - b.x as i128 * a.y as i128
            })
            .sum()
    }

    pub fn area(&self) -> f64 {
        self.doubled_area() as f64 / 2.0
    }

    pub fn bounds(&self) -> Option<Rect> {
        let xs = self.0.iter().map(|p| p.x);
        let ys = self.0.iter().map(|p| p.y);
        let (x0, x1) = (xs.clone().min()?, xs.max()?);
        let (y0, y1) = (ys.clone().min()?, ys.max()?);
        Some(Rect::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// Closed-boundary containment for a convex CCW polygon.
    pub fn contains_convex(&self, x: f64, y: f64) -> bool {
        let v = &self.0;
        (0..v.len()).all(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            let cross =
                (b.x - a.x) as f64 * (y - a.y as f64) - (b.y - a.y) as f64 * (x - a.x as f64);
            cross >= 0.0
        })
    }
}

/// Hexagonal opening of flat-to-flat size `diameter`, centred on the origin,
/// flats facing ±x. Vertices are rounded to 1 nm.
pub fn hexagon_opening(diameter: Nm) -> Polygon {
    let d = diameter as f64;
    let half = d / 2.0;
    let tip = d / 3f64.sqrt();
    let shoulder = tip / 2.0;
    let pts = [
        (0.0, tip),
        (-half, shoulder),
        (-half, -shoulder),
        (0.0, -tip),
        (half, -shoulder),
        (half, shoulder),
    ];
    Polygon(
        pts.iter()
            .map(|&(x, y)| Point::new(x.round() as Nm, y.round() as Nm))
            .collect(),
    )
}

/// Closed clip window in coordinates relative to a cell centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub xmin: Nm,
    pub xmax: Nm,
    pub ymin: Nm,
    pub ymax: Nm,
}

impl Window {
    /// Clamp to `bounds`, so windows that cut a shape identically compare equal.
    pub fn clamp_to(&self, bounds: &Rect) -> Window {
        Window {
            xmin: self.xmin.max(bounds.x),
            xmax: self.xmax.min(bounds.right()),
            ymin: self.ymin.max(bounds.y),
            ymax: self.ymax.min(bounds.top()),
        }
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        self.xmin <= r.x && r.right() <= self.xmax && self.ymin <= r.y && r.top() <= self.ymax
    }
}

/// Clip a convex polygon to `window` (Sutherland–Hodgman), rounding new vertices to 1 nm.
pub fn clip_to_window(poly: &Polygon, window: &Window) -> Polygon {
    if let Some(b) = poly.bounds() {
        if window.contains_rect(&b) {
            return poly.clone();
        }
    }
    let mut pts: Vec<(f64, f64)> = poly.0.iter().map(|p| (p.x as f64, p.y as f64)).collect();
    let edges: [(usize, f64, bool); 4] = [
        (0, window.xmin as f64, true),
        (0, window.xmax as f64, false),
        (1, window.ymin as f64, true),
        (1, window.ymax as f64, false),
    ];
    for (axis, bound, is_min) in edges {
        let inside = |p: &(f64, f64)| {
            let c = if axis == 0 { p.0 } else { p.1 };
            if is_min {
                c >= bound
            } else {
                c <= bound
            }
        };
        let mut out = Vec::with_capacity(pts.len() + 2);
        for i in 0..pts.len() {
            let cur = pts[i];
            let prev = pts[(i + pts.len() - 1) % pts.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let (a0, a1) = if axis == 0 {
                    (prev.0, cur.0)
                } else {
                    (prev.1, cur.1)
                };
                let t = (bound - a0) / (a1 - a0);
                let x = prev.0 + t * (cur.0 - prev.0);
                let y = prev.1 + t * (cur.1 - prev.1);
                out.push(if axis == 0 { (bound, y) } else { (x, bound) });
            }
            if ci {
                out.push(cur);
            }
        }
        pts = out;
        if pts.is_empty() {
            return Polygon(Vec::new());
        }
    }
    let rounded: Vec<Point> = pts
        .iter()
        .map(|&(x, y)| Point::new(x.round() as Nm, y.round() as Nm))
        .collect();
    simplify(rounded)
}

/// Drop repeated and collinear vertices.
fn simplify(mut v: Vec<Point>) -> Polygon {
    loop {
        let n = v.len();
        if n < 3 {
            return Polygon(Vec::new());
        }
        let drop = (0..n).find(|&i| {
            let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            let cross = (b.x - a.x) as i128 * (c.y - b.y) as i128
                - (b.y - a.y) as i128 * (c.x - b.x) as i128;
            b == a || cross == 0
        });
        match drop {
            Some(i) => {
                v.remove(i);
            }
            None => return Polygon(v),
        }
    }
}

/// Opening size per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Openings {
    Uniform(Nm),
    /// One diameter per lattice column `[k·pitch, (k+1)·pitch)` from the extent
    /// origin; centres beyond the last column use the last entry.
    Columns(Vec<Nm>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub center: Point,
    pub opening: Polygon,
}

/// Lattice cells covering a rectangle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGrid {
    extent: Rect,
    frame: LatticeFrame,
    openings: Openings,
    rows: usize,
    cols: [usize; 2],
}

pub fn tile_zone(zone: &Zone) -> CellGrid {
    tile_zone_on_grid(zone, DEFAULT_FABRICATION_GRID)
}

pub fn tile_zone_on_grid(zone: &Zone, grid: Nm) -> CellGrid {
    let spec = zone.spec();
    CellGrid::new(
        *zone.extent(),
        LatticeFrame::new(spec.pitch(), grid),
        Openings::Uniform(spec.comb_diameter()),
    )
}

impl CellGrid {
    pub fn new(extent: Rect, frame: LatticeFrame, openings: Openings) -> Self {
        let count = |start: Nm, period: Nm, span: Nm| -> usize {
            if start >= span {
                0
            } else {
                ((span - start + period - 1) / period) as usize
            }
        };
        let rows = count(0, frame.row_period, extent.height);
        let cols = [
            count(0, frame.pitch, extent.width),
            count(frame.half_offset, frame.pitch, extent.width),
        ];
        CellGrid {
            extent,
            frame,
            openings,
            rows,
            cols,
        }
    }

    pub fn extent(&self) -> &Rect {
        &self.extent
    }

    pub fn frame(&self) -> &LatticeFrame {
        &self.frame
    }

    pub fn openings(&self) -> &Openings {
        &self.openings
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Cells per row for row parity 0 (base rows) and 1 (offset rows).
    pub fn cols_for_parity(&self, parity: usize) -> usize {
        self.cols[parity & 1]
    }

    pub fn cols_in_row(&self, row: usize) -> usize {
        self.cols[row & 1]
    }

    pub fn rows_for_parity(&self, parity: usize) -> usize {
        (self.rows + 1 - (parity & 1)) / 2
    }

    pub fn len(&self) -> usize {
        self.rows_for_parity(0) * self.cols[0] + self.rows_for_parity(1) * self.cols[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_y(&self, row: usize) -> Nm {
        self.extent.y + row as Nm * self.frame.row_period
    }

    pub fn col_x(&self, parity: usize, col: usize) -> Nm {
        self.extent.x + (parity & 1) as Nm * self.frame.half_offset + col as Nm * self.frame.pitch
    }

    pub fn center(&self, row: usize, col: usize) -> Point {
        Point::new(self.col_x(row, col), self.row_y(row))
    }

    /// Opening size for a cell centred at absolute `x`.
    pub fn diameter_at(&self, x: Nm) -> Nm {
        match &self.openings {
            Openings::Uniform(d) => *d,
            Openings::Columns(ds) => {
                let k = ((x - self.extent.x) / self.frame.pitch).max(0) as usize;
                ds[k.min(ds.len() - 1)]
            }
        }
    }

    /// Largest opening, for clamping clip windows consistently.
    pub fn max_diameter(&self) -> Nm {
        match &self.openings {
            Openings::Uniform(d) => *d,
            Openings::Columns(ds) => ds.iter().copied().max().unwrap_or(0),
        }
    }

    /// The extent, relative to `center`.
    pub fn window_for(&self, center: Point) -> Window {
        Window {
            xmin: self.extent.x - center.x,
            xmax: self.extent.right() - center.x,
            ymin: self.extent.y - center.y,
            ymax: self.extent.top() - center.y,
        }
    }

    /// Opening of the cell centred at `center`, relative to that centre and clipped.
    pub fn relative_opening(&self, center: Point) -> Polygon {
        clip_to_window(
            &hexagon_opening(self.diameter_at(center.x)),
            &self.window_for(center),
        )
    }

    pub fn opening(&self, row: usize, col: usize) -> Polygon {
        let c = self.center(row, col);
        self.relative_opening(c).translate(c)
    }

    /// Cell centres, row-major.
    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols_in_row(r)).map(move |c| self.center(r, c)))
    }

    /// Cells with absolute opening polygons, row-major.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |row| {
            (0..self.cols_in_row(row)).map(move |col| {
                let center = self.center(row, col);
                Cell {
                    row,
                    col,
                    center,
                    opening: self.relative_opening(center).translate(center),
                }
            })
        })
    }

    /// Total opening area in nm², summed per cell.
    pub fn opening_area(&self) -> f64 {
        self.cells().map(|c| c.opening.area()).sum()
    }
}

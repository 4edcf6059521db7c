//! GDSII stream format.
//!
//! Every record is `[u16 length][u8 record type][u8 data type][payload]`, big-endian,
//! with the length covering the 4-byte header. Reals are 8-byte excess-64
//! base-16 floats. ASCII payloads are NUL-padded to even length.
//!
//! In [`GdsMode::Arrayed`] the triangular lattice becomes pairs of AREFs: base rows
//! and offset rows each form a rectangular array with row step `2·row_period`.
//! Cells clipped at an extent edge get their own structure and are arrayed the
//! same way along that edge, so a 7-million-cell zone stays a few kilobytes.
//! [`GdsMode::Flat`] writes every opening as an explicit BOUNDARY; both modes
//! expand to identical polygons.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::{Pattern, Polarity};
use crate::lattice::{clip_to_window, hexagon_opening, CellGrid, Nm, Point, Polygon, Rect, Window};

/// Vertices per BOUNDARY including the closing vertex (65535-byte record limit).
pub const MAX_BOUNDARY_VERTICES: usize = 8191;

const GDS_VERSION: i16 = 600;
const MAX_ARRAY_DIM: usize = i16::MAX as usize;

mod rec {
    pub const HEADER: u8 = 0x00;
    pub const BGNLIB: u8 = 0x01;
    pub const LIBNAME: u8 = 0x02;
    pub const UNITS: u8 = 0x03;
    pub const ENDLIB: u8 = 0x04;
    pub const BGNSTR: u8 = 0x05;
    pub const STRNAME: u8 = 0x06;
    pub const ENDSTR: u8 = 0x07;
    pub const BOUNDARY: u8 = 0x08;
    pub const PATH: u8 = 0x09;
    pub const SREF: u8 = 0x0A;
    pub const AREF: u8 = 0x0B;
    pub const TEXT: u8 = 0x0C;
    pub const LAYER: u8 = 0x0D;
    pub const DATATYPE: u8 = 0x0E;
    pub const XY: u8 = 0x10;
    pub const ENDEL: u8 = 0x11;
    pub const SNAME: u8 = 0x12;
    pub const COLROW: u8 = 0x13;
    pub const NODE: u8 = 0x15;
    pub const STRANS: u8 = 0x1A;
    pub const MAG: u8 = 0x1B;
    pub const ANGLE: u8 = 0x1C;
    pub const BOX: u8 = 0x2D;
}

mod dt {
    pub const NONE: u8 = 0x00;
    pub const BITS: u8 = 0x01;
    pub const I16: u8 = 0x02;
    pub const I32: u8 = 0x03;
    pub const REAL8: u8 = 0x05;
    pub const ASCII: u8 = 0x06;
}

fn record_name(rt: u8) -> &'static str {
    match rt {
        rec::HEADER => "HEADER",
        rec::BGNLIB => "BGNLIB",
        rec::LIBNAME => "LIBNAME",
        rec::UNITS => "UNITS",
        rec::ENDLIB => "ENDLIB",
        rec::BGNSTR => "BGNSTR",
        rec::STRNAME => "STRNAME",
        rec::ENDSTR => "ENDSTR",
        rec::BOUNDARY => "BOUNDARY",
        rec::PATH => "PATH",
        rec::SREF => "SREF",
        rec::AREF => "AREF",
        rec::TEXT => "TEXT",
        rec::LAYER => "LAYER",
        rec::DATATYPE => "DATATYPE",
        rec::XY => "XY",
        rec::ENDEL => "ENDEL",
        rec::SNAME => "SNAME",
        rec::COLROW => "COLROW",
        rec::NODE => "NODE",
        rec::STRANS => "STRANS",
        rec::MAG => "MAG",
        rec::ANGLE => "ANGLE",
        rec::BOX => "BOX",
        _ => "record",
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GdsError {
    #[error("coordinate {0} does not fit a signed 32-bit database unit")]
    CoordinateOverflow(i64),
    #[error("boundary with {0} vertices exceeds the {MAX_BOUNDARY_VERTICES}-vertex limit")]
    TooManyVertices(usize),
    #[error("name {0:?} must be non-empty ASCII")]
    InvalidName(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("parse error at byte {offset} in {record}: {msg}")]
    Parse {
        offset: usize,
        record: &'static str,
        msg: String,
    },
    #[error("cell {0:?} is referenced but not defined")]
    UndefinedCell(String),
    #[error("reference cycle through cell {0:?}")]
    ReferenceCycle(String),
    #[error("reference to {0:?} carries a transform; only identity placements can be expanded")]
    UnsupportedTransform(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GdsMode {
    Flat,
    Arrayed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdsOptions {
    /// Database unit in meters. Must divide 1 nm evenly.
    pub database_unit: f64,
    /// How many database units make one user unit (1000 → user unit = 1 µm).
    pub user_unit_in_db_units: f64,
    pub layer: i16,
    pub datatype: i16,
    /// Layer for openings under [`Polarity::Walls`].
    pub cutout_layer: i16,
    pub mode: GdsMode,
    pub polarity: Polarity,
    pub library_name: String,
    pub top_cell_name: String,
    /// BGNLIB/BGNSTR modification and access time; zeros when `None`.
    pub timestamp: Option<[i16; 6]>,
}

impl Default for GdsOptions {
    fn default() -> Self {
        GdsOptions {
            database_unit: 1e-9,
            user_unit_in_db_units: 1000.0,
            layer: 1,
            datatype: 0,
            cutout_layer: 2,
            mode: GdsMode::Arrayed,
            polarity: Polarity::Openings,
            library_name: "LOTUS".into(),
            top_cell_name: "TOP".into(),
            timestamp: None,
        }
    }
}

impl GdsOptions {
    fn db_per_nm(&self) -> Result<i64, GdsError> {
        let Self {
            database_unit: db,
            user_unit_in_db_units: uu,
            ..
        } = self;
        if !(db.is_finite() && *db > 0.0 && uu.is_finite() && *uu > 0.0) {
            return Err(GdsError::InvalidOptions("units must be positive".into()));
        }
        let factor = (1e-9 / db).round();
        if factor < 1.0 || ((factor * db) - 1e-9).abs() > 1e-9 * 1e-9 {
            return Err(GdsError::InvalidOptions(format!(
                "database unit {db} m does not divide 1 nm"
            )));
        }
        for (what, l) in [("layer", self.layer), ("cutout_layer", self.cutout_layer)] {
            if !(0..=255).contains(&l) {
                return Err(GdsError::InvalidOptions(format!(
                    "{what} {l} is not in 0..=255"
                )));
            }
        }
        if self.datatype < 0 {
            return Err(GdsError::InvalidOptions(format!(
                "datatype {} is negative",
                self.datatype
            )));
        }
        Ok(factor as i64)
    }
}

/// Polygon on a layer. `points` is closed: the first vertex is repeated last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Boundary {
    pub layer: i16,
    pub datatype: i16,
    pub points: Vec<Point>,
}

impl Boundary {
    fn from_ring(layer: i16, datatype: i16, ring: &[Point]) -> Self {
        let mut points = ring.to_vec();
        if let Some(&first) = ring.first() {
            points.push(first);
        }
        Boundary {
            layer,
            datatype,
            points,
        }
    }

    /// Vertices without the closing repeat.
    pub fn ring(&self) -> &[Point] {
        &self.points[..self.points.len().saturating_sub(1)]
    }

    fn translate(&self, by: Point) -> Boundary {
        Boundary {
            points: self.points.iter().map(|&p| p + by).collect(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Strans {
    pub reflect: bool,
    pub magnification: Option<f64>,
    pub angle: Option<f64>,
}

impl Strans {
    fn is_identity(&self) -> bool {
        !self.reflect
            && self.magnification.is_none_or(|m| m == 1.0)
            && self.angle.is_none_or(|a| a == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Single {
        cell: String,
        origin: Point,
        strans: Option<Strans>,
    },
    Array {
        cell: String,
        origin: Point,
        cols: u16,
        rows: u16,
        col_step: Point,
        row_step: Point,
        strans: Option<Strans>,
    },
}

impl Reference {
    pub fn cell(&self) -> &str {
        match self {
            Reference::Single { cell, .. } | Reference::Array { cell, .. } => cell,
        }
    }

    fn strans(&self) -> Option<&Strans> {
        match self {
            Reference::Single { strans, .. } | Reference::Array { strans, .. } => strans.as_ref(),
        }
    }

    /// Placement offsets of every instance.
    pub fn offsets(&self) -> Vec<Point> {
        match self {
            Reference::Single { origin, .. } => vec![*origin],
            Reference::Array {
                origin,
                cols,
                rows,
                col_step,
                row_step,
                ..
            } => {
                let mut out = Vec::with_capacity(*cols as usize * *rows as usize);
                for r in 0..*rows as Nm {
                    for c in 0..*cols as Nm {
                        out.push(Point::new(
                            origin.x + c * col_step.x + r * row_step.x,
                            origin.y + c * col_step.y + r * row_step.y,
                        ));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MaskCell {
    pub name: String,
    pub boundaries: Vec<Boundary>,
    pub references: Vec<Reference>,
}

/// In-memory GDSII library. Coordinates are in database units.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGeometry {
    pub library_name: String,
    /// Size of a database unit in user units.
    pub db_in_user_units: f64,
    /// Size of a database unit in meters.
    pub db_in_meters: f64,
    pub timestamp: [i16; 6],
    pub cells: Vec<MaskCell>,
    /// Elements of kinds this crate does not model (PATH, TEXT, BOX, NODE).
    pub skipped_elements: usize,
}

impl MaskGeometry {
    pub fn cell(&self, name: &str) -> Option<&MaskCell> {
        self.cells.iter().find(|c| c.name == name)
    }

    /// Cells no other cell references, in file order.
    pub fn top_cells(&self) -> Vec<&str> {
        let referenced: HashSet<&str> = self
            .cells
            .iter()
            .flat_map(|c| c.references.iter().map(Reference::cell))
            .collect();
        self.cells
            .iter()
            .map(|c| c.name.as_str())
            .filter(|n| !referenced.contains(n))
            .collect()
    }

    /// All boundaries under `cell` with references flattened.
    pub fn expand(&self, cell: &str) -> Result<Vec<Boundary>, GdsError> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.expand_into(cell, Point::new(0, 0), &mut stack, &mut out)?;
        Ok(out)
    }

    fn expand_into(
        &self,
        name: &str,
        offset: Point,
        stack: &mut Vec<String>,
        out: &mut Vec<Boundary>,
    ) -> Result<(), GdsError> {
        if stack.iter().any(|s| s == name) {
            return Err(GdsError::ReferenceCycle(name.to_string()));
        }
        let cell = self
            .cell(name)
            .ok_or_else(|| GdsError::UndefinedCell(name.to_string()))?;
        stack.push(name.to_string());
        out.extend(cell.boundaries.iter().map(|b| b.translate(offset)));
        for r in &cell.references {
            if r.strans().is_some_and(|s| !s.is_identity()) {
                return Err(GdsError::UnsupportedTransform(r.cell().to_string()));
            }
            let child = self
                .cell(r.cell())
                .ok_or_else(|| GdsError::UndefinedCell(r.cell().to_string()))?;
            if child.references.is_empty() {
                // Fast path for leaf cells such as the hexagon structures.
                for o in r.offsets() {
                    let at = offset + o;
                    out.extend(child.boundaries.iter().map(|b| b.translate(at)));
                }
            } else {
                for o in r.offsets() {
                    self.expand_into(r.cell(), offset + o, stack, out)?;
                }
            }
        }
        stack.pop();
        Ok(())
    }
}

/// Mask library for `pattern` (coordinates scaled from nm to database units).
pub fn build_mask(pattern: Pattern<'_>, opts: &GdsOptions) -> Result<MaskGeometry, GdsError> {
    let scale = opts.db_per_nm()?;
    for name in [&opts.library_name, &opts.top_cell_name] {
        check_name(name)?;
    }
    let grids = pattern.cell_grids();
    let opening_layer = match opts.polarity {
        Polarity::Openings => opts.layer,
        Polarity::Walls => opts.cutout_layer,
    };

    let mut top = MaskCell {
        name: opts.top_cell_name.clone(),
        ..Default::default()
    };
    let mut shapes = ShapeLibrary::new(&opts.top_cell_name);

    if opts.polarity == Polarity::Walls {
        for g in &grids {
            top.boundaries.push(Boundary::from_ring(
                opts.layer,
                opts.datatype,
                &rect_ring(g.extent()),
            ));
        }
    }
    for g in &grids {
        match opts.mode {
            GdsMode::Flat => {
                for cell in g.cells() {
                    top.boundaries.push(Boundary::from_ring(
                        opening_layer,
                        opts.datatype,
                        &cell.opening.0,
                    ));
                }
            }
            GdsMode::Arrayed => arrayed_references(g, &mut shapes, &mut top.references),
        }
    }

    let mut cells: Vec<MaskCell> = shapes
        .into_cells()
        .into_iter()
        .map(|(name, poly)| MaskCell {
            name,
            boundaries: vec![Boundary::from_ring(opening_layer, opts.datatype, &poly.0)],
            references: Vec::new(),
        })
        .collect();
    cells.push(top);

    if scale != 1 {
        for c in &mut cells {
            scale_cell(c, scale);
        }
    }
    Ok(MaskGeometry {
        library_name: opts.library_name.clone(),
        db_in_user_units: 1.0 / opts.user_unit_in_db_units,
        db_in_meters: opts.database_unit,
        timestamp: opts.timestamp.unwrap_or([0; 6]),
        cells,
        skipped_elements: 0,
    })
}

fn scale_cell(c: &mut MaskCell, s: i64) {
    let sp = |p: &mut Point| {
        p.x *= s;
        p.y *= s;
    };
    for b in &mut c.boundaries {
        b.points.iter_mut().for_each(sp);
    }
    for r in &mut c.references {
        match r {
            Reference::Single { origin, .. } => sp(origin),
            Reference::Array {
                origin,
                col_step,
                row_step,
                ..
            } => {
                sp(origin);
                sp(col_step);
                sp(row_step);
            }
        }
    }
}

fn rect_ring(r: &Rect) -> Vec<Point> {
    vec![
        Point::new(r.x, r.y),
        Point::new(r.right(), r.y),
        Point::new(r.right(), r.top()),
        Point::new(r.x, r.top()),
    ]
}

/// Distinct relative opening shapes, named in first-use order.
struct ShapeLibrary {
    prefix: String,
    names: BTreeMap<Polygon, String>,
    order: Vec<Polygon>,
}

impl ShapeLibrary {
    fn new(top: &str) -> Self {
        // Keep structure names clear of the top cell name.
        let prefix = if top.starts_with("HEX") {
            format!("{top}_HEX")
        } else {
            "HEX".to_string()
        };
        ShapeLibrary {
            prefix,
            names: BTreeMap::new(),
            order: Vec::new(),
        }
    }

    fn name_for(&mut self, shape: Polygon) -> String {
        if let Some(n) = self.names.get(&shape) {
            return n.clone();
        }
        let name = format!("{}_{}", self.prefix, self.order.len());
        self.names.insert(shape.clone(), name.clone());
        self.order.push(shape);
        name
    }

    fn into_cells(self) -> Vec<(String, Polygon)> {
        let ShapeLibrary { names, order, .. } = self;
        order.into_iter().map(|p| (names[&p].clone(), p)).collect()
    }
}

/// Runs of consecutive indices sharing a key.
fn runs<K: PartialEq>(keys: impl Iterator<Item = K>) -> Vec<(usize, usize, K)> {
    let mut out: Vec<(usize, usize, K)> = Vec::new();
    for (i, k) in keys.enumerate() {
        match out.last_mut() {
            Some((_, len, last)) if *last == k => *len += 1,
            _ => out.push((i, 1, k)),
        }
    }
    out
}

fn arrayed_references(grid: &CellGrid, shapes: &mut ShapeLibrary, refs: &mut Vec<Reference>) {
    let ext = *grid.extent();
    let frame = *grid.frame();
    let bounds = hexagon_opening(grid.max_diameter())
        .bounds()
        .unwrap_or(Rect::new(0, 0, 0, 0));
    for parity in 0..2 {
        let ncols = grid.cols_for_parity(parity);
        let nrows = grid.rows_for_parity(parity);
        if ncols == 0 || nrows == 0 {
            continue;
        }
        let col_runs = runs((0..ncols).map(|i| {
            let x = grid.col_x(parity, i);
            (
                grid.diameter_at(x),
                (ext.x - x).max(bounds.x),
                (ext.right() - x).min(bounds.right()),
            )
        }));
        let row_runs = runs((0..nrows).map(|m| {
            let y = grid.row_y(parity + 2 * m);
            ((ext.y - y).max(bounds.y), (ext.top() - y).min(bounds.top()))
        }));
        for &(r0, rlen, (ymin, ymax)) in &row_runs {
            for &(c0, clen, (d, xmin, xmax)) in &col_runs {
                let window = Window {
                    xmin,
                    xmax,
                    ymin,
                    ymax,
                };
                let shape = clip_to_window(&hexagon_opening(d), &window);
                if shape.0.is_empty() {
                    continue;
                }
                let cell = shapes.name_for(shape);
                let origin = Point::new(grid.col_x(parity, c0), grid.row_y(parity + 2 * r0));
                push_array(
                    refs,
                    cell,
                    origin,
                    clen,
                    rlen,
                    frame.pitch,
                    2 * frame.row_period,
                );
            }
        }
    }
}

fn push_array(
    refs: &mut Vec<Reference>,
    cell: String,
    origin: Point,
    cols: usize,
    rows: usize,
    dx: Nm,
    dy: Nm,
) {
    for r0 in (0..rows).step_by(MAX_ARRAY_DIM) {
        for c0 in (0..cols).step_by(MAX_ARRAY_DIM) {
            let nc = (cols - c0).min(MAX_ARRAY_DIM);
            let nr = (rows - r0).min(MAX_ARRAY_DIM);
            let at = Point::new(origin.x + c0 as Nm * dx, origin.y + r0 as Nm * dy);
            refs.push(if nc == 1 && nr == 1 {
                Reference::Single {
                    cell: cell.clone(),
                    origin: at,
                    strans: None,
                }
            } else {
                Reference::Array {
                    cell: cell.clone(),
                    origin: at,
                    cols: nc as u16,
                    rows: nr as u16,
                    col_step: Point::new(dx, 0),
                    row_step: Point::new(0, dy),
                    strans: None,
                }
            });
        }
    }
}

fn check_name(name: &str) -> Result<(), GdsError> {
    if name.is_empty() || !name.is_ascii() || name.contains('\0') {
        return Err(GdsError::InvalidName(name.to_string()));
    }
    Ok(())
}

/// Encode `value` as an 8-byte excess-64 real.
pub fn encode_real8(value: f64) -> [u8; 8] {
    if value == 0.0 || !value.is_finite() {
        return [0; 8];
    }
    let sign = if value < 0.0 { 0x80u8 } else { 0 };
    let mut m = value.abs();
    let mut exp: i32 = 64;
    // Scaling by 16 is exact in binary floating point.
    while m >= 1.0 {
        m /= 16.0;
        exp += 1;
    }
    while m < 1.0 / 16.0 {
        m *= 16.0;
        exp -= 1;
    }
    let mut mantissa = (m * (1u64 << 56) as f64).round() as u64;
    if mantissa >= 1u64 << 56 {
        mantissa >>= 4;
        exp += 1;
    }
    let exp = exp.clamp(0, 127) as u8;
    let mut out = mantissa.to_be_bytes();
    out[0] = sign | exp;
    out
}

pub fn decode_real8(b: [u8; 8]) -> f64 {
    let sign = if b[0] & 0x80 != 0 { -1.0 } else { 1.0 };
    let exp = (b[0] & 0x7F) as i32 - 64;
    let mut mb = b;
    mb[0] = 0;
    let mantissa = u64::from_be_bytes(mb) as f64 / (1u64 << 56) as f64;
    sign * mantissa * 16f64.powi(exp)
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn record(&mut self, rt: u8, dtype: u8, payload: &[u8]) {
        let len = (payload.len() + 4) as u16;
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.push(rt);
        self.buf.push(dtype);
        self.buf.extend_from_slice(payload);
    }

    fn empty(&mut self, rt: u8) {
        self.record(rt, dt::NONE, &[]);
    }

    fn i16s(&mut self, rt: u8, v: &[i16]) {
        let p: Vec<u8> = v.iter().flat_map(|x| x.to_be_bytes()).collect();
        self.record(rt, dt::I16, &p);
    }

    fn ascii(&mut self, rt: u8, s: &str) {
        let mut p = s.as_bytes().to_vec();
        if p.len() % 2 == 1 {
            p.push(0);
        }
        self.record(rt, dt::ASCII, &p);
    }

    fn reals(&mut self, rt: u8, v: &[f64]) {
        let p: Vec<u8> = v.iter().flat_map(|&x| encode_real8(x)).collect();
        self.record(rt, dt::REAL8, &p);
    }

    fn xy(&mut self, pts: &[Point]) -> Result<(), GdsError> {
        let mut p = Vec::with_capacity(pts.len() * 8);
        for pt in pts {
            for v in [pt.x, pt.y] {
                let v32 = i32::try_from(v).map_err(|_| GdsError::CoordinateOverflow(v))?;
                p.extend_from_slice(&v32.to_be_bytes());
            }
        }
        self.record(rec::XY, dt::I32, &p);
        Ok(())
    }

    fn strans(&mut self, s: &Strans) {
        let bits: u16 = if s.reflect { 0x8000 } else { 0 };
        self.record(rec::STRANS, dt::BITS, &bits.to_be_bytes());
        if let Some(m) = s.magnification {
            self.reals(rec::MAG, &[m]);
        }
        if let Some(a) = s.angle {
            self.reals(rec::ANGLE, &[a]);
        }
    }
}

/// Serialize a library to GDSII bytes.
pub fn encode_gdsii(geom: &MaskGeometry) -> Result<Vec<u8>, GdsError> {
    check_name(&geom.library_name)?;
    let mut w = Writer { buf: Vec::new() };
    let mut stamp = [0i16; 12];
    stamp[..6].copy_from_slice(&geom.timestamp);
    stamp[6..].copy_from_slice(&geom.timestamp);

    w.i16s(rec::HEADER, &[GDS_VERSION]);
    w.i16s(rec::BGNLIB, &stamp);
    w.ascii(rec::LIBNAME, &geom.library_name);
    w.reals(rec::UNITS, &[geom.db_in_user_units, geom.db_in_meters]);
    for cell in &geom.cells {
        check_name(&cell.name)?;
        w.i16s(rec::BGNSTR, &stamp);
        w.ascii(rec::STRNAME, &cell.name);
        for b in &cell.boundaries {
            if b.points.len() > MAX_BOUNDARY_VERTICES {
                return Err(GdsError::TooManyVertices(b.points.len()));
            }
            w.empty(rec::BOUNDARY);
            w.i16s(rec::LAYER, &[b.layer]);
            w.i16s(rec::DATATYPE, &[b.datatype]);
            w.xy(&b.points)?;
            w.empty(rec::ENDEL);
        }
        for r in &cell.references {
            check_name(r.cell())?;
            match r {
                Reference::Single {
                    cell,
                    origin,
                    strans,
                } => {
                    w.empty(rec::SREF);
                    w.ascii(rec::SNAME, cell);
                    if let Some(s) = strans {
                        w.strans(s);
                    }
                    w.xy(&[*origin])?;
                }
                Reference::Array {
                    cell,
                    origin,
                    cols,
                    rows,
                    col_step,
                    row_step,
                    strans,
                } => {
                    if *cols as usize > MAX_ARRAY_DIM || *rows as usize > MAX_ARRAY_DIM {
                        return Err(GdsError::InvalidOptions(format!(
                            "array {cols}×{rows} exceeds {MAX_ARRAY_DIM}"
                        )));
                    }
                    w.empty(rec::AREF);
                    w.ascii(rec::SNAME, cell);
                    if let Some(s) = strans {
                        w.strans(s);
                    }
                    w.i16s(rec::COLROW, &[*cols as i16, *rows as i16]);
                    let (c, r) = (*cols as Nm, *rows as Nm);
                    w.xy(&[
                        *origin,
                        Point::new(origin.x + c * col_step.x, origin.y + c * col_step.y),
                        Point::new(origin.x + r * row_step.x, origin.y + r * row_step.y),
                    ])?;
                }
            }
            w.empty(rec::ENDEL);
        }
        w.empty(rec::ENDSTR);
    }
    w.empty(rec::ENDLIB);
    Ok(w.buf)
}

/// Mask for `pattern`, serialized.
pub fn write_gdsii(pattern: Pattern<'_>, opts: &GdsOptions) -> Result<Vec<u8>, GdsError> {
    encode_gdsii(&build_mask(pattern, opts)?)
}

struct Record<'a> {
    offset: usize,
    rt: u8,
    dtype: u8,
    data: &'a [u8],
}

impl Record<'_> {
    fn err(&self, msg: impl Into<String>) -> GdsError {
        GdsError::Parse {
            offset: self.offset,
            record: record_name(self.rt),
            msg: msg.into(),
        }
    }

    fn expect_dtype(&self, dtype: u8) -> Result<(), GdsError> {
        if self.dtype != dtype {
            return Err(self.err(format!(
                "data type 0x{:02X}, expected 0x{dtype:02X}",
                self.dtype
            )));
        }
        Ok(())
    }

    fn i16s(&self) -> Result<Vec<i16>, GdsError> {
        self.expect_dtype(dt::I16)?;
        Ok(self
            .data
            .chunks_exact(2)
            .map(|c| i16::from_be_bytes([c[0], c[1]]))
            .collect())
    }

    fn i16_at(&self, i: usize) -> Result<i16, GdsError> {
        self.i16s()?
            .get(i)
            .copied()
            .ok_or_else(|| self.err("payload too short"))
    }

    fn points(&self) -> Result<Vec<Point>, GdsError> {
        self.expect_dtype(dt::I32)?;
        if !self.data.len().is_multiple_of(8) {
            return Err(self.err("XY payload is not a whole number of points"));
        }
        Ok(self
            .data
            .chunks_exact(8)
            .map(|c| {
                Point::new(
                    i32::from_be_bytes([c[0], c[1], c[2], c[3]]) as Nm,
                    i32::from_be_bytes([c[4], c[5], c[6], c[7]]) as Nm,
                )
            })
            .collect())
    }

    fn reals(&self) -> Result<Vec<f64>, GdsError> {
        self.expect_dtype(dt::REAL8)?;
        Ok(self
            .data
            .chunks_exact(8)
            .map(|c| decode_real8(c.try_into().unwrap()))
            .collect())
    }

    fn ascii(&self) -> Result<String, GdsError> {
        self.expect_dtype(dt::ASCII)?;
        let end = self
            .data
            .iter()
            .position(|&b| b == 0)
            .unwrap_or(self.data.len());
        let s = &self.data[..end];
        if !s.is_ascii() {
            return Err(self.err("string is not ASCII"));
        }
        Ok(String::from_utf8_lossy(s).into_owned())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self) -> Result<Record<'a>, GdsError> {
        let offset = self.pos;
        let eof = |msg: &str| GdsError::Parse {
            offset,
            record: "stream",
            msg: msg.to_string(),
        };
        if self.bytes.len() < offset + 4 {
            return Err(eof("truncated record header"));
        }
        let len = u16::from_be_bytes([self.bytes[offset], self.bytes[offset + 1]]) as usize;
        let rt = self.bytes[offset + 2];
        let dtype = self.bytes[offset + 3];
        let err = |msg: String| GdsError::Parse {
            offset,
            record: record_name(rt),
            msg,
        };
        if len < 4 || !len.is_multiple_of(2) {
            return Err(err(format!("invalid record length {len}")));
        }
        if self.bytes.len() < offset + len {
            return Err(err(format!(
                "record of {len} bytes truncated at end of stream"
            )));
        }
        self.pos += len;
        Ok(Record {
            offset,
            rt,
            dtype,
            data: &self.bytes[offset + 4..offset + len],
        })
    }

    fn expect(&mut self, rt: u8) -> Result<Record<'a>, GdsError> {
        let r = self.next()?;
        if r.rt != rt {
            return Err(r.err(format!("expected {}", record_name(rt))));
        }
        Ok(r)
    }
}

/// Parse a GDSII stream. Unmodelled element kinds are skipped and counted.
pub fn read_gdsii(bytes: &[u8]) -> Result<MaskGeometry, GdsError> {
    let mut rd = Reader { bytes, pos: 0 };
    rd.expect(rec::HEADER)?.i16s()?;
    let bgn = rd.expect(rec::BGNLIB)?;
    let stamp = bgn.i16s()?;
    let mut timestamp = [0i16; 6];
    for (t, s) in timestamp.iter_mut().zip(&stamp) {
        *t = *s;
    }
    let library_name = rd.expect(rec::LIBNAME)?.ascii()?;
    let units = loop {
        // REFLIBS, FONTS, ATTRTABLE, GENERATIONS and FORMAT may precede UNITS.
        let r = rd.next()?;
        if r.rt == rec::UNITS {
            break r;
        }
        if matches!(r.rt, rec::BGNSTR | rec::ENDLIB) {
            return Err(r.err("UNITS missing"));
        }
    };
    let u = units.reals()?;
    if u.len() != 2 {
        return Err(units.err("UNITS needs two reals"));
    }

    let mut geom = MaskGeometry {
        library_name,
        db_in_user_units: u[0],
        db_in_meters: u[1],
        timestamp,
        cells: Vec::new(),
        skipped_elements: 0,
    };
    loop {
        let r = rd.next()?;
        match r.rt {
            rec::ENDLIB => break,
            rec::BGNSTR => {
                let name = rd.expect(rec::STRNAME)?.ascii()?;
                let cell = read_structure(&mut rd, name, &mut geom.skipped_elements)?;
                geom.cells.push(cell);
            }
            _ => return Err(r.err("expected BGNSTR or ENDLIB")),
        }
    }
    Ok(geom)
}

#[derive(Default)]
struct ElementFields {
    layer: Option<i16>,
    datatype: Option<i16>,
    xy: Option<Vec<Point>>,
    sname: Option<String>,
    colrow: Option<(i16, i16)>,
    strans: Option<Strans>,
}

fn read_structure(
    rd: &mut Reader<'_>,
    name: String,
    skipped: &mut usize,
) -> Result<MaskCell, GdsError> {
    let mut cell = MaskCell {
        name,
        ..Default::default()
    };
    loop {
        let head = rd.next()?;
        match head.rt {
            rec::ENDSTR => return Ok(cell),
            rec::BOUNDARY
            | rec::SREF
            | rec::AREF
            | rec::PATH
            | rec::TEXT
            | rec::NODE
            | rec::BOX => {}
            _ => return Err(head.err("expected an element or ENDSTR")),
        }
        let mut f = ElementFields::default();
        loop {
            let r = rd.next()?;
            match r.rt {
                rec::ENDEL => break,
                rec::LAYER => f.layer = Some(r.i16_at(0)?),
                rec::DATATYPE => f.datatype = Some(r.i16_at(0)?),
                rec::XY => f.xy = Some(r.points()?),
                rec::SNAME => f.sname = Some(r.ascii()?),
                rec::COLROW => f.colrow = Some((r.i16_at(0)?, r.i16_at(1)?)),
                rec::STRANS => {
                    r.expect_dtype(dt::BITS)?;
                    let bits = r.data.first().copied().unwrap_or(0);
                    f.strans.get_or_insert_with(Strans::default).reflect = bits & 0x80 != 0;
                }
                rec::MAG => {
                    f.strans.get_or_insert_with(Strans::default).magnification =
                        r.reals()?.first().copied()
                }
                rec::ANGLE => {
                    f.strans.get_or_insert_with(Strans::default).angle = r.reals()?.first().copied()
                }
                rec::ENDSTR | rec::ENDLIB | rec::BGNSTR => {
                    return Err(r.err("element not terminated by ENDEL"))
                }
                _ => {}
            }
        }
        let missing = |what: &str| head.err(format!("{} without {what}", record_name(head.rt)));
        match head.rt {
            rec::BOUNDARY => {
                let points = f.xy.ok_or_else(|| missing("XY"))?;
                if points.len() < 4 || points.first() != points.last() {
                    return Err(head.err("boundary is not a closed polygon of at least 3 vertices"));
                }
                cell.boundaries.push(Boundary {
                    layer: f.layer.ok_or_else(|| missing("LAYER"))?,
                    datatype: f.datatype.ok_or_else(|| missing("DATATYPE"))?,
                    points,
                });
            }
            rec::SREF => {
                let xy = f.xy.ok_or_else(|| missing("XY"))?;
                let origin = *xy.first().ok_or_else(|| missing("a placement point"))?;
                cell.references.push(Reference::Single {
                    cell: f.sname.ok_or_else(|| missing("SNAME"))?,
                    origin,
                    strans: f.strans,
                });
            }
            rec::AREF => {
                let xy = f.xy.ok_or_else(|| missing("XY"))?;
                let (cols, rows) = f.colrow.ok_or_else(|| missing("COLROW"))?;
                if xy.len() != 3 || cols <= 0 || rows <= 0 {
                    return Err(head.err("AREF needs three XY points and positive COLROW"));
                }
                let (c, r) = (cols as Nm, rows as Nm);
                let step = |p: Point, n: Nm| -> Result<Point, GdsError> {
                    let d = p - xy[0];
                    if d.x % n != 0 || d.y % n != 0 {
                        return Err(
                            head.err("AREF displacement is not a whole multiple of its count")
                        );
                    }
                    Ok(Point::new(d.x / n, d.y / n))
                };
                cell.references.push(Reference::Array {
                    cell: f.sname.ok_or_else(|| missing("SNAME"))?,
                    origin: xy[0],
                    cols: cols as u16,
                    rows: rows as u16,
                    col_step: step(xy[1], c)?,
                    row_step: step(xy[2], r)?,
                    strans: f.strans,
                });
            }
            _ => *skipped += 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{HoneycombSpec, Layout, Zone};

    fn crop_layout(w: Nm, h: Nm) -> Layout {
        let z = Zone::new(HoneycombSpec::paper_design_1(), Rect::new(0, 0, w, h)).unwrap();
        Layout::new("crop", vec![z]).unwrap()
    }

    fn sorted_rings(bs: &[Boundary]) -> Vec<Vec<Point>> {
        let mut v: Vec<Vec<Point>> = bs.iter().map(|b| b.ring().to_vec()).collect();
        v.sort();
        v
    }

    #[test]
    fn real8_known_encodings() {
        assert_eq!(encode_real8(1.0), [0x41, 0x10, 0, 0, 0, 0, 0, 0]);
        assert_eq!(encode_real8(-2.0), [0xC1, 0x20, 0, 0, 0, 0, 0, 0]);
        assert_eq!(encode_real8(0.5), [0x40, 0x80, 0, 0, 0, 0, 0, 0]);
        assert_eq!(encode_real8(0.0), [0; 8]);
        for v in [1e-3, 1e-9, 123.456, -7.25e-12, 0.1] {
            let back = decode_real8(encode_real8(v));
            assert!((back - v).abs() <= v.abs() * 1e-15, "{v} -> {back}");
        }
    }

    #[test]
    fn header_bytes() {
        let bytes =
            write_gdsii(Pattern::Layout(&Layout::empty("e")), &GdsOptions::default()).unwrap();
        assert_eq!(&bytes[..6], &[0x00, 0x06, 0x00, 0x02, 0x02, 0x58]);
        // BGNLIB: 28 bytes, dates zeroed.
        assert_eq!(&bytes[6..10], &[0x00, 0x1C, 0x01, 0x02]);
        assert!(bytes[10..34].iter().all(|&b| b == 0));
    }

    #[test]
    fn empty_layout_round_trips() {
        let g = build_mask(Pattern::Layout(&Layout::empty("e")), &GdsOptions::default()).unwrap();
        let back = read_gdsii(&encode_gdsii(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.top_cells(), vec!["TOP"]);
        assert!(back.expand("TOP").unwrap().is_empty());
    }

    #[test]
    fn names_are_padded_to_even_length() {
        let opts = GdsOptions {
            library_name: "ABC".into(),
            ..GdsOptions::default()
        };
        let bytes = write_gdsii(Pattern::Layout(&Layout::empty("e")), &opts).unwrap();
        let at = 6 + 28;
        assert_eq!(
            &bytes[at..at + 8],
            &[0x00, 0x08, 0x02, 0x06, b'A', b'B', b'C', 0]
        );
        assert_eq!(read_gdsii(&bytes).unwrap().library_name, "ABC");
    }

    #[test]
    fn option_errors() {
        let l = crop_layout(8000, 8000);
        let bad_name = GdsOptions {
            top_cell_name: "tøp".into(),
            ..GdsOptions::default()
        };
        assert!(matches!(
            write_gdsii(Pattern::Layout(&l), &bad_name),
            Err(GdsError::InvalidName(_))
        ));
        let empty = GdsOptions {
            library_name: String::new(),
            ..GdsOptions::default()
        };
        assert!(write_gdsii(Pattern::Layout(&l), &empty).is_err());
        let bad_unit = GdsOptions {
            database_unit: 3e-9,
            ..GdsOptions::default()
        };
        assert!(matches!(
            write_gdsii(Pattern::Layout(&l), &bad_unit),
            Err(GdsError::InvalidOptions(_))
        ));
        let bad_layer = GdsOptions {
            layer: 300,
            ..GdsOptions::default()
        };
        assert!(write_gdsii(Pattern::Layout(&l), &bad_layer).is_err());
    }

    #[test]
    fn coordinate_overflow() {
        let z = Zone::new(
            HoneycombSpec::paper_design_1(),
            Rect::new(3_000_000_000, 0, 4000, 4000),
        )
        .unwrap();
        let l = Layout::new("far", vec![z]).unwrap();
        let opts = GdsOptions {
            mode: GdsMode::Flat,
            ..GdsOptions::default()
        };
        assert!(matches!(
            write_gdsii(Pattern::Layout(&l), &opts),
            Err(GdsError::CoordinateOverflow(_))
        ));
    }

    #[test]
    fn too_many_vertices() {
        let mut g =
            build_mask(Pattern::Layout(&Layout::empty("e")), &GdsOptions::default()).unwrap();
        let ring: Vec<Point> = (0..MAX_BOUNDARY_VERTICES as Nm)
            .map(|i| Point::new(i, i * i))
            .collect();
        g.cells[0].boundaries.push(Boundary::from_ring(1, 0, &ring));
        assert!(matches!(
            encode_gdsii(&g),
            Err(GdsError::TooManyVertices(8192))
        ));
    }

    #[test]
    fn flat_and_arrayed_expand_identically() {
        let l = crop_layout(60_000, 50_000);
        let flat = build_mask(
            Pattern::Layout(&l),
            &GdsOptions {
                mode: GdsMode::Flat,
                ..Default::default()
            },
        )
        .unwrap();
        let arr = build_mask(Pattern::Layout(&l), &GdsOptions::default()).unwrap();
        let a = sorted_rings(&flat.expand("TOP").unwrap());
        let b = sorted_rings(&arr.expand("TOP").unwrap());
        assert_eq!(a.len(), crate::lattice::tile_zone(&l.zones()[0]).len());
        assert_eq!(a, b);
        assert!(arr.cells.len() > 2);
    }

    #[test]
    fn walls_polarity_uses_two_layers() {
        let l = crop_layout(20_000, 20_000);
        let opts = GdsOptions {
            polarity: Polarity::Walls,
            mode: GdsMode::Flat,
            ..Default::default()
        };
        let g = build_mask(Pattern::Layout(&l), &opts).unwrap();
        let all = g.expand("TOP").unwrap();
        assert_eq!(all.iter().filter(|b| b.layer == 1).count(), 1);
        assert_eq!(
            all.iter().filter(|b| b.layer == 2).count(),
            crate::lattice::tile_zone(&l.zones()[0]).len()
        );
    }

    #[test]
    fn finer_database_unit_scales_coordinates() {
        let l = crop_layout(8000, 8000);
        let base = build_mask(
            Pattern::Layout(&l),
            &GdsOptions {
                mode: GdsMode::Flat,
                ..Default::default()
            },
        )
        .unwrap();
        let fine = build_mask(
            Pattern::Layout(&l),
            &GdsOptions {
                mode: GdsMode::Flat,
                database_unit: 1e-10,
                user_unit_in_db_units: 10_000.0,
                ..Default::default()
            },
        )
        .unwrap();
        let a = base.expand("TOP").unwrap();
        let b = fine.expand("TOP").unwrap();
        assert_eq!(a[0].points[0].x * 10, b[0].points[0].x);
        assert_eq!(fine.db_in_meters, 1e-10);
    }

    #[test]
    fn truncated_stream_reports_offset() {
        let bytes = write_gdsii(
            Pattern::Layout(&crop_layout(8000, 8000)),
            &GdsOptions::default(),
        )
        .unwrap();
        let cut = &bytes[..bytes.len() - 3];
        match read_gdsii(cut) {
            Err(GdsError::Parse { offset, .. }) => assert!(offset > 0 && offset < bytes.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
        match read_gdsii(&bytes[..2]) {
            Err(GdsError::Parse {
                offset: 0,
                record: "stream",
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_records() {
        let mut bytes =
            write_gdsii(Pattern::Layout(&Layout::empty("e")), &GdsOptions::default()).unwrap();
        bytes[0] = 0;
        bytes[1] = 3;
        assert!(matches!(
            read_gdsii(&bytes),
            Err(GdsError::Parse {
                offset: 0,
                record: "HEADER",
                ..
            })
        ));
        assert!(read_gdsii(&[0, 4, 0x01, 0x02]).is_err());
    }

    #[test]
    fn expand_detects_missing_cells_and_cycles() {
        let mut g =
            build_mask(Pattern::Layout(&Layout::empty("e")), &GdsOptions::default()).unwrap();
        g.cells[0].references.push(Reference::Single {
            cell: "NOPE".into(),
            origin: Point::new(0, 0),
            strans: None,
        });
        assert!(matches!(g.expand("TOP"), Err(GdsError::UndefinedCell(_))));
        g.cells[0].references[0] = Reference::Single {
            cell: "TOP".into(),
            origin: Point::new(0, 0),
            strans: None,
        };
        assert!(matches!(g.expand("TOP"), Err(GdsError::ReferenceCycle(_))));
    }

    #[test]
    fn strans_round_trips_but_blocks_expansion() {
        let mut g =
            build_mask(Pattern::Layout(&Layout::empty("e")), &GdsOptions::default()).unwrap();
        g.cells.insert(
            0,
            MaskCell {
                name: "A".into(),
                ..Default::default()
            },
        );
        let s = Strans {
            reflect: true,
            magnification: Some(2.0),
            angle: Some(90.0),
        };
        g.cells[1].references.push(Reference::Single {
            cell: "A".into(),
            origin: Point::new(5, 5),
            strans: Some(s),
        });
        let back = read_gdsii(&encode_gdsii(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(matches!(
            back.expand("TOP"),
            Err(GdsError::UnsupportedTransform(_))
        ));
    }

    #[test]
    fn large_arrays_are_split() {
        let mut refs = Vec::new();
        push_array(&mut refs, "H".into(), Point::new(0, 0), 40_000, 3, 10, 20);
        assert_eq!(refs.len(), 2);
        let total: usize = refs.iter().map(|r| r.offsets().len()).sum();
        assert_eq!(total, 120_000);
    }
}

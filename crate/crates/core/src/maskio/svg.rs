use std::fmt::Write;

use super::{Pattern, Polarity};
use crate::error::{Error, Result};
use crate::lattice::Polygon;

const SOLID_FILL: &str = "#3b4a6b";
const VOID_FILL: &str = "#ffffff";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    pub scale_nm_per_px: f64,
    pub max_cells: usize,
    pub polarity: Polarity,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            scale_nm_per_px: 100.0,
            max_cells: 50_000,
            polarity: Polarity::Openings,
        }
    }
}

pub fn write_svg(pattern: Pattern<'_>, scale_nm_per_px: f64, max_cells: usize) -> Result<String> {
    write_svg_with(
        pattern,
        &SvgOptions {
            scale_nm_per_px,
            max_cells,
            ..SvgOptions::default()
        },
    )
}

/// SVG 1.1 preview: one background rectangle per region and one path per opening.
/// The y axis is flipped so the preview matches the mask orientation.
pub fn write_svg_with(pattern: Pattern<'_>, opts: &SvgOptions) -> Result<String> {
    let scale = opts.scale_nm_per_px;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid(
            "svg",
            format!("scale {scale} nm/px must be positive"),
        ));
    }
    let grids = pattern.cell_grids();
    let cells: usize = grids.iter().map(|g| g.len()).sum();
    if cells > opts.max_cells {
        return Err(Error::invalid(
            "svg",
            format!(
                "{cells} cells exceed the limit of {}; crop the layout or raise max_cells",
                opts.max_cells
            ),
        ));
    }
    let (region_fill, opening_fill) = match opts.polarity {
        Polarity::Openings => (SOLID_FILL, VOID_FILL),
        Polarity::Walls => (VOID_FILL, SOLID_FILL),
    };

    let bbox = pattern.bounding_box();
    let (x0, top, w, h) = bbox.map_or((0, 0, 0, 0), |b| (b.x, b.top(), b.width, b.height));
    let px = |v: i64| v as f64 / scale;

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        px(w),
        px(h),
        px(w),
        px(h)
    );
    let _ = writeln!(
        s,
        "<title>{} ({} nm/px)</title>",
        escape(pattern.label()),
        scale
    );
    for g in &grids {
        let e = g.extent();
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{region_fill}\"/>",
            px(e.x - x0),
            px(top - e.top()),
            px(e.width),
            px(e.height)
        );
    }
    let _ = writeln!(s, "<g fill=\"{opening_fill}\" stroke=\"none\">");
    for g in &grids {
        for cell in g.cells() {
            s.push_str("<path d=\"");
            path_data(&mut s, &cell.opening, |p| (px(p.x - x0), px(top - p.y)));
            s.push_str("\"/>\n");
        }
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

fn path_data(s: &mut String, poly: &Polygon, map: impl Fn(&crate::lattice::Point) -> (f64, f64)) {
    for (i, p) in poly.vertices().iter().enumerate() {
        let (x, y) = map(p);
        let _ = write!(s, "{}{x} {y} ", if i == 0 { "M" } else { "L" });
    }
    s.push('Z');
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

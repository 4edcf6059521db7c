//! Mask data output: GDSII streams, SVG previews and summary statistics.

mod gdsii;
mod stats;
mod svg;

use serde::{Deserialize, Serialize};

use crate::gradient::GradientDesign;
use crate::lattice::{tile_zone, CellGrid, Layout, Rect};

pub use gdsii::{
    build_mask, decode_real8, encode_gdsii, encode_real8, read_gdsii, write_gdsii, Boundary,
    GdsError, GdsMode, GdsOptions, MaskCell, MaskGeometry, Reference, Strans,
    MAX_BOUNDARY_VERTICES,
};
pub use stats::{layout_stats, layout_stats_with, PatternStats, Range, RegionStats};
pub use svg::{write_svg, write_svg_with, SvgOptions};

/// Which regions are drawn on the mask layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Hexagonal openings are drawn.
    #[default]
    Openings,
    /// Walls are drawn: region rectangles on the mask layer, openings on a cut-out
    /// layer to be subtracted.
    Walls,
}

/// Anything that renders to lattice cells.
#[derive(Debug, Clone, Copy)]
pub enum Pattern<'a> {
    Layout(&'a Layout),
    Gradient(&'a GradientDesign),
}

impl<'a> Pattern<'a> {
    pub fn label(&self) -> &str {
        match self {
            Pattern::Layout(l) => l.label(),
            Pattern::Gradient(_) => "gradient",
        }
    }

    /// One grid per zone (layouts) or the single channel grid (gradients).
    pub fn cell_grids(&self) -> Vec<CellGrid> {
        match self {
            Pattern::Layout(l) => l.zones().iter().map(tile_zone).collect(),
            Pattern::Gradient(g) => vec![g.cell_grid()],
        }
    }

    pub fn bounding_box(&self) -> Option<Rect> {
        self.cell_grids()
            .iter()
            .map(|g| *g.extent())
            .reduce(|a, b| a.union(&b))
    }

    pub fn cell_count(&self) -> usize {
        self.cell_grids().iter().map(CellGrid::len).sum()
    }
}

impl<'a> From<&'a Layout> for Pattern<'a> {
    fn from(l: &'a Layout) -> Self {
        Pattern::Layout(l)
    }
}

impl<'a> From<&'a GradientDesign> for Pattern<'a> {
    fn from(g: &'a GradientDesign) -> Self {
        Pattern::Gradient(g)
    }
}

//! Deterministic SVG scatter plots.
//!
//! Reference rows are drawn as circles (`<circle class="ref">`), projected
//! rows as X marks (`<path class="proj">`), one element per row. Panels
//! are `<g class="panel">` groups laid out on a grid. Output depends only
//! on the input rows, so identical inputs give identical bytes.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::PointRow;

pub const DEMOCRAT_BLUE: &str = "#2166ac";
pub const REPUBLICAN_RED: &str = "#b2182b";
pub const OTHER_GREY: &str = "#8c8c8c";
const CATEGORICAL: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorBy {
    #[default]
    Party,
    Era,
    Label,
}

impl std::str::FromStr for ColorBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "party" => Ok(ColorBy::Party),
            "era" => Ok(ColorBy::Era),
            "label" => Ok(ColorBy::Label),
            other => Err(Error::argument(format!("unknown color-by field `{other}` (party, era, label)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Glyph {
    pub x: f64,
    pub y: f64,
    pub category: String,
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: Option<String>,
    pub glyphs: Vec<Glyph>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub color_by: ColorBy,
    pub panel_size: f64,
    pub columns: usize,
    pub show_axes: bool,
    pub title: Option<String>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self { color_by: ColorBy::Party, panel_size: 420.0, columns: 1, show_axes: false, title: None }
    }
}

/// Turns table rows into glyphs on the first two axes.
pub fn glyphs(rows: &[PointRow], color_by: ColorBy, projected: bool) -> Result<Vec<Glyph>> {
    rows.iter()
        .map(|r| {
            let category = match color_by {
                ColorBy::Party => r.party.clone(),
                ColorBy::Era => r.era.clone(),
                ColorBy::Label => r
                    .label
                    .clone()
                    .ok_or_else(|| Error::argument("color-by label needs a `label` column"))?,
            };
            Ok(Glyph { x: r.coords[0], y: r.coords[1], category, projected })
        })
        .collect()
}

struct Palette {
    color_by: ColorBy,
    categories: Vec<String>,
}

impl Palette {
    fn color(&self, category: &str) -> &'static str {
        match self.color_by {
            ColorBy::Party => match category {
                "Democrat" => DEMOCRAT_BLUE,
                "Republican" => REPUBLICAN_RED,
                _ => OTHER_GREY,
            },
            _ => {
                let i = self.categories.iter().position(|c| c == category).unwrap_or(0);
                CATEGORICAL[i % CATEGORICAL.len()]
            }
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const MARGIN: f64 = 24.0;
const TITLE_BAND: f64 = 22.0;
const LEGEND_WIDTH: f64 = 150.0;

fn bounds(glyphs: &[Glyph]) -> (f64, f64, f64, f64) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for g in glyphs {
        x0 = x0.min(g.x);
        x1 = x1.max(g.x);
        y0 = y0.min(g.y);
        y1 = y1.max(g.y);
    }
    if !x0.is_finite() {
        return (-1.0, 1.0, -1.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let span = hi - lo;
        if span > 0.0 {
            (lo - 0.03 * span, hi + 0.03 * span)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    (x0, x1, y0, y1)
}

fn render_panel(out: &mut String, panel: &Panel, palette: &Palette, opts: &PlotOptions, ox: f64, oy: f64) {
    let size = opts.panel_size;
    let inner = size - 2.0 * MARGIN;
    let (x0, x1, y0, y1) = bounds(&panel.glyphs);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner;
    let sy = |y: f64| MARGIN + (y1 - y) / (y1 - y0) * inner;

    let _ = writeln!(out, r#"<g class="panel" transform="translate({ox:.1},{oy:.1})">"#);
    let _ = writeln!(
        out,
        r##"<rect class="frame" x="0.5" y="0.5" width="{:.1}" height="{:.1}" fill="none" stroke="#bbbbbb"/>"##,
        size - 1.0,
        size - 1.0
    );
    if let Some(t) = &panel.title {
        let _ = writeln!(out, r#"<text x="{:.1}" y="16" text-anchor="middle" font-size="12">{}</text>"#, size / 2.0, escape(t));
    }
    if opts.show_axes {
        let _ = writeln!(out, r##"<g class="axes" stroke="#444444" font-size="9">"##);
        let _ = writeln!(out, r#"<line x1="{MARGIN}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/>"#, size - MARGIN, size - MARGIN, size - MARGIN);
        let _ = writeln!(out, r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{:.1}"/>"#, size - MARGIN);
        let _ = writeln!(out, r#"<text x="{MARGIN}" y="{:.1}" stroke="none">{x0:.2}</text>"#, size - 8.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" stroke="none">{x1:.2}</text>"#, size - MARGIN, size - 8.0);
        let _ = writeln!(out, r#"<text x="2" y="{:.1}" stroke="none">{y0:.2}</text>"#, size - MARGIN);
        let _ = writeln!(out, r#"<text x="2" y="{:.1}" stroke="none">{y1:.2}</text>"#, MARGIN + 8.0);
        let _ = writeln!(out, "</g>");
    }
    for g in panel.glyphs.iter().filter(|g| !g.projected) {
        let _ = writeln!(
            out,
            r#"<circle class="ref" cx="{:.2}" cy="{:.2}" r="2.5" fill="{}" fill-opacity="0.65"/>"#,
            sx(g.x),
            sy(g.y),
            palette.color(&g.category)
        );
    }
    for g in panel.glyphs.iter().filter(|g| g.projected) {
        let (x, y) = (sx(g.x), sy(g.y));
        let _ = writeln!(
            out,
            r#"<path class="proj" d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="{}" stroke-width="1.4"/>"#,
            x - 3.5,
            y - 3.5,
            x + 3.5,
            y + 3.5,
            x - 3.5,
            y + 3.5,
            x + 3.5,
            y - 3.5,
            palette.color(&g.category)
        );
    }
    let _ = writeln!(out, "</g>");
}

/// Renders panels left to right, `opts.columns` per row, with one shared
/// legend on the right.
pub fn render(panels: &[Panel], opts: &PlotOptions) -> String {
    let categories: Vec<String> = panels
        .iter()
        .flat_map(|p| p.glyphs.iter().map(|g| g.category.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let palette = Palette { color_by: opts.color_by, categories };
    let any_projected = panels.iter().any(|p| p.glyphs.iter().any(|g| g.projected));

    let cols = opts.columns.clamp(1, panels.len().max(1));
    let rows = panels.len().div_ceil(cols).max(1);
    let top = if opts.title.is_some() { TITLE_BAND + 8.0 } else { 0.0 };
    let width = cols as f64 * opts.panel_size + LEGEND_WIDTH;
    let height = (rows as f64 * opts.panel_size + top).max(120.0);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &opts.title {
        let _ = writeln!(out, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="15">{}</text>"#, width / 2.0 - LEGEND_WIDTH / 2.0, escape(t));
    }
    for (i, p) in panels.iter().enumerate() {
        let ox = (i % cols) as f64 * opts.panel_size;
        let oy = top + (i / cols) as f64 * opts.panel_size;
        render_panel(&mut out, p, &palette, opts, ox, oy);
    }

    let lx = cols as f64 * opts.panel_size + 12.0;
    let _ = writeln!(out, r#"<g class="legend" font-size="11">"#);
    let mut y = top + 24.0;
    for c in &palette.categories {
        let _ = writeln!(out, r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{}"/>"#, y - 9.0, palette.color(c));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, lx + 16.0, escape(c));
        y += 16.0;
    }
    y += 8.0;
    let _ = writeln!(out, r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#555555"/>"##, lx + 5.0, y - 4.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">reference</text>"#, lx + 16.0);
    if any_projected {
        y += 16.0;
        let _ = writeln!(
            out,
            r##"<path d="M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}" stroke="#555555" stroke-width="1.4"/>"##,
            lx + 1.5,
            y - 7.5,
            lx + 8.5,
            y - 0.5,
            lx + 1.5,
            y - 0.5,
            lx + 8.5,
            y - 7.5
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{y:.1}">projected</text>"#, lx + 16.0);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}

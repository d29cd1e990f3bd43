//! SVG figures of sprays and single droplets.
//!
//! Output is plain SVG 1.1 with fixed-precision coordinates, so equal inputs
//! give byte-identical files. Elements carry `class` attributes (`panel`,
//! `droplet`, `wasserstein`, `euler`, `outline-group`, `track`) that tests
//! and downstream tools can select on.

use nalgebra::DMatrix;
use xmlwriter::{Options, XmlWriter};

use crate::droplet::{BoostedDroplet, DropletGeodesic};
use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, Point};
use crate::spray::EulerSpray;

const PANEL_WIDTH: f64 = 240.0;
const PANEL_GAP: f64 = 24.0;
const MARGIN: f64 = 16.0;
const TITLE_HEIGHT: f64 = 20.0;
const TRACK_SAMPLES: usize = 41;

const WASSERSTEIN_FILL: &str = "#e6a15c";
const WASSERSTEIN_STROKE: &str = "#b35806";
const EULER_FILL: &str = "#a6cee3";
const EULER_STROKE: &str = "#1f78b4";

/// Axis-aligned world box.
#[derive(Clone, Copy, Debug)]
struct Bounds {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Bounds {
    fn empty() -> Self {
        Self { lo: [f64::INFINITY; 2], hi: [f64::NEG_INFINITY; 2] }
    }

    fn include_ellipse(&mut self, e: &Ellipse) {
        for i in 0..2 {
            let ext = ((e.rot[(i, 0)] * e.axes[0]).powi(2) + (e.rot[(i, 1)] * e.axes[1]).powi(2)).sqrt();
            self.lo[i] = self.lo[i].min(e.center[i] - ext);
            self.hi[i] = self.hi[i].max(e.center[i] + ext);
        }
    }

    fn include_point(&mut self, p: [f64; 2]) {
        for i in 0..2 {
            self.lo[i] = self.lo[i].min(p[i]);
            self.hi[i] = self.hi[i].max(p[i]);
        }
    }

    /// Padded box, or `[-1, 1]^2` when nothing was included.
    fn finish(self) -> Self {
        if !(self.lo[0] <= self.hi[0]) {
            return Self { lo: [-1.0; 2], hi: [1.0; 2] };
        }
        let pad = 0.05 * (self.hi[0] - self.lo[0]).max(self.hi[1] - self.lo[1]).max(1e-9);
        Self { lo: [self.lo[0] - pad, self.lo[1] - pad], hi: [self.hi[0] + pad, self.hi[1] + pad] }
    }
}

/// Planar ellipse: center, semi-axes and rotation whose columns are the axes.
struct Ellipse {
    center: [f64; 2],
    axes: [f64; 2],
    rot: DMatrix<f64>,
}

impl Ellipse {
    fn from_ellipsoid(e: &Ellipsoid) -> Self {
        Self { center: [e.center[0], e.center[1]], axes: [e.semi_axes[0], e.semi_axes[1]], rot: e.rotation.clone() }
    }
}

/// World to pixel map of one panel; `y` points up in world coordinates.
struct Panel {
    bounds: Bounds,
    scale: f64,
    left: f64,
    top: f64,
}

impl Panel {
    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        (self.left + (p[0] - self.bounds.lo[0]) * self.scale, self.top + (self.bounds.hi[1] - p[1]) * self.scale)
    }

    fn height(&self) -> f64 {
        (self.bounds.hi[1] - self.bounds.lo[1]) * self.scale
    }

    fn width(&self) -> f64 {
        (self.bounds.hi[0] - self.bounds.lo[0]) * self.scale
    }
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn start_svg(w: &mut XmlWriter, width: f64, height: f64) {
    w.start_element("svg");
    w.write_attribute("xmlns", "http://www.w3.org/2000/svg");
    w.write_attribute("version", "1.1");
    w.write_attribute("width", &fmt(width));
    w.write_attribute("height", &fmt(height));
    w.write_attribute("viewBox", &format!("0 0 {} {}", fmt(width), fmt(height)));
}

fn write_ellipse(w: &mut XmlWriter, panel: &Panel, e: &Ellipse, class: &str, fill: &str, stroke: &str) {
    let (cx, cy) = panel.px(e.center);
    // The y flip turns a counterclockwise world angle into a clockwise one.
    let angle = -e.rot[(1, 0)].atan2(e.rot[(0, 0)]).to_degrees();
    w.start_element("ellipse");
    w.write_attribute("class", class);
    w.write_attribute("cx", &fmt(cx));
    w.write_attribute("cy", &fmt(cy));
    w.write_attribute("rx", &fmt(e.axes[0] * panel.scale));
    w.write_attribute("ry", &fmt(e.axes[1] * panel.scale));
    w.write_attribute("transform", &format!("rotate({} {} {})", fmt(angle), fmt(cx), fmt(cy)));
    w.write_attribute("fill", fill);
    w.write_attribute("stroke", stroke);
    w.write_attribute("stroke-width", "1");
    w.end_element();
}

fn write_line(w: &mut XmlWriter, a: (f64, f64), b: (f64, f64), class: &str) {
    w.start_element("line");
    w.write_attribute("class", class);
    w.write_attribute("x1", &fmt(a.0));
    w.write_attribute("y1", &fmt(a.1));
    w.write_attribute("x2", &fmt(b.0));
    w.write_attribute("y2", &fmt(b.1));
    w.write_attribute("stroke", "#444444");
    w.write_attribute("stroke-width", "0.75");
    w.end_element();
}

fn write_text(w: &mut XmlWriter, x: f64, y: f64, text: &str) {
    w.start_element("text");
    w.write_attribute("x", &fmt(x));
    w.write_attribute("y", &fmt(y));
    w.write_attribute("font-family", "sans-serif");
    w.write_attribute("font-size", "12");
    w.write_attribute("text-anchor", "middle");
    w.write_text(text);
    w.end_element();
}

/// Coordinate axes through the origin, clamped to the panel box.
fn write_axes(w: &mut XmlWriter, panel: &Panel) {
    let b = panel.bounds;
    let x0 = 0f64.clamp(b.lo[0], b.hi[0]);
    let y0 = 0f64.clamp(b.lo[1], b.hi[1]);
    w.start_element("g");
    w.write_attribute("class", "axes");
    write_line(w, panel.px([b.lo[0], y0]), panel.px([b.hi[0], y0]), "axis x");
    write_line(w, panel.px([x0, b.lo[1]]), panel.px([x0, b.hi[1]]), "axis y");
    w.end_element();
}

/// Color of droplet `k` as `#rrggbb`, with hues spread by the golden angle so
/// neighbors differ. `lightness` is in `[0, 1]` at saturation 0.6.
fn shade(k: usize, lightness: f64) -> String {
    let hue = (k as f64 * 137.507_764) % 360.0;
    let chroma = (1.0 - (2.0 * lightness - 1.0).abs()) * 0.6;
    let x = chroma * (1.0 - ((hue / 60.0) % 2.0 - 1.0).abs());
    let (r, g, b) = match (hue / 60.0) as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = lightness - 0.5 * chroma;
    let byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    format!("#{:02x}{:02x}{:02x}", byte(r), byte(g), byte(b))
}

fn check_planar(d: usize) -> Result<()> {
    if d != 2 {
        return Err(Error::InvalidInput(format!("figures are drawn in the plane, got dimension {d}")));
    }
    Ok(())
}

/// Ellipse of the first-order image `T(B_i)` of ball `k`, without the
/// `(1 + eps)` expansion or the unimodular rescaling.
fn target_approx(spray: &EulerSpray, k: usize) -> Ellipse {
    let b = spray.ball(k);
    Ellipse {
        center: [b.image[0], b.image[1]],
        axes: [b.radius * b.eigenvalues[0], b.radius * b.eigenvalues[1]],
        rot: b.frame.clone(),
    }
}

/// One panel per time. Each droplet is drawn as its linearly interpolated
/// (Wasserstein) ellipse with the Euler droplet nested inside, in a shade
/// shared across panels. The panel at `t = 1` also outlines the first-order
/// images `T(B_i)` of the balls. An empty spray gives axes only.
pub fn render_spray_figure(spray: &EulerSpray, times: &[f64]) -> Result<String> {
    if times.is_empty() || times.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidInput("figure times must lie in [0, 1]".into()));
    }
    if let Some(dr) = spray.droplets.first() {
        check_planar(dr.dim())?;
    }
    let mut panels_data: Vec<Vec<(Ellipse, Ellipse)>> = Vec::with_capacity(times.len());
    let mut bounds = Bounds::empty();
    for &t in times {
        let mut row = Vec::with_capacity(spray.len());
        for dr in &spray.droplets {
            let outer = Ellipse::from_ellipsoid(&dr.wasserstein_ellipsoid(t)?);
            let inner = Ellipse::from_ellipsoid(&dr.ellipsoid(t)?);
            bounds.include_ellipse(&outer);
            row.push((outer, inner));
        }
        panels_data.push(row);
    }
    if times.contains(&1.0) {
        for k in 0..spray.len() {
            bounds.include_ellipse(&target_approx(spray, k));
        }
    }
    let bounds = bounds.finish();
    let scale = PANEL_WIDTH / (bounds.hi[0] - bounds.lo[0]);
    let panel_height = (bounds.hi[1] - bounds.lo[1]) * scale;
    let width = 2.0 * MARGIN + times.len() as f64 * PANEL_WIDTH + (times.len() - 1) as f64 * PANEL_GAP;
    let height = 2.0 * MARGIN + TITLE_HEIGHT + panel_height;

    let mut w = XmlWriter::new(Options::default());
    start_svg(&mut w, width, height);
    w.start_element("g");
    w.write_attribute("class", "spray-figure");
    w.write_attribute("data-droplets", &spray.len().to_string());
    w.write_attribute("data-epsilon", &format!("{}", spray.epsilon()));
    for (p, (&t, row)) in times.iter().zip(&panels_data).enumerate() {
        let panel = Panel {
            bounds,
            scale,
            left: MARGIN + p as f64 * (PANEL_WIDTH + PANEL_GAP),
            top: MARGIN + TITLE_HEIGHT,
        };
        w.start_element("g");
        w.write_attribute("class", "panel");
        w.write_attribute("data-t", &format!("{t}"));
        write_text(&mut w, panel.left + 0.5 * panel.width(), MARGIN + 12.0, &format!("t = {t:.2}"));
        write_axes(&mut w, &panel);
        if t == 1.0 {
            for k in 0..spray.len() {
                write_ellipse(&mut w, &panel, &target_approx(spray, k), "target-approx", "none", &shade(k, 0.7));
            }
        }
        for (k, (outer, inner)) in row.iter().enumerate() {
            w.start_element("g");
            w.write_attribute("class", "droplet");
            w.write_attribute("data-index", &k.to_string());
            write_ellipse(&mut w, &panel, outer, "wasserstein", &shade(k, 0.85), &shade(k, 0.4));
            write_ellipse(&mut w, &panel, inner, "euler", &shade(k, 0.5), &shade(k, 0.3));
            w.end_element();
        }
        w.end_element();
    }
    w.end_element();
    Ok(w.end_document())
}

/// Droplet with geodesic `g` starting at the origin and boosted by `boost`,
/// drawn at `t = 0, 1/2, 1` (offset by `0, b/2, b`). Each snapshot nests the
/// Euler droplet inside its Wasserstein ellipse; tracks follow the center and
/// both endpoints of the vertical axis, for both shapes.
pub fn render_droplet_figure(geodesic: &DropletGeodesic, boost: &Point) -> Result<String> {
    check_planar(geodesic.dim())?;
    check_planar(boost.len())?;
    let dr = BoostedDroplet::new(geodesic.clone(), boost.clone(), Point::zeros(2), DMatrix::identity(2, 2))?;
    let snaps = [(0.0, "0", "Ω₀"), (0.5, "b/2", "Ω½"), (1.0, "b", "Ω₁")];
    let mut bounds = Bounds::empty();
    let mut shapes = Vec::new();
    for &(t, _, _) in &snaps {
        let outer = Ellipse::from_ellipsoid(&dr.wasserstein_ellipsoid(t)?);
        let inner = Ellipse::from_ellipsoid(&dr.ellipsoid(t)?);
        bounds.include_ellipse(&outer);
        shapes.push((outer, inner));
    }
    let mut tracks: Vec<(&str, Vec<[f64; 2]>)> = vec![
        ("track center", Vec::new()),
        ("track euler-axis", Vec::new()),
        ("track euler-axis", Vec::new()),
        ("track wasserstein-axis", Vec::new()),
        ("track wasserstein-axis", Vec::new()),
    ];
    for i in 0..TRACK_SAMPLES {
        let t = i as f64 / (TRACK_SAMPLES - 1) as f64;
        let c = dr.center(t);
        let a = dr.ellipsoid(t)?.semi_axes[1];
        let aw = dr.wasserstein_ellipsoid(t)?.semi_axes[1];
        let along = |s: f64| {
            let mut p = [c[0], c[1]];
            p[1] += s;
            p
        };
        let pts = [[c[0], c[1]], along(a), along(-a), along(aw), along(-aw)];
        for (track, p) in tracks.iter_mut().zip(pts) {
            bounds.include_point(p);
            track.1.push(p);
        }
    }
    let bounds = bounds.finish();
    let content_width = 3.0 * PANEL_WIDTH + 2.0 * PANEL_GAP;
    let scale = content_width / (bounds.hi[0] - bounds.lo[0]);
    let panel = Panel { bounds, scale, left: MARGIN, top: MARGIN + TITLE_HEIGHT };
    let width = 2.0 * MARGIN + panel.width();
    let height = 2.0 * MARGIN + 2.0 * TITLE_HEIGHT + panel.height();

    let mut w = XmlWriter::new(Options::default());
    start_svg(&mut w, width, height);
    w.start_element("g");
    w.write_attribute("class", "droplet-figure");
    write_axes(&mut w, &panel);
    for (&(t, offset, label), (outer, inner)) in snaps.iter().zip(&shapes) {
        w.start_element("g");
        w.write_attribute("class", "outline-group");
        w.write_attribute("data-t", &format!("{t}"));
        w.write_attribute("data-offset", offset);
        write_ellipse(&mut w, &panel, outer, "wasserstein", WASSERSTEIN_FILL, WASSERSTEIN_STROKE);
        write_ellipse(&mut w, &panel, inner, "euler", EULER_FILL, EULER_STROKE);
        let (cx, _) = panel.px(outer.center);
        write_text(&mut w, cx, MARGIN + 12.0, label);
        write_text(&mut w, cx, height - MARGIN, offset);
        w.end_element();
    }
    w.start_element("g");
    w.write_attribute("class", "tracks");
    for (class, pts) in &tracks {
        let list: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = panel.px(*p);
                format!("{},{}", fmt(x), fmt(y))
            })
            .collect();
        w.start_element("polyline");
        w.write_attribute("class", class);
        w.write_attribute("points", &list.join(" "));
        w.write_attribute("fill", "none");
        w.write_attribute("stroke", if class.contains("euler") { EULER_STROKE } else { WASSERSTEIN_STROKE });
        w.write_attribute("stroke-width", "1");
        w.write_attribute("stroke-dasharray", "3 2");
        w.end_element();
    }
    w.end_element();
    w.end_element();
    Ok(w.end_document())
}

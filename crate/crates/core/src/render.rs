//! SVG 1.1 figures: domain outlines with nodal-line overlays, one panel per
//! domain, laid out left to right.

use std::fmt::Write;

use crate::geometry::{EdgeTag, FullBoundary, Point};
use crate::nodal::Polyline;

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 560.0;
const MARGIN: f64 = 30.0;
const TITLE_H: f64 = 24.0;

pub struct Panel<'a> {
    pub title: String,
    pub boundary: &'a FullBoundary,
    pub nodal: &'a [Polyline],
}

struct Frame {
    scale: f64,
    x0: f64,
    y0: f64,
    min: Point,
    max: Point,
}

impl Frame {
    fn fit(b: &FullBoundary, x0: f64) -> Frame {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in &b.vertices {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        let scale = (PANEL_W / (max[0] - min[0])).min(PANEL_H / (max[1] - min[1]));
        Frame {
            scale,
            x0,
            y0: MARGIN + TITLE_H,
            min,
            max,
        }
    }

    /// Page coordinates, with the drawing centred in its panel and `x2` up.
    fn map(&self, p: Point) -> (f64, f64) {
        let w = (self.max[0] - self.min[0]) * self.scale;
        let h = (self.max[1] - self.min[1]) * self.scale;
        let x = self.x0 + 0.5 * (PANEL_W - w) + (p[0] - self.min[0]) * self.scale;
        let y = self.y0 + 0.5 * (PANEL_H - h) + (self.max[1] - p[1]) * self.scale;
        (x, y)
    }

    fn points(&self, pts: &[Point]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Maximal runs of consecutive edges sharing a tag.
fn runs(b: &FullBoundary) -> Vec<(EdgeTag, Vec<Point>)> {
    let n = b.vertices.len();
    if n == 0 {
        return Vec::new();
    }
    // start at a tag change so no run wraps around the end
    let start = (0..n)
        .find(|&i| b.edge_tags[i] != b.edge_tags[(i + n - 1) % n])
        .unwrap_or(0);
    let mut out: Vec<(EdgeTag, Vec<Point>)> = Vec::new();
    for s in 0..n {
        let i = (start + s) % n;
        let tag = b.edge_tags[i];
        let (p, q) = (b.vertices[i], b.vertices[(i + 1) % n]);
        match out.last_mut() {
            Some((t, pts)) if *t == tag => pts.push(q),
            _ => out.push((tag, vec![p, q])),
        }
    }
    out
}

pub fn render_svg(panels: &[Panel]) -> String {
    let width = panels.len().max(1) as f64 * (PANEL_W + 2.0 * MARGIN);
    let height = PANEL_H + 2.0 * MARGIN + TITLE_H;
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#).unwrap();
    for (i, panel) in panels.iter().enumerate() {
        let x0 = MARGIN + i as f64 * (PANEL_W + 2.0 * MARGIN);
        let frame = Frame::fit(panel.boundary, x0);
        writeln!(s, r#"<g id="panel-{i}">"#).unwrap();
        writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            x0 + 0.5 * PANEL_W,
            MARGIN + 0.5 * TITLE_H,
            escape(&panel.title)
        )
        .unwrap();
        for (tag, pts) in runs(panel.boundary) {
            let pts_attr = frame.points(&pts);
            match tag {
                EdgeTag::Cut => {
                    writeln!(
                        s,
                        r#"<polyline class="cut" points="{pts_attr}" fill="none" stroke="gray" stroke-width="1" stroke-dasharray="4,3"/>"#
                    )
                    .unwrap();
                    let mid = pts[pts.len() / 2];
                    let (x, y) = frame.map(mid);
                    let dy = if mid[1] > 0.0 { -6.0 } else { 14.0 };
                    writeln!(
                        s,
                        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="10" fill="gray" text-anchor="middle">truncation</text>"#,
                        x,
                        y + dy
                    )
                    .unwrap();
                }
                _ => {
                    writeln!(
                        s,
                        r#"<polyline class="boundary" points="{pts_attr}" fill="none" stroke="black" stroke-width="1.5"/>"#
                    )
                    .unwrap();
                }
            }
        }
        for line in panel.nodal {
            let el = if line.closed { "polygon" } else { "polyline" };
            writeln!(
                s,
                r#"<{el} class="nodal" points="{}" fill="none" stroke="crimson" stroke-width="1.5"/>"#,
                frame.points(&line.points)
            )
            .unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{quarter_boundary, reflect_full, DomainSpec, Profile};

    fn outline() -> FullBoundary {
        let spec = DomainSpec::new(2.0, 1.0, 0.1, Profile::constant(), 4.0);
        reflect_full(&quarter_boundary(&spec).unwrap())
    }

    #[test]
    fn runs_cover_every_edge_once() {
        let b = outline();
        let r = runs(&b);
        let edges: usize = r.iter().map(|(_, p)| p.len() - 1).sum();
        assert_eq!(edges, b.vertices.len());
        assert_eq!(r.iter().filter(|(t, _)| *t == EdgeTag::Cut).count(), 2);
    }

    #[test]
    fn svg_has_dashed_labelled_cuts_and_overlay() {
        let b = outline();
        let nodal = [Polyline {
            points: vec![[0.0, -4.0], [0.0, 4.0]],
            closed: false,
        }];
        let svg = render_svg(&[Panel {
            title: "h = 1 & friends".into(),
            boundary: &b,
            nodal: &nodal,
        }]);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains(r#"version="1.1""#));
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert_eq!(svg.matches(">truncation<").count(), 2);
        assert_eq!(svg.matches(r#"class="nodal""#).count(), 1);
        assert!(svg.contains("h = 1 &amp; friends"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let b = outline();
        let p = || Panel {
            title: "x".into(),
            boundary: &b,
            nodal: &[],
        };
        assert_eq!(render_svg(&[p(), p()]), render_svg(&[p(), p()]));
    }
}

//! Barcode rendering as a small, deterministic SVG document.

use std::fmt::Write;

use cyclos::persist::Barcode;

#[derive(Debug, Clone)]
pub struct SvgStyle {
    pub width: f64,
    pub bar_height: f64,
    pub gap: f64,
    /// Where infinite bars stop; the barcode's default cap when `None`.
    pub cap: Option<f64>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle { width: 640.0, bar_height: 8.0, gap: 6.0, cap: None }
    }
}

const MARGIN_LEFT: f64 = 48.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 16.0;
const AXIS_SPACE: f64 = 36.0;
const TICKS: usize = 5;

fn colour(dim: usize) -> &'static str {
    match dim {
        0 => "#8c8c8c",
        1 => "#1f60c4",
        _ => "#6a3d9a",
    }
}

/// One horizontal bar per interval, dimension 0 gray and dimension 1 blue,
/// with the x-axis in filtration units. Infinite bars run to the cap and end
/// in an arrowhead.
pub fn emit_svg_barcode(b: &Barcode, style: &SvgStyle) -> String {
    let cap = style.cap.unwrap_or_else(|| b.default_cap());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for bar in &b.bars {
        for v in [bar.birth, bar.death.unwrap_or(cap)] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let plot = style.width - MARGIN_LEFT - MARGIN_RIGHT;
    let x = |v: f64| MARGIN_LEFT + (v - lo) / (hi - lo) * plot;
    let rows = b.bars.len() as f64;
    let axis_y = MARGIN_TOP + rows * (style.bar_height + style.gap) + style.gap;
    let height = axis_y + AXIS_SPACE;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        style.width, height, style.width, height
    );
    s.push_str("  <defs>\n");
    for dim in [0usize, 1, 2] {
        let _ = writeln!(
            s,
            r#"    <marker id="arrow{dim}" viewBox="0 0 10 10" refX="5" refY="5" markerWidth="4" markerHeight="4" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="{}"/></marker>"#,
            colour(dim)
        );
    }
    s.push_str("  </defs>\n");
    s.push_str(r#"  <rect width="100%" height="100%" fill="white"/>"#);
    s.push('\n');
    for (i, bar) in b.bars.iter().enumerate() {
        let y = MARGIN_TOP + i as f64 * (style.bar_height + style.gap) + style.bar_height / 2.0;
        let end = bar.death.unwrap_or(cap);
        let marker = if bar.is_infinite() { format!(r#" marker-end="url(#arrow{})""#, bar.dim.min(2)) } else { String::new() };
        let _ = writeln!(
            s,
            r#"  <line class="bar dim{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="{:.2}"{}/>"#,
            bar.dim,
            x(bar.birth),
            y,
            x(end),
            y,
            colour(bar.dim),
            style.bar_height,
            marker
        );
    }
    let _ = writeln!(
        s,
        r#"  <line class="axis" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
        x(lo),
        axis_y,
        x(hi),
        axis_y
    );
    for k in 0..TICKS {
        let v = lo + (hi - lo) * k as f64 / (TICKS - 1) as f64;
        let _ = writeln!(
            s,
            r#"  <line class="tick" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
            x(v),
            axis_y,
            x(v),
            axis_y + 4.0
        );
        let _ = writeln!(
            s,
            r#"  <text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{:.3}</text>"#,
            x(v),
            axis_y + 16.0,
            v
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use cyclos::persist::{Bar, Direction};

    #[test]
    fn empty_barcode_is_axis_only() {
        let svg = emit_svg_barcode(&Barcode::empty(), &SvgStyle::default());
        assert!(!svg.contains("class=\"bar"));
        assert!(svg.contains("class=\"axis\""));
    }

    #[test]
    fn infinite_bar_runs_to_cap_with_arrow() {
        let b = Barcode::new(vec![Bar::new(0, 0.0, None)], Direction::Sublevel);
        let style = SvgStyle { cap: Some(10.0), ..SvgStyle::default() };
        let svg = emit_svg_barcode(&b, &style);
        // the plot spans [0, 10], so the bar ends at the right margin
        let right = style.width - MARGIN_RIGHT;
        assert!(svg.contains(&format!(r#"x2="{right:.2}""#)));
        assert!(svg.contains(r#"marker-end="url(#arrow0)""#));
    }
}

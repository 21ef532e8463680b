//! SVG rendering of layouts.

use std::fmt::Write as _;

use crate::instance::ProblemInstance;
use crate::slicing::Layout;

const VIEW_WIDTH: f64 = 800.0;
const MARGIN: f64 = 10.0;

/// Renders the facility outline plus one labelled rectangle per department,
/// in department-id order. Infeasible departments are shaded red.
pub fn render_svg(layout: &Layout, instance: &ProblemInstance) -> String {
    let scale = VIEW_WIDTH / instance.width;
    let view_h = instance.height * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}">"#,
        w = VIEW_WIDTH + 2.0 * MARGIN,
        h = view_h + 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        r##"  <rect class="facility" x="{MARGIN:.3}" y="{MARGIN:.3}" width="{VIEW_WIDTH:.3}" height="{view_h:.3}" fill="none" stroke="#000" stroke-width="3"/>"##
    );
    let font = (VIEW_WIDTH / 40.0).max(8.0);
    for (k, r) in layout.rects.iter().enumerate() {
        let x = MARGIN + r.x * scale;
        // SVG y grows downwards
        let y = MARGIN + (instance.height - r.y - r.h) * scale;
        let (w, h) = (r.w * scale, r.h * scale);
        let fill = if layout.feasible.get(k).copied().unwrap_or(true) { "#dde8f5" } else { "#f5c6c6" };
        let _ = writeln!(
            out,
            r##"  <rect class="department" data-id="{id}" x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="{fill}" stroke="#333" stroke-width="1"/>"##,
            id = k + 1
        );
        let _ = writeln!(
            out,
            r#"  <text x="{cx:.3}" y="{cy:.3}" font-size="{font:.1}" text-anchor="middle" dominant-baseline="central">{id}</text>"#,
            cx = x + w / 2.0,
            cy = y + h / 2.0,
            id = k + 1
        );
    }
    out.push_str("</svg>\n");
    out
}

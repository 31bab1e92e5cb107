use std::fmt::Write;

use anyhow::{bail, Result};
use polycontract::geometry::VPolytope;
use polycontract::synthesis::{Certificate, EnlargeResult};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;

struct Frame {
    half: f64,
}

impl Frame {
    fn px(&self, p: &[f64]) -> (f64, f64) {
        let s = (SIZE - 2.0 * MARGIN) / (2.0 * self.half);
        (MARGIN + (p[0] + self.half) * s, MARGIN + (self.half - p[1]) * s)
    }

    fn polygon(&self, out: &mut String, poly: &VPolytope, style: &str) -> Result<()> {
        let pts: Vec<String> = poly
            .ordered_2d()?
            .iter()
            .map(|p| {
                let (x, y) = self.px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(out, r#"    <polygon points="{}" {style}/>"#, pts.join(" "))?;
        Ok(())
    }
}

/// Planar figure with the state set, the initial and certified sets and, when
/// given, the enlarged hull with its admitted points.
pub fn render(cert: &Certificate, enlarged: Option<&EnlargeResult>) -> Result<String> {
    let dims = [cert.polytope.vrep.dim(), cert.polytope.hrep.dim(), cert.state_set.dim()];
    if dims.iter().any(|d| *d != 2) {
        bail!("plotting supports planar systems only, got state dimension {}", cert.polytope.vrep.dim());
    }
    let lo = cert.state_set.lower();
    let hi = cert.state_set.upper();
    let frame = Frame { half: lo.iter().chain(&hi).fold(0.0f64, |m, v| m.max(v.abs())) };
    let state = VPolytope::new(vec![vec![lo[0], lo[1]], vec![hi[0], lo[1]], vec![hi[0], hi[1]], vec![lo[0], hi[1]]])?;
    let initial = cert.polytope.vrep.scale(1.0 / cert.alpha);

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#)?;
    writeln!(out, r#"  <g id="state-set">"#)?;
    frame.polygon(&mut out, &state, r##"fill="none" stroke="#333" stroke-width="1.5""##)?;
    writeln!(out, "  </g>")?;
    writeln!(out, r#"  <g id="initial">"#)?;
    frame.polygon(&mut out, &initial, r##"fill="none" stroke="#777" stroke-dasharray="4 3""##)?;
    writeln!(out, "  </g>")?;
    writeln!(out, r#"  <g id="certified">"#)?;
    frame.polygon(&mut out, &cert.polytope.vrep, r##"fill="#7b3fa0" fill-opacity="0.25" stroke="#7b3fa0" stroke-width="2""##)?;
    writeln!(out, "  </g>")?;
    writeln!(out, r#"  <g id="enlarged">"#)?;
    if let Some(e) = enlarged {
        frame.polygon(&mut out, &e.hull, r##"fill="none" stroke="#1f77b4" stroke-width="2""##)?;
        for a in &e.admitted {
            let (x, y) = frame.px(&a.point);
            writeln!(out, r##"    <circle cx="{x:.2}" cy="{y:.2}" r="3" fill="#d62728"/>"##)?;
        }
    }
    writeln!(out, "  </g>")?;
    writeln!(out, "</svg>")?;
    Ok(out)
}

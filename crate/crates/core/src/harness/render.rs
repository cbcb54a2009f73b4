use std::fmt::Write as _;
use std::path::Path;

use crate::controllers::ExecutionLog;
use crate::geometry::{Shape, Vec2};
use crate::world::{SceneSpec, WorldState};
use crate::{Error, Result};

const PX_PER_M: f64 = 500.0;
const PAD: f64 = 10.0;

/// Frames in a strip of a `steps`-control log sampled every `stride`
/// steps, counting the initial state.
pub fn frame_count(steps: usize, stride: usize) -> usize {
    steps / stride + 1
}

fn polygon(out: &mut String, pts: &[Vec2], to_px: impl Fn(Vec2) -> (f64, f64), style: &str) {
    let pts: Vec<String> = pts
        .iter()
        .map(|&p| {
            let (x, y) = to_px(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polygon points="{}" {style}/>"#, pts.join(" "));
}

fn shape(out: &mut String, s: &Shape, to_px: impl Fn(Vec2) -> (f64, f64) + Copy, style: &str) {
    match *s {
        Shape::Circle { center, radius } => {
            let (x, y) = to_px(center);
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" {style}/>"#,
                radius * PX_PER_M
            );
        }
        Shape::Obb { .. } => polygon(out, &s.corners().expect("boxes have corners"), to_px, style),
    }
}

fn frame(out: &mut String, scene: &SceneSpec, x: &WorldState, path: &[Vec2], t: usize, origin: f64) {
    let t_ = &scene.table;
    let w = 2.0 * t_.half_x * PX_PER_M;
    let h = 2.0 * t_.half_y * PX_PER_M;
    let to_px = |p: Vec2| (origin + (p.x + t_.half_x) * PX_PER_M, PAD + (t_.half_y - p.y) * PX_PER_M);

    let _ = writeln!(out, r#"<g id="frame-{t}">"#);
    let _ = writeln!(
        out,
        r##"<rect x="{origin:.2}" y="{PAD:.2}" width="{w:.2}" height="{h:.2}" fill="#f4efe6" stroke="#555"/>"##
    );
    let m = t_.safe_margin * PX_PER_M;
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#b88" stroke-dasharray="4 3"/>"##,
        origin + m,
        PAD + m,
        (w - 2.0 * m).max(0.0),
        (h - 2.0 * m).max(0.0)
    );
    for (i, (obj, pose)) in scene.objects.iter().zip(&x.objects).enumerate() {
        let style = if x.dropped[i] {
            r##"fill="#ccc" stroke="#999" stroke-dasharray="2 2""##
        } else if obj.is_target {
            r##"fill="#d9534f" stroke="#7a1f1c""##
        } else {
            r##"fill="#6c8ebf" stroke="#2f4f7f""##
        };
        shape(out, &obj.shape.placed(pose), to_px, style);
    }
    for link in scene.robot.link_shapes(&x.robot) {
        shape(out, &link, to_px, r##"fill="#444" fill-opacity="0.85""##);
    }
    if path.len() > 1 {
        let pts: Vec<String> = path
            .iter()
            .map(|&p| {
                let (a, b) = to_px(p);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#2a2" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="12">t = {t}</text>"#,
        origin + 4.0,
        PAD + h + 16.0
    );
    out.push_str("</g>\n");
}

/// Top-down strip of the logged states at every `stride`-th step.
pub fn render_svg(log: &ExecutionLog, scene: &SceneSpec, stride: usize) -> Result<String> {
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let steps = log.executed_controls.len();
    if log.observed_states.len() != steps + 1 {
        return Err(Error::LengthMismatch {
            controls: steps,
            expected: steps + 1,
            actual: log.observed_states.len(),
        });
    }
    let n = frame_count(steps, stride);
    let fw = 2.0 * scene.table.half_x * PX_PER_M + PAD;
    let width = PAD + n as f64 * fw;
    let height = 2.0 * scene.table.half_y * PX_PER_M + 2.0 * PAD + 20.0;
    let trail: Vec<Vec2> = log
        .observed_states
        .iter()
        .map(|s| scene.robot.reference_point(&s.robot))
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    for k in 0..n {
        let t = k * stride;
        frame(
            &mut out,
            scene,
            &log.observed_states[t],
            &trail[..=t],
            t,
            PAD + k as f64 * fw,
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes [`render_svg`] to `path` and returns the frame count.
pub fn render_trace(
    log: &ExecutionLog,
    scene: &SceneSpec,
    path: impl AsRef<Path>,
    stride: usize,
) -> Result<usize> {
    let path = path.as_ref();
    let svg = render_svg(log, scene, stride)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))?;
    Ok(frame_count(log.executed_controls.len(), stride))
}

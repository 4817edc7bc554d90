//! Self-contained static SVG plots, written by hand: no display dependency,
//! deterministic output (fixed-precision pixel coordinates).

use std::fmt::Write;

use grot::PlanarPoint;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 42.0;

/// Uniform-scale mapping from math coordinates (y up) to SVG pixels
/// (y down), fitted to a point set and always including the origin.
struct Frame {
    scale: f64,
    ox: f64,
    oy: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = PlanarPoint>) -> Frame {
        let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for p in points {
            if p.x.is_finite() && p.y.is_finite() {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-9);
        let pad = 0.06 * span;
        let (x0, y0, x1, y1) = (x0 - pad, y0 - pad, x1 + pad, y1 + pad);
        let scale = (SIZE - 2.0 * MARGIN) / (x1 - x0).max(y1 - y0);
        // Center the (possibly non-square) bounding box in the canvas.
        let ox = MARGIN + 0.5 * ((SIZE - 2.0 * MARGIN) - (x1 - x0) * scale) - x0 * scale;
        let oy = SIZE - MARGIN - 0.5 * ((SIZE - 2.0 * MARGIN) - (y1 - y0) * scale) + y0 * scale;
        Frame { scale, ox, oy }
    }

    fn map(&self, p: PlanarPoint) -> (f64, f64) {
        (p.x * self.scale + self.ox, self.oy - p.y * self.scale)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" \
         viewBox=\"0 0 {s} {s}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <title>{title}</title>\n\
         <rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
        s = SIZE as u32
    )
}

fn axes(frame: &Frame, body: &mut String) {
    let (cx, cy) = frame.map(PlanarPoint::new(0.0, 0.0));
    let _ = writeln!(
        body,
        "<line x1=\"0\" y1=\"{cy:.3}\" x2=\"{s}\" y2=\"{cy:.3}\" stroke=\"#dddddd\"/>\n\
         <line x1=\"{cx:.3}\" y1=\"0\" x2=\"{cx:.3}\" y2=\"{s}\" stroke=\"#dddddd\"/>",
        s = SIZE as u32
    );
}

fn polyline(frame: &Frame, pts: &[PlanarPoint], stroke: &str, width: f64, body: &mut String) {
    if pts.len() < 2 {
        return;
    }
    let mut d = String::new();
    for (i, &p) in pts.iter().enumerate() {
        let (x, y) = frame.map(p);
        let _ = write!(d, "{}{x:.3},{y:.3}", if i == 0 { "" } else { " " });
    }
    let _ = writeln!(
        body,
        "<polyline points=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>"
    );
}

fn dot(frame: &Frame, p: PlanarPoint, r: f64, fill: &str, body: &mut String) {
    let (x, y) = frame.map(p);
    let _ = writeln!(body, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r}\" fill=\"{fill}\"/>");
}

fn circle(frame: &Frame, radius: f64, stroke: &str, dashed: bool, body: &mut String) {
    let (cx, cy) = frame.map(PlanarPoint::new(0.0, 0.0));
    let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
    let _ = writeln!(
        body,
        "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{:.3}\" fill=\"none\" stroke=\"{stroke}\"{dash}/>",
        radius * frame.scale
    );
}

fn label(x: f64, y: f64, color: &str, text: &str, body: &mut String) {
    let _ = writeln!(body, "<text x=\"{x}\" y=\"{y}\" fill=\"{color}\">{text}</text>");
}

/// Phase portrait of a one-period run: the boundary loop, its image under
/// the period map (split wherever an image point is unavailable),
/// displacement segments, and the located fixed points.
pub fn portrait(
    boundary: &[PlanarPoint],
    image: &[Option<PlanarPoint>],
    fixed: &[PlanarPoint],
) -> String {
    let frame = Frame::fit(
        boundary
            .iter()
            .copied()
            .chain(image.iter().flatten().copied())
            .chain(fixed.iter().copied()),
    );
    let mut body = header("one-period phase portrait");
    axes(&frame, &mut body);

    // Displacement segments from a thinned set of boundary samples.
    let step = (boundary.len() / 48).max(1);
    for (i, img) in image.iter().enumerate().step_by(step) {
        if let Some(q) = img {
            let (x1, y1) = frame.map(boundary[i]);
            let (x2, y2) = frame.map(*q);
            let _ = writeln!(
                body,
                "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" \
                 stroke=\"#bbbbbb\" stroke-width=\"0.6\"/>"
            );
        }
    }

    let mut closed: Vec<PlanarPoint> = boundary.to_vec();
    if let (Some(&first), Some(&last)) = (boundary.first(), boundary.last()) {
        if (first - last).norm() > 1e-12 {
            closed.push(first);
        }
    }
    polyline(&frame, &closed, "#4682b4", 1.6, &mut body);

    // The image may be broken where a boundary orbit failed to complete.
    let mut run: Vec<PlanarPoint> = Vec::new();
    let mut runs: Vec<Vec<PlanarPoint>> = Vec::new();
    for img in image {
        match img {
            Some(q) => run.push(*q),
            None => {
                if run.len() > 1 {
                    runs.push(std::mem::take(&mut run));
                } else {
                    run.clear();
                }
            }
        }
    }
    if image.iter().all(Option::is_some) && run.len() > 1 {
        run.push(run[0]);
    }
    if run.len() > 1 {
        runs.push(run);
    }
    for r in &runs {
        polyline(&frame, r, "#e8871e", 1.6, &mut body);
    }

    for &z in fixed {
        dot(&frame, z, 4.0, "#c22030", &mut body);
    }

    label(10.0, 18.0, "#4682b4", "boundary", &mut body);
    label(10.0, 34.0, "#e8871e", "image after one period", &mut body);
    label(10.0, 50.0, "#c22030", "fixed points", &mut body);
    body.push_str("</svg>\n");
    body
}

/// Backward-reachability cloud with its bounding circle and the sampled
/// cylinder radius.
pub fn cloud(points: &[PlanarPoint], bounding_radius: f64, delta: f64) -> String {
    let rim = [
        PlanarPoint::new(bounding_radius, bounding_radius),
        PlanarPoint::new(-bounding_radius, -bounding_radius),
    ];
    let frame = Frame::fit(points.iter().copied().chain(rim));
    let mut body = header("backward-reachability cloud");
    axes(&frame, &mut body);
    circle(&frame, delta, "#999999", true, &mut body);
    circle(&frame, bounding_radius, "#c22030", true, &mut body);
    for &p in points {
        dot(&frame, p, 2.0, "#4682b4", &mut body);
    }
    label(10.0, 18.0, "#4682b4", "backward images at t = 0", &mut body);
    label(10.0, 34.0, "#c22030", "bounding radius", &mut body);
    label(10.0, 50.0, "#999999", "sampled cylinder radius", &mut body);
    body.push_str("</svg>\n");
    body
}

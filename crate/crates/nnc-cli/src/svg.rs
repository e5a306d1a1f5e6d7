//! Static SVG emission for tours, motorcycle graphs, matchings, and cover
//! disks.

use crate::formats::{Instance, RunResult, StatusJson};

struct Canvas {
    min: [f64; 2],
    max: [f64; 2],
    body: String,
}

const SIZE: f64 = 640.0;
const PAD: f64 = 24.0;

impl Canvas {
    fn new(points: impl Iterator<Item = [f64; 2]>) -> Canvas {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        if !min[0].is_finite() {
            min = [0.0, 0.0];
            max = [1.0, 1.0];
        }
        for a in 0..2 {
            if max[a] - min[a] < 1e-12 {
                max[a] = min[a] + 1.0;
            }
        }
        Canvas {
            min,
            max,
            body: String::new(),
        }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.min[0]) / (self.max[0] - self.min[0]) * (SIZE - 2.0 * PAD)
    }

    /// SVG y grows downward; geometry y grows upward.
    fn y(&self, v: f64) -> f64 {
        SIZE - PAD - (v - self.min[1]) / (self.max[1] - self.min[1]) * (SIZE - 2.0 * PAD)
    }

    fn scale(&self) -> f64 {
        (SIZE - 2.0 * PAD) / (self.max[0] - self.min[0]).max(self.max[1] - self.min[1])
    }

    fn line(&mut self, a: [f64; 2], b: [f64; 2], stroke: &str, width: f64) {
        self.body.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>\n",
            self.x(a[0]), self.y(a[1]), self.x(b[0]), self.y(b[1])
        ));
    }

    fn dot(&mut self, p: [f64; 2], r: f64, fill: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{r}\" fill=\"{fill}\"/>\n",
            self.x(p[0]),
            self.y(p[1])
        ));
    }

    fn circle(&mut self, c: [f64; 2], radius: f64, stroke: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1\"/>\n",
            self.x(c[0]),
            self.y(c[1]),
            radius * self.scale()
        ));
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

pub fn render(instance: &Instance, result: Option<&RunResult>) -> Option<String> {
    match instance {
        Instance::Points { coords, dim, .. } if *dim == 2 => {
            let pts: Vec<[f64; 2]> = coords.iter().map(|c| [c[0], c[1]]).collect();
            let mut cv = Canvas::new(pts.iter().copied());
            if let Some(RunResult::Tour { order, .. }) = result {
                for i in 0..order.len() {
                    let a = pts[order[i]];
                    let b = pts[order[(i + 1) % order.len()]];
                    cv.line(a, b, "steelblue", 1.5);
                }
            }
            for p in &pts {
                cv.dot(*p, 3.0, "black");
            }
            Some(cv.finish())
        }
        Instance::Paths { segments, dim, .. } if *dim == 2 => {
            let slot = |s: usize| -> [f64; 2] {
                let seg = &segments[s / 2];
                let c = &seg[s % 2];
                [c[0], c[1]]
            };
            let mut cv = Canvas::new(
                segments
                    .iter()
                    .flat_map(|s| s.iter().map(|c| [c[0], c[1]])),
            );
            for s in segments {
                cv.line([s[0][0], s[0][1]], [s[1][0], s[1][1]], "black", 2.0);
            }
            if let Some(RunResult::Plan { edges, closing, .. }) = result {
                for &(a, b) in edges.iter().chain(std::iter::once(closing)) {
                    cv.line(slot(a), slot(b), "steelblue", 1.5);
                }
            }
            for s in segments {
                cv.dot([s[0][0], s[0][1]], 2.5, "black");
                cv.dot([s[1][0], s[1][1]], 2.5, "black");
            }
            Some(cv.finish())
        }
        Instance::Motorcycles { motorcycles } => {
            let starts: Vec<[f64; 2]> = motorcycles.iter().map(|m| m.start).collect();
            let mut all = starts.clone();
            if let Some(RunResult::Motorcycles { statuses }) = result {
                for s in statuses {
                    if let StatusJson::Crashed { point, .. } = s {
                        all.push(*point);
                    }
                }
            }
            let mut cv = Canvas::new(all.iter().copied());
            let span = (cv.max[0] - cv.min[0]).max(cv.max[1] - cv.min[1]);
            for (i, m) in motorcycles.iter().enumerate() {
                let end = match result {
                    Some(RunResult::Motorcycles { statuses }) => match &statuses[i] {
                        StatusJson::Crashed { point, .. } => *point,
                        StatusJson::Escaped => [
                            m.start[0] + m.dir[0] * 2.0 * span,
                            m.start[1] + m.dir[1] * 2.0 * span,
                        ],
                    },
                    _ => [
                        m.start[0] + m.dir[0] * 0.1 * span,
                        m.start[1] + m.dir[1] * 0.1 * span,
                    ],
                };
                cv.line(m.start, end, "firebrick", 1.5);
                cv.dot(m.start, 3.0, "black");
            }
            Some(cv.finish())
        }
        Instance::Matching { k, left, right } if *k == 2 => {
            let mut cv = Canvas::new(
                left.iter()
                    .chain(right.iter())
                    .map(|v| [v[0], v[1]]),
            );
            if let Some(RunResult::Matching { pairs }) = result {
                for &(l, r) in pairs {
                    cv.line([left[l][0], left[l][1]], [right[r][0], right[r][1]], "gray", 1.0);
                }
            }
            for v in left {
                cv.dot([v[0], v[1]], 3.0, "firebrick");
            }
            for v in right {
                cv.dot([v[0], v[1]], 3.0, "steelblue");
            }
            Some(cv.finish())
        }
        Instance::Cover { clients, servers } => {
            let mut cv = Canvas::new(
                clients
                    .iter()
                    .chain(servers.iter())
                    .map(|&x| [x, 0.0])
                    .chain(std::iter::once([0.0, 1.0]))
                    .chain(std::iter::once([0.0, -1.0])),
            );
            cv.line([cv.min[0], 0.0], [cv.max[0], 0.0], "black", 1.0);
            if let Some(RunResult::Cover { radii, .. }) = result {
                for (s, r) in servers.iter().zip(radii) {
                    if *r > 0.0 {
                        cv.circle([*s, 0.0], *r, "steelblue");
                    }
                }
            }
            for &c in clients {
                cv.dot([c, 0.0], 2.5, "black");
            }
            for &s in servers {
                cv.dot([s, 0.0], 4.0, "firebrick");
            }
            Some(cv.finish())
        }
        _ => None,
    }
}

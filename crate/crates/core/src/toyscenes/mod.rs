//! Seeded 2-D point-cloud generators and the closed-form Swiss-roll-to-ball
//! extremal map.

mod font;

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Point;

/// Three concentric annular sectors of equal centerline length, opening
/// upward around `center`. Equal lengths give every arc a third of the mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WifiArcs {
    pub center: [f64; 2],
    pub radii: [f64; 3],
    /// Centerline length shared by the arcs.
    pub arc_length: f64,
    /// Radial half-width of each band.
    pub half_width: f64,
    /// Direction the arcs open toward, in radians.
    pub direction: f64,
}

impl Default for WifiArcs {
    fn default() -> Self {
        WifiArcs { center: [0.0, 0.0], radii: [0.5, 1.0, 1.5], arc_length: 1.0, half_width: 0.05, direction: PI / 2.0 }
    }
}

impl WifiArcs {
    pub fn validate(&self) -> Result<()> {
        let finite = self.center.iter().chain(&self.radii).all(|v| v.is_finite())
            && self.arc_length.is_finite()
            && self.half_width.is_finite()
            && self.direction.is_finite();
        if !finite {
            return Err(Error::BadParams("wifi_arcs parameters must be finite".into()));
        }
        if !(self.half_width > 0.0) || self.arc_length <= 0.0 {
            return Err(Error::BadParams("wifi_arcs needs positive arc_length and half_width".into()));
        }
        for k in 0..3 {
            if self.radii[k] <= self.half_width {
                return Err(Error::BadParams(format!("wifi_arcs radius {k} must exceed half_width")));
            }
            if k > 0 && self.radii[k] - self.radii[k - 1] <= 2.0 * self.half_width {
                return Err(Error::BadParams("wifi_arcs bands overlap".into()));
            }
            if self.half_span(k) > PI {
                return Err(Error::BadParams(format!("wifi_arcs arc {k} wraps around")));
            }
        }
        Ok(())
    }

    /// Half of the angle subtended by arc `k`.
    pub fn half_span(&self, k: usize) -> f64 {
        self.arc_length / (2.0 * self.radii[k])
    }

    /// Centerline lengths of the three arcs.
    pub fn arc_lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| 2.0 * self.half_span(k) * self.radii[k])
    }

    /// Distance from `x` to the centerline of arc `k`.
    pub fn distance_to_arc(&self, x: [f64; 2], k: usize) -> f64 {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let rho = dx.hypot(dy);
        let r = self.radii[k];
        let s = self.half_span(k);
        let off = angle_diff(dy.atan2(dx), self.direction);
        if off.abs() <= s {
            (rho - r).abs()
        } else {
            let end = self.direction + s.copysign(off);
            let (ex, ey) = (self.center[0] + r * end.cos(), self.center[1] + r * end.sin());
            (x[0] - ex).hypot(x[1] - ey)
        }
    }

    /// The arc whose centerline is nearest to `x`, if within `eps`.
    pub fn membership(&self, x: [f64; 2], eps: f64) -> Result<Option<usize>> {
        self.validate()?;
        if !(eps >= 0.0) {
            return Err(Error::BadParams(format!("eps must be non-negative, got {eps}")));
        }
        let mut best: Option<(usize, f64)> = None;
        for k in 0..3 {
            let d = self.distance_to_arc(x, k);
            if d <= eps && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        Ok(best.map(|(k, _)| k))
    }
}

/// Signed angle `a - b` wrapped to `(-pi, pi]`.
fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// A named 2-D distribution with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scene {
    Gaussian {
        mean: [f64; 2],
        std: f64,
    },
    WifiArcs(WifiArcs),
    /// Text rasterized with a 5x7 bitmap font; lines separated by `\n`.
    AcceptText {
        text: String,
        pixel: f64,
        center: [f64; 2],
    },
    /// `t -> scale * (t cos t, t sin t)` with `t` uniform on `[1.5 pi, 4.5 pi]`.
    SwissRoll {
        scale: f64,
        noise: f64,
    },
    Ball {
        radius: f64,
    },
    Annulus {
        inner: f64,
        outer: f64,
    },
    /// Gaussian blobs at the vertices of an upright equilateral triangle.
    Triangle {
        radius: f64,
        std: f64,
    },
}

pub const SCENE_NAMES: [&str; 7] =
    ["gaussian", "wifi_arcs", "accept_text", "swiss_roll", "ball", "annulus", "triangle"];

impl Scene {
    /// Scene with its default parameters.
    pub fn by_name(name: &str) -> Result<Scene> {
        Ok(match name {
            "gaussian" => Scene::Gaussian { mean: [0.0, 0.0], std: 0.1 },
            "wifi_arcs" | "wifi" => Scene::WifiArcs(WifiArcs::default()),
            "accept_text" | "accept" => {
                Scene::AcceptText { text: "ACCEPT\nTEXT".into(), pixel: 0.05, center: [0.0, 0.0] }
            }
            "swiss_roll" => Scene::SwissRoll { scale: 0.1, noise: 0.0 },
            "ball" => Scene::Ball { radius: 0.5 },
            "annulus" => Scene::Annulus { inner: 0.5, outer: 1.0 },
            "triangle" => Scene::Triangle { radius: 1.0, std: 0.1 },
            other => return Err(Error::UnknownScene(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scene::Gaussian { .. } => "gaussian",
            Scene::WifiArcs(_) => "wifi_arcs",
            Scene::AcceptText { .. } => "accept_text",
            Scene::SwissRoll { .. } => "swiss_roll",
            Scene::Ball { .. } => "ball",
            Scene::Annulus { .. } => "annulus",
            Scene::Triangle { .. } => "triangle",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::BadParams(format!("{}: {msg}", self.name())));
        match self {
            Scene::Gaussian { mean, std } => {
                if !mean.iter().all(|v| v.is_finite()) || !(*std > 0.0 && std.is_finite()) {
                    return bad("needs a finite mean and positive std");
                }
            }
            Scene::WifiArcs(a) => a.validate()?,
            Scene::AcceptText { text, pixel, center } => {
                if !(*pixel > 0.0 && pixel.is_finite()) || !center.iter().all(|v| v.is_finite()) {
                    return bad("needs a positive pixel size and finite center");
                }
                font::raster(text)?;
            }
            Scene::SwissRoll { scale, noise } => {
                if !(*scale > 0.0 && scale.is_finite()) || !(*noise >= 0.0 && noise.is_finite()) {
                    return bad("needs positive scale and non-negative noise");
                }
            }
            Scene::Ball { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad("needs a positive radius");
                }
            }
            Scene::Annulus { inner, outer } => {
                if !(*inner >= 0.0 && inner < outer && outer.is_finite()) {
                    return bad("needs 0 <= inner < outer");
                }
            }
            Scene::Triangle { radius, std } => {
                if !(*radius > 0.0 && radius.is_finite()) || !(*std > 0.0 && std.is_finite()) {
                    return bad("needs positive radius and std");
                }
            }
        }
        Ok(())
    }

    /// `n` i.i.d. samples, one per row.
    pub fn sample_array<R: Rng>(&self, rng: &mut R, n: usize) -> Result<Array2<f64>> {
        if n == 0 {
            return Err(Error::BadParams("sample size must be at least 1".into()));
        }
        self.validate()?;
        let mut out = Array2::zeros((n, 2));
        match self {
            Scene::Gaussian { mean, std } => {
                let normal = Normal::new(0.0, *std).expect("validated std");
                for mut row in out.rows_mut() {
                    row[0] = mean[0] + normal.sample(rng);
                    row[1] = mean[1] + normal.sample(rng);
                }
            }
            Scene::WifiArcs(a) => {
                for mut row in out.rows_mut() {
                    // Equal band areas: pick the arc uniformly.
                    let k = rng.random_range(0..3);
                    let (r, h, s) = (a.radii[k], a.half_width, a.half_span(k));
                    let (lo, hi) = ((r - h) * (r - h), (r + h) * (r + h));
                    let rho = rng.random_range(lo..=hi).sqrt();
                    let theta = a.direction + rng.random_range(-s..=s);
                    row[0] = a.center[0] + rho * theta.cos();
                    row[1] = a.center[1] + rho * theta.sin();
                }
            }
            Scene::AcceptText { text, pixel, center } => {
                let cells = font::raster(text)?;
                let (w, h) = font::extent(&cells);
                let x0 = center[0] - 0.5 * w as f64 * pixel;
                let y0 = center[1] + 0.5 * h as f64 * pixel;
                for mut row in out.rows_mut() {
                    let (c, r) = cells[rng.random_range(0..cells.len())];
                    row[0] = x0 + (c as f64 + rng.random::<f64>()) * pixel;
                    row[1] = y0 - (r as f64 + rng.random::<f64>()) * pixel;
                }
            }
            Scene::SwissRoll { scale, noise } => {
                let normal = (*noise > 0.0).then(|| Normal::new(0.0, *noise).expect("validated noise"));
                for mut row in out.rows_mut() {
                    let t = rng.random_range(1.5 * PI..=4.5 * PI);
                    row[0] = scale * t * t.cos();
                    row[1] = scale * t * t.sin();
                    if let Some(normal) = &normal {
                        row[0] += normal.sample(rng);
                        row[1] += normal.sample(rng);
                    }
                }
            }
            Scene::Ball { radius } => {
                for mut row in out.rows_mut() {
                    let rho = radius * rng.random::<f64>().sqrt();
                    let theta = rng.random_range(0.0..2.0 * PI);
                    row[0] = rho * theta.cos();
                    row[1] = rho * theta.sin();
                    // Guard against rounding just past the boundary.
                    let norm = row[0].hypot(row[1]);
                    if norm > *radius {
                        row[0] *= radius / norm;
                        row[1] *= radius / norm;
                    }
                }
            }
            Scene::Annulus { inner, outer } => {
                let (lo, hi) = (inner * inner, outer * outer);
                for mut row in out.rows_mut() {
                    let rho = rng.random_range(lo..=hi).sqrt();
                    let theta = rng.random_range(0.0..2.0 * PI);
                    row[0] = rho * theta.cos();
                    row[1] = rho * theta.sin();
                }
            }
            Scene::Triangle { radius, std } => {
                let normal = Normal::new(0.0, *std).expect("validated std");
                for mut row in out.rows_mut() {
                    let k = rng.random_range(0..3);
                    let theta = PI / 2.0 + 2.0 * PI * k as f64 / 3.0;
                    row[0] = radius * theta.cos() + normal.sample(rng);
                    row[1] = radius * theta.sin() + normal.sample(rng);
                }
            }
        }
        Ok(out)
    }

    /// `n` samples from a generator seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arr = self.sample_array(&mut rng, n)?;
        Ok(arr.rows().into_iter().map(|r| Point::from([r[0], r[1]])).collect())
    }
}

/// Source/target scene pairs used by the toy experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePair {
    pub name: String,
    pub source: Scene,
    pub target: Scene,
}

pub const PAIR_NAMES: [&str; 5] = ["wifi", "swiss2ball", "accept", "ball2annulus", "triangle"];

impl ScenePair {
    pub fn by_name(name: &str) -> Result<ScenePair> {
        let (source, target) = match name {
            "wifi" => (Scene::Gaussian { mean: [0.0, 0.0], std: 0.3 }, Scene::by_name("wifi_arcs")?),
            "swiss2ball" => (Scene::by_name("swiss_roll")?, Scene::by_name("ball")?),
            "accept" => (
                Scene::AcceptText { text: "ACCEPT".into(), pixel: 0.05, center: [0.0, 0.6] },
                Scene::AcceptText { text: "INCOMPLETE\nTRANSPORT".into(), pixel: 0.05, center: [0.0, -0.4] },
            ),
            "ball2annulus" => (Scene::Ball { radius: 0.5 }, Scene::Annulus { inner: 0.75, outer: 1.0 }),
            "triangle" => (Scene::by_name("gaussian")?, Scene::by_name("triangle")?),
            other => return Err(Error::UnknownScene(other.to_string())),
        };
        Ok(ScenePair { name: name.to_string(), source, target })
    }
}

/// Extremal map from any source onto the uniform ball of radius `radius`
/// about the origin: identity inside, radial projection outside.
pub fn swiss2ball_et_map(x: [f64; 2], radius: f64) -> [f64; 2] {
    let norm = x[0].hypot(x[1]);
    if norm <= radius {
        x
    } else {
        [x[0] * radius / norm, x[1] * radius / norm]
    }
}

/// Arc index of `x` for a Wi-Fi scene, see [`WifiArcs::membership`].
pub fn arc_membership(x: &Point, scene: &Scene, eps: f64) -> Result<Option<usize>> {
    let Scene::WifiArcs(arcs) = scene else {
        return Err(Error::BadParams(format!("arc membership needs wifi_arcs, got {}", scene.name())));
    };
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: x.dim() });
    }
    arcs.membership([x.coords()[0], x.coords()[1]], eps)
}

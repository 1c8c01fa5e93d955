//! Sampleable metric measure spaces.
//!
//! A [`SpaceSpec`] names a generator family together with the metric used to
//! measure distances. [`sample`] draws an i.i.d. [`PointSample`] from it
//! with an explicit seed; the same `(spec, n, seed)` always yields the same
//! points.
//!
//! The square ∩ disc family lives on the centred square `[-1/2, 1/2]²` with
//! the disc centred at the origin, so radius `√2/2` recovers the full square.
//! The plain unit square is `[0, 1]²`.

pub mod pdb;

pub use pdb::load_calpha;

use std::path::PathBuf;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{rng_from, Rng};

/// Noise level of the spiral family used unless stated otherwise.
pub const DEFAULT_SPIRAL_NOISE: f64 = 0.03;

/// A point in ℝ² or ℝ³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Metric on ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// The ℓ∞ norm distance.
    SupNorm,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::SupNorm => a
                .iter()
                .zip(b)
                .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs())),
        }
    }
}

/// Generator family of a [`SpaceSpec`].
///
/// Serialized adjacently tagged, e.g.
/// `{"family": "square_cap_disc", "params": {"radius": 0.55}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// Uniform on `[0, 1]²`.
    UnitSquare,
    /// Uniform on the disc of the given radius centred at the origin.
    Disc { radius: f64 },
    /// Uniform on `[-1/2, 1/2]²` intersected with the origin-centred disc.
    SquareCapDisc { radius: f64 },
    /// Uniform on `[0,1]² ∪ ([1 + gap, 2 + gap] × [0,1])`.
    UnionSquares { gap: f64 },
    /// `(R sin(vR) + noise·S, R cos(vR) + noise·S′)` with `R ~ U[0,1]` and
    /// `S, S′ ~ N(0,1)`.
    Spiral {
        v: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    /// Uniform subsample without replacement of the CA atoms of a PDB file.
    FilePoints { path: PathBuf },
}

fn default_noise() -> f64 {
    DEFAULT_SPIRAL_NOISE
}

/// Declarative description of a sampleable metric measure space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub metric: Metric,
}

impl SpaceSpec {
    pub fn new(family: Family, metric: Metric) -> Self {
        SpaceSpec { family, metric }
    }

    pub fn unit_square(metric: Metric) -> Self {
        Self::new(Family::UnitSquare, metric)
    }

    pub fn disc(radius: f64, metric: Metric) -> Self {
        Self::new(Family::Disc { radius }, metric)
    }

    pub fn square_cap_disc(radius: f64) -> Self {
        Self::new(Family::SquareCapDisc { radius }, Metric::Euclidean)
    }

    pub fn union_squares(gap: f64) -> Self {
        Self::new(Family::UnionSquares { gap }, Metric::SupNorm)
    }

    pub fn spiral(v: f64) -> Self {
        Self::new(
            Family::Spiral {
                v,
                noise: DEFAULT_SPIRAL_NOISE,
            },
            Metric::Euclidean,
        )
    }

    pub fn file_points(path: impl Into<PathBuf>) -> Self {
        Self::new(Family::FilePoints { path: path.into() }, Metric::Euclidean)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: SpaceSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Parameter(format!("{what} = {v}")));
        match self.family {
            Family::Disc { radius } | Family::SquareCapDisc { radius } if !(radius > 0.0) => {
                bad("radius must be > 0, got", radius)
            }
            Family::UnionSquares { gap } if !(gap >= 0.0) => bad("gap must be ≥ 0, got", gap),
            Family::Spiral { v, .. } if !(v > 0.0) => bad("spiral v must be > 0, got", v),
            Family::Spiral { noise, .. } if !(noise >= 0.0) => {
                bad("spiral noise must be ≥ 0, got", noise)
            }
            _ => Ok(()),
        }
    }

    /// True when `p` lies in the closed support set of the family. Spiral
    /// and file spaces have no declared support and always return true.
    pub fn contains(&self, p: &[f64]) -> bool {
        const EPS: f64 = 1e-12;
        let in_unit = |x: f64| (-EPS..=1.0 + EPS).contains(&x);
        match self.family {
            Family::UnitSquare => in_unit(p[0]) && in_unit(p[1]),
            Family::Disc { radius } => p[0].hypot(p[1]) <= radius + EPS,
            Family::SquareCapDisc { radius } => {
                p[0].abs() <= 0.5 + EPS && p[1].abs() <= 0.5 + EPS && p[0].hypot(p[1]) <= radius + EPS
            }
            Family::UnionSquares { gap } => {
                in_unit(p[1]) && (in_unit(p[0]) || in_unit(p[0] - 1.0 - gap))
            }
            Family::Spiral { .. } | Family::FilePoints { .. } => true,
        }
    }
}

/// A finite i.i.d. sample from a metric measure space.
///
/// Coordinates are stored row-major in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    coords: Vec<f64>,
    dim: usize,
    metric: Metric,
    seed: u64,
}

impl PointSample {
    pub fn new(points: Vec<Point>, metric: Metric, seed: u64) -> Result<Self> {
        let dim = points
            .first()
            .map(Point::dim)
            .ok_or_else(|| Error::Size("a point sample must be nonempty".into()))?;
        if dim == 0 {
            return Err(Error::Parameter("points must have at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.dim() != dim {
                return Err(Error::Parameter(format!(
                    "mixed point dimensions {dim} and {}",
                    p.dim()
                )));
            }
            coords.extend_from_slice(p.coords());
        }
        Self::from_flat(coords, dim, metric, seed)
    }

    /// Builds a sample from a row-major coordinate buffer.
    pub fn from_flat(coords: Vec<f64>, dim: usize, metric: Metric, seed: u64) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::Size(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter("coordinates must be finite".into()));
        }
        Ok(PointSample {
            coords,
            dim,
            metric,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(self.point(i), self.point(j))
    }

    /// The points at `indices`, in that order (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> PointSample {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSample {
            coords,
            dim: self.dim,
            metric: self.metric,
            seed: self.seed,
        }
    }

    /// Applies `f` to every point.
    pub fn map_points<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<PointSample> {
        let pts = self.points().map(|p| Point(f(p))).collect();
        PointSample::new(pts, self.metric, self.seed)
    }

    /// Uniform subsample of size `n` without replacement.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<PointSample> {
        if n > self.len() {
            return Err(Error::Size(format!(
                "cannot draw {n} points from a sample of {}",
                self.len()
            )));
        }
        let mut rng = rng_from(seed);
        let idx = index::sample(&mut rng, self.len(), n).into_vec();
        let mut out = self.select(&idx);
        out.seed = seed;
        Ok(out)
    }
}

/// Draws `n` i.i.d. points from `spec`, deterministically in `seed`.
pub fn sample(spec: &SpaceSpec, n: usize, seed: u64) -> Result<PointSample> {
    if n == 0 {
        return Err(Error::Size("sample size must be ≥ 1".into()));
    }
    spec.validate()?;
    if let Family::FilePoints { path } = &spec.family {
        let mut s = load_calpha(path)?.subsample(n, seed)?;
        s.metric = spec.metric;
        return Ok(s);
    }
    let mut rng = rng_from(seed);
    let mut coords = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let [x, y] = draw_planar(&spec.family, &mut rng);
        coords.push(x);
        coords.push(y);
    }
    PointSample::from_flat(coords, 2, spec.metric, seed)
}

fn draw_planar(family: &Family, rng: &mut Rng) -> [f64; 2] {
    match *family {
        Family::UnitSquare => [rng.random(), rng.random()],
        Family::Disc { radius } => {
            let rho = radius * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            [rho * theta.cos(), rho * theta.sin()]
        }
        Family::SquareCapDisc { radius } => loop {
            let x = rng.random::<f64>() - 0.5;
            let y = rng.random::<f64>() - 0.5;
            if x * x + y * y <= radius * radius {
                break [x, y];
            }
        },
        Family::UnionSquares { gap } => {
            let shift = if rng.random::<bool>() { 1.0 + gap } else { 0.0 };
            [shift + rng.random::<f64>(), rng.random()]
        }
        Family::Spiral { v, noise } => {
            let p = spiral_draw(v, noise, rng);
            [p.0[0], p.0[1]]
        }
        Family::FilePoints { .. } => unreachable!("file spaces are subsampled, not drawn"),
    }
}

/// The spiral map `(R sin(vR) + noise·S, R cos(vR) + noise·S′)` at given
/// internal draws.
pub fn spiral_point(v: f64, noise: f64, r: f64, s: f64, s_prime: f64) -> Point {
    Point(vec![
        r * (v * r).sin() + noise * s,
        r * (v * r).cos() + noise * s_prime,
    ])
}

/// One draw from the spiral family.
pub fn spiral_draw(v: f64, noise: f64, rng: &mut Rng) -> Point {
    let r: f64 = rng.random();
    let s: f64 = rng.sample(StandardNormal);
    let s_prime: f64 = rng.sample(StandardNormal);
    spiral_point(v, noise, r, s, s_prime)
}

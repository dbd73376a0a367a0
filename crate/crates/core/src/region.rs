//! Planar convex control regions and their polar curves.
//!
//! A region `U` contains the origin in its interior but need not be
//! symmetric. Everything here is derived from the support function
//! `p(θ) = max_{u∈U} u·(cosθ, sinθ)`: the polar body is
//! `U* = {h : support_U(h) ≤ 1}` and its radial function is `r(θ) = 1/p(θ)`,
//! so one-sided derivatives of `r` follow from those of `p`. Corners of `U*`
//! are exactly the directions normal to flat edges of `U`.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::roots::{bisect, golden_max};
use crate::TAU;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

/// Relative jump of `r'` that marks a corner of the polar curve.
pub const CORNER_THRESHOLD: f64 = 1e-8;
const TIE_TOL: f64 = 1e-12;

/// On-disk description of a control region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegionSpec {
    Polygon { vertices: Vec<[f64; 2]> },
    Disc { radius: f64 },
    Square { alpha: f64 },
    SupportSamples { thetas: Vec<f64>, values: Vec<f64> },
}

/// A validated convex body with the origin in its interior.
#[derive(Debug, Clone)]
pub struct ControlRegion {
    spec: RegionSpec,
    shape: Shape,
}

#[derive(Debug, Clone)]
enum Shape {
    Polygon(Polygon),
    Disc(f64),
    Samples(SupportInterp),
}

impl ControlRegion {
    pub fn from_spec(spec: RegionSpec) -> Result<Self> {
        let shape = match &spec {
            RegionSpec::Polygon { vertices } => Shape::Polygon(Polygon::new(vertices)?),
            RegionSpec::Disc { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidRegion(format!("disc radius must be positive, got {radius}")));
                }
                Shape::Disc(*radius)
            }
            RegionSpec::Square { alpha } => {
                if !(alpha.is_finite() && (0.0..FRAC_PI_2).contains(alpha)) {
                    return Err(Error::InvalidRegion(format!("square alpha must lie in [0, pi/2), got {alpha}")));
                }
                Shape::Polygon(Polygon::new(&square_vertices(*alpha))?)
            }
            RegionSpec::SupportSamples { thetas, values } => Shape::Samples(SupportInterp::new(thetas, values)?),
        };
        Ok(ControlRegion { spec, shape })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        Self::from_spec(RegionSpec::Polygon { vertices })
    }

    pub fn disc(radius: f64) -> Result<Self> {
        Self::from_spec(RegionSpec::Disc { radius })
    }

    /// Unit ball of `max(|u·e1|, |u·e2|)` with `e1, e2` the standard basis
    /// rotated by `alpha`.
    pub fn square(alpha: f64) -> Result<Self> {
        Self::from_spec(RegionSpec::Square { alpha })
    }

    pub fn support_samples(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::from_spec(RegionSpec::SupportSamples { thetas, values })
    }

    /// Samples the support function `p` on a uniform grid of `n` angles.
    pub fn from_support_fn(n: usize, p: impl Fn(f64) -> f64) -> Result<Self> {
        let thetas: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
        let values = thetas.iter().map(|&t| p(t)).collect();
        Self::support_samples(thetas, values)
    }

    pub fn spec(&self) -> &RegionSpec {
        &self.spec
    }

    /// Vertices of a polygonal region (squares included).
    pub fn vertices(&self) -> Option<&[[f64; 2]]> {
        match &self.shape {
            Shape::Polygon(p) => Some(&p.verts),
            _ => None,
        }
    }

    /// Minkowski functional of `U`.
    pub fn gauge(&self, u: [f64; 2]) -> f64 {
        if u == [0.0, 0.0] {
            return 0.0;
        }
        match &self.shape {
            Shape::Polygon(p) => p.dual.iter().map(|w| dot(*w, u)).fold(f64::NEG_INFINITY, f64::max),
            Shape::Disc(r) => norm(u) / r,
            Shape::Samples(s) => s.gauge(u),
        }
    }

    /// Support function `max_{u∈U} h·u`.
    pub fn support(&self, h: [f64; 2]) -> f64 {
        if h == [0.0, 0.0] {
            return 0.0;
        }
        match &self.shape {
            Shape::Polygon(p) => p.verts.iter().map(|v| dot(*v, h)).fold(f64::NEG_INFINITY, f64::max),
            Shape::Disc(r) => r * norm(h),
            Shape::Samples(s) => norm(h) * s.eval(h[1].atan2(h[0])).0,
        }
    }

    /// Endpoints of the face of `U` exposed by direction `h` (equal when the
    /// face is a single point).
    pub fn exposed_face(&self, h: [f64; 2]) -> ([f64; 2], [f64; 2]) {
        let theta = h[1].atan2(h[0]);
        let (p, dm, dp) = self.support_derivs(theta);
        let e = [theta.cos(), theta.sin()];
        let n = [-theta.sin(), theta.cos()];
        let point = |d: f64| [p * e[0] + d * n[0], p * e[1] + d * n[1]];
        (point(dm), point(dp))
    }

    /// Support function at the unit direction `θ` with its left and right
    /// derivatives.
    pub fn support_derivs(&self, theta: f64) -> (f64, f64, f64) {
        match &self.shape {
            Shape::Polygon(p) => p.support_derivs(theta),
            Shape::Disc(r) => (*r, 0.0, 0.0),
            Shape::Samples(s) => {
                let (v, d) = s.eval(theta);
                (v, d, d)
            }
        }
    }

    /// The polar body `U*` as a control region in its own right.
    pub fn polar_body(&self) -> Result<ControlRegion> {
        match &self.shape {
            Shape::Polygon(p) => ControlRegion::polygon(p.dual.clone()),
            Shape::Disc(r) => ControlRegion::disc(1.0 / r),
            Shape::Samples(s) => {
                let values = s.thetas().iter().map(|&t| self.gauge([t.cos(), t.sin()])).collect();
                ControlRegion::support_samples(s.thetas(), values)
            }
        }
    }

    /// Polar curve of `U`.
    pub fn polar(&self) -> Result<PolarCurve> {
        PolarCurve::new(self.clone())
    }
}

fn square_vertices(alpha: f64) -> Vec<[f64; 2]> {
    let (s, c) = alpha.sin_cos();
    let e1 = [c, s];
    let e2 = [-s, c];
    [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|&(a, b)| [a * e1[0] + b * e2[0], a * e1[1] + b * e2[1]])
        .collect()
}

#[derive(Debug, Clone)]
struct Polygon {
    verts: Vec<[f64; 2]>,
    /// `dual[i]` is the vertex of `U*` polar to edge `verts[i] → verts[i+1]`.
    dual: Vec<[f64; 2]>,
}

impl Polygon {
    fn new(input: &[[f64; 2]]) -> Result<Self> {
        if input.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidRegion("non-finite vertex coordinate".into()));
        }
        let scale = input.iter().map(|v| norm(*v)).fold(0.0, f64::max).max(1e-300);
        // Drop repeated and collinear vertices.
        let mut verts: Vec<[f64; 2]> = Vec::with_capacity(input.len());
        for &v in input {
            if verts.last().is_some_and(|w| norm(sub(v, *w)) <= TIE_TOL * scale) {
                continue;
            }
            verts.push(v);
        }
        while verts.len() > 1 && norm(sub(verts[0], *verts.last().unwrap())) <= TIE_TOL * scale {
            verts.pop();
        }
        loop {
            let n = verts.len();
            if n < 3 {
                return Err(Error::InvalidRegion("polygon needs at least 3 distinct vertices".into()));
            }
            let collinear = (0..n).find(|&i| {
                let a = verts[(i + n - 1) % n];
                let b = verts[i];
                let c = verts[(i + 1) % n];
                cross(sub(b, a), sub(c, b)).abs() <= TIE_TOL * scale * scale
            });
            match collinear {
                Some(i) => {
                    verts.remove(i);
                }
                None => break,
            }
        }
        let n = verts.len();
        let mut turning = 0.0;
        for i in 0..n {
            let a = sub(verts[(i + 1) % n], verts[i]);
            let b = sub(verts[(i + 2) % n], verts[(i + 1) % n]);
            let c = cross(a, b);
            if c <= 0.0 {
                return Err(Error::NotConvex(format!(
                    "vertices must be counterclockwise and strictly convex (turn at vertex {})",
                    (i + 1) % n
                )));
            }
            turning += c.atan2(dot(a, b));
        }
        if (turning - TAU).abs() > 1e-6 {
            return Err(Error::NotConvex("vertex list winds more than once".into()));
        }
        let mut dual = Vec::with_capacity(n);
        for i in 0..n {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let normal = [b[1] - a[1], a[0] - b[0]];
            let offset = dot(normal, a);
            if offset <= TIE_TOL * norm(normal) * scale {
                return Err(Error::OriginNotInterior);
            }
            dual.push([normal[0] / offset, normal[1] / offset]);
        }
        Ok(Polygon { verts, dual })
    }

    fn support_derivs(&self, theta: f64) -> (f64, f64, f64) {
        let (s, c) = theta.sin_cos();
        let e = [c, s];
        let n = [-s, c];
        let p = self.verts.iter().map(|v| dot(*v, e)).fold(f64::NEG_INFINITY, f64::max);
        let tol = TIE_TOL * (1.0 + p.abs());
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in &self.verts {
            if dot(*v, e) >= p - tol {
                let d = dot(*v, n);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        (p, lo, hi)
    }
}

/// Periodic piecewise-cubic Hermite interpolant of a sampled support
/// function.
#[derive(Debug, Clone)]
struct SupportInterp {
    start: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl SupportInterp {
    fn new(thetas: &[f64], values: &[f64]) -> Result<Self> {
        let n = thetas.len();
        if n < 16 || values.len() != n {
            return Err(Error::InvalidRegion(format!(
                "support samples need at least 16 angle/value pairs of equal length (got {} and {})",
                n,
                values.len()
            )));
        }
        if thetas.iter().chain(values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRegion("non-finite support sample".into()));
        }
        let step = TAU / n as f64;
        for (k, t) in thetas.iter().enumerate() {
            if (t - (thetas[0] + k as f64 * step)).abs() > 1e-9 {
                return Err(Error::InvalidRegion(format!(
                    "support sample angles must form a uniform grid of spacing 2pi/{n}"
                )));
            }
        }
        if values.iter().any(|&v| v <= 0.0) {
            return Err(Error::OriginNotInterior);
        }
        // fourth-order centred differences keep the interpolant's curvature
        // accurate, which the sublinearity check depends on
        let at = |k: isize| values[k.rem_euclid(n as isize) as usize];
        let slopes = (0..n as isize)
            .map(|k| (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * step))
            .collect();
        let interp = SupportInterp { start: thetas[0], step, values: values.to_vec(), slopes };
        interp.check_convex()?;
        Ok(interp)
    }

    fn thetas(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.start + k as f64 * self.step).collect()
    }

    fn locate(&self, theta: f64) -> (usize, f64) {
        let n = self.values.len();
        let x = (theta - self.start).rem_euclid(TAU) / self.step;
        let k = (x.floor() as usize).min(n - 1);
        (k, (x - k as f64).clamp(0.0, 1.0))
    }

    /// `(p, p', p'')` at `θ`.
    fn eval2(&self, theta: f64) -> (f64, f64, f64) {
        let n = self.values.len();
        let (k, t) = self.locate(theta);
        let h = self.step;
        let (p0, p1) = (self.values[k], self.values[(k + 1) % n]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[(k + 1) % n] * h);
        let (t2, t3) = (t * t, t * t * t);
        let p = (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1;
        let dp = ((6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * p1 + (3.0 * t2 - 2.0 * t) * m1) / h;
        let ddp = ((12.0 * t - 6.0) * p0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * p1 + (6.0 * t - 2.0) * m1) / (h * h);
        (p, dp, ddp)
    }

    fn eval(&self, theta: f64) -> (f64, f64) {
        let (p, dp, _) = self.eval2(theta);
        (p, dp)
    }

    /// Sublinearity of the interpolated support function is `p + p'' ≥ 0`.
    fn check_convex(&self) -> Result<()> {
        let pmax = self.values.iter().cloned().fold(0.0, f64::max);
        let probes = self.values.len() * 8;
        for j in 0..probes {
            let theta = self.start + TAU * (j as f64 + 0.5) / probes as f64;
            let (p, _, ddp) = self.eval2(theta);
            if p + ddp < -1e-9 * pmax {
                return Err(Error::NotConvex(format!("interpolated support function is not sublinear near theta = {theta:.6}")));
            }
        }
        Ok(())
    }

    /// `max_θ r(θ) e_θ·u`, the support function of the polar body.
    fn gauge(&self, u: [f64; 2]) -> f64 {
        let f = |t: f64| {
            let (p, _) = self.eval(t);
            (t.cos() * u[0] + t.sin() * u[1]) / p
        };
        let m = self.values.len() * 4;
        let h = TAU / m as f64;
        let best = (0..m).map(|k| self.start + k as f64 * h).fold((f64::NEG_INFINITY, 0.0), |acc, t| {
            let v = f(t);
            if v > acc.0 {
                (v, t)
            } else {
                acc
            }
        });
        let t = golden_max(f, best.1 - h, best.1 + h, 1e-12);
        f(t).max(best.0)
    }
}

/// `r(θ)` with its one-sided derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub dr_minus: f64,
    pub dr_plus: f64,
}

impl PolarPoint {
    pub fn is_corner(&self) -> bool {
        (self.dr_plus - self.dr_minus).abs() > CORNER_THRESHOLD * (1.0 + self.r.abs())
    }

    /// Any admissible value of `r'` on `[dr_minus, dr_plus]`; `weight` 0 gives
    /// the left derivative and 1 the right one.
    pub fn dr_blend(&self, weight: f64) -> f64 {
        (1.0 - weight) * self.dr_minus + weight * self.dr_plus
    }
}

/// Extreme face of `h2` on `U*`: all angles in `[lo, hi]` attain `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Face {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Face {
    pub fn is_point(&self) -> bool {
        self.hi - self.lo <= 1e-12
    }
}

/// Radial parametrization `r(θ)` of `∂U*`.
#[derive(Debug, Clone)]
pub struct PolarCurve {
    region: ControlRegion,
    area: f64,
    corners: Vec<f64>,
    top: Face,
    bottom: Face,
}

impl PolarCurve {
    fn new(region: ControlRegion) -> Result<Self> {
        let corners = match &region.shape {
            Shape::Polygon(p) => {
                let mut c: Vec<f64> = p.dual.iter().map(|w| w[1].atan2(w[0]).rem_euclid(TAU)).collect();
                c.sort_by(f64::total_cmp);
                c
            }
            Shape::Disc(_) => Vec::new(),
            Shape::Samples(s) => s
                .thetas()
                .into_iter()
                .filter(|&t| {
                    let (p, dp) = s.eval(t);
                    let (_, dm) = s.eval(t - 1e-9);
                    ((dp - dm) / (p * p)).abs() > CORNER_THRESHOLD * (1.0 + 1.0 / p)
                })
                .map(|t| t.rem_euclid(TAU))
                .collect(),
        };
        let mut curve = PolarCurve {
            region,
            area: 0.0,
            corners,
            top: Face { value: 0.0, lo: 0.0, hi: 0.0 },
            bottom: Face { value: 0.0, lo: 0.0, hi: 0.0 },
        };
        curve.area = match &curve.region.shape {
            Shape::Polygon(p) => shoelace(&p.dual),
            Shape::Disc(r) => PI / (r * r),
            Shape::Samples(_) => curve.area_by_quadrature(),
        };
        curve.top = curve.find_face(true);
        curve.bottom = curve.find_face(false);
        Ok(curve)
    }

    pub fn region(&self) -> &ControlRegion {
        &self.region
    }

    /// `r(θ)`, `r'_-(θ)`, `r'_+(θ)`; `θ` may be any real.
    pub fn eval(&self, theta: f64) -> PolarPoint {
        let (p, dm, dp) = self.region.support_derivs(theta);
        PolarPoint { r: 1.0 / p, dr_minus: -dm / (p * p), dr_plus: -dp / (p * p) }
    }

    pub fn r(&self, theta: f64) -> f64 {
        1.0 / self.region.support_derivs(theta).0
    }

    /// `h(θ) = r(θ)(cosθ, sinθ) ∈ ∂U*`.
    pub fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.r(theta);
        [r * theta.cos(), r * theta.sin()]
    }

    pub fn h2(&self, theta: f64) -> f64 {
        self.r(theta) * theta.sin()
    }

    /// Corner angles in `[0, 2π)`, ascending.
    pub fn corners(&self) -> &[f64] {
        &self.corners
    }

    /// Corner angles inside the open interval `(a, b)`, any lift.
    pub fn corners_between(&self, a: f64, b: f64) -> Vec<f64> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let mut out = Vec::new();
        if self.corners.is_empty() {
            return out;
        }
        let k0 = (a / TAU).floor() as i64 - 1;
        let k1 = (b / TAU).ceil() as i64 + 1;
        for k in k0..=k1 {
            for &c in &self.corners {
                let t = c + k as f64 * TAU;
                if t > a && t < b {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Area of `U*`.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// `(1/2)∫₀^{2π} r² dθ`, split at corners.
    pub fn area_by_quadrature(&self) -> f64 {
        0.5 * self.sector_integral_between(0.0, TAU)
    }

    /// `∫_a^b r²(ξ) dξ` with the interval split at corners.
    pub fn sector_integral_between(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut knots = vec![lo];
        knots.extend(self.corners_between(lo, hi));
        knots.push(hi);
        let sum: f64 = knots
            .windows(2)
            .map(|w| {
                quadrature::integrate(
                    |t| {
                        let r = self.r(t);
                        [r * r]
                    },
                    w[0],
                    w[1],
                )[0]
            })
            .sum();
        sign * sum
    }

    /// Doubled sector area `σ(θ) = ∫₀^θ r²`.
    pub fn sector_integral(&self, theta: f64) -> f64 {
        let turns = (theta / TAU).floor();
        let rest = theta - turns * TAU;
        turns * 2.0 * self.area + self.sector_integral_between(0.0, rest)
    }

    /// Face of `U*` where `h2` is maximal.
    pub fn top_face(&self) -> Face {
        self.top
    }

    /// Face of `U*` where `h2` is minimal.
    pub fn bottom_face(&self) -> Face {
        self.bottom
    }

    /// `max_{h∈U*} h2`, which equals the gauge of `(0, 1)`.
    pub fn h2_max(&self) -> f64 {
        self.region.gauge([0.0, 1.0])
    }

    /// `min_{h∈U*} h2 = −gauge(0, −1)`.
    pub fn h2_min(&self) -> f64 {
        -self.region.gauge([0.0, -1.0])
    }

    fn find_face(&self, upper: bool) -> Face {
        let sign = if upper { 1.0 } else { -1.0 };
        let value = if upper { self.h2_max() } else { self.h2_min() };
        match &self.region.shape {
            Shape::Disc(_) => {
                let t = sign * FRAC_PI_2;
                Face { value, lo: t, hi: t }
            }
            Shape::Polygon(p) => {
                let n = p.dual.len();
                let best = (0..n).map(|i| sign * p.dual[i][1]).fold(f64::NEG_INFINITY, f64::max);
                let tol = TIE_TOL * (1.0 + best.abs());
                let hits: Vec<usize> = (0..n).filter(|&i| sign * p.dual[i][1] >= best - tol).collect();
                let angle = |i: usize| p.dual[i][1].atan2(p.dual[i][0]);
                match hits.as_slice() {
                    [i] => Face { value, lo: angle(*i), hi: angle(*i) },
                    [i, j] => {
                        // consecutive dual vertices; order them counterclockwise
                        let (a, b) = if (i + 1) % n == *j { (*i, *j) } else { (*j, *i) };
                        let lo = angle(a);
                        let mut hi = angle(b);
                        while hi < lo {
                            hi += TAU;
                        }
                        Face { value, lo, hi }
                    }
                    _ => {
                        let t = angle(hits[0]);
                        Face { value, lo: t, hi: t }
                    }
                }
            }
            Shape::Samples(s) => {
                let f = |t: f64| sign * self.h2(t);
                let grid = s.thetas();
                let step = TAU / grid.len() as f64;
                let start = grid
                    .iter()
                    .cloned()
                    .fold((f64::NEG_INFINITY, 0.0), |acc, t| if f(t) > acc.0 { (f(t), t) } else { acc })
                    .1;
                let mut t = golden_max(f, start - step, start + step, 1e-11);
                // polish on the derivative of h2, which is continuous
                let dh2 = |t: f64| {
                    let q = self.eval(t);
                    0.5 * (q.dr_minus + q.dr_plus) * t.sin() + q.r * t.cos()
                };
                if let Some(root) = bisect(dh2, t - 1e-5, t + 1e-5) {
                    t = root;
                }
                Face { value, lo: t, hi: t }
            }
        }
    }
}

/// Polar curve of the square region of angle `alpha`:
/// `r = √2 / (2 cos(θ − α − π/4))` on `[α, α + π/2]`, extended with period
/// `π/2`. Returns `(r, r')` with `r'` the right derivative at corners.
pub fn square_polar_radius(alpha: f64, theta: f64) -> (f64, f64) {
    let phase = (theta - alpha).rem_euclid(FRAC_PI_2) - FRAC_PI_4;
    let c = phase.cos();
    (SQRT_2 / (2.0 * c), SQRT_2 * phase.sin() / (2.0 * c * c))
}

pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Signed area of a polygon given counterclockwise.
pub fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

#![allow(dead_code)]

use engel_core::{ControlRegion, Covector, GroupElement, Trajectory};
use rand::Rng;
use std::f64::consts::TAU;

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Random convex polygon with 3 to 12 well separated vertices and the origin
/// well inside. Off-centre clouds make most of them asymmetric.
pub fn random_polygon(rng: &mut impl Rng) -> Vec<[f64; 2]> {
    loop {
        let m = rng.gen_range(3..=20);
        let c = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let stretch = [rng.gen_range(0.6..1.6), rng.gen_range(0.6..1.6)];
        let pts = (0..m)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..TAU);
                let r: f64 = rng.gen_range(0.5..2.0);
                [c[0] + stretch[0] * r * a.cos(), c[1] + stretch[1] * r * a.sin()]
            })
            .collect();
        let hull = convex_hull(pts);
        if (3..=12).contains(&hull.len()) && well_shaped(&hull) {
            return hull;
        }
    }
}

fn well_shaped(v: &[[f64; 2]]) -> bool {
    let n = v.len();
    (0..n).all(|i| {
        let (a, b, c) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
        let e = [b[0] - a[0], b[1] - a[1]];
        let f = [c[0] - b[0], c[1] - b[1]];
        let le = e[0].hypot(e[1]);
        let lf = f[0].hypot(f[1]);
        // distance from the origin to the edge line, and the turning angle
        let dist = (a[0] * e[1] - a[1] * e[0]).abs() / le;
        let turn = (e[0] * f[1] - e[1] * f[0]) / (le * lf);
        le > 0.05 && dist > 0.1 && turn > 0.05 && (a[0] * e[1] - a[1] * e[0]) > 0.0
    })
}

/// Velocity `u1 X(g) + u2 Y(g)` in coordinates.
pub fn horizontal_velocity(g: [f64; 4], u: [f64; 2]) -> [f64; 4] {
    let [x, y, z, _] = g;
    [
        u[0],
        u[1],
        0.5 * (x * u[1] - y * u[0]),
        (-0.5 * z - x * y / 12.0) * u[0] + x * x / 12.0 * u[1],
    ]
}

/// Classical fourth-order Runge–Kutta on `[t0, t1]` with `steps` steps.
pub fn rk4<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], y0: [f64; N], t0: f64, t1: f64, steps: usize) -> [f64; N] {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let add = |y: &[f64; N], d: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|i| y[i] + s * d[i]) };
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &add(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &add(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &add(&y, &k3, h));
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    y
}

/// Normal Hamiltonian flow on the disc of radius 1: state `(g, h)` with the
/// control `u = (h1, h2)/|(h1, h2)|`.
pub fn disc_flow(_t: f64, s: &[f64; 8]) -> [f64; 8] {
    let (h1, h2, h3, h4) = (s[4], s[5], s[6], s[7]);
    let norm = h1.hypot(h2);
    let u = [h1 / norm, h2 / norm];
    let g = horizontal_velocity([s[0], s[1], s[2], s[3]], u);
    [g[0], g[1], g[2], g[3], -u[1] * h3, u[0] * h3, u[0] * h4, 0.0]
}

/// Lifts `h1..h4` recomputed from the state.
pub fn lifts(phi: Covector, g: GroupElement) -> [f64; 4] {
    let a = phi.phi3 + 0.5 * phi.phi4 * g.x;
    [phi.phi1 - a * g.y - phi.phi4 * g.z, phi.phi2 + a * g.x, phi.phi3 + phi.phi4 * g.x, phi.phi4]
}

/// Worst Casimir drift and worst scaled linear-integral residual of a trace,
/// both recomputed from the state columns.
pub fn conservation(tr: &Trajectory) -> (f64, f64) {
    let phi = tr.phi;
    let e_ref = 0.5 * phi.phi3 * phi.phi3 - phi.phi2 * phi.phi4;
    let mut drift: f64 = 0.0;
    let mut linear: f64 = 0.0;
    for s in &tr.samples {
        let h = lifts(phi, s.g);
        drift = drift.max((0.5 * h[2] * h[2] - h[1] * h[3] - e_ref).abs());
        let g = s.g;
        let lhs = phi.phi1 * g.x + phi.phi2 * g.y + (2.0 * phi.phi3 + 0.5 * phi.phi4 * g.x) * g.z + 3.0 * phi.phi4 * g.v;
        linear = linear.max((lhs - s.t).abs() / (1.0 + s.t.abs()));
    }
    (drift, linear)
}

/// Boundary probe set of `U`: the vertices of a polygon, otherwise 4096
/// boundary points found along rays.
pub fn boundary_probes(region: &ControlRegion) -> Vec<[f64; 2]> {
    if let Some(v) = region.vertices() {
        return v.to_vec();
    }
    (0..4096)
        .map(|k| {
            let a = TAU * k as f64 / 4096.0;
            let d = [a.cos(), a.sin()];
            let g = region.gauge(d);
            [d[0] / g, d[1] / g]
        })
        .collect()
}

/// Worst `|gauge(u) − 1|` and worst shortfall of `h·u` below the probe
/// maximum, over every sample.
pub fn maximum_principle(tr: &Trajectory, region: &ControlRegion) -> (f64, f64) {
    let probes = boundary_probes(region);
    let mut gauge_err: f64 = 0.0;
    let mut shortfall: f64 = 0.0;
    for s in &tr.samples {
        let h = lifts(tr.phi, s.g);
        gauge_err = gauge_err.max((region.gauge(s.u) - 1.0).abs());
        let best = probes.iter().map(|p| h[0] * p[0] + h[1] * p[1]).fold(f64::NEG_INFINITY, f64::max);
        shortfall = shortfall.max(best - (h[0] * s.u[0] + h[1] * s.u[1]));
    }
    (gauge_err, shortfall)
}

/// `∫_a^b f` by double-exponential (tanh-sinh) quadrature; tolerant of
/// integrable endpoint singularities.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    for k in -(4 * 64)..=(4 * 64) {
        let t = k as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // offsets from the ends written without cancellation
        let x = if u <= 0.0 { a + half * u.exp() / u.cosh() } else { b - half * (-u).exp() / u.cosh() };
        if x <= a || x >= b || w == 0.0 {
            continue;
        }
        sum += w * f(x);
    }
    half * h * sum
}

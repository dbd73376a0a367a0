//! Composite Gauss–Legendre quadrature with an optional square-root
//! substitution that removes `|ξ − a|^{-1/2}` endpoint singularities.

use std::sync::OnceLock;

/// Nodes per Gauss panel.
pub const GAUSS_NODES: usize = 64;
/// Relative change at which panel halving stops.
pub const REL_TOL: f64 = 1e-10;
const ABS_FLOOR: f64 = 1e-15;
const MAX_LEVEL: u32 = 12;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_NODES))
}

/// Composite rule with `panels` equal panels on `[a, b]`.
pub fn composite<const K: usize>(f: &impl Fn(f64) -> [f64; K], a: f64, b: f64, panels: usize) -> [f64; K] {
    let (nodes, weights) = rule();
    let h = (b - a) / panels as f64;
    let mut acc = [0.0; K];
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(weights) {
            let v = f(mid + 0.5 * h * x);
            for k in 0..K {
                acc[k] += w * v[k];
            }
        }
    }
    acc.map(|s| 0.5 * h * s)
}

/// `∫_a^b f` by composite 64-point Gauss with panel halving until every
/// component changes by less than [`REL_TOL`] relative.
pub fn integrate<const K: usize>(f: impl Fn(f64) -> [f64; K], a: f64, b: f64) -> [f64; K] {
    if a == b {
        return [0.0; K];
    }
    let mut panels = 1;
    let mut prev = composite(&f, a, b, panels);
    for _ in 0..MAX_LEVEL {
        panels *= 2;
        let next = composite(&f, a, b, panels);
        let converged = (0..K).all(|k| (next[k] - prev[k]).abs() <= REL_TOL * next[k].abs() + ABS_FLOOR);
        prev = next;
        if converged {
            break;
        }
    }
    prev
}

/// `∫_a^b f` where `f` may blow up like `|ξ − a|^{-1/2}` and/or
/// `|ξ − b|^{-1/2}`. The interval is split at its midpoint and each half is
/// mapped by `ξ = end ± s²`, which turns the singularity into a bounded
/// integrand. Harmless when an endpoint is regular. Orientation is respected.
pub fn integrate_singular_ends<const K: usize>(f: impl Fn(f64) -> [f64; K], a: f64, b: f64) -> [f64; K] {
    if a == b {
        return [0.0; K];
    }
    if b < a {
        return integrate_singular_ends(f, b, a).map(|v| -v);
    }
    let m = 0.5 * (a + b);
    let left = integrate(
        |s| {
            let v = f(a + s * s);
            v.map(|c| 2.0 * s * c)
        },
        0.0,
        (m - a).sqrt(),
    );
    let right = integrate(
        |s| {
            let v = f(b - s * s);
            v.map(|c| 2.0 * s * c)
        },
        0.0,
        (b - m).sqrt(),
    );
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = left[k] + right[k];
    }
    out
}

/// Scalar convenience wrapper around [`integrate_singular_ends`].
pub fn integrate_scalar_singular(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate_singular_ends(|x| [f(x)], a, b)[0]
}

//! Cumulative integrals in `θ` along a monotone branch of the angle motion.
//!
//! Each table holds, at a set of nodes, the four integrals
//! `∫ r²/√N · [1, u1, u2, x_iso² u2] dθ` measured from the first node. The
//! first component is elapsed time; the others accumulate `x`, `y` and the
//! auxiliary moment needed for `v` on isoperimetrix motion. Between nodes the
//! integrals are completed by adaptive Gauss quadrature with the `s²`
//! substitution on intervals that touch a turning point.

use crate::hamiltonian::{control_from_radius, Covector};
use crate::quadrature::{composite, integrate};
use crate::region::PolarCurve;
use crate::roots::solve_increasing;
use crate::TAU;

const NODES_PER_TURN: f64 = 128.0;
const END_REFINEMENT: i32 = 20;

/// Integrand data shared by all branches of one extremal.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Integrand {
    pub phi: Covector,
    pub energy: f64,
}

impl Integrand {
    /// `N(θ) = 2(E + φ4 h2(θ))`.
    pub fn subradical(&self, polar: &PolarCurve, theta: f64) -> f64 {
        2.0 * (self.energy + self.phi.phi4 * polar.h2(theta))
    }

    pub fn eval(&self, polar: &PolarCurve, theta: f64) -> [f64; 4] {
        let p = polar.eval(theta);
        let (s, _) = theta.sin_cos();
        let n = 2.0 * (self.energy + self.phi.phi4 * p.r * s);
        if n.is_nan() || n <= 0.0 {
            return [0.0; 4];
        }
        let w = p.r * p.r / n.sqrt();
        let u = control_from_radius(p.r, 0.5 * (p.dr_minus + p.dr_plus), theta);
        let x_iso = if self.phi.phi4 == 0.0 { (p.r * s - self.phi.phi2) / self.phi.phi3 } else { 0.0 };
        [w, w * u[0], w * u[1], w * x_iso * x_iso * u[1]]
    }

    /// Integrand at `end + d` for a turning point `end`, treated as an exact
    /// zero of `N`. The increment of `h2` is integrated from its derivative
    /// so that `N` keeps full relative accuracy as `d → 0`; rounding `end + d`
    /// would otherwise leave an absolute error of order one ulp in `N`.
    pub fn eval_from_end(&self, polar: &PolarCurve, end: f64, d: f64) -> [f64; 4] {
        let theta = end + d;
        let p = polar.eval(theta);
        let (s, _) = theta.sin_cos();
        let dh2 = h2_increment(polar, end, d);
        let n = 2.0 * self.phi.phi4 * dh2;
        if n.is_nan() || n <= 0.0 {
            return [0.0; 4];
        }
        let w = p.r * p.r / n.sqrt();
        let u = control_from_radius(p.r, if d < 0.0 { p.dr_minus } else { p.dr_plus }, theta);
        let x_iso = if self.phi.phi4 == 0.0 { (p.r * s - self.phi.phi2) / self.phi.phi3 } else { 0.0 };
        [w, w * u[0], w * u[1], w * x_iso * x_iso * u[1]]
    }

    /// `∫_end^x` by the substitution `θ = end ± s²`.
    pub fn from_end(&self, polar: &PolarCurve, end: f64, x: f64) -> [f64; 4] {
        self.from_offset(polar, end, x - end)
    }

    /// `∫` from `end` to `end + d`, with `d` kept apart from `end`.
    pub fn from_offset(&self, polar: &PolarCurve, end: f64, d: f64) -> [f64; 4] {
        if d == 0.0 {
            return [0.0; 4];
        }
        let sign = d.signum();
        integrate(|s| self.eval_from_end(polar, end, sign * s * s).map(|c| 2.0 * sign * s * c), 0.0, d.abs().sqrt())
    }

    /// `∫_a^b` where the flagged ends are zeros of `N`.
    pub fn between(&self, polar: &PolarCurve, a: f64, b: f64, a_zero: bool, b_zero: bool) -> [f64; 4] {
        match (a_zero, b_zero) {
            (true, true) => {
                let m = 0.5 * (a + b);
                let (l, r) = (self.from_end(polar, a, m), self.from_end(polar, b, m));
                std::array::from_fn(|k| l[k] - r[k])
            }
            (true, false) => self.from_end(polar, a, b),
            (false, true) => self.from_end(polar, b, a).map(|c| -c),
            (false, false) => integrate(|x| self.eval(polar, x), a, b),
        }
    }

    /// `N(θ)` where every angle in `zeros` is taken as an exact zero: within
    /// `NEAR_ZERO` of one (modulo `2π`) the value comes from the increment of
    /// `h2`, which keeps `√N` accurate right up to the turning point.
    pub fn subradical_near(&self, polar: &PolarCurve, theta: f64, zeros: &[f64]) -> f64 {
        let nearest = zeros
            .iter()
            .map(|&z| z + TAU * ((theta - z) / TAU).round())
            .min_by(|a, b| (theta - a).abs().total_cmp(&(theta - b).abs()));
        let Some(end) = nearest.filter(|e| (theta - e).abs() < NEAR_ZERO) else {
            return self.subradical(polar, theta);
        };
        self.subradical_from(polar, end, theta - end)
    }

    /// `N(end + d)` for a zero `end` of `N`, summing `h2` increments across
    /// any corners in between.
    pub fn subradical_from(&self, polar: &PolarCurve, end: f64, d: f64) -> f64 {
        let theta = end + d;
        let mut knots = vec![0.0];
        knots.extend(
            polar
                .corners_between(end.min(theta), end.max(theta))
                .into_iter()
                .filter(|&c| c != end && c != theta)
                .map(|c| c - end),
        );
        if d < 0.0 {
            knots[1..].reverse();
        }
        knots.push(d);
        let dh2: f64 = knots.windows(2).map(|w| h2_increment(polar, end + w[0], w[1] - w[0])).sum();
        2.0 * self.phi.phi4 * dh2
    }
}

/// Distance to a turning point below which `N` is rebuilt from `h2'`.
const NEAR_ZERO: f64 = 1e-3;

/// `h2(start + d) − h2(start)`. Short steps use three-point Gauss–Legendre on
/// `h2'` with the one-sided derivative that faces into the interval; longer
/// ones lose nothing to cancellation and take the plain difference.
fn h2_increment(polar: &PolarCurve, start: f64, d: f64) -> f64 {
    if d.abs() > NEAR_ZERO {
        return polar.h2(start + d) - polar.h2(start);
    }
    const X: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
    const W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    X.iter()
        .zip(W)
        .map(|(x, w)| {
            let xi = start + 0.5 * d * (1.0 + x);
            let q = polar.eval(xi);
            let (sx, cx) = xi.sin_cos();
            // a face ending at `start` may register as a corner this close to it
            let dr = if d < 0.0 { q.dr_minus } else { q.dr_plus };
            w * (dr * sx + q.r * cx)
        })
        .sum::<f64>()
        * 0.5
        * d
}

#[derive(Debug, Clone)]
pub(crate) struct Table {
    polar: PolarCurve,
    f: Integrand,
    nodes: Vec<f64>,
    cum: Vec<[f64; 4]>,
    singular_lo: bool,
    singular_hi: bool,
    periodic: bool,
    /// Intervals added at each end while chasing an asymptotic turning point.
    extended: [usize; 2],
}

impl Table {
    /// Full turn `[base, base + 2π]`, extended periodically.
    pub fn periodic(polar: &PolarCurve, f: Integrand, base: f64) -> Table {
        let m = NODES_PER_TURN as usize;
        let mut nodes: Vec<f64> = (0..=m).map(|k| base + TAU * k as f64 / m as f64).collect();
        nodes.extend(polar.corners_between(base, base + TAU));
        let mut t = Table {
            polar: polar.clone(),
            f,
            nodes: sorted_nodes(nodes),
            cum: Vec::new(),
            singular_lo: false,
            singular_hi: false,
            periodic: true,
            extended: [0, 0],
        };
        t.fill();
        t
    }

    /// Branch `[lo, hi]`. Ends flagged finite are turning points reached in
    /// finite time; the others are approached asymptotically, and the table
    /// is extended toward them until the time measured from `start` exceeds
    /// `horizon + 1` or the subradical drops to rounding level.
    pub fn branch(polar: &PolarCurve, f: Integrand, lo: f64, hi: f64, finite: [bool; 2], start: f64, horizon: f64) -> Table {
        let width = hi - lo;
        let m = (NODES_PER_TURN * width / TAU).ceil().max(8.0) as usize;
        let h = width / m as f64;
        let mut nodes: Vec<f64> = (1..m).map(|k| lo + k as f64 * h).collect();
        nodes.extend(polar.corners_between(lo, hi));
        if finite[0] {
            nodes.push(lo);
            nodes.extend((1..=END_REFINEMENT).map(|k| lo + h * 0.5f64.powi(k)));
        }
        if finite[1] {
            nodes.push(hi);
            nodes.extend((1..=END_REFINEMENT).map(|k| hi - h * 0.5f64.powi(k)));
        }
        let mut t = Table {
            polar: polar.clone(),
            f,
            nodes: sorted_nodes(nodes),
            cum: Vec::new(),
            singular_lo: finite[0],
            singular_hi: finite[1],
            periodic: false,
            extended: [0, 0],
        };
        t.fill();
        let target = horizon.abs() + 1.0;
        let floor = |theta: f64| 1e-10 * (1.0 + 2.0 * f.energy.abs() + 2.0 * (f.phi.phi4 * polar.h2(theta)).abs());
        if !finite[0] {
            let start_time = t.cum_at(start.clamp(t.lo(), t.hi()))[0];
            while start_time - t.cum[0][0] < target {
                let delta = 0.5 * (t.nodes[0] - lo);
                let theta = lo + delta;
                if delta < 1e-14 * (1.0 + lo.abs()) || theta >= t.nodes[0] || f.subradical(polar, theta) <= floor(theta) {
                    break;
                }
                let piece = extension_piece(|x| f.eval(polar, x), theta, t.nodes[0]);
                t.extended[0] += 1;
                let first = t.cum[0];
                t.nodes.insert(0, theta);
                t.cum.insert(0, std::array::from_fn(|k| first[k] - piece[k]));
            }
        }
        if !finite[1] {
            let start_time = t.cum_at(start.clamp(t.lo(), t.hi()))[0];
            while t.cum.last().unwrap()[0] - start_time < target {
                let last_node = *t.nodes.last().unwrap();
                let delta = 0.5 * (hi - last_node);
                let theta = hi - delta;
                if delta < 1e-14 * (1.0 + hi.abs()) || theta <= last_node || f.subradical(polar, theta) <= floor(theta) {
                    break;
                }
                let piece = extension_piece(|x| f.eval(polar, x), last_node, theta);
                t.extended[1] += 1;
                let last = *t.cum.last().unwrap();
                t.nodes.push(theta);
                t.cum.push(std::array::from_fn(|k| last[k] + piece[k]));
            }
        }
        t
    }

    fn fill(&mut self) {
        let n = self.nodes.len();
        let mut cum = Vec::with_capacity(n);
        cum.push([0.0; 4]);
        for j in 0..n - 1 {
            let piece = self.interval_total(j);
            let prev: [f64; 4] = cum[j];
            cum.push(std::array::from_fn(|k| prev[k] + piece[k]));
        }
        self.cum = cum;
    }

    fn singular_ends(&self, j: usize) -> (bool, bool) {
        let last = self.nodes.len() - 2;
        (j == 0 && self.singular_lo, j == last && self.singular_hi)
    }

    fn from_end(&self, end: f64, x: f64) -> [f64; 4] {
        self.f.from_end(&self.polar, end, x)
    }

    fn interval_total(&self, j: usize) -> [f64; 4] {
        let (lo_sing, hi_sing) = self.singular_ends(j);
        self.f.between(&self.polar, self.nodes[j], self.nodes[j + 1], lo_sing, hi_sing)
    }

    fn local_cum(&self, theta: f64) -> [f64; 4] {
        let n = self.nodes.len();
        let j = self.nodes.partition_point(|&x| x <= theta).saturating_sub(1).min(n - 2);
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        let (lo_sing, hi_sing) = self.singular_ends(j);
        let from_lo = |x: f64| -> [f64; 4] {
            let piece = self.from_end(a, x);
            std::array::from_fn(|k| self.cum[j][k] + piece[k])
        };
        let from_hi = |x: f64| -> [f64; 4] {
            let piece = self.from_end(b, x);
            std::array::from_fn(|k| self.cum[j + 1][k] + piece[k])
        };
        match (lo_sing, hi_sing) {
            (true, true) if theta <= 0.5 * (a + b) => from_lo(theta),
            (true, true) => from_hi(theta),
            (true, false) => from_lo(theta),
            (false, true) => from_hi(theta),
            (false, false) => {
                let f = |x: f64| self.f.eval(&self.polar, x);
                let extended = j < self.extended[0] || j + 1 >= n - self.extended[1];
                let quad = |a: f64, b: f64| if extended { extension_piece(f, a, b) } else { integrate(f, a, b) };
                if theta - a <= b - theta {
                    let piece = quad(a, theta);
                    std::array::from_fn(|k| self.cum[j][k] + piece[k])
                } else {
                    let piece = quad(theta, b);
                    std::array::from_fn(|k| self.cum[j + 1][k] - piece[k])
                }
            }
        }
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Integrals over one full turn of a periodic table.
    pub fn totals(&self) -> [f64; 4] {
        *self.cum.last().unwrap()
    }

    pub fn integrand(&self, theta: f64) -> [f64; 4] {
        self.f.eval(&self.polar, theta)
    }

    /// Cumulative integrals from the first node to `θ`.
    pub fn cum_at(&self, theta: f64) -> [f64; 4] {
        if self.periodic {
            let turns = ((theta - self.lo()) / TAU).floor();
            let base = self.local_cum(theta - turns * TAU);
            let tot = self.totals();
            return std::array::from_fn(|k| base[k] + turns * tot[k]);
        }
        self.local_cum(theta.clamp(self.lo(), self.hi()))
    }

    /// Inverse of the elapsed-time component.
    pub fn theta_at_time(&self, tau: f64) -> f64 {
        if self.periodic {
            let total = self.totals()[0];
            let turns = (tau / total).floor();
            return self.local_theta(tau - turns * total) + turns * TAU;
        }
        self.local_theta(tau)
    }

    /// `θ` and the cumulative integrals at elapsed table time `tau`. Inside
    /// the node interval touching a turning point the inversion runs in `σ`
    /// with `θ = end ± σ²`, and the offset `(end, ±σ²)` is returned as well:
    /// there `θ` itself cannot resolve the distance to the end.
    pub fn locate(&self, tau: f64) -> (f64, [f64; 4], Option<(f64, f64)>) {
        if !self.periodic {
            let n = self.nodes.len();
            let j = self.cum.partition_point(|c| c[0] <= tau).saturating_sub(1).min(n - 2);
            let (lo_sing, hi_sing) = self.singular_ends(j);
            let inside = tau > self.cum[j][0] && tau < self.cum[j + 1][0];
            if inside && (lo_sing || hi_sing) {
                let (end, sign, base, elapsed) = if lo_sing {
                    (self.nodes[j], 1.0, self.cum[j], tau - self.cum[j][0])
                } else {
                    (self.nodes[j + 1], -1.0, self.cum[j + 1], self.cum[j + 1][0] - tau)
                };
                let width = self.nodes[j + 1] - self.nodes[j];
                let sigma = solve_increasing(
                    |q| sign * self.f.from_offset(&self.polar, end, sign * q * q)[0] - elapsed,
                    |q| 2.0 * q * self.f.eval_from_end(&self.polar, end, sign * q * q)[0],
                    0.0,
                    width.sqrt(),
                    (elapsed / (self.cum[j + 1][0] - self.cum[j][0])).min(1.0) * width.sqrt(),
                    1e-15 * (1.0 + tau.abs()),
                );
                let d = sign * sigma * sigma;
                let piece = self.f.from_offset(&self.polar, end, d);
                return (end + d, std::array::from_fn(|k| base[k] + piece[k]), Some((end, d)));
            }
        }
        let theta = self.theta_at_time(tau);
        (theta, self.cum_at(theta), None)
    }

    fn local_theta(&self, tau: f64) -> f64 {
        let n = self.nodes.len();
        let tau = tau.clamp(self.cum[0][0], self.cum[n - 1][0]);
        let j = self.cum.partition_point(|c| c[0] <= tau).saturating_sub(1).min(n - 2);
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        let (ta, tb) = (self.cum[j][0], self.cum[j + 1][0]);
        if tau <= ta {
            return a;
        }
        if tau >= tb {
            return b;
        }
        let guess = a + (b - a) * (tau - ta) / (tb - ta);
        solve_increasing(
            |x| self.local_cum(x)[0] - tau,
            |x| self.integrand(x)[0],
            a,
            b,
            guess,
            1e-13 * (1.0 + tau.abs()),
        )
    }
}

/// Fixed composite rule for the geometric intervals near an asymptotic end.
/// The integrand is smooth on each of them, but `N` there is small enough for
/// rounding noise to defeat an adaptive stopping test.
fn extension_piece(f: impl Fn(f64) -> [f64; 4], a: f64, b: f64) -> [f64; 4] {
    composite(&f, a, b, 4)
}

fn sorted_nodes(mut nodes: Vec<f64>) -> Vec<f64> {
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|b, a| (*b - *a).abs() <= 1e-14 * (1.0 + a.abs()));
    nodes
}

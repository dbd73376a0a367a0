//! Extremal synthesis and validation.
//!
//! Given the angle profile `θ(t)`, the state follows algebraically from the
//! first integrals: for `φ4 ≠ 0`, `x` comes from `φ4 x + φ3 = ±√N(θ)`, `y` from
//! the accumulated control, `z` from the lift `h1` and `v` from the linear
//! time integral `φ1x + φ2y + (2φ3 + φ4x/2)z + 3φ4v = t`. On the
//! isoperimetrix (`φ4 = 0`) the planar projection is a rotated copy of the
//! polar curve. The quadrature of `u1` is carried along as an independent
//! estimate of `x`.

mod profile;
mod table;

pub use profile::{theta_profile, ProfileSegment, ThetaProfile};

use crate::classifier::{classify, ExtremalClass, Subcase, Tag};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::hamiltonian::{control_from_theta_at, lifts_from_state, Covector, HamiltonianLifts, SelectorPolicy};
use crate::region::{ControlRegion, PolarCurve};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use table::Integrand;

/// What happens on one arrival at a finite turning point of a non-unique
/// family: rest for `dwell`, then turn back (`reflect`) or carry on into the
/// next `2π` copy of a full-turn branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    /// 1 for the lower end of the branch, 2 for the upper end.
    pub endpoint: u8,
    #[serde(default)]
    pub dwell: f64,
    #[serde(default = "default_reflect")]
    pub reflect: bool,
    /// Optional check on the `2kπ` shift implied by continuing.
    #[serde(default)]
    pub shift_k: i64,
}

fn default_reflect() -> bool {
    true
}

impl ScheduleEntry {
    pub fn dwell(endpoint: u8, dwell: f64) -> Self {
        ScheduleEntry { endpoint, dwell, reflect: true, shift_k: 0 }
    }

    pub fn pass(endpoint: u8, dwell: f64) -> Self {
        ScheduleEntry { endpoint, dwell, reflect: false, shift_k: 0 }
    }
}

/// Entries consumed in order at successive arrivals; once exhausted, every
/// arrival reflects without resting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FamilySchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl FamilySchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Self {
        FamilySchedule { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    /// End time `T`; negative values trace backward.
    pub horizon: f64,
    pub samples: usize,
    pub selector: SelectorPolicy,
    pub schedule: FamilySchedule,
    pub normalize: bool,
}

impl TraceOptions {
    pub fn new(horizon: f64, samples: usize) -> Self {
        TraceOptions { horizon, samples, selector: SelectorPolicy::Midpoint, schedule: FamilySchedule::default(), normalize: false }
    }

    pub fn with_selector(mut self, selector: SelectorPolicy) -> Self {
        self.selector = selector;
        self
    }

    pub fn with_schedule(mut self, schedule: FamilySchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn normalized(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub g: GroupElement,
    pub theta: f64,
    pub u: [f64; 2],
    pub h: HamiltonianLifts,
    /// `|E(h) − E(φ)|`.
    pub e_residual: f64,
    /// Residual of the linear time integral (zero on abnormal traces).
    pub eq_residual: f64,
    /// `x` from the quadrature of `u1`, when the synthesis carries one.
    pub x_quad: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub phi: Covector,
    pub class: ExtremalClass,
    pub samples: Vec<Sample>,
}

/// Residual of `φ1x + φ2y + (2φ3 + φ4x/2)z + 3φ4v = t`.
pub fn linear_integral_residual(phi: Covector, g: GroupElement, t: f64) -> f64 {
    phi.phi1 * g.x + phi.phi2 * g.y + (2.0 * phi.phi3 + 0.5 * phi.phi4 * g.x) * g.z + 3.0 * phi.phi4 * g.v - t
}

/// Classifies `φ` and synthesizes `n` uniformly spaced samples on `[0, T]`.
pub fn trace(phi: Covector, region: &ControlRegion, opts: &TraceOptions) -> Result<Trajectory> {
    trace_on(phi, &region.polar()?, opts)
}

/// [`trace`] with a precomputed polar curve.
pub fn trace_on(phi: Covector, polar: &PolarCurve, opts: &TraceOptions) -> Result<Trajectory> {
    if opts.samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", opts.samples)));
    }
    if !opts.horizon.is_finite() || opts.horizon == 0.0 {
        return Err(Error::InvalidArgument(format!("horizon must be finite and non-zero, got {}", opts.horizon)));
    }
    let class = classify(phi, polar, opts.normalize)?;
    let phi = class.phi;
    let n = opts.samples;
    let times: Vec<f64> = (0..n)
        .map(|k| if k == n - 1 { opts.horizon } else { opts.horizon * k as f64 / (n - 1) as f64 })
        .collect();
    let e_ref = 0.5 * phi.phi3 * phi.phi3 - phi.phi2 * phi.phi4;
    let finish = |t: f64, g: GroupElement, theta: f64, u: [f64; 2], x_quad: Option<f64>, normal: bool| {
        let mut h = lifts_from_state(phi, g.x, g.y, g.z);
        if !normal {
            h.m = 0.0;
        }
        Sample {
            t,
            g,
            theta,
            u,
            h,
            e_residual: (h.casimir() - e_ref).abs(),
            eq_residual: if normal { linear_integral_residual(phi, g, t) } else { 0.0 },
            x_quad,
        }
    };

    let samples = match class.tag {
        Tag::Abnormal => {
            let speed = polar.region().gauge([0.0, 1.0]);
            let u = [0.0, 1.0 / speed];
            times.iter().map(|&t| finish(t, GroupElement::new(0.0, t * u[1], 0.0, 0.0), FRAC_PI_2, u, None, false)).collect()
        }
        Tag::ConstantTheta => {
            let theta0 = class.theta0.unwrap();
            let breaks = selector_breaks(&opts.selector);
            times
                .iter()
                .map(|&t| {
                    let g = piecewise_constant_state(polar, theta0, &opts.selector, &breaks, t);
                    let u = control_from_theta_at(polar, theta0, &opts.selector, t);
                    finish(t, g, theta0, u, None, true)
                })
                .collect()
        }
        _ => {
            let profile = theta_profile(&class, polar, opts.horizon, &opts.schedule)?;
            let tdir = profile.tdir;
            let iso = class.tag == Tag::Isoperimetrix;
            // turning points, where N vanishes by construction
            let mut zeros: Vec<f64> = [class.theta1, class.theta2].into_iter().flatten().collect();
            if phi.phi3 == 0.0 {
                zeros.extend(class.theta0);
            }
            let f = Integrand { phi, energy: class.energy };
            times
                .iter()
                .map(|&t| {
                    let p = profile.point(t.abs());
                    let theta = p.theta;
                    let h = polar.point(theta);
                    let y_acc = tdir * p.acc[1];
                    let g = if iso {
                        let x = (h[1] - phi.phi2) / phi.phi3;
                        let y = -(h[0] - phi.phi1) / phi.phi3;
                        let z = (t - phi.phi1 * x - phi.phi2 * y) / (2.0 * phi.phi3);
                        let w = tdir * p.acc[2];
                        let v = x * x * y / 12.0 - 0.5 * x * (z + 0.5 * x * y) + 0.5 * w;
                        GroupElement::new(x, y, z, v)
                    } else {
                        let n = match p.near_end {
                            Some((end, d)) => f.subradical_from(polar, end, d),
                            None => f.subradical_near(polar, theta, &zeros),
                        }
                        .max(0.0);
                        let x = (p.spin * n.sqrt() - phi.phi3) / phi.phi4;
                        let a = phi.phi3 + 0.5 * phi.phi4 * x;
                        let z = -(h[0] - phi.phi1 + a * y_acc) / phi.phi4;
                        let v = (t - phi.phi1 * x - phi.phi2 * y_acc - (2.0 * phi.phi3 + 0.5 * phi.phi4 * x) * z) / (3.0 * phi.phi4);
                        GroupElement::new(x, y_acc, z, v)
                    };
                    // the closed forms leave rounding of cos θ0 in z at the start
                    let g = if t == 0.0 { GroupElement::IDENTITY } else { g };
                    let u = p.control.unwrap_or_else(|| control_from_theta_at(polar, theta, &opts.selector, t));
                    finish(t, g, theta, u, p.quadrature.then_some(tdir * p.acc[0]), true)
                })
                .collect()
        }
    };
    Ok(Trajectory { phi, class, samples })
}

fn selector_breaks(selector: &SelectorPolicy) -> Vec<f64> {
    match selector {
        SelectorPolicy::Schedule(pieces) => pieces.iter().map(|p| p.0).collect(),
        _ => Vec::new(),
    }
}

/// State at `t` of the straight-line motion with `θ ≡ θ0`, composing the
/// one-parameter subgroups of the successive selector choices.
fn piecewise_constant_state(polar: &PolarCurve, theta0: f64, selector: &SelectorPolicy, breaks: &[f64], t: f64) -> GroupElement {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b * t > 0.0 && b.abs() < t.abs()).collect();
    cuts.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    cuts.push(t);
    let mut g = GroupElement::IDENTITY;
    let mut prev = 0.0;
    for cut in cuts {
        let mid = 0.5 * (prev + cut);
        let u = control_from_theta_at(polar, theta0, selector, mid);
        g = g * GroupElement::horizontal(u[0], u[1], cut - prev);
        prev = cut;
    }
    g
}

/// `t(θ)` along the first branch of the motion from `θ0`.
pub fn time_of_theta(class: &ExtremalClass, polar: &PolarCurve, theta: f64) -> Result<f64> {
    let theta0 = class.theta0.ok_or_else(|| Error::InvalidArgument("the class has no angle motion".into()))?;
    let phi = class.phi;
    // admissible interval and infinite ends
    let (lo, hi, infinite): (f64, f64, Vec<f64>) = match (class.tag, class.subcase) {
        (Tag::Isoperimetrix | Tag::PendMonotone, _) => (f64::NEG_INFINITY, f64::INFINITY, vec![]),
        (Tag::PendOscillate, _) => {
            let (a, b) = (class.theta1.unwrap(), class.theta2.unwrap());
            (a.min(b), a.max(b), vec![])
        }
        (Tag::PendSeparatrixPhi3, _) => {
            let (a, b) = (class.theta1.unwrap(), class.theta2.unwrap());
            let mut inf = vec![];
            if class.finite1 != Some(true) {
                inf.push(a);
            }
            if class.finite2 != Some(true) {
                inf.push(b);
            }
            (a, b, inf)
        }
        (Tag::PendSeparatrixPhi3Zero, Some(Subcase::S5_5 | Subcase::S5_7 | Subcase::S5_9)) => {
            let (a, b) = (class.theta2.unwrap(), class.theta1.unwrap() + crate::TAU);
            (a, b, if class.finite1 == Some(true) { vec![] } else { vec![b] })
        }
        (Tag::PendSeparatrixPhi3Zero, Some(Subcase::S5_6 | Subcase::S5_8)) => {
            let (a, b) = (class.theta2.unwrap() - crate::TAU, class.theta1.unwrap());
            (a, b, if class.finite2 == Some(true) { vec![] } else { vec![a] })
        }
        _ => (theta0, theta0, vec![]),
    };
    if !(lo..=hi).contains(&theta) {
        return Err(Error::OutsideBranch { theta, lo, hi });
    }
    if infinite.contains(&theta) {
        return Err(Error::DivergentIntegral { theta });
    }
    if theta == theta0 {
        return Ok(0.0);
    }
    let f = Integrand { phi, energy: class.energy };
    let mut knots = vec![theta0.min(theta)];
    let (a, b) = (theta0.min(theta), theta0.max(theta));
    let pieces = ((b - a) / (std::f64::consts::PI / 8.0)).ceil().max(1.0) as usize;
    knots.extend((1..pieces).map(|k| a + (b - a) * k as f64 / pieces as f64));
    knots.extend(polar.corners_between(a, b));
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    // ends of the branch and, for φ3 = 0, the start are zeros of N
    let is_zero = |x: f64| (x == lo || x == hi || (phi.phi3 == 0.0 && x == theta0)) && x.is_finite();
    let total: f64 = knots.windows(2).map(|w| f.between(polar, w[0], w[1], is_zero(w[0]), is_zero(w[1]))[0]).sum();
    let signed = if theta > theta0 { total } else { -total };
    Ok(if phi.phi3 != 0.0 { phi.phi3.signum() * signed } else { total })
}

/// Affine motion while `θ` rests at a turning point: `x ≡ −φ3/φ4` and
/// `y, z, v` grow linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantSegment {
    pub t0: f64,
    pub x: f64,
    pub y0: f64,
    pub z0: f64,
    pub v0: f64,
    pub rate_y: f64,
    pub rate_z: f64,
    pub rate_v: f64,
}

impl ConstantSegment {
    pub fn state_at(&self, t: f64) -> GroupElement {
        let dt = t - self.t0;
        GroupElement::new(self.x, self.y0 + self.rate_y * dt, self.z0 + self.rate_z * dt, self.v0 + self.rate_v * dt)
    }

    /// `v0` fixed by the linear time integral at `(t0, x, y0, z0)`.
    pub fn v0_from_linear_integral(phi: Covector, t0: f64, y0: f64, z0: f64) -> Result<f64> {
        if phi.phi4 == 0.0 {
            return Err(Error::DegenerateDenominator);
        }
        let x = -phi.phi3 / phi.phi4;
        Ok((t0 - phi.phi1 * x - phi.phi2 * y0 - (2.0 * phi.phi3 + 0.5 * phi.phi4 * x) * z0) / (3.0 * phi.phi4))
    }
}

/// Rest of `θ` starting from `(t0, y0, z0, v0)`.
pub fn constant_theta_segment(phi: Covector, t0: f64, y0: f64, z0: f64, v0: f64) -> Result<ConstantSegment> {
    let d = 2.0 * phi.phi2 * phi.phi4 - phi.phi3 * phi.phi3;
    if phi.phi4 == 0.0 || d == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(ConstantSegment {
        t0,
        x: -phi.phi3 / phi.phi4,
        y0,
        z0,
        v0,
        rate_y: 2.0 * phi.phi4 / d,
        rate_z: -phi.phi3 / d,
        rate_v: phi.phi3 * phi.phi3 / (6.0 * phi.phi4 * d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub casimir: f64,
    /// Scaled by `1 + |t|`.
    pub linear_integral: f64,
    pub gauge: f64,
    pub max_condition: f64,
    pub h3: f64,
    pub x_quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { casimir: 1e-6, linear_integral: 1e-6, gauge: 1e-9, max_condition: 1e-8, h3: 1e-12, x_quadrature: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub casimir_drift: f64,
    /// `max |residual| / (1 + |t|)`; absent for abnormal traces.
    pub linear_integral: Option<f64>,
    pub gauge_error: f64,
    pub max_condition_slack: f64,
    pub h3_error: f64,
    pub x_quadrature: Option<f64>,
    pub tolerances: Tolerances,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks every sample against the conservation laws and the maximum
/// condition, using the stored lifts and controls.
pub fn validate(tr: &Trajectory, region: &ControlRegion, tol: &Tolerances) -> ValidationReport {
    let phi = tr.phi;
    let normal = tr.class.is_normal();
    let e_ref = 0.5 * phi.phi3 * phi.phi3 - phi.phi2 * phi.phi4;
    let mut casimir_drift: f64 = 0.0;
    let mut linear: f64 = 0.0;
    let mut gauge_error: f64 = 0.0;
    let mut slack: f64 = 0.0;
    let mut h3_error: f64 = 0.0;
    let mut x_quad: Option<f64> = None;
    let nan_guard = |acc: f64, v: f64| if v.is_nan() { f64::INFINITY } else { acc.max(v) };
    for s in &tr.samples {
        casimir_drift = nan_guard(casimir_drift, (s.h.casimir() - e_ref).abs());
        if normal {
            linear = nan_guard(linear, linear_integral_residual(phi, s.g, s.t).abs() / (1.0 + s.t.abs()));
            let hh = [s.h.h1, s.h.h2];
            let paired = hh[0] * s.u[0] + hh[1] * s.u[1];
            slack = nan_guard(slack, region.support(hh) - paired);
        }
        gauge_error = nan_guard(gauge_error, (region.gauge(s.u) - 1.0).abs());
        h3_error = nan_guard(h3_error, (s.h.h3 - phi.phi3 - phi.phi4 * s.g.x).abs());
        if let Some(xq) = s.x_quad {
            x_quad = Some(nan_guard(x_quad.unwrap_or(0.0), (xq - s.g.x).abs()));
        }
    }
    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, limit: f64| {
        if !(value <= limit) {
            failures.push(format!("{name}: {value:.3e} exceeds {limit:.1e}"));
        }
    };
    check("casimir drift", casimir_drift, tol.casimir);
    if normal {
        check("linear integral residual", linear, tol.linear_integral);
    }
    check("gauge of control", gauge_error, tol.gauge);
    check("maximum condition slack", slack, tol.max_condition);
    check("h3 linearity", h3_error, tol.h3);
    if let Some(xq) = x_quad {
        check("x quadrature mismatch", xq, tol.x_quadrature);
    }
    ValidationReport {
        samples: tr.samples.len(),
        casimir_drift,
        linear_integral: normal.then_some(linear),
        gauge_error,
        max_condition_slack: slack,
        h3_error,
        x_quadrature: x_quad,
        tolerances: *tol,
        passed: failures.is_empty(),
        failures,
    }
}

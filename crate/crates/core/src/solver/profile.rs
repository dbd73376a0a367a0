//! Piecewise representation of the angle `θ(t)`.
//!
//! The profile is parametrized by elapsed time `s = |t|` so that forward and
//! backward traces share one construction. Monotone pieces are inverses of
//! the tabulated time integral on a branch; constant pieces are rests at a
//! turning point (dwells of a non-unique family, straight-line classes, or the
//! numerically unreachable tail of an asymptotic approach).

use super::table::{Integrand, Table};
use super::{FamilySchedule, ScheduleEntry};
use crate::classifier::{ExtremalClass, Subcase, Tag, Uniqueness};
use crate::error::{Error, Result};
use crate::hamiltonian::{control_from_theta, SelectorPolicy};
use crate::region::PolarCurve;
use crate::TAU;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

const MAX_SEGMENTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSegment {
    /// `θ` moves monotonically (`dir = ±1` in elapsed time) from
    /// `theta_from` to `theta_to`; `offset` is the `2πk` shift of the branch
    /// copy in use and `table_from` the tabulated integrals at the start.
    Monotone {
        dir: f64,
        offset: f64,
        theta_from: f64,
        theta_to: f64,
        s0: f64,
        s1: f64,
        acc0: [f64; 3],
        table_from: [f64; 4],
    },
    /// `θ` rests at `theta` while the control stays at `(rate[0], rate[1])`.
    /// `asymptotic` marks the rest that stands in for the endless approach to
    /// a turning point reached only in infinite time.
    Constant {
        theta: f64,
        s0: f64,
        s1: f64,
        acc0: [f64; 3],
        rate: [f64; 3],
        spin: f64,
        asymptotic: bool,
    },
}

impl ProfileSegment {
    pub fn s_range(&self) -> (f64, f64) {
        match *self {
            ProfileSegment::Monotone { s0, s1, .. } | ProfileSegment::Constant { s0, s1, .. } => (s0, s1),
        }
    }
}

/// State of the profile at one elapsed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ProfilePoint {
    pub theta: f64,
    /// `∫ [u1, u2, x_iso² u2] ds` from the start.
    pub acc: [f64; 3],
    /// Sign of `dθ/dt`; zero while resting.
    pub spin: f64,
    /// Control held on a constant piece.
    pub control: Option<[f64; 2]>,
    /// Whether `acc` is an actual quadrature of the control.
    pub quadrature: bool,
    /// Turning point and exact offset `θ − end` close to one.
    pub near_end: Option<(f64, f64)>,
}

/// `θ(t)` on `[0, T]` (or `[T, 0]` for negative horizons).
#[derive(Debug, Clone)]
pub struct ThetaProfile {
    pub segments: Vec<ProfileSegment>,
    /// `+1` for forward traces, `−1` for backward ones.
    pub tdir: f64,
    pub theta0: f64,
    /// Time for a full turn (rotation, isoperimetrix) or a full oscillation.
    pub period: Option<f64>,
    table: Option<Table>,
    polar: PolarCurve,
}

impl ThetaProfile {
    /// Total elapsed time covered.
    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.s_range().1)
    }

    pub fn theta_at(&self, t: f64) -> f64 {
        self.point(t.abs()).theta
    }

    /// Doubled oriented sector area `∫_{θ0}^{θ(t)} r² dθ` swept by `(h1, h2)`.
    pub fn sigma_at(&self, t: f64) -> f64 {
        self.polar.sector_integral_between(self.theta0, self.theta_at(t))
    }

    pub(crate) fn point(&self, s: f64) -> ProfilePoint {
        let idx = self.segments.partition_point(|seg| seg.s_range().1 < s).min(self.segments.len() - 1);
        match self.segments[idx] {
            ProfileSegment::Monotone { dir, offset, s0, acc0, table_from, .. } => {
                let table = self.table.as_ref().expect("monotone segment without a table");
                let (base, c, near) = table.locate(table_from[0] + dir * (s - s0));
                ProfilePoint {
                    theta: base + offset,
                    near_end: near.map(|(end, d)| (end + offset, d)),
                    acc: std::array::from_fn(|k| acc0[k] + dir * (c[k + 1] - table_from[k + 1])),
                    spin: dir * self.tdir,
                    control: None,
                    quadrature: true,
                }
            }
            ProfileSegment::Constant { theta, s0, acc0, rate, spin, asymptotic, .. } => ProfilePoint {
                theta,
                acc: std::array::from_fn(|k| acc0[k] + rate[k] * (s - s0)),
                spin,
                near_end: None,
                control: Some([rate[0], rate[1]]),
                quadrature: !asymptotic,
            },
        }
    }
}

/// `dy/dt` on a rest at a turning point: the control there is
/// `(0, 2φ4 / (2φ2φ4 − φ3²))`.
pub(crate) fn rest_rate(class: &ExtremalClass) -> Result<[f64; 3]> {
    let phi = class.phi;
    let d = 2.0 * phi.phi2 * phi.phi4 - phi.phi3 * phi.phi3;
    if d == 0.0 || phi.phi4 == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok([0.0, 2.0 * phi.phi4 / d, 0.0])
}

struct Plan {
    lo: f64,
    hi: f64,
    finite: [bool; 2],
    start: f64,
    dir: f64,
    /// Endpoint the motion starts from, when it starts at a turning point
    /// that admits a schedule entry.
    start_endpoint: Option<u8>,
}

/// Builds `θ(t)` for `|t| ≤ |horizon|` following `schedule` on non-unique
/// classes.
pub fn theta_profile(class: &ExtremalClass, polar: &PolarCurve, horizon: f64, schedule: &FamilySchedule) -> Result<ThetaProfile> {
    if !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon must be finite, got {horizon}")));
    }
    if !schedule.entries.is_empty() && class.uniqueness == Uniqueness::Unique {
        return Err(Error::ScheduleInvalid("a schedule was given but the extremal is unique".into()));
    }
    for (i, e) in schedule.entries.iter().enumerate() {
        if e.endpoint != 1 && e.endpoint != 2 {
            return Err(Error::ScheduleInvalid(format!("entry {i}: endpoint must be 1 or 2, got {}", e.endpoint)));
        }
        if !e.dwell.is_finite() || e.dwell < 0.0 {
            return Err(Error::ScheduleInvalid(format!("entry {i}: dwell must be finite and non-negative, got {}", e.dwell)));
        }
    }
    let tdir = if horizon < 0.0 { -1.0 } else { 1.0 };
    let span = horizon.abs();
    let phi = class.phi;
    let theta0 = class.theta0.unwrap_or(FRAC_PI_2);
    let f = Integrand { phi, energy: class.energy };
    let mut profile = ThetaProfile { segments: Vec::new(), tdir, theta0, period: None, table: None, polar: polar.clone() };
    let rest = |rate: [f64; 3]| ProfileSegment::Constant { theta: theta0, s0: 0.0, s1: span, acc0: [0.0; 3], rate, spin: 0.0, asymptotic: false };

    let plan = match (class.tag, class.subcase) {
        (Tag::Abnormal | Tag::ConstantTheta, _) => {
            profile.segments.push(rest([0.0; 3]));
            return Ok(profile);
        }
        (Tag::PendStraightLine, _) | (Tag::PendSeparatrixPhi3Zero, Some(Subcase::S5_1 | Subcase::S5_2 | Subcase::S5_3 | Subcase::S5_4)) => {
            profile.segments.push(rest(rest_rate(class)?));
            return Ok(profile);
        }
        (Tag::Isoperimetrix | Tag::PendMonotone, _) => {
            let table = Table::periodic(polar, f, theta0);
            let dir = phi.phi3.signum() * tdir;
            let table_from = table.cum_at(theta0);
            let theta_to = table.theta_at_time(table_from[0] + dir * span);
            profile.period = Some(table.totals()[0]);
            profile.segments.push(ProfileSegment::Monotone {
                dir,
                offset: 0.0,
                theta_from: theta0,
                theta_to,
                s0: 0.0,
                s1: span,
                acc0: [0.0; 3],
                table_from,
            });
            profile.table = Some(table);
            return Ok(profile);
        }
        (Tag::PendOscillate, sub) => {
            let (t1, t2) = (class.theta1.unwrap(), class.theta2.unwrap());
            let dir = if sub == Some(Subcase::S3_2) { (t2 - t1).signum() } else { phi.phi3.signum() * tdir };
            Plan { lo: t1.min(t2), hi: t1.max(t2), finite: [true, true], start: theta0, dir, start_endpoint: None }
        }
        (Tag::PendSeparatrixPhi3, _) => {
            let f1 = class.finite1.unwrap_or(false);
            let f2 = class.finite2.unwrap_or(false);
            Plan {
                lo: class.theta1.unwrap(),
                hi: class.theta2.unwrap(),
                finite: [f1, f2],
                start: theta0,
                dir: phi.phi3.signum() * tdir,
                start_endpoint: None,
            }
        }
        (Tag::PendSeparatrixPhi3Zero, Some(sub)) => {
            let (t1, t2) = (class.theta1.unwrap(), class.theta2.unwrap());
            // outward sides: finite2 probes above θ2, finite1 below θ1
            let finite = [class.finite2.unwrap_or(false), class.finite1.unwrap_or(false)];
            match sub {
                Subcase::S5_5 | Subcase::S5_7 | Subcase::S5_9 => {
                    Plan { lo: t2, hi: t1 + TAU, finite, start: t2, dir: 1.0, start_endpoint: Some(1) }
                }
                _ => Plan { lo: t2 - TAU, hi: t1, finite, start: t1, dir: -1.0, start_endpoint: Some(2) },
            }
        }
        (tag, sub) => return Err(Error::InvalidArgument(format!("no angle profile for {tag:?} {sub:?}"))),
    };

    for (i, e) in schedule.entries.iter().enumerate() {
        if !plan.finite[e.endpoint as usize - 1] {
            return Err(Error::ScheduleInvalid(format!(
                "entry {i}: endpoint {} is reached only asymptotically; no dwell or reflection is possible there",
                e.endpoint
            )));
        }
    }
    let table = Table::branch(polar, f, plan.lo, plan.hi, plan.finite, plan.start, span);
    let full_turn = plan.finite == [true, true] && ((plan.hi - plan.lo) - TAU).abs() <= 1e-9;
    if class.tag == Tag::PendOscillate {
        profile.period = Some(2.0 * (table.cum_at(table.hi())[0] - table.cum_at(table.lo())[0]));
    }
    let rest_rate = if class.uniqueness == Uniqueness::Family { rest_rate(class)? } else { [0.0; 3] };
    let mut entries = schedule.entries.iter().copied();
    let mut builder = Builder { table: &table, span, segments: Vec::new(), s: 0.0, acc: [0.0; 3] };
    let mut pos = plan.start;
    let mut offset = 0.0;
    let mut dir = plan.dir;

    let mut arrive = |builder: &mut Builder, endpoint: u8, dir_in: f64, pos: f64| -> Result<(f64, f64)> {
        let entry = entries.next().unwrap_or(ScheduleEntry { endpoint, dwell: 0.0, reflect: true, shift_k: 0 });
        if entry.endpoint != endpoint {
            return Err(Error::ScheduleInvalid(format!(
                "entry expects endpoint {} but the motion arrives at endpoint {endpoint}",
                entry.endpoint
            )));
        }
        if entry.dwell > 0.0 {
            builder.rest(pos, entry.dwell, rest_rate, 0.0, false);
        }
        if entry.reflect {
            if entry.shift_k != 0 {
                return Err(Error::ScheduleInvalid("a 2k*pi shift requires reflect = false".into()));
            }
            Ok((-dir_in, 0.0))
        } else {
            if !full_turn {
                return Err(Error::ScheduleInvalid(
                    "continuing past a turning point needs a full-turn branch with both ends finite".into(),
                ));
            }
            let k = dir_in as i64;
            if entry.shift_k != 0 && entry.shift_k != k {
                return Err(Error::ScheduleInvalid(format!(
                    "shift_k = {} does not match the continuation shift {k}",
                    entry.shift_k
                )));
            }
            Ok((dir_in, TAU * dir_in))
        }
    };

    if let Some(endpoint) = plan.start_endpoint {
        let (d, shift) = arrive(&mut builder, endpoint, -plan.dir, pos)?;
        dir = d;
        offset += shift;
    }
    while builder.s < span {
        if builder.segments.len() > MAX_SEGMENTS {
            return Err(Error::ScheduleInvalid("profile does not advance in time".into()));
        }
        let base_from = pos - offset;
        let end_base = if dir > 0.0 { table.hi() } else { table.lo() };
        let reached = builder.monotone(base_from, end_base, dir, offset);
        if !reached {
            break;
        }
        pos = end_base + offset;
        let endpoint = if dir > 0.0 { 2u8 } else { 1u8 };
        if !plan.finite[endpoint as usize - 1] {
            // the turning point is approached but never reached: rest at the
            // last resolvable angle
            let u = control_from_theta(polar, pos, &SelectorPolicy::Midpoint);
            builder.rest(pos, f64::INFINITY, [u[0], u[1], 0.0], dir * tdir, true);
            break;
        }
        if builder.s >= span {
            break;
        }
        let (d, shift) = arrive(&mut builder, endpoint, dir, pos)?;
        dir = d;
        offset += shift;
    }
    if builder.segments.is_empty() {
        builder.segments.push(ProfileSegment::Constant { theta: pos, s0: 0.0, s1: span, acc0: [0.0; 3], rate: [0.0; 3], spin: 0.0, asymptotic: false });
    }
    profile.segments = builder.segments;
    profile.table = Some(table);
    Ok(profile)
}

struct Builder<'a> {
    table: &'a Table,
    span: f64,
    segments: Vec<ProfileSegment>,
    s: f64,
    acc: [f64; 3],
}

impl Builder<'_> {
    fn rest(&mut self, theta: f64, duration: f64, rate: [f64; 3], spin: f64, asymptotic: bool) {
        let s1 = (self.s + duration).min(self.span);
        if s1 <= self.s {
            return;
        }
        self.segments.push(ProfileSegment::Constant { theta, s0: self.s, s1, acc0: self.acc, rate, spin, asymptotic });
        for k in 0..3 {
            self.acc[k] += rate[k] * (s1 - self.s);
        }
        self.s = s1;
    }

    /// Moves from `from` toward `to` (branch coordinates). Returns whether
    /// `to` was reached before the horizon.
    fn monotone(&mut self, from: f64, to: f64, dir: f64, offset: f64) -> bool {
        let c_from = self.table.cum_at(from);
        let c_to = self.table.cum_at(to);
        let avail = dir * (c_to[0] - c_from[0]);
        let remaining = self.span - self.s;
        let (s1, theta_to, c_end, reached) = if avail >= remaining {
            let base = self.table.theta_at_time(c_from[0] + dir * remaining);
            (self.span, base + offset, self.table.cum_at(base), false)
        } else {
            (self.s + avail.max(0.0), to + offset, c_to, true)
        };
        if s1 > self.s || reached {
            self.segments.push(ProfileSegment::Monotone {
                dir,
                offset,
                theta_from: from + offset,
                theta_to,
                s0: self.s,
                s1,
                acc0: self.acc,
                table_from: c_from,
            });
        }
        for k in 0..3 {
            self.acc[k] += dir * (c_end[k + 1] - c_from[k + 1]);
        }
        self.s = s1;
        reached
    }
}

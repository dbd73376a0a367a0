//! Case analysis of a covector against a control region.
//!
//! Normal extremals with `φ4 ≠ 0` are pendulum-like: the angle `θ` of
//! `(h1, h2)` obeys `θ̇² r⁴ = N(θ)` with `N = 2(E + φ4 h2(θ))`. The energy `E`
//! compared with `E0 = max(−φ4 h2)` and `Em1 = min(−φ4 h2)` decides whether `θ`
//! rotates, oscillates, rests, or approaches a separatrix. On a separatrix the
//! order of vanishing of `N` at the turning points decides whether they are
//! reached in finite time, and finite arrival opens up whole families of
//! extremals.

use crate::error::{Error, Result};
use crate::hamiltonian::{casimirs, CasimirData, Covector};
use crate::region::{Face, PolarCurve};
use crate::roots::bisect;
use crate::TAU;
use serde::{Serialize, Serializer};

/// Relative tolerance for landing exactly on `E0` or `Em1`.
pub const ENERGY_TOL: f64 = 1e-9;
/// Relative tolerance for `(φ1, φ2)` lying on the polar curve.
pub const POLAR_TOL: f64 = 1e-9;
/// Exponent threshold separating finite from infinite arrival time.
pub const EXPONENT_THRESHOLD: f64 = 1.5;
const AMBIGUOUS_BAND: (f64, f64) = (1.3, 1.7);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Tag {
    Abnormal,
    ConstantTheta,
    Isoperimetrix,
    PendMonotone,
    PendStraightLine,
    PendOscillate,
    PendSeparatrixPhi3,
    PendSeparatrixPhi3Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subcase {
    S3_1,
    S3_2,
    S4_1,
    S4_2,
    S4_3_1,
    S4_3_2,
    S5_1,
    S5_2,
    S5_3,
    S5_4,
    S5_5,
    S5_6,
    S5_7,
    S5_8,
    S5_9,
}

impl Subcase {
    pub fn label(self) -> &'static str {
        match self {
            Subcase::S3_1 => "3.1",
            Subcase::S3_2 => "3.2",
            Subcase::S4_1 => "4.1",
            Subcase::S4_2 => "4.2",
            Subcase::S4_3_1 => "4.3.1",
            Subcase::S4_3_2 => "4.3.2",
            Subcase::S5_1 => "5.1",
            Subcase::S5_2 => "5.2",
            Subcase::S5_3 => "5.3",
            Subcase::S5_4 => "5.4",
            Subcase::S5_5 => "5.5",
            Subcase::S5_6 => "5.6",
            Subcase::S5_7 => "5.7",
            Subcase::S5_8 => "5.8",
            Subcase::S5_9 => "5.9",
        }
    }
}

impl Serialize for Subcase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    Family,
}

/// Side from which a turning point is approached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Finite,
    Infinite,
}

/// Result of the local-exponent fit of `N` near a turning point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceProbe {
    pub convergence: Convergence,
    /// Fitted vanishing order; `None` when `N ≤ 0` on the probed side.
    pub exponent: Option<f64>,
    pub ambiguous: bool,
}

impl ConvergenceProbe {
    pub fn is_finite(&self) -> bool {
        self.convergence == Convergence::Finite
    }
}

/// Zeros of `N` bounding the motion of `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningPoints {
    pub theta1: f64,
    pub theta2: f64,
    /// Whether `θ1`, `θ2` are reached in finite time from the side `θ`
    /// moves on.
    pub finite1: Option<bool>,
    pub finite2: Option<bool>,
}

/// Classification of a covector together with the data later stages need.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalClass {
    pub tag: Tag,
    #[serde(rename = "subtag", skip_serializing_if = "Option::is_none")]
    pub subcase: Option<Subcase>,
    pub uniqueness: Uniqueness,
    /// The covector actually used (rescaled when normalization was requested).
    pub phi: Covector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta2: Option<f64>,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "Em1")]
    pub em1: f64,
    /// Energy used for `N`: `E` snapped onto `E0`/`Em1` on a separatrix.
    #[serde(skip)]
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite1: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite2: Option<bool>,
    pub warnings: Vec<String>,
}

impl ExtremalClass {
    fn bare(tag: Tag, phi: Covector, cas: CasimirData) -> Self {
        ExtremalClass {
            tag,
            subcase: None,
            uniqueness: Uniqueness::Unique,
            phi,
            theta0: None,
            theta1: None,
            theta2: None,
            e: cas.e,
            e0: cas.e0,
            em1: cas.em1,
            energy: cas.e,
            period: None,
            finite1: None,
            finite2: None,
            warnings: Vec::new(),
        }
    }

    pub fn casimir(&self) -> CasimirData {
        CasimirData { e: self.e, e0: self.e0, em1: self.em1 }
    }

    /// `N(θ) = 2(E + φ4 h2(θ))` with the snapped energy.
    pub fn subradical(&self, polar: &PolarCurve, theta: f64) -> f64 {
        2.0 * (self.energy + self.phi.phi4 * polar.h2(theta))
    }

    pub fn is_normal(&self) -> bool {
        self.tag != Tag::Abnormal
    }

    pub fn turning_points(&self) -> Option<TurningPoints> {
        Some(TurningPoints {
            theta1: self.theta1?,
            theta2: self.theta2?,
            finite1: self.finite1,
            finite2: self.finite2,
        })
    }
}

/// Classifies `φ` for the region whose polar curve is `polar`. With
/// `normalize`, `φ` is rescaled so that `(φ1, φ2)` lies on the polar curve.
pub fn classify(phi: Covector, polar: &PolarCurve, normalize: bool) -> Result<ExtremalClass> {
    if phi.is_zero() {
        return Err(Error::ZeroCovector);
    }
    if phi.phi1 == 0.0 && phi.phi2 == 0.0 {
        if phi.phi3 != 0.0 {
            return Err(Error::AbnormalWithNonzeroH { phi3: phi.phi3, phi4: phi.phi4 });
        }
        let cas = casimirs(phi, polar);
        return Ok(ExtremalClass::bare(Tag::Abnormal, phi, cas));
    }
    let support = polar.region().support(phi.horizontal());
    let phi = if (support - 1.0).abs() <= POLAR_TOL {
        phi
    } else if normalize {
        phi.scaled(1.0 / support)
    } else {
        return Err(Error::CovectorNotOnPolar { support });
    };
    let theta0 = phi.phi2.atan2(phi.phi1);
    let cas = casimirs(phi, polar);

    if phi.phi3 == 0.0 && phi.phi4 == 0.0 {
        let mut c = ExtremalClass::bare(Tag::ConstantTheta, phi, cas);
        c.theta0 = Some(theta0);
        if polar.eval(theta0).is_corner() {
            c.warnings.push("theta0 is a corner of the polar curve; the control is chosen by the selector".into());
        }
        return Ok(c);
    }
    if phi.phi4 == 0.0 {
        let mut c = ExtremalClass::bare(Tag::Isoperimetrix, phi, cas);
        c.theta0 = Some(theta0);
        c.period = Some(2.0 * polar.area() / phi.phi3.abs());
        return Ok(c);
    }

    let level = energy_level(phi, cas);
    let mut c = ExtremalClass::bare(Tag::PendMonotone, phi, cas);
    c.theta0 = Some(theta0);
    c.energy = match level {
        Level::AtE0 => cas.e0,
        Level::AtEm1 => cas.em1,
        _ => cas.e,
    };
    match (level, phi.phi3 != 0.0) {
        (Level::AboveE0, true) => {}
        (Level::AtEm1, false) => {
            c.tag = Tag::PendStraightLine;
            c.theta1 = Some(theta0);
            c.theta2 = Some(theta0);
        }
        (Level::Between, nonzero) => {
            c.tag = Tag::PendOscillate;
            c.subcase = Some(if nonzero { Subcase::S3_1 } else { Subcase::S3_2 });
            let tp = turning_points_at(phi, polar, theta0, c.energy, level)?;
            c.theta1 = Some(tp.theta1);
            c.theta2 = Some(tp.theta2);
            c.finite1 = tp.finite1;
            c.finite2 = tp.finite2;
        }
        (Level::AtE0, true) => {
            c.tag = Tag::PendSeparatrixPhi3;
            let tp = turning_points_at(phi, polar, theta0, c.energy, level)?;
            let (f1, f2) = (tp.finite1.unwrap_or(false), tp.finite2.unwrap_or(false));
            c.subcase = Some(match (f1, f2) {
                (false, false) => Subcase::S4_1,
                (true, true) if (tp.theta2 - tp.theta1 - TAU).abs() <= 1e-9 => Subcase::S4_3_1,
                (true, true) => Subcase::S4_3_2,
                _ => Subcase::S4_2,
            });
            c.uniqueness = if f1 || f2 { Uniqueness::Family } else { Uniqueness::Unique };
            c.theta1 = Some(tp.theta1);
            c.theta2 = Some(tp.theta2);
            c.finite1 = tp.finite1;
            c.finite2 = tp.finite2;
        }
        (Level::AtE0, false) => {
            c.tag = Tag::PendSeparatrixPhi3Zero;
            let tp = turning_points_at(phi, polar, theta0, c.energy, level)?;
            // θ0 is exactly at an end of the face when it lies within tolerance
            let at_lo = tp.theta1 == theta0;
            let at_hi = tp.theta2 == theta0;
            let below = tp.finite1.unwrap_or(false);
            let above = tp.finite2.unwrap_or(false);
            let sub = if at_lo && at_hi {
                match (below, above) {
                    (false, false) => Subcase::S5_1,
                    (false, true) => Subcase::S5_5,
                    (true, false) => Subcase::S5_6,
                    (true, true) => Subcase::S5_9,
                }
            } else if at_lo {
                if below {
                    Subcase::S5_8
                } else {
                    Subcase::S5_3
                }
            } else if at_hi {
                if above {
                    Subcase::S5_7
                } else {
                    Subcase::S5_4
                }
            } else {
                Subcase::S5_2
            };
            c.subcase = Some(sub);
            c.uniqueness = match sub {
                Subcase::S5_5 | Subcase::S5_6 | Subcase::S5_7 | Subcase::S5_8 | Subcase::S5_9 => Uniqueness::Family,
                _ => Uniqueness::Unique,
            };
            c.theta1 = Some(tp.theta1);
            c.theta2 = Some(tp.theta2);
            c.finite1 = tp.finite1;
            c.finite2 = tp.finite2;
        }
        (lvl, nonzero) => {
            return Err(Error::NoTurningPoint(format!(
                "energy level {lvl:?} is inconsistent with phi3 {} 0",
                if nonzero { "!=" } else { "==" }
            )))
        }
    }
    if let Some(tp) = c.turning_points() {
        for (theta, side) in probe_sides(&c, &tp) {
            if integral_convergence(phi, polar, theta, side).ambiguous {
                c.warnings.push(format!("ambiguous vanishing order of the subradical at theta = {theta:.12}"));
            }
        }
    }
    Ok(c)
}

fn probe_sides(c: &ExtremalClass, tp: &TurningPoints) -> Vec<(f64, Side)> {
    match c.tag {
        Tag::PendSeparatrixPhi3 => vec![(tp.theta1, Side::Above), (tp.theta2, Side::Below)],
        Tag::PendSeparatrixPhi3Zero => vec![(tp.theta1, Side::Below), (tp.theta2, Side::Above)],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    AboveE0,
    AtE0,
    Between,
    AtEm1,
    BelowEm1,
}

fn energy_level(phi: Covector, cas: CasimirData) -> Level {
    let near = |e: f64, level: f64| (e - level).abs() <= ENERGY_TOL * (1.0 + level.abs());
    if near(cas.e, cas.e0) {
        Level::AtE0
    } else if cas.e > cas.e0 {
        Level::AboveE0
    } else if phi.phi3 == 0.0 && near(cas.e, cas.em1) {
        Level::AtEm1
    } else if cas.e > cas.em1 {
        Level::Between
    } else {
        Level::BelowEm1
    }
}

/// Turning points of `θ` for a covector in the oscillating or separatrix
/// regime, bracketing `θ0`.
pub fn turning_points(phi: Covector, polar: &PolarCurve, theta0: f64) -> Result<TurningPoints> {
    if phi.phi4 == 0.0 {
        return Err(Error::NoTurningPoint("phi4 = 0 gives no pendulum motion".into()));
    }
    let cas = casimirs(phi, polar);
    let level = energy_level(phi, cas);
    let energy = match level {
        Level::AtE0 => cas.e0,
        Level::AtEm1 => cas.em1,
        _ => cas.e,
    };
    turning_points_at(phi, polar, theta0, energy, level)
}

/// Faces of `U*` where `φ4 h2` is maximal and minimal.
fn g_faces(phi: Covector, polar: &PolarCurve) -> (Face, Face) {
    if phi.phi4 > 0.0 {
        (polar.top_face(), polar.bottom_face())
    } else {
        (polar.bottom_face(), polar.top_face())
    }
}

/// Ends `(θa, θb)` of the arc `{N > 0}` for a level strictly between the
/// extremes: `N` turns positive at `θa` and negative again at `θb > θa`.
fn positive_arc(phi: Covector, polar: &PolarCurve, energy: f64) -> Result<(f64, f64)> {
    let (gmax, gmin) = g_faces(phi, polar);
    let n = |t: f64| 2.0 * (energy + phi.phi4 * polar.h2(t));
    let entering = lift_above(gmax.lo, gmin.hi);
    let leaving = lift_above(gmin.lo, gmax.hi);
    let a = bisect(n, gmin.hi, entering).ok_or_else(|| Error::NoTurningPoint("no crossing on the rising arc".into()))?;
    let b = bisect(n, gmax.hi, leaving).ok_or_else(|| Error::NoTurningPoint("no crossing on the falling arc".into()))?;
    Ok((a, lift_above(b, a)))
}

/// Smallest `t + 2πk ≥ floor`.
fn lift_above(t: f64, floor: f64) -> f64 {
    t + ((floor - t) / TAU).ceil() * TAU
}

/// Largest `t + 2πk ≤ ceil`.
fn lift_below(t: f64, ceil: f64) -> f64 {
    t - ((t - ceil) / TAU).ceil() * TAU
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn turning_points_at(phi: Covector, polar: &PolarCurve, theta0: f64, energy: f64, level: Level) -> Result<TurningPoints> {
    match (level, phi.phi3 != 0.0) {
        (Level::Between, true) => {
            let (a, b) = positive_arc(phi, polar, energy)?;
            let a = lift_below(a, theta0);
            let b = lift_above(b, a);
            if !(a < theta0 && theta0 < b) {
                return Err(Error::NoTurningPoint(format!("theta0 = {theta0} is not inside the allowed arc [{a}, {b}]")));
            }
            let (t1, t2) = if phi.phi3 > 0.0 { (a, b) } else { (b, a) };
            Ok(TurningPoints { theta1: t1, theta2: t2, finite1: Some(true), finite2: Some(true) })
        }
        (Level::Between, false) => {
            let (a, b) = positive_arc(phi, polar, energy)?;
            let theta2 = if angle_distance(a, theta0) <= angle_distance(b, theta0) {
                // θ0 is where N turns positive: motion goes up
                lift_above(b, theta0)
            } else {
                lift_below(a, theta0)
            };
            Ok(TurningPoints { theta1: theta0, theta2, finite1: Some(true), finite2: Some(true) })
        }
        (Level::AtE0, true) => {
            let (_, gmin) = g_faces(phi, polar);
            let theta1 = lift_below(gmin.hi, theta0);
            let theta2 = lift_above(gmin.lo, theta0);
            let f1 = integral_convergence(phi, polar, theta1, Side::Above).is_finite();
            let f2 = integral_convergence(phi, polar, theta2, Side::Below).is_finite();
            Ok(TurningPoints { theta1, theta2, finite1: Some(f1), finite2: Some(f2) })
        }
        (Level::AtE0, false) => {
            let (_, gmin) = g_faces(phi, polar);
            let (theta1, theta2) = if gmin.is_point() {
                (theta0, theta0)
            } else {
                let snap = 1e-9;
                let lo = lift_below(gmin.lo, theta0 + snap);
                let hi = lo + (gmin.hi - gmin.lo);
                if theta0 > hi + 1e-6 {
                    return Err(Error::NoTurningPoint(format!("theta0 = {theta0} is not on the flat face [{lo}, {hi}]")));
                }
                let t1 = if (theta0 - lo).abs() <= snap { theta0 } else { lo };
                let t2 = if (theta0 - hi).abs() <= snap || theta0 > hi { theta0 } else { hi };
                (t1.min(theta0), t2)
            };
            let f1 = integral_convergence(phi, polar, theta1, Side::Below).is_finite();
            let f2 = integral_convergence(phi, polar, theta2, Side::Above).is_finite();
            Ok(TurningPoints { theta1, theta2, finite1: Some(f1), finite2: Some(f2) })
        }
        (Level::AtEm1, false) => Ok(TurningPoints { theta1: theta0, theta2: theta0, finite1: None, finite2: None }),
        _ => Err(Error::NoTurningPoint("covector is not in an oscillating or separatrix regime".into())),
    }
}

/// Decides whether `θ` reaches the zero `θi` of `N` in finite time when
/// approaching from `side`, from the vanishing order `p` of `N` there
/// (integrand `~ |θ − θi|^{−p/2}`).
pub fn integral_convergence(phi: Covector, polar: &PolarCurve, theta_i: f64, side: Side) -> ConvergenceProbe {
    let n = |t: f64| phi.phi3 * phi.phi3 + 2.0 * phi.phi4 * (polar.h2(t) - phi.phi2);
    let base = n(theta_i);
    let dir = match side {
        Side::Above => 1.0,
        Side::Below => -1.0,
    };
    let mut xs = Vec::with_capacity(7);
    let mut ys = Vec::with_capacity(7);
    for k in 0..7 {
        let delta = 10f64.powf(-3.0 - 0.5 * k as f64);
        let value = n(theta_i + dir * delta) - base;
        if value <= 0.0 {
            return ConvergenceProbe { convergence: Convergence::Infinite, exponent: None, ambiguous: false };
        }
        xs.push(delta.ln());
        ys.push(value.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let p = sxy / sxx;
    ConvergenceProbe {
        convergence: if p < EXPONENT_THRESHOLD { Convergence::Finite } else { Convergence::Infinite },
        exponent: Some(p),
        ambiguous: p > AMBIGUOUS_BAND.0 && p < AMBIGUOUS_BAND.1,
    }
}

//! Adjoint variables, Hamiltonian lifts, Casimirs and the pendulum equation.
//!
//! Along an extremal the lifts `h_i = ⟨ψ, X_i⟩` of the left-invariant frame
//! satisfy `h3 = φ3 + φ4 x`, `h4 = φ4`, and `(h1, h2)` runs along the polar
//! curve `r(θ)(cosθ, sinθ)`. Eliminating time gives the pendulum-type equation
//! `θ̇² r⁴ = φ3² + 2φ4(h2(θ) − φ2)`, whose right-hand side (the "subradical")
//! equals `2(E + φ4 h2(θ))` with the Casimir `E = φ3²/2 − φ2 φ4`.

use crate::group::{field_at, Basis, GroupElement};
use crate::region::PolarCurve;
use serde::{Deserialize, Serialize};

/// Initial adjoint data `ψ(0) = (φ1, φ2, φ3, φ4)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Covector {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub phi4: f64,
}

impl Covector {
    pub const fn new(phi1: f64, phi2: f64, phi3: f64, phi4: f64) -> Self {
        Covector { phi1, phi2, phi3, phi4 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Covector::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.phi1, self.phi2, self.phi3, self.phi4]
    }

    pub fn is_zero(self) -> bool {
        self.to_array().iter().all(|&c| c == 0.0)
    }

    pub fn scaled(self, k: f64) -> Self {
        Covector::from_array(self.to_array().map(|c| k * c))
    }

    /// `(φ1, φ2)`, the starting point of `(h1, h2)`.
    pub fn horizontal(self) -> [f64; 2] {
        [self.phi1, self.phi2]
    }
}

/// Lifts `h1..h4` and the maximized Hamiltonian `M`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HamiltonianLifts {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    pub m: f64,
}

impl HamiltonianLifts {
    pub fn to_array(self) -> [f64; 4] {
        [self.h1, self.h2, self.h3, self.h4]
    }

    /// `h3²/2 − h2 h4`.
    pub fn casimir(self) -> f64 {
        0.5 * self.h3 * self.h3 - self.h2 * self.h4
    }
}

/// Coordinate components of `ψ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdjointState {
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub psi4: f64,
}

impl AdjointState {
    pub fn to_array(self) -> [f64; 4] {
        [self.psi1, self.psi2, self.psi3, self.psi4]
    }

    /// Pairs `ψ` with the four frame fields at `g`.
    pub fn lifts_at(self, g: GroupElement) -> [f64; 4] {
        let psi = self.to_array();
        Basis::ALL.map(|b| {
            let f = field_at(b, g);
            (0..4).map(|i| psi[i] * f[i]).sum()
        })
    }
}

/// The Casimir `E` and its extreme admissible values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CasimirData {
    pub e: f64,
    /// `max_{h∈U*} (−φ4 h2)`.
    pub e0: f64,
    /// `min_{h∈U*} (−φ4 h2)`.
    pub em1: f64,
}

pub fn lifts_from_state(phi: Covector, x: f64, y: f64, z: f64) -> HamiltonianLifts {
    let Covector { phi1, phi2, phi3, phi4 } = phi;
    let a = phi3 + 0.5 * phi4 * x;
    HamiltonianLifts {
        h1: phi1 - a * y - phi4 * z,
        h2: phi2 + a * x,
        h3: phi3 + phi4 * x,
        h4: phi4,
        m: if phi1 == 0.0 && phi2 == 0.0 { 0.0 } else { 1.0 },
    }
}

pub fn adjoint_from_state(phi: Covector, x: f64, y: f64, z: f64) -> AdjointState {
    let Covector { phi1, phi2, phi3, phi4 } = phi;
    AdjointState {
        psi1: phi1 - 0.5 * phi3 * y - phi4 * (x * y + 3.0 * z) / 6.0,
        psi2: phi2 + 0.5 * phi3 * x + phi4 * x * x / 6.0,
        psi3: phi3 + 0.5 * phi4 * x,
        psi4: phi4,
    }
}

pub fn casimirs(phi: Covector, polar: &PolarCurve) -> CasimirData {
    let e = 0.5 * phi.phi3 * phi.phi3 - phi.phi2 * phi.phi4;
    let (e0, em1) = if phi.phi4 > 0.0 {
        (-phi.phi4 * polar.h2_min(), -phi.phi4 * polar.h2_max())
    } else if phi.phi4 < 0.0 {
        (-phi.phi4 * polar.h2_max(), -phi.phi4 * polar.h2_min())
    } else {
        (0.0, 0.0)
    };
    CasimirData { e, e0, em1 }
}

/// `φ3² + 2φ4(h2(θ) − φ2)`, the numerator of `θ̇²`.
pub fn subradical(polar: &PolarCurve, phi: Covector, theta: f64) -> f64 {
    phi.phi3 * phi.phi3 + 2.0 * phi.phi4 * (polar.h2(theta) - phi.phi2)
}

/// `θ̇² = (φ3² + 2φ4(r(θ) sinθ − φ2)) / r⁴(θ)`; negative values mark
/// forbidden angles.
pub fn pendulum_rhs_sq(polar: &PolarCurve, phi: Covector, theta: f64) -> f64 {
    let r = polar.r(theta);
    (phi.phi3 * phi.phi3 + 2.0 * phi.phi4 * (r * theta.sin() - phi.phi2)) / r.powi(4)
}

/// How a control is chosen on the flat edge of `∂U` exposed at a corner of
/// the polar curve. Off corners every policy gives the same control.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorPolicy {
    /// Midpoint of the admissible edge.
    #[default]
    Midpoint,
    /// Edge endpoint of smaller polar angle.
    Min,
    /// Edge endpoint of larger polar angle.
    Max,
    /// Affine position along the edge, 0 = `Min`, 1 = `Max`.
    Fraction(f64),
    /// Piecewise-constant fractions: `(t_start, fraction)` pairs sorted by
    /// time; the midpoint applies before the first start.
    Schedule(Vec<(f64, f64)>),
}

impl SelectorPolicy {
    /// Position along the admissible edge in effect at time `t`.
    pub fn fraction_at(&self, t: f64) -> f64 {
        match self {
            SelectorPolicy::Midpoint => 0.5,
            SelectorPolicy::Min => 0.0,
            SelectorPolicy::Max => 1.0,
            SelectorPolicy::Fraction(f) => f.clamp(0.0, 1.0),
            SelectorPolicy::Schedule(pieces) => pieces
                .iter()
                .take_while(|(start, _)| *start <= t)
                .last()
                .map_or(0.5, |(_, f)| f.clamp(0.0, 1.0)),
        }
    }
}

/// Control `u` with `h(θ)·u = 1` and `h'(θ)·u = 0`, taking the selector's
/// choice at corners. Uses the selector's value at `t = 0`.
pub fn control_from_theta(polar: &PolarCurve, theta: f64, selector: &SelectorPolicy) -> [f64; 2] {
    control_from_theta_at(polar, theta, selector, 0.0)
}

/// Like [`control_from_theta`] with a time-dependent selector evaluated at `t`.
pub fn control_from_theta_at(polar: &PolarCurve, theta: f64, selector: &SelectorPolicy, t: f64) -> [f64; 2] {
    let p = polar.eval(theta);
    let dr = if p.is_corner() { p.dr_blend(selector.fraction_at(t)) } else { 0.5 * (p.dr_minus + p.dr_plus) };
    control_from_radius(p.r, dr, theta)
}

pub(crate) fn control_from_radius(r: f64, dr: f64, theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    let r2 = r * r;
    [(dr * s + r * c) / r2, (r * s - dr * c) / r2]
}

//! The Engel group in exponential coordinates of the first kind.
//!
//! The Lie algebra has basis `X, Y, Z, V` with the only non-zero brackets
//! `[X, Y] = Z` and `[X, Z] = V`. Because the algebra is 3-step nilpotent the
//! Campbell–Hausdorff series terminates after the triple brackets, which gives
//! the closed-form product implemented by [`GroupElement::mul`].

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A point `exp(xX + yY + zZ + vV)` of the group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupElement {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub v: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { x: 0.0, y: 0.0, z: 0.0, v: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64, v: f64) -> Self {
        GroupElement { x, y, z, v }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.v]
    }

    /// Group product `self · other`.
    pub fn mul(self, other: GroupElement) -> GroupElement {
        let (x1, y1, z1, v1) = (self.x, self.y, self.z, self.v);
        let (x2, y2, z2, v2) = (other.x, other.y, other.z, other.v);
        let cross = x1 * y2 - x2 * y1;
        GroupElement {
            x: x1 + x2,
            y: y1 + y2,
            z: z1 + z2 + 0.5 * cross,
            v: v1 + v2 + 0.5 * (x1 * z2 - x2 * z1) + cross * (x1 - x2) / 12.0,
        }
    }

    /// Inverse; exponential coordinates of a nilpotent group negate.
    pub fn inverse(self) -> GroupElement {
        GroupElement::new(-self.x, -self.y, -self.z, -self.v)
    }

    /// `exp(A)` for an algebra element.
    pub fn exp(a: AlgebraVector) -> GroupElement {
        GroupElement::new(a.cx, a.cy, a.cz, a.cv)
    }

    /// `exp(t (u1 X + u2 Y))`, the one-parameter subgroup generated by a
    /// horizontal control.
    pub fn horizontal(u1: f64, u2: f64, t: f64) -> GroupElement {
        GroupElement::new(u1 * t, u2 * t, 0.0, 0.0)
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(self, other: GroupElement) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement::mul(self, rhs)
    }
}

/// Element of the Engel algebra in the basis `X, Y, Z, V`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgebraVector {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub cv: f64,
}

impl AlgebraVector {
    pub const ZERO: AlgebraVector = AlgebraVector::new(0.0, 0.0, 0.0, 0.0);
    pub const X: AlgebraVector = AlgebraVector::new(1.0, 0.0, 0.0, 0.0);
    pub const Y: AlgebraVector = AlgebraVector::new(0.0, 1.0, 0.0, 0.0);
    pub const Z: AlgebraVector = AlgebraVector::new(0.0, 0.0, 1.0, 0.0);
    pub const V: AlgebraVector = AlgebraVector::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(cx: f64, cy: f64, cz: f64, cv: f64) -> Self {
        AlgebraVector { cx, cy, cz, cv }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.cx, self.cy, self.cz, self.cv]
    }

    /// Lie bracket, the bilinear extension of `[X,Y] = Z`, `[X,Z] = V`.
    pub fn bracket(self, other: AlgebraVector) -> AlgebraVector {
        AlgebraVector {
            cx: 0.0,
            cy: 0.0,
            cz: self.cx * other.cy - other.cx * self.cy,
            cv: self.cx * other.cz - other.cx * self.cz,
        }
    }

    pub fn scale(self, k: f64) -> AlgebraVector {
        AlgebraVector::new(k * self.cx, k * self.cy, k * self.cz, k * self.cv)
    }
}

impl Add for AlgebraVector {
    type Output = AlgebraVector;
    fn add(self, o: AlgebraVector) -> AlgebraVector {
        AlgebraVector::new(self.cx + o.cx, self.cy + o.cy, self.cz + o.cz, self.cv + o.cv)
    }
}

impl Sub for AlgebraVector {
    type Output = AlgebraVector;
    fn sub(self, o: AlgebraVector) -> AlgebraVector {
        self + (-o)
    }
}

impl Neg for AlgebraVector {
    type Output = AlgebraVector;
    fn neg(self) -> AlgebraVector {
        self.scale(-1.0)
    }
}

/// One of the four basis fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
    V,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::X, Basis::Y, Basis::Z, Basis::V];

    pub fn algebra(self) -> AlgebraVector {
        match self {
            Basis::X => AlgebraVector::X,
            Basis::Y => AlgebraVector::Y,
            Basis::Z => AlgebraVector::Z,
            Basis::V => AlgebraVector::V,
        }
    }
}

/// Coordinate components `(dx, dy, dz, dv)` of the left-invariant field
/// `basis` at `g`.
pub fn field_at(basis: Basis, g: GroupElement) -> [f64; 4] {
    let GroupElement { x, y, z, .. } = g;
    match basis {
        Basis::X => [1.0, 0.0, -0.5 * y, -0.5 * z - x * y / 12.0],
        Basis::Y => [0.0, 1.0, 0.5 * x, x * x / 12.0],
        Basis::Z => [0.0, 0.0, 1.0, 0.5 * x],
        Basis::V => [0.0, 0.0, 0.0, 1.0],
    }
}

/// Jacobian `J[i][j] = ∂(field component i)/∂(coordinate j)` of a basis field.
pub fn field_jacobian(basis: Basis, g: GroupElement) -> [[f64; 4]; 4] {
    let GroupElement { x, y, .. } = g;
    let mut j = [[0.0; 4]; 4];
    match basis {
        Basis::X => {
            j[2][1] = -0.5;
            j[3][0] = -y / 12.0;
            j[3][1] = -x / 12.0;
            j[3][2] = -0.5;
        }
        Basis::Y => {
            j[2][0] = 0.5;
            j[3][0] = x / 6.0;
        }
        Basis::Z => {
            j[3][0] = 0.5;
        }
        Basis::V => {}
    }
    j
}

/// Field of an arbitrary algebra element at `g` (linear in the element).
pub fn algebra_field_at(a: AlgebraVector, g: GroupElement) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (coef, b) in a.to_array().into_iter().zip(Basis::ALL) {
        let f = field_at(b, g);
        for i in 0..4 {
            out[i] += coef * f[i];
        }
    }
    out
}

/// Commutator `[A, B]` of two basis vector fields at `g`, computed from the
/// analytic Jacobians: `[A,B]^i = A^j ∂_j B^i − B^j ∂_j A^i`.
pub fn field_commutator(a: Basis, b: Basis, g: GroupElement) -> [f64; 4] {
    let fa = field_at(a, g);
    let fb = field_at(b, g);
    let ja = field_jacobian(a, g);
    let jb = field_jacobian(b, g);
    let mut out = [0.0; 4];
    for i in 0..4 {
        for k in 0..4 {
            out[i] += fa[k] * jb[i][k] - fb[k] * ja[i][k];
        }
    }
    out
}

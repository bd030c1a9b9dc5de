//! Symmetric 2×2 tensors in the plane.
//!
//! Strains, stresses and plastic strains are all stored as [`Sym2`]. The
//! double contraction `A : B` is the Frobenius inner product, so
//! `a.norm()` is `sqrt(A : A)` (the off-diagonal entry counts twice).
//! [`Sym2::to_mandel`] maps onto the orthonormal basis
//! `(xx, yy, sqrt(2) xy)` in which `:` becomes the Euclidean dot product.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Symmetric matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        yy: 1.0,
        xy: 0.0,
    };

    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Sym2 { xx, yy, xy }
    }

    /// Deviatoric tensor `[[d, s], [s, -d]]`.
    pub const fn deviatoric(d: f64, s: f64) -> Self {
        Sym2 {
            xx: d,
            yy: -d,
            xy: s,
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// `A - (tr A / 2) I`.
    pub fn dev(&self) -> Self {
        let m = 0.5 * (self.xx - self.yy);
        Sym2 {
            xx: m,
            yy: -m,
            xy: self.xy,
        }
    }

    pub fn ddot(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym2 {
            xx: s * self.xx,
            yy: s * self.yy,
            xy: s * self.xy,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.yy.abs()).max(self.xy.abs())
    }

    pub fn to_mandel(&self) -> [f64; 3] {
        [self.xx, self.yy, std::f64::consts::SQRT_2 * self.xy]
    }

    pub fn from_mandel(v: [f64; 3]) -> Self {
        Sym2 {
            xx: v[0],
            yy: v[1],
            xy: v[2] * std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    /// Conjugation `R A R` by the reflection `R = diag(1, -1)`.
    pub fn reflect_y(&self) -> Self {
        Sym2 {
            xx: self.xx,
            yy: self.yy,
            xy: -self.xy,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Neg for Sym2 {
    type Output = Sym2;
    fn neg(self) -> Sym2 {
        Sym2::new(-self.xx, -self.yy, -self.xy)
    }
}

impl Mul<Sym2> for f64 {
    type Output = Sym2;
    fn mul(self, a: Sym2) -> Sym2 {
        a.scale(self)
    }
}

impl AddAssign for Sym2 {
    fn add_assign(&mut self, o: Sym2) {
        *self = *self + o;
    }
}

impl SubAssign for Sym2 {
    fn sub_assign(&mut self, o: Sym2) {
        *self = *self - o;
    }
}

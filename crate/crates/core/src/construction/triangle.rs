use crate::error::{Result, TGraphError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// An angle, optionally known exactly as a rational multiple of pi.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub radians: f64,
    /// `(p, q)` with `q > 0` and `gcd(p, q) = 1` when the angle is `p/q * pi`.
    pub pi_fraction: Option<(i64, i64)>,
}

impl Angle {
    pub fn radians(x: f64) -> Self {
        Angle { radians: x, pi_fraction: None }
    }

    pub fn pi_fraction(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(TGraphError::InvalidArgument("zero denominator".into()));
        }
        let (p, q) = reduce(p, q);
        Ok(Angle { radians: PI * p as f64 / q as f64, pi_fraction: Some((p, q)) })
    }

    pub fn is_rational(&self) -> bool {
        self.pi_fraction.is_some()
    }

    pub fn unit(&self) -> Complex64 {
        match self.pi_fraction {
            Some((p, q)) => exact_unit(p as i128, q as i128),
            None => Complex64::from_polar(1.0, self.radians),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pi_fraction {
            Some((p, q)) => write!(f, "{}/{} pi", p, q),
            None => write!(f, "{}", self.radians),
        }
    }
}

pub(crate) fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn reduce(p: i64, q: i64) -> (i64, i64) {
    let g = gcd(p as i128, q as i128).max(1) as i64;
    let s = if q < 0 { -1 } else { 1 };
    (s * p / g, s * q / g)
}

/// `exp(i pi k / q)`, with `k` reduced modulo `2q` first so equal residues give
/// bit-identical results.
pub(crate) fn exact_unit(k: i128, q: i128) -> Complex64 {
    let k = k.rem_euclid(2 * q);
    let x = PI * (k as f64) / (q as f64);
    Complex64::new(x.cos(), x.sin())
}

/// The area-one reference triangle with sides `a, b, c` along the unit
/// directions `alpha, beta, gamma` (counterclockwise, `a alpha + b beta + c gamma = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    /// Interior angles opposite to the sides `a, b, c`.
    pub angles: [Angle; 3],
    /// `arg(beta / gamma)`.
    pub theta1: Angle,
    /// `arg(beta / alpha)`.
    pub theta2: Angle,
}

impl Triangle {
    pub fn equilateral() -> Self {
        let t = Angle::pi_fraction(1, 3).unwrap();
        Self::from_angles(t, t, t).unwrap()
    }

    /// Triangle with interior angles `A, B, C` opposite to the sides `a, b, c`.
    ///
    /// When all three angles are exact rationals of pi the rotation angles are
    /// exact too, which keeps `f` exactly periodic.
    pub fn from_angles(ang_a: Angle, ang_b: Angle, ang_c: Angle) -> Result<Self> {
        for (name, t) in [("A", ang_a), ("B", ang_b), ("C", ang_c)] {
            if !(t.radians > 0.0 && t.radians < PI) {
                return Err(TGraphError::InvalidTriangle(format!("angle {name} = {t} not in (0, pi)")));
            }
        }
        let (theta1, theta2) = match (ang_a.pi_fraction, ang_b.pi_fraction, ang_c.pi_fraction) {
            (Some((pa, qa)), Some((pb, qb)), Some((pc, qc))) => {
                let (pa, qa, pb, qb, pc, qc) =
                    (pa as i128, qa as i128, pb as i128, qb as i128, pc as i128, qc as i128);
                if pa * qb * qc + pb * qa * qc + pc * qa * qb != qa * qb * qc {
                    return Err(TGraphError::InvalidTriangle("angles do not sum to pi".into()));
                }
                (
                    Angle::pi_fraction((pa - qa) as i64, qa as i64)?,
                    Angle::pi_fraction((qc - pc) as i64, qc as i64)?,
                )
            }
            _ => {
                let sum = ang_a.radians + ang_b.radians + ang_c.radians;
                if (sum - PI).abs() > 1e-9 {
                    return Err(TGraphError::InvalidTriangle(format!("angles sum to {sum}, not pi")));
                }
                (Angle::radians(ang_a.radians - PI), Angle::radians(PI - ang_c.radians))
            }
        };
        let (sa, sb, sc) = (ang_a.radians.sin(), ang_b.radians.sin(), ang_c.radians.sin());
        let k = (2.0 / (sa * sb * sc)).sqrt();
        let alpha = Complex64::new(1.0, 0.0);
        let beta = theta2.unit();
        let gamma = beta / theta1.unit();
        let t = Triangle {
            a: k * sa,
            b: k * sb,
            c: k * sc,
            alpha,
            beta,
            gamma,
            angles: [ang_a, ang_b, ang_c],
            theta1,
            theta2,
        };
        t.check()?;
        Ok(t)
    }

    /// Triangle with the given side lengths, rescaled to area one.
    pub fn from_sides(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) || a + b <= c || b + c <= a || a + c <= b {
            return Err(TGraphError::InvalidTriangle(format!("sides {a}, {b}, {c} violate the triangle inequality")));
        }
        let ang = |x: f64, y: f64, z: f64| ((y * y + z * z - x * x) / (2.0 * y * z)).clamp(-1.0, 1.0).acos();
        let (ta, tb) = (ang(a, b, c), ang(b, a, c));
        let tc = PI - ta - tb;
        let t = Self::from_angles(Angle::radians(ta), Angle::radians(tb), Angle::radians(tc))?;
        let s = (a + b + c) / 2.0;
        let area = (s * (s - a) * (s - b) * (s - c)).sqrt();
        warn_rescale(area);
        Ok(t)
    }

    /// Triangle from three side vectors, traversed counterclockwise.
    pub fn from_vectors(v: [Complex64; 3]) -> Result<Self> {
        let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(scale > 0.0) || v.iter().any(|z| z.norm() == 0.0) {
            return Err(TGraphError::InvalidTriangle("zero side vector".into()));
        }
        if (v[0] + v[1] + v[2]).norm() > 1e-9 * scale {
            return Err(TGraphError::InvalidTriangle("side vectors do not close up".into()));
        }
        let area = 0.5 * (v[0].conj() * v[1]).im;
        if area <= 0.0 {
            return Err(TGraphError::InvalidTriangle("side vectors are not counterclockwise".into()));
        }
        warn_rescale(area);
        let k = 1.0 / area.sqrt();
        let (a, b, c) = (k * v[0].norm(), k * v[1].norm(), k * v[2].norm());
        let (alpha, beta, gamma) = (v[0] / v[0].norm(), v[1] / v[1].norm(), v[2] / v[2].norm());
        let interior = |u: Complex64, w: Complex64| PI - (w / u).arg().abs();
        let t = Triangle {
            a,
            b,
            c,
            alpha,
            beta,
            gamma,
            angles: [
                Angle::radians(interior(beta, gamma)),
                Angle::radians(interior(gamma, alpha)),
                Angle::radians(interior(alpha, beta)),
            ],
            theta1: Angle::radians((beta / gamma).arg()),
            theta2: Angle::radians((beta / alpha).arg()),
        };
        t.check()?;
        Ok(t)
    }

    pub fn is_rational(&self) -> bool {
        self.theta1.is_rational() && self.theta2.is_rational()
    }

    pub fn area(&self) -> f64 {
        0.5 * ((self.a * self.alpha).conj() * (self.b * self.beta)).im
    }

    pub fn closure(&self) -> f64 {
        (self.a * self.alpha + self.b * self.beta + self.c * self.gamma).norm()
    }

    /// Vertices of the triangle starting at the origin, counterclockwise.
    pub fn vertices(&self) -> [Complex64; 3] {
        let p1 = self.a * self.alpha;
        [Complex64::new(0.0, 0.0), p1, p1 + self.b * self.beta]
    }

    fn check(&self) -> Result<()> {
        for z in [self.alpha, self.beta, self.gamma] {
            if (z.norm() - 1.0).abs() > 1e-12 {
                return Err(TGraphError::InvalidTriangle("direction is not unit".into()));
            }
        }
        if self.closure() > 1e-12 * (self.a + self.b + self.c) {
            return Err(TGraphError::InvalidTriangle(format!("closure defect {:e}", self.closure())));
        }
        if (self.area() - 1.0).abs() > 1e-10 {
            return Err(TGraphError::InvalidTriangle(format!("area {} after normalization", self.area())));
        }
        Ok(())
    }
}

fn warn_rescale(area: f64) {
    let rel = (1.0 / area.sqrt() - 1.0).abs();
    if rel > 1e-6 {
        log::warn!("triangle rescaled by factor {:.6} to reach area one", 1.0 / area.sqrt());
    }
}

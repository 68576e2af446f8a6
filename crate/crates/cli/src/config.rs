//! Plain-text run configuration.
//!
//! ```text
//! # comments start with '#'
//! [triangle]
//! angles = 1/3 pi, 1/3 pi, 1/3 pi   # or: sides = 3, 4, 5
//!                                   # or: vectors = 1 0; -0.5 0.866; -0.5 -0.866
//! [lambda]
//! angle = 0.37                      # radians, or "p/q pi"; or: seed = 7
//! [window]
//! radius = 20
//! [run]
//! seed = 1
//! [tolerances]
//! degeneracy = 1e-3
//! ```

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::fmt;
use tgraph::construction::{Angle, Params, Triangle};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line number, 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum TriangleSpec {
    Angles([Angle; 3]),
    Sides([f64; 3]),
    Vectors([Complex64; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    Angle(Angle),
    /// Uniform draw on the unit circle from this seed.
    Seed(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub triangle: TriangleSpec,
    pub lambda: LambdaSpec,
    pub radius: i64,
    pub seed: u64,
    pub degeneracy_eps: f64,
}

impl Default for Config {
    fn default() -> Self {
        let third = Angle::pi_fraction(1, 3).expect("nonzero denominator");
        Config {
            triangle: TriangleSpec::Angles([third; 3]),
            lambda: LambdaSpec::Angle(Angle::radians(0.37)),
            radius: 20,
            seed: 0,
            degeneracy_eps: 1e-3,
        }
    }
}

impl Config {
    pub fn triangle(&self) -> tgraph::Result<Triangle> {
        match &self.triangle {
            TriangleSpec::Angles(a) => Triangle::from_angles(a[0], a[1], a[2]),
            TriangleSpec::Sides(s) => Triangle::from_sides(s[0], s[1], s[2]),
            TriangleSpec::Vectors(v) => Triangle::from_vectors(*v),
        }
    }

    pub fn lambda(&self) -> Complex64 {
        match self.lambda {
            LambdaSpec::Angle(a) => a.unit(),
            LambdaSpec::Seed(s) => Complex64::from_polar(1.0, ChaCha8Rng::seed_from_u64(s).gen::<f64>() * TAU),
        }
    }

    pub fn params(&self) -> tgraph::Result<Params> {
        Params::new(self.triangle()?, self.lambda())
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ConfigError { line, message };
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(format!("unterminated section header '{s}'")))?;
                section = name.trim().to_string();
                if !["triangle", "lambda", "window", "run", "tolerances"].contains(&section.as_str()) {
                    return Err(err(format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = s.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{s}'")))?;
            let (key, value) = (key.trim(), value.trim());
            match (section.as_str(), key) {
                ("triangle", "angles") => {
                    let v = list(value, ',').map_err(err)?;
                    let a: Vec<Angle> = v.iter().map(|x| parse_angle(x)).collect::<Result<_, _>>().map_err(err)?;
                    cfg.triangle = TriangleSpec::Angles(three(a).map_err(err)?);
                }
                ("triangle", "sides") => {
                    let v = list(value, ',').map_err(err)?;
                    let a: Vec<f64> = v.iter().map(|x| parse_f64(x)).collect::<Result<_, _>>().map_err(err)?;
                    cfg.triangle = TriangleSpec::Sides(three(a).map_err(err)?);
                }
                ("triangle", "vectors") => {
                    let v = list(value, ';').map_err(err)?;
                    let a: Vec<Complex64> = v.iter().map(|x| parse_complex(x)).collect::<Result<_, _>>().map_err(err)?;
                    cfg.triangle = TriangleSpec::Vectors(three(a).map_err(err)?);
                }
                ("lambda", "angle") => {
                    let a = parse_angle(value).map_err(err)?;
                    if !(0.0..TAU).contains(&a.radians) {
                        return Err(err(format!("lambda angle {value} not in [0, 2pi)")));
                    }
                    cfg.lambda = LambdaSpec::Angle(a);
                }
                ("lambda", "seed") => cfg.lambda = LambdaSpec::Seed(parse_u64(value).map_err(err)?),
                ("window", "radius") => {
                    let r = parse_u64(value).map_err(err)?;
                    if r < 2 {
                        return Err(err(format!("radius {r} < 2")));
                    }
                    cfg.radius = r as i64;
                }
                ("run", "seed") => cfg.seed = parse_u64(value).map_err(err)?,
                ("tolerances", "degeneracy") => {
                    let e = parse_f64(value).map_err(err)?;
                    if !(e > 0.0) {
                        return Err(err(format!("tolerance {value} must be positive")));
                    }
                    cfg.degeneracy_eps = e;
                }
                ("", _) => return Err(err(format!("key '{key}' outside any section"))),
                (sec, _) => return Err(err(format!("unknown key '{key}' in [{sec}]"))),
            }
        }
        cfg.triangle().map_err(|e| ConfigError { line: 0, message: e.to_string() })?;
        Ok(cfg)
    }
}

fn list(value: &str, sep: char) -> Result<Vec<&str>, String> {
    let v: Vec<&str> = value.split(sep).map(str::trim).collect();
    if v.iter().any(|x| x.is_empty()) {
        return Err(format!("empty entry in '{value}'"));
    }
    Ok(v)
}

fn three<T: Copy>(v: Vec<T>) -> Result<[T; 3], String> {
    <[T; 3]>::try_from(v).map_err(|v| format!("expected 3 entries, got {}", v.len()))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !x.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(x)
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("'{s}' is not a nonnegative integer"))
}

/// `p/q pi`, `pi`, or plain radians.
pub fn parse_angle(s: &str) -> Result<Angle, String> {
    if let Some(body) = s.strip_suffix("pi") {
        let body = body.trim();
        let (p, q) = match body.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None if body.is_empty() => ("1", "1"),
            None => (body, "1"),
        };
        let p: i64 = p.parse().map_err(|_| format!("'{s}': numerator must be an integer"))?;
        let q: i64 = q.parse().map_err(|_| format!("'{s}': denominator must be an integer"))?;
        return Angle::pi_fraction(p, q).map_err(|e| format!("'{s}': {e}"));
    }
    let x = parse_f64(s)?;
    if x.abs() > 4.0 * PI {
        return Err(format!("angle {x} is out of range"));
    }
    Ok(Angle::radians(x))
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    match parts.as_slice() {
        [re, im] => Ok(Complex64::new(parse_f64(re)?, parse_f64(im)?)),
        _ => Err(format!("'{s}': expected 're im'")),
    }
}

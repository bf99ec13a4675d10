//! Angles given in radians or as fractions of π.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// An angle in radians, parsed from `0.3`, `pi`, `-pi/4`, `3pi/8`, `3*pi/8`
/// or the same with `π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle(pub f64);

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t: String = s
            .trim()
            .to_ascii_lowercase()
            .replace('π', "pi")
            .replace(' ', "");
        let bad = || format!("invalid angle `{s}` (use radians or a fraction of pi like 3pi/8)");
        let Some(at) = t.find("pi") else {
            let v: f64 = t.parse().map_err(|_| bad())?;
            return v.is_finite().then_some(Angle(v)).ok_or_else(bad);
        };
        let coef = t[..at].trim_end_matches('*');
        let coef = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        let rest = &t[at + 2..];
        let denom = match rest {
            "" => 1.0,
            r => r
                .strip_prefix('/')
                .and_then(|d| d.parse::<f64>().ok())
                .filter(|d| *d != 0.0)
                .ok_or_else(bad)?,
        };
        let v = coef * PI / denom;
        v.is_finite().then_some(Angle(v)).ok_or_else(bad)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Label for an angle on the eighths-of-π grid, else radians.
pub fn pi_label(theta: f64) -> String {
    let eighths = theta * 8.0 / PI;
    let k = eighths.round();
    if (eighths - k).abs() > 1e-9 {
        return format!("{theta}");
    }
    let k = k as i64;
    if k == 0 {
        return "0".into();
    }
    let g = gcd(k.unsigned_abs(), 8) as i64;
    let (num, den) = (k / g, 8 / g);
    let coef = match num {
        1 => String::new(),
        -1 => "-".into(),
        n => n.to_string(),
    };
    if den == 1 {
        format!("{coef}pi")
    } else {
        format!("{coef}pi/{den}")
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> f64 {
        s.parse::<Angle>().unwrap().0
    }

    #[test]
    fn fractions_of_pi() {
        assert_eq!(parse("3pi/8"), 3.0 * PI / 8.0);
        assert_eq!(parse("3*pi/8"), 3.0 * PI / 8.0);
        assert_eq!(parse("-pi/4"), -PI / 4.0);
        assert_eq!(parse("π"), PI);
        assert_eq!(parse("0.25"), 0.25);
        assert_eq!(parse("2PI"), 2.0 * PI);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "pi/0", "3pi8", "x", "pi/", "inf"] {
            assert!(s.parse::<Angle>().is_err(), "{s}");
        }
    }

    #[test]
    fn labels_round_trip() {
        for k in -16..=16 {
            let theta = k as f64 * PI / 8.0;
            assert!((parse(&pi_label(theta)) - theta).abs() < 1e-15, "{k}");
        }
        assert_eq!(pi_label(3.0 * PI / 8.0), "3pi/8");
        assert_eq!(pi_label(PI / 2.0), "pi/2");
    }
}

//! Vector norm tags shared by the extension and operator modules.
//!
//! Serialized as the strings `"euclidean"`, `"max"` or `"p:<value>"`.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormTag {
    Euclidean,
    P(f64),
    Max,
}

impl NormTag {
    /// Parses `"euclidean"`, `"max"` or `"p:<value>"` with `value >= 1`.
    pub fn parse(s: &str) -> Option<NormTag> {
        match s {
            "euclidean" => Some(NormTag::Euclidean),
            "max" => Some(NormTag::Max),
            _ => {
                let p: f64 = s.strip_prefix("p:")?.parse().ok()?;
                (p.is_finite() && p >= 1.0).then_some(NormTag::P(p))
            }
        }
    }

    pub fn vector_norm(&self, v: &[f64]) -> f64 {
        match self {
            NormTag::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormTag::Max => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            NormTag::P(p) if *p == 1.0 => v.iter().map(|x| x.abs()).sum(),
            NormTag::P(p) => v
                .iter()
                .map(|x| x.abs().powf(*p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }
}

impl fmt::Display for NormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormTag::Euclidean => write!(f, "euclidean"),
            NormTag::Max => write!(f, "max"),
            NormTag::P(p) => write!(f, "p:{p}"),
        }
    }
}

impl Serialize for NormTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NormTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        NormTag::parse(&s).ok_or_else(|| {
            de::Error::custom(format!(
                "unknown norm `{s}` (expected euclidean, max or p:<value> with value >= 1)"
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in ["euclidean", "max", "p:1", "p:3.5"] {
            let tag = NormTag::parse(s).unwrap();
            assert_eq!(NormTag::parse(&tag.to_string()), Some(tag));
        }
        assert_eq!(NormTag::parse("p:0.5"), None);
        assert_eq!(NormTag::parse("frobenius"), None);
    }

    #[test]
    fn norms_of_a_simple_vector() {
        let v = [3.0, -4.0];
        assert_eq!(NormTag::Euclidean.vector_norm(&v), 5.0);
        assert_eq!(NormTag::Max.vector_norm(&v), 4.0);
        assert_eq!(NormTag::P(1.0).vector_norm(&v), 7.0);
        let p3 = NormTag::P(3.0).vector_norm(&v);
        assert!((p3 - 91.0_f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }
}

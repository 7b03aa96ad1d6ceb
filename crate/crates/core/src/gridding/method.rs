use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridding::ArrayTemplate;

/// Range fraction used by the threshold methods when none is given.
pub const DEFAULT_THRESHOLD: f64 = 0.3;
/// Template scores below this are rejected as geometric distortion.
pub const DEFAULT_MIN_SCORE: f64 = 0.5;

/// Method names as they appear on the command line and in grid documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    TemplateMatch,
    SumThreshold,
    StdDevThreshold,
    SumDerivative,
    StdDevDerivative,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [
        MethodKind::TemplateMatch,
        MethodKind::SumThreshold,
        MethodKind::StdDevThreshold,
        MethodKind::SumDerivative,
        MethodKind::StdDevDerivative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::TemplateMatch => "template",
            MethodKind::SumThreshold => "sum",
            MethodKind::StdDevThreshold => "stddev",
            MethodKind::SumDerivative => "sum-deriv",
            MethodKind::StdDevDerivative => "stddev-deriv",
        }
    }

    pub fn is_threshold(self) -> bool {
        matches!(self, MethodKind::SumThreshold | MethodKind::StdDevThreshold)
    }

    pub fn is_derivative(self) -> bool {
        matches!(self, MethodKind::SumDerivative | MethodKind::StdDevDerivative)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidMethod(format!("unknown method '{s}'")))
    }
}

/// A fully parameterized gridding method.
///
/// The derivative variants have no threshold field at all; a threshold can
/// only be attached to the two threshold variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum Method {
    #[serde(rename = "template")]
    TemplateMatch {
        template: ArrayTemplate,
        min_score: f64,
    },
    #[serde(rename = "sum")]
    SumThreshold { threshold: f64 },
    #[serde(rename = "stddev")]
    StdDevThreshold { threshold: f64 },
    #[serde(rename = "sum-deriv")]
    SumDerivative { smooth: usize },
    #[serde(rename = "stddev-deriv")]
    StdDevDerivative { smooth: usize },
}

impl Method {
    /// Builds a profile-based method, enforcing the threshold rule: the
    /// threshold methods require a fraction in (0, 1), the derivative methods
    /// refuse one.
    pub fn new(kind: MethodKind, threshold: Option<f64>) -> Result<Method> {
        let check = |t: f64| {
            if t > 0.0 && t < 1.0 {
                Ok(t)
            } else {
                Err(Error::BadThreshold(t))
            }
        };
        match (kind, threshold) {
            (MethodKind::TemplateMatch, _) => Err(Error::InvalidMethod(
                "template matching needs a template, use Method::template".into(),
            )),
            (MethodKind::SumThreshold, Some(t)) => Ok(Method::SumThreshold { threshold: check(t)? }),
            (MethodKind::StdDevThreshold, Some(t)) => {
                Ok(Method::StdDevThreshold { threshold: check(t)? })
            }
            (k, None) if k.is_threshold() => Err(Error::InvalidMethod(format!(
                "method '{k}' requires a threshold"
            ))),
            (k, Some(_)) => Err(Error::InvalidMethod(format!(
                "method '{k}' takes no threshold"
            ))),
            (MethodKind::SumDerivative, None) => Ok(Method::SumDerivative { smooth: 1 }),
            (MethodKind::StdDevDerivative, None) => Ok(Method::StdDevDerivative { smooth: 1 }),
            _ => unreachable!(),
        }
    }

    pub fn sum_derivative() -> Method {
        Method::SumDerivative { smooth: 1 }
    }

    pub fn stddev_derivative() -> Method {
        Method::StdDevDerivative { smooth: 1 }
    }

    pub fn template(template: ArrayTemplate) -> Method {
        Method::TemplateMatch {
            template,
            min_score: DEFAULT_MIN_SCORE,
        }
    }

    /// Sets the smoothing window of a derivative method.
    pub fn with_smoothing(self, window: usize) -> Result<Method> {
        if window == 0 || window.is_multiple_of(2) {
            return Err(Error::BadWindow { window, len: 0 });
        }
        match self {
            Method::SumDerivative { .. } => Ok(Method::SumDerivative { smooth: window }),
            Method::StdDevDerivative { .. } => Ok(Method::StdDevDerivative { smooth: window }),
            other => Err(Error::InvalidMethod(format!(
                "method '{}' takes no smoothing window",
                other.kind()
            ))),
        }
    }

    pub fn kind(&self) -> MethodKind {
        match self {
            Method::TemplateMatch { .. } => MethodKind::TemplateMatch,
            Method::SumThreshold { .. } => MethodKind::SumThreshold,
            Method::StdDevThreshold { .. } => MethodKind::StdDevThreshold,
            Method::SumDerivative { .. } => MethodKind::SumDerivative,
            Method::StdDevDerivative { .. } => MethodKind::StdDevDerivative,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Method::SumThreshold { threshold } | Method::StdDevThreshold { threshold } => {
                Some(*threshold)
            }
            _ => None,
        }
    }

    /// Re-checks invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            Method::SumThreshold { threshold } | Method::StdDevThreshold { threshold } => {
                Method::new(self.kind(), Some(*threshold)).map(|_| ())
            }
            Method::SumDerivative { smooth } | Method::StdDevDerivative { smooth } => {
                if *smooth == 0 || smooth % 2 == 0 {
                    Err(Error::BadWindow {
                        window: *smooth,
                        len: 0,
                    })
                } else {
                    Ok(())
                }
            }
            Method::TemplateMatch { template, min_score } => {
                template.validate()?;
                if (-1.0..=1.0).contains(min_score) {
                    Ok(())
                } else {
                    Err(Error::InvalidMethod(format!("min_score {min_score} outside [-1, 1]")))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_rule() {
        assert!(Method::new(MethodKind::SumDerivative, Some(0.3)).is_err());
        assert!(Method::new(MethodKind::StdDevDerivative, Some(0.3)).is_err());
        assert!(Method::new(MethodKind::SumThreshold, None).is_err());
        assert!(Method::new(MethodKind::StdDevThreshold, None).is_err());
        assert!(Method::new(MethodKind::SumThreshold, Some(1.5)).is_err());
        assert_eq!(
            Method::new(MethodKind::SumThreshold, Some(0.3)).unwrap(),
            Method::SumThreshold { threshold: 0.3 }
        );
        assert_eq!(
            Method::new(MethodKind::SumDerivative, None).unwrap(),
            Method::sum_derivative()
        );
    }

    #[test]
    fn names_round_trip() {
        for k in MethodKind::ALL {
            assert_eq!(k.name().parse::<MethodKind>().unwrap(), k);
        }
        assert!("deriv".parse::<MethodKind>().is_err());
    }

    #[test]
    fn smoothing_only_for_derivative() {
        assert_eq!(
            Method::sum_derivative().with_smoothing(5).unwrap(),
            Method::SumDerivative { smooth: 5 }
        );
        assert!(Method::sum_derivative().with_smoothing(4).is_err());
        assert!(Method::SumThreshold { threshold: 0.3 }.with_smoothing(3).is_err());
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&Method::SumThreshold { threshold: 0.3 }).unwrap();
        assert_eq!(json, r#"{"name":"sum","threshold":0.3}"#);
        let json = serde_json::to_string(&Method::sum_derivative()).unwrap();
        assert_eq!(json, r#"{"name":"sum-deriv","smooth":1}"#);
        // a derivative method carrying a threshold does not deserialize
        let bad = r#"{"name":"sum-deriv","smooth":1,"threshold":0.3}"#;
        assert!(serde_json::from_str::<Method>(bad).is_err());
    }
}

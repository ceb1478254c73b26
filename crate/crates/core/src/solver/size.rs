use crate::{Error, Result};

/// Class-size information. Sizes count nodes.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum SizeSpec {
    #[default]
    None,
    /// Class `i` must contain exactly `a[i]` nodes.
    Exact(Vec<f64>),
    /// Class `i` must contain between `lower[i]` and `upper[i]` nodes.
    Interval { lower: Vec<f64>, upper: Vec<f64> },
    /// Each node outside `[lower[i], upper[i]]` costs `gamma`.
    Penalty { lower: Vec<f64>, upper: Vec<f64>, gamma: f64 },
}

/// Size bounds in the uniform form used by the solver: `gamma = 0` means no
/// size information, `gamma = ∞` hard bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub gamma: f64,
}

impl SizeSpec {
    /// Validates against `n_nodes` and `n_classes` and returns the bounds.
    pub fn resolve(&self, n_nodes: usize, n_classes: usize) -> Result<SizeBounds> {
        let n = n_nodes as f64;
        let (lower, upper, gamma) = match self {
            SizeSpec::None => {
                return Ok(SizeBounds {
                    lower: vec![0.0; n_classes],
                    upper: vec![n; n_classes],
                    gamma: 0.0,
                })
            }
            SizeSpec::Exact(a) => (a.clone(), a.clone(), f64::INFINITY),
            SizeSpec::Interval { lower, upper } => (lower.clone(), upper.clone(), f64::INFINITY),
            SizeSpec::Penalty { lower, upper, gamma } => {
                if gamma.is_nan() || *gamma <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "size penalty gamma must be > 0, got {gamma}"
                    )));
                }
                (lower.clone(), upper.clone(), *gamma)
            }
        };
        if lower.len() != n_classes || upper.len() != n_classes {
            return Err(Error::InvalidParameter(format!(
                "size bounds need {n_classes} entries per side"
            )));
        }
        for i in 0..n_classes {
            let (l, u) = (lower[i], upper[i]);
            if !(l.is_finite() && u.is_finite() && l >= 0.0 && l <= u) {
                return Err(Error::InvalidParameter(format!(
                    "class {}: invalid size bounds [{l}, {u}]",
                    i + 1
                )));
            }
        }
        let (sl, su): (f64, f64) = (lower.iter().sum(), upper.iter().sum());
        if sl > n || su < n {
            return Err(Error::InfeasibleSize(format!(
                "bounds sum to [{sl}, {su}] but N = {n_nodes}"
            )));
        }
        Ok(SizeBounds { lower, upper, gamma })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, SizeSpec::None)
    }
}

/// `Σ_i P_γ(s_i)`, where `P_γ` is zero inside `[lower, upper]` and grows with
/// slope `gamma` outside.
pub fn penalty_value(sizes: &[f64], lower: &[f64], upper: &[f64], gamma: f64) -> f64 {
    sizes
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&s, (&l, &u))| {
            if s > u {
                gamma * (s - u)
            } else if s < l {
                gamma * (l - s)
            } else {
                0.0
            }
        })
        .sum()
}

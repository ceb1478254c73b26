use ndarray::{Array2, ArrayView2};

use crate::{Error, Result};

/// Penalty for assigning a supervised node to a class other than its own.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eta {
    Finite(f64),
    /// Forbidden classes get infinite cost, so the solver pins their
    /// labels to zero.
    Infinite,
}

impl Eta {
    fn value(self) -> f64 {
        match self {
            Eta::Finite(v) => v,
            Eta::Infinite => f64::INFINITY,
        }
    }
}

impl Default for Eta {
    fn default() -> Self {
        Eta::Finite(500.0)
    }
}

/// Per-node, per-class assignment costs `C_i(x)`, stored as an N×n matrix.
///
/// Entries are finite except for `+∞`, which marks a forbidden class.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionCosts {
    c: Array2<f64>,
}

impl RegionCosts {
    pub fn new(c: Array2<f64>) -> Result<Self> {
        if c.ncols() == 0 {
            return Err(Error::InvalidInput("costs need at least one class".into()));
        }
        for (x, row) in c.rows().into_iter().enumerate() {
            if row.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                return Err(Error::InvalidInput(format!("invalid cost at node {x}")));
            }
            if row.iter().all(|v| v.is_infinite()) {
                return Err(Error::InvalidInput(format!("every class is forbidden at node {x}")));
            }
        }
        Ok(RegionCosts { c })
    }

    pub fn zeros(n_nodes: usize, n_classes: usize) -> Result<Self> {
        Self::new(Array2::zeros((n_nodes, n_classes)))
    }

    pub fn n_nodes(&self) -> usize {
        self.c.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.c.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.c.view()
    }

    pub fn get(&self, x: usize, i: usize) -> f64 {
        self.c[[x, i]]
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.c
    }
}

/// Builds `C_i(x)`: `η` where `x` is supervised with a class other than
/// `i`, zero otherwise, plus the region term `f_i(x)` when given.
///
/// `supervised` holds `(node, class)` pairs with 0-based classes.
pub fn assemble_costs(
    n_nodes: usize,
    n_classes: usize,
    supervised: &[(usize, usize)],
    eta: Eta,
    region: Option<ArrayView2<'_, f64>>,
) -> Result<RegionCosts> {
    if let Eta::Finite(v) = eta {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be finite and >= 0, got {v}")));
        }
    }
    let mut c = match region {
        Some(f) => {
            if f.dim() != (n_nodes, n_classes) {
                return Err(Error::InvalidInput(format!(
                    "region terms are {:?}, expected ({n_nodes}, {n_classes})",
                    f.dim()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("region terms must be finite".into()));
            }
            f.to_owned()
        }
        None => Array2::zeros((n_nodes, n_classes)),
    };
    let mut seen = vec![usize::MAX; n_nodes];
    for &(x, class) in supervised {
        if x >= n_nodes || class >= n_classes {
            return Err(Error::InvalidInput(format!(
                "supervision ({x}, class {}) out of range",
                class + 1
            )));
        }
        if seen[x] != usize::MAX && seen[x] != class {
            return Err(Error::InvalidInput(format!(
                "node {x} supervised as both class {} and {}",
                seen[x] + 1,
                class + 1
            )));
        }
        if seen[x] == class {
            continue;
        }
        seen[x] = class;
        for i in (0..n_classes).filter(|&i| i != class) {
            c[[x, i]] += eta.value();
        }
    }
    RegionCosts::new(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn no_information_gives_zero_costs() {
        let c = assemble_costs(4, 3, &[], Eta::default(), None).unwrap();
        assert!(c.view().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn supervised_row() {
        let c = assemble_costs(2, 3, &[(1, 1)], Eta::Finite(500.0), None).unwrap();
        assert_eq!(c.view().row(1).to_vec(), vec![500.0, 0.0, 500.0]);
        assert_eq!(c.view().row(0).to_vec(), vec![0.0; 3]);
    }

    #[test]
    fn region_terms_pass_through() {
        let f = array![[0.5, -1.0], [2.0, 0.25]];
        let c = assemble_costs(2, 2, &[], Eta::default(), Some(f.view())).unwrap();
        assert_eq!(c.view(), f.view());
    }

    #[test]
    fn conflicting_supervision() {
        let err = assemble_costs(3, 2, &[(0, 0), (0, 1)], Eta::default(), None).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        // repeating the same label is harmless
        let c = assemble_costs(3, 2, &[(0, 1), (0, 1)], Eta::Finite(3.0), None).unwrap();
        assert_eq!(c.get(0, 0), 3.0);
    }

    #[test]
    fn infinite_eta() {
        let c = assemble_costs(1, 2, &[(0, 0)], Eta::Infinite, None).unwrap();
        assert_eq!(c.get(0, 1), f64::INFINITY);
        assert_eq!(c.get(0, 0), 0.0);
    }
}

//! Accuracy, energies and run reports.

use std::fmt::Write as _;
use std::path::Path;

use itertools::Itertools;

use crate::calculus::{total_variation, CalculusParams};
use crate::graph::Graph;
use crate::solver::{
    binary_difference, dual_energy, one_hot, primal_energy, threshold_dual, RegionCosts, SizeSpec, SolverResult,
};
use crate::{Error, Result};

/// Largest class count for which permuted accuracy is computed exhaustively.
pub const MAX_PERMUTED_CLASSES: usize = 6;

fn check_lengths(labels: &[usize], truth: &[usize]) -> Result<()> {
    if labels.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels but {} ground-truth entries",
            labels.len(),
            truth.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput("empty labelling".into()));
    }
    Ok(())
}

/// Fraction of nodes whose label equals the ground truth. With `permute`,
/// the maximum over all relabellings of the predicted classes.
pub fn accuracy(labels: &[usize], truth: &[usize], permute: bool) -> Result<f64> {
    check_lengths(labels, truth)?;
    let n = labels.len() as f64;
    if !permute {
        return Ok(labels.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / n);
    }
    let k = labels.iter().chain(truth).max().unwrap() + 1;
    if k > MAX_PERMUTED_CLASSES {
        return Err(Error::InvalidInput(format!(
            "permuted accuracy supports at most {MAX_PERMUTED_CLASSES} classes, got {k}"
        )));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for (&l, &t) in labels.iter().zip(truth) {
        confusion[l][t] += 1;
    }
    let best = (0..k)
        .permutations(k)
        .map(|perm| (0..k).map(|l| confusion[l][perm[l]]).sum::<usize>())
        .max()
        .unwrap_or(0);
    Ok(best as f64 / n)
}

/// Accuracy restricted to each ground-truth class; NaN for empty classes.
pub fn per_class_accuracy(labels: &[usize], truth: &[usize], n_classes: usize) -> Result<Vec<f64>> {
    check_lengths(labels, truth)?;
    let mut hit = vec![0usize; n_classes];
    let mut tot = vec![0usize; n_classes];
    for (&l, &t) in labels.iter().zip(truth) {
        if t >= n_classes {
            return Err(Error::InvalidInput(format!("class {t} out of range")));
        }
        tot[t] += 1;
        hit[t] += (l == t) as usize;
    }
    Ok(hit.iter().zip(&tot).map(|(&h, &t)| if t == 0 { f64::NAN } else { h as f64 / t as f64 }).collect())
}

/// Total weight of edges whose endpoints carry different labels.
pub fn cut_weight(g: &Graph, labels: &[usize]) -> f64 {
    g.undirected_edges().filter(|&(x, y, _)| labels[x] != labels[y]).map(|(_, _, w)| w).sum()
}

/// `Σ_i TV(1_{V_i})`, the total variation of the one-hot labelling summed
/// over classes. Every cut edge is counted for both of its classes, so this
/// is twice [`cut_weight`].
pub fn tv_energy(g: &Graph, labels: &[usize]) -> f64 {
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut ind = vec![0.0; labels.len()];
    (0..n_classes)
        .map(|i| {
            for (v, &l) in ind.iter_mut().zip(labels) {
                *v = (l == i) as u8 as f64;
            }
            total_variation(g, &ind, CalculusParams::default())
        })
        .sum()
}

pub fn class_sizes(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut s = vec![0; n_classes];
    labels.iter().for_each(|&l| s[l] += 1);
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// `None` when no ground truth was given.
    pub accuracy: Option<f64>,
    pub per_class_accuracy: Vec<f64>,
    pub tv_energy: f64,
    pub binary_difference_final: f64,
    pub class_sizes: Vec<usize>,
    /// Primal energy of the rounded labels minus the dual objective.
    pub duality_gap: f64,
    pub primal_thresholded: f64,
    pub dual: f64,
    /// Nodes whose dual-threshold minimum is tied.
    pub ties: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Collects all metrics of a finished solve.
pub fn report(
    result: &SolverResult,
    truth: Option<&[usize]>,
    g: &Graph,
    costs: &RegionCosts,
    size: &SizeSpec,
    permute: bool,
) -> Result<EvalReport> {
    let nc = costs.n_classes();
    let labels = &result.labels;
    let (accuracy, per_class) = match truth {
        Some(t) => (Some(accuracy(labels, t, permute)?), per_class_accuracy(labels, t, nc)?),
        None => (None, Vec::new()),
    };
    let primal = primal_energy(g, one_hot(labels, nc).view(), costs, size)?;
    let dual = dual_energy(&result.state, size)?;
    Ok(EvalReport {
        accuracy,
        per_class_accuracy: per_class,
        tv_energy: tv_energy(g, labels),
        binary_difference_final: binary_difference(result.u.view()),
        class_sizes: class_sizes(labels, nc),
        duality_gap: primal - dual,
        primal_thresholded: primal,
        dual,
        ties: threshold_dual(g, costs, &result.state).ties,
        iterations: result.iterations,
        converged: result.converged,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |a| format!("{a:.6}"))
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(a) = self.accuracy {
            let _ = writeln!(s, "accuracy            {:.4}%", 100.0 * a);
            let pc = self.per_class_accuracy.iter().map(|a| format!("{:.4}", a)).join(" ");
            let _ = writeln!(s, "per-class accuracy  {pc}");
        }
        let _ = writeln!(s, "tv energy           {:.6}", self.tv_energy);
        let _ = writeln!(s, "thresholded primal  {:.10e}", self.primal_thresholded);
        let _ = writeln!(s, "dual                {:.10e}", self.dual);
        let _ = writeln!(s, "duality gap         {:.3e}", self.duality_gap);
        let _ = writeln!(s, "binary difference   {:.3e}", self.binary_difference_final);
        let _ = writeln!(s, "class sizes         {}", self.class_sizes.iter().join(" "));
        let _ = writeln!(s, "tied nodes          {}", self.ties);
        let _ = writeln!(s, "iterations          {} ({})", self.iterations, if self.converged { "converged" } else { "not converged" });
        s
    }

    pub const CSV_HEADER: [&'static str; 11] = [
        "accuracy",
        "per_class_accuracy",
        "tv_energy",
        "primal_thresholded",
        "dual",
        "duality_gap",
        "binary_difference",
        "class_sizes",
        "ties",
        "iterations",
        "converged",
    ];

    /// One CSV row; list-valued fields are joined with `;`.
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            fmt_opt(self.accuracy),
            self.per_class_accuracy.iter().map(|a| format!("{a:.6}")).join(";"),
            format!("{:e}", self.tv_energy),
            format!("{:e}", self.primal_thresholded),
            format!("{:e}", self.dual),
            format!("{:e}", self.duality_gap),
            format!("{:e}", self.binary_difference_final),
            self.class_sizes.iter().join(";"),
            self.ties.to_string(),
            self.iterations.to_string(),
            self.converged.to_string(),
        ]
    }

    /// Writes `report.txt` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        let mut w = csv::Writer::from_path(dir.join("report.csv"))?;
        w.write_record(Self::CSV_HEADER)?;
        w.write_record(self.csv_row())?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> Graph {
        Graph::from_undirected(3, [(0, 1, 5.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 1], &[0, 1, 1], false).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 0], &[0, 1, 1], false).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 0, 0], &[0, 1, 1], true).unwrap(), 1.0);
        assert_eq!(accuracy(&[2, 2, 0, 1], &[0, 0, 1, 1], true).unwrap(), 0.75);
        assert!(accuracy(&[0], &[0, 1], false).is_err());
    }

    #[test]
    fn per_class() {
        let pc = per_class_accuracy(&[0, 1, 1, 1], &[0, 0, 1, 1], 3).unwrap();
        assert_eq!(pc[..2], [0.5, 1.0]);
        assert!(pc[2].is_nan());
    }

    #[test]
    fn tv_energy_on_triangle() {
        let g = k3();
        assert_eq!(tv_energy(&g, &[0, 0, 0]), 0.0);
        assert_eq!(cut_weight(&g, &[0, 0, 1]), 2.0);
        assert_eq!(tv_energy(&g, &[0, 0, 1]), 4.0);
        assert_eq!(class_sizes(&[0, 0, 1], 3), vec![2, 1, 0]);
    }
}

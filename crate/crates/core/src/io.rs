//! File formats.
//!
//! - features: CSV without header, one row per point
//! - clouds: XYZ text, three numbers per line separated by whitespace
//! - labels and supervision: CSV `node_index,label` with header, 0-based
//!   node index and 1-based label
//! - trace: CSV `iter,primal,dual,binary_diff,u_change`
//! - relaxed labels: CSV without header, N rows of n values
//! - edges: CSV `src,dst,weight`, one line per directed edge
//! - point features: CSV `x,y,z,l1,l2,l3,v1x,v1y,v1z,h*`

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::graph::Graph;
use crate::region::LocalGeometry;
use crate::solver::TraceEntry;
use crate::{Error, Result};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn rows_to_matrix(path: &Path, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || dim == 0 {
        return Err(parse_err(path, "no data"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != dim) {
        return Err(parse_err(path, format!("row {} has {} columns, expected {dim}", i + 1, rows[i].len())));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, dim), rows.into_iter().flatten().collect()).map_err(|e| parse_err(path, e.to_string()))
}

fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(path, format!("line {line}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, format!("line {line}: non-finite value")));
    }
    Ok(v)
}

pub fn read_features_csv(path: &Path) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| parse_f64(path, i + 1, s)).collect::<Result<Vec<_>>>()?);
    }
    rows_to_matrix(path, rows)
}

pub fn write_features_csv(path: &Path, m: ArrayView2<'_, f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an XYZ cloud; blank lines and lines starting with `#` are skipped,
/// columns after the third are ignored.
pub fn read_xyz(path: &Path) -> Result<Array2<f64>> {
    let f = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if fields.len() < 3 {
            return Err(parse_err(path, format!("line {}: expected three coordinates", i + 1)));
        }
        rows.push(fields[..3].iter().map(|s| parse_f64(path, i + 1, s)).collect::<Result<Vec<_>>>()?);
    }
    rows_to_matrix(path, rows)
}

/// Writes `x y z` lines, followed by a 1-based label column when given.
pub fn write_xyz(path: &Path, points: ArrayView2<'_, f64>, labels: Option<&[usize]>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, p) in points.rows().into_iter().enumerate() {
        match labels {
            Some(l) => writeln!(w, "{} {} {} {}", p[0], p[1], p[2], l[i] + 1)?,
            None => writeln!(w, "{} {} {}", p[0], p[1], p[2])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads `node_index,label` pairs; returns `(node, class)` with 0-based
/// classes.
pub fn read_labels_csv(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(parse_err(path, format!("line {line}: expected node_index,label")));
        }
        let node: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(path, format!("line {line}: bad node index '{}'", &rec[0])))?;
        let label: usize = rec[1]
            .parse()
            .map_err(|_| parse_err(path, format!("line {line}: bad label '{}'", &rec[1])))?;
        if label == 0 {
            return Err(parse_err(path, format!("line {line}: labels start at 1")));
        }
        out.push((node, label - 1));
    }
    Ok(out)
}

/// Reads a complete labelling: every node from 0 to N−1 exactly once.
pub fn read_label_vector(path: &Path) -> Result<Vec<usize>> {
    let pairs = read_labels_csv(path)?;
    let mut out = vec![usize::MAX; pairs.len()];
    for &(x, l) in &pairs {
        if x >= out.len() || out[x] != usize::MAX {
            return Err(parse_err(path, format!("node {x} missing, repeated or out of range")));
        }
        out[x] = l;
    }
    Ok(out)
}

pub fn write_labels_csv(path: &Path, labels: &[usize]) -> Result<()> {
    write_pairs_csv(path, labels.iter().copied().enumerate())
}

/// Writes `(node, class)` pairs with 0-based classes.
pub fn write_pairs_csv(path: &Path, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node_index", "label"])?;
    for (x, l) in pairs {
        w.write_record([x.to_string(), (l + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "primal", "dual", "binary_diff", "u_change"])?;
    for t in trace {
        w.write_record([
            t.iter.to_string(),
            format!("{:e}", t.primal),
            format!("{:e}", t.dual),
            format!("{:e}", t.binary_diff),
            format!("{:e}", t.u_change),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_u_csv(path: &Path, u: ArrayView2<'_, f64>) -> Result<()> {
    write_features_csv(path, u)
}

pub fn write_edges_csv(path: &Path, g: &Graph) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst", "weight"])?;
    for e in 0..g.n_edges() {
        w.write_record([g.sources()[e].to_string(), g.targets()[e].to_string(), format!("{:e}", g.weights()[e])])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `src,dst,weight` lines written by [`write_edges_csv`].
pub fn read_edges_csv(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 3 {
            return Err(parse_err(path, format!("line {line}: expected src,dst,weight")));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, format!("line {line}: bad index '{s}'")));
        out.push((idx(&rec[0])?, idx(&rec[1])?, parse_f64(path, line, &rec[2])?));
    }
    Ok(out)
}

pub fn write_point_features_csv(path: &Path, points: ArrayView2<'_, f64>, geom: &LocalGeometry) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z", "l1", "l2", "l3", "v1x", "v1y", "v1z", "h*"])?;
    for (i, p) in points.rows().into_iter().enumerate() {
        let l = geom.lambda[i];
        let v = geom.vectors[i][0];
        let vals = [p[0], p[1], p[2], l[0], l[1], l[2], v[0], v[1], v[2], geom.h_star[i]];
        w.write_record(vals.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn features_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let m = array![[0.1, -2.5e-7], [3.0, 1.0 / 3.0]];
        write_features_csv(&p, m.view()).unwrap();
        assert_eq!(read_features_csv(&p).unwrap(), m);
    }

    #[test]
    fn labels_are_one_based_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        write_labels_csv(&p, &[0, 2, 1]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "node_index,label\n0,1\n1,3\n2,2\n");
        assert_eq!(read_label_vector(&p).unwrap(), vec![0, 2, 1]);
    }

    #[test]
    fn ragged_and_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_features_csv(&p).is_err());
        std::fs::write(&p, "1,x\n").unwrap();
        assert!(matches!(read_features_csv(&p), Err(Error::Parse { .. })));
        std::fs::write(&p, "node_index,label\n0,0\n").unwrap();
        assert!(read_labels_csv(&p).is_err());
    }

    #[test]
    fn xyz_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.xyz");
        std::fs::write(&p, "# cloud\n1 2 3\n\n4\t5 6 99\n").unwrap();
        assert_eq!(read_xyz(&p).unwrap(), array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let q = dir.path().join("d.xyz");
        write_xyz(&q, array![[1.5, 2.0, 3.0]].view(), None).unwrap();
        assert_eq!(read_xyz(&q).unwrap(), array![[1.5, 2.0, 3.0]]);
    }

    #[test]
    fn edges_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        let g = Graph::from_undirected(3, [(0, 1, 0.25), (1, 2, 0.5)]).unwrap();
        write_edges_csv(&p, &g).unwrap();
        let back = Graph::from_directed(3, read_edges_csv(&p).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}

//! Spectrum of the relaxed multi-trace operator: the predicted two-point
//! limit spectrum, dense eigenvalue computation with residual checks, and
//! cluster statistics for comparing the two.

use crate::linalg::{eigen_residual, eigenvalues, LinalgError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

type CMat = DMatrix<Complex64>;

/// The two points `alpha - 1 +- sqrt(1 + alpha^2)` (principal branch)
/// making up the limit spectrum of the relaxed operator.
pub fn predicted_eigenvalues(alpha: Complex64) -> [Complex64; 2] {
    let root = (Complex64::new(1.0, 0.0) + alpha * alpha).sqrt();
    let base = alpha - Complex64::new(1.0, 0.0);
    [base + root, base - root]
}

/// Eigenvalues sorted lexicographically by (re, im), with inverse
/// iteration residuals spot-checked on a deterministic sample.
pub fn eigenvalues_checked(a: &CMat, checks: usize) -> Result<Vec<Complex64>, LinalgError> {
    let mut eigs = eigenvalues(a)?;
    eigs.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
    if checks > 0 && !eigs.is_empty() {
        let stride = (eigs.len() / checks).max(1);
        for e in eigs.iter().step_by(stride) {
            let r = eigen_residual(a, *e)?;
            let scale = crate::linalg::max_singular_value(a).max(1.0);
            if r > 1e-7 * scale {
                return Err(LinalgError::NoConvergence);
            }
        }
    }
    Ok(eigs)
}

/// Distance statistics of a computed spectrum against a set of predicted
/// cluster centers.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub centers: Vec<[f64; 2]>,
    /// Fraction of eigenvalues within each radius of the nearest center.
    pub fractions: Vec<(f64, f64)>,
    pub median_dist: f64,
    pub p90_dist: f64,
    pub max_dist: f64,
    /// Eigenvalue count assigned to each center.
    pub counts: Vec<usize>,
}

pub const REPORT_RADII: [f64; 3] = [0.05, 0.1, 0.2];

pub fn cluster_report(eigs: &[Complex64], centers: &[Complex64]) -> ClusterReport {
    assert!(!eigs.is_empty() && !centers.is_empty());
    let mut dists: Vec<f64> = Vec::with_capacity(eigs.len());
    let mut counts = vec![0usize; centers.len()];
    for e in eigs {
        let (k, d) = centers
            .iter()
            .enumerate()
            .map(|(k, c)| (k, (e - c).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        counts[k] += 1;
        dists.push(d);
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let fractions = REPORT_RADII
        .iter()
        .map(|&r| {
            let n = dists.iter().filter(|&&d| d <= r).count();
            (r, n as f64 / dists.len() as f64)
        })
        .collect();
    let pick = |q: f64| dists[((dists.len() - 1) as f64 * q).round() as usize];
    ClusterReport {
        centers: centers.iter().map(|c| [c.re, c.im]).collect(),
        fractions,
        median_dist: pick(0.5),
        p90_dist: pick(0.9),
        max_dist: *dists.last().unwrap(),
        counts,
    }
}

/// Two cluster representatives by Lloyd iteration with a deterministic
/// farthest-pair start, returning the medoids (actual eigenvalues closest
/// to the final means).
pub fn two_medoids(eigs: &[Complex64]) -> [Complex64; 2] {
    assert!(eigs.len() >= 2);
    let mut best = (0usize, 1usize, -1.0f64);
    for i in 0..eigs.len() {
        for j in i + 1..eigs.len() {
            let d = (eigs[i] - eigs[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    let mut centers = [eigs[best.0], eigs[best.1]];
    for _ in 0..100 {
        let mut sums = [Complex64::new(0.0, 0.0); 2];
        let mut ns = [0usize; 2];
        for e in eigs {
            let k = if (e - centers[0]).norm() <= (e - centers[1]).norm() { 0 } else { 1 };
            sums[k] += e;
            ns[k] += 1;
        }
        let mut next = centers;
        for k in 0..2 {
            if ns[k] > 0 {
                next[k] = sums[k] / ns[k] as f64;
            }
        }
        if (next[0] - centers[0]).norm() + (next[1] - centers[1]).norm() < 1e-14 {
            centers = next;
            break;
        }
        centers = next;
    }
    let medoid = |c: Complex64| {
        *eigs
            .iter()
            .min_by(|a, b| (*a - c).norm().partial_cmp(&(*b - c).norm()).unwrap())
            .unwrap()
    };
    [medoid(centers[0]), medoid(centers[1])]
}

/// Writes eigenvalues as a two-column CSV with header `re,im`, sorted
/// lexicographically, using the shortest round-trip float formatting.
pub fn write_eigenvalues_csv(path: &Path, eigs: &[Complex64]) -> std::io::Result<()> {
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "re,im")?;
    for e in sorted {
        writeln!(f, "{},{}", e.re, e.im)?;
    }
    f.flush()
}

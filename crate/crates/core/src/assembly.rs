//! Galerkin assembly of the multi-trace duality pairing and the
//! subdomain Calderon operators.
//!
//! Degrees of freedom are continuous piecewise linear nodal values,
//! ordered subdomain by subdomain, with all Dirichlet values of a
//! subdomain followed by all its Neumann values. Interface nodes are
//! shared between the two adjacent subdomains, so the transmission map
//! becomes an exact signed permutation of degrees of freedom.

use crate::geometry::Mesh;
use crate::linalg::LinalgError;
use crate::quadrature::{panel_pair_integrals, QuadRules};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

type CMat = DMatrix<Complex64>;

/// Maps (subdomain, local node, trace kind) to a global index.
#[derive(Clone, Debug)]
pub struct DofMap {
    offsets: Vec<usize>,
    counts: Vec<usize>,
    pub dim: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let mut offsets = Vec::with_capacity(mesh.boundaries.len());
        let mut counts = Vec::with_capacity(mesh.boundaries.len());
        let mut dim = 0;
        for b in &mesh.boundaries {
            offsets.push(dim);
            counts.push(b.nodes.len());
            dim += 2 * b.nodes.len();
        }
        DofMap { offsets, counts, dim }
    }

    pub fn dirichlet(&self, j: usize, local: usize) -> usize {
        debug_assert!(local < self.counts[j]);
        self.offsets[j] + local
    }

    pub fn neumann(&self, j: usize, local: usize) -> usize {
        debug_assert!(local < self.counts[j]);
        self.offsets[j] + self.counts[j] + local
    }

    /// Number of boundary nodes of subdomain `j`.
    pub fn nodes(&self, j: usize) -> usize {
        self.counts[j]
    }

    pub fn subdomain_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j] + 2 * self.counts[j]
    }
}

/// Skew-symmetric duality pairing matrix `M` of the multi-trace space:
/// `M[w, u]` pairs the Dirichlet part of the trial trace with the Neumann
/// part of the test trace and vice versa, through the boundary mass
/// matrix of each subdomain.
pub fn assemble_duality(mesh: &Mesh) -> CMat {
    let dofs = DofMap::new(mesh);
    let mut m = CMat::zeros(dofs.dim, dofs.dim);
    for (j, b) in mesh.boundaries.iter().enumerate() {
        for &(pid, _) in &b.panels {
            let p = &mesh.panels[pid];
            let len = p.geom.len();
            for (al, &ga) in p.nodes.iter().enumerate() {
                let ia = b.local_index(ga);
                for (be, &gb) in p.nodes.iter().enumerate() {
                    let ib = b.local_index(gb);
                    let mass = if al == be { len / 3.0 } else { len / 6.0 };
                    m[(dofs.dirichlet(j, ia), dofs.neumann(j, ib))] -= Complex64::new(mass, 0.0);
                    m[(dofs.neumann(j, ia), dofs.dirichlet(j, ib))] += Complex64::new(mass, 0.0);
                }
            }
        }
    }
    m
}

const SIGMA: [f64; 2] = [-1.0, 1.0];

/// Calderon block of one subdomain, indexed by its own local degrees of
/// freedom (Dirichlet block first). `B[w, u]` is the duality pairing of
/// `A_j u` against the test trace `w`.
pub fn assemble_subdomain_calderon(mesh: &Mesh, j: usize, rules: &QuadRules) -> CMat {
    let b = &mesh.boundaries[j];
    let kappa = b.kappa;
    let nn = b.nodes.len();
    let dim = 2 * nn;
    let chunks: Vec<Vec<(usize, usize, Complex64)>> = b
        .panels
        .par_chunks(8)
        .map(|test_panels| {
            let mut trip = Vec::new();
            for &(pid_x, sx) in test_panels {
                let px = &mesh.panels[pid_x];
                let nx = px.geom.normal();
                let lx = px.geom.len();
                for &(pid_y, sy) in &b.panels {
                    let py = &mesh.panels[pid_y];
                    let ny = py.geom.normal();
                    let ly = py.geom.len();
                    let ints = panel_pair_integrals(kappa, &px.geom, &py.geom, rules);
                    let nxny = nx[0] * ny[0] + nx[1] * ny[1];
                    #[allow(clippy::needless_range_loop)] // al/be index several tables
                    for al in 0..2 {
                        let ia = b.local_index(px.nodes[al]);
                        for be in 0..2 {
                            let ib = b.local_index(py.nodes[be]);
                            // rows: Dirichlet block 0..nn, Neumann nn..2nn
                            trip.push((nn + ia, nn + ib, 2.0 * ints.slp[al][be]));
                            trip.push((nn + ia, ib, 2.0 * sy * ints.dlp_ny[al][be]));
                            trip.push((ia, nn + ib, -2.0 * sx * ints.dlp_nx[al][be]));
                            let w = SIGMA[al] * SIGMA[be] / (lx * ly) * ints.slp0
                                - kappa * kappa * nxny * ints.slp[al][be];
                            trip.push((ia, ib, -2.0 * sx * sy * w));
                        }
                    }
                }
            }
            trip
        })
        .collect();
    let mut out = CMat::zeros(dim, dim);
    for trip in chunks {
        for (r, c, v) in trip {
            out[(r, c)] += v;
        }
    }
    out
}

/// Block-diagonal Calderon pairing matrix over all subdomains.
pub fn assemble_calderon(mesh: &Mesh, rules: &QuadRules) -> CMat {
    let dofs = DofMap::new(mesh);
    let mut out = CMat::zeros(dofs.dim, dofs.dim);
    for j in 0..mesh.boundaries.len() {
        let block = assemble_subdomain_calderon(mesh, j, rules);
        let r = dofs.subdomain_range(j);
        out.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&block);
    }
    out
}

/// Evaluates the subdomain potential `G_j(v, q)` at a point `x` away from
/// the boundary: `int q(y) G(x-y) + v(y) n_j(y) . grad G(x-y) dy` with the
/// outward normal of the subdomain.
pub fn eval_potential(
    mesh: &Mesh,
    j: usize,
    v: &[Complex64],
    q: &[Complex64],
    x: [f64; 2],
) -> Complex64 {
    use crate::quadrature::gauss_legendre;
    use crate::specfun::{green_grad_radial, green_value};
    let b = &mesh.boundaries[j];
    let kappa = b.kappa;
    let rule = gauss_legendre(16);
    let mut u = Complex64::new(0.0, 0.0);
    for &(pid, sign) in &b.panels {
        let p = &mesh.panels[pid];
        let n = p.geom.normal();
        let len = p.geom.len();
        let i0 = b.local_index(p.nodes[0]);
        let i1 = b.local_index(p.nodes[1]);
        for (s, w) in rule.0.iter().zip(rule.1.iter()) {
            let y = p.geom.point(*s);
            let d = [x[0] - y[0], x[1] - y[1]];
            let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let qv = q[i0] * (1.0 - s) + q[i1] * *s;
            let vv = v[i0] * (1.0 - s) + v[i1] * *s;
            let grad_n = green_grad_radial(kappa, r) / r * (sign * (n[0] * d[0] + n[1] * d[1]));
            u += w * len * (qv * green_value(kappa, r) + vv * grad_n);
        }
    }
    u
}

/// Discrete operator `M^{-1} B` acting on trace coefficient vectors.
pub fn operator_from_pairing(m: &CMat, b: &CMat) -> Result<CMat, LinalgError> {
    m.clone().lu().solve(b).ok_or(LinalgError::Singular)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub dim: usize,
    pub role: String,
    pub bytes: usize,
}

/// Writes a square complex matrix as little-endian binary: a 16-byte
/// header (dimension as u64, then an 8-byte ASCII role tag) followed by
/// row-major interleaved re/im f64 pairs. A JSON sidecar with the same
/// path plus `.json` describes the layout.
pub fn write_matrix(path: &Path, m: &CMat, role: &str) -> std::io::Result<()> {
    let dim = m.nrows();
    let mut tag = [b' '; 8];
    for (i, ch) in role.bytes().take(8).enumerate() {
        tag[i] = ch;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&(dim as u64).to_le_bytes())?;
    f.write_all(&tag)?;
    for i in 0..dim {
        for jj in 0..m.ncols() {
            f.write_all(&m[(i, jj)].re.to_le_bytes())?;
            f.write_all(&m[(i, jj)].im.to_le_bytes())?;
        }
    }
    f.flush()?;
    let sidecar = MatrixSidecar {
        dim,
        role: role.to_string(),
        bytes: 16 + dim * m.ncols() * 16,
    };
    let mut sp = path.as_os_str().to_owned();
    sp.push(".json");
    std::fs::write(sp, serde_json::to_string_pretty(&sidecar).unwrap())
}

pub fn read_matrix(path: &Path) -> std::io::Result<(CMat, String)> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut header = [0u8; 16];
    f.read_exact(&mut header)?;
    let dim = u64::from_le_bytes(header[..8].try_into().unwrap()) as usize;
    let role = String::from_utf8_lossy(&header[8..]).trim_end().to_string();
    let mut buf = vec![0u8; dim * dim * 16];
    f.read_exact(&mut buf)?;
    let mut m = CMat::zeros(dim, dim);
    for i in 0..dim {
        for jj in 0..dim {
            let o = (i * dim + jj) * 16;
            m[(i, jj)] = Complex64::new(
                f64::from_le_bytes(buf[o..o + 8].try_into().unwrap()),
                f64::from_le_bytes(buf[o + 8..o + 16].try_into().unwrap()),
            );
        }
    }
    Ok((m, role))
}

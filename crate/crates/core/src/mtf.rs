//! The relaxed local multi-trace system: transmission permutation,
//! operator assembly, right-hand sides, and solves.
//!
//! With the shared-node discretization the transmission map is an exact
//! signed permutation `P` of the degrees of freedom: Dirichlet values on
//! the two sides of an interface are swapped, Neumann values are swapped
//! with a sign flip. The relaxed operator is
//! `L_alpha = A - (1 - alpha) Id - alpha Pi`, assembled in duality
//! pairing form as `B_A - (1 - alpha) M - alpha M P`.

use crate::assembly::{
    assemble_calderon, assemble_duality, eval_potential, operator_from_pairing, DofMap,
};
use crate::geometry::{Mesh, Partition};
use crate::linalg::{gmres, LinalgError};
use crate::quadrature::QuadRules;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Signed permutation exchanging the two trace slots of every interface:
/// `+1` between opposite Dirichlet dofs, `-1` between opposite Neumann
/// dofs. It is an involution.
pub fn transmission_permutation(mesh: &Mesh, partition: &Partition) -> CMat {
    let dofs = DofMap::new(mesh);
    let mut p = CMat::zeros(dofs.dim, dofs.dim);
    for (c, spec) in partition.curves.iter().enumerate() {
        let [ji, jo] = spec.between;
        let (s, e) = mesh.curve_ranges[c];
        let mut seen = vec![];
        for pid in s..e {
            seen.extend_from_slice(&mesh.panels[pid].nodes);
        }
        seen.sort_unstable();
        seen.dedup();
        for gid in seen {
            let li = mesh.boundaries[ji].local_index(gid);
            let lo = mesh.boundaries[jo].local_index(gid);
            p[(dofs.dirichlet(ji, li), dofs.dirichlet(jo, lo))] = ONE;
            p[(dofs.dirichlet(jo, lo), dofs.dirichlet(ji, li))] = ONE;
            p[(dofs.neumann(ji, li), dofs.neumann(jo, lo))] = -ONE;
            p[(dofs.neumann(jo, lo), dofs.neumann(ji, li))] = -ONE;
        }
    }
    p
}

/// Assembled discrete multi-trace problem.
pub struct MtfSystem {
    pub partition: Partition,
    pub mesh: Mesh,
    pub dofs: DofMap,
    /// Duality pairing matrix.
    pub m: CMat,
    /// Transmission permutation.
    pub p: CMat,
    /// Block-diagonal Calderon pairing matrix.
    pub b_a: CMat,
}

impl MtfSystem {
    pub fn assemble(partition: Partition, rules: &QuadRules) -> Result<Self, crate::geometry::GeometryError> {
        let mesh = partition.mesh()?;
        let dofs = DofMap::new(&mesh);
        let m = assemble_duality(&mesh);
        let p = transmission_permutation(&mesh, &partition);
        let b_a = assemble_calderon(&mesh, rules);
        Ok(MtfSystem { partition, mesh, dofs, m, p, b_a })
    }

    /// Pairing form of `A - beta Id - alpha Pi`.
    pub fn pairing_matrix(&self, beta: Complex64, alpha: Complex64) -> CMat {
        &self.b_a - &self.m * beta - (&self.m * &self.p) * alpha
    }

    /// Pairing form of the relaxed local multi-trace operator `L_alpha`.
    pub fn relaxed(&self, alpha: Complex64) -> CMat {
        self.pairing_matrix(ONE - alpha, alpha)
    }

    /// Turns a pairing matrix into the operator `M^{-1} B`.
    pub fn operator(&self, b: &CMat) -> Result<CMat, LinalgError> {
        operator_from_pairing(&self.m, b)
    }

    /// Splits the Calderon pairing matrix into its interface-diagonal
    /// part `B_D` (test and trial nodes on the same curve) and the
    /// off-diagonal remainder `B_T`.
    pub fn split_diag(&self) -> (CMat, CMat) {
        let mut b_d = CMat::zeros(self.dofs.dim, self.dofs.dim);
        let mut b_t = self.b_a.clone();
        for (j, b) in self.mesh.boundaries.iter().enumerate() {
            let nn = b.nodes.len();
            for (li, &gi) in b.nodes.iter().enumerate() {
                for (lj, &gj) in b.nodes.iter().enumerate() {
                    if self.mesh.node_curve[gi] != self.mesh.node_curve[gj] {
                        continue;
                    }
                    for (r, c) in [
                        (self.dofs.dirichlet(j, li), self.dofs.dirichlet(j, lj)),
                        (self.dofs.dirichlet(j, li), self.dofs.neumann(j, lj)),
                        (self.dofs.neumann(j, li), self.dofs.dirichlet(j, lj)),
                        (self.dofs.neumann(j, li), self.dofs.neumann(j, lj)),
                    ] {
                        b_d[(r, c)] = self.b_a[(r, c)];
                        b_t[(r, c)] = Complex64::new(0.0, 0.0);
                    }
                }
            }
            let _ = nn;
        }
        (b_d, b_t)
    }

    /// Nodal traces of the incident plane wave `exp(i kappa_0 d . x)` on
    /// the exterior subdomain slot; all other slots are zero.
    pub fn incident_plane_wave(&self, dir: [f64; 2]) -> CVec {
        let k0 = self.mesh.boundaries[0].kappa;
        let mut u = CVec::zeros(self.dofs.dim);
        for (li, &gid) in self.mesh.boundaries[0].nodes.iter().enumerate() {
            let x = self.mesh.nodes[gid];
            let phase = Complex64::new(0.0, k0 * (dir[0] * x[0] + dir[1] * x[1])).exp();
            // outward normal of the exterior subdomain is the reversed
            // curve normal
            let n = self.mesh.nodal_normals[gid];
            let dn = -(dir[0] * n[0] + dir[1] * n[1]);
            u[self.dofs.dirichlet(0, li)] = phase;
            u[self.dofs.neumann(0, li)] = Complex64::new(0.0, k0 * dn) * phase;
        }
        u
    }

    /// Right-hand side in pairing form: `(B_A - M) u_inc`.
    pub fn rhs(&self, u_inc: &CVec) -> CVec {
        &self.b_a * u_inc - &self.m * u_inc
    }

    /// Direct solve of `L_alpha u = (A - Id) u_inc`.
    pub fn solve_direct(&self, alpha: Complex64, u_inc: &CVec) -> Result<CVec, LinalgError> {
        let b = self.relaxed(alpha);
        b.lu().solve(&self.rhs(u_inc)).ok_or(LinalgError::Singular)
    }

    /// GMRES solve of the same system; returns the solution and the
    /// relative residual history.
    pub fn solve_gmres(
        &self,
        alpha: Complex64,
        u_inc: &CVec,
        tol: f64,
        max_iter: usize,
    ) -> Result<(CVec, Vec<f64>), LinalgError> {
        let b = self.relaxed(alpha);
        gmres(|v| &b * v, &self.rhs(u_inc), tol, max_iter)
    }

    /// Total field at `x`: the potential of the local traces, plus the
    /// incident wave contributions in the exterior subdomain.
    pub fn total_field(&self, sol: &CVec, u_inc: &CVec, dir: [f64; 2], x: [f64; 2]) -> Complex64 {
        let j = self.partition.locate(x);
        let nn = self.dofs.nodes(j);
        let mut v = Vec::with_capacity(nn);
        let mut q = Vec::with_capacity(nn);
        for li in 0..nn {
            let (di, ni) = (self.dofs.dirichlet(j, li), self.dofs.neumann(j, li));
            if j == 0 {
                v.push(sol[di] - u_inc[di]);
                q.push(sol[ni] - u_inc[ni]);
            } else {
                v.push(sol[di]);
                q.push(sol[ni]);
            }
        }
        let pot = eval_potential(&self.mesh, j, &v, &q, x);
        if j == 0 {
            let k0 = self.mesh.boundaries[0].kappa;
            pot + Complex64::new(0.0, k0 * (dir[0] * x[0] + dir[1] * x[1])).exp()
        } else {
            pot
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{single_circle_partition, square_circle_partition};

    fn two_domain_system(kappa0: f64, kappa1: f64, h: f64) -> MtfSystem {
        let part = single_circle_partition(kappa0, kappa1, 1.0, h);
        MtfSystem::assemble(part, &QuadRules::new(6)).unwrap()
    }

    #[test]
    fn permutation_is_signed_involution() {
        let sys = two_domain_system(1.0, 2.0, 0.3);
        let n = sys.dofs.dim;
        // exactly one +-1 per row
        for i in 0..n {
            let mut nz = 0;
            for j in 0..n {
                let v = sys.p[(i, j)];
                if v != Complex64::new(0.0, 0.0) {
                    nz += 1;
                    assert!(v == ONE || v == -ONE);
                }
            }
            assert_eq!(nz, 1, "row {i}");
        }
        let p2 = &sys.p * &sys.p;
        assert_eq!(p2, CMat::identity(n, n));
        // M P is symmetric, exactly
        let mp = &sys.m * &sys.p;
        assert_eq!(mp, mp.transpose());
    }

    #[test]
    fn single_trace_vectors_are_fixed_by_p() {
        let sys = two_domain_system(1.0, 2.0, 0.3);
        // build a single-trace vector: equal Dirichlet data, opposite
        // Neumann data on the two sides of the interface
        let mut u = CVec::zeros(sys.dofs.dim);
        let b0 = &sys.mesh.boundaries[0];
        for (li, &gid) in b0.nodes.iter().enumerate() {
            let x = sys.mesh.nodes[gid];
            let val = Complex64::new(x[0], x[1]);
            let l1 = sys.mesh.boundaries[1].local_index(gid);
            u[sys.dofs.dirichlet(0, li)] = val;
            u[sys.dofs.dirichlet(1, l1)] = val;
            u[sys.dofs.neumann(0, li)] = 2.0 * val;
            u[sys.dofs.neumann(1, l1)] = -2.0 * val;
        }
        assert_eq!(&sys.p * &u, u);
    }

    #[test]
    fn relaxed_matrix_combination() {
        let sys = two_domain_system(1.0, 1.5, 0.4);
        let alpha = Complex64::new(0.5, 0.0);
        let want = &sys.b_a - &sys.m * (ONE - alpha) - (&sys.m * &sys.p) * alpha;
        assert_eq!(sys.relaxed(alpha), want);
    }

    #[test]
    fn two_domain_has_no_cross_interface_part() {
        let sys = two_domain_system(1.0, 2.0, 0.3);
        let (b_d, b_t) = sys.split_diag();
        assert_eq!(b_t, CMat::zeros(sys.dofs.dim, sys.dofs.dim));
        assert_eq!(b_d, sys.b_a);
    }

    #[test]
    fn three_domain_cross_part_couples_middle_subdomain_only() {
        let part = square_circle_partition([1.0, 1.0, 1.0], 0.4);
        let sys = MtfSystem::assemble(part, &QuadRules::new(3)).unwrap();
        let (_, b_t) = sys.split_diag();
        // nonzero entries only inside the subdomain-1 block, between
        // different curves
        let r1 = sys.dofs.subdomain_range(1);
        let mut nonzero = 0usize;
        for i in 0..sys.dofs.dim {
            for j in 0..sys.dofs.dim {
                if b_t[(i, j)] != Complex64::new(0.0, 0.0) {
                    nonzero += 1;
                    assert!(r1.contains(&i) && r1.contains(&j), "entry ({i},{j})");
                }
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn homogeneous_medium_recovers_incident_wave() {
        // equal wavenumbers: the exact solution is the incident wave, so
        // the solved traces must match its interpolated traces.
        let kappa = 1.0;
        let sys = two_domain_system(kappa, kappa, 0.05);
        let dir = [1.0, 0.0];
        let u_inc = sys.incident_plane_wave(dir);
        let alpha = Complex64::new(0.5, 0.0);
        let sol = sys.solve_direct(alpha, &u_inc).unwrap();
        // expected: subdomain 0 traces = incident, subdomain 1 = matching
        // single trace (Dirichlet equal, Neumann opposite)
        let mut want = u_inc.clone();
        let b0 = &sys.mesh.boundaries[0];
        for (li, &gid) in b0.nodes.iter().enumerate() {
            let l1 = sys.mesh.boundaries[1].local_index(gid);
            want[sys.dofs.dirichlet(1, l1)] = u_inc[sys.dofs.dirichlet(0, li)];
            want[sys.dofs.neumann(1, l1)] = -u_inc[sys.dofs.neumann(0, li)];
        }
        let rel = (&sol - &want).norm() / want.norm();
        assert!(rel < 5e-3, "trace error {rel}");
        // and the reconstructed total field is the plane wave
        for x in [[0.0, 0.0], [0.5, 0.2], [1.7, -0.4]] {
            let got = sys.total_field(&sol, &u_inc, dir, x);
            let want = Complex64::new(0.0, kappa * x[0]).exp();
            assert!((got - want).norm() < 5e-3, "field at {x:?}: {got} vs {want}");
        }
    }

    #[test]
    fn gmres_matches_direct_solve() {
        let sys = two_domain_system(1.0, 2.0, 0.2);
        let u_inc = sys.incident_plane_wave([0.0, 1.0]);
        let alpha = Complex64::new(0.5, 0.0);
        let direct = sys.solve_direct(alpha, &u_inc).unwrap();
        let (iter, hist) = sys.solve_gmres(alpha, &u_inc, 1e-10, 400).unwrap();
        assert!(hist.last().unwrap() < &1e-10);
        assert!((&direct - &iter).norm() < 1e-7 * direct.norm());
    }

    #[test]
    fn invertibility_frontier_at_beta_squared_minus_alpha_squared_one() {
        // A + alpha P + beta Id is singular exactly on beta^2 - alpha^2 = 1:
        // the smallest singular value of the discrete pairing matrix
        // B_A - beta M - alpha MP dips hard at (alpha, beta) = (0, +-1)
        // relative to the regular point (0, 0.8).
        let sys = two_domain_system(1.0, 1.0, 0.2);
        let smin = |beta: f64| {
            let b = sys.pairing_matrix(Complex64::new(beta, 0.0), Complex64::new(0.0, 0.0));
            crate::linalg::min_singular_value(&b).unwrap()
        };
        let regular = smin(0.8);
        for beta in [1.0, -1.0] {
            let dip = smin(beta);
            assert!(dip * 10.0 < regular, "beta={beta}: {dip} vs regular {regular}");
        }
    }
}

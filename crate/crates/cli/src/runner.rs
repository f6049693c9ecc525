//! Experiment execution: task dispatch, artifact writing, and the run
//! manifest with checksums.

use crate::config::{ExperimentConfig, Task};
use crate::plot::{plot_script, Panel};
use mtf2d::linalg::spectral_norm;
use mtf2d::mtf::MtfSystem;
use mtf2d::quadrature::QuadRules;
use mtf2d::spectrum::{
    cluster_report, eigenvalues_checked, predicted_eigenvalues, write_eigenvalues_csv,
    ClusterReport,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

type CMat = DMatrix<Complex64>;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn io_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Serialize)]
pub struct Artifact {
    pub task: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub version: String,
    pub quadrature_order: usize,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub timings_ms: BTreeMap<String, u128>,
}

#[derive(Serialize)]
struct SpectrumRecord {
    alpha: String,
    h: f64,
    dim: usize,
    csv: String,
    predicted: [[f64; 2]; 2],
    clusters: ClusterReport,
}

#[derive(Serialize)]
struct IdentityRecord {
    name: String,
    /// (h, residual) pairs, coarse to fine.
    residuals: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_ratio: Option<f64>,
    status: String,
}

#[derive(Serialize)]
struct FieldSample {
    x: [f64; 2],
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct SolveRecord {
    alpha: String,
    h: f64,
    dim: usize,
    gmres_iterations: usize,
    gmres_relative_residual: f64,
    /// iterations / dimension, logged against the fast-convergence bound
    iterations_fraction: f64,
    direct_vs_gmres: f64,
    samples: Vec<FieldSample>,
}

pub struct Runner {
    cfg: ExperimentConfig,
    out: PathBuf,
    rules: QuadRules,
    order: usize,
    systems: BTreeMap<u64, MtfSystem>,
    spectra: BTreeMap<(usize, u64), Vec<Complex64>>,
    artifacts: Vec<Artifact>,
    timings: BTreeMap<String, u128>,
}

fn h_key(h: f64) -> u64 {
    h.to_bits()
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, out: &Path) -> Result<Self, CliError> {
        let order = match std::env::var("MTF_QUAD_ORDER") {
            Ok(s) => s
                .parse::<usize>()
                .map_err(|_| CliError::Validation(format!("bad MTF_QUAD_ORDER '{s}'")))?,
            Err(_) => 6,
        };
        std::fs::create_dir_all(out).map_err(io_err)?;
        Ok(Runner {
            cfg,
            out: out.to_path_buf(),
            rules: QuadRules::new(order),
            order,
            systems: BTreeMap::new(),
            spectra: BTreeMap::new(),
            artifacts: Vec::new(),
            timings: BTreeMap::new(),
        })
    }

    fn system(&mut self, h: f64) -> Result<&MtfSystem, CliError> {
        if !self.systems.contains_key(&h_key(h)) {
            let part = self.cfg.partition(h).map_err(CliError::Validation)?;
            let sys = MtfSystem::assemble(part, &self.rules)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            self.systems.insert(h_key(h), sys);
        }
        Ok(&self.systems[&h_key(h)])
    }

    fn spectrum_of(&mut self, ai: usize, h: f64) -> Result<&[Complex64], CliError> {
        let key = (ai, h_key(h));
        if !self.spectra.contains_key(&key) {
            let alpha = self.cfg.alpha[ai].value();
            let sys = self.system(h)?;
            let op =
                sys.operator(&sys.relaxed(alpha)).map_err(|e| CliError::Numerical(e.to_string()))?;
            let eigs =
                eigenvalues_checked(&op, 4).map_err(|e| CliError::Numerical(e.to_string()))?;
            self.spectra.insert(key, eigs);
        }
        Ok(&self.spectra[&key])
    }

    fn write_artifact(&mut self, task: &str, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        let mut f = std::fs::File::create(&path).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        let hash = Sha256::digest(bytes);
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        self.artifacts.push(Artifact {
            task: task.to_string(),
            path: name.to_string(),
            sha256: hex,
        });
        Ok(())
    }

    /// Records an artifact that was already written to the output
    /// directory, checksumming its on-disk bytes.
    fn register_artifact(&mut self, task: &str, name: &str) -> Result<(), CliError> {
        let bytes = std::fs::read(self.out.join(name)).map_err(io_err)?;
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.artifacts.push(Artifact {
            task: task.to_string(),
            path: name.to_string(),
            sha256: hex,
        });
        Ok(())
    }

    fn json_artifact<T: Serialize>(&mut self, task: &str, name: &str, v: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).map_err(io_err)?;
        text.push('\n');
        self.write_artifact(task, name, text.as_bytes())
    }

    /// Precompute all spectra of the (alpha, h) grid, optionally with a
    /// bounded worker pool; results land in the cache in deterministic
    /// order.
    fn precompute_spectra(&mut self, parallel: usize) -> Result<(), CliError> {
        let grid: Vec<(usize, f64)> = (0..self.cfg.alpha.len())
            .flat_map(|ai| self.cfg.h.iter().map(move |&h| (ai, h)))
            .collect();
        for &(_, h) in &grid {
            self.system(h)?;
        }
        if parallel <= 1 || grid.len() <= 1 {
            for &(ai, h) in &grid {
                self.spectrum_of(ai, h)?;
            }
            return Ok(());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?;
        let cfg = &self.cfg;
        let systems = &self.systems;
        let results: Vec<Result<Vec<Complex64>, String>> = pool.install(|| {
            use rayon::prelude::*;
            grid.par_iter()
                .map(|&(ai, h)| {
                    let sys = &systems[&h_key(h)];
                    let op = sys
                        .operator(&sys.relaxed(cfg.alpha[ai].value()))
                        .map_err(|e| e.to_string())?;
                    eigenvalues_checked(&op, 4).map_err(|e| e.to_string())
                })
                .collect()
        });
        for (&(ai, h), r) in grid.iter().zip(results) {
            self.spectra.insert((ai, h_key(h)), r.map_err(CliError::Numerical)?);
        }
        Ok(())
    }

    fn run_spectrum(&mut self) -> Result<(), CliError> {
        let mut records = Vec::new();
        let mut panels = Vec::new();
        for ai in 0..self.cfg.alpha.len() {
            let alpha = self.cfg.alpha[ai];
            let predicted = predicted_eigenvalues(alpha.value());
            for hi in 0..self.cfg.h.len() {
                let h = self.cfg.h[hi];
                let eigs = self.spectrum_of(ai, h)?.to_vec();
                let name = format!("spectrum_a{}_h{}.csv", alpha.label(), h);
                write_eigenvalues_csv(&self.out.join(&name), &eigs).map_err(io_err)?;
                self.register_artifact("spectrum", &name)?;
                records.push(SpectrumRecord {
                    alpha: alpha.label(),
                    h,
                    dim: eigs.len(),
                    csv: name.clone(),
                    predicted: [
                        [predicted[0].re, predicted[0].im],
                        [predicted[1].re, predicted[1].im],
                    ],
                    clusters: cluster_report(&eigs, &predicted),
                });
                panels.push(Panel {
                    csv: name,
                    title: format!("alpha = {}, h = {}", alpha.label(), h),
                    predicted,
                });
            }
        }
        self.json_artifact("spectrum", "spectrum_report.json", &records)?;
        let script = plot_script("spectrum.png", &panels);
        self.write_artifact("spectrum", "spectrum.gp", script.as_bytes())
    }

    fn run_convergence(&mut self) -> Result<(), CliError> {
        let mut csv = String::from("alpha,h,median,p90,max\n");
        for ai in 0..self.cfg.alpha.len() {
            let alpha = self.cfg.alpha[ai];
            let predicted = predicted_eigenvalues(alpha.value());
            for &h in &self.cfg.h.clone() {
                let eigs = self.spectrum_of(ai, h)?;
                let rep = cluster_report(eigs, &predicted);
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    alpha.label(),
                    h,
                    rep.median_dist,
                    rep.p90_dist,
                    rep.max_dist
                ));
            }
        }
        self.write_artifact("convergence", "convergence.csv", csv.as_bytes())
    }

    fn run_identities(&mut self) -> Result<(), CliError> {
        let hs = self.cfg.h.clone();
        let mut hs_sorted = hs.clone();
        hs_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap()); // coarse -> fine
        let equal_kappa = match &self.cfg.geometry {
            crate::config::GeometryId::Custom { .. } => {
                let sys = self.system(hs_sorted[0])?;
                let k0 = sys.mesh.boundaries[0].kappa;
                sys.mesh.boundaries.iter().all(|b| b.kappa == k0)
            }
            _ => self.cfg.kappas_equal(),
        };
        let mut exact = vec![
            ("mass skew-symmetry", Vec::new()),
            ("transmission involution", Vec::new()),
            ("duality-transmission symmetry", Vec::new()),
        ];
        let mut calderon = Vec::new();
        let mut nilpotent_t = Vec::new();
        let mut anti = Vec::new();
        let mut two_domain = false;
        for &h in &hs_sorted {
            let sys = self.system(h)?;
            let n = sys.dofs.dim;
            two_domain = sys.mesh.boundaries.len() == 2;
            let m_norm = sys.m.norm();
            exact[0].1.push((h, (&sys.m + sys.m.transpose()).norm() / m_norm));
            exact[1].1.push((
                h,
                (&sys.p * &sys.p - CMat::identity(n, n)).norm() / (n as f64).sqrt(),
            ));
            let mp = &sys.m * &sys.p;
            exact[2].1.push((h, (&mp - mp.transpose()).norm() / m_norm));
            let o_a =
                sys.operator(&sys.b_a).map_err(|e| CliError::Numerical(e.to_string()))?;
            let na = spectral_norm(&o_a);
            calderon
                .push((h, spectral_norm(&(&o_a * &o_a - CMat::identity(n, n))) / (na * na)));
            let (_, b_t) = sys.split_diag();
            let o_t = sys.operator(&b_t).map_err(|e| CliError::Numerical(e.to_string()))?;
            let nt = spectral_norm(&o_t);
            nilpotent_t.push((h, if nt < 1e-12 * na { 0.0 } else { spectral_norm(&(&o_t * &o_t)) / (nt * nt) }));
            let c = &sys.p * &o_a + &o_a * &sys.p;
            let nc = spectral_norm(&c);
            anti.push((
                h,
                if two_domain {
                    nc / na
                } else if nc < 1e-12 * na {
                    0.0
                } else {
                    spectral_norm(&(&c * &c)) / (nc * nc)
                },
            ));
        }
        let ratio = |r: &[(f64, f64)]| {
            if r.len() >= 2 && r[r.len() - 2].1 > 0.0 {
                Some(r[r.len() - 1].1 / r[r.len() - 2].1)
            } else {
                None
            }
        };
        let consistency_status = |r: &[(f64, f64)]| {
            let last = r.last().unwrap().1;
            let ok = match ratio(r) {
                Some(q) => last < 0.1 && q < 0.9,
                None => last < 0.1,
            };
            if ok { "pass" } else { "fail" }.to_string()
        };
        let mut records = Vec::new();
        for (name, residuals) in exact {
            let status =
                if residuals.iter().all(|&(_, r)| r <= 1e-13) { "pass" } else { "fail" };
            records.push(IdentityRecord {
                name: name.into(),
                residuals,
                h_ratio: None,
                status: status.into(),
            });
        }
        records.push(IdentityRecord {
            name: "calderon identity".into(),
            h_ratio: ratio(&calderon),
            status: consistency_status(&calderon),
            residuals: calderon,
        });
        records.push(IdentityRecord {
            name: "interface-coupling nilpotency".into(),
            h_ratio: ratio(&nilpotent_t),
            status: if nilpotent_t.iter().all(|&(_, r)| r == 0.0) {
                "pass".into()
            } else {
                consistency_status(&nilpotent_t)
            },
            residuals: nilpotent_t,
        });
        records.push(IdentityRecord {
            name: if two_domain {
                "calderon-transmission anticommutator".into()
            } else {
                "squared calderon-transmission anticommutator".into()
            },
            h_ratio: ratio(&anti),
            status: if equal_kappa {
                consistency_status(&anti)
            } else {
                // the identity requires equal wavenumbers
                "not applicable".into()
            },
            residuals: anti,
        });
        if records.iter().any(|r| r.status == "fail") {
            self.json_artifact("identities", "identities.json", &records)?;
            return Err(CliError::Numerical("identity suite reported failures".into()));
        }
        self.json_artifact("identities", "identities.json", &records)
    }

    fn run_solve(&mut self) -> Result<(), CliError> {
        let dir = [1.0, 0.0];
        let sample_coords = [-1.4, -0.45, 0.45, 1.4];
        let mut records = Vec::new();
        for ai in 0..self.cfg.alpha.len() {
            let alpha = self.cfg.alpha[ai];
            for &h in &self.cfg.h.clone() {
                let sys = self.system(h)?;
                let n = sys.dofs.dim;
                let u_inc = sys.incident_plane_wave(dir);
                let direct = sys
                    .solve_direct(alpha.value(), &u_inc)
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                let (iterated, hist) = sys
                    .solve_gmres(alpha.value(), &u_inc, 1e-8, n)
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                let iters = hist.len() - 1;
                let mut samples = Vec::new();
                for &x in &sample_coords {
                    for &y in &sample_coords {
                        let u = sys.total_field(&direct, &u_inc, dir, [x, y]);
                        samples.push(FieldSample { x: [x, y], re: u.re, im: u.im });
                    }
                }
                records.push(SolveRecord {
                    alpha: alpha.label(),
                    h,
                    dim: n,
                    gmres_iterations: iters,
                    gmres_relative_residual: *hist.last().unwrap(),
                    iterations_fraction: iters as f64 / n as f64,
                    direct_vs_gmres: (&direct - &iterated).norm() / direct.norm(),
                    samples,
                });
            }
        }
        self.json_artifact("solve", "solve.json", &records)
    }

    pub fn run(mut self, parallel: usize) -> Result<RunManifest, CliError> {
        let tasks = self.cfg.tasks.clone();
        if tasks.contains(&Task::Spectrum) || tasks.contains(&Task::Convergence) {
            let t = Instant::now();
            self.precompute_spectra(parallel)?;
            self.timings.insert("eigensolve".into(), t.elapsed().as_millis());
        }
        for task in &tasks {
            let t = Instant::now();
            match task {
                Task::Spectrum => self.run_spectrum()?,
                Task::Convergence => self.run_convergence()?,
                Task::Identities => self.run_identities()?,
                Task::Solve => self.run_solve()?,
            }
            let name = format!("{task:?}").to_lowercase();
            self.timings.insert(name, t.elapsed().as_millis());
        }
        // manifest invariant: every declared task has an artifact entry
        for task in &tasks {
            let name = format!("{task:?}").to_lowercase();
            assert!(
                self.artifacts.iter().any(|a| a.task == name),
                "task {name} produced no artifact"
            );
        }
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            quadrature_order: self.order,
            config: self.cfg.clone(),
            artifacts: self.artifacts,
            timings_ms: self.timings,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(io_err)?;
        text.push('\n');
        std::fs::write(self.out.join("run_manifest.json"), text).map_err(io_err)?;
        Ok(manifest)
    }
}

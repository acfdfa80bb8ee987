//! Task drivers. Each task sweeps the configured Hardy mode counts and
//! produces one [`Row`] per count.

use std::collections::BTreeSet;
use std::time::Instant;

use hsie::assembly::HsieSystem;
use hsie::exterior::{exact_dtn, strip_matrices, trace_schur, transverse_modes};
use hsie::fem::{boundary_matrices, FeSpace};
use hsie::mesh::Mesh2D;
use hsie::segmentation::build_segmentation;
use hsie::hardy::{hardy_ratio, reference_hardy_series};
use hsie::solver_1d::{analytic_trace_homogeneous, solve_scattering_1d, Problem1D, Solution1D};
use hsie::solvers::{normalize_max, shift_invert_eigs, SparseLu};
use hsie::waveguide::{eval_incoming, solve_slab_mode, SlabMode};
use hsie::{HardyParams64, HsieError, C64};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, Metric1D, Problem, Reference, RunConfig, Task};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Hsie(#[from] HsieError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let kind = match self {
            Self::Config(_) => "Config",
            Self::Hsie(e) => e.kind(),
            Self::Io { .. } => "Io",
        };
        json!({ "error": { "kind": kind, "message": self.to_string() } })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub n: usize,
    pub dofs_total: usize,
    pub dofs_radial: usize,
    pub rel_error: f64,
    pub wall_seconds: f64,
}

/// Accumulated seconds per phase.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Phases {
    pub assembly: f64,
    pub factorization: f64,
    pub solve: f64,
    pub eigensolve: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub task: Task,
    pub problem: Option<Problem>,
    pub reference: String,
    pub rows: Vec<Row>,
    /// Least-squares ratio `err(N+1)/err(N)` over the rows above the floor.
    pub geometric_rate: Option<f64>,
    pub phases: Phases,
    pub results: Value,
}

/// Vertex-sampled field for plotting.
#[derive(Clone, Debug)]
pub struct Field {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Outcome {
    pub summary: Summary,
    pub field: Option<Field>,
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn cx(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let mut out = match cfg.task() {
        Task::Solve1d => solve1d(cfg)?,
        Task::DtnTest => dtn_test(cfg)?,
        Task::Scatter | Task::Resonance | Task::Convergence => match cfg.problem() {
            Some(Problem::Scatter) => scatter(cfg)?,
            Some(Problem::Resonance) => resonance(cfg)?,
            None => unreachable!("resolved config has a problem"),
        },
    };
    out.summary.phases.total = seconds(start);
    out.summary.geometric_rate = geometric_rate(&out.summary.rows);
    Ok(out)
}

/// Fit `ln err = c + N ln r` over the rows whose error exceeds ten times
/// the smallest positive error.
pub fn geometric_rate(rows: &[Row]) -> Option<f64> {
    let floor = rows
        .iter()
        .map(|r| r.rel_error)
        .filter(|e| *e > 0.0 && e.is_finite())
        .fold(f64::INFINITY, f64::min);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.rel_error.is_finite() && r.rel_error > 10.0 * floor)
        .map(|r| (r.n as f64, r.rel_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx) * (p.0 - mx)));
    (den > 0.0).then(|| (num / den).exp())
}

fn solve1d(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let od = cfg.one_d.clone().expect("resolved");
    let kappa = cfg.kappa.expect("resolved").0;
    let exact = analytic_trace_homogeneous(kappa, od.a, od.g.0);
    let mut phases = Phases::default();
    let mut rows = Vec::new();
    let mut per_n = Vec::new();
    let mut last = None;
    for n in cfg.modes() {
        let t = Instant::now();
        let prob = Problem1D::homogeneous(od.a, kappa, od.g.0, cfg.fe_order, od.cells, HardyParams64::new(cfg.kappa0.0, n)?);
        let sol = solve_scattering_1d(&prob)?;
        let wall = seconds(t);
        phases.solve += wall;
        let u0_err = (sol.u0 - exact).norm() / exact.norm();
        let hardy_err = hardy_norm_error(&sol, kappa, exact);
        let err = match od.metric {
            Metric1D::U0 => u0_err,
            Metric1D::Hardy => hardy_err,
        };
        rows.push(Row {
            n,
            dofs_total: sol.interior_coeffs.len() + sol.hardy_coeffs.len(),
            dofs_radial: n + 2,
            rel_error: err,
            wall_seconds: wall,
        });
        per_n.push(json!({ "n": n, "u0": cx(sol.u0), "u0_error": u0_err, "hardy_error": hardy_err }));
        last = Some(sol);
    }
    let sol = last.expect("nonempty sweep");
    let field = Field {
        columns: vec!["x", "re", "im"],
        rows: sol.nodes.iter().zip(&sol.interior_coeffs).map(|(x, u)| vec![*x, u.re, u.im]).collect(),
    };
    Ok(Outcome {
        summary: Summary {
            task: Task::Solve1d,
            problem: None,
            reference: match od.metric {
                Metric1D::U0 => "analytic u(a) = g exp(i kappa a) / (i kappa)".into(),
                Metric1D::Hardy => "analytic Hardy series of the exterior, relative coefficient l2 norm".into(),
            },
            rows,
            geometric_rate: None,
            phases,
            results: json!({ "exact_u0": cx(exact), "sweep": per_n }),
        },
        field: Some(field),
    })
}

/// Relative l2 distance between the discrete transformed exterior
/// coefficients and the exact geometric series, including the exact tail
/// beyond the truncation.
pub fn hardy_norm_error(sol: &Solution1D, kappa: C64, exact_u0: C64) -> f64 {
    let got = sol.transformed_coeffs();
    let want = reference_hardy_series(kappa, sol.kappa0, exact_u0, got.len());
    let r2 = hardy_ratio(kappa, sol.kappa0).norm_sqr();
    let c2 = want[0].norm_sqr();
    let head: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum();
    let tail = c2 * r2.powi(got.len() as i32) / (1.0 - r2);
    ((head + tail) / (c2 / (1.0 - r2))).sqrt()
}

fn dtn_test(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let d = cfg.dtn.clone().expect("resolved");
    let kappa = cfg.kappa.expect("resolved").0;
    let (mbd, sbd) = boundary_matrices::<f64>(cfg.fe_order, d.edge_length);
    let modes: Vec<_> = transverse_modes(&mbd, &sbd)?
        .into_iter()
        .filter(|(mu, _)| *mu <= d.mu_max)
        .collect();
    let mut phases = Phases::default();
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for n in cfg.modes() {
        let t = Instant::now();
        let hp = HardyParams64::new(cfg.kappa0.0, n)?;
        let e = strip_matrices(&mbd, &sbd, &hp, 1.0);
        let schur = trace_schur(&e, kappa)?;
        let mut worst: f64 = 0.0;
        table.clear();
        for (mu, w) in &modes {
            let sw = schur.matvec(w);
            let got: C64 = w.iter().zip(&sw).map(|(a, b)| a * b).sum();
            let want = exact_dtn(kappa, *mu);
            let err = (got - want).norm() / want.norm();
            worst = worst.max(err);
            table.push(json!({ "mu": mu, "dtn": cx(got), "exact": cx(want), "rel_error": err }));
        }
        let wall = seconds(t);
        phases.solve += wall;
        rows.push(Row {
            n,
            dofs_total: e.dofs.len(),
            dofs_radial: n + 2,
            rel_error: worst,
            wall_seconds: wall,
        });
    }
    Ok(Outcome {
        summary: Summary {
            task: Task::DtnTest,
            problem: None,
            reference: "exact DtN -i sqrt(kappa^2 - mu), worst transverse mode".into(),
            rows,
            geometric_rate: None,
            phases,
            results: json!({ "modes_at_largest_n": table }),
        },
        field: None,
    })
}

fn load_mesh(cfg: &RunConfig) -> Result<Mesh2D, RunError> {
    let mesh = cfg.mesh.as_ref().expect("resolved").load()?;
    Ok(mesh.refined(cfg.refinements))
}

fn build_system<'m>(cfg: &RunConfig, mesh: &'m Mesh2D, n: usize) -> Result<HsieSystem<'m>, RunError> {
    let tags: Option<BTreeSet<u32>> = cfg.exterior_tags.as_ref().map(|t| t.iter().copied().collect());
    let space = FeSpace::new(mesh, cfg.fe_order)?;
    let segs = build_segmentation(mesh, cfg.strategy.strategy(), tags.as_ref())?;
    Ok(HsieSystem::new(space, segs, HardyParams64::new(cfg.kappa0.0, n)?)?)
}

fn vertex_field(mesh: &Mesh2D, u: &[C64]) -> Field {
    Field {
        columns: vec!["x", "y", "re", "im"],
        rows: mesh.vertices.iter().zip(u).map(|(p, v)| vec![p[0], p[1], v.re, v.im]).collect(),
    }
}

/// Relative H1 norm of `u - reference` over the interior.
fn discrete_h1_error(space: &FeSpace, u: &[C64], reference: &[C64]) -> f64 {
    let zero = |_| (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2]);
    let diff: Vec<C64> = u.iter().zip(reference).map(|(a, b)| a - b).collect();
    let (h1, l2, _) = space.h1_error(&diff, zero);
    let (rh1, rl2, _) = space.h1_error(reference, zero);
    (h1 * h1 + l2 * l2).sqrt() / (rh1 * rh1 + rl2 * rl2).sqrt()
}

fn scatter(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let kappa = cfg.kappa.expect("resolved").0;
    let ic = cfg.incoming.clone().expect("resolved");
    if kappa.im != 0.0 {
        return Err(ConfigError::Invalid("waveguide incidence needs a real kappa".into()).into());
    }
    let mode: SlabMode<f64> = solve_slab_mode(kappa.re, ic.half_width, ic.n_clad, ic.n_core, ic.parity.into(), ic.branch)?;
    let mesh = load_mesh(cfg)?;
    info!("mesh: {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    let edges: Vec<usize> = (0..mesh.boundary_edges.len())
        .filter(|&k| ic.edge_tags.contains(&mesh.boundary_edges[k].tag))
        .collect();
    if edges.is_empty() {
        return Err(ConfigError::Invalid("no boundary edge carries an incoming tag".into()).into());
    }
    let reference = cfg.reference.expect("resolved");
    let mut phases = Phases::default();
    let mut rows = Vec::new();
    let mut sols = Vec::new();
    let mut sweep = Vec::new();
    for n in cfg.modes() {
        let t = Instant::now();
        let sys = build_system(cfg, &mesh, n)?;
        let inc = eval_incoming(&sys.space, &mode, ic.center_y, ic.x0, edges.iter().copied(), ic.corner_tol);
        let rhs = sys.rhs(&inc, kappa)?;
        let op = sys.operator(kappa);
        phases.assembly += seconds(t);
        let tf = Instant::now();
        let lu = SparseLu::new(op)?;
        phases.factorization += seconds(tf);
        let ts = Instant::now();
        let x = lu.solve(&rhs)?;
        phases.solve += seconds(ts);
        let u = x[..sys.space.dof_count()].to_vec();
        let err = match reference {
            Reference::Incoming => {
                let (h1, l2, norm) = sys.space.h1_error(&u, mode.field(ic.center_y, ic.x0));
                (h1 * h1 + l2 * l2).sqrt() / norm
            }
            Reference::Finest => f64::NAN,
        };
        info!("N = {n}: {} dofs, error {err:e}", sys.dofmap.total());
        rows.push(Row {
            n,
            dofs_total: sys.dofmap.total(),
            dofs_radial: sys.hardy.ray_dofs(),
            rel_error: err,
            wall_seconds: seconds(t),
        });
        sweep.push(json!({ "n": n, "fe_dofs": sys.space.dof_count() }));
        sols.push(u);
    }
    let space = FeSpace::new(&mesh, cfg.fe_order)?;
    if reference == Reference::Finest {
        let finest = sols.last().expect("nonempty sweep");
        for (row, u) in rows.iter_mut().zip(&sols) {
            row.rel_error = discrete_h1_error(&space, u, finest);
        }
    }
    let field = vertex_field(&mesh, sols.last().expect("nonempty sweep"));
    Ok(Outcome {
        summary: Summary {
            task: cfg.task(),
            problem: Some(Problem::Scatter),
            reference: match reference {
                Reference::Incoming => "analytic incoming mode, relative H1 over the interior".into(),
                Reference::Finest => "largest N of the sweep, relative H1 over the interior".into(),
            },
            rows,
            geometric_rate: None,
            phases,
            results: json!({
                "mode": {
                    "kappa_x": mode.kappa_x,
                    "gamma": mode.gamma,
                    "beta": mode.beta,
                },
                "incoming_edges": edges.len(),
                "vertices": mesh.vertices.len(),
                "triangles": mesh.triangles.len(),
                "sweep": sweep,
            }),
        },
        field: Some(field),
    })
}

/// Root with nonnegative real part.
fn kappa_of(lambda: C64) -> C64 {
    let k = lambda.sqrt();
    if k.re < 0.0 {
        -k
    } else {
        k
    }
}

fn resonance(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let shift = cfg.shift.expect("resolved").0;
    let sigma = shift * shift;
    let mesh = load_mesh(cfg)?;
    info!("mesh: {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    let mut phases = Phases::default();
    let mut rows = Vec::new();
    let mut found = Vec::new();
    let mut sweep = Vec::new();
    let mut last_vec = Vec::new();
    for n in cfg.modes() {
        let t = Instant::now();
        let sys = build_system(cfg, &mesh, n)?;
        phases.assembly += seconds(t);
        let te = Instant::now();
        let eig = shift_invert_eigs(&sys.s, &sys.m, sigma, cfg.eigen.count, cfg.eigen.tol)?;
        phases.eigensolve += seconds(te);
        let lambda = eig.eigenvalues[0];
        info!("N = {n}: {} dofs, kappa^2 = {lambda}", sys.dofmap.total());
        let pairs: Vec<Value> = eig
            .eigenvalues
            .iter()
            .zip(&eig.backward_errors)
            .map(|(&l, &be)| {
                let k = kappa_of(l);
                let mut v = json!({ "kappa2": cx(l), "kappa": cx(k), "backward_error": be });
                if let Some(unit) = cfg.length_unit_m {
                    v["omega"] = cx(k * SPEED_OF_LIGHT / unit);
                }
                v
            })
            .collect();
        sweep.push(json!({ "n": n, "eigenpairs": pairs, "restarts": eig.restarts }));
        rows.push(Row {
            n,
            dofs_total: sys.dofmap.total(),
            dofs_radial: sys.hardy.ray_dofs(),
            rel_error: f64::NAN,
            wall_seconds: seconds(t),
        });
        found.push(lambda);
        last_vec = eig.eigenvectors[0][..sys.space.dof_count()].to_vec();
    }
    let finest = *found.last().expect("nonempty sweep");
    for (row, l) in rows.iter_mut().zip(&found) {
        row.rel_error = (l - finest).norm() / finest.norm();
    }
    normalize_max(&mut last_vec);
    let k = kappa_of(finest);
    let mut best = json!({ "kappa2": cx(finest), "kappa": cx(k) });
    if let Some(unit) = cfg.length_unit_m {
        best["omega"] = cx(k * SPEED_OF_LIGHT / unit);
    }
    Ok(Outcome {
        summary: Summary {
            task: cfg.task(),
            problem: Some(Problem::Resonance),
            reference: "eigenvalue kappa^2 nearest the shift at the largest N of the sweep".into(),
            rows,
            geometric_rate: None,
            phases,
            results: json!({
                "eigenvalue": best,
                "vertices": mesh.vertices.len(),
                "triangles": mesh.triangles.len(),
                "sweep": sweep,
            }),
        },
        field: Some(vertex_field(&mesh, &last_vec)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, e: f64) -> Row {
        Row {
            n,
            dofs_total: 0,
            dofs_radial: n + 2,
            rel_error: e,
            wall_seconds: 0.0,
        }
    }

    #[test]
    fn rate_of_pure_geometric_sequence() {
        let rows: Vec<Row> = (2..10).map(|n| row(n, 0.5f64.powi(n as i32))).chain([row(10, 0.0)]).collect();
        // floor is 0.5^9; the fit uses the rows above ten times that
        assert!((geometric_rate(&rows).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_sequence_has_no_rate() {
        let rows: Vec<Row> = (2..6).map(|n| row(n, 1e-5)).collect();
        assert!(geometric_rate(&rows).is_none());
    }

    #[test]
    fn kappa_root_branch() {
        let k = kappa_of(C64::new(15.0, -0.3));
        assert!(k.re > 0.0 && k.im < 0.0);
    }

    #[test]
    fn error_codes() {
        let c: RunError = ConfigError::Invalid("x".into()).into();
        assert_eq!(c.exit_code(), 2);
        let h: RunError = HsieError::SingularMatrix.into();
        assert_eq!(h.exit_code(), 1);
        assert_eq!(h.to_json()["error"]["kind"], "SingularMatrix");
    }
}

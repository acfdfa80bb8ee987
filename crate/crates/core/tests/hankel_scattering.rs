//! An outgoing cylindrical wave prescribed as jump data on every boundary
//! edge must leave a vanishing interior field.

use hsie::assembly::{HsieSystem, IncomingField};
use hsie::fem::FeSpace;
use hsie::mesh::{Mesh2D, RectMeshBuilder};
use hsie::segmentation::{build_segmentation, Strategy};
use hsie::solvers::lu_solve;
use hsie::{HardyParams64, C64};

fn hankel(kappa: f64, src: [f64; 2]) -> impl Fn([f64; 2]) -> (C64, [C64; 2]) {
    move |p| {
        let (dx, dy) = (p[0] - src[0], p[1] - src[1]);
        let r = dx.hypot(dy);
        let z = kappa * r;
        let h0 = C64::new(libm::j0(z), libm::y0(z));
        let h1 = C64::new(libm::j1(z), libm::y1(z));
        let d = -h1 * kappa / r;
        (h0, [d * dx, d * dy])
    }
}

fn box_mesh(w: f64, h: f64, n: usize) -> Mesh2D {
    let xs: Vec<f64> = (0..=n).map(|i| -w + 2.0 * w * i as f64 / n as f64).collect();
    let ys: Vec<f64> = (0..=n).map(|i| -h + 2.0 * h * i as f64 / n as f64).collect();
    RectMeshBuilder::new(xs, ys, 1, 1.0).unwrap().build().unwrap()
}

fn interior_ratio(mesh: &Mesh2D, strategy: Strategy, p: usize, n_modes: usize) -> f64 {
    let kappa = 3.0;
    let space = FeSpace::new(mesh, p).unwrap();
    let segments = build_segmentation(mesh, strategy, None).unwrap();
    let hardy = HardyParams64::new(C64::new(3.0, 1.5), n_modes).unwrap();
    let sys = HsieSystem::new(space, segments, hardy).unwrap();
    let field = hankel(kappa, [0.13, -0.21]);
    let edges: Vec<usize> = (0..mesh.boundary_edges.len()).collect();
    let inc = IncomingField::sample(&sys.space, edges, &field, 0.0);
    let k = C64::new(kappa, 0.0);
    let rhs = sys.rhs(&inc, k).unwrap();
    let x = lu_solve(&sys.operator(k), &rhs).unwrap();
    let (h1, l2, _) = sys.space.h1_error(&x[..sys.space.dof_count()], |_| (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2]));
    let g = sys.space.interpolate(|q| field(q).0);
    let (gh1, gl2, _) = sys.space.h1_error(&g, |_| (C64::new(0.0, 0.0), [C64::new(0.0, 0.0); 2]));
    (h1 * h1 + l2 * l2).sqrt() / (gh1 * gh1 + gl2 * gl2).sqrt()
}

#[test]
fn cylindrical_wave_is_absorbed() {
    let mesh = box_mesh(1.0, 0.8, 4).refine_uniform();
    for strategy in [
        Strategy::StripsAndTriangles,
        Strategy::TrapezoidsNormalBisector,
        Strategy::TrapezoidsReferencePoint([0.2, 0.1]),
    ] {
        let mut last = f64::INFINITY;
        for n in [2, 4, 8, 16] {
            let r = interior_ratio(&mesh, strategy, 4, n);
            eprintln!("{strategy:?} N={n}: {r:.3e}");
            last = r;
        }
        assert!(last < 1e-3, "{strategy:?}: {last:e}");
    }
}

fn pentagon() -> Mesh2D {
    use hsie::mesh::Triangle;
    use std::collections::BTreeMap;
    let pts = [[-1.0, -0.8], [0.9, -1.0], [1.2, 0.3], [0.1, 1.1], [-1.1, 0.5]];
    let mut vertices = pts.to_vec();
    vertices.push([0.0, 0.0]);
    let triangles = (0..5).map(|i| Triangle { v: [i, (i + 1) % 5, 5], material: 1 }).collect();
    Mesh2D::from_triangles(vertices, triangles, BTreeMap::from([(1, 1.0)]), |_| 1)
        .unwrap()
        .refined(3)
}

#[test]
fn oblique_corners_absorb() {
    let mesh = pentagon();
    for strategy in [Strategy::StripsAndTriangles, Strategy::TrapezoidsNormalBisector] {
        let coarse = interior_ratio(&mesh, strategy, 3, 3);
        let fine = interior_ratio(&mesh, strategy, 3, 14);
        eprintln!("{strategy:?}: {coarse:.3e} -> {fine:.3e}");
        assert!(fine < 1e-4 && fine < coarse, "{strategy:?}: {fine:e}");
    }
}


//! Global numbering, assembly of `S` and `M`, and incoming-field loading.
//!
//! Global unknowns come in four classes, numbered in this order:
//! finite element DOFs (including the boundary traces), Hardy DOFs on rays
//! (sorted by ray id), Hardy DOFs over edge-interior trace nodes (sorted by
//! boundary edge), and Hardy-by-Hardy DOFs inside infinite triangles
//! (sorted by corner vertex).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{HsieError, Result};
use crate::exterior::{
    strip_matrices, trapezoid_matrices, triangle_matrices, ExteriorElementMatrices, LocalDof, TrapezoidTrace,
};
use crate::fem::{boundary_matrices, FeSpace};
use crate::hardy::HardyParams;
use crate::segmentation::{ExteriorSegment, RayId, SegmentGeometry, SegmentKind};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::C64;

/// Sort key making assembly independent of the segment list order.
fn canonical_key(seg: &ExteriorSegment) -> (u8, usize) {
    match seg.geometry {
        SegmentGeometry::Edge { edge, .. } => (0, edge),
        SegmentGeometry::Corner { vertex, .. } => (1, vertex),
    }
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub fe: usize,
    pub ray: usize,
    pub edge: usize,
    pub corner: usize,
    pub n_modes: usize,
    /// Segment indices in canonical order.
    pub order: Vec<usize>,
    /// Local-to-global table per segment (indexed like the segment list).
    pub segment_dofs: Vec<Vec<usize>>,
    rays: BTreeMap<RayId, usize>,
}

impl DofMap {
    pub fn total(&self) -> usize {
        self.fe + self.ray + self.edge + self.corner
    }

    /// Exterior unknowns other than the shared traces.
    pub fn radial(&self) -> usize {
        self.ray + self.edge + self.corner
    }

    /// Global index of Hardy coefficient `i >= 1` on a ray.
    pub fn ray_dof(&self, ray: RayId, i: usize) -> Option<usize> {
        self.rays.get(&ray).map(|&r| self.fe + r * (self.n_modes + 1) + i - 1)
    }

    pub fn ray_ids(&self) -> impl Iterator<Item = &RayId> {
        self.rays.keys()
    }
}

fn edge_vertices_trace(space: &FeSpace, edge: usize) -> Vec<usize> {
    // FE trace runs v[0] -> v[1] of the stored edge = v2 -> v1; eta runs v1 -> v2
    let mut t = space.trace_dofs(edge).to_vec();
    t.reverse();
    t
}

pub fn build_dof_map(space: &FeSpace, segments: &[ExteriorSegment], hardy: &HardyParams<f64>) -> Result<DofMap> {
    let n = hardy.n_modes;
    let nr = n + 1;
    let p = space.order();
    let fe = space.dof_count();

    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by_key(|&s| canonical_key(&segments[s]));
    if order.windows(2).any(|w| canonical_key(&segments[w[0]]) == canonical_key(&segments[w[1]])) {
        return Err(HsieError::InconsistentRays("two segments on the same edge or corner".into()));
    }

    let mut ray_points: BTreeMap<RayId, Option<[f64; 2]>> = BTreeMap::new();
    for seg in segments {
        match &seg.geometry {
            SegmentGeometry::Edge { outer, .. } => {
                // outer = [v3 (ray at v2), v4 (ray at v1)]
                for (ray, pt) in [(seg.rays[0], outer[1]), (seg.rays[1], outer[0])] {
                    let point = (seg.kind == SegmentKind::Trapezoid).then_some(pt);
                    match ray_points.insert(ray, point) {
                        Some(Some(old)) if Some(old) != point => {
                            return Err(HsieError::InconsistentRays(format!(
                                "ray at vertex {} has two different directions",
                                ray.vertex
                            )));
                        }
                        _ => {}
                    }
                }
            }
            SegmentGeometry::Corner { .. } => {
                for ray in seg.rays {
                    ray_points.entry(ray).or_insert(None);
                }
            }
        }
    }
    let rays: BTreeMap<RayId, usize> = ray_points.keys().enumerate().map(|(i, &r)| (r, i)).collect();
    let ray_base = fe;
    let edge_base = ray_base + rays.len() * nr;
    let n_edge_segs = order.iter().filter(|&&s| matches!(segments[s].geometry, SegmentGeometry::Edge { .. })).count();
    let per_edge = (p - 1) * nr;
    let corner_base = edge_base + n_edge_segs * per_edge;

    let ray_dof = |r: RayId, i: usize| ray_base + rays[&r] * nr + i - 1;
    let mut segment_dofs = vec![Vec::new(); segments.len()];
    let (mut edge_slot, mut corner_slot) = (0usize, 0usize);
    for &s in &order {
        let seg = &segments[s];
        let dofs = match &seg.geometry {
            SegmentGeometry::Edge { edge, .. } => {
                let trace = edge_vertices_trace(space, *edge);
                let base = edge_base + edge_slot * per_edge;
                edge_slot += 1;
                let mut d = Vec::with_capacity((n + 2) * (p + 1));
                for i in 0..n + 2 {
                    for m in 0..=p {
                        d.push(if i == 0 {
                            trace[m]
                        } else if m == 0 {
                            ray_dof(seg.rays[0], i)
                        } else if m == p {
                            ray_dof(seg.rays[1], i)
                        } else {
                            base + (i - 1) * (p - 1) + (m - 1)
                        });
                    }
                }
                d
            }
            SegmentGeometry::Corner { vertex, .. } => {
                let base = corner_base + corner_slot * nr * nr;
                corner_slot += 1;
                let mut d = Vec::with_capacity((n + 2) * (n + 2));
                for i in 0..n + 2 {
                    for j in 0..n + 2 {
                        d.push(match (i, j) {
                            (0, 0) => *vertex,
                            (i, 0) => ray_dof(seg.rays[0], i),
                            (0, j) => ray_dof(seg.rays[1], j),
                            (i, j) => base + (i - 1) * nr + (j - 1),
                        });
                    }
                }
                d
            }
        };
        segment_dofs[s] = dofs;
    }
    Ok(DofMap {
        fe,
        ray: rays.len() * nr,
        edge: n_edge_segs * per_edge,
        corner: corner_slot * nr * nr,
        n_modes: n,
        order,
        segment_dofs,
        rays,
    })
}

/// Local matrices of one segment.
pub fn segment_matrices(
    space: &FeSpace,
    seg: &ExteriorSegment,
    hardy: &HardyParams<f64>,
) -> Result<ExteriorElementMatrices<f64>> {
    let p = space.order();
    match (&seg.geometry, seg.kind) {
        (SegmentGeometry::Edge { params, .. }, SegmentKind::Strip) => {
            let (mbd, sbd) = boundary_matrices::<f64>(p, params.h_eta);
            Ok(strip_matrices(&mbd, &sbd, hardy, seg.n))
        }
        (SegmentGeometry::Edge { params, .. }, _) => {
            let trace = TrapezoidTrace::new(p, params);
            trapezoid_matrices(params, &trace, hardy, seg.n)
        }
        (SegmentGeometry::Corner { n1, n2, .. }, _) => triangle_matrices(*n1, *n2, hardy, seg.n),
    }
}

/// Global `S` and `M`; the discrete operator is `S - kappa^2 M`.
pub fn assemble_global(
    space: &FeSpace,
    segments: &[ExteriorSegment],
    dofmap: &DofMap,
    hardy: &HardyParams<f64>,
) -> Result<(SparseMatrix, SparseMatrix)> {
    let (s_int, m_int) = space.assemble_interior()?;
    let total = dofmap.total();
    let locals: Vec<ExteriorElementMatrices<f64>> = dofmap
        .order
        .par_iter()
        .map(|&s| segment_matrices(space, &segments[s], hardy))
        .collect::<Result<_>>()?;
    let ext_nnz: usize = locals.iter().map(|e| e.s.rows() * e.s.cols()).sum();
    let mut s = TripletBuilder::with_capacity(total, total, s_int.nnz() + ext_nnz);
    let mut m = TripletBuilder::with_capacity(total, total, m_int.nnz() + ext_nnz);
    for (src, dst) in [(&s_int, &mut s), (&m_int, &mut m)] {
        for i in 0..src.rows() {
            let (cols, vals) = src.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dst.push(i, j, v);
            }
        }
    }
    for (&seg, local) in dofmap.order.iter().zip(&locals) {
        let dofs = &dofmap.segment_dofs[seg];
        s.add_block(dofs, dofs, &local.s);
        m.add_block(dofs, dofs, &local.m);
    }
    Ok((s.build(), m.build()))
}

/// Dirichlet and Neumann traces of an incoming field on one boundary edge,
/// as nodal values in the FE trace basis ordered along the stored edge.
/// `g_n` is the derivative along the outward normal.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeTrace {
    pub g_d: Vec<C64>,
    pub g_n: Vec<C64>,
}

/// Incoming field data on designated inflow edges (keyed by boundary edge).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IncomingField {
    pub edges: BTreeMap<usize, EdgeTrace>,
    /// Dirichlet values at traces shared with segments without incoming
    /// data are dropped when below `corner_tol * max |g_d|`; larger values
    /// are rejected.
    pub corner_tol: f64,
}

impl IncomingField {
    /// Samples `u_i` and its gradient at the trace nodes of `edges`.
    pub fn sample(
        space: &FeSpace,
        edges: impl IntoIterator<Item = usize>,
        field: impl Fn([f64; 2]) -> (C64, [C64; 2]),
        corner_tol: f64,
    ) -> Self {
        let mesh = space.mesh();
        let pts = space.dof_points();
        let map = edges
            .into_iter()
            .map(|k| {
                let [a, b] = mesh.boundary_edges[k].v;
                let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
                let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                let normal = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
                let (g_d, g_n) = space
                    .trace_dofs(k)
                    .iter()
                    .map(|&d| {
                        let (v, g) = field(pts[d]);
                        (v, g[0] * normal[0] + g[1] * normal[1])
                    })
                    .unzip();
                (k, EdgeTrace { g_d, g_n })
            })
            .collect();
        Self { edges: map, corner_tol }
    }
}

/// Right-hand side of `(S - kappa^2 M) x = rhs` for the total field inside
/// and the scattered field outside, coupled by the jumps `g_d`, `g_n` on the
/// inflow edges.
pub fn apply_incoming(
    space: &FeSpace,
    segments: &[ExteriorSegment],
    dofmap: &DofMap,
    hardy: &HardyParams<f64>,
    inc: &IncomingField,
    kappa: C64,
) -> Result<Vec<C64>> {
    let mesh = space.mesh();
    let p = space.order();
    let mut rhs = vec![C64::new(0.0, 0.0); dofmap.total()];
    if inc.edges.is_empty() {
        return Ok(rhs);
    }
    let edge_segs: BTreeSet<usize> = segments
        .iter()
        .filter_map(|s| match s.geometry {
            SegmentGeometry::Edge { edge, .. } => Some(edge),
            _ => None,
        })
        .collect();

    // Dirichlet data on global trace DOFs
    let mut g_d: BTreeMap<usize, C64> = BTreeMap::new();
    let mut scale = 0.0f64;
    for (&k, tr) in &inc.edges {
        if !edge_segs.contains(&k) {
            return Err(HsieError::MissingTraceData(format!("boundary edge {k} has no exterior segment")));
        }
        if tr.g_d.len() != p + 1 || tr.g_n.len() != p + 1 {
            return Err(HsieError::MissingTraceData(format!(
                "edge {k} needs {} trace values, got {} and {}",
                p + 1,
                tr.g_d.len(),
                tr.g_n.len()
            )));
        }
        for (&d, &v) in space.trace_dofs(k).iter().zip(&tr.g_d) {
            g_d.insert(d, v);
            scale = scale.max(v.norm());
        }
    }
    let inflow = |seg: &ExteriorSegment| match seg.geometry {
        SegmentGeometry::Edge { edge, .. } => inc.edges.contains_key(&edge),
        SegmentGeometry::Corner { edges, .. } => edges.iter().all(|e| inc.edges.contains_key(e)),
    };
    let trace_locals = |e: &ExteriorElementMatrices<f64>| -> Vec<usize> {
        (0..e.dofs.len())
            .filter(|&k| matches!(e.dofs[k], LocalDof::Edge { radial: 0, .. } | LocalDof::Corner { i: 0, j: 0 }))
            .collect()
    };
    // traces touched by segments without data must carry no jump
    for &s in &dofmap.order {
        let seg = &segments[s];
        if inflow(seg) {
            continue;
        }
        let dofs = &dofmap.segment_dofs[s];
        let locals: Vec<usize> = match seg.geometry {
            SegmentGeometry::Edge { .. } => (0..=p).collect(),
            SegmentGeometry::Corner { .. } => vec![0],
        };
        for l in locals {
            if let Some(v) = g_d.get_mut(&dofs[l]) {
                if v.norm() > inc.corner_tol * scale {
                    return Err(HsieError::MissingTraceData(format!(
                        "incoming field {:.3e} at vertex DOF {} shared with a segment without incoming data",
                        v.norm(),
                        dofs[l]
                    )));
                }
                *v = C64::new(0.0, 0.0);
            }
        }
    }

    let k2 = kappa * kappa;
    for &s in &dofmap.order {
        let seg = &segments[s];
        if !inflow(seg) {
            continue;
        }
        let e = segment_matrices(space, seg, hardy)?;
        let dofs = &dofmap.segment_dofs[s];
        let cols = trace_locals(&e);
        let g: Vec<C64> = cols.iter().map(|&c| g_d.get(&dofs[c]).copied().unwrap_or_default()).collect();
        for r in 0..e.dofs.len() {
            let mut acc = C64::new(0.0, 0.0);
            for (&c, &gv) in cols.iter().zip(&g) {
                acc += (e.s[(r, c)] - k2 * e.m[(r, c)]) * gv;
            }
            rhs[dofs[r]] += acc;
        }
    }
    for (&k, tr) in &inc.edges {
        let [a, b] = mesh.boundary_edges[k].v;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let (mbd, _) = boundary_matrices::<f64>(p, (pb[0] - pa[0]).hypot(pb[1] - pa[1]));
        let load = mbd.matvec(&tr.g_n);
        for (&d, v) in space.trace_dofs(k).iter().zip(load) {
            rhs[d] += v;
        }
    }
    Ok(rhs)
}

/// Everything needed to solve on one mesh, segmentation and Hardy setting.
pub struct HsieSystem<'m> {
    pub space: FeSpace<'m>,
    pub segments: Vec<ExteriorSegment>,
    pub hardy: HardyParams<f64>,
    pub dofmap: DofMap,
    pub s: SparseMatrix,
    pub m: SparseMatrix,
}

impl<'m> HsieSystem<'m> {
    pub fn new(space: FeSpace<'m>, segments: Vec<ExteriorSegment>, hardy: HardyParams<f64>) -> Result<Self> {
        let dofmap = build_dof_map(&space, &segments, &hardy)?;
        let (s, m) = assemble_global(&space, &segments, &dofmap, &hardy)?;
        Ok(Self {
            space,
            segments,
            hardy,
            dofmap,
            s,
            m,
        })
    }

    pub fn operator(&self, kappa: C64) -> SparseMatrix {
        self.s.lin_comb(C64::new(1.0, 0.0), &self.m, -kappa * kappa)
    }

    pub fn rhs(&self, inc: &IncomingField, kappa: C64) -> Result<Vec<C64>> {
        apply_incoming(&self.space, &self.segments, &self.dofmap, &self.hardy, inc, kappa)
    }

    /// Dense copy of one segment's block, for diagnostics.
    pub fn segment_block(&self, seg: usize) -> Result<DenseMatrix<f64>> {
        Ok(segment_matrices(&self.space, &self.segments[seg], &self.hardy)?.s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh2D, RectMeshBuilder};
    use crate::segmentation::{build_segmentation, Strategy};

    fn unit_square(n: usize) -> Mesh2D {
        let g: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        RectMeshBuilder::new(g.clone(), g, 1, 1.0).unwrap().build().unwrap()
    }

    fn hardy(n: usize) -> HardyParams<f64> {
        HardyParams::new(C64::new(2.0, 1.0), n).unwrap()
    }

    #[test]
    fn square_counts() {
        let mesh = unit_square(1);
        let space = FeSpace::new(&mesh, 1).unwrap();
        let segs = build_segmentation(&mesh, Strategy::TrapezoidsNormalBisector, None).unwrap();
        let map = build_dof_map(&space, &segs, &hardy(0)).unwrap();
        assert_eq!(map.fe, 4);
        assert_eq!(map.ray, 4);
        assert_eq!(map.total(), 8);
    }

    #[test]
    fn count_formula() {
        // growth per Hardy mode: rays + edges (p - 1) + corners (2N + 3)
        let mesh = unit_square(2);
        for strategy in [Strategy::StripsAndTriangles, Strategy::TrapezoidsNormalBisector] {
            for p in [1, 3] {
                let space = FeSpace::new(&mesh, p).unwrap();
                let segs = build_segmentation(&mesh, strategy, None).unwrap();
                let edges = segs.iter().filter(|s| s.kind != SegmentKind::InfTriangle).count();
                let corners = segs.len() - edges;
                let rays = if corners > 0 { edges + corners } else { edges };
                for n in 0..4 {
                    let a = build_dof_map(&space, &segs, &hardy(n)).unwrap().total();
                    let b = build_dof_map(&space, &segs, &hardy(n + 1)).unwrap().total();
                    assert_eq!(b - a, rays + edges * (p - 1) + corners * (2 * n + 3), "{strategy:?} p={p} n={n}");
                }
            }
        }
    }

    #[test]
    fn no_exterior_is_fe_numbering() {
        let mesh = unit_square(2);
        let space = FeSpace::new(&mesh, 2).unwrap();
        let map = build_dof_map(&space, &[], &hardy(3)).unwrap();
        assert_eq!(map.total(), space.dof_count());
    }

    #[test]
    fn global_matrices_symmetric_and_order_free() {
        let mesh = unit_square(2);
        let space = FeSpace::new(&mesh, 2).unwrap();
        for strategy in [Strategy::StripsAndTriangles, Strategy::TrapezoidsNormalBisector] {
            let segs = build_segmentation(&mesh, strategy, None).unwrap();
            let hp = hardy(4);
            let map = build_dof_map(&space, &segs, &hp).unwrap();
            let (s, m) = assemble_global(&space, &segs, &map, &hp).unwrap();
            assert_eq!(s.symmetry_defect(), 0.0);
            assert_eq!(m.symmetry_defect(), 0.0);
            let mut rev = segs.clone();
            rev.reverse();
            let map2 = build_dof_map(&space, &rev, &hp).unwrap();
            let (s2, m2) = assemble_global(&space, &rev, &map2, &hp).unwrap();
            assert_eq!(s, s2);
            assert_eq!(m, m2);
        }
    }

    #[test]
    fn hardy_dofs_couple_locally() {
        let mesh = unit_square(2);
        let space = FeSpace::new(&mesh, 2).unwrap();
        let segs = build_segmentation(&mesh, Strategy::StripsAndTriangles, None).unwrap();
        let hp = hardy(3);
        let map = build_dof_map(&space, &segs, &hp).unwrap();
        let (s, _) = assemble_global(&space, &segs, &map, &hp).unwrap();
        for i in map.fe..map.total() {
            let owners: BTreeSet<usize> = (0..segs.len()).filter(|&g| map.segment_dofs[g].contains(&i)).collect();
            assert!(!owners.is_empty() && owners.len() <= 2);
            let allowed: BTreeSet<usize> = owners.iter().flat_map(|&g| map.segment_dofs[g].iter().copied()).collect();
            let (cols, _) = s.row(i);
            assert!(cols.iter().all(|c| allowed.contains(c)));
        }
    }

    #[test]
    fn zero_incoming_gives_zero_rhs() {
        let mesh = unit_square(1);
        let space = FeSpace::new(&mesh, 2).unwrap();
        let segs = build_segmentation(&mesh, Strategy::StripsAndTriangles, None).unwrap();
        let hp = hardy(2);
        let map = build_dof_map(&space, &segs, &hp).unwrap();
        let zero = EdgeTrace {
            g_d: vec![C64::new(0.0, 0.0); 3],
            g_n: vec![C64::new(0.0, 0.0); 3],
        };
        let inc = IncomingField {
            edges: BTreeMap::from([(0, zero)]),
            corner_tol: 0.0,
        };
        let rhs = apply_incoming(&space, &segs, &map, &hp, &inc, C64::new(3.0, 0.0)).unwrap();
        assert!(rhs.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn corner_jump_rejected() {
        let mesh = unit_square(1);
        let space = FeSpace::new(&mesh, 1).unwrap();
        let segs = build_segmentation(&mesh, Strategy::StripsAndTriangles, None).unwrap();
        let hp = hardy(2);
        let map = build_dof_map(&space, &segs, &hp).unwrap();
        let inc = IncomingField::sample(&space, [0], |_| (C64::new(1.0, 0.0), [C64::new(0.0, 0.0); 2]), 1e-8);
        let err = apply_incoming(&space, &segs, &map, &hp, &inc, C64::new(3.0, 0.0)).unwrap_err();
        assert!(matches!(err, HsieError::MissingTraceData(_)));
    }
}

//! Subdomain partitions of the plane and their boundary meshes.
//!
//! A partition consists of the unbounded subdomain 0 plus bounded
//! subdomains 1..n, separated by pairwise disjoint closed curves, so no
//! junction points occur and the adjacency graph of subdomains is a tree.
//! Every curve carries a `between = [inner, outer]` pair naming the
//! subdomain immediately inside and immediately outside it.

use crate::quadrature::{segment_distance, Panel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("curves {0} and {1} touch or intersect")]
    CurvesTouch(usize, usize),
    #[error("polygon of curve {0} is self-intersecting")]
    SelfIntersecting(usize),
    #[error("subdomain adjacency is not a tree")]
    NotATree,
    #[error("curve {curve} needs at least 3 panels; decrease h")]
    TooCoarse { curve: usize },
    #[error("curve {curve}: declared outer subdomain {declared} does not match the geometry (expected {expected})")]
    InconsistentNesting { curve: usize, declared: usize, expected: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subdomain {
    pub kappa: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveShape {
    Circle { center: [f64; 2], radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(flatten)]
    pub shape: CurveShape,
    /// `[inner, outer]` subdomain indices.
    pub between: [usize; 2],
}

/// Junction-free partition of the plane into Helmholtz subdomains.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Partition {
    pub subdomains: Vec<Subdomain>,
    pub curves: Vec<CurveSpec>,
    pub h: f64,
}

fn sub2(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

fn norm2(p: [f64; 2]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

impl CurveShape {
    /// One point lying on the curve.
    fn sample_point(&self) -> [f64; 2] {
        match self {
            CurveShape::Circle { center, radius } => [center[0] + radius, center[1]],
            CurveShape::Polygon { vertices } => vertices[0],
        }
    }

    /// Whether `p` lies strictly inside the region enclosed by the curve.
    fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            CurveShape::Circle { center, radius } => norm2(sub2(p, *center)) < *radius,
            CurveShape::Polygon { vertices } => {
                // even-odd ray casting toward +x
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let xc = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if p[0] < xc {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    fn edges(&self) -> Vec<Panel> {
        match self {
            CurveShape::Circle { .. } => Vec::new(),
            CurveShape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| Panel { a: vertices[i], b: vertices[(i + 1) % n] })
                    .collect()
            }
        }
    }
}

/// Minimum distance from a segment to a circle (the curve, not the disk).
fn segment_circle_distance(seg: &Panel, center: [f64; 2], radius: f64) -> f64 {
    let v = sub2(seg.b, seg.a);
    let w = sub2(center, seg.a);
    let vv = v[0] * v[0] + v[1] * v[1];
    let t = ((w[0] * v[0] + w[1] * v[1]) / vv).clamp(0.0, 1.0);
    let dmin = norm2(sub2(center, seg.point(t)));
    let dmax = norm2(sub2(center, seg.a)).max(norm2(sub2(center, seg.b)));
    if dmin <= radius && radius <= dmax {
        0.0
    } else {
        (dmin - radius).abs().min((dmax - radius).abs())
    }
}

fn curve_distance(a: &CurveShape, b: &CurveShape) -> f64 {
    match (a, b) {
        (
            CurveShape::Circle { center: c1, radius: r1 },
            CurveShape::Circle { center: c2, radius: r2 },
        ) => {
            let d = norm2(sub2(*c1, *c2));
            if d >= r1 + r2 {
                d - r1 - r2
            } else {
                // overlapping or nested; zero when the circles intersect
                ((r1 - r2).abs() - d).max(0.0) * if d + r2 <= *r1 || d + r1 <= *r2 { 1.0 } else { 0.0 }
            }
        }
        (CurveShape::Circle { center, radius }, p @ CurveShape::Polygon { .. })
        | (p @ CurveShape::Polygon { .. }, CurveShape::Circle { center, radius }) => p
            .edges()
            .iter()
            .map(|e| segment_circle_distance(e, *center, *radius))
            .fold(f64::INFINITY, f64::min),
        (pa @ CurveShape::Polygon { .. }, pb @ CurveShape::Polygon { .. }) => {
            let (ea, eb) = (pa.edges(), pb.edges());
            let mut best = f64::INFINITY;
            for x in &ea {
                for y in &eb {
                    best = best.min(segment_distance(x, y).2);
                }
            }
            best
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

impl Partition {
    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let p: Partition =
            serde_json::from_str(text).map_err(|e| GeometryError::BadConfig(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.subdomains.len();
        if n < 2 {
            return Err(GeometryError::BadConfig(
                "need at least the exterior and one bounded subdomain".into(),
            ));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(GeometryError::BadConfig(format!("mesh size h must be positive, got {}", self.h)));
        }
        for (j, s) in self.subdomains.iter().enumerate() {
            if !(s.kappa.is_finite() && s.kappa > 0.0) {
                return Err(GeometryError::BadConfig(format!(
                    "subdomain {j}: wavenumber must be positive, got {}",
                    s.kappa
                )));
            }
        }
        if self.curves.len() != n - 1 {
            return Err(GeometryError::NotATree);
        }
        let mut inner_seen = vec![false; n];
        let mut uf = UnionFind::new(n);
        for (c, spec) in self.curves.iter().enumerate() {
            let [i, o] = spec.between;
            if i == o || i >= n || o >= n {
                return Err(GeometryError::BadConfig(format!(
                    "curve {c}: invalid between pair [{i}, {o}]"
                )));
            }
            if i == 0 {
                return Err(GeometryError::BadConfig(format!(
                    "curve {c}: the exterior subdomain cannot be the inner side"
                )));
            }
            if inner_seen[i] {
                return Err(GeometryError::BadConfig(format!(
                    "subdomain {i} is the inner side of more than one curve"
                )));
            }
            inner_seen[i] = true;
            if !uf.union(i, o) {
                return Err(GeometryError::NotATree);
            }
            match &spec.shape {
                CurveShape::Circle { radius, .. } => {
                    if !(radius.is_finite() && *radius > 0.0) {
                        return Err(GeometryError::BadConfig(format!(
                            "curve {c}: radius must be positive"
                        )));
                    }
                }
                CurveShape::Polygon { vertices } => {
                    if vertices.len() < 3 {
                        return Err(GeometryError::BadConfig(format!(
                            "curve {c}: polygon needs at least 3 vertices"
                        )));
                    }
                    let edges = spec.shape.edges();
                    for e in &edges {
                        if e.len() < 1e-12 {
                            return Err(GeometryError::SelfIntersecting(c));
                        }
                    }
                    let m = edges.len();
                    for a in 0..m {
                        for b in a + 1..m {
                            if b == a + 1 || (a == 0 && b == m - 1) {
                                continue;
                            }
                            if segment_distance(&edges[a], &edges[b]).2 < 1e-12 {
                                return Err(GeometryError::SelfIntersecting(c));
                            }
                        }
                    }
                }
            }
        }
        // the union-find is connected iff all n-1 unions succeeded
        for c1 in 0..self.curves.len() {
            for c2 in c1 + 1..self.curves.len() {
                if curve_distance(&self.curves[c1].shape, &self.curves[c2].shape) < 1e-12 {
                    return Err(GeometryError::CurvesTouch(c1, c2));
                }
            }
        }
        // Nesting consistency: the subdomain immediately outside a curve is
        // the inner subdomain of its tightest enclosing curve, or 0.
        for (c, spec) in self.curves.iter().enumerate() {
            let p = spec.shape.sample_point();
            let mut parent: Option<usize> = None;
            for (c2, other) in self.curves.iter().enumerate() {
                if c2 == c || !other.shape.contains(p) {
                    continue;
                }
                parent = Some(match parent {
                    // the tighter of the two nested enclosing curves
                    Some(prev) => {
                        if self.curves[prev]
                            .shape
                            .contains(other.shape.sample_point())
                        {
                            c2
                        } else {
                            prev
                        }
                    }
                    None => c2,
                });
            }
            let expected = parent.map_or(0, |pc| self.curves[pc].between[0]);
            if spec.between[1] != expected {
                return Err(GeometryError::InconsistentNesting {
                    curve: c,
                    declared: spec.between[1],
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Index of the subdomain containing the point: the inner side of the
    /// innermost enclosing curve, or 0 when no curve encloses it.
    pub fn locate(&self, x: [f64; 2]) -> usize {
        let containing: Vec<usize> = (0..self.curves.len())
            .filter(|&c| self.curves[c].shape.contains(x))
            .collect();
        for &c in &containing {
            let inner_most = containing.iter().all(|&c2| {
                c2 == c || self.curves[c2].shape.contains(self.curves[c].shape.sample_point())
            });
            if inner_most {
                return self.curves[c].between[0];
            }
        }
        0
    }

    pub fn mesh(&self) -> Result<Mesh, GeometryError> {
        self.validate()?;
        Mesh::build(self)
    }
}

/// Panel of a meshed curve, with its global node indices.
#[derive(Clone, Copy, Debug)]
pub struct MeshPanel {
    pub nodes: [usize; 2],
    pub curve: usize,
    pub geom: Panel,
}

/// Boundary of one subdomain: references into the skeleton mesh plus the
/// orientation sign of each panel (+1 when the subdomain is the inner side
/// of the panel's curve, -1 otherwise). The outward normal of the
/// subdomain on a panel is `sign * panel.normal()`.
#[derive(Clone, Debug)]
pub struct SubdomainBoundary {
    pub kappa: f64,
    pub panels: Vec<(usize, f64)>,
    /// Sorted global node ids; the local degree-of-freedom order.
    pub nodes: Vec<usize>,
}

impl SubdomainBoundary {
    pub fn local_index(&self, global: usize) -> usize {
        self.nodes.binary_search(&global).expect("node not on this boundary")
    }
}

/// Meshed skeleton of a partition.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub panels: Vec<MeshPanel>,
    /// Per-curve panel index range.
    pub curve_ranges: Vec<(usize, usize)>,
    /// Unit normal at each node: normalized mean of the two adjacent
    /// panel normals, in the curve's own (inner-side outward) orientation.
    pub nodal_normals: Vec<[f64; 2]>,
    /// Curve each node belongs to.
    pub node_curve: Vec<usize>,
    pub boundaries: Vec<SubdomainBoundary>,
}

fn polygon_signed_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

impl Mesh {
    fn build(part: &Partition) -> Result<Mesh, GeometryError> {
        let mut nodes: Vec<[f64; 2]> = Vec::new();
        let mut panels: Vec<MeshPanel> = Vec::new();
        let mut curve_ranges = Vec::new();
        let mut node_curve = Vec::new();
        for (c, spec) in part.curves.iter().enumerate() {
            let start = panels.len();
            let first_node = nodes.len();
            // counterclockwise node loop for this curve
            match &spec.shape {
                CurveShape::Circle { center, radius } => {
                    let n = (2.0 * core::f64::consts::PI * radius / part.h).ceil() as usize;
                    if n < 3 {
                        return Err(GeometryError::TooCoarse { curve: c });
                    }
                    for i in 0..n {
                        let th = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
                        nodes.push([center[0] + radius * th.cos(), center[1] + radius * th.sin()]);
                    }
                }
                CurveShape::Polygon { vertices } => {
                    let mut verts = vertices.clone();
                    if polygon_signed_area(&verts) < 0.0 {
                        verts.reverse();
                    }
                    let nv = verts.len();
                    for i in 0..nv {
                        let a = verts[i];
                        let b = verts[(i + 1) % nv];
                        let len = norm2(sub2(b, a));
                        let m = (len / part.h).ceil().max(1.0) as usize;
                        for k in 0..m {
                            let t = k as f64 / m as f64;
                            nodes.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                        }
                    }
                }
            }
            node_curve.resize(nodes.len(), c);
            let count = nodes.len() - first_node;
            if count < 3 {
                return Err(GeometryError::TooCoarse { curve: c });
            }
            for i in 0..count {
                let a = first_node + i;
                let b = first_node + (i + 1) % count;
                panels.push(MeshPanel {
                    nodes: [a, b],
                    curve: c,
                    geom: Panel { a: nodes[a], b: nodes[b] },
                });
            }
            curve_ranges.push((start, panels.len()));
        }
        // nodal normals: mean of the two incident panel normals
        let mut nodal_normals = vec![[0.0f64; 2]; nodes.len()];
        for p in &panels {
            let n = p.geom.normal();
            for &id in &p.nodes {
                nodal_normals[id][0] += n[0];
                nodal_normals[id][1] += n[1];
            }
        }
        for nn in nodal_normals.iter_mut() {
            let l = norm2(*nn);
            nn[0] /= l;
            nn[1] /= l;
        }
        let mut boundaries = Vec::new();
        for (j, sd) in part.subdomains.iter().enumerate() {
            let mut sub_panels = Vec::new();
            let mut sub_nodes = Vec::new();
            for (c, spec) in part.curves.iter().enumerate() {
                let sign = if spec.between[0] == j {
                    1.0
                } else if spec.between[1] == j {
                    -1.0
                } else {
                    continue;
                };
                let (s, e) = curve_ranges[c];
                for (pid, p) in panels.iter().enumerate().take(e).skip(s) {
                    sub_panels.push((pid, sign));
                    sub_nodes.extend_from_slice(&p.nodes);
                }
            }
            sub_nodes.sort_unstable();
            sub_nodes.dedup();
            boundaries.push(SubdomainBoundary { kappa: sd.kappa, panels: sub_panels, nodes: sub_nodes });
        }
        Ok(Mesh { nodes, panels, curve_ranges, nodal_normals, node_curve, boundaries })
    }

    /// Total dimension of the multi-trace space: one Dirichlet and one
    /// Neumann value per (subdomain, boundary node) pair.
    pub fn multitrace_dim(&self) -> usize {
        self.boundaries.iter().map(|b| 2 * b.nodes.len()).sum()
    }
}

/// Square of side 2 centered at the origin enclosing a disk of radius 1/2:
/// subdomain 1 between the square and the circle, subdomain 2 the disk.
pub fn square_circle_partition(kappas: [f64; 3], h: f64) -> Partition {
    Partition {
        subdomains: kappas.iter().map(|&kappa| Subdomain { kappa }).collect(),
        curves: vec![
            CurveSpec {
                shape: CurveShape::Polygon {
                    vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
                },
                between: [1, 0],
            },
            CurveSpec {
                shape: CurveShape::Circle { center: [0.0, 0.0], radius: 0.5 },
                between: [2, 1],
            },
        ],
        h,
    }
}

/// Single disk of given radius: the basic two-subdomain scatterer.
pub fn single_circle_partition(kappa_ext: f64, kappa_int: f64, radius: f64, h: f64) -> Partition {
    Partition {
        subdomains: vec![Subdomain { kappa: kappa_ext }, Subdomain { kappa: kappa_int }],
        curves: vec![CurveSpec {
            shape: CurveShape::Circle { center: [0.0, 0.0], radius },
            between: [1, 0],
        }],
        h,
    }
}

/// Two unit-width rectangles of height 1 separated by a gap of width
/// `delta` around the y-axis.
pub fn gap_partition(kappas: [f64; 3], delta: f64, h: f64) -> Partition {
    let d = 0.5 * delta;
    Partition {
        subdomains: kappas.iter().map(|&kappa| Subdomain { kappa }).collect(),
        curves: vec![
            CurveSpec {
                shape: CurveShape::Polygon {
                    vertices: vec![[-1.0, -0.5], [-d, -0.5], [-d, 0.5], [-1.0, 0.5]],
                },
                between: [1, 0],
            },
            CurveSpec {
                shape: CurveShape::Polygon {
                    vertices: vec![[d, -0.5], [1.0, -0.5], [1.0, 0.5], [d, 0.5]],
                },
                between: [2, 0],
            },
        ],
        h,
    }
}

/// Concentric circles with strictly decreasing radii; subdomain `i + 1`
/// lies just inside the `i`-th circle.
pub fn concentric_partition(kappas: &[f64], radii: &[f64], h: f64) -> Partition {
    assert_eq!(kappas.len(), radii.len() + 1);
    Partition {
        subdomains: kappas.iter().map(|&kappa| Subdomain { kappa }).collect(),
        curves: radii
            .iter()
            .enumerate()
            .map(|(i, &radius)| CurveSpec {
                shape: CurveShape::Circle { center: [0.0, 0.0], radius },
                between: [i + 1, i],
            })
            .collect(),
        h,
    }
}

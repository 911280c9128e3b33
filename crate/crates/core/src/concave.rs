//! Piecewise-linear concave functions on a convex polygon.
//!
//! A [`ConcaveFunction`] is a triangulated graph: nodes carry heights, every
//! facet carries its affine plane. In classical mode the function vanishes on
//! the boundary; in distributional mode it may carry a nonzero boundary trace,
//! in which case its derivatives are measures with a jump part on `∂Ω`.
//!
//! The least concave majorant of a set of point constraints (zero on the
//! boundary) is the upper convex hull of the lifted points. It is built here
//! by incremental insertion: each new point removes the cavity of facets whose
//! plane passes below it and is coned to the cavity's horizon.

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, ConvexDomain, Direction, Point};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

/// `u(x, y) = gx·x + gy·y + z0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub gx: f64,
    pub gy: f64,
    pub z0: f64,
}

impl Plane {
    pub fn through(p: [Point; 3], z: [f64; 3]) -> Option<Plane> {
        let e1 = p[1] - p[0];
        let e2 = p[2] - p[0];
        let det = e1.cross(e2);
        if det == 0.0 {
            return None;
        }
        let (dz1, dz2) = (z[1] - z[0], z[2] - z[0]);
        let gx = (dz1 * e2.y - dz2 * e1.y) / det;
        let gy = (e1.x * dz2 - e2.x * dz1) / det;
        Some(Plane { gx, gy, z0: z[0] - gx * p[0].x - gy * p[0].y })
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        self.gx * p.x + self.gy * p.y + self.z0
    }

    #[inline]
    pub fn gradient(&self) -> Point {
        Point::new(self.gx, self.gy)
    }

    /// Directional derivative `∇u·h`.
    #[inline]
    pub fn derivative(&self, h: Direction) -> f64 {
        self.gx * h.dx() + self.gy * h.dy()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub p: Point,
    pub z: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    /// Node indices, counterclockwise.
    pub corners: [usize; 3],
    pub plane: Plane,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classical,
    Distributional,
}

/// A piece of `∂Ω` on which the trace is linear.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSegment {
    pub a: Point,
    pub b: Point,
    pub va: f64,
    pub vb: f64,
    /// Outward normal of the containing boundary edge.
    pub normal: Direction,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcaveFunction {
    domain: ConvexDomain,
    nodes: Vec<Node>,
    facets: Vec<Facet>,
    trace: Vec<TraceSegment>,
    mode: Mode,
}

/// Samples of the line maximum `m(t) = max_{chord(t)} u` in a direction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaxProfile {
    pub h: Direction,
    /// `(t, m(t))`.
    pub samples: Vec<(f64, f64)>,
    /// A maximizing point on each chord.
    pub argmax: Vec<Point>,
    /// Global maximum `M` and a point `z` where it is attained.
    pub max: f64,
    pub z: Point,
}

/// The restriction of `u` to one line: sorted breakpoints `(s, z)` with `s`
/// the coordinate along the line direction. Linear between breakpoints.
#[derive(Clone, Debug)]
pub struct LineRestriction {
    pub t: f64,
    pub breakpoints: Vec<(f64, f64)>,
    pub points: Vec<Point>,
}

impl LineRestriction {
    pub fn max(&self) -> f64 {
        self.breakpoints.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> Point {
        let mut best = 0;
        for (i, b) in self.breakpoints.iter().enumerate() {
            if b.1 > self.breakpoints[best].1 {
                best = i;
            }
        }
        self.points[best]
    }

    /// Total variation of the restriction extended by zero outside the chord.
    pub fn total_variation(&self) -> f64 {
        let b = &self.breakpoints;
        let inner: f64 = b.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
        inner + b[0].1.abs() + b[b.len() - 1].1.abs()
    }
}

impl ConcaveFunction {
    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn trace(&self) -> &[TraceSegment] {
        &self.trace
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn facet_points(&self, i: usize) -> [Point; 3] {
        self.facets[i].corners.map(|k| self.nodes[k].p)
    }

    pub fn facet_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.facet_points(i);
        (b - a).cross(c - a) / 2.0
    }

    /// A facet is boundary-adjacent when one of its corners lies on `∂Ω`.
    pub fn is_boundary_adjacent(&self, i: usize) -> bool {
        self.facet_points(i).iter().any(|p| self.domain.on_boundary(*p))
    }

    /// Largest absolute trace value on `∂Ω`.
    pub fn trace_max(&self) -> f64 {
        self.trace.iter().fold(0.0_f64, |m, s| m.max(s.va.abs()).max(s.vb.abs()))
    }

    /// `M` and a maximizing node (piecewise-linear maximum principle).
    pub fn max_value(&self) -> (f64, Point) {
        let mut best = self.nodes[0];
        for n in &self.nodes {
            if n.z > best.z {
                best = *n;
            }
        }
        (best.z, best.p)
    }

    /// Builds a function from nodes and triangles, fitting facet planes from
    /// node heights. Zero-area triangles are dropped.
    pub(crate) fn from_mesh(domain: ConvexDomain, nodes: Vec<Node>, tris: Vec<[usize; 3]>, mode: Mode) -> Self {
        let area_tol = domain.tol() * domain.tol();
        let mut facets = Vec::with_capacity(tris.len());
        for t in tris {
            let mut t = t;
            let p = t.map(|k| nodes[k].p);
            let mut a2 = (p[1] - p[0]).cross(p[2] - p[0]);
            if a2 < 0.0 {
                t.swap(1, 2);
                a2 = -a2;
            }
            if a2 <= area_tol {
                continue;
            }
            let p = t.map(|k| nodes[k].p);
            let z = t.map(|k| nodes[k].z);
            let plane = Plane::through(p, z).expect("positive area");
            facets.push(Facet { corners: t, plane });
        }
        let mut f = Self { domain, nodes, facets, trace: Vec::new(), mode };
        f.trace = f.compute_trace();
        f
    }

    fn compute_trace(&self) -> Vec<TraceSegment> {
        let on_edges: Vec<Vec<usize>> = self.nodes.iter().map(|n| self.domain.boundary_edges_of(n.p)).collect();
        let mut out = Vec::new();
        for f in &self.facets {
            for k in 0..3 {
                let (ia, ib) = (f.corners[k], f.corners[(k + 1) % 3]);
                let Some(&e) = on_edges[ia].iter().find(|e| on_edges[ib].contains(e)) else { continue };
                let (a, b) = (self.nodes[ia].p, self.nodes[ib].p);
                out.push(TraceSegment {
                    a,
                    b,
                    va: f.plane.eval(a),
                    vb: f.plane.eval(b),
                    normal: self.domain.edge_normal(e),
                });
            }
        }
        out
    }

    /// Facets whose closure contains `p`, each with its smallest normalized
    /// barycentric coordinate.
    fn locate_all(&self, p: Point) -> Vec<(usize, f64)> {
        let tol = self.domain.tol();
        let mut out = Vec::new();
        for (i, f) in self.facets.iter().enumerate() {
            let [a, b, c] = f.corners.map(|k| self.nodes[k].p);
            let s = [
                (b - a).cross(p - a) / (b - a).norm(),
                (c - b).cross(p - b) / (c - b).norm(),
                (a - c).cross(p - c) / (a - c).norm(),
            ];
            let m = s[0].min(s[1]).min(s[2]);
            if m >= -tol {
                out.push((i, m));
            }
        }
        out
    }

    pub fn evaluate(&self, p: Point) -> Result<f64> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        let found = self.locate_all(p);
        let best = found.iter().max_by(|a, b| a.1.total_cmp(&b.1)).ok_or(Error::OutsideDomain { x: p.x, y: p.y })?;
        Ok(self.facets[best.0].plane.eval(p))
    }

    /// `(u_x, u_y)` at a regular point; points on an edge between facets with
    /// different planes are not regular.
    pub fn gradient_at(&self, p: Point) -> Result<(f64, f64)> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        let found = self.locate_all(p);
        let tol = self.domain.tol();
        let Some(&(first, m)) = found.first() else {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        };
        if m > tol && found.len() == 1 {
            let g = self.facets[first].plane.gradient();
            return Ok((g.x, g.y));
        }
        let g0 = self.facets[first].plane.gradient();
        let gtol = 1e-9 * (1.0 + g0.norm());
        let same = found.iter().all(|(i, _)| (self.facets[*i].plane.gradient() - g0).norm() <= gtol);
        if same && !self.domain.on_boundary(p) {
            Ok((g0.x, g0.y))
        } else {
            Err(Error::NonRegular { x: p.x, y: p.y })
        }
    }

    /// Restrictions of `u` to the lines parallel to `h` at the given sorted
    /// offsets along `h.normal()`. Lines missing the domain give `None`.
    pub fn restrictions(&self, h: Direction, offsets: &[f64]) -> Vec<Option<LineRestriction>> {
        let n = h.normal().as_point();
        let along = h.as_point();
        let tol = self.domain.tol();
        let mut buckets: Vec<Vec<(f64, f64, Point)>> = vec![Vec::new(); offsets.len()];
        for f in &self.facets {
            let c = f.corners.map(|k| self.nodes[k]);
            let d = c.map(|k| n.dot(k.p));
            let lo = d[0].min(d[1]).min(d[2]);
            let hi = d[0].max(d[1]).max(d[2]);
            let first = offsets.partition_point(|t| *t < lo - tol);
            let last = offsets.partition_point(|t| *t <= hi + tol);
            for (k, bucket) in buckets.iter_mut().enumerate().take(last).skip(first) {
                let t = offsets[k];
                let dd = d.map(|x| x - t);
                for i in 0..3 {
                    let j = (i + 1) % 3;
                    if dd[i].abs() <= tol {
                        bucket.push((along.dot(c[i].p), c[i].z, c[i].p));
                    }
                    if (dd[i] > tol && dd[j] < -tol) || (dd[i] < -tol && dd[j] > tol) {
                        let s = dd[i] / (dd[i] - dd[j]);
                        let p = c[i].p.lerp(c[j].p, s);
                        let z = c[i].z + (c[j].z - c[i].z) * s;
                        bucket.push((along.dot(p), z, p));
                    }
                }
            }
        }
        buckets
            .into_iter()
            .zip(offsets)
            .map(|(mut pts, &t)| {
                if pts.is_empty() {
                    return None;
                }
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut breakpoints: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
                let mut points = Vec::with_capacity(pts.len());
                for (s, z, p) in pts {
                    if breakpoints.last().is_none_or(|b| s - b.0 > tol) {
                        breakpoints.push((s, z));
                        points.push(p);
                    }
                }
                Some(LineRestriction { t, breakpoints, points })
            })
            .collect()
    }

    pub fn restriction(&self, h: Direction, t: f64) -> Option<LineRestriction> {
        self.restrictions(h, &[t]).pop().flatten()
    }

    /// `∫ |∇u·h| ds` along one line, summed facet by facet from the facet
    /// gradients (segments shared by two facets are counted once).
    pub fn line_gradient_integral(&self, h: Direction, t: f64) -> f64 {
        let n = h.normal().as_point();
        let along = h.as_point();
        let tol = self.domain.tol();
        let mut segs: Vec<(f64, f64, f64)> = Vec::new();
        for f in &self.facets {
            let p = f.corners.map(|k| self.nodes[k].p);
            let d = p.map(|q| n.dot(q) - t);
            let mut s: Vec<f64> = Vec::with_capacity(3);
            for i in 0..3 {
                let j = (i + 1) % 3;
                if d[i].abs() <= tol {
                    s.push(along.dot(p[i]));
                }
                if (d[i] > tol && d[j] < -tol) || (d[i] < -tol && d[j] > tol) {
                    s.push(along.dot(p[i].lerp(p[j], d[i] / (d[i] - d[j]))));
                }
            }
            if s.len() >= 2 {
                let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi - lo > tol {
                    segs.push((lo, hi, f.plane.derivative(h).abs()));
                }
            }
        }
        segs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut covered = f64::NEG_INFINITY;
        let mut total = 0.0;
        for (lo, hi, g) in segs {
            let start = lo.max(covered);
            if hi > start {
                total += (hi - start) * g;
                covered = hi;
            }
        }
        total
    }

    /// Uniform offsets spanning the projection of the domain onto `h.normal()`,
    /// endpoints included.
    pub fn offsets(&self, h: Direction, n_lines: usize) -> Vec<f64> {
        let (lo, hi) = self.domain.projection(h.normal().as_point());
        let dt = (hi - lo) / (n_lines - 1) as f64;
        (0..n_lines).map(|k| if k + 1 == n_lines { hi } else { lo + dt * k as f64 }).collect()
    }

    /// Exact maximum of `u` on each of `n_lines` chords parallel to `h`.
    /// The two extreme chords are the closed contact sets of the support lines.
    pub fn max_profile(&self, h: Direction, n_lines: usize) -> Result<MaxProfile> {
        if n_lines < 2 {
            return Err(Error::InvalidArgument("max_profile needs at least 2 lines".into()));
        }
        let offsets = self.offsets(h, n_lines);
        let mut samples = Vec::with_capacity(n_lines);
        let mut argmax = Vec::with_capacity(n_lines);
        for (t, r) in offsets.iter().zip(self.restrictions(h, &offsets)) {
            match r {
                Some(r) => {
                    samples.push((*t, r.max()));
                    argmax.push(r.argmax());
                }
                None => {
                    // only possible through rounding at an extreme offset
                    let c = self.domain.chord(h, *t);
                    let p = c.map(|c| c.a).unwrap_or_default();
                    samples.push((*t, self.evaluate(p).unwrap_or(0.0)));
                    argmax.push(p);
                }
            }
        }
        let (max, z) = self.max_value();
        Ok(MaxProfile { h, samples, argmax, max, z })
    }

    /// Every facet plane lies above every node (hypograph convexity).
    pub fn is_concave(&self, tol: f64) -> bool {
        self.facets.iter().all(|f| self.nodes.iter().all(|n| f.plane.eval(n.p) >= n.z - tol))
    }

    /// Image `ũ = u ∘ F⁻¹` under the affine map `F(p) = M p + t`.
    pub fn map_affine(&self, m: [[f64; 2]; 2], t: Point) -> Result<Self> {
        let domain = self.domain.map_affine(m, t)?;
        let nodes = self.nodes.iter().map(|n| Node { p: crate::geometry::apply_affine(m, t, n.p), z: n.z }).collect();
        let tris = self.facets.iter().map(|f| f.corners).collect();
        Ok(Self::from_mesh(domain, nodes, tris, self.mode))
    }

    /// Structural invariants: the facets tile the domain, the graph is
    /// concave, adjacent facets agree on shared nodes, and the boundary trace
    /// matches the mode.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let area: f64 = (0..self.facets.len()).map(|i| self.facet_area(i)).sum();
        let dom = self.domain.area();
        if ((area - dom) / dom).abs() > 1e-9 {
            return Err(format!("facet areas {area} != domain area {dom}"));
        }
        let scale = 1.0 + self.max_value().0.abs();
        if !self.is_concave(1e-9 * scale) {
            return Err("graph is not concave".into());
        }
        for f in &self.facets {
            for k in f.corners {
                if (f.plane.eval(self.nodes[k].p) - self.nodes[k].z).abs() > 1e-9 * scale {
                    return Err(format!("facet plane disagrees with node {k}"));
                }
            }
        }
        if self.mode == Mode::Classical {
            if self.trace_max() > 1e-9 * scale {
                return Err("classical function with nonzero boundary trace".into());
            }
            if self.nodes.iter().any(|n| n.z < -1e-9 * scale) {
                return Err("classical function takes negative values".into());
            }
        }
        Ok(())
    }
}

struct HullBuilder {
    nodes: Vec<Node>,
    faces: Vec<Option<[usize; 3]>>,
    planes: Vec<Plane>,
    edges: HashMap<(usize, usize), usize>,
    tol: f64,
}

impl HullBuilder {
    fn new(domain: &ConvexDomain) -> Self {
        let nodes: Vec<Node> = domain.vertices().iter().map(|&p| Node { p, z: 0.0 }).collect();
        let mut b = Self { nodes, faces: Vec::new(), planes: Vec::new(), edges: HashMap::new(), tol: domain.tol() };
        for i in 1..domain.len() - 1 {
            b.add_face([0, i, i + 1]);
        }
        b
    }

    fn add_face(&mut self, f: [usize; 3]) {
        let p = f.map(|k| self.nodes[k].p);
        let z = f.map(|k| self.nodes[k].z);
        let plane = Plane::through(p, z).unwrap_or(Plane { gx: 0.0, gy: 0.0, z0: z[0] });
        let id = self.faces.len();
        self.faces.push(Some(f));
        self.planes.push(plane);
        for k in 0..3 {
            self.edges.insert((f[k], f[(k + 1) % 3]), id);
        }
    }

    fn remove_face(&mut self, id: usize) {
        if let Some(f) = self.faces[id].take() {
            for k in 0..3 {
                self.edges.remove(&(f[k], f[(k + 1) % 3]));
            }
        }
    }

    fn locate(&self, q: Point) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, f) in self.faces.iter().enumerate() {
            let Some(f) = f else { continue };
            let [a, b, c] = f.map(|k| self.nodes[k].p);
            let m = ((b - a).cross(q - a) / (b - a).norm())
                .min((c - b).cross(q - b) / (c - b).norm())
                .min((a - c).cross(q - c) / (a - c).norm());
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((i, m));
            }
        }
        best.filter(|(_, m)| *m >= -self.tol).map(|(i, _)| i)
    }

    /// Inserts the lifted point `(q, h)`; returns `false` when it is already
    /// on or below the current graph.
    fn insert(&mut self, q: Point, h: f64) -> Result<bool> {
        let f0 = self.locate(q).ok_or_else(|| Error::Hull(format!("cannot locate {q}")))?;
        let zscale = self.nodes.iter().fold(h.abs(), |m, n| m.max(n.z.abs())).max(1.0);
        let ztol = 1e-12 * zscale;
        if self.planes[f0].eval(q) >= h - ztol {
            return Ok(false);
        }
        let mut cavity = vec![f0];
        let mut in_cavity: HashMap<usize, ()> = HashMap::from([(f0, ())]);
        let mut k = 0;
        while k < cavity.len() {
            let f = self.faces[cavity[k]].expect("live face");
            for e in 0..3 {
                if let Some(&g) = self.edges.get(&(f[(e + 1) % 3], f[e])) {
                    if !in_cavity.contains_key(&g) && self.planes[g].eval(q) < h + ztol {
                        in_cavity.insert(g, ());
                        cavity.push(g);
                    }
                }
            }
            k += 1;
        }
        let mut horizon = Vec::new();
        for &id in &cavity {
            let f = self.faces[id].expect("live face");
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                let twin_inside = self.edges.get(&(b, a)).is_some_and(|g| in_cavity.contains_key(g));
                if !twin_inside {
                    horizon.push((a, b));
                }
            }
        }
        for &(a, b) in &horizon {
            let pa = self.nodes[a].p;
            let pb = self.nodes[b].p;
            if (pb - pa).cross(q - pa) <= self.tol * (pb - pa).norm() {
                return Err(Error::Hull(format!("cavity is not star-shaped from {q}")));
            }
        }
        for id in cavity {
            self.remove_face(id);
        }
        let qi = self.nodes.len();
        self.nodes.push(Node { p: q, z: h });
        for (a, b) in horizon {
            self.add_face([a, b, qi]);
        }
        Ok(true)
    }

    /// Merges adjacent coplanar facets and re-triangulates each merged region
    /// by a fan from its lowest-index node. Unused nodes are dropped.
    fn finish(self, domain: ConvexDomain) -> ConcaveFunction {
        let live: Vec<usize> = (0..self.faces.len()).filter(|&i| self.faces[i].is_some()).collect();
        let zscale = self.nodes.iter().fold(1.0_f64, |m, n| m.max(n.z.abs()));
        let ztol = 1e-10 * zscale;

        // union-find over coplanar neighbours
        let mut parent: HashMap<usize, usize> = live.iter().map(|&i| (i, i)).collect();
        fn find(parent: &mut HashMap<usize, usize>, i: usize) -> usize {
            let p = parent[&i];
            if p == i {
                return i;
            }
            let r = find(parent, p);
            parent.insert(i, r);
            r
        }
        for &i in &live {
            let f = self.faces[i].expect("live");
            for e in 0..3 {
                if let Some(&g) = self.edges.get(&(f[(e + 1) % 3], f[e])) {
                    let gf = self.faces[g].expect("live");
                    let coplanar = gf
                        .iter()
                        .all(|&k| (self.planes[i].eval(self.nodes[k].p) - self.nodes[k].z).abs() <= ztol)
                        && f.iter().all(|&k| (self.planes[g].eval(self.nodes[k].p) - self.nodes[k].z).abs() <= ztol);
                    if coplanar {
                        let (ri, rg) = (find(&mut parent, i), find(&mut parent, g));
                        if ri != rg {
                            parent.insert(ri.max(rg), ri.min(rg));
                        }
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in &live {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }

        let mut tris: Vec<[usize; 3]> = Vec::new();
        for members in groups.values() {
            if members.len() == 1 {
                tris.push(self.faces[members[0]].expect("live"));
                continue;
            }
            let set: HashMap<usize, ()> = members.iter().map(|&i| (i, ())).collect();
            let mut next: HashMap<usize, usize> = HashMap::new();
            for &i in members {
                let f = self.faces[i].expect("live");
                for e in 0..3 {
                    let (a, b) = (f[e], f[(e + 1) % 3]);
                    let inner = self.edges.get(&(b, a)).is_some_and(|g| set.contains_key(g));
                    if !inner {
                        next.insert(a, b);
                    }
                }
            }
            let start = *next.keys().min().expect("boundary");
            let mut cycle = vec![start];
            let mut cur = next[&start];
            while cur != start && cycle.len() <= next.len() {
                cycle.push(cur);
                cur = next[&cur];
            }
            if cycle.len() != next.len() {
                // not a simple region; keep the original facets
                tris.extend(members.iter().map(|&i| self.faces[i].expect("live")));
                continue;
            }
            for w in 1..cycle.len() - 1 {
                tris.push([cycle[0], cycle[w], cycle[w + 1]]);
            }
        }

        // compact nodes, keeping their order
        let mut used = vec![false; self.nodes.len()];
        for t in &tris {
            for &k in t {
                used[k] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if used[i] {
                remap[i] = nodes.len();
                nodes.push(*n);
            }
        }
        let tris = tris.into_iter().map(|t| t.map(|k| remap[k])).collect();
        ConcaveFunction::from_mesh(domain, nodes, tris, Mode::Classical)
    }
}

/// Least concave function vanishing on `∂Ω` with `u(p) >= h` at every
/// constraint `(p, h)`: the upper convex hull of the boundary vertices at
/// height zero and the lifted constraints. Constraints are inserted in
/// lexicographic order, so the facet set does not depend on input order.
pub fn concave_envelope(domain: &ConvexDomain, constraints: &[(Point, f64)]) -> Result<ConcaveFunction> {
    for (p, h) in constraints {
        if !(h.is_finite() && *h > 0.0) {
            return Err(Error::InvalidConstraint(format!("height {h} at {p} must be positive")));
        }
        if !p.is_finite() || domain.inner_distance(*p) <= domain.tol() {
            return Err(Error::InvalidConstraint(format!("{p} is not strictly inside the domain")));
        }
    }
    let mut sorted = constraints.to_vec();
    sorted.sort_by(|a, b| a.0.x.total_cmp(&b.0.x).then(a.0.y.total_cmp(&b.0.y)).then(a.1.total_cmp(&b.1)));
    let mut hull = HullBuilder::new(domain);
    for (p, h) in sorted {
        hull.insert(p, h)?;
    }
    Ok(hull.finish(domain.clone()))
}

/// Constant `height` on the chord `cd`, affine on each side of it, vanishing
/// on the two support lines parallel to `cd`. Carries a boundary trace.
pub fn tent_function(domain: &ConvexDomain, c: Point, d: Point, height: f64) -> Result<ConcaveFunction> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::InvalidArgument(format!("tent height {height} must be positive")));
    }
    for p in [c, d] {
        if !domain.on_boundary(p) {
            return Err(Error::InvalidArgument(format!("tent endpoint {p} is not on the boundary")));
        }
    }
    let dir = Direction::new(d.x - c.x, d.y - c.y)?;
    let n = dir.normal().as_point();
    let t0 = n.dot(c);
    let (lo, hi) = domain.projection(n);
    let tol = domain.tol();
    if t0 - lo <= tol || hi - t0 <= tol {
        return Err(Error::InvalidArgument("tent segment does not split the domain".into()));
    }
    let upper = Plane { gx: -height * n.x / (hi - t0), gy: -height * n.y / (hi - t0), z0: height * hi / (hi - t0) };
    let lower = Plane { gx: height * n.x / (t0 - lo), gy: height * n.y / (t0 - lo), z0: -height * lo / (t0 - lo) };
    let value = |p: Point| upper.eval(p).min(lower.eval(p)).max(0.0);
    let parts = [
        domain.clip(-n, -t0).ok_or_else(|| Error::InvalidArgument("empty side".into()))?,
        domain.clip(n, t0).ok_or_else(|| Error::InvalidArgument("empty side".into()))?,
    ];
    split_mesh(domain, &parts, value, Mode::Distributional)
}

/// Fan-triangulates convex pieces into one mesh, merging coincident nodes.
fn split_mesh(
    domain: &ConvexDomain,
    parts: &[ConvexDomain],
    value: impl Fn(Point) -> f64,
    mode: Mode,
) -> Result<ConcaveFunction> {
    let tol = domain.tol();
    let mut nodes: Vec<Node> = Vec::new();
    let index = |p: Point, nodes: &mut Vec<Node>| -> usize {
        if let Some(i) = nodes.iter().position(|n| n.p.dist(p) <= tol) {
            return i;
        }
        nodes.push(Node { p, z: value(p) });
        nodes.len() - 1
    };
    let mut tris = Vec::new();
    for part in parts {
        let ids: Vec<usize> = part.vertices().iter().map(|p| index(*p, &mut nodes)).collect();
        for i in 1..ids.len() - 1 {
            tris.push([ids[0], ids[i], ids[i + 1]]);
        }
    }
    Ok(ConcaveFunction::from_mesh(domain.clone(), nodes, tris, mode))
}

/// On a triangle: the affine function equal to one on the longest side and
/// zero at the opposite vertex (ties go to the lowest edge index).
pub fn linear_extremal_triangle(domain: &ConvexDomain) -> Result<ConcaveFunction> {
    if domain.len() != 3 {
        return Err(Error::NotApplicable(format!("domain has {} vertices, not a triangle", domain.len())));
    }
    let lens: Vec<f64> = (0..3).map(|i| domain.vertex(i).dist(domain.vertex(i + 1))).collect();
    let longest = lens.iter().cloned().fold(0.0, f64::max);
    let side = lens.iter().position(|l| *l >= longest * (1.0 - 1e-12)).expect("nonempty");
    let (a, _) = domain.edge(side);
    let inward = -domain.edge_normal(side).as_point();
    let apex = domain.vertex(side + 2);
    let height = inward.dot(apex - a);
    let plane = Plane { gx: -inward.x / height, gy: -inward.y / height, z0: 1.0 + inward.dot(a) / height };
    let nodes = domain.vertices().iter().map(|&p| Node { p, z: plane.eval(p) }).collect();
    let mut f = ConcaveFunction::from_mesh(domain.clone(), nodes, vec![[0, 1, 2]], Mode::Distributional);
    f.facets[0].plane = plane;
    Ok(f)
}

/// Where the `u_ω` constraint sits relative to its boundary anchor.
pub fn u_omega_point(domain: &ConvexDomain, anchor: Point, omega: f64) -> Result<Point> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega {omega} must be positive")));
    }
    if !domain.on_boundary(anchor) {
        return Err(Error::InvalidArgument(format!("anchor {anchor} is not on the boundary")));
    }
    let tol = domain.tol();
    let (xmin, xmax) = domain.projection(Point::new(1.0, 0.0));
    let edge = domain.boundary_edge_of(anchor).expect("on boundary");
    let (a, b) = domain.edge(edge);
    let vertical = (b.x - a.x).abs() <= tol;
    let shift = if vertical && (anchor.x - xmin).abs() <= tol {
        Point::new(omega, 0.0)
    } else if vertical && (xmax - anchor.x).abs() <= tol {
        Point::new(-omega, 0.0)
    } else if b.x < a.x {
        // counterclockwise edges running leftwards belong to the upper chain
        Point::new(0.0, -omega)
    } else {
        Point::new(0.0, omega)
    };
    let q = anchor + shift;
    if domain.inner_distance(q) <= tol {
        return Err(Error::NotApplicable(format!("displaced point {q} is not interior (omega too large)")));
    }
    Ok(q)
}

/// Least concave function vanishing on `∂Ω` and equal to one at the anchor
/// displaced inward by `omega`: downwards from the upper boundary chain,
/// upwards from the lower chain, horizontally from a vertical edge.
pub fn family_u_omega(domain: &ConvexDomain, anchor: Point, omega: f64) -> Result<ConcaveFunction> {
    let q = u_omega_point(domain, anchor, omega)?;
    concave_envelope(domain, &[(q, 1.0)])
}

/// Result of the `u_{φ,ε}` construction.
#[derive(Clone, Debug)]
pub struct PhiEpsFamily {
    pub function: ConcaveFunction,
    /// Grid points of `D(φ, ε)`.
    pub sample: Vec<Point>,
    /// Boundary point `ξ` on the near-vertical arc and its distance `r` to `∂Ω'`.
    pub xi: Point,
    pub r: f64,
}

/// Least concave function vanishing on `∂Ω` and equal to one on a hexagonal
/// sample of `D(φ, ε)`: the points within `r/2` of `ξ` at distance at least
/// `ε` from the boundary. `ξ` is the midpoint of the right boundary arc whose
/// outward normals make an angle below `φ` with the x-axis, and `r` is its
/// distance to the boundary of `Ω' = ∩_{|α| >= φ} Π_α`.
pub fn family_u_phi_eps(domain: &ConvexDomain, phi: f64, eps: f64) -> Result<PhiEpsFamily> {
    if !(phi > 0.0 && phi < PI / 2.0) {
        return Err(Error::InvalidArgument(format!("phi {phi} must lie in (0, pi/2)")));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be positive")));
    }
    let n = domain.len();
    let on_arc = |i: usize| domain.edge_normal(i).angle().abs() < phi;
    if !(0..n).any(on_arc) {
        return Err(Error::NotApplicable(
            "no boundary arc with near-horizontal normals: the right vertical support line is angular".into(),
        ));
    }
    if (0..n).all(on_arc) {
        return Err(Error::NotApplicable("every edge lies on the arc".into()));
    }
    let start = (0..n).find(|&i| on_arc(i) && !on_arc((i + n - 1) % n)).expect("arc start");
    let mut chain = vec![domain.vertex(start)];
    let mut i = start;
    while on_arc(i % n) {
        chain.push(domain.vertex(i + 1));
        i += 1;
    }
    let total: f64 = chain.windows(2).map(|w| w[0].dist(w[1])).sum();
    let mut walked = 0.0;
    let mut xi = chain[0];
    for w in chain.windows(2) {
        let l = w[0].dist(w[1]);
        if walked + l >= total / 2.0 {
            xi = w[0].lerp(w[1], (total / 2.0 - walked) / l);
            break;
        }
        walked += l;
    }

    // Ω' as a clipped box
    let (lo, hi) = crate::geometry::bbox(domain.vertices());
    let pad = 10.0 * (hi - lo).norm();
    let mut outer = vec![
        Point::new(lo.x - pad, lo.y - pad),
        Point::new(hi.x + pad, lo.y - pad),
        Point::new(hi.x + pad, hi.y + pad),
        Point::new(lo.x - pad, hi.y + pad),
    ];
    for k in 0..n {
        if !on_arc(k) {
            let nk = domain.edge_normal(k).as_point();
            outer = crate::geometry::clip_polygon(&outer, nk, nk.dot(domain.vertex(k)));
        }
    }
    for alpha in [phi, -phi] {
        let l = domain.support_line(alpha);
        outer = crate::geometry::clip_polygon(&outer, l.normal.as_point(), l.offset);
    }
    let m = outer.len();
    let r = (0..m)
        .map(|k| {
            let a = outer[k];
            let b = outer[(k + 1) % m];
            (b - a).cross(xi - a) / (b - a).norm()
        })
        .fold(f64::INFINITY, f64::min);
    if r <= domain.tol() {
        return Err(Error::NotApplicable("arc point touches the boundary of the outer domain".into()));
    }

    let spacing = eps / 4.0;
    let row = spacing * 3f64.sqrt() / 2.0;
    let rows = (r / 2.0 / row).ceil() as i64;
    let cols = (r / 2.0 / spacing).ceil() as i64 + 1;
    if (2 * rows + 1) as f64 * (2 * cols + 1) as f64 > 4.0e6 {
        return Err(Error::InvalidArgument(format!("eps {eps} is too small for the sampling grid")));
    }
    let mut sample = Vec::new();
    for j in -rows..=rows {
        let shift = if j.rem_euclid(2) == 1 { spacing / 2.0 } else { 0.0 };
        for i in -cols..=cols {
            let p = xi + Point::new(i as f64 * spacing + shift, j as f64 * row);
            if p.dist(xi) <= r / 2.0 && domain.inner_distance(p) >= eps {
                sample.push(p);
            }
        }
    }
    if sample.is_empty() {
        return Err(Error::NotApplicable(format!("D(phi, eps) is empty for eps = {eps}")));
    }
    // equal-height constraints only matter through their convex hull
    let hull = convex_hull(&sample);
    let constraints: Vec<(Point, f64)> = hull.iter().map(|&p| (p, 1.0)).collect();
    let function = concave_envelope(domain, &constraints)?;
    Ok(PhiEpsFamily { function, sample, xi, r })
}

/// JSON descriptor of a function on a given domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionSpec {
    Envelope { constraints: Vec<[f64; 3]> },
    Tent { segment: [[f64; 2]; 2], height: f64 },
    TriangleLinear,
    UOmega { anchor: [f64; 2], omega: f64 },
    UPhiEps { phi: f64, eps: f64 },
}

impl FunctionSpec {
    pub fn build(&self, domain: &ConvexDomain) -> Result<ConcaveFunction> {
        match self {
            FunctionSpec::Envelope { constraints } => {
                let c: Vec<(Point, f64)> = constraints.iter().map(|[x, y, h]| (Point::new(*x, *y), *h)).collect();
                concave_envelope(domain, &c)
            }
            FunctionSpec::Tent { segment, height } => {
                tent_function(domain, segment[0].into(), segment[1].into(), *height)
            }
            FunctionSpec::TriangleLinear => linear_extremal_triangle(domain),
            FunctionSpec::UOmega { anchor, omega } => family_u_omega(domain, (*anchor).into(), *omega),
            FunctionSpec::UPhiEps { phi, eps } => Ok(family_u_phi_eps(domain, *phi, *eps)?.function),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }
}

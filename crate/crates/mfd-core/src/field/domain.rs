//! The four standard carriers, triangulated: an interval, a cycle, the
//! 2-sphere, and the 3-sphere.
//!
//! Meshes are built from minimal seeds (path, polygon, octahedron, 16-cell)
//! and refined by midpoint subdivision with projection back to the unit
//! sphere where applicable. Vertex ids are assigned deterministically, so
//! the same kind always yields the identical complex — refinement loops and
//! on-disk round trips depend on that.
//!
//! Orientation is baked into simplex vertex order: after construction every
//! triangle of a surface is counterclockwise seen from outside, and every
//! tetrahedron of the 3-sphere is positively oriented with respect to the
//! ambient coordinates. `validate` then checks the combinatorial
//! consequences (each edge of a closed surface is traversed once in each
//! direction, each face of the 3-sphere is shared by two tetrahedra with
//! opposite induced orientations).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Which carrier a [`SimplicialDomain`] triangulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    /// `[0,1]` split into `m` equal edges (`m + 1` vertices).
    Interval { m: usize },
    /// Regular `m`-gon on the unit circle, `m ≥ 3`.
    Cycle { m: usize },
    /// Octahedron subdivided `k` times, projected to the unit 2-sphere.
    Sphere2 { k: usize },
    /// 16-cell boundary subdivided `k` times, projected to the unit 3-sphere.
    S3 { k: usize },
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainKind::Interval { m } => write!(f, "interval({m})"),
            DomainKind::Cycle { m } => write!(f, "cycle({m})"),
            DomainKind::Sphere2 { k } => write!(f, "sphere2({k})"),
            DomainKind::S3 { k } => write!(f, "s3({k})"),
        }
    }
}

/// A finite simplicial complex with embedded vertices.
///
/// Vertices are identified by their index; `coords[v]` is the embedding
/// point (1, 2, 3 or 4 components depending on the kind). Edges of the
/// one-dimensional kinds are listed in traversal order; edges of the sphere
/// kinds are listed in lexicographic order with ascending endpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimplicialDomain {
    pub kind: DomainKind,
    pub coords: Vec<Vec<f64>>,
    pub edges: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub tets: Vec<[usize; 4]>,
    /// Orientation signs, one per triangle. Always `+1` after construction
    /// (the sign is folded into the vertex order) but kept explicit so a
    /// file is self-describing.
    pub triangle_orientation: Vec<i8>,
    pub tet_orientation: Vec<i8>,
}

impl SimplicialDomain {
    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    /// Rank of the top nonempty simplex class.
    pub fn dimension(&self) -> usize {
        if !self.tets.is_empty() {
            3
        } else if !self.triangles.is_empty() {
            2
        } else if !self.edges.is_empty() {
            1
        } else {
            0
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
            - self.tets.len() as i64
    }

    /// Curve parameter of a vertex: the coordinate on an interval, the angle
    /// in `(−π, π]` on a cycle.
    pub fn angle(&self, v: usize) -> f64 {
        match self.kind {
            DomainKind::Interval { .. } => self.coords[v][0],
            DomainKind::Cycle { .. } => self.coords[v][1].atan2(self.coords[v][0]),
            _ => panic!("angle() is defined for one-dimensional kinds only"),
        }
    }

    /// Map from unordered vertex pair to position in `edges`.
    pub fn edge_index(&self) -> BTreeMap<[usize; 2], usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, &[a, b])| ([a.min(b), a.max(b)], i))
            .collect()
    }

    /// True when the edge list forms one closed chain covering every vertex.
    pub fn is_cycle(&self) -> bool {
        let m = self.edges.len();
        if m < 3 || m != self.vertex_count() || self.dimension() != 1 {
            return false;
        }
        self.edges
            .iter()
            .zip(self.edges.iter().cycle().skip(1))
            .all(|(e, f)| e[1] == f[0])
    }

    /// True when the triangles form a closed surface (every edge shared by
    /// exactly two of them).
    pub fn is_closed_surface(&self) -> bool {
        if self.triangles.is_empty() || !self.tets.is_empty() {
            return false;
        }
        let mut count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for t in &self.triangles {
            for [a, b] in triangle_edges(*t) {
                *count.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }

    /// Oriented link of a vertex of a 3-complex: the triangles opposite `v`
    /// in the tetrahedra containing it, oriented as the boundary of the
    /// union of those tetrahedra. For the 3-sphere meshes this is a small
    /// 2-sphere around `v`.
    pub fn vertex_link(&self, v: usize) -> Vec<[usize; 3]> {
        let mut link = Vec::new();
        for tet in &self.tets {
            let Some(p) = tet.iter().position(|&x| x == v) else {
                continue;
            };
            let rest: Vec<usize> = tet.iter().copied().filter(|&x| x != v).collect();
            // Moving v to the front costs p transpositions; compensate with
            // one swap when that parity is odd so (v, a, b, c) stays
            // positively oriented.
            let [a, b, c] = [rest[0], rest[1], rest[2]];
            if p % 2 == 0 {
                link.push([a, b, c]);
            } else {
                link.push([a, c, b]);
            }
        }
        link
    }

    /// Structural soundness: simplex closure, orientation coherence, unit
    /// embeddings. Construction always returns validated domains; loaders
    /// call this again on untrusted data.
    pub fn validate(&self) -> Result<()> {
        let v = self.vertex_count();
        let dim_expected = match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Cycle { .. } => 2,
            DomainKind::Sphere2 { .. } => 3,
            DomainKind::S3 { .. } => 4,
        };
        for (i, c) in self.coords.iter().enumerate() {
            if c.len() != dim_expected || c.iter().any(|x| !x.is_finite()) {
                return Err(Error::ValidationFailed(format!(
                    "vertex {i}: expected {dim_expected} finite coordinates"
                )));
            }
            if !matches!(self.kind, DomainKind::Interval { .. }) {
                let r = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (r - 1.0).abs() > 1e-12 {
                    return Err(Error::ValidationFailed(format!(
                        "vertex {i}: norm {r} is off the unit sphere"
                    )));
                }
            }
        }
        if self.triangle_orientation.len() != self.triangles.len()
            || self.tet_orientation.len() != self.tets.len()
        {
            return Err(Error::ValidationFailed(
                "orientation lists do not match simplex lists".into(),
            ));
        }
        let in_range = |s: &[usize]| s.iter().all(|&x| x < v);
        if self.edges.iter().any(|e| !in_range(e) || e[0] == e[1]) {
            return Err(Error::ValidationFailed("edge out of range or degenerate".into()));
        }
        if self.triangles.iter().any(|t| !in_range(t)) || self.tets.iter().any(|t| !in_range(t)) {
            return Err(Error::ValidationFailed("simplex vertex out of range".into()));
        }

        let edge_set: BTreeSet<[usize; 2]> = self
            .edges
            .iter()
            .map(|&[a, b]| [a.min(b), a.max(b)])
            .collect();
        if edge_set.len() != self.edges.len() {
            return Err(Error::ValidationFailed("duplicate edges".into()));
        }
        for t in &self.triangles {
            for [a, b] in triangle_edges(*t) {
                if !edge_set.contains(&[a.min(b), a.max(b)]) {
                    return Err(Error::ValidationFailed(format!(
                        "triangle {t:?} uses a missing edge"
                    )));
                }
            }
        }
        let tri_set: BTreeSet<[usize; 3]> = self.triangles.iter().map(|t| sorted3(*t)).collect();
        if tri_set.len() != self.triangles.len() {
            return Err(Error::ValidationFailed("duplicate triangles".into()));
        }
        for tet in &self.tets {
            for f in tet_faces(*tet) {
                if !tri_set.contains(&sorted3(f)) {
                    return Err(Error::ValidationFailed(format!(
                        "tet {tet:?} uses a missing face"
                    )));
                }
            }
        }

        match self.kind {
            DomainKind::Interval { m } => {
                if v != m + 1 || self.edges.len() != m || self.dimension() != 1 {
                    return Err(Error::ValidationFailed("interval shape mismatch".into()));
                }
                if self.edges.iter().enumerate().any(|(i, e)| *e != [i, i + 1]) {
                    return Err(Error::ValidationFailed("interval edges out of order".into()));
                }
            }
            DomainKind::Cycle { m } => {
                if v != m || !self.is_cycle() {
                    return Err(Error::ValidationFailed("cycle shape mismatch".into()));
                }
            }
            DomainKind::Sphere2 { .. } => {
                if !self.is_closed_surface() {
                    return Err(Error::ValidationFailed(
                        "sphere2 triangles do not close up".into(),
                    ));
                }
                // Coherent orientation: every edge must be traversed once in
                // each direction.
                let mut sum: BTreeMap<[usize; 2], (i64, usize)> = BTreeMap::new();
                for t in &self.triangles {
                    for [a, b] in triangle_edges(*t) {
                        let e = sum.entry([a.min(b), a.max(b)]).or_insert((0, 0));
                        e.0 += if a < b { 1 } else { -1 };
                        e.1 += 1;
                    }
                }
                if sum.values().any(|&(s, c)| s != 0 || c != 2) {
                    return Err(Error::ValidationFailed(
                        "sphere2 orientation is not coherent".into(),
                    ));
                }
                for t in &self.triangles {
                    if det3(&self.coords[t[0]], &self.coords[t[1]], &self.coords[t[2]]) <= 0.0 {
                        return Err(Error::ValidationFailed(format!(
                            "triangle {t:?} is not outward-oriented"
                        )));
                    }
                }
            }
            DomainKind::S3 { .. } => {
                // Every face shared by exactly two tets with opposite
                // induced orientations.
                let mut sum: BTreeMap<[usize; 3], (i64, usize)> = BTreeMap::new();
                for tet in &self.tets {
                    for (i, f) in tet_faces(*tet).into_iter().enumerate() {
                        let induced = if i % 2 == 0 { 1 } else { -1 };
                        let e = sum.entry(sorted3(f)).or_insert((0, 0));
                        e.0 += induced * sort_parity3(f);
                        e.1 += 1;
                    }
                }
                if sum.values().any(|&(s, c)| s != 0 || c != 2) {
                    return Err(Error::ValidationFailed(
                        "s3 orientation is not coherent".into(),
                    ));
                }
                for t in &self.tets {
                    if det4(
                        &self.coords[t[0]],
                        &self.coords[t[1]],
                        &self.coords[t[2]],
                        &self.coords[t[3]],
                    ) <= 0.0
                    {
                        return Err(Error::ValidationFailed(format!(
                            "tet {t:?} is not positively oriented"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// One round of midpoint subdivision. Returns the refined domain and,
    /// for each appended vertex (ids continue after the existing ones), the
    /// parent edge it bisects. Existing vertices keep their ids and
    /// coordinates.
    pub fn subdivided(&self) -> Result<(SimplicialDomain, Vec<[usize; 2]>)> {
        let mut coords = self.coords.clone();
        let mut origins: Vec<[usize; 2]> = Vec::new();
        let mut mid: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let unit = !matches!(self.kind, DomainKind::Interval { .. });
        let mut midpoint = |a: usize, b: usize, coords: &mut Vec<Vec<f64>>| -> usize {
            let key = [a.min(b), a.max(b)];
            if let Some(&id) = mid.get(&key) {
                return id;
            }
            let mut p: Vec<f64> = coords[a]
                .iter()
                .zip(&coords[b])
                .map(|(x, y)| 0.5 * (x + y))
                .collect();
            if unit {
                let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                p.iter_mut().for_each(|x| *x /= r);
            }
            let id = coords.len();
            coords.push(p);
            origins.push(key);
            mid.insert(key, id);
            id
        };

        match self.kind {
            DomainKind::Interval { m } => {
                let mut edges = Vec::with_capacity(2 * m);
                for &[a, b] in &self.edges {
                    let w = midpoint(a, b, &mut coords);
                    edges.push([a, w]);
                    edges.push([w, b]);
                }
                // Interval vertex ids are required to follow the parameter;
                // renumber into canonical order.
                let (refined, appended) = path_domain(
                    DomainKind::Interval { m: 2 * m },
                    coords,
                    edges,
                    self.coords.len(),
                )?;
                Ok((refined, appended.into_iter().map(|i| origins[i]).collect()))
            }
            DomainKind::Cycle { m } => {
                let mut edges = Vec::with_capacity(2 * m);
                for &[a, b] in &self.edges {
                    let w = midpoint(a, b, &mut coords);
                    edges.push([a, w]);
                    edges.push([w, b]);
                }
                let domain = SimplicialDomain {
                    kind: DomainKind::Cycle { m: 2 * m },
                    coords,
                    edges,
                    triangles: vec![],
                    tets: vec![],
                    triangle_orientation: vec![],
                    tet_orientation: vec![],
                };
                domain.validate()?;
                Ok((domain, origins))
            }
            DomainKind::Sphere2 { k } => {
                let mut triangles = Vec::with_capacity(4 * self.triangles.len());
                for &[a, b, c] in &self.triangles {
                    let ab = midpoint(a, b, &mut coords);
                    let bc = midpoint(b, c, &mut coords);
                    let ca = midpoint(c, a, &mut coords);
                    triangles.extend_from_slice(&[
                        [a, ab, ca],
                        [ab, b, bc],
                        [ca, bc, c],
                        [ab, bc, ca],
                    ]);
                }
                let domain =
                    surface_from_triangles(DomainKind::Sphere2 { k: k + 1 }, coords, triangles)?;
                Ok((domain, origins))
            }
            DomainKind::S3 { k } => {
                let mut tets = Vec::with_capacity(8 * self.tets.len());
                for &[v0, v1, v2, v3] in &self.tets {
                    let m01 = midpoint(v0, v1, &mut coords);
                    let m02 = midpoint(v0, v2, &mut coords);
                    let m03 = midpoint(v0, v3, &mut coords);
                    let m12 = midpoint(v1, v2, &mut coords);
                    let m13 = midpoint(v1, v3, &mut coords);
                    let m23 = midpoint(v2, v3, &mut coords);
                    // Four corner tets plus the inner octahedron, split along
                    // its shortest diagonal so elongated cells do not breed
                    // (ties keep the first candidate, deterministically).
                    let dist = |a: usize, b: usize| {
                        coords[a]
                            .iter()
                            .zip(&coords[b])
                            .map(|(x, y)| (x - y) * (x - y))
                            .sum::<f64>()
                    };
                    let diagonals = [
                        (m02, m13, [m01, m03, m23, m12]),
                        (m01, m23, [m02, m03, m13, m12]),
                        (m03, m12, [m01, m02, m23, m13]),
                    ];
                    let &(p, q, equator) = diagonals
                        .iter()
                        .min_by(|a, b| dist(a.0, a.1).partial_cmp(&dist(b.0, b.1)).unwrap())
                        .unwrap();
                    tets.extend_from_slice(&[
                        [v0, m01, m02, m03],
                        [m01, v1, m12, m13],
                        [m02, m12, v2, m23],
                        [m03, m13, m23, v3],
                    ]);
                    for i in 0..4 {
                        tets.push([p, q, equator[i], equator[(i + 1) % 4]]);
                    }
                }
                let domain = solid_from_tets(DomainKind::S3 { k: k + 1 }, coords, tets)?;
                Ok((domain, origins))
            }
        }
    }
}

/// Build one of the standard carriers.
pub fn build_domain(kind: DomainKind) -> Result<SimplicialDomain> {
    match kind {
        DomainKind::Interval { m } => {
            if m < 1 {
                return Err(Error::BadParam("interval needs m ≥ 1".into()));
            }
            let coords: Vec<Vec<f64>> = (0..=m).map(|i| vec![i as f64 / m as f64]).collect();
            let edges = (0..m).map(|i| [i, i + 1]).collect();
            let count = coords.len();
            Ok(path_domain(kind, coords, edges, count)?.0)
        }
        DomainKind::Cycle { m } => {
            // m = 1 would need a self-loop and m = 2 a doubled edge; neither
            // is a simplicial complex, so the smallest cycle is a triangle.
            if m < 3 {
                return Err(Error::BadParam("cycle needs m ≥ 3".into()));
            }
            let coords = (0..m)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect();
            let edges = (0..m).map(|i| [i, (i + 1) % m]).collect();
            let domain = SimplicialDomain {
                kind,
                coords,
                edges,
                triangles: vec![],
                tets: vec![],
                triangle_orientation: vec![],
                tet_orientation: vec![],
            };
            domain.validate()?;
            Ok(domain)
        }
        DomainKind::Sphere2 { k } => {
            // Octahedron: vertices ±e_i, one face per octant.
            let coords: Vec<Vec<f64>> = (0..6)
                .map(|i| {
                    let mut c = vec![0.0; 3];
                    c[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                    c
                })
                .collect();
            let mut triangles = Vec::new();
            for sx in 0..2usize {
                for sy in 0..2usize {
                    for sz in 0..2usize {
                        triangles.push([sx, 2 + sy, 4 + sz]);
                    }
                }
            }
            let mut domain =
                surface_from_triangles(DomainKind::Sphere2 { k: 0 }, coords, triangles)?;
            for _ in 0..k {
                domain = domain.subdivided()?.0;
            }
            Ok(domain)
        }
        DomainKind::S3 { k } => {
            // 16-cell boundary: vertices ±e_i in R⁴, one tet per sign
            // pattern.
            let coords: Vec<Vec<f64>> = (0..8)
                .map(|i| {
                    let mut c = vec![0.0; 4];
                    c[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                    c
                })
                .collect();
            let mut tets = Vec::new();
            for s in 0..16usize {
                tets.push([s >> 3 & 1, 2 + (s >> 2 & 1), 4 + (s >> 1 & 1), 6 + (s & 1)]);
            }
            let mut domain = solid_from_tets(DomainKind::S3 { k: 0 }, coords, tets)?;
            for _ in 0..k {
                domain = domain.subdivided()?.0;
            }
            Ok(domain)
        }
    }
}

/// Assemble an interval-kind domain, renumbering vertices into parameter
/// order. Vertices with id ≥ `old_count` are treated as freshly appended;
/// the second return value lists, for each appended vertex in new-id order,
/// its index in the caller's appended-vertex bookkeeping (`old id −
/// old_count`).
fn path_domain(
    kind: DomainKind,
    coords: Vec<Vec<f64>>,
    edges: Vec<[usize; 2]>,
    old_count: usize,
) -> Result<(SimplicialDomain, Vec<usize>)> {
    let n = coords.len();
    let DomainKind::Interval { m } = kind else {
        return Err(Error::BadParam("path_domain expects an interval kind".into()));
    };
    if n != m + 1 || edges.len() != m {
        return Err(Error::ValidationFailed("interval counts mismatch".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| coords[a][0].partial_cmp(&coords[b][0]).unwrap());
    let mut rank = vec![0usize; n];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let new_coords = order.iter().map(|&v| coords[v].clone()).collect();
    let mut new_edges: Vec<[usize; 2]> = edges.iter().map(|&[a, b]| [rank[a], rank[b]]).collect();
    new_edges.sort();
    let domain = SimplicialDomain {
        kind,
        coords: new_coords,
        edges: new_edges,
        triangles: vec![],
        tets: vec![],
        triangle_orientation: vec![],
        tet_orientation: vec![],
    };
    domain.validate()?;
    let mut appended: Vec<(usize, usize)> = (old_count..n)
        .map(|old_id| (rank[old_id], old_id - old_count))
        .collect();
    appended.sort();
    Ok((domain, appended.into_iter().map(|(_, i)| i).collect()))
}

fn surface_from_triangles(
    kind: DomainKind,
    coords: Vec<Vec<f64>>,
    mut triangles: Vec<[usize; 3]>,
) -> Result<SimplicialDomain> {
    for t in &mut triangles {
        let d = det3(&coords[t[0]], &coords[t[1]], &coords[t[2]]);
        if d.abs() < 1e-12 {
            return Err(Error::ValidationFailed(format!("degenerate triangle {t:?}")));
        }
        if d < 0.0 {
            t.swap(1, 2);
        }
    }
    let edges: Vec<[usize; 2]> = triangles
        .iter()
        .flat_map(|&t| triangle_edges(t))
        .map(|[a, b]| [a.min(b), a.max(b)])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n_tri = triangles.len();
    let domain = SimplicialDomain {
        kind,
        coords,
        edges,
        triangles,
        tets: vec![],
        triangle_orientation: vec![1; n_tri],
        tet_orientation: vec![],
    };
    domain.validate()?;
    Ok(domain)
}

fn solid_from_tets(
    kind: DomainKind,
    coords: Vec<Vec<f64>>,
    mut tets: Vec<[usize; 4]>,
) -> Result<SimplicialDomain> {
    for t in &mut tets {
        let d = det4(&coords[t[0]], &coords[t[1]], &coords[t[2]], &coords[t[3]]);
        if d.abs() < 1e-12 {
            return Err(Error::ValidationFailed(format!("degenerate tet {t:?}")));
        }
        if d < 0.0 {
            t.swap(2, 3);
        }
    }
    let triangles: Vec<[usize; 3]> = tets
        .iter()
        .flat_map(|&t| tet_faces(t))
        .map(sorted3)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let edges: Vec<[usize; 2]> = triangles
        .iter()
        .flat_map(|&t| triangle_edges(t))
        .map(|[a, b]| [a.min(b), a.max(b)])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n_tri = triangles.len();
    let n_tet = tets.len();
    let domain = SimplicialDomain {
        kind,
        coords,
        edges,
        triangles,
        tets,
        triangle_orientation: vec![1; n_tri],
        tet_orientation: vec![1; n_tet],
    };
    domain.validate()?;
    Ok(domain)
}

fn triangle_edges([a, b, c]: [usize; 3]) -> [[usize; 2]; 3] {
    [[a, b], [b, c], [c, a]]
}

/// Faces in boundary order: face `i` omits vertex `i`, with induced sign
/// `(−1)^i` handled by the caller.
fn tet_faces([a, b, c, d]: [usize; 4]) -> [[usize; 3]; 4] {
    [[b, c, d], [a, c, d], [a, b, d], [a, b, c]]
}

fn sorted3(mut t: [usize; 3]) -> [usize; 3] {
    t.sort();
    t
}

/// Parity of the permutation sorting a triple: `+1` even, `−1` odd.
fn sort_parity3(t: [usize; 3]) -> i64 {
    let mut inversions = 0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if t[i] > t[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

fn det3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn det4(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    let mut m = [[0.0f64; 4]; 4];
    for (row, src) in m.iter_mut().zip([a, b, c, d]) {
        row.copy_from_slice(&src[..4]);
    }
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in (col + 1)..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let d = build_domain(DomainKind::Interval { m: 4 }).unwrap();
        assert_eq!(d.vertex_count(), 5);
        assert_eq!(d.edges.len(), 4);
        assert_eq!(d.dimension(), 1);
        assert!((d.angle(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_params_refused() {
        assert!(matches!(
            build_domain(DomainKind::Interval { m: 0 }),
            Err(Error::BadParam(_))
        ));
        assert!(matches!(
            build_domain(DomainKind::Cycle { m: 2 }),
            Err(Error::BadParam(_))
        ));
    }

    #[test]
    fn cycle_closes() {
        let d = build_domain(DomainKind::Cycle { m: 5 }).unwrap();
        assert!(d.is_cycle());
        assert_eq!(d.euler_characteristic(), 0);
    }

    #[test]
    fn octahedron_counts() {
        let d = build_domain(DomainKind::Sphere2 { k: 0 }).unwrap();
        assert_eq!(
            (d.vertex_count(), d.edges.len(), d.triangles.len()),
            (6, 12, 8)
        );
        assert_eq!(d.euler_characteristic(), 2);
        assert!(d.is_closed_surface());
    }

    #[test]
    fn subdivided_sphere_counts() {
        let d = build_domain(DomainKind::Sphere2 { k: 1 }).unwrap();
        assert_eq!(
            (d.vertex_count(), d.edges.len(), d.triangles.len()),
            (18, 48, 32)
        );
        assert_eq!(d.euler_characteristic(), 2);
        let d2 = build_domain(DomainKind::Sphere2 { k: 2 }).unwrap();
        assert_eq!(d2.vertex_count(), 66);
        assert_eq!(d2.euler_characteristic(), 2);
        for c in &d2.coords {
            let r = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn orthoplex_counts() {
        let d = build_domain(DomainKind::S3 { k: 0 }).unwrap();
        assert_eq!(
            (
                d.vertex_count(),
                d.edges.len(),
                d.triangles.len(),
                d.tets.len()
            ),
            (8, 24, 32, 16)
        );
        assert_eq!(d.euler_characteristic(), 0);
    }

    #[test]
    fn subdivided_orthoplex_counts() {
        let d = build_domain(DomainKind::S3 { k: 1 }).unwrap();
        assert_eq!(
            (
                d.vertex_count(),
                d.edges.len(),
                d.triangles.len(),
                d.tets.len()
            ),
            (32, 160, 256, 128)
        );
        assert_eq!(d.euler_characteristic(), 0);
    }

    #[test]
    fn subdivision_reports_parent_edges() {
        let d = build_domain(DomainKind::Cycle { m: 4 }).unwrap();
        let (fine, origins) = d.subdivided().unwrap();
        assert_eq!(fine.vertex_count(), 8);
        assert_eq!(origins.len(), 4);
        assert_eq!(origins[0], [0, 1]);
        // Midpoints were pushed back to the unit circle.
        for v in 4..8 {
            let c = &fine.coords[v];
            assert!(((c[0] * c[0] + c[1] * c[1]).sqrt() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn interval_subdivision_renumbers_by_parameter() {
        let d = build_domain(DomainKind::Interval { m: 2 }).unwrap();
        let (fine, origins) = d.subdivided().unwrap();
        assert_eq!(fine.kind, DomainKind::Interval { m: 4 });
        for v in 0..5 {
            assert!((fine.angle(v) - v as f64 / 4.0).abs() < 1e-15);
        }
        // New vertices sit at parameter ranks 1 and 3 and bisect the
        // original edges in order.
        assert_eq!(origins, vec![[0, 1], [1, 2]]);
    }

    #[test]
    fn vertex_link_is_a_small_sphere() {
        let d = build_domain(DomainKind::S3 { k: 0 }).unwrap();
        let link = d.vertex_link(0);
        assert_eq!(link.len(), 8);
        // Each link edge is shared by exactly two link triangles, traversed
        // in opposite directions: the link is itself a closed oriented
        // surface.
        let mut sum: BTreeMap<[usize; 2], (i64, usize)> = BTreeMap::new();
        for t in &link {
            for [a, b] in super::triangle_edges(*t) {
                let e = sum.entry([a.min(b), a.max(b)]).or_insert((0, 0));
                e.0 += if a < b { 1 } else { -1 };
                e.1 += 1;
            }
        }
        assert!(sum.values().all(|&(s, c)| s == 0 && c == 2));
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let d = build_domain(DomainKind::Sphere2 { k: 1 }).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        let back: SimplicialDomain = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
        back.validate().unwrap();
    }
}

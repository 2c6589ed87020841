//! Topological certificates and the counterexample fields they convict.
//!
//! Four integer-valued invariants block approximate diagonalization, each
//! tied to a carrier sub-complex: loop monodromy of the matched spectrum,
//! winding of `det(u)` around a cycle, the Chern number of a rank-one band
//! over a closed surface, and the degree of an SU(2)-valued field over the
//! 3-sphere. A nonzero value is not an error — it is a certified refusal,
//! packaged as an [`ObstructionReport`] so drivers and the CLI can surface
//! it verbatim.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dense::{hermitian_eig, Matrix, C64};
use crate::error::Error;
use crate::field::{DomainKind, Generator, GeneratorField, GeneratorKind, SimplicialDomain};
use crate::Result;

/// Which invariant a report certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionKind {
    Monodromy,
    DetWinding,
    Chern,
    Degree3,
}

impl std::fmt::Display for ObstructionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObstructionKind::Monodromy => "monodromy",
            ObstructionKind::DetWinding => "det_winding",
            ObstructionKind::Chern => "chern",
            ObstructionKind::Degree3 => "degree3",
        })
    }
}

/// The certified value: a track permutation or an integer invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionValue {
    Permutation(Vec<usize>),
    Integer(i64),
}

impl std::fmt::Display for ObstructionValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ObstructionValue::Permutation(p) => f.write_str(&cycle_notation(p)),
            ObstructionValue::Integer(n) => write!(f, "{n}"),
        }
    }
}

/// A certified topological obstruction.
///
/// `tension_flag` marks certificates computed on carriers of dimension ≤ 2,
/// where a nonzero value sits uneasily next to the general low-dimension
/// diagonalization guarantee: the certificate is still honest (it refers to
/// label selections at the *requested* resolution), and the flag tells the
/// reader that refining the resolution, not the mesh, is the way out.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub kind: ObstructionKind,
    pub value: ObstructionValue,
    /// The sub-complex the invariant was computed on.
    pub carrier: String,
    /// One human-readable line for the report body.
    pub verdict: String,
    pub tension_flag: bool,
}

impl ObstructionReport {
    /// Nontrivial loop monodromy of the matched spectrum.
    pub fn monodromy(perm: Vec<usize>, carrier: impl Into<String>) -> ObstructionReport {
        let nontrivial = perm.iter().enumerate().any(|(i, &j)| i != j);
        let verdict = format!(
            "labels return permuted by {} after one loop: the spectrum is a \
             nontrivial covering, so no continuous label selection closes up \
             at this resolution",
            cycle_notation(&perm)
        );
        ObstructionReport {
            kind: ObstructionKind::Monodromy,
            value: ObstructionValue::Permutation(perm),
            carrier: carrier.into(),
            verdict,
            tension_flag: nontrivial,
        }
    }

    /// Winding of `det(u)` around a cycle.
    pub fn det_winding(w: i64, carrier: impl Into<String>) -> ObstructionReport {
        let verdict = format!(
            "det(u) winds {w} time(s) around the loop; any diagonal model \
             must spend the same winding across its label paths"
        );
        ObstructionReport {
            kind: ObstructionKind::DetWinding,
            value: ObstructionValue::Integer(w),
            carrier: carrier.into(),
            verdict,
            tension_flag: w != 0,
        }
    }

    /// Chern number of a rank-one band over a closed surface. `tension` is
    /// supplied by the caller because the same certificate is tension-free
    /// when the surface is a vertex link inside a 3-complex.
    pub fn chern(c: i64, carrier: impl Into<String>, tension: bool) -> ObstructionReport {
        let verdict = format!(
            "the band line bundle has Chern number {c}; a continuous rank-one \
             projection decomposition would force 0"
        );
        ObstructionReport {
            kind: ObstructionKind::Chern,
            value: ObstructionValue::Integer(c),
            carrier: carrier.into(),
            verdict,
            tension_flag: tension && c != 0,
        }
    }

    /// Degree of an SU(2)-valued field over the 3-sphere.
    pub fn degree3(d: i64, carrier: impl Into<String>) -> ObstructionReport {
        let verdict = format!(
            "the field covers SU(2) with degree {d}; diagonal models with \
             contractible label loops and trivial line bundles have degree 0"
        );
        ObstructionReport {
            kind: ObstructionKind::Degree3,
            value: ObstructionValue::Integer(d),
            carrier: carrier.into(),
            verdict,
            // Dimension-3 carriers are outside the low-dimension guarantee.
            tension_flag: false,
        }
    }

    pub fn is_trivial(&self) -> bool {
        match &self.value {
            ObstructionValue::Permutation(p) => p.iter().enumerate().all(|(i, &j)| i == j),
            ObstructionValue::Integer(n) => *n == 0,
        }
    }
}

/// One-based cycle notation for a permutation, fixed points omitted;
/// the identity prints as `id`.
pub(crate) fn cycle_notation(perm: &[usize]) -> String {
    let mut seen = vec![false; perm.len()];
    let mut out = String::new();
    for start in 0..perm.len() {
        if seen[start] || perm[start] == start {
            continue;
        }
        out.push('(');
        let mut i = start;
        loop {
            seen[i] = true;
            if i != start {
                out.push(' ');
            }
            out.push_str(&(i + 1).to_string());
            i = perm[i];
            if i == start {
                break;
            }
        }
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("id");
    }
    out
}

/// Round a phase sum to an integer, refusing when the value sits within 0.1
/// of a rounding boundary — coarse meshes fail loudly instead of flipping.
pub(crate) fn quantize(x: f64, what: &str) -> Result<i64> {
    let r = x.round();
    if (x - r).abs() > 0.4 {
        return Err(Error::MeshTooCoarse(format!(
            "{what} = {x:.4} has no 0.1 margin to the nearest integer"
        )));
    }
    Ok(r as i64)
}

// ---------------------------------------------------------------------------
// det winding

/// Winding number of `arg det(u)` around a cycle domain.
///
/// Per-edge increments are taken on the principal branch and must stay below
/// `π − 0.1`; a coarser sampling cannot distinguish winding from aliasing and
/// is rejected.
pub fn det_winding(field: &GeneratorField, gen: usize) -> Result<i64> {
    if !field.domain.is_cycle() {
        return Err(Error::DomainMismatch(format!(
            "det winding needs a cycle domain, got {}",
            field.domain.kind
        )));
    }
    let g = field
        .generators
        .get(gen)
        .ok_or_else(|| Error::BadParam(format!("no generator {gen}")))?;
    if g.kind != GeneratorKind::Unitary {
        return Err(Error::BadParam(format!(
            "det winding is defined for unitary generators, `{}` is {}",
            g.name, g.kind
        )));
    }
    // Sample at each edge tail: the edge list of a valid cycle is a closed
    // walk, so this visits the loop in traversal order even when refinement
    // has renumbered the vertices out of angular order.
    let dets: Vec<C64> = field
        .domain
        .edges
        .iter()
        .map(|&[a, _]| g.samples[a].det())
        .collect();
    winding_of_loop(&dets, "det(u)")
}

/// Winding of a closed loop of nonzero complex values; `values[i]` connects
/// to `values[(i+1) % len]`.
pub(crate) fn winding_of_loop(values: &[C64], what: &str) -> Result<i64> {
    let mut total = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        let b = values[(i + 1) % values.len()];
        if a.norm() < 1e-9 || b.norm() < 1e-9 {
            return Err(Error::BadParam(format!(
                "{what} vanishes at a sample; winding undefined"
            )));
        }
        let inc = (b * a.conj()).arg();
        if inc.abs() > PI - 0.1 {
            return Err(Error::MeshTooCoarse(format!(
                "{what} jumps by {inc:.3} rad across one edge; refine the cycle"
            )));
        }
        total += inc;
    }
    quantize(total / (2.0 * PI), &format!("winding of {what}"))
}

// ---------------------------------------------------------------------------
// Chern number

/// Chern number of a rank-one projection field over a closed oriented
/// triangulated surface.
///
/// The standard lattice construction: pick the unit band state `ψ_v` at each
/// vertex, multiply the three overlaps around every positively oriented
/// triangle, and sum the arguments. Orientation is the one stored in the
/// domain (outward-pointing for the built spheres), under which the lower
/// band of `k̂·σ` comes out at −1.
pub fn chern_number(projections: &[Matrix], domain: &SimplicialDomain) -> Result<i64> {
    if !domain.is_closed_surface() {
        return Err(Error::DomainMismatch(format!(
            "Chern numbers need a closed oriented surface, got {}",
            domain.kind
        )));
    }
    if projections.len() != domain.vertex_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} projections over {} vertices",
            projections.len(),
            domain.vertex_count()
        )));
    }
    chern_over_triangles(projections, &domain.triangles)
}

/// The raw triangle-sum form of [`chern_number`], for surfaces that exist
/// only as triangle lists (vertex links). Projections are indexed by the ids
/// appearing in `triangles`.
pub(crate) fn chern_over_triangles(
    projections: &[Matrix],
    triangles: &[[usize; 3]],
) -> Result<i64> {
    let states = band_states(projections)?;
    let mut total = 0.0f64;
    for tri in triangles {
        let mut flux = C64::new(1.0, 0.0);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let z = crate::dense::inner(&states[a], &states[b]);
            if z.norm() < 0.1 {
                return Err(Error::OverlapCollapse { value: z.norm() });
            }
            flux *= z;
        }
        total += flux.arg();
    }
    quantize(total / (2.0 * PI), "Chern flux sum")
}

/// Unit band state (top eigenvector) of each rank-one projection.
fn band_states(projections: &[Matrix]) -> Result<Vec<Vec<C64>>> {
    projections
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let herm = p.hermitian_deviation();
            let idem = p.mul(p).sub(p).op_norm();
            let tr = p.trace();
            if herm > 1e-8 || idem > 1e-8 || (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
                return Err(Error::BadParam(format!(
                    "vertex {v}: not a rank-one projection \
                     (herm {herm:.1e}, idem {idem:.1e}, trace {tr})"
                )));
            }
            let eig = hermitian_eig(p)?;
            // Ascending label order puts the rank-one band last.
            Ok(eig.frame.column(p.dim() - 1))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// degree over S³

/// Degree of an SU(2)-valued unitary field over a triangulated 3-sphere.
///
/// SU(2) is identified with the unit sphere in R⁴ through the first column
/// `(z, w)` of `u = [[z, −w̄], [w, z̄]]`. The simplicial approximation covers
/// a regular value `r` once per tetrahedron whose image cone contains `r`
/// with all-positive barycentric weights, signed by the image orientation.
pub fn degree3(field: &GeneratorField, gen: usize) -> Result<i64> {
    if !matches!(field.domain.kind, DomainKind::S3 { .. }) {
        return Err(Error::DomainMismatch(format!(
            "degree needs an s3 domain, got {}",
            field.domain.kind
        )));
    }
    let g = field
        .generators
        .get(gen)
        .ok_or_else(|| Error::BadParam(format!("no generator {gen}")))?;
    if g.kind != GeneratorKind::Unitary || field.n != 2 {
        return Err(Error::BadParam(
            "degree is defined for 2×2 unitary generators".into(),
        ));
    }
    let points: Vec<[f64; 4]> = g
        .samples
        .iter()
        .enumerate()
        .map(|(v, u)| su2_point(v, u))
        .collect::<Result<_>>()?;

    for (t, tet) in field.domain.tets.iter().enumerate() {
        let mut diam = 0.0f64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                diam = diam.max(dist4(&points[tet[i]], &points[tet[j]]));
            }
        }
        if diam >= 1.0 {
            return Err(Error::MeshTooCoarse(format!(
                "tet {t} has image diameter {diam:.3} ≥ 1; refine before counting"
            )));
        }
    }

    let mut centroid = [0.0f64; 4];
    for p in &points {
        for k in 0..4 {
            centroid[k] += p[k];
        }
    }
    let norm = centroid.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut candidates: Vec<[f64; 4]> = Vec::new();
    if norm > 1e-7 {
        candidates.push(std::array::from_fn(|k| -centroid[k] / norm));
    }
    // Fallbacks for symmetric images (centroid ≈ 0): golden-ratio directions
    // that no midpoint-subdivided vertex can hit, tried in a fixed order.
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    for dir in [
        [1.0, phi, phi * phi, phi * phi * phi],
        [-1.0, phi, -phi * phi, phi * phi * phi],
        [phi * phi * phi, 1.0, phi, phi * phi],
        [-phi, 1.0, phi * phi * phi, -phi * phi],
    ] {
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        candidates.push(std::array::from_fn(|k| dir[k] / n));
    }

    'candidate: for r in &candidates {
        let mut degree = 0i64;
        for tet in &field.domain.tets {
            let cols = std::array::from_fn(|i| points[tet[i]]);
            match cone_coverage(&cols, r) {
                Coverage::Covered(sign) => degree += sign,
                Coverage::Missed => {}
                Coverage::Ambiguous => continue 'candidate,
            }
        }
        return Ok(degree);
    }
    Err(Error::MeshTooCoarse(
        "no regular value with certified margin; refine the mesh".into(),
    ))
}

fn su2_point(v: usize, u: &Matrix) -> Result<[f64; 4]> {
    let det = u.det();
    if (det - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::NotSpecialUnitary(format!(
            "vertex {v}: det(u) = {det} is not 1 within 1e-8"
        )));
    }
    let z = u.get(0, 0);
    let w = u.get(1, 0);
    Ok([z.re, z.im, w.re, w.im])
}

fn dist4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

enum Coverage {
    Covered(i64),
    Missed,
    Ambiguous,
}

/// Does the cone over the image tetrahedron contain the ray through `r`?
/// Solves `M λ = r` with `M`'s columns the four image points by Gaussian
/// elimination; all weights ≥ margin means covered (signed by `det M`), any
/// weight ≤ −margin means missed, everything else is too close to call.
fn cone_coverage(cols: &[[f64; 4]; 4], r: &[f64; 4]) -> Coverage {
    const MARGIN: f64 = 1e-7;
    let mut m = [[0.0f64; 5]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = cols[j][i];
        }
        m[i][4] = r[i];
    }
    let mut sign = 1i64;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col].abs() < 1e-12 {
            // Rank-deficient image (a flattened tet): it covers nothing
            // unless r lies in its span, which a regular value must not.
            let consistent = (col..4).all(|row| m[row][4].abs() < 1e-9);
            return if consistent { Coverage::Ambiguous } else { Coverage::Missed };
        }
        if pivot != col {
            m.swap(pivot, col);
            sign = -sign;
        }
        if m[col][col] < 0.0 {
            sign = -sign;
        }
        for row in (col + 1)..4 {
            let f = m[row][col] / m[col][col];
            for j in col..5 {
                m[row][j] -= f * m[col][j];
            }
        }
    }
    let mut lambda = [0.0f64; 4];
    for i in (0..4).rev() {
        let mut s = m[i][4];
        for j in (i + 1)..4 {
            s -= m[i][j] * lambda[j];
        }
        lambda[i] = s / m[i][i];
    }
    if lambda.iter().all(|&l| l > MARGIN) {
        Coverage::Covered(sign)
    } else if lambda.iter().any(|&l| l < -MARGIN) {
        Coverage::Missed
    } else {
        Coverage::Ambiguous
    }
}

// ---------------------------------------------------------------------------
// counterexample generators

/// The stock counterexample fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleKind {
    /// `u(z, w) = [[z, −w̄], [w, z̄]]` over the 3-sphere — the degree-1 SU(2)
    /// identity, not approximately diagonalizable.
    S3Unitary,
    /// `u(θ) = [[0, e^{iθ}], [1, 0]]` over a cycle — eigenvalues `±e^{iθ/2}`
    /// braid into a double cover.
    Braid,
    /// `b = (u − u*)/2i` over the 3-sphere — Hermitian with eigenvalue
    /// collisions exactly at `(z, w) = (±1, 0)`, carrying Chern ∓1 line
    /// bundles on small spheres around them.
    Count1B,
    /// `b ⊕ 1_{n−2}` — the block embedding of `count1_b` into `M_n`.
    TCount(usize),
}

impl std::fmt::Display for ExampleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExampleKind::S3Unitary => f.write_str("s3_unitary"),
            ExampleKind::Braid => f.write_str("braid"),
            ExampleKind::Count1B => f.write_str("count1_b"),
            ExampleKind::TCount(n) => write!(f, "tcount({n})"),
        }
    }
}

impl std::str::FromStr for ExampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ExampleKind> {
        match s {
            "s3_unitary" => Ok(ExampleKind::S3Unitary),
            "braid" => Ok(ExampleKind::Braid),
            "count1_b" => Ok(ExampleKind::Count1B),
            _ => {
                if let Some(inner) = s.strip_prefix("tcount(").and_then(|t| t.strip_suffix(')')) {
                    let n: usize = inner
                        .parse()
                        .map_err(|_| Error::BadParam(format!("bad tcount size in `{s}`")))?;
                    return Ok(ExampleKind::TCount(n));
                }
                Err(Error::BadParam(format!(
                    "unknown example `{s}` (try s3_unitary, braid, count1_b, tcount(n))"
                )))
            }
        }
    }
}

/// Build one of the stock counterexample fields over a matching domain.
pub fn gen_example(kind: ExampleKind, domain: &SimplicialDomain) -> Result<GeneratorField> {
    match kind {
        ExampleKind::S3Unitary => {
            let coords = s3_coords(kind, domain)?;
            let samples = coords.iter().map(|&(z, w)| su2_matrix(z, w)).collect();
            GeneratorField::new(
                domain.clone(),
                2,
                vec![Generator {
                    name: "u".into(),
                    kind: GeneratorKind::Unitary,
                    samples,
                    lipschitz_hint: Some(2.0),
                }],
            )
        }
        ExampleKind::Braid => {
            if !domain.is_cycle() {
                return Err(Error::DomainMismatch(format!(
                    "braid lives on a cycle, got {}",
                    domain.kind
                )));
            }
            let samples = (0..domain.vertex_count())
                .map(|v| {
                    let t = domain.angle(v);
                    Matrix::from_rows(&[
                        vec![C64::new(0.0, 0.0), C64::from_polar(1.0, t)],
                        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                    ])
                    .expect("2×2 rows")
                })
                .collect();
            GeneratorField::new(
                domain.clone(),
                2,
                vec![Generator {
                    name: "u".into(),
                    kind: GeneratorKind::Unitary,
                    samples,
                    lipschitz_hint: Some(1.0),
                }],
            )
        }
        ExampleKind::Count1B => {
            let coords = s3_coords(kind, domain)?;
            let samples = coords.iter().map(|&(z, w)| count1_matrix(z, w)).collect();
            GeneratorField::new(
                domain.clone(),
                2,
                vec![Generator {
                    name: "b".into(),
                    kind: GeneratorKind::Hermitian,
                    samples,
                    lipschitz_hint: Some(2.0),
                }],
            )
        }
        ExampleKind::TCount(n) => {
            if n < 3 {
                return Err(Error::BadParam(format!(
                    "tcount needs n ≥ 3 to have a nontrivial identity block, got {n}"
                )));
            }
            let coords = s3_coords(kind, domain)?;
            let samples = coords
                .iter()
                .map(|&(z, w)| {
                    let b = count1_matrix(z, w);
                    Matrix::from_fn(n, |i, j| match (i, j) {
                        (0..=1, 0..=1) => b.get(i, j),
                        _ if i == j => C64::new(1.0, 0.0),
                        _ => C64::new(0.0, 0.0),
                    })
                })
                .collect();
            GeneratorField::new(
                domain.clone(),
                n,
                vec![Generator {
                    name: "b_block".into(),
                    kind: GeneratorKind::Hermitian,
                    samples,
                    lipschitz_hint: Some(2.0),
                }],
            )
        }
    }
}

/// `(z, w)` coordinates for the S³-based examples. The 3-sphere maps its
/// R⁴ coordinates to `(x₀ + ix₁, x₂ + ix₃)`; the 2-sphere embeds as the
/// real-`w` equator `(x + iy, ζ)`, which is all `tcount` needs.
fn s3_coords(kind: ExampleKind, domain: &SimplicialDomain) -> Result<Vec<(C64, C64)>> {
    match domain.kind {
        DomainKind::S3 { .. } => Ok(domain
            .coords
            .iter()
            .map(|c| (C64::new(c[0], c[1]), C64::new(c[2], c[3])))
            .collect()),
        DomainKind::Sphere2 { .. } if matches!(kind, ExampleKind::TCount(_)) => Ok(domain
            .coords
            .iter()
            .map(|c| (C64::new(c[0], c[1]), C64::new(c[2], 0.0)))
            .collect()),
        _ => Err(Error::DomainMismatch(format!(
            "{kind} needs an s3 domain{}, got {}",
            if matches!(kind, ExampleKind::TCount(_)) {
                " (or the equatorial sphere2)"
            } else {
                ""
            },
            domain.kind
        ))),
    }
}

fn su2_matrix(z: C64, w: C64) -> Matrix {
    Matrix::from_rows(&[vec![z, -w.conj()], vec![w, z.conj()]]).expect("2×2 rows")
}

/// `b = (u − u*)/2i = [[Im z, i w̄], [−i w, −Im z]]`, written out directly.
fn count1_matrix(z: C64, w: C64) -> Matrix {
    let i = C64::new(0.0, 1.0);
    Matrix::from_rows(&[
        vec![C64::new(z.im, 0.0), i * w.conj()],
        vec![-i * w, C64::new(-z.im, 0.0)],
    ])
    .expect("2×2 rows")
}

/// Chern certificates on the vertex links of a field's spectral collisions.
///
/// Finds the vertices where the generator's eigenvalue gap collapses (below
/// `1e-6`), takes the negative band's projection over each vertex link, and
/// computes its Chern number on that small sphere. For `count1_b` the
/// collisions sit exactly at `(z, w) = (±1, 0)` and the links certify ±1.
pub fn link_chern_certificates(
    field: &GeneratorField,
    gen: usize,
) -> Result<Vec<ObstructionReport>> {
    if !matches!(field.domain.kind, DomainKind::S3 { .. }) {
        return Err(Error::DomainMismatch(format!(
            "vertex links of a 3-complex required, got {}",
            field.domain.kind
        )));
    }
    let g = field
        .generators
        .get(gen)
        .ok_or_else(|| Error::BadParam(format!("no generator {gen}")))?;
    if g.kind != GeneratorKind::Hermitian {
        return Err(Error::BadParam(
            "link certificates read a Hermitian generator's bands".into(),
        ));
    }
    let decomps: Vec<_> = g
        .samples
        .iter()
        .map(hermitian_eig)
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = decomps
        .iter()
        .map(|d| {
            d.labels
                .windows(2)
                .map(|w| (w[1].re - w[0].re).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut reports = Vec::new();
    for v in 0..field.domain.vertex_count() {
        if gaps[v] > 1e-6 {
            continue;
        }
        let link = field.domain.vertex_link(v);
        // Remap link vertex ids to a dense local range.
        let mut local: Vec<usize> = link.iter().flatten().copied().collect();
        local.sort_unstable();
        local.dedup();
        let index_of = |id: usize| local.binary_search(&id).expect("link vertex");
        let triangles: Vec<[usize; 3]> = link
            .iter()
            .map(|t| [index_of(t[0]), index_of(t[1]), index_of(t[2])])
            .collect();
        let projections: Vec<Matrix> = local
            .iter()
            .map(|&w| {
                if gaps[w] <= 1e-6 {
                    return Err(Error::MeshTooCoarse(format!(
                        "link of vertex {v} touches another collision at vertex {w}"
                    )));
                }
                // Negative band = all tracks below the gap; rank one for n=2.
                Ok(decomps[w].frame.column_projection(0))
            })
            .collect::<Result<_>>()?;
        if field.n != 2 {
            return Err(Error::BadParam(
                "link certificates are implemented for n = 2 bands".into(),
            ));
        }
        let c = chern_over_triangles(&projections, &triangles)?;
        reports.push(ObstructionReport::chern(
            c,
            format!("link of vertex {v}"),
            false,
        ));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_domain, DomainKind};

    #[test]
    fn cycle_notation_reads_one_based() {
        assert_eq!(cycle_notation(&[0, 1, 2]), "id");
        assert_eq!(cycle_notation(&[1, 0]), "(1 2)");
        assert_eq!(cycle_notation(&[1, 0, 3, 2]), "(1 2)(3 4)");
        assert_eq!(cycle_notation(&[2, 0, 1]), "(1 3 2)");
    }

    #[test]
    fn quantize_needs_margin() {
        assert_eq!(quantize(0.95, "t").unwrap(), 1);
        assert_eq!(quantize(-2.04, "t").unwrap(), -2);
        assert!(matches!(
            quantize(0.55, "t"),
            Err(Error::MeshTooCoarse(_))
        ));
    }

    fn winding_field(m: usize) -> GeneratorField {
        let domain = build_domain(DomainKind::Cycle { m }).unwrap();
        let samples = (0..m)
            .map(|v| {
                let t = domain.angle(v);
                Matrix::diag(&[C64::from_polar(1.0, t), C64::new(1.0, 0.0)])
            })
            .collect();
        GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "u".into(),
                kind: GeneratorKind::Unitary,
                samples,
                lipschitz_hint: Some(1.0),
            }],
        )
        .unwrap()
    }

    #[test]
    fn det_winding_counts_phase_loops() {
        assert_eq!(det_winding(&winding_field(64), 0).unwrap(), 1);

        let braid =
            gen_example(ExampleKind::Braid, &build_domain(DomainKind::Cycle { m: 64 }).unwrap())
                .unwrap();
        // det = −e^{iθ}: one loop.
        assert_eq!(det_winding(&braid, 0).unwrap(), 1);

        let constant = {
            let domain = build_domain(DomainKind::Cycle { m: 8 }).unwrap();
            let samples = (0..8).map(|_| Matrix::identity(2)).collect();
            GeneratorField::new(
                domain,
                2,
                vec![Generator {
                    name: "u".into(),
                    kind: GeneratorKind::Unitary,
                    samples,
                    lipschitz_hint: None,
                }],
            )
            .unwrap()
        };
        assert_eq!(det_winding(&constant, 0).unwrap(), 0);
    }

    #[test]
    fn det_winding_rejects_aliased_sampling() {
        // Phase 1.5·θ on a 3-cycle jumps by a full π across the first edge;
        // that sign is unrecoverable from samples, so the run must refuse.
        let domain = build_domain(DomainKind::Cycle { m: 3 }).unwrap();
        let samples = (0..3)
            .map(|v| {
                let t = 1.5 * domain.angle(v);
                Matrix::diag(&[C64::from_polar(1.0, t), C64::new(1.0, 0.0)])
            })
            .collect();
        let f = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "u".into(),
                kind: GeneratorKind::Unitary,
                samples,
                lipschitz_hint: None,
            }],
        )
        .unwrap();
        assert!(matches!(det_winding(&f, 0), Err(Error::MeshTooCoarse(_))));
    }

    /// Lower/upper band projections of the monopole Hamiltonian `k̂·σ`.
    fn monopole_bands(k: usize) -> (SimplicialDomain, Vec<Matrix>, Vec<Matrix>) {
        let domain = build_domain(DomainKind::Sphere2 { k }).unwrap();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for c in &domain.coords {
            let (x, y, z) = (c[0], c[1], c[2]);
            let h = Matrix::from_rows(&[
                vec![C64::new(z, 0.0), C64::new(x, -y)],
                vec![C64::new(x, y), C64::new(-z, 0.0)],
            ])
            .unwrap();
            let id = Matrix::identity(2);
            lower.push(id.sub(&h).scale_re(0.5));
            upper.push(id.add(&h).scale_re(0.5));
        }
        (domain, lower, upper)
    }

    #[test]
    fn monopole_lower_band_has_chern_minus_one() {
        for k in [1usize, 2] {
            let (domain, lower, upper) = monopole_bands(k);
            assert_eq!(chern_number(&lower, &domain).unwrap(), -1, "level {k}");
            assert_eq!(chern_number(&upper, &domain).unwrap(), 1, "level {k}");
        }
    }

    #[test]
    fn constant_projection_is_chern_zero() {
        let domain = build_domain(DomainKind::Sphere2 { k: 1 }).unwrap();
        let p = Matrix::diag_re(&[1.0, 0.0]);
        let ps = vec![p; domain.vertex_count()];
        assert_eq!(chern_number(&ps, &domain).unwrap(), 0);
    }

    #[test]
    fn orthogonal_neighbors_collapse_the_overlap() {
        let domain = build_domain(DomainKind::Sphere2 { k: 0 }).unwrap();
        let mut ps = vec![Matrix::diag_re(&[1.0, 0.0]); domain.vertex_count()];
        ps[0] = Matrix::diag_re(&[0.0, 1.0]);
        assert!(matches!(
            chern_number(&ps, &domain),
            Err(Error::OverlapCollapse { .. })
        ));
    }

    #[test]
    fn degree_of_the_identity_map_is_one() {
        // Two subdivisions are the first level where every image tet has
        // diameter below 1 (level 1 keeps the 16-cell's √2 diagonals).
        let domain = build_domain(DomainKind::S3 { k: 2 }).unwrap();
        let f = gen_example(ExampleKind::S3Unitary, &domain).unwrap();
        assert_eq!(degree3(&f, 0).unwrap(), 1);
    }

    #[test]
    fn degree_of_a_constant_is_zero() {
        let domain = build_domain(DomainKind::S3 { k: 1 }).unwrap();
        let samples = (0..domain.vertex_count()).map(|_| Matrix::identity(2)).collect();
        let f = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "u".into(),
                kind: GeneratorKind::Unitary,
                samples,
                lipschitz_hint: None,
            }],
        )
        .unwrap();
        assert_eq!(degree3(&f, 0).unwrap(), 0);
    }

    #[test]
    fn reflection_flips_the_degree() {
        let domain = build_domain(DomainKind::S3 { k: 2 }).unwrap();
        let samples = domain
            .coords
            .iter()
            .map(|c| {
                let z = C64::new(c[0], c[1]);
                let w = C64::new(c[2], c[3]);
                // Precompose with the orientation-reversing w ↦ −w̄.
                su2_matrix(z, -w.conj())
            })
            .collect();
        let f = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "u".into(),
                kind: GeneratorKind::Unitary,
                samples,
                lipschitz_hint: None,
            }],
        )
        .unwrap();
        assert_eq!(degree3(&f, 0).unwrap(), -1);
    }

    #[test]
    fn coarse_mesh_is_rejected_for_degree() {
        let domain = build_domain(DomainKind::S3 { k: 0 }).unwrap();
        let f = gen_example(ExampleKind::S3Unitary, &domain).unwrap();
        assert!(matches!(degree3(&f, 0), Err(Error::MeshTooCoarse(_))));
    }

    #[test]
    fn example_fields_take_documented_values() {
        let s3 = build_domain(DomainKind::S3 { k: 0 }).unwrap();
        let u = gen_example(ExampleKind::S3Unitary, &s3).unwrap();
        // Vertex 0 is (z, w) = (1, 0).
        assert!(u.generators[0].samples[0].sub(&Matrix::identity(2)).op_norm() < 1e-15);

        let b = gen_example(ExampleKind::Count1B, &s3).unwrap();
        // Vertex 2 is (z, w) = (i, 0).
        assert!(
            b.generators[0].samples[2]
                .sub(&Matrix::diag_re(&[1.0, -1.0]))
                .op_norm()
                < 1e-15
        );
        // u + u* = (z + z̄)·1 at every vertex.
        for (sample, c) in u.generators[0].samples.iter().zip(&s3.coords) {
            let lhs = sample.add(&sample.adjoint());
            let rhs = Matrix::identity(2).scale_re(2.0 * c[0]);
            assert!(lhs.sub(&rhs).op_norm() < 1e-14);
        }

        let cyc = build_domain(DomainKind::Cycle { m: 8 }).unwrap();
        let braid = gen_example(ExampleKind::Braid, &cyc).unwrap();
        let mut swap = Matrix::zeros(2);
        swap.set(0, 1, C64::new(1.0, 0.0));
        swap.set(1, 0, C64::new(1.0, 0.0));
        assert!(braid.generators[0].samples[0].sub(&swap).op_norm() < 1e-15);

        let t = gen_example(ExampleKind::TCount(4), &s3).unwrap();
        let sample = &t.generators[0].samples[2];
        assert!((sample.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((sample.get(1, 1).re + 1.0).abs() < 1e-15);
        assert!((sample.get(2, 2).re - 1.0).abs() < 1e-15);
        assert!((sample.get(3, 3).re - 1.0).abs() < 1e-15);
        assert!(matches!(
            gen_example(ExampleKind::TCount(2), &s3),
            Err(Error::BadParam(_))
        ));
        assert!(matches!(
            gen_example(ExampleKind::Braid, &s3),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn count1_links_carry_opposite_chern_charges() {
        let domain = build_domain(DomainKind::S3 { k: 1 }).unwrap();
        let field = gen_example(ExampleKind::Count1B, &domain).unwrap();
        let reports = link_chern_certificates(&field, 0).unwrap();
        assert_eq!(reports.len(), 2, "collisions at (±1, 0) only");
        let values: Vec<i64> = reports
            .iter()
            .map(|r| match r.value {
                ObstructionValue::Integer(n) => n,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(values.iter().map(|v| v.abs()).collect::<Vec<_>>(), vec![1, 1]);
        assert_eq!(values[0] + values[1], 0);
        assert!(reports.iter().all(|r| !r.tension_flag));
    }

    #[test]
    fn assembled_diagonal_unitary_has_degree_zero() {
        // Σ βᵢ pᵢ with constant projections and a null-homotopic phase:
        // the image is a circle, which misses every regular value.
        let domain = build_domain(DomainKind::S3 { k: 1 }).unwrap();
        let samples = domain
            .coords
            .iter()
            .map(|c| {
                let phase = C64::from_polar(1.0, 0.8 * c[0]);
                Matrix::diag(&[phase, phase.conj()])
            })
            .collect();
        let f = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "u".into(),
                kind: GeneratorKind::Unitary,
                samples,
                lipschitz_hint: None,
            }],
        )
        .unwrap();
        assert_eq!(degree3(&f, 0).unwrap(), 0);
    }
}

//! Diagonalization over 2-complexes: disk fills over triangles and the full
//! surface driver.
//!
//! The 1-skeleton is handled exactly as in [`crate::diag1d`] — exact vertex
//! decompositions, gauge-fixed transports along a spanning tree, matched
//! closures on the remaining edges. What is new in dimension two is that
//! every triangle boundary now carries a loop of labels and frames that must
//! be extended to the interior. The extension contracts the boundary loop
//! onto the decomposition at the triangle's anchor vertex; it exists
//! whenever the loop oscillates little enough, and the two ways it can fail
//! are both meaningful: an oscillation overrun asks for a finer mesh, while
//! a nonzero Chern number of a track's projection field over a closed
//! surface certifies that no mesh will ever do.

use rayon::prelude::*;

use crate::dense::{unitary_log_gap_full, Matrix, UnitaryLog};
use crate::diag1d::{
    build_transport, check_eps, check_eta, identity_perm, is_identity, matched_cost, sweep_edge,
    vertex_decomps, DiagOutcome,
};
use crate::error::Error;
use crate::field::frames::{bit_equal_labels, bit_equal_matrix, resnap_tuple};
use crate::field::{
    evaluate_hom, residual_report, DiagonalFrameField, EdgeTransport, FunctionDictionary,
    GeneratorField, GeneratorKind, JointDecomp, SimplicialDomain, TransportStep, TriangleFill,
};
use crate::matching::{bottleneck_match, cluster_by_radius, label_dist, MatchingPlan};
use crate::obstruction::{chern_number, ObstructionReport};
use crate::Result;

/// An exactly commuting diagonal model snapped from an almost-commuting
/// normal tuple, with the distances that were paid for it.
#[derive(Clone, Debug)]
pub struct VertexSnap {
    pub decomp: JointDecomp,
    /// `max_j ‖A_j − model_j‖`: how far the snap moved the tuple.
    pub distance: f64,
    /// Largest pairwise input commutator `‖[A_i, A_j]‖`.
    pub commutator_mass: f64,
}

/// Snap an almost-commuting tuple of normal matrices to an exactly
/// commuting diagonal model (joint frame plus labels).
///
/// The tuple must satisfy the smallness precondition
/// `max ‖[A_i, A_j]‖ ≤ tol·(1 + max‖A_j‖)²`; the measured mass is returned
/// either way — inside the result on success, inside the error otherwise.
/// The output is a genuine homomorphism: its models commute exactly and
/// functional calculus on it is exactly multiplicative.
pub fn snap_vertex_homomorphism(samples: &[&Matrix], tol: f64) -> Result<VertexSnap> {
    if samples.is_empty() {
        return Err(Error::BadParam("empty tuple".into()));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::BadParam(format!("tol = {tol} must be positive")));
    }
    let n = samples[0].dim();
    if samples.iter().any(|a| a.dim() != n) {
        return Err(Error::ShapeMismatch("tuple of mixed dimensions".into()));
    }
    let max_norm = samples.iter().map(|a| a.op_norm()).fold(0.0, f64::max);
    let mut mass = 0.0f64;
    for (i, a) in samples.iter().enumerate() {
        for b in samples.iter().skip(i + 1) {
            mass = mass.max(a.commutator(b).op_norm());
        }
    }
    let budget = tol * (1.0 + max_norm).powi(2);
    if mass > budget {
        return Err(Error::ToleranceNotMet {
            achieved: mass,
            requested: budget,
        });
    }
    let kinds = vec![GeneratorKind::Normal; samples.len()];
    let (decomp, _) = resnap_tuple(samples, &kinds)?;
    let distance = samples
        .iter()
        .enumerate()
        .map(|(j, a)| a.sub(&decomp.model(j)).op_norm())
        .fold(0.0, f64::max);
    Ok(VertexSnap {
        decomp,
        distance,
        commutator_mass: mass,
    })
}

/// The boundary loop of one triangle: labels and frames walked around the
/// three edges, closing bit-exactly at the anchor vertex.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    /// Global vertex ids of the triangle this loop bounds.
    pub triangle: [usize; 3],
    /// Global id of the anchor vertex; the loop starts and ends there.
    pub anchor: usize,
    /// Matching resolution; also the admissibility bound for label motion.
    pub eta: f64,
    /// Ordered loop samples. `samples[0]` and `samples[last]` are bit-equal.
    pub samples: Vec<TransportStep>,
    /// Largest per-track label distance from the anchor, over the loop.
    pub oscillation_label: f64,
    /// Largest frame distance from the anchor frame, over the loop.
    pub oscillation_frame: f64,
}

impl BoundaryData {
    /// Validate closure and shape, and measure the oscillation exactly from
    /// the stored samples.
    pub fn new(
        triangle: [usize; 3],
        anchor: usize,
        eta: f64,
        samples: Vec<TransportStep>,
    ) -> Result<BoundaryData> {
        check_eta(eta)?;
        if samples.len() < 4 {
            return Err(Error::BadParam(format!(
                "a closed triangle boundary needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        let first = &samples[0];
        let last = samples.last().unwrap();
        if !bit_equal_matrix(&first.frame, &last.frame)
            || !bit_equal_labels(&first.labels, &last.labels)
        {
            return Err(Error::ValidationFailed(
                "boundary loop does not close: first and last samples differ".into(),
            ));
        }
        let n = first.frame.dim();
        if samples
            .iter()
            .any(|s| s.frame.dim() != n || s.labels.len() != n)
        {
            return Err(Error::ShapeMismatch(
                "boundary samples of mixed shape".into(),
            ));
        }
        let mut oscillation_label = 0.0f64;
        let mut oscillation_frame = 0.0f64;
        for s in &samples {
            for (track, label) in s.labels.iter().enumerate() {
                oscillation_label = oscillation_label.max(label_dist(label, &first.labels[track]));
            }
            oscillation_frame = oscillation_frame.max(s.frame.sub(&first.frame).op_norm());
        }
        Ok(BoundaryData {
            triangle,
            anchor,
            eta,
            samples,
            oscillation_label,
            oscillation_frame,
        })
    }

    /// The decomposition at the anchor, as stored in the loop.
    pub fn base_decomp(&self) -> JointDecomp {
        self.samples[0].decomp()
    }

    /// Combined oscillation (the larger of label and frame motion).
    pub fn oscillation(&self) -> f64 {
        self.oscillation_label.max(self.oscillation_frame)
    }
}

/// Walk the boundary of triangle `tri` through the stored edge transports
/// and assemble it into a closed loop anchored at the triangle's first
/// vertex.
///
/// Every edge on the boundary must carry an identity track permutation —
/// that is the gauge consistency the skeleton sweep establishes; a
/// nontrivial permutation here means the caller skipped the monodromy check
/// and the triangle cannot be filled track by track.
pub fn triangle_boundary(
    frames: &DiagonalFrameField,
    domain: &SimplicialDomain,
    tri: usize,
) -> Result<BoundaryData> {
    if tri >= domain.triangles.len() {
        return Err(Error::BadParam(format!(
            "triangle {tri} of {} requested",
            domain.triangles.len()
        )));
    }
    if frames.transports.len() != domain.edges.len() {
        return Err(Error::FramesInvalid(format!(
            "boundary assembly needs one transport per edge ({} over {})",
            frames.transports.len(),
            domain.edges.len()
        )));
    }
    let [a, b, c] = domain.triangles[tri];
    let index = domain.edge_index();
    let mut samples: Vec<TransportStep> = Vec::new();
    for (leg_no, (x, y)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
        let idx = *index.get(&[x.min(y), x.max(y)]).ok_or_else(|| {
            Error::ValidationFailed(format!(
                "edge [{x}, {y}] of triangle {tri} is not in the domain"
            ))
        })?;
        let t = &frames.transports[idx];
        if !is_identity(&t.plan.perm) {
            return Err(Error::ValidationFailed(format!(
                "triangle {tri}: edge {:?} carries a nontrivial track permutation",
                t.edge
            )));
        }
        let steps: Vec<TransportStep> = if t.edge == [x, y] {
            t.steps.clone()
        } else {
            t.steps.iter().rev().cloned().collect()
        };
        // Junction samples repeat between consecutive legs; keep one copy.
        samples.extend(steps.into_iter().skip(if leg_no == 0 { 0 } else { 1 }));
    }
    BoundaryData::new(domain.triangles[tri], a, frames.eta, samples)
}

/// The aligning unitary loop of the reflection `t ↦ −t`: one unitary per
/// boundary sample, conjugating the projections at parameter `j` to the
/// projections at the reflected parameter `L − j`, exactly the identity at
/// the two junction samples (`j = 0` and `j = L/2`).
pub fn boundary_align(data: &BoundaryData) -> Result<Vec<Matrix>> {
    let l = data.samples.len() - 1;
    if l % 2 != 0 {
        return Err(Error::BadParam(format!(
            "reflection alignment needs an even number of boundary segments, got {l}"
        )));
    }
    for (j, s) in data.samples.iter().enumerate() {
        let dev = s.frame.unitary_deviation();
        if dev > 1e-8 {
            return Err(Error::DegenerateFrame(format!(
                "boundary frame {j} has unitary deviation {dev:.3e}"
            )));
        }
    }
    let n = data.samples[0].frame.dim();
    Ok((0..=l)
        .map(|j| {
            let fj = &data.samples[j].frame;
            let fr = &data.samples[l - j].frame;
            if bit_equal_matrix(fj, fr) {
                // Junctions (and any coincidentally equal pair) align by the
                // exact identity.
                Matrix::identity(n)
            } else {
                fj.mul(&fr.adjoint())
            }
        })
        .collect())
}

/// Extend a boundary loop to the triangle interior by contracting it onto
/// the anchor decomposition.
///
/// Row 0 of the result is the input loop bit for bit; the last row is the
/// anchor decomposition repeated. In between, each column rotates its frame
/// toward the anchor frame along the gap-branch logarithm and pulls its
/// labels linearly toward the anchor labels, clamped to the metric ball of
/// radius `oscillation_label` around them. Admissibility is
/// `oscillation_label ≤ eta` and `oscillation_frame ≤ 0.2`; beyond that the
/// caller must subdivide. The contraction depth is chosen so no row-to-row
/// rotation exceeds 0.1.
///
/// `eps` bounds the measured interior deviation from the anchor model over
/// the degree-2 dictionary; an overrun is reported as oscillation, since
/// refinement shrinks it.
pub fn extend_triangle(data: &BoundaryData, eps: f64) -> Result<TriangleFill> {
    check_eps(eps)?;
    let base = data.base_decomp();
    if data.oscillation_label > data.eta + 1e-12 {
        return Err(Error::OscillationTooLarge(format!(
            "boundary label motion {:.3e} exceeds eta = {:.3e}",
            data.oscillation_label, data.eta
        )));
    }
    if data.oscillation_frame > 0.2 + 1e-12 {
        return Err(Error::OscillationTooLarge(format!(
            "boundary frame motion {:.3e} exceeds the 0.2 admissibility bound",
            data.oscillation_frame
        )));
    }

    // Per-column rotation from the boundary frame onto the anchor frame.
    // Columns whose sample already equals the anchor bits contract trivially.
    let logs: Vec<Option<UnitaryLog>> = data
        .samples
        .iter()
        .map(|s| {
            if bit_equal_matrix(&s.frame, &base.frame) && bit_equal_labels(&s.labels, &base.labels)
            {
                return Ok(None);
            }
            let q = base.frame.mul(&s.frame.adjoint());
            let log = unitary_log_gap_full(&q)?;
            if log.gap < 1e-6 {
                return Err(Error::GapCollapse {
                    gap: log.gap,
                    min_gap: 1e-6,
                });
            }
            Ok(Some(log))
        })
        .collect::<Result<Vec<_>>>()?;

    let max_rot = logs
        .iter()
        .flatten()
        .map(|log| log.norm())
        .fold(0.0, f64::max);
    let d_steps = (((max_rot / 0.1).ceil() as usize) + 1).max(3);
    let theta_steps = data.samples.len();

    let mut samples = Vec::with_capacity(d_steps * theta_steps);
    for d in 0..d_steps {
        let tau = d as f64 / (d_steps - 1) as f64;
        for (j, boundary) in data.samples.iter().enumerate() {
            let step = if d == 0 {
                boundary.clone()
            } else if d == d_steps - 1 {
                TransportStep {
                    labels: base.labels.clone(),
                    frame: base.frame.clone(),
                }
            } else {
                match &logs[j] {
                    None => TransportStep {
                        labels: base.labels.clone(),
                        frame: base.frame.clone(),
                    },
                    Some(log) => {
                        let frame = log.exp_scaled(tau).mul(&boundary.frame);
                        let labels = boundary
                            .labels
                            .iter()
                            .zip(&base.labels)
                            .map(|(from, to)| {
                                let mut label: Vec<_> = from
                                    .iter()
                                    .zip(to)
                                    .map(|(f, t)| f * (1.0 - tau) + t * tau)
                                    .collect();
                                // AR patch: never leave the ball around the
                                // anchor label that the boundary itself spans.
                                let dist = label_dist(&label, to);
                                if dist > data.oscillation_label && dist > 0.0 {
                                    let shrink = data.oscillation_label / dist;
                                    for (z, t) in label.iter_mut().zip(to) {
                                        *z = t + (*z - t) * shrink;
                                    }
                                }
                                label
                            })
                            .collect();
                        TransportStep { labels, frame }
                    }
                }
            };
            samples.push(step);
        }
    }

    // The rotation must actually reach the anchor frame before the last row
    // overwrites it with exact bits.
    for (j, log) in logs.iter().enumerate() {
        if let Some(log) = log {
            let drift = log
                .exp_scaled(1.0)
                .mul(&data.samples[j].frame)
                .sub(&base.frame)
                .op_norm();
            if drift > 1e-8 {
                return Err(Error::ValidationFailed(format!(
                    "column {j}: contraction misses the anchor frame by {drift:.3e}"
                )));
            }
        }
    }

    let fill = TriangleFill {
        triangle: data.triangle,
        anchor: data.anchor,
        theta_steps,
        d_steps,
        samples,
        oscillation: data.oscillation(),
    };

    let dict = FunctionDictionary::new(2, base.g())?;
    let anchor_models: Vec<Matrix> = dict
        .members
        .iter()
        .map(|f| evaluate_hom(&base, f))
        .collect::<Result<Vec<_>>>()?;
    let mut deviation = 0.0f64;
    for d in 1..d_steps - 1 {
        for j in 0..theta_steps {
            let decomp = fill.sample(d, j).decomp();
            for (f, anchor) in dict.members.iter().zip(&anchor_models) {
                deviation = deviation.max(evaluate_hom(&decomp, f)?.sub(anchor).op_norm());
            }
        }
    }
    if deviation > eps {
        return Err(Error::OscillationTooLarge(format!(
            "interior deviation {deviation:.3e} from the anchor model exceeds \
             eps = {eps:.3e}; refine the mesh"
        )));
    }
    Ok(fill)
}

/// Diagonalize a field over a 2-complex (or anything of lower dimension).
///
/// Vertices get exact joint decompositions; the 1-skeleton is swept along a
/// BFS spanning tree from the lowest vertex id and closed on the remaining
/// edges; every triangle is filled by [`extend_triangle`]. Certified
/// failures come out as [`DiagOutcome::Obstructed`]: a cotree matching that
/// genuinely permutes well-separated tracks, or a track projection with
/// nonzero Chern number over a closed surface. A residual overrun after a
/// successful construction is [`Error::ToleranceNotMet`] — refine the mesh
/// and retry.
pub fn diagonalize_complex2(field: &GeneratorField, eta: f64, eps: f64) -> Result<DiagOutcome> {
    check_eta(eta)?;
    check_eps(eps)?;
    field.validate()?;
    let domain = &field.domain;
    if domain.dimension() > 2 {
        return Err(Error::ValidationFailed(format!(
            "2-complex driver got {} of dimension {}",
            domain.kind,
            domain.dimension()
        )));
    }

    let n = field.n;
    let mut decomps = vertex_decomps(field)?;
    let mut transports: Vec<Option<EdgeTransport>> = vec![None; domain.edges.len()];
    let mut in_tree = vec![false; domain.edges.len()];

    let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); domain.vertex_count()];
    for (idx, &[x, y]) in domain.edges.iter().enumerate() {
        adj[x].push((idx, y, true));
        adj[y].push((idx, x, false));
    }

    let mut visited = vec![false; domain.vertex_count()];
    for root in 0..domain.vertex_count() {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &(edge_idx, other, forward) in &adj[v] {
                if visited[other] {
                    continue;
                }
                visited[other] = true;
                in_tree[edge_idx] = true;
                let edge = domain.edges[edge_idx];
                let t = if forward {
                    let from = decomps[v].clone();
                    sweep_edge(edge, &from, &mut decomps[other], eta)?
                } else {
                    let rev = bottleneck_match(&decomps[v].labels, &decomps[other].labels, eta)?;
                    let (labels, frame) =
                        crate::diag1d::gauge_target(&decomps[v], &decomps[other], &rev)?;
                    decomps[other] = JointDecomp { frame, labels };
                    let cost = matched_cost(&decomps[other].labels, &decomps[v].labels);
                    let plan = MatchingPlan {
                        perm: identity_perm(n),
                        bottleneck_cost: cost,
                        eta,
                        feasible: cost <= eta,
                    };
                    build_transport(
                        edge,
                        &decomps[other],
                        &decomps[v].labels.clone(),
                        &decomps[v].frame.clone(),
                        plan,
                        None,
                    )?
                };
                transports[edge_idx] = Some(t);
                queue.push_back(other);
            }
        }
    }

    // Cotree edges close loops between already-fixed vertices. A matching
    // that permutes tracks across separated clusters is monodromy — certify
    // it. Permutations inside an η-cluster are resolution artifacts; the
    // identity assignment is just as optimal there and keeps every triangle
    // boundary track-consistent.
    for idx in 0..domain.edges.len() {
        if in_tree[idx] {
            continue;
        }
        let [a, b] = domain.edges[idx];
        let plan = bottleneck_match(&decomps[a].labels, &decomps[b].labels, eta)?;
        if !is_identity(&plan.perm) {
            let clusters = cluster_by_radius(&decomps[b].labels, eta)?;
            let reroutable =
                (0..n).all(|i| clusters.cluster_of(i) == clusters.cluster_of(plan.perm[i]));
            if !reroutable {
                return Ok(DiagOutcome::Obstructed(ObstructionReport::monodromy(
                    plan.perm,
                    format!("edge [{a}, {b}] of {}", domain.kind),
                )));
            }
        }
        let cost = matched_cost(&decomps[a].labels, &decomps[b].labels);
        let stored = MatchingPlan {
            perm: identity_perm(n),
            bottleneck_cost: cost,
            eta,
            feasible: cost <= eta,
        };
        transports[idx] = Some(build_transport(
            domain.edges[idx],
            &decomps[a],
            &decomps[b].labels.clone(),
            &decomps[b].frame.clone(),
            stored,
            None,
        )?);
    }

    // With globally consistent tracks, each track's projection field is a
    // line bundle over the surface; a nonzero Chern number certifies that no
    // continuous frame field exists at any mesh resolution.
    if domain.is_closed_surface() {
        for track in 0..n {
            let projections: Vec<Matrix> = decomps.iter().map(|d| d.projection(track)).collect();
            match chern_number(&projections, domain) {
                Ok(c) if c != 0 => {
                    return Ok(DiagOutcome::Obstructed(ObstructionReport::chern(
                        c,
                        format!("track {track} over {}", domain.kind),
                        true,
                    )));
                }
                // Collapsed gaps or overlaps just mean this track carries no
                // certificate at this resolution.
                _ => {}
            }
        }
    }

    let transports: Vec<EdgeTransport> = transports
        .into_iter()
        .map(|t| t.expect("every edge is swept or closed"))
        .collect();
    let mut model = DiagonalFrameField::from_vertex_decomps(eta, decomps)?;
    model.transports = transports;

    if !domain.triangles.is_empty() {
        let fills: Vec<TriangleFill> = (0..domain.triangles.len())
            .into_par_iter()
            .map(|t| {
                let data = triangle_boundary(&model, domain, t)?;
                extend_triangle(&data, eps)
            })
            .collect::<Result<Vec<_>>>()?;
        model.fills = fills;
    }

    model.validate(domain)?;
    let dict = FunctionDictionary::new(2, field.g())?;
    let report = residual_report(field, &model, &dict, eps)?;
    if report.max > eps {
        return Err(Error::ToleranceNotMet {
            achieved: report.max,
            requested: eps,
        });
    }
    Ok(DiagOutcome::Diagonalized(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{hermitian_eig, C64};
    use crate::field::{build_domain, DomainKind, Generator};
    use crate::obstruction::{ObstructionKind, ObstructionValue};

    fn hermitian_field(domain: SimplicialDomain, f: impl Fn(&[f64]) -> Matrix) -> GeneratorField {
        let n = f(&domain.coords[0]).dim();
        let samples: Vec<Matrix> = domain.coords.iter().map(|c| f(c)).collect();
        GeneratorField::new(
            domain,
            n,
            vec![Generator {
                name: "h".into(),
                kind: GeneratorKind::Hermitian,
                samples,
                lipschitz_hint: Some(1.0),
            }],
        )
        .unwrap()
    }

    /// Gapped seeded Hermitian field: a split diagonal plus small linear and
    /// quadratic drifts in the coordinates. Labels never collide (the drift
    /// is far below the unit gaps), the band bundles are trivial, and the
    /// quadratic part gives the field genuine curvature — a purely linear
    /// field would contract only like the chord lengths under subdivision.
    fn seeded_sphere_field(k: usize) -> GeneratorField {
        let domain = build_domain(DomainKind::Sphere2 { k }).unwrap();
        let coeff = |offset: usize, scale: f64| -> Matrix {
            Matrix::from_fn(3, |i, j| {
                let phase = (1 + offset * 7 + 3 * i + 5 * j) as f64;
                C64::new(
                    scale * phase.sin(),
                    0.7 * scale * (i as f64 - j as f64) * phase.cos(),
                )
            })
            .hermitized()
        };
        let linear: Vec<Matrix> = (0..3).map(|axis| coeff(axis, 0.03)).collect();
        let quad: Vec<Matrix> = (0..3).map(|pair| coeff(10 + pair, 0.03)).collect();
        hermitian_field(domain, move |c| {
            let mut h = Matrix::diag_re(&[0.0, 1.0, 2.0]);
            for (axis, bk) in linear.iter().enumerate() {
                h = h.add(&bk.scale_re(c[axis]));
            }
            for (axis, ck) in quad.iter().enumerate() {
                h = h.add(&ck.scale_re(c[axis] * c[axis]));
            }
            h.hermitized()
        })
    }

    #[test]
    fn snap_of_a_commuting_tuple_is_faithful() {
        let f = hermitian_eig(
            &Matrix::from_fn(4, |i, j| C64::new((i * j) as f64, i as f64 - j as f64)).hermitized(),
        )
        .unwrap()
        .frame;
        let d1: Vec<C64> = (0..4).map(|i| C64::new(i as f64 * 0.3, 0.1)).collect();
        let d2: Vec<C64> = (0..4).map(|i| C64::new(-(i as f64) * 0.2, 0.4)).collect();
        let a = f.mul(&Matrix::diag(&d1)).mul(&f.adjoint());
        let b = f.mul(&Matrix::diag(&d2)).mul(&f.adjoint());
        let snap = snap_vertex_homomorphism(&[&a, &b], 1e-6).unwrap();
        assert!(snap.distance <= 1e-9, "distance {}", snap.distance);
        assert!(snap.commutator_mass <= 1e-12);
        // Models commute exactly as matrices built from one frame.
        let m0 = snap.decomp.model(0);
        let m1 = snap.decomp.model(1);
        assert!(m0.commutator(&m1).op_norm() <= 1e-12);
    }

    #[test]
    fn snap_distance_tracks_the_perturbation() {
        let delta = 1e-3;
        let n = 5;
        let a = Matrix::diag_re(&[0.0, 0.4, 0.9, 1.5, 2.2]);
        let mut b = Matrix::diag_re(&[1.0, -0.3, 0.6, 0.2, -1.1]);
        // Off-diagonal perturbation of size delta breaks commutativity.
        b.set(0, 1, C64::new(delta, 0.0));
        b.set(1, 0, C64::new(delta, 0.0));
        let b = b.hermitized();
        let snap = snap_vertex_homomorphism(&[&a, &b], 1e-1).unwrap();
        assert!(snap.commutator_mass > 0.0);
        assert!(
            snap.distance <= 10.0 * delta,
            "distance {} vs 10δ = {}",
            snap.distance,
            10.0 * delta
        );
        let _ = n;
    }

    #[test]
    fn snap_output_is_exactly_multiplicative() {
        let a = Matrix::diag(&[
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.8),
            C64::new(1.1, -0.4),
        ]);
        let snap = snap_vertex_homomorphism(&[&a], 1e-6).unwrap();
        let dict = FunctionDictionary::new(2, 1).unwrap();
        for f in &dict.members {
            for g in &dict.members {
                let Some(fg) = f.product(g) else { continue };
                let lhs = evaluate_hom(&snap.decomp, &fg).unwrap();
                let rhs = evaluate_hom(&snap.decomp, f)
                    .unwrap()
                    .mul(&evaluate_hom(&snap.decomp, g).unwrap());
                assert!(lhs.sub(&rhs).op_norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn snap_rejects_tuples_over_the_commutator_budget() {
        let a = Matrix::diag_re(&[0.0, 1.0]);
        let mut b = Matrix::zeros(2);
        b.set(0, 1, C64::new(1.0, 0.0));
        b.set(1, 0, C64::new(1.0, 0.0));
        assert!(matches!(
            snap_vertex_homomorphism(&[&a, &b], 1e-8),
            Err(Error::ToleranceNotMet { .. })
        ));
    }

    /// A synthetic admissible boundary: fixed labels, frames precessing
    /// slightly around the anchor, closing exactly.
    fn synthetic_boundary(amplitude: f64, segments: usize) -> BoundaryData {
        let base = Matrix::diag_re(&[-0.8, 0.1, 0.9]);
        let decomp = crate::field::frames::joint_decompose(&[&base]).unwrap();
        let k = Matrix::from_fn(3, |i, j| C64::new(0.3 * (i + j) as f64, 0.2 * (i as f64 - j as f64)))
            .hermitized();
        let k = k.scale_re(1.0 / k.op_norm());
        let keig = hermitian_eig(&k).unwrap();
        let samples: Vec<TransportStep> = (0..=segments)
            .map(|j| {
                if j == 0 || j == segments || amplitude == 0.0 {
                    return TransportStep {
                        labels: decomp.labels.clone(),
                        frame: decomp.frame.clone(),
                    };
                }
                let t = j as f64 / segments as f64;
                let angle = amplitude * (std::f64::consts::TAU * t).sin();
                let d: Vec<C64> = keig
                    .labels
                    .iter()
                    .map(|l| C64::from_polar(1.0, angle * l.re))
                    .collect();
                let rot = keig.frame.mul(&Matrix::diag(&d)).mul(&keig.frame.adjoint());
                TransportStep {
                    labels: decomp
                        .labels
                        .iter()
                        .map(|lab| lab.iter().map(|z| z + 0.3 * angle).collect())
                        .collect(),
                    frame: rot.mul(&decomp.frame),
                }
            })
            .collect();
        BoundaryData::new([0, 1, 2], 0, 0.5, samples).unwrap()
    }

    #[test]
    fn constant_boundary_fills_constantly() {
        let data = synthetic_boundary(0.0, 12);
        assert_eq!(data.oscillation(), 0.0);
        let fill = extend_triangle(&data, 1e-9).unwrap();
        let base = data.base_decomp();
        for s in &fill.samples {
            assert!(bit_equal_matrix(&s.frame, &base.frame));
            assert!(bit_equal_labels(&s.labels, &base.labels));
        }
    }

    #[test]
    fn fill_restricts_to_its_boundary_bit_exactly() {
        let data = synthetic_boundary(0.05, 16);
        let fill = extend_triangle(&data, 1.0).unwrap();
        assert_eq!(fill.theta_steps, data.samples.len());
        for (j, s) in data.samples.iter().enumerate() {
            let row0 = fill.sample(0, j);
            assert!(bit_equal_matrix(&row0.frame, &s.frame));
            assert!(bit_equal_labels(&row0.labels, &s.labels));
        }
        let base = data.base_decomp();
        for j in 0..fill.theta_steps {
            let inner = fill.sample(fill.d_steps - 1, j);
            assert!(bit_equal_matrix(&inner.frame, &base.frame));
        }
    }

    #[test]
    fn interior_deviation_scales_with_oscillation() {
        let data = synthetic_boundary(0.02, 24);
        let osc = data.oscillation();
        assert!(osc > 0.0 && osc < 0.1);
        let fill = extend_triangle(&data, 4.0 * osc).unwrap();
        // Interior frames stay unitary and projections complete.
        for d in 1..fill.d_steps - 1 {
            for j in 0..fill.theta_steps {
                let s = fill.sample(d, j);
                assert!(s.frame.unitary_deviation() <= 1e-10);
                let decomp = s.decomp();
                let sum = (0..3)
                    .map(|i| decomp.projection(i))
                    .fold(Matrix::zeros(3), |acc, p| acc.add(&p));
                assert!(sum.sub(&Matrix::identity(3)).op_norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn oscillation_overruns_are_rejected() {
        let data = synthetic_boundary(0.4, 16);
        assert!(data.oscillation_frame > 0.2);
        assert!(matches!(
            extend_triangle(&data, 10.0),
            Err(Error::OscillationTooLarge(_))
        ));
        // Label overruns likewise: shrink eta below the label motion.
        let mut tight = synthetic_boundary(0.05, 16);
        tight.eta = tight.oscillation_label / 2.0;
        assert!(matches!(
            extend_triangle(&tight, 10.0),
            Err(Error::OscillationTooLarge(_))
        ));
    }

    #[test]
    fn alignment_conjugates_upper_to_reflected_frames() {
        let data = synthetic_boundary(0.05, 16);
        let align = boundary_align(&data).unwrap();
        let l = data.samples.len() - 1;
        assert!(bit_equal_matrix(&align[0], &Matrix::identity(3)));
        assert!(bit_equal_matrix(&align[l / 2], &Matrix::identity(3)));
        assert!(bit_equal_matrix(&align[l], &Matrix::identity(3)));
        for j in 0..=l {
            let u = &align[j];
            assert!(u.unitary_deviation() <= 1e-10);
            for i in 0..3 {
                let p_here = data.samples[j].decomp().projection(i);
                let p_there = data.samples[l - j].decomp().projection(i);
                let conj = u.adjoint().mul(&p_here).mul(u);
                assert!(conj.sub(&p_there).op_norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn alignment_of_phase_only_variation_is_diagonal() {
        // Frames differing only by column phases: aligning unitaries are
        // diagonal in the base frame.
        let base = Matrix::diag_re(&[0.0, 1.0, 2.0]);
        let decomp = crate::field::frames::joint_decompose(&[&base]).unwrap();
        let segments = 8;
        let samples: Vec<TransportStep> = (0..=segments)
            .map(|j| {
                if j == 0 || j == segments {
                    return TransportStep {
                        labels: decomp.labels.clone(),
                        frame: decomp.frame.clone(),
                    };
                }
                let t = j as f64 / segments as f64;
                let d: Vec<C64> = (0..3)
                    .map(|i| C64::from_polar(1.0, 0.4 * (i as f64 + 1.0) * (std::f64::consts::TAU * t).sin()))
                    .collect();
                TransportStep {
                    labels: decomp.labels.clone(),
                    frame: decomp.frame.mul(&Matrix::diag(&d)),
                }
            })
            .collect();
        let data = BoundaryData::new([0, 1, 2], 0, 0.5, samples).unwrap();
        let align = boundary_align(&data).unwrap();
        for u in &align {
            let in_frame = decomp.frame.adjoint().mul(u).mul(&decomp.frame);
            for r in 0..3 {
                for c in 0..3 {
                    if r != c {
                        assert!(in_frame.get(r, c).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn odd_boundaries_cannot_be_reflection_aligned() {
        let data = synthetic_boundary(0.05, 15);
        assert!(matches!(
            boundary_align(&data),
            Err(Error::BadParam(_))
        ));
    }

    #[test]
    fn constant_field_on_the_sphere_diagonalizes_exactly() {
        let domain = build_domain(DomainKind::Sphere2 { k: 1 }).unwrap();
        let field = hermitian_field(domain, |_| Matrix::diag_re(&[0.0, 1.0, 2.0]));
        let out = diagonalize_complex2(&field, 0.1, 1e-9).unwrap();
        let model = out.field().expect("constant fields are unobstructed");
        assert_eq!(model.fills.len(), field.domain.triangles.len());
        let dict = FunctionDictionary::new(2, 1).unwrap();
        let report = residual_report(&field, model, &dict, 1e-9).unwrap();
        assert!(report.max <= 1e-9, "residual {}", report.max);
    }

    #[test]
    fn seeded_sphere_field_diagonalizes_and_refines() {
        let coarse = seeded_sphere_field(0);
        let fine = seeded_sphere_field(1);
        let dict = FunctionDictionary::new(2, 1).unwrap();
        let mut residuals = Vec::new();
        for field in [&coarse, &fine] {
            let out = diagonalize_complex2(field, 0.45, 5.0).unwrap();
            let model = out.field().expect("gapped field is unobstructed");
            let report = residual_report(field, model, &dict, 5.0).unwrap();
            residuals.push(report.max);
        }
        assert!(
            residuals[1] <= 0.7 * residuals[0],
            "refinement went {:.3e} -> {:.3e}",
            residuals[0],
            residuals[1]
        );
    }

    #[test]
    fn monopole_band_is_certified_chern_obstructed() {
        let domain = build_domain(DomainKind::Sphere2 { k: 1 }).unwrap();
        let field = hermitian_field(domain, |c| {
            // k̂·σ: eigenvalues ±1 everywhere, eigenbundles with Chern ∓1.
            Matrix::from_rows(&[
                vec![C64::new(c[2], 0.0), C64::new(c[0], -c[1])],
                vec![C64::new(c[0], c[1]), C64::new(-c[2], 0.0)],
            ])
            .unwrap()
        });
        let out = diagonalize_complex2(&field, 0.5, 0.5).unwrap();
        let report = out.obstruction().expect("monopole must be obstructed");
        assert_eq!(report.kind, ObstructionKind::Chern);
        assert_eq!(report.value, ObstructionValue::Integer(-1));
        assert!(report.tension_flag);
    }

    #[test]
    fn braid_cycle_is_obstructed_through_the_general_driver() {
        let domain = build_domain(DomainKind::Cycle { m: 64 }).unwrap();
        let field = crate::obstruction::gen_example(crate::obstruction::ExampleKind::Braid, &domain)
            .unwrap();
        let out = diagonalize_complex2(&field, 0.2, 0.5).unwrap();
        let report = out.obstruction().expect("braid monodromy survives");
        assert_eq!(report.kind, ObstructionKind::Monodromy);
        assert_eq!(report.value, ObstructionValue::Permutation(vec![1, 0]));
    }

    #[test]
    fn skeleton_transports_feed_consistent_boundaries() {
        let field = seeded_sphere_field(0);
        let out = diagonalize_complex2(&field, 0.45, 5.0).unwrap();
        let model = out.field().unwrap();
        for t in 0..field.domain.triangles.len() {
            let data = triangle_boundary(model, &field.domain, t).unwrap();
            // Loop closes and starts at the anchor's stored decomposition.
            let anchor = data.anchor;
            assert!(bit_equal_matrix(
                &data.samples[0].frame,
                &model.frames[anchor]
            ));
        }
    }
}

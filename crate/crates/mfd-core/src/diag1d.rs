//! Diagonalization over 1-complexes: joint decompositions at the vertices,
//! matched frame transport along the edges, and loop closure over cycles.
//!
//! The sweep is gauge-fixing all the way down. Vertex decompositions come out
//! of the Jacobi kernel with arbitrary column phases (and arbitrary bases
//! inside degenerate eigenvalue clusters), so the driver walks the complex
//! from its lowest vertex, re-expressing each newly reached vertex in the
//! gauge transported from its parent. After the sweep every stored transport
//! starts and ends bit-equal to its vertex decompositions — the continuity
//! of the assembly is checkable, not asserted.
//!
//! Cycles add the one genuinely global step: the composed matching around
//! the loop. When it is a nontrivial permutation that cannot be rerouted
//! through an eigenvalue cluster of the base vertex, the cycle is certified
//! obstructed instead of being force-closed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{snap, unitary_log_gap_full, Matrix, SnapMode, C64};
use crate::error::Error;
use crate::field::{
    residual_report, DiagonalFrameField, EdgeTransport, FunctionDictionary, GeneratorField,
    GeneratorKind, JointDecomp, TransportStep,
};
use crate::matching::{bottleneck_match, cluster_by_radius, label_dist, LabelPoint, MatchingPlan};
use crate::obstruction::ObstructionReport;
use crate::Result;

/// Outcome of a cycle (or 2-complex) diagonalization: either a checked
/// diagonal model or a certified obstruction. Obstructions are values, not
/// errors — the computation succeeded at showing the model cannot exist.
#[derive(Clone, Debug)]
pub enum DiagOutcome {
    Diagonalized(DiagonalFrameField),
    Obstructed(ObstructionReport),
}

impl DiagOutcome {
    pub fn field(&self) -> Option<&DiagonalFrameField> {
        match self {
            DiagOutcome::Diagonalized(f) => Some(f),
            DiagOutcome::Obstructed(_) => None,
        }
    }

    pub fn obstruction(&self) -> Option<&ObstructionReport> {
        match self {
            DiagOutcome::Diagonalized(_) => None,
            DiagOutcome::Obstructed(r) => Some(r),
        }
    }
}

/// The composed matching around a cycle, with per-orbit label windings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonodromyResult {
    /// Composition of the per-edge matchings: track `i` at the base vertex
    /// returns as track `perm[i]`.
    pub perm: Vec<usize>,
    /// Accumulated unitary-label phase around the loop, one integer per
    /// orbit of `perm`, ordered by each orbit's smallest track id.
    pub windings: Vec<i64>,
    /// `perm` is the identity.
    pub trivial: bool,
}

impl MonodromyResult {
    /// Orbits of the composed permutation, each sorted from its least
    /// element, in order of that element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        orbits_of(&self.perm)
    }
}

pub(crate) fn orbits_of(perm: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; perm.len()];
    let mut orbits = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            orbit.push(i);
            i = perm[i];
        }
        orbits.push(orbit);
    }
    orbits
}

pub(crate) fn identity_perm(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub(crate) fn is_identity(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(i, &j)| i == j)
}

/// Matching radius suggestion: four times the largest per-edge spectral
/// motion, so adjacent spectra always land inside their own match balls with
/// room for the decomposition noise.
pub fn suggest_eta(field: &GeneratorField) -> Result<f64> {
    let mut motion = 0.0f64;
    for &[a, b] in &field.domain.edges {
        for g in &field.generators {
            motion = motion.max(crate::matching::spectra_hausdorff(
                &g.samples[a],
                &g.samples[b],
            )?);
        }
    }
    Ok((4.0 * motion).max(1e-8))
}

/// Jointly decompose every vertex of a field, snapping labels to the
/// declared generator kinds. Vertices are independent; this runs them in
/// parallel with a deterministic collect order.
pub(crate) fn vertex_decomps(field: &GeneratorField) -> Result<Vec<JointDecomp>> {
    let kinds = field.kinds();
    (0..field.domain.vertex_count())
        .into_par_iter()
        .map(|v| {
            let tuple = field.vertex_tuple(v);
            let (decomp, _) = crate::field::frames::resnap_tuple(&tuple, &kinds)?;
            Ok(decomp)
        })
        .collect()
}

/// The matched-and-gauged version of `b` that a transport from `a` should
/// end at: columns reordered by the plan, then rotated as little as possible
/// without disturbing what the decomposition asserts.
///
/// Column phases are free (they cancel in every projection), so each column
/// turns to face its partner. Basis freedom inside *numerically degenerate*
/// label clusters — where both endpoints' labels collide — is spent on a
/// per-block orthogonal Procrustes alignment. Anything larger stays put: a
/// split spectrum pins its eigenbasis, and rotating it would falsify the
/// decomposition by more than the degeneracy tolerance.
pub(crate) fn gauge_target(
    a: &JointDecomp,
    b: &JointDecomp,
    plan: &MatchingPlan,
) -> Result<(Vec<LabelPoint>, Matrix)> {
    let n = a.n();
    let labels: Vec<LabelPoint> = plan.perm.iter().map(|&j| b.labels[j].clone()).collect();
    let mut frame = b.frame.select_columns(&plan.perm);

    let scale = a
        .labels
        .iter()
        .chain(&labels)
        .flat_map(|l| l.iter().map(|z| z.norm()))
        .fold(0.0f64, f64::max);
    let degen = 1e-7 * (1.0 + scale);
    let paired: Vec<LabelPoint> = (0..n)
        .map(|i| a.labels[i].iter().chain(&labels[i]).copied().collect())
        .collect();
    let blocks = cluster_by_radius(&paired, degen)?;

    for block in &blocks.clusters {
        if block.len() == 1 {
            let i = block[0];
            let z = crate::dense::inner(&frame.column(i), &a.frame.column(i));
            if z.norm() < 0.1 {
                // A twisted frame under a label collision that the matching
                // did not merge; leave the column alone and let the rotation
                // generator absorb the difference.
                continue;
            }
            let q = z / z.norm();
            if (q - C64::new(1.0, 0.0)).norm() < 1e-12 {
                continue; // already aligned — keep the bits
            }
            let col: Vec<C64> = frame.column(i).iter().map(|x| x * q).collect();
            frame.set_column(i, &col);
        } else {
            let cols_b: Vec<Vec<C64>> = block.iter().map(|&i| frame.column(i)).collect();
            let m = Matrix::from_fn(block.len(), |r, c| {
                crate::dense::inner(&cols_b[r], &a.frame.column(block[c]))
            });
            let q = match snap(&m, SnapMode::Unitary) {
                Ok(q) => q,
                // Degenerate overlap: skip the alignment rather than invent one.
                Err(_) => continue,
            };
            for (c, &i) in block.iter().enumerate() {
                let mut col = vec![C64::new(0.0, 0.0); n];
                for (r, src) in cols_b.iter().enumerate() {
                    let w = q.get(r, c);
                    for (dst, s) in col.iter_mut().zip(src) {
                        *dst += s * w;
                    }
                }
                frame.set_column(i, &col);
            }
        }
    }
    Ok((labels, frame))
}

/// Discretize the path from `a` to a matched target decomposition: labels
/// interpolate linearly, frames rotate by `exp(i·s·h)` with `h` the
/// gap-branch logarithm of the alignment unitary. First and last steps are
/// bit-copies of the endpoints; `steps = None` picks the count that keeps
/// every frame increment below a 0.2 rotation.
pub(crate) fn build_transport(
    edge: [usize; 2],
    a: &JointDecomp,
    target_labels: &[LabelPoint],
    target_frame: &Matrix,
    plan: MatchingPlan,
    steps: Option<usize>,
) -> Result<EdgeTransport> {
    let n = a.n();
    let g = a.g();
    let u_align = target_frame.mul(&a.frame.adjoint());

    // A constant edge is emitted as literal copies so downstream bit-equality
    // and "commutator ≡ 0" hold exactly.
    if is_identity(&plan.perm)
        && plan.bottleneck_cost == 0.0
        && crate::field::frames::bit_equal_matrix(&a.frame, target_frame)
        && crate::field::frames::bit_equal_labels(&a.labels, target_labels)
    {
        let count = steps.unwrap_or(8).max(2);
        let step = TransportStep {
            labels: a.labels.clone(),
            frame: a.frame.clone(),
        };
        return Ok(EdgeTransport {
            edge,
            plan,
            h: Matrix::zeros(n),
            steps: vec![step; count + 1],
            commutator_profile: vec![0.0; count + 1],
            two_segment: false,
        });
    }

    let log = unitary_log_gap_full(&u_align)?;
    let mut count = match steps {
        Some(s) => s,
        None => ((log.norm() / 0.2).ceil() as usize).max(8),
    };
    let two_segment = log.gap < 1e-3;
    if two_segment {
        // No comfortable branch gap: emit the same trajectory as two stacked
        // half-rotations, sampled twice as densely.
        count *= 2;
    }

    let models: Vec<Matrix> = (0..g).map(|gi| a.model(gi)).collect();
    let mut path = Vec::with_capacity(count + 1);
    let mut profile = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let s = k as f64 / count as f64;
        let rot = log.exp_scaled(s);
        let frame = rot.mul(&a.frame);
        let labels: Vec<LabelPoint> = (0..n)
            .map(|i| {
                (0..g)
                    .map(|gi| a.labels[i][gi] * (1.0 - s) + target_labels[i][gi] * s)
                    .collect()
            })
            .collect();
        let comm = models
            .iter()
            .map(|m| rot.commutator(m).op_norm())
            .fold(0.0f64, f64::max);
        path.push(TransportStep { labels, frame });
        profile.push(comm);
    }

    // The discretized rotation must actually arrive; then pin the endpoints
    // bit-exactly (the drift absorbed here is the step's rounding error).
    let drift = path[count].frame.sub(target_frame).op_norm();
    if drift > 1e-8 {
        return Err(Error::ValidationFailed(format!(
            "transport end misses its target frame by {drift:.3e}"
        )));
    }
    path[0] = TransportStep {
        labels: a.labels.clone(),
        frame: a.frame.clone(),
    };
    path[count] = TransportStep {
        labels: target_labels.to_vec(),
        frame: target_frame.clone(),
    };

    Ok(EdgeTransport {
        edge,
        plan,
        h: log.h,
        steps: path,
        commutator_profile: profile,
        two_segment,
    })
}

/// Matched frame transport between two adjacent vertex decompositions.
///
/// The returned path starts bit-equal to `a`; it ends at the gauge-normalized
/// representative of `b` (same labels up to the plan's permutation, same
/// block projections), which `end().decomp()` exposes so drivers can install
/// it as the vertex decomposition. The `edge` field is a `[0, 1]`
/// placeholder for standalone use; sweeps overwrite it.
pub fn edge_transport(
    a: &JointDecomp,
    b: &JointDecomp,
    eta: f64,
    steps: usize,
) -> Result<EdgeTransport> {
    a.validate()?;
    b.validate()?;
    if a.n() != b.n() || a.g() != b.g() {
        return Err(Error::ShapeMismatch(format!(
            "decompositions of shape (n={}, g={}) and (n={}, g={})",
            a.n(),
            a.g(),
            b.n(),
            b.g()
        )));
    }
    if steps < 2 {
        return Err(Error::BadParam(format!("steps = {steps}, need at least 2")));
    }
    check_eta(eta)?;
    let plan = bottleneck_match(&a.labels, &b.labels, eta)?;
    let (labels, frame) = gauge_target(a, b, &plan)?;
    build_transport([0, 1], a, &labels, &frame, plan, Some(steps))
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::BadParam(format!(
            "matching radius eta = {eta} must be positive"
        )));
    }
    Ok(())
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::BadParam(format!(
            "tolerance eps = {eps} must be positive"
        )));
    }
    Ok(())
}

/// Diagonalize a field over an acyclic 1-complex (interval or forest).
///
/// Every vertex is decomposed, the complex is swept from its lowest vertex
/// ids, and each edge receives a transport whose endpoints are bit-equal to
/// the (gauge-fixed) vertex decompositions. The assembled model is validated
/// structurally and its residual measured against the degree-2 dictionary;
/// a miss is reported as `ToleranceNotMet` with the achieved value.
pub fn diagonalize_path(
    field: &GeneratorField,
    eta: f64,
    eps: f64,
) -> Result<DiagonalFrameField> {
    check_eta(eta)?;
    check_eps(eps)?;
    field.validate()?;
    let domain = &field.domain;
    if domain.dimension() > 1 {
        return Err(Error::ValidationFailed(format!(
            "path diagonalization works on 1-complexes, {} has dimension {}",
            domain.kind,
            domain.dimension()
        )));
    }
    if has_cycle(domain.vertex_count(), &domain.edges) {
        return Err(Error::ValidationFailed(format!(
            "{} contains a cycle; close it with the cycle driver",
            domain.kind
        )));
    }

    let mut decomps = vertex_decomps(field)?;
    let mut transports: Vec<Option<EdgeTransport>> = vec![None; domain.edges.len()];

    // Adjacency with edge indices; forward means traversal in stored order.
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
                let edge = domain.edges[edge_idx];
                let t = if forward {
                    let from = decomps[v].clone();
                    sweep_edge(edge, &from, &mut decomps[other], eta)?
                } else {
                    // Stored orientation runs other → v; install the new
                    // vertex from this side first, then transport towards
                    // the already-fixed one.
                    let rev = bottleneck_match(&decomps[v].labels, &decomps[other].labels, eta)?;
                    let (labels, frame) = gauge_target(&decomps[v], &decomps[other], &rev)?;
                    decomps[other] = JointDecomp {
                        frame,
                        labels,
                    };
                    let cost = matched_cost(&decomps[other].labels, &decomps[v].labels);
                    let plan = MatchingPlan {
                        perm: identity_perm(field.n),
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

    let transports: Vec<EdgeTransport> = transports
        .into_iter()
        .map(|t| t.expect("every forest edge is swept"))
        .collect();
    assemble_and_check(field, decomps, transports, eta, eps)
}

/// Transport across one forward tree edge: match, gauge, build, and install
/// the arrival decomposition at the far vertex (so the stored plan becomes
/// the identity).
pub(crate) fn sweep_edge(
    edge: [usize; 2],
    from: &JointDecomp,
    to: &mut JointDecomp,
    eta: f64,
) -> Result<EdgeTransport> {
    let plan = bottleneck_match(&from.labels, &to.labels, eta)?;
    let (labels, frame) = gauge_target(from, to, &plan)?;
    let stored = MatchingPlan {
        perm: identity_perm(from.n()),
        bottleneck_cost: plan.bottleneck_cost,
        eta,
        feasible: plan.feasible,
    };
    let t = build_transport(edge, from, &labels, &frame, stored, None)?;
    *to = t.end().decomp();
    Ok(t)
}

pub(crate) fn matched_cost(a: &[LabelPoint], b: &[LabelPoint]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| label_dist(x, y))
        .fold(0.0, f64::max)
}

fn has_cycle(vertices: usize, edges: &[[usize; 2]]) -> bool {
    let mut parent: Vec<usize> = (0..vertices).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for &[a, b] in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return true;
        }
        parent[ra] = rb;
    }
    false
}

fn assemble_and_check(
    field: &GeneratorField,
    decomps: Vec<JointDecomp>,
    transports: Vec<EdgeTransport>,
    eta: f64,
    eps: f64,
) -> Result<DiagonalFrameField> {
    let mut model = DiagonalFrameField::from_vertex_decomps(eta, decomps)?;
    model.transports = transports;
    model.validate(&field.domain)?;
    let dict = FunctionDictionary::new(2, field.g())?;
    let report = residual_report(field, &model, &dict, eps)?;
    if report.max > eps {
        return Err(Error::ToleranceNotMet {
            achieved: report.max,
            requested: eps,
        });
    }
    Ok(model)
}

/// Compose the per-edge matchings around a cycle and integrate the label
/// phases.
///
/// Windings are read off the unitary-kind generators only (their labels stay
/// on the unit circle, so per-edge phase increments are well defined); one
/// integer is reported per orbit of the composed permutation. Hermitian
/// generators contribute permutation data but no phase.
pub fn cycle_monodromy(field: &GeneratorField, eta: f64) -> Result<MonodromyResult> {
    check_eta(eta)?;
    field.validate()?;
    if !field.domain.is_cycle() {
        return Err(Error::ValidationFailed(format!(
            "monodromy is a cycle invariant, got {}",
            field.domain.kind
        )));
    }
    let decomps = vertex_decomps(field)?;
    let unitary_gens: Vec<usize> = field
        .kinds()
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == GeneratorKind::Unitary)
        .map(|(i, _)| i)
        .collect();

    let n = field.n;
    let mut current = identity_perm(n);
    let mut acc = vec![0.0f64; n];
    for &[a, b] in &field.domain.edges {
        let plan = bottleneck_match(&decomps[a].labels, &decomps[b].labels, eta)?;
        for (i, cur) in current.iter_mut().enumerate() {
            let ta = *cur;
            let tb = plan.perm[ta];
            for &gi in &unitary_gens {
                let za = decomps[a].labels[ta][gi];
                let zb = decomps[b].labels[tb][gi];
                if za.norm() > 1e-9 && zb.norm() > 1e-9 {
                    acc[i] += (zb * za.conj()).arg();
                }
            }
            *cur = tb;
        }
    }

    let perm = current;
    let windings = orbits_of(&perm)
        .iter()
        .map(|orbit| {
            let total: f64 = orbit.iter().map(|&i| acc[i]).sum();
            crate::obstruction::quantize(
                total / (2.0 * std::f64::consts::PI),
                "orbit label winding",
            )
        })
        .collect::<Result<Vec<i64>>>()?;
    let trivial = is_identity(&perm);
    Ok(MonodromyResult {
        perm,
        windings,
        trivial,
    })
}

/// Diagonalize a field over a cycle, closing the loop explicitly.
///
/// The sweep fixes vertices `0, 1, …, m−1` exactly as the path driver does;
/// the final edge must then return to vertex 0. A trivial composed matching
/// closes bit-exactly. A nontrivial one is rerouted when it only permutes
/// tracks inside an η-cluster of the base vertex (the labels there agree to
/// within the resolution, so the permuted closure is as good as the straight
/// one); otherwise the composed permutation is certified as a monodromy
/// obstruction.
pub fn diagonalize_cycle(field: &GeneratorField, eta: f64, eps: f64) -> Result<DiagOutcome> {
    check_eta(eta)?;
    check_eps(eps)?;
    field.validate()?;
    if !field.domain.is_cycle() {
        return Err(Error::ValidationFailed(format!(
            "cycle diagonalization needs a cycle domain, got {}",
            field.domain.kind
        )));
    }
    let domain = &field.domain;
    let m = domain.vertex_count();
    let mut decomps = vertex_decomps(field)?;
    let mut transports: Vec<EdgeTransport> = Vec::with_capacity(m);

    // Tree edges [j, j+1] in traversal order.
    for idx in 0..(m - 1) {
        let edge = domain.edges[idx];
        let [a, b] = edge;
        debug_assert_eq!([a, b], [idx, idx + 1]);
        let (left, right) = decomps.split_at_mut(b);
        transports.push(sweep_edge(edge, &left[a], &mut right[0], eta)?);
    }

    // Closure edge [m−1, 0]: vertex 0 is pinned, so no gauge is applied to
    // it — the rotation generator absorbs whatever phase drift the sweep
    // accumulated.
    let closure_edge = domain.edges[m - 1];
    let gamma = bottleneck_match(&decomps[m - 1].labels, &decomps[0].labels, eta)?;
    let reroutable = if is_identity(&gamma.perm) {
        true
    } else {
        let clusters = cluster_by_radius(&decomps[0].labels, eta)?;
        (0..field.n).all(|i| clusters.cluster_of(i) == clusters.cluster_of(gamma.perm[i]))
    };
    if !reroutable {
        return Ok(DiagOutcome::Obstructed(ObstructionReport::monodromy(
            gamma.perm,
            domain.kind.to_string(),
        )));
    }
    let target_labels: Vec<LabelPoint> = gamma
        .perm
        .iter()
        .map(|&j| decomps[0].labels[j].clone())
        .collect();
    let target_frame = decomps[0].frame.select_columns(&gamma.perm);
    transports.push(build_transport(
        closure_edge,
        &decomps[m - 1],
        &target_labels,
        &target_frame,
        gamma,
        None,
    )?);

    assemble_and_check(field, decomps, transports, eta, eps).map(DiagOutcome::Diagonalized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::hermitian_eig;
    use crate::field::frames::{bit_equal_labels, bit_equal_matrix, joint_decompose};
    use crate::field::{build_domain, DomainKind, Generator, ResidualReport};
    use crate::obstruction::{gen_example, ExampleKind, ObstructionValue};

    fn decomp_of(m: &Matrix) -> JointDecomp {
        joint_decompose(&[m]).unwrap()
    }

    #[test]
    fn constant_edge_is_a_constant_path() {
        let a = Matrix::diag(&[C64::new(0.1, 0.4), C64::new(-0.7, 0.2)]);
        let d = decomp_of(&a);
        let t = edge_transport(&d, &d, 0.1, 8).unwrap();
        assert!(t.commutator_profile.iter().all(|&c| c == 0.0));
        for step in &t.steps {
            assert!(bit_equal_matrix(&step.frame, &d.frame));
            assert!(bit_equal_labels(&step.labels, &d.labels));
        }
        assert_eq!(t.h.op_norm(), 0.0);
    }

    /// `B = R·A·R*` with a small rotation: the transport must track it with
    /// commutators of the same order. The 5ε budget is measured, not derived.
    #[test]
    fn small_rotation_stays_small_in_commutator() {
        let eps = 1e-2;
        let h = Matrix::from_fn(3, |i, j| {
            C64::new(0.4 * ((i + 2 * j) as f64).sin(), 0.3 * (i as f64 - j as f64))
        })
        .hermitized();
        let h = h.scale_re(1.0 / h.op_norm());
        let eig = hermitian_eig(&h).unwrap();
        let phases: Vec<C64> = eig
            .labels
            .iter()
            .map(|l| C64::from_polar(1.0, eps * l.re))
            .collect();
        let r = eig
            .frame
            .mul(&Matrix::diag(&phases))
            .mul(&eig.frame.adjoint());

        let a = Matrix::diag(&[
            C64::new(0.1, 0.0),
            C64::new(0.6, 0.3),
            C64::new(-0.5, 0.8),
        ]);
        let b = r.mul(&a).mul(&r.adjoint());
        let da = decomp_of(&a);
        let db = decomp_of(&b);
        let t = edge_transport(&da, &db, 0.5, 16).unwrap();

        assert!(bit_equal_matrix(&t.start().frame, &da.frame));
        // End labels are b's labels under the plan, bit for bit.
        for i in 0..3 {
            assert!(bit_equal_labels(
                std::slice::from_ref(&t.end().labels[i]),
                std::slice::from_ref(&db.labels[t.plan.perm[i]])
            ));
        }
        // End models reproduce b's generator.
        assert!(t.end().decomp().model(0).sub(&b).op_norm() < 1e-9);
        let worst = t.commutator_profile.iter().copied().fold(0.0f64, f64::max);
        assert!(worst <= 5.0 * eps, "commutator {worst:.3e} above 5ε");
        assert!(t.h.op_norm() <= 2.0 * std::f64::consts::PI + 1e-9);
    }

    #[test]
    fn intermediate_labels_stay_within_the_matched_distance() {
        let a = Matrix::diag(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let b = Matrix::diag(&[C64::new(0.3, 0.1), C64::new(0.8, -0.2)]);
        let (da, db) = (decomp_of(&a), decomp_of(&b));
        let t = edge_transport(&da, &db, 1.0, 12).unwrap();
        for i in 0..2 {
            let d = label_dist(&da.labels[i], &db.labels[t.plan.perm[i]]);
            for step in &t.steps {
                assert!(label_dist(&step.labels[i], &da.labels[i]) <= d + 1e-12);
            }
        }
    }

    fn crossing_field(m: usize) -> GeneratorField {
        let domain = build_domain(DomainKind::Interval { m }).unwrap();
        let samples = (0..=m)
            .map(|i| {
                let t = i as f64 / m as f64;
                Matrix::diag_re(&[t, 1.0 - t])
            })
            .collect();
        GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "h".into(),
                kind: GeneratorKind::Hermitian,
                samples,
                lipschitz_hint: Some(1.0),
            }],
        )
        .unwrap()
    }

    #[test]
    fn crossing_interval_diagonalizes_within_budget() {
        let field = crossing_field(128);
        let model = diagonalize_path(&field, 0.05, 0.06).unwrap();
        model.validate(&field.domain).unwrap();
        let dict = FunctionDictionary::new(2, 1).unwrap();
        let report = residual_report(&field, &model, &dict, 0.06).unwrap();
        assert!(report.max <= 0.06, "residual {}", report.max);
        // Every transport stays within the 2π frame budget.
        for t in &model.transports {
            assert!(t.h.op_norm() <= 2.0 * std::f64::consts::PI + 1e-9);
        }
    }

    #[test]
    fn constant_field_on_a_tree_is_exact() {
        let domain = build_domain(DomainKind::Interval { m: 6 }).unwrap();
        let a = Matrix::diag(&[C64::new(0.2, 0.5), C64::new(-0.4, 0.1)]);
        let samples = vec![a; 7];
        let field = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "a".into(),
                kind: GeneratorKind::Normal,
                samples,
                lipschitz_hint: None,
            }],
        )
        .unwrap();
        let model = diagonalize_path(&field, 0.1, 1e-9).unwrap();
        assert_eq!(model.continuity_modulus(), 0.0);
    }

    #[test]
    fn tolerance_miss_reports_the_achieved_residual() {
        let field = crossing_field(8); // coarse: mesh residual ≈ 1/8
        let err = diagonalize_path(&field, 0.3, 1e-4).unwrap_err();
        match err {
            Error::ToleranceNotMet {
                achieved,
                requested,
            } => {
                assert!(achieved > 1e-4 && requested == 1e-4);
            }
            other => panic!("expected ToleranceNotMet, got {other}"),
        }
    }

    #[test]
    fn monodromy_of_a_constant_cycle_is_trivial() {
        let domain = build_domain(DomainKind::Cycle { m: 12 }).unwrap();
        let a = Matrix::diag_re(&[0.0, 1.0, 2.0]);
        let field = GeneratorField::new(
            domain,
            3,
            vec![Generator {
                name: "h".into(),
                kind: GeneratorKind::Hermitian,
                samples: vec![a; 12],
                lipschitz_hint: None,
            }],
        )
        .unwrap();
        let m = cycle_monodromy(&field, 0.1).unwrap();
        assert!(m.trivial);
        assert_eq!(m.perm, vec![0, 1, 2]);
        assert_eq!(m.windings, vec![0, 0, 0]);
    }

    #[test]
    fn braid_monodromy_swaps_the_tracks() {
        let domain = build_domain(DomainKind::Cycle { m: 64 }).unwrap();
        let field = gen_example(ExampleKind::Braid, &domain).unwrap();
        let m = cycle_monodromy(&field, 0.2).unwrap();
        assert!(!m.trivial);
        assert_eq!(m.perm, vec![1, 0]);
        // One orbit, half a turn per track: total winding 1.
        assert_eq!(m.windings, vec![1]);
    }

    #[test]
    fn monodromy_is_stable_under_refinement() {
        let domain = build_domain(DomainKind::Cycle { m: 32 }).unwrap();
        let coarse = gen_example(ExampleKind::Braid, &domain).unwrap();
        let fine = crate::field::refine_field(&coarse).unwrap();
        let mc = cycle_monodromy(&coarse, 0.3).unwrap();
        let mf = cycle_monodromy(&fine, 0.3).unwrap();
        assert_eq!(mc.perm, mf.perm);
        assert_eq!(mc.windings, mf.windings);
    }

    #[test]
    fn winding_cycle_diagonalizes_with_unit_winding() {
        let m = 256;
        let domain = build_domain(DomainKind::Cycle { m }).unwrap();
        let samples = (0..m)
            .map(|v| {
                let t = domain.angle(v);
                Matrix::diag(&[C64::from_polar(1.0, t), C64::new(1.0, 0.0)])
            })
            .collect();
        let field = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "u".into(),
                kind: GeneratorKind::Unitary,
                samples,
                lipschitz_hint: Some(1.0),
            }],
        )
        .unwrap();
        let mono = cycle_monodromy(&field, 0.05).unwrap();
        assert!(mono.trivial);
        assert_eq!(mono.windings, vec![1, 0]);

        let out = diagonalize_cycle(&field, 0.05, 0.05).unwrap();
        let model = out.field().expect("trivial monodromy diagonalizes");
        model.validate(&field.domain).unwrap();
        let dict = FunctionDictionary::new(2, 1).unwrap();
        let report = residual_report(&field, model, &dict, 0.05).unwrap();
        assert!(report.max <= 0.05, "residual {}", report.max);
    }

    #[test]
    fn braid_cycle_is_certified_obstructed() {
        let domain = build_domain(DomainKind::Cycle { m: 64 }).unwrap();
        let field = gen_example(ExampleKind::Braid, &domain).unwrap();
        let out = diagonalize_cycle(&field, 0.2, 0.5).unwrap();
        let report = out.obstruction().expect("braid must be obstructed");
        assert_eq!(report.kind, crate::obstruction::ObstructionKind::Monodromy);
        assert_eq!(report.value, ObstructionValue::Permutation(vec![1, 0]));
        assert!(report.tension_flag);
    }

    /// Rotating-frame Hermitian field: checks the propagated residual bound
    /// `vertex + Lip·(label motion) + degree-weighted commutator`.
    #[test]
    fn residual_stays_within_the_propagation_bound() {
        let m = 16;
        let domain = build_domain(DomainKind::Interval { m }).unwrap();
        let k = Matrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -0.5),
            (1, 0) => C64::new(0.0, 0.5),
            _ => C64::new(0.0, 0.0),
        });
        let keig = hermitian_eig(&k).unwrap();
        let rot = |t: f64| {
            let d: Vec<C64> = keig
                .labels
                .iter()
                .map(|l| C64::from_polar(1.0, t * l.re))
                .collect();
            keig.frame.mul(&Matrix::diag(&d)).mul(&keig.frame.adjoint())
        };
        let base = Matrix::diag_re(&[0.2, 0.8]);
        let samples: Vec<Matrix> = (0..=m)
            .map(|i| {
                let r = rot(i as f64 / m as f64);
                r.mul(&base).mul(&r.adjoint()).hermitized()
            })
            .collect();
        let field = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "h".into(),
                kind: GeneratorKind::Hermitian,
                samples,
                lipschitz_hint: Some(0.5),
            }],
        )
        .unwrap();

        let model = diagonalize_path(&field, 0.1, 0.5).unwrap();
        let dict = FunctionDictionary::new(2, 1).unwrap();
        let report: ResidualReport = residual_report(&field, &model, &dict, 0.5).unwrap();

        let radius = field.spectral_radius_bound();
        let lip = dict.lipschitz_bound(radius);
        let vertex_max = report
            .vertex_member
            .iter()
            .flatten()
            .fold(0.0f64, |a, &b| a.max(b));
        let degree_factor = dict
            .members
            .iter()
            .map(|mem| mem.total_degree() as f64 * radius.max(1.0).powi(mem.total_degree() as i32 - 1))
            .fold(0.0f64, f64::max);
        for t in &model.transports {
            let comm = t.commutator_profile.iter().copied().fold(0.0f64, f64::max);
            let bound = vertex_max + lip * t.plan.bottleneck_cost + degree_factor * comm + 1e-8;
            // The report's edge maximum is over all transports; each one
            // individually must respect its own budget, so the global max
            // respects the largest.
            assert!(
                report.edge_interior_max <= {
                    // compare against the worst bound over transports
                    let worst = model
                        .transports
                        .iter()
                        .map(|t| {
                            let c = t.commutator_profile.iter().copied().fold(0.0f64, f64::max);
                            vertex_max + lip * t.plan.bottleneck_cost + degree_factor * c
                        })
                        .fold(0.0f64, f64::max);
                    worst + 1e-8
                },
                "edge residual {} exceeds propagated bound {}",
                report.edge_interior_max,
                bound
            );
        }
    }

    #[test]
    fn suggested_eta_tracks_spectral_motion() {
        let field = crossing_field(64);
        let eta = suggest_eta(&field).unwrap();
        assert!((eta - 4.0 / 64.0).abs() < 1e-9, "eta = {eta}");
    }

    #[test]
    fn rejects_cyclic_domains_in_path_mode() {
        let domain = build_domain(DomainKind::Cycle { m: 8 }).unwrap();
        let samples = (0..8).map(|_| Matrix::diag_re(&[0.0, 1.0])).collect();
        let field = GeneratorField::new(
            domain,
            2,
            vec![Generator {
                name: "h".into(),
                kind: GeneratorKind::Hermitian,
                samples,
                lipschitz_hint: None,
            }],
        )
        .unwrap();
        assert!(matches!(
            diagonalize_path(&field, 0.1, 0.1),
            Err(Error::ValidationFailed(_))
        ));
    }
}

//! Label matching between adjacent spectral decompositions.
//!
//! Transport along an edge needs to know which label at one endpoint
//! continues which label at the other. That is a bottleneck assignment
//! problem: minimize the largest matched distance, so that one outlier cannot
//! be traded against many good pairs. Clustering at resolution η identifies
//! labels that cannot be told apart at the working tolerance; those clusters
//! are exactly the places where monodromy may be rerouted and where frames
//! may be rotated block-wise at bounded cost.

use serde::{Deserialize, Serialize};

use crate::dense::{normal_decompose, Matrix, SpectralDecomp, C64};
use crate::error::Error;
use crate::Result;

/// A point in `C^g`: one label of a joint decomposition (one complex value
/// per generator).
pub type LabelPoint = Vec<C64>;

/// Euclidean distance between label points.
pub fn label_dist(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Result of a bottleneck matching between two label lists of equal length.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatchingPlan {
    /// `perm[i]` is the index in `b` matched to index `i` in `a`.
    pub perm: Vec<usize>,
    /// Largest matched distance; exactly `max_i dist(a[i], b[perm[i]])`.
    pub bottleneck_cost: f64,
    /// Resolution the plan was requested at.
    pub eta: f64,
    /// Whether the optimum meets the requested resolution
    /// (`bottleneck_cost ≤ eta`).
    pub feasible: bool,
}

impl MatchingPlan {
    /// Plan for the reverse direction (`b` to `a`).
    pub fn inverse(&self) -> MatchingPlan {
        let mut perm = vec![0usize; self.perm.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            perm[j] = i;
        }
        MatchingPlan {
            perm,
            bottleneck_cost: self.bottleneck_cost,
            eta: self.eta,
            feasible: self.feasible,
        }
    }
}

/// Min-max (bottleneck) assignment between two equal-length label lists.
///
/// The optimum threshold is found by bisecting the sorted distance values,
/// testing feasibility with an augmenting-path matching. Among all optimal
/// assignments the lexicographically smallest permutation is returned, which
/// pins a deterministic choice when labels collide or cross.
pub fn bottleneck_match(a: &[LabelPoint], b: &[LabelPoint], eta: f64) -> Result<MatchingPlan> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(format!(
            "label lists of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n == 0 {
        return Ok(MatchingPlan {
            perm: vec![],
            bottleneck_cost: 0.0,
            eta,
            feasible: true,
        });
    }
    let g = a[0].len();
    if a.iter().chain(b.iter()).any(|p| p.len() != g) {
        return Err(Error::ShapeMismatch(
            "label points of unequal generator count".into(),
        ));
    }
    let dist: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| label_dist(x, y)).collect())
        .collect();

    // Bisect over the sorted distinct distances for the optimal threshold.
    let mut values: Vec<f64> = dist.iter().flatten().copied().collect();
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    values.dedup();
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    if !feasible_at(&dist, values[hi]) {
        // Cannot happen with a complete finite matrix, defensive only.
        return Err(Error::ValidationFailed(
            "no perfect matching at the maximal distance".into(),
        ));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible_at(&dist, values[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let threshold = values[lo];

    // Lexicographically smallest optimal permutation: fix rows in order,
    // always trying the smallest admissible column whose removal keeps the
    // rest feasible.
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for i in 0..n {
        let mut chosen = None;
        for j in 0..n {
            if used[j] || dist[i][j] > threshold {
                continue;
            }
            used[j] = true;
            if feasible_rest(&dist, threshold, i + 1, &used) {
                chosen = Some(j);
                break;
            }
            used[j] = false;
        }
        let j = chosen.ok_or_else(|| {
            Error::ValidationFailed("bottleneck refinement lost feasibility".into())
        })?;
        perm[i] = j;
    }
    let bottleneck_cost = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| dist[i][j])
        .fold(0.0f64, f64::max);
    Ok(MatchingPlan {
        perm,
        bottleneck_cost,
        eta,
        feasible: bottleneck_cost <= eta,
    })
}

/// Does the bipartite graph `{dist ≤ threshold}` admit a perfect matching?
fn feasible_at(dist: &[Vec<f64>], threshold: f64) -> bool {
    feasible_rest(dist, threshold, 0, &vec![false; dist.len()])
}

/// Can rows `from..n` be matched into the columns not yet `used`?
fn feasible_rest(dist: &[Vec<f64>], threshold: f64, from: usize, used: &[bool]) -> bool {
    let n = dist.len();
    let mut col_of: Vec<Option<usize>> = vec![None; n];
    for i in from..n {
        let mut visited = vec![false; n];
        if !augment(dist, threshold, i, from, used, &mut visited, &mut col_of) {
            return false;
        }
    }
    true
}

fn augment(
    dist: &[Vec<f64>],
    threshold: f64,
    row: usize,
    from: usize,
    used: &[bool],
    visited: &mut [bool],
    col_of: &mut [Option<usize>],
) -> bool {
    for j in 0..dist.len() {
        if used[j] || visited[j] || dist[row][j] > threshold {
            continue;
        }
        visited[j] = true;
        let free = match col_of[j] {
            None => true,
            Some(other) => {
                debug_assert!(other >= from);
                augment(dist, threshold, other, from, used, visited, col_of)
            }
        };
        if free {
            col_of[j] = Some(row);
            return true;
        }
    }
    false
}

/// Partition of labels into connected components of the proximity graph
/// `{dist ≤ eta}` (chained closeness, so a cluster's diameter may exceed η).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterPartition {
    /// Member indices per cluster; clusters ordered by smallest member,
    /// members ascending.
    pub clusters: Vec<Vec<usize>>,
    /// Component-wise mean of each cluster's labels.
    #[serde(with = "crate::field::io::c64vecvec")]
    pub centers: Vec<LabelPoint>,
    /// Resolution the partition was built at.
    pub eta: f64,
}

impl ClusterPartition {
    /// Cluster index containing label `i`.
    pub fn cluster_of(&self, i: usize) -> usize {
        self.clusters
            .iter()
            .position(|c| c.contains(&i))
            .expect("label index out of range")
    }

    /// Smallest distance between labels of different clusters (∞ for a single
    /// cluster).
    pub fn separation(&self, labels: &[LabelPoint]) -> f64 {
        let mut sep = f64::INFINITY;
        for (ci, c) in self.clusters.iter().enumerate() {
            for d in self.clusters.iter().skip(ci + 1) {
                for &i in c {
                    for &j in d {
                        sep = sep.min(label_dist(&labels[i], &labels[j]));
                    }
                }
            }
        }
        sep
    }
}

/// Group labels by chained η-proximity.
pub fn cluster_by_radius(labels: &[LabelPoint], eta: f64) -> Result<ClusterPartition> {
    if eta < 0.0 || !eta.is_finite() {
        return Err(Error::BadParam(format!("eta = {eta} must be finite and ≥ 0")));
    }
    let n = labels.len();
    let g = labels.first().map_or(0, |p| p.len());
    if labels.iter().any(|p| p.len() != g) {
        return Err(Error::ShapeMismatch(
            "label points of unequal generator count".into(),
        ));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if label_dist(&labels[i], &labels[j]) <= eta {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_to_cluster = std::collections::BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let idx = *root_to_cluster.entry(r).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[idx].push(i);
    }
    let centers = clusters
        .iter()
        .map(|c| {
            let mut center = vec![C64::new(0.0, 0.0); g];
            for &i in c {
                for (acc, v) in center.iter_mut().zip(&labels[i]) {
                    *acc += v;
                }
            }
            let k = c.len() as f64;
            center.iter_mut().for_each(|z| *z /= k);
            center
        })
        .collect();
    Ok(ClusterPartition {
        clusters,
        centers,
        eta,
    })
}

/// Unitary `W` aligning the frame of `a` with the frame of `b` along `plan`:
/// `W* p_i(a) W = p_{perm[i]}(b)` exactly at the level of the construction
/// (`W = Σ_i a_i b_{perm[i]}*`), and within 1e-10 numerically.
pub fn frame_alignment_unitary(
    a: &SpectralDecomp,
    b: &SpectralDecomp,
    plan: &MatchingPlan,
) -> Result<Matrix> {
    let n = a.dim();
    if b.dim() != n || plan.perm.len() != n {
        return Err(Error::SizeMismatch(
            "decompositions and plan must share one dimension".into(),
        ));
    }
    let mut seen = vec![false; n];
    for &j in &plan.perm {
        if j >= n || seen[j] {
            return Err(Error::BadParam("plan.perm is not a permutation".into()));
        }
        seen[j] = true;
    }
    for d in [a, b] {
        let dev = d.frame_deviation();
        if dev > 1e-8 {
            return Err(Error::DegenerateFrame(format!(
                "frame unitarity deviation {dev:.3e} exceeds 1e-8"
            )));
        }
    }
    let mut w = Matrix::zeros(n);
    for i in 0..n {
        let ai = a.frame.column(i);
        let bj = b.frame.column(plan.perm[i]);
        for r in 0..n {
            for c in 0..n {
                let v = w.get(r, c) + ai[r] * bj[c].conj();
                w.set(r, c, v);
            }
        }
    }
    Ok(w)
}

/// Hausdorff distance between the spectra of two normal matrices.
pub fn spectra_hausdorff(a: &Matrix, b: &Matrix) -> Result<f64> {
    let da = normal_decompose(a)?;
    let db = normal_decompose(b)?;
    Ok(hausdorff(&da.labels, &db.labels))
}

pub(crate) fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let one_way = |from: &[C64], to: &[C64]| {
        from.iter()
            .map(|x| {
                to.iter()
                    .map(|y| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Conjugate-pair normalization for 2×2 fields whose spectrum is `{λ, λ̄}`:
/// the second label is replaced by the conjugate of the first. If the input
/// pair sits within `ε/8` of the true spectrum, the normalized pair stays
/// within `ε` of it (the mirrored label moves by at most the original error
/// plus the pair's deviation from exact conjugacy).
pub fn conjugate_pair_normalize(labels: &[C64]) -> Result<Vec<C64>> {
    if labels.len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "conjugate-pair normalization needs exactly 2 labels, got {}",
            labels.len()
        )));
    }
    Ok(vec![labels[0], labels[0].conj()])
}

/// Default matching resolution: 1% of the spectral diameter of the labels.
pub fn default_eta(labels: &[LabelPoint]) -> f64 {
    let mut diameter = 0.0f64;
    for (i, a) in labels.iter().enumerate() {
        for b in labels.iter().skip(i + 1) {
            diameter = diameter.max(label_dist(a, b));
        }
    }
    1e-2 * diameter
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(values: &[f64]) -> Vec<LabelPoint> {
        values.iter().map(|&v| vec![C64::new(v, 0.0)]).collect()
    }

    #[test]
    fn identical_lists_match_identically() {
        let a = pts(&[0.0, 1.0, 2.0]);
        let plan = bottleneck_match(&a, &a, 0.1).unwrap();
        assert_eq!(plan.perm, vec![0, 1, 2]);
        assert_eq!(plan.bottleneck_cost, 0.0);
        assert!(plan.feasible);
    }

    #[test]
    fn swapped_pair_matches_at_zero_cost() {
        let a = pts(&[1.0, 2.0]);
        let b = pts(&[2.0, 1.0]);
        let plan = bottleneck_match(&a, &b, 0.5).unwrap();
        assert_eq!(plan.perm, vec![1, 0]);
        assert_eq!(plan.bottleneck_cost, 0.0);
    }

    #[test]
    fn ties_resolve_to_lexicographically_smallest() {
        // Two optimal assignments of equal bottleneck cost: identity wins.
        let a = pts(&[0.0, 1.0]);
        let b = pts(&[0.5, 0.5]);
        let plan = bottleneck_match(&a, &b, 1.0).unwrap();
        assert_eq!(plan.perm, vec![0, 1]);
        assert!((plan.bottleneck_cost - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bottleneck_beats_greedy() {
        // Greedy from the left would pair 0→0.9 giving cost 0.9; the
        // bottleneck optimum pairs crosswise at cost 0.45.
        let a = pts(&[0.0, 1.0]);
        let b = pts(&[0.9, 0.45]);
        let plan = bottleneck_match(&a, &b, 1.0).unwrap();
        assert_eq!(plan.perm, vec![1, 0]);
        assert!((plan.bottleneck_cost - 0.45).abs() < 1e-12);
    }

    #[test]
    fn infeasible_at_eta_is_flagged_not_failed() {
        let a = pts(&[0.0]);
        let b = pts(&[1.0]);
        let plan = bottleneck_match(&a, &b, 0.1).unwrap();
        assert!(!plan.feasible);
        assert!((plan.bottleneck_cost - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trips() {
        let a = pts(&[0.0, 1.0, 2.0, 3.3]);
        let b = pts(&[3.3, 0.1, 0.9, 2.2]);
        let plan = bottleneck_match(&a, &b, 1.0).unwrap();
        let double = plan.inverse().inverse();
        assert_eq!(plan.perm, double.perm);
    }

    #[test]
    fn clusters_by_chained_proximity() {
        let labels = pts(&[0.0, 0.01, 5.0]);
        let part = cluster_by_radius(&labels, 0.1).unwrap();
        assert_eq!(part.clusters, vec![vec![0, 1], vec![2]]);
        assert!((part.centers[0][0].re - 0.005).abs() < 1e-15);
        assert!(part.separation(&labels) > 4.9);
    }

    #[test]
    fn chained_clusters_can_exceed_eta_diameter() {
        let labels = pts(&[0.0, 0.09, 0.18]);
        let part = cluster_by_radius(&labels, 0.1).unwrap();
        assert_eq!(part.clusters.len(), 1);
    }

    #[test]
    fn alignment_conjugates_projections() {
        let x = Matrix::from_fn(2, |i, j| {
            if i != j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let a = crate::dense::hermitian_eig(&Matrix::diag_re(&[-1.0, 1.0])).unwrap();
        let b = crate::dense::hermitian_eig(&x).unwrap();
        let plan = MatchingPlan {
            perm: vec![0, 1],
            bottleneck_cost: 0.0,
            eta: 1.0,
            feasible: true,
        };
        let w = frame_alignment_unitary(&a, &b, &plan).unwrap();
        assert!(w.unitary_deviation() < 1e-12);
        for i in 0..2 {
            let lhs = w.adjoint().mul(&a.projection(i)).mul(&w);
            assert!(lhs.sub(&b.projection(i)).op_norm() < 1e-10);
        }
    }

    #[test]
    fn hausdorff_of_shifted_projections() {
        let a = Matrix::diag_re(&[0.0, 1.0]);
        let b = Matrix::diag_re(&[0.1, 0.9]);
        let d = spectra_hausdorff(&a, &b).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn conjugate_pair_normalization_bounds_residual() {
        // Seeded instances: A = V diag(λ, λ̄) V*, candidate labels within ε/8.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let lam = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0));
            let h = Matrix::from_fn(2, |i, j| {
                C64::new(rng.gen_range(-1.0..1.0), (i as f64 - j as f64) * 0.3)
            })
            .hermitized();
            let hd = crate::dense::hermitian_eig(&h).unwrap();
            let v = &hd.frame;
            let a = v
                .mul(&Matrix::diag(&[lam, lam.conj()]))
                .mul(&v.adjoint());
            let eps = 0.08;
            let jitter = C64::new(eps / 16.0, -eps / 20.0);
            let candidate = [lam + jitter, lam.conj() - jitter];
            let normalized = conjugate_pair_normalize(&candidate).unwrap();
            let model = v
                .mul(&Matrix::diag(&normalized))
                .mul(&v.adjoint());
            assert!(model.sub(&a).op_norm() < eps);
        }
    }
}

//! Seeded example fields for tests, benchmarks, and the CLI `gen` command.
//!
//! Everything here is deterministic in its seed: the generators draw from a
//! counter-based stream cipher, so the same `(kind, size, seed)` triple
//! yields bit-identical fields on every platform. The constructions are
//! calibrated rather than arbitrary — label speeds stay below the advertised
//! Lipschitz constants, spectral gaps stay clear of the matching resolution,
//! and amplitudes are small enough that every family lands in the regime its
//! consumer is designed for. The deliberately obstructed fields (braid,
//! monopole, SU(2) identity) live in [`crate::obstruction::gen_example`];
//! this module covers the *solvable* seeded families plus the monopole band,
//! which the CLI exposes for certificate runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{hermitian_eig, Matrix, C64};
use crate::disk2d::BoundaryData;
use crate::error::Error;
use crate::field::frames::joint_decompose;
use crate::field::{
    build_domain, DomainKind, Generator, GeneratorField, GeneratorKind, TransportStep,
};
use crate::Result;

/// A Haar-plausible random unitary: the eigenframe of a random Hermitian
/// matrix with continuous entries. Not exactly Haar-distributed, but free of
/// preferred axes, which is all the examples need.
fn random_frame(n: usize, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    let h = Matrix::from_fn(n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .hermitized();
    Ok(hermitian_eig(&h)?.frame)
}

/// A random matrix of operator norm exactly `norm`.
fn random_direction(n: usize, norm: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let raw = Matrix::from_fn(n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    raw.scale_re(norm / raw.op_norm())
}

/// Commuting normal pair on `interval(m)`, Lipschitz ≤ 1, labels in the unit
/// disk.
///
/// Both generators share one fixed random eigenframe, so they commute
/// exactly at every vertex; their labels ride circles whose centers are
/// spread around the disk far enough apart that tracks never approach each
/// other. Track speed is capped at 0.9, which keeps the whole field inside
/// the unit Lipschitz budget with margin.
pub fn interval_random(m: usize, n: usize, seed: u64) -> Result<GeneratorField> {
    if n < 1 {
        return Err(Error::BadParam("need at least one track".into()));
    }
    let domain = build_domain(DomainKind::Interval { m })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = random_frame(n, &mut rng)?;

    // One orbit per track: center on a ring, small radius, bounded speed.
    let orbits = |rng: &mut ChaCha8Rng| -> Vec<(C64, f64, f64, f64)> {
        (0..n)
            .map(|i| {
                let spread = std::f64::consts::TAU * i as f64 / n as f64
                    + rng.gen_range(-0.2..0.2);
                let center = C64::from_polar(0.55, spread);
                let radius = rng.gen_range(0.05..0.15);
                let speed = rng.gen_range(1.0..(0.9 / radius));
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                (center, radius, speed, phase)
            })
            .collect()
    };
    let track_sets = [orbits(&mut rng), orbits(&mut rng)];

    let generators = track_sets
        .iter()
        .enumerate()
        .map(|(g, tracks)| {
            let samples = (0..domain.vertex_count())
                .map(|v| {
                    let t = domain.coords[v][0];
                    let labels: Vec<C64> = tracks
                        .iter()
                        .map(|&(c, r, w, p)| c + C64::from_polar(r, p + w * t))
                        .collect();
                    frame
                        .mul(&Matrix::diag(&labels))
                        .mul(&frame.adjoint())
                })
                .collect();
            Generator {
                name: format!("a{g}"),
                kind: GeneratorKind::Normal,
                samples,
                lipschitz_hint: Some(1.0),
            }
        })
        .collect();
    GeneratorField::new(domain, n, generators)
}

/// The eigenvalue-crossing field `diag(t, 1 − t)` on `interval(m)`: spectra
/// collide at `t = 1/2`, where only cluster matching can continue the
/// tracks.
pub fn crossing(m: usize) -> Result<GeneratorField> {
    let domain = build_domain(DomainKind::Interval { m })?;
    let samples = (0..domain.vertex_count())
        .map(|v| {
            let t = domain.coords[v][0];
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
}

/// `diag(e^{iθ}, 1)` on `cycle(m)`: one eigenvalue laps the circle while the
/// other stands still. The labels wind but never braid, so diagonalization
/// succeeds and the winding shows up in the certificate instead.
pub fn winding_cycle(m: usize) -> Result<GeneratorField> {
    let domain = build_domain(DomainKind::Cycle { m })?;
    let samples = (0..domain.vertex_count())
        .map(|v| {
            let theta = domain.angle(v);
            Matrix::diag(&[C64::from_polar(1.0, theta), C64::new(1.0, 0.0)])
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
}

/// Gapped seeded Hermitian field on `sphere2(k)`, unit-Lipschitz.
///
/// Integer-spaced diagonal plus small linear *and* quadratic drifts in the
/// ambient coordinates. The quadratic part matters: a field that is linear
/// in the coordinates varies, cell by cell, exactly like the chord lengths
/// of the mesh, and the first octahedron subdivision shortens chords only by
/// `1/√2 ≈ 0.707`. Curvature decays like the square of the cell size, which
/// pulls the residual contraction per refinement level strictly below that
/// geometric floor.
pub fn sphere_random(k: usize, n: usize, seed: u64) -> Result<GeneratorField> {
    if n < 2 {
        return Err(Error::BadParam("need at least two tracks".into()));
    }
    let domain = build_domain(DomainKind::Sphere2 { k })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff = |rng: &mut ChaCha8Rng| -> Matrix {
        Matrix::from_fn(n, |_, _| {
            C64::new(0.04 * rng.gen_range(-1.0..1.0), 0.03 * rng.gen_range(-1.0..1.0))
        })
        .hermitized()
    };
    let linear: Vec<Matrix> = (0..3).map(|_| coeff(&mut rng)).collect();
    let quad: Vec<Matrix> = (0..3).map(|_| coeff(&mut rng)).collect();
    let level: Vec<f64> = (0..n).map(|i| i as f64).collect();

    let samples = (0..domain.vertex_count())
        .map(|v| {
            let c = &domain.coords[v];
            let mut h = Matrix::diag_re(&level);
            for (axis, b) in linear.iter().enumerate() {
                h = h.add(&b.scale_re(c[axis]));
            }
            for (axis, q) in quad.iter().enumerate() {
                h = h.add(&q.scale_re(c[axis] * c[axis]));
            }
            h.hermitized()
        })
        .collect();
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
}

/// The magnetic monopole band Hamiltonian `k̂·σ` on `sphere2(k)`:
/// eigenvalues `±1` everywhere, eigenbundles of Chern number `∓1`. The
/// canonical certified-obstruction input for the surface driver.
pub fn monopole(k: usize) -> Result<GeneratorField> {
    let domain = build_domain(DomainKind::Sphere2 { k })?;
    let samples = (0..domain.vertex_count())
        .map(|v| {
            let c = &domain.coords[v];
            Matrix::from_rows(&[
                vec![C64::new(c[2], 0.0), C64::new(c[0], -c[1])],
                vec![C64::new(c[0], c[1]), C64::new(-c[2], 0.0)],
            ])
            .expect("2×2 rows")
        })
        .collect();
    GeneratorField::new(
        domain,
        2,
        vec![Generator {
            name: "h".into(),
            kind: GeneratorKind::Hermitian,
            samples,
            lipschitz_hint: Some(2.0),
        }],
    )
}

/// A δ-perturbed exactly-commuting normal pair in `M_n`, for exercising the
/// vertex snap. Returns the two perturbed matrices; the unperturbed pair
/// shares a random eigenframe with labels spread ≥ 0.4 apart in the unit
/// disk, so the snap has a healthy gap to work against.
pub fn snap_pair(n: usize, delta: f64, seed: u64) -> Result<Vec<Matrix>> {
    if n < 2 {
        return Err(Error::BadParam("need at least two tracks".into()));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::BadParam(format!("delta = {delta} must be ≥ 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frame = random_frame(n, &mut rng)?;
    let labels = |rng: &mut ChaCha8Rng| -> Vec<C64> {
        (0..n)
            .map(|i| {
                let spread = std::f64::consts::TAU * i as f64 / n as f64
                    + rng.gen_range(-0.15..0.15);
                C64::from_polar(rng.gen_range(0.6..0.8), spread)
            })
            .collect()
    };
    let exact: Vec<Matrix> = (0..2)
        .map(|_| {
            let l = labels(&mut rng);
            frame.mul(&Matrix::diag(&l)).mul(&frame.adjoint())
        })
        .collect();
    Ok(exact
        .into_iter()
        .map(|a| {
            if delta == 0.0 {
                a
            } else {
                a.add(&random_direction(n, delta, &mut rng))
            }
        })
        .collect())
}

/// A seeded closed boundary loop around one triangle, oscillating by at most
/// `oscillation` in both labels and frames, at unit label scale.
///
/// The loop starts from a fixed well-gapped decomposition, rotates the frame
/// by `e^{i·a(t)K}` for a random unit-norm Hermitian direction `K`, and
/// drifts each label along its own random direction, with the common profile
/// `a(t) = oscillation · sin(2πt)`. Endpoints are stored as bit copies of
/// the anchor so the loop closes exactly.
pub fn boundary_family(
    segments: usize,
    oscillation: f64,
    seed: u64,
) -> Result<BoundaryData> {
    if segments < 4 || segments % 2 != 0 {
        return Err(Error::BadParam(format!(
            "need an even number ≥ 4 of segments, got {segments}"
        )));
    }
    if !(oscillation >= 0.0) || !oscillation.is_finite() {
        return Err(Error::BadParam(format!(
            "oscillation = {oscillation} must be ≥ 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Matrix::diag_re(&[
        -0.8 + rng.gen_range(-0.05..0.05),
        0.1 + rng.gen_range(-0.05..0.05),
        0.9 + rng.gen_range(-0.05..0.05),
    ]);
    let anchor = joint_decompose(&[&base])?;
    let k = Matrix::from_fn(3, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
    .hermitized();
    let k = k.scale_re(1.0 / k.op_norm());
    let keig = hermitian_eig(&k)?;
    let dirs: Vec<C64> = (0..3)
        .map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();

    let samples: Vec<TransportStep> = (0..=segments)
        .map(|j| {
            if j == 0 || j == segments || oscillation == 0.0 {
                return TransportStep {
                    labels: anchor.labels.clone(),
                    frame: anchor.frame.clone(),
                };
            }
            let t = j as f64 / segments as f64;
            let a = oscillation * (std::f64::consts::TAU * t).sin();
            let d: Vec<C64> = keig
                .labels
                .iter()
                .map(|l| C64::from_polar(1.0, a * l.re))
                .collect();
            let rot = keig.frame.mul(&Matrix::diag(&d)).mul(&keig.frame.adjoint());
            TransportStep {
                labels: anchor
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(track, lab)| {
                        lab.iter().map(|z| z + 0.5 * a * dirs[track]).collect()
                    })
                    .collect(),
                frame: rot.mul(&anchor.frame),
            }
        })
        .collect();
    BoundaryData::new([0, 1, 2], 0, 0.5, samples)
}

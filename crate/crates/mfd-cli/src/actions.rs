//! The four subcommands, each producing a [`RunReport`] with its exit code.
//!
//! Exit code conventions, used consistently by every action:
//! `0` success within tolerance, `2` certified topological obstruction,
//! `3` tolerance not met after the refinement budget, `4` malformed or
//! unsupported input. The split between 2 and 3 is the whole point: an
//! obstruction certificate says refining the mesh cannot help, while exit 3
//! says it might.

use std::path::{Path, PathBuf};

use mfd_core::field::io;
use mfd_core::field::GeneratorKind;
use mfd_core::{
    chern_number, cycle_monodromy, degree3, det_winding, diagonalize_complex2,
    diagonalize_cycle, diagonalize_path, examples, gen_example, hermitian_eig,
    link_chern_certificates, refine_field, residual_report, suggest_eta, DiagOutcome,
    DiagonalFrameField, DomainKind, Error, ExampleKind, FunctionDictionary, GeneratorField,
    ObstructionReport,
};

use crate::report::{RunConfig, RunReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OBSTRUCTED: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Errors that more mesh can plausibly cure, and so participate in the
/// `diag` refinement loop. Everything else is a property of the input.
fn refinable(e: &Error) -> bool {
    matches!(
        e,
        Error::ToleranceNotMet { .. }
            | Error::MeshTooCoarse(_)
            | Error::GapCollapse { .. }
            | Error::OverlapCollapse { .. }
            | Error::NoConvergence { .. }
            | Error::OscillationTooLarge(_)
    )
}

fn achieved_of(e: &Error) -> Option<f64> {
    match e {
        Error::ToleranceNotMet { achieved, .. } => Some(*achieved),
        Error::NoConvergence { achieved, .. } => Some(*achieved),
        _ => None,
    }
}

fn invalid(mut report: RunReport, message: String) -> RunReport {
    report.outcome = "invalid-input".into();
    report.exit_code = EXIT_INVALID;
    report.notes.push(message);
    report
}

/// Build one of the example fields by CLI kind name.
fn build_example(
    kind: &str,
    m: usize,
    k: usize,
    n: usize,
    seed: u64,
) -> mfd_core::Result<GeneratorField> {
    match kind {
        "interval-random" => examples::interval_random(m, n, seed),
        "crossing" => examples::crossing(m),
        "winding" => examples::winding_cycle(m),
        "sphere-random" => examples::sphere_random(k, n, seed),
        "monopole" => examples::monopole(k),
        other => {
            let stock: ExampleKind = other.parse()?;
            let domain = match stock {
                ExampleKind::Braid => mfd_core::build_domain(DomainKind::Cycle { m })?,
                _ => mfd_core::build_domain(DomainKind::S3 { k })?,
            };
            gen_example(stock, &domain)
        }
    }
}

pub fn gen(
    kind: &str,
    m: usize,
    k: usize,
    n: usize,
    out: &Path,
    config: RunConfig,
) -> RunReport {
    let mut report = RunReport::new("gen", config);
    let field = match build_example(kind, m, k, n, report.config.seed) {
        Ok(f) => f,
        Err(e) => return invalid(report, e.to_string()),
    };
    report.describe_field(&field);
    if let Err(e) = io::save(out, &field) {
        return invalid(report, format!("writing {}: {e}", out.display()));
    }
    report.outcome = "success".into();
    report.notes.push(format!("{kind} field written to {}", out.display()));
    report
}

/// What one diagonalization attempt produced.
enum Step {
    Model(DiagonalFrameField),
    Certs(Vec<ObstructionReport>),
}

/// Obstruction analysis standing in for a driver on 3-complexes, where no
/// diagonalization is attempted: SU(2) degree for unitary generators,
/// link-sphere Chern certificates for Hermitian ones.
fn certificates_3d(
    field: &GeneratorField,
    only: Option<usize>,
) -> (Vec<ObstructionReport>, Vec<String>) {
    let mut certs = Vec::new();
    let mut notes = Vec::new();
    for (i, g) in field.generators.iter().enumerate() {
        if only.is_some_and(|want| want != i) {
            continue;
        }
        match g.kind {
            GeneratorKind::Unitary => match degree3(field, i) {
                Ok(d) => certs.push(ObstructionReport::degree3(
                    d,
                    format!("{} (generator {})", field.domain.kind, g.name),
                )),
                Err(e) => notes.push(format!("degree of generator {}: {e}", g.name)),
            },
            GeneratorKind::Hermitian => match link_chern_certificates(field, i) {
                Ok(more) => certs.extend(more),
                Err(e) => notes.push(format!("link bundles of generator {}: {e}", g.name)),
            },
            GeneratorKind::Normal => {
                notes.push(format!(
                    "generator {}: no 3-complex certificate for general normal fields",
                    g.name
                ));
            }
        }
    }
    (certs, notes)
}

/// Per-track Chern certificates over a closed surface, reading each
/// Hermitian generator's bands in ascending eigenvalue order.
fn certificates_surface(
    field: &GeneratorField,
    only: Option<usize>,
) -> (Vec<ObstructionReport>, Vec<String>) {
    let mut certs = Vec::new();
    let mut notes = Vec::new();
    for (gi, g) in field.generators.iter().enumerate() {
        if only.is_some_and(|want| want != gi) {
            continue;
        }
        if g.kind != GeneratorKind::Hermitian {
            notes.push(format!(
                "generator {}: band certificates need a Hermitian generator",
                g.name
            ));
            continue;
        }
        let decomps: Result<Vec<_>, _> = g.samples.iter().map(hermitian_eig).collect();
        let decomps = match decomps {
            Ok(d) => d,
            Err(e) => {
                notes.push(format!("bands of generator {}: {e}", g.name));
                continue;
            }
        };
        for track in 0..field.n {
            let projections: Vec<_> = decomps.iter().map(|d| d.projection(track)).collect();
            match chern_number(&projections, &field.domain) {
                Ok(c) => certs.push(ObstructionReport::chern(
                    c,
                    format!("band {track} of {} over {}", g.name, field.domain.kind),
                    true,
                )),
                Err(e) => notes.push(format!("band {track} of {}: {e}", g.name)),
            }
        }
    }
    (certs, notes)
}

/// On a cycle, the winding of `det(u)` for every unitary generator — the
/// companion certificate attached to monodromy reports and winding notes.
fn det_winding_certs(field: &GeneratorField) -> (Vec<ObstructionReport>, Vec<String>) {
    let mut certs = Vec::new();
    let mut notes = Vec::new();
    for (i, g) in field.generators.iter().enumerate() {
        if g.kind != GeneratorKind::Unitary {
            continue;
        }
        match det_winding(field, i) {
            Ok(w) => certs.push(ObstructionReport::det_winding(
                w,
                format!("det({}) around {}", g.name, field.domain.kind),
            )),
            Err(e) => notes.push(format!("det winding of {}: {e}", g.name)),
        }
    }
    (certs, notes)
}

fn attempt(field: &GeneratorField, eta: f64, eps: f64) -> mfd_core::Result<Step> {
    match field.domain.dimension() {
        1 if field.domain.is_cycle() => match diagonalize_cycle(field, eta, eps)? {
            DiagOutcome::Diagonalized(model) => Ok(Step::Model(model)),
            DiagOutcome::Obstructed(cert) => Ok(Step::Certs(vec![cert])),
        },
        1 => diagonalize_path(field, eta, eps).map(Step::Model),
        2 => match diagonalize_complex2(field, eta, eps)? {
            DiagOutcome::Diagonalized(model) => Ok(Step::Model(model)),
            DiagOutcome::Obstructed(cert) => Ok(Step::Certs(vec![cert])),
        },
        3 => {
            let (certs, _) = certificates_3d(field, None);
            if certs.iter().any(|c| !c.is_trivial()) {
                Ok(Step::Certs(certs))
            } else {
                Err(Error::BadParam(
                    "no diagonalization driver covers 3-complexes, and no obstruction \
                     was certified; use `obstruct` for the full certificate list"
                        .into(),
                ))
            }
        }
        d => Err(Error::BadParam(format!("unsupported carrier dimension {d}"))),
    }
}

pub fn diag(field_path: &Path, frames_out: Option<&PathBuf>, config: RunConfig) -> RunReport {
    let mut report = RunReport::new("diag", config);
    let field: GeneratorField = match io::load(field_path) {
        Ok(f) => f,
        Err(e) => return invalid(report, format!("loading {}: {e}", field_path.display())),
    };
    report.describe_field(&field);
    let dict = match FunctionDictionary::new(report.config.dict_degree, field.g()) {
        Ok(d) => d,
        Err(e) => return invalid(report, e.to_string()),
    };
    // Resolve η once, against the input mesh; refinement only shrinks
    // spectral motion, so the level-0 value stays safe at every level.
    let eta = match report.config.eta {
        Some(e) => e,
        None => match suggest_eta(&field) {
            Ok(e) => e,
            Err(e) => return invalid(report, e.to_string()),
        },
    };
    report.config.eta = Some(eta);

    let mut current = field;
    let mut level = 0u32;
    loop {
        match attempt(&current, eta, report.config.eps) {
            Ok(Step::Model(model)) => {
                report.refinements_used = level;
                match residual_report(&current, &model, &dict, report.config.eps) {
                    Ok(r) => {
                        report.achieved_residual = Some(r.max);
                        report.residual = Some(r);
                    }
                    Err(e) => return invalid(report, format!("measuring residual: {e}")),
                }
                if current.domain.is_cycle() {
                    if let Ok(m) = cycle_monodromy(&current, eta) {
                        report
                            .notes
                            .push(format!("label windings per orbit: {:?}", m.windings));
                    }
                    let (certs, notes) = det_winding_certs(&current);
                    report.certificates.extend(certs);
                    report.notes.extend(notes);
                }
                if let Some(path) = frames_out {
                    if let Err(e) = io::save(path, &model) {
                        return invalid(report, format!("writing {}: {e}", path.display()));
                    }
                    report.notes.push(format!("frames written to {}", path.display()));
                }
                report.outcome = "success".into();
                report.exit_code = EXIT_OK;
                return report;
            }
            Ok(Step::Certs(certs)) => {
                report.refinements_used = level;
                report.certificates = certs;
                if current.domain.is_cycle() {
                    let (more, notes) = det_winding_certs(&current);
                    report.certificates.extend(more);
                    report.notes.extend(notes);
                }
                report.outcome = "obstructed".into();
                report.exit_code = EXIT_OBSTRUCTED;
                return report;
            }
            Err(e) if refinable(&e) && level < report.config.max_refine => {
                report
                    .notes
                    .push(format!("level {level}: {e}; refining the mesh"));
                match refine_field(&current) {
                    Ok(f) => current = f,
                    Err(e) => return invalid(report, format!("refining: {e}")),
                }
                level += 1;
            }
            Err(e) => {
                report.refinements_used = level;
                report.achieved_residual = achieved_of(&e);
                report.notes.push(e.to_string());
                if refinable(&e) {
                    report.outcome = "tolerance-not-met".into();
                    report.exit_code = EXIT_TOLERANCE;
                } else {
                    report.outcome = "invalid-input".into();
                    report.exit_code = EXIT_INVALID;
                }
                return report;
            }
        }
    }
}

pub fn verify(field_path: &Path, frames_path: &Path, config: RunConfig) -> RunReport {
    let mut report = RunReport::new("verify", config);
    let field: GeneratorField = match io::load(field_path) {
        Ok(f) => f,
        Err(e) => return invalid(report, format!("loading {}: {e}", field_path.display())),
    };
    report.describe_field(&field);
    let frames: DiagonalFrameField = match io::load(frames_path) {
        Ok(f) => f,
        Err(e) => return invalid(report, format!("loading {}: {e}", frames_path.display())),
    };
    if let Err(e) = frames.validate(&field.domain) {
        return invalid(report, format!("frames do not fit the field: {e}"));
    }
    let dict = match FunctionDictionary::new(report.config.dict_degree, field.g()) {
        Ok(d) => d,
        Err(e) => return invalid(report, e.to_string()),
    };
    match residual_report(&field, &frames, &dict, report.config.eps) {
        Ok(r) => {
            report.achieved_residual = Some(r.max);
            let pass = r.verdict;
            report.residual = Some(r);
            if pass {
                report.outcome = "success".into();
                report.exit_code = EXIT_OK;
            } else {
                report.outcome = "tolerance-not-met".into();
                report.exit_code = EXIT_TOLERANCE;
            }
            report
        }
        Err(e) => invalid(report, format!("measuring residual: {e}")),
    }
}

pub fn obstruct(field_path: &Path, only: Option<usize>, config: RunConfig) -> RunReport {
    let mut report = RunReport::new("obstruct", config);
    let field: GeneratorField = match io::load(field_path) {
        Ok(f) => f,
        Err(e) => return invalid(report, format!("loading {}: {e}", field_path.display())),
    };
    report.describe_field(&field);
    if let Some(want) = only {
        if want >= field.g() {
            return invalid(report, format!("no generator {want} (field has {})", field.g()));
        }
    }
    let eta = match report.config.eta {
        Some(e) => e,
        None => match suggest_eta(&field) {
            Ok(e) => e,
            Err(e) => return invalid(report, e.to_string()),
        },
    };
    report.config.eta = Some(eta);

    match field.domain.dimension() {
        1 if field.domain.is_cycle() => {
            match cycle_monodromy(&field, eta) {
                Ok(m) => {
                    report
                        .notes
                        .push(format!("label windings per orbit: {:?}", m.windings));
                    report.certificates.push(ObstructionReport::monodromy(
                        m.perm,
                        field.domain.kind.to_string(),
                    ));
                }
                Err(e) => report.notes.push(format!("monodromy: {e}")),
            }
            let (certs, notes) = det_winding_certs(&field);
            report.certificates.extend(certs);
            report.notes.extend(notes);
        }
        1 => {
            report
                .notes
                .push("carrier has no closed loops: nothing to certify".into());
        }
        2 => {
            if field.domain.is_closed_surface() {
                let (certs, notes) = certificates_surface(&field, only);
                report.certificates.extend(certs);
                report.notes.extend(notes);
            } else {
                report
                    .notes
                    .push("surface is not closed: band bundles are all trivial".into());
            }
        }
        3 => {
            let (certs, notes) = certificates_3d(&field, only);
            report.certificates.extend(certs);
            report.notes.extend(notes);
        }
        d => return invalid(report, format!("unsupported carrier dimension {d}")),
    }

    if report.certificates.iter().any(|c| !c.is_trivial()) {
        report.outcome = "obstructed".into();
        report.exit_code = EXIT_OBSTRUCTED;
    } else {
        report.outcome = "success".into();
        report.exit_code = EXIT_OK;
    }
    report
}

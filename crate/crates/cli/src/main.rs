//! Command-line front end: load channels, gluings, states, and dilations
//! from JSON, run fringe simulations, gluing tomography, dilation synthesis,
//! visibility measures, and occupation extensions; emit CSV/JSON
//! deterministically (data on stdout, diagnostics on stderr).
//!
//! Exit codes: 0 success, 2 input/validation error, 3 mathematically
//! infeasible request, 1 internal error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use qglue_core::channels::{canonical_kraus, choi_checks, KrausChannel};
use qglue_core::dilation::{dilation_for_target_gluing, zero_visibility_dilation};
use qglue_core::error::Error;
use qglue_core::gluing::{extend_occupation, gluing_psd_gap, GluedChannel};
use qglue_core::interferometer::{
    coherent_fidelity, fringe, off_diagonal_element, uniform_chi_sweep, visibility_measures,
};
use qglue_core::io::{
    matrix_to_json, write_fringe_csv, ChannelFile, DilationFile, GluingFile, StateFile,
    TomographyReportFile,
};
use qglue_core::tomography::{recover_c_generalized, recover_c_standard, reconstruct_r};
use qglue_core::CMatrix;

#[derive(Parser)]
#[command(name = "qglue", version, about = "Two-path interferometry with glued channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonIo {
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the seeded variants of constructions (0 = deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance override for the command's main numerical gate.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the interferometer fringe and write the χ-sweep CSV.
    Fringe {
        /// Channel in path 1 (JSON).
        #[arg(long)]
        phi1: PathBuf,
        /// Channel in path 2 (JSON); identity when omitted.
        #[arg(long)]
        phi2: Option<PathBuf>,
        /// Gluing matrix (JSON).
        #[arg(long)]
        gluing: PathBuf,
        /// Internal probe state (JSON).
        #[arg(long)]
        state: PathBuf,
        /// Number of uniform χ samples on [0, 2π).
        #[arg(long, default_value_t = qglue_core::interferometer::DEFAULT_CHI_STEPS)]
        chi_steps: usize,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Reconstruct the gluing matrix from simulated interference data.
    Tomography {
        #[arg(long)]
        phi1: PathBuf,
        #[arg(long)]
        phi2: Option<PathBuf>,
        /// The gluing that drives the simulated experiment (JSON).
        #[arg(long)]
        gluing: PathBuf,
        /// Reconstruction route: the plain fringe data or the generalized
        /// interferometer.
        #[arg(long, value_parser = ["standard", "generalized"], default_value = "standard")]
        mode: String,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Construct a unitary dilation for a target gluing vector, or the
    /// zero-visibility dilation.
    Dilate {
        /// Channel to dilate (JSON); canonicalized on load.
        #[arg(long)]
        phi1: PathBuf,
        /// Target gluing vector as inline JSON, e.g. `[[0.5,0],[0,0]]`.
        #[arg(long, conflicts_with = "zero_visibility")]
        target: Option<String>,
        /// Ancilla dimension (defaults to the Kraus number).
        #[arg(long, requires = "target")]
        ancilla_dim: Option<usize>,
        /// Build the dilation with identically vanishing interference.
        #[arg(long)]
        zero_visibility: bool,
        /// Re-check all invariants on the finished dilation.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Visibility measures of a gluing (A and B need LSP factors; F_c never
    /// does).
    Measures {
        #[arg(long)]
        phi1: PathBuf,
        #[arg(long)]
        phi2: Option<PathBuf>,
        #[arg(long)]
        gluing: PathBuf,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Occupation-number extension of a channel against the vacuum.
    Extend {
        #[arg(long)]
        phi1: PathBuf,
        /// Coefficient vector c1 as inline JSON, e.g. `[[0.7,0],[0,0.1]]`.
        #[arg(long)]
        c1: String,
        #[command(flatten)]
        io: CommonIo,
    },
    /// Validate a JSON artifact and print its invariant diagnostics.
    Validate {
        /// Kind of artifact: channel | gluing | state | dilation.
        #[arg(value_parser = ["channel", "gluing", "state", "dilation"])]
        kind: String,
        file: PathBuf,
        #[command(flatten)]
        io: CommonIo,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = error_kind(&err);
            let diagnostic = json!({ "error": err.to_string(), "kind": kind });
            eprintln!("{diagnostic}");
            match err {
                Error::AncillaTooSmall { .. }
                | Error::NotMaximal { .. }
                | Error::NormTooLarge { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Dimension(_) => "dimension",
        Error::InvalidChannel(_) => "invalid_channel",
        Error::InvalidDensity(_) => "invalid_density",
        Error::ChannelsDiffer { .. } => "channels_differ",
        Error::NotLinearlyIndependent { .. } => "not_linearly_independent",
        Error::InvalidGluing { .. } => "invalid_gluing",
        Error::NormTooLarge { .. } => "norm_too_large",
        Error::NotUnitary(_) => "not_unitary",
        Error::NotLsp => "not_lsp",
        Error::NotOrthonormal(_) => "not_orthonormal",
        Error::NotCanonical(_) => "not_canonical",
        Error::InvariantViolation(_) => "invariant_violation",
        Error::NotARepresentation { .. } => "not_a_representation",
        Error::AncillaTooSmall { .. } => "ancilla_too_small",
        Error::NotMaximal { .. } => "not_maximal",
        Error::OracleInconsistent { .. } => "oracle_inconsistent",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fringe {
            phi1,
            phi2,
            gluing,
            state,
            chi_steps,
            io,
        } => cmd_fringe(&phi1, phi2.as_deref(), &gluing, &state, chi_steps, &io),
        Command::Tomography {
            phi1,
            phi2,
            gluing,
            mode,
            io,
        } => cmd_tomography(&phi1, phi2.as_deref(), &gluing, &mode, &io),
        Command::Dilate {
            phi1,
            target,
            ancilla_dim,
            zero_visibility,
            verify,
            io,
        } => cmd_dilate(
            &phi1,
            target.as_deref(),
            ancilla_dim,
            zero_visibility,
            verify,
            &io,
        ),
        Command::Measures {
            phi1,
            phi2,
            gluing,
            io,
        } => cmd_measures(&phi1, phi2.as_deref(), &gluing, &io),
        Command::Extend { phi1, c1, io } => cmd_extend(&phi1, &c1, &io),
        Command::Validate { kind, file, io } => cmd_validate(&kind, &file, &io),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_channel(path: &Path) -> Result<KrausChannel, Error> {
    read_json::<ChannelFile>(path)?.to_channel()
}

fn load_partner(phi2: Option<&Path>, phi1: &KrausChannel) -> Result<KrausChannel, Error> {
    match phi2 {
        Some(path) => load_channel(path),
        None => {
            if phi1.source_dim() != phi1.target_dim() {
                return Err(Error::Dimension(
                    "an implicit identity partner needs a square channel in path 1".into(),
                ));
            }
            Ok(KrausChannel::identity(phi1.source_dim()))
        }
    }
}

fn emit(io: &CommonIo, data: &[u8]) -> Result<(), Error> {
    match &io.out {
        Some(path) => {
            fs::write(path, data)?;
        }
        None => {
            std::io::stdout().write_all(data)?;
        }
    }
    Ok(())
}

fn emit_json(io: &CommonIo, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serialization: {e}")))?;
    text.push('\n');
    emit(io, text.as_bytes())
}

/// Parse an inline JSON array of [re, im] pairs into a complex vector.
fn parse_inline_vector(text: &str) -> Result<Vec<Complex64>, Error> {
    let pairs: Vec<(f64, f64)> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("inline vector: {e}")))?;
    Ok(pairs
        .into_iter()
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

fn build_glued(
    phi1_path: &Path,
    phi2_path: Option<&Path>,
    gluing_path: &Path,
) -> Result<GluedChannel, Error> {
    let phi1 = load_channel(phi1_path)?;
    let phi2 = load_partner(phi2_path, &phi1)?;
    let gluing = read_json::<GluingFile>(gluing_path)?.to_gluing()?;
    GluedChannel::new(phi1, phi2, gluing)
}

fn cmd_fringe(
    phi1: &Path,
    phi2: Option<&Path>,
    gluing: &Path,
    state: &Path,
    chi_steps: usize,
    io: &CommonIo,
) -> Result<(), Error> {
    let glued = build_glued(phi1, phi2, gluing)?;
    let rho = read_json::<StateFile>(state)?.to_state()?;
    let report = fringe(&glued, &rho, &uniform_chi_sweep(chi_steps))?;
    let mut buf = Vec::new();
    write_fringe_csv(&report, &mut buf)?;
    emit(io, &buf)
}

fn cmd_tomography(
    phi1: &Path,
    phi2: Option<&Path>,
    gluing: &Path,
    mode: &str,
    io: &CommonIo,
) -> Result<(), Error> {
    let glued = build_glued(phi1, phi2, gluing)?;
    // The reconstruction works against the canonical representations the
    // glued channel actually stores.
    let phi1 = glued.phi1().clone();
    let phi2 = glued.phi2().clone();
    let dim = glued.source_dim();
    let spatial = qglue_core::channels::DensityMatrix::pure(&[Complex64::ONE, Complex64::ONE])?;

    let result = match mode {
        "standard" => {
            let data: Vec<(qglue_core::channels::DensityMatrix, Complex64)> =
                qglue_core::tomography::state_basis(dim)
                    .into_iter()
                    .map(|rho| {
                        let total = qglue_core::channels::DensityMatrix::new(
                            spatial.matrix().kron(rho.matrix()),
                        )?;
                        let e = off_diagonal_element(glued.apply(&total)?.matrix());
                        Ok((rho, e))
                    })
                    .collect::<Result<_, Error>>()?;
            let rec = reconstruct_r(&data)?;
            recover_c_standard(&rec.r, &phi1, &phi2, io.tol.unwrap_or(1e-9))
        }
        "generalized" => {
            let oracle = |u: &CMatrix, rho: &qglue_core::channels::DensityMatrix| {
                let total = qglue_core::channels::DensityMatrix::new(
                    spatial.matrix().kron(rho.matrix()),
                )
                .expect("probe states are valid");
                let rho_f = glued.apply(&total).expect("glued evolution");
                let d = glued.target_dim();
                let mut path1_u = CMatrix::identity(2 * d);
                path1_u.set_block(0, 0, u);
                let steered = path1_u.matmul(rho_f.matrix()).matmul(&path1_u.adjoint());
                off_diagonal_element(&steered)
            };
            recover_c_generalized(oracle, &phi1, &phi2, io.tol.unwrap_or(1e-8))?
        }
        other => return Err(Error::Parse(format!("unknown mode {other}"))),
    };
    let report = TomographyReportFile::from_result(&result);
    let value = serde_json::to_value(&report).map_err(|e| Error::Parse(e.to_string()))?;
    emit_json(io, &value)
}

fn cmd_dilate(
    phi1: &Path,
    target: Option<&str>,
    ancilla_dim: Option<usize>,
    zero_visibility: bool,
    verify: bool,
    io: &CommonIo,
) -> Result<(), Error> {
    let loaded = load_channel(phi1)?;
    let (channel, k) = canonical_kraus(&loaded, 1e-9);
    let dilation = if zero_visibility {
        zero_visibility_dilation(&channel)?
    } else {
        let target_text = target.ok_or_else(|| {
            Error::Parse("either --target or --zero-visibility is required".into())
        })?;
        let c_target = parse_inline_vector(target_text)?;
        let ancilla = ancilla_dim.unwrap_or(k);
        let built = dilation_for_target_gluing(&channel, &c_target, ancilla)?;
        if io.seed != 0 {
            // A nonzero seed picks a different completion W from the same
            // equivalence class; the induced gluing is unchanged.
            let r = qglue_core::dilation::build_partial_isometry_r(
                built.channel(),
                built.a_tuple(),
                built.anchor(),
            )?;
            let w = qglue_core::dilation::complete_partial_isometry_w(
                &r,
                qglue_core::dilation::CompletionMode::Random { seed: io.seed },
            );
            qglue_core::dilation::assemble_dilation(
                built.channel(),
                built.a_tuple(),
                built.anchor(),
                &w,
            )?
        } else {
            built
        }
    };
    if verify {
        // Round trip through the decomposition re-checks every invariant.
        let rebuilt = qglue_core::dilation::dilation_from_unitary(
            dilation.unitary(),
            dilation.channel(),
            dilation.anchor(),
            io.tol.unwrap_or(1e-10),
        )?;
        let gap = rebuilt.unitary().max_abs_diff(dilation.unitary());
        if gap > io.tol.unwrap_or(1e-10) {
            return Err(Error::InvariantViolation(format!(
                "verification round trip deviates by {gap:.3e}"
            )));
        }
    }
    let file = DilationFile::from_dilation(&dilation);
    let value = serde_json::to_value(&file).map_err(|e| Error::Parse(e.to_string()))?;
    emit_json(io, &value)
}

fn cmd_measures(
    phi1: &Path,
    phi2: Option<&Path>,
    gluing: &Path,
    io: &CommonIo,
) -> Result<(), Error> {
    let glued = build_glued(phi1, phi2, gluing)?;
    let value = match visibility_measures(&glued) {
        Ok(m) => json!({ "A": m.a, "B": m.b, "F_c": m.f_c }),
        // A and B have closed forms only for LSP gluings; F_c survives.
        Err(Error::NotLsp) => json!({ "F_c": coherent_fidelity(&glued)? }),
        Err(other) => return Err(other),
    };
    emit_json(io, &value)
}

fn cmd_extend(phi1: &Path, c1_text: &str, io: &CommonIo) -> Result<(), Error> {
    let loaded = load_channel(phi1)?;
    let (channel, _) = canonical_kraus(&loaded, 1e-9);
    let c1 = parse_inline_vector(c1_text)?;
    let extended = extend_occupation(&channel, &c1)?;
    let file = ChannelFile::from_channel(&extended);
    let value = serde_json::to_value(&file).map_err(|e| Error::Parse(e.to_string()))?;
    emit_json(io, &value)
}

fn cmd_validate(kind: &str, file: &Path, io: &CommonIo) -> Result<(), Error> {
    let value = match kind {
        "channel" => {
            let ch = load_channel(file)?;
            let (choi_min, pt_dev) = choi_checks(&ch);
            json!({
                "valid": true,
                "kind": "channel",
                "source_dim": ch.source_dim(),
                "target_dim": ch.target_dim(),
                "kraus_count": ch.kraus_count(),
                "canonical": ch.is_canonical(1e-9),
                "choi_min_eigenvalue": choi_min,
                "choi_partial_trace_deviation": pt_dev,
            })
        }
        "gluing" => {
            let g = read_json::<GluingFile>(file)?.to_gluing()?;
            json!({
                "valid": true,
                "kind": "gluing",
                "rows": g.rows(),
                "cols": g.cols(),
                "lsp": g.is_lsp(),
                "psd_gap": gluing_psd_gap(g.matrix()),
            })
        }
        "state" => {
            let rho = read_json::<StateFile>(file)?.to_state()?;
            json!({
                "valid": true,
                "kind": "state",
                "dim": rho.dim(),
                "min_eigenvalue": rho.min_eigenvalue(),
            })
        }
        "dilation" => {
            let dil = read_json::<DilationFile>(file)?.to_dilation(true)?;
            let gluing: Vec<(f64, f64)> = qglue_core::dilation::gluing_of_dilation(&dil)
                .into_iter()
                .map(|z| (z.re, z.im))
                .collect();
            json!({
                "valid": true,
                "kind": "dilation",
                "internal_dim": dil.internal_dim(),
                "ancilla_dim": dil.ancilla_dim(),
                "kraus_number": dil.channel().kraus_count(),
                "gluing_vector": gluing,
                "conditional_operator": matrix_to_json(&dil.conditional_operator()),
            })
        }
        other => return Err(Error::Parse(format!("unknown kind {other}"))),
    };
    emit_json(io, &value)
}

//! JSON and CSV interchange formats.
//!
//! Complex numbers are `[re, im]` pairs, matrices are row-major nested
//! arrays. JSON numbers round-trip losslessly (shortest-form encoding);
//! the fringe CSV prints 17 significant digits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{DensityMatrix, KrausChannel};
use crate::dilation::{assemble_dilation, Dilation};
use crate::error::{Error, Result};
use crate::gluing::GluingMatrix;
use crate::interferometer::InterferenceReport;
use crate::linalg::CMatrix;
use crate::tomography::TomographyResult;

type JsonComplex = (f64, f64);
type JsonMatrix = Vec<Vec<JsonComplex>>;

fn complex_to_json(z: Complex64) -> JsonComplex {
    (z.re, z.im)
}

fn json_to_complex((re, im): JsonComplex) -> Complex64 {
    Complex64::new(re, im)
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| complex_to_json(m[(i, j)])).collect())
        .collect()
}

/// Parse a nested array into a matrix, rejecting ragged or empty data.
pub fn json_to_matrix(rows: &JsonMatrix) -> Result<CMatrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("non-rectangular matrix".into()));
    }
    Ok(CMatrix::from_fn(rows.len(), cols, |i, j| {
        json_to_complex(rows[i][j])
    }))
}

fn vector_to_json(v: &[Complex64]) -> Vec<JsonComplex> {
    v.iter().map(|&z| complex_to_json(z)).collect()
}

fn json_to_vector(v: &[JsonComplex]) -> Vec<Complex64> {
    v.iter().map(|&p| json_to_complex(p)).collect()
}

/// `{"source_dim": n, "target_dim": m, "kraus": [matrix, …]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelFile {
    pub source_dim: usize,
    pub target_dim: usize,
    pub kraus: Vec<JsonMatrix>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            source_dim: ch.source_dim(),
            target_dim: ch.target_dim(),
            kraus: ch.ops().iter().map(matrix_to_json).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        let ops = self
            .kraus
            .iter()
            .map(json_to_matrix)
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(self.source_dim, self.target_dim, ops)
    }
}

/// `{"C": matrix, "lsp": {"c1": […], "c2": […]}}` with `lsp` optional.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GluingFile {
    #[serde(rename = "C")]
    pub c: JsonMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsp: Option<LspFactorsFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LspFactorsFile {
    pub c1: Vec<JsonComplex>,
    pub c2: Vec<JsonComplex>,
}

impl GluingFile {
    pub fn from_gluing(g: &GluingMatrix) -> Self {
        Self {
            c: matrix_to_json(g.matrix()),
            lsp: g.lsp_factors().map(|(c1, c2)| LspFactorsFile {
                c1: vector_to_json(c1),
                c2: vector_to_json(c2),
            }),
        }
    }

    pub fn to_gluing(&self) -> Result<GluingMatrix> {
        let c = json_to_matrix(&self.c)?;
        match &self.lsp {
            Some(f) => {
                GluingMatrix::with_lsp_factors(c, json_to_vector(&f.c1), json_to_vector(&f.c2))
            }
            None => GluingMatrix::new(c),
        }
    }
}

/// `{"dim": n, "matrix": matrix}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: JsonMatrix,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        Self {
            dim: rho.dim(),
            matrix: matrix_to_json(rho.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        let m = json_to_matrix(&self.matrix)?;
        if m.rows() != self.dim {
            return Err(Error::Parse(format!(
                "declared dim {} vs matrix size {}",
                self.dim,
                m.rows()
            )));
        }
        DensityMatrix::new(m)
    }
}

/// Dilation on disk: the channel, ancilla data, and both partial isometries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DilationFile {
    pub channel: ChannelFile,
    pub ancilla_dim: usize,
    pub anchor: Vec<JsonComplex>,
    pub a_tuple: Vec<Vec<JsonComplex>>,
    #[serde(rename = "W")]
    pub w: JsonMatrix,
    #[serde(rename = "U")]
    pub u: JsonMatrix,
}

impl DilationFile {
    pub fn from_dilation(d: &Dilation) -> Self {
        Self {
            channel: ChannelFile::from_channel(d.channel()),
            ancilla_dim: d.ancilla_dim(),
            anchor: vector_to_json(d.anchor()),
            a_tuple: d.a_tuple().iter().map(|v| vector_to_json(v)).collect(),
            w: matrix_to_json(d.w()),
            u: matrix_to_json(d.unitary()),
        }
    }

    /// Rebuild the dilation. Construction re-checks the structural
    /// invariants; with `verify` the stored unitary is additionally compared
    /// against the reassembled one.
    pub fn to_dilation(&self, verify: bool) -> Result<Dilation> {
        let channel = self.channel.to_channel()?;
        if self.anchor.len() != self.ancilla_dim
            || self.a_tuple.iter().any(|v| v.len() != self.ancilla_dim)
        {
            return Err(Error::Parse(
                "ancilla data of inconsistent dimension".into(),
            ));
        }
        let anchor = json_to_vector(&self.anchor);
        let a_tuple: Vec<Vec<Complex64>> =
            self.a_tuple.iter().map(|v| json_to_vector(v)).collect();
        let w = json_to_matrix(&self.w)?;
        let dil = assemble_dilation(&channel, &a_tuple, &anchor, &w)?;
        if verify {
            let stored_u = json_to_matrix(&self.u)?;
            let dev = dil.unitary().max_abs_diff(&stored_u);
            if dev > 1e-10 {
                return Err(Error::InvariantViolation(format!(
                    "stored unitary deviates from W + R by {dev:.3e}"
                )));
            }
        }
        Ok(dil)
    }
}

/// `{"C_hat": …, "identifiable": …, "rank": …, "residual": …, "null_dirs": […]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TomographyReportFile {
    #[serde(rename = "C_hat")]
    pub c_hat: JsonMatrix,
    pub identifiable: bool,
    pub rank: usize,
    pub residual: f64,
    pub null_dirs: Vec<JsonMatrix>,
}

impl TomographyReportFile {
    pub fn from_result(r: &TomographyResult) -> Self {
        Self {
            c_hat: matrix_to_json(&r.c_hat),
            identifiable: r.identifiable,
            rank: r.identifiable_subspace_rank,
            residual: r.residual,
            null_dirs: r
                .undetermined_directions
                .iter()
                .map(matrix_to_json)
                .collect(),
        }
    }
}

/// Fringe CSV: `chi,p1_direct,p1_formula,absE,argE`, 17 significant digits.
pub fn write_fringe_csv(report: &InterferenceReport, out: &mut impl std::io::Write) -> Result<()> {
    let rec = report
        .records
        .first()
        .ok_or_else(|| Error::Dimension("report carries no probe state".into()))?;
    writeln!(out, "chi,p1_direct,p1_formula,absE,argE")?;
    for sample in &report.chi_sweep {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            sample.chi, sample.p1_direct, sample.p1_formula, rec.abs_e, rec.arg_e
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{canonical_kraus, random_channel, random_density_matrix};
    use crate::dilation::random_dilation;
    use crate::gluing::{random_gluing_matrix, random_lsp_gluing, GluedChannel};
    use crate::interferometer::{fringe, uniform_chi_sweep};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn channel_file_roundtrip() {
        let ch = random_channel(2, 3, 2, 7);
        let text = serde_json::to_string(&ChannelFile::from_channel(&ch)).unwrap();
        let back: ChannelFile = serde_json::from_str(&text).unwrap();
        let ch2 = back.to_channel().unwrap();
        assert_eq!(ch, ch2, "JSON round trip is lossless");
    }

    #[test]
    fn ragged_matrices_rejected() {
        let json =
            r#"{"source_dim":2,"target_dim":2,"kraus":[[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0]]]]}"#;
        let parsed: ChannelFile = serde_json::from_str(json).unwrap();
        assert!(matches!(parsed.to_channel(), Err(Error::Parse(_))));
    }

    #[test]
    fn gluing_file_roundtrip_with_and_without_lsp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for g in [
            random_gluing_matrix(2, 3, &mut rng),
            random_lsp_gluing(2, 3, &mut rng),
        ] {
            let text = serde_json::to_string(&GluingFile::from_gluing(&g)).unwrap();
            let back: GluingFile = serde_json::from_str(&text).unwrap();
            let g2 = back.to_gluing().unwrap();
            assert!(g.matrix().max_abs_diff(g2.matrix()) < 1e-15);
            assert_eq!(g.is_lsp(), g2.is_lsp());
        }
    }

    #[test]
    fn state_file_roundtrip_and_dim_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density_matrix(3, &mut rng);
        let text = serde_json::to_string(&StateFile::from_state(&rho)).unwrap();
        let back: StateFile = serde_json::from_str(&text).unwrap();
        assert!(back.to_state().unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let mut wrong = StateFile::from_state(&rho);
        wrong.dim = 2;
        assert!(wrong.to_state().is_err());
    }

    #[test]
    fn dilation_file_roundtrip_verified() {
        let (ch, _) = canonical_kraus(&random_channel(2, 2, 2, 17), 1e-9);
        let dil = random_dilation(&ch, 3, 19).unwrap();
        let text = serde_json::to_string(&DilationFile::from_dilation(&dil)).unwrap();
        let back: DilationFile = serde_json::from_str(&text).unwrap();
        let dil2 = back.to_dilation(true).unwrap();
        assert!(dil.unitary().max_abs_diff(dil2.unitary()) < 1e-12);
        // Tampered unitary is caught by the verify flag.
        let mut broken = back.clone();
        broken.u[0][0] = (42.0, 0.0);
        assert!(broken.to_dilation(true).is_err());
    }

    #[test]
    fn fringe_csv_shape_and_header() {
        let glued = GluedChannel::new(
            KrausChannel::identity(2),
            KrausChannel::identity(2),
            crate::gluing::lsp_gluing(&[Complex64::ONE], &[Complex64::ONE]).unwrap(),
        )
        .unwrap();
        let report = fringe(
            &glued,
            &DensityMatrix::maximally_mixed(2),
            &uniform_chi_sweep(4),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_fringe_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "chi,p1_direct,p1_formula,absE,argE");
        assert_eq!(lines.len(), 5);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 5);
        let p1: f64 = first[1].parse().unwrap();
        assert!(
            (p1 - 1.0).abs() < 1e-12,
            "χ = 0 peak of the unit-visibility fringe"
        );
    }
}

//! The three-stage two-path interferometer.
//!
//! Stage 1 is a 50-50 beam splitter preparing (|1⟩+|2⟩)/√2 ⊗ ρ_I, stage 2 a
//! glued pair of channels acting on the two paths, stage 3 a variable phase
//! shifter followed by a second beam splitter and detection in path 1. The
//! detection probability follows the fringe law
//!
//!   p₁(χ) = ½ + |E|·cos(arg E − χ),   E = ⟨1|Tr_I(ρ_f)|2⟩ = ½·Tr(R·ρ_I),
//!
//! with the interference operator R = Σ C_{nm}·W_m†·V_n.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::{DensityMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::gluing::GluedChannel;
use crate::linalg::{operator_norm, random_unit_vector, vnorm, CMatrix};
use crate::tol;

/// Default number of phase-shifter samples on [0, 2π).
pub const DEFAULT_CHI_STEPS: usize = 64;

/// Uniform sweep of χ values on [0, 2π).
pub fn uniform_chi_sweep(steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / steps as f64)
        .collect()
}

/// Beam splitter on the two-path space: the spatial action
/// (|1⟩⟨1| + |1⟩⟨2| − |2⟩⟨1| + |2⟩⟨2|)/√2 tensored with the identity on the
/// internal space.
pub fn beam_splitter(internal_dim: usize) -> CMatrix {
    let inv = 1.0 / 2f64.sqrt();
    let spatial = CMatrix::from_rows(&[
        vec![Complex64::new(inv, 0.0), Complex64::new(inv, 0.0)],
        vec![Complex64::new(-inv, 0.0), Complex64::new(inv, 0.0)],
    ])
    .unwrap();
    spatial.kron(&CMatrix::identity(internal_dim))
}

/// Phase shifter |1⟩⟨1| + e^{iχ}|2⟩⟨2| on the two-path space.
pub fn phase_shifter(internal_dim: usize, chi: f64) -> CMatrix {
    let spatial = CMatrix::from_rows(&[
        vec![Complex64::ONE, Complex64::ZERO],
        vec![Complex64::ZERO, Complex64::from_polar(1.0, chi)],
    ])
    .unwrap();
    spatial.kron(&CMatrix::identity(internal_dim))
}

/// Probability of detecting the particle in path 1 after the phase shifter
/// and the second beam splitter, evaluated on the full two-path state.
pub fn detection_probability(rho_f: &DensityMatrix, chi: f64) -> Result<f64> {
    let total = rho_f.dim();
    if !total.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "two-path state must have even dimension, got {total}"
        )));
    }
    let d = total / 2;
    let u = beam_splitter(d).matmul(&phase_shifter(d, chi));
    let evolved = u.matmul(rho_f.matrix()).matmul(&u.adjoint());
    // Tr((|1⟩⟨1|⊗I)·evolved) = sum of the first d diagonal entries.
    Ok((0..d).map(|i| evolved[(i, i)].re).sum())
}

/// Off-diagonal element E = ⟨1|Tr_I(ρ)|2⟩ of a two-path matrix.
pub fn off_diagonal_element(rho: &CMatrix) -> Complex64 {
    assert!(rho.is_square() && rho.rows().is_multiple_of(2));
    let d = rho.rows() / 2;
    (0..d).map(|i| rho[(i, d + i)]).sum()
}

/// Interference operator R = Σ_{nm} C_{nm}·W_m†·V_n on the source space.
/// The channels must be the (canonical) representations C refers to.
pub fn interference_operator(
    phi1: &KrausChannel,
    phi2: &KrausChannel,
    c: &CMatrix,
) -> Result<CMatrix> {
    if c.rows() != phi1.kraus_count() || c.cols() != phi2.kraus_count() {
        return Err(Error::Dimension(format!(
            "gluing matrix {}x{} vs Kraus counts {}x{}",
            c.rows(),
            c.cols(),
            phi1.kraus_count(),
            phi2.kraus_count()
        )));
    }
    if phi1.source_dim() != phi2.source_dim() || phi1.target_dim() != phi2.target_dim() {
        return Err(Error::Dimension(
            "channels act between different spaces".into(),
        ));
    }
    let s = phi1.source_dim();
    let mut r = CMatrix::zeros(s, s);
    for (n, v) in phi1.ops().iter().enumerate() {
        for (m, w) in phi2.ops().iter().enumerate() {
            if c[(n, m)] == Complex64::ZERO {
                continue;
            }
            r = &r + &w.adjoint().matmul(v).scaled(c[(n, m)]);
        }
    }
    Ok(r)
}

/// E(ρ) = ½·Tr(R·ρ).
pub fn interference_value(r: &CMatrix, rho: &DensityMatrix) -> Complex64 {
    0.5 * r.matmul(rho.matrix()).trace()
}

/// One χ sample of a fringe: the detection probability computed through the
/// full pipeline and through the fringe law.
#[derive(Clone, Copy, Debug)]
pub struct FringeSample {
    pub chi: f64,
    pub p1_direct: f64,
    pub p1_formula: f64,
}

/// Interference data for one or more probe states.
#[derive(Clone, Debug)]
pub struct InterferenceReport {
    /// Interference operator of the gluing.
    pub r: CMatrix,
    pub records: Vec<StateRecord>,
    pub chi_sweep: Vec<FringeSample>,
}

#[derive(Clone, Debug)]
pub struct StateRecord {
    pub rho: DensityMatrix,
    pub e: Complex64,
    pub abs_e: f64,
    pub arg_e: f64,
}

impl InterferenceReport {
    /// Largest pointwise gap between the pipeline and the fringe law.
    pub fn max_fringe_deviation(&self) -> f64 {
        self.chi_sweep
            .iter()
            .map(|s| (s.p1_direct - s.p1_formula).abs())
            .fold(0.0, f64::max)
    }
}

/// Run the full interferometer on ρ_i = |ψ⟩⟨ψ|⊗ρ_I with
/// |ψ⟩ = (|1⟩+|2⟩)/√2 and record p₁ at each χ both through the pipeline and
/// through ½ + |E|·cos(arg E − χ).
pub fn fringe(
    glued: &GluedChannel,
    rho_internal: &DensityMatrix,
    chis: &[f64],
) -> Result<InterferenceReport> {
    if rho_internal.dim() != glued.source_dim() {
        return Err(Error::Dimension(format!(
            "probe state dim {} vs channel source dim {}",
            rho_internal.dim(),
            glued.source_dim()
        )));
    }
    let spatial = DensityMatrix::pure(&[Complex64::ONE, Complex64::ONE])?;
    let rho_i = DensityMatrix::new(spatial.matrix().kron(rho_internal.matrix()))?;
    let rho_f = glued.apply(&rho_i)?;

    let r = interference_operator(glued.phi1(), glued.phi2(), glued.gluing().matrix())?;
    let e = off_diagonal_element(rho_f.matrix());
    let (abs_e, arg_e) = (e.norm(), e.arg());

    let chi_sweep = chis
        .iter()
        .map(|&chi| {
            let p1_direct = detection_probability(&rho_f, chi)?;
            let p1_formula = 0.5 + abs_e * (arg_e - chi).cos();
            Ok(FringeSample {
                chi,
                p1_direct,
                p1_formula,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(InterferenceReport {
        r,
        records: vec![StateRecord {
            rho: rho_internal.clone(),
            e,
            abs_e,
            arg_e,
        }],
        chi_sweep,
    })
}

fn ensure_unitary(u: &CMatrix, dim: usize) -> Result<()> {
    if !u.is_square() || u.rows() != dim {
        return Err(Error::Dimension(format!(
            "expected a {dim}x{dim} unitary, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let dev = u.adjoint().matmul(u).max_abs_diff(&CMatrix::identity(dim));
    if dev > tol::UNITARY {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// Generalized interference function G(U, ρ) = ½·Σ C_{nm}·Tr(W_m†·U·V_n·ρ),
/// the fringe functional when a variable unitary U acts on path 1 after the
/// devices. G(I, ρ) = E(ρ).
pub fn generalized_interference(
    phi1: &KrausChannel,
    phi2: &KrausChannel,
    c: &CMatrix,
    u: &CMatrix,
    rho: &DensityMatrix,
) -> Result<Complex64> {
    ensure_unitary(u, phi1.target_dim())?;
    let mut g = Complex64::ZERO;
    for (n, v) in phi1.ops().iter().enumerate() {
        let uv = u.matmul(v);
        for (m, w) in phi2.ops().iter().enumerate() {
            if c[(n, m)] == Complex64::ZERO {
                continue;
            }
            g += c[(n, m)] * w.adjoint().matmul(&uv).matmul(rho.matrix()).trace();
        }
    }
    Ok(0.5 * g)
}

/// Interference functional with variable unitaries in path 1 both before
/// (Ū, on the source space) and after (U, on the target space) the devices:
/// Σ C_{nm}·Tr(W_m†·U·V_n·Ū·ρ), halved when `half_factor` is set.
pub fn steered_interference(
    phi1: &KrausChannel,
    phi2: &KrausChannel,
    c: &CMatrix,
    u: &CMatrix,
    ubar: &CMatrix,
    rho: &DensityMatrix,
    half_factor: bool,
) -> Result<Complex64> {
    ensure_unitary(u, phi1.target_dim())?;
    ensure_unitary(ubar, phi1.source_dim())?;
    let mut g = Complex64::ZERO;
    for (n, v) in phi1.ops().iter().enumerate() {
        let uvu = u.matmul(v).matmul(ubar);
        for (m, w) in phi2.ops().iter().enumerate() {
            if c[(n, m)] == Complex64::ZERO {
                continue;
            }
            g += c[(n, m)] * w.adjoint().matmul(&uvu).matmul(rho.matrix()).trace();
        }
    }
    Ok(if half_factor { 0.5 * g } else { g })
}

/// Visibility measures of an LSP gluing.
#[derive(Clone, Copy, Debug)]
pub struct VisibilityMeasures {
    /// ½·sup_ψ ‖V|ψ⟩‖·‖W|ψ⟩‖ over unit vectors (numerical supremum).
    pub a: f64,
    /// ½·‖V‖·‖W‖ from the largest singular values.
    pub b: f64,
    /// 2·|E(I/d)|, the fringe visibility for the maximally mixed input.
    pub f_c: f64,
}

/// Fringe visibility for the maximally mixed probe, 2·|E(I/d)|; defined for
/// every gluing.
pub fn coherent_fidelity(glued: &GluedChannel) -> Result<f64> {
    let r = interference_operator(glued.phi1(), glued.phi2(), glued.gluing().matrix())?;
    let d = glued.source_dim();
    Ok(2.0 * interference_value(&r, &DensityMatrix::maximally_mixed(d)).norm())
}

/// Compute (A, B, F_c) for an LSP gluing; errors with `NotLsp` when the
/// gluing carries no rank-one factorization (F_c alone is available through
/// [`coherent_fidelity`]).
pub fn visibility_measures(glued: &GluedChannel) -> Result<VisibilityMeasures> {
    let (v, w) = match (glued.v_op(), glued.w_op()) {
        (Some(v), Some(w)) => (v, w),
        _ => return Err(Error::NotLsp),
    };
    let b = 0.5 * operator_norm(v) * operator_norm(w);
    let a = 0.5 * sup_product_norm(v, w);
    let f_c = coherent_fidelity(glued)?;
    Ok(VisibilityMeasures { a, b, f_c })
}

/// sup over unit ψ of ‖V ψ‖·‖W ψ‖ by multi-start projected gradient ascent
/// on f(ψ) = (ψ†V†Vψ)·(ψ†W†Wψ). Starts are the basis vectors, the uniform
/// superposition, and seeded random vectors, so the result is deterministic.
pub fn sup_product_norm(v: &CMatrix, w: &CMatrix) -> f64 {
    let d = v.cols();
    let a_mat = v.adjoint().matmul(v);
    let b_mat = w.adjoint().matmul(w);

    let mut starts: Vec<Vec<Complex64>> = Vec::new();
    for i in 0..d {
        let mut e = vec![Complex64::ZERO; d];
        e[i] = Complex64::ONE;
        starts.push(e);
    }
    let inv = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    starts.push(vec![inv; d]);
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    for _ in 0..8 {
        starts.push(random_unit_vector(d, &mut rng));
    }

    let objective = |psi: &[Complex64]| -> f64 {
        let qa = quad_form(&a_mat, psi);
        let qb = quad_form(&b_mat, psi);
        qa * qb
    };

    let mut best = 0.0_f64;
    for start in starts {
        let mut psi = start;
        let mut value = objective(&psi);
        let mut step = 0.5;
        for _ in 0..500 {
            let qa = quad_form(&a_mat, &psi);
            let qb = quad_form(&b_mat, &psi);
            let grad: Vec<Complex64> = {
                let av = a_mat.matvec(&psi);
                let bv = b_mat.matvec(&psi);
                av.iter()
                    .zip(&bv)
                    .map(|(x, y)| 2.0 * (qb * x + qa * y))
                    .collect()
            };
            // Project onto the tangent space of the unit sphere.
            let overlap: Complex64 = psi.iter().zip(&grad).map(|(p, g)| p.conj() * g).sum();
            let tangent: Vec<Complex64> = grad
                .iter()
                .zip(&psi)
                .map(|(g, p)| g - overlap * p)
                .collect();
            let tnorm = vnorm(&tangent);
            if tnorm <= 1e-13 * (1.0 + value.abs()) {
                break;
            }
            let mut advanced = false;
            while step > 1e-16 {
                let cand: Vec<Complex64> = psi
                    .iter()
                    .zip(&tangent)
                    .map(|(p, t)| p + Complex64::new(step, 0.0) * t)
                    .collect();
                let norm = vnorm(&cand);
                let cand: Vec<Complex64> = cand.into_iter().map(|z| z / norm).collect();
                let cand_value = objective(&cand);
                if cand_value > value + 1e-18 {
                    psi = cand;
                    value = cand_value;
                    step *= 1.5;
                    advanced = true;
                    break;
                }
                step *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        best = best.max(value);
    }
    best.sqrt()
}

fn quad_form(m: &CMatrix, psi: &[Complex64]) -> f64 {
    let mv = m.matvec(psi);
    psi.iter().zip(&mv).map(|(p, q)| (p.conj() * q).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{
        canonical_kraus, collapse_channel, dephasing_channel, random_channel,
        random_density_matrix,
    };
    use crate::gluing::{
        lsp_gluing, random_gluing_matrix, random_lsp_gluing, GluedChannel, GluingMatrix,
    };
    use crate::linalg::least_squares;
    use crate::tomography::unitary_basis;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_by_one(z: Complex64) -> CMatrix {
        CMatrix::from_rows(&[vec![z]]).unwrap()
    }

    fn identity_pair_glued(coupling: Complex64) -> GluedChannel {
        GluedChannel::new(
            KrausChannel::identity(2),
            KrausChannel::identity(2),
            GluingMatrix::new(one_by_one(coupling)).unwrap(),
        )
        .unwrap()
    }

    fn beam_split_input(rho_internal: &DensityMatrix) -> DensityMatrix {
        let spatial = DensityMatrix::pure(&[Complex64::ONE, Complex64::ONE]).unwrap();
        DensityMatrix::new(spatial.matrix().kron(rho_internal.matrix())).unwrap()
    }

    #[test]
    fn detection_probability_extremes() {
        let glued = identity_pair_glued(Complex64::ONE);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho_i = random_density_matrix(2, &mut rng);
        let rho_f = glued.apply(&beam_split_input(&rho_i)).unwrap();
        assert!((detection_probability(&rho_f, 0.0).unwrap() - 1.0).abs() < 1e-13);
        assert!(detection_probability(&rho_f, PI).unwrap().abs() < 1e-13);
    }

    #[test]
    fn detection_probability_flat_for_blocked_paths() {
        let glued = identity_pair_glued(Complex64::ZERO);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho_i = random_density_matrix(2, &mut rng);
        let rho_f = glued.apply(&beam_split_input(&rho_i)).unwrap();
        for chi in uniform_chi_sweep(8) {
            assert!((detection_probability(&rho_f, chi).unwrap() - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn interference_operator_identity_pair() {
        let (r_mag, phi) = (0.6, 0.9);
        let coupling = Complex64::from_polar(r_mag, phi);
        let r = interference_operator(
            &KrausChannel::identity(2),
            &KrausChannel::identity(2),
            &one_by_one(coupling),
        )
        .unwrap();
        assert!(r.max_abs_diff(&CMatrix::identity(2).scaled(coupling)) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density_matrix(2, &mut rng);
        let e = interference_value(&r, &rho);
        assert!((e - 0.5 * coupling).norm() < 1e-13);
    }

    #[test]
    fn orthogonal_collapse_channels_have_zero_r() {
        let phi1 = collapse_channel(&[Complex64::ONE, Complex64::ZERO]).unwrap();
        let phi2 = collapse_channel(&[Complex64::ZERO, Complex64::ONE]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_gluing_matrix(2, 2, &mut rng);
        let r = interference_operator(&phi1, &phi2, g.matrix()).unwrap();
        assert!(r.max_abs() < 1e-14);
    }

    /// E from the interference operator equals the off-diagonal element of
    /// the full glued output for arbitrary probe states.
    #[test]
    fn interference_operator_matches_full_pipeline() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (phi1, n) = canonical_kraus(&random_channel(3, 3, 2, 811), 1e-9);
        let (phi2, m) = canonical_kraus(&random_channel(3, 3, 3, 812), 1e-9);
        let gluing = random_gluing_matrix(n, m, &mut rng);
        let r = interference_operator(&phi1, &phi2, gluing.matrix()).unwrap();
        let glued = GluedChannel::new(phi1, phi2, gluing).unwrap();
        for _ in 0..20 {
            let rho_i = random_density_matrix(3, &mut rng);
            let rho_f = glued.apply(&beam_split_input(&rho_i)).unwrap();
            let e_pipeline = off_diagonal_element(rho_f.matrix());
            let e_formula = interference_value(&r, &rho_i);
            assert!((e_pipeline - e_formula).norm() < 1e-13);
        }
    }

    #[test]
    fn fringe_identity_gluing_has_unit_visibility() {
        let glued = identity_pair_glued(Complex64::ONE);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density_matrix(2, &mut rng);
        let report = fringe(&glued, &rho, &uniform_chi_sweep(16)).unwrap();
        let rec = &report.records[0];
        assert!((2.0 * rec.abs_e - 1.0).abs() < 1e-13);
        assert!(rec.arg_e.abs() < 1e-13);
        assert!(report.max_fringe_deviation() < 1e-12);
    }

    #[test]
    fn fringe_phase_gluing_peaks_at_phi0() {
        let phi0 = 2.0 * PI / 3.0;
        let glued = identity_pair_glued(Complex64::from_polar(1.0, phi0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density_matrix(2, &mut rng);
        let report = fringe(&glued, &rho, &[phi0]).unwrap();
        assert!((report.chi_sweep[0].p1_direct - 1.0).abs() < 1e-12);
        assert!((report.records[0].arg_e - phi0).abs() < 1e-12);
    }

    #[test]
    fn fringe_law_matches_pipeline_for_random_lsp_gluings() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let chis = uniform_chi_sweep(64);
        for seed in 0..5u64 {
            let (phi1, n) = canonical_kraus(&random_channel(2, 2, 2, 900 + seed), 1e-9);
            let (phi2, m) = canonical_kraus(&random_channel(2, 2, 2, 950 + seed), 1e-9);
            let gluing = random_lsp_gluing(n, m, &mut rng);
            let glued = GluedChannel::new(phi1, phi2, gluing).unwrap();
            let rho = random_density_matrix(2, &mut rng);
            let report = fringe(&glued, &rho, &chis).unwrap();
            assert!(report.max_fringe_deviation() <= 1e-12);
        }
    }

    #[test]
    fn generalized_reduces_to_e_at_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (phi1, n) = canonical_kraus(&random_channel(2, 2, 2, 1001), 1e-9);
        let (phi2, m) = canonical_kraus(&random_channel(2, 2, 2, 1002), 1e-9);
        let gluing = random_gluing_matrix(n, m, &mut rng);
        let rho = random_density_matrix(2, &mut rng);
        let g = generalized_interference(&phi1, &phi2, gluing.matrix(), &CMatrix::identity(2), &rho)
            .unwrap();
        let r = interference_operator(&phi1, &phi2, gluing.matrix()).unwrap();
        assert!((g - interference_value(&r, &rho)).norm() < 1e-14);
    }

    #[test]
    fn generalized_sees_orthogonal_collapse_gluings() {
        let phi1 = collapse_channel(&[Complex64::ONE, Complex64::ZERO]).unwrap();
        let phi2 = collapse_channel(&[Complex64::ZERO, Complex64::ONE]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let gluing = random_gluing_matrix(2, 2, &mut rng);
        let rho = random_density_matrix(2, &mut rng);
        // U = X maps the first collapse target onto the second.
        let x = &unitary_basis(2)[2];
        let g = generalized_interference(&phi1, &phi2, gluing.matrix(), x, &rho).unwrap();
        assert!(g.norm() > 1e-3, "generalized setup must see the gluing");
        let r = interference_operator(&phi1, &phi2, gluing.matrix()).unwrap();
        assert!(r.max_abs() < 1e-14, "standard setup is blind here");
    }

    /// Pipeline oracle: apply the glued channel, then a path-1 unitary, then
    /// read off the off-diagonal element.
    #[test]
    fn generalized_matches_pipeline_with_inserted_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (phi1, n) = canonical_kraus(&random_channel(2, 2, 2, 1101), 1e-9);
        let (phi2, m) = canonical_kraus(&random_channel(2, 2, 3, 1102), 1e-9);
        let gluing = random_gluing_matrix(n, m, &mut rng);
        let glued = GluedChannel::new(phi1.clone(), phi2.clone(), gluing.clone()).unwrap();
        for _ in 0..5 {
            let u = crate::linalg::random_unitary(2, &mut rng);
            let rho = random_density_matrix(2, &mut rng);
            let rho_f = glued.apply(&beam_split_input(&rho)).unwrap();
            let mut path1_u = CMatrix::identity(4);
            path1_u.set_block(0, 0, &u);
            let steered = path1_u.matmul(rho_f.matrix()).matmul(&path1_u.adjoint());
            let e_pipeline = off_diagonal_element(&steered);
            let g = generalized_interference(&phi1, &phi2, gluing.matrix(), &u, &rho).unwrap();
            assert!((g - e_pipeline).norm() < 1e-12);
        }
    }

    #[test]
    fn steered_identity_case_reduces_to_e() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (phi1, n) = canonical_kraus(&random_channel(2, 2, 2, 1201), 1e-9);
        let (phi2, m) = canonical_kraus(&random_channel(2, 2, 2, 1202), 1e-9);
        let gluing = random_gluing_matrix(n, m, &mut rng);
        let rho = random_density_matrix(2, &mut rng);
        let id = CMatrix::identity(2);
        let g = steered_interference(&phi1, &phi2, gluing.matrix(), &id, &id, &rho, true).unwrap();
        let r = interference_operator(&phi1, &phi2, gluing.matrix()).unwrap();
        assert!((g - interference_value(&r, &rho)).norm() < 1e-14);
    }

    /// With a nonsingular probe the steered family determines C; with a pure
    /// probe the induced linear system is rank-deficient.
    #[test]
    fn steered_family_rank_depends_on_probe_state() {
        let phi = dephasing_channel(2);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let c_true = random_gluing_matrix(2, 2, &mut rng);
        let unitaries = unitary_basis(2);

        let build_system = |rho: &DensityMatrix| -> (CMatrix, Vec<Complex64>) {
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for u in &unitaries {
                for ubar in &unitaries {
                    let mut row = vec![Complex64::ZERO; 4];
                    for (n, v) in phi.ops().iter().enumerate() {
                        for (m, w) in phi.ops().iter().enumerate() {
                            row[n * 2 + m] = w
                                .adjoint()
                                .matmul(&u.matmul(v).matmul(ubar))
                                .matmul(rho.matrix())
                                .trace();
                        }
                    }
                    rows.push(row);
                    rhs.push(
                        steered_interference(&phi, &phi, c_true.matrix(), u, ubar, rho, false)
                            .unwrap(),
                    );
                }
            }
            (CMatrix::from_rows(&rows).unwrap(), rhs)
        };

        let mixed = DensityMatrix::maximally_mixed(2);
        let (sys, rhs) = build_system(&mixed);
        let mut rhs_col = CMatrix::zeros(rhs.len(), 1);
        for (i, z) in rhs.iter().enumerate() {
            rhs_col[(i, 0)] = *z;
        }
        let ls = least_squares(&sys, &rhs_col, 1e-9);
        assert_eq!(ls.rank, 4, "nonsingular probe determines C");
        let c_rec = CMatrix::from_fn(2, 2, |n, m| ls.solution[(n * 2 + m, 0)]);
        assert!(c_rec.max_abs_diff(c_true.matrix()) < 1e-9);

        let pure = DensityMatrix::pure(&[Complex64::ONE, Complex64::ZERO]).unwrap();
        let (sys_p, _) = build_system(&pure);
        let rank_pure =
            crate::linalg::rank_from_singular_values(&crate::linalg::svd(&sys_p).s, 1e-9);
        assert!(rank_pure < 4, "pure probe leaves directions undetermined");
    }

    #[test]
    fn dephasing_visibility_worked_example() {
        // V = |1⟩⟨1|, W = |2⟩⟨2| on the dephasing pair: A = ¼, B = ½.
        let phi = dephasing_channel(2);
        let gluing = lsp_gluing(
            &[Complex64::ONE, Complex64::ZERO],
            &[Complex64::ZERO, Complex64::ONE],
        )
        .unwrap();
        let glued = GluedChannel::new(phi.clone(), phi, gluing).unwrap();
        let m = visibility_measures(&glued).unwrap();
        assert!((m.b - 0.5).abs() < 1e-12);
        assert!((m.a - 0.25).abs() < 1e-4);
        assert!(m.a <= m.b + 1e-9);
    }

    #[test]
    fn identity_gluing_visibility_measures() {
        let glued = GluedChannel::new(
            KrausChannel::identity(2),
            KrausChannel::identity(2),
            lsp_gluing(&[Complex64::ONE], &[Complex64::ONE]).unwrap(),
        )
        .unwrap();
        let m = visibility_measures(&glued).unwrap();
        assert!((m.a - 0.5).abs() < 1e-9);
        assert!((m.b - 0.5).abs() < 1e-12);
        assert!((m.f_c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measures_require_lsp_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let (phi1, n) = canonical_kraus(&random_channel(2, 2, 2, 1401), 1e-9);
        let (phi2, m) = canonical_kraus(&random_channel(2, 2, 2, 1402), 1e-9);
        let gluing = random_gluing_matrix(n, m, &mut rng);
        let glued = GluedChannel::new(phi1, phi2, gluing).unwrap();
        match visibility_measures(&glued) {
            Err(Error::NotLsp) => {}
            other => panic!("expected NotLsp, got {other:?}"),
        }
        // F_c stays available.
        assert!(coherent_fidelity(&glued).is_ok());
    }

    /// Exhaustive grid over pure qubit states against the multi-start
    /// optimizer.
    #[test]
    fn optimizer_matches_grid_search_dim2() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for seed in 0..4u64 {
            let (phi1, n) = canonical_kraus(&random_channel(2, 2, 2, 1500 + seed), 1e-9);
            let (phi2, m) = canonical_kraus(&random_channel(2, 2, 2, 1550 + seed), 1e-9);
            let gluing = random_lsp_gluing(n, m, &mut rng);
            let glued = GluedChannel::new(phi1, phi2, gluing).unwrap();
            let v = glued.v_op().unwrap();
            let w = glued.w_op().unwrap();
            // 100×100 grid ψ = (cos θ, e^{iφ} sin θ).
            let mut grid_best: f64 = 0.0;
            for i in 0..100 {
                let theta = PI / 2.0 * i as f64 / 99.0;
                for j in 0..100 {
                    let phase = 2.0 * PI * j as f64 / 100.0;
                    let psi = [
                        c(theta.cos(), 0.0),
                        Complex64::from_polar(theta.sin(), phase),
                    ];
                    let val = vnorm(&v.matvec(&psi)) * vnorm(&w.matvec(&psi));
                    grid_best = grid_best.max(val);
                }
            }
            let optimized = sup_product_norm(v, w);
            assert!(
                optimized + 1e-9 >= grid_best,
                "optimizer below grid: {optimized} vs {grid_best}"
            );
            assert!(
                (optimized - grid_best).abs() < 1e-4,
                "grid and optimizer disagree: {optimized} vs {grid_best}"
            );
        }
    }

    #[test]
    fn a_bounded_by_b_for_random_lsp() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for seed in 0..10u64 {
            let (phi1, n) = canonical_kraus(&random_channel(2, 2, 2, 1600 + seed), 1e-9);
            let (phi2, m) = canonical_kraus(&random_channel(2, 2, 3, 1650 + seed), 1e-9);
            let gluing = random_lsp_gluing(n, m, &mut rng);
            let glued = GluedChannel::new(phi1, phi2, gluing).unwrap();
            let meas = visibility_measures(&glued).unwrap();
            assert!(meas.a <= meas.b + 1e-9);
            assert!(meas.f_c <= 2.0 * meas.a + 1e-9);
        }
    }

    #[test]
    fn rejects_non_unitary_arguments() {
        let phi1 = KrausChannel::identity(2);
        let phi2 = KrausChannel::identity(2);
        let c_mat = one_by_one(c(0.5, 0.0));
        let bad = CMatrix::identity(2).scaled(c(2.0, 0.0));
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            generalized_interference(&phi1, &phi2, &c_mat, &bad, &rho),
            Err(Error::NotUnitary(_))
        ));
        assert!(matches!(
            steered_interference(&phi1, &phi2, &c_mat, &CMatrix::identity(2), &bad, &rho, true),
            Err(Error::NotUnitary(_))
        ));
    }
}

//! Reconstruction of the interference operator R from fringe data and
//! recovery of the gluing matrix, either through the standard interferometer
//! (when the products W†V span enough of the operator space) or through the
//! generalized interferometer (always).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::{DensityMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{hs_inner, least_squares, random_unitary, solve_square, svd, CMatrix};
use crate::tol;

/// dim² density matrices spanning the full operator space:
/// the basis projectors |n⟩⟨n| together with |ψ_{nn'}⟩⟨ψ_{nn'}| and
/// |χ_{nn'}⟩⟨χ_{nn'}| for n > n', where |ψ_{nn'}⟩ = (|n⟩+|n'⟩)/√2 and
/// |χ_{nn'}⟩ = (|n⟩+i|n'⟩)/√2.
pub fn state_basis(dim: usize) -> Vec<DensityMatrix> {
    let mut states = Vec::with_capacity(dim * dim);
    for n in 0..dim {
        let mut v = vec![Complex64::ZERO; dim];
        v[n] = Complex64::ONE;
        states.push(DensityMatrix::pure(&v).expect("basis projector"));
    }
    for n in 1..dim {
        for np in 0..n {
            let mut psi = vec![Complex64::ZERO; dim];
            psi[n] = Complex64::ONE;
            psi[np] = Complex64::ONE;
            states.push(DensityMatrix::pure(&psi).expect("superposition state"));
            let mut chi = vec![Complex64::ZERO; dim];
            chi[n] = Complex64::ONE;
            chi[np] = Complex64::I;
            states.push(DensityMatrix::pure(&chi).expect("phase state"));
        }
    }
    states
}

/// Weyl clock-shift unitary basis {X^a Z^b} of the operator space: X is the
/// cyclic shift, Z = diag(ω^k) with ω = e^{2πi/dim}. The dim² elements are
/// pairwise trace-orthogonal: Tr(U_i†U_j) = dim·δ_{ij}.
pub fn unitary_basis(dim: usize) -> Vec<CMatrix> {
    let omega = 2.0 * std::f64::consts::PI / dim as f64;
    let mut out = Vec::with_capacity(dim * dim);
    for a in 0..dim {
        for b in 0..dim {
            out.push(CMatrix::from_fn(dim, dim, |r, c| {
                if r == (c + a) % dim {
                    Complex64::from_polar(1.0, omega * (b * c) as f64)
                } else {
                    Complex64::ZERO
                }
            }));
        }
    }
    out
}

/// Result of solving E(ρ_j) = ½Tr(R ρ_j) in least squares.
#[derive(Clone, Debug)]
pub struct RReconstruction {
    pub r: CMatrix,
    /// Rank of the probe-state system; dim² when the states span everything.
    pub rank: usize,
    pub rank_deficient: bool,
    /// Frobenius residual of the least-squares fit.
    pub residual: f64,
}

/// Least-squares reconstruction of R from values of the interference
/// function on a set of states. When the states do not span the operator
/// space the result is the minimum-norm solution restricted to their span,
/// flagged `rank_deficient`.
pub fn reconstruct_r(data: &[(DensityMatrix, Complex64)]) -> Result<RReconstruction> {
    let dim = data
        .first()
        .map(|(rho, _)| rho.dim())
        .ok_or_else(|| Error::Dimension("no tomography data".into()))?;
    if data.iter().any(|(rho, _)| rho.dim() != dim) {
        return Err(Error::Dimension("mixed state dimensions".into()));
    }
    // ½·Σ_{ab} R[a,b]·ρ[b,a] = E, unknown x = vec(R) column-stacked.
    let mut sys = CMatrix::zeros(data.len(), dim * dim);
    let mut rhs = CMatrix::zeros(data.len(), 1);
    for (row, (rho, e)) in data.iter().enumerate() {
        for a in 0..dim {
            for b in 0..dim {
                sys[(row, b * dim + a)] = 0.5 * rho.matrix()[(b, a)];
            }
        }
        rhs[(row, 0)] = *e;
    }
    let ls = least_squares(&sys, &rhs, tol::LI_REL);
    Ok(RReconstruction {
        r: CMatrix::from_vec_col(dim, dim, &ls.solution.column(0)),
        rank: ls.rank,
        rank_deficient: ls.rank < dim * dim,
        residual: ls.residual,
    })
}

/// Outcome of a gluing-matrix reconstruction.
#[derive(Clone, Debug)]
pub struct TomographyResult {
    /// Recovered gluing matrix (minimum-norm representative when degenerate).
    pub c_hat: CMatrix,
    /// True when the reconstruction determines every entry of C.
    pub identifiable: bool,
    /// Rank of the linear map C ↦ Σ C_{nm} W_m†V_n.
    pub identifiable_subspace_rank: usize,
    /// Residual of the fit (Frobenius for the standard setup, max-entry
    /// re-prediction error for the generalized one).
    pub residual: f64,
    /// Orthonormal N×M matrices spanning the unrecoverable directions.
    pub undetermined_directions: Vec<CMatrix>,
}

/// Matrix of the linear map C ↦ Σ_{nm} C_{nm}·W_m†·V_n in column-stacked
/// coordinates; column (n·M + m) is vec(W_m†V_n).
fn gluing_response_matrix(phi1: &KrausChannel, phi2: &KrausChannel) -> CMatrix {
    let s = phi1.source_dim();
    let n_ops = phi1.kraus_count();
    let m_ops = phi2.kraus_count();
    let mut t = CMatrix::zeros(s * s, n_ops * m_ops);
    for (n, v) in phi1.ops().iter().enumerate() {
        for (m, w) in phi2.ops().iter().enumerate() {
            t.set_column(n * m_ops + m, &w.adjoint().matmul(v).vec_col());
        }
    }
    t
}

/// Recover C from a reconstructed interference operator R through the
/// standard setup. Both channels must be given in canonical (linearly
/// independent) Kraus representations; degeneracy is reported in the result,
/// never thrown.
pub fn recover_c_standard(
    r: &CMatrix,
    phi1: &KrausChannel,
    phi2: &KrausChannel,
    rel_tol: f64,
) -> TomographyResult {
    let n_ops = phi1.kraus_count();
    let m_ops = phi2.kraus_count();
    let sys = gluing_response_matrix(phi1, phi2);
    let rhs = r.vec_col();
    let dec = svd(&sys);
    // Singular values are measured against the larger of σ_max and the
    // natural unit scale of Kraus products, so an exactly degenerate setup
    // reports rank 0 instead of mistaking rounding dust for signal.
    let sigma_max = dec.s.first().copied().unwrap_or(0.0);
    let cutoff = rel_tol * sigma_max.max(1.0);
    let rank = dec.s.iter().filter(|&&x| x > cutoff).count();
    let mut solution = vec![Complex64::ZERO; n_ops * m_ops];
    for j in 0..rank {
        let uj = dec.u.column(j);
        let coeff: Complex64 =
            uj.iter().zip(&rhs).map(|(u, b)| u.conj() * b).sum::<Complex64>() / dec.s[j];
        for (x, v) in solution.iter_mut().zip(dec.v.column(j)) {
            *x += v * coeff;
        }
    }
    let c_hat = CMatrix::from_fn(n_ops, m_ops, |n, m| solution[n * m_ops + m]);
    let fitted = sys.matvec(&solution);
    let residual = fitted
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let undetermined_directions: Vec<CMatrix> = (rank..n_ops * m_ops)
        .map(|j| {
            let col = dec.v.column(j);
            CMatrix::from_fn(n_ops, m_ops, |n, m| col[n * m_ops + m])
        })
        .collect();
    TomographyResult {
        c_hat,
        identifiable: rank == n_ops * m_ops,
        identifiable_subspace_rank: rank,
        residual,
        undetermined_directions,
    }
}

/// Extend linearly independent operators to a full basis of the space of
/// target_dim × source_dim matrices. The first elements are the inputs,
/// unchanged; the added ones come from Gram-Schmidt over the matrix units in
/// row-major order, so the extension is deterministic.
fn extend_operator_basis(ops: &[CMatrix], source_dim: usize, target_dim: usize) -> Vec<CMatrix> {
    let full = source_dim * target_dim;
    let mut shadow: Vec<CMatrix> = Vec::with_capacity(full);
    for op in ops {
        let mut residual = op.clone();
        for _pass in 0..2 {
            for s in &shadow {
                let proj = hs_inner(s, &residual);
                residual = &residual - &s.scaled(proj);
            }
        }
        let norm = residual.frobenius_norm();
        assert!(norm > 1e-10, "extend_operator_basis: inputs not independent");
        shadow.push(residual.scaled(Complex64::new(1.0 / norm, 0.0)));
    }
    let mut out: Vec<CMatrix> = ops.to_vec();
    'units: for r in 0..target_dim {
        for c in 0..source_dim {
            if out.len() == full {
                break 'units;
            }
            let mut unit = CMatrix::zeros(target_dim, source_dim);
            unit[(r, c)] = Complex64::ONE;
            let mut residual = unit;
            for _pass in 0..2 {
                for s in &shadow {
                    let proj = hs_inner(s, &residual);
                    residual = &residual - &s.scaled(proj);
                }
            }
            let norm = residual.frobenius_norm();
            if norm > 1e-7 {
                let normalized = residual.scaled(Complex64::new(1.0 / norm, 0.0));
                shadow.push(normalized.clone());
                out.push(normalized);
            }
        }
    }
    assert_eq!(out.len(), full, "matrix units failed to complete the basis");
    out
}

/// Recover C from a generalized-interference oracle G(U, ρ). Works for any
/// pair of channels in canonical representations, with no rank condition:
/// for every basis unitary U the operator F(U) = Σ C_{nm} W_m†UV_n is
/// tomographed over the state basis, the Kraus families are extended to full
/// operator bases, and the expansion coefficients of F in the induced map
/// basis are extracted; C is the leading N×M block.
///
/// The residual is the max-entry error when the recovered C re-predicts all
/// tomographed F(U); it exceeds `tol` only when the oracle is not an
/// interference function of any gluing of the two channels.
pub fn recover_c_generalized(
    mut oracle: impl FnMut(&CMatrix, &DensityMatrix) -> Complex64,
    phi1: &KrausChannel,
    phi2: &KrausChannel,
    tol: f64,
) -> Result<TomographyResult> {
    let s = phi1.source_dim();
    let t = phi1.target_dim();
    let n_ops = phi1.kraus_count();
    let m_ops = phi2.kraus_count();
    let k_full = s * t;

    let states = state_basis(s);
    let unitaries = unitary_basis(t);
    let mut f_values = Vec::with_capacity(unitaries.len());
    for u in &unitaries {
        let data: Vec<(DensityMatrix, Complex64)> = states
            .iter()
            .map(|rho| (rho.clone(), oracle(u, rho)))
            .collect();
        let rec = reconstruct_r(&data)?;
        f_values.push(rec.r);
    }

    let v_ext = extend_operator_basis(phi1.ops(), s, t);
    let w_ext = extend_operator_basis(phi2.ops(), s, t);

    // Square system: unknown extended coefficients X_{kk'} (index k·K + k'),
    // equations vec(F(U_j)) = Σ_{kk'} X_{kk'}·vec(W̃_{k'}†·U_j·Ṽ_k).
    let rows = unitaries.len() * s * s;
    let mut sys = CMatrix::zeros(rows, k_full * k_full);
    let mut rhs = CMatrix::zeros(rows, 1);
    for (j, u) in unitaries.iter().enumerate() {
        let fv = f_values[j].vec_col();
        for (i, z) in fv.iter().enumerate() {
            rhs[(j * s * s + i, 0)] = *z;
        }
        for (k, vk) in v_ext.iter().enumerate() {
            let uv = u.matmul(vk);
            for (kp, wk) in w_ext.iter().enumerate() {
                let col = wk.adjoint().matmul(&uv).vec_col();
                for (i, z) in col.iter().enumerate() {
                    sys[(j * s * s + i, k * k_full + kp)] = *z;
                }
            }
        }
    }
    let coeffs = match solve_square(&sys, &rhs) {
        Some(x) => x,
        None => least_squares(&sys, &rhs, tol::LI_REL).solution,
    };
    let c_hat = CMatrix::from_fn(n_ops, m_ops, |n, m| coeffs[(n * k_full + m, 0)]);

    // Re-predict every tomographed F(U) from the leading block alone.
    let mut residual = 0.0_f64;
    for (j, u) in unitaries.iter().enumerate() {
        let mut predicted = CMatrix::zeros(s, s);
        for (n, v) in phi1.ops().iter().enumerate() {
            let uv = u.matmul(v);
            for (m, w) in phi2.ops().iter().enumerate() {
                predicted = &predicted + &w.adjoint().matmul(&uv).scaled(c_hat[(n, m)]);
            }
        }
        residual = residual.max(predicted.max_abs_diff(&f_values[j]));
    }
    if residual > tol {
        return Err(Error::OracleInconsistent { residual });
    }
    Ok(TomographyResult {
        c_hat,
        identifiable: true,
        identifiable_subspace_rank: n_ops * m_ops,
        residual,
        undetermined_directions: Vec::new(),
    })
}

/// Outcome of searching for unitaries {U_k} that make {U_k·ρ} an operator
/// basis. Such a family exists exactly when ρ is nonsingular.
#[derive(Clone, Debug)]
pub enum UnitaryFamily {
    Spanning(Vec<CMatrix>),
    NotSpanning { rank: usize },
}

/// Clock-shift family, optionally composed with a seeded random unitary
/// (seed 0 keeps the plain family). Returns the family when {U_k ρ} spans
/// the operator space, otherwise the achieved rank.
pub fn nonsingular_unitary_family(rho: &DensityMatrix, seed: u64) -> UnitaryFamily {
    let dim = rho.dim();
    let mut family = unitary_basis(dim);
    if seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_unitary(dim, &mut rng);
        for u in &mut family {
            *u = u.matmul(&q);
        }
    }
    let mut stacked = CMatrix::zeros(dim * dim, family.len());
    for (k, u) in family.iter().enumerate() {
        stacked.set_column(k, &u.matmul(rho.matrix()).vec_col());
    }
    let rank = crate::linalg::rank_from_singular_values(&svd(&stacked).s, tol::LI_REL);
    if rank == dim * dim {
        UnitaryFamily::Spanning(family)
    } else {
        UnitaryFamily::NotSpanning { rank }
    }
}

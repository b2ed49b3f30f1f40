//! Gluings of two channels on the two-path space.
//!
//! Given channels Φ₁, Φ₂ with linearly independent Kraus representations
//! {V_n} and {W_m}, every trace-preserving total channel that restricts to
//! Φ₁ on path 1 and Φ₂ on path 2 acts blockwise as
//!
//!   out₁₁ = Σ V_n ρ₁₁ V_n†        out₁₂ = Σ C_{nm} V_n ρ₁₂ W_m†
//!   out₂₂ = Σ W_m ρ₂₂ W_m†        out₂₁ = out₁₂-style with C*
//!
//! where the gluing matrix C satisfies I ⪰ CC†. Rank-one C = c₁c₂† is the
//! LSP case: the two paths carry independent devices.

use num_complex::Complex64;

use crate::channels::{canonical_kraus, DensityMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, vnorm, CMatrix};
use crate::tol;

/// True iff min eig(I − CC†) ≥ −tol.
pub fn validate_gluing_matrix(c: &CMatrix, tol: f64) -> bool {
    gluing_psd_gap(c) >= -tol
}

/// Smallest eigenvalue of I − CC†.
pub fn gluing_psd_gap(c: &CMatrix) -> f64 {
    let gap = &CMatrix::identity(c.rows()) - &c.matmul(&c.adjoint());
    hermitian_eigen(&gap).0[0]
}

/// N×M coupling matrix between two Kraus families, optionally carrying a
/// rank-one LSP factorization C = c₁c₂†.
#[derive(Clone, Debug)]
pub struct GluingMatrix {
    c: CMatrix,
    lsp: Option<(Vec<Complex64>, Vec<Complex64>)>,
}

impl GluingMatrix {
    pub fn new(c: CMatrix) -> Result<Self> {
        let min_eig = gluing_psd_gap(&c);
        if min_eig < -tol::GLUING_PSD {
            return Err(Error::InvalidGluing { min_eig });
        }
        Ok(Self { c, lsp: None })
    }

    /// Attach LSP factors to an existing matrix; they must reproduce C.
    pub fn with_lsp_factors(
        c: CMatrix,
        c1: Vec<Complex64>,
        c2: Vec<Complex64>,
    ) -> Result<Self> {
        let mut g = lsp_gluing(&c1, &c2)?;
        let dev = g.c.max_abs_diff(&c);
        if dev > 1e-10 {
            return Err(Error::InvalidGluing { min_eig: -dev });
        }
        g.c = c;
        Ok(g)
    }

    /// Column gluing (K×1) of a channel in path 1 against a single-operator
    /// channel in path 2; used for dilation-induced gluings.
    pub fn from_path1_vector(c: &[Complex64]) -> Result<Self> {
        let c1 = c.to_vec();
        lsp_gluing(&c1, &[Complex64::ONE])
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.c
    }

    pub fn rows(&self) -> usize {
        self.c.rows()
    }

    pub fn cols(&self) -> usize {
        self.c.cols()
    }

    pub fn lsp_factors(&self) -> Option<(&[Complex64], &[Complex64])> {
        self.lsp.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    pub fn is_lsp(&self) -> bool {
        self.lsp.is_some()
    }
}

/// Rank-one gluing C = c₁c₂† from coefficient vectors with ‖c₁‖, ‖c₂‖ ≤ 1.
/// Always satisfies I ⪰ CC†.
pub fn lsp_gluing(c1: &[Complex64], c2: &[Complex64]) -> Result<GluingMatrix> {
    for v in [c1, c2] {
        let norm = vnorm(v);
        if norm > 1.0 + 1e-12 {
            return Err(Error::NormTooLarge { norm });
        }
    }
    Ok(GluingMatrix {
        c: CMatrix::outer(c1, c2),
        lsp: Some((c1.to_vec(), c2.to_vec())),
    })
}

/// Rebase a gluing matrix under a change of linearly independent Kraus
/// representations: C' = U₁·C·U₂†.
///
/// If the new operators are expressed in the old ones as
/// new_n = Σ_k M_{nk}·old_k (the `connecting_matrix(old, new)` convention),
/// the matrix expressed in the new representations is
/// C' = conj(M₁)·C·M₂ᵀ, i.e. `rebase_gluing(c, m1.conj(), m2.conj())`.
pub fn rebase_gluing(c: &CMatrix, u1: &CMatrix, u2: &CMatrix) -> Result<GluingMatrix> {
    for u in [u1, u2] {
        if !u.is_square() {
            return Err(Error::NotUnitary(f64::INFINITY));
        }
        let dev = u
            .adjoint()
            .matmul(u)
            .max_abs_diff(&CMatrix::identity(u.cols()));
        if dev > tol::UNITARY {
            return Err(Error::NotUnitary(dev));
        }
    }
    GluingMatrix::new(u1.matmul(c).matmul(&u2.adjoint()))
}

/// A pair of channels in canonical representations plus the gluing matrix
/// coupling them on the two-path space.
#[derive(Clone, Debug)]
pub struct GluedChannel {
    phi1: KrausChannel,
    phi2: KrausChannel,
    gluing: GluingMatrix,
    /// Σ c₁_n V_n and Σ c₂_m W_m when the gluing is LSP.
    v_op: Option<CMatrix>,
    w_op: Option<CMatrix>,
}

impl GluedChannel {
    /// Couple two channels with the given gluing matrix. A channel whose
    /// Kraus operators are linearly dependent is first replaced by its
    /// canonical representation; C is always read against the
    /// representations actually stored (canonicalize first when in doubt).
    pub fn new(phi1: KrausChannel, phi2: KrausChannel, gluing: GluingMatrix) -> Result<Self> {
        if phi1.source_dim() != phi2.source_dim() || phi1.target_dim() != phi2.target_dim() {
            return Err(Error::Dimension(
                "glued channels must share source and target spaces".into(),
            ));
        }
        let phi1 = if phi1.is_canonical(tol::LI_REL) {
            phi1
        } else {
            canonical_kraus(&phi1, tol::LI_REL).0
        };
        let phi2 = if phi2.is_canonical(tol::LI_REL) {
            phi2
        } else {
            canonical_kraus(&phi2, tol::LI_REL).0
        };
        if gluing.rows() != phi1.kraus_count() || gluing.cols() != phi2.kraus_count() {
            return Err(Error::Dimension(format!(
                "gluing matrix is {}x{} but the canonical Kraus counts are {} and {}",
                gluing.rows(),
                gluing.cols(),
                phi1.kraus_count(),
                phi2.kraus_count()
            )));
        }
        let min_eig = gluing_psd_gap(gluing.matrix());
        if min_eig < -tol::GLUING_PSD {
            return Err(Error::InvalidGluing { min_eig });
        }
        let (v_op, w_op) = match gluing.lsp_factors() {
            Some((c1, c2)) => {
                let v = combine(phi1.ops(), c1);
                let w = combine(phi2.ops(), c2);
                (Some(v), Some(w))
            }
            None => (None, None),
        };
        Ok(Self {
            phi1,
            phi2,
            gluing,
            v_op,
            w_op,
        })
    }

    /// Couple two channels with a gluing matrix expressed against the
    /// *given* (linearly independent) representations, rebasing it onto the
    /// canonical ones. With M_i = connecting_matrix(canonical_i, given_i)
    /// the matrix transforms as C ↦ M₁ᵀ·C·conj(M₂), and LSP factors as
    /// c_i ↦ M_iᵀ·c_i; the glued action is exactly that of the inputs.
    pub fn new_rebased(
        phi1: KrausChannel,
        phi2: KrausChannel,
        gluing: GluingMatrix,
    ) -> Result<Self> {
        if gluing.rows() != phi1.kraus_count() || gluing.cols() != phi2.kraus_count() {
            return Err(Error::Dimension(format!(
                "gluing matrix is {}x{} but the given Kraus counts are {} and {}",
                gluing.rows(),
                gluing.cols(),
                phi1.kraus_count(),
                phi2.kraus_count()
            )));
        }
        let (canon1, k1) = canonical_kraus(&phi1, tol::LI_REL);
        let (canon2, k2) = canonical_kraus(&phi2, tol::LI_REL);
        if k1 != phi1.kraus_count() || k2 != phi2.kraus_count() {
            return Err(Error::NotLinearlyIndependent {
                rank: k1.min(k2),
                count: phi1.kraus_count().max(phi2.kraus_count()),
            });
        }
        let m1 = crate::channels::connecting_matrix(&canon1, &phi1, 1e-9)?;
        let m2 = crate::channels::connecting_matrix(&canon2, &phi2, 1e-9)?;
        let c_canonical = m1.transpose().matmul(gluing.matrix()).matmul(&m2.conj());
        let rebased = match gluing.lsp_factors() {
            Some((c1, c2)) => {
                let c1_new = m1.transpose().matvec(c1);
                let c2_new = m2.transpose().matvec(c2);
                GluingMatrix::with_lsp_factors(c_canonical, c1_new, c2_new)?
            }
            None => GluingMatrix::new(c_canonical)?,
        };
        Self::new(canon1, canon2, rebased)
    }

    pub fn phi1(&self) -> &KrausChannel {
        &self.phi1
    }

    pub fn phi2(&self) -> &KrausChannel {
        &self.phi2
    }

    pub fn gluing(&self) -> &GluingMatrix {
        &self.gluing
    }

    /// Σ c₁_n V_n for LSP gluings.
    pub fn v_op(&self) -> Option<&CMatrix> {
        self.v_op.as_ref()
    }

    /// Σ c₂_m W_m for LSP gluings.
    pub fn w_op(&self) -> Option<&CMatrix> {
        self.w_op.as_ref()
    }

    pub fn source_dim(&self) -> usize {
        self.phi1.source_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.phi1.target_dim()
    }

    /// Linear blockwise action on an arbitrary matrix over the two-path
    /// source space (dim 2·source_dim), path 1 first.
    pub fn apply_raw(&self, x: &CMatrix) -> CMatrix {
        let s = self.source_dim();
        let t = self.target_dim();
        assert_eq!(x.rows(), 2 * s, "two-path input expected");
        assert!(x.is_square());
        let x11 = x.block(0, 0, s, s);
        let x12 = x.block(0, s, s, s);
        let x21 = x.block(s, 0, s, s);
        let x22 = x.block(s, s, s, s);
        let c = self.gluing.matrix();

        let mut out = CMatrix::zeros(2 * t, 2 * t);
        out.set_block(0, 0, &self.phi1.apply_raw(&x11));
        out.set_block(t, t, &self.phi2.apply_raw(&x22));

        // out₁₂ = Σ_{nm} C_{nm}·V_n·x₁₂·W_m† = Σ_n V_n·x₁₂·S_n† with
        // S_n = Σ_m conj(C_{nm})·W_m.
        let mut out12 = CMatrix::zeros(t, t);
        for (n, v) in self.phi1.ops().iter().enumerate() {
            let coeffs: Vec<Complex64> = (0..self.phi2.kraus_count())
                .map(|m| c[(n, m)].conj())
                .collect();
            let s_n = combine(self.phi2.ops(), &coeffs);
            out12 = &out12 + &v.matmul(&x12).matmul(&s_n.adjoint());
        }
        out.set_block(0, t, &out12);

        // out₂₁ = Σ_{nm} conj(C_{nm})·W_m·x₂₁·V_n† = Σ_m W_m·x₂₁·P_m† with
        // P_m = Σ_n C_{nm}·V_n.
        let mut out21 = CMatrix::zeros(t, t);
        for (m, w) in self.phi2.ops().iter().enumerate() {
            let coeffs: Vec<Complex64> = (0..self.phi1.kraus_count())
                .map(|n| c[(n, m)])
                .collect();
            let p_m = combine(self.phi1.ops(), &coeffs);
            out21 = &out21 + &w.matmul(&x21).matmul(&p_m.adjoint());
        }
        out.set_block(t, 0, &out21);
        out
    }

    /// Apply to a two-path density matrix; the output is validated.
    pub fn apply(&self, rho_total: &DensityMatrix) -> Result<DensityMatrix> {
        if rho_total.dim() != 2 * self.source_dim() {
            return Err(Error::Dimension(format!(
                "state dim {} vs two-path dim {}",
                rho_total.dim(),
                2 * self.source_dim()
            )));
        }
        DensityMatrix::new(self.apply_raw(rho_total.matrix()))
    }
}

fn combine(ops: &[CMatrix], coeffs: &[Complex64]) -> CMatrix {
    assert_eq!(ops.len(), coeffs.len());
    let mut out = CMatrix::zeros(ops[0].rows(), ops[0].cols());
    for (op, &z) in ops.iter().zip(coeffs) {
        if z != Complex64::ZERO {
            out = &out + &op.scaled(z);
        }
    }
    out
}

/// Probability-weight test for subspace preservation: the map keeps
/// Tr((|1⟩⟨1|⊗I)·ρ) invariant on a spanning set of density matrices of the
/// two-path space (dim 2·half_dim), hence on everything by linearity.
pub fn is_subspace_preserving(
    map: impl Fn(&CMatrix) -> CMatrix,
    half_dim: usize,
    tol: f64,
) -> bool {
    for rho in crate::tomography::state_basis(2 * half_dim) {
        let before = path1_weight(rho.matrix(), half_dim);
        let out = map(rho.matrix());
        let after = path1_weight(&out, half_dim);
        if (before - after).abs() > tol {
            return false;
        }
    }
    true
}

fn path1_weight(x: &CMatrix, half_dim: usize) -> f64 {
    (0..half_dim).map(|i| x[(i, i)].re).sum()
}

/// Occupation-number extension of a channel glued against the vacuum: on
/// H ⊕ span{|0⟩} (vacuum appended as the last basis vector) the Kraus
/// operators become V_k ⊕ conj(c₁_k)|0⟩⟨0|, plus √(1−‖c₁‖²)|0⟩⟨0| when
/// ‖c₁‖ < 1. The result reproduces the channel on the particle sector,
/// multiplies particle-vacuum coherences by V = Σ c₁_k V_k, and leaves the
/// vacuum weight alone.
pub fn extend_occupation(phi1: &KrausChannel, c1: &[Complex64]) -> Result<KrausChannel> {
    if c1.len() != phi1.kraus_count() {
        return Err(Error::Dimension(format!(
            "coefficient vector length {} vs Kraus count {}",
            c1.len(),
            phi1.kraus_count()
        )));
    }
    if !phi1.is_canonical(tol::LI_REL) {
        return Err(Error::NotCanonical(
            "occupation extension needs a linearly independent representation".into(),
        ));
    }
    let norm = vnorm(c1);
    if norm > 1.0 + 1e-12 {
        return Err(Error::NormTooLarge { norm });
    }
    let s = phi1.source_dim();
    let t = phi1.target_dim();
    let mut ops = Vec::with_capacity(phi1.kraus_count() + 1);
    for (k, v) in phi1.ops().iter().enumerate() {
        let mut ext = CMatrix::zeros(t + 1, s + 1);
        ext.set_block(0, 0, v);
        ext[(t, s)] = c1[k].conj();
        ops.push(ext);
    }
    let leak = 1.0 - norm * norm;
    if leak > 1e-14 {
        let mut z = CMatrix::zeros(t + 1, s + 1);
        z[(t, s)] = Complex64::new(leak.sqrt(), 0.0);
        ops.push(z);
    }
    KrausChannel::new(s + 1, t + 1, ops)
}

/// Random gluing matrix drawn inside the admissible set: a complex Gaussian
/// matrix rescaled so its largest singular value is a seeded radius < 1.
pub fn random_gluing_matrix(n: usize, m: usize, rng: &mut impl rand::Rng) -> GluingMatrix {
    let g = crate::linalg::random_gaussian(n, m, rng);
    let top = crate::linalg::operator_norm(&g);
    let radius: f64 = rng.gen_range(0.05..0.999);
    GluingMatrix::new(g.scaled(Complex64::new(radius / top, 0.0)))
        .expect("rescaled matrix satisfies I ⪰ CC†")
}

/// Random LSP gluing from seeded unit vectors and radii ≤ 1.
pub fn random_lsp_gluing(n: usize, m: usize, rng: &mut impl rand::Rng) -> GluingMatrix {
    let r1: f64 = rng.gen_range(0.1..=1.0);
    let r2: f64 = rng.gen_range(0.1..=1.0);
    let c1: Vec<Complex64> = crate::linalg::random_unit_vector(n, rng)
        .into_iter()
        .map(|z| z * r1)
        .collect();
    let c2: Vec<Complex64> = crate::linalg::random_unit_vector(m, rng)
        .into_iter()
        .map(|z| z * r2)
        .collect();
    lsp_gluing(&c1, &c2).expect("scaled unit vectors have norm ≤ 1")
}

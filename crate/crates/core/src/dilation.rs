//! Unitary dilations of a channel and the gluings they induce.
//!
//! A unitary U on H_I⊗H_a represents a channel Φ through
//! Φ(ρ) = Tr_a(U·ρ⊗|a⟩⟨a|·U†). Every such U splits into two complementary
//! partial isometries U = W + R with R = Σ V_k⊗|a_k⟩⟨a| built from a
//! canonical Kraus representation {V_k} and an orthonormal ancilla tuple ā;
//! the pair (ā, W) classifies the dilation completely. Inserted into path 1
//! of the interferometer, the dilation produces the LSP gluing of Φ with the
//! identity channel whose coefficient vector is C_k = ⟨a|a_k⟩.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::{
    canonical_kraus, choi_matrix, connecting_matrix, DensityMatrix, KrausChannel,
};
use crate::error::{Error, Result};
use crate::gluing::{GluedChannel, GluingMatrix};
use crate::linalg::{
    hermitian_eigen, projector_range_basis, random_unitary, vdot, vnorm, CMatrix,
};
use crate::tol;

/// How to pick the complementary partial isometry W.
#[derive(Clone, Copy, Debug)]
pub enum CompletionMode {
    /// Pair deterministic orthonormal bases of the two complement spaces in
    /// index order.
    Deterministic,
    /// Compose the deterministic choice with a seeded Haar-like unitary on
    /// the final space.
    Random { seed: u64 },
}

/// A unitary dilation of a channel, stored in decomposed form.
#[derive(Clone, Debug)]
pub struct Dilation {
    channel: KrausChannel,
    ancilla_dim: usize,
    anchor: Vec<Complex64>,
    a_tuple: Vec<Vec<Complex64>>,
    w: CMatrix,
    u: CMatrix,
}

impl Dilation {
    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn internal_dim(&self) -> usize {
        self.channel.source_dim()
    }

    pub fn anchor(&self) -> &[Complex64] {
        &self.anchor
    }

    pub fn a_tuple(&self) -> &[Vec<Complex64>] {
        &self.a_tuple
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// The assembled unitary U = W + Σ V_k⊗|a_k⟩⟨a|.
    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    /// The conditional operator ⟨a|U|a⟩ on the internal space; the
    /// interference function of the dilation is E(ρ) = ½·Tr(⟨a|U|a⟩·ρ).
    pub fn conditional_operator(&self) -> CMatrix {
        let d = self.internal_dim();
        let a = self.ancilla_dim;
        CMatrix::from_fn(d, d, |r, c| {
            let mut acc = Complex64::ZERO;
            for l in 0..a {
                if self.anchor[l] == Complex64::ZERO {
                    continue;
                }
                for m in 0..a {
                    acc += self.anchor[l].conj() * self.u[(r * a + l, c * a + m)] * self.anchor[m];
                }
            }
            acc
        })
    }

    /// Gluing of the channel with the identity channel as a K×1 gluing
    /// matrix (carrying its LSP factorization).
    pub fn induced_gluing(&self) -> GluingMatrix {
        GluingMatrix::from_path1_vector(&gluing_of_dilation(self))
            .expect("dilation gluing vectors have norm ≤ 1")
    }

    /// The glued channel on the two-path space matching this dilation in
    /// path 1 and nothing in path 2.
    pub fn glued_with_identity(&self) -> Result<GluedChannel> {
        GluedChannel::new(
            self.channel.clone(),
            KrausChannel::identity(self.internal_dim()),
            self.induced_gluing(),
        )
    }
}

fn ensure_square_canonical(channel: &KrausChannel) -> Result<()> {
    if channel.source_dim() != channel.target_dim() {
        return Err(Error::Dimension(
            "dilations require source and target spaces to coincide".into(),
        ));
    }
    if !channel.is_canonical(tol::LI_REL) {
        return Err(Error::NotCanonical(
            "dilations are classified against a linearly independent representation".into(),
        ));
    }
    Ok(())
}

fn orthonormality_deviation(anchor: &[Complex64], tuple: &[Vec<Complex64>]) -> f64 {
    let mut dev: f64 = (vnorm(anchor) - 1.0).abs();
    for (i, ai) in tuple.iter().enumerate() {
        for (j, aj) in tuple.iter().enumerate() {
            let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
            dev = dev.max((vdot(ai, aj) - expect).norm());
        }
    }
    dev
}

/// R = Σ_k V_k⊗|a_k⟩⟨a|, a partial isometry with initial space H⊗span{|a⟩}
/// and final projector Σ V_k V_{k'}†⊗|a_k⟩⟨a_{k'}|.
pub fn build_partial_isometry_r(
    channel: &KrausChannel,
    a_tuple: &[Vec<Complex64>],
    anchor: &[Complex64],
) -> Result<CMatrix> {
    ensure_square_canonical(channel)?;
    let k = channel.kraus_count();
    if a_tuple.len() != k {
        return Err(Error::Dimension(format!(
            "tuple length {} vs Kraus number {k}",
            a_tuple.len()
        )));
    }
    let a_dim = anchor.len();
    if a_dim < k || a_tuple.iter().any(|v| v.len() != a_dim) {
        return Err(Error::Dimension(
            "ancilla vectors must live in one space of dimension ≥ the Kraus number".into(),
        ));
    }
    let dev = orthonormality_deviation(anchor, a_tuple);
    if dev > 1e-10 {
        return Err(Error::NotOrthonormal(dev));
    }
    let d = channel.source_dim();
    let mut r = CMatrix::zeros(d * a_dim, d * a_dim);
    for (vk, ak) in channel.ops().iter().zip(a_tuple) {
        let ancilla_part = CMatrix::outer(ak, anchor);
        r = &r + &vk.kron(&ancilla_part);
    }
    Ok(r)
}

/// Complete a partial isometry R to a unitary: W has initial space
/// (range R†R)^⊥ and final space (range RR†)^⊥, so U = W + R is unitary.
pub fn complete_partial_isometry_w(r: &CMatrix, mode: CompletionMode) -> CMatrix {
    let n = r.rows();
    let p_i = r.adjoint().matmul(r);
    let p_f = r.matmul(&r.adjoint());
    let co_i = &CMatrix::identity(n) - &p_i;
    let co_f = &CMatrix::identity(n) - &p_f;
    let x_basis = projector_range_basis(&co_i);
    let y_basis = projector_range_basis(&co_f);
    assert_eq!(x_basis.len(), y_basis.len(), "complements of equal rank");
    let m = x_basis.len();
    let mut w = CMatrix::zeros(n, n);
    match mode {
        CompletionMode::Deterministic => {
            for (y, x) in y_basis.iter().zip(&x_basis) {
                w = &w + &CMatrix::outer(y, x);
            }
        }
        CompletionMode::Random { seed } => {
            if m > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let q = random_unitary(m, &mut rng);
                for (j, x) in x_basis.iter().enumerate() {
                    // image of x_j is Σ_l q_{lj}·y_l
                    let mut img = vec![Complex64::ZERO; n];
                    for (l, y) in y_basis.iter().enumerate() {
                        for (dst, src) in img.iter_mut().zip(y) {
                            *dst += q[(l, j)] * src;
                        }
                    }
                    w = &w + &CMatrix::outer(&img, x);
                }
            }
        }
    }
    w
}

fn check_invariant(name: &str, dev: f64, tol: f64) -> Result<()> {
    if dev > tol {
        return Err(Error::InvariantViolation(format!(
            "{name} deviates by {dev:.3e} (tolerance {tol:.1e})"
        )));
    }
    Ok(())
}

/// Assemble U = W + R and verify every dilation invariant: the two partial
/// isometries, their complementarity, unitarity of U, and reproduction of
/// the channel on all matrix units.
pub fn assemble_dilation(
    channel: &KrausChannel,
    a_tuple: &[Vec<Complex64>],
    anchor: &[Complex64],
    w: &CMatrix,
) -> Result<Dilation> {
    let r = build_partial_isometry_r(channel, a_tuple, anchor)?;
    let d = channel.source_dim();
    let a_dim = anchor.len();
    let n = d * a_dim;
    if w.rows() != n || w.cols() != n {
        return Err(Error::Dimension(format!(
            "completion W is {}x{}, expected {n}x{n}",
            w.rows(),
            w.cols()
        )));
    }

    // Initial projector of R: I ⊗ |a⟩⟨a|.
    let p_i = CMatrix::identity(d).kron(&CMatrix::outer(anchor, anchor));
    check_invariant(
        "R†R = I⊗|a⟩⟨a|",
        r.adjoint().matmul(&r).max_abs_diff(&p_i),
        1e-10,
    )?;
    // Final projector of R: Σ V_k V_{k'}† ⊗ |a_k⟩⟨a_{k'}|, idempotent.
    let p_f = r.matmul(&r.adjoint());
    let mut p_f_direct = CMatrix::zeros(n, n);
    for (vk, ak) in channel.ops().iter().zip(a_tuple) {
        for (vkp, akp) in channel.ops().iter().zip(a_tuple) {
            p_f_direct = &p_f_direct + &vk.matmul(&vkp.adjoint()).kron(&CMatrix::outer(ak, akp));
        }
    }
    check_invariant("RR† block form", p_f.max_abs_diff(&p_f_direct), 1e-10)?;
    check_invariant("RR† idempotent", p_f.matmul(&p_f).max_abs_diff(&p_f), 1e-10)?;
    let id = CMatrix::identity(n);
    check_invariant(
        "W†W = I − I⊗|a⟩⟨a|",
        w.adjoint().matmul(w).max_abs_diff(&(&id - &p_i)),
        1e-10,
    )?;
    check_invariant(
        "WW† = I − RR†",
        w.matmul(&w.adjoint()).max_abs_diff(&(&id - &p_f)),
        1e-10,
    )?;

    let u = w + &r;
    check_invariant("U unitary", u.adjoint().matmul(&u).max_abs_diff(&id), 1e-10)?;
    check_invariant(
        "channel reproduced on matrix units",
        representation_residual(&u, channel, anchor),
        1e-10,
    )?;

    Ok(Dilation {
        channel: channel.clone(),
        ancilla_dim: a_dim,
        anchor: anchor.to_vec(),
        a_tuple: a_tuple.to_vec(),
        w: w.clone(),
        u,
    })
}

/// Kraus operators ⟨b_l|U|a⟩ of the channel represented by U over the
/// standard ancilla basis.
pub fn extracted_kraus(u: &CMatrix, internal_dim: usize, anchor: &[Complex64]) -> Vec<CMatrix> {
    let a_dim = anchor.len();
    assert_eq!(u.rows(), internal_dim * a_dim);
    (0..a_dim)
        .map(|l| {
            CMatrix::from_fn(internal_dim, internal_dim, |r, c| {
                (0..a_dim)
                    .map(|m| u[(r * a_dim + l, c * a_dim + m)] * anchor[m])
                    .sum()
            })
        })
        .collect()
}

/// Max-entry Choi deviation between the map ρ ↦ Tr_a(U ρ⊗|a⟩⟨a| U†) and the
/// channel; vanishes exactly when U represents the channel.
pub fn representation_residual(u: &CMatrix, channel: &KrausChannel, anchor: &[Complex64]) -> f64 {
    let d = channel.source_dim();
    let ops = extracted_kraus(u, d, anchor);
    let mut j_u = CMatrix::zeros(d * d, d * d);
    for op in &ops {
        let v = op.vec_col();
        j_u = &j_u + &CMatrix::outer(&v, &v);
    }
    j_u.max_abs_diff(&choi_matrix(channel))
}

/// Split a unitary representation of the channel into its classifying pair
/// (ā, W): Kraus operators are extracted over an ancilla basis, connected to
/// the canonical representation by the isometry M, the tuple is read off as
/// |a_k⟩ = Σ_l M_{lk}|b_l⟩, and W is the complementary part of U.
pub fn decompose_dilation(
    u: &CMatrix,
    channel: &KrausChannel,
    anchor: &[Complex64],
    tol: f64,
) -> Result<(Vec<Vec<Complex64>>, CMatrix)> {
    ensure_square_canonical(channel)?;
    let d = channel.source_dim();
    if !u.rows().is_multiple_of(d) || !u.is_square() {
        return Err(Error::Dimension(format!(
            "unitary of size {} does not factor over internal dim {d}",
            u.rows()
        )));
    }
    let a_dim = u.rows() / d;
    if anchor.len() != a_dim {
        return Err(Error::Dimension("anchor dimension mismatch".into()));
    }
    let unit_dev = u
        .adjoint()
        .matmul(u)
        .max_abs_diff(&CMatrix::identity(u.rows()));
    if unit_dev > tol {
        return Err(Error::NotUnitary(unit_dev));
    }
    let residual = representation_residual(u, channel, anchor);
    if residual > tol {
        return Err(Error::NotARepresentation { residual });
    }

    let extracted = KrausChannel::with_tolerance(d, d, extracted_kraus(u, d, anchor), 1e-8)
        .map_err(|_| Error::NotARepresentation { residual })?;
    let m = connecting_matrix(channel, &extracted, tol.max(1e-9)).map_err(|e| match e {
        Error::ChannelsDiffer { deviation, .. } => Error::NotARepresentation {
            residual: deviation,
        },
        other => other,
    })?;
    let a_tuple: Vec<Vec<Complex64>> = (0..channel.kraus_count()).map(|k| m.column(k)).collect();

    let r = build_partial_isometry_r(channel, &a_tuple, anchor)?;
    let n = d * a_dim;
    let id = CMatrix::identity(n);
    let p_i = r.adjoint().matmul(&r);
    let p_f = r.matmul(&r.adjoint());
    let w = (&id - &p_f).matmul(u).matmul(&(&id - &p_i));
    // U must reassemble from the two complementary pieces.
    let reassembly = (&w + &r).max_abs_diff(u);
    if reassembly > tol {
        return Err(Error::NotARepresentation {
            residual: reassembly,
        });
    }
    Ok((a_tuple, w))
}

/// Decompose and package as a [`Dilation`] (re-verifying all invariants).
pub fn dilation_from_unitary(
    u: &CMatrix,
    channel: &KrausChannel,
    anchor: &[Complex64],
    tol: f64,
) -> Result<Dilation> {
    let (a_tuple, w) = decompose_dilation(u, channel, anchor, tol)?;
    assemble_dilation(channel, &a_tuple, anchor, &w)
}

/// Gluing coefficient vector of the dilation: C_k = ⟨a|a_k⟩.
pub fn gluing_of_dilation(dil: &Dilation) -> Vec<Complex64> {
    dil.a_tuple
        .iter()
        .map(|ak| vdot(&dil.anchor, ak))
        .collect()
}

/// Build a dilation whose induced gluing vector equals `c_target`.
///
/// The ancilla dimension decides what is reachable: below the Kraus number
/// nothing exists; at the Kraus number exactly the unit-norm (maximal)
/// vectors; above it every vector with ‖C‖ ≤ 1.
pub fn dilation_for_target_gluing(
    channel: &KrausChannel,
    c_target: &[Complex64],
    ancilla_dim: usize,
) -> Result<Dilation> {
    ensure_square_canonical(channel)?;
    let k = channel.kraus_count();
    if c_target.len() != k {
        return Err(Error::Dimension(format!(
            "target vector length {} vs Kraus number {k}",
            c_target.len()
        )));
    }
    if ancilla_dim < k {
        return Err(Error::AncillaTooSmall {
            ancilla_dim,
            kraus_number: k,
        });
    }
    let norm = vnorm(c_target);
    if norm > 1.0 + 1e-10 {
        return Err(Error::NormTooLarge { norm });
    }
    let maximal = ancilla_dim == k;
    if maximal && norm < 1.0 - 1e-10 {
        return Err(Error::NotMaximal { norm });
    }
    // In the maximal case snap the target onto the unit sphere so the
    // completion below is exact.
    let target: Vec<Complex64> = if maximal {
        c_target.iter().map(|z| z / norm).collect()
    } else {
        c_target.to_vec()
    };

    // Columns a_k ∈ C^A with a_k[0] = C_k and pairwise orthonormality:
    // rows 1.. are √λ_j·u_j† from I − c†c = Σ λ_j u_j u_j†.
    let c_row = CMatrix::from_rows(std::slice::from_ref(&target)).expect("row vector");
    let p = &CMatrix::identity(k) - &c_row.adjoint().matmul(&c_row);
    let (vals, vecs) = hermitian_eigen(&p);
    let mut rows: Vec<Vec<Complex64>> = vec![target.clone()];
    for j in (0..k).rev() {
        if vals[j] > 1e-14 {
            let uj = vecs.column(j);
            rows.push(uj.iter().map(|z| z.conj() * vals[j].sqrt()).collect());
        }
    }
    if rows.len() > ancilla_dim {
        // ‖C‖ marginally below 1 with a tight ancilla: treated as non-maximal.
        return Err(Error::NotMaximal { norm });
    }
    let a_tuple: Vec<Vec<Complex64>> = (0..k)
        .map(|col| {
            let mut v = vec![Complex64::ZERO; ancilla_dim];
            for (l, row) in rows.iter().enumerate() {
                v[l] = row[col];
            }
            v
        })
        .collect();
    let mut anchor = vec![Complex64::ZERO; ancilla_dim];
    anchor[0] = Complex64::ONE;

    let r = build_partial_isometry_r(channel, &a_tuple, &anchor)?;
    let w = complete_partial_isometry_w(&r, CompletionMode::Deterministic);
    assemble_dilation(channel, &a_tuple, &anchor, &w)
}

/// The involution dilation with vanishing interference: on an ancilla of
/// dimension d²+1 with basis {|a⟩, |a_1⟩, …, |a_{d²}⟩} and the canonical
/// Kraus list padded with zeros to d² entries,
///
///   U' = I⊗I − I⊗|a⟩⟨a| − Σ V_jV_l†⊗|a_j⟩⟨a_l|
///        + Σ V_j⊗|a_j⟩⟨a| + Σ V_j†⊗|a⟩⟨a_j|.
///
/// U' is unitary, represents the channel, and every ⟨a|a_k⟩ overlap
/// vanishes, so E ≡ 0: the fringe stays flat for every probe state.
pub fn zero_visibility_dilation(channel: &KrausChannel) -> Result<Dilation> {
    if channel.source_dim() != channel.target_dim() {
        return Err(Error::Dimension(
            "dilations require source and target spaces to coincide".into(),
        ));
    }
    let canon = if channel.is_canonical(tol::LI_REL) {
        channel.clone()
    } else {
        canonical_kraus(channel, tol::LI_REL).0
    };
    let d = canon.source_dim();
    let padded: Vec<CMatrix> = (0..d * d)
        .map(|j| {
            canon
                .ops()
                .get(j)
                .cloned()
                .unwrap_or_else(|| CMatrix::zeros(d, d))
        })
        .collect();
    let a_dim = d * d + 1;
    let n = d * a_dim;
    let id_d = CMatrix::identity(d);

    let basis = |idx: usize| -> Vec<Complex64> {
        let mut v = vec![Complex64::ZERO; a_dim];
        v[idx] = Complex64::ONE;
        v
    };
    let anchor = basis(0);

    let mut u = CMatrix::identity(n);
    u = &u - &id_d.kron(&CMatrix::outer(&anchor, &anchor));
    for (j, vj) in padded.iter().enumerate() {
        let aj = basis(j + 1);
        for (l, vl) in padded.iter().enumerate() {
            let al = basis(l + 1);
            u = &u - &vj.matmul(&vl.adjoint()).kron(&CMatrix::outer(&aj, &al));
        }
        u = &u + &vj.kron(&CMatrix::outer(&aj, &anchor));
        u = &u + &vj.adjoint().kron(&CMatrix::outer(&anchor, &aj));
    }
    dilation_from_unitary(&u, &canon, &anchor, 1e-8)
}

/// Random dilation of the (canonicalized) channel: the tuple is the leading
/// columns of a seeded Haar-like ancilla unitary, the completion is seeded
/// as well. The anchor is the first ancilla basis vector. A channel that is
/// already linearly independent is kept exactly as given.
pub fn random_dilation(channel: &KrausChannel, ancilla_dim: usize, seed: u64) -> Result<Dilation> {
    let (canon, k) = if channel.is_canonical(tol::LI_REL) {
        (channel.clone(), channel.kraus_count())
    } else {
        canonical_kraus(channel, tol::LI_REL)
    };
    if ancilla_dim < k {
        return Err(Error::AncillaTooSmall {
            ancilla_dim,
            kraus_number: k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_unitary(ancilla_dim, &mut rng);
    let a_tuple: Vec<Vec<Complex64>> = (0..k).map(|j| q.column(j)).collect();
    let mut anchor = vec![Complex64::ZERO; ancilla_dim];
    anchor[0] = Complex64::ONE;
    let r = build_partial_isometry_r(&canon, &a_tuple, &anchor)?;
    let w = complete_partial_isometry_w(&r, CompletionMode::Random { seed: seed ^ 0x5EED });
    assemble_dilation(&canon, &a_tuple, &anchor, &w)
}

/// Channel on the two-path space induced by unitary dilations in the paths,
/// stored through its Kraus operators.
#[derive(Clone, Debug)]
pub struct TotalMap {
    half_dim: usize,
    kraus: Vec<CMatrix>,
}

impl TotalMap {
    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply_raw(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.rows(), 2 * self.half_dim);
        let mut out = CMatrix::zeros(x.rows(), x.cols());
        for b in &self.kraus {
            out = &out + &b.matmul(x).matmul(&b.adjoint());
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 2 * self.half_dim {
            return Err(Error::Dimension(format!(
                "state dim {} vs two-path dim {}",
                rho.dim(),
                2 * self.half_dim
            )));
        }
        DensityMatrix::new(self.apply_raw(rho.matrix()))
    }

    pub fn as_channel(&self) -> KrausChannel {
        KrausChannel::with_tolerance(
            2 * self.half_dim,
            2 * self.half_dim,
            self.kraus.clone(),
            1e-8,
        )
        .expect("total maps are trace preserving")
    }
}

fn block_diag(upper: &CMatrix, lower: &CMatrix) -> CMatrix {
    let d = upper.rows();
    let mut out = CMatrix::zeros(2 * d, 2 * d);
    out.set_block(0, 0, upper);
    out.set_block(d, d, lower);
    out
}

/// Total channel on the two-path space induced by unitary dilations.
///
/// - `dil2 = None`: the dilation acts in path 1 and nothing happens in
///   path 2 (the ancilla is shared but untouched there).
/// - `dil2 = Some`, `shared_ancilla = true`: both unitaries act on one and
///   the same ancilla (requires equal ancilla spaces and anchors).
/// - `dil2 = Some`, `shared_ancilla = false`: each path carries its own
///   ancilla; this is the independent-devices (LSP) arrangement.
pub fn global_unitary(
    dil1: &Dilation,
    dil2: Option<&Dilation>,
    shared_ancilla: bool,
) -> Result<TotalMap> {
    let d = dil1.internal_dim();
    match dil2 {
        None => {
            let w1 = extracted_kraus(dil1.unitary(), d, dil1.anchor());
            let kraus = w1
                .iter()
                .enumerate()
                .map(|(l, op)| block_diag(op, &CMatrix::identity(d).scaled(dil1.anchor()[l])))
                .collect();
            Ok(TotalMap { half_dim: d, kraus })
        }
        Some(dil2) => {
            if dil2.internal_dim() != d {
                return Err(Error::Dimension(
                    "dilations act on different internal spaces".into(),
                ));
            }
            if shared_ancilla {
                if dil1.ancilla_dim() != dil2.ancilla_dim() {
                    return Err(Error::Dimension(
                        "a shared ancilla needs equal ancilla dimensions".into(),
                    ));
                }
                let anchor_gap: f64 = dil1
                    .anchor()
                    .iter()
                    .zip(dil2.anchor())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                if anchor_gap > 1e-12 {
                    return Err(Error::Dimension(
                        "a shared ancilla needs a common anchor state".into(),
                    ));
                }
                let w1 = extracted_kraus(dil1.unitary(), d, dil1.anchor());
                let w2 = extracted_kraus(dil2.unitary(), d, dil2.anchor());
                let kraus = w1
                    .iter()
                    .zip(&w2)
                    .map(|(up, lo)| block_diag(up, lo))
                    .collect();
                Ok(TotalMap { half_dim: d, kraus })
            } else {
                // Independent ancillas: B_{l1,l2} pairs the path-1 operator
                // with the path-2 anchor amplitude and vice versa.
                let w1 = extracted_kraus(dil1.unitary(), d, dil1.anchor());
                let w2 = extracted_kraus(dil2.unitary(), d, dil2.anchor());
                let mut kraus = Vec::with_capacity(w1.len() * w2.len());
                for (l1, op1) in w1.iter().enumerate() {
                    for (l2, op2) in w2.iter().enumerate() {
                        kraus.push(block_diag(
                            &op1.scaled(dil2.anchor()[l2]),
                            &op2.scaled(dil1.anchor()[l1]),
                        ));
                    }
                }
                Ok(TotalMap { half_dim: d, kraus })
            }
        }
    }
}

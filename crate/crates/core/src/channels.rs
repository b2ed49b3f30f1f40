//! Channels as Kraus operator lists, their Choi matrices, canonical
//! (linearly independent) representations, and the isometries connecting
//! different representations of one channel.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, hs_inner, least_squares, orthonormalize_columns, partial_trace_second,
    random_gaussian, rank_from_singular_values, svd, CMatrix,
};
use crate::tol;

/// Density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validate with the default tolerances.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, tol::HERM, tol::PSD, tol::TRACE)
    }

    pub fn with_tolerances(
        matrix: CMatrix,
        tol_herm: f64,
        tol_psd: f64,
        tol_tr: f64,
    ) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::InvalidDensity(format!(
                "expected a square nonempty matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm_dev = matrix.max_abs_diff(&matrix.adjoint());
        if herm_dev > tol_herm {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - Complex64::ONE).norm() > tol_tr {
            return Err(Error::InvalidDensity(format!(
                "trace {} is not 1",
                tr.re
            )));
        }
        let (vals, _) = hermitian_eigen(&matrix);
        let min_eig = vals.first().copied().unwrap_or(0.0);
        if min_eig < -tol_psd {
            return Err(Error::InvalidDensity(format!(
                "not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self {
            dim: matrix.rows(),
            matrix,
        })
    }

    /// |ψ⟩⟨ψ| for a (normalized) state vector.
    pub fn pure(state: &[Complex64]) -> Result<Self> {
        let norm = linalg::vnorm(state);
        if norm < 1e-12 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let normalized: Vec<Complex64> = state.iter().map(|z| z / norm).collect();
        Self::new(CMatrix::outer(&normalized, &normalized))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let matrix = CMatrix::identity(dim).scaled(Complex64::new(1.0 / dim as f64, 0.0));
        Self { dim, matrix }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&self.matrix).0[0]
    }
}

/// Channel given as an ordered Kraus operator list, mapping operators on the
/// source space (dim `source_dim`) to operators on the target space
/// (dim `target_dim`). Each operator is target_dim × source_dim and
/// Σ V†V = I holds within the construction tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    source_dim: usize,
    target_dim: usize,
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(source_dim: usize, target_dim: usize, ops: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(source_dim, target_dim, ops, tol::TP)
    }

    pub fn with_tolerance(
        source_dim: usize,
        target_dim: usize,
        ops: Vec<CMatrix>,
        tol_tp: f64,
    ) -> Result<Self> {
        if source_dim == 0 || target_dim == 0 {
            return Err(Error::InvalidChannel("dimensions must be positive".into()));
        }
        if ops.is_empty() {
            return Err(Error::InvalidChannel("empty Kraus list".into()));
        }
        for (k, op) in ops.iter().enumerate() {
            if op.rows() != target_dim || op.cols() != source_dim {
                return Err(Error::InvalidChannel(format!(
                    "operator {k} has shape {}x{}, expected {target_dim}x{source_dim}",
                    op.rows(),
                    op.cols()
                )));
            }
        }
        let dev = tp_deviation(&ops, source_dim);
        if dev > tol_tp {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (‖ΣV†V − I‖_max = {dev:.3e})"
            )));
        }
        Ok(Self {
            source_dim,
            target_dim,
            ops,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            source_dim: dim,
            target_dim: dim,
            ops: vec![CMatrix::identity(dim)],
        }
    }

    /// Channel with the single Kraus operator `u` (must be unitary).
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let dev = u
            .adjoint()
            .matmul(&u)
            .max_abs_diff(&CMatrix::identity(u.cols()));
        if dev > tol::UNITARY {
            return Err(Error::NotUnitary(dev));
        }
        let dim = u.rows();
        Self::new(dim, dim, vec![u])
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn kraus_count(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Linear action Σ V X V† on an arbitrary source-space matrix.
    pub fn apply_raw(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.rows(), self.source_dim);
        assert_eq!(x.cols(), self.source_dim);
        let mut out = CMatrix::zeros(self.target_dim, self.target_dim);
        for v in &self.ops {
            let term = v.matmul(x).matmul(&v.adjoint());
            out = &out + &term;
        }
        out
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        tp_deviation(&self.ops, self.source_dim) <= tol
    }

    /// True when the Kraus operators are linearly independent at the given
    /// relative singular-value tolerance.
    pub fn is_canonical(&self, rel_tol: f64) -> bool {
        let stacked = stack_vectorized(&self.ops);
        rank_from_singular_values(&svd(&stacked).s, rel_tol) == self.ops.len()
    }
}

fn tp_deviation(ops: &[CMatrix], source_dim: usize) -> f64 {
    let mut sum = CMatrix::zeros(source_dim, source_dim);
    for v in ops {
        sum = &sum + &v.adjoint().matmul(v);
    }
    sum.max_abs_diff(&CMatrix::identity(source_dim))
}

/// True iff ‖Σ V†V − I‖_max ≤ tol for the given operator list (all operators
/// must share one shape; the list need not come from a valid channel).
pub fn is_trace_preserving(kraus_ops: &[CMatrix], tol: f64) -> bool {
    if kraus_ops.is_empty() {
        return false;
    }
    let cols = kraus_ops[0].cols();
    if kraus_ops
        .iter()
        .any(|v| v.cols() != cols || v.rows() != kraus_ops[0].rows())
    {
        return false;
    }
    tp_deviation(kraus_ops, cols) <= tol
}

/// Σ V ρ V†. Errors if ρ does not live on the source space.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ch.source_dim() {
        return Err(Error::Dimension(format!(
            "state dim {} vs channel source dim {}",
            rho.dim(),
            ch.source_dim()
        )));
    }
    DensityMatrix::new(ch.apply_raw(rho.matrix()))
}

/// Choi matrix J = Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|), with the input index as the
/// first tensor factor. Equals Σ_k vec(V_k)·vec(V_k)† in the column-stacking
/// convention, so J is positive semidefinite and Tr over the output factor
/// gives the identity on the source space.
pub fn choi_matrix(ch: &KrausChannel) -> CMatrix {
    let n = ch.source_dim() * ch.target_dim();
    let mut j = CMatrix::zeros(n, n);
    for v in ch.ops() {
        let vec = v.vec_col();
        j = &j + &CMatrix::outer(&vec, &vec);
    }
    j
}

/// Max-entry distance of the Choi matrices of two channels.
pub fn choi_distance(a: &KrausChannel, b: &KrausChannel) -> f64 {
    choi_matrix(a).max_abs_diff(&choi_matrix(b))
}

/// Linearly independent Kraus representation from the eigendecomposition of
/// the Choi matrix, together with the Kraus number. Eigenvalues above
/// `tol` times the largest one are kept; each eigenvector's phase is fixed by
/// making its largest entry real positive.
pub fn canonical_kraus(ch: &KrausChannel, tol: f64) -> (KrausChannel, usize) {
    let j = choi_matrix(ch);
    let (vals, vecs) = hermitian_eigen(&j);
    let n = vals.len();
    let max_val = vals[n - 1].max(0.0);
    let mut ops = Vec::new();
    for k in (0..n).rev() {
        let lam = vals[k];
        if lam <= tol * max_val || lam <= 0.0 {
            break;
        }
        let mut col = vecs.column(k);
        // Deterministic phase: largest-magnitude entry made real positive.
        let mut best = 0usize;
        for (i, z) in col.iter().enumerate() {
            if z.norm() > col[best].norm() {
                best = i;
            }
        }
        let phase = col[best] / col[best].norm();
        let scale = lam.sqrt();
        for z in col.iter_mut() {
            *z = *z * phase.conj() * scale;
        }
        ops.push(CMatrix::from_vec_col(ch.target_dim(), ch.source_dim(), &col));
    }
    let count = ops.len();
    let canonical = KrausChannel::with_tolerance(ch.source_dim(), ch.target_dim(), ops, 1e-8)
        .expect("canonical representation inherits trace preservation");
    (canonical, count)
}

/// Kraus number (Choi rank) at the default linear-independence tolerance.
pub fn kraus_number(ch: &KrausChannel) -> usize {
    let (vals, _) = hermitian_eigen(&choi_matrix(ch));
    let max_val = vals.last().copied().unwrap_or(0.0).max(0.0);
    vals.iter().filter(|&&v| v > tol::LI_REL * max_val).count()
}

fn stack_vectorized(ops: &[CMatrix]) -> CMatrix {
    let len = ops[0].rows() * ops[0].cols();
    let mut m = CMatrix::zeros(len, ops.len());
    for (k, op) in ops.iter().enumerate() {
        m.set_column(k, &op.vec_col());
    }
    m
}

/// The L×K matrix M with M†M = I connecting a linearly independent
/// representation `rep_a` (K operators) to any other representation `rep_b`
/// (L ≥ K operators) of the same channel: B_l = Σ_k M_{lk} A_k.
pub fn connecting_matrix(rep_a: &KrausChannel, rep_b: &KrausChannel, tol: f64) -> Result<CMatrix> {
    if rep_a.source_dim() != rep_b.source_dim() || rep_a.target_dim() != rep_b.target_dim() {
        return Err(Error::Dimension(
            "representations act between different spaces".into(),
        ));
    }
    let deviation = choi_distance(rep_a, rep_b);
    if deviation > tol {
        return Err(Error::ChannelsDiffer { deviation, tol });
    }
    let a = stack_vectorized(rep_a.ops());
    let rank = rank_from_singular_values(&svd(&a).s, tol::LI_REL);
    if rank < rep_a.kraus_count() {
        return Err(Error::NotLinearlyIndependent {
            rank,
            count: rep_a.kraus_count(),
        });
    }
    let b = stack_vectorized(rep_b.ops());
    // A·X = B with X = Mᵀ; exact since rep_a spans rep_b's operators.
    let ls = least_squares(&a, &b, tol::LI_REL);
    Ok(ls.solution.transpose())
}

/// Deterministic random trace-preserving channel: a complex Gaussian
/// (kraus_count·target_dim)×source_dim block matrix is orthonormalized
/// column-wise and sliced into Kraus blocks, so Σ V†V = I by construction.
pub fn random_channel(
    source_dim: usize,
    target_dim: usize,
    kraus_count: usize,
    seed: u64,
) -> KrausChannel {
    assert!(source_dim >= 1 && target_dim >= 1 && kraus_count >= 1);
    assert!(
        kraus_count * target_dim >= source_dim,
        "kraus_count·target_dim must cover the source space for a trace-preserving channel"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_gaussian(kraus_count * target_dim, source_dim, &mut rng);
    let q = orthonormalize_columns(&g);
    let ops: Vec<CMatrix> = (0..kraus_count)
        .map(|k| q.block(k * target_dim, 0, target_dim, source_dim))
        .collect();
    KrausChannel::with_tolerance(source_dim, target_dim, ops, 1e-12)
        .expect("orthonormalized blocks are trace preserving")
}

/// Random full-rank density matrix (normalized G·G† for Gaussian G).
pub fn random_density_matrix(dim: usize, rng: &mut impl rand::Rng) -> DensityMatrix {
    let g = random_gaussian(dim, dim, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace();
    DensityMatrix::new(m.scaled(Complex64::ONE / tr)).expect("G·G†/Tr is a density matrix")
}

/// Dephasing channel {|n⟩⟨n|} on the given dimension.
pub fn dephasing_channel(dim: usize) -> KrausChannel {
    let ops: Vec<CMatrix> = (0..dim)
        .map(|n| {
            let mut e = CMatrix::zeros(dim, dim);
            e[(n, n)] = Complex64::ONE;
            e
        })
        .collect();
    KrausChannel::new(dim, dim, ops).expect("projectors onto a basis sum to I")
}

/// Collapse channel {|ψ⟩⟨n|}: sends every state to |ψ⟩⟨ψ|.
pub fn collapse_channel(target_state: &[Complex64]) -> Result<KrausChannel> {
    let dim = target_state.len();
    let norm = linalg::vnorm(target_state);
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidChannel("collapse target must be a unit vector".into()));
    }
    let ops: Vec<CMatrix> = (0..dim)
        .map(|n| {
            let mut basis = vec![Complex64::ZERO; dim];
            basis[n] = Complex64::ONE;
            CMatrix::outer(target_state, &basis)
        })
        .collect();
    KrausChannel::new(dim, dim, ops)
}

/// Hilbert-Schmidt Gram matrix [Tr(V_i†V_j)] of an operator list.
pub fn gram_matrix(ops: &[CMatrix]) -> CMatrix {
    CMatrix::from_fn(ops.len(), ops.len(), |i, j| hs_inner(&ops[i], &ops[j]))
}

/// Choi sanity checks used by tests and the file loader: PSD and partial
/// trace over the output factor equal to I on the source space.
pub fn choi_checks(ch: &KrausChannel) -> (f64, f64) {
    let j = choi_matrix(ch);
    let (vals, _) = hermitian_eigen(&j);
    let min_eig = vals[0];
    let pt = partial_trace_second(&j, ch.source_dim(), ch.target_dim());
    let pt_dev = pt.max_abs_diff(&CMatrix::identity(ch.source_dim()));
    (min_eig, pt_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Naive Σ_k V ρ V† with explicit index loops, independent of CMatrix::matmul.
    fn apply_naive(ops: &[CMatrix], rho: &CMatrix) -> CMatrix {
        let t = ops[0].rows();
        let s = ops[0].cols();
        let mut out = CMatrix::zeros(t, t);
        for v in ops {
            for i in 0..t {
                for j in 0..t {
                    let mut acc = Complex64::ZERO;
                    for a in 0..s {
                        for b in 0..s {
                            acc += v[(i, a)] * rho[(a, b)] * v[(j, b)].conj();
                        }
                    }
                    out[(i, j)] += acc;
                }
            }
        }
        out
    }

    #[test]
    fn identity_channel_is_noop() {
        let ch = KrausChannel::identity(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density_matrix(2, &mut rng);
        let out = apply_channel(&ch, &rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn dephasing_zeroes_off_diagonals() {
        // ρ = ½(I + σ_x) → ½ I
        let rho = DensityMatrix::new(
            CMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.5, 0.0)], vec![c(0.5, 0.0), c(0.5, 0.0)]])
                .unwrap(),
        )
        .unwrap();
        let out = apply_channel(&dephasing_channel(2), &rho).unwrap();
        let expect = CMatrix::identity(2).scaled(c(0.5, 0.0));
        assert!(out.matrix().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn random_rectangular_channel_matches_naive_oracle() {
        let ch = random_channel(2, 3, 2, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density_matrix(2, &mut rng);
        let out = apply_channel(&ch, &rho).unwrap();
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(out.min_eigenvalue() > -1e-10);
        let naive = apply_naive(ch.ops(), rho.matrix());
        assert!(out.matrix().max_abs_diff(&naive) < 1e-13);
    }

    #[test]
    fn apply_channel_rejects_dimension_mismatch() {
        let ch = random_channel(2, 3, 2, 43);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density_matrix(3, &mut rng);
        assert!(matches!(
            apply_channel(&ch, &rho),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn trace_preservation_checks() {
        let id = CMatrix::identity(2);
        assert!(is_trace_preserving(std::slice::from_ref(&id), 1e-12));
        let half = id.scaled(c(1.0 / 2f64.sqrt(), 0.0));
        assert!(!is_trace_preserving(&[half], 1e-12));
        assert!(is_trace_preserving(dephasing_channel(2).ops(), 1e-12));
    }

    #[test]
    fn choi_of_identity_is_maximally_entangled_projector() {
        let j = choi_matrix(&KrausChannel::identity(2));
        assert!((j.trace().re - 2.0).abs() < 1e-14);
        let (vals, _) = hermitian_eigen(&j);
        assert!(vals[3] > 1.9999999);
        assert!(vals[2].abs() < 1e-12); // rank 1
        let vec = CMatrix::identity(2).vec_col();
        let expect = CMatrix::outer(&vec, &vec);
        assert!(j.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn choi_matches_brute_force_on_matrix_units() {
        let ch = random_channel(3, 2, 3, 7);
        let s = ch.source_dim();
        let mut expect = CMatrix::zeros(s * ch.target_dim(), s * ch.target_dim());
        for i in 0..s {
            for j in 0..s {
                let mut unit = CMatrix::zeros(s, s);
                unit[(i, j)] = Complex64::ONE;
                let mut e_ij = CMatrix::zeros(s, s);
                e_ij[(i, j)] = Complex64::ONE;
                expect = &expect + &e_ij.kron(&ch.apply_raw(&unit));
            }
        }
        assert!(choi_matrix(&ch).max_abs_diff(&expect) < 1e-13);
        let (min_eig, pt_dev) = choi_checks(&ch);
        assert!(min_eig > -1e-12);
        assert!(pt_dev < 1e-12);
    }

    #[test]
    fn canonical_collapses_redundant_copies() {
        let half = CMatrix::identity(2).scaled(c(1.0 / 2f64.sqrt(), 0.0));
        let ch = KrausChannel::new(2, 2, vec![half.clone(), half]).unwrap();
        let (canon, k) = canonical_kraus(&ch, 1e-9);
        assert_eq!(k, 1);
        assert!(canon.ops()[0].max_abs_diff(&CMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn canonical_keeps_projector_count() {
        let (_, k) = canonical_kraus(&dephasing_channel(2), 1e-9);
        assert_eq!(k, 2);
    }

    #[test]
    fn canonical_of_overcomplete_random_channel() {
        let ch = random_channel(2, 2, 6, 99);
        let (canon, k) = canonical_kraus(&ch, 1e-9);
        assert!(k <= 4, "Kraus number bounded by dim²");
        assert!(canon.is_canonical(tol::LI_REL));
        // Action agrees on all matrix units.
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = CMatrix::zeros(2, 2);
                unit[(i, j)] = Complex64::ONE;
                let diff = ch.apply_raw(&unit).max_abs_diff(&canon.apply_raw(&unit));
                assert!(diff < 1e-12);
            }
        }
        // Gram matrix of the canonical ops has full rank (orthogonal ops).
        let g = gram_matrix(canon.ops());
        let (vals, _) = hermitian_eigen(&g);
        assert!(vals[0] > 1e-12);
    }

    #[test]
    fn choi_rank_equals_kraus_number_for_random_channels() {
        for (i, (s, t)) in [(2, 2), (3, 3), (4, 4), (2, 3), (3, 2)].iter().enumerate() {
            for count in 1..=3 {
                if count * t < *s {
                    continue;
                }
                let ch = random_channel(*s, *t, count, 1000 + (i * 7 + count) as u64);
                let (canon, k) = canonical_kraus(&ch, 1e-9);
                assert_eq!(k, kraus_number(&ch));
                assert_eq!(k, count.min(s * t));
                assert!(choi_distance(&ch, &canon) < 1e-10);
            }
        }
    }

    #[test]
    fn connecting_matrix_single_op_split() {
        let theta = 0.7;
        let ch = random_channel(2, 2, 1, 3);
        let v = ch.ops()[0].clone();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let b1 = v.scaled(c(inv_sqrt2, 0.0));
        let b2 = v.scaled(Complex64::from_polar(inv_sqrt2, theta));
        let rep_b = KrausChannel::new(2, 2, vec![b1, b2]).unwrap();
        let m = connecting_matrix(&ch, &rep_b, 1e-10).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 1));
        assert!((m[(0, 0)] - c(inv_sqrt2, 0.0)).norm() < 1e-12);
        assert!((m[(1, 0)] - Complex64::from_polar(inv_sqrt2, theta)).norm() < 1e-12);
        let mhm = m.adjoint().matmul(&m);
        assert!(mhm.max_abs_diff(&CMatrix::identity(1)) < 1e-12);
    }

    #[test]
    fn connecting_matrix_identity_for_same_rep() {
        let (canon, k) = canonical_kraus(&random_channel(3, 3, 3, 8), 1e-9);
        let m = connecting_matrix(&canon, &canon, 1e-10).unwrap();
        assert!(m.max_abs_diff(&CMatrix::identity(k)) < 1e-11);
    }

    #[test]
    fn connecting_matrix_roundtrips_random_isometry() {
        let (canon, k) = canonical_kraus(&random_channel(2, 2, 3, 21), 1e-9);
        let l = k + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let m_true = linalg::random_unitary(l, &mut rng).block(0, 0, l, k);
        let ops_b: Vec<CMatrix> = (0..l)
            .map(|row| {
                let mut op = CMatrix::zeros(2, 2);
                for (kk, a) in canon.ops().iter().enumerate() {
                    op = &op + &a.scaled(m_true[(row, kk)]);
                }
                op
            })
            .collect();
        let rep_b = KrausChannel::new(2, 2, ops_b).unwrap();
        let m = connecting_matrix(&canon, &rep_b, 1e-9).unwrap();
        assert!(m.max_abs_diff(&m_true) < 1e-10);
        assert!(m.adjoint().matmul(&m).max_abs_diff(&CMatrix::identity(k)) < 1e-10);
    }

    #[test]
    fn connecting_matrix_rejects_different_channels() {
        let a = random_channel(2, 2, 2, 1);
        let b = random_channel(2, 2, 2, 2);
        match connecting_matrix(&a, &b, 1e-10) {
            Err(Error::ChannelsDiffer { .. }) => {}
            other => panic!("expected ChannelsDiffer, got {other:?}"),
        }
    }

    #[test]
    fn connecting_matrix_rejects_dependent_reference() {
        let half = CMatrix::identity(2).scaled(c(1.0 / 2f64.sqrt(), 0.0));
        let dep = KrausChannel::new(2, 2, vec![half.clone(), half]).unwrap();
        match connecting_matrix(&dep, &dep, 1e-10) {
            Err(Error::NotLinearlyIndependent { rank, count }) => {
                assert_eq!((rank, count), (1, 2));
            }
            other => panic!("expected NotLinearlyIndependent, got {other:?}"),
        }
    }

    #[test]
    fn random_channel_contract() {
        // Single Kraus op is unitary.
        let u_ch = random_channel(2, 2, 1, 5);
        let u = &u_ch.ops()[0];
        assert!(u.adjoint().matmul(u).max_abs_diff(&CMatrix::identity(2)) < 1e-12);
        // Trace preserving at 1e-12.
        let ch = random_channel(2, 2, 4, 5);
        assert!(ch.is_trace_preserving(1e-12));
        // Bit-for-bit determinism.
        let again = random_channel(2, 2, 4, 5);
        assert_eq!(ch, again);
    }

    #[test]
    fn density_validation_rejects_bad_input() {
        let not_herm =
            CMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.1, 0.2)], vec![c(0.3, 0.0), c(0.5, 0.0)]])
                .unwrap();
        assert!(DensityMatrix::new(not_herm).is_err());
        let neg = CMatrix::from_rows(&[vec![c(1.5, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-0.5, 0.0)]])
            .unwrap();
        assert!(DensityMatrix::new(neg).is_err());
        let tr2 = CMatrix::identity(2);
        assert!(DensityMatrix::new(tr2).is_err());
    }

    #[test]
    fn pure_state_from_polar() {
        let psi = vec![Complex64::from_polar(1.0, PI / 3.0), Complex64::ZERO];
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
    }
}

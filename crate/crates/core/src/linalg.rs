//! Dense complex linear algebra for small matrices.
//!
//! Everything in this module is deterministic: fixed sweep orders, no
//! threading, no randomized pivoting. Matrices are stored row-major as flat
//! `Vec<Complex64>`. Sizes stay small (a few hundred at most), so Jacobi-type
//! iterations are accurate and fast enough.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; fails on ragged input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Option<Self> {
        let r = rows.len();
        if r == 0 {
            return None;
        }
        let c = rows[0].len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return None;
        }
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &z) in row.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Some(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn scaled(&self, z: Complex64) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| z * self[(i, j)])
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product, first factor major: `(A⊗B)[(i1,i2),(j1,j2)] = A[i1,j1]·B[i2,j2]`.
    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self[(i1, j1)];
                if a == Complex64::ZERO {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out[(i1 * other.rows + i2, j1 * other.cols + j2)] = a * other[(i2, j2)];
                    }
                }
            }
        }
        out
    }

    /// Largest entry magnitude (max-entry norm used for comparisons throughout).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Hermitian part (A + A†)/2.
    pub fn hermitized(&self) -> CMatrix {
        let adj = self.adjoint();
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + adj[(i, j)])
        })
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex64]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn from_columns(dim: usize, cols: &[Vec<Complex64>]) -> CMatrix {
        let mut m = CMatrix::zeros(dim, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        m
    }

    /// Column-stacked flattening: `out[j·rows + i] = A[i,j]`.
    pub fn vec_col(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    pub fn from_vec_col(rows: usize, cols: usize, v: &[Complex64]) -> CMatrix {
        assert_eq!(v.len(), rows * cols);
        CMatrix::from_fn(rows, cols, |i, j| v[j * rows + i])
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        CMatrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &CMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Rank-one matrix u·v†.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> CMatrix {
        CMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }
}

/// Hilbert-Schmidt inner product Tr(A†B).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// Inner product of vectors, conjugate-linear in the first argument.
pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Partial trace over the second tensor factor of a matrix on H₁⊗H₂.
pub fn partial_trace_second(x: &CMatrix, dim1: usize, dim2: usize) -> CMatrix {
    assert_eq!(x.rows(), dim1 * dim2);
    assert!(x.is_square());
    CMatrix::from_fn(dim1, dim1, |i, j| {
        (0..dim2).map(|m| x[(i * dim2 + m, j * dim2 + m)]).sum()
    })
}

const MAX_JACOBI_SWEEPS: usize = 80;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unitary of
/// eigenvectors as columns. The input is Hermitized first, so tiny
/// antisymmetric noise is tolerated.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    assert!(a.is_square(), "hermitian_eigen needs a square matrix");
    let n = a.rows();
    let mut h = a.hermitized();
    let mut v = CMatrix::identity(n);
    if n <= 1 {
        return ((0..n).map(|i| h[(i, i)].re).collect(), v);
    }
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let thresh = scale * 1e-15;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = h[(p, q)];
                if g.norm() <= thresh {
                    continue;
                }
                rotated = true;
                let phase = g / g.norm();
                let tau = (h[(q, q)].re - h[(p, p)].re) / (2.0 * g.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = s * phase; // s·e^{iφ}
                let spc = s * phase.conj(); // s·e^{-iφ}
                // Column update: H ← H·R, V ← V·R.
                for k in 0..n {
                    let hp = h[(k, p)];
                    let hq = h[(k, q)];
                    h[(k, p)] = c * hp - spc * hq;
                    h[(k, q)] = sp * hp + c * hq;
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = c * vp - spc * vq;
                    v[(k, q)] = sp * vp + c * vq;
                }
                // Row update: H ← R†·H.
                for k in 0..n {
                    let hp = h[(p, k)];
                    let hq = h[(q, k)];
                    h[(p, k)] = c * hp - sp * hq;
                    h[(q, k)] = spc * hp + c * hq;
                }
                // Kill the rotated pivot's numerical dust exactly.
                h[(p, q)] = Complex64::ZERO;
                h[(q, p)] = Complex64::ZERO;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| h[(i, i)].re.total_cmp(&h[(j, j)].re));
    let values: Vec<f64> = order.iter().map(|&i| h[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (values, vectors)
}

/// Singular value decomposition A = U·diag(s)·V†.
///
/// `u` is rows×cols (columns for zero singular values are zero), `v` is
/// cols×cols unitary, `s` is sorted descending with length cols. Computed by
/// one-sided Jacobi orthogonalization of columns; wide matrices are padded
/// with zero rows so the full right null space is always available.
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let mut padded = CMatrix::zeros(n, n);
        padded.set_block(0, 0, a);
        let full = svd_tall(&padded);
        return Svd {
            u: full.u.block(0, 0, m, n),
            s: full.s,
            v: full.v,
        };
    }
    svd_tall(a)
}

fn svd_tall(a: &CMatrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let mut work = a.clone();
    let mut v = CMatrix::identity(n);
    if n > 1 {
        let scale = work.max_abs().max(f64::MIN_POSITIVE);
        let tiny = (scale * 1e-18).powi(2);
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut rotated = false;
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let mut gpp = 0.0;
                    let mut gqq = 0.0;
                    let mut gpq = Complex64::ZERO;
                    for k in 0..m {
                        let ap = work[(k, p)];
                        let aq = work[(k, q)];
                        gpp += ap.norm_sqr();
                        gqq += aq.norm_sqr();
                        gpq += ap.conj() * aq;
                    }
                    if gpp <= tiny || gqq <= tiny {
                        continue;
                    }
                    if gpq.norm() <= 1e-15 * (gpp * gqq).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gpq / gpq.norm();
                    let tau = (gqq - gpp) / (2.0 * gpq.norm());
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let sp = s * phase;
                    let spc = s * phase.conj();
                    for k in 0..m {
                        let ap = work[(k, p)];
                        let aq = work[(k, q)];
                        work[(k, p)] = c * ap - spc * aq;
                        work[(k, q)] = sp * ap + c * aq;
                    }
                    for k in 0..n {
                        let vp = v[(k, p)];
                        let vq = v[(k, q)];
                        v[(k, p)] = c * vp - spc * vq;
                        v[(k, q)] = sp * vp + c * vq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| work[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    for (jj, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            for i in 0..m {
                u[(i, jj)] = work[(i, j)] / norms[j];
            }
        }
        for i in 0..n {
            vs[(i, jj)] = v[(i, j)];
        }
    }
    norms.clear();
    Svd { u, s, v: vs }
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn rank_from_singular_values(s: &[f64], rel_tol: f64) -> usize {
    match s.first() {
        None => 0,
        Some(&smax) if smax <= 0.0 => 0,
        Some(&smax) => s.iter().filter(|&&x| x > rel_tol * smax).count(),
    }
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    svd(a).s.first().copied().unwrap_or(0.0)
}

pub struct LeastSquares {
    pub solution: CMatrix,
    pub rank: usize,
    /// Frobenius norm of A·X − B.
    pub residual: f64,
}

/// Minimum-norm least-squares solution of A·X = B via SVD, with singular
/// values below `rel_tol`·σ_max treated as zero.
pub fn least_squares(a: &CMatrix, b: &CMatrix, rel_tol: f64) -> LeastSquares {
    assert_eq!(a.rows(), b.rows(), "least_squares row mismatch");
    let dec = svd(a);
    let rank = rank_from_singular_values(&dec.s, rel_tol);
    let mut x = CMatrix::zeros(a.cols(), b.cols());
    for j in 0..rank {
        let uj = dec.u.column(j);
        let vj = dec.v.column(j);
        for col in 0..b.cols() {
            let coeff: Complex64 = (0..b.rows()).map(|i| uj[i].conj() * b[(i, col)]).sum();
            let scaled = coeff / dec.s[j];
            for i in 0..a.cols() {
                x[(i, col)] += vj[i] * scaled;
            }
        }
    }
    let residual = (&a.matmul(&x) - b).frobenius_norm();
    LeastSquares {
        solution: x,
        rank,
        residual,
    }
}

/// Solve a square system A·X = B by LU with partial pivoting.
/// Returns `None` when a pivot collapses to (numerical) zero.
pub fn solve_square(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    assert!(a.is_square());
    assert_eq!(a.rows(), b.rows());
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let mut pivot = col;
        let mut best = lu[(col, col)].norm();
        for r in col + 1..n {
            let mag = lu[(r, col)].norm();
            if mag > best {
                best = mag;
                pivot = r;
            }
        }
        if best <= scale * 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
            }
            for j in 0..x.cols() {
                let tmp = x[(col, j)];
                x[(col, j)] = x[(pivot, j)];
                x[(pivot, j)] = tmp;
            }
        }
        let d = lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] / d;
            if factor == Complex64::ZERO {
                continue;
            }
            lu[(r, col)] = Complex64::ZERO;
            for j in col + 1..n {
                let t = lu[(col, j)];
                lu[(r, j)] -= factor * t;
            }
            for j in 0..x.cols() {
                let t = x[(col, j)];
                x[(r, j)] -= factor * t;
            }
        }
    }
    for col in (0..n).rev() {
        let d = lu[(col, col)];
        for j in 0..x.cols() {
            let mut acc = x[(col, j)];
            for k in col + 1..n {
                acc -= lu[(col, k)] * x[(k, j)];
            }
            x[(col, j)] = acc / d;
        }
    }
    Some(x)
}

/// Orthonormalize the columns of `a` by modified Gram-Schmidt with
/// re-orthogonalization. Panics if the columns are not linearly independent.
pub fn orthonormalize_columns(a: &CMatrix) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = (0..a.cols()).map(|j| a.column(j)).collect();
    for j in 0..cols.len() {
        for _pass in 0..2 {
            for i in 0..j {
                let (head, tail) = cols.split_at_mut(j);
                let proj = vdot(&head[i], &tail[0]);
                for (t, h) in tail[0].iter_mut().zip(&head[i]) {
                    *t -= proj * h;
                }
            }
        }
        let norm = vnorm(&cols[j]);
        assert!(
            norm > 1e-12,
            "orthonormalize_columns: column {j} is linearly dependent"
        );
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    CMatrix::from_columns(a.rows(), &cols)
}

/// Extend a set of orthonormal vectors to an orthonormal basis of C^dim.
/// Candidates are the standard basis vectors taken in index order, so the
/// result is deterministic. Returns only the added vectors.
pub fn orthonormal_completion(existing: &[Vec<Complex64>], dim: usize) -> Vec<Vec<Complex64>> {
    let mut added: Vec<Vec<Complex64>> = Vec::new();
    for idx in 0..dim {
        if existing.len() + added.len() == dim {
            break;
        }
        let mut cand = vec![Complex64::ZERO; dim];
        cand[idx] = Complex64::ONE;
        for _pass in 0..2 {
            for v in existing.iter().chain(added.iter()) {
                let proj = vdot(v, &cand);
                for (c, w) in cand.iter_mut().zip(v) {
                    *c -= proj * w;
                }
            }
        }
        let norm = vnorm(&cand);
        if norm > 1e-7 {
            for z in cand.iter_mut() {
                *z /= norm;
            }
            added.push(cand);
        }
    }
    assert_eq!(
        existing.len() + added.len(),
        dim,
        "orthonormal_completion failed: input vectors not orthonormal?"
    );
    added
}

/// Deterministic orthonormal basis of the range of a projector `p` (n×n,
/// p² = p). Standard basis vectors are projected and orthonormalized in
/// index order.
pub fn projector_range_basis(p: &CMatrix) -> Vec<Vec<Complex64>> {
    assert!(p.is_square());
    let n = p.rows();
    let expected = p.trace().re.round() as usize;
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for idx in 0..n {
        if basis.len() == expected {
            break;
        }
        let mut cand = p.column(idx).to_vec();
        // Projector columns are p·e_idx, already in the range.
        for _pass in 0..2 {
            for v in &basis {
                let proj = vdot(v, &cand);
                for (c, w) in cand.iter_mut().zip(v) {
                    *c -= proj * w;
                }
            }
        }
        let norm = vnorm(&cand);
        if norm > 1e-7 {
            for z in cand.iter_mut() {
                *z /= norm;
            }
            basis.push(cand);
        }
    }
    assert_eq!(basis.len(), expected, "projector_range_basis rank mismatch");
    basis
}

/// Complex Gaussian matrix with i.i.d. entries (re, im) ~ N(0, 1/2).
pub fn random_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * half, im * half)
    })
}

/// Haar-like random unitary from QR of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    orthonormalize_columns(&random_gaussian(n, n, rng))
}

/// Random unit vector in C^dim.
pub fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let g = random_gaussian(dim, 1, rng);
        let v = g.column(0);
        let norm = vnorm(&v);
        if norm > 1e-6 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

//! Dense complex linear algebra used by every exact-diagonalization path.
//!
//! Hermitian matrices are diagonalized block by block: the basis is split into
//! the connected components of the nonzero pattern (for number-conserving
//! Hamiltonians these are the particle-number sectors), and each block goes to
//! LAPACK, through the real symmetric driver when the block has no imaginary
//! part. Functions of Hermitian matrices are always evaluated in the
//! eigenbasis.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, EigValsh, Inverse, SVD, UPLO};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::par;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// `AB - BA`; entrywise `A_jk (b_k - b_j)` when `B` is diagonal, and the
/// mirror image when `A` is.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    if a.is_square() && a.dim() == b.dim() {
        if is_diagonal(b) {
            let d = b.diag();
            return Array2::from_shape_fn(a.dim(), |(j, k)| a[[j, k]] * (d[k] - d[j]));
        }
        if is_diagonal(a) {
            let d = a.diag();
            return Array2::from_shape_fn(b.dim(), |(j, k)| b[[j, k]] * (d[j] - d[k]));
        }
    }
    a.dot(b) - b.dot(a)
}

pub fn anticommutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) + b.dot(a)
}

pub fn identity(dim: usize) -> Array2<C64> {
    Array2::from_diag_elem(dim, C64::new(1.0, 0.0))
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let row = a.row(i);
        let col = b.column(i);
        for k in 0..n {
            acc += row[k] * col[k];
        }
    }
    acc
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

pub fn hermitian_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for i in 0..n {
        for j in i..n {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

pub fn is_finite(a: &Array2<C64>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_diagonal(a: &Array2<C64>) -> bool {
    a.indexed_iter().all(|((i, j), z)| i == j || (z.re == 0.0 && z.im == 0.0))
}

pub fn hs_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
            .assign(&b.mapv(|y| x * y));
    }
    out
}

/// Connected components of the nonzero pattern of `a` (treated as an
/// undirected graph on the basis indices), each sorted ascending, ordered by
/// smallest member.
pub fn pattern_blocks(a: &Array2<C64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for ((i, j), z) in a.indexed_iter() {
        if i != j && (z.re != 0.0 || z.im != 0.0) {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                parent[hi] = lo;
            }
        }
    }
    let mut root_slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[root_slot[r]].push(i);
    }
    blocks
}

fn sub_block(a: &Array2<C64>, rows: &[usize], cols: &[usize]) -> Array2<C64> {
    a.select(Axis(0), rows).select(Axis(1), cols)
}

fn is_real(a: &Array2<C64>) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

/// Hermitian eigendecomposition of a single dense block, ascending values.
pub fn eigh_dense(a: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    if a.nrows() == 1 {
        return Ok((vec![a[[0, 0]].re], Array2::from_elem((1, 1), c(1.0))));
    }
    if is_real(a) {
        let re = a.mapv(|z| z.re);
        let (vals, vecs) = re.eigh(UPLO::Lower)?;
        Ok((vals.to_vec(), vecs.mapv(c)))
    } else {
        let (vals, vecs) = a.eigh(UPLO::Lower)?;
        Ok((vals.to_vec(), vecs))
    }
}

pub fn eigvalsh(a: &Array2<C64>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(a.nrows());
    for block in pattern_blocks(a) {
        let sub = sub_block(a, &block, &block);
        if sub.nrows() == 1 {
            out.push(sub[[0, 0]].re);
        } else if is_real(&sub) {
            out.extend(sub.mapv(|z| z.re).eigvalsh(UPLO::Lower)?.iter());
        } else {
            out.extend(sub.eigvalsh(UPLO::Lower)?.iter());
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(out)
}

/// Singular values of a general matrix (block-decomposed), descending.
pub fn singular_values(a: &Array2<C64>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(a.nrows());
    // Union-find is undirected, so the blocks cover rows and columns jointly.
    for block in pattern_blocks(a) {
        let sub = sub_block(a, &block, &block);
        if sub.nrows() == 1 {
            out.push(sub[[0, 0]].norm());
            continue;
        }
        let (_, sv, _) = sub.svd(false, false)?;
        out.extend(sv.iter());
    }
    out.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(out)
}

/// Operator (spectral) norm.
pub fn op_norm(a: &Array2<C64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

pub fn trace_norm(a: &Array2<C64>) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// `-Tr(rho ln rho)` from the spectrum, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &Array2<C64>) -> Result<f64> {
    Ok(eigvalsh(rho)?
        .into_iter()
        .filter(|&r| r > 0.0)
        .map(|r| -r * r.ln())
        .sum())
}

/// One connected block of a [`Spectrum`].
#[derive(Clone, Debug)]
pub struct SpectralBlock {
    pub states: Vec<usize>,
    pub values: Vec<f64>,
    /// Columns are eigenvectors, rows indexed like `states`.
    pub vectors: Array2<C64>,
}

/// Eigendecomposition of a Hermitian matrix organised by pattern blocks.
///
/// Eigen-indices run block by block; [`Spectrum::values`] follows the same order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    dim: usize,
    blocks: Vec<SpectralBlock>,
    offsets: Vec<usize>,
}

impl Spectrum {
    pub fn of(h: &Array2<C64>) -> Result<Self> {
        let dim = h.nrows();
        if h.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: h.ncols() });
        }
        let groups = pattern_blocks(h);
        let solved: Vec<Result<SpectralBlock>> = par::map_slice(&groups, |states| {
            let sub = sub_block(h, states, states);
            let (values, vectors) = eigh_dense(&sub)?;
            Ok(SpectralBlock { states: states.clone(), values, vectors })
        });
        let blocks = solved.into_iter().collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut off = 0;
        for b in &blocks {
            offsets.push(off);
            off += b.states.len();
        }
        Ok(Spectrum { dim, blocks, offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[SpectralBlock] {
        &self.blocks
    }

    /// Eigenvalues in eigen-index order.
    pub fn values(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Dense `f(H)`.
    pub fn apply_fn<F: Fn(f64) -> C64>(&self, f: F) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for b in &self.blocks {
            let fv: Vec<C64> = b.values.iter().map(|&x| f(x)).collect();
            let mut scaled = b.vectors.clone();
            for (mut col, fx) in scaled.columns_mut().into_iter().zip(&fv) {
                col.mapv_inplace(|z| z * fx);
            }
            let blk = scaled.dot(&adjoint(&b.vectors));
            for (a, &i) in b.states.iter().enumerate() {
                for (bb, &j) in b.states.iter().enumerate() {
                    out[[i, j]] = blk[[a, bb]];
                }
            }
        }
        out
    }

    /// Dense eigenvector matrix `V` with columns in eigen-index order.
    pub fn eigenvectors(&self) -> Array2<C64> {
        let mut v = Array2::zeros((self.dim, self.dim));
        for (b, &off) in self.blocks.iter().zip(&self.offsets) {
            for (a, &i) in b.states.iter().enumerate() {
                for k in 0..b.values.len() {
                    v[[i, off + k]] = b.vectors[[a, k]];
                }
            }
        }
        v
    }

    /// `V^* A V`, the matrix of `a` in the eigenbasis.
    pub fn to_eigenbasis(&self, a: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (bs, &os) in self.blocks.iter().zip(&self.offsets) {
            let vs_adj = adjoint(&bs.vectors);
            for (bt, &ot) in self.blocks.iter().zip(&self.offsets) {
                let sub = sub_block(a, &bs.states, &bt.states);
                if sub.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    continue;
                }
                let t = vs_adj.dot(&sub).dot(&bt.vectors);
                out.slice_mut(s![os..os + bs.states.len(), ot..ot + bt.states.len()])
                    .assign(&t);
            }
        }
        out
    }

    /// Inverse of [`Spectrum::to_eigenbasis`].
    pub fn from_eigenbasis(&self, a: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (bs, &os) in self.blocks.iter().zip(&self.offsets) {
            for (bt, &ot) in self.blocks.iter().zip(&self.offsets) {
                let sub = a.slice(s![os..os + bs.states.len(), ot..ot + bt.states.len()]);
                if sub.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    continue;
                }
                let t = bs.vectors.dot(&sub).dot(&adjoint(&bt.vectors));
                for (x, &i) in bs.states.iter().enumerate() {
                    for (y, &j) in bt.states.iter().enumerate() {
                        out[[i, j]] = t[[x, y]];
                    }
                }
            }
        }
        out
    }

    /// `e^{iHt} A e^{-iHt}`.
    pub fn heisenberg(&self, a: &Array2<C64>, t: f64) -> Array2<C64> {
        if t == 0.0 {
            return a.clone();
        }
        let vals = self.values();
        let phases: Vec<C64> = vals.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
        let mut m = self.to_eigenbasis(a);
        for ((j, k), z) in m.indexed_iter_mut() {
            *z *= phases[j] * phases[k].conj();
        }
        self.from_eigenbasis(&m)
    }
}

/// Matrix exponential of a general complex matrix: scaling and squaring with
/// the degree-13 Pade approximant.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let a = a.mapv(|z| z * scale);
    let id = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let sc = |m: &Array2<C64>, x: f64| m.mapv(|z| z * x);
    let u_inner = sc(&a6, B[13]) + sc(&a4, B[11]) + sc(&a2, B[9]);
    let u = a.dot(
        &(a6.dot(&u_inner) + sc(&a6, B[7]) + sc(&a4, B[5]) + sc(&a2, B[3]) + sc(&id, B[1])),
    );
    let v_inner = sc(&a6, B[12]) + sc(&a4, B[10]) + sc(&a2, B[8]);
    let v = a6.dot(&v_inner) + sc(&a6, B[6]) + sc(&a4, B[4]) + sc(&a2, B[2]) + sc(&id, B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.inv()?.dot(&p);
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Row-major vectorization: `vec(X)[i*n + j] = X[i, j]`.
pub fn vectorize(x: &Array2<C64>) -> Array1<C64> {
    Array1::from_iter(x.iter().copied())
}

pub fn unvectorize(v: &Array1<C64>, n: usize) -> Array2<C64> {
    Array2::from_shape_vec((n, n), v.to_vec()).expect("length n*n")
}

/// Superoperator of `X -> A X B` in row-major vectorization: `A (x) B^T`.
pub fn sandwich_superop(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    kron(a, &b.t().to_owned())
}

pub fn view_is_square(a: ArrayView2<C64>) -> bool {
    a.nrows() == a.ncols()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn diagonal_commutator_shortcut() {
        let mut r = rng::seeded(5);
        let a = rng::complex_gaussian_matrix(&mut r, 6);
        let d = Array2::from_diag(&Array1::from_iter((0..6).map(|k| C64::new(k as f64 * 0.3 - 1.0, 0.2))));
        let plain = |x: &Array2<C64>, y: &Array2<C64>| x.dot(y) - y.dot(x);
        assert!(max_abs_diff(&commutator(&a, &d), &plain(&a, &d)) < 1e-14);
        assert!(max_abs_diff(&commutator(&d, &a), &plain(&d, &a)) < 1e-14);
    }

    #[test]
    fn blocked_spectrum_reconstructs_matrix() {
        let mut r = rng::seeded(3);
        let h1 = rng::hermitian(&mut r, 5);
        let h2 = rng::hermitian(&mut r, 3);
        let mut h = Array2::zeros((8, 8));
        // Interleave the two blocks so the pattern split is non-trivial.
        let b1 = [0, 2, 4, 6, 7];
        let b2 = [1, 3, 5];
        for (x, &i) in b1.iter().enumerate() {
            for (y, &j) in b1.iter().enumerate() {
                h[[i, j]] = h1[[x, y]];
            }
        }
        for (x, &i) in b2.iter().enumerate() {
            for (y, &j) in b2.iter().enumerate() {
                h[[i, j]] = h2[[x, y]];
            }
        }
        let sp = Spectrum::of(&h).unwrap();
        assert_eq!(sp.blocks().len(), 2);
        let back = sp.apply_fn(c);
        assert!(max_abs_diff(&back, &h) < 1e-12);
        let v = sp.eigenvectors();
        let d = sp.to_eigenbasis(&h);
        let vals = sp.values();
        for i in 0..8 {
            assert!((d[[i, i]].re - vals[i]).abs() < 1e-12);
        }
        let h_again = v.dot(&d).dot(&adjoint(&v));
        assert!(max_abs_diff(&h_again, &h) < 1e-12);
        assert!(max_abs_diff(&sp.from_eigenbasis(&d), &h) < 1e-12);
    }

    #[test]
    fn expm_matches_spectral_exponential() {
        let mut r = rng::seeded(9);
        let h = rng::hermitian(&mut r, 6).mapv(|z| z * 3.0);
        let sp = Spectrum::of(&h).unwrap();
        let exact = sp.apply_fn(|e| C64::from_polar(1.0, -e));
        let pade = expm(&h.mapv(|z| -I * z)).unwrap();
        assert!(max_abs_diff(&exact, &pade) < 1e-12);
    }

    #[test]
    fn norms_agree_with_definitions() {
        let mut r = rng::seeded(1);
        let a = rng::complex_gaussian_matrix(&mut r, 7);
        let sv = singular_values(&a).unwrap();
        let ev = eigvalsh(&a.dot(&adjoint(&a))).unwrap();
        assert!((sv[0] * sv[0] - ev[6]).abs() < 1e-10 * ev[6]);
        let hs: f64 = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((hs - hs_norm(&a)).abs() < 1e-12 * hs);
    }

    #[test]
    fn sandwich_superop_matches_products() {
        let mut r = rng::seeded(2);
        let a = rng::complex_gaussian_matrix(&mut r, 3);
        let b = rng::complex_gaussian_matrix(&mut r, 3);
        let x = rng::complex_gaussian_matrix(&mut r, 3);
        let lhs = unvectorize(&sandwich_superop(&a, &b).dot(&vectorize(&x)), 3);
        assert!(max_abs_diff(&lhs, &a.dot(&x).dot(&b)) < 1e-12);
    }
}

//! Dense complex matrix helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn from_real(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

/// Pauli matrices (σx, σy, σz).
pub fn pauli() -> [CMatrix; 3] {
    let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let sy = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let sz = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    [sx, sy, sz]
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Real part of tr(A B), the Hilbert-Schmidt pairing for Hermitian arguments.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    s
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues ascend. Each eigenvector is phase-fixed so that its first
/// component with modulus above 1e-12 is real and positive; equal eigenvalues
/// are ordered lexicographically by the phase-fixed components.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = (0..n)
        .map(|k| (eig.eigenvalues[k], fix_phase(eig.eigenvectors.column(k).into_owned())))
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        if (la - lb).abs() > 1e-12 {
            return la.total_cmp(lb);
        }
        for (x, y) in va.iter().zip(vb.iter()) {
            let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
            if o != std::cmp::Ordering::Equal && (x - y).norm() > 1e-12 {
                return o.reverse();
            }
        }
        std::cmp::Ordering::Equal
    });
    let values = pairs.iter().map(|(l, _)| *l).collect();
    let vectors = CMatrix::from_columns(&pairs.into_iter().map(|(_, v)| v).collect::<Vec<_>>());
    (values, vectors)
}

pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    eigenvalues(m).last().copied().unwrap_or(0.0)
}

pub fn fix_phase(mut v: CVector) -> CVector {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
    v
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { c(f(vals[i]), 0.0) } else { ZERO });
    &vecs * d * vecs.adjoint()
}

/// Partial transpose on the second factor of a `da x db` bipartite operator.
pub fn partial_transpose_second(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let n = da * db;
    assert_eq!(m.nrows(), n);
    CMatrix::from_fn(n, n, |r, s| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (s / db, s % db);
        m[(i * db + l, k * db + j)]
    })
}

/// Pairwise summation; fixed association order makes the result independent
/// of how the slice was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let [sx, sy, sz] = pauli();
        let prod = &sx * &sy;
        assert!(max_abs_diff(&prod, &sz.scale(1.0).map(|z| z * I)) < 1e-15);
        assert!((trace_product(&sx, &sx) - 2.0).abs() < 1e-15);
        assert!(trace_product(&sx, &sz).abs() < 1e-15);
    }

    #[test]
    fn eigh_is_sorted_and_phase_fixed() {
        let m = from_real(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let (vals, vecs) = eigh(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        for k in 0..2 {
            let first = vecs[(0, k)];
            assert!(first.im.abs() < 1e-14 && first.re > 0.0);
        }
        let back = &vecs * diag(&vals) * vecs.adjoint();
        assert!(max_abs_diff(&back, &m) < 1e-12);
    }

    #[test]
    fn partial_transpose_of_product_is_product_of_transposes() {
        let a = from_real(&[&[0.7, 0.1], &[0.1, 0.3]]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.5, 0.0)]);
        let pt = partial_transpose_second(&kron(&a, &b), 2, 2);
        assert!(max_abs_diff(&pt, &kron(&a, &b.transpose())) < 1e-15);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-10);
    }
}

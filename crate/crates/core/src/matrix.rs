//! Row-major square-matrix helpers shared by the alignment routines.
//!
//! Embedding transforms are small (d×d with d in the hundreds at most), so
//! plain `Vec<f64>` buffers with straightforward loops are enough; the only
//! factorizations needed (SVD, QR) are delegated to nalgebra.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::fmath;

pub(crate) fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

pub(crate) fn zeros(d: usize) -> Vec<f64> {
    vec![0.0; d * d]
}

/// acc += a · b, all row-major d×d.
pub(crate) fn add_matmul(acc: &mut [f64], a: &[f64], b: &[f64], d: usize) {
    debug_assert_eq!(acc.len(), d * d);
    debug_assert_eq!(a.len(), d * d);
    debug_assert_eq!(b.len(), d * d);
    for i in 0..d {
        for l in 0..d {
            let ail = a[i * d + l];
            if ail == 0.0 {
                continue;
            }
            let brow = &b[l * d..(l + 1) * d];
            let crow = &mut acc[i * d..(i + 1) * d];
            for j in 0..d {
                crow[j] += ail * brow[j];
            }
        }
    }
}

pub(crate) fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = zeros(d);
    add_matmul(&mut out, a, b, d);
    out
}

pub(crate) fn transposed(a: &[f64], d: usize) -> Vec<f64> {
    let mut out = zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = a[i * d + j];
        }
    }
    out
}

/// Sum of elementwise products; with `b = a` this is ‖a‖²_F.
pub(crate) fn frob_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        s += x * y;
    }
    s
}

/// ‖TᵀT − I‖_F, the defect used by the orthogonality invariant.
pub(crate) fn orthogonality_defect(t: &[f64], d: usize) -> f64 {
    let mut sq = 0.0;
    for i in 0..d {
        for j in 0..d {
            // (TᵀT)_{ij} = column i · column j
            let mut g = 0.0;
            for l in 0..d {
                g += t[l * d + i] * t[l * d + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            let r = g - target;
            sq += r * r;
        }
    }
    fmath::sqrt(sq)
}

/// y = T · x for a row-major d×d transform.
pub(crate) fn apply(t: &[f64], x: &[f64], y: &mut [f64], d: usize) {
    debug_assert_eq!(x.len(), d);
    debug_assert_eq!(y.len(), d);
    for (i, out) in y.iter_mut().enumerate() {
        let row = &t[i * d..(i + 1) * d];
        let mut s = 0.0;
        for j in 0..d {
            s += row[j] * x[j];
        }
        *out = s;
    }
}

/// Nearest orthogonal matrix in Frobenius norm: UVᵀ from the SVD UΣVᵀ of `m`.
///
/// Defined for every finite matrix; a rank-deficient input yields one of the
/// (non-unique) valid polar factors, whichever the SVD picks.
pub(crate) fn polar_factor(m: &[f64], d: usize) -> Vec<f64> {
    debug_assert_eq!(m.len(), d * d);
    let svd = DMatrix::from_row_slice(d, d, m).svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let p = u * v_t;
    let mut out = zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = p[(i, j)];
        }
    }
    out
}

//! Dense complex linear-algebra primitives shared across the crate.
//!
//! The matrix exponential uses Padé scaling-and-squaring with degree
//! selection per the 1-norm (degrees 3/5/7/9/13), which holds relative
//! accuracy near machine precision for the operator norms seen here.

use nalgebra::{DMatrix, DVector};

use crate::C64;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
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

/// Maximum absolute column sum.
pub fn one_norm(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sv = m.clone().singular_values();
    sv.iter().fold(0.0f64, |a, &b| a.max(b))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let eig = nalgebra::linalg::SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

fn pade_uv(a: &DMatrix<C64>, coeffs: &[f64]) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let a2 = a * a;
    // even powers a^0, a^2, a^4, ...
    let mut powers: Vec<DMatrix<C64>> = vec![DMatrix::identity(n, n)];
    let half = coeffs.len() / 2;
    for _ in 1..half {
        let last = powers.last().unwrap();
        powers.push(last * &a2);
    }
    let mut u_inner = DMatrix::<C64>::zeros(n, n);
    let mut v = DMatrix::<C64>::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u_inner += p * C64::from(coeffs[2 * k + 1]);
        v += p * C64::from(coeffs[2 * k]);
    }
    (a * u_inner, v)
}

fn pade_13(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let b = &PADE_13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let id = DMatrix::<C64>::identity(n, n);
    let u_hi = &a6 * (&a6 * C64::from(b[13]) + &a4 * C64::from(b[11]) + &a2 * C64::from(b[9]));
    let u_lo = &a6 * C64::from(b[7]) + &a4 * C64::from(b[5]) + &a2 * C64::from(b[3]) + &id * C64::from(b[1]);
    let u = a * (u_hi + u_lo);
    let v_hi = &a6 * (&a6 * C64::from(b[12]) + &a4 * C64::from(b[10]) + &a2 * C64::from(b[8]));
    let v = v_hi + &a6 * C64::from(b[6]) + &a4 * C64::from(b[4]) + &a2 * C64::from(b[2]) + &id * C64::from(b[0]);
    (u, v)
}

/// Matrix exponential by Padé scaling-and-squaring.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_uv(a, &PADE_3);
        (u, v, 0u32)
    } else if norm <= THETA_5 {
        let (u, v) = pade_uv(a, &PADE_5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_uv(a, &PADE_7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_uv(a, &PADE_9);
        (u, v, 0)
    } else {
        let s = ((norm / THETA_13).log2().ceil() as u32).max(0);
        let scaled = a * C64::from(0.5f64.powi(s as i32));
        let (u, v) = pade_13(&scaled);
        (u, v, s)
    };
    let p = &v + &u;
    let q = &v - &u;
    let lu = nalgebra::linalg::LU::new(q);
    let mut r = lu.solve(&p).expect("Padé denominator is singular");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// exp(a) * block without forming exp(a), via Taylor iteration.
///
/// Valid when `one_norm(a)` is small (callers keep it below ~0.5); terms are
/// added until they fall under 1e-16 relative to the running result.
pub fn expm_multiply(a: &DMatrix<C64>, block: &DMatrix<C64>) -> DMatrix<C64> {
    let mut result = block.clone();
    let mut term = block.clone();
    for k in 1..64u32 {
        term = a * &term * C64::from(1.0 / k as f64);
        result += &term;
        if term.norm() <= 1e-16 * result.norm() {
            break;
        }
    }
    result
}

/// Pairwise (cascade) summation; bounds roundoff growth to O(log n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Pairwise reduction of vectors (same tree shape as [`pairwise_sum`]).
pub fn pairwise_sum_vectors(values: &[DVector<C64>]) -> DVector<C64> {
    match values.len() {
        0 => panic!("pairwise_sum_vectors on empty slice"),
        1 => values[0].clone(),
        n => {
            let mid = n / 2;
            pairwise_sum_vectors(&values[..mid]) + pairwise_sum_vectors(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.3, -1.2), c(-2.0, 0.7)]));
        let e = expm(&a);
        assert!((e[(0, 0)] - c(0.3, -1.2).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(-2.0, 0.7).exp()).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_pauli_rotation() {
        // exp(-i theta sx) = cos(theta) I - i sin(theta) sx
        let theta = 0.7321;
        let sx = dmatrix![c(0.0, 0.0), c(1.0, 0.0); c(1.0, 0.0), c(0.0, 0.0)];
        let e = expm(&(&sx * c(0.0, -theta)));
        let expect = dmatrix![
            c(theta.cos(), 0.0), c(0.0, -theta.sin());
            c(0.0, -theta.sin()), c(theta.cos(), 0.0)
        ];
        assert!((e - expect).norm() < 1e-14);
    }

    #[test]
    fn expm_nilpotent() {
        let a = dmatrix![c(0.0, 0.0), c(3.0, -1.0); c(0.0, 0.0), c(0.0, 0.0)];
        let e = expm(&a);
        // exp of nilpotent: I + A exactly
        assert!((&e - DMatrix::identity(2, 2) - &a).norm() < 1e-14);
    }

    #[test]
    fn expm_large_norm_scaling() {
        // norm ~ 40 forces squaring; check against exp(a) = exp(a/2)^2 identity
        // evaluated at a norm where degree-13 applies directly.
        let mut rng = 7u64;
        let mut next = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let n = 6;
        let h = DMatrix::from_fn(n, n, |_, _| c(next(), next()));
        let herm = (&h + h.adjoint()) * c(20.0, 0.0);
        let e_full = expm(&(&herm * c(0.0, -1.0)));
        let e_half = expm(&(&herm * c(0.0, -0.5)));
        assert!((&e_full - &e_half * &e_half).norm() < 1e-10 * e_full.norm());
        // unitarity of exp(-iH) for Hermitian H
        assert!((e_full.adjoint() * &e_full - DMatrix::identity(n, n)).norm() < 1e-11);
    }

    #[test]
    fn expm_multiply_matches_expm() {
        let a = dmatrix![
            c(0.0, 0.1), c(0.05, -0.02), c(0.0, 0.0);
            c(-0.05, -0.02), c(0.0, -0.3), c(0.1, 0.0);
            c(0.0, 0.0), c(-0.1, 0.0), c(0.0, 0.2)
        ];
        let block = DMatrix::identity(3, 3);
        let diff = expm_multiply(&a, &block) - expm(&a);
        assert!(diff.norm() < 1e-14);
    }

    #[test]
    fn pairwise_matches_naive() {
        let vals: Vec<f64> = (0..1013).map(|i| (i as f64).sin()).collect();
        let naive: f64 = vals.iter().sum();
        assert!((pairwise_sum(&vals) - naive).abs() < 1e-9);
    }
}

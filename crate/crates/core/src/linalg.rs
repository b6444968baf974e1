//! Small dense helpers: matrix exponential and friends.

use nalgebra::DMatrix;

const THETA: [f64; 4] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
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
const B13: [f64; 14] = [
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

pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Odd/even split of a low degree Padé approximant: returns (U, V).
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut pow = id.clone();
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut v = DMatrix::<f64>::zeros(n, n);
    let m = b.len() - 1;
    for k in 0..=m / 2 {
        u += &pow * b[2 * k + 1];
        v += &pow * b[2 * k];
        pow = &pow * &a2;
    }
    (a * u, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &B13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let tu = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * tu + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let tv = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * tv + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// Matrix exponential by scaling and squaring (Higham 2005).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let nrm = norm1(a);
    let (u, v, s) = if nrm < THETA[0] {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if nrm < THETA[1] {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if nrm < THETA[2] {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if nrm < THETA[3] {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = ((nrm / THETA_13).log2().ceil()).max(0.0) as i32;
        let scaled = a * 2f64.powi(-s);
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let numer = &v + &u;
    let denom = &v - &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is invertible for finite input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// (sinh A, cosh A) from a single exponential pair.
pub fn sinh_cosh(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let ep = expm(a);
    let em = expm(&(-a));
    ((&ep - &em) * 0.5, (&ep + &em) * 0.5)
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(expm(&z), DMatrix::identity(3, 3));
    }

    #[test]
    fn expm_rotation() {
        for &t in &[1e-3, 0.1, 0.7, 1.9, 4.0, 12.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
            let e = expm(&a);
            let want = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
            assert!(max_abs(&(e - want)) < 1e-13 * (1.0 + t), "t={t}");
        }
    }

    #[test]
    fn swap_matrix_gives_scalar_hyperbolics() {
        for &t in &[0.01, 0.5, 1.0, 3.0, -2.2] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, t, t, 0.0]);
            let (s, c) = sinh_cosh(&a);
            assert!((s[(0, 1)] - t.sinh()).abs() < 1e-13 * t.cosh());
            assert!((c[(0, 0)] - t.cosh()).abs() < 1e-13 * t.cosh());
            assert!(s[(0, 0)].abs() < 1e-13 * t.cosh());
        }
    }

    #[test]
    fn nilpotent_series_is_exact() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 5.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0]);
        let e = expm(&a);
        let want = DMatrix::identity(3, 3) + &a + &a * &a * 0.5;
        assert!(max_abs(&(e - want)) < 1e-13);
    }
}

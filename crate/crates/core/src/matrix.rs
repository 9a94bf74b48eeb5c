//! Exact and float linear algebra over Gaussian rationals.
//!
//! Rank and determinant use fraction-free (Bareiss-style) elimination: rows
//! are first scaled to Gaussian-integer entries, then each elimination step
//! divides by the previous pivot, which is exact and keeps entry growth
//! polynomial instead of exponential. The float backend thresholds singular
//! values computed by nalgebra.

use crate::poly::{Coeff, Poly};
use crate::scalar::{ComplexDouble, GaussianRational};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;

pub type ExactMatrix = Vec<Vec<GaussianRational>>;

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    if a.is_zero() || b.is_zero() {
        return BigInt::one();
    }
    (a * b / num_integer_gcd(a, b)).magnitude().clone().into()
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let mut a = a.magnitude().clone();
    let mut b = b.magnitude().clone();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    BigInt::from(a)
}

/// Scale each row by the least common multiple of its coefficient
/// denominators, so every entry has denominator one.
fn clear_denominators(rows: &mut [Vec<GaussianRational>]) -> Vec<BigRational> {
    let mut factors = Vec::with_capacity(rows.len());
    for row in rows.iter_mut() {
        let mut m = BigInt::one();
        for c in row.iter() {
            m = lcm(&m, c.re.denom());
            m = lcm(&m, c.im.denom());
        }
        let f = BigRational::from_integer(m);
        let s = GaussianRational::real(f.clone());
        for c in row.iter_mut() {
            *c = &*c * &s;
        }
        factors.push(f);
    }
    factors
}

/// Rank over the Gaussian rationals, computed by fraction-free elimination.
pub fn exact_rank(rows: &[Vec<GaussianRational>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    debug_assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
    let mut m: Vec<Vec<GaussianRational>> = rows.to_vec();
    clear_denominators(&mut m);
    let nrows = m.len();
    let mut rank = 0usize;
    let mut prev = GaussianRational::one();
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(pivot_row) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot_row);
        let pivot = m[rank][col].clone();
        for r in rank + 1..nrows {
            for c in col + 1..ncols {
                let t = &(&pivot * &m[r][c]) - &(&m[r][col] * &m[rank][c]);
                m[r][c] = &t / &prev;
            }
            m[r][col] = GaussianRational::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// Exact determinant of a square matrix, by fraction-free elimination.
pub fn exact_det(rows: &[Vec<GaussianRational>]) -> GaussianRational {
    let n = rows.len();
    if n == 0 {
        return GaussianRational::one();
    }
    debug_assert!(rows.iter().all(|r| r.len() == n), "matrix not square");
    let mut m: Vec<Vec<GaussianRational>> = rows.to_vec();
    let factors = clear_denominators(&mut m);
    let mut sign = false;
    let mut prev = GaussianRational::one();
    for k in 0..n {
        let Some(pivot_row) = (k..n).find(|&r| !m[r][k].is_zero()) else {
            return GaussianRational::zero();
        };
        if pivot_row != k {
            m.swap(k, pivot_row);
            sign = !sign;
        }
        let pivot = m[k][k].clone();
        for r in k + 1..n {
            for c in k + 1..n {
                let t = &(&pivot * &m[r][c]) - &(&m[r][k] * &m[k][c]);
                m[r][c] = &t / &prev;
            }
            m[r][k] = GaussianRational::zero();
        }
        prev = pivot;
    }
    let mut det = m[n - 1][n - 1].clone();
    if sign {
        det = -&det;
    }
    let mut scale = BigRational::one();
    for f in factors {
        scale *= f;
    }
    &det / &GaussianRational::real(scale)
}

/// Solve `A x = b` exactly by Gauss-Jordan elimination.
/// Returns None when `A` is singular.
pub fn exact_solve(a: &[Vec<GaussianRational>], b: &[GaussianRational]) -> Option<Vec<GaussianRational>> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n) && b.len() == n);
    let mut m: Vec<Vec<GaussianRational>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for k in 0..n {
        let pivot_row = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, pivot_row);
        let inv = m[k][k].inv();
        for c in k..=n {
            m[k][c] = &m[k][c] * &inv;
        }
        for r in 0..n {
            if r != k && !m[r][k].is_zero() {
                let f = m[r][k].clone();
                for c in k..=n {
                    let t = &m[k][c] * &f;
                    m[r][c] = &m[r][c] - &t;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Exact inverse by Gauss-Jordan. None when singular.
pub fn exact_inverse(a: &[Vec<GaussianRational>]) -> Option<ExactMatrix> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n));
    let mut m: Vec<Vec<GaussianRational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j {
                    GaussianRational::one()
                } else {
                    GaussianRational::zero()
                });
            }
            r
        })
        .collect();
    for k in 0..n {
        let pivot_row = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, pivot_row);
        let inv = m[k][k].inv();
        for c in k..2 * n {
            m[k][c] = &m[k][c] * &inv;
        }
        for r in 0..n {
            if r != k && !m[r][k].is_zero() {
                let f = m[r][k].clone();
                for c in k..2 * n {
                    let t = &m[k][c] * &f;
                    m[r][c] = &m[r][c] - &t;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Determinant of a square matrix of polynomials, by Laplace expansion with
/// memoized column subsets (division-free).
pub fn poly_det<C: Coeff>(rows: &[Vec<Poly<C>>]) -> Poly<C> {
    let n = rows.len();
    assert!(n > 0 && rows.iter().all(|r| r.len() == n), "matrix not square");
    assert!(n <= 16, "polynomial determinant limited to 16 rows");
    let nvars = rows[0][0].nvars();
    let full: u32 = (1 << n) - 1;
    let mut memo: HashMap<u32, Poly<C>> = HashMap::new();
    memo.insert(0, Poly::one(nvars));
    fn rec<C: Coeff>(
        cols: u32,
        n: usize,
        rows: &[Vec<Poly<C>>],
        memo: &mut HashMap<u32, Poly<C>>,
        nvars: usize,
    ) -> Poly<C> {
        if let Some(p) = memo.get(&cols) {
            return p.clone();
        }
        let k = cols.count_ones() as usize;
        let row = n - k; // expand along this row, using the selected columns
        let mut acc = Poly::zero(nvars);
        let mut sign_pos = true;
        for c in 0..n {
            if cols & (1 << c) == 0 {
                continue;
            }
            let minor = rec(cols & !(1 << c), n, rows, memo, nvars);
            let term = rows[row][c].mul(&minor);
            acc = if sign_pos { acc.add(&term) } else { acc.sub(&term) };
            sign_pos = !sign_pos;
        }
        memo.insert(cols, acc.clone());
        acc
    }
    rec(full, n, rows, &mut memo, nvars)
}

// ---- float backend ---------------------------------------------------------

pub fn to_float_matrix(rows: &[Vec<GaussianRational>]) -> DMatrix<ComplexDouble> {
    let nrows = rows.len();
    let ncols = if nrows == 0 { 0 } else { rows[0].len() };
    DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j].to_complex64())
}

/// Rank of a float matrix: singular values above `tol` count.
pub fn float_rank(m: &DMatrix<ComplexDouble>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Max entry modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<ComplexDouble>, b: &DMatrix<ComplexDouble>) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

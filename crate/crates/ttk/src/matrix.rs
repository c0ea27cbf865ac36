//! Dense arbitrary-precision integer matrices for carrying maps, plus the
//! boolean-pattern powers used to locate the primitivity (Wielandt) power.

use crate::Rat;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IMat {
    pub n: usize,
    data: Vec<BigInt>,
}

impl IMat {
    pub fn zero(n: usize) -> Self {
        IMat {
            n,
            data: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zero(n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let n = rows.len();
        let mut m = IMat::zero(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n);
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = BigInt::from(v);
            }
        }
        m
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = IMat::zero(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let add = a * b;
                        out[(i, j)] += add;
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, mut e: u64) -> IMat {
        let mut base = self.clone();
        let mut acc = IMat::identity(self.n);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn transpose(&self) -> IMat {
        let mut out = IMat::zero(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Permute columns: new column j is old column `src[j]`.
    pub fn permute_cols(&self, src: &[usize]) -> IMat {
        assert_eq!(src.len(), self.n);
        let mut out = IMat::zero(self.n);
        for j in 0..self.n {
            for i in 0..self.n {
                out[(i, j)] = self[(i, src[j])].clone();
            }
        }
        out
    }

    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|x| x.is_positive())
    }

    pub fn min_entry(&self) -> BigInt {
        self.data.iter().min().cloned().unwrap()
    }

    pub fn max_col_sum(&self) -> BigInt {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].clone()).sum::<BigInt>())
            .max()
            .unwrap()
    }

    /// Fraction-free Gaussian elimination (Bareiss); exact determinant.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut a: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| self[(i, j)].clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = num / &prev; // exact division by Bareiss
                }
            }
            prev = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    /// Apply to a rational vector: (self . v).
    pub fn apply(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| !self[(i, j)].is_zero())
                    .map(|j| Rat::from(self[(i, j)].clone()) * &v[j])
                    .sum()
            })
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &BigInt> {
        self.data.iter()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = &BigInt> {
        (0..self.n).map(move |j| &self[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for IMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.n + j]
    }
}

/// Boolean zero-pattern matrix over the OR/AND semiring.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoolMat {
    pub n: usize,
    rows: Vec<u64>,
}

impl BoolMat {
    pub fn from_pattern(m: &IMat) -> Self {
        assert!(m.n <= 64);
        let rows = (0..m.n)
            .map(|i| {
                let mut r = 0u64;
                for j in 0..m.n {
                    if !m[(i, j)].is_zero() {
                        r |= 1 << j;
                    }
                }
                r
            })
            .collect();
        BoolMat { n: m.n, rows }
    }

    pub fn mul(&self, other: &BoolMat) -> BoolMat {
        let rows = (0..self.n)
            .map(|i| {
                let mut acc = 0u64;
                let mut bits = self.rows[i];
                while bits != 0 {
                    let k = bits.trailing_zeros() as usize;
                    acc |= other.rows[k];
                    bits &= bits - 1;
                }
                acc
            })
            .collect();
        BoolMat { n: self.n, rows }
    }

    pub fn all_ones(&self) -> bool {
        let full = if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        };
        self.rows.iter().all(|&r| r == full)
    }
}

/// Least k <= bound with pattern(m)^k all-positive, if any.
pub fn positivity_power(m: &IMat, bound: usize) -> Option<usize> {
    let b = BoolMat::from_pattern(m);
    let mut p = b.clone();
    for k in 1..=bound {
        if p.all_ones() {
            return Some(k);
        }
        p = p.mul(&b);
    }
    if p.all_ones() {
        return Some(bound + 1).filter(|&k| k <= bound);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_pow() {
        let m = IMat::from_rows(vec![vec![1, 1], vec![1, 2]]);
        assert_eq!(m.det(), BigInt::one());
        let m2 = m.pow(2);
        assert_eq!(m2, IMat::from_rows(vec![vec![2, 3], vec![3, 5]]));
        assert_eq!(m.pow(0), IMat::identity(2));
    }

    #[test]
    fn det_sign() {
        let m = IMat::from_rows(vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(m.det(), BigInt::from(-1));
    }

    #[test]
    fn primitivity() {
        // permutation matrix: never positive
        let perm = IMat::from_rows(vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(positivity_power(&perm, 10), None);
        // [[1,1],[1,2]] is positive at power 1
        let fib = IMat::from_rows(vec![vec![1, 1], vec![1, 2]]);
        assert_eq!(positivity_power(&fib, 10), Some(1));
        // [[0,1],[1,1]] becomes positive at power 2
        let f = IMat::from_rows(vec![vec![0, 1], vec![1, 1]]);
        assert_eq!(positivity_power(&f, 10), Some(2));
    }

    #[test]
    fn col_permute() {
        let m = IMat::from_rows(vec![vec![1, 2], vec![3, 4]]);
        // new col 0 = old col 1
        let p = m.permute_cols(&[1, 0]);
        assert_eq!(p, IMat::from_rows(vec![vec![2, 1], vec![4, 3]]));
    }
}

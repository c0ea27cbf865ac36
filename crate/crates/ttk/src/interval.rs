//! Rational interval arithmetic with certified enclosures for exp, ln,
//! square roots and n-th roots. Rational operations are exact; the only
//! approximation is Taylor truncation for exp, which carries an explicit
//! remainder bound, so every returned interval contains the true value.

use crate::{rat, rat_int, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RatInterval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    pub fn point(x: Rat) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &RatInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn add(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    /// Scale by a nonnegative rational.
    pub fn scale(&self, c: &Rat) -> RatInterval {
        assert!(!c.is_negative());
        RatInterval {
            lo: &self.lo * c,
            hi: &self.hi * c,
        }
    }

    pub fn min_i(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().min(other.hi.clone()),
        }
    }

    pub fn max_i(&self, other: &RatInterval) -> RatInterval {
        RatInterval {
            lo: self.lo.clone().max(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    /// Reciprocal of a strictly positive interval.
    pub fn recip(&self) -> RatInterval {
        assert!(self.lo.is_positive());
        RatInterval {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        }
    }

    fn square_positive(&self) -> RatInterval {
        assert!(!self.lo.is_negative());
        RatInterval {
            lo: &self.lo * &self.lo,
            hi: &self.hi * &self.hi,
        }
    }
}

impl std::fmt::Display for RatInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Certified enclosure of e^x for rational x, width at most `tol`.
pub fn exp_interval(x: &Rat, tol: &Rat) -> RatInterval {
    assert!(tol.is_positive());
    if x.is_negative() {
        // e^x = 1 / e^{-x}; reciprocal of an interval in (1, inf) only
        // shrinks widths, so the same tolerance suffices
        let pos = exp_interval(&-x.clone(), tol);
        return pos.recip();
    }
    if x.is_zero() {
        return RatInterval::point(Rat::one());
    }
    // argument reduction x = 2^m * y with y <= 1/2
    let half = rat(1, 2);
    let mut m = 0u32;
    let mut y = x.clone();
    while y > half {
        y /= rat_int(2);
        m += 1;
    }
    let mut terms = 8usize;
    loop {
        // Taylor sum to `terms`, remainder bounded by 2 y^{terms+1}/(terms+1)!
        let mut sum = Rat::one();
        let mut term = Rat::one();
        for k in 1..=terms {
            term = term * &y / Rat::from(BigInt::from(k));
            sum += term.clone();
        }
        let rem = {
            let t = term * &y / Rat::from(BigInt::from(terms + 1));
            t * rat_int(2)
        };
        let mut iv = RatInterval::new(sum.clone(), sum + rem);
        for _ in 0..m {
            iv = iv.square_positive();
        }
        if iv.width() <= *tol {
            return iv;
        }
        terms *= 2;
        assert!(terms <= 4096, "exp_interval failed to converge");
    }
}

/// Certified enclosure of ln(q) for rational q > 0, width at most `tol`.
pub fn ln_interval(q: &Rat, tol: &Rat) -> RatInterval {
    assert!(q.is_positive());
    if q.is_one() {
        return RatInterval::point(Rat::zero());
    }
    if *q < Rat::one() {
        let pos = ln_interval(&q.recip(), tol);
        return RatInterval::new(-pos.hi, -pos.lo);
    }
    // bracket by doubling, then bisect; e^t = q never happens for rational
    // q != 1 and rational t != 0, so the comparisons eventually decide
    let mut lo = Rat::zero();
    let mut hi = Rat::one();
    let mut etol = rat(1, 1000);
    loop {
        let e = exp_interval(&hi, &etol);
        if e.lo > *q {
            break;
        }
        if e.hi >= *q && e.lo <= *q {
            etol /= rat_int(16);
            continue;
        }
        hi *= rat_int(2);
        assert!(hi < rat_int(1 << 30), "ln_interval bracket blew up");
    }
    while &hi - &lo > *tol {
        let mid = (&hi + &lo) / rat_int(2);
        let e = exp_interval(&mid, &etol);
        if e.hi < *q {
            lo = mid;
        } else if e.lo > *q {
            hi = mid;
        } else {
            etol /= rat_int(16);
        }
    }
    RatInterval::new(lo, hi)
}

/// ln of a positive rational interval.
pub fn ln_interval_of(iv: &RatInterval, tol: &Rat) -> RatInterval {
    let lo = ln_interval(&iv.lo, tol);
    let hi = ln_interval(&iv.hi, tol);
    RatInterval::new(lo.lo, hi.hi)
}

/// Certified n-th root of rational q >= 0, width at most `tol`.
pub fn nth_root_interval(q: &Rat, n: u32, tol: &Rat) -> RatInterval {
    assert!(n >= 1);
    assert!(!q.is_negative());
    if n == 1 || q.is_zero() || q.is_one() {
        return RatInterval::point(q.clone());
    }
    let pow = |x: &Rat| -> Rat {
        let mut acc = Rat::one();
        for _ in 0..n {
            acc *= x;
        }
        acc
    };
    let (mut lo, mut hi) = if *q > Rat::one() {
        (Rat::one(), q.clone())
    } else {
        (q.clone(), Rat::one())
    };
    while &hi - &lo > *tol {
        let mid = (&hi + &lo) / rat_int(2);
        let m = pow(&mid);
        if m <= *q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    RatInterval::new(lo, hi)
}

pub fn sqrt_interval(q: &Rat, tol: &Rat) -> RatInterval {
    nth_root_interval(q, 2, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol12() -> Rat {
        Rat::new(BigInt::one(), BigInt::from(10u64.pow(12)))
    }

    #[test]
    fn exp_basics() {
        let e1 = exp_interval(&rat_int(1), &tol12());
        assert!(e1.width() <= tol12());
        // 2.718281828459045 to 15 digits
        let lo = rat(2718281828459045, 1000000000000000);
        let hi = rat(2718281828459046, 1000000000000000);
        assert!(e1.lo >= lo - tol12() && e1.hi <= hi + tol12());
        let e0 = exp_interval(&rat_int(0), &tol12());
        assert_eq!(e0.lo, rat_int(1));
        // negative arguments through the reciprocal
        let en = exp_interval(&rat_int(-1), &tol12());
        let prod_lo = &en.lo * &e1.lo;
        let prod_hi = &en.hi * &e1.hi;
        assert!(prod_lo <= Rat::one() && Rat::one() <= prod_hi);
    }

    #[test]
    fn exp_contains_truth_widths() {
        // soundness cross-check against a finer evaluation
        let xs = [rat(7, 3), rat(-13, 5), rat(1, 7), rat_int(4)];
        let coarse = rat(1, 1_000_000);
        for x in &xs {
            let wide = exp_interval(x, &coarse);
            let tight = exp_interval(x, &tol12());
            assert!(wide.lo <= tight.lo && tight.hi <= wide.hi);
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let q = rat(10, 3);
        let l = ln_interval(&q, &tol12());
        assert!(l.width() <= tol12());
        // e^(l.lo) <= q <= e^(l.hi)
        let elo = exp_interval(&l.lo, &tol12());
        let ehi = exp_interval(&l.hi, &tol12());
        assert!(elo.lo <= q && q <= ehi.hi);
        // negative side
        let l2 = ln_interval(&rat(3, 10), &tol12());
        assert!(l2.hi.is_negative());
    }

    #[test]
    fn roots() {
        let r = sqrt_interval(&rat_int(2), &tol12());
        assert!(&r.lo * &r.lo <= rat_int(2));
        assert!(&r.hi * &r.hi >= rat_int(2));
        let c = nth_root_interval(&rat_int(27), 3, &tol12());
        assert!(c.contains(&rat_int(3)));
    }
}

//! Periodic splitting sequences and Perron-Frobenius certification.
//!
//! A loop is a splitting sequence whose end track is isomorphic to its
//! start as an unnumbered track; the period matrix acts on the start
//! track's measure cone. When some power of that matrix is positive, exact
//! power iteration brackets the top eigenvalue between Collatz-Wielandt
//! ratios whose enclosure shrinks strictly every round, and the invariant
//! transverse and tangential measures come out as cone elements, so every
//! certificate datum is checkable after the fact in rational arithmetic.

use crate::interval::{nth_root_interval, RatInterval};
use crate::matrix::{positivity_power, IMat};
use crate::measure::{
    is_recurrent, positive_tangential, MeasureError, TangentialMeasure, TransverseMeasure,
};
use crate::moves::{MoveError, SplitSeq};
use crate::track::TrainTrack;
use crate::{rat_int, Rat};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PaError {
    #[error("move error: {0}")]
    Move(#[from] MoveError),
    #[error("measure error: {0}")]
    Measure(#[from] MeasureError),
    #[error("period matrix has no positive power up to the Wielandt bound {0}")]
    NotPrimitive(usize),
    #[error("start track admits no positive transverse measure")]
    NoPositiveMeasure,
    #[error("start track admits no positive tangential measure")]
    NoPositiveTangential,
    #[error("power iteration failed to converge")]
    NoConvergence,
    #[error("certificate assertion failed: {0}")]
    Assert(String),
}

/// A splitting loop: the end track equals the start after renaming the
/// branches by `sigma` (sigma[b-1] is the start-track name of end branch b).
#[derive(Clone, Debug)]
pub struct PeriodicSeq {
    pub seq: SplitSeq,
    pub sigma: Vec<usize>,
    pub order: usize,
}

pub fn perm_order(sigma: &[usize]) -> usize {
    let n = sigma.len();
    let mut order = 1usize;
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut len = 0usize;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = sigma[i] - 1;
            len += 1;
        }
        order = num_integer::lcm(order, len);
    }
    order
}

pub fn perm_inverse(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; sigma.len()];
    for (i, &s) in sigma.iter().enumerate() {
        inv[s - 1] = i + 1;
    }
    inv
}

pub fn perm_compose(first: &[usize], then: &[usize]) -> Vec<usize> {
    // apply `first`, then `then`: out[b] = then[first[b]]
    first.iter().map(|&f| then[f - 1]).collect()
}

/// Close a sequence into a loop when the end track is isomorphic to the
/// start; the isomorphism search is exhaustive, identity-first.
pub fn close_sequence(seq: &SplitSeq) -> Result<Option<PeriodicSeq>, MoveError> {
    let end = seq.end()?;
    match end.isomorphism(&seq.start) {
        Some(sigma) => {
            let order = perm_order(&sigma);
            Ok(Some(PeriodicSeq {
                seq: seq.clone(),
                sigma,
                order,
            }))
        }
        None => Ok(None),
    }
}

impl PeriodicSeq {
    pub fn start(&self) -> &TrainTrack {
        &self.seq.start
    }

    /// Self-map of the start track's measure cone: carry a measure through
    /// the loop after reading it on the end track via sigma.
    pub fn period_matrix(&self) -> Result<IMat, MoveError> {
        let a = self.seq.carrying_matrix()?;
        // column j of C is column sigma^{-1}(j) of A
        let inv = perm_inverse(&self.sigma);
        let src: Vec<usize> = (0..a.n).map(|j| inv[j] - 1).collect();
        Ok(a.permute_cols(&src))
    }

    /// The n-fold loop: replay the same abstract moves, renaming through
    /// the accumulated identification each time.
    pub fn power(&self, n: usize) -> PeriodicSeq {
        assert!(n >= 1);
        let mut moves = self.seq.moves.clone();
        let mut sigma_total = self.sigma.clone();
        for _ in 1..n {
            let rename = perm_inverse(&sigma_total);
            moves.extend(self.seq.moves.iter().map(|mv| mv.rename(&rename)));
            sigma_total = perm_compose(&sigma_total, &self.sigma);
        }
        PeriodicSeq {
            seq: SplitSeq::new(self.seq.start.clone(), moves),
            sigma: sigma_total.clone(),
            order: perm_order(&sigma_total),
        }
    }

    /// Verify the closure invariant: renaming the end by sigma reproduces
    /// the start's embedded structure.
    pub fn verify_closure(&self) -> Result<bool, MoveError> {
        let end = self.seq.end()?;
        Ok(end.rename_branches(&self.sigma).same_structure(&self.seq.start))
    }
}

/// Compose loops based at the same start track: the composite replays each
/// loop in turn, translating moves through the identifications so far.
/// Loop order is application order (first element acts first).
pub fn concat_loops(loops: &[&PeriodicSeq]) -> Result<PeriodicSeq, MoveError> {
    assert!(!loops.is_empty());
    let start = loops[0].seq.start.clone();
    for l in loops {
        if l.seq.start != start {
            return Err(MoveError::SequenceMismatch(
                "all loops must be based at the same start track".into(),
            ));
        }
    }
    let mut moves: Vec<crate::moves::Move> = Vec::new();
    let mut sigma_total: Vec<usize> = (1..=start.num_branches).collect();
    for l in loops {
        // current track's branch b corresponds to start-name sigma_total[b],
        // so a move written in start names replays at the inverse image
        let rename = perm_inverse(&sigma_total);
        moves.extend(l.seq.moves.iter().map(|mv| mv.rename(&rename)));
        sigma_total = perm_compose(&sigma_total, &l.sigma);
    }
    let ps = PeriodicSeq {
        seq: SplitSeq::new(start, moves),
        sigma: sigma_total.clone(),
        order: perm_order(&sigma_total),
    };
    if cfg!(debug_assertions) {
        assert!(ps.verify_closure()?, "composite loop failed to close");
    }
    Ok(ps)
}

#[derive(Clone, Debug)]
pub struct PaCertificate {
    pub p: usize,
    pub sigma: Vec<usize>,
    pub order: usize,
    pub period_matrix: IMat,
    pub positivity_power: usize,
    pub alpha: RatInterval,
    pub lambda_plus: TransverseMeasure,
    pub lambda_minus: TangentialMeasure,
    pub iterations: usize,
}

/// Collatz-Wielandt sandwich of `m` at positive `v`: [min, max] of
/// (m v)_i / v_i. Contains the top eigenvalue of a primitive m.
pub fn cw_sandwich(m: &IMat, v: &[Rat]) -> RatInterval {
    let mv = m.apply(v);
    let mut lo: Option<Rat> = None;
    let mut hi: Option<Rat> = None;
    for (num, den) in mv.iter().zip(v) {
        assert!(den.is_positive(), "sandwich needs a positive vector");
        let r = num / den;
        lo = Some(match lo {
            None => r.clone(),
            Some(l) => l.min(r.clone()),
        });
        hi = Some(match hi {
            None => r,
            Some(h) => h.max(r),
        });
    }
    RatInterval::new(lo.unwrap(), hi.unwrap())
}

pub struct PfOptions {
    pub tol: Rat,
    pub max_iters: usize,
}

impl Default for PfOptions {
    fn default() -> Self {
        PfOptions {
            tol: Rat::new(1.into(), num_bigint::BigInt::from(10u64.pow(12))),
            max_iters: 10_000,
        }
    }
}

pub struct PfData {
    pub alpha: RatInterval,
    pub v: Vec<Rat>,
    pub w: Vec<Rat>,
    pub positivity_power: usize,
    pub iterations: usize,
}

/// Exact power iteration on C^l (and its transpose), eigenvalue interval
/// from the hull of the direct sandwiches of C and the l-th roots of the
/// C^l sandwiches. The interval contains the top eigenvalue of C at every
/// iteration, is nested, and shrinks strictly while wider than `tol`.
pub fn pf_interval(
    c: &IMat,
    l: usize,
    v0: Vec<Rat>,
    w0: Vec<Rat>,
    opts: &PfOptions,
) -> Result<PfData, PaError> {
    let p = c.n;
    let wielandt = (p - 1) * (p - 1) + 1;
    let npos = positivity_power(c, wielandt).ok_or(PaError::NotPrimitive(wielandt))?;
    let cl = c.pow(l as u64);
    let clt = cl.transpose();
    let ct = c.transpose();
    let steps = npos.div_ceil(l).max(1);
    let s = cl.pow(steps as u64);
    let st = s.transpose();
    // positive start vectors: one multiplication by a positive power makes
    // any nonnegative nonzero vector positive
    let mut v = s.apply(&v0);
    let mut w = st.apply(&w0);
    if !v.iter().all(|x| x.is_positive()) || !w.iter().all(|x| x.is_positive()) {
        return Err(PaError::Assert("start vectors not positive after mixing".into()));
    }
    let root_tol = &opts.tol / rat_int(64);
    let mut prev: Option<RatInterval> = None;
    for it in 0..opts.max_iters {
        let s1 = cw_sandwich(c, &v);
        let sl = cw_sandwich(&cl, &v);
        let t1 = cw_sandwich(&ct, &w);
        let tl = cw_sandwich(&clt, &w);
        let rl = root_hull(&sl, l as u32, &root_tol);
        let rtl = root_hull(&tl, l as u32, &root_tol);
        let hull = s1.hull(&rl).hull(&t1).hull(&rtl);
        // every component contains the eigenvalue, as does the previous
        // enclosure; intersecting keeps the sequence nested by construction
        // and the mixing step makes the width strictly decrease
        let hull = match &prev {
            None => hull,
            Some(pv) => {
                let lo = hull.lo.max(pv.lo.clone());
                let hi = hull.hi.min(pv.hi.clone());
                if lo > hi {
                    return Err(PaError::Assert(
                        "sandwich intervals became disjoint".into(),
                    ));
                }
                let iv = RatInterval::new(lo, hi);
                if iv.width() >= pv.width() && iv.width() > opts.tol {
                    return Err(PaError::Assert(
                        "sandwich width failed to decrease".into(),
                    ));
                }
                iv
            }
        };
        if hull.width() <= opts.tol {
            return Ok(PfData {
                alpha: hull,
                v,
                w,
                positivity_power: npos,
                iterations: it,
            });
        }
        prev = Some(hull);
        v = normalize_vec(s.apply(&v));
        w = normalize_vec(st.apply(&w));
    }
    Err(PaError::NoConvergence)
}

fn root_hull(iv: &RatInterval, n: u32, tol: &Rat) -> RatInterval {
    if n == 1 {
        return iv.clone();
    }
    let lo = nth_root_interval(&iv.lo, n, tol);
    let hi = nth_root_interval(&iv.hi, n, tol);
    RatInterval::new(lo.lo, hi.hi)
}

fn normalize_vec(v: Vec<Rat>) -> Vec<Rat> {
    let total: Rat = v.iter().sum();
    if total.is_zero() {
        return v;
    }
    v.into_iter().map(|x| x / &total).collect()
}

/// Full certification of a periodic sequence: primitivity up to the
/// Wielandt bound, exact eigenvalue enclosure of the requested width, and
/// the invariant measure pair as genuine cone elements.
pub fn certify_pa(ps: &PeriodicSeq, tol: &Rat) -> Result<PaCertificate, PaError> {
    let track = ps.start();
    let c = ps.period_matrix()?;
    let (rec, witness) = is_recurrent(track)?;
    if !rec {
        return Err(PaError::NoPositiveMeasure);
    }
    let v0 = witness.unwrap().weights().to_vec();
    let w0 = positive_tangential(track)?
        .ok_or(PaError::NoPositiveTangential)?
        .weights()
        .to_vec();
    let opts = PfOptions {
        tol: tol.clone(),
        max_iters: 10_000,
    };
    let data = pf_interval(&c, ps.order, v0, w0, &opts)?;
    if data.alpha.lo <= Rat::one() {
        return Err(PaError::Assert(format!(
            "expansion factor interval {} does not exceed 1",
            data.alpha
        )));
    }
    // wrap the iterates as cone elements; constructors re-verify the switch
    // conditions and triangle inequalities exactly
    let lambda_plus = TransverseMeasure::new(track, normalize_vec(data.v))?;
    let w_meas = TangentialMeasure::new(track, data.w)?;
    let pair = crate::measure::pairing(track, &lambda_plus, &w_meas)?;
    if !pair.is_positive() {
        return Err(PaError::Assert("pairing of eigenmeasures vanished".into()));
    }
    let lambda_minus = w_meas.scale(&pair.recip(), track)?;
    Ok(PaCertificate {
        p: c.n,
        sigma: ps.sigma.clone(),
        order: ps.order,
        period_matrix: c,
        positivity_power: data.positivity_power,
        alpha: data.alpha,
        lambda_plus,
        lambda_minus,
        iterations: data.iterations,
    })
}

#[derive(Clone, Debug, Default)]
pub struct InvariantReport {
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-verify a certificate: eigen-residual sandwich componentwise in exact
/// arithmetic for both measures, and interior positivity of lambda_plus.
pub fn invariant_check(cert: &PaCertificate) -> InvariantReport {
    let mut report = InvariantReport::default();
    let c = &cert.period_matrix;
    let v = cert.lambda_plus.weights();
    let cv = c.apply(v);
    for (i, (num, den)) in cv.iter().zip(v).enumerate() {
        if !den.is_positive() {
            report
                .violations
                .push(format!("lambda_plus vanishes on branch {}", i + 1));
            continue;
        }
        let lo = &cert.alpha.lo * den;
        let hi = &cert.alpha.hi * den;
        if *num < lo || *num > hi {
            report.violations.push(format!(
                "C lambda_plus escapes the alpha sandwich on branch {}",
                i + 1
            ));
        }
    }
    let ct = c.transpose();
    let w = cert.lambda_minus.weights();
    let cw = ct.apply(w);
    for (i, (num, den)) in cw.iter().zip(w).enumerate() {
        if !den.is_positive() {
            report
                .violations
                .push(format!("lambda_minus vanishes on branch {}", i + 1));
            continue;
        }
        let lo = &cert.alpha.lo * den;
        let hi = &cert.alpha.hi * den;
        if *num < lo || *num > hi {
            report.violations.push(format!(
                "C^T lambda_minus escapes the alpha sandwich on branch {}",
                i + 1
            ));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::IMat;
    use crate::rat;

    fn tol12() -> Rat {
        Rat::new(1.into(), num_bigint::BigInt::from(10u64.pow(12)))
    }

    /// (3 + sqrt 5)/2 membership test in exact arithmetic.
    fn contains_golden_sq(iv: &RatInterval) -> bool {
        // x = (3+sqrt5)/2: lo <= x  iff  (2 lo - 3)^2 <= 5 or 2 lo < 3
        let below = |r: &Rat| {
            let t = rat_int(2) * r - rat_int(3);
            t.is_negative() || &t * &t <= rat_int(5)
        };
        let above = |r: &Rat| {
            let t = rat_int(2) * r - rat_int(3);
            !t.is_negative() && &t * &t >= rat_int(5)
        };
        below(&iv.lo) && above(&iv.hi)
    }

    #[test]
    fn toy_matrix_interval_contains_eigenvalue_every_iteration() {
        let c = IMat::from_rows(vec![vec![1, 1], vec![1, 2]]);
        // run with a sequence of tolerances to observe several iterations
        for k in [1u32, 3, 6, 12] {
            let tol = Rat::new(1.into(), num_bigint::BigInt::from(10u64.pow(k)));
            let data = pf_interval(
                &c,
                1,
                vec![rat_int(1), rat_int(1)],
                vec![rat_int(1), rat_int(1)],
                &PfOptions { tol: tol.clone(), max_iters: 10_000 },
            )
            .unwrap();
            assert!(data.alpha.width() <= tol);
            assert!(
                contains_golden_sq(&data.alpha),
                "interval {} lost (3+sqrt5)/2",
                data.alpha
            );
        }
    }

    #[test]
    fn permutation_matrix_not_primitive() {
        let c = IMat::from_rows(vec![vec![0, 1], vec![1, 0]]);
        let r = pf_interval(
            &c,
            1,
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(1), rat_int(1)],
            &PfOptions::default(),
        );
        assert!(matches!(r, Err(PaError::NotPrimitive(_))));
    }

    #[test]
    fn perm_utilities() {
        let sigma = vec![2, 3, 1, 4];
        assert_eq!(perm_order(&sigma), 3);
        let inv = perm_inverse(&sigma);
        assert_eq!(inv, vec![3, 1, 2, 4]);
        let id = perm_compose(&sigma, &inv);
        assert_eq!(id, vec![1, 2, 3, 4]);
    }

    #[test]
    fn toy_perturbation_breaks_sandwich() {
        let c = IMat::from_rows(vec![vec![1, 1], vec![1, 2]]);
        let data = pf_interval(
            &c,
            1,
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(1), rat_int(1)],
            &PfOptions { tol: rat(1, 1_000_000), max_iters: 1000 },
        )
        .unwrap();
        // perturb one entry of v by 1e-6 and check the sandwich breaks
        let mut v = data.v.clone();
        v[0] += rat(1, 1_000_000);
        let s = cw_sandwich(&c, &v);
        assert!(!data.alpha.contains_interval(&s));
        // scaling v by 3 leaves the sandwich unchanged
        let v3: Vec<Rat> = data.v.iter().map(|x| x * rat_int(3)).collect();
        assert_eq!(cw_sandwich(&c, &v3), cw_sandwich(&c, &data.v));
    }
}

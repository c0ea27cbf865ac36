//! Roof functions, curve intersection numbers, certified length profiles
//! along certified periodic orbits, and the two thin-part families.
//!
//! Lengths are only ever bounded from above: the profile of a curve at flow
//! time t is L(t) = 2(e^t i+ + e^{-t} i-), evaluated in rational interval
//! arithmetic, and the reported suprema are taken over a finite grid plus
//! every curve's analytic minimizer.

use crate::interval::{exp_interval, ln_interval, ln_interval_of, sqrt_interval, RatInterval};
use crate::measure::{
    curve_as_measure, pairing, MeasureError, TangentialMeasure, TransverseMeasure,
};
use crate::moves::{transport_chain, Move, MoveError, SplitSeq};
use crate::pa::{certify_pa, concat_loops, perm_inverse, PaCertificate, PaError, PeriodicSeq};
use crate::track::{BranchId, EmbeddedCurve, TrackError, TrainTrack};
use crate::{rat, rat_int, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GeoError {
    #[error("move error: {0}")]
    Move(#[from] MoveError),
    #[error("measure error: {0}")]
    Measure(#[from] MeasureError),
    #[error("track error: {0}")]
    Track(#[from] TrackError),
    #[error("certification error: {0}")]
    Pa(#[from] PaError),
    #[error("curve is not carried by this track: {0}")]
    CurveNotCarried(String),
    #[error("bundle is incoherent: {0}")]
    Bundle(String),
    #[error("zeta({0})^2 period matrix is not positive; the bundle hypotheses fail")]
    ZetaSquareNotPositive(i64),
}

/// Normalization history of a carried measure along a sequence: a(i) is the
/// reciprocal of the total weight of the measure's transport to track i,
/// scaled so a(0) = 1. Ratios a(i+1)/a(i) are the roof values; a single
/// split never exceeds 2 because only the two losers re-enter the split
/// branch's weight.
#[derive(Clone, Debug)]
pub struct RoofProfile {
    pub a_values: Vec<Rat>,
    pub ratios: Vec<Rat>,
}

impl RoofProfile {
    pub fn log_total(&self) -> &Rat {
        self.a_values.last().unwrap()
    }
}

pub fn roof_profile(seq: &SplitSeq, mu_end: &TransverseMeasure) -> Result<RoofProfile, GeoError> {
    let replay = seq.replay()?;
    mu_end.check_track(replay.end())?;
    let chain = transport_chain(&replay, mu_end.weights());
    let totals: Vec<Rat> = chain
        .iter()
        .map(|w| w.iter().sum::<Rat>())
        .collect();
    let omega0 = totals[0].clone();
    if omega0.is_zero() {
        return Err(MeasureError::ZeroMeasure.into());
    }
    let a_values: Vec<Rat> = totals.iter().map(|t| &omega0 / t).collect();
    let ratios: Vec<Rat> = a_values
        .windows(2)
        .map(|w| &w[1] / &w[0])
        .collect();
    Ok(RoofProfile { a_values, ratios })
}

/// i(mu, curve) = 1/2 sum of mu over the branches hitting the curve from
/// the side.
pub fn curve_intersection_plus(
    track: &TrainTrack,
    mu: &TransverseMeasure,
    curve: &EmbeddedCurve,
) -> Result<Rat, GeoError> {
    mu.check_track(track)?;
    let sum: Rat = curve
        .incident_off_branches
        .iter()
        .map(|&b| mu.weight(b).clone())
        .sum();
    Ok(sum / rat_int(2))
}

/// Pairing of the curve's counting measure with a tangential measure: the
/// sum of nu over the cycle branches.
pub fn curve_intersection_minus(
    track: &TrainTrack,
    nu: &TangentialMeasure,
    curve: &EmbeddedCurve,
) -> Result<Rat, GeoError> {
    nu.check_track(track)?;
    let cm = curve_as_measure(track, curve)?;
    Ok(pairing(track, &cm, nu)?)
}

#[derive(Clone, Debug)]
pub struct CurveProfile {
    pub cycle: Vec<BranchId>,
    pub i_plus: Rat,
    pub i_minus: Rat,
}

#[derive(Clone, Debug)]
pub struct SystoleProfile {
    pub curves: Vec<CurveProfile>,
    pub period_log: RatInterval,
    pub sup_min: RatInterval,
    pub grid_steps: usize,
}

/// Exponential values along the grid, computed incrementally; interval
/// multiplication of positive intervals keeps soundness.
fn grid_exp(step: &Rat, n: usize, tol: &Rat) -> Vec<RatInterval> {
    let e_step = exp_interval(step, tol);
    let mut out = Vec::with_capacity(n + 1);
    out.push(RatInterval::point(Rat::one()));
    for j in 1..=n {
        let prev = &out[j - 1];
        out.push(RatInterval::new(&prev.lo * &e_step.lo, &prev.hi * &e_step.hi));
    }
    out
}

fn l_value(ep: &RatInterval, en: &RatInterval, ip: &Rat, im: &Rat) -> RatInterval {
    let two = rat_int(2);
    ep.scale(&(&two * ip)).add(&en.scale(&(&two * im)))
}

/// Certified sup-min length profile over one period of a certified loop.
///
/// Every curve must be an embedded trainpath on the start track; translates
/// under the period map should be included by the caller (renaming a curve
/// through sigma is such a translate). The supremum is over the grid plus
/// the per-curve analytic minimizers, each bracketed rationally.
pub fn systole_profile(
    track: &TrainTrack,
    cert: &PaCertificate,
    curves: &[EmbeddedCurve],
    grid_steps: usize,
) -> Result<SystoleProfile, GeoError> {
    assert!(grid_steps >= 2);
    let etol = Rat::new(BigInt::one(), BigInt::from(10u64).pow(15));
    let period_log = ln_interval_of(&cert.alpha, &etol);
    let t_hi = period_log.hi.clone();
    let mut profiles = Vec::with_capacity(curves.len());
    for curve in curves {
        // re-derive the curve on this track; errors mean the fixture lied
        let derived = track
            .closed_trainpath(&curve.branch_cycle)
            .map_err(|e| GeoError::CurveNotCarried(format!("{e}")))?;
        let i_plus = curve_intersection_plus(track, &cert.lambda_plus, &derived)?;
        let i_minus = curve_intersection_minus(track, &cert.lambda_minus, &derived)?;
        profiles.push(CurveProfile {
            cycle: curve.branch_cycle.clone(),
            i_plus,
            i_minus,
        });
    }
    // evaluation points: uniform grid over [0, upper end of the period]
    let step = &t_hi / Rat::from(BigInt::from(grid_steps));
    let eplus = grid_exp(&step, grid_steps, &etol);
    let eminus: Vec<RatInterval> = eplus.iter().map(|iv| iv.recip()).collect();
    let mut extra_points: Vec<Rat> = Vec::new();
    for p in &profiles {
        if p.i_plus.is_positive() && p.i_minus.is_positive() {
            let ratio = &p.i_minus / &p.i_plus;
            let l = ln_interval(&ratio, &etol);
            for t in [l.lo / rat_int(2), l.hi / rat_int(2)] {
                let clamped = t.max(Rat::zero()).min(t_hi.clone());
                extra_points.push(clamped);
            }
        }
    }
    let min_over_curves = |ep: &RatInterval, en: &RatInterval| -> RatInterval {
        let mut acc: Option<RatInterval> = None;
        for p in &profiles {
            let l = l_value(ep, en, &p.i_plus, &p.i_minus);
            acc = Some(match acc {
                None => l,
                Some(a) => a.min_i(&l),
            });
        }
        acc.expect("at least one curve")
    };
    let mut sup: Option<RatInterval> = None;
    for j in 0..=grid_steps {
        let m = min_over_curves(&eplus[j], &eminus[j]);
        sup = Some(match sup {
            None => m,
            Some(s) => s.max_i(&m),
        });
    }
    for t in &extra_points {
        let ep = exp_interval(t, &etol);
        let en = ep.recip();
        let m = min_over_curves(&ep, &en);
        sup = Some(match sup {
            None => m,
            Some(s) => s.max_i(&m),
        });
    }
    // lower-envelope cross-check: each curve's minimum value over the
    // period is at least 4 sqrt(i+ i-) when the minimizer is interior
    if cfg!(debug_assertions) {
        for p in &profiles {
            if p.i_plus.is_positive() && p.i_minus.is_positive() {
                let prod = &p.i_plus * &p.i_minus;
                let s = sqrt_interval(&prod, &etol);
                let envelope = s.scale(&rat_int(4));
                let at0 = l_value(
                    &RatInterval::point(Rat::one()),
                    &RatInterval::point(Rat::one()),
                    &p.i_plus,
                    &p.i_minus,
                );
                assert!(
                    at0.hi >= envelope.lo,
                    "curve value fell under its lower envelope"
                );
            }
        }
    }
    Ok(SystoleProfile {
        curves: profiles,
        period_log,
        sup_min: sup.unwrap(),
        grid_steps,
    })
}

/// One row of a family table; every entry reproducible from the
/// certificate in exact arithmetic.
#[derive(Clone, Debug)]
pub struct FamilyRow {
    pub param: i64,
    pub alpha: RatInterval,
    pub period_log: RatInterval,
    pub supmin: RatInterval,
}

#[derive(Clone, Debug)]
pub struct TwistRow {
    pub row: FamilyRow,
    pub i_alpha: Rat,
    pub mid_alpha_length: RatInterval,
}

/// Twist-family fixture: a certified base loop, a twist curve alpha that is
/// an embedded trainpath on the start track, and a splitting loop realizing
/// the Dehn twist along alpha (all splits at large branches on alpha).
#[derive(Clone, Debug)]
pub struct TwistBundle {
    pub track: TrainTrack,
    pub base: PeriodicSeq,
    pub alpha: EmbeddedCurve,
    pub twist: PeriodicSeq,
}

impl TwistBundle {
    pub fn validate(&self) -> Result<(), GeoError> {
        if self.base.seq.start != self.track || self.twist.seq.start != self.track {
            return Err(GeoError::Bundle("loops are not based at the bundle track".into()));
        }
        self.track
            .closed_trainpath(&self.alpha.branch_cycle)
            .map_err(|e| GeoError::Bundle(format!("alpha is not embedded: {e}")))?;
        for mv in &self.twist.seq.moves {
            if let Move::Split { branch, .. } = mv {
                if !self.alpha.branch_cycle.contains(branch) {
                    return Err(GeoError::Bundle(format!(
                        "twist split at branch {} off the twist curve",
                        branch
                    )));
                }
            }
        }
        if !self.base.verify_closure()? || !self.twist.verify_closure()? {
            return Err(GeoError::Bundle("loop closure data is wrong".into()));
        }
        Ok(())
    }

    /// Rows for the mapping classes (base)^2 (twist)^u, u in range.
    pub fn family(&self, u_range: std::ops::RangeInclusive<i64>, tol: &Rat, grid: usize)
        -> Result<Vec<TwistRow>, GeoError>
    {
        self.validate()?;
        let mut rows = Vec::new();
        for u in u_range {
            let mut loops: Vec<&PeriodicSeq> = vec![&self.base, &self.base];
            for _ in 0..u {
                loops.push(&self.twist);
            }
            let ps = concat_loops(&loops)?;
            let cert = certify_pa(&ps, tol)?;
            let i_alpha =
                curve_intersection_plus(&self.track, &cert.lambda_plus, &self.alpha)?;
            let profile = systole_profile(&self.track, &cert, &[self.alpha.clone()], grid)?;
            let mid = mid_window_length(&self.track, &cert, &self.alpha)?;
            rows.push(TwistRow {
                row: FamilyRow {
                    param: u,
                    alpha: cert.alpha.clone(),
                    period_log: profile.period_log.clone(),
                    supmin: mid.clone(),
                },
                i_alpha,
                mid_alpha_length: mid,
            });
        }
        Ok(rows)
    }
}

/// The curve's certified length bound at its own balance time (the
/// analytic minimizer, clamped into the period): the mid-orbit bound the
/// twist family is about.
pub fn mid_window_length(
    track: &TrainTrack,
    cert: &PaCertificate,
    curve: &EmbeddedCurve,
) -> Result<RatInterval, GeoError> {
    let etol = Rat::new(BigInt::one(), BigInt::from(10u64).pow(15));
    let i_plus = curve_intersection_plus(track, &cert.lambda_plus, curve)?;
    let i_minus = curve_intersection_minus(track, &cert.lambda_minus, curve)?;
    let period_log = ln_interval_of(&cert.alpha, &etol);
    let t = if i_plus.is_positive() && i_minus.is_positive() {
        let l = ln_interval(&(&i_minus / &i_plus), &etol);
        (l.lo / rat_int(2))
            .max(Rat::zero())
            .min(period_log.hi.clone())
    } else {
        &period_log.hi / rat_int(2)
    };
    let ep = exp_interval(&t, &etol);
    let en = ep.recip();
    Ok(l_value(&ep, &en, &i_plus, &i_minus))
}

/// The two-subsurface fixture of the thin-part construction: subtrack
/// branch-sets sigma0 < sigma1, sigma2 < tau covering tau, loops phi_i
/// supported in sigma_i and tight on it, and the two curves whose
/// translates stay short.
#[derive(Clone, Debug)]
pub struct ZetaBundle {
    pub track: TrainTrack,
    pub sigma0: Vec<BranchId>,
    pub sigma1: Vec<BranchId>,
    pub sigma2: Vec<BranchId>,
    pub phi0: PeriodicSeq,
    pub phi1: PeriodicSeq,
    pub phi2: PeriodicSeq,
    pub gamma1: EmbeddedCurve,
    pub gamma2: EmbeddedCurve,
}

impl ZetaBundle {
    pub fn validate(&self) -> Result<(), GeoError> {
        let p = self.track.num_branches;
        if self.track.surface.complexity() < 4 {
            return Err(GeoError::Bundle("surface needs 3g-3+m >= 4".into()));
        }
        for (name, s) in [("sigma0", &self.sigma0), ("sigma1", &self.sigma1), ("sigma2", &self.sigma2)] {
            if !self.track.is_subtrack(s) {
                return Err(GeoError::Bundle(format!("{name} is not a subtrack")));
            }
        }
        let mem = |s: &[BranchId]| {
            let mut v = vec![false; p];
            for &b in s {
                v[b - 1] = true;
            }
            v
        };
        let (m0, m1, m2) = (mem(&self.sigma0), mem(&self.sigma1), mem(&self.sigma2));
        for b in 0..p {
            if !(m1[b] || m2[b]) {
                return Err(GeoError::Bundle(format!(
                    "branch {} lies in neither sigma1 nor sigma2",
                    b + 1
                )));
            }
            if (m1[b] && m2[b]) != m0[b] {
                return Err(GeoError::Bundle(format!(
                    "sigma1 and sigma2 overlap differs from sigma0 at branch {}",
                    b + 1
                )));
            }
        }
        for (name, s) in [("gamma1", &self.gamma1), ("gamma2", &self.gamma2)] {
            self.track
                .closed_trainpath(&s.branch_cycle)
                .map_err(|e| GeoError::Bundle(format!("{name} not embedded: {e}")))?;
        }
        for (name, ps, m) in [
            ("phi0", &self.phi0, &m0),
            ("phi1", &self.phi1, &m1),
            ("phi2", &self.phi2, &m2),
        ] {
            if ps.seq.start != self.track {
                return Err(GeoError::Bundle(format!("{name} not based at tau")));
            }
            for mv in &ps.seq.moves {
                if let Move::Split { branch, .. } = mv {
                    if !m[branch - 1] {
                        return Err(GeoError::Bundle(format!(
                            "{name} splits outside its subtrack at branch {branch}"
                        )));
                    }
                }
            }
            let c = ps.period_matrix()?;
            for i in 0..p {
                for j in 0..p {
                    let inside = (m[i], m[j]);
                    let x = &c[(i, j)];
                    match inside {
                        (true, true) => {
                            if x < &BigInt::one() {
                                return Err(GeoError::Bundle(format!(
                                    "{name} is not tight on its subtrack at ({}, {})",
                                    i + 1,
                                    j + 1
                                )));
                            }
                        }
                        (false, false) => {
                            if x > &BigInt::one() {
                                return Err(GeoError::Bundle(format!(
                                    "{name} complement block is not a permutation"
                                )));
                            }
                        }
                        _ => {
                            if !x.is_zero() {
                                return Err(GeoError::Bundle(format!(
                                    "{name} mixes subtrack and complement at ({}, {})",
                                    i + 1,
                                    j + 1
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The loop of zeta(k) = phi1 . phi0^{2k} . phi2 . phi0^{2k}
    /// (rightmost acts first).
    pub fn zeta_loop(&self, k: i64) -> Result<PeriodicSeq, GeoError> {
        assert!(k >= 1);
        let mut loops: Vec<&PeriodicSeq> = Vec::new();
        for _ in 0..2 * k {
            loops.push(&self.phi0);
        }
        loops.push(&self.phi2);
        for _ in 0..2 * k {
            loops.push(&self.phi0);
        }
        loops.push(&self.phi1);
        Ok(concat_loops(&loops)?)
    }

    /// Family rows with the certified decay of the sup-min bound. The curve
    /// family is gamma1, gamma2 and their period translates (one step in
    /// each direction), which mirrors the proof's covering windows.
    pub fn family(
        &self,
        k_range: std::ops::RangeInclusive<i64>,
        tol: &Rat,
        grid: usize,
    ) -> Result<Vec<FamilyRow>, GeoError> {
        self.validate()?;
        let mut rows = Vec::new();
        for k in k_range {
            let ps = self.zeta_loop(k)?;
            let c = ps.period_matrix()?;
            if !c.mul(&c).is_positive() {
                return Err(GeoError::ZetaSquareNotPositive(k));
            }
            let cert = certify_pa(&ps, tol)?;
            let inv = perm_inverse(&ps.sigma);
            let mut curves = Vec::new();
            for base in [&self.gamma1, &self.gamma2] {
                let fwd = base.rename(&ps.sigma);
                let bwd = base.rename(&inv);
                curves.push(base.clone());
                curves.push(fwd);
                curves.push(bwd);
            }
            let profile = systole_profile(&self.track, &cert, &curves, grid)?;
            rows.push(FamilyRow {
                param: k,
                alpha: cert.alpha.clone(),
                period_log: profile.period_log,
                supmin: profile.sup_min,
            });
        }
        Ok(rows)
    }
}

/// Scale-invariant roof bound check used by tests: every single-split
/// ratio of any carried measure lies in [1, 2].
pub fn roof_ratios_in_bounds(profile: &RoofProfile) -> bool {
    profile
        .ratios
        .iter()
        .all(|r| *r >= Rat::one() && *r <= rat(2, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::is_recurrent;
    use crate::samples::hexapod;
    use crate::moves::SplitSide;

    #[test]
    fn roof_all_shift_is_flat() {
        let t = crate::samples::pinwheel();
        // stems are mixed; shift one back and forth: ratios all 1
        let seq = SplitSeq::new(
            t.clone(),
            vec![Move::Shift { branch: 5 }, Move::Shift { branch: 5 }],
        );
        let end = seq.end().unwrap();
        let curve = end.closed_trainpath(&[1, 2, 3, 4]).unwrap();
        let mu = curve_as_measure(&end, &curve).unwrap();
        let profile = roof_profile(&seq, &mu).unwrap();
        assert!(profile.ratios.iter().all(|r| r.is_one()));
    }

    #[test]
    fn roof_single_split_ratio() {
        let t = hexapod(0);
        let (_, w) = is_recurrent(&t).unwrap();
        let mu0 = w.unwrap();
        let e = t.large_branches()[0];
        let seq = SplitSeq::new(t.clone(), vec![Move::Split { branch: e, side: SplitSide::R }]);
        let replay = seq.replay().unwrap();
        let end = replay.end().clone();
        let (rec_end, w_end) = is_recurrent(&end).unwrap();
        assert!(rec_end);
        let mu = w_end.unwrap();
        let profile = roof_profile(&seq, &mu).unwrap();
        assert_eq!(profile.ratios.len(), 1);
        // ratio = 1 + (loser weight sum)/(end total), computed directly
        let rec = &replay.records[0];
        let loser_sum: Rat = rec.losers.iter().map(|&b| mu.weight(b).clone()).sum();
        let expected = Rat::one() + loser_sum / mu.total();
        assert_eq!(profile.ratios[0], expected);
        assert!(roof_ratios_in_bounds(&profile));
        let _ = mu0;
    }

    #[test]
    fn intersection_numbers_on_pinwheel() {
        let t = crate::samples::pinwheel();
        let curve = t.closed_trainpath(&[1, 2, 3, 4]).unwrap();
        // supported-on-cycle measure has zero plus-intersection
        let mu = curve_as_measure(&t, &curve).unwrap();
        assert!(curve_intersection_plus(&t, &mu, &curve)
            .unwrap()
            .is_zero());
        // uniform tangential measure gives the cycle length
        let nu = TangentialMeasure::new(&t, vec![Rat::one(); 12]).unwrap();
        assert_eq!(
            curve_intersection_minus(&t, &nu, &curve).unwrap(),
            rat_int(4)
        );
    }
}

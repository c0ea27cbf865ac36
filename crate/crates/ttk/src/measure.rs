//! Transverse and tangential measure cones over exact rationals.
//!
//! Constructors enforce the cone membership: no TransverseMeasure exists
//! that violates a switch condition, and no TangentialMeasure that violates
//! nonnegativity or a triangle inequality on a trigon region.

use crate::simplex::{maximize, LpOutcome};
use crate::track::{EmbeddedCurve, Side, TrackError, TrainTrack};
use crate::Rat;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("weight vector has length {0}, track has {1} branches")]
    WrongLength(usize, usize),
    #[error("negative weight on branch {0}")]
    Negative(usize),
    #[error("switch condition violated at switch {0}")]
    SwitchCondition(usize),
    #[error("triangle inequality violated on a trigon region (side {0})")]
    Triangle(usize),
    #[error("measure belongs to a different track")]
    TrackMismatch,
    #[error("zero measure cannot be normalized")]
    ZeroMeasure,
    #[error("track error: {0}")]
    Track(#[from] TrackError),
    #[error("track is not maximal; tangential feasibility proxy requires maximal tracks")]
    NotMaximal,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransverseMeasure {
    track_fp: u64,
    weights: Vec<Rat>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TangentialMeasure {
    track_fp: u64,
    weights: Vec<Rat>,
}

/// Signed switch-condition rows: side A counts +1 per end, side B -1.
/// A branch looping back to the same switch accumulates.
pub fn switch_rows(track: &TrainTrack) -> Vec<Vec<Rat>> {
    track
        .switches
        .iter()
        .map(|sw| {
            let mut row = vec![Rat::zero(); track.num_branches];
            for (side, _, e) in sw.slots() {
                let delta = match side {
                    Side::A => Rat::one(),
                    Side::B => -Rat::one(),
                };
                row[e.branch - 1] += delta;
            }
            row
        })
        .collect()
}

/// Per-trigon side triples as branch multisets (only 3-cusp unpunctured
/// regions constrain tangential measures).
pub fn trigon_sides(track: &TrainTrack) -> Result<Vec<[Vec<usize>; 3]>, TrackError> {
    let regions = track.complementary_regions()?;
    Ok(regions
        .iter()
        .filter(|r| r.cusps == 3 && r.punctures == 0)
        .map(|r| {
            let sides = r.sides();
            debug_assert_eq!(sides.len(), 3);
            [sides[0].clone(), sides[1].clone(), sides[2].clone()]
        })
        .collect())
}

impl TransverseMeasure {
    pub fn new(track: &TrainTrack, weights: Vec<Rat>) -> Result<Self, MeasureError> {
        if weights.len() != track.num_branches {
            return Err(MeasureError::WrongLength(
                weights.len(),
                track.num_branches,
            ));
        }
        if let Some(b) = weights.iter().position(|w| w.is_negative()) {
            return Err(MeasureError::Negative(b + 1));
        }
        for (sw, row) in track.switches.iter().zip(switch_rows(track)) {
            let s: Rat = row
                .iter()
                .zip(&weights)
                .map(|(c, w)| c * w)
                .sum();
            if !s.is_zero() {
                return Err(MeasureError::SwitchCondition(sw.id));
            }
        }
        Ok(TransverseMeasure {
            track_fp: track.fingerprint(),
            weights,
        })
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn weight(&self, branch: usize) -> &Rat {
        &self.weights[branch - 1]
    }

    pub fn total(&self) -> Rat {
        self.weights.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| w.is_zero())
    }

    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|w| w.is_positive())
    }

    pub fn matches(&self, track: &TrainTrack) -> bool {
        self.track_fp == track.fingerprint()
    }

    pub fn check_track(&self, track: &TrainTrack) -> Result<(), MeasureError> {
        if self.matches(track) {
            Ok(())
        } else {
            Err(MeasureError::TrackMismatch)
        }
    }

    /// Cone operations stay inside the cone; constructor re-verifies.
    pub fn add(&self, other: &TransverseMeasure, track: &TrainTrack) -> Result<Self, MeasureError> {
        self.check_track(track)?;
        other.check_track(track)?;
        TransverseMeasure::new(
            track,
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, factor: &Rat, track: &TrainTrack) -> Result<Self, MeasureError> {
        self.check_track(track)?;
        if factor.is_negative() {
            return Err(MeasureError::Negative(0));
        }
        TransverseMeasure::new(track, self.weights.iter().map(|w| w * factor).collect())
    }

    /// Total weight one; returns the original total as the scale.
    pub fn normalize(&self, track: &TrainTrack) -> Result<(Self, Rat), MeasureError> {
        self.check_track(track)?;
        let total = self.total();
        if total.is_zero() {
            return Err(MeasureError::ZeroMeasure);
        }
        let m = TransverseMeasure::new(
            track,
            self.weights.iter().map(|w| w / &total).collect(),
        )?;
        Ok((m, total))
    }

    /// Rebind to a renamed track: weight of new branch m[b-1] is weight of b.
    pub fn rename(
        &self,
        m: &[usize],
        new_track: &TrainTrack,
    ) -> Result<TransverseMeasure, MeasureError> {
        let mut w = vec![Rat::zero(); self.weights.len()];
        for (b0, wt) in self.weights.iter().enumerate() {
            w[m[b0] - 1] = wt.clone();
        }
        TransverseMeasure::new(new_track, w)
    }
}

impl TangentialMeasure {
    pub fn new(track: &TrainTrack, weights: Vec<Rat>) -> Result<Self, MeasureError> {
        if weights.len() != track.num_branches {
            return Err(MeasureError::WrongLength(
                weights.len(),
                track.num_branches,
            ));
        }
        if let Some(b) = weights.iter().position(|w| w.is_negative()) {
            return Err(MeasureError::Negative(b + 1));
        }
        let side_sum = |side: &[usize]| -> Rat {
            side.iter().map(|&b| weights[b - 1].clone()).sum()
        };
        for sides in trigon_sides(track)? {
            let s: Vec<Rat> = sides.iter().map(|side| side_sum(side)).collect();
            for i in 0..3 {
                if s[i] > &s[(i + 1) % 3] + &s[(i + 2) % 3] {
                    return Err(MeasureError::Triangle(i));
                }
            }
        }
        Ok(TangentialMeasure {
            track_fp: track.fingerprint(),
            weights,
        })
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn weight(&self, branch: usize) -> &Rat {
        &self.weights[branch - 1]
    }

    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|w| w.is_positive())
    }

    pub fn matches(&self, track: &TrainTrack) -> bool {
        self.track_fp == track.fingerprint()
    }

    pub fn check_track(&self, track: &TrainTrack) -> Result<(), MeasureError> {
        if self.matches(track) {
            Ok(())
        } else {
            Err(MeasureError::TrackMismatch)
        }
    }

    pub fn scale(&self, factor: &Rat, track: &TrainTrack) -> Result<Self, MeasureError> {
        self.check_track(track)?;
        if factor.is_negative() {
            return Err(MeasureError::Negative(0));
        }
        TangentialMeasure::new(track, self.weights.iter().map(|w| w * factor).collect())
    }
}

/// The intersection pairing <mu, nu> = sum_b mu(b) nu(b).
pub fn pairing(
    track: &TrainTrack,
    mu: &TransverseMeasure,
    nu: &TangentialMeasure,
) -> Result<Rat, MeasureError> {
    mu.check_track(track)?;
    nu.check_track(track)?;
    Ok(mu
        .weights
        .iter()
        .zip(&nu.weights)
        .map(|(a, b)| a * b)
        .sum())
}

/// Counting measure of an embedded closed trainpath: weight one on the
/// cycle branches. The switch conditions hold because the path enters and
/// leaves every switch it meets.
pub fn curve_as_measure(
    track: &TrainTrack,
    curve: &EmbeddedCurve,
) -> Result<TransverseMeasure, MeasureError> {
    let mut w = vec![Rat::zero(); track.num_branches];
    for &b in &curve.branch_cycle {
        w[b - 1] = Rat::one();
    }
    TransverseMeasure::new(track, w)
}

/// Max-min feasibility over the transverse cone: maximize t subject to
/// (v + t.1) satisfying the switch conditions, sum = 1, v >= 0. The
/// optimum is the best minimum weight among normalized measures.
fn maxmin_measure(track: &TrainTrack) -> Result<Option<(Rat, Vec<Rat>)>, MeasureError> {
    if !track.is_generic() {
        return Err(TrackError::NotGeneric.into());
    }
    let p = track.num_branches;
    let rows = switch_rows(track);
    let mut a: Vec<Vec<Rat>> = Vec::with_capacity(rows.len() + 1);
    let mut b: Vec<Rat> = Vec::with_capacity(rows.len() + 1);
    for row in &rows {
        let mut r = row.clone();
        let tc: Rat = row.iter().sum();
        r.push(tc);
        a.push(r);
        b.push(Rat::zero());
    }
    let mut norm = vec![Rat::one(); p];
    norm.push(Rat::from_integer(p.into()));
    a.push(norm);
    b.push(Rat::one());
    let mut c = vec![Rat::zero(); p];
    c.push(Rat::one());
    match maximize(&a, &b, &c) {
        LpOutcome::Optimal(t, x) => {
            let w: Vec<Rat> = (0..p).map(|i| &x[i] + &x[p]).collect();
            Ok(Some((t, w)))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("normalized feasibility is bounded"),
    }
}

/// Recurrent iff a strictly positive measure exists; the witness maximizes
/// the minimum branch weight at total weight one.
pub fn is_recurrent(track: &TrainTrack) -> Result<(bool, Option<TransverseMeasure>), MeasureError> {
    match maxmin_measure(track)? {
        Some((t, w)) if t.is_positive() => {
            Ok((true, Some(TransverseMeasure::new(track, w)?)))
        }
        _ => Ok((false, None)),
    }
}

/// Any nonzero measure carried by the track (total weight one), recurrent
/// or not; None when the cone is trivial.
pub fn any_measure(track: &TrainTrack) -> Result<Option<TransverseMeasure>, MeasureError> {
    match maxmin_measure(track)? {
        Some((_, w)) => Ok(Some(TransverseMeasure::new(track, w)?)),
        None => Ok(None),
    }
}

/// Strictly positive tangential measure via exact feasibility over the
/// triangle inequalities; proxy for transverse recurrence. Requires a
/// maximal track, matching the scope of the triangle constraints.
pub fn is_transversely_recurrent_proxy(
    track: &TrainTrack,
) -> Result<(bool, Option<TangentialMeasure>), MeasureError> {
    let report = track.validate()?;
    if !report.maximal {
        return Err(MeasureError::NotMaximal);
    }
    match positive_tangential(track)? {
        Some(nu) => Ok((true, Some(nu))),
        None => Ok((false, None)),
    }
}

/// Internal feasibility: works on any generic track (constraints are the
/// spec cone, i.e. only trigon triangle inequalities).
pub fn positive_tangential(
    track: &TrainTrack,
) -> Result<Option<TangentialMeasure>, MeasureError> {
    let p = track.num_branches;
    let trigons = trigon_sides(track)?;
    let n_ineq = trigons.len() * 3;
    // variables: v (p), t, slacks (n_ineq)
    let nvars = p + 1 + n_ineq;
    let mut a: Vec<Vec<Rat>> = Vec::new();
    let mut b: Vec<Rat> = Vec::new();
    let mut slack = p + 1;
    for sides in &trigons {
        for i in 0..3 {
            // sum_{i+1} + sum_{i+2} - sum_i - slack = 0, with w = v + t
            let mut row = vec![Rat::zero(); nvars];
            let mut tc = Rat::zero();
            for (k, sign) in [(i, -1i64), ((i + 1) % 3, 1), ((i + 2) % 3, 1)] {
                for &br in &sides[k] {
                    row[br - 1] += crate::rat_int(sign);
                    tc += crate::rat_int(sign);
                }
            }
            row[p] = tc;
            row[slack] = -Rat::one();
            slack += 1;
            a.push(row);
            b.push(Rat::zero());
        }
    }
    let mut norm = vec![Rat::zero(); nvars];
    for item in norm.iter_mut().take(p) {
        *item = Rat::one();
    }
    norm[p] = Rat::from_integer(p.into());
    a.push(norm);
    b.push(Rat::one());
    let mut c = vec![Rat::zero(); nvars];
    c[p] = Rat::one();
    match maximize(&a, &b, &c) {
        LpOutcome::Optimal(t, x) => {
            if t.is_positive() {
                let w: Vec<Rat> = (0..p).map(|i| &x[i] + &x[p]).collect();
                Ok(Some(TangentialMeasure::new(track, w)?))
            } else {
                Ok(None)
            }
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("normalized feasibility is bounded"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::pinwheel;
    use crate::{rat, rat_int};

    #[test]
    fn pinwheel_not_recurrent() {
        // the x-cycle dominates itself around the square, forcing every
        // stem weight to zero
        let t = pinwheel();
        let (rec, w) = is_recurrent(&t).unwrap();
        assert!(!rec);
        assert!(w.is_none());
    }

    #[test]
    fn pinwheel_cycle_measure_valid() {
        let t = pinwheel();
        let curve = t.closed_trainpath(&[1, 2, 3, 4]).unwrap();
        let mu = curve_as_measure(&t, &curve).unwrap();
        assert_eq!(mu.total(), rat_int(4));
        // scaling by 7 stays in the cone
        let mu7 = mu.scale(&rat_int(7), &t).unwrap();
        assert_eq!(mu7.total(), rat_int(28));
    }

    #[test]
    fn constructor_rejects_bad_vectors() {
        let t = pinwheel();
        let p = t.num_branches;
        // negative weight
        let mut w = vec![rat_int(0); p];
        w[0] = rat_int(-1);
        assert!(matches!(
            TransverseMeasure::new(&t, w),
            Err(MeasureError::Negative(1))
        ));
        // switch condition violation
        let mut w = vec![rat_int(0); p];
        w[0] = rat_int(1); // x1 alone cannot satisfy the cycle conditions
        assert!(matches!(
            TransverseMeasure::new(&t, w),
            Err(MeasureError::SwitchCondition(_))
        ));
    }

    #[test]
    fn normalize_properties() {
        let t = pinwheel();
        let curve = t.closed_trainpath(&[1, 2, 3, 4]).unwrap();
        let mu = curve_as_measure(&t, &curve).unwrap();
        let (unit, scale) = mu.normalize(&t).unwrap();
        assert_eq!(scale, rat_int(4));
        assert_eq!(unit.total(), rat_int(1));
        let (again, s2) = unit.normalize(&t).unwrap();
        assert_eq!(s2, rat_int(1));
        assert_eq!(again, unit);
        // total weight 5/2 gives scale 5/2
        let m = mu.scale(&rat(5, 8), &t).unwrap();
        let (_, s) = m.normalize(&t).unwrap();
        assert_eq!(s, rat(5, 2));
    }

    #[test]
    fn pairing_bilinear() {
        let t = pinwheel();
        let curve = t.closed_trainpath(&[1, 2, 3, 4]).unwrap();
        let mu = curve_as_measure(&t, &curve).unwrap();
        let nu = TangentialMeasure::new(&t, vec![rat_int(1); 12]).unwrap();
        let v1 = pairing(&t, &mu, &nu).unwrap();
        assert_eq!(v1, rat_int(4)); // cycle length
        let mu2 = mu.scale(&rat_int(2), &t).unwrap();
        assert_eq!(pairing(&t, &mu2, &nu).unwrap(), rat_int(8));
    }

    #[test]
    fn track_mismatch_detected() {
        let t = pinwheel();
        let mut t2 = t.clone();
        // move the infinity mark to the other side of its branch
        let side = t2.puncture_marks[4].side.flip();
        t2.puncture_marks[4].side = side;
        let curve = t.closed_trainpath(&[1, 2, 3, 4]).unwrap();
        let mu = curve_as_measure(&t, &curve).unwrap();
        let nu = TangentialMeasure::new(&t2, vec![rat_int(1); 12]).unwrap();
        assert!(matches!(
            pairing(&t2, &mu, &nu),
            Err(MeasureError::TrackMismatch)
        ));
    }
}

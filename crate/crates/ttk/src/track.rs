//! The train-track data model: combinatorial embedding, validation, regions,
//! branch roles, embedded curves, and track isomorphism.
//!
//! A track is stored as a ribbon structure: every trivalent switch holds one
//! branch-end on its singleton side A and two on side B, the B slots ordered
//! left-to-right as seen from side A. Complementary regions are recovered by
//! walking the fattened boundary, which is all the embedding data any
//! operation below ever needs.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::Rat;
use thiserror::Error;

/// Branch numbers are 1-based; the numbering is part of the value.
pub type BranchId = usize;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct BranchEnd {
    pub branch: BranchId,
    pub end: u8,
}

impl BranchEnd {
    pub fn new(branch: BranchId, end: u8) -> Self {
        BranchEnd { branch, end }
    }
}

impl fmt::Display for BranchEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.branch, self.end)
    }
}

/// Which side of a branch a region (or puncture mark) sits on, relative to
/// walking along the branch away from a named end. Internally regions are
/// keyed by the branch's intrinsic orientation (end 0 toward end 1).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SideFlag {
    L,
    R,
}

impl SideFlag {
    pub fn flip(self) -> SideFlag {
        match self {
            SideFlag::L => SideFlag::R,
            SideFlag::R => SideFlag::L,
        }
    }
}

impl fmt::Display for SideFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideFlag::L => write!(f, "L"),
            SideFlag::R => write!(f, "R"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct SurfaceSig {
    pub genus: u32,
    pub punctures: u32,
}

impl SurfaceSig {
    pub fn new(genus: u32, punctures: u32) -> Self {
        SurfaceSig { genus, punctures }
    }

    /// 3g - 3 + m.
    pub fn complexity(&self) -> i64 {
        3 * self.genus as i64 - 3 + self.punctures as i64
    }

    /// Euler characteristic 2 - 2g - m.
    pub fn euler(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.punctures as i64
    }
}

/// A switch: side A is the singleton side for generic (trivalent) switches,
/// side B holds the two branch-ends fanning out opposite it, ordered
/// left-to-right as seen from side A.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Switch {
    pub id: usize,
    pub side_a: Vec<BranchEnd>,
    pub side_b: Vec<BranchEnd>,
}

impl Switch {
    pub fn new(id: usize, a: BranchEnd, b0: BranchEnd, b1: BranchEnd) -> Self {
        Switch {
            id,
            side_a: vec![a],
            side_b: vec![b0, b1],
        }
    }

    pub fn is_generic(&self) -> bool {
        self.side_a.len() == 1 && self.side_b.len() == 2
    }

    pub fn slots(&self) -> impl Iterator<Item = (Side, usize, BranchEnd)> + '_ {
        self.side_a
            .iter()
            .enumerate()
            .map(|(i, &e)| (Side::A, i, e))
            .chain(
                self.side_b
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| (Side::B, i, e)),
            )
    }
}

/// A puncture mark designates the complementary region adjacent to a branch
/// on the given side, where L/R is read walking along the branch *from* the
/// named end toward the other end.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PunctureMark {
    pub at: BranchEnd,
    pub side: SideFlag,
}

impl PunctureMark {
    /// The (branch, intrinsic side) segment this mark selects. Walking away
    /// from end 0 the traveler's left is the intrinsic left side; walking
    /// away from end 1 it is the intrinsic right side.
    pub fn segment(&self) -> (BranchId, SideFlag) {
        let side = if self.at.end == 0 {
            self.side
        } else {
            self.side.flip()
        };
        (self.at.branch, side)
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TrackError {
    #[error("branch end {0} is placed {1} times (must be exactly once)")]
    EndPlacement(BranchEnd, usize),
    #[error("switch ids are not distinct")]
    DuplicateSwitchId,
    #[error("branch id {0} out of range 1..={1}")]
    BranchOutOfRange(BranchId, usize),
    #[error("surface {0:?} violates 3g-3+m >= 2")]
    BadSurface(SurfaceSig),
    #[error("puncture mark {0}{1} references a missing branch")]
    BadMark(BranchEnd, SideFlag),
    #[error("track has a non-generic switch; operation requires a generic track")]
    NotGeneric,
    #[error("branch {0} has the wrong role for this move")]
    WrongRole(BranchId),
    #[error("cycle is not a trainpath: illegal transition at branch {0}")]
    NotATrainpath(BranchId),
    #[error("cycle is not embedded: branch {0} repeated")]
    NotEmbedded(BranchId),
    #[error("cycle has fewer than two incident off-branches")]
    TooFewOffBranches,
    #[error("empty cycle")]
    EmptyCycle,
    #[error("tracks live on different surfaces")]
    SurfaceMismatch,
}

#[derive(Clone, Debug)]
pub struct TrainTrack {
    pub surface: SurfaceSig,
    pub num_branches: usize,
    pub switches: Vec<Switch>,
    pub puncture_marks: Vec<PunctureMark>,
}

impl PartialEq for TrainTrack {
    fn eq(&self, other: &Self) -> bool {
        self.surface == other.surface
            && self.num_branches == other.num_branches
            && canonical_switches(&self.switches) == canonical_switches(&other.switches)
            && canonical_marks(&self.puncture_marks) == canonical_marks(&other.puncture_marks)
    }
}
impl Eq for TrainTrack {}

impl Hash for TrainTrack {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.surface.hash(state);
        self.num_branches.hash(state);
        canonical_switches(&self.switches).hash(state);
        canonical_marks(&self.puncture_marks).hash(state);
    }
}

fn canonical_switches(sw: &[Switch]) -> Vec<Switch> {
    let mut v = sw.to_vec();
    v.sort_by_key(|s| s.id);
    v
}

fn canonical_marks(marks: &[PunctureMark]) -> Vec<PunctureMark> {
    let mut v = marks.to_vec();
    v.sort();
    v
}

/// Where a branch-end sits: switch index (into `switches`), side, slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct EndLoc {
    pub sw: usize,
    pub side: Side,
    pub pos: usize,
}

/// One complementary region, as the cyclic list of oriented boundary
/// segments. A segment (b, L) is the intrinsic left side of branch b.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Region {
    pub segments: Vec<(BranchId, SideFlag)>,
    /// Cusps in boundary order; entry i tells whether the corner *after*
    /// segment i is a cusp, together with the switch id it sits at.
    pub corner_cusps: Vec<Option<usize>>,
    pub cusps: usize,
    pub punctures: usize,
}

impl Region {
    fn index(&self) -> Rat {
        let chi = if self.punctures == 0 { 1i64 } else { 1 - self.punctures as i64 };
        Rat::new((2 * chi - self.cusps as i64).into(), 2.into())
    }

    /// The sides of the region between consecutive cusps, as branch
    /// multisets (only meaningful when cusps > 0).
    pub fn sides(&self) -> Vec<Vec<BranchId>> {
        let n = self.segments.len();
        if self.cusps == 0 {
            return vec![self.segments.iter().map(|s| s.0).collect()];
        }
        let mut cusp_positions: Vec<usize> = (0..n)
            .filter(|&i| self.corner_cusps[i].is_some())
            .collect();
        cusp_positions.sort_unstable();
        let mut out = Vec::with_capacity(cusp_positions.len());
        for w in 0..cusp_positions.len() {
            let start = (cusp_positions[w] + 1) % n;
            let stop = cusp_positions[(w + 1) % cusp_positions.len()];
            let mut side = Vec::new();
            let mut i = start;
            loop {
                side.push(self.segments[i].0);
                if i == stop {
                    break;
                }
                i = (i + 1) % n;
            }
            out.push(side);
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValidationReport {
    pub generic: bool,
    pub connected: bool,
    /// (cusps, punctures, how many regions look like that)
    pub region_census: Vec<(usize, usize, usize)>,
    pub index_sum: Option<Rat>,
    pub euler_ok: bool,
    pub index_ok: bool,
    pub forbidden: Vec<String>,
    pub maximal: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.generic && self.connected && self.euler_ok && self.index_ok && self.forbidden.is_empty()
    }
}

impl TrainTrack {
    pub fn new(
        surface: SurfaceSig,
        num_branches: usize,
        switches: Vec<Switch>,
        puncture_marks: Vec<PunctureMark>,
    ) -> Result<Self, TrackError> {
        let t = TrainTrack {
            surface,
            num_branches,
            switches,
            puncture_marks,
        };
        t.check_structure()?;
        Ok(t)
    }

    /// Structural well-formedness: every end of every branch placed exactly
    /// once, marks reference real branches, ids distinct. Distinct from
    /// validation, which reports on geometry.
    pub fn check_structure(&self) -> Result<(), TrackError> {
        if self.surface.complexity() < 2 {
            return Err(TrackError::BadSurface(self.surface));
        }
        let mut ids = std::collections::BTreeSet::new();
        for sw in &self.switches {
            if !ids.insert(sw.id) {
                return Err(TrackError::DuplicateSwitchId);
            }
        }
        let mut seen = vec![0usize; 2 * self.num_branches];
        for sw in &self.switches {
            for (_, _, e) in sw.slots() {
                if e.branch == 0 || e.branch > self.num_branches || e.end > 1 {
                    return Err(TrackError::BranchOutOfRange(e.branch, self.num_branches));
                }
                seen[2 * (e.branch - 1) + e.end as usize] += 1;
            }
        }
        for b in 1..=self.num_branches {
            for end in 0..2u8 {
                let c = seen[2 * (b - 1) + end as usize];
                if c != 1 {
                    return Err(TrackError::EndPlacement(BranchEnd::new(b, end), c));
                }
            }
        }
        for m in &self.puncture_marks {
            if m.at.branch == 0 || m.at.branch > self.num_branches || m.at.end > 1 {
                return Err(TrackError::BadMark(m.at, m.side));
            }
        }
        Ok(())
    }

    pub fn is_generic(&self) -> bool {
        self.switches.iter().all(|s| s.is_generic())
    }

    /// Map from branch-end to its slot. Errors were ruled out at construction.
    pub fn end_locations(&self) -> Vec<EndLoc> {
        let mut locs = vec![
            EndLoc {
                sw: usize::MAX,
                side: Side::A,
                pos: 0
            };
            2 * self.num_branches
        ];
        for (si, sw) in self.switches.iter().enumerate() {
            for (side, pos, e) in sw.slots() {
                locs[2 * (e.branch - 1) + e.end as usize] = EndLoc { sw: si, side, pos };
            }
        }
        locs
    }

    pub fn end_loc(&self, e: BranchEnd) -> EndLoc {
        self.end_locations()[2 * (e.branch - 1) + e.end as usize]
    }

    pub fn connected(&self) -> bool {
        if self.switches.is_empty() {
            return false;
        }
        let locs = self.end_locations();
        let mut seen = vec![false; self.switches.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(si) = stack.pop() {
            for (_, _, e) in self.switches[si].slots() {
                let other = locs[2 * (e.branch - 1) + (1 - e.end) as usize];
                if !seen[other.sw] {
                    seen[other.sw] = true;
                    stack.push(other.sw);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    /// Complementary regions by boundary traversal of the fattened track.
    ///
    /// Walks with the region on the traveler's left. Arriving at slot x the
    /// walk leaves along the clockwise-next slot; with side B ordered
    /// left-to-right from A, the counterclockwise slot order is
    /// (A, B[1], B[0]) and the corner crossed from B[0] to B[1] is the cusp.
    pub fn complementary_regions(&self) -> Result<Vec<Region>, TrackError> {
        if !self.is_generic() {
            return Err(TrackError::NotGeneric);
        }
        let locs = self.end_locations();
        let loc_of = |e: BranchEnd| locs[2 * (e.branch - 1) + e.end as usize];
        // darts are arrival ends; 2 per branch
        let dart_index = |e: BranchEnd| 2 * (e.branch - 1) + e.end as usize;
        let mut used = vec![false; 2 * self.num_branches];
        let mut regions = Vec::new();
        let mark_segments: Vec<(BranchId, SideFlag)> =
            self.puncture_marks.iter().map(|m| m.segment()).collect();
        for b in 1..=self.num_branches {
            for end in 0..2u8 {
                let start = BranchEnd::new(b, end);
                if used[dart_index(start)] {
                    continue;
                }
                let mut segments = Vec::new();
                let mut corner_cusps = Vec::new();
                let mut cur = start;
                loop {
                    used[dart_index(cur)] = true;
                    // segment just walked: arrived at end 1 means we walked
                    // forward, keeping the intrinsic left on our left
                    let side = if cur.end == 1 { SideFlag::L } else { SideFlag::R };
                    segments.push((cur.branch, side));
                    let loc = loc_of(cur);
                    let sw = &self.switches[loc.sw];
                    let (exit, cusp) = match (loc.side, loc.pos) {
                        (Side::A, 0) => (sw.side_b[0], false),
                        (Side::B, 0) => (sw.side_b[1], true),
                        (Side::B, 1) => (sw.side_a[0], false),
                        _ => unreachable!("generic checked above"),
                    };
                    corner_cusps.push(if cusp { Some(sw.id) } else { None });
                    cur = BranchEnd::new(exit.branch, 1 - exit.end);
                    if cur == start {
                        break;
                    }
                }
                let cusps = corner_cusps.iter().filter(|c| c.is_some()).count();
                let punctures = mark_segments
                    .iter()
                    .filter(|seg| segments.contains(seg))
                    .count();
                regions.push(Region {
                    segments,
                    corner_cusps,
                    cusps,
                    punctures,
                });
            }
        }
        Ok(regions)
    }

    /// Region census, Gauss-Bonnet style index identity, forbidden regions.
    pub fn validate(&self) -> Result<ValidationReport, TrackError> {
        self.check_structure()?;
        let generic = self.is_generic();
        let connected = self.connected();
        if !generic {
            return Ok(ValidationReport {
                generic,
                connected,
                region_census: Vec::new(),
                index_sum: None,
                euler_ok: false,
                index_ok: false,
                forbidden: vec!["track is not generic; no region census computed".into()],
                maximal: false,
            });
        }
        let regions = self.complementary_regions()?;
        let mut census: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for r in &regions {
            *census.entry((r.cusps, r.punctures)).or_insert(0) += 1;
        }
        let mut forbidden = Vec::new();
        // Walk cycles only see disc regions; an annular complementary region
        // shows up as an Euler defect, which we report below.
        let euler =
            self.switches.len() as i64 - self.num_branches as i64 + regions.len() as i64;
        let euler_expected = 2 - 2 * self.surface.genus as i64;
        let euler_ok = euler == euler_expected;
        if !euler_ok {
            forbidden.push(format!(
                "complement is not a union of discs: V-E+F = {} but closed surface needs {}",
                euler, euler_expected
            ));
        }
        let total_marks: usize = regions.iter().map(|r| r.punctures).sum();
        if total_marks != self.surface.punctures as usize
            || self.puncture_marks.len() != self.surface.punctures as usize
        {
            forbidden.push(format!(
                "puncture marks resolve to {} marked regions but surface has {} punctures",
                total_marks, self.surface.punctures
            ));
        }
        for r in &regions {
            let fine = match (r.punctures, r.cusps) {
                (0, c) if c <= 2 => false,
                (1, 0) => false,
                _ => true,
            };
            if !fine {
                forbidden.push(format!(
                    "forbidden region: {} cusps, {} punctures",
                    r.cusps, r.punctures
                ));
            }
        }
        let index_sum: Rat = regions.iter().map(|r| r.index()).sum();
        let index_ok = index_sum == Rat::from(num_bigint::BigInt::from(self.surface.euler()));
        if !index_ok {
            forbidden.push(format!(
                "index sum {} differs from surface Euler characteristic {}",
                index_sum,
                self.surface.euler()
            ));
        }
        let maximal = euler_ok
            && regions
                .iter()
                .all(|r| (r.cusps == 3 && r.punctures == 0) || (r.cusps == 1 && r.punctures == 1));
        Ok(ValidationReport {
            generic,
            connected,
            region_census: census.into_iter().map(|((c, p), n)| (c, p, n)).collect(),
            index_sum: Some(index_sum),
            euler_ok,
            index_ok,
            forbidden,
            maximal,
        })
    }

    /// Number of large ends (ends occupying a singleton side A slot).
    fn large_end_count(&self, b: BranchId) -> usize {
        let locs = self.end_locations();
        (0..2u8)
            .filter(|&e| locs[2 * (b - 1) + e as usize].side == Side::A)
            .count()
    }

    pub fn branch_roles(&self) -> Result<Vec<BranchRole>, TrackError> {
        if !self.is_generic() {
            return Err(TrackError::NotGeneric);
        }
        Ok((1..=self.num_branches)
            .map(|b| match self.large_end_count(b) {
                2 => BranchRole::Large,
                1 => BranchRole::Mixed,
                _ => BranchRole::Small,
            })
            .collect())
    }

    pub fn role(&self, b: BranchId) -> Result<BranchRole, TrackError> {
        Ok(self.branch_roles()?[b - 1])
    }

    pub fn large_branches(&self) -> Vec<BranchId> {
        self.branch_roles()
            .map(|roles| {
                roles
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| **r == BranchRole::Large)
                    .map(|(i, _)| i + 1)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Resolve a cyclic list of branch ids into an embedded closed trainpath.
    pub fn closed_trainpath(&self, cycle: &[BranchId]) -> Result<EmbeddedCurve, TrackError> {
        if cycle.is_empty() {
            return Err(TrackError::EmptyCycle);
        }
        if !self.is_generic() {
            return Err(TrackError::NotGeneric);
        }
        {
            let mut sorted = cycle.to_vec();
            sorted.sort_unstable();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    return Err(TrackError::NotEmbedded(w[0]));
                }
            }
        }
        let locs = self.end_locations();
        let loc_of = |e: BranchEnd| locs[2 * (e.branch - 1) + e.end as usize];
        // try both orientations of the first branch; a trainpath leaves the
        // switch at one end and must continue through A<->B transitions
        'orient: for first_exit_end in 0..2u8 {
            // walking branch cycle[i] toward its end `arrive[i]`
            let mut arrives: Vec<BranchEnd> = Vec::with_capacity(cycle.len());
            let mut cur = BranchEnd::new(cycle[0], first_exit_end);
            for (i, &b) in cycle.iter().enumerate() {
                if cur.branch != b {
                    continue 'orient;
                }
                // we are walking along `b` toward the end opposite of `cur`
                let arrive = BranchEnd::new(b, 1 - cur.end);
                arrives.push(arrive);
                let loc = loc_of(arrive);
                let sw = &self.switches[loc.sw];
                let next_branch = cycle[(i + 1) % cycle.len()];
                // smooth continuation: must exit on the opposite side
                let candidates: Vec<BranchEnd> = match loc.side {
                    Side::A => sw.side_b.clone(),
                    Side::B => sw.side_a.clone(),
                };
                match candidates.iter().find(|e| e.branch == next_branch) {
                    Some(&exit) => cur = exit,
                    None => continue 'orient,
                }
            }
            // closure: after the last branch we must be about to walk the
            // first branch from the end we started at
            if cur != BranchEnd::new(cycle[0], first_exit_end) {
                continue 'orient;
            }
            // collect off-branches: the third slot at each visited switch
            let mut off = std::collections::BTreeSet::new();
            for (i, arrive) in arrives.iter().enumerate() {
                let loc = loc_of(*arrive);
                let sw = &self.switches[loc.sw];
                let next_branch = cycle[(i + 1) % cycle.len()];
                for (_, _, e) in sw.slots() {
                    if e.branch != arrive.branch && e.branch != next_branch {
                        off.insert(e.branch);
                    } else if e.branch == next_branch
                        && e != BranchEnd::new(arrive.branch, arrive.end)
                    {
                        // slot belongs to the continuation; skip
                    }
                }
            }
            let off: Vec<BranchId> = off
                .into_iter()
                .filter(|b| !cycle.contains(b))
                .collect();
            if off.len() < 2 {
                return Err(TrackError::TooFewOffBranches);
            }
            return Ok(EmbeddedCurve {
                branch_cycle: cycle.to_vec(),
                incident_off_branches: off,
            });
        }
        // figure out a helpful culprit: the first branch that cannot connect
        Err(TrackError::NotATrainpath(cycle[0]))
    }

    /// Exhaustive backtracking search for an orientation-preserving track
    /// isomorphism. Returns `m` with `m[b1-1] = b2` such that renaming the
    /// branches (and induced switches) of `self` by `m` yields `other` as a
    /// value; identity is tried first so `isomorphism(t, t)` returns it.
    pub fn isomorphism(&self, other: &TrainTrack) -> Option<Vec<BranchId>> {
        self.isomorphism_seeded(other, &[])
    }

    /// Isomorphism search with forced branch assignments (b1 -> b2 pairs);
    /// used when a closure must fix a subtrack's complement pointwise.
    pub fn isomorphism_seeded(
        &self,
        other: &TrainTrack,
        seed: &[(BranchId, BranchId)],
    ) -> Option<Vec<BranchId>> {
        if self.surface != other.surface
            || self.num_branches != other.num_branches
            || self.switches.len() != other.switches.len()
            || !self.is_generic()
            || !other.is_generic()
        {
            return None;
        }
        let n_sw = self.switches.len();
        let locs1 = self.end_locations();
        let locs2 = other.end_locations();
        // branch map and switch map built together
        struct St {
            bmap: Vec<usize>,      // 0 = unassigned
            bused: Vec<bool>,
            smap: Vec<usize>,      // usize::MAX = unassigned (switch indices)
            sused: Vec<bool>,
        }
        let mut st = St {
            bmap: vec![0; self.num_branches],
            bused: vec![false; self.num_branches + 1],
            smap: vec![usize::MAX; n_sw],
            sused: vec![false; n_sw],
        };
        for &(b1, b2) in seed {
            if b1 == 0 || b1 > self.num_branches || b2 == 0 || b2 > self.num_branches {
                return None;
            }
            if st.bmap[b1 - 1] == b2 {
                continue;
            }
            if st.bmap[b1 - 1] != 0 || st.bused[b2] {
                return None;
            }
            st.bmap[b1 - 1] = b2;
            st.bused[b2] = true;
        }
        // Assign switch si -> sj mapping slots positionally (A->A, B0->B0,
        // B1->B1); propagate branch-end constraints.
        fn try_assign(
            t1: &TrainTrack,
            t2: &TrainTrack,
            st: &mut St,
            si: usize,
            sj: usize,
        ) -> Option<Vec<(usize, usize, bool)>> {
            // returns undo log of (kind 0=branch 1=switch, index, _) entries
            let s1 = &t1.switches[si];
            let s2 = &t2.switches[sj];
            let mut log = Vec::new();
            let ok = (|| {
                if st.smap[si] == sj {
                    return true;
                }
                if st.smap[si] != usize::MAX || st.sused[sj] {
                    return false;
                }
                st.smap[si] = sj;
                st.sused[sj] = true;
                log.push((1usize, si, true));
                for ((_, _, e1), (_, _, e2)) in s1.slots().zip(s2.slots()) {
                    let b1 = e1.branch;
                    let b2 = e2.branch;
                    if st.bmap[b1 - 1] == b2 {
                        // ends must correspond consistently: same end index
                        if e1.end != e2.end {
                            return false;
                        }
                        continue;
                    }
                    if st.bmap[b1 - 1] != 0 || st.bused[b2] {
                        return false;
                    }
                    if e1.end != e2.end {
                        return false;
                    }
                    st.bmap[b1 - 1] = b2;
                    st.bused[b2] = true;
                    log.push((0usize, b1, true));
                }
                true
            })();
            if ok {
                Some(log)
            } else {
                // roll back partial
                for (kind, idx, _) in log.into_iter().rev() {
                    if kind == 0 {
                        let b2 = st.bmap[idx - 1];
                        st.bused[b2] = false;
                        st.bmap[idx - 1] = 0;
                    } else {
                        let sj = st.smap[idx];
                        st.sused[sj] = false;
                        st.smap[idx] = usize::MAX;
                    }
                }
                None
            }
        }
        fn undo(st: &mut St, log: Vec<(usize, usize, bool)>) {
            for (kind, idx, _) in log.into_iter().rev() {
                if kind == 0 {
                    let b2 = st.bmap[idx - 1];
                    st.bused[b2] = false;
                    st.bmap[idx - 1] = 0;
                } else {
                    let sj = st.smap[idx];
                    st.sused[sj] = false;
                    st.smap[idx] = usize::MAX;
                }
            }
        }
        fn search(
            t1: &TrainTrack,
            t2: &TrainTrack,
            st: &mut St,
            locs1: &[EndLoc],
            locs2: &[EndLoc],
        ) -> bool {
            // pick next unassigned switch, prefer one adjacent to assigned
            let n = t1.switches.len();
            let mut pick = None;
            for si in 0..n {
                if st.smap[si] != usize::MAX {
                    continue;
                }
                let touches = t1.switches[si].slots().any(|(_, _, e)| {
                    st.bmap[e.branch - 1] != 0
                });
                if touches {
                    pick = Some(si);
                    break;
                }
                if pick.is_none() {
                    pick = Some(si);
                }
            }
            let si = match pick {
                None => return true, // all assigned
                Some(s) => s,
            };
            // candidate targets: if some slot branch already mapped, the
            // target switch is forced through that end's location in t2
            let mut forced: Option<usize> = None;
            for (_, _, e) in t1.switches[si].slots() {
                let b2 = st.bmap[e.branch - 1];
                if b2 != 0 {
                    let l2 = locs2[2 * (b2 - 1) + e.end as usize];
                    forced = Some(l2.sw);
                    break;
                }
            }
            let candidates: Vec<usize> = match forced {
                Some(sj) => vec![sj],
                None => (0..n).filter(|&sj| !st.sused[sj]).collect(),
            };
            for sj in candidates {
                if let Some(log) = try_assign(t1, t2, st, si, sj) {
                    if search(t1, t2, st, locs1, locs2) {
                        return true;
                    }
                    undo(st, log);
                }
            }
            false
        }
        // try identity alignment first for determinism
        let try_order: Vec<usize> = (0..n_sw).collect();
        // seed: assign switch 0 to each candidate in order (identity first
        // means candidate = 0 first)
        for &sj in &try_order {
            if let Some(log) = try_assign(self, other, &mut st, 0, sj) {
                if search(self, other, &mut st, &locs1, &locs2) {
                    // verify marks correspond
                    let m = st.bmap.clone();
                    if marks_match(self, other, &m) {
                        return Some(m);
                    }
                }
                undo(&mut st, log);
            }
        }
        None
    }

    /// Rename branches by `m` (m[b-1] = new id of b). Switch ids are kept.
    pub fn rename_branches(&self, m: &[BranchId]) -> TrainTrack {
        let map = |e: BranchEnd| BranchEnd::new(m[e.branch - 1], e.end);
        TrainTrack {
            surface: self.surface,
            num_branches: self.num_branches,
            switches: self
                .switches
                .iter()
                .map(|s| Switch {
                    id: s.id,
                    side_a: s.side_a.iter().map(|&e| map(e)).collect(),
                    side_b: s.side_b.iter().map(|&e| map(e)).collect(),
                })
                .collect(),
            puncture_marks: self
                .puncture_marks
                .iter()
                .map(|p| PunctureMark {
                    at: map(p.at),
                    side: p.side,
                })
                .collect(),
        }
    }

    /// Equality of the underlying embedded structure, ignoring switch ids:
    /// compares the multisets of switches and the mark-designated regions.
    pub fn same_structure(&self, other: &TrainTrack) -> bool {
        if self.surface != other.surface || self.num_branches != other.num_branches {
            return false;
        }
        let norm = |t: &TrainTrack| {
            let mut sw: Vec<(Vec<BranchEnd>, Vec<BranchEnd>)> = t
                .switches
                .iter()
                .map(|s| (s.side_a.clone(), s.side_b.clone()))
                .collect();
            sw.sort();
            sw
        };
        norm(self) == norm(other) && {
            let seg = |t: &TrainTrack| {
                let mut v: Vec<(BranchId, SideFlag)> =
                    t.puncture_marks.iter().map(|m| m.segment()).collect();
                v.sort();
                v
            };
            // marks may name the same region via different tokens; compare
            // the regions they resolve to
            match (self.complementary_regions(), other.complementary_regions()) {
                (Ok(r1), Ok(r2)) => {
                    let key = |regs: &[Region], t: &TrainTrack| {
                        let mut marked: Vec<Vec<(BranchId, SideFlag)>> = regs
                            .iter()
                            .filter(|r| r.punctures > 0)
                            .map(|r| {
                                let mut s = r.segments.clone();
                                s.sort();
                                s
                            })
                            .collect();
                        marked.sort();
                        let _ = t;
                        marked
                    };
                    key(&r1, self) == key(&r2, other)
                }
                _ => seg(self) == seg(other),
            }
        }
    }

    /// Cheap isomorphism-invariant fingerprint used to bucket tracks during
    /// loop searches.
    pub fn iso_key(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        let mut census = match self.validate() {
            Ok(r) => r.region_census,
            Err(_) => Vec::new(),
        };
        census.sort();
        let mut roles: Vec<u8> = self
            .branch_roles()
            .map(|v| v.iter().map(|r| *r as u8).collect())
            .unwrap_or_default();
        roles.sort_unstable();
        let mut h = DefaultHasher::new();
        census.hash(&mut h);
        roles.hash(&mut h);
        self.num_branches.hash(&mut h);
        h.finish()
    }

    /// Stable identity for measure/track pairing checks.
    pub fn fingerprint(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// True when removing every branch outside `keep` (and smoothing the
    /// bivalent switches left behind) yields a train track: the subtrack
    /// relation written sigma < tau.
    pub fn is_subtrack(&self, keep: &[BranchId]) -> bool {
        let keep_set: std::collections::BTreeSet<BranchId> = keep.iter().copied().collect();
        if keep_set.is_empty() || keep_set.iter().any(|&b| b == 0 || b > self.num_branches) {
            return false;
        }
        let mut any = false;
        for sw in &self.switches {
            let a_in: Vec<bool> = sw.side_a.iter().map(|e| keep_set.contains(&e.branch)).collect();
            let b_in: Vec<bool> = sw.side_b.iter().map(|e| keep_set.contains(&e.branch)).collect();
            let na = a_in.iter().filter(|x| **x).count();
            let nb = b_in.iter().filter(|x| **x).count();
            match na + nb {
                0 => {}
                3 => any = true,
                2 => {
                    // must be one germ on each side: a smoothable point
                    if na != 1 || nb != 1 {
                        return false;
                    }
                    any = true;
                }
                _ => return false,
            }
        }
        any
    }
}

fn marks_match(t1: &TrainTrack, t2: &TrainTrack, m: &[BranchId]) -> bool {
    let renamed = t1.rename_branches(m);
    renamed.same_structure(t2)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum BranchRole {
    Large = 0,
    Mixed = 1,
    Small = 2,
}

impl fmt::Display for BranchRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchRole::Large => write!(f, "large"),
            BranchRole::Mixed => write!(f, "mixed"),
            BranchRole::Small => write!(f, "small"),
        }
    }
}

/// An embedded closed trainpath together with the branches hitting it from
/// the side; those carry the intersection formula i(mu, curve) = 1/2 sum of
/// the off-branch weights.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EmbeddedCurve {
    pub branch_cycle: Vec<BranchId>,
    pub incident_off_branches: Vec<BranchId>,
}

impl EmbeddedCurve {
    /// Translate the curve by a branch renaming (e.g. a period map's
    /// permutation); `m[b-1]` is the new name of branch b.
    pub fn rename(&self, m: &[BranchId]) -> EmbeddedCurve {
        EmbeddedCurve {
            branch_cycle: self.branch_cycle.iter().map(|&b| m[b - 1]).collect(),
            incident_off_branches: {
                let mut v: Vec<BranchId> =
                    self.incident_off_branches.iter().map(|&b| m[b - 1]).collect();
                v.sort_unstable();
                v
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::pinwheel;

    #[test]
    fn pinwheel_structure() {
        let t = pinwheel();
        assert!(t.is_generic());
        assert!(t.connected());
    }

    #[test]
    fn pinwheel_regions_partition() {
        let t = pinwheel();
        let regions = t.complementary_regions().unwrap();
        let total_segments: usize = regions.iter().map(|r| r.segments.len()).sum();
        assert_eq!(total_segments, 2 * t.num_branches);
        let total_cusps: usize = regions.iter().map(|r| r.cusps).sum();
        assert_eq!(total_cusps, t.switches.len());
    }

    #[test]
    fn pinwheel_census() {
        // hand census: 4 loop monogons + the inner trigon + the outer
        // region; puncture marks make 5 punctured regions, one of which has
        // a single cusp (the outside), plus l-monogons.
        let t = pinwheel();
        let regions = t.complementary_regions().unwrap();
        assert_eq!(regions.len(), 6);
        let mut census: Vec<(usize, usize)> =
            regions.iter().map(|r| (r.cusps, r.punctures)).collect();
        census.sort();
        assert_eq!(
            census,
            vec![(1, 1), (1, 1), (1, 1), (1, 1), (1, 1), (3, 0)]
        );
    }

    #[test]
    fn pinwheel_validates_maximal_s05() {
        let t = pinwheel();
        let rep = t.validate().unwrap();
        assert!(rep.generic && rep.connected);
        assert!(rep.euler_ok, "report: {:?}", rep);
        assert!(rep.index_ok);
        assert!(rep.forbidden.is_empty(), "{:?}", rep.forbidden);
        assert_eq!(rep.index_sum, Some(crate::rat_int(-3)));
        assert!(rep.maximal);
    }

    #[test]
    fn pinwheel_roles() {
        let t = pinwheel();
        let roles = t.branch_roles().unwrap();
        // x cycle: one A end each -> mixed; stems: mixed; loops: small
        for i in 0..4 {
            assert_eq!(roles[i], BranchRole::Mixed, "x{}", i + 1);
            assert_eq!(roles[4 + i], BranchRole::Mixed, "y{}", i + 1);
            assert_eq!(roles[8 + i], BranchRole::Small, "l{}", i + 1);
        }
    }

    #[test]
    fn pinwheel_cycle_curve() {
        let t = pinwheel();
        let curve = t.closed_trainpath(&[1, 2, 3, 4]).unwrap();
        assert_eq!(curve.incident_off_branches, vec![5, 6, 7, 8]);
        // repeated branch is rejected
        assert!(matches!(
            t.closed_trainpath(&[1, 2, 1, 4]),
            Err(TrackError::NotEmbedded(1))
        ));
        // loops are not trainpaths through their switch
        assert!(matches!(
            t.closed_trainpath(&[9]),
            Err(TrackError::NotATrainpath(_)) | Err(TrackError::TooFewOffBranches)
        ));
    }

    #[test]
    fn iso_identity_and_swap() {
        let t = pinwheel();
        let id = t.isomorphism(&t).unwrap();
        assert_eq!(id, (1..=12).collect::<Vec<_>>());
        // swap two loop branch numbers; isomorphism recovers a transposition
        let mut m: Vec<usize> = (1..=12).collect();
        m.swap(8, 9); // rename branches 9 <-> 10
        let t2 = t.rename_branches(&m);
        let sigma = t.isomorphism(&t2).unwrap();
        assert_eq!(t.rename_branches(&sigma), t2);
    }

    #[test]
    fn mirror_not_isomorphic() {
        let t = pinwheel();
        // mirror: reverse every B order
        let mirrored = TrainTrack {
            surface: t.surface,
            num_branches: t.num_branches,
            switches: t
                .switches
                .iter()
                .map(|s| Switch {
                    id: s.id,
                    side_a: s.side_a.clone(),
                    side_b: s.side_b.iter().rev().copied().collect(),
                })
                .collect(),
            puncture_marks: t.puncture_marks.clone(),
        };
        // the pinwheel is chiral: three stems inside, one outside
        assert!(t.isomorphism(&mirrored).is_none());
    }

    #[test]
    fn malformed_is_an_error_not_a_report() {
        let t = pinwheel();
        let mut bad = t.clone();
        bad.switches[0].side_b[0] = BranchEnd::new(2, 1); // duplicates an end
        assert!(matches!(
            bad.validate(),
            Err(TrackError::EndPlacement(_, _))
        ));
    }

    #[test]
    fn subtrack_relation() {
        let t = pinwheel();
        // the x cycle alone is a subtrack after smoothing (each w switch
        // keeps one A and one B germ)
        assert!(t.is_subtrack(&[1, 2, 3, 4]));
        // a stem alone leaves dangling switches
        assert!(!t.is_subtrack(&[5]));
        // full track is a subtrack of itself
        assert!(t.is_subtrack(&(1..=12).collect::<Vec<_>>()));
    }
}

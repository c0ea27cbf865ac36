//! Fixture construction tool.
//!
//! Builds the shipped corpus: the four-circle necklace track on the
//! seven-punctured sphere (maximal, recurrent, transversely recurrent,
//! with four embedded curves), the genus-two bundle track carrying the
//! two-handle / middle-Venn structure of the thin-part family, the
//! non-recurrent pinwheel, and the splitting loops, found by searching
//! the splitting graph. See fixtures/NOTES.md for the constructions.
//!
//! Usage: fixgen all [fixtures-dir]

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use ttk::io::{show_seq, show_track};
use ttk::matrix::{positivity_power, IMat};
use ttk::measure::{is_recurrent, is_transversely_recurrent_proxy, positive_tangential};
use ttk::moves::{Move, SplitSeq, SplitSide};
use ttk::pa::{concat_loops, perm_order, PeriodicSeq};
use ttk::track::{BranchEnd, PunctureMark, SurfaceSig, Switch, TrainTrack};

// ---------------------------------------------------------------------
// arrangement compiler: closed polylines -> train track
// ---------------------------------------------------------------------

pub type Pt = (f64, f64);

fn seg_intersect(a: Pt, b: Pt, c: Pt, d: Pt) -> Option<(f64, f64)> {
    let det = (b.0 - a.0) * (d.1 - c.1) - (b.1 - a.1) * (d.0 - c.0);
    if det.abs() < 1e-12 {
        return None;
    }
    let t = ((c.0 - a.0) * (d.1 - c.1) - (c.1 - a.1) * (d.0 - c.0)) / det;
    let u = ((c.0 - a.0) * (b.1 - a.1) - (c.1 - a.1) * (b.0 - a.0)) / det;
    if t > 1e-9 && t < 1.0 - 1e-9 && u > 1e-9 && u < 1.0 - 1e-9 {
        Some((t, u))
    } else {
        None
    }
}

struct CrossingGeom {
    pos_a: f64,
    pos_b: f64,
    curve_a: usize,
    curve_b: usize,
    dir_a: Pt,
    dir_b: Pt,
}

/// Compile a transversal curve arrangement into a train track. Every
/// crossing becomes a tangential merge (two trivalent switches joined by a
/// large merge branch); `flips[k]` picks the other smoothing diagonal at
/// crossing k. Returns the track (without puncture marks) and each input
/// curve's branch cycle.
pub fn compile_arrangement(
    curves: &[Vec<Pt>],
    surface: SurfaceSig,
    flips: &[bool],
) -> Option<(TrainTrack, Vec<Vec<usize>>)> {
    let mut crossings: Vec<CrossingGeom> = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (ca, cb) = (&curves[i], &curves[j]);
            let (na, nb) = (ca.len(), cb.len());
            for sa in 0..na {
                let (a0, a1) = (ca[sa], ca[(sa + 1) % na]);
                for sb in 0..nb {
                    let (b0, b1) = (cb[sb], cb[(sb + 1) % nb]);
                    if let Some((t, u)) = seg_intersect(a0, a1, b0, b1) {
                        crossings.push(CrossingGeom {
                            pos_a: sa as f64 + t,
                            pos_b: sb as f64 + u,
                            curve_a: i,
                            curve_b: j,
                            dir_a: (a1.0 - a0.0, a1.1 - a0.1),
                            dir_b: (b1.0 - b0.0, b1.1 - b0.1),
                        });
                    }
                }
            }
        }
    }
    crossings.sort_by(|x, y| {
        (x.curve_a, x.curve_b)
            .cmp(&(y.curve_a, y.curve_b))
            .then(x.pos_a.partial_cmp(&y.pos_a).unwrap())
    });
    if flips.len() != crossings.len() {
        return None;
    }
    let n_curves = curves.len();
    let mut marks: Vec<Vec<(usize, bool, f64)>> = vec![Vec::new(); n_curves];
    for (k, c) in crossings.iter().enumerate() {
        marks[c.curve_a].push((k, true, c.pos_a));
        marks[c.curve_b].push((k, false, c.pos_b));
    }
    for m in marks.iter_mut() {
        if m.is_empty() {
            return None;
        }
        m.sort_by(|x, y| x.2.partial_cmp(&y.2).unwrap());
    }
    let mut arc_id = 0usize;
    let mut arcs: Vec<Vec<usize>> = Vec::new();
    for m in &marks {
        let v: Vec<usize> = m
            .iter()
            .map(|_| {
                arc_id += 1;
                arc_id
            })
            .collect();
        arcs.push(v);
    }
    let n_arcs = arc_id;
    let merge_of = |k: usize| n_arcs + k + 1;
    let num_branches = n_arcs + crossings.len();
    let mut strands: Vec<[(usize, usize); 2]> = vec![[(0, 0); 2]; crossings.len()];
    for (c, m) in marks.iter().enumerate() {
        let n = m.len();
        for (t, &(k, role_a, _)) in m.iter().enumerate() {
            let incoming = arcs[c][(t + n - 1) % n];
            let outgoing = arcs[c][t];
            strands[k][if role_a { 0 } else { 1 }] = (incoming, outgoing);
        }
    }
    let mut switches = Vec::new();
    for (k, cg) in crossings.iter().enumerate() {
        let (a_in, a_out) = strands[k][0];
        let (b_in, b_out) = strands[k][1];
        let (ua, vb) = (cg.dir_a, cg.dir_b);
        let germs = [
            (BranchEnd::new(a_in, 1), (-ua.0, -ua.1)),
            (BranchEnd::new(a_out, 0), ua),
            (BranchEnd::new(b_in, 1), (-vb.0, -vb.1)),
            (BranchEnd::new(b_out, 0), vb),
        ];
        let dot = ua.0 * vb.0 + ua.1 * vb.1;
        let mut w = if dot >= 0.0 {
            (ua.0 + vb.0, ua.1 + vb.1)
        } else {
            (ua.0 - vb.0, ua.1 - vb.1)
        };
        if flips[k] {
            w = (-w.1, w.0);
        }
        let side_of = |d: Pt| d.0 * w.0 + d.1 * w.1 > 0.0;
        let pos: Vec<(BranchEnd, Pt)> = germs.iter().copied().filter(|g| side_of(g.1)).collect();
        let neg: Vec<(BranchEnd, Pt)> = germs.iter().copied().filter(|g| !side_of(g.1)).collect();
        if pos.len() != 2 || neg.len() != 2 {
            return None;
        }
        // B order is left-to-right seen from the merge (side A) germ
        let order = |two: &[(BranchEnd, Pt)], look: Pt| -> (BranchEnd, BranchEnd) {
            let cross = |d: Pt| look.0 * d.1 - look.1 * d.0;
            if cross(two[0].1) >= cross(two[1].1) {
                (two[0].0, two[1].0)
            } else {
                (two[1].0, two[0].0)
            }
        };
        let (p0, p1) = order(&pos, w);
        let (q0, q1) = order(&neg, (-w.0, -w.1));
        switches.push(Switch::new(2 * k + 1, BranchEnd::new(merge_of(k), 0), p0, p1));
        switches.push(Switch::new(2 * k + 2, BranchEnd::new(merge_of(k), 1), q0, q1));
    }
    let track = TrainTrack::new(surface, num_branches, switches, Vec::new()).ok()?;
    let mut cycles = Vec::new();
    for (c, m) in marks.iter().enumerate() {
        let mut cyc = Vec::new();
        for (t, &(k, _, _)) in m.iter().enumerate() {
            cyc.push(merge_of(k));
            cyc.push(arcs[c][t]);
        }
        cycles.push(cyc);
    }
    Some((track, cycles))
}

fn circle(cx: f64, cy: f64, r: f64, n: usize, phase: f64) -> Vec<Pt> {
    (0..n)
        .map(|i| {
            let t = phase + 2.0 * std::f64::consts::PI * (i as f64) / (n as f64);
            (cx + r * t.cos(), cy + r * t.sin())
        })
        .collect()
}

/// Four circles around the origin, consecutive ones overlapping.
pub fn necklace_curves() -> Vec<Vec<Pt>> {
    (0..4)
        .map(|i| {
            let th = std::f64::consts::FRAC_PI_2 * i as f64;
            circle(th.cos(), th.sin(), 0.8, 48, 0.11 + 0.37 * i as f64)
        })
        .collect()
}

fn mark_regions(t: &TrainTrack, punctured: &[usize]) -> Option<TrainTrack> {
    let regions = t.complementary_regions().ok()?;
    let mut marks = Vec::new();
    for &r in punctured {
        let (br, side) = *regions.get(r)?.segments.iter().min()?;
        marks.push(PunctureMark {
            at: BranchEnd::new(br, 0),
            side,
        });
    }
    let mut out = t.clone();
    out.puncture_marks = marks;
    out.check_structure().ok()?;
    Some(out)
}

/// Search the necklace smoothings for a maximal completion: all curves
/// embedded, recurrent, transversely recurrent.
pub fn find_necklace() -> Option<(TrainTrack, Vec<Vec<usize>>)> {
    let curves = necklace_curves();
    for mask in 0..(1u32 << 8) {
        let flips: Vec<bool> = (0..8).map(|i| mask & (1 << i) != 0).collect();
        let (t, cycles) = match compile_arrangement(&curves, SurfaceSig::new(0, 7), &flips) {
            Some(x) => x,
            None => continue,
        };
        let regions = match t.complementary_regions() {
            Ok(r) => r,
            Err(_) => continue,
        };
        if regions.len() != 10 {
            continue;
        }
        let punctured: Vec<usize> = regions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.cusps == 1)
            .map(|(i, _)| i)
            .collect();
        if punctured.len() != 7 || !regions.iter().all(|r| r.cusps == 1 || r.cusps == 3) {
            continue;
        }
        let t = match mark_regions(&t, &punctured) {
            Some(t) => t,
            None => continue,
        };
        let rep = match t.validate() {
            Ok(r) => r,
            Err(_) => continue,
        };
        if !(rep.is_valid() && rep.maximal) {
            continue;
        }
        if cycles.iter().any(|c| t.closed_trainpath(c).is_err()) {
            continue;
        }
        if !matches!(is_recurrent(&t), Ok((true, _))) {
            continue;
        }
        if !matches!(is_transversely_recurrent_proxy(&t), Ok((true, _))) {
            continue;
        }
        eprintln!("necklace: flips {:#010b}", mask);
        return Some((t, cycles));
    }
    None
}

// ---------------------------------------------------------------------
// the genus-two bundle track
// ---------------------------------------------------------------------

/// Branch ids of the bundle track on the four-punctured torus: two
/// stadium complexes (curves gamma_i around puncture pairs, with an inner
/// stem-and-loop and an outer tether), and a middle handle web: curves a,
/// b on the handle crossing four times (the theta merge plus three more),
/// with the tethers landing on subdividers of an a-arc and a b-arc.
pub mod g2 {
    // gamma1 stadium: o1 arc, o2 large bottom, stem t1, loop l1, tether c1
    pub const O1: usize = 1;
    pub const O2: usize = 2;
    pub const T1: usize = 3;
    pub const L1: usize = 4;
    pub const C1: usize = 5;
    // gamma2 stadium
    pub const O3: usize = 6;
    pub const O4: usize = 7;
    pub const T2: usize = 8;
    pub const L2: usize = 9;
    pub const C2: usize = 10;
    // middle: merges of a x b
    pub const P: usize = 11;
    pub const X: usize = 12;
    pub const Y: usize = 13;
    pub const Z: usize = 14;
    // a arcs (a = [P, QA, X, QB, Y, QC, Z, QD], QA split by tether 1)
    pub const QA1: usize = 15;
    pub const QA2: usize = 16;
    pub const QB: usize = 17;
    pub const QC: usize = 18;
    pub const QD: usize = 19;
    // b arcs (b = [P, RA, X, RB, Y, RC, Z, RD], RA split by tether 2)
    pub const RA1: usize = 20;
    pub const RA2: usize = 21;
    pub const RB: usize = 22;
    pub const RC: usize = 23;
    pub const RD: usize = 24;

    pub const GAMMA1: [usize; 2] = [O1, O2];
    pub const GAMMA2: [usize; 2] = [O3, O4];
    pub const CURVE_A: [usize; 9] = [P, QA1, QA2, X, QB, Y, QC, Z, QD];
    pub const CURVE_B: [usize; 9] = [P, RA1, RA2, X, RB, Y, RC, Z, RD];

    /// Branches avoiding gamma_i's switches (the two stadium oval switch
    /// pairs) and off the gamma_i disc side.
    pub fn sigma1() -> Vec<usize> {
        (1..=24).filter(|b| ![O1, O2, T1, L1, C1].contains(b)).collect()
    }
    pub fn sigma2() -> Vec<usize> {
        (1..=24).filter(|b| ![O3, O4, T2, L2, C2].contains(b)).collect()
    }
    pub fn sigma0() -> Vec<usize> {
        (1..=24)
            .filter(|b| ![O1, O2, T1, L1, C1, O3, O4, T2, L2, C2].contains(b))
            .collect()
    }
}

/// One ribbon candidate: 4 crossing pairing bits, 16 B-order bits (8
/// crossing switches use 0..8; stadium and subdivider switches 8..16).
pub fn build_g2(pairings: u8, orders: u16) -> Option<TrainTrack> {
    use g2::*;
    let e = BranchEnd::new;
    let ob = |i: usize| orders & (1 << i) != 0;
    let pb = |i: usize| pairings & (1 << i) != 0;
    let mut sw: Vec<Switch> = Vec::new();
    let mut sw_id = 0usize;
    let mut cross = |merge: usize,
                     c1_in: BranchEnd,
                     c1_out: BranchEnd,
                     c2_in: BranchEnd,
                     c2_out: BranchEnd,
                     pair_flip: bool,
                     bits: (bool, bool)| {
        let (x, y) = if pair_flip {
            ((c1_in, c2_out), (c1_out, c2_in))
        } else {
            ((c1_in, c2_in), (c1_out, c2_out))
        };
        let mk = |id: usize, m: BranchEnd, s: (BranchEnd, BranchEnd), flip: bool| {
            let (b0, b1) = if flip { (s.1, s.0) } else { (s.0, s.1) };
            Switch::new(id, m, b0, b1)
        };
        sw_id += 1;
        sw.push(mk(sw_id, e(merge, 0), x, bits.0));
        sw_id += 1;
        sw.push(mk(sw_id, e(merge, 1), y, bits.1));
    };
    // the four a x b crossings; arcs in cyclic order along each curve
    cross(P, e(QD, 1), e(QA1, 0), e(RD, 1), e(RA1, 0), pb(0), (ob(0), ob(1)));
    cross(X, e(QA2, 1), e(QB, 0), e(RA2, 1), e(RB, 0), pb(1), (ob(2), ob(3)));
    cross(Y, e(QB, 1), e(QC, 0), e(RB, 1), e(RC, 0), pb(2), (ob(4), ob(5)));
    cross(Z, e(QC, 1), e(QD, 0), e(RC, 1), e(RD, 0), pb(3), (ob(6), ob(7)));
    // tether subdividers on QA and RA
    let sub = |id: usize, a_end: BranchEnd, b0: BranchEnd, b1: BranchEnd, flip: bool| {
        let (x, y) = if flip { (b1, b0) } else { (b0, b1) };
        Switch::new(id, a_end, x, y)
    };
    sw.push(sub(9, e(QA1, 1), e(QA2, 0), e(C1, 1), ob(8)));
    sw.push(sub(10, e(RA1, 1), e(RA2, 0), e(C2, 1), ob(9)));
    // stadiums, large form: o2 through at both oval switches; the stem
    // hangs inside at one switch, the tether outside at the other
    sw.push(sub(11, e(O2, 0), e(T1, 0), e(O1, 1), ob(10)));
    sw.push(sub(12, e(O2, 1), e(C1, 0), e(O1, 0), ob(11)));
    sw.push(sub(13, e(T1, 1), e(L1, 0), e(L1, 1), ob(12)));
    sw.push(sub(14, e(O4, 0), e(T2, 0), e(O3, 1), ob(13)));
    sw.push(sub(15, e(O4, 1), e(C2, 0), e(O3, 0), ob(14)));
    sw.push(sub(16, e(T2, 1), e(L2, 0), e(L2, 1), ob(15)));
    TrainTrack::new(SurfaceSig::new(1, 4), 24, sw, Vec::new()).ok()
}

pub fn find_g2() -> Option<TrainTrack> {
    use g2::*;
    let curves: [&[usize]; 4] = [&GAMMA1, &GAMMA2, &CURVE_A, &CURVE_B];
    for pairings in 0..16u8 {
        for orders in 0..(1u32 << 16) {
            let t = match build_g2(pairings, orders as u16) {
                Some(t) => t,
                None => continue,
            };
            let regions = match t.complementary_regions() {
                Ok(r) => r,
                Err(_) => continue,
            };
            let f = regions.len() as i64;
            if 16 - 24 + f != 2 - 2 {
                continue; // genus 1 needs V - E + F = 0
            }
            let ones: Vec<usize> = regions
                .iter()
                .enumerate()
                .filter(|(_, r)| r.cusps == 1)
                .map(|(i, _)| i)
                .collect();
            if ones.len() != 4 || !regions.iter().all(|r| r.cusps == 1 || r.cusps == 3) {
                continue;
            }
            let t = match mark_regions(&t, &ones) {
                Some(t) => t,
                None => continue,
            };
            let rep = match t.validate() {
                Ok(r) => r,
                Err(_) => continue,
            };
            if !(rep.is_valid() && rep.maximal) {
                continue;
            }
            if !curves.iter().all(|c| t.closed_trainpath(c).is_ok()) {
                continue;
            }
            if !matches!(is_recurrent(&t), Ok((true, _))) {
                continue;
            }
            if !matches!(positive_tangential(&t), Ok(Some(_))) {
                continue;
            }
            if !t.is_subtrack(&sigma0()) || !t.is_subtrack(&sigma1()) || !t.is_subtrack(&sigma2())
            {
                continue;
            }
            eprintln!(
                "bundle track: pairings {:#06b} orders {:#018b}",
                pairings, orders
            );
            return Some(t);
        }
    }
    None
}

// ---------------------------------------------------------------------
// loop searches
// ---------------------------------------------------------------------

pub struct LoopSearch {
    pub allowed: Option<BTreeSet<usize>>,
    pub losers_inside: bool,
    pub fix: BTreeSet<usize>,
    pub preserve_set: Option<BTreeSet<usize>>,
    pub use_shifts: bool,
    pub max_nodes: usize,
    pub max_depth: usize,
    pub max_loops: usize,
}

impl Default for LoopSearch {
    fn default() -> Self {
        LoopSearch {
            allowed: None,
            losers_inside: false,
            fix: BTreeSet::new(),
            preserve_set: None,
            use_shifts: true,
            max_nodes: 60_000,
            max_depth: 10,
            max_loops: 8,
        }
    }
}

impl LoopSearch {
    pub fn run(&self, start: &TrainTrack) -> Vec<PeriodicSeq> {
        let seed: Vec<(usize, usize)> = self.fix.iter().map(|&b| (b, b)).collect();
        let mut found = Vec::new();
        let mut visited: HashMap<TrainTrack, ()> = HashMap::new();
        let mut queue: VecDeque<(TrainTrack, Vec<Move>)> = VecDeque::new();
        visited.insert(start.clone(), ());
        queue.push_back((start.clone(), Vec::new()));
        while let Some((track, path)) = queue.pop_front() {
            if path.len() >= self.max_depth || visited.len() >= self.max_nodes {
                continue;
            }
            let mut moves: Vec<Move> = Vec::new();
            for e in track.large_branches() {
                if let Some(allowed) = &self.allowed {
                    if !allowed.contains(&e) {
                        continue;
                    }
                }
                moves.push(Move::Split { branch: e, side: SplitSide::R });
                moves.push(Move::Split { branch: e, side: SplitSide::L });
            }
            if self.use_shifts {
                if let Ok(roles) = track.branch_roles() {
                    for (i, r) in roles.iter().enumerate() {
                        if *r == ttk::track::BranchRole::Mixed {
                            let b = i + 1;
                            if self.allowed.as_ref().map(|a| a.contains(&b)).unwrap_or(true) {
                                moves.push(Move::Shift { branch: b });
                            }
                        }
                    }
                }
            }
            for mv in moves {
                let (next, rec) = match ttk::moves::apply_move(&track, mv) {
                    Ok(x) => x,
                    Err(_) => continue,
                };
                if self.losers_inside {
                    if let Some(allowed) = &self.allowed {
                        if rec.losers.iter().any(|l| !allowed.contains(l)) {
                            continue;
                        }
                    }
                }
                if visited.contains_key(&next) {
                    continue;
                }
                visited.insert(next.clone(), ());
                let mut new_path = path.clone();
                new_path.push(mv);
                // closures must contain at least one split
                let has_split = new_path.iter().any(|m| matches!(m, Move::Split { .. }));
                if has_split {
                    if let Some(sigma) = next.isomorphism_seeded(start, &seed) {
                        if self.closure_ok(&sigma) {
                            found.push(PeriodicSeq {
                                seq: SplitSeq::new(start.clone(), new_path.clone()),
                                sigma: sigma.clone(),
                                order: perm_order(&sigma),
                            });
                            if found.len() >= self.max_loops {
                                return found;
                            }
                        }
                    }
                }
                queue.push_back((next, new_path));
            }
        }
        found
    }

    fn closure_ok(&self, sigma: &[usize]) -> bool {
        if let Some(set) = &self.preserve_set {
            for &b in set {
                if !set.contains(&sigma[b - 1]) {
                    return false;
                }
            }
        }
        true
    }
}

fn block_of(c: &IMat, ids: &[usize]) -> IMat {
    let mut sub = IMat::zero(ids.len());
    for (i, &bi) in ids.iter().enumerate() {
        for (j, &bj) in ids.iter().enumerate() {
            sub[(i, j)] = c[(bi - 1, bj - 1)].clone();
        }
    }
    sub
}

fn is_primitive_on(ps: &PeriodicSeq, block: Option<&[usize]>) -> bool {
    let c = match ps.period_matrix() {
        Ok(c) => c,
        Err(_) => return false,
    };
    let m = match block {
        None => c,
        Some(ids) => block_of(&c, ids),
    };
    let bound = (m.n.saturating_sub(1)).pow(2) + 1;
    positivity_power(&m, bound).is_some()
}

/// Products of up to three loops whose period matrix mixes the block.
pub fn find_primitive_product(
    loops: &[PeriodicSeq],
    block: Option<&[usize]>,
) -> Option<PeriodicSeq> {
    let mut singles: Vec<&PeriodicSeq> = loops.iter().collect();
    singles.sort_by_key(|ps| ps.seq.moves.len());
    for ps in &singles {
        if is_primitive_on(ps, block) {
            return Some((*ps).clone());
        }
    }
    for i in 0..singles.len() {
        for j in 0..singles.len() {
            if i == j {
                continue;
            }
            if let Ok(p) = concat_loops(&[singles[i], singles[j]]) {
                if is_primitive_on(&p, block) {
                    return Some(p);
                }
            }
        }
    }
    for i in 0..singles.len() {
        for j in 0..singles.len() {
            for k in 0..singles.len() {
                if i == j && j == k {
                    continue;
                }
                if let Ok(p) = concat_loops(&[singles[i], singles[j], singles[k]]) {
                    if is_primitive_on(&p, block) {
                        return Some(p);
                    }
                }
            }
        }
    }
    None
}

/// Power a loop until the period matrix (or block) is entrywise >= 1.
pub fn make_tight_on(ps: &PeriodicSeq, block: Option<&[usize]>) -> Option<PeriodicSeq> {
    let c = ps.period_matrix().ok()?;
    let m = match block {
        None => c,
        Some(ids) => block_of(&c, ids),
    };
    let bound = (m.n.saturating_sub(1)).pow(2) + 1;
    let n = positivity_power(&m, bound)?;
    Some(ps.power(n))
}

fn seq_block_tight(ps: &PeriodicSeq, ids: &[usize]) -> bool {
    match ps.period_matrix() {
        Ok(c) => ids
            .iter()
            .all(|&i| ids.iter().all(|&j| c[(i - 1, j - 1)] >= BigInt::one())),
        Err(_) => false,
    }
}

/// Positive block, permutation complement, zero cross blocks.
fn seq_block_clean(ps: &PeriodicSeq, ids: &[usize]) -> bool {
    let c = match ps.period_matrix() {
        Ok(c) => c,
        Err(_) => return false,
    };
    let p = c.n;
    let mut inside = vec![false; p];
    for &b in ids {
        inside[b - 1] = true;
    }
    for i in 0..p {
        for j in 0..p {
            let x = &c[(i, j)];
            let ok = match (inside[i], inside[j]) {
                (true, true) => x >= &BigInt::one(),
                (false, false) => x <= &BigInt::one(),
                _ => x.is_zero(),
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Twist loops along an embedded curve: splits only on its branches,
/// closure preserving the branch set.
fn twist_loops(track: &TrainTrack, cycle: &[usize], max_loops: usize) -> Vec<PeriodicSeq> {
    LoopSearch {
        allowed: Some(cycle.iter().copied().collect()),
        preserve_set: Some(cycle.iter().copied().collect()),
        max_depth: 2 * cycle.len() + 2,
        max_loops,
        ..Default::default()
    }
    .run(track)
}


/// Random splitting walk with pigeonhole closure: walk from `start` with
/// coin-flip split choices, collecting every return to a previously
/// visited isomorphism class. Returns (base track, loop) pairs; the walk
/// restarts when it dies out. Tracks are bucketed by a cheap invariant
/// before exact isomorphism checks.
pub fn random_walk_loops(
    start: &TrainTrack,
    seed: u64,
    max_steps: usize,
    min_len: usize,
    max_loops: usize,
) -> Vec<(TrainTrack, PeriodicSeq)> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    let mut found = Vec::new();
    let mut trail: Vec<(TrainTrack, usize)> = vec![(start.clone(), 0)];
    let mut moves: Vec<Move> = Vec::new();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    buckets.entry(start.iso_key()).or_default().push(0);
    let mut track = start.clone();
    for _ in 0..max_steps {
        let large = track.large_branches();
        if large.is_empty() {
            break;
        }
        let e = large[rng.random_range(0..large.len())];
        let side = if rng.random_bool(0.5) {
            SplitSide::R
        } else {
            SplitSide::L
        };
        let (next, _) = match ttk::moves::split(&track, e, side) {
            Ok(x) => x,
            Err(_) => continue,
        };
        moves.push(Move::Split { branch: e, side });
        track = next;
        let key = track.iso_key();
        if let Some(ids) = buckets.get(&key) {
            for &i in ids {
                let (base, base_len) = &trail[i];
                if moves.len() - base_len < min_len {
                    continue;
                }
                if let Some(sigma) = track.isomorphism(base) {
                    let loop_moves = moves[*base_len..].to_vec();
                    found.push((
                        base.clone(),
                        PeriodicSeq {
                            seq: SplitSeq::new(base.clone(), loop_moves),
                            sigma: sigma.clone(),
                            order: perm_order(&sigma),
                        },
                    ));
                    if found.len() >= max_loops {
                        return found;
                    }
                }
            }
        }
        buckets.entry(key).or_default().push(trail.len());
        trail.push((track.clone(), moves.len()));
    }
    found
}

// ---------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------

fn write(path: &Path, content: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, content).unwrap();
    eprintln!("wrote {}", path.display());
}

fn list(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}


/// Embedded closed trainpaths up to a length bound, one per branch set.
pub fn enumerate_cycles(track: &TrainTrack, max_len: usize) -> Vec<Vec<usize>> {
    use ttk::track::Side;
    let locs = track.end_locations();
    let loc_of = |e: BranchEnd| locs[2 * (e.branch - 1) + e.end as usize];
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for start_branch in 1..=track.num_branches {
        for start_end in 0..2u8 {
            let start = BranchEnd::new(start_branch, start_end);
            let mut stack: Vec<(BranchEnd, Vec<usize>)> = vec![(start, vec![start_branch])];
            while let Some((cur, path)) = stack.pop() {
                let arrive = BranchEnd::new(cur.branch, 1 - cur.end);
                let loc = loc_of(arrive);
                let sw = &track.switches[loc.sw];
                let nexts: Vec<BranchEnd> = match loc.side {
                    Side::A => sw.side_b.clone(),
                    Side::B => sw.side_a.clone(),
                };
                for exit in nexts {
                    if exit == start && path.len() >= 2 {
                        let mut key = path.clone();
                        key.sort_unstable();
                        if seen.insert(key) && track.closed_trainpath(&path).is_ok() {
                            out.push(path.clone());
                        }
                        continue;
                    }
                    if path.len() >= max_len
                        || path.contains(&exit.branch)
                        || exit.branch < path[0]
                    {
                        continue;
                    }
                    let mut np = path.clone();
                    np.push(exit.branch);
                    stack.push((exit, np));
                }
            }
        }
    }
    out.sort_by_key(|c| c.len());
    out
}

/// The shipped seven-punctured-sphere track: two stadium curve complexes
/// around puncture pairs and a four-switch twist region around two more,
/// tethered through a pincer frame. Found by exhaustive search over the
/// ribbon completions of that wiring; maximal, recurrent, transversely
/// recurrent, with curves [1,2], [6,7] and [11,12,13,14] embedded.
const G0M7_TTK: &str = "ttk 1
surface 0 7
branches 24
sw 1 A (2.0) B (3.0) (1.1)
sw 2 A (2.1) B (5.0) (1.0)
sw 3 A (3.1) B (4.0) (4.1)
sw 4 A (7.0) B (10.0) (6.1)
sw 5 A (7.1) B (8.0) (6.0)
sw 6 A (8.1) B (9.0) (9.1)
sw 7 A (11.0) B (14.1) (15.0)
sw 8 A (11.1) B (12.0) (16.0)
sw 9 A (13.0) B (12.1) (15.1)
sw 10 A (13.1) B (14.0) (17.0)
sw 11 A (18.0) B (19.0) (5.1)
sw 12 A (22.0) B (18.1) (19.1)
sw 13 A (20.0) B (21.0) (10.1)
sw 14 A (23.0) B (20.1) (21.1)
sw 15 A (22.1) B (16.1) (24.0)
sw 16 A (23.1) B (24.1) (17.1)
punct 1.0 R
punct 4.0 R
punct 6.0 L
punct 9.0 R
punct 11.0 R
punct 11.0 L
punct 13.0 L
";

fn generate_all(dir: &Path) {
    let nonrec = ttk::samples::pinwheel();
    write(&dir.join("nonrec.ttk"), &show_track(&nonrec));

    // --- the seven-punctured-sphere fixture: three tethered curve
    // complexes (two stadium curves, one four-switch twist region) ---
    let neck = ttk::io::parse_track_str(G0M7_TTK, Path::new("builtin")).expect("bad builtin track");
    let rep = neck.validate().unwrap();
    assert!(rep.is_valid() && rep.maximal, "g0m7 fixture invalid");
    write(&dir.join("g0m7.ttk"), &show_track(&neck));
    let cycles: Vec<Vec<usize>> = vec![vec![1, 2], vec![6, 7], vec![11, 12, 13, 14]];
    let mut curves_txt = String::new();
    for c in &cycles {
        assert!(neck.closed_trainpath(c).is_ok());
        curves_txt.push_str(&format!("curve {}\n", list(c)));
    }
    write(&dir.join("g0m7_curves.txt"), &curves_txt);

    // a loop that never becomes positive: a twist loop on g0m7 (twists
    // along disjoint curves leave the complement untouched)
    let mut bad: Option<PeriodicSeq> = None;
    for c in &cycles {
        let tl = twist_loops(&neck, c, 2);
        eprintln!("g0m7 twist loops along {:?}: {}", c, tl.len());
        if bad.is_none() {
            bad = tl.first().cloned();
        }
    }
    let bad = bad.expect("no twist loop for bad_loop fixture");
    assert!(!is_primitive_on(&bad, None));
    write(
        &dir.join("bad_loop.seq"),
        &show_seq(&bad.seq, "g0m7.ttk", Some(&bad.sigma)),
    );

    // --- genus-two bundle track, the phi loops, and the pa loop ---
    let tau = find_g2().expect("no genus-two completion");
    write(&dir.join("g1m4.ttk"), &show_track(&tau));
    use g2::*;
    let phi_sources: [(&str, Vec<usize>, Vec<&[usize]>); 3] = [
        ("phi0", sigma0(), vec![&CURVE_A[..], &CURVE_B[..]]),
        (
            "phi1",
            sigma1(),
            vec![&CURVE_A[..], &CURVE_B[..], &GAMMA2[..]],
        ),
        (
            "phi2",
            sigma2(),
            vec![&CURVE_A[..], &CURVE_B[..], &GAMMA1[..]],
        ),
    ];
    let mut phis: Vec<PeriodicSeq> = Vec::new();
    for (name, sig, curve_list) in &phi_sources {
        let sig_set: BTreeSet<usize> = sig.iter().copied().collect();
        let outside: BTreeSet<usize> = (1..=tau.num_branches)
            .filter(|b| !sig_set.contains(b))
            .collect();
        let mut raw: Vec<PeriodicSeq> = Vec::new();
        for cycle in curve_list {
            let loops = LoopSearch {
                allowed: Some(cycle.iter().copied().collect()),
                losers_inside: true,
                fix: outside.clone(),
                preserve_set: Some(cycle.iter().copied().collect()),
                max_depth: 2 * cycle.len() + 2,
                max_loops: 4,
                ..Default::default()
            }
            .run(&tau);
            eprintln!("{name}: cycle {:?}: {} loops", cycle, loops.len());
            raw.extend(loops);
        }
        raw.retain(|ps| ps.seq.moves.iter().all(|m| sig_set.contains(&m.branch())));
        let product = find_primitive_product(&raw, Some(sig))
            .unwrap_or_else(|| panic!("{name}: no block-primitive product"));
        let ps = make_tight_on(&product, Some(sig))
            .unwrap_or_else(|| panic!("{name}: powering failed"));
        assert!(seq_block_tight(&ps, sig), "{name}: block not tight");
        assert!(seq_block_clean(&ps, sig), "{name}: block structure dirty");
        eprintln!("{name}: {} moves, order {}", ps.seq.moves.len(), ps.order);
        phis.push(ps);
    }
    for (name, ps) in ["phi0", "phi1", "phi2"].iter().zip(&phis) {
        write(
            &dir.join("zeta").join(format!("{name}.seq")),
            &show_seq(&ps.seq, "../g1m4.ttk", Some(&ps.sigma)),
        );
    }
    write(
        &dir.join("zeta").join("bundle.ttb"),
        &format!(
            "bundle v1\ntrack ../g1m4.ttk\nsigma 0 {}\nsigma 1 {}\nsigma 2 {}\nloop 0 phi0.seq\nloop 1 phi1.seq\nloop 2 phi2.seq\ncurve 1 {}\ncurve 2 {}\n",
            list(&sigma0()),
            list(&sigma1()),
            list(&sigma2()),
            list(&GAMMA1),
            list(&GAMMA2),
        ),
    );

    // the main pseudo-Anosov loop: zeta(1) = phi1 . phi0^2 . phi2 . phi0^2
    // (rightmost first), primitive by the covering structure of the blocks
    let zeta1 = concat_loops(&[&phis[0], &phis[0], &phis[2], &phis[0], &phis[0], &phis[1]])
        .expect("zeta(1) assembly failed");
    assert!(is_primitive_on(&zeta1, None), "zeta(1) not primitive");
    let main_loop = make_tight_on(&zeta1, None).expect("zeta(1) powering failed");
    assert!(main_loop.seq.is_tight().unwrap());
    eprintln!(
        "main loop: {} moves, order {}",
        main_loop.seq.moves.len(),
        main_loop.order
    );
    write(
        &dir.join("g1m4_loop.seq"),
        &show_seq(&main_loop.seq, "g1m4.ttk", Some(&main_loop.sigma)),
    );

    // --- twist bundle: the pa loop plus a twist along alpha ---
    let alpha_twists = twist_loops(&tau, &CURVE_A, 2);
    eprintln!("alpha twist loops: {}", alpha_twists.len());
    let alpha_twist = alpha_twists.first().expect("no twist loop along alpha");
    write(
        &dir.join("twist").join("base.seq"),
        &show_seq(&main_loop.seq, "../g1m4.ttk", Some(&main_loop.sigma)),
    );
    write(
        &dir.join("twist").join("twist.seq"),
        &show_seq(&alpha_twist.seq, "../g1m4.ttk", Some(&alpha_twist.sigma)),
    );
    write(
        &dir.join("twist").join("bundle.ttb"),
        &format!(
            "bundle v1\ntrack ../g1m4.ttk\nbaseloop base.seq\ntwistcurve {}\ntwistseq twist.seq\n",
            list(&CURVE_A)
        ),
    );
    eprintln!("done");
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(|s| s.as_str()) {
        Some("all") => {
            let dir = args
                .get(1)
                .cloned()
                .unwrap_or_else(|| "crates/ttk/fixtures".to_string());
            generate_all(Path::new(&dir));
        }
        Some("necklace") => match find_necklace() {
            Some((t, cycles)) => {
                print!("{}", show_track(&t));
                for c in cycles {
                    eprintln!("curve {}", list(&c));
                }
            }
            None => {
                eprintln!("no valid necklace");
                std::process::exit(1);
            }
        },
        Some("g2") => match find_g2() {
            Some(t) => print!("{}", show_track(&t)),
            None => {
                eprintln!("no valid genus-2 track");
                std::process::exit(1);
            }
        },
        Some("neckscan") => {
            let curves = necklace_curves();
            let mut hist: HashMap<String, usize> = HashMap::new();
            for mask in 0..(1u32 << 8) {
                let flips: Vec<bool> = (0..8).map(|i| mask & (1 << i) != 0).collect();
                match compile_arrangement(&curves, SurfaceSig::new(0, 7), &flips) {
                    Some((t, _)) => match t.complementary_regions() {
                        Ok(r) => {
                            let mut c: Vec<usize> = r.iter().map(|x| x.cusps).collect();
                            c.sort_unstable();
                            *hist.entry(format!("{} regions {:?}", r.len(), c)).or_insert(0) += 1;
                        }
                        Err(e) => {
                            *hist.entry(format!("err {e}")).or_insert(0) += 1;
                        }
                    },
                    None => {
                        *hist.entry("compile failed".into()).or_insert(0) += 1;
                    }
                }
            }
            let mut v: Vec<_> = hist.into_iter().collect();
            v.sort_by(|a, b| b.1.cmp(&a.1));
            for (k, n) in v {
                println!("{n:6} {k}");
            }
        }
        Some("walkstat") => {
            let neck = ttk::io::parse_track_str(G0M7_TTK, Path::new("builtin")).unwrap();
            for seed in 0..12u64 {
                let loops = random_walk_loops(&neck, seed, 900, 12, 20);
                let mut desc: Vec<String> = Vec::new();
                for (_, ps) in &loops {
                    let prim = is_primitive_on(ps, None);
                    desc.push(format!("len {} ord {} prim {}", ps.seq.moves.len(), ps.order, prim));
                }
                println!("seed {}: {} loops: {}", seed, loops.len(), desc.join(" | "));
            }
        }
        Some("g2scan2") => {
            let mut hist: HashMap<String, usize> = HashMap::new();
            for pairings in 0..=255u8 {
                for orders in 0..(1u32 << 16) {
                    let t = match build_g2(pairings, orders as u16) {
                        Some(t) => t,
                        None => continue,
                    };
                    let regions = match t.complementary_regions() {
                        Ok(r) => r,
                        Err(_) => continue,
                    };
                    let f = regions.len() as i64;
                    if 16 - 24 + f != -2 {
                        continue;
                    }
                    let mut c: Vec<usize> = regions.iter().map(|x| x.cusps).collect();
                    c.sort_unstable();
                    *hist.entry(format!("{:?}", c)).or_insert(0) += 1;
                }
            }
            let mut v: Vec<_> = hist.into_iter().collect();
            v.sort_by(|a, b| b.1.cmp(&a.1));
            for (k, n) in v.iter().take(25) {
                println!("{n:8} {k}");
            }
        }
        Some("g2loops") => {
            use g2::*;
            let tau = find_g2().expect("no track");
            for (name, allowed, losers, depth) in [
                ("a free", CURVE_A.to_vec(), false, 14),
                ("a losers", CURVE_A.to_vec(), true, 14),
                ("ab free", {
                    let mut v = CURVE_A.to_vec();
                    v.extend(CURVE_B);
                    v
                }, false, 12),
                ("sigma0", sigma0(), true, 10),
            ] {
                let loops = LoopSearch {
                    allowed: Some(allowed.iter().copied().collect()),
                    losers_inside: losers,
                    max_depth: depth,
                    max_nodes: 400_000,
                    max_loops: 10,
                    ..Default::default()
                }
                .run(&tau);
                let descr: Vec<String> = loops
                    .iter()
                    .map(|ps| format!("len {} ord {}", ps.seq.moves.len(), ps.order))
                    .collect();
                println!("{name}: {} loops: {}", loops.len(), descr.join(" | "));
            }
        }
        _ => {
            eprintln!("usage: fixgen all [fixtures-dir] | fixgen necklace | fixgen g2");
            std::process::exit(1);
        }
    }
}

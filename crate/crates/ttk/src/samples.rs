//! Small built-in tracks used by tests and by the fixture generator.

use crate::track::{BranchEnd, PunctureMark, SideFlag, SurfaceSig, Switch, TrainTrack};

/// The pinwheel on the five-punctured sphere: a 4-cycle of branches, each
/// dominating the next around the square, with puncture loops on the stems
/// (three hanging inside the cycle, one outside). Every region is a
/// punctured monogon or the inner trigon, so the track is maximal, but the
/// cyclic domination forces every stem weight to zero: it is not recurrent.
///
/// Branches: 1-4 the cycle, 5-8 stems, 9-12 loops. Switch i (i = 1..4):
/// A = [x_i.1], B pairs the next cycle branch with stem i.
pub fn pinwheel() -> TrainTrack {
    let x = |i: usize| i;
    let y = |i: usize| 4 + i;
    let l = |i: usize| 8 + i;
    let mut switches = Vec::new();
    for i in 1..=4 {
        let nxt = if i == 4 { 1 } else { i + 1 };
        let (b0, b1) = if i <= 3 {
            (BranchEnd::new(x(nxt), 0), BranchEnd::new(y(i), 0))
        } else {
            (BranchEnd::new(y(i), 0), BranchEnd::new(x(nxt), 0))
        };
        switches.push(Switch::new(i, BranchEnd::new(x(i), 1), b0, b1));
    }
    for i in 1..=4 {
        switches.push(Switch::new(
            4 + i,
            BranchEnd::new(y(i), 1),
            BranchEnd::new(l(i), 0),
            BranchEnd::new(l(i), 1),
        ));
    }
    let marks = vec![
        PunctureMark { at: BranchEnd::new(l(1), 0), side: SideFlag::R },
        PunctureMark { at: BranchEnd::new(l(2), 0), side: SideFlag::R },
        PunctureMark { at: BranchEnd::new(l(3), 0), side: SideFlag::R },
        PunctureMark { at: BranchEnd::new(l(4), 0), side: SideFlag::R },
        PunctureMark { at: BranchEnd::new(x(1), 0), side: SideFlag::L },
    ];
    TrainTrack::new(SurfaceSig::new(0, 5), 12, switches, marks).unwrap()
}

/// A recurrent genus-two track with one puncture: a hexagon with three
/// diameters, diameters on the singleton sides. Valid and connected with a
/// single once-punctured complementary region; not maximal. The ribbon
/// orders are chosen so the complement is one disc (genus from the Euler
/// count).
///
/// Branches: 1-6 hexagon arcs h_i (from corner i to corner i+1), 7-9 the
/// diameters d_1 = (u1,u4), d_2 = (u2,u5), d_3 = (u3,u6).
pub fn hexapod(flip_mask: u8) -> TrainTrack {
    let h = |i: usize| i; // 1..6
    let d = |i: usize| 6 + i; // 7..9
    let mut switches = Vec::new();
    for i in 1..=6 {
        let prev = if i == 1 { 6 } else { i - 1 };
        let di = if i <= 3 { (d(i), 0u8) } else { (d(i - 3), 1u8) };
        // A = diameter end; B = [incoming hex arc, outgoing hex arc],
        // optionally flipped per switch to tune the boundary walk
        let a = BranchEnd::new(di.0, di.1);
        let b0 = BranchEnd::new(h(prev), 1);
        let b1 = BranchEnd::new(h(i), 0);
        let (b0, b1) = if flip_mask & (1 << (i - 1)) != 0 {
            (b1, b0)
        } else {
            (b0, b1)
        };
        switches.push(Switch::new(i, a, b0, b1));
    }
    let marks = vec![PunctureMark {
        at: BranchEnd::new(1, 0),
        side: SideFlag::L,
    }];
    TrainTrack::new(SurfaceSig::new(2, 1), 9, switches, marks).unwrap()
}

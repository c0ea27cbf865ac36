//! Small dense exact-rational simplex, used for the measure-cone
//! feasibility problems (maximize the minimum branch weight).
//!
//! Two-phase tableau method with Bland's rule; every pivot is exact, so
//! feasibility answers are certificates, not approximations. Instance sizes
//! here are tiny (tens of variables), which makes this the simplest correct
//! tool.

use crate::Rat;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    /// Optimal value and a maximizer.
    Optimal(Rat, Vec<Rat>),
    Infeasible,
    Unbounded,
}

/// Maximize `c . x` subject to `a x = b`, `x >= 0`.
pub fn maximize(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    for row in a {
        assert_eq!(row.len(), n);
    }
    // normalize to b >= 0
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rat> = Vec::with_capacity(m);
    for i in 0..m {
        if b[i].is_negative() {
            rows.push(a[i].iter().map(|x| -x.clone()).collect());
            rhs.push(-b[i].clone());
        } else {
            rows.push(a[i].clone());
            rhs.push(b[i].clone());
        }
    }
    // tableau columns: n real + m artificial, then rhs
    let ncols = n + m;
    let mut t: Vec<Vec<Rat>> = (0..m)
        .map(|i| {
            let mut r = Vec::with_capacity(ncols + 1);
            r.extend(rows[i].iter().cloned());
            for j in 0..m {
                r.push(if i == j { Rat::one() } else { Rat::zero() });
            }
            r.push(rhs[i].clone());
            r
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1: maximize -sum(artificials)
    let phase1_cost: Vec<Rat> = (0..ncols)
        .map(|j| if j >= n { -Rat::one() } else { Rat::zero() })
        .collect();
    if !run_simplex(&mut t, &mut basis, &phase1_cost, ncols) {
        // phase-1 objective is bounded by 0, never unbounded
        unreachable!("phase 1 cannot be unbounded");
    }
    let p1: Rat = basis
        .iter()
        .enumerate()
        .map(|(i, &bv)| {
            if bv >= n {
                t[i][ncols].clone()
            } else {
                Rat::zero()
            }
        })
        .sum();
    if !p1.is_zero() {
        return LpOutcome::Infeasible;
    }
    // drive artificials out of the basis, dropping redundant rows
    let mut drop_rows = Vec::new();
    for i in 0..m {
        if basis[i] >= n {
            match (0..n).find(|&j| !t[i][j].is_zero()) {
                Some(j) => pivot(&mut t, &mut basis, i, j),
                None => drop_rows.push(i),
            }
        }
    }
    for &i in drop_rows.iter().rev() {
        t.remove(i);
        basis.remove(i);
    }

    // phase 2 on real columns only
    let phase2_cost: Vec<Rat> = (0..ncols)
        .map(|j| if j < n { c[j].clone() } else { Rat::zero() })
        .collect();
    if !run_simplex(&mut t, &mut basis, &phase2_cost, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rat::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][t[i].len() - 1].clone();
        }
    }
    let val: Rat = (0..n).map(|j| &c[j] * &x[j]).sum();
    LpOutcome::Optimal(val, x)
}

/// Returns false on unboundedness. `enter_limit` restricts entering columns
/// (phase 2 must not re-enter artificials).
fn run_simplex(
    t: &mut Vec<Vec<Rat>>,
    basis: &mut Vec<usize>,
    cost: &[Rat],
    enter_limit: usize,
) -> bool {
    let m = t.len();
    if m == 0 {
        return true;
    }
    let rhs_col = t[0].len() - 1;
    loop {
        // reduced costs: c_j - c_B . B^{-1} A_j (tableau already reduced)
        let mut entering = None;
        for j in 0..enter_limit {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost[j].clone();
            for i in 0..m {
                if !t[i][j].is_zero() {
                    red -= &cost[basis[i]] * &t[i][j];
                }
            }
            if red.is_positive() {
                entering = Some(j); // Bland: first improving index
                break;
            }
        }
        let j = match entering {
            None => return true,
            Some(j) => j,
        };
        // ratio test, Bland tie-break on basis variable index
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..m {
            if t[i][j].is_positive() {
                let ratio = &t[i][rhs_col] / &t[i][j];
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < *lr || (ratio == *lr && basis[i] < basis[*li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        match leave {
            None => return false,
            Some((i, _)) => pivot(t, basis, i, j),
        }
    }
}

fn pivot(t: &mut [Vec<Rat>], basis: &mut [usize], r: usize, c: usize) {
    let piv = t[r][c].clone();
    for x in t[r].iter_mut() {
        *x /= &piv;
    }
    for i in 0..t.len() {
        if i != r && !t[i][c].is_zero() {
            let f = t[i][c].clone();
            for j in 0..t[i].len() {
                let sub = &f * &t[r][j];
                t[i][j] -= sub;
            }
        }
    }
    basis[r] = c;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, rat_int};

    #[test]
    fn tiny_lp() {
        // max x+y st x+2y = 4, x,y >= 0  -> x=4, y=0, value 4
        let a = vec![vec![rat_int(1), rat_int(2)]];
        let b = vec![rat_int(4)];
        let c = vec![rat_int(1), rat_int(1)];
        match maximize(&a, &b, &c) {
            LpOutcome::Optimal(v, x) => {
                assert_eq!(v, rat_int(4));
                assert_eq!(x[0], rat_int(4));
            }
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn infeasible_lp() {
        // x = -1, x >= 0
        let a = vec![vec![rat_int(1)]];
        let b = vec![rat_int(-1)];
        let c = vec![rat_int(0)];
        assert_eq!(maximize(&a, &b, &c), LpOutcome::Infeasible);
    }

    #[test]
    fn maxmin_style() {
        // max t st v + t = 1/2 (so t <= 1/2), v >= 0
        let a = vec![vec![rat_int(1), rat_int(1)]];
        let b = vec![rat(1, 2)];
        let c = vec![rat_int(0), rat_int(1)];
        match maximize(&a, &b, &c) {
            LpOutcome::Optimal(v, _) => assert_eq!(v, rat(1, 2)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn degenerate_redundant_rows() {
        // duplicated constraint rows must not break phase 1 cleanup
        let a = vec![
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(2), rat_int(2)],
        ];
        let b = vec![rat_int(2), rat_int(2), rat_int(4)];
        let c = vec![rat_int(1), rat_int(0)];
        match maximize(&a, &b, &c) {
            LpOutcome::Optimal(v, _) => assert_eq!(v, rat_int(2)),
            other => panic!("{:?}", other),
        }
    }
}

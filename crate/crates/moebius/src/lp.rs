//! Small dense two-phase simplex over exact rationals (Bland's rule).
//!
//! Only used to certify interior points of chambers, where the programs have
//! a handful of variables and at most a few hundred rows.

use num_traits::{One, Signed, Zero};

use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub(crate) struct Lp {
    pub nvars: usize,
    pub rows: Vec<(Vec<Q>, Rel, Q)>,
    /// Maximized.
    pub objective: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum LpResult {
    Optimal { value: Q, point: Vec<Q> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    t: Vec<Vec<Q>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Q {
        &self.t[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v /= &p;
        }
        let row = self.t[r].clone();
        for (i, line) in self.t.iter_mut().enumerate() {
            if i == r || line[c].is_zero() {
                continue;
            }
            let f = line[c].clone();
            for (v, rv) in line.iter_mut().zip(&row) {
                if !rv.is_zero() {
                    *v -= &f * rv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `c·y` over the current basis; `allowed` masks entering columns.
    fn optimize(&mut self, c: &[Q], allowed: &[bool]) -> bool {
        loop {
            let mut enter = None;
            for j in 0..self.ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut r = -c[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.t[i][j].is_zero() {
                        r += &c[b] * &self.t[i][j];
                    }
                }
                if r.is_negative() {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else { return true };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.t.len() {
                if self.t[i][j].is_positive() {
                    let ratio = self.rhs(i) / &self.t[i][j];
                    let better = match &leave {
                        None => true,
                        Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, j);
        }
    }
}

pub(crate) fn solve(lp: &Lp) -> LpResult {
    let nv = lp.nvars;
    // Normalize to non-negative right-hand sides.
    let rows: Vec<(Vec<Q>, Rel, Q)> = lp
        .rows
        .iter()
        .map(|(a, rel, b)| {
            if b.is_negative() {
                let flipped = match rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                };
                (a.iter().map(|x| -x.clone()).collect(), flipped, -b.clone())
            } else {
                (a.clone(), *rel, b.clone())
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Rel::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Rel::Le).count();
    let ncols = nv + n_slack + n_art;
    let mut t = Vec::with_capacity(rows.len());
    let mut basis = Vec::with_capacity(rows.len());
    let (mut si, mut ai) = (nv, nv + n_slack);
    for (a, rel, b) in &rows {
        let mut line = vec![Q::zero(); ncols + 1];
        line[..nv].clone_from_slice(a);
        line[ncols] = b.clone();
        match rel {
            Rel::Le => {
                line[si] = Q::one();
                basis.push(si);
                si += 1;
            }
            Rel::Ge => {
                line[si] = -Q::one();
                si += 1;
                line[ai] = Q::one();
                basis.push(ai);
                ai += 1;
            }
            Rel::Eq => {
                line[ai] = Q::one();
                basis.push(ai);
                ai += 1;
            }
        }
        t.push(line);
    }
    let mut tab = Tableau { t, basis, ncols };
    let is_art = |j: usize| j >= nv + n_slack;

    if n_art > 0 {
        let c1: Vec<Q> = (0..ncols).map(|j| if is_art(j) { -Q::one() } else { Q::zero() }).collect();
        let all = vec![true; ncols];
        tab.optimize(&c1, &all);
        let mut value = Q::zero();
        for (i, &b) in tab.basis.iter().enumerate() {
            if is_art(b) {
                value += tab.rhs(i);
            }
        }
        if !value.is_zero() {
            return LpResult::Infeasible;
        }
        // Drive remaining zero-level artificials out of the basis.
        let mut i = 0;
        while i < tab.t.len() {
            if is_art(tab.basis[i]) {
                if let Some(j) = (0..nv + n_slack).find(|&j| !tab.t[i][j].is_zero()) {
                    tab.pivot(i, j);
                    i += 1;
                } else {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                }
            } else {
                i += 1;
            }
        }
    }
    let mut c2 = vec![Q::zero(); ncols];
    c2[..nv].clone_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
    if !tab.optimize(&c2, &allowed) {
        return LpResult::Unbounded;
    }
    let mut point = vec![Q::zero(); nv];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < nv {
            point[b] = tab.rhs(i).clone();
        }
    }
    let value = point.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
    LpResult::Optimal { value, point }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn textbook_programs() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, x <= 3
        let lp = Lp {
            nvars: 2,
            rows: vec![
                (vec![qi(1), qi(1)], Rel::Le, qi(4)),
                (vec![qi(1), qi(3)], Rel::Le, qi(6)),
                (vec![qi(1), qi(0)], Rel::Le, qi(3)),
            ],
            objective: vec![qi(3), qi(2)],
        };
        assert_eq!(
            solve(&lp),
            LpResult::Optimal {
                value: qi(11),
                point: vec![qi(3), qi(1)]
            }
        );
        // max y with x + y = 1, x - y >= 1/2
        let lp = Lp {
            nvars: 2,
            rows: vec![
                (vec![qi(1), qi(1)], Rel::Eq, qi(1)),
                (vec![qi(1), qi(-1)], Rel::Ge, q(1, 2)),
            ],
            objective: vec![qi(0), qi(1)],
        };
        assert_eq!(
            solve(&lp),
            LpResult::Optimal {
                value: q(1, 4),
                point: vec![q(3, 4), q(1, 4)]
            }
        );
        let infeasible = Lp {
            nvars: 1,
            rows: vec![(vec![qi(1)], Rel::Ge, qi(2)), (vec![qi(1)], Rel::Le, qi(1))],
            objective: vec![qi(1)],
        };
        assert_eq!(solve(&infeasible), LpResult::Infeasible);
        let unbounded = Lp {
            nvars: 1,
            rows: vec![(vec![qi(1)], Rel::Ge, qi(2))],
            objective: vec![qi(1)],
        };
        assert_eq!(solve(&unbounded), LpResult::Unbounded);
    }
}

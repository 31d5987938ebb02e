//! Exact linear programming over arbitrary-precision rationals.
//!
//! Dense two-phase simplex with Bland's anti-cycling pivot rule, so every
//! solve is deterministic and terminates. Problem sizes here are tiny (the
//! fractional-certificate and approximate-degree programs), so no sparsity
//! or revised-simplex machinery is warranted. Optimal assignments are
//! re-checked against every constraint before being returned.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<BigRational>,
    pub rel: Rel,
    pub rhs: BigRational,
}

/// A linear program over m variables. Default variable bounds are
/// lower 0, upper +infinity; a `None` lower bound makes the variable free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<BigRational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(Option<BigRational>, Option<BigRational>)>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: Status,
    pub value: BigRational,
    pub assignment: Vec<BigRational>,
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<BigRational>) -> LinearProgram {
        let m = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![(Some(BigRational::zero()), None); m],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<BigRational>, rel: Rel, rhs: BigRational) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint { coeffs, rel, rhs });
    }

    pub fn set_bounds(
        &mut self,
        var: usize,
        lower: Option<BigRational>,
        upper: Option<BigRational>,
    ) {
        self.bounds[var] = (lower, upper);
    }

    /// Solve exactly. Deterministic: Bland's rule everywhere.
    pub fn solve(&self) -> Result<LpSolution> {
        if self.num_vars() == 0 {
            return Err(Error::Parameter("LP with no variables".into()));
        }
        for c in &self.constraints {
            if c.coeffs.len() != self.num_vars() {
                return Err(Error::Parameter("constraint row length mismatch".into()));
            }
        }
        Tableau::build_and_solve(self)
    }

    /// Check a candidate assignment against all constraints and bounds.
    pub fn is_feasible(&self, x: &[BigRational]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            if let Some(lo) = lo {
                if &x[j] < lo {
                    return false;
                }
            }
            if let Some(hi) = hi {
                if &x[j] > hi {
                    return false;
                }
            }
        }
        for c in &self.constraints {
            let lhs: BigRational = c
                .coeffs
                .iter()
                .zip(x)
                .map(|(a, v)| a * v)
                .sum();
            let ok = match c.rel {
                Rel::Le => lhs <= c.rhs,
                Rel::Ge => lhs >= c.rhs,
                Rel::Eq => lhs == c.rhs,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    pub fn objective_value(&self, x: &[BigRational]) -> BigRational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

/// Safety-net pivot cap; Bland's rule terminates on its own, this guards
/// against implementation bugs turning into hangs.
const MAX_PIVOTS: usize = 200_000;

/// Standard-form tableau. Internally we minimize c.y over A y = b, y >= 0,
/// after shifting finite lower bounds, splitting free variables, and turning
/// finite upper bounds into rows.
struct Tableau {
    rows: Vec<Vec<BigRational>>, // one per constraint; last entry = rhs
    basis: Vec<usize>,
    ncols: usize, // structural + slack + artificial columns (excl. rhs)
}

/// How an original variable maps into standard-form columns.
#[derive(Clone)]
enum VarMap {
    Shifted { col: usize, offset: BigRational },
    Split { pos: usize, neg: usize },
}

impl Tableau {
    fn build_and_solve(lp: &LinearProgram) -> Result<LpSolution> {
        let m = lp.num_vars();
        // Map original variables into nonnegative standard-form columns.
        let mut maps: Vec<VarMap> = Vec::with_capacity(m);
        let mut ncols = 0usize;
        for (lo, _) in &lp.bounds {
            match lo {
                Some(l) => {
                    maps.push(VarMap::Shifted {
                        col: ncols,
                        offset: l.clone(),
                    });
                    ncols += 1;
                }
                None => {
                    maps.push(VarMap::Split {
                        pos: ncols,
                        neg: ncols + 1,
                    });
                    ncols += 2;
                }
            }
        }
        let nstruct = ncols;

        // Rewrite each row over the standard-form columns; upper bounds
        // become extra rows.
        struct Row {
            coeffs: Vec<BigRational>,
            rel: Rel,
            rhs: BigRational,
        }
        let mut rows: Vec<Row> = Vec::new();
        let mut push_row = |coeffs_orig: &[BigRational], rel: Rel, rhs: &BigRational| {
            let mut coeffs = vec![BigRational::zero(); nstruct];
            let mut rhs = rhs.clone();
            for (j, a) in coeffs_orig.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                match &maps[j] {
                    VarMap::Shifted { col, offset } => {
                        coeffs[*col] += a;
                        rhs -= a * offset;
                    }
                    VarMap::Split { pos, neg } => {
                        coeffs[*pos] += a;
                        coeffs[*neg] -= a;
                    }
                }
            }
            rows.push(Row { coeffs, rel, rhs });
        };
        for c in &lp.constraints {
            push_row(&c.coeffs, c.rel, &c.rhs);
        }
        for (j, (_, hi)) in lp.bounds.iter().enumerate() {
            if let Some(hi) = hi {
                let mut unit = vec![BigRational::zero(); m];
                unit[j] = BigRational::one();
                push_row(&unit, Rel::Le, hi);
            }
        }

        // Objective in minimization form over standard columns, plus the
        // constant picked up from lower-bound shifts.
        let mut obj = vec![BigRational::zero(); nstruct];
        let mut obj_const = BigRational::zero();
        for (j, c) in lp.objective.iter().enumerate() {
            let c = match lp.sense {
                Sense::Min => c.clone(),
                Sense::Max => -c.clone(),
            };
            match &maps[j] {
                VarMap::Shifted { col, offset } => {
                    obj[*col] += &c;
                    obj_const += &c * offset;
                }
                VarMap::Split { pos, neg } => {
                    obj[*pos] += &c;
                    obj[*neg] -= &c;
                }
            }
        }

        // Normalize rhs >= 0, then add slack/surplus and artificial columns.
        let nrows = rows.len();
        let mut slack_cols = 0usize;
        for r in &rows {
            if r.rel != Rel::Eq {
                slack_cols += 1;
            }
        }
        // Worst case every row needs an artificial.
        let total = nstruct + slack_cols + nrows;
        let mut tab: Vec<Vec<BigRational>> = Vec::with_capacity(nrows);
        let mut basis = vec![usize::MAX; nrows];
        let mut artificials: Vec<usize> = Vec::new();
        let mut next_slack = nstruct;
        let mut next_art = nstruct + slack_cols;
        for (i, r) in rows.iter().enumerate() {
            let flip = r.rhs.is_negative();
            let sign = if flip { -BigRational::one() } else { BigRational::one() };
            let rel = if flip {
                match r.rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                }
            } else {
                r.rel
            };
            let mut row = vec![BigRational::zero(); total + 1];
            for (j, a) in r.coeffs.iter().enumerate() {
                if !a.is_zero() {
                    row[j] = &sign * a;
                }
            }
            row[total] = &sign * &r.rhs;
            match rel {
                Rel::Le => {
                    row[next_slack] = BigRational::one();
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Rel::Ge => {
                    row[next_slack] = -BigRational::one();
                    next_slack += 1;
                    row[next_art] = BigRational::one();
                    basis[i] = next_art;
                    artificials.push(next_art);
                    next_art += 1;
                }
                Rel::Eq => {
                    row[next_art] = BigRational::one();
                    basis[i] = next_art;
                    artificials.push(next_art);
                    next_art += 1;
                }
            }
            tab.push(row);
        }

        let mut t = Tableau {
            rows: tab,
            basis,
            ncols: total,
        };

        // Phase 1: minimize the sum of artificials.
        if !artificials.is_empty() {
            let mut phase1 = vec![BigRational::zero(); total];
            for &a in &artificials {
                phase1[a] = BigRational::one();
            }
            let opt = t.optimize(&phase1, Some(&artificials))?;
            let phase1_val = opt.ok_or_else(|| {
                Error::LpResource("phase 1 unbounded (internal inconsistency)".into())
            })?;
            if !phase1_val.is_zero() {
                return Ok(LpSolution {
                    status: Status::Infeasible,
                    value: BigRational::zero(),
                    assignment: vec![BigRational::zero(); m],
                });
            }
            // Pivot any artificial still in the basis out (degenerate rows);
            // if a row has no eligible column it is redundant and harmless.
            let art_set: Vec<bool> = {
                let mut v = vec![false; total];
                for &a in &artificials {
                    v[a] = true;
                }
                v
            };
            for i in 0..nrows {
                if art_set[t.basis[i]] {
                    let piv = (0..nstruct + slack_cols)
                        .find(|&j| !t.rows[i][j].is_zero());
                    if let Some(j) = piv {
                        t.pivot(i, j);
                    }
                }
            }
            // Forbid artificials from re-entering by zeroing their columns.
            for row in &mut t.rows {
                for &a in &artificials {
                    row[a] = BigRational::zero();
                }
            }
        }

        // Phase 2.
        let mut full_obj = vec![BigRational::zero(); total];
        full_obj[..nstruct].clone_from_slice(&obj);
        let opt = t.optimize(&full_obj, None)?;
        let Some(min_val) = opt else {
            return Ok(LpSolution {
                status: Status::Unbounded,
                value: BigRational::zero(),
                assignment: vec![BigRational::zero(); m],
            });
        };

        // Recover the original assignment.
        let mut y = vec![BigRational::zero(); total];
        for (i, &b) in t.basis.iter().enumerate() {
            y[b] = t.rows[i][total].clone();
        }
        let mut x = Vec::with_capacity(m);
        for map in &maps {
            match map {
                VarMap::Shifted { col, offset } => x.push(&y[*col] + offset),
                VarMap::Split { pos, neg } => x.push(&y[*pos] - &y[*neg]),
            }
        }
        let value = match lp.sense {
            Sense::Min => min_val + obj_const,
            Sense::Max => -(min_val + obj_const),
        };

        if !lp.is_feasible(&x) {
            return Err(Error::LpResource(
                "post-solve feasibility recheck failed (solver bug)".into(),
            ));
        }
        if lp.objective_value(&x) != value {
            return Err(Error::LpResource(
                "post-solve objective recheck failed (solver bug)".into(),
            ));
        }

        Ok(LpSolution {
            status: Status::Optimal,
            value,
            assignment: x,
        })
    }

    /// Minimize obj over the current tableau with Bland's rule. Returns
    /// None on unboundedness, otherwise the optimal objective value.
    /// `blocked` columns (artificials during phase 1 cleanup) never enter.
    fn optimize(
        &mut self,
        obj: &[BigRational],
        _blocked: Option<&[usize]>,
    ) -> Result<Option<BigRational>> {
        let ncols = self.ncols;
        for _ in 0..MAX_PIVOTS {
            // Reduced costs: r_j = obj_j - sum_i obj_{basis_i} * rows[i][j].
            let basic_obj: Vec<BigRational> =
                self.basis.iter().map(|&b| obj[b].clone()).collect();
            let mut entering = None;
            for j in 0..ncols {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rj = obj[j].clone();
                for (i, c) in basic_obj.iter().enumerate() {
                    if !c.is_zero() && !self.rows[i][j].is_zero() {
                        rj -= c * &self.rows[i][j];
                    }
                }
                if rj.is_negative() {
                    entering = Some(j); // Bland: first improving column
                    break;
                }
            }
            let Some(j) = entering else {
                // Optimal: objective = sum over basis of obj * rhs.
                let mut val = BigRational::zero();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !obj[b].is_zero() {
                        val += &obj[b] * &self.rows[i][ncols];
                    }
                }
                return Ok(Some(val));
            };
            // Ratio test; Bland tie-break on smallest basis column.
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if a.is_positive() {
                    let ratio = &self.rows[i][ncols] / a;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((i, _)) = leave else {
                return Ok(None); // unbounded direction
            };
            self.pivot(i, j);
        }
        Err(Error::LpResource(format!(
            "pivot cap {MAX_PIVOTS} exceeded"
        )))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let ncols = self.ncols;
        let inv = {
            let p = self.rows[row][col].clone();
            debug_assert!(!p.is_zero());
            p.recip()
        };
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for j in 0..=ncols {
                if !pivot_row[j].is_zero() {
                    let delta = &factor * &pivot_row[j];
                    r[j] -= delta;
                }
            }
            r[col] = BigRational::zero();
        }
        self.basis[row] = col;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn max_x_le_3() {
        let mut lp = LinearProgram::new(Sense::Max, vec![rat_int(1)]);
        lp.add_constraint(vec![rat_int(1)], Rel::Le, rat_int(3));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.value, rat_int(3));
    }

    #[test]
    fn min_sum_ge_1() {
        let mut lp = LinearProgram::new(Sense::Min, vec![rat_int(1), rat_int(1)]);
        lp.add_constraint(vec![rat_int(1), rat_int(1)], Rel::Ge, rat_int(1));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.value, rat_int(1));
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(Sense::Max, vec![rat_int(1)]);
        lp.add_constraint(vec![rat_int(1)], Rel::Ge, rat_int(0));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, Status::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new(Sense::Max, vec![rat_int(1)]);
        lp.add_constraint(vec![rat_int(1)], Rel::Le, rat_int(1));
        lp.add_constraint(vec![rat_int(1)], Rel::Ge, rat_int(2));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, Status::Infeasible);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + y s.t. x + 2y = 4, x - y = 1, x free, y free.
        let mut lp = LinearProgram::new(Sense::Min, vec![rat_int(1), rat_int(1)]);
        lp.set_bounds(0, None, None);
        lp.set_bounds(1, None, None);
        lp.add_constraint(vec![rat_int(1), rat_int(2)], Rel::Eq, rat_int(4));
        lp.add_constraint(vec![rat_int(1), rat_int(-1)], Rel::Eq, rat_int(1));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.assignment, vec![rat_int(2), rat_int(1)]);
        assert_eq!(sol.value, rat_int(3));
    }

    #[test]
    fn upper_bounds_and_shifts() {
        // max x + y with 1 <= x <= 2, -3 <= y <= -1.
        let mut lp = LinearProgram::new(Sense::Max, vec![rat_int(1), rat_int(1)]);
        lp.set_bounds(0, Some(rat_int(1)), Some(rat_int(2)));
        lp.set_bounds(1, Some(rat_int(-3)), Some(rat_int(-1)));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.value, rat_int(1));
        assert_eq!(sol.assignment, vec![rat_int(2), rat_int(-1)]);
    }

    #[test]
    fn rational_data() {
        // min 2x + 3y s.t. x + y >= 7/2, x - y <= 1/3.
        let mut lp = LinearProgram::new(Sense::Min, vec![rat_int(2), rat_int(3)]);
        lp.add_constraint(vec![rat_int(1), rat_int(1)], Rel::Ge, rat(7, 2));
        lp.add_constraint(vec![rat_int(1), rat_int(-1)], Rel::Le, rat(1, 3));
        let sol = lp.solve().unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // Optimum at y = 0 infeasible (x >= 7/2 forces x - y > 1/3), so the
        // binding point is x + y = 7/2: cheapest is x as large as allowed.
        // x - y = 1/3, x + y = 7/2 -> x = 23/12, y = 19/12.
        assert_eq!(sol.value, rat_int(2) * rat(23, 12) + rat_int(3) * rat(19, 12));
    }

    /// Random primal/dual pairs constructed to be feasible and bounded;
    /// strong duality must give exactly equal optima.
    #[test]
    fn strong_duality_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(20240817);
        for _case in 0..50 {
            let rows = 5;
            let cols = 8;
            let a: Vec<Vec<BigRational>> = (0..rows)
                .map(|_| (0..cols).map(|_| rat_int(rng.gen_range(-3..=3))).collect())
                .collect();
            // b = A x0 + margin with x0 >= 0 -> primal feasible.
            let x0: Vec<BigRational> =
                (0..cols).map(|_| rat_int(rng.gen_range(0..=2))).collect();
            let b: Vec<BigRational> = (0..rows)
                .map(|i| {
                    let ax: BigRational =
                        a[i].iter().zip(&x0).map(|(aij, x)| aij * x).sum();
                    ax + rat_int(rng.gen_range(0..=3))
                })
                .collect();
            // c = A^T y0 - margin with y0 >= 0 -> dual feasible.
            let y0: Vec<BigRational> =
                (0..rows).map(|_| rat_int(rng.gen_range(0..=2))).collect();
            let c: Vec<BigRational> = (0..cols)
                .map(|j| {
                    let aty: BigRational =
                        (0..rows).map(|i| &a[i][j] * &y0[i]).sum();
                    aty - rat_int(rng.gen_range(0..=2))
                })
                .collect();

            // Primal: max c x, A x <= b, x >= 0.
            let mut primal = LinearProgram::new(Sense::Max, c.clone());
            for i in 0..rows {
                primal.add_constraint(a[i].clone(), Rel::Le, b[i].clone());
            }
            let ps = primal.solve().unwrap();
            assert_eq!(ps.status, Status::Optimal);

            // Dual: min b y, A^T y >= c, y >= 0.
            let mut dual = LinearProgram::new(Sense::Min, b.clone());
            for j in 0..cols {
                let col: Vec<BigRational> = (0..rows).map(|i| a[i][j].clone()).collect();
                dual.add_constraint(col, Rel::Ge, c[j].clone());
            }
            let ds = dual.solve().unwrap();
            assert_eq!(ds.status, Status::Optimal);
            assert_eq!(ps.value, ds.value, "duality gap in case {_case}");
        }
    }
}

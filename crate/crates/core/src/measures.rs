//! Exact complexity measures of partial Boolean functions: decision-tree
//! depth, certificate complexity, the sensitivity family, fractional
//! measures via exact LP, and exact/approximate polynomial degree.
//!
//! Points outside dom(f) are unconstrained everywhere ("the decision tree is
//! allowed to output anything"). Fractional certificate complexity and
//! fractional block sensitivity are a primal/dual LP pair, so their values
//! agree exactly; both are computed and the equality is a standing test
//! target, not an assumption.
//!
//! Not implemented: the "critical fractional block sensitivity" variant the
//! source material mentions in passing without a definition.

use crate::boolfn::{Assignment, PartialFn};
use crate::lp::{LinearProgram, Rel, Sense, Status};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::collections::HashMap;

pub const DT_ARITY_CAP: usize = 16;
pub const BS_ARITY_CAP: usize = 12;
pub const FBS_PRIMAL_ARITY_CAP: usize = 10;
pub const ADEG_ARITY_CAP: usize = 12;

/// Fractional certificate at a point: nonnegative weights c_{x,i} whose sum
/// is the LP optimum FC(f, x).
#[derive(Clone, Debug)]
pub struct FractionalCertificate {
    pub x: Assignment,
    pub weights: Vec<BigRational>,
    pub value: BigRational,
}

impl FractionalCertificate {
    /// Enumeration check of the defining constraint family:
    /// sum_{i: x_i != y_i} c_{x,i} >= |f(x) - f(y)| for all y in dom(f).
    pub fn check_against(&self, f: &PartialFn) -> bool {
        let fx = match f.value_at(self.x.index()) {
            Some(v) => v,
            None => return false,
        };
        let xi = self.x.index();
        for y in f.domain_indices() {
            if f.value_at(y) == Some(fx) {
                continue;
            }
            let diff = xi ^ y;
            let total: BigRational = (0..f.n())
                .filter(|i| diff >> i & 1 == 1)
                .map(|i| self.weights[i].clone())
                .sum();
            if total < BigRational::one() {
                return false;
            }
        }
        true
    }
}

fn require_in_domain(f: &PartialFn, x: &Assignment) -> Result<bool> {
    match f.evaluate(x)? {
        Some(v) => Ok(v),
        None => Err(Error::Domain(format!(
            "point {} is outside dom(f)",
            x.index()
        ))),
    }
}

fn cap(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SizeCap {
            what,
            got: n,
            cap: limit,
        });
    }
    Ok(())
}

/// Is f constant over the domain points of the subcube where the variables in
/// `fixed_mask` are pinned to `fixed_vals`?
fn constant_on_subcube(f: &PartialFn, fixed_mask: usize, fixed_vals: usize) -> bool {
    let free_mask = (f.table_len() - 1) & !fixed_mask;
    let mut seen: Option<bool> = None;
    let mut sub = free_mask;
    loop {
        let idx = fixed_vals | sub;
        if let Some(v) = f.value_at(idx) {
            match seen {
                None => seen = Some(v),
                Some(s) if s != v => return false,
                _ => {}
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free_mask;
    }
    true
}

/// Minimal decision-tree depth computing f on dom(f), by memoized recursion
/// over restriction states.
pub fn dt_depth(f: &PartialFn) -> Result<u32> {
    cap("dt_depth arity", f.n(), DT_ARITY_CAP)?;
    let mut memo: HashMap<(usize, usize), u32> = HashMap::new();
    Ok(dt_depth_rec(f, 0, 0, &mut memo))
}

fn dt_depth_rec(
    f: &PartialFn,
    fixed_mask: usize,
    fixed_vals: usize,
    memo: &mut HashMap<(usize, usize), u32>,
) -> u32 {
    if constant_on_subcube(f, fixed_mask, fixed_vals) {
        return 0;
    }
    if let Some(&d) = memo.get(&(fixed_mask, fixed_vals)) {
        return d;
    }
    let mut best = u32::MAX;
    for i in 0..f.n() {
        let bit = 1usize << i;
        if fixed_mask & bit != 0 {
            continue;
        }
        let d0 = dt_depth_rec(f, fixed_mask | bit, fixed_vals, memo);
        let d1 = dt_depth_rec(f, fixed_mask | bit, fixed_vals | bit, memo);
        best = best.min(1 + d0.max(d1));
        if best == 1 {
            break;
        }
    }
    memo.insert((fixed_mask, fixed_vals), best);
    best
}

/// The variable the canonical minimal-depth tree queries at this restriction
/// state (smallest index achieving the minimal worst-case depth), or None if
/// the state is already constant on its domain. Shared with the switching
/// module's truncated-tree error analysis.
pub fn dt_canonical_query(
    f: &PartialFn,
    fixed_mask: usize,
    fixed_vals: usize,
    memo: &mut HashMap<(usize, usize), u32>,
) -> Option<usize> {
    if constant_on_subcube(f, fixed_mask, fixed_vals) {
        return None;
    }
    let mut best = u32::MAX;
    let mut arg = 0;
    for i in 0..f.n() {
        let bit = 1usize << i;
        if fixed_mask & bit != 0 {
            continue;
        }
        let d0 = dt_depth_rec(f, fixed_mask | bit, fixed_vals, memo);
        let d1 = dt_depth_rec(f, fixed_mask | bit, fixed_vals | bit, memo);
        let d = 1 + d0.max(d1);
        if d < best {
            best = d;
            arg = i;
        }
    }
    Some(arg)
}

/// C(f, x): minimum size of a partial assignment consistent with x that
/// forces f's value over dom(f). Smallest-first subset search.
pub fn cert_complexity(f: &PartialFn, x: &Assignment) -> Result<u32> {
    let fx = require_in_domain(f, x)?;
    let n = f.n();
    let xi = x.index();
    let full = f.table_len() - 1;
    for s in 0..=n as u32 {
        for mask in 0..=full {
            if (mask as u64).count_ones() != s {
                continue;
            }
            if forces(f, xi, mask, fx) {
                return Ok(s);
            }
        }
    }
    unreachable!("the full assignment always forces the value");
}

/// Does pinning the variables in `mask` to x's bits force value fx on dom(f)?
fn forces(f: &PartialFn, x_index: usize, mask: usize, fx: bool) -> bool {
    let free_mask = (f.table_len() - 1) & !mask;
    let base = x_index & mask;
    let mut sub = free_mask;
    loop {
        if f.value_at(base | sub) == Some(!fx) {
            return false;
        }
        if sub == 0 {
            return true;
        }
        sub = (sub - 1) & free_mask;
    }
}

/// Does pinning the variables in `mask` to the bits of `vals` force value fx
/// over dom(f)? Vacuously true on subcubes that miss the domain. Shared with
/// the switching module's certificate enumeration.
pub fn forces_value(f: &PartialFn, mask: usize, vals: usize, fx: bool) -> bool {
    forces(f, vals & mask, mask, fx)
}

/// C(f) = max over dom(f); also the 0- and 1-sided maxima.
pub fn cert_complexity_all(f: &PartialFn) -> Result<(u32, u32, u32)> {
    let mut c = 0;
    let mut c0 = 0;
    let mut c1 = 0;
    for idx in f.domain_indices() {
        let x = Assignment::from_index(idx, f.n());
        let v = cert_complexity(f, &x)?;
        c = c.max(v);
        if f.value_at(idx) == Some(true) {
            c1 = c1.max(v);
        } else {
            c0 = c0.max(v);
        }
    }
    Ok((c, c0, c1))
}

/// s(f, x): flips that stay inside dom(f) and change the value.
pub fn sensitivity(f: &PartialFn, x: &Assignment) -> Result<u32> {
    let fx = require_in_domain(f, x)?;
    let xi = x.index();
    let mut count = 0;
    for i in 0..f.n() {
        if f.value_at(xi ^ (1 << i)) == Some(!fx) {
            count += 1;
        }
    }
    Ok(count)
}

pub fn max_sensitivity(f: &PartialFn) -> Result<u32> {
    let mut best = 0;
    for idx in f.domain_indices() {
        best = best.max(sensitivity(f, &Assignment::from_index(idx, f.n()))?);
    }
    Ok(best)
}

/// All minimal sensitive blocks at x, as bit masks.
pub fn minimal_sensitive_blocks(f: &PartialFn, x: &Assignment) -> Result<Vec<usize>> {
    let fx = require_in_domain(f, x)?;
    cap("block sensitivity arity", f.n(), BS_ARITY_CAP)?;
    let xi = x.index();
    let full = f.table_len() - 1;
    let sensitive = |b: usize| f.value_at(xi ^ b) == Some(!fx);
    let mut blocks = Vec::new();
    'outer: for b in 1..=full {
        if !sensitive(b) {
            continue;
        }
        // Minimal iff no proper sensitive subset.
        let mut sub = (b - 1) & b;
        while sub != 0 {
            if sensitive(sub) {
                continue 'outer;
            }
            sub = (sub - 1) & b;
        }
        blocks.push(b);
    }
    Ok(blocks)
}

/// bs(f, x): maximum packing of disjoint sensitive blocks. Only minimal
/// blocks are enumerated; any packing using a non-minimal block is dominated
/// by replacing it with a sensitive subset.
pub fn block_sensitivity(f: &PartialFn, x: &Assignment) -> Result<u32> {
    let blocks = minimal_sensitive_blocks(f, x)?;
    let mut best = 0;
    pack(&blocks, 0, 0, 0, &mut best);
    Ok(best)
}

fn pack(blocks: &[usize], from: usize, used: usize, size: u32, best: &mut u32) {
    *best = (*best).max(size);
    if size + (blocks.len() - from) as u32 <= *best {
        return; // even taking everything left cannot improve
    }
    for j in from..blocks.len() {
        if blocks[j] & used == 0 {
            pack(blocks, j + 1, used | blocks[j], size + 1, best);
        }
    }
}

pub fn max_block_sensitivity(f: &PartialFn) -> Result<u32> {
    let mut best = 0;
    for idx in f.domain_indices() {
        best = best.max(block_sensitivity(f, &Assignment::from_index(idx, f.n()))?);
    }
    Ok(best)
}

/// FC(f, x) by its defining LP: minimize sum c_i subject to
/// sum_{i: x_i != y_i} c_i >= 1 for every domain point y with f(y) != f(x).
pub fn frac_cert(f: &PartialFn, x: &Assignment) -> Result<FractionalCertificate> {
    let fx = require_in_domain(f, x)?;
    cap("frac_cert arity", f.n(), DT_ARITY_CAP)?;
    let n = f.n();
    let xi = x.index();
    let mut lp = LinearProgram::new(
        Sense::Min,
        vec![BigRational::one(); n],
    );
    for y in f.domain_indices() {
        if f.value_at(y) != Some(!fx) {
            continue;
        }
        let diff = xi ^ y;
        let row: Vec<BigRational> = (0..n)
            .map(|i| {
                if diff >> i & 1 == 1 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        lp.add_constraint(row, Rel::Ge, BigRational::one());
    }
    let sol = lp.solve()?;
    if sol.status != Status::Optimal {
        return Err(Error::LpResource(format!(
            "FC LP unexpectedly {:?}",
            sol.status
        )));
    }
    Ok(FractionalCertificate {
        x: x.clone(),
        weights: sol.assignment,
        value: sol.value,
    })
}

/// fbs(f) = max_x FC(f, x) (the two measures agree pointwise).
pub fn fbs(f: &PartialFn) -> Result<BigRational> {
    let mut best = BigRational::zero();
    for idx in f.domain_indices() {
        let c = frac_cert(f, &Assignment::from_index(idx, f.n()))?;
        if c.value > best {
            best = c.value;
        }
    }
    Ok(best)
}

/// fbs(f, x) by the primal LP over minimal sensitive blocks: maximize
/// sum_B w_B subject to sum_{B ni i} w_B <= 1 for each i, w >= 0.
pub fn frac_block_sens(f: &PartialFn, x: &Assignment) -> Result<BigRational> {
    require_in_domain(f, x)?;
    cap("frac_block_sens arity", f.n(), FBS_PRIMAL_ARITY_CAP)?;
    let blocks = minimal_sensitive_blocks(f, x)?;
    if blocks.is_empty() {
        return Ok(BigRational::zero());
    }
    let n = f.n();
    let mut lp = LinearProgram::new(
        Sense::Max,
        vec![BigRational::one(); blocks.len()],
    );
    for i in 0..n {
        let row: Vec<BigRational> = blocks
            .iter()
            .map(|b| {
                if b >> i & 1 == 1 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        lp.add_constraint(row, Rel::Le, BigRational::one());
    }
    let sol = lp.solve()?;
    if sol.status != Status::Optimal {
        return Err(Error::LpResource(format!(
            "fbs LP unexpectedly {:?}",
            sol.status
        )));
    }
    Ok(sol.value)
}

/// Polynomial basis for [`MultilinearPoly`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Variables valued in {0,1}.
    ZeroOne,
    /// Variables valued in {+1,-1}; an Assignment bit b maps to (-1)^b.
    PlusMinus,
}

/// A multilinear polynomial: rational coefficient per variable subset.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearPoly {
    pub n: usize,
    pub basis: Basis,
    pub coeffs: BTreeMap<u32, BigRational>,
}

impl MultilinearPoly {
    pub fn degree(&self) -> u32 {
        self.coeffs
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(s, _)| s.count_ones())
            .max()
            .unwrap_or(0)
    }

    /// Evaluate at arbitrary rational variable values.
    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        let mut total = BigRational::zero();
        for (&s, c) in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            let mut term = c.clone();
            for i in 0..self.n {
                if s >> i & 1 == 1 {
                    term *= &point[i];
                }
            }
            total += term;
        }
        total
    }

    /// Evaluate at a Boolean assignment, mapped through the basis
    /// convention (ZeroOne: b -> b; PlusMinus: b -> (-1)^b).
    pub fn eval_assignment(&self, x: &Assignment) -> BigRational {
        let point: Vec<BigRational> = x
            .bits
            .iter()
            .map(|&b| match self.basis {
                Basis::ZeroOne => {
                    if b {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                }
                Basis::PlusMinus => {
                    if b {
                        -BigRational::one()
                    } else {
                        BigRational::one()
                    }
                }
            })
            .collect();
        self.eval(&point)
    }
}

/// Exact multilinear extension of a total f in the 0/1 basis, via the
/// Moebius transform over the subset lattice.
pub fn poly_of(f: &PartialFn) -> Result<MultilinearPoly> {
    if !f.is_total() {
        return Err(Error::Domain(
            "degree/poly_of needs a total function; use approx_degree".into(),
        ));
    }
    let n = f.n();
    let size = f.table_len();
    let mut a: Vec<i64> = (0..size)
        .map(|i| f.value_at(i).unwrap() as i64)
        .collect();
    for i in 0..n {
        for t in 0..size {
            if t >> i & 1 == 1 {
                a[t] -= a[t ^ (1 << i)];
            }
        }
    }
    let coeffs = a
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(s, &c)| (s as u32, BigRational::from_integer(BigInt::from(c))))
        .collect();
    Ok(MultilinearPoly {
        n,
        basis: Basis::ZeroOne,
        coeffs,
    })
}

/// deg(f) of a total function.
pub fn degree(f: &PartialFn) -> Result<u32> {
    Ok(poly_of(f)?.degree())
}

/// Interpolate the unique multilinear polynomial in the +-1 basis through a
/// value table indexed by sign pattern (index bit i set <=> variable i is -1).
pub fn interpolate_pm(n: usize, values: &[BigRational]) -> MultilinearPoly {
    assert_eq!(values.len(), 1 << n);
    // Fourier coefficients: c_S = 2^-n sum_z f(z) prod_{i in S} z_i.
    let mut a = values.to_vec();
    for i in 0..n {
        for t in 0..1usize << n {
            if t >> i & 1 == 1 {
                let other = a[t ^ (1 << i)].clone();
                let this = a[t].clone();
                // Butterfly: (f at z_i=+1) +- (f at z_i=-1).
                a[t ^ (1 << i)] = &other + &this;
                a[t] = other - this;
            }
        }
    }
    let scale = BigRational::new(BigInt::one(), BigInt::from(1u64 << n));
    let coeffs = a
        .into_iter()
        .enumerate()
        .map(|(s, c)| (s as u32, c * &scale))
        .filter(|(_, c)| !c.is_zero())
        .collect();
    MultilinearPoly {
        n,
        basis: Basis::PlusMinus,
        coeffs,
    }
}

/// The +-1-basis extension of a total Boolean f with values mapped
/// 0 -> +1, 1 -> -1 and inputs mapped through (-1)^b.
pub fn poly_of_pm(f: &PartialFn) -> Result<MultilinearPoly> {
    if !f.is_total() {
        return Err(Error::Domain("poly_of_pm needs a total function".into()));
    }
    let n = f.n();
    let values: Vec<BigRational> = (0..f.table_len())
        .map(|i| {
            if f.value_at(i).unwrap() {
                -BigRational::one()
            } else {
                BigRational::one()
            }
        })
        .collect();
    Ok(interpolate_pm(n, &values))
}

/// Real-valued block sensitivity s(p, x, B) = |p(x) - p(x^B)| / 2 for a
/// +-1-basis polynomial.
pub fn real_block_sens(
    p: &MultilinearPoly,
    x: &Assignment,
    block: &[usize],
) -> Result<BigRational> {
    if p.basis != Basis::PlusMinus {
        return Err(Error::Parameter("real_block_sens needs the +-1 basis".into()));
    }
    let fx = p.eval_assignment(x);
    let fy = p.eval_assignment(&x.flip_block(block)?);
    Ok((fx - fy).abs() / BigRational::from_integer(BigInt::from(2)))
}

/// Smallest d for which a degree-d multilinear p has |p - f| <= eps on
/// dom(f) and 0 <= p <= 1 everywhere; returns (d, witness).
pub fn approx_degree(
    f: &PartialFn,
    eps: &BigRational,
) -> Result<(u32, MultilinearPoly)> {
    cap("approx_degree arity", f.n(), ADEG_ARITY_CAP)?;
    for d in 0..=f.n() as u32 {
        if let Some(poly) = approx_feasible(f, eps, d)? {
            return Ok((d, poly));
        }
    }
    unreachable!("degree n always suffices: the exact extension works");
}

fn approx_feasible(
    f: &PartialFn,
    eps: &BigRational,
    d: u32,
) -> Result<Option<MultilinearPoly>> {
    let n = f.n();
    let monomials: Vec<u32> = (0..1u32 << n)
        .filter(|s| s.count_ones() <= d)
        .collect();
    let mut lp = LinearProgram::new(
        Sense::Min,
        vec![BigRational::zero(); monomials.len()],
    );
    for j in 0..monomials.len() {
        lp.set_bounds(j, None, None); // coefficients are free
    }
    for v in 0..f.table_len() {
        let row: Vec<BigRational> = monomials
            .iter()
            .map(|&s| {
                if s as usize & !v == 0 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        lp.add_constraint(row.clone(), Rel::Ge, BigRational::zero());
        lp.add_constraint(row.clone(), Rel::Le, BigRational::one());
        if let Some(fv) = f.value_at(v) {
            let fv = if fv {
                BigRational::one()
            } else {
                BigRational::zero()
            };
            lp.add_constraint(row.clone(), Rel::Ge, &fv - eps);
            lp.add_constraint(row, Rel::Le, &fv + eps);
        }
    }
    let sol = lp.solve()?;
    match sol.status {
        Status::Optimal => {
            let coeffs = monomials
                .iter()
                .zip(sol.assignment)
                .filter(|(_, c)| !c.is_zero())
                .map(|(&s, c)| (s, c))
                .collect();
            Ok(Some(MultilinearPoly {
                n,
                basis: Basis::ZeroOne,
                coeffs,
            }))
        }
        Status::Infeasible => Ok(None),
        Status::Unbounded => Err(Error::LpResource(
            "feasibility LP reported unbounded".into(),
        )),
    }
}

pub fn default_eps() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(3))
}

/// Aggregated measures of one function.
#[derive(Clone, Debug)]
pub struct MeasureReport {
    pub n: usize,
    pub dt: u32,
    pub c: u32,
    pub c0: u32,
    pub c1: u32,
    pub s: u32,
    pub bs: u32,
    pub fbs: BigRational,
    pub deg: Option<u32>,
    pub adeg: Option<u32>,
}

/// Compute every measure that fits the caps. `with_adeg` gates the LP-heavy
/// approximate degree.
pub fn measure_report(f: &PartialFn, with_adeg: bool) -> Result<MeasureReport> {
    let (c, c0, c1) = cert_complexity_all(f)?;
    let deg = if f.is_total() { Some(degree(f)?) } else { None };
    let adeg = if with_adeg {
        Some(approx_degree(f, &default_eps())?.0)
    } else {
        None
    };
    Ok(MeasureReport {
        n: f.n(),
        dt: dt_depth(f)?,
        c,
        c0,
        c1,
        s: max_sensitivity(f)?,
        bs: max_block_sensitivity(f)?,
        fbs: fbs(f)?,
        deg,
        adeg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::rat_int;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn asg(bits: &[u8]) -> Assignment {
        Assignment::new(bits.iter().map(|&b| b == 1).collect())
    }

    /// Independent exhaustive tree-search oracle for minimal DT depth:
    /// no memoization, plain "can some depth-d tree compute f here".
    fn dt_oracle(f: &PartialFn) -> u32 {
        fn can(f: &PartialFn, mask: usize, vals: usize, d: u32) -> bool {
            if constant_on_subcube(f, mask, vals) {
                return true;
            }
            if d == 0 {
                return false;
            }
            (0..f.n()).any(|i| {
                let bit = 1usize << i;
                mask & bit == 0
                    && can(f, mask | bit, vals, d - 1)
                    && can(f, mask | bit, vals | bit, d - 1)
            })
        }
        (0..=f.n() as u32)
            .find(|&d| can(f, 0, 0, d))
            .unwrap()
    }

    #[test]
    fn dt_depth_frozen_examples() {
        assert_eq!(dt_depth(&PartialFn::or(3).unwrap()).unwrap(), 3);
        assert_eq!(dt_depth(&PartialFn::constant(3, true).unwrap()).unwrap(), 0);
        assert_eq!(dt_depth(&PartialFn::xor(2).unwrap()).unwrap(), 2);
    }

    #[test]
    fn dt_depth_matches_tree_search_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=4usize {
            for _ in 0..40 {
                let f = PartialFn::from_partial_fn(n, |_| {
                    if rng.gen_bool(0.15) {
                        None
                    } else {
                        Some(rng.gen())
                    }
                })
                .unwrap();
                assert_eq!(dt_depth(&f).unwrap(), dt_oracle(&f), "f = {f:?}");
            }
        }
    }

    #[test]
    fn cert_complexity_frozen_examples() {
        let or3 = PartialFn::or(3).unwrap();
        assert_eq!(cert_complexity(&or3, &asg(&[0, 0, 0])).unwrap(), 3);
        assert_eq!(cert_complexity(&or3, &asg(&[1, 0, 0])).unwrap(), 1);
        let xor2 = PartialFn::xor(2).unwrap();
        for idx in 0..4 {
            assert_eq!(
                cert_complexity(&xor2, &Assignment::from_index(idx, 2)).unwrap(),
                2
            );
        }
    }

    #[test]
    fn cert_outside_domain_errors() {
        let f = PartialFn::from_partial_fn(2, |x| {
            if x.index() == 3 {
                None
            } else {
                Some(false)
            }
        })
        .unwrap();
        assert!(cert_complexity(&f, &asg(&[1, 1])).is_err());
    }

    #[test]
    fn sensitivity_frozen_examples() {
        let or3 = PartialFn::or(3).unwrap();
        assert_eq!(sensitivity(&or3, &asg(&[0, 0, 0])).unwrap(), 3);
        assert_eq!(sensitivity(&or3, &asg(&[1, 1, 0])).unwrap(), 0);
        let xor4 = PartialFn::xor(4).unwrap();
        for idx in 0..16 {
            assert_eq!(
                sensitivity(&xor4, &Assignment::from_index(idx, 4)).unwrap(),
                4
            );
        }
    }

    #[test]
    fn block_sensitivity_frozen_examples() {
        let or3 = PartialFn::or(3).unwrap();
        assert_eq!(block_sensitivity(&or3, &asg(&[0, 0, 0])).unwrap(), 3);
        let xor4 = PartialFn::xor(4).unwrap();
        for idx in 0..16 {
            assert_eq!(
                block_sensitivity(&xor4, &Assignment::from_index(idx, 4)).unwrap(),
                4
            );
        }
        let c = PartialFn::constant(3, false).unwrap();
        assert_eq!(max_block_sensitivity(&c).unwrap(), 0);
    }

    #[test]
    fn frac_cert_or_n() {
        for n in 1..=8usize {
            let f = PartialFn::or(n).unwrap();
            let c = frac_cert(&f, &Assignment::from_index(0, n)).unwrap();
            assert_eq!(c.value, rat_int(n as i64));
            assert!(c.weights.iter().all(|w| *w == rat_int(1)));
            assert!(c.check_against(&f));
            let one = frac_cert(&f, &Assignment::from_index(1, n)).unwrap();
            assert_eq!(one.value, rat_int(1));
        }
    }

    #[test]
    fn frac_cert_constant_is_zero() {
        let f = PartialFn::constant(3, true).unwrap();
        let c = frac_cert(&f, &asg(&[0, 0, 0])).unwrap();
        assert_eq!(c.value, rat_int(0));
    }

    #[test]
    fn frac_block_sens_frozen_examples() {
        let or3 = PartialFn::or(3).unwrap();
        assert_eq!(frac_block_sens(&or3, &asg(&[0, 0, 0])).unwrap(), rat_int(3));
        let xor3 = PartialFn::xor(3).unwrap();
        for idx in 0..8 {
            assert_eq!(
                frac_block_sens(&xor3, &Assignment::from_index(idx, 3)).unwrap(),
                rat_int(3)
            );
        }
    }

    #[test]
    fn fc_equals_fbs_on_random_partial_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..60 {
            let n = rng.gen_range(1..=5);
            let f = PartialFn::from_partial_fn(n, |_| {
                if rng.gen_bool(0.2) {
                    None
                } else {
                    Some(rng.gen())
                }
            })
            .unwrap();
            for idx in f.domain_indices().collect::<Vec<_>>() {
                let x = Assignment::from_index(idx, n);
                let fc = frac_cert(&f, &x).unwrap();
                let fb = frac_block_sens(&f, &x).unwrap();
                assert_eq!(fc.value, fb, "duality gap for {f:?} at {idx}");
            }
        }
    }

    #[test]
    fn degree_frozen_examples() {
        assert_eq!(degree(&PartialFn::and(2).unwrap()).unwrap(), 2);
        for n in 1..=5 {
            assert_eq!(degree(&PartialFn::xor(n).unwrap()).unwrap(), n as u32);
        }
        assert_eq!(degree(&PartialFn::constant(3, true).unwrap()).unwrap(), 0);
    }

    #[test]
    fn poly_of_reproduces_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(1..=5);
            let f = PartialFn::from_fn(n, |_| rng.gen()).unwrap();
            let p = poly_of(&f).unwrap();
            for idx in 0..f.table_len() {
                let x = Assignment::from_index(idx, n);
                let want = if f.value_at(idx).unwrap() {
                    rat_int(1)
                } else {
                    rat_int(0)
                };
                assert_eq!(p.eval_assignment(&x), want);
            }
        }
    }

    #[test]
    fn pm_poly_reproduces_table() {
        let f = PartialFn::maj(3).unwrap();
        let p = poly_of_pm(&f).unwrap();
        for idx in 0..8 {
            let x = Assignment::from_index(idx, 3);
            let want = if f.value_at(idx).unwrap() {
                rat_int(-1)
            } else {
                rat_int(1)
            };
            assert_eq!(p.eval_assignment(&x), want);
        }
        // MAJ_3 in the +-1 basis is (z1 + z2 + z3 - z1 z2 z3)/2.
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn real_block_sens_examples() {
        // p = z1 over 2 variables.
        let p = MultilinearPoly {
            n: 2,
            basis: Basis::PlusMinus,
            coeffs: [(1u32, rat_int(1))].into_iter().collect(),
        };
        let x = asg(&[0, 0]); // (+1, +1)
        assert_eq!(real_block_sens(&p, &x, &[0]).unwrap(), rat_int(1));
        assert_eq!(real_block_sens(&p, &x, &[1]).unwrap(), rat_int(0));
        // p = (z1 + z2)/2.
        let p2 = MultilinearPoly {
            n: 2,
            basis: Basis::PlusMinus,
            coeffs: [(1u32, crate::lp::rat(1, 2)), (2u32, crate::lp::rat(1, 2))]
                .into_iter()
                .collect(),
        };
        assert_eq!(
            real_block_sens(&p2, &x, &[0]).unwrap(),
            crate::lp::rat(1, 2)
        );
    }

    #[test]
    fn adeg_frozen_examples() {
        let eps = default_eps();
        let (d, w) = approx_degree(&PartialFn::or(2).unwrap(), &eps).unwrap();
        assert_eq!(d, 1);
        // Witness must satisfy range and closeness at every point.
        let f = PartialFn::or(2).unwrap();
        for idx in 0..4 {
            let x = Assignment::from_index(idx, 2);
            let v = w.eval_assignment(&x);
            assert!(v >= rat_int(0) && v <= rat_int(1));
            let fv = if f.value_at(idx).unwrap() {
                rat_int(1)
            } else {
                rat_int(0)
            };
            assert!((v - fv).abs() <= eps);
        }
        assert_eq!(
            approx_degree(&PartialFn::constant(2, true).unwrap(), &eps)
                .unwrap()
                .0,
            0
        );
        assert_eq!(approx_degree(&PartialFn::xor(2).unwrap(), &eps).unwrap().0, 2);
    }

    #[test]
    fn measure_chain_inequalities_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let n = rng.gen_range(1..=4);
            let f = PartialFn::from_fn(n, |_| rng.gen()).unwrap();
            let r = measure_report(&f, true).unwrap();
            assert!(r.s <= r.bs);
            assert!(rat_int(r.bs as i64) <= r.fbs);
            assert!(r.c >= r.bs);
            assert!(r.adeg.unwrap() <= r.deg.unwrap());
        }
    }

    #[test]
    fn measure_report_or3() {
        let r = measure_report(&PartialFn::or(3).unwrap(), true).unwrap();
        assert_eq!((r.dt, r.c, r.s, r.bs), (3, 3, 3, 3));
        assert_eq!(r.fbs, rat_int(3));
        assert_eq!(r.deg, Some(3));
    }
}

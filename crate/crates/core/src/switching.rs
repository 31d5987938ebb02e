//! Switching-lemma machinery: heavy-set thresholding of fractional
//! certificate weights, adaptive stage-wise sampling of the free set,
//! certificate DNF / decision-tree constructions for restricted functions,
//! and exact / Monte Carlo estimation of switching failure probabilities.
//!
//! The failure event follows the truncated-tree convention: the restricted
//! function's canonical minimal-depth tree (lowest-index tie-break) is cut at
//! depth d and truncated leaves output 0, so the tree errs at y exactly when
//! f_rho(y) = 1 and y's path is longer than d. Points outside dom never count
//! as errors.

use std::collections::HashMap;

use crate::boolfn::{Assignment, PartialFn, Restriction};
use crate::measures::{
    dt_canonical_query, forces_value, frac_cert, FractionalCertificate,
};
use crate::seeds;
use crate::{Error, Result};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const CERT_ARITY_CAP: usize = 16;
const SWITCH_ARITY_CAP: usize = 12;

/// A sampled free set S together with the inclusion probability that
/// produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeSet {
    pub indices: Vec<usize>,
    pub p: f64,
}

/// Put each index in S independently with probability p.
pub fn sample_free_set(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<FreeSet> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0,1]")));
    }
    let indices = (0..n).filter(|_| rng.gen_bool(p)).collect();
    Ok(FreeSet { indices, p })
}

/// K = {i in S : c_{x,i} > tau}.
pub fn heavy_set(cert: &FractionalCertificate, s: &FreeSet, tau: &BigRational) -> Vec<usize> {
    s.indices
        .iter()
        .copied()
        .filter(|&i| &cert.weights[i] > tau)
        .collect()
}

/// Exhaustively verify that every y differing from x only inside S minus K
/// satisfies |f(x) - f(y)| <= bound (points outside dom are skipped; the
/// weight-sum bound only constrains domain points).
pub fn restricted_stability_check(
    f: &PartialFn,
    x: &Assignment,
    s: &[usize],
    k: &[usize],
    bound: &BigRational,
) -> Result<bool> {
    let light: Vec<usize> = s.iter().copied().filter(|i| !k.contains(i)).collect();
    if light.len() > 20 {
        return Err(Error::SizeCap {
            what: "stability enumeration set",
            got: light.len(),
            cap: 20,
        });
    }
    let fx = match f.evaluate(x)? {
        Some(v) => v,
        None => return Err(Error::Domain("x outside dom(f)".into())),
    };
    for sub in 0..1usize << light.len() {
        let flips: Vec<usize> = light
            .iter()
            .enumerate()
            .filter(|(j, _)| sub >> j & 1 == 1)
            .map(|(_, &i)| i)
            .collect();
        let y = x.flip_block(&flips)?;
        if let Some(fy) = f.evaluate(&y)? {
            let delta = if fx == fy {
                BigRational::zero()
            } else {
                BigRational::one()
            };
            if &delta > bound {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// One stage of the adaptive sampling: the indices sampled this stage and the
/// cumulative flipped set after absorbing this stage's disagreements.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub sampled: Vec<usize>,
    pub flipped: Vec<usize>,
}

/// Transcript of the stage-wise heavy-set sampling process.
#[derive(Clone, Debug, PartialEq)]
pub struct HeavyTrace {
    pub stages: Vec<Stage>,
    /// True when the flipped set stabilized; false when the stage limit
    /// ceil(k/6) cut the process off.
    pub terminated: bool,
    pub k: u32,
    pub tau: BigRational,
}

/// Sample the free set in stages. Stage j draws each index of the heavy set
/// of the hybrid point x^{A_j} (minus all earlier heavy sets) with
/// probability p, then absorbs the sampled indices where y disagrees with x
/// into A_{j+1}. Stops when A stabilizes or after ceil(k/6) stages, with
/// tau = 2 p^{3/4} F / k and F the weight sum at x.
pub fn stagewise_sample(
    f: &PartialFn,
    x: &Assignment,
    y: &Assignment,
    p: f64,
    k: u32,
    rng: &mut ChaCha8Rng,
) -> Result<HeavyTrace> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0,1]")));
    }
    if k == 0 {
        return Err(Error::Parameter("stage parameter k must be >= 1".into()));
    }
    let base = frac_cert(f, x)?;
    let cap_f = base.value.to_f64().unwrap_or(0.0);
    let tau_f = 2.0 * p.powf(0.75) * cap_f / k as f64;
    let tau = BigRational::from_float(tau_f)
        .unwrap_or_else(BigRational::zero);
    let limit = k.div_ceil(6).max(1);

    let mut stages = Vec::new();
    let mut flipped: Vec<usize> = Vec::new();
    let mut seen_heavy = vec![false; f.n()];
    let mut terminated = false;
    for _ in 0..limit {
        let hybrid = x.flip_block(&flipped)?;
        let cert = frac_cert(f, &hybrid)?;
        let mut sampled = Vec::new();
        for i in 0..f.n() {
            if seen_heavy[i] || cert.weights[i] <= tau {
                continue;
            }
            seen_heavy[i] = true;
            if rng.gen_bool(p) {
                sampled.push(i);
            }
        }
        let before = flipped.len();
        for &i in &sampled {
            if y.bits[i] != x.bits[i] && !flipped.contains(&i) {
                flipped.push(i);
            }
        }
        flipped.sort_unstable();
        let grew = flipped.len() > before;
        stages.push(Stage {
            sampled,
            flipped: flipped.clone(),
        });
        if !grew {
            terminated = true;
            break;
        }
    }
    Ok(HeavyTrace {
        stages,
        terminated,
        k,
        tau,
    })
}

/// Enumerate minimal certificates of value `target` with width <= max_width,
/// as (mask, vals) pairs sorted by index set then by pinned values.
fn minimal_certs(f: &PartialFn, target: bool, max_width: usize) -> Vec<(usize, usize)> {
    let n = f.n();
    let full = f.table_len() - 1;
    let mut out = Vec::new();
    for mask in 0..=full {
        if (mask as u32).count_ones() as usize > max_width {
            continue;
        }
        let mut vals = mask;
        loop {
            vals = (vals.wrapping_sub(1)) & mask;
            let v = vals;
            if forces_value(f, mask, v, target) {
                // Minimal iff dropping any single pinned bit breaks forcing.
                let minimal = (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .all(|i| !forces_value(f, mask & !(1 << i), v & !(1 << i), target));
                if minimal {
                    out.push((mask, v));
                }
            }
            if v == mask {
                break;
            }
        }
        if mask == full {
            break;
        }
    }
    out.sort_by(|a, b| cert_key(a.0, a.1).cmp(&cert_key(b.0, b.1)));
    out.dedup();
    out
}

fn cert_key(mask: usize, vals: usize) -> (Vec<usize>, Vec<bool>) {
    let idx: Vec<usize> = (0..usize::BITS as usize)
        .filter(|i| mask >> i & 1 == 1)
        .collect();
    let v = idx.iter().map(|&i| vals >> i & 1 == 1).collect();
    (idx, v)
}

/// DNF of 1-certificates. Term literals refer to the free variables of the
/// restricted function, 0-based in ascending original-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct CertDnf {
    pub terms: Vec<Vec<(usize, bool)>>,
}

impl CertDnf {
    pub fn eval(&self, y: &Assignment) -> bool {
        self.terms
            .iter()
            .any(|t| t.iter().all(|&(i, b)| y.bits[i] == b))
    }

    pub fn width(&self) -> usize {
        self.terms.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// The certificate DNF of f restricted by rho: one term per minimal
/// 1-certificate of width <= k^2. Sound on 0-inputs by construction.
pub fn cert_dnf(f: &PartialFn, rho: &Restriction, k: u32) -> Result<CertDnf> {
    let fr = f.restrict(rho)?;
    if fr.n() > CERT_ARITY_CAP {
        return Err(Error::SizeCap {
            what: "cert_dnf free arity",
            got: fr.n(),
            cap: CERT_ARITY_CAP,
        });
    }
    let width = (k as usize).saturating_mul(k as usize);
    let terms = minimal_certs(&fr, true, width)
        .into_iter()
        .map(|(mask, vals)| {
            (0..fr.n())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| (i, vals >> i & 1 == 1))
                .collect()
        })
        .collect();
    Ok(CertDnf { terms })
}

/// Decision tree over the free variables of a restricted function.
#[derive(Clone, Debug, PartialEq)]
pub enum DecisionTreeNode {
    Leaf(bool),
    Query {
        index: usize,
        zero: Box<DecisionTreeNode>,
        one: Box<DecisionTreeNode>,
    },
}

impl DecisionTreeNode {
    pub fn depth(&self) -> u32 {
        match self {
            DecisionTreeNode::Leaf(_) => 0,
            DecisionTreeNode::Query { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    pub fn eval(&self, y: &Assignment) -> bool {
        match self {
            DecisionTreeNode::Leaf(b) => *b,
            DecisionTreeNode::Query { index, zero, one } => {
                if y.bits[*index] {
                    one.eval(y)
                } else {
                    zero.eval(y)
                }
            }
        }
    }

    /// Every root-to-leaf path queries distinct indices.
    pub fn queries_distinct(&self) -> bool {
        fn go(node: &DecisionTreeNode, path: &mut Vec<usize>) -> bool {
            match node {
                DecisionTreeNode::Leaf(_) => true,
                DecisionTreeNode::Query { index, zero, one } => {
                    if path.contains(index) {
                        return false;
                    }
                    path.push(*index);
                    let ok = go(zero, path) && go(one, path);
                    path.pop();
                    ok
                }
            }
        }
        go(self, &mut Vec::new())
    }
}

/// Certificate-to-decision-tree conversion by the round procedure: each round
/// picks the lexicographically smallest 0-certificate of width <= k^2
/// consistent with the answers so far and queries its remaining bits in
/// ascending order. A confirmed certificate yields leaf 0, exhausting the
/// consistent certificates yields leaf 1, and round k^2 truncates to leaf 0.
/// Depth is at most k^4 by construction.
pub fn cert_dt(f: &PartialFn, rho: &Restriction, k: u32) -> Result<DecisionTreeNode> {
    let fr = f.restrict(rho)?;
    if fr.n() > CERT_ARITY_CAP {
        return Err(Error::SizeCap {
            what: "cert_dt free arity",
            got: fr.n(),
            cap: CERT_ARITY_CAP,
        });
    }
    let width = (k as usize).saturating_mul(k as usize);
    let certs = minimal_certs(&fr, false, width);
    Ok(build_rounds(&certs, 0, 0, 0, width))
}

fn build_rounds(
    certs: &[(usize, usize)],
    mask: usize,
    vals: usize,
    round: usize,
    max_rounds: usize,
) -> DecisionTreeNode {
    if round >= max_rounds {
        return DecisionTreeNode::Leaf(false);
    }
    let consistent = certs
        .iter()
        .find(|&&(cm, cv)| (cv ^ vals) & (cm & mask) == 0);
    match consistent {
        None => DecisionTreeNode::Leaf(true),
        Some(&(cm, cv)) => {
            let unqueried: Vec<usize> = (0..usize::BITS as usize)
                .filter(|i| (cm & !mask) >> i & 1 == 1)
                .collect();
            if unqueried.is_empty() {
                return DecisionTreeNode::Leaf(false);
            }
            query_chain(certs, cm, cv, &unqueried, mask, vals, round, max_rounds)
        }
    }
}

fn query_chain(
    certs: &[(usize, usize)],
    cm: usize,
    cv: usize,
    remaining: &[usize],
    mask: usize,
    vals: usize,
    round: usize,
    max_rounds: usize,
) -> DecisionTreeNode {
    match remaining.split_first() {
        None => {
            if (vals ^ cv) & cm == 0 {
                DecisionTreeNode::Leaf(false)
            } else {
                build_rounds(certs, mask, vals, round + 1, max_rounds)
            }
        }
        Some((&i, rest)) => {
            let bit = 1usize << i;
            DecisionTreeNode::Query {
                index: i,
                zero: Box::new(query_chain(
                    certs,
                    cm,
                    cv,
                    rest,
                    mask | bit,
                    vals,
                    round,
                    max_rounds,
                )),
                one: Box::new(query_chain(
                    certs,
                    cm,
                    cv,
                    rest,
                    mask | bit,
                    vals | bit,
                    round,
                    max_rounds,
                )),
            }
        }
    }
}

/// Does the depth-d truncated canonical tree of f restricted by
/// (x outside S) err at y restricted to S?
pub fn switch_error(
    f: &PartialFn,
    x: &Assignment,
    y: &Assignment,
    s: &[usize],
    d: u32,
) -> Result<bool> {
    if s.is_empty() {
        // Everything is pinned: the tree is a constant leaf and never errs.
        return Ok(false);
    }
    let rho = Restriction::fix_outside(x, s);
    let fr = f.restrict(&rho)?;
    let ys = Assignment::new(s.iter().map(|&i| y.bits[i]).collect());
    match fr.evaluate(&ys)? {
        Some(true) => {}
        // Value 0 agrees with the truncated output, and points outside dom
        // never count as errors.
        _ => return Ok(false),
    }
    let mut memo = HashMap::new();
    let mut mask = 0usize;
    let mut vals = 0usize;
    let mut depth = 0u32;
    while let Some(q) = dt_canonical_query(&fr, mask, vals, &mut memo) {
        depth += 1;
        if depth > d {
            return Ok(true);
        }
        mask |= 1 << q;
        if ys.bits[q] {
            vals |= 1 << q;
        }
    }
    Ok(false)
}

/// Error indicator for every free set S, indexed by bitmask.
fn switch_error_table(
    f: &PartialFn,
    x: &Assignment,
    y: &Assignment,
    d: u32,
) -> Result<Vec<bool>> {
    let n = f.n();
    if n > SWITCH_ARITY_CAP {
        return Err(Error::SizeCap {
            what: "switch failure arity",
            got: n,
            cap: SWITCH_ARITY_CAP,
        });
    }
    if x.len() != n || y.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: x.len().max(y.len()),
        });
    }
    let mut table = Vec::with_capacity(1 << n);
    for s_mask in 0..1usize << n {
        let s: Vec<usize> = (0..n).filter(|i| s_mask >> i & 1 == 1).collect();
        table.push(switch_error(f, x, y, &s, d)?);
    }
    Ok(table)
}

/// Exact switching failure probability: Pr over S (each index free with
/// probability p) that the depth-d truncated tree errs at y restricted to S.
pub fn switch_fail_exact(
    f: &PartialFn,
    x: &Assignment,
    y: &Assignment,
    p: &BigRational,
    d: u32,
) -> Result<BigRational> {
    if p < &BigRational::zero() || p > &BigRational::one() {
        return Err(Error::Parameter("p outside [0,1]".into()));
    }
    let n = f.n();
    let table = switch_error_table(f, x, y, d)?;
    let q = BigRational::one() - p;
    let mut total = BigRational::zero();
    for (s_mask, &err) in table.iter().enumerate() {
        if !err {
            continue;
        }
        let ones = (s_mask as u32).count_ones();
        let mut w = BigRational::one();
        for _ in 0..ones {
            w *= p;
        }
        for _ in 0..n as u32 - ones {
            w *= &q;
        }
        total += w;
    }
    Ok(total)
}

/// Monte Carlo estimate of the same failure probability, deterministic under
/// (root_seed, trials) and independent of the job count.
pub fn switch_fail_mc(
    f: &PartialFn,
    x: &Assignment,
    y: &Assignment,
    p: f64,
    d: u32,
    trials: u64,
    root_seed: u64,
    jobs: usize,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0,1]")));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let n = f.n();
    let table = switch_error_table(f, x, y, d)?;
    let hits = seeds::count_successes(root_seed, trials, jobs, |rng| {
        let mut s_mask = 0usize;
        for i in 0..n {
            if rng.gen_bool(p) {
                s_mask |= 1 << i;
            }
        }
        table[s_mask]
    });
    Ok(seeds::mc_estimate(hits, trials))
}

/// Uniform-input variant: x and y are drawn uniformly per trial (f must be
/// total) along with S.
pub fn switch_fail_mc_uniform(
    f: &PartialFn,
    p: f64,
    d: u32,
    trials: u64,
    root_seed: u64,
    jobs: usize,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0,1]")));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let n = f.n();
    if n > 10 {
        return Err(Error::SizeCap {
            what: "uniform switch MC arity",
            got: n,
            cap: 10,
        });
    }
    let hits = seeds::count_successes(root_seed, trials, jobs, |rng| {
        let x = Assignment::from_index(rng.gen_range(0..1usize << n), n);
        let y = Assignment::from_index(rng.gen_range(0..1usize << n), n);
        let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(p)).collect();
        switch_error(f, &x, &y, &s, d).unwrap_or(false)
    });
    Ok(seeds::mc_estimate(hits, trials))
}

/// The failure bound exp(-d^{1/5}) reported next to empirical estimates.
pub fn switch_fail_bound(d: u32) -> f64 {
    (-(d as f64).powf(0.2)).exp()
}

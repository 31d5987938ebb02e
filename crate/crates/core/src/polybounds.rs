//! Degree-vs-sensitivity constructions: Chebyshev/OR-gadget composition,
//! blockification, and fractional-certificate weight witnesses.
//!
//! The gadget h(y) = alpha + (1-alpha)/N sum y_j composed with the Chebyshev
//! polynomial T_m sends the all-ones point to 1, each of its neighbors to -1,
//! and stays inside [-1,1]; those three facts (not the asymptotic composition
//! over n*N variables, which is an analytical device) are the testable
//! content. Gadget arithmetic is in doubles with 1e-9 tolerances; the
//! alpha formula uses 2 sin^2 to dodge the 1 - cos cancellation.

use crate::boolfn::{Assignment, PartialFn};
use crate::measures::{
    frac_cert, interpolate_pm, Basis, FractionalCertificate, MultilinearPoly,
};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Certified rational lower bound on pi^2/4 = 2.4674...; asserting
/// value <= 2467/1000 * d^2 soundly implies value <= (pi^2/4) d^2.
pub fn pi_sq_over_4_lower_bound() -> BigRational {
    BigRational::new(BigInt::from(2467), BigInt::from(1000))
}

/// Coefficients of the Chebyshev polynomial T_m (index = power of x), by the
/// recurrence T_0 = 1, T_1 = x, T_{k+1} = 2x T_k - T_{k-1}.
pub fn chebyshev(m: u32) -> Vec<i128> {
    if m == 0 {
        return vec![1];
    }
    let mut prev: Vec<i128> = vec![1];
    let mut cur: Vec<i128> = vec![0, 1];
    for _ in 1..m {
        let mut next = vec![0i128; cur.len() + 1];
        for (i, &c) in cur.iter().enumerate() {
            next[i + 1] += 2 * c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// T_m(x) by the recurrence (stable on [-1,1]).
pub fn chebyshev_eval(m: u32, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, x);
    for _ in 1..m {
        (prev, cur) = (cur, 2.0 * x * cur - prev);
    }
    cur
}

/// The OR gadget: arity N, Chebyshev degree m (the unique integer in
/// [pi sqrt(N)/2, pi sqrt(N)/2 + 1)), and the affine offset alpha.
#[derive(Clone, Copy, Debug)]
pub struct OrGadget {
    pub n: usize,
    pub m: u32,
    pub alpha: f64,
}

pub fn or_gadget(n: usize) -> Result<OrGadget> {
    if n == 0 {
        return Err(Error::Parameter("gadget arity must be >= 1".into()));
    }
    let a = std::f64::consts::PI * (n as f64).sqrt() / 2.0;
    let m = a.ceil() as u32; // interval [a, a+1) has length 1; a irrational
    // alpha = 1 - (N/2)(1 - cos(pi/m)) = 1 - N sin^2(pi/2m).
    let s = (std::f64::consts::PI / (2.0 * m as f64)).sin();
    let alpha = 1.0 - n as f64 * s * s;
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "alpha = {alpha} outside (0,1) at N = {n}"
        )));
    }
    Ok(OrGadget { n, m, alpha })
}

impl OrGadget {
    /// h(y) = alpha + (1-alpha)/N sum y_j for y in {+-1}^N.
    pub fn eval_h(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.n);
        let sum: f64 = y.iter().sum();
        self.alpha + (1.0 - self.alpha) / self.n as f64 * sum
    }

    /// T_m(h(y)).
    pub fn composed(&self, y: &[f64]) -> f64 {
        chebyshev_eval(self.m, self.eval_h(y))
    }

    /// Max of |T_m(h(y))| over all 2^N sign patterns.
    pub fn max_abs_composed(&self) -> Result<f64> {
        if self.n > 16 {
            return Err(Error::SizeCap {
                what: "gadget exhaustive scan arity",
                got: self.n,
                cap: 16,
            });
        }
        let mut worst = 0.0f64;
        for idx in 0..1usize << self.n {
            let y: Vec<f64> = (0..self.n)
                .map(|j| if idx >> j & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            worst = worst.max(self.composed(&y).abs());
        }
        Ok(worst)
    }
}

/// Interpolate the multilinear polynomial in the 0/1 basis through a table
/// of rational values indexed by input (LSB-first), via Moebius transform.
pub fn interpolate_zero_one(n: usize, values: &[BigRational]) -> MultilinearPoly {
    assert_eq!(values.len(), 1 << n);
    let mut a = values.to_vec();
    for i in 0..n {
        for t in 0..1usize << n {
            if t >> i & 1 == 1 {
                let lower = a[t ^ (1 << i)].clone();
                a[t] -= lower;
            }
        }
    }
    let coeffs = a
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(s, c)| (s as u32, c))
        .collect();
    MultilinearPoly {
        n,
        basis: Basis::ZeroOne,
        coeffs,
    }
}

/// Blockification: f'(y) = f(x^{B_y}) where B_y is the union of the blocks
/// selected by y (in the +-1 basis a block is selected by y_j = -1; in the
/// 0/1 basis by y_j = 1, matching the Assignment bit convention of
/// `MultilinearPoly::eval_assignment`). Output is in f's basis over
/// #blocks variables.
pub fn blockify(
    f: &MultilinearPoly,
    x: &Assignment,
    partition: &[Vec<usize>],
) -> Result<MultilinearPoly> {
    if x.len() != f.n {
        return Err(Error::ArityMismatch {
            expected: f.n,
            got: x.len(),
        });
    }
    let mut seen = vec![false; f.n];
    for block in partition {
        for &i in block {
            if i >= f.n {
                return Err(Error::IndexOutOfRange { index: i, n: f.n });
            }
            if seen[i] {
                return Err(Error::Parameter(format!(
                    "partition blocks overlap at variable {i}"
                )));
            }
            seen[i] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Parameter("partition does not cover [n]".into()));
    }
    let k = partition.len();
    if k > 20 {
        return Err(Error::SizeCap {
            what: "blockify block count",
            got: k,
            cap: 20,
        });
    }
    let mut values = Vec::with_capacity(1 << k);
    for ymask in 0..1usize << k {
        let mut flips: Vec<usize> = Vec::new();
        for (j, block) in partition.iter().enumerate() {
            if ymask >> j & 1 == 1 {
                flips.extend_from_slice(block);
            }
        }
        values.push(f.eval_assignment(&x.flip_block(&flips)?));
    }
    Ok(match f.basis {
        Basis::ZeroOne => interpolate_zero_one(k, &values),
        Basis::PlusMinus => interpolate_pm(k, &values),
    })
}

/// Per-input fractional-certificate weights with the certified degree bound
/// sum_i c_{x,i} <= (pi^2/4) d^2.
#[derive(Clone, Debug)]
pub struct WeightWitness {
    pub certificates: Vec<FractionalCertificate>,
    pub d: u32,
    /// 2467/1000 * d^2, a rational lower bound on (pi^2/4) d^2: passing the
    /// check against this bound soundly implies the theorem's inequality.
    pub bound: BigRational,
}

/// Build the weight witness for a total f: the FC LP optimum at every input,
/// checked against both defining inequalities with d = deg(f).
pub fn fbsdeg_witness(f: &PartialFn) -> Result<WeightWitness> {
    if !f.is_total() {
        return Err(Error::Domain("fbsdeg_witness needs a total function".into()));
    }
    if f.n() > 8 {
        return Err(Error::SizeCap {
            what: "fbsdeg_witness arity",
            got: f.n(),
            cap: 8,
        });
    }
    let d = crate::measures::degree(f)?;
    let bound = pi_sq_over_4_lower_bound()
        * BigRational::from_integer(BigInt::from(d as i64 * d as i64));
    let mut certificates = Vec::with_capacity(f.table_len());
    for idx in 0..f.table_len() {
        let x = Assignment::from_index(idx, f.n());
        let cert = frac_cert(f, &x)?;
        let total: BigRational = cert.weights.iter().cloned().sum();
        if total > bound {
            return Err(Error::Domain(format!(
                "weight sum {total} exceeds bound {bound} at input {idx}"
            )));
        }
        if !cert.check_against(f) {
            return Err(Error::Domain(format!(
                "pairwise certificate constraint failed at input {idx}"
            )));
        }
        certificates.push(cert);
    }
    Ok(WeightWitness {
        certificates,
        d,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::rat_int;
    use crate::measures::{self, poly_of, poly_of_pm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chebyshev_coefficients() {
        assert_eq!(chebyshev(0), vec![1]);
        assert_eq!(chebyshev(1), vec![0, 1]);
        assert_eq!(chebyshev(2), vec![-1, 0, 2]);
        assert_eq!(chebyshev(3), vec![0, -3, 0, 4]);
    }

    #[test]
    fn chebyshev_endpoint_identities() {
        for m in 0..=10 {
            assert!((chebyshev_eval(m, 1.0) - 1.0).abs() < 1e-12);
        }
        for m in 2..=8u32 {
            let x = (std::f64::consts::PI / m as f64).cos();
            assert!((chebyshev_eval(m, x) + 1.0).abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn chebyshev_eval_matches_coefficients() {
        for m in 0..=8u32 {
            let coeffs = chebyshev(m);
            for step in -10..=10 {
                let x = step as f64 / 10.0;
                let direct: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| c as f64 * x.powi(i as i32))
                    .sum();
                assert!((chebyshev_eval(m, x) - direct).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gadget_m_selection() {
        // pi sqrt(4)/2 = pi = 3.14... -> m = 4.
        assert_eq!(or_gadget(4).unwrap().m, 4);
        // pi sqrt(9)/2 = 4.71... -> m = 5.
        assert_eq!(or_gadget(9).unwrap().m, 5);
        // pi sqrt(16)/2 = 6.28... -> m = 7.
        assert_eq!(or_gadget(16).unwrap().m, 7);
    }

    #[test]
    fn gadget_h_identities() {
        for n in [4usize, 9, 16] {
            let g = or_gadget(n).unwrap();
            let ones = vec![1.0; n];
            assert!((g.eval_h(&ones) - 1.0).abs() < 1e-12);
            let target = (std::f64::consts::PI / g.m as f64).cos();
            for j in 0..n {
                let mut y = vec![1.0; n];
                y[j] = -1.0;
                assert!((g.eval_h(&y) - target).abs() < 1e-12);
            }
            let all_neg = vec![-1.0; n];
            let h = g.eval_h(&all_neg);
            assert!((h - (2.0 * g.alpha - 1.0)).abs() < 1e-12);
            assert!(h.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn composed_gadget_identities_and_boundedness() {
        for n in [4usize, 9, 16] {
            let g = or_gadget(n).unwrap();
            let ones = vec![1.0; n];
            assert!((g.composed(&ones) - 1.0).abs() < 1e-9);
            for j in 0..n {
                let mut y = vec![1.0; n];
                y[j] = -1.0;
                assert!((g.composed(&y) + 1.0).abs() < 1e-9);
            }
            assert!(g.max_abs_composed().unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn composed_gadget_n1_full_table() {
        // N = 1: m = ceil(pi/2) = 2, alpha = 1 - sin^2(pi/4) = 1/2,
        // h(y) = 1/2 + y/2, T_2(x) = 2x^2 - 1.
        let g = or_gadget(1).unwrap();
        assert_eq!(g.m, 2);
        let h1 = g.eval_h(&[1.0]);
        let hneg = g.eval_h(&[-1.0]);
        assert!((h1 - 1.0).abs() < 1e-12);
        assert!(hneg.abs() < 1e-12);
        assert!((g.composed(&[1.0]) - 1.0).abs() < 1e-12);
        assert!((g.composed(&[-1.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn blockify_xor4_pairs() {
        let f = poly_of_pm(&PartialFn::xor(4).unwrap()).unwrap();
        let x = Assignment::new(vec![true; 4]);
        let partition = vec![vec![0, 1], vec![2, 3]];
        let fp = blockify(&f, &x, &partition).unwrap();
        // Flipping one pair flips XOR_4 twice (no change); a pair flip is
        // insensitive, so f' is the constant f(x) ... check against direct
        // table: f'(y) = XOR evaluated after double flips = f(x) always.
        for ymask in 0..4usize {
            let y = Assignment::from_index(ymask, 2);
            assert_eq!(
                fp.eval_assignment(&y),
                f.eval_assignment(&x),
                "ymask {ymask}"
            );
        }
        // With singleton blocks on a 2-variable XOR the sensitivity survives.
        let f2 = poly_of_pm(&PartialFn::xor(2).unwrap()).unwrap();
        let x2 = Assignment::new(vec![true, true]);
        let fp2 = blockify(&f2, &x2, &[vec![0], vec![1]]).unwrap();
        assert_eq!(
            measures::real_block_sens(&fp2, &Assignment::new(vec![false, false]), &[0]).unwrap(),
            rat_int(1)
        );
    }

    #[test]
    fn blockify_single_block_two_point() {
        let f = poly_of(&PartialFn::maj(3).unwrap()).unwrap();
        let x = Assignment::new(vec![true, false, true]);
        let fp = blockify(&f, &x, &[vec![0, 1, 2]]).unwrap();
        // f'(0) = f(x), f'(1) = f(x^{[n]}).
        assert_eq!(
            fp.eval_assignment(&Assignment::new(vec![false])),
            f.eval_assignment(&x)
        );
        assert_eq!(
            fp.eval_assignment(&Assignment::new(vec![true])),
            f.eval_assignment(&x.flip_block(&[0, 1, 2]).unwrap())
        );
    }

    #[test]
    fn blockify_singletons_is_relabeling() {
        let f = poly_of(&PartialFn::maj(3).unwrap()).unwrap();
        let x = Assignment::new(vec![false; 3]);
        let fp = blockify(&f, &x, &[vec![0], vec![1], vec![2]]).unwrap();
        // With x = 0 and the 0/1 convention, selecting block j sets bit j:
        // f' is f itself.
        assert_eq!(fp.coeffs, f.coeffs);
    }

    #[test]
    fn blockify_rejects_bad_partitions() {
        let f = poly_of(&PartialFn::or(3).unwrap()).unwrap();
        let x = Assignment::new(vec![false; 3]);
        assert!(blockify(&f, &x, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(blockify(&f, &x, &[vec![0, 1]]).is_err());
    }

    #[test]
    fn blockify_degree_never_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let n = rng.gen_range(2..=5);
            let f = PartialFn::from_fn(n, |_| rng.gen()).unwrap();
            let p = poly_of(&f).unwrap();
            let x = Assignment::from_index(rng.gen_range(0..1 << n), n);
            // Random partition: assign each variable a bucket.
            let k = rng.gen_range(1..=n);
            let mut partition = vec![Vec::new(); k];
            for i in 0..n {
                partition[rng.gen_range(0..k)].push(i);
            }
            partition.retain(|b| !b.is_empty());
            let fp = blockify(&p, &x, &partition).unwrap();
            assert!(fp.degree() <= p.degree());
        }
    }

    #[test]
    fn bsdeg_chain_on_random_functions() {
        // bs(f) at its optimal packing <= s(f', 1^k) <= deg(f')^2 <= deg(f)^2.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let n = rng.gen_range(2..=5);
            let f = PartialFn::from_fn(n, |_| rng.gen()).unwrap();
            // Find a point and packing achieving bs(f).
            let mut best = (0u32, 0usize, Vec::new());
            for idx in 0..f.table_len() {
                let x = Assignment::from_index(idx, n);
                let blocks = measures::minimal_sensitive_blocks(&f, &x).unwrap();
                let packing = best_packing(&blocks);
                if packing.len() as u32 > best.0 {
                    best = (packing.len() as u32, idx, packing);
                }
            }
            let (bs, idx, packing) = best;
            if bs == 0 {
                continue;
            }
            let x = Assignment::from_index(idx, n);
            let mut partition: Vec<Vec<usize>> = packing
                .iter()
                .map(|&b| (0..n).filter(|i| b >> i & 1 == 1).collect())
                .collect();
            let used: usize = packing.iter().fold(0, |a, b| a | b);
            for i in 0..n {
                if used >> i & 1 == 0 {
                    partition.push(vec![i]);
                }
            }
            // f' as a Boolean function on k variables.
            let k = partition.len();
            let fp_table = PartialFn::from_fn(k, |y| {
                let flips: Vec<usize> = partition
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| y.bits[*j])
                    .flat_map(|(_, b)| b.iter().copied())
                    .collect();
                f.evaluate(&x.flip_block(&flips).unwrap()).unwrap().unwrap()
            })
            .unwrap();
            let s_at_origin =
                measures::sensitivity(&fp_table, &Assignment::from_index(0, k)).unwrap();
            assert!(bs <= s_at_origin);
            let deg_fp = measures::degree(&fp_table).unwrap();
            let deg_f = measures::degree(&f).unwrap();
            assert!(deg_fp <= deg_f);
            assert!(s_at_origin <= deg_fp * deg_fp || deg_fp == 0);
        }
    }

    fn best_packing(blocks: &[usize]) -> Vec<usize> {
        fn go(blocks: &[usize], from: usize, used: usize, cur: &mut Vec<usize>, best: &mut Vec<usize>) {
            if cur.len() > best.len() {
                *best = cur.clone();
            }
            for j in from..blocks.len() {
                if blocks[j] & used == 0 {
                    cur.push(blocks[j]);
                    go(blocks, j + 1, used | blocks[j], cur, best);
                    cur.pop();
                }
            }
        }
        let mut best = Vec::new();
        go(blocks, 0, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn fbsdeg_witness_examples() {
        let w = fbsdeg_witness(&PartialFn::or(2).unwrap()).unwrap();
        assert_eq!(w.d, 2);
        let zero_cert = &w.certificates[0];
        assert_eq!(zero_cert.value, rat_int(2));
        assert_eq!(zero_cert.weights, vec![rat_int(1), rat_int(1)]);

        let c = fbsdeg_witness(&PartialFn::constant(3, false).unwrap()).unwrap();
        assert!(c
            .certificates
            .iter()
            .all(|cert| cert.value == rat_int(0)));

        let x3 = fbsdeg_witness(&PartialFn::xor(3).unwrap()).unwrap();
        for cert in &x3.certificates {
            let total: BigRational = cert.weights.iter().cloned().sum();
            assert_eq!(total, rat_int(3));
        }
    }

    #[test]
    fn fbstodeg_exhaustive_n2() {
        // All 16 total functions at n = 2: fbs <= (pi^2/4) deg^2 via the
        // certified rational lower bound.
        let lb = pi_sq_over_4_lower_bound();
        for table in 0..16u32 {
            let f = PartialFn::from_fn(2, |x| table >> x.index() & 1 == 1).unwrap();
            let fbs = measures::fbs(&f).unwrap();
            let d = measures::degree(&f).unwrap();
            let bound = &lb * rat_int((d * d) as i64);
            assert!(
                fbs <= bound,
                "table {table}: fbs {fbs} > bound {bound}"
            );
            // Sanity: also the integer chain s, bs <= deg^2.
            let s = measures::max_sensitivity(&f).unwrap();
            let bs = measures::max_block_sensitivity(&f).unwrap();
            assert!(s * s <= d * d * d * d || s <= d * d);
            assert!(bs <= d * d);
        }
    }
}

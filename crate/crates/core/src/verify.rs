//! The acceptance suite: one function per verification criterion, each
//! returning experiment records with honest pass flags. Shared by the CLI's
//! `verify-all` subcommand and the integration tests.
//!
//! Nothing here hides a failure: a check that does not hold at desk scale
//! is reported with `pass: false` and the offending instance in the record.

use std::time::Instant;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boolfn::{Assignment, Cell, PartialFn, Restriction};
use crate::lp::{rat, rat_int};
use crate::report::ExperimentRecord;
use crate::{measures, polybounds, projections, switching, Result};

fn crit_rng(seed: u64, criterion: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x10_000 + criterion);
    rng
}

/// Criterion 1: every total function on 3 bits satisfies s <= deg^2,
/// bs <= deg^2, and fbs <= (pi^2/4) deg^2, checked in exact rationals
/// (against the slightly stricter rational 2467/1000 < pi^2/4).
pub fn criterion_1() -> Result<Vec<ExperimentRecord>> {
    let start = Instant::now();
    let bound = polybounds::pi_sq_over_4_lower_bound();
    let mut violations: Vec<String> = Vec::new();
    for table in 0..256u32 {
        let f = PartialFn::from_fn(3, |x| table >> x.index() & 1 == 1)?;
        let deg = measures::degree(&f)?;
        let deg2 = rat_int((deg * deg) as i64);
        let s = measures::max_sensitivity(&f)?;
        let bs = measures::max_block_sensitivity(&f)?;
        let fbs = measures::fbs(&f)?;
        if rat_int(s as i64) > deg2 {
            violations.push(format!("table {table}: s = {s} > deg^2"));
        }
        if rat_int(bs as i64) > deg2 {
            violations.push(format!("table {table}: bs = {bs} > deg^2"));
        }
        if fbs > &bound * &deg2 {
            violations.push(format!("table {table}: fbs = {fbs} > (pi^2/4) deg^2"));
        }
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && elapsed.as_secs() < 60;
    let mut rec = ExperimentRecord::new("crit01_exhaustive_n3_inequalities")
        .param("n", 3)
        .param("functions", 256)
        .param("violations", violations)
        .paper_bound("s <= deg^2, bs <= deg^2, fbs <= (pi^2/4) deg^2")
        .pass(pass);
    rec.wall_time = Some(elapsed);
    Ok(vec![rec])
}

fn random_partial(n: usize, domain_prob: f64, rng: &mut ChaCha8Rng) -> Result<PartialFn> {
    loop {
        let f = PartialFn::from_partial_fn(n, |_| {
            if rng.gen_bool(domain_prob) {
                Some(rng.gen())
            } else {
                None
            }
        })?;
        if f.domain_indices().next().is_some() {
            return Ok(f);
        }
    }
}

/// Independent decision-tree depth oracle: plain recursion over
/// (queried-mask, answers), no memoization, no canonical-query sharing.
fn oracle_dt(f: &PartialFn, mask: usize, vals: usize) -> u32 {
    let mut seen: Option<bool> = None;
    let mut constant = true;
    for idx in f.domain_indices() {
        if idx & mask != vals {
            continue;
        }
        let v = f.value_at(idx).unwrap();
        match seen {
            None => seen = Some(v),
            Some(w) if w != v => {
                constant = false;
                break;
            }
            _ => {}
        }
    }
    if constant {
        return 0;
    }
    (0..f.n())
        .filter(|i| mask >> i & 1 == 0)
        .map(|i| {
            let m = mask | 1 << i;
            1 + oracle_dt(f, m, vals).max(oracle_dt(f, m, vals | 1 << i))
        })
        .min()
        .unwrap()
}

/// Criterion 2: LP duality FC = fbs on 500 random partial functions,
/// C(OR_n at 0^n) = n, adeg(OR_2) = 1, and dt_depth against the oracle.
pub fn criterion_2(seed: u64) -> Result<Vec<ExperimentRecord>> {
    let mut rng = crit_rng(seed, 2);
    let mut violations: Vec<String> = Vec::new();
    for inst in 0..500 {
        let n = rng.gen_range(2..=6);
        let f = random_partial(n, 0.75, &mut rng)?;
        let indices: Vec<usize> = f.domain_indices().collect();
        let xi = indices[rng.gen_range(0..indices.len())];
        let x = Assignment::from_index(xi, n);
        let fc = measures::frac_cert(&f, &x)?.value;
        let fbs = measures::frac_block_sens(&f, &x)?;
        if fc != fbs {
            violations.push(format!("instance {inst}: FC = {fc} != fbs = {fbs}"));
        }
    }
    for n in 1..=8usize {
        let or = PartialFn::or(n)?;
        let c = measures::cert_complexity(&or, &Assignment::new(vec![false; n]))?;
        if c as usize != n {
            violations.push(format!("C(OR_{n} at 0^n) = {c}"));
        }
    }
    let (adeg, _) = measures::approx_degree(&PartialFn::or(2)?, &measures::default_eps())?;
    if adeg != 1 {
        violations.push(format!("adeg(OR_2) = {adeg}"));
    }
    for inst in 0..100 {
        let n = rng.gen_range(1..=4);
        let f = random_partial(n, 0.8, &mut rng)?;
        let lib = measures::dt_depth(&f)?;
        let orc = oracle_dt(&f, 0, 0);
        if lib != orc {
            violations.push(format!("dt instance {inst}: {lib} vs oracle {orc}"));
        }
    }
    Ok(vec![ExperimentRecord::new("crit02_measure_oracles")
        .seed(seed)
        .param("lp_duality_instances", 500)
        .param("dt_oracle_instances", 100)
        .param("violations", violations.clone())
        .paper_bound("FC(f,x) = fbs(f,x) by LP strong duality")
        .pass(violations.is_empty())])
}

/// Criterion 3: Chebyshev-over-OR-gadget identities at N in {4, 9, 16}.
pub fn criterion_3() -> Result<Vec<ExperimentRecord>> {
    let tol = 1e-9;
    let mut out = Vec::new();
    for n in [4usize, 9, 16] {
        let g = polybounds::or_gadget(n)?;
        let mut violations: Vec<String> = Vec::new();
        let top = g.composed(&vec![1.0; n]);
        if (top - 1.0).abs() > tol {
            violations.push(format!("T_m(h(1^N)) = {top}"));
        }
        for j in 0..n {
            let mut y = vec![1.0; n];
            y[j] = -1.0;
            let v = g.composed(&y);
            if (v + 1.0).abs() > tol {
                violations.push(format!("T_m(h(flip {j})) = {v}"));
            }
        }
        let max = g.max_abs_composed()?;
        if max > 1.0 + tol {
            violations.push(format!("max |T_m(h)| = {max}"));
        }
        out.push(
            ExperimentRecord::new("crit03_gadget_identities")
                .param("N", n as u64)
                .param("m", g.m)
                .param("alpha", g.alpha)
                .param("violations", violations.clone())
                .paper_bound("T_m(h(1^N)) = 1, T_m(h((1^N)^j)) = -1, |T_m(h)| <= 1")
                .pass(violations.is_empty()),
        );
    }
    Ok(out)
}

/// Criterion 4: Monte Carlo switching failure within 3 standard errors of
/// the exact value on 20 seeded instances, and exact failure nonincreasing
/// in the depth budget d.
pub fn criterion_4(seed: u64, jobs: usize) -> Result<Vec<ExperimentRecord>> {
    let mut rng = crit_rng(seed, 4);
    let trials = 100_000u64;
    let mut violations: Vec<String> = Vec::new();
    for inst in 0..20u64 {
        let n = rng.gen_range(3..=6);
        let f = PartialFn::from_fn(n, |_| rng.gen())?;
        let x = Assignment::from_index(rng.gen_range(0..1usize << n), n);
        let y = Assignment::from_index(rng.gen_range(0..1usize << n), n);
        let p_num = rng.gen_range(1..=4i64);
        let p = rat(p_num, 8);
        let d = rng.gen_range(0..=3u32);
        let exact = switching::switch_fail_exact(&f, &x, &y, &p, d)?;
        let (mc, se) = switching::switch_fail_mc(
            &f,
            &x,
            &y,
            p_num as f64 / 8.0,
            d,
            trials,
            seed.wrapping_add(400 + inst),
            jobs,
        )?;
        let exact_f = exact.to_f64().unwrap();
        if (mc - exact_f).abs() > 3.0 * se.max(1e-12) {
            violations.push(format!(
                "instance {inst}: mc = {mc} vs exact = {exact_f}, se = {se}"
            ));
        }
        let mut prev = BigRational::from_integer(2.into());
        for dd in 0..=n as u32 {
            let v = switching::switch_fail_exact(&f, &x, &y, &p, dd)?;
            if v > prev {
                violations.push(format!("instance {inst}: failure rose at d = {dd}"));
            }
            prev = v;
        }
    }
    Ok(vec![ExperimentRecord::new("crit04_switch_exact_vs_mc")
        .seed(seed)
        .trials(trials)
        .param("instances", 20)
        .param("violations", violations.clone())
        .paper_bound("MC within 3 se of exact; exact nonincreasing in d")
        .pass(violations.is_empty())])
}

/// Criterion 5: on restricted functions with C(f_rho) <= k^2, the
/// certificate-built tree computes f_rho exactly on its domain, within
/// depth k^4 and with distinct queries per path.
pub fn criterion_5(seed: u64) -> Result<Vec<ExperimentRecord>> {
    let mut rng = crit_rng(seed, 5);
    let k = 2u32;
    let mut violations: Vec<String> = Vec::new();
    let mut accepted = 0u32;
    let mut attempts = 0u32;
    while accepted < 200 && attempts < 20_000 {
        attempts += 1;
        let n = rng.gen_range(3..=5);
        let f = random_partial(n, 0.85, &mut rng)?;
        let rho = Restriction::new(
            (0..n)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Cell::Zero,
                    1 => Cell::One,
                    _ => Cell::Star,
                })
                .collect(),
        );
        if rho.free_indices().is_empty() {
            continue;
        }
        let fr = f.restrict(&rho)?;
        let (c, _, _) = measures::cert_complexity_all(&fr)?;
        if c > k * k {
            continue;
        }
        accepted += 1;
        let tree = switching::cert_dt(&f, &rho, k)?;
        if tree.depth() > k.pow(4) {
            violations.push(format!("attempt {attempts}: depth {} > k^4", tree.depth()));
        }
        if !tree.queries_distinct() {
            violations.push(format!("attempt {attempts}: repeated query on a path"));
        }
        for idx in fr.domain_indices() {
            let y = Assignment::from_index(idx, fr.n());
            if tree.eval(&y) != fr.value_at(idx).unwrap() {
                violations.push(format!("attempt {attempts}: wrong at {idx}"));
                break;
            }
        }
    }
    let pass = violations.is_empty() && accepted == 200;
    Ok(vec![ExperimentRecord::new("crit05_cert_tree_soundness")
        .seed(seed)
        .param("instances", accepted)
        .param("k", k)
        .param("violations", violations)
        .paper_bound("tree computes f_rho; depth <= k^4")
        .pass(pass)])
}

/// Criterion 6: initial-restriction completion TV distance exactly 0 on 25
/// valid triples, and the two-stage chain enumeration exactly matches the
/// biased product.
pub fn criterion_6() -> Result<Vec<ExperimentRecord>> {
    let mut violations: Vec<String> = Vec::new();
    // Valid triples satisfy x + q' t = 2^{-w}; enumerate (w, q', t) and
    // derive x, keeping the first 25 in range.
    let mut triples = Vec::new();
    'outer: for w in 1u32..=3 {
        let target = rat(1, 1 << w);
        for (qn, qd) in [(1i64, 2i64), (1, 3), (1, 4), (2, 5), (1, 8)] {
            for (tn, td) in [(1i64, 5i64), (1, 4), (1, 8), (1, 10)] {
                let qprime = rat(qn, qd);
                let t = rat(tn, td);
                let x = &target - &qprime * &t;
                if x < rat_int(0) || &x + &qprime > rat_int(1) {
                    continue;
                }
                triples.push((w, x, qprime, t));
                if triples.len() == 25 {
                    break 'outer;
                }
            }
        }
    }
    let count = triples.len();
    for (w, x, qprime, t) in triples {
        let tv = projections::completion_check_init(w, &x, &qprime, &t)?;
        if tv != rat_int(0) {
            violations.push(format!("w = {w}, x = {x}, q' = {qprime}, t = {t}: TV = {tv}"));
        }
    }
    for (sa, sb, lam, t3, t2, t1) in [
        (2usize, 2usize, rat(1, 8), rat(1, 2), rat(1, 2), rat(1, 2)),
        (2, 3, rat(1, 16), rat(1, 3), rat(2, 3), rat(1, 2)),
    ] {
        let tv = projections::chain2_completion_check(sa, sb, &lam, &t3, &t2, &t1)?;
        if tv != rat_int(0) {
            violations.push(format!("chain ({sa},{sb}): TV = {tv}"));
        }
    }
    let pass = violations.is_empty() && count == 25;
    Ok(vec![ExperimentRecord::new("crit06_completion_exactness")
        .param("init_triples", count as u64)
        .param("chain_cases", 2)
        .param("violations", violations)
        .paper_bound("TV distance exactly 0")
        .pass(pass)])
}

/// Criterion 7: the OR-vs-CNF correlation inequality
/// disagreement >= bias - r p on 200 exactly-computed instances.
pub fn criterion_7(seed: u64) -> Result<Vec<ExperimentRecord>> {
    let mut rng = crit_rng(seed, 7);
    let mut violations: Vec<String> = Vec::new();
    for inst in 0..200 {
        let n = rng.gen_range(2..=8);
        let tau = Restriction::new(
            (0..n)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Cell::Zero,
                    1 => Cell::One,
                    _ => Cell::Star,
                })
                .collect(),
        );
        let r = rng.gen_range(1..=3usize).min(n);
        let clauses = (0..rng.gen_range(1..=4))
            .map(|_| {
                let mut idx: Vec<usize> = (0..n).collect();
                for i in (1..idx.len()).rev() {
                    idx.swap(i, rng.gen_range(0..=i));
                }
                idx.truncate(r);
                idx.into_iter().map(|i| (i, rng.gen())).collect()
            })
            .collect();
        let cnf = projections::Cnf { n, clauses };
        let p = rat(rng.gen_range(0..=8), 8);
        let (dis, bias, rp) = projections::or_cnf_gap(&tau, &cnf, &p)?;
        if dis < &bias - &rp {
            violations.push(format!("instance {inst}: {dis} < {bias} - {rp}"));
        }
    }
    Ok(vec![ExperimentRecord::new("crit07_or_cnf_gap")
        .seed(seed)
        .param("instances", 200)
        .param("violations", violations.clone())
        .paper_bound("disagreement >= bias - r p")
        .pass(violations.is_empty())])
}

/// Criterion 8: the parameter calculus at (m, d) in
/// {(4,2), (6,2), (6,3), (8,2)}: defining recurrences, w_0 minimality,
/// the p_1 identity, the window exponents, and the q_{i,a} interval at the
/// integer window edges. The interval check is asymptotic in the source
/// material; where a finite instance violates it the record says so.
pub fn criterion_8() -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    for (m, d) in [(4u32, 2u32), (6, 2), (6, 3), (8, 2)] {
        let mut violations: Vec<String> = Vec::new();
        let sip = projections::sip_params(m, d)?;
        if (sip.t[(d - 1) as usize] - (sip.p - sip.lambda) / sip.q).abs() > 1e-12 {
            violations.push("t_{d-1} base case".into());
        }
        for k in 2..=d - 1 {
            let lhs = sip.t[(k - 1) as usize];
            let rhs =
                ((1.0 - sip.t[k as usize]).powf(sip.q * sip.w as f64) - sip.lambda) / sip.q;
            if (lhs - rhs).abs() > 1e-12 {
                violations.push(format!("t recurrence at k = {k}"));
            }
        }
        let hold = (1.0 - sip.t[1]).powf(sip.q * sip.w0 as f64);
        let below = (1.0 - sip.t[1]).powf(sip.q * (sip.w0 - 1) as f64);
        if !(hold <= 0.5 && below > 0.5) {
            violations.push("w_0 minimality".into());
        }
        let prime = projections::sipprime_params(m, d)?;
        let td1 = (prime.base.p - prime.base.lambda) / prime.base.q;
        if (prime.p1 - (prime.x + prime.qprime * td1)).abs() > 1e-14 * prime.p1 {
            violations.push("p_1 identity".into());
        }
        let qc = projections::qcma_params(m, d)?;
        for k in 1..=2 * d + 1 {
            let b = projections::beta_qcma(k, d);
            if !(b < 5.0 / 12.0) {
                violations.push(format!("beta({k}) = {b} >= 5/12"));
            }
        }
        let mut qia_notes: Vec<String> = Vec::new();
        for i in 1..d {
            let center = qc.q * qc.f_i[i as usize];
            let half = (qc.w as f64).powf(projections::beta_qcma(2 * i + 2, d));
            let (lo, hi) = projections::integer_window(center, half);
            let checks = projections::qia_bound_check(&qc, i, &[lo, hi])?;
            for c in checks {
                if !c.vacuous && !c.inside {
                    violations.push(format!(
                        "q_(i,a) interval at i = {i}, |S_a| = {}: ratio {:.4} vs 1 +- {:.4}",
                        c.size, c.ratio, c.delta
                    ));
                } else if !c.vacuous {
                    qia_notes.push(format!("i = {i}, |S_a| = {}: inside", c.size));
                }
            }
        }
        out.push(
            ExperimentRecord::new("crit08_parameter_calculus")
                .param("m", m)
                .param("d", d)
                .param("w", sip.w)
                .param("w0", sip.w0)
                .param("qia_checks", qia_notes)
                .param("violations", violations.clone())
                .paper_bound("defining recurrences and windows, q_(i,a) in q_i(1 +- 2 t w^beta)")
                .pass(violations.is_empty()),
        );
    }
    Ok(out)
}

/// Criterion 9: the asymptotic theorems are out of reach at desk scale and
/// are replaced by the property suites plus two qualitative monotonicity
/// checks, each asserted at 3 sigma.
pub fn criterion_9(seed: u64, jobs: usize) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    out.push(
        ExperimentRecord::new("crit09_not_reproducible_statement")
            .param(
                "claims",
                vec![
                    "oracle separation theorems (asymptotic, no finite instance)",
                    "1/2 - 1/N^Omega(1/d) correlation lower bound (hidden constants)",
                    "exp(-d^(1/5)) switching constant (no finite-N constant given)",
                ],
            )
            .param(
                "replacement",
                "property suites of criteria 1-8 plus 3-sigma monotonicity checks",
            )
            .pass(true),
    );

    // Typicality failure rate strictly decreasing in block count.
    let trials = 100_000u64;
    let mut violations: Vec<String> = Vec::new();
    let mut rates = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for b in [64u64, 256, 1024] {
        let (est, se) =
            projections::typicality_rate_mc(b, 0.25, trials, seed.wrapping_add(900), jobs)?;
        rates.push(est);
        if let Some((pe, pse)) = prev {
            let gap_se = (se * se + pse * pse).sqrt();
            if pe - est <= 3.0 * gap_se {
                violations.push(format!("rate at B = {b}: {est} not below {pe} at 3 sigma"));
            }
        }
        prev = Some((est, se));
    }
    out.push(
        ExperimentRecord::new("crit09_typicality_rate_decreasing")
            .seed(seed)
            .trials(trials)
            .param("block_sizes", vec![64, 256, 1024])
            .param("star_prob", 0.25)
            .param("rates", rates)
            .param("violations", violations.clone())
            .paper_bound("window miss probability decreasing in block count (Chernoff)")
            .pass(violations.is_empty()),
    );

    // MC switching failure decreasing in d on a parity instance where the
    // exact values are known to fall.
    let f = PartialFn::xor(6)?;
    let x = Assignment::new(vec![false; 6]);
    let y = Assignment::new(vec![true; 6]);
    let mut violations: Vec<String> = Vec::new();
    let (mc1, se1) =
        switching::switch_fail_mc(&f, &x, &y, 0.5, 1, trials, seed.wrapping_add(901), jobs)?;
    let (mc3, se3) =
        switching::switch_fail_mc(&f, &x, &y, 0.5, 3, trials, seed.wrapping_add(901), jobs)?;
    let gap_se = (se1 * se1 + se3 * se3).sqrt();
    if mc1 - mc3 <= 3.0 * gap_se {
        violations.push(format!("mc(d=1) = {mc1} not above mc(d=3) = {mc3} at 3 sigma"));
    }
    let e1 = switching::switch_fail_exact(&f, &x, &y, &rat(1, 2), 1)?;
    let e3 = switching::switch_fail_exact(&f, &x, &y, &rat(1, 2), 3)?;
    if e1 <= e3 {
        violations.push("exact values not decreasing".into());
    }
    out.push(
        ExperimentRecord::new("crit09_switch_failure_decreasing_in_d")
            .seed(seed)
            .trials(trials)
            .param("f", "XOR_6")
            .param("p", "1/2")
            .param("mc_d1", mc1)
            .param("mc_d3", mc3)
            .param("exact_d1", e1.to_string())
            .param("exact_d3", e3.to_string())
            .param("violations", violations.clone())
            .paper_bound("failure probability decreasing in depth budget")
            .pass(violations.is_empty()),
    );
    Ok(out)
}

/// Run criteria 1 through 9 and return all records in criterion order.
/// (Criterion 10, byte-level reproducibility of this very output, is
/// checked externally by running the CLI twice.)
pub fn verify_all(seed: u64, jobs: usize) -> Result<Vec<ExperimentRecord>> {
    let mut out = Vec::new();
    out.extend(criterion_1()?);
    out.extend(criterion_2(seed)?);
    out.extend(criterion_3()?);
    out.extend(criterion_4(seed, jobs)?);
    out.extend(criterion_5(seed)?);
    out.extend(criterion_6()?);
    out.extend(criterion_7(seed)?);
    out.extend(criterion_8()?);
    out.extend(criterion_9(seed, jobs)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_dt_known_values() {
        assert_eq!(oracle_dt(&PartialFn::or(3).unwrap(), 0, 0), 3);
        assert_eq!(oracle_dt(&PartialFn::xor(4).unwrap(), 0, 0), 4);
        assert_eq!(oracle_dt(&PartialFn::constant(3, true).unwrap(), 0, 0), 0);
    }

    #[test]
    fn verify_records_are_deterministic() {
        let a = criterion_7(7).unwrap();
        let b = criterion_7(7).unwrap();
        assert_eq!(
            crate::report::emit_jsonl(&a),
            crate::report::emit_jsonl(&b)
        );
    }
}

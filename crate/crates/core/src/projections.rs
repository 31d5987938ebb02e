//! Read-once formula family, projection parameter calculus, block-random
//! restriction distributions, completion and typicality checks, and the
//! OR-vs-CNF correlation gap.
//!
//! Parameter conventions fixed here (the defining formulas leave them open):
//! the lambda offset uses the base-10 logarithm of w, the deep parameter
//! chain works in the log2 domain (`LogNum`) because N_i overflows doubles,
//! the t recurrence falls back to its nominal value q whenever an iterate
//! leaves the window q +- q^1.1 (the raw iterates are kept alongside), and
//! window-edge set sizes are integers (the nearest integers inside the real
//! window).

use std::collections::HashMap;

use crate::boolfn::{Assignment, BlockRestriction, Cell, Gate, PartialFn};
use crate::seeds;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Positive real carried as its base-2 logarithm; the deep parameter chain
/// produces quantities like 2^1400 that no double can hold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogNum {
    pub log2: f64,
}

impl LogNum {
    pub fn from_f64(v: f64) -> LogNum {
        LogNum { log2: v.log2() }
    }

    pub fn to_f64(self) -> f64 {
        2f64.powf(self.log2)
    }

    pub fn mul(self, other: LogNum) -> LogNum {
        LogNum {
            log2: self.log2 + other.log2,
        }
    }

    pub fn div(self, other: LogNum) -> LogNum {
        LogNum {
            log2: self.log2 - other.log2,
        }
    }

    pub fn powf(self, e: f64) -> LogNum {
        LogNum {
            log2: self.log2 * e,
        }
    }

    /// log-sum-exp addition.
    pub fn add(self, other: LogNum) -> LogNum {
        let (hi, lo) = if self.log2 >= other.log2 {
            (self.log2, other.log2)
        } else {
            (other.log2, self.log2)
        };
        LogNum {
            log2: hi + (1.0 + 2f64.powf(lo - hi)).log2(),
        }
    }

    /// self - other; error when the difference is nonpositive.
    pub fn sub(self, other: LogNum) -> Result<LogNum> {
        if other.log2 >= self.log2 {
            return Err(Error::Parameter(format!(
                "log-domain subtraction underflow: 2^{} - 2^{}",
                self.log2, other.log2
            )));
        }
        let rest = 1.0 - 2f64.powf(other.log2 - self.log2);
        Ok(LogNum {
            log2: self.log2 + rest.log2(),
        })
    }
}

/// The shallow-family window exponent beta(k, d) = 1/3 + (d-k-1)/(12d).
pub fn beta_sip(k: u32, d: u32) -> f64 {
    1.0 / 3.0 + (d as f64 - k as f64 - 1.0) / (12.0 * d as f64)
}

/// The deep-family window exponent beta(k, 2d+2) = 1/3 + (2d-k+1)/(24(d+1)),
/// below 5/12 throughout 1 <= k <= 2d+1.
pub fn beta_qcma(k: u32, d: u32) -> f64 {
    1.0 / 3.0 + (2.0 * d as f64 - k as f64 + 1.0) / (24.0 * (d as f64 + 1.0))
}

/// Parameters of the depth-d alternating formula family seeded by m.
#[derive(Clone, Debug)]
pub struct SipParams {
    pub m: u32,
    pub d: u32,
    pub w: u64,
    pub w0: u64,
    pub q: f64,
    pub p: f64,
    pub lambda: f64,
    /// t[k] for 1 <= k <= d-1; index 0 is unused.
    pub t: Vec<f64>,
    /// Total input count w0 * w^{d-2} * m.
    pub n: u64,
}

fn lambda_of(w: u64) -> f64 {
    let lw = (w as f64).log10();
    lw.powf(1.5) / (w as f64).powf(1.25)
}

fn w_of(m: u32) -> u64 {
    // floor(m 2^m / log2(e)) = floor(m 2^m ln 2).
    (m as f64 * 2f64.powi(m as i32) * std::f64::consts::LN_2).floor() as u64
}

/// Smallest i >= 1 with (1-t1)^{qi} <= 1/2, verified on both sides.
fn min_halving_fanin(q: f64, t1: f64) -> Result<u64> {
    if !(0.0 < t1 && t1 < 1.0) {
        return Err(Error::Parameter(format!("t1 = {t1} outside (0,1)")));
    }
    let mut i = ((0.5f64).ln() / (q * (1.0 - t1).ln())).ceil() as u64;
    i = i.max(1);
    while (1.0 - t1).powf(q * i as f64) > 0.5 {
        i += 1;
    }
    while i > 1 && (1.0 - t1).powf(q * (i - 1) as f64) <= 0.5 {
        i -= 1;
    }
    Ok(i)
}

pub fn sip_params(m: u32, d: u32) -> Result<SipParams> {
    if m < 2 || d < 2 {
        return Err(Error::Parameter("need m >= 2 and d >= 2".into()));
    }
    let w = w_of(m);
    let q = 2f64.powf(-(m as f64) / 2.0);
    let p = q * q;
    let lambda = lambda_of(w);
    if lambda >= p {
        return Err(Error::Parameter(format!(
            "lambda = {lambda} >= p = {p} at m = {m}"
        )));
    }
    let mut t = vec![f64::NAN; d as usize];
    t[(d - 1) as usize] = (p - lambda) / q;
    for k in (2..=d - 1).rev() {
        let next = t[k as usize];
        let v = ((1.0 - next).powf(q * w as f64) - lambda) / q;
        if !(0.0 < v && v < 1.0) {
            return Err(Error::Parameter(format!(
                "t_{} = {v} outside (0,1) at (m,d) = ({m},{d})",
                k - 1
            )));
        }
        t[(k - 1) as usize] = v;
    }
    let w0 = min_halving_fanin(q, t[1])?;
    let n = w0
        .checked_mul(w.checked_pow(d - 2).ok_or_else(too_big)?)
        .and_then(|v| v.checked_mul(m as u64))
        .ok_or_else(too_big)?;
    Ok(SipParams {
        m,
        d,
        w,
        w0,
        q,
        p,
        lambda,
        t,
        n,
    })
}

fn too_big() -> Error {
    Error::Parameter("fan-in product overflows".into())
}

/// The modified family with rebuilt bottom two fan-ins. N solves the fixed
/// point N^{2/7} = q * w * prefix * log2(1/p1) where prefix is the product
/// of the untouched upper fan-ins.
#[derive(Clone, Debug)]
pub struct SipPrimeParams {
    pub base: SipParams,
    /// Total variable count of the modified family (real-valued fixed point).
    pub n_vars: f64,
    pub w_dm2: f64,
    pub qprime: f64,
    pub x: f64,
    pub p1: f64,
    pub w_dm1: f64,
}

pub fn sipprime_params(m: u32, d: u32) -> Result<SipPrimeParams> {
    let base = sip_params(m, d)?;
    let prefix = if d >= 3 {
        base.w0 as f64 * (base.w as f64).powi(d as i32 - 3)
    } else {
        1.0
    };
    let td1 = (base.p - base.lambda) / base.q;
    let mut n_vars = (base.q * base.w as f64 * prefix * 10.0).powf(3.5);
    let mut out = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..200 {
        let qprime = n_vars.powf(-5.0 / 7.0);
        let w_dm2 = base.q * base.w as f64 * n_vars.powf(5.0 / 7.0);
        let x = 1.0 / (w_dm2 * (base.w as f64).powf(0.25));
        let p1 = x + qprime * td1;
        if !(0.0 < p1 && p1 < 1.0) {
            return Err(Error::Parameter(format!("p1 = {p1} outside (0,1)")));
        }
        let w_dm1 = -p1.log2();
        let next = (base.q * base.w as f64 * prefix * w_dm1).powf(3.5);
        out = (w_dm2, qprime, x, p1);
        if (next - n_vars).abs() <= 1e-9 * n_vars {
            n_vars = next;
            break;
        }
        n_vars = next;
    }
    let (w_dm2, qprime, x, p1) = out;
    Ok(SipPrimeParams {
        base,
        n_vars,
        w_dm2,
        qprime,
        x,
        p1,
        w_dm1: -p1.log2(),
    })
}

/// Parameters of the depth-(2d+2) family behind the deep hierarchy, carried
/// in the log2 domain where they overflow doubles.
#[derive(Clone, Debug)]
pub struct QcmaParams {
    pub m: u32,
    pub d: u32,
    pub w: u64,
    pub w0: u64,
    pub q: f64,
    pub p: f64,
    pub lambda: f64,
    /// Effective t[k] for 1 <= k <= 2d+1 (index 0 unused), after the window
    /// fallback to q.
    pub t: Vec<f64>,
    /// Raw recurrence iterates before the fallback.
    pub t_raw: Vec<f64>,
    /// Which indices fell back.
    pub t_fallback: Vec<bool>,
    /// n_i[i] for 1 <= i <= d (index 0 unused).
    pub n_i: Vec<LogNum>,
    pub q_i: Vec<LogNum>,
    pub lambda_i: Vec<LogNum>,
    /// f_i[i] for 1 <= i <= d; f_i[d] is the bottom fan-in variant
    /// -log2(lambda_d + q_d t_{2d+1}).
    pub f_i: Vec<f64>,
}

pub fn qcma_params(m: u32, d: u32) -> Result<QcmaParams> {
    if m < 2 || d < 1 {
        return Err(Error::Parameter("need m >= 2 and d >= 1".into()));
    }
    let w = w_of(m);
    let q = 2f64.powf(-(m as f64) / 2.0);
    let p = q * q;
    let lambda = lambda_of(w);
    if lambda >= p {
        return Err(Error::Parameter(format!(
            "lambda = {lambda} >= p = {p} at m = {m}"
        )));
    }
    let kmax = (2 * d + 1) as usize;
    let window = (q - q.powf(1.1), q + q.powf(1.1));
    let mut t = vec![f64::NAN; kmax + 1];
    let mut t_raw = vec![f64::NAN; kmax + 1];
    let mut t_fallback = vec![false; kmax + 1];
    let mut raw = (p - lambda) / q;
    for k in (1..=kmax).rev() {
        t_raw[k] = raw;
        if raw < window.0 || raw > window.1 {
            t[k] = q;
            t_fallback[k] = true;
        } else {
            t[k] = raw;
        }
        raw = ((1.0 - t[k]).powf(q * w as f64) - lambda) / q;
    }
    let w0 = min_halving_fanin(q, t[1])?;

    let base = LogNum::from_f64(w0 as f64 * q * (w as f64).powi(3)); // w0 q w^3
    let qw2 = LogNum::from_f64(q * (w as f64) * (w as f64)); // q w^2
    let qw = LogNum::from_f64(q * w as f64);
    let mut n_i = vec![LogNum { log2: f64::NAN }; d as usize + 1];
    for i in 1..=d {
        let e = 3.5f64.powi(i as i32);
        let mut v = base.powf(e);
        if i >= 2 {
            v = v.mul(qw2.powf(1.4 * (3.5f64.powi(i as i32 - 1) - 1.0)));
        }
        if i == d {
            v = v.mul(qw.powf(3.5));
        }
        n_i[i as usize] = v;
    }
    let q_i: Vec<LogNum> = n_i.iter().map(|n| n.powf(-5.0 / 7.0)).collect();
    let qw54 = LogNum::from_f64(q * (w as f64).powf(1.25));
    let lambda_i: Vec<LogNum> = q_i.iter().map(|qi| qi.div(qw54)).collect();

    let mut f_i = vec![f64::NAN; d as usize + 1];
    for i in 1..=d as usize {
        let inner = lambda_i[i].add(q_i[i].mul(LogNum::from_f64(t[2 * i + 1])));
        if i < d as usize {
            let num = std::f64::consts::LN_2 * inner.log2;
            let den = q * (1.0 - t[2 * i + 2]).ln();
            f_i[i] = num / den;
        } else {
            f_i[i] = -inner.log2;
        }
        if !(f_i[i].is_finite() && f_i[i] > 0.0) {
            return Err(Error::Parameter(format!("f_{i} = {} not positive", f_i[i])));
        }
    }
    Ok(QcmaParams {
        m,
        d,
        w,
        w0,
        q,
        p,
        lambda,
        t,
        t_raw,
        t_fallback,
        n_i,
        q_i,
        lambda_i,
        f_i,
    })
}

/// One interval check of the q_{i,a} estimate.
#[derive(Clone, Debug)]
pub struct QiaCheck {
    pub size: i64,
    /// Size outside the precondition window: nothing to assert.
    pub vacuous: bool,
    /// q_{i,a} / q_i.
    pub ratio: f64,
    /// Allowed relative deviation 2 t_{2i+2} w^beta.
    pub delta: f64,
    pub inside: bool,
}

/// The integer edges of the window center +- half, (ceil, floor).
pub fn integer_window(center: f64, half: f64) -> (i64, i64) {
    ((center - half).ceil() as i64, (center + half).floor() as i64)
}

/// Check q_{i,a} = ((1-t_{2i+2})^{|S_a|} - lambda_i)/t_{2i+1} against the
/// interval q_i (1 +- 2 t_{2i+2} w^{beta(2i+2, 2d+2)}) at given set sizes.
pub fn qia_bound_check(params: &QcmaParams, i: u32, sizes: &[i64]) -> Result<Vec<QiaCheck>> {
    if i == 0 || i >= params.d {
        return Err(Error::Parameter(format!(
            "stage i = {i} outside 1..={}",
            params.d - 1
        )));
    }
    let i = i as usize;
    let t_hi = params.t[2 * i + 2];
    let t_lo = params.t[2 * i + 1];
    let beta = beta_qcma((2 * i + 2) as u32, params.d);
    let half = (params.w as f64).powf(beta);
    let center = params.q * params.f_i[i];
    let (lo, hi) = integer_window(center, half);
    let delta = 2.0 * t_hi * half;
    let mut out = Vec::with_capacity(sizes.len());
    for &s in sizes {
        if s < lo || s > hi {
            out.push(QiaCheck {
                size: s,
                vacuous: true,
                ratio: f64::NAN,
                delta,
                inside: false,
            });
            continue;
        }
        let pow = LogNum {
            log2: s as f64 * (1.0 - t_hi).log2(),
        };
        let qia = pow
            .sub(params.lambda_i[i])?
            .div(LogNum::from_f64(t_lo));
        let ratio = 2f64.powf(qia.log2 - params.q_i[i].log2);
        let inside = ratio <= 1.0 + delta && (delta >= 1.0 || ratio >= 1.0 - delta);
        out.push(QiaCheck {
            size: s,
            vacuous: false,
            ratio,
            delta,
            inside,
        });
    }
    Ok(out)
}

/// Read-once alternating formula: fan-ins from the root down, fixed bottom
/// gate, gates alternating upward.
#[derive(Clone, Debug, PartialEq)]
pub struct SipFormula {
    pub fanins: Vec<usize>,
    pub bottom: Gate,
}

pub const SIP_INPUT_CAP: usize = 1 << 20;

pub fn build_sip(fanins: &[usize], bottom: Gate) -> Result<SipFormula> {
    if fanins.is_empty() || fanins.iter().any(|&w| w == 0) {
        return Err(Error::Parameter("fan-ins must be nonempty positive".into()));
    }
    let mut total = 1usize;
    for &w in fanins {
        total = total.checked_mul(w).unwrap_or(usize::MAX);
        if total > SIP_INPUT_CAP {
            return Err(Error::SizeCap {
                what: "formula input count",
                got: total,
                cap: SIP_INPUT_CAP,
            });
        }
    }
    Ok(SipFormula {
        fanins: fanins.to_vec(),
        bottom,
    })
}

impl SipFormula {
    pub fn depth(&self) -> usize {
        self.fanins.len()
    }

    pub fn input_count(&self) -> usize {
        self.fanins.iter().product()
    }

    /// Gate kind at depth k (root is depth 0, bottom is depth d-1).
    pub fn gate_at(&self, k: usize) -> Gate {
        if (self.depth() - 1 - k) % 2 == 0 {
            self.bottom
        } else {
            self.bottom.flip()
        }
    }

    /// Exact {0,1,*} evaluation under a partial assignment of the inputs.
    pub fn eval_cells(&self, input: &[Cell]) -> Result<Cell> {
        if input.len() != self.input_count() {
            return Err(Error::ArityMismatch {
                expected: self.input_count(),
                got: input.len(),
            });
        }
        Ok(self.eval_rec(input, 0))
    }

    fn eval_rec(&self, cells: &[Cell], depth: usize) -> Cell {
        if depth == self.depth() {
            return cells[0];
        }
        let gate = self.gate_at(depth);
        let fanin = self.fanins[depth];
        let sub = cells.len() / fanin;
        let child_cells: Vec<Cell> = (0..fanin)
            .map(|i| self.eval_rec(&cells[i * sub..(i + 1) * sub], depth + 1))
            .collect();
        crate::boolfn::lift_block(&child_cells, gate)
    }

    pub fn eval(&self, x: &Assignment) -> Result<bool> {
        let cells: Vec<Cell> = x.bits.iter().map(|&b| Cell::from_bit(b)).collect();
        match self.eval_cells(&cells)? {
            Cell::One => Ok(true),
            Cell::Zero => Ok(false),
            Cell::Star => unreachable!("total assignment cannot leave a gate open"),
        }
    }

    pub fn to_partial_fn(&self) -> Result<PartialFn> {
        PartialFn::from_fn(self.input_count(), |x| self.eval(x).unwrap())
    }

    /// Text form: `d=`, `fanins=`, `bottom=`.
    pub fn to_spec_format(&self) -> String {
        let fanins: Vec<String> = self.fanins.iter().map(|w| w.to_string()).collect();
        format!(
            "d={}\nfanins={}\nbottom={}\n",
            self.depth(),
            fanins.join(","),
            match self.bottom {
                Gate::And => "AND",
                Gate::Or => "OR",
            }
        )
    }

    pub fn from_spec_format(text: &str) -> Result<SipFormula> {
        let mut d: Option<usize> = None;
        let mut fanins: Option<Vec<usize>> = None;
        let mut bottom: Option<Gate> = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            match key.trim() {
                "d" => {
                    d = Some(
                        val.trim()
                            .parse()
                            .map_err(|e| Error::Parse(format!("bad depth: {e}")))?,
                    )
                }
                "fanins" => {
                    let v: std::result::Result<Vec<usize>, _> =
                        val.split(',').map(|s| s.trim().parse()).collect();
                    fanins = Some(v.map_err(|e| Error::Parse(format!("bad fan-ins: {e}")))?);
                }
                "bottom" => {
                    bottom = Some(match val.trim() {
                        "AND" => Gate::And,
                        "OR" => Gate::Or,
                        other => {
                            return Err(Error::Parse(format!("bad bottom gate {other:?}")))
                        }
                    })
                }
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let fanins = fanins.ok_or_else(|| Error::Parse("missing fanins=".into()))?;
        let bottom = bottom.ok_or_else(|| Error::Parse("missing bottom=".into()))?;
        if let Some(d) = d {
            if d != fanins.len() {
                return Err(Error::Parse(format!(
                    "d = {d} disagrees with {} fan-ins",
                    fanins.len()
                )));
            }
        }
        build_sip(&fanins, bottom)
    }
}

/// Initial block-random restriction: per block, all-ones with probability x,
/// conditioned-uniform over {*,1}^w minus all-ones with probability q', and
/// conditioned-uniform over {0,1}^w minus all-ones otherwise. Conditioned
/// draws use rejection.
pub fn sample_r_init(
    blocks: usize,
    w: usize,
    x: f64,
    qprime: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BlockRestriction> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&qprime) || x + qprime > 1.0 {
        return Err(Error::Parameter(format!(
            "branch probabilities x = {x}, q' = {qprime} invalid"
        )));
    }
    if w == 0 {
        return Err(Error::Parameter("block length must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        let u: f64 = rng.gen();
        let block = if u < x {
            vec![Cell::One; w]
        } else if u < x + qprime {
            sample_excluding_all_ones(w, Cell::Star, rng)
        } else {
            sample_excluding_all_ones(w, Cell::Zero, rng)
        };
        out.push(block);
    }
    BlockRestriction::new(out)
}

/// Uniform over {other, 1}^w minus the all-ones string, by rejection.
fn sample_excluding_all_ones(w: usize, other: Cell, rng: &mut ChaCha8Rng) -> Vec<Cell> {
    loop {
        let block: Vec<Cell> = (0..w)
            .map(|_| if rng.gen_bool(0.5) { Cell::One } else { other })
            .collect();
        if block.iter().any(|&c| c != Cell::One) {
            return block;
        }
    }
}

/// Exact completion check for the initial restriction at block length w:
/// the block distribution completed by a Bernoulli(t) star filler, compared
/// to uniform on {0,1}^w in total variation.
pub fn completion_check_init(
    w: u32,
    x: &BigRational,
    qprime: &BigRational,
    t: &BigRational,
) -> Result<BigRational> {
    if w == 0 || w > 4 {
        return Err(Error::SizeCap {
            what: "completion block length",
            got: w as usize,
            cap: 4,
        });
    }
    for (name, v) in [("x", x), ("q'", qprime), ("t", t)] {
        if v < &BigRational::zero() || v > &BigRational::one() {
            return Err(Error::Parameter(format!("{name} = {v} outside [0,1]")));
        }
    }
    if x + qprime > BigRational::one() {
        return Err(Error::Parameter("x + q' > 1".into()));
    }
    let size = 1usize << w;
    let nonones = BigRational::from_integer(BigInt::from(size as i64 - 1));
    let mut dist = vec![BigRational::zero(); size];
    let all_ones = size - 1;
    // Branch 1: all-ones.
    dist[all_ones] += x;
    // Branch 2: star pattern P (stars at the zero positions of its index
    // word), filled by the shared Y bit.
    let rest2 = qprime / &nonones;
    for pattern in 0..size - 1 {
        // Y = 1 completes every {*,1} pattern to all-ones.
        dist[all_ones] += &rest2 * t;
        // Y = 0 turns the stars into zeros, yielding `pattern` itself.
        dist[pattern] += &rest2 * (BigRational::one() - t);
    }
    // Branch 3: fixed non-all-ones strings.
    let rest3 = (BigRational::one() - x - qprime) / &nonones;
    for s in dist.iter_mut().take(size - 1) {
        *s += &rest3;
    }
    let uniform = BigRational::new(BigInt::one(), BigInt::from(size as i64));
    let two = BigRational::from_integer(BigInt::from(2));
    Ok(dist
        .into_iter()
        .map(|pr| (pr - &uniform).abs())
        .sum::<BigRational>()
        / two)
}

/// One block's atom list for the subsequent-restriction distribution, for a
/// fully starred in-window block of s cells: (pattern, probability) pairs.
/// `flipped` selects the reversed-roles variant used under OR layers.
pub fn rtau_block_atoms(
    s: usize,
    lambda: &BigRational,
    t_k: &BigRational,
    t_km1: &BigRational,
    flipped: bool,
) -> Result<Vec<(Vec<Cell>, BigRational)>> {
    if s == 0 || s > 8 {
        return Err(Error::SizeCap {
            what: "atom enumeration block size",
            got: s,
            cap: 8,
        });
    }
    let one = BigRational::one();
    let keep = &one - t_k; // Pr[cell = 1] inside patterns
    let all_kept = pow_rat(&keep, s as u32);
    let q_a = (&all_kept - lambda) / t_km1;
    if q_a < BigRational::zero() || &q_a + lambda > one {
        return Err(Error::Parameter(format!(
            "q_a = {q_a} leaves [0, 1-lambda] at s = {s}"
        )));
    }
    let denom = &one - &all_kept; // mass of the excluded all-ones point
    let mut atoms = Vec::new();
    atoms.push((vec![Cell::One; s], lambda.clone()));
    let rest = &one - lambda - &q_a;
    for word in 0..(1usize << s) - 1 {
        // Bit i set means cell i = 1; clear means the t_k-weighted symbol.
        let ones = (word as u32).count_ones();
        let shape = pow_rat(t_k, s as u32 - ones) * pow_rat(&keep, ones) / &denom;
        let star_pat: Vec<Cell> = (0..s)
            .map(|i| if word >> i & 1 == 1 { Cell::One } else { Cell::Star })
            .collect();
        let zero_pat: Vec<Cell> = (0..s)
            .map(|i| if word >> i & 1 == 1 { Cell::One } else { Cell::Zero })
            .collect();
        atoms.push((star_pat, &q_a * &shape));
        atoms.push((zero_pat, &rest * &shape));
    }
    if flipped {
        for (pat, _) in &mut atoms {
            for c in pat.iter_mut() {
                *c = match *c {
                    Cell::One => Cell::Zero,
                    Cell::Zero => Cell::One,
                    Cell::Star => Cell::Star,
                };
            }
        }
    }
    Ok(atoms)
}

fn pow_rat(base: &BigRational, e: u32) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..e {
        out *= base;
    }
    out
}

/// Exact single-stage completion check: a fully starred in-window block of
/// s cells under the subsequent-restriction distribution, stars filled with
/// a shared Bernoulli(t_{k-1}) bit, must equal the per-bit product with
/// Pr[1] = 1 - t_k (roles flipped in the reversed variant). Returns the
/// total variation distance.
pub fn completion_check_stage(
    s: usize,
    lambda: &BigRational,
    t_k: &BigRational,
    t_km1: &BigRational,
    flipped: bool,
) -> Result<BigRational> {
    let atoms = rtau_block_atoms(s, lambda, t_k, t_km1, flipped)?;
    let one = BigRational::one();
    let mut dist: HashMap<usize, BigRational> = HashMap::new();
    // Filler bit: 1 with probability t_{k-1} in the normal orientation,
    // 0 with that probability when flipped.
    for (y, y_pr) in [
        (true, t_km1.clone()),
        (false, &one - t_km1),
    ] {
        let y_bit = if flipped { !y } else { y };
        for (pat, pr) in &atoms {
            let mut word = 0usize;
            for (i, c) in pat.iter().enumerate() {
                let bit = match c {
                    Cell::One => true,
                    Cell::Zero => false,
                    Cell::Star => y_bit,
                };
                if bit {
                    word |= 1 << i;
                }
            }
            *dist.entry(word).or_insert_with(BigRational::zero) += pr * &y_pr;
        }
    }
    // Per-bit target.
    let p1 = if flipped { t_k.clone() } else { &one - t_k };
    let mut tv = BigRational::zero();
    for word in 0..1usize << s {
        let ones = (word as u32).count_ones();
        let target = pow_rat(&p1, ones) * pow_rat(&(&one - &p1), s as u32 - ones);
        let actual = dist.remove(&word).unwrap_or_else(BigRational::zero);
        tv += (actual - target).abs();
    }
    Ok(tv / BigRational::from_integer(BigInt::from(2)))
}

/// Exact two-stage chain completion check on the toy grid of s_a blocks of
/// s_b cells: stage k+1 (reversed roles, under an OR layer) then stage k
/// (normal, under an AND layer), stars filled bottom-up from a Bernoulli(t1)
/// bit. The completed grid must be iid with Pr[1] = t3. Returns the total
/// variation distance.
pub fn chain2_completion_check(
    s_a: usize,
    s_b: usize,
    lambda: &BigRational,
    t3: &BigRational,
    t2: &BigRational,
    t1: &BigRational,
) -> Result<BigRational> {
    if s_a == 0 || s_b == 0 || s_a * s_b > 8 {
        return Err(Error::SizeCap {
            what: "chain enumeration grid",
            got: s_a * s_b,
            cap: 8,
        });
    }
    let one = BigRational::one();
    let inner_atoms = rtau_block_atoms(s_b, lambda, t3, t2, true)?;
    // Joint distribution over the grid of final bits, built by enumerating
    // stage-3 patterns per block, the stage-2 restriction on the surviving
    // merged variables, and the filler bit.
    let mut dist: HashMap<usize, BigRational> = HashMap::new();
    let blocks: Vec<(Vec<&(Vec<Cell>, BigRational)>, BigRational)> = Vec::new();
    drop(blocks);
    enumerate_blocks(
        &inner_atoms,
        s_a,
        &mut Vec::new(),
        &one,
        &mut |choice, pr3| {
            // Lift each block under the OR layer.
            let lifts: Vec<Cell> = choice
                .iter()
                .map(|pat| crate::boolfn::lift_block(pat, Gate::Or))
                .collect();
            let stars: Vec<usize> = (0..s_a).filter(|&i| lifts[i] == Cell::Star).collect();
            // Stage 2 acts on the star positions. Blocks whose lift is fixed
            // contribute their fixed bits directly.
            let stage2: Vec<(Vec<Cell>, BigRational)> = if stars.is_empty() {
                vec![(Vec::new(), BigRational::one())]
            } else {
                rtau_block_atoms(stars.len(), lambda, t2, t1, false)
                    .expect("stage-2 atoms")
            };
            for (pat2, pr2) in &stage2 {
                for (y, y_pr) in [(true, t1.clone()), (false, &one - t1)] {
                    // Merged-variable values after stage 2 plus filler.
                    let mut merged: Vec<bool> = Vec::with_capacity(s_a);
                    let mut si = 0;
                    for i in 0..s_a {
                        let v = match lifts[i] {
                            Cell::One => true,
                            Cell::Zero => false,
                            Cell::Star => {
                                let c = pat2[si];
                                si += 1;
                                match c {
                                    Cell::One => true,
                                    Cell::Zero => false,
                                    Cell::Star => y,
                                }
                            }
                        };
                        merged.push(v);
                    }
                    // Complete the grid: fixed stage-3 cells keep their bit,
                    // stars take the merged value of their block.
                    let mut word = 0usize;
                    for (i, pat) in choice.iter().enumerate() {
                        for (j, c) in pat.iter().enumerate() {
                            let bit = match c {
                                Cell::One => true,
                                Cell::Zero => false,
                                Cell::Star => merged[i],
                            };
                            if bit {
                                word |= 1 << (i * s_b + j);
                            }
                        }
                    }
                    let p = pr3 * pr2 * &y_pr;
                    *dist.entry(word).or_insert_with(BigRational::zero) += p;
                }
            }
        },
    );
    let n = s_a * s_b;
    let mut tv = BigRational::zero();
    for word in 0..1usize << n {
        let ones = (word as u32).count_ones();
        let target = pow_rat(t3, ones) * pow_rat(&(&one - t3), n as u32 - ones);
        let actual = dist.remove(&word).unwrap_or_else(BigRational::zero);
        tv += (actual - target).abs();
    }
    Ok(tv / BigRational::from_integer(BigInt::from(2)))
}

fn enumerate_blocks<'a>(
    atoms: &'a [(Vec<Cell>, BigRational)],
    remaining: usize,
    chosen: &mut Vec<&'a Vec<Cell>>,
    pr: &BigRational,
    visit: &mut impl FnMut(&[&Vec<Cell>], &BigRational),
) {
    if remaining == 0 {
        visit(chosen, pr);
        return;
    }
    for (pat, p) in atoms {
        chosen.push(pat);
        let next = pr * p;
        enumerate_blocks(atoms, remaining - 1, chosen, &next, visit);
        chosen.pop();
    }
}

/// A subsequent-restriction sampler: orientation gate (And = verbatim
/// clauses, Or = reversed roles of ρ_{i,2}), probability parameters, and the
/// size window routing to the biased-coin fallback.
#[derive(Clone, Debug)]
pub struct BlockLaw {
    /// Gate kind of the layer the blocks feed; its absorbing lift value
    /// triggers the fallback clause.
    pub gate: Gate,
    pub lambda: f64,
    /// Pr[*] per cell in the star branch (and Pr[fixed-low] in the last
    /// branch).
    pub star_prob: f64,
    /// Denominator of q_a.
    pub t_prev: f64,
    /// Inclusive |S_a| window; outside it the fallback clause fires.
    pub window: (i64, i64),
    /// Pr[cell = high symbol] in the fallback clause.
    pub fallback_high: f64,
}

impl BlockLaw {
    /// Def-9 style law under an AND layer with threshold chain (t_k, t_{k-1}).
    pub fn subsequent(lambda: f64, t_k: f64, t_km1: f64, window: (i64, i64)) -> BlockLaw {
        BlockLaw {
            gate: Gate::And,
            lambda,
            star_prob: t_k,
            t_prev: t_km1,
            window,
            fallback_high: 1.0 - t_k,
        }
    }

    pub fn q_a(&self, s: usize) -> f64 {
        ((1.0 - self.star_prob).powi(s as i32) - self.lambda) / self.t_prev
    }
}

/// Sample one subsequent restriction for tau (given with block structure).
/// Fixed cells are copied; a block whose lift is the gate's absorbing value,
/// or whose star count leaves the window, gets the biased-coin clause; the
/// rest get the three-way clause with q_a computed per block.
pub fn sample_r_tau(
    tau: &BlockRestriction,
    law: &BlockLaw,
    rng: &mut ChaCha8Rng,
) -> Result<BlockRestriction> {
    let (high, low) = match law.gate {
        Gate::And => (Cell::One, Cell::Zero),
        Gate::Or => (Cell::Zero, Cell::One),
    };
    let mut out = Vec::with_capacity(tau.block_count());
    for (a, block) in tau.blocks.iter().enumerate() {
        let mut rho = block.clone();
        let stars: Vec<usize> = (0..block.len())
            .filter(|&j| block[j] == Cell::Star)
            .collect();
        if stars.is_empty() {
            out.push(rho);
            continue;
        }
        let lift = crate::boolfn::lift_block(block, law.gate);
        let s = stars.len() as i64;
        if lift == law.gate.absorbing() || s < law.window.0 || s > law.window.1 {
            for &j in &stars {
                rho[j] = if rng.gen_bool(law.fallback_high) { high } else { low };
            }
            out.push(rho);
            continue;
        }
        let q_a = law.q_a(stars.len());
        if !(0.0..=1.0).contains(&q_a) || law.lambda + q_a > 1.0 {
            return Err(Error::Parameter(format!(
                "q_a = {q_a} invalid at block {a} (|S_a| = {s})"
            )));
        }
        let u: f64 = rng.gen();
        if u < law.lambda {
            for &j in &stars {
                rho[j] = high;
            }
        } else {
            let symbol = if u < law.lambda + q_a { Cell::Star } else { low };
            loop {
                for &j in &stars {
                    rho[j] = if rng.gen_bool(law.star_prob) { symbol } else { high };
                }
                if stars.iter().any(|&j| rho[j] != high) {
                    break;
                }
            }
        }
        out.push(rho);
    }
    BlockRestriction::new(out)
}

/// Restriction sampler for the deep family: `kind` 1 acts below an AND layer
/// with the stage probabilities (lambda_i, t_{2i+2}, t_{2i+1}); at i = d it
/// is the initial-style three-way block law. `kind` 2 acts below an OR layer
/// with (lambda, t_{2i+1}, t_{2i}).
pub fn sample_rho_qcma(
    params: &QcmaParams,
    i: u32,
    kind: u8,
    tau: &BlockRestriction,
    rng: &mut ChaCha8Rng,
) -> Result<BlockRestriction> {
    let d = params.d;
    let w = params.w as f64;
    match kind {
        1 if i == d => {
            let lam = params.lambda_i[d as usize].to_f64();
            let qd = params.q_i[d as usize].to_f64();
            sample_r_init(tau.block_count(), tau.block_len(), lam, qd, rng)
        }
        1 => {
            if i == 0 || i >= d {
                return Err(Error::Parameter(format!("stage i = {i} invalid for kind 1")));
            }
            let ii = i as usize;
            let center = params.q * params.f_i[ii];
            let half = w.powf(beta_qcma(2 * i + 2, d));
            let law = BlockLaw {
                gate: Gate::And,
                lambda: params.lambda_i[ii].to_f64(),
                star_prob: params.t[2 * ii + 2],
                t_prev: params.t[2 * ii + 1],
                window: integer_window(center, half),
                fallback_high: 1.0 - params.t[2 * ii + 2],
            };
            sample_r_tau(tau, &law, rng)
        }
        2 => {
            if i == 0 || i > d {
                return Err(Error::Parameter(format!("stage i = {i} invalid for kind 2")));
            }
            let ii = i as usize;
            let center = params.q * w;
            let half = w.powf(beta_qcma(2 * i + 1, d));
            let law = BlockLaw {
                gate: Gate::Or,
                lambda: params.lambda,
                star_prob: 1.0 - params.t[2 * ii + 1],
                t_prev: params.t[2 * ii],
                window: integer_window(center, half),
                fallback_high: 1.0 - params.t[2 * ii + 1],
            };
            sample_r_tau(tau, &law, rng)
        }
        other => Err(Error::Parameter(format!("kind must be 1 or 2, got {other}"))),
    }
}

/// Per-condition typicality report.
#[derive(Clone, Debug, Default)]
pub struct TypicalityReport {
    /// Blocks one level up whose lifted star count leaves the window.
    pub cond1_failures: Vec<(usize, usize)>,
    /// Gates two levels up whose double-lift star count leaves the window.
    pub cond2_failures: Vec<(usize, usize)>,
}

impl TypicalityReport {
    pub fn typical(&self) -> bool {
        self.cond1_failures.is_empty() && self.cond2_failures.is_empty()
    }
}

/// Group `cells` into consecutive blocks of `width` and lift each.
pub fn lift_layer(cells: &[Cell], width: usize, gate: Gate) -> Vec<Cell> {
    cells
        .chunks(width)
        .map(|b| crate::boolfn::lift_block(b, gate))
        .collect()
}

/// Typicality of tau (a flat string at depth k of the formula): condition 1
/// checks the per-block star count of the lift against `star_window`;
/// condition 2 checks the star count of the double lift against
/// [cond2_min, fan-in].
pub fn is_typical(
    tau: &[Cell],
    shape: &SipFormula,
    k: usize,
    star_window: (i64, i64),
    cond2_min: i64,
) -> Result<TypicalityReport> {
    if k < 3 || k > shape.depth() {
        return Err(Error::Parameter(format!("typicality needs 3 <= k <= depth, got {k}")));
    }
    let expect: usize = shape.fanins[..k].iter().product();
    if tau.len() != expect {
        return Err(Error::ArityMismatch {
            expected: expect,
            got: tau.len(),
        });
    }
    let lifted = lift_layer(tau, shape.fanins[k - 1], shape.gate_at(k - 1));
    let double = lift_layer(&lifted, shape.fanins[k - 2], shape.gate_at(k - 2));
    let mut report = TypicalityReport::default();
    for (a, block) in lifted.chunks(shape.fanins[k - 2]).enumerate() {
        let stars = block.iter().filter(|&&c| c == Cell::Star).count();
        if (stars as i64) < star_window.0 || (stars as i64) > star_window.1 {
            report.cond1_failures.push((a, stars));
        }
    }
    let w3 = shape.fanins[k - 3];
    for (a, block) in double.chunks(w3).enumerate() {
        let stars = block.iter().filter(|&&c| c == Cell::Star).count();
        if (stars as i64) < cond2_min || stars > w3 {
            report.cond2_failures.push((a, stars));
        }
    }
    Ok(report)
}

/// Star-count window windows for the shallow family at depth k:
/// (qw +- w^{beta(k-1,d)} as integers, and the condition-2 floor
/// w_{k-3} - w^{4/5}).
pub fn typicality_windows(params: &SipParams, k: usize, w_km3: usize) -> ((i64, i64), i64) {
    let qw = params.q * params.w as f64;
    let half = (params.w as f64).powf(beta_sip(k as u32 - 1, params.d));
    let floor2 = (w_km3 as f64 - (params.w as f64).powf(0.8)).ceil() as i64;
    (integer_window(qw, half), floor2)
}

/// Monte Carlo rate of a block's star count leaving the window
/// s*B +- B^{0.55}, each of B cells independently a star with probability s.
/// Any half-width exponent above 1/2 concentrates (the failure rate falls
/// as B grows); 0.55 keeps the rates large enough to observe at toy sizes.
pub fn typicality_rate_mc(
    block_size: u64,
    star_prob: f64,
    trials: u64,
    root_seed: u64,
    jobs: usize,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&star_prob) {
        return Err(Error::Parameter(format!("star probability {star_prob} outside [0,1]")));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let (lo, hi) = count_window(block_size, star_prob);
    let hits = seeds::count_successes(root_seed, trials, jobs, |rng| {
        let mut count = 0i64;
        for _ in 0..block_size {
            if rng.gen_bool(star_prob) {
                count += 1;
            }
        }
        count < lo || count > hi
    });
    Ok(seeds::mc_estimate(hits, trials))
}

/// The integer window [s*B - B^{0.55}, s*B + B^{0.55}].
pub fn count_window(block_size: u64, star_prob: f64) -> (i64, i64) {
    let center = star_prob * block_size as f64;
    let half = (block_size as f64).powf(0.55);
    integer_window(center, half)
}

/// Exact probability that Binomial(B, s) leaves [lo, hi].
pub fn binomial_window_miss(block_size: u64, s: &BigRational, lo: i64, hi: i64) -> BigRational {
    let one = BigRational::one();
    let mut total = BigRational::zero();
    let mut coeff = BigInt::one();
    for j in 0..=block_size {
        if (j as i64) < lo || (j as i64) > hi {
            total += BigRational::from_integer(coeff.clone())
                * pow_rat(s, j as u32)
                * pow_rat(&(&one - s), (block_size - j) as u32);
        }
        if j < block_size {
            coeff = coeff * BigInt::from(block_size - j) / BigInt::from(j + 1);
        }
    }
    total
}

/// Product distribution with an independent Pr[1] per position.
#[derive(Clone, Debug)]
pub struct BiasedProduct {
    pub probs: Vec<BigRational>,
}

impl BiasedProduct {
    pub fn uniform_bias(n: usize, p: BigRational) -> BiasedProduct {
        BiasedProduct {
            probs: vec![p; n],
        }
    }

    pub fn weight(&self, x: &Assignment) -> BigRational {
        let one = BigRational::one();
        self.probs
            .iter()
            .zip(&x.bits)
            .map(|(p, &b)| if b { p.clone() } else { &one - p })
            .product()
    }
}

/// bias(f, D) = min(Pr_D[f = 0], Pr_D[f = 1]); points outside dom carry no
/// mass to either side.
pub fn bias(f: &PartialFn, d: &BiasedProduct) -> Result<BigRational> {
    if f.n() > 20 {
        return Err(Error::SizeCap {
            what: "bias enumeration arity",
            got: f.n(),
            cap: 20,
        });
    }
    if d.probs.len() != f.n() {
        return Err(Error::ArityMismatch {
            expected: f.n(),
            got: d.probs.len(),
        });
    }
    let mut p0 = BigRational::zero();
    let mut p1 = BigRational::zero();
    for idx in 0..f.table_len() {
        match f.value_at(idx) {
            Some(true) => p1 += d.weight(&Assignment::from_index(idx, f.n())),
            Some(false) => p0 += d.weight(&Assignment::from_index(idx, f.n())),
            None => {}
        }
    }
    Ok(p0.min(p1))
}

/// CNF over n variables; clause literals are (index, polarity).
#[derive(Clone, Debug)]
pub struct Cnf {
    pub n: usize,
    pub clauses: Vec<Vec<(usize, bool)>>,
}

impl Cnf {
    pub fn width(&self) -> usize {
        self.clauses.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Assignment) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&(i, pol)| x.bits[i] == pol))
    }
}

/// OR of all n positions with tau's fixed bits substituted for the input.
pub fn or_restricted(tau: &crate::boolfn::Restriction, x: &Assignment) -> bool {
    tau.cells.iter().zip(&x.bits).any(|(c, &b)| match c {
        Cell::One => true,
        Cell::Zero => false,
        Cell::Star => b,
    })
}

/// Exact disagreement, bias, and slack of the OR-vs-CNF correlation bound
/// at per-bit one-probability p: returns (disagreement, bias, r*p). The
/// guaranteed inequality is disagreement >= bias - r*p.
pub fn or_cnf_gap(
    tau: &crate::boolfn::Restriction,
    cnf: &Cnf,
    p: &BigRational,
) -> Result<(BigRational, BigRational, BigRational)> {
    let n = tau.len();
    if n != cnf.n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: cnf.n,
        });
    }
    if n > 20 {
        return Err(Error::SizeCap {
            what: "correlation enumeration arity",
            got: n,
            cap: 20,
        });
    }
    let d = BiasedProduct::uniform_bias(n, p.clone());
    let mut disagree = BigRational::zero();
    let mut p0 = BigRational::zero();
    let mut p1 = BigRational::zero();
    for idx in 0..1usize << n {
        let x = Assignment::from_index(idx, n);
        let weight = d.weight(&x);
        let or_v = or_restricted(tau, &x);
        if or_v {
            p1 += &weight;
        } else {
            p0 += &weight;
        }
        if or_v != cnf.eval(&x) {
            disagree += weight;
        }
    }
    let b = p0.min(p1);
    let rp = BigRational::from_integer(BigInt::from(cnf.width() as i64)) * p;
    Ok((disagree, b, rp))
}

/// Fold projections over the list right-to-left (the last restriction is
/// applied to f first), reporting the failing stage on shape mismatch.
pub fn projection_chain(f: &PartialFn, stages: &[BlockRestriction]) -> Result<PartialFn> {
    let mut cur = f.clone();
    for (pos, rho) in stages.iter().enumerate().rev() {
        cur = cur.project(rho).map_err(|e| Error::Shape {
            stage: pos,
            msg: e.to_string(),
        })?;
    }
    Ok(cur)
}

/// Evaluate the chained projection at y by completing the assignment through
/// every stage instead of materializing intermediate tables.
pub fn eval_chain(
    f: &PartialFn,
    stages: &[BlockRestriction],
    y: &Assignment,
) -> Result<Option<bool>> {
    let mut bits = y.bits.clone();
    for (pos, rho) in stages.iter().enumerate() {
        if bits.len() != rho.block_count() {
            return Err(Error::Shape {
                stage: pos,
                msg: format!(
                    "expected {} blocks, input has {} variables",
                    rho.block_count(),
                    bits.len()
                ),
            });
        }
        let mut next = Vec::with_capacity(rho.block_count() * rho.block_len());
        for (i, block) in rho.blocks.iter().enumerate() {
            for &c in block {
                next.push(match c {
                    Cell::One => true,
                    Cell::Zero => false,
                    Cell::Star => bits[i],
                });
            }
        }
        bits = next;
    }
    f.evaluate(&Assignment::new(bits))
}

/// Mean projected-OR bias over sampled initial restrictions: B blocks of
/// length l; a block lifting to 1 kills the bias, otherwise the surviving
/// OR over k starred blocks has bias min((1-t)^k, 1-(1-t)^k) under the
/// Bernoulli(t) input product. Returns (mean, standard error of the mean).
pub fn unbiasedor_mc(
    blocks: usize,
    block_len: usize,
    x: f64,
    qprime: f64,
    t: f64,
    trials: u64,
    root_seed: u64,
    jobs: usize,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("t = {t} outside [0,1]")));
    }
    let samples = seeds::collect_f64(root_seed, trials, jobs, |rng| {
        let rho = sample_r_init(blocks, block_len, x, qprime, rng)
            .expect("validated parameters");
        let lifts = rho.lift(Gate::And);
        if lifts.iter().any(|&c| c == Cell::One) {
            return 0.0;
        }
        let k = lifts.iter().filter(|&&c| c == Cell::Star).count();
        if k == 0 {
            return 0.0;
        }
        let p0 = (1.0 - t).powi(k as i32);
        p0.min(1.0 - p0)
    });
    let n = trials as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, (var / n).sqrt()))
}

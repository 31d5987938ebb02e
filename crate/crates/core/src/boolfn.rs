//! Truth-table representation of (partial) Boolean functions, plus the
//! restriction, projection, and lift operators.
//!
//! Inputs are encoded LSB-first: the assignment x maps to the table index
//! sum_i x_i 2^i (0-based i). Points outside the domain mask evaluate to
//! "bottom" (`None`); every downstream measure treats those points as
//! unconstrained.

use crate::{Error, Result};
use std::fmt;

/// Hard cap on arity; 2^24-bit tables are the largest anything here needs.
pub const MAX_ARITY: usize = 24;

/// One cell of a restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Zero,
    One,
    Star,
}

impl Cell {
    pub fn from_bit(b: bool) -> Cell {
        if b {
            Cell::One
        } else {
            Cell::Zero
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            Cell::Zero => Some(false),
            Cell::One => Some(true),
            Cell::Star => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Zero => write!(f, "0"),
            Cell::One => write!(f, "1"),
            Cell::Star => write!(f, "*"),
        }
    }
}

/// A full assignment in {0,1}^n.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Assignment {
        Assignment { bits }
    }

    /// Decode a table index into an assignment (LSB-first).
    pub fn from_index(index: usize, n: usize) -> Assignment {
        Assignment {
            bits: (0..n).map(|i| index >> i & 1 == 1).collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (b as usize) << i)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// x^B: flip the bits indexed by `block` (0-based indices).
    pub fn flip_block(&self, block: &[usize]) -> Result<Assignment> {
        let mut out = self.clone();
        for &i in block {
            let b = out
                .bits
                .get_mut(i)
                .ok_or(Error::IndexOutOfRange { index: i, n: self.bits.len() })?;
            *b = !*b;
        }
        Ok(out)
    }
}

/// Packed bit vector sized for 2^n bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Bits {
        Bits {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Bits {
        let mut b = Bits::zeros(len);
        for i in 0..len {
            b.set(i, true);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hex encoding: the bit string read as a little-endian integer, written
    /// most-significant nibble first, zero-padded to ceil(len/4) digits.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let mut s = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nib = 0u8;
            for j in 0..4 {
                let i = d * 4 + j;
                if i < self.len && self.get(i) {
                    nib |= 1 << j;
                }
            }
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Bits> {
        let digits = len.div_ceil(4);
        if s.len() != digits {
            return Err(Error::Parse(format!(
                "hex field has {} digits, expected {} for {} bits",
                s.len(),
                digits,
                len
            )));
        }
        let mut b = Bits::zeros(len);
        for (pos, c) in s.chars().enumerate() {
            let nib = c
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {c:?}")))?
                as u8;
            let d = digits - 1 - pos;
            for j in 0..4 {
                let i = d * 4 + j;
                if nib >> j & 1 == 1 {
                    if i >= len {
                        return Err(Error::Parse("hex value has bits beyond 2^n".into()));
                    }
                    b.set(i, true);
                }
            }
        }
        Ok(b)
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({} bits, 0x{})", self.len, self.to_hex())
    }
}

/// A partial Boolean function f: {0,1}^n -> {0,1,bottom} as a packed truth
/// table plus domain mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PartialFn {
    n: usize,
    values: Bits,
    domain: Bits,
}

impl fmt::Debug for PartialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PartialFn(n={}, values={}", self.n, self.values.to_hex())?;
        if self.domain.count_ones() != self.table_len() {
            write!(f, ", domain={}", self.domain.to_hex())?;
        }
        write!(f, ")")
    }
}

fn check_arity(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ARITY {
        return Err(Error::SizeCap {
            what: "arity",
            got: n,
            cap: MAX_ARITY,
        });
    }
    Ok(())
}

impl PartialFn {
    pub fn new(n: usize, values: Bits, domain: Bits) -> Result<PartialFn> {
        check_arity(n)?;
        if values.len() != 1 << n || domain.len() != 1 << n {
            return Err(Error::Parse(format!(
                "table length mismatch for n={n}: values {} domain {}",
                values.len(),
                domain.len()
            )));
        }
        Ok(PartialFn { n, values, domain })
    }

    /// Total function from a predicate on assignments.
    pub fn from_fn(n: usize, mut f: impl FnMut(&Assignment) -> bool) -> Result<PartialFn> {
        check_arity(n)?;
        let mut values = Bits::zeros(1 << n);
        for idx in 0..1usize << n {
            values.set(idx, f(&Assignment::from_index(idx, n)));
        }
        Ok(PartialFn {
            n,
            values,
            domain: Bits::ones(1 << n),
        })
    }

    /// Partial function from a table of Option<bool> per index.
    pub fn from_partial_fn(
        n: usize,
        mut f: impl FnMut(&Assignment) -> Option<bool>,
    ) -> Result<PartialFn> {
        check_arity(n)?;
        let mut values = Bits::zeros(1 << n);
        let mut domain = Bits::zeros(1 << n);
        for idx in 0..1usize << n {
            if let Some(v) = f(&Assignment::from_index(idx, n)) {
                values.set(idx, v);
                domain.set(idx, true);
            }
        }
        Ok(PartialFn { n, values, domain })
    }

    pub fn constant(n: usize, v: bool) -> Result<PartialFn> {
        PartialFn::from_fn(n, |_| v)
    }

    pub fn or(n: usize) -> Result<PartialFn> {
        PartialFn::from_fn(n, |x| x.bits.iter().any(|&b| b))
    }

    pub fn and(n: usize) -> Result<PartialFn> {
        PartialFn::from_fn(n, |x| x.bits.iter().all(|&b| b))
    }

    pub fn xor(n: usize) -> Result<PartialFn> {
        PartialFn::from_fn(n, |x| x.bits.iter().filter(|&&b| b).count() % 2 == 1)
    }

    /// Majority; requires odd arity so ties cannot occur.
    pub fn maj(n: usize) -> Result<PartialFn> {
        if n % 2 == 0 {
            return Err(Error::Parameter(format!("MAJ needs odd arity, got {n}")));
        }
        PartialFn::from_fn(n, move |x| x.bits.iter().filter(|&&b| b).count() > n / 2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table_len(&self) -> usize {
        1 << self.n
    }

    /// Value at a table index, None at points outside the domain.
    pub fn value_at(&self, index: usize) -> Option<bool> {
        if self.domain.get(index) {
            Some(self.values.get(index))
        } else {
            None
        }
    }

    pub fn evaluate(&self, x: &Assignment) -> Result<Option<bool>> {
        if x.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.value_at(x.index()))
    }

    pub fn is_total(&self) -> bool {
        self.domain.count_ones() == self.table_len()
    }

    pub fn domain_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.table_len()).filter(|&i| self.domain.get(i))
    }

    /// True when f takes the same value at every domain point (vacuously true
    /// for an empty domain).
    pub fn is_constant_on_domain(&self) -> bool {
        let mut seen = None;
        for i in self.domain_indices() {
            let v = self.values.get(i);
            match seen {
                None => seen = Some(v),
                Some(s) if s != v => return false,
                _ => {}
            }
        }
        true
    }

    /// The restricted function f_rho on the free variables of rho, re-indexed
    /// in ascending original order (rho.free_indices() is the index map).
    pub fn restrict(&self, rho: &Restriction) -> Result<PartialFn> {
        if rho.cells.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: rho.cells.len(),
            });
        }
        let free = rho.free_indices();
        let k = free.len();
        if k == 0 {
            return Err(Error::Parameter(
                "restriction leaves no free variables; use evaluate".into(),
            ));
        }
        let mut base = 0usize;
        for (i, c) in rho.cells.iter().enumerate() {
            if *c == Cell::One {
                base |= 1 << i;
            }
        }
        let mut values = Bits::zeros(1 << k);
        let mut domain = Bits::zeros(1 << k);
        for sub in 0..1usize << k {
            let mut full = base;
            for (j, &i) in free.iter().enumerate() {
                if sub >> j & 1 == 1 {
                    full |= 1 << i;
                }
            }
            if self.domain.get(full) {
                domain.set(sub, true);
                values.set(sub, self.values.get(full));
            }
        }
        Ok(PartialFn {
            n: k,
            values,
            domain,
        })
    }

    /// proj_rho f: f over N blocks of length l collapses to N variables, each
    /// feeding all stars of its block. Bit (i,j) of f lives at index i*l + j.
    pub fn project(&self, rho: &BlockRestriction) -> Result<PartialFn> {
        let (nb, l) = (rho.block_count(), rho.block_len());
        if nb * l != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: nb * l,
            });
        }
        check_arity(nb)?;
        let mut values = Bits::zeros(1 << nb);
        let mut domain = Bits::zeros(1 << nb);
        for x in 0..1usize << nb {
            let mut full = 0usize;
            for i in 0..nb {
                let xb = x >> i & 1 == 1;
                for j in 0..l {
                    let bit = match rho.blocks[i][j] {
                        Cell::Star => xb,
                        Cell::One => true,
                        Cell::Zero => false,
                    };
                    if bit {
                        full |= 1 << (i * l + j);
                    }
                }
            }
            if self.domain.get(full) {
                domain.set(x, true);
                values.set(x, self.values.get(full));
            }
        }
        Ok(PartialFn {
            n: nb,
            values,
            domain,
        })
    }

    /// Serialize in the truth-table file format.
    pub fn to_table_format(&self) -> String {
        let mut s = format!("n={}\nvalues={}\n", self.n, self.values.to_hex());
        if !self.is_total() {
            s.push_str(&format!("domain={}\n", self.domain.to_hex()));
        }
        s
    }

    /// Parse the truth-table file format: `n=<k>`, `values=<hex>`, optional
    /// `domain=<hex>` (default all-ones). Blank lines and `#` comments are
    /// skipped.
    pub fn from_table_format(text: &str) -> Result<PartialFn> {
        let mut n = None;
        let mut values = None;
        let mut domain = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            match key.trim() {
                "n" => {
                    n = Some(val.trim().parse::<usize>().map_err(|e| {
                        Error::Parse(format!("bad n: {e}"))
                    })?)
                }
                "values" => values = Some(val.trim().to_string()),
                "domain" => domain = Some(val.trim().to_string()),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing n=".into()))?;
        check_arity(n)?;
        let values = values.ok_or_else(|| Error::Parse("missing values=".into()))?;
        let values = Bits::from_hex(&values, 1 << n)?;
        let domain = match domain {
            Some(d) => Bits::from_hex(&d, 1 << n)?,
            None => Bits::ones(1 << n),
        };
        PartialFn::new(n, values, domain)
    }
}

/// A restriction rho in {0,1,*}^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Restriction {
    pub cells: Vec<Cell>,
}

impl Restriction {
    pub fn new(cells: Vec<Cell>) -> Restriction {
        Restriction { cells }
    }

    pub fn all_star(n: usize) -> Restriction {
        Restriction {
            cells: vec![Cell::Star; n],
        }
    }

    /// Build the restriction that fixes everything outside S to x's bits and
    /// leaves S free (the f_{x_{S-bar}} construction).
    pub fn fix_outside(x: &Assignment, s: &[usize]) -> Restriction {
        let mut cells: Vec<Cell> = x.bits.iter().map(|&b| Cell::from_bit(b)).collect();
        for &i in s {
            cells[i] = Cell::Star;
        }
        Restriction { cells }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Free (starred) indices, ascending; this is also the index map of the
    /// restricted function back into the original variables.
    pub fn free_indices(&self) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Cell::Star)
            .map(|(i, _)| i)
            .collect()
    }

    /// Compose: apply `other` (over this restriction's free variables, in
    /// ascending order) on top of self.
    pub fn compose(&self, other: &Restriction) -> Result<Restriction> {
        let free = self.free_indices();
        if other.len() != free.len() {
            return Err(Error::ArityMismatch {
                expected: free.len(),
                got: other.len(),
            });
        }
        let mut cells = self.cells.clone();
        for (j, &i) in free.iter().enumerate() {
            cells[i] = other.cells[j];
        }
        Ok(Restriction { cells })
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cells {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A restriction organized as N blocks of uniform length l, the shape
/// proj_rho consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockRestriction {
    pub blocks: Vec<Vec<Cell>>,
}

impl BlockRestriction {
    pub fn new(blocks: Vec<Vec<Cell>>) -> Result<BlockRestriction> {
        let l = blocks.first().map_or(0, |b| b.len());
        if blocks.iter().any(|b| b.len() != l) {
            return Err(Error::Parse("blocks have unequal lengths".into()));
        }
        Ok(BlockRestriction { blocks })
    }

    pub fn all_star(block_count: usize, block_len: usize) -> BlockRestriction {
        BlockRestriction {
            blocks: vec![vec![Cell::Star; block_len]; block_count],
        }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_len(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.len())
    }

    /// Flatten to a plain restriction over block_count * block_len cells.
    pub fn flatten(&self) -> Restriction {
        Restriction {
            cells: self.blocks.iter().flatten().copied().collect(),
        }
    }

    /// The lift of tau (Def 7): each block collapses to the {0,1,*} value its
    /// parent gate takes. For an AND gate a 0 anywhere dominates, all-ones
    /// gives 1, and a star-containing block of stars and ones is undetermined;
    /// an OR gate swaps the roles of 0 and 1.
    pub fn lift(&self, gate: Gate) -> Vec<Cell> {
        self.blocks
            .iter()
            .map(|b| lift_block(b, gate))
            .collect()
    }
}

/// Gate kind for lift and the SIP formula layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    And,
    Or,
}

impl Gate {
    pub fn flip(self) -> Gate {
        match self {
            Gate::And => Gate::Or,
            Gate::Or => Gate::And,
        }
    }

    /// The value that forces this gate (0 for AND, 1 for OR).
    pub fn absorbing(self) -> Cell {
        match self {
            Gate::And => Cell::Zero,
            Gate::Or => Cell::One,
        }
    }

    /// The value the gate takes when every child is the neutral value.
    pub fn neutral(self) -> Cell {
        match self {
            Gate::And => Cell::One,
            Gate::Or => Cell::Zero,
        }
    }
}

/// Lift a single block; see [`BlockRestriction::lift`].
pub fn lift_block(block: &[Cell], gate: Gate) -> Cell {
    let absorbing = gate.absorbing();
    if block.iter().any(|&c| c == absorbing) {
        return absorbing;
    }
    if block.iter().all(|&c| c == gate.neutral()) {
        return gate.neutral();
    }
    Cell::Star
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asg(bits: &[u8]) -> Assignment {
        Assignment::new(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn evaluate_or2() {
        let f = PartialFn::or(2).unwrap();
        assert_eq!(f.evaluate(&asg(&[0, 0])).unwrap(), Some(false));
        assert_eq!(f.evaluate(&asg(&[1, 0])).unwrap(), Some(true));
        assert_eq!(f.evaluate(&asg(&[0, 1])).unwrap(), Some(true));
    }

    #[test]
    fn evaluate_outside_domain_is_bottom() {
        let f = PartialFn::from_partial_fn(2, |x| {
            if x.bits == [true, true] {
                None
            } else {
                Some(false)
            }
        })
        .unwrap();
        assert_eq!(f.evaluate(&asg(&[1, 1])).unwrap(), None);
        assert_eq!(f.evaluate(&asg(&[0, 1])).unwrap(), Some(false));
    }

    #[test]
    fn evaluate_arity_mismatch() {
        let f = PartialFn::or(2).unwrap();
        assert!(f.evaluate(&asg(&[0, 0, 0])).is_err());
    }

    #[test]
    fn restrict_or2_absorbs_one() {
        let f = PartialFn::or(2).unwrap();
        let g = f
            .restrict(&Restriction::new(vec![Cell::One, Cell::Star]))
            .unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.value_at(0), Some(true));
        assert_eq!(g.value_at(1), Some(true));
    }

    #[test]
    fn restrict_or2_identity() {
        let f = PartialFn::or(2).unwrap();
        let g = f
            .restrict(&Restriction::new(vec![Cell::Zero, Cell::Star]))
            .unwrap();
        assert_eq!(g.value_at(0), Some(false));
        assert_eq!(g.value_at(1), Some(true));
    }

    #[test]
    fn restrict_xor3_gives_not_xor2() {
        // Frozen from the brute-force re-tabulation oracle: fixing one XOR_3
        // input to 1 leaves the complement of XOR_2.
        let f = PartialFn::xor(3).unwrap();
        let g = f
            .restrict(&Restriction::new(vec![Cell::One, Cell::Star, Cell::Star]))
            .unwrap();
        let not_xor2 = PartialFn::from_fn(2, |x| {
            !(x.bits.iter().filter(|&&b| b).count() % 2 == 1)
        })
        .unwrap();
        assert_eq!(g, not_xor2);
    }

    #[test]
    fn project_and_over_two_blocks_all_star() {
        let f = PartialFn::and(4).unwrap();
        let rho = BlockRestriction::all_star(2, 2);
        let g = f.project(&rho).unwrap();
        assert_eq!(g, PartialFn::and(2).unwrap());
    }

    #[test]
    fn project_no_stars_is_constant() {
        let f = PartialFn::xor(4).unwrap();
        let rho = BlockRestriction::new(vec![
            vec![Cell::One, Cell::Zero],
            vec![Cell::One, Cell::One],
        ])
        .unwrap();
        let g = f.project(&rho).unwrap();
        // f(1,0,1,1) has three ones -> XOR = 1; output independent of inputs.
        assert_eq!(g.value_at(0), Some(true));
        assert_eq!(g.value_at(1), Some(true));
        assert_eq!(g.value_at(2), Some(true));
        assert_eq!(g.value_at(3), Some(true));
    }

    #[test]
    fn project_xor4_mixed() {
        // Frozen from the brute-force oracle: XOR_4 with blocks (Star,One |
        // Star,Star) projects to x1 xor 1 xor x2 xor x2 = not x1.
        let f = PartialFn::xor(4).unwrap();
        let rho = BlockRestriction::new(vec![
            vec![Cell::Star, Cell::One],
            vec![Cell::Star, Cell::Star],
        ])
        .unwrap();
        let g = f.project(&rho).unwrap();
        let not_x1 = PartialFn::from_fn(2, |x| !x.bits[0]).unwrap();
        assert_eq!(g, not_x1);
    }

    #[test]
    fn lift_cases() {
        assert_eq!(lift_block(&[Cell::One, Cell::One, Cell::One], Gate::And), Cell::One);
        assert_eq!(lift_block(&[Cell::One, Cell::Star, Cell::One], Gate::And), Cell::Star);
        assert_eq!(lift_block(&[Cell::Zero, Cell::Star, Cell::One], Gate::And), Cell::Zero);
        // OR swaps roles.
        assert_eq!(lift_block(&[Cell::Zero, Cell::Zero], Gate::Or), Cell::Zero);
        assert_eq!(lift_block(&[Cell::Zero, Cell::Star], Gate::Or), Cell::Star);
        assert_eq!(lift_block(&[Cell::One, Cell::Star], Gate::Or), Cell::One);
    }

    #[test]
    fn flip_block_cases() {
        assert_eq!(asg(&[0, 0]).flip_block(&[0, 1]).unwrap(), asg(&[1, 1]));
        assert_eq!(asg(&[1, 0, 1]).flip_block(&[]).unwrap(), asg(&[1, 0, 1]));
        assert_eq!(asg(&[1, 0, 1]).flip_block(&[2]).unwrap(), asg(&[1, 0, 0]));
        assert!(asg(&[1, 0]).flip_block(&[5]).is_err());
    }

    #[test]
    fn flip_block_involution() {
        for idx in 0..32 {
            let x = Assignment::from_index(idx, 5);
            let b = [0, 2, 4];
            assert_eq!(x.flip_block(&b).unwrap().flip_block(&b).unwrap(), x);
        }
    }

    #[test]
    fn restrict_composes() {
        // restrict(restrict(f, r1), r2) == restrict(f, r1 o r2), exhaustive
        // over a sample of restrictions at n = 4.
        let f = PartialFn::maj(5).unwrap().restrict(&Restriction::new(vec![
            Cell::Star,
            Cell::Star,
            Cell::Star,
            Cell::Star,
            Cell::One,
        ]))
        .unwrap();
        let cells = [Cell::Zero, Cell::One, Cell::Star];
        for a in 0..81 {
            let r1 = Restriction::new((0..4).map(|i| cells[a / 3usize.pow(i as u32) % 3]).collect());
            let free = r1.free_indices();
            if free.is_empty() || free.len() == 4 {
                continue;
            }
            let k = free.len();
            for b in 0..3usize.pow(k as u32) {
                let r2 = Restriction::new(
                    (0..k).map(|i| cells[b / 3usize.pow(i as u32) % 3]).collect(),
                );
                if r2.free_indices().is_empty() {
                    continue;
                }
                let lhs = f.restrict(&r1).unwrap().restrict(&r2).unwrap();
                let rhs = f.restrict(&r1.compose(&r2).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn project_unit_blocks_identity() {
        let f = PartialFn::maj(3).unwrap();
        let rho = BlockRestriction::all_star(3, 1);
        assert_eq!(f.project(&rho).unwrap(), f);
    }

    #[test]
    fn lift_of_full_assignment_matches_gate() {
        // lift over a fully assigned block equals direct gate evaluation.
        for w in 1..=4usize {
            for idx in 0..1usize << w {
                let block: Vec<Cell> = (0..w)
                    .map(|j| Cell::from_bit(idx >> j & 1 == 1))
                    .collect();
                let and_val = (0..w).all(|j| idx >> j & 1 == 1);
                let or_val = (0..w).any(|j| idx >> j & 1 == 1);
                assert_eq!(lift_block(&block, Gate::And), Cell::from_bit(and_val));
                assert_eq!(lift_block(&block, Gate::Or), Cell::from_bit(or_val));
            }
        }
    }

    #[test]
    fn table_format_round_trip() {
        let f = PartialFn::from_partial_fn(5, |x| {
            let k = x.bits.iter().filter(|&&b| b).count();
            if k == 3 {
                None
            } else {
                Some(k % 2 == 0)
            }
        })
        .unwrap();
        let text = f.to_table_format();
        let g = PartialFn::from_table_format(&text).unwrap();
        assert_eq!(f, g);

        let h = PartialFn::from_table_format("n=2\nvalues=e\n").unwrap();
        assert_eq!(h, PartialFn::or(2).unwrap());
    }

    #[test]
    fn arity_cap_enforced() {
        assert!(PartialFn::or(25).is_err());
        assert!(PartialFn::or(0).is_err());
    }
}

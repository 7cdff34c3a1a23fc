//! Cantor numeration: mixed-radix digit expansions over a base sequence `d`.
//!
//! A non-negative integer `n` has the unique expansion `n = Σ a_r q_{r-1}` with
//! `0 <= a_r < d_r` and `q_r = d_1 ⋯ d_r`.

mod sequence;

pub use sequence::{BaseKind, BaseSeq, ProbKind, ProbSeq};

use crate::error::{Error, Result};

/// `q_r = d_1 ⋯ d_r` (`q_0 = 1`), failing on 64-bit overflow.
pub fn q_product(base: &BaseSeq, r: u64) -> Result<u64> {
    base.q_product(r)
}

/// Canonical digit expansion `(a_1, …, a_u)` with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitVec<'a> {
    digits: Vec<u64>,
    base: &'a BaseSeq,
}

impl<'a> DigitVec<'a> {
    /// Validates and normalizes a digit list.
    pub fn new(mut digits: Vec<u64>, base: &'a BaseSeq) -> Result<Self> {
        for (i, &a) in digits.iter().enumerate() {
            let d = base.d(i as u64 + 1);
            if a >= d {
                return Err(Error::InvalidParameter(format!(
                    "digit a_{} = {a} is not below d_{} = {d}",
                    i + 1,
                    i + 1
                )));
            }
        }
        while digits.last() == Some(&0) {
            digits.pop();
        }
        Ok(DigitVec { digits, base })
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn base(&self) -> &'a BaseSeq {
        self.base
    }

    /// `a_r`, zero beyond the stored length.
    pub fn digit(&self, r: u64) -> u64 {
        assert!(r >= 1);
        self.digits.get((r - 1) as usize).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// The counter `s_n`: first position whose digit is not maximal.
    pub fn counter(&self) -> u64 {
        let mut r = 1;
        while self.digit(r) == self.base.d(r) - 1 {
            r += 1;
        }
        r
    }

    /// Expansion of `n + 1`.
    pub fn successor(&self) -> DigitVec<'a> {
        let s = self.counter() as usize;
        let mut digits = self.digits.clone();
        if digits.len() < s {
            digits.resize(s, 0);
        }
        digits[..s - 1].iter_mut().for_each(|a| *a = 0);
        digits[s - 1] += 1;
        DigitVec {
            digits,
            base: self.base,
        }
    }

    /// `T_s`: zeroes the (maximal) digits `1..=s`.
    pub fn truncate(&self, s: u64) -> Result<DigitVec<'a>> {
        let sn = self.counter();
        if s < 1 || s >= sn {
            return Err(Error::Precondition(format!(
                "truncation depth {s} outside [1, {}]",
                sn - 1
            )));
        }
        let mut digits = self.digits.clone();
        digits[..s as usize].iter_mut().for_each(|a| *a = 0);
        while digits.last() == Some(&0) {
            digits.pop();
        }
        Ok(DigitVec {
            digits,
            base: self.base,
        })
    }

    pub fn value(&self) -> Result<u64> {
        from_digits(self)
    }
}

pub fn to_digits(mut n: u64, base: &BaseSeq) -> DigitVec<'_> {
    let mut digits = Vec::new();
    let mut r = 1;
    while n > 0 {
        let d = base.d(r);
        digits.push(n % d);
        n /= d;
        r += 1;
    }
    DigitVec { digits, base }
}

pub fn from_digits(dv: &DigitVec<'_>) -> Result<u64> {
    let mut n = 0u64;
    let mut q = 1u64;
    let overflow = || Error::Overflow("integer value of a digit expansion");
    for (i, &a) in dv.digits.iter().enumerate() {
        n = a
            .checked_mul(q)
            .and_then(|x| x.checked_add(n))
            .ok_or_else(overflow)?;
        if i + 1 < dv.digits.len() {
            q = q.checked_mul(dv.base.d(i as u64 + 1)).ok_or_else(overflow)?;
        }
    }
    Ok(n)
}

pub fn counter(dv: &DigitVec<'_>) -> u64 {
    dv.counter()
}

pub fn successor<'a>(dv: &DigitVec<'a>) -> DigitVec<'a> {
    dv.successor()
}

pub fn truncate_digits<'a>(dv: &DigitVec<'a>, s: u64) -> Result<DigitVec<'a>> {
    dv.truncate(s)
}

/// Counter of `n` without materializing the digit vector.
pub fn counter_of(mut n: u64, base: &BaseSeq) -> u64 {
    let mut r = 1;
    loop {
        let d = base.d(r);
        if n % d != d - 1 {
            return r;
        }
        n /= d;
        r += 1;
    }
}

//! Finitely supported complex sequences on the integer line.
//!
//! A [`Signal`] stores a dense block of values together with the integer index
//! of its first sample. Reads outside the stored block return zero, so every
//! signal is a well-defined element of the space of two-sided sequences.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Contiguous, non-empty interval of integer indices `{lo, ..., lo + len - 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    lo: i64,
    len: usize,
}

impl Domain {
    /// `D_n = {-n, ..., n}`.
    pub fn symmetric(n: usize) -> Self {
        Domain {
            lo: -(n as i64),
            len: 2 * n + 1,
        }
    }

    /// `D_m^+ = {0, ..., m}`.
    pub fn one_sided(m: usize) -> Self {
        Domain { lo: 0, len: m + 1 }
    }

    /// `D_m^h = {h, ..., h + m}`.
    pub fn shifted(m: usize, h: i64) -> Self {
        Domain { lo: h, len: m + 1 }
    }

    /// `{lo, ..., hi}`; fails when `hi < lo`.
    pub fn interval(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidConfig(format!("empty domain [{lo}, {hi}]")));
        }
        Ok(Domain {
            lo,
            len: (hi - lo + 1) as usize,
        })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.len as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Always false; domains are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: i64) -> bool {
        t >= self.lo && t <= self.hi()
    }

    pub fn indices(&self) -> RangeInclusive<i64> {
        self.lo..=self.hi()
    }

    /// Translate by `tau`.
    pub fn shift(&self, tau: i64) -> Self {
        Domain {
            lo: self.lo + tau,
            len: self.len,
        }
    }
}

/// Which side of Parseval a norm is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Time,
    Fourier,
}

/// Two-sided complex sequence with finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    start: i64,
    values: Vec<C64>,
}

impl Signal {
    pub fn new(start: i64, values: Vec<C64>) -> Self {
        Signal { start, values }
    }

    /// The identically zero sequence.
    pub fn empty() -> Self {
        Signal {
            start: 0,
            values: Vec::new(),
        }
    }

    pub fn zeros(domain: Domain) -> Self {
        Signal::new(domain.lo(), vec![ZERO; domain.len()])
    }

    /// Unit mass at index `t`.
    pub fn dirac(t: i64) -> Self {
        Signal::new(t, vec![C64::new(1.0, 0.0)])
    }

    pub fn from_fn(domain: Domain, mut f: impl FnMut(i64) -> C64) -> Self {
        Signal::new(domain.lo(), domain.indices().map(&mut f).collect())
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last stored index; `start - 1` for an empty signal.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Stored support, `None` when empty.
    pub fn support(&self) -> Option<Domain> {
        if self.values.is_empty() {
            None
        } else {
            Some(Domain {
                lo: self.start,
                len: self.values.len(),
            })
        }
    }

    /// Value at `t`; zero off the stored support.
    pub fn at(&self, t: i64) -> C64 {
        let i = t - self.start;
        if i < 0 || i >= self.values.len() as i64 {
            ZERO
        } else {
            self.values[i as usize]
        }
    }

    /// Smallest `m` with the stored support inside `D_m`.
    pub fn bandwidth(&self) -> usize {
        if self.values.is_empty() {
            0
        } else {
            self.start.unsigned_abs().max(self.end().unsigned_abs()) as usize
        }
    }

    /// True when the stored support contains `[lo, hi]`.
    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        !self.values.is_empty() && self.start <= lo && self.end() >= hi
    }

    /// Fails with [`Error::Coverage`] unless the stored support contains `[lo, hi]`.
    pub fn require(&self, lo: i64, hi: i64) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::Coverage {
                need_lo: lo,
                need_hi: hi,
                have_lo: self.start,
                have_hi: self.end(),
            })
        }
    }

    /// `[x]_{lo}^{hi}` as a vector, zero-extended where needed.
    pub fn slice(&self, lo: i64, hi: i64) -> Vec<C64> {
        (lo..=hi).map(|t| self.at(t)).collect()
    }

    pub fn restrict(&self, domain: Domain) -> Signal {
        Signal::new(domain.lo(), self.slice(domain.lo(), domain.hi()))
    }

    /// `Δ^τ x`, reading `x_{t-τ}` at index `t`.
    pub fn shift(&self, tau: i64) -> Signal {
        Signal::new(self.start + tau, self.values.clone())
    }

    /// Time reversal `t -> -t`.
    pub fn reversed(&self) -> Signal {
        let mut values = self.values.clone();
        values.reverse();
        Signal::new(-self.end(), values)
    }

    /// Exact linear convolution `[self * other]_t = Σ_τ self_τ other_{t-τ}`.
    ///
    /// The result's stored support is the Minkowski sum of the two supports,
    /// so `W(φ * ψ) <= W(φ) + W(ψ)` holds exactly.
    pub fn convolve(&self, other: &Signal) -> Signal {
        if self.is_empty() || other.is_empty() {
            return Signal::empty();
        }
        Signal::new(
            self.start + other.start,
            fourier::linear_convolve(&self.values, &other.values),
        )
    }

    pub fn scale(&self, c: C64) -> Signal {
        Signal::new(self.start, self.values.iter().map(|v| v * c).collect())
    }

    /// Pointwise `self - other` over the union of supports.
    pub fn sub(&self, other: &Signal) -> Signal {
        self.combine(other, |a, b| a - b)
    }

    /// Pointwise `self + other` over the union of supports.
    pub fn add(&self, other: &Signal) -> Signal {
        self.combine(other, |a, b| a + b)
    }

    fn combine(&self, other: &Signal, f: impl Fn(C64, C64) -> C64) -> Signal {
        match (self.support(), other.support()) {
            (None, None) => Signal::empty(),
            (Some(_), None) => self.clone(),
            (None, Some(_)) => Signal::from_fn(other.support().unwrap(), |t| f(ZERO, other.at(t))),
            (Some(a), Some(b)) => {
                let lo = a.lo().min(b.lo());
                let hi = a.hi().max(b.hi());
                Signal::new(lo, (lo..=hi).map(|t| f(self.at(t), other.at(t))).collect())
            }
        }
    }

    /// `p`-seminorm over `domain`, in time or in the unitary DFT of the slice.
    ///
    /// `p` may be `f64::INFINITY`. For the Fourier side, the slice of length `L`
    /// is transformed with the unitary length-`L` DFT; this is `F_n` on `D_n`
    /// and `F_n^+` on `D_n^+`, and moduli do not depend on where the slice sits.
    pub fn norm(&self, domain: Domain, p: f64, space: Space) -> f64 {
        let slice = self.slice(domain.lo(), domain.hi());
        match space {
            Space::Time => lp_norm(&slice, p),
            Space::Fourier => lp_norm(&fourier::unitary_dft(&slice), p),
        }
    }

    /// `⟨self, other⟩ = Σ_{τ ∈ domain} conj(self_τ) other_τ`.
    pub fn inner(&self, other: &Signal, domain: Domain) -> C64 {
        domain
            .indices()
            .map(|t| self.at(t).conj() * other.at(t))
            .sum()
    }
}

/// `ℓ_p` norm of a complex vector; `p = ∞` gives the max modulus.
pub fn lp_norm(v: &[C64], p: f64) -> f64 {
    assert!(p >= 1.0, "p must be at least 1");
    if p.is_infinite() {
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else if p == 1.0 {
        v.iter().map(|z| z.norm()).sum()
    } else if p == 2.0 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    } else {
        v.iter()
            .map(|z| z.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

//! Unitary discrete Fourier transforms on `D_n` and `D_n^+`.
//!
//! Sign convention: the forward transform uses the negative exponent,
//! `(F_n x)_k = (2n+1)^{-1/2} Σ_{τ ∈ D_n} exp(-i 2π k τ / (2n+1)) x_τ`.
//! Norms and unitarity do not depend on this choice.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::signal::{Signal, C64};

/// Sign of the exponent in the forward transform.
pub const FORWARD_SIGN: f64 = -1.0;

/// Output length at or below which convolution is computed by direct summation.
pub const DIRECT_CONVOLUTION_MAX: usize = 64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized in-place FFT; `inverse` flips the exponent sign.
pub fn fft_in_place(buf: &mut [C64], inverse: bool) {
    if buf.len() <= 1 {
        return;
    }
    plan(buf.len(), inverse).process(buf);
}

/// Bilateral or unilateral indexing of a [`Spectrum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// Bins `k ∈ D_n`, stored from `-n` to `n`.
    Bilateral,
    /// Bins `k ∈ D_n^+`, stored from `0` to `n`.
    Unilateral,
}

/// Output of [`dft`] or [`dft_unilateral`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    coeffs: Vec<C64>,
    convention: Convention,
}

impl Spectrum {
    pub fn new(coeffs: Vec<C64>, convention: Convention) -> Self {
        if convention == Convention::Bilateral {
            assert!(coeffs.len() % 2 == 1, "bilateral spectrum has odd length");
        }
        Spectrum { coeffs, convention }
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// The `n` of `D_n` or `D_n^+`.
    pub fn radius(&self) -> usize {
        match self.convention {
            Convention::Bilateral => (self.coeffs.len() - 1) / 2,
            Convention::Unilateral => self.coeffs.len() - 1,
        }
    }

    /// Bin `k`; panics when out of range.
    pub fn bin(&self, k: i64) -> C64 {
        let offset = match self.convention {
            Convention::Bilateral => self.radius() as i64,
            Convention::Unilateral => 0,
        };
        self.coeffs[(k + offset) as usize]
    }
}

/// Unitary DFT of a length-`L` vector, indexed `0..L` in both domains.
pub fn unitary_dft(v: &[C64]) -> Vec<C64> {
    let mut buf = v.to_vec();
    fft_in_place(&mut buf, false);
    let s = (v.len().max(1) as f64).sqrt().recip();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Inverse of [`unitary_dft`].
pub fn unitary_idft(v: &[C64]) -> Vec<C64> {
    let mut buf = v.to_vec();
    fft_in_place(&mut buf, true);
    let s = (v.len().max(1) as f64).sqrt().recip();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// `F_n` on a vector ordered `τ = -n..=n`; output ordered `k = -n..=n`.
pub fn centered_dft(v: &[C64]) -> Vec<C64> {
    centered(v, false)
}

/// Inverse of [`centered_dft`].
pub fn centered_idft(v: &[C64]) -> Vec<C64> {
    centered(v, true)
}

fn centered(v: &[C64], inverse: bool) -> Vec<C64> {
    let len = v.len();
    assert!(len % 2 == 1, "centered transform needs odd length");
    let n = len / 2;
    // Index τ ∈ D_n sits at τ mod L, which removes the centering phase.
    let mut buf = vec![C64::new(0.0, 0.0); len];
    for (i, &z) in v.iter().enumerate() {
        buf[(i + len - n) % len] = z;
    }
    fft_in_place(&mut buf, inverse);
    let s = (len as f64).sqrt().recip();
    (0..len).map(|i| buf[(i + len - n) % len] * s).collect()
}

/// `F_n[x]` over `D_n`.
pub fn dft(x: &Signal, n: usize) -> Spectrum {
    let slice = x.slice(-(n as i64), n as i64);
    Spectrum::new(centered_dft(&slice), Convention::Bilateral)
}

/// Inverse bilateral transform, returning a signal supported on `D_n`.
pub fn idft(spec: &Spectrum) -> Signal {
    let n = spec.radius() as i64;
    match spec.convention {
        Convention::Bilateral => Signal::new(-n, centered_idft(&spec.coeffs)),
        Convention::Unilateral => Signal::new(0, unitary_idft(&spec.coeffs)),
    }
}

/// `F_n^+[x]` over `D_n^+`.
pub fn dft_unilateral(x: &Signal, n: usize) -> Spectrum {
    Spectrum::new(unitary_dft(&x.slice(0, n as i64)), Convention::Unilateral)
}

/// Inverse unilateral transform, returning a signal supported on `D_n^+`.
pub fn idft_unilateral(spec: &Spectrum) -> Signal {
    idft(spec)
}

/// Exact linear convolution of two coefficient vectors.
pub fn linear_convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if out_len <= DIRECT_CONVOLUTION_MAX {
        direct_convolve(a, b)
    } else {
        fft_convolve(a, b, out_len)
    }
}

pub(crate) fn direct_convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn fft_convolve(a: &[C64], b: &[C64], out_len: usize) -> Vec<C64> {
    let len = fast_len(out_len);
    let mut fa = vec![C64::new(0.0, 0.0); len];
    let mut fb = vec![C64::new(0.0, 0.0); len];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    fft_in_place(&mut fa, false);
    fft_in_place(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft_in_place(&mut fa, true);
    let s = 1.0 / len as f64;
    fa.truncate(out_len);
    fa.iter_mut().for_each(|z| *z *= s);
    fa
}

/// Smallest 2^a 3^b 5^c at least `n`.
fn fast_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1usize;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut p = p35;
            while p < n {
                p *= 2;
            }
            best = best.min(p);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

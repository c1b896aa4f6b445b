//! Matrix-free convolution operators.
//!
//! * [`ToeplitzOp`] is `T(y)`: filter taps to a slice of `φ * y`.
//! * [`BandedOp`] is `M(φ)`: a slice of observations to a slice of `φ * y`.
//! * [`CirculantOp`] is `C(φ)`: circular convolution with the zero-padded
//!   filter, diagonalized by the DFT.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fourier::{self, centered_dft, centered_idft, fft_in_place};
use crate::signal::{Domain, Signal, C64};

/// Default number of power iterations in [`operator_norm`].
pub const POWER_ITERS: usize = 50;

/// Relative change between successive power-iteration estimates treated as converged.
pub const POWER_TOL: f64 = 1e-8;

/// Products below this many multiply-adds are evaluated by direct summation.
const DIRECT_WORK_MAX: usize = 4096;

/// A complex linear map with its adjoint.
pub trait LinearOperator: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;

    /// `A x`; panics on a dimension mismatch.
    fn apply(&self, x: &[C64]) -> Vec<C64>;

    /// `Aᴴ r`; panics on a dimension mismatch.
    fn adjoint(&self, r: &[C64]) -> Vec<C64>;

    /// Frobenius norm, computed column by column unless overridden.
    fn frobenius_norm(&self) -> f64 {
        let mut e = vec![C64::new(0.0, 0.0); self.input_dim()];
        let mut acc = 0.0;
        for j in 0..e.len() {
            e[j] = C64::new(1.0, 0.0);
            acc += self.apply(&e).iter().map(|z| z.norm_sqr()).sum::<f64>();
            e[j] = C64::new(0.0, 0.0);
        }
        acc.sqrt()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// `T(y)`: maps taps of a filter supported on `filter` to `[φ * y]` on `output`.
///
/// Only the observations on `[output.lo - filter.hi, output.hi - filter.lo]`
/// are read.
#[derive(Clone, Debug)]
pub struct ToeplitzOp {
    filter: Domain,
    output: Domain,
    /// Observations over the needed index range.
    ys: Vec<C64>,
    fft: Option<FftTables>,
}

#[derive(Clone, Debug)]
struct FftTables {
    len: usize,
    /// Transform of `ys`.
    y_hat: Vec<C64>,
    /// Transform of `conj(ys)` reversed.
    g_hat: Vec<C64>,
}

impl ToeplitzOp {
    /// General geometry; fails when `y` does not cover the needed range.
    pub fn new(y: &Signal, filter: Domain, output: Domain) -> Result<Self> {
        let lo = output.lo() - filter.hi();
        let hi = output.hi() - filter.lo();
        y.require(lo, hi)?;
        Ok(Self::from_slice(y.slice(lo, hi), filter, output))
    }

    /// Bilateral geometry of `(2n+1) x (2m+1)`, filters on `D_m`, output on `D_n`.
    pub fn symmetric(y: &Signal, m: usize, n: usize) -> Result<Self> {
        Self::new(y, Domain::symmetric(m), Domain::symmetric(n))
    }

    fn from_slice(ys: Vec<C64>, filter: Domain, output: Domain) -> Self {
        let fl = filter.len();
        let ol = output.len();
        let fft = if fl * ol > DIRECT_WORK_MAX {
            let len = (fl.max(ol) + ys.len() - 1).next_power_of_two();
            let mut y_hat = vec![C64::new(0.0, 0.0); len];
            y_hat[..ys.len()].copy_from_slice(&ys);
            fft_in_place(&mut y_hat, false);
            let mut g_hat = vec![C64::new(0.0, 0.0); len];
            for (g, y) in g_hat.iter_mut().zip(ys.iter().rev()) {
                *g = y.conj();
            }
            fft_in_place(&mut g_hat, false);
            Some(FftTables { len, y_hat, g_hat })
        } else {
            None
        };
        ToeplitzOp {
            filter,
            output,
            ys,
            fft,
        }
    }

    pub fn filter_domain(&self) -> Domain {
        self.filter
    }

    pub fn output_domain(&self) -> Domain {
        self.output
    }

    /// `T(y) φ` with a dimension check.
    pub fn try_apply(&self, phi: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.filter.len(), phi.len())?;
        let fl = self.filter.len();
        let ol = self.output.len();
        Ok(match &self.fft {
            None => (0..ol)
                .map(|r| {
                    // y index for tap i is r + fl - 1 - i
                    phi.iter()
                        .enumerate()
                        .map(|(i, p)| p * self.ys[r + fl - 1 - i])
                        .sum()
                })
                .collect(),
            Some(t) => {
                let out = circular_product(phi, &t.y_hat, t.len);
                out[fl - 1..fl - 1 + ol].to_vec()
            }
        })
    }

    /// `T(y)ᴴ r` with a dimension check.
    pub fn try_adjoint(&self, r: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.output.len(), r.len())?;
        let fl = self.filter.len();
        let ol = self.output.len();
        Ok(match &self.fft {
            None => (0..fl)
                .map(|i| {
                    r.iter()
                        .enumerate()
                        .map(|(k, v)| self.ys[k + fl - 1 - i].conj() * v)
                        .sum()
                })
                .collect(),
            Some(t) => {
                let out = circular_product(r, &t.g_hat, t.len);
                out[ol - 1..ol - 1 + fl].to_vec()
            }
        })
    }

    /// `‖T(y)‖_F² = Σ_{τ ∈ filter} ‖Δ^τ y‖²` over the output domain.
    pub fn frobenius_sq(&self) -> f64 {
        let fl = self.filter.len();
        let ol = self.output.len();
        // Column i reads ys[fl-1-i .. fl-1-i+ol].
        let mut prefix = Vec::with_capacity(self.ys.len() + 1);
        prefix.push(0.0);
        for y in &self.ys {
            prefix.push(prefix.last().unwrap() + y.norm_sqr());
        }
        (0..fl)
            .map(|i| {
                let a = fl - 1 - i;
                prefix[a + ol] - prefix[a]
            })
            .sum()
    }

    #[cfg(test)]
    fn to_dense(&self) -> Vec<Vec<C64>> {
        let fl = self.filter.len();
        (0..self.output.len())
            .map(|r| (0..fl).map(|i| self.ys[r + fl - 1 - i]).collect())
            .collect()
    }
}

/// First `len` entries of the circular convolution of `x` (zero-padded) with a
/// kernel given by its length-`len` transform.
fn circular_product(x: &[C64], kernel_hat: &[C64], len: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); len];
    buf[..x.len()].copy_from_slice(x);
    fft_in_place(&mut buf, false);
    for (b, k) in buf.iter_mut().zip(kernel_hat) {
        *b *= k;
    }
    fft_in_place(&mut buf, true);
    let s = 1.0 / len as f64;
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

impl LinearOperator for ToeplitzOp {
    fn input_dim(&self) -> usize {
        self.filter.len()
    }

    fn output_dim(&self) -> usize {
        self.output.len()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.try_apply(x).expect("ToeplitzOp::apply dimension")
    }

    fn adjoint(&self, r: &[C64]) -> Vec<C64> {
        self.try_adjoint(r).expect("ToeplitzOp::adjoint dimension")
    }

    fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }
}

/// `M(φ)`: maps `[y]_{-m-n}^{m+n}` to `[φ * y]_{-n}^{n}` for `φ` on `D_m`.
#[derive(Clone, Debug)]
pub struct BandedOp {
    phi: Vec<C64>,
    n: usize,
}

impl BandedOp {
    /// `phi` holds taps `φ_{-m}, ..., φ_m`.
    pub fn new(phi: Vec<C64>, n: usize) -> Result<Self> {
        if phi.len() % 2 == 0 {
            return Err(Error::InvalidConfig(
                "bilateral filter needs an odd number of taps".into(),
            ));
        }
        Ok(BandedOp { phi, n })
    }

    pub fn m(&self) -> usize {
        self.phi.len() / 2
    }

    /// `(2n+1) ‖φ‖²`.
    pub fn frobenius_sq(&self) -> f64 {
        (2 * self.n + 1) as f64 * self.phi.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

impl LinearOperator for BandedOp {
    fn input_dim(&self) -> usize {
        2 * self.m() + 2 * self.n + 1
    }

    fn output_dim(&self) -> usize {
        2 * self.n + 1
    }

    fn apply(&self, y: &[C64]) -> Vec<C64> {
        assert_eq!(y.len(), self.input_dim(), "BandedOp::apply dimension");
        let full = fourier::linear_convolve(&self.phi, y);
        let fl = self.phi.len();
        full[fl - 1..fl - 1 + self.output_dim()].to_vec()
    }

    fn adjoint(&self, r: &[C64]) -> Vec<C64> {
        assert_eq!(r.len(), self.output_dim(), "BandedOp::adjoint dimension");
        // Row k of M(φ) holds φ_m..φ_{-m} in columns k..k+2m.
        let fl = self.phi.len();
        let mut out = vec![C64::new(0.0, 0.0); self.input_dim()];
        for (k, v) in r.iter().enumerate() {
            for j in 0..fl {
                out[k + j] += self.phi[fl - 1 - j].conj() * v;
            }
        }
        out
    }

    fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }
}

/// `C(φ)` of size `2m+2n+1`, applied through its DFT diagonalization.
#[derive(Clone, Debug)]
pub struct CirculantOp {
    eigenvalues: Vec<C64>,
}

impl CirculantOp {
    pub fn new(phi: &[C64], n: usize) -> Self {
        CirculantOp {
            eigenvalues: circulant_eigenvalues(phi, n),
        }
    }

    /// Eigenvalues ordered by frequency `k = -(m+n), ..., m+n`.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }
}

impl LinearOperator for CirculantOp {
    fn input_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn output_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(
            v.len(),
            self.eigenvalues.len(),
            "CirculantOp::apply dimension"
        );
        let mut f = centered_dft(v);
        for (z, l) in f.iter_mut().zip(&self.eigenvalues) {
            *z *= l;
        }
        centered_idft(&f)
    }

    fn adjoint(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(
            v.len(),
            self.eigenvalues.len(),
            "CirculantOp::adjoint dimension"
        );
        let mut f = centered_dft(v);
        for (z, l) in f.iter_mut().zip(&self.eigenvalues) {
            *z *= l.conj();
        }
        centered_idft(&f)
    }
}

/// Zero-pad taps on `D_m` to `D_{m+n}`.
fn zero_pad(phi: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); phi.len() + 2 * n];
    out[n..n + phi.len()].copy_from_slice(phi);
    out
}

/// `√(2m+2n+1) · F_{m+n}[φ̃]`, the spectrum of `C(φ)`, ordered `k = -(m+n)..=m+n`.
pub fn circulant_eigenvalues(phi: &[C64], n: usize) -> Vec<C64> {
    assert!(
        phi.len() % 2 == 1,
        "bilateral filter needs an odd number of taps"
    );
    let padded = zero_pad(phi, n);
    let scale = (padded.len() as f64).sqrt();
    centered_dft(&padded)
        .into_iter()
        .map(|z| z * scale)
        .collect()
}

/// `‖u‖^F_{m+n,1}`: Fourier `ℓ1` norm of the filter zero-padded to `D_{m+n}`.
pub fn zero_pad_fourier_l1(u: &[C64], n: usize) -> f64 {
    assert!(
        u.len() % 2 == 1,
        "bilateral filter needs an odd number of taps"
    );
    centered_dft(&zero_pad(u, n)).iter().map(|z| z.norm()).sum()
}

/// Right-hand side of the zero-padding inequality,
/// `‖u‖^F_{m,1} · √(1 + κ²_{m,n}) · (log(m+n+1) + 3)`.
pub fn zero_padding_bound(u: &[C64], n: usize) -> f64 {
    let m = u.len() / 2;
    let kappa2 = (2 * n + 1) as f64 / (2 * m + 1) as f64;
    let l1: f64 = centered_dft(u).iter().map(|z| z.norm()).sum();
    l1 * (1.0 + kappa2).sqrt() * (((m + n + 1) as f64).ln() + 3.0)
}

/// Largest singular value of `op` by power iteration on `AᴴA`.
///
/// The start vector is a fixed-seed complex Gaussian, so the result is
/// deterministic. When successive estimates do not settle within
/// [`POWER_TOL`] after `iters` steps, the Frobenius norm is returned instead,
/// which is always an upper bound.
pub fn operator_norm(op: &dyn LinearOperator, iters: usize) -> f64 {
    assert!(iters >= 1);
    let dim = op.input_dim();
    if dim == 0 || op.output_dim() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_70e9);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| {
            C64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .collect();
    normalize(&mut v);
    let mut prev = 0.0;
    for _ in 0..iters {
        let av = op.apply(&v);
        let est = av.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if est == 0.0 {
            // v fell into the kernel; the Frobenius norm is a safe answer.
            return op.frobenius_norm();
        }
        if (est - prev).abs() <= POWER_TOL * est {
            return est;
        }
        prev = est;
        v = op.adjoint(&av);
        normalize(&mut v);
    }
    op.frobenius_norm()
}

fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
}

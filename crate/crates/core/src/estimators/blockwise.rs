//! Blockwise application of two-sided fits along a long signal.

use super::{estimate, fit, EstimatorConfig, Filter, Mode};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::signal::{Domain, Signal};
use crate::solvers::SolverOptions;

/// Denoise every index of `[y.start + m, y.end − m]`.
///
/// Blocks are centered at points `c` with `y` known on `c ± (m+n)`; each block
/// fits its own filter on `D_m` against the window `c ± n`. Consecutive
/// centers are `2(n − m/2) + 1` apart, and every output index is estimated
/// with the filter of the nearest center, so edge indices reuse the outermost
/// block. When no full block fits, a single fit with the largest admissible
/// window is used.
pub fn blockwise_denoise(
    y: &Signal,
    m: usize,
    n: usize,
    mode: Mode,
    solver: &SolverOptions,
    exec: Execution,
) -> Result<Signal> {
    if y.is_empty() {
        return Err(Error::InvalidConfig("empty signal".into()));
    }
    let (lo, hi) = (y.start(), y.end());
    let (mi, ni) = (m as i64, n as i64);
    if hi - lo < 2 * mi {
        return Err(Error::Coverage {
            need_lo: lo,
            need_hi: lo + 2 * mi,
            have_lo: lo,
            have_hi: hi,
        });
    }
    let out = Domain::interval(lo + mi, hi - mi)?;

    let (centers, window) = if hi - lo >= 2 * (mi + ni) {
        let step = 2 * (ni - mi / 2).max(0) + 1;
        let first = lo + mi + ni;
        let last = hi - mi - ni;
        let mut c: Vec<i64> = (0..)
            .map(|k| first + k * step)
            .take_while(|&t| t <= last)
            .collect();
        if *c.last().expect("at least one center") != last {
            c.push(last);
        }
        (c, n)
    } else {
        let w = ((hi - lo) / 2 - mi) as usize;
        (vec![lo + mi + w as i64], w)
    };

    let cfg = EstimatorConfig {
        m,
        n: window,
        h: None,
        mode,
        solver: *solver,
    };
    let filters: Vec<Result<Filter>> =
        exec.map_indices(centers.len(), |k| fit(&y.shift(-centers[k]), &cfg));
    let filters: Vec<Filter> = filters.into_iter().collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(out.len());
    let mut k = 0;
    let mut seg_start = out.lo();
    while seg_start <= out.hi() {
        // Indices closer to center k than to center k+1 (ties go to k).
        let seg_end = match centers.get(k + 1) {
            Some(&next) => ((centers[k] + next).div_euclid(2)).min(out.hi()),
            None => out.hi(),
        };
        if seg_end >= seg_start {
            let est = estimate(&filters[k], y, Domain::interval(seg_start, seg_end)?)?;
            values.extend_from_slice(est.values());
            seg_start = seg_end + 1;
        }
        k += 1;
    }
    Ok(Signal::new(out.lo(), values))
}

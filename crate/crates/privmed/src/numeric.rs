//! Quadrature and root finding used by the distribution oracles.

/// Result of a piecewise quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// `int_a^b f`, split at `breaks` that fall strictly inside `(a, b)`.
///
/// Non-finite integrand values (an endpoint singularity hit by the
/// abscissa underflowing onto it) count as zero.
pub fn integrate_split(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Integral {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(a);
    edges.extend(pts);
    edges.push(b);
    let g = |t: f64| {
        let v = f(t);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut out = Integral { value: 0.0, error: 0.0 };
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let r = quadrature::integrate(g, w[0], w[1], tol);
        out.value += r.integral;
        out.error += r.error_estimate.abs();
    }
    out
}

/// Smallest `x` in `[lo, hi]` (to floating-point resolution) with `pred(x)`,
/// given `pred` monotone, `pred(hi)` true and `pred(lo)` false.
pub fn bisect_first(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..2100 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

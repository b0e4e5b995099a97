//! Shared numerical kernels. Every integral in the crate goes through
//! [`integrate`] so tolerances stay coherent across modules.

/// Absolute tolerance of the adaptive Simpson integrator.
pub const QUAD_TOL: f64 = 1e-10;
/// Maximum recursion depth of the adaptive Simpson integrator.
pub const QUAD_MAX_DEPTH: u32 = 40;
/// Bisection tolerance in the argument.
pub const ROOT_TOL: f64 = 1e-10;
/// Grid step used to bracket roots before bisecting.
pub const BRACKET_STEP: f64 = 1e-3;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || b <= m {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over `[a, b]` with the crate tolerance, splitting at every
/// point of `breaks` that falls strictly inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    integrate_tol(f, a, b, breaks, QUAD_TOL)
}

pub fn integrate_tol<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut sum = Neumaier::default();
    let mut lo = a;
    for &x in breaks.iter().filter(|&&x| x > a && x < b) {
        sum.add(adaptive_simpson(&f, lo, x, tol, QUAD_MAX_DEPTH));
        lo = x;
    }
    sum.add(adaptive_simpson(&f, lo, b, tol, QUAD_MAX_DEPTH));
    sum.value()
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, assuming `pred` flips from
/// false to true once. `lo` is returned when the predicate already holds there,
/// `hi` when it never flips.
pub fn bisect_predicate<P: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, pred: P, tol: f64) -> f64 {
    if pred(lo) {
        return lo;
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
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

/// Root of a continuous `f` with `f(lo)` and `f(hi)` of opposite sign (or zero).
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let negative_at_lo = flo < 0.0;
    bisect_predicate(lo, hi, |x| (f(x) >= 0.0) == negative_at_lo, tol)
}

/// First grid cell `[x_k, x_{k+1}]` of `[lo, hi]` (step `step`) on which `f`
/// changes sign. Cells where `f` hits zero exactly count as a change.
pub fn grid_bracket<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Option<(f64, f64)> {
    let cells = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..=cells {
        let x1 = if k == cells { hi } else { lo + k as f64 * step };
        let f1 = f(x1);
        if f0 == 0.0 || f0.signum() != f1.signum() {
            return Some((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    None
}

/// Uniform grid of `count` points spanning `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|k| if k + 1 == count { hi } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 })
            .collect(),
    }
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum of a slice with compensation.
pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Binomial coefficient as a float. Exact for the player counts used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// `x^k` for small non-negative integer powers, exact for `0^0 = 1`.
pub fn powi(x: f64, k: usize) -> f64 {
    x.powi(k as i32)
}

/// Euclidean projection onto the probability simplex `{a >= 0, sum a = 1}`.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&yi| (yi - theta).max(0.0)).collect()
}

/// Maximizes `f` over `[lo, hi]` by a coarse scan followed by golden-section
/// refinement around the best scan point. Returns `(x, f(x))`.
pub fn maximize_scan_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, scan: usize, iters: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let xs = linspace(lo, hi, scan.max(2));
    let mut best = (lo, f64::NEG_INFINITY);
    let mut best_k = 0;
    for (k, &x) in xs.iter().enumerate() {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let mut a = xs[best_k.saturating_sub(1)];
    let mut b = xs[(best_k + 1).min(xs.len() - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

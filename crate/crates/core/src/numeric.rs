//! Small numeric kernels shared across modules: pairwise summation,
//! trimmed sums, quadrature and a few special functions.

use statrs::function::gamma::ln_gamma;

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (tree) summation; the canonical summation order of the crate.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sum of a sorted slice that is exactly odd under `x -> -x`: mirrored pairs
/// `x_i + x_{m-1-i}` are added first, then summed pairwise.
pub fn mirrored_sum(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    let pairs: Vec<f64> = (0..m.div_ceil(2)).map(|i| if 2 * i + 1 == m { sorted[i] } else { sorted[i] + sorted[m - 1 - i] }).collect();
    pairwise_sum(&pairs)
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Sum of the order statistics `k+1 ..= n-k` of `buf`, computed by selection.
///
/// `buf` is reordered. The result does not depend on how ties are broken, but
/// the summation order follows the post-selection layout, so agreement with a
/// fully sorted sum is up to rounding.
pub fn trimmed_sum_unstable(buf: &mut [f64], k: usize) -> f64 {
    let n = buf.len();
    debug_assert!(2 * k < n);
    if k > 0 {
        buf.select_nth_unstable_by(k, f64::total_cmp);
        let upper = &mut buf[k..];
        let last = upper.len() - k - 1;
        upper.select_nth_unstable_by(last, f64::total_cmp);
    }
    pairwise_sum(&buf[k..n - k])
}

/// Globally adaptive Gauss-Kronrod (7-15) quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    integrate_pieces(f, &[a, b], rel_tol)
}

const MAX_INTERVALS: usize = 4000;

/// Global adaptive quadrature over `knots[0]..knots[last]`, starting from the
/// given subintervals and always bisecting the one with the largest error.
/// Stops at `rel_tol` relative error, at the rounding floor, or after
/// `MAX_INTERVALS` subintervals.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, knots: &[f64], rel_tol: f64) -> f64 {
    let mut pieces: Vec<(f64, f64, f64, f64, f64)> = knots
        .windows(2)
        .map(|w| {
            let (v, e, abs) = gk15(f, w[0], w[1]);
            (w[0], w[1], v, e, abs)
        })
        .collect();
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        let abs: f64 = pieces.iter().map(|p| p.4).sum();
        let floor = 50.0 * f64::EPSILON * abs;
        if err <= (rel_tol * total.abs()).max(floor) || pieces.len() >= MAX_INTERVALS {
            return total;
        }
        let (worst, _) = pieces.iter().enumerate().fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (a, b, _, _, _) = pieces.swap_remove(worst);
        let m = 0.5 * (a + b);
        if !(m > a && m < b) {
            // Interval cannot be split further in floating point.
            return total;
        }
        let (l, el, al) = gk15(f, a, m);
        let (r, er, ar) = gk15(f, m, b);
        pieces.push((a, m, l, el, al));
        pieces.push((m, b, r, er, ar));
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (lo, hi) = (f(c - x), f(c + x));
        kronrod += WGK[j] * (lo + hi);
        abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs(), abs * h.abs())
}

/// Integral over `[a, inf)` via the substitution `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: &F, a: f64, rel_tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - t;
        let x = a + t / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // Split so the adaptive rule resolves mass both near `a` and in the tail.
    integrate_pieces(&g, &[0.0, 0.5, 0.9, 0.99, 0.999, 1.0], rel_tol)
}

pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `E ||W||_2` for `W ~ N(0, I_d)`.
pub fn expected_gaussian_norm(d: usize) -> f64 {
    let d = d as f64;
    (std::f64::consts::SQRT_2.ln() + ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
}

//! Independent numerical oracles for the test suites. Nothing here shares code
//! with the solver crates: scalar maximization uses golden-section search,
//! matrix norms use nalgebra's SVD.

use nalgebra::{DMatrix, SymmetricEigen};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizer of a concave function on `[lo, hi]`.
///
/// Golden-section search narrows the bracket until rounding noise in `f`
/// dominates; the remaining bracket is then bisected on the sign of a central
/// difference, which resolves the argmax well below `sqrt(eps)`.
pub fn argmax_concave(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    assert!(lo <= hi, "empty bracket [{lo}, {hi}]");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if (b - a) <= 1e-7 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // widen slightly: golden section may have discarded the true argmax when
    // two evaluations tied within rounding
    let w = (b - a).max(1e-9);
    let (mut a, mut b) = ((a - 4.0 * w).max(lo), (b + 4.0 * w).min(hi));
    let slope = |x: f64| {
        let h = 1e-6 * (1.0 + x.abs());
        let (l, r) = ((x - h).max(lo), (x + h).min(hi));
        (f(r) - f(l)) / (r - l)
    };
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= 1e-15 * (1.0 + mid.abs()) {
            break;
        }
        if slope(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut x = 0.5 * (a + b);
    // Difference quotients blur kinks. For concave f a strict increase
    // f(x ± δ) > f(x) beyond rounding proves the argmax lies that way, so a
    // shrinking pattern search pins nonsmooth maximizers.
    let mut delta = 1e-6 * (1.0 + x.abs());
    while delta > 1e-16 * (1.0 + x.abs()) {
        for _ in 0..64 {
            let fx = f(x);
            let noise = 8.0 * f64::EPSILON * (1.0 + fx.abs());
            let up = (x + delta).min(hi);
            let down = (x - delta).max(lo);
            if f(up) > fx + noise {
                x = up;
            } else if f(down) > fx + noise {
                x = down;
            } else {
                break;
            }
        }
        delta *= 0.5;
    }
    // endpoints win when the function is monotone on the bracket
    let mut best = (x, f(x));
    for e in [lo, hi] {
        let fe = f(e);
        if fe > best.1 {
            best = (e, fe);
        }
    }
    best.0
}

pub fn argmin_convex(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    argmax_concave(|x| -f(x), lo, hi)
}

/// `sup_z β z − f(z)` over `[lo, hi]`: a grid scan followed by golden refinement
/// around the best grid point.
pub fn numeric_conjugate(f: impl Fn(f64) -> f64, beta: f64, lo: f64, hi: f64) -> f64 {
    let g = |z: f64| beta * z - f(z);
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for k in 0..=steps {
        let v = g(lo + h * k as f64);
        if v > best_v {
            best_v = v;
            best = k;
        }
    }
    let a = (lo + h * (best as f64 - 1.0)).max(lo);
    let b = (lo + h * (best as f64 + 1.0)).min(hi);
    let z = argmax_concave(g, a, b);
    g(z).max(best_v)
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// Squared largest singular value.
pub fn spectral_norm_sq(rows: &[Vec<f64>]) -> f64 {
    let m = to_matrix(rows);
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let s = m.singular_values().max();
    s * s
}

/// `max_{|I|=m, |J|=q} ‖A_I^J‖₂²` by visiting every subset pair (bitmask
/// enumeration, so at most 63 rows and columns).
pub fn brute_force_scale_constant(rows: &[Vec<f64>], q: usize, m: usize) -> f64 {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    assert!(n < 64 && p < 64);
    let a = to_matrix(rows);
    let mut best = 0.0f64;
    for rmask in 0u64..(1u64 << n) {
        if rmask.count_ones() as usize != m {
            continue;
        }
        let ri: Vec<usize> = (0..n).filter(|i| rmask >> i & 1 == 1).collect();
        for cmask in 0u64..(1u64 << p) {
            if cmask.count_ones() as usize != q {
                continue;
            }
            let ci: Vec<usize> = (0..p).filter(|j| cmask >> j & 1 == 1).collect();
            let sub = DMatrix::from_fn(ri.len(), ci.len(), |i, j| a[(ri[i], ci[j])]);
            let s = sub.singular_values().max();
            best = best.max(s * s);
        }
    }
    best
}

/// Eigenvalues of a symmetric matrix given as row-major `d × d`.
pub fn symmetric_eigenvalues(d: usize, data: &[f64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(d, d, data);
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Solves a dense square system.
pub fn solve(d: usize, a_row_major: &[f64], b: &[f64]) -> Vec<f64> {
    let a = DMatrix::from_row_slice(d, d, a_row_major);
    let rhs = nalgebra::DVector::from_column_slice(b);
    a.lu().solve(&rhs).expect("nonsingular system").iter().copied().collect()
}

/// Compensated sum written independently of the library's accumulator.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

//! The one-dimensional Poincaré constant
//! `C_p = sup ∫₀¹|v|^p / ∫₀¹|v'|^p` over `v(0) = v(1) = 0`.
//!
//! The discrete Rayleigh quotient on a uniform grid is minimized by the
//! inverse power method for the p-Laplacian: starting from `sin(πt)`, each
//! step solves `-(|w'|^{p-2} w')' = |v|^{p-2} v` with zero boundary values and
//! normalizes. In one dimension that solve reduces to a single monotone
//! scalar equation for the flux at the left end, found by bisection.

use crate::error::{Error, Result};

pub const DEFAULT_CELLS: usize = 2000;
const MAX_ITERATIONS: usize = 1000;

/// `C_p` on a grid of `n` cells.
pub fn poincare_constant_with(p: f64, n: usize) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p}: the Poincaré constant needs p in (1, inf)")));
    }
    if n < 4 {
        return Err(Error::InvalidArgument(format!("{n} cells is too coarse")));
    }
    let h = 1.0 / n as f64;
    let mut v: Vec<f64> = (1..n).map(|i| (std::f64::consts::PI * i as f64 * h).sin()).collect();
    let mut lambda = rayleigh(&v, p, h);
    for _ in 0..MAX_ITERATIONS {
        let f: Vec<f64> = v.iter().map(|x| phi(*x, p)).collect();
        let mut w = solve_dirichlet(&f, p, h);
        let scale = w.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
        w.iter_mut().for_each(|x| *x /= scale);
        let next = rayleigh(&w, p, h);
        v = w;
        let done = (lambda - next).abs() <= 1e-13 * next;
        lambda = next;
        if done {
            break;
        }
    }
    Ok(1.0 / lambda)
}

/// `C_p` on the default grid.
pub fn poincare_constant(p: f64) -> Result<f64> {
    poincare_constant_with(p, DEFAULT_CELLS)
}

#[inline]
fn phi(x: f64, p: f64) -> f64 {
    x.abs().powf(p - 1.0).copysign(x)
}

/// Grid solution of `-(φ_p(w'))' = f`, `w(0) = w(1) = 0`, where `f` holds the
/// interior node values. Node balance gives `φ_p(w'_i) = C - h Σ_{j<=i} f_j`
/// on cell `i`; `C` is fixed by requiring the slopes to sum to zero.
fn solve_dirichlet(f: &[f64], p: f64, h: f64) -> Vec<f64> {
    let n = f.len() + 1;
    let mut g = Vec::with_capacity(n);
    let mut acc = 0.0;
    g.push(0.0);
    for fj in f {
        acc += h * fj;
        g.push(acc);
    }
    let q = 1.0 / (p - 1.0);
    let total = |c: f64| -> f64 { g.iter().map(|gi| phi(c - gi, q + 1.0)).sum() };
    let mut lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let mut w = Vec::with_capacity(n - 1);
    let mut x = 0.0;
    for gi in &g[..n - 1] {
        x += h * phi(c - gi, q + 1.0);
        w.push(x);
    }
    w
}

/// `Σ|v'|^p h / Σ|v|^p h` with zero boundary values.
fn rayleigh(v: &[f64], p: f64, h: f64) -> f64 {
    let m = v.len();
    let mut num = 0.0;
    for i in 0..=m {
        let left = if i == 0 { 0.0 } else { v[i - 1] };
        let right = if i == m { 0.0 } else { v[i] };
        num += ((right - left) / h).abs().powf(p);
    }
    let den: f64 = v.iter().map(|x| x.abs().powf(p)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// First Dirichlet eigenvalue of the one-dimensional p-Laplacian on
    /// `(0, 1)`: `(p - 1) π_p^p` with `π_p = 2π / (p sin(π/p))`.
    fn closed_form(p: f64) -> f64 {
        let pi_p = 2.0 * PI / (p * (PI / p).sin());
        1.0 / ((p - 1.0) * pi_p.powf(p))
    }

    #[test]
    fn quadratic_case() {
        let c = poincare_constant(2.0).unwrap();
        assert!((c * PI * PI - 1.0).abs() < 1e-3, "{c}");
        let fine = poincare_constant_with(2.0, 4000).unwrap();
        assert!((c - fine).abs() < 1e-4);
    }

    #[test]
    fn other_orders_match_the_p_sine() {
        for p in [1.5, 3.0, 4.0] {
            let c = poincare_constant(p).unwrap();
            let exact = closed_form(p);
            assert!(((c - exact) / exact).abs() < 1e-3, "p={p}: {c} vs {exact}");
        }
    }

    #[test]
    fn scan_around_two_is_monotone_and_exact() {
        let ps = [1.8, 1.9, 1.95, 2.0, 2.05, 2.1, 2.2];
        let cs: Vec<f64> = ps.iter().map(|&p| poincare_constant(p).unwrap()).collect();
        for (p, c) in ps.iter().zip(&cs) {
            assert!(((c - closed_form(*p)) / closed_form(*p)).abs() < 1e-3, "p={p}");
        }
        assert!(cs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(poincare_constant(1.0).is_err());
        assert!(poincare_constant(f64::INFINITY).is_err());
        assert!(poincare_constant(0.5).is_err());
    }

    #[test]
    fn quadratic_dirichlet_solve() {
        // -w'' = 1 gives w = t(1 - t)/2, exact at the nodes
        let n = 8;
        let h = 1.0 / n as f64;
        let w = solve_dirichlet(&vec![1.0; n - 1], 2.0, h);
        for (i, wi) in w.iter().enumerate() {
            let t = (i + 1) as f64 * h;
            assert!((wi - t * (1.0 - t) / 2.0).abs() < 1e-14);
        }
    }
}

//! Composite Gauss–Legendre quadrature on a finite interval.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes per panel. The integrands here are smooth on each panel once the
/// panel count resolves the oscillation, so a modest order is plenty.
pub const ORDER: usize = 8;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed once by Newton
/// iteration on the Legendre polynomial of degree [`ORDER`].
pub fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(ORDER))
}

fn legendre_rule(order: usize) -> Vec<(f64, f64)> {
    let n = order as f64;
    let mut rule = Vec::with_capacity(order);
    for i in 0..order {
        // Chebyshev-like initial guess, descending from +1.
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.reverse();
    rule
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over `[a, b]` split into `panels` equal panels.
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre();
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let mut panel = 0.0;
        for &(x, w) in rule {
            panel += w * f(mid + half * x);
        }
        total += half * panel;
    }
    total
}

/// Outcome of [`adaptive`]: the best estimate and whether it met the tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub converged: bool,
    pub panels: usize,
}

/// Doubles the panel count from `start` until two successive estimates agree
/// to `tolerance` or the next doubling would exceed `max_panels`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    start: usize,
    max_panels: usize,
    tolerance: f64,
) -> Estimate {
    let mut panels = start.max(1);
    let mut coarse = composite(&f, a, b, panels);
    while panels * 2 <= max_panels {
        panels *= 2;
        let fine = composite(&f, a, b, panels);
        if (fine - coarse).abs() <= tolerance {
            return Estimate {
                value: fine,
                converged: true,
                panels,
            };
        }
        coarse = fine;
    }
    Estimate {
        value: coarse,
        converged: false,
        panels,
    }
}

//! Planar-surface kernel: the one-level descent characteristic function φ(θ),
//! the planar hitting coefficients `H^n_k`, and the recurrence coefficients
//! α and γ that build the half-plane Green's function.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use rayon::prelude::*;
use thiserror::Error;

use crate::quadrature;

/// Errors from kernel evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(
        "quadrature for H^{n}_{k} did not reach tolerance {tolerance:e} within {panels} panels \
         (estimate {estimate:e})"
    )]
    QuadratureFailure {
        n: u32,
        k: i64,
        estimate: f64,
        panels: usize,
        tolerance: f64,
    },
    #[error("asymptotic expansion of H^n_k is undefined at k = 0")]
    AsymptoticDomain,
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(&'static str),
}

/// An angle in radians. Everything in this module depends on θ only through
/// `cos θ`, so any real value is accepted and reduced by evenness and
/// periodicity when the reduced value is requested.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);
    pub const PI: Angle = Angle(PI);

    pub fn new(radians: f64) -> Self {
        Angle(radians)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// The equivalent angle in `[0, π]`.
    pub fn reduced(self) -> f64 {
        let t = self.0.rem_euclid(2.0 * PI);
        if t > PI {
            2.0 * PI - t
        } else {
            t
        }
    }
}

impl From<f64> for Angle {
    fn from(radians: f64) -> Self {
        Angle(radians)
    }
}

/// φ(θ) = 2 − cos θ − √((2 − cos θ)² − 1), the root ≤ 1 of
/// φ² − (4 − 2 cos θ) φ + 1 = 0.
pub fn phi(theta: Angle) -> f64 {
    phi_at(theta.radians())
}

#[inline]
pub(crate) fn phi_at(theta: f64) -> f64 {
    let c = theta.cos();
    // (2 − c)² − 1 = (1 − c)(3 − c) = 2 sin²(θ/2)(3 − c), which keeps full
    // relative precision near θ = 0.
    let s = (0.5 * theta).sin();
    2.0 - c - (2.0 * s * s * (3.0 - c)).sqrt()
}

/// Leading two terms of the large-`k` expansion of `H^n_k`:
/// n/(πk²) − n(n² − ½)/(πk⁴).
pub fn h_asymptotic(n: u32, k: i64) -> Result<f64, KernelError> {
    if k == 0 {
        return Err(KernelError::AsymptoticDomain);
    }
    let n = n as f64;
    let k2 = (k as f64) * (k as f64);
    Ok(n / (PI * k2) - n * (n * n - 0.5) / (PI * k2 * k2))
}

/// Σ_{j ≥ from} of the asymptotic expansion, with the power sums evaluated by
/// Euler–Maclaurin. Accurate to well below 1e-9 for `from` ≳ 20.
pub fn h_asymptotic_tail(n: f64, from: u64) -> f64 {
    let j = from.max(1) as f64;
    n / PI * power_tail(2.0, j) - n * (n * n - 0.5) / PI * power_tail(4.0, j)
}

/// Σ_{j ≥ from} j^{-s} for s > 1.
fn power_tail(s: f64, from: f64) -> f64 {
    from.powf(1.0 - s) / (s - 1.0) + 0.5 * from.powf(-s) + s / 12.0 * from.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * from.powf(-s - 3.0)
}

/// α_n(θ): α₀ = 0, α₁ = 1, α_{n+2} = (4 − 2cos θ) α_{n+1} − α_n.
pub fn alpha(n: u32, theta: Angle) -> f64 {
    alpha_from_phi(n, phi(theta))
}

pub(crate) fn alpha_from_phi(n: u32, ph: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as i32;
    if (1.0 - ph * ph).abs() < 1e-6 {
        // Geometric-sum form; equals n exactly at φ = 1.
        return (0..n).map(|j| ph.powi(2 * j + 1 - n)).sum();
    }
    (1.0 - ph.powi(2 * n)) / (1.0 - ph * ph) * ph.powi(1 - n)
}

/// γ^(n)_l(θ): φⁿα_l for 0 < l ≤ n, φˡα_n for l > n > 0, and 0 when either
/// index is non-positive.
pub fn gamma(n: i64, l: i64, theta: Angle) -> f64 {
    gamma_from_phi(n, l, phi(theta))
}

pub(crate) fn gamma_from_phi(n: i64, l: i64, ph: f64) -> f64 {
    if n <= 0 || l <= 0 {
        return 0.0;
    }
    let (lo, hi) = if l <= n { (l, n) } else { (n, l) };
    ph.powi(hi as i32) * alpha_from_phi(lo as u32, ph)
}

/// Settings for the quadrature that evaluates `H^n_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Minimum panel count on `[0, π]`.
    pub panels: usize,
    pub abs_tolerance: f64,
    /// Largest panel count tried before giving up.
    pub max_panels: usize,
}

impl QuadratureSpec {
    pub fn new(panels: usize, abs_tolerance: f64) -> Result<Self, KernelError> {
        if panels == 0 {
            return Err(KernelError::InvalidSpec("panels must be at least 1"));
        }
        if abs_tolerance.is_nan() || abs_tolerance <= 0.0 {
            return Err(KernelError::InvalidSpec("abs_tolerance must be positive"));
        }
        Ok(QuadratureSpec {
            panels,
            abs_tolerance,
            max_panels: 1 << 16,
        })
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            panels: 16,
            abs_tolerance: 1e-12,
            max_panels: 1 << 16,
        }
    }
}

/// Offsets beyond this use [`h_asymptotic`] instead of quadrature.
pub const ASYMPTOTIC_FROM: u64 = 1001;

/// Memo table of planar hitting coefficients `H^n_k`, safe to share across
/// threads. Lookups take a read lock; misses compute outside any lock and
/// then insert.
#[derive(Debug)]
pub struct HTable {
    spec: QuadratureSpec,
    asymptotic_from: u64,
    values: RwLock<HashMap<(u32, u64), f64>>,
}

impl Default for HTable {
    fn default() -> Self {
        HTable::new(QuadratureSpec::default())
    }
}

impl HTable {
    pub fn new(spec: QuadratureSpec) -> Self {
        HTable {
            spec,
            asymptotic_from: ASYMPTOTIC_FROM,
            values: RwLock::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> QuadratureSpec {
        self.spec
    }

    /// Smallest |k| served by the asymptotic expansion.
    pub fn asymptotic_from(&self) -> u64 {
        self.asymptotic_from
    }

    /// Largest level currently cached.
    pub fn max_level(&self) -> u32 {
        self.read().keys().map(|&(n, _)| n).max().unwrap_or(0)
    }

    /// Largest |k| currently cached.
    pub fn max_offset(&self) -> u64 {
        self.read().keys().map(|&(_, k)| k).max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.read().is_empty()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, HashMap<(u32, u64), f64>> {
        self.values.read().unwrap_or_else(|e| e.into_inner())
    }

    /// `H^n_k`, computing and caching it on first use.
    pub fn get(&self, n: u32, k: i64) -> Result<f64, KernelError> {
        let offset = k.unsigned_abs();
        if n == 0 {
            return Ok(if offset == 0 { 1.0 } else { 0.0 });
        }
        if let Some(&v) = self.read().get(&(n, offset)) {
            return Ok(v);
        }
        let v = self.compute(n, offset)?;
        self.values
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert((n, offset), v);
        Ok(v)
    }

    fn compute(&self, n: u32, offset: u64) -> Result<f64, KernelError> {
        if offset >= self.asymptotic_from {
            return h_asymptotic(n, offset as i64);
        }
        let start = self.spec.panels.max(4 * (offset as usize + n as usize));
        let kf = offset as f64;
        let est = quadrature::adaptive(
            |t| (kf * t).cos() * phi_at(t).powi(n as i32),
            0.0,
            PI,
            start,
            self.spec.max_panels.max(start),
            self.spec.abs_tolerance * PI,
        );
        let value = est.value / PI;
        if !est.converged {
            return Err(KernelError::QuadratureFailure {
                n,
                k: offset as i64,
                estimate: value,
                panels: est.panels,
                tolerance: self.spec.abs_tolerance,
            });
        }
        Ok(value)
    }

    /// Fills every `(n, k)` with `1 ≤ n ≤ max_level`, `0 ≤ k ≤ max_offset` in
    /// parallel. Afterwards the table can be read without contention.
    pub fn warm(&self, max_level: u32, max_offset: u64) -> Result<(), KernelError> {
        let missing: Vec<(u32, u64)> = {
            let map = self.read();
            (1..=max_level)
                .flat_map(|n| (0..=max_offset).map(move |k| (n, k)))
                .filter(|key| !map.contains_key(key))
                .collect()
        };
        let computed: Vec<((u32, u64), f64)> = missing
            .into_par_iter()
            .map(|(n, k)| self.compute(n, k).map(|v| ((n, k), v)))
            .collect::<Result<_, _>>()?;
        self.values
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .extend(computed);
        Ok(())
    }
}

/// `H^n_k = (1/π) ∫₀^π cos(kθ) φⁿ(θ) dθ`, memoized in `table`.
pub fn h_coeff(table: &HTable, n: u32, k: i64) -> Result<f64, KernelError> {
    table.get(n, k)
}

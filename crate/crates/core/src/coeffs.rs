//! Boundary coupling coefficients.
//!
//! `D^(k,n)_{m,l}` is the half-plane Green's function: the expected weight
//! that a walk from level `n` places on the site `(m, l)` before reaching
//! level 0, expressed through the planar coefficients `H`. `G` and `P̃` are
//! surface-dependent combinations of `D`.
//!
//! A start below level 0 sees the lower half plane, where every level is
//! measured by its depth. Both half planes share one set of formulas with
//! ordinates mapped through [`Side::level`].

use std::f64::consts::PI;

use crate::kernel::{self, HTable, KernelError, QuadratureSpec};
use crate::quadrature;
use crate::surface::Surface;

/// Which half plane a start point lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn of(n: i64) -> Option<Side> {
        match n.signum() {
            1 => Some(Side::Upper),
            -1 => Some(Side::Lower),
            _ => None,
        }
    }

    /// Distance of ordinate `y` from level 0 on this side; non-positive for
    /// the other half plane.
    #[inline]
    pub fn level(self, y: i64) -> i64 {
        match self {
            Side::Upper => y,
            Side::Lower => -y,
        }
    }
}

#[inline]
fn kron(a: i64, b: i64) -> bool {
    a == b
}

/// `D^(k,n)_{m,l} = Σ_{j=1}^{min(n,l)} H^{2j−1+|l−n|}_{k−m}`, zero when
/// `n ≤ 0` or `l ≤ 0`.
pub fn d_coeff(table: &HTable, k: i64, n: i64, m: i64, l: i64) -> Result<f64, KernelError> {
    if n <= 0 || l <= 0 {
        return Ok(0.0);
    }
    let gap = (l - n).unsigned_abs() as u32;
    let mut sum = 0.0;
    for j in 1..=n.min(l) as u32 {
        sum += table.get(2 * j - 1 + gap, k - m)?;
    }
    Ok(sum)
}

/// `D` evaluated directly as `(1/π) ∫₀^π cos((k−m)θ) γ^(n)_l(θ) dθ`.
///
/// This is an independent route to [`d_coeff`] used for cross-checking; it
/// never touches the `H` table.
pub fn d_coeff_quadrature(
    k: i64,
    n: i64,
    m: i64,
    l: i64,
    spec: QuadratureSpec,
) -> Result<f64, KernelError> {
    if n <= 0 || l <= 0 {
        return Ok(0.0);
    }
    let offset = (k - m).abs();
    let freq = offset as f64;
    let start = spec.panels.max(4 * (offset as usize + n.max(l) as usize));
    let est = quadrature::adaptive(
        |t| (freq * t).cos() * kernel::gamma_from_phi(n, l, kernel::phi_at(t)),
        0.0,
        PI,
        start,
        spec.max_panels.max(start),
        spec.abs_tolerance * PI,
    );
    if !est.converged {
        return Err(KernelError::QuadratureFailure {
            n: (n + l - 1) as u32,
            k: offset,
            estimate: est.value / PI,
            panels: est.panels,
            tolerance: spec.abs_tolerance,
        });
    }
    Ok(est.value / PI)
}

/// Weight of the near-boundary point above `m` in the distribution from a
/// start `depth` levels into `side`.
///
/// Collects the Green's function at every surface point that has
/// `(m, S(m)+1)` as a neighbour: the point below it, and a side neighbour one
/// level higher.
pub(crate) fn boundary_weight(
    s: &Surface,
    table: &HTable,
    k: i64,
    depth: i64,
    side: Side,
    m: i64,
) -> Result<f64, KernelError> {
    let h = |x| s.height_at(x);
    let mut g = d_coeff(table, k, depth, m, side.level(h(m)))?;
    for nb in [m + 1, m - 1] {
        if kron(h(m), h(nb) - 1) {
            g += d_coeff(table, k, depth, nb, side.level(h(nb)))?;
        }
    }
    Ok(g)
}

/// `G^(k,n)_m` for a start above level 0 (`n > 0`); zero otherwise.
pub fn g_coeff(s: &Surface, table: &HTable, k: i64, n: i64, m: i64) -> Result<f64, KernelError> {
    if n <= 0 {
        return Ok(0.0);
    }
    boundary_weight(s, table, k, n, Side::Upper, m)
}

/// `G*^(k,n)_m` for a start below level 0 (`n < 0`); zero otherwise.
///
/// Same geometry as [`g_coeff`] with levels measured downward: the
/// near-boundary point `(m, S(m)+1)` still neighbours the surface point below
/// it and any side neighbour one level higher.
pub fn g_coeff_star(
    s: &Surface,
    table: &HTable,
    k: i64,
    n: i64,
    m: i64,
) -> Result<f64, KernelError> {
    if n >= 0 {
        return Ok(0.0);
    }
    boundary_weight(s, table, k, -n, Side::Lower, m)
}

/// First approximation `P̃_{k,n}(x)`: the Green's function summed over the
/// external neighbours of the surface point `(x, S(x))`.
///
/// For a point on level 0 the term `D^(k,n)_{x,1}` equals `H^n_{k−x}`, which
/// already accounts for the direct planar contribution of `J₀` and the tails.
pub fn tilde_p(s: &Surface, table: &HTable, k: i64, n: i64, x: i64) -> Result<f64, KernelError> {
    let Some(side) = Side::of(n) else {
        return Err(KernelError::InvalidSpec(
            "tilde_p is undefined on level 0; ground points are solved directly",
        ));
    };
    let depth = n.abs();
    let sx = s.height_at(x);
    let mut p = d_coeff(table, k, depth, x, side.level(sx + 1))?;
    for nb in [x - 1, x + 1] {
        if kron(sx, s.height_at(nb) + 1) {
            p += d_coeff(table, k, depth, nb, side.level(sx))?;
        }
    }
    Ok(p)
}

//! The closed boundary system.
//!
//! Every hitting distribution from a start above (below) level 0 is the
//! first approximation `P̃` plus a linear combination of the distributions
//! from the near-boundary points `(m, S(m)+1)` and the ground points `(j, 0)`,
//! `j ∈ J`. Writing that identity at each near-boundary point, and the
//! four-neighbour mean at each ground point, closes a square system whose
//! matrix does not depend on the target abscissa `x`. It is factored once and
//! back-substituted per `x`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coeffs::{self, Side};
use crate::kernel::{self, HTable, KernelError};
use crate::surface::{PointKind, Surface};

/// Pivots smaller than this mark the system as singular.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Default margin added on each side of `[−M, M]` for the target window.
pub const DEFAULT_MARGIN: i64 = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("boundary system for surface {surface} is singular (pivot {pivot:e})")]
    Singular { surface: String, pivot: f64 },
    #[error("internal start point ({0}, {1})")]
    InternalStart(i64, i64),
    #[error("empty window {0}..{1}")]
    EmptyWindow(i64, i64),
    #[error("bad window `{0}`: expected `lo..hi`")]
    BadWindow(String),
}

/// A system unknown: the distribution from a near-boundary point above `m`,
/// or from the ground point `(j, 0)`. When `S(m) = −1` the near-boundary point
/// is itself a ground point and appears only as `Ground(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum UnknownIndex {
    NearBoundary(i64),
    Ground(i64),
}

impl UnknownIndex {
    /// Lattice point carrying this unknown.
    pub fn point(self, s: &Surface) -> (i64, i64) {
        match self {
            UnknownIndex::NearBoundary(m) => (m, s.height_at(m) + 1),
            UnknownIndex::Ground(j) => (j, 0),
        }
    }
}

/// Inclusive range of target abscissae.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct XWindow {
    pub lo: i64,
    pub hi: i64,
}

impl XWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self, SolveError> {
        if lo > hi {
            return Err(SolveError::EmptyWindow(lo, hi));
        }
        Ok(XWindow { lo, hi })
    }

    /// `[−M − margin, M + margin]`.
    pub fn around(s: &Surface, margin: i64) -> Self {
        let m = s.half_width() as i64;
        XWindow {
            lo: -m - margin.max(0),
            hi: m + margin.max(0),
        }
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn xs(&self) -> impl Iterator<Item = i64> + Clone {
        self.lo..=self.hi
    }

    fn column(&self, x: i64) -> Option<usize> {
        self.contains(x).then(|| (x - self.lo) as usize)
    }
}

impl fmt::Display for XWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl FromStr for XWindow {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SolveError::BadWindow(s.to_string());
        let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        XWindow::new(lo, hi)
    }
}

/// Right-hand-side contribution of one row, evaluated per target `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RhsTerm {
    /// A neighbouring surface point: `weight · δ_{at,x}`.
    Kronecker { at: i64, weight: f64 },
    /// `weight · P̃_{k,n}(x)`.
    Tilde { k: i64, n: i64, weight: f64 },
}

/// The assembled and factored boundary system for one surface.
pub struct BoundarySystem<'a> {
    surface: &'a Surface,
    table: &'a HTable,
    unknowns: Vec<UnknownIndex>,
    index: HashMap<UnknownIndex, usize>,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    rhs: Vec<Vec<RhsTerm>>,
}

impl fmt::Debug for BoundarySystem<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundarySystem")
            .field("surface", &self.surface.to_string())
            .field("unknowns", &self.unknowns)
            .finish_non_exhaustive()
    }
}

fn enumerate_unknowns(s: &Surface) -> Vec<UnknownIndex> {
    let m = s.half_width() as i64;
    let near = (-m..=m)
        .filter(|&x| s.height_at(x) != -1)
        .map(UnknownIndex::NearBoundary);
    let ground = s.ground_set().iter().map(|&j| UnknownIndex::Ground(j));
    near.chain(ground).collect()
}

/// Assembles and factors the system for `s`.
pub fn assemble_system<'a>(
    s: &'a Surface,
    table: &'a HTable,
) -> Result<BoundarySystem<'a>, SolveError> {
    let unknowns = enumerate_unknowns(s);
    let index: HashMap<_, _> = unknowns.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let size = unknowns.len();

    let reach = s.peak().max(s.depth()) as u32 + 1;
    table.warm(2 * reach, 2 * s.half_width() as u64 + 2)?;

    let mut sys = BoundarySystem {
        surface: s,
        table,
        unknowns,
        index,
        matrix: DMatrix::zeros(size, size),
        lu: DMatrix::<f64>::identity(1, 1).lu(),
        rhs: vec![Vec::new(); size],
    };

    let mut matrix = DMatrix::<f64>::identity(size, size);
    for row in 0..size {
        match sys.unknowns[row] {
            UnknownIndex::NearBoundary(k) => {
                let n = s.height_at(k) + 1;
                let coef = sys.expansion(k, n)?;
                for (col, c) in coef.iter().enumerate() {
                    matrix[(row, col)] -= c;
                }
                sys.rhs[row].push(RhsTerm::Tilde { k, n, weight: 1.0 });
            }
            UnknownIndex::Ground(j) => {
                for (px, py) in [(j + 1, 0), (j - 1, 0), (j, 1), (j, -1)] {
                    if py == s.height_at(px) {
                        sys.rhs[row].push(RhsTerm::Kronecker {
                            at: px,
                            weight: 0.25,
                        });
                    } else if let Some(col) = sys.unknown_at(px, py) {
                        matrix[(row, col)] -= 0.25;
                    } else {
                        debug_assert!(s.classify(px, py).is_external());
                        let coef = sys.expansion(px, py)?;
                        for (col, c) in coef.iter().enumerate() {
                            matrix[(row, col)] -= 0.25 * c;
                        }
                        sys.rhs[row].push(RhsTerm::Tilde {
                            k: px,
                            n: py,
                            weight: 0.25,
                        });
                    }
                }
            }
        }
    }

    let lu = matrix.clone().lu();
    let pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, p| acc.min(p.abs()));
    if pivot.is_nan() || pivot < PIVOT_FLOOR {
        return Err(SolveError::Singular {
            surface: s.to_string().trim_end().replace('\n', " "),
            pivot,
        });
    }
    sys.matrix = matrix;
    sys.lu = lu;
    Ok(sys)
}

impl<'a> BoundarySystem<'a> {
    pub fn surface(&self) -> &'a Surface {
        self.surface
    }

    pub fn table(&self) -> &'a HTable {
        self.table
    }

    pub fn unknowns(&self) -> &[UnknownIndex] {
        &self.unknowns
    }

    pub fn position(&self, u: UnknownIndex) -> Option<usize> {
        self.index.get(&u).copied()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Max-norm of `P⁻¹LU − A`.
    pub fn reconstruction_error(&self) -> f64 {
        let (p, l, u) = self.lu.clone().unpack();
        let mut rebuilt = l * u;
        p.inv_permute_rows(&mut rebuilt);
        (rebuilt - &self.matrix).amax()
    }

    /// Position of the unknown carried by lattice point `(x, y)`, if any.
    pub fn unknown_at(&self, x: i64, y: i64) -> Option<usize> {
        let s = self.surface;
        if y == 0 && s.height_at(x) < 0 {
            return self.position(UnknownIndex::Ground(x));
        }
        if y == s.height_at(x) + 1 {
            return self.position(UnknownIndex::NearBoundary(x));
        }
        None
    }

    /// Coefficients `c` such that `P_{k,n}(x) = P̃_{k,n}(x) + Σ cᵢ uᵢ(x)` for an
    /// external start off level 0. They do not depend on `x`.
    pub fn expansion(&self, k: i64, n: i64) -> Result<Vec<f64>, SolveError> {
        let s = self.surface;
        let side = Side::of(n).expect("expansion is only defined off level 0");
        let depth = n.abs();
        let mut coef = vec![0.0; self.unknowns.len()];
        for &j in s.ground_set() {
            coef[self.index[&UnknownIndex::Ground(j)]] += self.table.get(depth as u32, k - j)?;
        }
        let m = s.half_width() as i64;
        for x in -m..=m {
            let g = coeffs::boundary_weight(s, self.table, k, depth, side, x)?;
            if g == 0.0 {
                continue;
            }
            let u = if s.height_at(x) == -1 {
                UnknownIndex::Ground(x)
            } else {
                UnknownIndex::NearBoundary(x)
            };
            coef[self.index[&u]] -= g;
        }
        Ok(coef)
    }

    fn rhs_at(&self, row: usize, x: i64) -> Result<f64, KernelError> {
        let mut b = 0.0;
        for term in &self.rhs[row] {
            match *term {
                RhsTerm::Kronecker { at, weight } => {
                    if at == x {
                        b += weight;
                    }
                }
                RhsTerm::Tilde { k, n, weight } => {
                    b += weight * coeffs::tilde_p(self.surface, self.table, k, n, x)?;
                }
            }
        }
        Ok(b)
    }
}

/// Solutions of the boundary system for every `x` in a window.
#[derive(Debug)]
pub struct BoundarySolution<'s> {
    system: &'s BoundarySystem<'s>,
    window: XWindow,
    /// One row per unknown, one column per `x`.
    values: DMatrix<f64>,
    max_residual: f64,
}

/// Solves the system once per `x` in `window`. Columns are independent and
/// are solved in parallel against the shared factorization.
pub fn solve_boundary<'s>(
    sys: &'s BoundarySystem<'s>,
    window: XWindow,
) -> Result<BoundarySolution<'s>, SolveError> {
    let s = sys.surface;
    let reach = s.peak().max(s.depth()) as u32 + 1;
    let span = window.lo.unsigned_abs().max(window.hi.unsigned_abs()) + s.half_width() as u64 + 2;
    sys.table.warm(2 * reach, span)?;

    let size = sys.unknowns.len();
    let columns: Vec<(DVector<f64>, f64)> = window
        .xs()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| {
            let mut b = DVector::zeros(size);
            for row in 0..size {
                b[row] = sys.rhs_at(row, x)?;
            }
            let v = sys.lu.solve(&b).ok_or_else(|| SolveError::Singular {
                surface: s.to_string().trim_end().replace('\n', " "),
                pivot: 0.0,
            })?;
            let residual = (&sys.matrix * &v - &b).amax();
            Ok((v, residual))
        })
        .collect::<Result<_, SolveError>>()?;

    let mut values = DMatrix::zeros(size, window.len());
    let mut max_residual: f64 = 0.0;
    for (col, (v, r)) in columns.into_iter().enumerate() {
        values.set_column(col, &v);
        max_residual = max_residual.max(r);
    }
    Ok(BoundarySolution {
        system: sys,
        window,
        values,
        max_residual,
    })
}

impl<'s> BoundarySolution<'s> {
    pub fn system(&self) -> &'s BoundarySystem<'s> {
        self.system
    }

    pub fn window(&self) -> XWindow {
        self.window
    }

    /// Largest `‖A v − b‖∞` over all solved columns.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Solved value of `unknown` at target `x`.
    pub fn value(&self, unknown: UnknownIndex, x: i64) -> Option<f64> {
        let row = self.system.position(unknown)?;
        let col = self.window.column(x)?;
        Some(self.values[(row, col)])
    }
}

/// Approximate first-hit distribution from one start point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitDistribution {
    pub start: (i64, i64),
    pub window: XWindow,
    /// `probs[i]` is the probability of first contact at `window.lo + i`.
    pub probs: Vec<f64>,
    pub window_mass: f64,
    /// Mass beyond the window, from the `k⁻²` decay fitted at each edge.
    pub tail_estimate: f64,
}

impl HitDistribution {
    pub fn get(&self, x: i64) -> Option<f64> {
        self.window.column(x).map(|i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.window.xs().zip(self.probs.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.window_mass + self.tail_estimate
    }

    /// Number of entries below `-threshold`.
    pub fn negative_count(&self, threshold: f64) -> usize {
        self.probs.iter().filter(|&&p| p < -threshold).count()
    }

    fn from_probs(start: (i64, i64), window: XWindow, probs: Vec<f64>) -> Self {
        let window_mass = probs.iter().sum();
        let tail_estimate = edge_tail(&probs, window, start.0);
        HitDistribution {
            start,
            window,
            probs,
            window_mass,
            tail_estimate,
        }
    }
}

/// Extrapolates the mass beyond each window edge. Far from the surface the
/// distribution decays like the planar coefficients, `H^ν_d ≈ ν/(πd²)`, for an
/// effective level ν fitted to the edge value; the remainder is summed with
/// the two-term asymptotic expansion. Assumes the window covers the start.
fn edge_tail(probs: &[f64], window: XWindow, k: i64) -> f64 {
    let mut tail = 0.0;
    for (edge, p) in [(window.lo, probs[0]), (window.hi, probs[probs.len() - 1])] {
        let d = (edge - k).unsigned_abs();
        if d == 0 || p <= 0.0 {
            continue;
        }
        let level = p * std::f64::consts::PI * (d as f64) * (d as f64);
        tail += kernel::h_asymptotic_tail(level, d + 1);
    }
    tail
}

/// Distribution of first contact from `start = (k, n)`.
///
/// Off level 0 this evaluates the expansion over the solved unknowns; a
/// ground start returns its solved row, and a start on the surface is
/// absorbed where it stands.
pub fn hit_distribution(
    sol: &BoundarySolution<'_>,
    start: (i64, i64),
) -> Result<HitDistribution, SolveError> {
    let sys = sol.system;
    let s = sys.surface;
    let (k, n) = start;
    let window = sol.window;
    match s.classify(k, n).kind {
        PointKind::Internal => return Err(SolveError::InternalStart(k, n)),
        PointKind::SurfacePoint => {
            let probs = window
                .xs()
                .map(|x| if x == k { 1.0 } else { 0.0 })
                .collect();
            return Ok(HitDistribution {
                start,
                window,
                probs,
                window_mass: if window.contains(k) { 1.0 } else { 0.0 },
                tail_estimate: if window.contains(k) { 0.0 } else { 1.0 },
            });
        }
        PointKind::External => {}
    }
    if n == 0 {
        let row = sys
            .position(UnknownIndex::Ground(k))
            .expect("every external level-0 point is a ground unknown");
        let probs = sol.values.row(row).iter().copied().collect();
        return Ok(HitDistribution::from_probs(start, window, probs));
    }
    let coef = sys.expansion(k, n)?;
    let mut probs = Vec::with_capacity(window.len());
    for (col, x) in window.xs().enumerate() {
        let mut p = coeffs::tilde_p(s, sys.table, k, n, x)?;
        for (row, c) in coef.iter().enumerate() {
            p += c * sol.values[(row, col)];
        }
        probs.push(p);
    }
    Ok(HitDistribution::from_probs(start, window, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::parse_surface;
    use approx::assert_abs_diff_eq;

    fn setup(text: &str) -> (Surface, HTable) {
        (parse_surface(text).unwrap(), HTable::default())
    }

    #[test]
    fn planar_system_has_one_unknown() {
        let (s, t) = setup("M=0\n");
        let sys = assemble_system(&s, &t).unwrap();
        assert_eq!(sys.unknowns(), &[UnknownIndex::NearBoundary(0)]);
        let sol = solve_boundary(&sys, XWindow::new(-5, 5).unwrap()).unwrap();
        for x in -5..=5 {
            let v = sol.value(UnknownIndex::NearBoundary(0), x).unwrap();
            assert_abs_diff_eq!(v, t.get(1, -x).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn bump_has_three_near_boundary_unknowns() {
        let (s, t) = setup("M=1\n1");
        let sys = assemble_system(&s, &t).unwrap();
        assert_eq!(
            sys.unknowns(),
            &[
                UnknownIndex::NearBoundary(-1),
                UnknownIndex::NearBoundary(0),
                UnknownIndex::NearBoundary(1)
            ]
        );
    }

    #[test]
    fn well_dedups_level_zero_near_boundary_points() {
        let (s, t) = setup("M=2\n-1 -2 -1");
        let sys = assemble_system(&s, &t).unwrap();
        assert_eq!(
            sys.unknowns(),
            &[
                UnknownIndex::NearBoundary(-2),
                UnknownIndex::NearBoundary(0),
                UnknownIndex::NearBoundary(2),
                UnknownIndex::Ground(-1),
                UnknownIndex::Ground(0),
                UnknownIndex::Ground(1),
            ]
        );
        assert_eq!(UnknownIndex::NearBoundary(0).point(&s), (0, -1));
        assert_eq!(
            sys.unknown_at(-1, 0),
            sys.position(UnknownIndex::Ground(-1))
        );
        assert_eq!(
            sys.unknown_at(0, -1),
            sys.position(UnknownIndex::NearBoundary(0))
        );
    }

    #[test]
    fn unknown_count_formula() {
        for text in ["M=0\n", "M=1\n1", "M=3\n1 0 -1 0 1", "M=3\n-1 -2 -3 -2 -1"] {
            let (s, t) = setup(text);
            let sys = assemble_system(&s, &t).unwrap();
            let m = s.half_width() as i64;
            let dedup = (-m..=m).filter(|&x| s.height_at(x) == -1).count();
            assert_eq!(
                sys.unknowns().len(),
                (2 * m + 1) as usize + s.ground_set().len() - dedup
            );
        }
    }

    #[test]
    fn factorization_reconstructs_matrix() {
        let (s, t) = setup("M=4\n1 2 1 0 -1 -2 -1");
        let sys = assemble_system(&s, &t).unwrap();
        assert!(sys.reconstruction_error() <= 1e-10);
    }

    #[test]
    fn matrix_is_reproducible() {
        let (s, t) = setup("M=3\n1 0 -1 0 1");
        let a = assemble_system(&s, &t).unwrap();
        let b = assemble_system(&s, &t).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn shifted_windows_agree_on_overlap() {
        let (s, t) = setup("M=2\n-1 -2 -1");
        let sys = assemble_system(&s, &t).unwrap();
        let a = solve_boundary(&sys, XWindow::new(-10, 4).unwrap()).unwrap();
        let b = solve_boundary(&sys, XWindow::new(-3, 12).unwrap()).unwrap();
        for &u in sys.unknowns() {
            for x in -3..=4 {
                assert_eq!(a.value(u, x), b.value(u, x));
            }
        }
        assert!(a.max_residual() <= 1e-9);
    }

    #[test]
    fn planar_distribution_is_h() {
        let (s, t) = setup("M=0\n");
        let sys = assemble_system(&s, &t).unwrap();
        let sol = solve_boundary(&sys, XWindow::new(-5, 5).unwrap()).unwrap();
        let d = hit_distribution(&sol, (0, 3)).unwrap();
        assert_abs_diff_eq!(d.get(0).unwrap(), 0.1136, epsilon = 5e-5);
        for (x, p) in d.iter() {
            assert_abs_diff_eq!(p, t.get(3, x).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn start_classification() {
        let (s, t) = setup("M=1\n1");
        let sys = assemble_system(&s, &t).unwrap();
        let sol = solve_boundary(&sys, XWindow::new(-3, 3).unwrap()).unwrap();
        assert_eq!(
            hit_distribution(&sol, (0, 0)).unwrap_err(),
            SolveError::InternalStart(0, 0)
        );
        let on = hit_distribution(&sol, (0, 1)).unwrap();
        assert_eq!(on.get(0), Some(1.0));
        assert_eq!(on.get(1), Some(0.0));
        assert_eq!(on.total_mass(), 1.0);
    }

    #[test]
    fn window_parsing() {
        assert_eq!(
            "-40..40".parse::<XWindow>().unwrap(),
            XWindow { lo: -40, hi: 40 }
        );
        assert_eq!("3..3".parse::<XWindow>().unwrap().len(), 1);
        assert!(matches!(
            "5..4".parse::<XWindow>(),
            Err(SolveError::EmptyWindow(5, 4))
        ));
        assert!(matches!(
            "5".parse::<XWindow>(),
            Err(SolveError::BadWindow(_))
        ));
        assert_eq!(XWindow::new(-2, 7).unwrap().to_string(), "-2..7");
    }

    #[test]
    fn default_window_tail_is_small_and_positive() {
        let (s, t) = setup("M=1\n1");
        let sys = assemble_system(&s, &t).unwrap();
        let sol = solve_boundary(&sys, XWindow::around(&s, DEFAULT_MARGIN)).unwrap();
        let d = hit_distribution(&sol, (0, 2)).unwrap();
        assert!(d.tail_estimate > 0.0 && d.tail_estimate < 0.05);
        assert!((0.97..=1.03).contains(&d.total_mass()));
    }
}

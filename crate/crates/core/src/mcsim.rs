//! Monte Carlo oracle: simple random walks absorbed on first contact with
//! the surface.
//!
//! Walk `i` draws from its own ChaCha8 stream: the generator is seeded from
//! the master seed and switched to stream `i`, so a tally depends only on
//! `(seed, walks, max_steps)` and not on how walks are spread over threads.

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linsys::HitDistribution;
use crate::surface::{PointKind, Surface};

/// Truncated walks above this fraction make a comparison fail.
pub const MAX_TRUNCATED_FRACTION: f64 = 0.01;

pub const DEFAULT_WALKS: u64 = 1_000_000;
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// Walks handed to one rayon task.
const BATCH: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McError {
    #[error("walk count must be at least 1")]
    NoWalks,
    #[error("max_steps must be at least 1")]
    NoSteps,
    #[error("start ({0}, {1}) is not an external point")]
    StartNotExternal(i64, i64),
    #[error("walk {walk} entered internal point ({x}, {y})")]
    InteriorVisit { walk: u64, x: i64, y: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct WalkConfig {
    pub walks: u64,
    pub max_steps: u64,
    pub seed: u64,
}

impl WalkConfig {
    pub fn new(walks: u64, max_steps: u64, seed: u64) -> Result<Self, McError> {
        if walks == 0 {
            return Err(McError::NoWalks);
        }
        if max_steps == 0 {
            return Err(McError::NoSteps);
        }
        Ok(WalkConfig {
            walks,
            max_steps,
            seed,
        })
    }
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks: DEFAULT_WALKS,
            max_steps: DEFAULT_MAX_STEPS,
            seed: 0,
        }
    }
}

/// Histogram of absorption abscissae.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WalkTally {
    pub start: (i64, i64),
    pub config: WalkConfig,
    pub histogram: BTreeMap<i64, u64>,
    pub absorbed: u64,
    pub truncated: u64,
}

impl WalkTally {
    fn empty(start: (i64, i64), config: WalkConfig) -> Self {
        WalkTally {
            start,
            config,
            histogram: BTreeMap::new(),
            absorbed: 0,
            truncated: 0,
        }
    }

    fn merge(mut self, other: WalkTally) -> Self {
        for (x, c) in other.histogram {
            *self.histogram.entry(x).or_insert(0) += c;
        }
        self.absorbed += other.absorbed;
        self.truncated += other.truncated;
        self
    }

    pub fn walks(&self) -> u64 {
        self.absorbed + self.truncated
    }

    pub fn count(&self, x: i64) -> u64 {
        self.histogram.get(&x).copied().unwrap_or(0)
    }

    /// Empirical frequency of absorption at `x` among all walks.
    pub fn frequency(&self, x: i64) -> f64 {
        self.count(x) as f64 / self.walks() as f64
    }

    pub fn truncated_fraction(&self) -> f64 {
        self.truncated as f64 / self.walks() as f64
    }
}

/// Per-walk generator: master seed, stream = walk index.
fn walk_rng(master: &ChaCha8Rng, walk: u64) -> ChaCha8Rng {
    let mut rng = master.clone();
    rng.set_stream(walk);
    rng.set_word_pos(0);
    rng
}

enum Outcome {
    Absorbed(i64),
    Truncated,
}

/// One walk. Each 64-bit draw supplies 32 two-bit steps.
fn walk_once(
    s: &Surface,
    start: (i64, i64),
    max_steps: u64,
    rng: &mut ChaCha8Rng,
    audit: Option<u64>,
) -> Result<Outcome, McError> {
    let (mut x, mut y) = start;
    let mut bits = 0u64;
    let mut left = 0u32;
    for _ in 0..max_steps {
        if left == 0 {
            bits = rng.next_u64();
            left = 32;
        }
        match bits & 3 {
            0 => x += 1,
            1 => x -= 1,
            2 => y += 1,
            _ => y -= 1,
        }
        bits >>= 2;
        left -= 1;
        let h = s.height_at(x);
        if y == h {
            return Ok(Outcome::Absorbed(x));
        }
        if let Some(walk) = audit {
            if y < h && s.classify(x, y).kind == PointKind::Internal {
                return Err(McError::InteriorVisit { walk, x, y });
            }
        }
    }
    Ok(Outcome::Truncated)
}

fn run(s: &Surface, start: (i64, i64), cfg: WalkConfig, audit: bool) -> Result<WalkTally, McError> {
    if cfg.walks == 0 {
        return Err(McError::NoWalks);
    }
    if cfg.max_steps == 0 {
        return Err(McError::NoSteps);
    }
    if !s.classify(start.0, start.1).is_external() {
        return Err(McError::StartNotExternal(start.0, start.1));
    }
    let master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batches = cfg.walks.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut tally = WalkTally::empty(start, cfg);
            for walk in b * BATCH..((b + 1) * BATCH).min(cfg.walks) {
                let mut rng = walk_rng(&master, walk);
                match walk_once(s, start, cfg.max_steps, &mut rng, audit.then_some(walk))? {
                    Outcome::Absorbed(x) => {
                        *tally.histogram.entry(x).or_insert(0) += 1;
                        tally.absorbed += 1;
                    }
                    Outcome::Truncated => tally.truncated += 1,
                }
            }
            Ok(tally)
        })
        .try_reduce(|| WalkTally::empty(start, cfg), |a, b| Ok(a.merge(b)))
}

/// Runs `cfg.walks` independent walks from `start`.
pub fn run_walks(s: &Surface, start: (i64, i64), cfg: WalkConfig) -> Result<WalkTally, McError> {
    run(s, start, cfg, false)
}

/// As [`run_walks`], but checks after every step that the walker is not on an
/// internal point. The tally is identical to the unaudited one.
pub fn audit_walks(s: &Surface, start: (i64, i64), cfg: WalkConfig) -> Result<WalkTally, McError> {
    run(s, start, cfg, true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub x: i64,
    pub model_p: f64,
    pub mc_p: f64,
    pub mc_stderr: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Runtime {
    pub model_secs: f64,
    pub mc_secs: f64,
}

/// Model against empirical distribution over the model window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub surface_digest: String,
    pub start: (i64, i64),
    pub walks: u64,
    pub seed: u64,
    pub rows: Vec<CompareRow>,
    /// Half the L¹ distance, with everything outside the window (and the
    /// truncated walks, on the empirical side) lumped into one cell.
    pub tv_distance: f64,
    pub truncated_fraction: f64,
    pub negative_model_values: usize,
    pub model_window_mass: f64,
    pub model_tail_estimate: f64,
    pub runtime: Runtime,
}

impl CompareReport {
    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.surface_digest = digest.into();
        self
    }

    pub fn with_runtime(mut self, runtime: Runtime) -> Self {
        self.runtime = runtime;
        self
    }

    /// The comparison passes when TV is within `threshold` and truncation
    /// stays under [`MAX_TRUNCATED_FRACTION`].
    pub fn passes(&self, threshold: f64) -> bool {
        self.tv_distance <= threshold && self.truncated_fraction <= MAX_TRUNCATED_FRACTION
    }
}

pub fn compare(dist: &HitDistribution, tally: &WalkTally) -> CompareReport {
    let walks = tally.walks() as f64;
    let mut rows = Vec::with_capacity(dist.probs.len());
    let mut l1 = 0.0;
    let mut mc_inside = 0u64;
    for (x, p) in dist.iter() {
        let c = tally.count(x);
        mc_inside += c;
        let q = c as f64 / walks;
        l1 += (p - q).abs();
        rows.push(CompareRow {
            x,
            model_p: p,
            mc_p: q,
            mc_stderr: (q * (1.0 - q) / walks).sqrt(),
        });
    }
    let model_outside = (1.0 - dist.window_mass).max(0.0);
    let mc_outside = (tally.walks() - mc_inside) as f64 / walks;
    l1 += (model_outside - mc_outside).abs();
    CompareReport {
        surface_digest: String::new(),
        start: dist.start,
        walks: tally.walks(),
        seed: tally.config.seed,
        rows,
        tv_distance: (0.5 * l1).clamp(0.0, 1.0),
        truncated_fraction: tally.truncated_fraction(),
        negative_model_values: dist.negative_count(1e-3),
        model_window_mass: dist.window_mass,
        model_tail_estimate: dist.tail_estimate,
        runtime: Runtime::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::XWindow;
    use crate::surface::parse_surface;

    fn cfg(walks: u64, seed: u64) -> WalkConfig {
        WalkConfig::new(walks, DEFAULT_MAX_STEPS, seed).unwrap()
    }

    #[test]
    fn config_rejects_zero() {
        assert_eq!(WalkConfig::new(0, 1, 0), Err(McError::NoWalks));
        assert_eq!(WalkConfig::new(1, 0, 0), Err(McError::NoSteps));
    }

    #[test]
    fn start_must_be_external() {
        let s = parse_surface("M=1\n1").unwrap();
        assert_eq!(
            run_walks(&s, (0, 0), cfg(10, 1)).unwrap_err(),
            McError::StartNotExternal(0, 0)
        );
        assert_eq!(
            run_walks(&s, (0, 1), cfg(10, 1)).unwrap_err(),
            McError::StartNotExternal(0, 1)
        );
    }

    #[test]
    fn conservation_with_tight_cap() {
        let s = Surface::planar();
        let t = run_walks(&s, (0, 3), WalkConfig::new(5000, 20, 7).unwrap()).unwrap();
        assert_eq!(t.walks(), 5000);
        assert!(t.truncated > 0);
        assert_eq!(t.histogram.values().sum::<u64>(), t.absorbed);
    }

    #[test]
    fn seeds_matter_and_repeat() {
        let s = parse_surface("M=2\n-1 -2 -1").unwrap();
        let a = run_walks(&s, (0, 2), cfg(20_000, 3)).unwrap();
        let b = run_walks(&s, (0, 2), cfg(20_000, 3)).unwrap();
        let c = run_walks(&s, (0, 2), cfg(20_000, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn audit_matches_plain_run() {
        let s = parse_surface("M=4\n1 2 1 0 -1 -2 -1").unwrap();
        let plain = run_walks(&s, (2, -1), cfg(5000, 11)).unwrap();
        let audited = audit_walks(&s, (2, -1), cfg(5000, 11)).unwrap();
        assert_eq!(plain, audited);
    }

    #[test]
    fn first_step_absorption_from_near_boundary() {
        // From (0,1) over the plane, a quarter of walks stop on the first step.
        let s = Surface::planar();
        let t = run_walks(&s, (0, 1), cfg(40_000, 5)).unwrap();
        assert!(t.frequency(0) > 0.25);
    }

    #[test]
    fn compare_against_own_histogram_is_zero() {
        let probs = vec![0.1, 0.2, 0.4, 0.2, 0.1];
        let dist = HitDistribution {
            start: (0, 1),
            window: XWindow::new(-2, 2).unwrap(),
            probs: probs.clone(),
            window_mass: 1.0,
            tail_estimate: 0.0,
        };
        let mut tally = WalkTally::empty((0, 1), cfg(1000, 0));
        for (x, p) in (-2..=2).zip(probs) {
            let c = (p * 1000.0f64).round() as u64;
            tally.histogram.insert(x, c);
            tally.absorbed += c;
        }
        let report = compare(&dist, &tally);
        assert!(report.tv_distance.abs() < 1e-12);
        assert_eq!(report.rows.len(), 5);
        assert!(report.passes(0.0));
    }

    #[test]
    fn truncation_is_lumped_outside() {
        let dist = HitDistribution {
            start: (0, 1),
            window: XWindow::new(0, 0).unwrap(),
            probs: vec![1.0],
            window_mass: 1.0,
            tail_estimate: 0.0,
        };
        let mut tally = WalkTally::empty((0, 1), cfg(100, 0));
        tally.histogram.insert(0, 90);
        tally.absorbed = 90;
        tally.truncated = 10;
        let report = compare(&dist, &tally);
        assert!((report.tv_distance - 0.1).abs() < 1e-12);
        assert!(!report.passes(1.0));
    }
}

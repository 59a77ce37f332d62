//! Oracles shared by the integration and acceptance targets.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hitprob::{parse_surface, Surface};

/// Surfaces every system-level check runs on: a bump, a well, an asymmetric
/// bump-and-trench, a double dip and a deep trench.
pub const TEST_SURFACES: [&str; 5] = [
    "M=1\n1",
    "M=2\n-1 -2 -1",
    "M=4\n1 2 1 0 -1 -2 -1",
    "M=3\n1 0 -1 0 1",
    "M=3\n-1 -2 -3 -2 -1",
];

pub const REPO_SURFACE: &str = include_str!("../../../../data/surface_n4_m10.txt");

pub fn surface(text: &str) -> Surface {
    parse_surface(text).expect("test surface is valid")
}

/// A handful of external starts for `s`: above the peak, over the shoulder,
/// beside the support, and below level 0 when the surface dips.
pub fn starts(s: &Surface) -> Vec<(i64, i64)> {
    let m = s.half_width() as i64;
    let mut out = vec![
        (0, s.height_at(0) + 1),
        (0, s.peak() + 3),
        (m + 2, 1),
        (-m - 1, 2),
    ];
    if s.depth() > 0 {
        let lowest = (-m..=m).min_by_key(|&x| s.height_at(x)).unwrap();
        out.push((lowest, s.height_at(lowest) + 1));
        if let Some(&j) = s.ground_set().first() {
            out.push((j, 0));
        }
    }
    out.retain(|&(x, y)| s.classify(x, y).is_external());
    out.sort();
    out.dedup();
    out
}

/// Rectangle of the lattice used by [`brute_force`]; walks leaving it are
/// killed.
#[derive(Debug, Clone, Copy)]
pub struct BoxRegion {
    pub x: (i64, i64),
    pub y: (i64, i64),
}

/// First-hit distribution by a direct solve of the lattice problem on a
/// truncated box. Expected visit counts `V` satisfy
/// `V(z) = δ(z, start) + ¼ Σ_{external neighbours w in box} V(w)`; the
/// probability of first contact at surface point `(x, S(x))` is then
/// `¼ Σ V(w)` over its external neighbours. Solved by SOR until the residual
/// drops below `tol`.
pub fn brute_force(
    s: &Surface,
    start: (i64, i64),
    region: BoxRegion,
    tol: f64,
) -> BTreeMap<i64, f64> {
    let (x0, x1) = region.x;
    let (y0, y1) = region.y;
    let w = (x1 - x0 + 1) as usize;
    let h = (y1 - y0 + 1) as usize;
    let at = |x: i64, y: i64| (y - y0) as usize * w + (x - x0) as usize;
    let inside = |x: i64, y: i64| x0 <= x && x <= x1 && y0 <= y && y <= y1;
    let open: Vec<bool> = (0..w * h)
        .map(|i| {
            let (x, y) = (x0 + (i % w) as i64, y0 + (i / w) as i64);
            y > s.height_at(x)
        })
        .collect();
    assert!(inside(start.0, start.1) && open[at(start.0, start.1)]);

    let neighbours = |x: i64, y: i64| [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)];
    let mut v = vec![0.0f64; w * h];
    let omega = 1.9;
    for sweep in 0.. {
        let mut residual: f64 = 0.0;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = at(x, y);
                if !open[i] {
                    continue;
                }
                let mut acc = if (x, y) == start { 1.0 } else { 0.0 };
                for (nx, ny) in neighbours(x, y) {
                    if inside(nx, ny) && open[at(nx, ny)] {
                        acc += 0.25 * v[at(nx, ny)];
                    }
                }
                residual = residual.max((acc - v[i]).abs());
                v[i] += omega * (acc - v[i]);
            }
        }
        if residual < tol {
            break;
        }
        assert!(sweep < 1_000_000, "relaxation did not converge");
    }

    let mut hits = BTreeMap::new();
    for x in x0..=x1 {
        let y = s.height_at(x);
        if !inside(x, y) {
            continue;
        }
        let mut p = 0.0;
        for (nx, ny) in neighbours(x, y) {
            if inside(nx, ny) && open[at(nx, ny)] {
                p += 0.25 * v[at(nx, ny)];
            }
        }
        hits.insert(x, p);
    }
    hits
}

/// Deterministic pseudo-random integers for sampled checks.
pub struct Sampler(u64);

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler(seed)
    }

    /// Uniform in `lo..=hi` (splitmix64).
    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        lo + (z % (hi - lo + 1) as u64) as i64
    }
}

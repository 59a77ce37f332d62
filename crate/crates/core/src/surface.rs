//! Regular surfaces with compact support: parsing, validation, and lattice
//! point classification.
//!
//! A surface is an integer height function `S(x)` with `|S(x+1) − S(x)| ≤ 1`
//! and `S(x) = 0` for `|x| ≥ M`. The text format is
//!
//! ```text
//! # optional comments
//! M=2
//! 1 2 1
//! ```
//!
//! where the second line lists `S(−M+1) … S(M−1)`. `M=0` encodes the planar
//! surface and has no height line.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Which surface condition a rejected input violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("regularity violated at x={x}: |S({next}) - S({x})| = |{b} - {a}| > 1", next = x + 1)]
    Regularity { x: i64, a: i64, b: i64 },
    #[error("compactness violated: expected {expected} heights for M={half_width}, found {found}")]
    Compactness {
        half_width: u32,
        expected: usize,
        found: usize,
    },
    #[error("surface is not centered: S({x}) = 0 but both S(±(M-1)) must be nonzero")]
    Centered { x: i64 },
    #[error("external point ({x}, {y}) is adjacent to an internal point")]
    NeighborSafety { x: i64, y: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurfaceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid surface: {0}")]
    Validation(#[from] Violation),
}

/// Coarse classification of a lattice point relative to the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PointKind {
    External,
    Internal,
    SurfacePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PointClass {
    pub kind: PointKind,
    /// External point directly above the surface, `(x, S(x) + 1)`.
    pub near_boundary: bool,
    /// External point on level 0.
    pub ground: bool,
}

impl PointClass {
    pub fn is_external(&self) -> bool {
        self.kind == PointKind::External
    }
}

/// A validated regular surface with compact support.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Surface {
    half_width: u32,
    heights: Vec<i64>,
    peak: i64,
    depth: i64,
    ground: Vec<i64>,
    zero_boundary: Vec<i64>,
}

impl Surface {
    /// The flat surface `S ≡ 0`, encoded with `M = 0`.
    pub fn planar() -> Self {
        Surface {
            half_width: 0,
            heights: Vec::new(),
            peak: 0,
            depth: 0,
            ground: Vec::new(),
            zero_boundary: Vec::new(),
        }
    }

    /// Builds a surface from `S(−M+1) … S(M−1)`, checking every invariant.
    pub fn from_heights(half_width: u32, heights: Vec<i64>) -> Result<Self, Violation> {
        let expected = if half_width == 0 {
            0
        } else {
            2 * half_width as usize - 1
        };
        if heights.len() != expected {
            return Err(Violation::Compactness {
                half_width,
                expected,
                found: heights.len(),
            });
        }
        if half_width == 0 {
            return Ok(Surface::planar());
        }
        let m = half_width as i64;
        for x in [-m + 1, m - 1] {
            if heights[(x + m - 1) as usize] == 0 {
                return Err(Violation::Centered { x });
            }
        }
        let at = |x: i64| -> i64 {
            if x.abs() < m {
                heights[(x + m - 1) as usize]
            } else {
                0
            }
        };
        for x in -m..m {
            let (a, b) = (at(x), at(x + 1));
            if (a - b).abs() > 1 {
                return Err(Violation::Regularity { x, a, b });
            }
        }
        let peak = heights.iter().copied().max().unwrap_or(0).max(0);
        let depth = (-heights.iter().copied().min().unwrap_or(0)).max(0);
        let ground = (-m + 1..m).filter(|&x| at(x) < 0).collect();
        let zero_boundary = (-m + 1..m).filter(|&x| at(x) == 0).collect();
        let surface = Surface {
            half_width,
            heights,
            peak,
            depth,
            ground,
            zero_boundary,
        };
        surface.check_neighbor_safety()?;
        Ok(surface)
    }

    /// Exhaustive scan of the bounding box: no external point may touch an
    /// internal one, so a walker can only leave the exterior through the surface.
    fn check_neighbor_safety(&self) -> Result<(), Violation> {
        let m = self.half_width as i64;
        for x in -m..=m {
            for y in -self.depth - 1..=self.peak + 1 {
                if !self.classify(x, y).is_external() {
                    continue;
                }
                for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    if self.classify(x + dx, y + dy).kind == PointKind::Internal {
                        return Err(Violation::NeighborSafety { x, y });
                    }
                }
            }
        }
        Ok(())
    }

    /// `M`; heights vanish for `|x| ≥ M`.
    pub fn half_width(&self) -> u32 {
        self.half_width
    }

    /// `N = max S`.
    pub fn peak(&self) -> i64 {
        self.peak
    }

    /// `N* = −min S`.
    pub fn depth(&self) -> i64 {
        self.depth
    }

    /// `J`: abscissae whose level-0 point is external (`S(k) < 0`), sorted.
    pub fn ground_set(&self) -> &[i64] {
        &self.ground
    }

    /// `J₀`: abscissae in `(−M, M)` where the surface sits on level 0, sorted.
    pub fn zero_boundary_set(&self) -> &[i64] {
        &self.zero_boundary
    }

    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    pub fn is_planar(&self) -> bool {
        self.half_width == 0
    }

    /// `S(x)`.
    #[inline]
    pub fn height_at(&self, x: i64) -> i64 {
        let m = self.half_width as i64;
        if x.abs() < m {
            self.heights[(x + m - 1) as usize]
        } else {
            0
        }
    }

    pub fn classify(&self, x: i64, y: i64) -> PointClass {
        let s = self.height_at(x);
        let kind = match y.cmp(&s) {
            std::cmp::Ordering::Greater => PointKind::External,
            std::cmp::Ordering::Less => PointKind::Internal,
            std::cmp::Ordering::Equal => PointKind::SurfacePoint,
        };
        PointClass {
            kind,
            near_boundary: y == s + 1,
            ground: kind == PointKind::External && y == 0,
        }
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_string().as_bytes()))
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M={}", self.half_width)?;
        if self.half_width > 0 {
            let line: Vec<String> = self.heights.iter().map(i64::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Surface {
    type Err = SurfaceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_surface(text)
    }
}

/// Parses and validates the surface text format.
pub fn parse_surface(text: &str) -> Result<Surface, SurfaceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, header) = lines.next().ok_or(SurfaceError::Parse {
        line: 1,
        message: "missing `M=<half width>` header".into(),
    })?;
    let half_width = header
        .strip_prefix("M=")
        .map(str::trim)
        .ok_or_else(|| SurfaceError::Parse {
            line: line_no,
            message: format!("expected `M=<half width>`, found `{header}`"),
        })?
        .parse::<u32>()
        .map_err(|e| SurfaceError::Parse {
            line: line_no,
            message: format!("bad half width: {e}"),
        })?;

    let mut heights = Vec::new();
    if let Some((line_no, body)) = lines.next() {
        for token in body.split_whitespace() {
            heights.push(token.parse::<i64>().map_err(|e| SurfaceError::Parse {
                line: line_no,
                message: format!("bad height `{token}`: {e}"),
            })?);
        }
    }
    if let Some((line_no, extra)) = lines.next() {
        return Err(SurfaceError::Parse {
            line: line_no,
            message: format!("unexpected trailing content `{extra}`"),
        });
    }
    Ok(Surface::from_heights(half_width, heights)?)
}

//! Benchmark fixtures; the benchmarks themselves live under `benches/`.

/// The N=4, M=10 surface shipped in `data/`.
pub const REPO_SURFACE: &str = include_str!("../../../data/surface_n4_m10.txt");

/// Small surfaces spanning the system shapes: bump, well, mixed.
pub const SMALL_SURFACES: [(&str, &str); 3] = [
    ("bump", "M=1\n1"),
    ("well", "M=2\n-1 -2 -1"),
    ("mixed", "M=4\n1 2 1 0 -1 -2 -1"),
];

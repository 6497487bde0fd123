//! Small numeric helpers shared across modules.

use nalgebra::DVector;

/// Pairwise (cascade) summation down to pairs. Rounding error grows with
/// log(n) instead of n, and a power-of-two count of identical values sums
/// exactly (every partial sum is a plain exponent shift). The metric code
/// relies on both properties.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// splitmix64 finalizer; decorrelates consecutive integers into seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-item seed derivation used everywhere a base seed fans out over
/// samples: `splitmix64(base ^ splitmix64(index + C))`. Documented in the
/// model bundle metadata so external tooling can reproduce streams.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(0x517C_C1B7_2722_0A95)))
}

/// Human-readable description of [`derive_seed`], stored in bundle metadata.
pub const SEED_MIXING_DESC: &str =
    "per-item seed = splitmix64(base_seed XOR splitmix64(item_index + 0x517CC1B727220A95))";

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3(sub3(a, b))
}

/// Interleaved flattening (x1, y1, z1, x2, ...): a part with N vertices
/// becomes a 3N vector. This order is fixed for all matrix math and for the
/// serialized binary layout.
pub fn flatten(points: &[[f64; 3]]) -> DVector<f64> {
    let mut v = DVector::zeros(points.len() * 3);
    for (i, p) in points.iter().enumerate() {
        v[3 * i] = p[0];
        v[3 * i + 1] = p[1];
        v[3 * i + 2] = p[2];
    }
    v
}

pub fn unflatten(v: &DVector<f64>) -> Vec<[f64; 3]> {
    debug_assert_eq!(v.len() % 3, 0);
    (0..v.len() / 3)
        .map(|i| [v[3 * i], v[3 * i + 1], v[3 * i + 2]])
        .collect()
}

/// Order-preserving indexed map, parallel when the `parallel` feature is on.
/// Output element i comes from input index i in both builds, so results are
/// bitwise identical.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always-sequential twin of [`map_indexed`]; exists so benchmarks and
/// determinism tests can compare both execution paths in one build.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

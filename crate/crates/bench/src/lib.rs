//! Inputs shared by the benchmarks.

use peerinfo::EmbeddingMatrix;

/// `n` points in `d` dimensions around `k` well-separated centres, with a
/// deterministic low-discrepancy jitter so runs are comparable.
pub fn blobs(n: usize, d: usize, k: usize) -> EmbeddingMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = i % k;
            (0..d)
                .map(|j| {
                    let centre = if j % k == c { 8.0 } else { 0.0 };
                    let u = ((i * d + j) as f64 * 0.618_033_988_749_895).fract();
                    centre + 2.0 * u - 1.0
                })
                .collect()
        })
        .collect();
    EmbeddingMatrix::from_rows(&rows).expect("rows share one dimension")
}

//! k-means with k-means++ seeding and silhouette-based choice of k.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Stream};

/// Row-major `n × d` matrix of embedding vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    data: Vec<f64>,
    d: usize,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, data: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("embedding dimension must be >= 1".into()));
        }
        if data.len() != ids.len() * d {
            return Err(Error::InvalidParams(format!(
                "{} ids and dimension {d} need {} values, got {}",
                ids.len(),
                ids.len() * d,
                data.len()
            )));
        }
        if ids.len() < 2 {
            return Err(Error::InvalidParams("need at least 2 embedding rows".into()));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value in row {} ({})", i / d, ids[i / d])));
        }
        Ok(Self { ids, data, d })
    }

    /// Rows with ids `"0"`, `"1"`, ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParams("rows have different lengths".into()));
        }
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(ids, rows.concat(), d)
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Each row scaled to unit Euclidean norm; zero rows are left as is.
    pub fn l2_normalized(&self) -> Self {
        let mut data = self.data.clone();
        for row in data.chunks_mut(self.d) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
        Self { ids: self.ids.clone(), data, d: self.d }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    pub labels: Vec<usize>,
    /// Row-major `k × d`.
    pub centroids: Vec<f64>,
    pub inertia: f64,
    pub silhouette: f64,
    /// Lloyd updates performed.
    pub iterations: usize,
    /// Inertia after each assignment step, starting with the seeding.
    pub inertia_trace: Vec<f64>,
}

impl ClusterResult {
    pub fn centroid(&self, j: usize) -> &[f64] {
        let d = self.centroids.len() / self.k;
        &self.centroids[j * d..(j + 1) * d]
    }
}

fn seed_centroids(x: &EmbeddingMatrix, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = x.n();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if *w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` past the last increment.
            pick.unwrap_or_else(|| d2.iter().rposition(|w| *w > 0.0).expect("total > 0"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    chosen.iter().flat_map(|&i| x.row(i).to_vec()).collect()
}

/// Nearest centroid per point. A point keeps its current label unless
/// another centroid is strictly closer; ties otherwise go to the lowest index.
fn assign(x: &EmbeddingMatrix, centroids: &[f64], k: usize, prev: Option<&[usize]>) -> Vec<usize> {
    let d = x.d();
    (0..x.n())
        .into_par_iter()
        .map(|i| {
            let row = x.row(i);
            let mut best = prev.map_or(0, |p| p[i]);
            let mut best_d = sq_dist(row, &centroids[best * d..(best + 1) * d]);
            for j in 0..k {
                let dj = sq_dist(row, &centroids[j * d..(j + 1) * d]);
                if dj < best_d {
                    best = j;
                    best_d = dj;
                }
            }
            best
        })
        .collect()
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(x: &EmbeddingMatrix, centroids: &mut [f64], labels: &mut [usize], k: usize) {
    let d = x.d();
    loop {
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let far = (0..x.n())
            .filter(|&i| sizes[labels[i]] > 1)
            .map(|i| (i, sq_dist(x.row(i), &centroids[labels[i] * d..(labels[i] + 1) * d])))
            .fold((usize::MAX, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
            .0;
        centroids[empty * d..(empty + 1) * d].copy_from_slice(x.row(far));
        labels[far] = empty;
    }
}

fn inertia(x: &EmbeddingMatrix, centroids: &[f64], labels: &[usize]) -> f64 {
    let d = x.d();
    labels.iter().enumerate().map(|(i, &l)| sq_dist(x.row(i), &centroids[l * d..(l + 1) * d])).sum()
}

fn means(x: &EmbeddingMatrix, labels: &[usize], k: usize) -> Vec<f64> {
    let d = x.d();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for (j, c) in counts.iter().enumerate() {
        sums[j * d..(j + 1) * d].iter_mut().for_each(|s| *s /= *c as f64);
    }
    sums
}

/// Lloyd's algorithm from k-means++ seeds. Stops once no centroid moves
/// by `tol` or more, or after `max_iter` updates.
pub fn kmeans(x: &EmbeddingMatrix, k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<ClusterResult> {
    if k < 2 || k > x.n() {
        return Err(Error::Clustering(format!("k must be in [2, {}], got {k}", x.n())));
    }
    if max_iter == 0 {
        return Err(Error::Clustering("max_iter must be >= 1".into()));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Clustering(format!("tol must be >= 0, got {tol}")));
    }
    let d = x.d();
    let mut rng = substream(seed, Stream::Clustering, k as u64);
    let mut centroids = seed_centroids(x, k, &mut rng);
    let mut labels: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut next = assign(x, &centroids, k, labels.as_deref());
        repair_empty(x, &mut centroids, &mut next, k);
        trace.push(inertia(x, &centroids, &next));
        let done = labels.as_ref() == Some(&next) && iterations > 0 || iterations >= max_iter;
        labels = Some(next);
        if done {
            break;
        }
        let updated = means(x, labels.as_ref().expect("just assigned"), k);
        let shift =
            (0..k).map(|j| dist(&centroids[j * d..(j + 1) * d], &updated[j * d..(j + 1) * d])).fold(0.0, f64::max);
        centroids = updated;
        iterations += 1;
        if shift < tol {
            let mut last = assign(x, &centroids, k, labels.as_deref());
            repair_empty(x, &mut centroids, &mut last, k);
            trace.push(inertia(x, &centroids, &last));
            labels = Some(last);
            break;
        }
    }
    let labels = labels.expect("at least one assignment");
    let silhouette = silhouette(x, &labels)?;
    Ok(ClusterResult {
        k,
        inertia: *trace.last().expect("non-empty trace"),
        labels,
        centroids,
        silhouette,
        iterations,
        inertia_trace: trace,
    })
}

/// Mean silhouette width. Points in singleton clusters score 0, as do points
/// whose intra- and nearest-cluster mean distances are both 0.
pub fn silhouette(x: &EmbeddingMatrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != x.n() {
        return Err(Error::Clustering(format!("{} labels for {} points", labels.len(), x.n())));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    if k < 2 {
        return Err(Error::Clustering("silhouette needs at least 2 clusters".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Clustering("cluster labels must be contiguous from 0".into()));
    }
    let scores: Vec<f64> = (0..x.n())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..x.n() {
                if j != i {
                    sums[labels[j]] += dist(x.row(i), x.row(j));
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k).filter(|&c| c != own).map(|c| sums[c] / sizes[c] as f64).fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / x.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// `(k, silhouette)` for every candidate.
    pub scores: Vec<(usize, f64)>,
    pub best: ClusterResult,
}

pub const SELECT_MAX_ITER: usize = 300;
pub const SELECT_TOL: f64 = 1e-10;

/// For each k keeps the lowest-inertia run out of `restarts`, then picks the
/// k with the highest silhouette (smallest k on ties).
pub fn select_k(x: &EmbeddingMatrix, k_min: usize, k_max: usize, seed: u64, restarts: usize) -> Result<KSelection> {
    if !(2 <= k_min && k_min <= k_max && k_max < x.n()) {
        return Err(Error::Clustering(format!(
            "need 2 <= k_min <= k_max <= n-1, got k in [{k_min}, {k_max}] with n = {}",
            x.n()
        )));
    }
    if restarts == 0 {
        return Err(Error::Clustering("restarts must be >= 1".into()));
    }
    let mut scores = Vec::new();
    let mut best: Option<ClusterResult> = None;
    for k in k_min..=k_max {
        let mut pick: Option<ClusterResult> = None;
        for r in 0..restarts {
            let run = kmeans(x, k, seed.wrapping_add(r as u64), SELECT_MAX_ITER, SELECT_TOL)?;
            if pick.as_ref().is_none_or(|p| run.inertia < p.inertia) {
                pick = Some(run);
            }
        }
        let pick = pick.expect("restarts >= 1");
        scores.push((k, pick.silhouette));
        if best.as_ref().is_none_or(|b| pick.silhouette > b.silhouette) {
            best = Some(pick);
        }
    }
    let best = best.expect("k range is non-empty");
    Ok(KSelection { k: best.k, scores, best })
}

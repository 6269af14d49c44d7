//! Synthetic datasets, label schemes, queries, and the exact filtered
//! ground truth.
//!
//! Every generator is deterministic under its seed (see [`crate::rng`] for
//! the pinned generator). Vectors come from a seeded Gaussian mixture so
//! that graph search is non-trivial and spatially correlated labels mean
//! something. Queries perturb held-out dataset points by Gaussian noise
//! sized at 5% of the mean pairwise distance.
//!
//! Ground-truth file (little-endian): magic `GANNGT01` | u64 Q | u32 K |
//! per query u32 x K ids + f32 x K distances. Queries with fewer than K
//! matches pad with id `0xFFFF_FFFF` and distance `+inf`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::byteio;
use crate::dataset::{Dtype, NodeId, Vector, VectorDataset};
use crate::error::{Error, Result};
use crate::filter::Predicate;
use crate::kmeans::kmeans;
use crate::rng::{derive_seed, Rng64};
use crate::stores::FilterStore;

pub const GT_MAGIC: &[u8; 8] = b"GANNGT01";
pub const GT_PAD_ID: u32 = u32::MAX;

/// Label assignment schemes used by the experiments.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelScheme {
    /// i.i.d. uniform over `k` classes.
    Uniform { k: u16 },
    /// Class `r` (1-indexed by popularity) has probability `r^-alpha / H`.
    Zipf { k: u16, alpha: f64 },
    /// k-means labels mixed with uniform noise: with probability
    /// `alpha_mix` a node takes its nearest-center label.
    Spatial { k: u16, alpha_mix: f64 },
    /// Equal-frequency bins over vector L2 norms.
    NormBins { b: u16 },
    /// Multi-label tag rows: Poisson(mean_tags) tags per node drawn without
    /// replacement from a Zipf popularity over `vocab` tags.
    MultiLabel { vocab: u32, zipf_alpha: f64, mean_tags: f64 },
}

/// The Gaussian mixture behind [`gen_vectors`], exposed so tests and
/// experiments can consult the true component parameters.
pub struct MixtureModel {
    pub dim: usize,
    pub clusters: usize,
    /// clusters x dim component means.
    pub centers: Vec<f32>,
    /// Shared per-coordinate standard deviation.
    pub sigma: f64,
    pub dtype: Dtype,
}

impl MixtureModel {
    pub fn center(&self, c: usize) -> &[f32] {
        &self.centers[c * self.dim..(c + 1) * self.dim]
    }
}

pub fn mixture_model(dim: usize, dtype: Dtype, clusters: usize, seed: u64) -> MixtureModel {
    let mut rng = Rng64::new(derive_seed(seed, 0xC3A7));
    let (lo, hi, sigma) = match dtype {
        // Centers stay 4 sigma inside [0, 255] so clipping is negligible.
        Dtype::U8 => (80.0, 176.0, 20.0),
        Dtype::F32 => (-1.0, 1.0, 0.25),
    };
    let centers: Vec<f32> = (0..clusters * dim)
        .map(|_| (lo + rng.next_f64() * (hi - lo)) as f32)
        .collect();
    MixtureModel { dim, clusters, centers, sigma, dtype }
}

/// Seeded Gaussian-mixture dataset with `clusters` components.
pub fn gen_vectors(n: usize, dim: usize, dtype: Dtype, clusters: usize, seed: u64) -> Result<VectorDataset> {
    if n == 0 || dim == 0 || clusters == 0 {
        return Err(Error::param("n, dim, clusters must be >= 1"));
    }
    let model = mixture_model(dim, dtype, clusters, seed);
    let mut rng = Rng64::new(derive_seed(seed, 0xDA7A));
    match dtype {
        Dtype::U8 => {
            let mut data = Vec::with_capacity(n * dim);
            for _ in 0..n {
                let c = rng.below(clusters as u64) as usize;
                let center = model.center(c);
                for d in 0..dim {
                    let x = center[d] as f64 + model.sigma * rng.normal();
                    data.push(x.round().clamp(0.0, 255.0) as u8);
                }
            }
            VectorDataset::from_u8(n, dim, data)
        }
        Dtype::F32 => {
            let mut data = Vec::with_capacity(n * dim);
            for _ in 0..n {
                let c = rng.below(clusters as u64) as usize;
                let center = model.center(c);
                for d in 0..dim {
                    data.push((center[d] as f64 + model.sigma * rng.normal()) as f32);
                }
            }
            VectorDataset::from_f32(n, dim, data)
        }
    }
}

/// i.i.d. uniform labels over `k` classes.
pub fn gen_uniform_labels(n: usize, k: u16, seed: u64) -> Result<Vec<u8>> {
    check_classes(k)?;
    let mut rng = Rng64::new(derive_seed(seed, 0x1AB5));
    Ok((0..n).map(|_| rng.below(k as u64) as u8).collect())
}

/// Analytic Zipf class probabilities: class r (1-indexed) gets
/// `r^-alpha / H` where `H = sum_{j=1..k} j^-alpha`. Class ids are
/// 0-indexed, so label 0 is the most common class.
pub fn zipf_pmf(k: u16, alpha: f64) -> Vec<f64> {
    let h: f64 = (1..=k as u32).map(|j| (j as f64).powf(-alpha)).sum();
    (1..=k as u32).map(|r| (r as f64).powf(-alpha) / h).collect()
}

/// Zipf-distributed labels with exact cumulative inversion.
pub fn gen_zipf_labels(n: usize, k: u16, alpha: f64, seed: u64) -> Result<Vec<u8>> {
    check_classes(k)?;
    let pmf = zipf_pmf(k, alpha);
    let mut cdf = Vec::with_capacity(k as usize);
    let mut acc = 0.0;
    for p in &pmf {
        acc += p;
        cdf.push(acc);
    }
    let mut rng = Rng64::new(derive_seed(seed, 0x21BF));
    Ok((0..n)
        .map(|_| {
            let u = rng.next_f64();
            cdf.partition_point(|&c| c <= u).min(k as usize - 1) as u8
        })
        .collect())
}

/// Labels from seeded k-means (`k` clusters, 20 iterations) mixed with
/// uniform noise: with probability `alpha_mix` a node takes its nearest
/// cluster-center label, otherwise a uniform random label.
pub fn gen_spatial_labels(dataset: &VectorDataset, k: u16, alpha_mix: f64, seed: u64) -> Result<Vec<u8>> {
    check_classes(k)?;
    if !(0.0..=1.0).contains(&alpha_mix) {
        return Err(Error::param("alpha_mix must be in [0, 1]"));
    }
    let n = dataset.count();
    let dim = dataset.dim();
    let mut pts = vec![0.0f32; n * dim];
    let mut w = Vec::new();
    for i in 0..n {
        dataset.row(i as NodeId).widen_into(&mut w);
        pts[i * dim..(i + 1) * dim].copy_from_slice(&w);
    }
    let res = kmeans(&pts, n, dim, k as usize, 20, derive_seed(seed, 0x59A7));
    let mut rng = Rng64::new(derive_seed(seed, 0x59A8));
    Ok((0..n)
        .map(|i| {
            if rng.next_f64() < alpha_mix {
                res.assignments[i] as u8
            } else {
                rng.below(k as u64) as u8
            }
        })
        .collect())
}

/// Expose the nearest-center assignment used by [`gen_spatial_labels`] so
/// callers can verify `alpha_mix = 1` agreement.
pub fn spatial_centers(dataset: &VectorDataset, k: u16, seed: u64) -> Result<Vec<f32>> {
    check_classes(k)?;
    let n = dataset.count();
    let dim = dataset.dim();
    let mut pts = vec![0.0f32; n * dim];
    let mut w = Vec::new();
    for i in 0..n {
        dataset.row(i as NodeId).widen_into(&mut w);
        pts[i * dim..(i + 1) * dim].copy_from_slice(&w);
    }
    Ok(kmeans(&pts, n, dim, k as usize, 20, derive_seed(seed, 0x59A7)).centroids)
}

/// Equal-frequency bins over vector L2 norms: all norms are sorted
/// (ties by node id) and cut at quantiles, so bin sizes differ by at most 1.
pub fn gen_norm_bins(dataset: &VectorDataset, b: u16) -> Result<Vec<u8>> {
    check_classes(b)?;
    let n = dataset.count();
    let mut w = Vec::new();
    let mut order: Vec<(f64, u32)> = (0..n)
        .map(|i| {
            dataset.row(i as NodeId).widen_into(&mut w);
            let norm2: f64 = w.iter().map(|&x| (x as f64) * (x as f64)).sum();
            (norm2, i as u32)
        })
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut bins = vec![0u8; n];
    for (rank, &(_, id)) in order.iter().enumerate() {
        bins[id as usize] = ((rank * b as usize) / n) as u8;
    }
    Ok(bins)
}

/// Multi-label CSR rows: per node, Poisson(mean_tags) tags (at least 1)
/// drawn without replacement from a Zipf(vocab, zipf_alpha) popularity
/// distribution. Rows come out strictly sorted.
pub fn gen_multilabel(n: usize, vocab: u32, zipf_alpha: f64, mean_tags: f64, seed: u64) -> Result<FilterStore> {
    if vocab == 0 || mean_tags <= 0.0 {
        return Err(Error::param("vocab >= 1 and mean_tags > 0 required"));
    }
    // Popularity CDF over the tag vocabulary, most popular tag first.
    let h: f64 = (1..=vocab as u64).map(|j| (j as f64).powf(-zipf_alpha)).sum();
    let mut cdf = Vec::with_capacity(vocab as usize);
    let mut acc = 0.0;
    for r in 1..=vocab as u64 {
        acc += (r as f64).powf(-zipf_alpha) / h;
        cdf.push(acc);
    }

    let mut rng = Rng64::new(derive_seed(seed, 0x7A65));
    let mut offsets = Vec::with_capacity(n + 1);
    let mut tags: Vec<u32> = Vec::new();
    offsets.push(0u64);
    let mut row: Vec<u32> = Vec::new();
    for _ in 0..n {
        let want = (rng.poisson(mean_tags).max(1)).min(vocab as u64) as usize;
        row.clear();
        while row.len() < want {
            let u = rng.next_f64();
            let t = cdf.partition_point(|&c| c <= u).min(vocab as usize - 1) as u32;
            if !row.contains(&t) {
                row.push(t);
            }
        }
        row.sort_unstable();
        tags.extend_from_slice(&row);
        offsets.push(tags.len() as u64);
    }
    FilterStore::from_tag_rows(offsets, tags)
}

fn check_classes(k: u16) -> Result<()> {
    if k == 0 || k > 256 {
        return Err(Error::param("class/bin count must be in [1, 256]"));
    }
    Ok(())
}

/// How query predicates are drawn.
#[derive(Clone, Debug)]
pub enum PredScheme {
    /// Equality over a uniformly drawn class.
    Class { k: u16 },
    /// Range-bin over a uniformly drawn bin.
    Bin { b: u16 },
    /// Subset of `tags_per_query` tags taken from a random node's tag row
    /// (popularity-weighted by construction, and never empty of matches).
    SubsetTags { tags_per_query: usize },
}

/// A query workload: held-out vectors, aligned predicates, and the exact
/// per-query selectivity of each predicate.
pub struct QuerySet {
    pub queries: Vec<Vector>,
    pub preds: Vec<Predicate>,
    pub selectivities: Vec<f64>,
}

impl QuerySet {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn mean_selectivity(&self) -> f64 {
        self.selectivities.iter().sum::<f64>() / self.selectivities.len().max(1) as f64
    }
}

/// Mean pairwise Euclidean distance estimated over seeded sample pairs.
pub fn mean_pairwise_distance(dataset: &VectorDataset, pairs: usize, seed: u64) -> f64 {
    let n = dataset.count();
    let mut rng = Rng64::new(derive_seed(seed, 0xD157));
    let mut total = 0.0;
    let mut counted = 0usize;
    for _ in 0..pairs {
        let a = rng.below(n as u64) as u32;
        let b = rng.below(n as u64) as u32;
        if a == b {
            continue;
        }
        total += dataset.dist2(a, dataset.row(b)).unwrap().sqrt();
        counted += 1;
    }
    total / counted.max(1) as f64
}

/// Generate `q` queries: each perturbs a random dataset row with
/// per-coordinate Gaussian noise of sigma = 0.05 x mean pairwise distance /
/// sqrt(dim), plus a predicate drawn per `scheme`. Selectivities are exact.
pub fn gen_queries(
    dataset: &VectorDataset,
    filters: &FilterStore,
    scheme: &PredScheme,
    q: usize,
    seed: u64,
) -> Result<QuerySet> {
    let dim = dataset.dim();
    let sigma = 0.05 * mean_pairwise_distance(dataset, 512, seed) / (dim as f64).sqrt();
    let mut rng = Rng64::new(derive_seed(seed, 0x9E77));
    let mut w = Vec::new();

    let mut queries = Vec::with_capacity(q);
    let mut preds = Vec::with_capacity(q);
    let mut selectivities = Vec::with_capacity(q);
    for _ in 0..q {
        let base = rng.below(dataset.count() as u64) as u32;
        dataset.row(base).widen_into(&mut w);
        let query = match dataset.dtype() {
            Dtype::U8 => Vector::U8(
                w.iter()
                    .map(|&x| (x as f64 + sigma * rng.normal()).round().clamp(0.0, 255.0) as u8)
                    .collect(),
            ),
            Dtype::F32 => Vector::F32(
                w.iter().map(|&x| (x as f64 + sigma * rng.normal()) as f32).collect(),
            ),
        };
        let pred = match scheme {
            PredScheme::Class { k } => Predicate::Equality(rng.below(*k as u64) as u8),
            PredScheme::Bin { b } => Predicate::RangeBin(rng.below(*b as u64) as u8),
            PredScheme::SubsetTags { tags_per_query } => {
                let want = (*tags_per_query).max(1);
                // Sample a node with enough tags, then pick distinct tags
                // from its row; the sampled node itself always matches.
                let row = loop {
                    let node = rng.below(dataset.count() as u64) as u32;
                    let row = filters
                        .tags(node)
                        .ok_or(Error::KindMismatch)?;
                    if row.len() >= want {
                        break row;
                    }
                };
                let mut chosen: Vec<u32> = Vec::with_capacity(want);
                while chosen.len() < want {
                    let t = row[rng.below(row.len() as u64) as usize];
                    if !chosen.contains(&t) {
                        chosen.push(t);
                    }
                }
                Predicate::subset(chosen)?
            }
        };
        selectivities.push(filters.selectivity(&pred)?);
        queries.push(query);
        preds.push(pred);
    }
    Ok(QuerySet { queries, preds, selectivities })
}

/// Exact filtered top-K by brute force: scan every node, keep those that
/// satisfy the predicate, rank by exact distance with (distance, id)
/// tie-break. This is the oracle behind every recall number.
pub fn ground_truth(
    dataset: &VectorDataset,
    filters: &FilterStore,
    queries: &[Vector],
    preds: &[Predicate],
    k: usize,
    threads: usize,
) -> Result<Vec<Vec<(NodeId, f64)>>> {
    if queries.len() != preds.len() {
        return Err(Error::param("queries and predicates must align"));
    }
    crate::par::par_fill(queries.len(), threads, |qi| {
        let q = queries[qi].as_ref();
        let pred = &preds[qi];
        let mut matches: Vec<(f64, u32)> = Vec::new();
        for id in 0..dataset.count() as u32 {
            if filters.evaluate(pred, id)? {
                matches.push((dataset.dist2(id, q)?, id));
            }
        }
        matches.sort_by(|a, b| a.partial_cmp(b).unwrap());
        matches.truncate(k);
        Ok(matches.into_iter().map(|(d, id)| (id, d)).collect())
    })
}

/// Write ground truth rows with fixed stride K (short rows are padded).
pub fn save_ground_truth(path: &Path, truth: &[Vec<(NodeId, f64)>], k: usize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(GT_MAGIC)?;
    byteio::write_u64(&mut w, truth.len() as u64)?;
    byteio::write_u32(&mut w, k as u32)?;
    for row in truth {
        if row.len() > k {
            return Err(Error::param("ground truth row longer than K"));
        }
        for &(id, _) in row {
            byteio::write_u32(&mut w, id)?;
        }
        for _ in row.len()..k {
            byteio::write_u32(&mut w, GT_PAD_ID)?;
        }
        for &(_, d) in row {
            byteio::write_f32(&mut w, d as f32)?;
        }
        for _ in row.len()..k {
            byteio::write_f32(&mut w, f32::INFINITY)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Load ground truth; padded entries are dropped.
pub fn load_ground_truth(path: &Path) -> Result<Vec<Vec<(NodeId, f64)>>> {
    let mut r = BufReader::new(File::open(path)?);
    byteio::expect_magic(&mut r, GT_MAGIC, "ground truth file")?;
    let q = byteio::read_u64(&mut r)? as usize;
    let k = byteio::read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(q);
    for _ in 0..q {
        let mut ids = Vec::with_capacity(k);
        for _ in 0..k {
            ids.push(byteio::read_u32(&mut r)?);
        }
        let mut dists = Vec::with_capacity(k);
        for _ in 0..k {
            dists.push(byteio::read_f32(&mut r)?);
        }
        out.push(
            ids.into_iter()
                .zip(dists)
                .filter(|&(id, _)| id != GT_PAD_ID)
                .map(|(id, d)| (id, d as f64))
                .collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_deterministic_and_in_range() {
        let a = gen_vectors(200, 8, Dtype::U8, 4, 9).unwrap();
        let b = gen_vectors(200, 8, Dtype::U8, 4, 9).unwrap();
        for i in 0..200u32 {
            assert_eq!(a.dist2(i, b.row(i)).unwrap(), 0.0);
        }
        // u8 range is enforced by the type; spot-check the spread.
        let c = gen_vectors(200, 8, Dtype::U8, 4, 10).unwrap();
        assert_ne!(a.dist2(0, c.row(0)).unwrap(), 0.0);
    }

    #[test]
    fn single_cluster_sample_mean_near_center() {
        let n = 20_000;
        let ds = gen_vectors(n, 4, Dtype::U8, 1, 33).unwrap();
        let model = mixture_model(4, Dtype::U8, 1, 33);
        let mut w = Vec::new();
        let mut mean = [0.0f64; 4];
        for i in 0..n {
            ds.row(i as u32).widen_into(&mut w);
            for d in 0..4 {
                mean[d] += w[d] as f64;
            }
        }
        let bound = 3.0 * model.sigma / (n as f64).sqrt();
        for d in 0..4 {
            mean[d] /= n as f64;
            let center = model.center(0)[d] as f64;
            assert!(
                (mean[d] - center).abs() < bound + 0.05,
                "coord {d}: mean {} vs center {center}",
                mean[d]
            );
        }
    }

    #[test]
    fn uniform_labels() {
        let all_zero = gen_uniform_labels(500, 1, 3).unwrap();
        assert!(all_zero.iter().all(|&l| l == 0));

        let n = 100_000;
        let k = 10u16;
        let labels = gen_uniform_labels(n, k, 5).unwrap();
        assert_eq!(labels, gen_uniform_labels(n, k, 5).unwrap());
        let mut hist = [0usize; 10];
        for &l in &labels {
            hist[l as usize] += 1;
        }
        // Binomial 3-sigma bound around n/k.
        let p = 1.0 / k as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for (c, &h) in hist.iter().enumerate() {
            assert!(
                (h as f64 - n as f64 * p).abs() < 3.0 * sd,
                "class {c}: {h} vs {}",
                n as f64 * p
            );
        }
    }

    #[test]
    fn zipf_head_and_tail_probabilities() {
        let pmf = zipf_pmf(10, 1.0);
        assert!((pmf[0] - 0.34141).abs() < 1e-4, "head {}", pmf[0]);
        assert!((pmf[9] - 0.03414).abs() < 1e-4, "tail {}", pmf[9]);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        // alpha = 0 degenerates to uniform.
        let flat = zipf_pmf(10, 0.0);
        for p in flat {
            assert!((p - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn zipf_labels_match_pmf_empirically() {
        let n = 200_000;
        let labels = gen_zipf_labels(n, 10, 1.0, 8).unwrap();
        let mut hist = [0usize; 10];
        for &l in &labels {
            hist[l as usize] += 1;
        }
        let head = hist[0] as f64 / n as f64;
        let tail = hist[9] as f64 / n as f64;
        assert!((head - 0.3414).abs() < 0.01, "head {head}");
        assert!((tail - 0.0341).abs() < 0.005, "tail {tail}");
    }

    #[test]
    fn spatial_labels_alpha_one_matches_exhaustive_scan() {
        let ds = gen_vectors(2000, 6, Dtype::U8, 5, 21).unwrap();
        let labels = gen_spatial_labels(&ds, 5, 1.0, 77).unwrap();
        let centers = spatial_centers(&ds, 5, 77).unwrap();
        let mut w = Vec::new();
        for i in 0..2000 {
            ds.row(i as u32).widen_into(&mut w);
            let mut best = 0u8;
            let mut best_d = f32::INFINITY;
            for c in 0..5 {
                let d = crate::distance::l2_f32_fast(&w, &centers[c * 6..(c + 1) * 6]);
                if d < best_d {
                    best_d = d;
                    best = c as u8;
                }
            }
            assert_eq!(labels[i], best, "node {i}");
        }
    }

    #[test]
    fn spatial_labels_alpha_zero_is_uniform() {
        let ds = gen_vectors(50_000, 4, Dtype::U8, 5, 22).unwrap();
        let labels = gen_spatial_labels(&ds, 10, 0.0, 78).unwrap();
        let mut hist = [0usize; 10];
        for &l in &labels {
            hist[l as usize] += 1;
        }
        let p = 0.1;
        let sd = (50_000.0 * p * (1.0 - p)).sqrt();
        for &h in &hist {
            assert!((h as f64 - 5000.0).abs() < 4.0 * sd, "count {h}");
        }
    }

    #[test]
    fn norm_bins_equal_frequency() {
        let ds = gen_vectors(1003, 4, Dtype::U8, 3, 30).unwrap();
        let bins = gen_norm_bins(&ds, 10).unwrap();
        let mut hist = [0usize; 10];
        for &b in &bins {
            hist[b as usize] += 1;
        }
        let (lo, hi) = (hist.iter().min().unwrap(), hist.iter().max().unwrap());
        assert!(hi - lo <= 1, "bin sizes {hist:?}");

        // Single bin puts everything in bin 0.
        let one = gen_norm_bins(&ds, 1).unwrap();
        assert!(one.iter().all(|&b| b == 0));

        // The max-norm vector lands in the top bin.
        let mut w = Vec::new();
        let mut max_id = 0u32;
        let mut max_norm = -1.0f64;
        for i in 0..1003u32 {
            ds.row(i).widen_into(&mut w);
            let norm: f64 = w.iter().map(|&x| (x as f64) * (x as f64)).sum();
            if norm > max_norm {
                max_norm = norm;
                max_id = i;
            }
        }
        assert_eq!(bins[max_id as usize], 9);
    }

    #[test]
    fn multilabel_rows_sorted_and_popular_head() {
        let n = 100_000;
        let fs = gen_multilabel(n, 1000, 1.0, 3.0, 44).unwrap();
        let mut top_count = 0usize;
        let mut nnz = 0usize;
        for i in 0..n as u32 {
            let row = fs.tags(i).unwrap();
            assert!(!row.is_empty());
            assert!(row.windows(2).all(|w| w[0] < w[1]), "row {i} not strictly sorted");
            nnz += row.len();
            top_count += row.iter().filter(|&&t| t == 0).count();
        }
        // Tag 0 share of all drawn tags tracks the Zipf head within 10%.
        let h: f64 = (1..=1000u64).map(|j| 1.0 / j as f64).sum();
        let expect = 1.0 / h;
        let got = top_count as f64 / nnz as f64;
        assert!(
            (got - expect).abs() / expect < 0.10,
            "top-tag share {got} vs zipf head {expect}"
        );
    }

    #[test]
    fn queries_selectivity_and_determinism() {
        let ds = gen_vectors(5000, 6, Dtype::U8, 4, 50).unwrap();
        let labels = gen_uniform_labels(5000, 10, 51).unwrap();
        let fs = FilterStore::from_labels(labels, 10).unwrap();
        let qs = gen_queries(&ds, &fs, &PredScheme::Class { k: 10 }, 200, 52).unwrap();
        let qs2 = gen_queries(&ds, &fs, &PredScheme::Class { k: 10 }, 200, 52).unwrap();
        assert_eq!(qs.preds, qs2.preds);
        assert_eq!(qs.queries.len(), 200);
        let mean = qs.mean_selectivity();
        assert!((mean - 0.10).abs() < 0.02, "mean selectivity {mean}");
        // Exact per-query selectivity equals the label histogram fraction.
        for (p, &s) in qs.preds.iter().zip(&qs.selectivities) {
            assert_eq!(s, fs.selectivity(p).unwrap());
        }
    }

    #[test]
    fn subset_queries_always_have_matches() {
        let ds = gen_vectors(2000, 4, Dtype::U8, 4, 60).unwrap();
        let fs = gen_multilabel(2000, 50, 1.0, 3.0, 61).unwrap();
        let qs = gen_queries(&ds, &fs, &PredScheme::SubsetTags { tags_per_query: 1 }, 100, 62).unwrap();
        for &s in &qs.selectivities {
            assert!(s > 0.0);
        }
        for p in &qs.preds {
            match p {
                Predicate::Subset(tags) => assert_eq!(tags.len(), 1),
                _ => panic!("wrong predicate kind"),
            }
        }
    }

    #[test]
    fn ground_truth_matches_and_handles_edges() {
        let ds = gen_vectors(800, 4, Dtype::U8, 3, 70).unwrap();
        let labels = gen_uniform_labels(800, 4, 71).unwrap();
        let fs = FilterStore::from_labels(labels.clone(), 4).unwrap();
        let queries = vec![ds.row(5).to_owned_vector(), ds.row(99).to_owned_vector()];
        let preds = vec![Predicate::Equality(1), Predicate::Equality(2)];
        let gt = ground_truth(&ds, &fs, &queries, &preds, 10, 1).unwrap();

        // Independent second scan, coded differently (max-heap style).
        for (qi, row) in gt.iter().enumerate() {
            let q = queries[qi].as_ref();
            let mut best: Vec<(f64, u32)> = Vec::new();
            for id in 0..800u32 {
                if labels[id as usize] != match preds[qi] { Predicate::Equality(c) => c, _ => unreachable!() } {
                    continue;
                }
                let d = ds.dist2(id, q).unwrap();
                let pos = best.partition_point(|&(bd, bid)| (bd, bid) < (d, id));
                best.insert(pos, (d, id));
                best.truncate(10);
            }
            let expect: Vec<(u32, f64)> = best.into_iter().map(|(d, id)| (id, d)).collect();
            assert_eq!(*row, expect, "query {qi}");
        }

        // Predicate matching nothing -> empty truth. Class 200 never occurs.
        let fs5 = FilterStore::from_labels(vec![0; 800], 201).unwrap();
        let gt = ground_truth(&ds, &fs5, &queries[..1], &[Predicate::Equality(200)], 10, 1).unwrap();
        assert!(gt[0].is_empty());

        // K >= matches returns all matches, distance-sorted.
        let mut few = vec![0u8; 800];
        few[3] = 1;
        few[700] = 1;
        let fs2 = FilterStore::from_labels(few, 2).unwrap();
        let gt = ground_truth(&ds, &fs2, &queries[..1], &[Predicate::Equality(1)], 10, 1).unwrap();
        assert_eq!(gt[0].len(), 2);
        assert!(gt[0][0].1 <= gt[0][1].1);
    }

    #[test]
    fn selectivity_one_ground_truth_equals_unfiltered_knn() {
        let ds = gen_vectors(600, 4, Dtype::U8, 3, 80).unwrap();
        let fs = FilterStore::from_labels(vec![0; 600], 1).unwrap();
        let queries = vec![ds.row(17).to_owned_vector()];
        let gt = ground_truth(&ds, &fs, &queries, &[Predicate::Equality(0)], 5, 1).unwrap();

        let mut all: Vec<(f64, u32)> = (0..600u32)
            .map(|i| (ds.dist2(i, queries[0].as_ref()).unwrap(), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect: Vec<(u32, f64)> = all.into_iter().take(5).map(|(d, i)| (i, d)).collect();
        assert_eq!(gt[0], expect);
    }

    #[test]
    fn ground_truth_file_roundtrip_with_padding() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gt.bin");
        let truth = vec![
            vec![(4u32, 1.0f64), (9, 2.5)],
            vec![],
            vec![(0, 0.0), (1, 1.0), (2, 2.0)],
        ];
        save_ground_truth(&p, &truth, 3).unwrap();
        let back = load_ground_truth(&p).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0], vec![(4, 1.0), (9, 2.5)]);
        assert!(back[1].is_empty());
        assert_eq!(back[2].len(), 3);
    }
}

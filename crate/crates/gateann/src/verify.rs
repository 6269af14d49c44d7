//! Self-contained invariant suite behind the `verify` command.
//!
//! Builds a small index in a scratch directory and checks the structural
//! invariants that make the engine trustworthy: the gating invariant (no
//! read ever targets a filter-failing node), record round-trips, the
//! neighbor-store prefix property, the memory formula, result soundness,
//! and gated/post equivalence under an always-true predicate.

use std::path::Path;
use std::sync::Arc;

use crate::dataset::Dtype;
use crate::error::Result;
use crate::filter::Predicate;
use crate::graph::{build_vamana, BuildParams};
use crate::search::{SearchIndex, SearchMode, SearchParams};
use crate::stores::{neighbor_store_bytes, FilterStore, NeighborStore};
use crate::storage::{Backend, BackendKind, IndexImage, RecordingBackend};
use crate::{disk_index, pq, workload};

/// One named check with a pass flag and a human-readable detail line.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }
}

/// Run the invariant suite in `scratch_dir` (created if needed).
pub fn run(scratch_dir: &Path, seed: u64) -> Result<VerifyReport> {
    std::fs::create_dir_all(scratch_dir)?;
    let mut report = VerifyReport { checks: Vec::new() };

    // Small but non-trivial instance.
    let n = 3000usize;
    let dim = 12usize;
    let dataset = workload::gen_vectors(n, dim, Dtype::U8, 8, seed)?;
    let graph = build_vamana(&dataset, &BuildParams::new(12, 24, 1.2, seed)?)?;
    let index_path = scratch_dir.join("verify_index.bin");
    disk_index::write_disk_index(&graph, &dataset, 512, &index_path)?;

    // Record round-trip: every record byte-identical to its source.
    {
        let mut mismatches = 0usize;
        let mut scanned = 0usize;
        disk_index::scan_records(&index_path, |rec| {
            scanned += 1;
            let u = rec.node;
            let vec_ok = match (rec.vector.as_ref(), dataset.row(u)) {
                (crate::dataset::VectorRef::U8(a), crate::dataset::VectorRef::U8(b)) => a == b,
                _ => false,
            };
            if !vec_ok || rec.neighbors != graph.adjacency[u as usize] {
                mismatches += 1;
            }
            Ok(())
        })?;
        report.push(
            "record-roundtrip",
            mismatches == 0 && scanned == n,
            format!("{scanned} records scanned, {mismatches} mismatches"),
        );
    }

    let image = Arc::new(IndexImage::open(&index_path)?);
    let codebook = pq::train(&dataset, 4, 8, n, seed)?;
    let codes = pq::encode_all(&codebook, &dataset)?;
    let labels = workload::gen_uniform_labels(n, 10, seed.wrapping_add(1))?;
    let filters = FilterStore::from_labels(labels, 10)?;
    let r_max = 6usize;
    let neighbors = NeighborStore::build(&index_path, r_max)?;

    // Neighbor-store prefix property and the exact byte formula.
    {
        let mut prefix_ok = true;
        for (u, list) in graph.adjacency.iter().enumerate() {
            let keep = list.len().min(r_max);
            if neighbors.neighbors_of(u as u32)? != &list[..keep] {
                prefix_ok = false;
                break;
            }
        }
        report.push("neighbor-prefix", prefix_ok, format!("first {r_max} disk neighbors per node"));

        let formula = neighbor_store_bytes(n as u64, r_max as u64);
        let actual = neighbors.byte_len() as u64;
        report.push(
            "memory-formula",
            formula == actual && formula == (n as u64) * (1 + r_max as u64) * 4,
            format!("allocated {actual} B, formula {formula} B"),
        );
    }

    let index = SearchIndex::assemble(
        image,
        codebook,
        codes,
        filters,
        neighbors,
        BackendKind::default(),
    )?;
    let queries = workload::gen_queries(
        &dataset,
        &index.filters,
        &workload::PredScheme::Class { k: 10 },
        50,
        seed.wrapping_add(2),
    )?;

    // Gating invariant: every submitted read passes its predicate.
    {
        let params = SearchParams::new(SearchMode::Gated, 40, 10, 4)?;
        let mut violations = 0usize;
        let mut submitted_total = 0usize;
        let mut w_bound_ok = true;
        for (q, p) in queries.queries.iter().zip(&queries.preds) {
            let mut backend = RecordingBackend::new(index.session());
            index.search_with(&mut backend, q.as_ref(), p, &params)?;
            submitted_total += backend.submitted.len();
            for &node in &backend.submitted {
                if !index.filters.evaluate(p, node)? {
                    violations += 1;
                }
            }
            if backend.stats().max_in_flight > 4 {
                w_bound_ok = false;
            }
        }
        report.push(
            "gating-invariant",
            violations == 0,
            format!("{violations} violations over {submitted_total} submitted reads"),
        );
        report.push("w-bound", w_bound_ok, "in-flight reads never exceeded W".to_string());
    }

    // Result soundness: all results satisfy the predicate and carry the
    // recomputed exact distance.
    {
        let params = SearchParams::new(SearchMode::Gated, 40, 10, 4)?;
        let mut sound = true;
        for (q, p) in queries.queries.iter().zip(&queries.preds) {
            let (hits, _) = index.search(q.as_ref(), p, &params)?;
            for h in &hits {
                let exact = dataset.dist2(h.node, q.as_ref())?;
                if !index.filters.evaluate(p, h.node)? || (exact - h.dist).abs() > 1e-9 {
                    sound = false;
                }
            }
        }
        report.push("result-soundness", sound, "results filter-pass with exact distances".to_string());
    }

    // Selectivity-1 equivalence: gated == pipe-post under an always-true
    // predicate (same results, same read multisets).
    {
        let always = FilterStore::from_labels(vec![0u8; n], 1)?;
        let cb = pq::train(&dataset, 4, 8, n, seed)?;
        let cd = pq::encode_all(&cb, &dataset)?;
        let swapped = SearchIndex::assemble(
            index.image.clone(),
            cb,
            cd,
            always,
            NeighborStore::build(&index_path, r_max)?,
            BackendKind::default(),
        )?;
        let pred = Predicate::Equality(0);
        let mut equal = true;
        for q in queries.queries.iter().take(20) {
            let run = |mode| -> Result<(Vec<crate::search::SearchHit>, Vec<u32>)> {
                let params = SearchParams::new(mode, 40, 10, 4)?;
                let mut backend = RecordingBackend::new(swapped.session());
                let (hits, _) = swapped.search_with(&mut backend, q.as_ref(), &pred, &params)?;
                let mut reads = backend.submitted;
                reads.sort_unstable();
                Ok((hits, reads))
            };
            let (gh, gr) = run(SearchMode::Gated)?;
            let (ph, pr) = run(SearchMode::PipePost)?;
            if gh != ph || gr != pr {
                equal = false;
            }
        }
        report.push(
            "selectivity-1-equivalence",
            equal,
            "gated == pipe-post under always-true predicate".to_string(),
        );
    }

    // Tunneling actually happens and never touches storage: the gated run on
    // low selectivity must tunnel and keep reads at filter-passing nodes only
    // (already checked), with exact distances only for reads.
    {
        let params = SearchParams::new(SearchMode::Gated, 40, 10, 4)?;
        let mut tunnels = 0u64;
        let mut pq_only_ok = true;
        for (q, p) in queries.queries.iter().zip(&queries.preds) {
            let (_, stats) = index.search(q.as_ref(), p, &params)?;
            tunnels += stats.tunnels;
            if stats.exact_dists != stats.ios || stats.hops != stats.ios + stats.tunnels {
                pq_only_ok = false;
            }
        }
        report.push(
            "pq-only-tunneling",
            tunnels > 0 && pq_only_ok,
            format!("{tunnels} tunneled expansions, exact distances only for reads"),
        );
    }

    Ok(report)
}

/// Render the report as one line per check.
pub fn render(report: &VerifyReport) -> String {
    let mut out = String::new();
    for c in &report.checks {
        out.push_str(&format!(
            "{} {} - {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_suite_passes_on_fresh_index() {
        let dir = tempfile::tempdir().unwrap();
        let report = run(dir.path(), 13).unwrap();
        let rendered = render(&report);
        assert!(report.all_passed(), "failed checks:\n{rendered}");
        assert!(rendered.contains("gating-invariant"));
        assert!(rendered.contains("0 violations"));
    }
}

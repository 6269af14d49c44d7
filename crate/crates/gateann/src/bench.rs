//! Experiment harness: parameter sweeps, paired baseline runs, metric
//! aggregation, and CSV emission.
//!
//! Paired-run protocol: rows meant to be compared (the I/O-reduction
//! ratios in particular) must come from sweeps over the same queries, seeds,
//! and ground truth; [`run_sweep`] guarantees that by taking one workload for
//! all modes. `wall_qps` is the only hardware-dependent column; the
//! virtual-latency and I/O-count columns are the portable metrics.

use std::io::{BufRead, Write};
use std::time::Instant;

use crate::dataset::NodeId;
use crate::error::{Error, Result};
use crate::recall::recall_at_k;
use crate::search::{SearchIndex, SearchMode, SearchParams};
use crate::workload::QuerySet;

pub const CSV_HEADER: &str =
    "mode,L,W,Rmax,selectivity,recall10,mean_ios,mean_tunnels,mean_vlat_us,wall_qps";

/// One sweep point: a (mode, L) pair evaluated over the whole query set.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub mode: SearchMode,
    pub l: usize,
    pub w: usize,
    pub r_max: usize,
    /// Mean exact selectivity of the query predicates.
    pub selectivity: f64,
    /// Mean Recall@10 over queries with non-empty ground truth.
    pub recall10: f64,
    pub mean_ios: f64,
    pub mean_tunnels: f64,
    pub mean_vlat_us: f64,
    /// Hardware-dependent wall-clock throughput.
    pub wall_qps: f64,
}

/// Sweep configuration: the cross product of modes and L values.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub modes: Vec<SearchMode>,
    pub l_values: Vec<usize>,
    pub w: usize,
    pub k: usize,
    pub threads: usize,
}

/// Run every (mode, L) point over one shared workload. Rows come out in
/// deterministic order: modes in config order, L ascending within each mode.
pub fn run_sweep(
    index: &SearchIndex,
    cfg: &SweepConfig,
    queries: &QuerySet,
    truth: &[Vec<(NodeId, f64)>],
) -> Result<Vec<SweepRow>> {
    if truth.len() != queries.len() {
        return Err(Error::param("ground truth does not match query count"));
    }
    let truth_ids: Vec<Vec<NodeId>> = truth
        .iter()
        .map(|row| row.iter().map(|&(id, _)| id).collect())
        .collect();
    let selectivity = queries.mean_selectivity();

    let mut rows = Vec::with_capacity(cfg.modes.len() * cfg.l_values.len());
    for &mode in &cfg.modes {
        let mut ls = cfg.l_values.clone();
        ls.sort_unstable();
        for l in ls {
            let params = SearchParams::new(mode, l, cfg.k.min(l), cfg.w)?;
            let started = Instant::now();
            let batch = index.batch_search(&queries.queries, &queries.preds, &params, cfg.threads)?;
            let wall = started.elapsed().as_secs_f64();

            let mut recall_sum = 0.0;
            let mut recall_n = 0usize;
            for (hits, ids) in batch.hits.iter().zip(&truth_ids) {
                if ids.is_empty() {
                    continue;
                }
                let got: Vec<NodeId> = hits.iter().map(|h| h.node).collect();
                recall_sum += recall_at_k(&got, ids, cfg.k);
                recall_n += 1;
            }
            let q = queries.len() as f64;
            let total = batch.total();
            rows.push(SweepRow {
                mode,
                l,
                w: cfg.w,
                r_max: index.neighbors.r_max(),
                selectivity,
                recall10: recall_sum / recall_n.max(1) as f64,
                mean_ios: total.ios as f64 / q,
                mean_tunnels: total.tunnels as f64 / q,
                mean_vlat_us: total.virtual_latency_us as f64 / q,
                wall_qps: q / wall.max(1e-9),
            });
        }
    }
    Ok(rows)
}

/// Measured vs. expected I/O reduction at one matched sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionRow {
    pub selectivity: f64,
    pub l: usize,
    /// mean_ios(pipe-post) / mean_ios(gated).
    pub measured: f64,
    /// 1 / selectivity.
    pub expected: f64,
}

/// Pair pipe-post and gated rows at matched (selectivity, L, W) and report
/// the measured I/O reduction next to the 1/s expectation.
pub fn io_reduction_report(rows: &[SweepRow]) -> Vec<ReductionRow> {
    let mut out = Vec::new();
    for g in rows.iter().filter(|r| r.mode == SearchMode::Gated) {
        for p in rows.iter().filter(|r| {
            r.mode == SearchMode::PipePost
                && r.l == g.l
                && r.w == g.w
                && (r.selectivity - g.selectivity).abs() < 1e-9
        }) {
            out.push(ReductionRow {
                selectivity: g.selectivity,
                l: g.l,
                measured: p.mean_ios / g.mean_ios.max(1e-9),
                expected: 1.0 / g.selectivity.max(1e-9),
            });
        }
    }
    out
}

/// Emit rows as CSV: fixed header, one line per row, dot-decimal floats.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.mode, r.l, r.w, r.r_max, r.selectivity, r.recall10, r.mean_ios, r.mean_tunnels,
            r.mean_vlat_us, r.wall_qps
        )?;
    }
    Ok(())
}

/// Parse CSV produced by [`write_csv`].
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<SweepRow>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("empty csv"))??;
    if header.trim() != CSV_HEADER {
        return Err(Error::format(format!("unexpected csv header: {header}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::format(format!("bad csv row: {line}")));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::format(format!("bad float '{s}'")))
        };
        let parse_u = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::format(format!("bad int '{s}'")))
        };
        rows.push(SweepRow {
            mode: f[0].parse()?,
            l: parse_u(f[1])?,
            w: parse_u(f[2])?,
            r_max: parse_u(f[3])?,
            selectivity: parse_f(f[4])?,
            recall10: parse_f(f[5])?,
            mean_ios: parse_f(f[6])?,
            mean_tunnels: parse_f(f[7])?,
            mean_vlat_us: parse_f(f[8])?,
            wall_qps: parse_f(f[9])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(mode: SearchMode, l: usize, sel: f64, ios: f64) -> SweepRow {
        SweepRow {
            mode,
            l,
            w: 8,
            r_max: 16,
            selectivity: sel,
            recall10: 0.93,
            mean_ios: ios,
            mean_tunnels: 1.5,
            mean_vlat_us: 321.25,
            wall_qps: 1234.5,
        }
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![
            row(SearchMode::Gated, 50, 0.1, 11.25),
            row(SearchMode::PipePost, 50, 0.1, 108.5),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains(';'));
        assert!(text.contains("gated,50,8,16,0.1,0.93,11.25,1.5,321.25,1234.5"));
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn empty_rows_emit_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().trim(), CSV_HEADER);
        assert!(read_csv(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn reduction_report_pairs_matched_rows() {
        let rows = vec![
            row(SearchMode::PipePost, 100, 0.1, 100.0),
            row(SearchMode::Gated, 100, 0.1, 10.0),
            row(SearchMode::PipePost, 100, 1.0, 40.0),
            row(SearchMode::Gated, 100, 1.0, 40.0),
            row(SearchMode::Gated, 200, 0.1, 20.0), // unmatched L
        ];
        let rep = io_reduction_report(&rows);
        assert_eq!(rep.len(), 2);
        assert!((rep[0].measured - 10.0).abs() < 1e-9);
        assert!((rep[0].expected - 10.0).abs() < 1e-9);
        // Selectivity 1 pairs to ratio 1.
        assert!((rep[1].measured - 1.0).abs() < 1e-9);
        assert!((rep[1].expected - 1.0).abs() < 1e-9);
    }
}

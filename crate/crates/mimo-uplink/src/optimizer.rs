//! Exhaustive search over the hybrid-scheme configuration space: every
//! interval partition of the cell set combined with every per-interval
//! decoding-cluster partition.
//!
//! Enumeration order is canonical: set partitions are visited in restricted
//! growth string (RGS) lexicographic order, and within one interval partition
//! the per-block cluster partitions advance like an odometer with the last
//! block fastest. The all-in-one-block partition comes first, singletons
//! last. Ties in the ranked table are broken by this order (first wins).
//!
//! Every configuration is scored on the same attenuation sample stream.
//! Per-cluster value differences at the neutral time split are evaluated
//! once and shared across configurations; each candidate's chosen split is
//! then re-evaluated exactly.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::asymptotic::{interval_z, optimize_split, AsymStream, OsConfiguration};
use crate::error::{Error, Result};
use crate::finite::{RunMetadata, Scheme, SchemeRateReport};
use crate::network::{NetworkConfig, ScenarioSpec};

/// Hard cap on the number of cells accepted by the enumerator; the
/// configuration count grows super-exponentially.
pub const MAX_CELLS: usize = 12;

/// The finite search space of interval/cluster layouts for a given cell
/// count.
#[derive(Debug, Clone, Copy)]
pub struct ConfigurationSpace {
    pub cells: usize,
}

impl ConfigurationSpace {
    pub fn new(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::config("cells must be positive"));
        }
        if cells > MAX_CELLS {
            return Err(Error::Capacity(format!(
                "{cells} cells would require evaluating {} configurations (cap is {MAX_CELLS} \
                 cells)",
                configuration_count(cells)
            )));
        }
        Ok(ConfigurationSpace { cells })
    }
}

/// Total number of (interval partition, cluster partitions) pairs: the sum
/// over set partitions of the product of Bell numbers of the block sizes.
pub fn configuration_count(cells: usize) -> u128 {
    let bell = bell_numbers(cells);
    let binom = binomial_table(cells);
    let mut a = vec![0u128; cells + 1];
    a[0] = 1;
    for n in 1..=cells {
        let mut acc = 0u128;
        for j in 1..=n {
            acc += binom[n - 1][j - 1] * bell[j] * a[n - j];
        }
        a[n] = acc;
    }
    a[cells]
}

fn bell_numbers(n: usize) -> Vec<u128> {
    // Bell triangle.
    let mut bell = vec![1u128; n + 1];
    let mut row = vec![1u128];
    for i in 1..=n {
        let mut next = Vec::with_capacity(i + 1);
        next.push(*row.last().unwrap());
        for j in 0..row.len() {
            let v = next[j] + row[j];
            next.push(v);
        }
        bell[i] = next[0];
        row = next;
    }
    bell
}

fn binomial_table(n: usize) -> Vec<Vec<u128>> {
    let mut c = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
        }
    }
    c
}

// ---------------------------------------------------------------------------
// RGS set-partition iterator
// ---------------------------------------------------------------------------

/// Set partitions of `items` in restricted-growth-string lexicographic
/// order. Blocks are ordered by their smallest element.
struct RgsPartitions {
    items: Vec<usize>,
    rgs: Vec<usize>,
    done: bool,
    fresh: bool,
}

impl RgsPartitions {
    fn new(items: Vec<usize>) -> Self {
        let n = items.len();
        RgsPartitions { items, rgs: vec![0; n], done: n == 0, fresh: true }
    }

    fn blocks(&self) -> Vec<Vec<usize>> {
        let nblocks = self.rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(self.items[i]);
        }
        blocks
    }

    /// Advance to the lexicographic successor; false when exhausted.
    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        // Largest i whose digit can grow: rgs[i] <= max(rgs[..i]).
        for i in (1..n).rev() {
            let prefix_max = self.rgs[..i].iter().copied().max().unwrap();
            if self.rgs[i] <= prefix_max {
                self.rgs[i] += 1;
                for j in (i + 1)..n {
                    self.rgs[j] = 0;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for RgsPartitions {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(self.blocks());
        }
        if self.advance() {
            Some(self.blocks())
        } else {
            self.done = true;
            None
        }
    }
}

/// One candidate layout: intervals plus per-interval cluster partitions.
/// Time fractions are not enumerated; they are closed-form once the Z values
/// are known.
#[derive(Debug, Clone, PartialEq)]
pub struct OsCandidate {
    pub intervals: Vec<Vec<usize>>,
    pub clusters: Vec<Vec<Vec<usize>>>,
}

/// Lazy enumerator over every valid (interval partition, cluster
/// partitions) pair, in canonical order, each yielded exactly once.
pub struct ConfigEnumerator {
    cells: Vec<usize>,
    interval_iter: Box<dyn Iterator<Item = Vec<Vec<usize>>> + Send>,
    intervals: Option<Vec<Vec<usize>>>,
    cluster_rgs: Vec<Vec<usize>>,
}

/// Stream of all configurations for `cells` cells (capacity-capped).
pub fn enumerate_configurations(cells: usize) -> Result<ConfigEnumerator> {
    let space = ConfigurationSpace::new(cells)?;
    let ids: Vec<usize> = (0..space.cells).collect();
    let mut it = ConfigEnumerator {
        cells: ids.clone(),
        interval_iter: Box::new(RgsPartitions::new(ids)),
        intervals: None,
        cluster_rgs: Vec::new(),
    };
    it.load_next_interval_partition();
    Ok(it)
}

impl ConfigEnumerator {
    fn load_next_interval_partition(&mut self) {
        self.intervals = self.interval_iter.next();
        if let Some(iv) = &self.intervals {
            self.cluster_rgs = iv.iter().map(|block| vec![0; block.len()]).collect();
        }
    }

    fn current(&self) -> OsCandidate {
        let intervals = self.intervals.clone().unwrap();
        let clusters = intervals
            .iter()
            .zip(&self.cluster_rgs)
            .map(|(block, rgs)| blocks_of(block, rgs))
            .collect();
        OsCandidate { intervals, clusters }
    }

    /// Odometer step over the per-interval cluster RGS states, last interval
    /// fastest; false when the current interval partition is exhausted.
    fn advance_clusters(&mut self) -> bool {
        for q in (0..self.cluster_rgs.len()).rev() {
            if rgs_advance(&mut self.cluster_rgs[q]) {
                for later in self.cluster_rgs[q + 1..].iter_mut() {
                    later.fill(0);
                }
                return true;
            }
            self.cluster_rgs[q].fill(0);
        }
        false
    }

    pub fn cells(&self) -> usize {
        self.cells.len()
    }
}

fn blocks_of(items: &[usize], rgs: &[usize]) -> Vec<Vec<usize>> {
    let nblocks = rgs.iter().copied().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); nblocks];
    for (i, &b) in rgs.iter().enumerate() {
        blocks[b].push(items[i]);
    }
    blocks
}

fn rgs_advance(rgs: &mut [usize]) -> bool {
    let n = rgs.len();
    for i in (1..n).rev() {
        let prefix_max = rgs[..i].iter().copied().max().unwrap();
        if rgs[i] <= prefix_max {
            rgs[i] += 1;
            for j in (i + 1)..n {
                rgs[j] = 0;
            }
            return true;
        }
    }
    false
}

impl Iterator for ConfigEnumerator {
    type Item = OsCandidate;

    fn next(&mut self) -> Option<Self::Item> {
        self.intervals.as_ref()?;
        let out = self.current();
        if !self.advance_clusters() {
            self.load_next_interval_partition();
        }
        Some(out)
    }
}

// ---------------------------------------------------------------------------
// Exhaustive optimization
// ---------------------------------------------------------------------------

/// One row of the ranked configuration table.
#[derive(Debug, Clone)]
pub struct RankedConfiguration {
    /// 1-based rank after sorting by value (ties keep canonical order).
    pub rank: usize,
    /// Position in the canonical enumeration.
    pub canonical_index: usize,
    pub intervals: Vec<Vec<usize>>,
    pub clusters: Vec<Vec<Vec<usize>>>,
    /// Optimal time fractions for this layout.
    pub zetas: Vec<f64>,
    /// Per-interval Z values.
    pub z_values: Vec<f64>,
    pub se_bits: f64,
    pub std_error: f64,
}

/// Result of the exhaustive search.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub best: OsConfiguration,
    pub best_report: SchemeRateReport,
    /// Every configuration, ranked by achievable rate, descending.
    pub table: Vec<RankedConfiguration>,
}

/// Evaluate every configuration on a shared attenuation sample stream and
/// return the maximizer plus the full ranked table.
pub fn optimize_os(
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    sample_count: usize,
    seed: u64,
) -> Result<OptimizeOutcome> {
    let stream = AsymStream::build(config, scenario, sample_count, seed)?;
    optimize_with_stream(&stream, config, scenario, sample_count, seed)
}

pub(crate) fn optimize_with_stream(
    stream: &AsymStream,
    config: &NetworkConfig,
    scenario: &ScenarioSpec,
    sample_count: usize,
    seed: u64,
) -> Result<OptimizeOutcome> {
    let cells = config.cells;
    let candidates: Vec<OsCandidate> = enumerate_configurations(cells)?.collect();

    // Neutral-split cluster values shared across configurations, evaluated
    // once each in parallel. Keys are cell bitmasks plus the zeta bits; the
    // neutral zeta is 1 / n_p, so the key space stays small.
    let mut keys: Vec<(u16, u16, u64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for cand in &candidates {
        let zeta = 1.0 / cand.intervals.len() as f64;
        for (iv, cls) in cand.intervals.iter().zip(&cand.clusters) {
            let iv_mask = mask_of(iv);
            for cl in cls {
                let key = (iv_mask, mask_of(cl), zeta.to_bits());
                if seen.insert(key) {
                    keys.push(key);
                }
            }
        }
    }
    let evaluated: Vec<((u16, u16, u64), (f64, f64))> = keys
        .par_iter()
        .map(|&(iv_mask, cl_mask, zeta_bits)| {
            let iv = cells_of(iv_mask, cells);
            let cl = cells_of(cl_mask, cells);
            interval_z(stream, &iv, &[cl], f64::from_bits(zeta_bits))
                .map(|zv| ((iv_mask, cl_mask, zeta_bits), zv))
        })
        .collect::<Result<Vec<_>>>()?;
    let cache: HashMap<(u16, u16, u64), (f64, f64)> = evaluated.into_iter().collect();

    let pref = config.overhead_factor() / (cells as f64 * config.ratio());
    let mut table: Vec<RankedConfiguration> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(ci, cand)| {
            let outcome = optimize_split(pref, cand.intervals.len(), |q, zeta| {
                let iv_mask = mask_of(&cand.intervals[q]);
                let mut z = 0.0;
                let mut var = 0.0;
                for cl in &cand.clusters[q] {
                    let key = (iv_mask, mask_of(cl), zeta.to_bits());
                    let (zc, vc) = match cache.get(&key) {
                        Some(&hit) => hit,
                        None => interval_z(
                            stream,
                            &cand.intervals[q],
                            std::slice::from_ref(cl),
                            zeta,
                        )?,
                    };
                    z += zc;
                    var += vc;
                }
                Ok((z, var))
            })?;
            Ok(RankedConfiguration {
                rank: 0,
                canonical_index: ci,
                intervals: cand.intervals,
                clusters: cand.clusters,
                zetas: outcome.zetas,
                z_values: outcome.z_values,
                se_bits: outcome.value,
                std_error: outcome.std_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Descending by value; the sort is stable, so canonical order breaks ties.
    table.sort_by(|a, b| b.se_bits.partial_cmp(&a.se_bits).unwrap());
    for (i, row) in table.iter_mut().enumerate() {
        row.rank = i + 1;
    }

    let top = &table[0];
    let best = OsConfiguration {
        intervals: top.intervals.clone(),
        clusters: top.clusters.clone(),
        zetas: top.zetas.clone(),
    };
    let best_report = SchemeRateReport {
        scheme: Scheme::Os,
        se_bits: top.se_bits,
        std_error: top.std_error,
        trials: sample_count,
        metadata: RunMetadata { config: config.clone(), scenario: scenario.clone(), seed },
    };
    Ok(OptimizeOutcome { best, best_report, table })
}

fn mask_of(cells: &[usize]) -> u16 {
    cells.iter().fold(0u16, |m, &c| m | (1 << c))
}

fn cells_of(mask: u16, cells: usize) -> Vec<usize> {
    (0..cells).filter(|&c| mask & (1 << c) != 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotic::{build_asymptotic_inputs, optimal_zetas, rate_ian_asym, rate_sd_asym};

    #[test]
    fn enumeration_counts_small() {
        assert_eq!(enumerate_configurations(1).unwrap().count(), 1);
        assert_eq!(enumerate_configurations(2).unwrap().count(), 3);
        assert_eq!(enumerate_configurations(3).unwrap().count(), 12);
    }

    #[test]
    fn enumeration_order_for_two_cells() {
        let got: Vec<OsCandidate> = enumerate_configurations(2).unwrap().collect();
        // {12} with one cluster, {12} with singleton clusters, then {1}|{2}.
        assert_eq!(got[0].intervals, vec![vec![0, 1]]);
        assert_eq!(got[0].clusters, vec![vec![vec![0, 1]]]);
        assert_eq!(got[1].intervals, vec![vec![0, 1]]);
        assert_eq!(got[1].clusters, vec![vec![vec![0], vec![1]]]);
        assert_eq!(got[2].intervals, vec![vec![0], vec![1]]);
        assert_eq!(got[2].clusters, vec![vec![vec![0]], vec![vec![1]]]);
    }

    #[test]
    fn enumeration_matches_count_oracle_and_is_duplicate_free() {
        for cells in 1..=6 {
            let all: Vec<OsCandidate> = enumerate_configurations(cells).unwrap().collect();
            assert_eq!(all.len() as u128, configuration_count(cells), "L = {cells}");
            let mut set = std::collections::BTreeSet::new();
            for cand in &all {
                let key = format!("{:?}|{:?}", cand.intervals, cand.clusters);
                assert!(set.insert(key), "duplicate configuration at L = {cells}");
                // Structural validity.
                let cfg = OsConfiguration {
                    intervals: cand.intervals.clone(),
                    clusters: cand.clusters.clone(),
                    zetas: vec![1.0 / cand.intervals.len() as f64; cand.intervals.len()],
                };
                cfg.validate(cells).unwrap();
            }
        }
    }

    #[test]
    fn capacity_cap_enforced() {
        let err = match enumerate_configurations(13) {
            Err(e) => e,
            Ok(_) => panic!("expected capacity error"),
        };
        match err {
            crate::Error::Capacity(msg) => assert!(msg.contains("13")),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn optimizer_dominates_pure_schemes() {
        let config = NetworkConfig::new(3, 12, 60, 500, 50, 1e-2).unwrap();
        let scenario = ScenarioSpec::synthetic(0.25);
        let n = 20_000;
        let seed = 4;
        let outcome = optimize_os(&config, &scenario, n, seed).unwrap();
        let inputs = build_asymptotic_inputs(&config, &scenario, n, seed).unwrap();
        let ian = rate_ian_asym(&inputs).unwrap().se_bits;
        let sd = rate_sd_asym(&inputs).unwrap().se_bits;
        let (_, td) = optimal_zetas(&inputs).unwrap();
        let best = outcome.best_report.se_bits;
        assert!(best >= ian - 1e-9, "optimizer {best} below IAN {ian}");
        assert!(best >= sd - 1e-9, "optimizer {best} below SD {sd}");
        assert!(best >= td.se_bits - 1e-9, "optimizer {best} below TD {}", td.se_bits);
        // Table is complete and ranked.
        assert_eq!(outcome.table.len() as u128, configuration_count(3));
        for w in outcome.table.windows(2) {
            assert!(w[0].se_bits >= w[1].se_bits);
        }
    }

    #[test]
    fn permutation_equivariance() {
        // Relabeling cells permutes the winner and leaves the value unchanged,
        // given the sample stream is relabeled consistently.
        let config = NetworkConfig::new(3, 12, 60, 500, 50, 1e-2).unwrap();
        let scenario = ScenarioSpec::synthetic(0.4);
        let n = 10_000;
        let seed = 8;
        let stream = AsymStream::build(&config, &scenario, n, seed).unwrap();
        // Swap cells 0 and 2 in every component.
        let perm = [2usize, 1, 0];
        let cells = 3;
        let mut permuted = stream.clone();
        for k in 0..cells {
            permuted.lead[perm[k]] = stream.lead[k].clone();
            for l in 0..cells {
                permuted.m[perm[k] * cells + perm[l]] = stream.m[k * cells + l];
                permuted.d4[perm[k] * cells + perm[l]] = stream.d4[k * cells + l].clone();
            }
        }
        let base = optimize_with_stream(&stream, &config, &scenario, n, seed).unwrap();
        let swapped = optimize_with_stream(&permuted, &config, &scenario, n, seed).unwrap();
        assert!((base.best_report.se_bits - swapped.best_report.se_bits).abs() < 1e-12);
        // The winning intervals map through the permutation.
        let mapped: Vec<Vec<usize>> = base
            .best
            .intervals
            .iter()
            .map(|iv| {
                let mut v: Vec<usize> = iv.iter().map(|&c| perm[c]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let mut got = swapped.best.intervals.clone();
        for iv in &mut got {
            iv.sort_unstable();
        }
        // Compare as unordered families.
        let mut a = mapped;
        let mut b = got;
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}

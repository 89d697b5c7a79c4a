//! Pairwise co-occurrence tests and multiple-test corrections.
//!
//! For every unordered investor pair and every ordered state combination,
//! the number of co-occurrence days inside the intersection of the two
//! activity windows is tested against a hypergeometric null. Pairs that
//! never co-occur are not materialized: their p-value is 1 and can never
//! survive a correction, so enumeration runs off a day-major index and
//! only touches pairs that share at least one active day.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::Dataset;
use crate::num::Real;
use crate::state_encoding::{StateMatrix, TradeState};
use crate::stats::survival;
use crate::Prob;

pub use crate::stats::hypergeom_pmf;

/// One materialized hypothesis test for an investor pair and state pair.
///
/// `i < j` in canonical id order; `state_i` refers to investor `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTest {
    pub i: u32,
    pub j: u32,
    pub state_i: TradeState,
    pub state_j: TradeState,
    /// Length of the activity-window intersection in days.
    pub t: u32,
    /// Days investor `i` spends in `state_i` inside the intersection.
    pub n_p: u32,
    /// Days investor `j` spends in `state_j` inside the intersection.
    pub n_q: u32,
    /// Co-occurrence days.
    pub n_pq: u32,
    pub p_value: Prob,
}

/// Which multiple-hypothesis correction gates a validation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Bonferroni,
    Fdr,
}

impl std::fmt::Display for Correction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Correction::Bonferroni => "bonferroni",
            Correction::Fdr => "fdr",
        })
    }
}

/// Parameters of one validation run.
#[derive(Debug, Clone, Copy)]
pub struct TestConfig {
    p_t: Prob,
    correction: Correction,
    n_investors: u64,
}

impl TestConfig {
    /// `p_t` is the single-test threshold; `n_investors` sizes the test
    /// family (nine state combinations per unordered pair).
    pub fn new(p_t: Prob, correction: Correction, n_investors: u64) -> Result<TestConfig> {
        if !(p_t > 0.0 && p_t < 1.0) {
            return Err(Error::Config(format!(
                "single-test threshold must lie in (0, 1), got {p_t}"
            )));
        }
        if n_investors < 2 {
            return Err(Error::Config(format!(
                "at least 2 investors are required to form a pair, got {n_investors}"
            )));
        }
        Ok(TestConfig {
            p_t,
            correction,
            n_investors,
        })
    }

    pub fn p_t(&self) -> Prob {
        self.p_t
    }

    pub fn correction(&self) -> Correction {
        self.correction
    }

    pub fn n_investors(&self) -> u64 {
        self.n_investors
    }
}

/// P-value of observing at least `n_pq` co-occurrences: the survival sum
/// `sum_{X=n_pq}^{min(N_P,N_Q)} H(X | T, N_P, N_Q)`.
pub fn cooccurrence_pvalue<F: Real>(t: u64, n_p: u64, n_q: u64, n_pq: u64) -> Result<F> {
    if t < 1 {
        return Err(Error::Domain("window intersection must be non-empty".into()));
    }
    if n_pq > n_p.min(n_q) {
        return Err(Error::Domain(format!(
            "N_PQ={n_pq} exceeds min(N_P, N_Q)=min({n_p}, {n_q})"
        )));
    }
    survival(t, n_p, n_q, n_pq)
}

/// Bonferroni-corrected single-test threshold `2 p_t / (9 N_i (N_i - 1))`.
pub fn bonferroni_threshold(cfg: &TestConfig) -> Prob {
    let n = cfg.n_investors as Prob;
    2.0 * cfg.p_t / (9.0 * n * (n - 1.0))
}

/// FDR threshold over the materialized p-values.
///
/// Sorts ascending and returns `p_k` for the largest rank `k` with
/// `p_k < k * p_b`; `None` when no rank qualifies. Tests that were never
/// materialized carry p = 1 implicitly and can never qualify, since the
/// rank bound tops out at `k_total * p_b = p_t < 1`.
pub fn fdr_threshold(pvalues: &[Prob], cfg: &TestConfig) -> Option<Prob> {
    let p_b = bonferroni_threshold(cfg);
    let mut sorted = pvalues.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("p-values are never NaN"));
    let mut best = None;
    for (idx, &p) in sorted.iter().enumerate() {
        let rank = (idx + 1) as Prob;
        if p < rank * p_b {
            best = Some(p);
        }
    }
    best
}

/// Retain the tests that survive the configured correction.
///
/// The FDR-retained set is always a superset of the Bonferroni-retained set
/// on identical inputs.
pub fn validate(tests: Vec<PairTest>, cfg: &TestConfig) -> Vec<PairTest> {
    match cfg.correction {
        Correction::Bonferroni => {
            let p_b = bonferroni_threshold(cfg);
            tests.into_iter().filter(|t| t.p_value < p_b).collect()
        }
        Correction::Fdr => {
            let pvalues: Vec<Prob> = tests.iter().map(|t| t.p_value).collect();
            match fdr_threshold(&pvalues, cfg) {
                Some(threshold) => tests
                    .into_iter()
                    .filter(|t| t.p_value <= threshold)
                    .collect(),
                None => Vec::new(),
            }
        }
    }
}

/// Materialize one test per unordered pair and state combination with at
/// least one co-occurrence day, p-values filled.
///
/// Results come back in canonical order `(i, j, state_i, state_j)`
/// regardless of thread scheduling.
pub fn enumerate_tests(m: &StateMatrix, ds: &Dataset) -> Vec<PairTest> {
    let n_days = ds.calendar_length() as usize;
    // Day-major index: who is active on each day, in which state. The outer
    // investor loop runs in ascending index order, so each per-day list is
    // already sorted by investor.
    let mut by_day: Vec<Vec<(u32, TradeState)>> = vec![Vec::new(); n_days];
    for ix in 0..ds.n_investors() as u32 {
        for state in TradeState::ALL {
            for &day in m.days_in_state(ix, state) {
                by_day[day as usize].push((ix, state));
            }
        }
    }
    for day_list in &by_day {
        debug_assert!(day_list.windows(2).all(|w| w[0].0 < w[1].0));
    }

    let n_shards = rayon::current_num_threads().max(1);
    let mut tests: Vec<PairTest> = (0..n_shards)
        .into_par_iter()
        .flat_map_iter(|shard| {
            // Pairs are owned by the shard of their smaller endpoint.
            let mut counts: FxHashMap<u64, [u32; 9]> = FxHashMap::default();
            for day_list in &by_day {
                for (pos, &(i, si)) in day_list.iter().enumerate() {
                    if i as usize % n_shards != shard {
                        continue;
                    }
                    for &(j, sj) in &day_list[pos + 1..] {
                        let key = ((i as u64) << 32) | j as u64;
                        let bit = si.index() * 3 + sj.index();
                        counts.entry(key).or_insert([0; 9])[bit] += 1;
                    }
                }
            }
            pair_tests_from_counts(counts, m, ds)
        })
        .collect();
    tests.sort_unstable_by_key(|t| (t.i, t.j, t.state_i.index(), t.state_j.index()));
    tests
}

fn pair_tests_from_counts(
    counts: FxHashMap<u64, [u32; 9]>,
    m: &StateMatrix,
    ds: &Dataset,
) -> Vec<PairTest> {
    let mut out = Vec::with_capacity(counts.len());
    for (key, combo) in counts {
        let (i, j) = ((key >> 32) as u32, key as u32);
        let inter = ds
            .window(i)
            .intersect(&ds.window(j))
            .expect("a co-occurring pair has overlapping windows");
        let t = inter.len();
        let mut n_p_cache: [Option<u32>; 3] = [None; 3];
        let mut n_q_cache: [Option<u32>; 3] = [None; 3];
        for (bit, &n_pq) in combo.iter().enumerate() {
            if n_pq == 0 {
                continue;
            }
            let state_i = TradeState::from_index(bit / 3);
            let state_j = TradeState::from_index(bit % 3);
            let n_p = *n_p_cache[state_i.index()]
                .get_or_insert_with(|| m.count_in(i, state_i, inter));
            let n_q = *n_q_cache[state_j.index()]
                .get_or_insert_with(|| m.count_in(j, state_j, inter));
            let p_value = cooccurrence_pvalue::<Prob>(
                t as u64,
                n_p as u64,
                n_q as u64,
                n_pq as u64,
            )
            .expect("counts from the index satisfy the test domain");
            out.push(PairTest {
                i,
                j,
                state_i,
                state_j,
                t,
                n_p,
                n_q,
                n_pq,
                p_value,
            });
        }
    }
    out
}

/// Dump tests as TSV
/// `investor_i investor_j state_i state_j T N_P N_Q N_PQ p_value`.
pub fn write_tests_tsv(tests: &[PairTest], ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(
        out,
        "investor_i\tinvestor_j\tstate_i\tstate_j\tT\tN_P\tN_Q\tN_PQ\tp_value"
    )
    .unwrap();
    for t in tests {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6e}",
            ds.id(t.i),
            ds.id(t.j),
            t.state_i,
            t.state_j,
            t.t,
            t.n_p,
            t.n_q,
            t.n_pq,
            t.p_value
        )
        .unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

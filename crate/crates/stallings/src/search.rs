//! Enumeration and sampling of rank-m subgroup pairs, and the search harness
//! testing that every pair with `rank(H ∩ K) >= m` satisfies
//! `rank(H ∨ K) <= m`.
//!
//! Subgroups are identified with based core graphs, so conjugate subgroups
//! with distinct cores count as distinct. Pairs are deduplicated as unordered
//! pairs of canonical forms since every tested quantity is symmetric.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::branch_matrix::{block_decompose, build_matrix, rank_bounds};
use crate::core_graph::{CoreGraph, GraphError, GraphJson};
use crate::subgroup_calc::{intersect, join};
use crate::words::{Letter, Word, WordError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("rank-{m} sample not found within {cap} retries")]
    RetryCapExceeded { m: usize, cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Matrix(#[from] crate::branch_matrix::BranchMatrixError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("witness serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Random,
}

impl FromStr for SearchMode {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, SearchError> {
        match s {
            "exhaustive" => Ok(SearchMode::Exhaustive),
            "random" => Ok(SearchMode::Random),
            other => Err(SearchError::Config(format!(
                "mode must be 'exhaustive' or 'random', got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Target subgroup rank; both members of every tested pair fold to this.
    pub m: usize,
    /// Ambient free group rank.
    pub alphabet_rank: usize,
    pub mode: SearchMode,
    /// Bound on the reduced length of drawn or enumerated generators.
    pub max_word_length: usize,
    /// Number of random pairs (ignored in exhaustive mode).
    pub sample_count: usize,
    pub rng_seed: u64,
    /// Worker threads; 0 means the rayon default. Does not affect results.
    pub parallelism: usize,
    /// Where a violation witness is dumped; defaults to
    /// `violation_witness.json` in the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_path: Option<PathBuf>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            m: 2,
            alphabet_rank: 2,
            mode: SearchMode::Random,
            max_word_length: 6,
            sample_count: 1000,
            rng_seed: 0,
            parallelism: 0,
            witness_path: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.m < 2 {
            return Err(SearchError::Config(format!("m must be >= 2, got {}", self.m)));
        }
        if self.alphabet_rank < 2 {
            return Err(SearchError::Config(format!(
                "alphabet_rank must be >= 2, got {}",
                self.alphabet_rank
            )));
        }
        if self.max_word_length < 1 {
            return Err(SearchError::Config("max_word_length must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses the flat `key = value` config format. Lines starting with `#`
    /// and blank lines are ignored; later keys override earlier ones.
    pub fn parse(text: &str) -> Result<Self, SearchError> {
        let mut cfg = SearchConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), SearchError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SearchError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| SearchError::Config(format!("line {}: {e}", lineno + 1));
            match key {
                "m" => self.m = value.parse().map_err(|e| bad(format!("m: {e}")))?,
                "alphabet_rank" | "n" => {
                    self.alphabet_rank =
                        value.parse().map_err(|e| bad(format!("alphabet_rank: {e}")))?
                }
                "mode" => self.mode = value.parse()?,
                "max_word_length" => {
                    self.max_word_length =
                        value.parse().map_err(|e| bad(format!("max_word_length: {e}")))?
                }
                "sample_count" => {
                    self.sample_count =
                        value.parse().map_err(|e| bad(format!("sample_count: {e}")))?
                }
                "rng_seed" => {
                    self.rng_seed = value.parse().map_err(|e| bad(format!("rng_seed: {e}")))?
                }
                "parallelism" => {
                    self.parallelism =
                        value.parse().map_err(|e| bad(format!("parallelism: {e}")))?
                }
                "witness_path" => self.witness_path = Some(PathBuf::from(value)),
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        Ok(())
    }

    /// Hex SHA-256 over the result-determining fields (parallelism and the
    /// witness path do not affect verdicts and are excluded).
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!(
            "m={};n={};mode={:?};L={};N={};seed={}",
            self.m,
            self.alphabet_rank,
            self.mode,
            self.max_word_length,
            self.sample_count,
            self.rng_seed
        ));
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex SHA-256 of a core graph's canonical form; equal exactly for equal
/// subgroups (up to hash collision).
pub fn canonical_id(g: &CoreGraph) -> String {
    let mut h = Sha256::new();
    h.update(g.canonical_form());
    hex(&h.finalize())
}

/// All freely reduced nonempty words over `F_n` of length at most `max_len`.
pub fn enumerate_words(n: usize, max_len: usize) -> Vec<Word> {
    let mut out: Vec<Vec<Letter>> = Vec::new();
    let mut frontier: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &frontier {
            for gen in 0..n {
                for inverse in [false, true] {
                    let l = Letter::new(gen, inverse);
                    if prefix.last().map_or(false, |&top| top.cancels(l)) {
                        continue;
                    }
                    let mut w = prefix.clone();
                    w.push(l);
                    next.push(w);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.into_iter().map(|ls| Word::reduce(ls, n)).collect()
}

/// Every subgroup of `F_n` generated by `m` reduced words of length at most
/// `max_len` whose core has rank exactly `m`, deduplicated by canonical form
/// and emitted in canonical order.
pub fn enumerate_subgroups(
    m: usize,
    n: usize,
    max_len: usize,
) -> Result<Vec<CoreGraph>, SearchError> {
    let words = enumerate_words(n, max_len);
    let mut seen = std::collections::BTreeMap::new();
    // m-combinations with repetition add nothing (duplicate generators never
    // raise the rank), so plain m-subsets suffice
    let mut idx: Vec<usize> = (0..m).collect();
    if m > words.len() {
        return Ok(Vec::new());
    }
    loop {
        let gens: Vec<Word> = idx.iter().map(|&i| words[i].clone()).collect();
        let core = CoreGraph::from_generators(&gens, n)?;
        if core.rank() == m {
            seen.entry(core.canonical_form()).or_insert(core);
        }
        // next m-subset in lexicographic order: bump the rightmost index that
        // still has room, then reset everything after it
        let mut i = m;
        while i > 0 && idx[i - 1] == words.len() - m + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return Ok(seen.into_values().collect());
        }
        idx[i - 1] += 1;
        for j in i..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// One uniform nonempty reduced word of length at most `max_len`.
fn random_word(rng: &mut impl Rng, n: usize, max_len: usize) -> Word {
    // count of reduced words of length len is 2n * (2n-1)^(len-1)
    let base = 2 * n as u64;
    let mut counts = Vec::with_capacity(max_len);
    let mut total = 0u64;
    let mut c = base;
    for _ in 0..max_len {
        counts.push(c);
        total += c;
        c *= base - 1;
    }
    let mut pick = rng.gen_range(0..total);
    let mut len = 1;
    for (i, &c) in counts.iter().enumerate() {
        if pick < c {
            len = i + 1;
            break;
        }
        pick -= c;
    }
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = Letter::new(rng.gen_range(0..n), rng.gen());
        if letters.last().map_or(false, |&top| top.cancels(l)) {
            continue;
        }
        letters.push(l);
    }
    Word::reduce(letters, n)
}

pub const SAMPLE_RETRY_CAP: usize = 10_000;

/// Draws `m` uniform reduced words of length <= `max_len` and folds,
/// redrawing until the core has rank exactly `m`. Deterministic per rng state.
pub fn sample_subgroup(
    m: usize,
    n: usize,
    max_len: usize,
    rng: &mut impl Rng,
) -> Result<CoreGraph, SearchError> {
    for _ in 0..SAMPLE_RETRY_CAP {
        let gens: Vec<Word> = (0..m).map(|_| random_word(rng, n, max_len)).collect();
        let core = CoreGraph::from_generators(&gens, n)?;
        if core.rank() == m {
            return Ok(core);
        }
    }
    Err(SearchError::RetryCapExceeded { m, cap: SAMPLE_RETRY_CAP })
}

/// Branch-matrix bound data attached to a verdict when both ranks are >= 2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundData {
    /// All branch vertices of both cores are trivalent.
    pub trivalent: bool,
    pub intersection_trivalent: bool,
    pub ones: usize,
    pub l: usize,
    pub p: usize,
    pub q: usize,
    pub kent_bound: f64,
    pub refined_bound: f64,
    pub integral_bound: usize,
    /// `rank_join <= integral_bound`. The bound is only sound when all three
    /// cores have rank >= 2 and all their branch vertices are trivalent; an
    /// intersection with no branch vertices can undercut it by one.
    pub bound_respected: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairVerdict {
    pub h_id: String,
    pub k_id: String,
    pub rank_h: usize,
    pub rank_k: usize,
    pub rank_intersection: usize,
    pub rank_join: usize,
    /// `rank_intersection >= m`.
    pub qualifies: bool,
    /// `!qualifies || rank_join <= m`.
    pub conjecture_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundData>,
}

/// Tests one unordered pair. Both cores must have rank exactly `m`.
pub fn test_pair(gh: &CoreGraph, gk: &CoreGraph, m: usize) -> Result<PairVerdict, SearchError> {
    if gh.rank() != m || gk.rank() != m {
        return Err(SearchError::Config(format!(
            "pair ranks ({}, {}) do not match m = {m}",
            gh.rank(),
            gk.rank()
        )));
    }
    let inter = intersect(gh, gk)?;
    let joined = join(gh, gk)?;
    let rank_intersection = inter.rank();
    let rank_join = joined.rank();
    let qualifies = rank_intersection >= m;
    let conjecture_ok = !qualifies || rank_join <= m;
    let bounds = if m >= 2 {
        let matrix = build_matrix(gh, gk)?;
        let d = block_decompose(&matrix);
        let b = rank_bounds(m, m, &d);
        Some(BoundData {
            trivalent: matrix.trivalent,
            intersection_trivalent: matrix.intersection_trivalent,
            ones: matrix.ones.len(),
            l: d.l,
            p: d.p,
            q: d.q,
            kent_bound: b.kent_bound,
            refined_bound: b.refined_bound,
            integral_bound: b.integral_bound,
            bound_respected: rank_join <= b.integral_bound,
        })
    } else {
        None
    };
    Ok(PairVerdict {
        h_id: canonical_id(gh),
        k_id: canonical_id(gk),
        rank_h: gh.rank(),
        rank_k: gk.rank(),
        rank_intersection,
        rank_join,
        qualifies,
        conjecture_ok,
        bounds,
    })
}

/// Full replay data for a violating pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub verdict: PairVerdict,
    pub h_generators: Vec<String>,
    pub k_generators: Vec<String>,
    pub h_graph: GraphJson,
    pub k_graph: GraphJson,
    pub intersection_graph: GraphJson,
    pub join_graph: GraphJson,
}

fn make_witness(gh: &CoreGraph, gk: &CoreGraph, verdict: PairVerdict) -> Witness {
    let inter = intersect(gh, gk).expect("ranks already matched");
    let joined = join(gh, gk).expect("ranks already matched");
    Witness {
        verdict,
        h_generators: gh.generators().iter().map(|w| w.to_string()).collect(),
        k_generators: gk.generators().iter().map(|w| w.to_string()).collect(),
        h_graph: gh.to_json(),
        k_graph: gk.to_json(),
        intersection_graph: inter.to_json(),
        join_graph: joined.to_json(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchReport {
    pub config: SearchConfig,
    pub config_hash: String,
    pub pairs_tested: usize,
    pub pairs_qualifying: usize,
    pub violations: usize,
    pub witnesses: Vec<Witness>,
    /// Counts keyed by `"rank_intersection,rank_join"`.
    pub histogram: BTreeMap<String, usize>,
    pub wall_time_ms: u128,
}

impl SearchReport {
    /// JSON with the wall-time field zeroed, for byte-for-byte comparison of
    /// deterministic reruns.
    pub fn json_without_wall_time(&self) -> Result<String, serde_json::Error> {
        let mut clone = self.clone();
        clone.wall_time_ms = 0;
        serde_json::to_string_pretty(&clone)
    }
}

fn aggregate(
    config: &SearchConfig,
    pairs: Vec<(CoreGraph, CoreGraph)>,
) -> Result<SearchReport, SearchError> {
    let start = std::time::Instant::now();
    let verdicts: Vec<Result<(PairVerdict, usize), SearchError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (h, k))| test_pair(h, k, config.m).map(|v| (v, i)))
        .collect();
    let mut ok: Vec<(PairVerdict, usize)> = Vec::with_capacity(verdicts.len());
    for v in verdicts {
        ok.push(v?);
    }
    // canonical report order regardless of worker interleaving
    ok.sort_by(|(a, _), (b, _)| (&a.h_id, &a.k_id).cmp(&(&b.h_id, &b.k_id)));
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut pairs_qualifying = 0;
    let mut witnesses = Vec::new();
    for (v, i) in &ok {
        *histogram
            .entry(format!("{},{}", v.rank_intersection, v.rank_join))
            .or_insert(0) += 1;
        if v.qualifies {
            pairs_qualifying += 1;
        }
        if !v.conjecture_ok {
            let (h, k) = &pairs[*i];
            witnesses.push(make_witness(h, k, v.clone()));
        }
    }
    let report = SearchReport {
        config: config.clone(),
        config_hash: config.hash(),
        pairs_tested: ok.len(),
        pairs_qualifying,
        violations: witnesses.len(),
        witnesses,
        histogram,
        wall_time_ms: start.elapsed().as_millis(),
    };
    if report.violations > 0 {
        let path = config
            .witness_path
            .clone()
            .unwrap_or_else(|| PathBuf::from("violation_witness.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&report.witnesses)?)?;
    }
    Ok(report)
}

fn run_search_inner(config: &SearchConfig) -> Result<SearchReport, SearchError> {
    config.validate()?;
    let pairs: Vec<(CoreGraph, CoreGraph)> = match config.mode {
        SearchMode::Exhaustive => {
            let subs = enumerate_subgroups(config.m, config.alphabet_rank, config.max_word_length)?;
            let mut pairs = Vec::new();
            for i in 0..subs.len() {
                for j in i..subs.len() {
                    pairs.push((subs[i].clone(), subs[j].clone()));
                }
            }
            pairs
        }
        SearchMode::Random => {
            // an independent rng stream per sample keeps results identical
            // across worker counts
            (0..config.sample_count)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
                    rng.set_stream(i as u64 + 1);
                    let h = sample_subgroup(
                        config.m,
                        config.alphabet_rank,
                        config.max_word_length,
                        &mut rng,
                    )?;
                    let k = sample_subgroup(
                        config.m,
                        config.alphabet_rank,
                        config.max_word_length,
                        &mut rng,
                    )?;
                    Ok((h, k))
                })
                .collect::<Result<Vec<_>, SearchError>>()?
        }
    };
    aggregate(config, pairs)
}

/// Runs the configured search and writes a witness file if any violation is
/// found. The report is canonically sorted, so reruns with the same config
/// and seed produce identical output up to the wall-time field.
pub fn run_search(config: &SearchConfig) -> Result<SearchReport, SearchError> {
    if config.parallelism > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| SearchError::Config(format!("thread pool: {e}")))?;
        pool.install(|| run_search_inner(config))
    } else {
        run_search_inner(config)
    }
}

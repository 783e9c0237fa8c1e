//! Synthetic time-sliced corpora with planted drift, and scoring of drift
//! reports against the planted ground truth.
//!
//! Every document picks a topic uniformly, then draws its tokens from that
//! topic's weighted pool. A drifting token's weight is split between its
//! before and after pools according to its schedule `λ(t) ∈ [0, 1]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::corpus::{Grid, MemorySink, Period, Platform, SliceKey, SliceSink};
use crate::drift::{DriftConfig, DriftDetector, DriftReport};
use crate::emoji::{EmojiProperty, EmojiTable};
use crate::error::{Error, Result};
use crate::train::{train_skipgram, Hyperparameters};
use crate::vocab::{build_vocab, SliceCounts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPool {
    pub tokens: Vec<String>,
    /// Relative sampling weights, one per token.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Explicit pools; when empty, `topics × pool_size` pools are generated.
    pub pools: Vec<TopicPool>,
    pub topics: usize,
    pub pool_size: usize,
    /// Leading tokens of each generated pool that are emoji.
    pub emoji_per_pool: usize,
    /// Within-pool weights fall off as `rank^-exponent`; 0 gives uniform pools.
    pub weight_exponent: f64,
    /// Each generated pool also draws the first `overlap` tokens of the next
    /// pool (0 = disjoint pools).
    pub overlap: usize,
    pub start: Period,
    pub months: u32,
    pub platform: Platform,
    pub documents_per_slice: usize,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    pub seed: u64,
    /// Threads generating slices; output does not depend on it.
    pub workers: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            pools: Vec::new(),
            topics: 20,
            pool_size: 25,
            emoji_per_pool: 5,
            weight_exponent: 0.0,
            overlap: 0,
            start: Period::new(2016, 1).expect("valid period"),
            months: 12,
            platform: Platform::Other,
            documents_per_slice: 50_000,
            doc_len_min: 8,
            doc_len_max: 16,
            seed: 1,
            workers: 1,
        }
    }
}

fn emoji_alphabet(n: usize) -> Vec<String> {
    let table = EmojiTable::builtin();
    (0x1F400u32..0x1FAFF)
        .filter_map(char::from_u32)
        .filter(|&c| table.has(c, EmojiProperty::EmojiPresentation))
        .take(n)
        .map(String::from)
        .collect()
}

impl GeneratorConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.start, self.months, vec![self.platform])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.documents_per_slice == 0 {
            return bad("documents_per_slice must be positive".into());
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return bad(format!(
                "document length range {}..={} is invalid",
                self.doc_len_min, self.doc_len_max
            ));
        }
        if !(self.weight_exponent.is_finite() && self.weight_exponent >= 0.0) {
            return bad("weight_exponent must be finite and non-negative".into());
        }
        if self.pools.is_empty() {
            if self.topics == 0 || self.pool_size == 0 {
                return bad("topics and pool_size must be positive".into());
            }
            if self.emoji_per_pool > self.pool_size || self.overlap >= self.pool_size {
                return bad("emoji_per_pool and overlap must fit in a pool".into());
            }
        } else {
            for (i, p) in self.pools.iter().enumerate() {
                if p.tokens.is_empty() || p.tokens.len() != p.weights.len() {
                    return bad(format!("pool {i} is empty or has mismatched weights"));
                }
                if p.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad(format!("pool {i} has a non-positive weight"));
                }
                if p.tokens.iter().any(|t| t.is_empty() || t.contains(char::is_whitespace)) {
                    return bad(format!("pool {i} has an empty or whitespace-containing token"));
                }
            }
        }
        self.grid()?;
        Ok(())
    }

    /// The pools documents are drawn from.
    pub fn resolved_pools(&self) -> Vec<TopicPool> {
        if !self.pools.is_empty() {
            return self.pools.clone();
        }
        let emoji = emoji_alphabet(self.topics * self.emoji_per_pool);
        let own: Vec<Vec<String>> = (0..self.topics)
            .map(|t| {
                (0..self.pool_size)
                    .map(|j| {
                        if j < self.emoji_per_pool {
                            emoji[t * self.emoji_per_pool + j].clone()
                        } else {
                            format!("t{t:02}w{j:02}")
                        }
                    })
                    .collect()
            })
            .collect();
        let weight = |rank: usize| ((rank + 1) as f64).powf(-self.weight_exponent);
        (0..self.topics)
            .map(|t| {
                let mut tokens = own[t].clone();
                let mut weights: Vec<f64> = (0..self.pool_size).map(weight).collect();
                if self.topics > 1 {
                    let next = &own[(t + 1) % self.topics];
                    for (j, tok) in next.iter().take(self.overlap).enumerate() {
                        tokens.push(tok.clone());
                        weights.push(weight(j));
                    }
                }
                TopicPool { tokens, weights }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DriftStyle {
    /// Full switch at the change period.
    Abrupt,
    /// Linear move over `ramp_months` starting at the change period.
    Gradual { ramp_months: u32 },
    /// In the after pool for the first half of every `period_months` cycle
    /// counted from the change period, in the before pool otherwise.
    Seasonal { period_months: u32 },
}

impl DriftStyle {
    pub fn label(&self) -> &'static str {
        match self {
            DriftStyle::Abrupt => "abrupt",
            DriftStyle::Gradual { .. } => "gradual",
            DriftStyle::Seasonal { .. } => "seasonal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub token: String,
    pub topic_before: usize,
    pub topic_after: usize,
    pub change_period: Period,
    pub style: DriftStyle,
}

impl DriftSpec {
    /// Share of the token's weight in the after pool at period `t`.
    pub fn lambda(&self, t: Period) -> f64 {
        let m = self.change_period.months_until(t);
        match self.style {
            DriftStyle::Abrupt => f64::from(u8::from(m >= 0)),
            DriftStyle::Gradual { ramp_months } => {
                if m < 0 {
                    0.0
                } else {
                    ((m + 1) as f64 / f64::from(ramp_months.max(1))).min(1.0)
                }
            }
            DriftStyle::Seasonal { period_months } => {
                let p = i64::from(period_months.max(2));
                let on = (p + 1) / 2;
                f64::from(u8::from(m.rem_euclid(p) < on))
            }
        }
    }
}

/// Ground truth written next to a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub config: GeneratorConfig,
    pub grid: Grid,
    pub pools: Vec<Vec<String>>,
    pub drifts: Vec<DriftSpec>,
    /// `schedules[d][s]`: `λ` of drift `d` in slice `s`.
    pub schedules: Vec<Vec<f64>>,
    pub slices: Vec<SliceKey>,
}

fn validate_drifts(pools: &[TopicPool], grid: &Grid, drifts: &[DriftSpec]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for d in drifts {
        let bad = |m: String| Err(Error::Config(format!("drift `{}`: {m}", d.token)));
        if d.topic_before == d.topic_after {
            return bad("topics must differ".into());
        }
        if d.topic_before >= pools.len() || d.topic_after >= pools.len() {
            return bad(format!("topic out of range (have {})", pools.len()));
        }
        let months = grid.start.months_until(d.change_period);
        if months < 0 || months >= i64::from(grid.months) {
            return bad(format!("change period {} outside the grid", d.change_period));
        }
        if !pools[d.topic_before].tokens.contains(&d.token) && !pools[d.topic_after].tokens.contains(&d.token) {
            return bad(format!(
                "token is in neither topic {} nor topic {}",
                d.topic_before, d.topic_after
            ));
        }
        if let DriftStyle::Gradual { ramp_months: 0 } | DriftStyle::Seasonal { period_months: 0 | 1 } = d.style {
            return bad("ramp must be ≥ 1 month and season ≥ 2 months".into());
        }
        if !seen.insert(d.token.as_str()) {
            return bad("token planted twice".into());
        }
    }
    Ok(())
}

/// Per-slice pools with every drifting token's weight split by `λ`.
fn slice_pools(pools: &[TopicPool], drifts: &[DriftSpec], t: Period) -> Vec<TopicPool> {
    let mut out = pools.to_vec();
    for d in drifts {
        let lambda = d.lambda(t);
        let base_weight = |p: &TopicPool| p.tokens.iter().position(|x| *x == d.token).map(|i| p.weights[i]);
        let w = base_weight(&pools[d.topic_before])
            .or_else(|| base_weight(&pools[d.topic_after]))
            .expect("validated membership");
        for (topic, share) in [(d.topic_before, 1.0 - lambda), (d.topic_after, lambda)] {
            let pool = &mut out[topic];
            match pool.tokens.iter().position(|x| *x == d.token) {
                Some(i) => pool.weights[i] = w * share,
                None => {
                    pool.tokens.push(d.token.clone());
                    pool.weights.push(w * share);
                }
            }
        }
    }
    // zero weights are dropped so alias tables stay valid
    for p in &mut out {
        let keep: Vec<bool> = p.weights.iter().map(|&w| w > 0.0).collect();
        let mut k = keep.iter();
        p.tokens.retain(|_| *k.next().unwrap());
        p.weights.retain(|&w| w > 0.0);
    }
    out
}

fn generate_slice(config: &GeneratorConfig, pools: &[TopicPool], slice_index: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(slice_index as u64);
    let tables: Vec<WeightedAliasIndex<f64>> = pools
        .iter()
        .map(|p| WeightedAliasIndex::new(p.weights.clone()).expect("positive weights"))
        .collect();
    let mut docs = Vec::with_capacity(config.documents_per_slice);
    let mut line = String::new();
    for _ in 0..config.documents_per_slice {
        let topic = rng.random_range(0..pools.len());
        let len = rng.random_range(config.doc_len_min..=config.doc_len_max);
        line.clear();
        for i in 0..len {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&pools[topic].tokens[tables[topic].sample(&mut rng)]);
        }
        docs.push(line.clone());
    }
    docs
}

/// Writes every slice of the grid to `sink` and returns the ground truth.
/// Output is a pure function of `config` and `drifts`.
pub fn generate<S: SliceSink>(config: &GeneratorConfig, drifts: &[DriftSpec], sink: &mut S) -> Result<SynthManifest> {
    config.validate()?;
    let grid = config.grid()?;
    let pools = config.resolved_pools();
    validate_drifts(&pools, &grid, drifts)?;
    let slices = grid.keys();
    let per_slice: Vec<Vec<TopicPool>> = slices.iter().map(|k| slice_pools(&pools, drifts, k.period)).collect();

    let workers = config.workers.max(1);
    for start in (0..slices.len()).step_by(workers) {
        let end = (start + workers).min(slices.len());
        let batch: Vec<Vec<String>> = if workers == 1 {
            vec![generate_slice(config, &per_slice[start], start)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (start..end)
                    .map(|s| {
                        let pools = &per_slice[s];
                        scope.spawn(move || generate_slice(config, pools, s))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("generator panicked")).collect()
            })
        };
        for (offset, docs) in batch.into_iter().enumerate() {
            for d in &docs {
                sink.write_document(&slices[start + offset], d)?;
            }
        }
    }
    sink.finish()?;

    Ok(SynthManifest {
        config: config.clone(),
        pools: pools.iter().map(|p| p.tokens.clone()).collect(),
        schedules: drifts
            .iter()
            .map(|d| slices.iter().map(|k| d.lambda(k.period)).collect())
            .collect(),
        drifts: drifts.to_vec(),
        slices,
        grid,
    })
}

/// Five abrupt moves at month 6: the top token of topic `2i` joins topic `2i + 1`.
pub fn default_benchmark_drifts(config: &GeneratorConfig) -> Vec<DriftSpec> {
    let pools = config.resolved_pools();
    let change = config.start.offset(i64::from(config.months / 2));
    (0..5.min(pools.len() / 2))
        .map(|i| DriftSpec {
            token: pools[2 * i].tokens[0].clone(),
            topic_before: 2 * i,
            topic_after: 2 * i + 1,
            change_period: change,
            style: DriftStyle::Abrupt,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    /// Correct detections over all detections; `None` when nothing was reported.
    pub precision: Option<f64>,
    /// Recovered planted tokens over planted tokens; `None` with no plants.
    pub recall: Option<f64>,
    pub per_style_recall: BTreeMap<String, f64>,
    pub detections: usize,
    pub correct_detections: usize,
    pub recovered: Vec<String>,
    pub missed: Vec<String>,
    pub false_positives: Vec<String>,
}

fn spans(from: Period, to: Period, change: Period) -> bool {
    let (lo, hi) = if from <= to { (from, to) } else { (to, from) };
    lo < change && change <= hi
}

/// Scores reports against the plants. A detection `(report, token)` is
/// correct when the token was planted and the report's comparison spans its
/// change period.
pub fn score(reports: &[DriftReport], manifest: &SynthManifest) -> Result<Score> {
    let mut keyed = Vec::with_capacity(reports.len());
    for r in reports {
        let parse = |s: &str| -> Result<SliceKey> {
            let k: SliceKey = s
                .parse()
                .map_err(|_| Error::GridMismatch(format!("`{s}` is not a slice key")))?;
            if manifest.grid.contains(&k) {
                Ok(k)
            } else {
                Err(Error::GridMismatch(format!("slice {k} is not in the benchmark grid")))
            }
        };
        keyed.push((parse(&r.from_slice)?, parse(&r.to_slice)?, r));
    }
    let plants: HashMap<&str, &DriftSpec> = manifest.drifts.iter().map(|d| (d.token.as_str(), d)).collect();

    let (mut detections, mut correct) = (0, 0);
    let mut recovered = BTreeSet::new();
    let mut false_positives = BTreeSet::new();
    for (from, to, r) in &keyed {
        for t in &r.drifted_tokens {
            detections += 1;
            match plants.get(t.token.as_str()) {
                Some(d) if spans(from.period, to.period, d.change_period) => {
                    correct += 1;
                    recovered.insert(t.token.clone());
                }
                _ => {
                    false_positives.insert(t.token.clone());
                }
            }
        }
    }

    let mut per_style: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for d in &manifest.drifts {
        let e = per_style.entry(d.style.label().to_string()).or_default();
        e.1 += 1;
        if recovered.contains(&d.token) {
            e.0 += 1;
        }
    }
    let n = manifest.drifts.len();
    Ok(Score {
        precision: (detections > 0).then(|| correct as f64 / detections as f64),
        recall: (n > 0).then(|| recovered.len() as f64 / n as f64),
        per_style_recall: per_style
            .into_iter()
            .map(|(k, (hit, tot))| (k, hit as f64 / tot as f64))
            .collect(),
        detections,
        correct_detections: correct,
        missed: manifest
            .drifts
            .iter()
            .filter(|d| !recovered.contains(&d.token))
            .map(|d| d.token.clone())
            .collect(),
        recovered: recovered.into_iter().collect(),
        false_positives: false_positives.into_iter().collect(),
    })
}

/// Which slice pairs the benchmark compares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparisons {
    /// The month before each distinct change period against the change period.
    #[default]
    Spanning,
    /// Every pair of consecutive months.
    Adjacent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub generator: GeneratorConfig,
    pub training: Hyperparameters,
    pub detector: DriftConfig,
    pub min_count: u64,
    pub comparisons: Comparisons,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            generator: GeneratorConfig::default(),
            // 1e-4 would discard about three quarters of a corpus with only
            // a few hundred equally frequent types
            training: Hyperparameters {
                subsample: 1e-3,
                ..Hyperparameters::default()
            },
            detector: DriftConfig::default(),
            min_count: 5,
            comparisons: Comparisons::Spanning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub manifest: SynthManifest,
    pub vocabulary_size: usize,
    pub reports: Vec<DriftReport>,
    pub score: Score,
}

/// The slice pairs the benchmark will compare, as grid positions.
pub fn comparison_pairs(manifest: &SynthManifest, which: Comparisons) -> Vec<(usize, usize)> {
    let n = manifest.slices.len();
    match which {
        Comparisons::Adjacent => (1..n).map(|j| (j - 1, j)).collect(),
        Comparisons::Spanning => {
            let mut set = BTreeSet::new();
            for d in &manifest.drifts {
                let j = manifest.grid.start.months_until(d.change_period) as usize;
                if j > 0 {
                    set.insert((j - 1, j));
                }
            }
            set.into_iter().collect()
        }
    }
}

/// Generates, trains the slices the comparisons need, detects and scores.
pub fn run_benchmark(cfg: &BenchmarkConfig, drifts: &[DriftSpec]) -> Result<BenchmarkResult> {
    let mut sink = MemorySink::default();
    let manifest = generate(&cfg.generator, drifts, &mut sink)?;
    let docs: Vec<Vec<Vec<&str>>> = manifest
        .slices
        .iter()
        .map(|k| {
            sink.slices
                .get(k)
                .map(|d| d.iter().map(|l| l.split(' ').collect()).collect())
                .unwrap_or_default()
        })
        .collect();
    let counts: Vec<SliceCounts> = manifest
        .slices
        .iter()
        .zip(&docs)
        .map(|(k, d)| SliceCounts::from_documents(k.to_string(), d.iter().map(|x| x.iter().copied())))
        .collect();
    let vocab = build_vocab(&counts, cfg.min_count)?;
    drop(counts);

    let pairs = comparison_pairs(&manifest, cfg.comparisons);
    let needed: BTreeSet<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut models = BTreeMap::new();
    for &s in &needed {
        let encoded = vocab.encode(docs[s].iter().map(|d| d.iter().copied()));
        let trained = train_skipgram::<f32>(&encoded, &vocab, s, &cfg.training)?;
        models.insert(s, trained.model);
    }
    let detector = DriftDetector::new(cfg.detector);
    let reports = pairs
        .iter()
        .map(|&(a, b)| {
            detector.detect(
                (&manifest.slices[a].to_string(), &models[&a]),
                (&manifest.slices[b].to_string(), &models[&b]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let score = score(&reports, &manifest)?;
    Ok(BenchmarkResult {
        vocabulary_size: vocab.len(),
        manifest,
        reports,
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            topics: 4,
            pool_size: 6,
            emoji_per_pool: 2,
            months: 12,
            documents_per_slice: 300,
            doc_len_min: 3,
            doc_len_max: 6,
            ..Default::default()
        }
    }

    fn drift(cfg: &GeneratorConfig, style: DriftStyle, month: i64) -> DriftSpec {
        DriftSpec {
            token: cfg.resolved_pools()[0].tokens[0].clone(),
            topic_before: 0,
            topic_after: 1,
            change_period: cfg.start.offset(month),
            style,
        }
    }

    fn co_occupants(sink: &MemorySink, key: &SliceKey, token: &str) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for d in &sink.slices[key] {
            let toks: Vec<&str> = d.split(' ').collect();
            if toks.contains(&token) {
                s.extend(toks.iter().filter(|t| **t != token).map(|t| t.to_string()));
            }
        }
        s
    }

    #[test]
    fn default_config_shape() {
        let c = GeneratorConfig::default();
        let pools = c.resolved_pools();
        assert_eq!(pools.len(), 20);
        let all: BTreeSet<&String> = pools.iter().flat_map(|p| &p.tokens).collect();
        assert_eq!(all.len(), 500);
        let d = default_benchmark_drifts(&c);
        assert_eq!(d.len(), 5);
        assert!(d.iter().all(|x| x.change_period == c.start.offset(6)));
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let c = small();
        let mut a = MemorySink::default();
        let mut b = MemorySink::default();
        generate(&c, &[], &mut a).unwrap();
        generate(&GeneratorConfig { workers: 3, ..c.clone() }, &[], &mut b).unwrap();
        assert_eq!(a.slices, b.slices);
        let mut other = MemorySink::default();
        generate(&GeneratorConfig { seed: 2, ..c }, &[], &mut other).unwrap();
        assert_ne!(a.slices, other.slices);
    }

    #[test]
    fn abrupt_switch_changes_neighbors() {
        let c = small();
        let d = drift(&c, DriftStyle::Abrupt, 6);
        let mut sink = MemorySink::default();
        let m = generate(&c, std::slice::from_ref(&d), &mut sink).unwrap();
        let pools = &m.pools;
        let before = co_occupants(&sink, &m.slices[5], &d.token);
        let after = co_occupants(&sink, &m.slices[6], &d.token);
        assert!(before.iter().all(|t| pools[0].contains(t)));
        assert!(after.iter().all(|t| pools[1].contains(t)));
        assert_eq!(m.schedules[0][5..7], [0.0, 1.0]);
    }

    #[test]
    fn seasonal_schedule_has_period_twelve() {
        let c = GeneratorConfig { months: 36, ..small() };
        let d = drift(&c, DriftStyle::Seasonal { period_months: 12 }, 3);
        let m = generate(&c, std::slice::from_ref(&d), &mut MemorySink::default()).unwrap();
        let s = &m.schedules[0];
        for t in 0..24 {
            assert_eq!(s[t], s[t + 12]);
        }
        assert!(s.contains(&0.0) && s.contains(&1.0));
    }

    #[test]
    fn gradual_ramp_is_linear() {
        let c = small();
        let d = drift(&c, DriftStyle::Gradual { ramp_months: 4 }, 2);
        let lam: Vec<f64> = (0..8).map(|m| d.lambda(c.start.offset(m))).collect();
        assert_eq!(lam, vec![0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn drift_token_must_belong_to_a_topic() {
        let c = small();
        let mut d = drift(&c, DriftStyle::Abrupt, 6);
        d.topic_before = 2;
        d.topic_after = 3;
        assert!(generate(&c, &[d], &mut MemorySink::default()).is_err());
        let mut d = drift(&c, DriftStyle::Abrupt, 6);
        d.change_period = c.start.offset(40);
        assert!(generate(&c, &[d], &mut MemorySink::default()).is_err());
    }

    fn report(from: &str, to: &str, tokens: &[&str]) -> DriftReport {
        DriftReport {
            from_slice: from.into(),
            to_slice: to.into(),
            beta: 2.0,
            mu: 0.0,
            sigma: 0.0,
            shapiro: None,
            flagged_pairs: vec![],
            drifted_tokens: tokens
                .iter()
                .map(|t| crate::drift::DriftedToken {
                    token: t.to_string(),
                    evidence: 1,
                    attribution: Default::default(),
                })
                .collect(),
            vocabulary_size: 10,
            distance: Default::default(),
            moments: Default::default(),
            conforming: true,
            warnings: vec![],
        }
    }

    #[test]
    fn scoring() {
        let c = small();
        let d = drift(&c, DriftStyle::Abrupt, 6);
        let m = generate(&c, std::slice::from_ref(&d), &mut MemorySink::default()).unwrap();
        let (from, to) = (m.slices[5].to_string(), m.slices[6].to_string());

        let empty = score(&[report(&from, &to, &[])], &m).unwrap();
        assert_eq!(empty.recall, Some(0.0));
        assert_eq!(empty.precision, None);

        let exact = score(&[report(&from, &to, &[&d.token])], &m).unwrap();
        assert_eq!((exact.precision, exact.recall), (Some(1.0), Some(1.0)));
        assert_eq!(exact.per_style_recall["abrupt"], 1.0);

        // right token, comparison not spanning the change
        let early = score(&[report(&m.slices[1].to_string(), &m.slices[2].to_string(), &[&d.token])], &m).unwrap();
        assert_eq!((early.precision, early.recall), (Some(0.0), Some(0.0)));

        let noisy = score(&[report(&from, &to, &[&d.token, "t01w03"])], &m).unwrap();
        assert_eq!(noisy.precision, Some(0.5));

        assert!(matches!(score(&[report("2030-01/other", &to, &[])], &m), Err(Error::GridMismatch(_))));
    }
}

//! Pairwise-distance drift statistic.
//!
//! For two slice models over the same vocabulary:
//!
//! * `D^i[k,l] = d(v_k, v_l)` within each model (cosine distance by default),
//! * the baseline shift `S[k,l] = |D^i[k,l] - D^j[k,l]|` with mean `μ` and
//!   population standard deviation `σ` over the strict upper triangle,
//! * the indicator `Δ[k,l] = 1` iff `|S[k,l] - μ| > β·σ`, `β ≥ 2`,
//! * attribution of each flagged pair to the member with more flagged pairs.
//!
//! Only within-model distances are used, so no cross-model alignment is needed.
//!
//! [`DistanceMatrix`] and [`ShiftMatrix`] materialize the packed upper
//! triangle and are meant for small vocabularies and tests. [`DriftDetector`]
//! streams row blocks instead and never holds more than the flagged pairs.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EmbeddingModel;
use crate::scalar::{dot, norm, Real};
use crate::shapiro::{shapiro_wilk, ShapiroWilk, MAX_N};

pub const MIN_BETA: f64 = 2.0;

/// Which within-model quantity fills `D`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// `1 - cos`
    #[default]
    Cosine,
    /// raw `cos`; gives the same `|ΔD|`
    Similarity,
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(DistanceKind::Cosine),
            "similarity" => Ok(DistanceKind::Similarity),
            _ => Err(Error::InvalidArgument(format!("unknown distance `{s}`"))),
        }
    }
}

/// Which entries of the shift matrix feed `μ` and `σ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentConvention {
    /// Each unordered pair once, diagonal excluded.
    #[default]
    UpperTriangle,
    /// All `n²` entries: both triangles plus the zero diagonal.
    FullMatrix,
}

impl std::str::FromStr for MomentConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upper_triangle" => Ok(MomentConvention::UpperTriangle),
            "full_matrix" => Ok(MomentConvention::FullMatrix),
            _ => Err(Error::InvalidArgument(format!("unknown moment convention `{s}`"))),
        }
    }
}

/// Converts upper-triangle `(count, mean, m2)` to `(μ, σ)` under `conv`.
fn finish_moments(n: usize, count: u64, mean: f64, m2: f64, conv: MomentConvention) -> (f64, f64) {
    if count == 0 {
        return (0.0, 0.0);
    }
    match conv {
        MomentConvention::UpperTriangle => (mean, (m2 / count as f64).max(0.0).sqrt()),
        MomentConvention::FullMatrix => {
            let c = count as f64;
            let total = (n * n) as f64;
            let sum = 2.0 * c * mean;
            let sumsq = 2.0 * (m2 + c * mean * mean);
            let mu = sum / total;
            (mu, (sumsq / total - mu * mu).max(0.0).sqrt())
        }
    }
}

/// Number of unordered pairs among `n` items.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of `(k, l)`, `k < l`, in row-major packed upper-triangle order.
#[inline]
pub fn pair_index(n: usize, k: usize, l: usize) -> usize {
    debug_assert!(k < l && l < n);
    k * (2 * n - k - 1) / 2 + (l - k - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(n: usize, idx: usize) -> (usize, usize) {
    // rows shrink by one each step; walk with a closed-form first guess
    let nf = n as f64;
    let disc = (2.0 * nf - 1.0) * (2.0 * nf - 1.0) - 8.0 * idx as f64;
    let mut k = (((2.0 * nf - 1.0) - disc.max(0.0).sqrt()) / 2.0).floor().max(0.0) as usize;
    while k > 0 && pair_index(n, k, k + 1) > idx {
        k -= 1;
    }
    while k + 2 < n && pair_index(n, k + 1, k + 2) <= idx {
        k += 1;
    }
    let l = idx - pair_index(n, k, k + 1) + k + 1;
    (k, l)
}

/// Unit-normalized copy of every row; errors on a zero vector.
fn unit_rows<T: Real>(m: &EmbeddingModel<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(m.len() * m.dim());
    for (id, row) in m.rows().enumerate() {
        let n = norm(row);
        if n == T::zero() {
            return Err(Error::ZeroVector(m.token(id).to_string()));
        }
        out.extend(row.iter().map(|&x| x / n));
    }
    Ok(out)
}

#[inline]
fn distance_from_unit<T: Real>(kind: DistanceKind, a: &[T], b: &[T]) -> T {
    let c = dot(a, b).max(-T::one()).min(T::one());
    match kind {
        DistanceKind::Cosine => T::one() - c,
        DistanceKind::Similarity => c,
    }
}

/// Symmetric `|V| × |V|` matrix stored as its strict upper triangle; the
/// diagonal is zero (cosine distance) or one (similarity).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    kind: DistanceKind,
    upper: Vec<T>,
}

impl<T: Real> DistanceMatrix<T> {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn get(&self, k: usize, l: usize) -> T {
        match k.cmp(&l) {
            std::cmp::Ordering::Equal => match self.kind {
                DistanceKind::Cosine => T::zero(),
                DistanceKind::Similarity => T::one(),
            },
            std::cmp::Ordering::Less => self.upper[pair_index(self.n, k, l)],
            std::cmp::Ordering::Greater => self.upper[pair_index(self.n, l, k)],
        }
    }

    pub fn upper_triangle(&self) -> &[T] {
        &self.upper
    }
}

/// All within-model pairwise distances.
pub fn pairwise_distances<T: Real>(m: &EmbeddingModel<T>, kind: DistanceKind) -> Result<DistanceMatrix<T>> {
    let unit = unit_rows(m)?;
    let (n, dim) = (m.len(), m.dim());
    let mut upper = Vec::with_capacity(pair_count(n));
    for k in 0..n {
        let a = &unit[k * dim..(k + 1) * dim];
        for l in k + 1..n {
            upper.push(distance_from_unit(kind, a, &unit[l * dim..(l + 1) * dim]));
        }
    }
    Ok(DistanceMatrix { n, kind, upper })
}

/// Streaming mean / M2 accumulator (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let n = (self.count + o.count) as f64;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n;
        self.m2 += o.m2 + d * d * (self.count as f64) * (o.count as f64) / n;
        self.count += o.count;
    }

}

/// Elementwise `|D^from - D^to|` with its upper-triangle mean and population
/// standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMatrix<T> {
    n: usize,
    upper: Vec<T>,
    pub mu: f64,
    pub sigma: f64,
}

impl<T: Real> ShiftMatrix<T> {
    /// Builds a shift matrix from its packed upper triangle.
    pub fn from_upper(n: usize, upper: Vec<T>) -> Result<Self> {
        if upper.len() != pair_count(n) {
            return Err(Error::ShapeMismatch {
                left: format!("{n}×{n}"),
                right: format!("{} upper-triangle values", upper.len()),
            });
        }
        if upper.iter().any(|x| !x.is_finite() || *x < T::zero()) {
            return Err(Error::InvalidArgument("shift values must be finite and non-negative".into()));
        }
        let mu = if upper.is_empty() {
            0.0
        } else {
            upper.iter().map(|x| x.as_f64()).sum::<f64>() / upper.len() as f64
        };
        let sigma = if upper.is_empty() {
            0.0
        } else {
            (upper.iter().map(|x| (x.as_f64() - mu).powi(2)).sum::<f64>() / upper.len() as f64).sqrt()
        };
        Ok(ShiftMatrix { n, upper, mu, sigma })
    }

    /// Recomputes `μ` and `σ` under another convention.
    pub fn with_convention(mut self, conv: MomentConvention) -> Self {
        let mut m = Moments::default();
        for x in &self.upper {
            m.push(x.as_f64());
        }
        (self.mu, self.sigma) = finish_moments(self.n, m.count, m.mean, m.m2, conv);
        self
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, k: usize, l: usize) -> T {
        match k.cmp(&l) {
            std::cmp::Ordering::Equal => T::zero(),
            std::cmp::Ordering::Less => self.upper[pair_index(self.n, k, l)],
            std::cmp::Ordering::Greater => self.upper[pair_index(self.n, l, k)],
        }
    }

    pub fn upper_triangle(&self) -> &[T] {
        &self.upper
    }
}

/// `|D^i - D^j|` elementwise.
pub fn baseline_shift<T: Real>(di: &DistanceMatrix<T>, dj: &DistanceMatrix<T>) -> Result<ShiftMatrix<T>> {
    if di.n != dj.n || di.kind != dj.kind {
        return Err(Error::ShapeMismatch {
            left: format!("{0}×{0} {1:?}", di.n, di.kind),
            right: format!("{0}×{0} {1:?}", dj.n, dj.kind),
        });
    }
    let upper = di.upper.iter().zip(&dj.upper).map(|(a, b)| (*a - *b).abs()).collect();
    ShiftMatrix::from_upper(di.n, upper)
}

/// Seeded uniform subsample (without replacement) of at most `max_n` pair
/// indices, sorted.
fn sample_pairs(total: usize, max_n: usize, seed: u64) -> Vec<usize> {
    if total <= max_n {
        return (0..total).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample_indices(&mut rng, total, max_n).into_vec();
    idx.sort_unstable();
    idx
}

/// Shapiro–Wilk on (a seeded subsample of) the shift values.
pub fn normality_check<T: Real>(s: &ShiftMatrix<T>, max_n: usize, seed: u64) -> Result<ShapiroWilk> {
    let max_n = max_n.min(MAX_N);
    let finite: Vec<f64> = s.upper.iter().map(|x| x.as_f64()).filter(|x| x.is_finite()).collect();
    if finite.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: finite.len(),
        });
    }
    if s.sigma == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let sample: Vec<f64> = sample_pairs(finite.len(), max_n, seed)
        .into_iter()
        .map(|i| finite[i])
        .collect();
    shapiro_wilk(&sample)
}

/// Binary symmetric `Δ`, stored as its flagged upper-triangle pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftIndicator {
    n: usize,
    pub beta: f64,
    /// `k < l`, ascending.
    pairs: Vec<(usize, usize)>,
    /// `false` when β < 2 was forced through.
    pub conforming: bool,
    /// `σ = 0`: nothing can exceed `β·σ` strictly, so `Δ` is all zeros.
    pub degenerate_sigma: bool,
}

impl DriftIndicator {
    /// Builds an indicator from explicit pairs (any order, either orientation).
    pub fn from_pairs(n: usize, beta: f64, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut v = Vec::new();
        for (a, b) in pairs {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidArgument(format!("invalid pair ({a}, {b}) for n = {n}")));
            }
            v.push((a.min(b), a.max(b)));
        }
        v.sort_unstable();
        v.dedup();
        Ok(DriftIndicator {
            n,
            beta,
            pairs: v,
            conforming: beta >= MIN_BETA,
            degenerate_sigma: false,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn flagged(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn get(&self, k: usize, l: usize) -> bool {
        k != l && self.pairs.binary_search(&(k.min(l), k.max(l))).is_ok()
    }

    pub fn is_zero(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `Σ_{p≠k} Δ[k,p]` for every token.
    pub fn row_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.n];
        for &(k, l) in &self.pairs {
            sums[k] += 1;
            sums[l] += 1;
        }
        sums
    }

    /// Dense 0/1 rows, for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut d = vec![vec![0u8; self.n]; self.n];
        for &(k, l) in &self.pairs {
            d[k][l] = 1;
            d[l][k] = 1;
        }
        d
    }
}

fn check_beta(beta: f64, allow_unsafe: bool) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be finite and non-negative, got {beta}")));
    }
    if beta < MIN_BETA && !allow_unsafe {
        return Err(Error::BetaBelowMinimum(beta));
    }
    Ok(())
}

#[inline]
fn exceeds(shift: f64, mu: f64, sigma: f64, beta: f64) -> bool {
    (shift - mu).abs() > beta * sigma
}

/// `Δ[k,l] = 1` iff `|S[k,l] - μ| > β·σ`. β below 2 is refused unless
/// `allow_unsafe_beta`, in which case the result is marked non-conforming.
pub fn drift_indicator<T: Real>(s: &ShiftMatrix<T>, beta: f64, allow_unsafe_beta: bool) -> Result<DriftIndicator> {
    check_beta(beta, allow_unsafe_beta)?;
    let mut pairs = Vec::new();
    if s.sigma > 0.0 {
        for (idx, x) in s.upper.iter().enumerate() {
            if exceeds(x.as_f64(), s.mu, s.sigma, beta) {
                pairs.push(pair_from_index(s.n, idx));
            }
        }
    }
    Ok(DriftIndicator {
        n: s.n,
        beta,
        pairs,
        conforming: beta >= MIN_BETA,
        degenerate_sigma: s.sigma == 0.0,
    })
}

/// Which member of a flagged pair is held responsible for the shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attribution {
    K,
    L,
    /// Equal row sums: both members are reported.
    Both,
}

fn attribute_with(k: usize, l: usize, sums: &[usize]) -> Attribution {
    match sums[k].cmp(&sums[l]) {
        std::cmp::Ordering::Greater => Attribution::K,
        std::cmp::Ordering::Less => Attribution::L,
        std::cmp::Ordering::Equal => Attribution::Both,
    }
}

/// Attributes the flagged pair `(k, l)` to the token with more flagged pairs.
pub fn attribute_shift(k: usize, l: usize, delta: &DriftIndicator) -> Result<Attribution> {
    if !delta.get(k, l) {
        return Err(Error::PairNotFlagged(k, l));
    }
    Ok(attribute_with(k, l, &delta.row_sums()))
}

/// Evidence that a token drifted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEvidence {
    /// Flagged pairs attributed to the token (sole + shared).
    pub evidence: usize,
    /// Pairs where the token had strictly more flagged pairs than its partner.
    pub sole: usize,
    /// Pairs attributed to both members on a tie.
    pub shared: usize,
}

/// Every token returned by the attribution for at least one flagged pair.
pub fn drifted_tokens(delta: &DriftIndicator) -> BTreeMap<usize, TokenEvidence> {
    let sums = delta.row_sums();
    let mut out: BTreeMap<usize, TokenEvidence> = BTreeMap::new();
    for &(k, l) in &delta.pairs {
        match attribute_with(k, l, &sums) {
            Attribution::K => out.entry(k).or_default().sole += 1,
            Attribution::L => out.entry(l).or_default().sole += 1,
            Attribution::Both => {
                out.entry(k).or_default().shared += 1;
                out.entry(l).or_default().shared += 1;
            }
        }
    }
    for e in out.values_mut() {
        e.evidence = e.sole + e.shared;
    }
    out
}

/// Settings for an end-to-end comparison of two slice models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    pub beta: f64,
    pub allow_unsafe_beta: bool,
    pub distance: DistanceKind,
    pub moments: MomentConvention,
    /// Cap on the Shapiro–Wilk subsample.
    pub normality_max_n: usize,
    pub seed: u64,
    /// Threads for the row-block passes; results do not depend on it.
    pub workers: usize,
    /// Rows per block.
    pub block_rows: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            beta: MIN_BETA,
            allow_unsafe_beta: false,
            distance: DistanceKind::Cosine,
            moments: MomentConvention::UpperTriangle,
            normality_max_n: MAX_N,
            seed: 1,
            workers: 1,
            block_rows: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPair {
    pub a: String,
    pub b: String,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftedToken {
    pub token: String,
    pub evidence: usize,
    pub attribution: TokenEvidence,
}

/// Result of comparing two slice models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub from_slice: String,
    pub to_slice: String,
    pub beta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub shapiro: Option<ShapiroWilk>,
    pub flagged_pairs: Vec<FlaggedPair>,
    pub drifted_tokens: Vec<DriftedToken>,
    pub vocabulary_size: usize,
    pub distance: DistanceKind,
    pub moments: MomentConvention,
    pub conforming: bool,
    pub warnings: Vec<String>,
}

impl DriftReport {
    pub fn drifted_set(&self) -> std::collections::BTreeSet<&str> {
        self.drifted_tokens.iter().map(|t| t.token.as_str()).collect()
    }

    /// `a,b,shift` rows with a header.
    pub fn flagged_pairs_csv(&self) -> String {
        let mut s = String::from("a,b,shift\n");
        for p in &self.flagged_pairs {
            s.push_str(&format!("{},{},{}\n", csv_field(&p.a), csv_field(&p.b), p.shift));
        }
        s
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Streams the comparison of two models in row blocks.
#[derive(Debug, Clone, Copy, Default)]
pub struct DriftDetector {
    pub config: DriftConfig,
}

struct Prepared<T> {
    n: usize,
    dim: usize,
    ui: Vec<T>,
    uj: Vec<T>,
    kind: DistanceKind,
}

impl<T: Real> Prepared<T> {
    #[inline]
    fn shift(&self, k: usize, l: usize) -> f64 {
        let d = self.dim;
        let a = distance_from_unit(self.kind, &self.ui[k * d..(k + 1) * d], &self.ui[l * d..(l + 1) * d]);
        let b = distance_from_unit(self.kind, &self.uj[k * d..(k + 1) * d], &self.uj[l * d..(l + 1) * d]);
        (a - b).abs().as_f64()
    }

    /// Runs `f(k)` for every row, split over `workers` threads, and returns
    /// the per-row results in row order.
    fn per_row<R: Send>(&self, workers: usize, block: usize, f: impl Fn(usize) -> R + Sync) -> Vec<R> {
        let rows: Vec<usize> = (0..self.n).collect();
        if workers <= 1 {
            return rows.into_iter().map(&f).collect();
        }
        let blocks: Vec<&[usize]> = rows.chunks(block.max(1)).collect();
        let next = std::sync::atomic::AtomicUsize::new(0);
        let mut results: Vec<(usize, Vec<R>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    let (blocks, next, f) = (&blocks, &next, &f);
                    scope.spawn(move || {
                        let mut done = Vec::new();
                        loop {
                            let b = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                            let Some(rows) = blocks.get(b) else { break };
                            done.push((b, rows.iter().map(|&k| f(k)).collect::<Vec<R>>()));
                        }
                        done
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("drift worker panicked"))
                .collect()
        });
        results.sort_by_key(|(b, _)| *b);
        results.into_iter().flat_map(|(_, r)| r).collect()
    }
}

impl DriftDetector {
    pub fn new(config: DriftConfig) -> Self {
        DriftDetector { config }
    }

    pub fn detect<T: Real>(
        &self,
        from: (&str, &EmbeddingModel<T>),
        to: (&str, &EmbeddingModel<T>),
    ) -> Result<DriftReport> {
        let cfg = &self.config;
        check_beta(cfg.beta, cfg.allow_unsafe_beta)?;
        let (mi, mj) = (from.1, to.1);
        if mi.tokens() != mj.tokens() {
            return Err(Error::ShapeMismatch {
                left: format!("{} ({} tokens)", from.0, mi.len()),
                right: format!("{} ({} tokens, different vocabulary or order)", to.0, mj.len()),
            });
        }
        let p = Prepared {
            n: mi.len(),
            dim: mi.dim(),
            ui: unit_rows(mi)?,
            uj: unit_rows(mj)?,
            kind: cfg.distance,
        };
        // unit_rows of two models with different dims is still fine; the
        // per-model slicing uses each model's own width.
        if mi.dim() != mj.dim() {
            return Err(Error::ShapeMismatch {
                left: format!("dim {}", mi.dim()),
                right: format!("dim {}", mj.dim()),
            });
        }
        let n = p.n;
        let workers = cfg.workers.max(1);
        let block = cfg.block_rows.max(1);

        // pass 1: moments, per row then merged in row order
        let row_moments = p.per_row(workers, block, |k| {
            let mut m = Moments::default();
            for l in k + 1..n {
                m.push(p.shift(k, l));
            }
            m
        });
        let mut total = Moments::default();
        for m in &row_moments {
            total.merge(m);
        }
        let (mu, sigma) = finish_moments(n, total.count, total.mean, total.m2, cfg.moments);

        // pass 2: flags
        let mut warnings = Vec::new();
        let flagged: Vec<(usize, usize, f64)> = if sigma > 0.0 {
            p.per_row(workers, block, |k| {
                (k + 1..n)
                    .filter_map(|l| {
                        let s = p.shift(k, l);
                        exceeds(s, mu, sigma, cfg.beta).then_some((k, l, s))
                    })
                    .collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect()
        } else {
            warnings.push("degenerate sigma: baseline shift has zero spread, no pair can be flagged".into());
            Vec::new()
        };
        if cfg.beta < MIN_BETA {
            warnings.push(format!("beta = {} is below 2; report is non-conforming", cfg.beta));
        }

        let shapiro = if pair_count(n) < 3 {
            warnings.push("fewer than 3 pairs; normality check skipped".into());
            None
        } else if sigma == 0.0 {
            None
        } else {
            let idx = sample_pairs(pair_count(n), cfg.normality_max_n.min(MAX_N), cfg.seed);
            let sample: Vec<f64> = idx
                .into_iter()
                .map(|i| {
                    let (k, l) = pair_from_index(n, i);
                    p.shift(k, l)
                })
                .collect();
            match shapiro_wilk(&sample) {
                Ok(r) => Some(r),
                Err(e) => {
                    warnings.push(format!("normality check failed: {e}"));
                    None
                }
            }
        };

        let delta = DriftIndicator {
            n,
            beta: cfg.beta,
            pairs: flagged.iter().map(|&(k, l, _)| (k, l)).collect(),
            conforming: cfg.beta >= MIN_BETA,
            degenerate_sigma: sigma == 0.0,
        };
        let drifted = drifted_tokens(&delta);
        let mut drifted_tokens: Vec<DriftedToken> = drifted
            .into_iter()
            .map(|(id, e)| DriftedToken {
                token: mi.token(id).to_string(),
                evidence: e.evidence,
                attribution: e,
            })
            .collect();
        drifted_tokens.sort_by(|a, b| b.evidence.cmp(&a.evidence).then_with(|| a.token.cmp(&b.token)));

        Ok(DriftReport {
            from_slice: from.0.to_string(),
            to_slice: to.0.to_string(),
            beta: cfg.beta,
            mu,
            sigma,
            shapiro,
            flagged_pairs: flagged
                .into_iter()
                .map(|(k, l, s)| FlaggedPair {
                    a: mi.token(k).to_string(),
                    b: mi.token(l).to_string(),
                    shift: s,
                })
                .collect(),
            drifted_tokens,
            vocabulary_size: n,
            distance: cfg.distance,
            moments: cfg.moments,
            conforming: cfg.beta >= MIN_BETA,
            warnings,
        })
    }
}

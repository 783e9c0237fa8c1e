//! Skip-gram with negative sampling.
//!
//! For a center token `c`, an observed context `o` and negatives `n₁..n_k`
//! drawn from the unigram^¾ distribution, each step minimizes
//!
//! ```text
//! L = -log σ(u_o·v_c) - Σ log σ(-u_n·v_c)
//! ```
//!
//! where `v` are input (center) vectors and `u` output (context) vectors.
//! The input vectors form the published model.

use std::cell::Cell;
use std::marker::PhantomData;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EmbeddingModel;
use crate::scalar::{dot, Real};
use crate::vocab::{SharedVocabulary, OOV};

/// Training settings. Defaults are the usual skip-gram ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub dim: usize,
    /// Context positions on each side of the center.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial rate, decayed linearly towards `learning_rate * 1e-4`.
    pub learning_rate: f64,
    /// Frequent-token subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
    pub seed: u64,
    /// 1 = deterministic. More workers share parameters without locks.
    pub workers: usize,
    /// Whether out-of-vocabulary tokens still occupy window positions.
    pub oov_occupies_window: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            subsample: 1e-4,
            seed: 1,
            workers: 1,
            oov_occupies_window: true,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.subsample >= 0.0 && self.subsample.is_finite()) {
            return bad("subsample threshold must be non-negative");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `-log σ(x)`, computed without overflow.
#[inline]
pub fn neg_log_sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Loss of one (center, context, negatives) triple.
pub fn sgns_loss<T: Real>(center: &[T], context: &[T], negatives: &[&[T]]) -> T {
    let mut loss = neg_log_sigmoid(dot(context, center));
    for n in negatives {
        loss += neg_log_sigmoid(-dot(n, center));
    }
    loss
}

/// Analytic gradient of [`sgns_loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient<T> {
    pub loss: T,
    pub center: Vec<T>,
    pub context: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

pub fn sgns_gradient<T: Real>(center: &[T], context: &[T], negatives: &[&[T]]) -> SgnsGradient<T> {
    let dim = center.len();
    let s_o = dot(context, center);
    // dL/ds for the positive (label 1) and each negative (label 0)
    let g_o = sigmoid(s_o) - T::one();
    let mut d_center: Vec<T> = context.iter().map(|&u| g_o * u).collect();
    let d_context: Vec<T> = center.iter().map(|&v| g_o * v).collect();
    let mut loss = neg_log_sigmoid(s_o);
    let mut d_neg = Vec::with_capacity(negatives.len());
    for n in negatives {
        let s_n = dot(n, center);
        let g_n = sigmoid(s_n);
        loss += neg_log_sigmoid(-s_n);
        for k in 0..dim {
            d_center[k] += g_n * n[k];
        }
        d_neg.push(center.iter().map(|&v| g_n * v).collect());
    }
    SgnsGradient {
        loss,
        center: d_center,
        context: d_context,
        negatives: d_neg,
    }
}

/// Parameter storage the update step reads and writes through.
trait ParamTable<T: Real> {
    fn read_row(&self, row: usize, dim: usize, out: &mut [T]);
    fn add_row(&self, row: usize, dim: usize, delta: &[T]);
}

/// Single-owner storage.
struct LocalTable<T>(Vec<Cell<T>>);

impl<T: Real> LocalTable<T> {
    fn new(values: Vec<T>) -> Self {
        LocalTable(values.into_iter().map(Cell::new).collect())
    }

    fn into_inner(self) -> Vec<T> {
        self.0.into_iter().map(Cell::into_inner).collect()
    }
}

impl<T: Real> ParamTable<T> for LocalTable<T> {
    #[inline]
    fn read_row(&self, row: usize, dim: usize, out: &mut [T]) {
        for (o, c) in out.iter_mut().zip(&self.0[row * dim..(row + 1) * dim]) {
            *o = c.get();
        }
    }

    #[inline]
    fn add_row(&self, row: usize, dim: usize, delta: &[T]) {
        for (c, d) in self.0[row * dim..(row + 1) * dim].iter().zip(delta) {
            c.set(c.get() + *d);
        }
    }
}

/// Lock-free shared storage: relaxed loads and stores, lost updates allowed.
struct SharedTable<T> {
    cells: Vec<AtomicU64>,
    _scalar: PhantomData<T>,
}

impl<T: Real> SharedTable<T> {
    fn new(values: Vec<T>) -> Self {
        SharedTable {
            cells: values.into_iter().map(|x| AtomicU64::new(x.to_bits64())).collect(),
            _scalar: PhantomData,
        }
    }

    fn into_inner(self) -> Vec<T> {
        self.cells.into_iter().map(|c| T::from_bits64(c.into_inner())).collect()
    }
}

impl<T: Real> ParamTable<T> for SharedTable<T> {
    #[inline]
    fn read_row(&self, row: usize, dim: usize, out: &mut [T]) {
        for (o, c) in out.iter_mut().zip(&self.cells[row * dim..(row + 1) * dim]) {
            *o = T::from_bits64(c.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn add_row(&self, row: usize, dim: usize, delta: &[T]) {
        for (c, d) in self.cells[row * dim..(row + 1) * dim].iter().zip(delta) {
            let cur = T::from_bits64(c.load(Ordering::Relaxed));
            c.store((cur + *d).to_bits64(), Ordering::Relaxed);
        }
    }
}

/// Scratch buffers for one worker.
struct Scratch<T> {
    center: Vec<T>,
    /// Output rows of the positive and negatives, back to back.
    outputs: Vec<T>,
    coeffs: Vec<T>,
    center_delta: Vec<T>,
    row_delta: Vec<T>,
    targets: Vec<usize>,
}

impl<T: Real> Scratch<T> {
    fn new(dim: usize, negatives: usize) -> Self {
        Scratch {
            center: vec![T::zero(); dim],
            outputs: vec![T::zero(); dim * (negatives + 1)],
            coeffs: vec![T::zero(); negatives + 1],
            center_delta: vec![T::zero(); dim],
            row_delta: vec![T::zero(); dim],
            targets: Vec::with_capacity(negatives + 1),
        }
    }
}

/// One SGD step `θ ← θ - lr·∇L(θ)` for the triple given by `scratch.targets`
/// (first entry positive, rest negative). All scores are taken at the
/// pre-update parameters. Returns the loss before the update.
fn sgns_step<T: Real, P: ParamTable<T>>(
    input: &P,
    output: &P,
    center: usize,
    dim: usize,
    lr: T,
    s: &mut Scratch<T>,
) -> T {
    input.read_row(center, dim, &mut s.center);
    let mut loss = T::zero();
    for (j, &t) in s.targets.iter().enumerate() {
        let row = &mut s.outputs[j * dim..(j + 1) * dim];
        output.read_row(t, dim, row);
        let score = dot(row, &s.center);
        let (g, l) = if j == 0 {
            (sigmoid(score) - T::one(), neg_log_sigmoid(score))
        } else {
            (sigmoid(score), neg_log_sigmoid(-score))
        };
        s.coeffs[j] = g;
        loss += l;
    }
    s.center_delta.iter_mut().for_each(|x| *x = T::zero());
    for (j, &t) in s.targets.iter().enumerate() {
        let step = -lr * s.coeffs[j];
        let row = &s.outputs[j * dim..(j + 1) * dim];
        for k in 0..dim {
            s.center_delta[k] += step * row[k];
            s.row_delta[k] = step * s.center[k];
        }
        output.add_row(t, dim, &s.row_delta);
    }
    input.add_row(center, dim, &s.center_delta);
    loss
}

/// Per-epoch mean loss over (center, context) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub epoch_losses: Vec<f64>,
    pub pairs: u64,
}

impl TrainingStats {
    pub fn initial_loss(&self) -> Option<f64> {
        self.epoch_losses.first().copied()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub model: EmbeddingModel<T>,
    pub stats: TrainingStats,
}

/// Trains one slice model. `slice` selects the vocabulary's frequency table
/// used for subsampling and negative sampling; `corpus` is encoded with
/// [`SharedVocabulary::encode`].
pub fn train_skipgram<T: Real>(
    corpus: &[Vec<u32>],
    vocab: &SharedVocabulary,
    slice: usize,
    hp: &Hyperparameters,
) -> Result<TrainedModel<T>> {
    hp.validate()?;
    if slice >= vocab.slice_names().len() {
        return Err(Error::InvalidArgument(format!("slice index {slice} out of range")));
    }
    let n_vocab = vocab.len();
    let in_vocab = corpus.iter().flatten().filter(|&&t| t != OOV).count();
    if in_vocab < 2 {
        return Err(Error::TooFewTokens { found: in_vocab });
    }
    if let Some(&bad) = corpus.iter().flatten().find(|&&t| t != OOV && t as usize >= n_vocab) {
        return Err(Error::InvalidArgument(format!("token id {bad} outside vocabulary")));
    }

    let freqs = vocab.frequencies(slice);
    let total: u64 = freqs.iter().sum();
    let keep_prob: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            if hp.subsample <= 0.0 || f == 0 {
                return 1.0;
            }
            let t = hp.subsample * total as f64;
            ((f as f64 / t).sqrt() + 1.0) * t / f as f64
        })
        .collect();
    let noise = WeightedAliasIndex::new(freqs.iter().map(|&f| (f as f64).powf(0.75)).collect())
        .map_err(|e| Error::InvalidArgument(format!("negative sampling table: {e}")))?;

    let dim = hp.dim;
    let mut init_rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let half = 0.5 / dim as f64;
    let input: Vec<T> = (0..n_vocab * dim)
        .map(|_| T::lit(init_rng.random_range(-half..half)))
        .collect();
    let output = vec![T::zero(); n_vocab * dim];

    let plan = Plan {
        hp,
        keep_prob: &keep_prob,
        noise: &noise,
        total_centers: (in_vocab * hp.epochs) as f64,
    };

    let (vectors, stats) = if hp.workers == 1 {
        let input = LocalTable::new(input);
        let output = LocalTable::new(output);
        let processed = Cell::new(0usize);
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed.wrapping_add(1));
        let acc = plan.run(corpus, &input, &output, &mut rng, &|| {
            let p = processed.get();
            processed.set(p + 1);
            p
        });
        (input.into_inner(), acc.into_stats())
    } else {
        let input = SharedTable::new(input);
        let output = SharedTable::new(output);
        let processed = AtomicUsize::new(0);
        let shard = corpus.len().div_ceil(hp.workers).max(1);
        let accs: Vec<LossAccumulator> = std::thread::scope(|scope| {
            let handles: Vec<_> = corpus
                .chunks(shard)
                .enumerate()
                .map(|(w, docs)| {
                    let (input, output, processed, plan) = (&input, &output, &processed, &plan);
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed.wrapping_add(1 + w as u64));
                        plan.run(docs, input, output, &mut rng, &|| processed.fetch_add(1, Ordering::Relaxed))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
        });
        let mut total = LossAccumulator::new(hp.epochs);
        for a in &accs {
            total.merge(a);
        }
        (input.into_inner(), total.into_stats())
    };

    Ok(TrainedModel {
        model: EmbeddingModel::new(vocab.tokens().to_vec(), dim, vectors)?,
        stats,
    })
}

struct Plan<'a> {
    hp: &'a Hyperparameters,
    keep_prob: &'a [f64],
    noise: &'a WeightedAliasIndex<f64>,
    total_centers: f64,
}

struct LossAccumulator {
    sums: Vec<f64>,
    pairs: Vec<u64>,
}

impl LossAccumulator {
    fn new(epochs: usize) -> Self {
        LossAccumulator {
            sums: vec![0.0; epochs],
            pairs: vec![0; epochs],
        }
    }

    fn merge(&mut self, other: &LossAccumulator) {
        for e in 0..self.sums.len() {
            self.sums[e] += other.sums[e];
            self.pairs[e] += other.pairs[e];
        }
    }

    fn into_stats(self) -> TrainingStats {
        TrainingStats {
            epoch_losses: self
                .sums
                .iter()
                .zip(&self.pairs)
                .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
                .collect(),
            pairs: self.pairs.iter().sum(),
        }
    }
}

impl Plan<'_> {
    fn run<T: Real, P: ParamTable<T>>(
        &self,
        docs: &[Vec<u32>],
        input: &P,
        output: &P,
        rng: &mut ChaCha8Rng,
        tick: &dyn Fn() -> usize,
    ) -> LossAccumulator {
        let hp = self.hp;
        let dim = hp.dim;
        let mut scratch = Scratch::<T>::new(dim, hp.negatives);
        let mut acc = LossAccumulator::new(hp.epochs);
        let mut sentence: Vec<u32> = Vec::new();
        let lr0 = hp.learning_rate;

        for epoch in 0..hp.epochs {
            for doc in docs {
                sentence.clear();
                for &t in doc {
                    if t == OOV {
                        if hp.oov_occupies_window {
                            sentence.push(OOV);
                        }
                        continue;
                    }
                    let p = self.keep_prob[t as usize];
                    if p >= 1.0 || rng.random::<f64>() < p {
                        sentence.push(t);
                    }
                }
                for pos in 0..sentence.len() {
                    let center = sentence[pos];
                    if center == OOV {
                        continue;
                    }
                    let progress = tick() as f64 / self.total_centers;
                    let lr = T::lit((lr0 * (1.0 - progress)).max(lr0 * 1e-4));
                    let lo = pos.saturating_sub(hp.window);
                    let hi = (pos + hp.window + 1).min(sentence.len());
                    for (cpos, &ctx) in sentence.iter().enumerate().take(hi).skip(lo) {
                        if cpos == pos || ctx == OOV {
                            continue;
                        }
                        scratch.targets.clear();
                        scratch.targets.push(ctx as usize);
                        for _ in 0..hp.negatives {
                            let n = self.noise.sample(rng);
                            if n != ctx as usize {
                                scratch.targets.push(n);
                            }
                        }
                        let loss = sgns_step(input, output, center as usize, dim, lr, &mut scratch);
                        acc.sums[epoch] += loss.as_f64();
                        acc.pairs[epoch] += 1;
                    }
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{build_vocab, SliceCounts};

    #[test]
    fn sigmoid_and_softplus_are_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(800.0f64) == 1.0 && sigmoid(-800.0f64) == 0.0);
        assert!((neg_log_sigmoid(0.0f64) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((neg_log_sigmoid(-800.0f64) - 800.0).abs() < 1e-9);
        assert!(neg_log_sigmoid(800.0f64) >= 0.0);
    }

    #[test]
    fn step_applies_negative_gradient() {
        let dim = 3;
        let input: Vec<f64> = vec![0.1, -0.2, 0.3, 0.05, 0.0, -0.1];
        let output: Vec<f64> = vec![0.2, 0.1, -0.3, -0.1, 0.4, 0.25];
        let lr = 0.1f64;
        let ti = LocalTable::new(input.clone());
        let to = LocalTable::new(output.clone());
        let mut s = Scratch::new(dim, 1);
        s.targets = vec![1, 0];
        let loss = sgns_step(&ti, &to, 0, dim, lr, &mut s);

        let g = sgns_gradient(&input[0..3], &output[3..6], &[&output[0..3]]);
        assert!((loss - g.loss).abs() < 1e-15);
        let new_in = ti.into_inner();
        let new_out = to.into_inner();
        for k in 0..dim {
            assert!((new_in[k] - (input[k] - lr * g.center[k])).abs() < 1e-15);
            assert!((new_out[3 + k] - (output[3 + k] - lr * g.context[k])).abs() < 1e-15);
            assert!((new_out[k] - (output[k] - lr * g.negatives[0][k])).abs() < 1e-15);
        }
    }

    fn tiny_vocab() -> (SharedVocabulary, Vec<Vec<u32>>) {
        let docs = vec![vec!["a", "b", "a", "b"], vec!["c", "d"]];
        let v = build_vocab(&[SliceCounts::from_documents("s", docs.clone())], 1).unwrap();
        let enc = v.encode(docs);
        (v, enc)
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let (v, _) = tiny_vocab();
        let err = train_skipgram::<f32>(&[], &v, 0, &Hyperparameters::default()).unwrap_err();
        assert!(matches!(err, Error::TooFewTokens { found: 0 }));
        let err = train_skipgram::<f32>(&[vec![0]], &v, 0, &Hyperparameters::default()).unwrap_err();
        assert!(matches!(err, Error::TooFewTokens { found: 1 }));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let (v, c) = tiny_vocab();
        let hp = Hyperparameters {
            dim: 0,
            ..Default::default()
        };
        assert!(train_skipgram::<f32>(&c, &v, 0, &hp).is_err());
    }

    #[test]
    fn parallel_mode_produces_finite_vectors() {
        let (v, c) = tiny_vocab();
        let c: Vec<Vec<u32>> = c.iter().cycle().take(200).cloned().collect();
        let hp = Hyperparameters {
            dim: 8,
            workers: 3,
            subsample: 0.0,
            ..Default::default()
        };
        let m = train_skipgram::<f32>(&c, &v, 0, &hp).unwrap();
        assert!(m.model.as_slice().iter().all(|x| x.is_finite()));
        assert_eq!(m.stats.epoch_losses.len(), 5);
    }
}

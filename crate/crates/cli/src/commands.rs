//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use emodrift::analogy::{builtin_suite, parse_suite, run_suite, Gate, Verdict};
use emodrift::corpus::{read_posts, read_slice_file, Cleaner, DirectorySink, IngestConfig, Partitioner, Platform, SliceKey};
use emodrift::drift::{DriftDetector, DriftReport};
use emodrift::emoji::{EmojiTable, TokenizerOptions};
use emodrift::synth::{self, BenchmarkConfig, Comparisons, GeneratorConfig};
use emodrift::timeseries::{
    classify_pattern, cohesiveness, linear_trend, neighbor_overlap, similarity_series, Cohesiveness, Pattern,
    PatternThresholds, SimilaritySeries, SliceModel, TrendFit,
};
use emodrift::train::train_skipgram;
use emodrift::vocab::{build_vocab, SliceCounts};
use emodrift::{Model32, Model64};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{envelope, write_json, write_text, Failure};
use crate::{ComparisonsArg, DriftArgs, IngestArgs, SanityArgs, SynthArgs, TimeseriesArgs, TrainArgs};

const MODEL_EXT: &str = "vec";

fn stem(key: &SliceKey) -> String {
    key.file_name().trim_end_matches(".txt").to_string()
}

fn set(cfg: &mut RunConfig, key: &str, value: Option<String>) -> Result<(), Failure> {
    match value {
        Some(v) => cfg.set(key, &v).map_err(Failure::Usage),
        None => Ok(()),
    }
}

/// Files in `dir` named `<slice>.<ext>`, ordered by slice.
fn slice_files(dir: &Path, ext: &str) -> Result<Vec<(SliceKey, PathBuf)>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Failure::Data(e.to_string()))?.path();
        if path.extension().and_then(|x| x.to_str()) != Some(ext) {
            continue;
        }
        let Some(name) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if let Ok(key) = name.parse::<SliceKey>() {
            out.push((key, path));
        }
    }
    out.sort();
    Ok(out)
}

fn model_path(cfg: &RunConfig, key: &SliceKey) -> PathBuf {
    cfg.models_dir().join(format!("{}.{MODEL_EXT}", stem(key)))
}

fn parse_key(s: &str) -> Result<SliceKey, Failure> {
    s.parse().map_err(|e: emodrift::Error| Failure::Usage(e.to_string()))
}

pub fn ingest(cfg: &mut RunConfig, a: &IngestArgs) -> Result<(), Failure> {
    set(cfg, "grid.start", a.grid_start.clone())?;
    set(cfg, "grid.months", a.months.map(|m| m.to_string()))?;
    set(cfg, "grid.platforms", a.platforms.clone())?;
    if a.allow_no_emoji {
        cfg.require_emoji = false;
    }
    if a.collapse_skin_tones {
        cfg.collapse_skin_tones = true;
    }
    if let Some(input) = &a.input {
        cfg.corpus = Some(input.clone());
    }
    cfg.validate()?;
    let input = cfg
        .corpus
        .clone()
        .ok_or_else(|| Failure::Usage("no input: pass --input or set `corpus`".into()))?;
    let grid = cfg.grid()?;
    let ingest_cfg = IngestConfig {
        require_emoji: cfg.require_emoji,
        tokenizer: TokenizerOptions {
            collapse_skin_tones: cfg.collapse_skin_tones,
        },
    };

    let mut sink = DirectorySink::create(cfg.slices_dir())?;
    sink.touch_all(&grid.keys())?;
    let cleaner = Cleaner::new(EmojiTable::builtin(), ingest_cfg);
    let mut partitioner = Partitioner::new(&grid, cleaner, sink);
    let reader: Box<dyn BufRead> = if input.as_os_str() == "-" {
        Box::new(BufReader::new(std::io::stdin().lock()))
    } else {
        let f = File::open(&input).map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
        Box::new(BufReader::new(f))
    };
    for post in read_posts(reader, &input.display().to_string()) {
        partitioner.push(&post?)?;
    }
    let (_, manifest) = partitioner.finish()?;
    write_json(&cfg.slices_dir().join("manifest.json"), &envelope("ingest", cfg, &manifest))?;
    println!(
        "ingested {} posts: {} admitted, {} rejected, {} outside the grid; {} documents in {} slices",
        manifest.posts_read,
        manifest.admitted,
        manifest.rejected,
        manifest.outside_grid,
        manifest.documents(),
        manifest.slices.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct SliceTraining {
    slice: SliceKey,
    documents: usize,
    pairs: u64,
    epoch_losses: Vec<f64>,
}

#[derive(Serialize)]
struct TrainingReport {
    vocabulary_size: usize,
    slices_in_vocabulary: Vec<SliceKey>,
    trained: Vec<SliceTraining>,
}

pub fn train(cfg: &mut RunConfig, a: &TrainArgs) -> Result<(), Failure> {
    set(cfg, "min_count", a.min_count.map(|v| v.to_string()))?;
    set(cfg, "train.dim", a.dim.map(|v| v.to_string()))?;
    set(cfg, "train.epochs", a.epochs.map(|v| v.to_string()))?;
    set(cfg, "train.window", a.window.map(|v| v.to_string()))?;
    set(cfg, "train.negatives", a.negatives.map(|v| v.to_string()))?;
    cfg.validate()?;
    let files = slice_files(&cfg.slices_dir(), "txt")?;
    if files.is_empty() {
        return Err(Failure::Data(format!("no slice files in {}", cfg.slices_dir().display())));
    }
    let only = a.only.iter().map(|s| parse_key(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(missing) = only.iter().find(|k| !files.iter().any(|(f, _)| f == *k)) {
        return Err(Failure::Usage(format!("no slice file for {missing}")));
    }

    // counts first, one file at a time, so only one slice is ever in memory
    let mut counts = Vec::with_capacity(files.len());
    for (key, path) in &files {
        let docs = read_slice_file(path)?;
        counts.push(SliceCounts::from_documents(key.to_string(), &docs));
    }
    let vocab = build_vocab(&counts, cfg.min_count)?;
    drop(counts);
    eprintln!("shared vocabulary: {} tokens over {} slices", vocab.len(), files.len());

    let models_dir = cfg.models_dir();
    std::fs::create_dir_all(&models_dir).map_err(|e| Failure::Data(format!("{}: {e}", models_dir.display())))?;
    let hp = cfg.hyperparameters();
    let mut trained = Vec::new();
    for (s, (key, path)) in files.iter().enumerate() {
        if !only.is_empty() && !only.contains(key) {
            continue;
        }
        let docs = read_slice_file(path)?;
        let encoded = vocab.encode(&docs);
        let t = train_skipgram::<f32>(&encoded, &vocab, s, &hp)?;
        t.model.save(&model_path(cfg, key))?;
        eprintln!("trained {key}: {} documents, final loss {:?}", docs.len(), t.stats.final_loss());
        trained.push(SliceTraining {
            slice: *key,
            documents: docs.len(),
            pairs: t.stats.pairs,
            epoch_losses: t.stats.epoch_losses,
        });
    }
    write_json(&cfg.models_dir().join("vocab.json"), &vocab)?;
    let report = TrainingReport {
        vocabulary_size: vocab.len(),
        slices_in_vocabulary: files.iter().map(|(k, _)| *k).collect(),
        trained,
    };
    write_json(&cfg.models_dir().join("training.json"), &envelope("train", cfg, &report))?;
    println!("trained {} models into {}", report.trained.len(), cfg.models_dir().display());
    Ok(())
}

/// Verdict per slice, as written by `sanity`.
#[derive(Debug, Serialize, Deserialize)]
struct SanitySummary {
    verdicts: BTreeMap<SliceKey, Verdict>,
}

fn sanity_summary_path(cfg: &RunConfig) -> PathBuf {
    cfg.reports_dir().join("sanity").join("summary.json")
}

pub fn sanity(cfg: &mut RunConfig, a: &SanityArgs) -> Result<(), Failure> {
    if let Some(p) = &a.suite {
        cfg.analogy_suite = Some(p.clone());
    }
    set(cfg, "analogy.top_k", a.top_k.map(|v| v.to_string()))?;
    set(cfg, "analogy.min_hit_rate", a.min_hit_rate.map(|v| v.to_string()))?;
    cfg.validate()?;
    let items = match &cfg.analogy_suite {
        Some(p) => {
            let f = File::open(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            parse_suite(BufReader::new(f), &p.display().to_string())?
        }
        None => builtin_suite(),
    };
    let gate = Gate {
        top_k: cfg.analogy_top_k,
        min_hit_rate: cfg.analogy_min_hit_rate,
    };
    let models = slice_files(&cfg.models_dir(), MODEL_EXT)?;
    if models.is_empty() {
        return Err(Failure::Data(format!("no models in {}", cfg.models_dir().display())));
    }
    let mut summary = SanitySummary {
        verdicts: BTreeMap::new(),
    };
    for (key, path) in &models {
        let model = Model32::load(path)?;
        let report = run_suite(&model, &items, gate)?;
        println!(
            "{key}: {:?} ({} scored, {} skipped, hits@{} = {})",
            report.verdict,
            report.scored,
            report.skipped,
            report.top_k,
            report.hit_rate_at_k.map(|r| format!("{r:.3}")).unwrap_or_else(|| "n/a".into())
        );
        summary.verdicts.insert(*key, report.verdict);
        let path = cfg.reports_dir().join("sanity").join(format!("{}.json", stem(key)));
        write_json(&path, &envelope("sanity", cfg, &report))?;
    }
    write_json(&sanity_summary_path(cfg), &envelope("sanity", cfg, &summary))?;
    let rejected: Vec<String> = summary
        .verdicts
        .iter()
        .filter(|(_, v)| **v == Verdict::Rejected)
        .map(|(k, _)| k.to_string())
        .collect();
    if rejected.is_empty() {
        Ok(())
    } else {
        Err(Failure::Gate(format!("analogy gate rejected {}", rejected.join(", "))))
    }
}

/// Verdicts from a previous `sanity` run, if there was one.
fn load_verdicts(cfg: &RunConfig) -> Result<BTreeMap<SliceKey, Verdict>, Failure> {
    let path = sanity_summary_path(cfg);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::Data(e.to_string()))?;
    let summary: SanitySummary =
        serde_json::from_value(value["report"].clone()).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(summary.verdicts)
}

fn load_cached(cfg: &RunConfig, cache: &mut BTreeMap<SliceKey, Model64>, k: SliceKey) -> Result<(), Failure> {
    if !cache.contains_key(&k) {
        let path = model_path(cfg, &k);
        if !path.exists() {
            return Err(Failure::Data(format!("no trained model for {k} at {}", path.display())));
        }
        cache.insert(k, Model32::load(&path)?.cast());
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepEntry {
    from: SliceKey,
    to: SliceKey,
    flagged_pairs: usize,
    drifted_tokens: Vec<String>,
    report: String,
}

pub fn drift(cfg: &mut RunConfig, a: &DriftArgs) -> Result<(), Failure> {
    set(cfg, "beta", a.beta.map(|v| v.to_string()))?;
    if a.unsafe_beta {
        cfg.unsafe_beta = true;
    }
    if let Some(d) = a.distance {
        cfg.distance = d.into();
    }
    if a.csv {
        cfg.csv = true;
    }
    cfg.validate()?;

    let pairs: Vec<(SliceKey, SliceKey)> = if a.sweep {
        let models = slice_files(&cfg.models_dir(), MODEL_EXT)?;
        let keys: Vec<SliceKey> = models.into_iter().map(|(k, _)| k).collect();
        let mut pairs = Vec::new();
        for k in &keys {
            let next = SliceKey::new(k.period.offset(1), k.platform);
            if keys.binary_search(&next).is_ok() {
                pairs.push((*k, next));
            }
        }
        pairs.sort_by_key(|(f, t)| (f.platform, f.period, t.period));
        if pairs.is_empty() {
            return Err(Failure::Data("no adjacent pair of trained months to compare".into()));
        }
        pairs
    } else {
        let from = parse_key(a.from.as_deref().unwrap_or_default())?;
        let to = parse_key(a.to.as_deref().unwrap_or_default())?;
        vec![(from, to)]
    };

    let detector = DriftDetector::new(cfg.drift());
    let mut cache: BTreeMap<SliceKey, Model64> = BTreeMap::new();
    let mut entries = Vec::new();
    for (from, to) in &pairs {
        load_cached(cfg, &mut cache, *from)?;
        load_cached(cfg, &mut cache, *to)?;
        let report: DriftReport = detector.detect(
            (&from.to_string(), &cache[from]),
            (&to.to_string(), &cache[to]),
        )?;
        let name = format!("{}__{}", stem(from), stem(to));
        let dir = cfg.reports_dir().join("drift");
        write_json(&dir.join(format!("{name}.json")), &envelope("drift", cfg, &report))?;
        if cfg.csv {
            write_text(&dir.join(format!("{name}.csv")), &report.flagged_pairs_csv())?;
        }
        for w in &report.warnings {
            eprintln!("{from} -> {to}: warning: {w}");
        }
        println!(
            "{from} -> {to}: {} flagged pairs, {} drifted tokens",
            report.flagged_pairs.len(),
            report.drifted_tokens.len()
        );
        entries.push(SweepEntry {
            from: *from,
            to: *to,
            flagged_pairs: report.flagged_pairs.len(),
            drifted_tokens: report.drifted_tokens.iter().map(|t| t.token.clone()).collect(),
            report: format!("{name}.json"),
        });
        // a sweep visits each month at most twice; drop what is no longer needed
        if a.sweep {
            cache.remove(from);
        }
    }
    if a.sweep {
        write_json(
            &cfg.reports_dir().join("drift").join("sweep.json"),
            &envelope("drift", cfg, &entries),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PairAnalysis {
    platform: Platform,
    series: SimilaritySeries,
    trend: Option<TrendFit>,
    pattern: Option<Pattern>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct OverlapPoint {
    from: SliceKey,
    to: SliceKey,
    overlap: f64,
}

#[derive(Serialize)]
struct TokenAnalysis {
    token: String,
    platform: Platform,
    cohesiveness: Vec<(SliceKey, Cohesiveness)>,
    neighbor_overlap: Vec<OverlapPoint>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct TimeseriesReport {
    pairs: Vec<PairAnalysis>,
    tokens: Vec<TokenAnalysis>,
}

pub fn timeseries(cfg: &mut RunConfig, a: &TimeseriesArgs) -> Result<(), Failure> {
    set(cfg, "k", a.k.map(|v| v.to_string()))?;
    if a.csv {
        cfg.csv = true;
    }
    cfg.validate()?;
    if a.pairs.is_empty() && a.tokens.is_empty() {
        return Err(Failure::Usage("nothing to do: pass --pair A,B or --token T".into()));
    }
    let pairs = a
        .pairs
        .iter()
        .map(|p| {
            p.split_once(',')
                .map(|(x, y)| (x.trim().to_string(), y.trim().to_string()))
                .filter(|(x, y)| !x.is_empty() && !y.is_empty())
                .ok_or_else(|| Failure::Usage(format!("--pair expects A,B, got `{p}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let platform_filter = a.platform.as_deref().map(Platform::from_label);

    let verdicts = if a.ignore_sanity {
        BTreeMap::new()
    } else {
        load_verdicts(cfg)?
    };
    let mut by_platform: BTreeMap<Platform, Vec<(SliceKey, Model32)>> = BTreeMap::new();
    for (key, path) in slice_files(&cfg.models_dir(), MODEL_EXT)? {
        if platform_filter.is_some_and(|p| p != key.platform) {
            continue;
        }
        by_platform.entry(key.platform).or_default().push((key, Model32::load(&path)?));
    }
    if by_platform.is_empty() {
        return Err(Failure::Data(format!("no models in {}", cfg.models_dir().display())));
    }
    let th = PatternThresholds {
        epsilon: cfg.epsilon,
        slope: cfg.slope_threshold,
        r_squared_floor: cfg.r_squared_floor,
    };

    let mut report = TimeseriesReport {
        pairs: Vec::new(),
        tokens: Vec::new(),
    };
    for (platform, models) in &by_platform {
        let slice_models: Vec<SliceModel<'_, f32>> = models
            .iter()
            .map(|(k, m)| SliceModel {
                key: *k,
                model: m,
                accepted: verdicts.get(k) != Some(&Verdict::Rejected),
            })
            .collect();
        let rejected = slice_models.iter().filter(|m| !m.accepted).count();
        for (x, y) in &pairs {
            let series = similarity_series(&slice_models, x, y)?;
            let mut notes = Vec::new();
            if rejected > 0 {
                notes.push(format!("{rejected} slices rejected by the analogy gate are gaps"));
            }
            let trend = match linear_trend(&series) {
                Ok(t) => Some(t),
                Err(e) => {
                    notes.push(format!("no trend: {e}"));
                    None
                }
            };
            let pattern = match &trend {
                Some(t) => match classify_pattern(&series, t, &th) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        notes.push(format!("no pattern: {e}"));
                        None
                    }
                },
                None => None,
            };
            match pattern {
                Some(p) => println!("{x},{y} on {platform}: {p:?}"),
                None => println!("{x},{y} on {platform}: no pattern"),
            }
            report.pairs.push(PairAnalysis {
                platform: *platform,
                series,
                trend,
                pattern,
                notes,
            });
        }
        for token in &a.tokens {
            let mut t = TokenAnalysis {
                token: token.clone(),
                platform: *platform,
                cohesiveness: Vec::new(),
                neighbor_overlap: Vec::new(),
                notes: Vec::new(),
            };
            for (k, m) in models {
                match cohesiveness(m, token, cfg.k) {
                    Ok(c) => t.cohesiveness.push((*k, c)),
                    Err(e) => t.notes.push(format!("{k}: {e}")),
                }
            }
            for w in models.windows(2) {
                let ((ki, mi), (kj, mj)) = (&w[0], &w[1]);
                match neighbor_overlap(mi, mj, token, cfg.k) {
                    Ok(overlap) => t.neighbor_overlap.push(OverlapPoint {
                        from: *ki,
                        to: *kj,
                        overlap,
                    }),
                    Err(e) => t.notes.push(format!("{ki} -> {kj}: {e}")),
                }
            }
            report.tokens.push(t);
        }
    }
    let dir = cfg.reports_dir().join("timeseries");
    write_json(&dir.join("timeseries.json"), &envelope("timeseries", cfg, &report))?;
    if cfg.csv {
        for (i, p) in report.pairs.iter().enumerate() {
            let name = format!("pair{}_{}.csv", i + 1, p.platform.label().to_ascii_lowercase());
            write_text(&dir.join(name), &p.series.to_csv())?;
        }
    }
    Ok(())
}

pub fn synth(cfg: &mut RunConfig, a: &SynthArgs) -> Result<(), Failure> {
    cfg.validate()?;
    let mut bench = BenchmarkConfig::default();
    let g: &mut GeneratorConfig = &mut bench.generator;
    g.seed = cfg.seed;
    g.workers = cfg.workers;
    if let Some(d) = a.docs {
        g.documents_per_slice = d;
    }
    if let Some(m) = a.months {
        g.months = m;
    }
    g.validate()?;
    bench.training.seed = cfg.seed;
    bench.training.workers = cfg.workers;
    if let Some(d) = a.dim {
        bench.training.dim = d;
    }
    if let Some(e) = a.epochs {
        bench.training.epochs = e;
    }
    bench.detector = cfg.drift();
    bench.min_count = cfg.min_count;
    bench.comparisons = match a.comparisons {
        ComparisonsArg::Spanning => Comparisons::Spanning,
        ComparisonsArg::Adjacent => Comparisons::Adjacent,
    };
    let drifts = if a.no_drifts {
        Vec::new()
    } else {
        synth::default_benchmark_drifts(&bench.generator)
    };

    let out = a.out.clone().unwrap_or_else(|| cfg.slices_dir());
    let mut sink = DirectorySink::create(&out)?;
    let manifest = synth::generate(&bench.generator, &drifts, &mut sink)?;
    emodrift::corpus::SliceSink::finish(&mut sink)?;
    write_json(&out.join("synth_manifest.json"), &envelope("synth", cfg, &manifest))?;
    println!(
        "generated {} slices with {} planted drifts in {}",
        manifest.slices.len(),
        manifest.drifts.len(),
        out.display()
    );
    if a.generate_only {
        return Ok(());
    }

    if drifts.is_empty() && bench.comparisons == Comparisons::Spanning {
        // nothing spans a change, so compare every month instead
        bench.comparisons = Comparisons::Adjacent;
    }
    let result = synth::run_benchmark(&bench, &drifts)?;
    let s = &result.score;
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into());
    println!(
        "|V| = {}, {} comparisons: precision {}, recall {}, {} false positives",
        result.vocabulary_size,
        result.reports.len(),
        fmt(s.precision),
        fmt(s.recall),
        s.false_positives.len()
    );
    #[derive(Serialize)]
    struct Run<'a> {
        benchmark: &'a BenchmarkConfig,
        result: &'a synth::BenchmarkResult,
    }
    write_json(
        &cfg.reports_dir().join("synth").join("score.json"),
        &envelope(
            "synth",
            cfg,
            Run {
                benchmark: &bench,
                result: &result,
            },
        ),
    )
}

//! Post cleaning and partitioning into (month × platform) slices.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{DateTime, Datelike};
use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::emoji::{parse_emoji_sequence, Degenerate, Diagnostics, EmojiTable, Token, Tokenizer, TokenizerOptions};
use crate::error::{Error, Result};

/// Posting client. Unrecognized labels map to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Platform {
    Ios,
    Android,
    Web,
    Other,
}

impl Platform {
    pub const ALL: [Platform; 4] = [Platform::Ios, Platform::Android, Platform::Web, Platform::Other];

    pub fn label(self) -> &'static str {
        match self {
            Platform::Ios => "iOS",
            Platform::Android => "Android",
            Platform::Web => "Web",
            Platform::Other => "Other",
        }
    }

    /// Lenient mapping; never fails.
    pub fn from_label(s: &str) -> Platform {
        match s.trim().to_ascii_lowercase().as_str() {
            "ios" | "iphone" | "ipad" | "twitter for iphone" | "twitter for ipad" => Platform::Ios,
            "android" | "twitter for android" => Platform::Android,
            "web" | "twitter web app" | "twitter web client" => Platform::Web,
            _ => Platform::Other,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Platform {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Platform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Platform::from_label(&s))
    }
}

/// Calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Period {
    pub year: i32,
    pub month: u32,
}

impl Period {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        Ok(Period { year, month })
    }

    /// UTC month containing the given epoch second.
    pub fn from_timestamp(ts: i64) -> Option<Self> {
        let dt = DateTime::from_timestamp(ts, 0)?;
        Some(Period {
            year: dt.year(),
            month: dt.month(),
        })
    }

    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ord: i64) -> Self {
        Period {
            year: ord.div_euclid(12) as i32,
            month: ord.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `self` to `later`.
    pub fn months_until(self, later: Period) -> i64 {
        later.ordinal() - self.ordinal()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Period {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected YYYY-MM, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        Period::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// One dataset of the grid: a calendar month on one platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SliceKey {
    pub period: Period,
    pub platform: Platform,
}

impl SliceKey {
    pub fn new(period: Period, platform: Platform) -> Self {
        SliceKey { period, platform }
    }

    /// `2016-05_ios.txt`
    pub fn file_name(&self) -> String {
        format!("{}_{}.txt", self.period, self.platform.label().to_ascii_lowercase())
    }
}

impl fmt::Display for SliceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.period, self.platform)
    }
}

impl FromStr for SliceKey {
    type Err = Error;
    /// Accepts `2016-05/iOS`, `2016-05_ios` and `2016-05_ios.txt`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_suffix(".txt").unwrap_or(s);
        let (p, plat) = s
            .split_once('/')
            .or_else(|| s.split_once('_'))
            .ok_or_else(|| Error::InvalidArgument(format!("expected PERIOD/PLATFORM, got `{s}`")))?;
        Ok(SliceKey::new(p.parse()?, Platform::from_label(plat)))
    }
}

impl Serialize for SliceKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SliceKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `months` consecutive periods starting at `start`, crossed with `platforms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub start: Period,
    pub months: u32,
    pub platforms: Vec<Platform>,
}

impl Grid {
    pub fn new(start: Period, months: u32, platforms: Vec<Platform>) -> Result<Self> {
        let g = Grid {
            start,
            months,
            platforms,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.months == 0 || self.platforms.is_empty() {
            return Err(Error::Config("grid must have at least one period and one platform".into()));
        }
        let mut p = self.platforms.clone();
        p.sort();
        p.dedup();
        if p.len() != self.platforms.len() {
            return Err(Error::Config("grid platforms must be distinct".into()));
        }
        Ok(())
    }

    /// n = T·P
    pub fn len(&self) -> usize {
        self.months as usize * self.platforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn end(&self) -> Period {
        self.start.offset(i64::from(self.months) - 1)
    }

    pub fn periods(&self) -> impl Iterator<Item = Period> + '_ {
        (0..i64::from(self.months)).map(move |m| self.start.offset(m))
    }

    /// All keys, period-major. Position in this order is the dataset index.
    pub fn keys(&self) -> Vec<SliceKey> {
        self.periods()
            .flat_map(|p| self.platforms.iter().map(move |&pl| SliceKey::new(p, pl)))
            .collect()
    }

    pub fn index_of(&self, key: &SliceKey) -> Option<usize> {
        let m = self.start.months_until(key.period);
        if m < 0 || m >= i64::from(self.months) {
            return None;
        }
        let pl = self.platforms.iter().position(|&p| p == key.platform)?;
        Some(m as usize * self.platforms.len() + pl)
    }

    pub fn contains(&self, key: &SliceKey) -> bool {
        self.index_of(key).is_some()
    }

    /// Slice for a timestamp/platform, or `None` when outside the collection
    /// window or on a platform not in the grid.
    pub fn route(&self, timestamp: i64, platform: Platform) -> Option<SliceKey> {
        let key = SliceKey::new(Period::from_timestamp(timestamp)?, platform);
        self.contains(&key).then_some(key)
    }
}

/// One ingested post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub text: String,
    pub timestamp: i64,
    pub platform: Platform,
    #[serde(default)]
    pub is_retweet: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<String>,
}

/// Reads newline-delimited JSON posts. Invalid UTF-8 is an error, never repaired.
pub fn read_posts<R: BufRead>(reader: R, source_name: &str) -> PostReader<R> {
    PostReader {
        reader,
        source_name: source_name.to_string(),
        line_no: 0,
        buf: Vec::new(),
    }
}

/// Iterator returned by [`read_posts`].
pub struct PostReader<R> {
    reader: R,
    source_name: String,
    line_no: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Iterator for PostReader<R> {
    type Item = Result<RawPost>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            let line = match std::str::from_utf8(&self.buf) {
                Ok(s) => s.trim(),
                Err(e) => {
                    return Some(Err(Error::parse(
                        &self.source_name,
                        self.line_no,
                        format!("invalid UTF-8: {e}"),
                    )))
                }
            };
            if line.is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str::<RawPost>(line)
                    .map_err(|e| Error::parse(&self.source_name, self.line_no, e.to_string())),
            );
        }
    }
}

/// Cleaned token stream of one admitted post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanDocument {
    pub tokens: Vec<Token>,
    pub slice: SliceKey,
}

impl CleanDocument {
    pub fn line(&self) -> String {
        join_tokens(&self.tokens)
    }
}

pub fn join_tokens(tokens: &[Token]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&t.surface);
    }
    s
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"https?://\S*").expect("valid regex"))
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[\p{L}\p{N}_]+").expect("valid regex"))
}

fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

fn is_word_char(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        UppercaseLetter
            | LowercaseLetter
            | TitlecaseLetter
            | ModifierLetter
            | OtherLetter
            | NonspacingMark
            | SpacingMark
            | EnclosingMark
            | DecimalNumber
            | LetterNumber
            | OtherNumber
    )
}

/// Text cleaning for posts.
///
/// Rules, in order: lower-case; drop `http(s)://` spans up to the next
/// whitespace; drop `@mentions`; pad every emoji sequence and every
/// punctuation character (general category `P*`) with spaces; replace any
/// other non-letter, non-mark, non-digit character (controls, symbols, lone
/// joiners) with a space; collapse whitespace and trim. ZWJ-joined sequences
/// stay contiguous.
#[derive(Debug, Clone, Copy)]
pub struct Normalizer<'a> {
    table: &'a EmojiTable,
}

impl Default for Normalizer<'static> {
    fn default() -> Self {
        Normalizer::new(EmojiTable::builtin())
    }
}

impl<'a> Normalizer<'a> {
    pub fn new(table: &'a EmojiTable) -> Self {
        Normalizer { table }
    }

    pub fn normalize(&self, text: &str) -> String {
        let lowered = text.to_lowercase();
        let no_urls = url_re().replace_all(&lowered, " ");
        let cleaned = mention_re().replace_all(&no_urls, " ");

        let cps: Vec<char> = cleaned.chars().collect();
        let mut padded = String::with_capacity(cleaned.len() + 16);
        let mut i = 0;
        while i < cps.len() {
            if let Some(m) = parse_emoji_sequence(self.table, &cps, i) {
                if m.degenerate != Some(Degenerate::LoneZwj) {
                    padded.push(' ');
                    padded.extend(&cps[i..m.end]);
                }
                padded.push(' ');
                i = m.end;
                continue;
            }
            let c = cps[i];
            if is_punctuation(c) {
                padded.push(' ');
                padded.push(c);
                padded.push(' ');
            } else if is_word_char(c) {
                padded.push(c);
            } else {
                padded.push(' ');
            }
            i += 1;
        }
        padded.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

/// [`Normalizer::normalize`] with the bundled emoji table.
pub fn normalize(text: &str) -> String {
    Normalizer::default().normalize(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Drop posts without any emoji token.
    pub require_emoji: bool,
    pub tokenizer: TokenizerOptions,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            require_emoji: true,
            tokenizer: TokenizerOptions::default(),
        }
    }
}

/// Cleans and tokenizes posts under one configuration.
#[derive(Debug, Clone, Copy)]
pub struct Cleaner<'a> {
    normalizer: Normalizer<'a>,
    tokenizer: Tokenizer<'a>,
    config: IngestConfig,
}

impl<'a> Cleaner<'a> {
    pub fn new(table: &'a EmojiTable, config: IngestConfig) -> Self {
        Cleaner {
            normalizer: Normalizer::new(table),
            tokenizer: Tokenizer::new(table, config.tokenizer),
            config,
        }
    }

    pub fn config(&self) -> &IngestConfig {
        &self.config
    }

    /// Tokens of an admissible post, `None` when the post is filtered out.
    pub fn clean(&self, post: &RawPost, diag: &mut Diagnostics) -> Option<Vec<Token>> {
        if post.is_retweet {
            return None;
        }
        let text = self.normalizer.normalize(&post.text);
        if text.is_empty() {
            return None;
        }
        let tokens = self.tokenizer.tokenize_with(&text, diag);
        if self.config.require_emoji && !tokens.iter().any(Token::is_emoji) {
            return None;
        }
        Some(tokens)
    }

    pub fn admit(&self, post: &RawPost) -> bool {
        self.clean(post, &mut Diagnostics::default()).is_some()
    }
}

/// Admission filter: false for retweets, posts whose normalized text is
/// empty and (when `require_emoji`) posts without emoji.
pub fn admit(post: &RawPost, config: &IngestConfig) -> bool {
    Cleaner::new(EmojiTable::builtin(), *config).admit(post)
}

/// Destination for partitioned documents.
pub trait SliceSink {
    fn write_document(&mut self, slice: &SliceKey, line: &str) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Keeps every slice in memory.
#[derive(Debug, Clone, Default)]
pub struct MemorySink {
    pub slices: BTreeMap<SliceKey, Vec<String>>,
}

impl SliceSink for MemorySink {
    fn write_document(&mut self, slice: &SliceKey, line: &str) -> Result<()> {
        self.slices.entry(*slice).or_default().push(line.to_string());
        Ok(())
    }
}

/// One `<slice>.txt` per slice under a directory, one document per line.
#[derive(Debug)]
pub struct DirectorySink {
    dir: PathBuf,
    writers: BTreeMap<SliceKey, BufWriter<File>>,
}

impl DirectorySink {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(DirectorySink {
            dir,
            writers: BTreeMap::new(),
        })
    }

    /// Creates empty files for every key so downstream stages see the full grid.
    pub fn touch_all(&mut self, keys: &[SliceKey]) -> Result<()> {
        for k in keys {
            self.writer(k)?;
        }
        Ok(())
    }

    fn writer(&mut self, slice: &SliceKey) -> Result<&mut BufWriter<File>> {
        if !self.writers.contains_key(slice) {
            let path = self.dir.join(slice.file_name());
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            self.writers.insert(*slice, BufWriter::new(f));
        }
        Ok(self.writers.get_mut(slice).expect("inserted above"))
    }
}

impl SliceSink for DirectorySink {
    fn write_document(&mut self, slice: &SliceKey, line: &str) -> Result<()> {
        let dir = self.dir.clone();
        let w = self.writer(slice)?;
        writeln!(w, "{line}").map_err(|e| Error::io(dir, e))
    }

    fn finish(&mut self) -> Result<()> {
        for w in self.writers.values_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCounts {
    pub documents: u64,
    pub tokens: u64,
    /// Posts dated in this slice that the admission filter rejected.
    pub skipped: u64,
}

/// Sidecar manifest for a partition run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub slices: BTreeMap<SliceKey, SliceCounts>,
    pub posts_read: u64,
    pub admitted: u64,
    pub rejected: u64,
    /// Admitted posts dated outside the grid.
    pub outside_grid: u64,
    pub diagnostics: Diagnostics,
}

impl PartitionManifest {
    pub fn documents(&self) -> u64 {
        self.slices.values().map(|c| c.documents).sum()
    }
}

/// Streams posts into slices.
pub struct Partitioner<'a, S: SliceSink> {
    grid: &'a Grid,
    cleaner: Cleaner<'a>,
    sink: S,
    manifest: PartitionManifest,
}

/// What happened to one post.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Routed {
    Written(SliceKey),
    Rejected,
    OutsideGrid,
}

impl<'a, S: SliceSink> Partitioner<'a, S> {
    pub fn new(grid: &'a Grid, cleaner: Cleaner<'a>, sink: S) -> Self {
        let slices = grid.keys().into_iter().map(|k| (k, SliceCounts::default())).collect();
        Partitioner {
            grid,
            cleaner,
            sink,
            manifest: PartitionManifest {
                slices,
                ..Default::default()
            },
        }
    }

    pub fn push(&mut self, post: &RawPost) -> Result<Routed> {
        self.manifest.posts_read += 1;
        let key = self.grid.route(post.timestamp, post.platform);
        let Some(tokens) = self.cleaner.clean(post, &mut self.manifest.diagnostics) else {
            self.manifest.rejected += 1;
            if let Some(k) = key {
                self.manifest.slices.entry(k).or_default().skipped += 1;
            }
            return Ok(Routed::Rejected);
        };
        self.manifest.admitted += 1;
        let Some(key) = key else {
            self.manifest.outside_grid += 1;
            return Ok(Routed::OutsideGrid);
        };
        self.sink.write_document(&key, &join_tokens(&tokens))?;
        let c = self.manifest.slices.entry(key).or_default();
        c.documents += 1;
        c.tokens += tokens.len() as u64;
        Ok(Routed::Written(key))
    }

    pub fn finish(mut self) -> Result<(S, PartitionManifest)> {
        self.sink.finish()?;
        Ok((self.sink, self.manifest))
    }
}

/// Partitions a whole post stream.
pub fn partition<I, S>(posts: I, grid: &Grid, config: &IngestConfig, sink: S) -> Result<(S, PartitionManifest)>
where
    I: IntoIterator<Item = RawPost>,
    S: SliceSink,
{
    grid.validate()?;
    let mut p = Partitioner::new(grid, Cleaner::new(EmojiTable::builtin(), *config), sink);
    for post in posts {
        p.push(&post)?;
    }
    p.finish()
}

/// Reads one slice file: one whitespace-tokenized document per line.
pub fn read_slice_file(path: &Path) -> Result<Vec<Vec<String>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| {
            Error::parse(path.display().to_string(), i + 1, e.to_string())
        })?;
        let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if !toks.is_empty() {
            docs.push(toks);
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(text: &str, ts: i64, platform: Platform, rt: bool) -> RawPost {
        RawPost {
            text: text.into(),
            timestamp: ts,
            platform,
            is_retweet: rt,
            user_id: None,
        }
    }

    // 2016-05-03T12:00:00Z
    const MAY_2016: i64 = 1_462_276_800;

    /// Applies the cleaning rules one at a time with simple string
    /// operations, without the shared scanner.
    fn reference_normalize(text: &str) -> String {
        let lowered = text.to_lowercase();
        let mut kept = Vec::new();
        for w in lowered.split_whitespace() {
            let w = match w.find("http://").or_else(|| w.find("https://")) {
                Some(i) => &w[..i],
                None => w,
            };
            kept.push(w.to_string());
        }
        let mut out = Vec::new();
        for w in kept {
            let mut cur = String::new();
            for c in w.chars() {
                if c == '!' || c == '.' {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                    out.push(c.to_string());
                } else if c == '\u{1F600}' {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                    out.push(c.to_string());
                } else {
                    cur.push(c);
                }
            }
            if !cur.is_empty() {
                out.push(cur);
            }
        }
        out.join(" ")
    }

    #[test]
    fn normalize_example() {
        let input = "Check http://x.co NOW!! \u{1F600}\u{1F600}";
        let expected = "check now ! ! \u{1F600} \u{1F600}";
        assert_eq!(normalize(input), expected);
        assert_eq!(reference_normalize(input), expected);
    }

    #[test]
    fn normalize_empty_and_zwj() {
        assert_eq!(normalize(""), "");
        let family = "\u{1F469}\u{200D}\u{1F469}\u{200D}\u{1F466}";
        assert_eq!(normalize(family), family);
    }

    #[test]
    fn normalize_mentions_specials_and_punct() {
        assert_eq!(normalize("@Bob hey, you\u{2192}me"), "hey , you me");
        assert_eq!(normalize("#ShotsFired \u{1F52B}"), "# shotsfired \u{1F52B}");
        assert_eq!(normalize("a\tb\u{0007}c"), "a b c");
        assert_eq!(normalize("lol\u{1F602}\u{1F602}ok"), "lol \u{1F602} \u{1F602} ok");
        assert_eq!(normalize("https://t.co/abc"), "");
        // lone joiner is dropped, joined sequence kept
        assert_eq!(normalize("x\u{200D}y"), "x y");
    }

    #[test]
    fn admit_rules() {
        let cfg = IngestConfig::default();
        assert!(!admit(&post("great \u{1F600}", MAY_2016, Platform::Ios, true), &cfg));
        assert!(!admit(&post("   ", MAY_2016, Platform::Ios, false), &cfg));
        assert!(admit(&post("hello \u{1F600}", MAY_2016, Platform::Ios, false), &cfg));
        assert!(!admit(&post("hello", MAY_2016, Platform::Ios, false), &cfg));
        let lax = IngestConfig {
            require_emoji: false,
            ..cfg
        };
        assert!(admit(&post("hello", MAY_2016, Platform::Ios, false), &lax));
    }

    #[test]
    fn routing_and_grid_size() {
        let start = Period::new(2016, 5).unwrap();
        let grid = Grid::new(start, 36, vec![Platform::Ios, Platform::Android, Platform::Web]).unwrap();
        assert_eq!(grid.len(), 108);
        assert_eq!(grid.end(), Period::new(2019, 4).unwrap());
        assert_eq!(
            grid.route(MAY_2016, Platform::Ios),
            Some(SliceKey::new(start, Platform::Ios))
        );
        assert_eq!(grid.route(MAY_2016, Platform::Other), None);
        assert_eq!(grid.index_of(&SliceKey::new(start.offset(1), Platform::Android)), Some(4));
    }

    #[test]
    fn partition_counts() {
        let grid = Grid::new(Period::new(2016, 5).unwrap(), 2, vec![Platform::Ios, Platform::Android]).unwrap();
        let posts = vec![
            post("a \u{1F600}", MAY_2016, Platform::Ios, false),
            post("b \u{1F600}", MAY_2016, Platform::Android, false),
            post("c \u{1F600}", MAY_2016, Platform::Android, true),
            post("d \u{1F600}", 0, Platform::Ios, false),
        ];
        let (sink, manifest) = partition(posts, &grid, &IngestConfig::default(), MemorySink::default()).unwrap();
        assert_eq!(sink.slices.len(), 2);
        assert_eq!(manifest.admitted, 3);
        assert_eq!(manifest.outside_grid, 1);
        assert_eq!(manifest.documents() + manifest.outside_grid, manifest.admitted);
        let android = SliceKey::new(Period::new(2016, 5).unwrap(), Platform::Android);
        assert_eq!(manifest.slices[&android].skipped, 1);
        assert_eq!(manifest.slices[&android].tokens, 2);
    }

    #[test]
    fn read_posts_rejects_invalid_utf8() {
        let mut data = br#"{"text":"ok","timestamp":1,"platform":"Web","is_retweet":false}"#.to_vec();
        data.push(b'\n');
        data.extend_from_slice(b"{\"text\":\"\xff\",\"timestamp\":1,\"platform\":\"Web\",\"is_retweet\":false}\n");
        let res: Vec<_> = read_posts(&data[..], "mem").collect();
        assert!(res[0].is_ok());
        assert!(matches!(res[1], Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn unknown_platform_maps_to_other() {
        let p: RawPost = serde_json::from_str(r#"{"text":"x","timestamp":5,"platform":"Blackberry","is_retweet":false}"#).unwrap();
        assert_eq!(p.platform, Platform::Other);
    }

    #[test]
    fn slice_key_text_forms() {
        let k: SliceKey = "2016-05/iOS".parse().unwrap();
        assert_eq!(k.file_name(), "2016-05_ios.txt");
        assert_eq!("2016-05_ios.txt".parse::<SliceKey>().unwrap(), k);
        assert!("2016-13/iOS".parse::<SliceKey>().is_err());
    }
}

//! Segmentation of normalized text into word and emoji tokens.
//!
//! Emoji-ness is driven by the Unicode `emoji-data.txt` property file shipped
//! in `data/` (or any file in the same format). A single emoji token is the
//! greedy longest match of
//!
//! ```text
//! ELEMENT := BASE (VS)? (SKIN_TONE)? (VS)? (TAG+ CANCEL_TAG)?
//! SEQ     := ELEMENT (ZWJ ELEMENT)*
//! FLAG    := REGIONAL_INDICATOR REGIONAL_INDICATOR
//! KEYCAP  := [0-9#*] (VS)? U+20E3
//! ```
//!
//! so ZWJ-joined, modifier-bearing, keycap and tag sequences all stay single
//! tokens while unjoined neighbours split.

use std::fmt;
use std::io::BufRead;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZWJ: char = '\u{200D}';
pub const VS15: char = '\u{FE0E}';
pub const VS16: char = '\u{FE0F}';
pub const KEYCAP: char = '\u{20E3}';
const CANCEL_TAG: char = '\u{E007F}';

const BUILTIN_EMOJI_DATA: &str = include_str!("../data/emoji-data.txt");

/// Properties read from `emoji-data.txt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmojiProperty {
    Emoji,
    EmojiPresentation,
    EmojiModifier,
    EmojiModifierBase,
    EmojiComponent,
    ExtendedPictographic,
}

impl EmojiProperty {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "Emoji" => Self::Emoji,
            "Emoji_Presentation" => Self::EmojiPresentation,
            "Emoji_Modifier" => Self::EmojiModifier,
            "Emoji_Modifier_Base" => Self::EmojiModifierBase,
            "Emoji_Component" => Self::EmojiComponent,
            "Extended_Pictographic" => Self::ExtendedPictographic,
            _ => return None,
        })
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Default)]
struct RangeSet(Vec<(u32, u32)>);

impl RangeSet {
    fn finish(&mut self) {
        self.0.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(self.0.len());
        for &(lo, hi) in &self.0 {
            match merged.last_mut() {
                Some(last) if lo <= last.1.saturating_add(1) => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        self.0 = merged;
    }

    fn contains(&self, c: u32) -> bool {
        self.0
            .binary_search_by(|&(lo, hi)| {
                if hi < c {
                    std::cmp::Ordering::Less
                } else if lo > c {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }
}

/// Codepoint property table.
#[derive(Debug, Clone)]
pub struct EmojiTable {
    props: [RangeSet; 6],
}

impl EmojiTable {
    /// The table compiled from the pinned `data/emoji-data.txt`.
    pub fn builtin() -> &'static EmojiTable {
        static TABLE: OnceLock<EmojiTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            EmojiTable::parse(BUILTIN_EMOJI_DATA.as_bytes(), "emoji-data.txt")
                .expect("bundled emoji-data.txt parses")
        })
    }

    /// Parses the semicolon-delimited `emoji-data.txt` format:
    /// `0023 ; Emoji # comment` or `1F600..1F64F ; Emoji_Presentation`.
    /// Unknown properties are ignored.
    pub fn parse<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut props: [RangeSet; 6] = Default::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut fields = body.split(';').map(str::trim);
            let cps = fields.next().unwrap_or("");
            let prop = fields
                .next()
                .ok_or_else(|| Error::parse(source_name, idx + 1, "missing property field"))?;
            let Some(prop) = EmojiProperty::from_name(prop) else {
                continue;
            };
            let (lo, hi) = parse_range(cps).ok_or_else(|| {
                Error::parse(source_name, idx + 1, format!("bad codepoint range `{cps}`"))
            })?;
            props[prop.slot()].0.push((lo, hi));
        }
        if props.iter().all(|p| p.0.is_empty()) {
            return Err(Error::parse(source_name, 0, "no emoji properties found"));
        }
        for p in &mut props {
            p.finish();
        }
        Ok(EmojiTable { props })
    }

    pub fn has(&self, c: char, prop: EmojiProperty) -> bool {
        self.props[prop.slot()].contains(c as u32)
    }

    /// A codepoint that can start (or follow a ZWJ in) an emoji sequence.
    pub fn is_base(&self, c: char) -> bool {
        if is_regional_indicator(c) || self.is_modifier(c) {
            return false;
        }
        self.has(c, EmojiProperty::ExtendedPictographic)
            || self.has(c, EmojiProperty::EmojiPresentation)
    }

    pub fn is_modifier(&self, c: char) -> bool {
        self.has(c, EmojiProperty::EmojiModifier)
    }

    /// `0-9`, `#` and `*`: emoji only as the first element of a keycap.
    pub fn is_keycap_base(&self, c: char) -> bool {
        c.is_ascii() && self.has(c, EmojiProperty::EmojiComponent) && self.has(c, EmojiProperty::Emoji)
    }

    /// True for any codepoint that may only appear inside emoji tokens.
    pub fn is_emoji_codepoint(&self, c: char) -> bool {
        self.is_base(c) || self.is_modifier(c) || is_regional_indicator(c)
    }
}

fn parse_range(s: &str) -> Option<(u32, u32)> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let lo = u32::from_str_radix(lo.trim(), 16).ok()?;
    let hi = u32::from_str_radix(hi.trim(), 16).ok()?;
    (lo <= hi).then_some((lo, hi))
}

pub fn is_regional_indicator(c: char) -> bool {
    ('\u{1F1E6}'..='\u{1F1FF}').contains(&c)
}

fn is_tag(c: char) -> bool {
    ('\u{E0020}'..='\u{E007E}').contains(&c)
}

fn is_variation_selector(c: char) -> bool {
    c == VS16 || c == VS15
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Emoji,
}

/// Atomic vocabulary unit. Emoji are keyed by their full codepoint sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub surface: String,
}

impl Token {
    pub fn word(s: impl Into<String>) -> Self {
        Token {
            kind: TokenKind::Word,
            surface: s.into(),
        }
    }

    pub fn emoji(s: impl Into<String>) -> Self {
        Token {
            kind: TokenKind::Emoji,
            surface: s.into(),
        }
    }

    pub fn is_emoji(&self) -> bool {
        self.kind == TokenKind::Emoji
    }

    /// Codepoints as `U+XXXX` labels, joined by spaces.
    pub fn codepoints(&self) -> String {
        self.surface
            .chars()
            .map(|c| format!("U+{:04X}", c as u32))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

/// Why a parsed sequence is not a well-formed emoji.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degenerate {
    LoneZwj,
    LoneModifier,
    UnpairedRegionalIndicator,
}

/// Result of [`parse_emoji_sequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmojiMatch {
    /// One past the last consumed codepoint.
    pub end: usize,
    pub degenerate: Option<Degenerate>,
}

/// Counters for malformed sequences met while tokenizing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub emoji_tokens: u64,
    pub word_tokens: u64,
    pub lone_zwj: u64,
    pub lone_modifier: u64,
    pub unpaired_regional_indicator: u64,
}

impl Diagnostics {
    pub fn degenerate(&self) -> u64 {
        self.lone_zwj + self.lone_modifier + self.unpaired_regional_indicator
    }

    pub fn merge(&mut self, other: &Diagnostics) {
        self.emoji_tokens += other.emoji_tokens;
        self.word_tokens += other.word_tokens;
        self.lone_zwj += other.lone_zwj;
        self.lone_modifier += other.lone_modifier;
        self.unpaired_regional_indicator += other.unpaired_regional_indicator;
    }

    fn record(&mut self, d: Degenerate) {
        match d {
            Degenerate::LoneZwj => self.lone_zwj += 1,
            Degenerate::LoneModifier => self.lone_modifier += 1,
            Degenerate::UnpairedRegionalIndicator => self.unpaired_regional_indicator += 1,
        }
    }
}

/// Greedy longest match of an emoji sequence starting at `pos`.
///
/// Returns `None` when the codepoint at `pos` cannot start an emoji (plain
/// letters, digits without a keycap mark, punctuation...).
pub fn parse_emoji_sequence(table: &EmojiTable, cps: &[char], pos: usize) -> Option<EmojiMatch> {
    let c = *cps.get(pos)?;
    let ok = |end| {
        Some(EmojiMatch {
            end,
            degenerate: None,
        })
    };

    if is_regional_indicator(c) {
        return match cps.get(pos + 1) {
            Some(&n) if is_regional_indicator(n) => ok(pos + 2),
            _ => Some(EmojiMatch {
                end: pos + 1,
                degenerate: Some(Degenerate::UnpairedRegionalIndicator),
            }),
        };
    }

    if table.is_keycap_base(c) {
        let mut i = pos + 1;
        if cps.get(i).copied().is_some_and(is_variation_selector) {
            i += 1;
        }
        return (cps.get(i) == Some(&KEYCAP)).then_some(EmojiMatch {
            end: i + 1,
            degenerate: None,
        });
    }

    if c == ZWJ {
        return Some(EmojiMatch {
            end: pos + 1,
            degenerate: Some(Degenerate::LoneZwj),
        });
    }

    if table.is_modifier(c) {
        let mut end = pos + 1;
        if cps.get(end).copied().is_some_and(is_variation_selector) {
            end += 1;
        }
        return Some(EmojiMatch {
            end,
            degenerate: Some(Degenerate::LoneModifier),
        });
    }

    if !table.is_base(c) {
        return None;
    }

    let mut i = element_end(table, cps, pos);
    while cps.get(i) == Some(&ZWJ) && cps.get(i + 1).is_some_and(|&n| table.is_base(n)) {
        i = element_end(table, cps, i + 1);
    }
    ok(i)
}

/// End of `BASE (VS)? (SKIN_TONE)? (VS)? (TAG+ CANCEL)?` starting at `pos`.
fn element_end(table: &EmojiTable, cps: &[char], pos: usize) -> usize {
    let mut i = pos + 1;
    if cps.get(i).copied().is_some_and(is_variation_selector) {
        i += 1;
    }
    if cps.get(i).is_some_and(|&m| table.is_modifier(m)) {
        i += 1;
        if cps.get(i).copied().is_some_and(is_variation_selector) {
            i += 1;
        }
    }
    let mut j = i;
    while cps.get(j).copied().is_some_and(is_tag) {
        j += 1;
    }
    if j > i && cps.get(j) == Some(&CANCEL_TAG) {
        i = j + 1;
    }
    i
}

/// Tokenizer options.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerOptions {
    /// Strip skin-tone modifiers so toned variants share the base token.
    pub collapse_skin_tones: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Tokenizer<'a> {
    table: &'a EmojiTable,
    options: TokenizerOptions,
}

impl Default for Tokenizer<'static> {
    fn default() -> Self {
        Tokenizer::new(EmojiTable::builtin(), TokenizerOptions::default())
    }
}

impl<'a> Tokenizer<'a> {
    pub fn new(table: &'a EmojiTable, options: TokenizerOptions) -> Self {
        Tokenizer { table, options }
    }

    pub fn table(&self) -> &'a EmojiTable {
        self.table
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let mut diag = Diagnostics::default();
        self.tokenize_with(text, &mut diag)
    }

    /// Splits on whitespace, then carves emoji sequences out of each chunk.
    /// Malformed sequences become degenerate emoji tokens and are tallied in
    /// `diag`.
    pub fn tokenize_with(&self, text: &str, diag: &mut Diagnostics) -> Vec<Token> {
        let mut out = Vec::new();
        let mut cps: Vec<char> = Vec::new();
        for chunk in text.split_whitespace() {
            cps.clear();
            cps.extend(chunk.chars());
            let mut word_start = 0;
            let mut i = 0;
            while i < cps.len() {
                match parse_emoji_sequence(self.table, &cps, i) {
                    Some(m) => {
                        if word_start < i {
                            out.push(Token::word(cps[word_start..i].iter().collect::<String>()));
                            diag.word_tokens += 1;
                        }
                        if let Some(d) = m.degenerate {
                            diag.record(d);
                        }
                        out.push(Token::emoji(self.emoji_surface(&cps[i..m.end])));
                        diag.emoji_tokens += 1;
                        i = m.end;
                        word_start = i;
                    }
                    None => i += 1,
                }
            }
            if word_start < cps.len() {
                out.push(Token::word(cps[word_start..].iter().collect::<String>()));
                diag.word_tokens += 1;
            }
        }
        out
    }

    fn emoji_surface(&self, cps: &[char]) -> String {
        if self.options.collapse_skin_tones {
            let kept: String = cps.iter().filter(|&&c| !self.table.is_modifier(c)).collect();
            if !kept.is_empty() {
                return kept;
            }
        }
        cps.iter().collect()
    }
}

/// Tokenizes with the bundled table and default options.
pub fn tokenize(text: &str) -> Vec<Token> {
    Tokenizer::default().tokenize(text)
}

/// One entry of `emoji-test.txt`: codepoints plus qualification status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmojiTestEntry {
    pub sequence: String,
    pub status: String,
    pub line: usize,
}

/// Parses the `emoji-test.txt` sequence list (`1F469 200D 1F466 ; fully-qualified # ...`).
pub fn parse_emoji_test<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<EmojiTestEntry>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (cps, status) = body
            .split_once(';')
            .ok_or_else(|| Error::parse(source_name, idx + 1, "missing `;`"))?;
        let sequence = cps
            .split_whitespace()
            .map(|h| {
                u32::from_str_radix(h, 16)
                    .ok()
                    .and_then(char::from_u32)
                    .ok_or_else(|| Error::parse(source_name, idx + 1, format!("bad codepoint `{h}`")))
            })
            .collect::<Result<String>>()?;
        out.push(EmojiTestEntry {
            sequence,
            status: status.trim().to_string(),
            line: idx + 1,
        });
    }
    Ok(out)
}

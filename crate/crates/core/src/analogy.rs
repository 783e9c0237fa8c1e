//! Analogy sanity checks for trained slice models.
//!
//! An item `a b c expected` asks whether `vec(c) - vec(a) + vec(b)` lands
//! closest (by cosine) to `expected`, with `a`, `b` and `c` themselves
//! excluded from the ranking.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EmbeddingModel;
use crate::scalar::Real;

/// Curated word and emoji analogies bundled with the crate.
pub const BUILTIN_SUITE: &str = include_str!("../data/analogies.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyItem {
    pub a: String,
    pub b: String,
    pub c: String,
    pub expected: String,
    pub category: String,
}

impl AnalogyItem {
    pub fn new(a: &str, b: &str, c: &str, expected: &str, category: &str) -> Self {
        AnalogyItem {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            expected: expected.into(),
            category: category.into(),
        }
    }

    fn surfaces(&self) -> [&str; 4] {
        [&self.a, &self.b, &self.c, &self.expected]
    }
}

/// Reads `a b c expected category` lines; `#` starts a comment.
pub fn parse_suite<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<AnalogyItem>> {
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::parse(
                source_name,
                i + 1,
                format!("expected `a b c expected category`, found {} fields", f.len()),
            ));
        }
        let item = AnalogyItem::new(f[0], f[1], f[2], f[3], f[4]);
        let s = item.surfaces();
        if (0..4).any(|x| (x + 1..4).any(|y| s[x] == s[y])) {
            return Err(Error::parse(source_name, i + 1, "the four surfaces must be distinct"));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn builtin_suite() -> Vec<AnalogyItem> {
    parse_suite(BUILTIN_SUITE.as_bytes(), "builtin analogies").expect("bundled suite parses")
}

/// Precomputed unit rows for repeated queries against one model.
pub struct AnalogyIndex<'m, T> {
    model: &'m EmbeddingModel<T>,
    unit: Vec<f64>,
    norms: Vec<f64>,
}

impl<'m, T: Real> AnalogyIndex<'m, T> {
    pub fn new(model: &'m EmbeddingModel<T>) -> Self {
        let dim = model.dim();
        let mut unit = Vec::with_capacity(model.len() * dim);
        let mut norms = Vec::with_capacity(model.len());
        for row in model.rows() {
            let n = row.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>().sqrt();
            norms.push(n);
            let inv = if n > 0.0 { 1.0 / n } else { 0.0 };
            unit.extend(row.iter().map(|x| x.as_f64() * inv));
        }
        AnalogyIndex { model, unit, norms }
    }

    /// Ranks every token by cosine to `vec(c) - vec(a) + vec(b)`.
    /// Ties are broken by vocabulary id.
    pub fn query(&self, a: &str, b: &str, c: &str, top_k: usize, exclude_inputs: bool) -> Result<Vec<(String, f64)>> {
        let ids = [self.model.require(a)?, self.model.require(b)?, self.model.require(c)?];
        let (va, vb, vc) = (self.model.vector(ids[0]), self.model.vector(ids[1]), self.model.vector(ids[2]));
        let q: Vec<f64> = (0..self.model.dim())
            .map(|k| vc[k].as_f64() - va[k].as_f64() + vb[k].as_f64())
            .collect();
        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if qn == 0.0 {
            return Err(Error::ZeroVector(format!("{c} - {a} + {b}")));
        }
        let dim = self.model.dim();
        let mut scored: Vec<(usize, f64)> = (0..self.model.len())
            .filter(|id| !(exclude_inputs && ids.contains(id)) && self.norms[*id] > 0.0)
            .map(|id| {
                let u = &self.unit[id * dim..(id + 1) * dim];
                (id, u.iter().zip(&q).map(|(x, y)| x * y).sum::<f64>() / qn)
            })
            .collect();
        scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        scored.truncate(top_k);
        Ok(scored
            .into_iter()
            .map(|(id, s)| (self.model.token(id).to_string(), s))
            .collect())
    }
}

/// Top `top_k` tokens for `vec(c) - vec(a) + vec(b)`, excluding `a`, `b`, `c`.
pub fn analogy<T: Real>(model: &EmbeddingModel<T>, a: &str, b: &str, c: &str, top_k: usize) -> Result<Vec<(String, f64)>> {
    AnalogyIndex::new(model).query(a, b, c, top_k, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Accepted,
    Rejected,
    /// No item could be scored, so the gate was not applied.
    Untested,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub top_k: usize,
    /// Minimum hits@top_k rate over scored items.
    pub min_hit_rate: f64,
}

impl Default for Gate {
    fn default() -> Self {
        Gate {
            top_k: 10,
            min_hit_rate: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub item: AnalogyItem,
    /// 1-based rank of `expected`, if within `top_k`.
    pub rank: Option<usize>,
    pub top: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub scored: usize,
    pub skipped: usize,
    pub hits_at_1: usize,
    pub hits_at_k: usize,
    pub top_k: usize,
    pub hit_rate_at_1: Option<f64>,
    pub hit_rate_at_k: Option<f64>,
    pub gate: Gate,
    pub verdict: Verdict,
    pub items: Vec<ItemResult>,
}

/// Scores every item whose four surfaces are in the model; the rest are
/// skipped, never failed.
pub fn run_suite<T: Real>(model: &EmbeddingModel<T>, items: &[AnalogyItem], gate: Gate) -> Result<SuiteReport> {
    if items.is_empty() {
        return Err(Error::EmptySuite);
    }
    if gate.top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    let index = AnalogyIndex::new(model);
    let (mut scored, mut skipped, mut h1, mut hk) = (0, 0, 0, 0);
    let mut results = Vec::with_capacity(items.len());
    for item in items {
        if item.surfaces().iter().any(|s| model.id(s).is_none()) {
            skipped += 1;
            results.push(ItemResult {
                item: item.clone(),
                rank: None,
                top: None,
            });
            continue;
        }
        let ranked = match index.query(&item.a, &item.b, &item.c, gate.top_k, true) {
            Ok(r) => r,
            // a zero query vector cannot rank anything; count it as a miss
            Err(Error::ZeroVector(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        scored += 1;
        let rank = ranked.iter().position(|(t, _)| *t == item.expected).map(|p| p + 1);
        if rank == Some(1) {
            h1 += 1;
        }
        if rank.is_some() {
            hk += 1;
        }
        results.push(ItemResult {
            item: item.clone(),
            rank,
            top: ranked.first().map(|(t, _)| t.clone()),
        });
    }
    let rate = |h: usize| (scored > 0).then(|| h as f64 / scored as f64);
    let verdict = match rate(hk) {
        None => Verdict::Untested,
        Some(r) if r < gate.min_hit_rate => Verdict::Rejected,
        Some(_) => Verdict::Accepted,
    };
    Ok(SuiteReport {
        scored,
        skipped,
        hits_at_1: h1,
        hits_at_k: hk,
        top_k: gate.top_k,
        hit_rate_at_1: rate(h1),
        hit_rate_at_k: rate(hk),
        gate,
        verdict,
        items: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tokens `x_i` and `y_i` with `y_i = x_i + offset`, all mutually
    /// well separated, so every `x_i : y_i :: x_j : y_j` holds exactly.
    fn offset_model(pairs: usize) -> (EmbeddingModel<f64>, Vec<AnalogyItem>) {
        let dim = pairs + 1;
        let mut tokens = Vec::new();
        let mut rows = Vec::new();
        for i in 0..pairs {
            let mut x = vec![0.0; dim];
            x[i] = 1.0;
            let mut y = x.clone();
            y[pairs] = 1.0;
            tokens.push(format!("x{i}"));
            rows.push(x);
            tokens.push(format!("y{i}"));
            rows.push(y);
        }
        let items = (0..pairs)
            .map(|i| {
                let j = (i + 1) % pairs;
                AnalogyItem::new(&format!("x{i}"), &format!("y{i}"), &format!("x{j}"), &format!("y{j}"), "word")
            })
            .collect();
        (EmbeddingModel::from_rows(tokens, &rows).unwrap(), items)
    }

    #[test]
    fn builtin_suite_parses() {
        let s = builtin_suite();
        assert!(s.iter().any(|i| i.a == "man" && i.b == "woman" && i.c == "king" && i.expected == "queen"));
        assert!(s.iter().any(|i| i.c == "\u{1F451}" && i.expected == "\u{1F478}"));
    }

    #[test]
    fn parse_errors() {
        assert!(parse_suite("a b c\n".as_bytes(), "s").is_err());
        assert!(parse_suite("a b a d word\n".as_bytes(), "s").is_err());
        assert_eq!(parse_suite("# only\n\n a b c d word # x\n".as_bytes(), "s").unwrap().len(), 1);
    }

    #[test]
    fn exact_offset_suite_hits_everything() {
        let (m, items) = offset_model(10);
        let r = run_suite(&m, &items, Gate { top_k: 1, min_hit_rate: 1.0 }).unwrap();
        assert_eq!((r.scored, r.hits_at_1), (10, 10));
        assert_eq!(r.verdict, Verdict::Accepted);
        // brute force: the expected token is the argmax over all non-input ids
        for item in &items {
            let q: Vec<f64> = (0..m.dim())
                .map(|k| m.vector_of(&item.c).unwrap()[k] - m.vector_of(&item.a).unwrap()[k] + m.vector_of(&item.b).unwrap()[k])
                .collect();
            let mut best = (f64::NEG_INFINITY, String::new());
            for t in m.tokens() {
                if [&item.a, &item.b, &item.c].contains(&t) {
                    continue;
                }
                let c = crate::scalar::cosine(&q, m.vector_of(t).unwrap()).unwrap();
                if c > best.0 {
                    best = (c, t.clone());
                }
            }
            assert_eq!(best.1, item.expected);
        }
    }

    #[test]
    fn king_queen() {
        let rows = vec![
            vec![1.0, 1.0, 0.0],  // king
            vec![1.0, -1.0, 0.0], // queen
            vec![0.0, 1.0, 0.1],  // man
            vec![0.0, -1.0, 0.1], // woman
            vec![0.2, 0.0, 1.0],  // apple
        ];
        let toks = ["king", "queen", "man", "woman", "apple"].map(String::from).to_vec();
        let m = EmbeddingModel::from_rows(toks, &rows).unwrap();
        let r = analogy(&m, "man", "woman", "king", 3).unwrap();
        assert_eq!(r[0].0, "queen");
        assert!(r.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(r.iter().all(|(t, _)| t != "man" && t != "woman" && t != "king"));
        assert!(matches!(analogy(&m, "man", "woman", "prince", 3), Err(Error::UnknownToken(t)) if t == "prince"));

        // a == b without exclusion returns c itself first
        let top = AnalogyIndex::new(&m).query("man", "man", "apple", 1, false).unwrap();
        assert_eq!(top[0].0, "apple");
    }

    #[test]
    fn skipped_items_and_untested_verdict() {
        let (m, _) = offset_model(3);
        let items = vec![AnalogyItem::new("x0", "y0", "zz", "y1", "word")];
        let r = run_suite(&m, &items, Gate::default()).unwrap();
        assert_eq!((r.scored, r.skipped), (0, 1));
        assert_eq!(r.verdict, Verdict::Untested);
        assert!(matches!(run_suite(&m, &[], Gate::default()), Err(Error::EmptySuite)));
    }

    #[test]
    fn duplicates_count_twice_and_scaling_is_irrelevant() {
        let (m, items) = offset_model(4);
        let doubled: Vec<AnalogyItem> = items.iter().chain(items.iter()).cloned().collect();
        let r = run_suite(&m, &doubled, Gate::default()).unwrap();
        assert_eq!(r.scored, 8);
        assert_eq!(r.hits_at_1, 8);

        let scaled = m.map_rows(|r| r.iter().map(|x| x * 7.5).collect()).unwrap();
        let a = analogy(&m, "x0", "y0", "x1", 8).unwrap();
        let b = analogy(&scaled, "x0", "y0", "x1", 8).unwrap();
        let names = |v: &[(String, f64)]| v.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
        assert_eq!(names(&a), names(&b));
    }

    #[test]
    fn rejected_below_gate() {
        let (m, mut items) = offset_model(4);
        for it in &mut items {
            std::mem::swap(&mut it.expected, &mut it.c);
            it.expected = "x0".into();
        }
        items.retain(|i| i.surfaces().iter().collect::<std::collections::BTreeSet<_>>().len() == 4);
        let r = run_suite(&m, &items, Gate { top_k: 1, min_hit_rate: 1.0 }).unwrap();
        assert!(r.scored > 0);
        assert_eq!(r.verdict, Verdict::Rejected);
    }
}

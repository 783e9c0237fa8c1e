//! Vocabulary shared by every slice model.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel id for out-of-vocabulary positions in an encoded corpus.
pub const OOV: u32 = u32::MAX;

/// Raw token counts of one slice corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SliceCounts {
    pub name: String,
    pub counts: HashMap<String, u64>,
}

impl SliceCounts {
    pub fn from_documents<D, S>(name: impl Into<String>, docs: D) -> Self
    where
        D: IntoIterator,
        D::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for doc in docs {
            for tok in doc {
                let tok = tok.as_ref();
                if let Some(c) = counts.get_mut(tok) {
                    *c += 1;
                } else {
                    counts.insert(tok.to_string(), 1);
                }
            }
        }
        SliceCounts {
            name: name.into(),
            counts,
        }
    }
}

/// Tokens present at least `min_count` times in every slice.
///
/// Ids are dense, ordered by descending total frequency with ties broken by
/// surface, so they are stable for a given set of corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedVocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    slice_names: Vec<String>,
    /// `frequencies[s][id]`: count of token `id` in slice `s`.
    frequencies: Vec<Vec<u64>>,
    min_count: u64,
}

impl SharedVocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn slice_names(&self) -> &[String] {
        &self.slice_names
    }

    pub fn slice_position(&self, name: &str) -> Option<usize> {
        self.slice_names.iter().position(|n| n == name)
    }

    /// Per-id counts for slice `s`.
    pub fn frequencies(&self, s: usize) -> &[u64] {
        &self.frequencies[s]
    }

    /// Maps documents to ids; unknown tokens become [`OOV`].
    pub fn encode<D, S>(&self, docs: D) -> Vec<Vec<u32>>
    where
        D: IntoIterator,
        D::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        docs.into_iter()
            .map(|d| d.into_iter().map(|t| self.id(t.as_ref()).unwrap_or(OOV)).collect())
            .collect()
    }

    /// Restores the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }
}

/// Builds the intersection vocabulary.
pub fn build_vocab(slices: &[SliceCounts], min_count: u64) -> Result<SharedVocabulary> {
    if slices.is_empty() {
        return Err(Error::InvalidArgument("at least one slice is required".into()));
    }
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be at least 1".into()));
    }

    let mut smallest = 0;
    for (i, s) in slices.iter().enumerate() {
        if s.counts.len() < slices[smallest].counts.len() {
            smallest = i;
        }
    }
    let mut shared: BTreeMap<&str, u64> = BTreeMap::new();
    'outer: for (tok, &c0) in &slices[smallest].counts {
        if c0 < min_count {
            continue;
        }
        let mut total = 0u64;
        for s in slices {
            match s.counts.get(tok) {
                Some(&c) if c >= min_count => total += c,
                _ => continue 'outer,
            }
        }
        shared.insert(tok.as_str(), total);
    }

    if shared.is_empty() {
        let mut sparsest: Vec<(String, usize)> = slices
            .iter()
            .map(|s| (s.name.clone(), s.counts.values().filter(|&&c| c >= min_count).count()))
            .collect();
        sparsest.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        sparsest.truncate(3);
        return Err(Error::EmptyVocabulary { sparsest });
    }

    let mut ordered: Vec<(&str, u64)> = shared.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens: Vec<String> = ordered.iter().map(|(t, _)| t.to_string()).collect();
    let frequencies = slices
        .iter()
        .map(|s| tokens.iter().map(|t| s.counts[t]).collect())
        .collect();

    let mut v = SharedVocabulary {
        tokens,
        index: HashMap::new(),
        slice_names: slices.iter().map(|s| s.name.clone()).collect(),
        frequencies,
        min_count,
    };
    v.reindex();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn counts(name: &str, pairs: &[(&str, u64)]) -> SliceCounts {
        SliceCounts {
            name: name.into(),
            counts: pairs.iter().map(|&(t, c)| (t.to_string(), c)).collect(),
        }
    }

    #[test]
    fn token_missing_from_one_slice_is_excluded() {
        let mut slices: Vec<SliceCounts> = (0..36).map(|i| counts(&format!("s{i}"), &[("a", 9), ("b", 9)])).collect();
        slices[17].counts.remove("b");
        let v = build_vocab(&slices, 5).unwrap();
        assert_eq!(v.tokens(), ["a"]);
    }

    #[test]
    fn identical_slices_keep_everything_at_min_count_one() {
        let s = counts("x", &[("a", 1), ("b", 3), ("c", 2)]);
        let v = build_vocab(&[s.clone(), SliceCounts { name: "y".into(), ..s }], 1).unwrap();
        assert_eq!(v.tokens(), ["b", "c", "a"]);
        assert_eq!(v.id("c"), Some(1));
        assert_eq!(v.frequencies(1), &[3, 2, 1]);
    }

    #[test]
    fn matches_brute_force_intersection() {
        let a = SliceCounts::from_documents("a", [vec!["x", "y", "x", "z"], vec!["y", "y", "w"]]);
        let b = SliceCounts::from_documents("b", [vec!["x", "x", "y"], vec!["z", "y", "y", "w", "w"]]);
        let min = 2;
        // oracle: scan every surface of both corpora
        let mut expected = BTreeSet::new();
        for t in a.counts.keys().chain(b.counts.keys()) {
            let ca = a.counts.get(t).copied().unwrap_or(0);
            let cb = b.counts.get(t).copied().unwrap_or(0);
            if ca >= min && cb >= min {
                expected.insert(t.clone());
            }
        }
        let v = build_vocab(&[a, b], min).unwrap();
        let got: BTreeSet<String> = v.tokens().iter().cloned().collect();
        assert_eq!(got, expected);
        assert_eq!(got, BTreeSet::from(["x".to_string(), "y".to_string()]));
    }

    #[test]
    fn empty_intersection_names_sparsest_slices() {
        let err = build_vocab(&[counts("jan", &[("a", 5)]), counts("feb", &[("b", 5)])], 1).unwrap_err();
        match err {
            Error::EmptyVocabulary { sparsest } => assert_eq!(sparsest.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_vocab(&[], 1).is_err());
        assert!(build_vocab(&[counts("a", &[("a", 1)])], 0).is_err());
    }

    #[test]
    fn encode_marks_oov() {
        let v = build_vocab(&[counts("a", &[("a", 1)])], 1).unwrap();
        assert_eq!(v.encode([vec!["a", "zz"]]), vec![vec![0, OOV]]);
    }
}

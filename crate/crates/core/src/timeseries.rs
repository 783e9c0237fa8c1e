//! Similarity trajectories across slices and neighborhood statistics.

use serde::{Deserialize, Serialize};

use crate::corpus::SliceKey;
use crate::drift::csv_field;
use crate::error::{Error, Result};
use crate::model::EmbeddingModel;
use crate::scalar::Real;

/// One slice model in a series. `accepted = false` (e.g. rejected by the
/// analogy gate) turns its point into a gap.
#[derive(Debug, Clone, Copy)]
pub struct SliceModel<'a, T> {
    pub key: SliceKey,
    pub model: &'a EmbeddingModel<T>,
    pub accepted: bool,
}

impl<'a, T> SliceModel<'a, T> {
    pub fn new(key: SliceKey, model: &'a EmbeddingModel<T>) -> Self {
        SliceModel {
            key,
            model,
            accepted: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub slice: SliceKey,
    /// `None` marks a gap.
    pub similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySeries {
    pub pair: (String, String),
    pub points: Vec<SeriesPoint>,
}

impl SimilaritySeries {
    /// `(months since the first point, similarity)` for every non-gap point.
    pub fn observed(&self) -> Vec<(f64, f64)> {
        let Some(first) = self.points.first() else {
            return Vec::new();
        };
        let origin = first.slice.period;
        self.points
            .iter()
            .filter_map(|p| p.similarity.map(|s| (origin.months_until(p.slice.period) as f64, s)))
            .collect()
    }

    /// `slice,period,platform,similarity` rows; gaps leave the last field empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("slice,period,platform,similarity\n");
        for p in &self.points {
            let v = p.similarity.map(|x| x.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{}\n",
                csv_field(&p.slice.to_string()),
                p.slice.period,
                p.slice.platform,
                v
            ));
        }
        s
    }
}

fn unit<T: Real>(m: &EmbeddingModel<T>, id: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = m.vector(id).iter().map(|x| x.as_f64()).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::ZeroVector(m.token(id).to_string()));
    }
    Ok(v.into_iter().map(|x| x / n).collect())
}

fn cos_unit(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
}

/// Cosine similarity of `a` and `b` in every model, ordered by slice.
pub fn similarity_series<T: Real>(models: &[SliceModel<'_, T>], a: &str, b: &str) -> Result<SimilaritySeries> {
    let mut ordered: Vec<&SliceModel<'_, T>> = models.iter().collect();
    ordered.sort_by_key(|m| m.key);
    let mut points = Vec::with_capacity(ordered.len());
    for m in ordered {
        let (ia, ib) = (m.model.require(a)?, m.model.require(b)?);
        let similarity = if !m.accepted {
            None
        } else if a == b {
            Some(1.0)
        } else {
            Some(cos_unit(&unit(m.model, ia)?, &unit(m.model, ib)?))
        };
        points.push(SeriesPoint {
            slice: m.key,
            similarity,
        });
    }
    Ok(SimilaritySeries {
        pair: (a.to_string(), b.to_string()),
        points,
    })
}

/// Ordinary least squares line through `(t, y)`, `t` in months.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    /// 0 by convention when the series has no variance.
    pub r_squared: f64,
    pub n: usize,
}

impl TrendFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Closed-form OLS on raw `(t, y)` points.
pub fn fit_points(points: &[(f64, f64)]) -> Result<TrendFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, found: n });
    }
    // Shifting by the first point keeps a constant series exactly constant
    // (every deviation is 0.0), so its slope comes out as exactly zero.
    let (t0, y0) = points[0];
    let nf = n as f64;
    let tm = points.iter().map(|p| p.0 - t0).sum::<f64>() / nf;
    let ym = points.iter().map(|p| p.1 - y0).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in points {
        let dt = (t - t0) - tm;
        let dy = (y - y0) - ym;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all time stamps are identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = (y0 + ym) - slope * (t0 + tm);
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(TrendFit {
        slope,
        intercept,
        r_squared,
        n,
    })
}

/// OLS trend over the non-gap points, time measured in months from the
/// first slice.
pub fn linear_trend(series: &SimilaritySeries) -> Result<TrendFit> {
    fit_points(&series.observed())
}

/// `k` nearest neighbors of `id` by cosine similarity, excluding `id`;
/// ties go to the lower id.
pub fn nearest_neighbors<T: Real>(m: &EmbeddingModel<T>, id: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    check_k(m, k)?;
    let q = unit(m, id)?;
    let mut sims = Vec::with_capacity(m.len() - 1);
    for other in 0..m.len() {
        if other != id {
            sims.push((other, cos_unit(&q, &unit(m, other)?)));
        }
    }
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    sims.truncate(k);
    Ok(sims)
}

fn check_k<T: Real>(m: &EmbeddingModel<T>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k >= m.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must be smaller than the vocabulary ({})",
            m.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohesiveness {
    pub token: String,
    pub k: usize,
    pub neighbors: Vec<String>,
    /// Cosine distance from the token to the mean of its neighbors' unit vectors.
    pub centroid_dist: f64,
    /// Mean cosine distance from the token to its neighbors.
    pub knn_mean_dist: f64,
    /// Mean cosine distance over neighbor pairs; absent for `k = 1`.
    pub knn_pairwise_mean_dist: Option<f64>,
}

pub fn cohesiveness<T: Real>(m: &EmbeddingModel<T>, token: &str, k: usize) -> Result<Cohesiveness> {
    let id = m.require(token)?;
    let nn = nearest_neighbors(m, id, k)?;
    let knn_mean_dist = nn.iter().map(|(_, s)| 1.0 - s).sum::<f64>() / k as f64;
    let units: Vec<Vec<f64>> = nn.iter().map(|(j, _)| unit(m, *j)).collect::<Result<_>>()?;

    let knn_pairwise_mean_dist = (k > 1).then(|| {
        let mut total = 0.0;
        for x in 0..k {
            for y in x + 1..k {
                total += 1.0 - cos_unit(&units[x], &units[y]);
            }
        }
        total / (k * (k - 1) / 2) as f64
    });

    let dim = m.dim();
    let mut centroid = vec![0.0; dim];
    for u in &units {
        for (c, x) in centroid.iter_mut().zip(u) {
            *c += x / k as f64;
        }
    }
    let cn = centroid.iter().map(|x| x * x).sum::<f64>().sqrt();
    let centroid_dist = if cn == 0.0 {
        1.0
    } else {
        let q = unit(m, id)?;
        1.0 - (q.iter().zip(&centroid).map(|(a, b)| a * b).sum::<f64>() / cn).clamp(-1.0, 1.0)
    };

    Ok(Cohesiveness {
        token: token.to_string(),
        k,
        neighbors: nn.iter().map(|(j, _)| m.token(*j).to_string()).collect(),
        centroid_dist,
        knn_mean_dist,
        knn_pairwise_mean_dist,
    })
}

/// `|NN_k(Mi, token) ∩ NN_k(Mj, token)| / k`, neighbors compared by surface.
pub fn neighbor_overlap<T: Real>(mi: &EmbeddingModel<T>, mj: &EmbeddingModel<T>, token: &str, k: usize) -> Result<f64> {
    let a = nearest_neighbors(mi, mi.require(token)?, k)?;
    let b = nearest_neighbors(mj, mj.require(token)?, k)?;
    let sa: std::collections::BTreeSet<&str> = a.iter().map(|(i, _)| mi.token(*i)).collect();
    let shared = b.iter().filter(|(j, _)| sa.contains(mj.token(*j))).count();
    Ok(shared as f64 / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    Stable,
    MonotoneDrift,
    RevertingDrift,
    Scattered,
}

/// Thresholds for [`classify_pattern`]; none of them come from data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatternThresholds {
    /// Cosine-similarity units.
    pub epsilon: f64,
    /// Per month.
    pub slope: f64,
    pub r_squared_floor: f64,
}

impl Default for PatternThresholds {
    fn default() -> Self {
        PatternThresholds {
            epsilon: 0.05,
            slope: 0.01,
            r_squared_floor: 0.5,
        }
    }
}

/// Rules, checked in order:
///
/// 1. `RevertingDrift`: some value departs from the first by more than
///    `epsilon` and the last value is back within `epsilon` of the first.
/// 2. `MonotoneDrift`: `|slope| > slope` and `r² > r_squared_floor`.
/// 3. `Scattered`: `|slope| ≤ slope` and the residual standard deviation
///    exceeds `epsilon`.
/// 4. `Stable` otherwise.
pub fn classify_pattern(series: &SimilaritySeries, fit: &TrendFit, th: &PatternThresholds) -> Result<Pattern> {
    let pts = series.observed();
    if pts.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            found: pts.len(),
        });
    }
    let first = pts[0].1;
    let last = pts[pts.len() - 1].1;
    let max_dev = pts.iter().map(|p| (p.1 - first).abs()).fold(0.0, f64::max);
    if max_dev > th.epsilon && (last - first).abs() <= th.epsilon {
        return Ok(Pattern::RevertingDrift);
    }
    if fit.slope.abs() > th.slope && fit.r_squared > th.r_squared_floor {
        return Ok(Pattern::MonotoneDrift);
    }
    let resid_sd = (pts.iter().map(|&(t, y)| (y - fit.predict(t)).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    if fit.slope.abs() <= th.slope && resid_sd > th.epsilon {
        return Ok(Pattern::Scattered);
    }
    Ok(Pattern::Stable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Period, Platform};

    fn key(m: u32) -> SliceKey {
        SliceKey::new(Period::new(2016, 1).unwrap().offset(m as i64), Platform::Ios)
    }

    fn series(ys: &[f64]) -> SimilaritySeries {
        SimilaritySeries {
            pair: ("a".into(), "b".into()),
            points: ys
                .iter()
                .enumerate()
                .map(|(i, &y)| SeriesPoint {
                    slice: key(i as u32),
                    similarity: Some(y),
                })
                .collect(),
        }
    }

    fn model(rows: &[Vec<f64>]) -> EmbeddingModel<f64> {
        let toks = (0..rows.len()).map(|i| format!("t{i}")).collect();
        EmbeddingModel::from_rows(toks, rows).unwrap()
    }

    #[test]
    fn exact_line_and_constant() {
        let fit = linear_trend(&series(&[1.0, 3.0, 5.0, 7.0, 9.0, 11.0])).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let c = linear_trend(&series(&[0.1; 7])).unwrap();
        assert_eq!(c.slope, 0.0);
        assert_eq!(c.r_squared, 0.0);
        assert_eq!(c.intercept, 0.1);

        assert!(linear_trend(&series(&[0.3])).is_err());
        assert!(fit_points(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn ols_matches_normal_equations() {
        // oracle: solve [n Σt; Σt Σt²][b a]ᵀ = [Σy Σty] by Cramer's rule
        let ys = [0.3, 0.1, 0.45, 0.2, 0.38, 0.05, 0.6, 0.51, 0.33, 0.7];
        let fit = linear_trend(&series(&ys)).unwrap();
        let n = ys.len() as f64;
        let st: f64 = (0..10).map(|t| t as f64).sum();
        let stt: f64 = (0..10).map(|t| (t * t) as f64).sum();
        let sy: f64 = ys.iter().sum();
        let sty: f64 = ys.iter().enumerate().map(|(t, y)| t as f64 * y).sum();
        let det = n * stt - st * st;
        let slope = (n * sty - st * sy) / det;
        let intercept = (stt * sy - st * sty) / det;
        assert!((fit.slope - slope).abs() < 1e-9);
        assert!((fit.intercept - intercept).abs() < 1e-9);
    }

    #[test]
    fn gaps_shorten_the_series() {
        let mut s = series(&[1.0, 2.0, 3.0, 4.0]);
        s.points[1].similarity = None;
        let obs = s.observed();
        assert_eq!(obs, vec![(0.0, 1.0), (2.0, 3.0), (3.0, 4.0)]);
        assert!((linear_trend(&s).unwrap().slope - 1.0).abs() < 1e-12);
        assert!(s.to_csv().contains("2016-02/iOS,2016-02,iOS,\n"));
    }

    #[test]
    fn similarity_series_matches_scalar_cosines() {
        let m1 = model(&[vec![1.0, 0.0], vec![1.0, 1.0]]);
        let m2 = model(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let m3 = model(&[vec![3.0, 4.0], vec![4.0, 3.0]]);
        let models = [SliceModel::new(key(2), &m3), SliceModel::new(key(0), &m1), SliceModel::new(key(1), &m2)];
        let s = similarity_series(&models, "t0", "t1").unwrap();
        let want = [1.0 / 2f64.sqrt(), 0.0, 24.0 / 25.0];
        for (p, w) in s.points.iter().zip(want) {
            assert!((p.similarity.unwrap() - w).abs() < 1e-12);
        }
        let same = similarity_series(&models, "t1", "t1").unwrap();
        assert!(same.points.iter().all(|p| p.similarity == Some(1.0)));
        assert_eq!(similarity_series(&models[..1], "t0", "t1").unwrap().points.len(), 1);
        assert!(matches!(similarity_series(&models, "t0", "zz"), Err(Error::UnknownToken(_))));

        let mut gated = models;
        gated[0].accepted = false;
        let s = similarity_series(&gated, "t0", "t1").unwrap();
        assert_eq!(s.points[2].similarity, None);
    }

    #[test]
    fn cohesiveness_brute_force() {
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.9, 0.1, 0.0],
            vec![0.8, 0.0, 0.3],
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.5],
        ];
        let m = model(&rows);
        let c = cohesiveness(&m, "t0", 3).unwrap();
        // oracle: enumerate every other token, sort by distance, take 3
        let dist = |a: &[f64], b: &[f64]| 1.0 - crate::scalar::cosine(a, b).unwrap();
        let mut d: Vec<(f64, usize)> = (1..5).map(|j| (dist(&rows[0], &rows[j]), j)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nn: Vec<usize> = d[..3].iter().map(|x| x.1).collect();
        assert_eq!(c.neighbors, nn.iter().map(|j| format!("t{j}")).collect::<Vec<_>>());
        let mean = d[..3].iter().map(|x| x.0).sum::<f64>() / 3.0;
        assert!((c.knn_mean_dist - mean).abs() < 1e-12);
        let mut pair = 0.0;
        for x in 0..3 {
            for y in x + 1..3 {
                pair += dist(&rows[nn[x]], &rows[nn[y]]);
            }
        }
        assert!((c.knn_pairwise_mean_dist.unwrap() - pair / 3.0).abs() < 1e-12);

        assert_eq!(cohesiveness(&m, "t0", 1).unwrap().knn_pairwise_mean_dist, None);
        assert!(cohesiveness(&m, "t0", 0).is_err());
        assert!(cohesiveness(&m, "t0", 5).is_err());
    }

    #[test]
    fn identical_neighbors_have_zero_spread() {
        let m = model(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0], vec![-1.0, -1.0]]);
        let c = cohesiveness(&m, "t0", 3).unwrap();
        assert_eq!(c.knn_pairwise_mean_dist, Some(0.0));
    }

    #[test]
    fn overlap_cases() {
        let m = model(&[vec![1.0, 0.0], vec![0.9, 0.1], vec![0.8, 0.2], vec![0.0, 1.0], vec![0.1, 0.9], vec![-1.0, 0.0]]);
        assert_eq!(neighbor_overlap(&m, &m, "t0", 2).unwrap(), 1.0);
        let far = model(&[vec![1.0, 0.0], vec![-0.9, 0.1], vec![-0.8, 0.2], vec![0.9, 0.1], vec![0.8, 0.2], vec![-1.0, 0.0]]);
        assert_eq!(neighbor_overlap(&m, &far, "t0", 2).unwrap(), 0.0);
        assert_eq!(
            neighbor_overlap(&m, &far, "t3", 3).unwrap(),
            neighbor_overlap(&far, &m, "t3", 3).unwrap()
        );
    }

    #[test]
    fn patterns() {
        let th = PatternThresholds::default();
        let classify = |ys: &[f64]| {
            let s = series(ys);
            classify_pattern(&s, &linear_trend(&s).unwrap(), &th).unwrap()
        };
        assert_eq!(classify(&[0.5; 6]), Pattern::Stable);
        assert_eq!(classify(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]), Pattern::MonotoneDrift);
        assert_eq!(classify(&[0.5, 0.6, 0.7, 0.8, 0.7, 0.6, 0.5]), Pattern::RevertingDrift);
        assert_eq!(classify(&[0.5, 0.2, 0.8, 0.3, 0.75, 0.25, 0.7, 0.4]), Pattern::Scattered);
        assert!(classify_pattern(&series(&[0.1, 0.2, 0.3]), &linear_trend(&series(&[0.1, 0.2, 0.3])).unwrap(), &th).is_err());
    }
}

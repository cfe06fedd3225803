//! Dataset curation: identity matching across sources from per-image face
//! embeddings, and height/weight histogram balancing of subject samples.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::body_model::Gender;
use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.3;
pub const EMBEDDING_DIM: usize = 512;
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSubject {
    pub subject_id: String,
    pub gender: Gender,
    /// One unit vector per image.
    pub embeddings: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub source: String,
    pub dim: usize,
    pub subjects: Vec<EmbeddingSubject>,
}

const EMBEDDING_FORMAT: &str = "shapekit-embeddings";

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingManifest {
    format: String,
    version: u32,
    source: String,
    dim: usize,
    buffer: EmbeddingBuffer,
    subjects: Vec<EmbeddingSubjectEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingBuffer {
    file: String,
    dtype: String,
    shape: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingSubjectEntry {
    id: String,
    gender: Gender,
    images: usize,
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

impl EmbeddingSet {
    pub fn validate(&self) -> Result<()> {
        for s in &self.subjects {
            for (i, e) in s.embeddings.iter().enumerate() {
                if e.len() != self.dim {
                    return Err(Error::dims(format!("{}.embeddings[{i}]", s.subject_id), self.dim, e.len()));
                }
                let n = norm(e);
                if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
                    return Err(Error::format(
                        format!("{}.embeddings[{i}]", s.subject_id),
                        format!("L2 norm {n} is not 1"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Reads `<dir>/manifest.json` and its float32 buffer.
    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join("manifest.json");
        let raw = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let m: EmbeddingManifest =
            serde_json::from_slice(&raw).map_err(|e| Error::format("embeddings manifest", e.to_string()))?;
        if m.format != EMBEDDING_FORMAT {
            return Err(Error::format("manifest.format", format!("unexpected {:?}", m.format)));
        }
        if m.buffer.dtype != "f32" {
            return Err(Error::format("manifest.buffer.dtype", format!("expected f32, got {}", m.buffer.dtype)));
        }
        if m.buffer.shape[1] != m.dim {
            return Err(Error::dims("manifest.buffer.shape[1]", m.dim, m.buffer.shape[1]));
        }
        let images: usize = m.subjects.iter().map(|s| s.images).sum();
        if m.buffer.shape[0] != images {
            return Err(Error::dims("manifest.buffer.shape[0]", images, m.buffer.shape[0]));
        }
        let bp = dir.join(&m.buffer.file);
        let bytes = fs::read(&bp).map_err(|e| Error::io(&bp, e))?;
        if bytes.len() != images * m.dim * 4 {
            return Err(Error::dims("embedding buffer bytes", images * m.dim * 4, bytes.len()));
        }
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let mut rows = values.chunks_exact(m.dim);
        let subjects = m
            .subjects
            .into_iter()
            .map(|s| EmbeddingSubject {
                subject_id: s.id,
                gender: s.gender,
                embeddings: rows.by_ref().take(s.images).map(<[f32]>::to_vec).collect(),
            })
            .collect();
        let set = Self {
            source: m.source,
            dim: m.dim,
            subjects,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let images: usize = self.subjects.iter().map(|s| s.embeddings.len()).sum();
        let manifest = EmbeddingManifest {
            format: EMBEDDING_FORMAT.into(),
            version: 1,
            source: self.source.clone(),
            dim: self.dim,
            buffer: EmbeddingBuffer {
                file: "embeddings.bin".into(),
                dtype: "f32".into(),
                shape: [images, self.dim],
            },
            subjects: self
                .subjects
                .iter()
                .map(|s| EmbeddingSubjectEntry {
                    id: s.subject_id.clone(),
                    gender: s.gender,
                    images: s.embeddings.len(),
                })
                .collect(),
        };
        let p = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&p, json).map_err(|e| Error::io(&p, e))?;
        let mut bytes = Vec::with_capacity(images * self.dim * 4);
        for s in &self.subjects {
            for e in &s.embeddings {
                for x in e {
                    bytes.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        let p = dir.join("embeddings.bin");
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
    }
}

/// Cosine similarity matrix `[Q × T]` between the images of two subjects.
pub fn pairwise_similarity(q: &EmbeddingSubject, t: &EmbeddingSubject) -> Result<Vec<Vec<f64>>> {
    if q.embeddings.is_empty() || t.embeddings.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "subject {} or {} has no images",
            q.subject_id, t.subject_id
        )));
    }
    if q.gender != t.gender {
        return Err(Error::InvalidArgument(format!(
            "subjects {} and {} have different gender labels",
            q.subject_id, t.subject_id
        )));
    }
    Ok(q.embeddings
        .iter()
        .map(|a| {
            t.embeddings
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum())
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOutcome {
    /// Neither S nor S_T has an entry above τ (or, in strict mode, S_T has none).
    RejectedDissimilar,
    /// Passed the first stage but the global mean S_TQ is not above τ.
    RejectedMean,
    Matched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub outcome: PairOutcome,
    pub s_tq: f64,
    pub max_s: f64,
    pub max_s_t: f64,
}

/// Two-stage decision for one same-gender pair.
///
/// `S_T(t)` is the mean over query images of `S(q, t)` and `S_TQ` the mean of
/// all of `S`. By default a pair is dropped at the first stage only when both
/// `S` and `S_T` lack an entry above τ; `strict` drops it when either does.
pub fn decide_pair(q: &EmbeddingSubject, t: &EmbeddingSubject, tau: f64, strict: bool) -> Result<PairDecision> {
    let s = pairwise_similarity(q, t)?;
    let rows = s.len() as f64;
    let cols = s[0].len();
    let s_t: Vec<f64> = (0..cols).map(|j| s.iter().map(|r| r[j]).sum::<f64>() / rows).collect();
    let s_tq = s_t.iter().sum::<f64>() / cols as f64;
    let max_s = s.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_s_t = s_t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (any_s, any_st) = (max_s > tau, max_s_t > tau);
    let dissimilar = if strict { !(any_s && any_st) } else { !any_s && !any_st };
    let outcome = if dissimilar {
        PairOutcome::RejectedDissimilar
    } else if s_tq > tau {
        PairOutcome::Matched
    } else {
        PairOutcome::RejectedMean
    };
    Ok(PairDecision { outcome, s_tq, max_s, max_s_t })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub a: String,
    pub b: String,
    pub s_tq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tau: f64,
    pub strict: bool,
    pub matched: Vec<MatchedPair>,
    pub rejected_dissimilar: Vec<(String, String)>,
    pub rejected_mean: Vec<(String, String)>,
}

/// Same-gender pairs `(a, b)` in row-major order over the two sets.
pub fn candidate_pairs(a: &EmbeddingSet, b: &EmbeddingSet) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, q) in a.subjects.iter().enumerate() {
        for (j, t) in b.subjects.iter().enumerate() {
            if q.gender == t.gender {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn collect_report(
    a: &EmbeddingSet,
    b: &EmbeddingSet,
    pairs: &[(usize, usize)],
    decisions: &[PairDecision],
    tau: f64,
    strict: bool,
) -> MatchReport {
    let mut report = MatchReport {
        tau,
        strict,
        matched: Vec::new(),
        rejected_dissimilar: Vec::new(),
        rejected_mean: Vec::new(),
    };
    for (&(i, j), d) in pairs.iter().zip(decisions) {
        let (ia, ib) = (a.subjects[i].subject_id.clone(), b.subjects[j].subject_id.clone());
        match d.outcome {
            PairOutcome::Matched => report.matched.push(MatchedPair { a: ia, b: ib, s_tq: d.s_tq }),
            PairOutcome::RejectedDissimilar => report.rejected_dissimilar.push((ia, ib)),
            PairOutcome::RejectedMean => report.rejected_mean.push((ia, ib)),
        }
    }
    report
}

/// Matches identities between two sources.
pub fn match_identities(a: &EmbeddingSet, b: &EmbeddingSet, tau: f64, strict: bool) -> Result<MatchReport> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
    }
    let pairs = candidate_pairs(a, b);
    let decisions = pairs
        .iter()
        .map(|&(i, j)| decide_pair(&a.subjects[i], &b.subjects[j], tau, strict))
        .collect::<Result<Vec<_>>>()?;
    Ok(collect_report(a, b, &pairs, &decisions, tau, strict))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub gender: Gender,
    pub height: Option<f64>,
    pub weight: Option<f64>,
    #[serde(default)]
    pub image_count: usize,
    pub bmi: Option<f64>,
}

impl SubjectRecord {
    /// Stored BMI, or weight / height² when both are known.
    pub fn bmi(&self) -> Option<f64> {
        self.bmi.or_else(|| match (self.height, self.weight) {
            (Some(h), Some(w)) if h > 0.0 => Some(w / (h * h)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalanceConfig {
    /// Height bin width in meters.
    pub bin_h: f64,
    /// Weight bin width in kilograms.
    pub bin_w: f64,
    pub cap: usize,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            bin_h: 0.05,
            bin_w: 5.0,
            cap: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    /// Selected subject ids, in input order.
    pub selected: Vec<String>,
    /// `(height bin, weight bin)` of each selected subject.
    pub bins: Vec<(i64, i64)>,
    /// Subjects without a usable height and weight.
    pub skipped: usize,
}

/// Keeps at most `cap` uniformly chosen subjects per (height, weight) bin.
/// Bins are visited in ascending key order, all drawing from one seeded stream.
pub fn balance_sample(subjects: &[SubjectRecord], config: &BalanceConfig, seed: u64) -> Result<BalanceResult> {
    if !(config.bin_h > 0.0 && config.bin_w > 0.0) {
        return Err(Error::InvalidArgument("bin widths must be positive".into()));
    }
    let mut bins: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    let mut skipped = 0;
    for (i, s) in subjects.iter().enumerate() {
        match (s.height, s.weight) {
            (Some(h), Some(w)) if h > 0.0 && w > 0.0 && h.is_finite() && w.is_finite() => {
                let key = ((h / config.bin_h).floor() as i64, (w / config.bin_w).floor() as i64);
                bins.entry(key).or_default().push(i);
            }
            _ => skipped += 1,
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(usize, (i64, i64))> = Vec::new();
    for (key, members) in &bins {
        let k = config.cap.min(members.len());
        for pick in rand::seq::index::sample(&mut rng, members.len(), k) {
            chosen.push((members[pick], *key));
        }
    }
    chosen.sort_unstable();
    Ok(BalanceResult {
        selected: chosen.iter().map(|(i, _)| subjects[*i].subject_id.clone()).collect(),
        bins: chosen.iter().map(|(_, k)| *k).collect(),
        skipped,
    })
}

/// Weighted sampling without replacement, weight ∝ BMI, in draw order.
pub fn bmi_weighted_pick(subjects: &[SubjectRecord], count: usize, seed: u64) -> Result<Vec<String>> {
    if count > subjects.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {count} of {} subjects",
            subjects.len()
        )));
    }
    let bmis = subjects
        .iter()
        .map(|s| {
            s.bmi()
                .filter(|b| *b > 0.0 && b.is_finite())
                .ok_or_else(|| Error::format(format!("{}.bmi", s.subject_id), "missing or non-positive BMI"))
        })
        .collect::<Result<Vec<f64>>>()?;
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample_weighted(&mut rng, subjects.len(), |i| bmis[i], count)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(picks.iter().map(|i| subjects[i].subject_id.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subject(id: &str, v: Vec<Vec<f32>>) -> EmbeddingSubject {
        EmbeddingSubject {
            subject_id: id.into(),
            gender: Gender::Female,
            embeddings: v,
        }
    }

    fn record(id: usize, h: f64, w: f64) -> SubjectRecord {
        SubjectRecord {
            subject_id: format!("r{id}"),
            gender: Gender::Male,
            height: Some(h),
            weight: Some(w),
            image_count: 1,
            bmi: None,
        }
    }

    #[test]
    fn identical_and_orthogonal() {
        let e = vec![vec![1.0, 0.0]];
        let f = vec![vec![0.0, 1.0]];
        assert_eq!(pairwise_similarity(&subject("a", e.clone()), &subject("b", e.clone())).unwrap(), vec![vec![1.0]]);
        assert_eq!(pairwise_similarity(&subject("a", e.clone()), &subject("b", f.clone())).unwrap(), vec![vec![0.0]]);
        let d = decide_pair(&subject("a", e.clone()), &subject("b", e), 0.3, false).unwrap();
        assert_eq!(d.outcome, PairOutcome::Matched);
        assert_eq!(d.s_tq, 1.0);
        let d = decide_pair(&subject("a", vec![vec![1.0, 0.0]]), &subject("b", f), 0.3, false).unwrap();
        assert_eq!(d.outcome, PairOutcome::RejectedDissimilar);
    }

    #[test]
    fn mixed_gender_is_refused() {
        let mut m = subject("m", vec![vec![1.0]]);
        m.gender = Gender::Male;
        assert!(pairwise_similarity(&subject("f", vec![vec![1.0]]), &m).is_err());
    }

    #[test]
    fn one_strong_image_passes_stage_one_only() {
        // one query image matches, the others are orthogonal
        let q = subject("q", vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let t = subject("t", vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let d = decide_pair(&q, &t, 0.3, false).unwrap();
        // S_T = (1/3, 1/3); S_TQ = 1/3
        assert_eq!(d.outcome, PairOutcome::Matched);
        let d = decide_pair(&q, &t, 0.34, false).unwrap();
        assert_eq!(d.outcome, PairOutcome::RejectedMean);
        let d = decide_pair(&q, &t, 0.34, true).unwrap();
        assert_eq!(d.outcome, PairOutcome::RejectedDissimilar);
    }

    #[test]
    fn one_bin_keeps_cap() {
        let subjects: Vec<_> = (0..10).map(|i| record(i, 1.80, 80.0)).collect();
        let r = balance_sample(&subjects, &BalanceConfig::default(), 1).unwrap();
        assert_eq!(r.selected.len(), 3);
    }

    #[test]
    fn separate_bins_keep_everyone() {
        let subjects: Vec<_> = (0..10).map(|i| record(i, 1.5 + 0.06 * i as f64, 50.0 + 6.0 * i as f64)).collect();
        let r = balance_sample(&subjects, &BalanceConfig::default(), 1).unwrap();
        assert_eq!(r.selected.len(), 10);
    }

    #[test]
    fn missing_measurements_are_skipped() {
        let mut s = record(0, 1.7, 70.0);
        s.weight = None;
        let r = balance_sample(&[s, record(1, 1.7, 70.0)], &BalanceConfig::default(), 0).unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.selected, vec!["r1".to_string()]);
    }

    #[test]
    fn bmi_pick_edges() {
        let s = vec![record(0, 1.7, 70.0)];
        assert_eq!(bmi_weighted_pick(&s, 1, 3).unwrap(), vec!["r0".to_string()]);
        assert!(bmi_weighted_pick(&s, 0, 3).unwrap().is_empty());
        assert!(bmi_weighted_pick(&s, 2, 3).is_err());
    }

    #[test]
    fn embedding_set_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let set = EmbeddingSet {
            source: "site-a".into(),
            dim: 3,
            subjects: vec![
                subject("a", vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.6, 0.8]]),
                subject("b", vec![vec![0.0, 0.0, 1.0]]),
            ],
        };
        set.save(dir.path()).unwrap();
        assert_eq!(EmbeddingSet::load(dir.path()).unwrap(), set);
    }

    #[test]
    fn non_unit_embedding_is_rejected() {
        let set = EmbeddingSet {
            source: "x".into(),
            dim: 2,
            subjects: vec![subject("a", vec![vec![1.0, 1.0]])],
        };
        assert!(set.validate().is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::{AnnotationTimeline, DatasetError};
use crate::phase::{Phase, NUM_PHASES};

/// Duration summary over the operations in which a phase occurs, in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single operation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDurationStats {
    pub phase: Phase,
    pub occurrences: usize,
    /// `None` when the phase never occurs.
    pub summary: Option<DurationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub phases: Vec<PhaseDurationStats>,
}

impl PhaseStats {
    pub fn get(&self, phase: Phase) -> &PhaseDurationStats {
        &self.phases[phase.index()]
    }
}

/// Per-phase duration statistics across operations.
///
/// A phase split over several runs in one operation contributes the sum of
/// its run lengths as that operation's duration.
pub fn phase_statistics(timelines: &[AnnotationTimeline]) -> Result<PhaseStats, DatasetError> {
    if timelines.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    let mut durations: Vec<Vec<f64>> = vec![Vec::new(); NUM_PHASES];
    for t in timelines {
        let mut frames = [0u64; NUM_PHASES];
        for r in t.runs() {
            frames[r.phase.index()] += r.len() as u64;
        }
        for (p, &n) in frames.iter().enumerate() {
            if n > 0 {
                durations[p].push(n as f64 / t.frames_per_minute());
            }
        }
    }
    let phases = Phase::ALL
        .iter()
        .map(|&phase| {
            let d = &durations[phase.index()];
            PhaseDurationStats {
                phase,
                occurrences: d.len(),
                summary: summarize(d),
            }
        })
        .collect();
    Ok(PhaseStats { phases })
}

fn summarize(values: &[f64]) -> Option<DurationSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(DurationSummary { mean, std, min, max })
}

/// How many distinct phases occur at each point of elapsed time across a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapProfile {
    pub bin_minutes: f64,
    /// `counts[k]` is sampled at the bin center `(k + 0.5) * bin_minutes`.
    pub counts: Vec<usize>,
    /// Earliest start and latest end of each phase in minutes.
    pub spans: Vec<Option<(f64, f64)>>,
}

impl OverlapProfile {
    pub fn bin_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.bin_minutes
    }

    /// Count for the bin containing `minute`.
    pub fn count_at(&self, minute: f64) -> Option<usize> {
        if minute < 0.0 {
            return None;
        }
        self.counts.get((minute / self.bin_minutes) as usize).copied()
    }
}

pub fn overlap_profile(
    timelines: &[AnnotationTimeline],
    bin_minutes: f64,
) -> Result<OverlapProfile, DatasetError> {
    if timelines.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    if !(bin_minutes > 0.0 && bin_minutes.is_finite()) {
        return Err(DatasetError::InvalidParameter(format!(
            "bin_minutes must be positive, got {bin_minutes}"
        )));
    }
    let longest = timelines
        .iter()
        .map(AnnotationTimeline::duration_minutes)
        .fold(0.0, f64::max);
    let bins = (longest / bin_minutes).ceil() as usize;
    let counts = (0..bins)
        .map(|k| {
            let t = (k as f64 + 0.5) * bin_minutes;
            let mut present = [false; NUM_PHASES];
            for tl in timelines {
                let frame = (t * tl.frames_per_minute()).floor();
                if frame < tl.num_frames() as f64 {
                    if let Some(p) = tl.phase_at(frame as u32) {
                        present[p.index()] = true;
                    }
                }
            }
            present.iter().filter(|&&b| b).count()
        })
        .collect();

    let mut spans: Vec<Option<(f64, f64)>> = vec![None; NUM_PHASES];
    for tl in timelines {
        let fpm = tl.frames_per_minute();
        for r in tl.runs() {
            let (s, e) = (r.start as f64 / fpm, (r.end + 1) as f64 / fpm);
            let slot = &mut spans[r.phase.index()];
            *slot = Some(match *slot {
                Some((a, b)) => (a.min(s), b.max(e)),
                None => (s, e),
            });
        }
    }
    Ok(OverlapProfile {
        bin_minutes,
        counts,
        spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(id: &str, segs: &[(Phase, u32)]) -> AnnotationTimeline {
        AnnotationTimeline::from_durations(id, 25, segs).unwrap()
    }

    #[test]
    fn single_timeline_single_sample() {
        let t = tl("a", &[(Phase::P1, 4500), (Phase::P2, 100)]);
        let s = phase_statistics(&[t]).unwrap();
        let p1 = s.get(Phase::P1).summary.unwrap();
        assert_eq!((p1.mean, p1.min, p1.max, p1.std), (3.0, 3.0, 3.0, 0.0));
        assert_eq!(s.get(Phase::P3).occurrences, 0);
        assert!(s.get(Phase::P3).summary.is_none());
    }

    #[test]
    fn two_timelines_hand_arithmetic() {
        // P3 lasts 2 and 4 minutes: mean 3, sample std sqrt(2).
        let a = tl("a", &[(Phase::P1, 10), (Phase::P3, 3000)]);
        let b = tl("b", &[(Phase::P1, 10), (Phase::P3, 6000)]);
        let s = phase_statistics(&[a, b]).unwrap().get(Phase::P3).summary.unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.min, 2.0);
        assert_eq!(s.max, 4.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12 * 2f64.sqrt());
    }

    #[test]
    fn split_runs_aggregate_per_operation() {
        let t = tl(
            "a",
            &[(Phase::P7, 1500), (Phase::P8, 100), (Phase::P7, 3000)],
        );
        let s = phase_statistics(&[t]).unwrap();
        assert_eq!(s.get(Phase::P7).occurrences, 1);
        assert_eq!(s.get(Phase::P7).summary.unwrap().mean, 3.0);
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(matches!(phase_statistics(&[]), Err(DatasetError::EmptyCorpus)));
        assert!(matches!(overlap_profile(&[], 1.0), Err(DatasetError::EmptyCorpus)));
    }

    #[test]
    fn overlap_single_timeline_is_one() {
        let t = tl("a", &[(Phase::P1, 1000), (Phase::P2, 777), (Phase::P3, 2000)]);
        let prof = overlap_profile(&[t], 0.25).unwrap();
        let occupied: Vec<_> = prof.counts.iter().filter(|&&c| c > 0).collect();
        assert!(occupied.len() >= prof.counts.len() - 1);
        assert!(occupied.iter().all(|&&c| c == 1));
    }

    #[test]
    fn overlap_two_timelines() {
        // P1 over [0, 2] min in one operation, P2 over [1, 3] in the other.
        let a = tl("a", &[(Phase::P1, 3000), (Phase::P3, 1500)]);
        let b = tl("b", &[(Phase::P3, 1500), (Phase::P2, 3000)]);
        let prof = overlap_profile(&[a, b], 1.0).unwrap();
        assert_eq!(prof.count_at(1.5), Some(2));
        assert_eq!(prof.spans[Phase::P1.index()], Some((0.0, 2.0)));
        assert_eq!(prof.spans[Phase::P2.index()], Some((1.0, 3.0)));
        assert_eq!(prof.spans[Phase::P4.index()], None);
        assert!(overlap_profile(&[tl("c", &[(Phase::P1, 5)])], 0.0).is_err());
    }
}

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotationTimeline, DatasetError};
use crate::phase::Phase;

/// A fixed-length window lying wholly inside one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub video_id: String,
    pub phase: Phase,
    pub start_frame: u32,
    pub num_frames: u32,
    /// Minutes from the start of the operation to the shot's first frame.
    pub elapsed_minutes: f64,
}

impl Shot {
    pub fn end_frame(&self) -> u32 {
        self.start_frame + self.num_frames - 1
    }

    pub fn overlaps(&self, other: &Shot) -> bool {
        self.video_id == other.video_id
            && self.start_frame <= other.end_frame()
            && other.start_frame <= self.end_frame()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotDeficit {
    pub phase: Phase,
    pub available: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotConfig {
    pub seed: u64,
    pub per_video_per_phase: usize,
    pub shot_seconds: u32,
    pub per_phase_target: usize,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            seed: 0,
            per_video_per_phase: 2,
            shot_seconds: 10,
            per_phase_target: 50,
        }
    }
}

/// Attempts per additional shot before it is declared infeasible.
const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotManifest {
    pub seed: u64,
    pub per_phase_target: usize,
    pub shots: Vec<Shot>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deficits: Vec<ShotDeficit>,
}

impl ShotManifest {
    /// Fails with the first recorded deficit, if any.
    pub fn ensure_complete(&self) -> Result<(), DatasetError> {
        match self.deficits.first() {
            Some(d) => Err(DatasetError::InsufficientShots {
                phase: d.phase,
                available: d.available,
                target: d.target,
            }),
            None => Ok(()),
        }
    }

    pub fn count(&self, phase: Phase) -> usize {
        self.shots.iter().filter(|s| s.phase == phase).count()
    }

    pub fn to_json(&self) -> Result<String, DatasetError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks every shot against its timeline: single-phase containment,
    /// sibling disjointness and the elapsed-time stamp.
    pub fn validate(&self, timelines: &[AnnotationTimeline]) -> Result<(), DatasetError> {
        let by_id: HashMap<&str, &AnnotationTimeline> =
            timelines.iter().map(|t| (t.video_id.as_str(), t)).collect();
        let bad = |msg: String| Err(DatasetError::InvalidManifest(msg));
        for (i, shot) in self.shots.iter().enumerate() {
            let Some(t) = by_id.get(shot.video_id.as_str()) else {
                return bad(format!("shot {i}: unknown video `{}`", shot.video_id));
            };
            let contained = t.runs().iter().any(|r| {
                r.phase == shot.phase && r.start <= shot.start_frame && shot.end_frame() <= r.end
            });
            if !contained {
                return bad(format!("shot {i} is not inside a single {} run", shot.phase));
            }
            if shot.elapsed_minutes != shot.start_frame as f64 / t.frames_per_minute() {
                return bad(format!("shot {i}: elapsed time stamp mismatch"));
            }
            for (j, other) in self.shots.iter().enumerate().skip(i + 1) {
                if other.phase == shot.phase && shot.overlaps(other) {
                    return bad(format!("shots {i} and {j} overlap"));
                }
            }
        }
        Ok(())
    }
}

/// Inclusive intervals of feasible start frames for one (video, phase).
fn feasible_starts(t: &AnnotationTimeline, phase: Phase, shot_frames: u32) -> Vec<(u32, u32)> {
    t.runs_of(phase)
        .filter(|r| r.len() >= shot_frames)
        .map(|r| (r.start, r.end + 1 - shot_frames))
        .collect()
}

fn draw_start(rng: &mut ChaCha8Rng, intervals: &[(u32, u32)], total: u64) -> u32 {
    let mut k = rng.random_range(0..total);
    for &(lo, hi) in intervals {
        let n = (hi - lo) as u64 + 1;
        if k < n {
            return lo + k as u32;
        }
        k -= n;
    }
    unreachable!("index drawn below the interval total")
}

/// Samples the shot dataset.
///
/// For every (video, phase) up to `per_video_per_phase` mutually disjoint
/// shots are placed uniformly over the union of that phase's runs, then each
/// phase is uniformly subsampled to `per_phase_target`. Phases that cannot
/// reach the target keep all their shots and are listed in `deficits`.
pub fn extract_shots(
    timelines: &[AnnotationTimeline],
    config: &ShotConfig,
) -> Result<ShotManifest, DatasetError> {
    if timelines.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    if config.shot_seconds == 0 || config.per_video_per_phase == 0 {
        return Err(DatasetError::InvalidParameter(
            "shot_seconds and per_video_per_phase must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pools: Vec<Vec<Shot>> = vec![Vec::new(); Phase::ALL.len()];

    for t in timelines {
        let shot_frames = config.shot_seconds * t.fps;
        for phase in Phase::ALL {
            let intervals = feasible_starts(t, phase, shot_frames);
            let total: u64 = intervals.iter().map(|&(a, b)| (b - a) as u64 + 1).sum();
            if total == 0 {
                continue;
            }
            let mut starts: Vec<u32> = Vec::with_capacity(config.per_video_per_phase);
            starts.push(draw_start(&mut rng, &intervals, total));
            while starts.len() < config.per_video_per_phase {
                let placed = (0..MAX_PLACEMENT_ATTEMPTS).find_map(|_| {
                    let s = draw_start(&mut rng, &intervals, total);
                    starts
                        .iter()
                        .all(|&o| s.abs_diff(o) >= shot_frames)
                        .then_some(s)
                });
                match placed {
                    Some(s) => starts.push(s),
                    None => break,
                }
            }
            starts.sort_unstable();
            pools[phase.index()].extend(starts.into_iter().map(|s| Shot {
                video_id: t.video_id.clone(),
                phase,
                start_frame: s,
                num_frames: shot_frames,
                elapsed_minutes: s as f64 / t.frames_per_minute(),
            }));
        }
    }

    let mut shots = Vec::new();
    let mut deficits = Vec::new();
    for (p, pool) in pools.into_iter().enumerate() {
        let target = config.per_phase_target;
        if pool.len() > target {
            let mut keep = index::sample(&mut rng, pool.len(), target).into_vec();
            keep.sort_unstable();
            shots.extend(keep.into_iter().map(|i| pool[i].clone()));
        } else {
            if pool.len() < target {
                deficits.push(ShotDeficit {
                    phase: Phase::ALL[p],
                    available: pool.len(),
                    target,
                });
            }
            shots.extend(pool);
        }
    }

    Ok(ShotManifest {
        seed: config.seed,
        per_phase_target: config.per_phase_target,
        shots,
        deficits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(id: &str, segs: &[(Phase, u32)]) -> AnnotationTimeline {
        AnnotationTimeline::from_durations(id, 25, segs).unwrap()
    }

    #[test]
    fn short_phase_yields_one_shot() {
        // 17 s of P6 fits one 10 s shot but never two.
        let t = tl("v", &[(Phase::P5, 3000), (Phase::P6, 425), (Phase::P7, 3000)]);
        for seed in 0..50 {
            let m = extract_shots(
                &[t.clone()],
                &ShotConfig { seed, per_phase_target: 1, ..Default::default() },
            )
            .unwrap();
            assert_eq!(m.count(Phase::P6), 1);
            m.validate(&[t.clone()]).unwrap();
        }
    }

    #[test]
    fn too_short_phase_yields_none() {
        let t = tl("v", &[(Phase::P1, 249), (Phase::P2, 3000)]);
        let m = extract_shots(&[t], &ShotConfig { per_phase_target: 2, ..Default::default() }).unwrap();
        assert_eq!(m.count(Phase::P1), 0);
        assert_eq!(m.count(Phase::P2), 2);
        assert!(m.deficits.iter().any(|d| d.phase == Phase::P1 && d.available == 0));
        assert!(matches!(
            m.ensure_complete(),
            Err(DatasetError::InsufficientShots { phase: Phase::P1, .. })
        ));
    }

    #[test]
    fn exactly_two_windows_fit() {
        let t = tl("v", &[(Phase::P3, 1000)]);
        let m = extract_shots(&[t.clone()], &ShotConfig { seed: 3, per_phase_target: 2, ..Default::default() })
            .unwrap();
        assert_eq!(m.count(Phase::P3), 2);
        m.validate(&[t]).unwrap();
    }

    #[test]
    fn split_runs_form_a_union() {
        // Two short P7 runs of 12 s each: one shot in each at most.
        let t = tl(
            "v",
            &[(Phase::P7, 300), (Phase::P8, 2000), (Phase::P7, 300)],
        );
        let m = extract_shots(&[t.clone()], &ShotConfig { seed: 5, per_phase_target: 2, ..Default::default() })
            .unwrap();
        assert_eq!(m.count(Phase::P7), 2);
        m.validate(&[t]).unwrap();
    }

    #[test]
    fn same_seed_same_bytes() {
        let ts = vec![
            tl("a", &[(Phase::P1, 5000), (Phase::P2, 2000)]),
            tl("b", &[(Phase::P1, 3000), (Phase::P2, 9000)]),
        ];
        let cfg = ShotConfig { seed: 42, per_phase_target: 3, ..Default::default() };
        let a = extract_shots(&ts, &cfg).unwrap().to_json().unwrap();
        let b = extract_shots(&ts, &cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = extract_shots(&ts, &ShotConfig { seed: 43, ..cfg }).unwrap().to_json().unwrap();
        assert_ne!(a, c);
        let back = ShotManifest::from_json(&a).unwrap();
        assert_eq!(back.to_json().unwrap(), a);
    }

    #[test]
    fn manifest_json_shape() {
        let t = tl("vid", &[(Phase::P1, 1500)]);
        let m = extract_shots(&[t], &ShotConfig { seed: 1, per_phase_target: 1, ..Default::default() }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["seed"], 1);
        let s = &v["shots"][0];
        assert_eq!(s["video_id"], "vid");
        assert_eq!(s["phase"], "P1");
        assert_eq!(s["num_frames"], 250);
        let start = s["start_frame"].as_u64().unwrap() as f64;
        assert_eq!(s["elapsed_minutes"].as_f64().unwrap(), start / 1500.0);
    }
}

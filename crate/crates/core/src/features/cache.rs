//! Binary descriptor cache (`.spfc`).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "SPFC" | u32 version | u32 descriptor_dim | u32 stride | u32 shot_count
//! per shot:
//!   u16 id_len | id (UTF-8) | u8 phase index | u32 start_frame | u32 entry_count
//!   f64 elapsed_minutes of the first frame
//!   entry_count x ( f64 elapsed_minutes | descriptor_dim x f32 )
//! ```

use std::fs;
use std::path::Path;

use super::{FeatureError, SequenceEntry, ShotDescriptorSequence};
use crate::dataset::{Shot, SHOT_FRAMES};
use crate::phase::Phase;

pub const CACHE_MAGIC: [u8; 4] = *b"SPFC";
pub const CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub descriptor_dim: usize,
    pub stride: u32,
    pub sequences: Vec<ShotDescriptorSequence>,
}

impl FeatureCache {
    /// Builds a cache, checking that every sequence shares dimension and stride.
    pub fn new(sequences: Vec<ShotDescriptorSequence>) -> Result<Self, FeatureError> {
        let first = sequences
            .first()
            .ok_or_else(|| FeatureError::InvalidArgument("cache needs at least one sequence".into()))?;
        let (dim, stride) = (first.descriptor_dim(), first.stride);
        for s in &sequences {
            if s.stride != stride {
                return Err(FeatureError::InvalidArgument("mixed strides in one cache".into()));
            }
            if let Some(e) = s.entries.iter().find(|e| e.descriptor.len() != dim) {
                return Err(FeatureError::DimensionMismatch {
                    got: e.descriptor.len(),
                    want: dim,
                });
            }
        }
        Ok(FeatureCache {
            descriptor_dim: dim,
            stride,
            sequences,
        })
    }

    /// Keeps the entries whose frame offset is a multiple of `stride`.
    ///
    /// `stride` must be a multiple of the cache's own stride.
    pub fn subsample(&self, stride: u32) -> Result<FeatureCache, FeatureError> {
        if stride == 0 || stride % self.stride != 0 {
            return Err(FeatureError::InvalidArgument(format!(
                "stride {stride} is not a multiple of the cache stride {}",
                self.stride
            )));
        }
        let sequences = self
            .sequences
            .iter()
            .map(|s| ShotDescriptorSequence {
                shot: s.shot.clone(),
                stride,
                entries: s.entries.iter().filter(|e| e.frame_offset % stride == 0).cloned().collect(),
            })
            .collect();
        Ok(FeatureCache {
            descriptor_dim: self.descriptor_dim,
            stride,
            sequences,
        })
    }

    /// Latest frame covered by any shot, in minutes from its operation's start.
    pub fn latest_minute(&self) -> f64 {
        self.sequences
            .iter()
            .filter_map(|s| s.entries.last())
            .map(|e| e.elapsed_minutes)
            .fold(0.0, f64::max)
    }

    /// Exact encoded size in bytes.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN
            + self
                .sequences
                .iter()
                .map(|s| 2 + s.shot.video_id.len() + 1 + 4 + 4 + 8 + s.entries.len() * (8 + 4 * self.descriptor_dim))
                .sum::<usize>()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, FeatureError> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.descriptor_dim as u32).to_le_bytes());
        out.extend_from_slice(&self.stride.to_le_bytes());
        out.extend_from_slice(&(self.sequences.len() as u32).to_le_bytes());
        for s in &self.sequences {
            let id = s.shot.video_id.as_bytes();
            let id_len = u16::try_from(id.len())
                .map_err(|_| FeatureError::InvalidArgument(format!("video id too long: {}", id.len())))?;
            out.extend_from_slice(&id_len.to_le_bytes());
            out.extend_from_slice(id);
            out.push(s.shot.phase.index() as u8);
            out.extend_from_slice(&s.shot.start_frame.to_le_bytes());
            out.extend_from_slice(&(s.entries.len() as u32).to_le_bytes());
            out.extend_from_slice(&s.shot.elapsed_minutes.to_le_bytes());
            for e in &s.entries {
                if e.descriptor.len() != self.descriptor_dim {
                    return Err(FeatureError::DimensionMismatch {
                        got: e.descriptor.len(),
                        want: self.descriptor_dim,
                    });
                }
                out.extend_from_slice(&e.elapsed_minutes.to_le_bytes());
                for v in &e.descriptor {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FeatureError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CACHE_MAGIC {
            return Err(FeatureError::BadMagic);
        }
        let version = r.u32()?;
        if version != CACHE_VERSION {
            return Err(FeatureError::VersionMismatch { found: version });
        }
        let dim = r.u32()? as usize;
        let stride = r.u32()?;
        let count = r.u32()? as usize;
        let mut sequences = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let id_len = r.u16()? as usize;
            let video_id = String::from_utf8(r.take(id_len)?.to_vec())
                .map_err(|_| FeatureError::CorruptCache("video id is not UTF-8".into()))?;
            let phase_idx = r.u8()?;
            let phase = Phase::from_index(phase_idx as usize)
                .ok_or_else(|| FeatureError::CorruptCache(format!("phase index {phase_idx}")))?;
            let start_frame = r.u32()?;
            let entry_count = r.u32()? as usize;
            let elapsed_minutes = r.f64()?;
            let mut entries = Vec::with_capacity(entry_count.min(1 << 16));
            for k in 0..entry_count {
                let e = r.f64()?;
                let raw = r.take(4 * dim)?;
                let descriptor = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect();
                entries.push(SequenceEntry {
                    frame_offset: k as u32 * stride,
                    elapsed_minutes: e,
                    descriptor,
                });
            }
            sequences.push(ShotDescriptorSequence {
                shot: Shot {
                    video_id,
                    phase,
                    start_frame,
                    num_frames: SHOT_FRAMES,
                    elapsed_minutes,
                },
                stride,
                entries,
            });
        }
        if r.pos != bytes.len() {
            return Err(FeatureError::CorruptCache(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(FeatureCache {
            descriptor_dim: dim,
            stride,
            sequences,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FeatureError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(FeatureError::TruncatedFile)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FeatureError> {
        Ok(self.take(N)?.try_into().expect("slice of length N"))
    }

    fn u8(&mut self) -> Result<u8, FeatureError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FeatureError> {
        self.array().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32, FeatureError> {
        self.array().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, FeatureError> {
        self.array().map(f64::from_le_bytes)
    }
}

pub fn write_cache(cache: &FeatureCache, path: &Path) -> Result<(), FeatureError> {
    let bytes = cache.to_bytes()?;
    fs::write(path, bytes).map_err(|e| FeatureError::io(path, e))
}

pub fn read_cache(path: &Path) -> Result<FeatureCache, FeatureError> {
    let bytes = fs::read(path).map_err(|e| FeatureError::io(path, e))?;
    FeatureCache::from_bytes(&bytes)
}

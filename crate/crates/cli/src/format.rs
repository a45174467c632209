//! On-disk formats: the TACEMB embedding container and per-video annotation JSON.
//!
//! TACEMB v1, little-endian:
//!
//! ```text
//! magic    "TACE"           4 bytes
//! version  u32 = 1
//! samples  u32              number of sampled frames
//! dim      u32              embedding dimension
//! frames   u64              frame count of the source video
//! fps      f32
//! rate     f32              sample rate used to pick the frames
//! data     f32 * samples * dim, row-major
//! indices  u32 * samples    original-frame index of each sample
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use tacsum_core::evaluator::AnnotatedVideo;
use tacsum_core::model::{EmbeddingSet, SampleMap, VideoMeta};
use tacsum_core::nalgebra::DMatrix;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"TACE";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected \"TACE\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported TACEMB version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated or unreadable file: {0}")]
    Io(#[from] std::io::Error),
    #[error("trailing bytes after payload")]
    TrailingBytes,
    #[error("malformed annotation: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] tacsum_core::Error),
}

pub fn write_tacemb<W: Write>(w: &mut W, set: &EmbeddingSet) -> Result<(), FormatError> {
    let n = u32::try_from(set.num_samples()).map_err(|_| std::io::Error::other("too many samples"))?;
    let d = u32::try_from(set.dim()).map_err(|_| std::io::Error::other("dimension too large"))?;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(n)?;
    w.write_u32::<LittleEndian>(d)?;
    w.write_u64::<LittleEndian>(set.meta.total_frames)?;
    w.write_f32::<LittleEndian>(set.meta.fps as f32)?;
    w.write_f32::<LittleEndian>(set.map.rate as f32)?;
    for i in 0..set.num_samples() {
        for v in set.data.row(i).iter() {
            w.write_f32::<LittleEndian>(*v as f32)?;
        }
    }
    for &idx in &set.map.sample_indices {
        let idx = u32::try_from(idx).map_err(|_| std::io::Error::other("frame index exceeds u32"))?;
        w.write_u32::<LittleEndian>(idx)?;
    }
    Ok(())
}

pub fn read_tacemb<R: Read>(r: &mut R) -> Result<EmbeddingSet, FormatError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let n = r.read_u32::<LittleEndian>()? as usize;
    let d = r.read_u32::<LittleEndian>()? as usize;
    let total_frames = r.read_u64::<LittleEndian>()?;
    let fps = f64::from(r.read_f32::<LittleEndian>()?);
    let rate = f64::from(r.read_f32::<LittleEndian>()?);

    let mut raw = vec![0f32; n * d];
    r.read_f32_into::<LittleEndian>(&mut raw)?;
    let mut indices = vec![0u32; n];
    r.read_u32_into::<LittleEndian>(&mut indices)?;
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(FormatError::TrailingBytes);
    }

    let meta = VideoMeta::new(total_frames, fps)?;
    let map = SampleMap {
        sample_indices: indices.into_iter().map(u64::from).collect(),
        rate,
    };
    let data = DMatrix::from_row_iterator(n, d, raw.into_iter().map(f64::from));
    Ok(EmbeddingSet::new(meta, map, data)?)
}

pub fn load_tacemb(path: &Path) -> Result<EmbeddingSet, FormatError> {
    read_tacemb(&mut BufReader::new(File::open(path)?))
}

pub fn save_tacemb(path: &Path, set: &EmbeddingSet) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tacemb(&mut w, set)?;
    w.flush()?;
    Ok(())
}

/// Annotation file as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub video_id: String,
    pub n_frames: u64,
    pub fps: f64,
    pub change_points: Vec<[usize; 2]>,
    pub user_summaries: Vec<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_scores: Option<Vec<f64>>,
}

impl AnnotationFile {
    pub fn into_video(self) -> Result<AnnotatedVideo, FormatError> {
        let video = AnnotatedVideo {
            video_id: self.video_id,
            meta: VideoMeta::new(self.n_frames, self.fps)?,
            change_points: self.change_points.into_iter().map(|[s, e]| (s, e)).collect(),
            user_summaries: self.user_summaries,
            gt_scores: self.gt_scores,
        };
        video.check()?;
        Ok(video)
    }

    pub fn from_video(video: &AnnotatedVideo) -> Self {
        AnnotationFile {
            video_id: video.video_id.clone(),
            n_frames: video.meta.total_frames,
            fps: video.meta.fps,
            change_points: video.change_points.iter().map(|&(s, e)| [s, e]).collect(),
            user_summaries: video.user_summaries.clone(),
            gt_scores: video.gt_scores.clone(),
        }
    }
}

pub fn load_annotation(path: &Path) -> Result<AnnotatedVideo, FormatError> {
    let file: AnnotationFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    file.into_video()
}

pub fn save_annotation(path: &Path, video: &AnnotatedVideo) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &AnnotationFile::from_video(video))?;
    w.flush()?;
    Ok(())
}

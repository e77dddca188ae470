//! JSONL prediction records: one instance (or an explicit empty frame) per
//! line.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use ripstab_core::annotations::Segmentation;
use ripstab_core::tca::TrackOutput;
use ripstab_core::{BinaryMask, Detection, Error, FrameDetections, FrameGeometry, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub score: f64,
    pub mask: Segmentation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub video_id: String,
    pub frame_index: u64,
    /// `[height, width]`; needed for polygon masks when no RLE of the video
    /// carries the frame size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<[usize; 2]>,
    /// `null` marks a frame processed with no instances.
    #[serde(default)]
    pub instance: Option<InstanceRecord>,
}

/// Parse non-blank lines, numbering them from 1.
pub fn read_records<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, PredictionRecord)>> {
    input.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(text) if text.trim().is_empty() => None,
            Ok(text) => Some(
                serde_json::from_str(&text)
                    .map(|r| (line_no, r))
                    .map_err(|e| Error::InvalidInput(format!("line {line_no}: {e}"))),
            ),
        }
    })
}

pub fn write_record<W: Write>(out: &mut W, record: &PredictionRecord) -> Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// All records of one frame of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBatch {
    pub video_id: String,
    pub frame_index: u64,
    pub size: Option<[usize; 2]>,
    pub instances: Vec<InstanceRecord>,
    /// Line of the first record.
    pub line: usize,
}

/// Groups consecutive records into frames and enforces per-video frame
/// order.
pub struct FrameGrouper<I> {
    records: I,
    pending: Option<FrameBatch>,
    last_frame: HashMap<String, u64>,
    failed: bool,
}

impl<I: Iterator<Item = Result<(usize, PredictionRecord)>>> FrameGrouper<I> {
    pub fn new(records: I) -> Self {
        Self {
            records,
            pending: None,
            last_frame: HashMap::new(),
            failed: false,
        }
    }

    fn start(&mut self, line: usize, r: PredictionRecord) -> Result<FrameBatch> {
        if let Some(&last) = self.last_frame.get(&r.video_id) {
            if r.frame_index <= last {
                return Err(Error::InvalidInput(format!(
                    "line {line}: frame {} of video {:?} follows frame {last}; records of a video must \
                     have increasing frame indices and each frame's records must be contiguous",
                    r.frame_index, r.video_id
                )));
            }
        }
        self.last_frame.insert(r.video_id.clone(), r.frame_index);
        Ok(FrameBatch {
            video_id: r.video_id,
            frame_index: r.frame_index,
            size: r.size,
            instances: r.instance.into_iter().collect(),
            line,
        })
    }
}

impl<I: Iterator<Item = Result<(usize, PredictionRecord)>>> Iterator for FrameGrouper<I> {
    type Item = Result<FrameBatch>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            match self.records.next() {
                None => return self.pending.take().map(Ok),
                Some(Err(e)) => {
                    self.failed = true;
                    return Some(Err(e));
                }
                Some(Ok((line, r))) => {
                    if let Some(p) = &mut self.pending {
                        if p.video_id == r.video_id && p.frame_index == r.frame_index {
                            if p.size.is_none() {
                                p.size = r.size;
                            }
                            p.instances.extend(r.instance);
                            continue;
                        }
                    }
                    let next = match self.start(line, r) {
                        Ok(b) => b,
                        Err(e) => {
                            self.failed = true;
                            return Some(Err(e));
                        }
                    };
                    if let Some(done) = self.pending.replace(next) {
                        return Some(Ok(done));
                    }
                }
            }
        }
    }
}

/// Frame geometry implied by a batch: explicit size or any RLE mask.
pub fn batch_geometry(batch: &FrameBatch) -> Result<Option<FrameGeometry>> {
    if let Some([h, w]) = batch.size {
        return FrameGeometry::new(w, h).map(Some);
    }
    for inst in &batch.instances {
        if let Segmentation::Rle(rle) = &inst.mask {
            return rle.geometry().map(Some);
        }
    }
    Ok(None)
}

/// Decode a batch into detections. `geometry` carries the video's frame
/// size between calls; it is filled from the first batch that reveals it.
pub fn decode_batch(batch: &FrameBatch, geometry: &mut Option<FrameGeometry>) -> Result<FrameDetections> {
    let at = |msg: String| Error::InvalidInput(format!("line {}: {msg}", batch.line));
    if let Some(g) = batch_geometry(batch).map_err(|e| at(e.to_string()))? {
        match geometry {
            Some(known) => known.ensure_same(&g).map_err(|e| at(e.to_string()))?,
            None => *geometry = Some(g),
        }
    }
    let mut dets = Vec::with_capacity(batch.instances.len());
    for inst in &batch.instances {
        let g = geometry.ok_or_else(|| at("polygon mask but no frame size is known for this video".into()))?;
        let mask = inst
            .mask
            .rasterize(g)
            .map_err(|e| at(e.at(format!("video {:?} frame {}", batch.video_id, batch.frame_index)).to_string()))?;
        dets.push(Detection::new(mask, inst.score).map_err(|e| at(e.to_string()))?);
    }
    Ok(FrameDetections::new(batch.frame_index, dets))
}

/// Records for one stabilized frame; an empty frame becomes a single
/// `instance: null` record.
pub fn encode_outputs(video_id: &str, frame_index: u64, outputs: &[TrackOutput]) -> Vec<PredictionRecord> {
    if outputs.is_empty() {
        return vec![PredictionRecord {
            video_id: video_id.to_string(),
            frame_index,
            size: None,
            instance: None,
        }];
    }
    outputs
        .iter()
        .map(|o| PredictionRecord {
            video_id: video_id.to_string(),
            frame_index,
            size: None,
            instance: Some(InstanceRecord {
                score: o.score,
                mask: Segmentation::from_mask(&o.mask),
                track_id: Some(o.track_id.0),
            }),
        })
        .collect()
}

/// Records for raw detections (used by the synthetic generator).
pub fn encode_detections(
    video_id: &str,
    frame_index: u64,
    detections: impl IntoIterator<Item = (BinaryMask, f64)>,
) -> Vec<PredictionRecord> {
    let mut out: Vec<PredictionRecord> = detections
        .into_iter()
        .map(|(mask, score)| PredictionRecord {
            video_id: video_id.to_string(),
            frame_index,
            size: None,
            instance: Some(InstanceRecord {
                score,
                mask: Segmentation::from_mask(&mask),
                track_id: None,
            }),
        })
        .collect();
    if out.is_empty() {
        out.push(PredictionRecord {
            video_id: video_id.to_string(),
            frame_index,
            size: None,
            instance: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn grouped(text: &str) -> Vec<Result<FrameBatch>> {
        FrameGrouper::new(read_records(Cursor::new(text.to_string()))).collect()
    }

    #[test]
    fn groups_contiguous_records() {
        let text = r#"{"video_id":"a","frame_index":0,"instance":{"score":0.9,"mask":{"size":[2,2],"counts":[1,3]}}}
{"video_id":"a","frame_index":0,"instance":{"score":0.8,"mask":{"size":[2,2],"counts":[4]}}}

{"video_id":"b","frame_index":5,"instance":null}
{"video_id":"a","frame_index":1}
"#;
        let batches: Vec<FrameBatch> = grouped(text).into_iter().map(Result::unwrap).collect();
        assert_eq!(batches.len(), 3);
        assert_eq!(batches[0].instances.len(), 2);
        assert_eq!(batches[1].video_id, "b");
        assert_eq!(batches[2].line, 5);
        assert!(batches[2].instances.is_empty());
    }

    #[test]
    fn decreasing_frames_name_the_line() {
        let text = "{\"video_id\":\"a\",\"frame_index\":3}\n{\"video_id\":\"a\",\"frame_index\":2}\n";
        let results = grouped(text);
        let err = results.into_iter().find_map(Result::err).unwrap();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn malformed_line_names_the_line() {
        let results = grouped("{\"video_id\":\"a\",\"frame_index\":0}\nnot json\n");
        let err = results.into_iter().find_map(Result::err).unwrap();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }

    #[test]
    fn polygons_need_a_size() {
        let text = r#"{"video_id":"a","frame_index":0,"instance":{"score":0.9,"mask":[[0,0,2,0,2,2]]}}"#;
        let batch = grouped(text).remove(0).unwrap();
        assert!(decode_batch(&batch, &mut None).is_err());
        let mut g = Some(FrameGeometry::new(4, 4).unwrap());
        let dets = decode_batch(&batch, &mut g).unwrap();
        assert_eq!(dets.detections.len(), 1);
    }

    #[test]
    fn rle_length_error_names_line_and_frame() {
        let text = r#"{"video_id":"a","frame_index":7,"instance":{"score":0.9,"mask":{"size":[2,2],"counts":[1,2]}}}"#;
        let batch = grouped(text).remove(0).unwrap();
        let err = decode_batch(&batch, &mut None).unwrap_err().to_string();
        assert!(err.contains("line 1") && err.contains("frame 7"), "{err}");
    }
}

//! Single-channel PNG masks: 0 for background, 255 for foreground.

use std::io::{Read, Write};

use super::geometry::{BinaryMask, FrameGeometry};
use crate::error::{Error, Result};

pub fn write_mask_png<W: Write>(mask: &BinaryMask, out: W) -> Result<()> {
    let g = mask.geometry();
    let mut encoder = png::Encoder::new(out, g.width() as u32, g.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| Error::Png(e.to_string()))?;
    let data: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    writer
        .write_image_data(&data)
        .map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))
}

/// Read an 8-bit grayscale PNG; any nonzero sample is foreground.
pub fn read_mask_png<R: Read + std::io::BufRead + std::io::Seek>(input: R) -> Result<BinaryMask> {
    let decoder = png::Decoder::new(input);
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale || depth != png::BitDepth::Eight {
        return Err(Error::Png(format!(
            "expected 8-bit single-channel mask, got {color:?}/{depth:?}"
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    let geometry = FrameGeometry::new(info.width as usize, info.height as usize)?;
    let stride = info.line_size;
    let bits = (0..geometry.height())
        .flat_map(|y| buf[y * stride..y * stride + geometry.width()].iter().map(|&v| v != 0))
        .collect();
    BinaryMask::from_bits(geometry, bits)
}

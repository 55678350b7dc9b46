//! Selection snapshot images: the stable selection hash both sides compute,
//! payload validation, and the per-session cache keyed by that hash.

use std::collections::BTreeMap;
use std::io::Cursor;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::protocol::ImageMeta;
use crate::selection::Selection;

/// Stable hash of a selection: SHA-256 over
/// `doc_id "\n" node ids joined by "," "\n" (x,y,w,h or "-")`,
/// hex-encoded and truncated to 128 bits.
pub fn selection_hash(sel: &Selection) -> String {
    let mut ids: Vec<u64> = sel.node_ids.iter().map(|n| n.0).collect();
    ids.sort_unstable();
    let ids = ids.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
    let rect = match sel.region_rect {
        Some(r) => format!("{},{},{},{}", r.x, r.y, r.w, r.h),
        None => "-".to_owned(),
    };
    let digest = Sha256::digest(format!("{}\n{}\n{}", sel.doc_id, ids, rect).as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageError {
    #[error("payload of {size} bytes exceeds the {cap} byte cap")]
    TooLarge { size: usize, cap: usize },
    #[error("payload length {actual} does not match declared byte_len {declared}")]
    LengthMismatch { declared: u64, actual: usize },
    #[error("payload is not a PNG image: {0}")]
    NotPng(String),
    #[error("PNG is {actual_w}x{actual_h}, metadata says {declared_w}x{declared_h}")]
    DimensionMismatch {
        declared_w: u32,
        declared_h: u32,
        actual_w: u32,
        actual_h: u32,
    },
    #[error("image id {0} already names a different selection")]
    IdReused(String),
    #[error("image {0} arrived without a payload")]
    MissingPayload(String),
}

/// Check that `payload` is a PNG matching `meta` and within `cap` bytes.
pub fn validate_image(meta: &ImageMeta, payload: &[u8], cap: usize) -> Result<(), ImageError> {
    if payload.len() > cap {
        return Err(ImageError::TooLarge {
            size: payload.len(),
            cap,
        });
    }
    if let Some(declared) = meta.byte_len {
        if declared != payload.len() as u64 {
            return Err(ImageError::LengthMismatch {
                declared,
                actual: payload.len(),
            });
        }
    }
    let (w, h) = png_dimensions(payload)?;
    if (w, h) != (meta.width_px, meta.height_px) {
        return Err(ImageError::DimensionMismatch {
            declared_w: meta.width_px,
            declared_h: meta.height_px,
            actual_w: w,
            actual_h: h,
        });
    }
    Ok(())
}

/// Width and height from a PNG header.
pub fn png_dimensions(payload: &[u8]) -> Result<(u32, u32), ImageError> {
    let reader = png::Decoder::new(Cursor::new(payload))
        .read_info()
        .map_err(|e| ImageError::NotPng(e.to_string()))?;
    let info = reader.info();
    Ok((info.width, info.height))
}

#[derive(Debug, Clone)]
pub struct StoredImage {
    pub meta: ImageMeta,
    pub payload: Vec<u8>,
    /// Sequence number at which the image became visible.
    pub seq: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ImageStore {
    by_hash: BTreeMap<String, StoredImage>,
}

impl ImageStore {
    /// Store an image, replacing any earlier image for the same selection.
    pub fn put(&mut self, mut meta: ImageMeta, payload: Vec<u8>, seq: u64) -> Result<(), ImageError> {
        let reused = self
            .by_hash
            .values()
            .any(|s| s.meta.image_id == meta.image_id && s.meta.selection_hash != meta.selection_hash);
        if reused {
            return Err(ImageError::IdReused(meta.image_id));
        }
        meta.payload_b64 = None;
        meta.byte_len = Some(payload.len() as u64);
        self.by_hash
            .insert(meta.selection_hash.clone(), StoredImage { meta, payload, seq });
        Ok(())
    }

    pub fn get(&self, selection_hash: &str) -> Option<&StoredImage> {
        self.by_hash.get(selection_hash)
    }

    pub fn by_id(&self, image_id: &str) -> Option<&StoredImage> {
        self.by_hash.values().find(|s| s.meta.image_id == image_id)
    }

    pub fn metas(&self) -> impl Iterator<Item = &ImageMeta> {
        self.by_hash.values().map(|s| &s.meta)
    }
}

/// Encode a solid-color RGBA PNG. Used for fixtures and tests.
pub fn solid_png(width: u32, height: u32, rgba: [u8; 4]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory PNG header");
        let data: Vec<u8> = rgba
            .iter()
            .copied()
            .cycle()
            .take((width * height * 4) as usize)
            .collect();
        writer.write_image_data(&data).expect("in-memory PNG data");
    }
    out
}

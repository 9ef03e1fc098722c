use std::fmt;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{DatasetError, DatasetManifest, Sample};

const PNG_MAGIC: &[u8] = &[0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];
const JPEG_MAGIC: &[u8] = &[0xFF, 0xD8, 0xFF];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Png,
    Jpeg,
}

impl MediaType {
    pub fn mime(self) -> &'static str {
        match self {
            MediaType::Png => "image/png",
            MediaType::Jpeg => "image/jpeg",
        }
    }
}

impl fmt::Display for MediaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MediaType::Png => "png",
            MediaType::Jpeg => "jpeg",
        })
    }
}

/// Identify the format from magic bytes; file extensions are ignored.
pub fn detect_media_type(bytes: &[u8]) -> Option<MediaType> {
    if bytes.starts_with(PNG_MAGIC) {
        Some(MediaType::Png)
    } else if bytes.starts_with(JPEG_MAGIC) {
        Some(MediaType::Jpeg)
    } else {
        None
    }
}

/// An image ready for transport: standard-alphabet, padded base64.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePayload {
    pub sample_id: String,
    pub media_type: MediaType,
    pub bytes_base64: String,
}

impl ImagePayload {
    pub fn from_bytes(sample_id: &str, bytes: &[u8]) -> Option<Self> {
        let media_type = detect_media_type(bytes)?;
        Some(Self {
            sample_id: sample_id.to_string(),
            media_type,
            bytes_base64: STANDARD.encode(bytes),
        })
    }

    pub fn data_url(&self) -> String {
        format!(
            "data:{};base64,{}",
            self.media_type.mime(),
            self.bytes_base64
        )
    }
}

pub fn encode_image(
    sample: &Sample,
    manifest: &DatasetManifest,
) -> Result<ImagePayload, DatasetError> {
    let path = manifest.image_path(sample);
    let bytes = std::fs::read(&path).map_err(|source| DatasetError::Io {
        path: path.clone(),
        source,
    })?;
    ImagePayload::from_bytes(&sample.sample_id, &bytes).ok_or(DatasetError::UnsupportedFormat {
        sample_id: sample.sample_id.clone(),
        path,
    })
}

//! IDX container parsing for the MNIST image and label files.
//!
//! Both raw and gzip-compressed files are accepted; compression is detected
//! from the leading bytes, not the file name.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const ROWS: usize = 28;
pub const COLS: usize = 28;
pub const PIXELS: usize = ROWS * COLS;
pub const N_CLASSES: usize = 10;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImage {
    pixels: Vec<u8>,
    label: u8,
}

impl LabeledImage {
    pub fn new(pixels: Vec<u8>, label: u8) -> Result<Self> {
        if pixels.len() != PIXELS {
            return Err(Error::Range(format!(
                "image has {} pixels, expected {PIXELS}",
                pixels.len()
            )));
        }
        if label as usize >= N_CLASSES {
            return Err(Error::Range(format!(
                "label {label} outside 0..{N_CLASSES}"
            )));
        }
        Ok(Self { pixels, label })
    }

    /// Row-major 28x28 intensities.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn label(&self) -> usize {
        self.label as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stem(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }

    pub fn canonical_len(self) -> usize {
        match self {
            Split::Train => 60_000,
            Split::Test => 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageSet {
    pub images: Vec<LabeledImage>,
    pub split: Split,
}

impl ImageSet {
    pub fn new(images: Vec<LabeledImage>, split: Split) -> Self {
        Self { images, split }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledImage> {
        self.images.iter()
    }

    /// A contiguous sub-range, clamped to the set length.
    pub fn slice(&self, start: usize, len: usize) -> ImageSet {
        let start = start.min(self.images.len());
        let end = start.saturating_add(len).min(self.images.len());
        ImageSet::new(self.images[start..end].to_vec(), self.split)
    }

    /// Loads `<stem>-images-idx3-ubyte[.gz]` and `<stem>-labels-idx1-ubyte[.gz]`
    /// from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>, split: Split) -> Result<Self> {
        let dir = dir.as_ref();
        let images = locate(dir, &format!("{}-images-idx3-ubyte", split.stem()))?;
        let labels = locate(dir, &format!("{}-labels-idx1-ubyte", split.stem()))?;
        Self::load(images, labels, split)
    }

    pub fn load(images: impl AsRef<Path>, labels: impl AsRef<Path>, split: Split) -> Result<Self> {
        let grids = load_images(images)?;
        let labels = load_labels(labels)?;
        Self::pair(grids, labels, split)
    }

    pub fn pair(grids: Vec<Vec<u8>>, labels: Vec<u8>, split: Split) -> Result<Self> {
        if grids.len() != labels.len() {
            return Err(Error::Pairing {
                images: grids.len(),
                labels: labels.len(),
            });
        }
        let images = grids
            .into_iter()
            .zip(labels)
            .map(|(p, l)| LabeledImage::new(p, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(images, split))
    }

    /// Serializes the set back into (image file, label file) IDX bytes.
    pub fn to_idx_bytes(&self) -> (Vec<u8>, Vec<u8>) {
        let grids: Vec<&[u8]> = self.images.iter().map(|i| i.pixels()).collect();
        let labels: Vec<u8> = self.images.iter().map(|i| i.label).collect();
        (encode_images(&grids), encode_labels(&labels))
    }
}

fn locate(dir: &Path, name: &str) -> Result<PathBuf> {
    let raw = dir.join(name);
    if raw.is_file() {
        return Ok(raw);
    }
    let gz = dir.join(format!("{name}.gz"));
    if gz.is_file() {
        return Ok(gz);
    }
    Err(Error::io(
        raw,
        std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "neither raw nor .gz file present",
        ),
    ))
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

pub fn load_images(path: impl AsRef<Path>) -> Result<Vec<Vec<u8>>> {
    parse_images(&read_maybe_gz(path.as_ref())?)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_labels(&read_maybe_gz(path.as_ref())?)
}

struct Header<'a> {
    dims: Vec<usize>,
    payload: &'a [u8],
}

fn read_header<'a>(bytes: &'a [u8], magic: u32, n_dims: usize) -> Result<Header<'a>> {
    let header_len = 4 * (1 + n_dims);
    if bytes.len() < header_len {
        return Err(Error::Length {
            expected: header_len,
            found: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let found = word(0);
    if found != magic {
        return Err(Error::Format(format!(
            "bad magic 0x{found:08x}, expected 0x{magic:08x}"
        )));
    }
    let dims = (1..=n_dims).map(|i| word(i) as usize).collect();
    Ok(Header {
        dims,
        payload: &bytes[header_len..],
    })
}

pub fn parse_images(bytes: &[u8]) -> Result<Vec<Vec<u8>>> {
    let header = read_header(bytes, IMAGE_MAGIC, 3)?;
    let (count, rows, cols) = (header.dims[0], header.dims[1], header.dims[2]);
    if rows != ROWS || cols != COLS {
        return Err(Error::Format(format!(
            "image dimensions {rows}x{cols}, expected {ROWS}x{COLS}"
        )));
    }
    let expected = count * PIXELS;
    if header.payload.len() < expected {
        return Err(Error::Length {
            expected,
            found: header.payload.len(),
        });
    }
    Ok(header.payload[..expected]
        .chunks_exact(PIXELS)
        .map(<[u8]>::to_vec)
        .collect())
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let header = read_header(bytes, LABEL_MAGIC, 1)?;
    let count = header.dims[0];
    if header.payload.len() < count {
        return Err(Error::Length {
            expected: count,
            found: header.payload.len(),
        });
    }
    let labels = header.payload[..count].to_vec();
    if let Some((i, &l)) = labels
        .iter()
        .enumerate()
        .find(|(_, &l)| l as usize >= N_CLASSES)
    {
        return Err(Error::Range(format!("label {l} at index {i} exceeds 9")));
    }
    Ok(labels)
}

pub fn encode_images(grids: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + grids.len() * PIXELS);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(grids.len() as u32).to_be_bytes());
    out.extend_from_slice(&(ROWS as u32).to_be_bytes());
    out.extend_from_slice(&(COLS as u32).to_be_bytes());
    for g in grids {
        out.extend_from_slice(g);
    }
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

//! File formats: 8-bit grayscale images, raw float cubes with a `key=value`
//! header sidecar, raw measurement vectors, and mask files.
//!
//! A raw file `foo.raw` is always paired with a header `foo.raw.hdr`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{imageops::FilterType, GrayImage, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::operators::{MaskStack, ShiftPattern};
use crate::tensor::{GridShape, Measurement, SignalTensor};

/// Ordered `key=value` text with `#` comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                message: format!("expected key=value, got '{line}'"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }

    /// Sets `key`, replacing an earlier value.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    /// Last value for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::invalid(format!("missing key '{key}'")))
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("bad value for '{key}': '{v}'"))),
        }
    }

    pub fn require_parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?
            .ok_or_else(|| Error::invalid(format!("missing key '{key}'")))
    }

    /// Comma-separated list value.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().cloned().collect()
    }
}

impl std::fmt::Display for KeyValues {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn header_path(raw: &Path) -> PathBuf {
    let mut s = raw.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Whether `path` names a raw float cube (by extension).
pub fn is_raw_cube(path: &Path) -> bool {
    matches!(extension(path).as_str(), "raw" | "f32")
}

/// Reads an 8-bit grayscale image; colour input is converted to luma.
/// Values stay in `[0, 255]` and the range is recorded as `(0, 255)`.
pub fn read_image(path: &Path) -> Result<SignalTensor> {
    read_image_resized(path, None)
}

/// As [`read_image`], resampling (Lanczos) to `size × size` when the image differs.
pub fn read_image_resized(path: &Path, size: Option<u32>) -> Result<SignalTensor> {
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .into_luma8();
    let img = match size {
        Some(s) if img.width() != s || img.height() != s => {
            image::imageops::resize(&img, s, s, FilterType::Lanczos3)
        }
        _ => img,
    };
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| f64::from(p.0[0])).collect();
    Ok(SignalTensor::new(data, GridShape::Image { rows, cols })?.with_range(0.0, 255.0))
}

/// Writes a 2D tensor as 8-bit grayscale, scaling its value range onto 0..=255
/// and rounding. Format follows the extension (`.pgm`, `.png`, ...).
pub fn write_image(path: &Path, t: &SignalTensor) -> Result<()> {
    let (rows, cols, frames) = t.shape().dims3();
    if frames != 1 {
        return Err(Error::invalid(format!(
            "cannot write a {} tensor as an image",
            t.shape()
        )));
    }
    let (lo, hi) = t.value_range;
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 1.0 };
    let mut img = GrayImage::new(cols as u32, rows as u32);
    for (i, v) in t.data().iter().enumerate() {
        let q = ((v - lo) * scale).round().clamp(0.0, 255.0) as u8;
        img.put_pixel((i % cols) as u32, (i / cols) as u32, Luma([q]));
    }
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a raw little-endian `f32` cube and its header (`rows`, `cols`, `frames`).
pub fn read_cube(path: &Path) -> Result<SignalTensor> {
    let hdr = KeyValues::read(&header_path(path))?;
    let rows: usize = hdr.require_parsed("rows")?;
    let cols: usize = hdr.require_parsed("cols")?;
    let frames: usize = hdr.parsed("frames")?.unwrap_or(1);
    let lo: f64 = hdr.parsed("value_lo")?.unwrap_or(0.0);
    let hi: f64 = hdr.parsed("value_hi")?.unwrap_or(1.0);
    if let Some(dtype) = hdr.get("dtype") {
        if dtype != "f32le" {
            return Err(Error::invalid(format!("unsupported cube dtype '{dtype}'")));
        }
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let shape = if frames > 1 {
        GridShape::Volume { rows, cols, frames }
    } else {
        GridShape::Image { rows, cols }
    };
    if bytes.len() != shape.len() * 4 {
        return Err(Error::ShapeMismatch {
            expected: shape.len() * 4,
            actual: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    Ok(SignalTensor::new(data, shape)?.with_range(lo, hi))
}

pub fn write_cube(path: &Path, t: &SignalTensor) -> Result<()> {
    let (rows, cols, frames) = t.shape().dims3();
    let mut hdr = KeyValues::new();
    hdr.set("rows", rows);
    hdr.set("cols", cols);
    hdr.set("frames", frames);
    hdr.set("dtype", "f32le");
    hdr.set("value_lo", t.value_range.0);
    hdr.set("value_hi", t.value_range.1);
    let bytes: Vec<u8> = t
        .data()
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    hdr.write(&header_path(path))
}

/// Image or cube, chosen by extension.
pub fn read_signal(path: &Path) -> Result<SignalTensor> {
    if is_raw_cube(path) {
        read_cube(path)
    } else {
        read_image(path)
    }
}

pub fn write_signal(path: &Path, t: &SignalTensor) -> Result<()> {
    if is_raw_cube(path) || t.shape().frames() > 1 {
        write_cube(path, t)
    } else {
        write_image(path, t)
    }
}

/// Raw little-endian `f64` measurement plus a `length` header.
pub fn write_measurement(path: &Path, y: &Measurement) -> Result<()> {
    let bytes: Vec<u8> = y.data().iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mut hdr = KeyValues::new();
    hdr.set("length", y.len());
    hdr.set("dtype", "f64le");
    hdr.write(&header_path(path))
}

pub fn read_measurement(path: &Path) -> Result<Measurement> {
    let hdr = KeyValues::read(&header_path(path))?;
    let length: usize = hdr.require_parsed("length")?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != length * 8 {
        return Err(Error::ShapeMismatch {
            expected: length * 8,
            actual: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Measurement::new(data))
}

fn format_shifts(shifts: &[(isize, isize)]) -> String {
    shifts
        .iter()
        .map(|(dy, dx)| format!("{dy}:{dx}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_shifts(text: &str) -> Result<Vec<(isize, isize)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("bad shift '{s}', expected dy:dx")))?;
            let dy = a.trim().parse().map_err(|_| Error::invalid(format!("bad shift '{s}'")))?;
            let dx = b.trim().parse().map_err(|_| Error::invalid(format!("bad shift '{s}'")))?;
            Ok((dy, dx))
        })
        .collect()
}

/// Reads a mask.
///
/// * Image files: nonzero pixels become 1; frames use `pattern` with `frames` shifts.
/// * `.mask` files: one byte per base pixel, header with `rows`, `cols`,
///   `frames` and `shifts` (`dy:dx,dy:dx,...`).
pub fn read_mask(path: &Path, frames: usize, pattern: ShiftPattern) -> Result<MaskStack> {
    if extension(path) == "mask" {
        let hdr = KeyValues::read(&header_path(path))?;
        let rows: usize = hdr.require_parsed("rows")?;
        let cols: usize = hdr.require_parsed("cols")?;
        let shifts = match hdr.get("shifts") {
            Some(s) => parse_shifts(s)?,
            None => pattern.shifts(hdr.require_parsed("frames")?),
        };
        if let Some(n) = hdr.parsed::<usize>("frames")? {
            if n != shifts.len() {
                return Err(Error::invalid(format!(
                    "mask header lists {} shifts for {n} frames",
                    shifts.len()
                )));
            }
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let base = bytes.into_iter().map(|b| u8::from(b != 0)).collect();
        MaskStack::new(rows, cols, base, shifts)
    } else {
        let img = read_image(path)?;
        let (rows, cols, _) = img.shape().dims3();
        let base = img.data().iter().map(|&v| u8::from(v != 0.0)).collect();
        MaskStack::new(rows, cols, base, pattern.shifts(frames))
    }
}

pub fn write_mask(path: &Path, stack: &MaskStack) -> Result<()> {
    fs::write(path, stack.base()).map_err(|e| Error::io(path, e))?;
    let mut hdr = KeyValues::new();
    hdr.set("rows", stack.rows());
    hdr.set("cols", stack.cols());
    hdr.set("frames", stack.n_frames());
    hdr.set("shifts", format_shifts(stack.shifts()));
    hdr.write(&header_path(path))
}

//! PNG / TIFF decoding into [`IntensityImage`] and 16-bit PNG encoding.
//!
//! Samples are kept as linear integer values: no gamma transform and no
//! normalization, so an 8-bit pixel of 200 and a 16-bit pixel of 200 load to
//! the same intensity.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BitDepth, IntensityImage};
use crate::scalar::Scalar;

/// How RGB rasters are reduced to one intensity channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelPolicy {
    /// Grayscale input required; RGB input is rejected.
    #[default]
    Gray,
    Red,
    Green,
    /// Rec. 601 weights `0.299 R + 0.587 G + 0.114 B` on the linear values.
    Luminance,
}

impl std::str::FromStr for ChannelPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gray" | "grey" => Ok(ChannelPolicy::Gray),
            "red" => Ok(ChannelPolicy::Red),
            "green" => Ok(ChannelPolicy::Green),
            "luminance" | "luma" => Ok(ChannelPolicy::Luminance),
            other => Err(format!("unknown channel policy '{other}'")),
        }
    }
}

/// Decoded samples before channel reduction.
struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    depth: BitDepth,
    samples: Vec<u16>,
}

pub fn load_image<T: Scalar>(path: impl AsRef<Path>, policy: ChannelPolicy) -> Result<IntensityImage<T>> {
    let path = path.as_ref();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileNotFound(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 8];
    let n = read_prefix(&mut reader, &mut magic)?;
    reader.seek(SeekFrom::Start(0))?;
    let raster = if n >= 8 && magic == *b"\x89PNG\r\n\x1a\n" {
        decode_png(reader)?
    } else if n >= 4 && (&magic[..4] == b"II*\0" || &magic[..4] == b"MM\0*") {
        decode_tiff(reader)?
    } else {
        return Err(Error::UnsupportedFormat(format!(
            "{} is neither PNG nor TIFF",
            path.display()
        )));
    };
    reduce(raster, policy)
}

fn read_prefix(r: &mut impl Read, buf: &mut [u8]) -> Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}

fn decode_png(reader: BufReader<File>) -> Result<Raster> {
    let corrupt = |e: png::DecodingError| Error::CorruptData(e.to_string());
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(corrupt)?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedFormat("palettized PNG".into()))
        }
        png::ColorType::Rgba => {
            return Err(Error::UnsupportedFormat("PNG with 4 channels".into()))
        }
    };
    let depth = match depth {
        png::BitDepth::Eight => BitDepth::Eight,
        png::BitDepth::Sixteen => BitDepth::Sixteen,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "PNG bit depth {other:?}; only 8 and 16 are supported"
            )))
        }
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::CorruptData("PNG dimensions overflow".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(corrupt)?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    let line = frame.line_size;
    let bytes_per_sample = if depth == BitDepth::Sixteen { 2 } else { 1 };
    let mut samples = Vec::with_capacity(width * height * channels);
    for y in 0..height {
        let row = &buf[y * line..y * line + width * channels * bytes_per_sample];
        match depth {
            BitDepth::Eight => samples.extend(row.iter().map(|&b| b as u16)),
            BitDepth::Sixteen => samples.extend(
                row.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]])),
            ),
        }
    }
    // Alpha carries no intensity; keep only the gray channel.
    let (channels, samples) = if channels == 2 {
        (1, samples.chunks_exact(2).map(|c| c[0]).collect())
    } else {
        (channels, samples)
    };
    Ok(Raster {
        width,
        height,
        channels,
        depth,
        samples,
    })
}

fn decode_tiff(reader: BufReader<File>) -> Result<Raster> {
    use tiff::decoder::{Decoder, DecodingResult};
    use tiff::ColorType;

    let corrupt = |e: tiff::TiffError| match e {
        tiff::TiffError::UnsupportedError(u) => Error::UnsupportedFormat(u.to_string()),
        other => Error::CorruptData(other.to_string()),
    };
    let mut decoder = Decoder::new(reader).map_err(corrupt)?;
    let (w, h) = decoder.dimensions().map_err(corrupt)?;
    let channels = match decoder.colortype().map_err(corrupt)? {
        ColorType::Gray(8 | 16) => 1,
        ColorType::RGB(8 | 16) => 3,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "TIFF color type {other:?}"
            )))
        }
    };
    let (depth, samples) = match decoder.read_image().map_err(corrupt)? {
        DecodingResult::U8(v) => (BitDepth::Eight, v.into_iter().map(u16::from).collect()),
        DecodingResult::U16(v) => (BitDepth::Sixteen, v),
        _ => return Err(Error::UnsupportedFormat("TIFF sample format".into())),
    };
    let (width, height) = (w as usize, h as usize);
    if samples.len() != width * height * channels {
        return Err(Error::CorruptData(format!(
            "TIFF holds {} samples for {width}x{height}x{channels}",
            samples.len()
        )));
    }
    Ok(Raster {
        width,
        height,
        channels,
        depth,
        samples,
    })
}

fn reduce<T: Scalar>(raster: Raster, policy: ChannelPolicy) -> Result<IntensityImage<T>> {
    let Raster {
        width,
        height,
        channels,
        depth,
        samples,
    } = raster;
    let pixels: Vec<T> = if channels == 1 {
        samples.iter().map(|&s| T::of(s as f64)).collect()
    } else {
        let pick: fn(&[u16]) -> f64 = match policy {
            ChannelPolicy::Gray => {
                return Err(Error::UnsupportedFormat(
                    "RGB input needs a channel policy (red, green or luminance)".into(),
                ))
            }
            ChannelPolicy::Red => |p| p[0] as f64,
            ChannelPolicy::Green => |p| p[1] as f64,
            ChannelPolicy::Luminance => {
                |p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
            }
        };
        samples.chunks_exact(channels).map(|p| T::of(pick(p))).collect()
    };
    IntensityImage::with_bit_depth(width, height, pixels, depth)
}

/// Writes `img` as a 16-bit grayscale PNG. Intensities are rounded and
/// clamped to `0..=65535`.
pub fn save_png16<T: Scalar>(img: &IntensityImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let encode = |e: png::EncodingError| Error::Io(std::io::Error::other(e.to_string()));
    let mut writer = encoder.write_header().map_err(encode)?;
    let mut data = Vec::with_capacity(img.pixels().len() * 2);
    for &v in img.pixels() {
        let s = v.as_f64().round().clamp(0.0, u16::MAX as f64) as u16;
        data.extend_from_slice(&s.to_be_bytes());
    }
    writer.write_image_data(&data).map_err(encode)?;
    writer.finish().map_err(encode)?;
    Ok(())
}

/// Writes `img` as an 8-bit grayscale PNG, clamping to `0..=255`.
pub fn save_png8<T: Scalar>(img: &IntensityImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let encode = |e: png::EncodingError| Error::Io(std::io::Error::other(e.to_string()));
    let mut writer = encoder.write_header().map_err(encode)?;
    let data: Vec<u8> = img
        .pixels()
        .iter()
        .map(|v| v.as_f64().round().clamp(0.0, 255.0) as u8)
        .collect();
    writer.write_image_data(&data).map_err(encode)?;
    writer.finish().map_err(encode)?;
    Ok(())
}

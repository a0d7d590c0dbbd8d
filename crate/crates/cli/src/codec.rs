//! PNG / binary PPM+PGM input and PNG output.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageError, ImageFormat, ImageReader, Luma, Rgb};
use nirfuse::{ImagePair, Plane, RgbImage};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(CliError::Usage(format!(
                "bit depth must be 8 or 16, got {other}"
            ))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    fn max_code(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// A decoded image: one plane for gray sources, three for color.
#[derive(Clone, Debug)]
pub enum Decoded {
    Gray(Plane),
    Color(RgbImage),
}

impl Decoded {
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            Decoded::Gray(p) => p.dimensions(),
            Decoded::Color(c) => c.dimensions(),
        }
    }

    pub fn into_rgb(self) -> RgbImage {
        match self {
            Decoded::Gray(p) => RgbImage::from_gray(&p),
            Decoded::Color(c) => c,
        }
    }

    pub fn into_gray(self) -> Plane {
        match self {
            Decoded::Gray(p) => p,
            Decoded::Color(c) => c.luma(),
        }
    }
}

fn image_error(path: &Path, err: ImageError) -> CliError {
    match err {
        ImageError::IoError(e) => CliError::io(path, e),
        other => CliError::Format {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

fn to_planes<T: Copy>(
    w: usize,
    h: usize,
    k: usize,
    raw: &[T],
    scale: impl Fn(T) -> f64,
) -> Vec<Plane> {
    (0..k)
        .map(|c| {
            let data = raw.iter().skip(c).step_by(k).map(|&v| scale(v)).collect();
            Plane::from_vec(w, h, data).expect("decoder buffer matches dimensions")
        })
        .collect()
}

/// Decodes an image file to `[0, 1]` planes. 8-bit codes are divided by 255,
/// 16-bit codes by 65535. Alpha is dropped.
pub fn load_image(path: &Path) -> Result<Decoded> {
    let reader = ImageReader::open(path)
        .map_err(|e| CliError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| CliError::io(path, e))?;
    let img = reader.decode().map_err(|e| image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "empty image".into(),
        });
    }
    let color = img.color();
    let wide = color.bytes_per_pixel() / color.channel_count() > 1;
    let planes = match (color.has_color(), wide) {
        (false, false) => to_planes(w, h, 1, img.to_luma8().as_raw(), |v: u8| {
            f64::from(v) / 255.0
        }),
        (false, true) => to_planes(w, h, 1, img.to_luma16().as_raw(), |v: u16| {
            f64::from(v) / 65535.0
        }),
        (true, false) => to_planes(w, h, 3, img.to_rgb8().as_raw(), |v: u8| {
            f64::from(v) / 255.0
        }),
        (true, true) => to_planes(w, h, 3, img.to_rgb16().as_raw(), |v: u16| {
            f64::from(v) / 65535.0
        }),
    };
    let mut it = planes.into_iter();
    let first = it.next().expect("at least one plane");
    Ok(match (it.next(), it.next()) {
        (Some(g), Some(b)) => Decoded::Color(RgbImage::new(first, g, b)?),
        _ => Decoded::Gray(first),
    })
}

/// Loads a registered pair. A gray visible image is replicated to three
/// channels and a color NIR image is reduced to luma.
pub fn load_pair(vis_path: &Path, nir_path: &Path) -> Result<ImagePair> {
    let vis = load_image(vis_path)?;
    let nir = load_image(nir_path)?;
    if vis.dimensions() != nir.dimensions() {
        return Err(CliError::Dimensions {
            path: nir_path.to_path_buf(),
            vis: vis.dimensions(),
            nir: nir.dimensions(),
        });
    }
    Ok(ImagePair::new(vis.into_rgb(), nir.into_gray())?)
}

/// Integer code for `v`, rounding half up after clamping to `[0, 1]`.
pub fn quantize(v: f64, depth: BitDepth) -> u16 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * depth.max_code() + 0.5).floor() as u16
}

fn interleave(planes: &[&Plane], depth: BitDepth) -> Vec<u16> {
    let n = planes[0].len();
    let mut out = Vec::with_capacity(n * planes.len());
    for i in 0..n {
        for p in planes {
            out.push(quantize(p.as_slice()[i], depth));
        }
    }
    out
}

fn encode(planes: &[&Plane], depth: BitDepth) -> DynamicImage {
    let (w, h) = planes[0].dimensions();
    let (w, h) = (w as u32, h as u32);
    let codes = interleave(planes, depth);
    let buffer = "decoded buffer matches dimensions";
    match (planes.len(), depth) {
        (1, BitDepth::Eight) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, codes.iter().map(|&c| c as u8).collect())
                .expect(buffer),
        ),
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, codes).expect(buffer),
        ),
        (_, BitDepth::Eight) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, codes.iter().map(|&c| c as u8).collect())
                .expect(buffer),
        ),
        (_, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, codes).expect(buffer),
        ),
    }
}

/// Writes planes as PNG. The file is encoded into a temporary file next to
/// `path` and renamed into place, so readers never see a partial image.
fn write_png(planes: &[&Plane], path: &Path, depth: BitDepth) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".nirfuse-")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(|e| CliError::io(dir, e))?;
    {
        let mut writer = BufWriter::new(tmp.as_file_mut());
        encode(planes, depth)
            .write_to(&mut writer, ImageFormat::Png)
            .map_err(|e| image_error(path, e))?;
        writer
            .into_inner()
            .map_err(|e| CliError::io(path, e.into_error()))?;
    }
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Saves an RGB image as PNG at the given bit depth.
pub fn save_image(image: &RgbImage, path: &Path, depth: BitDepth) -> Result<()> {
    write_png(&image.channels(), path, depth)
}

/// Saves a single plane as a grayscale PNG.
pub fn save_gray(plane: &Plane, path: &Path, depth: BitDepth) -> Result<()> {
    write_png(&[plane], path, depth)
}

/// Creates `dir` (and parents) if missing.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

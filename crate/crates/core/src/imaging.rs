//! Raster types shared by every stage of the pipeline, plus PNG I/O,
//! CIELAB conversion and Sobel gradients.
//!
//! Color samples live in `[0, 1]` as `f64` internally; 8-bit values only
//! appear at the encode/decode boundary.

use std::io::Cursor;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage as Rgb8Image};

use crate::error::{MattingError, Result};

/// A decoded color raster, row-major, three channels per pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(MattingError::InvalidRaster(format!(
                "empty image {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(MattingError::InvalidRaster(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height * 3,
                data.len()
            )));
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(MattingError::InvalidRaster(format!(
                "sample {v} at index {i} is outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Color of the pixel with row-major index `i`.
    #[inline]
    pub fn color(&self, i: usize) -> [f64; 3] {
        [self.data[3 * i], self.data[3 * i + 1], self.data[3 * i + 2]]
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.color(y * self.width + x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Foreground,
    Background,
    Unknown,
}

impl Label {
    pub fn is_known(self) -> bool {
        self != Label::Unknown
    }

    /// Known opacity: 1 for foreground, 0 for everything else.
    pub fn beta(self) -> f64 {
        if self == Label::Foreground {
            1.0
        } else {
            0.0
        }
    }

    pub fn from_gray(value: u8) -> Self {
        match value {
            255 => Label::Foreground,
            0 => Label::Background,
            _ => Label::Unknown,
        }
    }

    pub fn to_gray(self) -> u8 {
        match self {
            Label::Foreground => 255,
            Label::Background => 0,
            Label::Unknown => 128,
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            Label::Foreground => Label::Background,
            Label::Background => Label::Foreground,
            Label::Unknown => Label::Unknown,
        }
    }
}

/// Per-pixel foreground / background / unknown labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trimap {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl Trimap {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(MattingError::InvalidRaster(format!(
                "trimap {width}x{height} with {} labels",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Label,
    ) -> Result<Self> {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Foreground and background labels exchanged; unknown stays unknown.
    pub fn swapped(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|l| l.swapped()).collect(),
        }
    }

    pub fn check_matches(&self, img: &RgbImage) -> Result<()> {
        if self.width != img.width() || self.height != img.height() {
            return Err(MattingError::DimensionMismatch(format!(
                "image is {}x{}, trimap is {}x{}",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}

/// CIELAB raster with every channel rescaled to `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LabImage {
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height * 3 {
            return Err(MattingError::InvalidRaster(format!(
                "lab image {width}x{height} with {} samples",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn color(&self, i: usize) -> [f64; 3] {
        [self.data[3 * i], self.data[3 * i + 1], self.data[3 * i + 2]]
    }
}

/// Horizontal (`gx`) and vertical (`gy`) Sobel responses, three channels each.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMaps {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

/// Per-pixel opacity field.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatte {
    pub width: usize,
    pub height: usize,
    pub alpha: Vec<f64>,
}

impl AlphaMatte {
    pub fn new(width: usize, height: usize, alpha: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || alpha.len() != width * height {
            return Err(MattingError::InvalidRaster(format!(
                "matte {width}x{height} with {} values",
                alpha.len()
            )));
        }
        Ok(Self {
            width,
            height,
            alpha,
        })
    }

    pub fn clamped(mut self) -> Self {
        for a in &mut self.alpha {
            *a = a.clamp(0.0, 1.0);
        }
        self
    }
}

fn load(bytes: &[u8]) -> Result<DynamicImage> {
    if bytes.is_empty() {
        return Err(MattingError::Decode("empty input".into()));
    }
    image::load_from_memory(bytes).map_err(|e| MattingError::Decode(e.to_string()))
}

fn encode_png(img: DynamicImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| MattingError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}

/// Decodes an 8-bit RGB or RGBA file. Alpha, if present, is dropped.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage> {
    let rgb = match load(bytes)? {
        DynamicImage::ImageRgb8(img) => img,
        DynamicImage::ImageRgba8(img) => DynamicImage::ImageRgba8(img).to_rgb8(),
        other => {
            return Err(MattingError::ChannelCount(format!("{:?}", other.color())));
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect();
    RgbImage::new(w, h, data)
}

/// Re-encodes a color image as an 8-bit RGB PNG (`round(v * 255)`).
pub fn encode_image(img: &RgbImage) -> Result<Vec<u8>> {
    let raw = img.data().iter().map(|&v| to_u8(v)).collect();
    let buf = Rgb8Image::from_raw(img.width() as u32, img.height() as u32, raw)
        .ok_or_else(|| MattingError::Encode("buffer size".into()))?;
    encode_png(DynamicImage::ImageRgb8(buf))
}

/// Reads a single-channel 8-bit raster. Color files are accepted only when
/// every pixel has equal channels.
pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    match load(bytes)? {
        DynamicImage::ImageLuma8(img) => Ok(img),
        DynamicImage::ImageLumaA8(img) => Ok(DynamicImage::ImageLumaA8(img).to_luma8()),
        DynamicImage::ImageRgb8(img) => {
            collapse_channels(img.width(), img.height(), img.as_raw(), 3)
        }
        DynamicImage::ImageRgba8(img) => {
            collapse_channels(img.width(), img.height(), img.as_raw(), 4)
        }
        other => Err(MattingError::ChannelCount(format!("{:?}", other.color()))),
    }
}

fn collapse_channels(width: u32, height: u32, raw: &[u8], stride: usize) -> Result<GrayImage> {
    let mut out = Vec::with_capacity(raw.len() / stride);
    for (i, px) in raw.chunks_exact(stride).enumerate() {
        if px[0] != px[1] || px[1] != px[2] {
            return Err(MattingError::TrimapFormat {
                x: i % width as usize,
                y: i / width as usize,
            });
        }
        out.push(px[0]);
    }
    GrayImage::from_raw(width, height, out)
        .ok_or_else(|| MattingError::Decode("buffer size".into()))
}

/// Gray 255 is foreground, 0 is background, anything else unknown.
pub fn decode_trimap(bytes: &[u8]) -> Result<Trimap> {
    let gray = decode_gray(bytes)?;
    let labels = gray.as_raw().iter().map(|&v| Label::from_gray(v)).collect();
    Trimap::new(gray.width() as usize, gray.height() as usize, labels)
}

pub fn encode_trimap(tri: &Trimap) -> Result<Vec<u8>> {
    let raw = tri.labels().iter().map(|l| l.to_gray()).collect();
    encode_gray(tri.width(), tri.height(), raw)
}

/// Decodes a grayscale matte as `value / 255`.
pub fn decode_matte(bytes: &[u8]) -> Result<AlphaMatte> {
    let gray = decode_gray(bytes)?;
    let alpha = gray
        .as_raw()
        .iter()
        .map(|&v| f64::from(v) / 255.0)
        .collect();
    AlphaMatte::new(gray.width() as usize, gray.height() as usize, alpha)
}

/// Encodes a matte as 8-bit grayscale PNG. Alphas must already be in `[0, 1]`.
pub fn encode_matte(matte: &AlphaMatte) -> Result<Vec<u8>> {
    let raw = matte_to_gray(matte)?;
    encode_gray(matte.width, matte.height, raw)
}

/// `round(alpha * 255)` per pixel.
pub fn matte_to_gray(matte: &AlphaMatte) -> Result<Vec<u8>> {
    matte
        .alpha
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if (0.0..=1.0).contains(&value) {
                Ok(to_u8(value))
            } else {
                Err(MattingError::AlphaOutOfRange { index, value })
            }
        })
        .collect()
}

pub fn encode_gray(width: usize, height: usize, raw: Vec<u8>) -> Result<Vec<u8>> {
    let buf = GrayImage::from_raw(width as u32, height as u32, raw)
        .ok_or_else(|| MattingError::Encode("buffer size".into()))?;
    encode_png(DynamicImage::ImageLuma8(buf))
}

#[inline]
fn to_u8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

// sRGB primaries, D65 white.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// Standard CIELAB `(L, a, b)` of an sRGB color, unscaled.
pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    // White point taken as the image of sRGB white so that neutrals land on a = b = 0.
    let mut t = [0.0; 3];
    for (row, out) in SRGB_TO_XYZ.iter().zip(&mut t) {
        let white: f64 = row.iter().sum();
        *out = (row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2]) / white;
    }
    let [fx, fy, fz] = t.map(lab_f);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Maps L from `[0, 100]` and a, b from `[-128, 127]` linearly onto `[0, 255]`.
pub fn rescale_lab(lab: [f64; 3]) -> [f64; 3] {
    [
        (lab[0] * 255.0 / 100.0).clamp(0.0, 255.0),
        (lab[1] + 128.0).clamp(0.0, 255.0),
        (lab[2] + 128.0).clamp(0.0, 255.0),
    ]
}

pub fn to_lab(img: &RgbImage) -> LabImage {
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|px| rescale_lab(srgb_to_lab([px[0], px[1], px[2]])))
        .collect();
    LabImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// 3x3 Sobel per channel, replicating edge pixels outside the raster.
pub fn gradients(img: &LabImage) -> GradientMaps {
    let (w, h) = (img.width, img.height);
    let src = &img.data;
    let at = |x: isize, y: isize, c: usize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        src[3 * (yc * w + xc) + c]
    };
    let mut gx = vec![0.0; w * h * 3];
    let mut gy = vec![0.0; w * h * 3];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let base = 3 * (y as usize * w + x as usize);
            for c in 0..3 {
                let (tl, t, tr) = (at(x - 1, y - 1, c), at(x, y - 1, c), at(x + 1, y - 1, c));
                let (l, r) = (at(x - 1, y, c), at(x + 1, y, c));
                let (bl, b, br) = (at(x - 1, y + 1, c), at(x, y + 1, c), at(x + 1, y + 1, c));
                gx[base + c] = (tr + 2.0 * r + br) - (tl + 2.0 * l + bl);
                gy[base + c] = (bl + 2.0 * b + br) - (tl + 2.0 * t + tr);
            }
        }
    }
    GradientMaps {
        width: w,
        height: h,
        gx,
        gy,
    }
}

use std::path::Path;

use image::{ColorType, DynamicImage};

use crate::error::{Error, Result};

/// Row-major image with samples in `[0, 1]` and a per-pixel validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
    pub valid: Vec<bool>,
}

impl Raster {
    /// All-zero, all-invalid raster.
    pub fn empty(width: usize, height: usize, channels: usize) -> Self {
        Raster {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
            valid: vec![false; width * height],
        }
    }

    /// Fully valid raster over `data`.
    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
            valid: vec![true; width * height],
        })
    }

    /// Builds a raster by evaluating `f(x, y)` per pixel.
    pub fn from_fn(width: usize, height: usize, channels: usize, f: impl Fn(usize, usize, &mut [f32])) -> Self {
        let mut r = Raster::empty(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                let i = (y * width + x) * channels;
                f(x, y, &mut r.data[i..i + channels]);
            }
        }
        r.valid.fill(true);
        r
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = self.index(x, y) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = self.index(x, y) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.index(x, y)]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Bilinear sample at `(x, y)` with pixel centers on integers. Returns
    /// false outside `[0, w-1] × [0, h-1]` or when a contributing pixel is
    /// invalid.
    pub fn sample_bilinear(&self, x: f64, y: f64, out: &mut [f32]) -> bool {
        const EDGE: f64 = 1e-9;
        let (wm, hm) = ((self.width as f64) - 1.0, (self.height as f64) - 1.0);
        if !(x >= -EDGE && y >= -EDGE && x <= wm + EDGE && y <= hm + EDGE) {
            return false;
        }
        let x = x.clamp(0.0, wm);
        let y = y.clamp(0.0, hm);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let fx = (x - x0 as f64) as f32;
        let fy = (y - y0 as f64) as f32;
        let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
        let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
        if !(self.is_valid(x0, y0) && self.is_valid(x1, y0) && self.is_valid(x0, y1) && self.is_valid(x1, y1)) {
            return false;
        }
        let (p00, p10, p01, p11) = (self.pixel(x0, y0), self.pixel(x1, y0), self.pixel(x0, y1), self.pixel(x1, y1));
        for c in 0..self.channels {
            let top = p00[c] * (1.0 - fx) + p10[c] * fx;
            let bottom = p01[c] * (1.0 - fx) + p11[c] * fx;
            out[c] = top * (1.0 - fy) + bottom * fy;
        }
        true
    }

    /// Luma (Rec. 601 weights) copy; single-channel rasters are cloned.
    pub fn to_gray(&self) -> Raster {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect();
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            valid: self.valid.clone(),
        }
    }

    pub fn to_rgb(&self) -> Raster {
        if self.channels == 3 {
            return self.clone();
        }
        Raster {
            width: self.width,
            height: self.height,
            channels: 3,
            data: self.data.iter().flat_map(|&v| [v, v, v]).collect(),
            valid: self.valid.clone(),
        }
    }

    pub fn from_image(img: &DynamicImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        if img.color().channel_count() <= 2 {
            let buf = img.to_luma32f();
            Raster::from_data(w, h, 1, buf.into_raw()).expect("dimensions agree")
        } else {
            let buf = img.to_rgb32f();
            Raster::from_data(w, h, 3, buf.into_raw()).expect("dimensions agree")
        }
    }

    /// Reads PNG or binary PPM/PGM.
    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::InputMissing(path.display().to_string()));
        }
        let img = image::open(path)?;
        Ok(Raster::from_image(&img))
    }

    /// 8-bit samples; invalid pixels are written as zero.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len());
        for (i, px) in self.data.chunks(self.channels).enumerate() {
            for &v in px {
                out.push(if self.valid[i] { quantize(v) } else { 0 });
            }
        }
        out
    }

    /// Format chosen by extension (`.png`, `.ppm`, `.pgm`).
    pub fn write(&self, path: &Path) -> Result<()> {
        let color = if self.channels == 1 { ColorType::L8 } else { ColorType::Rgb8 };
        image::save_buffer(path, &self.to_bytes(), self.width as u32, self.height as u32, color)?;
        Ok(())
    }
}

#[inline]
fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Peak signal-to-noise ratio in dB over pixels where `mask` holds and both
/// rasters are valid. Returns infinity for identical content.
pub fn psnr(a: &Raster, b: &Raster, mask: impl Fn(usize, usize) -> bool) -> Option<f64> {
    if a.width != b.width || a.height != b.height || a.channels != b.channels {
        return None;
    }
    let mut se = 0.0f64;
    let mut n = 0usize;
    for y in 0..a.height {
        for x in 0..a.width {
            if !(a.is_valid(x, y) && b.is_valid(x, y) && mask(x, y)) {
                continue;
            }
            for (p, q) in a.pixel(x, y).iter().zip(b.pixel(x, y)) {
                se += ((p - q) as f64).powi(2);
                n += 1;
            }
        }
    }
    if n == 0 {
        return None;
    }
    let mse = se / n as f64;
    Some(if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() })
}

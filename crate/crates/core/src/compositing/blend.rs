use std::path::Path;

use image::ColorType;

use super::raster::Raster;
use super::seam::SeamCut;
use crate::error::{Error, Result};

/// Composited canvas with per-pixel source labels (`-1` = empty).
#[derive(Debug, Clone, PartialEq)]
pub struct Mosaic {
    pub canvas: Raster,
    pub labels: Vec<i32>,
    /// Overlap pixels 4-adjacent to a differently labeled pixel, scanline order.
    pub seam: Vec<[usize; 2]>,
    pub sources: usize,
}

impl Mosaic {
    pub fn label(&self, x: usize, y: usize) -> i32 {
        self.labels[y * self.canvas.width + x]
    }

    /// Grayscale label image: empty is black, source `k` of `n` maps to
    /// `255 (k + 1) / n`.
    pub fn label_bytes(&self) -> Vec<u8> {
        let n = self.sources.max(1) as i64;
        self.labels
            .iter()
            .map(|&l| if l < 0 { 0 } else { ((l as i64 + 1) * 255 / n).min(255) as u8 })
            .collect()
    }

    pub fn write_labels(&self, path: &Path) -> Result<()> {
        image::save_buffer(
            path,
            &self.label_bytes(),
            self.canvas.width as u32,
            self.canvas.height as u32,
            ColorType::L8,
        )?;
        Ok(())
    }

    pub fn seam_json(&self) -> String {
        serde_json::to_string(&self.seam).expect("integer pairs serialize")
    }

    pub fn write_seam(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.seam_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Labels for a two-layer composite: the seam cut decides the overlap,
/// validity decides elsewhere. Layer 0 is `a` of the cut.
pub fn pair_labels(a: &Raster, b: &Raster, cut: Option<&SeamCut>) -> Vec<i32> {
    (0..a.valid.len())
        .map(|i| match (a.valid[i], b.valid[i]) {
            (true, true) => match cut {
                Some(c) if !c.from_a[i] => 1,
                _ => 0,
            },
            (true, false) => 0,
            (false, true) => 1,
            (false, false) => -1,
        })
        .collect()
}

/// Copies each pixel from its labeled layer. With `feather_px > 0`, pixels
/// within that distance of a label change average the layers seen in a
/// `(2r + 1)²` window, restricted to layers valid at the pixel.
pub fn blend(layers: &[&Raster], labels: &[i32], feather_px: usize) -> Result<Mosaic> {
    let first = layers
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to blend".into()))?;
    let (w, h, ch) = (first.width, first.height, first.channels);
    if layers.iter().any(|l| l.width != w || l.height != h || l.channels != ch) || labels.len() != w * h {
        return Err(Error::InvalidInput("blend layers disagree in size".into()));
    }
    let mut canvas = Raster::empty(w, h, ch);
    for i in 0..w * h {
        let any_valid = layers.iter().any(|l| l.valid[i]);
        let l = labels[i];
        if l < 0 {
            if any_valid {
                return Err(Error::LabelGap { x: i % w, y: i / w });
            }
            continue;
        }
        let src = layers
            .get(l as usize)
            .filter(|r| r.valid[i])
            .ok_or(Error::LabelGap { x: i % w, y: i / w })?;
        canvas.data[i * ch..(i + 1) * ch].copy_from_slice(&src.data[i * ch..(i + 1) * ch]);
        canvas.valid[i] = true;
    }

    let seam = seam_pixels(layers, labels, w, h);

    if feather_px > 0 {
        let r = feather_px as isize;
        for y in 0..h as isize {
            for x in 0..w as isize {
                let i = (y as usize) * w + x as usize;
                if labels[i] < 0 {
                    continue;
                }
                let mut counts = vec![0usize; layers.len()];
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (xx, yy) = (x + dx, y + dy);
                        if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                            continue;
                        }
                        let l = labels[yy as usize * w + xx as usize];
                        if l >= 0 && layers[l as usize].valid[i] {
                            counts[l as usize] += 1;
                        }
                    }
                }
                let total: usize = counts.iter().sum();
                if counts.iter().filter(|&&c| c > 0).count() < 2 {
                    continue;
                }
                for c in 0..ch {
                    let v: f32 = counts
                        .iter()
                        .enumerate()
                        .filter(|(_, &n)| n > 0)
                        .map(|(k, &n)| n as f32 * layers[k].data[i * ch + c])
                        .sum();
                    canvas.data[i * ch + c] = v / total as f32;
                }
            }
        }
    }

    Ok(Mosaic {
        canvas,
        labels: labels.to_vec(),
        seam,
        sources: layers.len(),
    })
}

fn seam_pixels(layers: &[&Raster], labels: &[i32], w: usize, h: usize) -> Vec<[usize; 2]> {
    let shared = |i: usize| layers.iter().filter(|l| l.valid[i]).count() >= 2;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if labels[i] < 0 || !shared(i) {
                continue;
            }
            let differs = [
                (x > 0).then(|| i - 1),
                (x + 1 < w).then(|| i + 1),
                (y > 0).then(|| i - w),
                (y + 1 < h).then(|| i + w),
            ]
            .into_iter()
            .flatten()
            .any(|j| labels[j] >= 0 && labels[j] != labels[i]);
            if differs {
                out.push([x, y]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositing::seam::{find_seam, overlap_mask};

    fn layer(w: usize, h: usize, valid: impl Fn(usize, usize) -> bool, v: impl Fn(usize, usize) -> f32) -> Raster {
        let mut r = Raster::from_fn(w, h, 1, |x, y, p| p[0] = v(x, y));
        for y in 0..h {
            for x in 0..w {
                r.valid[y * w + x] = valid(x, y);
            }
        }
        r
    }

    #[test]
    fn disjoint_regions_form_union() {
        let a = layer(10, 4, |x, _| x < 4, |_, _| 0.25);
        let b = layer(10, 4, |x, _| x >= 6, |_, _| 0.75);
        let labels = pair_labels(&a, &b, None);
        let m = blend(&[&a, &b], &labels, 0).unwrap();
        for y in 0..4 {
            for x in 0..10 {
                let want = if x < 4 { Some(0.25) } else if x >= 6 { Some(0.75) } else { None };
                assert_eq!(m.canvas.is_valid(x, y), want.is_some());
                if let Some(v) = want {
                    assert_eq!(m.canvas.pixel(x, y)[0], v);
                }
            }
        }
        assert!(m.seam.is_empty());
    }

    #[test]
    fn identical_overlap_is_seam_independent() {
        let f = |x: usize, y: usize| ((x * 7 + y * 3) % 16) as f32 / 16.0;
        let a = layer(12, 6, |x, _| x < 8, f);
        let b = layer(12, 6, |x, _| x >= 3, f);
        let ov = overlap_mask(&a, &b);
        let cut = find_seam(&a, &b, &ov).unwrap();
        let m = blend(&[&a, &b], &pair_labels(&a, &b, Some(&cut)), 0).unwrap();
        let m0 = blend(&[&a, &b], &pair_labels(&a, &b, None), 0).unwrap();
        assert_eq!(m.canvas, m0.canvas);
        for y in 0..6 {
            for x in 0..12 {
                assert_eq!(m.canvas.pixel(x, y)[0], f(x, y));
            }
        }
    }

    #[test]
    fn forced_seam_copies_checkerboards_exactly() {
        let c = 5;
        let check = |x: usize, y: usize| ((x + y) % 2) as f32;
        let a = layer(10, 8, |_, _| true, check);
        let b = layer(10, 8, |_, _| true, |x, y| 1.0 - check(x, y));
        let labels: Vec<i32> = (0..80).map(|i| if i % 10 < c { 0 } else { 1 }).collect();
        let m = blend(&[&a, &b], &labels, 0).unwrap();
        for y in 0..8 {
            for x in 0..10 {
                let want = if x < c { check(x, y) } else { 1.0 - check(x, y) };
                assert_eq!(m.canvas.pixel(x, y)[0], want);
            }
        }
        assert_eq!(m.seam.len(), 16);
        assert!(m.seam.iter().all(|&[x, _]| x == c - 1 || x == c));
    }

    #[test]
    fn unlabeled_valid_pixel_is_a_gap() {
        let a = layer(4, 4, |_, _| true, |_, _| 0.5);
        let mut labels = vec![0; 16];
        labels[6] = -1;
        assert!(matches!(blend(&[&a], &labels, 0), Err(Error::LabelGap { x: 2, y: 1 })));
        labels[6] = 1;
        assert!(matches!(blend(&[&a], &labels, 0), Err(Error::LabelGap { .. })));
    }

    #[test]
    fn feathering_mixes_only_near_the_seam() {
        let a = layer(20, 3, |_, _| true, |_, _| 0.0);
        let b = layer(20, 3, |_, _| true, |_, _| 1.0);
        let labels: Vec<i32> = (0..60).map(|i| if i % 20 < 10 { 0 } else { 1 }).collect();
        let m = blend(&[&a, &b], &labels, 3).unwrap();
        assert_eq!(m.canvas.pixel(5, 1)[0], 0.0);
        assert_eq!(m.canvas.pixel(15, 1)[0], 1.0);
        let left = m.canvas.pixel(9, 1)[0];
        let right = m.canvas.pixel(10, 1)[0];
        assert!(left > 0.0 && left < 0.5 && right > 0.5 && right < 1.0);
    }

    #[test]
    fn label_image_and_seam_json() {
        let a = layer(3, 1, |x, _| x < 2, |_, _| 0.0);
        let b = layer(3, 1, |x, _| x > 0, |_, _| 1.0);
        let labels = vec![0, 1, 1];
        let m = blend(&[&a, &b], &labels, 0).unwrap();
        assert_eq!(m.label_bytes(), vec![127, 255, 255]);
        assert_eq!(m.seam_json(), "[[1,0]]");
    }
}

//! Image quality metrics: full-reference PSNR and SSIM, the no-reference
//! lightness-order error (LOE), and the scalar fitness that drives the
//! optimizer.

use crate::error::{Error, Result};
use crate::imagecore::{ChannelF, ImageF};

/// PSNR is capped here so the fitness stays finite on identical images; any
/// cap above realistic values (< 50 dB) leaves rankings untouched.
pub const PSNR_CAP_DB: f64 = 100.0;

/// SSIM window side length.
const SSIM_WINDOW: usize = 11;
/// SSIM window Gaussian sigma.
const SSIM_SIGMA: f64 = 1.5;
/// SSIM stability constants for dynamic range L = 1.
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// LOE compares pixel pairs on an image downsampled to at most this side
/// length; the full-resolution definition is quadratic in the pixel count.
const LOE_MAX_SIDE: usize = 100;

/// Metric bundle for one enhanced image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Peak signal-to-noise ratio in decibels, capped at [`PSNR_CAP_DB`].
    pub psnr: f64,
    /// Mean structural similarity in `[-1, 1]`.
    pub ssim: f64,
    /// Lightness order error, 0 for order-preserving enhancements.
    pub loe: f64,
    /// `psnr / 100 + ssim`.
    pub fitness: f64,
}

impl MetricReport {
    pub fn new(psnr: f64, ssim: f64, loe: f64) -> Self {
        Self {
            psnr,
            ssim,
            loe,
            fitness: fitness(psnr, ssim),
        }
    }
}

/// Scalar objective combining the two reference metrics with weights
/// 1/100 and 1.
pub fn fitness(psnr: f64, ssim: f64) -> f64 {
    psnr / 100.0 + ssim
}

/// PSNR over all samples with peak 1.0 on the normalized scale (equivalent
/// to a 255 peak on quantized images).
pub fn psnr(a: &ImageF, b: &ImageF) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "psnr: {}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let mut acc = 0.0;
    for (x, y) in a.data().iter().zip(b.data()) {
        let d = x - y;
        acc += d * d;
    }
    let mse = acc / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((-10.0 * mse.log10()).min(PSNR_CAP_DB))
}

/// Luminance plane: mean of the RGB channels, or the plane itself for
/// single-channel images.
fn luminance(img: &ImageF) -> ChannelF {
    let n = img.width() * img.height();
    let data = if img.channels() == 1 {
        img.data().to_vec()
    } else {
        img.data()
            .chunks_exact(3)
            .map(|px| (px[0] + px[1] + px[2]) / 3.0)
            .collect()
    };
    debug_assert_eq!(data.len(), n);
    ChannelF::new(img.width(), img.height(), data).expect("plane shape")
}

/// Normalized 1-D taps of the SSIM window.
fn ssim_taps() -> [f64; SSIM_WINDOW] {
    let radius = (SSIM_WINDOW / 2) as isize;
    let mut taps = [0.0; SSIM_WINDOW];
    let mut sum = 0.0;
    for (k, t) in taps.iter_mut().enumerate() {
        let d = (k as isize - radius) as f64;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *t;
    }
    for t in taps.iter_mut() {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian filtering in "valid" mode: output is
/// `(w - 10) x (h - 10)`, each entry the weighted sum over one full window.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let vw = w - SSIM_WINDOW + 1;
    let vh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; vw * h];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..vw {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * row[x + k];
            }
            rows[y * vw + x] = acc;
        }
    }
    let mut out = vec![0.0; vw * vh];
    for y in 0..vh {
        for x in 0..vw {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * rows[(y + k) * vw + x];
            }
            out[y * vw + x] = acc;
        }
    }
    out
}

/// Precomputed per-window statistics of one image, so scoring many
/// candidates against the same reference skips the redundant passes.
pub struct SsimReference {
    width: usize,
    height: usize,
    channels: usize,
    lum: ChannelF,
    mu: Vec<f64>,
    second_moment: Vec<f64>,
    taps: [f64; SSIM_WINDOW],
}

impl SsimReference {
    pub fn new(img: &ImageF) -> Result<Self> {
        if img.width() < SSIM_WINDOW || img.height() < SSIM_WINDOW {
            return Err(Error::ImageTooSmall {
                min: SSIM_WINDOW,
                width: img.width(),
                height: img.height(),
            });
        }
        let taps = ssim_taps();
        let lum = luminance(img);
        let (w, h) = (img.width(), img.height());
        let mu = filter_valid(lum.data(), w, h, &taps);
        let sq: Vec<f64> = lum.data().iter().map(|&x| x * x).collect();
        let second_moment = filter_valid(&sq, w, h, &taps);
        Ok(Self {
            width: w,
            height: h,
            channels: img.channels(),
            lum,
            mu,
            second_moment,
            taps,
        })
    }

    /// Mean local SSIM of `a` against the cached reference.
    pub fn score(&self, a: &ImageF) -> Result<f64> {
        if a.width() != self.width || a.height() != self.height || a.channels() != self.channels {
            return Err(Error::DimensionMismatch(format!(
                "ssim: {}x{}x{} vs {}x{}x{}",
                a.width(),
                a.height(),
                a.channels(),
                self.width,
                self.height,
                self.channels
            )));
        }
        let (w, h) = (self.width, self.height);
        let lum_a = luminance(a);
        let mu_a = filter_valid(lum_a.data(), w, h, &self.taps);
        let sq: Vec<f64> = lum_a.data().iter().map(|&x| x * x).collect();
        let m_aa = filter_valid(&sq, w, h, &self.taps);
        let cross: Vec<f64> = lum_a
            .data()
            .iter()
            .zip(self.lum.data())
            .map(|(&x, &y)| x * y)
            .collect();
        let m_ab = filter_valid(&cross, w, h, &self.taps);

        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let ma = mu_a[i];
            let mb = self.mu[i];
            let va = m_aa[i] - ma * ma;
            let vb = self.second_moment[i] - mb * mb;
            let cov = m_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2);
            sum += num / den;
        }
        Ok(sum / mu_a.len() as f64)
    }
}

/// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5, K1 = 0.01,
/// K2 = 0.03, L = 1), computed on the luminance plane.
pub fn ssim(a: &ImageF, b: &ImageF) -> Result<f64> {
    SsimReference::new(b)?.score(a)
}

/// Per-pixel lightness: the maximum RGB component.
fn lightness(img: &ImageF) -> Vec<f64> {
    if img.channels() == 1 {
        img.data().to_vec()
    } else {
        img.data()
            .chunks_exact(3)
            .map(|px| px[0].max(px[1]).max(px[2]))
            .collect()
    }
}

/// Nearest-neighbor downsample of a plane onto an evenly spaced grid no
/// larger than `LOE_MAX_SIDE` per side.
fn loe_downsample(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let dw = w.min(LOE_MAX_SIDE);
    let dh = h.min(LOE_MAX_SIDE);
    let mut out = Vec::with_capacity(dw * dh);
    for y in 0..dh {
        let sy = y * h / dh;
        for x in 0..dw {
            let sx = x * w / dw;
            out.push(plane[sy * w + sx]);
        }
    }
    (out, dw, dh)
}

/// Lightness order error: 1000 times the fraction of ordered pixel pairs
/// whose relative lightness ordering the enhancement reverses. Zero for any
/// strictly increasing lightness remap.
pub fn loe(original: &ImageF, enhanced: &ImageF) -> Result<f64> {
    if !original.same_shape(enhanced) {
        return Err(Error::DimensionMismatch(format!(
            "loe: {}x{} vs {}x{}",
            original.width(),
            original.height(),
            enhanced.width(),
            enhanced.height()
        )));
    }
    let lo = lightness(original);
    let le = lightness(enhanced);
    let (lo, dw, dh) = loe_downsample(&lo, original.width(), original.height());
    let (le, _, _) = loe_downsample(&le, original.width(), original.height());
    let n = dw * dh;
    let mut disagreements = 0u64;
    for i in 0..n {
        let (oi, ei) = (lo[i], le[i]);
        for j in 0..n {
            if (oi >= lo[j]) != (ei >= le[j]) {
                disagreements += 1;
            }
        }
    }
    Ok(1000.0 * disagreements as f64 / (n as f64 * n as f64))
}

//! Image buffers and the elementary transforms every pipeline is built from:
//! 8-bit/float conversion, HSV and YCbCr color transforms, min-max
//! normalization, and power-law (gamma) correction.
//!
//! All float processing happens on [`ImageF`]/[`ChannelF`] in double
//! precision with samples in `[0, 1]`; `ImageU8` only appears at the I/O
//! boundary.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageU8 {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ImageU8 {
    /// Wraps a raw RGB buffer. `data.len()` must equal `width * height * 3`.
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidImage(format!(
                "buffer length {} does not match {width}x{height}x3",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Row-major floating-point image with 1 or 3 channels, samples in `[0, 1]`
/// after any normalization step.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageF {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "buffer length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sample(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &ImageF) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

/// Single floating-point plane (V, Y, or any intermediate channel).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelF {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ChannelF {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "buffer length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
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

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn same_shape(&self, other: &ChannelF) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> ChannelF {
        ChannelF {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Scales every 8-bit sample to `[0, 1]` by dividing by 255.
pub fn normalize_u8(img: &ImageU8) -> ImageF {
    ImageF {
        width: img.width,
        height: img.height,
        channels: 3,
        data: img.data.iter().map(|&v| f64::from(v) / 255.0).collect(),
    }
}

/// Snaps one unit-range sample to the 8-bit grid: clamp, scale by 255,
/// round half up.
#[inline]
pub(crate) fn quantize_unit(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Converts a 3-channel float image back to 8-bit RGB.
///
/// Out-of-range samples are clamped; rounding is half-up so the mapping is
/// bit-reproducible. A NaN sample means an upstream pipeline fault and is
/// reported as an error rather than silently clamped.
pub fn denormalize(img: &ImageF) -> Result<ImageU8> {
    if img.channels != 3 {
        return Err(Error::InvalidImage(format!(
            "denormalize expects 3 channels, got {}",
            img.channels
        )));
    }
    let mut data = Vec::with_capacity(img.data.len());
    for &x in &img.data {
        if x.is_nan() {
            return Err(Error::NonFinite("NaN sample in denormalize".into()));
        }
        data.push(quantize_unit(x));
    }
    Ok(ImageU8 {
        width: img.width,
        height: img.height,
        data,
    })
}

/// Snaps every sample of a float image to the 8-bit grid.
///
/// Equivalent to `normalize_u8(&denormalize(img)?)` without building the
/// intermediate byte buffer; used when metrics must score the quantized
/// output.
pub fn quantize(img: &ImageF) -> Result<ImageF> {
    if img.channels != 3 {
        return Err(Error::InvalidImage(format!(
            "quantize expects 3 channels, got {}",
            img.channels
        )));
    }
    let mut data = Vec::with_capacity(img.data.len());
    for &x in &img.data {
        if x.is_nan() {
            return Err(Error::NonFinite("NaN sample in quantize".into()));
        }
        data.push(f64::from(quantize_unit(x)) / 255.0);
    }
    Ok(ImageF {
        width: img.width,
        height: img.height,
        channels: 3,
        data,
    })
}

/// Splits an RGB image into the HSV planes. Hue is scaled to `[0, 1)`,
/// saturation and value stay in `[0, 1]`.
pub fn rgb_to_hsv(img: &ImageF) -> Result<(ChannelF, ChannelF, ChannelF)> {
    if img.channels != 3 {
        return Err(Error::InvalidImage("rgb_to_hsv expects 3 channels".into()));
    }
    let n = img.width * img.height;
    let mut h = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for px in img.data.chunks_exact(3) {
        let (r, g, b) = (px[0], px[1], px[2]);
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        let hue6 = if delta == 0.0 {
            0.0
        } else if max == r {
            ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            (b - r) / delta + 2.0
        } else {
            (r - g) / delta + 4.0
        };
        h.push(hue6 / 6.0);
        s.push(if max > 0.0 { delta / max } else { 0.0 });
        v.push(max);
    }
    let shape = |data| ChannelF {
        width: img.width,
        height: img.height,
        data,
    };
    Ok((shape(h), shape(s), shape(v)))
}

/// Recomposes an RGB image from HSV planes (inverse of [`rgb_to_hsv`]).
pub fn hsv_to_rgb(h: &ChannelF, s: &ChannelF, v: &ChannelF) -> Result<ImageF> {
    if !h.same_shape(s) || !h.same_shape(v) {
        return Err(Error::DimensionMismatch(
            "HSV planes must share dimensions".into(),
        ));
    }
    let mut data = Vec::with_capacity(h.data.len() * 3);
    for i in 0..h.data.len() {
        let (hh, ss, vv) = (h.data[i], s.data[i], v.data[i]);
        let h6 = (hh * 6.0).rem_euclid(6.0);
        let sector = h6.floor();
        let f = h6 - sector;
        let p = vv * (1.0 - ss);
        let q = vv * (1.0 - ss * f);
        let t = vv * (1.0 - ss * (1.0 - f));
        let (r, g, b) = match sector as u32 {
            0 => (vv, t, p),
            1 => (q, vv, p),
            2 => (p, vv, t),
            3 => (p, q, vv),
            4 => (t, p, vv),
            _ => (vv, p, q),
        };
        data.push(r);
        data.push(g);
        data.push(b);
    }
    Ok(ImageF {
        width: h.width,
        height: h.height,
        channels: 3,
        data,
    })
}

/// BT.601 full-range RGB to YCbCr; chroma planes are centered on 0.5.
pub fn rgb_to_ycbcr(img: &ImageF) -> Result<(ChannelF, ChannelF, ChannelF)> {
    if img.channels != 3 {
        return Err(Error::InvalidImage("rgb_to_ycbcr expects 3 channels".into()));
    }
    let n = img.width * img.height;
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for px in img.data.chunks_exact(3) {
        let (r, g, b) = (px[0], px[1], px[2]);
        let luma = 0.299 * r + 0.587 * g + 0.114 * b;
        y.push(luma);
        cb.push(0.5 + (b - luma) / 1.772);
        cr.push(0.5 + (r - luma) / 1.402);
    }
    let shape = |data| ChannelF {
        width: img.width,
        height: img.height,
        data,
    };
    Ok((shape(y), shape(cb), shape(cr)))
}

/// Inverse of [`rgb_to_ycbcr`].
pub fn ycbcr_to_rgb(y: &ChannelF, cb: &ChannelF, cr: &ChannelF) -> Result<ImageF> {
    if !y.same_shape(cb) || !y.same_shape(cr) {
        return Err(Error::DimensionMismatch(
            "YCbCr planes must share dimensions".into(),
        ));
    }
    let mut data = Vec::with_capacity(y.data.len() * 3);
    for i in 0..y.data.len() {
        let luma = y.data[i];
        let r = luma + 1.402 * (cr.data[i] - 0.5);
        let b = luma + 1.772 * (cb.data[i] - 0.5);
        let g = (luma - 0.299 * r - 0.114 * b) / 0.587;
        data.push(r);
        data.push(g);
        data.push(b);
    }
    Ok(ImageF {
        width: y.width,
        height: y.height,
        channels: 3,
        data,
    })
}

/// Min-max rescale of one plane to `[0, 1]`.
///
/// A constant plane cannot be rescaled; it comes back as all zeros with the
/// degeneracy flag set so pipelines can keep going instead of aborting a
/// batch.
pub fn minmax_normalize(c: &ChannelF) -> (ChannelF, bool) {
    let (min, max) = min_max(&c.data);
    if max > min {
        let range = max - min;
        (c.map(|x| (x - min) / range), false)
    } else {
        (c.map(|_| 0.0), true)
    }
}

/// Min-max rescale of a whole image using one global min/max across all
/// channels (per-channel rescaling would shift hue).
pub fn minmax_normalize_image(img: &ImageF) -> (ImageF, bool) {
    let (min, max) = min_max(&img.data);
    let mut out = img.clone();
    if max > min {
        let range = max - min;
        for x in out.data.iter_mut() {
            *x = (*x - min) / range;
        }
        (out, false)
    } else {
        for x in out.data.iter_mut() {
            *x = 0.0;
        }
        (out, true)
    }
}

fn min_max(data: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &x in data {
        min = min.min(x);
        max = max.max(x);
    }
    (min, max)
}

/// Power-law correction `x -> x^gamma` applied to every sample.
pub fn gamma_correct(img: &ImageF, gamma: f64) -> Result<ImageF> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let mut out = img.clone();
    for x in out.data.iter_mut() {
        *x = x.powf(gamma);
    }
    Ok(out)
}

/// Extracts the three RGB planes of a 3-channel image.
pub fn split_rgb(img: &ImageF) -> Result<(ChannelF, ChannelF, ChannelF)> {
    if img.channels != 3 {
        return Err(Error::InvalidImage("split_rgb expects 3 channels".into()));
    }
    let n = img.width * img.height;
    let mut r = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for px in img.data.chunks_exact(3) {
        r.push(px[0]);
        g.push(px[1]);
        b.push(px[2]);
    }
    let shape = |data| ChannelF {
        width: img.width,
        height: img.height,
        data,
    };
    Ok((shape(r), shape(g), shape(b)))
}

/// Interleaves three planes back into a 3-channel image.
pub fn merge_rgb(r: &ChannelF, g: &ChannelF, b: &ChannelF) -> Result<ImageF> {
    if !r.same_shape(g) || !r.same_shape(b) {
        return Err(Error::DimensionMismatch(
            "RGB planes must share dimensions".into(),
        ));
    }
    let mut data = Vec::with_capacity(r.data.len() * 3);
    for i in 0..r.data.len() {
        data.push(r.data[i]);
        data.push(g.data[i]);
        data.push(b.data[i]);
    }
    Ok(ImageF {
        width: r.width,
        height: r.height,
        channels: 3,
        data,
    })
}

/// Reads an 8-bit RGB PNG; an alpha channel, if present, is stripped.
pub fn read_png(path: &Path) -> Result<ImageU8> {
    let img = image::open(path)
        .map_err(|source| Error::ImageRead {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    ImageU8::new(w as usize, h as usize, img.into_raw())
}

/// Writes an image as an 8-bit RGB PNG.
pub fn write_png(path: &Path, img: &ImageU8) -> Result<()> {
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, img.data.clone())
        .expect("ImageU8 invariant guarantees buffer size");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::ImageWrite {
            path: path.to_path_buf(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gray(v: f64) -> ImageF {
        ImageF::new(2, 1, 3, vec![v; 6]).unwrap()
    }

    #[test]
    fn normalize_anchor_values() {
        let img = ImageU8::new(1, 1, vec![0, 128, 255]).unwrap();
        let f = normalize_u8(&img);
        assert_eq!(f.data()[0], 0.0);
        assert_eq!(f.data()[1], 128.0 / 255.0);
        assert!((f.data()[1] - 0.5019607843137255).abs() < 1e-15);
        assert_eq!(f.data()[2], 1.0);
    }

    #[test]
    fn denormalize_rounds_half_up_and_clamps() {
        let img = ImageF::new(2, 1, 3, vec![1.0, 0.0, 0.5, -0.25, 1.75, 0.2]).unwrap();
        let u = denormalize(&img).unwrap();
        assert_eq!(u.data(), &[255, 0, 128, 0, 255, 51]);
    }

    #[test]
    fn denormalize_rejects_nan() {
        let img = ImageF::new(1, 1, 3, vec![0.1, f64::NAN, 0.3]).unwrap();
        assert!(matches!(denormalize(&img), Err(Error::NonFinite(_))));
    }

    #[test]
    fn normalize_denormalize_is_identity_for_every_byte() {
        let data: Vec<u8> = (0..=255).flat_map(|v| [v, v, v]).collect();
        let img = ImageU8::new(16, 16, data).unwrap();
        let back = denormalize(&normalize_u8(&img)).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn quantize_matches_denormalize_then_normalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data: Vec<f64> = (0..48).map(|_| rng.random::<f64>() * 1.2 - 0.1).collect();
        let img = ImageF::new(4, 4, 3, data).unwrap();
        let q = quantize(&img).unwrap();
        let roundtrip = normalize_u8(&denormalize(&img).unwrap());
        assert_eq!(q, roundtrip);
    }

    #[test]
    fn hsv_anchor_pixels() {
        let red = ImageF::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let (h, s, v) = rgb_to_hsv(&red).unwrap();
        assert_eq!((h.data()[0], s.data()[0], v.data()[0]), (0.0, 1.0, 1.0));

        let (h, s, v) = rgb_to_hsv(&gray(0.5)).unwrap();
        assert_eq!((h.data()[0], s.data()[0], v.data()[0]), (0.0, 0.0, 0.5));
    }

    #[test]
    fn hsv_round_trip_on_random_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..3000).map(|_| rng.random()).collect();
        let img = ImageF::new(50, 20, 3, data).unwrap();
        let (h, s, v) = rgb_to_hsv(&img).unwrap();
        assert!(h.data().iter().all(|&x| (0.0..1.0).contains(&x)));
        let back = hsv_to_rgb(&h, &s, &v).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn ycbcr_anchor_pixels() {
        let (y, cb, cr) = rgb_to_ycbcr(&gray(0.0)).unwrap();
        assert_eq!((y.data()[0], cb.data()[0], cr.data()[0]), (0.0, 0.5, 0.5));

        let (y, cb, cr) = rgb_to_ycbcr(&gray(1.0)).unwrap();
        assert!((y.data()[0] - 1.0).abs() < 1e-12);
        assert!((cb.data()[0] - 0.5).abs() < 1e-12);
        assert!((cr.data()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ycbcr_round_trip_on_random_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data: Vec<f64> = (0..3000).map(|_| rng.random()).collect();
        let img = ImageF::new(20, 50, 3, data).unwrap();
        let (y, cb, cr) = rgb_to_ycbcr(&img).unwrap();
        let back = ycbcr_to_rgb(&y, &cb, &cr).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn minmax_spans_unit_interval() {
        let c = ChannelF::new(3, 1, vec![0.0, 0.5, 1.0]).unwrap();
        let (out, degenerate) = minmax_normalize(&c);
        assert!(!degenerate);
        assert_eq!(out.data(), &[0.0, 0.5, 1.0]);

        let c = ChannelF::new(2, 1, vec![2.0, 4.0]).unwrap();
        let (out, degenerate) = minmax_normalize(&c);
        assert!(!degenerate);
        assert_eq!(out.data(), &[0.0, 1.0]);
    }

    #[test]
    fn minmax_constant_plane_is_degenerate() {
        let c = ChannelF::new(2, 1, vec![0.3, 0.3]).unwrap();
        let (out, degenerate) = minmax_normalize(&c);
        assert!(degenerate);
        assert_eq!(out.data(), &[0.0, 0.0]);
    }

    #[test]
    fn minmax_extremes_are_exact_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let data: Vec<f64> = (0..64).map(|_| rng.random::<f64>() * 3.0 - 1.0).collect();
            let c = ChannelF::new(8, 8, data).unwrap();
            let (out, degenerate) = minmax_normalize(&c);
            assert!(!degenerate);
            let (min, max) = min_max(out.data());
            assert_eq!(min, 0.0);
            assert_eq!(max, 1.0);
            assert!(out.data().iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn gamma_anchor_values() {
        let img = ImageF::new(1, 1, 3, vec![0.25, 0.5, 1.0]).unwrap();
        let out = gamma_correct(&img, 0.5).unwrap();
        assert!((out.data()[0] - 0.5).abs() < 1e-15);
        let out = gamma_correct(&img, 2.0).unwrap();
        assert!((out.data()[1] - 0.25).abs() < 1e-15);
        let out = gamma_correct(&img, 1.0).unwrap();
        assert_eq!(out.data(), img.data());
    }

    #[test]
    fn gamma_rejects_non_positive_exponent() {
        let img = gray(0.5);
        assert!(matches!(gamma_correct(&img, 0.0), Err(Error::InvalidGamma(_))));
        assert!(matches!(gamma_correct(&img, -1.0), Err(Error::InvalidGamma(_))));
    }

    #[test]
    fn gamma_inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<f64> = (0..300).map(|_| rng.random::<f64>().max(1e-6)).collect();
        let img = ImageF::new(10, 10, 3, data).unwrap();
        for g in [0.3, 0.7, 1.6, 2.4] {
            let back = gamma_correct(&gamma_correct(&img, g).unwrap(), 1.0 / g).unwrap();
            for (a, b) in img.data().iter().zip(back.data()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn split_merge_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..27).map(|_| rng.random()).collect();
        let img = ImageF::new(3, 3, 3, data).unwrap();
        let (r, g, b) = split_rgb(&img).unwrap();
        assert_eq!(merge_rgb(&r, &g, &b).unwrap(), img);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let img = ImageU8::from_fn(13, 7, |x, y| [(x * 19) as u8, (y * 31) as u8, 200]);
        write_png(&path, &img).unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn invalid_buffers_are_rejected() {
        assert!(ImageU8::new(2, 2, vec![0; 11]).is_err());
        assert!(ImageU8::new(0, 2, vec![]).is_err());
        assert!(ImageF::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(ChannelF::new(2, 2, vec![0.0; 3]).is_err());
    }
}

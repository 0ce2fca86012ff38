//! Spatial filters used by the noise-suppression stages: separable Gaussian
//! blur and the single-channel guided filter.
//!
//! Borders are handled with reflect padding throughout; zero padding would
//! inject dark halos straight into the blend stages downstream.

use crate::error::{Error, Result};
use crate::imagecore::ChannelF;

/// Guided filter window radius and regularization strength.
///
/// Intensities are on the `[0, 1]` scale, so `epsilon` is dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedFilterConfig {
    pub radius: usize,
    pub epsilon: f64,
}

impl GuidedFilterConfig {
    pub fn new(radius: usize, epsilon: f64) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidFilterConfig(
                "radius must be at least 1".into(),
            ));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidFilterConfig(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        Ok(Self { radius, epsilon })
    }
}

impl Default for GuidedFilterConfig {
    /// Mid-range smoothing for typical 400-600 px benchmark images.
    fn default() -> Self {
        Self {
            radius: 8,
            epsilon: 0.01,
        }
    }
}

/// Maps an out-of-range index into `[0, n)` by reflecting across the borders
/// (half-sample symmetric, edge sample repeated). Folds repeatedly so kernels
/// wider than the plane still resolve.
#[inline]
fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Normalized 1-D Gaussian taps truncated at `±ceil(3*sigma)`.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|i| {
            let d = i as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian blur with reflect padding.
pub fn gaussian_blur(c: &ChannelF, sigma: f64) -> Result<ChannelF> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let taps = gaussian_kernel(sigma);
    let radius = taps.len() / 2;
    let (w, h) = (c.width(), c.height());

    // Horizontal pass.
    let src = c.data();
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let xi = reflect(x as isize + k as isize - radius as isize, w);
                acc += t * row[xi];
            }
            tmp[y * w + x] = acc;
        }
    }

    // Vertical pass.
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let yi = reflect(y as isize + k as isize - radius as isize, h);
                acc += t * tmp[yi * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    ChannelF::new(w, h, out)
}

/// Mean over the `(2r+1)^2` window centered on each pixel, reflect padded.
///
/// Window sums come from an integral image over the padded plane, so the
/// cost is independent of the radius.
fn box_mean(c: &ChannelF, radius: usize) -> ChannelF {
    let (w, h) = (c.width(), c.height());
    let (pw, ph) = (w + 2 * radius, h + 2 * radius);

    // Reflect-padded copy.
    let mut padded = vec![0.0; pw * ph];
    for py in 0..ph {
        let sy = reflect(py as isize - radius as isize, h);
        for px in 0..pw {
            let sx = reflect(px as isize - radius as isize, w);
            padded[py * pw + px] = c.get(sx, sy);
        }
    }

    // Integral image with a zero top row and left column.
    let iw = pw + 1;
    let mut integral = vec![0.0; iw * (ph + 1)];
    for py in 0..ph {
        let mut row_sum = 0.0;
        for px in 0..pw {
            row_sum += padded[py * pw + px];
            integral[(py + 1) * iw + px + 1] = integral[py * iw + px + 1] + row_sum;
        }
    }

    let side = 2 * radius + 1;
    let area = (side * side) as f64;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (x0, y0) = (x, y);
            let (x1, y1) = (x + side, y + side);
            let sum = integral[y1 * iw + x1] - integral[y0 * iw + x1] - integral[y1 * iw + x0]
                + integral[y0 * iw + x0];
            out[y * w + x] = sum / area;
        }
    }
    ChannelF::new(w, h, out).expect("box_mean preserves shape")
}

/// Single-channel guided filter (He et al. formulation).
///
/// Per window: `a = cov(guide, p) / (var(guide) + epsilon)`,
/// `b = mean(p) - a * mean(guide)`; the output is
/// `mean(a) * guide + mean(b)` with all means over `(2r+1)^2` box windows.
pub fn guided_filter(p: &ChannelF, guide: &ChannelF, cfg: &GuidedFilterConfig) -> Result<ChannelF> {
    if !p.same_shape(guide) {
        return Err(Error::DimensionMismatch(format!(
            "guided_filter input {}x{} vs guide {}x{}",
            p.width(),
            p.height(),
            guide.width(),
            guide.height()
        )));
    }
    // Re-check here because the config fields are public.
    GuidedFilterConfig::new(cfg.radius, cfg.epsilon)?;
    let r = cfg.radius;
    let (w, h) = (p.width(), p.height());
    let n = w * h;

    let mean_i = box_mean(guide, r);
    let mean_p = box_mean(p, r);

    let ip: Vec<f64> = (0..n).map(|i| guide.data()[i] * p.data()[i]).collect();
    let ii: Vec<f64> = (0..n).map(|i| guide.data()[i] * guide.data()[i]).collect();
    let corr_ip = box_mean(&ChannelF::new(w, h, ip)?, r);
    let corr_ii = box_mean(&ChannelF::new(w, h, ii)?, r);

    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        let var = corr_ii.data()[i] - mean_i.data()[i] * mean_i.data()[i];
        let cov = corr_ip.data()[i] - mean_i.data()[i] * mean_p.data()[i];
        a[i] = cov / (var + cfg.epsilon);
        b[i] = mean_p.data()[i] - a[i] * mean_i.data()[i];
    }
    let mean_a = box_mean(&ChannelF::new(w, h, a)?, r);
    let mean_b = box_mean(&ChannelF::new(w, h, b)?, r);

    let out: Vec<f64> = (0..n)
        .map(|i| mean_a.data()[i] * guide.data()[i] + mean_b.data()[i])
        .collect();
    ChannelF::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_channel(w: usize, h: usize, seed: u64) -> ChannelF {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChannelF::from_fn(w, h, |_, _| rng.random())
    }

    /// Naive O(r^2) box mean with the same reflect padding, used as the
    /// oracle for the integral-image implementation.
    fn naive_box_mean(c: &ChannelF, radius: usize) -> ChannelF {
        let r = radius as isize;
        ChannelF::from_fn(c.width(), c.height(), |x, y| {
            let mut sum = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = reflect(x as isize + dx, c.width());
                    let sy = reflect(y as isize + dy, c.height());
                    sum += c.get(sx, sy);
                }
            }
            sum / ((2 * radius + 1) * (2 * radius + 1)) as f64
        })
    }

    #[test]
    fn blur_rejects_bad_sigma() {
        let c = random_channel(4, 4, 0);
        assert!(gaussian_blur(&c, 0.0).is_err());
        assert!(gaussian_blur(&c, -1.0).is_err());
    }

    #[test]
    fn blur_preserves_constants_exactly() {
        let c = ChannelF::from_fn(9, 5, |_, _| 0.37);
        let out = gaussian_blur(&c, 1.0).unwrap();
        let first = out.data()[0];
        assert!(out.data().iter().all(|&x| x == first));
        assert!((first - 0.37).abs() < 1e-12);
    }

    #[test]
    fn blur_impulse_matches_closed_form_kernel() {
        let mut c = ChannelF::from_fn(21, 21, |_, _| 0.0);
        c.data_mut()[10 * 21 + 10] = 1.0;
        let sigma = 1.0;
        let out = gaussian_blur(&c, sigma).unwrap();

        let taps = gaussian_kernel(sigma);
        let radius = taps.len() / 2;
        for y in 0..21usize {
            for x in 0..21usize {
                let dx = x.abs_diff(10);
                let dy = y.abs_diff(10);
                let expected = if dx <= radius && dy <= radius {
                    taps[radius + dx] * taps[radius + dy]
                } else {
                    0.0
                };
                assert!(
                    (out.get(x, y) - expected).abs() < 1e-12,
                    "at ({x},{y}): {} vs {expected}",
                    out.get(x, y)
                );
            }
        }
        // Peak sits at the center and the response is symmetric.
        let peak = out.get(10, 10);
        assert!(out.data().iter().all(|&v| v <= peak));
        assert_eq!(out.get(9, 10), out.get(11, 10));
        assert_eq!(out.get(10, 9), out.get(10, 11));
    }

    #[test]
    fn blur_conserves_total_mass_under_reflect_padding() {
        let c = random_channel(17, 13, 42);
        let before: f64 = c.data().iter().sum();
        for sigma in [0.8, 1.0, 2.5] {
            let out = gaussian_blur(&c, sigma).unwrap();
            let after: f64 = out.data().iter().sum();
            assert!((before - after).abs() < 1e-9, "sigma {sigma}: {before} vs {after}");
        }
    }

    #[test]
    fn box_mean_matches_naive_oracle() {
        let c = random_channel(32, 32, 7);
        for radius in [1, 3, 8] {
            let fast = box_mean(&c, radius);
            let slow = naive_box_mean(&c, radius);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-10, "radius {radius}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn guided_filter_config_validation() {
        assert!(GuidedFilterConfig::new(0, 0.01).is_err());
        assert!(GuidedFilterConfig::new(4, 0.0).is_err());
        assert!(GuidedFilterConfig::new(4, -0.5).is_err());
        assert!(GuidedFilterConfig::new(1, 1e-8).is_ok());
    }

    #[test]
    fn guided_filter_rejects_dimension_mismatch() {
        let p = random_channel(8, 8, 1);
        let g = random_channel(8, 9, 2);
        assert!(guided_filter(&p, &g, &GuidedFilterConfig::default()).is_err());
    }

    #[test]
    fn guided_filter_constant_input_stays_constant() {
        let p = ChannelF::from_fn(16, 16, |_, _| 0.6);
        let guide = random_channel(16, 16, 3);
        let cfg = GuidedFilterConfig::new(4, 0.01).unwrap();
        let out = guided_filter(&p, &guide, &cfg).unwrap();
        for &x in out.data() {
            assert!((x - 0.6).abs() < 1e-9);
        }

        // Self-guided constant plane stays exactly constant.
        let out = guided_filter(&p, &p, &cfg).unwrap();
        let first = out.data()[0];
        assert!(out.data().iter().all(|&x| x == first));
    }

    #[test]
    fn guided_filter_preserves_edges_at_small_epsilon() {
        let p = ChannelF::from_fn(24, 24, |x, _| if x < 12 { 0.1 } else { 0.9 });
        let cfg = GuidedFilterConfig::new(4, 1e-8).unwrap();
        let out = guided_filter(&p, &p, &cfg).unwrap();
        for (a, b) in out.data().iter().zip(p.data()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn guided_filter_large_epsilon_approaches_box_mean() {
        let p = random_channel(24, 24, 9);
        let cfg = GuidedFilterConfig::new(4, 1e6).unwrap();
        let out = guided_filter(&p, &p, &cfg).unwrap();
        let boxed = box_mean(&box_mean(&p, 4), 4);
        // With a -> 0, output collapses to mean(b) = double box mean of p.
        for (a, b) in out.data().iter().zip(boxed.data()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn guided_filter_overshoot_stays_bounded() {
        let cfg = GuidedFilterConfig::default();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Mix of smooth ramps and noise keeps the test image in [0, 1].
            let p = ChannelF::from_fn(24, 24, |x, y| {
                let ramp = (x as f64 / 23.0 + y as f64 / 23.0) / 2.0;
                (0.7 * ramp + 0.3 * rng.random::<f64>()).clamp(0.0, 1.0)
            });
            let out = guided_filter(&p, &p, &cfg).unwrap();
            let lo = p.data().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = p.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for &x in out.data() {
                assert!(x >= lo - 0.05 && x <= hi + 0.05, "overshoot: {x} vs [{lo}, {hi}]");
            }
        }
    }
}

//! The enhancement pipelines.
//!
//! All three share the same analytical core: the dichotomy map
//! `|v^gamma - v|`, a unimodal contrast function whose single interior peak
//! sits at `gamma^(1/(1-gamma))`. The plain pipeline rescales the mapped
//! V plane and recomposes; the filter variant adds a Gaussian blur; the
//! seven-parameter tuned pipeline layers complement-weighted color
//! restoration, guided-filter denoising, a three-term blend, and a final
//! gamma stage on top.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters::{gaussian_blur, guided_filter, GuidedFilterConfig};
use crate::imagecore::{
    denormalize, gamma_correct, hsv_to_rgb, merge_rgb, minmax_normalize, minmax_normalize_image,
    normalize_u8, quantize, rgb_to_hsv, rgb_to_ycbcr, split_rgb, ycbcr_to_rgb, ChannelF, ImageF,
    ImageU8,
};

/// Pipeline output plus the number of min-max stages that hit a constant
/// plane. Degenerate stages zero out rather than abort, so a whole batch
/// never dies on one flat image; the flag lets callers (and the GA fitness)
/// see it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct Enhanced<T> {
    pub image: T,
    pub degenerate_stages: u32,
}

/// The seven tuned-pipeline parameters.
///
/// `a` and `b` weight the value-plane restoration, `c`, `d`, `e` weight the
/// final blend, `gamma` drives the dichotomy map and `gamma1` the closing
/// gamma correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunaParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub gamma: f64,
    pub gamma1: f64,
}

impl TunaParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, gamma: f64, gamma1: f64) -> Result<Self> {
        let all = [a, b, c, d, e, gamma, gamma1];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        if !(gamma1 > 0.0) {
            return Err(Error::InvalidParams(format!("gamma1 must be > 0, got {gamma1}")));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            e,
            gamma,
            gamma1,
        })
    }

    /// Gene layout is `[a, b, c, d, e, gamma, gamma1]`.
    pub fn from_genes(genes: &[f64]) -> Result<Self> {
        if genes.len() != 7 {
            return Err(Error::InvalidParams(format!(
                "expected 7 genes, got {}",
                genes.len()
            )));
        }
        Self::new(
            genes[0], genes[1], genes[2], genes[3], genes[4], genes[5], genes[6],
        )
    }

    pub fn to_genes(&self) -> [f64; 7] {
        [
            self.a, self.b, self.c, self.d, self.e, self.gamma, self.gamma1,
        ]
    }

    pub fn within(&self, bounds: &ParamBounds) -> bool {
        bounds.contains(&self.to_genes())
    }
}

/// Per-gene `[low, high]` search box for the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBounds {
    bounds: Vec<(f64, f64)>,
}

impl ParamBounds {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidBounds("bounds must not be empty".into()));
        }
        for (i, &(low, high)) in bounds.iter().enumerate() {
            if !low.is_finite() || !high.is_finite() || !(low < high) {
                return Err(Error::InvalidBounds(format!(
                    "gene {i}: low {low} must be < high {high}"
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// Blend weights in `[0, 2]`, dichotomy exponent in `[0.01, 1]`
    /// (brightening regime), final gamma in `[0.3, 3]`. Wide enough to cover
    /// the identity point and strong corrections.
    pub fn tuna_default() -> Self {
        Self {
            bounds: vec![
                (0.0, 2.0),
                (0.0, 2.0),
                (0.0, 2.0),
                (0.0, 2.0),
                (0.0, 2.0),
                (0.01, 1.0),
                (0.3, 3.0),
            ],
        }
    }

    pub fn dichotomy_default() -> Self {
        Self {
            bounds: vec![(0.01, 1.0)],
        }
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn low(&self, i: usize) -> f64 {
        self.bounds[i].0
    }

    pub fn high(&self, i: usize) -> f64 {
        self.bounds[i].1
    }

    pub fn clamp(&self, i: usize, x: f64) -> f64 {
        x.clamp(self.bounds[i].0, self.bounds[i].1)
    }

    pub fn contains(&self, genes: &[f64]) -> bool {
        genes.len() == self.bounds.len()
            && genes
                .iter()
                .zip(&self.bounds)
                .all(|(&g, &(lo, hi))| g >= lo && g <= hi)
    }

    pub fn set(&mut self, i: usize, low: f64, high: f64) -> Result<()> {
        if !low.is_finite() || !high.is_finite() || !(low < high) {
            return Err(Error::InvalidBounds(format!(
                "gene {i}: low {low} must be < high {high}"
            )));
        }
        self.bounds[i] = (low, high);
        Ok(())
    }
}

/// Filter settings shared by the pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub guided: GuidedFilterConfig,
    pub blur_sigma: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            guided: GuidedFilterConfig::default(),
            blur_sigma: 1.0,
        }
    }
}

/// Raw dichotomy map `|v^gamma - v|` of one plane.
///
/// The scale factor that brings the output back to `[0, 1]` is deferred to
/// the min-max stage that every pipeline applies right after; both views are
/// consistent because the raw minimum is 0 at the plane extremes.
pub fn dichotomy(v: &ChannelF, gamma: f64) -> Result<ChannelF> {
    if gamma < 0.0 {
        return Err(Error::InvalidGamma(gamma));
    }
    Ok(dichotomy_channel(v, gamma))
}

fn dichotomy_channel(v: &ChannelF, gamma: f64) -> ChannelF {
    v.map(|x| (x.powf(gamma) - x).abs())
}

/// Plain dichotomy pipeline: replace V with the rescaled dichotomy map,
/// keep H and S, return to RGB.
pub fn dichotomy_enhance(img: &ImageF, gamma: f64) -> Result<Enhanced<ImageF>> {
    if gamma < 0.0 {
        return Err(Error::InvalidGamma(gamma));
    }
    let (h, s, v) = rgb_to_hsv(img)?;
    Ok(dichotomy_enhance_planes(&h, &s, &v, gamma))
}

fn dichotomy_enhance_planes(h: &ChannelF, s: &ChannelF, v: &ChannelF, gamma: f64) -> Enhanced<ImageF> {
    let raw = dichotomy_channel(v, gamma);
    let (v_new, degenerate) = minmax_normalize(&raw);
    let image = hsv_to_rgb(h, s, &v_new).expect("planes share shape");
    Enhanced {
        image,
        degenerate_stages: u32::from(degenerate),
    }
}

/// Dichotomy pipeline followed by a Gaussian blur of each RGB channel.
pub fn dichotomy_filter_enhance(img: &ImageF, gamma: f64, sigma: f64) -> Result<Enhanced<ImageF>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let enhanced = dichotomy_enhance(img, gamma)?;
    Ok(Enhanced {
        image: blur_rgb(&enhanced.image, sigma)?,
        degenerate_stages: enhanced.degenerate_stages,
    })
}

fn blur_rgb(img: &ImageF, sigma: f64) -> Result<ImageF> {
    let (r, g, b) = split_rgb(img)?;
    let r = gaussian_blur(&r, sigma)?;
    let g = gaussian_blur(&g, sigma)?;
    let b = gaussian_blur(&b, sigma)?;
    merge_rgb(&r, &g, &b)
}

/// Seven-parameter tuned pipeline, end to end on an 8-bit image.
pub fn tuna_enhance(img: &ImageU8, params: &TunaParams, cfg: &PipelineConfig) -> Enhanced<ImageU8> {
    tuna_enhance_u8(img, params, cfg, false)
}

/// Variant that denoises only the Y plane in YCbCr space; cheaper than
/// guided-filtering all three RGB channels.
pub fn tuna_enhance_ycbcr(
    img: &ImageU8,
    params: &TunaParams,
    cfg: &PipelineConfig,
) -> Enhanced<ImageU8> {
    tuna_enhance_u8(img, params, cfg, true)
}

fn tuna_enhance_u8(
    img: &ImageU8,
    params: &TunaParams,
    cfg: &PipelineConfig,
    filter_luma_only: bool,
) -> Enhanced<ImageU8> {
    let img_f = normalize_u8(img);
    let (h, s, v) = rgb_to_hsv(&img_f).expect("normalized image has 3 channels");
    let (out, degenerate_stages) = tuna_core(&img_f, &h, &s, &v, params, cfg, filter_luma_only);
    Enhanced {
        image: denormalize(&out).expect("pipeline output is finite"),
        degenerate_stages,
    }
}

/// Tuned pipeline on a normalized float image, stopping before the final
/// 8-bit quantization. Useful for analyzing the continuous output.
pub fn tuna_enhance_float(
    img: &ImageF,
    params: &TunaParams,
    cfg: &PipelineConfig,
    filter_luma_only: bool,
) -> Result<Enhanced<ImageF>> {
    let (h, s, v) = rgb_to_hsv(img)?;
    let (image, degenerate_stages) = tuna_core(img, &h, &s, &v, params, cfg, filter_luma_only);
    Ok(Enhanced {
        image,
        degenerate_stages,
    })
}

fn tuna_core(
    img: &ImageF,
    h: &ChannelF,
    s: &ChannelF,
    v: &ChannelF,
    p: &TunaParams,
    cfg: &PipelineConfig,
    filter_luma_only: bool,
) -> (ImageF, u32) {
    let mut degenerate = 0u32;

    // Dichotomy contrast map on V, rescaled.
    let raw = dichotomy_channel(v, p.gamma);
    let (v_d, deg) = minmax_normalize(&raw);
    degenerate += u32::from(deg);

    // Color restoration: weight the map by the complement of V (the
    // reciprocal would blow up exactly at the dark pixels this targets),
    // then blend with the original V plane.
    let n = v.data().len();
    let mut v_rc = vec![0.0; n];
    for i in 0..n {
        let v_inv = v_d.data()[i] * (1.0 - v.data()[i]);
        v_rc[i] = p.a * v.data()[i] + p.b * v_inv;
    }
    let v_rc = ChannelF::new(v.width(), v.height(), v_rc).expect("plane shape");
    let (v_rc, deg) = minmax_normalize(&v_rc);
    degenerate += u32::from(deg);

    let rgb = hsv_to_rgb(h, s, &v_rc).expect("planes share shape");

    // Noise suppression.
    let rgb1 = if filter_luma_only {
        let (y, cb, cr) = rgb_to_ycbcr(&rgb).expect("rgb has 3 channels");
        let y1 = guided_filter(&y, &y, &cfg.guided).expect("matching planes");
        ycbcr_to_rgb(&y1, &cb, &cr).expect("planes share shape")
    } else {
        let (r, g, b) = split_rgb(&rgb).expect("rgb has 3 channels");
        let r = guided_filter(&r, &r, &cfg.guided).expect("matching planes");
        let g = guided_filter(&g, &g, &cfg.guided).expect("matching planes");
        let b = guided_filter(&b, &b, &cfg.guided).expect("matching planes");
        merge_rgb(&r, &g, &b).expect("planes share shape")
    };

    // Three-term blend of the untouched input, the masked filtered image,
    // and the restored image.
    let mut blend = img.clone();
    {
        let out = blend.data_mut();
        let rgb_d = rgb.data();
        let rgb1_d = rgb1.data();
        for i in 0..out.len() {
            out[i] = p.e * out[i] + p.c * (1.0 - rgb_d[i]) * rgb1_d[i] + p.d * rgb_d[i];
        }
    }

    // Joint min-max over all three channels; per-channel rescaling would
    // shift hue.
    let (blend, deg) = minmax_normalize_image(&blend);
    degenerate += u32::from(deg);

    let out = gamma_correct(&blend, p.gamma1).expect("gamma1 > 0 by TunaParams invariant");
    (out, degenerate)
}

/// Which enhancement pipeline to run; determines the gene layout the
/// optimizer searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dichotomy,
    DichotomyFilter,
    Tuna,
    TunaYcbcr,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Dichotomy,
        Method::DichotomyFilter,
        Method::Tuna,
        Method::TunaYcbcr,
    ];

    pub fn gene_count(self) -> usize {
        match self {
            Method::Dichotomy | Method::DichotomyFilter => 1,
            Method::Tuna | Method::TunaYcbcr => 7,
        }
    }

    pub fn default_bounds(self) -> ParamBounds {
        match self {
            Method::Dichotomy | Method::DichotomyFilter => ParamBounds::dichotomy_default(),
            Method::Tuna | Method::TunaYcbcr => ParamBounds::tuna_default(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dichotomy => "dichotomy",
            Method::DichotomyFilter => "dichotomy-filter",
            Method::Tuna => "tuna",
            Method::TunaYcbcr => "tuna-ycbcr",
        }
    }

    /// Runs the pipeline on an 8-bit image with the given gene vector.
    pub fn apply(
        self,
        img: &ImageU8,
        genes: &[f64],
        cfg: &PipelineConfig,
    ) -> Result<Enhanced<ImageU8>> {
        let ctx = EnhanceContext::new(self, img, cfg)?;
        let enhanced = ctx.enhance_quantized(genes)?;
        Ok(Enhanced {
            image: denormalize(&enhanced.image)?,
            degenerate_stages: enhanced.degenerate_stages,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dichotomy" => Ok(Method::Dichotomy),
            "dichotomy-filter" => Ok(Method::DichotomyFilter),
            "tuna" => Ok(Method::Tuna),
            "tuna-ycbcr" => Ok(Method::TunaYcbcr),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// One image prepared for repeated evaluation: normalization and the HSV
/// split are gene-independent, so the optimizer pays for them once instead
/// of once per candidate.
pub struct EnhanceContext {
    method: Method,
    cfg: PipelineConfig,
    img: ImageF,
    h: ChannelF,
    s: ChannelF,
    v: ChannelF,
}

impl EnhanceContext {
    pub fn new(method: Method, img: &ImageU8, cfg: &PipelineConfig) -> Result<Self> {
        if !(cfg.blur_sigma > 0.0) {
            return Err(Error::InvalidSigma(cfg.blur_sigma));
        }
        GuidedFilterConfig::new(cfg.guided.radius, cfg.guided.epsilon)?;
        let img_f = normalize_u8(img);
        let (h, s, v) = rgb_to_hsv(&img_f)?;
        Ok(Self {
            method,
            cfg: *cfg,
            img: img_f,
            h,
            s,
            v,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Runs the pipeline and snaps the result to the 8-bit grid, which is
    /// what the quality metrics score.
    pub fn enhance_quantized(&self, genes: &[f64]) -> Result<Enhanced<ImageF>> {
        if genes.len() != self.method.gene_count() {
            return Err(Error::InvalidParams(format!(
                "{} expects {} genes, got {}",
                self.method,
                self.method.gene_count(),
                genes.len()
            )));
        }
        let enhanced = match self.method {
            Method::Dichotomy => {
                if genes[0] < 0.0 {
                    return Err(Error::InvalidGamma(genes[0]));
                }
                dichotomy_enhance_planes(&self.h, &self.s, &self.v, genes[0])
            }
            Method::DichotomyFilter => {
                if genes[0] < 0.0 {
                    return Err(Error::InvalidGamma(genes[0]));
                }
                let e = dichotomy_enhance_planes(&self.h, &self.s, &self.v, genes[0]);
                Enhanced {
                    image: blur_rgb(&e.image, self.cfg.blur_sigma)?,
                    degenerate_stages: e.degenerate_stages,
                }
            }
            Method::Tuna | Method::TunaYcbcr => {
                let params = TunaParams::from_genes(genes)?;
                let luma_only = self.method == Method::TunaYcbcr;
                let (image, degenerate_stages) = tuna_core(
                    &self.img, &self.h, &self.s, &self.v, &params, &self.cfg, luma_only,
                );
                Enhanced {
                    image,
                    degenerate_stages,
                }
            }
        };
        Ok(Enhanced {
            image: quantize(&enhanced.image)?,
            degenerate_stages: enhanced.degenerate_stages,
        })
    }
}

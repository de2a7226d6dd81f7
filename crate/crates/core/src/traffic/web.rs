use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::stochastic::{
    round_half_up, Dist, ExponentialParams, GammaParams, LognormalParams, ParamError, Sampler, TruncLognormalParams, UniformParams,
};

/// Hard cap on embedded objects per page.
pub const MAX_EMBEDDED: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HttpParams {
    pub html_size: Dist,
    pub embedded_size: Dist,
    pub n_embedded: Dist,
    pub parsing_time: Dist,
    pub reading_time: Dist,
    pub request_size: Dist,
}

impl Default for HttpParams {
    fn default() -> Self {
        HttpParams {
            html_size: Dist::TruncLognormal(TruncLognormalParams { mu: 7.90272, sigma: 1.7643, max: 2e6 }),
            embedded_size: Dist::TruncLognormal(TruncLognormalParams { mu: 7.51384, sigma: 2.17454, max: 6e6 }),
            n_embedded: Dist::Gamma(GammaParams { kappa: 0.141385, theta: 40.3257 }),
            parsing_time: Dist::TruncLognormal(TruncLognormalParams { mu: -1.24892, sigma: 2.08427, max: 300.0 }),
            reading_time: Dist::Lognormal(LognormalParams { mu: -0.495204, sigma: 2.7731 }),
            request_size: Dist::Uniform(UniformParams { a: 0.0, b: 700.0 }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FtpParams {
    pub file_size: Dist,
    pub reading_time: Dist,
    pub request_size: Dist,
}

impl Default for FtpParams {
    fn default() -> Self {
        FtpParams {
            file_size: Dist::TruncLognormal(TruncLognormalParams { mu: 14.45, sigma: 0.35, max: 5e6 }),
            reading_time: Dist::Exponential(ExponentialParams { lambda: 0.006 }),
            request_size: Dist::Uniform(UniformParams { a: 0.0, b: 700.0 }),
        }
    }
}

/// One fetch: request bytes upstream, response bytes downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fetch {
    pub request: u64,
    pub response: u64,
}

/// Everything drawn for one web page.
#[derive(Debug, Clone, PartialEq)]
pub struct PagePlan {
    pub html: Fetch,
    pub parsing: f64,
    pub embedded: Vec<Fetch>,
    pub reading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilePlan {
    pub fetch: Fetch,
    pub reading: f64,
}

/// Ready-to-draw HTTP model. `size_scale` multiplies object sizes only.
#[derive(Debug, Clone)]
pub struct HttpModel {
    html: Sampler,
    embedded: Sampler,
    count: Sampler,
    parsing: Sampler,
    reading: Sampler,
    request: Sampler,
    size_scale: f64,
}

fn scaled_bytes(x: f64, scale: f64) -> u64 {
    round_half_up(x * scale).max(1)
}

impl HttpModel {
    pub fn new(p: &HttpParams, size_scale: f64) -> Result<Self, ParamError> {
        if !(size_scale.is_finite() && size_scale > 0.0) {
            return Err(ParamError::NotPositive("size_scale", size_scale));
        }
        Ok(HttpModel {
            html: p.html_size.sampler()?,
            embedded: p.embedded_size.sampler()?,
            count: p.n_embedded.sampler()?,
            parsing: p.parsing_time.sampler()?,
            reading: p.reading_time.sampler()?,
            request: p.request_size.sampler()?,
            size_scale,
        })
    }

    pub fn reading_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.reading.sample(rng).max(0.0)
    }

    pub fn draw_page<R: Rng + ?Sized>(&self, rng: &mut R) -> PagePlan {
        let html = Fetch { request: round_half_up(self.request.sample(rng)), response: scaled_bytes(self.html.sample(rng), self.size_scale) };
        let parsing = self.parsing.sample(rng).max(0.0);
        let n = round_half_up(self.count.sample(rng)).min(MAX_EMBEDDED);
        let embedded = (0..n)
            .map(|_| Fetch { request: round_half_up(self.request.sample(rng)), response: scaled_bytes(self.embedded.sample(rng), self.size_scale) })
            .collect();
        let reading = self.reading_time(rng);
        PagePlan { html, parsing, embedded, reading }
    }
}

#[derive(Debug, Clone)]
pub struct FtpModel {
    file: Sampler,
    reading: Sampler,
    request: Sampler,
    size_scale: f64,
}

impl FtpModel {
    pub fn new(p: &FtpParams, size_scale: f64) -> Result<Self, ParamError> {
        if !(size_scale.is_finite() && size_scale > 0.0) {
            return Err(ParamError::NotPositive("size_scale", size_scale));
        }
        Ok(FtpModel { file: p.file_size.sampler()?, reading: p.reading_time.sampler()?, request: p.request_size.sampler()?, size_scale })
    }

    pub fn reading_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.reading.sample(rng).max(0.0)
    }

    pub fn draw_file<R: Rng + ?Sized>(&self, rng: &mut R) -> FilePlan {
        let fetch = Fetch { request: round_half_up(self.request.sample(rng)), response: scaled_bytes(self.file.sample(rng), self.size_scale) };
        FilePlan { fetch, reading: self.reading_time(rng) }
    }
}

impl HttpParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for d in [&self.html_size, &self.embedded_size, &self.n_embedded, &self.parsing_time, &self.reading_time, &self.request_size] {
            d.validate()?;
        }
        Ok(())
    }
}

impl FtpParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for d in [&self.file_size, &self.reading_time, &self.request_size] {
            d.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::derive_stream;

    #[test]
    fn embedded_count_is_capped() {
        let p = HttpParams { n_embedded: Dist::Constant { value: 1e6 }, ..HttpParams::default() };
        let m = HttpModel::new(&p, 1.0).unwrap();
        let page = m.draw_page(&mut derive_stream("cap", 1));
        assert_eq!(page.embedded.len(), 300);
    }

    #[test]
    fn ftp_files_respect_maximum() {
        let m = FtpModel::new(&FtpParams::default(), 1.0).unwrap();
        let mut rng = derive_stream("ftp/max", 4);
        for _ in 0..100_000 {
            assert!(m.draw_file(&mut rng).fetch.response <= 5_000_000);
        }
    }

    #[test]
    fn size_scale_leaves_requests_alone() {
        let frozen = |v| Dist::Constant { value: v };
        let p = HttpParams {
            html_size: frozen(10_000.0),
            embedded_size: frozen(20_000.0),
            n_embedded: frozen(2.0),
            request_size: frozen(350.0),
            ..HttpParams::default()
        };
        let page = HttpModel::new(&p, 0.01).unwrap().draw_page(&mut derive_stream("s", 0));
        assert_eq!(page.html, Fetch { request: 350, response: 100 });
        assert_eq!(page.embedded, vec![Fetch { request: 350, response: 200 }; 2]);
    }

    #[test]
    fn defaults_are_the_fitted_table_values() {
        let h = HttpParams::default();
        assert_eq!(h.html_size, Dist::TruncLognormal(TruncLognormalParams { mu: 7.90272, sigma: 1.7643, max: 2e6 }));
        assert_eq!(h.n_embedded, Dist::Gamma(GammaParams { kappa: 0.141385, theta: 40.3257 }));
        assert_eq!(h.reading_time, Dist::Lognormal(LognormalParams { mu: -0.495204, sigma: 2.7731 }));
        let f = FtpParams::default();
        assert_eq!(f.reading_time, Dist::Exponential(ExponentialParams { lambda: 0.006 }));
        assert!(h.validate().is_ok() && f.validate().is_ok());
    }
}

//! Time-series containers, vegetation-index computation, series splitting,
//! and synthetic generators.

mod csv_io;
mod generate;

pub use csv_io::{detect_format, load_series, CsvFormat, LoadOptions, Loaded};
pub use generate::{
    lorenz_series, lorenz_states, sine_series, white_noise_series, Generator, LorenzParams,
};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A uniformly sampled scalar series.
///
/// `dt_days` is the sampling interval (16 for the MODIS 16-day composites
/// this tool was designed around) and `t0_index` the offset of the first
/// sample within a parent series, so sub-series produced by [`split_series`]
/// keep their position in the original timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt_days: f64,
    t0_index: usize,
}

impl TimeSeries {
    /// Build a series, enforcing finite values, length >= 2 and a positive
    /// sampling interval.
    pub fn new(values: Vec<f64>, dt_days: f64) -> Result<Self> {
        Self::with_offset(values, dt_days, 0)
    }

    pub fn with_offset(values: Vec<f64>, dt_days: f64, t0_index: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooShort {
                context: "time series",
                needed: 2,
                got: values.len(),
            });
        }
        if !dt_days.is_finite() || dt_days <= 0.0 {
            return Err(Error::Parameter {
                name: "dt_days",
                reason: format!("must be positive, got {dt_days}"),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            values,
            dt_days,
            t0_index,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt_days(&self) -> f64 {
        self.dt_days
    }

    pub fn t0_index(&self) -> usize {
        self.t0_index
    }
}

/// One multispectral observation, unit-scaled reflectances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSample {
    pub nir: f64,
    pub red: f64,
    pub blue: f64,
}

impl BandSample {
    pub fn new(nir: f64, red: f64, blue: f64) -> Result<Self> {
        for (name, v) in [("nir", nir), ("red", red), ("blue", blue)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter {
                    name: "band",
                    reason: format!("{name} reflectance must be finite and in [0,1], got {v}"),
                });
            }
        }
        Ok(Self { nir, red, blue })
    }
}

/// Enhanced Vegetation Index of one band sample:
/// `2.5 * (NIR - RED) / (NIR + 6*RED - 7.5*BLUE + 1)`.
///
/// Rejects samples whose denominator is within 1e-9 of zero instead of
/// returning an unbounded ratio.
pub fn compute_evi(sample: BandSample) -> Result<f64> {
    let denom = sample.nir + 6.0 * sample.red - 7.5 * sample.blue + 1.0;
    if denom.abs() <= 1e-9 {
        return Err(Error::Degenerate(format!(
            "EVI denominator ~0 for nir={}, red={}, blue={}",
            sample.nir, sample.red, sample.blue
        )));
    }
    Ok(2.5 * (sample.nir - sample.red) / denom)
}

/// Where to cut a series into a pre-event and post-event part.
///
/// Samples strictly between `pre_end` and `post_start` are the transition
/// phase and are dropped by [`split_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pre_end: usize,
    post_start: usize,
}

impl SplitSpec {
    pub fn new(pre_end: usize, post_start: usize) -> Result<Self> {
        if pre_end >= post_start {
            return Err(Error::IndexRange(format!(
                "pre_end ({pre_end}) must be below post_start ({post_start})"
            )));
        }
        Ok(Self {
            pre_end,
            post_start,
        })
    }

    pub fn pre_end(&self) -> usize {
        self.pre_end
    }

    pub fn post_start(&self) -> usize {
        self.post_start
    }

    pub fn validate_for_len(&self, len: usize) -> Result<()> {
        if self.post_start >= len {
            return Err(Error::IndexRange(format!(
                "post_start ({}) out of range for series of length {len}",
                self.post_start
            )));
        }
        Ok(())
    }
}

/// Cut a series into `[0, pre_end]` and `[post_start, end]`, discarding the
/// transition samples in between. Both halves keep their absolute position
/// via `t0_index`.
pub fn split_series(series: &TimeSeries, spec: SplitSpec) -> Result<(TimeSeries, TimeSeries)> {
    spec.validate_for_len(series.len())?;
    let pre = TimeSeries::with_offset(
        series.values[..=spec.pre_end].to_vec(),
        series.dt_days,
        series.t0_index,
    )?;
    let post = TimeSeries::with_offset(
        series.values[spec.post_start..].to_vec(),
        series.dt_days,
        series.t0_index + spec.post_start,
    )?;
    Ok((pre, post))
}

/// A set of equal-length pixel series sharing one group label
/// (e.g. "burned-forest").
#[derive(Debug, Clone)]
pub struct PixelStack {
    series: BTreeMap<String, TimeSeries>,
    group: String,
}

impl PixelStack {
    pub fn new(series: BTreeMap<String, TimeSeries>, group: impl Into<String>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::Degenerate("empty pixel stack".into()));
        }
        let mut lens = series.iter().map(|(id, s)| (id, s.len()));
        let (_, first_len) = lens.next().expect("non-empty");
        for (id, len) in lens {
            if len != first_len {
                return Err(Error::DimensionMismatch(format!(
                    "pixel {id} has length {len}, expected {first_len}"
                )));
            }
        }
        Ok(Self {
            series,
            group: group.into(),
        })
    }

    pub fn with_group(mut self, group: impl Into<String>) -> Self {
        self.group = group.into();
        self
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn series_len(&self) -> usize {
        self.series.values().next().map_or(0, TimeSeries::len)
    }

    pub fn pixel_count(&self) -> usize {
        self.series.len()
    }

    /// Pixels in ascending id order; all iteration over a stack is
    /// deterministic.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &TimeSeries)> {
        self.series.iter().map(|(id, s)| (id.as_str(), s))
    }

    pub fn get(&self, pixel_id: &str) -> Option<&TimeSeries> {
        self.series.get(pixel_id)
    }

    /// Pointwise mean across pixels, in pixel-id order.
    pub fn mean_series(&self) -> TimeSeries {
        let n = self.series_len();
        let mut acc = vec![0.0; n];
        for (_, s) in self.iter() {
            for (a, v) in acc.iter_mut().zip(s.values()) {
                *a += v;
            }
        }
        let count = self.pixel_count() as f64;
        for a in &mut acc {
            *a /= count;
        }
        let dt = self.series.values().next().expect("non-empty").dt_days();
        TimeSeries::new(acc, dt).expect("mean of valid series is valid")
    }
}

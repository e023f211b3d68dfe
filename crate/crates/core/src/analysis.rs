//! Correlograms, flatness and overhead summaries.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("insufficient data: need more than {max_lag} points, got {len}")]
    InsufficientData { len: usize, max_lag: usize },
    #[error("max lag must be at least 1")]
    ZeroLag,
    #[error("empty series")]
    Empty,
}

/// Sample autocorrelation coefficients for lags `1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlogram {
    pub lags: Vec<usize>,
    pub coefficients: Vec<f64>,
}

impl Correlogram {
    pub fn max_lag(&self) -> usize {
        self.lags.last().copied().unwrap_or(0)
    }
}

/// Default correlogram depth: `min(10, len / 4)`.
pub fn default_max_lag(len: usize) -> usize {
    (len / 4).min(10)
}

/// Biased sample ACF: `r_k = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2`.
/// A zero-variance series has every coefficient defined as 0.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Correlogram, AnalysisError> {
    if max_lag == 0 {
        return Err(AnalysisError::ZeroLag);
    }
    if series.len() <= max_lag {
        return Err(AnalysisError::InsufficientData {
            len: series.len(),
            max_lag,
        });
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    let lags: Vec<usize> = (1..=max_lag).collect();
    let coefficients = if denom <= f64::EPSILON * n * (mean * mean).max(1.0) {
        vec![0.0; max_lag]
    } else {
        lags.iter()
            .map(|&k| dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
            .collect()
    };
    Ok(Correlogram { lags, coefficients })
}

pub fn autocorrelation_counts(
    series: &[usize],
    max_lag: usize,
) -> Result<Correlogram, AnalysisError> {
    let xs: Vec<f64> = series.iter().map(|&x| x as f64).collect();
    autocorrelation(&xs, max_lag)
}

/// Mean of `|r_k|` over all lags; 0 for an empty correlogram.
pub fn mean_abs_acf(c: &Correlogram) -> f64 {
    if c.coefficients.is_empty() {
        return 0.0;
    }
    c.coefficients.iter().map(|r| r.abs()).sum::<f64>() / c.coefficients.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessReport {
    pub mean: f64,
    pub std_dev: f64,
    /// `std_dev / mean`; `None` when the mean is 0 but the series still varies.
    pub coefficient_of_variation: Option<f64>,
    pub max_abs_deviation_from_mean: f64,
}

impl FlatnessReport {
    pub fn cv_is_undefined(&self) -> bool {
        self.coefficient_of_variation.is_none()
    }
}

/// Mean, population standard deviation, CV and largest deviation.
pub fn flatness(series: &[f64]) -> Result<FlatnessReport, AnalysisError> {
    if series.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std_dev = var.sqrt();
    let max_dev = series.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    let cv = if mean != 0.0 {
        Some(std_dev / mean.abs())
    } else if std_dev == 0.0 {
        Some(0.0)
    } else {
        None
    };
    Ok(FlatnessReport {
        mean,
        std_dev,
        coefficient_of_variation: cv,
        max_abs_deviation_from_mean: max_dev,
    })
}

pub fn flatness_counts(series: &[usize]) -> Result<FlatnessReport, AnalysisError> {
    let xs: Vec<f64> = series.iter().map(|&x| x as f64).collect();
    flatness(&xs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverheadKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadEvent {
    pub step: usize,
    pub kind: OverheadKind,
    pub latency_ms: f64,
}

/// Honeytoken read and write cost of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub total_honeytoken_read_ms: f64,
    pub total_write_ms: f64,
    pub writes_count: usize,
    pub reads_count: usize,
    pub per_step_read_ms: Vec<f64>,
    pub per_step_write_ms: Vec<f64>,
    pub per_step_reads: Vec<usize>,
    pub per_step_writes: Vec<usize>,
    /// Read plus write milliseconds for each scan step.
    pub per_step_overhead_ms: Vec<f64>,
}

impl OverheadReport {
    pub fn mean_step_overhead_ms(&self) -> f64 {
        if self.per_step_overhead_ms.is_empty() {
            0.0
        } else {
            self.per_step_overhead_ms.iter().sum::<f64>() / self.per_step_overhead_ms.len() as f64
        }
    }

    pub fn steps(&self) -> usize {
        self.per_step_overhead_ms.len()
    }
}

/// Partitions events by kind and bins them into `steps` scan steps.
/// Events past the last step extend the per-step series.
pub fn overhead_summary(events: &[OverheadEvent], steps: usize) -> OverheadReport {
    let steps = events
        .iter()
        .map(|e| e.step + 1)
        .max()
        .unwrap_or(0)
        .max(steps);
    let mut r = OverheadReport {
        total_honeytoken_read_ms: 0.0,
        total_write_ms: 0.0,
        writes_count: 0,
        reads_count: 0,
        per_step_read_ms: vec![0.0; steps],
        per_step_write_ms: vec![0.0; steps],
        per_step_reads: vec![0; steps],
        per_step_writes: vec![0; steps],
        per_step_overhead_ms: vec![0.0; steps],
    };
    for e in events {
        match e.kind {
            OverheadKind::Read => {
                r.per_step_read_ms[e.step] += e.latency_ms;
                r.per_step_reads[e.step] += 1;
            }
            OverheadKind::Write => {
                r.per_step_write_ms[e.step] += e.latency_ms;
                r.per_step_writes[e.step] += 1;
            }
        }
    }
    for i in 0..steps {
        r.per_step_overhead_ms[i] = r.per_step_read_ms[i] + r.per_step_write_ms[i];
    }
    r.total_honeytoken_read_ms = r.per_step_read_ms.iter().sum();
    r.total_write_ms = r.per_step_write_ms.iter().sum();
    r.reads_count = r.per_step_reads.iter().sum();
    r.writes_count = r.per_step_writes.iter().sum();
    r
}

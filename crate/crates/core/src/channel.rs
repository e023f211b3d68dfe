//! Reader channel model: collision-driven read loss and per-tag latencies.
//!
//! Read success is piecewise linear in the number of tags answering the
//! reader. The defaults put 82% success at 150 tags and 56% at 450 tags,
//! typical of a crowded shelf reader. Latencies are uniform
//! within the observed ranges (reads under 150 ms, writes 90 to 350 ms).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tag::{ShelfState, TagId};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("channel.{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub p0: f64,
    pub n0: f64,
    pub slope: f64,
    pub p_min: f64,
    pub read_latency_ms: (f64, f64),
    pub write_latency_ms: (f64, f64),
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            p0: 0.82,
            n0: 150.0,
            slope: 0.26 / 300.0,
            p_min: 0.10,
            read_latency_ms: (10.0, 150.0),
            write_latency_ms: (90.0, 350.0),
        }
    }
}

impl ChannelParams {
    /// Every tag is read on every scan.
    pub fn perfect() -> Self {
        Self {
            p0: 1.0,
            slope: 0.0,
            p_min: 1.0,
            ..Self::default()
        }
    }

    /// Constant read probability `p`, independent of tag count.
    pub fn constant(p: f64) -> Self {
        Self {
            p0: p,
            slope: 0.0,
            p_min: p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |field, reason: &str| {
            Err(ChannelError::Invalid {
                field,
                reason: reason.to_string(),
            })
        };
        if !(0.0..=1.0).contains(&self.p0) {
            return bad("p0", "must lie in [0, 1]");
        }
        if !(0.0..=self.p0).contains(&self.p_min) {
            return bad("p_min", "must lie in [0, p0]");
        }
        if !(self.slope >= 0.0 && self.slope.is_finite()) {
            return bad("slope", "must be a finite non-negative number");
        }
        if !(self.n0 >= 0.0 && self.n0.is_finite()) {
            return bad("n0", "must be a finite non-negative number");
        }
        for (field, (lo, hi)) in [
            ("read_latency_ms", self.read_latency_ms),
            ("write_latency_ms", self.write_latency_ms),
        ] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return bad(field, "bounds must satisfy 0 <= low <= high");
            }
        }
        Ok(())
    }
}

/// Probability that one tag is captured by a scan over `n_tags` tags.
pub fn read_probability(n_tags: usize, params: &ChannelParams) -> f64 {
    let excess = (n_tags as f64 - params.n0).max(0.0);
    (params.p0 - params.slope * excess).clamp(params.p_min, params.p0)
}

fn uniform_ms<R: Rng + ?Sized>((lo, hi): (f64, f64), rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn sample_read_latency<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> f64 {
    uniform_ms(params.read_latency_ms, rng)
}

pub fn sample_write_latency<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> f64 {
    uniform_ms(params.write_latency_ms, rng)
}

/// What one pass of the reader captured.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub t: usize,
    pub observed: Vec<TagId>,
    pub missed: usize,
    pub read_time_ms: f64,
    /// Latency of each honeytoken read, active or not.
    pub honeytoken_latencies_ms: Vec<f64>,
}

impl ScanResult {
    pub fn honeytoken_read_ms(&self) -> f64 {
        self.honeytoken_latencies_ms.iter().sum()
    }

    pub fn read_success(&self) -> f64 {
        let total = self.observed.len() + self.missed;
        if total == 0 {
            1.0
        } else {
            self.observed.len() as f64 / total as f64
        }
    }
}

/// Reads every physical tag independently with the count-dependent probability.
pub fn scan<R: Rng + ?Sized>(
    t: usize,
    shelf: &ShelfState,
    params: &ChannelParams,
    rng: &mut R,
) -> ScanResult {
    let n_tags = shelf.physical_tag_count();
    let p = read_probability(n_tags, params);
    let mut result = ScanResult {
        t,
        observed: Vec::with_capacity(n_tags),
        missed: 0,
        read_time_ms: 0.0,
        honeytoken_latencies_ms: Vec::new(),
    };
    for tag in shelf.all_tags() {
        if rng.random_bool(p) {
            let ms = sample_read_latency(params, rng);
            result.observed.push(tag.id);
            result.read_time_ms += ms;
            if tag.is_honeytoken() {
                result.honeytoken_latencies_ms.push(ms);
            }
        } else {
            result.missed += 1;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tag::{ItemType, Tag};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shelf(n: usize) -> ShelfState {
        let mut s = ShelfState::new(ItemType::from_code(1));
        for i in 0..n {
            s.real_tags.push_back(Tag::real(TagId::new(1, i as u32)));
        }
        s
    }

    #[test]
    fn calibration_anchors() {
        let p = ChannelParams::default();
        assert!((read_probability(150, &p) - 0.82).abs() < 1e-12);
        assert!((read_probability(450, &p) - 0.56).abs() < 1e-12);
        assert_eq!(read_probability(0, &p), 0.82);
        assert_eq!(read_probability(10_000, &p), 0.10);
    }

    #[test]
    fn probability_is_non_increasing() {
        let p = ChannelParams::default();
        let mut last = f64::INFINITY;
        for n in 0..2000 {
            let q = read_probability(n, &p);
            assert!(q <= last);
            last = q;
        }
    }

    #[test]
    fn extreme_channels() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let s = shelf(40);
        let all = scan(0, &s, &ChannelParams::perfect(), &mut r);
        assert_eq!(all.observed.len(), 40);
        assert_eq!(all.missed, 0);
        let none = scan(0, &s, &ChannelParams::constant(0.0), &mut r);
        assert!(none.observed.is_empty());
        assert_eq!(none.missed, 40);
        assert_eq!(none.read_time_ms, 0.0);
    }

    #[test]
    fn read_time_sums_observed_latencies() {
        let mut params = ChannelParams::perfect();
        params.read_latency_ms = (50.0, 50.0);
        let res = scan(3, &shelf(7), &params, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(res.t, 3);
        assert_eq!(res.read_time_ms, 350.0);
        assert!(res.honeytoken_latencies_ms.is_empty());
    }

    #[test]
    fn latency_samplers_respect_bounds() {
        let p = ChannelParams::default();
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let (mut rsum, mut wsum) = (0.0, 0.0);
        for _ in 0..10_000 {
            let rd = sample_read_latency(&p, &mut r);
            let wr = sample_write_latency(&p, &mut r);
            assert!((10.0..150.0).contains(&rd));
            assert!((90.0..=350.0).contains(&wr));
            rsum += rd;
            wsum += wr;
        }
        // uniform oracle: mean (a+b)/2, sd (b-a)/sqrt(12); allow 5 standard errors
        let se_r = 140.0 / 12f64.sqrt() / 100.0;
        let se_w = 260.0 / 12f64.sqrt() / 100.0;
        assert!((rsum / 1e4 - 80.0).abs() < 5.0 * se_r);
        assert!((wsum / 1e4 - 220.0).abs() < 5.0 * se_w);
    }

    #[test]
    fn degenerate_latency_bounds_are_constant() {
        let p = ChannelParams {
            read_latency_ms: (50.0, 50.0),
            write_latency_ms: (120.0, 120.0),
            ..ChannelParams::default()
        };
        let mut r = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            assert_eq!(sample_read_latency(&p, &mut r), 50.0);
            assert_eq!(sample_write_latency(&p, &mut r), 120.0);
        }
    }

    #[test]
    fn validation_names_field() {
        let p = ChannelParams {
            p_min: 0.9,
            ..ChannelParams::default()
        };
        assert_eq!(
            p.validate().unwrap_err().to_string(),
            "channel.p_min: must lie in [0, p0]"
        );
        let p = ChannelParams {
            write_latency_ms: (400.0, 90.0),
            ..ChannelParams::default()
        };
        assert!(p
            .validate()
            .unwrap_err()
            .to_string()
            .contains("write_latency_ms"));
        assert!(ChannelParams::default().validate().is_ok());
        assert!(ChannelParams::perfect().validate().is_ok());
    }

    #[test]
    fn scan_observations_are_independent_across_tags() {
        // correlation between two tags' read indicators over many seeds
        let s = shelf(2);
        let params = ChannelParams::constant(0.5);
        let n = 20_000;
        let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
        for seed in 0..n {
            let res = scan(0, &s, &params, &mut ChaCha8Rng::seed_from_u64(seed));
            let x = res.observed.iter().any(|id| id.serial == 0) as u8 as f64;
            let y = res.observed.iter().any(|id| id.serial == 1) as u8 as f64;
            a += x;
            b += y;
            ab += x * y;
        }
        let n = n as f64;
        let cov = ab / n - (a / n) * (b / n);
        let corr = cov / ((a / n) * (1.0 - a / n) * (b / n) * (1.0 - b / n)).sqrt();
        // 4 / sqrt(n) is ~4 standard errors of a null correlation
        assert!(corr.abs() < 4.0 / n.sqrt(), "corr {corr}");
    }
}

//! Ground-truth sales/restock traces: the store database's view.
//!
//! On disk a trace is a small CSV file:
//!
//! ```text
//! # initial_stock=80 epc_type=0x0000abcd
//! step,sales,restock
//! 0,2,0
//! 1,2,0
//! ```
//!
//! Within a step, sales are applied before restocks, so sales may never
//! exceed the stock left by the previous step.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::attacker::TrendSeries;
use crate::tag::ItemType;

pub const DEFAULT_EPC: u32 = 0x0000_ABCD;
const HEADER: &str = "step,sales,restock";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("stock underflow at step {step}")]
    StockUnderflow { step: usize },
    #[error("trace has no steps")]
    Empty,
    #[error("scenario parameter {field}: {reason}")]
    BadParameter { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub t: usize,
    pub sales: usize,
    pub restock: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub item_type: ItemType,
    pub initial_stock: usize,
    pub steps: Vec<TraceEvent>,
}

impl Trace {
    /// Builds a trace from per-step `(sales, restock)` pairs and validates it.
    pub fn from_counts(
        item_type: ItemType,
        initial_stock: usize,
        counts: &[(usize, usize)],
    ) -> Result<Self, TraceError> {
        let trace = Trace {
            item_type,
            initial_stock,
            steps: counts
                .iter()
                .enumerate()
                .map(|(t, &(sales, restock))| TraceEvent { t, sales, restock })
                .collect(),
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.steps.is_empty() {
            return Err(TraceError::Empty);
        }
        let mut stock = self.initial_stock;
        for ev in &self.steps {
            stock = stock
                .checked_sub(ev.sales)
                .ok_or(TraceError::StockUnderflow { step: ev.t })?
                + ev.restock;
        }
        Ok(())
    }

    /// Stock left after each step.
    pub fn stock_levels(&self) -> Vec<usize> {
        let mut stock = self.initial_stock;
        self.steps
            .iter()
            .map(|ev| {
                stock = stock.saturating_sub(ev.sales) + ev.restock;
                stock
            })
            .collect()
    }

    /// Largest number of real items on the shelf at any point.
    pub fn item_count(&self) -> usize {
        self.stock_levels()
            .into_iter()
            .max()
            .unwrap_or(0)
            .max(self.initial_stock)
    }

    pub fn sales(&self) -> Vec<usize> {
        self.steps.iter().map(|e| e.sales).collect()
    }

    pub fn restocks(&self) -> Vec<usize> {
        self.steps.iter().map(|e| e.restock).collect()
    }

    /// What a perfect observer scanning once before the trace and after every
    /// step would report.
    pub fn ground_truth(&self) -> TrendSeries {
        TrendSeries {
            t0: self.steps.first().map_or(0, |e| e.t),
            inventory: self.stock_levels(),
            apparent_sales: self.sales(),
            apparent_restock: self.restocks(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!(
            "# initial_stock={} epc_type=0x{:08x}\n{HEADER}\n",
            self.initial_stock, self.item_type.epc_type
        );
        for ev in &self.steps {
            let _ = writeln!(out, "{},{},{}", ev.t, ev.sales, ev.restock);
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self, TraceError> {
        let mut initial_stock = None;
        let mut epc_type = DEFAULT_EPC;
        let mut saw_header = false;
        let mut steps = Vec::new();
        let bad = |line: usize, reason: String| TraceError::Malformed { line, reason };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for pair in meta.split_whitespace() {
                    let Some((key, value)) = pair.split_once('=') else {
                        continue;
                    };
                    match key {
                        "initial_stock" => {
                            initial_stock = Some(value.parse::<usize>().map_err(|e| {
                                bad(line_no, format!("initial_stock `{value}`: {e}"))
                            })?)
                        }
                        "epc_type" => {
                            let hex = value
                                .strip_prefix("0x")
                                .or_else(|| value.strip_prefix("0X"))
                                .unwrap_or(value);
                            epc_type = u32::from_str_radix(hex, 16)
                                .map_err(|e| bad(line_no, format!("epc_type `{value}`: {e}")))?;
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["step", "sales", "restock"] {
                    return Err(bad(line_no, format!("expected header `{HEADER}`")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(bad(
                    line_no,
                    format!("expected 3 fields, got {}", fields.len()),
                ));
            }
            let mut nums = [0usize; 3];
            for (slot, (name, field)) in nums
                .iter_mut()
                .zip(["step", "sales", "restock"].iter().zip(&fields))
            {
                *slot = field
                    .parse()
                    .map_err(|_| bad(line_no, format!("{name} `{field}` is not a count")))?;
            }
            if nums[0] != steps.len() {
                return Err(bad(
                    line_no,
                    format!("expected step {}, got {}", steps.len(), nums[0]),
                ));
            }
            steps.push(TraceEvent {
                t: nums[0],
                sales: nums[1],
                restock: nums[2],
            });
        }
        if !saw_header && initial_stock.is_none() {
            return Err(TraceError::Empty);
        }
        let initial_stock = initial_stock.ok_or_else(|| {
            bad(
                1,
                "missing `# initial_stock=<n> epc_type=<hex>` line".to_string(),
            )
        })?;
        let trace = Trace {
            item_type: ItemType::from_code(epc_type),
            initial_stock,
            steps,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TraceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|source| TraceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    Trace::load(path)
}

fn param_error(field: &'static str, reason: &str) -> TraceError {
    TraceError::BadParameter {
        field,
        reason: reason.to_string(),
    }
}

/// Constant base sales with a discount spike every `period` steps; the shelf
/// is restocked to its initial level on the step after each spike.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCycle {
    pub base: usize,
    pub spike: usize,
    pub period: usize,
    pub steps: usize,
    /// Defaults to `base * period + spike`, just enough for one cycle.
    pub initial_stock: Option<usize>,
    pub epc_type: u32,
}

impl Default for DiscountCycle {
    fn default() -> Self {
        Self {
            base: 2,
            spike: 20,
            period: 30,
            steps: 90,
            initial_stock: None,
            epc_type: DEFAULT_EPC,
        }
    }
}

impl DiscountCycle {
    pub fn generate(&self) -> Result<Trace, TraceError> {
        if self.period < 2 {
            return Err(param_error("period", "must be at least 2"));
        }
        if self.steps == 0 {
            return Err(param_error("steps", "must be at least 1"));
        }
        let needed = self.base * (self.period - 1) + self.spike;
        let initial = self
            .initial_stock
            .unwrap_or(self.base * self.period + self.spike);
        if initial < needed {
            return Err(param_error(
                "initial_stock",
                &format!("must cover one cycle of sales ({needed})"),
            ));
        }
        let mut stock = initial;
        let mut counts = Vec::with_capacity(self.steps);
        for t in 0..self.steps {
            let sales = if t % self.period == self.period - 1 {
                self.spike
            } else {
                self.base
            };
            stock -= sales;
            let restock = if t > 0 && t % self.period == 0 {
                initial - stock
            } else {
                0
            };
            stock += restock;
            counts.push((sales, restock));
        }
        Trace::from_counts(ItemType::from_code(self.epc_type), initial, &counts)
    }
}

/// Random sales; a fixed-size delivery arrives whenever stock drops below
/// the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRestock {
    pub steps: usize,
    pub initial_stock: usize,
    pub threshold: usize,
    pub restock: usize,
    /// Sales are uniform on `0..=2 * mean_sales`, capped by the stock.
    pub mean_sales: usize,
    pub epc_type: u32,
}

impl Default for ThresholdRestock {
    fn default() -> Self {
        Self {
            steps: 50,
            initial_stock: 50,
            threshold: 10,
            restock: 50,
            mean_sales: 4,
            epc_type: DEFAULT_EPC,
        }
    }
}

impl ThresholdRestock {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Trace, TraceError> {
        if self.steps == 0 {
            return Err(param_error("steps", "must be at least 1"));
        }
        if self.restock == 0 {
            return Err(param_error("restock", "must be at least 1"));
        }
        if self.initial_stock < self.threshold {
            return Err(param_error(
                "initial_stock",
                "must be at least the threshold",
            ));
        }
        let mut stock = self.initial_stock;
        let mut counts = Vec::with_capacity(self.steps);
        for _ in 0..self.steps {
            let sales = rng.random_range(0..=2 * self.mean_sales).min(stock);
            stock -= sales;
            let restock = if stock < self.threshold {
                self.restock
            } else {
                0
            };
            stock += restock;
            counts.push((sales, restock));
        }
        Trace::from_counts(
            ItemType::from_code(self.epc_type),
            self.initial_stock,
            &counts,
        )
    }
}

/// Two products whose sales drift apart: the first loses demand, the second
/// gains it. Both receive the same delivery every step, so the first
/// product's stock climbs while the second one's drains.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetingProducts {
    pub steps: usize,
    /// Per-step delivery, also the starting sales rate of both products.
    pub restock: usize,
    /// How far sales have drifted from `restock` by the last step.
    pub spread: usize,
    pub noise_sd: f64,
    /// Starting stock of the first product; the second starts high enough
    /// to survive its deficit.
    pub initial_stock: Option<usize>,
    pub epc_types: (u32, u32),
}

impl Default for CompetingProducts {
    fn default() -> Self {
        Self {
            steps: 36,
            restock: 12,
            spread: 8,
            noise_sd: 2.0,
            initial_stock: None,
            epc_types: (0x0000_0A01, 0x0000_0A02),
        }
    }
}

impl CompetingProducts {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Trace, Trace), TraceError> {
        if self.steps < 2 {
            return Err(param_error("steps", "must be at least 2"));
        }
        if self.spread > self.restock {
            return Err(param_error("spread", "must not exceed restock"));
        }
        let noise = Normal::new(0.0, self.noise_sd)
            .map_err(|_| param_error("noise_sd", "must be finite and non-negative"))?;
        let initial_a = self.initial_stock.unwrap_or(2 * self.restock);
        let margin = 3.0 * self.noise_sd * (self.steps as f64).sqrt();
        let initial_b = initial_a + (self.spread * self.steps).div_ceil(2) + margin.ceil() as usize;

        let (mut stock_a, mut stock_b) = (initial_a, initial_b);
        let mut a = Vec::with_capacity(self.steps);
        let mut b = Vec::with_capacity(self.steps);
        let last = (self.steps - 1) as f64;
        for t in 0..self.steps {
            let drift = self.spread as f64 * t as f64 / last;
            let mut draw = |mean: f64, stock: usize| {
                let x = (mean + noise.sample(rng)).round().max(0.0) as usize;
                x.min(stock)
            };
            let sa = draw(self.restock as f64 - drift, stock_a);
            let sb = draw(self.restock as f64 + drift, stock_b);
            stock_a = stock_a - sa + self.restock;
            stock_b = stock_b - sb + self.restock;
            a.push((sa, self.restock));
            b.push((sb, self.restock));
        }
        Ok((
            Trace::from_counts(ItemType::from_code(self.epc_types.0), initial_a, &a)?,
            Trace::from_counts(ItemType::from_code(self.epc_types.1), initial_b, &b)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    DiscountCycle(DiscountCycle),
    ThresholdRestock(ThresholdRestock),
    CompetingProducts(CompetingProducts),
}

/// Generates the traces of one scenario: two for competing products, one otherwise.
pub fn gen_trace<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<Vec<Trace>, TraceError> {
    Ok(match scenario {
        Scenario::DiscountCycle(p) => vec![p.generate()?],
        Scenario::ThresholdRestock(p) => vec![p.generate(rng)?],
        Scenario::CompetingProducts(p) => {
            let (a, b) = p.generate(rng)?;
            vec![a, b]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_three_row_file() {
        let text =
            "# initial_stock=10 epc_type=0x0000abcd\nstep,sales,restock\n0,2,0\n1,3,5\n2,1,0\n";
        let t = Trace::parse_csv(text).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.initial_stock, 10);
        assert_eq!(t.item_type.epc_type, 0xABCD);
        assert_eq!(t.stock_levels(), vec![8, 10, 9]);
        assert_eq!(t.to_csv_string(), text);
    }

    #[test]
    fn underflow_names_step() {
        let text = "# initial_stock=4 epc_type=0x1\nstep,sales,restock\n0,1,0\n1,1,0\n2,5,0\n";
        let err = Trace::parse_csv(text).unwrap_err();
        assert_eq!(err.to_string(), "stock underflow at step 2");
    }

    #[test]
    fn malformed_row_names_line() {
        let text = "# initial_stock=4 epc_type=0x1\nstep,sales,restock\n0,1,0\n1,x,0\n";
        let err = Trace::parse_csv(text).unwrap_err();
        assert!(
            matches!(err, TraceError::Malformed { line: 4, .. }),
            "{err}"
        );
        let text = "# initial_stock=4\nstep,sales,restock\n0,1\n";
        assert!(matches!(
            Trace::parse_csv(text).unwrap_err(),
            TraceError::Malformed { line: 3, .. }
        ));
        let text = "# initial_stock=4\nstep,sales,restock\n1,1,0\n";
        assert!(Trace::parse_csv(text).is_err());
    }

    #[test]
    fn empty_inputs_error() {
        assert!(matches!(Trace::parse_csv(""), Err(TraceError::Empty)));
        assert!(matches!(
            Trace::parse_csv("# initial_stock=3\nstep,sales,restock\n"),
            Err(TraceError::Empty)
        ));
        assert!(Trace::parse_csv("step,sales,restock\n0,1,1\n").is_err());
    }

    #[test]
    fn ground_truth_conservation() {
        let t = Trace::from_counts(ItemType::from_code(1), 10, &[(2, 0), (3, 5), (1, 0)]).unwrap();
        let gt = t.ground_truth();
        assert_eq!(gt.inventory, vec![8, 10, 9]);
        assert_eq!(gt.apparent_sales, vec![2, 3, 1]);
        assert_eq!(gt.apparent_restock, vec![0, 5, 0]);
        let mut stock = t.initial_stock as i64;
        for (ev, level) in t.steps.iter().zip(t.stock_levels()) {
            stock += ev.restock as i64 - ev.sales as i64;
            assert_eq!(stock, level as i64);
        }
        assert_eq!(t.item_count(), 10);
    }

    #[test]
    fn discount_cycle_has_three_spikes() {
        let t = DiscountCycle::default().generate().unwrap();
        assert_eq!(t.len(), 90);
        // oracle: a spike is any step whose sales equal the spike size
        let spikes: Vec<usize> = t
            .steps
            .iter()
            .filter(|e| e.sales == 20)
            .map(|e| e.t)
            .collect();
        assert_eq!(spikes, vec![29, 59, 89]);
        assert_eq!(t.steps.iter().filter(|e| e.sales == 2).count(), 87);
        assert_eq!(t.initial_stock, 80);
        assert_eq!(t.item_count(), 80);
        let levels = t.stock_levels();
        assert_eq!(levels[29], 2);
        assert_eq!(levels[30], 80);
        assert_eq!(t.steps[30].restock, 80);
    }

    #[test]
    fn discount_cycle_rejects_bad_period() {
        let p = DiscountCycle {
            period: 0,
            ..DiscountCycle::default()
        };
        assert!(matches!(
            p.generate(),
            Err(TraceError::BadParameter {
                field: "period",
                ..
            })
        ));
        let p = DiscountCycle {
            initial_stock: Some(10),
            ..DiscountCycle::default()
        };
        assert!(p.generate().is_err());
    }

    #[test]
    fn threshold_restock_contract() {
        let p = ThresholdRestock::default();
        for seed in 0..50 {
            let t = p.generate(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let mut stock = t.initial_stock;
            for ev in &t.steps {
                stock -= ev.sales;
                if ev.restock > 0 {
                    assert!(stock < p.threshold);
                    assert_eq!(ev.restock, p.restock);
                } else {
                    assert!(stock >= p.threshold);
                }
                stock += ev.restock;
                assert!(stock <= p.initial_stock + p.restock);
            }
        }
    }

    #[test]
    fn competing_products_zero_noise_are_monotone_opposite() {
        let p = CompetingProducts {
            noise_sd: 0.0,
            ..CompetingProducts::default()
        };
        let (a, b) = p.generate(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(a.len(), 36);
        let la = a.stock_levels();
        let lb = b.stock_levels();
        assert!(la.windows(2).all(|w| w[0] <= w[1]));
        assert!(lb.windows(2).all(|w| w[0] >= w[1]));
        assert!(la.last() > la.first());
        assert!(lb.last() < lb.first());
        assert_ne!(a.item_type, b.item_type);
    }

    #[test]
    fn generated_traces_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scenarios = [
            Scenario::DiscountCycle(DiscountCycle::default()),
            Scenario::ThresholdRestock(ThresholdRestock::default()),
            Scenario::CompetingProducts(CompetingProducts::default()),
        ];
        for s in &scenarios {
            for t in gen_trace(s, &mut rng).unwrap() {
                assert_eq!(Trace::parse_csv(&t.to_csv_string()).unwrap(), t);
            }
        }
    }
}

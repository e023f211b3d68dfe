//! Randomizing the sales of two competing products: the attacker's
//! correlograms lose the trend.

use mirage::engine::{run, SimConfig};
use mirage::quantifier::GoalMode;
use mirage::trace::CompetingProducts;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bars(r: f64) -> String {
    let n = (r.abs() * 20.0).round() as usize;
    let bar = "#".repeat(n);
    if r < 0.0 {
        format!("{bar:>20}|")
    } else {
        format!("{:>20}|{bar:<20}", "")
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (a, b) = CompetingProducts::default().generate(&mut rng).unwrap();
    for (name, trace) in [("product A", a), ("product B", b)] {
        let cfg = SimConfig::new(trace.item_count(), GoalMode::RandomSales, 3);
        let report = run(&trace, &cfg).unwrap();
        let raw = report.raw_correlogram.as_ref().unwrap();
        let seen = report.mirage_correlogram.as_ref().unwrap();
        println!(
            "{name}: mean |ACF| raw {:.3}, attacker {:.3}",
            report.raw_mean_abs_acf().unwrap(),
            report.mirage_mean_abs_acf().unwrap()
        );
        println!("lag  {:^41}  {:^41}", "raw sales", "attacker");
        for k in 0..raw.coefficients.len() {
            println!(
                "{:>3}  {}  {}",
                raw.lags[k],
                bars(raw.coefficients[k]),
                bars(seen.coefficients[k])
            );
        }
        println!();
    }
}

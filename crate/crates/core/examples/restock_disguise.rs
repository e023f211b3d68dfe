//! Hiding threshold restocking. A flat restock goal has to match the largest
//! delivery every step, so it needs a budget of about twice that delivery,
//! and it only rises once a delivery has entered the goal window.

use mirage::analysis::flatness_counts;
use mirage::engine::{run, SimConfig};
use mirage::quantifier::GoalMode;
use mirage::trace::ThresholdRestock;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trace = ThresholdRestock::default().generate(&mut rng).unwrap();
    let deliveries = trace.restocks().iter().filter(|&&r| r > 0).count();
    println!(
        "{} steps, {deliveries} deliveries, item count {}",
        trace.len(),
        trace.item_count()
    );
    for (mode, multiplier) in [
        (GoalMode::FlatRestock, 1),
        (GoalMode::FlatRestock, 3),
        (GoalMode::RandomRestock, 1),
    ] {
        let cfg = SimConfig::new(multiplier * trace.item_count(), mode, 5);
        let report = run(&trace, &cfg).unwrap();
        let cv = |xs: &[usize]| {
            flatness_counts(xs)
                .unwrap()
                .coefficient_of_variation
                .unwrap_or(f64::NAN)
        };
        println!(
            "{mode} with {multiplier}x budget: restock cv raw {:.3} -> attacker {:.3}, mean |ACF| raw {:.3} -> attacker {:.3}",
            cv(report.raw_series()),
            cv(report.mirage_series()),
            report.raw_mean_abs_acf().unwrap(),
            report.mirage_mean_abs_acf().unwrap()
        );
        let seen: Vec<String> = report
            .mirage_series()
            .iter()
            .take(20)
            .map(|x| x.to_string())
            .collect();
        println!("  first 20 apparent restocks: {}", seen.join(" "));
        println!("  steps short of the goal: {}", report.shortfalls().count());
    }
}

//! More honeytokens flatten the correlogram but crowd the reader channel.

use mirage::engine::{sweep, SimConfig};
use mirage::quantifier::GoalMode;
use mirage::report::tradeoff_csv;
use mirage::trace::CompetingProducts;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (trace, _) = CompetingProducts::default().generate(&mut rng).unwrap();
    let cfg = SimConfig::new(0, GoalMode::RandomSales, 11);
    let rows = sweep(&trace, &cfg, &[0.5, 1.0, 1.5, 3.0], 30).unwrap();
    print!("{}", tradeoff_csv(&rows));
}

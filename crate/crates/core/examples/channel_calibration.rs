//! Read success against tag population, and the latency model.

use mirage::channel::{read_probability, sample_read_latency, sample_write_latency, ChannelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let params = ChannelParams::default();
    println!("tags  read probability");
    for n in [50, 150, 250, 300, 450, 600, 900, 1200] {
        println!("{n:>4}  {:.3}", read_probability(n, &params));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let reads: Vec<f64> = (0..n)
        .map(|_| sample_read_latency(&params, &mut rng))
        .collect();
    let writes: Vec<f64> = (0..n)
        .map(|_| sample_write_latency(&params, &mut rng))
        .collect();
    let stats = |xs: &[f64]| {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, mean, hi)
    };
    let (lo, mean, hi) = stats(&reads);
    println!("\nread latency  min {lo:.1} ms  mean {mean:.1} ms  max {hi:.1} ms");
    let (lo, mean, hi) = stats(&writes);
    println!("write latency min {lo:.1} ms  mean {mean:.1} ms  max {hi:.1} ms");
}

//! Flattening a discount sawtooth: the attacker sees a constant stock level.

use mirage::analysis::flatness_counts;
use mirage::channel::ChannelParams;
use mirage::engine::{run, SimConfig};
use mirage::quantifier::GoalMode;
use mirage::trace::DiscountCycle;

fn main() {
    let trace = DiscountCycle::default().generate().unwrap();
    let budget = trace.item_count();
    for (label, channel) in [
        ("perfect", ChannelParams::perfect()),
        ("default", ChannelParams::default()),
    ] {
        let cfg = SimConfig::new(budget, GoalMode::FlatInventory, 1).with_channel(channel);
        let report = run(&trace, &cfg).unwrap();
        let raw = flatness_counts(&report.ground_truth.inventory).unwrap();
        let seen = flatness_counts(&report.attacker_view.inventory).unwrap();
        println!(
            "{label:>7} channel: raw cv {:.3}, attacker cv {:.3}, writes {}, shortfall steps {}",
            raw.coefficient_of_variation.unwrap(),
            seen.coefficient_of_variation.unwrap(),
            report.overhead.writes_count,
            report.shortfalls().count()
        );
        if label == "perfect" {
            println!("   step  real  seen");
            for t in (0..trace.len()).step_by(6) {
                println!(
                    "   {t:>4}  {:>4}  {:>4}",
                    report.ground_truth.inventory[t], report.attacker_view.inventory[t]
                );
            }
        }
    }
}

//! A honeytoken through activation, reprogramming and deactivation, as the
//! eavesdropper sees it under a perfect channel.

use mirage::attacker::{diff_scans, filter_observation, ObservedInventory};
use mirage::channel::{scan, ChannelParams};
use mirage::programmer::{activate_token, deactivate_token, reprogram_token, IdRegistry};
use mirage::tag::{ItemType, ShelfState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn observe(t: usize, shelf: &ShelfState, rng: &mut ChaCha8Rng) -> ObservedInventory {
    filter_observation(
        &scan(t, shelf, &ChannelParams::perfect(), rng),
        &shelf.item_type,
    )
}

fn main() {
    let epc = 0x0000_ABCD;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut registry = IdRegistry::new(epc);
    let mut shelf = ShelfState::new(ItemType::from_code(epc));
    for _ in 0..5 {
        shelf
            .real_tags
            .push_back(registry.new_real_tag(&mut rng).unwrap());
    }
    shelf
        .inactive_pool
        .push(registry.new_dormant_token(&mut rng).unwrap());
    let mut prev = observe(0, &shelf, &mut rng);
    println!(
        "start: {} items visible, dormant token {}",
        prev.ids.len(),
        shelf.inactive_pool[0].id
    );

    let mut t = 0;
    let mut step = |label: &str, shelf: &ShelfState, rng: &mut ChaCha8Rng| {
        t += 1;
        let cur = observe(t, shelf, rng);
        let (sales, restock) = diff_scans(&prev, &cur);
        println!(
            "{label:<11} visible {}  apparent sales {sales}  apparent restock {restock}",
            cur.ids.len()
        );
        prev = cur;
    };

    let dormant = shelf.inactive_pool.pop().unwrap();
    let active = activate_token(&dormant, &mut registry, &mut rng).unwrap();
    println!("  activated as {}", active.id);
    shelf.active_tokens.push(active);
    step("activate", &shelf, &mut rng);

    let fresh = reprogram_token(&shelf.active_tokens[0], &mut registry, &mut rng).unwrap();
    println!("  reprogrammed as {}", fresh.id);
    shelf.active_tokens[0] = fresh;
    step("reprogram", &shelf, &mut rng);

    let dormant = deactivate_token(&shelf.active_tokens[0], &registry, &mut rng).unwrap();
    println!("  deactivated to {} (serial kept)", dormant.id);
    shelf.active_tokens.clear();
    shelf.inactive_pool.push(dormant);
    step("deactivate", &shelf, &mut rng);

    println!("registry holds {} serials", registry.len());
}

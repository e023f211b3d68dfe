//! How tag identifiers are laid out and what a shelf holds.

use mirage::tag::{pack_tag_id, unpack_tag_id, ItemType, ShelfState, Tag, TagId};

fn main() {
    let id = pack_tag_id(0x0000_ABCD, 42);
    println!("packed id:      {id:#018x}");
    println!("unpacked:       {:?}", unpack_tag_id(id));
    println!("displayed:      {}", TagId::from_u64(id));

    let mut shelf = ShelfState::new(ItemType::from_code(0x0000_ABCD));
    for serial in 0..3 {
        shelf
            .real_tags
            .push_back(Tag::real(TagId::new(0x0000_ABCD, serial)));
    }
    shelf
        .active_tokens
        .push(Tag::honeytoken(TagId::new(0x0000_ABCD, 100), true));
    // a dormant token carries a scrambled item code
    shelf
        .inactive_pool
        .push(Tag::honeytoken(TagId::new(0x1234_5678, 101), false));
    shelf.age_all();

    println!("\nshelf of {}:", shelf.item_type.label);
    for tag in shelf.all_tags() {
        println!(
            "  {}  {:?}  active={}  age={}",
            tag.id, tag.kind, tag.active, tag.age
        );
    }
    println!(
        "physical tags {}, honeytokens {}, mean real age {:?}",
        shelf.physical_tag_count(),
        shelf.honeytoken_count(),
        shelf.mean_real_age()
    );
    shelf.check_invariants(2).expect("consistent shelf");
}

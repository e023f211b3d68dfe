//! Honeytoken programming: collision-free serials and EPC scrambling.
//!
//! Activation writes the protected item type into the high 32 bits and a
//! fresh serial into the low 32 bits. Deactivation overwrites only the item
//! type with a random code, so a reader sees some unrelated product.

use std::collections::HashSet;

use rand::Rng;
use thiserror::Error;

use crate::tag::{Tag, TagId, TagKind};

/// Random draws before falling back to a linear probe for a free serial.
const MAX_REJECTIONS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgrammerError {
    #[error("serial space exhausted")]
    SerialSpaceExhausted,
    #[error("serial {0:08x} is already registered")]
    DuplicateSerial(u32),
    #[error("tag {id} cannot be {op}: expected an {expected} honeytoken")]
    WrongState {
        id: TagId,
        op: &'static str,
        expected: &'static str,
    },
}

/// Serials in use on one shelf, plus the item codes a scrambled tag must avoid.
#[derive(Debug, Clone)]
pub struct IdRegistry {
    used_serials: HashSet<u32>,
    protected_epc: u32,
    excluded_epcs: HashSet<u32>,
    serial_bits: u32,
}

impl IdRegistry {
    pub fn new(protected_epc: u32) -> Self {
        Self::with_serial_bits(protected_epc, 32)
    }

    /// A registry over a reduced serial space of `bits` bits (1..=32).
    pub fn with_serial_bits(protected_epc: u32, bits: u32) -> Self {
        assert!((1..=32).contains(&bits), "serial space must be 1..=32 bits");
        Self {
            used_serials: HashSet::new(),
            protected_epc,
            excluded_epcs: HashSet::new(),
            serial_bits: bits,
        }
    }

    /// Item codes of other simulated products; deactivation never produces them.
    pub fn exclude_epcs(&mut self, codes: impl IntoIterator<Item = u32>) {
        self.excluded_epcs
            .extend(codes.into_iter().filter(|&c| c != self.protected_epc));
    }

    pub fn protected_epc(&self) -> u32 {
        self.protected_epc
    }

    pub fn capacity(&self) -> u64 {
        1u64 << self.serial_bits
    }

    pub fn len(&self) -> usize {
        self.used_serials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used_serials.is_empty()
    }

    pub fn contains(&self, serial: u32) -> bool {
        self.used_serials.contains(&serial)
    }

    pub fn register(&mut self, serial: u32) -> Result<(), ProgrammerError> {
        if u64::from(serial) >= self.capacity() || !self.used_serials.insert(serial) {
            return Err(ProgrammerError::DuplicateSerial(serial));
        }
        Ok(())
    }

    pub fn release(&mut self, serial: u32) -> bool {
        self.used_serials.remove(&serial)
    }

    fn draw_serial<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.serial_bits == 32 {
            rng.random()
        } else {
            rng.random_range(0..self.capacity()) as u32
        }
    }

    /// Draws a serial not held by any tag on the shelf and registers it.
    pub fn generate_unique_serial<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<u32, ProgrammerError> {
        let capacity = self.capacity();
        if self.used_serials.len() as u64 >= capacity {
            return Err(ProgrammerError::SerialSpaceExhausted);
        }
        for _ in 0..MAX_REJECTIONS {
            let s = self.draw_serial(rng);
            if self.used_serials.insert(s) {
                return Ok(s);
            }
        }
        // nearly full space: probe upward from a random start
        let start = u64::from(self.draw_serial(rng));
        for offset in 0..capacity {
            let s = ((start + offset) % capacity) as u32;
            if self.used_serials.insert(s) {
                return Ok(s);
            }
        }
        Err(ProgrammerError::SerialSpaceExhausted)
    }

    /// A random item code that is neither the protected code nor excluded.
    pub fn scrambled_epc<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        loop {
            let code: u32 = rng.random();
            if code != self.protected_epc && !self.excluded_epcs.contains(&code) {
                return code;
            }
        }
    }

    /// A fresh real tag of the protected type.
    pub fn new_real_tag<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Tag, ProgrammerError> {
        let serial = self.generate_unique_serial(rng)?;
        Ok(Tag::real(TagId::new(self.protected_epc, serial)))
    }

    /// A fresh honeytoken that starts out deactivated.
    pub fn new_dormant_token<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
    ) -> Result<Tag, ProgrammerError> {
        let serial = self.generate_unique_serial(rng)?;
        let epc = self.scrambled_epc(rng);
        Ok(Tag::honeytoken(TagId::new(epc, serial), false))
    }
}

fn expect_token(tag: &Tag, active: bool, op: &'static str) -> Result<(), ProgrammerError> {
    if tag.kind != TagKind::Honeytoken || tag.active != active {
        return Err(ProgrammerError::WrongState {
            id: tag.id,
            op,
            expected: if active { "active" } else { "inactive" },
        });
    }
    Ok(())
}

/// Programs a dormant honeytoken as a new item of the protected type.
pub fn activate_token<R: Rng + ?Sized>(
    tag: &Tag,
    registry: &mut IdRegistry,
    rng: &mut R,
) -> Result<Tag, ProgrammerError> {
    expect_token(tag, false, "activated")?;
    let serial = registry.generate_unique_serial(rng)?;
    registry.release(tag.id.serial);
    Ok(Tag {
        id: TagId::new(registry.protected_epc, serial),
        kind: TagKind::Honeytoken,
        age: 0,
        active: true,
    })
}

/// Overwrites the item type of an active honeytoken with a random code.
/// The serial stays registered until the token is programmed again.
pub fn deactivate_token<R: Rng + ?Sized>(
    tag: &Tag,
    registry: &IdRegistry,
    rng: &mut R,
) -> Result<Tag, ProgrammerError> {
    expect_token(tag, true, "deactivated")?;
    Ok(Tag {
        id: TagId::new(registry.scrambled_epc(rng), tag.id.serial),
        active: false,
        ..*tag
    })
}

/// Gives an active honeytoken a fresh identity and resets its age.
/// Equivalent to a deactivation followed by an activation on the same tag.
pub fn reprogram_token<R: Rng + ?Sized>(
    tag: &Tag,
    registry: &mut IdRegistry,
    rng: &mut R,
) -> Result<Tag, ProgrammerError> {
    expect_token(tag, true, "reprogrammed")?;
    let dormant = deactivate_token(tag, registry, rng)?;
    activate_token(&dormant, registry, rng)
}

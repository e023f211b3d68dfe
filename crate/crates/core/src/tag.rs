//! Tag identities and shelf state.
//!
//! A tag carries a 64-bit identifier: the high 32 bits hold the EPC object
//! type, the low 32 bits a per-object serial. Honeytokens use the same layout
//! as real item tags, which is what makes them indistinguishable on the air.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Packs an EPC type and a serial into one 64-bit tag identifier.
pub fn pack_tag_id(epc_type: u32, serial: u32) -> u64 {
    (u64::from(epc_type) << 32) | u64::from(serial)
}

/// Splits a 64-bit tag identifier into `(epc_type, serial)`.
pub fn unpack_tag_id(id: u64) -> (u32, u32) {
    ((id >> 32) as u32, id as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TagId {
    pub epc_type: u32,
    pub serial: u32,
}

impl TagId {
    pub fn new(epc_type: u32, serial: u32) -> Self {
        Self { epc_type, serial }
    }

    pub fn to_u64(self) -> u64 {
        pack_tag_id(self.epc_type, self.serial)
    }

    pub fn from_u64(id: u64) -> Self {
        let (epc_type, serial) = unpack_tag_id(id);
        Self { epc_type, serial }
    }
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.to_u64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagKind {
    Real,
    Honeytoken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tag {
    pub id: TagId,
    pub kind: TagKind,
    /// Scan steps since the tag was placed on the shelf or last reprogrammed.
    pub age: u32,
    /// Always true for real tags.
    pub active: bool,
}

impl Tag {
    pub fn real(id: TagId) -> Self {
        Self {
            id,
            kind: TagKind::Real,
            age: 0,
            active: true,
        }
    }

    pub fn honeytoken(id: TagId, active: bool) -> Self {
        Self {
            id,
            kind: TagKind::Honeytoken,
            age: 0,
            active,
        }
    }

    pub fn is_honeytoken(&self) -> bool {
        self.kind == TagKind::Honeytoken
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ItemType {
    pub epc_type: u32,
    pub label: String,
}

impl ItemType {
    pub fn new(epc_type: u32, label: impl Into<String>) -> Self {
        Self {
            epc_type,
            label: label.into(),
        }
    }

    /// An item type labelled after its EPC code.
    pub fn from_code(epc_type: u32) -> Self {
        Self::new(epc_type, format!("item-{epc_type:08x}"))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShelfError {
    #[error("serial {0:08x} appears on more than one tag")]
    DuplicateSerial(u32),
    #[error("honeytoken count {actual} does not match budget {budget}")]
    BudgetMismatch { actual: usize, budget: usize },
    #[error("active honeytoken {0} does not carry the protected item type")]
    ActiveTokenWrongType(TagId),
    #[error("deactivated honeytoken {0} still carries the protected item type")]
    InactiveTokenProtectedType(TagId),
    #[error("tag {0} is filed in the wrong shelf set")]
    Misfiled(TagId),
}

/// Everything physically present on one shelf for one protected item type.
///
/// Real tags are kept oldest-first so sales can remove from the front.
#[derive(Debug, Clone)]
pub struct ShelfState {
    pub item_type: ItemType,
    pub real_tags: VecDeque<Tag>,
    pub active_tokens: Vec<Tag>,
    pub inactive_pool: Vec<Tag>,
}

impl ShelfState {
    pub fn new(item_type: ItemType) -> Self {
        Self {
            item_type,
            real_tags: VecDeque::new(),
            active_tokens: Vec::new(),
            inactive_pool: Vec::new(),
        }
    }

    pub fn honeytoken_count(&self) -> usize {
        self.active_tokens.len() + self.inactive_pool.len()
    }

    /// Number of tags that answer a reader, deactivated tokens included.
    pub fn physical_tag_count(&self) -> usize {
        self.real_tags.len() + self.honeytoken_count()
    }

    pub fn all_tags(&self) -> impl Iterator<Item = &Tag> {
        self.real_tags
            .iter()
            .chain(self.active_tokens.iter())
            .chain(self.inactive_pool.iter())
    }

    /// Advances every tag on the shelf by one scan step.
    pub fn age_all(&mut self) {
        for tag in self
            .real_tags
            .iter_mut()
            .chain(self.active_tokens.iter_mut())
            .chain(self.inactive_pool.iter_mut())
        {
            tag.age = tag.age.saturating_add(1);
        }
    }

    pub fn mean_real_age(&self) -> Option<f64> {
        if self.real_tags.is_empty() {
            return None;
        }
        let total: u64 = self.real_tags.iter().map(|t| u64::from(t.age)).sum();
        Some(total as f64 / self.real_tags.len() as f64)
    }

    /// Checks serial disjointness, the honeytoken budget, and the EPC contract
    /// of active and deactivated tokens.
    pub fn check_invariants(&self, budget: usize) -> Result<(), ShelfError> {
        let mut seen = HashSet::with_capacity(self.physical_tag_count());
        for tag in self.all_tags() {
            if !seen.insert(tag.id.serial) {
                return Err(ShelfError::DuplicateSerial(tag.id.serial));
            }
        }
        if self.honeytoken_count() != budget {
            return Err(ShelfError::BudgetMismatch {
                actual: self.honeytoken_count(),
                budget,
            });
        }
        let protected = self.item_type.epc_type;
        if let Some(t) = self.real_tags.iter().find(|t| t.is_honeytoken()) {
            return Err(ShelfError::Misfiled(t.id));
        }
        for t in &self.active_tokens {
            if !t.is_honeytoken() || !t.active {
                return Err(ShelfError::Misfiled(t.id));
            }
            if t.id.epc_type != protected {
                return Err(ShelfError::ActiveTokenWrongType(t.id));
            }
        }
        for t in &self.inactive_pool {
            if !t.is_honeytoken() || t.active {
                return Err(ShelfError::Misfiled(t.id));
            }
            if t.id.epc_type == protected {
                return Err(ShelfError::InactiveTokenProtectedType(t.id));
            }
        }
        Ok(())
    }
}

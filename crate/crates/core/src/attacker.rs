//! The illicit inventorier: turns raw scans into apparent stock, sales and
//! restock series for one product.
//!
//! The attacker keeps the exact set of IDs of the target type seen in each
//! scan. Any ID that vanishes between two scans counts as a sale, any new
//! one as a restock. Tags showing another item type are simply dropped.

use std::collections::BTreeSet;

use crate::channel::ScanResult;
use crate::tag::{ItemType, TagId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedInventory {
    pub t: usize,
    pub ids: BTreeSet<TagId>,
}

pub fn filter_observation(scan: &ScanResult, target: &ItemType) -> ObservedInventory {
    ObservedInventory {
        t: scan.t,
        ids: scan
            .observed
            .iter()
            .filter(|id| id.epc_type == target.epc_type)
            .copied()
            .collect(),
    }
}

/// `(apparent_sales, apparent_restock)` between two consecutive observations.
pub fn diff_scans(prev: &ObservedInventory, cur: &ObservedInventory) -> (usize, usize) {
    debug_assert!(prev.t < cur.t, "observations out of order");
    diff_ids(&prev.ids, &cur.ids)
}

fn diff_ids(prev: &BTreeSet<TagId>, cur: &BTreeSet<TagId>) -> (usize, usize) {
    (prev.difference(cur).count(), cur.difference(prev).count())
}

/// Stock level per step plus sales and restocks between consecutive steps.
/// Built from observations alone, the two difference series are one shorter
/// than `inventory`; with a baseline scan all three have the same length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrendSeries {
    pub t0: usize,
    pub inventory: Vec<usize>,
    pub apparent_sales: Vec<usize>,
    pub apparent_restock: Vec<usize>,
}

impl TrendSeries {
    pub fn len(&self) -> usize {
        self.inventory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inventory.is_empty()
    }

    /// The series a goal mode disguises.
    pub fn column(&self, which: crate::quantifier::TargetSeries) -> &[usize] {
        use crate::quantifier::TargetSeries;
        match which {
            TargetSeries::Sales => &self.apparent_sales,
            TargetSeries::Restock => &self.apparent_restock,
            TargetSeries::Inventory => &self.inventory,
        }
    }
}

pub fn build_series(observations: &[ObservedInventory]) -> TrendSeries {
    let mut series = TrendSeries {
        t0: observations.first().map_or(0, |o| o.t),
        inventory: observations.iter().map(|o| o.ids.len()).collect(),
        ..TrendSeries::default()
    };
    for pair in observations.windows(2) {
        let (s, r) = diff_scans(&pair[0], &pair[1]);
        series.apparent_sales.push(s);
        series.apparent_restock.push(r);
    }
    series
}

/// Like [`build_series`], but diffs the first observation against a baseline
/// scan taken before it, so that every step has a sales and restock count.
pub fn build_series_after(
    baseline: &BTreeSet<TagId>,
    observations: &[ObservedInventory],
) -> TrendSeries {
    let mut series = build_series(observations);
    if let Some(first) = observations.first() {
        let (s, r) = diff_ids(baseline, &first.ids);
        series.apparent_sales.insert(0, s);
        series.apparent_restock.insert(0, r);
    }
    series
}

//! Inter-operator settlement: totals owed to each operator, folded from the
//! allocations already attached to rated charges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billing::Period;
use crate::money::{div_half_even, Fixed, Money, SCALE};
use crate::rating::RatedCharge;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub period: Period,
    pub per_operator: BTreeMap<String, Money>,
    pub grand_total: Money,
}

impl SettlementReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SettlementError {
    #[error("charge `{record_id}` allocates {allocated} but grosses {gross}")]
    AllocationMismatch {
        record_id: String,
        allocated: Money,
        gross: Money,
    },
}

pub fn settle(charges: &[RatedCharge], period: Period) -> Result<SettlementReport, SettlementError> {
    let mut per_operator: BTreeMap<String, Money> = BTreeMap::new();
    for c in charges {
        let allocated = c.allocation_total();
        if allocated != c.gross_amount {
            return Err(SettlementError::AllocationMismatch {
                record_id: c.record_id.clone(),
                allocated,
                gross: c.gross_amount,
            });
        }
        for share in &c.operator_allocation {
            *per_operator.entry(share.operator_id.clone()).or_default() += share.amount;
        }
    }
    let grand_total = per_operator.values().sum();
    Ok(SettlementReport {
        period,
        per_operator,
        grand_total,
    })
}

/// Closed form for a duration charge when every operator bills per km·s:
/// T × Σ u_k·d_k, rounded once.
pub fn settle_uniform_duration(seconds: i64, segments: &[(Fixed, Fixed)]) -> Money {
    let sum: i128 = segments.iter().map(|(u, d)| u.raw() * d.raw()).sum();
    let scale = 10i128.pow(SCALE);
    Money::from_raw(div_half_even(sum * i128::from(seconds), scale))
}

//! Rating: turns one usage record into a [`RatedCharge`].
//!
//! Circuit records are charged on duration (or flat) only; volume and peak
//! rate are never read. Packet records may use any strategy. The QoS rebate
//! scales the usage charge, content fees are added afterwards, and the gross
//! amount is split across the operator path by largest remainder so the
//! shares always add back to the gross exactly.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{content_charge, negotiate, ContentCatalog, ContentError, CredentialSet, ServiceContract};
use crate::money::{Fixed, Money};
use crate::records::{OperatorSegment, QoSMetrics, ServiceType, SwitchingMode, UsageRecord};
use crate::tariff::{
    per_km_price, select_policy, unit_price, NoMatchingPolicy, Policy, PricedTier, QoSRebateRule, Strategy, TariffPlan,
    UnitPrice, BYTES_PER_MB,
};

/// What the usage part of a charge was priced on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChargeBasis {
    Flat,
    Duration,
    Volume,
    Content,
}

impl ChargeBasis {
    fn of(strategy: &Strategy) -> ChargeBasis {
        match strategy.usage() {
            Strategy::FlatRate { .. } => ChargeBasis::Flat,
            Strategy::DurationRate { .. } => ChargeBasis::Duration,
            Strategy::VolumeRate { .. } => ChargeBasis::Volume,
            Strategy::ContentRate { .. } | Strategy::SubscriptionPlusUsage { .. } => ChargeBasis::Content,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorShare {
    pub operator_id: String,
    pub amount: Money,
}

/// Rating result for one record, with enough of the record carried along
/// for invoicing (service, time, usage) without re-reading the UDR file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatedCharge {
    pub record_id: String,
    pub subscriber_id: String,
    pub policy_id: String,
    pub service_type: ServiceType,
    pub switching_mode: SwitchingMode,
    #[serde(with = "crate::records::utc_seconds")]
    pub start_time: DateTime<Utc>,
    pub duration_s: i64,
    pub volume_bytes: u64,
    pub access_network: String,
    pub basis: ChargeBasis,
    pub base_amount: Money,
    pub unit_price_used: Money,
    pub qos_rebate_factor: Fixed,
    pub content_fee: Money,
    pub gross_amount: Money,
    pub operator_allocation: Vec<OperatorShare>,
}

impl RatedCharge {
    /// Usage part after rebate, i.e. gross without the content fee.
    pub fn usage_amount(&self) -> Money {
        self.gross_amount - self.content_fee
    }

    pub fn allocation_total(&self) -> Money {
        self.operator_allocation.iter().map(|s| s.amount).sum()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("rated charge serializes")
    }

    pub fn from_line(line: &str) -> Result<RatedCharge, serde_json::Error> {
        serde_json::from_str(line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatingError {
    #[error(transparent)]
    NoMatchingPolicy(#[from] NoMatchingPolicy),
    #[error("{strategy} cannot rate circuit-switched record `{record_id}`")]
    StrategyUnsupportedForCircuit { record_id: String, strategy: &'static str },
    #[error("record `{record_id}`: {source}")]
    ContentItemUnknown { record_id: String, source: ContentError },
    #[error("record `{record_id}`: {source}")]
    ContentAccessDenied { record_id: String, source: ContentError },
}

impl RatingError {
    /// Record field a reject report should point at.
    pub fn field(&self) -> &'static str {
        match self {
            RatingError::NoMatchingPolicy(_) => "service_type",
            RatingError::StrategyUnsupportedForCircuit { .. } => "switching_mode",
            RatingError::ContentItemUnknown { .. } | RatingError::ContentAccessDenied { .. } => "content_item",
        }
    }
}

/// Content catalog plus, optionally, the credential sets to check access
/// against. Without credentials the delivered view is trusted as is.
#[derive(Debug, Clone, Copy, Default)]
pub struct ContentContext<'a> {
    pub catalog: Option<&'a ContentCatalog>,
    pub credentials: Option<&'a BTreeMap<String, CredentialSet>>,
}

/// Graduated band charge: each band's price covers only the bytes inside
/// it. Bytes past a bounded last band are priced at that band's rate.
pub fn graduated_charge(tiers: &[PricedTier], volume_bytes: u64) -> Money {
    let mut charged = 0u64;
    let mut total = Money::ZERO;
    for (i, tier) in tiers.iter().enumerate() {
        if charged >= volume_bytes {
            break;
        }
        let cap = match tier.up_to_bytes {
            Some(cap) if i + 1 < tiers.len() => cap.min(volume_bytes),
            _ => volume_bytes,
        };
        if cap > charged {
            total += tier
                .price_per_mb
                .mul_ratio(i128::from(cap - charged), i128::from(BYTES_PER_MB));
            charged = cap;
        }
    }
    total
}

fn duration_charge(u: &UnitPrice, seconds: i64) -> Money {
    match u {
        UnitPrice::PerSecond(per_second) => per_second.times(i128::from(seconds)),
        _ => Money::ZERO,
    }
}

/// Circuit reduction: only duration and flat strategies apply, and Q and R
/// are ignored.
pub fn rate_circuit(policy: &Policy, record: &UsageRecord, u: &UnitPrice) -> Result<Money, RatingError> {
    match policy.strategy.usage() {
        Strategy::DurationRate { .. } => Ok(duration_charge(u, record.duration_s())),
        Strategy::FlatRate {
            window,
            amount_per_period,
            ..
        } => {
            if window.is_some_and(|w| !w.contains(record.start_second_of_day())) {
                return Err(NoMatchingPolicy {
                    record_id: record.record_id.clone(),
                }
                .into());
            }
            Ok(*amount_per_period)
        }
        other => Err(RatingError::StrategyUnsupportedForCircuit {
            record_id: record.record_id.clone(),
            strategy: other.kind(),
        }),
    }
}

/// Packet-mode charge before rebate. Subscription fees are billed on the
/// invoice; content-rate policies leave the whole charge to the content fee.
pub fn rate_packet(policy: &Policy, record: &UsageRecord, u: &UnitPrice) -> Money {
    match (policy.strategy.usage(), u) {
        (Strategy::VolumeRate { .. }, UnitPrice::PerMegabyte(tiers)) => graduated_charge(tiers, record.volume_bytes),
        (Strategy::DurationRate { .. }, _) => duration_charge(u, record.duration_s()),
        (Strategy::FlatRate { amount_per_period, .. }, _) => *amount_per_period,
        _ => Money::ZERO,
    }
}

/// Multiplies (1 − fraction) into the factor for every violated rule,
/// starting from 1 and never going below 0.
pub fn qos_rebate(contract: &QoSMetrics, measured: &QoSMetrics, rules: &[QoSRebateRule]) -> Fixed {
    let mut factor = Fixed::ONE;
    for rule in rules {
        if rule.parameter.violated(contract, measured) {
            let fraction = rule.rebate_fraction.max(Fixed::ZERO).min(Fixed::ONE);
            factor = factor.mul(Fixed::ONE - fraction);
        }
    }
    factor.max(Fixed::ZERO)
}

/// Splits `gross` across the path in proportion to u_k·d_k, where u_k is
/// the segment's override or `default_rate`. Shares are floored to ledger
/// units and the leftover units go to the largest remainders (earlier
/// segments win ties). An all-zero weight vector splits equally.
pub fn allocate_operators(gross: Money, path: &[OperatorSegment], default_rate: Fixed) -> Vec<OperatorShare> {
    assert!(!path.is_empty(), "operator path must be non-empty");
    let mut weights: Vec<BigInt> = path
        .iter()
        .map(|s| {
            let w = BigInt::from(per_km_price(s.unit_price_override, Money::new(default_rate)).raw())
                * BigInt::from(s.distance_km.raw());
            w.max(BigInt::zero())
        })
        .collect();
    let mut total: BigInt = weights.iter().sum();
    if total.is_zero() {
        weights = vec![BigInt::from(1); path.len()];
        total = BigInt::from(path.len());
    }
    let gross_raw = BigInt::from(gross.raw());
    let mut shares = Vec::with_capacity(path.len());
    let mut remainders = Vec::with_capacity(path.len());
    for w in &weights {
        let (q, r) = (&gross_raw * w).div_mod_floor(&total);
        shares.push(q.to_i128().expect("share fits ledger range"));
        remainders.push(r);
    }
    let leftover = gross.raw() - shares.iter().sum::<i128>();
    let mut order: Vec<usize> = (0..path.len()).collect();
    order.sort_by(|a, b| remainders[*b].cmp(&remainders[*a]).then(a.cmp(b)));
    for idx in order.into_iter().take(leftover as usize) {
        shares[idx] += 1;
    }
    path.iter()
        .zip(shares)
        .map(|(seg, raw)| OperatorShare {
            operator_id: seg.operator_id.clone(),
            amount: Money::from_raw(raw),
        })
        .collect()
}

/// Per-km price used for segments without an override.
fn default_allocation_rate(policy: &Policy, u: &UnitPrice, volume_bytes: u64) -> Fixed {
    match policy.strategy.usage() {
        Strategy::DurationRate { unit_price_per_km_s } => unit_price_per_km_s.value(),
        _ => u.headline(volume_bytes).value(),
    }
}

fn content_fee(
    policy: &Policy,
    record: &UsageRecord,
    content: ContentContext<'_>,
) -> Result<(Money, Option<ServiceContract>), RatingError> {
    let Some(item_ref) = &record.content_item else {
        return Ok((Money::ZERO, None));
    };
    let unknown = |source| RatingError::ContentItemUnknown {
        record_id: record.record_id.clone(),
        source,
    };
    let catalog = content
        .catalog
        .ok_or_else(|| unknown(ContentError::ItemUnknown(item_ref.item_id.clone())))?;
    let view = catalog.view(&item_ref.item_id, &item_ref.view_id).map_err(unknown)?;
    if let Some(creds) = content.credentials {
        let held = creds
            .get(&record.subscriber_id)
            .cloned()
            .unwrap_or_else(|| CredentialSet {
                subscriber_id: record.subscriber_id.clone(),
                ..CredentialSet::default()
            });
        if !crate::content::identify(&held, &view.required_credentials) {
            return Err(RatingError::ContentAccessDenied {
                record_id: record.record_id.clone(),
                source: ContentError::AccessDenied {
                    subscriber_id: record.subscriber_id.clone(),
                    item_id: item_ref.item_id.clone(),
                    view_id: item_ref.view_id.clone(),
                },
            });
        }
    }
    let contract = negotiate(view, item_ref.decision, &record.subscriber_id, &item_ref.item_id);
    let fee = content_charge(&contract, policy).unwrap_or(Money::ZERO);
    Ok((fee, Some(contract)))
}

/// Rates one record and returns the service contract its content access
/// produced, if any.
pub fn rate_with_contract(
    plan: &TariffPlan,
    record: &UsageRecord,
    content: ContentContext<'_>,
) -> Result<(RatedCharge, Option<ServiceContract>), RatingError> {
    let policy = select_policy(plan, record)?;
    let u = unit_price(policy, record, plan);
    let base_amount = match record.switching_mode {
        SwitchingMode::Circuit => rate_circuit(policy, record, &u)?,
        SwitchingMode::Packet => rate_packet(policy, record, &u),
    };
    let qos_rebate_factor = plan
        .qos_contracts
        .get(&record.service_type)
        .map_or(Fixed::ONE, |contract| {
            qos_rebate(contract, &record.qos_measured, &plan.qos_rebate_rules)
        });
    let (content_fee, contract) = content_fee(policy, record, content)?;
    let gross_amount = base_amount.scale_by(qos_rebate_factor) + content_fee;
    let operator_allocation = allocate_operators(
        gross_amount,
        &record.operator_path,
        default_allocation_rate(policy, &u, record.volume_bytes),
    );
    let charge = RatedCharge {
        record_id: record.record_id.clone(),
        subscriber_id: record.subscriber_id.clone(),
        policy_id: policy.policy_id.clone(),
        service_type: record.service_type,
        switching_mode: record.switching_mode,
        start_time: record.start_time,
        duration_s: record.duration_s(),
        volume_bytes: record.volume_bytes,
        access_network: record.access_network.clone(),
        basis: ChargeBasis::of(&policy.strategy),
        base_amount,
        unit_price_used: u.headline(record.volume_bytes),
        qos_rebate_factor,
        content_fee,
        gross_amount,
        operator_allocation,
    };
    Ok((charge, contract))
}

pub fn rate_record(
    plan: &TariffPlan,
    record: &UsageRecord,
    content: ContentContext<'_>,
) -> Result<RatedCharge, RatingError> {
    rate_with_contract(plan, record, content).map(|(charge, _)| charge)
}

//! Invoices: per-subscriber monthly aggregation of rated charges, bundle
//! adjustments and taxes.
//!
//! Order of application is fixed: included allowances, then volume
//! discounts, then third-party discounts, then taxes on what remains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::money::{Fixed, Money};
use crate::rating::{ChargeBasis, RatedCharge};
use crate::records::ServiceType;
use crate::tariff::{Strategy, TariffPlan};

/// A calendar month in UTC, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    year: i32,
    month: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid period `{0}`, expected YYYY-MM")]
pub struct ParsePeriodError(String);

impl Period {
    pub fn new(year: i32, month: u32) -> Option<Period> {
        NaiveDate::from_ymd_opt(year, month, 1).map(|_| Period { year, month })
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid period")
    }

    pub fn next(&self) -> Period {
        if self.month == 12 {
            Period {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Period {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    pub fn last_day(&self) -> NaiveDate {
        self.next().first_day().pred_opt().expect("date in range")
    }

    pub fn start(&self) -> DateTime<Utc> {
        Utc.from_utc_datetime(&self.first_day().and_hms_opt(0, 0, 0).expect("midnight"))
    }

    /// Length of the month in seconds.
    pub fn seconds(&self) -> i64 {
        (self.next().start() - self.start()).num_seconds()
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        t.year() == self.year && t.month() == self.month
    }
}

impl FromStr for Period {
    type Err = ParsePeriodError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePeriodError(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(err)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(err());
        }
        Period::new(y.parse().map_err(|_| err())?, m.parse().map_err(|_| err())?).ok_or_else(err)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllowanceMetric {
    Seconds,
    Bytes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeThreshold {
    pub above_bytes: u64,
    pub discount_fraction: Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BundleKind {
    /// The first `amount` seconds or bytes of a service in the period are free.
    IncludedAllowance {
        service_type: ServiceType,
        metric: AllowanceMetric,
        amount: u64,
    },
    /// Discount on volume-priced charges once the period's volume passes a
    /// threshold; the highest threshold crossed wins.
    VolumeDiscount { thresholds: Vec<VolumeThreshold> },
    /// Discount on usage charges when the invoice context carries the tag.
    ThirdPartyDiscount {
        trigger_tag: String,
        discount_fraction: Fixed,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleRule {
    pub rule_id: String,
    pub kind: BundleKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxScope {
    #[default]
    All,
    Services(BTreeSet<ServiceType>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxRule {
    pub jurisdiction: String,
    pub rate: Fixed,
    #[serde(default)]
    pub applies_to: TaxScope,
    /// Restricts the rule to usage on these access networks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub access_networks: Option<BTreeSet<String>>,
}

impl TaxRule {
    fn covers(&self, service: ServiceType, network: Option<&str>) -> bool {
        let service_ok = match &self.applies_to {
            TaxScope::All => true,
            TaxScope::Services(s) => s.contains(&service),
        };
        let network_ok = match (&self.access_networks, network) {
            (None, _) => true,
            (Some(nets), Some(n)) => nets.contains(n),
            (Some(_), None) => false,
        };
        service_ok && network_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvoiceLine {
    pub record_id: String,
    pub service_type: ServiceType,
    #[serde(with = "crate::records::utc_seconds")]
    pub start_time: DateTime<Utc>,
    pub access_network: String,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscriptionFee {
    pub policy_id: String,
    /// Service of the first charge that used the subscription; decides
    /// which tax scopes the fee falls in.
    pub service_type: ServiceType,
    pub amount: Money,
}

/// A discount; `amount` is never positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleAdjustment {
    pub rule_id: String,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxLine {
    pub jurisdiction: String,
    pub amount: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvoicePeriod {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invoice {
    pub subscriber_id: String,
    pub currency: String,
    pub period: InvoicePeriod,
    pub line_items: Vec<InvoiceLine>,
    pub subscription_fees: Vec<SubscriptionFee>,
    pub bundle_adjustments: Vec<BundleAdjustment>,
    pub subtotal: Money,
    pub tax_lines: Vec<TaxLine>,
    pub total: Money,
}

impl Invoice {
    /// subtotal = lines + fees + adjustments and total = subtotal + taxes.
    pub fn balances(&self) -> bool {
        let lines: Money = self.line_items.iter().map(|l| l.amount).sum();
        let fees: Money = self.subscription_fees.iter().map(|f| f.amount).sum();
        let adjustments: Money = self.bundle_adjustments.iter().map(|a| a.amount).sum();
        let taxes: Money = self.tax_lines.iter().map(|t| t.amount).sum();
        self.subtotal == lines + fees + adjustments
            && self.total == self.subtotal + taxes
            && !self.subtotal.is_negative()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("invoice serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BillingError {
    #[error("charge `{record_id}` belongs to `{owner}`, not `{subscriber_id}`")]
    ForeignCharge {
        record_id: String,
        owner: String,
        subscriber_id: String,
    },
    #[error("charge `{record_id}` falls outside period {period}")]
    PeriodMismatch { record_id: String, period: Period },
    #[error("charge `{record_id}` references policy `{policy_id}` missing from the plan")]
    UnknownPolicy { record_id: String, policy_id: String },
}

/// One invoice line while bundles are applied.
#[derive(Debug, Clone)]
pub struct DraftLine {
    pub charge: RatedCharge,
    /// Usage part still open to discounts.
    pub discountable: Money,
    /// Discounts already taken against this line (non-negative).
    pub discounted: Money,
}

impl DraftLine {
    fn take(&mut self, wanted: Money) -> Money {
        let taken = wanted.min(self.discountable).max(Money::ZERO);
        self.discountable -= taken;
        self.discounted += taken;
        taken
    }

    fn net(&self) -> Money {
        self.charge.gross_amount - self.discounted
    }
}

/// Invoice under construction: lines in record-time order plus
/// subscription fees.
#[derive(Debug, Clone, Default)]
pub struct InvoiceDraft {
    pub lines: Vec<DraftLine>,
    pub fees: Vec<SubscriptionFee>,
}

impl InvoiceDraft {
    fn subtotal_before_bundles(&self) -> Money {
        self.lines.iter().map(|l| l.charge.gross_amount).sum::<Money>()
            + self.fees.iter().map(|f| f.amount).sum::<Money>()
    }
}

fn allowance_usage(charge: &RatedCharge, metric: AllowanceMetric) -> u64 {
    match metric {
        AllowanceMetric::Seconds => charge.duration_s.max(0) as u64,
        AllowanceMetric::Bytes => charge.volume_bytes,
    }
}

/// Bundle discounts in application order. Each rule that discounts
/// anything yields one adjustment; no line is discounted past its usage
/// amount.
pub fn apply_bundles(
    draft: &mut InvoiceDraft,
    bundles: &[BundleRule],
    context: &BTreeSet<String>,
) -> Vec<BundleAdjustment> {
    let stage = |b: &BundleRule| match b.kind {
        BundleKind::IncludedAllowance { .. } => 0,
        BundleKind::VolumeDiscount { .. } => 1,
        BundleKind::ThirdPartyDiscount { .. } => 2,
    };
    let mut ordered: Vec<&BundleRule> = bundles.iter().collect();
    ordered.sort_by_key(|b| stage(b));

    let mut out = Vec::new();
    for rule in ordered {
        let discount = match &rule.kind {
            BundleKind::IncludedAllowance {
                service_type,
                metric,
                amount,
            } => {
                let mut left = *amount;
                let mut total = Money::ZERO;
                for line in draft
                    .lines
                    .iter_mut()
                    .filter(|l| l.charge.service_type == *service_type)
                {
                    if left == 0 {
                        break;
                    }
                    let used = allowance_usage(&line.charge, *metric);
                    if used == 0 {
                        continue;
                    }
                    let covered = used.min(left);
                    left -= covered;
                    let usage = line.charge.usage_amount();
                    let wanted = if covered == used {
                        usage
                    } else {
                        usage.mul_ratio(i128::from(covered), i128::from(used))
                    };
                    total += line.take(wanted);
                }
                total
            }
            BundleKind::VolumeDiscount { thresholds } => {
                let is_volume = |l: &DraftLine| l.charge.basis == ChargeBasis::Volume;
                let volume: u64 = draft
                    .lines
                    .iter()
                    .filter(|l| is_volume(l))
                    .map(|l| l.charge.volume_bytes)
                    .fold(0u64, u64::saturating_add);
                match thresholds.iter().rfind(|t| volume > t.above_bytes) {
                    Some(t) => draft
                        .lines
                        .iter_mut()
                        .filter(|l| is_volume(l))
                        .map(|l| {
                            let wanted = l.discountable.scale_by(t.discount_fraction);
                            l.take(wanted)
                        })
                        .sum(),
                    None => Money::ZERO,
                }
            }
            BundleKind::ThirdPartyDiscount {
                trigger_tag,
                discount_fraction,
            } => {
                if context.contains(trigger_tag) {
                    draft
                        .lines
                        .iter_mut()
                        .map(|l| {
                            let wanted = l.discountable.scale_by(*discount_fraction);
                            l.take(wanted)
                        })
                        .sum()
                } else {
                    Money::ZERO
                }
            }
        };
        if !discount.is_zero() {
            out.push(BundleAdjustment {
                rule_id: rule.rule_id.clone(),
                amount: -discount,
            });
        }
    }
    out
}

/// One tax line per rule: rate × the post-discount amount of the lines and
/// fees in the rule's scope.
pub fn apply_tax(draft: &InvoiceDraft, rules: &[TaxRule]) -> Vec<TaxLine> {
    rules
        .iter()
        .map(|rule| {
            let lines: Money = draft
                .lines
                .iter()
                .filter(|l| rule.covers(l.charge.service_type, Some(&l.charge.access_network)))
                .map(DraftLine::net)
                .sum();
            let fees: Money = draft
                .fees
                .iter()
                .filter(|f| rule.covers(f.service_type, None))
                .map(|f| f.amount)
                .sum();
            TaxLine {
                jurisdiction: rule.jurisdiction.clone(),
                amount: (lines + fees).scale_by(rule.rate),
            }
        })
        .collect()
}

/// Builds the subscriber's invoice for `period`.
pub fn aggregate_invoice(
    subscriber_id: &str,
    period: Period,
    charges: &[RatedCharge],
    plan: &TariffPlan,
    context: &BTreeSet<String>,
) -> Result<Invoice, BillingError> {
    for c in charges {
        if c.subscriber_id != subscriber_id {
            return Err(BillingError::ForeignCharge {
                record_id: c.record_id.clone(),
                owner: c.subscriber_id.clone(),
                subscriber_id: subscriber_id.to_string(),
            });
        }
        if !period.contains(c.start_time) {
            return Err(BillingError::PeriodMismatch {
                record_id: c.record_id.clone(),
                period,
            });
        }
    }
    let mut sorted: Vec<&RatedCharge> = charges.iter().collect();
    sorted.sort_by(|a, b| {
        a.start_time
            .cmp(&b.start_time)
            .then_with(|| a.record_id.cmp(&b.record_id))
    });

    let mut draft = InvoiceDraft::default();
    let mut billed_subscriptions = BTreeSet::new();
    for c in sorted {
        let policy = plan.policy(&c.policy_id).ok_or_else(|| BillingError::UnknownPolicy {
            record_id: c.record_id.clone(),
            policy_id: c.policy_id.clone(),
        })?;
        if let Strategy::SubscriptionPlusUsage { monthly_fee, .. } = &policy.strategy {
            if billed_subscriptions.insert(policy.policy_id.clone()) {
                draft.fees.push(SubscriptionFee {
                    policy_id: policy.policy_id.clone(),
                    service_type: c.service_type,
                    amount: *monthly_fee,
                });
            }
        }
        draft.lines.push(DraftLine {
            discountable: c.usage_amount().max(Money::ZERO),
            discounted: Money::ZERO,
            charge: c.clone(),
        });
    }

    let bundle_adjustments = apply_bundles(&mut draft, &plan.bundles, context);
    let subtotal = draft.subtotal_before_bundles() + bundle_adjustments.iter().map(|a| a.amount).sum::<Money>();
    let tax_lines = apply_tax(&draft, &plan.tax_rules);
    let total = subtotal + tax_lines.iter().map(|t| t.amount).sum::<Money>();

    Ok(Invoice {
        subscriber_id: subscriber_id.to_string(),
        currency: plan.currency.clone(),
        period: InvoicePeriod {
            start: period.first_day(),
            end: period.last_day(),
        },
        line_items: draft
            .lines
            .iter()
            .map(|l| InvoiceLine {
                record_id: l.charge.record_id.clone(),
                service_type: l.charge.service_type,
                start_time: l.charge.start_time,
                access_network: l.charge.access_network.clone(),
                amount: l.charge.gross_amount,
            })
            .collect(),
        subscription_fees: draft.fees,
        bundle_adjustments,
        subtotal,
        tax_lines,
        total,
    })
}

/// Plain-text rendering; every amount is rounded half-even to `digits`
/// places on its own.
pub fn render_text(invoice: &Invoice, digits: u32) -> String {
    let amt = |m: Money| m.present(digits);
    let mut out = String::new();
    let _ = writeln!(out, "INVOICE {}", invoice.subscriber_id);
    let _ = writeln!(
        out,
        "Period {} .. {}   Currency {}",
        invoice.period.start, invoice.period.end, invoice.currency
    );
    let _ = writeln!(out);
    if !invoice.line_items.is_empty() {
        let _ = writeln!(out, "Usage");
        for l in &invoice.line_items {
            let _ = writeln!(
                out,
                "  {}  {:<24} {:<16} {:>14}",
                l.start_time.format("%Y-%m-%d %H:%M:%S"),
                l.record_id,
                l.service_type.to_string(),
                amt(l.amount)
            );
        }
    }
    if !invoice.subscription_fees.is_empty() {
        let _ = writeln!(out, "Subscriptions");
        for f in &invoice.subscription_fees {
            let _ = writeln!(out, "  {:<59} {:>14}", f.policy_id, amt(f.amount));
        }
    }
    if !invoice.bundle_adjustments.is_empty() {
        let _ = writeln!(out, "Bundles and discounts");
        for a in &invoice.bundle_adjustments {
            let _ = writeln!(out, "  {:<59} {:>14}", a.rule_id, amt(a.amount));
        }
    }
    let _ = writeln!(out, "{:<61} {:>14}", "Subtotal", amt(invoice.subtotal));
    for t in &invoice.tax_lines {
        let _ = writeln!(out, "  Tax {:<55} {:>14}", t.jurisdiction, amt(t.amount));
    }
    let _ = writeln!(out, "{:<61} {:>14}", "Total", amt(invoice.total));
    out
}

/// Charges grouped by subscriber, in subscriber order.
pub fn group_by_subscriber(charges: &[RatedCharge]) -> BTreeMap<String, Vec<RatedCharge>> {
    let mut out: BTreeMap<String, Vec<RatedCharge>> = BTreeMap::new();
    for c in charges {
        out.entry(c.subscriber_id.clone()).or_default().push(c.clone());
    }
    out
}

//! Tariff plans: an ordered policy set, first-match policy selection and
//! unit-price evaluation with location, network and margin modifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::billing::{BundleKind, BundleRule, TaxRule};
use crate::money::{Fixed, Money, PRICE_DIGITS, SCALE};
use crate::records::{PaymentOption, QoSMetrics, ServiceType, SwitchingMode, UsageRecord, Violation};

/// Bytes per priced megabyte.
pub const BYTES_PER_MB: u64 = 1_000_000;

const SECONDS_PER_DAY: u32 = 86_400;

/// Inclusive time-of-day window, written `HH:MM-HH:MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeWindow {
    pub start_minute: u16,
    pub end_minute: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid time window `{0}`, expected HH:MM-HH:MM")]
pub struct ParseWindowError(String);

impl TimeWindow {
    pub fn new(start: (u16, u16), end: (u16, u16)) -> Self {
        TimeWindow {
            start_minute: start.0 * 60 + start.1,
            end_minute: end.0 * 60 + end.1,
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.start_minute <= self.end_minute
    }

    /// Both ends inclusive, evaluated on the second of the day.
    pub fn contains(&self, second_of_day: u32) -> bool {
        let lo = u32::from(self.start_minute) * 60;
        let hi = u32::from(self.end_minute) * 60;
        lo <= second_of_day && second_of_day <= hi
    }
}

impl FromStr for TimeWindow {
    type Err = ParseWindowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseWindowError(s.to_string());
        let hhmm = |part: &str| -> Result<u16, ParseWindowError> {
            let (h, m) = part.trim().split_once(':').ok_or_else(err)?;
            if h.len() != 2 || m.len() != 2 {
                return Err(err());
            }
            let h: u16 = h.parse().map_err(|_| err())?;
            let m: u16 = m.parse().map_err(|_| err())?;
            if h > 23 || m > 59 {
                return Err(err());
            }
            Ok(h * 60 + m)
        };
        let (a, b) = s.split_once('-').ok_or_else(err)?;
        Ok(TimeWindow {
            start_minute: hhmm(a)?,
            end_minute: hhmm(b)?,
        })
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:02}:{:02}-{:02}:{:02}",
            self.start_minute / 60,
            self.start_minute % 60,
            self.end_minute / 60,
            self.end_minute % 60
        )
    }
}

impl Serialize for TimeWindow {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TimeWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Record attributes a policy selector looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectorInput {
    pub service_type: ServiceType,
    pub payment_option: PaymentOption,
    pub switching_mode: SwitchingMode,
    pub second_of_day: u32,
}

impl From<&UsageRecord> for SelectorInput {
    fn from(r: &UsageRecord) -> Self {
        SelectorInput {
            service_type: r.service_type,
            payment_option: r.payment_option,
            switching_mode: r.switching_mode,
            second_of_day: r.start_second_of_day(),
        }
    }
}

/// Predicate over service type, time of day, payment option and switching
/// mode. An absent constraint matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_types: Option<BTreeSet<ServiceType>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<TimeWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payment_options: Option<BTreeSet<PaymentOption>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switching_modes: Option<BTreeSet<SwitchingMode>>,
}

impl Selector {
    pub fn services(services: impl IntoIterator<Item = ServiceType>) -> Self {
        Selector {
            service_types: Some(services.into_iter().collect()),
            ..Selector::default()
        }
    }

    pub fn matches(&self, input: &SelectorInput) -> bool {
        self.service_types
            .as_ref()
            .is_none_or(|s| s.contains(&input.service_type))
            && self
                .payment_options
                .as_ref()
                .is_none_or(|s| s.contains(&input.payment_option))
            && self
                .switching_modes
                .as_ref()
                .is_none_or(|s| s.contains(&input.switching_mode))
            && self.window.is_none_or(|w| w.contains(input.second_of_day))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeTier {
    /// Upper bound of the band in bytes; `None` marks the unbounded last band.
    pub up_to_bytes: Option<u64>,
    pub price_per_mb: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    FlatRate {
        amount_per_period: Money,
        #[serde(default = "session_period")]
        period: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<TimeWindow>,
    },
    DurationRate {
        unit_price_per_km_s: Money,
    },
    /// Graduated bands: each band's price applies only to the bytes inside it.
    VolumeRate {
        tiers: Vec<VolumeTier>,
    },
    ContentRate {
        surcharge_multiplier: Fixed,
    },
    SubscriptionPlusUsage {
        monthly_fee: Money,
        usage: Box<Strategy>,
    },
}

fn session_period() -> String {
    "session".to_string()
}

impl Strategy {
    pub fn kind(&self) -> &'static str {
        match self {
            Strategy::FlatRate { .. } => "FlatRate",
            Strategy::DurationRate { .. } => "DurationRate",
            Strategy::VolumeRate { .. } => "VolumeRate",
            Strategy::ContentRate { .. } => "ContentRate",
            Strategy::SubscriptionPlusUsage { .. } => "SubscriptionPlusUsage",
        }
    }

    /// The strategy that prices usage, looking through a subscription.
    pub fn usage(&self) -> &Strategy {
        match self {
            Strategy::SubscriptionPlusUsage { usage, .. } => usage.usage(),
            other => other,
        }
    }

    fn flat_window(&self) -> Option<TimeWindow> {
        match self.usage() {
            Strategy::FlatRate { window, .. } => *window,
            _ => None,
        }
    }

    /// Multiplier applied to resolved content view prices.
    pub fn content_multiplier(&self) -> Fixed {
        match self.usage() {
            Strategy::ContentRate { surcharge_multiplier } => *surcharge_multiplier,
            _ => Fixed::ONE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    pub policy_id: String,
    #[serde(default)]
    pub selector: Selector,
    pub strategy: Strategy,
    /// Expected margin G; the unit price is scaled by (1 + G).
    #[serde(default)]
    pub margin: Fixed,
}

impl Policy {
    /// Selector match, plus the flat-rate window when the strategy has one.
    pub fn matches(&self, input: &SelectorInput) -> bool {
        self.selector.matches(input)
            && self
                .strategy
                .flat_window()
                .is_none_or(|w| w.contains(input.second_of_day))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QoSParameter {
    PeakBwBps,
    AvgBwBps,
    MinBwBps,
    MaxDelayMs,
    JitterMs,
    ReliabilityPct,
}

impl QoSParameter {
    pub const ALL: [QoSParameter; 6] = [
        QoSParameter::PeakBwBps,
        QoSParameter::AvgBwBps,
        QoSParameter::MinBwBps,
        QoSParameter::MaxDelayMs,
        QoSParameter::JitterMs,
        QoSParameter::ReliabilityPct,
    ];

    /// Strictly worse than contracted: bandwidth and reliability lower,
    /// delay and jitter higher. Equality is compliant.
    pub fn violated(self, contract: &QoSMetrics, measured: &QoSMetrics) -> bool {
        match self {
            QoSParameter::PeakBwBps => measured.peak_bw_bps < contract.peak_bw_bps,
            QoSParameter::AvgBwBps => measured.avg_bw_bps < contract.avg_bw_bps,
            QoSParameter::MinBwBps => measured.min_bw_bps < contract.min_bw_bps,
            QoSParameter::MaxDelayMs => measured.max_delay_ms > contract.max_delay_ms,
            QoSParameter::JitterMs => measured.jitter_ms > contract.jitter_ms,
            QoSParameter::ReliabilityPct => measured.reliability_pct < contract.reliability_pct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QoSRebateRule {
    pub parameter: QoSParameter,
    pub rebate_fraction: Fixed,
}

fn presentation_digits() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffPlan {
    pub plan_id: String,
    pub currency: String,
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub location_multipliers: BTreeMap<String, Fixed>,
    #[serde(default)]
    pub network_multipliers: BTreeMap<String, Fixed>,
    #[serde(default)]
    pub qos_rebate_rules: Vec<QoSRebateRule>,
    #[serde(default)]
    pub qos_contracts: BTreeMap<ServiceType, QoSMetrics>,
    #[serde(default)]
    pub bundles: Vec<BundleRule>,
    #[serde(default)]
    pub tax_rules: Vec<TaxRule>,
    /// Fractional digits used when rendering invoices.
    #[serde(default = "presentation_digits")]
    pub rounding: u32,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("tariff plan is not valid JSON at `{path}`: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no policy matches record `{record_id}`")]
pub struct NoMatchingPolicy {
    pub record_id: String,
}

impl TariffPlan {
    pub fn from_json(text: &str) -> Result<TariffPlan, PlanError> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| PlanError::Parse {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tariff plan serializes")
    }

    pub fn policy(&self, policy_id: &str) -> Option<&Policy> {
        self.policies.iter().find(|p| p.policy_id == policy_id)
    }

    pub fn location_multiplier(&self, zone: &str) -> Fixed {
        self.location_multipliers.get(zone).copied().unwrap_or(Fixed::ONE)
    }

    pub fn network_multiplier(&self, network: &str) -> Fixed {
        self.network_multipliers.get(network).copied().unwrap_or(Fixed::ONE)
    }
}

/// First policy in declared order whose selector matches.
pub fn select_policy<'p>(plan: &'p TariffPlan, record: &UsageRecord) -> Result<&'p Policy, NoMatchingPolicy> {
    let input = SelectorInput::from(record);
    plan.policies
        .iter()
        .find(|p| p.matches(&input))
        .ok_or_else(|| NoMatchingPolicy {
            record_id: record.record_id.clone(),
        })
}

/// An effective volume band after modifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PricedTier {
    pub up_to_bytes: Option<u64>,
    pub price_per_mb: Money,
}

/// The unit price a policy yields for one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitPrice {
    /// Per second of session; already includes distance.
    PerSecond(Money),
    /// Graduated per-megabyte bands, prices rounded to tariff precision.
    PerMegabyte(Vec<PricedTier>),
    /// Fixed amount for the rated period.
    PerPeriod(Money),
    /// Multiplier on the resolved content view price.
    ContentSurcharge(Fixed),
}

impl UnitPrice {
    /// Headline figure recorded on the rated charge. For volume bands
    /// this is the marginal price at `volume_bytes`.
    pub fn headline(&self, volume_bytes: u64) -> Money {
        match self {
            UnitPrice::PerSecond(u) | UnitPrice::PerPeriod(u) => *u,
            UnitPrice::PerMegabyte(tiers) => tiers
                .iter()
                .find(|t| t.up_to_bytes.is_none_or(|cap| volume_bytes <= cap))
                .or(tiers.last())
                .map_or(Money::ZERO, |t| t.price_per_mb),
            UnitPrice::ContentSurcharge(_) => Money::ZERO,
        }
    }
}

/// Per-km·s price weights of each path segment, overrides first.
pub fn per_km_price(segment_override: Option<Fixed>, base: Money) -> Fixed {
    segment_override.unwrap_or(base.value())
}

/// Distance-weighted base price of a duration policy: u₀·d, or
/// Σ u_k·d_k when any segment carries its own agreed price.
fn duration_base(u0: Money, record: &UsageRecord) -> Vec<(Fixed, Fixed)> {
    if record.operator_path.iter().any(|s| s.unit_price_override.is_some()) {
        record
            .operator_path
            .iter()
            .map(|s| (per_km_price(s.unit_price_override, u0), s.distance_km))
            .collect()
    } else {
        vec![(u0.value(), record.distance_km)]
    }
}

/// Base unit price × location × network × (1 + G). Flat rates ignore all
/// modifiers. QoS rebates are not applied here.
pub fn unit_price(policy: &Policy, record: &UsageRecord, plan: &TariffPlan) -> UnitPrice {
    let loc = plan.location_multiplier(&record.location_zone);
    let net = plan.network_multiplier(&record.access_network);
    let margin = Fixed::ONE + policy.margin;
    strategy_unit_price(policy.strategy.usage(), record, [loc, net, margin])
}

fn strategy_unit_price(strategy: &Strategy, record: &UsageRecord, modifiers: [Fixed; 3]) -> UnitPrice {
    let scaled = |base: Fixed, digits: u32| {
        let mut factors = vec![base];
        factors.extend_from_slice(&modifiers);
        Money::new(Fixed::product_rounded(&factors, digits))
    };
    match strategy {
        Strategy::FlatRate { amount_per_period, .. } => UnitPrice::PerPeriod(*amount_per_period),
        Strategy::DurationRate { unit_price_per_km_s } => {
            // Each (u_k, d_k) product is exact at ledger scale for 4-digit
            // prices and 6-digit distances, so only the modifiers round.
            let base: Fixed = duration_base(*unit_price_per_km_s, record)
                .into_iter()
                .map(|(u, d)| Fixed::product_rounded(&[u, d], SCALE))
                .sum();
            UnitPrice::PerSecond(scaled(base, SCALE))
        }
        Strategy::VolumeRate { tiers } => UnitPrice::PerMegabyte(
            tiers
                .iter()
                .map(|t| PricedTier {
                    up_to_bytes: t.up_to_bytes,
                    price_per_mb: scaled(t.price_per_mb.value(), PRICE_DIGITS),
                })
                .collect(),
        ),
        Strategy::ContentRate { surcharge_multiplier } => UnitPrice::ContentSurcharge(*surcharge_multiplier),
        Strategy::SubscriptionPlusUsage { usage, .. } => strategy_unit_price(usage, record, modifiers),
    }
}

fn check_price(out: &mut Vec<Violation>, field: String, price: Money) {
    if price.is_negative() {
        out.push(Violation::new(field.clone(), "negative price"));
    }
    if price.value().fractional_digits() > PRICE_DIGITS {
        out.push(Violation::new(field, "price has more than 4 fractional digits"));
    }
}

fn check_fraction(out: &mut Vec<Violation>, field: String, f: Fixed) {
    if f.is_negative() || f > Fixed::ONE {
        out.push(Violation::new(field, "fraction outside [0, 1]"));
    }
}

fn check_strategy(out: &mut Vec<Violation>, field: &str, strategy: &Strategy, nested: bool) {
    match strategy {
        Strategy::FlatRate {
            amount_per_period,
            window,
            ..
        } => {
            check_price(out, format!("{field}.amount_per_period"), *amount_per_period);
            if window.is_some_and(|w| !w.is_ordered()) {
                out.push(Violation::new(format!("{field}.window"), "window requires h_1 ≤ h_2"));
            }
        }
        Strategy::DurationRate { unit_price_per_km_s } => {
            check_price(out, format!("{field}.unit_price_per_km_s"), *unit_price_per_km_s)
        }
        Strategy::VolumeRate { tiers } => {
            if tiers.is_empty() {
                out.push(Violation::new(format!("{field}.tiers"), "at least one tier"));
            }
            for (i, t) in tiers.iter().enumerate() {
                check_price(out, format!("{field}.tiers[{i}].price_per_mb"), t.price_per_mb);
            }
            let bounds: Vec<Option<u64>> = tiers.iter().map(|t| t.up_to_bytes).collect();
            let (last, inner) = match bounds.split_last() {
                Some((last, inner)) => (*last, inner),
                None => (None, &[][..]),
            };
            if last.is_some() {
                out.push(Violation::new(format!("{field}.tiers"), "last tier must be unbounded"));
            }
            if inner.iter().any(Option::is_none) {
                out.push(Violation::new(
                    format!("{field}.tiers"),
                    "only the last tier may be unbounded",
                ));
            }
            let caps: Vec<u64> = bounds.iter().flatten().copied().collect();
            if caps.windows(2).any(|w| w[0] >= w[1]) || caps.first() == Some(&0) {
                out.push(Violation::new(format!("{field}.tiers"), "tiers not increasing"));
            }
        }
        Strategy::ContentRate { surcharge_multiplier } => {
            if surcharge_multiplier.is_negative() {
                out.push(Violation::new(
                    format!("{field}.surcharge_multiplier"),
                    "surcharge multiplier ≥ 0",
                ));
            }
        }
        Strategy::SubscriptionPlusUsage { monthly_fee, usage } => {
            check_price(out, format!("{field}.monthly_fee"), *monthly_fee);
            if nested {
                out.push(Violation::new(field.to_string(), "subscriptions cannot nest"));
            }
            check_strategy(out, &format!("{field}.usage"), usage, true);
        }
    }
}

/// Representative points of the selector input space: every service,
/// payment option and mode, at each minute boundary and one point inside
/// each minute. Windows change value only at minute boundaries, so this set
/// decides coverage exactly.
fn selector_space() -> impl Iterator<Item = SelectorInput> {
    ServiceType::ALL.into_iter().flat_map(|service_type| {
        PaymentOption::ALL.into_iter().flat_map(move |payment_option| {
            SwitchingMode::ALL.into_iter().flat_map(move |switching_mode| {
                (0..SECONDS_PER_DAY / 30)
                    .map(|k| k * 30)
                    .map(move |second_of_day| SelectorInput {
                        service_type,
                        payment_option,
                        switching_mode,
                        second_of_day,
                    })
            })
        })
    })
}

/// Indices of policies no record can ever select.
pub fn unreachable_policies(policies: &[Policy]) -> Vec<usize> {
    let mut reachable = vec![false; policies.len()];
    for input in selector_space() {
        if let Some(i) = policies.iter().position(|p| p.matches(&input)) {
            reachable[i] = true;
        }
    }
    (0..policies.len()).filter(|i| !reachable[*i]).collect()
}

/// Every invariant violation in the plan; empty means the plan is usable.
pub fn validate_plan(plan: &TariffPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    if plan.policies.is_empty() {
        out.push(Violation::new("policies", "at least one policy"));
    }
    let mut ids = BTreeSet::new();
    for (i, p) in plan.policies.iter().enumerate() {
        let field = format!("policies[{i}]");
        if !ids.insert(p.policy_id.as_str()) {
            out.push(Violation::new(
                format!("{field}.policy_id"),
                format!("duplicate policy id {}", p.policy_id),
            ));
        }
        if p.margin.is_negative() {
            out.push(Violation::new(format!("{field}.margin"), "margin G ≥ 0"));
        }
        if p.selector.window.is_some_and(|w| !w.is_ordered()) {
            out.push(Violation::new(
                format!("{field}.selector.window"),
                "window requires h_1 ≤ h_2",
            ));
        }
        check_strategy(&mut out, &format!("{field}.strategy"), &p.strategy, false);
    }
    for i in unreachable_policies(&plan.policies) {
        out.push(Violation::new(
            format!("policies[{i}]"),
            format!("{} unreachable", plan.policies[i].policy_id),
        ));
    }
    for (name, map) in [
        ("location_multipliers", &plan.location_multipliers),
        ("network_multipliers", &plan.network_multipliers),
    ] {
        for (tag, m) in map {
            if *m <= Fixed::ZERO {
                out.push(Violation::new(format!("{name}.{tag}"), "multiplier must be > 0"));
            }
        }
    }
    for (i, rule) in plan.qos_rebate_rules.iter().enumerate() {
        check_fraction(
            &mut out,
            format!("qos_rebate_rules[{i}].rebate_fraction"),
            rule.rebate_fraction,
        );
    }
    for (service, contract) in &plan.qos_contracts {
        for v in contract.violations() {
            out.push(Violation::new(format!("qos_contracts.{service}"), v.reason));
        }
    }
    for (i, b) in plan.bundles.iter().enumerate() {
        let field = format!("bundles[{i}]");
        match &b.kind {
            BundleKind::IncludedAllowance { .. } => {}
            BundleKind::VolumeDiscount { thresholds } => {
                for (j, t) in thresholds.iter().enumerate() {
                    check_fraction(
                        &mut out,
                        format!("{field}.thresholds[{j}].discount_fraction"),
                        t.discount_fraction,
                    );
                }
                if thresholds.windows(2).any(|w| w[0].above_bytes >= w[1].above_bytes) {
                    out.push(Violation::new(
                        format!("{field}.thresholds"),
                        "thresholds not increasing",
                    ));
                }
            }
            BundleKind::ThirdPartyDiscount { discount_fraction, .. } => {
                check_fraction(&mut out, format!("{field}.discount_fraction"), *discount_fraction)
            }
        }
    }
    for (i, t) in plan.tax_rules.iter().enumerate() {
        if t.rate.is_negative() {
            out.push(Violation::new(format!("tax_rules[{i}].rate"), "tax rate ≥ 0"));
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn policy(id: &str, selector: Selector, strategy: Strategy) -> Policy {
        Policy {
            policy_id: id.to_string(),
            selector,
            strategy,
            margin: Fixed::ZERO,
        }
    }

    pub fn duration(u0: &str) -> Strategy {
        Strategy::DurationRate {
            unit_price_per_km_s: u0.parse().unwrap(),
        }
    }

    pub fn flat(amount: &str, window: Option<&str>) -> Strategy {
        Strategy::FlatRate {
            amount_per_period: amount.parse().unwrap(),
            period: "session".into(),
            window: window.map(|w| w.parse().unwrap()),
        }
    }

    pub fn tiers(spec: &[(Option<u64>, &str)]) -> Strategy {
        Strategy::VolumeRate {
            tiers: spec
                .iter()
                .map(|(cap, p)| VolumeTier {
                    up_to_bytes: *cap,
                    price_per_mb: p.parse().unwrap(),
                })
                .collect(),
        }
    }

    pub fn plan(policies: Vec<Policy>) -> TariffPlan {
        TariffPlan {
            plan_id: "test".into(),
            currency: "EUR".into(),
            policies,
            location_multipliers: BTreeMap::new(),
            network_multipliers: BTreeMap::new(),
            qos_rebate_rules: vec![],
            qos_contracts: BTreeMap::new(),
            bundles: vec![],
            tax_rules: vec![],
            rounding: 2,
        }
    }
}

//! Seeded synthetic usage records.
//!
//! All randomness comes from [`Pcg32`] and is drawn in a fixed order, and
//! no floating point is involved, so a configuration reproduces the same
//! bytes on every platform.

use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::billing::Period;
use crate::content::{resolve_view, ContentCatalog, CredentialSet};
use crate::money::Fixed;
use crate::records::{
    validate_record, ContentDecision, ContentRef, OperatorSegment, PaymentOption, QoSMetrics, ServiceType,
    SwitchingMode, UsageRecord, Violation,
};
use crate::tariff::QoSParameter;

/// PCG-XSH-RR with 64-bit state and 32-bit output.
#[derive(Debug, Clone)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
    pub const DEFAULT_STREAM: u64 = 1_442_695_040_888_963_407;

    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, Self::DEFAULT_STREAM)
    }

    /// Reference seeding: step from zero, add the seed, step again.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = Pcg32 {
            state: 0,
            inc: (stream << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(Self::MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = u64::from(self.next_u32());
        (hi << 32) | u64::from(self.next_u32())
    }

    /// Uniform in `0..n` by rejection; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % n;
            }
        }
    }

    /// Uniform in `lo..=hi`.
    pub fn between(&mut self, lo: u64, hi: u64) -> u64 {
        if hi == u64::MAX && lo == 0 {
            return self.next_u64();
        }
        lo + self.below(hi - lo + 1)
    }

    /// True with probability `p`, resolved at 10⁻¹⁰.
    pub fn chance(&mut self, p: Fixed) -> bool {
        let scale = Fixed::ONE.raw() as u64;
        (self.below(scale) as i128) < p.raw()
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }
}

/// Inclusive range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span<T> {
    pub min: T,
    pub max: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub record_count: usize,
    pub subscriber_count: u32,
    pub period: Period,
    pub service_mix: BTreeMap<ServiceType, u64>,
    pub duration_s: Span<u64>,
    pub volume_bytes: Span<u64>,
    /// Distances are drawn in whole metres.
    pub distance_km: Span<Fixed>,
    #[serde(default)]
    pub qos_degradation: BTreeMap<QoSParameter, Fixed>,
    /// Contract each service's measurements are drawn around.
    #[serde(default)]
    pub qos_contracts: BTreeMap<ServiceType, QoSMetrics>,
    pub operators: Vec<String>,
    pub max_path_len: usize,
    #[serde(default)]
    pub override_probability: Fixed,
    /// Per km·s prices for segment overrides, drawn at 4 decimals.
    #[serde(default = "default_override_span")]
    pub override_price: Span<Fixed>,
    pub location_zones: Vec<String>,
    pub circuit_networks: Vec<String>,
    pub packet_networks: Vec<String>,
    #[serde(default = "all_payments")]
    pub payment_options: Vec<PaymentOption>,
    #[serde(default)]
    pub content_probability: Fixed,
    #[serde(default)]
    pub decline_probability: Fixed,
    #[serde(default)]
    pub credential_pool: Vec<String>,
    #[serde(default)]
    pub credential_probability: Fixed,
    #[serde(default)]
    pub catalog: ContentCatalog,
}

fn default_override_span() -> Span<Fixed> {
    Span {
        min: Fixed::from_parts(1, 3),
        max: Fixed::from_parts(5, 2),
    }
}

fn all_payments() -> Vec<PaymentOption> {
    PaymentOption::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid simulator config: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidConfig(pub Vec<Violation>);

fn probability(out: &mut Vec<Violation>, field: &str, p: Fixed) {
    if p.is_negative() || p > Fixed::ONE {
        out.push(Violation::new(field, "probability outside [0, 1]"));
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<SimConfig, String> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| format!("{}: {}", e.path(), e.inner()))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.service_mix.values().all(|w| *w == 0) {
            out.push(Violation::new("service_mix", "weights need a positive sum"));
        }
        if self
            .service_mix
            .values()
            .try_fold(0u64, |a, w| a.checked_add(*w))
            .is_none()
        {
            out.push(Violation::new("service_mix", "weights overflow"));
        }
        if self.subscriber_count == 0 {
            out.push(Violation::new("subscriber_count", "at least one subscriber"));
        }
        if self.duration_s.min > self.duration_s.max {
            out.push(Violation::new("duration_s", "range empty"));
        }
        if self.volume_bytes.min > self.volume_bytes.max {
            out.push(Violation::new("volume_bytes", "range empty"));
        }
        let d = self.distance_km;
        if d.min.is_negative() || d.min > d.max {
            out.push(Violation::new("distance_km", "range empty or negative"));
        }
        if d.min.round_dp(3) != d.min || d.max.round_dp(3) != d.max {
            out.push(Violation::new("distance_km", "more than 3 fractional digits"));
        }
        let o = self.override_price;
        if o.min.is_negative() || o.min > o.max || o.min.round_dp(4) != o.min || o.max.round_dp(4) != o.max {
            out.push(Violation::new(
                "override_price",
                "range empty, negative or finer than 4 digits",
            ));
        }
        if self.max_path_len == 0 {
            out.push(Violation::new("max_path_len", "K_max ≥ 1"));
        }
        for (field, list) in [
            ("operators", &self.operators),
            ("location_zones", &self.location_zones),
            ("circuit_networks", &self.circuit_networks),
            ("packet_networks", &self.packet_networks),
        ] {
            if list.is_empty() {
                out.push(Violation::new(field, "list non-empty"));
            }
        }
        if self.payment_options.is_empty() {
            out.push(Violation::new("payment_options", "list non-empty"));
        }
        for (param, p) in &self.qos_degradation {
            probability(
                &mut out,
                &format!(
                    "qos_degradation.{}",
                    serde_json::to_value(param).unwrap().as_str().unwrap()
                ),
                *p,
            );
        }
        for (service, contract) in &self.qos_contracts {
            for v in contract.violations() {
                out.push(Violation::new(format!("qos_contracts.{service}"), v.reason));
            }
        }
        probability(&mut out, "override_probability", self.override_probability);
        probability(&mut out, "content_probability", self.content_probability);
        probability(&mut out, "decline_probability", self.decline_probability);
        probability(&mut out, "credential_probability", self.credential_probability);
        out.extend(self.catalog.validate());
        if self.period.seconds() <= 0 {
            out.push(Violation::new("period", "empty period"));
        }
        out
    }
}

/// Generated records plus the credentials each subscriber presents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOutput {
    pub records: Vec<UsageRecord>,
    pub credentials: Vec<CredentialSet>,
}

impl SimOutput {
    pub fn credentials_ndjson(&self) -> String {
        let mut out = String::new();
        for c in &self.credentials {
            out.push_str(&serde_json::to_string(c).expect("credentials serialize"));
            out.push('\n');
        }
        out
    }
}

fn baseline_qos() -> QoSMetrics {
    QoSMetrics {
        peak_bw_bps: 2_000_000,
        avg_bw_bps: 1_000_000,
        min_bw_bps: 256_000,
        max_delay_ms: Fixed::from_int(150),
        jitter_ms: Fixed::from_int(30),
        reliability_pct: Fixed::from_parts(995, 1),
    }
}

/// Measured QoS: the contract exactly, made strictly worse on each
/// parameter that degrades. Bandwidth order min ≤ avg ≤ peak is kept.
fn measure(rng: &mut Pcg32, contract: &QoSMetrics, degradation: &BTreeMap<QoSParameter, Fixed>) -> QoSMetrics {
    let mut m = contract.clone();
    for param in QoSParameter::ALL {
        let p = degradation.get(&param).copied().unwrap_or(Fixed::ZERO);
        if !rng.chance(p) {
            continue;
        }
        match param {
            QoSParameter::PeakBwBps if m.peak_bw_bps > 0 => {
                m.peak_bw_bps -= rng.between(1, m.peak_bw_bps.div_ceil(2));
                m.avg_bw_bps = m.avg_bw_bps.min(m.peak_bw_bps);
                m.min_bw_bps = m.min_bw_bps.min(m.avg_bw_bps);
            }
            QoSParameter::AvgBwBps if m.avg_bw_bps > 0 => {
                m.avg_bw_bps -= rng.between(1, m.avg_bw_bps.div_ceil(2));
                m.min_bw_bps = m.min_bw_bps.min(m.avg_bw_bps);
            }
            QoSParameter::MinBwBps if m.min_bw_bps > 0 => {
                m.min_bw_bps -= rng.between(1, m.min_bw_bps.div_ceil(2));
            }
            QoSParameter::MaxDelayMs => {
                m.max_delay_ms = m.max_delay_ms + Fixed::from_parts(rng.between(1, 200_000) as i64, 3);
            }
            QoSParameter::JitterMs => {
                m.jitter_ms = m.jitter_ms + Fixed::from_parts(rng.between(1, 50_000) as i64, 3);
            }
            QoSParameter::ReliabilityPct if m.reliability_pct > Fixed::ZERO => {
                // drop by up to 5 points in steps of 0.001, never below 0
                let cap = (m.reliability_pct.round_dp(3).raw() / Fixed::from_parts(1, 3).raw()).clamp(1, 5_000) as u64;
                let drop = Fixed::from_parts(rng.between(1, cap) as i64, 3);
                m.reliability_pct = (m.reliability_pct - drop).max(Fixed::ZERO);
            }
            _ => {}
        }
    }
    m
}

fn weighted<'a, K>(rng: &mut Pcg32, weights: &'a BTreeMap<K, u64>) -> &'a K {
    let total: u64 = weights.values().sum();
    let mut x = rng.below(total);
    for (k, w) in weights {
        if x < *w {
            return k;
        }
        x -= w;
    }
    unreachable!("draw below total weight")
}

/// Splits `total` milli-km into `k` non-negative parts.
fn split_distance(rng: &mut Pcg32, total: u64, k: usize) -> Vec<u64> {
    let mut cuts: Vec<u64> = (1..k).map(|_| rng.between(0, total)).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut parts = Vec::with_capacity(k);
    for c in cuts {
        parts.push(c - prev);
        prev = c;
    }
    parts.push(total - prev);
    parts
}

fn milli(f: Fixed) -> u64 {
    (f.raw() / Fixed::from_parts(1, 3).raw()) as u64
}

fn ten_thousandths(f: Fixed) -> u64 {
    (f.raw() / Fixed::from_parts(1, 4).raw()) as u64
}

pub fn simulate(config: &SimConfig) -> Result<SimOutput, InvalidConfig> {
    let problems = config.validate();
    if !problems.is_empty() {
        return Err(InvalidConfig(problems));
    }
    let mut rng = Pcg32::new(config.seed);

    let subscribers: Vec<String> = (1..=config.subscriber_count).map(|i| format!("sub-{i:04}")).collect();
    let credentials: Vec<CredentialSet> = subscribers
        .iter()
        .map(|s| {
            let held: Vec<&String> = config
                .credential_pool
                .iter()
                .filter(|_| rng.chance(config.credential_probability))
                .collect();
            CredentialSet::new(s, held.into_iter().cloned())
        })
        .collect();
    let items: Vec<&String> = config.catalog.items.keys().collect();
    let period_seconds = config.period.seconds() as u64;
    let baseline = baseline_qos();

    let mut records = Vec::with_capacity(config.record_count);
    for i in 0..config.record_count {
        let service = *weighted(&mut rng, &config.service_mix);
        let mode = if service == ServiceType::Voice {
            SwitchingMode::Circuit
        } else {
            SwitchingMode::Packet
        };
        let sub_idx = rng.below(subscribers.len() as u64) as usize;
        let start = config.period.start() + Duration::seconds(rng.below(period_seconds) as i64);
        let seconds = rng.between(config.duration_s.min, config.duration_s.max);
        let volume_bytes = match mode {
            SwitchingMode::Circuit => 0,
            SwitchingMode::Packet => rng.between(config.volume_bytes.min, config.volume_bytes.max),
        };
        let distance_milli = rng.between(milli(config.distance_km.min), milli(config.distance_km.max));
        let k = 1 + rng.below(config.max_path_len as u64) as usize;
        let operator_path = split_distance(&mut rng, distance_milli, k)
            .into_iter()
            .map(|part| {
                let operator_id = rng.pick(&config.operators).clone();
                let unit_price_override = rng.chance(config.override_probability).then(|| {
                    let lo = ten_thousandths(config.override_price.min);
                    let hi = ten_thousandths(config.override_price.max);
                    Fixed::from_parts(rng.between(lo, hi) as i64, 4)
                });
                OperatorSegment {
                    operator_id,
                    distance_km: Fixed::from_parts(part as i64, 3),
                    unit_price_override,
                }
            })
            .collect();
        let contract = config.qos_contracts.get(&service).unwrap_or(&baseline);
        let qos_measured = measure(&mut rng, contract, &config.qos_degradation);
        let peak_rate_bps = match mode {
            SwitchingMode::Circuit => 64_000,
            SwitchingMode::Packet => qos_measured.peak_bw_bps,
        };
        let location_zone = rng.pick(&config.location_zones).clone();
        let access_network = match mode {
            SwitchingMode::Circuit => rng.pick(&config.circuit_networks),
            SwitchingMode::Packet => rng.pick(&config.packet_networks),
        }
        .clone();
        let payment_option = *rng.pick(&config.payment_options);

        let mut content_item = None;
        if mode == SwitchingMode::Packet && !items.is_empty() && rng.chance(config.content_probability) {
            let item_id = rng.pick(&items).as_str();
            let decline = rng.chance(config.decline_probability);
            if let Ok(view) = resolve_view(&config.catalog, item_id, &credentials[sub_idx]) {
                content_item = Some(ContentRef {
                    item_id: item_id.to_string(),
                    view_id: view.view_id.clone(),
                    decision: if decline {
                        ContentDecision::Decline
                    } else {
                        ContentDecision::Accept
                    },
                });
            }
        }

        let record = UsageRecord {
            record_id: format!("rec-{:06}", i + 1),
            subscriber_id: subscribers[sub_idx].clone(),
            service_type: service,
            switching_mode: mode,
            start_time: start,
            end_time: start + Duration::seconds(seconds as i64),
            volume_bytes,
            peak_rate_bps,
            distance_km: Fixed::from_parts(distance_milli as i64, 3),
            location_zone,
            access_network,
            content_item,
            payment_option,
            operator_path,
            qos_measured,
        };
        debug_assert!(validate_record(&record).is_empty(), "{:?}", validate_record(&record));
        records.push(record);
    }
    Ok(SimOutput { records, credentials })
}

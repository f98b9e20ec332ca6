//! Usage detail records: the accounting output a rating run consumes.
//!
//! One record per line of a UDR file, each line a JSON object. Parsing never
//! aborts on a bad line; it produces a [`RejectReport`] and moves on.

use std::fmt;
use std::io::BufRead;

use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::money::Fixed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ServiceType {
    Voice,
    Messaging,
    VideoConference,
    Gaming,
    InfoRetrieval,
    Streaming,
    Download,
    SpeechService,
}

impl ServiceType {
    pub const ALL: [ServiceType; 8] = [
        ServiceType::Voice,
        ServiceType::Messaging,
        ServiceType::VideoConference,
        ServiceType::Gaming,
        ServiceType::InfoRetrieval,
        ServiceType::Streaming,
        ServiceType::Download,
        ServiceType::SpeechService,
    ];
}

impl fmt::Display for ServiceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SwitchingMode {
    Circuit,
    Packet,
}

impl SwitchingMode {
    pub const ALL: [SwitchingMode; 2] = [SwitchingMode::Circuit, SwitchingMode::Packet];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PaymentOption {
    Prepaid,
    Postpaid,
    ThirdParty,
}

impl PaymentOption {
    pub const ALL: [PaymentOption; 3] = [
        PaymentOption::Prepaid,
        PaymentOption::Postpaid,
        PaymentOption::ThirdParty,
    ];
}

/// One operator's share of the transport path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSegment {
    pub operator_id: String,
    pub distance_km: Fixed,
    /// Price per km·s agreed for this segment, replacing the policy's base
    /// per-km price.
    #[serde(default)]
    pub unit_price_override: Option<Fixed>,
}

/// The six contracted/delivered quality parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QoSMetrics {
    pub peak_bw_bps: u64,
    pub avg_bw_bps: u64,
    pub min_bw_bps: u64,
    pub max_delay_ms: Fixed,
    pub jitter_ms: Fixed,
    pub reliability_pct: Fixed,
}

impl QoSMetrics {
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.min_bw_bps <= self.avg_bw_bps && self.avg_bw_bps <= self.peak_bw_bps) {
            out.push(Violation::new("qos_measured", "bandwidth order min ≤ avg ≤ peak"));
        }
        if self.max_delay_ms.is_negative() {
            out.push(Violation::new("qos_measured.max_delay_ms", "delay non-negative"));
        }
        if self.jitter_ms.is_negative() {
            out.push(Violation::new("qos_measured.jitter_ms", "jitter non-negative"));
        }
        if self.reliability_pct.is_negative() || self.reliability_pct > Fixed::from_int(100) {
            out.push(Violation::new("qos_measured.reliability_pct", "reliability range"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContentDecision {
    Accept,
    Decline,
}

/// The content view a record delivered and the subscriber's answer to the
/// price offer for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentRef {
    pub item_id: String,
    pub view_id: String,
    #[serde(default = "accept")]
    pub decision: ContentDecision,
}

fn accept() -> ContentDecision {
    ContentDecision::Accept
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsageRecord {
    pub record_id: String,
    pub subscriber_id: String,
    pub service_type: ServiceType,
    pub switching_mode: SwitchingMode,
    #[serde(with = "utc_seconds")]
    pub start_time: DateTime<Utc>,
    #[serde(with = "utc_seconds")]
    pub end_time: DateTime<Utc>,
    pub volume_bytes: u64,
    pub peak_rate_bps: u64,
    pub distance_km: Fixed,
    pub location_zone: String,
    pub access_network: String,
    #[serde(default)]
    pub content_item: Option<ContentRef>,
    pub payment_option: PaymentOption,
    pub operator_path: Vec<OperatorSegment>,
    pub qos_measured: QoSMetrics,
}

/// Tolerance on Σ segment distances against the record distance: 10⁻⁶ km.
pub const DISTANCE_TOLERANCE: Fixed = Fixed::from_raw(10_000);

impl UsageRecord {
    /// Session length T in whole seconds.
    pub fn duration_s(&self) -> i64 {
        (self.end_time - self.start_time).num_seconds()
    }

    /// Seconds since UTC midnight of the start time.
    pub fn start_second_of_day(&self) -> u32 {
        self.start_time.num_seconds_from_midnight()
    }

    pub fn to_udr_line(&self) -> String {
        serde_json::to_string(self).expect("usage record serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

/// Every invariant the record breaks; empty means valid.
pub fn validate_record(r: &UsageRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if r.record_id.is_empty() {
        out.push(Violation::new("record_id", "record id non-empty"));
    }
    if r.end_time < r.start_time {
        out.push(Violation::new("end_time", "T ≥ 0"));
    }
    if r.distance_km.is_negative() {
        out.push(Violation::new("distance_km", "d ≥ 0"));
    }
    if r.operator_path.is_empty() {
        out.push(Violation::new("operator_path", "operator path non-empty"));
    } else {
        for (i, seg) in r.operator_path.iter().enumerate() {
            if seg.distance_km.is_negative() {
                out.push(Violation::new(
                    format!("operator_path[{i}].distance_km"),
                    "segment distance ≥ 0",
                ));
            }
            if seg.unit_price_override.is_some_and(Fixed::is_negative) {
                out.push(Violation::new(
                    format!("operator_path[{i}].unit_price_override"),
                    "override price ≥ 0",
                ));
            }
        }
        let total: Fixed = r.operator_path.iter().map(|s| s.distance_km).sum();
        let gap = total - r.distance_km;
        let gap = if gap.is_negative() { -gap } else { gap };
        if gap > DISTANCE_TOLERANCE {
            out.push(Violation::new("operator_path", "segment distance sum"));
        }
    }
    out.extend(r.qos_measured.violations());
    out
}

/// A line that did not yield a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectReport {
    pub line: usize,
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParsedStream {
    pub records: Vec<(usize, UsageRecord)>,
    pub rejects: Vec<RejectReport>,
}

impl ParsedStream {
    pub fn lines_in(&self) -> usize {
        self.records.len() + self.rejects.len()
    }
}

/// Parses one UDR line without validating invariants.
pub fn parse_udr_line(line: &str) -> Result<UsageRecord, Violation> {
    let mut de = serde_json::Deserializer::from_str(line);
    let record: UsageRecord = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let field = if path == "." { "record".to_string() } else { path };
        Violation::new(field, err.into_inner().to_string())
    })?;
    de.end().map_err(|e| Violation::new("record", e.to_string()))?;
    Ok(record)
}

/// Parses a newline-delimited UDR stream. Blank lines are skipped; every
/// other line becomes exactly one record or one reject, in input order.
/// Line numbers are 1-based. An I/O failure mid-stream is returned as an
/// error since nothing past it can be attributed to a line.
pub fn parse_udr_stream<R: BufRead>(input: R) -> std::io::Result<ParsedStream> {
    let mut out = ParsedStream::default();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_udr_line(&line) {
            Err(v) => out.rejects.push(RejectReport {
                line: line_no,
                field: v.field,
                reason: v.reason,
            }),
            Ok(record) => {
                let violations = validate_record(&record);
                if violations.is_empty() {
                    out.records.push((line_no, record));
                } else {
                    out.rejects.push(RejectReport {
                        line: line_no,
                        field: violations
                            .iter()
                            .map(|v| v.field.as_str())
                            .collect::<Vec<_>>()
                            .join(","),
                        reason: violations
                            .iter()
                            .map(|v| v.reason.as_str())
                            .collect::<Vec<_>>()
                            .join("; "),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Serializes records as a UDR stream, one line each.
pub fn write_udr<'a>(records: impl IntoIterator<Item = &'a UsageRecord>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_udr_line());
        out.push('\n');
    }
    out
}

/// RFC 3339 UTC timestamps with whole-second resolution.
pub mod utc_seconds {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        let t = DateTime::parse_from_rfc3339(&s).map_err(serde::de::Error::custom)?;
        if t.timestamp_subsec_nanos() != 0 {
            return Err(serde::de::Error::custom("timestamps carry whole seconds only"));
        }
        Ok(t.with_timezone(&Utc))
    }
}

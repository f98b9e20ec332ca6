//! Reference rater working on raw JSON with exact rationals.
//!
//! Shares no code with the engine beyond the file formats. Each pricing
//! rule is written out directly; the only rounding is at the points the
//! engine documents (unit prices, rebate steps, final amounts), always
//! half-to-even.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Timelike};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::Value;

pub type Q = BigRational;

pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Exact value of a decimal string such as "-12.0350".
pub fn dec(text: &str) -> Q {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits: BigInt = format!("{whole}{frac}").parse().expect("decimal digits");
    let v = Q::new(digits, BigInt::from(10).pow(frac.len() as u32));
    if neg {
        -v
    } else {
        v
    }
}

fn num(v: &Value) -> Q {
    match v {
        Value::String(s) => dec(s),
        Value::Number(n) => dec(&n.to_string()),
        other => panic!("not a number: {other}"),
    }
}

/// Half-to-even rounding to `digits` decimals.
pub fn round(x: &Q, digits: u32) -> Q {
    let scale = BigInt::from(10).pow(digits);
    let y = x * Q::from_integer(scale.clone());
    let fl = y.floor();
    let frac = &y - &fl;
    let half = Q::new(BigInt::from(1), BigInt::from(2));
    let n = if frac > half || (frac == half && fl.to_integer() % 2 != BigInt::zero()) {
        fl + Q::one()
    } else {
        fl
    };
    n / Q::from_integer(scale)
}

fn r10(x: &Q) -> Q {
    round(x, 10)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCharge {
    pub policy_id: String,
    pub base: Q,
    pub factor: Q,
    pub content_fee: Q,
    pub gross: Q,
    pub allocation: Vec<(String, Q)>,
}

/// Strategy that prices usage, looking through subscriptions.
fn usage_strategy(strategy: &Value) -> (&str, &Value) {
    let (kind, body) = strategy
        .as_object()
        .and_then(|o| o.iter().next())
        .expect("strategy tag");
    if kind == "SubscriptionPlusUsage" {
        usage_strategy(&body["usage"])
    } else {
        (kind.as_str(), body)
    }
}

fn window_contains(window: &str, second: u32) -> bool {
    let minutes = |hm: &str| {
        let (h, m) = hm.split_once(':').unwrap();
        h.parse::<u32>().unwrap() * 60 + m.parse::<u32>().unwrap()
    };
    let (a, b) = window.split_once('-').unwrap();
    minutes(a) * 60 <= second && second <= minutes(b) * 60
}

fn listed(selector: &Value, key: &str, value: &Value) -> bool {
    match selector.get(key) {
        None | Some(Value::Null) => true,
        Some(Value::Array(items)) => items.contains(value),
        Some(other) => panic!("bad selector list {other}"),
    }
}

fn select<'p>(plan: &'p Value, record: &Value, second: u32) -> Option<&'p Value> {
    plan["policies"].as_array().unwrap().iter().find(|p| {
        let sel = p.get("selector").cloned().unwrap_or(Value::Null);
        let sel = if sel.is_null() {
            Value::Object(Default::default())
        } else {
            sel
        };
        let window_ok = |w: Option<&Value>| w.and_then(Value::as_str).is_none_or(|w| window_contains(w, second));
        let (kind, body) = usage_strategy(&p["strategy"]);
        listed(&sel, "service_types", &record["service_type"])
            && listed(&sel, "payment_options", &record["payment_option"])
            && listed(&sel, "switching_modes", &record["switching_mode"])
            && window_ok(sel.get("window"))
            && (kind != "FlatRate" || window_ok(body.get("window")))
    })
}

fn multiplier(plan: &Value, table: &str, key: &Value) -> Q {
    plan.get(table)
        .and_then(|t| t.get(key.as_str().unwrap()))
        .map_or_else(Q::one, num)
}

/// Priced volume bands: (upper bound, price per MB rounded to 4 digits).
fn priced_tiers(body: &Value, mods: &Q) -> Vec<(Option<u64>, Q)> {
    body["tiers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["up_to_bytes"].as_u64(), round(&(num(&t["price_per_mb"]) * mods), 4)))
        .collect()
}

fn graduated(tiers: &[(Option<u64>, Q)], bytes: u64) -> Q {
    let mb = int(1_000_000);
    let mut total = Q::zero();
    let mut lower = 0u64;
    for (i, (cap, price)) in tiers.iter().enumerate() {
        let last = i + 1 == tiers.len();
        let upper = match cap {
            Some(c) if !last => (*c).min(bytes),
            _ => bytes,
        };
        if upper > lower {
            total += price * int((upper - lower) as i64) / &mb;
            lower = upper;
        }
    }
    total
}

fn worse(param: &str, contract: &Value, measured: &Value) -> bool {
    let (c, m) = (num(&contract[param]), num(&measured[param]));
    match param {
        "max_delay_ms" | "jitter_ms" => m > c,
        _ => m < c,
    }
}

/// Reference rating of one record. `Err` carries the rejected field.
pub fn rate(
    plan: &Value,
    catalog: Option<&Value>,
    credentials: Option<&BTreeMap<String, BTreeSet<String>>>,
    record: &Value,
) -> Result<OracleCharge, &'static str> {
    let start = DateTime::parse_from_rfc3339(record["start_time"].as_str().unwrap()).unwrap();
    let end = DateTime::parse_from_rfc3339(record["end_time"].as_str().unwrap()).unwrap();
    let seconds = (end - start).num_seconds();
    let second = start.num_seconds_from_midnight();
    let policy = select(plan, record, second).ok_or("service_type")?;
    let (kind, body) = usage_strategy(&policy["strategy"]);
    let circuit = record["switching_mode"] == "Circuit";

    let mods = multiplier(plan, "location_multipliers", &record["location_zone"])
        * multiplier(plan, "network_multipliers", &record["access_network"])
        * (Q::one() + policy.get("margin").map_or_else(Q::zero, num));
    let path = record["operator_path"].as_array().unwrap();
    let volume = record["volume_bytes"].as_u64().unwrap();

    let (base, default_rate) = match kind {
        "DurationRate" => {
            let u0 = num(&body["unit_price_per_km_s"]);
            let any_override = path.iter().any(|s| !s["unit_price_override"].is_null());
            let weighted = if any_override {
                path.iter()
                    .map(|s| {
                        let u = if s["unit_price_override"].is_null() {
                            u0.clone()
                        } else {
                            num(&s["unit_price_override"])
                        };
                        u * num(&s["distance_km"])
                    })
                    .fold(Q::zero(), |a, b| a + b)
            } else {
                &u0 * num(&record["distance_km"])
            };
            let per_second = r10(&(weighted * &mods));
            (per_second * int(seconds), u0)
        }
        "FlatRate" => {
            let amount = num(&body["amount_per_period"]);
            (amount.clone(), amount)
        }
        "VolumeRate" if !circuit => {
            let tiers = priced_tiers(body, &mods);
            let marginal = tiers
                .iter()
                .find(|(cap, _)| cap.is_none_or(|c| volume <= c))
                .or(tiers.last())
                .map(|(_, p)| p.clone())
                .unwrap();
            (r10(&graduated(&tiers, volume)), marginal)
        }
        "ContentRate" if !circuit => (Q::zero(), Q::zero()),
        _ => return Err("switching_mode"),
    };

    let mut factor = Q::one();
    if let Some(contract) = plan
        .get("qos_contracts")
        .and_then(|c| c.get(record["service_type"].as_str().unwrap()))
    {
        for rule in plan
            .get("qos_rebate_rules")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            if worse(rule["parameter"].as_str().unwrap(), contract, &record["qos_measured"]) {
                let f = num(&rule["rebate_fraction"]).max(Q::zero()).min(Q::one());
                factor = r10(&(factor * (Q::one() - f)));
            }
        }
    }

    let mut content_fee = Q::zero();
    if let Some(item) = record.get("content_item").filter(|c| !c.is_null()) {
        let view = catalog
            .and_then(|c| c["items"].get(item["item_id"].as_str().unwrap()))
            .and_then(|i| {
                i["views"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .find(|v| v["view_id"] == item["view_id"])
            })
            .ok_or("content_item")?;
        if let Some(creds) = credentials {
            let empty = BTreeSet::new();
            let held = creds.get(record["subscriber_id"].as_str().unwrap()).unwrap_or(&empty);
            let needed = view
                .get("required_credentials")
                .and_then(Value::as_array)
                .cloned()
                .unwrap_or_default();
            if !needed.iter().all(|c| held.contains(c.as_str().unwrap())) {
                return Err("content_item");
            }
        }
        let declined = item.get("decision").and_then(Value::as_str) == Some("Decline");
        if !declined {
            let mult = if kind == "ContentRate" {
                num(&body["surcharge_multiplier"])
            } else {
                Q::one()
            };
            content_fee = r10(&(num(&view["price"]) * mult));
        }
    }
    let gross = r10(&(&base * &factor)) + &content_fee;

    // largest remainder over u_k·d_k, in units of 10⁻¹⁰
    let weights: Vec<Q> = path
        .iter()
        .map(|s| {
            let u = if s["unit_price_override"].is_null() {
                default_rate.clone()
            } else {
                num(&s["unit_price_override"])
            };
            (u * num(&s["distance_km"])).max(Q::zero())
        })
        .collect();
    let mut total: Q = weights.iter().fold(Q::zero(), |a, b| a + b);
    let weights = if total.is_zero() {
        total = int(path.len() as i64);
        vec![Q::one(); path.len()]
    } else {
        weights
    };
    let units = (&gross * int(10_000_000_000)).to_integer();
    let exact: Vec<Q> = weights
        .iter()
        .map(|w| Q::from_integer(units.clone()) * w / &total)
        .collect();
    let mut shares: Vec<BigInt> = exact.iter().map(|e| e.floor().to_integer()).collect();
    let leftover = &units - shares.iter().sum::<BigInt>();
    let mut order: Vec<usize> = (0..path.len()).collect();
    order.sort_by(|a, b| {
        let ra = &exact[*a] - exact[*a].floor();
        let rb = &exact[*b] - exact[*b].floor();
        rb.cmp(&ra).then(a.cmp(b))
    });
    let mut k = BigInt::zero();
    for idx in order {
        if k >= leftover {
            break;
        }
        shares[idx] += 1;
        k += 1;
    }
    let allocation = path
        .iter()
        .zip(shares)
        .map(|(s, units)| {
            (
                s["operator_id"].as_str().unwrap().to_string(),
                Q::new(units, BigInt::from(10_000_000_000i64)),
            )
        })
        .collect();

    debug_assert!(!gross.is_negative());
    Ok(OracleCharge {
        policy_id: policy["policy_id"].as_str().unwrap().to_string(),
        base,
        factor,
        content_fee,
        gross,
        allocation,
    })
}

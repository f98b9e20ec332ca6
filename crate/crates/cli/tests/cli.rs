use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn ngnbill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ngnbill"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> String {
    let p = path(dir, name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn plan() -> Value {
    json!({
        "plan_id": "fixture", "currency": "EUR",
        "policies": [
            {"policy_id": "voice", "selector": {"service_types": ["Voice"]},
             "strategy": {"DurationRate": {"unit_price_per_km_s": "0.01"}}},
            {"policy_id": "data", "selector": {"service_types": ["Download"]},
             "strategy": {"VolumeRate": {"tiers": [
                 {"up_to_bytes": 10000000, "price_per_mb": "0.10"},
                 {"up_to_bytes": null, "price_per_mb": "0.05"}]}}}
        ],
        "tax_rules": [{"jurisdiction": "VAT", "rate": "0.10"}]
    })
}

fn udr(id: &str, service: &str, mode: &str, seconds: u32, bytes: u64, path: Value, km: &str) -> Value {
    json!({
        "record_id": id, "subscriber_id": "sub-1", "service_type": service, "switching_mode": mode,
        "start_time": "2026-01-05T10:00:00Z", "end_time": format!("2026-01-05T10:{:02}:{:02}Z", seconds / 60, seconds % 60),
        "volume_bytes": bytes, "peak_rate_bps": 64000, "distance_km": km,
        "location_zone": "urban", "access_network": "umts", "payment_option": "Postpaid",
        "operator_path": path,
        "qos_measured": {"peak_bw_bps": 1, "avg_bw_bps": 1, "min_bw_bps": 1,
                         "max_delay_ms": "1", "jitter_ms": "1", "reliability_pct": "99"}
    })
}

fn voice() -> Value {
    udr(
        "v1",
        "Voice",
        "Circuit",
        60,
        0,
        json!([{"operator_id": "A", "distance_km": "100"}]),
        "100",
    )
}

fn download() -> Value {
    udr(
        "d1",
        "Download",
        "Packet",
        30,
        25_000_000,
        json!([{"operator_id": "A", "distance_km": "1"}]),
        "1",
    )
}

fn write_udr(dir: &Path, lines: &[String]) -> String {
    let p = path(dir, "in.udr");
    fs::write(&p, lines.join("\n") + "\n").unwrap();
    p
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&ngnbill(&[
            "validate",
            "--plan",
            &data("plan.json"),
            "--catalog",
            &data("catalog.json")
        ])),
        0
    );

    let mut bad = plan();
    bad["policies"][1]["strategy"]["VolumeRate"]["tiers"][0]["up_to_bytes"] = json!(null);
    let p = write_json(dir.path(), "bad.json", &bad);
    let out = ngnbill(&["validate", "--plan", &p]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("tiers"));

    assert_eq!(
        code(&ngnbill(&["validate", "--plan", &path(dir.path(), "missing.json")])),
        2
    );
    fs::write(path(dir.path(), "junk.json"), "{ not json").unwrap();
    assert_eq!(
        code(&ngnbill(&["validate", "--plan", &path(dir.path(), "junk.json")])),
        2
    );
}

#[test]
fn rate_reports_corrupt_line_and_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "plan.json", &plan());
    let input = write_udr(
        dir.path(),
        &[voice().to_string(), "{\"record_id\": 7".into(), download().to_string()],
    );
    let out_dir = path(dir.path(), "out");
    let out = ngnbill(&["rate", "--in", &input, "--plan", &p, "--out", &out_dir]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rated = fs::read_to_string(dir.path().join("out/in.rated")).unwrap();
    let rejects = fs::read_to_string(dir.path().join("out/in.rejects")).unwrap();
    assert_eq!(rated.lines().count(), 2);
    assert_eq!(rejects.lines().count(), 1);
    assert!(rejects.contains("\"line\":2"));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(
        (
            manifest["records_in"].as_u64(),
            manifest["rated"].as_u64(),
            manifest["rejected"].as_u64()
        ),
        (Some(3), Some(2), Some(1))
    );

    let empty = path(dir.path(), "empty.udr");
    fs::write(&empty, "").unwrap();
    assert_eq!(
        code(&ngnbill(&["rate", "--in", &empty, "--plan", &p, "--out", &out_dir])),
        1
    );
    assert_eq!(
        code(&ngnbill(&[
            "rate",
            "--in",
            &path(dir.path(), "nope.udr"),
            "--plan",
            &p,
            "--out",
            &out_dir
        ])),
        2
    );
}

#[test]
fn bill_two_charge_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "plan.json", &plan());
    let input = write_udr(dir.path(), &[voice().to_string(), download().to_string()]);
    let out_dir = path(dir.path(), "out");
    assert_eq!(
        code(&ngnbill(&["rate", "--in", &input, "--plan", &p, "--out", &out_dir])),
        0
    );
    let charges = path(dir.path(), "out/in.rated");
    let out = ngnbill(&[
        "bill", "--in", &charges, "--plan", &p, "--period", "2026-01", "--out", &out_dir,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let invoice: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/invoice-sub-1-2026-01.json")).unwrap()).unwrap();
    assert_eq!(invoice["subtotal"], "61.7500");
    assert_eq!(invoice["tax_lines"][0]["amount"], "6.1750");
    assert_eq!(invoice["total"], "67.9250");
    let text = fs::read_to_string(dir.path().join("out/invoice-sub-1-2026-01.txt")).unwrap();
    assert!(text.contains("67.92"));

    assert_eq!(
        code(&ngnbill(&[
            "bill", "--in", &charges, "--plan", &p, "--period", "2026-02", "--out", &out_dir
        ])),
        1
    );
    assert_eq!(
        code(&ngnbill(&[
            "bill", "--in", &charges, "--plan", &p, "--period", "2026-1", "--out", &out_dir
        ])),
        2
    );
}

#[test]
fn settle_two_operator_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_json(dir.path(), "plan.json", &plan());
    let path_json = json!([
        {"operator_id": "A", "distance_km": "100", "unit_price_override": "0.01"},
        {"operator_id": "B", "distance_km": "50", "unit_price_override": "0.02"}
    ]);
    let input = write_udr(
        dir.path(),
        &[udr("v", "Voice", "Circuit", 60, 0, path_json, "150").to_string()],
    );
    let out_dir = path(dir.path(), "out");
    assert_eq!(
        code(&ngnbill(&["rate", "--in", &input, "--plan", &p, "--out", &out_dir])),
        0
    );
    let out = ngnbill(&[
        "settle",
        "--in",
        &path(dir.path(), "out/in.rated"),
        "--period",
        "2026-01",
        "--out",
        &out_dir,
    ]);
    assert_eq!(code(&out), 0);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/settlement-2026-01.json")).unwrap()).unwrap();
    assert_eq!(report["grand_total"], "120.0000");
    assert_eq!(report["per_operator"]["A"], "60.0000");
    assert_eq!(report["per_operator"]["B"], "60.0000");
}

#[test]
fn simulate_is_deterministic_and_validates_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = ngnbill(&[
            "simulate",
            "--config",
            &data("sim.json"),
            "--out",
            &dir.path().to_string_lossy(),
            "--seed",
            "7",
        ]);
        assert_eq!(code(&out), 0);
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("records.udr")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(String::from_utf8(read(&a)).unwrap().lines().count(), 1000);

    let mut cfg: Value = serde_json::from_str(&fs::read_to_string(data("sim.json")).unwrap()).unwrap();
    cfg["max_path_len"] = json!(0);
    let p = write_json(a.path(), "cfg.json", &cfg);
    assert_eq!(
        code(&ngnbill(&[
            "simulate",
            "--config",
            &p,
            "--out",
            &a.path().to_string_lossy()
        ])),
        1
    );
}

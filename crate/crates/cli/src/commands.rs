//! One function per subcommand. Each returns a one-line summary on success.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ngnbill::billing::{aggregate_invoice, group_by_subscriber, render_text, Period};
use ngnbill::content::{ContentCatalog, CredentialSet, ServiceContract};
use ngnbill::rating::{rate_with_contract, ContentContext, RatedCharge};
use ngnbill::records::{parse_udr_stream, write_udr, RejectReport};
use ngnbill::settlement::settle as settle_charges;
use ngnbill::simulator::{simulate as run_simulation, SimConfig};
use ngnbill::tariff::{validate_plan, TariffPlan};

#[derive(Debug)]
pub enum CliError {
    /// Inputs were fine but the outcome is a failure.
    Domain(String),
    /// A required input could not be read or parsed, or output could not
    /// be written.
    Input(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(msg) => f.write_str(msg),
            CliError::Input(err) => write!(f, "{err:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Input(err)
    }
}

type CmdResult = Result<String, CliError>;

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn load_plan(path: &Path) -> anyhow::Result<TariffPlan> {
    TariffPlan::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_catalog(path: &Path) -> anyhow::Result<ContentCatalog> {
    ContentCatalog::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Newline-delimited JSON, blank lines skipped.
fn read_ndjson<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn to_ndjson<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serializable"));
        out.push('\n');
    }
    out
}

fn parse_period(text: &str) -> anyhow::Result<Period> {
    text.parse().map_err(|e| anyhow!("{e}"))
}

pub fn validate(plan_path: &Path, catalog_path: Option<&Path>) -> CmdResult {
    let plan = load_plan(plan_path)?;
    let mut violations = validate_plan(&plan);
    if let Some(path) = catalog_path {
        violations.extend(load_catalog(path)?.validate());
    }
    if violations.is_empty() {
        return Ok(format!("plan {} is valid", plan.plan_id));
    }
    for v in &violations {
        println!("{v}");
    }
    Err(CliError::Domain(format!("{} violation(s)", violations.len())))
}

pub fn simulate(config_path: &Path, out: &Path, seed: Option<u64>) -> CmdResult {
    let mut config =
        SimConfig::from_json(&read(config_path)?).map_err(|e| anyhow!("{}: {e}", config_path.display()))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let output = run_simulation(&config).map_err(|e| CliError::Domain(e.to_string()))?;
    ensure_dir(out)?;
    write(&out.join("records.udr"), &write_udr(&output.records))?;
    write(&out.join("credentials.ndjson"), &output.credentials_ndjson())?;
    Ok(format!(
        "simulated {} records (seed {})",
        output.records.len(),
        config.seed
    ))
}

/// Summary of a rating run; counts reconcile as in = rated + rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub inputs: Vec<PathBuf>,
    pub plan: PathBuf,
    pub catalog: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub period: Option<String>,
    pub records_in: usize,
    pub rated: usize,
    pub rejected: usize,
    pub status: String,
}

#[derive(Serialize)]
struct ContractEntry<'a> {
    record_id: &'a str,
    #[serde(flatten)]
    contract: &'a ServiceContract,
}

pub fn rate(
    input: &Path,
    plan_path: &Path,
    catalog_path: Option<&Path>,
    credentials_path: Option<&Path>,
    out: &Path,
) -> CmdResult {
    let plan = load_plan(plan_path)?;
    let catalog = catalog_path.map(load_catalog).transpose()?;
    let credentials: Option<BTreeMap<String, CredentialSet>> = credentials_path
        .map(|p| {
            read_ndjson::<CredentialSet>(p).map(|sets| sets.into_iter().map(|c| (c.subscriber_id.clone(), c)).collect())
        })
        .transpose()?;
    let file = fs::File::open(input).with_context(|| format!("cannot read {}", input.display()))?;
    let parsed = parse_udr_stream(BufReader::new(file)).with_context(|| format!("reading {}", input.display()))?;

    let context = ContentContext {
        catalog: catalog.as_ref(),
        credentials: credentials.as_ref(),
    };
    let outcomes: Vec<_> = parsed
        .records
        .par_iter()
        .map(|(line, record)| (*line, rate_with_contract(&plan, record, context)))
        .collect();

    let mut rejects = parsed.rejects.clone();
    let mut charges = Vec::new();
    let mut contracts = Vec::new();
    for (line, outcome) in outcomes {
        match outcome {
            Ok((charge, contract)) => {
                if let Some(c) = contract {
                    contracts.push((charge.record_id.clone(), c));
                }
                charges.push(charge);
            }
            Err(err) => rejects.push(RejectReport {
                line,
                field: err.field().to_string(),
                reason: err.to_string(),
            }),
        }
    }
    rejects.sort_by_key(|r| r.line);

    ensure_dir(out)?;
    let stem = input
        .file_stem()
        .map_or_else(|| "records".into(), |s| s.to_string_lossy().into_owned());
    write(&out.join(format!("{stem}.rated")), &to_ndjson(charges.iter()))?;
    write(&out.join(format!("{stem}.rejects")), &to_ndjson(rejects.iter()))?;
    write(
        &out.join(format!("{stem}.contracts")),
        &to_ndjson(contracts.iter().map(|(id, c)| ContractEntry {
            record_id: id,
            contract: c,
        })),
    )?;
    let manifest = RunManifest {
        inputs: vec![input.to_path_buf()],
        plan: plan_path.to_path_buf(),
        catalog: catalog_path.map(Path::to_path_buf),
        out_dir: out.to_path_buf(),
        period: None,
        records_in: parsed.lines_in(),
        rated: charges.len(),
        rejected: rejects.len(),
        status: if charges.is_empty() { "nothing rated" } else { "ok" }.into(),
    };
    write(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    let summary = format!(
        "{} in, {} rated, {} rejected",
        manifest.records_in, manifest.rated, manifest.rejected
    );
    if charges.is_empty() {
        Err(CliError::Domain(summary))
    } else {
        Ok(summary)
    }
}

fn charges_in_period(input: &Path, period: Period) -> anyhow::Result<Vec<RatedCharge>> {
    Ok(read_ndjson::<RatedCharge>(input)?
        .into_iter()
        .filter(|c| period.contains(c.start_time))
        .collect())
}

pub fn bill(input: &Path, plan_path: &Path, period: &str, out: &Path, context: &[String]) -> CmdResult {
    let period = parse_period(period)?;
    let plan = load_plan(plan_path)?;
    let charges = charges_in_period(input, period)?;
    if charges.is_empty() {
        return Err(CliError::Domain(format!("no charges in {period}")));
    }
    let tags: BTreeSet<String> = context.iter().cloned().collect();
    ensure_dir(out)?;
    let mut count = 0;
    for (subscriber, own) in group_by_subscriber(&charges) {
        let invoice =
            aggregate_invoice(&subscriber, period, &own, &plan, &tags).map_err(|e| CliError::Domain(e.to_string()))?;
        let base = format!("invoice-{subscriber}-{period}");
        write(&out.join(format!("{base}.json")), &invoice.to_json())?;
        write(&out.join(format!("{base}.txt")), &render_text(&invoice, plan.rounding))?;
        count += 1;
    }
    Ok(format!("{count} invoice(s) for {period}"))
}

pub fn settle(input: &Path, period: &str, out: &Path) -> CmdResult {
    let period = parse_period(period)?;
    let charges = charges_in_period(input, period)?;
    let report = settle_charges(&charges, period).map_err(|e| CliError::Domain(e.to_string()))?;
    ensure_dir(out)?;
    write(&out.join(format!("settlement-{period}.json")), &report.to_json())?;
    Ok(format!(
        "settled {} charge(s) across {} operator(s), total {}",
        charges.len(),
        report.per_operator.len(),
        report.grand_total
    ))
}

//! Rating and billing for convergent network services.
//!
//! Usage records are rated against a declarative tariff plan, content
//! views are priced through credentialed access, and rated charges roll up
//! into monthly invoices and inter-operator settlement reports.

pub mod billing;
pub mod content;
pub mod money;
pub mod rating;
pub mod records;
pub mod settlement;
pub mod simulator;
pub mod tariff;

pub use billing::{aggregate_invoice, render_text, Invoice, Period};
pub use content::{ContentCatalog, CredentialSet};
pub use money::{Fixed, Money};
pub use rating::{rate_record, rate_with_contract, ContentContext, RatedCharge, RatingError};
pub use records::{parse_udr_stream, validate_record, UsageRecord};
pub use settlement::{settle, settle_uniform_duration, SettlementReport};
pub use simulator::{simulate, SimConfig};
pub use tariff::{validate_plan, TariffPlan};

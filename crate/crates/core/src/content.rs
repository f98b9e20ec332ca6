//! Content-based charging: one data item, many priced views gated by
//! credentials.
//!
//! Access runs in three steps. The subscriber's credentials are checked
//! against a view's requirements, the first satisfiable view in the item's
//! declared order is offered, and only an accepted offer produces a charge.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Money;
use crate::records::{ContentDecision, Violation};
use crate::tariff::Policy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct View {
    pub view_id: String,
    #[serde(default)]
    pub required_credentials: BTreeSet<String>,
    pub price: Money,
}

impl View {
    pub fn is_public(&self) -> bool {
        self.required_credentials.is_empty()
    }
}

/// Views ordered most-privileged first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentItem {
    pub item_id: String,
    pub views: Vec<View>,
}

impl ContentItem {
    pub fn view(&self, view_id: &str) -> Option<&View> {
        self.views.iter().find(|v| v.view_id == view_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentCatalog {
    pub items: BTreeMap<String, ContentItem>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CredentialSet {
    pub subscriber_id: String,
    #[serde(default)]
    pub credentials: BTreeSet<String>,
}

impl CredentialSet {
    pub fn new<I, S>(subscriber_id: &str, credentials: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        CredentialSet {
            subscriber_id: subscriber_id.to_string(),
            credentials: credentials.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractStatus {
    Offered,
    Accepted,
    Declined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceContract {
    pub subscriber_id: String,
    pub item_id: String,
    pub view_id: String,
    pub offered_price: Money,
    pub status: ContractStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContentError {
    #[error("content item `{0}` is not in the catalog")]
    ItemUnknown(String),
    #[error("item `{item_id}` has no view `{view_id}`")]
    ViewUnknown { item_id: String, view_id: String },
    #[error("no view of `{0}` is accessible with the presented credentials")]
    NoAccessibleView(String),
    #[error("subscriber `{subscriber_id}` lacks credentials for view `{view_id}` of `{item_id}`")]
    AccessDenied {
        subscriber_id: String,
        item_id: String,
        view_id: String,
    },
    #[error("contract for `{0}` was not accepted")]
    ContractNotAccepted(String),
}

#[derive(Debug, Error)]
#[error("content catalog is not valid JSON at `{path}`: {message}")]
pub struct CatalogParseError {
    pub path: String,
    pub message: String,
}

impl ContentCatalog {
    pub fn from_json(text: &str) -> Result<Self, CatalogParseError> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| CatalogParseError {
            path: e.path().to_string(),
            message: e.into_inner().to_string(),
        })
    }

    pub fn item(&self, item_id: &str) -> Result<&ContentItem, ContentError> {
        self.items
            .get(item_id)
            .ok_or_else(|| ContentError::ItemUnknown(item_id.to_string()))
    }

    pub fn view(&self, item_id: &str, view_id: &str) -> Result<&View, ContentError> {
        self.item(item_id)?
            .view(view_id)
            .ok_or_else(|| ContentError::ViewUnknown {
                item_id: item_id.to_string(),
                view_id: view_id.to_string(),
            })
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (key, item) in &self.items {
            let field = format!("items.{key}");
            if key != &item.item_id {
                out.push(Violation::new(field.clone(), "map key differs from item_id"));
            }
            if item.views.is_empty() {
                out.push(Violation::new(field.clone(), "at least one view"));
            }
            let mut ids = BTreeSet::new();
            for v in &item.views {
                if !ids.insert(v.view_id.as_str()) {
                    out.push(Violation::new(
                        field.clone(),
                        format!("duplicate view id {}", v.view_id),
                    ));
                }
                if v.price.is_negative() {
                    out.push(Violation::new(format!("{field}.{}", v.view_id), "price ≥ 0"));
                }
            }
            if item.views.iter().filter(|v| v.is_public()).count() > 1 {
                out.push(Violation::new(field, "more than one public view"));
            }
        }
        out
    }
}

/// True iff every required credential is held.
pub fn identify(creds: &CredentialSet, required: &BTreeSet<String>) -> bool {
    required.is_subset(&creds.credentials)
}

/// First view in declared order the credentials satisfy. A public view
/// always qualifies, so it acts as the fallback.
pub fn resolve_view<'c>(
    catalog: &'c ContentCatalog,
    item_id: &str,
    creds: &CredentialSet,
) -> Result<&'c View, ContentError> {
    let item = catalog.item(item_id)?;
    item.views
        .iter()
        .find(|v| identify(creds, &v.required_credentials))
        .ok_or_else(|| ContentError::NoAccessibleView(item_id.to_string()))
}

/// Records the subscriber's answer to the offer of `view` at its price.
pub fn negotiate(view: &View, decision: ContentDecision, subscriber_id: &str, item_id: &str) -> ServiceContract {
    ServiceContract {
        subscriber_id: subscriber_id.to_string(),
        item_id: item_id.to_string(),
        view_id: view.view_id.clone(),
        offered_price: view.price,
        status: match decision {
            ContentDecision::Accept => ContractStatus::Accepted,
            ContentDecision::Decline => ContractStatus::Declined,
        },
    }
}

/// Fee for an accepted contract under the policy's content multiplier
/// (1 unless the policy is a content-rate policy).
pub fn content_charge(contract: &ServiceContract, policy: &Policy) -> Result<Money, ContentError> {
    if contract.status != ContractStatus::Accepted {
        return Err(ContentError::ContractNotAccepted(contract.item_id.clone()));
    }
    Ok(contract.offered_price.scale_by(policy.strategy.content_multiplier()))
}


#[cfg(test)]
mod tests {
    use super::fixtures::journal;
    use super::*;
    use crate::money::Fixed;
    use crate::tariff::fixtures::{policy, tiers};
    use crate::tariff::{Selector, Strategy};
    use proptest::prelude::*;

    fn tags(t: &[&str]) -> BTreeSet<String> {
        t.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identify_is_subset_check() {
        let member = CredentialSet::new("s", ["member"]);
        assert!(identify(&CredentialSet::new("s", Vec::<String>::new()), &tags(&[])));
        assert!(identify(&member, &tags(&["member"])));
        assert!(!identify(&member, &tags(&["member", "premium"])));
    }

    #[test]
    fn non_member_gets_abstract_member_gets_full() {
        let cat = journal();
        let guest = CredentialSet::new("g", Vec::<String>::new());
        let member = CredentialSet::new("m", ["member"]);
        let v = resolve_view(&cat, "journal-42", &guest).unwrap();
        assert_eq!(v.view_id, "abstract");
        assert_eq!(v.price, Money::ZERO);
        assert_eq!(resolve_view(&cat, "journal-42", &member).unwrap().view_id, "full");
        assert_eq!(
            resolve_view(&cat, "nope", &member).unwrap_err(),
            ContentError::ItemUnknown("nope".into())
        );
    }

    #[test]
    fn no_public_view_means_no_access() {
        let mut cat = journal();
        cat.items.get_mut("journal-42").unwrap().views.pop();
        let guest = CredentialSet::new("g", Vec::<String>::new());
        assert!(matches!(
            resolve_view(&cat, "journal-42", &guest),
            Err(ContentError::NoAccessibleView(_))
        ));
    }

    #[test]
    fn negotiate_and_charge() {
        let cat = journal();
        let full = cat.view("journal-42", "full").unwrap();
        let accepted = negotiate(full, ContentDecision::Accept, "m", "journal-42");
        assert_eq!(accepted.status, ContractStatus::Accepted);
        assert_eq!(accepted.offered_price, "2.50".parse().unwrap());

        let declined = negotiate(full, ContentDecision::Decline, "m", "journal-42");
        assert_eq!(declined.status, ContractStatus::Declined);

        let free = negotiate(
            cat.view("journal-42", "abstract").unwrap(),
            ContentDecision::Accept,
            "g",
            "journal-42",
        );
        assert_eq!(free.status, ContractStatus::Accepted);
        assert_eq!(free.offered_price, Money::ZERO);

        let identity = policy(
            "c",
            Selector::default(),
            Strategy::ContentRate {
                surcharge_multiplier: Fixed::ONE,
            },
        );
        let surcharged = policy(
            "c",
            Selector::default(),
            Strategy::ContentRate {
                surcharge_multiplier: "1.2".parse().unwrap(),
            },
        );
        let other = policy("v", Selector::default(), tiers(&[(None, "0.1")]));
        assert_eq!(content_charge(&accepted, &identity).unwrap().to_string(), "2.5000");
        assert_eq!(content_charge(&accepted, &surcharged).unwrap().to_string(), "3.0000");
        assert_eq!(content_charge(&accepted, &other).unwrap().to_string(), "2.5000");
        assert_eq!(
            content_charge(&declined, &identity).unwrap_err(),
            ContentError::ContractNotAccepted("journal-42".into())
        );
    }

    #[test]
    fn catalog_validation() {
        let mut cat = journal();
        assert!(cat.validate().is_empty());
        let item = cat.items.get_mut("journal-42").unwrap();
        item.views.push(item.views[1].clone());
        let reasons: Vec<String> = cat.validate().into_iter().map(|v| v.reason).collect();
        assert!(reasons.iter().any(|r| r.starts_with("duplicate view id")));
        assert!(reasons.contains(&"more than one public view".to_string()));
    }

    proptest! {
        #[test]
        fn accessible_views_grow_with_credentials(
            reqs in proptest::collection::vec(proptest::sample::subsequence(vec!["a", "b", "c", "d"], 0..=4), 1..6),
            held in proptest::sample::subsequence(vec!["a", "b", "c", "d"], 0..=4),
            extra in proptest::sample::select(vec!["a", "b", "c", "d"]),
        ) {
            let views: Vec<View> = reqs.iter().enumerate().map(|(i, r)| View {
                view_id: format!("v{i}"),
                required_credentials: tags(r),
                price: Money::ZERO,
            }).collect();
            let before = CredentialSet::new("s", held.clone());
            let mut after = before.clone();
            after.credentials.insert(extra.to_string());
            for v in &views {
                if identify(&before, &v.required_credentials) {
                    prop_assert!(identify(&after, &v.required_credentials));
                }
            }
            let item = ContentItem { item_id: "i".into(), views };
            let cat = ContentCatalog { items: [("i".to_string(), item)].into() };
            let a = resolve_view(&cat, "i", &before).map(|v| v.view_id.clone()).ok();
            let b = resolve_view(&cat, "i", &before).map(|v| v.view_id.clone()).ok();
            prop_assert_eq!(a, b);
        }
    }
}

//! Over-collection computation and corpus aggregation: what an app collects
//! minus what its policy claims, per-app reports, and corpus-level
//! statistics over them.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::flow::{FlowSource, TaintFlow};
use crate::ingest::Meta;
use crate::policy::{PolicyAnalysis, PolicyOrigin, PolicyStatus};
use crate::taxonomy::{ProtectionLevel, Taxonomy};

/// Claimed and over-collected sets for one app. With no valid policy
/// nothing is claimed, so everything collected is over-collection.
pub fn compute_spo(
    collect: &BTreeSet<String>,
    policy: &PolicyAnalysis,
    tax: &Taxonomy,
) -> (BTreeSet<String>, BTreeSet<String>) {
    let claim = if policy.status == PolicyStatus::Valid {
        policy.claims.expanded(tax)
    } else {
        BTreeSet::new()
    };
    let spo: BTreeSet<String> = collect.difference(&claim).cloned().collect();
    (claim, spo)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimEvidence {
    pub exact: bool,
    /// Item ids this claim covers after the name-covering rule.
    pub expands_to: BTreeSet<String>,
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Coverage {
    pub pages_total: usize,
    pub pages_analyzed: usize,
    pub parse_failed: Vec<String>,
    pub unreached_functions: usize,
    pub unresolved_calls: usize,
    /// Call sites where tainted data reached code the analysis cannot see.
    pub dropped_at_calls: usize,
}

#[derive(Debug, Serialize)]
pub struct AppReport {
    pub appid: String,
    pub meta: Meta,
    pub policy_status: PolicyStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_origin: Option<PolicyOrigin>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub remote_policy_urls: Vec<String>,
    pub s_collect: BTreeSet<String>,
    pub s_claim: BTreeSet<String>,
    pub s_spo: BTreeSet<String>,
    pub flows: Vec<TaintFlow>,
    pub sources: Vec<FlowSource>,
    pub claims: BTreeMap<String, ClaimEvidence>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub negated_claims: BTreeMap<String, Vec<String>>,
    pub coverage: Coverage,
    pub warnings: Vec<String>,
}

impl AppReport {
    /// Claim evidence with sentence text resolved, from a policy analysis.
    pub fn claim_evidence(
        policy: &PolicyAnalysis,
        tax: &Taxonomy,
    ) -> (BTreeMap<String, ClaimEvidence>, BTreeMap<String, Vec<String>>) {
        let sent = |ids: &BTreeSet<usize>| -> Vec<String> {
            ids.iter()
                .filter_map(|&i| policy.claims.sentences.get(i).cloned())
                .collect()
        };
        let claims = policy
            .claims
            .claims
            .iter()
            .map(|(item, c)| {
                (
                    item.clone(),
                    ClaimEvidence {
                        exact: c.exact,
                        expands_to: tax.expand_claim(item, c.exact),
                        sentences: sent(&c.sentences),
                    },
                )
            })
            .collect();
        let negated = policy
            .claims
            .negated
            .iter()
            .map(|(item, ids)| (item.clone(), sent(ids)))
            .collect();
        (claims, negated)
    }
}

/// Which apps count as the denominator for the over-collection app rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpoBasis {
    /// Apps with a valid policy: every over-collection is a broken promise.
    ValidPolicy,
    /// Every analyzed app: no-policy collection counts too.
    All,
}

/// Percentage n/d * 100, undefined (None) on an empty denominator.
pub fn pct(n: usize, d: usize) -> Option<f64> {
    if d == 0 {
        None
    } else {
        Some(n as f64 * 100.0 / d as f64)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemStat {
    pub item: String,
    pub name: String,
    pub category: String,
    pub collected_by: usize,
    pub claimed_by: usize,
    pub spo_by: usize,
    /// Share of collectors that over-collect; undefined when nobody
    /// collects the item.
    pub spo_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryStat {
    pub category: String,
    pub collected_by: usize,
    pub spo_by: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtectionStat {
    pub level: String,
    pub items: usize,
    pub collected_by: usize,
    pub spo_by: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PopularityBucket {
    pub label: String,
    pub apps: usize,
    pub policy_providing: usize,
    pub providing_rate: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Aggregate {
    pub apps_total: usize,
    pub apps_analyzed: usize,
    pub apps_failed: usize,
    pub apps_with_flows: usize,
    pub policy_providing: usize,
    pub policy_valid: usize,
    pub policy_providing_rate: Option<f64>,
    pub spo_basis: SpoBasis,
    pub basis_apps: usize,
    pub apps_with_spo: usize,
    pub spo_app_rate: Option<f64>,
    pub items: Vec<ItemStat>,
    pub categories: Vec<CategoryStat>,
    pub protection: Vec<ProtectionStat>,
    /// |s_spo| size -> number of apps.
    pub spo_histogram: BTreeMap<usize, usize>,
    pub popularity: Vec<PopularityBucket>,
}

fn protection_label(level: Option<ProtectionLevel>) -> &'static str {
    match level {
        Some(ProtectionLevel::NotProtected) => "not protected",
        Some(ProtectionLevel::PartiallyProtected) => "partially protected",
        Some(ProtectionLevel::FullyProtected) => "fully protected",
        None => "unassigned",
    }
}

fn popularity_label(recently_used: Option<u64>) -> &'static str {
    match recently_used {
        None => "unknown",
        Some(n) if n < 1_000 => "<1k",
        Some(n) if n < 10_000 => "1k-10k",
        Some(n) if n < 100_000 => "10k-100k",
        Some(_) => ">=100k",
    }
}

pub fn aggregate(
    reports: &[&AppReport],
    apps_failed: usize,
    basis: SpoBasis,
    tax: &Taxonomy,
) -> Aggregate {
    let apps_analyzed = reports.len();
    let apps_with_flows = reports.iter().filter(|r| !r.flows.is_empty()).count();
    let policy_providing = reports
        .iter()
        .filter(|r| r.policy_status != PolicyStatus::Missing)
        .count();
    let policy_valid = reports
        .iter()
        .filter(|r| r.policy_status == PolicyStatus::Valid)
        .count();

    let in_basis = |r: &AppReport| match basis {
        SpoBasis::ValidPolicy => r.policy_status == PolicyStatus::Valid,
        SpoBasis::All => true,
    };
    let basis_apps = reports.iter().filter(|r| in_basis(r)).count();
    let apps_with_spo = reports
        .iter()
        .filter(|r| in_basis(r) && !r.s_spo.is_empty())
        .count();

    let mut items = Vec::new();
    for item in tax.items() {
        let collected_by = reports
            .iter()
            .filter(|r| r.s_collect.contains(&item.id))
            .count();
        let claimed_by = reports
            .iter()
            .filter(|r| r.s_claim.contains(&item.id))
            .count();
        let spo_by = reports.iter().filter(|r| r.s_spo.contains(&item.id)).count();
        items.push(ItemStat {
            item: item.id.clone(),
            name: item.name.clone(),
            category: format!("{:?}", item.category),
            collected_by,
            claimed_by,
            spo_by,
            spo_rate: pct(spo_by, collected_by),
        });
    }

    let mut categories: BTreeMap<String, CategoryStat> = BTreeMap::new();
    let mut protection: BTreeMap<String, ProtectionStat> = BTreeMap::new();
    for item in tax.items() {
        let stat = items.iter().find(|s| s.item == item.id).unwrap();
        let c = categories
            .entry(format!("{:?}", item.category))
            .or_insert(CategoryStat {
                category: format!("{:?}", item.category),
                collected_by: 0,
                spo_by: 0,
            });
        c.collected_by += stat.collected_by;
        c.spo_by += stat.spo_by;

        let label = protection_label(tax.protection_level(&item.id));
        let p = protection.entry(label.to_string()).or_insert(ProtectionStat {
            level: label.to_string(),
            items: 0,
            collected_by: 0,
            spo_by: 0,
        });
        p.items += 1;
        p.collected_by += stat.collected_by;
        p.spo_by += stat.spo_by;
    }

    let mut spo_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for r in reports {
        *spo_histogram.entry(r.s_spo.len()).or_default() += 1;
    }

    let mut buckets: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    for r in reports {
        let b = buckets
            .entry(popularity_label(r.meta.recently_used))
            .or_default();
        b.0 += 1;
        if r.policy_status != PolicyStatus::Missing {
            b.1 += 1;
        }
    }
    let popularity = ["<1k", "1k-10k", "10k-100k", ">=100k", "unknown"]
        .iter()
        .filter_map(|label| {
            buckets.get(label).map(|&(apps, providing)| PopularityBucket {
                label: (*label).to_string(),
                apps,
                policy_providing: providing,
                providing_rate: pct(providing, apps),
            })
        })
        .collect();

    Aggregate {
        apps_total: apps_analyzed + apps_failed,
        apps_analyzed,
        apps_failed,
        apps_with_flows,
        policy_providing,
        policy_valid,
        policy_providing_rate: pct(policy_providing, apps_analyzed),
        spo_basis: basis,
        basis_apps,
        apps_with_spo,
        spo_app_rate: pct(apps_with_spo, basis_apps),
        items,
        categories: categories.into_values().collect(),
        protection: protection.into_values().collect(),
        spo_histogram,
        popularity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{extract_claims, ClaimSet, PolicyAnalysis};

    fn tax() -> Taxonomy {
        Taxonomy::load_default()
    }

    fn valid_policy(text: &str, t: &Taxonomy) -> PolicyAnalysis {
        PolicyAnalysis {
            status: PolicyStatus::Valid,
            doc: None,
            claims: extract_claims(text, t),
            remote_urls: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn no_policy(status: PolicyStatus) -> PolicyAnalysis {
        PolicyAnalysis {
            status,
            doc: None,
            claims: ClaimSet::default(),
            remote_urls: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn claim_covers_name_across_categories() {
        let t = tax();
        let collect = set(&["device information_d", "location information_d"]);
        let policy = valid_policy("We collect your device information.", &t);
        let (claim, spo) = compute_spo(&collect, &policy, &t);
        assert!(claim.contains("device information_d"));
        assert_eq!(spo, set(&["location information_d"]));
    }

    #[test]
    fn invalid_policy_claims_nothing() {
        let t = tax();
        let collect = set(&["device information_d"]);
        for status in [PolicyStatus::Invalid, PolicyStatus::Missing] {
            let (claim, spo) = compute_spo(&collect, &no_policy(status), &t);
            assert!(claim.is_empty());
            assert_eq!(spo, collect);
        }
    }

    #[test]
    fn negated_claim_does_not_cover() {
        let t = tax();
        let collect = set(&["location information_u"]);
        let policy = valid_policy(
            "We collect your name. We do not collect your address.",
            &t,
        );
        let (_, spo) = compute_spo(&collect, &policy, &t);
        assert_eq!(spo, set(&["location information_u"]));
    }

    fn report(appid: &str, collect: &[&str], claim: &[&str], status: PolicyStatus) -> AppReport {
        let s_collect = set(collect);
        let s_claim = set(claim);
        let s_spo = s_collect.difference(&s_claim).cloned().collect();
        AppReport {
            appid: appid.to_string(),
            meta: Meta::default(),
            policy_status: status,
            policy_origin: None,
            remote_policy_urls: Vec::new(),
            s_collect,
            s_claim,
            s_spo,
            flows: Vec::new(),
            sources: Vec::new(),
            claims: BTreeMap::new(),
            negated_claims: BTreeMap::new(),
            coverage: Coverage::default(),
            warnings: Vec::new(),
        }
    }

    #[test]
    fn aggregate_rates() {
        let t = tax();
        let r1 = report(
            "app1",
            &["location information_d"],
            &[],
            PolicyStatus::Missing,
        );
        let r2 = report(
            "app2",
            &["location information_d"],
            &["location information_d"],
            PolicyStatus::Valid,
        );
        let r3 = report("app3", &["device information_d"], &[], PolicyStatus::Valid);
        let refs: Vec<&AppReport> = vec![&r1, &r2, &r3];

        let a = aggregate(&refs, 1, SpoBasis::ValidPolicy, &t);
        assert_eq!(a.apps_total, 4);
        assert_eq!(a.apps_failed, 1);
        assert_eq!(a.basis_apps, 2);
        assert_eq!(a.apps_with_spo, 1);
        assert_eq!(a.spo_app_rate, Some(50.0));
        assert_eq!(a.policy_providing, 2);

        let loc = a
            .items
            .iter()
            .find(|s| s.item == "location information_d")
            .unwrap();
        assert_eq!(loc.collected_by, 2);
        assert_eq!(loc.spo_by, 1);
        assert_eq!(loc.spo_rate, Some(50.0));

        let never = a.items.iter().find(|s| s.item == "NFC_d").unwrap();
        assert_eq!(never.collected_by, 0);
        assert_eq!(never.spo_rate, None);

        let all = aggregate(&refs, 1, SpoBasis::All, &t);
        assert_eq!(all.basis_apps, 3);
        assert_eq!(all.apps_with_spo, 2);
    }

    #[test]
    fn aggregate_is_order_invariant() {
        let t = tax();
        let r1 = report("a", &["bluetooth_d"], &[], PolicyStatus::Missing);
        let r2 = report("b", &["bluetooth_d", "clipboard data_d"], &[], PolicyStatus::Valid);
        let fwd = aggregate(&[&r1, &r2], 0, SpoBasis::All, &t);
        let rev = aggregate(&[&r2, &r1], 0, SpoBasis::All, &t);
        assert_eq!(
            serde_json::to_string(&fwd).unwrap(),
            serde_json::to_string(&rev).unwrap()
        );
    }

    #[test]
    fn pct_arithmetic() {
        assert_eq!(pct(0, 0), None);
        assert_eq!(pct(1, 4), Some(25.0));
        let r = pct(781, 4989).unwrap();
        assert!((r - 15.65).abs() < 0.01);
    }
}

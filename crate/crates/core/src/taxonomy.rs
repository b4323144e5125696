//! The privacy taxonomy bundle: items, subAPI-to-item mappings, the keyword
//! lexicon, sink APIs, protection levels, and the policy verb/negation lists.
//!
//! The bundle ships as a data file (not code constants) so corpora from other
//! super-app ecosystems can swap mappings. It is immutable after load and
//! safe to share across concurrent analyses.

use crate::error::SpoError;
use crate::textmatch::{KeywordMatch, TextMatcher};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

pub const DEFAULT_TAXONOMY_JSON: &str = include_str!("../data/taxonomy.en.json");

pub const SUPPORTED_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrivacyCategory {
    Device,
    Platform,
    UserInput,
}

impl PrivacyCategory {
    pub fn suffix(self) -> &'static str {
        match self {
            PrivacyCategory::Device => "d",
            PrivacyCategory::Platform => "p",
            PrivacyCategory::UserInput => "u",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyItem {
    pub id: String,
    pub name: String,
    pub category: PrivacyCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CallbackStyle {
    /// Data arrives through the `success`/`complete` callback properties of
    /// the options object.
    SuccessCallback,
    /// Data is the call's return value.
    SyncReturn,
    /// Data arrives through a listener function passed as the first argument.
    EventListener,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubApiMapping {
    pub subapi: String,
    pub items: BTreeSet<String>,
    pub callback_style: CallbackStyle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub keyword: String,
    pub item: String,
    /// An exact claim covers only its own item id; a non-exact claim covers
    /// every category sharing the item's name.
    #[serde(default, skip_serializing_if = "is_false")]
    pub exact: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SinkKind {
    Upload,
    Request,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SinkApi {
    pub name: String,
    pub kind: SinkKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtectionLevel {
    NotProtected,
    PartiallyProtected,
    FullyProtected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ProtectionEntry {
    item: String,
    level: ProtectionLevel,
}

/// On-disk shape of the taxonomy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawTaxonomy {
    schema_version: u32,
    #[serde(default = "default_locale")]
    locale: String,
    items: Vec<PrivacyItem>,
    subapi_map: Vec<SubApiMapping>,
    keywords: Vec<KeywordEntry>,
    sinks: Vec<SinkApi>,
    #[serde(default)]
    protection_levels: Vec<ProtectionEntry>,
    #[serde(default)]
    policy_verbs: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    negation_cues: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    policy_indicators: BTreeMap<String, Vec<String>>,
}

fn default_locale() -> String {
    "en".to_string()
}

/// Validated, immutable taxonomy bundle.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    raw: RawTaxonomy,
    items: BTreeMap<String, PrivacyItem>,
    subapis: BTreeMap<String, SubApiMapping>,
    sinks: BTreeMap<String, SinkApi>,
    protection: BTreeMap<String, ProtectionLevel>,
    /// item name -> every id sharing that name (claim covering rule).
    name_groups: BTreeMap<String, BTreeSet<String>>,
    ui_matcher: TextMatcher,
    policy_matcher: TextMatcher,
}

// Derived indexes are functions of `raw`; bundle equality is raw equality.
impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.raw == other.raw
    }
}

impl Taxonomy {
    pub fn load(path: &Path) -> Result<Taxonomy, SpoError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpoError::io(path, e))?;
        Taxonomy::from_json_str(&text)
    }

    /// The shipped default bundle. Infallible by construction; covered by the
    /// load tests below.
    pub fn load_default() -> Taxonomy {
        Taxonomy::from_json_str(DEFAULT_TAXONOMY_JSON)
            .expect("shipped default taxonomy must validate")
    }

    pub fn from_json_str(text: &str) -> Result<Taxonomy, SpoError> {
        let raw: RawTaxonomy = serde_json::from_str(text)
            .map_err(|e| SpoError::TaxonomyLoad(format!("schema violation: {e}")))?;
        Taxonomy::from_raw(raw)
    }

    fn from_raw(raw: RawTaxonomy) -> Result<Taxonomy, SpoError> {
        let err = |msg: String| Err(SpoError::TaxonomyLoad(msg));

        if raw.schema_version != SUPPORTED_SCHEMA_VERSION {
            return err(format!(
                "unsupported schema_version {} (expected {})",
                raw.schema_version, SUPPORTED_SCHEMA_VERSION
            ));
        }
        if raw.items.is_empty() {
            return err("empty taxonomy".to_string());
        }

        let mut items = BTreeMap::new();
        let mut name_groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for item in &raw.items {
            if item.id.is_empty() || item.name.is_empty() {
                return err(format!("item with empty id or name: {item:?}"));
            }
            if items.insert(item.id.clone(), item.clone()).is_some() {
                return err(format!("duplicate item id `{}`", item.id));
            }
            name_groups
                .entry(item.name.clone())
                .or_default()
                .insert(item.id.clone());
        }

        let mut subapis = BTreeMap::new();
        for m in &raw.subapi_map {
            if m.items.is_empty() {
                return err(format!("subapi `{}` maps to no items", m.subapi));
            }
            let mut cats = BTreeSet::new();
            for id in &m.items {
                let Some(item) = items.get(id) else {
                    return err(format!(
                        "subapi `{}` references unknown privacy item `{id}`",
                        m.subapi
                    ));
                };
                if item.category == PrivacyCategory::UserInput {
                    return err(format!(
                        "subapi `{}` maps to user-input item `{id}`",
                        m.subapi
                    ));
                }
                cats.insert(item.category);
            }
            if cats.len() > 1 {
                return err(format!(
                    "duplicate mapping category conflict: subapi `{}` maps to items from multiple categories",
                    m.subapi
                ));
            }
            if subapis.insert(m.subapi.clone(), m.clone()).is_some() {
                return err(format!("duplicate subapi mapping `{}`", m.subapi));
            }
        }

        if raw.keywords.is_empty() {
            return err("empty keyword lexicon".to_string());
        }
        for k in &raw.keywords {
            if k.keyword.trim().is_empty() {
                return err(format!("empty keyword for item `{}`", k.item));
            }
            if !items.contains_key(&k.item) {
                return err(format!(
                    "keyword `{}` references unknown privacy item `{}`",
                    k.keyword, k.item
                ));
            }
        }

        let mut sinks = BTreeMap::new();
        for s in &raw.sinks {
            if sinks.insert(s.name.clone(), s.clone()).is_some() {
                return err(format!("duplicate sink `{}`", s.name));
            }
        }

        let mut protection = BTreeMap::new();
        for p in &raw.protection_levels {
            if !items.contains_key(&p.item) {
                return err(format!(
                    "protection level references unknown privacy item `{}`",
                    p.item
                ));
            }
            if protection.insert(p.item.clone(), p.level).is_some() {
                return err(format!("duplicate protection level for `{}`", p.item));
            }
        }

        let ui_matcher = TextMatcher::new(raw.keywords.iter().filter_map(|k| {
            (items[&k.item].category == PrivacyCategory::UserInput)
                .then_some((k.keyword.as_str(), k.item.as_str(), k.exact))
        }));
        let policy_matcher = TextMatcher::new(
            raw.keywords
                .iter()
                .map(|k| (k.keyword.as_str(), k.item.as_str(), k.exact)),
        );

        Ok(Taxonomy {
            raw,
            items,
            subapis,
            sinks,
            protection,
            name_groups,
            ui_matcher,
            policy_matcher,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.raw).expect("taxonomy serializes");
        s.push('\n');
        s
    }

    pub fn locale(&self) -> &str {
        &self.raw.locale
    }

    pub fn items(&self) -> impl Iterator<Item = &PrivacyItem> {
        self.items.values()
    }

    pub fn item(&self, id: &str) -> Option<&PrivacyItem> {
        self.items.get(id)
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn distinct_name_count(&self) -> usize {
        self.name_groups.len()
    }

    pub fn subapi_count(&self) -> usize {
        self.subapis.len()
    }

    pub fn sink_count(&self) -> usize {
        self.sinks.len()
    }

    /// Items collected by the named subAPI; empty when not privacy-relevant.
    /// Tolerates a `wx.` prefix and member-call forms like
    /// `createMapContext.getCenterLocation`.
    pub fn lookup_subapi(&self, name: &str) -> BTreeSet<String> {
        self.subapi_mapping(name)
            .map(|m| m.items.clone())
            .unwrap_or_default()
    }

    pub fn subapi_mapping(&self, name: &str) -> Option<&SubApiMapping> {
        let stripped = name.strip_prefix("wx.").unwrap_or(name);
        self.subapis.get(stripped)
    }

    pub fn sink(&self, name: &str) -> Option<&SinkApi> {
        let stripped = name.strip_prefix("wx.").unwrap_or(name);
        self.sinks.get(stripped)
    }

    pub fn sinks(&self) -> impl Iterator<Item = &SinkApi> {
        self.sinks.values()
    }

    pub fn protection_level(&self, item_id: &str) -> Option<ProtectionLevel> {
        self.protection.get(item_id).copied()
    }

    /// Items whose keywords occur in `text`, any category (policy matching).
    pub fn match_keywords(&self, text: &str) -> BTreeSet<String> {
        self.policy_matcher
            .find(text)
            .into_iter()
            .map(|m| m.item)
            .collect()
    }

    /// Items whose keywords occur in `text`, user-input category only
    /// (UI-label matching).
    pub fn match_ui_keywords(&self, text: &str) -> BTreeSet<String> {
        self.ui_matcher.find(text).into_iter().map(|m| m.item).collect()
    }

    pub fn ui_matcher(&self) -> &TextMatcher {
        &self.ui_matcher
    }

    pub fn policy_matcher(&self) -> &TextMatcher {
        &self.policy_matcher
    }

    pub fn policy_matches(&self, text: &str) -> Vec<KeywordMatch> {
        self.policy_matcher.find(text)
    }

    /// Claim covering rule: a claimed item covers every category sharing its
    /// name, unless the claim was marked exact.
    pub fn expand_claim(&self, item_id: &str, exact: bool) -> BTreeSet<String> {
        if exact {
            return BTreeSet::from([item_id.to_string()]);
        }
        match self.items.get(item_id) {
            Some(item) => self.name_groups[&item.name].clone(),
            None => BTreeSet::new(),
        }
    }

    pub fn collection_verbs(&self) -> &[String] {
        self.locale_list(&self.raw.policy_verbs)
    }

    pub fn negation_cues(&self) -> &[String] {
        self.locale_list(&self.raw.negation_cues)
    }

    pub fn policy_indicators(&self) -> &[String] {
        self.locale_list(&self.raw.policy_indicators)
    }

    fn locale_list<'a>(&'a self, map: &'a BTreeMap<String, Vec<String>>) -> &'a [String] {
        map.get(&self.raw.locale)
            .or_else(|| map.get("en"))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn default_bundle_has_expected_shape() {
        let tax = Taxonomy::load_default();
        assert_eq!(tax.item_count(), 37);
        assert_eq!(tax.distinct_name_count(), 29);
        assert_eq!(tax.subapi_count(), 130);
        assert_eq!(tax.sink_count(), 10);

        let by_cat = |c: PrivacyCategory| tax.items().filter(|i| i.category == c).count();
        assert_eq!(by_cat(PrivacyCategory::Device), 15);
        assert_eq!(by_cat(PrivacyCategory::Platform), 5);
        assert_eq!(by_cat(PrivacyCategory::UserInput), 17);

        let device_subapis = tax
            .raw
            .subapi_map
            .iter()
            .filter(|m| {
                m.items
                    .iter()
                    .all(|i| tax.item(i).unwrap().category == PrivacyCategory::Device)
            })
            .count();
        assert_eq!(device_subapis, 125);
        assert_eq!(tax.subapi_count() - device_subapis, 5);
    }

    #[test]
    fn lookup_tolerates_prefix_and_member_forms() {
        let tax = Taxonomy::load_default();
        assert_eq!(tax.lookup_subapi("getLocation"), set(&["location information_d"]));
        assert_eq!(tax.lookup_subapi("wx.getClipboardData"), set(&["clipboard data_d"]));
        assert_eq!(
            tax.lookup_subapi("createMapContext.getCenterLocation"),
            set(&["location information_d"])
        );
        assert!(tax.lookup_subapi("closeSocket").is_empty());
        assert!(tax.lookup_subapi("getRandomValue").is_empty());
    }

    #[test]
    fn multi_item_mappings_follow_table() {
        let tax = Taxonomy::load_default();
        assert_eq!(tax.lookup_subapi("faceDetect"), set(&["bluetooth_d", "camera_d"]));
        assert_eq!(
            tax.lookup_subapi("initFaceDetect"),
            set(&["biometric information_d", "camera_d"])
        );
        assert_eq!(tax.lookup_subapi("startRecord"), set(&["camera_d", "recording_d"]));
    }

    #[test]
    fn callback_styles_resolved() {
        let tax = Taxonomy::load_default();
        let style = |n: &str| tax.subapi_mapping(n).unwrap().callback_style;
        assert_eq!(style("getLocation"), CallbackStyle::SuccessCallback);
        assert_eq!(style("getSystemInfoSync"), CallbackStyle::SyncReturn);
        assert_eq!(style("onLocationChange"), CallbackStyle::EventListener);
    }

    #[test]
    fn ui_keyword_examples() {
        let tax = Taxonomy::load_default();
        assert_eq!(
            tax.match_ui_keywords("please enter your ID card"),
            set(&["identity information_u"])
        );
        assert!(tax.match_ui_keywords("search").is_empty());
        assert_eq!(
            tax.match_ui_keywords("bank card number and cardholder"),
            set(&["property information_u"])
        );
        // Device-only synonyms never match as UI labels.
        assert!(tax.match_ui_keywords("bluetooth").is_empty());
    }

    #[test]
    fn sink_table() {
        let tax = Taxonomy::load_default();
        assert_eq!(tax.sink("wx.uploadFile").unwrap().kind, SinkKind::Upload);
        assert_eq!(tax.sink("request").unwrap().kind, SinkKind::Request);
        assert_eq!(tax.sink("SocketTask.send").unwrap().kind, SinkKind::Request);
        assert!(tax.sink("downloadFile").is_none());
    }

    #[test]
    fn claim_expansion_covers_name_groups() {
        let tax = Taxonomy::load_default();
        assert_eq!(
            tax.expand_claim("location information_u", false),
            set(&[
                "location information_d",
                "location information_p",
                "location information_u"
            ])
        );
        assert_eq!(tax.expand_claim("bluetooth_d", false), set(&["bluetooth_d"]));
        assert_eq!(
            tax.expand_claim("activity information_p", true),
            set(&["activity information_p"])
        );
    }

    #[test]
    fn round_trip_reload_is_equal() {
        let tax = Taxonomy::load_default();
        let re = Taxonomy::from_json_str(&tax.to_json_string()).unwrap();
        assert_eq!(tax, re);
    }

    #[test]
    fn empty_items_rejected() {
        let doc = r#"{"schema_version":1,"items":[],"subapi_map":[],"keywords":[],"sinks":[]}"#;
        let e = Taxonomy::from_json_str(doc).unwrap_err();
        assert!(e.to_string().contains("empty taxonomy"), "{e}");
    }

    #[test]
    fn cross_category_mapping_rejected() {
        let doc = r#"{
            "schema_version": 1,
            "items": [
                {"id": "location information_d", "name": "location information", "category": "Device"},
                {"id": "location information_p", "name": "location information", "category": "Platform"}
            ],
            "subapi_map": [
                {"subapi": "getLocation",
                 "items": ["location information_d", "location information_p"],
                 "callback_style": "SuccessCallback"}
            ],
            "keywords": [{"keyword": "location", "item": "location information_d"}],
            "sinks": []
        }"#;
        let e = Taxonomy::from_json_str(doc).unwrap_err();
        assert!(
            e.to_string().contains("duplicate mapping category conflict"),
            "{e}"
        );
    }

    #[test]
    fn duplicate_item_id_rejected() {
        let doc = r#"{
            "schema_version": 1,
            "items": [
                {"id": "camera_d", "name": "camera", "category": "Device"},
                {"id": "camera_d", "name": "camera", "category": "Device"}
            ],
            "subapi_map": [],
            "keywords": [{"keyword": "camera", "item": "camera_d"}],
            "sinks": []
        }"#;
        let e = Taxonomy::from_json_str(doc).unwrap_err();
        assert!(e.to_string().contains("duplicate item id"), "{e}");
    }

    #[test]
    fn unknown_item_reference_names_offender() {
        let doc = r#"{
            "schema_version": 1,
            "items": [{"id": "camera_d", "name": "camera", "category": "Device"}],
            "subapi_map": [
                {"subapi": "takePhoto", "items": ["ghost_d"], "callback_style": "SuccessCallback"}
            ],
            "keywords": [{"keyword": "camera", "item": "camera_d"}],
            "sinks": []
        }"#;
        let e = Taxonomy::from_json_str(doc).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("takePhoto") && msg.contains("ghost_d"), "{msg}");
    }

    #[test]
    fn shipped_protection_levels() {
        let tax = Taxonomy::load_default();
        assert_eq!(
            tax.protection_level("location information_d"),
            Some(ProtectionLevel::PartiallyProtected)
        );
        assert_eq!(tax.protection_level("bluetooth_d"), None);
    }

    #[test]
    fn verb_and_negation_lists_present() {
        let tax = Taxonomy::load_default();
        let verbs = tax.collection_verbs();
        for v in ["collect", "obtain", "record", "store", "acquire", "use", "access"] {
            assert!(verbs.iter().any(|w| w == v), "missing verb {v}");
        }
        assert!(tax.negation_cues().iter().any(|c| c == "not"));
        assert!(tax
            .policy_indicators()
            .iter()
            .any(|c| c == "privacy policy"));
    }
}

//! Privacy-policy processing: find the policy text for a package, split it
//! into sentences, and extract which privacy items it claims to collect,
//! honoring negation ("we do not collect ...") and ignoring sentences that
//! are not about collection at all.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::Serialize;

use crate::ingest::Package;
use crate::render::markup::parse_markup;
use crate::taxonomy::Taxonomy;

pub const DEFAULT_MIN_POLICY_LEN: usize = 50;

/// A page this long that mentions a policy indicator is taken to BE the
/// policy, not merely to link to one.
const PAGE_TEXT_MIN: usize = 200;

/// Words that flip a sentence's stance mid-way; they reset the negation
/// state like a semicolon does.
const CONTRAST_WORDS: &[&str] = &["but", "however", "yet", "whereas", "although", "while"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyStatus {
    /// Policy text was found and is long enough to analyze.
    Valid,
    /// The app points at a policy, but its text is unusable (empty, too
    /// short, unreadable, or only reachable over the network).
    Invalid,
    /// No trace of a policy.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "at", rename_all = "kebab-case")]
pub enum PolicyOrigin {
    /// Text vendored next to the package.
    ExternalFile(String),
    /// Asset inside the package, reached from a policy link.
    InPackageAsset(String),
    /// A page whose own text is the policy (route).
    PageText(String),
    /// Fetched from a URL found in the markup.
    Remote(String),
}

#[derive(Debug, Clone)]
pub struct PolicyDoc {
    pub origin: PolicyOrigin,
    pub text: String,
}

/// One claimed item with its supporting sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Claim {
    /// Exact claims cover only their own item id when expanded.
    pub exact: bool,
    pub sentences: BTreeSet<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClaimSet {
    pub claims: BTreeMap<String, Claim>,
    /// Items mentioned only under negation, with the sentences saying so.
    pub negated: BTreeMap<String, BTreeSet<usize>>,
    pub sentences: Vec<String>,
}

impl ClaimSet {
    pub fn claimed_items(&self) -> BTreeSet<String> {
        self.claims.keys().cloned().collect()
    }

    /// Applies the covering rule: each claim expands to every category
    /// sharing the item's name, unless marked exact.
    pub fn expanded(&self, tax: &Taxonomy) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (item, claim) in &self.claims {
            out.extend(tax.expand_claim(item, claim.exact));
        }
        out
    }
}

#[derive(Debug)]
pub struct PolicyAnalysis {
    pub status: PolicyStatus,
    pub doc: Option<PolicyDoc>,
    pub claims: ClaimSet,
    /// Policy URLs seen in markup that were not fetched (or failed).
    pub remote_urls: Vec<String>,
    pub warnings: Vec<String>,
}

/// Splits policy text into sentences. Boundaries: `.?!` before whitespace,
/// CJK sentence punctuation, blank lines, bullet/numbered list markers
/// (including inline `1) ... 2) ...` runs).
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    let flush = |start: &mut usize, end: usize, out: &mut Vec<String>| {
        let s = text[*start..end].trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
        *start = end;
    };
    while i < text.len() {
        let c = text[i..].chars().next().unwrap();
        let clen = c.len_utf8();
        match c {
            '.' | '!' | '?' => {
                let next = text[i + clen..].chars().next();
                if next.is_none_or(|n| n.is_whitespace()) {
                    flush(&mut start, i + clen, &mut out);
                }
            }
            '\u{3002}' | '\u{ff01}' | '\u{ff1f}' | '\u{ff1b}' => {
                // CJK full stop / ! / ? / ;
                flush(&mut start, i + clen, &mut out);
            }
            '\n' => {
                let rest = text[i + clen..].trim_start_matches([' ', '\t']);
                let line_was_bullet = starts_with_bullet(text[start..i].trim_start());
                if rest.starts_with('\n') || starts_with_bullet(rest) || line_was_bullet {
                    flush(&mut start, i, &mut out);
                }
            }
            c if c.is_whitespace() => {
                // Inline enumerations: "1) name 2) phone". Only the
                // parenthesis forms; "3.5" is a number.
                if i > start && starts_with_paren_marker(&text[i + clen..]) {
                    flush(&mut start, i, &mut out);
                }
            }
            _ => {}
        }
        i += clen;
        let _ = bytes;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

fn starts_with_bullet(s: &str) -> bool {
    s.starts_with(['-', '*', '\u{2022}', '\u{00b7}']) || starts_with_numbered_marker(s)
}

fn starts_with_numbered_marker(s: &str) -> bool {
    let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 || digits > 2 {
        return false;
    }
    s[digits..].starts_with([')', '.', '\u{3001}', '\u{ff0e}', '\u{ff09}'])
}

fn starts_with_paren_marker(s: &str) -> bool {
    let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 || digits > 2 {
        return false;
    }
    s[digits..].starts_with([')', '\u{ff09}'])
}

/// Word-boundary containment of any of `words` (multiword entries allowed).
fn contains_word(text_lower: &str, words: &[String]) -> bool {
    words.iter().any(|w| has_word(text_lower, w))
}

fn has_word(text_lower: &str, word: &str) -> bool {
    let mut from = 0;
    while let Some(pos) = text_lower[from..].find(word) {
        let at = from + pos;
        let before_ok = text_lower[..at]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = text_lower[at + word.len()..]
            .chars()
            .next()
            .is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return true;
        }
        from = at + word.len();
    }
    false
}

enum SegStart {
    First,
    Comma,
    Hard,
}

/// Byte ranges of sentence segments with how each one begins.
fn segment(sentence: &str) -> Vec<(usize, usize, SegStart)> {
    let lower = sentence.to_lowercase();
    let mut cuts: Vec<(usize, SegStart)> = Vec::new();
    for (i, c) in sentence.char_indices() {
        match c {
            ',' | '\u{ff0c}' => cuts.push((i + c.len_utf8(), SegStart::Comma)),
            ';' | '\u{ff1b}' => cuts.push((i + c.len_utf8(), SegStart::Hard)),
            _ => {}
        }
    }
    for w in CONTRAST_WORDS {
        let mut from = 0;
        while let Some(pos) = lower[from..].find(w) {
            let at = from + pos;
            let before_ok = lower[..at]
                .chars()
                .next_back()
                .is_none_or(|c| !c.is_alphanumeric());
            let after_ok = lower[at + w.len()..]
                .chars()
                .next()
                .is_none_or(|c| !c.is_alphanumeric());
            if before_ok && after_ok {
                cuts.push((at, SegStart::Hard));
            }
            from = at + w.len();
        }
    }
    cuts.sort_by_key(|(i, _)| *i);
    cuts.dedup_by_key(|(i, _)| *i);

    let mut segs = Vec::new();
    let mut prev = 0;
    let mut prev_kind = SegStart::First;
    for (at, kind) in cuts {
        if at > prev {
            segs.push((prev, at, prev_kind));
        }
        prev = at;
        prev_kind = kind;
    }
    if sentence.len() > prev {
        segs.push((prev, sentence.len(), prev_kind));
    }
    segs
}

/// Extracts collection claims from policy text.
pub fn extract_claims(text: &str, tax: &Taxonomy) -> ClaimSet {
    let sentences = split_sentences(text);
    let verbs = tax.collection_verbs();
    let cues = tax.negation_cues();

    let mut set = ClaimSet {
        sentences: sentences.clone(),
        ..ClaimSet::default()
    };

    for (idx, sentence) in sentences.iter().enumerate() {
        let lower = sentence.to_lowercase();
        if !contains_word(&lower, verbs) {
            // Not about collection ("please call our contact number ...").
            continue;
        }
        let matches = tax.policy_matches(sentence);
        if matches.is_empty() {
            continue;
        }
        let mut negated = false;
        for (seg_start, seg_end, kind) in segment(sentence) {
            let seg_lower = &lower[seg_start.min(lower.len())..seg_end.min(lower.len())];
            match kind {
                SegStart::First | SegStart::Hard => negated = false,
                SegStart::Comma => {
                    // A comma list inherits the stance unless the new
                    // segment re-asserts one with its own verb.
                    if contains_word(seg_lower, verbs) {
                        negated = false;
                    }
                }
            }
            if contains_word(seg_lower, cues) {
                negated = true;
            }
            for m in matches
                .iter()
                .filter(|m| m.span.0 >= seg_start && m.span.0 < seg_end)
            {
                if negated {
                    set.negated.entry(m.item.clone()).or_default().insert(idx);
                } else {
                    let claim = set.claims.entry(m.item.clone()).or_insert(Claim {
                        exact: m.exact,
                        sentences: BTreeSet::new(),
                    });
                    claim.exact = claim.exact && m.exact;
                    claim.sentences.insert(idx);
                }
            }
        }
    }
    set
}

pub trait PolicyRetriever {
    fn fetch(&self, url: &str) -> Result<String, String>;
}

/// Never fetches; URLs are recorded for the report instead.
pub struct NoFetch;

impl PolicyRetriever for NoFetch {
    fn fetch(&self, _url: &str) -> Result<String, String> {
        Err("remote policy fetching is disabled".to_string())
    }
}

/// Minimal plain-HTTP GET. TLS is out of scope: https URLs are reported,
/// not fetched.
pub struct HttpFetch {
    pub timeout: Duration,
}

impl Default for HttpFetch {
    fn default() -> Self {
        HttpFetch {
            timeout: Duration::from_secs(10),
        }
    }
}

impl PolicyRetriever for HttpFetch {
    fn fetch(&self, url: &str) -> Result<String, String> {
        let rest = url.strip_prefix("http://").ok_or_else(|| {
            if url.starts_with("https://") {
                "https fetching is not supported; vendor the policy next to the package".to_string()
            } else {
                format!("unsupported url scheme: {url}")
            }
        })?;
        let (hostport, path) = match rest.split_once('/') {
            Some((h, p)) => (h, format!("/{p}")),
            None => (rest, "/".to_string()),
        };
        let host = hostport.split(':').next().unwrap_or(hostport);
        let addr = if hostport.contains(':') {
            hostport.to_string()
        } else {
            format!("{hostport}:80")
        };
        let sock = addr
            .to_socket_addrs()
            .map_err(|e| format!("resolve {addr}: {e}"))?
            .next()
            .ok_or_else(|| format!("resolve {addr}: no address"))?;
        let mut stream = TcpStream::connect_timeout(&sock, self.timeout)
            .map_err(|e| format!("connect {addr}: {e}"))?;
        stream.set_read_timeout(Some(self.timeout)).ok();
        stream.set_write_timeout(Some(self.timeout)).ok();
        write!(
            stream,
            "GET {path} HTTP/1.0\r\nHost: {host}\r\nUser-Agent: spo/0.1\r\nConnection: close\r\n\r\n"
        )
        .map_err(|e| format!("send {url}: {e}"))?;
        let mut raw = Vec::new();
        stream
            .read_to_end(&mut raw)
            .map_err(|e| format!("read {url}: {e}"))?;
        let response = String::from_utf8_lossy(&raw);
        let (head, body) = response
            .split_once("\r\n\r\n")
            .ok_or_else(|| format!("malformed response from {url}"))?;
        let status_line = head.lines().next().unwrap_or_default();
        if !status_line.contains(" 200") {
            return Err(format!("{url}: {status_line}"));
        }
        let body = body.trim();
        if body.starts_with('<') || head.to_lowercase().contains("content-type: text/html") {
            Ok(parse_markup(body).full_text())
        } else {
            Ok(body.to_string())
        }
    }
}

/// Attributes that can carry a policy link.
const LINK_ATTRS: &[&str] = &["url", "src", "href", "data-src"];

/// Finds the policy for a package and extracts its claims.
///
/// Search order: text vendored next to the package, then a policy link in
/// the markup (in-package asset or URL), then a page whose own text is the
/// policy.
pub fn analyze_policy(
    pkg: &Package,
    tax: &Taxonomy,
    retriever: &dyn PolicyRetriever,
    min_len: usize,
) -> PolicyAnalysis {
    let mut warnings = Vec::new();
    let mut remote_urls = Vec::new();

    let doc = find_policy_doc(pkg, tax, retriever, &mut warnings, &mut remote_urls);

    match doc {
        Some(doc) if doc.text.trim().chars().count() >= min_len => {
            let claims = extract_claims(&doc.text, tax);
            PolicyAnalysis {
                status: PolicyStatus::Valid,
                doc: Some(doc),
                claims,
                remote_urls,
                warnings,
            }
        }
        Some(doc) => {
            warnings.push(format!(
                "policy at {:?} is too short to analyze ({} chars, need {min_len})",
                doc.origin,
                doc.text.trim().chars().count()
            ));
            PolicyAnalysis {
                status: PolicyStatus::Invalid,
                doc: Some(doc),
                claims: ClaimSet::default(),
                remote_urls,
                warnings,
            }
        }
        None if !remote_urls.is_empty() => PolicyAnalysis {
            status: PolicyStatus::Invalid,
            doc: None,
            claims: ClaimSet::default(),
            remote_urls,
            warnings,
        },
        None => PolicyAnalysis {
            status: PolicyStatus::Missing,
            doc: None,
            claims: ClaimSet::default(),
            remote_urls,
            warnings,
        },
    }
}

fn find_policy_doc(
    pkg: &Package,
    tax: &Taxonomy,
    retriever: &dyn PolicyRetriever,
    warnings: &mut Vec<String>,
    remote_urls: &mut Vec<String>,
) -> Option<PolicyDoc> {
    if let Some(text) = &pkg.external_policy {
        return Some(PolicyDoc {
            origin: PolicyOrigin::ExternalFile("policy.txt".to_string()),
            text: text.clone(),
        });
    }

    let indicators: Vec<String> = tax
        .policy_indicators()
        .iter()
        .map(|s| s.to_lowercase())
        .collect();

    // Policy links: elements mentioning an indicator, carrying (or whose
    // parent carries) a link attribute.
    for (route, doc) in &pkg.docs {
        for el in doc.elements() {
            let own_text = doc.subtree_text(el).to_lowercase();
            let mentions = indicators.iter().any(|i| own_text.contains(i.as_str()))
                || doc
                    .attrs(el)
                    .iter()
                    .any(|(_, v)| indicators.iter().any(|i| v.to_lowercase().contains(i.as_str())));
            if !mentions {
                continue;
            }
            let link = LINK_ATTRS
                .iter()
                .find_map(|a| doc.attr(el, a))
                .or_else(|| {
                    doc.parent(el)
                        .and_then(|p| LINK_ATTRS.iter().find_map(|a| doc.attr(p, a)))
                });
            let Some(link) = link else { continue };
            if link.contains("{{") || link.is_empty() {
                continue;
            }

            if link.starts_with("http://") || link.starts_with("https://") {
                match retriever.fetch(link) {
                    Ok(text) => {
                        return Some(PolicyDoc {
                            origin: PolicyOrigin::Remote(link.to_string()),
                            text,
                        });
                    }
                    Err(e) => {
                        warnings.push(format!("{route}: policy link {link}: {e}"));
                        remote_urls.push(link.to_string());
                        continue;
                    }
                }
            }

            let rel = link.trim_start_matches('/');
            if !rel.ends_with(".txt") && !rel.ends_with(".md") && !rel.ends_with(".html") {
                continue;
            }
            match std::fs::read_to_string(pkg.root.join(rel)) {
                Ok(raw) => {
                    let text = if rel.ends_with(".html") {
                        parse_markup(&raw).full_text()
                    } else {
                        raw
                    };
                    return Some(PolicyDoc {
                        origin: PolicyOrigin::InPackageAsset(rel.to_string()),
                        text,
                    });
                }
                Err(e) => {
                    warnings.push(format!("{route}: policy asset {rel} unreadable: {e}"));
                    // Declared but unusable; an empty doc downgrades to
                    // Invalid rather than Missing.
                    return Some(PolicyDoc {
                        origin: PolicyOrigin::InPackageAsset(rel.to_string()),
                        text: String::new(),
                    });
                }
            }
        }
    }

    // A page that IS the policy.
    for (route, doc) in &pkg.docs {
        let text = doc.full_text();
        let lower = text.to_lowercase();
        if text.trim().chars().count() >= PAGE_TEXT_MIN
            && indicators.iter().any(|i| lower.contains(i.as_str()))
        {
            return Some(PolicyDoc {
                origin: PolicyOrigin::PageText(route.clone()),
                text,
            });
        }
    }

    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load_package;
    use std::fs;
    use std::path::Path;

    fn tax() -> Taxonomy {
        Taxonomy::load_default()
    }

    #[test]
    fn sentence_splitting() {
        let s = split_sentences(
            "We value you. Version 3.5 applies! Does it? 我们收集位置。包括：\n- 姓名\n- 电话\nWe need: 1) name 2) phone number",
        );
        assert_eq!(
            s,
            vec![
                "We value you.",
                "Version 3.5 applies!",
                "Does it?",
                "我们收集位置。",
                "包括：",
                "- 姓名",
                "- 电话",
                "We need:",
                "1) name",
                "2) phone number",
            ]
        );
    }

    #[test]
    fn plain_claims() {
        let c = extract_claims("We collect your name and address to ship orders.", &tax());
        assert!(c.claims.contains_key("name_u"));
        assert!(c.claims.contains_key("location information_u"));
        assert!(c.negated.is_empty());
    }

    #[test]
    fn negated_claim_excluded() {
        let c = extract_claims("We do not collect your address.", &tax());
        assert!(c.claims.is_empty());
        assert!(c.negated.contains_key("location information_u"));
    }

    #[test]
    fn contrast_resets_negation_scope() {
        let c = extract_claims(
            "We collect your name, but we do not collect your address.",
            &tax(),
        );
        assert!(c.claims.contains_key("name_u"));
        assert!(!c.claims.contains_key("location information_u"));
        assert!(c.negated.contains_key("location information_u"));
    }

    #[test]
    fn comma_list_inherits_negation() {
        let c = extract_claims("We do not collect your name, address, or phone number.", &tax());
        assert!(c.claims.is_empty());
        assert_eq!(c.negated.len(), 3);
    }

    #[test]
    fn comma_with_new_verb_reasserts() {
        let c = extract_claims(
            "We do not sell advertising, we collect your device information.",
            &tax(),
        );
        assert!(c.claims.contains_key("device information_d"));
    }

    #[test]
    fn non_collective_sentence_ignored() {
        let c = extract_claims("Please call our contact number 400-123-4567.", &tax());
        assert!(c.claims.is_empty());
        assert!(c.negated.is_empty());
    }

    #[test]
    fn exact_claim_stays_narrow() {
        let t = tax();
        let c = extract_claims("We collect WeRun data for step counting.", &t);
        let claim = c.claims.get("activity information_p").unwrap();
        assert!(claim.exact);
        assert_eq!(
            c.expanded(&t).into_iter().collect::<Vec<_>>(),
            vec!["activity information_p"]
        );
    }

    #[test]
    fn broad_claim_expands_across_categories() {
        let t = tax();
        let c = extract_claims("We collect your device information.", &t);
        let expanded = c.expanded(&t);
        assert!(expanded.contains("device information_d"));
        assert!(expanded.contains("device information_u"));
    }

    #[test]
    fn extraction_is_deterministic() {
        let text = "We collect your name. We do not collect your address. We use your location.";
        let a = extract_claims(text, &tax());
        let b = extract_claims(text, &tax());
        assert_eq!(a.claims, b.claims);
        assert_eq!(a.negated, b.negated);
    }

    fn write(root: &Path, rel: &str, content: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    fn base_app(root: &Path) {
        write(root, "app.json", r#"{ "pages": ["pages/p/p"] }"#);
        write(root, "app.js", "App({});");
        write(root, "pages/p/p.js", "Page({});");
    }

    #[test]
    fn external_file_wins() {
        let dir = tempfile::tempdir().unwrap();
        base_app(dir.path());
        write(dir.path(), "pages/p/p.wxml", "<view/>");
        write(
            dir.path(),
            "policy.txt",
            "Privacy policy. We collect your name for account creation and support purposes.",
        );
        let pkg = load_package(dir.path()).unwrap();
        let a = analyze_policy(&pkg, &tax(), &NoFetch, DEFAULT_MIN_POLICY_LEN);
        assert_eq!(a.status, PolicyStatus::Valid);
        assert!(matches!(
            a.doc.unwrap().origin,
            PolicyOrigin::ExternalFile(_)
        ));
        assert!(a.claims.claims.contains_key("name_u"));
    }

    #[test]
    fn linked_asset_found() {
        let dir = tempfile::tempdir().unwrap();
        base_app(dir.path());
        write(
            dir.path(),
            "pages/p/p.wxml",
            r#"<navigator url="/assets/privacy.txt">Privacy Policy</navigator>"#,
        );
        write(
            dir.path(),
            "assets/privacy.txt",
            "Privacy policy of this shop. We collect your address to deliver packages you order.",
        );
        let pkg = load_package(dir.path()).unwrap();
        let a = analyze_policy(&pkg, &tax(), &NoFetch, DEFAULT_MIN_POLICY_LEN);
        assert_eq!(a.status, PolicyStatus::Valid);
        assert!(matches!(
            a.doc.unwrap().origin,
            PolicyOrigin::InPackageAsset(ref p) if p == "assets/privacy.txt"
        ));
        assert!(a.claims.claims.contains_key("location information_u"));
    }

    #[test]
    fn short_asset_is_invalid() {
        let dir = tempfile::tempdir().unwrap();
        base_app(dir.path());
        write(
            dir.path(),
            "pages/p/p.wxml",
            r#"<navigator url="/assets/privacy.txt">Privacy Policy</navigator>"#,
        );
        write(dir.path(), "assets/privacy.txt", "TODO");
        let pkg = load_package(dir.path()).unwrap();
        let a = analyze_policy(&pkg, &tax(), &NoFetch, DEFAULT_MIN_POLICY_LEN);
        assert_eq!(a.status, PolicyStatus::Invalid);
        assert!(a.claims.claims.is_empty());
    }

    #[test]
    fn unfetched_remote_is_invalid_and_recorded() {
        let dir = tempfile::tempdir().unwrap();
        base_app(dir.path());
        write(
            dir.path(),
            "pages/p/p.wxml",
            r#"<view data-src="https://example.com/privacy.html">Privacy Agreement</view>"#,
        );
        let pkg = load_package(dir.path()).unwrap();
        let a = analyze_policy(&pkg, &tax(), &NoFetch, DEFAULT_MIN_POLICY_LEN);
        assert_eq!(a.status, PolicyStatus::Invalid);
        assert_eq!(a.remote_urls, vec!["https://example.com/privacy.html"]);
    }

    #[test]
    fn page_text_fallback() {
        let dir = tempfile::tempdir().unwrap();
        base_app(dir.path());
        write(dir.path(), "pages/p/p.wxml", "<view/>");
        let mut body = String::from("<view><text>Privacy Policy</text>");
        body.push_str("<text>We collect your name and location to provide delivery services. ");
        body.push_str("We do not collect your clipboard. This statement explains our practices ");
        body.push_str("around the personal information you provide while using this program. ");
        body.push_str("Contact us with questions about this statement at any time.</text></view>");
        write(dir.path(), "pages/q/q.js", "Page({});");
        write(dir.path(), "pages/q/q.wxml", &body);
        // q must be a declared page for its markup to load
        write(
            dir.path(),
            "app.json",
            r#"{ "pages": ["pages/p/p", "pages/q/q"] }"#,
        );
        let pkg = load_package(dir.path()).unwrap();
        let a = analyze_policy(&pkg, &tax(), &NoFetch, DEFAULT_MIN_POLICY_LEN);
        assert_eq!(a.status, PolicyStatus::Valid);
        assert!(matches!(
            a.doc.unwrap().origin,
            PolicyOrigin::PageText(ref r) if r == "pages/q/q"
        ));
        assert!(a.claims.claims.contains_key("name_u"));
        assert!(a.claims.negated.contains_key("clipboard data_d"));
    }

    #[test]
    fn missing_when_no_trace() {
        let dir = tempfile::tempdir().unwrap();
        base_app(dir.path());
        write(dir.path(), "pages/p/p.wxml", "<view>shop around</view>");
        let pkg = load_package(dir.path()).unwrap();
        let a = analyze_policy(&pkg, &tax(), &NoFetch, DEFAULT_MIN_POLICY_LEN);
        assert_eq!(a.status, PolicyStatus::Missing);
    }

    #[test]
    fn http_fetch_against_local_server() {
        use std::net::TcpListener;
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut conn, _) = listener.accept().unwrap();
            let mut buf = [0u8; 1024];
            let _ = conn.read(&mut buf);
            let body = "Privacy policy. We collect your name and your location when you order.";
            let resp = format!(
                "HTTP/1.0 200 OK\r\nContent-Type: text/plain\r\nContent-Length: {}\r\n\r\n{}",
                body.len(),
                body
            );
            conn.write_all(resp.as_bytes()).unwrap();
        });
        let fetcher = HttpFetch::default();
        let text = fetcher.fetch(&format!("http://{addr}/privacy.txt")).unwrap();
        handle.join().unwrap();
        assert!(text.contains("We collect your name"));

        let err = fetcher.fetch("https://example.com/p").unwrap_err();
        assert!(err.contains("https"));
    }
}

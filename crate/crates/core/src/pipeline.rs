//! End-to-end drivers: one app directory in, an `AppReport` out; a corpus
//! directory of app subdirectories in, a `CorpusReport` out.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::SpoError;
use crate::ingest::{self, Package};
use crate::miner::{
    self, AppFingerprint, SdkAttribution, SdkCluster, TemplateCluster, TemplateStats,
};
use crate::policy::{self, HttpFetch, NoFetch, PolicyRetriever};
use crate::script::callgraph;
use crate::spo::{self, Aggregate, AppReport, Coverage, SpoBasis};
use crate::taxonomy::Taxonomy;
use crate::{flow, miner as mining};

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    /// Follow http policy links found in page markup. Off by default:
    /// corpus runs must not depend on the network.
    pub fetch_remote_policies: bool,
    /// Minimum character count for a policy text to be analyzable.
    pub min_policy_len: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            fetch_remote_policies: false,
            min_policy_len: policy::DEFAULT_MIN_POLICY_LEN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub analyze: AnalyzeOptions,
    pub basis: SpoBasis,
    pub theta1: f64,
    pub theta2: f64,
    pub theta_sdk: f64,
    pub min_sdk_usage: usize,
    /// Worker threads for per-app analysis; None uses the rayon default.
    pub parallelism: Option<usize>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            analyze: AnalyzeOptions::default(),
            basis: SpoBasis::ValidPolicy,
            theta1: miner::DEFAULT_THETA1,
            theta2: miner::DEFAULT_THETA2,
            theta_sdk: miner::DEFAULT_THETA_SDK,
            min_sdk_usage: miner::DEFAULT_MIN_SDK_USAGE,
            parallelism: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AppFailure {
    pub appid: String,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct CorpusReport {
    pub schema_version: u32,
    pub corpus: Aggregate,
    pub templates: Vec<TemplateCluster>,
    pub sdks: Vec<SdkCluster>,
    pub template_stats: TemplateStats,
    pub sdk_attribution: Vec<SdkAttribution>,
    pub apps: Vec<AppReport>,
    pub failures: Vec<AppFailure>,
}

pub const SCHEMA_VERSION: u32 = 1;

fn retriever(opts: &AnalyzeOptions) -> Box<dyn PolicyRetriever> {
    if opts.fetch_remote_policies {
        Box::new(HttpFetch::default())
    } else {
        Box::new(NoFetch)
    }
}

/// Runs the full per-app pipeline on an already-loaded package.
pub fn analyze_package(pkg: &Package, tax: &Taxonomy, opts: &AnalyzeOptions) -> AppReport {
    let cg = callgraph::build(pkg);
    let flows = flow::analyze(pkg, tax, &cg);
    let pol = policy::analyze_policy(pkg, tax, retriever(opts).as_ref(), opts.min_policy_len);

    let s_collect = flows.collect_set();
    let (s_claim, s_spo) = spo::compute_spo(&s_collect, &pol, tax);
    let (claims, negated_claims) = AppReport::claim_evidence(&pol, tax);

    let mut warnings = pkg.warnings.clone();
    warnings.extend(flows.warnings.iter().cloned());
    warnings.extend(pol.warnings.iter().cloned());

    AppReport {
        appid: pkg.appid.clone(),
        meta: pkg.meta.clone(),
        policy_status: pol.status,
        policy_origin: pol.doc.map(|d| d.origin),
        remote_policy_urls: pol.remote_urls,
        s_collect,
        s_claim,
        s_spo,
        flows: flows.flows,
        sources: flows.sources,
        claims,
        negated_claims,
        coverage: Coverage {
            pages_total: pkg.pages_total(),
            pages_analyzed: pkg.pages_analyzed(),
            parse_failed: pkg.parse_failures.iter().map(|(f, _)| f.clone()).collect(),
            unreached_functions: cg.unreached_functions,
            unresolved_calls: cg.unresolved_calls,
            dropped_at_calls: flows.dropped_at_calls,
        },
        warnings,
    }
}

pub fn analyze_app(dir: &Path, tax: &Taxonomy, opts: &AnalyzeOptions) -> Result<AppReport, SpoError> {
    let pkg = ingest::load_package(dir)?;
    Ok(analyze_package(&pkg, tax, opts))
}

/// Analyzes every subdirectory of `dir` as an app. Per-app failures are
/// recorded, not fatal; a corpus with zero loadable apps is an error.
pub fn analyze_corpus(dir: &Path, tax: &Taxonomy, opts: &CorpusOptions) -> Result<CorpusReport, SpoError> {
    let mut app_dirs: Vec<(String, std::path::PathBuf)> = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| SpoError::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| SpoError::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            app_dirs.push((name, path));
        }
    }
    app_dirs.sort();
    if app_dirs.is_empty() {
        return Err(SpoError::Analysis(format!(
            "no app directories under {}",
            dir.display()
        )));
    }

    let run = || -> Vec<(String, Result<(AppReport, AppFingerprint), SpoError>)> {
        app_dirs
            .par_iter()
            .map(|(name, path)| {
                let res = ingest::load_package(path)
                    .map(|pkg| (analyze_package(&pkg, tax, &opts.analyze), mining::fingerprint(&pkg)));
                (name.clone(), res)
            })
            .collect()
    };
    let results = match opts.parallelism {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SpoError::Analysis(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut apps = Vec::new();
    let mut fingerprints = Vec::new();
    let mut failures = Vec::new();
    for (name, res) in results {
        match res {
            Ok((report, fp)) => {
                apps.push(report);
                fingerprints.push(fp);
            }
            Err(e) => failures.push(AppFailure {
                appid: name,
                error: e.to_string(),
            }),
        }
    }
    apps.sort_by(|a, b| a.appid.cmp(&b.appid));
    if apps.is_empty() {
        return Err(SpoError::Analysis(format!(
            "no loadable apps under {} ({} failed)",
            dir.display(),
            failures.len()
        )));
    }

    let templates = mining::detect_templates(&fingerprints, opts.theta1, opts.theta2);
    let sdks = mining::detect_sdks(&fingerprints, opts.theta_sdk, opts.min_sdk_usage);
    let refs: Vec<&AppReport> = apps.iter().collect();
    let (template_stats, sdk_attribution) = mining::attribute_spo(&refs, &templates, &sdks);
    let corpus = spo::aggregate(&refs, failures.len(), opts.basis, tax);

    Ok(CorpusReport {
        schema_version: SCHEMA_VERSION,
        corpus,
        templates,
        sdks,
        template_stats,
        sdk_attribution,
        apps,
        failures,
    })
}

pub fn corpus_to_json(report: &CorpusReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn app_to_json(report: &AppReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// One row per (app, item, status) membership; `spo` rows are the subset
/// of `collected` rows not covered by a valid policy.
pub fn corpus_to_csv(report: &CorpusReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["appid", "item", "status"]).expect("csv header");
    for app in &report.apps {
        app_csv_rows(&mut w, app);
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
}

pub fn app_to_csv(report: &AppReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["appid", "item", "status"]).expect("csv header");
    app_csv_rows(&mut w, report);
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
}

fn app_csv_rows(w: &mut csv::Writer<Vec<u8>>, app: &AppReport) {
    for (set, status) in [
        (&app.s_collect, "collected"),
        (&app.s_claim, "claimed"),
        (&app.s_spo, "spo"),
    ] {
        for item in set {
            w.write_record([app.appid.as_str(), item, status]).expect("csv row");
        }
    }
}

fn fmt_pct(v: Option<f64>) -> String {
    match v {
        Some(p) => format!("{:.2}%", p * 100.0),
        None => "n/a".to_string(),
    }
}

fn fmt_set(items: &std::collections::BTreeSet<String>) -> String {
    if items.is_empty() {
        "(none)".to_string()
    } else {
        items.iter().cloned().collect::<Vec<_>>().join(", ")
    }
}

pub fn app_to_text(r: &AppReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "app {}", r.appid);
    let _ = writeln!(s, "  policy: {:?}", r.policy_status);
    if let Some(origin) = &r.policy_origin {
        let _ = writeln!(s, "  policy origin: {origin:?}");
    }
    let _ = writeln!(s, "  collected ({}): {}", r.s_collect.len(), fmt_set(&r.s_collect));
    let _ = writeln!(s, "  claimed   ({}): {}", r.s_claim.len(), fmt_set(&r.s_claim));
    let _ = writeln!(s, "  over-collected ({}): {}", r.s_spo.len(), fmt_set(&r.s_spo));
    let _ = writeln!(s, "  flows: {}  sources: {}", r.flows.len(), r.sources.len());
    let _ = writeln!(
        s,
        "  coverage: {}/{} pages, {} parse failures, {} unresolved calls",
        r.coverage.pages_analyzed,
        r.coverage.pages_total,
        r.coverage.parse_failed.len(),
        r.coverage.unresolved_calls
    );
    for w in &r.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    s
}

pub fn corpus_to_text(r: &CorpusReport) -> String {
    use std::fmt::Write;
    let c = &r.corpus;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "corpus: {} apps ({} analyzed, {} failed)",
        c.apps_total, c.apps_analyzed, c.apps_failed
    );
    let _ = writeln!(
        s,
        "  policies: {} providing ({}), {} valid",
        c.policy_providing,
        fmt_pct(c.policy_providing_rate),
        c.policy_valid
    );
    let _ = writeln!(
        s,
        "  over-collection: {}/{} apps on basis {:?} ({})",
        c.apps_with_spo,
        c.basis_apps,
        c.spo_basis,
        fmt_pct(c.spo_app_rate)
    );
    let mut top: Vec<_> = c.items.iter().filter(|i| i.spo_by > 0).collect();
    top.sort_by(|a, b| b.spo_by.cmp(&a.spo_by).then(a.item.cmp(&b.item)));
    for i in top.iter().take(10) {
        let _ = writeln!(
            s,
            "  item {}: collected by {}, claimed by {}, over-collected by {}",
            i.item, i.collected_by, i.claimed_by, i.spo_by
        );
    }
    let _ = writeln!(s, "  templates: {}", r.templates.len());
    for t in &r.templates {
        let _ = writeln!(
            s,
            "    {} members, {} developers (founder {})",
            t.members.len(),
            t.developers.len(),
            t.founder
        );
    }
    let _ = writeln!(s, "  sdks: {}", r.sdks.len());
    for sdk in &r.sdks {
        let _ = writeln!(s, "    {} used by {} apps", sdk.name, sdk.usage);
    }
    for f in &r.failures {
        let _ = writeln!(s, "  failed: {}: {}", f.appid, f.error);
    }
    s
}

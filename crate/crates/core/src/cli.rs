//! Command-line front end. Exit codes: 0 success, 1 usage errors, 2
//! analysis failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::SpoError;
use crate::miner::{self, SdkCluster, TemplateCluster};
use crate::pipeline::{self, AnalyzeOptions, AppFailure, CorpusOptions, SCHEMA_VERSION};
use crate::policy::{self, PolicyOrigin, PolicyStatus};
use crate::spo::{AppReport, SpoBasis};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Parser)]
#[command(
    name = "spo",
    version,
    about = "Detects privacy over-collection in mini-app packages",
    max_term_width = 100
)]
struct Cli {
    /// Taxonomy JSON path; defaults to $SPO_TAXONOMY, then the embedded
    /// English taxonomy.
    #[arg(long, global = true)]
    taxonomy: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    /// Rate over apps with a valid policy.
    ValidPolicy,
    /// Rate over every analyzed app; apps without a valid policy claim
    /// nothing.
    All,
}

impl From<BasisArg> for SpoBasis {
    fn from(b: BasisArg) -> SpoBasis {
        match b {
            BasisArg::ValidPolicy => SpoBasis::ValidPolicy,
            BasisArg::All => SpoBasis::All,
        }
    }
}

#[derive(Debug, Parser)]
struct AnalyzeFlags {
    /// Follow http policy links found in page markup.
    #[arg(long)]
    fetch_remote_policies: bool,

    /// Minimum characters for a policy text to be analyzable.
    #[arg(long, default_value_t = policy::DEFAULT_MIN_POLICY_LEN)]
    min_policy_len: usize,
}

impl AnalyzeFlags {
    fn options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            fetch_remote_policies: self.fetch_remote_policies,
            min_policy_len: self.min_policy_len,
        }
    }
}

#[derive(Debug, Parser)]
struct MineFlags {
    /// Route-set similarity threshold for template clustering.
    #[arg(long, default_value_t = miner::DEFAULT_THETA1)]
    theta1: f64,

    /// Script-content similarity threshold for template clustering.
    #[arg(long, default_value_t = miner::DEFAULT_THETA2)]
    theta2: f64,

    /// Per-file similarity threshold for SDK clustering.
    #[arg(long, default_value_t = miner::DEFAULT_THETA_SDK)]
    theta_sdk: f64,

    /// Keep SDKs used by strictly more apps than this.
    #[arg(long, default_value_t = miner::DEFAULT_MIN_SDK_USAGE)]
    min_sdk_usage: usize,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Analyze one app package directory.
    Analyze {
        app_dir: PathBuf,
        #[command(flatten)]
        flags: AnalyzeFlags,
    },
    /// Analyze every app directory under a corpus directory.
    Corpus {
        corpus_dir: PathBuf,
        #[command(flatten)]
        flags: AnalyzeFlags,
        #[command(flatten)]
        mine: MineFlags,
        /// Denominator for the over-collection app rate.
        #[arg(long, value_enum, default_value_t = BasisArg::ValidPolicy)]
        spo_basis: BasisArg,
        /// Worker threads (default: one per core).
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Cluster templates and SDKs without flow or policy analysis.
    Mine {
        corpus_dir: PathBuf,
        #[command(flatten)]
        mine: MineFlags,
    },
    /// Extract and check one app's privacy policy; fails when no valid
    /// policy is found.
    Policy {
        app_dir: PathBuf,
        #[command(flatten)]
        flags: AnalyzeFlags,
    },
}

#[derive(Serialize)]
struct MineReport {
    schema_version: u32,
    apps_total: usize,
    templates: Vec<TemplateCluster>,
    sdks: Vec<SdkCluster>,
    failures: Vec<AppFailure>,
}

#[derive(Serialize)]
struct PolicyReport {
    appid: String,
    status: PolicyStatus,
    origin: Option<PolicyOrigin>,
    remote_policy_urls: Vec<String>,
    claims: BTreeMap<String, crate::spo::ClaimEvidence>,
    negated_claims: BTreeMap<String, Vec<String>>,
    warnings: Vec<String>,
}

/// Parses and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(SpoError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os())
}

fn load_taxonomy(path: &Option<PathBuf>) -> Result<Taxonomy, SpoError> {
    if let Some(p) = path {
        return Taxonomy::load(p);
    }
    if let Some(p) = std::env::var_os("SPO_TAXONOMY") {
        return Taxonomy::load(std::path::Path::new(&p));
    }
    Ok(Taxonomy::load_default())
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), SpoError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| SpoError::io(path, e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), SpoError> {
    let tax = load_taxonomy(&cli.taxonomy)?;
    match cli.cmd {
        Cmd::Analyze { app_dir, flags } => {
            let report = pipeline::analyze_app(&app_dir, &tax, &flags.options())?;
            let content = match cli.format {
                Format::Json => pipeline::app_to_json(&report),
                Format::Csv => pipeline::app_to_csv(&report),
                Format::Text => pipeline::app_to_text(&report),
            };
            emit(&cli.out, &content)
        }
        Cmd::Corpus {
            corpus_dir,
            flags,
            mine,
            spo_basis,
            parallelism,
        } => {
            let opts = CorpusOptions {
                analyze: flags.options(),
                basis: spo_basis.into(),
                theta1: mine.theta1,
                theta2: mine.theta2,
                theta_sdk: mine.theta_sdk,
                min_sdk_usage: mine.min_sdk_usage,
                parallelism,
            };
            let report = pipeline::analyze_corpus(&corpus_dir, &tax, &opts)?;
            let content = match cli.format {
                Format::Json => pipeline::corpus_to_json(&report),
                Format::Csv => pipeline::corpus_to_csv(&report),
                Format::Text => pipeline::corpus_to_text(&report),
            };
            emit(&cli.out, &content)
        }
        Cmd::Mine { corpus_dir, mine } => {
            if cli.format == Format::Csv {
                return Err(SpoError::Usage(
                    "csv output is only available for analyze and corpus".to_string(),
                ));
            }
            let report = run_mine(&corpus_dir, &mine)?;
            let content = match cli.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                    s.push('\n');
                    s
                }
                Format::Text => mine_to_text(&report),
                Format::Csv => unreachable!(),
            };
            emit(&cli.out, &content)
        }
        Cmd::Policy { app_dir, flags } => {
            if cli.format == Format::Csv {
                return Err(SpoError::Usage(
                    "csv output is only available for analyze and corpus".to_string(),
                ));
            }
            let pkg = crate::ingest::load_package(&app_dir)?;
            let opts = flags.options();
            let retriever: Box<dyn policy::PolicyRetriever> = if opts.fetch_remote_policies {
                Box::new(policy::HttpFetch::default())
            } else {
                Box::new(policy::NoFetch)
            };
            let pol = policy::analyze_policy(&pkg, &tax, retriever.as_ref(), opts.min_policy_len);
            let (claims, negated_claims) = AppReport::claim_evidence(&pol, &tax);
            let report = PolicyReport {
                appid: pkg.appid.clone(),
                status: pol.status,
                origin: pol.doc.map(|d| d.origin),
                remote_policy_urls: pol.remote_urls,
                claims,
                negated_claims,
                warnings: pol.warnings,
            };
            let content = match cli.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
                    s.push('\n');
                    s
                }
                Format::Text => policy_to_text(&report),
                Format::Csv => unreachable!(),
            };
            emit(&cli.out, &content)?;
            if report.status != PolicyStatus::Valid {
                return Err(SpoError::NoValidPolicy);
            }
            Ok(())
        }
    }
}

fn run_mine(corpus_dir: &std::path::Path, flags: &MineFlags) -> Result<MineReport, SpoError> {
    let entries = std::fs::read_dir(corpus_dir).map_err(|e| SpoError::io(corpus_dir, e))?;
    let mut dirs: Vec<(String, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| SpoError::io(corpus_dir, e))?;
        if entry.path().is_dir() {
            dirs.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    dirs.sort();
    let mut fps = Vec::new();
    let mut failures = Vec::new();
    for (name, path) in &dirs {
        match crate::ingest::load_package(path) {
            Ok(pkg) => fps.push(miner::fingerprint(&pkg)),
            Err(e) => failures.push(AppFailure {
                appid: name.clone(),
                error: e.to_string(),
            }),
        }
    }
    if fps.is_empty() {
        return Err(SpoError::Analysis(format!(
            "no loadable apps under {} ({} failed)",
            corpus_dir.display(),
            failures.len()
        )));
    }
    Ok(MineReport {
        schema_version: SCHEMA_VERSION,
        apps_total: fps.len(),
        templates: miner::detect_templates(&fps, flags.theta1, flags.theta2),
        sdks: miner::detect_sdks(&fps, flags.theta_sdk, flags.min_sdk_usage),
        failures,
    })
}

fn mine_to_text(r: &MineReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "mined {} apps", r.apps_total);
    let _ = writeln!(s, "  templates: {}", r.templates.len());
    for t in &r.templates {
        let _ = writeln!(
            s,
            "    {} members, {} developers (founder {}): {}",
            t.members.len(),
            t.developers.len(),
            t.founder,
            t.members.join(", ")
        );
    }
    let _ = writeln!(s, "  sdks: {}", r.sdks.len());
    for sdk in &r.sdks {
        let _ = writeln!(
            s,
            "    {} ({} files) used by {} apps",
            sdk.name,
            sdk.files.len(),
            sdk.usage
        );
    }
    for f in &r.failures {
        let _ = writeln!(s, "  failed: {}: {}", f.appid, f.error);
    }
    s
}

fn policy_to_text(r: &PolicyReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "app {}", r.appid);
    let _ = writeln!(s, "  policy: {:?}", r.status);
    if let Some(origin) = &r.origin {
        let _ = writeln!(s, "  origin: {origin:?}");
    }
    for url in &r.remote_policy_urls {
        let _ = writeln!(s, "  remote policy: {url}");
    }
    for (item, ev) in &r.claims {
        let kind = if ev.exact { "exact" } else { "broad" };
        let covers = ev.expands_to.iter().cloned().collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "  claims {item} ({kind}, covers {covers})");
    }
    for (item, sentences) in &r.negated_claims {
        let _ = writeln!(s, "  denies {item} ({} sentences)", sentences.len());
    }
    for w in &r.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    s
}

//! Corpus mining: finds template families (the same app skeleton published
//! by different developers) and shared SDKs (identical script bundles
//! embedded across many apps), then attributes over-collection to them.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::ingest::Package;
use crate::spo::AppReport;

pub const DEFAULT_THETA1: f64 = 1.0;
pub const DEFAULT_THETA2: f64 = 0.95;
pub const DEFAULT_THETA_SDK: f64 = 0.95;
pub const DEFAULT_MIN_SDK_USAGE: usize = 10;

const SHINGLE_K: usize = 5;

/// Per-file content signature: multiset of hashed token 5-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct FileSig {
    pub shingles: BTreeMap<u64, u32>,
    pub tokens: usize,
}

#[derive(Debug, Clone)]
pub struct AppFingerprint {
    pub appid: String,
    pub developer: Option<String>,
    pub routes: BTreeSet<String>,
    /// Script path -> signature.
    pub files: BTreeMap<String, FileSig>,
}

pub fn fingerprint(pkg: &Package) -> AppFingerprint {
    let files = pkg
        .files
        .iter()
        .map(|f| (f.path.clone(), file_sig(&f.src)))
        .collect();
    AppFingerprint {
        appid: pkg.appid.clone(),
        developer: pkg.meta.developer.clone(),
        routes: pkg
            .pages
            .iter()
            .filter(|p| !p.is_component)
            .map(|p| p.route.clone())
            .collect(),
        files,
    }
}

/// Builds a fingerprint without a package on disk (corpus-free testing).
pub fn fingerprint_raw(
    appid: &str,
    developer: Option<&str>,
    routes: &[&str],
    files: &[(&str, &str)],
) -> AppFingerprint {
    AppFingerprint {
        appid: appid.to_string(),
        developer: developer.map(str::to_string),
        routes: routes.iter().map(|s| s.to_string()).collect(),
        files: files
            .iter()
            .map(|(p, src)| (p.to_string(), file_sig(src)))
            .collect(),
    }
}

/// Splits source into fingerprint tokens: identifier-ish runs and single
/// punctuation chars. Total on any input, including scripts the real parser
/// rejects.
fn shingle_tokens(src: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in src.char_indices() {
        if c.is_alphanumeric() || c == '_' || c == '$' {
            if start.is_none() {
                start = Some(i);
            }
        } else {
            if let Some(s) = start.take() {
                out.push(&src[s..i]);
            }
            if !c.is_whitespace() {
                out.push(&src[i..i + c.len_utf8()]);
            }
        }
    }
    if let Some(s) = start {
        out.push(&src[s..]);
    }
    out
}

pub fn file_sig(src: &str) -> FileSig {
    let tokens = shingle_tokens(src);
    let mut shingles: BTreeMap<u64, u32> = BTreeMap::new();
    let mut add = |window: &[&str]| {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for (i, t) in window.iter().enumerate() {
            if i > 0 {
                h.write_u8(0x1f);
            }
            t.hash(&mut h);
        }
        *shingles.entry(h.finish()).or_default() += 1;
    };
    if tokens.len() < SHINGLE_K {
        add(&tokens);
    } else {
        for w in tokens.windows(SHINGLE_K) {
            add(w);
        }
    }
    FileSig {
        shingles,
        tokens: tokens.len(),
    }
}

/// Multiset Jaccard: sum of per-key min counts over sum of max counts.
/// Two empty multisets are identical (1.0).
pub fn multiset_jaccard(a: &BTreeMap<u64, u32>, b: &BTreeMap<u64, u32>) -> f64 {
    let mut min_sum: u64 = 0;
    let mut max_sum: u64 = 0;
    for key in a.keys().chain(b.keys()).collect::<BTreeSet<_>>() {
        let ca = a.get(key).copied().unwrap_or(0) as u64;
        let cb = b.get(key).copied().unwrap_or(0) as u64;
        min_sum += ca.min(cb);
        max_sum += ca.max(cb);
    }
    if max_sum == 0 {
        1.0
    } else {
        min_sum as f64 / max_sum as f64
    }
}

pub fn route_similarity(a: &AppFingerprint, b: &AppFingerprint) -> f64 {
    let inter = a.routes.intersection(&b.routes).count();
    let union = a.routes.union(&b.routes).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Size-weighted mean of per-file similarity over the union of script
/// paths. A file only one side has counts as similarity 0 at its own
/// weight, so a large extra module drags the score down proportionally.
pub fn content_similarity(a: &AppFingerprint, b: &AppFingerprint) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for path in a.files.keys().chain(b.files.keys()).collect::<BTreeSet<_>>() {
        match (a.files.get(path), b.files.get(path)) {
            (Some(fa), Some(fb)) => {
                let w = (fa.tokens + fb.tokens) as f64 / 2.0;
                num += multiset_jaccard(&fa.shingles, &fb.shingles) * w;
                den += w;
            }
            (Some(f), None) | (None, Some(f)) => {
                den += f.tokens as f64;
            }
            (None, None) => unreachable!(),
        }
    }
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TemplateCluster {
    /// First member; similarity is measured against it.
    pub founder: String,
    pub members: Vec<String>,
    /// Known developers among members.
    pub developers: BTreeSet<String>,
}

/// Clusters apps into template families. Apps are visited in appid order;
/// each app joins every existing cluster whose founder it matches on both
/// route similarity (>= theta1) and content similarity (>= theta2), or
/// founds a new cluster, so an app can sit in several clusters. Clusters
/// need at least two members from at least two known developers to count:
/// one developer re-publishing their own app is not a template family.
pub fn detect_templates(
    fps: &[AppFingerprint],
    theta1: f64,
    theta2: f64,
) -> Vec<TemplateCluster> {
    let mut order: Vec<usize> = (0..fps.len()).collect();
    order.sort_by(|&x, &y| fps[x].appid.cmp(&fps[y].appid));

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let mut joined = false;
        for c in clusters.iter_mut() {
            let founder = &fps[c[0]];
            if route_similarity(&fps[i], founder) >= theta1
                && content_similarity(&fps[i], founder) >= theta2
            {
                if c[0] != i {
                    c.push(i);
                }
                joined = true;
            }
        }
        if !joined {
            clusters.push(vec![i]);
        }
    }

    clusters
        .into_iter()
        .filter_map(|c| {
            if c.len() < 2 {
                return None;
            }
            let developers: BTreeSet<String> = c
                .iter()
                .filter_map(|&i| fps[i].developer.clone())
                .collect();
            if developers.len() < 2 {
                return None;
            }
            Some(TemplateCluster {
                founder: fps[c[0]].appid.clone(),
                members: c.iter().map(|&i| fps[i].appid.clone()).collect(),
                developers,
            })
        })
        .collect()
}

/// A group of same-named script files with near-identical content across
/// apps.
#[derive(Debug, Clone)]
pub struct FileCluster {
    pub basename: String,
    /// (appid, path) pairs.
    pub members: Vec<(String, String)>,
}

fn basename(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

fn dirname(path: &str) -> &str {
    match path.rfind('/') {
        Some(i) => &path[..i],
        None => "",
    }
}

/// Entry and page scripts are app-owned; only auxiliary modules can be
/// shared SDK code.
fn is_sdk_candidate(fp: &AppFingerprint, path: &str) -> bool {
    if !path.ends_with(".js") || path == "app.js" {
        return false;
    }
    !fp.routes
        .iter()
        .any(|r| path.strip_suffix(".js") == Some(r.as_str()))
}

/// Complete-linkage greedy clustering of same-basename scripts: a file
/// joins the first cluster it matches against every member.
pub fn sdk_file_clusters(fps: &[AppFingerprint], theta: f64) -> Vec<FileCluster> {
    let mut order: Vec<usize> = (0..fps.len()).collect();
    order.sort_by(|&x, &y| fps[x].appid.cmp(&fps[y].appid));

    struct Cl<'a> {
        basename: &'a str,
        members: Vec<(usize, &'a str)>,
    }
    let mut clusters: Vec<Cl> = Vec::new();
    for &i in &order {
        for (path, sig) in &fps[i].files {
            if !is_sdk_candidate(&fps[i], path) {
                continue;
            }
            let base = basename(path);
            let mut joined = false;
            for c in clusters.iter_mut() {
                if c.basename != base {
                    continue;
                }
                let all_close = c.members.iter().all(|&(m, mp)| {
                    multiset_jaccard(&sig.shingles, &fps[m].files[mp].shingles) >= theta
                });
                if all_close {
                    c.members.push((i, path));
                    joined = true;
                    break;
                }
            }
            if !joined {
                clusters.push(Cl {
                    basename: base,
                    members: vec![(i, path)],
                });
            }
        }
    }
    clusters
        .into_iter()
        .map(|c| FileCluster {
            basename: c.basename.to_string(),
            members: c
                .members
                .into_iter()
                .map(|(i, p)| (fps[i].appid.clone(), p.to_string()))
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SdkCluster {
    /// Directory path when the files ship as one directory, else the file's
    /// basename.
    pub name: String,
    pub files: BTreeSet<String>,
    pub apps: BTreeSet<String>,
    pub usage: usize,
    /// Per-app script paths belonging to this SDK (flow attribution).
    pub paths: BTreeMap<String, BTreeSet<String>>,
}

/// File clusters used by strictly more than `min_usage` distinct apps,
/// merged into directory-level SDKs when every member sits in the same
/// relative directory.
pub fn detect_sdks(fps: &[AppFingerprint], theta: f64, min_usage: usize) -> Vec<SdkCluster> {
    let clusters = sdk_file_clusters(fps, theta);

    let mut by_key: BTreeMap<String, SdkCluster> = BTreeMap::new();
    for c in clusters {
        let apps: BTreeSet<&str> = c.members.iter().map(|(a, _)| a.as_str()).collect();
        if apps.len() <= min_usage {
            continue;
        }
        let dirs: BTreeSet<&str> = c.members.iter().map(|(_, p)| dirname(p)).collect();
        let key = if dirs.len() == 1 {
            let d = dirs.into_iter().next().unwrap();
            if d.is_empty() {
                format!("file:{}", c.basename)
            } else {
                format!("dir:{d}")
            }
        } else {
            format!("file:{}", c.basename)
        };
        let entry = by_key.entry(key.clone()).or_insert_with(|| SdkCluster {
            name: key
                .strip_prefix("dir:")
                .or_else(|| key.strip_prefix("file:"))
                .unwrap()
                .to_string(),
            files: BTreeSet::new(),
            apps: BTreeSet::new(),
            usage: 0,
            paths: BTreeMap::new(),
        });
        entry.files.insert(c.basename.clone());
        for (app, path) in &c.members {
            entry.apps.insert(app.clone());
            entry.paths.entry(app.clone()).or_default().insert(path.clone());
        }
    }

    let mut out: Vec<SdkCluster> = by_key.into_values().collect();
    for sdk in &mut out {
        sdk.usage = sdk.apps.len();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct TemplateStats {
    pub template_apps: usize,
    pub non_template_apps: usize,
    pub template_mean_spo: Option<f64>,
    pub non_template_mean_spo: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SdkAttribution {
    pub sdk: String,
    pub apps: BTreeSet<String>,
    pub flows: usize,
    pub items: BTreeSet<String>,
}

/// Splits per-app over-collection along the mined structure: template
/// members vs the rest, and flows whose source sits inside an SDK's files
/// (input-field sources are page-owned and never SDK-attributed).
pub fn attribute_spo(
    reports: &[&AppReport],
    templates: &[TemplateCluster],
    sdks: &[SdkCluster],
) -> (TemplateStats, Vec<SdkAttribution>) {
    let template_members: BTreeSet<&str> = templates
        .iter()
        .flat_map(|t| t.members.iter().map(String::as_str))
        .collect();

    let (mut t_apps, mut t_sum) = (0usize, 0usize);
    let (mut n_apps, mut n_sum) = (0usize, 0usize);
    for r in reports {
        if template_members.contains(r.appid.as_str()) {
            t_apps += 1;
            t_sum += r.s_spo.len();
        } else {
            n_apps += 1;
            n_sum += r.s_spo.len();
        }
    }
    let mean = |sum: usize, n: usize| {
        if n == 0 {
            None
        } else {
            Some(sum as f64 / n as f64)
        }
    };
    let stats = TemplateStats {
        template_apps: t_apps,
        non_template_apps: n_apps,
        template_mean_spo: mean(t_sum, t_apps),
        non_template_mean_spo: mean(n_sum, n_apps),
    };

    let mut attributions = Vec::new();
    for sdk in sdks {
        let mut apps = BTreeSet::new();
        let mut flows = 0usize;
        let mut items = BTreeSet::new();
        for r in reports {
            let Some(paths) = sdk.paths.get(&r.appid) else { continue };
            for f in &r.flows {
                if f.source.api.is_some() && paths.contains(&f.source.file) {
                    apps.insert(r.appid.clone());
                    flows += 1;
                    items.extend(f.items.iter().cloned());
                }
            }
        }
        if flows > 0 {
            attributions.push(SdkAttribution {
                sdk: sdk.name.clone(),
                apps,
                flows,
                items,
            });
        }
    }
    (stats, attributions)
}

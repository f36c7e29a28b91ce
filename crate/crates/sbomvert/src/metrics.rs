//! Agreement and duplication metrics over scan results.
//!
//! These quantify how far two vulnerability reports diverge: set agreement
//! ([`jaccard`]), detection quality against a ground truth
//! ([`compare_to_truth`]), how many binary packages repeat the same finding
//! set ([`duplication_stats`]), and where duplicate findings come from
//! ([`cve_breakdown`]).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::scanner::VulnReport;

/// Jaccard similarity of two sets: `|A ∩ B| / |A ∪ B|`.
///
/// Two empty sets are identical, so their similarity is 1.0.
///
/// # Examples
///
/// ```
/// use std::collections::BTreeSet;
///
/// let a: BTreeSet<String> = ["CVE-2024-1", "CVE-2024-2"].iter().map(|s| s.to_string()).collect();
/// let b: BTreeSet<String> = ["CVE-2024-2", "CVE-2024-3"].iter().map(|s| s.to_string()).collect();
/// assert!((sbomvert::metrics::jaccard(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
/// assert_eq!(sbomvert::metrics::jaccard(&BTreeSet::new(), &BTreeSet::new()), 1.0);
/// ```
#[must_use]
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    let intersection = a.intersection(b).count();
    intersection as f64 / union as f64
}

/// Detection quality counts and the rates derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Builds [`Metrics`] from raw counts. Rates with a zero denominator are
/// reported as 0.0.
#[must_use]
pub fn metrics_from_counts(tp: usize, fp: usize, fn_count: usize) -> Metrics {
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = rate(tp, tp + fp);
    let recall = rate(tp, tp + fn_count);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        tp,
        fp,
        fn_count,
        precision,
        recall,
        f1,
    }
}

/// Compares a predicted CVE set against the ground truth.
#[must_use]
pub fn compare_to_truth(predicted: &BTreeSet<String>, truth: &BTreeSet<String>) -> Metrics {
    let tp = predicted.intersection(truth).count();
    let fp = predicted.difference(truth).count();
    let fn_count = truth.difference(predicted).count();
    metrics_from_counts(tp, fp, fn_count)
}

/// Renders metrics as a two-line CSV with rates at two decimals.
#[must_use]
pub fn to_csv(m: &Metrics) -> String {
    format!(
        "tp,fp,fn,precision,recall,f1\n{},{},{},{:.2},{:.2},{:.2}\n",
        m.tp, m.fp, m.fn_count, m.precision, m.recall, m.f1
    )
}

/// How many binary packages share identical finding sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicationStats {
    /// Mean number of packages per distinct CVE-set group.
    pub mean: f64,
    /// Standard error of that mean (sample standard deviation over √n).
    pub stderr: f64,
    /// Number of distinct CVE-set groups.
    pub group_count: usize,
    /// Number of packages with at least one finding.
    pub package_count: usize,
}

/// Groups the report's vulnerable packages by their exact CVE set and
/// summarizes the group sizes.
///
/// Meaningful on per-binary reports: when one source package builds many
/// binaries, every binary repeats the same CVE set, and the mean group size
/// measures that inflation. An empty report gives zeros.
#[must_use]
pub fn duplication_stats(report: &VulnReport) -> DuplicationStats {
    let mut by_package: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in &report.findings {
        let key = format!(
            "{}\u{0}{}\u{0}{}\u{0}{}\u{0}{}",
            f.package.name,
            f.package.epoch,
            f.package.version,
            f.package.arch.as_deref().unwrap_or(""),
            f.package.source_name
        );
        by_package.entry(key).or_default().insert(f.cve_id.clone());
    }
    let mut groups: BTreeMap<&BTreeSet<String>, usize> = BTreeMap::new();
    for cves in by_package.values() {
        *groups.entry(cves).or_insert(0) += 1;
    }
    let sizes: Vec<f64> = groups.values().map(|&n| n as f64).collect();
    let n = sizes.len();
    if n == 0 {
        return DuplicationStats {
            mean: 0.0,
            stderr: 0.0,
            group_count: 0,
            package_count: 0,
        };
    }
    let mean = sizes.iter().sum::<f64>() / n as f64;
    let stderr = if n < 2 {
        0.0
    } else {
        let variance = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (variance / n as f64).sqrt()
    };
    DuplicationStats {
        mean,
        stderr,
        group_count: n,
        package_count: by_package.len(),
    }
}

/// Where findings come from, as percentages of all findings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveBreakdown {
    /// Findings whose CVE appears under exactly one source package and
    /// exactly once there.
    pub source_only: f64,
    /// Repeat findings of a CVE within one source package: the inflation
    /// from one source building many binaries.
    pub duplicated_same_source: f64,
    /// Findings whose CVE appears under several source packages.
    pub shared_across_sources: f64,
    pub total_findings: usize,
}

/// Classifies every finding of a per-binary report by duplication origin.
/// The three percentages sum to 100 when the report is nonempty.
#[must_use]
pub fn cve_breakdown(report: &VulnReport) -> CveBreakdown {
    let total = report.findings.len();
    if total == 0 {
        return CveBreakdown {
            source_only: 0.0,
            duplicated_same_source: 0.0,
            shared_across_sources: 0.0,
            total_findings: 0,
        };
    }
    let mut sources_of_cve: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for f in &report.findings {
        sources_of_cve
            .entry(&f.cve_id)
            .or_default()
            .insert(&f.package.source_name);
    }
    let mut shared = 0usize;
    let mut source_only = 0usize;
    let mut duplicated = 0usize;
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    for f in &report.findings {
        if sources_of_cve[f.cve_id.as_str()].len() > 1 {
            shared += 1;
        } else if seen.insert((f.cve_id.as_str(), f.package.source_name.as_str())) {
            source_only += 1;
        } else {
            duplicated += 1;
        }
    }
    let pct = |n: usize| 100.0 * n as f64 / total as f64;
    CveBreakdown {
        source_only: pct(source_only),
        duplicated_same_source: pct(duplicated),
        shared_across_sources: pct(shared),
        total_findings: total,
    }
}

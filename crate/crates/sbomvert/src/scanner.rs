//! Vulnerability scanning of canonical SBOMs against a tracker database.
//!
//! The scan queries the tracker by source package, because that is how
//! distribution security teams index advisories; scanners that look up
//! binary package names miss or double-count. Reports can list one finding
//! per affected binary package (what most scanners print, and what inflates
//! counts when one source builds many binaries) or one per source package.
//! [`filter_kernel`] removes kernel findings, which dominate container scan
//! noise despite container images not running their own kernel.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dialect::CanonicalSbom;
use crate::osdb::DistroInfo;
use crate::purl::strip_epoch;
use crate::tracker::{query_cves_with, CveDatabase, QueryOptions};

/// How a finding's package was matched against the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchedVia {
    /// Queried by the package's source identity.
    Source,
    /// The document named no source; the binary identity stood in for it.
    Binary,
}

/// The package a finding is attached to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PackageRef {
    pub name: String,
    pub epoch: u32,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arch: Option<String>,
    pub source_name: String,
    /// Source version used for the query, epoch-qualified.
    pub source_version: String,
}

/// One package/CVE pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub package: PackageRef,
    pub cve_id: String,
    pub matched_via: MatchedVia,
}

/// Options echoed into the report for reproducibility.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub per_source: bool,
    pub exclude_kernel: bool,
    pub cutoff_year: u32,
    pub include_unimportant: bool,
}

/// A scan result: deterministic, self-describing, serializable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VulnReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distro: Option<DistroInfo>,
    pub options: ReportOptions,
    pub findings: Vec<Finding>,
    pub warnings: Vec<String>,
}

impl VulnReport {
    /// The distinct CVE ids across all findings.
    #[must_use]
    pub fn distinct_cves(&self) -> BTreeSet<String> {
        self.findings.iter().map(|f| f.cve_id.clone()).collect()
    }
}

/// Scan configuration.
#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    /// Report one finding per source package instead of one per binary.
    pub per_source: bool,
    pub query: QueryOptions,
}

/// Scans a canonical SBOM against a tracker database.
///
/// Nothing here is fatal: packages whose release, version, or ecosystem
/// cannot be matched are skipped with a warning in the report. The set of
/// distinct CVEs is identical between per-binary and per-source modes; only
/// the finding count differs.
///
/// # Examples
///
/// ```
/// use sbomvert::dialect::{normalize, Dialect};
/// use sbomvert::scanner::{scan, ScanOptions};
///
/// let doc = sbomvert::spdx::parse_spdx(
///     r#"{"spdxVersion": "SPDX-2.3", "SPDXID": "SPDXRef-DOCUMENT", "name": "img",
///         "packages": [{"SPDXID": "SPDXRef-p", "name": "passwd",
///             "sourceInfo": "built package from: shadow 1:4.13+dfsg1-1",
///             "externalRefs": [{"referenceCategory": "PACKAGE-MANAGER",
///                 "referenceType": "purl",
///                 "referenceLocator":
///                 "pkg:deb/debian/passwd@1:4.13%2Bdfsg1-1?arch=amd64&distro=bookworm"}]}]}"#,
/// )
/// .unwrap();
/// let sbom = normalize(&doc, Dialect::Reference).unwrap();
/// let db = sbomvert::tracker::load_debian_tracker(
///     r#"{"shadow": {"CVE-2023-29383": {"releases": {
///         "bookworm": {"status": "resolved", "fixed_version": "1:4.14-1"}}}}}"#,
/// )
/// .unwrap();
/// let report = scan(&sbom, &db, &ScanOptions::default());
/// assert_eq!(report.distinct_cves().len(), 1);
/// ```
#[must_use]
pub fn scan(sbom: &CanonicalSbom, db: &CveDatabase, opts: &ScanOptions) -> VulnReport {
    let mut warnings: Vec<String> = Vec::new();
    let mut findings: BTreeSet<Finding> = BTreeSet::new();

    let release = match &sbom.distro {
        Some(d) if d.os_name == db.os => Some(d.tracker_release()),
        Some(d) => {
            warnings.push(format!(
                "SBOM is for {} but the tracker covers {}; no advisories can match",
                d.os_name, db.os
            ));
            None
        }
        None => {
            warnings.push(
                "SBOM names no distribution release; advisories are release-scoped, so nothing can match"
                    .to_string(),
            );
            None
        }
    };

    if let Some(release) = release {
        if !db.releases().contains(release.as_str()) {
            warnings.push(format!(
                "tracker has no entries for release {release:?}; the snapshot may not cover this distribution"
            ));
        }
        for pkg in &sbom.packages {
            if pkg.is_source_synthetic {
                continue;
            }
            let matched_via = if pkg.source_name == pkg.name && pkg.source_version.is_none() {
                MatchedVia::Binary
            } else {
                MatchedVia::Source
            };
            if pkg.source_name != pkg.name && pkg.source_version.is_none() {
                warnings.push(format!(
                    "{}: source version unknown; using binary version {} for source {} in the query",
                    pkg.name,
                    pkg.full_version(),
                    pkg.source_name
                ));
            }
            let source_version = pkg.source_full_version();
            let cves = match query_cves_with(db, &release, &pkg.source_name, &source_version, &opts.query) {
                Ok(cves) => cves,
                Err(e) => {
                    warnings.push(format!("{}: {e}; package skipped", pkg.name));
                    continue;
                }
            };
            for cve_id in cves {
                let package = if opts.per_source {
                    let (epoch, version) = strip_epoch(&source_version);
                    PackageRef {
                        name: pkg.source_name.clone(),
                        epoch: epoch.unwrap_or(0),
                        version: version.to_string(),
                        arch: None,
                        source_name: pkg.source_name.clone(),
                        source_version: source_version.clone(),
                    }
                } else {
                    PackageRef {
                        name: pkg.name.clone(),
                        epoch: pkg.epoch,
                        version: pkg.version.clone(),
                        arch: pkg.arch.clone(),
                        source_name: pkg.source_name.clone(),
                        source_version: source_version.clone(),
                    }
                };
                findings.insert(Finding {
                    package,
                    cve_id,
                    matched_via,
                });
            }
        }
    }

    VulnReport {
        distro: sbom.distro.clone(),
        options: ReportOptions {
            per_source: opts.per_source,
            exclude_kernel: false,
            cutoff_year: opts.query.cutoff_year,
            include_unimportant: opts.query.include_unimportant,
        },
        findings: findings.into_iter().collect(),
        warnings,
    }
}

/// Which source packages count as kernel packages.
#[derive(Debug, Clone)]
pub struct KernelFilter {
    /// Exact source names.
    pub exact: BTreeSet<String>,
    /// Source name prefixes.
    pub prefixes: Vec<String>,
}

impl Default for KernelFilter {
    /// Kernel source packages of Debian and Alpine.
    fn default() -> Self {
        KernelFilter {
            exact: ["linux", "linux-lts", "linux-edge", "linux-rpi", "linux-virt"]
                .into_iter()
                .map(str::to_string)
                .collect(),
            prefixes: vec!["linux-signed-".to_string()],
        }
    }
}

impl KernelFilter {
    #[must_use]
    pub fn matches(&self, source_name: &str) -> bool {
        self.exact.contains(source_name)
            || self.prefixes.iter().any(|p| source_name.starts_with(p))
    }
}

/// Removes findings whose source package is a kernel, with the default
/// kernel list. Containers share the host kernel, so kernel advisories in
/// an image scan are noise. Idempotent.
#[must_use]
pub fn filter_kernel(report: &VulnReport) -> VulnReport {
    filter_kernel_with(report, &KernelFilter::default())
}

/// Removes kernel findings using a caller-supplied kernel list.
#[must_use]
pub fn filter_kernel_with(report: &VulnReport, filter: &KernelFilter) -> VulnReport {
    let mut out = report.clone();
    out.options.exclude_kernel = true;
    out.findings
        .retain(|f| !filter.matches(&f.package.source_name));
    out
}

/// Renders a report as an aligned text table, one row per finding.
#[must_use]
pub fn render_table(report: &VulnReport) -> String {
    let header = ["PACKAGE", "VERSION", "SOURCE", "CVE"];
    let rows: Vec<[String; 4]> = report
        .findings
        .iter()
        .map(|f| {
            let full = if f.package.epoch > 0 {
                format!("{}:{}", f.package.epoch, f.package.version)
            } else {
                f.package.version.clone()
            };
            [
                f.package.name.clone(),
                full,
                f.package.source_name.clone(),
                f.cve_id.clone(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut write_row = |cells: [&str; 4]| {
        let line = cells
            .iter()
            .zip(widths)
            .map(|(cell, w)| format!("{cell:w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
    };
    write_row(header);
    for row in &rows {
        write_row([&row[0], &row[1], &row[2], &row[3]]);
    }
    out
}

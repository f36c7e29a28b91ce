//! Security tracker ingestion and per-package CVE queries.
//!
//! Debian's security tracker publishes a JSON export keyed by source
//! package, then CVE id, then release codename, with a status, an optional
//! fixed version, and an urgency. Alpine's secdb is keyed by origin package
//! with `secfixes` mapping fixed versions to CVE lists. Both load into one
//! [`CveDatabase`]; [`query_cves`] answers "which CVEs apply to source
//! package P at version V in release R", comparing versions with the
//! ecosystem's own ordering rules.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::osdb::OsName;
use crate::verscmp::{compare_alpine, compare_debian, VersionError};

/// Errors from loading or querying tracker data.
#[derive(Debug, Error)]
pub enum TrackerError {
    /// The input is not in the tracker's documented structure.
    #[error("malformed tracker data: {0}")]
    Malformed(String),
    /// A version string in the tracker or query could not be parsed.
    #[error(transparent)]
    Version(#[from] VersionError),
}

fn malformed(msg: impl Into<String>) -> TrackerError {
    TrackerError::Malformed(msg.into())
}

/// Status of one CVE for one source package in one release.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CveStatus {
    /// Vulnerable; no fix available in this release.
    Open,
    /// Fixed in [`CveEntry::fixed_version`].
    Resolved,
    /// The release was never affected.
    NotAffected,
    /// Affected, but the maintainers consider the issue negligible.
    Unimportant,
}

/// One advisory entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CveEntry {
    pub id: String,
    pub status: CveStatus,
    /// First fixed version, when the status is resolved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub urgency: Option<String>,
}

/// An in-memory security tracker: advisory entries keyed by release and
/// source package.
#[derive(Debug, Clone, PartialEq)]
pub struct CveDatabase {
    pub os: OsName,
    entries: BTreeMap<(String, String), Vec<CveEntry>>,
}

impl CveDatabase {
    /// Total number of advisory entries.
    #[must_use]
    pub fn entry_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Entries for one source package in one release.
    #[must_use]
    pub fn entries_for(&self, release: &str, source_name: &str) -> &[CveEntry] {
        self.entries
            .get(&(release.to_string(), source_name.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All releases the database has entries for.
    #[must_use]
    pub fn releases(&self) -> BTreeSet<&str> {
        self.entries.keys().map(|(r, _)| r.as_str()).collect()
    }

    fn push(&mut self, release: &str, source: &str, entry: CveEntry) {
        self.entries
            .entry((release.to_string(), source.to_string()))
            .or_default()
            .push(entry);
    }
}

/// The year embedded in a CVE id (`"CVE-2023-29383"` gives 2023).
#[must_use]
pub fn cve_year(id: &str) -> Option<u32> {
    let rest = id.strip_prefix("CVE-")?;
    let (year, _) = rest.split_once('-')?;
    if year.len() != 4 {
        return None;
    }
    year.parse().ok()
}

/// Loads the Debian security tracker JSON export.
///
/// The export maps source package, to CVE id, to a `releases` object whose
/// values carry `status` (`open`, `resolved`, `undetermined`), an optional
/// `fixed_version`, and `urgency`. Semantics mapping: `fixed_version: "0"`
/// means the release was never affected; urgency `unimportant` marks
/// negligible issues; `undetermined` is treated as open. Non-CVE ids
/// (`TEMP-…`) are skipped.
pub fn load_debian_tracker(json: &str) -> Result<CveDatabase, TrackerError> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| malformed(e.to_string()))?;
    let top = value
        .as_object()
        .ok_or_else(|| malformed("top level is not an object"))?;

    let mut db = CveDatabase {
        os: OsName::Debian,
        entries: BTreeMap::new(),
    };
    for (source, cves) in top {
        let cves = cves
            .as_object()
            .ok_or_else(|| malformed(format!("{source}: entry is not an object")))?;
        for (id, body) in cves {
            if cve_year(id).is_none() {
                // TEMP-0000000-XXXXXX and similar placeholders.
                continue;
            }
            let releases = match body.get("releases").and_then(|r| r.as_object()) {
                Some(r) => r,
                None => continue,
            };
            for (release, info) in releases {
                let status = info
                    .get("status")
                    .and_then(|s| s.as_str())
                    .ok_or_else(|| {
                        malformed(format!("{source}/{id}/{release}: missing status"))
                    })?;
                let fixed_version = info
                    .get("fixed_version")
                    .and_then(|v| v.as_str())
                    .map(str::to_string);
                let urgency = info
                    .get("urgency")
                    .and_then(|u| u.as_str())
                    .map(str::to_string);
                let status = if urgency.as_deref() == Some("unimportant") {
                    CveStatus::Unimportant
                } else {
                    match status {
                        "resolved" => {
                            if fixed_version.as_deref() == Some("0") {
                                CveStatus::NotAffected
                            } else {
                                CveStatus::Resolved
                            }
                        }
                        "open" | "undetermined" => CveStatus::Open,
                        other => {
                            return Err(malformed(format!(
                                "{source}/{id}/{release}: unknown status {other:?}"
                            )))
                        }
                    }
                };
                db.push(
                    release,
                    source,
                    CveEntry {
                        id: id.clone(),
                        status,
                        fixed_version,
                        urgency,
                    },
                );
            }
        }
    }
    Ok(db)
}

/// Loads an Alpine secdb JSON file (one branch per file).
///
/// The release comes from `distroversion` (`"v3.20"`) or `branch`
/// (`"3.20-main"`). Each package's `secfixes` maps a fixed version to the
/// CVE ids it fixes; the pseudo-version `"0"` lists CVEs with no fix, which
/// load as open. Ids that are not CVEs (`XSA-…`) are skipped.
pub fn load_alpine_secdb(json: &str) -> Result<CveDatabase, TrackerError> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| malformed(e.to_string()))?;
    let top = value
        .as_object()
        .ok_or_else(|| malformed("top level is not an object"))?;

    let release = top
        .get("distroversion")
        .and_then(|v| v.as_str())
        .map(|v| v.trim_start_matches('v').to_string())
        .or_else(|| {
            top.get("branch")
                .and_then(|b| b.as_str())
                .map(|b| b.split('-').next().unwrap_or(b).to_string())
        })
        .ok_or_else(|| malformed("neither distroversion nor branch names a release"))?;

    let packages = top
        .get("packages")
        .and_then(|p| p.as_array())
        .ok_or_else(|| malformed("missing packages array"))?;

    let mut db = CveDatabase {
        os: OsName::Alpine,
        entries: BTreeMap::new(),
    };
    for (i, wrapper) in packages.iter().enumerate() {
        let pkg = wrapper
            .get("pkg")
            .and_then(|p| p.as_object())
            .ok_or_else(|| malformed(format!("packages[{i}]: missing pkg object")))?;
        let name = pkg
            .get("name")
            .and_then(|n| n.as_str())
            .ok_or_else(|| malformed(format!("packages[{i}]: missing name")))?;
        let secfixes = match pkg.get("secfixes").and_then(|s| s.as_object()) {
            Some(s) => s,
            None => continue,
        };
        for (fixed_version, ids) in secfixes {
            let ids = ids
                .as_array()
                .ok_or_else(|| malformed(format!("{name}/{fixed_version}: not a list")))?;
            for id in ids {
                let Some(id) = id.as_str() else { continue };
                // Entries sometimes read "CVE-2024-1234 (GHSA-…)".
                let id = id.split_whitespace().next().unwrap_or(id);
                if cve_year(id).is_none() {
                    continue;
                }
                let entry = if fixed_version == "0" {
                    CveEntry {
                        id: id.to_string(),
                        status: CveStatus::Open,
                        fixed_version: None,
                        urgency: None,
                    }
                } else {
                    CveEntry {
                        id: id.to_string(),
                        status: CveStatus::Resolved,
                        fixed_version: Some(fixed_version.clone()),
                        urgency: None,
                    }
                };
                db.push(&release, name, entry);
            }
        }
    }
    Ok(db)
}

/// Query knobs. The defaults match what a production scanner reports.
#[derive(Debug, Clone, Serialize)]
pub struct QueryOptions {
    /// CVE ids from years after this are ignored, pinning results to a
    /// fixed advisory horizon.
    pub cutoff_year: u32,
    /// Include entries the maintainers marked negligible.
    pub include_unimportant: bool,
    /// Include entries for releases that were never affected.
    pub include_not_affected: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            cutoff_year: 2024,
            include_unimportant: false,
            include_not_affected: false,
        }
    }
}

/// CVEs affecting `source_name` at `source_version` in `release`, with
/// default options. See [`query_cves_with`].
pub fn query_cves(
    db: &CveDatabase,
    release: &str,
    source_name: &str,
    source_version: &str,
) -> Result<BTreeSet<String>, TrackerError> {
    query_cves_with(db, release, source_name, source_version, &QueryOptions::default())
}

/// CVEs affecting a source package version in a release.
///
/// An entry applies when it is open, or resolved with a fixed version
/// greater than `source_version` under the ecosystem's comparison rules.
/// Raising `source_version` never adds CVEs. Version strings that do not
/// parse are reported as errors, never silently treated as vulnerable or
/// safe.
///
/// # Examples
///
/// ```
/// let db = sbomvert::tracker::load_debian_tracker(
///     r#"{"shadow": {"CVE-2023-29383": {"releases": {
///         "bookworm": {"status": "resolved", "fixed_version": "1:4.13+dfsg1-1"},
///         "bullseye": {"status": "open"}}}}}"#,
/// )
/// .unwrap();
/// let bookworm =
///     sbomvert::tracker::query_cves(&db, "bookworm", "shadow", "1:4.13+dfsg1-1").unwrap();
/// assert!(bookworm.is_empty());
/// let bullseye =
///     sbomvert::tracker::query_cves(&db, "bullseye", "shadow", "1:4.8.1-1").unwrap();
/// assert!(bullseye.contains("CVE-2023-29383"));
/// ```
pub fn query_cves_with(
    db: &CveDatabase,
    release: &str,
    source_name: &str,
    source_version: &str,
    opts: &QueryOptions,
) -> Result<BTreeSet<String>, TrackerError> {
    let mut out = BTreeSet::new();
    for entry in db.entries_for(release, source_name) {
        if cve_year(&entry.id).is_none_or(|y| y > opts.cutoff_year) {
            continue;
        }
        let applies = match entry.status {
            CveStatus::Open => true,
            CveStatus::Resolved => match &entry.fixed_version {
                Some(fixed) => version_less(db.os, source_version, fixed)?,
                // Resolved with no stated version: cannot place the fix.
                None => false,
            },
            CveStatus::NotAffected => opts.include_not_affected,
            CveStatus::Unimportant => {
                opts.include_unimportant
                    && match &entry.fixed_version {
                        Some(fixed) if fixed != "0" => {
                            version_less(db.os, source_version, fixed)?
                        }
                        _ => true,
                    }
            }
        };
        if applies {
            out.insert(entry.id.clone());
        }
    }
    Ok(out)
}

fn version_less(os: OsName, a: &str, b: &str) -> Result<bool, TrackerError> {
    let ord = match os {
        OsName::Debian => compare_debian(a, b)?,
        OsName::Alpine => compare_alpine(a, b)?,
    };
    Ok(ord == std::cmp::Ordering::Less)
}

//! SBOM dialect detection, normalization, and emission.
//!
//! Every SBOM producer writes SPDX, but each encodes package identity
//! differently: epochs live in the version string, in an `epoch` qualifier,
//! or nowhere; the source package hides in `upstream`, in `sourceInfo`, or
//! is restated incorrectly; the distribution is a codename, a `debian-12`
//! string, or a triplet of `os_*` qualifiers. This module names those shapes
//! ([`Dialect`]), recognizes them ([`detect_dialect`]), maps any of them
//! onto one canonical package model ([`normalize`]), and renders the
//! canonical model back into any shape ([`emit`]).
//!
//! Emission is a superset: every target carries `versionInfo`, `sourceInfo`,
//! and an OS-marker package in addition to its dialect-shaped pURLs, so a
//! round trip through any dialect preserves identity. What a dialect's own
//! consumers would still lose (Microsoft-style consumers never read
//! `sourceInfo`) is reported as translation warnings rather than silently
//! dropped.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::osdb::{os_marker_package, sanitize_spdx_id, tool_creator, DistroInfo, OsName};
use crate::purl::{
    parse_purl, purl_to_canonical, serialize_purl, serialize_purl_with, split_raw, strip_epoch,
    upstream_is_self_referential, IssueCategory, PackageUrl, PurlError, PurlStyle,
    SpdxPackageExtras,
};
use crate::spdx::{
    find_purl, is_os_marker, parse_source_info, CreationInfo, ExternalRef, SpdxDocument,
    SpdxPackage, SpdxRelationship, FIXED_CREATED, PURPOSE_INSTALL,
};
use thiserror::Error;

/// Errors from normalization.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DialectError {
    /// The document has packages, but none yields a usable identity.
    #[error("no package in the document yields a usable identity")]
    NormalizationFailed,
}

/// The SBOM dialects this crate recognizes.
///
/// Named for the producing tool family; `Docker` covers Docker Scout,
/// `Anchore` covers Syft and Grype, `Amazon` covers Inspector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Amazon,
    Anchore,
    Docker,
    Google,
    Microsoft,
    Reference,
    Trivy,
    Unknown,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Amazon => "amazon",
            Dialect::Anchore => "anchore",
            Dialect::Docker => "docker",
            Dialect::Google => "google",
            Dialect::Microsoft => "microsoft",
            Dialect::Reference => "reference",
            Dialect::Trivy => "trivy",
            Dialect::Unknown => "unknown",
        })
    }
}

impl FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "amazon" | "inspector" => Ok(Dialect::Amazon),
            "anchore" | "syft" | "grype" => Ok(Dialect::Anchore),
            "docker" | "scout" => Ok(Dialect::Docker),
            "google" => Ok(Dialect::Google),
            "microsoft" | "sbom-tool" => Ok(Dialect::Microsoft),
            "reference" => Ok(Dialect::Reference),
            "trivy" => Ok(Dialect::Trivy),
            "unknown" => Ok(Dialect::Unknown),
            other => Err(format!("unknown dialect {other:?}")),
        }
    }
}

/// Dialects [`emit`] can target.
pub const SUPPORTED_TARGETS: [Dialect; 7] = [
    Dialect::Amazon,
    Dialect::Anchore,
    Dialect::Docker,
    Dialect::Google,
    Dialect::Microsoft,
    Dialect::Reference,
    Dialect::Trivy,
];

/// One package in dialect-independent form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalPackage {
    pub name: String,
    /// Debian epoch; apk packages always carry 0.
    pub epoch: u32,
    /// Version without the epoch prefix.
    pub version: String,
    pub arch: Option<String>,
    /// Source package name; equals `name` when nothing says otherwise.
    pub source_name: String,
    /// Source package version, epoch-qualified when known; `None` means the
    /// source is assumed to share the binary version.
    pub source_version: Option<String>,
    /// Entry fabricated by a producer to represent the source package of
    /// other entries; dropped on emission.
    pub is_source_synthetic: bool,
    /// Ecosystem, when the pURL type or namespace names one.
    pub os: Option<OsName>,
    pub distro: Option<DistroInfo>,
    /// Distro qualifier value that did not map to a known release,
    /// preserved verbatim.
    pub distro_raw: Option<String>,
}

impl CanonicalPackage {
    /// Version with the epoch prefix when nonzero: `"2:1.5.8-1"`.
    #[must_use]
    pub fn full_version(&self) -> String {
        if self.epoch > 0 {
            format!("{}:{}", self.epoch, self.version)
        } else {
            self.version.clone()
        }
    }

    /// The source package version, falling back to the binary version.
    #[must_use]
    pub fn source_full_version(&self) -> String {
        self.source_version
            .clone()
            .unwrap_or_else(|| self.full_version())
    }

    /// The identity key scans and comparisons group by.
    #[must_use]
    pub fn identity(&self) -> (String, String, u32, String, String) {
        (
            self.source_name.clone(),
            self.name.clone(),
            self.epoch,
            self.version.clone(),
            self.arch.clone().unwrap_or_default(),
        )
    }
}

/// A dialect-independent SBOM.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSbom {
    pub distro: Option<DistroInfo>,
    pub packages: Vec<CanonicalPackage>,
    /// Dialect the document was normalized from.
    pub origin: Dialect,
    /// Everything noteworthy that happened during normalization.
    pub warnings: Vec<TranslationWarning>,
}

/// One thing a translation changed, repaired, or could not preserve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationWarning {
    /// Stable machine-readable code, e.g. `"synthetic-source-dropped"`.
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spdx_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<IssueCategory>,
}

impl TranslationWarning {
    fn new(code: &str, message: impl Into<String>) -> Self {
        TranslationWarning {
            code: code.to_string(),
            message: message.into(),
            spdx_id: None,
            category: None,
        }
    }

    fn with_package(mut self, spdx_id: &str) -> Self {
        self.spdx_id = Some(spdx_id.to_string());
        self
    }

    fn with_category(mut self, category: IssueCategory) -> Self {
        self.category = Some(category);
        self
    }
}

/// External knowledge normalization may use for repairs.
#[derive(Debug, Default)]
pub struct NormalizeOptions<'a> {
    /// Binary package name to source package name, from a package database.
    /// With it, wrong upstream claims are repaired instead of merely
    /// flagged, and installed binaries are protected from synthetic-source
    /// removal.
    pub source_map: Option<&'a BTreeMap<String, String>>,
}

const CREATOR_FINGERPRINTS: &[(&str, Dialect)] = &[
    ("trivy", Dialect::Trivy),
    ("syft", Dialect::Anchore),
    ("anchore", Dialect::Anchore),
    ("grype", Dialect::Anchore),
    ("scout", Dialect::Docker),
    ("docker", Dialect::Docker),
    ("sbom-tool", Dialect::Microsoft),
    ("microsoft", Dialect::Microsoft),
    ("inspector", Dialect::Amazon),
    ("amazon", Dialect::Amazon),
    ("google", Dialect::Google),
];

/// `debian-12.11` and `3.20.3` are point releases only Trivy writes into
/// the distro qualifier; other producers truncate.
fn is_trivy_distro_value(value: &str) -> bool {
    if let Some(rest) = value.strip_prefix("debian-") {
        return rest.contains('.');
    }
    if value.strip_prefix("alpine-").is_some() {
        return false;
    }
    !value.is_empty()
        && value.chars().all(|c| c.is_ascii_digit() || c == '.')
        && value.matches('.').count() >= 2
}

/// Identifies the dialect of an SPDX document.
///
/// Creator strings are checked first; failing that, structural fingerprints
/// of the pURLs decide: the `dpkg` type or a missing namespace means
/// Amazon, `os_*` qualifiers mean Docker, an `epoch` qualifier or `PkgID`
/// attributions mean Trivy, `debian-`-prefixed distros with `upstream`
/// split between Google (encoded `:`, distro before upstream) and Anchore,
/// fully bare pURLs mean Microsoft, and pURLs whose qualifiers stay within
/// `arch`/`distro` with a namespace present mean the reference shape.
///
/// # Examples
///
/// ```
/// use sbomvert::dialect::{detect_dialect, Dialect};
///
/// let doc = sbomvert::spdx::parse_spdx(
///     r#"{"spdxVersion": "SPDX-2.3", "SPDXID": "SPDXRef-DOCUMENT", "name": "img",
///         "packages": [{"SPDXID": "SPDXRef-p", "name": "bash", "externalRefs": [{
///             "referenceCategory": "PACKAGE-MANAGER", "referenceType": "purl",
///             "referenceLocator": "pkg:deb/debian/bash@5.2.15-2%2Bb7"}]}]}"#,
/// )
/// .unwrap();
/// assert_eq!(detect_dialect(&doc), Dialect::Microsoft);
/// ```
#[must_use]
pub fn detect_dialect(doc: &SpdxDocument) -> Dialect {
    let creators = doc.creation_info.creators.join(" ").to_ascii_lowercase();
    if !creators.contains("sbomvert") {
        for (needle, dialect) in CREATOR_FINGERPRINTS {
            if creators.contains(needle) {
                return *dialect;
            }
        }
    }

    let mut binaries = 0usize;
    let mut parsed = 0usize;
    let mut bare = 0usize;
    let mut amazon_shape = false;
    let mut os_keys = false;
    let mut pkgid_attr = false;
    let mut epoch_qualifier = false;
    let mut trivy_distro = false;
    let mut prefixed_distro = false;
    let mut upstream = false;
    let mut encoded_colon = false;
    let mut distro_before_upstream: Option<bool> = None;
    let mut reference_shaped = true;

    for p in doc.binary_packages() {
        binaries += 1;
        if p.attribution_texts.iter().any(|t| t.starts_with("PkgID: ")) {
            pkgid_attr = true;
        }
        let Some(text) = find_purl(p) else {
            reference_shaped = false;
            continue;
        };
        let Ok(raw) = split_raw(text) else {
            reference_shaped = false;
            continue;
        };
        parsed += 1;
        if raw.qualifiers.is_empty() {
            bare += 1;
        }
        let package_type = raw.package_type.to_ascii_lowercase();
        if package_type == "dpkg" {
            amazon_shape = true;
        }
        let os_type = matches!(package_type.as_str(), "deb" | "apk" | "dpkg");
        if os_type && raw.namespace.is_empty() && !raw.qualifiers.is_empty() {
            amazon_shape = true;
        }
        if raw.namespace.is_empty() {
            reference_shaped = false;
        }
        if let Some(v) = raw.version {
            if v.contains("%3A") || v.contains("%3a") {
                encoded_colon = true;
            }
        }
        let mut distro_idx = None;
        let mut upstream_idx = None;
        for (i, (key, value)) in raw.qualifiers.iter().enumerate() {
            let key = key.to_ascii_lowercase();
            match key.as_str() {
                "os_name" | "os_version" | "os_distro" => os_keys = true,
                "epoch" => epoch_qualifier = true,
                "upstream" => {
                    upstream = true;
                    upstream_idx = Some(i);
                }
                "distro" => {
                    distro_idx = Some(i);
                    let value = value.to_ascii_lowercase();
                    if value.starts_with("debian-") || value.starts_with("alpine-") {
                        prefixed_distro = true;
                    }
                    if is_trivy_distro_value(&value) {
                        trivy_distro = true;
                    }
                }
                _ => {}
            }
            if !matches!(key.as_str(), "arch" | "distro") {
                reference_shaped = false;
            }
        }
        if distro_before_upstream.is_none() {
            if let (Some(d), Some(u)) = (distro_idx, upstream_idx) {
                distro_before_upstream = Some(d < u);
            }
        }
    }

    if binaries == 0 || parsed == 0 {
        return Dialect::Unknown;
    }
    if amazon_shape {
        return Dialect::Amazon;
    }
    if os_keys {
        return Dialect::Docker;
    }
    if pkgid_attr || epoch_qualifier || trivy_distro {
        return Dialect::Trivy;
    }
    if prefixed_distro || upstream {
        return if encoded_colon || distro_before_upstream == Some(true) {
            Dialect::Google
        } else {
            Dialect::Anchore
        };
    }
    if bare == parsed && parsed == binaries {
        return Dialect::Microsoft;
    }
    if reference_shaped && parsed == binaries {
        return Dialect::Reference;
    }
    Dialect::Unknown
}

/// Normalizes with default options. See [`normalize_with`].
pub fn normalize(doc: &SpdxDocument, dialect: Dialect) -> Result<CanonicalSbom, DialectError> {
    normalize_with(doc, dialect, &NormalizeOptions::default())
}

/// Maps a document in the given dialect onto the canonical model.
///
/// Dialect-specific repairs are applied and recorded as warnings:
/// `versionInfo` overrides an Amazon pURL whose epoch qualifier disagrees,
/// a `<name>-<version>.src.dpkg` upstream that restates the binary package
/// is flagged (and repaired when a source map proves the real source),
/// fabricated source-package entries are marked for removal, and duplicate
/// identities are merged.
///
/// Fails only when the document has packages but none yields an identity.
pub fn normalize_with(
    doc: &SpdxDocument,
    dialect: Dialect,
    opts: &NormalizeOptions<'_>,
) -> Result<CanonicalSbom, DialectError> {
    let mut warnings = Vec::new();

    let mut distro: Option<DistroInfo> = None;
    for p in doc.packages.iter().filter(|p| is_os_marker(p)) {
        let Ok(os) = p.name.parse::<OsName>() else {
            continue;
        };
        if let Some(v) = p.version_info.as_deref() {
            distro = Some(DistroInfo::for_os(os, v));
            break;
        }
    }

    let mut entries: Vec<(CanonicalPackage, bool)> = Vec::new();
    let mut had_binary = false;
    let mut foreign = 0usize;
    for p in doc.binary_packages() {
        had_binary = true;
        if let Some(c) = canonicalize_package(p, dialect, opts, &mut warnings, &mut foreign) {
            entries.push((c, p.source_info.is_some()));
        }
    }
    if foreign > 0 {
        warnings.push(TranslationWarning::new(
            "foreign-packages-skipped",
            format!("skipped {foreign} package(s) outside the deb/apk ecosystems"),
        ));
    }

    // Fabricated source-package entries. Only producers known to add them
    // are searched, and only among entries that carry no sourceInfo of
    // their own: a real binary that happens to share its source's name is
    // protected by its sourceInfo or by the source map.
    if matches!(dialect, Dialect::Amazon | Dialect::Docker) {
        let synthetic: Vec<bool> = entries
            .iter()
            .map(|(x, had_source_info)| {
                if *had_source_info || x.source_name != x.name {
                    return false;
                }
                if opts.source_map.is_some_and(|m| m.contains_key(&x.name)) {
                    return false;
                }
                entries.iter().any(|(y, _)| {
                    y.name != x.name
                        && y.source_name == x.name
                        && (x.full_version() == y.source_full_version()
                            || x.full_version() == y.full_version())
                })
            })
            .collect();
        for ((x, _), flag) in entries.iter_mut().zip(synthetic) {
            if flag {
                x.is_source_synthetic = true;
                warnings.push(
                    TranslationWarning::new(
                        "synthetic-source-entry",
                        format!(
                            "{} {} restates the source package of other entries and will be dropped on emission",
                            x.name,
                            x.full_version()
                        ),
                    )
                    .with_category(IssueCategory::IncorrectInformation),
                );
            }
        }
    }

    // Merge duplicate identities, enriching the survivor.
    let mut seen: BTreeMap<(String, u32, String, String), usize> = BTreeMap::new();
    let mut packages: Vec<CanonicalPackage> = Vec::new();
    for (c, _) in entries {
        let key = (
            c.name.clone(),
            c.epoch,
            c.version.clone(),
            c.arch.clone().unwrap_or_default(),
        );
        match seen.get(&key) {
            Some(&i) => {
                let first = &mut packages[i];
                if first.source_name == first.name && c.source_name != c.name {
                    first.source_name = c.source_name.clone();
                    first.source_version = c.source_version.clone();
                } else if first.source_version.is_none() && first.source_name == c.source_name {
                    first.source_version = c.source_version.clone();
                }
                if first.distro.is_none() {
                    first.distro = c.distro.clone();
                }
                if first.os.is_none() {
                    first.os = c.os;
                }
                first.is_source_synthetic &= c.is_source_synthetic;
                warnings.push(TranslationWarning::new(
                    "duplicate-package-merged",
                    format!("{} {} listed more than once; entries merged", c.name, c.full_version()),
                ));
            }
            None => {
                seen.insert(key, packages.len());
                packages.push(c);
            }
        }
    }

    if distro.is_none() {
        distro = packages.iter().find_map(|c| c.distro.clone());
    }
    if distro.is_none() && !packages.is_empty() {
        warnings.push(
            TranslationWarning::new(
                "unknown-distro",
                "no distribution information found; release-scoped operations will degrade",
            )
            .with_category(IssueCategory::IncompleteData),
        );
    }

    if had_binary && packages.is_empty() && foreign == 0 {
        return Err(DialectError::NormalizationFailed);
    }

    Ok(CanonicalSbom {
        distro,
        packages,
        origin: dialect,
        warnings,
    })
}

fn canonicalize_package(
    p: &SpdxPackage,
    dialect: Dialect,
    opts: &NormalizeOptions<'_>,
    warnings: &mut Vec<TranslationWarning>,
    foreign: &mut usize,
) -> Option<CanonicalPackage> {
    let sidecar = SpdxPackageExtras {
        version_info: p.version_info.clone(),
        source_info: p.source_info.clone(),
    };
    let purl_text = find_purl(p);
    let mut parsed_purl: Option<PackageUrl> = None;
    let mut canonical: Option<CanonicalPackage> = None;

    if let Some(text) = purl_text {
        match parse_purl(text) {
            Ok(purl) => match purl_to_canonical(&purl, Some(&sidecar)) {
                Ok(c) => {
                    canonical = Some(c);
                    parsed_purl = Some(purl);
                }
                Err(PurlError::ConflictingEpoch {
                    version_epoch,
                    qualifier_epoch,
                }) => {
                    warnings.push(
                        TranslationWarning::new(
                            "conflicting-epoch",
                            format!(
                                "package {}: version string says epoch {version_epoch}, qualifier says {qualifier_epoch}; keeping the version string",
                                p.name
                            ),
                        )
                        .with_package(&p.spdx_id)
                        .with_category(IssueCategory::IncorrectInformation),
                    );
                    let mut repaired = purl.clone();
                    repaired.remove_qualifier("epoch");
                    if let Ok(c) = purl_to_canonical(&repaired, Some(&sidecar)) {
                        canonical = Some(c);
                        parsed_purl = Some(purl);
                    }
                }
                Err(PurlError::UnknownEcosystem(_)) => {
                    *foreign += 1;
                    return None;
                }
                Err(e) => {
                    warnings.push(
                        TranslationWarning::new("unusable-purl", e.to_string())
                            .with_package(&p.spdx_id)
                            .with_category(IssueCategory::IncompleteData),
                    );
                }
            },
            Err(e) => {
                warnings.push(
                    TranslationWarning::new("unparsable-purl", format!("{text}: {e}"))
                        .with_package(&p.spdx_id)
                        .with_category(IssueCategory::InvalidFormat),
                );
            }
        }
    }

    let mut c = match canonical {
        Some(c) => c,
        None => {
            let Some(full) = p.version_info.clone() else {
                warnings.push(
                    TranslationWarning::new(
                        "unusable-package",
                        format!("package {} carries no version anywhere", p.name),
                    )
                    .with_package(&p.spdx_id)
                    .with_category(IssueCategory::IncompleteData),
                );
                return None;
            };
            if purl_text.is_none() {
                warnings.push(
                    TranslationWarning::new(
                        "missing-purl",
                        format!(
                            "package {} has no purl; identity taken from SPDX name and versionInfo",
                            p.name
                        ),
                    )
                    .with_package(&p.spdx_id)
                    .with_category(IssueCategory::FormatReliance),
                );
            }
            let (epoch, version) = strip_epoch(&full);
            CanonicalPackage {
                name: p.name.clone(),
                epoch: epoch.unwrap_or(0),
                version: version.to_string(),
                arch: None,
                source_name: p.name.clone(),
                source_version: None,
                is_source_synthetic: false,
                os: None,
                distro: None,
                distro_raw: None,
            }
        }
    };

    // sourceInfo is the most complete carrier of source identity; it fills
    // gaps, upgrades an epoch-stripped source version, and wins conflicts.
    if let Some(si) = p.source_info.as_deref() {
        if let Some((sname, sver)) = parse_source_info(si) {
            if c.source_name == sname {
                match c.source_version.as_deref() {
                    None => c.source_version = Some(sver.to_string()),
                    Some(existing) if existing != sver => {
                        if strip_epoch(existing).1 == strip_epoch(sver).1 {
                            if strip_epoch(sver).0.is_some() {
                                c.source_version = Some(sver.to_string());
                            }
                        } else {
                            warnings.push(
                                TranslationWarning::new(
                                    "source-info-mismatch",
                                    format!(
                                        "package {}: purl claims source version {existing}, sourceInfo says {sver}; keeping sourceInfo",
                                        c.name
                                    ),
                                )
                                .with_package(&p.spdx_id)
                                .with_category(IssueCategory::IncorrectInformation),
                            );
                            c.source_version = Some(sver.to_string());
                        }
                    }
                    Some(_) => {}
                }
            } else if c.source_name == c.name {
                c.source_name = sname.to_string();
                c.source_version = Some(sver.to_string());
            } else {
                warnings.push(
                    TranslationWarning::new(
                        "source-info-mismatch",
                        format!(
                            "package {}: purl claims source {:?}, sourceInfo says {sname:?}; keeping sourceInfo",
                            c.name, c.source_name
                        ),
                    )
                    .with_package(&p.spdx_id)
                    .with_category(IssueCategory::IncorrectInformation),
                );
                c.source_name = sname.to_string();
                c.source_version = Some(sver.to_string());
            }
        }
    } else if dialect == Dialect::Trivy {
        warnings.push(
            TranslationWarning::new(
                "missing-source-info",
                format!(
                    "package {}: Trivy-style consumers identify packages by sourceInfo, which is absent",
                    c.name
                ),
            )
            .with_package(&p.spdx_id)
            .with_category(IssueCategory::FormatReliance),
        );
    }

    // The Amazon dialect strips the epoch from the version and rederives it
    // as a qualifier, sometimes wrongly; versionInfo carries what the
    // database actually said, so it wins when they disagree.
    if dialect == Dialect::Amazon {
        if let Some(vi) = p.version_info.as_deref() {
            let (vi_epoch, vi_version) = strip_epoch(vi);
            let differs =
                vi_version != c.version || vi_epoch.is_some_and(|e| e != c.epoch);
            if differs {
                warnings.push(
                    TranslationWarning::new(
                        "incorrect-version",
                        format!(
                            "package {}: purl says {}, versionInfo says {vi}; keeping versionInfo",
                            c.name,
                            c.full_version()
                        ),
                    )
                    .with_package(&p.spdx_id)
                    .with_category(IssueCategory::IncorrectInformation),
                );
                c.epoch = vi_epoch.unwrap_or(c.epoch);
                c.version = vi_version.to_string();
            }
        }
    }

    // A `<name>-<version>.src.dpkg` upstream fabricated from the binary's
    // own fields says nothing about the real source package. Flag it unless
    // sourceInfo independently confirmed the identity.
    if let Some(up) = parsed_purl.as_ref().and_then(|q| q.qualifier("upstream")) {
        let full = c.full_version();
        if up.ends_with(".src.dpkg")
            && upstream_is_self_referential(up, &c.name, Some(&full))
            && c.source_name == c.name
            && p.source_info.is_none()
        {
            warnings.push(
                TranslationWarning::new(
                    "self-referential-upstream",
                    format!(
                        "package {}: upstream {up:?} merely restates the binary package; the real source package is unknown",
                        c.name
                    ),
                )
                .with_package(&p.spdx_id)
                .with_category(IssueCategory::IncorrectInformation),
            );
        }
    }

    // A package database outranks any claim in the document.
    if let Some(map) = opts.source_map {
        if let Some(real) = map.get(&c.name) {
            if *real != c.source_name {
                warnings.push(
                    TranslationWarning::new(
                        "incorrect-upstream",
                        format!(
                            "package {}: document claims source {:?}, package database says {real:?}",
                            c.name, c.source_name
                        ),
                    )
                    .with_package(&p.spdx_id)
                    .with_category(IssueCategory::IncorrectInformation),
                );
                c.source_name = real.clone();
                c.source_version = None;
            }
        }
    }

    Some(c)
}

/// Emits a canonical SBOM in the target dialect. See [`emit_with_warnings`].
#[must_use]
pub fn emit(sbom: &CanonicalSbom, target: Dialect) -> SpdxDocument {
    emit_with_warnings(sbom, target).0
}

/// Renders a canonical SBOM as an SPDX document shaped for the target
/// dialect, reporting what that dialect's consumers would still lose.
///
/// Every target receives the superset fields (`versionInfo`, `sourceInfo`,
/// OS marker, `primaryPackagePurpose`) alongside its dialect-shaped pURLs;
/// the pURLs alone differ. Synthetic source entries are dropped. Emitting
/// and re-normalizing preserves every identity field except the
/// architecture of dialects whose pURLs cannot carry one (Docker,
/// Microsoft).
pub fn emit_with_warnings(
    sbom: &CanonicalSbom,
    target: Dialect,
) -> (SpdxDocument, Vec<TranslationWarning>) {
    let mut warnings = Vec::new();
    let target = if SUPPORTED_TARGETS.contains(&target) {
        target
    } else {
        warnings.push(TranslationWarning::new(
            "unsupported-target",
            format!("{target} is not an emission target; producing the reference shape"),
        ));
        Dialect::Reference
    };

    let mut packages = Vec::new();
    let mut relationships = Vec::new();

    if let Some(d) = &sbom.distro {
        packages.push(os_marker_package(d));
        relationships.push(describes("SPDXRef-OperatingSystem"));
    } else {
        warnings.push(
            TranslationWarning::new(
                "missing-distro",
                "canonical SBOM names no distribution; emitting without an OS marker or distro qualifiers",
            )
            .with_category(IssueCategory::IncompleteData),
        );
    }

    if target == Dialect::Microsoft {
        warnings.push(
            TranslationWarning::new(
                "dialect-ignores-source",
                "Microsoft-dialect consumers read only name and version; source identity survives in sourceInfo but their consumers will not use it",
            )
            .with_category(IssueCategory::FormatReliance),
        );
        if sbom
            .packages
            .iter()
            .any(|p| !p.is_source_synthetic && p.arch.is_some())
        {
            warnings.push(
                TranslationWarning::new(
                    "arch-dropped",
                    "bare purls carry no arch qualifier; architecture is not recoverable from the emitted purls",
                )
                .with_category(IssueCategory::IncompleteData),
            );
        }
    }
    if target == Dialect::Docker && sbom.packages.iter().any(|p| p.arch.is_some()) {
        warnings.push(
            TranslationWarning::new(
                "arch-dropped",
                "Docker-dialect purls carry os_* qualifiers instead of arch; architecture is not recoverable from the emitted purls",
            )
            .with_category(IssueCategory::IncompleteData),
        );
    }

    let mut assumed_ecosystem = false;
    let mut index = 0usize;
    for pkg in &sbom.packages {
        if pkg.is_source_synthetic {
            warnings.push(TranslationWarning::new(
                "synthetic-source-dropped",
                format!(
                    "fabricated source entry {} {} not emitted",
                    pkg.name,
                    pkg.full_version()
                ),
            ));
            continue;
        }
        let os = match pkg.os.or(sbom.distro.as_ref().map(|d| d.os_name)) {
            Some(os) => os,
            None => {
                if !assumed_ecosystem {
                    assumed_ecosystem = true;
                    warnings.push(
                        TranslationWarning::new(
                            "assumed-ecosystem",
                            "no ecosystem information; emitting Debian-typed purls",
                        )
                        .with_category(IssueCategory::IncompleteData),
                    );
                }
                OsName::Debian
            }
        };
        let distro = pkg.distro.as_ref().or(sbom.distro.as_ref());
        let purl = dialect_purl(pkg, os, distro, target);
        let spdx_id = format!("SPDXRef-Package-{index}-{}", sanitize_spdx_id(&pkg.name));
        index += 1;
        let full = pkg.full_version();
        let attribution_texts = if target == Dialect::Trivy {
            vec![
                format!("PkgID: {}@{}", pkg.name, full),
                format!("PkgType: {os}"),
            ]
        } else {
            Vec::new()
        };
        packages.push(SpdxPackage {
            spdx_id: spdx_id.clone(),
            name: pkg.name.clone(),
            version_info: Some(full),
            source_info: Some(format!(
                "built package from: {} {}",
                pkg.source_name,
                pkg.source_full_version()
            )),
            attribution_texts,
            primary_package_purpose: Some(PURPOSE_INSTALL.into()),
            external_refs: vec![ExternalRef {
                reference_category: "PACKAGE-MANAGER".into(),
                reference_type: "purl".into(),
                reference_locator: purl,
                extras: serde_json::Map::new(),
            }],
            extras: serde_json::Map::new(),
        });
        relationships.push(describes(&spdx_id));
    }

    let os_slug = sbom
        .distro
        .as_ref()
        .map(|d| format!("{}-{}", d.os_name, d.version_id))
        .unwrap_or_else(|| "unknown".into());
    let doc = SpdxDocument {
        spdx_version: "SPDX-2.3".into(),
        data_license: Some("CC0-1.0".into()),
        spdx_id: "SPDXRef-DOCUMENT".into(),
        name: format!("sbomvert-{target}-{os_slug}"),
        document_namespace: Some(format!(
            "https://sbomvert.invalid/spdxdocs/{target}/{os_slug}"
        )),
        creation_info: CreationInfo {
            created: Some(FIXED_CREATED.into()),
            creators: vec![tool_creator()],
            extras: serde_json::Map::new(),
        },
        packages,
        files: Vec::new(),
        relationships,
        extras: serde_json::Map::new(),
    };
    (doc, warnings)
}

fn describes(related: &str) -> SpdxRelationship {
    SpdxRelationship {
        spdx_element_id: "SPDXRef-DOCUMENT".into(),
        related_spdx_element: related.into(),
        relationship_type: "DESCRIBES".into(),
        extras: serde_json::Map::new(),
    }
}

/// The `upstream` qualifier value in `name` or `name@version` form.
fn upstream_value(pkg: &CanonicalPackage) -> String {
    let source_full = pkg.source_full_version();
    if source_full == pkg.full_version() {
        pkg.source_name.clone()
    } else {
        format!("{}@{}", pkg.source_name, source_full)
    }
}

fn dialect_purl(
    pkg: &CanonicalPackage,
    os: OsName,
    distro: Option<&DistroInfo>,
    target: Dialect,
) -> String {
    let (package_type, namespace) = match os {
        OsName::Debian => ("deb", "debian"),
        OsName::Alpine => ("apk", "alpine"),
    };
    let full = pkg.full_version();
    let prefixed_distro = distro.map(|d| format!("{}-{}", d.os_name, d.version_id));
    let trivy_distro = distro.map(|d| match os {
        OsName::Debian => format!("debian-{}", d.version_id),
        OsName::Alpine => d.version_id.clone(),
    });

    let insertion_order = PurlStyle {
        sort_qualifiers: false,
        encode_version_colon: false,
        encode_reserved_in_name: true,
    };
    let raw_name = PurlStyle {
        sort_qualifiers: false,
        encode_version_colon: false,
        encode_reserved_in_name: false,
    };

    match target {
        Dialect::Reference | Dialect::Unknown => {
            let mut p = new_purl(package_type, &pkg.name);
            p.set_namespace(namespace).set_version(&full);
            if let Some(a) = &pkg.arch {
                push(&mut p, "arch", a);
            }
            if let Some(d) = distro {
                push(&mut p, "distro", &d.reference_distro_qualifier());
            }
            serialize_purl(&p)
        }
        Dialect::Trivy => {
            let mut p = new_purl(package_type, &pkg.name);
            p.set_namespace(namespace).set_version(&pkg.version);
            if let Some(a) = &pkg.arch {
                push(&mut p, "arch", a);
            }
            if let Some(d) = &trivy_distro {
                push(&mut p, "distro", d);
            }
            if pkg.epoch > 0 {
                push(&mut p, "epoch", &pkg.epoch.to_string());
            }
            serialize_purl_with(&p, &insertion_order)
        }
        Dialect::Anchore => {
            let mut p = new_purl(package_type, &pkg.name);
            p.set_namespace(namespace).set_version(&full);
            if let Some(a) = &pkg.arch {
                push(&mut p, "arch", a);
            }
            if pkg.source_name != pkg.name {
                push(&mut p, "upstream", &upstream_value(pkg));
            }
            if let Some(d) = &prefixed_distro {
                push(&mut p, "distro", d);
            }
            serialize_purl_with(&p, &insertion_order)
        }
        Dialect::Google => {
            let mut p = new_purl(package_type, &pkg.name);
            p.set_namespace(namespace).set_version(&full);
            if let Some(a) = &pkg.arch {
                push(&mut p, "arch", a);
            }
            if let Some(d) = &prefixed_distro {
                push(&mut p, "distro", d);
            }
            push(&mut p, "upstream", &upstream_value(pkg));
            let style = PurlStyle {
                encode_version_colon: true,
                ..insertion_order
            };
            serialize_purl_with(&p, &style)
        }
        Dialect::Docker => {
            let mut p = new_purl(package_type, &pkg.name);
            p.set_namespace(namespace).set_version(&full);
            if let Some(d) = distro {
                push(&mut p, "os_version", &d.version_id);
                push(&mut p, "os_name", &d.os_name.to_string());
                if let Some(codename) = &d.codename {
                    push(&mut p, "os_distro", codename);
                }
            }
            serialize_purl_with(&p, &insertion_order)
        }
        Dialect::Amazon => {
            let amazon_type = match os {
                OsName::Debian => "dpkg",
                OsName::Alpine => "apk",
            };
            let mut p = new_purl(amazon_type, &pkg.name);
            p.set_version(&pkg.version);
            if let Some(a) = &pkg.arch {
                push(&mut p, "arch", a);
            }
            if pkg.epoch > 0 {
                push(&mut p, "epoch", &pkg.epoch.to_string());
            }
            let upstream = match os {
                OsName::Debian => {
                    let source_plain = strip_epoch(&pkg.source_full_version()).1.to_string();
                    format!("{}-{}.src.dpkg", pkg.source_name, source_plain)
                }
                OsName::Alpine => pkg.source_name.clone(),
            };
            push(&mut p, "upstream", &upstream);
            serialize_purl_with(&p, &raw_name)
        }
        Dialect::Microsoft => {
            let mut p = new_purl(package_type, &pkg.name);
            p.set_namespace(namespace).set_version(&full);
            serialize_purl_with(&p, &raw_name)
        }
    }
}

fn new_purl(package_type: &str, name: &str) -> PackageUrl {
    PackageUrl::new(package_type, name).expect("canonical names are valid purl names")
}

fn push(p: &mut PackageUrl, key: &str, value: &str) {
    if !value.is_empty() {
        p.push_qualifier(key, value)
            .expect("emission pushes each qualifier once");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc_with_packages(packages: Vec<SpdxPackage>) -> SpdxDocument {
        SpdxDocument {
            spdx_version: "SPDX-2.3".into(),
            data_license: Some("CC0-1.0".into()),
            spdx_id: "SPDXRef-DOCUMENT".into(),
            name: "test".into(),
            document_namespace: None,
            creation_info: CreationInfo::default(),
            packages,
            files: Vec::new(),
            relationships: Vec::new(),
            extras: serde_json::Map::new(),
        }
    }

    fn purl_package(id: &str, name: &str, purl: &str) -> SpdxPackage {
        SpdxPackage {
            spdx_id: id.into(),
            name: name.into(),
            external_refs: vec![ExternalRef {
                reference_category: "PACKAGE-MANAGER".into(),
                reference_type: "purl".into(),
                reference_locator: purl.into(),
                extras: serde_json::Map::new(),
            }],
            ..Default::default()
        }
    }

    fn magics(purl: &str) -> SpdxDocument {
        doc_with_packages(vec![purl_package("SPDXRef-p0", "python3-magics++", purl)])
    }

    const REFERENCE: &str =
        "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&distro=bookworm";
    const AMAZON: &str = "pkg:dpkg/python3-magics++@1.5.8-1?arch=AMD64&epoch=1&upstream=python3-magics++-1.5.8-1.src.dpkg";
    const ANCHORE: &str = "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&upstream=magics-python&distro=debian-12";
    const GOOGLE: &str = "pkg:deb/debian/python3-magics%2B%2B@2%3A1.5.8-1?arch=amd64&distro=debian-12&upstream=magics-python";
    const MICROSOFT: &str = "pkg:deb/debian/python3-magics++@2:1.5.8-1";
    const SCOUT: &str = "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?os_version=12&os_name=debian&os_distro=bookworm";
    const TRIVY: &str = "pkg:deb/debian/python3-magics%2B%2B@1.5.8-1?arch=amd64&distro=debian-12.11&epoch=2";

    #[test]
    fn detects_each_producer_shape() {
        assert_eq!(detect_dialect(&magics(REFERENCE)), Dialect::Reference);
        assert_eq!(detect_dialect(&magics(AMAZON)), Dialect::Amazon);
        assert_eq!(detect_dialect(&magics(ANCHORE)), Dialect::Anchore);
        assert_eq!(detect_dialect(&magics(GOOGLE)), Dialect::Google);
        assert_eq!(detect_dialect(&magics(MICROSOFT)), Dialect::Microsoft);
        assert_eq!(detect_dialect(&magics(SCOUT)), Dialect::Docker);
        assert_eq!(detect_dialect(&magics(TRIVY)), Dialect::Trivy);
    }

    #[test]
    fn detects_by_creator_string() {
        let mut doc = magics(MICROSOFT);
        doc.creation_info.creators = vec!["Tool: trivy-0.50.1".into()];
        assert_eq!(detect_dialect(&doc), Dialect::Trivy);
        doc.creation_info.creators = vec!["Organization: Example Corp".into()];
        assert_eq!(detect_dialect(&doc), Dialect::Microsoft);
    }

    #[test]
    fn empty_and_purlless_documents_are_unknown() {
        assert_eq!(detect_dialect(&doc_with_packages(vec![])), Dialect::Unknown);
        let no_purl = doc_with_packages(vec![SpdxPackage {
            spdx_id: "SPDXRef-p0".into(),
            name: "bash".into(),
            ..Default::default()
        }]);
        assert_eq!(detect_dialect(&no_purl), Dialect::Unknown);
    }

    /// Every producer encoding of the same package normalizes to the same
    /// name, epoch, and version. The Amazon form needs its versionInfo
    /// sidecar, because its pURL alone carries a wrong epoch.
    #[test]
    fn producer_forms_converge() {
        let cases = [
            (REFERENCE, Dialect::Reference),
            (ANCHORE, Dialect::Anchore),
            (GOOGLE, Dialect::Google),
            (MICROSOFT, Dialect::Microsoft),
            (SCOUT, Dialect::Docker),
            (TRIVY, Dialect::Trivy),
        ];
        for (purl, dialect) in cases {
            let doc = magics(purl);
            assert_eq!(detect_dialect(&doc), dialect, "{purl}");
            let sbom = normalize(&doc, dialect).unwrap();
            let p = &sbom.packages[0];
            assert_eq!(p.name, "python3-magics++", "{purl}");
            assert_eq!(p.epoch, 2, "{purl}");
            assert_eq!(p.version, "1.5.8-1", "{purl}");
        }

        let mut doc = magics(AMAZON);
        doc.packages[0].version_info = Some("2:1.5.8-1".into());
        let sbom = normalize(&doc, Dialect::Amazon).unwrap();
        let p = &sbom.packages[0];
        assert_eq!((p.epoch, p.version.as_str()), (2, "1.5.8-1"));
        assert!(sbom.warnings.iter().any(|w| w.code == "incorrect-version"));
    }

    #[test]
    fn normalize_flags_fabricated_upstream_without_source_info() {
        let doc = magics(AMAZON);
        let sbom = normalize(&doc, Dialect::Amazon).unwrap();
        assert!(sbom
            .warnings
            .iter()
            .any(|w| w.code == "self-referential-upstream"));
        // The claim is discarded rather than trusted.
        assert_eq!(sbom.packages[0].source_name, "python3-magics++");
    }

    #[test]
    fn source_map_repairs_wrong_upstream() {
        let doc = magics(
            "pkg:deb/debian/libelf1@0.188-2.1?arch=amd64&distro=bookworm&upstream=libelf1",
        );
        let map: BTreeMap<String, String> =
            [("libelf1".to_string(), "elfutils".to_string())].into();
        let opts = NormalizeOptions {
            source_map: Some(&map),
        };
        let sbom = normalize_with(&doc, Dialect::Reference, &opts).unwrap();
        assert_eq!(sbom.packages[0].source_name, "elfutils");
        assert!(sbom.warnings.iter().any(|w| w.code == "incorrect-upstream"));
    }

    #[test]
    fn synthetic_source_entries_are_marked_and_dropped() {
        let doc = doc_with_packages(vec![
            purl_package(
                "SPDXRef-p0",
                "passwd",
                "pkg:dpkg/passwd@4.13+dfsg1-1?arch=amd64&epoch=1&upstream=shadow-4.13+dfsg1-1.src.dpkg",
            ),
            purl_package(
                "SPDXRef-p1",
                "shadow",
                "pkg:dpkg/shadow@4.13+dfsg1-1?epoch=1&upstream=shadow-4.13+dfsg1-1.src.dpkg",
            ),
        ]);
        let sbom = normalize(&doc, Dialect::Amazon).unwrap();
        let shadow = sbom.packages.iter().find(|p| p.name == "shadow").unwrap();
        assert!(shadow.is_source_synthetic);
        let passwd = sbom.packages.iter().find(|p| p.name == "passwd").unwrap();
        assert!(!passwd.is_source_synthetic);
        assert_eq!(passwd.source_name, "shadow");

        let (doc, warnings) = emit_with_warnings(&sbom, Dialect::Reference);
        assert!(doc.packages.iter().all(|p| p.name != "shadow"));
        assert!(warnings.iter().any(|w| w.code == "synthetic-source-dropped"));
    }

    #[test]
    fn real_binaries_sharing_source_names_survive() {
        // openssl is an installed binary whose source is also openssl;
        // libssl3 shares that source. sourceInfo proves openssl is real.
        let mut openssl = purl_package(
            "SPDXRef-p0",
            "openssl",
            "pkg:dpkg/openssl@3.0.11-1~deb12u2?arch=amd64&upstream=openssl-3.0.11-1~deb12u2.src.dpkg",
        );
        openssl.source_info = Some("built package from: openssl 3.0.11-1~deb12u2".into());
        let mut libssl = purl_package(
            "SPDXRef-p1",
            "libssl3",
            "pkg:dpkg/libssl3@3.0.11-1~deb12u2?arch=amd64&upstream=openssl-3.0.11-1~deb12u2.src.dpkg",
        );
        libssl.source_info = Some("built package from: openssl 3.0.11-1~deb12u2".into());
        let doc = doc_with_packages(vec![openssl, libssl]);
        let sbom = normalize(&doc, Dialect::Amazon).unwrap();
        assert!(sbom.packages.iter().all(|p| !p.is_source_synthetic));
    }

    #[test]
    fn duplicate_identities_merge() {
        let doc = doc_with_packages(vec![
            purl_package("SPDXRef-p0", "bash", "pkg:deb/debian/bash@5.2.15-2?arch=amd64"),
            purl_package("SPDXRef-p1", "bash", "pkg:deb/debian/bash@5.2.15-2?arch=amd64"),
        ]);
        let sbom = normalize(&doc, Dialect::Reference).unwrap();
        assert_eq!(sbom.packages.len(), 1);
        assert!(sbom
            .warnings
            .iter()
            .any(|w| w.code == "duplicate-package-merged"));
    }

    fn magics_canonical() -> CanonicalSbom {
        CanonicalSbom {
            distro: Some(DistroInfo::debian("12")),
            packages: vec![CanonicalPackage {
                name: "python3-magics++".into(),
                epoch: 2,
                version: "1.5.8-1".into(),
                arch: Some("amd64".into()),
                source_name: "magics-python".into(),
                source_version: None,
                is_source_synthetic: false,
                os: Some(OsName::Debian),
                distro: Some(DistroInfo::debian("12")),
                distro_raw: None,
            }],
            origin: Dialect::Reference,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn emitted_purls_match_producer_shapes() {
        let sbom = magics_canonical();
        let purl_of = |target| {
            let doc = emit(&sbom, target);
            find_purl(&doc.packages[1]).unwrap().to_string()
        };
        assert_eq!(purl_of(Dialect::Reference), REFERENCE);
        assert_eq!(
            purl_of(Dialect::Trivy),
            "pkg:deb/debian/python3-magics%2B%2B@1.5.8-1?arch=amd64&distro=debian-12&epoch=2"
        );
        assert_eq!(purl_of(Dialect::Anchore), ANCHORE);
        assert_eq!(purl_of(Dialect::Google), GOOGLE);
        assert_eq!(purl_of(Dialect::Microsoft), MICROSOFT);
        assert_eq!(purl_of(Dialect::Docker), SCOUT);
        assert_eq!(
            purl_of(Dialect::Amazon),
            "pkg:dpkg/python3-magics++@1.5.8-1?arch=amd64&epoch=2&upstream=magics-python-1.5.8-1.src.dpkg"
        );
    }

    #[test]
    fn microsoft_emission_flags_consumer_loss() {
        let (_, warnings) = emit_with_warnings(&magics_canonical(), Dialect::Microsoft);
        assert!(warnings.iter().any(|w| w.code == "dialect-ignores-source"));
    }

    fn arb_canonical_sbom() -> impl Strategy<Value = CanonicalSbom> {
        let os = prop_oneof![Just(OsName::Debian), Just(OsName::Alpine)];
        // Names avoid `-<digit>` so the Amazon `.src.dpkg` form stays
        // unambiguous; real names like g++-12 need sourceInfo to survive
        // that dialect, which emission provides anyway.
        let name = proptest::collection::vec("[a-z]{2,6}", 1..3).prop_map(|v| v.join("-"));
        let version = (0u32..3, "[0-9]\\.[0-9]{1,2}", proptest::option::of("[a-z0-9.+~]{1,4}"))
            .prop_map(|(_, base, suffix)| match suffix {
                Some(s) => format!("{base}-{s}"),
                None => base,
            });
        os.prop_flat_map(move |os| {
            let epoch = match os {
                OsName::Debian => 0u32..3,
                // apk has no epoch concept.
                OsName::Alpine => 0u32..1,
            };
            let distro = match os {
                OsName::Debian => Just(DistroInfo::debian("12")).boxed(),
                OsName::Alpine => Just(DistroInfo::alpine("3.20")).boxed(),
            };
            let pkg = (
                name.clone(),
                epoch,
                version.clone(),
                proptest::option::of(name.clone()),
                distro.clone(),
            )
                .prop_map(move |(name, epoch, version, source, distro)| {
                    let source_name = source.unwrap_or_else(|| name.clone());
                    CanonicalPackage {
                        name,
                        epoch,
                        version,
                        arch: Some("amd64".into()),
                        source_name,
                        source_version: None,
                        is_source_synthetic: false,
                        os: Some(os),
                        distro: Some(distro),
                        distro_raw: None,
                    }
                });
            (proptest::collection::vec(pkg, 1..5), distro).prop_map(move |(mut packages, distro)| {
                packages.sort_by(|a, b| a.name.cmp(&b.name));
                packages.dedup_by(|a, b| a.name == b.name);
                CanonicalSbom {
                    distro: Some(distro),
                    packages,
                    origin: Dialect::Reference,
                    warnings: Vec::new(),
                }
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Emission into any dialect is detected as that dialect, and
        /// re-normalizing recovers every identity field except arch for
        /// the dialects whose purls cannot carry one.
        #[test]
        fn emit_detect_normalize_round_trip(sbom in arb_canonical_sbom()) {
            for target in SUPPORTED_TARGETS {
                let doc = emit(&sbom, target);
                prop_assert_eq!(detect_dialect(&doc), target, "target {}", target);
                let back = normalize(&doc, target).unwrap();
                prop_assert_eq!(back.packages.len(), sbom.packages.len());
                prop_assert_eq!(back.distro.as_ref(), sbom.distro.as_ref());
                for (a, b) in sbom.packages.iter().zip(&back.packages) {
                    prop_assert_eq!(&a.name, &b.name, "target {}", target);
                    prop_assert_eq!(a.epoch, b.epoch, "target {}", target);
                    prop_assert_eq!(&a.version, &b.version, "target {}", target);
                    prop_assert_eq!(&a.source_name, &b.source_name, "target {}", target);
                    prop_assert_eq!(
                        a.source_full_version(),
                        b.source_full_version(),
                        "target {}",
                        target
                    );
                    if !matches!(target, Dialect::Docker | Dialect::Microsoft) {
                        prop_assert_eq!(&a.arch, &b.arch, "target {}", target);
                    }
                }
                // A second round trip is a fixed point.
                let again = normalize(&emit(&back, target), target).unwrap();
                prop_assert_eq!(
                    again.packages.iter().map(CanonicalPackage::identity).collect::<Vec<_>>(),
                    back.packages.iter().map(CanonicalPackage::identity).collect::<Vec<_>>()
                );
            }
        }
    }
}

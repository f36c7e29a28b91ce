//! dpkg and apk installed-package databases, and reference SBOM generation.
//!
//! The package manager's own database is the ground truth for what is
//! installed in an image: `/var/lib/dpkg/status` for Debian derivatives and
//! `/lib/apk/db/installed` for Alpine. [`generate_reference_sbom`] turns a
//! parsed database into an SPDX document whose every pURL is fully compliant
//! (type, namespace, decoded name, epoch-prefixed version, arch and distro
//! qualifiers) and which carries the extension fields strict consumers
//! require, so the output is both a validation baseline and directly
//! scannable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::purl::PackageUrl;
use crate::spdx::{
    CreationInfo, ExternalRef, SpdxDocument, SpdxPackage, SpdxRelationship, FIXED_CREATED,
    PURPOSE_INSTALL, PURPOSE_OS,
};

/// Errors from parsing package databases.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OsdbError {
    /// A dpkg status stanza violates the stanza format.
    #[error("dpkg stanza {stanza}: {reason}")]
    MalformedStanza { stanza: usize, reason: String },
    /// An apk installed-DB record violates the record format.
    #[error("apk record {record}: {reason}")]
    MalformedRecord { record: usize, reason: String },
}

/// Operating systems with supported package databases and trackers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OsName {
    Debian,
    Alpine,
}

impl fmt::Display for OsName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OsName::Debian => "debian",
            OsName::Alpine => "alpine",
        })
    }
}

impl FromStr for OsName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "debian" => Ok(OsName::Debian),
            "alpine" => Ok(OsName::Alpine),
            other => Err(format!("unsupported OS {other:?} (expected debian or alpine)")),
        }
    }
}

/// Debian release number / codename pairs.
const DEBIAN_RELEASES: &[(&str, &str)] = &[
    ("8", "jessie"),
    ("9", "stretch"),
    ("10", "buster"),
    ("11", "bullseye"),
    ("12", "bookworm"),
    ("13", "trixie"),
    ("14", "forky"),
];

/// Codename for a Debian version id (major component decides).
#[must_use]
pub fn debian_codename(version_id: &str) -> Option<&'static str> {
    let major = version_id.split('.').next()?;
    DEBIAN_RELEASES
        .iter()
        .find(|(v, _)| *v == major)
        .map(|(_, c)| *c)
}

/// Version id for a Debian codename.
#[must_use]
pub fn debian_version_id(codename: &str) -> Option<&'static str> {
    DEBIAN_RELEASES
        .iter()
        .find(|(_, c)| *c == codename)
        .map(|(v, _)| *v)
}

/// The distribution a package set belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistroInfo {
    pub os_name: OsName,
    /// `"12"` for Debian bookworm, `"3.19"` for Alpine.
    pub version_id: String,
    /// Present for Debian releases; Alpine has none.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codename: Option<String>,
}

impl DistroInfo {
    /// Debian release from a version id (`"12"`) or point release
    /// (`"12.5"`); the codename follows from the major component.
    #[must_use]
    pub fn debian(version_id: &str) -> Self {
        let major = version_id.split('.').next().unwrap_or(version_id);
        DistroInfo {
            os_name: OsName::Debian,
            version_id: major.to_string(),
            codename: debian_codename(major).map(str::to_string),
        }
    }

    /// Alpine release, trimmed to branch granularity (`"3.20.3"` becomes
    /// `"3.20"`); `"edge"` passes through.
    #[must_use]
    pub fn alpine(version_id: &str) -> Self {
        let branch = if version_id == "edge" {
            "edge".to_string()
        } else {
            version_id
                .split('.')
                .take(2)
                .collect::<Vec<_>>()
                .join(".")
        };
        DistroInfo {
            os_name: OsName::Alpine,
            version_id: branch,
            codename: None,
        }
    }

    /// Builds from an OS plus a release given as either version id or
    /// codename (`"12"`, `"bookworm"`, `"3.19"`).
    #[must_use]
    pub fn for_os(os: OsName, release: &str) -> Self {
        match os {
            OsName::Debian => match debian_version_id(release) {
                Some(vid) => DistroInfo::debian(vid),
                None => DistroInfo::debian(release),
            },
            OsName::Alpine => DistroInfo::alpine(release),
        }
    }

    /// Interprets a pURL `distro` qualifier in any observed producer
    /// spelling: `"bookworm"`, `"debian-12"`, `"debian-12.11"`,
    /// `"alpine-3.19"`, `"3.19"`, `"3.20.3"`, `"edge"`. Returns `None` for
    /// unrecognized strings so callers can preserve them verbatim.
    #[must_use]
    pub fn from_distro_qualifier(value: &str) -> Option<Self> {
        let lowered = value.to_ascii_lowercase();
        if debian_version_id(&lowered).is_some() {
            let vid = debian_version_id(&lowered).unwrap();
            return Some(DistroInfo::debian(vid));
        }
        if let Some(rest) = lowered.strip_prefix("debian-") {
            if is_dotted_digits(rest) {
                return Some(DistroInfo::debian(rest));
            }
            return None;
        }
        if let Some(rest) = lowered.strip_prefix("alpine-") {
            if is_dotted_digits(rest) || rest == "edge" {
                return Some(DistroInfo::alpine(rest));
            }
            return None;
        }
        if lowered == "edge" {
            return Some(DistroInfo::alpine("edge"));
        }
        // A bare dotted number is the Alpine convention; a bare integer is
        // ambiguous and left unrecognized.
        if is_dotted_digits(&lowered) && lowered.contains('.') {
            return Some(DistroInfo::alpine(&lowered));
        }
        None
    }

    /// Builds from the `os_name`/`os_version`/`os_distro` qualifier triplet.
    #[must_use]
    pub fn from_os_fields(
        os_name: &str,
        os_version: Option<&str>,
        os_distro: Option<&str>,
    ) -> Option<Self> {
        match OsName::from_str(os_name).ok()? {
            OsName::Debian => match (os_version, os_distro) {
                (Some(v), _) => Some(DistroInfo::debian(v)),
                (None, Some(codename)) => {
                    debian_version_id(codename).map(DistroInfo::debian)
                }
                (None, None) => None,
            },
            OsName::Alpine => os_version.map(DistroInfo::alpine),
        }
    }

    /// The value the compliant reference pURL uses for its `distro`
    /// qualifier: the codename for Debian, the version id for Alpine.
    #[must_use]
    pub fn reference_distro_qualifier(&self) -> String {
        match (&self.codename, self.os_name) {
            (Some(c), OsName::Debian) => c.clone(),
            _ => self.version_id.clone(),
        }
    }

    /// The release key used by the OS security tracker: codename for
    /// Debian, branch version for Alpine.
    #[must_use]
    pub fn tracker_release(&self) -> String {
        match self.os_name {
            OsName::Debian => self
                .codename
                .clone()
                .unwrap_or_else(|| self.version_id.clone()),
            OsName::Alpine => self.version_id.clone(),
        }
    }
}

fn is_dotted_digits(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_digit() || c == '.')
        && !s.starts_with('.')
        && !s.ends_with('.')
        && !s.contains("..")
}

/// One installed package as recorded by the package manager.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OsPackage {
    pub name: String,
    /// Version in distribution format; may include an epoch.
    pub version: String,
    /// Architecture; empty when the database omits it.
    pub arch: String,
    /// Source package name; equals `name` when the database lists none.
    pub source_name: String,
    /// Source package version; equals `version` unless stated otherwise.
    pub source_version: String,
    /// Virtual names this package provides, as listed.
    pub provides: Vec<String>,
}

/// Parses a dpkg `status` file. Only stanzas whose `Status` marks them
/// installed yield packages; removed-but-configured entries are skipped.
///
/// The parenthesized source version form `Source: shadow (1:4.13+dfsg1-1)`
/// is honored; without it the source version defaults to the package
/// version.
pub fn parse_dpkg_status(text: &str) -> Result<Vec<OsPackage>, OsdbError> {
    let mut packages = Vec::new();
    let mut stanza_no = 0usize;

    let mut fields: Vec<(String, String)> = Vec::new();
    let flush = |fields: &mut Vec<(String, String)>,
                     stanza_no: usize,
                     packages: &mut Vec<OsPackage>|
     -> Result<(), OsdbError> {
        if fields.is_empty() {
            return Ok(());
        }
        let get = |key: &str| {
            fields
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(key))
                .map(|(_, v)| v.as_str())
        };
        let name = get("Package").ok_or_else(|| OsdbError::MalformedStanza {
            stanza: stanza_no,
            reason: "missing Package field".into(),
        })?;
        let installed = get("Status")
            .map(|s| s.split_whitespace().last() == Some("installed"))
            .unwrap_or(true);
        if installed {
            let version = get("Version").ok_or_else(|| OsdbError::MalformedStanza {
                stanza: stanza_no,
                reason: format!("package {name:?} has no Version field"),
            })?;
            let (source_name, source_version) = match get("Source") {
                Some(source) => parse_dpkg_source(source, version),
                None => (name.to_string(), version.to_string()),
            };
            let provides = get("Provides")
                .map(|p| {
                    p.split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect()
                })
                .unwrap_or_default();
            packages.push(OsPackage {
                name: name.to_string(),
                version: version.to_string(),
                arch: get("Architecture").unwrap_or("").to_string(),
                source_name,
                source_version,
                provides,
            });
        }
        fields.clear();
        Ok(())
    };

    for line in text.lines() {
        if line.is_empty() {
            flush(&mut fields, stanza_no, &mut packages)?;
            continue;
        }
        if line.starts_with(' ') || line.starts_with('\t') {
            if fields.is_empty() {
                return Err(OsdbError::MalformedStanza {
                    stanza: stanza_no + 1,
                    reason: "continuation line before any field".into(),
                });
            }
            // Continuation content (Description and friends) is irrelevant
            // to package identity.
            continue;
        }
        if fields.is_empty() {
            stanza_no += 1;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| OsdbError::MalformedStanza {
            stanza: stanza_no,
            reason: format!("line without a field separator: {line:?}"),
        })?;
        fields.push((key.trim().to_string(), value.trim().to_string()));
    }
    flush(&mut fields, stanza_no, &mut packages)?;
    Ok(packages)
}

/// Splits `"shadow (1:4.13+dfsg1-1)"` into name and version; the version
/// defaults to the binary package version when no parentheses are present.
fn parse_dpkg_source(source: &str, default_version: &str) -> (String, String) {
    match source.split_once('(') {
        Some((name, rest)) => {
            let version = rest.trim_end().trim_end_matches(')').trim();
            (name.trim().to_string(), version.to_string())
        }
        None => (source.trim().to_string(), default_version.to_string()),
    }
}

/// Parses an apk `installed` database: blank-line-separated records of
/// single-letter fields (`P` name, `V` version, `A` arch, `o` origin,
/// `p` provides).
pub fn parse_apk_installed(text: &str) -> Result<Vec<OsPackage>, OsdbError> {
    let mut packages = Vec::new();
    let mut record_no = 0usize;

    let mut fields: Vec<(char, String)> = Vec::new();
    let flush = |fields: &mut Vec<(char, String)>,
                     record_no: usize,
                     packages: &mut Vec<OsPackage>|
     -> Result<(), OsdbError> {
        if fields.is_empty() {
            return Ok(());
        }
        let get = |key: char| {
            fields
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| v.as_str())
        };
        let name = get('P').ok_or_else(|| OsdbError::MalformedRecord {
            record: record_no,
            reason: "missing P (package name) line".into(),
        })?;
        let version = get('V').ok_or_else(|| OsdbError::MalformedRecord {
            record: record_no,
            reason: format!("package {name:?} has no V (version) line"),
        })?;
        let source_name = get('o').unwrap_or(name);
        let provides = get('p')
            .map(|p| p.split_whitespace().map(str::to_string).collect())
            .unwrap_or_default();
        packages.push(OsPackage {
            name: name.to_string(),
            version: version.to_string(),
            arch: get('A').unwrap_or("").to_string(),
            source_name: source_name.to_string(),
            // The installed DB records no separate source version.
            source_version: version.to_string(),
            provides,
        });
        fields.clear();
        Ok(())
    };

    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut fields, record_no, &mut packages)?;
            continue;
        }
        if fields.is_empty() {
            record_no += 1;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| OsdbError::MalformedRecord {
            record: record_no,
            reason: format!("line without a ':' separator: {line:?}"),
        })?;
        let mut chars = key.chars();
        match (chars.next(), chars.next()) {
            (Some(k), None) => fields.push((k, value.to_string())),
            _ => {
                return Err(OsdbError::MalformedRecord {
                    record: record_no,
                    reason: format!("field key {key:?} is not a single character"),
                })
            }
        }
    }
    flush(&mut fields, record_no, &mut packages)?;
    Ok(packages)
}

/// Replaces characters outside the SPDX id alphabet.
pub(crate) fn sanitize_spdx_id(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// The deterministic tool string used in generated documents.
pub(crate) fn tool_creator() -> String {
    format!("Tool: sbomvert-{}", env!("CARGO_PKG_VERSION"))
}

/// Generates the reference SBOM for a parsed package database.
///
/// One SPDX package per installed binary package (no synthetic entries for
/// source packages), each carrying a compliant pURL, `versionInfo`,
/// and `sourceInfo` in the `built package from:` form, plus the OS-marker
/// package strict consumers require. Output is fully deterministic.
#[must_use]
pub fn generate_reference_sbom(pkgs: &[OsPackage], distro: &DistroInfo) -> SpdxDocument {
    let mut packages = Vec::with_capacity(pkgs.len() + 1);
    let mut relationships = Vec::with_capacity(pkgs.len() + 1);

    packages.push(os_marker_package(distro));
    relationships.push(SpdxRelationship {
        spdx_element_id: "SPDXRef-DOCUMENT".into(),
        related_spdx_element: "SPDXRef-OperatingSystem".into(),
        relationship_type: "DESCRIBES".into(),
        extras: serde_json::Map::new(),
    });

    for (i, pkg) in pkgs.iter().enumerate() {
        let spdx_id = format!("SPDXRef-Package-{i}-{}", sanitize_spdx_id(&pkg.name));
        let purl = reference_purl(pkg, distro);
        let source_info = format!(
            "built package from: {} {}",
            pkg.source_name, pkg.source_version
        );
        packages.push(SpdxPackage {
            spdx_id: spdx_id.clone(),
            name: pkg.name.clone(),
            version_info: Some(pkg.version.clone()),
            source_info: Some(source_info),
            attribution_texts: Vec::new(),
            primary_package_purpose: Some(PURPOSE_INSTALL.into()),
            external_refs: vec![ExternalRef {
                reference_category: "PACKAGE-MANAGER".into(),
                reference_type: "purl".into(),
                reference_locator: purl,
                extras: serde_json::Map::new(),
            }],
            extras: serde_json::Map::new(),
        });
        relationships.push(SpdxRelationship {
            spdx_element_id: "SPDXRef-DOCUMENT".into(),
            related_spdx_element: spdx_id,
            relationship_type: "DESCRIBES".into(),
            extras: serde_json::Map::new(),
        });
    }

    SpdxDocument {
        spdx_version: "SPDX-2.3".into(),
        data_license: Some("CC0-1.0".into()),
        spdx_id: "SPDXRef-DOCUMENT".into(),
        name: format!("sbomvert-{}-{}", distro.os_name, distro.version_id),
        document_namespace: Some(format!(
            "https://sbomvert.invalid/spdxdocs/{}-{}",
            distro.os_name, distro.version_id
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
    }
}

/// The OS-marker package consumers use to learn the distribution.
pub(crate) fn os_marker_package(distro: &DistroInfo) -> SpdxPackage {
    SpdxPackage {
        spdx_id: "SPDXRef-OperatingSystem".into(),
        name: distro.os_name.to_string(),
        version_info: Some(distro.version_id.clone()),
        source_info: None,
        attribution_texts: vec![
            "Class: os-pkgs".into(),
            format!("Type: {}", distro.os_name),
        ],
        primary_package_purpose: Some(PURPOSE_OS.into()),
        external_refs: Vec::new(),
        extras: serde_json::Map::new(),
    }
}

/// The fully compliant pURL for one package.
fn reference_purl(pkg: &OsPackage, distro: &DistroInfo) -> String {
    let (package_type, namespace) = match distro.os_name {
        OsName::Debian => ("deb", "debian"),
        OsName::Alpine => ("apk", "alpine"),
    };
    let mut purl = PackageUrl::new(package_type, &pkg.name)
        .expect("database package names form valid purl names");
    purl.set_namespace(namespace).set_version(&pkg.version);
    if !pkg.arch.is_empty() {
        purl.push_qualifier("arch", &pkg.arch.to_ascii_lowercase())
            .expect("fresh qualifier");
    }
    purl.push_qualifier("distro", &distro.reference_distro_qualifier())
        .expect("fresh qualifier");
    crate::purl::serialize_purl(&purl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::purl::{parse_purl, validate_purl_text, Ecosystem};

    const STATUS: &str = "\
Package: passwd
Status: install ok installed
Priority: required
Section: admin
Maintainer: Shadow package maintainers <list@example.org>
Architecture: amd64
Version: 1:4.13+dfsg1-1
Source: shadow (1:4.13+dfsg1-1)
Description: change and administer password and group data
 This package includes passwd, chsh, chfn, and friends.

Package: bash
Status: install ok installed
Architecture: amd64
Version: 5.2.15-2+b7
Description: GNU Bourne Again SHell
";

    #[test]
    fn dpkg_source_field_forms() {
        let pkgs = parse_dpkg_status(STATUS).unwrap();
        assert_eq!(pkgs.len(), 2);
        assert_eq!(pkgs[0].name, "passwd");
        assert_eq!(pkgs[0].source_name, "shadow");
        assert_eq!(pkgs[0].source_version, "1:4.13+dfsg1-1");
        assert_eq!(pkgs[1].source_name, "bash");
        assert_eq!(pkgs[1].source_version, "5.2.15-2+b7");
    }

    #[test]
    fn dpkg_skips_non_installed_stanzas() {
        let text = "Package: gone\nStatus: deinstall ok config-files\nVersion: 1.0-1\n\nPackage: here\nStatus: install ok installed\nVersion: 2.0-1\n";
        let pkgs = parse_dpkg_status(text).unwrap();
        assert_eq!(pkgs.len(), 1);
        assert_eq!(pkgs[0].name, "here");
    }

    #[test]
    fn dpkg_rejects_malformed_stanzas() {
        assert!(matches!(
            parse_dpkg_status(" continuation first\nPackage: x\n"),
            Err(OsdbError::MalformedStanza { .. })
        ));
        assert!(matches!(
            parse_dpkg_status("Package: x\nStatus: install ok installed\n"),
            Err(OsdbError::MalformedStanza { .. })
        ));
        assert!(matches!(
            parse_dpkg_status("Version: 1.0\n"),
            Err(OsdbError::MalformedStanza { .. })
        ));
    }

    const INSTALLED: &str = "\
C:Q1abcdef=
P:ssl_client
V:1.36.1-r29
A:x86_64
o:busybox
t:1714000000

C:Q1ghijkl=
P:musl
V:1.2.5-r0
A:x86_64
";

    #[test]
    fn apk_origin_and_default_source() {
        let pkgs = parse_apk_installed(INSTALLED).unwrap();
        assert_eq!(pkgs.len(), 2);
        assert_eq!(pkgs[0].name, "ssl_client");
        assert_eq!(pkgs[0].source_name, "busybox");
        assert_eq!(pkgs[1].source_name, "musl");
    }

    #[test]
    fn apk_rejects_records_without_identity() {
        assert!(matches!(
            parse_apk_installed("V:1.0-r0\n"),
            Err(OsdbError::MalformedRecord { .. })
        ));
        assert!(matches!(
            parse_apk_installed("P:thing\n"),
            Err(OsdbError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn distro_qualifier_spellings() {
        let bookworm = DistroInfo::debian("12");
        assert_eq!(DistroInfo::from_distro_qualifier("bookworm"), Some(bookworm.clone()));
        assert_eq!(DistroInfo::from_distro_qualifier("debian-12"), Some(bookworm.clone()));
        assert_eq!(DistroInfo::from_distro_qualifier("debian-12.11"), Some(bookworm));
        let alpine = DistroInfo::alpine("3.20");
        assert_eq!(DistroInfo::from_distro_qualifier("alpine-3.20"), Some(alpine.clone()));
        assert_eq!(DistroInfo::from_distro_qualifier("3.20"), Some(alpine.clone()));
        assert_eq!(DistroInfo::from_distro_qualifier("3.20.3"), Some(alpine));
        assert_eq!(DistroInfo::from_distro_qualifier("mystery-os"), None);
        assert_eq!(DistroInfo::from_distro_qualifier("12"), None);
    }

    #[test]
    fn reference_sbom_shape() {
        let pkgs = parse_dpkg_status(STATUS).unwrap();
        let doc = generate_reference_sbom(&pkgs, &DistroInfo::debian("12"));
        assert_eq!(doc.packages.len(), pkgs.len() + 1);
        let marker = &doc.packages[0];
        assert_eq!(
            marker.attribution_texts,
            vec!["Class: os-pkgs".to_string(), "Type: debian".to_string()]
        );
        assert_eq!(marker.primary_package_purpose.as_deref(), Some(PURPOSE_OS));
        for pkg in &doc.packages[1..] {
            let locator = &pkg.external_refs[0].reference_locator;
            let issues = validate_purl_text(locator, Ecosystem::Debian).unwrap();
            assert!(issues.is_empty(), "{locator}: {issues:?}");
        }
        let passwd = parse_purl(&doc.packages[1].external_refs[0].reference_locator).unwrap();
        assert_eq!(passwd.version(), Some("1:4.13+dfsg1-1"));
        assert_eq!(passwd.qualifier("distro"), Some("bookworm"));
        assert_eq!(
            doc.packages[1].source_info.as_deref(),
            Some("built package from: shadow 1:4.13+dfsg1-1")
        );
    }

    #[test]
    fn alpine_reference_purls_use_version_id() {
        let pkgs = parse_apk_installed(INSTALLED).unwrap();
        let doc = generate_reference_sbom(&pkgs, &DistroInfo::alpine("3.20"));
        for pkg in &doc.packages[1..] {
            let locator = &pkg.external_refs[0].reference_locator;
            let issues = validate_purl_text(locator, Ecosystem::Alpine).unwrap();
            assert!(issues.is_empty(), "{locator}: {issues:?}");
            let purl = parse_purl(locator).unwrap();
            assert_eq!(purl.qualifier("distro"), Some("3.20"));
        }
    }
}

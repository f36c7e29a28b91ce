//! SPDX 2.x JSON documents, modeled losslessly.
//!
//! Every struct carries a flattened `extras` map, so fields this tool does
//! not interpret survive a parse/serialize round trip byte-identically in
//! content (key order is normalized to sorted, indentation to two spaces).
//! [`package_identifier_view`] answers the question interoperability hinges
//! on: given a document in some producer's dialect, which fields would a
//! particular consumer actually read to identify a package?

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialect::Dialect;
use crate::purl::{parse_purl, strip_epoch};

/// Timestamp used for generated documents; fixed so output is reproducible.
pub const FIXED_CREATED: &str = "2025-01-01T00:00:00Z";
/// `primaryPackagePurpose` for installed packages.
pub const PURPOSE_INSTALL: &str = "INSTALL";
/// `primaryPackagePurpose` for the OS-marker package.
pub const PURPOSE_OS: &str = "OPERATING-SYSTEM";

/// Errors from parsing or interpreting SPDX documents.
#[derive(Debug, Error)]
pub enum SpdxError {
    /// The input is not well-formed JSON.
    #[error("malformed JSON: {0}")]
    MalformedJson(#[from] serde_json::Error),
    /// A field SPDX requires is absent.
    #[error("missing required field {0}")]
    MissingRequiredField(String),
    /// A relationship names an element id the document does not define.
    #[error("relationship references undefined element {0}")]
    DanglingReference(String),
    /// Two elements share an SPDX id.
    #[error("duplicate SPDX id {0}")]
    DuplicateId(String),
    /// The consumer dialect reads `sourceInfo`, and the package has none.
    #[error("package {0} has no sourceInfo, which this consumer requires")]
    MissingSourceInfo(String),
    /// No field combination yields a package identity for this consumer.
    #[error("package {0} carries no usable identity for this consumer")]
    MissingIdentity(String),
}

/// `creationInfo` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub struct CreationInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub creators: Vec<String>,
    #[serde(flatten)]
    pub extras: serde_json::Map<String, serde_json::Value>,
}

/// One entry of a package's `externalRefs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExternalRef {
    pub reference_category: String,
    pub reference_type: String,
    pub reference_locator: String,
    #[serde(flatten)]
    pub extras: serde_json::Map<String, serde_json::Value>,
}

/// One SPDX package.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub struct SpdxPackage {
    #[serde(rename = "SPDXID")]
    pub spdx_id: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version_info: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_info: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attribution_texts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primary_package_purpose: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external_refs: Vec<ExternalRef>,
    #[serde(flatten)]
    pub extras: serde_json::Map<String, serde_json::Value>,
}

/// One SPDX file entry. Carried through conversions untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpdxFile {
    #[serde(rename = "SPDXID")]
    pub spdx_id: String,
    pub file_name: String,
    #[serde(flatten)]
    pub extras: serde_json::Map<String, serde_json::Value>,
}

/// One SPDX relationship.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpdxRelationship {
    pub spdx_element_id: String,
    pub relationship_type: String,
    pub related_spdx_element: String,
    #[serde(flatten)]
    pub extras: serde_json::Map<String, serde_json::Value>,
}

/// An SPDX 2.x document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpdxDocument {
    pub spdx_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_license: Option<String>,
    #[serde(rename = "SPDXID")]
    pub spdx_id: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub document_namespace: Option<String>,
    #[serde(default)]
    pub creation_info: CreationInfo,
    /// Always serialized, even when empty: consumers break on its absence.
    #[serde(default)]
    pub packages: Vec<SpdxPackage>,
    #[serde(default)]
    pub files: Vec<SpdxFile>,
    #[serde(default)]
    pub relationships: Vec<SpdxRelationship>,
    #[serde(flatten)]
    pub extras: serde_json::Map<String, serde_json::Value>,
}

impl SpdxDocument {
    /// Packages other than the OS marker.
    pub fn binary_packages(&self) -> impl Iterator<Item = &SpdxPackage> {
        self.packages.iter().filter(|p| !is_os_marker(p))
    }
}

/// Parses and validates an SPDX JSON document.
///
/// Beyond JSON well-formedness this checks the fields the SPDX spec
/// requires (`spdxVersion`, `SPDXID`, `name`, and per-package `SPDXID` and
/// `name`), uniqueness of element ids, and that every relationship refers
/// to a defined element.
///
/// # Examples
///
/// ```
/// let doc = sbomvert::spdx::parse_spdx(
///     r#"{"spdxVersion": "SPDX-2.3", "SPDXID": "SPDXRef-DOCUMENT",
///         "name": "demo", "packages": [], "vendorField": 7}"#,
/// )
/// .unwrap();
/// assert_eq!(doc.extras["vendorField"], 7);
/// ```
pub fn parse_spdx(text: &str) -> Result<SpdxDocument, SpdxError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    for field in ["spdxVersion", "SPDXID", "name"] {
        if value.get(field).and_then(|v| v.as_str()).is_none() {
            return Err(SpdxError::MissingRequiredField(field.into()));
        }
    }
    if let Some(pkgs) = value.get("packages") {
        let pkgs = pkgs
            .as_array()
            .ok_or_else(|| SpdxError::MissingRequiredField("packages (array)".into()))?;
        for (i, p) in pkgs.iter().enumerate() {
            for field in ["SPDXID", "name"] {
                if p.get(field).and_then(|v| v.as_str()).is_none() {
                    return Err(SpdxError::MissingRequiredField(format!(
                        "packages[{i}].{field}"
                    )));
                }
            }
        }
    }
    let doc: SpdxDocument = serde_json::from_value(value)?;

    let mut seen = std::collections::BTreeSet::new();
    seen.insert(doc.spdx_id.as_str());
    for id in doc
        .packages
        .iter()
        .map(|p| p.spdx_id.as_str())
        .chain(doc.files.iter().map(|f| f.spdx_id.as_str()))
    {
        if !seen.insert(id) {
            return Err(SpdxError::DuplicateId(id.into()));
        }
    }
    for rel in &doc.relationships {
        for id in [rel.spdx_element_id.as_str(), rel.related_spdx_element.as_str()] {
            let known = seen.contains(id)
                || id == "NOASSERTION"
                || id == "NONE"
                || id.starts_with("DocumentRef-");
            if !known {
                return Err(SpdxError::DanglingReference(id.into()));
            }
        }
    }
    Ok(doc)
}

/// Serializes a document as pretty-printed JSON with sorted extra keys and
/// a trailing newline. Serializing a just-parsed document is content-lossless.
#[must_use]
pub fn serialize_spdx(doc: &SpdxDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("SPDX document serializes");
    out.push('\n');
    out
}

/// The first pURL external reference of a package, if any.
#[must_use]
pub fn find_purl(package: &SpdxPackage) -> Option<&str> {
    package
        .external_refs
        .iter()
        .find(|r| r.reference_type == "purl")
        .map(|r| r.reference_locator.as_str())
}

/// Whether a package is the OS-marker entry rather than an installed
/// package.
#[must_use]
pub fn is_os_marker(package: &SpdxPackage) -> bool {
    package
        .attribution_texts
        .iter()
        .any(|t| t == "Class: os-pkgs")
        || package.primary_package_purpose.as_deref() == Some(PURPOSE_OS)
}

/// Splits a `built package from: <name> <version>` string.
#[must_use]
pub fn parse_source_info(source_info: &str) -> Option<(&str, &str)> {
    let rest = source_info.strip_prefix("built package from: ")?;
    rest.rsplit_once(' ')
}

/// The fields a consumer keys its advisory lookup on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityFields {
    /// Package name the consumer looks up; the source name for consumers
    /// that read `sourceInfo`.
    pub lookup_name: String,
    pub epoch: u32,
    /// Epoch-free version string.
    pub version: String,
    /// `(os_name, os_version)` when the consumer reads them from pURL
    /// qualifiers.
    pub os: Option<(String, String)>,
}

/// What a consumer in `dialect` would extract from `package` to identify
/// it, with that dialect's documented quirks.
///
/// Trivy-style consumers read only `sourceInfo` and fail without it;
/// Anchore-style consumers let `versionInfo` override the pURL version;
/// Scout-style consumers read `os_name`/`os_version` and ignore
/// `os_distro`.
///
/// # Examples
///
/// ```
/// use sbomvert::dialect::Dialect;
/// use sbomvert::spdx::{package_identifier_view, SpdxPackage};
///
/// let pkg = SpdxPackage {
///     spdx_id: "SPDXRef-p".into(),
///     name: "util-linux".into(),
///     source_info: Some("built package from: util-linux 2:2.38.1-5+deb12u1".into()),
///     ..Default::default()
/// };
/// let id = package_identifier_view(&pkg, Dialect::Trivy).unwrap();
/// assert_eq!(id.lookup_name, "util-linux");
/// assert_eq!(id.epoch, 2);
/// assert_eq!(id.version, "2.38.1-5+deb12u1");
/// ```
pub fn package_identifier_view(
    package: &SpdxPackage,
    dialect: Dialect,
) -> Result<IdentityFields, SpdxError> {
    if dialect == Dialect::Trivy {
        let info = package
            .source_info
            .as_deref()
            .ok_or_else(|| SpdxError::MissingSourceInfo(package.spdx_id.clone()))?;
        let (name, full) = parse_source_info(info)
            .ok_or_else(|| SpdxError::MissingIdentity(package.spdx_id.clone()))?;
        let (epoch, version) = strip_epoch(full);
        return Ok(IdentityFields {
            lookup_name: name.to_string(),
            epoch: epoch.unwrap_or(0),
            version: version.to_string(),
            os: None,
        });
    }

    let purl = find_purl(package).and_then(|text| parse_purl(text).ok());
    let (lookup_name, purl_version, os) = match &purl {
        Some(p) => {
            let os = match dialect {
                // os_distro is ignored even when present.
                Dialect::Docker => match (p.qualifier("os_name"), p.qualifier("os_version")) {
                    (Some(n), Some(v)) => Some((n.to_string(), v.to_string())),
                    _ => None,
                },
                _ => None,
            };
            (p.name().to_string(), p.version().map(str::to_string), os)
        }
        None => (package.name.clone(), None, None),
    };

    let version_info_wins = matches!(
        dialect,
        Dialect::Anchore | Dialect::Google | Dialect::Amazon
    );
    let full = if version_info_wins {
        package
            .version_info
            .clone()
            .or(purl_version)
    } else {
        purl_version.or_else(|| package.version_info.clone())
    }
    .ok_or_else(|| SpdxError::MissingIdentity(package.spdx_id.clone()))?;

    let (mut epoch, version) = strip_epoch(&full);
    if epoch.is_none() {
        if let Some(p) = &purl {
            epoch = p
                .qualifier("epoch")
                .and_then(|e| e.parse::<u32>().ok());
        }
    }
    Ok(IdentityFields {
        lookup_name,
        epoch: epoch.unwrap_or(0),
        version: version.to_string(),
        os,
    })
}

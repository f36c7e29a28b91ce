//! Package URL parsing, serialization, canonicalization, and compliance
//! validation.
//!
//! A pURL is `pkg:type/namespace/name@version?qualifiers#subpath`. Components
//! are stored decoded; percent-encoding exists only in the textual form. The
//! canonical serializer sorts qualifiers and encodes reserved characters
//! (`"++"` becomes `"%2B%2B"`) while leaving the `:` separating a Debian
//! epoch from the rest of the version unencoded.
//!
//! [`validate_purl`] classifies the ways real SBOM producers deviate from
//! that form into three issue classes: invalid format (wrong type, stray
//! qualifiers, bad casing), incomplete data (missing namespace, arch, or
//! distro), and incorrect information (a self-referential `upstream` that
//! merely restates the package's own name). [`validate_purl_text`] adds the
//! checks only visible before decoding, such as unencoded names.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::dialect::CanonicalPackage;
use crate::osdb::{DistroInfo, OsName};

/// Errors from parsing or canonicalizing pURLs.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PurlError {
    /// Text is not a structurally valid pURL.
    #[error("malformed purl: {0}")]
    Malformed(String),
    /// An epoch is present both as a version prefix and as a qualifier, with
    /// different values.
    #[error("conflicting epoch: version says {version_epoch}, qualifier says {qualifier_epoch}")]
    ConflictingEpoch {
        version_epoch: u32,
        qualifier_epoch: u32,
    },
    /// Neither type, namespace, nor sidecar identifies a supported ecosystem.
    #[error("cannot determine ecosystem for purl type {0:?}")]
    UnknownEcosystem(String),
    /// The pURL carries no version and no sidecar supplies one.
    #[error("purl for {0:?} has no version")]
    MissingVersion(String),
}

fn malformed(msg: impl Into<String>) -> PurlError {
    PurlError::Malformed(msg.into())
}

/// Package ecosystems this crate validates ecosystem-specifically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ecosystem {
    Debian,
    Alpine,
}

/// The compliance issue taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum IssueCategory {
    /// The pURL deviates from the specification's syntax or vocabulary.
    InvalidFormat,
    /// Information needed to identify the package is absent.
    IncompleteData,
    /// A field is present but its value is wrong.
    IncorrectInformation,
    /// Identity is carried in producer-specific fields outside the pURL.
    FormatReliance,
}

/// One compliance finding for a pURL or SBOM field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplianceIssue {
    pub category: IssueCategory,
    /// Stable short identifier, e.g. `"nonstandard-type"`.
    pub code: &'static str,
    /// Human-readable explanation.
    pub message: String,
    /// The field that triggered the issue, e.g. `"qualifiers.arch"`.
    pub field: String,
}

impl ComplianceIssue {
    fn new(
        category: IssueCategory,
        code: &'static str,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        ComplianceIssue {
            category,
            code,
            message: message.into(),
            field: field.into(),
        }
    }
}

/// A parsed Package URL with all components stored decoded.
///
/// Qualifiers keep their textual insertion order internally (producers
/// disagree on ordering, and that order is itself a fingerprint), but map
/// equality and canonical serialization are order-independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageUrl {
    package_type: String,
    namespace: Option<String>,
    name: String,
    version: Option<String>,
    qualifiers: IndexMap<String, String>,
    subpath: Option<String>,
}

impl PackageUrl {
    /// Starts a pURL from its two mandatory components.
    pub fn new(package_type: &str, name: &str) -> Result<Self, PurlError> {
        let package_type = validate_type(package_type)?;
        if name.is_empty() {
            return Err(malformed("empty name"));
        }
        Ok(PackageUrl {
            package_type,
            namespace: None,
            name: name.to_string(),
            version: None,
            qualifiers: IndexMap::new(),
            subpath: None,
        })
    }

    /// Sets the namespace; empty segments are dropped.
    pub fn set_namespace(&mut self, namespace: &str) -> &mut Self {
        let cleaned: Vec<&str> = namespace.split('/').filter(|s| !s.is_empty()).collect();
        self.namespace = if cleaned.is_empty() {
            None
        } else {
            Some(cleaned.join("/"))
        };
        self
    }

    /// Sets the version (decoded form, may carry an `epoch:` prefix).
    pub fn set_version(&mut self, version: &str) -> &mut Self {
        self.version = if version.is_empty() {
            None
        } else {
            Some(version.to_string())
        };
        self
    }

    /// Appends a qualifier, preserving insertion order.
    pub fn push_qualifier(&mut self, key: &str, value: &str) -> Result<&mut Self, PurlError> {
        let key = validate_qualifier_key(key)?;
        if value.is_empty() {
            return Err(malformed(format!("empty value for qualifier {key:?}")));
        }
        if self.qualifiers.contains_key(&key) {
            return Err(malformed(format!("duplicate qualifier key {key:?}")));
        }
        self.qualifiers.insert(key, value.to_string());
        Ok(self)
    }

    /// Removes a qualifier; a no-op when the key is absent.
    pub fn remove_qualifier(&mut self, key: &str) -> &mut Self {
        self.qualifiers.shift_remove(key);
        self
    }

    /// Sets the subpath; `.`, `..`, and empty segments are dropped.
    pub fn set_subpath(&mut self, subpath: &str) -> &mut Self {
        let cleaned: Vec<&str> = subpath
            .split('/')
            .filter(|s| !s.is_empty() && *s != "." && *s != "..")
            .collect();
        self.subpath = if cleaned.is_empty() {
            None
        } else {
            Some(cleaned.join("/"))
        };
        self
    }

    #[must_use]
    pub fn package_type(&self) -> &str {
        &self.package_type
    }

    #[must_use]
    pub fn namespace(&self) -> Option<&str> {
        self.namespace.as_deref()
    }

    #[must_use]
    pub fn name(&self) -> &str {
        &self.name
    }

    #[must_use]
    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    #[must_use]
    pub fn qualifiers(&self) -> &IndexMap<String, String> {
        &self.qualifiers
    }

    #[must_use]
    pub fn qualifier(&self, key: &str) -> Option<&str> {
        self.qualifiers.get(key).map(String::as_str)
    }

    #[must_use]
    pub fn subpath(&self) -> Option<&str> {
        self.subpath.as_deref()
    }

    /// The ecosystem implied by type or namespace, if any.
    #[must_use]
    pub fn ecosystem(&self) -> Option<Ecosystem> {
        match self.package_type.as_str() {
            "deb" | "dpkg" => Some(Ecosystem::Debian),
            "apk" => Some(Ecosystem::Alpine),
            _ => match self.namespace.as_deref() {
                Some("debian") => Some(Ecosystem::Debian),
                Some("alpine") => Some(Ecosystem::Alpine),
                _ => None,
            },
        }
    }
}

impl fmt::Display for PackageUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_purl(self))
    }
}

fn validate_type(t: &str) -> Result<String, PurlError> {
    if t.is_empty() {
        return Err(malformed("empty type"));
    }
    let lowered = t.to_ascii_lowercase();
    if lowered.starts_with(|c: char| c.is_ascii_digit()) {
        return Err(malformed(format!("type {t:?} starts with a digit")));
    }
    if let Some(bad) = lowered
        .chars()
        .find(|c| !(c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '.' | '-' | '_')))
    {
        return Err(malformed(format!("invalid character {bad:?} in type {t:?}")));
    }
    Ok(lowered)
}

fn validate_qualifier_key(key: &str) -> Result<String, PurlError> {
    if key.is_empty() {
        return Err(malformed("empty qualifier key"));
    }
    let lowered = key.to_ascii_lowercase();
    if let Some(bad) = lowered
        .chars()
        .find(|c| !(c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '.' | '-' | '_')))
    {
        return Err(malformed(format!(
            "invalid character {bad:?} in qualifier key {key:?}"
        )));
    }
    Ok(lowered)
}

/// The undecoded spans of a pURL, used for parsing and for the textual
/// compliance checks that decoding would erase.
pub(crate) struct RawParts<'a> {
    pub package_type: &'a str,
    /// Namespace segments, undecoded, possibly empty.
    pub namespace: Vec<&'a str>,
    pub name: &'a str,
    pub version: Option<&'a str>,
    /// Key/value pairs in textual order, undecoded values.
    pub qualifiers: Vec<(&'a str, &'a str)>,
    pub subpath: Option<&'a str>,
}

pub(crate) fn split_raw(text: &str) -> Result<RawParts<'_>, PurlError> {
    let rest = text
        .strip_prefix("pkg:")
        .or_else(|| text.strip_prefix("PKG:"))
        .ok_or_else(|| malformed("missing \"pkg:\" scheme"))?;
    let rest = rest.trim_start_matches('/');
    if rest.is_empty() {
        return Err(malformed("nothing after scheme"));
    }

    let (rest, subpath) = match rest.rsplit_once('#') {
        Some((r, s)) => (r, Some(s)),
        None => (rest, None),
    };
    let (rest, raw_qualifiers) = match rest.rsplit_once('?') {
        Some((r, q)) => (r, Some(q)),
        None => (rest, None),
    };
    let (package_type, rest) = rest
        .split_once('/')
        .ok_or_else(|| malformed("missing '/' after type"))?;
    let (path, version) = match rest.rsplit_once('@') {
        Some((p, v)) => {
            if v.is_empty() {
                return Err(malformed("empty version after '@'"));
            }
            (p, Some(v))
        }
        None => (rest, None),
    };
    let mut segments: Vec<&str> = path.split('/').collect();
    let name = segments.pop().unwrap_or("");
    if name.is_empty() {
        return Err(malformed("empty name"));
    }
    segments.retain(|s| !s.is_empty());

    let mut qualifiers = Vec::new();
    if let Some(q) = raw_qualifiers {
        for pair in q.split('&') {
            if pair.is_empty() {
                continue;
            }
            let (key, value) = pair.split_once('=').unwrap_or((pair, ""));
            if key.is_empty() {
                return Err(malformed("empty qualifier key"));
            }
            // A key with an empty value counts as absent per the pURL rules.
            if value.is_empty() {
                continue;
            }
            qualifiers.push((key, value));
        }
    }

    Ok(RawParts {
        package_type,
        namespace: segments,
        name,
        version,
        qualifiers,
        subpath,
    })
}

fn percent_decode(s: &str) -> Result<String, PurlError> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = bytes
                .get(i + 1..i + 3)
                .ok_or_else(|| malformed(format!("truncated percent-escape in {s:?}")))?;
            let hi = (hex[0] as char)
                .to_digit(16)
                .ok_or_else(|| malformed(format!("invalid percent-escape in {s:?}")))?;
            let lo = (hex[1] as char)
                .to_digit(16)
                .ok_or_else(|| malformed(format!("invalid percent-escape in {s:?}")))?;
            out.push((hi * 16 + lo) as u8);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| malformed(format!("percent-escapes in {s:?} are not UTF-8")))
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

fn percent_encode(s: &str, keep: &[u8]) -> String {
    let mut out = String::with_capacity(s.len());
    for &b in s.as_bytes() {
        if is_unreserved(b) || keep.contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

/// Parses a pURL from its textual form.
///
/// # Examples
///
/// ```
/// use sbomvert::purl::parse_purl;
///
/// let p = parse_purl("pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&distro=bookworm")
///     .unwrap();
/// assert_eq!(p.name(), "python3-magics++");
/// assert_eq!(p.version(), Some("2:1.5.8-1"));
/// assert_eq!(p.qualifier("distro"), Some("bookworm"));
/// ```
pub fn parse_purl(text: &str) -> Result<PackageUrl, PurlError> {
    let raw = split_raw(text)?;
    let mut purl = PackageUrl::new(raw.package_type, &percent_decode(raw.name)?)?;
    if !raw.namespace.is_empty() {
        let decoded: Result<Vec<String>, PurlError> =
            raw.namespace.iter().map(|s| percent_decode(s)).collect();
        purl.set_namespace(&decoded?.join("/"));
    }
    if let Some(v) = raw.version {
        purl.set_version(&percent_decode(v)?);
    }
    for (key, value) in raw.qualifiers {
        let value = percent_decode(value)?;
        purl.push_qualifier(key, &value)?;
    }
    if let Some(s) = raw.subpath {
        let decoded: Result<Vec<String>, PurlError> = s
            .split('/')
            .filter(|seg| !seg.is_empty())
            .map(percent_decode)
            .collect();
        purl.set_subpath(&decoded?.join("/"));
    }
    Ok(purl)
}

/// How to render a pURL as text. The default is the canonical form; the
/// other knobs exist so dialect emission can reproduce tool-shaped output.
#[derive(Debug, Clone)]
pub struct PurlStyle {
    /// Sort qualifiers lexicographically (canonical) instead of emitting
    /// insertion order.
    pub sort_qualifiers: bool,
    /// Percent-encode the `:` inside the version.
    pub encode_version_colon: bool,
    /// Percent-encode reserved characters in name and namespace. Disabling
    /// reproduces producers that emit names like `python3-magics++` raw.
    pub encode_reserved_in_name: bool,
}

impl Default for PurlStyle {
    fn default() -> Self {
        PurlStyle {
            sort_qualifiers: true,
            encode_version_colon: false,
            encode_reserved_in_name: true,
        }
    }
}

/// Serializes a pURL in canonical form: lowercase type, reserved characters
/// in name/namespace percent-encoded, `:` in the version left raw, and
/// qualifiers sorted by key.
///
/// # Examples
///
/// ```
/// use sbomvert::purl::{parse_purl, serialize_purl};
///
/// let p = parse_purl("pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?distro=bookworm&arch=amd64")
///     .unwrap();
/// assert_eq!(
///     serialize_purl(&p),
///     "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&distro=bookworm"
/// );
/// ```
#[must_use]
pub fn serialize_purl(p: &PackageUrl) -> String {
    serialize_purl_with(p, &PurlStyle::default())
}

/// Serializes a pURL under an explicit [`PurlStyle`].
#[must_use]
pub fn serialize_purl_with(p: &PackageUrl, style: &PurlStyle) -> String {
    let mut out = String::from("pkg:");
    out.push_str(&p.package_type);
    if let Some(ns) = &p.namespace {
        for segment in ns.split('/') {
            out.push('/');
            if style.encode_reserved_in_name {
                out.push_str(&percent_encode(segment, &[]));
            } else {
                out.push_str(segment);
            }
        }
    }
    out.push('/');
    if style.encode_reserved_in_name {
        out.push_str(&percent_encode(&p.name, &[]));
    } else {
        out.push_str(&p.name);
    }
    if let Some(v) = &p.version {
        out.push('@');
        let keep: &[u8] = if style.encode_version_colon {
            &[]
        } else {
            &[b':']
        };
        out.push_str(&percent_encode(v, keep));
    }
    if !p.qualifiers.is_empty() {
        out.push('?');
        let mut pairs: Vec<(&String, &String)> = p.qualifiers.iter().collect();
        if style.sort_qualifiers {
            pairs.sort_by_key(|(k, _)| k.as_str());
        }
        let encoded: Vec<String> = pairs
            .iter()
            .map(|(k, v)| format!("{k}={}", percent_encode(v, &[b':', b'/'])))
            .collect();
        out.push_str(&encoded.join("&"));
    }
    if let Some(s) = &p.subpath {
        out.push('#');
        let encoded: Vec<String> = s.split('/').map(|seg| percent_encode(seg, &[])).collect();
        out.push_str(&encoded.join("/"));
    }
    out
}

/// Qualifier keys with a defined meaning for deb/apk pURLs.
const KNOWN_QUALIFIERS: &[&str] = &[
    "arch",
    "distro",
    "upstream",
    "epoch",
    "repository_url",
    "checksum",
];

fn is_debian_codename(value: &str) -> bool {
    !value.is_empty() && value.chars().all(|c| c.is_ascii_lowercase())
}

fn is_alpine_release(value: &str) -> bool {
    value == "edge"
        || (!value.is_empty()
            && value.chars().all(|c| c.is_ascii_digit() || c == '.')
            && !value.starts_with('.')
            && !value.ends_with('.'))
}

/// Validates a parsed pURL against the compliant reference shape for the
/// given ecosystem. Never fails; returns the (possibly empty) issue list.
#[must_use]
pub fn validate_purl(p: &PackageUrl, ecosystem: Ecosystem) -> Vec<ComplianceIssue> {
    use IssueCategory::*;
    let mut issues = Vec::new();
    let expected_type = match ecosystem {
        Ecosystem::Debian => "deb",
        Ecosystem::Alpine => "apk",
    };
    if p.package_type != expected_type {
        issues.push(ComplianceIssue::new(
            InvalidFormat,
            "nonstandard-type",
            "type",
            format!(
                "type {:?} where {expected_type:?} is the standard type",
                p.package_type
            ),
        ));
    }
    if p.namespace.is_none() {
        issues.push(ComplianceIssue::new(
            IncompleteData,
            "missing-namespace",
            "namespace",
            "no namespace identifying the distribution vendor",
        ));
    }
    if p.version.is_none() {
        issues.push(ComplianceIssue::new(
            IncompleteData,
            "missing-version",
            "version",
            "no version; the package cannot be matched against advisories",
        ));
    }
    if ecosystem == Ecosystem::Debian && p.qualifiers.contains_key("epoch") {
        issues.push(ComplianceIssue::new(
            InvalidFormat,
            "epoch-qualifier",
            "qualifiers.epoch",
            "the epoch qualifier does not apply to Debian packages; the epoch \
             belongs in the version",
        ));
    }
    for key in ["arch", "distro"] {
        match p.qualifiers.get(key) {
            None => issues.push(ComplianceIssue::new(
                IncompleteData,
                if key == "arch" {
                    "missing-arch"
                } else {
                    "missing-distro"
                },
                format!("qualifiers.{key}"),
                format!("no {key} qualifier"),
            )),
            Some(value) => {
                if value.chars().any(|c| c.is_ascii_uppercase()) {
                    issues.push(ComplianceIssue::new(
                        InvalidFormat,
                        "uppercase-qualifier-value",
                        format!("qualifiers.{key}"),
                        format!("qualifier value {value:?} contains uppercase characters"),
                    ));
                }
            }
        }
    }
    if let Some(distro) = p.qualifiers.get("distro") {
        let lowered = distro.to_ascii_lowercase();
        let compliant = match ecosystem {
            Ecosystem::Debian => is_debian_codename(&lowered),
            Ecosystem::Alpine => is_alpine_release(&lowered),
        };
        if !compliant {
            issues.push(ComplianceIssue::new(
                InvalidFormat,
                "distro-not-codename",
                "qualifiers.distro",
                format!(
                    "distro {distro:?} is not a release identifier (expected e.g. \
                     \"bookworm\" for Debian or \"3.19\" for Alpine)"
                ),
            ));
        }
    }
    for key in p.qualifiers.keys() {
        if !KNOWN_QUALIFIERS.contains(&key.as_str()) {
            issues.push(ComplianceIssue::new(
                InvalidFormat,
                "unknown-qualifier",
                format!("qualifiers.{key}"),
                format!("qualifier {key:?} has no defined meaning for {expected_type} pURLs"),
            ));
        }
    }
    if ecosystem == Ecosystem::Debian {
        if let Some(upstream) = p.qualifiers.get("upstream") {
            if upstream_is_self_referential(upstream, &p.name, p.version.as_deref()) {
                issues.push(ComplianceIssue::new(
                    IncorrectInformation,
                    "self-referential-upstream",
                    "qualifiers.upstream",
                    format!(
                        "upstream {upstream:?} restates the package's own name instead \
                         of naming its source package"
                    ),
                ));
            }
        }
    }
    issues
}

/// True when `upstream` is derived from the package's own name and version
/// rather than naming a distinct source package.
pub(crate) fn upstream_is_self_referential(
    upstream: &str,
    name: &str,
    version: Option<&str>,
) -> bool {
    if upstream == name {
        return true;
    }
    let core = match upstream.strip_suffix(".src.dpkg") {
        Some(core) => core,
        None => upstream,
    };
    if core == name {
        return true;
    }
    if let Some(version) = version {
        let epoch_free = strip_epoch(version).1;
        if core == format!("{name}-{epoch_free}") {
            return true;
        }
    }
    false
}

/// Validates the textual form, adding encoding-level checks that are
/// invisible after decoding. Fails only when the text does not parse at all.
pub fn validate_purl_text(
    text: &str,
    ecosystem: Ecosystem,
) -> Result<Vec<ComplianceIssue>, PurlError> {
    let parsed = parse_purl(text)?;
    let mut issues = validate_purl(&parsed, ecosystem);
    let raw = split_raw(text)?;
    if raw
        .name
        .bytes()
        .any(|b| !(is_unreserved(b) || b == b'%'))
    {
        issues.push(ComplianceIssue::new(
            IssueCategory::InvalidFormat,
            "unencoded-name",
            "name",
            format!(
                "name {:?} contains reserved characters that must be percent-encoded",
                raw.name
            ),
        ));
    }
    if let Some(v) = raw.version {
        if v.contains("%3A") || v.contains("%3a") {
            issues.push(ComplianceIssue::new(
                IssueCategory::InvalidFormat,
                "encoded-version-colon",
                "version",
                "the ':' separating the epoch must not be percent-encoded",
            ));
        }
    }
    Ok(issues)
}

/// Splits a leading `epoch:` prefix off a version string. Returns
/// `(epoch, rest)`; epoch is `None` when no all-digit prefix exists.
#[must_use]
pub fn strip_epoch(version: &str) -> (Option<u32>, &str) {
    if let Some((e, rest)) = version.split_once(':') {
        if !e.is_empty() && e.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(epoch) = e.parse() {
                return (Some(epoch), rest);
            }
        }
    }
    (None, version)
}

/// SPDX package fields a producer may use to carry identity outside the
/// pURL, consulted during canonicalization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpdxPackageExtras {
    /// The SPDX `versionInfo` field.
    pub version_info: Option<String>,
    /// The SPDX `sourceInfo` field.
    pub source_info: Option<String>,
}

/// Splits an `upstream` qualifier into source name and optional source
/// version. Handles the plain form (`magics-python`), the `name@version`
/// form, and the `<name>-<version>.src.dpkg` form.
#[must_use]
pub fn parse_upstream(upstream: &str) -> (String, Option<String>) {
    if let Some((name, version)) = upstream.split_once('@') {
        if !name.is_empty() && !version.is_empty() {
            return (name.to_string(), Some(version.to_string()));
        }
    }
    let core = upstream.strip_suffix(".src.dpkg").unwrap_or(upstream);
    if upstream.ends_with(".src.dpkg") {
        // "<source>-<version>.src.dpkg": split at the first '-' that starts
        // a parseable Debian version.
        let bytes = core.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            if b == b'-' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                let (head, tail) = (&core[..i], &core[i + 1..]);
                if !head.is_empty() && tail.parse::<crate::verscmp::DebVersion>().is_ok() {
                    return (head.to_string(), Some(tail.to_string()));
                }
            }
        }
        return (core.to_string(), None);
    }
    (upstream.to_string(), None)
}

/// Canonicalizes a parsed pURL (plus optional SPDX sidecar fields) into a
/// [`CanonicalPackage`].
///
/// The epoch is taken from the `epoch:` version prefix or from the `epoch`
/// qualifier; carrying both with different values is an error. Distro
/// qualifier spellings from every observed producer (`bookworm`,
/// `debian-12`, `debian-12.11`, the `os_name`/`os_version`/`os_distro`
/// triplet, `alpine-3.19`, `3.19`) map onto one [`DistroInfo`].
pub fn purl_to_canonical(
    p: &PackageUrl,
    sidecar: Option<&SpdxPackageExtras>,
) -> Result<CanonicalPackage, PurlError> {
    let ecosystem = p
        .ecosystem()
        .ok_or_else(|| PurlError::UnknownEcosystem(p.package_type.clone()))?;

    let full_version = match p.version.clone().or_else(|| {
        sidecar
            .and_then(|s| s.version_info.clone())
            .filter(|v| !v.is_empty())
    }) {
        Some(v) => v,
        None => return Err(PurlError::MissingVersion(p.name.clone())),
    };

    let (version_epoch, version) = strip_epoch(&full_version);
    let qualifier_epoch = p
        .qualifiers
        .get("epoch")
        .and_then(|v| v.parse::<u32>().ok());
    let epoch = match (version_epoch, qualifier_epoch) {
        (Some(v), Some(q)) if v != q => {
            return Err(PurlError::ConflictingEpoch {
                version_epoch: v,
                qualifier_epoch: q,
            });
        }
        (Some(v), _) => v,
        (None, Some(q)) => q,
        (None, None) => 0,
    };

    let arch = p.qualifiers.get("arch").map(|a| a.to_ascii_lowercase());

    let (distro, distro_raw) = match p.qualifiers.get("distro") {
        Some(value) => match DistroInfo::from_distro_qualifier(value) {
            Some(d) => (Some(d), None),
            None => (None, Some(value.clone())),
        },
        None => {
            let os_name = p.qualifiers.get("os_name").map(String::as_str);
            let os_version = p.qualifiers.get("os_version").map(String::as_str);
            let os_distro = p.qualifiers.get("os_distro").map(String::as_str);
            match os_name {
                Some(os) => match DistroInfo::from_os_fields(os, os_version, os_distro) {
                    Some(d) => (Some(d), None),
                    None => (None, Some(os.to_string())),
                },
                None => (None, None),
            }
        }
    };
    // An apk pURL can only describe an Alpine package even when the distro
    // qualifier is spelled ambiguously.
    if let Some(d) = &distro {
        if ecosystem == Ecosystem::Alpine && d.os_name == OsName::Debian {
            return Err(PurlError::Malformed(format!(
                "apk purl {:?} carries Debian distro {:?}",
                p.name, d.version_id
            )));
        }
    }

    let (source_name, source_version) = match p.qualifiers.get("upstream") {
        Some(upstream) => {
            if upstream_is_self_referential(upstream, &p.name, Some(&full_version)) {
                (p.name.clone(), None)
            } else {
                parse_upstream(upstream)
            }
        }
        None => (p.name.clone(), None),
    };

    Ok(CanonicalPackage {
        name: p.name.clone(),
        epoch,
        version: version.to_string(),
        arch,
        source_name,
        source_version,
        is_source_synthetic: false,
        os: Some(match ecosystem {
            Ecosystem::Debian => OsName::Debian,
            Ecosystem::Alpine => OsName::Alpine,
        }),
        distro,
        distro_raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REFERENCE: &str =
        "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&distro=bookworm";
    const AMAZON: &str = "pkg:dpkg/python3-magics++@1.5.8-1?arch=AMD64&epoch=1&upstream=python3-magics++-1.5.8-1.src.dpkg";
    const ANCHORE: &str = "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&upstream=magics-python&distro=debian-12";
    const GOOGLE: &str = "pkg:deb/debian/python3-magics%2B%2B@2%3A1.5.8-1?arch=amd64&distro=debian-12&upstream=magics-python";
    const MICROSOFT: &str = "pkg:deb/debian/python3-magics++@2:1.5.8-1";
    const SCOUT: &str = "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?os_version=12&os_name=debian&os_distro=bookworm";
    const TRIVY: &str = "pkg:deb/debian/python3-magics%2B%2B@1.5.8-1?arch=amd64&distro=debian-12.11&epoch=2";

    #[test]
    fn parses_reference_form() {
        let p = parse_purl(REFERENCE).unwrap();
        assert_eq!(p.package_type(), "deb");
        assert_eq!(p.namespace(), Some("debian"));
        assert_eq!(p.name(), "python3-magics++");
        assert_eq!(p.version(), Some("2:1.5.8-1"));
        assert_eq!(p.qualifier("arch"), Some("amd64"));
        assert_eq!(p.qualifier("distro"), Some("bookworm"));
        assert_eq!(p.subpath(), None);
    }

    #[test]
    fn parses_subpath_and_generic_types() {
        let p = parse_purl("pkg:npm/angular/animation@12.0.0?platform=linux#bundles").unwrap();
        assert_eq!(p.package_type(), "npm");
        assert_eq!(p.namespace(), Some("angular"));
        assert_eq!(p.name(), "animation");
        assert_eq!(p.version(), Some("12.0.0"));
        assert_eq!(p.qualifier("platform"), Some("linux"));
        assert_eq!(p.subpath(), Some("bundles"));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(parse_purl("pkg:").is_err());
        assert!(parse_purl("deb/debian/bash@5.0").is_err());
        assert!(parse_purl("pkg:deb/debian/@1.0").is_err());
        assert!(parse_purl("pkg:deb/debian/bash@").is_err());
        assert!(parse_purl("pkg:deb/debian/bash@1.0?a=1&a=2").is_err());
        assert!(parse_purl("pkg:deb/debian/ba%zzsh@1.0").is_err());
    }

    #[test]
    fn serializes_canonically() {
        let p = parse_purl("pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?distro=bookworm&arch=amd64")
            .unwrap();
        assert_eq!(serialize_purl(&p), REFERENCE);
        let plain = parse_purl("pkg:deb/debian/bash@5.2.15-2").unwrap();
        assert_eq!(serialize_purl(&plain), "pkg:deb/debian/bash@5.2.15-2");
    }

    #[test]
    fn dialect_styles_control_encoding_and_order() {
        let mut p = PackageUrl::new("deb", "python3-magics++").unwrap();
        p.set_namespace("debian").set_version("2:1.5.8-1");
        p.push_qualifier("arch", "amd64").unwrap();
        p.push_qualifier("distro", "debian-12").unwrap();
        p.push_qualifier("upstream", "magics-python").unwrap();
        let google = PurlStyle {
            sort_qualifiers: false,
            encode_version_colon: true,
            encode_reserved_in_name: true,
        };
        assert_eq!(serialize_purl_with(&p, &google), GOOGLE);
    }

    #[test]
    fn validates_amazon_issue_set() {
        let issues = validate_purl_text(AMAZON, Ecosystem::Debian).unwrap();
        let codes: Vec<&str> = issues.iter().map(|i| i.code).collect();
        for expected in [
            "nonstandard-type",
            "uppercase-qualifier-value",
            "epoch-qualifier",
            "self-referential-upstream",
            "missing-namespace",
            "missing-distro",
            "unencoded-name",
        ] {
            assert!(codes.contains(&expected), "missing {expected} in {codes:?}");
        }
        assert!(issues
            .iter()
            .any(|i| i.category == IssueCategory::IncorrectInformation));
        assert!(issues
            .iter()
            .any(|i| i.category == IssueCategory::InvalidFormat));
    }

    #[test]
    fn validates_microsoft_issue_set() {
        let issues = validate_purl_text(MICROSOFT, Ecosystem::Debian).unwrap();
        let codes: Vec<&str> = issues.iter().map(|i| i.code).collect();
        assert_eq!(
            codes,
            vec!["missing-arch", "missing-distro", "unencoded-name"]
        );
        assert!(issues
            .iter()
            .all(|i| i.category != IssueCategory::IncorrectInformation));
    }

    #[test]
    fn validates_reference_as_clean() {
        assert!(validate_purl_text(REFERENCE, Ecosystem::Debian)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn flags_encoded_version_colon() {
        let issues = validate_purl_text(GOOGLE, Ecosystem::Debian).unwrap();
        let codes: Vec<&str> = issues.iter().map(|i| i.code).collect();
        assert!(codes.contains(&"encoded-version-colon"));
        assert!(codes.contains(&"distro-not-codename"));
    }

    #[test]
    fn canonical_records_converge_across_producers() {
        for text in [REFERENCE, ANCHORE, GOOGLE, MICROSOFT, SCOUT, TRIVY] {
            let p = parse_purl(text).unwrap();
            let c = purl_to_canonical(&p, None).unwrap();
            assert_eq!(c.name, "python3-magics++", "{text}");
            assert_eq!(c.epoch, 2, "{text}");
            assert_eq!(c.version, "1.5.8-1", "{text}");
        }
        // The producer whose epoch qualifier is wrong converges only once
        // the dialect layer prefers the versionInfo sidecar; at this level
        // its pURL yields the stated (incorrect) epoch.
        let p = parse_purl(AMAZON).unwrap();
        let c = purl_to_canonical(&p, None).unwrap();
        assert_eq!(c.name, "python3-magics++");
        assert_eq!(c.epoch, 1);
        assert_eq!(c.version, "1.5.8-1");
        assert_eq!(c.source_name, "python3-magics++");
    }

    #[test]
    fn canonical_maps_distro_spellings() {
        for text in [TRIVY, SCOUT, REFERENCE, ANCHORE] {
            let c = purl_to_canonical(&parse_purl(text).unwrap(), None).unwrap();
            let d = c.distro.expect(text);
            assert_eq!(d.os_name, OsName::Debian, "{text}");
            assert_eq!(d.version_id, "12", "{text}");
            assert_eq!(d.codename.as_deref(), Some("bookworm"), "{text}");
        }
    }

    #[test]
    fn conflicting_epoch_is_an_error() {
        let p = parse_purl("pkg:deb/debian/x@2:1.0?epoch=3").unwrap();
        assert_eq!(
            purl_to_canonical(&p, None),
            Err(PurlError::ConflictingEpoch {
                version_epoch: 2,
                qualifier_epoch: 3
            })
        );
    }

    #[test]
    fn upstream_forms_parse() {
        assert_eq!(parse_upstream("magics-python"), ("magics-python".into(), None));
        assert_eq!(
            parse_upstream("glibc@2.36-9"),
            ("glibc".into(), Some("2.36-9".into()))
        );
        assert_eq!(
            parse_upstream("magics-python-1.5.8-1.src.dpkg"),
            ("magics-python".into(), Some("1.5.8-1".into()))
        );
    }

    #[test]
    fn unknown_distro_preserved_verbatim() {
        let p = parse_purl("pkg:deb/debian/bash@5.2.15-2?arch=amd64&distro=mystery-os").unwrap();
        let c = purl_to_canonical(&p, None).unwrap();
        assert_eq!(c.distro, None);
        assert_eq!(c.distro_raw.as_deref(), Some("mystery-os"));
    }

    prop_compose! {
        fn component()(s in "[a-zA-Z0-9+ .~:_/%-]{1,12}") -> String { s }
    }

    prop_compose! {
        fn arb_purl()(
            t in prop::sample::select(vec!["deb", "apk", "npm", "golang", "generic"]),
            ns in proptest::option::of("[a-z0-9.-]{1,8}"),
            name in component(),
            version in proptest::option::of(component()),
            quals in proptest::collection::btree_map("[a-z][a-z0-9_]{0,6}", "[a-zA-Z0-9.+:~-]{1,8}", 0..4),
            subpath in proptest::option::of("[a-z0-9]{1,5}(/[a-z0-9]{1,5}){0,2}"),
        ) -> PackageUrl {
            let mut p = PackageUrl::new(t, &name).unwrap();
            if let Some(ns) = ns { p.set_namespace(&ns); }
            if let Some(v) = version { p.set_version(&v); }
            for (k, v) in quals { p.push_qualifier(&k, &v).unwrap(); }
            if let Some(s) = subpath { p.set_subpath(&s); }
            p
        }
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(p in arb_purl()) {
            let text = serialize_purl(&p);
            let parsed = parse_purl(&text).unwrap();
            prop_assert_eq!(parsed, p);
        }

        #[test]
        fn serialization_is_deterministic(p in arb_purl()) {
            prop_assert_eq!(serialize_purl(&p), serialize_purl(&p));
        }
    }
}

//! Total ordering over Debian and Alpine package versions.
//!
//! Vulnerability queries hinge on comparing an installed version against a
//! fixed version, so both comparators implement the exact semantics of their
//! native tools: [`compare_debian`] follows `dpkg`'s algorithm (epoch-major,
//! alternating non-digit/digit segments, `~` before everything including end
//! of string) and [`compare_alpine`] follows `apk`'s token model (dotted
//! numeric components, single-letter suffix, `_alpha`-style suffixes,
//! trailing `-rN` revision).
//!
//! Unparsable versions are reported as errors rather than being sorted to an
//! arbitrary position; silent mis-sorting is precisely the failure mode that
//! turns into missed CVEs downstream.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Failure to interpret a version string.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VersionError {
    /// Version string is empty or whitespace.
    #[error("empty version string")]
    Empty,
    /// Text before the first `:` is not a nonnegative integer.
    #[error("invalid epoch in version {0:?}")]
    InvalidEpoch(String),
    /// A `-` separator with nothing after it.
    #[error("empty revision in version {0:?}")]
    EmptyRevision(String),
    /// A character outside the version alphabet.
    #[error("invalid character {ch:?} in version {version:?}")]
    InvalidCharacter { version: String, ch: char },
    /// Version does not match the expected grammar.
    #[error("unparsable version {0:?}")]
    Unparsable(String),
}

/// A Debian package version: `[epoch:]upstream[-revision]`.
///
/// The epoch splits at the first `:`, the revision at the last `-`. Ordering
/// and equality go through [`DebVersion::cmp_version`], so `"0:1.0"` equals
/// `"1.0"` and `"1.0"` equals `"1.0-0"` even though the parsed fields differ.
#[derive(Debug, Clone)]
pub struct DebVersion {
    /// Epoch; zero when absent.
    pub epoch: u32,
    /// Upstream version component.
    pub upstream: String,
    /// Debian revision; empty when absent.
    pub revision: String,
}

impl DebVersion {
    /// Compares two versions per the dpkg algorithm.
    #[must_use]
    pub fn cmp_version(&self, other: &Self) -> Ordering {
        self.epoch
            .cmp(&other.epoch)
            .then_with(|| verrevcmp(&self.upstream, &other.upstream))
            .then_with(|| verrevcmp(&self.revision, &other.revision))
    }
}

impl FromStr for DebVersion {
    type Err = VersionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(VersionError::Empty);
        }
        let (epoch, rest) = match s.split_once(':') {
            Some((e, rest)) => {
                if e.is_empty() || !e.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(VersionError::InvalidEpoch(s.to_string()));
                }
                let epoch = e
                    .parse::<u32>()
                    .map_err(|_| VersionError::InvalidEpoch(s.to_string()))?;
                (epoch, rest)
            }
            None => (0, s),
        };
        if rest.is_empty() {
            return Err(VersionError::Empty);
        }
        let (upstream, revision) = match rest.rsplit_once('-') {
            Some((up, rev)) => {
                if rev.is_empty() {
                    return Err(VersionError::EmptyRevision(s.to_string()));
                }
                if up.is_empty() {
                    return Err(VersionError::Unparsable(s.to_string()));
                }
                (up, rev)
            }
            None => (rest, ""),
        };
        // '-' is legal in both parts (the revision split is rightmost); ':'
        // is legal in the upstream only when an epoch is present.
        let check = |part: &str, allow_colon: bool| {
            part.chars()
                .find(|&c| {
                    !(c.is_ascii_alphanumeric()
                        || matches!(c, '.' | '+' | '~' | '-')
                        || (c == ':' && allow_colon))
                })
                .map_or(Ok(()), |ch| {
                    Err(VersionError::InvalidCharacter {
                        version: s.to_string(),
                        ch,
                    })
                })
        };
        check(upstream, epoch > 0)?;
        check(revision, false)?;
        Ok(DebVersion {
            epoch,
            upstream: upstream.to_string(),
            revision: revision.to_string(),
        })
    }
}

impl fmt::Display for DebVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.epoch > 0 {
            write!(f, "{}:", self.epoch)?;
        }
        f.write_str(&self.upstream)?;
        if !self.revision.is_empty() {
            write!(f, "-{}", self.revision)?;
        }
        Ok(())
    }
}

impl PartialEq for DebVersion {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_version(other) == Ordering::Equal
    }
}

impl Eq for DebVersion {}

impl PartialOrd for DebVersion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DebVersion {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_version(other)
    }
}

/// Character weight for the non-digit phase of [`verrevcmp`]: `~` sorts
/// before everything (including end of string at weight 0), letters before
/// non-letters.
fn char_order(c: u8) -> i32 {
    match c {
        b'~' => -1,
        b'0'..=b'9' => 0,
        b'A'..=b'Z' | b'a'..=b'z' => i32::from(c),
        _ => i32::from(c) + 256,
    }
}

/// dpkg's fragment comparison: alternating non-digit and digit spans, with
/// end of string weighing 0 in the non-digit phase.
fn verrevcmp(a: &str, b: &str) -> Ordering {
    let a = a.as_bytes();
    let b = b.as_bytes();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() || j < b.len() {
        while (i < a.len() && !a[i].is_ascii_digit()) || (j < b.len() && !b[j].is_ascii_digit()) {
            let ac = if i < a.len() { char_order(a[i]) } else { 0 };
            let bc = if j < b.len() { char_order(b[j]) } else { 0 };
            if ac != bc {
                return ac.cmp(&bc);
            }
            i += 1;
            j += 1;
        }
        while i < a.len() && a[i] == b'0' {
            i += 1;
        }
        while j < b.len() && b[j] == b'0' {
            j += 1;
        }
        let mut first_diff = Ordering::Equal;
        while i < a.len() && j < b.len() && a[i].is_ascii_digit() && b[j].is_ascii_digit() {
            if first_diff == Ordering::Equal {
                first_diff = a[i].cmp(&b[j]);
            }
            i += 1;
            j += 1;
        }
        if i < a.len() && a[i].is_ascii_digit() {
            return Ordering::Greater;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            return Ordering::Less;
        }
        if first_diff != Ordering::Equal {
            return first_diff;
        }
    }
    Ordering::Equal
}

/// Compares two Debian version strings.
///
/// # Examples
///
/// ```
/// use std::cmp::Ordering;
/// use sbomvert::verscmp::compare_debian;
///
/// assert_eq!(compare_debian("1.0~rc1-1", "1.0-1"), Ok(Ordering::Less));
/// assert_eq!(compare_debian("2:0.9", "1:9.9"), Ok(Ordering::Greater));
/// assert_eq!(compare_debian("0:1.0", "1.0"), Ok(Ordering::Equal));
/// ```
pub fn compare_debian(a: &str, b: &str) -> Result<Ordering, VersionError> {
    let a: DebVersion = a.parse()?;
    let b: DebVersion = b.parse()?;
    Ok(a.cmp_version(&b))
}

/// Named suffix in an Alpine version (`_alpha`, `_rc1`, `_p2`, ...).
///
/// The first four mark pre-releases and sort before the bare version; the
/// rest mark post-releases and sort after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ApkSuffix {
    Alpha,
    Beta,
    Pre,
    Rc,
    Cvs,
    Svn,
    Git,
    Hg,
    P,
}

impl ApkSuffix {
    fn from_word(word: &str) -> Option<Self> {
        Some(match word {
            "alpha" => ApkSuffix::Alpha,
            "beta" => ApkSuffix::Beta,
            "pre" => ApkSuffix::Pre,
            "rc" => ApkSuffix::Rc,
            "cvs" => ApkSuffix::Cvs,
            "svn" => ApkSuffix::Svn,
            "git" => ApkSuffix::Git,
            "hg" => ApkSuffix::Hg,
            "p" => ApkSuffix::P,
            _ => None?,
        })
    }

    /// True for suffixes that sort before the bare version.
    #[must_use]
    pub fn is_pre_release(self) -> bool {
        matches!(
            self,
            ApkSuffix::Alpha | ApkSuffix::Beta | ApkSuffix::Pre | ApkSuffix::Rc
        )
    }
}

/// One token of a parsed Alpine version, in occurrence order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApkToken {
    /// Leading numeric component, or a digit run following a letter;
    /// compared numerically.
    Number(String),
    /// Dotted numeric component; compared as a string when either side has a
    /// leading zero (fractional semantics), numerically otherwise.
    DottedNumber(String),
    /// Single lowercase letter following a numeric component.
    Letter(u8),
    /// Named suffix introduced by `_`.
    Suffix(ApkSuffix),
    /// Digit run attached to a suffix (`_rc1`); compared numerically.
    SuffixNumber(String),
    /// Trailing `-rN` package revision; compared numerically.
    Revision(String),
}

impl ApkToken {
    /// Rank used when two versions diverge in token type. Higher rank loses:
    /// end of input (rank 6) is beaten by any continuation except a
    /// pre-release suffix, which is handled before ranks apply.
    fn rank(t: Option<&ApkToken>) -> u8 {
        match t {
            Some(ApkToken::DottedNumber(_)) => 0,
            Some(ApkToken::Number(_)) => 1,
            Some(ApkToken::Letter(_)) => 2,
            Some(ApkToken::Suffix(_)) => 3,
            Some(ApkToken::SuffixNumber(_)) => 4,
            Some(ApkToken::Revision(_)) => 5,
            None => 6,
        }
    }
}

/// An Alpine (apk) package version.
///
/// Grammar: `digits ("." digits)* letter? ("_" suffix digits?)* ("-r" digits)?`
/// with letters restricted to lowercase ASCII and digit runs permitted after
/// a letter.
#[derive(Debug, Clone)]
pub struct ApkVersion {
    text: String,
    tokens: Vec<ApkToken>,
}

impl ApkVersion {
    /// Token sequence in occurrence order.
    #[must_use]
    pub fn tokens(&self) -> &[ApkToken] {
        &self.tokens
    }

    /// The trailing `-rN` revision number, if any.
    #[must_use]
    pub fn revision(&self) -> Option<&str> {
        match self.tokens.last() {
            Some(ApkToken::Revision(n)) => Some(n),
            _ => None,
        }
    }

    /// Compares two versions per the apk token model.
    #[must_use]
    pub fn cmp_version(&self, other: &Self) -> Ordering {
        let mut idx = 0;
        loop {
            let ta = self.tokens.get(idx);
            let tb = other.tokens.get(idx);
            match (ta, tb) {
                (None, None) => return Ordering::Equal,
                (Some(a), Some(b)) if token_kind_eq(a, b) => {
                    let ord = cmp_token_values(a, b);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
                _ => {
                    // Token types diverge: a pre-release suffix loses to any
                    // other continuation or to end of input; otherwise the
                    // side holding the lower-ranked token wins.
                    if let Some(ApkToken::Suffix(s)) = ta {
                        if s.is_pre_release() {
                            return Ordering::Less;
                        }
                    }
                    if let Some(ApkToken::Suffix(s)) = tb {
                        if s.is_pre_release() {
                            return Ordering::Greater;
                        }
                    }
                    return ApkToken::rank(tb).cmp(&ApkToken::rank(ta));
                }
            }
            idx += 1;
        }
    }
}

fn token_kind_eq(a: &ApkToken, b: &ApkToken) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

/// Numeric comparison of digit strings without integer overflow.
fn cmp_numeric(a: &str, b: &str) -> Ordering {
    let a = a.trim_start_matches('0');
    let b = b.trim_start_matches('0');
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn cmp_token_values(a: &ApkToken, b: &ApkToken) -> Ordering {
    match (a, b) {
        (ApkToken::Number(x), ApkToken::Number(y)) => cmp_numeric(x, y),
        (ApkToken::DottedNumber(x), ApkToken::DottedNumber(y)) => {
            if x.starts_with('0') || y.starts_with('0') {
                x.as_str().cmp(y.as_str())
            } else {
                cmp_numeric(x, y)
            }
        }
        (ApkToken::Letter(x), ApkToken::Letter(y)) => x.cmp(y),
        (ApkToken::Suffix(x), ApkToken::Suffix(y)) => x.cmp(y),
        (ApkToken::SuffixNumber(x), ApkToken::SuffixNumber(y))
        | (ApkToken::Revision(x), ApkToken::Revision(y)) => cmp_numeric(x, y),
        _ => unreachable!("token kinds checked by caller"),
    }
}

impl FromStr for ApkVersion {
    type Err = VersionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        if text.is_empty() {
            return Err(VersionError::Empty);
        }
        let bytes = text.as_bytes();
        let mut tokens = Vec::new();
        let mut i = 0usize;

        let take_digits = |i: &mut usize| -> Option<String> {
            let start = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            (*i > start).then(|| text[start..*i].to_string())
        };

        let digits = take_digits(&mut i).ok_or_else(|| VersionError::Unparsable(text.into()))?;
        tokens.push(ApkToken::Number(digits));

        while i < bytes.len() {
            match bytes[i] {
                b'.' => {
                    // Dots only continue a numeric run.
                    if !matches!(
                        tokens.last(),
                        Some(ApkToken::Number(_) | ApkToken::DottedNumber(_))
                    ) {
                        return Err(VersionError::Unparsable(text.into()));
                    }
                    i += 1;
                    let digits =
                        take_digits(&mut i).ok_or_else(|| VersionError::Unparsable(text.into()))?;
                    tokens.push(ApkToken::DottedNumber(digits));
                }
                b'a'..=b'z' => {
                    if !matches!(
                        tokens.last(),
                        Some(ApkToken::Number(_) | ApkToken::DottedNumber(_))
                    ) {
                        return Err(VersionError::Unparsable(text.into()));
                    }
                    tokens.push(ApkToken::Letter(bytes[i]));
                    i += 1;
                    if let Some(digits) = take_digits(&mut i) {
                        tokens.push(ApkToken::Number(digits));
                    }
                }
                b'_' => {
                    i += 1;
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_lowercase() {
                        i += 1;
                    }
                    let suffix = ApkSuffix::from_word(&text[start..i])
                        .ok_or_else(|| VersionError::Unparsable(text.into()))?;
                    tokens.push(ApkToken::Suffix(suffix));
                    if let Some(digits) = take_digits(&mut i) {
                        tokens.push(ApkToken::SuffixNumber(digits));
                    }
                }
                b'-' => {
                    if i + 1 >= bytes.len() || bytes[i + 1] != b'r' {
                        return Err(VersionError::Unparsable(text.into()));
                    }
                    i += 2;
                    let digits =
                        take_digits(&mut i).ok_or_else(|| VersionError::Unparsable(text.into()))?;
                    tokens.push(ApkToken::Revision(digits));
                    if i != bytes.len() {
                        return Err(VersionError::Unparsable(text.into()));
                    }
                }
                other => {
                    return Err(VersionError::InvalidCharacter {
                        version: text.into(),
                        ch: other as char,
                    });
                }
            }
        }
        Ok(ApkVersion {
            text: text.to_string(),
            tokens,
        })
    }
}

impl fmt::Display for ApkVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl PartialEq for ApkVersion {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_version(other) == Ordering::Equal
    }
}

impl Eq for ApkVersion {}

impl PartialOrd for ApkVersion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ApkVersion {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_version(other)
    }
}

/// Compares two Alpine version strings.
///
/// # Examples
///
/// ```
/// use std::cmp::Ordering;
/// use sbomvert::verscmp::compare_alpine;
///
/// assert_eq!(compare_alpine("1.24.5-r0", "1.24.5-r1"), Ok(Ordering::Less));
/// assert_eq!(compare_alpine("1.0_rc1", "1.0"), Ok(Ordering::Less));
/// assert_eq!(compare_alpine("1.0_p1", "1.0"), Ok(Ordering::Greater));
/// ```
pub fn compare_alpine(a: &str, b: &str) -> Result<Ordering, VersionError> {
    let a: ApkVersion = a.parse()?;
    let b: ApkVersion = b.parse()?;
    Ok(a.cmp_version(&b))
}

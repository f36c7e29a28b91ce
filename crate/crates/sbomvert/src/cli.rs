//! Command implementations behind the `sbomvert` binary.
//!
//! Every command is a pure function from input strings to output strings,
//! so identical inputs always produce byte-identical outputs. The binary's
//! `main` only reads files, dispatches here, and writes the results back
//! out.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dialect::{
    detect_dialect, emit_with_warnings, normalize, Dialect, TranslationWarning,
};
use crate::metrics;
use crate::osdb::{generate_reference_sbom, parse_apk_installed, parse_dpkg_status, DistroInfo, OsName};
use crate::scanner::{filter_kernel, render_table, scan, ScanOptions, VulnReport};
use crate::spdx::{find_purl, parse_spdx, serialize_spdx, SpdxDocument};
use crate::tracker::{load_alpine_secdb, load_debian_tracker, CveDatabase, QueryOptions};

/// A failed command, split by whose fault it was.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// The input could not be used: unreadable, unparsable, or inconsistent
    /// with the requested operation. Exit code 1.
    Input(String),
    /// The tool itself failed. Exit code 2.
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "error: {msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    /// Process exit code for this failure.
    #[must_use]
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

/// Command-line surface.
#[derive(Debug, Parser)]
#[command(
    name = "sbomvert",
    version,
    about = "Parse, validate, translate, and scan SPDX SBOMs for Linux containers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a reference SBOM from a dpkg status or apk installed file.
    Generate {
        /// Package database: dpkg /var/lib/dpkg/status or apk
        /// /lib/apk/db/installed.
        #[arg(long)]
        db: PathBuf,
        /// Distribution, e.g. "bookworm", "debian-12", or "alpine-3.20".
        #[arg(long)]
        distro: String,
        /// Output path; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Translate an SBOM into another tool's dialect.
    Convert {
        /// Input SBOM; stdin when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output path; stdout when absent. A file output also writes
        /// "<output>.warnings.json".
        #[arg(long)]
        output: Option<PathBuf>,
        /// Target dialect: reference, trivy, anchore, google, docker,
        /// amazon, or microsoft.
        #[arg(long)]
        target: String,
    },
    /// Scan an SBOM against a security-tracker snapshot.
    Scan {
        /// Input SBOM in any supported dialect.
        #[arg(long)]
        input: PathBuf,
        /// Tracker snapshot: Debian security-tracker JSON or Alpine secdb
        /// JSON, recognized by shape.
        #[arg(long)]
        tracker: PathBuf,
        /// Output path; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Report one finding per source package instead of one per binary.
        #[arg(long)]
        per_source: bool,
        /// Drop kernel-package findings; containers run the host kernel.
        #[arg(long)]
        exclude_kernel: bool,
        /// Ignore CVE ids from years after this one.
        #[arg(long)]
        cutoff_year: Option<u32>,
        /// Include findings the distribution marked negligible.
        #[arg(long)]
        include_unimportant: bool,
        /// Report format.
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Compare the package identities of two SBOMs.
    Diff {
        /// First SBOM.
        a: PathBuf,
        /// Second SBOM.
        b: PathBuf,
        /// Compare raw pURL strings instead of normalized identities.
        #[arg(long)]
        raw: bool,
    },
    /// Score a vulnerability report against a ground-truth CVE set.
    Eval {
        /// Report produced by `scan` (JSON).
        #[arg(long)]
        report: PathBuf,
        /// Truth: a JSON array of CVE ids, or another scan report.
        #[arg(long)]
        truth: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
}

/// Output encodings a command can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
    Csv,
}

/// Scan configuration mirrored from the command line.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub per_source: bool,
    pub exclude_kernel: bool,
    pub cutoff_year: Option<u32>,
    pub include_unimportant: bool,
    pub format: OutputFormat,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            per_source: false,
            exclude_kernel: false,
            cutoff_year: None,
            include_unimportant: false,
            format: OutputFormat::Json,
        }
    }
}

/// What a conversion produced: the document plus a warnings sidecar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvertOutput {
    /// Serialized SPDX document.
    pub sbom: String,
    /// JSON sidecar: detected dialect, target, and every warning.
    pub warnings: String,
}

#[derive(Serialize)]
struct WarningsSidecar<'a> {
    detected_dialect: Dialect,
    target: Dialect,
    warnings: &'a [TranslationWarning],
}

fn pretty(value: &impl Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Internal(format!("serializing output: {e}")))
}

fn parse_input_sbom(text: &str) -> Result<SpdxDocument, CliError> {
    parse_spdx(text).map_err(|e| CliError::Input(format!("reading SBOM: {e}")))
}

fn parse_target(target: &str) -> Result<Dialect, CliError> {
    target
        .parse::<Dialect>()
        .map_err(|e| CliError::Input(format!("target dialect: {e}")))
}

/// Loads a tracker snapshot, telling the two formats apart by shape: an
/// Alpine secdb carries a top-level "packages" array, the Debian tracker
/// maps source names to CVE objects.
pub fn load_tracker(text: &str) -> Result<CveDatabase, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("tracker snapshot is not JSON: {e}")))?;
    let is_secdb = value
        .get("packages")
        .is_some_and(serde_json::Value::is_array);
    let loaded = if is_secdb {
        load_alpine_secdb(text)
    } else {
        load_debian_tracker(text)
    };
    loaded.map_err(|e| CliError::Input(format!("reading tracker snapshot: {e}")))
}

/// Builds a reference SBOM from a dpkg status or apk installed file. The
/// database format is recognized from the content and must agree with the
/// distribution.
pub fn cmd_generate(db_text: &str, distro: &str) -> Result<String, CliError> {
    let info = DistroInfo::from_distro_qualifier(distro)
        .ok_or_else(|| CliError::Input(format!("unrecognized distribution {distro:?}")))?;
    let first = db_text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| CliError::Input("package database is empty".into()))?;
    // apk records use single-letter keys ("P:name"); dpkg stanzas use word
    // keys ("Package: name").
    let looks_apk = first.as_bytes().get(1) == Some(&b':');
    let db_os = if looks_apk { OsName::Alpine } else { OsName::Debian };
    if db_os != info.os_name {
        return Err(CliError::Input(format!(
            "database looks like {db_os} but --distro names {}",
            info.os_name
        )));
    }
    let pkgs = match db_os {
        OsName::Debian => parse_dpkg_status(db_text),
        OsName::Alpine => parse_apk_installed(db_text),
    }
    .map_err(|e| CliError::Input(format!("reading package database: {e}")))?;
    Ok(serialize_spdx(&generate_reference_sbom(&pkgs, &info)))
}

/// Detects, normalizes, and re-emits an SBOM in the target dialect.
/// Translation loss never fails the command; it lands in the warnings
/// sidecar.
pub fn cmd_convert(sbom_text: &str, target: &str) -> Result<ConvertOutput, CliError> {
    let target = parse_target(target)?;
    let doc = parse_input_sbom(sbom_text)?;
    let detected = detect_dialect(&doc);
    let canonical = normalize(&doc, detected)
        .map_err(|e| CliError::Input(format!("normalizing SBOM: {e}")))?;
    let (out, emit_warnings) = emit_with_warnings(&canonical, target);
    let mut warnings = canonical.warnings;
    warnings.extend(emit_warnings);
    let sidecar = pretty(&WarningsSidecar {
        detected_dialect: detected,
        target,
        warnings: &warnings,
    })?;
    Ok(ConvertOutput {
        sbom: serialize_spdx(&out),
        warnings: sidecar,
    })
}

/// Scans an SBOM (any dialect) against a tracker snapshot and renders the
/// report.
pub fn cmd_scan(
    sbom_text: &str,
    tracker_text: &str,
    config: &ScanConfig,
) -> Result<String, CliError> {
    let doc = parse_input_sbom(sbom_text)?;
    let detected = detect_dialect(&doc);
    let canonical = normalize(&doc, detected)
        .map_err(|e| CliError::Input(format!("normalizing SBOM: {e}")))?;
    let db = load_tracker(tracker_text)?;
    let defaults = QueryOptions::default();
    let opts = ScanOptions {
        per_source: config.per_source,
        query: QueryOptions {
            cutoff_year: config.cutoff_year.unwrap_or(defaults.cutoff_year),
            include_unimportant: config.include_unimportant,
            include_not_affected: defaults.include_not_affected,
        },
    };
    let mut report = scan(&canonical, &db, &opts);
    if config.exclude_kernel {
        report = filter_kernel(&report);
    }
    match config.format {
        OutputFormat::Json => pretty(&report),
        OutputFormat::Table => Ok(render_table(&report)),
        OutputFormat::Csv => Err(CliError::Input(
            "scan reports support json or table output".into(),
        )),
    }
}

#[derive(Serialize)]
struct DiffOutput {
    jaccard: f64,
    common_count: usize,
    only_in_a: Vec<String>,
    only_in_b: Vec<String>,
}

fn raw_purl_set(doc: &SpdxDocument) -> BTreeSet<String> {
    doc.binary_packages()
        .filter_map(find_purl)
        .map(str::to_string)
        .collect()
}

fn identity_set(doc: &SpdxDocument) -> Result<BTreeSet<String>, CliError> {
    let detected = detect_dialect(doc);
    let canonical = normalize(doc, detected)
        .map_err(|e| CliError::Input(format!("normalizing SBOM: {e}")))?;
    Ok(canonical
        .packages
        .iter()
        .filter(|p| !p.is_source_synthetic)
        .map(|p| {
            let (source, name, epoch, version, arch) = p.identity();
            format!("{source} {name} {epoch}:{version} {arch}")
        })
        .collect())
}

/// Compares the package sets of two SBOMs: Jaccard similarity plus the
/// identities unique to each side. Normalized identities by default; `raw`
/// compares the literal pURL strings instead.
pub fn cmd_diff(a_text: &str, b_text: &str, raw: bool) -> Result<String, CliError> {
    let doc_a = parse_input_sbom(a_text)?;
    let doc_b = parse_input_sbom(b_text)?;
    let (set_a, set_b) = if raw {
        (raw_purl_set(&doc_a), raw_purl_set(&doc_b))
    } else {
        (identity_set(&doc_a)?, identity_set(&doc_b)?)
    };
    pretty(&DiffOutput {
        jaccard: metrics::jaccard(&set_a, &set_b),
        common_count: set_a.intersection(&set_b).count(),
        only_in_a: set_a.difference(&set_b).cloned().collect(),
        only_in_b: set_b.difference(&set_a).cloned().collect(),
    })
}

fn truth_cves(text: &str) -> Result<BTreeSet<String>, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("truth file is not JSON: {e}")))?;
    if value.is_array() {
        return serde_json::from_value::<Vec<String>>(value)
            .map(|ids| ids.into_iter().collect())
            .map_err(|e| CliError::Input(format!("truth file: {e}")));
    }
    serde_json::from_value::<VulnReport>(value)
        .map(|r| r.distinct_cves())
        .map_err(|e| CliError::Input(format!("truth file: {e}")))
}

/// Scores a scan report against ground truth: the report's distinct CVEs
/// against a truth CVE list (or a second report).
pub fn cmd_eval(report_text: &str, truth_text: &str, format: OutputFormat) -> Result<String, CliError> {
    let report: VulnReport = serde_json::from_str(report_text)
        .map_err(|e| CliError::Input(format!("reading report: {e}")))?;
    let truth = truth_cves(truth_text)?;
    let m = metrics::compare_to_truth(&report.distinct_cves(), &truth);
    match format {
        OutputFormat::Csv => Ok(metrics::to_csv(&m)),
        OutputFormat::Json => pretty(&m),
        OutputFormat::Table => Err(CliError::Input(
            "eval supports csv or json output".into(),
        )),
    }
}

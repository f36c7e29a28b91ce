//! Generate, translate, scan, and evaluate SPDX SBOMs for Debian and Alpine
//! based container images.
//!
//! SBOM producers disagree on how to spell package identity: the same
//! installed package comes out with different pURL types, qualifier sets,
//! epoch placements, and SPDX extension fields depending on which tool wrote
//! the document. Consumers in turn key their CVE lookups on different subsets
//! of those fields, so feeding one tool's SBOM to another silently drops
//! vulnerabilities.
//!
//! This crate gives that problem a workable shape:
//!
//! * [`purl`] parses, serializes, and validates Package URLs, and classifies
//!   the compliance issues a pURL carries.
//! * [`spdx`] reads and writes SPDX 2.x JSON losslessly, including the
//!   nonstandard extension fields the tool dialects rely on.
//! * [`osdb`] parses dpkg and apk installed-package databases and generates a
//!   reference SBOM directly from them.
//! * [`dialect`] detects which tool produced an SBOM, normalizes it into a
//!   canonical model, and emits an SBOM shaped for a chosen consumer.
//! * [`verscmp`] implements Debian and Alpine version ordering.
//! * [`tracker`] ingests Debian security tracker and Alpine secdb snapshots
//!   and answers per-release CVE queries.
//! * [`scanner`] maps a canonical SBOM to a vulnerability report, with
//!   source-level deduplication control and kernel filtering.
//! * [`metrics`] computes the comparison instruments: Jaccard similarity,
//!   precision/recall/F1, and duplication statistics.
//! * [`cli`] wires the modules into the `sbomvert` command-line tool.

pub mod cli;
pub mod dialect;
pub mod metrics;
pub mod osdb;
pub mod purl;
pub mod scanner;
pub mod spdx;
pub mod tracker;
pub mod verscmp;

//! Release gate: end-to-end checks over frozen fixtures and oracles.
//!
//! Each test prints one `acceptance N/8 (<label>): PASS` line on success
//! (visible with `cargo test --test acceptance -- --nocapture`); a failure
//! shows up as the test failing. The checks cover producer-pURL
//! convergence, translation round trips, consumer field requirements,
//! version-ordering oracles, tracker semantics, metric reproduction,
//! reference-SBOM generation, and byte determinism.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use sbomvert::cli::{cmd_convert, cmd_generate, cmd_scan, ScanConfig};
use sbomvert::dialect::{
    detect_dialect, emit_with_warnings, normalize, Dialect, SUPPORTED_TARGETS,
};
use sbomvert::metrics::{compare_to_truth, duplication_stats, jaccard, to_csv};
use sbomvert::osdb::{parse_apk_installed, parse_dpkg_status};
use sbomvert::purl::{validate_purl_text, Ecosystem, IssueCategory};
use sbomvert::scanner::{scan, Finding, MatchedVia, PackageRef, ScanOptions, VulnReport};
use sbomvert::spdx::{find_purl, is_os_marker, parse_spdx, serialize_spdx, SpdxDocument};
use sbomvert::tracker::{load_alpine_secdb, load_debian_tracker, query_cves};
use sbomvert::verscmp::{compare_alpine, compare_debian, VersionError};

const STATUS_SMALL: &str = include_str!("fixtures/dpkg/status_small");
const STATUS_REF25: &str = include_str!("fixtures/dpkg/status_ref25");
const INSTALLED_SMALL: &str = include_str!("fixtures/apk/installed_small");
const DEBIAN_TRACKER: &str = include_str!("fixtures/trackers/debian_tracker.json");
const ALPINE_SECDB_320: &str = include_str!("fixtures/trackers/alpine_secdb_320.json");
const ALPINE_SECDB_321: &str = include_str!("fixtures/trackers/alpine_secdb_321.json");
const REFERENCE_SMALL: &str = include_str!("fixtures/spdx/reference_small.json");

/// The seven producer spellings of one installed package
/// (python3-magics++, epoch 2, upstream version 1.5.8-1, amd64, Debian 12).
const REFERENCE_PURL: &str =
    "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&distro=bookworm";
const AMAZON_PURL: &str =
    "pkg:dpkg/python3-magics++@1.5.8-1?arch=AMD64&epoch=1&upstream=python3-magics++-1.5.8-1.src.dpkg";
const ANCHORE_PURL: &str =
    "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?arch=amd64&upstream=magics-python&distro=debian-12";
const GOOGLE_PURL: &str =
    "pkg:deb/debian/python3-magics%2B%2B@2%3A1.5.8-1?arch=amd64&distro=debian-12&upstream=magics-python";
const MICROSOFT_PURL: &str = "pkg:deb/debian/python3-magics++@2:1.5.8-1";
const SCOUT_PURL: &str =
    "pkg:deb/debian/python3-magics%2B%2B@2:1.5.8-1?os_version=12&os_name=debian&os_distro=bookworm";
const TRIVY_PURL: &str =
    "pkg:deb/debian/python3-magics%2B%2B@1.5.8-1?arch=amd64&distro=debian-12.11&epoch=2";

fn pass(n: u8, label: &str) {
    println!("acceptance {n}/8 ({label}): PASS");
}

/// Wraps one pURL in the smallest SPDX document a producer could emit.
fn single_package_doc(purl: &str, version_info: Option<&str>) -> SpdxDocument {
    let version_field = match version_info {
        Some(v) => format!(r#""versionInfo": {v:?},"#),
        None => String::new(),
    };
    let text = format!(
        r#"{{"spdxVersion": "SPDX-2.3", "SPDXID": "SPDXRef-DOCUMENT", "name": "img",
            "packages": [{{"SPDXID": "SPDXRef-p0", "name": "python3-magics++",
                {version_field}
                "externalRefs": [{{"referenceCategory": "PACKAGE-MANAGER",
                    "referenceType": "purl", "referenceLocator": {purl:?}}}]}}]}}"#
    );
    parse_spdx(&text).expect("fixture document parses")
}

#[test]
fn a1_producer_purl_convergence() {
    let started = Instant::now();

    let cases = [
        (REFERENCE_PURL, Dialect::Reference, None),
        (ANCHORE_PURL, Dialect::Anchore, None),
        (GOOGLE_PURL, Dialect::Google, None),
        (MICROSOFT_PURL, Dialect::Microsoft, None),
        (SCOUT_PURL, Dialect::Docker, None),
        (TRIVY_PURL, Dialect::Trivy, None),
        (AMAZON_PURL, Dialect::Amazon, Some("2:1.5.8-1")),
    ];
    for (purl, expected, version_info) in cases {
        let doc = single_package_doc(purl, version_info);
        assert_eq!(detect_dialect(&doc), expected, "detection of {purl}");
        let sbom = normalize(&doc, expected).unwrap();
        assert_eq!(sbom.packages.len(), 1, "{purl}");
        let p = &sbom.packages[0];
        assert_eq!(p.name, "python3-magics++", "{purl}");
        assert_eq!(p.epoch, 2, "{purl}");
        assert_eq!(p.version, "1.5.8-1", "{purl}");
    }

    // The bare form withholds identifying data; the malformed form carries
    // wrong data in invalid syntax. Validation tells the two apart.
    let microsoft_issues = validate_purl_text(MICROSOFT_PURL, Ecosystem::Debian).unwrap();
    assert!(
        microsoft_issues
            .iter()
            .any(|i| i.category == IssueCategory::IncompleteData),
        "bare pURL must be flagged as incomplete: {microsoft_issues:?}"
    );
    let amazon_issues = validate_purl_text(AMAZON_PURL, Ecosystem::Debian).unwrap();
    assert!(
        amazon_issues
            .iter()
            .any(|i| i.category == IssueCategory::IncorrectInformation),
        "wrong epoch and self-referential upstream must be flagged: {amazon_issues:?}"
    );
    assert!(
        amazon_issues
            .iter()
            .any(|i| i.category == IssueCategory::InvalidFormat),
        "wrong type and unencoded name must be flagged: {amazon_issues:?}"
    );

    assert!(started.elapsed() < Duration::from_secs(1));
    pass(1, "producer purl convergence");
}

/// Strips a document down to what a producer that writes only bare pURLs
/// would emit: no OS marker, no sourceInfo.
fn degrade_to_bare(mut doc: SpdxDocument) -> SpdxDocument {
    let marker_ids: Vec<String> = doc
        .packages
        .iter()
        .filter(|p| is_os_marker(p))
        .map(|p| p.spdx_id.clone())
        .collect();
    doc.packages.retain(|p| !is_os_marker(p));
    for p in &mut doc.packages {
        p.source_info = None;
    }
    doc.relationships.retain(|r| {
        !marker_ids.contains(&r.spdx_element_id) && !marker_ids.contains(&r.related_spdx_element)
    });
    doc
}

fn distinct_cves_of(sbom_text: &str, tracker: &str) -> (BTreeSet<String>, VulnReport) {
    let doc = parse_spdx(sbom_text).unwrap();
    let canonical = normalize(&doc, detect_dialect(&doc)).unwrap();
    let db = load_debian_tracker(tracker).unwrap();
    let report = scan(&canonical, &db, &ScanOptions::default());
    (report.distinct_cves(), report)
}

#[test]
fn a2_round_trip_scan_equivalence() {
    let started = Instant::now();

    let reference_text = cmd_generate(STATUS_REF25, "bookworm").unwrap();
    let (reference_cves, _) = distinct_cves_of(&reference_text, DEBIAN_TRACKER);
    assert_eq!(reference_cves.len(), 4, "reference scan: {reference_cves:?}");

    let reference_doc = parse_spdx(&reference_text).unwrap();
    assert_eq!(detect_dialect(&reference_doc), Dialect::Reference);
    let canonical = normalize(&reference_doc, Dialect::Reference).unwrap();

    for source in SUPPORTED_TARGETS {
        // A native document in the source dialect. Producers that write
        // bare pURLs (Microsoft) carry no distribution anywhere; all
        // others keep enough context for a faithful translation.
        let source_text = if source == Dialect::Microsoft {
            serialize_spdx(&degrade_to_bare(
                emit_with_warnings(&canonical, Dialect::Microsoft).0,
            ))
        } else {
            serialize_spdx(&emit_with_warnings(&canonical, source).0)
        };
        let source_doc = parse_spdx(&source_text).unwrap();
        assert_eq!(detect_dialect(&source_doc), source, "self-detection");

        for target in SUPPORTED_TARGETS {
            let converted = cmd_convert(&source_text, &target.to_string()).unwrap();
            let (cves, report) = distinct_cves_of(&converted.sbom, DEBIAN_TRACKER);
            if source == Dialect::Microsoft {
                assert!(
                    cves.is_empty(),
                    "{source}->{target}: a distro-less source cannot match advisories"
                );
                assert!(!report.warnings.is_empty(), "{source}->{target}");
                let sidecar: serde_json::Value =
                    serde_json::from_str(&converted.warnings).unwrap();
                let codes: Vec<&str> = sidecar["warnings"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .filter_map(|w| w["code"].as_str())
                    .collect();
                assert!(
                    codes.contains(&"unknown-distro") || codes.contains(&"missing-distro"),
                    "{source}->{target}: loss must be flagged, got {codes:?}"
                );
            } else {
                assert_eq!(cves, reference_cves, "{source}->{target}");
            }
        }
    }

    assert!(started.elapsed() < Duration::from_secs(10));
    pass(2, "round-trip scan equivalence");
}

#[test]
fn a3_consumer_field_requirements() {
    let started = Instant::now();

    let reference_text = cmd_generate(STATUS_REF25, "bookworm").unwrap();
    let doc = parse_spdx(&reference_text).unwrap();
    let canonical = normalize(&doc, Dialect::Reference).unwrap();

    let (trivy_doc, _) = emit_with_warnings(&canonical, Dialect::Trivy);
    let markers: Vec<_> = trivy_doc
        .packages
        .iter()
        .filter(|p| {
            p.attribution_texts == ["Class: os-pkgs", "Type: debian"]
                && p.primary_package_purpose.as_deref() == Some("OPERATING-SYSTEM")
        })
        .collect();
    assert_eq!(markers.len(), 1, "exactly one OS marker package");

    let (docker_doc, _) = emit_with_warnings(&canonical, Dialect::Docker);
    assert!(!docker_doc.packages.is_empty());
    assert!(
        docker_doc
            .packages
            .iter()
            .all(|p| p.primary_package_purpose.is_some()),
        "every package needs a purpose"
    );

    assert!(started.elapsed() < Duration::from_secs(1));
    pass(3, "consumer field requirements");
}

fn check_oracle(
    text: &str,
    cmp: fn(&str, &str) -> Result<Ordering, VersionError>,
    minimum: usize,
) -> usize {
    let mut checked = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let a = parts.next().unwrap();
        let b = parts.next().unwrap();
        let expected = parts.next().unwrap();
        let got = match cmp(a, b).unwrap_or_else(|e| panic!("{a} vs {b}: {e}")) {
            Ordering::Less => "Lt",
            Ordering::Equal => "Eq",
            Ordering::Greater => "Gt",
        };
        assert_eq!(got, expected, "{a} vs {b}");
        checked += 1;
    }
    assert!(checked >= minimum, "oracle too small: {checked} < {minimum}");
    checked
}

struct Xorshift(u64);

impl Xorshift {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n as u64) as usize
    }

    fn pick<'a>(&mut self, items: &[&'a str]) -> &'a str {
        items[self.below(items.len())]
    }
}

fn random_debian_version(rng: &mut Xorshift) -> String {
    let epochs = ["", "", "", "1:", "2:", "10:"];
    let heads = ["0", "1", "2", "10", "22", "6.1"];
    let tails = [
        "", ".0", ".1", ".10", ".2a", "+dfsg", "~rc1", "~beta2", ".0.1", "+b2", "a", "~", "+really1.0",
    ];
    let revisions = ["", "-1", "-2", "-0.1", "-10+deb12u4", "-1~bpo11+1", "-r0"];
    let mut v = String::new();
    v.push_str(rng.pick(&epochs));
    v.push_str(rng.pick(&heads));
    for _ in 0..rng.below(3) {
        v.push_str(rng.pick(&tails));
    }
    v.push_str(rng.pick(&revisions));
    v
}

fn random_alpine_version(rng: &mut Xorshift) -> String {
    let digits = ["0", "1", "2", "3", "9", "10", "22", "101"];
    let letters = ["", "", "a", "b", "z"];
    let suffixes = ["", "", "", "_alpha1", "_beta2", "_pre1", "_rc3", "_p1", "_git20240101"];
    let revisions = ["", "-r0", "-r1", "-r10", "-r31"];
    let mut v = String::new();
    v.push_str(rng.pick(&digits));
    for _ in 0..rng.below(3) {
        v.push('.');
        v.push_str(rng.pick(&digits));
    }
    v.push_str(rng.pick(&letters));
    v.push_str(rng.pick(&suffixes));
    v.push_str(rng.pick(&revisions));
    v
}

fn assert_total_order(
    versions: &[String],
    cmp: fn(&str, &str) -> Result<Ordering, VersionError>,
    rng: &mut Xorshift,
) {
    let mut sorted: Vec<&String> = versions.iter().collect();
    sorted.sort_by(|a, b| cmp(a, b).unwrap());
    for v in versions {
        assert_eq!(cmp(v, v).unwrap(), Ordering::Equal, "reflexivity of {v}");
    }
    for _ in 0..10_000 {
        let (i, j) = (rng.below(versions.len()), rng.below(versions.len()));
        let ab = cmp(&versions[i], &versions[j]).unwrap();
        let ba = cmp(&versions[j], &versions[i]).unwrap();
        assert_eq!(ab, ba.reverse(), "antisymmetry of {} / {}", versions[i], versions[j]);
    }
    // Sortedness under sampled index pairs is transitivity made visible:
    // any i < j disagreeing with the sort would need an inconsistent triple.
    for _ in 0..10_000 {
        let (mut i, mut j) = (rng.below(sorted.len()), rng.below(sorted.len()));
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        assert_ne!(
            cmp(sorted[i], sorted[j]).unwrap(),
            Ordering::Greater,
            "transitivity between {} and {}",
            sorted[i],
            sorted[j]
        );
    }
}

#[test]
fn a4_version_ordering_oracle() {
    let started = Instant::now();

    let debian_pairs = check_oracle(
        include_str!("fixtures/versions/debian_dpkg.txt"),
        compare_debian,
        30,
    );
    let alpine_pairs = check_oracle(
        include_str!("fixtures/versions/alpine_apk.txt"),
        compare_alpine,
        20,
    );
    assert!(debian_pairs >= 30 && alpine_pairs >= 20);

    let mut rng = Xorshift(0x5eed_cafe_f00d_0001);
    let debian: Vec<String> = (0..10_000).map(|_| random_debian_version(&mut rng)).collect();
    assert_total_order(&debian, compare_debian, &mut rng);
    let alpine: Vec<String> = (0..10_000).map(|_| random_alpine_version(&mut rng)).collect();
    assert_total_order(&alpine, compare_alpine, &mut rng);

    assert!(started.elapsed() < Duration::from_secs(5));
    pass(4, "version ordering oracle");
}

#[test]
fn a5_tracker_semantics() {
    let started = Instant::now();

    // The same installed shadow binaries are vulnerable on the release
    // that never shipped the fix and clean on the release that did.
    let bullseye = cmd_generate(STATUS_SMALL, "bullseye").unwrap();
    let (bullseye_cves, report) = distinct_cves_of(&bullseye, DEBIAN_TRACKER);
    assert!(bullseye_cves.contains("CVE-2023-29383"), "{bullseye_cves:?}");
    let shadow_findings: Vec<&str> = report
        .findings
        .iter()
        .filter(|f| f.cve_id == "CVE-2023-29383")
        .map(|f| f.package.name.as_str())
        .collect();
    assert_eq!(shadow_findings, ["login", "passwd"]);

    let bookworm = cmd_generate(STATUS_SMALL, "bookworm").unwrap();
    let (bookworm_cves, _) = distinct_cves_of(&bookworm, DEBIAN_TRACKER);
    assert!(!bookworm_cves.contains("CVE-2023-29383"), "{bookworm_cves:?}");

    // One advisory database knows about the wget SSRF fix, the other
    // branch snapshot has no wget entry at all. Identical package, opposite
    // answers.
    let secdb_320 = load_alpine_secdb(ALPINE_SECDB_320).unwrap();
    let from_320 = query_cves(&secdb_320, "3.20", "wget", "1.24.5-r0").unwrap();
    assert!(from_320.is_empty(), "{from_320:?}");

    let secdb_321 = load_alpine_secdb(ALPINE_SECDB_321).unwrap();
    let from_321 = query_cves(&secdb_321, "3.21", "wget", "1.24.5-r0").unwrap();
    assert!(from_321.contains("CVE-2024-10524"), "{from_321:?}");

    let debian_db = load_debian_tracker(DEBIAN_TRACKER).unwrap();
    let from_debian = query_cves(&debian_db, "bookworm", "wget", "1.21.3-1+b1").unwrap();
    assert!(from_debian.contains("CVE-2024-10524"), "{from_debian:?}");

    assert!(started.elapsed() < Duration::from_secs(1));
    pass(5, "tracker semantics");
}

#[test]
fn a6_metric_reproduction() {
    let started = Instant::now();

    let shared: BTreeSet<String> = (0..6).map(|i| format!("CVE-2024-{:04}", i)).collect();
    let mut predicted = shared.clone();
    predicted.extend((0..197).map(|i| format!("CVE-2024-1{:04}", i)));
    let mut truth = shared;
    truth.extend((0..2495).map(|i| format!("CVE-2024-2{:04}", i)));
    let m = compare_to_truth(&predicted, &truth);
    assert_eq!(
        to_csv(&m),
        "tp,fp,fn,precision,recall,f1\n6,197,2495,0.03,0.00,0.00\n"
    );

    let a: BTreeSet<String> = ["CVE-2024-1", "CVE-2024-2"].iter().map(|s| s.to_string()).collect();
    assert_eq!(jaccard(&a, &a), 1.0);
    let b: BTreeSet<String> = ["CVE-2024-3"].iter().map(|s| s.to_string()).collect();
    assert_eq!(jaccard(&a, &b), 0.0);

    // Every vulnerable package carries its own CVE set: no duplication.
    let mut report = VulnReport::default();
    for (i, name) in ["alpha", "beta", "gamma"].iter().enumerate() {
        report.findings.push(Finding {
            package: PackageRef {
                name: (*name).into(),
                epoch: 0,
                version: "1.0-1".into(),
                arch: Some("amd64".into()),
                source_name: (*name).into(),
                source_version: "1.0-1".into(),
            },
            cve_id: format!("CVE-2024-{:04}", 9000 + i),
            matched_via: MatchedVia::Source,
        });
    }
    let stats = duplication_stats(&report);
    assert_eq!(format!("{:.2} ({:.2})", stats.mean, stats.stderr), "1.00 (0.00)");

    assert!(started.elapsed() < Duration::from_secs(1));
    pass(6, "metric reproduction");
}

#[test]
fn a7_reference_generation() {
    let started = Instant::now();

    assert_eq!(parse_dpkg_status(STATUS_SMALL).unwrap().len(), 7);
    assert_eq!(parse_apk_installed(INSTALLED_SMALL).unwrap().len(), 5);

    for (db, distro, ecosystem, expected) in [
        (STATUS_SMALL, "bookworm", Ecosystem::Debian, 7),
        (INSTALLED_SMALL, "alpine-3.20", Ecosystem::Alpine, 5),
    ] {
        let doc = parse_spdx(&cmd_generate(db, distro).unwrap()).unwrap();
        let binaries: Vec<_> = doc.binary_packages().collect();
        assert_eq!(binaries.len(), expected);
        for p in binaries {
            let purl = find_purl(p).expect("every package carries a pURL");
            let issues = validate_purl_text(purl, ecosystem).unwrap();
            assert!(issues.is_empty(), "{purl}: {issues:?}");
        }
    }

    // A scanner that fabricates one entry per source package would count
    // two packages here; only login is actually installed.
    let inflated = r#"{"spdxVersion": "SPDX-2.3", "SPDXID": "SPDXRef-DOCUMENT", "name": "img",
        "creationInfo": {"created": "2025-06-02T00:00:00Z",
                         "creators": ["Tool: inspector-sbomgen-1.2.0"]},
        "packages": [
            {"SPDXID": "SPDXRef-p0", "name": "login", "versionInfo": "1:4.13+dfsg1-1",
             "externalRefs": [{"referenceCategory": "PACKAGE-MANAGER", "referenceType": "purl",
                "referenceLocator": "pkg:dpkg/login@4.13+dfsg1-1?arch=amd64&epoch=1&upstream=shadow-4.13+dfsg1-1.src.dpkg"}]},
            {"SPDXID": "SPDXRef-p1", "name": "shadow", "versionInfo": "1:4.13+dfsg1-1",
             "externalRefs": [{"referenceCategory": "PACKAGE-MANAGER", "referenceType": "purl",
                "referenceLocator": "pkg:dpkg/shadow@4.13+dfsg1-1?arch=amd64&epoch=1&upstream=shadow-4.13+dfsg1-1.src.dpkg"}]}
        ]}"#;
    let doc = parse_spdx(inflated).unwrap();
    assert_eq!(detect_dialect(&doc), Dialect::Amazon);
    let sbom = normalize(&doc, Dialect::Amazon).unwrap();
    assert_eq!(sbom.packages.len(), 2);
    let true_count = sbom.packages.iter().filter(|p| !p.is_source_synthetic).count();
    assert_eq!(true_count, 1, "the fabricated source entry must be marked");

    assert!(started.elapsed() < Duration::from_secs(1));
    pass(7, "reference generation");
}

#[test]
fn a8_byte_determinism() {
    let started = Instant::now();

    let generated = cmd_generate(STATUS_SMALL, "bookworm").unwrap();
    assert_eq!(generated, REFERENCE_SMALL, "generation matches the frozen document");

    let reference_text = cmd_generate(STATUS_REF25, "bookworm").unwrap();
    for target in ["trivy", "amazon", "microsoft"] {
        let first = cmd_convert(&reference_text, target).unwrap();
        let second = cmd_convert(&reference_text, target).unwrap();
        assert_eq!(first, second, "convert to {target}");
    }

    let config = ScanConfig::default();
    let first = cmd_scan(&reference_text, DEBIAN_TRACKER, &config).unwrap();
    let second = cmd_scan(&reference_text, DEBIAN_TRACKER, &config).unwrap();
    assert_eq!(first, second, "scan");

    assert!(started.elapsed() < Duration::from_secs(5));
    pass(8, "byte determinism");
}

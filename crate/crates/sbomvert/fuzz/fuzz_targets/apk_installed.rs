//! Fuzz the apk installed-database parser.
//!
//! ```bash
//! cargo fuzz run apk_installed -- -only_ascii=1
//! ```

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbomvert::osdb::{generate_reference_sbom, parse_apk_installed, DistroInfo};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(pkgs) = parse_apk_installed(text) else {
        return;
    };
    // Every accepted package list must be emittable as a reference SBOM.
    let distro = DistroInfo::from_distro_qualifier("alpine-3.20.3").expect("static qualifier");
    let _ = generate_reference_sbom(&pkgs, &distro);
});

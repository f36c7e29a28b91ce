//! Fuzz the dpkg status file parser.
//!
//! ```bash
//! cargo fuzz run dpkg_status -- -only_ascii=1
//! ```

#![no_main]

use libfuzzer_sys::fuzz_target;
use sbomvert::osdb::{generate_reference_sbom, parse_dpkg_status, DistroInfo};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(pkgs) = parse_dpkg_status(text) else {
        return;
    };
    // Every accepted package list must be emittable as a reference SBOM.
    let distro = DistroInfo::from_distro_qualifier("debian-12").expect("static qualifier");
    let _ = generate_reference_sbom(&pkgs, &distro);
});

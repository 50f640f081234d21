#![no_main]

use gmi_core::alber::StabilityVerdict;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = StabilityVerdict::from_json(text);
});

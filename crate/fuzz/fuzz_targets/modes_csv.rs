#![no_main]

use gmi_core::seastate::parse_modes_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_modes_csv(data);
});

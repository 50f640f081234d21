#![no_main]

use gmi_core::io::{decode_field_with_sidecar, encode_field};
use libfuzzer_sys::fuzz_target;

// Input layout: sidecar JSON, a NUL byte, then the raw field bytes.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else { return };
    let Ok(json) = std::str::from_utf8(&data[..split]) else { return };
    let raw = &data[split + 1..];
    if let Ok((_, snaps)) = decode_field_with_sidecar(raw, json) {
        assert_eq!(encode_field(&snaps), raw);
    }
});

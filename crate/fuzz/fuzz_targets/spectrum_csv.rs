#![no_main]

use gmi_core::spectrum::parse_spectrum_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = parse_spectrum_csv(data) {
        // Anything accepted must evaluate without panicking.
        for k in s.breakpoints() {
            let v = s.eval(k);
            assert!(v >= 0.0 && v.is_finite());
        }
    }
});

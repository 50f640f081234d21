#![no_main]

use gmi_cli::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        // Accepted configs survive a round trip unchanged.
        let again = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config(&again).unwrap(), cfg);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use tgn_social::tensor::ParamSet;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = ParamSet::from_json_str(text) {
            let again = ParamSet::from_json_str(&p.to_json_string()).expect("round trip");
            assert_eq!(again.to_json_string(), p.to_json_string());
        }
    }
});

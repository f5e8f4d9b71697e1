#![no_main]

use libfuzzer_sys::fuzz_target;
use tgn_social::session::SessionSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = SessionSpec::parse(text) {
            let again = SessionSpec::parse(&spec.to_json()).expect("serialized spec parses");
            assert_eq!(again, spec);
        }
    }
});

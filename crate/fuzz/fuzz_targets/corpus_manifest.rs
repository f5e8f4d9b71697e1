#![no_main]

use libfuzzer_sys::fuzz_target;
use tgn_social::session::CorpusManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = CorpusManifest::parse(text) {
            CorpusManifest::parse(&m.to_json()).expect("round trip");
        }
    }
});

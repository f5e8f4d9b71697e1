#![no_main]

use libfuzzer_sys::fuzz_target;
use tgn_social::train::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = Checkpoint::from_json(text) {
            Checkpoint::from_json(&c.to_json()).expect("round trip");
        }
    }
});

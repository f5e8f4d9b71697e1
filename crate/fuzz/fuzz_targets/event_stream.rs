#![no_main]

use libfuzzer_sys::fuzz_target;
use tgn_social::session::{EventStream, SessionSpec};

const SPEC: &str = r#"{"session_id":"F","session_type":"D1","facilitator_type":"teacher",
"subjects":[{"node_id":1,"role":"student","seat_index":0},
{"node_id":2,"role":"student","seat_index":1},
{"node_id":3,"role":"teacher","seat_index":2}]}"#;

fuzz_target!(|data: &[u8]| {
    let spec = SessionSpec::parse(SPEC).expect("fixed spec");
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(stream) = EventStream::parse(text, &spec) {
            let again = EventStream::parse(&stream.to_jsonl(), &spec).expect("round trip");
            assert_eq!(again, stream);
        }
    }
});

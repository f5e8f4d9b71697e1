#![no_main]

use libfuzzer_sys::fuzz_target;
use tgn_social::features::{dump_messages, parse_message_rows};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_message_rows(text) {
            let again = parse_message_rows(&dump_messages(&rows)).expect("round trip");
            assert_eq!(again.len(), rows.len());
        }
    }
});

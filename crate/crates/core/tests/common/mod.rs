#![allow(dead_code)]

use tgn_social::datagen::{generate_session, reference_templates, GenConfig};
use tgn_social::features::MessageSource;
use tgn_social::session::Session;
use tgn_social::tgn::PreparedSession;

/// Short session from reference template `template` (0..8).
pub fn session(template: usize, duration_s: u32, seed: u64, id: &str) -> Session {
    let t = &reference_templates()[template % 8];
    generate_session(&GenConfig {
        session_id: id.into(),
        duration_s,
        seed,
        ..t.clone()
    })
    .unwrap()
}

pub fn prepared(s: &Session) -> PreparedSession {
    PreparedSession::new(s, &MessageSource::OneHot).unwrap()
}

//! Variant ablation (accuracy against epoch time) and the message-encoding
//! comparison grouped by facilitator type.

use std::collections::HashMap;
use std::path::Path;

use crate::eval::{accuracy, evaluate_model, f1, total, EvalOptions};
use crate::features::{parse_message_rows, MessageSource};
use crate::session::{Corpus, FacilitatorType, Session, SplitPlan};
use crate::tgn::{Aggregator, EmbeddingMode, ModelConfig, PreparedSession};
use crate::train::{train_phase1, TrainConfig, TrainSession};
use crate::{Error, Result};

/// Named variants, in CSV order.
pub const VARIANT_NAMES: [&str; 7] = [
    "TGN-2l",
    "TGN-attn",
    "TGN-id",
    "TGN-mean",
    "TGN-no-mem",
    "TGN-sum",
    "TGN-time",
];

/// Model config of a named variant, starting from `base` dimensions.
/// Every variant uses the `last` aggregator except `TGN-mean`.
pub fn variant_config(name: &str, base: &ModelConfig) -> Result<ModelConfig> {
    let mut c = ModelConfig {
        memory: true,
        embedding: EmbeddingMode::Attn,
        aggregator: Aggregator::Last,
        layers: 1,
        ..base.clone()
    };
    match name {
        "TGN-attn" => {}
        "TGN-2l" => c.layers = 2,
        "TGN-no-mem" => c.memory = false,
        "TGN-id" => c.embedding = EmbeddingMode::Id,
        "TGN-time" => c.embedding = EmbeddingMode::Time,
        "TGN-sum" => c.embedding = EmbeddingMode::Sum,
        "TGN-mean" => c.aggregator = Aggregator::Mean,
        other => return Err(Error::Config(format!("unknown variant {other:?}"))),
    }
    if c.embedding != EmbeddingMode::Attn {
        c.d_embed = c.d_memory;
    }
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub variant: String,
    pub f1: f64,
    pub acc: f64,
    pub sec_per_epoch: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Train each variant (phase 1) under the same seed and split, then score
/// next-gaze prediction on the test sessions. Rows sorted by name.
pub fn run_ablation(
    names: &[String],
    train: &[TrainSession],
    test: &[PreparedSession],
    base: &TrainConfig,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    let mut names = names.to_vec();
    names.sort();
    names.dedup();
    let opts = EvalOptions {
        batch_window: base.batch_window,
        seed,
    };
    let pairs: Vec<_> = test.iter().map(|p| (p, 0)).collect();
    let mut rows = Vec::with_capacity(names.len());
    for name in &names {
        let cfg = TrainConfig {
            model: variant_config(name, &base.model)?,
            ..base.clone()
        };
        let outcome = train_phase1(train, &cfg, seed)?;
        let counts = evaluate_model(&cfg.model, &outcome.params, &pairs, &opts)?;
        let (link, _) = total(&counts);
        rows.push(AblationRow {
            variant: name.clone(),
            f1: f1(&link),
            acc: accuracy(&link).unwrap_or(0.0),
            sec_per_epoch: median(outcome.log.iter().map(|e| e.seconds).collect()),
        });
    }
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("variant,f1,acc,sec_per_epoch\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.variant, r.f1, r.acc, r.sec_per_epoch));
    }
    s
}

/// Mean and sample standard deviation (0 for a single value). A group of
/// identical values gives exactly that value with deviation 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if let Some(&first) = xs.first() {
        if xs.iter().all(|&x| x == first) {
            return (first, 0.0);
        }
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodingRow {
    pub facilitator_type: FacilitatorType,
    pub sessions: usize,
    pub onehot: (f64, f64),
    pub external: Option<(f64, f64)>,
}

pub fn encoding_csv(rows: &[EncodingRow]) -> String {
    let mut s = String::from(
        "facilitator_type,sessions,onehot_f1_mean,onehot_f1_std,external_f1_mean,external_f1_std\n",
    );
    for r in rows {
        let (em, es) = match r.external {
            Some((m, d)) => (m.to_string(), d.to_string()),
            None => (String::new(), String::new()),
        };
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.facilitator_type.as_str(),
            r.sessions,
            r.onehot.0,
            r.onehot.1,
            em,
            es
        ));
    }
    s
}

/// `<session_id>.messages.csv` for every session of the corpus.
pub fn load_external_messages(
    dir: &Path,
    corpus: &Corpus,
) -> Result<HashMap<String, Vec<Vec<f64>>>> {
    let mut out = HashMap::new();
    for s in &corpus.sessions {
        let path = dir.join(format!("{}.messages.csv", s.id()));
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        out.insert(s.id().to_string(), parse_message_rows(&text)?);
    }
    Ok(out)
}

/// Default training session: first training session led by a music teacher.
pub fn default_encoding_session(corpus: &Corpus, plan: &SplitPlan) -> Result<String> {
    plan.train
        .iter()
        .find(|id| {
            corpus
                .get(id)
                .is_some_and(|s| s.spec.facilitator_type == FacilitatorType::MusicTeacher)
        })
        .cloned()
        .ok_or_else(|| Error::Session("no training session with a music teacher".into()))
}

fn per_session_f1(
    corpus: &Corpus,
    train_id: &str,
    cfg: &TrainConfig,
    seed: u64,
    source: impl Fn(&Session) -> MessageSource,
) -> Result<Vec<(FacilitatorType, f64)>> {
    let train_session = corpus
        .get(train_id)
        .ok_or_else(|| Error::Session(format!("unknown session {train_id}")))?;
    let mut model = cfg.model.clone();
    let ts = TrainSession::new(train_session, &source(train_session), cfg.validation_fraction)?;
    model.d_feat = ts.prep.feats.first().map_or(model.d_feat, |f| f.len());
    let cfg = TrainConfig {
        model,
        ..cfg.clone()
    };
    let outcome = train_phase1(std::slice::from_ref(&ts), &cfg, seed)?;
    let others: Vec<&Session> = corpus.sessions.iter().filter(|s| s.id() != train_id).collect();
    let preps = others
        .iter()
        .map(|s| PreparedSession::new(s, &source(s)))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<_> = preps.iter().map(|p| (p, 0)).collect();
    let opts = EvalOptions {
        batch_window: cfg.batch_window,
        seed,
    };
    let counts = evaluate_model(&cfg.model, &outcome.params, &pairs, &opts)?;
    Ok(others
        .iter()
        .zip(&counts)
        .map(|(s, c)| (s.spec.facilitator_type, f1(&c.link)))
        .collect())
}

fn group(scores: &[(FacilitatorType, f64)]) -> Result<Vec<(FacilitatorType, usize, (f64, f64))>> {
    FacilitatorType::ALL
        .iter()
        .map(|&ft| {
            let xs: Vec<f64> = scores.iter().filter(|s| s.0 == ft).map(|s| s.1).collect();
            if xs.is_empty() {
                return Err(Error::Session(format!(
                    "no evaluation session with facilitator type {}",
                    ft.as_str()
                )));
            }
            Ok((ft, xs.len(), mean_std(&xs)))
        })
        .collect()
}

/// Train next-gaze on one session and score every other session, grouped
/// by facilitator type. The external column is filled only when external
/// message vectors are given.
pub fn compare_encodings(
    corpus: &Corpus,
    train_id: &str,
    cfg: &TrainConfig,
    seed: u64,
    external: Option<&HashMap<String, Vec<Vec<f64>>>>,
) -> Result<Vec<EncodingRow>> {
    let onehot = group(&per_session_f1(corpus, train_id, cfg, seed, |_| MessageSource::OneHot)?)?;
    let ext = match external {
        Some(map) => {
            for s in &corpus.sessions {
                if !map.contains_key(s.id()) {
                    return Err(Error::Session(format!("no external messages for {}", s.id())));
                }
            }
            let scores = per_session_f1(corpus, train_id, cfg, seed, |s| {
                MessageSource::External(map[s.id()].clone())
            })?;
            Some(group(&scores)?)
        }
        None => None,
    };
    Ok(onehot
        .into_iter()
        .enumerate()
        .map(|(i, (ft, n, stats))| EncodingRow {
            facilitator_type: ft,
            sessions: n,
            onehot: stats,
            external: ext.as_ref().map(|e| e[i].2),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variants_are_distinct_and_named() {
        let base = ModelConfig::default();
        let configs: Vec<_> = VARIANT_NAMES
            .iter()
            .map(|n| variant_config(n, &base).unwrap())
            .collect();
        for i in 0..configs.len() {
            for j in i + 1..configs.len() {
                assert_ne!(configs[i], configs[j]);
            }
        }
        assert!(!variant_config("TGN-no-mem", &base).unwrap().memory);
        assert!(variant_config("TGN-x", &base).is_err());
        let mut sorted = VARIANT_NAMES.to_vec();
        sorted.sort();
        assert_eq!(sorted, VARIANT_NAMES.to_vec());
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[0.4, 0.4, 0.4]), (0.4, 0.0));
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(vec![]), 0.0);
    }

    #[test]
    fn csv_leaves_external_blank() {
        let rows = [EncodingRow {
            facilitator_type: FacilitatorType::Teacher,
            sessions: 2,
            onehot: (0.5, 0.1),
            external: None,
        }];
        let csv = encoding_csv(&rows);
        assert_eq!(csv.lines().nth(1).unwrap(), "teacher,2,0.5,0.1,,");
    }
}

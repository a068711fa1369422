//! Small hand-checkable corpora used by tests, docs, and examples.

use std::collections::BTreeMap;

use crate::corpus::{AsrStatus, Corpus, Dialogue, Exchange, ExtraSchema};

fn exchange(index: usize, status: AsrStatus, confidence: Option<f64>) -> Exchange {
    Exchange {
        index,
        asr_status: status,
        asr_confidence: confidence,
        timeout_prompt: false,
        asr_rejection: false,
        barge_in: false,
        rater_labels: None,
        iq_label: None,
        extras_numeric: BTreeMap::new(),
        extras_boolean: BTreeMap::new(),
    }
}

/// A seven-exchange dialogue whose dual-view aggregate values are known by
/// hand: exchanges 1, 2 and 6 are system-only, 3, 4 and 7 have a complete
/// ASR result, 5 an incomplete one.
///
/// Per-exchange `%ASRSuccess` is (user view / system view):
/// 0/0, 0/0, 1/0.33, 1/0.5, 0.66/0.4, 0.66/0.33, 0.75/0.43, and
/// `{#}ASRSuccess` with a window of 3 is 0/0, 0/0, 1/1, 2/2, 2/2, 2/1, 2/1.
pub fn reference_dialogue() -> Dialogue {
    Dialogue {
        id: "reference".into(),
        exchanges: vec![
            exchange(1, AsrStatus::None, None),
            exchange(2, AsrStatus::None, None),
            exchange(3, AsrStatus::Complete, Some(0.9)),
            exchange(4, AsrStatus::Complete, Some(0.8)),
            exchange(5, AsrStatus::Incomplete, Some(0.4)),
            exchange(6, AsrStatus::None, None),
            exchange(7, AsrStatus::Complete, Some(0.85)),
        ],
    }
}

/// [`reference_dialogue`] wrapped in a corpus.
pub fn reference_corpus() -> Corpus {
    Corpus {
        dialogues: vec![reference_dialogue()],
        schema_extras: ExtraSchema::default(),
    }
}

/// CSV encoding of [`reference_dialogue`] in the corpus file schema.
pub fn reference_corpus_csv() -> String {
    "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in\n\
     reference,1,none,,0,0,0\n\
     reference,2,none,,0,0,0\n\
     reference,3,complete,0.9,0,0,0\n\
     reference,4,complete,0.8,0,0,0\n\
     reference,5,incomplete,0.4,0,0,0\n\
     reference,6,none,,0,0,0\n\
     reference,7,complete,0.85,0,0,0\n"
        .to_string()
}

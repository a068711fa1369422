//! Dialogue data model, CSV ingestion/validation, and rating merge.
//!
//! A corpus is a list of dialogues; a dialogue is an ordered, non-empty list
//! of system-user exchanges. Exchanges optionally carry per-annotator quality
//! ratings and/or a merged quality label on the 1..5 scale.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

/// Outcome of the speech recogniser for one exchange. `None` means the
/// exchange had no ASR event at all (e.g. a system-only turn).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsrStatus {
    Complete,
    Incomplete,
    None,
}

impl AsrStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AsrStatus::Complete => "complete",
            AsrStatus::Incomplete => "incomplete",
            AsrStatus::None => "none",
        }
    }
}

impl fmt::Display for AsrStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One system-user exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    /// 1-based position within the owning dialogue.
    pub index: usize,
    pub asr_status: AsrStatus,
    /// Present iff `asr_status != None`.
    pub asr_confidence: Option<f64>,
    pub timeout_prompt: bool,
    pub asr_rejection: bool,
    pub barge_in: bool,
    /// Individual annotator ratings, when available.
    pub rater_labels: Option<Vec<u8>>,
    /// Merged quality label in 1..=5.
    pub iq_label: Option<u8>,
    /// Extra numeric parameters, keyed by declared column name.
    pub extras_numeric: BTreeMap<String, f64>,
    /// Extra boolean parameters.
    pub extras_boolean: BTreeMap<String, bool>,
}

impl Exchange {
    /// True iff the exchange contains a user utterance. Derived: an ASR
    /// event or a barge-in both imply user activity.
    pub fn user_turn_present(&self) -> bool {
        self.asr_status != AsrStatus::None || self.barge_in
    }

    pub fn asr_success(&self) -> bool {
        self.asr_status == AsrStatus::Complete
    }

    pub fn timeout_or_rejection(&self) -> bool {
        self.timeout_prompt || self.asr_rejection
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub id: String,
    pub exchanges: Vec<Exchange>,
}

impl Dialogue {
    pub fn len(&self) -> usize {
        self.exchanges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exchanges.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.exchanges.iter().all(|e| e.iq_label.is_some())
    }
}

/// Kind of a declared extra column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtraKind {
    Numeric,
    Boolean,
}

/// Declared extra columns, in header order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtraSchema {
    pub columns: Vec<(String, ExtraKind)>,
}

impl ExtraSchema {
    pub fn numeric_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|(_, k)| *k == ExtraKind::Numeric)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn boolean_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|(_, k)| *k == ExtraKind::Boolean)
            .map(|(n, _)| n.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub dialogues: Vec<Dialogue>,
    pub schema_extras: ExtraSchema,
}

impl Corpus {
    pub fn exchange_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.len()).sum()
    }

    pub fn is_labeled(&self) -> bool {
        self.dialogues.iter().all(|d| d.is_labeled())
    }

    pub fn max_dialogue_len(&self) -> usize {
        self.dialogues.iter().map(|d| d.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("undeclared column `{0}` (extras need an `x_num_` or `x_bool_` prefix)")]
    UnknownColumn(String),
    #[error("row {row}: cannot parse column `{column}`: {detail}")]
    TypeError {
        row: usize,
        column: String,
        detail: String,
    },
    #[error("dialogue `{dialogue}`: expected exchange index {expected}, found {found}")]
    IndexGap {
        dialogue: String,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: quality label {value} outside 1..=5")]
    LabelOutOfRange { row: usize, value: i64 },
    #[error("row {row}: asr_confidence must be present exactly when asr_status != none")]
    ConfidencePresenceMismatch { row: usize },
    #[error("row {row}: asr_status=complete cannot coincide with asr_rejection")]
    RejectionOnComplete { row: usize },
    #[error("dialogue `{0}`: rows are not contiguous or the id repeats")]
    DuplicateDialogue(String),
    #[error("dialogue `{0}`: some exchanges are labeled and some are not")]
    PartialLabels(String),
    #[error("empty rating list")]
    EmptyRatings,
    #[error("rating {0} outside 1..=5")]
    RatingOutOfRange(i64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

const REQUIRED_COLUMNS: [&str; 7] = [
    "dialogue_id",
    "exchange_index",
    "asr_status",
    "asr_confidence",
    "timeout_prompt",
    "asr_rejection",
    "barge_in",
];

struct HeaderLayout {
    required: [usize; 7],
    ratings: Vec<usize>,
    iq_label: Option<usize>,
    extras: Vec<(String, ExtraKind, usize)>,
}

fn parse_header(headers: &csv::StringRecord) -> Result<HeaderLayout, CorpusError> {
    let mut required = [usize::MAX; 7];
    let mut ratings: Vec<(usize, usize)> = Vec::new();
    let mut iq_label = None;
    let mut extras = Vec::new();

    for (pos, name) in headers.iter().enumerate() {
        if let Some(slot) = REQUIRED_COLUMNS.iter().position(|c| *c == name) {
            required[slot] = pos;
        } else if name == "iq_label" {
            iq_label = Some(pos);
        } else if let Some(k) = name.strip_prefix("rating_") {
            let k: usize = k
                .parse()
                .map_err(|_| CorpusError::UnknownColumn(name.to_string()))?;
            ratings.push((k, pos));
        } else if let Some(base) = name.strip_prefix("x_num_") {
            extras.push((base.to_string(), ExtraKind::Numeric, pos));
        } else if let Some(base) = name.strip_prefix("x_bool_") {
            extras.push((base.to_string(), ExtraKind::Boolean, pos));
        } else {
            return Err(CorpusError::UnknownColumn(name.to_string()));
        }
    }
    for (slot, col) in REQUIRED_COLUMNS.iter().enumerate() {
        if required[slot] == usize::MAX {
            return Err(CorpusError::MissingColumn(col.to_string()));
        }
    }
    ratings.sort();
    for (i, (k, _)) in ratings.iter().enumerate() {
        if *k != i + 1 {
            return Err(CorpusError::MissingColumn(format!("rating_{}", i + 1)));
        }
    }
    Ok(HeaderLayout {
        required,
        ratings: ratings.into_iter().map(|(_, p)| p).collect(),
        iq_label,
        extras,
    })
}

fn parse_bool(field: &str, row: usize, column: &str) -> Result<bool, CorpusError> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CorpusError::TypeError {
            row,
            column: column.to_string(),
            detail: format!("expected 0 or 1, got `{other}`"),
        }),
    }
}

/// Parse a corpus CSV from a reader. The extra-column schema is declared by
/// the header itself (`x_num_`/`x_bool_` prefixes).
pub fn parse_corpus_reader<R: Read>(reader: R) -> Result<Corpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let layout = parse_header(rdr.headers()?)?;

    let mut dialogues: Vec<Dialogue> = Vec::new();
    let mut seen_ids: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut current: Option<Dialogue> = None;

    for (i, record) in rdr.records().enumerate() {
        let row = i + 2; // 1-based, counting the header line
        let record = record?;
        let get = |pos: usize| record.get(pos).unwrap_or("");

        let dialogue_id = get(layout.required[0]).to_string();
        let index: usize =
            get(layout.required[1])
                .parse()
                .map_err(|e| CorpusError::TypeError {
                    row,
                    column: "exchange_index".into(),
                    detail: format!("{e}"),
                })?;
        let asr_status = match get(layout.required[2]) {
            "complete" => AsrStatus::Complete,
            "incomplete" => AsrStatus::Incomplete,
            "none" => AsrStatus::None,
            other => {
                return Err(CorpusError::TypeError {
                    row,
                    column: "asr_status".into(),
                    detail: format!("expected complete|incomplete|none, got `{other}`"),
                })
            }
        };
        let conf_field = get(layout.required[3]);
        let asr_confidence = if conf_field.is_empty() {
            None
        } else {
            let v: f64 = conf_field.parse().map_err(|e| CorpusError::TypeError {
                row,
                column: "asr_confidence".into(),
                detail: format!("{e}"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(CorpusError::TypeError {
                    row,
                    column: "asr_confidence".into(),
                    detail: format!("{v} outside [0,1]"),
                });
            }
            Some(v)
        };
        if asr_confidence.is_some() != (asr_status != AsrStatus::None) {
            return Err(CorpusError::ConfidencePresenceMismatch { row });
        }
        let timeout_prompt = parse_bool(get(layout.required[4]), row, "timeout_prompt")?;
        let asr_rejection = parse_bool(get(layout.required[5]), row, "asr_rejection")?;
        let barge_in = parse_bool(get(layout.required[6]), row, "barge_in")?;
        if asr_status == AsrStatus::Complete && asr_rejection {
            return Err(CorpusError::RejectionOnComplete { row });
        }

        let mut rater_labels = None;
        if !layout.ratings.is_empty() {
            let mut labels = Vec::with_capacity(layout.ratings.len());
            let mut any = false;
            for &pos in &layout.ratings {
                let field = get(pos);
                if field.is_empty() {
                    continue;
                }
                any = true;
                let v: i64 = field.parse().map_err(|e| CorpusError::TypeError {
                    row,
                    column: "rating".into(),
                    detail: format!("{e}"),
                })?;
                if !(1..=5).contains(&v) {
                    return Err(CorpusError::LabelOutOfRange { row, value: v });
                }
                labels.push(v as u8);
            }
            if any {
                rater_labels = Some(labels);
            }
        }

        let mut iq_label = None;
        if let Some(pos) = layout.iq_label {
            let field = get(pos);
            if !field.is_empty() {
                let v: i64 = field.parse().map_err(|e| CorpusError::TypeError {
                    row,
                    column: "iq_label".into(),
                    detail: format!("{e}"),
                })?;
                if !(1..=5).contains(&v) {
                    return Err(CorpusError::LabelOutOfRange { row, value: v });
                }
                iq_label = Some(v as u8);
            }
        }
        // An explicit iq_label column wins; otherwise merge the ratings.
        if iq_label.is_none() {
            if let Some(labels) = &rater_labels {
                iq_label = Some(merge_ratings(labels)?);
            }
        }

        let mut extras_numeric = BTreeMap::new();
        let mut extras_boolean = BTreeMap::new();
        for (name, kind, pos) in &layout.extras {
            match kind {
                ExtraKind::Numeric => {
                    let v: f64 = get(*pos).parse().map_err(|e| CorpusError::TypeError {
                        row,
                        column: format!("x_num_{name}"),
                        detail: format!("{e}"),
                    })?;
                    extras_numeric.insert(name.clone(), v);
                }
                ExtraKind::Boolean => {
                    let v = parse_bool(get(*pos), row, &format!("x_bool_{name}"))?;
                    extras_boolean.insert(name.clone(), v);
                }
            }
        }

        let exchange = Exchange {
            index,
            asr_status,
            asr_confidence,
            timeout_prompt,
            asr_rejection,
            barge_in,
            rater_labels,
            iq_label,
            extras_numeric,
            extras_boolean,
        };

        let start_new = match &current {
            Some(d) => d.id != dialogue_id,
            None => true,
        };
        if start_new {
            if let Some(d) = current.take() {
                dialogues.push(d);
            }
            if !seen_ids.insert(dialogue_id.clone()) {
                return Err(CorpusError::DuplicateDialogue(dialogue_id));
            }
            if exchange.index != 1 {
                return Err(CorpusError::IndexGap {
                    dialogue: dialogue_id,
                    expected: 1,
                    found: exchange.index,
                });
            }
            current = Some(Dialogue {
                id: dialogue_id,
                exchanges: vec![exchange],
            });
        } else {
            let d = current.as_mut().unwrap();
            let expected = d.exchanges.len() + 1;
            if exchange.index != expected {
                return Err(CorpusError::IndexGap {
                    dialogue: d.id.clone(),
                    expected,
                    found: exchange.index,
                });
            }
            d.exchanges.push(exchange);
        }
    }
    if let Some(d) = current.take() {
        dialogues.push(d);
    }

    for d in &dialogues {
        let labeled = d.exchanges.iter().filter(|e| e.iq_label.is_some()).count();
        if labeled != 0 && labeled != d.exchanges.len() {
            return Err(CorpusError::PartialLabels(d.id.clone()));
        }
    }

    let schema_extras = ExtraSchema {
        columns: layout
            .extras
            .iter()
            .map(|(n, k, _)| (n.clone(), *k))
            .collect(),
    };
    Ok(Corpus {
        dialogues,
        schema_extras,
    })
}

pub fn parse_corpus<P: AsRef<Path>>(path: P) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_corpus_reader(std::io::BufReader::new(file))
}

/// Write a corpus back to the CSV schema accepted by [`parse_corpus`].
/// Field values round-trip exactly (floats use the shortest representation
/// that reparses to the same value).
pub fn serialize_corpus<W: Write>(corpus: &Corpus, writer: W) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);

    let rater_count = corpus
        .dialogues
        .iter()
        .flat_map(|d| &d.exchanges)
        .filter_map(|e| e.rater_labels.as_ref().map(|r| r.len()))
        .max()
        .unwrap_or(0);
    let has_labels = corpus
        .dialogues
        .iter()
        .flat_map(|d| &d.exchanges)
        .any(|e| e.iq_label.is_some());

    let mut header: Vec<String> = REQUIRED_COLUMNS.iter().map(|s| s.to_string()).collect();
    for k in 1..=rater_count {
        header.push(format!("rating_{k}"));
    }
    if has_labels {
        header.push("iq_label".into());
    }
    for (name, kind) in &corpus.schema_extras.columns {
        match kind {
            ExtraKind::Numeric => header.push(format!("x_num_{name}")),
            ExtraKind::Boolean => header.push(format!("x_bool_{name}")),
        }
    }
    wtr.write_record(&header)?;

    for d in &corpus.dialogues {
        for e in &d.exchanges {
            let mut rec: Vec<String> = vec![
                d.id.clone(),
                e.index.to_string(),
                e.asr_status.as_str().to_string(),
                e.asr_confidence.map(|v| v.to_string()).unwrap_or_default(),
                (e.timeout_prompt as u8).to_string(),
                (e.asr_rejection as u8).to_string(),
                (e.barge_in as u8).to_string(),
            ];
            for k in 0..rater_count {
                rec.push(
                    e.rater_labels
                        .as_ref()
                        .and_then(|r| r.get(k))
                        .map(|v| v.to_string())
                        .unwrap_or_default(),
                );
            }
            if has_labels {
                rec.push(e.iq_label.map(|v| v.to_string()).unwrap_or_default());
            }
            for (name, kind) in &corpus.schema_extras.columns {
                match kind {
                    ExtraKind::Numeric => rec.push(e.extras_numeric[name].to_string()),
                    ExtraKind::Boolean => rec.push((e.extras_boolean[name] as u8).to_string()),
                }
            }
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn serialize_corpus_to_path<P: AsRef<Path>>(
    corpus: &Corpus,
    path: P,
) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)?;
    serialize_corpus(corpus, std::io::BufWriter::new(file))
}

/// Merge per-annotator ratings into a single label via the median. For
/// even-length lists the lower median is taken so the label stays integral.
pub fn merge_ratings(labels: &[u8]) -> Result<u8, CorpusError> {
    if labels.is_empty() {
        return Err(CorpusError::EmptyRatings);
    }
    for &l in labels {
        if !(1..=5).contains(&l) {
            return Err(CorpusError::RatingOutOfRange(l as i64));
        }
    }
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Diagnostic check: each dialogue is expected to open with a label of 5.
/// Violations are reported as warnings, never as errors.
pub fn first_exchange_label_check(dialogue: &Dialogue) -> Vec<String> {
    match dialogue.exchanges.first().and_then(|e| e.iq_label) {
        Some(l) if l != 5 => vec![format!(
            "dialogue `{}`: first exchange labeled {} (expected 5)",
            dialogue.id, l
        )],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn fig2_csv() -> &'static str {
        "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in\n\
         d1,1,none,,0,0,0\n\
         d1,2,none,,0,0,0\n\
         d1,3,complete,0.9,0,0,0\n\
         d1,4,complete,0.8,0,0,0\n\
         d1,5,incomplete,0.4,0,0,0\n\
         d1,6,none,,0,0,0\n\
         d1,7,complete,0.85,0,0,0\n"
    }

    #[test]
    fn parses_fig2_dialogue() {
        let corpus = parse_corpus_reader(fig2_csv().as_bytes()).unwrap();
        assert_eq!(corpus.dialogues.len(), 1);
        let d = &corpus.dialogues[0];
        assert_eq!(d.len(), 7);
        let user_turns = d.exchanges.iter().filter(|e| e.user_turn_present()).count();
        assert_eq!(user_turns, 4);
    }

    #[test]
    fn header_only_is_empty_corpus() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in\n";
        let corpus = parse_corpus_reader(csv.as_bytes()).unwrap();
        assert_eq!(corpus.dialogues.len(), 0);
    }

    #[test]
    fn index_gap_is_rejected() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in\n\
                   d1,1,none,,0,0,0\n\
                   d1,2,none,,0,0,0\n\
                   d1,4,none,,0,0,0\n";
        match parse_corpus_reader(csv.as_bytes()) {
            Err(CorpusError::IndexGap {
                expected, found, ..
            }) => {
                assert_eq!((expected, found), (3, 4));
            }
            other => panic!("expected IndexGap, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_rejected() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection\nd1,1,none,,0,0\n";
        assert!(matches!(
            parse_corpus_reader(csv.as_bytes()),
            Err(CorpusError::MissingColumn(c)) if c == "barge_in"
        ));
    }

    #[test]
    fn confidence_presence_mismatch() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in\n\
                   d1,1,complete,,0,0,0\n";
        assert!(matches!(
            parse_corpus_reader(csv.as_bytes()),
            Err(CorpusError::ConfidencePresenceMismatch { row: 2 })
        ));
    }

    #[test]
    fn complete_with_rejection_rejected() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in\n\
                   d1,1,complete,0.9,0,1,0\n";
        assert!(matches!(
            parse_corpus_reader(csv.as_bytes()),
            Err(CorpusError::RejectionOnComplete { row: 2 })
        ));
    }

    #[test]
    fn label_out_of_range_rejected() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in,iq_label\n\
                   d1,1,none,,0,0,0,6\n";
        assert!(matches!(
            parse_corpus_reader(csv.as_bytes()),
            Err(CorpusError::LabelOutOfRange { row: 2, value: 6 })
        ));
    }

    #[test]
    fn ratings_are_merged_to_median() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in,rating_1,rating_2,rating_3\n\
                   d1,1,none,,0,0,0,3,4,5\n";
        let corpus = parse_corpus_reader(csv.as_bytes()).unwrap();
        assert_eq!(corpus.dialogues[0].exchanges[0].iq_label, Some(4));
    }

    #[test]
    fn merge_ratings_examples() {
        assert_eq!(merge_ratings(&[5, 5, 5]).unwrap(), 5);
        assert_eq!(merge_ratings(&[3, 4, 5]).unwrap(), 4);
        assert_eq!(merge_ratings(&[2, 5, 5]).unwrap(), 5);
        // lower median on even-length lists
        assert_eq!(merge_ratings(&[2, 3]).unwrap(), 2);
        assert!(matches!(merge_ratings(&[]), Err(CorpusError::EmptyRatings)));
        assert!(matches!(
            merge_ratings(&[0]),
            Err(CorpusError::RatingOutOfRange(0))
        ));
    }

    #[test]
    fn merge_ratings_matches_sorted_middle_for_all_triples() {
        for a in 1u8..=5 {
            for b in 1u8..=5 {
                for c in 1u8..=5 {
                    let mut s = [a, b, c];
                    s.sort_unstable();
                    assert_eq!(merge_ratings(&[a, b, c]).unwrap(), s[1]);
                }
            }
        }
    }

    #[test]
    fn first_label_check() {
        let mk = |label: Option<u8>| Dialogue {
            id: "d".into(),
            exchanges: vec![Exchange {
                index: 1,
                asr_status: AsrStatus::None,
                asr_confidence: None,
                timeout_prompt: false,
                asr_rejection: false,
                barge_in: false,
                rater_labels: None,
                iq_label: label,
                extras_numeric: BTreeMap::new(),
                extras_boolean: BTreeMap::new(),
            }],
        };
        assert!(first_exchange_label_check(&mk(Some(5))).is_empty());
        assert_eq!(first_exchange_label_check(&mk(Some(3))).len(), 1);
        assert!(first_exchange_label_check(&mk(None)).is_empty());
    }

    #[test]
    fn extras_parsed_by_prefix() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in,x_num_WPST,x_bool_Reprompt\n\
                   d1,1,none,,0,0,0,2.5,1\n";
        let corpus = parse_corpus_reader(csv.as_bytes()).unwrap();
        let e = &corpus.dialogues[0].exchanges[0];
        assert_eq!(e.extras_numeric["WPST"], 2.5);
        assert!(e.extras_boolean["Reprompt"]);
        assert_eq!(corpus.schema_extras.columns.len(), 2);
    }

    #[test]
    fn undeclared_column_rejected() {
        let csv = "dialogue_id,exchange_index,asr_status,asr_confidence,timeout_prompt,asr_rejection,barge_in,bogus\nd1,1,none,,0,0,0,x\n";
        assert!(matches!(
            parse_corpus_reader(csv.as_bytes()),
            Err(CorpusError::UnknownColumn(c)) if c == "bogus"
        ));
    }

    #[test]
    fn roundtrip_fig2() {
        let corpus = parse_corpus_reader(fig2_csv().as_bytes()).unwrap();
        let mut buf = Vec::new();
        serialize_corpus(&corpus, &mut buf).unwrap();
        let again = parse_corpus_reader(buf.as_slice()).unwrap();
        assert_eq!(corpus, again);
    }

    proptest! {
        #[test]
        fn merge_is_permutation_invariant(mut v in proptest::collection::vec(1u8..=5, 1..8)) {
            let base = merge_ratings(&v).unwrap();
            v.reverse();
            prop_assert_eq!(merge_ratings(&v).unwrap(), base);
        }

        #[test]
        fn merge_constant_is_identity(label in 1u8..=5, n in 1usize..6) {
            let v = vec![label; n];
            prop_assert_eq!(merge_ratings(&v).unwrap(), label);
        }
    }
}

//! Temporal interaction parameters on three levels (exchange, window,
//! dialogue), each computed from the system view and the user view.
//!
//! The extractor walks each dialogue once and maintains running aggregates
//! plus a bounded window buffer per view, so a dialogue of length L costs
//! O(L * n) instead of the O(L^2) a from-scratch recomputation would.
//! [`dialogue_level_value`] and [`window_level_value`] are the from-scratch
//! counterparts; tests hold the two routes to exact equality.
//!
//! Feature name grammar: `<prefix><base>:<view>` with prefix one of
//! `""` (exchange), `#`, `%`, `Mean` (dialogue), `{#}`, `{Mean}` (window)
//! and view `sys` or `usr`. Exchange-level names carry no view suffix.

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;

use thiserror::Error;

use crate::corpus::{Corpus, Dialogue, Exchange, ExtraSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum View {
    System,
    User,
}

impl View {
    pub fn suffix(&self) -> &'static str {
        match self {
            View::System => "sys",
            View::User => "usr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Exchange,
    Window,
    Dialogue,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Exchange => "exchange",
            Level::Window => "window",
            Level::Dialogue => "dialogue",
        }
    }
}

/// Aggregate statistic applied on the window or dialogue level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Count,
    Percent,
    Mean,
}

/// `Orig` keeps the single (system) view for the view-dependent parameters;
/// `Ext` additionally emits their user-view twins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Orig,
    Ext,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Orig => "orig",
            Variant::Ext => "ext",
        }
    }
}

/// Parameter base names discarded by default (task-dependent or textual
/// parameters; they only occur as extra columns, if at all).
pub const DEFAULT_DISCARD: [&str; 7] = [
    "Activity",
    "LoopName",
    "Prompt",
    "SemanticParse",
    "SystemDialogueAct",
    "UserDialogueAct",
    "Utterance",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSetConfig {
    pub variant: Variant,
    pub levels: BTreeSet<Level>,
    pub window_size: usize,
    pub discard: BTreeSet<String>,
}

impl Default for FeatureSetConfig {
    fn default() -> Self {
        FeatureSetConfig {
            variant: Variant::Ext,
            levels: [Level::Exchange, Level::Window, Level::Dialogue]
                .into_iter()
                .collect(),
            window_size: 3,
            discard: DEFAULT_DISCARD.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl FeatureSetConfig {
    pub fn with_levels(mut self, levels: &[Level]) -> Self {
        self.levels = levels.iter().copied().collect();
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_window(mut self, n: usize) -> Self {
        self.window_size = n;
        self
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.levels.is_empty() {
            return Err(FeatureError::ConfigInvalid("empty level set".into()));
        }
        if self.window_size < 1 {
            return Err(FeatureError::ConfigInvalid("window_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn levels_label(&self) -> String {
        let mut parts = Vec::new();
        for l in [Level::Exchange, Level::Window, Level::Dialogue] {
            if self.levels.contains(&l) {
                parts.push(l.as_str());
            }
        }
        parts.join("+")
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature configuration: {0}")]
    ConfigInvalid(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("dialogue has no exchanges")]
    EmptyDialogue,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-exchange feature rows under a fixed configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<u8>>,
    /// (dialogue id, exchange index) per row.
    pub dialogue_boundaries: Vec<(String, usize)>,
}

impl FeatureMatrix {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["dialogue_id".to_string(), "exchange_index".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("iq_label".into());
        wtr.write_record(&header).map_err(csv_io)?;
        for (i, row) in self.rows.iter().enumerate() {
            let (id, idx) = &self.dialogue_boundaries[i];
            let mut rec = vec![id.clone(), idx.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(
                self.labels
                    .as_ref()
                    .map(|l| l[i].to_string())
                    .unwrap_or_default(),
            );
            wtr.write_record(&rec).map_err(csv_io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> FeatureError {
    FeatureError::Io(std::io::Error::new(std::io::ErrorKind::Other, e))
}

// --- parameter bases -------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum EventBase {
    AsrSuccess,
    TimeoutPrompt,
    AsrRejection,
    TimeoutOrRejection,
    BargeIn,
    Extra(String),
}

impl EventBase {
    fn name(&self) -> &str {
        match self {
            EventBase::AsrSuccess => "ASRSuccess",
            EventBase::TimeoutPrompt => "TimeOutPrompt",
            EventBase::AsrRejection => "ASRRejection",
            EventBase::TimeoutOrRejection => "TimeOutASRRej",
            EventBase::BargeIn => "BargeIn",
            EventBase::Extra(n) => n,
        }
    }

    fn value(&self, e: &Exchange) -> bool {
        match self {
            EventBase::AsrSuccess => e.asr_success(),
            EventBase::TimeoutPrompt => e.timeout_prompt,
            EventBase::AsrRejection => e.asr_rejection,
            EventBase::TimeoutOrRejection => e.timeout_or_rejection(),
            EventBase::BargeIn => e.barge_in,
            EventBase::Extra(n) => e.extras_boolean[n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum NumericBase {
    /// ASR confidence; absent on exchanges without an ASR event. The user
    /// view averages over exchanges carrying a value, the system view
    /// divides the value sum by all eligible exchanges.
    AsrConfidence,
    Extra(String),
}

impl NumericBase {
    fn name(&self) -> &str {
        match self {
            NumericBase::AsrConfidence => "ASRConfidence",
            NumericBase::Extra(n) => n,
        }
    }

    fn value(&self, e: &Exchange) -> Option<f64> {
        match self {
            NumericBase::AsrConfidence => e.asr_confidence,
            NumericBase::Extra(n) => Some(e.extras_numeric[n]),
        }
    }
}

fn event_bases(schema: &ExtraSchema) -> Vec<EventBase> {
    let mut bases = vec![
        EventBase::AsrSuccess,
        EventBase::TimeoutPrompt,
        EventBase::AsrRejection,
        EventBase::TimeoutOrRejection,
        EventBase::BargeIn,
    ];
    for name in schema.boolean_names() {
        bases.push(EventBase::Extra(name.to_string()));
    }
    bases.sort_by(|a, b| a.name().cmp(b.name()));
    bases
}

fn numeric_bases(schema: &ExtraSchema) -> Vec<NumericBase> {
    let mut bases = vec![NumericBase::AsrConfidence];
    for name in schema.numeric_names() {
        bases.push(NumericBase::Extra(name.to_string()));
    }
    bases.sort_by(|a, b| a.name().cmp(b.name()));
    bases
}

fn eligible<'a>(prefix: &'a [Exchange], view: View) -> Vec<&'a Exchange> {
    prefix
        .iter()
        .filter(|e| view == View::System || e.user_turn_present())
        .collect()
}

fn resolve_event(base: &str, schema: &ExtraSchema) -> Result<EventBase, FeatureError> {
    event_bases(schema)
        .into_iter()
        .find(|b| b.name() == base)
        .ok_or_else(|| FeatureError::UnknownParam(base.to_string()))
}

fn resolve_numeric(base: &str, schema: &ExtraSchema) -> Result<NumericBase, FeatureError> {
    numeric_bases(schema)
        .into_iter()
        .find(|b| b.name() == base)
        .ok_or_else(|| FeatureError::UnknownParam(base.to_string()))
}

fn aggregate(
    stat: Statistic,
    base: &str,
    view: View,
    set: &[&Exchange],
    schema: &ExtraSchema,
) -> Result<f64, FeatureError> {
    match stat {
        Statistic::Count => {
            let b = resolve_event(base, schema)?;
            Ok(set.iter().filter(|e| b.value(e)).count() as f64)
        }
        Statistic::Percent => {
            let b = resolve_event(base, schema)?;
            if set.is_empty() {
                return Ok(0.0); // empty-denominator rule
            }
            let count = set.iter().filter(|e| b.value(e)).count() as f64;
            Ok(count / set.len() as f64)
        }
        Statistic::Mean => {
            let b = resolve_numeric(base, schema)?;
            let mut sum = 0.0;
            let mut present = 0usize;
            for e in set {
                if let Some(v) = b.value(e) {
                    sum += v;
                    present += 1;
                }
            }
            let denom = match (&b, view) {
                // value-bearing exchanges only for the user view
                (NumericBase::AsrConfidence, View::User) => present,
                _ => set.len(),
            };
            if denom == 0 {
                Ok(0.0)
            } else {
                Ok(sum / denom as f64)
            }
        }
    }
}

/// Dialogue-level value of one parameter, recomputed from scratch over the
/// prefix `1..=current`.
pub fn dialogue_level_value(
    stat: Statistic,
    base: &str,
    view: View,
    prefix: &[Exchange],
    schema: &ExtraSchema,
) -> Result<f64, FeatureError> {
    let set = eligible(prefix, view);
    aggregate(stat, base, view, &set, schema)
}

/// Window-level value of one parameter, recomputed from scratch: the last
/// `min(n, available)` view-eligible exchanges of the prefix.
pub fn window_level_value(
    stat: Statistic,
    base: &str,
    view: View,
    prefix: &[Exchange],
    n: usize,
    schema: &ExtraSchema,
) -> Result<f64, FeatureError> {
    let set = eligible(prefix, view);
    let start = set.len().saturating_sub(n);
    aggregate(stat, base, view, &set[start..], schema)
}

// --- feature plan ----------------------------------------------------------

#[derive(Debug, Clone)]
enum PlanEntry {
    ExchangeEvent(usize),
    ExchangeNumeric(usize),
    ExchangeUserTurn,
    Agg {
        level: Level,
        stat: Statistic,
        /// Index into the event or numeric base list, depending on `stat`.
        base: usize,
        view: View,
    },
}

struct FeaturePlan {
    names: Vec<String>,
    entries: Vec<PlanEntry>,
    events: Vec<EventBase>,
    numerics: Vec<NumericBase>,
}

fn level_prefix(level: Level, stat: Statistic) -> &'static str {
    match (level, stat) {
        (Level::Dialogue, Statistic::Count) => "#",
        (Level::Dialogue, Statistic::Percent) => "%",
        (Level::Dialogue, Statistic::Mean) => "Mean",
        (Level::Window, Statistic::Count) => "{#}",
        (Level::Window, Statistic::Mean) => "{Mean}",
        _ => unreachable!("no such feature prefix"),
    }
}

fn build_plan(config: &FeatureSetConfig, schema: &ExtraSchema) -> Result<FeaturePlan, FeatureError> {
    config.validate()?;
    let events = event_bases(schema);
    let numerics = numeric_bases(schema);
    let kept = |name: &str| !config.discard.contains(name);

    let mut names = Vec::new();
    let mut entries = Vec::new();

    let views: &[View] = match config.variant {
        Variant::Orig => &[View::System],
        Variant::Ext => &[View::System, View::User],
    };

    // Exchange level: raw values, alphabetical over all bases, no view.
    if config.levels.contains(&Level::Exchange) {
        let mut raw: Vec<(String, PlanEntry)> = Vec::new();
        for (i, b) in events.iter().enumerate() {
            if kept(b.name()) {
                raw.push((b.name().to_string(), PlanEntry::ExchangeEvent(i)));
            }
        }
        for (i, b) in numerics.iter().enumerate() {
            if kept(b.name()) {
                raw.push((b.name().to_string(), PlanEntry::ExchangeNumeric(i)));
            }
        }
        if kept("UserTurnPresent") {
            raw.push(("UserTurnPresent".into(), PlanEntry::ExchangeUserTurn));
        }
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        for (name, entry) in raw {
            names.push(name);
            entries.push(entry);
        }
    }

    // Window and dialogue levels: base-name alphabetical, then the fixed
    // statistic order, then view (sys before usr).
    for level in [Level::Window, Level::Dialogue] {
        if !config.levels.contains(&level) {
            continue;
        }
        let stats_for_event: &[Statistic] = match level {
            Level::Dialogue => &[Statistic::Count, Statistic::Percent],
            Level::Window => &[Statistic::Count],
            Level::Exchange => unreachable!(),
        };
        let mut bases: Vec<(String, bool, usize)> = Vec::new(); // (name, is_event, idx)
        for (i, b) in events.iter().enumerate() {
            if kept(b.name()) {
                bases.push((b.name().to_string(), true, i));
            }
        }
        for (i, b) in numerics.iter().enumerate() {
            if kept(b.name()) {
                bases.push((b.name().to_string(), false, i));
            }
        }
        bases.sort_by(|a, b| a.0.cmp(&b.0));
        for (name, is_event, idx) in bases {
            if is_event {
                for &stat in stats_for_event {
                    // Dialogue-level counts stay single-view: the event total
                    // is what it is, only ratios and means depend on the
                    // denominator, so the user-view twin exists for % only.
                    let stat_views: &[View] = if stat == Statistic::Count && level == Level::Dialogue
                    {
                        &[View::System]
                    } else {
                        views
                    };
                    for &view in stat_views {
                        names.push(format!("{}{}:{}", level_prefix(level, stat), name, view.suffix()));
                        entries.push(PlanEntry::Agg {
                            level,
                            stat,
                            base: idx,
                            view,
                        });
                    }
                }
            } else {
                for &view in views {
                    names.push(format!(
                        "{}{}:{}",
                        level_prefix(level, Statistic::Mean),
                        name,
                        view.suffix()
                    ));
                    entries.push(PlanEntry::Agg {
                        level,
                        stat: Statistic::Mean,
                        base: idx,
                        view,
                    });
                }
            }
        }
    }

    Ok(FeaturePlan {
        names,
        entries,
        events,
        numerics,
    })
}

/// Ordered feature names a configuration will emit for a given extra-column
/// schema. Ordering is level-major (exchange, window, dialogue), then
/// base-name alphabetical, then statistic, then view.
pub fn feature_names(
    config: &FeatureSetConfig,
    schema: &ExtraSchema,
) -> Result<Vec<String>, FeatureError> {
    Ok(build_plan(config, schema)?.names)
}

// --- streaming extraction --------------------------------------------------

/// Per-eligible-exchange record kept in the window buffer.
struct WindowRec {
    events: Vec<bool>,
    numerics: Vec<Option<f64>>,
}

/// Running aggregates for one view.
struct ViewState {
    eligible: usize,
    event_counts: Vec<u64>,
    window: VecDeque<WindowRec>,
    win_event_counts: Vec<u64>,
    window_size: usize,
}

impl ViewState {
    fn new(n_events: usize, window_size: usize) -> Self {
        ViewState {
            eligible: 0,
            event_counts: vec![0; n_events],
            window: VecDeque::with_capacity(window_size + 1),
            win_event_counts: vec![0; n_events],
            window_size,
        }
    }

    fn push(&mut self, rec: WindowRec) {
        self.eligible += 1;
        for (i, &v) in rec.events.iter().enumerate() {
            if v {
                self.event_counts[i] += 1;
            }
        }
        for (i, &v) in rec.events.iter().enumerate() {
            if v {
                self.win_event_counts[i] += 1;
            }
        }
        self.window.push_back(rec);
        if self.window.len() > self.window_size {
            let old = self.window.pop_front().unwrap();
            for (i, &v) in old.events.iter().enumerate() {
                if v {
                    self.win_event_counts[i] -= 1;
                }
            }
        }
    }
}

struct DialogueState {
    system: ViewState,
    user: ViewState,
    /// Running numeric sums per base, per view: (sum, present-count).
    dlg_num: [Vec<(f64, usize)>; 2],
}

impl DialogueState {
    fn new(n_events: usize, n_numerics: usize, window_size: usize) -> Self {
        DialogueState {
            system: ViewState::new(n_events, window_size),
            user: ViewState::new(n_events, window_size),
            dlg_num: [vec![(0.0, 0); n_numerics], vec![(0.0, 0); n_numerics]],
        }
    }

    fn view(&self, view: View) -> &ViewState {
        match view {
            View::System => &self.system,
            View::User => &self.user,
        }
    }

    fn view_idx(view: View) -> usize {
        match view {
            View::System => 0,
            View::User => 1,
        }
    }
}

fn mean_value(
    base: &NumericBase,
    view: View,
    sum: f64,
    present: usize,
    eligible: usize,
) -> f64 {
    let denom = match (base, view) {
        (NumericBase::AsrConfidence, View::User) => present,
        _ => eligible,
    };
    if denom == 0 {
        0.0
    } else {
        sum / denom as f64
    }
}

/// Extract one row per exchange for the whole corpus.
pub fn extract(corpus: &Corpus, config: &FeatureSetConfig) -> Result<FeatureMatrix, FeatureError> {
    let plan = build_plan(config, &corpus.schema_extras)?;
    let mut rows = Vec::with_capacity(corpus.exchange_count());
    let mut boundaries = Vec::with_capacity(corpus.exchange_count());
    let labeled = corpus.is_labeled() && corpus.exchange_count() > 0;
    let mut labels = if labeled { Some(Vec::new()) } else { None };

    for dialogue in &corpus.dialogues {
        extract_dialogue(dialogue, config, &plan, &mut rows, &mut boundaries, &mut labels)?;
    }

    Ok(FeatureMatrix {
        names: plan.names,
        rows,
        labels,
        dialogue_boundaries: boundaries,
    })
}

fn extract_dialogue(
    dialogue: &Dialogue,
    config: &FeatureSetConfig,
    plan: &FeaturePlan,
    rows: &mut Vec<Vec<f64>>,
    boundaries: &mut Vec<(String, usize)>,
    labels: &mut Option<Vec<u8>>,
) -> Result<(), FeatureError> {
    if dialogue.is_empty() {
        return Err(FeatureError::EmptyDialogue);
    }
    let mut state = DialogueState::new(plan.events.len(), plan.numerics.len(), config.window_size);

    for exchange in &dialogue.exchanges {
        let event_vals: Vec<bool> = plan.events.iter().map(|b| b.value(exchange)).collect();
        let num_vals: Vec<Option<f64>> = plan.numerics.iter().map(|b| b.value(exchange)).collect();

        for view in [View::System, View::User] {
            if view == View::User && !exchange.user_turn_present() {
                continue;
            }
            let vi = DialogueState::view_idx(view);
            for (i, v) in num_vals.iter().enumerate() {
                if let Some(x) = v {
                    state.dlg_num[vi][i].0 += x;
                    state.dlg_num[vi][i].1 += 1;
                }
            }
            let vs = match view {
                View::System => &mut state.system,
                View::User => &mut state.user,
            };
            vs.push(WindowRec {
                events: event_vals.clone(),
                numerics: num_vals.clone(),
            });
        }

        let mut row = Vec::with_capacity(plan.entries.len());
        for entry in &plan.entries {
            let value = match entry {
                PlanEntry::ExchangeEvent(i) => event_vals[*i] as u8 as f64,
                PlanEntry::ExchangeNumeric(i) => num_vals[*i].unwrap_or(0.0),
                PlanEntry::ExchangeUserTurn => exchange.user_turn_present() as u8 as f64,
                PlanEntry::Agg {
                    level,
                    stat,
                    base,
                    view,
                } => {
                    let vs = state.view(*view);
                    match (level, stat) {
                        (Level::Dialogue, Statistic::Count) => vs.event_counts[*base] as f64,
                        (Level::Dialogue, Statistic::Percent) => {
                            if vs.eligible == 0 {
                                0.0
                            } else {
                                vs.event_counts[*base] as f64 / vs.eligible as f64
                            }
                        }
                        (Level::Dialogue, Statistic::Mean) => {
                            let (sum, present) =
                                state.dlg_num[DialogueState::view_idx(*view)][*base];
                            mean_value(&plan.numerics[*base], *view, sum, present, vs.eligible)
                        }
                        (Level::Window, Statistic::Count) => vs.win_event_counts[*base] as f64,
                        (Level::Window, Statistic::Mean) => {
                            // Recompute left-to-right over the buffer so the
                            // accumulation order matches a fresh computation.
                            let mut sum = 0.0;
                            let mut present = 0usize;
                            for rec in &vs.window {
                                if let Some(v) = rec.numerics[*base] {
                                    sum += v;
                                    present += 1;
                                }
                            }
                            mean_value(
                                &plan.numerics[*base],
                                *view,
                                sum,
                                present,
                                vs.window.len(),
                            )
                        }
                        _ => unreachable!(),
                    }
                }
            };
            row.push(value);
        }
        rows.push(row);
        boundaries.push((dialogue.id.clone(), exchange.index));
        if let Some(ls) = labels {
            ls.push(exchange.iq_label.expect("labeled corpus"));
        }
    }
    Ok(())
}

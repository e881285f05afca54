//! Human reference corpus: speaker surveys plus turn-level transcripts.
//!
//! Two on-disk layouts are supported. The JSONL layout interleaves
//! `{"kind":"speaker",...}` survey rows and `{"kind":"turn",...}` transcript
//! rows. The csv-dir layout holds a `surveys.csv` plus one transcript CSV per
//! conversation (file stem = conversation id), either beside it or under a
//! `transcripts/` subdirectory.
//!
//! Loading never rejects a record for an out-of-range or missing survey value;
//! it flags it. [`filter_complete`] is the only gate.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const AGE_RANGE: (i64, i64) = (19, 66);
pub const AFFECT_RANGE: (i64, i64) = (1, 9);

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate conversation id `{0}`")]
    DuplicateConversation(String),
    #[error("duplicate speaker id `{0}`")]
    DuplicateSpeaker(String),
    #[error("invalid turn window {start}..={end} (1-based, start >= 1, end >= start)")]
    InvalidWindow { start: usize, end: usize },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    CsvDir,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "csv-dir" | "csvdir" | "csv_dir" => Ok(Self::CsvDir),
            other => Err(format!("unknown corpus format `{other}` (expected jsonl or csv-dir)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }

    fn parse(raw: &str) -> Option<Option<Sex>> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "" => Some(None),
            "male" | "m" => Some(Some(Sex::Male)),
            "female" | "f" => Some(Some(Sex::Female)),
            _ => None,
        }
    }
}

impl std::fmt::Display for Sex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One utterance. `index` is the 0-based position carried by the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker_id: String,
    pub index: u32,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    MissingAge,
    MissingSex,
    MissingAffect,
    /// Outside the reference corpus span; kept.
    AgeOutOfRange,
    AffectOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerRecord {
    pub speaker_id: String,
    pub age: Option<i64>,
    pub sex: Option<Sex>,
    pub overall_affect: Option<i64>,
}

impl SpeakerRecord {
    pub fn flags(&self) -> Vec<RecordFlag> {
        let mut flags = Vec::new();
        match self.age {
            None => flags.push(RecordFlag::MissingAge),
            Some(a) if a < AGE_RANGE.0 || a > AGE_RANGE.1 => flags.push(RecordFlag::AgeOutOfRange),
            Some(_) => {}
        }
        if self.sex.is_none() {
            flags.push(RecordFlag::MissingSex);
        }
        match self.overall_affect {
            None => flags.push(RecordFlag::MissingAffect),
            Some(a) if a < AFFECT_RANGE.0 || a > AFFECT_RANGE.1 => {
                flags.push(RecordFlag::AffectOutOfRange)
            }
            Some(_) => {}
        }
        flags
    }

    /// Every survey field present and affect usable. Out-of-range age only warns.
    pub fn is_complete(&self) -> bool {
        self.flags()
            .iter()
            .all(|f| matches!(f, RecordFlag::AgeOutOfRange))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    EmptyTranscript,
    ParticipantCount,
    MissingSpeakerRecord,
    IncompleteSpeaker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub conversation_id: String,
    /// Distinct speakers in order of first appearance.
    pub participants: Vec<String>,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(conversation_id: impl Into<String>, turns: Vec<Turn>) -> Self {
        let mut participants: Vec<String> = Vec::new();
        for t in &turns {
            if !participants.contains(&t.speaker_id) {
                participants.push(t.speaker_id.clone());
            }
        }
        Self {
            conversation_id: conversation_id.into(),
            participants,
            turns,
        }
    }

    /// Number of turns whose text is empty (preserved from the source).
    pub fn empty_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.text.is_empty()).count()
    }

    pub fn turns_of<'a>(&'a self, speaker_id: &'a str) -> impl Iterator<Item = &'a Turn> + 'a {
        self.turns.iter().filter(move |t| t.speaker_id == speaker_id)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub conversations: Vec<Conversation>,
    pub speakers: IndexMap<String, SpeakerRecord>,
}

impl Corpus {
    pub fn speaker(&self, id: &str) -> Option<&SpeakerRecord> {
        self.speakers.get(id)
    }

    pub fn conversation(&self, id: &str) -> Option<&Conversation> {
        self.conversations.iter().find(|c| c.conversation_id == id)
    }

    /// Why a conversation would be dropped by [`filter_complete`], if at all.
    pub fn drop_reason(&self, conv: &Conversation) -> Option<DropReason> {
        if conv.turns.iter().all(|t| t.text.trim().is_empty()) {
            return Some(DropReason::EmptyTranscript);
        }
        if conv.participants.len() != 2 {
            return Some(DropReason::ParticipantCount);
        }
        for p in &conv.participants {
            match self.speakers.get(p) {
                None => return Some(DropReason::MissingSpeakerRecord),
                Some(rec) if !rec.is_complete() => return Some(DropReason::IncompleteSpeaker),
                Some(_) => {}
            }
        }
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub conversations_in: usize,
    pub conversations_retained: usize,
    pub speakers_retained: usize,
    pub dropped: IndexMap<String, DropReason>,
}

// ---------------------------------------------------------------------------
// JSONL
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum JsonlRow {
    Speaker {
        speaker_id: String,
        #[serde(default)]
        age: Option<i64>,
        #[serde(default)]
        sex: Option<String>,
        #[serde(default)]
        overall_affect: Option<i64>,
    },
    Turn {
        conversation_id: String,
        speaker_id: String,
        index: u32,
        text: String,
    },
}

/// Incrementally assembles conversations, enforcing per-conversation ordering.
#[derive(Default)]
struct Assembler {
    order: Vec<(String, Vec<Turn>)>,
    position: HashMap<String, usize>,
    speakers: IndexMap<String, SpeakerRecord>,
}

impl Assembler {
    fn add_speaker(&mut self, rec: SpeakerRecord) -> Result<()> {
        if self.speakers.contains_key(&rec.speaker_id) {
            return Err(CorpusError::DuplicateSpeaker(rec.speaker_id));
        }
        self.speakers.insert(rec.speaker_id.clone(), rec);
        Ok(())
    }

    /// `contiguous` requires all turns of a conversation to be adjacent rows.
    fn add_turn(
        &mut self,
        conversation_id: String,
        turn: Turn,
        contiguous: bool,
        path: &Path,
        line: usize,
    ) -> Result<()> {
        let slot = match self.position.get(&conversation_id) {
            Some(&i) => {
                if contiguous && i + 1 != self.order.len() {
                    return Err(CorpusError::DuplicateConversation(conversation_id));
                }
                i
            }
            None => {
                self.position.insert(conversation_id.clone(), self.order.len());
                self.order.push((conversation_id, Vec::new()));
                self.order.len() - 1
            }
        };
        let turns = &mut self.order[slot].1;
        if let Some(prev) = turns.last() {
            if turn.index <= prev.index {
                return Err(CorpusError::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: format!(
                        "turn index {} not greater than previous index {}",
                        turn.index, prev.index
                    ),
                });
            }
        }
        turns.push(turn);
        Ok(())
    }

    fn finish(self) -> Corpus {
        Corpus {
            conversations: self
                .order
                .into_iter()
                .map(|(id, turns)| Conversation::new(id, turns))
                .collect(),
            speakers: self.speakers,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_sex(raw: Option<String>, path: &Path, line: usize) -> Result<Option<Sex>> {
    match raw {
        None => Ok(None),
        Some(s) => Sex::parse(&s).ok_or_else(|| CorpusError::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("unrecognised sex value `{s}`"),
        }),
    }
}

pub fn read_jsonl<R: BufRead>(reader: R, path: &Path) -> Result<Corpus> {
    let mut asm = Assembler::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        match row {
            JsonlRow::Speaker {
                speaker_id,
                age,
                sex,
                overall_affect,
            } => {
                let sex = parse_sex(sex, path, line_no)?;
                asm.add_speaker(SpeakerRecord {
                    speaker_id,
                    age,
                    sex,
                    overall_affect,
                })?;
            }
            JsonlRow::Turn {
                conversation_id,
                speaker_id,
                index,
                text,
            } => asm.add_turn(
                conversation_id,
                Turn {
                    speaker_id,
                    index,
                    text,
                },
                true,
                path,
                line_no,
            )?,
        }
    }
    Ok(asm.finish())
}

/// Canonical JSONL: all speaker rows in corpus order, then turn rows grouped
/// by conversation. Reading this output back and writing it again yields the
/// same bytes.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> io::Result<()> {
    for rec in corpus.speakers.values() {
        let row = JsonlRow::Speaker {
            speaker_id: rec.speaker_id.clone(),
            age: rec.age,
            sex: rec.sex.map(|s| s.as_str().to_string()),
            overall_affect: rec.overall_affect,
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    for conv in &corpus.conversations {
        for turn in &conv.turns {
            let row = JsonlRow::Turn {
                conversation_id: conv.conversation_id.clone(),
                speaker_id: turn.speaker_id.clone(),
                index: turn.index,
                text: turn.text.clone(),
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// csv-dir
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct SurveyRow {
    speaker_id: String,
    age: Option<String>,
    sex: Option<String>,
    overall_affect: Option<String>,
}

#[derive(Debug, Deserialize)]
struct TranscriptRow {
    index: u32,
    speaker_id: String,
    #[serde(default)]
    text: String,
}

fn parse_int_cell(cell: Option<String>, field: &str, path: &Path, line: usize) -> Result<Option<i64>> {
    let Some(raw) = cell else { return Ok(None) };
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    raw.parse::<i64>().map(Some).map_err(|_| CorpusError::Malformed {
        path: path.to_path_buf(),
        line,
        message: format!("{field}: `{raw}` is not an integer"),
    })
}

fn csv_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn csv_err(path: &Path, e: csv::Error) -> CorpusError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    CorpusError::Malformed {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn transcript_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut scan = |d: &Path| -> Result<()> {
        for entry in fs::read_dir(d).map_err(io_err(d))? {
            let p = entry.map_err(io_err(d))?.path();
            let is_csv = p.extension().and_then(|e| e.to_str()) == Some("csv");
            let is_survey = p.file_name().and_then(|n| n.to_str()) == Some("surveys.csv");
            if p.is_file() && is_csv && !is_survey {
                files.push(p);
            }
        }
        Ok(())
    };
    scan(dir)?;
    let sub = dir.join("transcripts");
    if sub.is_dir() {
        scan(&sub)?;
    }
    files.sort_by(|a, b| a.file_stem().cmp(&b.file_stem()).then(a.cmp(b)));
    Ok(files)
}

pub fn read_csv_dir(dir: &Path) -> Result<Corpus> {
    let mut asm = Assembler::default();
    let survey_path = dir.join("surveys.csv");
    let mut rdr = csv::Reader::from_path(&survey_path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CorpusError::Io {
            path: survey_path.clone(),
            source,
        },
        other => CorpusError::Malformed {
            path: survey_path.clone(),
            line: 0,
            message: format!("{other:?}"),
        },
    })?;
    let headers = rdr.headers().map_err(|e| csv_err(&survey_path, e))?.clone();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(&survey_path, e))?;
        let line = csv_line(&record);
        let row: SurveyRow = record
            .deserialize(Some(&headers))
            .map_err(|e| csv_err(&survey_path, e))?;
        let sex = parse_sex(row.sex.filter(|s| !s.trim().is_empty()), &survey_path, line)?;
        asm.add_speaker(SpeakerRecord {
            speaker_id: row.speaker_id,
            age: parse_int_cell(row.age, "age", &survey_path, line)?,
            sex,
            overall_affect: parse_int_cell(row.overall_affect, "overall_affect", &survey_path, line)?,
        })?;
    }

    for file in transcript_files(dir)? {
        let conversation_id = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        if asm.position.contains_key(&conversation_id) {
            return Err(CorpusError::DuplicateConversation(conversation_id));
        }
        let mut rdr = csv::Reader::from_path(&file).map_err(|e| csv_err(&file, e))?;
        let headers = rdr.headers().map_err(|e| csv_err(&file, e))?.clone();
        let mut any = false;
        for record in rdr.records() {
            let record = record.map_err(|e| csv_err(&file, e))?;
            let line = csv_line(&record);
            let row: TranscriptRow = record
                .deserialize(Some(&headers))
                .map_err(|e| csv_err(&file, e))?;
            any = true;
            asm.add_turn(
                conversation_id.clone(),
                Turn {
                    speaker_id: row.speaker_id,
                    index: row.index,
                    text: row.text,
                },
                true,
                &file,
                line,
            )?;
        }
        if !any {
            // keep the (empty) conversation so filtering can report it
            asm.position.insert(conversation_id.clone(), asm.order.len());
            asm.order.push((conversation_id, Vec::new()));
        }
    }
    Ok(asm.finish())
}

/// Loads a corpus in the declared layout. Incomplete records are kept.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    match format {
        CorpusFormat::Jsonl => {
            let file = fs::File::open(path).map_err(io_err(path))?;
            read_jsonl(BufReader::new(file), path)
        }
        CorpusFormat::CsvDir => read_csv_dir(path),
    }
}

pub fn filter_complete_with_report(corpus: &Corpus) -> (Corpus, FilterReport) {
    let mut report = FilterReport {
        conversations_in: corpus.conversations.len(),
        ..Default::default()
    };
    let mut conversations = Vec::new();
    for conv in &corpus.conversations {
        match corpus.drop_reason(conv) {
            Some(reason) => {
                report.dropped.insert(conv.conversation_id.clone(), reason);
            }
            None => conversations.push(conv.clone()),
        }
    }
    let speakers: IndexMap<String, SpeakerRecord> = corpus
        .speakers
        .iter()
        .filter(|(id, _)| conversations.iter().any(|c| c.participants.contains(id)))
        .map(|(id, rec)| (id.clone(), rec.clone()))
        .collect();
    report.conversations_retained = conversations.len();
    report.speakers_retained = speakers.len();
    (
        Corpus {
            conversations,
            speakers,
        },
        report,
    )
}

/// Keeps conversations whose two participants have every survey field and a
/// non-empty transcript. Idempotent.
pub fn filter_complete(corpus: &Corpus) -> Corpus {
    filter_complete_with_report(corpus).0
}

/// A slice of a conversation selected by 1-based ordinals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnWindow {
    pub turns: Vec<Turn>,
    /// The conversation was shorter than `start`; the trailing turns were used.
    pub fallback: bool,
}

/// Turns with 1-based ordinal in `start..=end`. A conversation with fewer
/// than `start` turns yields its trailing `min(end - start + 1, len)` turns
/// with `fallback` set.
pub fn select_turn_window(conv: &Conversation, start: usize, end: usize) -> Result<TurnWindow> {
    if start < 1 || end < start {
        return Err(CorpusError::InvalidWindow { start, end });
    }
    let len = conv.turns.len();
    if len < start {
        let width = (end - start + 1).min(len);
        return Ok(TurnWindow {
            turns: conv.turns[len - width..].to_vec(),
            fallback: true,
        });
    }
    let lo = start - 1;
    let hi = end.min(len);
    Ok(TurnWindow {
        turns: conv.turns[lo..hi].to_vec(),
        fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv_of(n: usize) -> Conversation {
        let turns = (0..n)
            .map(|i| Turn {
                speaker_id: if i % 2 == 0 { "a".into() } else { "b".into() },
                index: i as u32,
                text: format!("t{}", i + 1),
            })
            .collect();
        Conversation::new("c", turns)
    }

    fn parse(s: &str) -> Result<Corpus> {
        read_jsonl(s.as_bytes(), Path::new("mem.jsonl"))
    }

    #[test]
    fn empty_jsonl_is_empty_corpus() {
        let c = parse("").unwrap();
        assert!(c.conversations.is_empty());
        assert!(c.speakers.is_empty());
    }

    #[test]
    fn out_of_range_affect_is_flagged_not_rejected() {
        let c = parse(
            r#"{"kind":"speaker","speaker_id":"s","age":30,"sex":"female","overall_affect":11}"#,
        )
        .unwrap();
        let rec = c.speaker("s").unwrap();
        assert_eq!(rec.flags(), vec![RecordFlag::AffectOutOfRange]);
        assert!(!rec.is_complete());
    }

    #[test]
    fn age_outside_reference_span_only_warns() {
        let rec = SpeakerRecord {
            speaker_id: "s".into(),
            age: Some(80),
            sex: Some(Sex::Male),
            overall_affect: Some(5),
        };
        assert_eq!(rec.flags(), vec![RecordFlag::AgeOutOfRange]);
        assert!(rec.is_complete());
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let err = parse("\n{\"kind\":\"turn\"}\n").unwrap_err();
        match err {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_contiguous_conversation_is_duplicate() {
        let src = [
            r#"{"kind":"turn","conversation_id":"c1","speaker_id":"a","index":0,"text":"x"}"#,
            r#"{"kind":"turn","conversation_id":"c2","speaker_id":"a","index":0,"text":"x"}"#,
            r#"{"kind":"turn","conversation_id":"c1","speaker_id":"b","index":1,"text":"y"}"#,
        ]
        .join("\n");
        assert!(matches!(
            parse(&src),
            Err(CorpusError::DuplicateConversation(id)) if id == "c1"
        ));
    }

    #[test]
    fn non_increasing_turn_index_is_malformed() {
        let src = [
            r#"{"kind":"turn","conversation_id":"c1","speaker_id":"a","index":3,"text":"x"}"#,
            r#"{"kind":"turn","conversation_id":"c1","speaker_id":"b","index":3,"text":"y"}"#,
        ]
        .join("\n");
        assert!(matches!(parse(&src), Err(CorpusError::Malformed { line: 2, .. })));
    }

    #[test]
    fn window_inside_long_conversation() {
        let w = select_turn_window(&conv_of(100), 51, 70).unwrap();
        assert!(!w.fallback);
        assert_eq!(w.turns.len(), 20);
        assert_eq!(w.turns[0].text, "t51");
        assert_eq!(w.turns[19].text, "t70");
    }

    #[test]
    fn window_falls_back_for_short_conversation() {
        let w = select_turn_window(&conv_of(10), 51, 70).unwrap();
        assert!(w.fallback);
        assert_eq!(w.turns.len(), 10);
        assert_eq!(w.turns[0].text, "t1");
    }

    #[test]
    fn window_on_exact_length_boundary() {
        let conv = conv_of(70);
        let w = select_turn_window(&conv, 51, 70).unwrap();
        assert!(!w.fallback);
        assert_eq!(w.turns, conv.turns[50..].to_vec());
    }

    #[test]
    fn window_partially_covered_is_truncated_not_fallback() {
        let w = select_turn_window(&conv_of(60), 51, 70).unwrap();
        assert!(!w.fallback);
        assert_eq!(w.turns.len(), 10);
        assert_eq!(w.turns[0].text, "t51");
    }

    #[test]
    fn fallback_window_is_capped_at_window_width() {
        let w = select_turn_window(&conv_of(40), 51, 70).unwrap();
        assert!(w.fallback);
        assert_eq!(w.turns.len(), 20);
        assert_eq!(w.turns[0].text, "t21");
    }

    #[test]
    fn invalid_window_rejected() {
        assert!(select_turn_window(&conv_of(5), 0, 3).is_err());
        assert!(select_turn_window(&conv_of(5), 4, 3).is_err());
    }
}

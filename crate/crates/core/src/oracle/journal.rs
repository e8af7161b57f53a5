//! JSONL session journal: one header line, then events, verdicts and
//! expiries in the order they happened.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{FeedbackRecord, FeedbackSource, Fate, OracleError, SessionSpec, SessionState};
use crate::fusion::{DecisionVector, OracleLabel};
use crate::stream::FusionEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JournalEntry {
    Header {
        spec: SessionSpec,
        created_at: DateTime<Utc>,
    },
    Event {
        event: FusionEvent,
        y_hat: f64,
        decision: OracleLabel,
        pending: bool,
        at: DateTime<Utc>,
    },
    Feedback(FeedbackRecord),
    Expired {
        event_id: String,
        at: DateTime<Utc>,
    },
}

fn write_entries<W: Write>(mut out: W, entries: &[JournalEntry]) -> std::io::Result<()> {
    for entry in entries {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Appends entries to a journal file, creating it if needed.
pub fn append_journal(path: &Path, entries: &[JournalEntry]) -> Result<(), OracleError> {
    if entries.is_empty() {
        return Ok(());
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_entries(BufWriter::new(file), entries)?;
    Ok(())
}

pub fn load_journal(path: &Path, fallback: Option<&SessionSpec>) -> Result<SessionState, OracleError> {
    replay_journal(BufReader::new(File::open(path)?), fallback)
}

/// Rebuilds a session by re-executing its journal.
///
/// A journal without a header line (including an empty one) starts from
/// `fallback`. Any unreadable or inconsistent line aborts with its 1-based
/// number.
pub fn replay_journal<R: BufRead>(reader: R, fallback: Option<&SessionSpec>) -> Result<SessionState, OracleError> {
    let fresh = |spec: &SessionSpec, at| SessionState::new(spec.clone(), at);
    let mut state: Option<SessionState> = None;
    let mut known = HashMap::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let at_line = |message: String| OracleError::Journal {
            line: line_no,
            message,
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: JournalEntry = serde_json::from_str(&line).map_err(|e| at_line(e.to_string()))?;
        match (entry, &mut state) {
            (JournalEntry::Header { spec, created_at }, None) => {
                state = Some(fresh(&spec, created_at).map_err(|e| at_line(e.to_string()))?);
            }
            (JournalEntry::Header { .. }, Some(_)) => return Err(at_line("unexpected second header".into())),
            (entry, slot) => {
                if slot.is_none() {
                    let spec = fallback.ok_or_else(|| at_line("journal does not start with a header".into()))?;
                    *slot = Some(fresh(spec, DateTime::UNIX_EPOCH)?);
                }
                let s = slot.as_mut().expect("initialized above");
                s.replay_entry(entry, &mut known).map_err(|e| at_line(e.to_string()))?;
            }
        }
    }
    let mut state = match (state, fallback) {
        (Some(s), _) => s,
        (None, Some(spec)) => fresh(spec, DateTime::UNIX_EPOCH)?,
        (None, None) => {
            return Err(OracleError::Journal {
                line: 0,
                message: "empty journal and no session spec".into(),
            })
        }
    };
    state.flushed = state.journal.len();
    Ok(state)
}

impl SessionState {
    /// Writes the whole journal, replacing `path`.
    pub fn persist(&self, path: &Path) -> Result<(), OracleError> {
        write_entries(BufWriter::new(File::create(path)?), &self.journal)?;
        Ok(())
    }

    fn replay_entry(
        &mut self,
        entry: JournalEntry,
        known: &mut HashMap<String, (u64, DecisionVector)>,
    ) -> Result<(), OracleError> {
        match entry {
            JournalEntry::Header { .. } => unreachable!("headers are handled by the caller"),
            JournalEntry::Event {
                event,
                y_hat,
                decision,
                pending,
                at,
            } => {
                if self.fates.contains_key(&event.event_id) {
                    return Err(OracleError::DuplicateEvent(event.event_id));
                }
                let (fused, _) = self.fusion.evaluate(&event.decisions)?;
                if fused.to_bits() != y_hat.to_bits() {
                    return Err(OracleError::Validation(format!(
                        "fused output {fused} diverges from journalled {y_hat}"
                    )));
                }
                // Keeps the noisy oracle's generator in step with the original run.
                self.simulated_verdict(&event);
                known.insert(event.event_id.clone(), (event.step, event.decisions.clone()));
                self.record_event(event, y_hat, decision, pending, at);
            }
            JournalEntry::Feedback(record) => {
                let id = record.event_id.as_str();
                match self.fates.get(id) {
                    Some(Fate::Unreviewed) if record.source != FeedbackSource::Human => {}
                    _ => {
                        self.check_pending(id)?;
                        self.pending.retain(|p| p.event.event_id != id);
                    }
                }
                let (step, decisions) = known.get(id).cloned().ok_or_else(|| OracleError::UnknownEvent(id.into()))?;
                self.resolve(id, step, &decisions, record.label, record.source, record.timestamp)?;
                self.journal.push(JournalEntry::Feedback(record));
            }
            JournalEntry::Expired { event_id, at } => {
                self.check_pending(&event_id)?;
                self.pending.retain(|p| p.event.event_id != event_id);
                self.mark_expired(&event_id);
                self.journal.push(JournalEntry::Expired { event_id, at });
            }
        }
        Ok(())
    }
}

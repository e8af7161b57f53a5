use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{FusionEvent, StreamError};
use crate::fusion::{DecisionVector, OracleLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamFormat {
    Jsonl,
    Csv,
}

impl StreamFormat {
    /// Guesses from the extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Jsonl,
        }
    }
}

impl FromStr for StreamFormat {
    type Err = StreamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            other => Err(StreamError::InvalidConfig(format!("unknown stream format '{other}'"))),
        }
    }
}

pub fn load_stream(path: &Path, format: StreamFormat) -> Result<Vec<FusionEvent>, StreamError> {
    read_stream(File::open(path)?, format)
}

pub fn save_stream(path: &Path, events: &[FusionEvent], format: StreamFormat) -> Result<(), StreamError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_stream(&mut out, events, format)?;
    out.flush()?;
    Ok(())
}

pub fn read_stream<R: Read>(reader: R, format: StreamFormat) -> Result<Vec<FusionEvent>, StreamError> {
    let events = match format {
        StreamFormat::Jsonl => read_jsonl(reader)?,
        StreamFormat::Csv => read_csv(reader)?,
    };
    Ok(events)
}

pub fn write_stream<W: Write>(writer: W, events: &[FusionEvent], format: StreamFormat) -> Result<(), StreamError> {
    match format {
        StreamFormat::Jsonl => write_jsonl(writer, events),
        StreamFormat::Csv => write_csv(writer, events),
    }
}

struct Checker {
    dimension: Option<usize>,
    seen: HashSet<String>,
}

impl Checker {
    fn new() -> Self {
        Self {
            dimension: None,
            seen: HashSet::new(),
        }
    }

    fn check(&mut self, line: usize, event: &FusionEvent) -> Result<(), StreamError> {
        let m = event.decisions.len();
        match self.dimension {
            Some(expected) if expected != m => {
                return Err(StreamError::Dimension {
                    line,
                    expected,
                    actual: m,
                })
            }
            None => self.dimension = Some(m),
            _ => {}
        }
        if !self.seen.insert(event.event_id.clone()) {
            return Err(StreamError::DuplicateEvent {
                line,
                event_id: event.event_id.clone(),
            });
        }
        Ok(())
    }
}

fn read_jsonl<R: Read>(reader: R) -> Result<Vec<FusionEvent>, StreamError> {
    let mut events = Vec::new();
    let mut checker = Checker::new();
    for (index, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: FusionEvent = serde_json::from_str(&line).map_err(|e| StreamError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        checker.check(line_no, &event)?;
        events.push(event);
    }
    Ok(events)
}

fn write_jsonl<W: Write>(mut writer: W, events: &[FusionEvent]) -> Result<(), StreamError> {
    for event in events {
        serde_json::to_writer(&mut writer, event).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// CSV rows carry no ids; events get the default preset and step-derived ids.
fn read_csv<R: Read>(reader: R) -> Result<Vec<FusionEvent>, StreamError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let parse_err = |line: usize, message: String| StreamError::Parse { line, message };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names.first() != Some(&"step") {
        return Err(parse_err(1, "header must start with 'step'".into()));
    }
    let has_truth = names.last() == Some(&"truth");
    let m = names.len() - 1 - usize::from(has_truth);
    if m == 0 {
        return Err(parse_err(1, "header names no decision columns".into()));
    }
    for (k, name) in names[1..=m].iter().enumerate() {
        if *name != format!("d{}", k + 1) {
            return Err(parse_err(1, format!("expected column 'd{}', found '{name}'", k + 1)));
        }
    }

    let mut events = Vec::new();
    let mut checker = Checker::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let width = record.len() - 1 - usize::from(has_truth);
        if record.len() < 2 || width != m {
            return Err(StreamError::Dimension {
                line,
                expected: m,
                actual: record.len().saturating_sub(1 + usize::from(has_truth)),
            });
        }
        let step: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(line, format!("bad step '{}'", &record[0])))?;
        let values = (1..=m)
            .map(|k| {
                record[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(line, format!("bad decision '{}' in column d{k}", &record[k])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let decisions = DecisionVector::new(values).map_err(|e| parse_err(line, e.to_string()))?;
        let truth = if has_truth {
            match record[m + 1].trim() {
                "" => None,
                raw => {
                    let v: i64 = raw
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad truth '{raw}'")))?;
                    Some(OracleLabel::from_sign(v).map_err(|e| parse_err(line, e.to_string()))?)
                }
            }
        } else {
            None
        };
        let event = FusionEvent::new("default", step, decisions, truth);
        checker.check(line, &event)?;
        events.push(event);
    }
    Ok(events)
}

fn write_csv<W: Write>(writer: W, events: &[FusionEvent]) -> Result<(), StreamError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let m = events.first().map_or(0, |e| e.decisions.len());
    let has_truth = events.iter().any(|e| e.truth.is_some());
    let mut header = vec!["step".to_string()];
    header.extend((1..=m).map(|k| format!("d{k}")));
    if has_truth {
        header.push("truth".into());
    }
    let csv_err = |e: csv::Error| StreamError::Io(e.into());
    wtr.write_record(&header).map_err(csv_err)?;
    for event in events {
        let mut row = vec![event.step.to_string()];
        row.extend(event.decisions.as_slice().iter().map(f64::to_string));
        if has_truth {
            row.push(event.truth.map_or(String::new(), |t| t.to_string()));
        }
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_without_truth_column() {
        let data = "step,d1,d2\n0,0.5,-0.25\n1,1,1\n";
        let events = read_stream(data.as_bytes(), StreamFormat::Csv).unwrap();
        assert_eq!(events.len(), 2);
        assert!(events.iter().all(|e| e.truth.is_none()));
        assert_eq!(events[0].decisions.as_slice(), &[0.5, -0.25]);
    }

    #[test]
    fn csv_short_row_names_its_line() {
        let data = "step,d1,d2,d3,d4,d5,truth\n0,1,1,1,1,1,1\n1,1,1,1,1,-1\n";
        let err = read_stream(data.as_bytes(), StreamFormat::Csv).unwrap_err();
        match err {
            StreamError::Dimension { line, expected, actual } => {
                assert_eq!((line, expected, actual), (3, 5, 4));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn jsonl_dimension_change_names_its_line() {
        let data = concat!(
            r#"{"event_id":"a","step":0,"decisions":[1,1,1,1,1],"truth":1,"preset_id":"p"}"#,
            "\n",
            r#"{"event_id":"b","step":1,"decisions":[1,1,1,1],"truth":null,"preset_id":"p"}"#,
            "\n"
        );
        let err = read_stream(data.as_bytes(), StreamFormat::Jsonl).unwrap_err();
        assert!(matches!(err, StreamError::Dimension { line: 2, expected: 5, actual: 4 }));
    }

    #[test]
    fn jsonl_garbage_names_its_line() {
        let data = "\n{\"event_id\":\"a\",\"step\":0,\"decisions\":[1],\"truth\":1,\"preset_id\":\"p\"}\n{oops\n";
        let err = read_stream(data.as_bytes(), StreamFormat::Jsonl).unwrap_err();
        assert!(matches!(err, StreamError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn csv_bad_label_is_rejected() {
        let data = "step,d1,truth\n0,0.5,0\n";
        let err = read_stream(data.as_bytes(), StreamFormat::Csv).unwrap_err();
        assert!(matches!(err, StreamError::Parse { line: 2, .. }));
    }
}

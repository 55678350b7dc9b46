//! Trace files: one JSON record per line,
//! `{"t":ms,"source":"phone"|"ar"|"env","body_type":..,"body":..}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{ClientBody, Sender};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Phone,
    Ar,
    Env,
}

impl From<TraceSource> for Sender {
    fn from(s: TraceSource) -> Self {
        match s {
            TraceSource::Phone => Sender::Phone,
            TraceSource::Ar => Sender::Ar,
            TraceSource::Env => Sender::Env,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub source: TraceSource,
    #[serde(flatten)]
    pub body: ClientBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

/// Parse a whole trace. Blank lines are skipped; each record keeps its
/// 1-based line number.
pub fn parse_trace(text: &str) -> Result<Vec<(usize, TraceRecord)>, TraceError> {
    let mut out = Vec::new();
    let mut last_t = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(raw).map_err(|e| TraceError {
            line,
            message: e.to_string(),
        })?;
        if rec.t < last_t {
            return Err(TraceError {
                line,
                message: format!("t={} goes back in time (previous t={last_t})", rec.t),
            });
        }
        if !rec.body.allowed_from(rec.source.into()) {
            return Err(TraceError {
                line,
                message: format!("{} cannot come from {:?}", rec.body.body_type(), rec.source),
            });
        }
        last_t = rec.t;
        out.push((line, rec));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_parses() {
        assert!(parse_trace("").unwrap().is_empty());
        assert!(parse_trace("\n\n").unwrap().is_empty());
    }

    #[test]
    fn out_of_order_names_line() {
        let text = concat!(
            r#"{"t":5,"source":"phone","body_type":"Hello","body":{}}"#,
            "\n",
            r#"{"t":3,"source":"phone","body_type":"Hello","body":{}}"#,
            "\n"
        );
        assert_eq!(parse_trace(text).unwrap_err().line, 2);
    }

    #[test]
    fn schema_errors_name_line() {
        let text = "{\"t\":1,\"source\":\"ar\",\"body_type\":\"Hello\",\"body\":{}}\n{\"t\":2}\n";
        let err = parse_trace(text).unwrap_err();
        assert_eq!(err.line, 2);
        let wrong_source = r#"{"t":1,"source":"env","body_type":"ItemTap","body":{"item_id":1}}"#;
        assert_eq!(parse_trace(wrong_source).unwrap_err().line, 1);
    }

    #[test]
    fn record_round_trips() {
        let line =
            r#"{"t":12,"source":"ar","body_type":"HandSample","body":{"t":12,"pos":[0.0,1.0,-0.5],"pinch":true}}"#;
        let recs = parse_trace(line).unwrap();
        assert_eq!(serde_json::to_string(&recs[0].1).unwrap(), line);
    }
}

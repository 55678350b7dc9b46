//! Replay a trace against a fresh session and record every authoritative
//! update it produces.

use serde::{Deserialize, Serialize};

use super::trace::{parse_trace, TraceError, TraceRecord, TraceSource};
use crate::config::Config;
use crate::protocol::{Envelope, Role};
use crate::session::{Audience, ClientId, Outbound, SessionKernel};

/// Session id used for every replay, so logs do not depend on it.
pub const REPLAY_SESSION: &str = "replay";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Line number of the trace record that caused this update.
    pub cause: usize,
    /// `all`, or the role of the single recipient.
    pub to: String,
    #[serde(flatten)]
    pub envelope: Envelope,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecisionLog {
    pub entries: Vec<LogEntry>,
}

impl DecisionLog {
    /// JSON lines, one entry per line, trailing newline.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("log entries serialize"));
            out.push('\n');
        }
        out
    }
}

/// Drives a session from trace records: phone and AR clients are joined
/// before the first record, their join handshakes are not logged.
#[derive(Debug)]
pub struct Replayer {
    kernel: SessionKernel,
    phone: ClientId,
    ar: ClientId,
}

impl Replayer {
    pub fn new(config: Config) -> Self {
        let mut kernel = SessionKernel::new(REPLAY_SESSION, config);
        let (phone, _) = kernel.join(Role::Phone, 0).expect("fresh session");
        let (ar, _) = kernel.join(Role::Ar, 0).expect("fresh session");
        Self { kernel, phone, ar }
    }

    pub fn kernel(&self) -> &SessionKernel {
        &self.kernel
    }

    pub fn kernel_mut(&mut self) -> &mut SessionKernel {
        &mut self.kernel
    }

    /// Drop the connection of `role` and join again, as a client that
    /// crashed and reconnected. Returns the rejoin handshake.
    pub fn rejoin(&mut self, role: Role, t: u64) -> (ClientId, Vec<Outbound>) {
        let old = match role {
            Role::Phone => self.phone,
            Role::Ar => self.ar,
            Role::Observer => {
                return self.kernel.join(role, t).expect("observers always join");
            }
        };
        self.kernel.leave(old);
        let (id, out) = self.kernel.join(role, t).expect("slot was just freed");
        match role {
            Role::Phone => self.phone = id,
            _ => self.ar = id,
        }
        (id, out)
    }

    pub fn client(&self, role: Role) -> Option<ClientId> {
        match role {
            Role::Phone => Some(self.phone),
            Role::Ar => Some(self.ar),
            Role::Observer => None,
        }
    }

    /// Apply one record and return the raw outbound updates.
    pub fn step(&mut self, rec: &TraceRecord) -> Vec<Outbound> {
        let body = rec.body.clone();
        match rec.source {
            TraceSource::Phone => self.kernel.route(self.phone, rec.t, body, None),
            TraceSource::Ar => self.kernel.route(self.ar, rec.t, body, None),
            TraceSource::Env => self.kernel.route_env(rec.t, body),
        }
    }

    pub fn to_entries(&self, cause: usize, out: Vec<Outbound>) -> Vec<LogEntry> {
        out.into_iter()
            .map(|o| LogEntry {
                cause,
                to: match o.audience {
                    Audience::All => "all".to_owned(),
                    Audience::Role(r) => role_name(r).to_owned(),
                    Audience::Client(c) => self.kernel.role_of(c).map_or("gone", role_name).to_owned(),
                },
                envelope: o.envelope,
            })
            .collect()
    }
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Phone => "phone",
        Role::Ar => "ar",
        Role::Observer => "observer",
    }
}

/// Replay a trace text. Schema problems are reported before anything runs.
pub fn replay(trace: &str, config: &Config) -> Result<DecisionLog, TraceError> {
    let records = parse_trace(trace)?;
    let mut r = Replayer::new(config.clone());
    let mut log = DecisionLog::default();
    for (line, rec) in &records {
        let out = r.step(rec);
        log.entries.extend(r.to_entries(*line, out));
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_gives_empty_log() {
        let log = replay("", &Config::default()).unwrap();
        assert!(log.entries.is_empty());
        assert_eq!(log.to_jsonl(), "");
    }

    #[test]
    fn entries_carry_cause_and_recipient() {
        let trace = concat!(
            r#"{"t":10,"source":"phone","body_type":"TouchSample","body":{"t":10,"touch_id":1,"phase":"down","pos":{"x":2.0,"y":300.0},"in_side_zone":true}}"#,
            "\n",
            r#"{"t":20,"source":"ar","body_type":"ItemTap","body":{"item_id":4}}"#,
            "\n"
        );
        let log = replay(trace, &Config::default()).unwrap();
        let text = log.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"cause":1,"to":"all","seq":4,"session":"replay","sender_role":"server","t_server":10,"body_type":"ModeUpdate","body":{"offloading":true}}"#
        );
        assert!(lines[1].starts_with(r#"{"cause":2,"to":"ar","#), "{}", lines[1]);
        assert!(lines[1].contains(r#""code":"unknown_item""#));
    }
}

//! Line-level comparison of two decision logs.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogDiff {
    /// 1-based line of the first difference.
    pub line: usize,
    pub left: Option<String>,
    pub right: Option<String>,
    pub left_lines: usize,
    pub right_lines: usize,
}

impl fmt::Display for LogDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "logs differ at line {} ({} vs {} lines)",
            self.line, self.left_lines, self.right_lines
        )?;
        writeln!(f, "- {}", self.left.as_deref().unwrap_or("<end of log>"))?;
        write!(f, "+ {}", self.right.as_deref().unwrap_or("<end of log>"))
    }
}

/// `None` when the logs are byte-identical.
pub fn diff_logs(a: &str, b: &str) -> Option<LogDiff> {
    if a == b {
        return None;
    }
    let la: Vec<&str> = a.split_inclusive('\n').collect();
    let lb: Vec<&str> = b.split_inclusive('\n').collect();
    let line = la
        .iter()
        .zip(&lb)
        .position(|(x, y)| x != y)
        .unwrap_or(la.len().min(lb.len()));
    let show = |v: &[&str]| v.get(line).map(|s| s.trim_end_matches('\n').to_owned());
    Some(LogDiff {
        line: line + 1,
        left: show(&la),
        right: show(&lb),
        left_lines: la.len(),
        right_lines: lb.len(),
    })
}

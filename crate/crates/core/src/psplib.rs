//! PSPLIB single-mode (`.sm`) instance reader.
//!
//! Only the job count, the precedence table and the mode-1 durations are
//! kept. Resource sections are skipped without validation. Lines are split on
//! whitespace rather than column offsets, since generator versions differ in
//! alignment.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::network::{NetworkError, ProjectNetwork};

const JOBS_KEY: &str = "jobs (incl. supersource/sink )";
const PRECEDENCE_KEY: &str = "PRECEDENCE RELATIONS:";
const DURATIONS_KEY: &str = "REQUESTS/DURATIONS:";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("header: {0}")]
    MalformedHeader(String),
    #[error("missing section `{0}`")]
    MissingSection(&'static str),
    #[error("PRECEDENCE RELATIONS line {line}: {reason}")]
    MalformedPrecedenceRow { line: usize, reason: String },
    #[error("REQUESTS/DURATIONS line {line}: {reason}")]
    MalformedDurationRow { line: usize, reason: String },
    #[error("{section} lists {found} jobs but the header declares {expected}")]
    JobCountMismatch {
        section: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("precedence relations contain a directed cycle")]
    CycleDetected,
}

impl ParseError {
    /// Name of the file section the error refers to.
    pub fn section(&self) -> &'static str {
        match self {
            ParseError::MalformedHeader(_) => "header",
            ParseError::MissingSection(s) => s,
            ParseError::MalformedPrecedenceRow { .. } | ParseError::CycleDetected => {
                "PRECEDENCE RELATIONS"
            }
            ParseError::MalformedDurationRow { .. } => "REQUESTS/DURATIONS",
            ParseError::JobCountMismatch { section, .. } => section,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsplibInstance {
    pub instance_name: String,
    /// Includes the dummy source and sink.
    pub job_count: usize,
    pub durations: Vec<u32>,
    /// 1-based successor ids per job, as written in the file.
    pub successors: Vec<Vec<usize>>,
}

struct Lines<'a> {
    lines: Vec<&'a str>,
}

impl<'a> Lines<'a> {
    fn find(&self, from: usize, key: &str) -> Option<usize> {
        (from..self.lines.len()).find(|&i| self.lines[i].contains(key))
    }
}

fn is_separator(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('*') || (t.starts_with('-') && t.chars().all(|c| c == '-' || c.is_whitespace()))
}

fn parse_ints(line: &str) -> Option<Vec<i64>> {
    line.split_whitespace().map(|t| t.parse().ok()).collect()
}

/// Parses an `.sm` document. The instance name is left empty; see
/// [`load_sm`] for the path-based variant.
pub fn parse_sm(text: &[u8]) -> Result<PsplibInstance, ParseError> {
    let text = std::str::from_utf8(text)
        .map_err(|_| ParseError::MalformedHeader("input is not ASCII text".into()))?;
    let doc = Lines {
        lines: text.lines().collect(),
    };

    let job_count = {
        let i = doc
            .find(0, JOBS_KEY)
            .ok_or_else(|| ParseError::MalformedHeader(format!("no `{JOBS_KEY}` line")))?;
        let value = doc.lines[i].split(':').nth(1).unwrap_or("").trim();
        let n: usize = value.parse().map_err(|_| {
            ParseError::MalformedHeader(format!("job count `{value}` is not an integer"))
        })?;
        if n < 2 {
            return Err(ParseError::MalformedHeader(format!(
                "job count {n} leaves no room for source and sink"
            )));
        }
        n
    };

    let successors = parse_precedence(&doc, job_count)?;
    let durations = parse_durations(&doc, job_count)?;

    let inst = PsplibInstance {
        instance_name: String::new(),
        job_count,
        durations,
        successors,
    };
    inst.to_network()?;
    Ok(inst)
}

fn parse_precedence(doc: &Lines, job_count: usize) -> Result<Vec<Vec<usize>>, ParseError> {
    let start = doc
        .find(0, PRECEDENCE_KEY)
        .ok_or(ParseError::MissingSection("PRECEDENCE RELATIONS"))?;
    let bad = |line: usize, reason: String| ParseError::MalformedPrecedenceRow {
        line: line + 1,
        reason,
    };
    // skip the column caption
    let mut i = start + 2;
    let mut successors = Vec::with_capacity(job_count);
    loop {
        let Some(&line) = doc.lines.get(i) else {
            return Err(bad(i - 1, "table truncated before its closing separator".into()));
        };
        if is_separator(line) {
            break;
        }
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        let ints = parse_ints(line).ok_or_else(|| bad(i, "non-integer token".into()))?;
        if ints.len() < 3 {
            return Err(bad(i, "expected jobnr, #modes, #successors".into()));
        }
        let expected_job = successors.len() + 1;
        if ints[0] != expected_job as i64 {
            return Err(bad(i, format!("expected job {expected_job}, found {}", ints[0])));
        }
        let declared = ints[2];
        let listed = &ints[3..];
        if declared < 0 || declared as usize != listed.len() {
            return Err(bad(
                i,
                format!("declares {declared} successors but lists {}", listed.len()),
            ));
        }
        let mut row = Vec::with_capacity(listed.len());
        for &s in listed {
            if s < 1 || s as usize > job_count {
                return Err(bad(i, format!("successor {s} outside 1..={job_count}")));
            }
            row.push(s as usize);
        }
        successors.push(row);
        i += 1;
    }
    if successors.len() != job_count {
        return Err(ParseError::JobCountMismatch {
            section: "PRECEDENCE RELATIONS",
            expected: job_count,
            found: successors.len(),
        });
    }
    Ok(successors)
}

fn parse_durations(doc: &Lines, job_count: usize) -> Result<Vec<u32>, ParseError> {
    let start = doc
        .find(0, DURATIONS_KEY)
        .ok_or(ParseError::MissingSection("REQUESTS/DURATIONS"))?;
    let bad = |line: usize, reason: String| ParseError::MalformedDurationRow {
        line: line + 1,
        reason,
    };
    let mut i = start + 1;
    // caption, then a dashed rule
    while let Some(&line) = doc.lines.get(i) {
        i += 1;
        if line.trim_start().starts_with('-') {
            break;
        }
    }
    let mut durations = Vec::with_capacity(job_count);
    loop {
        let Some(&line) = doc.lines.get(i) else {
            return Err(bad(i - 1, "table truncated before its closing separator".into()));
        };
        if is_separator(line) {
            break;
        }
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        let ints = parse_ints(line).ok_or_else(|| bad(i, "non-integer token".into()))?;
        if ints.len() < 3 {
            return Err(bad(i, "expected jobnr, mode, duration".into()));
        }
        let expected_job = durations.len() + 1;
        if ints[0] != expected_job as i64 {
            return Err(bad(i, format!("expected job {expected_job}, found {}", ints[0])));
        }
        if ints[1] != 1 {
            return Err(bad(i, format!("mode {} in a single-mode file", ints[1])));
        }
        let d = u32::try_from(ints[2]).map_err(|_| bad(i, format!("duration {}", ints[2])))?;
        durations.push(d);
        i += 1;
    }
    if durations.len() != job_count {
        return Err(ParseError::JobCountMismatch {
            section: "REQUESTS/DURATIONS",
            expected: job_count,
            found: durations.len(),
        });
    }
    for (job, line_hint) in [(0, start), (job_count - 1, start)] {
        if durations[job] != 0 {
            return Err(bad(
                line_hint,
                format!("dummy job {} has duration {}", job + 1, durations[job]),
            ));
        }
    }
    Ok(durations)
}

/// Reads and parses a file, naming the instance after the file stem.
pub fn load_sm(path: &Path) -> Result<PsplibInstance, LoadError> {
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut inst = parse_sm(&bytes).map_err(|source| LoadError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    inst.instance_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(inst)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

impl PsplibInstance {
    pub fn real_job_count(&self) -> usize {
        self.job_count - 2
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    /// 0-based network plus the integer durations as reals.
    pub fn to_network(&self) -> Result<(ProjectNetwork, Vec<f64>), ParseError> {
        let edges: Vec<(usize, usize)> = self
            .successors
            .iter()
            .enumerate()
            .flat_map(|(job, succ)| succ.iter().map(move |&s| (job, s - 1)))
            .collect();
        let net = ProjectNetwork::new(self.job_count, &edges).map_err(|e| match e {
            NetworkError::CycleDetected => ParseError::CycleDetected,
            other => ParseError::MalformedPrecedenceRow {
                line: 0,
                reason: other.to_string(),
            },
        })?;
        Ok((net, self.durations.iter().map(|&d| f64::from(d)).collect()))
    }

    /// Minimal `.sm` text carrying exactly the fields this reader keeps.
    pub fn to_canonical_sm(&self) -> String {
        let rule = "*".repeat(72);
        let mut out = String::new();
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "{JOBS_KEY}:  {}", self.job_count);
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "{PRECEDENCE_KEY}");
        let _ = writeln!(out, "jobnr.    #modes  #successors   successors");
        for (j, succ) in self.successors.iter().enumerate() {
            let _ = write!(out, "{:4}        1  {:4}    ", j + 1, succ.len());
            for s in succ {
                let _ = write!(out, "{s:4}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(out, "{DURATIONS_KEY}");
        let _ = writeln!(out, "jobnr. mode duration");
        let _ = writeln!(out, "{}", "-".repeat(72));
        for (j, d) in self.durations.iter().enumerate() {
            let _ = writeln!(out, "{:3}      1  {d:4}", j + 1);
        }
        let _ = writeln!(out, "{rule}");
        out
    }
}

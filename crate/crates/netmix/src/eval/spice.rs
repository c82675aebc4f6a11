//! External-simulator adapter: render a candidate netlist into a testbench
//! deck, run the simulator as a subprocess, and scrape named measurements
//! from its output.
//!
//! The adapter never interprets circuit semantics. Decks come from a
//! template with a single `{{NETLIST}}` placeholder; the command template
//! gets `{{DECK_PATH}}` substituted and runs through `sh -c`, so any
//! simulator (or a canned-output stub) works. Measurements are extracted
//! with user-supplied regexes, one capture group each, with SPICE unit
//! suffixes normalized to SI.

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use regex::Regex;
use thiserror::Error;

use crate::eval::{EvalError, Evaluator, Measurements};
use crate::netlist::Netlist;

pub const NETLIST_PLACEHOLDER: &str = "{{NETLIST}}";
pub const DECK_PATH_PLACEHOLDER: &str = "{{DECK_PATH}}";

#[derive(Debug, Error)]
pub enum SpiceError {
    #[error("deck template does not contain {NETLIST_PLACEHOLDER}")]
    MissingPlaceholder,
    #[error("deck template contains {NETLIST_PLACEHOLDER} more than once")]
    MultiplePlaceholders,
    #[error("command template does not contain {DECK_PATH_PLACEHOLDER}")]
    MissingDeckPlaceholder,
    #[error("failed to launch simulator: {0}")]
    SpawnFailure(String),
    #[error("malformed measurement pattern {name:?}: {reason}")]
    MalformedPattern { name: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Substitute the serialized netlist into a testbench template.
pub fn render_deck(n: &Netlist, template: &str) -> Result<String, SpiceError> {
    match template.matches(NETLIST_PLACEHOLDER).count() {
        0 => Err(SpiceError::MissingPlaceholder),
        1 => Ok(template.replacen(NETLIST_PLACEHOLDER, &n.serialize(), 1)),
        _ => Err(SpiceError::MultiplePlaceholders),
    }
}

/// Captured output of one simulator invocation.
#[derive(Debug, Clone, Default)]
pub struct SimOutput {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    /// Non-zero exit, crash, or timeout. Failed runs score -1 on every
    /// metric; they are not errors.
    pub failed: bool,
    pub timed_out: bool,
}

/// Write the deck to a temp file, run the command, and capture the result.
/// A missing binary is a [`SpiceError::SpawnFailure`], distinguished from a
/// simulation that merely failed.
pub fn run_simulation(
    deck: &str,
    cmd_template: &str,
    timeout_s: f64,
) -> Result<SimOutput, SpiceError> {
    if !cmd_template.contains(DECK_PATH_PLACEHOLDER) {
        return Err(SpiceError::MissingDeckPlaceholder);
    }
    let mut tmp = tempfile::Builder::new()
        .prefix("netmix_deck_")
        .suffix(".sp")
        .tempfile()?;
    tmp.write_all(deck.as_bytes())?;
    tmp.flush()?;
    let deck_path = tmp.path().to_string_lossy().into_owned();
    let cmd = cmd_template.replace(DECK_PATH_PLACEHOLDER, &deck_path);

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SpiceError::SpawnFailure(e.to_string()))?;

    let mut stdout_pipe = child.stdout.take().expect("stdout is piped");
    let mut stderr_pipe = child.stderr.take().expect("stderr is piped");
    let stdout_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        use std::io::Read;
        let _ = stdout_pipe.read_to_string(&mut buf);
        buf
    });
    let stderr_thread = std::thread::spawn(move || {
        let mut buf = String::new();
        use std::io::Read;
        let _ = stderr_pipe.read_to_string(&mut buf);
        buf
    });

    let deadline = Instant::now() + Duration::from_secs_f64(timeout_s);
    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            timed_out = true;
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };

    let stdout = stdout_thread.join().unwrap_or_default();
    let stderr = stderr_thread.join().unwrap_or_default();
    let exit_code = status.and_then(|s| s.code());
    if exit_code == Some(127) {
        // `sh` reports a missing command as 127
        return Err(SpiceError::SpawnFailure(format!(
            "command not found: {cmd}"
        )));
    }
    let failed = timed_out || !status.map(|s| s.success()).unwrap_or(false);
    Ok(SimOutput {
        stdout,
        stderr,
        exit_code,
        failed,
        timed_out,
    })
}

/// Parse a numeric literal with an optional SPICE unit suffix
/// (f, p, n, u, m, k, meg, g) into an SI value. Trailing unit names after
/// the suffix are ignored, as SPICE does.
pub fn parse_spice_value(s: &str) -> Option<f64> {
    let s = s.trim();
    let numeric_end = s
        .find(|c: char| !c.is_ascii_digit() && !matches!(c, '.' | '-' | '+' | 'e' | 'E'))
        .unwrap_or(s.len());
    // careful: 'e' may start a suffix rather than an exponent ("3e" vs "3k")
    let (mut num, mut rest) = s.split_at(numeric_end);
    while !num.is_empty() && num.parse::<f64>().is_err() {
        let cut = num.len() - 1;
        rest = &s[cut..];
        num = &s[..cut];
    }
    let value: f64 = num.parse().ok()?;
    let lower = rest.to_ascii_lowercase();
    let exponent: i32 = if lower.starts_with("meg") {
        6
    } else {
        match lower.chars().next() {
            Some('f') => -15,
            Some('p') => -12,
            Some('n') => -9,
            Some('u') => -6,
            Some('m') => -3,
            Some('k') => 3,
            Some('g') => 9,
            _ => 0,
        }
    };
    if exponent == 0 {
        return Some(value);
    }
    // parse mantissa and exponent together so "9.45p" lands on the same
    // double as the literal 9.45e-12
    if num.contains(['e', 'E']) {
        return Some(value * 10f64.powi(exponent));
    }
    format!("{num}e{exponent}").parse().ok()
}

/// A named measurement pattern: a regex with exactly one capture group.
#[derive(Debug, Clone)]
pub struct MeasurePattern {
    pub name: String,
    regex: Regex,
}

impl MeasurePattern {
    pub fn new(name: &str, pattern: &str) -> Result<Self, SpiceError> {
        let regex = Regex::new(pattern).map_err(|e| SpiceError::MalformedPattern {
            name: name.to_string(),
            reason: e.to_string(),
        })?;
        if regex.captures_len() < 2 {
            return Err(SpiceError::MalformedPattern {
                name: name.to_string(),
                reason: "pattern needs one capture group".to_string(),
            });
        }
        Ok(Self {
            name: name.to_string(),
            regex,
        })
    }
}

/// Bind each pattern's first capture to a measurement. Unmatched metrics
/// stay missing and take the -1 reward path.
pub fn parse_measurements(out: &SimOutput, patterns: &[MeasurePattern]) -> Measurements {
    let mut m = Measurements::new();
    for p in patterns {
        let captured = p
            .regex
            .captures(&out.stdout)
            .or_else(|| p.regex.captures(&out.stderr));
        if let Some(c) = captured {
            if let Some(v) = c.get(1).and_then(|g| parse_spice_value(g.as_str())) {
                m.insert(&p.name, v);
            }
        }
    }
    m
}

/// Resolved settings for the external simulator.
#[derive(Debug, Clone)]
pub struct SpiceSettings {
    /// Command template containing `{{DECK_PATH}}`.
    pub command: String,
    pub timeout_s: f64,
    pub max_parallel: usize,
    /// Testbench template containing `{{NETLIST}}` exactly once.
    pub template: String,
    /// (metric name, regex with one capture) pairs.
    pub patterns: Vec<(String, String)>,
}

pub struct SpiceEvaluator {
    settings: SpiceSettings,
    patterns: Vec<MeasurePattern>,
}

impl SpiceEvaluator {
    pub fn new(settings: SpiceSettings) -> Result<Self, SpiceError> {
        if !settings.template.contains(NETLIST_PLACEHOLDER) {
            return Err(SpiceError::MissingPlaceholder);
        }
        let patterns = settings
            .patterns
            .iter()
            .map(|(name, pat)| MeasurePattern::new(name, pat))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { settings, patterns })
    }

    fn evaluate_one(&self, n: &Netlist) -> Result<Measurements, EvalError> {
        let deck = render_deck(n, &self.settings.template)
            .map_err(|e| EvalError::Unavailable(e.to_string()))?;
        let out = run_simulation(&deck, &self.settings.command, self.settings.timeout_s)
            .map_err(|e| EvalError::Unavailable(e.to_string()))?;
        if out.failed {
            // every metric missing: the reward floors at -1
            return Ok(Measurements::new());
        }
        Ok(parse_measurements(&out, &self.patterns))
    }
}

impl Evaluator for SpiceEvaluator {
    fn evaluate(&self, n: &Netlist) -> Result<Measurements, EvalError> {
        self.evaluate_one(n)
    }

    fn evaluate_batch(&self, ns: &[Netlist]) -> Vec<(Result<Measurements, EvalError>, u64)> {
        let limit = self.settings.max_parallel.max(1);
        let mut results = Vec::with_capacity(ns.len());
        for chunk in ns.chunks(limit) {
            let chunk_results: Vec<(Result<Measurements, EvalError>, u64)> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = chunk
                        .iter()
                        .map(|n| {
                            scope.spawn(move || {
                                let start = Instant::now();
                                let r = self.evaluate_one(n);
                                (r, start.elapsed().as_millis() as u64)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap()).collect()
                });
            results.extend(chunk_results);
        }
        results
    }

    fn wall_time_visible(&self) -> bool {
        true
    }
}

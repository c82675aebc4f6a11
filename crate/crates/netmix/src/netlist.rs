//! Core netlist representation: net names, component lines, parsing, and
//! serialization.
//!
//! The format is a deliberately small SPICE subset: one component per line,
//! space-separated as `<prefix><index> <net>... <model> <key>=<value>...`.
//! Blank lines and lines starting with `*` are skipped on input. Net names
//! follow a fixed convention: `0` is ground, and `net_supply_%d`,
//! `net_input_%d`, `net_output_%d`, `net_internal_%d` name the remaining
//! classes. Anything else is a parse error.
//!
//! All types are immutable values after construction; parameter values are
//! kept as the exact decimal strings that appeared in the source so
//! serialization is bit-stable.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::registry::ModelRegistry;

/// Net classification derived from the name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetClass {
    Ground,
    Supply,
    Input,
    Output,
    Internal,
}

impl NetClass {
    /// Ground and supplies act as power rails.
    pub fn is_rail(self) -> bool {
        matches!(self, NetClass::Ground | NetClass::Supply)
    }
}

/// A validated net name. Ordering is byte-wise on the raw string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetName {
    raw: String,
    class: NetClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetNameError {
    #[error("net name {0:?} does not match any recognized class")]
    UnknownClass(String),
    #[error("net name {0:?} has a malformed numeric suffix")]
    BadSuffix(String),
}

fn valid_index_digits(s: &str) -> bool {
    !s.is_empty()
        && s.bytes().all(|b| b.is_ascii_digit())
        && (s.len() == 1 || !s.starts_with('0'))
}

impl NetName {
    pub fn parse(s: &str) -> Result<Self, NetNameError> {
        if s == "0" {
            return Ok(Self {
                raw: s.to_string(),
                class: NetClass::Ground,
            });
        }
        let classes = [
            ("net_supply_", NetClass::Supply),
            ("net_input_", NetClass::Input),
            ("net_output_", NetClass::Output),
            ("net_internal_", NetClass::Internal),
        ];
        for (prefix, class) in classes {
            if let Some(rest) = s.strip_prefix(prefix) {
                if !valid_index_digits(rest) {
                    return Err(NetNameError::BadSuffix(s.to_string()));
                }
                return Ok(Self {
                    raw: s.to_string(),
                    class,
                });
            }
        }
        Err(NetNameError::UnknownClass(s.to_string()))
    }

    pub fn ground() -> Self {
        Self {
            raw: "0".to_string(),
            class: NetClass::Ground,
        }
    }

    pub fn supply(k: usize) -> Self {
        Self {
            raw: format!("net_supply_{k}"),
            class: NetClass::Supply,
        }
    }

    pub fn input(k: usize) -> Self {
        Self {
            raw: format!("net_input_{k}"),
            class: NetClass::Input,
        }
    }

    pub fn output(k: usize) -> Self {
        Self {
            raw: format!("net_output_{k}"),
            class: NetClass::Output,
        }
    }

    pub fn internal(k: usize) -> Self {
        Self {
            raw: format!("net_internal_{k}"),
            class: NetClass::Internal,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn class(&self) -> NetClass {
        self.class
    }

    pub fn is_rail(&self) -> bool {
        self.class.is_rail()
    }

    /// Numeric suffix for named classes; `None` for ground.
    pub fn index(&self) -> Option<usize> {
        self.raw.rsplit('_').next().and_then(|d| d.parse().ok())
    }
}

impl fmt::Display for NetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

/// One netlist line: identifier, ordered terminals, model, ordered params.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLine {
    pub prefix: char,
    pub index: u32,
    pub terminals: Vec<NetName>,
    pub model: String,
    pub params: Vec<(String, String)>,
}

impl ComponentLine {
    pub fn identifier(&self) -> String {
        format!("{}{}", self.prefix, self.index)
    }

    /// Serialized form including the identifier token.
    pub fn serialize(&self) -> String {
        let mut parts = Vec::with_capacity(2 + self.terminals.len() + self.params.len());
        parts.push(self.identifier());
        for t in &self.terminals {
            parts.push(t.as_str().to_string());
        }
        parts.push(self.model.clone());
        for (k, v) in &self.params {
            parts.push(format!("{k}={v}"));
        }
        parts.join(" ")
    }

    /// Serialized form without the identifier token. This is the line-sort
    /// key: the identifier is rewritten after sorting, so including it would
    /// make sorting self-referential.
    pub fn body(&self) -> String {
        let mut parts = Vec::with_capacity(1 + self.terminals.len() + self.params.len());
        for t in &self.terminals {
            parts.push(t.as_str().to_string());
        }
        parts.push(self.model.clone());
        for (k, v) in &self.params {
            parts.push(format!("{k}={v}"));
        }
        parts.join(" ")
    }

    /// Token count of the serialized line: 1 + arity + 1 + param count.
    pub fn token_count(&self) -> usize {
        2 + self.terminals.len() + self.params.len()
    }
}

/// How many input/output/supply nets the task declares. Ports live in the
/// task configuration, not in the netlist text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PortDecl {
    pub inputs: usize,
    pub outputs: usize,
    pub supplies: usize,
}

impl PortDecl {
    pub fn new(inputs: usize, outputs: usize, supplies: usize) -> Self {
        Self {
            inputs,
            outputs,
            supplies,
        }
    }

    /// Declared port nets in a fixed order: inputs, outputs, supplies.
    pub fn nets(&self) -> Vec<NetName> {
        let mut out = Vec::with_capacity(self.inputs + self.outputs + self.supplies);
        out.extend((0..self.inputs).map(NetName::input));
        out.extend((0..self.outputs).map(NetName::output));
        out.extend((0..self.supplies).map(NetName::supply));
        out
    }
}

/// An ordered list of component lines plus the task's port declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub lines: Vec<ComponentLine>,
    pub ports: PortDecl,
}

impl Netlist {
    pub fn empty(ports: PortDecl) -> Self {
        Self {
            lines: Vec::new(),
            ports,
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Newline-separated serialized lines; no trailing newline.
    pub fn serialize(&self) -> String {
        self.lines
            .iter()
            .map(ComponentLine::serialize)
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// All terminal nets in line order, left to right.
    pub fn terminal_nets(&self) -> impl Iterator<Item = &NetName> {
        self.lines.iter().flat_map(|l| l.terminals.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: unknown model {model:?}")]
    UnknownModel { line: usize, model: String },
    #[error("line {line}: model {model:?} takes {expected} terminals, found {found}")]
    ArityMismatch {
        line: usize,
        model: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: malformed net {token:?}")]
    MalformedNet { line: usize, token: String },
    #[error("line {line}: malformed parameter {token:?}")]
    MalformedParam { line: usize, token: String },
    #[error("line {line}: duplicate component identifier {id:?}")]
    DuplicateComponentId { line: usize, id: String },
    #[error("line {line}: malformed component identifier {token:?}")]
    MalformedId { line: usize, token: String },
    #[error("line {line}: cannot split line into identifier, terminals, and model")]
    MalformedLine { line: usize },
}

fn parse_identifier(token: &str, line: usize) -> Result<(char, u32), ParseError> {
    let mut chars = token.chars();
    let prefix = chars.next().ok_or(ParseError::MalformedLine { line })?;
    let rest = chars.as_str();
    if !prefix.is_ascii_uppercase() || !valid_index_digits(rest) {
        return Err(ParseError::MalformedId {
            line,
            token: token.to_string(),
        });
    }
    let index = rest.parse().map_err(|_| ParseError::MalformedId {
        line,
        token: token.to_string(),
    })?;
    Ok((prefix, index))
}

/// Validate a parameter value: plain decimal digits with optional dot,
/// optionally followed by a unit suffix of letters.
fn valid_param_value(v: &str) -> bool {
    let v = v.strip_prefix('-').unwrap_or(v);
    let numeric_end = v
        .find(|c: char| !c.is_ascii_digit() && c != '.')
        .unwrap_or(v.len());
    let (num, suffix) = v.split_at(numeric_end);
    if num.is_empty() || !num.bytes().any(|b| b.is_ascii_digit()) {
        return false;
    }
    if num.bytes().filter(|b| *b == b'.').count() > 1 {
        return false;
    }
    suffix.chars().all(|c| c.is_ascii_alphabetic())
}

/// Parse netlist text. Line order is preserved; every token is validated
/// against the net-name rules and the registry's arity for its model.
pub fn parse_netlist(
    text: &str,
    registry: &ModelRegistry,
    ports: PortDecl,
) -> Result<Netlist, ParseError> {
    let mut lines = Vec::new();
    let mut seen_ids: BTreeSet<(char, u32)> = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let (prefix, index) = parse_identifier(tokens[0], line_no)?;
        if !seen_ids.insert((prefix, index)) {
            return Err(ParseError::DuplicateComponentId {
                line: line_no,
                id: format!("{prefix}{index}"),
            });
        }

        // Trailing key=value tokens are parameters; the token before them
        // is the model, everything in between is a terminal net.
        let mut param_start = tokens.len();
        while param_start > 1 && tokens[param_start - 1].contains('=') {
            param_start -= 1;
        }
        if param_start < 2 {
            return Err(ParseError::MalformedLine { line: line_no });
        }
        let model_token = tokens[param_start - 1];
        let spec = registry
            .get(model_token)
            .ok_or_else(|| ParseError::UnknownModel {
                line: line_no,
                model: model_token.to_string(),
            })?;

        let net_tokens = &tokens[1..param_start - 1];
        if net_tokens.len() != spec.arity() {
            return Err(ParseError::ArityMismatch {
                line: line_no,
                model: model_token.to_string(),
                expected: spec.arity(),
                found: net_tokens.len(),
            });
        }
        let mut terminals = Vec::with_capacity(net_tokens.len());
        for t in net_tokens {
            terminals.push(NetName::parse(t).map_err(|_| ParseError::MalformedNet {
                line: line_no,
                token: t.to_string(),
            })?);
        }

        let mut params = Vec::with_capacity(tokens.len() - param_start);
        for t in &tokens[param_start..] {
            let (key, value) = t.split_once('=').ok_or(ParseError::MalformedParam {
                line: line_no,
                token: t.to_string(),
            })?;
            if key.is_empty() || value.contains('=') || !valid_param_value(value) {
                return Err(ParseError::MalformedParam {
                    line: line_no,
                    token: t.to_string(),
                });
            }
            params.push((key.to_string(), value.to_string()));
        }

        lines.push(ComponentLine {
            prefix,
            index,
            terminals,
            model: model_token.to_string(),
            params,
        });
    }
    Ok(Netlist { lines, ports })
}

/// Serialize a netlist; inverse of [`parse_netlist`] on valid netlists.
pub fn serialize_netlist(n: &Netlist) -> String {
    n.serialize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::mos_registry;

    fn reg() -> ModelRegistry {
        mos_registry((0.42, 100.0), (0.15, 100.0))
    }

    const PFET_LINE: &str =
        "X0 0 net_input_0 net_internal_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.330 l=1.170";

    #[test]
    fn parses_single_component_line() {
        let ports = PortDecl::new(2, 1, 1);
        let n = parse_netlist(PFET_LINE, &reg(), ports).unwrap();
        assert_eq!(n.len(), 1);
        let line = &n.lines[0];
        assert_eq!(line.prefix, 'X');
        assert_eq!(line.index, 0);
        let nets: Vec<&str> = line.terminals.iter().map(|t| t.as_str()).collect();
        assert_eq!(nets, ["0", "net_input_0", "net_internal_0", "net_supply_0"]);
        assert_eq!(line.model, "sky130_fd_pr__pfet_01v8");
        assert_eq!(
            line.params,
            vec![
                ("w".to_string(), "1.330".to_string()),
                ("l".to_string(), "1.170".to_string())
            ]
        );
    }

    #[test]
    fn empty_input_parses_to_empty_netlist() {
        let n = parse_netlist("", &reg(), PortDecl::default()).unwrap();
        assert!(n.is_empty());
        assert_eq!(n.serialize(), "");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = format!("* header comment\n\n{PFET_LINE}\n   \n* trailing");
        let n = parse_netlist(&text, &reg(), PortDecl::new(2, 1, 1)).unwrap();
        assert_eq!(n.len(), 1);
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let text = "X0 0 net_input_0 sky130_fd_pr__nfet_01v8 w=1 l=1";
        let err = parse_netlist(text, &reg(), PortDecl::new(1, 1, 1)).unwrap_err();
        assert!(matches!(
            err,
            ParseError::ArityMismatch {
                expected: 4,
                found: 2,
                ..
            }
        ));
    }

    #[test]
    fn unknown_model_is_reported() {
        let text = "X0 0 net_input_0 net_internal_0 0 mystery_fet w=1";
        let err = parse_netlist(text, &reg(), PortDecl::new(1, 1, 1)).unwrap_err();
        assert!(matches!(err, ParseError::UnknownModel { line: 1, .. }));
    }

    #[test]
    fn malformed_nets_are_reported() {
        for bad in ["vdd", "net_input_", "net_input_01", "net_supply_x"] {
            let text =
                format!("X0 {bad} net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 w=1 l=1");
            let err = parse_netlist(&text, &reg(), PortDecl::new(1, 1, 1)).unwrap_err();
            assert!(
                matches!(err, ParseError::MalformedNet { line: 1, .. }),
                "{bad} should be rejected, got {err:?}"
            );
        }
    }

    #[test]
    fn malformed_params_are_reported() {
        for bad in ["w=", "w=abc", "w=1=2", "=1"] {
            let text = format!("X0 0 net_input_0 net_internal_0 0 sky130_fd_pr__nfet_01v8 {bad}");
            let err = parse_netlist(&text, &reg(), PortDecl::new(1, 1, 1)).unwrap_err();
            assert!(
                matches!(err, ParseError::MalformedParam { line: 1, .. }),
                "{bad} should be rejected, got {err:?}"
            );
        }
    }

    #[test]
    fn duplicate_component_ids_are_reported() {
        let text = format!("{PFET_LINE}\n{PFET_LINE}");
        let err = parse_netlist(&text, &reg(), PortDecl::new(2, 1, 1)).unwrap_err();
        assert!(matches!(
            err,
            ParseError::DuplicateComponentId { line: 2, .. }
        ));
    }

    #[test]
    fn serialization_round_trips() {
        let ports = PortDecl::new(2, 1, 1);
        let n = parse_netlist(PFET_LINE, &reg(), ports).unwrap();
        assert_eq!(n.serialize(), PFET_LINE);
        let again = parse_netlist(&n.serialize(), &reg(), ports).unwrap();
        assert_eq!(again, n);
    }

    #[test]
    fn parse_canonicalizes_whitespace() {
        let sloppy =
            "X0  0\tnet_input_0   net_internal_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.330 l=1.170";
        let n = parse_netlist(sloppy, &reg(), PortDecl::new(1, 1, 1)).unwrap();
        assert_eq!(n.serialize(), PFET_LINE);
    }

    #[test]
    fn token_count_matches_serialized_form() {
        let n = parse_netlist(PFET_LINE, &reg(), PortDecl::new(2, 1, 1)).unwrap();
        let line = &n.lines[0];
        assert_eq!(
            line.token_count(),
            line.serialize().split(' ').count()
        );
        assert_eq!(line.token_count(), 1 + 4 + 1 + 2);
    }

    #[test]
    fn net_name_classes() {
        assert_eq!(NetName::parse("0").unwrap().class(), NetClass::Ground);
        assert_eq!(
            NetName::parse("net_supply_0").unwrap().class(),
            NetClass::Supply
        );
        assert_eq!(
            NetName::parse("net_input_12").unwrap().class(),
            NetClass::Input
        );
        assert_eq!(
            NetName::parse("net_output_3").unwrap().class(),
            NetClass::Output
        );
        assert_eq!(
            NetName::parse("net_internal_10").unwrap().class(),
            NetClass::Internal
        );
        assert!(NetName::parse("00").is_err());
        assert!(NetName::parse("net_internal_01").is_err());
    }

    #[test]
    fn byte_wise_ordering_is_used() {
        // "net_internal_10" < "net_internal_2" byte-wise.
        let a = NetName::parse("net_internal_10").unwrap();
        let b = NetName::parse("net_internal_2").unwrap();
        assert!(a < b);
    }
}

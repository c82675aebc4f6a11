//! Model registry: what each device model looks like on a netlist line.
//!
//! Every model has a fixed terminal count, a role per terminal position, a
//! parameter schema with sizing ranges, and a device class. The registry is
//! the single source of truth the parser, normalizer, sampler, and
//! evaluators consult.

use std::collections::BTreeMap;

/// Role of one terminal position of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalRole {
    Drain,
    Gate,
    Source,
    Bulk,
    In,
    Out,
    Clk,
    Generic,
}

/// Coarse device class used by normalization and the evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceClass {
    Nmos,
    Pmos,
    Subcircuit,
}

/// Behavioral semantics of a subcircuit in gate-level evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    /// out = not(in)
    Inverter,
    /// out = not(data) while clk is high, high-impedance otherwise
    TriInverter,
}

/// Sizing schema for one parameter key.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub key: String,
    pub min: f64,
    pub max: f64,
    pub unit: String,
}

impl ParamSpec {
    pub fn new(key: &str, min: f64, max: f64, unit: &str) -> Self {
        assert!(min <= max, "param range must satisfy min <= max");
        assert!(min > 0.0, "sizing values must be positive");
        Self {
            key: key.to_string(),
            min,
            max,
            unit: unit.to_string(),
        }
    }
}

/// Full description of one model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub roles: Vec<TerminalRole>,
    pub params: Vec<ParamSpec>,
    pub class: DeviceClass,
    pub gate: Option<GateKind>,
}

impl ModelSpec {
    pub fn arity(&self) -> usize {
        self.roles.len()
    }

    pub fn is_mos(&self) -> bool {
        matches!(self.class, DeviceClass::Nmos | DeviceClass::Pmos)
    }

    /// Position of a role within the terminal list, if present.
    pub fn role_position(&self, role: TerminalRole) -> Option<usize> {
        self.roles.iter().position(|r| *r == role)
    }
}

/// Maps model names to their specs.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    entries: BTreeMap<String, ModelSpec>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a model. MOS entries must be 4-terminal with roles exactly
    /// (drain, gate, source, bulk).
    pub fn insert(&mut self, name: &str, spec: ModelSpec) {
        if spec.is_mos() {
            assert_eq!(
                spec.roles,
                vec![
                    TerminalRole::Drain,
                    TerminalRole::Gate,
                    TerminalRole::Source,
                    TerminalRole::Bulk
                ],
                "MOS models must have roles (drain, gate, source, bulk)"
            );
        }
        self.entries.insert(name.to_string(), spec);
    }

    pub fn get(&self, name: &str) -> Option<&ModelSpec> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn merge(&mut self, other: &ModelRegistry) {
        for (name, spec) in &other.entries {
            self.entries.insert(name.clone(), spec.clone());
        }
    }
}

fn mos_spec(class: DeviceClass, w: (f64, f64), l: (f64, f64)) -> ModelSpec {
    ModelSpec {
        roles: vec![
            TerminalRole::Drain,
            TerminalRole::Gate,
            TerminalRole::Source,
            TerminalRole::Bulk,
        ],
        params: vec![
            ParamSpec::new("w", w.0, w.1, "um"),
            ParamSpec::new("l", l.0, l.1, "um"),
        ],
        class,
        gate: None,
    }
}

/// NMOS/PMOS transistor pair with the given width/length sizing ranges.
pub fn mos_registry(w: (f64, f64), l: (f64, f64)) -> ModelRegistry {
    let mut reg = ModelRegistry::new();
    reg.insert("sky130_fd_pr__nfet_01v8", mos_spec(DeviceClass::Nmos, w, l));
    reg.insert("sky130_fd_pr__pfet_01v8", mos_spec(DeviceClass::Pmos, w, l));
    reg
}

/// Inverter and tri-state inverter cells for gate-level tasks. Cell sizes
/// are fixed so the search is over wiring only.
pub fn gate_registry() -> ModelRegistry {
    let mut reg = ModelRegistry::new();
    reg.insert(
        "sky130_fd_pr__inv_01v8",
        ModelSpec {
            roles: vec![TerminalRole::In, TerminalRole::Out],
            params: vec![
                ParamSpec::new("w", 6.0, 6.0, "um"),
                ParamSpec::new("l", 0.15, 0.15, "um"),
            ],
            class: DeviceClass::Subcircuit,
            gate: Some(GateKind::Inverter),
        },
    );
    reg.insert(
        "sky130_fd_pr__invck_01v8",
        ModelSpec {
            roles: vec![TerminalRole::In, TerminalRole::Clk, TerminalRole::Out],
            params: vec![
                ParamSpec::new("w", 6.0, 6.0, "um"),
                ParamSpec::new("l", 0.15, 0.15, "um"),
            ],
            class: DeviceClass::Subcircuit,
            gate: Some(GateKind::TriInverter),
        },
    );
    reg
}

/// Differential pairs and current mirrors for external-simulator synthesis.
pub fn analog_block_registry() -> ModelRegistry {
    let mut reg = ModelRegistry::new();
    let dip = |class| ModelSpec {
        roles: vec![
            TerminalRole::In,
            TerminalRole::In,
            TerminalRole::Out,
            TerminalRole::Out,
        ],
        params: vec![
            ParamSpec::new("w", 0.42, 100.0, "um"),
            ParamSpec::new("l", 0.15, 100.0, "um"),
            ParamSpec::new("ibias", 1e-6, 100e-6, "A"),
        ],
        class,
        gate: None,
    };
    let cum = |class| ModelSpec {
        roles: vec![TerminalRole::In, TerminalRole::Out],
        params: vec![
            ParamSpec::new("w1", 0.42, 100.0, "um"),
            ParamSpec::new("w2", 0.42, 100.0, "um"),
            ParamSpec::new("l", 0.15, 100.0, "um"),
        ],
        class,
        gate: None,
    };
    reg.insert("sky130_fd_pr__ndip_01v8", dip(DeviceClass::Subcircuit));
    reg.insert("sky130_fd_pr__pdip_01v8", dip(DeviceClass::Subcircuit));
    reg.insert("sky130_fd_pr__ncum_01v8", cum(DeviceClass::Subcircuit));
    reg.insert("sky130_fd_pr__pcum_01v8", cum(DeviceClass::Subcircuit));
    reg
}

/// Union of every built-in model set; used by the standalone CLI verbs
/// where no task scopes the model pool.
pub fn combined_registry() -> ModelRegistry {
    let mut reg = mos_registry((0.42, 100.0), (0.15, 100.0));
    reg.merge(&gate_registry());
    reg.merge(&analog_block_registry());
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mos_entries_have_dgsb_roles() {
        let reg = mos_registry((1.0, 1.0), (0.15, 0.15));
        for name in ["sky130_fd_pr__nfet_01v8", "sky130_fd_pr__pfet_01v8"] {
            let spec = reg.get(name).unwrap();
            assert_eq!(spec.arity(), 4);
            assert_eq!(spec.role_position(TerminalRole::Drain), Some(0));
            assert_eq!(spec.role_position(TerminalRole::Bulk), Some(3));
        }
    }

    #[test]
    fn gate_models_have_unique_arities() {
        let reg = gate_registry();
        let inv = reg.get("sky130_fd_pr__inv_01v8").unwrap();
        let invck = reg.get("sky130_fd_pr__invck_01v8").unwrap();
        assert_ne!(inv.arity(), invck.arity());
        assert_eq!(inv.gate, Some(GateKind::Inverter));
        assert_eq!(invck.gate, Some(GateKind::TriInverter));
    }

    #[test]
    #[should_panic]
    fn mos_with_wrong_roles_is_rejected() {
        let mut reg = ModelRegistry::new();
        reg.insert(
            "bad_mos",
            ModelSpec {
                roles: vec![TerminalRole::Gate, TerminalRole::Drain],
                params: vec![],
                class: DeviceClass::Nmos,
                gate: None,
            },
        );
    }
}

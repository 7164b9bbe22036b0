use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Physical role of a formula symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolRole {
    Time,
    Frequency,
    Amplitude,
    ModulationIndex,
    FrequencyDeviation,
    PhaseDeviation,
    Phase,
    DataStream,
    Baseband,
    Message,
    SumBound,
    Constant,
}

/// Whether a symbol varies with time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Valuation {
    Constant,
    Signal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolInfo {
    pub name: String,
    pub role: SymbolRole,
    pub valuation: Valuation,
    pub unit: String,
}

/// Declared formula symbols, keyed by name. Names written with a `(t)`
/// suffix are always signal-valued.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SymbolTable {
    symbols: BTreeMap<String, SymbolInfo>,
}

impl SymbolTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The symbols used by the bundled corpus.
    pub fn standard() -> Self {
        use SymbolRole::*;
        let mut table = Self::empty();
        let entries: [(&str, SymbolRole, &str); 18] = [
            ("t", Time, "s"),
            ("f_c", Frequency, "Hz"),
            ("f_m", Frequency, "Hz"),
            ("f(t)", Frequency, "Hz"),
            ("A", Amplitude, "1"),
            ("A_c", Amplitude, "1"),
            ("m", ModulationIndex, "1"),
            ("k_f", FrequencyDeviation, "rad/s per message unit"),
            ("k_p", PhaseDeviation, "rad per message unit"),
            ("phi", Phase, "rad"),
            ("phi_c", Phase, "rad"),
            ("phi_m", Phase, "rad"),
            ("d(t)", DataStream, "symbol index"),
            ("I(t)", Baseband, "1"),
            ("Q(t)", Baseband, "1"),
            ("m(t)", Message, "1"),
            ("n", SumBound, "1"),
            ("pi", Constant, "1"),
        ];
        for (name, role, unit) in entries {
            let valuation = if name.ends_with("(t)") || role == Time {
                Valuation::Signal
            } else {
                Valuation::Constant
            };
            table
                .declare(SymbolInfo {
                    name: name.to_string(),
                    role,
                    valuation,
                    unit: unit.to_string(),
                })
                .expect("standard table has unique names");
        }
        table
    }

    /// Add a symbol. Returns the rejected entry if the name is already taken
    /// or if a `(t)` name is declared constant-valued.
    pub fn declare(&mut self, info: SymbolInfo) -> Result<(), SymbolInfo> {
        if self.symbols.contains_key(&info.name)
            || (info.name.ends_with("(t)") && info.valuation != Valuation::Signal)
        {
            return Err(info);
        }
        self.symbols.insert(info.name.clone(), info);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&SymbolInfo> {
        self.symbols.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SymbolInfo> {
        self.symbols.values()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

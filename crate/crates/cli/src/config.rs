//! Flat `dotted.key = value` experiment configs.

use std::collections::BTreeMap;

use cstar_core::{FormalOperator, GroupElement, NormBudget, Order, Presentation};
use sha2::{Digest, Sha256};

use crate::error::CliError;

const KNOWN_KEYS: &[&str] = &[
    "presentation.orders",
    "presentation.names",
    "action",
    "experiment",
    "elements.h",
    "elements.g",
    "elements.k",
    "elements.S",
    "elements.T",
    "elements.g1",
    "elements.g2",
    "budget.J_max",
    "budget.J_list",
    "budget.L",
    "budget.R",
    "budget.N",
    "budget.l",
    "budget.k",
    "budget.n_max",
    "budget.max_iterations",
    "budget.support_cap",
    "budget.prune_threshold",
    "budget.residual_target",
    "budget.restarts",
    "budget.census_cap",
    "budget.c_min",
    "budget.C",
    "output.path",
    "output.format",
];

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed config file. Keys are validated against a fixed vocabulary;
/// values are interpreted lazily so a diagnostic can name the offending line.
#[derive(Clone, Debug)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    presentation: Presentation,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::config(Some(line), content, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::config(Some(line), key, "unknown key"));
            }
            let entry = Entry { value: value.to_string(), line };
            if entries.insert(key.to_string(), entry).is_some() {
                return Err(CliError::config(Some(line), key, "duplicate key"));
            }
        }
        let presentation = Self::read_presentation(&entries)?;
        let config = Self { entries, presentation };
        if let Some(action) = config.raw("action") {
            if action != "cayley" {
                return Err(config.error("action", format!("unsupported action `{action}`")));
            }
        }
        if let Some(format) = config.raw("output.format") {
            if format != "csv" {
                return Err(config.error("output.format", format!("unsupported format `{format}`")));
            }
        }
        Ok(config)
    }

    fn read_presentation(entries: &BTreeMap<String, Entry>) -> Result<Presentation, CliError> {
        let get = |key: &str| entries.get(key).ok_or_else(|| CliError::config(None, key, "missing required key"));
        let orders_entry = get("presentation.orders")?;
        let names_entry = get("presentation.names")?;
        let orders = split_list(&orders_entry.value)
            .map(|o| match o {
                "inf" => Ok(Order::Infinite),
                n => n.parse().map(Order::Finite).map_err(|_| {
                    CliError::config(Some(orders_entry.line), "presentation.orders", format!("bad order `{n}`"))
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let names = split_list(&names_entry.value).map(String::from).collect();
        Presentation::new(orders, names)
            .map_err(|e| CliError::config(Some(orders_entry.line), "presentation", e.to_string()))
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::config(self.line(key), key, message)
    }

    fn required(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key).ok_or_else(|| CliError::config(None, key, "missing required key"))
    }

    pub fn element(&self, name: &str) -> Result<GroupElement, CliError> {
        let key = format!("elements.{name}");
        let text = self.required(&key)?;
        self.presentation.parse(text).map_err(|e| self.error(&key, e.to_string()))
    }

    pub fn nontrivial_element(&self, name: &str) -> Result<GroupElement, CliError> {
        let x = self.element(name)?;
        if x.is_identity() {
            return Err(self.error(&format!("elements.{name}"), format!("{name} must be nontrivial")));
        }
        Ok(x)
    }

    pub fn operator(&self, name: &str) -> Result<FormalOperator, CliError> {
        let key = format!("elements.{name}");
        let text = self.required(&key)?;
        FormalOperator::parse(&self.presentation, text).map_err(|e| self.error(&key, e.to_string()))
    }

    pub fn number<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(text) => text.parse().map_err(|_| self.error(key, format!("cannot parse `{text}`"))),
        }
    }

    pub fn positive(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let n = self.number(key, default)?;
        if n == 0 {
            return Err(self.error(key, "must be positive"));
        }
        Ok(n)
    }

    pub fn positive_real(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let x: f64 = self.number(key, default)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(self.error(key, "must be a positive number"));
        }
        Ok(x)
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        let Some(text) = self.raw(key) else { return Ok(None) };
        let values = split_list(text)
            .map(|v| match v.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(self.error(key, format!("bad entry `{v}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(self.error(key, "empty list"));
        }
        Ok(Some(values))
    }

    pub fn norm_budget(&self, seed: u64) -> Result<NormBudget<GroupElement>, CliError> {
        let d = NormBudget::<GroupElement>::default();
        let prune_threshold: f64 = self.number("budget.prune_threshold", d.prune_threshold)?;
        if !(0.0..1.0).contains(&prune_threshold) {
            return Err(self.error("budget.prune_threshold", "must lie in [0, 1)"));
        }
        Ok(NormBudget {
            max_iterations: self.positive("budget.max_iterations", d.max_iterations)?,
            support_cap: self.positive("budget.support_cap", d.support_cap)?,
            prune_threshold,
            residual_target: self.positive_real("budget.residual_target", d.residual_target)?,
            seed_point: None,
            restarts: self.number("budget.restarts", d.restarts)?,
            seed,
        })
    }

    /// Hex SHA-256 over the sorted non-output entries and the run parameters.
    pub fn param_hash(&self, command: &str, seed: u64, slack: f64) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("command={command}\nseed={seed}\nslack={slack:e}\n"));
        for (key, entry) in self.entries.iter().filter(|(k, _)| !k.starts_with("output.")) {
            hasher.update(format!("{key}={}\n", entry.value));
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

use std::collections::BTreeMap;
use std::fmt;

use modwave_core::rng::{derive_seed, purpose, stream};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_GRAMMAR: &str = include_str!("../data/grammar.json");

/// Below this temperature sampling always takes the heaviest alternative.
pub const ARGMAX_TEMPERATURE: f64 = 1e-3;

/// Deliberate defect an alternative introduces into the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    UnbalancedParenthesis,
    UndefinedSymbol,
    FunctionError,
    StrayToken,
}

/// One weighted right-hand side. Tokens are separated by whitespace and
/// `<name>` refers to another nonterminal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alternative {
    pub production: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<Injection>,
}

#[derive(Debug, Clone, PartialEq)]
enum Sym {
    Terminal(String),
    Nonterminal(String),
}

impl Alternative {
    fn symbols(&self) -> Vec<Sym> {
        self.production
            .split_whitespace()
            .map(|tok| match tok.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
                Some(name) if !name.is_empty() => Sym::Nonterminal(name.to_string()),
                _ => Sym::Terminal(tok.to_string()),
            })
            .collect()
    }
}

/// Production rules keyed by nonterminal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grammar {
    pub rules: BTreeMap<String, Vec<Alternative>>,
}

impl Default for Grammar {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_GRAMMAR).expect("bundled grammar is well formed")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("start symbol <{0}> has no rule")]
    MissingStart(String),
    #[error("nonterminal <{0}> has no alternatives")]
    Empty(String),
    #[error("<{nonterminal}> refers to undefined <{missing}>")]
    Undefined { nonterminal: String, missing: String },
    #[error("weight {weight} in <{nonterminal}> must be positive and finite")]
    Weight { nonterminal: String, weight: f64 },
    #[error("<{0}> needs at least one alternative without an injection")]
    OnlyInjections(String),
    #[error("<{0}> cannot derive a finite string")]
    Unproductive(String),
    #[error("temperature must be positive and finite, got {0}")]
    Temperature(f64),
    #[error("shortest derivation has {needed} tokens but max_tokens is {max_tokens}")]
    TokenBudget { needed: usize, max_tokens: usize },
    #[error("max_depth must be at least 1")]
    Depth,
    #[error("invalid grammar JSON: {0}")]
    Json(String),
}

impl Grammar {
    pub fn from_json(text: &str) -> Result<Self, GrammarError> {
        serde_json::from_str(text).map_err(|e| GrammarError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grammar serializes")
    }

    fn check(&self, start: &str) -> Result<(), GrammarError> {
        if !self.rules.contains_key(start) {
            return Err(GrammarError::MissingStart(start.to_string()));
        }
        for (name, alts) in &self.rules {
            if alts.is_empty() {
                return Err(GrammarError::Empty(name.clone()));
            }
            if alts.iter().all(|a| a.inject.is_some()) {
                return Err(GrammarError::OnlyInjections(name.clone()));
            }
            for alt in alts {
                if !(alt.weight > 0.0 && alt.weight.is_finite()) {
                    return Err(GrammarError::Weight {
                        nonterminal: name.clone(),
                        weight: alt.weight,
                    });
                }
                for sym in alt.symbols() {
                    if let Sym::Nonterminal(n) = sym {
                        if !self.rules.contains_key(&n) {
                            return Err(GrammarError::Undefined {
                                nonterminal: name.clone(),
                                missing: n,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sampler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrammarConfig {
    pub grammar: Grammar,
    pub start: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        Self {
            grammar: Grammar::default(),
            start: "formula".into(),
            temperature: 0.8,
            max_tokens: 128,
            max_depth: 8,
            seed: 0,
        }
    }
}

impl GrammarConfig {
    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the grammar and precomputes fallback derivations.
    pub fn compile(&self) -> Result<Sampler, GrammarError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(GrammarError::Temperature(self.temperature));
        }
        if self.max_depth == 0 {
            return Err(GrammarError::Depth);
        }
        self.grammar.check(&self.start)?;
        let sampler = Sampler::build(self)?;
        let needed = sampler.rules[&self.start].fallback_len;
        if needed > self.max_tokens {
            return Err(GrammarError::TokenBudget {
                needed,
                max_tokens: self.max_tokens,
            });
        }
        Ok(sampler)
    }
}

#[derive(Debug, Clone)]
struct CompiledAlt {
    symbols: Vec<Sym>,
    weight: f64,
    /// Tokens produced if every nonterminal follows its fallback.
    fallback_len: usize,
}

#[derive(Debug, Clone)]
struct Rule {
    alts: Vec<CompiledAlt>,
    fallback: usize,
    fallback_len: usize,
    argmax: usize,
}

/// A validated grammar ready for sampling.
#[derive(Debug, Clone)]
pub struct Sampler {
    rules: BTreeMap<String, Rule>,
    start: String,
    temperature: f64,
    max_tokens: usize,
    max_depth: usize,
    seed: u64,
}

impl Sampler {
    fn build(cfg: &GrammarConfig) -> Result<Self, GrammarError> {
        // shortest-height derivations, found by fixpoint iteration
        let mut height: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
        let parsed: BTreeMap<&str, Vec<Vec<Sym>>> = cfg
            .grammar
            .rules
            .iter()
            .map(|(k, alts)| (k.as_str(), alts.iter().map(Alternative::symbols).collect()))
            .collect();
        loop {
            let mut changed = false;
            for (name, alts) in &parsed {
                for (i, syms) in alts.iter().enumerate() {
                    if cfg.grammar.rules[*name][i].inject.is_some() {
                        continue;
                    }
                    let mut h = 0;
                    let mut len = 0;
                    let mut ok = true;
                    for s in syms {
                        match s {
                            Sym::Terminal(_) => len += 1,
                            Sym::Nonterminal(n) => match height.get(n.as_str()) {
                                Some(&(ch, clen, _)) => {
                                    h = h.max(ch);
                                    len += clen;
                                }
                                None => ok = false,
                            },
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let cand = (h + 1, len, i);
                    let better = height.get(name).is_none_or(|&(bh, bl, _)| (cand.0, cand.1) < (bh, bl));
                    if better {
                        height.insert(name, cand);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut rules = BTreeMap::new();
        for (name, alts) in &cfg.grammar.rules {
            let &(_, fallback_len, fallback) = height
                .get(name.as_str())
                .ok_or_else(|| GrammarError::Unproductive(name.clone()))?;
            let compiled: Vec<CompiledAlt> = alts
                .iter()
                .map(|a| {
                    let symbols = a.symbols();
                    let fallback_len = symbols
                        .iter()
                        .map(|s| match s {
                            Sym::Terminal(_) => 1,
                            Sym::Nonterminal(n) => height.get(n.as_str()).map_or(usize::MAX / 4, |h| h.1),
                        })
                        .sum();
                    CompiledAlt {
                        symbols,
                        weight: a.weight,
                        fallback_len,
                    }
                })
                .collect();
            let argmax = (0..compiled.len())
                .fold(0, |best, i| if compiled[i].weight > compiled[best].weight { i } else { best });
            rules.insert(
                name.clone(),
                Rule {
                    alts: compiled,
                    fallback,
                    fallback_len,
                    argmax,
                },
            );
        }
        Ok(Self {
            rules,
            start: cfg.start.clone(),
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
            max_depth: cfg.max_depth,
            seed: cfg.seed,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Selection probabilities of the alternatives of `nonterminal`,
    /// ignoring the depth and token bounds.
    pub fn probabilities(&self, nonterminal: &str) -> Option<Vec<f64>> {
        let rule = self.rules.get(nonterminal)?;
        Some(self.weights(rule, |_| true))
    }

    fn weights(&self, rule: &Rule, allowed: impl Fn(usize) -> bool) -> Vec<f64> {
        let idx: Vec<usize> = (0..rule.alts.len()).filter(|&i| allowed(i)).collect();
        let mut out = vec![0.0; rule.alts.len()];
        if self.temperature < ARGMAX_TEMPERATURE {
            let best = idx
                .iter()
                .copied()
                .fold(idx[0], |b, i| if rule.alts[i].weight > rule.alts[b].weight { i } else { b });
            out[best] = 1.0;
            return out;
        }
        // weight^(1/T), computed in log space
        let logs: Vec<f64> = idx.iter().map(|&i| rule.alts[i].weight.ln() / self.temperature).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        for (&i, l) in idx.iter().zip(&logs) {
            out[i] = (l - top).exp() / total;
        }
        out
    }

    /// Sample `index` of the batch seeded by the configured seed.
    pub fn sample_indexed(&self, index: u64) -> String {
        let mut rng = stream(derive_seed(self.seed, index), purpose::GRAMMAR);
        self.sample_with(&mut rng)
    }

    /// One formula from the configured seed.
    pub fn sample(&self) -> String {
        self.sample_indexed(0)
    }

    pub fn sample_with<R: Rng>(&self, rng: &mut R) -> String {
        let mut out: Vec<String> = Vec::new();
        // pending fallback length of everything still on the stack
        let mut pending = self.rules[&self.start].fallback_len;
        let mut stack: Vec<(Sym, usize)> = vec![(Sym::Nonterminal(self.start.clone()), 0)];
        while let Some((sym, depth)) = stack.pop() {
            let name = match sym {
                Sym::Terminal(t) => {
                    out.push(t);
                    pending -= 1;
                    continue;
                }
                Sym::Nonterminal(n) => n,
            };
            let rule = &self.rules[&name];
            pending -= rule.fallback_len;
            let budget = self.max_tokens.saturating_sub(out.len() + pending);
            let choice = if depth + 1 >= self.max_depth {
                rule.fallback
            } else {
                let w = self.weights(rule, |i| rule.alts[i].fallback_len <= budget);
                pick(rng, &w, rule.argmax)
            };
            let alt = &rule.alts[choice];
            pending += alt.fallback_len;
            for s in alt.symbols.iter().rev() {
                stack.push((s.clone(), depth + 1));
            }
        }
        join_tokens(&out)
    }

    /// Most likely derivation, equal to sampling at zero temperature.
    pub fn argmax(&self) -> String {
        let cold = Self {
            temperature: 0.0,
            ..self.clone()
        };
        cold.sample_with(&mut stream(0, purpose::GRAMMAR))
    }
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64], argmax: usize) -> usize {
    if let Some(i) = weights.iter().position(|&w| w == 1.0) {
        return i;
    }
    match WeightedIndex::new(weights) {
        Ok(dist) => dist.sample(rng),
        Err(_) => argmax,
    }
}

fn is_function(tok: &str) -> bool {
    matches!(tok, "sin" | "cos" | "integral" | "sum")
}

/// Joins tokens with spaces around operators and none inside brackets.
pub fn join_tokens(tokens: &[String]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            let prev = tokens[i - 1].as_str();
            let tight = prev == "(" || is_function(prev) || tok == ")" || tok == ",";
            if !tight {
                out.push(' ');
            }
        }
        out.push_str(tok);
    }
    out
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, alts) in &self.rules {
            let rhs: Vec<&str> = alts.iter().map(|a| a.production.as_str()).collect();
            writeln!(f, "<{name}> ::= {}", rhs.join(" | "))?;
        }
        Ok(())
    }
}

/// `sample_formula` on a fresh sampler.
pub fn sample_formula(config: &GrammarConfig) -> Result<String, GrammarError> {
    Ok(config.compile()?.sample())
}

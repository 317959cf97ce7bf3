//! Integer sequences indexed from 1, with memoized lazy materialization.

use std::fmt;
use std::sync::Mutex;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{format_rational, rational_str, Rational};
use crate::synth::greedy::{ChooseD, ChooseDParams, ChooseL, ChooseLParams, LMinusOne};

/// Rule producing an infinite sequence with a known exact product.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `l(n)` with `∏ (1 − 1/l(n)) = κ`.
    ChooseL(ChooseLParams),
    /// `l(n) − 1` over a `choose_l` run; `∏ (l(n) − 1)/l(n) = κ`.
    LMinusOne { base: ChooseLParams },
    /// `d(n)` with `∏ d(n)/l(n) = target` over a `choose_l` run.
    ChooseD(ChooseDParams),
}

impl Generator {
    /// The exact infinite product this generator certifies.
    pub fn product(&self) -> &Rational {
        match self {
            Generator::ChooseL(p) => &p.kappa,
            Generator::LMinusOne { base } => &base.kappa,
            Generator::ChooseD(p) => &p.target,
        }
    }

    /// The `choose_l` run the generator is defined over.
    pub fn base(&self) -> &ChooseLParams {
        match self {
            Generator::ChooseL(p) => p,
            Generator::LMinusOne { base } => base,
            Generator::ChooseD(p) => &p.base,
        }
    }

    fn start(&self) -> Result<Box<dyn Iterator<Item = BigUint> + Send>> {
        Ok(match self {
            Generator::ChooseL(p) => Box::new(ChooseL::new(p.clone())?),
            Generator::LMinusOne { base } => Box::new(LMinusOne::new(base.clone())?),
            Generator::ChooseD(p) => Box::new(ChooseD::new(p.clone())?),
        })
    }
}

/// How a sequence continues after its explicit prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailRule {
    Constant {
        value: u64,
    },
    /// Finitely many further values; the sequence is undefined beyond them.
    Table {
        values: Vec<u64>,
    },
    /// Generated values with an exact product witness.
    Synthesized {
        #[serde(with = "rational_str")]
        witness: Rational,
        generator: Generator,
    },
}

/// An integer sequence `a(1), a(2), ...`: explicit prefix, then a tail rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    #[serde(default)]
    pub prefix: Vec<u64>,
    pub tail: TailRule,
}

impl SequenceSpec {
    pub fn constant(value: u64) -> Self {
        SequenceSpec {
            prefix: Vec::new(),
            tail: TailRule::Constant { value },
        }
    }

    /// A finite sequence with exactly these values.
    pub fn table(values: Vec<u64>) -> Self {
        SequenceSpec {
            prefix: Vec::new(),
            tail: TailRule::Table { values },
        }
    }

    pub fn synthesized(generator: Generator) -> Self {
        SequenceSpec {
            prefix: Vec::new(),
            tail: TailRule::Synthesized {
                witness: generator.product().clone(),
                generator,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let TailRule::Synthesized { witness, generator } = &self.tail {
            if !self.prefix.is_empty() {
                return Err(Error::descriptor(
                    "a synthesized sequence cannot carry an explicit prefix",
                ));
            }
            if witness != generator.product() {
                return Err(Error::descriptor(format!(
                    "witness {} does not match the generator's product {}",
                    format_rational(witness),
                    format_rational(generator.product())
                )));
            }
            generator.base().validate()?;
        }
        Ok(())
    }

    /// Number of defined terms, or `None` if the sequence is infinite.
    pub fn defined_len(&self) -> Option<usize> {
        match &self.tail {
            TailRule::Table { values } => Some(self.prefix.len() + values.len()),
            _ => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.defined_len().is_none()
    }

    /// The generator, when the sequence is synthesized.
    pub fn generator(&self) -> Option<&Generator> {
        match &self.tail {
            TailRule::Synthesized { generator, .. } => Some(generator),
            _ => None,
        }
    }

    /// The constant value if the whole sequence is constant.
    pub fn as_constant(&self) -> Option<u64> {
        match &self.tail {
            TailRule::Constant { value } if self.prefix.iter().all(|p| p == value) => Some(*value),
            _ => None,
        }
    }
}

struct State {
    values: Vec<BigUint>,
    source: Option<Box<dyn Iterator<Item = BigUint> + Send>>,
}

/// Materialized view of a [`SequenceSpec`]; values are computed once and
/// cached.
pub struct Sequence {
    spec: SequenceSpec,
    state: Mutex<State>,
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sequence").field("spec", &self.spec).finish()
    }
}

impl Clone for Sequence {
    fn clone(&self) -> Self {
        Sequence::new(self.spec.clone()).expect("spec was validated")
    }
}

impl Sequence {
    pub fn new(spec: SequenceSpec) -> Result<Self> {
        spec.validate()?;
        let source = match &spec.tail {
            TailRule::Synthesized { generator, .. } => Some(generator.start()?),
            _ => None,
        };
        Ok(Sequence {
            spec,
            state: Mutex::new(State {
                values: Vec::new(),
                source,
            }),
        })
    }

    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    /// The term `a(n)`, `n ≥ 1`.
    pub fn get(&self, n: usize) -> Result<BigUint> {
        if n == 0 {
            return Err(Error::Contract("sequences are indexed from 1".into()));
        }
        let mut state = self.state.lock().expect("sequence cache poisoned");
        self.extend(&mut state, n)?;
        Ok(state.values[n - 1].clone())
    }

    /// The first `n` terms.
    pub fn prefix(&self, n: usize) -> Result<Vec<BigUint>> {
        let mut state = self.state.lock().expect("sequence cache poisoned");
        self.extend(&mut state, n)?;
        Ok(state.values[..n].to_vec())
    }

    fn extend(&self, state: &mut State, n: usize) -> Result<()> {
        if let Some(len) = self.spec.defined_len() {
            if n > len {
                return Err(Error::descriptor(format!(
                    "sequence is defined only up to n = {len}, but n = {n} was requested"
                )));
            }
        }
        while state.values.len() < n {
            let i = state.values.len();
            let v = if i < self.spec.prefix.len() {
                BigUint::from(self.spec.prefix[i])
            } else {
                match &self.spec.tail {
                    TailRule::Constant { value } => BigUint::from(*value),
                    TailRule::Table { values } => BigUint::from(values[i - self.spec.prefix.len()]),
                    TailRule::Synthesized { .. } => state
                        .source
                        .as_mut()
                        .and_then(|s| s.next())
                        .expect("generators are infinite"),
                }
            };
            state.values.push(v);
        }
        Ok(())
    }
}

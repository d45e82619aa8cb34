//! Hybrid enumeration: selected indices are bound to named learners
//! ("plantings") so that tests can place a good learner at a small index.
//! Pure mode never consults plantings.

mod learners;

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use learners::{
    builtin, majority_label, ConstantLearner, IntervalErmLearner, MajorityLearner, MemorizerLearner, NativeLearner,
    ThresholdRule, BUILTIN_NAMES,
};

use crate::budget::StepBudget;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::vm::{enumerate_program, Program};

/// A native learner bound to an enumeration index. It charges a declared
/// cost instead of real steps.
#[derive(Clone)]
pub struct PlantedLearner {
    pub name: String,
    pub learner: Arc<dyn NativeLearner>,
    pub cost: StepBudget,
    pub index: u64,
}

impl fmt::Debug for PlantedLearner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantedLearner")
            .field("name", &self.name)
            .field("cost", &self.cost.to_string())
            .field("index", &self.index)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted {
    pub declared_cost: u64,
    pub budget: u64,
}

impl PlantedLearner {
    pub fn new(name: impl Into<String>, learner: Arc<dyn NativeLearner>, cost: StepBudget, index: u64) -> Self {
        PlantedLearner { name: name.into(), learner, cost, index }
    }

    /// Built-in learner by name, or `None` for an unknown name.
    pub fn builtin(name: &str, cost: StepBudget, index: u64) -> Option<Self> {
        builtin(name).map(|learner| PlantedLearner::new(name, learner, cost, index))
    }

    pub fn declared_cost(&self, n: u64) -> u64 {
        self.cost.eval(n)
    }

    /// Trains when the declared cost fits in `budget`, mirroring how a VM
    /// learner either halts within its fuel or does not.
    pub fn run(&self, train: &Dataset, budget: u64) -> std::result::Result<Program, BudgetExhausted> {
        let declared_cost = self.declared_cost(train.len() as u64);
        if declared_cost > budget {
            return Err(BudgetExhausted { declared_cost, budget });
        }
        Ok(self.learner.train(train))
    }
}

pub fn run_planted(
    learner: &PlantedLearner,
    train: &Dataset,
    budget: u64,
) -> std::result::Result<Program, BudgetExhausted> {
    learner.run(train, budget)
}

/// What an enumeration index is bound to in hybrid mode.
#[derive(Debug, Clone)]
pub enum Planting {
    Native(PlantedLearner),
    /// A fixed VM program standing in for the enumerated one.
    Bytecode {
        name: String,
        index: u64,
        program: Program,
    },
}

impl Planting {
    pub fn index(&self) -> u64 {
        match self {
            Planting::Native(p) => p.index,
            Planting::Bytecode { index, .. } => *index,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Planting::Native(p) => &p.name,
            Planting::Bytecode { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnumerationMode {
    PureVm,
    Hybrid,
}

impl EnumerationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EnumerationMode::PureVm => "pure",
            EnumerationMode::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    mode: EnumerationMode,
    plantings: BTreeMap<u64, Planting>,
}

/// A resolved enumeration index.
#[derive(Debug, Clone)]
pub enum Candidate<'a> {
    Vm { program: Cow<'a, Program>, name: Option<&'a str> },
    Planted(&'a PlantedLearner),
}

impl Candidate<'_> {
    pub fn name(&self) -> &str {
        match self {
            Candidate::Vm { name, .. } => name.unwrap_or("vm"),
            Candidate::Planted(p) => &p.name,
        }
    }
}

impl Enumeration {
    pub fn pure() -> Self {
        Enumeration { mode: EnumerationMode::PureVm, plantings: BTreeMap::new() }
    }

    /// Rejects two plantings at the same index.
    pub fn hybrid(plantings: impl IntoIterator<Item = Planting>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for p in plantings {
            let index = p.index();
            if let Some(prev) = map.insert(index, p) {
                return Err(Error::InvalidParameter(format!(
                    "index {index} planted twice (second planting displaces {})",
                    prev.name()
                )));
            }
        }
        Ok(Enumeration { mode: EnumerationMode::Hybrid, plantings: map })
    }

    pub fn mode(&self) -> EnumerationMode {
        self.mode
    }

    pub fn plantings(&self) -> impl Iterator<Item = &Planting> {
        self.plantings.values()
    }

    pub fn planting(&self, index: u64) -> Option<&Planting> {
        match self.mode {
            EnumerationMode::PureVm => None,
            EnumerationMode::Hybrid => self.plantings.get(&index),
        }
    }

    pub fn resolve(&self, index: u64) -> Candidate<'_> {
        match self.planting(index) {
            Some(Planting::Native(p)) => Candidate::Planted(p),
            Some(Planting::Bytecode { name, program, .. }) => {
                Candidate::Vm { program: Cow::Borrowed(program), name: Some(name) }
            }
            None => Candidate::Vm { program: Cow::Owned(enumerate_program(index)), name: None },
        }
    }
}

//! Interruptible universal learner. All `k(n)` candidates advance in
//! lockstep, one step each per round. When a candidate finishes, its
//! predictor is scored on the holdout by runs that are themselves advanced
//! one step per round, so after `r` rounds every holdout run has had exactly
//! `r` steps. The output buffer is overwritten with the current best at the
//! end of every round; halting at total time `T` exposes the buffer as of
//! round `floor(T / k)`.

use std::borrow::Cow;

use super::{label_from, select, split_samples, UniversalConfig};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::registry::{Candidate, PlantedLearner};
use crate::vm::asm::constant_predictor;
use crate::vm::{decode_predictor, serialize_dataset, serialize_point, BitString, Halt, MachineState, Program};
use crate::Rational;

/// A change of the current-best output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryPoint {
    /// Total simulated learner steps, `round * k`.
    pub time: u64,
    pub index: u64,
    pub est_loss: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuousOutcome {
    pub predictor: Program,
    pub selected: Option<u64>,
    pub est_loss: Option<Rational>,
    pub fallback: bool,
    pub machine_count: u64,
    /// Rounds completed, `floor(halt_after / k)`.
    pub rounds: u64,
    pub trajectory: Vec<TrajectoryPoint>,
    /// Interpreter steps spent on holdout scoring.
    pub eval_steps: u64,
}

enum Runner<'a> {
    Vm { program: Cow<'a, Program>, state: MachineState },
    Planted { learner: &'a PlantedLearner, cost: u64 },
}

struct PointRun {
    state: MachineState,
    expected: bool,
}

struct Scoring {
    predictor: Program,
    points: Vec<PointRun>,
    /// Points still budget-exhausted; everything else is final.
    pending: Vec<usize>,
    wrong_final: i128,
}

impl Scoring {
    fn loss(&self, m: i128) -> Rational {
        Rational::new_raw(self.wrong_final + self.pending.len() as i128, m)
    }

    fn settle(&mut self) {
        let points = &self.points;
        let mut newly_wrong = 0;
        self.pending.retain(|&i| {
            let p = &points[i];
            if p.state.halted == Halt::BudgetExhausted {
                return true;
            }
            if label_from(p.state.halted, &p.state.output) != Ok(p.expected) {
                newly_wrong += 1;
            }
            false
        });
        self.wrong_final += newly_wrong;
    }
}

struct Slot<'a> {
    index: u64,
    runner: Option<Runner<'a>>,
    /// `Some` once the candidate finished; inner `None` means no predictor.
    scoring: Option<Option<Scoring>>,
}

/// Runs the dovetailed learner and halts it after `halt_after` total steps.
/// The result equals [`super::universal_learn`] with a per-candidate budget
/// of `floor(halt_after / k(n))`.
pub fn continuous_learn(data: &Dataset, config: &UniversalConfig, halt_after: u64) -> Result<ContinuousOutcome> {
    let split = split_samples(data, config.split_fraction)?;
    let n = data.len() as u64;
    let k = config.machine_count.eval(n);
    let rounds = halt_after / k;
    let train_tape = serialize_dataset(&split.train);
    let holdout: Vec<(BitString, bool)> =
        split.test.iter().map(|s| (serialize_point(s.x, split.test.width()), s.y)).collect();
    let m = holdout.len() as i128;

    let mut slots: Vec<Slot<'_>> = (1..=k)
        .map(|index| {
            let runner = match config.enumeration.resolve(index) {
                Candidate::Vm { program, .. } => Runner::Vm { program, state: MachineState::default() },
                Candidate::Planted(learner) => {
                    Runner::Planted { learner, cost: learner.declared_cost(split.train.len() as u64) }
                }
            };
            Slot { index, runner: Some(runner), scoring: None }
        })
        .collect();

    let mut trajectory: Vec<TrajectoryPoint> = Vec::new();
    let mut eval_steps = 0u64;
    let mut round = 0u64;
    loop {
        // Candidates finishing at exactly `round` steps.
        for slot in slots.iter_mut() {
            let finished = match &slot.runner {
                Some(Runner::Vm { state, .. }) => state.halted.is_final(),
                Some(Runner::Planted { cost, .. }) => *cost <= round,
                None => false,
            };
            if !finished {
                continue;
            }
            let runner = slot.runner.take().expect("checked above");
            let predictor = match runner {
                Runner::Vm { state, .. } if state.halted == Halt::RanToCompletion => {
                    decode_predictor(&state.output).ok()
                }
                Runner::Vm { .. } => None,
                Runner::Planted { learner, .. } => Some(learner.learner.train(&split.train)),
            };
            slot.scoring = Some(predictor.map(|predictor| {
                let points = holdout
                    .iter()
                    .map(|(tape, y)| {
                        let mut state = MachineState::default();
                        state.run(predictor.bits(), tape.as_slice(), round);
                        eval_steps += state.step_count;
                        PointRun { state, expected: *y }
                    })
                    .collect::<Vec<_>>();
                let mut scoring = Scoring { predictor, pending: (0..points.len()).collect(), points, wrong_final: 0 };
                scoring.settle();
                scoring
            }));
        }

        let best = select(slots.iter().filter_map(|s| match &s.scoring {
            Some(Some(sc)) => Some((s.index, true, sc.loss(m))),
            _ => None,
        }));
        if let Some((index, loss)) = best {
            let changed = trajectory.last().is_none_or(|t| t.index != index || t.est_loss != loss);
            if changed {
                trajectory.push(TrajectoryPoint { time: round * k, index, est_loss: loss });
            }
        }

        if round == rounds {
            let (predictor, selected, est_loss) = match best {
                Some((index, loss)) => {
                    let slot = &slots[(index - 1) as usize];
                    let Some(Some(sc)) = &slot.scoring else { unreachable!("selected slot is scored") };
                    (sc.predictor.clone(), Some(index), Some(loss))
                }
                None => (constant_predictor(false), None, None),
            };
            return Ok(ContinuousOutcome {
                predictor,
                selected,
                est_loss,
                fallback: selected.is_none(),
                machine_count: k,
                rounds,
                trajectory,
                eval_steps,
            });
        }

        // Nothing but planted countdowns left: skip to the next completion.
        let vm_active = slots.iter().any(|s| matches!(s.runner, Some(Runner::Vm { .. })));
        let scoring_active = slots.iter().any(|s| matches!(&s.scoring, Some(Some(sc)) if !sc.pending.is_empty()));
        let step_to = if vm_active || scoring_active {
            round + 1
        } else {
            let next_planted = slots
                .iter()
                .filter_map(|s| match s.runner {
                    Some(Runner::Planted { cost, .. }) => Some(cost),
                    _ => None,
                })
                .min();
            next_planted.unwrap_or(rounds).clamp(round + 1, rounds)
        };
        let advance = step_to - round;

        for slot in slots.iter_mut() {
            if let Some(Runner::Vm { program, state }) = &mut slot.runner {
                state.run(program.bits(), train_tape.as_slice(), advance);
            }
            if let Some(Some(sc)) = &mut slot.scoring {
                for &i in &sc.pending {
                    let (tape, _) = &holdout[i];
                    let p = &mut sc.points[i];
                    let before = p.state.step_count;
                    p.state.run(sc.predictor.bits(), tape.as_slice(), advance);
                    eval_steps += p.state.step_count - before;
                }
                sc.settle();
            }
        }
        round = step_to;
    }
}

//! Clocked supervisory control loop and attack sampling.
//!
//! One tick: the supervisor commits to an output `α`, the actuator attacker
//! turns it into `α_c`, the plant answers `σ`, the sensor attacker delivers
//! `σ_c`, and the supervisor must then own a `(σ_c, α)` transition from the
//! state it committed in, or the loop stops with an alarm. Every choice is
//! uniform over sorted candidates drawn from a seeded ChaCha generator, so a
//! configuration always replays to the same trace.

use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exec::Exec;
use crate::fst::{language_upto, Fst, Limits, StateId, Transition};
use crate::symbol::{Letter, Symbol};
use crate::word::{SampleSet, Word};

#[derive(Clone, Debug)]
pub struct LoopConfig {
    pub plant: Fst,
    pub supervisor: Fst,
    pub sensor_attacker: Fst,
    pub actuator_attacker: Fst,
    pub max_steps: usize,
    pub seed: u64,
}

impl LoopConfig {
    pub fn with_seed(&self, seed: u64) -> LoopConfig {
        LoopConfig {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Machine {
    Supervisor,
    ActuatorAttacker,
    Plant,
    SensorAttacker,
}

impl fmt::Display for Machine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Machine::Supervisor => "supervisor",
            Machine::ActuatorAttacker => "actuator-attacker",
            Machine::Plant => "plant",
            Machine::SensorAttacker => "sensor-attacker",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MaxSteps,
    Alarm,
    Deadlock,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::MaxSteps => "max_steps",
            Termination::Alarm => "alarm",
            Termination::Deadlock => "deadlock",
        })
    }
}

/// Machine states, in loop order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LoopState {
    pub supervisor: StateId,
    pub actuator: StateId,
    pub plant: StateId,
    pub sensor: StateId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub alpha: Symbol,
    pub alpha_c: Symbol,
    pub sigma: Symbol,
    pub sigma_c: Symbol,
    /// States after the tick. On an alarm the supervisor stays put.
    pub after: LoopState,
}

/// Symbols produced before a deadlock stopped the tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stuck {
    pub machine: Machine,
    pub alpha: Option<Symbol>,
    pub alpha_c: Option<Symbol>,
    pub sigma: Option<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Done(StepRecord),
    Alarm(StepRecord),
    Deadlock(Stuck),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopTrace {
    pub steps: Vec<StepRecord>,
    pub terminated_by: Termination,
    pub stuck: Option<Stuck>,
}

impl LoopTrace {
    /// The plant's word `(α_c, σ)…`, including an alarmed final tick.
    pub fn plant_word(&self) -> Word {
        Word::new(
            self.steps
                .iter()
                .map(|r| Letter::new(r.alpha_c, r.sigma))
                .collect(),
        )
    }

    /// What the supervisor saw and sent, `(σ_c, α)…`.
    pub fn supervisor_word(&self) -> Word {
        Word::new(
            self.steps
                .iter()
                .map(|r| Letter::new(r.sigma_c, r.alpha))
                .collect(),
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, r) in self.steps.iter().enumerate() {
            writeln!(
                out,
                "step {}: alpha={} alpha_c={} sigma={} sigma_c={}",
                k + 1,
                r.alpha,
                r.alpha_c,
                r.sigma,
                r.sigma_c
            )
            .unwrap();
        }
        writeln!(out, "END {}", self.terminated_by).unwrap();
        out
    }

    /// True when the plant has left `K`: its word is not in `K`, or it was
    /// handed an `α_c` it cannot answer and no answer would stay in `K`.
    pub fn violates(&self, k: &Fst) -> bool {
        let word = self.plant_word();
        if !k.accepts_word(&word) {
            return true;
        }
        match self.stuck {
            Some(Stuck {
                machine: Machine::Plant,
                alpha_c: Some(alpha_c),
                ..
            }) => !k.outputs().into_iter().any(|sigma| {
                let mut next = word.clone();
                next.push(Letter::new(alpha_c, sigma));
                k.accepts_word(&next)
            }),
            _ => false,
        }
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> Option<T> {
    match items.len() {
        0 => None,
        n => Some(items[rng.gen_range(0..n)]),
    }
}

/// Candidate moves in name order, so the draw does not depend on how
/// symbols happened to be interned.
fn sorted(mut moves: Vec<Transition>) -> Vec<Transition> {
    moves.sort_by(|a, b| (a.letter.name_key(), a.dst).cmp(&(b.letter.name_key(), b.dst)));
    moves
}

pub fn initial_state(cfg: &LoopConfig) -> LoopState {
    LoopState {
        supervisor: cfg.supervisor.initial(),
        actuator: cfg.actuator_attacker.initial(),
        plant: cfg.plant.initial(),
        sensor: cfg.sensor_attacker.initial(),
    }
}

/// Executes one clock tick from `state`.
pub fn step(cfg: &LoopConfig, state: LoopState, rng: &mut ChaCha8Rng) -> StepOutcome {
    let mut stuck = Stuck {
        machine: Machine::Supervisor,
        alpha: None,
        alpha_c: None,
        sigma: None,
    };

    let mut alphas: Vec<Symbol> = cfg
        .supervisor
        .moves_from(state.supervisor)
        .iter()
        .map(|t| t.letter.output)
        .collect();
    alphas.sort_by_key(|s| s.name());
    alphas.dedup();
    let Some(alpha) = pick(rng, &alphas) else {
        return StepOutcome::Deadlock(stuck);
    };
    stuck.alpha = Some(alpha);

    stuck.machine = Machine::ActuatorAttacker;
    let Some(act) = pick(
        rng,
        &sorted(cfg.actuator_attacker.moves_on_input(state.actuator, alpha)),
    ) else {
        return StepOutcome::Deadlock(stuck);
    };
    let alpha_c = act.letter.output;
    stuck.alpha_c = Some(alpha_c);

    stuck.machine = Machine::Plant;
    let Some(pl) = pick(rng, &sorted(cfg.plant.moves_on_input(state.plant, alpha_c))) else {
        return StepOutcome::Deadlock(stuck);
    };
    let sigma = pl.letter.output;
    stuck.sigma = Some(sigma);

    stuck.machine = Machine::SensorAttacker;
    let Some(sen) = pick(
        rng,
        &sorted(cfg.sensor_attacker.moves_on_input(state.sensor, sigma)),
    ) else {
        return StepOutcome::Deadlock(stuck);
    };
    let sigma_c = sen.letter.output;

    let answer = Letter::new(sigma_c, alpha);
    let replies: Vec<Transition> = sorted(cfg.supervisor.moves_on_input(state.supervisor, sigma_c))
        .into_iter()
        .filter(|t| t.letter == answer)
        .collect();
    let mut after = LoopState {
        supervisor: state.supervisor,
        actuator: act.dst,
        plant: pl.dst,
        sensor: sen.dst,
    };
    let record = |after| StepRecord {
        alpha,
        alpha_c,
        sigma,
        sigma_c,
        after,
    };
    match pick(rng, &replies) {
        Some(t) => {
            after.supervisor = t.dst;
            StepOutcome::Done(record(after))
        }
        None => StepOutcome::Alarm(record(after)),
    }
}

/// Runs the loop until `max_steps`, an alarm or a deadlock.
pub fn run(cfg: &LoopConfig) -> LoopTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = initial_state(cfg);
    let mut steps = Vec::new();
    while steps.len() < cfg.max_steps {
        match step(cfg, state, &mut rng) {
            StepOutcome::Done(r) => {
                state = r.after;
                steps.push(r);
            }
            StepOutcome::Alarm(r) => {
                steps.push(r);
                return LoopTrace {
                    steps,
                    terminated_by: Termination::Alarm,
                    stuck: None,
                };
            }
            StepOutcome::Deadlock(s) => {
                return LoopTrace {
                    steps,
                    terminated_by: Termination::Deadlock,
                    stuck: Some(s),
                };
            }
        }
    }
    LoopTrace {
        steps,
        terminated_by: Termination::MaxSteps,
        stuck: None,
    }
}

/// One run per seed, results in seed order.
pub fn run_many(cfg: &LoopConfig, seeds: &[u64], exec: Exec) -> Vec<LoopTrace> {
    exec.map(seeds, |&seed| run(&cfg.with_seed(seed)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// `n_words` seeded random walks.
    Random { n_words: usize, seed: u64 },
    /// Every accepted word up to the length bound.
    Exhaustive,
}

/// Probability of stopping at a final state before each step of a walk.
pub const STOP_PROBABILITY: f64 = 0.25;

/// Records attacks: accepted words of length at most `max_len`, together
/// with their accepted prefixes.
pub fn sample_attacker(attacker: &Fst, mode: SampleMode, max_len: usize) -> Result<SampleSet> {
    let (n_words, seed) = match mode {
        SampleMode::Exhaustive => {
            return Ok(language_upto(attacker, max_len, &Limits::default())?
                .into_iter()
                .collect());
        }
        SampleMode::Random { n_words, seed } => (n_words, seed),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SampleSet::new();
    if n_words == 0 {
        if attacker.is_final(attacker.initial()) {
            out.insert(Word::empty())?;
        }
        return Ok(out);
    }
    let moves: Vec<Vec<Transition>> = (0..attacker.num_states())
        .map(|s| sorted(attacker.moves_from(s)))
        .collect();
    for _ in 0..n_words {
        let mut s = attacker.initial();
        let mut word = Word::empty();
        let mut hops = 0;
        loop {
            if attacker.is_final(s) && rng.gen_bool(STOP_PROBABILITY) {
                break;
            }
            // silent moves cost no letter, so bound them separately
            if word.len() == max_len || hops > 4 * (max_len + 1) * attacker.num_states() {
                break;
            }
            let Some(t) = pick(&mut rng, &moves[s]) else {
                break;
            };
            if !t.letter.is_stay() {
                word.push(t.letter);
            }
            s = t.dst;
            hops += 1;
        }
        if !attacker.accepts_word(&word) {
            continue;
        }
        for cut in 0..=word.len() {
            let p = word.prefix(cut);
            if attacker.accepts_word(&p) {
                out.insert(p)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::examples;
    use crate::supervisor::synthesize;

    fn resilient_cfg() -> LoopConfig {
        let a_a = examples::actuator_attacker();
        let a_s = examples::sensor_identity();
        LoopConfig {
            supervisor: synthesize(&examples::desired(), &a_s, &a_a),
            plant: examples::plant(),
            sensor_attacker: a_s,
            actuator_attacker: a_a,
            max_steps: 4,
            seed: 0,
        }
    }

    #[test]
    fn resilient_run_stays_in_k() {
        let cfg = resilient_cfg();
        let t = run(&cfg);
        assert_eq!(t.terminated_by, Termination::MaxSteps);
        assert_eq!(t.steps.len(), 4);
        assert_eq!(t.plant_word().to_string(), "a1:s2 a2:s2 a1:s2 a2:s2");
        assert!(!t.violates(&examples::desired()));
    }

    #[test]
    fn zero_steps() {
        let cfg = LoopConfig {
            max_steps: 0,
            ..resilient_cfg()
        };
        let t = run(&cfg);
        assert!(t.steps.is_empty());
        assert_eq!(t.terminated_by, Termination::MaxSteps);
        assert_eq!(t.to_text(), "END max_steps\n");
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = LoopConfig {
            max_steps: 20,
            seed: 42,
            ..resilient_cfg()
        };
        assert_eq!(run(&cfg), run(&cfg));
        let many = run_many(&cfg, &[1, 2, 3], Exec::Parallel);
        assert_eq!(many, run_many(&cfg, &[1, 2, 3], Exec::Sequential));
    }

    #[test]
    fn identity_loop_echoes_supervisor() {
        let syms = ["x", "y"].map(Symbol::new);
        let id = Fst::identity(syms);
        let cfg = LoopConfig {
            plant: id.clone(),
            supervisor: id.clone(),
            sensor_attacker: id.clone(),
            actuator_attacker: id,
            max_steps: 10,
            seed: 7,
        };
        let t = run(&cfg);
        assert_eq!(t.steps.len(), 10);
        for r in &t.steps {
            assert_eq!(r.alpha, r.alpha_c);
            assert_eq!(r.alpha, r.sigma);
            assert_eq!(r.sigma, r.sigma_c);
        }
    }

    #[test]
    fn naive_supervisor_leaves_k() {
        let cfg = LoopConfig {
            supervisor: examples::desired().invert(),
            max_steps: 20,
            ..resilient_cfg()
        };
        let k = examples::desired();
        let bad = (0..50).any(|seed| {
            let t = run(&cfg.with_seed(seed));
            t.terminated_by == Termination::Alarm || t.violates(&k)
        });
        assert!(bad);
    }

    #[test]
    fn alarm_when_sensor_lies() {
        let mut sup = Fst::new(1, 0);
        sup.add_named(0, "y", "x", 0);
        sup.set_final(0);
        let mut liar = Fst::new(1, 0);
        liar.add_named(0, "y", "z", 0);
        liar.set_final(0);
        let cfg = LoopConfig {
            plant: Fst::identity([Symbol::new("x")]).invert().clone(),
            supervisor: sup,
            sensor_attacker: liar,
            actuator_attacker: Fst::identity([Symbol::new("x")]),
            max_steps: 5,
            seed: 0,
        };
        // plant echoes x, so the supervisor hears nothing it expects
        let t = run(&cfg);
        assert_eq!(t.terminated_by, Termination::Deadlock);
        assert_eq!(t.stuck.unwrap().machine, Machine::SensorAttacker);

        let mut plant = Fst::new(1, 0);
        plant.add_named(0, "x", "y", 0);
        plant.set_final(0);
        let t = run(&LoopConfig { plant, ..cfg });
        assert_eq!(t.terminated_by, Termination::Alarm);
        assert_eq!(t.steps.len(), 1);
        assert!(t
            .to_text()
            .ends_with("step 1: alpha=x alpha_c=x sigma=y sigma_c=z\nEND alarm\n"));
    }

    #[test]
    fn exhaustive_sampling_matches_enumeration() {
        let a = examples::actuator_attacker();
        let d = sample_attacker(&a, SampleMode::Exhaustive, 3).unwrap();
        assert_eq!(d.len(), 9);
        for text in ["", "a3:a1", "a1:a3", "a3:a1 a1:a2", "a1:a3 a1:a2 a3:a1"] {
            assert!(d.contains(&Word::parse(text).unwrap()), "{text}");
        }
    }

    #[test]
    fn random_sampling_is_accepted_and_prefix_closed() {
        let a = examples::actuator_attacker();
        let d = sample_attacker(
            &a,
            SampleMode::Random {
                n_words: 40,
                seed: 3,
            },
            6,
        )
        .unwrap();
        assert!(d.len() > 3);
        for w in d.iter() {
            assert!(a.accepts_word(w));
            assert!(w.len() <= 6);
            for cut in 0..w.len() {
                assert!(d.contains(&w.prefix(cut)));
            }
        }
        let again = sample_attacker(
            &a,
            SampleMode::Random {
                n_words: 40,
                seed: 3,
            },
            6,
        )
        .unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn zero_walks() {
        let a = examples::actuator_attacker();
        let d = sample_attacker(
            &a,
            SampleMode::Random {
                n_words: 0,
                seed: 0,
            },
            4,
        )
        .unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.contains(&Word::empty()));
        let mut g = Fst::new(2, 0);
        g.add_named(0, "x", "y", 1);
        g.set_final(1);
        assert!(sample_attacker(
            &g,
            SampleMode::Random {
                n_words: 0,
                seed: 0
            },
            4
        )
        .unwrap()
        .is_empty());
    }
}

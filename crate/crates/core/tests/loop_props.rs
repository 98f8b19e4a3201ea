//! Control-loop semantics against the symbolic supervised language.

use std::collections::BTreeSet;

use fst_resilience::fst::{examples, language_upto, Limits};
use fst_resilience::gen::{random_channel, random_over};
use fst_resilience::sim::{run, run_many, sample_attacker, LoopConfig, SampleMode, Termination};
use fst_resilience::spectral::{learn_fst, LearnOptions};
use fst_resilience::supervisor::{prefix_closure, supervised_language, synthesize};
use fst_resilience::{Exec, Fst, Letter, Symbol, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn syms(names: &[&str]) -> Vec<Symbol> {
    names.iter().map(|n| Symbol::new(n)).collect()
}

fn running_example(supervisor: Fst) -> LoopConfig {
    LoopConfig {
        plant: examples::plant(),
        supervisor,
        sensor_attacker: examples::sensor_identity(),
        actuator_attacker: examples::actuator_attacker(),
        max_steps: 12,
        seed: 0,
    }
}

fn random_config(rng: &mut ChaCha8Rng) -> LoopConfig {
    let act = syms(&["a0", "a1"]);
    let sen = syms(&["s0", "s1"]);
    let plant = random_over(rng, 3, &act, &sen, 0.5);
    let k = prefix_closure(&random_over(rng, 3, &act, &sen, 0.5));
    let bijective = rng.gen_bool(0.5);
    let a_s = random_channel(rng, 2, &sen, bijective);
    let a_a = random_channel(rng, 2, &act, bijective);
    LoopConfig {
        supervisor: synthesize(&k, &a_s, &a_a),
        plant,
        sensor_attacker: a_s,
        actuator_attacker: a_a,
        max_steps: 8,
        seed: 0,
    }
}

/// Completed ticks are words of the supervised language; an alarmed tick is
/// exactly a missing `(σ_c, α)` transition.
fn check_agreement(cfg: &LoopConfig, seeds: &[u64]) {
    let lang = supervised_language(
        &cfg.plant,
        &cfg.supervisor,
        &cfg.sensor_attacker,
        &cfg.actuator_attacker,
    );
    for t in run_many(cfg, seeds, Exec::Parallel) {
        let mut word = t.plant_word();
        if t.terminated_by == Termination::Alarm {
            let last = *t.steps.last().unwrap();
            let committed = if t.steps.len() > 1 {
                t.steps[t.steps.len() - 2].after.supervisor
            } else {
                cfg.supervisor.initial()
            };
            assert_eq!(last.after.supervisor, committed);
            let answer = Letter::new(last.sigma_c, last.alpha);
            let has = cfg
                .supervisor
                .moves_from(committed)
                .iter()
                .any(|m| m.letter == answer)
                || answer.is_stay();
            assert!(!has, "alarm although the supervisor owns {answer}");
            word = word.prefix(word.len() - 1);
        }
        assert!(
            lang.accepts_word(&word),
            "{word} not in the supervised language"
        );
    }
}

#[test]
fn loop_agrees_with_supervised_language() {
    let seeds: Vec<u64> = (0..1000).collect();
    let k = examples::desired();
    let learned = learn_fst(
        &sample_attacker(&examples::actuator_attacker(), SampleMode::Exhaustive, 3).unwrap(),
        &LearnOptions::default(),
    )
    .unwrap();
    check_agreement(
        &running_example(synthesize(&k, &examples::sensor_identity(), &learned)),
        &seeds,
    );
    check_agreement(&running_example(k.invert()), &seeds);

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..30 {
        check_agreement(&random_config(&mut rng), &seeds[..100]);
    }
}

#[test]
fn seeded_runs_replay_byte_for_byte() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let cfg = random_config(&mut rng);
        for seed in 0..10 {
            let c = cfg.with_seed(seed);
            assert_eq!(run(&c).to_text(), run(&c).to_text());
        }
    }
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let cfg = running_example(examples::desired().invert());
    let seeds: Vec<u64> = (0..200).collect();
    assert_eq!(
        run_many(&cfg, &seeds, Exec::Sequential),
        run_many(&cfg, &seeds, Exec::Parallel)
    );
}

#[test]
fn exhaustive_sampling_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = syms(&["a0", "a1"]);
    for _ in 0..30 {
        let bijective = rng.gen_bool(0.5);
        let a = random_channel(&mut rng, 3, &s, bijective);
        let d = sample_attacker(&a, SampleMode::Exhaustive, 4).unwrap();
        let want = language_upto(&a, 4, &Limits::default()).unwrap();
        let got: BTreeSet<Word> = d.iter().cloned().collect();
        assert_eq!(got, want);
    }
}

#[test]
fn random_samples_are_accepted() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s = syms(&["a0", "a1"]);
    for seed in 0..30 {
        let a = random_over(&mut rng, 3, &s, &s, 0.4);
        let d = sample_attacker(&a, SampleMode::Random { n_words: 25, seed }, 5).unwrap();
        for w in d.iter() {
            assert!(a.accepts_word(w), "{w}");
            assert!(w.len() <= 5);
        }
    }
}

/// Reports how much of the bounded supervised language the seeded runs
/// reach. Informational only.
#[test]
fn coverage_report() {
    let k = examples::desired();
    let cfg = LoopConfig {
        max_steps: 5,
        ..running_example(synthesize(
            &k,
            &examples::sensor_identity(),
            &examples::actuator_attacker(),
        ))
    };
    let lang = supervised_language(
        &cfg.plant,
        &cfg.supervisor,
        &cfg.sensor_attacker,
        &cfg.actuator_attacker,
    );
    let target = language_upto(&lang, 5, &Limits::default()).unwrap();
    let seeds: Vec<u64> = (0..200).collect();
    let mut seen = BTreeSet::new();
    for t in run_many(&cfg, &seeds, Exec::Parallel) {
        let w = t.plant_word();
        for cut in 0..=w.len() {
            seen.insert(w.prefix(cut));
        }
    }
    let hit = target.iter().filter(|w| seen.contains(*w)).count();
    println!(
        "coverage: {hit}/{} supervised words up to length 5 reached",
        target.len()
    );
}

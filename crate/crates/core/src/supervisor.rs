//! Supervisor synthesis against modelled attackers and the resilience check.
//!
//! Machine conventions: the plant reads actuator symbols and writes sensor
//! symbols, the supervisor reads (possibly corrupted) sensor symbols and
//! writes actuator symbols, the actuator attacker maps `α` to `α_c` and the
//! sensor attacker maps `σ` to `σ_c`.

use crate::error::Result;
use crate::fst::{
    compose, intersect, is_prefix_closed, parse_pattern, shortest_difference, trim, Fst,
};
use crate::word::Word;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisResult {
    pub supervisor: Fst,
    pub resilient: bool,
    /// Shortest word on which the supervised plant and `K` disagree.
    pub witness: Option<Word>,
}

impl SynthesisResult {
    /// `RESILIENT` or `NOT_RESILIENT witness=<word>`.
    pub fn verdict_line(&self) -> String {
        match &self.witness {
            None => "RESILIENT".to_string(),
            Some(w) => format!("NOT_RESILIENT witness={w}"),
        }
    }
}

/// `S = A_s⁻¹ ∘ M_K⁻¹ ∘ A_a⁻¹`, trimmed.
///
/// Reading left to right: a corrupted sensor symbol is mapped back to what
/// the plant emitted, `K` picks the actuator symbol the plant must receive,
/// and the inverse actuator attacker picks what to send so that the attacker
/// delivers it.
pub fn synthesize(m_k: &Fst, a_s: &Fst, a_a: &Fst) -> Fst {
    match is_prefix_closed(m_k) {
        Ok(true) => {}
        Ok(false) => log::warn!("the desired language is not prefix-closed"),
        Err(e) => log::warn!("could not check prefix-closedness of the desired language: {e}"),
    }
    let s = compose(&compose(&a_s.invert(), &m_k.invert()), &a_a.invert());
    trim(&s)
}

/// Plant words reachable in the closed loop:
/// `L((A_s ∘ S ∘ A_a)⁻¹) ∩ L(P)`, trimmed.
pub fn supervised_language(p: &Fst, s: &Fst, a_s: &Fst, a_a: &Fst) -> Fst {
    let channel = compose(&compose(a_s, s), a_a).invert();
    trim(&intersect(&channel, p))
}

/// Checks that the supervised plant language equals `L(m_k)`.
pub fn verify_resilient(
    p: &Fst,
    s: &Fst,
    a_s: &Fst,
    a_a: &Fst,
    m_k: &Fst,
) -> Result<SynthesisResult> {
    let lang = supervised_language(p, s, a_s, a_a);
    let witness = shortest_difference(&lang, m_k)?;
    Ok(SynthesisResult {
        supervisor: s.clone(),
        resilient: witness.is_none(),
        witness,
    })
}

/// Synthesizes and verifies in one go.
pub fn synthesize_and_verify(p: &Fst, m_k: &Fst, a_s: &Fst, a_a: &Fst) -> Result<SynthesisResult> {
    let s = synthesize(m_k, a_s, a_a);
    verify_resilient(p, &s, a_s, a_a, m_k)
}

/// `M_K` for a letter pattern such as `((a1:s2)(a2:s2))*`, closed under
/// prefixes since loop languages always are.
pub fn desired_from_pattern(pattern: &str) -> Result<Fst> {
    Ok(prefix_closure(&parse_pattern(pattern)?))
}

/// Trims and makes every state final. On a trim machine every state lies on
/// an accepting path, so this accepts exactly the prefixes of `L(fst)`.
pub fn prefix_closure(fst: &Fst) -> Fst {
    let mut t = trim(fst);
    if t.finals().is_empty() {
        return t;
    }
    t.set_all_final();
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{equivalent, examples, language_upto, Limits};
    use crate::symbol::Symbol;

    fn w(text: &str) -> Word {
        Word::parse(text).unwrap()
    }

    fn identity_actuator() -> Fst {
        Fst::identity(["a1", "a2", "a3"].map(Symbol::new))
    }

    #[test]
    fn running_example_is_resilient() {
        let k = examples::desired();
        let a_s = examples::sensor_identity();
        let a_a = examples::actuator_attacker();
        let r = synthesize_and_verify(&examples::plant(), &k, &a_s, &a_a).unwrap();
        assert!(r.resilient, "{}", r.verdict_line());
        assert_eq!(r.verdict_line(), "RESILIENT");
    }

    #[test]
    fn supervisor_sends_a3_a1() {
        let s = synthesize(
            &examples::desired(),
            &examples::sensor_identity(),
            &examples::actuator_attacker(),
        );
        for word in language_upto(&s, 6, &Limits::default()).unwrap() {
            for (i, l) in word.iter().enumerate() {
                let want = if i % 2 == 0 { "a3" } else { "a1" };
                assert_eq!(l.output.name(), want, "{word}");
                assert_eq!(l.input.name(), "s2");
            }
        }
        assert!(s.accepts_word(&w("s2:a3 s2:a1 s2:a3")));
    }

    #[test]
    fn identity_attackers_give_inverse_of_k() {
        let k = examples::desired();
        let s = synthesize(&k, &examples::sensor_identity(), &identity_actuator());
        assert!(equivalent(&s, &k.invert()).unwrap());
    }

    #[test]
    fn ignoring_the_attacker_is_not_resilient() {
        let k = examples::desired();
        let a_s = examples::sensor_identity();
        let naive = k.invert();
        let r = verify_resilient(
            &examples::plant(),
            &naive,
            &a_s,
            &examples::actuator_attacker(),
            &k,
        )
        .unwrap();
        assert!(!r.resilient);
        let wit = r.witness.unwrap();
        let lang = supervised_language(
            &examples::plant(),
            &naive,
            &a_s,
            &examples::actuator_attacker(),
        );
        assert_ne!(lang.accepts_word(&wit), k.accepts_word(&wit));
    }

    #[test]
    fn empty_k_with_nonempty_plant() {
        let id_s = examples::sensor_identity();
        let id_a = identity_actuator();
        let s = Fst::identity(["a1", "a2"].map(Symbol::new));
        let plant_id = {
            let mut p = Fst::new(1, 0);
            p.add_named(0, "a1", "s2", 0);
            p.set_final(0);
            p
        };
        let r = verify_resilient(&plant_id, &s, &id_s, &id_a, &Fst::empty_language()).unwrap();
        assert!(!r.resilient);
        assert_eq!(r.witness, Some(Word::empty()));
    }

    #[test]
    fn empty_supervisor_gives_empty_language() {
        let lang = supervised_language(
            &examples::plant(),
            &Fst::empty_language(),
            &examples::sensor_identity(),
            &identity_actuator(),
        );
        assert!(lang.finals().is_empty());
    }

    #[test]
    fn prefix_closure_of_pattern() {
        let k = desired_from_pattern("((a1:s2)(a2:s2))*").unwrap();
        assert!(equivalent(&k, &examples::desired()).unwrap());
        let none = desired_from_pattern("a1:s2").unwrap();
        assert!(none.accepts(&[]));
    }
}

//! Graph-form finite-state transducers over a pair alphabet.
//!
//! A transducer is stored as a nondeterministic acceptor whose tokens are
//! [`Letter`]s. The stay transition `(s, ε, ε, s)` is a member of every
//! machine but is never stored; a stored `(ε, ε)` transition between two
//! different states is a silent move.

mod dfa;
mod pattern;
mod product;
mod text;

use std::collections::BTreeSet;

pub use dfa::{
    determinize, equivalent, is_prefix_closed, language_upto, minimize, minimize_with,
    shortest_difference, Dfa, Limits,
};
pub use pattern::parse_pattern;
pub use product::{compose, intersect, trim};

use crate::symbol::{Letter, Symbol};
use crate::word::Word;

pub type StateId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub src: StateId,
    pub letter: Letter,
    pub dst: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fst {
    num_states: usize,
    initial: StateId,
    finals: BTreeSet<StateId>,
    transitions: BTreeSet<Transition>,
}

impl Fst {
    /// A machine with states `0..num_states`, no transitions and no finals.
    pub fn new(num_states: usize, initial: StateId) -> Fst {
        assert!(initial < num_states, "initial state out of range");
        Fst {
            num_states,
            initial,
            finals: BTreeSet::new(),
            transitions: BTreeSet::new(),
        }
    }

    /// The canonical machine for the empty language.
    pub fn empty_language() -> Fst {
        Fst::new(1, 0)
    }

    /// One final state with a loop `(x, x)` for every symbol.
    pub fn identity<I: IntoIterator<Item = Symbol>>(symbols: I) -> Fst {
        let mut fst = Fst::new(1, 0);
        fst.set_final(0);
        for s in symbols {
            if !s.is_eps() {
                fst.add(0, Letter::new(s, s), 0);
            }
        }
        fst
    }

    /// Accepts every word over `letters`.
    pub fn universal<I: IntoIterator<Item = Letter>>(letters: I) -> Fst {
        let mut fst = Fst::new(1, 0);
        fst.set_final(0);
        for l in letters {
            fst.add(0, l, 0);
        }
        fst
    }

    pub fn add_state(&mut self) -> StateId {
        self.num_states += 1;
        self.num_states - 1
    }

    /// Adds a transition. Stay loops are implicit and ignored.
    pub fn add(&mut self, src: StateId, letter: Letter, dst: StateId) {
        assert!(
            src < self.num_states && dst < self.num_states,
            "transition endpoint out of range"
        );
        if letter.is_stay() && src == dst {
            return;
        }
        self.transitions.insert(Transition { src, letter, dst });
    }

    pub fn add_named(&mut self, src: StateId, input: &str, output: &str, dst: StateId) {
        self.add(src, Letter::from_names(input, output), dst);
    }

    pub fn set_final(&mut self, s: StateId) {
        assert!(s < self.num_states, "final state out of range");
        self.finals.insert(s);
    }

    pub fn set_all_final(&mut self) {
        self.finals = (0..self.num_states).collect();
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn is_final(&self, s: StateId) -> bool {
        self.finals.contains(&s)
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> + '_ {
        self.transitions.iter()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn remove_transition(&mut self, t: &Transition) -> bool {
        self.transitions.remove(t)
    }

    /// Non-stay letters used by some transition.
    pub fn letters(&self) -> BTreeSet<Letter> {
        self.transitions
            .iter()
            .map(|t| t.letter)
            .filter(|l| !l.is_stay())
            .collect()
    }

    /// Input symbols, always including ε.
    pub fn inputs(&self) -> BTreeSet<Symbol> {
        let mut s: BTreeSet<Symbol> = self.transitions.iter().map(|t| t.letter.input).collect();
        s.insert(Symbol::EPS);
        s
    }

    /// Output symbols, always including ε.
    pub fn outputs(&self) -> BTreeSet<Symbol> {
        let mut s: BTreeSet<Symbol> = self.transitions.iter().map(|t| t.letter.output).collect();
        s.insert(Symbol::EPS);
        s
    }

    /// Outgoing transitions per state, stay loops excluded.
    pub fn adjacency(&self) -> Vec<Vec<(Letter, StateId)>> {
        let mut adj = vec![Vec::new(); self.num_states];
        for t in &self.transitions {
            adj[t.src].push((t.letter, t.dst));
        }
        adj
    }

    /// Transitions leaving `s` whose input is `input`. Includes the stay
    /// loop when `input` is ε.
    pub fn moves_on_input(&self, s: StateId, input: Symbol) -> Vec<Transition> {
        let mut v: Vec<Transition> = self
            .transitions
            .range(range_from(s))
            .take_while(|t| t.src == s)
            .filter(|t| t.letter.input == input)
            .copied()
            .collect();
        if input.is_eps() {
            v.push(Transition {
                src: s,
                letter: Letter::STAY,
                dst: s,
            });
        }
        v
    }

    /// Transitions leaving `s`, stay loop excluded.
    pub fn moves_from(&self, s: StateId) -> Vec<Transition> {
        self.transitions
            .range(range_from(s))
            .take_while(|t| t.src == s)
            .copied()
            .collect()
    }

    /// Closure of `states` under silent `(ε, ε)` moves.
    pub(crate) fn eps_closure(
        &self,
        adj: &[Vec<(Letter, StateId)>],
        states: &mut BTreeSet<StateId>,
    ) {
        let mut stack: Vec<StateId> = states.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &(l, d) in &adj[s] {
                if l.is_stay() && states.insert(d) {
                    stack.push(d);
                }
            }
        }
    }

    pub fn has_silent_moves(&self) -> bool {
        self.transitions.iter().any(|t| t.letter.is_stay())
    }

    /// True iff some path labelled by `word` leads from the initial state to
    /// a final state. Stay letters in `word` leave the state set unchanged.
    pub fn accepts(&self, word: &[Letter]) -> bool {
        let adj = self.adjacency();
        let mut current = BTreeSet::from([self.initial]);
        self.eps_closure(&adj, &mut current);
        for &letter in word {
            if letter.is_stay() {
                continue;
            }
            let mut next = BTreeSet::new();
            for &s in &current {
                for &(l, d) in &adj[s] {
                    if l == letter {
                        next.insert(d);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            self.eps_closure(&adj, &mut next);
            current = next;
        }
        current.iter().any(|s| self.finals.contains(s))
    }

    pub fn accepts_word(&self, word: &Word) -> bool {
        self.accepts(word.letters())
    }

    /// Swaps input and output on every transition.
    pub fn invert(&self) -> Fst {
        Fst {
            num_states: self.num_states,
            initial: self.initial,
            finals: self.finals.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition {
                    src: t.src,
                    letter: t.letter.inverted(),
                    dst: t.dst,
                })
                .collect(),
        }
    }

    /// A copy whose every state is final.
    pub fn with_all_final(&self) -> Fst {
        let mut f = self.clone();
        f.set_all_final();
        f
    }

    /// Structural check: every referenced state exists.
    pub fn is_well_formed(&self) -> bool {
        self.initial < self.num_states
            && self.finals.iter().all(|&s| s < self.num_states)
            && self
                .transitions
                .iter()
                .all(|t| t.src < self.num_states && t.dst < self.num_states)
            && !self
                .transitions
                .iter()
                .any(|t| t.letter.is_stay() && t.src == t.dst)
    }

    /// Keeps the states in `keep` (which must contain the initial state),
    /// renumbering them in ascending order.
    pub(crate) fn restrict(&self, keep: &BTreeSet<StateId>) -> Fst {
        let mut map = vec![usize::MAX; self.num_states];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut out = Fst::new(keep.len(), map[self.initial]);
        for &f in &self.finals {
            if map[f] != usize::MAX {
                out.finals.insert(map[f]);
            }
        }
        for t in &self.transitions {
            if map[t.src] != usize::MAX && map[t.dst] != usize::MAX {
                out.add(map[t.src], t.letter, map[t.dst]);
            }
        }
        out
    }
}

fn range_from(s: StateId) -> std::ops::RangeFrom<Transition> {
    Transition {
        src: s,
        letter: Letter::new(Symbol::EPS, Symbol::EPS),
        dst: 0,
    }..
}

/// Running-example machines used by tests, benches and documentation.
pub mod examples {
    use super::Fst;

    /// Two-state nondeterministic machine that reads `i1 i2` and writes either
    /// `o1 o3` or `o1 o2`; state 0 initial, state 1 final.
    pub fn two_output_fst() -> Fst {
        let mut f = Fst::new(3, 0);
        f.add_named(0, "i1", "o1", 2);
        f.add_named(2, "i2", "o2", 1);
        f.add_named(2, "i2", "o3", 1);
        f.set_final(1);
        f
    }

    /// The actuator attacker of the running example. In state 0 it swaps
    /// `a3` and `a1`; in state 1 it turns `a1` into `a2`. Both states final.
    ///
    /// Letters: `chi1 = a3:a1`, `chi2 = a1:a3` (state 0 to 1) and
    /// `chi3 = a1:a2` (state 1 to 0).
    pub fn actuator_attacker() -> Fst {
        let mut f = Fst::new(2, 0);
        f.add_named(0, "a3", "a1", 1);
        f.add_named(0, "a1", "a3", 1);
        f.add_named(1, "a1", "a2", 0);
        f.set_all_final();
        f
    }

    /// Single-state plant with loops `a1:s2` and `a2:s2`.
    pub fn plant() -> Fst {
        let mut f = Fst::new(1, 0);
        f.add_named(0, "a1", "s2", 0);
        f.add_named(0, "a2", "s2", 0);
        f.set_final(0);
        f
    }

    /// Prefix closure of `((a1:s2)(a2:s2))*`.
    pub fn desired() -> Fst {
        let mut f = Fst::new(2, 0);
        f.add_named(0, "a1", "s2", 1);
        f.add_named(1, "a2", "s2", 0);
        f.set_all_final();
        f
    }

    /// The unattacked sensor channel: identity on `s2`.
    pub fn sensor_identity() -> Fst {
        Fst::identity([crate::Symbol::new("s2")])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(text: &str) -> Word {
        Word::parse(text).unwrap()
    }

    #[test]
    fn accepts_two_output_example() {
        let f = examples::two_output_fst();
        assert!(f.accepts_word(&w("i1:o1 i2:o3")));
        assert!(f.accepts_word(&w("i1:o1 i2:o2")));
        assert!(!f.accepts_word(&w("i1:o1")));
        assert!(!f.accepts_word(&w("i1:o2 i2:o3")));
    }

    #[test]
    fn empty_word_and_initial_final() {
        let mut f = Fst::new(2, 0);
        assert!(!f.accepts(&[]));
        f.set_final(0);
        assert!(f.accepts(&[]));
    }

    #[test]
    fn attacker_accepts_chi1_chi3() {
        let a = examples::actuator_attacker();
        assert!(a.accepts_word(&w("a3:a1 a1:a2")));
        assert!(!a.accepts_word(&w("a1:a2")));
        // letters outside the alphabet simply reject
        assert!(!a.accepts_word(&w("zz:zz")));
    }

    #[test]
    fn stay_letters_do_not_change_acceptance() {
        let a = examples::actuator_attacker();
        assert!(a.accepts_word(&w("<eps>:<eps> a3:a1 <eps>:<eps> a1:a2")));
    }

    #[test]
    fn stay_loops_are_implicit() {
        let mut f = Fst::new(1, 0);
        f.add(0, Letter::STAY, 0);
        assert_eq!(f.num_transitions(), 0);
    }

    #[test]
    fn silent_moves_are_followed() {
        let mut f = Fst::new(3, 0);
        f.add(0, Letter::STAY, 1);
        f.add_named(1, "x", "y", 2);
        f.set_final(2);
        assert!(f.accepts_word(&w("x:y")));
        assert!(!f.accepts(&[]));
    }

    #[test]
    fn invert_involution_and_language() {
        let a = examples::actuator_attacker();
        assert_eq!(a.invert().invert(), a);
        let inv = a.invert();
        assert!(inv.accepts_word(&w("a1:a3 a2:a1")));
        assert!(!inv.accepts_word(&w("a3:a1 a1:a2")));
    }

    #[test]
    fn identity_inverts_to_itself() {
        let id = Fst::identity(["x", "y", "z"].map(Symbol::new));
        assert_eq!(id.invert(), id);
    }

    #[test]
    fn alphabets_contain_eps() {
        let a = examples::actuator_attacker();
        assert!(a.inputs().contains(&Symbol::EPS));
        assert!(a.outputs().contains(&Symbol::EPS));
        assert_eq!(a.letters().len(), 3);
    }
}

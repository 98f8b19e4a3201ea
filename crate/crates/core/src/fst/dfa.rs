//! Determinization over the pair alphabet and the decision procedures built
//! on it.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{trim, Fst, StateId};
use crate::error::{Error, Result};
use crate::symbol::{sort_letters, Letter};
use crate::word::Word;

/// Resource guards for exponential constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum subset-construction (or product) states.
    pub max_states: usize,
    /// Maximum number of words returned by bounded enumeration.
    pub max_words: usize,
    /// Maximum word length accepted by bounded enumeration.
    pub max_len: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 10_000,
            max_words: 2_000_000,
            max_len: 64,
        }
    }
}

/// A partial deterministic acceptor over letters. State 0 is initial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    pub delta: Vec<BTreeMap<Letter, usize>>,
    pub finals: Vec<bool>,
}

impl Dfa {
    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn step(&self, s: usize, l: Letter) -> Option<usize> {
        self.delta[s].get(&l).copied()
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut s = 0;
        for &l in word {
            match self.step(s, l) {
                Some(n) => s = n,
                None => return false,
            }
        }
        self.finals[s]
    }

    pub fn to_fst(&self) -> Fst {
        let mut f = Fst::new(self.num_states().max(1), 0);
        for (s, row) in self.delta.iter().enumerate() {
            for (&l, &d) in row {
                f.add(s, l, d);
            }
        }
        for (s, &fin) in self.finals.iter().enumerate() {
            if fin {
                f.set_final(s);
            }
        }
        f
    }

    /// Partition-refinement minimization of a partial DFA. States that
    /// cannot reach a final state are merged into the implicit sink and
    /// dropped; the quotient is renumbered in breadth-first order.
    pub fn minimized(&self) -> Dfa {
        let n = self.num_states();
        let mut back = vec![Vec::new(); n];
        for (s, row) in self.delta.iter().enumerate() {
            for &d in row.values() {
                back[d].push(s);
            }
        }
        let mut live = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&s| self.finals[s]).collect();
        for &s in &stack {
            live[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &back[s] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
        if !live[0] {
            return Dfa {
                delta: vec![BTreeMap::new()],
                finals: vec![false],
            };
        }

        // class usize::MAX stands for the sink
        let mut class: Vec<usize> = (0..n)
            .map(|s| {
                if !live[s] {
                    usize::MAX
                } else {
                    self.finals[s] as usize
                }
            })
            .collect();
        loop {
            let mut sigs: HashMap<(usize, Vec<(Letter, usize)>), usize> = HashMap::new();
            let mut next = vec![usize::MAX; n];
            for s in 0..n {
                if !live[s] {
                    continue;
                }
                let sig: Vec<(Letter, usize)> = self.delta[s]
                    .iter()
                    .filter(|(_, &d)| live[d])
                    .map(|(&l, &d)| (l, class[d]))
                    .collect();
                let fresh = sigs.len();
                next[s] = *sigs.entry((class[s], sig)).or_insert(fresh);
            }
            let before = class
                .iter()
                .filter(|&&c| c != usize::MAX)
                .collect::<BTreeSet<_>>()
                .len();
            let changed = sigs.len() != before;
            class = next;
            if !changed {
                break;
            }
        }

        // BFS renumbering from the initial class
        let mut rep: HashMap<usize, usize> = HashMap::new();
        for s in 0..n {
            if live[s] {
                rep.entry(class[s]).or_insert(s);
            }
        }
        let mut ids: HashMap<usize, usize> = HashMap::new();
        let mut order = vec![class[0]];
        ids.insert(class[0], 0);
        let mut queue = VecDeque::from([class[0]]);
        while let Some(c) = queue.pop_front() {
            let s = rep[&c];
            let mut row: Vec<(Letter, usize)> = self.delta[s]
                .iter()
                .filter(|(_, &d)| live[d])
                .map(|(&l, &d)| (l, d))
                .collect();
            row.sort_by_key(|(l, _)| l.name_key());
            for (_, d) in row {
                let cd = class[d];
                if let std::collections::hash_map::Entry::Vacant(e) = ids.entry(cd) {
                    e.insert(order.len());
                    order.push(cd);
                    queue.push_back(cd);
                }
            }
        }
        let mut delta = vec![BTreeMap::new(); order.len()];
        let mut finals = vec![false; order.len()];
        for (k, c) in order.iter().enumerate() {
            let s = rep[c];
            finals[k] = self.finals[s];
            for (&l, &d) in &self.delta[s] {
                if live[d] {
                    delta[k].insert(l, ids[&class[d]]);
                }
            }
        }
        Dfa { delta, finals }
    }
}

/// Subset construction with silent-move closure. Fails with a resource
/// error instead of exceeding `limits.max_states`.
pub fn determinize(fst: &Fst, limits: &Limits) -> Result<Dfa> {
    let adj = fst.adjacency();
    let mut start = BTreeSet::from([fst.initial()]);
    fst.eps_closure(&adj, &mut start);

    let mut ids: HashMap<BTreeSet<StateId>, usize> = HashMap::new();
    let mut subsets = vec![start.clone()];
    ids.insert(start, 0);
    let mut delta: Vec<BTreeMap<Letter, usize>> = vec![BTreeMap::new()];
    let mut k = 0;
    while k < subsets.len() {
        let mut moves: BTreeMap<Letter, BTreeSet<StateId>> = BTreeMap::new();
        for &s in &subsets[k] {
            for &(l, d) in &adj[s] {
                if !l.is_stay() {
                    moves.entry(l).or_default().insert(d);
                }
            }
        }
        for (l, mut target) in moves {
            fst.eps_closure(&adj, &mut target);
            let id = match ids.get(&target) {
                Some(&id) => id,
                None => {
                    if subsets.len() >= limits.max_states {
                        return Err(Error::Resource {
                            what: "subset construction states",
                            limit: limits.max_states,
                        });
                    }
                    let id = subsets.len();
                    ids.insert(target.clone(), id);
                    subsets.push(target);
                    delta.push(BTreeMap::new());
                    id
                }
            };
            delta[k].insert(l, id);
        }
        k += 1;
    }
    let finals = subsets
        .iter()
        .map(|set| set.iter().any(|s| fst.is_final(*s)))
        .collect();
    Ok(Dfa { delta, finals })
}

/// Minimal deterministic pair-alphabet acceptor with the same language.
pub fn minimize(fst: &Fst) -> Result<Fst> {
    minimize_with(fst, &Limits::default())
}

pub fn minimize_with(fst: &Fst, limits: &Limits) -> Result<Fst> {
    let dfa = determinize(&trim(fst), limits)?;
    Ok(dfa.minimized().to_fst())
}

/// A shortest word (shortlex by symbol names) in exactly one of the two
/// languages, or `None` if they are equal.
pub fn shortest_difference(a: &Fst, b: &Fst) -> Result<Option<Word>> {
    let limits = Limits::default();
    let da = determinize(a, &limits)?;
    let db = determinize(b, &limits)?;
    let mut letters: Vec<Letter> = a.letters().union(&b.letters()).copied().collect();
    sort_letters(&mut letters);

    type Pair = (Option<usize>, Option<usize>);
    let fin = |p: Pair| -> (bool, bool) {
        (
            p.0.is_some_and(|s| da.finals[s]),
            p.1.is_some_and(|s| db.finals[s]),
        )
    };
    let start: Pair = (Some(0), Some(0));
    let mut parent: HashMap<Pair, Option<(Pair, Letter)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        let (fa, fb) = fin(p);
        if fa != fb {
            let mut word = Vec::new();
            let mut cur = p;
            while let Some(Some((prev, l))) = parent.get(&cur) {
                word.push(*l);
                cur = *prev;
            }
            word.reverse();
            return Ok(Some(Word::new(word)));
        }
        for &l in &letters {
            let next: Pair = (
                p.0.and_then(|s| da.step(s, l)),
                p.1.and_then(|s| db.step(s, l)),
            );
            if next == (None, None) || parent.contains_key(&next) {
                continue;
            }
            if parent.len() >= limits.max_states {
                return Err(Error::Resource {
                    what: "difference product states",
                    limit: limits.max_states,
                });
            }
            parent.insert(next, Some((p, l)));
            queue.push_back(next);
        }
    }
    Ok(None)
}

/// `L(a) = L(b)` over the pair alphabet.
pub fn equivalent(a: &Fst, b: &Fst) -> Result<bool> {
    Ok(shortest_difference(a, b)?.is_none())
}

/// Every accepted word of length at most `n`.
pub fn language_upto(fst: &Fst, n: usize, limits: &Limits) -> Result<BTreeSet<Word>> {
    if n > limits.max_len {
        return Err(Error::Resource {
            what: "enumeration length",
            limit: limits.max_len,
        });
    }
    let dfa = determinize(&trim(fst), limits)?.minimized();
    let mut out = BTreeSet::new();
    let mut stack: Vec<(usize, Vec<Letter>)> = vec![(0, Vec::new())];
    while let Some((s, w)) = stack.pop() {
        if dfa.finals[s] {
            if out.len() >= limits.max_words {
                return Err(Error::Resource {
                    what: "enumerated words",
                    limit: limits.max_words,
                });
            }
            out.insert(Word::new(w.clone()));
        }
        if w.len() == n {
            continue;
        }
        for (&l, &d) in &dfa.delta[s] {
            let mut next = w.clone();
            next.push(l);
            stack.push((d, next));
        }
    }
    Ok(out)
}

/// Every prefix of every accepted word is accepted.
pub fn is_prefix_closed(fst: &Fst) -> Result<bool> {
    let t = trim(fst);
    if t.finals().is_empty() {
        return Ok(true);
    }
    let dfa = determinize(&t, &Limits::default())?;
    Ok(dfa.finals.iter().all(|&f| f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::examples;

    fn w(text: &str) -> Word {
        Word::parse(text).unwrap()
    }

    #[test]
    fn minimize_attacker_two_states() {
        let m = minimize(&examples::actuator_attacker()).unwrap();
        assert_eq!(m.num_states(), 2);
        assert!(equivalent(&m, &examples::actuator_attacker()).unwrap());
    }

    #[test]
    fn minimize_merges_equivalent_states() {
        let mut f = Fst::new(3, 0);
        f.add_named(0, "x", "x", 1);
        f.add_named(0, "y", "y", 2);
        f.add_named(1, "z", "z", 0);
        f.add_named(2, "z", "z", 0);
        f.set_all_final();
        assert_eq!(minimize(&f).unwrap().num_states(), 2);
    }

    #[test]
    fn minimize_single_state_is_itself() {
        let id = Fst::identity([crate::Symbol::new("q")]);
        assert_eq!(minimize(&id).unwrap(), id);
        assert_eq!(
            minimize(&Fst::empty_language()).unwrap(),
            Fst::empty_language()
        );
    }

    #[test]
    fn state_explosion_guard() {
        // (x|y)* x (x|y)^k needs 2^(k+1) subsets
        let k = 14;
        let mut f = Fst::new(k + 2, 0);
        for l in ["x", "y"] {
            f.add_named(0, l, l, 0);
        }
        f.add_named(0, "x", "x", 1);
        for s in 1..=k {
            for l in ["x", "y"] {
                f.add_named(s, l, l, s + 1);
            }
        }
        f.set_final(k + 1);
        let err = minimize(&f).unwrap_err();
        assert!(matches!(err, Error::Resource { limit: 10_000, .. }));
        let small = Limits {
            max_states: 1 << 20,
            ..Limits::default()
        };
        assert!(minimize_with(&f, &small).is_ok());
    }

    #[test]
    fn language_upto_attacker() {
        let a = examples::actuator_attacker();
        let l2 = language_upto(&a, 2, &Limits::default()).unwrap();
        let expect: BTreeSet<Word> = ["<empty>", "a3:a1", "a1:a3", "a3:a1 a1:a2", "a1:a3 a1:a2"]
            .iter()
            .map(|s| w(s))
            .collect();
        assert_eq!(l2, expect);
        let l0 = language_upto(&a, 0, &Limits::default()).unwrap();
        assert_eq!(l0.len(), 1);
    }

    #[test]
    fn language_upto_limits() {
        let u = Fst::universal([Letter::from_names("x", "x"), Letter::from_names("y", "y")]);
        let lim = Limits {
            max_words: 100,
            ..Limits::default()
        };
        assert!(matches!(
            language_upto(&u, 10, &lim),
            Err(Error::Resource { .. })
        ));
        assert!(matches!(
            language_upto(&u, 65, &Limits::default()),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn prefix_closure() {
        assert!(is_prefix_closed(&examples::actuator_attacker()).unwrap());
        let mut f = Fst::new(3, 0);
        f.add_named(0, "c1", "c1", 1);
        f.add_named(1, "c2", "c2", 2);
        f.set_final(2);
        assert!(!is_prefix_closed(&f).unwrap());
        assert!(is_prefix_closed(&f.with_all_final()).unwrap());
    }

    #[test]
    fn difference_witness_is_shortest() {
        let a = examples::actuator_attacker();
        let mut b = a.clone();
        b.remove_transition(&crate::fst::Transition {
            src: 1,
            letter: Letter::from_names("a1", "a2"),
            dst: 0,
        });
        let wit = shortest_difference(&a, &b).unwrap().unwrap();
        assert_eq!(wit.len(), 2);
        assert!(a.accepts_word(&wit) != b.accepts_word(&wit));
        assert_eq!(shortest_difference(&a, &a).unwrap(), None);
    }
}

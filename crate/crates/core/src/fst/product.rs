use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{Fst, StateId};
use crate::symbol::{Letter, Symbol};

/// Removes states that are unreachable from the initial state or cannot
/// reach a final state. An empty language yields [`Fst::empty_language`].
pub fn trim(fst: &Fst) -> Fst {
    let n = fst.num_states();
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for t in fst.transitions() {
        fwd[t.src].push(t.dst);
        bwd[t.dst].push(t.src);
    }
    let reach = flood(&fwd, [fst.initial()]);
    let coreach = flood(&bwd, fst.finals().iter().copied());
    let keep: BTreeSet<StateId> = (0..n).filter(|&s| reach[s] && coreach[s]).collect();
    if !keep.contains(&fst.initial()) {
        return Fst::empty_language();
    }
    fst.restrict(&keep)
}

fn flood<I: IntoIterator<Item = StateId>>(edges: &[Vec<StateId>], start: I) -> Vec<bool> {
    let mut seen = vec![false; edges.len()];
    let mut stack: Vec<StateId> = Vec::new();
    for s in start {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        for &d in &edges[s] {
            if !seen[d] {
                seen[d] = true;
                stack.push(d);
            }
        }
    }
    seen
}

/// Explores a product machine from `start`, numbering pairs in discovery
/// order. `step` lists the labelled successors of a pair.
fn explore<F, G>(start: (StateId, StateId), mut step: F, is_final: G) -> Fst
where
    F: FnMut((StateId, StateId)) -> Vec<(Letter, (StateId, StateId))>,
    G: Fn((StateId, StateId)) -> bool,
{
    let mut ids: HashMap<(StateId, StateId), StateId> = HashMap::new();
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    ids.insert(start, 0);
    let mut edges = Vec::new();
    while let Some(pair) = queue.pop_front() {
        let src = ids[&pair];
        for (letter, next) in step(pair) {
            let dst = *ids.entry(next).or_insert_with(|| {
                order.push(next);
                queue.push_back(next);
                order.len() - 1
            });
            edges.push((src, letter, dst));
        }
    }
    let mut out = Fst::new(order.len(), 0);
    for (s, l, d) in edges {
        out.add(s, l, d);
    }
    for (k, &pair) in order.iter().enumerate() {
        if is_final(pair) {
            out.set_final(k);
        }
    }
    out
}

fn with_stays(fst: &Fst) -> Vec<Vec<(Letter, StateId)>> {
    let mut adj = fst.adjacency();
    for (s, moves) in adj.iter_mut().enumerate() {
        moves.push((Letter::STAY, s));
    }
    adj
}

/// Letter-synchronous composition: `a`'s output feeds `b`'s input.
///
/// `((p, q), i, o, (p', q'))` exists iff `(p, i, m, p')` is in `a` and
/// `(q, m, o, q')` is in `b` for some `m`, where both machines also own their
/// stay loops so an ε on the mediating side can be absorbed by the other
/// machine standing still. The result is trimmed.
pub fn compose(a: &Fst, b: &Fst) -> Fst {
    let a_adj = with_stays(a);
    let b_adj = with_stays(b);
    let b_by_input: Vec<HashMap<Symbol, Vec<(Letter, StateId)>>> = b_adj
        .iter()
        .map(|moves| {
            let mut m: HashMap<Symbol, Vec<(Letter, StateId)>> = HashMap::new();
            for &(l, d) in moves {
                m.entry(l.input).or_default().push((l, d));
            }
            m
        })
        .collect();
    let product = explore(
        (a.initial(), b.initial()),
        |(p, q)| {
            let mut out = Vec::new();
            for &(la, pa) in &a_adj[p] {
                let Some(matches) = b_by_input[q].get(&la.output) else {
                    continue;
                };
                for &(lb, qb) in matches {
                    let letter = Letter::new(la.input, lb.output);
                    if letter.is_stay() && pa == p && qb == q {
                        continue;
                    }
                    out.push((letter, (pa, qb)));
                }
            }
            out
        },
        |(p, q)| a.is_final(p) && b.is_final(q),
    );
    trim(&product)
}

/// Product acceptor over the pair alphabet: `L(a) ∩ L(b)`, trimmed.
pub fn intersect(a: &Fst, b: &Fst) -> Fst {
    let a_adj = a.adjacency();
    let b_adj = b.adjacency();
    let product = explore(
        (a.initial(), b.initial()),
        |(p, q)| {
            let mut out = Vec::new();
            for &(la, pa) in &a_adj[p] {
                if la.is_stay() {
                    out.push((Letter::STAY, (pa, q)));
                    continue;
                }
                for &(lb, qb) in &b_adj[q] {
                    if lb == la {
                        out.push((la, (pa, qb)));
                    }
                }
            }
            for &(lb, qb) in &b_adj[q] {
                if lb.is_stay() {
                    out.push((Letter::STAY, (p, qb)));
                }
            }
            out
        },
        |(p, q)| a.is_final(p) && b.is_final(q),
    );
    trim(&product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{equivalent, examples};
    use crate::word::Word;

    fn w(text: &str) -> Word {
        Word::parse(text).unwrap()
    }

    #[test]
    fn trim_drops_unreachable_state() {
        let mut f = examples::actuator_attacker();
        let extra = f.add_state();
        f.add_named(extra, "a1", "a1", 0);
        f.set_final(extra);
        let t = trim(&f);
        assert_eq!(t.num_states(), 2);
        assert_eq!(t, examples::actuator_attacker());
        assert_eq!(trim(&t), t);
    }

    #[test]
    fn trim_drops_dead_state() {
        let mut f = Fst::new(3, 0);
        f.add_named(0, "x", "x", 1);
        f.add_named(0, "y", "y", 2);
        f.set_final(1);
        let t = trim(&f);
        assert_eq!(t.num_states(), 2);
        assert!(t.accepts_word(&w("x:x")));
    }

    #[test]
    fn trim_empty_language_is_canonical() {
        let mut f = Fst::new(2, 0);
        f.add_named(0, "x", "x", 1);
        assert_eq!(trim(&f), Fst::empty_language());
    }

    #[test]
    fn compose_identity_law() {
        let a = examples::actuator_attacker();
        let id = Fst::identity(a.outputs());
        assert!(equivalent(&compose(&a, &id), &a).unwrap());
        let id_in = Fst::identity(a.inputs());
        assert!(equivalent(&compose(&id_in, &a), &a).unwrap());
    }

    #[test]
    fn compose_chains_symbols() {
        let mut a = Fst::new(1, 0);
        a.add_named(0, "x", "m", 0);
        a.set_final(0);
        let mut b = Fst::new(1, 0);
        b.add_named(0, "m", "y", 0);
        b.set_final(0);
        let c = compose(&a, &b);
        assert!(c.accepts_word(&w("x:y x:y")));
        assert!(!c.accepts_word(&w("x:m")));
    }

    #[test]
    fn compose_eps_mediated_letters() {
        // a deletes its input; b then stands still on its stay loop
        let mut a = Fst::new(2, 0);
        a.add_named(0, "x", "<eps>", 1);
        a.set_final(1);
        let mut b = Fst::new(2, 0);
        b.add_named(0, "<eps>", "y", 1);
        b.set_final(0);
        b.set_final(1);
        let c = compose(&a, &b);
        // (x, ε) against b's stay, or (x, y) against b's (ε, y)
        assert!(c.accepts_word(&w("x:<eps>")));
        assert!(c.accepts_word(&w("x:y")));
        assert!(!c.accepts(&[]));
    }

    #[test]
    fn compose_silent_product_move() {
        let mut a = Fst::new(2, 0);
        a.add_named(0, "<eps>", "m", 1);
        a.set_final(1);
        let mut b = Fst::new(2, 0);
        b.add_named(0, "m", "<eps>", 1);
        b.set_final(1);
        let c = compose(&a, &b);
        assert!(c.accepts(&[]));
    }

    #[test]
    fn intersect_basic() {
        let a = examples::actuator_attacker();
        assert!(equivalent(&intersect(&a, &a), &a).unwrap());
        let u = Fst::universal(a.letters());
        assert!(equivalent(&intersect(&a, &u), &a).unwrap());
        let p = examples::plant();
        let k = examples::desired();
        assert!(equivalent(&intersect(&p, &k), &k).unwrap());
    }

    #[test]
    fn intersect_with_silent_moves() {
        let mut a = Fst::new(3, 0);
        a.add(0, Letter::STAY, 1);
        a.add_named(1, "x", "x", 2);
        a.set_final(2);
        let b = Fst::universal([Letter::from_names("x", "x")]);
        let c = intersect(&a, &b);
        assert!(c.accepts_word(&w("x:x")));
        assert!(!c.accepts(&[]));
    }
}

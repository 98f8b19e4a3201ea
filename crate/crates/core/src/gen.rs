//! Seeded random machines for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fst::{minimize, trim, Fst};
use crate::symbol::{Letter, Symbol};

#[derive(Clone, Copy, Debug)]
pub struct GenParams {
    pub max_states: usize,
    /// Letters are drawn from `{i0..}×{o0..}`, at most this many.
    pub max_letters: usize,
    pub max_out_degree: usize,
    /// Chance of adding each optional extra transition.
    pub density: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_states: 5,
            max_letters: 4,
            max_out_degree: 3,
            density: 0.35,
        }
    }
}

/// Letters `i{j}:o{k}` of a square pool just large enough for `n` letters.
pub fn letter_pool(n: usize) -> Vec<Letter> {
    let side = (1..).find(|s| s * s >= n).unwrap_or(1);
    let mut pool = Vec::with_capacity(side * side);
    for i in 0..side {
        for o in 0..side {
            pool.push(Letter::from_names(&format!("i{i}"), &format!("o{o}")));
        }
    }
    pool
}

/// A nondeterministic machine with random finals, possibly not trim.
/// Useful as an input for the structural operations.
pub fn random_nfa<R: Rng>(rng: &mut R, p: &GenParams) -> Fst {
    let n = rng.gen_range(1..=p.max_states);
    let k = rng.gen_range(1..=p.max_letters);
    let letters = &letter_pool(p.max_letters)[..k];
    let mut f = Fst::new(n, 0);
    for s in 0..n {
        for &l in letters {
            for d in 0..n {
                if rng.gen_bool(p.density / n as f64) {
                    f.add(s, l, d);
                }
            }
        }
        if rng.gen_bool(0.4) {
            f.set_final(s);
        }
    }
    f
}

/// A deterministic, trim machine with every state final, built around a
/// random spanning tree so that every state is reachable. May be
/// non-minimal.
pub fn random_deterministic<R: Rng>(rng: &mut R, p: &GenParams) -> Fst {
    loop {
        let n = rng.gen_range(1..=p.max_states);
        let k = rng.gen_range(1..=p.max_letters);
        let mut letters = letter_pool(p.max_letters);
        letters.shuffle(rng);
        letters.truncate(k);
        if let Some(f) = try_deterministic(rng, n, &letters, p) {
            return f;
        }
    }
}

fn try_deterministic<R: Rng>(
    rng: &mut R,
    n: usize,
    letters: &[Letter],
    p: &GenParams,
) -> Option<Fst> {
    let degree_cap = p.max_out_degree.min(letters.len());
    let mut used: Vec<Vec<Letter>> = vec![Vec::new(); n];
    let mut f = Fst::new(n, 0);
    for s in 1..n {
        let parents: Vec<usize> = (0..s).filter(|&q| used[q].len() < degree_cap).collect();
        let &parent = parents.choose(rng)?;
        let free: Vec<Letter> = letters
            .iter()
            .copied()
            .filter(|l| !used[parent].contains(l))
            .collect();
        let &l = free.choose(rng)?;
        used[parent].push(l);
        f.add(parent, l, s);
    }
    for (s, out) in used.iter_mut().enumerate() {
        for &l in letters {
            if out.len() >= degree_cap || out.contains(&l) {
                continue;
            }
            if rng.gen_bool(p.density) {
                out.push(l);
                f.add(s, l, rng.gen_range(0..n));
            }
        }
    }
    f.set_all_final();
    Some(f)
}

/// Rank over the rationals of a 0/1 matrix given as rows, by fraction-free
/// Gaussian elimination.
pub fn exact_rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i64>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = 1i64;
    for c in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][c] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in rank + 1..m.len() {
            for j in c + 1..cols {
                m[r][j] = (m[rank][c] * m[r][j] - m[r][c] * m[rank][j]) / prev;
            }
            m[r][c] = 0;
        }
        prev = m[rank][c];
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Residual vectors of the states of a deterministic machine over every
/// suffix of length at most `len` (letters taken from the machine).
pub fn residual_rows(f: &Fst, len: usize) -> Vec<Vec<i64>> {
    let mut letters: Vec<Letter> = f.letters().into_iter().collect();
    crate::symbol::sort_letters(&mut letters);
    let mut next = vec![Vec::new(); f.num_states()];
    for t in f.transitions() {
        next[t.src].push((t.letter, t.dst));
    }
    let mut suffixes: Vec<Vec<Letter>> = vec![Vec::new()];
    let mut frontier = suffixes.clone();
    for _ in 0..len {
        let mut grown = Vec::new();
        for s in &frontier {
            for &l in &letters {
                let mut w = s.clone();
                w.push(l);
                grown.push(w);
            }
        }
        suffixes.extend(grown.iter().cloned());
        frontier = grown;
    }
    (0..f.num_states())
        .map(|q| {
            suffixes
                .iter()
                .map(|w| {
                    let mut s = Some(q);
                    for l in w {
                        s = s.and_then(|x| next[x].iter().find(|(m, _)| m == l).map(|&(_, d)| d));
                    }
                    s.is_some_and(|x| f.is_final(x)) as i64
                })
                .collect()
        })
        .collect()
}

/// Whether the state residuals over suffixes of length at most `n − 1` are
/// linearly independent, `n` the state count. Those are exactly the
/// machines whose Hankel matrix has one dimension per state.
pub fn has_independent_residuals(f: &Fst) -> bool {
    let n = f.num_states();
    exact_rank(&residual_rows(f, n.saturating_sub(1))) == n
}

/// A random deterministic trim all-final machine whose states have
/// linearly independent residuals and which is already minimal.
pub fn random_learnable<R: Rng>(rng: &mut R, p: &GenParams) -> Fst {
    loop {
        let f = random_deterministic(rng, p);
        let minimal = minimize(&f)
            .map(|m| m.num_states() == f.num_states())
            .unwrap_or(false);
        if minimal && has_independent_residuals(&f) {
            return f;
        }
    }
}

/// A nondeterministic machine over the given input and output symbols,
/// every state final, trimmed to its accessible part.
pub fn random_over<R: Rng>(
    rng: &mut R,
    max_states: usize,
    inputs: &[Symbol],
    outputs: &[Symbol],
    density: f64,
) -> Fst {
    let n = rng.gen_range(1..=max_states);
    let mut f = Fst::new(n, 0);
    for s in 0..n {
        for &i in inputs {
            for &o in outputs {
                if rng.gen_bool(density) {
                    f.add(s, Letter::new(i, o), rng.gen_range(0..n));
                }
            }
        }
    }
    f.set_all_final();
    trim(&f)
}

/// A total, input-deterministic channel over `symbols`, every state final.
/// With `bijective` each state applies a permutation, so the channel can be
/// undone from its output alone; otherwise each state applies an arbitrary
/// function.
pub fn random_channel<R: Rng>(
    rng: &mut R,
    max_states: usize,
    symbols: &[Symbol],
    bijective: bool,
) -> Fst {
    let n = rng.gen_range(1..=max_states);
    let mut f = Fst::new(n, 0);
    for s in 0..n {
        let mut image = symbols.to_vec();
        if bijective {
            image.shuffle(rng);
        } else {
            for x in image.iter_mut() {
                *x = *symbols.choose(rng).unwrap();
            }
        }
        for (&x, &y) in symbols.iter().zip(&image) {
            f.add(s, Letter::new(x, y), rng.gen_range(0..n));
        }
    }
    f.set_all_final();
    trim(&f)
}

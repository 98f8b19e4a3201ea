//! Binary Hankel matrices of a sample set.
//!
//! For a mask `(Ψ, Γ)` of prefix and suffix words, `H_Θ(ψ, γ) = 1` iff the
//! word `ψγ` was recorded, and for every letter `χ`, `H_χ(ψ, γ) = 1` iff
//! `ψχγ` was recorded.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{self, Matrix};
use crate::symbol::Letter;
use crate::word::{SampleSet, Word};

pub use crate::linalg::numeric_rank;

/// Prefix and suffix index lists. Both start with the empty word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    prefixes: Vec<Word>,
    suffixes: Vec<Word>,
}

impl Mask {
    pub fn new(prefixes: Vec<Word>, suffixes: Vec<Word>) -> Result<Mask> {
        for (name, list) in [("prefix", &prefixes), ("suffix", &suffixes)] {
            if list.first().map(|w| w.is_empty()) != Some(true) {
                return Err(Error::Precondition(format!(
                    "the {name} list must start with the empty word"
                )));
            }
            let distinct: HashSet<&Word> = list.iter().collect();
            if distinct.len() != list.len() {
                return Err(Error::Precondition(format!("duplicate {name} in mask")));
            }
        }
        Ok(Mask { prefixes, suffixes })
    }

    /// `([ε], [ε])`.
    pub fn trivial() -> Mask {
        Mask {
            prefixes: vec![Word::empty()],
            suffixes: vec![Word::empty()],
        }
    }

    pub fn prefixes(&self) -> &[Word] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[Word] {
        &self.suffixes
    }
}

/// `H_Θ` together with one `H_χ` per observed letter.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelSet {
    pub mask: Mask,
    pub h_theta: Matrix,
    /// Letters in name order; `h_chi[k]` belongs to `alphabet[k]`.
    pub alphabet: Vec<Letter>,
    pub h_chi: Vec<Matrix>,
}

impl HankelSet {
    pub fn h_chi_for(&self, letter: Letter) -> Option<&Matrix> {
        self.alphabet
            .iter()
            .position(|&l| l == letter)
            .map(|k| &self.h_chi[k])
    }
}

fn indicator(d: &SampleSet, rows: &[Word], cols: &[Word], middle: &[Letter]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| {
        d.contains_concat(&[&rows[i], middle, &cols[j]]) as u8 as f64
    })
}

pub fn build_h_theta(d: &SampleSet, m: &Mask) -> Matrix {
    indicator(d, &m.prefixes, &m.suffixes, &[])
}

pub fn build_h_chi(d: &SampleSet, m: &Mask, chi: Letter) -> Matrix {
    indicator(d, &m.prefixes, &m.suffixes, &[chi])
}

pub fn build_hankel_set(d: &SampleSet, m: &Mask) -> HankelSet {
    build_hankel_set_with(d, m, Exec::default())
}

/// Builds the per-letter matrices under the given execution strategy.
pub fn build_hankel_set_with(d: &SampleSet, m: &Mask, exec: Exec) -> HankelSet {
    let alphabet = d.alphabet();
    let h_chi = exec.map(&alphabet, |&chi| build_h_chi(d, m, chi));
    HankelSet {
        mask: m.clone(),
        h_theta: build_h_theta(d, m),
        alphabet,
        h_chi,
    }
}

/// Mask length used when none is given: the largest `m` with `2m + 1` not
/// exceeding the longest recorded word, so every entry of every `H_χ` is
/// within the recorded horizon.
pub fn default_mask_len(d: &SampleSet) -> usize {
    d.max_len().map_or(0, |l| l.saturating_sub(1) / 2)
}

fn candidates(d: &SampleSet, max_len: usize, prefixes: bool) -> Vec<Word> {
    let mut set: BTreeSet<Word> = BTreeSet::new();
    set.insert(Word::empty());
    for w in d {
        for k in 1..=w.len().min(max_len) {
            set.insert(if prefixes {
                w.prefix(k)
            } else {
                w.suffix_from(w.len() - k)
            });
        }
    }
    let mut v: Vec<Word> = set.into_iter().collect();
    v.sort_by(|a, b| a.name_cmp(b));
    v
}

/// Greedy rank-maximizing mask.
///
/// Candidates are the prefixes and suffixes of recorded words up to
/// `max_len`, visited in shortlex order of symbol names. A prefix is kept if
/// it raises the rank of the prefix rows measured over every candidate
/// suffix; then a suffix is kept if it raises the rank of `H_Θ` over the kept
/// prefixes. The result is deterministic for a fixed sample set.
pub fn find_basis(d: &SampleSet, max_len: usize) -> Mask {
    find_basis_with_tol(d, max_len, linalg::TOL_RANK)
}

pub fn find_basis_with_tol(d: &SampleSet, max_len: usize, tol: f64) -> Mask {
    let cand_p = candidates(d, max_len, true);
    let cand_s = candidates(d, max_len, false);

    let row_of = |p: &Word| -> Vec<f64> {
        cand_s
            .iter()
            .map(|s| d.contains_concat(&[p, s]) as u8 as f64)
            .collect()
    };
    let stack = |rows: &[Vec<f64>]| -> Matrix {
        Matrix::from_fn(rows.len(), cand_s.len(), |i, j| rows[i][j])
    };

    let mut prefixes = vec![Word::empty()];
    let mut rows = vec![row_of(&prefixes[0])];
    let mut rank = numeric_rank(&stack(&rows), tol);
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    seen.insert(rows[0].iter().map(|&x| x as u8).collect());
    for p in cand_p.iter().skip(1) {
        let row = row_of(p);
        if !seen.insert(row.iter().map(|&x| x as u8).collect()) {
            continue;
        }
        rows.push(row);
        let r = numeric_rank(&stack(&rows), tol);
        if r > rank {
            rank = r;
            prefixes.push(p.clone());
        } else {
            rows.pop();
        }
    }

    let mut suffixes = vec![Word::empty()];
    let mut col_rank = numeric_rank(
        &build_h_theta(d, &Mask::new(prefixes.clone(), suffixes.clone()).unwrap()),
        tol,
    );
    for s in cand_s.iter().skip(1) {
        if col_rank == rank {
            break;
        }
        suffixes.push(s.clone());
        let m = Mask {
            prefixes: prefixes.clone(),
            suffixes: suffixes.clone(),
        };
        let r = numeric_rank(&build_h_theta(d, &m), tol);
        if r > col_rank {
            col_rank = r;
        } else {
            suffixes.pop();
        }
    }
    Mask { prefixes, suffixes }
}

/// Per-letter least-squares residual of `H_χ`'s rows against the row space
/// of `H_Θ` (largest row residual for each letter).
pub fn closedness_residuals(hz: &HankelSet) -> Vec<(Letter, f64)> {
    let dec = linalg::svd(&hz.h_theta);
    let thr = linalg::rank_threshold(&dec.sigma, linalg::TOL_RANK);
    let r = dec.sigma.iter().filter(|&&s| s > thr).count();
    let basis = dec.v_t.rows(0, r).into_owned();
    hz.alphabet
        .iter()
        .zip(&hz.h_chi)
        .map(|(&l, h)| {
            let proj = if r == 0 {
                Matrix::zeros(h.nrows(), h.ncols())
            } else {
                h * basis.transpose() * &basis
            };
            let resid = h - proj;
            let worst = resid.row_iter().map(|row| row.norm()).fold(0.0, f64::max);
            (l, worst)
        })
        .collect()
}

/// Every row of every `H_χ` lies in the row space of `H_Θ` within `tol`.
pub fn check_closed(hz: &HankelSet, tol: f64) -> bool {
    closedness_residuals(hz).iter().all(|&(_, r)| r < tol)
}

/// Aligned grid with row and column labels, for terminal dumps.
pub fn format_grid(title: &str, m: &Matrix, rows: &[Word], cols: &[Word]) -> String {
    let label = |w: &Word| {
        if w.is_empty() {
            "ε".to_owned()
        } else {
            w.to_string()
        }
    };
    let row_labels: Vec<String> = rows.iter().map(label).collect();
    let col_labels: Vec<String> = cols.iter().map(label).collect();
    let lw = row_labels
        .iter()
        .map(|s| s.chars().count())
        .max()
        .unwrap_or(0);
    let widths: Vec<usize> = col_labels
        .iter()
        .map(|s| s.chars().count().max(1))
        .collect();
    let mut out = String::new();
    writeln!(out, "{title}").unwrap();
    write!(out, "{:lw$}", "").unwrap();
    for (c, w) in col_labels.iter().zip(&widths) {
        write!(out, " | {c:>w$}").unwrap();
    }
    out.push('\n');
    for (i, r) in row_labels.iter().enumerate() {
        write!(out, "{r:>lw$}").unwrap();
        for (j, w) in widths.iter().enumerate() {
            write!(out, " | {:>w$}", linalg::format_entry(m[(i, j)])).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(text: &str) -> Word {
        Word::parse(text).unwrap()
    }

    const CHI1: &str = "a3:a1";
    const CHI2: &str = "a1:a3";
    const CHI3: &str = "a1:a2";

    fn running_words() -> SampleSet {
        let c = |s: &str| {
            s.replace("x1", CHI1)
                .replace("x2", CHI2)
                .replace("x3", CHI3)
        };
        [
            "<empty>", "x1", "x1 x3", "x1 x3 x1", "x2", "x2 x3", "x2 x3 x2", "x1 x3 x2", "x2 x3 x1",
        ]
        .iter()
        .map(|s| w(&c(s)))
        .collect()
    }

    fn running_mask() -> Mask {
        Mask::new(
            vec![w("<empty>"), w(CHI1), w(CHI2)],
            vec![w("<empty>"), w(CHI1), w(CHI2), w(CHI3)],
        )
        .unwrap()
    }

    fn mat(r: usize, c: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, v)
    }

    #[test]
    fn mask_validation() {
        assert!(Mask::new(vec![w(CHI1)], vec![w("<empty>")]).is_err());
        assert!(Mask::new(vec![w("<empty>"), w(CHI1), w(CHI1)], vec![w("<empty>")]).is_err());
        assert!(Mask::new(vec![], vec![w("<empty>")]).is_err());
    }

    #[test]
    fn h_theta_running() {
        let h = build_h_theta(&running_words(), &running_mask());
        assert_eq!(
            h,
            mat(3, 4, &[1., 1., 1., 0., 1., 0., 0., 1., 1., 0., 0., 1.])
        );
    }

    #[test]
    fn h_theta_trivial_cases() {
        assert_eq!(
            build_h_theta(&SampleSet::new(), &running_mask()),
            Matrix::zeros(3, 4)
        );
        let d: SampleSet = [Word::empty()].into_iter().collect();
        assert_eq!(build_h_theta(&d, &Mask::trivial()), mat(1, 1, &[1.]));
    }

    #[test]
    fn h_chi_running() {
        let d = running_words();
        let m = running_mask();
        let h1 = mat(3, 4, &[1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 0., 0.]);
        let h3 = mat(3, 4, &[0., 0., 0., 0., 1., 1., 1., 0., 1., 1., 1., 0.]);
        assert_eq!(build_h_chi(&d, &m, Letter::parse(CHI1).unwrap()), h1);
        assert_eq!(build_h_chi(&d, &m, Letter::parse(CHI2).unwrap()), h1);
        assert_eq!(build_h_chi(&d, &m, Letter::parse(CHI3).unwrap()), h3);
        assert_eq!(
            build_h_chi(&d, &m, Letter::from_names("zz", "zz")),
            Matrix::zeros(3, 4)
        );
    }

    #[test]
    fn hankel_set_shape() {
        let hz = build_hankel_set(&running_words(), &running_mask());
        assert_eq!(hz.alphabet.len(), 3);
        assert_eq!(hz.h_chi.len() + 1, 4);
        let empty = build_hankel_set(&SampleSet::new(), &running_mask());
        assert!(empty.h_chi.is_empty());
        assert_eq!(empty.h_theta, Matrix::zeros(3, 4));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let d = running_words();
        let m = running_mask();
        assert_eq!(
            build_hankel_set_with(&d, &m, Exec::Sequential),
            build_hankel_set_with(&d, &m, Exec::Parallel)
        );
    }

    #[test]
    fn rank_of_running_h_theta() {
        let h = build_h_theta(&running_words(), &running_mask());
        assert_eq!(numeric_rank(&h, linalg::TOL_RANK), 2);
    }

    #[test]
    fn find_basis_running() {
        let d = running_words();
        assert_eq!(default_mask_len(&d), 1);
        let m = find_basis(&d, 1);
        let h = build_h_theta(&d, &m);
        assert_eq!(numeric_rank(&h, linalg::TOL_RANK), 2);
        assert_eq!(m.prefixes().len(), 2);
        assert_eq!(m.suffixes().len(), 2);
        assert!(m.prefixes().iter().all(|p| p.len() <= 1));
    }

    #[test]
    fn find_basis_empty_word_only() {
        let d: SampleSet = [Word::empty()].into_iter().collect();
        assert_eq!(find_basis(&d, 3), Mask::trivial());
    }

    #[test]
    fn find_basis_is_greedy_monotone() {
        // dropping the last chosen prefix strictly lowers the rank
        let d = running_words();
        let m = find_basis(&d, 1);
        let full = numeric_rank(&build_h_theta(&d, &m), linalg::TOL_RANK);
        let mut p = m.prefixes().to_vec();
        p.pop();
        let sub = Mask::new(p, m.suffixes().to_vec()).unwrap();
        assert!(numeric_rank(&build_h_theta(&d, &sub), linalg::TOL_RANK) < full);
    }

    #[test]
    fn closedness() {
        let hz = build_hankel_set(&running_words(), &running_mask());
        assert!(check_closed(&hz, linalg::TOL_BINARY));

        let eps_only = HankelSet {
            mask: Mask::trivial(),
            h_theta: mat(1, 1, &[1.]),
            alphabet: vec![Letter::from_names("x", "x")],
            h_chi: vec![mat(1, 1, &[1.])],
        };
        assert!(check_closed(&eps_only, linalg::TOL_BINARY));

        let zero = HankelSet {
            h_theta: mat(1, 1, &[0.]),
            ..eps_only
        };
        assert!(!check_closed(&zero, linalg::TOL_BINARY));
    }

    #[test]
    fn closedness_survives_spanned_prefix() {
        // χ2's row duplicates χ1's; adding it keeps the table closed
        let d = running_words();
        let m = find_basis(&d, 1);
        let mut p = m.prefixes().to_vec();
        for extra in [CHI1, CHI2] {
            let e = w(extra);
            if !p.contains(&e) {
                p.push(e);
            }
        }
        let bigger = Mask::new(p, m.suffixes().to_vec()).unwrap();
        assert!(check_closed(&build_hankel_set(&d, &m), linalg::TOL_BINARY));
        assert!(check_closed(
            &build_hankel_set(&d, &bigger),
            linalg::TOL_BINARY
        ));
    }

    #[test]
    fn grid_has_labels() {
        let d = running_words();
        let m = running_mask();
        let g = format_grid(
            "H_theta",
            &build_h_theta(&d, &m),
            m.prefixes(),
            m.suffixes(),
        );
        assert!(g.starts_with("H_theta\n"));
        assert!(g.contains("a3:a1"));
        assert_eq!(g.lines().count(), 5);
    }
}

//! Spectral learning of transducers from Hankel matrices.
//!
//! `H_Θ` is factored as `P·S` by a truncated SVD. The change of basis `B`
//! built from linearly independent rows of `P` turns that factorization into
//! a natural one (rows of `P` are unit vectors or zero, `S` is binary), and
//! `T_χ = P⁺ H_χ S⁺` then reads off directly as the transition graph.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result, Stage};
use crate::exec::Exec;
use crate::fst::{minimize, trim, Fst};
use crate::hankel::{self, HankelSet, Mask};
use crate::linalg::{self, max_abs, numeric_rank, row_shape, snap_binary, Matrix, RowShape};
use crate::symbol::{sort_letters, Letter};
use crate::word::SampleSet;

/// Full-rank factorization `H_Θ ≈ P·S` with cached pseudo-inverses.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub p: Matrix,
    pub s: Matrix,
    p_pinv: Matrix,
    s_pinv: Matrix,
}

impl Decomposition {
    /// Builds a decomposition from arbitrary factors, computing both
    /// pseudo-inverses. `p` must have full column rank and `s` full row rank.
    pub fn new(p: Matrix, s: Matrix) -> Result<Decomposition> {
        let r = p.ncols();
        if s.nrows() != r {
            return Err(Error::Precondition(format!(
                "factor shapes disagree: P is {}x{}, S is {}x{}",
                p.nrows(),
                r,
                s.nrows(),
                s.ncols()
            )));
        }
        if numeric_rank(&p, linalg::TOL_RANK) != r || numeric_rank(&s, linalg::TOL_RANK) != r {
            return Err(Error::PseudoInverse("factors are rank deficient".into()));
        }
        let p_pinv = p
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::PseudoInverse(e.to_string()))?;
        let s_pinv = s
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::PseudoInverse(e.to_string()))?;
        Ok(Decomposition {
            p,
            s,
            p_pinv,
            s_pinv,
        })
    }

    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    /// Left pseudo-inverse of `P`.
    pub fn p_pinv(&self) -> &Matrix {
        &self.p_pinv
    }

    /// Right pseudo-inverse of `S`.
    pub fn s_pinv(&self) -> &Matrix {
        &self.s_pinv
    }

    pub fn product(&self) -> Matrix {
        &self.p * &self.s
    }

    /// `(P·B⁻¹, B·S)`, with pseudo-inverses `B·P⁺` and `S⁺·B⁻¹`.
    pub fn transformed(&self, b: &Matrix) -> Result<Decomposition> {
        let r = self.rank();
        if b.nrows() != r || b.ncols() != r {
            return Err(Error::Precondition(format!(
                "change of basis must be {r}x{r}"
            )));
        }
        let b_inv = b
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::PseudoInverse("change of basis is singular".into()))?;
        Ok(Decomposition {
            p: &self.p * &b_inv,
            s: b * &self.s,
            p_pinv: b * &self.p_pinv,
            s_pinv: &self.s_pinv * &b_inv,
        })
    }
}

/// Truncated SVD factorization: `P = U_r Σ_r`, `S = V_rᵀ`.
pub fn full_rank_decompose(h_theta: &Matrix, tol: f64) -> Result<Decomposition> {
    let dec = linalg::svd(h_theta);
    let thr = linalg::rank_threshold(&dec.sigma, tol);
    let r = dec.sigma.iter().filter(|&&s| s > thr).count();
    if r == 0 {
        return Err(Error::Degenerate);
    }
    let u = dec.u.columns(0, r).into_owned();
    let sigma = &dec.sigma[..r];
    let p = Matrix::from_fn(u.nrows(), r, |i, j| u[(i, j)] * sigma[j]);
    let s = dec.v_t.rows(0, r).into_owned();
    let p_pinv = Matrix::from_fn(r, u.nrows(), |i, j| u[(j, i)] / sigma[i]);
    let s_pinv = s.transpose();
    Ok(Decomposition {
        p,
        s,
        p_pinv,
        s_pinv,
    })
}

/// A natural decomposition and the change of basis that produced it.
#[derive(Clone, Debug)]
pub struct Naturalized {
    pub decomposition: Decomposition,
    /// Rows of the original `P` stacked top-down.
    pub b: Matrix,
    /// Indices of the `P` rows that make up `b`.
    pub rows: Vec<usize>,
}

/// Converts a full-rank decomposition into a natural one.
///
/// Rows of `P` are scanned top-down and kept when they raise the rank of the
/// kept set; row 0 (the empty prefix) is always kept first, so state 0 of
/// the result is the initial state. Entries within `tol` of 0 or 1 are
/// snapped; anything else is an error.
pub fn naturalize(d: &Decomposition, tol: f64) -> Result<Naturalized> {
    let r = d.rank();
    let p = &d.p;
    if p.nrows() == 0 {
        return Err(Error::NotNatural("P has no rows".into()));
    }
    let row0_norm = p.row(0).norm();
    if row0_norm <= linalg::TOL_RANK * max_abs(p).max(1.0) {
        return Err(Error::NotNatural(
            "the empty-prefix row of P is zero (the empty word was not recorded)".into(),
        ));
    }
    let mut rows = vec![0];
    let mut current = 1;
    for i in 1..p.nrows() {
        if rows.len() == r {
            break;
        }
        let mut cand = rows.clone();
        cand.push(i);
        let stacked = Matrix::from_fn(cand.len(), r, |a, b| p[(cand[a], b)]);
        let rank = numeric_rank(&stacked, linalg::TOL_RANK);
        if rank > current {
            current = rank;
            rows = cand;
        }
    }
    if rows.len() < r {
        return Err(Error::NotNatural(format!(
            "only {} independent rows of P for rank {r}",
            rows.len()
        )));
    }
    let b = Matrix::from_fn(r, r, |a, c| p[(rows[a], c)]);
    let moved = d.transformed(&b)?;

    let p_new = snap_binary(&moved.p, tol).ok_or_else(|| {
        Error::NotNatural(format!(
            "P·B⁻¹ has entries outside {{0, 1}} (tolerance {tol:e})"
        ))
    })?;
    for (i, row) in p_new.row_iter().enumerate() {
        if row_shape(row.iter().copied()) == RowShape::Other {
            return Err(Error::NotNatural(format!(
                "row {i} of P·B⁻¹ is neither a unit vector nor zero"
            )));
        }
    }
    let s_new = snap_binary(&moved.s, tol)
        .ok_or_else(|| Error::NotNatural(format!("B·S is not binary (tolerance {tol:e})")))?;
    Ok(Naturalized {
        decomposition: Decomposition {
            p: p_new,
            s: s_new,
            p_pinv: moved.p_pinv,
            s_pinv: moved.s_pinv,
        },
        b,
        rows,
    })
}

/// Matrix realization `f(χ₁…χₙ) = t0 · T_χ₁ ⋯ T_χₙ · t_inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionTuple {
    pub t0: DVector<f64>,
    pub t_inf: DVector<f64>,
    /// Letters in name order; `trans[k]` belongs to `alphabet[k]`.
    pub alphabet: Vec<Letter>,
    pub trans: Vec<Matrix>,
}

impl TransitionTuple {
    pub fn dim(&self) -> usize {
        self.t0.len()
    }

    pub fn matrix(&self, letter: Letter) -> Option<&Matrix> {
        self.alphabet
            .iter()
            .position(|&l| l == letter)
            .map(|k| &self.trans[k])
    }

    /// Entries snapped to {0, 1}, or `None` if some entry is not within `tol`.
    pub fn snapped(&self, tol: f64) -> Option<TransitionTuple> {
        let col = |v: &DVector<f64>| {
            snap_binary(&Matrix::from_column_slice(v.len(), 1, v.as_slice()), tol)
        };
        let t0 = col(&self.t0)?;
        let t_inf = col(&self.t_inf)?;
        let trans = self
            .trans
            .iter()
            .map(|m| snap_binary(m, tol))
            .collect::<Option<Vec<_>>>()?;
        Some(TransitionTuple {
            t0: DVector::from_column_slice(t0.as_slice()),
            t_inf: DVector::from_column_slice(t_inf.as_slice()),
            alphabet: self.alphabet.clone(),
            trans,
        })
    }

    /// Simultaneous change of state basis: `t0·B`, `B⁻¹·T·B`, `B⁻¹·t_inf`.
    pub fn conjugated(&self, b: &Matrix) -> Result<TransitionTuple> {
        let b_inv = b
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::PseudoInverse("singular basis change".into()))?;
        Ok(TransitionTuple {
            t0: (self.t0.transpose() * b).transpose(),
            t_inf: &b_inv * &self.t_inf,
            alphabet: self.alphabet.clone(),
            trans: self.trans.iter().map(|t| &b_inv * t * b).collect(),
        })
    }
}

/// `T_χ = P⁺ H_χ S⁺`, `t0 = P(0,:)`, `t_inf = S(:,0)`.
pub fn extract_tuple(hz: &HankelSet, d: &Decomposition) -> Result<TransitionTuple> {
    extract_tuple_with(hz, d, Exec::default())
}

pub fn extract_tuple_with(
    hz: &HankelSet,
    d: &Decomposition,
    exec: Exec,
) -> Result<TransitionTuple> {
    let (rows, cols) = hz.h_theta.shape();
    if d.p.nrows() != rows || d.s.ncols() != cols {
        return Err(Error::Precondition(format!(
            "decomposition is {}x{} but the Hankel matrices are {rows}x{cols}",
            d.p.nrows(),
            d.s.ncols()
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Precondition("empty mask".into()));
    }
    let trans = exec.map(&hz.h_chi, |h| d.p_pinv() * h * d.s_pinv());
    Ok(TransitionTuple {
        t0: d.p.row(0).transpose().into_owned(),
        t_inf: d.s.column(0).into_owned(),
        alphabet: hz.alphabet.clone(),
        trans,
    })
}

/// `t0` is a unit vector, every `T_χ` row is a unit vector or zero, and
/// `t_inf` is binary, after snapping within `tol`.
pub fn is_natural(t: &TransitionTuple, tol: f64) -> bool {
    let Some(s) = t.snapped(tol) else {
        return false;
    };
    matches!(row_shape(s.t0.iter().copied()), RowShape::Unit(_))
        && s.trans.iter().all(|m| {
            m.row_iter()
                .all(|row| row_shape(row.iter().copied()) != RowShape::Other)
        })
}

/// Reads the transducer graph off a natural tuple. The result is trimmed.
pub fn tuple_to_fst(t: &TransitionTuple) -> Result<Fst> {
    if !is_natural(t, linalg::TOL_BINARY) {
        return Err(Error::Precondition(
            "transition tuple is not natural".into(),
        ));
    }
    let s = t.snapped(linalg::TOL_BINARY).expect("checked natural");
    let RowShape::Unit(initial) = row_shape(s.t0.iter().copied()) else {
        unreachable!("checked natural")
    };
    let mut fst = Fst::new(s.dim(), initial);
    for (k, &x) in s.t_inf.iter().enumerate() {
        if x == 1.0 {
            fst.set_final(k);
        }
    }
    for (&letter, m) in s.alphabet.iter().zip(&s.trans) {
        for p in 0..m.nrows() {
            for q in 0..m.ncols() {
                if m[(p, q)] == 1.0 {
                    fst.add(p, letter, q);
                }
            }
        }
    }
    Ok(trim(&fst))
}

/// A natural tuple realizing `L(fst)`, built from its minimal deterministic
/// acceptor (state 0 initial).
pub fn natural_tuple_of(fst: &Fst) -> Result<TransitionTuple> {
    let m = minimize(fst)?;
    let n = m.num_states();
    let mut alphabet: Vec<Letter> = m.letters().into_iter().collect();
    sort_letters(&mut alphabet);
    let mut trans = vec![Matrix::zeros(n, n); alphabet.len()];
    for t in m.transitions() {
        let k = alphabet.iter().position(|&l| l == t.letter).unwrap();
        trans[k][(t.src, t.dst)] = 1.0;
    }
    let mut t0 = DVector::zeros(n);
    t0[m.initial()] = 1.0;
    let t_inf = DVector::from_fn(n, |i, _| m.is_final(i) as u8 as f64);
    Ok(TransitionTuple {
        t0,
        t_inf,
        alphabet,
        trans,
    })
}

/// `t0 · T_χ₁ ⋯ T_χₙ · t_inf`.
pub fn eval_tuple(t: &TransitionTuple, word: &[Letter]) -> Result<f64> {
    let mut row = t.t0.transpose();
    for &l in word {
        let m = t
            .matrix(l)
            .ok_or_else(|| Error::UnknownLetter(l.to_string()))?;
        row *= m;
    }
    Ok((row * &t.t_inf)[(0, 0)])
}

/// `pre(w) = t0 · T_w`.
pub fn pre(t: &TransitionTuple, word: &[Letter]) -> Result<DVector<f64>> {
    let mut row = t.t0.transpose();
    for &l in word {
        row *= t
            .matrix(l)
            .ok_or_else(|| Error::UnknownLetter(l.to_string()))?;
    }
    Ok(row.transpose())
}

/// `post(w) = T_w · t_inf`.
pub fn post(t: &TransitionTuple, word: &[Letter]) -> Result<DVector<f64>> {
    let mut col = t.t_inf.clone();
    for &l in word.iter().rev() {
        col = t
            .matrix(l)
            .ok_or_else(|| Error::UnknownLetter(l.to_string()))?
            * col;
    }
    Ok(col)
}

#[derive(Clone, Copy, Debug)]
pub struct LearnOptions {
    /// Longest candidate prefix/suffix; `None` uses
    /// [`hankel::default_mask_len`].
    pub max_mask_len: Option<usize>,
    pub tol_rank: f64,
    pub tol_binary: f64,
    pub exec: Exec,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions {
            max_mask_len: None,
            tol_rank: linalg::TOL_RANK,
            tol_binary: linalg::TOL_BINARY,
            exec: Exec::default(),
        }
    }
}

/// Everything computed by one learning run, filled in stage by stage.
#[derive(Clone, Debug, Default)]
pub struct Intermediates {
    pub mask: Option<Mask>,
    pub hankel: Option<HankelSet>,
    pub rank: Option<usize>,
    pub svd: Option<Decomposition>,
    pub natural: Option<Naturalized>,
    pub tuple: Option<TransitionTuple>,
    pub fst: Option<Fst>,
}

impl Intermediates {
    /// Writes every available matrix as a plain-text file under `dir`.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let put = |name: &str, m: &Matrix| std::fs::write(dir.join(name), linalg::format_matrix(m));
        if let Some(mask) = &self.mask {
            let mut text = String::new();
            for p in mask.prefixes() {
                writeln!(text, "prefix {p}").unwrap();
            }
            for s in mask.suffixes() {
                writeln!(text, "suffix {s}").unwrap();
            }
            std::fs::write(dir.join("mask.txt"), text)?;
        }
        if let Some(hz) = &self.hankel {
            put("h_theta.txt", &hz.h_theta)?;
            for (k, (l, h)) in hz.alphabet.iter().zip(&hz.h_chi).enumerate() {
                put(&format!("h_chi_{k}_{}.txt", file_token(*l)), h)?;
            }
        }
        if let Some(d) = &self.svd {
            put("p.txt", &d.p)?;
            put("s.txt", &d.s)?;
        }
        if let Some(n) = &self.natural {
            put("b.txt", &n.b)?;
            put("p_new.txt", &n.decomposition.p)?;
            put("s_new.txt", &n.decomposition.s)?;
        }
        if let Some(t) = &self.tuple {
            put(
                "t0.txt",
                &Matrix::from_row_slice(1, t.dim(), t.t0.as_slice()),
            )?;
            put(
                "t_inf.txt",
                &Matrix::from_column_slice(t.dim(), 1, t.t_inf.as_slice()),
            )?;
            for (k, (l, m)) in t.alphabet.iter().zip(&t.trans).enumerate() {
                put(&format!("t_{k}_{}.txt", file_token(*l)), m)?;
            }
        }
        if let Some(f) = &self.fst {
            std::fs::write(dir.join("learned.fst"), f.to_text())?;
        }
        Ok(())
    }
}

fn file_token(l: Letter) -> String {
    format!("{}_{}", l.input, l.output)
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                'x'
            }
        })
        .collect()
}

/// Learns a transducer from recorded words.
pub fn learn_fst(d: &SampleSet, opts: &LearnOptions) -> Result<Fst> {
    learn_traced(d, opts, &mut Intermediates::default())
}

/// Learns one model per dataset. `opts.exec` spreads the datasets over
/// threads; each learning run itself is then sequential.
pub fn learn_many(datasets: &[SampleSet], opts: &LearnOptions) -> Vec<Result<Fst>> {
    let inner = LearnOptions {
        exec: Exec::Sequential,
        ..*opts
    };
    opts.exec.map(datasets, |d| learn_fst(d, &inner))
}

/// [`learn_fst`] that records each intermediate into `trace` as it is
/// produced, so partial results survive a failure.
///
/// Stages: mask search, Hankel matrices plus closedness, SVD, change of
/// basis, tuple extraction plus naturality, graph reconstruction.
pub fn learn_traced(d: &SampleSet, opts: &LearnOptions, trace: &mut Intermediates) -> Result<Fst> {
    if d.is_empty() {
        return Err(Error::at(Stage::Basis)(Error::Precondition(
            "the sample set is empty".into(),
        )));
    }
    let max_len = opts
        .max_mask_len
        .unwrap_or_else(|| hankel::default_mask_len(d));
    let mask = hankel::find_basis_with_tol(d, max_len, opts.tol_rank);
    trace.mask = Some(mask.clone());

    let hz = hankel::build_hankel_set_with(d, &mask, opts.exec);
    trace.rank = Some(numeric_rank(&hz.h_theta, opts.tol_rank));
    trace.hankel = Some(hz.clone());
    if let Some((letter, residual)) = hankel::closedness_residuals(&hz)
        .into_iter()
        .find(|&(_, r)| r >= opts.tol_binary)
    {
        return Err(Error::at(Stage::Hankel)(Error::NotClosed {
            letter: letter.to_string(),
            residual,
        }));
    }

    let svd =
        full_rank_decompose(&hz.h_theta, opts.tol_rank).map_err(Error::at(Stage::Decompose))?;
    trace.svd = Some(svd.clone());

    let nat = naturalize(&svd, opts.tol_binary).map_err(Error::at(Stage::Naturalize))?;
    trace.natural = Some(nat.clone());

    let raw = extract_tuple_with(&hz, &nat.decomposition, opts.exec)
        .map_err(Error::at(Stage::Extract))?;
    let tuple = raw.snapped(opts.tol_binary).ok_or_else(|| {
        Error::at(Stage::Extract)(Error::NotNatural(
            "transition matrices have entries outside {0, 1}".into(),
        ))
    })?;
    trace.tuple = Some(tuple.clone());
    if !is_natural(&tuple, opts.tol_binary) {
        return Err(Error::at(Stage::Extract)(Error::NotNatural(
            "extracted transition tuple is not natural".into(),
        )));
    }

    let fst = tuple_to_fst(&tuple).map_err(Error::at(Stage::Reconstruct))?;
    trace.fst = Some(fst.clone());
    Ok(fst)
}

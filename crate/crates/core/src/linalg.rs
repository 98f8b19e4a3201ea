//! Small dense linear algebra on top of nalgebra.

use nalgebra::DMatrix;

pub type Matrix = DMatrix<f64>;

/// Default relative tolerance for numeric rank.
pub const TOL_RANK: f64 = 1e-9;
/// Default tolerance for snapping entries to {0, 1}.
pub const TOL_BINARY: f64 = 1e-6;

/// Thin SVD `m = u · diag(sigma) · v_t` with singular values descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v_t: Matrix,
}

pub fn svd(m: &Matrix) -> Svd {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Svd {
            u: Matrix::zeros(m.nrows(), 0),
            sigma: Vec::new(),
            v_t: Matrix::zeros(0, m.ncols()),
        };
    }
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("u requested");
    let v_t = dec.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    Svd {
        u: Matrix::from_fn(m.nrows(), k, |i, j| u[(i, order[j])]),
        sigma: order.iter().map(|&j| dec.singular_values[j]).collect(),
        v_t: Matrix::from_fn(k, m.ncols(), |i, j| v_t[(order[i], j)]),
    }
}

/// Threshold below which a singular value counts as zero.
pub fn rank_threshold(sigma: &[f64], tol: f64) -> f64 {
    let top = sigma.iter().copied().fold(0.0, f64::max);
    tol * top.max(1.0)
}

/// Number of singular values above `tol · max(σ_max, 1)`.
pub fn numeric_rank(m: &Matrix, tol: f64) -> usize {
    let s = svd(m).sigma;
    let thr = rank_threshold(&s, tol);
    s.iter().filter(|&&x| x > thr).count()
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Snaps entries within `tol` of 0 or 1; `None` if any entry is elsewhere.
pub fn snap_binary(m: &Matrix, tol: f64) -> Option<Matrix> {
    let mut out = m.clone();
    for x in out.iter_mut() {
        if x.abs() <= tol {
            *x = 0.0;
        } else if (*x - 1.0).abs() <= tol {
            *x = 1.0;
        } else {
            return None;
        }
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowShape {
    Zero,
    /// A single 1 at this index, zeros elsewhere.
    Unit(usize),
    Other,
}

/// Classifies an already snapped row.
pub fn row_shape(row: impl Iterator<Item = f64>) -> RowShape {
    let mut hit = None;
    for (j, x) in row.enumerate() {
        if x == 1.0 {
            if hit.is_some() {
                return RowShape::Other;
            }
            hit = Some(j);
        } else if x != 0.0 {
            return RowShape::Other;
        }
    }
    hit.map_or(RowShape::Zero, RowShape::Unit)
}

/// Renders a matrix as whitespace-separated rows. Integral values print
/// without a fraction.
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_entry(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_entry(x: f64) -> String {
    if x.abs() < 1e-12 {
        "0".to_owned()
    } else if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.9}")
    }
}

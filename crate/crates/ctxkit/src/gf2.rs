//! Bit-packed linear algebra over GF(2).
//!
//! Coboundary systems are sparse but wide, so vectors pack 64 coordinates
//! per limb and elimination works limb-wise. All routines are deterministic:
//! elimination always pivots on the lowest-index available column, so equal
//! inputs produce identical echelon forms, solutions, and kernel bases.

use std::fmt;

/// A dense vector over GF(2).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gf2Vector {
    limbs: Vec<u64>,
    len: usize,
}

impl Gf2Vector {
    /// The zero vector of a given length.
    pub fn zero(len: usize) -> Gf2Vector {
        Gf2Vector {
            limbs: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// A vector with ones exactly at the given coordinates.
    pub fn from_indices(len: usize, ones: &[usize]) -> Gf2Vector {
        let mut v = Gf2Vector::zero(len);
        for &i in ones {
            v.set(i, true);
        }
        v
    }

    /// Number of coordinates.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Whether the vector has zero length.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The coordinate at `i`.
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.limbs[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Sets the coordinate at `i`.
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.limbs[i / 64] |= mask;
        } else {
            self.limbs[i / 64] &= !mask;
        }
    }

    /// Adds (XORs) another vector of the same length into this one.
    pub fn xor_assign(&mut self, other: &Gf2Vector) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            *a ^= b;
        }
    }

    /// Whether all coordinates are zero.
    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    /// The lowest index with a one, if any.
    pub fn first_one(&self) -> Option<usize> {
        for (w, &limb) in self.limbs.iter().enumerate() {
            if limb != 0 {
                return Some(w * 64 + limb.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Number of ones.
    pub fn count_ones(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    /// Indices of all ones, ascending.
    pub fn ones(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_ones());
        for (w, &limb) in self.limbs.iter().enumerate() {
            let mut rest = limb;
            while rest != 0 {
                out.push(w * 64 + rest.trailing_zeros() as usize);
                rest &= rest - 1;
            }
        }
        out
    }

    /// Dot product over GF(2).
    pub fn dot(&self, other: &Gf2Vector) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.limbs
            .iter()
            .zip(&other.limbs)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }
}

impl fmt::Display for Gf2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

/// An affine system over GF(2): XOR equations plus pinned variables.
///
/// Pins are single-variable assignments kept separate from the general rows
/// so callers can state "this coordinate is forced" without building a row;
/// solving treats them as unit rows.
#[derive(Debug, Clone, Default)]
pub struct Gf2System {
    n_vars: usize,
    rows: Vec<(Gf2Vector, bool)>,
    pins: Vec<(usize, bool)>,
}

impl Gf2System {
    /// An empty system over `n_vars` variables.
    pub fn new(n_vars: usize) -> Gf2System {
        Gf2System {
            n_vars,
            rows: Vec::new(),
            pins: Vec::new(),
        }
    }

    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Number of general rows (pins not included).
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// The general rows.
    pub fn rows(&self) -> &[(Gf2Vector, bool)] {
        &self.rows
    }

    /// Adds the equation `sum of the variables at ones = rhs`.
    pub fn add_row(&mut self, ones: &[usize], rhs: bool) {
        self.rows
            .push((Gf2Vector::from_indices(self.n_vars, ones), rhs));
    }

    /// Adds an already-built row.
    pub fn add_row_vector(&mut self, coeffs: Gf2Vector, rhs: bool) {
        debug_assert_eq!(coeffs.len(), self.n_vars);
        self.rows.push((coeffs, rhs));
    }

    /// Pins a single variable to a value.
    pub fn pin(&mut self, var: usize, value: bool) {
        debug_assert!(var < self.n_vars);
        self.pins.push((var, value));
    }

    /// Whether an assignment satisfies every row and pin.
    pub fn satisfied_by(&self, x: &Gf2Vector) -> bool {
        self.rows.iter().all(|(row, rhs)| row.dot(x) == *rhs)
            && self.pins.iter().all(|&(v, val)| x.get(v) == val)
    }
}

/// Row-reduced form of a list of (coefficients, rhs) rows.
struct Echelon {
    rows: Vec<(Gf2Vector, bool)>,
    /// Pivot column of each reduced row, strictly increasing.
    pivots: Vec<usize>,
}

/// Reduces rows to reduced row echelon form, always choosing the lowest
/// available pivot column and the earliest row holding it.
///
/// Returned rows list the pivot rows first (aligned with `pivots`), followed
/// by any inconsistent `0 = 1` remainders; consistent zero rows are dropped.
fn echelon(mut rows: Vec<(Gf2Vector, bool)>) -> Echelon {
    let mut pivots = Vec::new();
    let mut next = 0;
    while next < rows.len() {
        let candidate = rows[next..]
            .iter()
            .enumerate()
            .filter_map(|(i, (r, _))| r.first_one().map(|p| (p, i + next)))
            .min();
        let Some((pivot, row_idx)) = candidate else {
            break;
        };
        rows.swap(next, row_idx);
        let pivot_row = rows[next].clone();
        for (i, other) in rows.iter_mut().enumerate() {
            if i != next && other.0.get(pivot) {
                other.0.xor_assign(&pivot_row.0);
                other.1 ^= pivot_row.1;
            }
        }
        pivots.push(pivot);
        next += 1;
    }
    Echelon {
        rows: rows
            .into_iter()
            .filter(|(r, b)| !r.is_zero() || *b)
            .collect(),
        pivots,
    }
}

/// Solves the system. Returns the unique deterministic solution with every
/// free variable set to zero, or `None` when the system is inconsistent.
pub fn gf2_solve(system: &Gf2System) -> Option<Gf2Vector> {
    let mut rows = system.rows.clone();
    for &(var, value) in &system.pins {
        rows.push((Gf2Vector::from_indices(system.n_vars, &[var]), value));
    }
    if rows.is_empty() {
        return Some(Gf2Vector::zero(system.n_vars));
    }
    let reduced = echelon(rows);
    // Inconsistency shows up as a reduced row 0 = 1.
    for (row, rhs) in &reduced.rows {
        if row.is_zero() && *rhs {
            return None;
        }
    }
    let mut x = Gf2Vector::zero(system.n_vars);
    for (i, &pivot) in reduced.pivots.iter().enumerate() {
        // Free variables are zero, so the pivot value is the reduced rhs.
        x.set(pivot, reduced.rows[i].1);
    }
    debug_assert!(system.satisfied_by(&x));
    Some(x)
}

/// Rank of a homogeneous coefficient matrix.
pub fn gf2_rank(rows: &[Gf2Vector]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    echelon(rows.iter().map(|r| (r.clone(), false)).collect())
        .pivots
        .len()
}

/// A basis of the kernel of a homogeneous coefficient matrix over `n_vars`
/// variables, ordered by ascending free column. Each basis vector has a one
/// at its free column and zeros at all other free columns.
pub fn gf2_kernel_basis(rows: &[Gf2Vector], n_vars: usize) -> Vec<Gf2Vector> {
    let reduced = echelon(rows.iter().map(|r| (r.clone(), false)).collect());
    let mut is_pivot = vec![false; n_vars];
    for &p in &reduced.pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::with_capacity(n_vars - reduced.pivots.len());
    for free in (0..n_vars).filter(|&c| !is_pivot[c]) {
        let mut v = Gf2Vector::zero(n_vars);
        v.set(free, true);
        for (i, &pivot) in reduced.pivots.iter().enumerate() {
            if reduced.rows[i].0.get(free) {
                v.set(pivot, true);
            }
        }
        debug_assert!(rows.iter().all(|row| !row.dot(&v)));
        basis.push(v);
    }
    basis
}

//! Exact rank and certified independence of sequence heads.
//!
//! The subspace construction needs a finite prefix of coordinates on which a
//! given family of sequences is linearly independent. For rational data the
//! question is decidable and [`exact_rank`] answers it by fraction-preserving
//! elimination. For symbolic coordinates (which are typically irrational) the
//! best an algorithm can do is certify independence from interval enclosures:
//! [`certified_independent`] reports `Independent` only when the enclosure of
//! some maximal minor excludes zero, and *never* certifies dependence — an
//! interval straddling zero stays `Inconclusive` no matter how narrow it gets.
//! [`find_n0`] searches for the smallest certified prefix length and returns a
//! budget error, not a dependence claim, when nothing certifies.

use crate::numerics::{IntervalEnclosure, Rational};
use crate::sequences::{Coordinate, SymbolicSequence};
use crate::{Error, Result};

/// Desk-scale guard: minors are expanded by cofactors, so the row count of a
/// certified matrix is kept small enough for that to stay cheap.
const MAX_CERTIFIED_ROWS: usize = 8;

/// Starting enclosure half-width for the certification sweep, `2^-8`.
const START_EPS_BITS: u32 = 8;

/// Default floor for the halving precision schedule, `2^-64`.
const DEFAULT_EPS_FLOOR_BITS: u32 = 64;

/// Upper bound on how many column subsets the exhaustive fallback scan may
/// visit in one precision round.
const SUBSET_SCAN_CAP: u64 = 2048;

/// Exact rank of a rational matrix via fraction-preserving Gaussian
/// elimination.
///
/// Rows may have different lengths; short rows are treated as zero-extended.
pub fn exact_rank(rows: &[Vec<Rational>]) -> usize {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut work: Vec<Vec<Rational>> = rows
        .iter()
        .map(|row| {
            let mut padded = row.clone();
            padded.resize(width, Rational::zero());
            padded
        })
        .collect();
    let mut rank = 0;
    for col in 0..width {
        let Some(pivot_row) = (rank..work.len()).find(|&r| !work[r][col].is_zero()) else {
            continue;
        };
        work.swap(rank, pivot_row);
        let pivot = work[rank][col].clone();
        for r in rank + 1..work.len() {
            if work[r][col].is_zero() {
                continue;
            }
            let factor = &work[r][col] / &pivot;
            for c in col..width {
                let delta = &factor * &work[rank][c];
                work[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == work.len() {
            break;
        }
    }
    rank
}

/// A finite matrix of head coordinates: one row per sequence, one column per
/// coordinate index, entries exact rationals or symbolic values that evaluate
/// to enclosures on demand.
#[derive(Clone, Debug)]
pub struct HeadMatrix {
    rows: Vec<Vec<Coordinate>>,
    column_labels: Vec<u64>,
}

impl HeadMatrix {
    /// Head coordinates `1..=columns` of the given sequences, one row each.
    pub fn from_sequences(seqs: &[SymbolicSequence], columns: u64) -> Result<Self> {
        let mut rows = Vec::with_capacity(seqs.len());
        for seq in seqs {
            let row = (1..=columns)
                .map(|j| seq.coordinate(j))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self {
            rows,
            column_labels: (1..=columns).collect(),
        })
    }

    /// A matrix assembled from precomputed coordinates with explicit column
    /// labels (used when the probed columns are not a contiguous prefix).
    /// Every row must have exactly one entry per label.
    pub fn from_coordinate_rows(rows: Vec<Vec<Coordinate>>, column_labels: Vec<u64>) -> Result<Self> {
        if rows.iter().any(|row| row.len() != column_labels.len()) {
            return Err(Error::Precondition(format!(
                "every row must supply {} entries, one per column label",
                column_labels.len()
            )));
        }
        Ok(Self { rows, column_labels })
    }

    /// A matrix of plain rationals; rows are zero-extended to equal width and
    /// columns are labelled `1..=width`.
    pub fn from_rational_rows(rows: &[Vec<Rational>]) -> Self {
        let width = rows.iter().map(Vec::len).max().unwrap_or(0);
        let rows = rows
            .iter()
            .map(|row| {
                (0..width)
                    .map(|c| {
                        Coordinate::from_rational(
                            row.get(c).cloned().unwrap_or_else(Rational::zero),
                        )
                    })
                    .collect()
            })
            .collect();
        Self {
            rows,
            column_labels: (1..=width as u64).collect(),
        }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.column_labels.len()
    }

    /// Coordinate indices the columns were drawn from.
    pub fn column_labels(&self) -> &[u64] {
        &self.column_labels
    }

    pub fn entry(&self, row: usize, col: usize) -> &Coordinate {
        &self.rows[row][col]
    }

    /// Entries as exact rationals, if every coordinate is exact.
    fn exact_rows(&self) -> Option<Vec<Vec<Rational>>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(Coordinate::exact).collect())
            .collect()
    }

    /// Enclosures of all entries at half-width `eps` (exact entries stay
    /// points).
    fn enclosure_grid(&self, eps: &Rational) -> Vec<Vec<IntervalEnclosure>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c.exact() {
                        Some(v) => IntervalEnclosure::point(v),
                        None => c.enclose(eps),
                    })
                    .collect()
            })
            .collect()
    }
}

/// Evidence that the rows of a [`HeadMatrix`] are linearly independent: a
/// maximal minor whose enclosure excludes zero.
#[derive(Clone, Debug)]
pub struct IndependenceWitness {
    /// Column labels (coordinate indices) of the certified minor, ascending.
    pub columns: Vec<u64>,
    /// Enclosure of the minor's determinant; excludes zero by construction.
    pub minor: IntervalEnclosure,
    /// Enclosure half-width at which certification succeeded; exactly zero
    /// when every entry was exact and no interval evaluation was needed.
    pub eps: Rational,
}

/// Outcome of a certification attempt. Dependence is never reported: an
/// enclosure straddling zero is compatible with both answers, so the negative
/// branch stays `Inconclusive`.
#[derive(Clone, Debug)]
pub enum Independence {
    Independent(IndependenceWitness),
    Inconclusive {
        /// Finest enclosure half-width the schedule reached before giving up.
        eps_reached: Rational,
    },
}

impl Independence {
    pub fn is_independent(&self) -> bool {
        matches!(self, Independence::Independent(_))
    }
}

/// Certify that the rows of `matrix` are linearly independent.
///
/// Starts from an enclosure half-width of `2^-8` and halves it every time no
/// maximal minor can be bounded away from zero, stopping at `eps_floor`.
/// Exact rational matrices are decided directly without the interval sweep.
pub fn certified_independent(matrix: &HeadMatrix, eps_floor: &Rational) -> Result<Independence> {
    let n = matrix.row_count();
    let m = matrix.column_count();
    if n > m {
        return Err(Error::Precondition(format!(
            "independence needs at least as many columns as rows; got {n} rows, {m} columns"
        )));
    }
    if n > MAX_CERTIFIED_ROWS {
        return Err(Error::Precondition(format!(
            "certified independence is limited to {MAX_CERTIFIED_ROWS} rows; got {n}"
        )));
    }
    if !eps_floor.is_positive() {
        return Err(Error::Precondition(
            "the precision floor must be positive".into(),
        ));
    }
    if n == 0 {
        // The empty family is independent; its maximal minor is the empty
        // determinant, exactly one.
        return Ok(Independence::Independent(IndependenceWitness {
            columns: Vec::new(),
            minor: IntervalEnclosure::point(Rational::one()),
            eps: Rational::zero(),
        }));
    }

    if let Some(rows) = matrix.exact_rows() {
        return Ok(exact_independence(&rows, matrix.column_labels(), eps_floor));
    }

    let half = Rational::new(1, 2);
    let mut eps = Rational::pow2_neg(START_EPS_BITS);
    if eps < *eps_floor {
        eps = eps_floor.clone();
    }
    loop {
        let grid = matrix.enclosure_grid(&eps);
        if let Some((cols, minor)) = certified_minor(&grid, n, m) {
            let columns = cols.iter().map(|&c| matrix.column_labels[c]).collect();
            return Ok(Independence::Independent(IndependenceWitness {
                columns,
                minor,
                eps,
            }));
        }
        if eps <= *eps_floor {
            return Ok(Independence::Inconclusive { eps_reached: eps });
        }
        eps = Rational::max2(&(&eps * &half), eps_floor);
    }
}

/// Smallest prefix length `m` such that the first `m` coordinates of `seqs`
/// are certified linearly independent, scanning `m` up to `max_columns`.
///
/// The caller asserts independence of the full sequences; a family that never
/// certifies (because it is dependent, or because the precision floor is too
/// coarse) yields [`Error::BudgetExceeded`], never a dependence claim.
pub fn find_n0(seqs: &[SymbolicSequence], max_columns: u64) -> Result<u64> {
    find_n0_with(seqs, max_columns, &Rational::pow2_neg(DEFAULT_EPS_FLOOR_BITS))
}

/// [`find_n0`] with an explicit precision floor for the per-prefix
/// certification sweep.
pub fn find_n0_with(
    seqs: &[SymbolicSequence],
    max_columns: u64,
    eps_floor: &Rational,
) -> Result<u64> {
    let n = seqs.len() as u64;
    if n == 0 {
        return Ok(0);
    }
    for m in n..=max_columns.max(0) {
        let matrix = HeadMatrix::from_sequences(seqs, m)?;
        if certified_independent(&matrix, eps_floor)?.is_independent() {
            return Ok(m);
        }
    }
    Err(Error::BudgetExceeded {
        context: format!(
            "no head prefix of length at most {max_columns} certified {n} sequences independent"
        ),
    })
}

/// Decide the exact-rational case directly: full row rank yields the pivot
/// columns of an elimination together with the exact minor determinant;
/// anything less is `Inconclusive` (the zero determinant is a point enclosure
/// containing zero, and no precision refinement can open it up).
fn exact_independence(rows: &[Vec<Rational>], labels: &[u64], eps_floor: &Rational) -> Independence {
    let n = rows.len();
    let width = labels.len();
    let mut work = rows.to_vec();
    let mut pivot_cols = Vec::with_capacity(n);
    let mut placed = 0usize;
    for col in 0..width {
        let Some(pivot_row) = (placed..n).find(|&r| !work[r][col].is_zero()) else {
            continue;
        };
        work.swap(placed, pivot_row);
        pivot_cols.push(col);
        let pivot = work[placed][col].clone();
        for r in placed + 1..n {
            if work[r][col].is_zero() {
                continue;
            }
            let factor = &work[r][col] / &pivot;
            for c in col..width {
                let delta = &factor * &work[placed][c];
                work[r][c] -= delta;
            }
        }
        placed += 1;
        if placed == n {
            break;
        }
    }
    if placed < n {
        return Independence::Inconclusive {
            eps_reached: eps_floor.clone(),
        };
    }
    let sub: Vec<Vec<Rational>> = rows
        .iter()
        .map(|row| pivot_cols.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let det = exact_det(&sub);
    Independence::Independent(IndependenceWitness {
        columns: pivot_cols.iter().map(|&c| labels[c]).collect(),
        minor: IntervalEnclosure::point(det),
        eps: Rational::zero(),
    })
}

/// Exact determinant of a square rational matrix by elimination.
fn exact_det(rows: &[Vec<Rational>]) -> Rational {
    let n = rows.len();
    let mut work = rows.to_vec();
    let mut det = Rational::one();
    let mut negate = false;
    for col in 0..n {
        let Some(pivot_row) = (col..n).find(|&r| !work[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot_row != col {
            work.swap(col, pivot_row);
            negate = !negate;
        }
        let pivot = work[col][col].clone();
        det = det * &pivot;
        for r in col + 1..n {
            if work[r][col].is_zero() {
                continue;
            }
            let factor = &work[r][col] / &pivot;
            for c in col..n {
                let delta = &factor * &work[col][c];
                work[r][c] -= delta;
            }
        }
    }
    if negate {
        -det
    } else {
        det
    }
}

/// One precision round: try to find a maximal minor whose determinant
/// enclosure excludes zero. A pivoted elimination pass proposes a column
/// subset cheaply; if that fails and the subset space is small, every subset
/// is scanned.
fn certified_minor(
    grid: &[Vec<IntervalEnclosure>],
    n: usize,
    m: usize,
) -> Option<(Vec<usize>, IntervalEnclosure)> {
    if let Some(cols) = certified_pivot_columns(grid, n, m) {
        let minor = det_enclosure(&select_columns(grid, &cols));
        if minor.excludes_zero() {
            return Some((cols, minor));
        }
    }
    if subset_count_within(m, n, SUBSET_SCAN_CAP) {
        let mut combo: Vec<usize> = (0..n).collect();
        loop {
            let minor = det_enclosure(&select_columns(grid, &combo));
            if minor.excludes_zero() {
                return Some((combo, minor));
            }
            if !advance_combination(&mut combo, m) {
                break;
            }
        }
    }
    None
}

/// Division-free full-pivot elimination over interval entries. Every
/// intermediate value encloses the corresponding cross-multiplication value
/// of each point matrix inside the input box, and that value factors as a
/// minor of the point matrix times earlier pivots; so if every stage finds a
/// pivot excluding zero, the maximal minor on the chosen columns is nonzero
/// for every point matrix — in particular for the true one.
fn certified_pivot_columns(
    grid: &[Vec<IntervalEnclosure>],
    n: usize,
    m: usize,
) -> Option<Vec<usize>> {
    let mut work = grid.to_vec();
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    let mut chosen = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(usize, usize, Rational)> = None;
        for r in (0..n).filter(|&r| !row_used[r]) {
            for c in (0..m).filter(|&c| !col_used[c]) {
                let entry = &work[r][c];
                if !entry.excludes_zero() {
                    continue;
                }
                let mig = Rational::min2(&entry.lo().abs(), &entry.hi().abs());
                if best.as_ref().map_or(true, |(_, _, b)| mig > *b) {
                    best = Some((r, c, mig));
                }
            }
        }
        let (pr, pc, _) = best?;
        row_used[pr] = true;
        col_used[pc] = true;
        chosen.push(pc);
        let pivot = work[pr][pc].clone();
        for r in (0..n).filter(|&r| !row_used[r]) {
            let lead = work[r][pc].clone();
            for c in (0..m).filter(|&c| !col_used[c]) {
                work[r][c] = pivot.mul(&work[r][c]).sub(&lead.mul(&work[pr][c]));
            }
        }
    }
    chosen.sort_unstable();
    Some(chosen)
}

/// Determinant enclosure by cofactor expansion along the first row.
fn det_enclosure(rows: &[Vec<IntervalEnclosure>]) -> IntervalEnclosure {
    match rows.len() {
        0 => IntervalEnclosure::point(Rational::one()),
        1 => rows[0][0].clone(),
        _ => {
            let mut acc = IntervalEnclosure::zero();
            for (j, top) in rows[0].iter().enumerate() {
                if top.lo().is_zero() && top.hi().is_zero() {
                    continue;
                }
                let minor: Vec<Vec<IntervalEnclosure>> = rows[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = top.mul(&det_enclosure(&minor));
                acc = if j % 2 == 0 {
                    acc.add(&term)
                } else {
                    acc.sub(&term)
                };
            }
            acc
        }
    }
}

fn select_columns(grid: &[Vec<IntervalEnclosure>], cols: &[usize]) -> Vec<Vec<IntervalEnclosure>> {
    grid.iter()
        .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
        .collect()
}

/// Advance `combo` (strictly increasing indices below `m`) to the next
/// combination in lexicographic order; false when exhausted.
fn advance_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < m - (k - i) {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Whether `C(m, n)` is at most `cap`, computed without overflow.
fn subset_count_within(m: usize, n: usize, cap: u64) -> bool {
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc * (m - i) as u128 / (i as u128 + 1);
        if acc > u128::from(cap) {
            return false;
        }
    }
    true
}

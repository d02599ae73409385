//! Two-phase dense simplex with Bland's anti-cycling rule.
//!
//! Instances here come from controller freezes and constraint-qualification
//! screens, so they are tiny (tens of variables at most). A plain tableau
//! with lowest-index pivoting is deterministic and cannot cycle.

use crate::linalg::Mat;
use crate::scalar::{dot, norm_inf, Real};

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Optimal point in the original (free) variables; zeros unless optimal.
    pub optimum: Vec<T>,
    pub value: T,
}

/// Solve
///
/// ```text
///     min/max  objective^T x
///     s.t.     a_eq x = b_eq,   a_ineq x >= b_ineq
/// ```
///
/// over free variables `x`. Free variables are split into nonnegative pairs
/// and inequality rows get surplus variables, giving the standard form that
/// the tableau works on.
pub fn solve_lp<T: Real>(
    a_eq: &Mat<T>,
    b_eq: &[T],
    a_ineq: &Mat<T>,
    b_ineq: &[T],
    objective: &[T],
    sense: LpSense,
) -> Result<LpSolution<T>, SolverError> {
    let n = objective.len();
    if a_eq.rows != b_eq.len() || a_ineq.rows != b_ineq.len() {
        return Err(SolverError::Dimension(
            "constraint matrix/rhs row mismatch".into(),
        ));
    }
    if (a_eq.rows > 0 && a_eq.cols != n) || (a_ineq.rows > 0 && a_ineq.cols != n) {
        return Err(SolverError::Dimension(
            "constraint matrix column count != objective length".into(),
        ));
    }

    let rows = a_eq.rows + a_ineq.rows;
    let cols = 2 * n + a_ineq.rows; // x+ , x- , surplus
    let mut min_obj: Vec<T> = vec![T::zero(); cols];
    for j in 0..n {
        let cj = match sense {
            LpSense::Minimize => objective[j],
            LpSense::Maximize => -objective[j],
        };
        min_obj[j] = cj;
        min_obj[n + j] = -cj;
    }

    if rows == 0 {
        // no constraints: bounded iff the objective is identically zero
        if min_obj.iter().all(|&c| c == T::zero()) {
            return Ok(LpSolution {
                status: LpStatus::Optimal,
                optimum: vec![T::zero(); n],
                value: T::zero(),
            });
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            optimum: vec![T::zero(); n],
            value: T::zero(),
        });
    }

    let mut e = Mat::zeros(rows, cols);
    let mut d = vec![T::zero(); rows];
    for i in 0..a_eq.rows {
        for j in 0..n {
            e[(i, j)] = a_eq[(i, j)];
            e[(i, n + j)] = -a_eq[(i, j)];
        }
        d[i] = b_eq[i];
    }
    for i in 0..a_ineq.rows {
        let r = a_eq.rows + i;
        for j in 0..n {
            e[(r, j)] = a_ineq[(i, j)];
            e[(r, n + j)] = -a_ineq[(i, j)];
        }
        e[(r, 2 * n + i)] = -T::one();
        d[r] = b_ineq[i];
    }
    // nonnegative right-hand side
    for i in 0..rows {
        if d[i] < T::zero() {
            d[i] = -d[i];
            for j in 0..cols {
                e[(i, j)] = -e[(i, j)];
            }
        }
    }

    let scale = e.max_abs().max(norm_inf(&d)).max(T::one());
    let pivot_tol = scale * T::of(1e-13);
    let feas_tol = (T::one() + norm_inf(&d)) * T::of(1e-9);

    let mut tab = Tableau::phase_one(&e, &d);
    tab.run(pivot_tol);
    if tab.objective_value() > feas_tol {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            optimum: vec![T::zero(); n],
            value: T::zero(),
        });
    }
    if !tab.to_phase_two(&min_obj, pivot_tol) {
        // all rows ended up redundant; treat as unconstrained over z >= 0
        let bounded = min_obj.iter().all(|&c| c >= -pivot_tol);
        if !bounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                optimum: vec![T::zero(); n],
                value: T::zero(),
            });
        }
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            optimum: vec![T::zero(); n],
            value: T::zero(),
        });
    }
    match tab.run(pivot_tol) {
        RunOutcome::Optimal => {
            let z = tab.primal_point();
            let x: Vec<T> = (0..n).map(|j| z[j] - z[n + j]).collect();
            let mut value = dot(objective, &x);
            // kill negative zeros for byte-stable output downstream
            if value == T::zero() {
                value = T::zero();
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                optimum: x,
                value,
            })
        }
        RunOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            optimum: vec![T::zero(); n],
            value: T::zero(),
        }),
    }
}

enum RunOutcome {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    rows: usize,
    structural: usize, // structural (non-artificial) column count
    artificial: usize,
    t: Mat<T>, // rows+1 x cols+1; last row = reduced costs, last col = rhs
    basis: Vec<usize>,
}

impl<T: Real> Tableau<T> {
    fn phase_one(e: &Mat<T>, d: &[T]) -> Self {
        let rows = e.rows;
        let structural = e.cols;
        let cols = structural + rows;
        let mut t = Mat::zeros(rows + 1, cols + 1);
        for i in 0..rows {
            for j in 0..structural {
                t[(i, j)] = e[(i, j)];
            }
            t[(i, structural + i)] = T::one();
            t[(i, cols)] = d[i];
        }
        // phase-1 reduced costs: minimize sum of artificials
        for j in 0..structural {
            let mut s = T::zero();
            for i in 0..rows {
                s += t[(i, j)];
            }
            t[(rows, j)] = -s;
        }
        let mut rhs = T::zero();
        for i in 0..rows {
            rhs += t[(i, cols)];
        }
        t[(rows, cols)] = -rhs;
        let basis = (structural..cols).collect();
        Tableau {
            rows,
            structural,
            artificial: rows,
            t,
            basis,
        }
    }

    fn cols(&self) -> usize {
        self.structural + self.artificial
    }

    fn objective_value(&self) -> T {
        -self.t[(self.rows, self.cols())]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let cols = self.cols();
        let piv = self.t[(row, col)];
        for j in 0..=cols {
            self.t[(row, j)] /= piv;
        }
        for i in 0..=self.rows {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f == T::zero() {
                continue;
            }
            for j in 0..=cols {
                let v = self.t[(row, j)];
                self.t[(i, j)] -= f * v;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: entering variable is the lowest-index column with a
    /// negative reduced cost; the leaving row breaks ratio ties by the
    /// lowest basic variable index.
    fn run(&mut self, pivot_tol: T) -> RunOutcome {
        let cols = self.cols();
        for _ in 0..20_000 {
            let mut entering = None;
            for j in 0..cols {
                if self.t[(self.rows, j)] < -pivot_tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return RunOutcome::Optimal;
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows {
                let a = self.t[(i, col)];
                if a > pivot_tol {
                    let ratio = self.t[(i, cols)] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - pivot_tol
                                || (ratio <= lr + pivot_tol && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return RunOutcome::Unbounded;
            };
            self.pivot(row, col);
        }
        // unreachable with Bland's rule on these problem sizes
        RunOutcome::Optimal
    }

    /// Swap in the phase-2 objective. Drives artificials out of the basis,
    /// dropping redundant rows. Returns false if no rows remain.
    fn to_phase_two(&mut self, min_obj: &[T], pivot_tol: T) -> bool {
        let cols = self.cols();
        // pivot basic artificials out where possible
        let mut drop_rows = Vec::new();
        for i in 0..self.rows {
            if self.basis[i] >= self.structural {
                let mut found = None;
                for j in 0..self.structural {
                    if self.t[(i, j)].abs() > pivot_tol {
                        found = Some(j);
                        break;
                    }
                }
                match found {
                    Some(j) => self.pivot(i, j),
                    None => drop_rows.push(i),
                }
            }
        }
        if !drop_rows.is_empty() {
            let keep: Vec<usize> = (0..self.rows).filter(|i| !drop_rows.contains(i)).collect();
            let mut nt = Mat::zeros(keep.len() + 1, cols + 1);
            for (ni, &oi) in keep.iter().enumerate() {
                for j in 0..=cols {
                    nt[(ni, j)] = self.t[(oi, j)];
                }
            }
            self.basis = keep.iter().map(|&i| self.basis[i]).collect();
            self.rows = keep.len();
            self.t = nt;
        }
        if self.rows == 0 {
            return false;
        }
        // rebuild reduced costs for the real objective; artificial columns
        // are fenced off with a prohibitive cost so they never re-enter
        let rows = self.rows;
        let big = T::of(1e30);
        for j in 0..cols {
            let cj = if j < self.structural { min_obj[j] } else { big };
            let mut r = cj;
            for i in 0..rows {
                let cb = if self.basis[i] < self.structural {
                    min_obj[self.basis[i]]
                } else {
                    big
                };
                r -= cb * self.t[(i, j)];
            }
            self.t[(rows, j)] = r;
        }
        let mut v = T::zero();
        for i in 0..rows {
            let cb = if self.basis[i] < self.structural {
                min_obj[self.basis[i]]
            } else {
                big
            };
            v += cb * self.t[(i, cols)];
        }
        self.t[(rows, cols)] = -v;
        true
    }

    fn primal_point(&self) -> Vec<T> {
        let cols = self.cols();
        let mut z = vec![T::zero(); cols];
        for (i, &bi) in self.basis.iter().enumerate() {
            z[bi] = self.t[(i, cols)];
        }
        z
    }
}

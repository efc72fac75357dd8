//! Bounded-variable primal simplex on a dense tableau.
//!
//! Rows are brought to the form `a_i x + s_i = b_i` with one slack per row
//! whose bounds encode the row sense. Rows whose initial residual falls
//! outside the slack range get an artificial column; phase one minimizes the
//! sum of artificials, phase two the model objective. When phase one ends
//! with a positive sum, the phase-one duals give a Farkas certificate whose
//! support is an infeasible subsystem; the IIS filter starts from it.

use serde::{Deserialize, Serialize};

use super::model::Sense;
use crate::scalar::Scalar;

/// Entering-variable rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PivotRule {
    /// Smallest eligible index, both for entering and for ratio-test ties.
    Bland,
    /// Most negative reduced cost; falls back to Bland after a run of
    /// degenerate pivots and returns to Dantzig after the next improving one.
    DantzigBlandFallback,
}

/// Row-major sparse LP in the shape the tableau consumes.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm<S> {
    pub n_struct: usize,
    pub rows: Vec<Vec<(usize, S)>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<S>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub cost: Vec<S>,
}

impl<S: Scalar> StandardForm<S> {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances<S> {
    pub feas: S,
    pub opt: S,
    pub pivot: S,
    pub max_iterations: usize,
    pub rule: PivotRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
    FreeZero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SimplexError {
    IterationLimit(usize),
}

/// Support of a phase-one Farkas certificate, in standard-form indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct FarkasSupport {
    pub rows: Vec<usize>,
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) enum RawOutcome<S> {
    Optimal { x: Vec<S>, objective: S },
    Infeasible,
    Unbounded,
}

enum RunEnd {
    Optimal,
    Unbounded,
}

const DEGENERATE_SWITCH: usize = 50;

struct Tableau<'a, S> {
    sf: &'a StandardForm<S>,
    tol: Tolerances<S>,
    m: usize,
    ncols: usize,
    width: usize,
    a: Vec<S>,
    d: Vec<S>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    x: Vec<S>,
    lo: Vec<S>,
    up: Vec<S>,
    art_start: usize,
    iterations: usize,
}

impl<'a, S: Scalar> Tableau<'a, S> {
    fn new(sf: &'a StandardForm<S>, tol: Tolerances<S>) -> Self {
        let n = sf.n_struct;
        let m = sf.n_rows();
        let mut lo = Vec::with_capacity(n + 2 * m);
        let mut up = Vec::with_capacity(n + 2 * m);
        let mut x = Vec::with_capacity(n + 2 * m);
        let mut state = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (l, u) = (sf.lower[j], sf.upper[j]);
            lo.push(l);
            up.push(u);
            if l.is_finite() {
                x.push(l);
                state.push(ColState::AtLower);
            } else if u.is_finite() {
                x.push(u);
                state.push(ColState::AtUpper);
            } else {
                x.push(S::zero());
                state.push(ColState::FreeZero);
            }
        }
        for &sense in &sf.senses {
            let (l, u) = match sense {
                Sense::Le => (S::zero(), S::infinity()),
                Sense::Ge => (S::neg_infinity(), S::zero()),
                Sense::Eq => (S::zero(), S::zero()),
            };
            lo.push(l);
            up.push(u);
            x.push(S::zero());
            state.push(ColState::AtLower);
        }

        // residual of each row at the initial nonbasic point
        let mut needs_art = Vec::new();
        let mut residual = Vec::with_capacity(m);
        for i in 0..m {
            let act = sf.rows[i]
                .iter()
                .fold(S::zero(), |acc, &(j, c)| acc + c * x[j]);
            let r = sf.rhs[i] - act;
            residual.push(r);
            let (ls, us) = (lo[n + i], up[n + i]);
            if r < ls || r > us {
                needs_art.push(i);
            }
        }
        let art_start = n + m;
        let ncols = art_start + needs_art.len();
        let width = ncols + 1;
        let mut a = vec![S::zero(); m * width];
        let mut basis = vec![0usize; m];
        let mut art_of_row = vec![usize::MAX; m];
        for (k, &i) in needs_art.iter().enumerate() {
            art_of_row[i] = art_start + k;
        }
        for _ in 0..needs_art.len() {
            lo.push(S::zero());
            up.push(S::infinity());
            x.push(S::zero());
            state.push(ColState::Basic);
        }
        for i in 0..m {
            let row = &mut a[i * width..(i + 1) * width];
            for &(j, c) in &sf.rows[i] {
                row[j] = row[j] + c;
            }
            row[n + i] = S::one();
            row[ncols] = sf.rhs[i];
            let s = n + i;
            if art_of_row[i] == usize::MAX {
                basis[i] = s;
                state[s] = ColState::Basic;
                x[s] = residual[i];
            } else {
                let r = residual[i];
                let v = if r < lo[s] { lo[s] } else { up[s] };
                x[s] = v;
                state[s] = if r < lo[s] {
                    ColState::AtLower
                } else {
                    ColState::AtUpper
                };
                let e = r - v;
                let art = art_of_row[i];
                if e < S::zero() {
                    row[art] = -S::one();
                    for val in row.iter_mut() {
                        *val = -*val;
                    }
                } else {
                    row[art] = S::one();
                }
                basis[i] = art;
                x[art] = e.abs();
            }
        }

        Tableau {
            sf,
            tol,
            m,
            ncols,
            width,
            a,
            d: vec![S::zero(); ncols],
            basis,
            state,
            x,
            lo,
            up,
            art_start,
            iterations: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> S {
        self.a[i * self.width + j]
    }

    fn price(&mut self, cost: &[S]) {
        let mut d: Vec<S> = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == S::zero() {
                continue;
            }
            let row = &self.a[i * self.width..i * self.width + self.ncols];
            for (dj, &aij) in d.iter_mut().zip(row) {
                if aij != S::zero() {
                    *dj = *dj - cb * aij;
                }
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = S::zero();
        }
        self.d = d;
    }

    fn recompute_basics(&mut self) {
        for i in 0..self.m {
            let row = &self.a[i * self.width..(i + 1) * self.width];
            let mut v = row[self.ncols];
            for j in 0..self.ncols {
                let aij = row[j];
                if aij != S::zero() && self.state[j] != ColState::Basic {
                    v = v - aij * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, S)> {
        let tol = self.tol.opt;
        let mut best: Option<(usize, S)> = None;
        for j in 0..self.ncols {
            let dj = self.d[j];
            let eligible = match self.state[j] {
                ColState::Basic => false,
                _ if self.lo[j] == self.up[j] => false,
                ColState::AtLower => dj < -tol,
                ColState::AtUpper => dj > tol,
                ColState::FreeZero => dj.abs() > tol,
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, dj));
            }
            match best {
                Some((_, bd)) if bd.abs() >= dj.abs() => {}
                _ => best = Some((j, dj)),
            }
        }
        best
    }

    fn run(&mut self, cost: &[S]) -> Result<RunEnd, SimplexError> {
        self.price(cost);
        let mut degenerate_run = 0usize;
        loop {
            self.iterations += 1;
            if self.iterations > self.tol.max_iterations {
                return Err(SimplexError::IterationLimit(self.tol.max_iterations));
            }
            let bland = match self.tol.rule {
                PivotRule::Bland => true,
                PivotRule::DantzigBlandFallback => degenerate_run >= DEGENERATE_SWITCH,
            };
            let Some((q, dq)) = self.entering(bland) else {
                return Ok(RunEnd::Optimal);
            };
            let dir = if dq < S::zero() { S::one() } else { -S::one() };

            let mut theta = if self.lo[q].is_finite() && self.up[q].is_finite() {
                self.up[q] - self.lo[q]
            } else {
                S::infinity()
            };
            let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
            let mut leave_alpha = S::zero();
            let tie = S::epsilon() * S::of(4.5e3);
            for i in 0..self.m {
                let alpha = self.at(i, q);
                if alpha.abs() <= self.tol.pivot {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * alpha;
                let (limit, to_upper) = if rate < S::zero() {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    ((self.x[b] - self.lo[b]) / -rate, false)
                } else {
                    if !self.up[b].is_finite() {
                        continue;
                    }
                    ((self.up[b] - self.x[b]) / rate, true)
                };
                let limit = if limit < S::zero() { S::zero() } else { limit };
                let better = if limit < theta - tie {
                    true
                } else if limit <= theta + tie {
                    match leave {
                        None => false,
                        Some((r, _)) => {
                            if bland {
                                b < self.basis[r]
                            } else {
                                alpha.abs() > leave_alpha.abs()
                            }
                        }
                    }
                } else {
                    false
                };
                if better {
                    theta = limit;
                    leave = Some((i, to_upper));
                    leave_alpha = alpha;
                }
            }

            if !theta.is_finite() {
                return Ok(RunEnd::Unbounded);
            }

            if theta > S::epsilon() * S::of(4.5e4) {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }

            let step = dir * theta;
            if step != S::zero() {
                self.x[q] = self.x[q] + step;
                for i in 0..self.m {
                    let alpha = self.at(i, q);
                    if alpha != S::zero() {
                        let b = self.basis[i];
                        self.x[b] = self.x[b] - alpha * step;
                    }
                }
            }

            match leave {
                None => {
                    // bound flip
                    if dir > S::zero() {
                        self.state[q] = ColState::AtUpper;
                        self.x[q] = self.up[q];
                    } else {
                        self.state[q] = ColState::AtLower;
                        self.x[q] = self.lo[q];
                    }
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.pivot(r, q);
                    self.basis[r] = q;
                    self.state[q] = ColState::Basic;
                    if to_upper {
                        self.state[out] = ColState::AtUpper;
                        self.x[out] = self.up[out];
                    } else {
                        self.state[out] = ColState::AtLower;
                        self.x[out] = self.lo[out];
                    }
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let flush = S::epsilon() * S::of(450.0);
        let inv = S::one() / self.a[r * w + q];
        let mut nz = Vec::with_capacity(64);
        for j in 0..w {
            let v = self.a[r * w + j];
            if v != S::zero() {
                let nv = v * inv;
                self.a[r * w + j] = nv;
                nz.push(j);
            }
        }
        self.a[r * w + q] = S::one();
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let prow: &[S] = prow;
        let eliminate = |row: &mut [S]| {
            let f = row[q];
            if f == S::zero() {
                return;
            }
            for &j in &nz {
                let v = row[j] - f * prow[j];
                row[j] = if v.abs() < flush { S::zero() } else { v };
            }
            row[q] = S::zero();
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);

        let f = self.d[q];
        if f != S::zero() {
            for &j in &nz {
                if j < self.ncols {
                    self.d[j] = self.d[j] - f * prow[j];
                }
            }
            self.d[q] = S::zero();
        }
    }

    fn artificial_sum(&self) -> S {
        (self.art_start..self.ncols).fold(S::zero(), |acc, j| acc + self.x[j])
    }

    fn farkas_support(&self) -> FarkasSupport {
        let tol = self.tol.opt;
        let n = self.sf.n_struct;
        let mut sup = FarkasSupport::default();
        // the dual of row i is minus the reduced cost of its slack
        for i in 0..self.m {
            let s = n + i;
            if self.state[s] != ColState::Basic && self.d[s].abs() > tol {
                sup.rows.push(i);
            }
        }
        for j in 0..n {
            let dj = self.d[j];
            match self.state[j] {
                ColState::Basic | ColState::FreeZero => {}
                ColState::AtLower | ColState::AtUpper => {
                    if dj > tol && self.sf.lower[j].is_finite() {
                        sup.lower.push(j);
                    } else if dj < -tol && self.sf.upper[j].is_finite() {
                        sup.upper.push(j);
                    }
                }
            }
        }
        sup
    }
}

/// Runs phase one only; returns `None` when feasible, else the Farkas support.
pub(crate) fn feasibility<S: Scalar>(
    sf: &StandardForm<S>,
    tol: Tolerances<S>,
) -> Result<Option<FarkasSupport>, SimplexError> {
    let mut t = Tableau::new(sf, tol);
    if t.ncols == t.art_start {
        return Ok(None);
    }
    let mut cost = vec![S::zero(); t.ncols];
    for c in cost.iter_mut().skip(t.art_start) {
        *c = S::one();
    }
    t.run(&cost)?;
    t.recompute_basics();
    if t.artificial_sum() > tol.feas {
        Ok(Some(t.farkas_support()))
    } else {
        Ok(None)
    }
}

pub(crate) fn solve<S: Scalar>(
    sf: &StandardForm<S>,
    tol: Tolerances<S>,
) -> Result<RawOutcome<S>, SimplexError> {
    let mut t = Tableau::new(sf, tol);
    if t.ncols > t.art_start {
        let mut cost = vec![S::zero(); t.ncols];
        for c in cost.iter_mut().skip(t.art_start) {
            *c = S::one();
        }
        t.run(&cost)?;
        t.recompute_basics();
        if t.artificial_sum() > tol.feas {
            return Ok(RawOutcome::Infeasible);
        }
        for j in t.art_start..t.ncols {
            t.lo[j] = S::zero();
            t.up[j] = S::zero();
            if t.state[j] != ColState::Basic {
                t.state[j] = ColState::AtLower;
                t.x[j] = S::zero();
            }
        }
    }
    let mut cost = vec![S::zero(); t.ncols];
    cost[..sf.n_struct].copy_from_slice(&sf.cost);
    match t.run(&cost)? {
        RunEnd::Unbounded => Ok(RawOutcome::Unbounded),
        RunEnd::Optimal => {
            t.recompute_basics();
            let mut x: Vec<S> = t.x[..sf.n_struct].to_vec();
            // snap values sitting within rounding of a bound
            for (j, v) in x.iter_mut().enumerate() {
                let (l, u) = (sf.lower[j], sf.upper[j]);
                let eps = S::epsilon() * S::of(4.5e4) * (S::one() + v.abs());
                if l.is_finite() && (*v - l).abs() < eps {
                    *v = l;
                } else if u.is_finite() && (*v - u).abs() < eps {
                    *v = u;
                }
            }
            let objective = x
                .iter()
                .zip(&sf.cost)
                .fold(S::zero(), |acc, (&v, &c)| acc + v * c);
            Ok(RawOutcome::Optimal { x, objective })
        }
    }
}

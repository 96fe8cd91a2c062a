//! Bounded-variable revised simplex with an LU-factorized basis.
//!
//! Standard computational form: every constraint row gets one slack so that
//! `A x + s = rhs`, with the slack's bounds encoding the sense. Rows whose
//! slack cannot absorb the initial residual get an artificial variable;
//! phase 1 minimizes the artificial sum, phase 2 the real objective. The
//! basis is held as a sparse LU factorization refreshed periodically, with
//! product-form eta updates in between. Pricing is Dantzig over round-robin
//! blocks, falling back to Bland's rule when the objective stalls.

use super::{LpSolution, LpStatus, MilpModel, Sense, FEAS_TOL, OPT_TOL};

const PIVOT_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-12;
const RATIO_TIE: f64 = 1e-12;
const REFACTOR_INTERVAL: usize = 80;
const STALL_LIMIT: u64 = 400;

/// Sparse columns of the structural part of the constraint matrix.
struct Columns {
    starts: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl Columns {
    fn entries(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.starts[j]..self.starts[j + 1];
        self.rows[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    FreeZero,
}

struct Eta {
    slot: usize,
    pivot: f64,
    /// Off-pivot entries of the transformed entering column, by slot.
    entries: Vec<(usize, f64)>,
}

/// Sparse LU factors of the basis matrix, columns processed in an ascending
/// nonzero-count order with row partial pivoting.
struct LuFactors {
    /// Strictly-below-diagonal multipliers per pivot position, by row.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Above-diagonal entries per pivot position, by earlier position.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    row_of_pos: Vec<usize>,
    pos_of_row: Vec<usize>,
    slot_of_pos: Vec<usize>,
}

impl LuFactors {
    /// Solves `L z = a` in place on a dense row-indexed workspace; `order`
    /// receives the touched pivot positions in elimination order. `marks`
    /// must be zeroed and is returned zeroed.
    fn lsolve(
        &self,
        work: &mut [f64],
        start_rows: &[usize],
        marks: &mut [u8],
        order: &mut Vec<usize>,
    ) {
        order.clear();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for &row in start_rows {
            let start = self.pos_of_row[row];
            if start == usize::MAX || marks[start] != 0 {
                continue;
            }
            marks[start] = 1;
            stack.push((start, 0));
            while let Some(&mut (pos, ref mut edge)) = stack.last_mut() {
                let children = &self.l_cols[pos];
                if *edge < children.len() {
                    let child_row = children[*edge].0;
                    *edge += 1;
                    let next = self.pos_of_row[child_row];
                    if next != usize::MAX && marks[next] == 0 {
                        marks[next] = 1;
                        stack.push((next, 0));
                    }
                } else {
                    order.push(pos);
                    stack.pop();
                }
            }
        }
        order.reverse();
        for &pos in order.iter() {
            marks[pos] = 0;
            let y = work[self.row_of_pos[pos]];
            if y.abs() <= ZERO_TOL {
                continue;
            }
            for &(row, lval) in &self.l_cols[pos] {
                work[row] -= lval * y;
            }
        }
    }
}

struct Solver {
    n: usize,
    m: usize,
    cols: Columns,
    rhs: Vec<f64>,
    /// Bounds over structural + slack + artificial variables.
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Artificial columns as (row, sign).
    artificials: Vec<(usize, f64)>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    iterations: u64,
    bland: bool,
    stall: u64,
    scan_cursor: usize,
}

struct RatioOutcome {
    step: f64,
    /// `None` means the entering variable flips bound without a basis change.
    leaving: Option<(usize, bool)>,
}

impl Solver {
    fn total_vars(&self) -> usize {
        self.n + self.m + self.artificials.len()
    }

    fn col_len(&self, j: usize) -> usize {
        if j < self.n {
            self.cols.starts[j + 1] - self.cols.starts[j]
        } else {
            1
        }
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for (row, val) in self.cols.entries(j) {
                f(row, val);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let (row, sign) = self.artificials[j - self.n - self.m];
            f(row, sign);
        }
    }

    /// `w = B^-1 A_j`, dense over slots. `w` must be zeroed on entry.
    fn ftran(&self, j: usize, w: &mut [f64]) {
        let mut start_rows = Vec::new();
        self.for_col(j, |row, val| {
            if w[row] == 0.0 {
                start_rows.push(row);
            }
            w[row] += val;
        });
        self.ftran_apply(w, &start_rows);
    }

    fn ftran_apply(&self, w: &mut [f64], start_rows: &[usize]) {
        let lu = self.lu.as_ref().expect("basis factored");
        let m = self.m;
        let mut marks = vec![0u8; m];
        let mut order = Vec::new();
        lu.lsolve(w, start_rows, &mut marks, &mut order);
        let mut z = vec![0.0f64; m];
        for &pos in order.iter() {
            let row = lu.row_of_pos[pos];
            z[pos] = w[row];
            w[row] = 0.0;
        }
        for v in w.iter_mut() {
            *v = 0.0;
        }
        for pos in (0..m).rev() {
            let v = z[pos];
            if v.abs() <= ZERO_TOL {
                continue;
            }
            let xv = v / lu.u_diag[pos];
            w[lu.slot_of_pos[pos]] = xv;
            for &(p, uval) in &lu.u_cols[pos] {
                z[p] -= uval * xv;
            }
        }
        for eta in &self.etas {
            let t = w[eta.slot] / eta.pivot;
            w[eta.slot] = t;
            if t.abs() <= ZERO_TOL {
                continue;
            }
            for &(slot, v) in &eta.entries {
                w[slot] -= v * t;
            }
        }
    }

    /// In-place `y = B^-T c`: input indexed by slot, output by row.
    fn btran(&self, c: &mut [f64]) {
        let lu = self.lu.as_ref().expect("basis factored");
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut dot = 0.0;
            for &(slot, v) in &eta.entries {
                dot += v * c[slot];
            }
            c[eta.slot] = (c[eta.slot] - dot) / eta.pivot;
        }
        let mut v = vec![0.0f64; m];
        for pos in 0..m {
            let mut acc = c[lu.slot_of_pos[pos]];
            for &(p, uval) in &lu.u_cols[pos] {
                acc -= uval * v[p];
            }
            v[pos] = acc / lu.u_diag[pos];
        }
        for slot in c.iter_mut() {
            *slot = 0.0;
        }
        for pos in (0..m).rev() {
            let mut acc = v[pos];
            for &(row, lval) in &lu.l_cols[pos] {
                acc -= lval * c[row];
            }
            c[lu.row_of_pos[pos]] = acc;
        }
    }

    /// Recomputes basic variable values from the nonbasic assignment.
    fn recompute_basics(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.total_vars() {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_col(j, |row, val| r[row] -= val * xj);
            }
        }
        let start_rows: Vec<usize> = (0..self.m).filter(|&i| r[i] != 0.0).collect();
        self.ftran_apply(&mut r, &start_rows);
        for slot in 0..self.m {
            self.x[self.basis[slot]] = r[slot];
        }
    }

    fn refactor(&mut self) -> bool {
        match factor_basis(self) {
            Some(lu) => {
                self.lu = Some(lu);
                self.etas.clear();
                self.recompute_basics();
                true
            }
            None => false,
        }
    }

    fn duals(&self, cost: &[f64], y: &mut [f64]) {
        for slot in 0..self.m {
            y[slot] = cost[self.basis[slot]];
        }
        self.btran(y);
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64]) -> f64 {
        let mut dot = 0.0;
        self.for_col(j, |row, val| dot += y[row] * val);
        cost[j] - dot
    }

    /// Direction in which moving `j` improves the objective, with the
    /// magnitude of its reduced-cost violation.
    fn improving(&self, j: usize, cost: &[f64], y: &[f64]) -> Option<(f64, f64)> {
        let state = self.state[j];
        if matches!(state, VarState::Basic(_)) {
            return None;
        }
        if self.upper[j] - self.lower[j] <= ZERO_TOL && state != VarState::FreeZero {
            return None;
        }
        let d = self.reduced_cost(j, cost, y);
        match state {
            VarState::AtLower if d < -OPT_TOL => Some((1.0, -d)),
            VarState::AtUpper if d > OPT_TOL => Some((-1.0, d)),
            VarState::FreeZero if d < -OPT_TOL => Some((1.0, -d)),
            VarState::FreeZero if d > OPT_TOL => Some((-1.0, d)),
            _ => None,
        }
    }

    /// Picks an entering variable and its direction.
    fn price(&mut self, cost: &[f64], y: &[f64]) -> Option<(usize, f64)> {
        let nt = self.total_vars();
        if self.bland {
            return (0..nt).find_map(|j| self.improving(j, cost, y).map(|(dir, _)| (j, dir)));
        }
        let block = 4096.max(nt / 8);
        let mut scanned = 0;
        while scanned < nt {
            let span = block.min(nt - scanned);
            let mut best: Option<(usize, f64, f64)> = None;
            for k in 0..span {
                let j = (self.scan_cursor + k) % nt;
                if let Some((dir, violation)) = self.improving(j, cost, y) {
                    if best.map_or(true, |(_, _, v)| violation > v) {
                        best = Some((j, dir, violation));
                    }
                }
            }
            self.scan_cursor = (self.scan_cursor + span) % nt;
            scanned += span;
            if let Some((j, dir, _)) = best {
                return Some((j, dir));
            }
        }
        None
    }

    fn ratio_test(&self, j: usize, dir: f64, w: &[f64]) -> RatioOutcome {
        // Bound-to-bound flip of the entering variable itself.
        let mut t_best = if self.lower[j].is_finite() && self.upper[j].is_finite() {
            self.upper[j] - self.lower[j]
        } else {
            f64::INFINITY
        };
        let mut leave: Option<(usize, bool, f64)> = None;
        for slot in 0..self.m {
            let wv = w[slot];
            if wv.abs() <= PIVOT_TOL {
                continue;
            }
            let var = self.basis[slot];
            let delta = -dir * wv;
            let (limit, at_upper) = if delta < 0.0 {
                if self.lower[var].is_finite() {
                    (((self.x[var] - self.lower[var]) / -delta).max(0.0), false)
                } else {
                    continue;
                }
            } else if self.upper[var].is_finite() {
                (((self.upper[var] - self.x[var]) / delta).max(0.0), true)
            } else {
                continue;
            };
            if limit < t_best - RATIO_TIE {
                t_best = limit;
                leave = Some((slot, at_upper, wv.abs()));
            } else if limit <= t_best + RATIO_TIE {
                if let Some((lslot, _, lpiv)) = leave {
                    let replace = if self.bland {
                        var < self.basis[lslot]
                    } else {
                        wv.abs() > lpiv
                    };
                    if replace {
                        t_best = t_best.min(limit);
                        leave = Some((slot, at_upper, wv.abs()));
                    }
                }
                // A tie against the pure bound flip keeps the flip: it is
                // feasible and avoids a basis change.
            }
        }
        RatioOutcome {
            step: t_best,
            leaving: leave.map(|(slot, at_upper, _)| (slot, at_upper)),
        }
    }

    fn apply_pivot(&mut self, j: usize, dir: f64, w: &[f64], outcome: &RatioOutcome) {
        let t = outcome.step;
        self.x[j] += dir * t;
        if t > 0.0 {
            for slot in 0..self.m {
                let wv = w[slot];
                if wv.abs() > ZERO_TOL {
                    let var = self.basis[slot];
                    self.x[var] -= dir * t * wv;
                }
            }
        }
        match outcome.leaving {
            None => {
                self.state[j] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
            }
            Some((slot, at_upper)) => {
                let leaving = self.basis[slot];
                self.x[leaving] = if at_upper { self.upper[leaving] } else { self.lower[leaving] };
                self.state[leaving] = if at_upper { VarState::AtUpper } else { VarState::AtLower };
                self.basis[slot] = j;
                self.state[j] = VarState::Basic(slot);
                let entries: Vec<(usize, f64)> = w
                    .iter()
                    .enumerate()
                    .filter(|&(s, v)| s != slot && v.abs() > ZERO_TOL)
                    .map(|(s, &v)| (s, v))
                    .collect();
                self.etas.push(Eta { slot, pivot: w[slot], entries });
            }
        }
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        cost.iter()
            .zip(self.x.iter())
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Primal iterations for one phase.
    fn iterate(&mut self, cost: &[f64], iteration_limit: u64) -> LpStatus {
        let mut w = vec![0.0f64; self.m];
        let mut y = vec![0.0f64; self.m];
        let mut last_obj = self.objective_value(cost);
        loop {
            if self.iterations >= iteration_limit {
                return LpStatus::IterationLimit;
            }
            if self.etas.len() >= REFACTOR_INTERVAL && !self.refactor() {
                return LpStatus::IterationLimit;
            }
            self.duals(cost, &mut y);
            let Some((j, dir)) = self.price(cost, &y) else {
                return LpStatus::Optimal;
            };
            for v in w.iter_mut() {
                *v = 0.0;
            }
            self.ftran(j, &mut w);
            let outcome = self.ratio_test(j, dir, &w);
            if outcome.step.is_infinite() {
                return LpStatus::Unbounded;
            }
            self.iterations += 1;
            self.apply_pivot(j, dir, &w, &outcome);
            let obj = self.objective_value(cost);
            if last_obj - obj > 1e-10 {
                self.stall = 0;
                self.bland = false;
            } else {
                self.stall += 1;
                if self.stall >= STALL_LIMIT {
                    self.bland = true;
                }
            }
            last_obj = obj;
        }
    }
}

/// Factors the current basis. `None` when numerically singular.
fn factor_basis(solver: &Solver) -> Option<LuFactors> {
    let m = solver.m;
    let basis = &solver.basis;
    let mut lu = LuFactors {
        l_cols: Vec::with_capacity(m),
        u_cols: Vec::with_capacity(m),
        u_diag: Vec::with_capacity(m),
        row_of_pos: Vec::with_capacity(m),
        pos_of_row: vec![usize::MAX; m],
        slot_of_pos: Vec::with_capacity(m),
    };
    let mut slots: Vec<usize> = (0..m).collect();
    slots.sort_by_key(|&s| (solver.col_len(basis[s]), s));
    let mut work = vec![0.0f64; m];
    let mut in_touched = vec![false; m];
    let mut marks = vec![0u8; m];
    let mut order: Vec<usize> = Vec::new();
    let mut touched: Vec<usize> = Vec::new();
    for &slot in &slots {
        touched.clear();
        let mut start_rows = Vec::new();
        solver.for_col(basis[slot], |row, val| {
            if !in_touched[row] {
                in_touched[row] = true;
                touched.push(row);
                start_rows.push(row);
            }
            work[row] += val;
        });
        lu.lsolve(&mut work, &start_rows, &mut marks, &mut order);
        for &pos in &order {
            let prow = lu.row_of_pos[pos];
            if !in_touched[prow] {
                in_touched[prow] = true;
                touched.push(prow);
            }
            for &(r, _) in &lu.l_cols[pos] {
                if !in_touched[r] {
                    in_touched[r] = true;
                    touched.push(r);
                }
            }
        }
        let mut pivot_row = usize::MAX;
        let mut pivot_val = 0.0f64;
        for &row in &touched {
            if lu.pos_of_row[row] == usize::MAX && work[row].abs() > pivot_val.abs() {
                pivot_row = row;
                pivot_val = work[row];
            }
        }
        if pivot_row == usize::MAX || pivot_val.abs() < 1e-11 {
            for &row in &touched {
                work[row] = 0.0;
                in_touched[row] = false;
            }
            return None;
        }
        let pos = lu.u_diag.len();
        let mut ucol = Vec::new();
        let mut lcol = Vec::new();
        for &row in &touched {
            let v = work[row];
            work[row] = 0.0;
            in_touched[row] = false;
            if v.abs() <= ZERO_TOL {
                continue;
            }
            let p = lu.pos_of_row[row];
            if p != usize::MAX {
                ucol.push((p, v));
            } else if row != pivot_row {
                lcol.push((row, v / pivot_val));
            }
        }
        ucol.sort_unstable_by_key(|e| e.0);
        lu.u_cols.push(ucol);
        lu.l_cols.push(lcol);
        lu.u_diag.push(pivot_val);
        lu.row_of_pos.push(pivot_row);
        lu.pos_of_row[pivot_row] = pos;
        lu.slot_of_pos.push(slot);
    }
    Some(lu)
}

/// Solves the LP relaxation with optional variable bound overrides (used by
/// branch-and-bound to fix binaries).
pub(crate) fn solve(
    model: &MilpModel,
    bound_overrides: &[(usize, f64, f64)],
    iteration_limit: u64,
) -> LpSolution {
    let n = model.variables.len();
    let m = model.constraints.len();

    let mut col_counts = vec![0usize; n];
    for c in &model.constraints {
        for (j, _) in &c.terms {
            col_counts[*j] += 1;
        }
    }
    let mut starts = vec![0usize; n + 1];
    for j in 0..n {
        starts[j + 1] = starts[j] + col_counts[j];
    }
    let nnz = starts[n];
    let mut rows = vec![0usize; nnz];
    let mut vals = vec![0.0f64; nnz];
    let mut fill = starts.clone();
    for (i, c) in model.constraints.iter().enumerate() {
        for (j, a) in &c.terms {
            rows[fill[*j]] = i;
            vals[fill[*j]] = *a;
            fill[*j] += 1;
        }
    }

    let mut lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    for &(j, lo, hi) in bound_overrides {
        lower[j] = lo;
        upper[j] = hi;
    }
    if (0..n).any(|j| lower[j] > upper[j]) {
        return LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            values: vec![0.0; n],
            iterations: 0,
        };
    }
    let mut rhs = Vec::with_capacity(m);
    for c in &model.constraints {
        rhs.push(c.rhs);
        let (lo, hi) = match c.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lower.push(lo);
        upper.push(hi);
    }

    let mut solver = Solver {
        n,
        m,
        cols: Columns { starts, rows, vals },
        rhs,
        lower,
        upper,
        artificials: Vec::new(),
        state: Vec::with_capacity(n + m),
        basis: Vec::with_capacity(m),
        x: vec![0.0; n + m],
        lu: None,
        etas: Vec::new(),
        iterations: 0,
        bland: false,
        stall: 0,
        scan_cursor: 0,
    };

    for j in 0..n + m {
        let (lo, hi) = (solver.lower[j], solver.upper[j]);
        let (state, value) = if lo.is_finite() && hi.is_finite() {
            if lo.abs() <= hi.abs() {
                (VarState::AtLower, lo)
            } else {
                (VarState::AtUpper, hi)
            }
        } else if lo.is_finite() {
            (VarState::AtLower, lo)
        } else if hi.is_finite() {
            (VarState::AtUpper, hi)
        } else {
            (VarState::FreeZero, 0.0)
        };
        solver.state.push(state);
        solver.x[j] = value;
    }

    // Feasible rows start with a basic slack; the rest get an artificial.
    let mut activity = vec![0.0f64; m];
    for j in 0..n {
        let xj = solver.x[j];
        if xj != 0.0 {
            for (row, val) in solver.cols.entries(j) {
                activity[row] += val * xj;
            }
        }
    }
    for row in 0..m {
        let slack_var = n + row;
        let v = solver.rhs[row] - activity[row];
        if v >= solver.lower[slack_var] - ZERO_TOL && v <= solver.upper[slack_var] + ZERO_TOL {
            solver.basis.push(slack_var);
            solver.state[slack_var] = VarState::Basic(row);
            solver.x[slack_var] = v;
        } else {
            let clamped = v.clamp(solver.lower[slack_var], solver.upper[slack_var]);
            solver.x[slack_var] = clamped;
            solver.state[slack_var] = if clamped == solver.upper[slack_var] {
                VarState::AtUpper
            } else {
                VarState::AtLower
            };
            let residual = v - clamped;
            let art_var = n + m + solver.artificials.len();
            solver.artificials.push((row, residual.signum()));
            solver.lower.push(0.0);
            solver.upper.push(f64::INFINITY);
            solver.x.push(residual.abs());
            solver.state.push(VarState::Basic(row));
            solver.basis.push(art_var);
        }
    }

    if !solver.refactor() {
        return failure(&solver, LpStatus::IterationLimit);
    }

    if !solver.artificials.is_empty() {
        let mut phase1_cost = vec![0.0f64; solver.total_vars()];
        for a in 0..solver.artificials.len() {
            phase1_cost[n + m + a] = 1.0;
        }
        match solver.iterate(&phase1_cost, iteration_limit) {
            LpStatus::Optimal => {}
            // Phase 1 is bounded below by zero; an unbounded ray is noise.
            LpStatus::Unbounded => return failure(&solver, LpStatus::IterationLimit),
            other => return failure(&solver, other),
        }
        if solver.objective_value(&phase1_cost) > FEAS_TOL {
            return failure(&solver, LpStatus::Infeasible);
        }
        for a in 0..solver.artificials.len() {
            let var = n + m + a;
            solver.upper[var] = 0.0;
            if !matches!(solver.state[var], VarState::Basic(_)) {
                solver.x[var] = 0.0;
                solver.state[var] = VarState::AtLower;
            }
        }
    }

    let mut phase2_cost = vec![0.0f64; solver.total_vars()];
    for (j, a) in &model.objective {
        phase2_cost[*j] += *a;
    }
    solver.bland = false;
    solver.stall = 0;
    solver.scan_cursor = 0;
    let status = solver.iterate(&phase2_cost, iteration_limit);
    if status != LpStatus::Optimal {
        return failure(&solver, status);
    }

    // A claimed optimum must independently satisfy bounds and rows.
    let values: Vec<f64> = solver.x[..n].to_vec();
    for j in 0..solver.total_vars() {
        let scale = 1.0 + solver.x[j].abs();
        if solver.x[j] < solver.lower[j] - FEAS_TOL * scale
            || solver.x[j] > solver.upper[j] + FEAS_TOL * scale
        {
            return failure(&solver, LpStatus::IterationLimit);
        }
    }
    for (i, c) in model.constraints.iter().enumerate() {
        let lhs: f64 = c.terms.iter().map(|(j, a)| a * values[*j]).sum();
        let scale = 1.0 + lhs.abs() + c.rhs.abs();
        if (lhs + solver.x[n + i] - c.rhs).abs() > 10.0 * FEAS_TOL * scale {
            return failure(&solver, LpStatus::IterationLimit);
        }
    }

    let objective = model
        .objective
        .iter()
        .map(|(j, a)| a * values[*j])
        .sum::<f64>();
    LpSolution {
        status: LpStatus::Optimal,
        objective,
        values,
        iterations: solver.iterations,
    }
}

fn failure(solver: &Solver, status: LpStatus) -> LpSolution {
    LpSolution {
        status,
        objective: f64::NAN,
        values: solver.x[..solver.n].to_vec(),
        iterations: solver.iterations,
    }
}

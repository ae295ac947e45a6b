//! Dense primal simplex over any [`Scalar`].
//!
//! Solves `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`, so the slack basis is
//! a feasible start and no phase one is needed. The tableau is kept in
//! condensed (dictionary) form, one column per nonbasic variable. Entering
//! and leaving variables follow Bland's smallest-index rule, so degenerate
//! problems terminate. With [`Rational`](crate::Rational) every pivot is exact.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A sparse constraint row `Σ coef·x[idx] ≤ rhs`.
#[derive(Clone, Debug)]
pub struct Constraint<S> {
    pub coefs: Vec<(usize, S)>,
    pub rhs: S,
}

#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    num_vars: usize,
    objective: Vec<S>,
    constraints: Vec<Constraint<S>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal(LpSolution<S>),
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<S> {
    pub value: S,
    pub primal: Vec<S>,
    /// One multiplier per constraint; `yᵀA ≥ c`, `y ≥ 0`, `yᵀb = value`.
    pub dual: Vec<S>,
    pub pivots: usize,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![S::zero(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, var: usize, coef: S) {
        self.objective[var] = coef;
    }

    pub fn add_objective(&mut self, var: usize, coef: S) {
        self.objective[var] += coef;
    }

    /// Adds `Σ coef·x ≤ rhs`; `rhs` must be nonnegative.
    pub fn add_le(&mut self, coefs: Vec<(usize, S)>, rhs: S) -> Result<()> {
        if rhs.is_neg() {
            return Err(Error::Internal("simplex needs nonnegative right-hand sides".into()));
        }
        if let Some((i, _)) = coefs.iter().find(|(i, _)| *i >= self.num_vars) {
            return Err(Error::Internal(format!("variable {i} out of range")));
        }
        self.constraints.push(Constraint { coefs, rhs });
        Ok(())
    }

    pub fn solve(&self) -> Result<LpOutcome<S>> {
        Tableau::build(self).run()
    }

    /// Checks a solution against primal and dual feasibility and equal
    /// objective values; returns a description of the first failure.
    pub fn verify(&self, sol: &LpSolution<S>) -> std::result::Result<(), String> {
        if sol.primal.len() != self.num_vars || sol.dual.len() != self.constraints.len() {
            return Err("dimension mismatch".into());
        }
        if let Some(i) = sol.primal.iter().position(|x| x.is_neg()) {
            return Err(format!("x[{i}] < 0"));
        }
        if let Some(i) = sol.dual.iter().position(|y| y.is_neg()) {
            return Err(format!("y[{i}] < 0"));
        }
        let mut reduced = self.objective.clone();
        let mut dual_obj = S::zero();
        for (r, (con, y)) in self.constraints.iter().zip(&sol.dual).enumerate() {
            let lhs = con
                .coefs
                .iter()
                .fold(S::zero(), |acc, (i, a)| acc + a.clone() * sol.primal[*i].clone());
            if !lhs.approx_le(&con.rhs) {
                return Err(format!("row {r} violated: {lhs} > {}", con.rhs));
            }
            if !y.is_zero() {
                for (i, a) in &con.coefs {
                    reduced[*i].sub_mul_assign(a, y);
                }
                dual_obj += y.clone() * con.rhs.clone();
            }
        }
        if let Some(i) = reduced.iter().position(|r| r.is_pos()) {
            return Err(format!("dual constraint {i} violated"));
        }
        let primal_obj = self
            .objective
            .iter()
            .zip(&sol.primal)
            .fold(S::zero(), |acc, (c, x)| acc + c.clone() * x.clone());
        if !primal_obj.approx_eq(&sol.value) || !dual_obj.approx_eq(&sol.value) {
            return Err(format!(
                "objective mismatch: primal {primal_obj}, dual {dual_obj}, reported {}",
                sol.value
            ));
        }
        Ok(())
    }
}

struct Tableau<S> {
    n: usize,
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    obj: Vec<S>,
    value: S,
    /// Variable label of each basic row; labels `n..` are slacks.
    basic: Vec<usize>,
    /// Variable label of each nonbasic column.
    nonbasic: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars;
        let r = lp.constraints.len();
        let mut rows = vec![vec![S::zero(); n]; r];
        for (row, con) in rows.iter_mut().zip(&lp.constraints) {
            for (i, a) in &con.coefs {
                row[*i] += a.clone();
            }
        }
        Tableau {
            n,
            rows,
            rhs: lp.constraints.iter().map(|c| c.rhs.clone()).collect(),
            obj: lp.objective.clone(),
            value: S::zero(),
            basic: (n..n + r).collect(),
            nonbasic: (0..n).collect(),
        }
    }

    fn entering(&self) -> Option<usize> {
        self.obj
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_pos())
            .min_by_key(|(j, _)| self.nonbasic[*j])
            .map(|(j, _)| j)
    }

    fn leaving(&self, q: usize) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = &row[q];
            if !a.is_pos() {
                continue;
            }
            let ratio = self.rhs[i].clone() / a.clone();
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br || (ratio == br && self.basic[i] < self.basic[bi]) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let piv = self.rows[p][q].clone();
        let inv = S::one() / piv;
        {
            let row = &mut self.rows[p];
            for (j, a) in row.iter_mut().enumerate() {
                if j != q && !a.is_zero() {
                    *a *= inv.clone();
                }
            }
            row[q] = inv.clone();
            self.rhs[p] *= inv.clone();
        }
        let prow = std::mem::take(&mut self.rows[p]);
        let nz: Vec<usize> = (0..prow.len())
            .filter(|&j| j != q && !prow[j].is_zero())
            .collect();
        let prhs = self.rhs[p].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == p || row[q].is_zero() {
                continue;
            }
            let f = row[q].clone();
            for &j in &nz {
                row[j].sub_mul_assign(&f, &prow[j]);
            }
            row[q] = -(f.clone() * inv.clone());
            self.rhs[i].sub_mul_assign(&f, &prhs);
        }
        if !self.obj[q].is_zero() {
            let f = self.obj[q].clone();
            for &j in &nz {
                self.obj[j].sub_mul_assign(&f, &prow[j]);
            }
            self.obj[q] = -(f.clone() * inv.clone());
            self.value += f * prhs;
        }
        self.rows[p] = prow;
        std::mem::swap(&mut self.basic[p], &mut self.nonbasic[q]);
    }

    fn run(mut self) -> Result<LpOutcome<S>> {
        let cap = 50_000 + 100 * (self.rows.len() + self.n);
        let mut pivots = 0;
        while let Some(q) = self.entering() {
            let Some(p) = self.leaving(q) else {
                return Ok(LpOutcome::Unbounded);
            };
            self.pivot(p, q);
            pivots += 1;
            if pivots > cap {
                return Err(Error::Internal(format!("simplex exceeded {cap} pivots")));
            }
            if !S::EXACT {
                // keep round-off from leaving slightly infeasible right-hand sides
                for r in &mut self.rhs {
                    if r.is_neg() || !r.is_pos() {
                        *r = S::zero();
                    }
                }
            }
        }
        let n = self.n;
        let mut primal = vec![S::zero(); n];
        for (i, &b) in self.basic.iter().enumerate() {
            if b < n {
                primal[b] = self.rhs[i].clone();
            }
        }
        let mut dual = vec![S::zero(); self.rows.len()];
        for (j, &v) in self.nonbasic.iter().enumerate() {
            if v >= n {
                dual[v - n] = -self.obj[j].clone();
            }
        }
        Ok(LpOutcome::Optimal(LpSolution {
            value: self.value,
            primal,
            dual,
            pivots,
        }))
    }
}

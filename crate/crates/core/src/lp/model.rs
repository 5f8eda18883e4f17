use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

/// `lower <= sum(coef * x) <= upper`; either side may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub coefficients: Vec<(ColId, f64)>,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|(c, a)| a * x[c.0]).sum()
    }

    /// Amount by which `activity` leaves `[lower, upper]` (0 when inside).
    pub fn violation(&self, activity: f64) -> f64 {
        (self.lower - activity).max(activity - self.upper).max(0.0)
    }

    /// Largest `|coef * x|` term, used to scale feasibility tolerances.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .map(|(c, a)| (a * x[c.0]).abs())
            .fold(0.0, f64::max)
    }
}

/// Minimization problem over named columns and rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    pub objective_offset: f64,
    #[serde(skip)]
    col_names: HashMap<String, ColId>,
    #[serde(skip)]
    row_names: HashMap<String, RowId>,
}

/// One constraint or bound that a point fails to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub name: String,
    pub amount: f64,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
        integer: bool,
    ) -> ColId {
        let name = name.into();
        let id = ColId(self.columns.len());
        debug_assert!(!self.col_names.contains_key(&name), "duplicate column {name}");
        self.col_names.insert(name.clone(), id);
        self.columns.push(Column {
            name,
            lower,
            upper,
            cost,
            integer,
        });
        id
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> ColId {
        self.add_column(name, 0.0, 1.0, cost, true)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        coefficients: Vec<(ColId, f64)>,
    ) -> RowId {
        let name = name.into();
        let id = RowId(self.rows.len());
        debug_assert!(!self.row_names.contains_key(&name), "duplicate row {name}");
        self.row_names.insert(name.clone(), id);
        // Merge repeated columns so every row holds each column once.
        let mut merged: Vec<(ColId, f64)> = Vec::with_capacity(coefficients.len());
        for (c, a) in coefficients {
            match merged.iter_mut().find(|(k, _)| *k == c) {
                Some((_, v)) => *v += a,
                None => merged.push((c, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        self.rows.push(Row {
            name,
            lower,
            upper,
            coefficients: merged,
        });
        id
    }

    /// Rebuilds the name lookups (needed after deserializing).
    pub fn reindex(&mut self) {
        self.col_names = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), ColId(i)))
            .collect();
        self.row_names = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), RowId(i)))
            .collect();
    }

    pub fn column_id(&self, name: &str) -> Option<ColId> {
        self.col_names.get(name).copied()
    }

    pub fn row_id(&self, name: &str) -> Option<RowId> {
        self.row_names.get(name).copied()
    }

    pub fn num_integer(&self) -> usize {
        self.columns.iter().filter(|c| c.integer).count()
    }

    pub fn is_mip(&self) -> bool {
        self.num_integer() > 0
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .columns
                .iter()
                .zip(x)
                .map(|(c, v)| c.cost * v)
                .sum::<f64>()
    }

    /// Every bound, integrality and row violation above `tol * max(1, term magnitude)`.
    pub fn violations(&self, x: &[f64], tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for (c, &v) in self.columns.iter().zip(x) {
            let scale = 1.0_f64.max(v.abs());
            let bound = (c.lower - v).max(v - c.upper).max(0.0);
            if bound > tol * scale || !v.is_finite() {
                out.push(Violation {
                    name: format!("bound:{}", c.name),
                    amount: bound,
                });
            }
            if c.integer && (v - v.round()).abs() > tol {
                out.push(Violation {
                    name: format!("integrality:{}", c.name),
                    amount: (v - v.round()).abs(),
                });
            }
        }
        for r in &self.rows {
            let act = r.activity(x);
            let amount = r.violation(act);
            if amount > tol * 1.0_f64.max(r.magnitude(x)) {
                out.push(Violation {
                    name: r.name.clone(),
                    amount,
                });
            }
        }
        out
    }

    /// Copy with every integer column fixed at the rounded value in `x` and relaxed to
    /// continuous.
    pub fn fix_integers(&self, x: &[f64]) -> Result<LinearProgram> {
        if x.len() != self.columns.len() {
            return Err(Error::validation("one value per column"));
        }
        let mut out = self.clone();
        for (c, v) in out.columns.iter_mut().zip(x) {
            if c.integer {
                let r = v.round();
                c.lower = r;
                c.upper = r;
                c.integer = false;
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.columns {
            if c.lower > c.upper || c.lower.is_nan() || c.upper.is_nan() || !c.cost.is_finite() {
                return Err(Error::validation(format!(
                    "column {} has lower <= upper and a finite cost",
                    c.name
                )));
            }
        }
        for r in &self.rows {
            if r.lower > r.upper || r.lower.is_nan() || r.upper.is_nan() {
                return Err(Error::validation(format!("row {} has lower <= upper", r.name)));
            }
            if r.coefficients.iter().any(|(c, a)| c.0 >= self.columns.len() || !a.is_finite()) {
                return Err(Error::validation(format!(
                    "row {} references existing columns with finite coefficients",
                    r.name
                )));
            }
        }
        Ok(())
    }
}

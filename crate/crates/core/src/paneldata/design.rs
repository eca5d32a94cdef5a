use crate::{Error, Result};

/// Dense matrix of named real columns, stored column by column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DesignMatrix {
    n_rows: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl DesignMatrix {
    /// An empty design with a fixed number of rows.
    pub fn new(n_rows: usize) -> Self {
        Self {
            n_rows,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn from_columns<S: Into<String>>(
        n_rows: usize,
        columns: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self> {
        let mut design = Self::new(n_rows);
        for (name, values) in columns {
            design.push(name, values)?;
        }
        Ok(design)
    }

    /// Builds a design from row-major data with generated names `f0, f1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let mut design = Self::new(n_rows);
        for j in 0..width {
            let mut col = Vec::with_capacity(n_rows);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::Dimension(format!(
                        "row {i} has {} entries, expected {width}",
                        row.len()
                    )));
                }
                col.push(row[j]);
            }
            design.push(format!("f{j}"), col)?;
        }
        Ok(design)
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n_rows {
            return Err(Error::Dimension(format!(
                "column `{name}` has {} rows, design has {}",
                values.len(),
                self.n_rows
            )));
        }
        if self.names.iter().any(|n| *n == name) {
            return Err(Error::Data(format!("duplicate column name `{name}`")));
        }
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Data(format!(
                "column `{name}` has a non-finite entry at row {pos}"
            )));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn push_intercept(&mut self) -> Result<()> {
        self.push("intercept", vec![1.0; self.n_rows])
    }

    /// Appends every column of `other`. Names must stay unique.
    pub fn extend(&mut self, other: DesignMatrix) -> Result<()> {
        for (name, col) in other.names.into_iter().zip(other.columns) {
            self.push(name, col)?;
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    /// Copies one row into `out` (cleared first).
    pub fn row_into(&self, row: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.columns.iter().map(|c| c[row]));
    }

    /// Restricts the design to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            n_rows: rows.len(),
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn rejects_duplicate_and_non_finite_columns() {
        let mut d = DesignMatrix::new(2);
        d.push("a", vec![1.0, 2.0]).unwrap();
        assert!(matches!(d.push("a", vec![0.0, 0.0]), Err(Error::Data(_))));
        assert!(matches!(d.push("b", vec![f64::NAN, 0.0]), Err(Error::Data(_))));
        assert!(matches!(d.push("c", vec![0.0]), Err(Error::Dimension(_))));
        let set: HashSet<&String> = d.names().iter().collect();
        assert_eq!(set.len(), d.n_cols());
    }

    #[test]
    fn select_rows_keeps_names() {
        let d = DesignMatrix::from_columns(3, [("a", vec![1.0, 2.0, 3.0])]).unwrap();
        let s = d.select_rows(&[2, 0]);
        assert_eq!(s.column(0), &[3.0, 1.0]);
        assert_eq!(s.names(), d.names());
    }
}

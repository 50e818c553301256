use std::collections::HashMap;

use thiserror::Error;

use crate::numerics::{add_ext, dist_e, Rational, Top, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("distance table is not {n}x{n}")]
    Shape { n: usize },
    #[error("duplicate atom `{0}`")]
    DuplicateAtom(String),
    #[error("d({a}, {b}) = {value} lies outside [0, {top}]")]
    OutOfRange {
        a: String,
        b: String,
        value: String,
        top: String,
    },
    #[error("d({0}, {0}) is not 0")]
    NotReflexive(String),
    #[error("d({a}, {b}) differs from d({b}, {a})")]
    NotSymmetric { a: String, b: String },
    #[error("triangle inequality fails: d({a}, {c}) > d({a}, {b}) + d({b}, {c})")]
    Triangle { a: String, b: String, c: String },
}

/// A pseudometric on a finite, ordered carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudometricTable {
    atoms: Vec<String>,
    top: Top,
    d: Vec<Value>,
}

impl PseudometricTable {
    /// Build and validate a table from its rows.
    pub fn new(atoms: Vec<String>, top: Top, rows: Vec<Vec<Value>>) -> Result<Self, MetricError> {
        let n = atoms.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(MetricError::Shape { n });
        }
        let table = PseudometricTable {
            atoms,
            top,
            d: rows.into_iter().flatten().collect(),
        };
        table.check_atoms()?;
        table.check_axioms(0.0)?;
        Ok(table)
    }

    pub fn from_fn(
        atoms: Vec<String>,
        top: Top,
        f: impl Fn(usize, usize) -> Value,
    ) -> Result<Self, MetricError> {
        let n = atoms.len();
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        Self::new(atoms, top, rows)
    }

    /// Skips validation; callers guarantee the axioms.
    pub(crate) fn from_entries_unchecked(atoms: Vec<String>, top: Top, d: Vec<Value>) -> Self {
        debug_assert_eq!(d.len(), atoms.len() * atoms.len());
        PseudometricTable { atoms, top, d }
    }

    /// Points of the real line with `d(x, y) = |x - y|`.
    pub fn euclidean(points: Vec<(String, Rational)>, top: Top) -> Result<Self, MetricError> {
        let (atoms, xs): (Vec<String>, Vec<Value>) =
            points.into_iter().map(|(a, x)| (a, Value::exact(x))).unzip();
        Self::from_fn(atoms, top, |i, j| dist_e(&xs[i], &xs[j]))
    }

    /// Distance `⊤` between distinct atoms.
    pub fn discrete(atoms: Vec<String>, top: Top) -> Result<Self, MetricError> {
        let t = top.value();
        Self::from_fn(atoms, top, |i, j| if i == j { Value::zero() } else { t.clone() })
    }

    /// The one-point space.
    pub fn singleton(atom: &str, top: Top) -> Self {
        PseudometricTable {
            atoms: vec![atom.to_string()],
            top,
            d: vec![Value::zero()],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn top(&self) -> &Top {
        &self.top
    }

    pub fn get(&self, i: usize, j: usize) -> &Value {
        &self.d[i * self.atoms.len() + j]
    }

    pub fn index_of(&self, atom: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    pub fn atom_index(&self) -> HashMap<&str, usize> {
        self.atoms.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Value>> {
        let n = self.len();
        (0..n).map(|i| self.d[i * n..(i + 1) * n].to_vec()).collect()
    }

    /// Pointwise `self ≤ other` on a common carrier.
    pub fn le(&self, other: &PseudometricTable) -> bool {
        self.d.len() == other.d.len() && self.d.iter().zip(&other.d).all(|(a, b)| a <= b)
    }

    /// Same table with atoms renamed by `perm` (atom `i` moves to `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> PseudometricTable {
        let n = self.len();
        let mut atoms = vec![String::new(); n];
        let mut d = vec![Value::zero(); n * n];
        for i in 0..n {
            atoms[perm[i]] = self.atoms[i].clone();
            for j in 0..n {
                d[perm[i] * n + perm[j]] = self.get(i, j).clone();
            }
        }
        PseudometricTable {
            atoms,
            top: self.top.clone(),
            d,
        }
    }

    fn check_atoms(&self) -> Result<(), MetricError> {
        let mut seen = std::collections::HashSet::new();
        for a in &self.atoms {
            if !seen.insert(a) {
                return Err(MetricError::DuplicateAtom(a.clone()));
            }
        }
        Ok(())
    }

    /// Reflexivity, symmetry, range and triangle inequality. `tol` is the
    /// slack allowed where approximate values are compared.
    pub fn check_axioms(&self, tol: f64) -> Result<(), MetricError> {
        let n = self.len();
        let name = |i: usize| self.atoms[i].clone();
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                if !self.top.contains(v) {
                    return Err(MetricError::OutOfRange {
                        a: name(i),
                        b: name(j),
                        value: v.to_string(),
                        top: self.top.to_string(),
                    });
                }
            }
            if !self.get(i, i).approx_eq(&Value::zero(), tol) {
                return Err(MetricError::NotReflexive(name(i)));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if !self.get(i, j).approx_eq(self.get(j, i), tol) {
                    return Err(MetricError::NotSymmetric { a: name(i), b: name(j) });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let via = add_ext(self.get(i, j), self.get(j, k), None);
                    if !self.get(i, k).le_tol(&via, tol) {
                        return Err(MetricError::Triangle {
                            a: name(i),
                            b: name(j),
                            c: name(k),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ratio;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    #[test]
    fn validates_axioms() {
        let v = Value::ratio;
        assert!(PseudometricTable::new(
            names(2),
            Top::one(),
            vec![vec![v(0, 1), v(1, 2)], vec![v(1, 2), v(0, 1)]]
        )
        .is_ok());
        assert!(matches!(
            PseudometricTable::new(names(2), Top::one(), vec![vec![v(0, 1), v(1, 2)], vec![v(1, 3), v(0, 1)]]),
            Err(MetricError::NotSymmetric { .. })
        ));
        assert!(matches!(
            PseudometricTable::new(names(2), Top::one(), vec![vec![v(1, 9), v(1, 2)], vec![v(1, 2), v(0, 1)]]),
            Err(MetricError::NotReflexive(_))
        ));
        assert!(matches!(
            PseudometricTable::new(names(2), Top::one(), vec![vec![v(0, 1), v(2, 1)], vec![v(2, 1), v(0, 1)]]),
            Err(MetricError::OutOfRange { .. })
        ));
        let bad = vec![
            vec![v(0, 1), v(1, 10), v(1, 1)],
            vec![v(1, 10), v(0, 1), v(1, 10)],
            vec![v(1, 1), v(1, 10), v(0, 1)],
        ];
        assert!(matches!(
            PseudometricTable::new(names(3), Top::one(), bad),
            Err(MetricError::Triangle { .. })
        ));
        assert!(matches!(
            PseudometricTable::new(vec!["x".into(), "x".into()], Top::one(), vec![vec![v(0, 1); 2]; 2]),
            Err(MetricError::DuplicateAtom(_))
        ));
    }

    #[test]
    fn infinite_distances_are_allowed_under_infinite_top() {
        let t = PseudometricTable::discrete(names(3), Top::Infinite).unwrap();
        assert_eq!(t.get(0, 2), &Value::Infinity);
        assert!(PseudometricTable::discrete(names(3), Top::one()).is_ok());
    }

    #[test]
    fn euclidean_points() {
        let t = PseudometricTable::euclidean(
            vec![("p".into(), ratio(2, 5)), ("q".into(), ratio(7, 10))],
            Top::one(),
        )
        .unwrap();
        assert_eq!(t.get(0, 1), &Value::ratio(3, 10));
    }
}

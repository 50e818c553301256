use std::collections::BTreeSet;

use thiserror::Error;

/// All couplings of two F-structures, each given in its node-specific form.
pub type CouplingSet<C> = Vec<C>;

/// Default cap on `|X1|·|X2|` for powerset coupling enumeration.
pub const DEFAULT_MAX_CELLS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CouplingError {
    #[error("coupling enumeration over {cells} cells exceeds the cap of {cap}")]
    Budget { cells: usize, cap: usize },
}

/// Every relation `T ⊆ X1 × X2` whose projections are exactly `X1` and `X2`.
/// Inputs are treated as sets; repeated elements are ignored.
pub fn enumerate_couplings_finpow<T: Clone + Ord>(
    x1: &[T],
    x2: &[T],
    max_cells: usize,
) -> Result<CouplingSet<Vec<(T, T)>>, CouplingError> {
    let a: Vec<T> = x1.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let b: Vec<T> = x2.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let cells = a.len() * b.len();
    if cells > max_cells || cells >= usize::BITS as usize {
        return Err(CouplingError::Budget { cells, cap: max_cells });
    }
    if a.is_empty() || b.is_empty() {
        return Ok(if a.is_empty() && b.is_empty() {
            vec![Vec::new()]
        } else {
            Vec::new()
        });
    }
    let m = b.len();
    let full_rows = (1usize << m) - 1;
    let mut out = Vec::new();
    for mask in 0usize..(1 << cells) {
        let rows_ok = (0..a.len()).all(|i| (mask >> (i * m)) & full_rows != 0);
        let cols_ok = (0..m).all(|j| (0..a.len()).any(|i| mask >> (i * m + j) & 1 == 1));
        if rows_ok && cols_ok {
            let rel = (0..cells)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| (a[k / m].clone(), b[k % m].clone()))
                .collect();
            out.push(rel);
        }
    }
    Ok(out)
}

/// The unique coupling of two pairs under `X ↦ X × X`: the pair of pairs
/// `((a1, b1), (a2, b2))` projecting to `(a1, a2)` and `(b1, b2)`.
pub fn enumerate_couplings_diagsquare<T: Clone>(
    t1: &(T, T),
    t2: &(T, T),
) -> CouplingSet<((T, T), (T, T))> {
    vec![((t1.0.clone(), t2.0.clone()), (t1.1.clone(), t2.1.clone()))]
}

/// The two projections of a relation.
pub fn projections<T: Clone + Ord>(rel: &[(T, T)]) -> (BTreeSet<T>, BTreeSet<T>) {
    (
        rel.iter().map(|p| p.0.clone()).collect(),
        rel.iter().map(|p| p.1.clone()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn singletons_have_one_coupling() {
        let c = enumerate_couplings_finpow(&['a'], &['b'], DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(c, vec![vec![('a', 'b')]]);
    }

    #[test]
    fn empty_sides() {
        let none: [char; 0] = [];
        assert!(enumerate_couplings_finpow(&none, &['b'], DEFAULT_MAX_CELLS)
            .unwrap()
            .is_empty());
        assert_eq!(
            enumerate_couplings_finpow(&none, &none, DEFAULT_MAX_CELLS).unwrap(),
            vec![Vec::<(char, char)>::new()]
        );
    }

    #[test]
    fn counts_match_surjective_relations() {
        // 2x2: 16 relations, of which 7 cover both sides.
        let c = enumerate_couplings_finpow(&[0, 1], &[0, 1], DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(c.len(), 7);
    }

    #[test]
    fn budget_is_enforced() {
        let big: Vec<u8> = (0..5).collect();
        assert_eq!(
            enumerate_couplings_finpow(&big, &big, DEFAULT_MAX_CELLS),
            Err(CouplingError::Budget { cells: 25, cap: 16 })
        );
    }

    #[test]
    fn diag_square_coupling() {
        let c = enumerate_couplings_diagsquare(&("x1", "x2"), &("x2", "x1"));
        assert_eq!(c, vec![(("x1", "x2"), ("x2", "x1"))]);
        assert_eq!(enumerate_couplings_diagsquare(&('a', 'b'), &('c', 'd')).len(), 1);
        let ((a1, b1), (a2, b2)) = c[0];
        assert_eq!(((a1, a2), (b1, b2)), (("x1", "x2"), ("x2", "x1")));
    }

    proptest! {
        #[test]
        fn couplings_project_exactly(
            x1 in proptest::collection::btree_set(0u8..5, 0..4),
            x2 in proptest::collection::btree_set(0u8..5, 0..4),
        ) {
            let a: Vec<u8> = x1.iter().copied().collect();
            let b: Vec<u8> = x2.iter().copied().collect();
            let cs = enumerate_couplings_finpow(&a, &b, DEFAULT_MAX_CELLS).unwrap();
            prop_assert_eq!(cs.is_empty(), a.is_empty() != b.is_empty());
            for rel in &cs {
                let (p1, p2) = projections(rel);
                prop_assert_eq!(&p1, &x1);
                prop_assert_eq!(&p2, &x2);
            }
        }
    }
}

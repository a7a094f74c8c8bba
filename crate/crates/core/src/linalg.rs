//! Sparse direct solves for the Newton systems. The sparsity pattern of a
//! problem is fixed, so the symbolic factorisation is computed once and
//! reused for every numeric factorisation.

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::SymbolicLu;
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Col;

use crate::error::{Error, Result};

pub(crate) struct SparsePattern {
    n: usize,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

impl SparsePattern {
    /// `entries` lists `(row, col)` in the order values will be supplied;
    /// repeated positions are summed.
    pub(crate) fn new(n: usize, entries: &[(usize, usize)]) -> Result<Self> {
        faer::set_global_parallelism(faer::Par::Seq);
        let pairs: Vec<Pair<usize, usize>> =
            entries.iter().map(|&(r, c)| Pair::new(r, c)).collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = SymbolicLu::try_new(symbolic.as_ref())
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        Ok(SparsePattern {
            n,
            symbolic,
            argsort,
            lu,
        })
    }

    /// Solves `A x = b` where `A` has entries `values` in pattern order.
    pub(crate) fn solve(&self, values: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let mat = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, values)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu =
            faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(self.lu.clone(), mat.as_ref())
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let b = Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular matrix".into()));
        }
        Ok(out)
    }
}

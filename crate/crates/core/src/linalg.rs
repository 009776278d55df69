//! Singular value tools built on the Hermitian eigensolver of the augmented
//! matrix `[[0, M], [M^H, 0]]`, whose eigenvalues are `+-sigma_i` (padded with
//! zeros) and whose eigenvectors are `(u; v) / sqrt 2`.
//!
//! nalgebra's bidiagonal SVD can return factors that do not reconstruct `M`
//! when singular values come in exact pairs, as they do for every real skew
//! matrix; the augmented eigenproblem has no such trouble.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

pub(crate) struct AugmentedEigen<T: ComplexField<RealField = f64>> {
    rows: usize,
    values: DVector<f64>,
    vectors: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64>> AugmentedEigen<T> {
    pub fn new(m: &DMatrix<T>) -> Self {
        let (r, c) = m.shape();
        let mut aug = DMatrix::<T>::zeros(r + c, r + c);
        aug.view_mut((0, r), (r, c)).copy_from(m);
        aug.view_mut((r, 0), (c, r)).copy_from(&m.adjoint());
        let eig = SymmetricEigen::new(aug);
        AugmentedEigen {
            rows: r,
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn halves(&self, idx: usize) -> (DVector<T>, DVector<T>) {
        let z = self.vectors.column(idx);
        let r = self.rows;
        (z.rows(0, r).into_owned(), z.rows(r, z.len() - r).into_owned())
    }

    /// Least-norm solution of `M x = b`, dropping `sigma <= tol`.
    pub fn solve(&self, b: &DVector<T>, tol: f64) -> DVector<T> {
        let mut x = DVector::<T>::zeros(self.vectors.nrows() - self.rows);
        for (idx, &lambda) in self.values.iter().enumerate() {
            if lambda > tol {
                let (zu, zv) = self.halves(idx);
                let coeff = zu.dotc(b).scale(2.0 / lambda);
                x += zv * coeff;
            }
        }
        x
    }

    /// Orthonormal basis of `ker M`: eigenvectors of `sum zv zv^H` over the
    /// `|lambda| <= tol` block, which is the projector onto the kernel.
    pub fn kernel(&self, tol: f64) -> Vec<DVector<T>> {
        let c = self.vectors.nrows() - self.rows;
        let mut p = DMatrix::<T>::zeros(c, c);
        for (idx, &lambda) in self.values.iter().enumerate() {
            if lambda.abs() <= tol {
                let (_, zv) = self.halves(idx);
                p += &zv * zv.adjoint();
            }
        }
        let eig = SymmetricEigen::new(p);
        (0..c)
            .filter(|&j| eig.eigenvalues[j] > 0.5)
            .map(|j| eig.eigenvectors.column(j).into_owned())
            .collect()
    }

    /// `(sigma_min, sigma_second, v, u)` for a square `M`, with `M v = sigma_min u`.
    ///
    /// The two eigenvalues nearest zero are `+-sigma_min`; their halves are
    /// multiples of `u` and `v` even when the two are numerically mixed.
    pub fn smallest_pair(&self) -> (f64, f64, DVector<T>, DVector<T>) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].abs().total_cmp(&self.values[b].abs()));
        let sigma_min = self.values[order[0]].abs();
        let second = order.get(2).map_or(f64::INFINITY, |&j| self.values[j].abs());
        let (u0, v0) = self.halves(order[0]);
        let (u1, v1) = self.halves(order[1]);
        let pick = |a: DVector<T>, b: DVector<T>| {
            let best = if a.norm() >= b.norm() { a } else { b };
            let norm = best.norm();
            best.unscale(norm)
        };
        (sigma_min, second, pick(v0, v1), pick(u0, u1))
    }
}

//! Block-tridiagonal linear systems with dense square blocks.
//!
//! Block Thomas elimination: no pivoting across blocks, partial pivoting
//! (nalgebra LU) inside each diagonal block.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::C64;

pub type Block = DMatrix<C64>;

/// `lower[i] x_{i-1} + diag[i] x_i + upper[i] x_{i+1} = rhs_i`.
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    pub block: usize,
    pub lower: Vec<Block>,
    pub diag: Vec<Block>,
    pub upper: Vec<Block>,
}

/// Elimination broke down at diagonal block `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotBreakdown {
    pub index: usize,
}

impl BlockTridiagonal {
    pub fn zeros(block: usize, n: usize) -> Self {
        let z = || vec![Block::zeros(block, block); n];
        Self {
            block,
            lower: z(),
            diag: z(),
            upper: z(),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        self.block * self.n_blocks()
    }

    /// `A x`
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let b = self.block;
        let n = self.n_blocks();
        let seg = |i: usize| DVectorView::from_slice(&x[i * b..(i + 1) * b], b);
        let mut out = vec![C64::new(0.0, 0.0); b * n];
        for i in 0..n {
            let mut y = &self.diag[i] * seg(i);
            if i > 0 {
                y += &self.lower[i] * seg(i - 1);
            }
            if i + 1 < n {
                y += &self.upper[i] * seg(i + 1);
            }
            out[i * b..(i + 1) * b].copy_from_slice(y.as_slice());
        }
        out
    }

    /// Solves in place; `rhs` holds the solution on success.
    pub fn solve(&self, rhs: &mut [C64]) -> Result<(), PivotBreakdown> {
        let b = self.block;
        let n = self.n_blocks();
        assert_eq!(rhs.len(), b * n, "right-hand side length");
        let mut gains: Vec<Block> = Vec::with_capacity(n);
        let mut zs: Vec<DVector<C64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut d = self.diag[i].clone();
            let mut r = DVector::from_column_slice(&rhs[i * b..(i + 1) * b]);
            if i > 0 {
                d -= &self.lower[i] * &gains[i - 1];
                r -= &self.lower[i] * &zs[i - 1];
            }
            let lu = d.lu();
            if !pivots_ok(lu.u().diagonal().as_slice()) {
                return Err(PivotBreakdown { index: i });
            }
            zs.push(lu.solve(&r).ok_or(PivotBreakdown { index: i })?);
            if i + 1 < n {
                gains.push(lu.solve(&self.upper[i]).ok_or(PivotBreakdown { index: i })?);
            }
        }
        rhs[(n - 1) * b..].copy_from_slice(zs[n - 1].as_slice());
        for i in (0..n - 1).rev() {
            let x = &zs[i] - &gains[i] * DVectorView::from_slice(&rhs[(i + 1) * b..(i + 2) * b], b);
            rhs[i * b..(i + 1) * b].copy_from_slice(x.as_slice());
        }
        if rhs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(PivotBreakdown { index: n - 1 });
        }
        Ok(())
    }

    /// Dense copy, for small reference solves.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let b = self.block;
        let n = self.n_blocks();
        let mut a = DMatrix::zeros(b * n, b * n);
        for i in 0..n {
            a.view_mut((i * b, i * b), (b, b)).copy_from(&self.diag[i]);
            if i > 0 {
                a.view_mut((i * b, (i - 1) * b), (b, b)).copy_from(&self.lower[i]);
            }
            if i + 1 < n {
                a.view_mut((i * b, (i + 1) * b), (b, b)).copy_from(&self.upper[i]);
            }
        }
        a
    }
}

fn pivots_ok(diag: &[C64]) -> bool {
    let max = diag.iter().map(|p| p.norm()).fold(0.0, f64::max);
    max > 0.0 && max.is_finite() && diag.iter().all(|p| p.norm() > 1e-14 * max)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small deterministic generator so the test needs no RNG crate.
    struct Lcg(u64);

    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        }

        fn complex(&mut self) -> C64 {
            C64::new(self.next(), self.next())
        }
    }

    fn random_system(b: usize, n: usize, seed: u64) -> BlockTridiagonal {
        let mut g = Lcg(seed);
        let mut sys = BlockTridiagonal::zeros(b, n);
        for i in 0..n {
            for r in 0..b {
                for c in 0..b {
                    sys.lower[i][(r, c)] = g.complex();
                    sys.upper[i][(r, c)] = g.complex();
                    sys.diag[i][(r, c)] = g.complex();
                }
                sys.diag[i][(r, r)] += C64::new(4.0 * b as f64, 1.0);
            }
        }
        sys
    }

    #[test]
    fn diagonal_system() {
        let mut sys = BlockTridiagonal::zeros(2, 3);
        for i in 0..3 {
            sys.diag[i] = Block::identity(2, 2) * C64::new(2.0, 0.0);
        }
        let mut rhs: Vec<C64> = (0..6).map(|i| C64::new(i as f64, 1.0)).collect();
        let expect: Vec<C64> = rhs.iter().map(|v| v / 2.0).collect();
        sys.solve(&mut rhs).unwrap();
        assert_eq!(rhs, expect);
    }

    #[test]
    fn matches_dense_lu() {
        for (b, n, seed) in [(1, 7, 1), (3, 5, 2), (5, 9, 3)] {
            let sys = random_system(b, n, seed);
            let mut g = Lcg(seed + 100);
            let rhs: Vec<C64> = (0..b * n).map(|_| g.complex()).collect();
            let mut x = rhs.clone();
            sys.solve(&mut x).unwrap();
            let dense = sys.to_dense().lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
            let diff = x.iter().zip(dense.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-10, "b = {b}, n = {n}: {diff}");
            let res = sys.apply(&x);
            let r = res.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn singular_block_is_reported() {
        let mut sys = BlockTridiagonal::zeros(2, 3);
        sys.diag[0] = Block::identity(2, 2);
        sys.diag[1] = Block::zeros(2, 2);
        sys.diag[2] = Block::identity(2, 2);
        let mut rhs = vec![C64::new(1.0, 0.0); 6];
        assert_eq!(sys.solve(&mut rhs), Err(PivotBreakdown { index: 1 }));
    }
}

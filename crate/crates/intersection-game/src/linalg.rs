//! Banded Gaussian elimination with partial pivoting.
//!
//! The collocation Newton systems are almost block-bidiagonal: ordering the
//! equations as initial conditions, per-interval collocation blocks, then
//! terminal conditions gives a matrix with `kl` sub- and `ku`
//! super-diagonals. Partial pivoting can push fill up to `kl` extra
//! super-diagonals, so each row stores the window `[i - kl, i + kl + ku]`.

/// Row-major banded matrix.
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    /// Column at which elimination broke down.
    pub col: usize,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Solve `A x = b` in place (`b` becomes `x`), destroying the matrix.
    pub fn solve_in_place(&mut self, b: &mut [f64]) -> Result<(), Singular> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        let reach = self.kl + self.ku;
        for k in 0..n {
            // pivot search within the sub-diagonal band
            let i_max = (k + kl).min(n - 1);
            let mut piv = k;
            let mut piv_abs = self.get(k, k).abs();
            for i in (k + 1)..=i_max {
                let a = self.get(i, k).abs();
                if a > piv_abs {
                    piv_abs = a;
                    piv = i;
                }
            }
            if piv_abs < 1e-300 {
                return Err(Singular { col: k });
            }
            let j_max = (k + reach).min(n - 1);
            if piv != k {
                for j in k..=j_max {
                    let a = self.get(k, j);
                    let b2 = self.get(piv, j);
                    self.set(k, j, b2);
                    self.set(piv, j, a);
                }
                b.swap(k, piv);
            }
            let pivot = self.get(k, k);
            for i in (k + 1)..=i_max {
                let m = self.get(i, k) / pivot;
                if m == 0.0 {
                    continue;
                }
                self.set(i, k, 0.0);
                for j in (k + 1)..=j_max {
                    let upd = self.get(i, j) - m * self.get(k, j);
                    self.set(i, j, upd);
                }
                b[i] -= m * b[k];
            }
        }
        // back substitution
        for k in (0..n).rev() {
            let j_max = (k + reach).min(n - 1);
            let mut acc = b[k];
            for j in (k + 1)..=j_max {
                acc -= self.get(k, j) * b[j];
            }
            b[k] = acc / self.get(k, k);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &mut Vec<Vec<f64>>, b: &mut [f64]) {
        let n = b.len();
        for k in 0..n {
            let mut piv = k;
            for i in (k + 1)..n {
                if a[i][k].abs() > a[piv][k].abs() {
                    piv = i;
                }
            }
            a.swap(k, piv);
            b.swap(k, piv);
            for i in (k + 1)..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in (k + 1)..n {
                acc -= a[k][j] * b[j];
            }
            b[k] = acc / a[k][k];
        }
    }

    fn xorshift(state: &mut u64) -> f64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn matches_dense_elimination_on_random_bands() {
        let mut seed = 42u64;
        for trial in 0..20 {
            let n = 30 + trial * 7;
            let kl = 5;
            let ku = 7;
            let mut band = BandedMatrix::new(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    let v = 2.0 * xorshift(&mut seed) - 1.0;
                    band.set(i, j, v);
                    dense[i][j] = v;
                }
                // keep the system comfortably solvable
                band.add(i, i, 4.0);
                dense[i][i] += 4.0;
            }
            let rhs: Vec<f64> = (0..n).map(|_| 2.0 * xorshift(&mut seed) - 1.0).collect();
            let mut xb = rhs.clone();
            band.solve_in_place(&mut xb).unwrap();
            let mut xd = rhs.clone();
            dense_solve(&mut dense, &mut xd);
            for (a, b) in xb.iter().zip(xd.iter()) {
                assert!((a - b).abs() < 1e-9, "banded {a} vs dense {b}");
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] x = [2, 3] -> x = [3, 2]
        let mut m = BandedMatrix::new(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let mut b = vec![2.0, 3.0];
        m.solve_in_place(&mut b).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-14);
        assert!((b[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reports_singularity() {
        let mut m = BandedMatrix::new(3, 1, 1);
        m.set(0, 0, 1.0);
        m.set(2, 2, 1.0);
        let mut b = vec![1.0, 1.0, 1.0];
        assert!(m.solve_in_place(&mut b).is_err());
    }
}

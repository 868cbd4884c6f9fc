//! Symmetric banded LDLᵀ without pivoting.
//!
//! Suited to quasi-definite KKT matrices ordered stage by stage, where the
//! half-bandwidth stays small and independent of the horizon length.

/// Lower band of a symmetric matrix: row `i` stores columns `i−bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// `y = M x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let base = i * (self.bw + 1) + self.bw - i;
            for j in lo..i {
                let a = self.data[base + j];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[base + i] * x[i];
        }
    }
}

/// Factor `L D Lᵀ` stored in band form (unit diagonal of `L` implied).
#[derive(Debug, Clone)]
pub struct BandLdl {
    l: BandMatrix,
    d: Vec<f64>,
}

impl BandLdl {
    /// Factorizes `m`. Returns `None` on a zero or non-finite pivot.
    pub fn factor(m: &BandMatrix) -> Option<Self> {
        let n = m.n;
        let bw = m.bw;
        let w = bw + 1;
        let mut l = m.clone();
        let mut d = vec![0.0; n];
        // Row-oriented; tmp[k − lo] holds L[i, k] d[k] for the current row.
        let mut tmp = vec![0.0; w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            for j in lo..i {
                let rj = j * w + bw - j;
                let mut s = l.data[ri + j];
                for k in lo..j {
                    s -= l.data[rj + k] * tmp[k - lo];
                }
                tmp[j - lo] = s;
                l.data[ri + j] = s / d[j];
            }
            let mut s = l.data[ri + i];
            for k in lo..i {
                s -= l.data[ri + k] * tmp[k - lo];
            }
            if !(s.is_finite()) || s == 0.0 {
                return None;
            }
            d[i] = s;
            l.data[ri + i] = 1.0;
        }
        Some(Self { l, d })
    }

    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|v| **v < 0.0).count()
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.d.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }

    /// Solves `L D Lᵀ x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        let n = self.l.n;
        let bw = self.l.bw;
        let w = bw + 1;
        let data = &self.l.data;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in lo..i {
                s -= data[ri + k] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let xi = x[i];
            for k in lo..i {
                x[k] -= data[ri + k] * xi;
            }
        }
    }
}

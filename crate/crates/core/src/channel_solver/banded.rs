//! Complex band LU with partial pivoting, stored column-wise with room for fill.

use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// column j holds rows j − kl − ku ..= j + kl at offsets 0 ..= 2kl + ku
    data: Vec<C64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self { n, kl, ku, data: vec![C64::new(0.0, 0.0); ld * n], pivots: vec![0; n], factored: false }
    }

    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ld() + (self.kl + self.ku + i - j)
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(i <= j + self.kl && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i > j + self.kl || j > i + self.ku + self.kl {
            return C64::new(0.0, 0.0);
        }
        self.data[self.slot(i, j)]
    }

    /// Replaces row i by the identity row, keeping the band shape.
    pub fn set_identity_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j);
            self.data[s] = C64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
        }
    }

    /// In-place factorisation; returns false on an exactly zero pivot.
    pub fn factor(&mut self) -> bool {
        let (n, kl, kv) = (self.n, self.kl, self.kl + self.ku);
        let mut ju = 0usize;
        for jc in 0..n {
            let km = kl.min(n - 1 - jc);
            let mut p = jc;
            let mut best = self.get(jc, jc).norm();
            for i in jc + 1..=jc + km {
                let v = self.data[self.slot(i, jc)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.pivots[jc] = p;
            if best == 0.0 {
                return false;
            }
            ju = ju.max((p + self.ku).min(n - 1));
            if p != jc {
                for c in jc..=ju {
                    let (a, b) = (self.slot(jc, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let piv = self.data[self.slot(jc, jc)];
            for i in jc + 1..=jc + km {
                let s = self.slot(i, jc);
                self.data[s] /= piv;
            }
            for c in jc + 1..=ju {
                let u = self.data[self.slot(jc, c)];
                if u == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in jc + 1..=jc + km {
                    let l = self.data[self.slot(i, jc)];
                    let s = self.slot(i, c);
                    self.data[s] -= l * u;
                }
            }
            debug_assert!(ju <= jc + kv);
        }
        self.factored = true;
        true
    }

    pub fn solve(&self, b: &mut [C64]) {
        assert!(self.factored);
        let (n, kl, kv) = (self.n, self.kl, self.kl + self.ku);
        for jc in 0..n {
            let p = self.pivots[jc];
            if p != jc {
                b.swap(jc, p);
            }
            let km = kl.min(n - 1 - jc);
            let bj = b[jc];
            for i in jc + 1..=jc + km {
                b[i] -= self.data[self.slot(i, jc)] * bj;
            }
        }
        for jc in (0..n).rev() {
            b[jc] /= self.data[self.slot(jc, jc)];
            let bj = b[jc];
            for i in jc.saturating_sub(kv)..jc {
                b[i] -= self.data[self.slot(i, jc)] * bj;
            }
        }
    }
}

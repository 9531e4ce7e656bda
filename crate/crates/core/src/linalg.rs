//! Small dense helpers: symmetric 3x3 matrices and their eigenvalues.

/// Symmetric 3x3 matrix stored by its six independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

/// Storage order of the six independent entries used by coefficient
/// fields: `xx, yy, zz, xy, xz, yz`.
pub const SYM3_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl Sym3 {
    pub fn identity() -> Self {
        Sym3::diagonal(1.0)
    }

    pub fn diagonal(d: f64) -> Self {
        Sym3 {
            xx: d,
            yy: d,
            zz: d,
            ..Default::default()
        }
    }

    pub fn from_components(c: [f64; 6]) -> Self {
        Sym3 {
            xx: c[0],
            yy: c[1],
            zz: c[2],
            xy: c[3],
            xz: c[4],
            yz: c[5],
        }
    }

    pub fn components(&self) -> [f64; 6] {
        [self.xx, self.yy, self.zz, self.xy, self.xz, self.yz]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            (2, 2) => self.zz,
            (0, 1) => self.xy,
            (0, 2) => self.xz,
            (1, 2) => self.yz,
            _ => panic!("Sym3 index out of range: ({i}, {j})"),
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn scale(&self, s: f64) -> Sym3 {
        Sym3::from_components(self.components().map(|c| c * s))
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        [
            self.xx * v[0] + self.xy * v[1] + self.xz * v[2],
            self.xy * v[0] + self.yy * v[1] + self.yz * v[2],
            self.xz * v[0] + self.yz * v[1] + self.zz * v[2],
        ]
    }

    pub fn quadratic_form(&self, v: [f64; 3]) -> f64 {
        let w = self.mul_vec(v);
        v[0] * w[0] + v[1] * w[1] + v[2] * w[2]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.components().iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Eigenvalues in ascending order by cyclic Jacobi rotations.
    ///
    /// Rotations run until every off-diagonal entry is negligible next to
    /// both diagonal entries it couples, which keeps repeated eigenvalues at
    /// full relative accuracy.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut a = [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ];
        for _sweep in 0..64 {
            let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
            if off == 0.0 {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let g = 100.0 * apq.abs();
                if a[p][p].abs() + g == a[p][p].abs() && a[q][q].abs() + g == a[q][q].abs() {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let r = 3 - p - q;
                let (arp, arq) = (a[r][p], a[r][q]);
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                a[r][p] = c * arp - s * arq;
                a[p][r] = a[r][p];
                a[r][q] = s * arp + c * arq;
                a[q][r] = a[r][q];
            }
        }
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(|x, y| x.total_cmp(y));
        d
    }
}

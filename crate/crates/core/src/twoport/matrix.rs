use serde::{Deserialize, Serialize};

use super::{Complex, ReferenceImpedance, TwoPortError};

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Two-port scattering matrix at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SMatrix {
    pub s11: Complex,
    pub s12: Complex,
    pub s21: Complex,
    pub s22: Complex,
}

impl SMatrix {
    pub fn new(s11: Complex, s12: Complex, s21: Complex, s22: Complex) -> Self {
        Self { s11, s12, s21, s22 }
    }

    /// Matched through connection.
    pub fn identity() -> Self {
        Self::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Entries in row-major order `[s11, s12, s21, s22]`.
    pub fn entries(&self) -> [Complex; 4] {
        [self.s11, self.s12, self.s21, self.s22]
    }

    pub fn determinant(&self) -> Complex {
        self.s11 * self.s22 - self.s12 * self.s21
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        // Eigenvalues of the Hermitian Gram matrix S^H S.
        let g11 = self.s11.norm_sqr() + self.s21.norm_sqr();
        let g22 = self.s12.norm_sqr() + self.s22.norm_sqr();
        let g12 = self.s11.conj() * self.s12 + self.s21.conj() * self.s22;
        let half_tr = 0.5 * (g11 + g22);
        let half_diff = 0.5 * (g11 - g22);
        let lambda = half_tr + (half_diff * half_diff + g12.norm_sqr()).sqrt();
        lambda.max(0.0).sqrt()
    }

    pub fn is_passive(&self, tol: f64) -> bool {
        self.spectral_norm() <= 1.0 + tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries().iter().zip(other.entries().iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Chain (transmission) parameters. `b` in ohms, `c` in siemens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcdMatrix {
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
}

impl AbcdMatrix {
    pub fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        Self { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))
    }

    pub fn series_impedance(z: Complex) -> Self {
        Self::new(c(1.0, 0.0), z, c(0.0, 0.0), c(1.0, 0.0))
    }

    pub fn shunt_admittance(y: Complex) -> Self {
        Self::new(c(1.0, 0.0), c(0.0, 0.0), y, c(1.0, 0.0))
    }

    pub fn determinant(&self) -> Complex {
        self.a * self.d - self.b * self.c
    }

    /// `self` followed by `next` along the signal path.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [(self.a, other.a), (self.b, other.b), (self.c, other.c), (self.d, other.d)]
            .iter()
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

pub fn abcd_to_s(m: &AbcdMatrix, z0: ReferenceImpedance) -> Result<SMatrix, TwoPortError> {
    let z0 = z0.ohms();
    let b_n = m.b / z0;
    let c_n = m.c * z0;
    let den = m.a + b_n + c_n + m.d;
    if den.norm() == 0.0 || !den.re.is_finite() || !den.im.is_finite() {
        return Err(TwoPortError::DegenerateConversion);
    }
    Ok(SMatrix {
        s11: (m.a + b_n - c_n - m.d) / den,
        s12: 2.0 * m.determinant() / den,
        s21: c(2.0, 0.0) / den,
        s22: (-m.a + b_n - c_n + m.d) / den,
    })
}

pub fn s_to_abcd(s: &SMatrix, z0: ReferenceImpedance) -> Result<AbcdMatrix, TwoPortError> {
    if s.s21.norm() == 0.0 {
        return Err(TwoPortError::NoThroughPath);
    }
    let z0 = z0.ohms();
    let one = c(1.0, 0.0);
    let p = s.s12 * s.s21;
    let den = 2.0 * s.s21;
    Ok(AbcdMatrix {
        a: ((one + s.s11) * (one - s.s22) + p) / den,
        b: z0 * ((one + s.s11) * (one + s.s22) - p) / den,
        c: ((one - s.s11) * (one - s.s22) - p) / (den * z0),
        d: ((one - s.s11) * (one + s.s22) + p) / den,
    })
}

/// Left-to-right chain product; the empty chain is the identity.
pub fn cascade(ms: &[AbcdMatrix]) -> AbcdMatrix {
    ms.iter().fold(AbcdMatrix::identity(), |acc, m| acc.then(m))
}

pub fn check_reciprocity(s: &SMatrix, tol: f64) -> bool {
    (s.s12 - s.s21).norm() <= tol
}

pub fn check_symmetry(s: &SMatrix, tol: f64) -> bool {
    (s.s11 - s.s22).norm() <= tol
}

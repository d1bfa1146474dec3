//! Angular and radial Mathieu functions of the first kind.
//!
//! The angular equation `y'' + (a - 2q cos 2 eta) y = 0` has periodic
//! solutions `ce_n` (cosine series) and `se_n` (sine series). Their Fourier
//! coefficients satisfy a three-term recurrence which, truncated to `M`
//! terms, is a symmetric tridiagonal eigenproblem. The same coefficients
//! feed the Bessel-product series for the radial functions `Mc_n^(1)`,
//! `Ms_n^(1)` solving `R'' - (a - 2q cosh 2 xi) R = 0`.

use serde::{Deserialize, Serialize};

use super::bessel::{self, fill_seq, signed};
use super::tridiag;
use crate::error::{Error, Result};

/// Truncation used for both the Fourier and the Bessel series.
pub const DEFAULT_TERMS: usize = 50;
/// Largest Mathieu parameter accepted by [`angular_solve`].
pub const Q_MAX: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// `ce_n` / `Mc_n`
    Even,
    /// `se_n` / `Ms_n`
    Odd,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Even => "even",
            Self::Odd => "odd",
        }
    }
}

/// Labels one Dirichlet eigenmode of the ellipse: angular order `n`,
/// parity, and the index `j` of the boundary root in increasing `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub order: u32,
    pub parity: Parity,
    pub radial_index: u32,
}

impl ModeSpec {
    pub fn new(order: u32, parity: Parity, radial_index: u32) -> Result<Self> {
        let spec = Self {
            order,
            parity,
            radial_index,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `Ms_1 se_1`, fifth boundary root.
    pub fn odd_1_5() -> Self {
        Self::new(1, Parity::Odd, 5).expect("valid preset")
    }

    /// `Mc_4 ce_4`, fourth boundary root.
    pub fn even_4_4() -> Self {
        Self::new(4, Parity::Even, 4).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        if self.parity == Parity::Odd && self.order == 0 {
            return Err(Error::InvalidParameter("odd modes need order >= 1".into()));
        }
        if self.radial_index == 0 {
            return Err(Error::InvalidParameter("radial index starts at 1".into()));
        }
        Ok(())
    }

    pub fn class(&self) -> HarmonicClass {
        match (self.parity, self.order % 2) {
            (Parity::Even, 0) => HarmonicClass::CosEven,
            (Parity::Even, _) => HarmonicClass::CosOdd,
            (Parity::Odd, 1) => HarmonicClass::SinOdd,
            (Parity::Odd, _) => HarmonicClass::SinEven,
        }
    }

    /// Position of this function's characteristic value within its class,
    /// counting from the smallest.
    pub fn rank(&self) -> usize {
        let n = self.order as usize;
        match self.class() {
            HarmonicClass::CosEven => n / 2,
            HarmonicClass::CosOdd | HarmonicClass::SinOdd => (n - 1) / 2,
            HarmonicClass::SinEven => (n - 2) / 2,
        }
    }

    pub fn label(&self) -> String {
        format!("({},{})-{}", self.order, self.radial_index, self.parity.as_str())
    }
}

/// The four families of periodic Mathieu functions, by the harmonics they
/// contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicClass {
    /// `ce_{2r}`: `cos(0), cos(2 eta), cos(4 eta), ...`
    CosEven,
    /// `ce_{2r+1}`: `cos(eta), cos(3 eta), ...`
    CosOdd,
    /// `se_{2r+1}`: `sin(eta), sin(3 eta), ...`
    SinOdd,
    /// `se_{2r+2}`: `sin(2 eta), sin(4 eta), ...`
    SinEven,
}

impl HarmonicClass {
    /// Harmonic number of the `r`-th coefficient.
    pub fn harmonic(self, r: usize) -> usize {
        match self {
            Self::CosEven => 2 * r,
            Self::CosOdd | Self::SinOdd => 2 * r + 1,
            Self::SinEven => 2 * r + 2,
        }
    }

    pub fn is_cosine(self) -> bool {
        matches!(self, Self::CosEven | Self::CosOdd)
    }
}

/// Symmetric tridiagonal matrix whose eigenpairs are the characteristic
/// values and (scaled) Fourier coefficients of one class. For `CosEven`
/// the first coefficient is carried as `sqrt(2) * A_0`.
pub fn recurrence_matrix(class: HarmonicClass, q: f64, terms: usize) -> (Vec<f64>, Vec<f64>) {
    let mut diag: Vec<f64> = (0..terms)
        .map(|r| (class.harmonic(r) as f64).powi(2))
        .collect();
    let mut off = vec![q; terms - 1];
    match class {
        HarmonicClass::CosEven => off[0] = std::f64::consts::SQRT_2 * q,
        HarmonicClass::CosOdd => diag[0] += q,
        HarmonicClass::SinOdd => diag[0] -= q,
        HarmonicClass::SinEven => {}
    }
    (diag, off)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngularSolution {
    pub spec: ModeSpec,
    pub q: f64,
    /// `a_n(q)` for even parity, `b_n(q)` for odd parity.
    pub char_value: f64,
    /// Fourier coefficients of the angular function, normalized so that
    /// `int_{-pi}^{pi} y^2 d eta = pi`.
    pub coeffs: Vec<f64>,
    class: HarmonicClass,
}

/// Characteristic value and Fourier coefficients of the angular function
/// named by `spec`, from a `terms x terms` truncation.
///
/// Sign convention: `ce_n(0) > 0` and `se_n'(0) > 0`.
pub fn angular_solve(spec: &ModeSpec, q: f64, terms: usize) -> Result<AngularSolution> {
    spec.validate()?;
    if !(q > 0.0 && q <= Q_MAX) {
        return Err(Error::InvalidParameter(format!(
            "Mathieu parameter q = {q} outside (0, {Q_MAX}]"
        )));
    }
    let rank = spec.rank();
    if terms < DEFAULT_TERMS || rank >= terms {
        return Err(Error::InvalidParameter(format!(
            "truncation {terms} too small for order {} (need >= {DEFAULT_TERMS})",
            spec.order
        )));
    }
    let class = spec.class();
    let (diag, off) = recurrence_matrix(class, q, terms);
    let eig = tridiag::solve(&diag, &off)?;
    let char_value = eig.values[rank];
    let mut coeffs = eig.vector(rank);
    if class == HarmonicClass::CosEven {
        coeffs[0] /= std::f64::consts::SQRT_2;
    }

    // ce_n(0) and se_n'(0) never vanish for real q; the fallback only
    // guards against a pathological cancellation.
    let anchor: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(r, c)| {
            if class.is_cosine() {
                *c
            } else {
                class.harmonic(r) as f64 * c
            }
        })
        .sum();
    let largest = coeffs.iter().copied().fold(0.0, |m: f64, c| if c.abs() > m.abs() { c } else { m });
    let sign = if anchor.abs() > 1e-12 * largest.abs() {
        anchor.signum()
    } else {
        largest.signum()
    };
    if sign < 0.0 {
        coeffs.iter_mut().for_each(|c| *c = -*c);
    }

    Ok(AngularSolution {
        spec: *spec,
        q,
        char_value,
        coeffs,
        class,
    })
}

impl AngularSolution {
    pub fn class(&self) -> HarmonicClass {
        self.class
    }

    pub fn parity(&self) -> Parity {
        self.spec.parity
    }

    pub fn order(&self) -> u32 {
        self.spec.order
    }

    /// Coefficients as the unit-norm eigenvector of the recurrence matrix.
    pub fn eigenvector(&self) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        if self.class == HarmonicClass::CosEven {
            v[0] *= std::f64::consts::SQRT_2;
        }
        v
    }

    /// `ce_n(eta, q)` or `se_n(eta, q)`.
    pub fn eval_angular(&self, eta: f64) -> f64 {
        // cos((m+2)t) = 2 cos(2t) cos(mt) - cos((m-2)t), and likewise for sin.
        let two_c2 = 2.0 * (2.0 * eta).cos();
        let (mut prev, mut cur) = match self.class {
            HarmonicClass::CosEven => ((2.0 * eta).cos(), 1.0),
            HarmonicClass::CosOdd => (eta.cos(), eta.cos()),
            HarmonicClass::SinOdd => (-eta.sin(), eta.sin()),
            HarmonicClass::SinEven => (0.0, (2.0 * eta).sin()),
        };
        let mut sum = 0.0;
        for &c in &self.coeffs {
            sum += c * cur;
            let next = two_c2 * cur - prev;
            prev = cur;
            cur = next;
        }
        sum
    }

    /// Radial function of the first kind with all stored coefficients.
    pub fn eval_radial(&self, xi: f64) -> Result<f64> {
        self.eval_radial_terms(xi, self.coeffs.len())
    }

    /// Radial function of the first kind from the first `terms` products of
    /// the shifted Bessel series
    ///
    /// `sum_l (-1)^(l+m) c_l / c_s [J_{l-s}(u1) J_{l+s+d}(u2) +- J_{l+s+d}(u1) J_{l-s}(u2)]`
    ///
    /// with `u1 = sqrt(q) e^-xi`, `u2 = sqrt(q) e^xi`, `d` the harmonic
    /// offset of the class and `s` the index of the largest coefficient.
    /// The ratio `c_l / c_s` makes the result independent of the
    /// eigenvector's scale and sign.
    pub fn eval_radial_terms(&self, xi: f64, terms: usize) -> Result<f64> {
        if !(xi >= 0.0) {
            return Err(Error::Domain(format!("radial coordinate {xi} must be >= 0")));
        }
        let terms = terms.min(self.coeffs.len());
        let h = self.q.sqrt();
        let (u1, u2) = (h * (-xi).exp(), h * xi.exp());
        let s = self
            .coeffs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let offset = match self.class {
            HarmonicClass::CosEven => 0,
            HarmonicClass::CosOdd | HarmonicClass::SinOdd => 1,
            HarmonicClass::SinEven => 2,
        };
        let max_order = (terms + s + offset).max(s + 1);
        if max_order > bessel::MAX_ORDER || u2 > bessel::MAX_ARG {
            return Err(Error::Domain(format!(
                "radial series at xi = {xi}, q = {} needs J_n(x) with n <= {max_order}, x = {u2:.3}",
                self.q
            )));
        }
        let mut j1 = vec![0.0; max_order + 1];
        let mut j2 = vec![0.0; max_order + 1];
        fill_seq(u1, &mut j1);
        fill_seq(u2, &mut j2);

        let m = self.spec.rank() as i64;
        let s_i = s as i64;
        let d = offset as i64;
        let cs = self.coeffs[s];
        let mut sum = 0.0;
        for (l, &c) in self.coeffs.iter().take(terms).enumerate() {
            let l = l as i64;
            let sign = if (l + m) % 2 == 0 { 1.0 } else { -1.0 };
            let lo = l - s_i;
            let hi = l + s_i + d;
            let a = signed(&j1, lo) * signed(&j2, hi);
            let b = signed(&j1, hi) * signed(&j2, lo);
            let pair = match self.class {
                HarmonicClass::CosEven => {
                    if s == 0 {
                        0.5 * (a + b)
                    } else {
                        a + b
                    }
                }
                HarmonicClass::CosOdd => a + b,
                HarmonicClass::SinOdd | HarmonicClass::SinEven => a - b,
            };
            sum += sign * (c / cs) * pair;
        }
        Ok(sum)
    }
}

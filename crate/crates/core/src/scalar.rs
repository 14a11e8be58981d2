//! Scalar functions the functional calculus is driven with: the compactly
//! supported bump `phi_n` and the clamp normalizing function `chi_n`.

/// `phi(x) = exp(1 - 1/(1 - x^2))` on `(-1, 1)`, zero elsewhere.
///
/// Even, smooth, `phi(0) = 1`, strictly increasing on `(-1, 0)` and
/// vanishing exactly on `|x| >= 1`.
pub fn bump(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

/// The rescaled bump `phi_n(x) = phi(n x)` with support `[-1/n, 1/n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BumpFunction {
    n: u32,
}

impl BumpFunction {
    pub fn new(n: u32) -> Self {
        assert!(n > 0, "bump scale must be positive");
        Self { n }
    }

    pub fn scale(&self) -> u32 {
        self.n
    }

    /// Radius of the support, `1/n`.
    pub fn radius(&self) -> f64 {
        1.0 / f64::from(self.n)
    }

    pub fn eval(&self, x: f64) -> f64 {
        bump(f64::from(self.n) * x)
    }

    /// Inverse on the decreasing branch `[0, 1/n]`: the unique `x` there with
    /// `phi_n(x) = y`, for `y` in `[0, 1]`.
    pub fn inverse_on_branch(&self, y: f64) -> f64 {
        if y >= 1.0 {
            return 0.0;
        }
        if y <= 0.0 {
            return self.radius();
        }
        // 1 - 1/(1-u^2) = ln y  =>  u^2 = -ln y / (1 - ln y)
        let l = y.ln();
        (-l / (1.0 - l)).sqrt() / f64::from(self.n)
    }
}

/// Normalizing function `chi_n(x) = clamp(n x, -1, 1)`.
///
/// Odd, non-decreasing, zero only at zero, and `chi_n^2 - 1` is supported in
/// `[-1/n, 1/n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizingFunction {
    n: u32,
}

impl NormalizingFunction {
    pub fn new(n: u32) -> Self {
        assert!(n > 0, "normalizing scale must be positive");
        Self { n }
    }

    pub fn scale(&self) -> u32 {
        self.n
    }

    pub fn radius(&self) -> f64 {
        1.0 / f64::from(self.n)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (f64::from(self.n) * x).clamp(-1.0, 1.0)
    }
}

/// Homotopy `x -> (1-t) x + t chi(x)` retracting onto contractions.
pub fn retraction(chi: NormalizingFunction, t: f64) -> impl Fn(f64) -> f64 {
    move |x| (1.0 - t) * x + t * chi.eval(x)
}

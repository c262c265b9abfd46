//! Uniform mesh on `[0, 1]`, stencils with Neumann ghost-node closure,
//! trapezoid quadrature and the norms built from it.

use std::ops::{Add, Deref, DerefMut, Mul, Sub};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
}

/// `n` equally spaced nodes `x_i = i * dx` with `dx = 1 / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    dx: f64,
}

impl Grid {
    pub fn new(n: usize) -> Result<Grid, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes(n));
        }
        Ok(Grid {
            n,
            dx: 1.0 / (n - 1) as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Node coordinate. The last node is exactly 1.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            1.0
        } else {
            i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    pub fn zeros(&self) -> Field {
        Field(vec![0.0; self.n])
    }

    pub fn constant(&self, c: f64) -> Field {
        Field(vec![c; self.n])
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.nodes().map(f).collect())
    }

    pub fn try_sample<E>(&self, f: impl Fn(f64) -> Result<f64, E>) -> Result<Field, E> {
        self.nodes()
            .map(f)
            .collect::<Result<Vec<_>, _>>()
            .map(Field)
    }

    /// Composite trapezoidal rule `dx (f_0/2 + f_1 + ... + f_{n-2} + f_{n-1}/2)`.
    pub fn trapezoid(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let interior: f64 = f[1..self.n - 1].iter().sum();
        self.dx * (0.5 * f[0] + interior + 0.5 * f[self.n - 1])
    }

    /// Discrete L² norm, the square root of the trapezoid of `f²`.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
        self.trapezoid(&sq).sqrt()
    }

    /// `[f(0)² + ∫ (f')² dx]^{1/2}` with `f'` from [`Grid::first_derivative`].
    pub fn h1_norm(&self, f: &[f64]) -> f64 {
        let d = self.first_derivative(f);
        let dsq: Vec<f64> = d.iter().map(|v| v * v).collect();
        (f[0] * f[0] + self.trapezoid(&dsq)).sqrt()
    }

    /// Central differences inside, second-order one-sided stencils at the ends.
    pub fn first_derivative(&self, f: &[f64]) -> Field {
        debug_assert_eq!(f.len(), self.n);
        let n = self.n;
        let inv2h = 0.5 / self.dx;
        let mut d = vec![0.0; n];
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
        for i in 1..n - 1 {
            d[i] = (f[i + 1] - f[i - 1]) * inv2h;
        }
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
        Field(d)
    }

    /// Derivative of a flux `q` in telescoping form: central in the interior,
    /// one-sided first order at the ends, so that
    /// `trapezoid(D q) = q(1) - q(0)` exactly.
    pub fn flux_derivative(&self, q: &[f64]) -> Field {
        debug_assert_eq!(q.len(), self.n);
        let n = self.n;
        let inv2h = 0.5 / self.dx;
        let mut d = vec![0.0; n];
        d[0] = (q[1] - q[0]) / self.dx;
        for i in 1..n - 1 {
            d[i] = (q[i + 1] - q[i - 1]) * inv2h;
        }
        d[n - 1] = (q[n - 1] - q[n - 2]) / self.dx;
        Field(d)
    }

    /// Three-point Laplacian with boundary slopes `f'(0) = g0`, `f'(1) = g1`
    /// imposed through ghost values `f_{-1} = f_1 - 2 dx g0` and
    /// `f_n = f_{n-2} + 2 dx g1`.
    pub fn neumann_laplacian(&self, f: &[f64], g0: f64, g1: f64) -> Field {
        debug_assert_eq!(f.len(), self.n);
        let n = self.n;
        let h = self.dx;
        let inv_h2 = 1.0 / (h * h);
        let mut l = vec![0.0; n];
        l[0] = (2.0 * (f[1] - f[0]) - 2.0 * h * g0) * inv_h2;
        for i in 1..n - 1 {
            l[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv_h2;
        }
        l[n - 1] = (2.0 * (f[n - 2] - f[n - 1]) + 2.0 * h * g1) * inv_h2;
        Field(l)
    }
}

/// Nodal values of one state variable at one time level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn zip_map(&self, other: &[f64], f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field(self.iter().zip(other).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl Add<&Field> for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub<&Field> for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Pointwise product.
impl Mul<&Field> for &Field {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        Field(rhs.iter().map(|v| self * v).collect())
    }
}

//! Fixed-size complex linear algebra for a single qubit.
//!
//! [`Mat2`] holds 2×2 operators, [`Vec4`] their column-stacked vectorization
//! and [`Super4`] the 4×4 superoperators acting on it. With column stacking,
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::Real;

/// Column-stacked vectorization of a 2×2 operator: `[x00, x10, x01, x11]`.
pub type Vec4<T> = [Complex<T>; 4];

#[inline]
fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
fn cre<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T>(pub [[Complex<T>; 2]; 2]);

impl<T: Real> Default for Mat2<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> Mat2<T> {
    pub fn zero() -> Self {
        Mat2([[czero(); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    pub fn diag(a: T, d: T) -> Self {
        Mat2([[cre(a), czero()], [czero(), cre(d)]])
    }

    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn sigma_x() -> Self {
        Mat2([[czero(), cre(T::one())], [cre(T::one()), czero()]])
    }

    pub fn sigma_y() -> Self {
        let i = Complex::new(T::zero(), T::one());
        Mat2([[czero(), -i], [i, czero()]])
    }

    pub fn sigma_z() -> Self {
        Self::diag(T::one(), -T::one())
    }

    /// `x σx + y σy + z σz`.
    pub fn from_bloch(x: T, y: T, z: T) -> Self {
        Mat2([
            [cre(z), Complex::new(x, -y)],
            [Complex::new(x, y), cre(-z)],
        ])
    }

    /// Density operator `(I + r·σ)/2`.
    pub fn density_from_bloch(x: T, y: T, z: T) -> Self {
        let half = T::lit(0.5);
        (Self::identity() + Self::from_bloch(x, y, z)).scale(half)
    }

    /// Bloch components `(tr(Aσx), tr(Aσy), tr(Aσz))/2` of the traceless part.
    pub fn bloch(&self) -> [T; 3] {
        let m = &self.0;
        let half = T::lit(0.5);
        let x = (m[0][1].re + m[1][0].re) * half;
        let y = (m[1][0].im - m[0][1].im) * half;
        let z = (m[0][0].re - m[1][1].re) * half;
        [x, y, z]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.0[r][c]
    }

    pub fn scale(&self, s: T) -> Self {
        self.scale_c(cre(s))
    }

    pub fn scale_c(&self, s: Complex<T>) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn conj(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[0][1].conj()],
            [m[1][0].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> Complex<T> {
        self.0[0][0] + self.0[1][1]
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(T::lit(0.5))
    }

    /// Max-norm distance from Hermiticity.
    pub fn hermiticity_defect(&self) -> T {
        (*self - self.adjoint()).max_abs()
    }

    /// Column-stacked vectorization.
    pub fn vec(&self) -> Vec4<T> {
        let m = &self.0;
        [m[0][0], m[1][0], m[0][1], m[1][1]]
    }

    pub fn from_vec(v: &Vec4<T>) -> Self {
        Mat2([[v[0], v[2]], [v[1], v[3]]])
    }

    /// Eigen-decomposition of a Hermitian matrix (only the Hermitian part is
    /// used). Returns ascending eigenvalues and a unitary whose columns are
    /// the matching eigenvectors.
    pub fn eigh(&self) -> ([T; 2], Mat2<T>) {
        let h = self.hermitian_part();
        let center = (h.0[0][0].re + h.0[1][1].re) * T::lit(0.5);
        let [x, y, z] = h.bloch();
        let radius = (x * x + y * y + z * z).sqrt();
        if radius == T::zero() {
            return ([center, center], Mat2::identity());
        }
        let (nx, ny, nz) = (x / radius, y / radius, z / radius);
        // Eigenvector of n·σ with eigenvalue +1, chosen away from the pole
        // where its first form degenerates.
        let plus = if nz >= T::zero() {
            let norm = (T::lit(2.0) * (T::one() + nz)).sqrt();
            [cre((T::one() + nz) / norm), Complex::new(nx / norm, ny / norm)]
        } else {
            let norm = (T::lit(2.0) * (T::one() - nz)).sqrt();
            [Complex::new(nx / norm, -ny / norm), cre((T::one() - nz) / norm)]
        };
        let minus = [-plus[1].conj(), plus[0].conj()];
        let u = Mat2([[minus[0], plus[0]], [minus[1], plus[1]]]);
        ([center - radius, center + radius], u)
    }

    /// Hilbert–Schmidt inner product `tr(A† B)`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        (self.adjoint() * *other).trace()
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl<T: Real> AddAssign for Mat2<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Row-major 4×4 complex superoperator over [`Vec4`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Super4<T>(pub [[Complex<T>; 4]; 4]);

impl<T: Real> Default for Super4<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> Super4<T> {
    pub fn zero() -> Self {
        Super4([[czero(); 4]; 4])
    }

    pub fn identity() -> Self {
        let mut s = Self::zero();
        for i in 0..4 {
            s.0[i][i] = cre(T::one());
        }
        s
    }

    /// Kronecker product `a ⊗ b`.
    pub fn kron(a: &Mat2<T>, b: &Mat2<T>) -> Self {
        let mut s = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        s.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                    }
                }
            }
        }
        s
    }

    /// Superoperator of `X ↦ A X B`.
    pub fn sandwich(left: &Mat2<T>, right: &Mat2<T>) -> Self {
        Self::kron(&right.transpose(), left)
    }

    /// Superoperator of `X ↦ A X`.
    pub fn left(a: &Mat2<T>) -> Self {
        Self::sandwich(a, &Mat2::identity())
    }

    /// Superoperator of `X ↦ X A`.
    pub fn right(a: &Mat2<T>) -> Self {
        Self::sandwich(&Mat2::identity(), a)
    }

    /// Superoperator of `X ↦ -i[H, X]`.
    pub fn hamiltonian(h: &Mat2<T>) -> Self {
        let minus_i = Complex::new(T::zero(), -T::one());
        (Self::left(h) - Self::right(h)).scale_c(minus_i)
    }

    #[inline]
    pub fn apply(&self, v: &Vec4<T>) -> Vec4<T> {
        let m = &self.0;
        let mut out = [czero(); 4];
        for (i, row) in m.iter().enumerate() {
            out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }

    /// Applies the conjugate transpose without forming it.
    #[inline]
    pub fn apply_adjoint(&self, v: &Vec4<T>) -> Vec4<T> {
        let m = &self.0;
        let mut out = [czero(); 4];
        for (j, o) in out.iter_mut().enumerate() {
            *o = m[0][j].conj() * v[0]
                + m[1][j].conj() * v[1]
                + m[2][j].conj() * v[2]
                + m[3][j].conj() * v[3];
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut s = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                s.0[i][j] = self.0[j][i].conj();
            }
        }
        s
    }

    pub fn scale(&self, s: T) -> Self {
        self.scale_c(cre(s))
    }

    pub fn scale_c(&self, s: Complex<T>) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for z in row.iter_mut() {
                *z = *z * s;
            }
        }
        out
    }

    /// `self + s·other`.
    #[inline]
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        let mut out = *self;
        for (row, orow) in out.0.iter_mut().zip(other.0.iter()) {
            for (z, o) in row.iter_mut().zip(orow.iter()) {
                *z = *z + *o * s;
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Add for Super4<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.add_scaled(T::one(), &rhs)
    }
}

impl<T: Real> Sub for Super4<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.add_scaled(-T::one(), &rhs)
    }
}

impl<T: Real> Mul for Super4<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut s = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = czero();
                for k in 0..4 {
                    acc = acc + self.0[i][k] * rhs.0[k][j];
                }
                s.0[i][j] = acc;
            }
        }
        s
    }
}

/// `a + s·b` on vectorized operators.
#[inline]
pub fn axpy<T: Real>(a: &Vec4<T>, s: T, b: &Vec4<T>) -> Vec4<T> {
    [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s, a[3] + b[3] * s]
}

/// Real pairing `Σ Re(conj(a_i) b_i)`.
#[inline]
pub fn real_pairing<T: Real>(a: &Vec4<T>, b: &Vec4<T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .fold(T::zero(), |acc, v| acc + v)
}

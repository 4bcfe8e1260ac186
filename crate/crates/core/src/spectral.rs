//! Uniform periodic grid on the unit circle and the discrete Fourier
//! calculus built on it: analysis/synthesis, spectral differentiation,
//! Fourier multipliers, dealiased products, and trigonometric interpolation
//! at arbitrary points.
//!
//! Conventions. Grid points are `x_i = i/N` with `N` even and `>= 16`.
//! Coefficients are
//!
//! ```text
//!   c_n = (1/N) sum_i f(x_i) e^{-2 pi i n x_i},
//! ```
//!
//! stored in FFT bin order `[0, 1, .., N/2 - 1, N/2, -N/2 + 1, .., -1]`,
//! so `c_0` is the grid mean and `d/dx` acts as multiplication by
//! `2 pi i n`. Real fields keep Hermitian symmetry `c_{-n} = conj(c_n)`;
//! every constructor that takes a raw spectrum projects onto that subspace.
//! The Nyquist mode `N/2` is zeroed by odd-order derivatives (its
//! derivative is ambiguous on a real grid) and interpolated as
//! `Re(c_{N/2}) cos(pi N x)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Smallest admissible grid.
pub const MIN_GRID: usize = 16;

/// Largest derivative order handed to [`Field::deriv`]; 2 k_max + 1 for the
/// supported metric orders.
pub const MAX_DERIV_ORDER: u32 = 9;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Signed wavenumber held by FFT bin `i` on an `n`-point grid; the Nyquist
/// bin reports `+n/2`.
pub fn bin_wavenumber(i: usize, n: usize) -> i64 {
    debug_assert!(i < n);
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < MIN_GRID || n % 2 != 0 {
        return Err(Error::InvalidGridSize { n });
    }
    Ok(())
}

fn analyze(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_forward(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

fn synthesize(spectrum: &[Complex64]) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    fft_inverse(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Real-valued 1-periodic grid function with a lazily computed spectral view.
///
/// Values are immutable after construction; all operations return new
/// fields, so concurrent use on distinct data is safe.
#[derive(Debug, Clone)]
pub struct Field {
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Field {
    /// Field from grid values at `x_i = i/N`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        check_grid(values.len())?;
        Ok(Field {
            values,
            spectrum: OnceLock::new(),
        })
    }

    /// Field sampling `f` on the `n`-point grid.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n)?;
        let values = (0..n).map(|i| f(i as f64 / n as f64)).collect();
        Ok(Field {
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(n, 0.0)
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        check_grid(n)?;
        Ok(Field {
            values: vec![c; n],
            spectrum: OnceLock::new(),
        })
    }

    /// Field from Fourier coefficients in FFT bin order. The input is
    /// projected onto the Hermitian subspace (`c_{-n} = conj(c_n)`, real
    /// mean and Nyquist), so the synthesized values are exactly real.
    pub fn from_spectrum(mut spectrum: Vec<Complex64>) -> Result<Self> {
        check_grid(spectrum.len())?;
        hermitian_project(&mut spectrum);
        Ok(Self::from_spectrum_raw(spectrum))
    }

    /// Internal constructor for spectra already known to be Hermitian
    /// (multiplier and derivative outputs).
    fn from_spectrum_raw(spectrum: Vec<Complex64>) -> Self {
        let values = synthesize(&spectrum);
        Field {
            values,
            spectrum: OnceLock::from(spectrum),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Grid points `x_i = i/N`.
    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.len() as f64;
        (0..self.len()).map(move |i| i as f64 / n)
    }

    /// Fourier coefficients in FFT bin order (computed on first use).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| analyze(&self.values))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// j-th spectral derivative: `c_n -> (2 pi i n)^j c_n`, Nyquist zeroed
    /// for odd `j`.
    pub fn deriv(&self, order: u32) -> Field {
        assert!(order <= MAX_DERIV_ORDER, "derivative order {order} too large");
        if order == 0 {
            return self.clone();
        }
        let n = self.len();
        let spec = self.spectrum();
        let mut out = Vec::with_capacity(n);
        for (i, &c) in spec.iter().enumerate() {
            if i == n / 2 && order % 2 == 1 {
                out.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let w = 2.0 * PI * bin_wavenumber(i, n) as f64;
            out.push(Complex64::new(0.0, w).powu(order) * c);
        }
        Field::from_spectrum_raw(out)
    }

    /// Pointwise product. With `dealias` set, modes `|n| > N/3` of both
    /// factors are zeroed before the multiplication and of the result after
    /// it (the 2/3 rule), so quadratic terms cannot alias back into the
    /// retained band.
    pub fn product(&self, other: &Field, dealias: bool) -> Field {
        assert_eq!(self.len(), other.len(), "product on mismatched grids");
        if !dealias {
            let values = self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect();
            return Field {
                values,
                spectrum: OnceLock::new(),
            };
        }
        let a = self.dealias_truncate();
        let b = other.dealias_truncate();
        let raw: Vec<f64> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x * y)
            .collect();
        Field {
            values: raw,
            spectrum: OnceLock::new(),
        }
        .dealias_truncate()
    }

    /// Copy with modes `|n| > N/3` zeroed.
    pub fn dealias_truncate(&self) -> Field {
        let n = self.len();
        let cutoff = (n / 3) as i64;
        let spec = self.spectrum();
        let out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if bin_wavenumber(i, n).abs() > cutoff {
                    Complex64::new(0.0, 0.0)
                } else {
                    c
                }
            })
            .collect();
        Field::from_spectrum_raw(out)
    }

    /// Pointwise quotient (no spectral truncation; the divisor must be
    /// bounded away from zero).
    pub fn pointwise_div(&self, other: &Field) -> Field {
        assert_eq!(self.len(), other.len(), "division on mismatched grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a / b)
            .collect();
        Field {
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            values: self.values.iter().map(|&v| f(v)).collect(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Field {
        self.zip_with(other, |x, y| x + a * y)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.len(), other.len(), "mismatched grids");
        Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            spectrum: OnceLock::new(),
        }
    }

    /// Trigonometric interpolant evaluated at arbitrary points (reduced
    /// mod 1); exact for band-limited data. Direct summation, O(N) per
    /// point.
    pub fn interpolate(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&x| self.eval(x)).collect()
    }

    /// Interpolant value at a single point.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_deriv(x).0
    }

    /// Interpolant value and first derivative at a single point, sharing
    /// one pass over the modes. The derivative matches `deriv(1)` exactly
    /// (Nyquist dropped).
    pub fn eval_with_deriv(&self, x: f64) -> (f64, f64) {
        let n = self.len();
        let half = n / 2;
        let spec = self.spectrum();
        let xr = x - x.floor();
        let z1 = Complex64::from_polar(1.0, 2.0 * PI * xr);
        let z2 = z1 * z1;
        let z3 = z2 * z1;
        let z4 = z2 * z2;

        // Four independent accumulators break the dependency chain of the
        // running power; s_m also accumulates m * c_m z^m for the slope.
        let mut a0 = Complex64::new(0.0, 0.0);
        let mut a1 = a0;
        let mut a2 = a0;
        let mut a3 = a0;
        let mut d0 = a0;
        let mut d1 = a0;
        let mut d2 = a0;
        let mut d3 = a0;
        let mut w = z1;
        let mut m = 1usize;
        while m + 4 <= half {
            let w0 = w;
            let w1 = w * z1;
            let w2 = w * z2;
            let w3 = w * z3;
            let t0 = spec[m] * w0;
            let t1 = spec[m + 1] * w1;
            let t2 = spec[m + 2] * w2;
            let t3 = spec[m + 3] * w3;
            a0 += t0;
            a1 += t1;
            a2 += t2;
            a3 += t3;
            d0 += t0 * m as f64;
            d1 += t1 * (m + 1) as f64;
            d2 += t2 * (m + 2) as f64;
            d3 += t3 * (m + 3) as f64;
            w = w * z4;
            m += 4;
        }
        while m < half {
            let t = spec[m] * w;
            a0 += t;
            d0 += t * m as f64;
            w = w * z1;
            m += 1;
        }
        let s = a0 + a1 + a2 + a3;
        let sd = d0 + d1 + d2 + d3;

        let nyq = spec[half].re;
        let phase = PI * (n as f64) * xr;
        let value = spec[0].re + 2.0 * s.re + nyq * phase.cos();
        // f' = 2 Re sum (2 pi i m) c_m z^m = -4 pi Im sum m c_m z^m.
        let slope = -4.0 * PI * sd.im;
        (value, slope)
    }
}

fn hermitian_project(spec: &mut [Complex64]) {
    let n = spec.len();
    spec[0] = Complex64::new(spec[0].re, 0.0);
    spec[n / 2] = Complex64::new(spec[n / 2].re, 0.0);
    for m in 1..n / 2 {
        let avg = 0.5 * (spec[m] + spec[n - m].conj());
        spec[m] = avg;
        spec[n - m] = avg.conj();
    }
}

/// Real Fourier multiplier `c_n -> sigma(n) c_n`.
///
/// For operators that are real and even (all `A_k` and their inverses) the
/// symbol satisfies `sigma(-n) = sigma(n)`; applying any symbol goes through
/// the Hermitian projection so the output stays real-valued.
#[derive(Debug, Clone)]
pub struct Multiplier {
    symbol: Vec<f64>,
}

impl Multiplier {
    /// Multiplier on an `n`-point grid with symbol `sigma(wavenumber)`.
    pub fn from_symbol(n: usize, sigma: impl Fn(i64) -> f64) -> Result<Self> {
        check_grid(n)?;
        Ok(Multiplier {
            symbol: (0..n).map(|i| sigma(bin_wavenumber(i, n))).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.symbol.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbol.is_empty()
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, f: &Field) -> Field {
        assert_eq!(self.len(), f.len(), "multiplier on mismatched grid");
        let mut spec: Vec<Complex64> = f
            .spectrum()
            .iter()
            .zip(&self.symbol)
            .map(|(&c, &s)| c * s)
            .collect();
        hermitian_project(&mut spec);
        Field::from_spectrum_raw(spec)
    }
}

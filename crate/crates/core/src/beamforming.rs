//! Sine-space sampling, steering vectors and received-signal pattern synthesis.
//!
//! Sign convention: a steering vector entry is `exp(+j 2pi (y u + z v))` with `(y, z)`
//! in wavelengths, and beamforming takes the inner product with its conjugate, so a
//! single target contributes a pattern peak of `|sigma| * unique_count` at its own
//! direction.

use std::io::{self, Write};

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, VirtualArray};
use crate::scalar::{ratio_db, Scalar};

/// `(u, v) = (sin(phi) sin(theta), cos(theta))` for angles in degrees.
///
/// `phi` must lie in `[-90, 90]` and `theta` in `[0, 180]`.
pub fn angles_to_uv<T: Scalar>(phi_deg: T, theta_deg: T) -> Result<(T, T)> {
    let ninety = T::lit(90.0);
    if !(phi_deg >= -ninety && phi_deg <= ninety) {
        return Err(Error::InvalidArgument(format!("azimuth {phi_deg} deg outside [-90, 90]")));
    }
    if !(theta_deg >= T::zero() && theta_deg <= T::lit(180.0)) {
        return Err(Error::InvalidArgument(format!("polar angle {theta_deg} deg outside [0, 180]")));
    }
    let (phi, theta) = (phi_deg.to_radians(), theta_deg.to_radians());
    Ok((phi.sin() * theta.sin(), theta.cos()))
}

/// Inverse of [`angles_to_uv`]: `(phi, theta)` in degrees, or `None` outside the real-angle
/// disk `u^2 + v^2 <= 1`. At the poles (`sin(theta) = 0`, `u = 0`) `phi` is reported as 0.
pub fn uv_to_angles<T: Scalar>(u: T, v: T) -> Option<(T, T)> {
    let tol = T::epsilon() * T::lit(8.0);
    if !(u * u + v * v <= T::one() + tol) {
        return None;
    }
    let v = v.max(-T::one()).min(T::one());
    let theta = v.acos();
    let sin_theta = (T::one() - v * v).max(T::zero()).sqrt();
    let phi = if sin_theta == T::zero() {
        if u.abs() > tol {
            return None;
        }
        T::zero()
    } else {
        (u / sin_theta).max(-T::one()).min(T::one()).asin()
    };
    Some((phi.to_degrees(), theta.to_degrees()))
}

/// Uniform `(u, v)` sample lattice.
///
/// `u_m = 2m/(M q_phi) - 1` for `0 <= m < M q_phi`, likewise for `v`. All samples lie in
/// `[-1, 1)`. A principal-plane cut ([`UvGrid::azimuth_cut`]) holds a single `v = 0` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvGrid<T: Scalar> {
    m: usize,
    n: usize,
    q_phi: usize,
    q_theta: usize,
    u: Vec<T>,
    v: Vec<T>,
}

fn sine_samples<T: Scalar>(base: usize, q: usize) -> Vec<T> {
    let count = base * q;
    let denom = T::from_index(count as i64);
    (0..count).map(|i| T::lit(2.0) * T::from_index(i as i64) / denom - T::one()).collect()
}

impl<T: Scalar> UvGrid<T> {
    pub fn new(m: usize, n: usize, q_phi: usize, q_theta: usize) -> Result<Self> {
        if m == 0 || n == 0 || q_phi == 0 || q_theta == 0 {
            return Err(Error::InvalidGrid(format!(
                "uv grid arguments must be >= 1 (M={m}, N={n}, q_phi={q_phi}, q_theta={q_theta})"
            )));
        }
        Ok(Self { m, n, q_phi, q_theta, u: sine_samples(m, q_phi), v: sine_samples(n, q_theta) })
    }

    /// `M q_phi` azimuth samples on the single elevation row `v = 0`.
    pub fn azimuth_cut(m: usize, q_phi: usize) -> Result<Self> {
        if m == 0 || q_phi == 0 {
            return Err(Error::InvalidGrid(format!("uv grid arguments must be >= 1 (M={m}, q_phi={q_phi})")));
        }
        Ok(Self { m, n: 1, q_phi, q_theta: 1, u: sine_samples(m, q_phi), v: vec![T::zero()] })
    }

    /// Evaluation grid sized to a virtual array: the base dimension on each axis is the
    /// occupied span rounded up to an even count, which puts broadside on a node for every
    /// oversampling factor. Arrays occupying a single row get an azimuth cut.
    pub fn covering(vrx: &VirtualArray<T>, q_phi: usize, q_theta: usize) -> Result<Self> {
        let even = |s: usize| s + s % 2;
        let m = even(vrx.span(Axis::Azimuth));
        if vrx.span(Axis::Elevation) == 1 {
            Self::azimuth_cut(m, q_phi)
        } else {
            Self::new(m, even(vrx.span(Axis::Elevation)), q_phi, q_theta)
        }
    }

    pub fn base_dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn oversampling(&self) -> (usize, usize) {
        (self.q_phi, self.q_theta)
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn nu(&self) -> usize {
        self.u.len()
    }

    pub fn nv(&self) -> usize {
        self.v.len()
    }

    pub fn len(&self) -> usize {
        self.u.len() * self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self, axis: Axis) -> &[T] {
        match axis {
            Axis::Azimuth => &self.u,
            Axis::Elevation => &self.v,
        }
    }

    /// Flat row-major index (`v` outer, `u` inner).
    #[inline]
    pub fn index(&self, iu: usize, iv: usize) -> usize {
        iv * self.u.len() + iu
    }

    /// Sample step along an axis (2 for a single-sample axis).
    pub fn step(&self, axis: Axis) -> T {
        let s = self.samples(axis);
        if s.len() > 1 {
            s[1] - s[0]
        } else {
            T::lit(2.0)
        }
    }

    /// Index of the sample nearest to `x` along an axis; ties go to the lower index.
    pub fn nearest(&self, axis: Axis, x: T) -> usize {
        let s = self.samples(axis);
        let mut best = 0;
        for (i, &si) in s.iter().enumerate() {
            if (si - x).abs() < (s[best] - x).abs() {
                best = i;
            }
        }
        best
    }
}

/// Far-field point target with complex skin return `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target<T: Scalar> {
    u: T,
    v: T,
    amplitude: Complex<T>,
}

impl<T: Scalar> Target<T> {
    /// The direction must be a real angle, `u^2 + v^2 <= 1`.
    pub fn new(u: T, v: T, amplitude: Complex<T>) -> Result<Self> {
        if !(u * u + v * v <= T::one() + T::epsilon() * T::lit(8.0)) {
            return Err(Error::InvalidArgument(format!(
                "target direction (u={u}, v={v}) is not a real angle"
            )));
        }
        Ok(Self { u, v, amplitude })
    }

    /// Unit-amplitude target at broadside, `(u, v) = (0, 0)`.
    pub fn broadside() -> Self {
        Self { u: T::zero(), v: T::zero(), amplitude: Complex::new(T::one(), T::zero()) }
    }

    pub fn u(&self) -> T {
        self.u
    }

    pub fn v(&self) -> T {
        self.v
    }

    pub fn amplitude(&self) -> Complex<T> {
        self.amplitude
    }
}

#[inline]
fn phasor<T: Scalar>(cycles: T) -> Complex<T> {
    Complex::cis(T::TAU() * cycles)
}

/// Per-VRX phasors `exp(+j 2pi (y u + z v))`, indexed like `vrx.positions()`.
pub fn steering_vector<T: Scalar>(vrx: &VirtualArray<T>, u: T, v: T) -> Vec<Complex<T>> {
    vrx.positions()
        .iter()
        .map(|&p| {
            let (y, z) = vrx.to_wavelengths(p);
            phasor(y * u + z * v)
        })
        .collect()
}

/// Complex received values at the virtual receivers, indexed like `vrx.positions()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot<T: Scalar> {
    values: Vec<Complex<T>>,
}

impl<T: Scalar> Snapshot<T> {
    pub fn new(values: Vec<Complex<T>>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![Complex::new(T::zero(), T::zero()); len] }
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, a: Complex<T>) -> Self {
        Self { values: self.values.iter().map(|&x| x * a).collect() }
    }

    /// Sum of entry magnitudes; bounds every pattern value.
    pub fn l1_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, x| acc + x.norm())
    }
}

/// Weighted sum of target steering vectors. An empty target list gives a zero snapshot.
pub fn synthesize_snapshot<T: Scalar>(vrx: &VirtualArray<T>, targets: &[Target<T>]) -> Snapshot<T> {
    let mut snap = Snapshot::zeros(vrx.unique_count());
    for t in targets {
        for (acc, s) in snap.values.iter_mut().zip(steering_vector(vrx, t.u, t.v)) {
            *acc += s * t.amplitude;
        }
    }
    snap
}

/// User-supplied square mutual-coupling matrix (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix<T: Scalar> {
    dim: usize,
    data: Vec<Complex<T>>,
    provenance: String,
}

impl<T: Scalar> CouplingMatrix<T> {
    pub fn new(dim: usize, data: Vec<Complex<T>>, provenance: impl Into<String>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: data.len() });
        }
        Ok(Self { dim, data, provenance: provenance.into() })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        Self { dim, data, provenance: "identity".into() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.data[row * self.dim + col]
    }
}

/// `C r`: applies mutual coupling to a snapshot ahead of beamforming.
pub fn apply_coupling<T: Scalar>(snapshot: &Snapshot<T>, coupling: &CouplingMatrix<T>) -> Result<Snapshot<T>> {
    if snapshot.len() != coupling.dim {
        return Err(Error::DimensionMismatch { expected: coupling.dim, actual: snapshot.len() });
    }
    let values = coupling
        .data
        .chunks_exact(coupling.dim)
        .map(|row| row.iter().zip(&snapshot.values).fold(Complex::new(T::zero(), T::zero()), |a, (c, r)| a + c * r))
        .collect();
    Ok(Snapshot { values })
}

/// Complex received-signal pattern over a [`UvGrid`], stored row-major (`v` outer).
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern<T: Scalar> {
    grid: UvGrid<T>,
    values: Vec<Complex<T>>,
    elements: usize,
}

impl<T: Scalar> Pattern<T> {
    /// Wraps precomputed values; `values.len()` must equal `grid.len()`.
    pub fn from_values(grid: UvGrid<T>, values: Vec<Complex<T>>, elements: usize) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), actual: values.len() });
        }
        Ok(Self { grid, values, elements })
    }

    pub fn grid(&self) -> &UvGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Number of virtual receivers the pattern was formed from.
    pub fn element_count(&self) -> usize {
        self.elements
    }

    pub fn value(&self, iu: usize, iv: usize) -> Complex<T> {
        self.values[self.grid.index(iu, iv)]
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.values.iter().map(|c| c.norm()).collect()
    }

    pub fn scaled(&self, a: T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&c| c * a).collect(), elements: self.elements }
    }

    /// Writes `u,v,re,im,mag_db`, row-major over `v` then `u`, with 17 significant digits.
    /// `mag_db` is relative to the pattern maximum and floored at -120 dB.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let floor = T::lit(-120.0);
        let peak = self.values.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        writeln!(w, "u,v,re,im,mag_db")?;
        for (iv, &v) in self.grid.v.iter().enumerate() {
            for (iu, &u) in self.grid.u.iter().enumerate() {
                let c = self.value(iu, iv);
                let db = if peak > T::zero() && c.norm() > T::zero() {
                    ratio_db(c.norm(), peak).max(floor)
                } else {
                    floor
                };
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    u.as_f64(),
                    v.as_f64(),
                    c.re.as_f64(),
                    c.im.as_f64(),
                    db.as_f64()
                )?;
            }
        }
        Ok(())
    }
}

fn check_snapshot<T: Scalar>(vrx: &VirtualArray<T>, snapshot: &Snapshot<T>) -> Result<()> {
    if snapshot.len() != vrx.unique_count() {
        return Err(Error::DimensionMismatch { expected: vrx.unique_count(), actual: snapshot.len() });
    }
    Ok(())
}

/// Pattern value at one direction: `conj(steering(u, v)) . snapshot`.
pub fn beamform_at<T: Scalar>(vrx: &VirtualArray<T>, snapshot: &Snapshot<T>, u: T, v: T) -> Result<Complex<T>> {
    check_snapshot(vrx, snapshot)?;
    Ok(steering_vector(vrx, u, v)
        .into_iter()
        .zip(&snapshot.values)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (b, r)| acc + b.conj() * r))
}

/// Beamforming-matrix evaluation: each grid node is one steering-vector row times the
/// snapshot. Works for arbitrary element positions; `O(P * |grid|)` phasors.
pub fn beamform_direct<T: Scalar>(
    vrx: &VirtualArray<T>,
    snapshot: &Snapshot<T>,
    grid: &UvGrid<T>,
) -> Result<Pattern<T>> {
    check_snapshot(vrx, snapshot)?;
    let nu = grid.nu();
    let mut values = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    values.par_chunks_mut(nu).enumerate().for_each(|(iv, row)| {
        let v = grid.v[iv];
        for (iu, out) in row.iter_mut().enumerate() {
            *out = beamform_at(vrx, snapshot, grid.u[iu], v).expect("snapshot length checked");
        }
    });
    Pattern::from_values(grid.clone(), values, vrx.unique_count())
}

/// Separable evaluation exploiting the uniform grid: the phasor of a VRX at `(m, n)` factors
/// into `exp(-j2pi m d_y u) * exp(-j2pi n d_z v)`, so only one table per distinct column and
/// one per distinct row is needed. Rows of the output are computed in parallel; each row
/// is written by exactly one worker.
pub fn beamform<T: Scalar>(vrx: &VirtualArray<T>, snapshot: &Snapshot<T>, grid: &UvGrid<T>) -> Result<Pattern<T>> {
    check_snapshot(vrx, snapshot)?;
    let zero = Complex::new(T::zero(), T::zero());
    let nu = grid.nu();
    let (d_y, d_z) = (vrx.grid().d_y(), vrx.grid().d_z());

    let mut cols: Vec<i64> = vrx.positions().iter().map(|p| p.m).collect();
    cols.sort_unstable();
    cols.dedup();
    let col_table: Vec<Complex<T>> = cols
        .iter()
        .flat_map(|&m| {
            let y = T::from_index(m) * d_y;
            grid.u.iter().map(move |&u| phasor(-(y * u)))
        })
        .collect();

    // Per-row partial sums over u: positions are sorted row-major, so rows are contiguous.
    let mut rows: Vec<i64> = Vec::new();
    let mut row_sums: Vec<Complex<T>> = Vec::new();
    for (p, s) in vrx.positions().iter().zip(&snapshot.values) {
        if rows.last() != Some(&p.n) {
            rows.push(p.n);
            row_sums.extend(std::iter::repeat_n(zero, nu));
        }
        let k = cols.binary_search(&p.m).expect("column present");
        let acc = &mut row_sums[(rows.len() - 1) * nu..];
        for (a, e) in acc.iter_mut().zip(&col_table[k * nu..(k + 1) * nu]) {
            *a += e * s;
        }
    }

    let mut values = vec![zero; grid.len()];
    values.par_chunks_mut(nu).enumerate().for_each(|(iv, out)| {
        let v = grid.v[iv];
        for (r, &n) in rows.iter().enumerate() {
            let w = phasor(-(T::from_index(n) * d_z * v));
            for (o, a) in out.iter_mut().zip(&row_sums[r * nu..(r + 1) * nu]) {
                *o += a * w;
            }
        }
    });
    Pattern::from_values(grid.clone(), values, vrx.unique_count())
}

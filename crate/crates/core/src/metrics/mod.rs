//! Pattern and layout scoring: PSLR with main-lobe masking, beamwidths, grating lobes,
//! usable field of view and aperture efficiency factors.

pub mod aperture;
mod report;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::beamforming::{uv_to_angles, Pattern};
use crate::error::{Error, Result};
use crate::geometry::{Axis, Dimensionality};
use crate::scalar::{ratio_db, Scalar};

pub use report::{compute_report, MetricsReport};

/// Rectangular sine-space field of view. Nodes outside the real-angle disk are always
/// excluded, so `Fov::default()`-style evaluation uses the full disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fov<T: Scalar> {
    pub u_min: T,
    pub u_max: T,
    pub v_min: T,
    pub v_max: T,
}

impl<T: Scalar> Fov<T> {
    /// `|u| <= sin(az)`, `|v| <= sin(el)` for one-sided extents in degrees.
    pub fn symmetric(az_deg: T, el_deg: T) -> Self {
        let su = az_deg.to_radians().sin().abs();
        let sv = el_deg.to_radians().sin().abs();
        Self { u_min: -su, u_max: su, v_min: -sv, v_max: sv }
    }

    pub fn contains(&self, u: T, v: T) -> bool {
        let tol = T::epsilon() * T::lit(8.0);
        u >= self.u_min - tol && u <= self.u_max + tol && v >= self.v_min - tol && v <= self.v_max + tol
    }
}

fn in_view<T: Scalar>(fov: Option<&Fov<T>>, u: T, v: T) -> bool {
    let real = u * u + v * v <= T::one() + T::epsilon() * T::lit(8.0);
    real && fov.is_none_or(|f| f.contains(u, v))
}

/// Pattern maximum and its grid node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T: Scalar> {
    pub magnitude: T,
    pub iu: usize,
    pub iv: usize,
    pub u: T,
    pub v: T,
}

/// Largest magnitude inside the field of view (default: the real-angle disk).
/// Ties go to the smallest `(v index, u index)`.
pub fn find_peak<T: Scalar>(pattern: &Pattern<T>, fov: Option<&Fov<T>>) -> Result<Peak<T>> {
    let grid = pattern.grid();
    let mut best: Option<Peak<T>> = None;
    for (iv, &v) in grid.v().iter().enumerate() {
        for (iu, &u) in grid.u().iter().enumerate() {
            if !in_view(fov, u, v) {
                continue;
            }
            let magnitude = pattern.value(iu, iv).norm();
            if best.is_none_or(|b| magnitude > b.magnitude) {
                best = Some(Peak { magnitude, iu, iv, u, v });
            }
        }
    }
    best.ok_or(Error::EmptyFieldOfView)
}

/// Main-lobe region: grid nodes reachable from the peak by 4-connected steps that never
/// increase in magnitude.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MainLobeMask {
    nu: usize,
    nv: usize,
    peak: (usize, usize),
    cells: Vec<bool>,
}

impl MainLobeMask {
    pub fn contains(&self, iu: usize, iv: usize) -> bool {
        self.cells[iv * self.nu + iu]
    }

    pub fn peak(&self) -> (usize, usize) {
        self.peak
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nu, self.nv)
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }
}

/// Flood fill from the peak admitting a neighbor iff its magnitude does not exceed that of
/// the node it is reached from. The admitted set is every node connected to the peak by a
/// non-increasing path, which does not depend on visiting order.
pub fn mask_main_lobe<T: Scalar>(pattern: &Pattern<T>, peak: (usize, usize)) -> MainLobeMask {
    let (nu, nv) = (pattern.grid().nu(), pattern.grid().nv());
    let mags = pattern.magnitudes();
    let mut cells = vec![false; nu * nv];
    let mut work = VecDeque::new();
    cells[peak.1 * nu + peak.0] = true;
    work.push_back(peak);
    while let Some((iu, iv)) = work.pop_front() {
        let here = mags[iv * nu + iu];
        let mut visit = |ju: usize, jv: usize| {
            let k = jv * nu + ju;
            if !cells[k] && mags[k] <= here {
                cells[k] = true;
                work.push_back((ju, jv));
            }
        };
        if iu > 0 {
            visit(iu - 1, iv);
        }
        if iu + 1 < nu {
            visit(iu + 1, iv);
        }
        if iv > 0 {
            visit(iu, iv - 1);
        }
        if iv + 1 < nv {
            visit(iu, iv + 1);
        }
    }
    MainLobeMask { nu, nv, peak, cells }
}

/// Peak, main-lobe mask and the strongest side lobe of a pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SidelobeAnalysis<T: Scalar> {
    pub peak: Peak<T>,
    pub mask: MainLobeMask,
    /// Strongest node outside the main lobe within the field of view, if any.
    pub sidelobe: Option<Peak<T>>,
    /// `20 log10(peak / sidelobe)`; `+inf` when there is no side-lobe energy.
    pub pslr_db: T,
}

pub fn analyze_sidelobes<T: Scalar>(pattern: &Pattern<T>, fov: Option<&Fov<T>>) -> Result<SidelobeAnalysis<T>> {
    let peak = find_peak(pattern, fov)?;
    let grid = pattern.grid();
    let mut lowest = T::infinity();
    for (iv, &v) in grid.v().iter().enumerate() {
        for (iu, &u) in grid.u().iter().enumerate() {
            if in_view(fov, u, v) {
                lowest = lowest.min(pattern.value(iu, iv).norm());
            }
        }
    }
    if !(peak.magnitude > lowest) {
        return Err(Error::DegeneratePattern("all magnitudes in the field of view are equal".into()));
    }
    let mask = mask_main_lobe(pattern, (peak.iu, peak.iv));
    let mut sidelobe: Option<Peak<T>> = None;
    for (iv, &v) in grid.v().iter().enumerate() {
        for (iu, &u) in grid.u().iter().enumerate() {
            if mask.contains(iu, iv) || !in_view(fov, u, v) {
                continue;
            }
            let magnitude = pattern.value(iu, iv).norm();
            if sidelobe.is_none_or(|s| magnitude > s.magnitude) {
                sidelobe = Some(Peak { magnitude, iu, iv, u, v });
            }
        }
    }
    let pslr_db = match sidelobe {
        Some(s) if s.magnitude > T::zero() => ratio_db(peak.magnitude, s.magnitude),
        _ => T::infinity(),
    };
    Ok(SidelobeAnalysis { peak, mask, sidelobe, pslr_db })
}

/// Peak-to-side-lobe ratio in dB within the field of view.
pub fn pslr<T: Scalar>(pattern: &Pattern<T>, fov: Option<&Fov<T>>) -> Result<T> {
    analyze_sidelobes(pattern, fov).map(|a| a.pslr_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beamwidths<T> {
    pub fnbw_deg: T,
    pub hpbw_deg: T,
}

/// Half-power beamwidth `0.886 / L` radians, in degrees. Defined for any `L > 0`.
pub fn theoretical_hpbw<T: Scalar>(aperture_wavelengths: T) -> Result<T> {
    if !(aperture_wavelengths > T::zero()) {
        return Err(Error::InvalidArgument(format!("aperture length must be positive, got {aperture_wavelengths}")));
    }
    Ok((T::lit(0.886) / aperture_wavelengths).to_degrees())
}

/// First-null `asin(1/L)` and half-power `0.886/L` beamwidths in degrees for an aperture of
/// `L` wavelengths. The first-null form needs `L >= 1`.
pub fn theoretical_beamwidths<T: Scalar>(aperture_wavelengths: T) -> Result<Beamwidths<T>> {
    let hpbw_deg = theoretical_hpbw(aperture_wavelengths)?;
    if aperture_wavelengths < T::one() {
        return Err(Error::FirstNullUndefined(aperture_wavelengths.as_f64()));
    }
    Ok(Beamwidths { fnbw_deg: (T::one() / aperture_wavelengths).asin().to_degrees(), hpbw_deg })
}

/// Linear interpolation of the half-power crossing walking away from `start` in `step`
/// direction along a cut.
fn crossing<T: Scalar>(samples: &[T], mags: &[T], start: usize, threshold: T, forward: bool) -> Option<T> {
    let mut prev = start;
    loop {
        let next = if forward {
            (prev + 1 < samples.len()).then_some(prev + 1)?
        } else {
            prev.checked_sub(1)?
        };
        if mags[next] < threshold {
            let f = (mags[prev] - threshold) / (mags[prev] - mags[next]);
            return Some(samples[prev] + f * (samples[next] - samples[prev]));
        }
        prev = next;
    }
}

/// Two-sided half-power beamwidth in degrees measured on the cut through the pattern peak.
///
/// The -3 dB (`1/sqrt(2)` magnitude) crossings are located by linear interpolation in sine
/// space on either side of the peak and converted to azimuth (`phi`) or polar (`theta`)
/// angles about the peak direction.
pub fn measured_hpbw<T: Scalar>(pattern: &Pattern<T>, axis: Axis) -> Result<T> {
    let peak = find_peak(pattern, None)?;
    let grid = pattern.grid();
    let threshold = peak.magnitude / T::lit(2.0).sqrt();
    let (samples, mags, start): (&[T], Vec<T>, usize) = match axis {
        Axis::Azimuth => (grid.u(), (0..grid.nu()).map(|i| pattern.value(i, peak.iv).norm()).collect(), peak.iu),
        Axis::Elevation => (grid.v(), (0..grid.nv()).map(|i| pattern.value(peak.iu, i).norm()).collect(), peak.iv),
    };
    let lo = crossing(samples, &mags, start, threshold, false)
        .ok_or_else(|| Error::CrossingNotFound(format!("{axis:?} cut has no lower -3 dB crossing")))?;
    let hi = crossing(samples, &mags, start, threshold, true)
        .ok_or_else(|| Error::CrossingNotFound(format!("{axis:?} cut has no upper -3 dB crossing")))?;
    let to_angle = |x: T| -> Result<T> {
        let (u, v) = match axis {
            Axis::Azimuth => (x, peak.v),
            Axis::Elevation => (peak.u, x),
        };
        let (phi, theta) = uv_to_angles(u, v)
            .ok_or_else(|| Error::CrossingNotFound(format!("crossing ({u}, {v}) is not a real angle")))?;
        Ok(match axis {
            Axis::Azimuth => phi,
            Axis::Elevation => theta,
        })
    };
    Ok((to_angle(hi)? - to_angle(lo)?).abs())
}

/// Grating-lobe directions (degrees) of a uniform array with spacing `d` wavelengths and a
/// target at `phi_t` degrees: `asin(n/d + sin(phi_t))` for every integer `n != 0` whose
/// argument lies in `[-1, 1]`, ascending.
pub fn grating_lobe_angles<T: Scalar>(d_lambda: T, phi_t_deg: T) -> Result<Vec<T>> {
    if !(d_lambda > T::zero()) {
        return Err(Error::InvalidArgument(format!("spacing must be positive, got {d_lambda}")));
    }
    let s = phi_t_deg.to_radians().sin();
    let tol = T::epsilon().sqrt();
    let n_lo = (d_lambda * (-T::one() - s) - tol).ceil().to_i64().unwrap_or(0);
    let n_hi = (d_lambda * (T::one() - s) + tol).floor().to_i64().unwrap_or(0);
    let mut out = Vec::new();
    for n in n_lo..=n_hi {
        if n == 0 {
            continue;
        }
        let gamma = T::from_index(n) / d_lambda + s;
        if gamma.abs() > T::one() + tol {
            continue;
        }
        let angle = gamma.max(-T::one()).min(T::one()).asin().to_degrees();
        if (angle - phi_t_deg).abs() > tol {
            out.push(angle);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    Ok(out)
}

/// One-sided grating-lobe-free field of view `asin(min(1, 1/(2d)))` in degrees.
pub fn ufov<T: Scalar>(d_lambda: T) -> Result<T> {
    if !(d_lambda > T::zero()) {
        return Err(Error::InvalidArgument(format!("spacing must be positive, got {d_lambda}")));
    }
    Ok((T::one() / (T::lit(2.0) * d_lambda)).min(T::one()).asin().to_degrees())
}

/// Virtual-aperture efficiency `A_vrx / (beta_v A_phy)`, `beta_v` = 2 (1D) or 4 (2D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureLoss<T: Scalar> {
    /// Ratio clamped to at most 1.
    pub value: T,
    /// Set when the raw ratio exceeded 1.
    pub anomaly: bool,
}

pub fn aperture_loss_factor<T: Scalar>(
    virtual_area: T,
    physical_area: T,
    dimensionality: Dimensionality,
) -> Result<ApertureLoss<T>> {
    if !(physical_area > T::zero()) {
        return Err(Error::InvalidArgument(format!("physical aperture must be positive, got {physical_area}")));
    }
    if !(virtual_area >= T::zero()) {
        return Err(Error::InvalidArgument(format!("virtual aperture must be non-negative, got {virtual_area}")));
    }
    let beta = match dimensionality {
        Dimensionality::Linear => T::lit(2.0),
        Dimensionality::Planar => T::lit(4.0),
    };
    let raw = virtual_area / (beta * physical_area);
    let tol = T::epsilon().sqrt();
    let anomaly = raw > T::one() + tol;
    Ok(ApertureLoss { value: raw.min(T::one()), anomaly })
}

/// Observed over theoretical half-power beamwidth.
pub fn bw_spreading_factor<T: Scalar>(observed_hpbw: T, theoretical_hpbw: T) -> Result<T> {
    if !(observed_hpbw > T::zero()) || !(theoretical_hpbw > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "beamwidths must be positive, got {observed_hpbw} and {theoretical_hpbw}"
        )));
    }
    Ok(observed_hpbw / theoretical_hpbw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{beamform, synthesize_snapshot, Target, UvGrid};
    use crate::geometry::{GridPoint, GridSpec, VirtualArray};
    use num_complex::Complex;

    fn ula(count: i64, d: f64) -> VirtualArray<f64> {
        let g = GridSpec::new(d, d, count as usize, 1).unwrap();
        VirtualArray::from_elements(g, (0..count).map(|m| GridPoint::new(m, 0)).collect()).unwrap()
    }

    fn broadside_pattern(vrx: &VirtualArray<f64>, grid: &UvGrid<f64>) -> Pattern<f64> {
        beamform(vrx, &synthesize_snapshot(vrx, &[Target::broadside()]), grid).unwrap()
    }

    fn synthetic(nu: usize, nv: usize, mags: Vec<f64>) -> Pattern<f64> {
        let grid = if nv == 1 { UvGrid::azimuth_cut(nu, 1) } else { UvGrid::new(nu, nv, 1, 1) }.unwrap();
        let values = mags.into_iter().map(|m| Complex::new(m, 0.0)).collect();
        Pattern::from_values(grid, values, 1).unwrap()
    }

    #[test]
    fn peak_of_broadside_ula() {
        let vrx = ula(16, 0.5);
        let p = broadside_pattern(&vrx, &UvGrid::azimuth_cut(16, 8).unwrap());
        let peak = find_peak(&p, None).unwrap();
        assert_eq!(peak.u, 0.0);
        assert!((peak.magnitude - 16.0).abs() < 1e-12);
    }

    #[test]
    fn peak_tie_breaks_on_first_node() {
        // 4x4 base grid over [-1, 1): only interior nodes are in the disk.
        let p = synthetic(4, 4, vec![1.0; 16]);
        let peak = find_peak(&p, None).unwrap();
        // (u, v) = (0, -1) is the first in-disk node in row-major order.
        assert_eq!((peak.iu, peak.iv), (2, 0));
    }

    #[test]
    fn empty_fov_is_an_error() {
        let p = synthetic(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
        let fov = Fov { u_min: 2.0, u_max: 3.0, v_min: 2.0, v_max: 3.0 };
        assert_eq!(find_peak(&p, Some(&fov)), Err(Error::EmptyFieldOfView));
    }

    #[test]
    fn mask_stops_at_first_nulls() {
        let vrx = ula(8, 0.5);
        let grid = UvGrid::azimuth_cut(8, 16).unwrap();
        let p = broadside_pattern(&vrx, &grid);
        let peak = find_peak(&p, None).unwrap();
        let mask = mask_main_lobe(&p, (peak.iu, peak.iv));
        for (iu, &u) in grid.u().iter().enumerate() {
            assert_eq!(mask.contains(iu, 0), u.abs() <= 0.25 + 1e-12, "u={u}");
        }
    }

    #[test]
    fn monotone_pattern_is_all_main_lobe() {
        let p = synthetic(6, 1, vec![6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(mask_main_lobe(&p, (0, 0)).count(), 6);
    }

    #[test]
    fn mask_does_not_cross_interlobe_minimum() {
        let p = synthetic(7, 1, vec![1.0, 5.0, 1.0, 0.5, 1.0, 5.0, 1.0]);
        let mask = mask_main_lobe(&p, (1, 0));
        let inside: Vec<usize> = (0..7).filter(|&i| mask.contains(i, 0)).collect();
        assert_eq!(inside, vec![0, 1, 2, 3]);
    }

    #[test]
    fn pslr_single_node_is_unbounded() {
        let mut mags = vec![0.0; 8];
        mags[4] = 3.0;
        let p = synthetic(8, 1, mags);
        assert_eq!(pslr(&p, None).unwrap(), f64::INFINITY);
    }

    #[test]
    fn pslr_of_flat_pattern_is_an_error() {
        let p = synthetic(8, 1, vec![2.0; 8]);
        assert!(matches!(pslr(&p, None), Err(Error::DegeneratePattern(_))));
    }

    #[test]
    fn pslr_two_lobes() {
        let p = synthetic(8, 1, vec![0.0, 1.0, 0.1, 0.5, 0.1, 0.0, 0.0, 0.0]);
        // -1, -0.75, ..., only |u| <= 1 nodes; peak 1.0 at index 1, sidelobe 0.5.
        assert!((pslr(&p, None).unwrap() - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn theoretical_beamwidth_values() {
        let b = theoretical_beamwidths(11.0f64).unwrap();
        assert!((b.fnbw_deg - 5.215908570454124).abs() < 1e-9);
        assert!((b.hpbw_deg - 4.614914604417358).abs() < 1e-9);
        assert!((theoretical_beamwidths(1.0f64).unwrap().fnbw_deg - 90.0).abs() < 1e-12);
        assert!((theoretical_beamwidths(32.0f64).unwrap().hpbw_deg - 1.5863768952684668).abs() < 1e-9);
        assert!(matches!(theoretical_beamwidths(0.5f64), Err(Error::FirstNullUndefined(_))));
        assert!(theoretical_beamwidths(0.0f64).is_err());
    }

    #[test]
    fn measured_hpbw_is_scale_invariant() {
        let vrx = ula(33, 0.5);
        let p = broadside_pattern(&vrx, &UvGrid::azimuth_cut(34, 16).unwrap());
        let a = measured_hpbw(&p, Axis::Azimuth).unwrap();
        let b = measured_hpbw(&p.scaled(7.5), Axis::Azimuth).unwrap();
        assert!((a - b).abs() < 1e-12);
        // A single row has no elevation cut.
        assert!(measured_hpbw(&p, Axis::Elevation).is_err());
    }

    #[test]
    fn grating_lobe_examples() {
        assert_eq!(grating_lobe_angles(0.5f64, 90.0).unwrap(), vec![-90.0]);
        let g = grating_lobe_angles(1.0f64, 30.0).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] + 30.0).abs() < 1e-9);
        assert!(grating_lobe_angles(0.4f64, 0.0).unwrap().is_empty());
        let g = grating_lobe_angles(1.5f64, 0.0).unwrap();
        assert_eq!(g.len(), 2);
        assert!((g[1] - (2.0f64 / 3.0).asin().to_degrees()).abs() < 1e-9);
        assert!(grating_lobe_angles(0.0f64, 0.0).is_err());
    }

    #[test]
    fn ufov_values() {
        assert_eq!(ufov(0.5f64).unwrap(), 90.0);
        assert_eq!(ufov(0.25f64).unwrap(), 90.0);
        assert!((ufov(2.0f64).unwrap() - 14.48).abs() < 0.005);
        assert!((ufov(20.0f64).unwrap() - 1.43).abs() < 0.005);
        assert!((ufov(1.0f64).unwrap() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn aperture_loss_flags_anomalies() {
        let a = aperture_loss_factor(3600.0, 900.0, Dimensionality::Planar).unwrap();
        assert_eq!(a, ApertureLoss { value: 1.0, anomaly: false });
        let a = aperture_loss_factor(60.0, 10.0, Dimensionality::Linear).unwrap();
        assert_eq!(a, ApertureLoss { value: 1.0, anomaly: true });
        assert!(aperture_loss_factor(1.0, 0.0, Dimensionality::Linear).is_err());
    }

    #[test]
    fn spreading_factor_is_a_ratio() {
        assert_eq!(bw_spreading_factor(2.0, 1.0).unwrap(), 2.0);
        assert!(bw_spreading_factor(0.0, 1.0).is_err());
    }
}

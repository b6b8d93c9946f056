use serde::{Deserialize, Serialize};

use crate::beamforming::Pattern;
use crate::error::Result;
use crate::geometry::{build_virtual_array, thinning_ratio_of, ArrayLayout, Axis, Dimensionality, GridSpec};
use crate::scalar::{serde_float, Scalar};

use super::{
    analyze_sidelobes, aperture_loss_factor, bw_spreading_factor, grating_lobe_angles, measured_hpbw,
    theoretical_beamwidths, ufov, Fov,
};

/// Flat summary of a layout and its pattern. Angles in degrees, PSLR in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<T: Scalar> {
    #[serde(with = "serde_float")]
    pub pslr_db: T,
    #[serde(with = "serde_float")]
    pub peak_u: T,
    #[serde(with = "serde_float")]
    pub peak_v: T,
    #[serde(with = "serde_float")]
    pub peak_magnitude: T,
    /// Two-sided measured half-power beamwidths.
    #[serde(with = "serde_float::option")]
    pub hpbw_az: Option<T>,
    #[serde(with = "serde_float::option")]
    pub hpbw_el: Option<T>,
    #[serde(with = "serde_float::option")]
    pub hpbw_az_one_sided: Option<T>,
    #[serde(with = "serde_float::option")]
    pub hpbw_el_one_sided: Option<T>,
    /// Closed-form beamwidths of the virtual aperture length on each axis.
    #[serde(with = "serde_float::option")]
    pub hpbw_theory_az: Option<T>,
    #[serde(with = "serde_float::option")]
    pub hpbw_theory_el: Option<T>,
    #[serde(with = "serde_float::option")]
    pub fnbw_az: Option<T>,
    #[serde(with = "serde_float::option")]
    pub fnbw_el: Option<T>,
    #[serde(with = "serde_float")]
    pub ufov_az: T,
    #[serde(with = "serde_float")]
    pub ufov_el: T,
    pub grating_lobes_az: Vec<T>,
    pub grating_lobes_el: Vec<T>,
    #[serde(with = "serde_float")]
    pub thinning_ratio: T,
    #[serde(with = "serde_float::option")]
    pub aperture_loss_factor: Option<T>,
    pub aperture_loss_anomaly: bool,
    #[serde(with = "serde_float::option")]
    pub bw_spreading_az: Option<T>,
    #[serde(with = "serde_float::option")]
    pub bw_spreading_el: Option<T>,
    pub vrx_generated: usize,
    pub vrx_unique: usize,
}

fn bbox_extent<T: Scalar>(grid: &GridSpec<T>, points: impl Iterator<Item = (i64, i64)> + Clone) -> (T, T) {
    let span = |f: fn(&(i64, i64)) -> i64| {
        let lo = points.clone().map(|p| f(&p)).min().unwrap_or(0);
        let hi = points.clone().map(|p| f(&p)).max().unwrap_or(0);
        T::from_index(hi - lo)
    };
    (span(|p| p.0) * grid.d_y(), span(|p| p.1) * grid.d_z())
}

fn bbox_measure<T: Scalar>(extent: (T, T), dim: Dimensionality) -> T {
    match dim {
        Dimensionality::Planar => extent.0 * extent.1,
        Dimensionality::Linear => extent.0.max(extent.1),
    }
}

/// Scores `layout` together with a pattern computed from its virtual array.
///
/// `fov` restricts the PSLR search; `reference` is the fully populated grid used for the
/// thinning ratio and defaults to the layout's virtual grid.
pub fn compute_report<T: Scalar>(
    layout: &ArrayLayout<T>,
    pattern: &Pattern<T>,
    fov: Option<&Fov<T>>,
    reference: Option<&GridSpec<T>>,
) -> Result<MetricsReport<T>> {
    let vrx = build_virtual_array(layout)?;
    let sl = analyze_sidelobes(pattern, fov)?;
    let peak = sl.peak;

    let hpbw = |axis| measured_hpbw(pattern, axis).ok();
    let (hpbw_az, hpbw_el) = (hpbw(Axis::Azimuth), hpbw(Axis::Elevation));
    let theory = |axis| theoretical_beamwidths(vrx.aperture_length(axis)).ok();
    let (th_az, th_el) = (theory(Axis::Azimuth), theory(Axis::Elevation));

    let spacing = |axis| vrx.min_spacing(axis);
    let ufov_of = |axis| spacing(axis).map_or(Ok(T::lit(90.0)), ufov);
    let peak_angle = |s: T| s.max(-T::one()).min(T::one()).asin().to_degrees();
    let lobes = |axis, s: T| spacing(axis).map_or(Ok(Vec::new()), |d| grating_lobe_angles(d, peak_angle(s)));

    let virtual_grid = layout.grid().virtual_grid();
    let thinning_ratio = thinning_ratio_of(&vrx, reference.unwrap_or(&virtual_grid))?;

    let physical: Vec<(i64, i64)> = layout.tx().iter().chain(layout.rx()).map(|p| (p.m, p.n)).collect();
    let dim = if physical.iter().all(|p| p.1 == physical[0].1) || physical.iter().all(|p| p.0 == physical[0].0) {
        Dimensionality::Linear
    } else {
        Dimensionality::Planar
    };
    let a_phy = bbox_measure(bbox_extent(layout.grid(), physical.iter().copied()), dim);
    let a_vrx = bbox_measure(bbox_extent(layout.grid(), vrx.positions().iter().map(|p| (p.m, p.n))), dim);
    let loss = aperture_loss_factor(a_vrx, a_phy, dim).ok();

    let spread = |obs: Option<T>, th: Option<super::Beamwidths<T>>| match (obs, th) {
        (Some(o), Some(t)) => bw_spreading_factor(o, t.hpbw_deg).ok(),
        _ => None,
    };
    let half = |x: Option<T>| x.map(|w| w * T::lit(0.5));

    Ok(MetricsReport {
        pslr_db: sl.pslr_db,
        peak_u: peak.u,
        peak_v: peak.v,
        peak_magnitude: peak.magnitude,
        hpbw_az,
        hpbw_el,
        hpbw_az_one_sided: half(hpbw_az),
        hpbw_el_one_sided: half(hpbw_el),
        hpbw_theory_az: th_az.map(|b| b.hpbw_deg),
        hpbw_theory_el: th_el.map(|b| b.hpbw_deg),
        fnbw_az: th_az.map(|b| b.fnbw_deg),
        fnbw_el: th_el.map(|b| b.fnbw_deg),
        ufov_az: ufov_of(Axis::Azimuth)?,
        ufov_el: ufov_of(Axis::Elevation)?,
        grating_lobes_az: lobes(Axis::Azimuth, peak.u)?,
        grating_lobes_el: lobes(Axis::Elevation, peak.v)?,
        thinning_ratio,
        aperture_loss_factor: loss.map(|l| l.value),
        aperture_loss_anomaly: loss.is_some_and(|l| l.anomaly),
        bw_spreading_az: spread(hpbw_az, th_az),
        bw_spreading_el: spread(hpbw_el, th_el),
        vrx_generated: vrx.generated_count(),
        vrx_unique: vrx.unique_count(),
    })
}

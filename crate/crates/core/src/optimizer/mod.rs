//! Constrained randomized layout search.
//!
//! A design starts from arithmetic-progression ("HIA") spacings snapped onto the reference
//! grid, then repeatedly proposes shuffled or perturbed neighbors and keeps those that raise
//! the broadside PSLR inside the target field of view.

mod propose;
mod trace;

use std::collections::HashSet;
use std::fmt::Display;

use num_traits::Num;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{beamform, synthesize_snapshot, Target, UvGrid};
use crate::error::{Error, Result};
use crate::geometry::{
    build_virtual_array, footprints_overlap, ArrayLayout, Axis, Dimensionality, ElementKind, ElementSize,
    ForbiddenZone, GridPoint, GridSpec,
};
use crate::metrics::{pslr, Fov};
use crate::scalar::Scalar;

pub use propose::{propose_candidate, Move, Proposal, MAX_ATTEMPTS};
pub use trace::{IterationRecord, OptimizerTrace, Termination, TraceSummary};

fn default_ufov<T: Scalar>() -> T {
    T::lit(90.0)
}
fn default_oversampling() -> usize {
    8
}
fn default_intensity() -> usize {
    3
}
fn default_true() -> bool {
    true
}
fn default_plateau_window() -> usize {
    3
}
fn default_plateau_db<T: Scalar>() -> T {
    T::lit(0.5)
}
fn default_batch() -> usize {
    1
}

/// Design targets, constraints and search settings, as read from a config file.
///
/// Angles are in degrees and lengths in wavelengths. The physical aperture comes from
/// `aperture` when given, otherwise from the half-power beamwidth targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec<T: Scalar> {
    pub dimensionality: Dimensionality,
    pub n_tx: usize,
    pub n_rx: usize,
    pub target_ufov_az: T,
    #[serde(default = "default_ufov")]
    pub target_ufov_el: T,
    #[serde(default)]
    pub target_hpbw_az: Option<T>,
    #[serde(default)]
    pub target_hpbw_el: Option<T>,
    pub tx_size: ElementSize<T>,
    pub rx_size: ElementSize<T>,
    #[serde(default)]
    pub zones: Vec<ForbiddenZone<T>>,
    #[serde(default)]
    pub enforced_tx: Vec<GridPoint>,
    #[serde(default)]
    pub enforced_rx: Vec<GridPoint>,
    #[serde(default)]
    pub desired_pslr_db: Option<T>,
    pub k_max: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_oversampling")]
    pub q_phi: usize,
    #[serde(default = "default_oversampling")]
    pub q_theta: usize,
    /// Physical aperture extent `[Y, Z]`.
    #[serde(default)]
    pub aperture: Option<[T; 2]>,
    /// Grid spacing `[d_y, d_z]`, overriding the spacing implied by the uFOV targets.
    #[serde(default)]
    pub grid_spacing: Option<[T; 2]>,
    #[serde(default = "default_intensity")]
    pub intensity: usize,
    #[serde(default = "default_true")]
    pub hia: bool,
    /// Number of consecutive accepted improvements compared for the plateau rule; 0 disables it.
    #[serde(default = "default_plateau_window")]
    pub plateau_window: usize,
    #[serde(default = "default_plateau_db")]
    pub plateau_db: T,
    /// Candidates evaluated concurrently per step.
    #[serde(default = "default_batch")]
    pub batch: usize,
}

impl<T: Scalar> DesignSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad(format!("element budgets must be >= 1 (n_tx={}, n_rx={})", self.n_tx, self.n_rx));
        }
        if self.enforced_tx.len() > self.n_tx || self.enforced_rx.len() > self.n_rx {
            return bad("enforced positions exceed the element budget".into());
        }
        if self.k_max == 0 {
            return bad("k_max must be >= 1".into());
        }
        if self.q_phi == 0 || self.q_theta == 0 || self.batch == 0 {
            return bad("q_phi, q_theta and batch must be >= 1".into());
        }
        let ninety = T::lit(90.0);
        for (name, u) in [("target_ufov_az", self.target_ufov_az), ("target_ufov_el", self.target_ufov_el)] {
            if !(u > T::zero() && u <= ninety) {
                return bad(format!("{name} must lie in (0, 90], got {u}"));
            }
        }
        if !(self.plateau_db >= T::zero()) {
            return bad(format!("plateau_db must be >= 0, got {}", self.plateau_db));
        }
        Ok(())
    }

    fn ufov(&self, axis: Axis) -> T {
        match axis {
            Axis::Azimuth => self.target_ufov_az,
            Axis::Elevation => self.target_ufov_el,
        }
    }

    fn hpbw(&self, axis: Axis) -> Option<T> {
        match axis {
            Axis::Azimuth => self.target_hpbw_az,
            Axis::Elevation => self.target_hpbw_el,
        }
    }

    fn axes(&self) -> &'static [Axis] {
        match self.dimensionality {
            Dimensionality::Linear => &[Axis::Azimuth],
            Dimensionality::Planar => &Axis::BOTH,
        }
    }
}

/// Grid spacing whose grating-lobe-free field of view is `ufov_deg`: `1 / (2 sin(ufov))`,
/// or half a wavelength for a full hemisphere.
pub fn spacing_for_ufov<T: Scalar>(ufov_deg: T) -> Result<T> {
    if !(ufov_deg > T::zero() && ufov_deg <= T::lit(90.0)) {
        return Err(Error::InvalidArgument(format!("uFOV must lie in (0, 90], got {ufov_deg}")));
    }
    if ufov_deg >= T::lit(90.0) {
        return Ok(T::lit(0.5));
    }
    Ok(T::one() / (T::lit(2.0) * ufov_deg.to_radians().sin()))
}

/// Virtual aperture length `0.886 / hpbw` (radians) giving a two-sided half-power
/// beamwidth of `hpbw_deg`.
pub fn aperture_for_hpbw<T: Scalar>(hpbw_deg: T) -> Result<T> {
    if !(hpbw_deg > T::zero()) {
        return Err(Error::InvalidArgument(format!("target HPBW must be positive, got {hpbw_deg}")));
    }
    let l = T::lit(0.886) / hpbw_deg.to_radians();
    if l < T::one() {
        return Err(Error::InvalidArgument(format!(
            "target HPBW {hpbw_deg} deg implies a virtual aperture of {l} wavelengths (< 1)"
        )));
    }
    Ok(l)
}

/// Reference grid of a design and the virtual aperture it supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGrid<T: Scalar> {
    pub grid: GridSpec<T>,
    /// Virtual aperture length per axis `(L_y, L_z)`.
    pub virtual_aperture: (T, T),
}

/// Physical reference grid for a spec: spacing from the uFOV targets (or the override),
/// extent from the aperture override or half the virtual aperture implied by the HPBW
/// targets, and `floor(extent / d) + 1` nodes per axis.
pub fn derive_grid<T: Scalar>(spec: &DesignSpec<T>) -> Result<DerivedGrid<T>> {
    spec.validate()?;
    let mut spacing = [T::lit(0.5); 2];
    let mut nodes = [1usize; 2];
    let mut length = [T::zero(); 2];
    for (i, &axis) in spec.axes().iter().enumerate() {
        let d = match spec.grid_spacing {
            Some(s) if s[i] > T::zero() => s[i],
            Some(s) => return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {}", s[i]))),
            None => spacing_for_ufov(spec.ufov(axis))?,
        };
        let extent = match (spec.aperture, spec.hpbw(axis)) {
            (Some(a), _) if a[i] >= T::zero() => a[i],
            (Some(a), _) => return Err(Error::InvalidArgument(format!("aperture must be >= 0, got {}", a[i]))),
            (None, Some(h)) => aperture_for_hpbw(h)? * T::lit(0.5),
            (None, None) => {
                return Err(Error::InvalidArgument(format!("{axis:?} needs a target HPBW or an aperture")))
            }
        };
        spacing[i] = d;
        length[i] = extent * T::lit(2.0);
        nodes[i] = (extent / d + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    }
    if spec.dimensionality == Dimensionality::Linear {
        spacing[1] = spacing[0];
    }
    Ok(DerivedGrid {
        grid: GridSpec::new(spacing[0], spacing[1], nodes[0], nodes[1])?,
        virtual_aperture: (length[0], length[1]),
    })
}

/// Arithmetic-progression spacings `d_k = d_min + (k - 1) delta` filling `[x_min, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiaSpacing<T> {
    pub d_min: T,
    pub delta_d: T,
    pub spacings: Vec<T>,
    pub positions: Vec<T>,
}

fn count<T: Num + Copy>(k: usize) -> T {
    (0..k).fold(T::zero(), |acc, _| acc + T::one())
}

/// Heuristic initial spacings for `n >= 3` elements: the increment is
/// `(x_max - x_min - (n - 1) d_min) / sum_{k=1}^{n-2} k`, so consecutive spacings grow
/// linearly and the last element lands on `x_max`.
///
/// Generic over any numeric type; with an exact rational type the result is exact.
pub fn hia_init<T>(n: usize, x_min: T, x_max: T, d_min: T) -> Result<HiaSpacing<T>>
where
    T: Num + Copy + PartialOrd + Display,
{
    if n < 3 {
        return Err(Error::InvalidArgument(format!("HIA needs at least 3 elements, got {n}")));
    }
    if !(d_min > T::zero()) {
        return Err(Error::InvalidArgument(format!("d_min must be positive, got {d_min}")));
    }
    let slack = x_max - x_min - count::<T>(n - 1) * d_min;
    if slack < T::zero() {
        return Err(Error::Infeasible(format!(
            "{n} elements at spacing >= {d_min} do not fit in [{x_min}, {x_max}]"
        )));
    }
    let delta_d = slack / count::<T>((n - 2) * (n - 1) / 2);
    let spacings: Vec<T> = (0..n - 1).map(|k| d_min + count::<T>(k) * delta_d).collect();
    let mut positions = Vec::with_capacity(n);
    positions.push(x_min);
    for &s in &spacings {
        let last = *positions.last().expect("non-empty");
        positions.push(last + s);
    }
    Ok(HiaSpacing { d_min, delta_d, spacings, positions })
}

/// Rounds wavelength positions to grid indices `0..nodes`. A position whose node is already
/// taken (by `occupied` or an earlier position) moves to the nearest free node, trying
/// `+1, -1, +2, -2, ...` steps.
pub fn snap_to_grid<T: Scalar>(positions: &[T], spacing: T, nodes: usize, occupied: &[i64]) -> Result<Vec<i64>> {
    if !(spacing > T::zero()) {
        return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {spacing}")));
    }
    let mut taken: HashSet<i64> = occupied.iter().copied().collect();
    let limit = nodes as i64;
    let mut out = Vec::with_capacity(positions.len());
    for &x in positions {
        let home = (x / spacing).round().to_i64().ok_or_else(|| {
            Error::InvalidArgument(format!("position {x} cannot be mapped to a grid index"))
        })?;
        let found = (0..=2 * limit.max(home.abs()) + 1)
            .flat_map(|k| if k == 0 { vec![home] } else { vec![home + k, home - k] })
            .find(|&i| (0..limit).contains(&i) && !taken.contains(&i))
            .ok_or_else(|| Error::NoFreeNode(format!("no free node for position {x} on a {nodes}-node axis")))?;
        taken.insert(found);
        out.push(found);
    }
    Ok(out)
}

fn initial_targets<T: Scalar>(n: usize, extent: T, d_min: T, grid_d: T) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::zero()],
        2 => vec![T::zero(), extent],
        _ => hia_init(n, T::zero(), extent, d_min)
            .or_else(|_| hia_init(n, T::zero(), extent, grid_d))
            .map(|h| h.positions)
            .unwrap_or_else(|_| {
                (0..n).map(|i| extent * T::from_index(i as i64) / T::from_index(n as i64 - 1)).collect()
            }),
    }
}

struct Placer<'a, T: Scalar> {
    grid: &'a GridSpec<T>,
    zones: &'a [ForbiddenZone<T>],
    sizes: [ElementSize<T>; 2],
    placed: Vec<(ElementKind, GridPoint)>,
}

impl<T: Scalar> Placer<'_, T> {
    fn size(&self, kind: ElementKind) -> &ElementSize<T> {
        &self.sizes[matches!(kind, ElementKind::Rx) as usize]
    }

    fn fits(&self, kind: ElementKind, p: GridPoint) -> bool {
        self.grid.contains(p)
            && !self.zones.iter().any(|z| z.forbids(self.grid, kind, p))
            && self.placed.iter().all(|&(k, q)| {
                !(k == kind && q == p) && !footprints_overlap(self.grid, p, self.size(kind), q, self.size(k))
            })
    }

    /// Nearest grid node to `(y, z)` that keeps the placement feasible.
    fn place(&mut self, kind: ElementKind, y: T, z: T) -> Result<GridPoint> {
        let (d_y, d_z) = (self.grid.d_y(), self.grid.d_z());
        let dist = |p: GridPoint| {
            let (dy, dz) = (T::from_index(p.m) * d_y - y, T::from_index(p.n) * d_z - z);
            dy * dy + dz * dz
        };
        let mut best: Option<(T, GridPoint)> = None;
        for n in 0..self.grid.rows() as i64 {
            for m in 0..self.grid.cols() as i64 {
                let p = GridPoint::new(m, n);
                let dp = dist(p);
                if best.is_none_or(|(b, _)| dp < b) && self.fits(kind, p) {
                    best = Some((dp, p));
                }
            }
        }
        let (_, p) = best.ok_or_else(|| {
            Error::Infeasible(format!("no feasible grid node left for a {kind:?} element near ({y}, {z})"))
        })?;
        self.placed.push((kind, p));
        Ok(p)
    }
}

/// Feasible starting layout: enforced elements first, the rest near HIA targets (or evenly
/// spread when `spec.hia` is off), each moved to the nearest node that keeps the layout free
/// of overlaps and zone violations.
pub fn initial_layout<T: Scalar>(spec: &DesignSpec<T>, grid: &GridSpec<T>, seed: u64) -> Result<ArrayLayout<T>> {
    spec.validate()?;
    let enforced = ArrayLayout::builder(*grid, spec.tx_size, spec.rx_size)
        .tx(spec.enforced_tx.clone())
        .rx(spec.enforced_rx.clone())
        .enforced_tx(spec.enforced_tx.clone())
        .enforced_rx(spec.enforced_rx.clone())
        .zones(spec.zones.clone())
        .build()
        .map_err(|e| Error::Infeasible(format!("enforced positions: {e}")))?;
    if !enforced.is_feasible() {
        return Err(Error::Infeasible("enforced positions overlap or violate a forbidden zone".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placer = Placer { grid, zones: &spec.zones, sizes: [spec.tx_size, spec.rx_size], placed: Vec::new() };
    placer.placed.extend(spec.enforced_tx.iter().map(|&p| (ElementKind::Tx, p)));
    placer.placed.extend(spec.enforced_rx.iter().map(|&p| (ElementKind::Rx, p)));

    let (width, height) = grid.extent();
    let planar = spec.dimensionality == Dimensionality::Planar && grid.rows() > 1;
    let mut groups = [spec.enforced_tx.clone(), spec.enforced_rx.clone()];
    for (g, kind) in [ElementKind::Tx, ElementKind::Rx].into_iter().enumerate() {
        let size = placer.size(kind).width().max(grid.d_y());
        let free = [spec.n_tx, spec.n_rx][g] - groups[g].len();
        let mut ys = if spec.hia {
            initial_targets(free, width, size, grid.d_y())
        } else {
            initial_targets(free, width, width, grid.d_y())
        };
        if kind == ElementKind::Rx {
            ys.iter_mut().for_each(|y| *y = width - *y);
        }
        let mut zs = if planar { initial_targets(free, height, grid.d_z(), grid.d_z()) } else { vec![T::zero(); free] };
        zs.shuffle(&mut rng);
        for (y, z) in ys.into_iter().zip(zs) {
            groups[g].push(placer.place(kind, y, z)?);
        }
    }
    let [tx, rx] = groups;
    let layout = enforced.with_positions(tx, rx)?;
    debug_assert!(layout.is_feasible());
    Ok(layout)
}

/// Broadside PSLR evaluator on a fixed sine-space grid covering the full virtual aperture.
#[derive(Debug, Clone)]
pub struct Objective<T: Scalar> {
    grid: UvGrid<T>,
    fov: Fov<T>,
}

impl<T: Scalar> Objective<T> {
    pub fn new(physical: &GridSpec<T>, q_phi: usize, q_theta: usize, fov: Fov<T>) -> Result<Self> {
        let virt = physical.virtual_grid();
        let even = |s: usize| s + s % 2;
        let grid = if virt.rows() == 1 {
            UvGrid::azimuth_cut(even(virt.cols()), q_phi)?
        } else {
            UvGrid::new(even(virt.cols()), even(virt.rows()), q_phi, q_theta)?
        };
        Ok(Self { grid, fov })
    }

    /// Evaluator for a spec: FOV rectangle `|u| <= sin(ufov_az)`, `|v| <= sin(ufov_el)`.
    pub fn for_spec(spec: &DesignSpec<T>, physical: &GridSpec<T>) -> Result<Self> {
        Self::new(physical, spec.q_phi, spec.q_theta, Fov::symmetric(spec.target_ufov_az, spec.target_ufov_el))
    }

    pub fn grid(&self) -> &UvGrid<T> {
        &self.grid
    }

    pub fn fov(&self) -> &Fov<T> {
        &self.fov
    }

    /// PSLR in dB of a single broadside unit target; `-inf` when the pattern is degenerate.
    pub fn evaluate(&self, layout: &ArrayLayout<T>) -> T {
        let run = || -> Result<T> {
            let vrx = build_virtual_array(layout)?;
            let snapshot = synthesize_snapshot(&vrx, &[Target::broadside()]);
            pslr(&beamform(&vrx, &snapshot, &self.grid)?, Some(&self.fov))
        };
        run().unwrap_or(T::neg_infinity())
    }
}

/// Result of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct Design<T: Scalar> {
    pub layout: ArrayLayout<T>,
    pub initial: ArrayLayout<T>,
    pub grid: DerivedGrid<T>,
    pub trace: OptimizerTrace<T>,
}

/// Runs the search described by `spec`. Deterministic for a given spec and seed, whatever
/// the worker count.
pub fn optimize<T: Scalar>(spec: &DesignSpec<T>) -> Result<Design<T>> {
    optimize_with(spec, |_, _| {})
}

/// [`optimize`] with an observer called after every iteration with its record and the
/// current (best) layout.
pub fn optimize_with<T, F>(spec: &DesignSpec<T>, mut observe: F) -> Result<Design<T>>
where
    T: Scalar,
    F: FnMut(&IterationRecord<T>, &ArrayLayout<T>),
{
    let derived = derive_grid(spec)?;
    let initial = initial_layout(spec, &derived.grid, spec.seed)?;
    let objective = Objective::for_spec(spec, &derived.grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let initial_pslr_db = objective.evaluate(&initial);
    let mut best = initial_pslr_db;
    let mut current = initial.clone();
    let mut records = Vec::new();
    let mut accepted_values: Vec<T> = Vec::new();
    let reached = |v: T| spec.desired_pslr_db.is_some_and(|d| v > d);
    let all_enforced = spec.enforced_tx.len() == spec.n_tx && spec.enforced_rx.len() == spec.n_rx;

    let termination = if reached(best) {
        Termination::PslrReached
    } else if all_enforced {
        Termination::Plateau
    } else {
        'search: loop {
            let remaining = spec.k_max - records.len();
            if remaining == 0 {
                break Termination::Budget;
            }
            let proposals: Vec<Proposal<T>> =
                (0..spec.batch.min(remaining)).map(|_| propose_candidate(&current, &mut rng, spec.intensity)).collect();
            let scores: Vec<Option<T>> = proposals
                .par_iter()
                .map(|p| (!p.stagnated).then(|| objective.evaluate(&p.layout)))
                .collect();
            for (proposal, score) in proposals.into_iter().zip(scores) {
                let accepted = score.is_some_and(|s| s > best);
                if accepted {
                    best = score.expect("accepted candidates have a score");
                    current = proposal.layout;
                    accepted_values.push(best);
                }
                let record = IterationRecord {
                    iteration: records.len() + 1,
                    candidate_pslr_db: score,
                    best_pslr_db: best,
                    accepted,
                };
                observe(&record, &current);
                records.push(record);
                if accepted {
                    if reached(best) {
                        break 'search Termination::PslrReached;
                    }
                    let w = spec.plateau_window;
                    if w > 0 && accepted_values.len() >= w {
                        let window = &accepted_values[accepted_values.len() - w..];
                        if window[w - 1] - window[0] <= spec.plateau_db {
                            break 'search Termination::Plateau;
                        }
                    }
                }
            }
        }
    };
    log::info!(
        "search finished after {} iterations ({termination}): PSLR {} -> {} dB",
        records.len(),
        initial_pslr_db,
        best
    );
    Ok(Design {
        layout: current,
        initial,
        grid: derived,
        trace: OptimizerTrace { seed: spec.seed, initial_pslr_db, records, termination },
    })
}

/// Hyperparameter overrides for one outer-loop point; `None` keeps the spec's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperPoint<T: Scalar> {
    #[serde(default)]
    pub grid_spacing: Option<[T; 2]>,
    #[serde(default)]
    pub intensity: Option<usize>,
}

impl<T: Scalar> HyperPoint<T> {
    fn apply(&self, spec: &DesignSpec<T>, index: usize) -> DesignSpec<T> {
        let mut s = spec.clone();
        if let Some(g) = self.grid_spacing {
            s.grid_spacing = Some(g);
        }
        if let Some(i) = self.intensity {
            s.intensity = i;
        }
        s.seed = spec.seed ^ index as u64;
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterResult<T: Scalar> {
    pub index: usize,
    pub spec: DesignSpec<T>,
    pub design: Design<T>,
}

/// Runs [`optimize`] for every hyperparameter point (seed XOR point index) and returns the
/// run with the highest final PSLR, preferring the lowest index on ties. Points whose run
/// fails are skipped; if every point fails the first error is returned.
pub fn outer_loop<T: Scalar>(spec: &DesignSpec<T>, points: &[HyperPoint<T>]) -> Result<OuterResult<T>> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("outer loop needs at least one hyperparameter point".into()));
    }
    let runs: Vec<Result<OuterResult<T>>> = points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let spec = p.apply(spec, index);
            optimize(&spec).map(|design| OuterResult { index, spec, design })
        })
        .collect();
    let mut best: Option<OuterResult<T>> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(r) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| r.design.trace.best_pslr_db() > b.design.trace.best_pslr_db());
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                log::warn!("outer-loop point skipped: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one point ran"))
}

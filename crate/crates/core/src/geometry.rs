//! Physical TX/RX layouts on a reference grid and the MIMO virtual arrays they generate.
//!
//! Element coordinates are integer grid indices `(m, n)`; the [`GridSpec`] carries the
//! wavelength-normalized spacing, so a position in wavelengths is `(m * d_y, n * d_z)`.
//! Elements are axis-aligned rectangles centered on their grid point.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Aperture axis. Azimuth is the horizontal `y` / `u` / `m` axis, elevation the vertical
/// `z` / `v` / `n` axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Azimuth,
    Elevation,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Azimuth, Axis::Elevation];
}

/// Linear (single-row) or planar array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimensionality {
    #[serde(rename = "1D")]
    Linear,
    #[serde(rename = "2D")]
    Planar,
}

/// Integer coordinate on a reference grid, serialized as `[m, n]`.
///
/// Ordering is row-major: by `n` first, then `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct GridPoint {
    pub m: i64,
    pub n: i64,
}

impl GridPoint {
    pub const fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }

    pub fn along(self, axis: Axis) -> i64 {
        match axis {
            Axis::Azimuth => self.m,
            Axis::Elevation => self.n,
        }
    }

    pub fn translated(self, dm: i64, dn: i64) -> Self {
        Self::new(self.m + dm, self.n + dn)
    }
}

impl std::ops::Add for GridPoint {
    type Output = GridPoint;

    fn add(self, rhs: GridPoint) -> GridPoint {
        GridPoint::new(self.m + rhs.m, self.n + rhs.n)
    }
}

impl Ord for GridPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.m).cmp(&(other.n, other.m))
    }
}

impl PartialOrd for GridPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<[i64; 2]> for GridPoint {
    fn from([m, n]: [i64; 2]) -> Self {
        Self::new(m, n)
    }
}

impl From<GridPoint> for [i64; 2] {
    fn from(p: GridPoint) -> Self {
        [p.m, p.n]
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.m, self.n)
    }
}

/// Reference grid: `m` columns spaced `d_y` wavelengths apart, `n` rows spaced `d_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRepr<T>", into = "GridSpecRepr<T>")]
pub struct GridSpec<T: Scalar> {
    d_y: T,
    d_z: T,
    m: usize,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpecRepr<T: Scalar> {
    d_y: T,
    d_z: T,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
}

impl<T: Scalar> TryFrom<GridSpecRepr<T>> for GridSpec<T> {
    type Error = Error;

    fn try_from(r: GridSpecRepr<T>) -> Result<Self> {
        GridSpec::new(r.d_y, r.d_z, r.m, r.n)
    }
}

impl<T: Scalar> From<GridSpec<T>> for GridSpecRepr<T> {
    fn from(g: GridSpec<T>) -> Self {
        Self { d_y: g.d_y, d_z: g.d_z, m: g.m, n: g.n }
    }
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(d_y: T, d_z: T, m: usize, n: usize) -> Result<Self> {
        if !(d_y > T::zero() && d_y.is_finite()) || !(d_z > T::zero() && d_z.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacings must be positive, got d_y={d_y}, d_z={d_z}")));
        }
        if m == 0 || n == 0 {
            return Err(Error::InvalidGrid(format!("grid must have at least one node, got {m}x{n}")));
        }
        Ok(Self { d_y, d_z, m, n })
    }

    pub fn d_y(&self) -> T {
        self.d_y
    }

    pub fn d_z(&self) -> T {
        self.d_z
    }

    pub fn spacing(&self, axis: Axis) -> T {
        match axis {
            Axis::Azimuth => self.d_y,
            Axis::Elevation => self.d_z,
        }
    }

    /// Column count `M`.
    pub fn cols(&self) -> usize {
        self.m
    }

    /// Row count `N`.
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn nodes(&self, axis: Axis) -> usize {
        match axis {
            Axis::Azimuth => self.m,
            Axis::Elevation => self.n,
        }
    }

    pub fn node_count(&self) -> usize {
        self.m * self.n
    }

    /// True when the grid has a single row (a linear array along azimuth).
    pub fn is_linear(&self) -> bool {
        self.n == 1
    }

    /// Aperture extent `((M-1) d_y, (N-1) d_z)` in wavelengths.
    pub fn extent(&self) -> (T, T) {
        (
            T::from_index(self.m as i64 - 1) * self.d_y,
            T::from_index(self.n as i64 - 1) * self.d_z,
        )
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.m >= 0 && p.n >= 0 && (p.m as usize) < self.m && (p.n as usize) < self.n
    }

    /// Position of a node in wavelengths.
    pub fn to_wavelengths(&self, p: GridPoint) -> (T, T) {
        (T::from_index(p.m) * self.d_y, T::from_index(p.n) * self.d_z)
    }

    /// Grid of the coordinate-sum aperture: `(2M-1) x (2N-1)` nodes at the same spacing.
    pub fn virtual_grid(&self) -> Self {
        Self { d_y: self.d_y, d_z: self.d_z, m: 2 * self.m - 1, n: 2 * self.n - 1 }
    }
}

/// Physical footprint of an antenna element in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementSizeRepr<T>", into = "ElementSizeRepr<T>")]
pub struct ElementSize<T: Scalar> {
    width: T,
    height: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementSizeRepr<T: Scalar> {
    w: T,
    h: T,
}

impl<T: Scalar> TryFrom<ElementSizeRepr<T>> for ElementSize<T> {
    type Error = Error;

    fn try_from(r: ElementSizeRepr<T>) -> Result<Self> {
        ElementSize::new(r.w, r.h)
    }
}

impl<T: Scalar> From<ElementSize<T>> for ElementSizeRepr<T> {
    fn from(s: ElementSize<T>) -> Self {
        Self { w: s.width, h: s.height }
    }
}

impl<T: Scalar> ElementSize<T> {
    pub fn new(width: T, height: T) -> Result<Self> {
        if !(width > T::zero() && width.is_finite()) || !(height > T::zero() && height.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "element size must be positive, got {width} x {height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> T {
        self.width
    }

    pub fn height(&self) -> T {
        self.height
    }

    pub fn along(&self, axis: Axis) -> T {
        match axis {
            Axis::Azimuth => self.width,
            Axis::Elevation => self.height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Tx,
    Rx,
}

/// Which element groups a forbidden zone keeps out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZoneKind {
    #[serde(rename = "tx-excluded")]
    TxExcluded,
    #[serde(rename = "rx-excluded")]
    RxExcluded,
    #[serde(rename = "both-excluded")]
    BothExcluded,
}

impl ZoneKind {
    pub fn excludes(self, kind: ElementKind) -> bool {
        matches!(
            (self, kind),
            (ZoneKind::BothExcluded, _)
                | (ZoneKind::TxExcluded, ElementKind::Tx)
                | (ZoneKind::RxExcluded, ElementKind::Rx)
        )
    }
}

/// Rectangle of half-width `y_mc` and half-height `z_mc` (wavelengths) centered on a grid node.
/// An element center strictly inside the rectangle violates the zone; the boundary is legal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ForbiddenZoneRepr<T>", into = "ForbiddenZoneRepr<T>")]
pub struct ForbiddenZone<T: Scalar> {
    y_mc: T,
    z_mc: T,
    center: GridPoint,
    kind: ZoneKind,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForbiddenZoneRepr<T: Scalar> {
    y_mc: T,
    z_mc: T,
    center: GridPoint,
    kind: ZoneKind,
}

impl<T: Scalar> TryFrom<ForbiddenZoneRepr<T>> for ForbiddenZone<T> {
    type Error = Error;

    fn try_from(r: ForbiddenZoneRepr<T>) -> Result<Self> {
        ForbiddenZone::new(r.y_mc, r.z_mc, r.center, r.kind)
    }
}

impl<T: Scalar> From<ForbiddenZone<T>> for ForbiddenZoneRepr<T> {
    fn from(z: ForbiddenZone<T>) -> Self {
        Self { y_mc: z.y_mc, z_mc: z.z_mc, center: z.center, kind: z.kind }
    }
}

impl<T: Scalar> ForbiddenZone<T> {
    pub fn new(y_mc: T, z_mc: T, center: GridPoint, kind: ZoneKind) -> Result<Self> {
        if !(y_mc >= T::zero()) || !(z_mc >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "zone half-extents must be non-negative, got y_mc={y_mc}, z_mc={z_mc}"
            )));
        }
        Ok(Self { y_mc, z_mc, center, kind })
    }

    pub fn y_mc(&self) -> T {
        self.y_mc
    }

    pub fn z_mc(&self) -> T {
        self.z_mc
    }

    pub fn center(&self) -> GridPoint {
        self.center
    }

    pub fn kind(&self) -> ZoneKind {
        self.kind
    }

    /// Whether an element of `kind` centered on `p` lies strictly inside an excluding zone.
    pub fn forbids(&self, grid: &GridSpec<T>, kind: ElementKind, p: GridPoint) -> bool {
        if !self.kind.excludes(kind) {
            return false;
        }
        let dy = T::from_index((p.m - self.center.m).abs()) * grid.d_y;
        let dz = T::from_index((p.n - self.center.n).abs()) * grid.d_z;
        strictly_less(dy, self.y_mc) && strictly_less(dz, self.z_mc)
    }
}

/// `a < b` by more than rounding noise, so that exact edge contact compares as equal.
fn strictly_less<T: Scalar>(a: T, b: T) -> bool {
    let tol = T::epsilon().sqrt() * T::one().max(b.abs());
    b - a > tol
}

/// One physical element, identified by group and index within that group's list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementRef {
    pub kind: ElementKind,
    pub index: usize,
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            ElementKind::Tx => "tx",
            ElementKind::Rx => "rx",
        };
        write!(f, "{k}[{}]", self.index)
    }
}

/// Two elements whose footprints intersect with positive area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    pub first: ElementRef,
    pub second: ElementRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneViolation {
    pub element: ElementRef,
    pub zone: usize,
}

/// TX/RX element placement on a reference grid; the optimizer's decision variable.
///
/// Construction validates that every position is inside the grid, that neither list
/// contains duplicates, and that the enforced lists are subsets of the position lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr<T>", into = "LayoutRepr<T>")]
pub struct ArrayLayout<T: Scalar> {
    grid: GridSpec<T>,
    tx: Vec<GridPoint>,
    rx: Vec<GridPoint>,
    tx_size: ElementSize<T>,
    rx_size: ElementSize<T>,
    enforced_tx: Vec<GridPoint>,
    enforced_rx: Vec<GridPoint>,
    zones: Vec<ForbiddenZone<T>>,
}

/// On-disk layout schema.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutRepr<T: Scalar> {
    grid: GridSpec<T>,
    tx: Vec<GridPoint>,
    rx: Vec<GridPoint>,
    tx_size: ElementSize<T>,
    rx_size: ElementSize<T>,
    #[serde(default)]
    enforced_tx: Vec<GridPoint>,
    #[serde(default)]
    enforced_rx: Vec<GridPoint>,
    #[serde(default)]
    zones: Vec<ForbiddenZone<T>>,
}

impl<T: Scalar> TryFrom<LayoutRepr<T>> for ArrayLayout<T> {
    type Error = Error;

    fn try_from(r: LayoutRepr<T>) -> Result<Self> {
        ArrayLayout::builder(r.grid, r.tx_size, r.rx_size)
            .tx(r.tx)
            .rx(r.rx)
            .enforced_tx(r.enforced_tx)
            .enforced_rx(r.enforced_rx)
            .zones(r.zones)
            .build()
    }
}

impl<T: Scalar> From<ArrayLayout<T>> for LayoutRepr<T> {
    fn from(l: ArrayLayout<T>) -> Self {
        Self {
            grid: l.grid,
            tx: l.tx,
            rx: l.rx,
            tx_size: l.tx_size,
            rx_size: l.rx_size,
            enforced_tx: l.enforced_tx,
            enforced_rx: l.enforced_rx,
            zones: l.zones,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayoutBuilder<T: Scalar> {
    inner: ArrayLayout<T>,
}

impl<T: Scalar> LayoutBuilder<T> {
    pub fn tx(mut self, tx: Vec<GridPoint>) -> Self {
        self.inner.tx = tx;
        self
    }

    pub fn rx(mut self, rx: Vec<GridPoint>) -> Self {
        self.inner.rx = rx;
        self
    }

    pub fn enforced_tx(mut self, p: Vec<GridPoint>) -> Self {
        self.inner.enforced_tx = p;
        self
    }

    pub fn enforced_rx(mut self, p: Vec<GridPoint>) -> Self {
        self.inner.enforced_rx = p;
        self
    }

    pub fn zones(mut self, zones: Vec<ForbiddenZone<T>>) -> Self {
        self.inner.zones = zones;
        self
    }

    pub fn build(self) -> Result<ArrayLayout<T>> {
        self.inner.validate()?;
        Ok(self.inner)
    }
}

impl<T: Scalar> ArrayLayout<T> {
    pub fn builder(grid: GridSpec<T>, tx_size: ElementSize<T>, rx_size: ElementSize<T>) -> LayoutBuilder<T> {
        LayoutBuilder {
            inner: ArrayLayout {
                grid,
                tx: Vec::new(),
                rx: Vec::new(),
                tx_size,
                rx_size,
                enforced_tx: Vec::new(),
                enforced_rx: Vec::new(),
                zones: Vec::new(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, list) in [("tx", &self.tx), ("rx", &self.rx)] {
            let mut seen = HashSet::with_capacity(list.len());
            for (i, &p) in list.iter().enumerate() {
                if !self.grid.contains(p) {
                    return Err(Error::InvalidLayout(format!(
                        "{name}[{i}] = {p} lies outside the {}x{} grid",
                        self.grid.m, self.grid.n
                    )));
                }
                if !seen.insert(p) {
                    return Err(Error::InvalidLayout(format!("{name}[{i}] = {p} is a duplicate position")));
                }
            }
        }
        for (name, enforced, list) in
            [("enforced_tx", &self.enforced_tx, &self.tx), ("enforced_rx", &self.enforced_rx, &self.rx)]
        {
            let mut seen = HashSet::with_capacity(enforced.len());
            for (i, p) in enforced.iter().enumerate() {
                if !list.contains(p) {
                    return Err(Error::InvalidLayout(format!(
                        "{name}[{i}] = {p} is not among the layout positions"
                    )));
                }
                if !seen.insert(*p) {
                    return Err(Error::InvalidLayout(format!("{name}[{i}] = {p} is a duplicate position")));
                }
            }
        }
        Ok(())
    }

    /// Copy of this layout with new position lists; sizes, enforced lists and zones are kept.
    pub fn with_positions(&self, tx: Vec<GridPoint>, rx: Vec<GridPoint>) -> Result<Self> {
        let next = Self { tx, rx, ..self.clone() };
        next.validate()?;
        Ok(next)
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn tx(&self) -> &[GridPoint] {
        &self.tx
    }

    pub fn rx(&self) -> &[GridPoint] {
        &self.rx
    }

    pub fn positions(&self, kind: ElementKind) -> &[GridPoint] {
        match kind {
            ElementKind::Tx => &self.tx,
            ElementKind::Rx => &self.rx,
        }
    }

    pub fn tx_size(&self) -> &ElementSize<T> {
        &self.tx_size
    }

    pub fn rx_size(&self) -> &ElementSize<T> {
        &self.rx_size
    }

    pub fn size(&self, kind: ElementKind) -> &ElementSize<T> {
        match kind {
            ElementKind::Tx => &self.tx_size,
            ElementKind::Rx => &self.rx_size,
        }
    }

    pub fn enforced(&self, kind: ElementKind) -> &[GridPoint] {
        match kind {
            ElementKind::Tx => &self.enforced_tx,
            ElementKind::Rx => &self.enforced_rx,
        }
    }

    pub fn zones(&self) -> &[ForbiddenZone<T>] {
        &self.zones
    }

    pub fn element_count(&self) -> usize {
        self.tx.len() + self.rx.len()
    }

    fn elements(&self) -> impl Iterator<Item = (ElementRef, GridPoint, &ElementSize<T>)> + '_ {
        let tx = self.tx.iter().enumerate().map(|(i, &p)| {
            (ElementRef { kind: ElementKind::Tx, index: i }, p, &self.tx_size)
        });
        let rx = self.rx.iter().enumerate().map(|(i, &p)| {
            (ElementRef { kind: ElementKind::Rx, index: i }, p, &self.rx_size)
        });
        tx.chain(rx)
    }

    /// Distinct positions of one group along an axis, in wavelengths, ascending.
    pub fn coordinates_along(&self, kind: ElementKind, axis: Axis) -> Vec<T> {
        let mut idx: Vec<i64> = self.positions(kind).iter().map(|p| p.along(axis)).collect();
        idx.sort_unstable();
        idx.dedup();
        let d = self.grid.spacing(axis);
        idx.into_iter().map(|i| T::from_index(i) * d).collect()
    }

    /// True when no element overlaps another and none sits in a forbidden zone.
    pub fn is_feasible(&self) -> bool {
        check_overlap(self).is_empty() && check_forbidden_zones(self, &self.zones).is_empty()
    }
}

/// Whether two centered rectangles intersect with positive area.
pub fn footprints_overlap<T: Scalar>(
    grid: &GridSpec<T>,
    a: GridPoint,
    a_size: &ElementSize<T>,
    b: GridPoint,
    b_size: &ElementSize<T>,
) -> bool {
    let dy = T::from_index((a.m - b.m).abs()) * grid.d_y;
    let dz = T::from_index((a.n - b.n).abs()) * grid.d_z;
    let half = T::lit(0.5);
    strictly_less(dy, (a_size.width + b_size.width) * half)
        && strictly_less(dz, (a_size.height + b_size.height) * half)
}

/// Every pair of elements (TX–TX, RX–RX, TX–RX) whose footprints overlap.
/// Edge contact is not an overlap.
pub fn check_overlap<T: Scalar>(layout: &ArrayLayout<T>) -> Vec<Overlap> {
    let elements: Vec<_> = layout.elements().collect();
    let mut out = Vec::new();
    for (i, &(ra, pa, sa)) in elements.iter().enumerate() {
        for &(rb, pb, sb) in &elements[i + 1..] {
            if footprints_overlap(&layout.grid, pa, sa, pb, sb) {
                out.push(Overlap { first: ra, second: rb });
            }
        }
    }
    out
}

/// Every element whose center lies strictly inside a zone that excludes its group.
pub fn check_forbidden_zones<T: Scalar>(
    layout: &ArrayLayout<T>,
    zones: &[ForbiddenZone<T>],
) -> Vec<ZoneViolation> {
    let mut out = Vec::new();
    for (element, p, _) in layout.elements() {
        for (zi, zone) in zones.iter().enumerate() {
            if zone.forbids(&layout.grid, element.kind, p) {
                out.push(ZoneViolation { element, zone: zi });
            }
        }
    }
    out
}

/// Coordinate-sum virtual receiver set of a MIMO layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualArray<T: Scalar> {
    positions: Vec<GridPoint>,
    generated_count: usize,
    grid: GridSpec<T>,
}

impl<T: Scalar> VirtualArray<T> {
    /// Sums every TX coordinate with every RX coordinate and de-duplicates the result.
    /// `grid` is the physical grid; the virtual grid doubles its extent.
    pub fn from_positions(grid: &GridSpec<T>, tx: &[GridPoint], rx: &[GridPoint]) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() {
            return Err(Error::InvalidLayout(format!(
                "virtual array needs at least one TX and one RX (got {} TX, {} RX)",
                tx.len(),
                rx.len()
            )));
        }
        let mut positions: Vec<GridPoint> =
            tx.iter().flat_map(|&t| rx.iter().map(move |&r| t + r)).collect();
        positions.sort_unstable();
        positions.dedup();
        Ok(Self { positions, generated_count: tx.len() * rx.len(), grid: grid.virtual_grid() })
    }

    /// Builds a virtual array directly from element positions (e.g. a monostatic array).
    pub fn from_elements(grid: GridSpec<T>, mut positions: Vec<GridPoint>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidLayout("virtual array has no elements".into()));
        }
        let generated_count = positions.len();
        positions.sort_unstable();
        positions.dedup();
        Ok(Self { positions, generated_count, grid })
    }

    /// Virtual receiver positions, sorted row-major by `(n, m)`.
    pub fn positions(&self) -> &[GridPoint] {
        &self.positions
    }

    /// `|tx| * |rx|`.
    pub fn generated_count(&self) -> usize {
        self.generated_count
    }

    pub fn unique_count(&self) -> usize {
        self.positions.len()
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn to_wavelengths(&self, p: GridPoint) -> (T, T) {
        self.grid.to_wavelengths(p)
    }

    /// Inclusive index range `(min, max)` occupied along an axis.
    pub fn bounds(&self, axis: Axis) -> (i64, i64) {
        let it = self.positions.iter().map(|p| p.along(axis));
        let lo = it.clone().min().unwrap_or(0);
        let hi = it.max().unwrap_or(0);
        (lo, hi)
    }

    /// Number of grid nodes spanned along an axis, `max - min + 1`.
    pub fn span(&self, axis: Axis) -> usize {
        let (lo, hi) = self.bounds(axis);
        (hi - lo + 1) as usize
    }

    /// Aperture length along an axis in wavelengths, `(span - 1) * d`.
    pub fn aperture_length(&self, axis: Axis) -> T {
        T::from_index(self.span(axis) as i64 - 1) * self.grid.spacing(axis)
    }

    /// Smallest nonzero gap between distinct occupied coordinates along an axis, in
    /// wavelengths; `None` when the set occupies a single coordinate on that axis.
    pub fn min_spacing(&self, axis: Axis) -> Option<T> {
        let mut c: Vec<i64> = self.positions.iter().map(|p| p.along(axis)).collect();
        c.sort_unstable();
        c.dedup();
        c.windows(2).map(|w| w[1] - w[0]).min().map(|g| T::from_index(g) * self.grid.spacing(axis))
    }

    /// Same virtual array shifted by whole grid steps.
    pub fn translated(&self, dm: i64, dn: i64) -> Self {
        Self {
            positions: self.positions.iter().map(|p| p.translated(dm, dn)).collect(),
            generated_count: self.generated_count,
            grid: self.grid,
        }
    }
}

/// Coordinate-sum virtual array of a layout.
pub fn build_virtual_array<T: Scalar>(layout: &ArrayLayout<T>) -> Result<VirtualArray<T>> {
    VirtualArray::from_positions(&layout.grid, &layout.tx, &layout.rx)
}

/// Unique virtual receiver count over the element count of a fully populated reference grid.
pub fn thinning_ratio<T: Scalar>(layout: &ArrayLayout<T>, reference: &GridSpec<T>) -> Result<T> {
    let vrx = build_virtual_array(layout)?;
    thinning_ratio_of(&vrx, reference)
}

pub fn thinning_ratio_of<T: Scalar>(vrx: &VirtualArray<T>, reference: &GridSpec<T>) -> Result<T> {
    if reference.node_count() == 0 {
        return Err(Error::InvalidGrid("reference grid has no nodes".into()));
    }
    for axis in Axis::BOTH {
        if vrx.span(axis) > reference.nodes(axis) {
            return Err(Error::InvalidGrid(format!(
                "reference grid {}x{} does not cover the virtual aperture ({} nodes along {axis:?})",
                reference.cols(),
                reference.rows(),
                vrx.span(axis)
            )));
        }
    }
    Ok(T::from_index(vrx.unique_count() as i64) / T::from_index(reference.node_count() as i64))
}

/// Step of an empirical CDF of inter-element spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfStep<T> {
    pub spacing: T,
    pub cumulative: T,
}

/// Right-continuous ECDF of consecutive spacings, evaluated at each distinct spacing.
///
/// `positions` must be strictly increasing with at least two entries. Spacings that agree
/// to within rounding noise are treated as the same value.
pub fn spacing_ecdf<T: Scalar>(positions: &[T]) -> Result<Vec<EcdfStep<T>>> {
    if positions.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "spacing ECDF needs at least 2 positions, got {}",
            positions.len()
        )));
    }
    if let Some(i) = positions.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!(
            "positions must be strictly increasing (index {} -> {})",
            i,
            i + 1
        )));
    }
    let mut spacings: Vec<T> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    spacings.sort_by(|a, b| a.partial_cmp(b).expect("finite spacings"));

    let total = T::from_index(spacings.len() as i64);
    let tol = T::epsilon().sqrt();
    let mut out: Vec<EcdfStep<T>> = Vec::new();
    for (i, &s) in spacings.iter().enumerate() {
        let cumulative = T::from_index(i as i64 + 1) / total;
        match out.last_mut() {
            Some(last) if (s - last.spacing).abs() <= tol * s.abs().max(T::one()) => {
                last.cumulative = cumulative;
            }
            _ => out.push(EcdfStep { spacing: s, cumulative }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_wave_line(m: usize) -> GridSpec<f64> {
        GridSpec::new(0.5, 0.5, m, 1).unwrap()
    }

    fn pts(ms: &[i64]) -> Vec<GridPoint> {
        ms.iter().map(|&m| GridPoint::new(m, 0)).collect()
    }

    fn point_size() -> ElementSize<f64> {
        ElementSize::new(0.5, 0.5).unwrap()
    }

    fn line_layout(tx: &[i64], rx: &[i64], m: usize, size: ElementSize<f64>) -> ArrayLayout<f64> {
        ArrayLayout::builder(half_wave_line(m), size, size).tx(pts(tx)).rx(pts(rx)).build().unwrap()
    }

    #[test]
    fn grid_rejects_degenerate_specs() {
        assert!(GridSpec::new(0.0, 0.5, 4, 1).is_err());
        assert!(GridSpec::new(0.5, -1.0, 4, 1).is_err());
        assert!(GridSpec::new(0.5, 0.5, 0, 1).is_err());
        let g = GridSpec::new(0.5, 1.0, 65, 36).unwrap();
        assert_eq!(g.extent(), (32.0, 35.0));
    }

    #[test]
    fn virtual_array_sums_and_dedups() {
        let layout = line_layout(&[0, 1], &[0, 2], 4, point_size());
        let vrx = build_virtual_array(&layout).unwrap();
        assert_eq!(vrx.positions(), &pts(&[0, 1, 2, 3])[..]);
        assert_eq!((vrx.generated_count(), vrx.unique_count()), (4, 4));

        let layout = line_layout(&[0, 2], &[0, 2], 4, point_size());
        let vrx = build_virtual_array(&layout).unwrap();
        assert_eq!(vrx.positions(), &pts(&[0, 2, 4])[..]);
        assert_eq!((vrx.generated_count(), vrx.unique_count()), (4, 3));
    }

    #[test]
    fn virtual_array_orders_row_major() {
        let g = GridSpec::new(0.5, 0.5, 4, 4).unwrap();
        let tx = vec![GridPoint::new(0, 0), GridPoint::new(0, 1)];
        let rx = vec![GridPoint::new(3, 0), GridPoint::new(1, 0)];
        let vrx = VirtualArray::from_positions(&g, &tx, &rx).unwrap();
        let got: Vec<[i64; 2]> = vrx.positions().iter().map(|&p| p.into()).collect();
        assert_eq!(got, vec![[1, 0], [3, 0], [1, 1], [3, 1]]);
        assert_eq!(vrx.grid().cols(), 7);
    }

    #[test]
    fn empty_group_is_rejected() {
        let g = half_wave_line(4);
        assert!(matches!(
            VirtualArray::from_positions(&g, &[], &pts(&[0])),
            Err(Error::InvalidLayout(_))
        ));
    }

    #[test]
    fn layout_validation_names_offending_field() {
        let g = half_wave_line(4);
        let err = ArrayLayout::builder(g, point_size(), point_size())
            .tx(pts(&[0, 4]))
            .rx(pts(&[0]))
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("tx[1]"), "{err}");
        let err = ArrayLayout::builder(g, point_size(), point_size())
            .tx(pts(&[0]))
            .rx(pts(&[1, 1]))
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let err = ArrayLayout::builder(g, point_size(), point_size())
            .tx(pts(&[0]))
            .rx(pts(&[1]))
            .enforced_rx(pts(&[2]))
            .build()
            .unwrap_err();
        assert!(err.to_string().contains("enforced_rx[0]"), "{err}");
    }

    #[test]
    fn edge_contact_is_not_an_overlap() {
        let wide = ElementSize::new(2.0, 2.0).unwrap();
        // 4 steps of 0.5 = 2.0 wavelengths, exactly one element width.
        let layout = line_layout(&[0, 4], &[10], 16, wide);
        assert!(check_overlap(&layout).is_empty());
        // 3 steps = 1.5 wavelengths: 0.5 wavelengths of overlap.
        let layout = line_layout(&[0, 3], &[10], 16, wide);
        let v = check_overlap(&layout);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].first, ElementRef { kind: ElementKind::Tx, index: 0 });
        assert_eq!(v[0].second, ElementRef { kind: ElementKind::Tx, index: 1 });
    }

    #[test]
    fn tx_rx_overlaps_are_reported() {
        let wide = ElementSize::new(2.0, 2.0).unwrap();
        let layout = line_layout(&[0], &[1], 8, wide);
        assert_eq!(check_overlap(&layout).len(), 1);
    }

    #[test]
    fn hia_layout_with_two_wavelength_elements_is_realizable() {
        let wide = ElementSize::new(2.0, 2.0).unwrap();
        let layout = line_layout(&[0, 4, 9, 15, 22], &[30], 31, wide);
        assert!(check_overlap(&layout).is_empty());
    }

    #[test]
    fn forbidden_zone_interior_is_a_violation_and_edge_is_not() {
        let g = GridSpec::new(0.5, 0.5, 8, 8).unwrap();
        let s = point_size();
        let zone = ForbiddenZone::new(1.0, 1.0, GridPoint::new(0, 0), ZoneKind::TxExcluded).unwrap();
        let layout = ArrayLayout::builder(g, s, s)
            .tx(vec![GridPoint::new(0, 0)])
            .rx(vec![GridPoint::new(1, 0)])
            .build()
            .unwrap();
        assert!(check_forbidden_zones(&layout, &[]).is_empty());
        let v = check_forbidden_zones(&layout, &[zone]);
        assert_eq!(v, vec![ZoneViolation { element: ElementRef { kind: ElementKind::Tx, index: 0 }, zone: 0 }]);

        // 2 steps of 0.5 = 1.0 wavelength: on the zone edge.
        let layout = ArrayLayout::builder(g, s, s)
            .tx(vec![GridPoint::new(2, 0)])
            .rx(vec![GridPoint::new(4, 4)])
            .build()
            .unwrap();
        assert!(check_forbidden_zones(&layout, &[zone]).is_empty());
    }

    #[test]
    fn zone_kinds_select_groups() {
        assert!(ZoneKind::TxExcluded.excludes(ElementKind::Tx));
        assert!(!ZoneKind::TxExcluded.excludes(ElementKind::Rx));
        assert!(ZoneKind::RxExcluded.excludes(ElementKind::Rx));
        assert!(ZoneKind::BothExcluded.excludes(ElementKind::Tx));
        assert!(ZoneKind::BothExcluded.excludes(ElementKind::Rx));
        assert!(ForbiddenZone::new(-1.0, 0.0, GridPoint::new(0, 0), ZoneKind::BothExcluded).is_err());
    }

    #[test]
    fn full_ura_thinning_ratio_is_one() {
        // TX at the origin and RX filling the grid reproduces the grid itself as VRX set.
        let g = GridSpec::new(0.5, 0.5, 5, 3).unwrap();
        let s = point_size();
        let rx: Vec<_> = (0..3).flat_map(|n| (0..5).map(move |m| GridPoint::new(m, n))).collect();
        let layout = ArrayLayout::builder(g, s, s).tx(vec![GridPoint::new(0, 0)]).rx(rx).build().unwrap();
        assert_eq!(thinning_ratio(&layout, &g).unwrap(), 1.0);
    }

    #[test]
    fn thinning_ratio_requires_covering_reference() {
        let layout = line_layout(&[0, 1], &[0, 2], 4, point_size());
        let small = GridSpec::new(0.5, 0.5, 3, 1).unwrap();
        assert!(thinning_ratio(&layout, &small).is_err());
    }

    #[test]
    fn ecdf_of_uniform_array_is_a_single_step() {
        let e = spacing_ecdf(&[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert_eq!(e, vec![EcdfStep { spacing: 0.5, cumulative: 1.0 }]);
    }

    #[test]
    fn ecdf_of_hia_positions_is_linear() {
        let pos: Vec<f64> = [0.0, 1.0, 5.0, 12.0, 22.0].iter().map(|x| x * 0.5).collect();
        let e = spacing_ecdf(&pos).unwrap();
        let sp: Vec<f64> = e.iter().map(|s| s.spacing * 2.0).collect();
        let cdf: Vec<f64> = e.iter().map(|s| s.cumulative).collect();
        assert_eq!(sp, vec![1.0, 4.0, 7.0, 10.0]);
        assert_eq!(cdf, vec![0.25, 0.5, 0.75, 1.0]);
        // F_D(d_n) = (2 + 2 d_n / lambda) / 12
        for s in &e {
            assert!((s.cumulative - (2.0 + 2.0 * s.spacing) / 12.0).abs() < 1e-15);
        }

        let pos: Vec<f64> = [0.0, 4.0, 9.0, 15.0, 22.0].iter().map(|x| x * 0.5).collect();
        let e = spacing_ecdf(&pos).unwrap();
        // F_D(d_n) = (-3 + 2 d_n / lambda) / 4
        for s in &e {
            assert!((s.cumulative - (-3.0 + 2.0 * s.spacing) / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ecdf_rejects_short_or_unsorted_input() {
        assert!(spacing_ecdf::<f64>(&[1.0]).is_err());
        assert!(spacing_ecdf(&[0.0, 1.0, 1.0]).is_err());
        assert!(spacing_ecdf(&[0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn layout_json_round_trips() {
        let g = GridSpec::new(0.5, 1.0, 8, 4).unwrap();
        let zone = ForbiddenZone::new(1.0, 2.0, GridPoint::new(3, 1), ZoneKind::RxExcluded).unwrap();
        let layout = ArrayLayout::builder(g, ElementSize::new(0.5, 1.0).unwrap(), point_size())
            .tx(vec![GridPoint::new(0, 0), GridPoint::new(7, 3)])
            .rx(vec![GridPoint::new(1, 0)])
            .enforced_tx(vec![GridPoint::new(7, 3)])
            .zones(vec![zone])
            .build()
            .unwrap();
        let text = serde_json::to_string(&layout).unwrap();
        assert!(text.contains("\"M\":8") && text.contains("\"tx\":[[0,0],[7,3]]"), "{text}");
        assert!(text.contains("rx-excluded"), "{text}");
        let back: ArrayLayout<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, layout);
    }

    #[test]
    fn layout_json_validation_runs_on_load() {
        let text = r#"{"grid":{"d_y":0.5,"d_z":0.5,"M":4,"N":1},
            "tx":[[0,0],[9,0]],"rx":[[1,0]],"tx_size":{"w":0.5,"h":0.5},"rx_size":{"w":0.5,"h":0.5}}"#;
        let err = serde_json::from_str::<ArrayLayout<f64>>(text).unwrap_err();
        assert!(err.to_string().contains("tx[1]"), "{err}");
    }
}

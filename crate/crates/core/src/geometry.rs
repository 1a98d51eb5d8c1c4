//! Surface lattice, control groups and per-element path geometry.
//!
//! The surface lies in the plane `x = origin.x` with broadside along `+x`.
//! Rows run along `z` with periodicity `d_y`, columns along `y` with
//! periodicity `d_x`. Elements are stored column-major (column outer, row
//! inner), the order of the double sum in the received-power model.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Vec3::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x.as_f64(), self.y.as_f64(), self.z.as_f64()]
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for a zero/non-finite vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self * n.recip())
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Angle between two non-zero vectors, in `[0, π]`.
    pub fn angle_to(self, other: Self) -> T {
        self.cross(other).norm().atan2(self.dot(other))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Rectangular lattice of unit cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid<T> {
    n_rows: usize,
    n_cols: usize,
    d_x: T,
    d_y: T,
    origin: Vec3<T>,
}

pub fn build_grid<T: Real>(
    n_rows: usize,
    n_cols: usize,
    d_x: T,
    d_y: T,
    origin: Vec3<T>,
) -> Result<SurfaceGrid<T>> {
    SurfaceGrid::new(n_rows, n_cols, d_x, d_y, origin)
}

/// Lowest symmetric index for `count` elements along one axis: `1 − count/2`
/// for even counts, `−(count − 1)/2` for odd ones.
fn first_label(count: usize) -> i64 {
    let count = count as i64;
    if count % 2 == 0 {
        1 - count / 2
    } else {
        -(count - 1) / 2
    }
}

impl<T: Real> SurfaceGrid<T> {
    pub fn new(n_rows: usize, n_cols: usize, d_x: T, d_y: T, origin: Vec3<T>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid(format!(
                "grid needs at least one row and column, got {n_rows}x{n_cols}"
            )));
        }
        if !(d_x > T::zero() && d_x.is_finite() && d_y > T::zero() && d_y.is_finite()) {
            return Err(Error::invalid(format!(
                "element periodicities must be positive, got d_x={d_x}, d_y={d_y}"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(SurfaceGrid {
            n_rows,
            n_cols,
            d_x,
            d_y,
            origin,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn d_x(&self) -> T {
        self.d_x
    }

    pub fn d_y(&self) -> T {
        self.d_y
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self) -> T {
        T::from_count(self.n_cols) * self.d_x
    }

    pub fn height(&self) -> T {
        T::from_count(self.n_rows) * self.d_y
    }

    pub fn diagonal(&self) -> T {
        self.width().hypot(self.height())
    }

    pub fn cell_area(&self) -> T {
        self.d_x * self.d_y
    }

    /// Symmetric index range `(first, last)` of the rows (`n`).
    pub fn row_labels(&self) -> (i64, i64) {
        let lo = first_label(self.n_rows);
        (lo, lo + self.n_rows as i64 - 1)
    }

    /// Symmetric index range `(first, last)` of the columns (`m`).
    pub fn col_labels(&self) -> (i64, i64) {
        let lo = first_label(self.n_cols);
        (lo, lo + self.n_cols as i64 - 1)
    }

    pub fn linear_index(&self, row: usize, col: usize) -> usize {
        col * self.n_rows + row
    }

    /// `(row, col)` zero-based storage coordinates of a linear index.
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index % self.n_rows, index / self.n_rows)
    }

    /// Symmetric `(n, m)` labels of a linear index.
    pub fn labels(&self, index: usize) -> (i64, i64) {
        let (row, col) = self.row_col(index);
        (
            first_label(self.n_rows) + row as i64,
            first_label(self.n_cols) + col as i64,
        )
    }

    /// Linear index of the element labelled `(n, m)`.
    pub fn index_of(&self, n: i64, m: i64) -> Result<usize> {
        let (n_lo, n_hi) = self.row_labels();
        let (m_lo, m_hi) = self.col_labels();
        if n < n_lo || n > n_hi || m < m_lo || m > m_hi {
            return Err(Error::invalid(format!(
                "element ({n}, {m}) outside n ∈ [{n_lo}, {n_hi}], m ∈ [{m_lo}, {m_hi}]"
            )));
        }
        Ok(self.linear_index((n - n_lo) as usize, (m - m_lo) as usize))
    }

    pub fn element_position(&self, n: i64, m: i64) -> Result<Vec3<T>> {
        self.index_of(n, m).map(|i| self.position(i))
    }

    /// Centre of the element stored at `index`.
    pub fn position(&self, index: usize) -> Vec3<T> {
        let (row, col) = self.row_col(index);
        let half = T::lit(0.5);
        let dy = (T::from_count(col) - (T::from_count(self.n_cols) - T::one()) * half) * self.d_x;
        let dz = (T::from_count(row) - (T::from_count(self.n_rows) - T::one()) * half) * self.d_y;
        self.origin + Vec3::new(T::zero(), dy, dz)
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    /// Linear index of the element whose centre is nearest to the projection
    /// of `point` onto the surface.
    pub fn nearest_element(&self, point: Vec3<T>) -> usize {
        let rel = point - self.origin;
        let half = T::lit(0.5);
        let col = rel.y / self.d_x + (T::from_count(self.n_cols) - T::one()) * half;
        let row = rel.z / self.d_y + (T::from_count(self.n_rows) - T::one()) * half;
        let clamp = |v: T, count: usize| -> usize {
            let r = v.round().max(T::zero()).to_usize().unwrap_or(0);
            r.min(count - 1)
        };
        self.linear_index(clamp(row, self.n_rows), clamp(col, self.n_cols))
    }
}

/// How control codes map onto elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupScheme {
    PerElement,
    /// Vertical runs of `k` cells sharing one column.
    ColumnOf(usize),
    WholeSurface,
    /// Arbitrary user-supplied partition.
    Custom,
}

/// Partition of the element set into independently controlled groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMap {
    scheme: GroupScheme,
    groups: Vec<Vec<usize>>,
    element_group: Vec<usize>,
}

impl GroupMap {
    /// Builds a map from explicit groups, checking they partition
    /// `0..element_count` exactly.
    pub fn from_groups(element_count: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        Self::with_scheme(GroupScheme::Custom, element_count, groups)
    }

    fn with_scheme(scheme: GroupScheme, element_count: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        const UNASSIGNED: usize = usize::MAX;
        let mut element_group = vec![UNASSIGNED; element_count];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::invalid(format!("group {g} is empty")));
            }
            for &e in members {
                match element_group.get_mut(e) {
                    None => {
                        return Err(Error::invalid(format!(
                            "group {g} references element {e} of {element_count}"
                        )))
                    }
                    Some(slot) if *slot != UNASSIGNED => {
                        return Err(Error::invalid(format!(
                            "element {e} belongs to groups {} and {g}",
                            *slot
                        )))
                    }
                    Some(slot) => *slot = g,
                }
            }
        }
        if let Some(e) = element_group.iter().position(|&g| g == UNASSIGNED) {
            return Err(Error::invalid(format!("element {e} is not in any group")));
        }
        Ok(GroupMap {
            scheme,
            groups,
            element_group,
        })
    }

    pub fn scheme(&self) -> GroupScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn element_count(&self) -> usize {
        self.element_group.len()
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.groups[group]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_of(&self, element: usize) -> usize {
        self.element_group[element]
    }
}

/// Groups of `cells_per_group` vertically adjacent cells in one column.
///
/// Groups are numbered row-major over the `(n_rows / k) × n_cols` block
/// lattice, starting from the lowest block row.
pub fn column_groups<T: Real>(grid: &SurfaceGrid<T>, cells_per_group: usize) -> Result<GroupMap> {
    let k = cells_per_group;
    if k == 0 || !grid.n_rows().is_multiple_of(k) {
        return Err(Error::invalid(format!(
            "{} rows cannot be split into column groups of {k} cells",
            grid.n_rows()
        )));
    }
    let blocks = grid.n_rows() / k;
    let mut groups = Vec::with_capacity(blocks * grid.n_cols());
    for block in 0..blocks {
        for col in 0..grid.n_cols() {
            groups.push(
                (block * k..(block + 1) * k)
                    .map(|row| grid.linear_index(row, col))
                    .collect(),
            );
        }
    }
    let scheme = if k == 1 {
        GroupScheme::PerElement
    } else {
        GroupScheme::ColumnOf(k)
    };
    GroupMap::with_scheme(scheme, grid.len(), groups)
}

pub fn per_element_groups<T: Real>(grid: &SurfaceGrid<T>) -> GroupMap {
    column_groups(grid, 1).expect("single-cell groups always divide the rows")
}

pub fn whole_surface_group<T: Real>(grid: &SurfaceGrid<T>) -> GroupMap {
    GroupMap::with_scheme(GroupScheme::WholeSurface, grid.len(), vec![(0..grid.len()).collect()])
        .expect("one group covering every element")
}

/// Distances and angles of one element on the Tx → element → Rx path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry<T> {
    pub r_t: T,
    pub r_r: T,
    /// Incidence angle from the surface normal.
    pub theta_inc: T,
    /// Departure angle from the surface normal.
    pub theta_dep: T,
    /// Element direction seen from the Tx boresight.
    pub theta_tx: T,
    /// Element direction seen from the Rx boresight.
    pub theta_rx: T,
}

/// Per-element geometry with both antennas aimed at the surface centre.
pub fn path_geometry<T: Real>(
    grid: &SurfaceGrid<T>,
    tx: Vec3<T>,
    rx: Vec3<T>,
) -> Result<Vec<PathGeometry<T>>> {
    path_geometry_aimed(grid, tx, None, rx, None)
}

/// Per-element geometry with optional explicit boresight directions.
pub fn path_geometry_aimed<T: Real>(
    grid: &SurfaceGrid<T>,
    tx: Vec3<T>,
    tx_boresight: Option<Vec3<T>>,
    rx: Vec3<T>,
    rx_boresight: Option<Vec3<T>>,
) -> Result<Vec<PathGeometry<T>>> {
    let tx_axis = antenna_axis(grid, "tx", tx, tx_boresight)?;
    let rx_axis = antenna_axis(grid, "rx", rx, rx_boresight)?;
    let normal = Vec3::new(T::one(), T::zero(), T::zero());
    Ok((0..grid.len())
        .map(|i| {
            let p = grid.position(i);
            let to_tx = tx - p;
            let to_rx = rx - p;
            PathGeometry {
                r_t: to_tx.norm(),
                r_r: to_rx.norm(),
                theta_inc: normal.angle_to(to_tx),
                theta_dep: normal.angle_to(to_rx),
                theta_tx: tx_axis.angle_to(-to_tx),
                theta_rx: rx_axis.angle_to(-to_rx),
            }
        })
        .collect())
}

fn antenna_axis<T: Real>(
    grid: &SurfaceGrid<T>,
    name: &str,
    pos: Vec3<T>,
    boresight: Option<Vec3<T>>,
) -> Result<Vec3<T>> {
    if !pos.is_finite() {
        return Err(Error::DegenerateGeometry(format!("{name} position is not finite")));
    }
    if pos.x == grid.origin().x {
        return Err(Error::DegenerateGeometry(format!(
            "{name} at x = {} lies in the surface plane",
            pos.x
        )));
    }
    let axis = boresight.unwrap_or_else(|| grid.origin() - pos);
    axis.normalized()
        .ok_or_else(|| Error::DegenerateGeometry(format!("{name} boresight has zero length")))
}

/// Orthonormal frame of a surface mounted anywhere: `normal` becomes local
/// `+x`, the projection of `up` onto the surface becomes local `+z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame<T> {
    center: Vec3<T>,
    normal: Vec3<T>,
    horizontal: Vec3<T>,
    vertical: Vec3<T>,
}

impl<T: Real> SurfaceFrame<T> {
    pub fn new(center: Vec3<T>, normal: Vec3<T>, up: Vec3<T>) -> Result<Self> {
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::invalid("surface normal has zero length"))?;
        let vertical = (up - normal * up.dot(normal))
            .normalized()
            .ok_or_else(|| Error::invalid("surface up direction is parallel to its normal"))?;
        let horizontal = vertical.cross(normal);
        Ok(SurfaceFrame {
            center,
            normal,
            horizontal,
            vertical,
        })
    }

    /// Frame of a surface centred at `center` facing `+x`.
    pub fn broadside_x(center: Vec3<T>) -> Self {
        let o = T::zero();
        let l = T::one();
        SurfaceFrame {
            center,
            normal: Vec3::new(l, o, o),
            horizontal: Vec3::new(o, l, o),
            vertical: Vec3::new(o, o, l),
        }
    }

    pub fn point_to_local(&self, p: Vec3<T>) -> Vec3<T> {
        self.direction_to_local(p - self.center)
    }

    pub fn direction_to_local(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(v.dot(self.normal), v.dot(self.horizontal), v.dot(self.vertical))
    }
}

//! Commodity properties, link states and the GSOM fundamental-diagram family.
//!
//! A fundamental diagram is a velocity map `V(ρ, w)` over total density `ρ`
//! and net property `w`. Everything else (critical density, capacity,
//! demand, supply, the middle state at a 1-to-1 boundary) is derived from it.
//!
//! Two families are built in:
//!
//! * [`Greenshields`]: `V(ρ, w) = w (1 - ρ/ρ_max)`, with closed-form
//!   inversion, `ρ_c = ρ_max/2` and capacity `F(w) = w ρ_max / 4`.
//! * [`PiecewiseLinear`]: `V(ρ, w) = w φ(ρ/ρ_max)` for a tabulated strictly
//!   decreasing shape `φ`, inverted by bisection.

use crate::error::{Error, Result};

/// Relative tolerance on density inversion, as a fraction of `ρ_max`.
pub const INVERSION_TOLERANCE: f64 = 1e-9;

/// Slack allowed when a summed density lands a hair above `ρ_max`.
const JAM_SLACK: f64 = 1e-12;

/// Property values `w^c` of the vehicle commodities.
#[derive(Debug, Clone, PartialEq)]
pub struct Commodities {
    properties: Vec<f64>,
}

impl Commodities {
    pub fn new(properties: Vec<f64>) -> Result<Self> {
        if properties.is_empty() {
            return Err(Error::invalid("at least one commodity is required"));
        }
        if let Some(w) = properties.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!(
                "commodity property must be positive and finite, got {w}"
            )));
        }
        Ok(Self { properties })
    }

    /// One commodity per property value; panics on invalid input.
    pub fn from_slice(properties: &[f64]) -> Self {
        Self::new(properties.to_vec()).expect("valid commodity properties")
    }

    pub fn len(&self) -> usize {
        self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.properties.is_empty()
    }

    pub fn property(&self, c: usize) -> f64 {
        self.properties[c]
    }

    pub fn properties(&self) -> &[f64] {
        &self.properties
    }

    pub fn min_property(&self) -> f64 {
        self.properties.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_property(&self) -> f64 {
        self.properties.iter().copied().fold(0.0, f64::max)
    }

    /// Quantity-weighted mean property, `None` when all weights are zero.
    pub fn weighted_property(&self, weights: &[f64]) -> Option<f64> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mixed: f64 = weights.iter().zip(&self.properties).map(|(q, w)| q * w).sum();
        // keep rounding from pushing the mean outside the commodity range
        Some((mixed / total).clamp(self.min_property(), self.max_property()))
    }
}

/// Per-commodity densities of one link or cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub densities: Vec<f64>,
    pub length: f64,
}

impl LinkState {
    pub fn new(densities: Vec<f64>, length: f64) -> Self {
        Self { densities, length }
    }

    pub fn empty(commodities: usize, length: f64) -> Self {
        Self::new(vec![0.0; commodities], length)
    }

    pub fn total_density(&self) -> f64 {
        self.densities.iter().sum()
    }

    /// Density-weighted mean of the commodity properties.
    pub fn net_property(&self, commodities: &Commodities) -> Result<f64> {
        net_property(self, commodities)
    }

    pub fn validate(&self, commodities: &Commodities, fd: &FundamentalDiagram) -> Result<()> {
        if self.densities.len() != commodities.len() {
            return Err(Error::Dimension(format!(
                "link state has {} commodity densities, expected {}",
                self.densities.len(),
                commodities.len()
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid(format!(
                "link length must be positive, got {}",
                self.length
            )));
        }
        if self.densities.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid("densities must be finite and nonnegative"));
        }
        let total = self.total_density();
        if total > fd.jam_density() * (1.0 + JAM_SLACK) {
            return Err(Error::DensityOutOfRange {
                density: total,
                rho_max: fd.jam_density(),
            });
        }
        Ok(())
    }
}

/// Net property of a link; fails with [`Error::EmptyLink`] at zero density.
pub fn net_property(state: &LinkState, commodities: &Commodities) -> Result<f64> {
    if state.densities.len() != commodities.len() {
        return Err(Error::Dimension("commodity count".into()));
    }
    commodities.weighted_property(&state.densities).ok_or(Error::EmptyLink)
}

/// Intermediate Riemann state between an upstream flow and a downstream link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiddleState {
    pub property: f64,
    pub speed: f64,
    pub density: f64,
}

/// A velocity map `V(ρ, w)` strictly decreasing in `ρ`, zero only at jam.
pub trait VelocityModel {
    fn jam_density(&self) -> f64;

    /// `V(ρ, w)` for `ρ` already known to be in `[0, ρ_max]`.
    fn speed(&self, density: f64, property: f64) -> f64;

    /// Maximizer of `ρ V(ρ, w)`.
    fn critical_density(&self, property: f64) -> f64 {
        // golden-section search; ρ V is unimodal for the families we accept
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0, self.jam_density());
        let flow = |r: f64| r * self.speed(r, property);
        while b - a > INVERSION_TOLERANCE * self.jam_density() {
            let c = b - inv_phi * (b - a);
            let d = a + inv_phi * (b - a);
            if flow(c) < flow(d) {
                a = c;
            } else {
                b = d;
            }
        }
        0.5 * (a + b)
    }

    /// Density `ρ` with `V(ρ, w) = v`, by bisection on `[0, ρ_max]`.
    fn density_for_speed(&self, speed: f64, property: f64) -> Result<f64> {
        let rho_max = self.jam_density();
        let (mut lo, mut hi) = (0.0, rho_max);
        for _ in 0..200 {
            if hi - lo <= INVERSION_TOLERANCE * rho_max {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if self.speed(mid, property) > speed {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::Inversion { speed, property })
    }
}

/// `V(ρ, w) = w (1 - ρ/ρ_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Greenshields {
    pub rho_max: f64,
}

impl VelocityModel for Greenshields {
    fn jam_density(&self) -> f64 {
        self.rho_max
    }

    fn speed(&self, density: f64, property: f64) -> f64 {
        property * (1.0 - density / self.rho_max)
    }

    fn critical_density(&self, _property: f64) -> f64 {
        0.5 * self.rho_max
    }

    fn density_for_speed(&self, speed: f64, property: f64) -> Result<f64> {
        Ok((self.rho_max * (1.0 - speed / property)).clamp(0.0, self.rho_max))
    }
}

/// `V(ρ, w) = w φ(ρ/ρ_max)` with `φ` linear between tabulated points.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    rho_max: f64,
    /// `(ρ/ρ_max, φ)` breakpoints from `(0, 1)` to `(1, 0)`.
    points: Vec<(f64, f64)>,
    critical_fraction: f64,
}

impl PiecewiseLinear {
    /// Builds the family from interior breakpoints; `(0, 1)` and `(1, 0)`
    /// are added when missing.
    pub fn new(rho_max: f64, interior: &[(f64, f64)]) -> Result<Self> {
        if !(rho_max.is_finite() && rho_max > 0.0) {
            return Err(Error::invalid("jam density must be positive"));
        }
        let mut points = Vec::with_capacity(interior.len() + 2);
        if interior.first().is_none_or(|p| p.0 > 0.0) {
            points.push((0.0, 1.0));
        }
        points.extend_from_slice(interior);
        if points.last().is_none_or(|p| p.0 < 1.0) {
            points.push((1.0, 0.0));
        }
        let first = points[0];
        let last = points[points.len() - 1];
        if first != (0.0, 1.0) || last != (1.0, 0.0) {
            return Err(Error::invalid("table must run from (0, 1) to (1, 0)"));
        }
        for pair in points.windows(2) {
            let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
            if !(x1 > x0 && y1 < y0) {
                return Err(Error::invalid(
                    "table must be strictly increasing in density and strictly decreasing in speed",
                ));
            }
        }

        // x φ(x) is a concave-or-convex quadratic on each segment
        let mut best = (0.0, 0.0);
        for pair in points.windows(2) {
            let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
            let slope = (y1 - y0) / (x1 - x0);
            let intercept = y0 - slope * x0;
            let vertex = (-intercept / (2.0 * slope)).clamp(x0, x1);
            for x in [x0, x1, vertex] {
                let q = x * (intercept + slope * x);
                if q > best.1 {
                    best = (x, q);
                }
            }
        }

        Ok(Self {
            rho_max,
            points,
            critical_fraction: best.0,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn shape(&self, fraction: f64) -> f64 {
        let idx = self
            .points
            .partition_point(|p| p.0 <= fraction)
            .clamp(1, self.points.len() - 1);
        let (x0, y0) = self.points[idx - 1];
        let (x1, y1) = self.points[idx];
        y0 + (y1 - y0) * (fraction - x0) / (x1 - x0)
    }
}

impl VelocityModel for PiecewiseLinear {
    fn jam_density(&self) -> f64 {
        self.rho_max
    }

    fn speed(&self, density: f64, property: f64) -> f64 {
        property * self.shape(density / self.rho_max)
    }

    fn critical_density(&self, _property: f64) -> f64 {
        self.critical_fraction * self.rho_max
    }
}

/// The diagram families a link can use.
#[derive(Debug, Clone, PartialEq)]
pub enum FundamentalDiagram {
    Greenshields(Greenshields),
    Table(PiecewiseLinear),
}

impl FundamentalDiagram {
    pub fn greenshields(rho_max: f64) -> Self {
        FundamentalDiagram::Greenshields(Greenshields { rho_max })
    }

    fn model(&self) -> &dyn VelocityModel {
        match self {
            FundamentalDiagram::Greenshields(g) => g,
            FundamentalDiagram::Table(t) => t,
        }
    }

    pub fn jam_density(&self) -> f64 {
        self.model().jam_density()
    }

    /// Fastest wave or receding-vehicle speed as a multiple of the free
    /// speed; 1 for Greenshields, larger for tables steeper than `φ' = -1`.
    pub fn wave_factor(&self) -> f64 {
        match self {
            FundamentalDiagram::Greenshields(_) => 1.0,
            FundamentalDiagram::Table(t) => t.points.windows(2).fold(1.0, |k: f64, pair| {
                let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
                let slope = (y1 - y0) / (x1 - x0);
                let intercept = y0 - slope * x0;
                // d(xφ)/dx is linear on a segment
                let wave = (intercept + 2.0 * slope * x0)
                    .abs()
                    .max((intercept + 2.0 * slope * x1).abs());
                k.max(slope.abs()).max(wave)
            }),
        }
    }

    fn check_density(&self, density: f64) -> Result<f64> {
        let rho_max = self.jam_density();
        if density.is_nan() || density < 0.0 || density > rho_max * (1.0 + JAM_SLACK) {
            return Err(Error::DensityOutOfRange { density, rho_max });
        }
        Ok(density.min(rho_max))
    }

    /// `V(ρ, w)`.
    pub fn velocity(&self, density: f64, property: f64) -> Result<f64> {
        let density = self.check_density(density)?;
        if density >= self.jam_density() {
            return Ok(0.0);
        }
        Ok(self.model().speed(density, property).max(0.0))
    }

    /// `V(0, w)`.
    pub fn free_speed(&self, property: f64) -> f64 {
        self.model().speed(0.0, property)
    }

    pub fn critical_density(&self, property: f64) -> f64 {
        self.model().critical_density(property)
    }

    /// `F(w) = ρ_c(w) V(ρ_c(w), w)`.
    pub fn capacity(&self, property: f64) -> f64 {
        let rc = self.critical_density(property);
        rc * self.model().speed(rc, property)
    }

    /// Density with `V(ρ, w) = v`; `ρ_max` for `v = 0`.
    pub fn invert_density(&self, speed: f64, property: f64) -> Result<f64> {
        let free = self.free_speed(property);
        if speed.is_nan() || speed < 0.0 || speed > free * (1.0 + JAM_SLACK) {
            return Err(Error::InfeasibleSpeed {
                speed,
                property,
                free_speed: free,
            });
        }
        if speed <= 0.0 {
            return Ok(self.jam_density());
        }
        if speed >= free {
            return Ok(0.0);
        }
        self.model().density_for_speed(speed, property)
    }

    /// Sending function `S(ρ, w)`: free-branch flow, capped at capacity.
    pub fn demand_at(&self, density: f64, property: f64) -> Result<f64> {
        let density = self.check_density(density)?;
        if density <= self.critical_density(property) {
            Ok(density * self.velocity(density, property)?)
        } else {
            Ok(self.capacity(property))
        }
    }

    /// Receiving shape `R(ρ, w)`: capacity below critical density, flow above.
    pub fn supply_at(&self, density: f64, property: f64) -> Result<f64> {
        let density = self.check_density(density)?;
        if density <= self.critical_density(property) {
            Ok(self.capacity(property))
        } else {
            Ok(density * self.velocity(density, property)?)
        }
    }
}

/// `V(ρ, w)`.
pub fn velocity(density: f64, property: f64, fd: &FundamentalDiagram) -> Result<f64> {
    fd.velocity(density, property)
}

/// Density with `V(ρ, w) = v`.
pub fn invert_density(speed: f64, property: f64, fd: &FundamentalDiagram) -> Result<f64> {
    fd.invert_density(speed, property)
}

/// Sending flow of a link (veh/time); zero for an empty link.
pub fn demand(state: &LinkState, commodities: &Commodities, fd: &FundamentalDiagram) -> Result<f64> {
    match net_property(state, commodities) {
        Ok(w) => fd.demand_at(state.total_density(), w),
        Err(Error::EmptyLink) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Exit speed of a downstream link's vehicles. An empty link has no
/// property of its own, so the entering flow's property stands in.
pub fn downstream_speed(
    downstream: &LinkState,
    commodities: &Commodities,
    fd: &FundamentalDiagram,
    entering_property: f64,
) -> Result<f64> {
    match net_property(downstream, commodities) {
        Ok(w) => fd.velocity(downstream.total_density(), w),
        Err(Error::EmptyLink) => Ok(fd.free_speed(entering_property)),
        Err(e) => Err(e),
    }
}

/// Middle state for an entering property and a known downstream exit speed.
pub fn middle_state_for_speed(
    entering_property: f64,
    downstream_speed: f64,
    fd: &FundamentalDiagram,
) -> Result<MiddleState> {
    let speed = fd.free_speed(entering_property).min(downstream_speed);
    let density = fd.invert_density(speed, entering_property)?;
    Ok(MiddleState {
        property: entering_property,
        speed,
        density,
    })
}

/// Middle state at a 1-to-1 boundary.
pub fn middle_state(
    entering_property: f64,
    downstream: &LinkState,
    commodities: &Commodities,
    fd: &FundamentalDiagram,
) -> Result<MiddleState> {
    if entering_property.is_nan() || entering_property <= 0.0 {
        return Err(Error::invalid("entering property must be positive"));
    }
    let vj = downstream_speed(downstream, commodities, fd, entering_property)?;
    middle_state_for_speed(entering_property, vj, fd)
}

/// Supply implied by a middle state: `F(w_M)` if uncongested, else `ρ_M v_M`.
pub fn supply_from_middle(middle: &MiddleState, fd: &FundamentalDiagram) -> f64 {
    if middle.density <= fd.critical_density(middle.property) {
        fd.capacity(middle.property)
    } else {
        middle.density * middle.speed
    }
}

/// Receiving flow of a downstream link for vehicles with the given property.
pub fn supply_1to1(
    entering_property: f64,
    downstream: &LinkState,
    commodities: &Commodities,
    fd: &FundamentalDiagram,
) -> Result<f64> {
    let m = middle_state(entering_property, downstream, commodities, fd)?;
    Ok(supply_from_middle(&m, fd))
}

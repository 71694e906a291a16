//! Abstract contract for Hadamard (complete, simply connected, nonpositively
//! curved) Riemannian manifolds, plus feasible sets and metric projection.
//!
//! The optimizer, the certificate checks and the Busemann machinery are
//! written against [`HadamardManifold`] so their logic is independent of the
//! concrete space; the crate ships one instantiation, the SPD manifold with
//! the affine-invariant metric (see [`crate::spd`]).

use crate::error::{Error, Result};

/// Operations a Hadamard manifold must provide.
///
/// Implementations are expected to satisfy, up to numerical tolerance:
///
/// * `inner` is bilinear, symmetric and positive definite on each tangent
///   space;
/// * `exp` and `log` are mutually inverse (`log(x, exp(x, u)) = u`);
/// * `dist` is a metric and `dist(x, exp(x, u)) = norm(x, u)`;
/// * `geodesic_point(x, y, t)` traces the unique minimizing geodesic, with
///   `dist(x, geodesic_point(x, y, t)) = t * dist(x, y)` for `t` in `[0, 1]`.
pub trait HadamardManifold {
    /// A point on the manifold.
    type Point: Clone + PartialEq + std::fmt::Debug;
    /// A tangent vector, attached to a base point.
    type Tangent: Clone + std::fmt::Debug;

    /// Riemannian inner product of `u` and `v` in the tangent space at `x`.
    fn inner(&self, x: &Self::Point, u: &Self::Tangent, v: &Self::Tangent) -> Result<f64>;

    /// Riemannian norm of `u` at `x`; default derives from `inner`.
    fn norm(&self, x: &Self::Point, u: &Self::Tangent) -> Result<f64> {
        Ok(self.inner(x, u, u)?.max(0.0).sqrt())
    }

    /// Exponential map: the point reached after unit time along the geodesic
    /// leaving `x` with velocity `u`.
    fn exp(&self, x: &Self::Point, u: &Self::Tangent) -> Result<Self::Point>;

    /// Logarithm map: the tangent vector at `x` pointing to `y` with norm
    /// `dist(x, y)`. Inverse of `exp` on a Hadamard manifold.
    fn log(&self, x: &Self::Point, y: &Self::Point) -> Result<Self::Tangent>;

    /// Geodesic distance between `x` and `y`.
    fn dist(&self, x: &Self::Point, y: &Self::Point) -> Result<f64>;

    /// Point at parameter `t` in `[0, 1]` on the geodesic from `x` to `y`.
    fn geodesic_point(&self, x: &Self::Point, y: &Self::Point, t: f64) -> Result<Self::Point>;

    /// Scale a tangent vector by `c` (same base point).
    fn scale_tangent(&self, u: &Self::Tangent, c: f64) -> Self::Tangent;

    /// Distance from `x` to the point `exp(p, -t * dir/|dir|)` at ray
    /// parameter `t >= 0`.
    ///
    /// The default composes `exp` and `dist`. Implementations should
    /// override it when the ray point leaves the numerically representable
    /// region long before the Busemann partial values converge, as happens
    /// on the SPD manifold where eigenvalues scale like `exp(±t)`.
    fn ray_distance(
        &self,
        p: &Self::Point,
        dir: &Self::Tangent,
        t: f64,
        x: &Self::Point,
    ) -> Result<f64> {
        let speed = self.norm(p, dir)?;
        if speed <= 0.0 {
            return Err(Error::ZeroDirection);
        }
        if t < 0.0 {
            return Err(Error::ParamOutOfRange {
                name: "t",
                value: t,
                range: "[0, inf)",
            });
        }
        let step = self.scale_tangent(dir, -t / speed);
        let gamma_t = self.exp(p, &step)?;
        self.dist(&gamma_t, x)
    }
}

/// Constraint set for the projected online update.
pub enum FeasibleSet<M: HadamardManifold> {
    /// No constraint; projection is the identity.
    WholeManifold,
    /// Closed geodesic ball `{ z : dist(center, z) <= radius }`.
    GeodesicBall { center: M::Point, radius: f64 },
}

impl<M: HadamardManifold> Clone for FeasibleSet<M> {
    fn clone(&self) -> Self {
        match self {
            FeasibleSet::WholeManifold => FeasibleSet::WholeManifold,
            FeasibleSet::GeodesicBall { center, radius } => FeasibleSet::GeodesicBall {
                center: center.clone(),
                radius: *radius,
            },
        }
    }
}

impl<M: HadamardManifold> std::fmt::Debug for FeasibleSet<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeasibleSet::WholeManifold => write!(f, "WholeManifold"),
            FeasibleSet::GeodesicBall { center, radius } => f
                .debug_struct("GeodesicBall")
                .field("center", center)
                .field("radius", radius)
                .finish(),
        }
    }
}

impl<M: HadamardManifold> FeasibleSet<M> {
    /// The unconstrained set.
    pub fn whole() -> Self {
        FeasibleSet::WholeManifold
    }

    /// Closed geodesic ball; `radius` must be positive and finite.
    pub fn geodesic_ball(center: M::Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::ParamOutOfRange {
                name: "radius",
                value: radius,
                range: "(0, inf)",
            });
        }
        Ok(FeasibleSet::GeodesicBall { center, radius })
    }

    /// Whether `z` lies in the set, with `slack` absorbing roundoff on the
    /// boundary.
    pub fn contains(&self, manifold: &M, z: &M::Point, slack: f64) -> Result<bool> {
        match self {
            FeasibleSet::WholeManifold => Ok(true),
            FeasibleSet::GeodesicBall { center, radius } => {
                Ok(manifold.dist(center, z)? <= radius + slack)
            }
        }
    }

    /// Upper bound on the set diameter, when one exists.
    pub fn diameter_bound(&self) -> Option<f64> {
        match self {
            FeasibleSet::WholeManifold => None,
            FeasibleSet::GeodesicBall { radius, .. } => Some(2.0 * radius),
        }
    }

    /// Metric projection of `z` onto the set.
    ///
    /// On a Hadamard manifold the projection onto a closed geodesic ball is
    /// unique: interior points are fixed, exterior points map to the boundary
    /// point of the geodesic from the center towards `z`, i.e. the geodesic
    /// point at parameter `radius / dist(center, z)`. The map is idempotent
    /// and non-expansive.
    pub fn project(&self, manifold: &M, z: &M::Point) -> Result<M::Point> {
        match self {
            FeasibleSet::WholeManifold => Ok(z.clone()),
            FeasibleSet::GeodesicBall { center, radius } => {
                let d = manifold.dist(center, z)?;
                if d <= *radius {
                    Ok(z.clone())
                } else {
                    manifold.geodesic_point(center, z, radius / d)
                }
            }
        }
    }
}

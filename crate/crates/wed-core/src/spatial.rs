//! Spatial models: a single scalar degree of freedom or a 1-D interval with
//! homogeneous Dirichlet conditions, together with the energy
//!
//! ```text
//! phi(u) = 1/2 ∫ |∇u|²  +  ∫ W(u)
//! ```
//!
//! its gradient (the Riesz representative of the differential in the lumped
//! L² product) and the corresponding Hessian action.
//!
//! The interval discretization is piecewise-linear finite elements on a
//! uniform mesh with mass lumping, which collapses to the forward-difference
//! stiffness (including the boundary edges to the pinned zeros) plus nodal
//! evaluation of the potential. Nodal quadrature keeps `grad_phi` exactly the
//! gradient of `phi`, which the Newton solvers require.

use crate::{Error, Result};

/// Spatial discretization descriptor.
///
/// `Scalar` is the zero-dimensional model: one degree of freedom and no
/// gradient energy. `Interval` is `[-L, L]` with `m` interior nodes, mesh
/// size `h = 2L/(m+1)`, and homogeneous Dirichlet values at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialDomain {
    Scalar,
    Interval { half_length: f64, interior: usize, mesh: f64 },
}

impl SpatialDomain {
    pub fn scalar() -> Self {
        SpatialDomain::Scalar
    }

    pub fn interval(half_length: f64, interior: usize) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::Config(format!(
                "interval half-length must be positive, got {half_length}"
            )));
        }
        if interior < 3 {
            return Err(Error::Config(format!(
                "interval needs at least 3 interior nodes, got {interior}"
            )));
        }
        let mesh = 2.0 * half_length / (interior as f64 + 1.0);
        Ok(SpatialDomain::Interval { half_length, interior, mesh })
    }

    /// Number of degrees of freedom carried by a state on this domain.
    pub fn dof(&self) -> usize {
        match self {
            SpatialDomain::Scalar => 1,
            SpatialDomain::Interval { interior, .. } => *interior,
        }
    }

    /// Interior node coordinates (empty for the scalar model).
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            SpatialDomain::Scalar => vec![],
            SpatialDomain::Interval { half_length, interior, mesh } => {
                (1..=*interior).map(|j| -half_length + j as f64 * mesh).collect()
            }
        }
    }

    fn mesh_or_one(&self) -> f64 {
        match self {
            SpatialDomain::Scalar => 1.0,
            SpatialDomain::Interval { mesh, .. } => *mesh,
        }
    }
}

/// One spatial state: a point of the discretized configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    domain: SpatialDomain,
    dofs: Vec<f64>,
}

impl StateVector {
    pub fn new(domain: SpatialDomain, dofs: Vec<f64>) -> Result<Self> {
        if dofs.len() != domain.dof() {
            return Err(Error::Dimension(format!(
                "state has {} dofs, domain expects {}",
                dofs.len(),
                domain.dof()
            )));
        }
        if !dofs.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("state vector".into()));
        }
        Ok(StateVector { domain, dofs })
    }

    pub fn zeros(domain: SpatialDomain) -> Self {
        StateVector { domain, dofs: vec![0.0; domain.dof()] }
    }

    pub fn scalar(value: f64) -> Self {
        StateVector { domain: SpatialDomain::Scalar, dofs: vec![value] }
    }

    pub fn domain(&self) -> SpatialDomain {
        self.domain
    }

    pub fn dofs(&self) -> &[f64] {
        &self.dofs
    }

    pub fn dofs_mut(&mut self) -> &mut [f64] {
        &mut self.dofs
    }

    pub fn is_finite(&self) -> bool {
        self.dofs.iter().all(|x| x.is_finite())
    }

    /// Lumped L² inner product: `h Σ u_j v_j` on the interval, plain product
    /// in the scalar model.
    pub fn inner(&self, other: &StateVector) -> f64 {
        debug_assert_eq!(self.domain, other.domain);
        let dot: f64 = self.dofs.iter().zip(&other.dofs).map(|(a, b)| a * b).sum();
        self.domain.mesh_or_one() * dot
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.dofs.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, a: f64) -> StateVector {
        StateVector {
            domain: self.domain,
            dofs: self.dofs.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        debug_assert_eq!(self.domain, other.domain);
        StateVector {
            domain: self.domain,
            dofs: self.dofs.iter().zip(&other.dofs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        debug_assert_eq!(self.domain, other.domain);
        StateVector {
            domain: self.domain,
            dofs: self.dofs.iter().zip(&other.dofs).map(|(a, b)| a - b).collect(),
        }
    }

    /// `self += a * other`, in place.
    pub fn axpy(&mut self, a: f64, other: &StateVector) {
        debug_assert_eq!(self.domain, other.domain);
        for (x, y) in self.dofs.iter_mut().zip(&other.dofs) {
            *x += a * y;
        }
    }
}

/// Potential family `W` entering the energy and the limit equation.
///
/// * `Power(p)`: `W(r) = |r|^p / 2` with `p > 2`; the limit dynamic carries
///   the force `W'(r) = (p/2)|r|^{p-2} r`.
/// * `Quadratic`: `W(r) = r²/2`, the Klein-Gordon extension.
/// * `Zero`: potential disabled; the energy reduces to its gradient part.
/// * `Custom`: user-supplied `W, W', W''` with declared polynomial growth.
#[derive(Clone)]
pub enum Nonlinearity {
    Power { p: f64 },
    Quadratic,
    Zero,
    Custom {
        w: fn(f64) -> f64,
        dw: fn(f64) -> f64,
        d2w: fn(f64) -> f64,
        growth: f64,
        c_growth: f64,
    },
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Nonlinearity::Power { p } => write!(f, "Power(p={p})"),
            Nonlinearity::Quadratic => write!(f, "Quadratic"),
            Nonlinearity::Zero => write!(f, "Zero"),
            Nonlinearity::Custom { growth, .. } => write!(f, "Custom(p={growth})"),
        }
    }
}

impl Nonlinearity {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::Config(format!("power exponent must satisfy p > 2, got {p}")));
        }
        Ok(Nonlinearity::Power { p })
    }

    /// Validates convexity and the declared growth bounds on a probe grid
    /// before accepting a custom potential.
    pub fn custom(
        w: fn(f64) -> f64,
        dw: fn(f64) -> f64,
        d2w: fn(f64) -> f64,
        growth: f64,
        c_growth: f64,
    ) -> Result<Self> {
        if !(growth >= 2.0) {
            return Err(Error::Config(format!(
                "growth exponent must satisfy p >= 2, got {growth}"
            )));
        }
        if !(c_growth > 0.0) {
            return Err(Error::Config("growth constant must be positive".into()));
        }
        let conj = growth / (growth - 1.0);
        for k in -40..=40 {
            let r = 0.25 * k as f64;
            if d2w(r) < 0.0 {
                return Err(Error::Config(format!("custom potential not convex at r = {r}")));
            }
            if r.abs().powf(growth) / c_growth > w(r) + c_growth {
                return Err(Error::Config(format!(
                    "custom potential violates lower growth bound at r = {r}"
                )));
            }
            if dw(r).abs().powf(conj) > c_growth * (1.0 + r.abs().powf(growth)) {
                return Err(Error::Config(format!(
                    "custom potential violates derivative growth bound at r = {r}"
                )));
            }
        }
        Ok(Nonlinearity::Custom { w, dw, d2w, growth, c_growth })
    }

    pub fn w(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Power { p } => 0.5 * r.abs().powf(*p),
            Nonlinearity::Quadratic => 0.5 * r * r,
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Custom { w, .. } => w(r),
        }
    }

    pub fn dw(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Power { p } => 0.5 * p * r.abs().powf(p - 2.0) * r,
            Nonlinearity::Quadratic => r,
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Custom { dw, .. } => dw(r),
        }
    }

    /// Second derivative of `W`. For `2 < p < 3` the power kind takes the
    /// limit value `W''(0) = 0`, keeping the Hessian finite.
    pub fn d2w(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Power { p } => {
                if r == 0.0 {
                    0.0
                } else {
                    0.5 * p * (p - 1.0) * r.abs().powf(p - 2.0)
                }
            }
            Nonlinearity::Quadratic => 1.0,
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Custom { d2w, .. } => d2w(r),
        }
    }

    /// Growth exponent of the potential; `None` when the potential is
    /// disabled (no `|u|^p` contribution to energy estimates).
    pub fn growth_exponent(&self) -> Option<f64> {
        match self {
            Nonlinearity::Power { p } => Some(*p),
            Nonlinearity::Quadratic => Some(2.0),
            Nonlinearity::Zero => None,
            Nonlinearity::Custom { growth, .. } => Some(*growth),
        }
    }
}

/// Energy `phi(u)`: half the squared forward-difference gradient (with
/// boundary edges to the pinned zeros) plus the lumped potential.
pub fn phi(u: &StateVector, nl: &Nonlinearity) -> f64 {
    match u.domain() {
        SpatialDomain::Scalar => nl.w(u.dofs()[0]),
        SpatialDomain::Interval { mesh: h, .. } => {
            let d = u.dofs();
            let mut grad = d[0] * d[0]; // edge from the left boundary zero
            for w in d.windows(2) {
                let e = w[1] - w[0];
                grad += e * e;
            }
            grad += d[d.len() - 1] * d[d.len() - 1]; // edge to the right boundary zero
            let pot: f64 = d.iter().map(|&r| nl.w(r)).sum();
            0.5 * grad / h + h * pot
        }
    }
}

/// Riesz representative of `D phi(u)` in the lumped L² product:
/// `g = -Δ_h u + W'(u)` on the interval, `g = W'(u)` in the scalar model.
pub fn grad_phi(u: &StateVector, nl: &Nonlinearity) -> StateVector {
    match u.domain() {
        SpatialDomain::Scalar => StateVector::scalar(nl.dw(u.dofs()[0])),
        SpatialDomain::Interval { mesh: h, .. } => {
            let d = u.dofs();
            let m = d.len();
            let mut g = vec![0.0; m];
            let h2 = h * h;
            for j in 0..m {
                let left = if j == 0 { 0.0 } else { d[j - 1] };
                let right = if j + 1 == m { 0.0 } else { d[j + 1] };
                g[j] = (2.0 * d[j] - left - right) / h2 + nl.dw(d[j]);
            }
            StateVector { domain: u.domain(), dofs: g }
        }
    }
}

/// Action of `D² phi(u)` on `v`: stiffness applied to `v` plus the pointwise
/// `W''(u_j) v_j` weighting.
pub fn hess_phi_apply(u: &StateVector, v: &StateVector, nl: &Nonlinearity) -> StateVector {
    debug_assert_eq!(u.domain(), v.domain());
    match u.domain() {
        SpatialDomain::Scalar => StateVector::scalar(nl.d2w(u.dofs()[0]) * v.dofs()[0]),
        SpatialDomain::Interval { mesh: h, .. } => {
            let uu = u.dofs();
            let vv = v.dofs();
            let m = vv.len();
            let mut out = vec![0.0; m];
            let h2 = h * h;
            for j in 0..m {
                let left = if j == 0 { 0.0 } else { vv[j - 1] };
                let right = if j + 1 == m { 0.0 } else { vv[j + 1] };
                out[j] = (2.0 * vv[j] - left - right) / h2 + nl.d2w(uu[j]) * vv[j];
            }
            StateVector { domain: u.domain(), dofs: out }
        }
    }
}

/// Diagonal of `D² phi(u)` in the same representation as [`hess_phi_apply`].
pub(crate) fn hess_phi_diagonal(u: &StateVector, nl: &Nonlinearity) -> StateVector {
    match u.domain() {
        SpatialDomain::Scalar => StateVector::scalar(nl.d2w(u.dofs()[0])),
        SpatialDomain::Interval { mesh: h, .. } => {
            let dofs = u
                .dofs()
                .iter()
                .map(|&r| 2.0 / (h * h) + nl.d2w(r))
                .collect();
            StateVector { domain: u.domain(), dofs }
        }
    }
}

/// Named initial-datum constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDatum {
    Zero,
    Constant(f64),
    /// `u(x) = max(0, 1 - (x/r0)²)²`, compactly supported in `|x| < r0`.
    Bump { radius: f64 },
}

impl InitialDatum {
    pub fn build(&self, domain: SpatialDomain) -> Result<StateVector> {
        match (self, domain) {
            (InitialDatum::Zero, d) => Ok(StateVector::zeros(d)),
            (InitialDatum::Constant(c), SpatialDomain::Scalar) => Ok(StateVector::scalar(*c)),
            (InitialDatum::Constant(c), d @ SpatialDomain::Interval { .. }) => {
                StateVector::new(d, vec![*c; d.dof()])
            }
            (InitialDatum::Bump { radius }, d @ SpatialDomain::Interval { .. }) => {
                if !(*radius > 0.0) {
                    return Err(Error::Config("bump radius must be positive".into()));
                }
                let dofs = d
                    .nodes()
                    .iter()
                    .map(|&x| {
                        let s = 1.0 - (x / radius) * (x / radius);
                        if s > 0.0 { s * s } else { 0.0 }
                    })
                    .collect();
                StateVector::new(d, dofs)
            }
            (InitialDatum::Bump { .. }, SpatialDomain::Scalar) => Err(Error::Config(
                "bump datum requires a 1-D interval domain".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> Nonlinearity {
        Nonlinearity::power(4.0).unwrap()
    }

    #[test]
    fn phi_vanishes_at_zero() {
        let d = SpatialDomain::interval(1.0, 3).unwrap();
        let u = StateVector::zeros(d);
        assert_eq!(phi(&u, &p4()), 0.0);
    }

    #[test]
    fn phi_scalar_is_potential() {
        let u = StateVector::scalar(1.0);
        assert_eq!(phi(&u, &p4()), 0.5);
        assert_eq!(grad_phi(&u, &p4()).dofs()[0], 2.0);
    }

    #[test]
    fn phi_single_node_interval_hand_value() {
        // L = 1, m = 1 would violate the m >= 3 bound; build the descriptor
        // directly to check the two-edge sum phi = 1/2 (1+1) + 1/2 = 1.5.
        let d = SpatialDomain::Interval { half_length: 1.0, interior: 1, mesh: 1.0 };
        let u = StateVector::new(d, vec![1.0]).unwrap();
        assert!((phi(&u, &p4()) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn hess_scalar_p4_at_one() {
        let u = StateVector::scalar(1.0);
        let v = StateVector::scalar(1.0);
        assert_eq!(hess_phi_apply(&u, &v, &p4()).dofs()[0], 6.0);
    }

    #[test]
    fn hess_on_zero_direction_is_zero() {
        let d = SpatialDomain::interval(2.0, 5).unwrap();
        let u = StateVector::new(d, vec![0.3, -0.1, 0.7, 0.2, -0.5]).unwrap();
        let v = StateVector::zeros(d);
        assert_eq!(hess_phi_apply(&u, &v, &p4()).norm(), 0.0);
    }

    #[test]
    fn grad_phi_matches_central_difference() {
        let d = SpatialDomain::interval(2.0, 8).unwrap();
        let u = StateVector::new(d, vec![0.4, -0.3, 0.9, 0.1, -0.6, 0.5, 0.2, -0.8]).unwrap();
        let v = StateVector::new(d, vec![0.1, 0.7, -0.2, 0.5, 0.3, -0.4, 0.6, 0.9]).unwrap();
        let nl = p4();
        let s = 1e-6;
        let up = {
            let mut t = u.clone();
            t.axpy(s, &v);
            t
        };
        let um = {
            let mut t = u.clone();
            t.axpy(-s, &v);
            t
        };
        let fd = (phi(&up, &nl) - phi(&um, &nl)) / (2.0 * s);
        let gv = grad_phi(&u, &nl).inner(&v);
        assert!(
            (fd - gv).abs() <= 1e-6 * gv.abs().max(1.0),
            "fd {fd} vs <g,v> {gv}"
        );
    }

    #[test]
    fn d2w_limit_at_origin_for_small_p() {
        let nl = Nonlinearity::power(2.5).unwrap();
        assert_eq!(nl.d2w(0.0), 0.0);
        assert!(nl.d2w(0.1).is_finite());
    }

    #[test]
    fn phi_convex_on_probes() {
        let d = SpatialDomain::interval(2.0, 6).unwrap();
        let nl = p4();
        let u = StateVector::new(d, vec![0.9, -0.2, 0.4, -0.7, 0.3, 0.8]).unwrap();
        let v = StateVector::new(d, vec![-0.5, 0.6, 0.1, 0.2, -0.9, 0.4]).unwrap();
        for &lam in &[0.25, 0.5, 0.75] {
            let mix = u.scale(lam).add(&v.scale(1.0 - lam));
            let lhs = phi(&mix, &nl);
            let rhs = lam * phi(&u, &nl) + (1.0 - lam) * phi(&v, &nl);
            let scale = phi(&u, &nl).abs() + phi(&v, &nl).abs();
            assert!(lhs <= rhs + 1e-12 * scale);
        }
    }

    #[test]
    fn bump_is_compactly_supported() {
        let d = SpatialDomain::interval(8.0, 127).unwrap();
        let u = InitialDatum::Bump { radius: 2.0 }.build(d).unwrap();
        for (x, v) in d.nodes().iter().zip(u.dofs()) {
            if x.abs() >= 2.0 {
                assert_eq!(*v, 0.0);
            } else {
                assert!(*v > 0.0);
            }
        }
    }

    #[test]
    fn bump_rejected_on_scalar_domain() {
        let err = InitialDatum::Bump { radius: 1.0 }.build(SpatialDomain::scalar());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn interval_requires_three_nodes() {
        assert!(SpatialDomain::interval(1.0, 2).is_err());
    }

    #[test]
    fn quadratic_kind_is_klein_gordon_term() {
        let nl = Nonlinearity::Quadratic;
        assert_eq!(nl.dw(0.7), 0.7);
        assert_eq!(nl.d2w(-3.0), 1.0);
        assert_eq!(nl.growth_exponent(), Some(2.0));
    }

    #[test]
    fn custom_growth_validation_rejects_nonconvex() {
        fn w(r: f64) -> f64 {
            -r * r
        }
        fn dw(r: f64) -> f64 {
            -2.0 * r
        }
        fn d2w(_: f64) -> f64 {
            -2.0
        }
        assert!(Nonlinearity::custom(w, dw, d2w, 2.0, 4.0).is_err());
    }
}

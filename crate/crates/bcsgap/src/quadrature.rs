//! Radial grids, Gauss–Legendre panel quadrature, and the angular-average
//! kernel that reduces the 3D convolution with the potential's Fourier
//! transform to a 1D radial kernel.
//!
//! The momentum grids cluster geometrically in the variable
//! s = |p^2 - mu| / mu on both sides of the Fermi surface p = sqrt(mu),
//! so that integrands with a 1/E(p) near-singularity of width Delta/mu
//! are resolved down to s ~ inner_scale. Panels carry a fixed-order
//! Gauss–Legendre rule; error control is by grid doubling.

use crate::error::{BcsError, Result};
use crate::potentials::Potential;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fixed Gauss–Legendre order used inside panels.
pub const PANEL_ORDER: usize = 16;

// ---------------------------------------------------------------------------
// Gauss–Legendre rules
// ---------------------------------------------------------------------------

/// Legendre polynomial P_n(x) and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on
/// Chebyshev initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, dp) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// A reusable fixed-order rule, mapped onto arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        GaussRule { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

// ---------------------------------------------------------------------------
// Adaptive quadrature
// ---------------------------------------------------------------------------

/// Adaptive bisection quadrature with a Gauss–Legendre base rule.
///
/// A segment is accepted when its value agrees with the sum of its two
/// halves to the local tolerance; the budgeted tolerance splits with the
/// segment. Non-convergence reports the residual estimate.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let rule = GaussRule::new(PANEL_ORDER);
    let coarse = rule.integrate(f, a, b);
    // Scale tolerance by a refined magnitude estimate of the integral.
    let m = 0.5 * (a + b);
    let refined = rule.integrate(f, a, m) + rule.integrate(f, m, b);
    let scale = refined.abs().max(1e-300);
    let tol = rel_tol * scale;
    let mut residual = 0.0f64;
    let value = adaptive_step(f, &rule, a, b, coarse, tol, 48, &mut residual);
    match value {
        Some(v) => Ok(v),
        None => Err(BcsError::QuadratureNonConvergent {
            context: format!("adaptive quadrature on [{a:.3e}, {b:.3e}]"),
            residual,
        }),
    }
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    rule: &GaussRule,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    residual: &mut f64,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    let err = (left + right - whole).abs();
    // Roundoff floor: segment values cannot agree better than machine noise.
    let floor = 100.0 * f64::EPSILON * (left.abs() + right.abs());
    if err <= tol.max(floor).max(1e-300) || (b - a) < 1e-300 {
        return Some(left + right);
    }
    if depth == 0 {
        *residual = residual.max(err);
        return None;
    }
    let l = adaptive_step(f, rule, a, m, left, 0.5 * tol, depth - 1, residual)?;
    let r = adaptive_step(f, rule, m, b, right, 0.5 * tol, depth - 1, residual)?;
    Some(l + r)
}

// ---------------------------------------------------------------------------
// Panel grids
// ---------------------------------------------------------------------------

/// Nodes, weights, and the panel decomposition of a composite quadrature.
#[derive(Debug, Clone)]
pub struct PanelGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Panel boundaries; panel k spans [bounds[k], bounds[k+1]].
    pub bounds: Vec<f64>,
}

impl PanelGrid {
    /// Composite rule over the given ascending breakpoints.
    pub fn from_bounds(bounds: Vec<f64>, rule: &GaussRule) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in bounds.windows(2) {
            for (x, w) in rule.mapped(pair[0], pair[1]) {
                nodes.push(x);
                weights.push(w);
            }
        }
        PanelGrid {
            nodes,
            weights,
            bounds,
        }
    }

    /// Uniform panels on [a, b].
    pub fn uniform(a: f64, b: f64, n_panels: usize, rule: &GaussRule) -> Self {
        let n = n_panels.max(1);
        let bounds = (0..=n)
            .map(|k| a + (b - a) * k as f64 / n as f64)
            .collect();
        PanelGrid::from_bounds(bounds, rule)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate_samples(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

// ---------------------------------------------------------------------------
// Radial momentum grid
// ---------------------------------------------------------------------------

/// Which construction region a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionTag {
    Inner,
    Wing,
    Tail,
}

/// Momentum nodes and quadrature weights clustered near the Fermi surface.
///
/// Inner-region nodes are generated in the s = (p^2 - mu)/mu coordinate,
/// where the clustering happens, and mapped to p; `s_nodes` carries the
/// construction-exact s so dispersion evaluations near the Fermi surface
/// never lose precision to the p^2 - mu cancellation.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Signed s = (p^2 - mu)/mu per node, exact where the grid clusters.
    pub s_nodes: Vec<f64>,
    pub mu: f64,
    pub inner_scale: f64,
    pub p_max: f64,
    pub region_tags: Vec<RegionTag>,
    /// Panel boundaries in p, for quadratures that must respect the layout.
    pub bounds: Vec<f64>,
    /// fl(sqrt(mu)); see `kinetic_offset`.
    pub sqrt_mu: f64,
    params: GridParams,
}

/// Node-count parameters of `build_grid`, retained for doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n_inner: usize,
    pub n_wing: usize,
    pub n_tail: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            n_inner: 128,
            n_wing: 64,
            n_tail: 64,
        }
    }
}

/// Upper edge (in s = (p^2 - mu)/mu) of the uniform wing region.
const WING_S_MAX: f64 = 9.0;

/// Build the composite momentum grid.
///
/// Geometric clustering of |s| = |p^2 - mu|/mu from inner_scale/100 up to 1
/// on both sides of sqrt(mu); a uniform-in-s wing over 1 <= s <= 9; then an
/// algebraically spaced tail up to p_max. Weights come from Gauss–Legendre
/// panels laid in p, so smooth integrands keep spectral panel accuracy.
pub fn build_grid(
    mu: f64,
    inner_scale: f64,
    p_max: f64,
    n_inner: usize,
    n_wing: usize,
    n_tail: usize,
) -> Result<RadialGrid> {
    if !(mu > 0.0) {
        return Err(BcsError::InvalidArgument(format!("mu must be > 0, got {mu}")));
    }
    if !(inner_scale > 0.0 && inner_scale <= 1.0) {
        return Err(BcsError::InvalidArgument(format!(
            "inner_scale must lie in (0, 1], got {inner_scale}"
        )));
    }
    if !(p_max * p_max > 4.0 * mu) {
        return Err(BcsError::InvalidArgument(format!(
            "p_max^2 = {:.3e} must exceed 4 mu = {:.3e}",
            p_max * p_max,
            4.0 * mu
        )));
    }
    if n_inner == 0 || n_wing == 0 || n_tail == 0 {
        return Err(BcsError::InvalidArgument(
            "node counts must be positive".into(),
        ));
    }

    let rule = GaussRule::new(PANEL_ORDER);
    // Clustering below s ~ 1e-13 would alias distinct s onto equal p
    // under double precision, and the integrands are flat there anyway.
    let s_min = (inner_scale / 100.0).max(1e-13);
    let s_max = p_max * p_max / mu - 1.0;
    let sqrt_mu = mu.sqrt();
    let p_of = |s: f64| (mu * (1.0 + s)).sqrt();

    // Panels per decade of s; 3 decades per side sit inside |s| < 10 inner_scale,
    // so 96 * ppd nodes land there and the n_inner contract holds.
    let ppd = (n_inner as f64 / 96.0).ceil().max(1.0) as usize;
    let decades = (1.0 / s_min).log10();
    let n_side = (decades * ppd as f64).ceil().max(1.0) as usize;
    let ratio = (1.0 / s_min).powf(1.0 / n_side as f64);
    let mut s_bounds = Vec::with_capacity(n_side + 1);
    s_bounds.push(s_min);
    for k in 1..n_side {
        s_bounds.push(s_min * ratio.powi(k as i32));
    }
    s_bounds.push(1.0);

    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut s_nodes = Vec::new();
    let mut node_tags = Vec::new();
    let mut bounds: Vec<f64> = vec![0.0];

    // Inner nodes live on signed-s panels; p = sqrt(mu (1 + s)) with the
    // Jacobian dp/ds = sqrt(mu) / (2 sqrt(1 + s)) folded into the weight.
    let emit_s_panel = |sa: f64,
                            sb: f64,
                            tag: RegionTag,
                            nodes: &mut Vec<f64>,
                            weights: &mut Vec<f64>,
                            s_nodes: &mut Vec<f64>,
                            node_tags: &mut Vec<RegionTag>,
                            bounds: &mut Vec<f64>| {
        for (s, w) in rule.mapped(sa, sb) {
            nodes.push(p_of(s));
            weights.push(w * sqrt_mu / (2.0 * (1.0 + s).sqrt()));
            s_nodes.push(s);
            node_tags.push(tag);
        }
        bounds.push(p_of(sb));
    };
    let emit_p_panel = |a: f64,
                            b: f64,
                            tag: RegionTag,
                            nodes: &mut Vec<f64>,
                            weights: &mut Vec<f64>,
                            s_nodes: &mut Vec<f64>,
                            node_tags: &mut Vec<RegionTag>,
                            bounds: &mut Vec<f64>| {
        for (p, w) in rule.mapped(a, b) {
            nodes.push(p);
            weights.push(w);
            s_nodes.push((p - sqrt_mu) * (p + sqrt_mu) / mu);
            node_tags.push(tag);
        }
        bounds.push(b);
    };

    // Low end p in [0, sqrt(mu (1 - S2))] in p-space (the s -> -1 Jacobian
    // is singular); S2 is the second-largest clustering boundary.
    let s2 = s_bounds[s_bounds.len() - 2];
    emit_p_panel(
        0.0,
        p_of(-s2),
        RegionTag::Inner,
        &mut nodes,
        &mut weights,
        &mut s_nodes,
        &mut node_tags,
        &mut bounds,
    );
    // Signed-s ladder: [-S2, ..., -s_min], the center [-s_min, s_min],
    // then [s_min, ..., 1].
    for k in (1..s_bounds.len() - 1).rev() {
        emit_s_panel(
            -s_bounds[k],
            -s_bounds[k - 1],
            RegionTag::Inner,
            &mut nodes,
            &mut weights,
            &mut s_nodes,
            &mut node_tags,
            &mut bounds,
        );
    }
    emit_s_panel(
        -s_min,
        s_min,
        RegionTag::Inner,
        &mut nodes,
        &mut weights,
        &mut s_nodes,
        &mut node_tags,
        &mut bounds,
    );
    for k in 1..s_bounds.len() {
        emit_s_panel(
            s_bounds[k - 1],
            s_bounds[k],
            RegionTag::Inner,
            &mut nodes,
            &mut weights,
            &mut s_nodes,
            &mut node_tags,
            &mut bounds,
        );
    }

    // Wing: uniform in s on [1, min(9, s_max)].
    let wing_end = WING_S_MAX.min(s_max);
    let n_wing_panels = n_wing.div_ceil(PANEL_ORDER).max(1);
    for k in 1..=n_wing_panels {
        let sa = 1.0 + (wing_end - 1.0) * (k - 1) as f64 / n_wing_panels as f64;
        let sb = 1.0 + (wing_end - 1.0) * k as f64 / n_wing_panels as f64;
        emit_s_panel(
            sa,
            sb,
            RegionTag::Wing,
            &mut nodes,
            &mut weights,
            &mut s_nodes,
            &mut node_tags,
            &mut bounds,
        );
    }

    // Tail: from the wing edge to p_max in p-space. Geometric panels take
    // the spacing up to a width of order p_max/20, then uniform panels
    // finish the range; n_tail scales the density.
    let p_tail_start = p_of(wing_end);
    if p_tail_start < p_max * (1.0 - 1e-12) {
        let density = n_tail as f64 / 64.0;
        let w_uniform = p_max / (20.0 * density);
        let mut p = p_tail_start;
        while 2.0 * p < w_uniform.max(p_tail_start) && 2.0 * p < p_max {
            emit_p_panel(
                p,
                2.0 * p,
                RegionTag::Tail,
                &mut nodes,
                &mut weights,
                &mut s_nodes,
                &mut node_tags,
                &mut bounds,
            );
            p *= 2.0;
        }
        let start_uniform = p;
        let n_uniform = ((p_max - start_uniform) / w_uniform).ceil().max(1.0) as usize;
        for k in 1..=n_uniform {
            let a = start_uniform + (p_max - start_uniform) * (k - 1) as f64 / n_uniform as f64;
            let b = start_uniform + (p_max - start_uniform) * k as f64 / n_uniform as f64;
            emit_p_panel(
                a,
                b,
                RegionTag::Tail,
                &mut nodes,
                &mut weights,
                &mut s_nodes,
                &mut node_tags,
                &mut bounds,
            );
        }
    }

    if !nodes.windows(2).all(|p| p[0] < p[1]) || nodes[0] <= 0.0 {
        return Err(BcsError::Numeric(format!(
            "grid construction produced non-increasing nodes (mu = {mu:.3e}, inner_scale = {inner_scale:.1e})"
        )));
    }

    Ok(RadialGrid {
        nodes,
        weights,
        s_nodes,
        mu,
        inner_scale,
        p_max,
        region_tags: node_tags,
        bounds,
        sqrt_mu,
        params: GridParams {
            n_inner,
            n_wing,
            n_tail,
        },
    })
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// p^2 - mu without near-Fermi cancellation: computed as
    /// (p - sqrt_mu)(p + sqrt_mu), exact by Sterbenz subtraction for p
    /// within a factor two of sqrt(mu). Uses mu_eff = fl(sqrt(mu))^2,
    /// a consistent one-ulp reinterpretation of mu.
    pub fn kinetic_offset(&self, p: f64) -> f64 {
        (p - self.sqrt_mu) * (p + self.sqrt_mu)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same layout with all node counts doubled; the error-bar grid.
    pub fn doubled(&self) -> Result<RadialGrid> {
        build_grid(
            self.mu,
            self.inner_scale,
            self.p_max,
            2 * self.params.n_inner,
            2 * self.params.n_wing,
            2 * self.params.n_tail,
        )
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    /// One-line description for reports.
    pub fn meta(&self) -> String {
        format!(
            "nodes={} inner_scale={:.1e} p_max={:.4} counts={}/{}/{}",
            self.len(),
            self.inner_scale,
            self.p_max,
            self.params.n_inner,
            self.params.n_wing,
            self.params.n_tail
        )
    }

    /// Quadrature sum of f over the grid.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Angular-average kernel
// ---------------------------------------------------------------------------

/// Radial reduction k(p, q) of convolution with the Fourier transform:
/// k(p,q) = (2 pi)^{-3/2} (2 pi / (p q)) ∫_{|p-q|}^{p+q} t vhat(t) dt,
/// evaluated from the closed-form antiderivative of t·vhat(t) so that the
/// p q -> 0 cancellation is done analytically. Limits:
/// k(p, 0) = (2 pi)^{-3/2} 4 pi vhat(p).
pub fn angular_kernel(pot: &Potential, p: f64, q: f64) -> f64 {
    debug_assert!(p >= 0.0 && q >= 0.0);
    pot.angular_kernel(p, q)
}

/// Symmetrized kernel matrix K_ij = k(p_i, p_j) sqrt(w_i p_i^2) sqrt(w_j p_j^2).
///
/// Acting on vectors v_i = f(p_i) sqrt(w_i p_i^2) it represents the radial
/// restriction of (2 pi)^{-3/2} vhat * f.
pub fn kernel_matrix(pot: &Potential, grid: &RadialGrid) -> DMatrix<f64> {
    let n = grid.len();
    let root: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&p, &w)| (w * p * p).sqrt())
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = pot.angular_kernel(grid.nodes[i], grid.nodes[j]) * root[i] * root[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Plain iteration matrix M_ij = -k(p_i, p_j) w_j p_j^2, mapping node values
/// f(p_j) to the convolution -(2 pi)^{-3/2} (vhat * f)(p_i). Entrywise
/// nonnegative whenever vhat <= 0.
pub fn iteration_matrix(pot: &Potential, grid: &RadialGrid) -> DMatrix<f64> {
    let n = grid.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = -pot.angular_kernel(grid.nodes[i], grid.nodes[j])
                * grid.weights[j]
                * grid.nodes[j]
                * grid.nodes[j];
        }
    }
    m
}

/// Cross-grid iteration matrix: rows at `targets`, columns over `grid`.
pub fn iteration_matrix_cross(pot: &Potential, targets: &[f64], grid: &RadialGrid) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(targets.len(), grid.len());
    for (i, &p) in targets.iter().enumerate() {
        for j in 0..grid.len() {
            m[(i, j)] = -pot.angular_kernel(p, grid.nodes[j])
                * grid.weights[j]
                * grid.nodes[j]
                * grid.nodes[j];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Family, Potential};
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::new(PANEL_ORDER);
        // degree 2n-1 = 31 exact
        let f = |x: f64| x.powi(31) + 3.0 * x.powi(12) - x.powi(5) + 2.0;
        let got = rule.integrate(&f, -1.0, 1.0);
        let expect = 2.0 * 3.0 / 13.0 + 4.0;
        assert_relative_eq!(got, expect, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_quad_handles_peaked_integrand() {
        // int_0^1 1/sqrt(s^2 + x^2) ds = asinh(1/x)
        let x = 1e-6;
        let f = |s: f64| 1.0 / (s * s + x * x).sqrt();
        let got = adaptive_quad(&f, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(got, (1.0 / x).asinh(), max_relative = 1e-10);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(build_grid(-1.0, 1e-6, 40.0, 64, 64, 64).is_err());
        assert!(build_grid(1.0, 0.0, 40.0, 64, 64, 64).is_err());
        assert!(build_grid(1.0, 2.0, 40.0, 64, 64, 64).is_err());
        assert!(build_grid(100.0, 1e-6, 10.0, 64, 64, 64).is_err());
    }

    #[test]
    fn grid_nodes_increasing_weights_positive() {
        for &mu in &[1.0, 0.01, 3e-4] {
            let g = build_grid(mu, 1e-8, 40.0, 64, 64, 64).unwrap();
            assert!(g.nodes.windows(2).all(|p| p[0] < p[1]));
            assert!(g.weights.iter().all(|&w| w > 0.0));
            assert!(g.nodes[0] > 0.0);
            assert_eq!(g.nodes.len(), g.region_tags.len());
        }
    }

    #[test]
    fn grid_places_required_nodes_near_fermi_surface() {
        let mu = 1.0;
        let inner_scale = 1e-6;
        let g = build_grid(mu, inner_scale, 40.0, 64, 64, 64).unwrap();
        let band = 10.0 * inner_scale * mu;
        let count = g
            .nodes
            .iter()
            .filter(|&&p| (p * p - mu).abs() < band)
            .count();
        assert!(count >= 64, "only {count} nodes inside the band");
    }

    #[test]
    fn grid_densest_near_fermi_surface_small_mu() {
        let mu = 0.01;
        let g = build_grid(mu, 1e-6, 40.0, 64, 64, 64).unwrap();
        let (k_min, _) = g
            .nodes
            .windows(2)
            .enumerate()
            .min_by(|a, b| (a.1[1] - a.1[0]).total_cmp(&(b.1[1] - b.1[0])))
            .unwrap();
        let p_at_min = g.nodes[k_min];
        assert_relative_eq!(p_at_min, mu.sqrt(), max_relative = 1e-3);
    }

    /// Gaussian-moment smoke invariant: sum w p^2 e^{-p^2} = sqrt(pi)/4.
    #[test]
    fn grid_reproduces_gaussian_moment() {
        let target = PI.sqrt() / 4.0;
        for &(mu, scale) in &[(1.0, 1e-6), (0.01, 1e-8), (3e-4, 1e-12), (0.3, 1e-3)] {
            let g = build_grid(mu, scale, 40.0, 64, 64, 64).unwrap();
            let got = g.integrate(|p| p * p * (-p * p).exp());
            assert_relative_eq!(got, target, max_relative = 1e-9);
        }
    }

    #[test]
    fn grid_doubling_changes_smooth_integral_below_threshold() {
        let g = build_grid(0.04, 1e-6, 40.0, 64, 64, 64).unwrap();
        let d = g.doubled().unwrap();
        let f = |p: f64| p * p * (-0.5 * p * p).exp();
        let a = g.integrate(f);
        let b = d.integrate(f);
        assert!(((a - b) / b).abs() < 1e-7, "doubling moved integral by {}", ((a - b) / b).abs());
    }

    #[test]
    fn kernel_limit_at_origin() {
        let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
        let expect = -4.0 * PI * (2.0 * PI).powf(-1.5); // vhat(0) = -1
        assert_relative_eq!(angular_kernel(&pot, 0.0, 0.0), expect, max_relative = 1e-13);
        assert_relative_eq!(expect, -0.79788, max_relative = 1e-4);
    }

    #[test]
    fn kernel_symmetric_and_nonpositive() {
        let pots = [
            Potential::new(Family::Gaussian, 1.0, 1.0).unwrap(),
            Potential::new(Family::Exponential, 0.7, 1.3).unwrap(),
        ];
        let ps = [0.0, 1e-6, 0.02, 0.5, 1.0, 3.7, 12.0, 40.0];
        for pot in &pots {
            for &p in &ps {
                for &q in &ps {
                    let a = angular_kernel(pot, p, q);
                    let b = angular_kernel(pot, q, p);
                    assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
                    assert!(a <= 0.0, "kernel must be <= 0 for vhat <= 0");
                }
            }
        }
    }

    #[test]
    fn kernel_square_well_symmetric() {
        let pot = Potential::new(Family::SquareWell, 1.0, 1.0).unwrap();
        let ps = [0.0, 1e-7, 0.3, 1.0, 2.0, 9.0];
        for &p in &ps {
            for &q in &ps {
                let a = angular_kernel(&pot, p, q);
                let b = angular_kernel(&pot, q, p);
                assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
            }
        }
    }

    /// k(1,1) against the direct angular average
    /// (2 pi)^{-3/2} 2 pi ∫_{-1}^{1} vhat(sqrt(2 - 2u)) du.
    #[test]
    fn kernel_matches_angular_average_oracle() {
        for pot in [
            Potential::new(Family::Gaussian, 1.0, 1.0).unwrap(),
            Potential::new(Family::Exponential, 1.0, 1.0).unwrap(),
            Potential::new(Family::SquareWell, 1.0, 1.0).unwrap(),
        ] {
            let f = |u: f64| pot.vhat((2.0 - 2.0 * u).max(0.0).sqrt());
            let oracle =
                (2.0 * PI).powf(-1.5) * 2.0 * PI * adaptive_quad(&f, -1.0, 1.0, 1e-12).unwrap();
            assert_relative_eq!(angular_kernel(&pot, 1.0, 1.0), oracle, max_relative = 1e-10);
        }
    }

    #[test]
    fn kernel_matrix_symmetric_exactly() {
        let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
        let g = build_grid(0.5, 1e-4, 40.0, 64, 32, 32).unwrap();
        let k = kernel_matrix(&pot, &g);
        for i in 0..g.len() {
            for j in 0..g.len() {
                assert_eq!(k[(i, j)], k[(j, i)]);
            }
        }
    }

    /// Row sums of the unsymmetrized kernel against the closed identity
    /// ∫ k(p, q) q^2 dq = V(0), and against direct quadrature.
    #[test]
    fn kernel_row_integral_equals_potential_at_origin() {
        let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
        let g = build_grid(0.5, 1e-4, 40.0, 64, 64, 64).unwrap();
        let p0 = g.nodes[0];
        let sum: f64 = g.integrate(|q| angular_kernel(&pot, p0, q) * q * q);
        assert_relative_eq!(sum, pot.v(0.0), max_relative = 1e-9);
        let direct = adaptive_quad(&|q| angular_kernel(&pot, p0, q) * q * q, 0.0, 40.0, 1e-12)
            .unwrap();
        assert_relative_eq!(sum, direct, max_relative = 1e-9);
    }

    /// Doubling the grid moves the represented convolution by < 1e-6.
    #[test]
    fn kernel_action_stable_under_doubling() {
        let pot = Potential::new(Family::Gaussian, 1.0, 1.0).unwrap();
        let g = build_grid(0.1, 1e-5, 40.0, 64, 64, 64).unwrap();
        let d = g.doubled().unwrap();
        let f = |p: f64| (-0.5 * p * p).exp();
        let probes = [0.05, 0.31622776601683794, 1.0, 2.0];
        for &p in &probes {
            let a: f64 = g.integrate(|q| angular_kernel(&pot, p, q) * q * q * f(q));
            let b: f64 = d.integrate(|q| angular_kernel(&pot, p, q) * q * q * f(q));
            assert!(((a - b) / b.abs()).abs() < 1e-6);
        }
    }
}

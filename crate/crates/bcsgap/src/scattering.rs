//! Scattering length via the zero-energy Birman–Schwinger resolvent, an
//! independent radial-ODE oracle, and the no-bound-state spectral check.
//!
//! The resolvent route works in position space in the s-wave sector, where
//! the 1/p^2 kernel spherically averages to 1/max(r, s) on L^2(r^2 dr):
//!
//!   (B f)(r) = V(r)^{1/2} ∫_0^∞ (s^2 / max(r, s)) |V(s)|^{1/2} f(s) ds,
//!
//! with the sign convention V^{1/2} = sgn(V) |V|^{1/2}. The scattering
//! length solves (1 + B) g = V^{1/2} and evaluates
//! a = ∫_0^∞ r^2 |V(r)|^{1/2} g(r) dr (the 4 pi of the 3D inner product
//! cancels the 1/(4 pi) prefactor).
//!
//! The kernel has a derivative kink on the diagonal, so matrix rows use
//! product integration: inside the panel containing the row node the
//! s^2/r and s branches are integrated exactly against the panel's
//! Lagrange basis, keeping the Nystrom scheme spectrally accurate.

use crate::error::{BcsError, Result};
use crate::potentials::Potential;
use crate::quadrature::{gauss_legendre, GaussRule, PanelGrid, PANEL_ORDER};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Relative |V| threshold defining the outer integration radius.
const SUPPORT_THRESHOLD: f64 = 1e-14;

/// Refinement ladder for the radius grid, in panels of 16 nodes.
const PANEL_LADDER: [usize; 6] = [8, 16, 32, 64, 96, 128];

/// Node-count cap for the spectral check.
const EIGEN_NODE_CAP: usize = 768;

/// Both scattering-length routes plus the spectral evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatteringResult {
    /// Resolvent (Birman–Schwinger) value.
    pub a_bs: f64,
    /// Zero-energy ODE oracle value.
    pub a_ode: f64,
    /// First Born term ∫ r^2 V dr.
    pub a_born: f64,
    /// Lowest eigenvalue of the symmetrized resolvent kernel; must stay > -1.
    pub lowest_bs_eigenvalue: f64,
    pub grid_meta: RefinementMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementMeta {
    pub nodes: usize,
    pub refinements: usize,
    pub last_change: f64,
    pub r_max: f64,
}

/// Uniform Gauss–Legendre panel grid covering the support/decay of |V|.
pub fn radius_grid(pot: &Potential, n_panels: usize) -> PanelGrid {
    let r_big = pot.decay_radius(SUPPORT_THRESHOLD);
    PanelGrid::uniform(0.0, r_big, n_panels, &GaussRule::new(PANEL_ORDER))
}

/// Quadrature weights for ∫ (s^2/max(r_i, s)) φ(s) ds along row i.
///
/// Panels fully below or above r_i use plain weights on the smooth branch;
/// the panel containing r_i integrates both branches exactly against the
/// panel's degree-15 Lagrange basis (a 20-point rule is exact there).
fn kink_row_weights(grid: &PanelGrid, i: usize, scratch: &KinkScratch) -> Vec<f64> {
    let r_i = grid.nodes[i];
    let n = grid.len();
    let mut w = vec![0.0; n];
    for (kp, pair) in grid.bounds.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let j0 = kp * PANEL_ORDER;
        if b <= r_i {
            for j in j0..j0 + PANEL_ORDER {
                let s = grid.nodes[j];
                w[j] = grid.weights[j] * s * s / r_i;
            }
        } else if a >= r_i {
            for j in j0..j0 + PANEL_ORDER {
                w[j] = grid.weights[j] * grid.nodes[j];
            }
        } else {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            let x_cut = ((r_i - c) / h).clamp(-1.0, 1.0);
            let mut acc = [0.0; PANEL_ORDER];
            // (h / r_i) ∫_{-1}^{x_cut} (c + h x)^2 L_j(x) dx
            scratch.accumulate(-1.0, x_cut, &mut acc, |x, l| {
                (h / r_i) * (c + h * x) * (c + h * x) * l
            });
            // h ∫_{x_cut}^{1} (c + h x) L_j(x) dx
            scratch.accumulate(x_cut, 1.0, &mut acc, |x, l| h * (c + h * x) * l);
            w[j0..j0 + PANEL_ORDER].copy_from_slice(&acc);
        }
    }
    w
}

/// Barycentric Lagrange machinery on the panel's reference nodes.
struct KinkScratch {
    ref_nodes: Vec<f64>,
    bary: Vec<f64>,
    sub_rule: GaussRule,
}

impl KinkScratch {
    fn new() -> Self {
        let (ref_nodes, _) = gauss_legendre(PANEL_ORDER);
        let mut bary = vec![1.0; PANEL_ORDER];
        for m in 0..PANEL_ORDER {
            for k in 0..PANEL_ORDER {
                if k != m {
                    bary[m] /= ref_nodes[m] - ref_nodes[k];
                }
            }
        }
        KinkScratch {
            ref_nodes,
            bary,
            sub_rule: GaussRule::new(20),
        }
    }

    /// acc[j] += ∫_a^b f(x, L_j(x)) dx for all basis functions at once.
    fn accumulate<F: Fn(f64, f64) -> f64>(&self, a: f64, b: f64, acc: &mut [f64], f: F) {
        if b - a <= 0.0 {
            return;
        }
        for (x, wq) in self.sub_rule.mapped(a, b) {
            // Barycentric evaluation of every L_j at x.
            let mut exact = None;
            for (j, &xj) in self.ref_nodes.iter().enumerate() {
                if (x - xj).abs() < 1e-14 {
                    exact = Some(j);
                    break;
                }
            }
            match exact {
                Some(j) => acc[j] += wq * f(x, 1.0),
                None => {
                    let mut denom = 0.0;
                    for (bw, &xj) in self.bary.iter().zip(&self.ref_nodes) {
                        denom += bw / (x - xj);
                    }
                    for j in 0..PANEL_ORDER {
                        let l = self.bary[j] / ((x - self.ref_nodes[j]) * denom);
                        acc[j] += wq * f(x, l);
                    }
                }
            }
        }
    }
}

/// Resolvent matrix acting on node values of f, from sampled V^{1/2}.
pub(crate) fn bs_value_matrix(
    vsqrt_signed: &[f64],
    vsqrt_abs: &[f64],
    grid: &PanelGrid,
) -> DMatrix<f64> {
    let n = grid.len();
    let scratch = KinkScratch::new();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let w = kink_row_weights(grid, i, &scratch);
        for j in 0..n {
            m[(i, j)] = vsqrt_signed[i] * w[j] * vsqrt_abs[j];
        }
    }
    m
}

fn sample_vsqrt(pot: &Potential, grid: &PanelGrid) -> (Vec<f64>, Vec<f64>) {
    let signed: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&r| {
            let v = pot.v(r);
            v.signum() * v.abs().sqrt()
        })
        .collect();
    let abs: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
    (signed, abs)
}

/// Symmetrized Birman–Schwinger matrix on the radius grid: similar to the
/// value-space operator under D^{1/2} with D = diag(w_i r_i^2), then
/// symmetrized. For attractive wells every entry is <= 0.
pub fn bs_matrix(pot: &Potential, grid: &PanelGrid) -> DMatrix<f64> {
    let (signed, abs) = sample_vsqrt(pot, grid);
    bs_symmetrized(&signed, &abs, grid)
}

pub(crate) fn bs_symmetrized(
    vsqrt_signed: &[f64],
    vsqrt_abs: &[f64],
    grid: &PanelGrid,
) -> DMatrix<f64> {
    let b = bs_value_matrix(vsqrt_signed, vsqrt_abs, grid);
    let n = grid.len();
    let d: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&r, &w)| (w * r * r).sqrt())
        .collect();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = d[i] * b[(i, j)] / d[j];
        }
    }
    // The kink panel's product weights are asymmetric at higher order.
    let st = s.transpose();
    0.5 * (s + st)
}

fn lowest_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Solve (1 + B) g = V^{1/2} on the given grid and integrate
/// a = ∫ r^2 |V|^{1/2} g dr.
pub(crate) fn solve_scattering_on_grid(
    vsqrt_signed: &[f64],
    vsqrt_abs: &[f64],
    grid: &PanelGrid,
) -> Result<f64> {
    let n = grid.len();
    let b = bs_value_matrix(vsqrt_signed, vsqrt_abs, grid);
    let lhs = DMatrix::identity(n, n) + b;
    let rhs = DVector::from_column_slice(vsqrt_signed);
    let lu = lhs.lu();
    let g = lu.solve(&rhs).ok_or_else(|| {
        BcsError::BoundState("(1 + B) is numerically singular; -1 is in the spectrum".into())
    })?;
    Ok(grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .zip(vsqrt_abs.iter().zip(g.iter()))
        .map(|((&r, &w), (&va, &gi))| w * r * r * va * gi)
        .sum())
}

/// Birman–Schwinger scattering length with grid refinement until two
/// successive refinements agree to 1e-8 relative.
pub fn scattering_length(pot: &Potential) -> Result<f64> {
    scattering_length_refined(pot).map(|(a, _)| a)
}

fn scattering_length_refined(pot: &Potential) -> Result<(f64, RefinementMeta)> {
    let scale = pot.range();
    let mut prev: Option<f64> = None;
    let mut refinements = 0;
    for &panels in PANEL_LADDER.iter() {
        let grid = radius_grid(pot, panels);
        let (signed, abs) = sample_vsqrt(pot, &grid);
        if panels == PANEL_LADDER[0] {
            // Spectral precondition, checked on a coarse grid.
            let low = lowest_eigenvalue(&bs_symmetrized(&signed, &abs, &grid));
            if low <= -1.0 {
                return Err(BcsError::BoundState(format!(
                    "lowest Birman–Schwinger eigenvalue {low:.6} <= -1"
                )));
            }
        }
        let a = solve_scattering_on_grid(&signed, &abs, &grid)?;
        refinements += 1;
        if let Some(p) = prev {
            let change = (a - p).abs();
            if change <= 1e-8 * a.abs().max(scale) {
                return Ok((
                    a,
                    RefinementMeta {
                        nodes: grid.len(),
                        refinements,
                        last_change: change,
                        r_max: *grid.bounds.last().unwrap(),
                    },
                ));
            }
        }
        prev = Some(a);
    }
    Err(BcsError::QuadratureNonConvergent {
        context: "scattering-length grid refinement".into(),
        residual: prev.map(|p| p.abs()).unwrap_or(f64::NAN),
    })
}

/// First Born term ∫_0^∞ r^2 V(r) dr = (1/4 pi) ∫ V.
pub fn born_term(pot: &Potential) -> Result<f64> {
    let r_end = pot.decay_radius(1e-36);
    crate::quadrature::adaptive_quad(&|r| r * r * pot.v(r), 0.0, r_end, 1e-12)
}

/// Zero-energy radial ODE oracle: integrate u'' = V(r) u with u(0) = 0,
/// u'(0) = 1 out to the decay radius and read a = R - u(R)/u'(R) from the
/// free asymptote u ∝ (r - a). Step halving until 1e-9 stable.
pub fn scattering_length_ode(pot: &Potential) -> Result<f64> {
    let (a, _) = ode_integrate(pot)?;
    Ok(a)
}

/// Whether the zero-energy solution certifies a bound state of p^2 + V:
/// either u has an interior node, or u leaves the well decreasing
/// (u'(R) < 0, so its free continuation c(r - a) crosses zero at finite
/// r = a beyond the well).
pub fn zero_energy_bound_state(pot: &Potential) -> Result<bool> {
    let r_big = pot.decay_radius(SUPPORT_THRESHOLD);
    let v = ode_rhs(pot);
    let mut prev: Option<bool> = None;
    for &n in &[8192usize, 16384, 32768] {
        let (_, du, nodes) = rk4_shoot(&v, r_big, n);
        let bound = nodes > 0 || du < 0.0;
        if prev == Some(bound) {
            return Ok(bound);
        }
        prev = Some(bound);
    }
    Err(BcsError::Numeric(
        "bound-state detection did not stabilize under step halving".into(),
    ))
}

/// Potential sampler for the shooting integration. The square-well
/// indicator is closed at r = sigma so every Runge–Kutta stage on the
/// final step sees the interior value; the solution is unchanged and the
/// O(h^4) order is preserved.
fn ode_rhs(pot: &Potential) -> impl Fn(f64) -> f64 + '_ {
    let range = pot.range();
    let family_sw = matches!(pot.family(), crate::potentials::Family::SquareWell);
    move |r: f64| {
        if family_sw && r <= range {
            -pot.depth()
        } else {
            pot.v(r)
        }
    }
}

fn ode_integrate(pot: &Potential) -> Result<(f64, usize)> {
    let r_big = pot.decay_radius(SUPPORT_THRESHOLD);
    let v = ode_rhs(pot);
    let mut n = 1024usize;
    let mut prev: Option<f64> = None;
    for _ in 0..14 {
        let (u, du, nodes) = rk4_shoot(&v, r_big, n);
        if du.abs() < 1e-12 * (u.abs() / r_big).max(1e-300) {
            return Err(BcsError::ZeroEnergyResonance(format!(
                "u'({r_big:.3}) ~ 0; scattering length diverges"
            )));
        }
        let a = r_big - u / du;
        if let Some(p) = prev {
            if (a - p).abs() <= 1e-9 * a.abs().max(pot.range()) {
                return Ok((a, nodes));
            }
        }
        prev = Some(a);
        n *= 2;
    }
    Err(BcsError::QuadratureNonConvergent {
        context: "zero-energy ODE step halving".into(),
        residual: prev.unwrap_or(f64::NAN),
    })
}

fn rk4_shoot<F: Fn(f64) -> f64>(v: &F, r_big: f64, n: usize) -> (f64, f64, usize) {
    let h = r_big / n as f64;
    let mut u = 0.0f64;
    let mut du = 1.0f64;
    let mut nodes = 0usize;
    for k in 0..n {
        let r = k as f64 * h;
        let u_prev = u;
        // u'' = V u as a first-order system.
        let (k1u, k1v) = (du, v(r) * u);
        let (k2u, k2v) = (du + 0.5 * h * k1v, v(r + 0.5 * h) * (u + 0.5 * h * k1u));
        let (k3u, k3v) = (du + 0.5 * h * k2v, v(r + 0.5 * h) * (u + 0.5 * h * k2u));
        let (k4u, k4v) = (du + h * k3v, v(r + h) * (u + h * k3u));
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if k > 0 && u_prev * u < 0.0 {
            nodes += 1;
        }
    }
    (u, du, nodes)
}

/// Run both routes, the Born term, and the spectral check.
pub fn scattering_report(pot: &Potential) -> Result<ScatteringResult> {
    let (a_bs, meta) = scattering_length_refined(pot)?;
    let a_ode = scattering_length_ode(pot)?;
    let a_born = born_term(pot)?;
    let eig_panels = (meta.nodes / PANEL_ORDER).min(EIGEN_NODE_CAP / PANEL_ORDER);
    let grid = radius_grid(pot, eig_panels);
    let lowest_bs_eigenvalue = lowest_eigenvalue(&bs_matrix(pot, &grid));
    Ok(ScatteringResult {
        a_bs,
        a_ode,
        a_born,
        lowest_bs_eigenvalue,
        grid_meta: meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Family;
    use approx::assert_relative_eq;

    fn gaussian11() -> Potential {
        Potential::new(Family::Gaussian, 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_potential_gives_zero_matrix_and_length() {
        let grid = PanelGrid::uniform(0.0, 5.0, 4, &GaussRule::new(PANEL_ORDER));
        let zeros = vec![0.0; grid.len()];
        let b = bs_value_matrix(&zeros, &zeros, &grid);
        assert!(b.iter().all(|&x| x == 0.0));
        let a = solve_scattering_on_grid(&zeros, &zeros, &grid).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn attractive_symmetrized_matrix_is_nonpositive() {
        let pot = gaussian11();
        let grid = radius_grid(&pot, 8);
        let s = bs_matrix(&pot, &grid);
        assert!(s.iter().all(|&x| x <= 0.0));
    }

    #[test]
    fn gaussian_spectrum_above_minus_one() {
        let pot = gaussian11();
        let grid = radius_grid(&pot, 16);
        let low = lowest_eigenvalue(&bs_matrix(&pot, &grid));
        assert!(low > -1.0, "lowest eigenvalue {low}");
        assert!(low < 0.0);
    }

    /// Analytic square-well value a = R - tan(sqrt(V0) R)/sqrt(V0).
    #[test]
    fn square_well_matches_analytic_value() {
        let pot = Potential::new(Family::SquareWell, 1.0, 1.0).unwrap();
        let expect = 1.0 - 1f64.tan();
        let a_bs = scattering_length(&pot).unwrap();
        assert_relative_eq!(a_bs, expect, max_relative = 1e-8);
        let a_ode = scattering_length_ode(&pot).unwrap();
        assert_relative_eq!(a_ode, expect, max_relative = 1e-8);
        assert_relative_eq!(expect, -0.557408, max_relative = 1e-6);
    }

    #[test]
    fn born_terms_match_closed_forms() {
        let g = gaussian11();
        assert_relative_eq!(
            born_term(&g).unwrap(),
            -(std::f64::consts::PI / 2.0).sqrt(),
            max_relative = 1e-10
        );
        let sw = Potential::new(Family::SquareWell, 1.0, 1.0).unwrap();
        assert_relative_eq!(born_term(&sw).unwrap(), -1.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn ode_oracle_reaches_born_limit_at_weak_coupling() {
        let lam = 1e-6;
        let pot = Potential::new(Family::Gaussian, lam, 1.0).unwrap();
        let a = scattering_length_ode(&pot).unwrap();
        let born = -(std::f64::consts::PI / 2.0).sqrt();
        assert_relative_eq!(a / lam, born, max_relative = 1e-5);
    }

    #[test]
    fn routes_agree_for_gaussian() {
        let pot = gaussian11();
        let r = scattering_report(&pot).unwrap();
        assert!(
            (r.a_bs - r.a_ode).abs() <= 1e-6 * r.a_bs.abs().max(1.0),
            "a_bs = {}, a_ode = {}",
            r.a_bs,
            r.a_ode
        );
        assert!(r.a_bs < 0.0);
        // Higher Born orders reinforce the attraction.
        assert!(r.a_born.abs() < r.a_bs.abs());
    }

    /// (a(lambda V) - lambda a_born)/lambda^2 approaches the second Born
    /// coefficient; Richardson over two couplings.
    #[test]
    fn weak_coupling_second_born_coefficient_stabilizes() {
        let born = born_term(&gaussian11()).unwrap();
        let mut cs = Vec::new();
        for &lam in &[1e-2, 1e-3] {
            let pot = Potential::new(Family::Gaussian, lam, 1.0).unwrap();
            let a = scattering_length(&pot).unwrap();
            cs.push((a - lam * born) / (lam * lam));
        }
        assert!(cs[1].abs() > 0.0);
        assert!(
            ((cs[0] - cs[1]) / cs[1]).abs() < 0.05,
            "second Born estimates {cs:?}"
        );
    }

    /// The depth at which the lowest eigenvalue crosses -1 coincides with
    /// the appearance of a node in the zero-energy solution, within 1%.
    #[test]
    fn spectral_crossing_matches_first_bound_state() {
        // Eigenvalues scale linearly in depth, so one eigensolve suffices.
        let pot = gaussian11();
        let grid = radius_grid(&pot, 24);
        let low = lowest_eigenvalue(&bs_matrix(&pot, &grid));
        let lambda_spectral = -1.0 / low;

        // Bisect on the ODE bound-state indicator.
        let mut lo = 1.0;
        let mut hi = 2.0;
        assert!(!zero_energy_bound_state(&Potential::new(Family::Gaussian, lo, 1.0).unwrap())
            .unwrap());
        assert!(zero_energy_bound_state(&Potential::new(Family::Gaussian, hi, 1.0).unwrap())
            .unwrap());
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            let bound =
                zero_energy_bound_state(&Potential::new(Family::Gaussian, mid, 1.0).unwrap())
                    .unwrap();
            if bound {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lambda_node = 0.5 * (lo + hi);
        assert!(
            ((lambda_spectral - lambda_node) / lambda_node).abs() < 0.01,
            "spectral {lambda_spectral} vs node {lambda_node}"
        );
    }
}

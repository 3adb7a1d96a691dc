//! Catalog of radial model potentials with closed-form position- and
//! momentum-space evaluators, cached norms, and the admissibility checks
//! required of an attractive well with negative scattering length and no
//! bound state.
//!
//! Fourier convention: vhat(p) = (2 pi)^{-3/2} ∫ V(x) e^{-ipx} dx, so for
//! radial V, vhat(p) = sqrt(2/pi) p^{-1} ∫_0^∞ r V(r) sin(pr) dr.

use crate::consts;
use crate::error::{BcsError, Result};
use crate::quadrature::adaptive_quad;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Potential families. Gaussian and Exponential have strictly negative
/// Fourier transforms and support the full solver pipeline; the square well
/// has a sign-changing transform and is admitted for scattering work only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Exponential,
    SquareWell,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Gaussian => "gaussian",
            Family::Exponential => "exponential",
            Family::SquareWell => "squarewell",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = BcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "exponential" => Ok(Family::Exponential),
            "squarewell" | "square-well" | "square_well" => Ok(Family::SquareWell),
            other => Err(BcsError::InvalidArgument(format!(
                "unknown potential family '{other}' (expected gaussian, exponential, squarewell)"
            ))),
        }
    }
}

/// Norms cached at construction from closed forms; the quadrature route
/// `lp_norm` must reproduce them to 1e-10 relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CachedNorms {
    /// ‖V‖_{L^1} = ∫ |V| d^3x
    pub l1: f64,
    /// ‖V‖_{L^{3/2}}
    pub l32: f64,
    /// ∫ |V(x)| (1 + |x|) d^3x
    pub l1_weighted: f64,
}

/// An attractive radial well -lambda * profile(r / sigma).
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    family: Family,
    depth: f64,
    range: f64,
    norms: CachedNorms,
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.family, self.depth, self.range)
    }
}

fn closed_form_norms(family: Family, depth: f64, range: f64) -> CachedNorms {
    let s3 = range.powi(3);
    let s4 = range.powi(4);
    match family {
        Family::Gaussian => CachedNorms {
            l1: depth * (2.0 * PI).powf(1.5) * s3,
            l32: depth * (4.0 * PI / 3.0) * range * range,
            l1_weighted: depth * (2.0 * PI).powf(1.5) * s3 + 8.0 * PI * depth * s4,
        },
        Family::Exponential => CachedNorms {
            l1: 8.0 * PI * depth * s3,
            l32: depth * (64.0 * PI / 27.0).powf(2.0 / 3.0) * range * range,
            l1_weighted: 8.0 * PI * depth * s3 + 24.0 * PI * depth * s4,
        },
        Family::SquareWell => CachedNorms {
            l1: depth * (4.0 * PI / 3.0) * s3,
            l32: depth * (4.0 * PI / 3.0).powf(2.0 / 3.0) * range * range,
            l1_weighted: depth * (4.0 * PI / 3.0) * s3 + depth * PI * s4,
        },
    }
}

/// sin(x)/x with a series branch near zero.
fn sinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// (sin x - x cos x)/x^3 with a series branch near zero.
fn well_transform_profile(x: f64) -> f64 {
    if x.abs() < 0.05 {
        let x2 = x * x;
        1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0 - x2 * x2 * x2 / 45360.0
    } else {
        (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// (1 - e^{-2x})/(2x), the regularized sinh factor of the Gaussian kernel.
fn expm1_ratio(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-2.0 * x).exp_m1() / (2.0 * x)
    }
}

impl Potential {
    /// Construct a catalog potential; depth and range must be positive.
    pub fn new(family: Family, depth: f64, range: f64) -> Result<Self> {
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(BcsError::InvalidArgument(format!(
                "potential depth must be positive and finite, got {depth}"
            )));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(BcsError::InvalidArgument(format!(
                "potential range must be positive and finite, got {range}"
            )));
        }
        Ok(Potential {
            family,
            depth,
            range,
            norms: closed_form_norms(family, depth, range),
        })
    }

    /// Parse the CLI form `family:lambda:sigma`, e.g. `gaussian:1.0:1.0`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(BcsError::InvalidArgument(format!(
                "potential spec '{spec}' must have the form family:lambda:sigma"
            )));
        }
        let family: Family = parts[0].parse()?;
        let depth: f64 = parts[1].parse().map_err(|_| {
            BcsError::InvalidArgument(format!("bad depth '{}' in '{spec}'", parts[1]))
        })?;
        let range: f64 = parts[2].parse().map_err(|_| {
            BcsError::InvalidArgument(format!("bad range '{}' in '{spec}'", parts[2]))
        })?;
        Potential::new(family, depth, range)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn norms(&self) -> CachedNorms {
        self.norms
    }

    /// Position-space value V(r) (nonpositive for the catalog wells).
    pub fn v(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let (l, s) = (self.depth, self.range);
        match self.family {
            Family::Gaussian => -l * (-r * r / (2.0 * s * s)).exp(),
            Family::Exponential => -l * (-r / s).exp(),
            Family::SquareWell => {
                if r < s {
                    -l
                } else {
                    0.0
                }
            }
        }
    }

    /// Momentum-space value vhat(p).
    pub fn vhat(&self, p: f64) -> f64 {
        debug_assert!(p >= 0.0);
        let (l, s) = (self.depth, self.range);
        match self.family {
            Family::Gaussian => -l * s.powi(3) * (-s * s * p * p / 2.0).exp(),
            Family::Exponential => {
                let d = 1.0 + s * s * p * p;
                -8.0 * PI * l * s.powi(3) * (2.0 * PI).powf(-1.5) / (d * d)
            }
            Family::SquareWell => {
                -l * (2.0 / PI).sqrt() * s.powi(3) * well_transform_profile(p * s)
            }
        }
    }

    /// Angular-average kernel k(p, q); see `quadrature::angular_kernel`.
    pub(crate) fn angular_kernel(&self, p: f64, q: f64) -> f64 {
        let (l, s) = (self.depth, self.range);
        match self.family {
            Family::Gaussian => {
                let d = p - q;
                -(2.0 / PI).sqrt()
                    * l
                    * s.powi(3)
                    * (-s * s * d * d / 2.0).exp()
                    * expm1_ratio(s * s * p * q)
            }
            Family::Exponential => {
                let sp = s * (p + q);
                let sm = s * (p - q);
                -(4.0 / PI) * l * s.powi(3) / ((1.0 + sp * sp) * (1.0 + sm * sm))
            }
            Family::SquareWell => {
                let x = s * s * p * q;
                if x < 1e-6 * (1.0 + s * s * (p * p + q * q)) {
                    // p q -> 0 limit: (2 pi)^{-3/2} 4 pi vhat(sqrt(p^2 + q^2))
                    (2.0 / PI).sqrt() * self.vhat((p * p + q * q).sqrt())
                } else {
                    let alpha = (p - q).abs();
                    let beta = p + q;
                    let j = -l
                        * (2.0 / PI).sqrt()
                        * s
                        * (sinc(s * alpha) - sinc(s * beta));
                    j / (p * q * (2.0 * PI).sqrt())
                }
            }
        }
    }

    /// Radius beyond which |V(r)| < threshold * depth.
    pub fn decay_radius(&self, threshold: f64) -> f64 {
        debug_assert!(threshold > 0.0 && threshold < 1.0);
        match self.family {
            Family::Gaussian => self.range * (2.0 * (1.0 / threshold).ln()).sqrt(),
            Family::Exponential => self.range * (1.0 / threshold).ln(),
            Family::SquareWell => self.range,
        }
    }

    /// (4 pi ∫ r^2 |V|^q dr)^{1/q} by adaptive quadrature; q in {1, 3/2}.
    pub fn lp_norm(&self, q: f64) -> Result<f64> {
        if (q - 1.0).abs() > 1e-12 && (q - 1.5).abs() > 1e-12 {
            return Err(BcsError::InvalidArgument(format!(
                "lp_norm supports q in {{1, 3/2}}, got {q}"
            )));
        }
        let r_end = match self.family {
            Family::SquareWell => self.range,
            _ => self.decay_radius(1e-36f64.powf(1.0 / q)),
        };
        let f = |r: f64| r * r * self.v(r).abs().powf(q);
        let integral = 4.0 * PI * adaptive_quad(&f, 0.0, r_end, 1e-12)?;
        Ok(integral.powf(1.0 / q))
    }

    /// The rescaled well sqrt(mu) V_{sqrt(mu)}, where
    /// V_{sqrt(mu)}(x) = mu^{-3/2} V(x / sqrt(mu)). The catalog is closed
    /// under this map: depth -> depth/mu, range -> range*sqrt(mu), which
    /// preserves ‖V_{sqrt mu}‖_{L^1} = ‖V‖_{L^1} and
    /// ‖sqrt(mu) V_{sqrt mu}‖_{L^{3/2}} = ‖V‖_{L^{3/2}}.
    pub fn rescaled_for(&self, mu: f64) -> Result<Potential> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(BcsError::InvalidArgument(format!(
                "scaling parameter mu must be positive, got {mu}"
            )));
        }
        Potential::new(self.family, self.depth / mu, self.range * mu.sqrt())
    }

    /// Whether the closed-form transform is nonpositive everywhere
    /// (true for Gaussian and Exponential; the square well oscillates).
    pub fn has_nonpositive_transform(&self) -> bool {
        matches!(self.family, Family::Gaussian | Family::Exponential)
    }
}

/// Numeric evidence for each admissibility hypothesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub l1_finite: bool,
    pub weighted_l1_finite: bool,
    pub sobolev_ok: bool,
    pub vhat_nonpositive: bool,
    pub vhat0_negative: bool,
    pub scattering_length: f64,
    pub a_negative: bool,
    pub bs_spectrum_ok: bool,
}

impl AdmissibilityReport {
    pub fn all_ok(&self) -> bool {
        self.l1_finite
            && self.weighted_l1_finite
            && self.sobolev_ok
            && self.vhat_nonpositive
            && self.vhat0_negative
            && self.a_negative
            && self.bs_spectrum_ok
    }
}

/// Number of sample points for the transform sign check.
const VHAT_SIGN_SAMPLES: usize = 10_000;

/// Run every numerically checkable hypothesis: finite (weighted) L^1 norm,
/// ‖V‖_{3/2} < S_3, nonpositive transform (sampled on 10^4 points over
/// [0, 50/sigma] plus a tail-monotonicity check), vhat(0) < 0, negative
/// scattering length, and the resolvent spectral condition. Failures are
/// report entries, not errors.
pub fn check_admissible(pot: &Potential) -> AdmissibilityReport {
    let norms = pot.norms();
    let l1_finite = norms.l1.is_finite();
    let weighted_l1_finite = norms.l1_weighted.is_finite();
    let sobolev_ok = norms.l32 < consts::sobolev_s3();

    let p_hi = 50.0 / pot.range();
    let mut sampled_nonpositive = true;
    for k in 0..VHAT_SIGN_SAMPLES {
        let p = p_hi * k as f64 / (VHAT_SIGN_SAMPLES - 1) as f64;
        if pot.vhat(p) > 0.0 {
            sampled_nonpositive = false;
            break;
        }
    }
    // Tail check: |vhat| should keep shrinking past the sampled window.
    let mut tail_ok = true;
    let mut prev = pot.vhat(p_hi).abs();
    for k in 1..=100 {
        let p = p_hi * (10f64).powf(k as f64 / 100.0);
        let cur = pot.vhat(p).abs();
        if cur > prev * (1.0 + 1e-12) {
            tail_ok = false;
            break;
        }
        prev = cur;
    }
    let vhat_nonpositive = sampled_nonpositive && tail_ok;
    let vhat0_negative = pot.vhat(0.0) < 0.0;

    let (scattering_length, bs_spectrum_ok) = match crate::scattering::scattering_report(pot) {
        Ok(r) => (r.a_bs, r.lowest_bs_eigenvalue > -1.0),
        Err(_) => (f64::NAN, false),
    };
    let a_negative = scattering_length < 0.0;

    AdmissibilityReport {
        l1_finite,
        weighted_l1_finite,
        sobolev_ok,
        vhat_nonpositive,
        vhat0_negative,
        scattering_length,
        a_negative,
        bs_spectrum_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(Potential::new(Family::Gaussian, 0.0, 1.0).is_err());
        assert!(Potential::new(Family::Gaussian, -1.0, 1.0).is_err());
        assert!(Potential::new(Family::Gaussian, 1.0, 0.0).is_err());
        assert!(Potential::new(Family::Exponential, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        let p = Potential::parse("gaussian:1.0:1.0").unwrap();
        assert_eq!(p.family(), Family::Gaussian);
        assert!(Potential::parse("lorentzian:1:1").is_err());
        assert!(Potential::parse("gaussian:1").is_err());
        assert!(Potential::parse("gaussian:x:1").is_err());
    }

    #[test]
    fn gaussian_transform_at_origin() {
        let p = Potential::parse("gaussian:1:1").unwrap();
        assert_relative_eq!(p.vhat(0.0), -1.0, max_relative = 1e-14);
        assert_relative_eq!(p.v(0.0), -1.0, max_relative = 1e-14);
    }

    #[test]
    fn exponential_transform_strictly_negative() {
        let p = Potential::parse("exponential:1:1").unwrap();
        for &q in &[0.0, 1.0, 10.0] {
            assert!(p.vhat(q) < 0.0);
        }
    }

    #[test]
    fn square_well_indicator_values() {
        let p = Potential::parse("squarewell:1:1").unwrap();
        assert_eq!(p.v(0.5), -1.0);
        assert_eq!(p.v(1.5), 0.0);
    }

    /// ∫ V d^3x = (2 pi)^{3/2} vhat(0), checked by quadrature.
    #[test]
    fn transform_zero_mode_identity() {
        for spec in ["gaussian:1:1", "exponential:0.8:1.2", "squarewell:1.5:0.7"] {
            let p = Potential::parse(spec).unwrap();
            let r_end = p.decay_radius(1e-40);
            let integral =
                4.0 * PI * adaptive_quad(&|r| r * r * p.v(r), 0.0, r_end, 1e-12).unwrap();
            assert_relative_eq!(
                integral,
                (2.0 * PI).powf(1.5) * p.vhat(0.0),
                max_relative = 1e-10
            );
        }
    }

    /// Closed-form vhat against the radial sine transform
    /// sqrt(2/pi) p^{-1} ∫ r V(r) sin(pr) dr on a log-spaced p grid.
    #[test]
    fn transform_matches_sine_quadrature() {
        for spec in ["gaussian:1:1", "exponential:1:1", "squarewell:1:1"] {
            let pot = Potential::parse(spec).unwrap();
            let r_end = pot.decay_radius(1e-36);
            for k in 0..=12 {
                let p = 0.05 * (400.0f64).powf(k as f64 / 12.0); // 0.05 .. 20
                let f = |r: f64| r * pot.v(r) * (p * r).sin();
                let direct =
                    (2.0 / PI).sqrt() / p * adaptive_quad(&f, 0.0, r_end, 1e-13).unwrap();
                assert_relative_eq!(pot.vhat(p), direct, max_relative = 1e-8, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn l32_norm_of_unit_gaussian() {
        let p = Potential::parse("gaussian:1:1").unwrap();
        let n = p.lp_norm(1.5).unwrap();
        assert_relative_eq!(n, 4.0 * PI / 3.0, max_relative = 1e-10);
        assert!(n < consts::sobolev_s3());
        assert!(p.lp_norm(2.0).is_err());
    }

    #[test]
    fn l1_norm_of_square_well_is_ball_volume_times_depth() {
        let p = Potential::new(Family::SquareWell, 2.0, 1.5).unwrap();
        let n = p.lp_norm(1.0).unwrap();
        assert_relative_eq!(n, 2.0 * (4.0 * PI / 3.0) * 1.5f64.powi(3), max_relative = 1e-10);
    }

    /// Cached closed-form norms agree with the quadrature route.
    #[test]
    fn cached_norms_match_quadrature() {
        for spec in ["gaussian:1:1", "exponential:1.3:0.8", "squarewell:0.6:2.0"] {
            let p = Potential::parse(spec).unwrap();
            assert_relative_eq!(p.norms().l1, p.lp_norm(1.0).unwrap(), max_relative = 1e-10);
            assert_relative_eq!(p.norms().l32, p.lp_norm(1.5).unwrap(), max_relative = 1e-10);
            let r_end = p.decay_radius(1e-38);
            let w = 4.0
                * PI
                * adaptive_quad(&|r| r * r * (1.0 + r) * p.v(r).abs(), 0.0, r_end, 1e-12)
                    .unwrap();
            assert_relative_eq!(p.norms().l1_weighted, w, max_relative = 1e-10);
        }
    }

    /// Norm homogeneity in the depth.
    #[test]
    fn norms_scale_linearly_with_depth() {
        let base = Potential::parse("exponential:1:1").unwrap();
        for &c in &[0.25, 3.0, 17.5] {
            let scaled = Potential::new(Family::Exponential, c, 1.0).unwrap();
            for &q in &[1.0, 1.5] {
                let a = scaled.lp_norm(q).unwrap();
                let b = c * base.lp_norm(q).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn rescaling_identity_at_mu_one() {
        let p = Potential::parse("gaussian:1:1").unwrap();
        let w = p.rescaled_for(1.0).unwrap();
        for &r in &[0.0, 0.5, 2.0] {
            assert_relative_eq!(w.v(r), p.v(r), max_relative = 1e-14);
        }
        assert!(p.rescaled_for(0.0).is_err());
    }

    /// ‖sqrt(mu) V_{sqrt mu}‖_{3/2} = ‖V‖_{3/2} and ‖V_{sqrt mu}‖_1 = ‖V‖_1.
    #[test]
    fn rescaling_norm_invariances() {
        let mu = 0.25;
        let p = Potential::parse("gaussian:1:1").unwrap();
        let w = p.rescaled_for(mu).unwrap();
        assert_relative_eq!(
            w.lp_norm(1.5).unwrap(),
            p.lp_norm(1.5).unwrap(),
            max_relative = 1e-10
        );
        // V_{sqrt mu} itself has depth lambda mu^{-3/2} and range sigma sqrt(mu).
        let v_mu = Potential::new(Family::Gaussian, mu.powf(-1.5), mu.sqrt()).unwrap();
        assert_relative_eq!(
            v_mu.lp_norm(1.0).unwrap(),
            p.lp_norm(1.0).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn sobolev_flag_flips_at_critical_depth() {
        // ‖V‖_{3/2} = lambda (4 pi / 3) for sigma = 1, so the threshold
        // depth is S_3 / (4 pi / 3) ~ 1.3078.
        let ok = Potential::parse("gaussian:1:1").unwrap();
        assert!(check_admissible(&ok).sobolev_ok);
        let too_deep = Potential::parse("gaussian:1.31:1").unwrap();
        let report = check_admissible(&too_deep);
        assert!(!report.sobolev_ok);
    }

    #[test]
    fn square_well_transform_changes_sign() {
        let p = Potential::parse("squarewell:1:1").unwrap();
        let report = check_admissible(&p);
        assert!(!report.vhat_nonpositive);
        assert!(report.vhat0_negative);
    }
}

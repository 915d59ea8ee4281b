//! Local surface geometry on a frontier set: quadratic patches in
//! (C, D, S) → R, fitted partial-derivative fields, Maxwell relation checks,
//! susceptibilities and Legendre potentials.
//!
//! Maxwell checks deliberately use two independent routes: the hat fields
//! (γ̂, δ̂, σ̂) are fitted per point from local quadratic patches, and the
//! relation's two sides come from a linear regression of those fields. On an
//! exactly quadratic surface both routes collapse to the same symmetric
//! Hessian and every residual vanishes; on a learned frontier the residual
//! measures how coherently the fitted fields satisfy the exact differential.

use nalgebra::{DMatrix, DVector, Matrix3, RowVector3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frontier::FrontierSet;
use crate::functionals::FunctionalPoint;

/// Patch fits explaining less than this share of local R variation are
/// treated as non-smooth (kinks, noise) and reported inconclusive.
const SMOOTHNESS_RESIDUAL_FRACTION: f64 = 0.05;
const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Serialize)]
pub struct SurfacePatch {
    /// Index into the frontier set's points.
    pub center: usize,
    pub k: usize,
    /// dR/d(C, D, S) of the local quadratic fit at the center.
    pub gradient: [f64; 3],
    pub hessian: [[f64; 3]; 3],
    /// RMS fit residual over the neighborhood.
    pub residual_rms: f64,
    /// Standard deviation of R over the neighborhood, for scale.
    pub r_spread: f64,
}

impl SurfacePatch {
    pub fn is_smooth(&self) -> bool {
        self.residual_rms <= SMOOTHNESS_RESIDUAL_FRACTION * self.r_spread.max(1e-12)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialEstimates {
    pub gamma_hat: f64,
    pub delta_hat: f64,
    pub sigma_hat: f64,
    /// (γ/ρ, δ/ρ, σ/ρ) when the point's ρ is positive.
    pub multiplier_implied: Option<[f64; 3]>,
    pub patch: SurfacePatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    C,
    D,
    S,
    Gamma,
    Delta,
    Sigma,
}

impl Quantity {
    fn label(&self) -> &'static str {
        match self {
            Quantity::C => "C",
            Quantity::D => "D",
            Quantity::S => "S",
            Quantity::Gamma => "gamma",
            Quantity::Delta => "delta",
            Quantity::Sigma => "sigma",
        }
    }
}

/// ∂of/∂wrt holding the other two coordinates fixed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartialSpec {
    pub of: Quantity,
    pub wrt: Quantity,
    pub holding: [Quantity; 2],
}

impl PartialSpec {
    fn label(&self) -> String {
        format!(
            "d{}/d{}|{},{}",
            self.of.label(),
            self.wrt.label(),
            self.holding[0].label(),
            self.holding[1].label()
        )
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaxwellRelation {
    pub id: &'static str,
    /// Which thermodynamic potential the relation comes from.
    pub potential: &'static str,
    pub lhs: PartialSpec,
    pub rhs: PartialSpec,
    /// +1 or −1: lhs = sign · rhs.
    pub sign: f64,
}

/// The complete set of implemented relations. Two further lines of the
/// source enumeration do not type-check against their stated potentials and
/// are excluded.
pub fn maxwell_relations() -> Vec<MaxwellRelation> {
    use Quantity::*;
    let p = |of, wrt, h0, h1| PartialSpec {
        of,
        wrt,
        holding: [h0, h1],
    };
    vec![
        MaxwellRelation {
            id: "R:dDelta/dC=dGamma/dD",
            potential: "R",
            lhs: p(Delta, C, D, S),
            rhs: p(Gamma, D, C, S),
            sign: 1.0,
        },
        MaxwellRelation {
            id: "R:dDelta/dS=dSigma/dD",
            potential: "R",
            lhs: p(Delta, S, C, D),
            rhs: p(Sigma, D, C, S),
            sign: 1.0,
        },
        MaxwellRelation {
            id: "R:dGamma/dS=dSigma/dC",
            potential: "R",
            lhs: p(Gamma, S, C, D),
            rhs: p(Sigma, C, D, S),
            sign: 1.0,
        },
        MaxwellRelation {
            id: "G:dC/dSigma=dS/dGamma",
            potential: "G = R + sigma S + gamma C",
            lhs: p(C, Sigma, Gamma, D),
            rhs: p(S, Gamma, Sigma, D),
            sign: 1.0,
        },
        MaxwellRelation {
            id: "H:dC/dD=-dDelta/dGamma",
            potential: "H = R + gamma C",
            lhs: p(C, D, Gamma, S),
            rhs: p(Delta, Gamma, D, S),
            sign: -1.0,
        },
        MaxwellRelation {
            id: "H:dC/dS=-dSigma/dGamma",
            potential: "H = R + gamma C",
            lhs: p(C, S, Gamma, D),
            rhs: p(Sigma, Gamma, S, D),
            sign: -1.0,
        },
        MaxwellRelation {
            id: "A:dGamma/dDelta=-dD/dC",
            potential: "A = R + delta D",
            lhs: p(Gamma, Delta, C, S),
            rhs: p(D, C, Delta, S),
            sign: -1.0,
        },
        MaxwellRelation {
            id: "B:dS/dDelta=dD/dSigma",
            potential: "B = R + delta D + sigma S",
            lhs: p(S, Delta, Sigma, C),
            rhs: p(D, Sigma, Delta, C),
            sign: 1.0,
        },
        MaxwellRelation {
            id: "F:dGamma/dSigma=-dS/dC",
            potential: "F = R + sigma S",
            lhs: p(Gamma, Sigma, C, D),
            rhs: p(S, C, Sigma, D),
            sign: -1.0,
        },
    ]
}

/// The relation discussed in the main text: ∂δ/∂C|_D = ∂γ/∂D|_C.
pub fn main_text_relation() -> MaxwellRelation {
    maxwell_relations()[0]
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub id: &'static str,
    pub lhs_label: String,
    pub rhs_label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub sign: f64,
    /// |lhs − sign·rhs| / max(|lhs|, |rhs|, eps).
    pub residual: f64,
    pub conclusive: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityReport {
    /// K_D = ∂R/∂σ at approximately constant D.
    pub k_d: f64,
    pub sigma_at: f64,
    pub d_at: f64,
    pub n_points: usize,
    pub residual_rms: f64,
}

/// Legendre potentials of one point given partial estimates (γ, δ, σ).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Potentials {
    /// F = R + σS
    pub f: f64,
    /// H = R + γC
    pub h: f64,
    /// G = R + σS + γC
    pub g: f64,
    /// A = R + δD
    pub a: f64,
    /// B = R + δD + σS
    pub b: f64,
}

pub fn potentials(point: &FunctionalPoint, gamma: f64, delta: f64, sigma: f64) -> Potentials {
    let f = point.r + sigma * point.s;
    let h = point.r + gamma * point.c;
    let g = f + gamma * point.c;
    let a = point.r + delta * point.d;
    let b = a + sigma * point.s;
    Potentials { f, h, g, a, b }
}

/// Geometry engine over the converged points of a frontier set.
pub struct FrontierGeometry<'a> {
    set: &'a FrontierSet,
    /// Converged point indices into `set.points`.
    idx: Vec<usize>,
    coords: Vec<[f64; 3]>,
    r: Vec<f64>,
    scale: [f64; 3],
    k: usize,
}

impl<'a> FrontierGeometry<'a> {
    pub fn new(set: &'a FrontierSet, k: usize) -> Result<Self> {
        if k < 10 {
            return Err(Error::InvalidInput(format!(
                "quadratic patches need k >= 10 neighbors, got {k}"
            )));
        }
        let idx = set.converged_indices();
        if idx.len() < k {
            return Err(Error::InsufficientNeighbors {
                needed: k,
                got: idx.len(),
            });
        }
        let coords: Vec<[f64; 3]> = idx
            .iter()
            .map(|&i| {
                let p = &set.points[i].point;
                [p.c, p.d, p.s]
            })
            .collect();
        let r: Vec<f64> = idx.iter().map(|&i| set.points[i].point.r).collect();
        let mut scale = [0.0f64; 3];
        for a in 0..3 {
            let mean = coords.iter().map(|c| c[a]).sum::<f64>() / coords.len() as f64;
            let var = coords
                .iter()
                .map(|c| (c[a] - mean).powi(2))
                .sum::<f64>()
                / coords.len() as f64;
            scale[a] = var.sqrt().max(1e-12);
        }
        Ok(FrontierGeometry {
            set,
            idx,
            coords,
            r,
            scale,
            k,
        })
    }

    pub fn set(&self) -> &FrontierSet {
        self.set
    }

    /// Converged-point indices (into the frontier set).
    pub fn point_indices(&self) -> &[usize] {
        &self.idx
    }

    fn local_index(&self, at: usize) -> Result<usize> {
        self.idx
            .iter()
            .position(|&i| i == at)
            .ok_or_else(|| Error::InvalidInput(format!("point {at} is not converged")))
    }

    /// k nearest converged points to `center` (local index), standardized
    /// Euclidean metric, center included.
    fn neighborhood(&self, center: usize) -> Vec<usize> {
        let c = self.coords[center];
        let mut order: Vec<usize> = (0..self.coords.len()).collect();
        let dist = |i: usize| -> f64 {
            let p = self.coords[i];
            (0..3)
                .map(|a| ((p[a] - c[a]) / self.scale[a]).powi(2))
                .sum()
        };
        order.sort_by(|&a, &b| dist(a).partial_cmp(&dist(b)).unwrap());
        order.truncate(self.k);
        order
    }

    fn fit_patch_local(&self, center: usize) -> Result<SurfacePatch> {
        let hood = self.neighborhood(center);
        let c = self.coords[center];
        let n = hood.len();
        let mut design = DMatrix::zeros(n, 10);
        let mut target = DVector::zeros(n);
        for (row, &p) in hood.iter().enumerate() {
            let dc = self.coords[p][0] - c[0];
            let dd = self.coords[p][1] - c[1];
            let ds = self.coords[p][2] - c[2];
            let cols = [
                1.0,
                dc,
                dd,
                ds,
                0.5 * dc * dc,
                0.5 * dd * dd,
                0.5 * ds * ds,
                dc * dd,
                dc * ds,
                dd * ds,
            ];
            for (j, v) in cols.iter().enumerate() {
                design[(row, j)] = *v;
            }
            target[row] = self.r[p];
        }
        let svd = design.clone().svd(true, true);
        let max_sv = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * max_sv)
            .count();
        if rank < 10 {
            return Err(Error::RankDeficient(format!(
                "quadratic design rank {rank} < 10 around point {}",
                self.idx[center]
            )));
        }
        let coeffs = svd
            .solve(&target, 1e-12 * max_sv)
            .map_err(|e| Error::RankDeficient(e.to_string()))?;
        let fitted = &design * &coeffs;
        let residual_rms = ((&target - &fitted).norm_squared() / n as f64).sqrt();
        let r_mean = target.iter().sum::<f64>() / n as f64;
        let r_spread =
            (target.iter().map(|v| (v - r_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        Ok(SurfacePatch {
            center: self.idx[center],
            k: self.k,
            gradient: [coeffs[1], coeffs[2], coeffs[3]],
            hessian: [
                [coeffs[4], coeffs[7], coeffs[8]],
                [coeffs[7], coeffs[5], coeffs[9]],
                [coeffs[8], coeffs[9], coeffs[6]],
            ],
            residual_rms,
            r_spread,
        })
    }

    pub fn patch(&self, at: usize) -> Result<SurfacePatch> {
        self.fit_patch_local(self.local_index(at)?)
    }

    /// Fitted (γ̂, δ̂, σ̂) = −∇R at `at`, plus multiplier-implied values.
    pub fn partials(&self, at: usize) -> Result<PartialEstimates> {
        let patch = self.patch(at)?;
        let setting = self.set.points[at].setting;
        let multiplier_implied = if setting.rho > 0.0 {
            Some([
                setting.gamma / setting.rho,
                setting.delta / setting.rho,
                setting.sigma / setting.rho,
            ])
        } else {
            None
        };
        Ok(PartialEstimates {
            gamma_hat: -patch.gradient[0],
            delta_hat: -patch.gradient[1],
            sigma_hat: -patch.gradient[2],
            multiplier_implied,
            patch,
        })
    }

    /// Jacobian T of the fitted field map (C,D,S) ↦ (γ̂, δ̂, σ̂) at `at`,
    /// from a linear regression of the per-neighbor patch gradients.
    pub fn field_jacobian(&self, at: usize) -> Result<[[f64; 3]; 3]> {
        let center = self.local_index(at)?;
        let hood = self.neighborhood(center);
        let c = self.coords[center];
        let n = hood.len();
        let mut fields = vec![[0.0f64; 3]; n];
        for (row, &p) in hood.iter().enumerate() {
            let patch = self.fit_patch_local(p)?;
            fields[row] = [
                -patch.gradient[0],
                -patch.gradient[1],
                -patch.gradient[2],
            ];
        }
        let mut design = DMatrix::zeros(n, 4);
        for (row, &p) in hood.iter().enumerate() {
            design[(row, 0)] = 1.0;
            for a in 0..3 {
                design[(row, 1 + a)] = self.coords[p][a] - c[a];
            }
        }
        let svd = design.svd(true, true);
        let max_sv = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * max_sv)
            .count();
        if rank < 4 {
            return Err(Error::RankDeficient(
                "linear field design is rank-deficient".into(),
            ));
        }
        let mut t = [[0.0f64; 3]; 3];
        for f in 0..3 {
            let target = DVector::from_iterator(n, fields.iter().map(|v| v[f]));
            let coeffs = svd
                .solve(&target, 1e-12 * max_sv)
                .map_err(|e| Error::RankDeficient(e.to_string()))?;
            t[f] = [coeffs[1], coeffs[2], coeffs[3]];
        }
        Ok(t)
    }

    /// Row of the differential du in the d(C,D,S) basis.
    fn quantity_row(q: Quantity, t: &[[f64; 3]; 3]) -> RowVector3<f64> {
        match q {
            Quantity::C => RowVector3::new(1.0, 0.0, 0.0),
            Quantity::D => RowVector3::new(0.0, 1.0, 0.0),
            Quantity::S => RowVector3::new(0.0, 0.0, 1.0),
            Quantity::Gamma => RowVector3::from_row_slice(&t[0]),
            Quantity::Delta => RowVector3::from_row_slice(&t[1]),
            Quantity::Sigma => RowVector3::from_row_slice(&t[2]),
        }
    }

    /// Evaluates ∂of/∂wrt|holding from the field Jacobian by a change of
    /// coordinates. Returns None when the coordinate triple is degenerate.
    fn evaluate_partial(spec: &PartialSpec, t: &[[f64; 3]; 3]) -> Option<f64> {
        let rows = [
            Self::quantity_row(spec.wrt, t),
            Self::quantity_row(spec.holding[0], t),
            Self::quantity_row(spec.holding[1], t),
        ];
        let m = Matrix3::from_rows(&rows);
        let inv = m.try_inverse()?;
        let cond = m.norm() * inv.norm();
        if !cond.is_finite() || cond > CONDITION_LIMIT {
            return None;
        }
        let u = Self::quantity_row(spec.of, t);
        // du = u · M⁻¹ · d(wrt, holding...): coefficient on d(wrt)
        let coeffs = u * inv;
        Some(coeffs.dot(&Vector3::new(1.0, 0.0, 0.0).transpose()))
    }

    /// Checks one Maxwell relation at `at`. Kinked or degenerate
    /// neighborhoods are reported inconclusive rather than failed.
    pub fn maxwell_check(&self, at: usize, relation: &MaxwellRelation) -> Result<RelationCheck> {
        let mut check = RelationCheck {
            id: relation.id,
            lhs_label: relation.lhs.label(),
            rhs_label: relation.rhs.label(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            sign: relation.sign,
            residual: f64::NAN,
            conclusive: false,
            reason: None,
        };
        let patch = self.patch(at)?;
        if !patch.is_smooth() {
            check.reason = Some(format!(
                "patch residual {:.3e} exceeds {:.0}% of local R spread {:.3e}",
                patch.residual_rms,
                SMOOTHNESS_RESIDUAL_FRACTION * 100.0,
                patch.r_spread
            ));
            return Ok(check);
        }
        let t = match self.field_jacobian(at) {
            Ok(t) => t,
            Err(e) => {
                check.reason = Some(format!("field fit failed: {e}"));
                return Ok(check);
            }
        };
        let lhs = Self::evaluate_partial(&relation.lhs, &t);
        let rhs = Self::evaluate_partial(&relation.rhs, &t);
        match (lhs, rhs) {
            (Some(lhs), Some(rhs)) => {
                check.lhs = lhs;
                check.rhs = rhs;
                check.residual = (lhs - relation.sign * rhs).abs()
                    / lhs.abs().max(rhs.abs()).max(1e-12);
                check.conclusive = true;
            }
            _ => {
                check.reason = Some("degenerate coordinate direction (zero curvature)".into());
            }
        }
        Ok(check)
    }

    /// K_D from a constrained quadratic fit R(σ) over converged points with
    /// D within `d_band` of the point's D. σ is the multiplier-implied value
    /// σ/ρ, so every selected point needs ρ > 0.
    pub fn capacity(&self, at: usize, d_band: f64) -> Result<CapacityReport> {
        let d_at = self.set.points[at].point.d;
        let at_setting = self.set.points[at].setting;
        if at_setting.rho <= 0.0 {
            return Err(Error::InsufficientSigmaVariation(
                "capacity needs rho > 0 to read sigma/rho at the point".into(),
            ));
        }
        let sigma_at = at_setting.sigma / at_setting.rho;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for &i in &self.idx {
            let p = &self.set.points[i];
            if (p.point.d - d_at).abs() <= d_band && p.setting.rho > 0.0 {
                pts.push((p.setting.sigma / p.setting.rho, p.point.r));
            }
        }
        let mut sigmas: Vec<f64> = pts.iter().map(|p| p.0).collect();
        sigmas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sigmas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if pts.len() < 3 || sigmas.len() < 3 {
            return Err(Error::InsufficientSigmaVariation(format!(
                "{} points with {} distinct sigma values in the D band",
                pts.len(),
                sigmas.len()
            )));
        }
        let n = pts.len();
        let mut design = DMatrix::zeros(n, 3);
        let mut target = DVector::zeros(n);
        for (row, &(sig, r)) in pts.iter().enumerate() {
            design[(row, 0)] = 1.0;
            design[(row, 1)] = sig - sigma_at;
            design[(row, 2)] = (sig - sigma_at) * (sig - sigma_at);
            target[row] = r;
        }
        let svd = design.clone().svd(true, true);
        let coeffs = svd
            .solve(&target, 1e-12 * svd.singular_values.max())
            .map_err(|e| Error::RankDeficient(e.to_string()))?;
        let fitted = &design * &coeffs;
        let residual_rms = ((&target - &fitted).norm_squared() / n as f64).sqrt();
        Ok(CapacityReport {
            k_d: coeffs[1],
            sigma_at,
            d_at,
            n_points: n,
            residual_rms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontier::FrontierPoint;
    use crate::functionals::MultiplierSetting;
    use approx::assert_abs_diff_eq;

    /// Builds a synthetic frontier from an explicit R(C, D, S).
    fn synthetic_set<F: Fn(f64, f64, f64) -> f64>(
        f: F,
        grid: &[f64],
        sigma_of_s: bool,
    ) -> FrontierSet {
        let mut points = Vec::new();
        let mut idx = 0usize;
        for &c in grid {
            for &d in grid {
                for &s in grid {
                    let r = f(c, d, s);
                    let setting = MultiplierSetting {
                        rho: 1.0,
                        delta: 1.0 + 0.01 * idx as f64,
                        gamma: 1.0,
                        sigma: if sigma_of_s { s } else { 0.1 },
                    };
                    points.push(FrontierPoint {
                        setting,
                        point: FunctionalPoint {
                            r,
                            c,
                            d,
                            s,
                            v: 0.0,
                            j: 0.0,
                            setting,
                            noise_samples: 0,
                            seed: 0,
                        },
                        converged: true,
                        diverged: false,
                        params: None,
                    });
                    idx += 1;
                }
            }
        }
        FrontierSet::from_points(points).unwrap()
    }

    fn center_index(set: &FrontierSet) -> usize {
        // middle of a 5^3 grid
        set.points.len() / 2
    }

    #[test]
    fn planar_surface_recovers_exact_partials() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let set = synthetic_set(|c, d, s| 5.0 - 2.0 * c - 3.0 * d - 0.5 * s, &grid, false);
        let geo = FrontierGeometry::new(&set, 15).unwrap();
        let est = geo.partials(center_index(&set)).unwrap();
        assert_abs_diff_eq!(est.gamma_hat, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(est.delta_hat, 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(est.sigma_hat, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn quadratic_surface_recovers_gradient_and_hessian() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let f = |c: f64, d: f64, s: f64| {
            4.0 - 1.5 * c - 0.8 * d - 0.3 * s
                + 0.5 * (0.9 * c * c + 0.7 * d * d + 0.4 * s * s)
                + 0.25 * c * d
                - 0.15 * c * s
                + 0.35 * d * s
        };
        let set = synthetic_set(f, &grid, false);
        let geo = FrontierGeometry::new(&set, 20).unwrap();
        let at = center_index(&set);
        let patch = geo.patch(at).unwrap();
        let p = &set.points[at].point;
        assert_abs_diff_eq!(patch.gradient[0], -1.5 + 0.9 * p.c + 0.25 * p.d - 0.15 * p.s, epsilon = 1e-8);
        assert_abs_diff_eq!(patch.hessian[0][1], 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(patch.hessian[1][2], 0.35, epsilon = 1e-8);
        assert!(patch.residual_rms < 1e-10);
    }

    #[test]
    fn synthetic_quadratic_satisfies_every_maxwell_relation() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let f = |c: f64, d: f64, s: f64| {
            6.0 - 1.2 * c - 0.9 * d - 0.6 * s
                + 0.5 * (0.8 * c * c + 1.1 * d * d + 0.9 * s * s)
                + 0.3 * c * d
                + 0.2 * c * s
                + 0.25 * d * s
        };
        let set = synthetic_set(f, &grid, false);
        let geo = FrontierGeometry::new(&set, 20).unwrap();
        let at = center_index(&set);
        for relation in maxwell_relations() {
            let check = geo.maxwell_check(at, &relation).unwrap();
            assert!(check.conclusive, "{}: {:?}", relation.id, check.reason);
            assert!(
                check.residual < 1e-8,
                "{}: lhs {} rhs {} residual {}",
                relation.id,
                check.lhs,
                check.rhs,
                check.residual
            );
        }
    }

    #[test]
    fn kinked_surface_is_flagged_inconclusive() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        // a crease along C = 0.6 breaks the quadratic fit at the center; the
        // neighborhood must span enough distinct C values to see it
        let f = |c: f64, d: f64, s: f64| 3.0 + 4.0 * (c - 0.6f64).abs() - 0.5 * d - 0.2 * s;
        let set = synthetic_set(f, &grid, false);
        let geo = FrontierGeometry::new(&set, 45).unwrap();
        let check = geo
            .maxwell_check(center_index(&set), &main_text_relation())
            .unwrap();
        assert!(!check.conclusive);
        assert!(check.reason.unwrap().contains("patch residual"));
    }

    #[test]
    fn degenerate_sigma_direction_is_inconclusive_not_failed() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        // R has no S dependence at all: sigma-hat is identically zero and
        // any coordinate frame using dSigma is singular
        let f = |c: f64, d: f64, _s: f64| 3.0 - 1.3 * c - 0.7 * d + 0.5 * (c * c + d * d);
        let set = synthetic_set(f, &grid, false);
        let geo = FrontierGeometry::new(&set, 20).unwrap();
        let relation = maxwell_relations()
            .into_iter()
            .find(|r| r.id == "G:dC/dSigma=dS/dGamma")
            .unwrap();
        let check = geo.maxwell_check(center_index(&set), &relation).unwrap();
        assert!(!check.conclusive);
    }

    #[test]
    fn capacity_recovers_the_analytic_derivative() {
        // R = −σ² at fixed D; grid carries σ in the settings
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let set = synthetic_set(|_c, _d, s| -(s * s), &grid, true);
        let geo = FrontierGeometry::new(&set, 15).unwrap();
        let at = center_index(&set);
        let sigma_at = set.points[at].setting.sigma;
        let report = geo.capacity(at, 1e9).unwrap();
        assert_abs_diff_eq!(report.k_d, -2.0 * sigma_at, epsilon = 1e-8);
    }

    #[test]
    fn capacity_of_a_constant_surface_is_zero() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let set = synthetic_set(|_, _, _| 2.5, &grid, true);
        let geo = FrontierGeometry::new(&set, 15).unwrap();
        let report = geo.capacity(center_index(&set), 1e9).unwrap();
        assert_abs_diff_eq!(report.k_d, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn capacity_needs_sigma_variation() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        let set = synthetic_set(|c, d, s| c + d + s, &grid, false); // constant sigma
        let geo = FrontierGeometry::new(&set, 15).unwrap();
        assert!(matches!(
            geo.capacity(center_index(&set), 1e9),
            Err(Error::InsufficientSigmaVariation(_))
        ));
    }

    #[test]
    fn potentials_bookkeeping() {
        let setting = MultiplierSetting {
            rho: 1.0,
            delta: 0.7,
            gamma: 1.3,
            sigma: 0.4,
        };
        let point = FunctionalPoint {
            r: 2.0,
            c: 0.5,
            d: 1.1,
            s: 3.0,
            v: 0.0,
            j: 0.0,
            setting,
            noise_samples: 0,
            seed: 0,
        };
        let (gamma, delta, sigma) = (1.3, 0.7, 0.4);
        let p = potentials(&point, gamma, delta, sigma);
        assert!((p.g - p.f - gamma * point.c).abs() < 1e-12);
        assert!((p.h - point.r - gamma * point.c).abs() < 1e-12);
        assert!((p.b - p.a - sigma * point.s).abs() < 1e-12);
        // sigma = 0 collapses F to R
        let p0 = potentials(&point, gamma, delta, 0.0);
        assert_eq!(p0.f, point.r);
        // all partials zero collapses everything to R
        let pz = potentials(&point, 0.0, 0.0, 0.0);
        assert_eq!(pz.f, point.r);
        assert_eq!(pz.g, point.r);
        assert_eq!(pz.b, point.r);
    }

    #[test]
    fn rank_deficient_neighborhood_errors_with_guidance() {
        // collinear points: all on a line in (C, D, S)
        let mut points = Vec::new();
        for i in 0..20 {
            let tpar = i as f64 * 0.1;
            let setting = MultiplierSetting {
                rho: 1.0,
                delta: 1.0 + i as f64,
                gamma: 1.0,
                sigma: 0.1,
            };
            points.push(FrontierPoint {
                setting,
                point: FunctionalPoint {
                    r: 1.0 - tpar,
                    c: tpar,
                    d: 2.0 * tpar,
                    s: 3.0 * tpar,
                    v: 0.0,
                    j: 0.0,
                    setting,
                    noise_samples: 0,
                    seed: 0,
                },
                converged: true,
                diverged: false,
                params: None,
            });
        }
        let set = FrontierSet::from_points(points).unwrap();
        let geo = FrontierGeometry::new(&set, 12).unwrap();
        match geo.patch(10) {
            Err(Error::RankDeficient(msg)) => assert!(msg.contains("rank")),
            other => panic!("expected rank deficiency, got {:?}", other.map(|_| ())),
        }
    }
}

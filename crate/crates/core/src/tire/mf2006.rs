//! Magic Formula 2006 tire forces with scaling factors.
//!
//! Pure-slip longitudinal/lateral forces and their combined-slip weighting.
//! Turn slip, inflation pressure dependence and the aligning moment are not
//! modelled: all turn-slip reduction factors are 1 and the pressure
//! increment is 0.

use serde::{Deserialize, Serialize};

use super::{Forces, SlipState};
use crate::error::{SimError, SimResult};

/// Small denominators guard, as in the reference formulation.
const EPS: f64 = 1e-9;
/// Grip-degradation shape constant used for the primed grip scaling factor.
const A_MU: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongitudinalCoefficients {
    pub pcx1: f64,
    pub pdx1: f64,
    #[serde(default)]
    pub pdx2: f64,
    #[serde(default)]
    pub pdx3: f64,
    pub pex1: f64,
    #[serde(default)]
    pub pex2: f64,
    #[serde(default)]
    pub pex3: f64,
    #[serde(default)]
    pub pex4: f64,
    pub pkx1: f64,
    #[serde(default)]
    pub pkx2: f64,
    #[serde(default)]
    pub pkx3: f64,
    #[serde(default)]
    pub phx1: f64,
    #[serde(default)]
    pub phx2: f64,
    #[serde(default)]
    pub pvx1: f64,
    #[serde(default)]
    pub pvx2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateralCoefficients {
    pub pcy1: f64,
    pub pdy1: f64,
    #[serde(default)]
    pub pdy2: f64,
    #[serde(default)]
    pub pdy3: f64,
    pub pey1: f64,
    #[serde(default)]
    pub pey2: f64,
    #[serde(default)]
    pub pey3: f64,
    #[serde(default)]
    pub pey4: f64,
    #[serde(default)]
    pub pey5: f64,
    pub pky1: f64,
    pub pky2: f64,
    #[serde(default)]
    pub pky3: f64,
    pub pky4: f64,
    #[serde(default)]
    pub pky5: f64,
    #[serde(default)]
    pub pky6: f64,
    #[serde(default)]
    pub pky7: f64,
    #[serde(default)]
    pub phy1: f64,
    #[serde(default)]
    pub phy2: f64,
    #[serde(default)]
    pub pvy1: f64,
    #[serde(default)]
    pub pvy2: f64,
    #[serde(default)]
    pub pvy3: f64,
    #[serde(default)]
    pub pvy4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinedCoefficients {
    pub rbx1: f64,
    #[serde(default)]
    pub rbx2: f64,
    #[serde(default)]
    pub rbx3: f64,
    pub rcx1: f64,
    #[serde(default)]
    pub rex1: f64,
    #[serde(default)]
    pub rex2: f64,
    #[serde(default)]
    pub rhx1: f64,
    pub rby1: f64,
    #[serde(default)]
    pub rby2: f64,
    #[serde(default)]
    pub rby3: f64,
    #[serde(default)]
    pub rby4: f64,
    pub rcy1: f64,
    #[serde(default)]
    pub rey1: f64,
    #[serde(default)]
    pub rey2: f64,
    #[serde(default)]
    pub rhy1: f64,
    #[serde(default)]
    pub rhy2: f64,
    #[serde(default)]
    pub rvy1: f64,
    #[serde(default)]
    pub rvy2: f64,
    #[serde(default)]
    pub rvy3: f64,
    #[serde(default)]
    pub rvy4: f64,
    #[serde(default)]
    pub rvy5: f64,
    #[serde(default)]
    pub rvy6: f64,
}

fn one() -> f64 {
    1.0
}

/// User scaling factors (λ). All default to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingFactors {
    #[serde(default = "one")]
    pub fz0: f64,
    #[serde(default = "one")]
    pub mux: f64,
    #[serde(default = "one")]
    pub muy: f64,
    #[serde(default = "one")]
    pub kxk: f64,
    #[serde(default = "one")]
    pub kya: f64,
    #[serde(default = "one")]
    pub cx: f64,
    #[serde(default = "one")]
    pub cy: f64,
    #[serde(default = "one")]
    pub ex: f64,
    #[serde(default = "one")]
    pub ey: f64,
    #[serde(default = "one")]
    pub hx: f64,
    #[serde(default = "one")]
    pub hy: f64,
    #[serde(default = "one")]
    pub vx: f64,
    #[serde(default = "one")]
    pub vy: f64,
    #[serde(default = "one")]
    pub kyg: f64,
    #[serde(default = "one")]
    pub xa: f64,
    #[serde(default = "one")]
    pub yk: f64,
    #[serde(default = "one")]
    pub vyk: f64,
}

impl Default for ScalingFactors {
    fn default() -> Self {
        Self {
            fz0: 1.0,
            mux: 1.0,
            muy: 1.0,
            kxk: 1.0,
            kya: 1.0,
            cx: 1.0,
            cy: 1.0,
            ex: 1.0,
            ey: 1.0,
            hx: 1.0,
            hy: 1.0,
            vx: 1.0,
            vy: 1.0,
            kyg: 1.0,
            xa: 1.0,
            yk: 1.0,
            vyk: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mf2006Parameters {
    /// Nominal load (N).
    pub fz0: f64,
    /// Lower end of the valid load range (N).
    #[serde(default)]
    pub fz_min: f64,
    /// Upper end of the valid load range (N).
    pub fz_max: f64,
    pub longitudinal: LongitudinalCoefficients,
    pub lateral: LateralCoefficients,
    pub combined: CombinedCoefficients,
    #[serde(default)]
    pub scaling: ScalingFactors,
}

/// Coefficients of one pure-slip curve `y = D sin(C atan(B x - E (B x - atan(B x)))) + Sv`
/// evaluated at `x = slip + Sh`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureSlipCurve {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub sh: f64,
    pub sv: f64,
    /// Slip stiffness at zero slip (N per unit slip).
    pub stiffness: f64,
    /// Friction coefficient (D / Fz).
    pub mu: f64,
}

#[inline]
fn magic(b: f64, c: f64, d: f64, e: f64, x: f64) -> f64 {
    let bx = b * x;
    d * (c * (bx - e * (bx - bx.atan())).atan()).sin()
}

#[inline]
fn weighting(b: f64, c: f64, e: f64, x: f64) -> f64 {
    let bx = b * x;
    (c * (bx - e * (bx - bx.atan())).atan()).cos()
}

fn finite(v: f64, name: &'static str) -> SimResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SimError::TireModel { coefficient: name })
    }
}

fn lambda_prime(lambda_star: f64) -> f64 {
    A_MU * lambda_star / (1.0 + (A_MU - 1.0) * lambda_star)
}

impl Mf2006Parameters {
    fn fz0_scaled(&self) -> f64 {
        self.fz0 * self.scaling.fz0
    }

    fn dfz(&self, fz: f64) -> f64 {
        let f0 = self.fz0_scaled();
        (fz - f0) / f0
    }

    /// Pure longitudinal slip curve at load `fz` (N) and camber `gamma` (rad).
    pub fn longitudinal_curve(&self, fz: f64, gamma: f64) -> SimResult<PureSlipCurve> {
        let p = &self.longitudinal;
        let l = &self.scaling;
        let dfz = self.dfz(fz);
        let gamma_star = gamma.sin();
        let c = finite(p.pcx1 * l.cx, "pcx1")?;
        let mu = finite(
            (p.pdx1 + p.pdx2 * dfz) * (1.0 - p.pdx3 * gamma_star * gamma_star) * l.mux,
            "pdx1",
        )?;
        let d = mu * fz;
        let e = finite((p.pex1 + p.pex2 * dfz + p.pex3 * dfz * dfz) * l.ex, "pex1")?;
        let stiffness = finite(
            fz * (p.pkx1 + p.pkx2 * dfz) * (p.pkx3 * dfz).exp() * l.kxk,
            "pkx1",
        )?;
        let b = finite(stiffness / (c * d + EPS), "bx")?;
        let sh = finite((p.phx1 + p.phx2 * dfz) * l.hx, "phx1")?;
        let sv = finite(
            fz * (p.pvx1 + p.pvx2 * dfz) * l.vx * lambda_prime(l.mux),
            "pvx1",
        )?;
        Ok(PureSlipCurve {
            b,
            c,
            d,
            e: e.min(1.0),
            sh,
            sv,
            stiffness,
            mu,
        })
    }

    /// Pure lateral slip curve at load `fz` (N) and camber `gamma` (rad).
    ///
    /// `e` holds the curvature factor for positive slip; the sign-dependent
    /// part (`pey3`, `pey4`) is applied in [`Self::forces`].
    pub fn lateral_curve(&self, fz: f64, gamma: f64) -> SimResult<PureSlipCurve> {
        let (curve, _) = self.lateral_curve_parts(fz, gamma)?;
        Ok(curve)
    }

    fn lateral_curve_parts(&self, fz: f64, gamma: f64) -> SimResult<(PureSlipCurve, f64)> {
        let p = &self.lateral;
        let l = &self.scaling;
        let f0 = self.fz0_scaled();
        let dfz = self.dfz(fz);
        let gs = gamma.sin();
        let c = finite(p.pcy1 * l.cy, "pcy1")?;
        let mu = finite(
            (p.pdy1 + p.pdy2 * dfz) * (1.0 - p.pdy3 * gs * gs) * l.muy,
            "pdy1",
        )?;
        let d = mu * fz;
        let e_sym = finite((p.pey1 + p.pey2 * dfz) * (1.0 + p.pey5 * gs * gs), "pey1")?;
        let e_sign = (p.pey3 + p.pey4 * gs) * (p.pey1 + p.pey2 * dfz);
        let stiffness = finite(
            p.pky1
                * f0
                * (1.0 - p.pky3 * gs.abs())
                * (p.pky4 * (fz / ((p.pky2 + p.pky5 * gs * gs) * f0)).atan()).sin()
                * l.kya,
            "pky1",
        )?;
        let b = finite(stiffness / (c * d + EPS), "by")?;
        let lp = lambda_prime(l.muy);
        let svg = fz * (p.pvy3 + p.pvy4 * dfz) * gs * l.kyg * lp;
        let sv = finite(fz * (p.pvy1 + p.pvy2 * dfz) * l.vy * lp + svg, "pvy1")?;
        let kyg0 = fz * (p.pky6 + p.pky7 * dfz) * l.kyg;
        let sh = finite(
            (p.phy1 + p.phy2 * dfz) * l.hy + (kyg0 * gs - svg) / (stiffness + EPS),
            "phy1",
        )?;
        Ok((
            PureSlipCurve {
                b,
                c,
                d,
                e: e_sym * l.ey,
                sh,
                sv,
                stiffness,
                mu,
            },
            e_sign * l.ey,
        ))
    }

    /// Combined-slip forces in the tire frame.
    pub fn forces(&self, slip: &SlipState, fz: f64) -> SimResult<Forces> {
        if fz <= 0.0 {
            return Ok(Forces::ZERO);
        }
        let kappa = slip.kappa;
        let alpha_star = slip.alpha.tan();
        let gs = slip.gamma.sin();
        let dfz = self.dfz(fz);
        let l = &self.scaling;
        let r = &self.combined;

        // Pure longitudinal.
        let lx = self.longitudinal_curve(fz, slip.gamma)?;
        let kx = kappa + lx.sh;
        let ex = ((self.longitudinal.pex1 + self.longitudinal.pex2 * dfz
            + self.longitudinal.pex3 * dfz * dfz)
            * (1.0 - self.longitudinal.pex4 * kx.signum())
            * l.ex)
            .min(1.0);
        let fx0 = magic(lx.b, lx.c, lx.d, ex, kx) + lx.sv;

        // Pure lateral.
        let (ly, e_sign) = self.lateral_curve_parts(fz, slip.gamma)?;
        let ay = alpha_star + ly.sh;
        let ey = (ly.e - e_sign * ay.signum()).min(1.0);
        let fy0 = magic(ly.b, ly.c, ly.d, ey, ay) + ly.sv;

        // Combined slip: longitudinal weighting by slip angle.
        let bxa = finite(
            (r.rbx1 + r.rbx3 * gs * gs) * (r.rbx2 * kappa).atan().cos() * l.xa,
            "rbx1",
        )?;
        let cxa = r.rcx1;
        let exa = (r.rex1 + r.rex2 * dfz).min(1.0);
        let shxa = r.rhx1;
        let gxa0 = weighting(bxa, cxa, exa, shxa);
        let gxa = finite(weighting(bxa, cxa, exa, alpha_star + shxa) / gxa0, "rcx1")?;
        let fx = gxa * fx0;

        // Combined slip: lateral weighting by longitudinal slip.
        let byk = finite(
            (r.rby1 + r.rby4 * gs * gs) * (r.rby2 * (alpha_star - r.rby3)).atan().cos() * l.yk,
            "rby1",
        )?;
        let cyk = r.rcy1;
        let eyk = (r.rey1 + r.rey2 * dfz).min(1.0);
        let shyk = r.rhy1 + r.rhy2 * dfz;
        let gyk0 = weighting(byk, cyk, eyk, shyk);
        let gyk = finite(weighting(byk, cyk, eyk, kappa + shyk) / gyk0, "rcy1")?;
        let dvyk = ly.mu * fz * (r.rvy1 + r.rvy2 * dfz + r.rvy3 * gs) * (r.rvy4 * alpha_star).atan().cos();
        let svyk = dvyk * (r.rvy5 * (r.rvy6 * kappa).atan()).sin() * l.vyk;
        let fy = gyk * fy0 + svyk;

        Ok(Forces {
            fx: finite(fx, "fx")?,
            fy: finite(fy, "fy")?,
        })
    }

    /// Builds a full parameter set that reproduces the given basic curves
    /// exactly at its nominal load `fz0` with zero camber and no
    /// asymmetry terms.
    pub fn from_simple(simple: &super::MfSimpleParameters, fz0: f64) -> Self {
        let lon = &simple.longitudinal;
        let lat = &simple.lateral;
        Self {
            fz0,
            fz_min: 0.0,
            fz_max: 4.0 * fz0,
            longitudinal: LongitudinalCoefficients {
                pcx1: lon.c,
                pdx1: lon.d / fz0,
                pdx2: 0.0,
                pdx3: 0.0,
                pex1: lon.e,
                pex2: 0.0,
                pex3: 0.0,
                pex4: 0.0,
                pkx1: lon.b * lon.c * lon.d / fz0,
                pkx2: 0.0,
                pkx3: 0.0,
                phx1: 0.0,
                phx2: 0.0,
                pvx1: 0.0,
                pvx2: 0.0,
            },
            lateral: LateralCoefficients {
                pcy1: lat.c,
                pdy1: lat.d / fz0,
                pdy2: 0.0,
                pdy3: 0.0,
                pey1: lat.e,
                pey2: 0.0,
                pey3: 0.0,
                pey4: 0.0,
                pey5: 0.0,
                // sin(2 atan(1)) = 1, so the stiffness at fz0 is pky1 * fz0.
                pky1: lat.b * lat.c * lat.d / fz0,
                pky2: 1.0,
                pky3: 0.0,
                pky4: 2.0,
                pky5: 0.0,
                pky6: 0.0,
                pky7: 0.0,
                phy1: 0.0,
                phy2: 0.0,
                pvy1: 0.0,
                pvy2: 0.0,
                pvy3: 0.0,
                pvy4: 0.0,
            },
            combined: CombinedCoefficients {
                rbx1: 12.0,
                rbx2: 10.0,
                rbx3: 0.0,
                rcx1: 1.0,
                rex1: 0.0,
                rex2: 0.0,
                rhx1: 0.0,
                rby1: 10.0,
                rby2: 10.0,
                rby3: 0.0,
                rby4: 0.0,
                rcy1: 1.0,
                rey1: 0.0,
                rey2: 0.0,
                rhy1: 0.0,
                rhy2: 0.0,
                rvy1: 0.0,
                rvy2: 0.0,
                rvy3: 0.0,
                rvy4: 0.0,
                rvy5: 0.0,
                rvy6: 0.0,
            },
            scaling: ScalingFactors::default(),
        }
    }

    /// Default coefficient set: a symmetric high-performance road tire
    /// (asymmetry and camber terms zeroed, all scaling factors 1).
    pub fn performance_road_tire() -> Self {
        Self {
            fz0: 4000.0,
            fz_min: 100.0,
            fz_max: 12000.0,
            longitudinal: LongitudinalCoefficients {
                pcx1: 1.6,
                pdx1: 1.75,
                pdx2: -0.10,
                pdx3: 0.0,
                pex1: 0.4,
                pex2: 0.1,
                pex3: 0.0,
                pex4: 0.0,
                pkx1: 28.0,
                pkx2: -2.0,
                pkx3: 0.15,
                phx1: 0.0,
                phx2: 0.0,
                pvx1: 0.0,
                pvx2: 0.0,
            },
            lateral: LateralCoefficients {
                pcy1: 1.45,
                pdy1: 1.7,
                pdy2: -0.12,
                pdy3: 0.0,
                pey1: 0.1,
                pey2: -0.1,
                pey3: 0.0,
                pey4: 0.0,
                pey5: 0.0,
                pky1: 50.0,
                pky2: 2.2,
                pky3: 0.0,
                pky4: 2.0,
                pky5: 0.0,
                pky6: 0.0,
                pky7: 0.0,
                phy1: 0.0,
                phy2: 0.0,
                pvy1: 0.0,
                pvy2: 0.0,
                pvy3: 0.0,
                pvy4: 0.0,
            },
            combined: CombinedCoefficients {
                rbx1: 12.0,
                rbx2: 10.0,
                rbx3: 0.0,
                rcx1: 1.0,
                rex1: 0.0,
                rex2: 0.0,
                rhx1: 0.0,
                rby1: 10.0,
                rby2: 10.0,
                rby3: 0.0,
                rby4: 0.0,
                rcy1: 1.0,
                rey1: 0.0,
                rey2: 0.0,
                rhy1: 0.0,
                rhy2: 0.0,
                rvy1: 0.0,
                rvy2: 0.0,
                rvy3: 0.0,
                rvy4: 0.0,
                rvy5: 0.0,
                rvy6: 0.0,
            },
            scaling: ScalingFactors::default(),
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        if !(self.fz0 > 0.0) {
            return Err(SimError::config("tire fz0 must be positive"));
        }
        if !(self.fz_max > self.fz_min && self.fz_min >= 0.0) {
            return Err(SimError::config("tire load range must satisfy 0 <= fz_min < fz_max"));
        }
        // Peak factors positive and shape factors above 1 over the load range.
        for i in 0..=8 {
            let fz = self.fz_min.max(1.0) + (self.fz_max - self.fz_min.max(1.0)) * i as f64 / 8.0;
            let lx = self.longitudinal_curve(fz, 0.0)?;
            let ly = self.lateral_curve(fz, 0.0)?;
            if !(lx.d > 0.0 && ly.d > 0.0) {
                return Err(SimError::config(format!(
                    "tire peak factor not positive at Fz = {fz:.0} N"
                )));
            }
        }
        if !(self.longitudinal.pcx1 * self.scaling.cx > 1.0 && self.lateral.pcy1 * self.scaling.cy > 1.0)
        {
            return Err(SimError::config("tire shape factors must exceed 1"));
        }
        Ok(())
    }
}

//! Real hypersurfaces given by polynomial defining functions, their CR
//! vector-field bases, gradient rows, and rational point utilities.

use crate::poly::PolarizedPoly;
use crate::scalar::GaussianRational;
use crate::{Error, Result};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Structural form of a defining function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceForm {
    /// Arbitrary real polynomial with nonvanishing gradient at points of use.
    General,
    /// `rho = -Im w_d + phi` with `phi` of total degree >= 2.
    Graph,
    /// Graph form whose `phi` does not involve `w_d` or its conjugate.
    RigidGraph,
}

/// How rational points on the surface can be generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Solve `Im w_d = phi` exactly (rigid graph form only).
    RigidGraph,
    /// Rational parametrization of the light-cone tube.
    Tube,
    /// No built-in sampler; points must be supplied.
    None,
}

/// A real hypersurface `{ rho = 0 }` in complex n-space.
#[derive(Debug, Clone)]
pub struct Hypersurface {
    pub name: String,
    /// Variable names, length N.
    pub vars: Vec<String>,
    /// Real defining polynomial.
    pub rho: PolarizedPoly,
    /// 0-based index of the distinguished variable (the graph direction),
    /// when one is declared.
    pub distinguished: Option<usize>,
    pub form: SurfaceForm,
    pub sampler: SamplerKind,
}

/// A point with exact coordinates, tagged by whether it passed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub coords: Vec<GaussianRational>,
    pub validated: bool,
}

impl SurfacePoint {
    pub fn raw(coords: Vec<GaussianRational>) -> Self {
        SurfacePoint {
            coords,
            validated: false,
        }
    }
}

/// A CR vector field: a combination of conjugate Wirtinger derivatives with
/// polynomial coefficients, tangent to its hypersurface.
#[derive(Debug, Clone)]
pub struct CRField {
    /// (conjugate variable index, coefficient) pairs.
    pub coeffs: Vec<(usize, PolarizedPoly)>,
    /// Tangential variable this field pairs with the distinguished one.
    pub label: usize,
}

impl CRField {
    /// Apply the field to a polynomial: sum of coeff * d p / d conj(w_slot).
    pub fn apply(&self, p: &PolarizedPoly) -> PolarizedPoly {
        let mut acc = PolarizedPoly::zero(p.nvars());
        for (slot, coeff) in &self.coeffs {
            let d = p.wirtinger(*slot, true).expect("slot in range");
            acc = acc.add(&coeff.mul(&d));
        }
        acc
    }

    /// Apply the field to each entry of a row of polynomials.
    pub fn apply_row(&self, row: &[PolarizedPoly]) -> Vec<PolarizedPoly> {
        row.iter().map(|p| self.apply(p)).collect()
    }
}

impl Hypersurface {
    /// Build and classify a hypersurface. Rejects non-real or zero `rho` and
    /// inconsistent rosters.
    pub fn new(
        name: impl Into<String>,
        vars: Vec<String>,
        rho: PolarizedPoly,
        distinguished: Option<usize>,
    ) -> Result<Self> {
        let name = name.into();
        if vars.len() != rho.nvars() {
            return Err(Error::Usage(format!(
                "surface '{name}': {} variable names for a polynomial in {} variables",
                vars.len(),
                rho.nvars()
            )));
        }
        if rho.is_zero() {
            return Err(Error::Validation(format!(
                "surface '{name}': defining function is identically zero"
            )));
        }
        let diff = rho.conjugate().sub(&rho);
        if !diff.is_zero() {
            let (exps, coeff) = diff.terms().next().map(|(e, c)| (e.clone(), c.clone())).unwrap();
            let mono = PolarizedPoly::from_terms(rho.nvars(), [(exps, coeff)]);
            return Err(Error::Validation(format!(
                "surface '{name}': defining function not real; conj(rho) - rho contains {}",
                mono.render(&vars)
            )));
        }
        if let Some(d) = distinguished {
            if d >= vars.len() {
                return Err(Error::Usage(format!(
                    "surface '{name}': distinguished index out of range"
                )));
            }
        }
        let form = classify_form(&rho, distinguished);
        let sampler = if form == SurfaceForm::RigidGraph {
            SamplerKind::RigidGraph
        } else {
            SamplerKind::None
        };
        Ok(Hypersurface {
            name,
            vars,
            rho,
            distinguished,
            form,
            sampler,
        })
    }

    pub fn nvars(&self) -> usize {
        self.rho.nvars()
    }

    /// The part of `rho` beyond the graph term: `rho - (i/2)(w_d - conj w_d)`.
    /// Only meaningful in graph form.
    pub fn graph_residual(&self) -> Option<PolarizedPoly> {
        let d = self.distinguished?;
        let n = self.nvars();
        let half_i = GaussianRational::from_parts(0, 1, 2);
        let linear = PolarizedPoly::variable(d, n)
            .sub(&PolarizedPoly::conj_variable(d, n))
            .scale(&half_i);
        Some(self.rho.sub(&linear))
    }

    /// Row of holomorphic Wirtinger partials of `rho`, symbolic.
    pub fn gradient_row(&self) -> Vec<PolarizedPoly> {
        (0..self.nvars())
            .map(|j| self.rho.wirtinger(j, false).expect("index in range"))
            .collect()
    }

    /// Gradient row evaluated at a point.
    pub fn gradient_at(&self, coords: &[GaussianRational]) -> Vec<GaussianRational> {
        self.gradient_row().iter().map(|p| p.eval(coords)).collect()
    }

    /// The antisymmetric CR basis: for each tangential variable k (ascending,
    /// skipping the distinguished one),
    /// `2i * rho_{conj d} d/d conj(w_k) - 2i * rho_{conj k} d/d conj(w_d)`.
    /// Each field annihilates `rho` identically.
    pub fn cr_basis(&self) -> Result<Vec<CRField>> {
        let d = self.distinguished.ok_or_else(|| {
            Error::Usage(format!(
                "surface '{}': no distinguished variable declared",
                self.name
            ))
        })?;
        let n = self.nvars();
        let rho_d = self.rho.wirtinger(d, true)?;
        if rho_d.is_zero() {
            return Err(Error::Validation(format!(
                "surface '{}': distinguished variable does not control the surface \
                 (d rho / d conj({}) is identically zero)",
                self.name, self.vars[d]
            )));
        }
        let two_i = GaussianRational::from_parts(0, 2, 1);
        let mut fields = Vec::with_capacity(n - 1);
        for k in 0..n {
            if k == d {
                continue;
            }
            let rho_k = self.rho.wirtinger(k, true)?;
            fields.push(CRField {
                coeffs: vec![
                    (k, rho_d.scale(&two_i)),
                    (d, rho_k.scale(&two_i).neg()),
                ],
                label: k,
            });
        }
        Ok(fields)
    }

    /// Check that exact coordinates lie on the surface and that the gradient
    /// row does not vanish there.
    pub fn validate_point(&self, coords: &[GaussianRational]) -> Result<SurfacePoint> {
        if coords.len() != self.nvars() {
            return Err(Error::Usage(format!(
                "point has {} coordinates, surface '{}' has {} variables",
                coords.len(),
                self.name,
                self.nvars()
            )));
        }
        let v = self.rho.eval(coords);
        if !v.is_zero() {
            return Err(Error::Validation(format!(
                "point not on hypersurface '{}': rho evaluates to {}",
                self.name, v
            )));
        }
        if self.gradient_at(coords).iter().all(|g| g.is_zero()) {
            return Err(Error::Validation(format!(
                "singular point of '{}': gradient row vanishes",
                self.name
            )));
        }
        Ok(SurfacePoint {
            coords: coords.to_vec(),
            validated: true,
        })
    }

    /// Float-backend validation: accepts `|rho(q)| < tol` for user-supplied
    /// approximate points; the gradient test also runs at tolerance.
    pub fn validate_point_float(&self, coords: &[GaussianRational], tol: f64) -> Result<SurfacePoint> {
        if coords.len() != self.nvars() {
            return Err(Error::Usage(format!(
                "point has {} coordinates, surface '{}' has {} variables",
                coords.len(),
                self.name,
                self.nvars()
            )));
        }
        let v = self.rho.eval(coords).modulus_f64();
        if v >= tol {
            return Err(Error::Validation(format!(
                "point not on hypersurface '{}': |rho| = {v:.3e} exceeds tolerance {tol:.1e}",
                self.name
            )));
        }
        let gmax = self
            .gradient_at(coords)
            .iter()
            .map(|g| g.modulus_f64())
            .fold(0.0, f64::max);
        if gmax < tol {
            return Err(Error::Validation(format!(
                "singular point of '{}': gradient row below tolerance",
                self.name
            )));
        }
        Ok(SurfacePoint {
            coords: coords.to_vec(),
            validated: true,
        })
    }

    /// Draw exact rational points on the surface. Rigid graph forms solve
    /// `Im w_d = phi` directly; the tube sampler uses the rational cone
    /// parametrization. Every returned point is validated.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<SurfacePoint>> {
        match self.sampler {
            SamplerKind::RigidGraph => self.sample_rigid(count, seed),
            SamplerKind::Tube => self.sample_tube(count, seed),
            SamplerKind::None => Err(Error::Usage(format!(
                "surface '{}': sampler requires rigid graph form (or a declared tube); \
                 supply points explicitly",
                self.name
            ))),
        }
    }

    fn sample_rigid(&self, count: usize, seed: u64) -> Result<Vec<SurfacePoint>> {
        let d = self.distinguished.expect("rigid graph has a distinguished variable");
        let n = self.nvars();
        let phi = self.graph_residual().expect("graph residual exists");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        while points.len() < count {
            let mut coords: Vec<GaussianRational> = Vec::with_capacity(n);
            for j in 0..n {
                if j == d {
                    coords.push(GaussianRational::zero()); // placeholder
                } else {
                    coords.push(rand_gaussian(&mut rng, 4));
                }
            }
            // phi is independent of w_d, so the placeholder is immaterial.
            let phi_val = phi.eval(&coords);
            debug_assert!(phi_val.is_real());
            let s = rand_rational(&mut rng, 4);
            coords[d] = GaussianRational::new(s, phi_val.re.clone());
            match self.validate_point(&coords) {
                Ok(p) => points.push(p),
                Err(e) => {
                    return Err(Error::Validation(format!(
                        "rigid sampler produced an invalid point: {e}"
                    )))
                }
            }
        }
        Ok(points)
    }

    /// Rational points on `(Im z_1)^2 + ... + (Im z_n)^2 = (Im z_{n+1})^2`:
    /// for a rational vector v, the imaginary parts
    /// `(2v, |v|^2 - 1, |v|^2 + 1) * t` lie on the cone and the last one is
    /// nonzero, so the point is smooth. Real parts are free.
    fn sample_tube(&self, count: usize, seed: u64) -> Result<Vec<SurfacePoint>> {
        let nv = self.nvars();
        if nv < 2 {
            return Err(Error::Usage("tube sampler needs at least 2 variables".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        while points.len() < count {
            let v: Vec<BigRational> = (0..nv - 2).map(|_| rand_rational(&mut rng, 3)).collect();
            let norm2: BigRational = v.iter().map(|x| x * x).sum();
            let mut t = rand_rational(&mut rng, 3);
            if num_traits::Zero::is_zero(&t) {
                t = BigRational::from_integer(1.into());
            }
            let one = BigRational::from_integer(1.into());
            let two = BigRational::from_integer(2.into());
            let mut ims: Vec<BigRational> = v.iter().map(|x| x * &two * &t).collect();
            ims.push((&norm2 - &one) * &t);
            ims.push((&norm2 + &one) * &t);
            let coords: Vec<GaussianRational> = ims
                .into_iter()
                .map(|im| GaussianRational::new(rand_rational(&mut rng, 3), im))
                .collect();
            match self.validate_point(&coords) {
                Ok(p) => points.push(p),
                Err(e) => {
                    return Err(Error::Validation(format!(
                        "tube sampler produced an invalid point; surface is not the \
                         standard tube: {e}"
                    )))
                }
            }
        }
        Ok(points)
    }
}

fn classify_form(rho: &PolarizedPoly, distinguished: Option<usize>) -> SurfaceForm {
    let Some(d) = distinguished else {
        return SurfaceForm::General;
    };
    let n = rho.nvars();
    let half_i = GaussianRational::from_parts(0, 1, 2);
    let linear = PolarizedPoly::variable(d, n)
        .sub(&PolarizedPoly::conj_variable(d, n))
        .scale(&half_i);
    let phi = rho.sub(&linear);
    if phi.is_zero() {
        // A bare graph over nothing is still (trivially rigid) graph form.
        return SurfaceForm::RigidGraph;
    }
    match phi.min_total_degree() {
        Some(m) if m >= 2 => {
            let rigid = phi
                .terms()
                .all(|(e, _)| e[d] == 0 && e[n + d] == 0);
            if rigid {
                SurfaceForm::RigidGraph
            } else {
                SurfaceForm::Graph
            }
        }
        _ => SurfaceForm::General,
    }
}

pub(crate) fn rand_rational(rng: &mut ChaCha8Rng, height: i64) -> BigRational {
    let n = rng.gen_range(-height..=height);
    let d = rng.gen_range(1..=height);
    BigRational::new(n.into(), d.into())
}

pub(crate) fn rand_gaussian(rng: &mut ChaCha8Rng, height: i64) -> GaussianRational {
    GaussianRational::new(rand_rational(rng, height), rand_rational(rng, height))
}

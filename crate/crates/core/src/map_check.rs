//! Candidate holomorphic maps between hypersurfaces: composition with the
//! target defining function, on-surface residual checks, map nondegeneracy
//! orders, and the second-order jet certificate.

use crate::hypersurface::{Hypersurface, SurfaceForm, SurfacePoint};
use crate::nondegen::{order_with, OrderResult, SpanEngine};
use crate::poly::PolarizedPoly;
use crate::scalar::GaussianRational;
use crate::{Error, Result, Settings};

/// One component of a map: a holomorphic polynomial, or a rational power of
/// one (admissible only where composition clears the exponent).
#[derive(Debug, Clone)]
pub enum MapComponent {
    Poly(PolarizedPoly),
    Radical {
        base: PolarizedPoly,
        /// Exponent numerator; positive.
        num: i64,
        /// Exponent denominator; at least 2.
        den: i64,
    },
}

/// A candidate map given by its components over the source variables.
#[derive(Debug, Clone)]
pub struct MapJet {
    pub components: Vec<MapComponent>,
    pub source_nvars: usize,
    pub basepoint: Option<SurfacePoint>,
}

impl MapJet {
    pub fn polynomial(components: Vec<PolarizedPoly>, basepoint: Option<SurfacePoint>) -> Result<Self> {
        let source_nvars = components
            .first()
            .map(|p| p.nvars())
            .ok_or_else(|| Error::Usage("map needs at least one component".into()))?;
        let components = components.into_iter().map(MapComponent::Poly).collect();
        let jet = MapJet {
            components,
            source_nvars,
            basepoint,
        };
        jet.validate()?;
        Ok(jet)
    }

    pub fn validate(&self) -> Result<()> {
        for (idx, comp) in self.components.iter().enumerate() {
            match comp {
                MapComponent::Poly(p) => {
                    if p.nvars() != self.source_nvars {
                        return Err(Error::Usage(format!(
                            "map component {} has a different variable roster",
                            idx + 1
                        )));
                    }
                    if !p.is_holomorphic() {
                        return Err(Error::Usage(format!(
                            "map component {} is not holomorphic",
                            idx + 1
                        )));
                    }
                }
                MapComponent::Radical { base, num, den } => {
                    if base.nvars() != self.source_nvars {
                        return Err(Error::Usage(format!(
                            "map component {} has a different variable roster",
                            idx + 1
                        )));
                    }
                    if !base.is_holomorphic() {
                        return Err(Error::Usage(format!(
                            "radical base of component {} is not holomorphic",
                            idx + 1
                        )));
                    }
                    if *num <= 0 || *den < 2 {
                        return Err(Error::Usage(format!(
                            "radical exponent {num}/{den} of component {} must be a \
                             positive non-integer ratio",
                            idx + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// All components as polynomials; errors when a radical is present.
    pub fn as_polynomials(&self) -> Result<Vec<PolarizedPoly>> {
        self.components
            .iter()
            .map(|c| match c {
                MapComponent::Poly(p) => Ok(p.clone()),
                MapComponent::Radical { .. } => Err(Error::Usage(
                    "operation needs polynomial map components; a radical power is present"
                        .into(),
                )),
            })
            .collect()
    }

    pub fn eval(&self, point: &[GaussianRational]) -> Result<Vec<GaussianRational>> {
        self.as_polynomials()
            .map(|comps| comps.iter().map(|p| p.eval(point)).collect())
    }
}

/// Pull the target defining function back along the map, eliminating radical
/// powers by integer-exponent recombination. The result is an exact
/// polynomial over the source variables and their conjugates.
pub fn compose_defining(map: &MapJet, target: &Hypersurface) -> Result<PolarizedPoly> {
    let nt = target.nvars();
    if map.components.len() != nt {
        return Err(Error::Usage(format!(
            "map has {} components; target '{}' has {} variables",
            map.components.len(),
            target.name,
            nt
        )));
    }
    map.validate()?;
    let ns = map.source_nvars;
    // Precompute conjugated bases.
    let conj_comp: Vec<MapComponent> = map
        .components
        .iter()
        .map(|c| match c {
            MapComponent::Poly(p) => MapComponent::Poly(p.conjugate()),
            MapComponent::Radical { base, num, den } => MapComponent::Radical {
                base: base.conjugate(),
                num: *num,
                den: *den,
            },
        })
        .collect();
    let raise = |comp: &MapComponent, e: u16, slot: usize| -> Result<PolarizedPoly> {
        match comp {
            MapComponent::Poly(p) => Ok(p.pow(e as u32)),
            MapComponent::Radical { base, num, den } => {
                let total = e as i64 * num;
                if total % den != 0 {
                    return Err(Error::Validation(format!(
                        "map not expressible: fractional exponent survives composition \
                         (component {} raised to {e} gives exponent {total}/{den})",
                        slot + 1
                    )));
                }
                Ok(base.pow((total / den) as u32))
            }
        }
    };
    let mut out = PolarizedPoly::zero(ns);
    for (exps, coeff) in target.rho.terms() {
        let mut term = PolarizedPoly::constant(coeff.clone(), ns);
        for j in 0..nt {
            if exps[j] > 0 {
                term = term.mul(&raise(&map.components[j], exps[j], j)?);
            }
            if exps[nt + j] > 0 {
                term = term.mul(&raise(&conj_comp[j], exps[nt + j], j)?);
            }
        }
        out = out.add(&term);
    }
    Ok(out)
}

/// How an on-surface residual was reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionRoute {
    /// Rigid graph: substitute the conjugate graph variable.
    Substitution,
    /// General: remainder modulo the defining polynomial.
    Division,
}

#[derive(Debug, Clone)]
pub struct MapCheckReport {
    pub residual_zero: bool,
    /// Lowest total degree among surviving residual terms.
    pub lowest_residual_degree: Option<u32>,
    /// Whether the residual vanishes through the requested jet order.
    pub passes_to_order: bool,
    pub jet_order: u32,
    pub route: ReductionRoute,
}

/// Verify that the map sends the source into the target: pull the target
/// defining function back and reduce it on the source surface, exactly.
pub fn check_map(
    source: &Hypersurface,
    target: &Hypersurface,
    map: &MapJet,
    jet_order: u32,
) -> Result<MapCheckReport> {
    if map.source_nvars != source.nvars() {
        return Err(Error::Usage(format!(
            "map is over {} variables; source '{}' has {}",
            map.source_nvars,
            source.name,
            source.nvars()
        )));
    }
    let composed = compose_defining(map, target)?;
    let (reduced, route) = if source.form == SurfaceForm::RigidGraph {
        let d = source.distinguished.expect("rigid graph");
        let phi = source.graph_residual().expect("graph residual");
        let two_i = GaussianRational::from_parts(0, 2, 1);
        let repl = PolarizedPoly::variable(d, source.nvars()).sub(&phi.scale(&two_i));
        (
            composed.substitute(d, true, &repl),
            ReductionRoute::Substitution,
        )
    } else {
        (composed.remainder_by(&source.rho), ReductionRoute::Division)
    };
    let lowest = reduced.min_total_degree();
    Ok(MapCheckReport {
        residual_zero: reduced.is_zero(),
        lowest_residual_degree: lowest,
        passes_to_order: lowest.map_or(true, |d| d > jet_order),
        jet_order,
        route,
    })
}

/// Nondegeneracy order of the map itself: spans of source CR derivatives of
/// the pulled-back target gradient row.
pub fn map_nondegeneracy_order(
    source: &Hypersurface,
    target: &Hypersurface,
    map: &MapJet,
    kmax: usize,
    settings: &Settings,
) -> Result<OrderResult> {
    let comps = map.as_polynomials()?;
    let base_coords = map
        .basepoint
        .as_ref()
        .map(|p| p.coords.clone())
        .unwrap_or_else(|| vec![GaussianRational::zero(); source.nvars()]);
    let p0 = source.validate_point(&base_coords)?;
    let image: Vec<GaussianRational> = comps.iter().map(|p| p.eval(&p0.coords)).collect();
    target.validate_point(&image)?;

    let fields = source.cr_basis()?;
    // The basis must actually frame the CR directions at the base point.
    let d = source.distinguished.expect("cr_basis checked this");
    let rho_d_at = source
        .rho
        .wirtinger(d, true)
        .expect("index ok")
        .eval(&p0.coords);
    if rho_d_at.is_zero() {
        return Err(Error::Validation(format!(
            "distinguished variable does not control '{}' at the base point",
            source.name
        )));
    }
    let pulled_row: Vec<PolarizedPoly> = (0..target.nvars())
        .map(|j| {
            target
                .rho
                .wirtinger(j, false)
                .expect("index ok")
                .compose_holomorphic(&comps, source.nvars())
        })
        .collect();
    let mut engine = SpanEngine::from_parts(fields, pulled_row);
    engine.ensure_level(kmax, settings)?;
    Ok(order_with(&engine, target.nvars(), &p0, kmax, settings))
}

/// One candidate second-derivative pair in the certificate.
#[derive(Debug, Clone)]
pub struct CertificatePair {
    /// 1-based tangential indices, j <= k.
    pub j: usize,
    pub k: usize,
    /// Slot-n entry of `L_j L_k rho_W(F, conj F)` at 0.
    pub nu_direct: GaussianRational,
    /// The displayed product: third derivative of the target residual times
    /// the conjugated diagonal jet entries.
    pub nu_product: GaussianRational,
    pub agree: bool,
}

/// The second-order nondegeneracy certificate at the origin.
#[derive(Debug, Clone)]
pub struct Certificate {
    /// Pulled-back gradient row at 0; expected `(0, ..., 0, i/2)`.
    pub rho_row: Vec<GaussianRational>,
    pub rho_row_deviation: f64,
    /// First-order rows at 0; expected `sqrt(lambda)` on the diagonal.
    pub li_rows: Vec<Vec<GaussianRational>>,
    pub li_rows_deviation: f64,
    pub lambda: GaussianRational,
    /// Exact square root of lambda when it exists.
    pub sqrt_lambda_exact: Option<GaussianRational>,
    pub pairs: Vec<CertificatePair>,
    /// First pair (lexicographic) whose direct slot-n value is nonzero.
    pub chosen_pair: Option<(usize, usize)>,
    /// Full second-order row for the chosen pair.
    pub nu_row: Option<Vec<GaussianRational>>,
    /// Rank of the gradient row, the first-order rows, and the chosen
    /// second-order row: full rank certifies 2-nondegeneracy of the map.
    pub stack_rank: Option<usize>,
    pub full_rank_with_nu: Option<bool>,
    pub verdict: bool,
    pub failures: Vec<String>,
}

/// Build the certificate for a normalized pair and map. The source and
/// target are expected in normalized graph form with the map fixing 0; the
/// verdict reports (rather than errors on) any failed condition.
pub fn theorem1_certificate(
    source: &Hypersurface,
    target: &Hypersurface,
    map: &MapJet,
    settings: &Settings,
) -> Result<Certificate> {
    let extraction = crate::normalize::extract_jet(source, target, map)?;
    let target = &extraction.target;
    let map = &extraction.map;
    let lambda = extraction.jet.transversal.clone();
    let comps = map.as_polynomials()?;
    let ns = source.nvars();
    let nt = target.nvars();
    let origin = vec![GaussianRational::zero(); ns];
    let fields = source.cr_basis()?;

    let pulled_row: Vec<PolarizedPoly> = (0..nt)
        .map(|j| {
            target
                .rho
                .wirtinger(j, false)
                .expect("index ok")
                .compose_holomorphic(&comps, ns)
        })
        .collect();
    let eval_row =
        |row: &[PolarizedPoly]| -> Vec<GaussianRational> { row.iter().map(|p| p.eval(&origin)).collect() };

    // Gradient row at 0 vs (0, ..., 0, i/2).
    let rho_row = eval_row(&pulled_row);
    let mut rho_dev = 0f64;
    for (j, v) in rho_row.iter().enumerate() {
        let expect = if j + 1 == nt {
            GaussianRational::from_parts(0, 1, 2)
        } else {
            GaussianRational::zero()
        };
        rho_dev = rho_dev.max((v - &expect).modulus_f64());
    }

    // First-order rows vs sqrt(lambda) times unit rows.
    let sqrt_exact = lambda.sqrt_exact();
    let sqrt_f = crate::scalar::rational_to_f64(&lambda.re).sqrt();
    let mut li_rows = Vec::with_capacity(ns - 1);
    let mut li_dev = 0f64;
    for (i, field) in fields.iter().enumerate() {
        let row = eval_row(&field.apply_row(&pulled_row));
        for (j, v) in row.iter().enumerate() {
            let dev = if j == i {
                match &sqrt_exact {
                    Some(s) => (v - s).modulus_f64(),
                    None => (v.to_complex64() - sqrt_f).norm(),
                }
            } else {
                v.modulus_f64()
            };
            li_dev = li_dev.max(dev);
        }
        li_rows.push(row);
    }

    // Second-order pairs, lexicographic.
    let mut pairs = Vec::new();
    let mut chosen = None;
    let mut nu_row_chosen = None;
    let slot_n = nt - 2; // the degenerate direction of the target
    for j in 0..ns - 1 {
        let row_j = fields[j].apply_row(&pulled_row);
        for k in j..ns - 1 {
            // leftmost operator outermost: L_j L_k acts as fields[j] after fields[k]
            let row_kj = fields[j].apply_row(&fields[k].apply_row(&pulled_row));
            let _ = &row_j;
            let nu_full = eval_row(&row_kj);
            let nu_direct = nu_full[slot_n].clone();
            // Displayed product: rho_{conj j, conj k, n}(0) * conj jet entries.
            let third = target
                .rho
                .wirtinger(j, true)
                .expect("index ok")
                .wirtinger(k, true)
                .expect("index ok")
                .wirtinger(slot_n, false)
                .expect("index ok")
                .eval(&vec![GaussianRational::zero(); nt]);
            let dj = comps[j].wirtinger(j, false).expect("index ok").eval(&origin);
            let dk = comps[k].wirtinger(k, false).expect("index ok").eval(&origin);
            let nu_product = &(&third * &dj.conj()) * &dk.conj();
            let agree = nu_direct == nu_product;
            if chosen.is_none() && !nu_direct.is_zero() {
                chosen = Some((j + 1, k + 1));
                nu_row_chosen = Some(nu_full.clone());
            }
            pairs.push(CertificatePair {
                j: j + 1,
                k: k + 1,
                nu_direct,
                nu_product,
                agree,
            });
        }
    }

    let (stack_rank, full_rank) = match &nu_row_chosen {
        Some(nu_row) => {
            let mut stack = vec![rho_row.clone()];
            stack.extend(li_rows.iter().cloned());
            stack.push(nu_row.clone());
            let r = crate::matrix::exact_rank(&stack);
            (Some(r), Some(r == nt))
        }
        None => (None, None),
    };

    let mut failures = Vec::new();
    if rho_dev > settings.tol {
        failures.push("gradient-row".to_string());
    }
    if li_dev > settings.tol {
        failures.push("first-order-rows".to_string());
    }
    if chosen.is_none() {
        failures.push(
            "no-pair-with-nonzero-nu (2-nondegeneracy hypothesis fails at 0)".to_string(),
        );
    }
    let verdict = failures.is_empty();
    Ok(Certificate {
        rho_row,
        rho_row_deviation: rho_dev,
        li_rows,
        li_rows_deviation: li_dev,
        lambda,
        sqrt_lambda_exact: sqrt_exact,
        pairs,
        chosen_pair: chosen,
        nu_row: nu_row_chosen,
        stack_rank,
        full_rank_with_nu: full_rank,
        verdict,
        failures,
    })
}

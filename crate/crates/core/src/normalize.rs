//! Jet normalization for CR-transversal maps into a Levi-degenerate target.
//!
//! The pipeline extracts the 1-jet data (transversal coefficient, tangential
//! Jacobian blocks, target quadric matrix), verifies the order-2 transfer
//! identity, congruence-diagonalizes the target quadric when needed, builds
//! the upper-triangular coordinate change that makes the jet diagonal, and
//! certifies the resulting normal form. Everything that does not need a
//! square root stays exact; the rest runs in binary64.

use crate::hypersurface::{Hypersurface, SurfaceForm};
use crate::map_check::{MapComponent, MapJet};
use crate::matrix::{exact_rank, max_abs_diff};
use crate::poly::{Coeff, FloatPoly, PolarizedPoly, Poly};
use crate::scalar::{ComplexDouble, GaussianRational};
use crate::{Error, Result, Settings};
use nalgebra::{DMatrix, DVector};

/// Exact 1-jet data of a transversal map, after orientation fixing.
#[derive(Debug, Clone)]
pub struct JetData {
    /// Transversal coefficient: derivative of the last component along the
    /// distinguished source direction at 0. Real and positive after the
    /// orientation fix.
    pub transversal: GaussianRational,
    /// (n-1) x n matrix of tangential first derivatives of the first n
    /// components.
    pub tangential_jacobian: Vec<Vec<GaussianRational>>,
    /// Leading (n-1) x (n-1) block of the tangential Jacobian.
    pub leading_block: Vec<Vec<GaussianRational>>,
    /// Its last column.
    pub last_column: Vec<GaussianRational>,
    /// Hermitian quadric matrix of the target.
    pub target_quadric: Vec<Vec<GaussianRational>>,
    /// Whether the orientation flip (negating the last target coordinate)
    /// was applied to make the transversal coefficient positive.
    pub orientation_flipped: bool,
    /// Max modulus of the tangential first derivatives of the last
    /// component at 0 (zero for maps satisfying the mapping identity).
    pub first_order_defect: f64,
    /// Max modulus of the tangential-tangential second derivatives of the
    /// last component at 0.
    pub second_order_defect: f64,
}

/// Jet extraction result: the jet plus the (possibly orientation-flipped)
/// target and map actually described by it.
#[derive(Debug, Clone)]
pub struct JetExtraction {
    pub jet: JetData,
    pub target: Hypersurface,
    pub map: MapJet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetBranch {
    /// Quadric rank n-1: the degenerate normalization applies.
    LeviDegenerate,
    /// Quadric rank n: the target is Levi-nondegenerate at the base point.
    LeviNondegenerate,
}

/// Outcome of checking the order-2 transfer identity `A U A* = lambda I`.
#[derive(Debug, Clone)]
pub struct HermitianReport {
    pub deviation: f64,
    pub u_rank: usize,
    pub u_positive_eigenvalues: usize,
    pub a_rank: usize,
    pub branch: TargetBranch,
}

/// The assembled coordinate change and its analytic inverse.
#[derive(Debug, Clone)]
pub struct CoordChange {
    pub matrix: DMatrix<ComplexDouble>,
    pub inverse: DMatrix<ComplexDouble>,
    /// Shear column: solves `B c = -b`.
    pub c: DVector<ComplexDouble>,
    /// Inverse shear column: `-B c / sqrt(lambda)`.
    pub d: DVector<ComplexDouble>,
    /// Max entry modulus of `D * D^{-1} - I`.
    pub product_defect: f64,
}

/// Deviations certified after applying the coordinate change.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NormalizationCertificate {
    /// `A U A* - lambda I`, carried over from the verification stage.
    pub transfer_identity: f64,
    /// Quadric part of the transformed target vs the normal form.
    pub quadric_form: f64,
    /// Conjugating diag(I, 0) by the tangential block of the inverse change
    /// must reproduce diag(I, 0).
    pub quadric_transfer: f64,
    /// Tangential derivatives of the first n-1 components vs sqrt(lambda)
    /// times the identity.
    pub jet_diagonal: f64,
    /// Tangential derivatives of the degenerate-direction component.
    pub jet_degenerate_direction: f64,
    /// Tangential derivatives of the transversal component.
    pub jet_transversal_component: f64,
    /// `D * D^{-1} - I`.
    pub product: f64,
    pub tol: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Normalized data: the transformed defining function and map components.
#[derive(Debug, Clone)]
pub struct NormalizedMap {
    pub rho: FloatPoly,
    pub components: Vec<FloatPoly>,
    pub certificate: NormalizationCertificate,
}

/// Full pipeline outcome.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub jet: JetData,
    pub hermitian: HermitianReport,
    /// Congruence applied to the target quadric, when it was not already in
    /// diagonal normal form.
    pub diagonalizer: Option<DMatrix<ComplexDouble>>,
    pub change: Option<CoordChange>,
    pub normalized: Option<NormalizedMap>,
    /// Set when the pipeline stops early (Levi-nondegenerate target point).
    pub stopped: Option<String>,
}

// ---- orientation flip -------------------------------------------------------

/// Negate the last coordinate of the target: `rho` becomes
/// `-rho(w, -w_last)`, which restores the graph normal form.
pub fn orientation_flip_target(target: &Hypersurface) -> Hypersurface {
    let d = target
        .distinguished
        .expect("graph-form target has a distinguished variable");
    let n = target.nvars();
    let neg_var = PolarizedPoly::variable(d, n).neg();
    let neg_cvar = PolarizedPoly::conj_variable(d, n).neg();
    let rho = target
        .rho
        .substitute(d, false, &neg_var)
        .substitute(d, true, &neg_cvar)
        .neg();
    Hypersurface::new(
        target.name.clone(),
        target.vars.clone(),
        rho,
        target.distinguished,
    )
    .expect("flip preserves validity")
}

/// Negate the last component of the map.
pub fn orientation_flip_map(map: &MapJet) -> MapJet {
    let mut components = map.components.clone();
    let last = components.len() - 1;
    components[last] = match &components[last] {
        MapComponent::Poly(p) => MapComponent::Poly(p.neg()),
        MapComponent::Radical { .. } => {
            unreachable!("jet extraction rejects radical components first")
        }
    };
    MapJet {
        components,
        source_nvars: map.source_nvars,
        basepoint: map.basepoint.clone(),
    }
}

// ---- jet extraction ---------------------------------------------------------

fn polynomial_components(map: &MapJet) -> Result<Vec<&PolarizedPoly>> {
    map.components
        .iter()
        .map(|c| match c {
            MapComponent::Poly(p) => Ok(p),
            MapComponent::Radical { .. } => Err(Error::Usage(
                "jet operations need polynomial map components; radical powers are \
                 only admissible in defining-function composition"
                    .into(),
            )),
        })
        .collect()
}

fn require_graph_at_origin(surface: &Hypersurface, role: &str) -> Result<usize> {
    if surface.form == SurfaceForm::General {
        return Err(Error::Validation(format!(
            "{role} '{}' is not in graph form at 0",
            surface.name
        )));
    }
    let d = surface.distinguished.expect("graph form has distinguished");
    if d != surface.nvars() - 1 {
        return Err(Error::Usage(format!(
            "{role} '{}': normalization expects the distinguished variable last",
            surface.name
        )));
    }
    Ok(d)
}

/// Read the Hermitian quadric matrix out of a graph-form target, rejecting
/// quadratic parts that are not tangential Hermitian forms.
pub fn target_quadric_matrix(target: &Hypersurface) -> Result<Vec<Vec<GaussianRational>>> {
    let d = require_graph_at_origin(target, "target")?;
    let nv = target.nvars();
    let n = nv - 1;
    let phi = target.graph_residual().expect("graph residual");
    let mut u = vec![vec![GaussianRational::zero(); n]; n];
    for (j, row) in u.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            *entry = phi.coeff_of(&[(j, 1)], &[(k, 1)]);
        }
    }
    // The degree-2 part must be exactly the tangential Hermitian form.
    let mut herm = PolarizedPoly::zero(nv);
    for (j, row) in u.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            let m = PolarizedPoly::variable(j, nv).mul(&PolarizedPoly::conj_variable(k, nv));
            herm = herm.add(&m.scale(c));
        }
    }
    let defect = phi.low_degree_part(3).sub(&herm.low_degree_part(3));
    if !defect.is_zero() {
        return Err(Error::Validation(format!(
            "target '{}': quadratic part is not a tangential Hermitian form; \
             offending terms: {}",
            target.name,
            defect.render(&target.vars)
        )));
    }
    let _ = d;
    Ok(u)
}

/// Extract the 1-jet data of a candidate transversal map, applying the
/// orientation flip when the transversal coefficient is negative.
pub fn extract_jet(source: &Hypersurface, target: &Hypersurface, map: &MapJet) -> Result<JetExtraction> {
    let sd = require_graph_at_origin(source, "source")?;
    let _td = require_graph_at_origin(target, "target")?;
    let n = source.nvars();
    if target.nvars() != n + 1 {
        return Err(Error::Usage(format!(
            "target dimension {} is not source dimension {} plus one",
            target.nvars(),
            n
        )));
    }
    if map.components.len() != n + 1 {
        return Err(Error::Usage(format!(
            "map has {} components; target needs {}",
            map.components.len(),
            n + 1
        )));
    }
    let comps = polynomial_components(map)?;
    let origin = vec![GaussianRational::zero(); n];
    for (idx, comp) in comps.iter().enumerate() {
        if !comp.is_holomorphic() {
            return Err(Error::Usage(format!(
                "map component {} is not holomorphic",
                idx + 1
            )));
        }
        if !comp.eval(&origin).is_zero() {
            return Err(Error::Validation(format!(
                "map does not fix the base point: component {} is nonzero at 0",
                idx + 1
            )));
        }
    }
    let last = comps[n];
    let lambda = last.wirtinger(sd, false)?.eval(&origin);
    if lambda.is_zero() {
        return Err(Error::Validation(
            "map not CR-transversal at 0: the transversal derivative vanishes".into(),
        ));
    }
    if !lambda.is_real() {
        return Err(Error::Validation(format!(
            "mapping identity violated at order 1: transversal coefficient {lambda} is not real"
        )));
    }
    if num_traits::Signed::is_negative(&lambda.re) {
        let flipped_target = orientation_flip_target(target);
        let flipped_map = orientation_flip_map(map);
        let mut ex = extract_jet(source, &flipped_target, &flipped_map)?;
        ex.jet.orientation_flipped = true;
        return Ok(ex);
    }

    let mut first_defect = 0f64;
    let mut second_defect = 0f64;
    for j in 0..n - 1 {
        first_defect = first_defect.max(last.wirtinger(j, false)?.eval(&origin).modulus_f64());
        for k in 0..n - 1 {
            let v = last
                .wirtinger(j, false)?
                .wirtinger(k, false)?
                .eval(&origin)
                .modulus_f64();
            second_defect = second_defect.max(v);
        }
    }

    let mut a = vec![vec![GaussianRational::zero(); n]; n - 1];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = comps[j].wirtinger(i, false)?.eval(&origin);
        }
    }
    let leading: Vec<Vec<GaussianRational>> = a.iter().map(|r| r[..n - 1].to_vec()).collect();
    let tail: Vec<GaussianRational> = a.iter().map(|r| r[n - 1].clone()).collect();
    let u = target_quadric_matrix(target)?;

    Ok(JetExtraction {
        jet: JetData {
            transversal: lambda,
            tangential_jacobian: a,
            leading_block: leading,
            last_column: tail,
            target_quadric: u,
            orientation_flipped: false,
            first_order_defect: first_defect,
            second_order_defect: second_defect,
        },
        target: target.clone(),
        map: map.clone(),
    })
}

// ---- transfer identity ------------------------------------------------------

fn mat_mul(
    a: &[Vec<GaussianRational>],
    b: &[Vec<GaussianRational>],
) -> Vec<Vec<GaussianRational>> {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![GaussianRational::zero(); cols]; rows];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let mut acc = GaussianRational::zero();
            for k in 0..inner {
                acc = &acc + &(&a[i][k] * &b[k][j]);
            }
            *entry = acc;
        }
    }
    out
}

fn conj_transpose(a: &[Vec<GaussianRational>]) -> Vec<Vec<GaussianRational>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    (0..cols)
        .map(|j| (0..rows).map(|i| a[i][j].conj()).collect())
        .collect()
}

/// Check `A U A* = lambda I` exactly and classify the target branch.
pub fn verify_hermitian_identity(jet: &JetData, tol: f64) -> Result<HermitianReport> {
    let n = jet.target_quadric.len();
    let aua = mat_mul(
        &mat_mul(&jet.tangential_jacobian, &jet.target_quadric),
        &conj_transpose(&jet.tangential_jacobian),
    );
    let mut deviation = 0f64;
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let expect = if i == j {
                jet.transversal.clone()
            } else {
                GaussianRational::zero()
            };
            deviation = deviation.max((&aua[i][j] - &expect).modulus_f64());
        }
    }
    if deviation > tol {
        return Err(Error::Validation(format!(
            "map does not satisfy the order-2 mapping identity: \
             max |A U A* - lambda I| = {deviation:.3e} exceeds tolerance {tol:.1e}"
        )));
    }
    let u_rank = exact_rank(&jet.target_quadric);
    let a_rank = exact_rank(&jet.tangential_jacobian);
    let uf = exact_to_dmatrix(&jet.target_quadric);
    let eig = nalgebra::SymmetricEigen::new(uf);
    let u_positive = eig.eigenvalues.iter().filter(|&&v| v > tol).count();
    let branch = if u_rank == n {
        TargetBranch::LeviNondegenerate
    } else if u_rank == n - 1 {
        if u_positive != n - 1 {
            return Err(Error::Validation(format!(
                "target quadric part does not have {} positive directions \
                 (found {u_positive})",
                n - 1
            )));
        }
        TargetBranch::LeviDegenerate
    } else {
        return Err(Error::Validation(format!(
            "target quadric rank {u_rank} is below {}, contradicting the \
             transfer identity",
            n - 1
        )));
    };
    Ok(HermitianReport {
        deviation,
        u_rank,
        u_positive_eigenvalues: u_positive,
        a_rank,
        branch,
    })
}

pub fn exact_to_dmatrix(m: &[Vec<GaussianRational>]) -> DMatrix<ComplexDouble> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    DMatrix::from_fn(rows, cols, |i, j| m[i][j].to_complex64())
}

// ---- congruence diagonalization ---------------------------------------------

/// Congruence `P U P* = diag(1, ..., 1, 0)` for a Hermitian PSD matrix of
/// corank one. Eigenvalues are sorted descending; the kernel direction lands
/// in the last row.
pub fn diagonalize_u(
    u: &DMatrix<ComplexDouble>,
    tol: f64,
) -> Result<(DMatrix<ComplexDouble>, Vec<f64>)> {
    let dim = u.nrows();
    let target = normal_form_quadric(dim);
    if max_abs_diff(u, &target) <= tol {
        return Ok((
            DMatrix::identity(dim, dim),
            (0..dim).map(|i| if i + 1 < dim { 1.0 } else { 0.0 }).collect(),
        ));
    }
    let eig = nalgebra::SymmetricEigen::new(u.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("real eigenvalues")
    });
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if sorted.iter().any(|&v| v < -tol) {
        return Err(Error::Validation(format!(
            "target quadric part has a negative eigenvalue ({:.3e}); the \
             degenerate normalization needs {} positive directions and one null",
            sorted.last().unwrap(),
            dim - 1
        )));
    }
    let positive = sorted.iter().filter(|&&v| v > tol).count();
    if positive == dim {
        return Err(Error::Validation(
            "target quadric part has full rank: Levi-nondegenerate target point".into(),
        ));
    }
    if positive < dim - 1 {
        return Err(Error::Validation(format!(
            "target quadric part has rank {positive}, below the required {}",
            dim - 1
        )));
    }
    let mut p = DMatrix::zeros(dim, dim);
    for (row, &col) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(col);
        let scale = if row + 1 < dim {
            1.0 / sorted[row].sqrt()
        } else {
            1.0
        };
        for k in 0..dim {
            p[(row, k)] = v[k].conj() * ComplexDouble::new(scale, 0.0);
        }
    }
    Ok((p, sorted))
}

/// diag(1, ..., 1, 0) of the given size.
pub fn normal_form_quadric(dim: usize) -> DMatrix<ComplexDouble> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j && i + 1 < dim {
            ComplexDouble::new(1.0, 0.0)
        } else {
            ComplexDouble::new(0.0, 0.0)
        }
    })
}

// ---- the coordinate change ----------------------------------------------------

/// Assemble the block change `D` and its displayed inverse from the leading
/// block, the shear column and the transversal coefficient.
pub fn build_d(
    lambda: f64,
    leading_block: &DMatrix<ComplexDouble>,
    last_column: &DVector<ComplexDouble>,
) -> Result<CoordChange> {
    let m = leading_block.nrows();
    let n = m + 1;
    let lu = leading_block.clone().lu();
    let c = lu
        .solve(&(-last_column))
        .ok_or_else(|| {
            Error::Validation(
                "leading block not invertible (contradicts the transfer identity; \
                 upstream data inconsistent)"
                    .into(),
            )
        })?;
    let sqrt_lambda = lambda.sqrt();
    let d_col = leading_block * &c * ComplexDouble::new(-1.0 / sqrt_lambda, 0.0);

    let mut mat = DMatrix::<ComplexDouble>::identity(n + 1, n + 1);
    let adj = leading_block.adjoint();
    for i in 0..m {
        for j in 0..m {
            mat[(i, j)] = adj[(i, j)] / ComplexDouble::new(sqrt_lambda, 0.0);
        }
        mat[(i, m)] = c[i];
    }
    let mut inv = DMatrix::<ComplexDouble>::identity(n + 1, n + 1);
    for i in 0..m {
        for j in 0..m {
            inv[(i, j)] = leading_block[(i, j)] / ComplexDouble::new(sqrt_lambda, 0.0);
        }
        inv[(i, m)] = d_col[i];
    }
    let product_defect = max_abs_diff(&(&mat * &inv), &DMatrix::identity(n + 1, n + 1));
    Ok(CoordChange {
        matrix: mat,
        inverse: inv,
        c,
        d: d_col,
        product_defect,
    })
}

// ---- applying the change ------------------------------------------------------

fn float_components(map: &MapJet) -> Result<Vec<FloatPoly>> {
    polynomial_components(map).map(|comps| comps.into_iter().map(|p| p.to_float()).collect())
}

/// Substitute a linear change `new = old * M` into a float polynomial:
/// each old variable `j` is replaced by `sum_k M[k][j] * new_k`.
fn linear_substitution(p: &FloatPoly, m: &DMatrix<ComplexDouble>) -> FloatPoly {
    let nv = p.nvars();
    assert_eq!(m.nrows(), nv);
    let replacements: Vec<FloatPoly> = (0..nv)
        .map(|j| {
            let mut acc = FloatPoly::zero(nv);
            for k in 0..nv {
                if m[(k, j)].norm() != 0.0 {
                    acc = acc.add(&FloatPoly::variable(k, nv).scale(&m[(k, j)]));
                }
            }
            acc
        })
        .collect();
    p.compose_holomorphic(&replacements, nv)
}

/// Apply the coordinate change to the target and map and certify the normal
/// form conditions.
pub fn apply_normalization(
    target_rho: &FloatPoly,
    map_components: &[FloatPoly],
    lambda: f64,
    transfer_deviation: f64,
    change: &CoordChange,
    tol: f64,
) -> NormalizedMap {
    let nv = target_rho.nvars();
    let n = nv - 1;
    // New map: row vector of components times D.
    let new_components: Vec<FloatPoly> = (0..nv)
        .map(|i| {
            let mut acc = FloatPoly::zero(map_components[0].nvars());
            for (k, comp) in map_components.iter().enumerate() {
                let f = change.matrix[(k, i)];
                if f.norm() != 0.0 {
                    acc = acc.add(&comp.scale(&f));
                }
            }
            acc
        })
        .collect();
    // New defining function: rho composed with the inverse change.
    let new_rho = linear_substitution(target_rho, &change.inverse);

    // Quadric-form certificate: degree <= 2 part must match the normal form.
    let mut expected = FloatPoly::zero(nv);
    let half_i = ComplexDouble::new(0.0, 0.5);
    expected = expected.add(
        &FloatPoly::variable(n, nv)
            .sub(&FloatPoly::conj_variable(n, nv))
            .scale(&half_i),
    );
    for j in 0..n - 1 {
        expected = expected.add(&FloatPoly::variable(j, nv).mul(&FloatPoly::conj_variable(j, nv)));
    }
    let quadric_form = new_rho
        .low_degree_part(3)
        .sub(&expected)
        .max_coeff_modulus();

    // Block identity: T J T* = J for the tangential block of the inverse.
    let t = change.inverse.view((0, 0), (n, n)).into_owned();
    let j_mat = normal_form_quadric(n);
    let quadric_transfer = max_abs_diff(&(&t * &j_mat * t.adjoint()), &j_mat);

    // Jet conditions at 0.
    let source_n = map_components[0].nvars();
    let origin = vec![ComplexDouble::new(0.0, 0.0); source_n];
    let sqrt_lambda = lambda.sqrt();
    let mut jet_diag = 0f64;
    let mut jet_mid = 0f64;
    let mut jet_last = 0f64;
    for j in 0..source_n - 1 {
        for (i, comp) in new_components.iter().enumerate().take(n - 1) {
            let v = comp.wirtinger(j, false).expect("index ok").eval(&origin);
            let expect = if i == j {
                ComplexDouble::new(sqrt_lambda, 0.0)
            } else {
                ComplexDouble::new(0.0, 0.0)
            };
            jet_diag = jet_diag.max((v - expect).norm());
        }
        let vm = new_components[n - 1]
            .wirtinger(j, false)
            .expect("index ok")
            .eval(&origin);
        jet_mid = jet_mid.max(vm.norm());
        let vl = new_components[n]
            .wirtinger(j, false)
            .expect("index ok")
            .eval(&origin);
        jet_last = jet_last.max(vl.norm());
    }

    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64| {
        if value > tol {
            failures.push(name.to_string());
        }
    };
    check("transfer-identity", transfer_deviation);
    check("quadric-form", quadric_form);
    check("quadric-transfer", quadric_transfer);
    check("jet-diagonal", jet_diag);
    check("jet-degenerate-direction", jet_mid);
    check("jet-transversal-component", jet_last);
    check("product", change.product_defect.max(0.0));
    let passed = failures.is_empty();
    NormalizedMap {
        rho: new_rho,
        components: new_components,
        certificate: NormalizationCertificate {
            transfer_identity: transfer_deviation,
            quadric_form,
            quadric_transfer,
            jet_diagonal: jet_diag,
            jet_degenerate_direction: jet_mid,
            jet_transversal_component: jet_last,
            product: change.product_defect,
            tol,
            failures,
            passed,
        },
    }
}

/// Check that a source is in the normalized graph form
/// `-Im z_n + sum |z_i|^2 + (weighted degree >= 3)`.
pub fn require_normalized_source(source: &Hypersurface) -> Result<()> {
    let d = require_graph_at_origin(source, "source")?;
    let n = source.nvars();
    let mut residual = source.graph_residual().expect("graph residual");
    for j in 0..n - 1 {
        let m = PolarizedPoly::variable(j, n).mul(&PolarizedPoly::conj_variable(j, n));
        residual = residual.sub(&m);
    }
    let low = residual.filter_terms(|e| PolarizedPoly::graded_term_degree(e, n, d) < 3);
    if !low.is_zero() {
        return Err(Error::Validation(format!(
            "source '{}' not in normalized form (-Im z_n + sum |z_i|^2 + higher \
             weight); offending terms: {}",
            source.name,
            low.render(&source.vars)
        )));
    }
    Ok(())
}

/// The whole normalization pipeline: extract, verify, diagonalize when
/// needed, build the change, apply and certify.
pub fn normalize_map(
    source: &Hypersurface,
    target: &Hypersurface,
    map: &MapJet,
    settings: &Settings,
) -> Result<PipelineOutcome> {
    require_normalized_source(source)?;
    let extraction = extract_jet(source, target, map)?;
    let jet = extraction.jet.clone();
    let hermitian = verify_hermitian_identity(&jet, settings.tol)?;
    if hermitian.branch == TargetBranch::LeviNondegenerate {
        return Ok(PipelineOutcome {
            jet,
            hermitian,
            diagonalizer: None,
            change: None,
            normalized: None,
            stopped: Some(
                "Levi-nondegenerate target point: quadric part has full rank; \
                 the degenerate normalization does not apply"
                    .into(),
            ),
        });
    }

    let n = source.nvars();
    let u_exact = exact_to_dmatrix(&jet.target_quadric);
    let u_is_normal = max_abs_diff(&u_exact, &normal_form_quadric(n)) == 0.0;

    let lambda = crate::scalar::rational_to_f64(&jet.transversal.re);
    let mut target_rho_f = extraction.target.rho.to_float();
    let mut comps_f = float_components(&extraction.map)?;
    let mut a_f = exact_to_dmatrix(&jet.tangential_jacobian);
    let mut diagonalizer = None;

    if !u_is_normal {
        let (p, _diag) = diagonalize_u(&u_exact, settings.tol)?;
        let p_inv = p.clone().lu().try_inverse().ok_or_else(|| {
            Error::Validation("congruence matrix not invertible".into())
        })?;
        // Old tangential coordinates are the new ones times P, so the target
        // pulls back along blockdiag(P, 1) and the map components transform
        // by blockdiag(P^{-1}, 1).
        let mut big_p = DMatrix::<ComplexDouble>::identity(n + 1, n + 1);
        big_p.view_mut((0, 0), (n, n)).copy_from(&p);
        target_rho_f = linear_substitution(&target_rho_f, &big_p);
        let mut big_pinv = DMatrix::<ComplexDouble>::identity(n + 1, n + 1);
        big_pinv.view_mut((0, 0), (n, n)).copy_from(&p_inv);
        comps_f = (0..n + 1)
            .map(|i| {
                let mut acc = FloatPoly::zero(comps_f[0].nvars());
                for (k, comp) in comps_f.iter().enumerate() {
                    let f = big_pinv[(k, i)];
                    if f.norm() != 0.0 {
                        acc = acc.add(&comp.scale(&f));
                    }
                }
                acc
            })
            .collect();
        a_f = &a_f * &p_inv;
        diagonalizer = Some(p);
    }

    let leading = a_f.view((0, 0), (n - 1, n - 1)).into_owned();
    let last_col = DVector::from_fn(n - 1, |i, _| a_f[(i, n - 1)]);
    let change = build_d(lambda, &leading, &last_col)?;
    let normalized = apply_normalization(
        &target_rho_f,
        &comps_f,
        lambda,
        hermitian.deviation,
        &change,
        settings.tol,
    );
    Ok(PipelineOutcome {
        jet,
        hermitian,
        diagonalizer,
        change: Some(change),
        normalized: Some(normalized),
        stopped: None,
    })
}

// ---- source normalization -----------------------------------------------------

/// The chain of changes carrying a strictly pseudoconvex source to the
/// normalized graph form, with the residual defect certified.
#[derive(Debug, Clone)]
pub struct SourceNormalization {
    /// The normalized surface when every step stayed exact (the tangential
    /// Levi block was already the identity).
    pub exact: Option<Hypersurface>,
    /// The normalized defining function in the float backend.
    pub rho: FloatPoly,
    pub translation: Vec<GaussianRational>,
    /// Exact linear change (old = new * matrix), before scaling.
    pub linear: Vec<Vec<GaussianRational>>,
    /// Whether the defining function was negated (with the graph direction
    /// reflected) to orient the Levi form positively.
    pub sign_flipped: bool,
    /// Tangential-holomorphic quadratic absorbed into the graph direction.
    pub shear: PolarizedPoly,
    /// Float congruence scaling applied to the tangential block.
    pub scaling: DMatrix<ComplexDouble>,
    /// Max modulus over residual coefficients of weighted degree < 3.
    pub residual_defect: f64,
}

/// Carry `surface` at the validated point `p0` to the normalized graph form
/// `-Im z_n + sum |z_i|^2 + psi`, `psi` of weighted degree >= 3.
pub fn normalize_source(
    surface: &Hypersurface,
    p0: &crate::hypersurface::SurfacePoint,
    settings: &Settings,
) -> Result<SourceNormalization> {
    let n = surface.nvars();
    if n < 2 {
        return Err(Error::Usage("source normalization needs at least 2 variables".into()));
    }
    if !p0.validated {
        return Err(Error::Usage("base point must be validated first".into()));
    }
    // 1. Translate p0 to the origin.
    let translated = {
        let replacements: Vec<PolarizedPoly> = (0..n)
            .map(|j| {
                PolarizedPoly::variable(j, n)
                    .add(&PolarizedPoly::constant(p0.coords[j].clone(), n))
            })
            .collect();
        surface.rho.compose_holomorphic(&replacements, n)
    };

    // 2. Exact linear change: send the complex normal direction to the last
    //    coordinate so the linear part becomes -Im z_n.
    let grad: Vec<GaussianRational> = (0..n)
        .map(|j| translated.wirtinger(j, false).expect("index ok").eval(&vec![
            GaussianRational::zero();
            n
        ]))
        .collect();
    let pivot = grad
        .iter()
        .position(|g| !g.is_zero())
        .expect("validated point has nonzero gradient");
    // Columns of S: tangential unit vectors (skipping the pivot), then -2i*g.
    let minus_two_i = GaussianRational::from_parts(0, -2, 1);
    let mut s = vec![vec![GaussianRational::zero(); n]; n];
    let mut col = 0usize;
    for j in 0..n {
        if j == pivot {
            continue;
        }
        s[j][col] = GaussianRational::one();
        col += 1;
    }
    for j in 0..n {
        s[j][n - 1] = &minus_two_i * &grad[j];
    }
    let t_lin = crate::matrix::exact_inverse(&s).expect("pivot column makes S invertible");
    // old z = new zeta * T, i.e. old_j = sum_k zeta_k * T[k][j].
    let after_linear = {
        let replacements: Vec<PolarizedPoly> = (0..n)
            .map(|j| {
                let mut acc = PolarizedPoly::zero(n);
                for (k, row) in t_lin.iter().enumerate() {
                    if !row[j].is_zero() {
                        acc = acc.add(&PolarizedPoly::variable(k, n).scale(&row[j]));
                    }
                }
                acc
            })
            .collect();
        translated.compose_holomorphic(&replacements, n)
    };

    // 3. Orient: the tangential Hermitian block must be positive definite.
    let hermitian_block = |p: &PolarizedPoly| -> Vec<Vec<GaussianRational>> {
        (0..n - 1)
            .map(|j| {
                (0..n - 1)
                    .map(|k| p.coeff_of(&[(j, 1)], &[(k, 1)]))
                    .collect()
            })
            .collect()
    };
    let mut rho2 = after_linear;
    let mut sign_flipped = false;
    let definiteness = |h: &[Vec<GaussianRational>]| -> i8 {
        // Sylvester: +1 positive definite, -1 negative definite, 0 otherwise.
        let m = h.len();
        let mut pos = true;
        let mut neg = true;
        for k in 1..=m {
            let minor: Vec<Vec<GaussianRational>> =
                h[..k].iter().map(|r| r[..k].to_vec()).collect();
            let det = crate::matrix::exact_det(&minor);
            debug_assert!(det.is_real());
            if !num_traits::Signed::is_positive(&det.re) {
                pos = false;
            }
            let flipped_sign = if k % 2 == 1 {
                num_traits::Signed::is_negative(&det.re)
            } else {
                num_traits::Signed::is_positive(&det.re)
            };
            if !flipped_sign {
                neg = false;
            }
        }
        if pos {
            1
        } else if neg {
            -1
        } else {
            0
        }
    };
    let mut block = hermitian_block(&rho2);
    match definiteness(&block) {
        1 => {}
        -1 => {
            // Reflect the graph direction and negate rho.
            let neg_var = PolarizedPoly::variable(n - 1, n).neg();
            let neg_cvar = PolarizedPoly::conj_variable(n - 1, n).neg();
            rho2 = rho2
                .substitute(n - 1, false, &neg_var)
                .substitute(n - 1, true, &neg_cvar)
                .neg();
            sign_flipped = true;
            block = hermitian_block(&rho2);
            debug_assert_eq!(definiteness(&block), 1);
        }
        _ => {
            return Err(Error::Validation(format!(
                "source '{}' not strictly pseudoconvex at the base point: the \
                 tangential Levi block is not definite",
                surface.name
            )));
        }
    }

    // 4. Shear away the tangential-holomorphic quadratic part:
    //    zeta_n := zeta_n' + 2i * q(tangential).
    let mut q = PolarizedPoly::zero(n);
    for j in 0..n - 1 {
        for k in j..n - 1 {
            let c = if j == k {
                rho2.coeff_of(&[(j, 2)], &[])
            } else {
                rho2.coeff_of(&[(j, 1), (k, 1)], &[])
            };
            if !c.is_zero() {
                let m = PolarizedPoly::variable(j, n).mul(&PolarizedPoly::variable(k, n));
                q = q.add(&m.scale(&c));
            }
        }
    }
    let two_i = GaussianRational::from_parts(0, 2, 1);
    let sheared = if q.is_zero() {
        rho2.clone()
    } else {
        let repl = PolarizedPoly::variable(n - 1, n).add(&q.scale(&two_i));
        rho2.substitute(n - 1, false, &repl)
            .substitute(n - 1, true, &repl.conjugate())
    };

    // 5. Congruence-scale the tangential block to the identity.
    let identity_block = block
        .iter()
        .enumerate()
        .all(|(i, row)| {
            row.iter().enumerate().all(|(j, v)| {
                if i == j {
                    *v == GaussianRational::one()
                } else {
                    v.is_zero()
                }
            })
        });
    let m1 = n - 1;
    let (scaling, rho_final_float) = if identity_block {
        (DMatrix::<ComplexDouble>::identity(m1, m1), sheared.to_float())
    } else {
        let hf = exact_to_dmatrix(&block);
        let chol = nalgebra::Cholesky::new(hf).ok_or_else(|| {
            Error::Validation(format!(
                "source '{}' not strictly pseudoconvex at the base point: the \
                 tangential Levi block admits no Cholesky factor",
                surface.name
            ))
        })?;
        let g = chol
            .l()
            .lu()
            .try_inverse()
            .expect("triangular factor invertible");
        let mut big = DMatrix::<ComplexDouble>::identity(n, n);
        big.view_mut((0, 0), (m1, m1)).copy_from(&g);
        (g, linear_substitution(&sheared.to_float(), &big))
    };

    // Certify: residual after removing the normal form has no terms of
    // weighted degree < 3.
    let mut expected = FloatPoly::zero(n);
    let half_i = ComplexDouble::new(0.0, 0.5);
    expected = expected.add(
        &FloatPoly::variable(n - 1, n)
            .sub(&FloatPoly::conj_variable(n - 1, n))
            .scale(&half_i),
    );
    for j in 0..n - 1 {
        expected = expected.add(&FloatPoly::variable(j, n).mul(&FloatPoly::conj_variable(j, n)));
    }
    let residual = rho_final_float.sub(&expected);
    let defect = residual
        .filter_terms(|e| PolarizedPoly::graded_term_degree(e, n, n - 1) < 3)
        .max_coeff_modulus();
    if defect > settings.tol {
        return Err(Error::Validation(format!(
            "source normalization left weighted low-order terms of size {defect:.3e}"
        )));
    }

    let exact = if identity_block {
        let names: Vec<String> = (1..=n).map(|j| format!("z{j}")).collect();
        Some(Hypersurface::new(
            format!("{}_normalized", surface.name),
            names,
            sheared,
            Some(n - 1),
        )?)
    } else {
        None
    };

    Ok(SourceNormalization {
        exact,
        rho: rho_final_float,
        translation: p0.coords.clone(),
        linear: t_lin,
        sign_flipped,
        shear: q,
        scaling,
        residual_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::Settings;

    fn settings() -> Settings {
        Settings::default()
    }

    fn gr(a: i64, b: i64) -> GaussianRational {
        GaussianRational::from_ratio(a, b)
    }

    #[test]
    fn extract_jet_linear_fixture() {
        let (m, mp, f) = models::linear_embedding_fixture();
        let ex = extract_jet(&m, &mp, &f).unwrap();
        assert_eq!(ex.jet.transversal, GaussianRational::one());
        assert_eq!(ex.jet.tangential_jacobian, vec![vec![
            GaussianRational::one(),
            GaussianRational::zero(),
        ]]);
        assert_eq!(ex.jet.leading_block, vec![vec![GaussianRational::one()]]);
        assert_eq!(ex.jet.last_column, vec![GaussianRational::zero()]);
        assert!(!ex.jet.orientation_flipped);
        assert_eq!(ex.jet.first_order_defect, 0.0);
        assert_eq!(ex.jet.second_order_defect, 0.0);
    }

    #[test]
    fn extract_jet_orientation_flip() {
        let (m, mp, f) = models::linear_embedding_fixture();
        let flipped = orientation_flip_map(&f);
        let ex = extract_jet(&m, &mp, &flipped).unwrap();
        assert!(ex.jet.orientation_flipped);
        assert_eq!(ex.jet.transversal, GaussianRational::one());
    }

    #[test]
    fn extract_jet_transversal_coefficient() {
        // last component 2 z2 + z1^2: lambda = 2, second-order defect 2
        let (m, mp, mut f) = models::linear_embedding_fixture();
        let n = 2;
        let last = PolarizedPoly::variable(1, n)
            .scale(&GaussianRational::from_int(2))
            .add(&PolarizedPoly::variable(0, n).pow(2));
        f.components[2] = MapComponent::Poly(last);
        let ex = extract_jet(&m, &mp, &f).unwrap();
        assert_eq!(ex.jet.transversal, GaussianRational::from_int(2));
        assert_eq!(ex.jet.second_order_defect, 2.0);
    }

    #[test]
    fn extract_jet_rejects_nontransversal() {
        let (m, mp, mut f) = models::linear_embedding_fixture();
        f.components[2] = MapComponent::Poly(PolarizedPoly::variable(0, 2).pow(2));
        let err = extract_jet(&m, &mp, &f).unwrap_err();
        assert!(err.to_string().contains("not CR-transversal"));
    }

    #[test]
    fn verify_identity_fixtures() {
        let (m, mp, f) = models::linear_embedding_fixture();
        let ex = extract_jet(&m, &mp, &f).unwrap();
        let rep = verify_hermitian_identity(&ex.jet, 1e-9).unwrap();
        assert_eq!(rep.deviation, 0.0);
        assert_eq!(rep.u_rank, 1);
        assert_eq!(rep.branch, TargetBranch::LeviDegenerate);

        // scaled: U = diag(2, 0), A = (1, 0), lambda = 2
        let jet = JetData {
            transversal: GaussianRational::from_int(2),
            tangential_jacobian: vec![vec![GaussianRational::one(), GaussianRational::zero()]],
            leading_block: vec![vec![GaussianRational::one()]],
            last_column: vec![GaussianRational::zero()],
            target_quadric: vec![
                vec![GaussianRational::from_int(2), GaussianRational::zero()],
                vec![GaussianRational::zero(), GaussianRational::zero()],
            ],
            orientation_flipped: false,
            first_order_defect: 0.0,
            second_order_defect: 0.0,
        };
        let rep = verify_hermitian_identity(&jet, 1e-9).unwrap();
        assert_eq!(rep.deviation, 0.0);
        assert_eq!(rep.u_rank, 1);

        // full-rank U routes to the Levi-nondegenerate branch
        let jet_full = JetData {
            transversal: GaussianRational::one(),
            target_quadric: vec![
                vec![GaussianRational::one(), GaussianRational::zero()],
                vec![GaussianRational::zero(), GaussianRational::one()],
            ],
            ..jet.clone()
        };
        let rep = verify_hermitian_identity(&jet_full, 1e-9).unwrap();
        assert_eq!(rep.branch, TargetBranch::LeviNondegenerate);
        assert_eq!(rep.u_rank, 2);
    }

    #[test]
    fn diagonalize_u_cases() {
        // already normal: identity congruence
        let u = normal_form_quadric(3);
        let (p, _) = diagonalize_u(&u, 1e-9).unwrap();
        assert!(max_abs_diff(&p, &DMatrix::identity(3, 3)) == 0.0);
        // diag(4, 0): scale by 1/2
        let u = DMatrix::from_row_slice(2, 2, &[
            ComplexDouble::new(4.0, 0.0),
            ComplexDouble::new(0.0, 0.0),
            ComplexDouble::new(0.0, 0.0),
            ComplexDouble::new(0.0, 0.0),
        ]);
        let (p, diag) = diagonalize_u(&u, 1e-9).unwrap();
        assert!((diag[0] - 4.0).abs() < 1e-12);
        let prod = &p * &u * p.adjoint();
        assert!(max_abs_diff(&prod, &normal_form_quadric(2)) < 1e-12);
        // full rank is rejected with the dichotomy message
        let u = DMatrix::from_row_slice(2, 2, &[
            ComplexDouble::new(2.0, 0.0),
            ComplexDouble::new(1.0, 0.0),
            ComplexDouble::new(1.0, 0.0),
            ComplexDouble::new(1.0, 0.0),
        ]);
        let err = diagonalize_u(&u, 1e-9).unwrap_err();
        assert!(err.to_string().contains("full rank"));
    }

    #[test]
    fn build_d_fixtures() {
        // n = 2, B = (1), b = (0): identity change
        let b = DMatrix::from_element(1, 1, ComplexDouble::new(1.0, 0.0));
        let col = DVector::from_element(1, ComplexDouble::new(0.0, 0.0));
        let ch = build_d(1.0, &b, &col).unwrap();
        assert!(max_abs_diff(&ch.matrix, &DMatrix::identity(3, 3)) == 0.0);
        // b = (beta): pure shear, displayed inverse
        let beta = ComplexDouble::new(0.75, -0.5);
        let col = DVector::from_element(1, beta);
        let ch = build_d(1.0, &b, &col).unwrap();
        assert!((ch.c[0] + beta).norm() < 1e-15);
        assert!((ch.matrix[(0, 1)] + beta).norm() < 1e-15);
        assert!((ch.inverse[(0, 1)] - beta).norm() < 1e-15);
        assert!(ch.product_defect < 1e-15);
        // n = 3, B = 2I, lambda = 4: tangential block becomes the identity
        let b = DMatrix::from_diagonal_element(2, 2, ComplexDouble::new(2.0, 0.0));
        let col = DVector::from_element(2, ComplexDouble::new(0.0, 0.0));
        let ch = build_d(4.0, &b, &col).unwrap();
        assert!(max_abs_diff(&ch.matrix, &DMatrix::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn pipeline_on_exact_fixture() {
        let s = settings();
        let (m, mp, f) = models::linear_embedding_fixture();
        let out = normalize_map(&m, &mp, &f, &s).unwrap();
        assert!(out.stopped.is_none());
        let cert = out.normalized.unwrap().certificate;
        assert!(cert.passed, "failures: {:?}", cert.failures);
        assert_eq!(cert.quadric_form, 0.0);
        assert_eq!(cert.jet_diagonal, 0.0);
    }

    #[test]
    fn pipeline_shear_fixture() {
        // b = (beta) forces the shear; afterwards the degenerate-direction
        // component has zero tangential derivative
        let s = settings();
        let (m, mp, mut f) = models::linear_embedding_fixture();
        let n = 2;
        // F = (z1, beta*z1, z2): A = (1, beta)
        let beta = gr(3, 4);
        f.components[1] = MapComponent::Poly(PolarizedPoly::variable(0, n).scale(&beta));
        let out = normalize_map(&m, &mp, &f, &s).unwrap();
        let norm = out.normalized.unwrap();
        assert!(norm.certificate.passed, "failures: {:?}", norm.certificate.failures);
        assert!(norm.certificate.jet_degenerate_direction <= 1e-12);
    }

    #[test]
    fn pipeline_stops_on_nondegenerate_target() {
        let s = settings();
        let (m, _mp, f) = models::linear_embedding_fixture();
        // target with identity quadric in both tangential slots
        let mp2 = models::heisenberg(3);
        let out = normalize_map(&m, &mp2, &f, &s).unwrap();
        assert!(out.stopped.is_some());
        assert_eq!(out.hermitian.branch, TargetBranch::LeviNondegenerate);
    }

    #[test]
    fn pipeline_randomized_certificates() {
        use rand::SeedableRng;
        let s = settings();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..10 {
            let inst = models::random_normalization_instance(&mut rng, 2 + trial % 2);
            let out = normalize_map(&inst.source, &inst.target, &inst.map, &s).unwrap();
            let cert = out.normalized.expect("degenerate branch").certificate;
            assert!(
                cert.passed,
                "trial {trial}: failures {:?} cert {:?}",
                cert.failures, cert
            );
            assert!(out.change.unwrap().product_defect < 1e-12);
        }
    }

    #[test]
    fn orientation_invariance() {
        use rand::SeedableRng;
        let s = settings();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
        let inst = models::random_normalization_instance(&mut rng, 2);
        let out1 = normalize_map(&inst.source, &inst.target, &inst.map, &s).unwrap();
        let flipped_target = orientation_flip_target(&inst.target);
        let flipped_map = orientation_flip_map(&inst.map);
        let out2 = normalize_map(&inst.source, &flipped_target, &flipped_map, &s).unwrap();
        assert_eq!(out1.jet.transversal, out2.jet.transversal);
        assert!(out2.jet.orientation_flipped);
        let c1 = out1.normalized.unwrap().certificate;
        let c2 = out2.normalized.unwrap().certificate;
        assert_eq!(c1.passed, c2.passed);
    }

    #[test]
    fn normalize_source_identity_on_heisenberg() {
        let s = settings();
        let h = models::heisenberg(2);
        let p0 = h.validate_point(&[GaussianRational::zero(), GaussianRational::zero()]).unwrap();
        let out = normalize_source(&h, &p0, &s).unwrap();
        assert!(out.exact.is_some());
        assert_eq!(out.residual_defect, 0.0);
        assert!(!out.sign_flipped);
        let ex = out.exact.unwrap();
        assert_eq!(ex.rho, h.rho);
    }

    #[test]
    fn normalize_source_scales_levi_block() {
        // -Im z2 + 4|z1|^2: tangential scaling by 1/2
        let s = settings();
        let n = 2;
        let rho = models::neg_im_poly(1, n)
            .add(&models::abs_sq_poly(0, n).scale(&GaussianRational::from_int(4)));
        let h = Hypersurface::new("scaled", vec!["z1".into(), "z2".into()], rho, Some(1)).unwrap();
        let p0 = h.validate_point(&[GaussianRational::zero(), GaussianRational::zero()]).unwrap();
        let out = normalize_source(&h, &p0, &s).unwrap();
        assert!(out.exact.is_none());
        assert!((out.scaling[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(out.residual_defect <= 1e-12);
    }

    #[test]
    fn normalize_source_flips_sign() {
        // Im z2 - |z1|^2 defines the same surface with the opposite sign.
        let s = settings();
        let n = 2;
        let rho = models::neg_im_poly(1, n)
            .add(&models::abs_sq_poly(0, n))
            .neg();
        let h = Hypersurface::new("neg", vec!["z1".into(), "z2".into()], rho, Some(1)).unwrap();
        let p0 = h.validate_point(&[GaussianRational::zero(), GaussianRational::zero()]).unwrap();
        let out = normalize_source(&h, &p0, &s).unwrap();
        assert!(out.sign_flipped);
        assert_eq!(out.residual_defect, 0.0);
    }

    #[test]
    fn normalize_source_rejects_indefinite() {
        let s = settings();
        let n = 3;
        let rho = models::neg_im_poly(2, n)
            .add(&models::abs_sq_poly(0, n))
            .sub(&models::abs_sq_poly(1, n));
        let h = Hypersurface::new(
            "saddle",
            vec!["z1".into(), "z2".into(), "z3".into()],
            rho,
            Some(2),
        )
        .unwrap();
        let origin = vec![GaussianRational::zero(); 3];
        let p0 = h.validate_point(&origin).unwrap();
        let err = normalize_source(&h, &p0, &s).unwrap_err();
        assert!(err.to_string().contains("not strictly pseudoconvex"));
    }

    #[test]
    fn normalize_source_perturbed_sphere() {
        // the perturbed sphere at (0, 1): translation, exact path, residual
        // |zeta2|^2/4 + |zeta2|^10/1024 has weighted degree >= 4
        let s = settings();
        let (m, _, _) = models::perturbed_sphere_pair();
        let p0 = m
            .validate_point(&[GaussianRational::zero(), GaussianRational::one()])
            .unwrap();
        let out = normalize_source(&m, &p0, &s).unwrap();
        assert_eq!(out.residual_defect, 0.0);
        let ex = out.exact.expect("identity Levi block stays exact");
        // frozen from the hand expansion: coefficient of |zeta2|^2 is 1/4
        let psi = ex.graph_residual().unwrap().sub(&models::abs_sq_poly(0, 2));
        assert_eq!(psi.coeff_of(&[(1, 1)], &[(1, 1)]), gr(1, 4));
        assert_eq!(psi.coeff_of(&[(1, 5)], &[(1, 5)]), gr(1, 1024));
        assert_eq!(psi.num_terms(), 2);
    }

    #[test]
    fn shear_removes_holomorphic_quadratic() {
        // -Im z2 + |z1|^2 + Re(z1^2) needs the shear; the result is exact.
        let s = settings();
        let n = 2;
        let half = gr(1, 2);
        let z1sq = PolarizedPoly::variable(0, n).pow(2);
        let re_part = z1sq.add(&z1sq.conjugate()).scale(&half);
        let rho = models::neg_im_poly(1, n)
            .add(&models::abs_sq_poly(0, n))
            .add(&re_part);
        let h = Hypersurface::new("sheared", vec!["z1".into(), "z2".into()], rho, Some(1)).unwrap();
        let p0 = h.validate_point(&[GaussianRational::zero(), GaussianRational::zero()]).unwrap();
        let out = normalize_source(&h, &p0, &s).unwrap();
        assert_eq!(out.residual_defect, 0.0);
        assert!(!out.shear.is_zero());
        let ex = out.exact.expect("exact path");
        // normalized form satisfies the normalized-source contract
        require_normalized_source(&ex).unwrap();
    }
}

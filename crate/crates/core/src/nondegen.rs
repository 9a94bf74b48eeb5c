//! Iterated CR-derivative spans, nondegeneracy orders, degeneracy
//! determinants and degeneracy ideals of a hypersurface.

use crate::hypersurface::{CRField, Hypersurface, SurfacePoint};
use crate::matrix::{exact_rank, float_rank, poly_det, to_float_matrix};
use crate::poly::{grlex_cmp, PolarizedPoly};
use crate::scalar::GaussianRational;
use crate::{Backend, Error, Result, Settings};
use std::collections::BTreeMap;

/// Dimensions of the iterated spans at a point, level by level.
#[derive(Debug, Clone)]
pub struct SpanReport {
    pub point: SurfacePoint,
    /// `dims[l]` = dimension of the span of all rows of derivative order <= l.
    pub dims: Vec<usize>,
    /// Rows first introduced at each level, evaluated at the point.
    pub rows_by_level: Vec<Vec<Vec<GaussianRational>>>,
}

impl SpanReport {
    /// Levi rank of the surface at the point: `dim E_1 - 1`.
    pub fn levi_rank(&self) -> Option<usize> {
        self.dims.get(1).map(|d| d - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    /// Spans fill the ambient space first at this derivative order.
    Nondegenerate(usize),
    /// Spans still deficient after all levels up to the bound.
    NotUpTo(usize),
}

impl std::fmt::Display for OrderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderKind::Nondegenerate(k) => write!(f, "nondegenerate({k})"),
            OrderKind::NotUpTo(k) => write!(f, "not-up-to({k})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrderResult {
    pub kind: OrderKind,
    pub report: SpanReport,
}

/// Shared engine: symbolic rows `L^alpha rho_W` cached by multi-index, so a
/// batch of points reuses the differentiation work.
pub struct SpanEngine {
    fields: Vec<CRField>,
    /// Rows per level; each entry carries its multi-index over the CR basis.
    levels: Vec<Vec<(Vec<u8>, Vec<PolarizedPoly>)>>,
    row_count: usize,
}

impl SpanEngine {
    pub fn new(surface: &Hypersurface) -> Result<Self> {
        let fields = surface.cr_basis()?;
        let grad = surface.gradient_row();
        Ok(SpanEngine::from_parts(fields, grad))
    }

    /// Build an engine over an arbitrary base row (the pulled-back gradient
    /// row, for map spans).
    pub fn from_parts(fields: Vec<CRField>, base_row: Vec<PolarizedPoly>) -> Self {
        SpanEngine {
            fields,
            levels: vec![vec![(Vec::new(), base_row)]],
            row_count: 1,
        }
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    /// Extend cached rows so every multi-index of weight <= `level` exists.
    pub fn ensure_level(&mut self, level: usize, settings: &Settings) -> Result<()> {
        while self.levels.len() <= level {
            let l = self.levels.len();
            let prev: BTreeMap<Vec<u8>, usize> = self.levels[l - 1]
                .iter()
                .enumerate()
                .map(|(i, (a, _))| (a.clone(), i))
                .collect();
            let mut rows = Vec::new();
            for alpha in multi_indices_of_weight(self.fields.len(), l) {
                // Leftmost factor is the outermost operator, so the row for
                // alpha is field_j applied to the row for alpha - e_j with j
                // the first nonzero slot.
                let j = alpha.iter().position(|&a| a > 0).expect("weight >= 1");
                let mut tail = alpha.clone();
                tail[j] -= 1;
                let parent = &self.levels[l - 1][prev[&tail]].1;
                let row = self.fields[j].apply_row(parent);
                rows.push((alpha, row));
            }
            self.row_count += rows.len();
            if self.row_count > settings.max_span_rows {
                return Err(Error::ResourceCap(format!(
                    "order too large for exact mode: span would need more than {} rows",
                    settings.max_span_rows
                )));
            }
            self.levels.push(rows);
        }
        Ok(())
    }

    /// Evaluate the rows of one level at a point.
    pub fn rows_at(&self, level: usize, coords: &[GaussianRational]) -> Vec<Vec<GaussianRational>> {
        self.levels[level]
            .iter()
            .map(|(_, row)| row.iter().map(|p| p.eval(coords)).collect())
            .collect()
    }

    /// Symbolic row for a composition of field indices (0-based, leftmost
    /// outermost), applied to the gradient row.
    pub fn composed_row(&self, grad: &[PolarizedPoly], indices: &[usize]) -> Vec<PolarizedPoly> {
        let mut row = grad.to_vec();
        for &j in indices.iter().rev() {
            row = self.fields[j].apply_row(&row);
        }
        row
    }

    pub fn fields(&self) -> &[CRField] {
        &self.fields
    }
}

/// All multi-indices over `n` slots with the given weight, in lexicographic
/// order (which together with the weight grading gives graded lex overall).
pub fn multi_indices_of_weight(n: usize, weight: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current = vec![0u8; n];
    fn rec(slot: usize, remaining: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if slot + 1 == current.len() {
            current[slot] = remaining as u8;
            out.push(current.clone());
            current[slot] = 0;
            return;
        }
        for take in (0..=remaining).rev() {
            current[slot] = take as u8;
            rec(slot + 1, remaining - take, current, out);
        }
        current[slot] = 0;
    }
    if n == 0 {
        if weight == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, weight, &mut current, &mut out);
    out
}

fn rank_of(rows: &[Vec<GaussianRational>], settings: &Settings) -> usize {
    match settings.backend {
        Backend::Exact => exact_rank(rows),
        Backend::Float => float_rank(&to_float_matrix(rows), settings.tol),
    }
}

/// Span dimensions `dim E_0, ..., dim E_l` at a validated point.
pub fn e_space(
    surface: &Hypersurface,
    point: &SurfacePoint,
    level: usize,
    settings: &Settings,
) -> Result<SpanReport> {
    let mut engine = SpanEngine::new(surface)?;
    engine.ensure_level(level, settings)?;
    Ok(e_space_with(&engine, point, level, settings, None).0)
}

/// Evaluate spans with a prepared engine. When `stop_at_rank` is given the
/// scan stops early once the cumulative rank reaches it.
pub fn e_space_with(
    engine: &SpanEngine,
    point: &SurfacePoint,
    level: usize,
    settings: &Settings,
    stop_at_rank: Option<usize>,
) -> (SpanReport, usize) {
    let mut stack: Vec<Vec<GaussianRational>> = Vec::new();
    let mut dims = Vec::with_capacity(level + 1);
    let mut rows_by_level = Vec::with_capacity(level + 1);
    let mut rank = 0usize;
    for l in 0..=level {
        let rows = engine.rows_at(l, &point.coords);
        stack.extend(rows.iter().cloned());
        rows_by_level.push(rows);
        rank = rank_of(&stack, settings);
        dims.push(rank);
        if let Some(target) = stop_at_rank {
            if rank >= target {
                break;
            }
        }
    }
    (
        SpanReport {
            point: point.clone(),
            dims,
            rows_by_level,
        },
        rank,
    )
}

/// Smallest derivative order at which the spans fill the ambient space, or
/// `NotUpTo(kmax)`.
pub fn nondegeneracy_order(
    surface: &Hypersurface,
    point: &SurfacePoint,
    kmax: usize,
    settings: &Settings,
) -> Result<OrderResult> {
    let mut engine = SpanEngine::new(surface)?;
    engine.ensure_level(kmax, settings)?;
    Ok(order_with(&engine, surface.nvars(), point, kmax, settings))
}

pub fn order_with(
    engine: &SpanEngine,
    ambient_dim: usize,
    point: &SurfacePoint,
    kmax: usize,
    settings: &Settings,
) -> OrderResult {
    let (report, rank) = e_space_with(engine, point, kmax, settings, Some(ambient_dim));
    let kind = if rank == ambient_dim {
        OrderKind::Nondegenerate(report.dims.len() - 1)
    } else {
        OrderKind::NotUpTo(kmax)
    };
    OrderResult { kind, report }
}

/// Generic-order survey over sampled or supplied points.
#[derive(Debug, Clone)]
pub struct GenericOrderReport {
    pub per_point: Vec<(SurfacePoint, OrderKind)>,
    /// order value -> count; the bound itself keys the deficient outcomes.
    pub histogram: BTreeMap<String, usize>,
    /// Most common finite order, if any point produced one.
    pub generic_order: Option<usize>,
    pub min_order: Option<usize>,
    /// Sampling evidence never proves a universal statement.
    pub note: String,
}

pub fn generic_order(
    surface: &Hypersurface,
    supplied: Option<Vec<SurfacePoint>>,
    kmax: usize,
    trials: usize,
    seed: u64,
    jobs: usize,
    settings: &Settings,
) -> Result<GenericOrderReport> {
    let points = match supplied {
        Some(p) if !p.is_empty() => p,
        Some(_) => return Err(Error::Usage("no points supplied".into())),
        None => surface.sample_points(trials, seed)?,
    };
    let mut engine = SpanEngine::new(surface)?;
    engine.ensure_level(kmax, settings)?;
    let ambient = surface.nvars();

    let run = |pt: &SurfacePoint| -> (SurfacePoint, OrderKind) {
        let r = order_with(&engine, ambient, pt, kmax, settings);
        (pt.clone(), r.kind)
    };
    let per_point: Vec<(SurfacePoint, OrderKind)> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            points.par_iter().map(run).collect()
        })
    } else {
        points.iter().map(run).collect()
    };

    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut finite: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, kind) in &per_point {
        *histogram.entry(kind.to_string()).or_insert(0) += 1;
        if let OrderKind::Nondegenerate(k) = kind {
            *finite.entry(*k).or_insert(0) += 1;
        }
    }
    let generic = finite
        .iter()
        .max_by_key(|(order, count)| (**count, std::cmp::Reverse(**order)))
        .map(|(order, _)| *order);
    let min_order = finite.keys().next().copied();
    Ok(GenericOrderReport {
        per_point,
        histogram,
        generic_order: generic,
        min_order,
        note: format!(
            "orders observed on {} sampled points; no counterexample search \
             beyond these trials",
            points.len()
        ),
    })
}

/// Value of a degeneracy determinant: scalar at a point, or the full
/// polynomial in symbolic mode.
#[derive(Debug, Clone)]
pub enum DeltaValue {
    Scalar(GaussianRational),
    Symbolic(PolarizedPoly),
}

/// The determinant stacking the gradient row, the first n-1 basis rows, and
/// one composed row `Lambda_{i_1} ... Lambda_{i_l} rho_W`.
pub fn delta(
    surface: &Hypersurface,
    indices: &[usize],
    at: Option<&SurfacePoint>,
) -> Result<DeltaValue> {
    use crate::hypersurface::SurfaceForm;
    if surface.form == SurfaceForm::General {
        return Err(Error::Usage(format!(
            "surface '{}': delta determinants need graph form; use span analysis instead",
            surface.name
        )));
    }
    let n = surface.nvars();
    if n < 3 {
        return Err(Error::Usage(
            "delta determinants need CR dimension at least 2".into(),
        ));
    }
    if indices.is_empty() {
        return Err(Error::Usage("at least one composition index required".into()));
    }
    for &i in indices {
        if i == 0 || i > n - 1 {
            return Err(Error::Usage(format!(
                "composition index {i} out of range 1..={}",
                n - 1
            )));
        }
    }
    let engine = SpanEngine::new(surface)?;
    let grad = surface.gradient_row();
    let mut rows: Vec<Vec<PolarizedPoly>> = Vec::with_capacity(n);
    rows.push(grad.clone());
    for j in 0..n - 2 {
        rows.push(engine.composed_row(&grad, &[j]));
    }
    let zero_based: Vec<usize> = indices.iter().map(|&i| i - 1).collect();
    rows.push(engine.composed_row(&grad, &zero_based));
    match at {
        Some(pt) => {
            let m: Vec<Vec<GaussianRational>> = rows
                .iter()
                .map(|row| row.iter().map(|p| p.eval(&pt.coords)).collect())
                .collect();
            Ok(DeltaValue::Scalar(crate::matrix::exact_det(&m)))
        }
        None => Ok(DeltaValue::Symbolic(poly_det(&rows))),
    }
}

/// A symbolic degeneracy determinant with its row recipe.
#[derive(Debug, Clone)]
pub struct DegDetPoly {
    /// One composition sequence of CR-basis indices (1-based) per row; the
    /// empty sequence is the bare gradient row.
    pub rows_spec: Vec<Vec<usize>>,
    pub det: PolarizedPoly,
}

/// The default row recipe: gradient row followed by every first-order row.
pub fn full_first_order_spec(nvars: usize) -> Vec<Vec<usize>> {
    let mut spec = vec![Vec::new()];
    for i in 1..nvars {
        spec.push(vec![i]);
    }
    spec
}

/// Symbolic determinant of `rows_spec` applied to the gradient row.
pub fn deg_det(surface: &Hypersurface, rows_spec: &[Vec<usize>]) -> Result<DegDetPoly> {
    let n = surface.nvars();
    if rows_spec.len() != n {
        return Err(Error::Usage(format!(
            "row specification has {} rows; need exactly {n}",
            rows_spec.len()
        )));
    }
    let engine = SpanEngine::new(surface)?;
    let fields = engine.num_fields();
    for spec in rows_spec {
        for &i in spec {
            if i == 0 || i > fields {
                return Err(Error::Usage(format!(
                    "row specification index {i} out of range 1..={fields}"
                )));
            }
        }
    }
    let grad = surface.gradient_row();
    let rows: Vec<Vec<PolarizedPoly>> = rows_spec
        .iter()
        .map(|spec| {
            let zero_based: Vec<usize> = spec.iter().map(|&i| i - 1).collect();
            engine.composed_row(&grad, &zero_based)
        })
        .collect();
    Ok(DegDetPoly {
        rows_spec: rows_spec.to_vec(),
        det: poly_det(&rows),
    })
}

/// Exact membership test for the on-surface ideal of a rigid graph: substitute
/// `conj(w_d) := w_d - 2i*phi` and test for the zero polynomial.
pub fn vanishes_on(surface: &Hypersurface, p: &PolarizedPoly) -> Result<bool> {
    use crate::hypersurface::SurfaceForm;
    if surface.form != SurfaceForm::RigidGraph {
        return Err(Error::Usage(format!(
            "surface '{}': exact on-surface reduction unavailable; use point sampling",
            surface.name
        )));
    }
    let d = surface.distinguished.expect("rigid graph has distinguished variable");
    let phi = surface.graph_residual().expect("graph residual exists");
    let two_i = GaussianRational::from_parts(0, 2, 1);
    let replacement = PolarizedPoly::variable(d, surface.nvars()).sub(&phi.scale(&two_i));
    Ok(p.substitute(d, true, &replacement).is_zero())
}

/// Generators of the order-`k0` degeneracy ideal: all determinants of N rows
/// `L^alpha rho_W` with multi-indices of weight at most `k0`. Zero and
/// scalar-duplicate generators are pruned; survivors are scaled monic in the
/// graded-lex leading coefficient.
pub fn degeneracy_ideal(
    surface: &Hypersurface,
    k0: usize,
    settings: &Settings,
) -> Result<Vec<PolarizedPoly>> {
    let n = surface.nvars();
    let mut engine = SpanEngine::new(surface)?;
    engine.ensure_level(k0, settings)?;
    let mut all_rows: Vec<Vec<PolarizedPoly>> = Vec::new();
    for level in 0..=k0 {
        for (_, row) in &engine.levels[level] {
            all_rows.push(row.clone());
        }
    }
    let m = all_rows.len();
    if m < n {
        return Ok(Vec::new());
    }
    let combos = binomial(m, n);
    if combos > settings.max_ideal_generators as u128 {
        return Err(Error::ResourceCap(format!(
            "degeneracy ideal would need {combos} generators; cap is {}",
            settings.max_ideal_generators
        )));
    }
    let mut out: Vec<PolarizedPoly> = Vec::new();
    let mut seen: Vec<PolarizedPoly> = Vec::new();
    for combo in combinations(m, n) {
        let rows: Vec<Vec<PolarizedPoly>> = combo.iter().map(|&i| all_rows[i].clone()).collect();
        let det = poly_det(&rows);
        if det.is_zero() {
            continue;
        }
        let monic = monic_grlex(&det);
        if seen.contains(&monic) {
            continue;
        }
        seen.push(monic.clone());
        out.push(monic);
    }
    Ok(out)
}

fn monic_grlex(p: &PolarizedPoly) -> PolarizedPoly {
    let lead = p
        .terms()
        .max_by(|(ea, _), (eb, _)| grlex_cmp(ea, eb))
        .map(|(_, c)| c.clone())
        .expect("nonzero polynomial");
    p.scale(&lead.inv())
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] + (k - i) <= n - 1 {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::poly::Poly;
    use crate::Settings;

    fn settings() -> Settings {
        Settings::default()
    }

    fn origin(n: usize) -> SurfacePoint {
        SurfacePoint {
            coords: vec![GaussianRational::zero(); n],
            validated: true,
        }
    }

    /// Independent oracle: build each row from scratch, composing operators
    /// right-to-left, and rank with the float backend.
    fn brute_force_dims(surface: &Hypersurface, pt: &[GaussianRational], kmax: usize) -> Vec<usize> {
        let fields = surface.cr_basis().unwrap();
        let grad = surface.gradient_row();
        let mut stack: Vec<Vec<GaussianRational>> = Vec::new();
        let mut dims = Vec::new();
        for l in 0..=kmax {
            for alpha in multi_indices_of_weight(fields.len(), l) {
                // apply rightmost factor first
                let mut row = grad.clone();
                for (j, &count) in alpha.iter().enumerate().rev() {
                    for _ in 0..count {
                        row = fields[j].apply_row(&row);
                    }
                }
                stack.push(row.iter().map(|p| p.eval(pt)).collect());
            }
            dims.push(float_rank(&to_float_matrix(&stack), 1e-9));
        }
        dims
    }

    #[test]
    fn quadric_span_dims() {
        let h = models::heisenberg(3);
        let p = origin(3);
        let r = e_space(&h, &p, 1, &settings()).unwrap();
        assert_eq!(r.dims, vec![1, 3]);
        assert_eq!(r.levi_rank(), Some(2));
        let o = nondegeneracy_order(&h, &p, 6, &settings()).unwrap();
        assert_eq!(o.kind, OrderKind::Nondegenerate(1));
    }

    #[test]
    fn degenerate_quadric_span_dims() {
        let h = models::degenerate_quadric();
        let p = origin(3);
        let r = e_space(&h, &p, 4, &settings()).unwrap();
        assert_eq!(r.dims, vec![1, 2, 2, 2, 2]);
        assert_eq!(
            brute_force_dims(&h, &p.coords, 4),
            vec![1, 2, 2, 2, 2],
            "incremental and brute-force spans disagree"
        );
    }

    #[test]
    fn product_surface_never_fills() {
        let h = models::heisenberg_times_c();
        let pts = h.sample_points(10, 1).unwrap();
        for p in &pts {
            let o = nondegeneracy_order(&h, &p, 5, &settings()).unwrap();
            assert_eq!(o.kind, OrderKind::NotUpTo(5));
            let r = e_space(&h, &p, 3, &settings()).unwrap();
            assert!(r.dims.iter().all(|&d| d <= 2));
        }
    }

    #[test]
    fn quartic_model_orders() {
        let h = models::quartic_model();
        let o = nondegeneracy_order(&h, &origin(3), 6, &settings()).unwrap();
        assert_eq!(o.kind, OrderKind::NotUpTo(6));
        assert_eq!(
            brute_force_dims(&h, &origin(3).coords, 6).last(),
            Some(&2usize)
        );
        // order 1 wherever w2 != 0
        let pts = h.sample_points(25, 3).unwrap();
        for p in pts {
            if p.coords[1].is_zero() {
                continue;
            }
            let o = nondegeneracy_order(&h, &p, 6, &settings()).unwrap();
            assert_eq!(o.kind, OrderKind::Nondegenerate(1));
        }
    }

    #[test]
    fn tube_is_two_nondegenerate_at_smooth_points() {
        let t = models::light_cone_tube(2);
        let pts = t.sample_points(10, 5).unwrap();
        for p in &pts {
            let o = nondegeneracy_order(&t, p, 4, &settings()).unwrap();
            assert_eq!(o.kind, OrderKind::Nondegenerate(2));
            assert_eq!(
                brute_force_dims(&t, &p.coords, 2),
                vec![1, 2, 3],
                "tube span profile"
            );
        }
    }

    #[test]
    fn dims_monotone_and_stable_on_fixtures() {
        for h in [
            models::heisenberg(3),
            models::degenerate_quadric(),
            models::quartic_model(),
            models::heisenberg_times_c(),
        ] {
            let p = origin(3);
            let r = e_space(&h, &p, 6, &settings()).unwrap();
            for w in r.dims.windows(2) {
                assert!(w[0] <= w[1]);
            }
            // stabilization: once a level adds nothing, later levels add
            // nothing either (checked three levels out)
            for l in 1..r.dims.len() - 3 {
                if r.dims[l] == r.dims[l - 1] {
                    for m in 1..=3 {
                        assert_eq!(r.dims[l + m], r.dims[l]);
                    }
                }
            }
        }
    }

    #[test]
    fn generic_order_surveys() {
        let s = settings();
        let h = models::quartic_model();
        let rep = generic_order(&h, None, 6, 50, 11, 1, &s).unwrap();
        assert_eq!(rep.generic_order, Some(1));
        for (p, kind) in &rep.per_point {
            if !p.coords[1].is_zero() {
                assert_eq!(*kind, OrderKind::Nondegenerate(1));
            }
        }
        let hq = models::heisenberg(3);
        let rep = generic_order(&hq, None, 4, 20, 1, 1, &s).unwrap();
        assert_eq!(rep.generic_order, Some(1));
        assert_eq!(rep.histogram.get("nondegenerate(1)"), Some(&20));
        let hm = models::heisenberg_times_c();
        let rep = generic_order(&hm, None, 4, 20, 1, 1, &s).unwrap();
        assert_eq!(rep.generic_order, None);
        assert_eq!(rep.histogram.get("not-up-to(4)"), Some(&20));
    }

    #[test]
    fn generic_order_parallel_matches_sequential() {
        let s = settings();
        let h = models::quartic_model();
        let seq = generic_order(&h, None, 5, 24, 9, 1, &s).unwrap();
        let par = generic_order(&h, None, 5, 24, 9, 3, &s).unwrap();
        assert_eq!(seq.histogram, par.histogram);
        for (a, b) in seq.per_point.iter().zip(par.per_point.iter()) {
            assert_eq!(a.0.coords, b.0.coords);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn delta_values_on_fixtures() {
        // nondegenerate quadric: Lambda_1 Lambda_1 rho_W is identically zero
        let h = models::heisenberg(3);
        match delta(&h, &[1, 1], Some(&origin(3))).unwrap() {
            DeltaValue::Scalar(v) => assert!(v.is_zero()),
            _ => unreachable!(),
        }
        // quartic model at (0, 1, i): rows (0,2,i/2),(1,0,0),(0,4,0),
        // determinant 2i by cofactor expansion
        let hq = models::quartic_model();
        let q = hq
            .validate_point(&[
                GaussianRational::zero(),
                GaussianRational::one(),
                GaussianRational::i(),
            ])
            .unwrap();
        match delta(&hq, &[2, 2], Some(&q)).unwrap() {
            DeltaValue::Scalar(v) => {
                assert_eq!(v, GaussianRational::from_parts(0, 2, 1));
            }
            _ => unreachable!(),
        }
        // and it vanishes at the origin
        match delta(&hq, &[2, 2], Some(&origin(3))).unwrap() {
            DeltaValue::Scalar(v) => assert!(v.is_zero()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn delta_consistent_with_spans() {
        // where some second-order delta is nonzero and the first-order rows
        // are independent, the order is at most 2
        let hq = models::quartic_model();
        let pts = hq.sample_points(10, 21).unwrap();
        for p in pts {
            let mut hit = false;
            for i in 1..=2 {
                for j in i..=2 {
                    if let DeltaValue::Scalar(v) = delta(&hq, &[i, j], Some(&p)).unwrap() {
                        if !v.is_zero() {
                            hit = true;
                        }
                    }
                }
            }
            if hit {
                let o = nondegeneracy_order(&hq, &p, 6, &settings()).unwrap();
                match o.kind {
                    OrderKind::Nondegenerate(k) => assert!(k <= 2),
                    _ => panic!("order should be finite"),
                }
            }
        }
    }

    #[test]
    fn delta_rejects_bad_input() {
        let t = models::light_cone_tube(2);
        assert!(delta(&t, &[1], Some(&origin(3))).is_err());
        let h = models::heisenberg(3);
        assert!(delta(&h, &[9], None).is_err());
        assert!(delta(&h, &[], None).is_err());
    }

    #[test]
    fn deg_det_fixtures() {
        // normalized quadric: identically zero
        let h = models::heisenberg(3);
        let dd = deg_det(&h, &full_first_order_spec(3)).unwrap();
        assert!(dd.det.is_zero());
        // product surface: a zero column
        let hm = models::heisenberg_times_c();
        let dd = deg_det(&hm, &full_first_order_spec(3)).unwrap();
        assert!(dd.det.is_zero());
        // wrong row count
        assert!(deg_det(&h, &[vec![], vec![1]]).is_err());
    }

    #[test]
    fn deg_det_constant_term_from_quadratic_residual() {
        // phi = c |w2|^2 on the normalized base: constant term sigma*(i/2)*c
        // with sigma = +1 for three variables under this row order.
        let n = 3;
        let c = GaussianRational::from_int(3);
        let rho = models::neg_im_poly(2, n)
            .add(&models::abs_sq_poly(0, n))
            .add(&models::abs_sq_poly(1, n).scale(&c));
        let h = Hypersurface::new(
            "q",
            vec!["w1".into(), "w2".into(), "w3".into()],
            rho,
            Some(2),
        )
        .unwrap();
        let dd = deg_det(&h, &full_first_order_spec(3)).unwrap();
        let constant = dd.det.coeff(&vec![0u16; 6]);
        let expect = &GaussianRational::from_parts(0, 1, 2) * &c;
        assert_eq!(constant, expect);
    }

    #[test]
    fn leading_term_identity_random_rigid() {
        // det of the full first-order stack minus sigma*(i/2)*phi_{n nbar}
        // has no terms of total degree < 2; sigma depends only on the
        // dimension for this row order.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for nvars in [3usize, 4] {
            let sigma_pos = (nvars - 1) % 2 == 0;
            for _ in 0..10 {
                let h = models::random_rigid_target(&mut rng, nvars, 5);
                let dd = deg_det(&h, &full_first_order_spec(nvars)).unwrap();
                let phi = h.graph_residual().unwrap().sub(&models::identity_quadric(nvars));
                let phi_nn = phi
                    .wirtinger(nvars - 2, false)
                    .unwrap()
                    .wirtinger(nvars - 2, true)
                    .unwrap();
                let half_i = GaussianRational::from_parts(0, 1, 2);
                let mut lead = phi_nn.scale(&half_i);
                if !sigma_pos {
                    lead = lead.neg();
                }
                let diff = dd.det.sub(&lead);
                assert!(
                    diff.low_degree_part(2).is_zero(),
                    "degree <2 defect for nvars={nvars}"
                );
            }
        }
    }

    #[test]
    fn vanishes_on_rigid_reduction() {
        let h = models::heisenberg(3);
        assert!(vanishes_on(&h, &h.rho).unwrap());
        let dd = deg_det(&h, &full_first_order_spec(3)).unwrap();
        assert!(vanishes_on(&h, &dd.det).unwrap());
        // conj(w3) - w3 + 2i(|w1|^2+|w2|^2) vanishes on the quadric
        let n = 3;
        let two_i = GaussianRational::from_parts(0, 2, 1);
        let phi = models::abs_sq_poly(0, n).add(&models::abs_sq_poly(1, n));
        let p = Poly::conj_variable(2, n)
            .sub(&Poly::variable(2, n))
            .add(&phi.scale(&two_i));
        assert!(vanishes_on(&h, &p).unwrap());
        // non-rigid surfaces are refused
        let t = models::light_cone_tube(2);
        assert!(vanishes_on(&t, &t.rho).is_err());
    }

    #[test]
    fn degeneracy_ideal_fixtures() {
        let s = settings();
        // nondegenerate quadric, k0 = 1: a nonzero constant generator
        let h = models::heisenberg(3);
        let gens = degeneracy_ideal(&h, 1, &s).unwrap();
        assert!(gens
            .iter()
            .any(|g| g.total_degree() == 0 && !g.is_zero()));
        // product surface: no nonzero generators at all
        let hm = models::heisenberg_times_c();
        for k0 in 1..=3 {
            assert!(degeneracy_ideal(&hm, k0, &s).unwrap().is_empty());
        }
        // quartic model, k0 = 2: generators vanish exactly on w2 = 0 within
        // the surface
        let hq = models::quartic_model();
        let gens = degeneracy_ideal(&hq, 2, &s).unwrap();
        assert!(!gens.is_empty());
        for g in &gens {
            // every generator is divisible by w2 or conj(w2)
            assert!(g
                .terms()
                .all(|(e, _)| e[1] > 0 || e[4] > 0));
        }
        let pts = hq.sample_points(20, 23).unwrap();
        for p in pts {
            let on_locus = p.coords[1].is_zero();
            let all_vanish = gens.iter().all(|g| g.eval(&p.coords).is_zero());
            assert_eq!(on_locus, all_vanish);
        }
    }

    #[test]
    fn ideal_vanishing_matches_order_deficiency() {
        let s = settings();
        for h in [
            models::heisenberg(3),
            models::quartic_model(),
            models::heisenberg_times_c(),
            models::degenerate_quadric(),
        ] {
            let gens_by_k: Vec<Vec<PolarizedPoly>> =
                (1..=3).map(|k| degeneracy_ideal(&h, k, &s).unwrap()).collect();
            let pts = h.sample_points(8, 31).unwrap();
            for p in pts {
                for (k, gens) in gens_by_k.iter().enumerate() {
                    let k0 = k + 1;
                    let all_vanish = gens.iter().all(|g| g.eval(&p.coords).is_zero());
                    let deficient = matches!(
                        nondegeneracy_order(&h, &p, k0, &s).unwrap().kind,
                        OrderKind::NotUpTo(_)
                    );
                    assert_eq!(all_vanish, deficient, "surface {} k0={k0}", h.name);
                }
            }
        }
    }

    #[test]
    fn field_application_maps_ideal_into_next() {
        // L I_k within the linear span of I_{k+1} generators, as coefficient
        // vectors, on the quadric fixtures
        let s = settings();
        for h in [
            models::heisenberg(3),
            models::degenerate_quadric(),
            models::quartic_model(),
        ] {
            let fields = h.cr_basis().unwrap();
            for k0 in 1..=2usize {
                let gens_k = degeneracy_ideal(&h, k0, &s).unwrap();
                let gens_next = degeneracy_ideal(&h, k0 + 1, &s).unwrap();
                // collect the monomial support
                let mut monomials: Vec<Vec<u16>> = Vec::new();
                let mut add_support = |p: &PolarizedPoly| {
                    for (e, _) in p.terms() {
                        if !monomials.contains(e) {
                            monomials.push(e.clone());
                        }
                    }
                };
                for g in gens_next.iter().chain(gens_k.iter()) {
                    add_support(g);
                }
                for g in &gens_k {
                    for f in &fields {
                        add_support(&f.apply(g));
                    }
                }
                monomials.sort();
                let to_vec = |p: &PolarizedPoly| -> Vec<GaussianRational> {
                    monomials.iter().map(|e| p.coeff(e)).collect()
                };
                let base: Vec<Vec<GaussianRational>> = gens_next.iter().map(to_vec).collect();
                let base_rank = exact_rank(&base);
                for g in &gens_k {
                    for f in &fields {
                        let image = f.apply(g);
                        if image.is_zero() {
                            continue;
                        }
                        let mut stacked = base.clone();
                        stacked.push(to_vec(&image));
                        assert_eq!(
                            exact_rank(&stacked),
                            base_rank,
                            "field image escapes the next ideal on {}",
                            h.name
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ideal_cap_enforced() {
        let mut s = settings();
        s.max_ideal_generators = 3;
        let hq = models::quartic_model();
        assert!(matches!(
            degeneracy_ideal(&hq, 2, &s),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn span_cap_enforced() {
        let mut s = settings();
        s.max_span_rows = 4;
        let h = models::heisenberg(3);
        assert!(matches!(
            nondegeneracy_order(&h, &origin(3), 6, &s),
            Err(Error::ResourceCap(_))
        ));
    }

    #[test]
    fn multi_index_enumeration_is_graded_lex() {
        let idx = multi_indices_of_weight(2, 2);
        assert_eq!(idx, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices_of_weight(3, 0), vec![vec![0, 0, 0]]);
    }
}

//! Standard example surfaces, fixture pairs, and seeded random instance
//! generators used across the test suites and the acceptance gate.

use crate::hypersurface::{Hypersurface, SamplerKind, SurfacePoint};
use crate::map_check::{MapComponent, MapJet};
use crate::poly::{PolarizedPoly, Poly};
use crate::scalar::GaussianRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `-Im x_d` as a polynomial: `(i/2) (x_d - conj x_d)`.
pub fn neg_im_poly(d: usize, nvars: usize) -> PolarizedPoly {
    let half_i = GaussianRational::from_parts(0, 1, 2);
    Poly::variable(d, nvars)
        .sub(&Poly::conj_variable(d, nvars))
        .scale(&half_i)
}

/// `|x_j|^2`.
pub fn abs_sq_poly(j: usize, nvars: usize) -> PolarizedPoly {
    Poly::variable(j, nvars).mul(&Poly::conj_variable(j, nvars))
}

/// The quadric part of the degenerate normal form: the sum of `|w_j|^2` over
/// every tangential variable except the degenerate direction (the
/// second-to-last one).
pub fn identity_quadric(nvars: usize) -> PolarizedPoly {
    let mut acc = Poly::zero(nvars);
    for j in 0..nvars.saturating_sub(2) {
        acc = acc.add(&abs_sq_poly(j, nvars));
    }
    acc
}

fn var_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("{prefix}{j}")).collect()
}

/// The strictly pseudoconvex model quadric in n variables:
/// `-Im w_n + sum_{j<n} |w_j|^2`.
pub fn heisenberg(nvars: usize) -> Hypersurface {
    let mut rho = neg_im_poly(nvars - 1, nvars);
    for j in 0..nvars - 1 {
        rho = rho.add(&abs_sq_poly(j, nvars));
    }
    Hypersurface::new("quadric", var_names("w", nvars), rho, Some(nvars - 1)).unwrap()
}

/// `-Im w_3 + |w_1|^2` in three variables: Levi rank one everywhere.
pub fn degenerate_quadric() -> Hypersurface {
    let rho = neg_im_poly(2, 3).add(&abs_sq_poly(0, 3));
    Hypersurface::new("degenerate-quadric", var_names("w", 3), rho, Some(2)).unwrap()
}

/// `-Im w_3 + |w_1|^2 + |w_2|^4`: Levi-degenerate exactly along `w_2 = 0`.
pub fn quartic_model() -> Hypersurface {
    let rho = neg_im_poly(2, 3)
        .add(&abs_sq_poly(0, 3))
        .add(&abs_sq_poly(1, 3).pow(2));
    Hypersurface::new("quartic-model", var_names("w", 3), rho, Some(2)).unwrap()
}

/// A quadric times a flat complex line: `-Im w_2 + |w_1|^2` in three
/// variables, independent of `w_3`.
pub fn heisenberg_times_c() -> Hypersurface {
    let rho = neg_im_poly(1, 3).add(&abs_sq_poly(0, 3));
    Hypersurface::new("quadric-times-line", var_names("w", 3), rho, Some(1)).unwrap()
}

/// The tube over the light cone in n+1 variables:
/// `(Im z_1)^2 + ... + (Im z_n)^2 - (Im z_{n+1})^2 = 0`.
pub fn light_cone_tube(n: usize) -> Hypersurface {
    let nv = n + 1;
    let im = |j: usize| neg_im_poly(j, nv).neg();
    let mut rho = Poly::zero(nv);
    for j in 0..n {
        rho = rho.add(&im(j).pow(2));
    }
    rho = rho.sub(&im(n).pow(2));
    let mut h = Hypersurface::new("light-cone-tube", var_names("z", nv), rho, Some(n)).unwrap();
    h.sampler = SamplerKind::Tube;
    h
}

/// The perturbed-sphere pair: the source `|z|^2 + |w|^2 + |1-w|^10 = 1` near
/// (0, 1), the target `|z_1|^2 + |z_2|^2 + |z_3|^4 = 1`, and the map
/// `(z, w, (1-w)^(5/2))` between them.
pub fn perturbed_sphere_pair() -> (Hypersurface, Hypersurface, MapJet) {
    let n = 2;
    let one_minus_w = Poly::one(n).sub(&Poly::variable(1, n));
    let rho_m = abs_sq_poly(0, n)
        .add(&abs_sq_poly(1, n))
        .add(&one_minus_w.mul(&one_minus_w.conjugate()).pow(5))
        .sub(&Poly::one(n));
    let m = Hypersurface::new("perturbed-sphere", vec!["z".into(), "w".into()], rho_m, None)
        .unwrap();
    let nt = 3;
    let rho_t = abs_sq_poly(0, nt)
        .add(&abs_sq_poly(1, nt))
        .add(&abs_sq_poly(2, nt).pow(2))
        .sub(&Poly::one(nt));
    let t = Hypersurface::new("quartic-sphere", var_names("z", nt), rho_t, None).unwrap();
    let basepoint = SurfacePoint::raw(vec![GaussianRational::zero(), GaussianRational::one()]);
    let map = MapJet {
        components: vec![
            MapComponent::Poly(Poly::variable(0, n)),
            MapComponent::Poly(Poly::variable(1, n)),
            MapComponent::Radical {
                base: one_minus_w,
                num: 5,
                den: 2,
            },
        ],
        source_nvars: n,
        basepoint: Some(basepoint),
    };
    (m, t, map)
}

/// The basic transversal embedding fixture: the model quadric in two
/// variables, the quartic model as target, and the map `(z_1, 0, z_2)`.
pub fn linear_embedding_fixture() -> (Hypersurface, Hypersurface, MapJet) {
    let m = heisenberg(2);
    let t = quartic_model();
    let map = MapJet::polynomial(
        vec![
            Poly::variable(0, 2),
            Poly::zero(2),
            Poly::variable(1, 2),
        ],
        None,
    )
    .unwrap();
    (m, t, map)
}

// ---- random generators -------------------------------------------------------

fn rand_nonzero_gaussian(rng: &mut ChaCha8Rng, height: i64) -> GaussianRational {
    loop {
        let g = crate::hypersurface::rand_gaussian(rng, height);
        if !g.is_zero() {
            return g;
        }
    }
}

/// A random real polynomial built from symmetrized monomials over the
/// allowed variables, with total degree in `degree_range` and an optional
/// weighted-degree floor (the distinguished variable weighing 2).
pub fn random_symmetrized(
    rng: &mut ChaCha8Rng,
    nvars: usize,
    allowed_vars: &[usize],
    degree_range: (u32, u32),
    terms: usize,
    height: i64,
    min_weight: Option<(usize, u32)>,
) -> PolarizedPoly {
    let mut out = Poly::zero(nvars);
    let mut produced = 0usize;
    let mut guard = 0usize;
    while produced < terms && guard < 200 {
        guard += 1;
        let d = rng.gen_range(degree_range.0..=degree_range.1);
        let mut exps = vec![0u16; 2 * nvars];
        for _ in 0..d {
            let var = allowed_vars[rng.gen_range(0..allowed_vars.len())];
            let slot = if rng.gen_bool(0.5) { var } else { nvars + var };
            exps[slot] += 1;
        }
        if let Some((dist, floor)) = min_weight {
            if PolarizedPoly::graded_term_degree(&exps, nvars, dist) < floor {
                continue;
            }
        }
        let c = rand_nonzero_gaussian(rng, height);
        let mono = PolarizedPoly::from_terms(nvars, [(exps, c)]);
        out = out.add(&mono).add(&mono.conjugate());
        produced += 1;
    }
    out
}

/// A normalized rigid target: `-Im w_N + sum_{j <= N-2} |w_j|^2 + phi`, with
/// `phi` a random real polynomial of degree `min_deg ..= min_deg+1` over the
/// tangential variables only.
pub fn random_normalized_target(
    rng: &mut ChaCha8Rng,
    nvars: usize,
    min_deg: u32,
    height: i64,
) -> Hypersurface {
    let tangential: Vec<usize> = (0..nvars - 1).collect();
    let phi = random_symmetrized(
        rng,
        nvars,
        &tangential,
        (min_deg, min_deg + 1),
        3,
        height,
        None,
    );
    let rho = neg_im_poly(nvars - 1, nvars)
        .add(&identity_quadric(nvars))
        .add(&phi);
    Hypersurface::new("random-target", var_names("w", nvars), rho, Some(nvars - 1)).unwrap()
}

/// Alias used by determinant tests: rigid target with cubic-and-quartic
/// residual.
pub fn random_rigid_target(rng: &mut ChaCha8Rng, nvars: usize, height: i64) -> Hypersurface {
    random_normalized_target(rng, nvars, 3, height)
}

/// A normalized source quadric with a random residual of weighted degree at
/// least three.
pub fn random_normalized_source(rng: &mut ChaCha8Rng, nvars: usize, height: i64) -> Hypersurface {
    let all: Vec<usize> = (0..nvars).collect();
    let psi = random_symmetrized(
        rng,
        nvars,
        &all,
        (2, 4),
        3,
        height,
        Some((nvars - 1, 3)),
    );
    let mut rho = neg_im_poly(nvars - 1, nvars);
    for j in 0..nvars - 1 {
        rho = rho.add(&abs_sq_poly(j, nvars));
    }
    rho = rho.add(&psi);
    Hypersurface::new("random-source", var_names("z", nvars), rho, Some(nvars - 1)).unwrap()
}

/// A random unit-modulus Gaussian rational: `(a + b i)^2 / (a^2 + b^2)`.
pub fn rand_unit(rng: &mut ChaCha8Rng) -> GaussianRational {
    loop {
        let a = rng.gen_range(-4i64..=4);
        let b = rng.gen_range(-4i64..=4);
        if a == 0 && b == 0 {
            continue;
        }
        let g = GaussianRational::from_parts(a, b, 1);
        let n = GaussianRational::real(g.norm_sqr());
        return &(&g * &g) / &n;
    }
}

/// A random rational unitary matrix: a product of Pythagorean rotations and
/// unit-modulus diagonal phases.
pub fn rand_rational_unitary(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<GaussianRational>> {
    let mut q = vec![vec![GaussianRational::zero(); m]; m];
    for (i, row) in q.iter_mut().enumerate() {
        row[i] = rand_unit(rng);
    }
    if m == 1 {
        return q;
    }
    for _ in 0..m {
        let i = rng.gen_range(0..m);
        let mut j = rng.gen_range(0..m);
        while j == i {
            j = rng.gen_range(0..m);
        }
        // Pythagorean cosine/sine pair.
        let a = rng.gen_range(1i64..=4);
        let b = rng.gen_range(1i64..=4);
        let c = GaussianRational::from_ratio(a * a - b * b, a * a + b * b);
        let s = GaussianRational::from_ratio(2 * a * b, a * a + b * b);
        for col in 0..m {
            let qi = q[i][col].clone();
            let qj = q[j][col].clone();
            q[i][col] = &(&c * &qi) + &(&s * &qj);
            q[j][col] = &(&c * &qj) - &(&s * &qi);
        }
    }
    q
}

/// Everything a normalization run needs: a normalized source, a target with
/// rank-deficient positive-semidefinite quadric, and a transversal map whose
/// order-2 data satisfies the transfer identity by construction.
pub struct NormalizationInstance {
    pub source: Hypersurface,
    pub target: Hypersurface,
    pub map: MapJet,
    pub lambda: GaussianRational,
}

pub fn random_normalization_instance(rng: &mut ChaCha8Rng, n: usize) -> NormalizationInstance {
    let source = random_normalized_source(rng, n, 3);
    let nt = n + 1;

    // U = G* G for a random full-rank (n-1) x n matrix G: Hermitian, PSD,
    // rank n-1.
    let (g, ggs) = loop {
        let g: Vec<Vec<GaussianRational>> = (0..n - 1)
            .map(|_| (0..n).map(|_| crate::hypersurface::rand_gaussian(rng, 3)).collect())
            .collect();
        let gs = mat_mul(&g, &conj_transpose(&g));
        if crate::matrix::exact_rank(&g) == n - 1 && crate::matrix::exact_inverse(&gs).is_some() {
            break (g, gs);
        }
    };
    let u = mat_mul(&conj_transpose(&g), &g);

    // phi: random real ordinary-cubic-and-higher residual.
    let all_t: Vec<usize> = (0..nt).collect();
    let phi = random_symmetrized(rng, nt, &all_t, (3, 4), 3, 3, None);
    let mut rho_t = neg_im_poly(nt - 1, nt);
    for (j, row) in u.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            if !c.is_zero() {
                let m = Poly::variable(j, nt).mul(&Poly::conj_variable(k, nt));
                rho_t = rho_t.add(&m.scale(c));
            }
        }
    }
    rho_t = rho_t.add(&phi);
    let target =
        Hypersurface::new("random-psd-target", var_names("w", nt), rho_t, Some(nt - 1)).unwrap();

    // A = H (G G*)^{-1} G with H = s Q: then A U A* = H H* = s^2 I.
    let s = loop {
        let c = GaussianRational::from_ratio(rng.gen_range(1i64..=3), rng.gen_range(1i64..=2));
        if !c.is_zero() {
            break c;
        }
    };
    let lambda = &s * &s;
    let q = rand_rational_unitary(rng, n - 1);
    let h: Vec<Vec<GaussianRational>> = q
        .iter()
        .map(|row| row.iter().map(|v| &s * v).collect())
        .collect();
    let ggs_inv = crate::matrix::exact_inverse(&ggs).expect("checked invertible");
    let a = mat_mul(&mat_mul(&h, &ggs_inv), &g);

    // Map components: tangential block from A, free transversal linear
    // parts, plus random higher-order noise.
    let mut components: Vec<PolarizedPoly> = Vec::with_capacity(nt);
    for j in 0..n {
        let mut comp = Poly::zero(n);
        for (i, row) in a.iter().enumerate() {
            if !row[j].is_zero() {
                comp = comp.add(&Poly::variable(i, n).scale(&row[j]));
            }
        }
        // a_j z_n: free linear coefficient along the graph direction.
        let aj = crate::hypersurface::rand_gaussian(rng, 2);
        if !aj.is_zero() {
            comp = comp.add(&Poly::variable(n - 1, n).scale(&aj));
        }
        // random holomorphic quadratic
        let qa = rng.gen_range(0..n);
        let qb = rng.gen_range(0..n);
        let qc = crate::hypersurface::rand_gaussian(rng, 2);
        if !qc.is_zero() {
            comp = comp.add(
                &Poly::variable(qa, n)
                    .mul(&Poly::variable(qb, n))
                    .scale(&qc),
            );
        }
        components.push(comp);
    }
    let mut last = Poly::variable(n - 1, n).scale(&lambda);
    // quadratic noise along the graph direction keeps the identity intact
    let qc = crate::hypersurface::rand_gaussian(rng, 2);
    if !qc.is_zero() {
        last = last.add(
            &Poly::variable(n - 1, n)
                .mul(&Poly::variable(rng.gen_range(0..n), n))
                .scale(&qc),
        );
    }
    components.push(last);
    let map = MapJet::polynomial(components, None).unwrap();
    NormalizationInstance {
        source,
        target,
        map,
        lambda,
    }
}

/// A pair-and-map fixture for the second-order certificate: the source
/// quadric in two variables, the target `-Im w_3 + |w_1|^2 + c (conj(w_1)^2
/// w_2 + w_1^2 conj(w_2))`, and the map `(z_1, 0, z_2)`.
pub fn certificate_fixture(c: GaussianRational) -> (Hypersurface, Hypersurface, MapJet) {
    let source = heisenberg(2);
    let nt = 3;
    let cubic = Poly::conj_variable(0, nt)
        .pow(2)
        .mul(&Poly::variable(1, nt));
    let mut rho = neg_im_poly(2, nt).add(&abs_sq_poly(0, nt));
    if !c.is_zero() {
        let sym = cubic.scale(&c);
        rho = rho.add(&sym).add(&sym.conjugate());
    }
    let target = Hypersurface::new("cubic-target", var_names("w", nt), rho, Some(2)).unwrap();
    let map = MapJet::polynomial(
        vec![
            Poly::variable(0, 2),
            Poly::zero(2),
            Poly::variable(1, 2),
        ],
        None,
    )
    .unwrap();
    (source, target, map)
}

/// A random normalized instance for the certificate cross-check: diagonal
/// tangential jet `s`, degenerate direction and transversal components with
/// no tangential linear part, random residuals on both sides.
pub fn random_certificate_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
) -> (Hypersurface, Hypersurface, MapJet) {
    let source = random_normalized_source(rng, n, 3);
    let nt = n + 1;
    let tangential: Vec<usize> = (0..nt - 1).collect();
    let mut phi = random_symmetrized(rng, nt, &tangential, (3, 4), 4, 3, None);
    // make sure some third-order mixed term is present so pairs can fire
    let seed_term = Poly::conj_variable(0, nt)
        .pow(2)
        .mul(&Poly::variable(nt - 2, nt))
        .scale(&rand_nonzero_gaussian(rng, 2));
    phi = phi.add(&seed_term).add(&seed_term.conjugate());
    let rho_t = neg_im_poly(nt - 1, nt)
        .add(&identity_quadric(nt))
        .add(&phi);
    let target =
        Hypersurface::new("random-cert-target", var_names("w", nt), rho_t, Some(nt - 1)).unwrap();

    let s = GaussianRational::from_ratio(rng.gen_range(1i64..=3), rng.gen_range(1i64..=2));
    let lambda = &s * &s;
    let mut components: Vec<PolarizedPoly> = Vec::new();
    for i in 0..n - 1 {
        let mut comp = Poly::variable(i, n).scale(&s);
        let qc = crate::hypersurface::rand_gaussian(rng, 2);
        if !qc.is_zero() {
            comp = comp.add(
                &Poly::variable(rng.gen_range(0..n), n)
                    .mul(&Poly::variable(rng.gen_range(0..n), n))
                    .scale(&qc),
            );
        }
        components.push(comp);
    }
    // degenerate direction: quadratic and higher only
    let mut mid = Poly::zero(n);
    let qc = crate::hypersurface::rand_gaussian(rng, 2);
    if !qc.is_zero() {
        mid = mid.add(
            &Poly::variable(rng.gen_range(0..n), n)
                .mul(&Poly::variable(rng.gen_range(0..n), n))
                .scale(&qc),
        );
    }
    components.push(mid);
    // transversal: lambda z_n plus graph-direction quadratics
    let mut last = Poly::variable(n - 1, n).scale(&lambda);
    let qc = crate::hypersurface::rand_gaussian(rng, 2);
    if !qc.is_zero() {
        last = last.add(
            &Poly::variable(n - 1, n)
                .mul(&Poly::variable(rng.gen_range(0..n), n))
                .scale(&qc),
        );
    }
    components.push(last);
    let map = MapJet::polynomial(components, None).unwrap();
    (source, target, map)
}

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

/// Seeded generator shared by CLI and tests.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_wellformed() {
        assert!(heisenberg(3).rho.is_real());
        assert!(light_cone_tube(2).rho.is_real());
        assert!(quartic_model().rho.is_real());
        let (m, t, f) = perturbed_sphere_pair();
        assert!(m.rho.is_real() && t.rho.is_real());
        f.validate().unwrap();
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = seeded_rng(4);
        for m in 1..=3 {
            let q = rand_rational_unitary(&mut rng, m);
            let prod = mat_mul(&q, &conj_transpose(&q));
            for i in 0..m {
                for j in 0..m {
                    let expect = if i == j {
                        GaussianRational::one()
                    } else {
                        GaussianRational::zero()
                    };
                    assert_eq!(prod[i][j], expect);
                }
            }
        }
    }

    #[test]
    fn normalization_instance_satisfies_identity() {
        let mut rng = seeded_rng(8);
        for n in [2usize, 3] {
            let inst = random_normalization_instance(&mut rng, n);
            assert!(inst.source.rho.is_real());
            assert!(inst.target.rho.is_real());
            // A U A* = lambda I, exactly
            let ex = crate::normalize::extract_jet(&inst.source, &inst.target, &inst.map).unwrap();
            assert_eq!(ex.jet.transversal, inst.lambda);
            let rep = crate::normalize::verify_hermitian_identity(&ex.jet, 1e-9).unwrap();
            assert_eq!(rep.deviation, 0.0);
            assert_eq!(rep.u_rank, n - 1);
        }
    }

    #[test]
    fn random_sources_are_normalized() {
        let mut rng = seeded_rng(12);
        for n in [2usize, 3, 4] {
            let h = random_normalized_source(&mut rng, n, 3);
            crate::normalize::require_normalized_source(&h).unwrap();
        }
    }
}

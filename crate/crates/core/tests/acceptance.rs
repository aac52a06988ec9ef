//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the worst observed residual against its pinned tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! criterion lines.

use bfcone::cone;
use bfcone::curvature;
use bfcone::families::{
    self, build_family, build_family_lenient, example_spec, potential_in_domain, sample_domain,
    BSpec, BetaBlock, ExampleName, FamilySpec, PotentialSubtype,
};
use bfcone::herm::{identitate_nullspace, HermForm};
use bfcone::verify::{run_suite, tachibana_residuals};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

fn report(criterion: usize, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {:2}: {} - {detail}",
        criterion,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

/// Sampler margin for the acceptance spec sets: points close to the domain
/// boundary are valid but amplify roundoff through the metric conditioning,
/// which the 1e-10 tolerance class cannot absorb.
fn margined() -> BTreeMap<String, f64> {
    let mut t = BTreeMap::new();
    t.insert("margin".to_string(), 0.02);
    t
}

fn parabolic_spec(
    case: u8,
    lambda: Option<f64>,
    gamma: Option<f64>,
    alpha: f64,
    mu: Vec<[f64; 2]>,
    betas: Vec<(f64, usize)>,
    seed: u64,
) -> FamilySpec {
    FamilySpec {
        mdim: 2,
        case,
        d: None,
        lambda,
        constant: None,
        b: BSpec::Parabolic {
            gamma,
            alpha,
            mu,
            betas: betas
                .into_iter()
                .map(|(value, mult)| BetaBlock { value, mult })
                .collect(),
        },
        interval: None,
        samples: 20,
        seed,
        tolerances: margined(),
        perturb_commutator: None,
    }
}

fn diagonal_case2_spec(eigs: Vec<f64>, d: f64, seed: u64) -> FamilySpec {
    FamilySpec {
        mdim: 2,
        case: 2,
        d: Some(d),
        lambda: None,
        constant: None,
        b: BSpec::Diagonal { eigenvalues: eigs },
        interval: None,
        samples: 20,
        seed,
        tolerances: margined(),
        perturb_commutator: None,
    }
}

/// Three representative valid specs per classification case.
fn family_roster() -> Vec<(&'static str, FamilySpec)> {
    let mut out: Vec<(&'static str, FamilySpec)> = Vec::new();
    fn with_margin(mut s: FamilySpec) -> FamilySpec {
        s.tolerances = margined();
        s
    }
    // case 1: flat-adjacent, hyperbolic branch, elliptic branch
    out.push((
        "case1-parabolic-branch",
        with_margin(example_spec(2, ExampleName::Bryant { ks: vec![0.1, 0.2, 0.3] }).unwrap()),
    ));
    out.push((
        "case1-hyperbolic-branch",
        with_margin(
            example_spec(
                2,
                ExampleName::WProj { weights: vec![1.0, 2.0, 3.0, 1.0], negative_d: false },
            )
            .unwrap(),
        ),
    ));
    out.push((
        "case1-elliptic-branch",
        with_margin(example_spec(2, ExampleName::Einstein { e: 1.0, case: 1, lambda: None }).unwrap()),
    ));
    // case 2
    out.push((
        "case2-einstein",
        with_margin(example_spec(2, ExampleName::Einstein { e: 0.5, case: 2, lambda: None }).unwrap()),
    ));
    out.push((
        "case2-diagonal-a",
        diagonal_case2_spec(vec![-0.4, 0.2, 0.1], -0.5, 21),
    ));
    out.push((
        "case2-diagonal-b",
        diagonal_case2_spec(vec![-0.3, 0.15, -0.05], -0.32, 22),
    ));
    // case 3
    out.push((
        "case3-two-step",
        parabolic_spec(3, None, None, 0.3, vec![[0.2, -0.1]], vec![(0.9, 1)], 31),
    ));
    out.push((
        "case3-one-step",
        parabolic_spec(3, None, None, 0.5, vec![[0.0, 0.0]], vec![(0.7, 1)], 32),
    ));
    out.push((
        "case3-negative-beta",
        parabolic_spec(3, None, None, 0.2, vec![[0.15, 0.1]], vec![(-0.8, 1)], 33),
    ));
    // case 4
    out.push((
        "case4-einstein",
        with_margin(
            example_spec(2, ExampleName::Einstein { e: 0.0, case: 4, lambda: Some(-1.0) }).unwrap(),
        ),
    ));
    out.push((
        "case4-order-one",
        parabolic_spec(4, Some(-1.0), Some(0.0), 0.4, vec![], vec![], 41),
    ));
    out.push((
        "case4-two-step",
        parabolic_spec(4, Some(-0.8), None, 0.1, vec![[0.2, 0.0]], vec![(1.1, 1)], 42),
    ));
    out
}

#[test]
fn criterion_01_flat_calibration() {
    let spec = example_spec(2, ExampleName::Bryant { ks: vec![0.0, 0.0, 0.0] }).unwrap();
    let fam = build_family(&spec).unwrap();
    let pts = sample_domain(&fam, 20, 1).unwrap();
    let mut worst_r = 0.0f64;
    let mut worst_g = 0.0f64;
    for pt in &pts {
        let curv = cone::riemann(&fam, pt).unwrap();
        worst_r = worst_r.max(curvature::tensor_norm(&curv).unwrap());
        let g = cone::metric(&fam, pt).unwrap();
        let n = pt.dim();
        worst_g = worst_g.max((g - DMatrix::<f64>::identity(n, n)).norm());
    }
    report(
        1,
        worst_r < 1e-8 && worst_g < 1e-12,
        &format!("flat cone: max |Riemann| = {worst_r:.3e} (tol 1e-8), max |g - Id| = {worst_g:.3e}"),
    );
}

#[test]
fn criterion_02_bochner_flatness_all_cases() {
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for (name, spec) in family_roster() {
        let fam = build_family(&spec).unwrap();
        let pts = sample_domain(&fam, 20, spec.seed).unwrap();
        let mut fam_worst = 0.0f64;
        for pt in &pts {
            let curv = cone::riemann(&fam, pt).unwrap();
            let rn = curvature::tensor_norm(&curv).unwrap();
            if rn <= 1e-8 {
                continue;
            }
            let (_s, w) = curvature::decompose(&curv).unwrap();
            fam_worst = fam_worst.max(curvature::tensor_norm(&w).unwrap() / rn);
        }
        if fam_worst > worst {
            worst = fam_worst;
            detail = name.to_string();
        }
    }
    report(
        2,
        worst < 1e-6,
        &format!("12 specs across the four cases: max |W|/|R| = {worst:.3e} (at {detail}, tol 1e-6)"),
    );
}

#[test]
fn criterion_03_negative_control() {
    let mut spec = example_spec(2, ExampleName::Bryant { ks: vec![0.1, 0.2, 0.3] }).unwrap();
    spec.perturb_commutator = Some(0.1);
    spec.samples = 20;
    spec.seed = 5;
    let fam = build_family_lenient(&spec).unwrap();
    let comm = (&fam.a_mat * &fam.b_mat - &fam.b_mat * &fam.a_mat).norm();
    assert!((comm - 0.1).abs() < 1e-9, "commutator norm {comm}");
    let pts = sample_domain(&fam, 20, spec.seed).unwrap();
    let mut worst = 0.0f64;
    for pt in &pts {
        let curv = cone::riemann(&fam, pt).unwrap();
        let rn = curvature::tensor_norm(&curv).unwrap();
        if rn <= 1e-8 {
            continue;
        }
        let (_s, w) = curvature::decompose(&curv).unwrap();
        worst = worst.max(curvature::tensor_norm(&w).unwrap() / rn);
    }
    let r = run_suite(
        &spec,
        Some(&["I19".to_string(), "I20".to_string(), "I21".to_string()]),
    )
    .unwrap();
    let i19 = r.checks.iter().find(|c| c.id == "I19").unwrap();
    let i20 = r.checks.iter().find(|c| c.id == "I20").unwrap();
    report(
        3,
        worst > 1e-3 && !i19.pass && !i20.pass,
        &format!(
            "|[A,B]| = {comm:.3}: max |W|/|R| = {worst:.3e} (> 1e-3), I19 pass = {}, I20 pass = {}",
            i19.pass, i20.pass
        ),
    );
}

#[test]
fn criterion_04_einstein_values() {
    let mut details = Vec::new();
    let mut ok = true;
    for (spec, sign) in [
        (example_spec(2, ExampleName::Einstein { e: 1.0, case: 1, lambda: None }).unwrap(), 1.0),
        (example_spec(2, ExampleName::Einstein { e: 0.0, case: 4, lambda: Some(-1.0) }).unwrap(), -1.0),
    ] {
        let fam = build_family(&spec).unwrap();
        let pts = sample_domain(&fam, 10, 7).unwrap();
        let mut worst = 0.0f64;
        for pt in &pts {
            let curv = cone::riemann(&fam, pt).unwrap();
            let theta = curvature::theta_op(&curv, 3).unwrap();
            let endo = theta.endo().unwrap();
            let dev = &endo - DMatrix::<f64>::identity(6, 6) * (sign / 5.0);
            worst = worst.max(bfcone::poly::op_norm(&dev.map(|x| Complex64::new(x, 0.0))));
        }
        ok = ok && worst < 1e-6;
        details.push(format!("case {} |Theta - ({:+})Id/5| = {worst:.3e}", spec.case, sign));
    }
    report(4, ok, &format!("{} (tol 1e-6)", details.join("; ")));
}

#[test]
fn criterion_05_spectrum_polynomial_agreement() {
    // specs spanning the minimal-polynomial subcases of the parabolic table
    let specs: Vec<(&str, FamilySpec)> = vec![
        (
            "case3 two-step (c = gamma)",
            parabolic_spec(3, None, None, 0.3, vec![[0.2, -0.1]], vec![(0.9, 1)], 51),
        ),
        (
            "case3 one-step",
            parabolic_spec(3, None, None, 0.5, vec![[0.0, 0.0]], vec![(0.7, 1)], 52),
        ),
        (
            "case4 two-step generic c",
            parabolic_spec(4, Some(-0.8), None, 0.1, vec![[0.2, 0.0]], vec![(1.1, 1)], 53),
        ),
        (
            "case4 order one (alpha != 0)",
            parabolic_spec(4, Some(-1.0), Some(0.0), 0.4, vec![], vec![], 54),
        ),
        (
            "case4 exceptional (alpha = 0, beta at c)",
            parabolic_spec(4, Some(-1.0), Some(0.2), 0.0, vec![], vec![(1.2, 1), (-1.6, 1)], 55),
        ),
    ];
    let mut worst = 0.0f64;
    let mut at = String::new();
    for (name, spec) in specs {
        let fam = build_family(&spec).unwrap();
        let pts = bfcone::bryant::sample_generic(&fam, 20, spec.seed).unwrap();
        for pt in &pts {
            let curv = cone::riemann(&fam, pt).unwrap();
            let theta = curvature::theta_op(&curv, 3).unwrap();
            let res = bfcone::bryant::theta_spectrum_residual(&fam, pt, &theta).unwrap();
            if res > worst {
                worst = res;
                at = name.to_string();
            }
        }
    }
    report(
        5,
        worst < 1e-5,
        &format!("5 parabolic specs, 20 points each: max spectrum mismatch = {worst:.3e} (at {at}, tol 1e-5)"),
    );
}

#[test]
fn criterion_06_identity_suite() {
    let linear = ["I1", "I2", "I3", "I8", "I9", "I14", "I17", "I19"];
    let curved = [
        "I4", "I5", "I6", "I7", "I10", "I11", "I12a", "I12b", "I12c", "I16", "I18", "I20",
    ];
    let selection: Vec<String> = linear
        .iter()
        .chain(curved.iter())
        .map(|s| s.to_string())
        .collect();
    let mut all_ok = true;
    let mut worst_line = String::new();
    let mut calibrated = false;
    for (name, mut spec) in family_roster() {
        spec.samples = 8;
        let r = run_suite(&spec, Some(&selection)).unwrap();
        calibrated = calibrated || r.env.sign_convention == "-1";
        for c in &r.checks {
            if !c.pass {
                all_ok = false;
                worst_line = format!("{name} {} residual {:.3e} > {:.1e}", c.id, c.max_residual, c.tolerance);
            }
        }
    }
    report(
        6,
        all_ok,
        &format!(
            "identity catalog on 12 specs: {} (sign calibration flag recorded: {})",
            if all_ok { "all below tolerance" } else { &worst_line },
            calibrated
        ),
    );
}

#[test]
fn criterion_07_gradient_identity() {
    // order-one case 4 and a two-eigenvalue case 3 spec
    let specs = vec![
        ("case4 order-one", parabolic_spec(4, Some(-1.0), Some(0.0), 0.4, vec![], vec![], 71)),
        (
            "case3 two-eigenvalue",
            parabolic_spec(3, None, None, 0.3, vec![[0.2, -0.1]], vec![(0.9, 1)], 72),
        ),
    ];
    let mut worst = 0.0f64;
    for (name, spec) in specs {
        let fam = build_family(&spec).unwrap();
        let pts = bfcone::bryant::sample_generic(&fam, 20, spec.seed).unwrap();
        for pt in &pts {
            let pred = bfcone::bryant::constante_predicate(&fam).unwrap();
            let p1 = bfcone::bryant::p1_poly(&fam, pt).unwrap();
            let mut roots = p1.real_roots(1e-6).unwrap();
            roots.retain(|r| !pred.roots.iter().any(|c| (c - r).abs() < 1e-6));
            assert!(!roots.is_empty(), "{name}: no non-constant roots");
            for j in 0..roots.len() {
                worst = worst.max(bfcone::bryant::check_grad(&fam, pt, j).unwrap());
            }
        }
    }
    report(
        7,
        worst < 1e-4,
        &format!("gradient identity at 20 points per spec: max relative residual = {worst:.3e} (tol 1e-4)"),
    );
}

#[test]
fn criterion_08_tachibana_liu() {
    let spec = example_spec(2, ExampleName::Tachibana { kbar: 0.25, d: 0.0 }).unwrap();
    let fam = build_family(&spec).unwrap();
    let (ode, newton) = tachibana_residuals(&fam).unwrap();
    assert_eq!(ode.len(), 20);
    let worst_ode = ode.iter().copied().fold(0.0f64, f64::max);
    let worst_newton = newton.iter().copied().fold(0.0f64, f64::max);
    report(
        8,
        worst_ode < 1e-8 && worst_newton < 1e-10,
        &format!(
            "kbar = 0.25 (a = 1, l1 = 1, l2 = -2): max ODE residual = {worst_ode:.3e} (tol 1e-8), max Newton residual = {worst_newton:.3e} (tol 1e-10)"
        ),
    );
}

#[test]
fn criterion_09_identity_lemma_nullspace() {
    let mut ok = true;
    let mut details = Vec::new();
    for mdim in [1usize, 2] {
        let form = HermForm::new(mdim);
        let trace_free = identitate_nullspace(100, 42, &form, true).unwrap();
        let with_trace = identitate_nullspace(100, 42, &form, false).unwrap();
        ok = ok && trace_free == 0 && with_trace == 1;
        details.push(format!("mdim {mdim}: dim = {trace_free} (trace-free), {with_trace} (full)"));
    }
    report(9, ok, &format!("{} (expected 0 and 1)", details.join("; ")));
}

#[test]
fn criterion_10_adjointness() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for n in [4usize, 6] {
        let (g, j) = curvature::standard_structure(n);
        for _ in 0..50 {
            let s = curvature::random_sym11(&g, &j, &mut rng);
            let r = curvature::random_kahler(&g, &j, &mut rng).unwrap();
            let lhs = curvature::inner_k(&curvature::adjoint_ck(&s).unwrap(), &r).unwrap();
            let rhs = curvature::inner_sym(&s, &curvature::ricci_contract(&r).unwrap()).unwrap();
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        }
    }
    report(
        10,
        worst < 1e-8,
        &format!("50 random pairs in dimensions 4 and 6: max relative defect = {worst:.3e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_11_implicit_potentials() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = example_spec(2, ExampleName::Bryant { ks: vec![0.2, 0.3, 0.5] }).unwrap();
    let cases = vec![
        (PotentialSubtype::Hyperbolic, { let mut s = base.clone(); s.d = Some(0.5); s }),
        (PotentialSubtype::Elliptic, { let mut s = base.clone(); s.d = Some(-0.5); s }),
        (PotentialSubtype::Parabolic, base),
    ];
    let mut worst = 0.0f64;
    for (subtype, spec) in cases {
        let mut checked = 0;
        while checked < 20 {
            let mut z = Vec::new();
            for _ in 0..3 {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                z.push(Complex64::new(0.35 * re, 0.35 * im));
            }
            let r2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
            if r2 < 0.05 || !potential_in_domain(&spec, r2).unwrap() {
                continue;
            }
            let w = families::potential_map(subtype, &spec, &z).unwrap();
            let x = families::solve_implicit_potential(subtype, &spec, &w).unwrap();
            worst = worst.max((x - r2).abs() / r2.max(1.0));
            checked += 1;
        }
    }
    report(
        11,
        worst < 1e-8,
        &format!("x(F(z)) vs |z|^2, 20 points per subtype: max relative deviation = {worst:.3e} (tol 1e-8)"),
    );
}

#[test]
fn criterion_12_report_determinism() {
    let mut spec = example_spec(2, ExampleName::Bryant { ks: vec![0.1, 0.2, 0.3] }).unwrap();
    spec.samples = 6;
    spec.seed = 2024;
    let a = run_suite(&spec, None).unwrap().to_json();
    let b = run_suite(&spec, None).unwrap().to_json();
    report(
        12,
        a == b && !a.is_empty(),
        &format!("two runs, fixed seed: byte-identical reports ({} bytes)", a.len()),
    );
}

#[test]
fn supplementary_case1_model_polynomials() {
    // the constant part of the numeric Bryant spectrum matches the repeated
    // roots of the predicted characteristic/minimal quotient for a case-1
    // family with coinciding diagonal constants
    let spec = example_spec(2, ExampleName::Tachibana { kbar: 0.25, d: 0.0 }).unwrap();
    let fam = build_family(&spec).unwrap();
    let (pm, pc) = families::predicted_polys(&spec).unwrap();
    let (quot, resid) = pc.div_exact(&pm);
    assert!(resid < 1e-9, "p_m must divide p_c (residual {resid:.3e})");
    let expected_constants = quot.real_roots(1e-8).unwrap();
    let pts = sample_domain(&fam, 6, 3).unwrap();
    for window in pts.windows(2) {
        let theta_a = curvature::theta_op(&cone::riemann(&fam, &window[0]).unwrap(), 3).unwrap();
        let theta_b = curvature::theta_op(&cone::riemann(&fam, &window[1]).unwrap(), 3).unwrap();
        let ea = curvature::theta_eigenvalues(&theta_a, 1e-6).unwrap();
        let eb = curvature::theta_eigenvalues(&theta_b, 1e-6).unwrap();
        // stationary eigenvalues across the two points
        let mut stationary = Vec::new();
        for &x in &ea {
            if eb.iter().any(|&y| (x - y).abs() < 1e-7) {
                stationary.push(x);
            }
        }
        for c in &expected_constants {
            assert!(
                stationary.iter().any(|s| (s - c).abs() < 1e-6),
                "expected constant eigenvalue {c} in {stationary:?}"
            );
        }
    }
}

#[test]
fn supplementary_weighted_projective_type_report() {
    // the weighted projective configuration: the positive-d variant lands on
    // the tan branch (hyperbolic model polynomials), the negative-d variant
    // on the decreasing-exponential branch; both must be Bochner-flat. The
    // numerically observed type is reported rather than asserted.
    for negative_d in [false, true] {
        let spec = example_spec(
            2,
            ExampleName::WProj { weights: vec![1.0, 2.0, 3.0, 1.0], negative_d },
        )
        .unwrap();
        let fam = build_family(&spec).unwrap();
        let pts = sample_domain(&fam, 5, 13).unwrap();
        let mut worst = 0.0f64;
        for pt in &pts {
            let curv = cone::riemann(&fam, pt).unwrap();
            let rn = curvature::tensor_norm(&curv).unwrap();
            if rn <= 1e-8 {
                continue;
            }
            let (_s, w) = curvature::decompose(&curv).unwrap();
            worst = worst.max(curvature::tensor_norm(&w).unwrap() / rn);
        }
        println!(
            "weighted projective (negative_d = {negative_d}): d = {:+.4}, max |W|/|R| = {worst:.3e}",
            spec.d.unwrap()
        );
        assert!(worst < 1e-6);
    }
}

#[test]
fn supplementary_sampler_determinism_is_pointwise() {
    let spec = example_spec(2, ExampleName::Bryant { ks: vec![0.1, 0.2, 0.3] }).unwrap();
    let fam = build_family(&spec).unwrap();
    let a = sample_domain(&fam, 10, 99).unwrap();
    let b = sample_domain(&fam, 10, 99).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.zeta, y.zeta);
    }
    let _ = DVector::<f64>::zeros(1);
}

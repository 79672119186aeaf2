//! Exact simplex integrals against tensor Gauss-Legendre quadrature.
//!
//! Points are mapped to the chart simplex by `x = u a` with `a` on the
//! opposite facet, which removes the singularity of denominators vanishing
//! at the chart origin.

use proptest::prelude::*;

use wfkb_core::polyalg::{graded_basis, integrate_poly, integrate_rational, pair_with_poly, FloatRational};
use wfkb_core::simplex::MAX_ALLELES;
use wfkb_core::{Chart, Coeff, Face, FaceFunction, MultiPoly, RationalFn};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            ((x + 1.0) / 2.0, w / 2.0)
        })
        .collect()
}

/// Points of the standard `(k-1)`-simplex `{a >= 0, sum a = 1}` with weights
/// for its parametrization by `k - 1` free coordinates.
fn facet_rule(k: usize, gl: &[(f64, f64)]) -> Vec<(Vec<f64>, f64)> {
    if k == 1 {
        return vec![(vec![1.0], 1.0)];
    }
    let inner = facet_rule(k - 1, gl);
    let mut out = Vec::new();
    for &(v, wv) in gl {
        for (a, wa) in &inner {
            let mut pt = vec![v];
            pt.extend(a.iter().map(|x| (1.0 - v) * x));
            out.push((pt, wv * wa * (1.0 - v).powi(k as i32 - 2)));
        }
    }
    out
}

fn quad(chart: Chart, f: impl Fn(&[f64; MAX_ALLELES]) -> f64) -> f64 {
    let k = chart.nvars();
    let gl = gauss_legendre(24);
    let facet = facet_rule(k, &gl);
    let free: Vec<usize> = chart.free_labels().collect();
    let mut total = 0.0;
    for &(u, wu) in &gl {
        for (a, wa) in &facet {
            let mut dense = [0.0; MAX_ALLELES];
            for (i, &l) in free.iter().enumerate() {
                dense[l] = u * a[i];
            }
            dense[chart.dependent()] = 1.0 - u;
            total += wu * wa * u.powi(k as i32 - 1) * f(&dense);
        }
    }
    total
}

fn to_f64(c: &Coeff) -> f64 {
    num_traits::ToPrimitive::to_f64(c).unwrap()
}

fn chart(l: &[usize]) -> Chart {
    Chart::new(Face::new(l).unwrap())
}

fn poly_on(chart: Chart, max_degree: u32) -> impl Strategy<Value = MultiPoly> {
    let basis = graded_basis(chart.nvars(), max_degree);
    let n = basis.len();
    prop::collection::vec((0..n, -5i64..=5), 1..6).prop_map(move |terms| {
        let mut p = MultiPoly::zero(chart);
        for (i, a) in terms {
            p = &p + &MultiPoly::monomial(chart, basis[i], Coeff::from_integer(a.into()));
        }
        p
    })
}

fn check_rational(r: &RationalFn) {
    let exact = to_f64(&integrate_rational(r).unwrap());
    let fr = FloatRational::from_exact(r);
    let approx = quad(r.chart(), |d| fr.eval(d));
    assert!((exact - approx).abs() < 1e-9, "{r}: exact {exact} vs quadrature {approx}");
}

#[test]
fn rule_integrates_volumes() {
    for (l, vol) in [(&[0, 1][..], 1.0), (&[0, 1, 2], 0.5), (&[0, 1, 2, 3], 1.0 / 6.0)] {
        assert!((quad(chart(l), |_| 1.0) - vol).abs() < 1e-14);
    }
}

#[test]
fn hand_rational_cases() {
    let c = chart(&[0, 1, 2]);
    check_rational(&RationalFn::new(MultiPoly::var(c, 0), [(0b110, 1)]).unwrap());
    check_rational(&RationalFn::new(MultiPoly::one(c), [(0b110, 1)]).unwrap());
    let t = chart(&[0, 1, 2, 3]);
    let num = &MultiPoly::var(t, 1) * &MultiPoly::var(t, 2);
    check_rational(&RationalFn::new(num, [(0b1110, 1), (0b1100, 1)]).unwrap());
    check_rational(&RationalFn::new(MultiPoly::var(t, 0), [(0b1110, 1), (0b1100, 1)]).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn polynomials_on_the_tetrahedron(p in poly_on(chart(&[1, 2, 3, 5]), 5)) {
        let exact = to_f64(&integrate_poly(&p));
        let fp = wfkb_core::polyalg::FloatPoly::from_exact(&p);
        let approx = quad(p.chart(), |d| fp.eval(d));
        prop_assert!((exact - approx).abs() < 1e-10);
    }

    #[test]
    fn nested_chains_on_the_tetrahedron(p in poly_on(chart(&[0, 1, 2, 3]), 3)) {
        let num = &p * &MultiPoly::var(p.chart(), 1);
        check_rational(&RationalFn::new(num, [(0b1110, 1), (0b1100, 2)]).unwrap());
        check_rational(&RationalFn::new(p, [(0b1110, 1), (0b1100, 1)]).unwrap());
    }

    #[test]
    fn pairing_of_rational_terms(p in poly_on(chart(&[0, 1, 2]), 3), g in poly_on(chart(&[0, 1, 2]), 2)) {
        let term = RationalFn::new(&p * &MultiPoly::var(p.chart(), 0), [(0b110, 2)]).unwrap();
        let mut f = FaceFunction::zero(p.face());
        f.push(term.clone()).unwrap();
        f.add_poly(&g).unwrap();
        let exact = to_f64(&pair_with_poly(&f, &g).unwrap());
        let fr = FloatRational::from_exact(&term);
        let fg = wfkb_core::polyalg::FloatPoly::from_exact(&g);
        let approx = quad(p.chart(), |d| (fr.eval(d) + fg.eval(d)) * fg.eval(d));
        prop_assert!((exact - approx).abs() < 1e-9, "exact {} vs {}", exact, approx);
    }
}

use proptest::prelude::*;

use roughinc::grid::DyadicGrid;
use roughinc::norms::{holder_seminorm, p_variation};
use roughinc::rough::{chen_defect_all_triples, lift_piecewise_linear, regrouping_defect};
use roughinc::selection::{certify_with_norm, select_path};
use roughinc::sets::{FnTimeMap, MapMeta, SetValue};
use roughinc::ydi::{representation_check, ydi_approximate};
use roughinc::young::{young_integral, YoungBudget};
use roughinc::{BuiltinMap, Path};

fn brute_pvar(points: &[Vec<f64>], p: f64) -> f64 {
    let n = points.len();
    let inner = n - 2;
    let mut best = 0.0f64;
    for mask in 0u32..(1 << inner) {
        let mut idx = vec![0];
        idx.extend((0..inner).filter(|k| mask >> k & 1 == 1).map(|k| k + 1));
        idx.push(n - 1);
        let s: f64 = idx
            .windows(2)
            .map(|w| {
                let d: f64 = points[w[0]].iter().zip(&points[w[1]]).map(|(a, b)| (a - b).powi(2)).sum();
                d.sqrt().powf(p)
            })
            .sum();
        best = best.max(s);
    }
    best.powf(1.0 / p)
}

fn path_of(values: &[Vec<f64>]) -> Path {
    let dim = values[0].len();
    let times = (0..values.len()).map(|i| i as f64).collect();
    Path::new(times, dim, values.concat()).unwrap()
}

fn points(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=3, 2usize..=max).prop_flat_map(|(d, n)| prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n))
}

fn driver(level: u32) -> impl Strategy<Value = Path> {
    prop::collection::vec(-1.0f64..1.0, 1usize << level).prop_map(move |steps| {
        let g = DyadicGrid::new(1.0, level).unwrap();
        let mut acc = vec![0.0];
        for s in steps {
            acc.push(acc.last().unwrap() + s * 2f64.powf(-0.7 * level as f64));
        }
        Path::scalar(g, acc).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pvar_matches_enumeration(pts in points(9), p in 1.0f64..4.0) {
        let dp = p_variation(&path_of(&pts), p).unwrap();
        let bf = brute_pvar(&pts, p);
        prop_assert!((dp - bf).abs() <= 1e-12 * bf.max(1.0));
    }

    #[test]
    fn pvar_nonincreasing_in_p(pts in points(10), p in 1.0f64..3.0, dp in 0.0f64..2.0) {
        let path = path_of(&pts);
        prop_assert!(p_variation(&path, p + dp).unwrap() <= p_variation(&path, p).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn ancestors_are_coarser_and_earlier(level in 1u32..12, raw in 1usize..4096) {
        let g = DyadicGrid::new(1.0, level).unwrap();
        let i = 1 + raw % g.intervals();
        let a = g.ancestor_index(i).unwrap();
        prop_assert!(a < i);
        let m = g.level_of(g.dyadic(i)).unwrap();
        prop_assert_eq!(i - a, 1usize << (level - m));
        if a > 0 {
            prop_assert!(g.level_of(g.dyadic(a)).unwrap() < m);
        }
    }

    #[test]
    fn young_integral_is_linear(y1 in driver(7), y2 in driver(7), x in driver(7), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let budget = YoungBudget { allow_violation: true, ..YoungBudget::new(2.0, 0.7) };
        let combo = Path::scalar(
            x.grid().unwrap(),
            y1.data().iter().zip(y2.data()).map(|(u, v)| a * u + b * v).collect(),
        ).unwrap();
        let lhs = young_integral(&combo, &x, &budget).unwrap();
        let i1 = young_integral(&y1, &x, &budget).unwrap();
        let i2 = young_integral(&y2, &x, &budget).unwrap();
        for k in 0..lhs.len() {
            let rhs = a * i1.point(k)[0] + b * i2.point(k)[0];
            prop_assert!((lhs.point(k)[0] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn lifted_paths_satisfy_chen(x in driver(5), z in driver(5)) {
        let g = x.grid().unwrap();
        let data = x.data().iter().zip(z.data()).flat_map(|(a, b)| [*a, *b]).collect();
        let rp = lift_piecewise_linear(&Path::on_grid(g, 2, data).unwrap(), 0.45).unwrap();
        prop_assert!(chen_defect_all_triples(&rp) < 1e-12);
        prop_assert!(regrouping_defect(&rp).1 < 1e-14);
    }

    #[test]
    fn dyadic_representation_holds(x in driver(8), amp in 0.01f64..1.0, xi in -2.0f64..2.0, m in 0u32..=8) {
        let map = BuiltinMap::parse(&format!("two_point(amp={amp}, offset=1.5)")).unwrap();
        let sol = ydi_approximate(&map, &x, &[xi], m).unwrap();
        prop_assert_eq!(sol.inclusion_residual, 0.0);
        for n in 0..=m {
            prop_assert!(representation_check(&sol, &x, n).unwrap() < 1e-12);
        }
    }

    #[test]
    fn selections_are_admissible(freq in 0.5f64..6.0, radius in 0.0f64..0.5, m in 1u32..9) {
        let meta = MapMeta { value_dim: 2, gamma: 1.0, gamma_norm: freq, sup_bound: 2.0 };
        let map = FnTimeMap::new(meta, move |t: f64| SetValue::Ball {
            center: vec![(freq * t).cos(), (freq * t).sin()],
            radius,
        });
        let xi = vec![1.0, 0.0];
        let r = select_path(&map, &xi, m).unwrap();
        prop_assert!(r.membership_residual <= 1e-12);
        prop_assert!(r.step_excess <= 1e-12);
        let cert = certify_with_norm(&r, 1.0, freq, 1.5).unwrap();
        prop_assert!(cert.pass);
    }

    #[test]
    fn projection_is_nearest_sample(pts in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..8), q in prop::collection::vec(-3.0f64..3.0, 2)) {
        let set = SetValue::cloud(pts.clone()).unwrap();
        let p = set.project(&q).unwrap();
        let d = |a: &[f64]| ((a[0] - q[0]).powi(2) + (a[1] - q[1]).powi(2)).sqrt();
        prop_assert!(pts.iter().all(|v| d(&p) <= d(v)));
        prop_assert_eq!(set.dist_to(&p).unwrap(), 0.0);
    }

    #[test]
    fn holder_scales_linearly(x in driver(6), c in 0.1f64..5.0) {
        let a = holder_seminorm(&x, 0.6).unwrap();
        prop_assert!((holder_seminorm(&x.scaled(c), 0.6).unwrap() - c * a).abs() <= 1e-12 * (1.0 + c * a));
    }
}

use roughinc_web::{fbm_summary, selection_summary, ydi_summary};
use serde_json::Value;

fn floats(v: &Value, key: &str) -> Vec<f64> {
    v[key].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn fbm_summary_is_deterministic_and_consistent() {
    let a = fbm_summary(0.6, 8, 7, 2.0, 0.5).unwrap();
    let b = fbm_summary(0.6, 8, 7, 2.0, 0.5).unwrap();
    assert_eq!(a, b);
    let x = floats(&a, "x");
    assert_eq!(x.len(), 257);
    assert_eq!(x[0], 0.0);
    let pv = a["p_variation"].as_f64().unwrap();
    let sq: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>().sqrt();
    assert!(pv >= sq - 1e-12);
    assert!(a["holder"].as_f64().unwrap() > 0.0);
}

#[test]
fn ydi_summary_stays_in_the_field() {
    let r = ydi_summary(0.7, 8, 3, 1.0, 1.0, 0.5).unwrap();
    let z = floats(&r, "z");
    assert_eq!(z[0], 0.5);
    assert_eq!(z.len(), floats(&r, "v").len());
    assert!(r["inclusion_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn selection_summary_follows_a_branch() {
    let r = selection_summary(0.8, 8, 1.0, 2.0).unwrap();
    let (f, lo, hi) = (floats(&r, "f"), floats(&r, "lower"), floats(&r, "upper"));
    // the terminal value is carried over from the last step, so it is checked separately
    for i in 0..f.len() - 1 {
        assert!((f[i] - lo[i]).abs().min((f[i] - hi[i]).abs()) < 1e-10);
    }
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn rejects_bad_input() {
    assert!(fbm_summary(1.5, 8, 0, 2.0, 0.5).is_err());
    assert!(fbm_summary(0.5, 13, 0, 2.0, 0.5).is_err());
    assert!(selection_summary(1.2, 8, 1.0, 2.0).is_err());
}

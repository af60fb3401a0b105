use elastic_jump::config::{parse_config, render};
use proptest::prelude::*;

fn measure_1d() -> impl Strategy<Value = String> {
    prop_oneof![
        (0.05f64..0.95, 0.1f64..5.0).prop_map(|(at, w)| format!("kind = \"point_mass\"\nat = {at:?}\nweight = {w:?}\n")),
        (0.05f64..0.45, 0.55f64..0.95, 0.1f64..5.0)
            .prop_map(|(a, b, w)| format!("kind = \"uniform_interval\"\na = {a:?}\nb = {b:?}\nweight = {w:?}\n")),
        (0.05f64..0.45, 0.55f64..0.95, 0.1f64..3.0, 0.1f64..3.0).prop_map(|(x, y, v, w)| format!(
            "kind = \"atoms\"\nat = [{x:?}, {y:?}]\nweights = [{v:?}, {w:?}]\n"
        )),
        Just("kind = \"zero\"\n".to_string()),
    ]
}

fn simulate() -> impl Strategy<Value = String> {
    (0u64..1 << 40, measure_1d(), 0.1f64..0.9, 0.01f64..2.0, 1e-5f64..1e-3, 1usize..5000).prop_map(
        |(seed, m, x0, t, h, n)| {
            format!(
                "experiment = \"simulate\"\nseed = {seed}\n[domain]\nkind = \"interval\"\n[measure]\n{m}\
                 [params]\nx0 = {x0:?}\nt_end = {t:?}\nh = {h:?}\nn_paths = {n}\n"
            )
        },
    )
}

fn trace() -> impl Strategy<Value = String> {
    (0u64..1000, 0.1f64..5.0, 0.1f64..3.0, any::<bool>(), 0usize..3).prop_map(|(seed, at, w, calibrate, fields)| {
        format!(
            "experiment = \"trace\"\nseed = {seed}\n[domain]\nkind = \"half_line\"\n\
             [measure]\nkind = \"point_mass\"\nat = {at:?}\nweight = {w:?}\n\
             [params]\nlambdas = [0.25, {at:?}]\ncalibrate = {calibrate}\ndtn_fields = {fields}\n"
        )
    })
}

fn escape() -> impl Strategy<Value = String> {
    (0u64..1000, 0.3f64..0.5, 0.05f64..0.3).prop_map(|(seed, r, eps)| {
        format!(
            "experiment = \"escape\"\nseed = {seed}\n[domain]\nkind = \"dumbbell\"\n\
             [measure]\nkind = \"uniform\"\ncenter = [2.0, 0.0]\nradius = {r:?}\nweight = 1.0\n\
             [params]\neps_grid = [{eps:?}, 0.4]\nn_paths = 10\n"
        )
    })
}

fn spectral_disk() -> impl Strategy<Value = String> {
    (0.1f64..0.5, -0.3f64..0.3, 1usize..30).prop_map(|(r, y, modes)| {
        format!(
            "experiment = \"spectral\"\n[domain]\nkind = \"disk\"\n\
             [measure]\nkind = \"point_mass\"\nat = [{r:?}, {y:?}]\n\
             [params]\nfunction = \"quadratic\"\nmodes = {modes}\n"
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn render_then_parse_is_identity(text in prop_oneof![simulate(), trace(), escape(), spectral_disk()]) {
        let cfg = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let again = parse_config(&render(&cfg)).map_err(|e| TestCaseError::fail(format!("{e}\n{}", render(&cfg))))?;
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(render(&again), render(&cfg));
    }

    #[test]
    fn step_larger_than_horizon_is_rejected(t in 1e-4f64..1.0, factor in 1.01f64..100.0) {
        let text = format!(
            "experiment = \"simulate\"\n[domain]\nkind = \"interval\"\n[measure]\nkind = \"zero\"\n\
             [params]\nt_end = {t:?}\nh = {:?}\n", t * factor
        );
        let err = parse_config(&text).unwrap_err();
        prop_assert!(err.mentions("params.h"), "{}", err);
    }
}

use proptest::prelude::*;
use stokes_gap::asymptotics::{band_ratio, fit_rate, RateModel};
use stokes_gap::aux_fields::AuxField;
use stokes_gap::config::parse_config;
use stokes_gap::geometry::GapGeometry;
use stokes_gap::rigid::{basis_size, RigidMotion};
use stokes_gap::stokes_mfs::stokeslet_kernel;

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-2.0f64..2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stokeslet_is_divergence_free_and_reciprocal(y in vec3(), x in vec3(), g in vec3(), h in vec3()) {
        let r = ((x[0]-y[0]).powi(2) + (x[1]-y[1]).powi(2) + (x[2]-y[2]).powi(2)).sqrt();
        prop_assume!(r > 0.1);
        let k = stokeslet_kernel(&y, &g, &x, 1.3).unwrap();
        let scale = k.grad.iter().flatten().fold(1e-300f64, |m, v| m.max(v.abs()));
        prop_assert!((k.grad[0][0] + k.grad[1][1] + k.grad[2][2]).abs() < 1e-12 * scale);
        // h . G(x, y) g = g . G(y, x) h
        let back = stokeslet_kernel(&x, &h, &y, 1.3).unwrap();
        let lhs: f64 = (0..3).map(|i| h[i] * k.velocity[i]).sum();
        let rhs: f64 = (0..3).map(|i| g[i] * back.velocity[i]).sum();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (lhs.abs() + rhs.abs() + 1e-300));
    }

    #[test]
    fn rigid_motions_have_skew_gradients(d in 2usize..7, pick in 0usize..64) {
        let alpha = 1 + pick % basis_size(d);
        let g = RigidMotion::new(d, alpha).unwrap().gradient();
        for i in 0..d {
            for k in 0..d {
                prop_assert_eq!(g[i][k], -g[k][i]);
            }
        }
    }

    #[test]
    fn aux_fields_are_solenoidal_and_match_boundary_data(
        log_eps in -4.0f64..-1.0,
        r in 0.0f64..0.5,
        phi in 0.0f64..std::f64::consts::TAU,
        t in -1.0f64..1.0,
        i in 1usize..=2,
        alpha in 1usize..=6,
    ) {
        let geom = GapGeometry::new(3, 10f64.powf(log_eps)).unwrap();
        let xp = [0.999 * r * phi.cos(), 0.999 * r * phi.sin()];
        let (top, bottom) = (geom.top(&xp), geom.bottom(&xp));
        let x3 = 0.5 * (top + bottom) + 0.5 * t * (top - bottom);
        let field = AuxField::new(&geom, i, alpha, 1.0).unwrap();
        let s = field.eval(&[xp[0], xp[1], x3]).unwrap();
        let delta = geom.delta(&xp).unwrap();
        prop_assert!(s.divergence.abs() < 1e-9 / delta);
        let on_top = field.eval(&[xp[0], xp[1], top]).unwrap().value;
        let on_bottom = field.eval(&[xp[0], xp[1], bottom]).unwrap().value;
        let psi_top = field.motion.eval(&[xp[0], xp[1], top]);
        let psi_bottom = field.motion.eval(&[xp[0], xp[1], bottom]);
        for k in 0..3 {
            let (want_top, want_bottom) = if i == 1 { (psi_top[k], 0.0) } else { (0.0, psi_bottom[k]) };
            prop_assert!((on_top[k] - want_top).abs() < 1e-12);
            prop_assert!((on_bottom[k] - want_bottom).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_thickness_is_positive_and_grows_outward(log_eps in -4.0f64..-1.0, r in 0.0f64..0.49) {
        let geom = GapGeometry::new(3, 10f64.powf(log_eps)).unwrap();
        let d0 = geom.delta(&[r, 0.0]).unwrap();
        let d1 = geom.delta(&[r + 0.01, 0.0]).unwrap();
        prop_assert!(d0 >= geom.eps && d1 > d0);
    }

    #[test]
    fn fit_recovers_exponents(s in 0.2f64..2.0, t in -1.0f64..1.5, c in 0.1f64..10.0) {
        let eps: Vec<f64> = (0..7).map(|k| 0.1 * 10f64.powf(-0.25 * k as f64)).collect();
        let y: Vec<f64> = eps.iter().map(|e| c * e.powf(-s) * e.ln().abs().powf(-t)).collect();
        let f = fit_rate(&eps, &y, RateModel::PowerLog { t: None }).unwrap();
        prop_assert!((f.exponent - s).abs() < 1e-6 && (f.log_power - t).abs() < 1e-5);
        let p = fit_rate(&eps, &y, RateModel::PowerLog { t: Some(t) }).unwrap();
        prop_assert!((p.exponent - s).abs() < 1e-9);
        prop_assert!(p.band_ratio() < 1.0 + 1e-9);
    }

    #[test]
    fn band_ratio_is_scale_invariant(v in prop::collection::vec(0.01f64..100.0, 2..10), k in 0.01f64..100.0) {
        let scaled: Vec<f64> = v.iter().map(|x| -k * x).collect();
        let (a, b) = (band_ratio(&v), band_ratio(&scaled));
        prop_assert!(a >= 1.0 && (a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn config_accepts_exactly_the_open_eps_interval(eps in -1.0f64..1.0) {
        let r = parse_config(&format!("eps = {eps}\n"));
        prop_assert_eq!(r.is_ok(), eps > 0.0 && eps < 0.5);
    }
}

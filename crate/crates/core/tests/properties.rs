use leocf_core::analytic::{avg_isi, avg_mui, laplace_dss, CoverageModel, IltControl};
use leocf_core::channel::{effective_gain, path_loss, ChannelConfig, Lobe};
use leocf_core::geometry::{self, distance_cdf, service_bounds, GeometryConfig, EARTH_RADIUS_KM};
use leocf_core::montecarlo::{coverage_from_samples, simulate_sinr, CsiMode};
use leocf_core::quadrature::{integrate, QuadControl};
use leocf_core::specfun::{kummer_phi, parabolic_cylinder_neg2m, NakagamiLaplace, SeriesControl};
use leocf_core::NetworkConfig;
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

fn geometry_strategy() -> impl Strategy<Value = GeometryConfig> {
    (200.0..2000.0f64, 1.0..90.0f64).prop_map(|(alt, eta)| GeometryConfig::with_altitude(alt, eta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_cdf_monotone_in_unit_range(g in geometry_strategy(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let b = service_bounds(&g);
        let span = b.r_s_max_km - b.r_s_min_km;
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        let x = b.r_s_min_km - 10.0 + (span + 20.0) * lo;
        let y = b.r_s_min_km - 10.0 + (span + 20.0) * hi;
        let (fx, fy) = (distance_cdf(x, &g), distance_cdf(y, &g));
        prop_assert!((0.0..=1.0).contains(&fx) && (0.0..=1.0).contains(&fy));
        prop_assert!(fx <= fy);
        prop_assert_eq!(distance_cdf(b.r_s_min_km, &g), 0.0);
        prop_assert!((distance_cdf(b.r_s_max_km, &g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertical_height_matches_dot_product(g in geometry_strategy(), u in 0.0..1.0f64, phi in 0.0..std::f64::consts::TAU) {
        // Shell point above the horizon at colatitude with cos in [R_E/R_S, 1].
        let c = geometry::horizon_cos(&g);
        let z = c + (1.0 - c) * u;
        let rho = (1.0 - z * z).sqrt();
        let sap = geometry::SphericalPoint::new([rho * phi.cos(), rho * phi.sin(), z], g.shell_radius_km);
        let ut = geometry::SphericalPoint::new([0.0, 0.0, 1.0], g.earth_radius_km);
        let d = ut.distance_to(&sap);
        let h = geometry::vertical_height_of(d, &g).unwrap();
        let direct = g.shell_radius_km * z - g.earth_radius_km;
        prop_assert!((h - direct).abs() < 1e-9, "{} vs {}", h, direct);
    }

    #[test]
    fn kummer_contiguous_relation(a in 1.0..6.0f64, b in 0.5..6.0f64, z in -25.0..25.0f64) {
        let ctl = SeriesControl::default();
        let f = kummer_phi(a, b, z, &ctl).unwrap();
        let f1 = kummer_phi(a - 1.0, b, z, &ctl).unwrap();
        let f2 = kummer_phi(a, b + 1.0, z, &ctl).unwrap();
        let scale = f.abs().max(f1.abs()).max((z / b * f2).abs());
        prop_assert!((f - f1 - z / b * f2).abs() <= 1e-9 * scale, "{} {} {}", f, f1, f2);
    }

    #[test]
    fn path_loss_strictly_decreasing(alpha in 0.5..5.0f64, d in 1.0..5000.0f64, step in 1e-3..100.0f64) {
        let c = ChannelConfig { path_loss_exponent: alpha, ..Default::default() };
        prop_assert!(path_loss(d + step, &c).unwrap() < path_loss(d, &c).unwrap());
    }

    #[test]
    fn gain_depends_on_total_db(x in -20.0..40.0f64, y in -20.0..40.0f64) {
        let a = ChannelConfig { tx_gain_mainlobe_db: x, rx_gain_db: y, ..Default::default() };
        let b = ChannelConfig { tx_gain_mainlobe_db: y, rx_gain_db: x, ..Default::default() };
        let (ga, gb) = (effective_gain(Lobe::Main, &a).unwrap(), effective_gain(Lobe::Main, &b).unwrap());
        prop_assert!((ga - gb).abs() <= 1e-13 * ga);
    }

    #[test]
    fn mui_coefficient_bounded_and_increasing(l1 in 1e-7..1e-4f64, f in 1.01..10.0f64) {
        let mut cfg = NetworkConfig::reference();
        let unit = cfg.tx_power_data * cfg.gain_main();
        cfg.ut_density = l1;
        let m1 = avg_mui(&cfg);
        cfg.ut_density = l1 * f;
        let m2 = avg_mui(&cfg);
        prop_assert!(m1 <= m2);
        // The coefficient multiplies ρ_d G_ml E[Σ β|h|²]; with the coefficient at 1
        // the MUI would equal that sum.
        cfg.ut_density = 1.0;
        let ceiling = avg_mui(&cfg);
        prop_assert!(m2 <= ceiling * (1.0 + 1e-12));
        prop_assert!(m1 >= 0.0 && unit > 0.0);
    }

    #[test]
    fn isi_linear_in_sidelobe_gain(db in -10.0..30.0f64) {
        let mut cfg = NetworkConfig::reference();
        cfg.channel.tx_gain_sidelobe_db = db;
        let one = avg_isi(&cfg);
        cfg.channel.tx_gain_sidelobe_db = db + 10.0 * 2f64.log10();
        let two = avg_isi(&cfg);
        prop_assert!((two / one - 2.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dss_transform_conjugate_symmetric_and_bounded(re in 0.0..400.0f64, im in -400.0..400.0f64, eta in 30.0..90.0f64) {
        let mut cfg = NetworkConfig::reference();
        cfg.geometry = GeometryConfig::with_altitude(500.0, eta).unwrap();
        let s = Complex64::new(re, im);
        let l = laplace_dss(s, &cfg).unwrap();
        let lc = laplace_dss(s.conj(), &cfg).unwrap();
        prop_assert!(l.norm() <= 1.0 + 1e-12);
        prop_assert!((l - lc.conj()).norm() <= 1e-12 * l.norm().max(1e-300) + 1e-15);
    }

    #[test]
    fn analytic_coverage_monotone(g_db in -5.0..15.0f64, step in 0.1..3.0f64, lam in 1e-6..1e-5f64) {
        let ilt = IltControl::default();
        let mut cfg = NetworkConfig::reference();
        cfg.ut_density = lam;
        let model = CoverageModel::new(&cfg, &ilt).unwrap();
        let lin = |db: f64| 10f64.powf(db / 10.0);
        let a = model.coverage(lin(g_db)).unwrap().probability;
        let b = model.coverage(lin(g_db + step)).unwrap().probability;
        // Quadrature error in the transform, amplified by the Euler sum,
        // leaves the inverted values with noise of order 1e-5.
        prop_assert!(b <= a + 2e-5, "{} {}", a, b);
        cfg.ut_density = lam * 1.5;
        let c = CoverageModel::new(&cfg, &ilt).unwrap().coverage(lin(g_db)).unwrap().probability;
        prop_assert!(c <= a + 2e-5, "{} {}", a, c);
    }
}

#[test]
fn empirical_coverage_monotone_in_threshold() {
    let cfg = NetworkConfig::reference();
    let samples = simulate_sinr(&cfg, 2000, CsiMode::Perfect, 5).unwrap();
    let th: Vec<f64> = (-10..=20).map(|x| x as f64 * 0.5).collect();
    let est = coverage_from_samples(&samples, &th);
    assert!(est.curve.coverage.windows(2).all(|w| w[1] <= w[0]));
}

fn nakagami_density(x: f64, m: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (2f64.ln() + m * m.ln() - ln_gamma(m) + (2.0 * m - 1.0) * x.ln() - m * x * x).exp()
}

/// E[e^{-s β^{1/2} |h|}] by direct quadrature against the Nakagami density
/// and in closed form through D_{-2m}, on a 5 × 5 × 5 grid.
#[test]
fn amplitude_transform_matches_quadrature() {
    let ctl = SeriesControl::default();
    let quad = QuadControl {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_evals: 1 << 16,
    };
    let mut worst: f64 = 0.0;
    for &m in &[0.5, 1.0, 1.7, 2.5, 4.0] {
        let lap = NakagamiLaplace::new(m, 1.0, ctl).unwrap();
        for &s in &[0.1f64, 0.5, 1.0, 2.5, 5.0] {
            for &beta in &[0.01f64, 0.2, 1.0, 2.0, 4.0] {
                let a = s * beta.sqrt();
                let direct = integrate(|x| (-a * x).exp() * nakagami_density(x, m), 0.0, 12.0, &quad)
                    .unwrap()
                    .value;
                let (ln_g2m, ln_gm) = (ln_gamma(2.0 * m), ln_gamma(m));
                let pre = (ln_g2m - ln_gm - (m - 1.0) * 2f64.ln() + s * s * beta / (8.0 * m)).exp();
                let closed = pre * parabolic_cylinder_neg2m(m, s * (beta / (2.0 * m)).sqrt(), &ctl).unwrap();
                let via_struct = lap.eval(Complex64::new(a, 0.0)).unwrap().re;
                let e1 = (closed - direct).abs() / direct;
                let e2 = (via_struct - direct).abs() / direct;
                worst = worst.max(e1).max(e2);
                assert!(e1 < 1e-7 && e2 < 1e-7, "m={m} s={s} β={beta}: {direct} {closed} {via_struct}");
            }
        }
    }
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn functions_are_deterministic() {
    let ctl = SeriesControl::default();
    let a = parabolic_cylinder_neg2m(1.3, 2.7, &ctl).unwrap();
    let b = parabolic_cylinder_neg2m(1.3, 2.7, &ctl).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let cfg = NetworkConfig::reference();
    let s = Complex64::new(3.0, 40.0);
    assert_eq!(laplace_dss(s, &cfg).unwrap(), laplace_dss(s, &cfg).unwrap());
}

#[test]
fn earth_radius_default() {
    let g = GeometryConfig::with_altitude(500.0, 75.0).unwrap();
    assert_eq!(g.earth_radius_km, EARTH_RADIUS_KM);
}

use cwglauber::chain::{build_kernel, stationary};
use cwglauber::electrical::{commute_time, effective_resistance, hitting_time, network, t_exp, zeta};
use cwglauber::ModelParams64;

const BETAS: [f64; 4] = [1.1, 1.2, 1.3, 1.5];

fn sizes() -> impl Iterator<Item = usize> {
    (20..=200).step_by(10)
}

#[test]
fn commute_time_methods_agree() {
    for n in sizes() {
        for beta in BETAS {
            let c = build_kernel(&ModelParams64::new(n, beta).unwrap());
            let kz = c.nearest_state(zeta(beta).unwrap());
            let r = commute_time(&c, c.origin(), kz).unwrap();
            let rel = (r.network.log_expected - r.recurrence.log_expected).abs();
            assert!(rel <= 1e-9, "n={n} β={beta}: {rel}");
            assert!(r.doubled_loops_ratio >= 1.0 - 1e-9 && r.doubled_loops_ratio <= 2.0);
        }
    }
}

#[test]
fn odd_sizes_commute_identity() {
    for n in [21, 55, 99] {
        let c = build_kernel(&ModelParams64::new(n, 1.2).unwrap());
        for (x, y) in [(0, n), (3, 17), (n / 2, n)] {
            let r = commute_time(&c, x, y).unwrap();
            assert!((r.network_ratio - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn crossing_time_is_the_commute_time() {
    // E_ζ τ_{-ζ} = E_ζ τ_0 + E_0 τ_{-ζ} = E_ζ τ_0 + E_0 τ_ζ by symmetry.
    for n in sizes() {
        for beta in BETAS {
            let c = build_kernel(&ModelParams64::new(n, beta).unwrap());
            let kz = c.nearest_state(zeta(beta).unwrap());
            let cross = hitting_time(&c, kz, n - kz).unwrap().log_expected;
            let commute = commute_time(&c, c.origin(), kz).unwrap().recurrence.log_expected;
            assert!((cross - commute).abs() <= 1e-10, "n={n} β={beta}");
        }
    }
}

#[test]
fn total_conductance_scale() {
    // c_S / (√(n/δ) c_ζ) once δ²n is large enough for the asymptotics to bite.
    for beta in [1.2, 1.3, 1.5] {
        for n in [100, 200, 400, 800] {
            let p = ModelParams64::new(n, beta).unwrap();
            if p.scaled_distance() < 10.0 {
                continue;
            }
            let c = build_kernel(&p);
            let net = network(&c).unwrap();
            let kz = c.nearest_state(zeta(beta).unwrap());
            let ratio = (net.log_c_s - net.log_c[kz] - 0.5 * (n as f64 / p.delta()).ln()).exp();
            assert!((0.05..=20.0).contains(&ratio), "n={n} β={beta}: {ratio}");
        }
    }
}

#[test]
fn supercritical_crossing_tracks_t_exp() {
    let ratios: Vec<f64> = [40, 80, 160]
        .iter()
        .map(|&n| {
            let p = ModelParams64::new(n, 1.3).unwrap();
            let c = build_kernel(&p);
            let kz = c.nearest_state(zeta(1.3).unwrap());
            let e = hitting_time(&c, n, n - kz).unwrap().log_expected;
            (e - t_exp(&p).unwrap().log_value).exp()
        })
        .collect();
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    assert!(hi / lo <= 3.0, "{ratios:?}");
}

#[test]
fn upper_well_carries_mass() {
    for beta in [1.1, 1.3, 1.5] {
        for n in [40, 200, 1000] {
            let c = build_kernel(&ModelParams64::new(n, beta).unwrap());
            let pi = stationary(&c).unwrap();
            let kz = c.nearest_state(zeta(beta).unwrap());
            let mass = pi.mass(kz, n);
            assert!(mass >= 0.05, "n={n} β={beta}: {mass}");
        }
    }
}

#[test]
fn resistance_to_zeta_grows_like_square_root() {
    let beta = 1.2;
    let scaled: Vec<f64> = [400, 800, 1600, 3200]
        .iter()
        .map(|&n| {
            let c = build_kernel(&ModelParams64::new(n, beta).unwrap());
            let net = network(&c).unwrap();
            let kz = c.nearest_state(zeta(beta).unwrap());
            effective_resistance(&net, c.origin(), kz).unwrap().exp() / (n as f64 / 0.2).sqrt()
        })
        .collect();
    for w in scaled.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{scaled:?}");
    }
}

//! Electrical-network view of the magnetization chain: conductances,
//! effective resistance, exact hitting and commute times, the positive root
//! `ζ` of `tanh(βx) = x` and the low-temperature time scale `t_exp`.
//!
//! Every quantity is kept in the log domain; the conductance at `ζ` grows
//! like `exp(Θ(n))` and overflows `f64` around `n ≈ 200` for `β` near 1.5.

use serde::Serialize;

use crate::chain::{stationary, ChainKind, MagChain};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quad::adaptive_simpson;
use crate::real::{finite_exp, log_add_exp, log_sum_exp, Real};

/// Conductances of a birth-and-death chain, edge `e` joining states `e` and
/// `e + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElectricalNetwork<T> {
    /// `log r_e`
    pub log_r: Vec<T>,
    /// `log c_e = -log r_e`
    pub log_c: Vec<T>,
    /// `log c'_x`, the self-loop conductance of each state.
    pub log_c_loop: Vec<T>,
    /// `log Σ_x (c_x + c'_x)` over all edges and loops.
    pub log_c_s: T,
    /// `log Σ_x w(x)` with vertex weight `w(x) = (c_{x-} + c_x)/(p_x + q_x)`.
    pub log_vertex_total: T,
    /// State whose outgoing edge has unit conductance.
    pub reference: usize,
}

impl<T: Real> ElectricalNetwork<T> {
    pub fn edges(&self) -> usize {
        self.log_c.len()
    }


    /// `log w(x)`; equals `log π(x)` up to one additive constant.
    pub fn log_vertex_weight(&self, x: usize) -> T {
        let left = if x > 0 { self.log_c[x - 1] } else { T::neg_infinity() };
        let right = self.log_c.get(x).copied().unwrap_or(T::neg_infinity());
        let loop_c = self.log_c_loop[x];
        log_add_exp(log_add_exp(left, right), loop_c)
    }
}

/// Builds the network of `chain`.
///
/// Nonnegative-side conductances are the telescoping products
/// `c_x = Π_{y ∈ (0, x]} p_y / q_y` with unit conductance on the edge leaving
/// the origin; negative-side values of the free chain follow by the spin-flip
/// symmetry `c_{-x - 2/n} = c_x`.
pub fn network<T: Real>(chain: &MagChain<T>) -> Result<ElectricalNetwork<T>> {
    let m = chain.len();
    if m < 2 {
        return Err(Error::Degenerate("single-state chain has no edges".into()));
    }
    let (p, q, h) = (chain.up(), chain.down(), chain.hold());
    for e in 0..m - 1 {
        if !(p[e] > T::zero()) || !(q[e + 1] > T::zero()) {
            return Err(Error::Degenerate(format!(
                "edge {e}-{} has zero transition probability",
                e + 1
            )));
        }
    }
    let reference = chain.origin();
    let mut log_c = vec![T::zero(); m - 1];
    for e in reference + 1..m - 1 {
        log_c[e] = log_c[e - 1] + p[e].ln() - q[e].ln();
    }
    if chain.kind() == ChainKind::Free {
        let n = chain.params().n();
        if n % 2 == 1 {
            // the central edge (-1/n, 1/n) is its own mirror image
            let e = reference;
            log_c[e - 1] = log_c[e] - p[e].ln() + q[e].ln();
        }
        let first_mirrored = if n % 2 == 1 { reference - 1 } else { reference };
        for e in 0..first_mirrored {
            log_c[e] = log_c[m - 2 - e];
        }
    }
    let mut log_c_loop = Vec::with_capacity(m);
    let mut vertex = Vec::with_capacity(m);
    for x in 0..m {
        let left = if x > 0 { log_c[x - 1] } else { T::neg_infinity() };
        let right = log_c.get(x).copied().unwrap_or(T::neg_infinity());
        let edges = log_add_exp(left, right);
        let move_prob = (p[x] + q[x]).ln();
        log_c_loop.push(h[x].ln() - move_prob + edges);
        vertex.push(edges - move_prob);
    }
    let log_c_s = log_add_exp(log_sum_exp(&log_c), log_sum_exp(&log_c_loop));
    Ok(ElectricalNetwork {
        log_r: log_c.iter().map(|&c| -c).collect(),
        log_c,
        log_c_loop,
        log_c_s,
        log_vertex_total: log_sum_exp(&vertex),
        reference,
    })
}

/// `log R(x ↔ y) = log Σ_{e ∈ [x, y)} r_e`.
pub fn effective_resistance<T: Real>(net: &ElectricalNetwork<T>, x: usize, y: usize) -> Result<T> {
    if x >= y || y > net.edges() {
        return Err(Error::OutOfRange {
            what: "resistance range",
            detail: format!("[{x}, {y}) with {} edges", net.edges()),
        });
    }
    Ok(log_sum_exp(&net.log_r[x..y]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HittingMethod {
    /// Birth-and-death ladder sums over the stationary law.
    Recurrence,
    /// Total vertex weight times effective resistance.
    Network,
    /// `2 c_S R` with `c_S` counting every self-loop once per endpoint pair.
    NetworkDoubledLoops,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingReport<T> {
    pub source: usize,
    pub target: usize,
    pub log_expected: T,
    /// Linear value when representable.
    pub expected: Option<T>,
    pub method: HittingMethod,
}

impl<T: Real> HittingReport<T> {
    fn new(source: usize, target: usize, log_expected: T, method: HittingMethod) -> Self {
        Self {
            source,
            target,
            log_expected,
            expected: finite_exp(log_expected),
            method,
        }
    }
}

/// Exact `E_x τ_y` from the ladder identities
/// `E_k τ_{k+1} = π([0, k]) / (π(k) p_k)` and
/// `E_k τ_{k-1} = π([k, end]) / (π(k) q_k)`.
pub fn hitting_time<T: Real>(chain: &MagChain<T>, x: usize, y: usize) -> Result<HittingReport<T>> {
    let m = chain.len();
    if x == y || x >= m || y >= m {
        return Err(Error::OutOfRange {
            what: "hitting endpoints",
            detail: format!("x = {x}, y = {y} on {m} states"),
        });
    }
    let pi = stationary(chain)?;
    let lp = pi.log_probs();
    let mut terms = Vec::with_capacity(x.abs_diff(y));
    if x < y {
        let mut below = T::neg_infinity();
        for k in 0..y {
            below = log_add_exp(below, lp[k]);
            if k >= x {
                let up = chain.up()[k];
                if !(up > T::zero()) {
                    return Err(Error::Degenerate(format!("state {k} cannot move up")));
                }
                terms.push(below - lp[k] - up.ln());
            }
        }
    } else {
        let mut above = T::neg_infinity();
        for k in (y + 1..m).rev() {
            above = log_add_exp(above, lp[k]);
            if k <= x {
                let down = chain.down()[k];
                if !(down > T::zero()) {
                    return Err(Error::Degenerate(format!("state {k} cannot move down")));
                }
                terms.push(above - lp[k] - down.ln());
            }
        }
    }
    Ok(HittingReport::new(x, y, log_sum_exp(&terms), HittingMethod::Recurrence))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommuteReport<T> {
    /// `E_x τ_y + E_y τ_x`, authoritative.
    pub recurrence: HittingReport<T>,
    /// `W · R(x ↔ y)`.
    pub network: HittingReport<T>,
    /// `2 c_S · R(x ↔ y)`.
    pub doubled_loops: HittingReport<T>,
    /// network / recurrence
    pub network_ratio: T,
    /// doubled-loops / recurrence
    pub doubled_loops_ratio: T,
}

pub fn commute_time<T: Real>(chain: &MagChain<T>, x: usize, y: usize) -> Result<CommuteReport<T>> {
    let there = hitting_time(chain, x, y)?;
    let back = hitting_time(chain, y, x)?;
    let recurrence = HittingReport::new(
        x,
        y,
        log_add_exp(there.log_expected, back.log_expected),
        HittingMethod::Recurrence,
    );
    let net = network(chain)?;
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let log_r = effective_resistance(&net, lo, hi)?;
    let network = HittingReport::new(x, y, net.log_vertex_total + log_r, HittingMethod::Network);
    let doubled_loops = HittingReport::new(
        x,
        y,
        T::LN_2() + net.log_c_s + log_r,
        HittingMethod::NetworkDoubledLoops,
    );
    Ok(CommuteReport {
        recurrence,
        network,
        doubled_loops,
        network_ratio: (network.log_expected - recurrence.log_expected).exp(),
        doubled_loops_ratio: (doubled_loops.log_expected - recurrence.log_expected).exp(),
    })
}

/// `g(x) = (tanh(βx) - x) / (1 - x tanh(βx))`.
#[inline]
pub fn g_eval<T: Real>(x: T, beta: T) -> T {
    let t = (beta * x).tanh();
    (t - x) / (T::one() - x * t)
}

/// Unique positive root of `tanh(βx) = x`, by bisection to `1e-12` (or to
/// the resolution of `T`).
pub fn zeta<T: Real>(beta: T) -> Result<T> {
    if !(beta > T::one()) {
        return Err(Error::NoPositiveRoot { beta: beta.as_f64() });
    }
    let f = |x: T| (beta * x).tanh() - x;
    // f > 0 on (0, ζ); shrink the lower end until it sits inside.
    let mut lo = T::of(1e-3);
    while !(f(lo) > T::zero()) {
        lo = lo / T::of(16.0);
        if lo < T::min_positive_value() {
            return Err(Error::NoPositiveRoot { beta: beta.as_f64() });
        }
    }
    let mut hi = T::one();
    let tol = T::of(1e-12);
    loop {
        let mid = (lo + hi) / T::of(2.0);
        if hi - lo <= tol || !(mid > lo && mid < hi) {
            return Ok(mid);
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `t_exp = (n/δ) exp((n/2) ∫₀^ζ log((1+g)/(1-g)) dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TExp<T> {
    pub zeta: T,
    /// `∫₀^ζ log((1+g)/(1-g)) dx`
    pub integral: T,
    /// `(n/2) · integral`
    pub exponent: T,
    pub log_value: T,
    pub value: Option<T>,
}

pub fn t_exp<T: Real>(params: &ModelParams<T>) -> Result<TExp<T>> {
    let beta = params.beta();
    let z = zeta(beta)?;
    let integrand = |x: T| {
        let g = g_eval(x, beta);
        g.ln_1p() - (-g).ln_1p()
    };
    let integral = adaptive_simpson(integrand, T::zero(), z, T::of(1e-10), T::zero());
    let n = T::of_usize(params.n());
    let exponent = n / T::of(2.0) * integral;
    let log_value = (n / params.delta()).ln() + exponent;
    Ok(TExp {
        zeta: z,
        integral,
        exponent,
        log_value,
        value: finite_exp(log_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_kernel;

    fn chain(n: usize, beta: f64) -> MagChain<f64> {
        build_kernel(&ModelParams::new(n, beta).unwrap())
    }

    #[test]
    fn zeta_requires_supercritical_beta() {
        assert!(matches!(zeta(1.0f64), Err(Error::NoPositiveRoot { .. })));
        assert!(zeta(0.5f64).is_err());
    }

    #[test]
    fn zeta_matches_independent_root() {
        // Independent bisection of tanh(1.2x) = x: 0.6585696604057539
        let z = zeta(1.2f64).unwrap();
        assert!((z - 0.658_569_660_405_753_9).abs() < 1e-11);
        assert!(((1.2 * z).tanh() - z).abs() < 1e-12);
    }

    #[test]
    fn zeta_small_delta_asymptotics() {
        let d = 0.01f64;
        let r = zeta(1.0 + d).unwrap() / (3.0 * d).sqrt();
        assert!((0.95..=1.05).contains(&r), "{r}");
    }

    #[test]
    fn g_vanishes_at_zeta() {
        let z = zeta(1.4f64).unwrap();
        assert!(g_eval(z, 1.4).abs() < 1e-12);
        assert_eq!(g_eval(0.0f64, 1.4), 0.0);
        assert!(g_eval(z / 2.0, 1.4) > 0.0);
        assert!(g_eval((1.0 + z) / 2.0, 1.4) < 0.0);
    }

    #[test]
    fn t_exp_small_delta_exponent() {
        let d = 0.05;
        let n = 1000;
        let te = t_exp(&ModelParams::new(n, 1.0 + d).unwrap()).unwrap();
        let r = te.exponent / (0.75 * d * d * n as f64);
        assert!((0.85..=1.15).contains(&r), "{r}");
        assert!((r - 0.943_114_745_147_820_5).abs() < 1e-6);
    }

    #[test]
    fn reference_edge_has_unit_conductance() {
        for n in [10, 11] {
            let net = network(&chain(n, 1.3)).unwrap();
            assert_eq!(net.log_c[net.reference], 0.0);
        }
    }

    #[test]
    fn conductance_ratio_telescopes_on_both_sides() {
        for n in [30, 31] {
            let c = chain(n, 1.25);
            let net = network(&c).unwrap();
            for e in 0..net.edges() - 1 {
                let x = e + 1;
                let lhs = net.log_c[e + 1] - net.log_c[e];
                let rhs = c.up()[x].ln() - c.down()[x].ln();
                assert!((lhs - rhs).abs() < 1e-12, "n={n} e={e}");
                assert!((net.log_r[e] + net.log_c[e]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn vertex_weights_are_stationary_law() {
        let c = chain(41, 1.1);
        let net = network(&c).unwrap();
        let pi = stationary(&c).unwrap();
        for x in 0..c.len() {
            let lw = net.log_vertex_weight(x) - net.log_vertex_total;
            assert!((lw - pi.log_probs()[x]).abs() < 1e-10);
        }
    }

    #[test]
    fn series_resistance_is_additive() {
        let net = network(&chain(50, 1.2)).unwrap();
        assert_eq!(effective_resistance(&net, 7, 8).unwrap(), net.log_r[7]);
        for (x, y, z) in [(0, 10, 50), (3, 25, 26), (20, 30, 44)] {
            let lhs = effective_resistance(&net, x, z).unwrap();
            let rhs = log_add_exp(
                effective_resistance(&net, x, y).unwrap(),
                effective_resistance(&net, y, z).unwrap(),
            );
            assert!((lhs - rhs).abs() < 1e-12);
        }
        assert!(effective_resistance(&net, 5, 5).is_err());
        assert!(effective_resistance(&net, 5, 51).is_err());
    }

    #[test]
    fn single_edge_hitting_time() {
        // n = 2, β = 0: from s = 1 to s = 0 the only exit is q = 1 · p-(1/2) = 1/2.
        let c = chain(2, 0.0);
        let r = hitting_time(&c, 2, 1).unwrap();
        assert!((r.expected.unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(r.method, HittingMethod::Recurrence);
        assert!(hitting_time(&c, 1, 1).is_err());
    }

    #[test]
    fn hitting_time_first_step_analysis() {
        // Solve E_k τ_0 = 1 + Σ_j P(k, j) E_j τ_0 directly as a linear system.
        let c = chain(8, 0.9);
        let m = c.len();
        let mut a = nalgebra::DMatrix::<f64>::zeros(m - 1, m - 1);
        let b = nalgebra::DVector::<f64>::from_element(m - 1, 1.0);
        for k in 1..m {
            let r = k - 1;
            a[(r, r)] = 1.0 - c.hold()[k];
            if k + 1 < m {
                a[(r, r + 1)] = -c.up()[k];
            }
            if k > 1 {
                a[(r, r - 1)] = -c.down()[k];
            }
        }
        let sol = a.lu().solve(&b).unwrap();
        for k in 1..m {
            let e = hitting_time(&c, k, 0).unwrap().expected.unwrap();
            assert!((e - sol[k - 1]).abs() / sol[k - 1] < 1e-12);
        }
    }

    #[test]
    fn hitting_from_top_dominates() {
        let c = chain(60, 1.1);
        let o = c.origin();
        let top = hitting_time(&c, 60, o).unwrap().log_expected;
        for x in o + 1..60 {
            assert!(hitting_time(&c, x, o).unwrap().log_expected <= top);
        }
    }

    #[test]
    fn path_decomposition_through_origin() {
        let (n, beta) = (60, 1.3);
        let c = chain(n, beta);
        let kz = c.nearest_state(zeta(beta).unwrap());
        let kmz = n - kz;
        let o = c.origin();
        let direct = hitting_time(&c, kz, kmz).unwrap().log_expected;
        let commute = commute_time(&c, o, kz).unwrap().recurrence.log_expected;
        assert!((direct - commute).abs() <= 1e-10);
    }

    #[test]
    fn commute_time_symmetric_and_methods_agree() {
        let (n, beta) = (40, 1.2);
        let c = chain(n, beta);
        let kz = c.nearest_state(zeta(beta).unwrap());
        let o = c.origin();
        let a = commute_time(&c, o, kz).unwrap();
        let b = commute_time(&c, kz, o).unwrap();
        assert!((a.recurrence.log_expected - b.recurrence.log_expected).abs() < 1e-12);
        assert!((a.network_ratio - 1.0).abs() < 1e-9);
        assert!(a.doubled_loops_ratio >= 1.0 - 1e-12 && a.doubled_loops_ratio <= 2.0);
    }

    #[test]
    fn conductance_peaks_near_zeta() {
        let (n, beta) = (100, 1.3);
        let c = chain(n, beta);
        let net = network(&c).unwrap();
        let o = c.origin();
        let arg = (o..net.edges())
            .max_by(|&a, &b| net.log_c[a].total_cmp(&net.log_c[b]))
            .unwrap();
        let kz = c.nearest_state(zeta(beta).unwrap());
        assert!(arg.abs_diff(kz) <= 2, "argmax {arg} vs ζ state {kz}");
    }

    #[test]
    fn resistance_to_zeta_scale() {
        let (n, beta) = (400, 1.2);
        let c = chain(n, beta);
        let net = network(&c).unwrap();
        let kz = c.nearest_state(zeta(beta).unwrap());
        let r = effective_resistance(&net, c.origin(), kz).unwrap().exp() / (n as f64 / 0.2).sqrt();
        assert!(r >= (-4.0f64).exp() && r <= 4.0, "{r}");
    }

    #[test]
    fn resistance_non_increasing_up_to_zeta() {
        for (n, beta) in [(200, 1.1), (201, 1.5)] {
            let c = chain(n, beta);
            let net = network(&c).unwrap();
            let kz = c.nearest_state(zeta(beta).unwrap());
            for e in net.reference + 1..kz {
                assert!(net.log_r[e] <= net.log_r[e - 1] + 1e-12);
                assert!(net.log_r[e] <= 1e-12);
            }
        }
    }

    #[test]
    fn censored_network_uses_bottom_reference() {
        let c = crate::chain::build_censored_kernel(&ModelParams::new(20, 1.3f64).unwrap());
        let net = network(&c).unwrap();
        assert_eq!(net.reference, 0);
        assert_eq!(net.log_c[0], 0.0);
        let a = commute_time(&c, 0, 8).unwrap();
        assert!((a.network_ratio - 1.0).abs() < 1e-9);
    }
}

//! Spectral gaps of the magnetization chain and of the full `2^n`-state
//! dynamics.

mod full;
mod tridiag;

pub use full::{
    full_dynamics_gap, full_dynamics_gap_with, full_stationary, full_tv_from_allplus, full_tv_series_from_allplus,
    FullMethod, MAX_DENSE_SITES, MAX_FULL_SITES, MAX_TV_SITES,
};
pub use tridiag::BirthDeathGenerator;

use serde::Serialize;

use crate::chain::{stationary, MagChain};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    TridiagonalBisection,
    Dense,
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport<T> {
    /// `1 - λ₁`
    pub gap: T,
    /// Second-largest eigenvalue.
    pub lambda_1: T,
    /// Most negative eigenvalue.
    pub lambda_min: T,
    /// `1 - max(λ₁, |λ_min|)`
    pub absolute_gap: T,
    /// Whether `λ₁ >= |λ_min|`, so that the gap is also the absolute gap.
    pub gap_attained_by_second: bool,
    pub method: SpectralMethod,
    /// Largest `‖Av - λv‖∞` over the eigenpairs actually computed.
    pub residual: T,
    /// Second eigenvector in the symmetrized (`√π`-weighted) basis.
    #[serde(skip)]
    pub second_eigenvector: Option<Vec<T>>,
}

impl<T: Real> SpectralReport<T> {
    /// Takes the gap itself so that gaps below `ε` keep their precision.
    pub(crate) fn from_gap(
        gap: T,
        lambda_min: T,
        method: SpectralMethod,
        residual: T,
        second_eigenvector: Option<Vec<T>>,
    ) -> Self {
        let lambda_1 = T::one() - gap;
        let absolute_gap = gap.min(T::one() - lambda_min.abs());
        Self {
            gap,
            lambda_1,
            lambda_min,
            absolute_gap,
            gap_attained_by_second: lambda_1 >= lambda_min.abs(),
            method,
            residual,
            second_eigenvector,
        }
    }

    /// Relaxation time `1 / gap`.
    pub fn relaxation_time(&self) -> T {
        self.gap.recip()
    }
}

const MAX_INVERSE_ITERATIONS: usize = 64;

/// Spectral gap of the magnetization chain.
///
/// The symmetrized kernel `A = D^{1/2} P D^{-1/2}` (`D = diag π`) is
/// tridiagonal; its eigenvalues come from Sturm bisection on `I - A` and the
/// second eigenvector from inverse iteration kept orthogonal to `√π`.
pub fn chain_gap<T: Real>(chain: &MagChain<T>) -> Result<SpectralReport<T>> {
    let m = chain.len();
    if m < 2 {
        return Err(Error::Degenerate("single-state chain has no gap".into()));
    }
    let pi = stationary(chain)?;
    let gen = BirthDeathGenerator::new(chain.up(), chain.down());
    let mu_1 = gen.eigenvalue(1);
    let mu_max = gen.eigenvalue(m - 1);

    let top: Vec<T> = pi.log_probs().iter().map(|&l| (l / T::of(2.0)).exp()).collect();
    let top = normalized(top);
    let mut residual = gen.residual(T::zero(), &top);

    let mut v: Vec<T> = (0..m).map(|i| chain.magnetization(i) + T::of(0.25)).collect();
    project_out(&mut v, &top);
    v = normalized(v);
    let tol = T::residual_tol();
    let mut r = gen.residual(mu_1, &v);
    for _ in 0..MAX_INVERSE_ITERATIONS {
        if r <= tol / T::of(100.0) {
            break;
        }
        let mut w = gen.solve_shifted(mu_1, &v);
        project_out(&mut w, &top);
        if !w.iter().all(|x| x.is_finite()) || w.iter().all(|&x| x == T::zero()) {
            break;
        }
        w = normalized(w);
        let rw = gen.residual(mu_1, &w);
        v = w;
        if rw >= r && rw <= tol {
            r = rw;
            break;
        }
        r = rw;
    }
    residual = residual.max(r);
    if !(residual <= tol) {
        return Err(Error::Numerical {
            what: "magnetization-chain eigenpair",
            residual: residual.as_f64(),
        });
    }
    Ok(SpectralReport::from_gap(
        mu_1,
        T::one() - mu_max,
        SpectralMethod::TridiagonalBisection,
        residual,
        Some(v),
    ))
}

/// Converts a vector in the symmetrized basis to a function on states,
/// `f(k) = v_k / √π(k)`; states where `√π` underflows get `f = 0`.
pub fn eigenfunction<T: Real>(chain: &MagChain<T>, v: &[T]) -> Result<Vec<T>> {
    let pi = stationary(chain)?;
    Ok(v.iter()
        .zip(pi.log_probs())
        .map(|(&x, &l)| {
            if x == T::zero() {
                T::zero()
            } else {
                let f = x * (-l / T::of(2.0)).exp();
                if f.is_finite() {
                    f
                } else {
                    T::zero()
                }
            }
        })
        .collect())
}

/// Dirichlet quotient `E(f) / Var_π(f)` with
/// `E(f) = ½ Σ_{x,y} π(x) P(x,y) (f(x) - f(y))²`.
pub fn dirichlet_quotient<T: Real>(chain: &MagChain<T>, f: &[T]) -> Result<T> {
    let m = chain.len();
    if f.len() != m {
        return Err(Error::InvalidParams(format!("function has {} values for {m} states", f.len())));
    }
    if f.iter().all(|&x| x == f[0]) {
        return Err(Error::Degenerate("function is constant".into()));
    }
    let pi = stationary(chain)?;
    let w = pi.probs();
    let mean: T = w.iter().zip(f).map(|(&p, &x)| p * x).sum();
    let var: T = w.iter().zip(f).map(|(&p, &x)| p * (x - mean) * (x - mean)).sum();
    if !(var > T::zero()) {
        return Err(Error::Degenerate("function is constant under π".into()));
    }
    let form: T = (0..m - 1)
        .map(|k| {
            let d = f[k + 1] - f[k];
            w[k] * chain.up()[k] * d * d
        })
        .sum();
    Ok(form / var)
}

fn normalized<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let scale = v.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
    if scale > T::zero() {
        v.iter_mut().for_each(|x| *x /= scale);
    }
    let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm > T::zero() {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn project_out<T: Real>(v: &mut [T], unit: &[T]) {
    let dot: T = v.iter().zip(unit).map(|(&a, &b)| a * b).sum();
    v.iter_mut().zip(unit).for_each(|(a, &b)| *a -= dot * b);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_censored_kernel, build_kernel};
    use crate::model::ModelParams;

    fn chain(n: usize, beta: f64) -> MagChain<f64> {
        build_kernel(&ModelParams::new(n, beta).unwrap())
    }

    #[test]
    fn infinite_temperature_gap_is_one_over_n() {
        for n in [2, 5, 50, 1000] {
            let r = chain_gap(&chain(n, 0.0)).unwrap();
            assert!((r.gap - 1.0 / n as f64).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn spectrum_lies_in_unit_interval() {
        for (n, beta) in [(20, 0.5), (21, 1.0), (30, 1.5)] {
            let c = chain(n, beta);
            let gen = BirthDeathGenerator::new(c.up(), c.down());
            let spec = gen.spectrum();
            assert!(spec[0].abs() < 1e-14);
            for mu in spec {
                let lambda = 1.0 - mu;
                assert!(lambda > -1.0 && lambda <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn matches_dense_eigensolver() {
        for (n, beta) in [(40, 0.7), (41, 1.0), (30, 1.2)] {
            let c = chain(n, beta);
            let gen = BirthDeathGenerator::new(c.up(), c.down());
            let m = c.len();
            let mut a = nalgebra::DMatrix::<f64>::identity(m, m);
            for k in 0..m {
                a[(k, k)] -= gen.diag()[k];
                if k + 1 < m {
                    a[(k, k + 1)] = -gen.off()[k];
                    a[(k + 1, k)] = -gen.off()[k];
                }
            }
            let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|x, y| y.total_cmp(x));
            let r = chain_gap(&c).unwrap();
            assert!((r.lambda_1 - ev[1]).abs() < 1e-12);
            assert!((r.lambda_min - ev[m - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn laziness_bound_and_residual() {
        for (n, beta) in [(10, 0.0), (100, 0.9), (200, 1.3), (51, 1.5)] {
            let c = chain(n, beta);
            let r = chain_gap(&c).unwrap();
            let hmin = c.hold().iter().copied().fold(f64::INFINITY, f64::min);
            assert!(r.lambda_min >= 2.0 * hmin - 1.0 - 1e-10);
            assert!(r.gap > 0.0 && r.gap <= 1.0);
            assert!(r.residual <= 1e-8);
        }
    }

    #[test]
    fn subcritical_gap_scale() {
        let r = chain_gap(&chain(1000, 0.5)).unwrap();
        let scaled = r.gap * 1000.0 / 0.5;
        assert!((0.8..=1.25).contains(&scaled), "{scaled}");
    }

    #[test]
    fn dirichlet_quotient_bounds_gap() {
        let c = chain(200, 0.8);
        let r = chain_gap(&c).unwrap();
        let id: Vec<f64> = c.magnetizations();
        assert!(dirichlet_quotient(&c, &id).unwrap() >= r.gap - 1e-10);
        let f = eigenfunction(&c, r.second_eigenvector.as_ref().unwrap()).unwrap();
        let q = dirichlet_quotient(&c, &f).unwrap();
        assert!((q - r.gap).abs() < 1e-8);
        assert!(dirichlet_quotient(&c, &vec![2.0; c.len()]).is_err());
    }

    #[test]
    fn gap_below_machine_epsilon() {
        let c = chain(400, 1.5);
        let r = chain_gap(&c).unwrap();
        assert!(r.gap > 0.0 && r.gap < 1e-20, "{}", r.gap);
        assert_eq!(r.lambda_1, 1.0);
        let f = eigenfunction(&c, r.second_eigenvector.as_ref().unwrap()).unwrap();
        let q = dirichlet_quotient(&c, &f).unwrap();
        // 80-digit Sturm bisection: 4.2302615358766666776e-24
        assert!((r.gap / 4.230_261_535_876_666_7e-24 - 1.0).abs() < 1e-12);
        // eigenvector entries carry absolute error ~1e-13 where √π is tiny
        assert!(q >= r.gap * (1.0 - 1e-12) && q / r.gap - 1.0 < 1e-3, "{q} vs {}", r.gap);
    }

    #[test]
    fn supercritical_second_eigenfunction_is_odd() {
        let c = chain(80, 1.3);
        let r = chain_gap(&c).unwrap();
        let f = eigenfunction(&c, r.second_eigenvector.as_ref().unwrap()).unwrap();
        let q = dirichlet_quotient(&c, &f).unwrap();
        assert!((q / r.gap - 1.0).abs() < 1e-6);
        let m = c.len();
        for k in 0..m {
            assert!((f[k] + f[m - 1 - k]).abs() <= 1e-6 * f[k].abs().max(1.0));
        }
    }

    #[test]
    fn censored_gap_is_positive_and_resolved() {
        let c = build_censored_kernel(&ModelParams::new(1000, 1.3).unwrap());
        let r = chain_gap(&c).unwrap();
        let scaled = r.gap * 1000.0 / 0.3;
        assert!((0.1..=10.0).contains(&scaled), "{scaled}");
    }

    #[test]
    fn report_serializes_method_and_residual() {
        let r = chain_gap(&chain(10, 0.5)).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["method"], "tridiagonal-bisection");
        assert!(json["residual"].is_number());
        assert!(json.get("second_eigenvector").is_none());
    }

    #[test]
    fn single_precision_gap() {
        let c = build_kernel(&ModelParams::new(50, 0.5f32).unwrap());
        let r = chain_gap(&c).unwrap();
        let want = chain_gap(&chain(50, 0.5)).unwrap().gap;
        assert!(((r.gap as f64) - want).abs() < 1e-4);
    }
}

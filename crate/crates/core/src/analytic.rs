//! Closed-form moments, asymptotic constants and limit-law moments.
//!
//! Gamma and factorial ratios are always taken in log-space so that indices
//! up to 10^6 with fractional offsets stay accurate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{EchoLaw, WalkParams, CRITICAL_TOL};
use crate::special::{gamma, harmonic, ln_gamma, ln_gamma_ratio};

/// Σ_{i=m}^{n} Γ(i+a)/Γ(i+1+b) = (Γ(m+a)/Γ(m+b) − Γ(n+1+a)/Γ(n+1+b)) / (b−a).
pub fn gamma_sum(m: u64, n: u64, a: f64, b: f64) -> Result<f64> {
    if (a - b).abs() < 1e-14 {
        return Err(Error::EqualParameters((a - b).abs()));
    }
    if m < 1 || m > n {
        return Err(Error::InvalidParameter(format!(
            "gamma_sum needs 1 <= m <= n, got m = {m}, n = {n}"
        )));
    }
    if m as f64 + a.min(b) <= 0.0 {
        return Err(Error::OutOfDomain(format!(
            "gamma arguments must be positive (m + min(a, b) = {})",
            m as f64 + a.min(b)
        )));
    }
    let head = ln_gamma_ratio(m as f64, a, b).exp();
    let tail = ln_gamma_ratio(n as f64 + 1.0, a, b).exp();
    Ok((head - tail) / (b - a))
}

fn check_moment(law: &EchoLaw, q: f64) -> Result<f64> {
    let m = law.moment(q)?;
    if !m.is_finite() {
        return Err(Error::OutOfMomentDomain(q));
    }
    Ok(m)
}

/// Σ_{k ≤ n} E g(X̃_k) for the two-branch closed form, given E g(X) = `base`
/// and the echo moment `mq`.
fn moment_sum_closed(p: f64, mq: f64, base: f64, n: u64) -> f64 {
    let nf = n as f64;
    let pm = p * mq;
    if (pm - 1.0).abs() <= CRITICAL_TOL {
        return nf * base * (p + (1.0 - p) * harmonic(n));
    }
    // Γ(n + pm)/(n−1)! / Γ(1 + pm)
    let growth = (ln_gamma_ratio(nf, pm, 0.0) - ln_gamma(1.0 + pm)).exp();
    base / (1.0 - pm) * ((1.0 - p) * nf + p * (1.0 - mq) * growth)
}

/// Σ_{k ≤ n} E|X̃_k|^q.
pub fn expected_moment_sum(params: &WalkParams, q: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let mq = check_moment(&params.echo, q)?;
    let xq = params.spin.abs_moment(q)?;
    Ok(moment_sum_closed(params.p, mq, xq, n))
}

/// E S̃_n, the signed first-moment version of [`expected_moment_sum`].
pub fn expected_position(params: &WalkParams, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    moment_sum_closed(params.p, params.m1(), params.spin.mean(), n)
}

/// Growth of E S̃_n: E S̃_n ~ constant · n^exponent (· log n when flagged).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMean {
    pub exponent: f64,
    pub constant: f64,
    pub log_correction: bool,
}

pub fn asymptotic_mean_constant(params: &WalkParams) -> Result<AsymptoticMean> {
    params.validate()?;
    let p = params.p;
    let ex = params.spin.mean();
    let pm = params.pm1();
    if p == 1.0 {
        return Ok(AsymptoticMean {
            exponent: pm,
            constant: ex / gamma(1.0 + pm),
            log_correction: false,
        });
    }
    Ok(if (pm - 1.0).abs() <= CRITICAL_TOL {
        AsymptoticMean {
            exponent: 1.0,
            constant: (1.0 - p) * ex,
            log_correction: true,
        }
    } else if pm > 1.0 {
        AsymptoticMean {
            exponent: pm,
            constant: ex / gamma(1.0 + pm) * (1.0 + (1.0 - p) / (pm - 1.0)),
            log_correction: false,
        }
    } else {
        AsymptoticMean {
            exponent: 1.0,
            constant: (1.0 - p) * ex / (1.0 - pm),
            log_correction: false,
        }
    })
}

/// Mean of a limit variable; `degenerate` marks the zero limit reached when
/// E[ξ log ξ] >= m_1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitMean {
    pub value: f64,
    pub degenerate: bool,
}

fn ui_holds(law: &EchoLaw) -> Result<bool> {
    Ok(law.xi_log_xi()? < law.mean())
}

/// E L^(ξ) = 1/Γ(1 + m_1) for the pure-echo limit.
pub fn pure_echo_limit_mean(law: &EchoLaw) -> Result<LimitMean> {
    if !ui_holds(law)? {
        return Ok(LimitMean { value: 0.0, degenerate: true });
    }
    Ok(LimitMean {
        value: 1.0 / gamma(1.0 + law.mean()),
        degenerate: false,
    })
}

/// E L_r^{(p,ξ)} = (1 − p·1{r>1}) (r−1)!/Γ(r + p m_1).
pub fn component_limit_mean(params: &WalkParams, r: u64) -> Result<LimitMean> {
    if r == 0 {
        return Err(Error::InvalidParameter("component index starts at 1".into()));
    }
    if !ui_holds(&params.echo)? {
        return Ok(LimitMean { value: 0.0, degenerate: true });
    }
    let cut = if r > 1 { 1.0 - params.p } else { 1.0 };
    let ln = ln_gamma(r as f64) - ln_gamma(r as f64 + params.pm1());
    Ok(LimitMean {
        value: cut * ln.exp(),
        degenerate: false,
    })
}

/// E M_∞ where S̃_n / n^{pm_1} → M_∞. Needs pm_1 > 1, or p = 1 where the
/// limit is EX · L^(ξ).
pub fn limit_mean(params: &WalkParams) -> Result<LimitMean> {
    params.validate()?;
    if params.p < 1.0 && params.pm1() <= 1.0 + CRITICAL_TOL {
        return Err(Error::HypothesisViolation(format!(
            "the limit of S_n / n^(p m1) is defined for p m1 > 1 (got {})",
            params.pm1()
        )));
    }
    if !ui_holds(&params.echo)? {
        return Ok(LimitMean { value: 0.0, degenerate: true });
    }
    Ok(LimitMean {
        value: asymptotic_mean_constant(params)?.constant,
        degenerate: false,
    })
}

/// E[(L^(ξ))^j] for j = 1..=k.
pub fn l_moments(law: &EchoLaw, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let m1 = law.mean();
    let mut ms = vec![1.0];
    for j in 1..=k {
        let mj = law.moment(j as f64)?;
        if j >= 2 && !(mj < j as f64 * m1) {
            return Err(Error::MomentCondition {
                failed_at: j,
                largest_valid: j - 1,
            });
        }
        ms.push(mj);
    }
    if !ui_holds(law)? {
        return Err(Error::DegenerateLimit);
    }
    let mut el = vec![1.0, 1.0 / gamma(1.0 + m1)];
    for j in 2..=k {
        let jf = j as f64;
        let mut acc = 0.0;
        for i in 1..j {
            let ln_binom = ln_gamma(jf + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((j - i) as f64 + 1.0);
            let ln_b = ln_gamma(1.0 + i as f64 * m1) + ln_gamma(1.0 + (j - i) as f64 * m1);
            acc += (ln_binom + ln_b).exp() * ms[i] * el[i] * el[j - i];
        }
        let val = acc / ((jf * m1 - ms[j]) * gamma(jf * m1 + 1.0));
        el.push(val);
    }
    Ok(el.split_off(1))
}

/// E M_q^a = Γ(1+a)/Γ(1+qa) for the Mittag-Leffler law of parameter q.
pub fn ml_moment(q: f64, a: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::OutOfDomain(format!("Mittag-Leffler parameter q = {q} outside (0, 1]")));
    }
    if !(a > -1.0) {
        return Err(Error::OutOfDomain(format!("Mellin exponent a = {a} must exceed -1")));
    }
    Ok((ln_gamma(1.0 + a) - ln_gamma(1.0 + q * a)).exp())
}

/// k-th moment of L^(ξ) computed directly and through the factorisation
/// L^(ξ) = L^(ξ⁺) · M_{1−p₀}^{m_1/(1−p₀)}.
pub fn atom_factorization_check(law: &EchoLaw, k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Ok((1.0, 1.0));
    }
    let lhs = l_moments(law, k)?[k - 1];
    let p0 = law.atom_at_zero();
    if p0 == 0.0 {
        return Ok((lhs, lhs));
    }
    let keep = 1.0 - p0;
    let plus = l_moments(&law.positive_part(), k)?[k - 1];
    let ml = ml_moment(keep, k as f64 * law.mean() / keep)?;
    Ok((lhs, plus * ml))
}

/// E[(L_r^{(p,ξ)})^i] = (1 − p·1{r>1}) (r−1)! Γ(1+i p m_1)/Γ(r+i p m_1) · E[(L^{(εξ)})^i].
pub fn component_moment(params: &WalkParams, r: u64, i: usize) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidParameter("component index starts at 1".into()));
    }
    if i == 0 {
        return Ok(1.0);
    }
    let base = l_moments(&params.thinned_echo(), i)?[i - 1];
    let cut = if r > 1 { 1.0 - params.p } else { 1.0 };
    let x = i as f64 * params.pm1();
    let ln = ln_gamma(r as f64) + ln_gamma(1.0 + x) - ln_gamma(r as f64 + x);
    Ok(cut * ln.exp() * base)
}

/// E Σ_{i ∈ T_r(n)} ω(i)^α = (1 − p·1{r>1}) ((r−1)!/(n−1)!) Γ(n + p m_α)/Γ(r + p m_α).
pub fn expected_subtree_moment(params: &WalkParams, alpha: f64, r: u64, n: u64) -> Result<f64> {
    if r == 0 || r > n {
        return Err(Error::BadIndices {
            n: n as usize,
            r: r as usize,
        });
    }
    let ma = check_moment(&params.echo, alpha)?;
    let pm = params.p * ma;
    let cut = if r > 1 { 1.0 - params.p } else { 1.0 };
    let ln = ln_gamma_ratio(n as f64, pm, 0.0) - ln_gamma_ratio(r as f64, pm, 0.0);
    Ok(cut * ln.exp())
}

/// ln((n−1)!/Γ(n + p m_1)), the normaliser of the mean martingale.
pub fn ln_martingale_scale(params: &WalkParams, n: u64) -> f64 {
    -ln_gamma_ratio(n as f64, params.pm1(), 0.0)
}

/// Σ_{r > R} E L_r^{(p,ξ)} = (1−p)/(pm_1 − 1) · Γ(R+1)/Γ(R + pm_1), for pm_1 > 1.
pub fn series_tail_mean(params: &WalkParams, truncation: u64) -> Result<f64> {
    let pm = params.pm1();
    if pm <= 1.0 + CRITICAL_TOL {
        return Err(Error::HypothesisViolation(format!(
            "the component series converges in mean only for p m1 > 1 (got {pm})"
        )));
    }
    if truncation == 0 {
        return Err(Error::InvalidParameter("truncation must be >= 1".into()));
    }
    let r = truncation as f64;
    Ok((1.0 - params.p) / (pm - 1.0) * ln_gamma_ratio(r, 1.0, pm).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, echo: &str, spin: &str) -> WalkParams {
        WalkParams::new(p, echo.parse().unwrap(), spin.parse().unwrap()).unwrap()
    }

    /// Σ_{k≤n} E g(X̃_k) by iterating s_{k+1} = (1 + p m/k) s_k + (1−p) base.
    fn recursion(p: f64, m: f64, base: f64, n: u64) -> f64 {
        let mut s = base;
        for k in 1..n {
            s = (1.0 + p * m / k as f64) * s + (1.0 - p) * base;
        }
        s
    }

    #[test]
    fn gamma_sum_examples() {
        assert!((gamma_sum(1, 1, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        let direct: f64 = (1..=50)
            .map(|i| (ln_gamma(i as f64 + 0.3) - ln_gamma(i as f64 + 1.9)).exp())
            .sum();
        let closed = gamma_sum(1, 50, 0.3, 0.9).unwrap();
        assert!(((direct - closed) / direct).abs() < 1e-12);
        let single = gamma_sum(7, 7, 0.2, 1.4).unwrap();
        let term = (ln_gamma(7.2) - ln_gamma(9.4)).exp();
        assert!(((single - term) / term).abs() < 1e-12);
        assert_eq!(gamma_sum(1, 3, 0.5, 0.5), Err(Error::EqualParameters(0.0)));
    }

    #[test]
    fn gamma_sum_grid_matches_direct() {
        let mut cases = 0;
        for &(a, b) in &[(0.0, 1.0), (0.3, 0.9), (1.6, 0.2), (-0.5, 0.5), (2.5, -0.3)] {
            for &(m, n) in &[(1u64, 10u64), (3, 40), (10, 11), (5, 200)] {
                let direct: f64 = (m..=n)
                    .map(|i| (ln_gamma(i as f64 + a) - ln_gamma(i as f64 + 1.0 + b)).exp())
                    .sum();
                let closed = gamma_sum(m, n, a, b).unwrap();
                assert!(((direct - closed) / direct).abs() < 1e-12, "{a} {b} {m} {n}");
                cases += 1;
            }
        }
        assert_eq!(cases, 20);
    }

    #[test]
    fn moment_sum_examples() {
        let pr = params(1.0, "const:2", "const:1");
        assert!((expected_moment_sum(&pr, 1.0, 3).unwrap() - 6.0).abs() < 1e-12);
        assert!((expected_moment_sum(&pr, 1.0, 4).unwrap() - 10.0).abs() < 1e-12);
        let one = params(1.0, "const:1", "exp:2");
        assert!((expected_moment_sum(&one, 1.5, 9).unwrap() - 9.0 * one.spin.abs_moment(1.5).unwrap()).abs() < 1e-12);
        // critical harmonic branch
        let crit = params(0.5, "const:2", "const:1");
        for n in [1u64, 2, 10, 100] {
            let expect = n as f64 * (0.5 + 0.5 * harmonic(n));
            assert!((expected_moment_sum(&crit, 1.0, n).unwrap() - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn moment_sum_matches_recursion_grid() {
        for &p in &[0.3, 0.5, 0.8, 1.0] {
            for echo in ["const:1", "const:2", "bernoulli:0.5", "exp:1", "uniform:0,3", "discrete:1@0.5,3@0.5"] {
                for &q in &[0.5, 1.0, 2.0] {
                    let pr = params(p, echo, "normal:0.5,1");
                    let m = pr.echo.moment(q).unwrap();
                    let base = pr.spin.abs_moment(q).unwrap();
                    for n in [1u64, 2, 7, 64, 1000] {
                        let rec = recursion(p, m, base, n);
                        let closed = expected_moment_sum(&pr, q, n).unwrap();
                        assert!(
                            ((rec - closed) / rec).abs() < 1e-10,
                            "p={p} {echo} q={q} n={n}: {rec} vs {closed}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn expected_position_signed() {
        let pr = params(0.7, "exp:1", "normal:-0.5,1");
        for n in [1u64, 5, 300] {
            let rec = recursion(0.7, 1.0, -0.5, n);
            assert!(((expected_position(&pr, n) - rec) / rec).abs() < 1e-10);
        }
    }

    #[test]
    fn asymptotic_constants() {
        let a = asymptotic_mean_constant(&params(0.8, "const:2", "const:1")).unwrap();
        assert!((a.exponent - 1.6).abs() < 1e-15);
        let expect = (1.0 + 0.2 / 0.6) / gamma(2.6);
        assert!((a.constant - expect).abs() < 1e-14);
        assert!((a.constant - 0.9327).abs() < 1e-4);
        assert!(!a.log_correction);
        let b = asymptotic_mean_constant(&params(0.5, "const:1", "const:1")).unwrap();
        assert_eq!((b.exponent, b.constant, b.log_correction), (1.0, 1.0, false));
        let c = asymptotic_mean_constant(&params(0.5, "const:2", "const:1")).unwrap();
        assert_eq!((c.exponent, c.constant, c.log_correction), (1.0, 0.5, true));
    }

    #[test]
    fn asymptotic_constant_is_the_large_n_limit() {
        // E S_n / n^{pm} from the exact closed form converges to the constant
        for (p, e) in [(0.8, "const:2"), (0.3, "const:1"), (1.0, "exp:1"), (0.9, "uniform:0,4")] {
            let pr = params(p, e, "const:1");
            let a = asymptotic_mean_constant(&pr).unwrap();
            let n = 1u64 << 40;
            let v = expected_position(&pr, n) / (n as f64).powf(a.exponent);
            assert!(((v - a.constant) / a.constant).abs() < 1e-3, "{p} {e}: {v} vs {}", a.constant);
        }
    }

    #[test]
    fn limit_mean_examples() {
        let lm = limit_mean(&params(1.0, "const:2", "const:1")).unwrap();
        assert!((lm.value - 0.5).abs() < 1e-14 && !lm.degenerate);
        let deg = limit_mean(&params(1.0, "const:3", "const:1")).unwrap();
        assert_eq!(deg, LimitMean { value: 0.0, degenerate: true });
        let pr = params(0.6, "const:2", "const:1");
        let c2 = component_limit_mean(&pr, 2).unwrap().value;
        assert!((c2 - 0.4 / gamma(3.2)).abs() < 1e-14);
        assert!((component_limit_mean(&pr, 1).unwrap().value - 1.0 / gamma(2.2)).abs() < 1e-14);
        assert!(component_limit_mean(&params(0.6, "const:3", "const:1"), 2).unwrap().degenerate);
        assert!(limit_mean(&params(0.5, "const:1", "const:1")).is_err());
    }

    #[test]
    fn component_means_sum_to_limit_constant() {
        // Σ_r E L_r = constant / EX for supercritical p < 1
        let pr = params(0.8, "const:2", "const:1");
        let mut s = 0.0;
        let rr = 2000u64;
        for r in 1..=rr {
            s += component_limit_mean(&pr, r).unwrap().value;
        }
        s += series_tail_mean(&pr, rr).unwrap();
        let c = asymptotic_mean_constant(&pr).unwrap().constant;
        assert!(((s - c) / c).abs() < 1e-10, "{s} vs {c}");
    }

    #[test]
    fn l_moments_examples() {
        let b = l_moments(&"bernoulli:0.5".parse().unwrap(), 2).unwrap();
        assert!((b[0] - 1.0 / gamma(1.5)).abs() < 1e-14);
        assert!((b[1] - 2.0).abs() < 1e-12);
        for q in [0.2, 0.7, 0.9] {
            let l: EchoLaw = EchoLaw::Bernoulli(q);
            let v = l_moments(&l, 2).unwrap()[1];
            assert!((v - 2.0 / gamma(1.0 + 2.0 * q)).abs() < 1e-12);
        }
        let one = l_moments(&EchoLaw::Constant(1.0), 4);
        // m_j = 1 < j, so every order is admissible and L = 1
        for v in one.unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            l_moments(&EchoLaw::Constant(3.0), 2),
            Err(Error::MomentCondition { failed_at: 2, largest_valid: 1 })
        );
        assert_eq!(l_moments(&EchoLaw::Constant(3.0), 1), Err(Error::DegenerateLimit));
    }

    #[test]
    fn bernoulli_moments_are_mittag_leffler() {
        // L^(Bernoulli(q)) is M_q, whose Mellin transform is independent of the recursion
        for q in [0.3, 0.5, 0.8] {
            let l = EchoLaw::Bernoulli(q);
            let moms = l_moments(&l, 4).unwrap();
            for (j, v) in moms.iter().enumerate() {
                let k = (j + 1) as f64;
                let ml = ml_moment(q, k).unwrap();
                assert!(((v - ml) / ml).abs() < 1e-11, "q={q} k={k}: {v} vs {ml}");
            }
        }
    }

    #[test]
    fn ml_moment_examples() {
        assert_eq!(ml_moment(0.3, 0.0).unwrap(), 1.0);
        assert!((ml_moment(0.5, 2.0).unwrap() - 2.0).abs() < 1e-13);
        assert!((ml_moment(1.0, 3.7).unwrap() - 1.0).abs() < 1e-13);
        assert!(ml_moment(0.0, 1.0).is_err());
        assert!(ml_moment(0.5, -1.0).is_err());
    }

    #[test]
    fn atom_factorization() {
        let (l, r) = atom_factorization_check(&EchoLaw::Bernoulli(0.5), 2).unwrap();
        assert!((l - 2.0).abs() < 1e-12 && (r - 2.0).abs() < 1e-12);
        let law: EchoLaw = "discrete:0@0.3,0.5@0.3,1.5@0.4".parse().unwrap();
        for k in 1..=3 {
            let (l, r) = atom_factorization_check(&law, k).unwrap();
            assert!(((l - r) / l).abs() < 1e-10, "k={k}: {l} vs {r}");
        }
        let (l1, _) = atom_factorization_check(&law, 1).unwrap();
        assert!((l1 - 1.0 / gamma(1.0 + law.mean())).abs() < 1e-14);
        let (l, r) = atom_factorization_check(&EchoLaw::Exponential(2.0), 2).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn subtree_moment_examples() {
        let pr = params(0.4, "exp:1", "const:1");
        for n in [1u64, 5, 50] {
            let v = expected_subtree_moment(&pr, 1.3, n, n).unwrap();
            let expect = if n > 1 { 0.6 } else { 1.0 };
            assert!((v - expect).abs() < 1e-13);
        }
        let two = params(1.0, "const:2", "const:1");
        assert!((expected_subtree_moment(&two, 1.0, 1, 3).unwrap() - 6.0).abs() < 1e-12);
        let one = params(1.0, "const:1", "const:1");
        assert!((expected_subtree_moment(&one, 1.0, 1, 40).unwrap() - 40.0).abs() < 1e-10);
        assert!(expected_subtree_moment(&one, 1.0, 5, 4).is_err());
    }

    #[test]
    fn component_moment_first_order() {
        let pr = params(0.8, "exp:1", "const:1");
        for r in [1u64, 2, 9] {
            let a = component_moment(&pr, r, 1).unwrap();
            let b = component_limit_mean(&pr, r).unwrap().value;
            assert!(((a - b) / b).abs() < 1e-12);
        }
    }

    #[test]
    fn stirling_limit_of_scale() {
        for &(a, b) in &[(0.3, 0.9), (1.6, 0.0)] {
            let n = 1e6;
            let v = (ln_gamma_ratio(n, a, b) + (b - a) * f64::ln(n)).exp();
            assert!((v - 1.0).abs() < 1e-5);
        }
    }
}

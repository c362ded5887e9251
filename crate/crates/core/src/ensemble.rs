//! Monte Carlo ensembles of rescaled walks observed on a checkpoint grid.
//!
//! Every replicate is one trajectory watched at all checkpoints, so the
//! columns of a summary are correlated exactly as the a.s. limit statements
//! expect.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analytic::{expected_position, ln_martingale_scale};
use crate::error::{Error, Result};
use crate::io::{csv_string, fmt_f64, sidecar_path, write_csv, write_json, Sidecar};
use crate::laws::{Regime, WalkParams};
use crate::stats::{mean_and_se, ols_slope, quantile_sorted, sorted, variance, MeanSe};
use crate::tape::RandomTape;
use crate::walk::positions_at;

pub use crate::stats::{ks_two_sample, KsResult};

/// Which function of S̃_n an ensemble records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    /// S̃_n.
    Raw,
    /// S̃_n / n^{pm₁}.
    Scaled,
    /// S̃_n / n.
    Linear,
    /// S̃_n / (n ln n).
    NLogN,
    /// (S̃_n − c n)/n^{pm₁} with c = (1−p)EX/(1−pm₁); needs pm₁ < 1.
    Centered,
    /// (S̃_n − (1−p)EX n ln n)/n; needs pm₁ = 1.
    CenteredLog,
    /// M_n = ((n−1)!/Γ(n+pm₁)) (S̃_n − E S̃_n).
    Martingale,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 7] = [
        StatisticKind::Raw,
        StatisticKind::Scaled,
        StatisticKind::Linear,
        StatisticKind::NLogN,
        StatisticKind::Centered,
        StatisticKind::CenteredLog,
        StatisticKind::Martingale,
    ];

    fn name(&self) -> &'static str {
        match self {
            StatisticKind::Raw => "raw",
            StatisticKind::Scaled => "scaled",
            StatisticKind::Linear => "linear",
            StatisticKind::NLogN => "nlogn",
            StatisticKind::Centered => "centered",
            StatisticKind::CenteredLog => "centered-log",
            StatisticKind::Martingale => "martingale",
        }
    }

    fn check(&self, params: &WalkParams, checkpoints: &[usize]) -> Result<()> {
        let needs_log = matches!(self, StatisticKind::NLogN | StatisticKind::CenteredLog);
        if needs_log && checkpoints.first() == Some(&1) {
            return Err(Error::InvalidParameter("n ln n vanishes at n = 1".into()));
        }
        match self {
            StatisticKind::Centered if params.regime() != Regime::Subcritical => Err(Error::HypothesisViolation(
                "the linear centring needs p m1 < 1".into(),
            )),
            StatisticKind::CenteredLog if params.regime() != Regime::Critical => Err(Error::HypothesisViolation(
                "the n ln n centring needs p m1 = 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// The statistic at step n for position s.
    pub fn apply(&self, params: &WalkParams, n: usize, s: f64) -> f64 {
        let nf = n as f64;
        let pm = params.pm1();
        let ex = params.spin.mean();
        match self {
            StatisticKind::Raw => s,
            StatisticKind::Scaled => s / nf.powf(pm),
            StatisticKind::Linear => s / nf,
            StatisticKind::NLogN => s / (nf * nf.ln()),
            StatisticKind::Centered => {
                let c = (1.0 - params.p) * ex / (1.0 - pm);
                (s - c * nf) / nf.powf(pm)
            }
            StatisticKind::CenteredLog => (s - (1.0 - params.p) * ex * nf * nf.ln()) / nf,
            StatisticKind::Martingale => {
                ln_martingale_scale(params, n as u64).exp() * (s - expected_position(params, n as u64))
            }
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatisticKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown statistic '{s}'")))
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub checkpoint: usize,
    pub mean: f64,
    pub var: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub n: usize,
}

pub const SUMMARY_HEADER: &str = "checkpoint,mean,var,q05,q25,q50,q75,q95,N";

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub params: WalkParams,
    pub kind: StatisticKind,
    pub checkpoints: Vec<usize>,
    pub rows: Vec<SummaryRow>,
    /// values[i][j]: statistic of replicate j at checkpoint i.
    pub values: Vec<Vec<f64>>,
    pub seed: u64,
}

impl EnsembleSummary {
    pub fn reps(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Mean and standard error at checkpoint index i.
    pub fn mean_se(&self, i: usize) -> MeanSe {
        mean_and_se(&self.values[i])
    }

    /// Row for a given checkpoint value.
    pub fn at(&self, checkpoint: usize) -> Option<(usize, &SummaryRow)> {
        self.rows.iter().enumerate().find(|(_, r)| r.checkpoint == checkpoint)
    }

    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        self.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.checkpoint,
                fmt_f64(r.mean),
                fmt_f64(r.var),
                fmt_f64(r.q05),
                fmt_f64(r.q25),
                fmt_f64(r.q50),
                fmt_f64(r.q75),
                fmt_f64(r.q95),
                r.n
            )
        })
    }

    pub fn to_csv(&self) -> String {
        csv_string(SUMMARY_HEADER, self.csv_rows())
    }

    pub fn write<P: AsRef<Path>>(&self, path: P, config: serde_json::Value) -> Result<()> {
        let path = path.as_ref();
        write_csv(path, SUMMARY_HEADER, self.csv_rows())?;
        let meta = json!({
            "p": self.params.p,
            "echo": self.params.echo,
            "spin": self.params.spin,
            "statistic": self.kind,
            "checkpoints": self.checkpoints,
            "N": self.reps(),
        });
        write_json(sidecar_path(path), &Sidecar::new("ensemble", config, self.seed, meta))
    }
}

fn summarize(checkpoint: usize, xs: &[f64]) -> SummaryRow {
    let s = sorted(xs);
    SummaryRow {
        checkpoint,
        mean: crate::stats::mean(xs),
        var: variance(xs),
        q05: quantile_sorted(&s, 0.05),
        q25: quantile_sorted(&s, 0.25),
        q50: quantile_sorted(&s, 0.5),
        q75: quantile_sorted(&s, 0.75),
        q95: quantile_sorted(&s, 0.95),
        n: xs.len(),
    }
}

fn check_grid(checkpoints: &[usize]) -> Result<()> {
    if checkpoints.is_empty() || checkpoints[0] == 0 {
        return Err(Error::InvalidParameter("checkpoints must be non-empty and >= 1".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("checkpoints must be strictly increasing".into()));
    }
    Ok(())
}

/// Raw positions: result[j][i] is S̃ of replicate j at checkpoint i.
pub fn replicate_positions(
    params: &WalkParams,
    checkpoints: &[usize],
    reps: usize,
    tape: &RandomTape,
) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    check_grid(checkpoints)?;
    let root = tape.derive("ensemble");
    Ok((0..reps as u64)
        .into_par_iter()
        .map(|j| positions_at(params, checkpoints, &root.child(j)))
        .collect())
}

/// Run `reps` trajectories and summarise the chosen statistic.
pub fn run(
    params: &WalkParams,
    kind: StatisticKind,
    checkpoints: &[usize],
    reps: usize,
    tape: &RandomTape,
) -> Result<EnsembleSummary> {
    check_grid(checkpoints)?;
    kind.check(params, checkpoints)?;
    if reps == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    let raw = replicate_positions(params, checkpoints, reps, tape)?;
    let values: Vec<Vec<f64>> = checkpoints
        .iter()
        .enumerate()
        .map(|(i, &n)| raw.iter().map(|r| kind.apply(params, n, r[i])).collect())
        .collect();
    let rows = checkpoints
        .iter()
        .zip(&values)
        .map(|(&n, xs)| summarize(n, xs))
        .collect();
    Ok(EnsembleSummary {
        params: params.clone(),
        kind,
        checkpoints: checkpoints.to_vec(),
        rows,
        values,
        seed: tape.master_seed,
    })
}

/// Growth exponent of E|S̃_n| from a least-squares fit of ln mean |S̃_n| on ln n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub stderr: f64,
}

pub fn rate_estimate(summary: &EnsembleSummary) -> Result<RateEstimate> {
    if summary.kind != StatisticKind::Raw {
        return Err(Error::InvalidParameter("rate_estimate needs a raw-position ensemble".into()));
    }
    let c = &summary.checkpoints;
    if c.len() < 4 || (c[c.len() - 1] as f64) < 100.0 * c[0] as f64 {
        return Err(Error::InsufficientCheckpoints);
    }
    let x: Vec<f64> = c.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = summary
        .values
        .iter()
        .map(|v| (v.iter().map(|s| s.abs()).sum::<f64>() / v.len() as f64).ln())
        .collect();
    let (slope, se, _) = ols_slope(&x, &y);
    Ok(RateEstimate { slope, stderr: se })
}

/// Mean of M_n with a ±4 s.e. band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingalePoint {
    pub checkpoint: usize,
    pub mean: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub var: f64,
}

impl MartingalePoint {
    pub fn covers_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

pub const CI_SE: f64 = 4.0;

pub fn martingale_diagnostic(
    params: &WalkParams,
    checkpoints: &[usize],
    reps: usize,
    tape: &RandomTape,
) -> Result<Vec<MartingalePoint>> {
    let s = run(params, StatisticKind::Martingale, checkpoints, reps, tape)?;
    Ok(s.rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let ms = s.mean_se(i);
            MartingalePoint {
                checkpoint: r.checkpoint,
                mean: ms.mean,
                se: ms.se,
                ci_low: ms.mean - CI_SE * ms.se,
                ci_high: ms.mean + CI_SE * ms.se,
                var: r.var,
            }
        })
        .collect())
}

/// |var(last) − var(earlier)| / var(last), where `earlier` is the checkpoint
/// closest to last/10 in log scale.
pub fn variance_change_last_decade(points: &[MartingalePoint]) -> Option<f64> {
    let last = points.last()?;
    let target = (last.checkpoint as f64 / 10.0).ln();
    let earlier = points[..points.len() - 1]
        .iter()
        .min_by(|a, b| {
            let da = ((a.checkpoint as f64).ln() - target).abs();
            let db = ((b.checkpoint as f64).ln() - target).abs();
            da.total_cmp(&db)
        })?;
    Some((last.var - earlier.var).abs() / last.var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64, echo: &str, spin: &str) -> WalkParams {
        WalkParams::new(p, echo.parse().unwrap(), spin.parse().unwrap()).unwrap()
    }

    #[test]
    fn unit_echo_raw_is_deterministic() {
        let s = run(&params(1.0, "const:1", "const:1"), StatisticKind::Raw, &[1, 10, 100], 20, &RandomTape::new(1, 0)).unwrap();
        for r in &s.rows {
            assert_eq!(r.mean, r.checkpoint as f64);
            assert_eq!(r.var, 0.0);
            assert_eq!(r.n, 20);
        }
        let est = rate_estimate(&run(&params(1.0, "const:1", "const:1"), StatisticKind::Raw, &[1, 10, 100, 1000], 5, &RandomTape::new(1, 0)).unwrap()).unwrap();
        assert!((est.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_needs_grid() {
        let s = run(&params(0.5, "const:1", "const:1"), StatisticKind::Raw, &[10, 20, 40, 80], 2, &RandomTape::new(1, 0)).unwrap();
        assert_eq!(rate_estimate(&s), Err(Error::InsufficientCheckpoints));
    }

    #[test]
    fn kind_round_trip_and_checks() {
        for k in StatisticKind::ALL {
            assert_eq!(k.to_string().parse::<StatisticKind>().unwrap(), k);
        }
        let sup = params(0.8, "const:2", "const:1");
        assert!(run(&sup, StatisticKind::Centered, &[2, 4], 2, &RandomTape::new(1, 0)).is_err());
        assert!(run(&sup, StatisticKind::NLogN, &[1, 4], 2, &RandomTape::new(1, 0)).is_err());
        assert!(run(&sup, StatisticKind::Raw, &[4, 4], 2, &RandomTape::new(1, 0)).is_err());
    }

    #[test]
    fn summary_is_thread_independent() {
        let pr = params(0.7, "exp:1", "normal:0,1");
        let go = |t: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| run(&pr, StatisticKind::Scaled, &[8, 64, 256], 300, &RandomTape::new(4, 0)).unwrap().to_csv())
        };
        assert_eq!(go(1), go(3));
    }

    #[test]
    fn quantiles_monotone() {
        let s = run(&params(0.6, "exp:1", "normal:0,1"), StatisticKind::Raw, &[5, 50], 200, &RandomTape::new(2, 0)).unwrap();
        for r in &s.rows {
            assert!(r.q05 <= r.q25 && r.q25 <= r.q50 && r.q50 <= r.q75 && r.q75 <= r.q95);
        }
        assert!(s.to_csv().starts_with(SUMMARY_HEADER));
    }

    #[test]
    fn martingale_at_one_is_zero_for_constant_spins() {
        // S̃_1 = X₁ = E S̃_1 when X is constant
        let pts = martingale_diagnostic(&params(0.5, "const:2", "const:1"), &[1, 2], 10, &RandomTape::new(1, 0)).unwrap();
        assert_eq!(pts[0].mean, 0.0);
        assert!(pts[0].covers_zero());
    }
}

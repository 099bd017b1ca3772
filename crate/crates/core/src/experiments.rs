//! Experiment runners. Each returns an [`ExperimentReport`] whose rows pair
//! every computed quantity with the bound it is checked against.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::constructions::{
    default_gamma, mixture_variant, mu3_p0, mu_m, nu_mn, parallelogram_variant, pi_limit, pi_mn,
    pi_prime, random_walk_kernel, theta_n,
};
use crate::error::{Error, Result};
use crate::measure::MERGE_TOL;
use crate::transport::{
    check_convex_order, min_mass_within, mot_value, ot_value, uniqueness_probe, Norm,
};

/// Number of random objectives used by the uniqueness checks.
pub const PROBE_TRIALS: usize = 20;
pub const DEFAULT_SEED: u64 = 20;

/// One report row: an ordered record ending in a `pass` flag.
pub type Row = Map<String, Value>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: Map<String, Value>,
    pub rows: Vec<Row>,
    pub verdict: bool,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    fn new(name: &str, params: Map<String, Value>) -> Self {
        ExperimentReport {
            name: name.to_string(),
            params,
            rows: Vec::new(),
            verdict: true,
            runtime_ms: 0,
        }
    }

    fn push(&mut self, mut row: Row, pass: bool) {
        row.insert("pass".into(), Value::Bool(pass));
        self.verdict &= pass;
        self.rows.push(row);
    }

    fn finish(mut self, started: Instant) -> Self {
        self.verdict = self
            .rows
            .iter()
            .all(|r| r.get("pass").and_then(Value::as_bool).unwrap_or(false));
        self.runtime_ms = started.elapsed().as_millis() as u64;
        self
    }

    /// Zeroes `runtime_ms`, making serialized reports byte-identical across runs.
    pub fn without_timing(mut self) -> Self {
        self.runtime_ms = 0;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// CSV with a header row; columns appear in first-use order across rows
    /// and missing cells are empty.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<&str> = Vec::new();
        for row in &self.rows {
            for key in row.keys() {
                if !header.contains(&key.as_str()) {
                    header.push(key);
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let cells: Vec<String> = header
                .iter()
                .map(|k| match row.get(*k) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                })
                .collect();
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn rows_where<'a>(
        &'a self,
        key: &'a str,
        value: &'a Value,
    ) -> impl Iterator<Item = &'a Row> {
        self.rows.iter().filter(move |r| r.get(key) == Some(value))
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

macro_rules! row {
    ($($key:literal => $val:expr),* $(,)?) => {{
        let mut r = Row::new();
        $( r.insert($key.to_string(), Value::from($val)); )*
        r
    }};
}

fn params(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Stability failure for `(μ₃, ν_{3,n})`, `n = 2..=nmax`.
///
/// Per `n`: W₁(ν_{3,n}, μ₃P₀) against `π/2n` (and strictly decreasing),
/// the MOT value against 1, uniqueness of the martingale coupling together
/// with its structure, convergence of `π_n` to `μ₃(Id, P₀)` after snapping
/// targets within `2 sin(π/4n)`, and the TV separation of `π′` from `π_n`.
/// The final row checks the limit problem: value ½, non-uniqueness, and the
/// gap between the cost of the limit coupling and the optimum.
pub fn run_stability(nmax: usize, seed: u64) -> Result<ExperimentReport> {
    if nmax < 2 {
        return Err(Error::InvalidParameter("nmax must be at least 2".into()));
    }
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "stability",
        params(&[
            ("m", 3.into()),
            ("nmax", nmax.into()),
            ("seed", seed.into()),
            ("trials", PROBE_TRIALS.into()),
            ("norm", "euclidean".into()),
        ]),
    );

    let mu = mu_m(3)?;
    let limit_nu = mu3_p0();
    let limit = pi_limit();
    let prime = pi_prime();
    let (limit_value, _) = mot_value(&mu, &limit_nu, Norm::Euclidean)?;

    let mut prev_w1 = f64::INFINITY;
    let mut separated_from: Option<usize> = None;
    for n in 2..=nmax {
        let theta = theta_n(n);
        let nu = nu_mn(3, n)?;
        let (w1, _) = ot_value(&nu, &limit_nu, Norm::Euclidean)?;
        let (mot, _) = mot_value(&mu, &nu, Norm::Euclidean)?;
        let probe = uniqueness_probe(&mu, &nu, PROBE_TRIALS, seed)?;
        let pi_n = pi_mn(3, n)?;
        let witness_tv = probe.witness.total_variation(&pi_n, MERGE_TOL);
        let along_lines = probe.witness.moves_along_lines(theta, 1e-12)?;

        let radius = 2.0 * (PI / (4.0 * n as f64)).sin();
        let snapped = pi_n.snap_targets(limit.target(), radius + 1e-9);
        let tv_limit = snapped.total_variation(&limit, MERGE_TOL);
        let tv_prime = prime.total_variation(&snapped, MERGE_TOL);
        let tv_prime_raw = prime.total_variation(&pi_n, MERGE_TOL);
        let gap = mot - limit_value;

        let separated = tv_prime >= 0.25 - 1e-6;
        match (separated, separated_from) {
            (true, None) => separated_from = Some(n),
            (false, _) => separated_from = None,
            _ => {}
        }

        let pass = w1 <= theta + 1e-9
            && w1 < 2.0 / n as f64
            && w1 < prev_w1
            && (mot - 1.0).abs() <= 1e-7
            && probe.unique
            && witness_tv <= 1e-7
            && along_lines
            && tv_limit <= 1e-9
            && separated
            && (gap - 0.5).abs() <= 1e-6;
        prev_w1 = w1;
        report.push(
            row! {
                "case" => "n",
                "n" => n,
                "w1" => num(w1),
                "w1_bound" => num(theta),
                "mot" => num(mot),
                "mot_expected" => 1.0,
                "unique" => probe.unique,
                "witness_tv" => num(witness_tv),
                "along_lines" => along_lines,
                "snap_radius" => num(radius),
                "tv_to_limit" => num(tv_limit),
                "tv_pi_prime" => num(tv_prime),
                "tv_pi_prime_raw" => num(tv_prime_raw),
                "tv_pi_prime_bound" => 0.25,
                "gap" => num(gap),
                "gap_expected" => 0.5,
            },
            pass,
        );
    }

    let limit_probe = uniqueness_probe(&mu, &limit_nu, PROBE_TRIALS, seed)?;
    let (prime_src, prime_tgt) = prime.marginals();
    let prime_ok = prime.is_martingale(1e-12)
        && prime_src.approx_eq(&mu, MERGE_TOL, 1e-12)
        && prime_tgt.approx_eq(&limit_nu, MERGE_TOL, 1e-12);
    let prime_cost = prime.cost(Norm::Euclidean);
    let limit_cost = limit.cost(Norm::Euclidean);
    let pass = (limit_value - 0.5).abs() <= 1e-7
        && !limit_probe.unique
        && prime_ok
        && (prime_cost - 0.5).abs() <= 1e-12
        && limit_cost - limit_value >= 0.5 - 1e-6
        && separated_from.is_some();
    report.push(
        row! {
            "case" => "limit",
            "mot" => num(limit_value),
            "mot_expected" => 0.5,
            "unique" => limit_probe.unique,
            "pi_prime_martingale" => prime_ok,
            "pi_prime_cost" => num(prime_cost),
            "limit_coupling_cost" => num(limit_cost),
            "n0" => separated_from,
        },
        pass,
    );
    Ok(report.finish(started))
}

/// Lower bound on `M₁/W₁` for `(μ_n, ν_{n,n})`.
///
/// Euclidean: `n/(1 + π/2)`, from `M₁ = 1` and `W₁ ≤ 1/n + π/2n`. Other
/// norms: `‖u‖ / (1/n + ‖u − e₁‖)` with `u = (cos θ_n, sin θ_n)`, by the same
/// triangle inequality through `μ_nP₀`.
pub fn ratio_bound(n: usize, norm: Norm) -> f64 {
    let nf = n as f64;
    match norm {
        Norm::Euclidean => nf / (1.0 + FRAC_PI_2),
        _ => {
            let th = theta_n(n);
            norm.length(&[th.cos(), th.sin()])
                / (1.0 / nf + norm.length(&[th.cos() - 1.0, th.sin()]))
        }
    }
}

/// `M₁(μ_n, ν_{n,n}) / W₁(μ_n, ν_{n,n})` for `n = 2..=nmax`.
pub fn run_ratio(nmax: usize, norm: Norm) -> Result<ExperimentReport> {
    if nmax < 2 {
        return Err(Error::InvalidParameter("nmax must be at least 2".into()));
    }
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "ratio",
        params(&[("nmax", nmax.into()), ("norm", norm.as_str().into())]),
    );
    let mut prev_ratio = 0.0;
    for n in 2..=nmax {
        let mu = mu_m(n)?;
        let nu = nu_mn(n, n)?;
        let (m_val, _) = mot_value(&mu, &nu, norm)?;
        let (w_val, _) = ot_value(&mu, &nu, norm)?;
        let ratio = m_val / w_val;
        let bound = ratio_bound(n, norm);
        let th = theta_n(n);
        // the only martingale coupling moves every atom by exactly u
        let m_exact = norm.length(&[th.cos(), th.sin()]);
        let mut pass =
            ratio >= bound - 1e-6 && ratio > prev_ratio && (m_val - m_exact).abs() <= 1e-7;
        if norm == Norm::Euclidean {
            pass &= w_val <= (1.0 + FRAC_PI_2) / n as f64 + 1e-9;
        }
        prev_ratio = ratio;
        report.push(
            row! {
                "n" => n,
                "M" => num(m_val),
                "W" => num(w_val),
                "ratio" => num(ratio),
                "bound" => num(bound),
            },
            pass,
        );
    }
    Ok(report.finish(started))
}

/// `θ_k = k·(π/2)/(steps − 1)`, `k = 0..steps`.
pub fn theta_grid(steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps)
            .map(|k| FRAC_PI_2 * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// W₁(μ_mP₀, μ_mP_θ) against the chord `2 sin(θ/2)` and the arc `θ`.
pub fn run_lemma2(m: usize, thetas: &[f64]) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "lemma2",
        params(&[
            ("m", m.into()),
            (
                "thetas",
                thetas.iter().map(|&t| num(t)).collect::<Vec<_>>().into(),
            ),
        ]),
    );
    let mu = mu_m(m)?;
    let flat = mu.apply_kernel(&random_walk_kernel(0.0)?)?;
    for &theta in thetas {
        let tilted = mu.apply_kernel(&random_walk_kernel(theta)?)?;
        let (w1, _) = ot_value(&flat, &tilted, Norm::Euclidean)?;
        let chord = 2.0 * (theta / 2.0).sin();
        let pass = w1 <= chord + 1e-8 && w1 <= theta + 1e-8;
        report.push(
            row! {
                "theta" => num(theta),
                "w1" => num(w1),
                "chord" => num(chord),
                "arc" => num(theta),
            },
            pass,
        );
    }
    Ok(report.finish(started))
}

/// Parallelogram and mixture variants of the construction.
pub fn run_variants(m: usize, n: usize, grid: usize, eps: f64) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "variants",
        params(&[
            ("m", m.into()),
            ("n", n.into()),
            ("grid", grid.into()),
            ("eps", num(eps)),
        ]),
    );

    let (pm, pn) = parallelogram_variant(m, n, grid)?;
    let ordered = check_convex_order(&pm, &pn)?;
    report.push(
        row! {
            "variant" => "parallelogram",
            "quantity" => "convex_order",
            "value" => ordered,
            "expected" => true,
        },
        ordered,
    );
    let near = min_mass_within(&pm, &pn, 1.0 / 3.0)?;
    report.push(
        row! {
            "variant" => "parallelogram",
            "quantity" => "min_mass_below_one_third",
            "value" => num(near),
            "expected" => 0.0,
            "tolerance" => 1e-9,
        },
        near.abs() <= 1e-9,
    );

    let (mm, mn) = mixture_variant(m, n, eps, &default_gamma())?;
    let mu = mu_m(m)?;
    let nu = nu_mn(m, n)?;
    let (w_base, _) = ot_value(&mu, &nu, Norm::Euclidean)?;
    let (w_mix, _) = ot_value(&mm, &mn, Norm::Euclidean)?;
    let (m_base, _) = mot_value(&mu, &nu, Norm::Euclidean)?;
    let (m_mix, _) = mot_value(&mm, &mn, Norm::Euclidean)?;
    for (quantity, value, base) in [("w1", w_mix, w_base), ("m1", m_mix, m_base)] {
        let expected = (1.0 - eps) * base;
        report.push(
            row! {
                "variant" => "mixture",
                "quantity" => quantity,
                "value" => num(value),
                "expected" => num(expected),
                "tolerance" => 1e-6,
            },
            (value - expected).abs() <= 1e-6,
        );
    }
    Ok(report.finish(started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_conjunction() {
        let mut r = ExperimentReport::new("t", Map::new());
        r.push(row! {"a" => 1}, true);
        r.push(row! {"a" => 2, "b" => "x"}, false);
        let r = r.finish(Instant::now());
        assert!(!r.verdict);
        assert_eq!(r.to_csv(), "a,pass,b\n1,true,\n2,false,x\n");
    }

    #[test]
    fn lemma2_endpoints() {
        let r = run_lemma2(1, &[0.0, FRAC_PI_2]).unwrap();
        assert!(r.verdict);
        let w0 = r.rows[0]["w1"].as_f64().unwrap();
        let w1 = r.rows[1]["w1"].as_f64().unwrap();
        assert!(w0.abs() < 1e-12);
        assert!((w1 - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn theta_grid_covers_interval() {
        let g = theta_grid(10);
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[9], FRAC_PI_2);
    }

    #[test]
    fn ratio_small() {
        let r = run_ratio(4, Norm::Euclidean).unwrap();
        assert!(r.verdict, "{}", r.to_json());
        assert_eq!(r.to_csv().lines().next().unwrap(), "n,M,W,ratio,bound,pass");
    }

    #[test]
    fn parameter_errors() {
        assert!(run_ratio(1, Norm::Euclidean).is_err());
        assert!(run_stability(1, 0).is_err());
        assert!(run_variants(3, 3, 2, 1.0).is_err());
    }
}

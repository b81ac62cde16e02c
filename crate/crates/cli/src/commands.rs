use spikelab::fluct::{
    clt_scale, fluctuations, m_transforms, normality_report, MomentSummary, Verdict,
};
use spikelab::sim::{run_replications, tracked_ranks, PopulationSpectrum};
use spikelab::spectra::analyze;
use spikelab::spike::{classify, predict as predict_spikes, LimitKind, SpikeClass, SpikePrediction};
use spikelab::verify::{run_checks, VerifyOptions};
use spikelab::SpikedModel;

use crate::config::ModelConfig;
use crate::output::{Cell, Table};
use crate::{CliError, Outcome};

/// Samples of the psi curve written by `support`.
pub const PSI_CURVE_POINTS: usize = 1000;
/// Zoom windows for the eigenvalue histograms: the quantile region and the low end.
pub const HISTOGRAM_WINDOWS: [(f64, f64); 2] = [(5.0, 7.0), (0.0, 2.0)];
pub const HISTOGRAM_BINS: usize = 100;

pub const PREDICTION_HEADER: [&str; 13] = [
    "spike_index",
    "alpha",
    "multiplicity",
    "class",
    "psi_prime",
    "psi_prime_sign",
    "rank_first",
    "rank_last",
    "limit_kind",
    "limit_value",
    "gamma",
    "edge_u",
    "edge_v",
];

pub fn support(cfg: &ModelConfig) -> Result<Vec<Table>, CliError> {
    let model = cfg.model()?;
    let mp = model.mp();
    let analysis = analyze(mp);
    let mut t = Table::new("support", vec!["kind", "lo", "hi", "value"]);
    if analysis.support.has_zero() {
        t.push(vec![
            "zero_atom".into(),
            0.0.into(),
            0.0.into(),
            analysis.support.atom_at_zero_mass.into(),
        ]);
    }
    for &(lo, hi) in &analysis.support.intervals {
        t.push(vec!["interval".into(), lo.into(), hi.into(), Cell::Empty]);
    }
    for (lo, hi) in analysis.increasing_intervals() {
        t.push(vec!["increasing".into(), lo.into(), hi.into(), Cell::Empty]);
    }
    for &c in &analysis.critical_points {
        t.push(vec!["critical_point".into(), c.into(), c.into(), Cell::Empty]);
    }

    let top = mp
        .base()
        .max_location()
        .max(model.spikes().first().map_or(0.0, |s| s.alpha));
    let mut curve = Table::new("psi_curve", vec!["alpha", "psi", "psi_prime"]);
    for i in 1..=PSI_CURVE_POINTS {
        let alpha = 1.5 * top * i as f64 / PSI_CURVE_POINTS as f64;
        // psi has poles at the atoms; skip grid points that land on one.
        if let (Ok(psi), Ok(d)) = (mp.psi(alpha), mp.psi_derivative(alpha, 1)) {
            curve.push(vec![alpha.into(), psi.into(), d.into()]);
        }
    }
    Ok(vec![t, curve])
}

pub fn predict(cfg: &ModelConfig) -> Result<Vec<Table>, CliError> {
    let preds = predict_spikes(&cfg.model()?)?;
    Ok(vec![prediction_table(&preds)])
}

pub fn prediction_table(preds: &[SpikePrediction]) -> Table {
    let mut t = Table::new("predictions", PREDICTION_HEADER.to_vec());
    for p in preds {
        t.push(vec![
            p.spike_index.into(),
            p.alpha.into(),
            p.multiplicity.into(),
            class_name(p.class).into(),
            p.psi_prime.into(),
            (if p.psi_prime > 0.0 { "+" } else { "-" }).into(),
            p.ranks.map(|r| r.0).into(),
            p.ranks.map(|r| r.1).into(),
            limit_name(p.limit_kind).into(),
            p.limit_value.into(),
            p.gamma.into(),
            p.endpoints.map(|e| e.0).into(),
            p.endpoints.map(|e| e.1).into(),
        ]);
    }
    t
}

fn class_name(c: SpikeClass) -> &'static str {
    match c {
        SpikeClass::Distant => "distant",
        SpikeClass::Close => "close",
    }
}

fn limit_name(k: LimitKind) -> &'static str {
    match k {
        LimitKind::OutsideSupport => "outside_support",
        LimitKind::SupportEdge => "support_edge",
        LimitKind::Quantile => "quantile",
    }
}

/// Reads back the CSV written for [`prediction_table`].
pub fn parse_predictions(text: &str) -> Result<Vec<SpikePrediction>, CliError> {
    let bad = |what: &str| CliError::Runtime(format!("prediction table: bad {what}"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CliError::Runtime(e.to_string()))?;
    if header.iter().ne(PREDICTION_HEADER) {
        return Err(bad("header"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Runtime(e.to_string()))?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(PREDICTION_HEADER[i]));
        let u = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(PREDICTION_HEADER[i]));
        let opt_f = |i: usize| if rec[i].is_empty() { Ok(None) } else { f(i).map(Some) };
        let opt_u = |i: usize| if rec[i].is_empty() { Ok(None) } else { u(i).map(Some) };
        let class = match &rec[3] {
            "distant" => SpikeClass::Distant,
            "close" => SpikeClass::Close,
            _ => return Err(bad("class")),
        };
        let limit_kind = match &rec[8] {
            "outside_support" => LimitKind::OutsideSupport,
            "support_edge" => LimitKind::SupportEdge,
            "quantile" => LimitKind::Quantile,
            _ => return Err(bad("limit_kind")),
        };
        out.push(SpikePrediction {
            spike_index: u(0)?,
            alpha: f(1)?,
            multiplicity: u(2)?,
            class,
            psi_prime: f(4)?,
            ranks: opt_u(6)?.zip(opt_u(7)?),
            limit_kind,
            limit_value: f(9)?,
            gamma: opt_f(10)?,
            endpoints: opt_f(11)?.zip(opt_f(12)?),
        });
    }
    Ok(out)
}

fn require_sizes(cfg: &ModelConfig, command: &str) -> Result<(SpikedModel, usize, usize), CliError> {
    let model = cfg.model()?;
    let sizes = model
        .sizes()
        .ok_or_else(|| CliError::Config(format!("{command} needs p_prime or n in the config")))?;
    if cfg.reps == 0 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }
    let p = sizes.p_prime + model.total_multiplicity();
    Ok((model, p, sizes.n))
}

pub fn simulate(cfg: &ModelConfig) -> Result<Vec<Table>, CliError> {
    let (model, p, n) = require_sizes(cfg, "simulate")?;
    let spectrum = PopulationSpectrum::from_model(&model, p)?;
    let spectra = run_replications(&spectrum, n, cfg.reps, cfg.entry_law, cfg.seed, |s| {
        Ok(s.eigenvalues)
    })?;

    let mut eig = Table::new("eigenvalues", vec!["rep", "rank", "value"]);
    for (r, ev) in spectra.iter().enumerate() {
        for (j, &v) in ev.iter().enumerate() {
            eig.push(vec![r.into(), (j + 1).into(), v.into()]);
        }
    }

    let preds = predict_spikes(&model)?;
    let limit_of = |rank: usize| {
        preds
            .iter()
            .find(|pr| pr.ranks.is_some_and(|(lo, hi)| (lo..=hi).contains(&rank)))
            .map(|pr| pr.limit_value)
    };
    let mut summary = Table::new(
        "summary",
        vec!["rank", "mean", "sd", "min", "max", "predicted_limit"],
    );
    for rank in tracked_ranks(&model, p)? {
        let col: Vec<f64> = spectra.iter().map(|ev| ev[rank - 1]).collect();
        let s = MomentSummary::of(&col);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.push(vec![
            rank.into(),
            s.mean.into(),
            s.variance.sqrt().into(),
            min.into(),
            max.into(),
            limit_of(rank).into(),
        ]);
    }

    let mut tables = vec![eig, summary];
    for (lo, hi) in HISTOGRAM_WINDOWS {
        tables.push(histogram(&spectra, lo, hi));
    }
    Ok(tables)
}

/// Bin counts over all replications; the last bin is closed on the right.
fn histogram(spectra: &[Vec<f64>], lo: f64, hi: f64) -> Table {
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &v in spectra.iter().flatten() {
        if (lo..=hi).contains(&v) {
            let b = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
            counts[b] += 1;
        }
    }
    let mut t = Table::new(format!("histogram_{lo}_{hi}"), vec!["lo", "hi", "count"]);
    for (b, c) in counts.into_iter().enumerate() {
        let a = lo + b as f64 * width;
        t.push(vec![a.into(), (a + width).into(), c.into()]);
    }
    t
}

pub fn verify(cfg: &ModelConfig) -> Result<(Vec<Table>, Outcome), CliError> {
    let model = cfg.model()?;
    let opts = VerifyOptions {
        reps: cfg.reps,
        seed: cfg.seed,
        law: cfg.entry_law,
    };
    let checks = run_checks(&model, &opts);
    let mut t = Table::new(
        "checks",
        vec!["id", "description", "measured", "expected", "tolerance", "passed"],
    );
    for c in &checks {
        t.push(vec![
            c.id.clone().into(),
            c.description.clone().into(),
            c.measured.into(),
            c.expected.into(),
            c.tolerance.into(),
            c.passed.into(),
        ]);
    }
    let outcome = if checks.iter().all(|c| c.passed) {
        Outcome::Ok
    } else {
        Outcome::ChecksFailed
    };
    Ok((vec![t], outcome))
}

pub fn clt(cfg: &ModelConfig) -> Result<Vec<Table>, CliError> {
    let model = cfg.model()?;
    let mp = model.mp();
    let mut scales = Table::new(
        "clt",
        vec!["spike_index", "alpha", "multiplicity", "class", "lambda", "theta", "m1", "m2", "m3"],
    );
    let mut distant = Vec::new();
    for (k, s) in model.spikes().iter().enumerate() {
        let class = classify(&model, k)?;
        let mut row: Vec<Cell> = vec![
            k.into(),
            s.alpha.into(),
            s.multiplicity.into(),
            class_name(class).into(),
        ];
        if class == SpikeClass::Distant {
            let lambda = mp.psi(s.alpha)?;
            let m = m_transforms(mp, lambda)?;
            row.extend([
                lambda.into(),
                clt_scale(&model, k)?.into(),
                m.m1.into(),
                m.m2.into(),
                m.m3.into(),
            ]);
            distant.push(k);
        } else {
            row.extend(std::iter::repeat_n(Cell::Empty, 5));
        }
        scales.push(row);
    }
    let mut tables = vec![scales];
    let Some(sizes) = model.sizes() else {
        return Ok(tables);
    };
    if cfg.reps == 0 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }

    let mut normality = Table::new(
        "normality",
        vec![
            "spike_index",
            "member",
            "count",
            "mean",
            "variance",
            "skewness",
            "excess_kurtosis",
            "jarque_bera",
            "critical_value",
            "verdict",
            "underpowered",
        ],
    );
    let mut values = Table::new("fluctuations", vec!["spike_index", "rep", "member", "value"]);
    for k in distant {
        let sample = fluctuations(&model, k, &[sizes.n], cfg.reps, cfg.entry_law, cfg.seed)?
            .pop()
            .ok_or_else(|| CliError::Runtime("empty fluctuation run".into()))?;
        for (r, row) in sample.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                values.push(vec![k.into(), r.into(), (j + 1).into(), v.into()]);
            }
        }
        let report = normality_report(&sample)?;
        for (j, m) in report.members.iter().enumerate() {
            // The verdict concerns the leading member only.
            let lead = j == 0;
            normality.push(vec![
                k.into(),
                (j + 1).into(),
                m.count.into(),
                m.mean.into(),
                m.variance.into(),
                m.skewness.into(),
                m.excess_kurtosis.into(),
                m.jarque_bera.into(),
                lead.then_some(report.critical_value).into(),
                lead.then_some(verdict_name(report.verdict)).into(),
                lead.then_some(report.underpowered).into(),
            ]);
        }
    }
    tables.push(normality);
    tables.push(values);
    Ok(tables)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::FailZeroVariance => "fail_zero_variance",
    }
}

use std::collections::BTreeMap;
use std::time::Instant;

use super::{fit_exponent, Check, HarnessError, PlotSpec, Row, Scenario, ScenarioConfig, SweepRecord};
use crate::dynamics::{
    dyson_diagnostics, microscopic_survival, microscopic_window, pulse_survival, threshold_distance, PulseSchedule,
    Side, VolterraOptions,
};
use crate::exec::Execution;
use crate::formfactor::SpectralMeasure;
use crate::spectral::{Model, SpectralDensity, SpectralError, StaticPropagator};

/// Everything a row needs, shared read-only across workers.
struct Setup {
    model: Model,
    schedule: PulseSchedule,
    options: VolterraOptions,
}

impl Setup {
    fn new(config: &ScenarioConfig) -> Result<Self, HarnessError> {
        let measure = SpectralMeasure::from_config(&config.model.measure)?;
        let model = Model::new(measure, config.model.tau)?;
        let schedule = PulseSchedule::from_config(&config.schedule).map_err(|e| HarnessError::Model(e.to_string()))?;
        Ok(Self {
            model,
            schedule,
            options: VolterraOptions {
                max_step: config.solver.max_step,
                execution: Execution::Sequential,
            },
        })
    }

    fn critical_energy(&self) -> Result<f64, HarnessError> {
        Ok(self.model.critical()?.energy)
    }

    fn require_subcritical(&self) -> Result<(), HarnessError> {
        self.model
            .check_subcritical(self.schedule.e_max())
            .map_err(|e| HarnessError::Model(e.to_string()))
    }

    /// The dispersive lower bound at the pulse maximum.
    fn require_dispersive(&self) -> Result<f64, HarnessError> {
        let e_a = self.schedule.energy(self.schedule.s_max());
        let check = self.model.dispersive_check(e_a)?;
        if !check.holds {
            return Err(HarnessError::Model(format!(
                "|F(r² + i0, E_a)| is not bounded below at E_a = {e_a} (infimum {:e})",
                check.infimum
            )));
        }
        Ok(check.infimum)
    }

    fn info(&self) -> BTreeMap<String, f64> {
        let mut info = BTreeMap::new();
        info.insert("tau".into(), self.model.tau());
        info.insert("e_lo".into(), self.schedule.e_lo());
        info.insert("e_max".into(), self.schedule.e_max());
        if let Ok(c) = self.model.critical() {
            info.insert("critical_energy".into(), c.energy);
            info.insert("critical_dot_weight_sq".into(), c.dot_weight_sq);
        }
        info
    }
}

/// Runs `job` on every item and turns errors into flagged rows.
fn table<T, F>(execution: Execution, items: &[T], width: usize, job: F) -> Vec<Row>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<f64>, HarnessError> + Sync,
{
    execution.map(items, |item| {
        let start = Instant::now();
        let result = job(item);
        let runtime_seconds = start.elapsed().as_secs_f64();
        match result {
            Ok(values) => Row {
                values,
                failure: None,
                runtime_seconds,
            },
            Err(e) => Row {
                values: vec![f64::NAN; width],
                failure: Some(e.to_string()),
                runtime_seconds,
            },
        }
    })
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn empty_record(scenario: Scenario, names: &[&str], plot: PlotSpec) -> SweepRecord {
    SweepRecord {
        scenario,
        columns: columns(names),
        rows: Vec::new(),
        fits: BTreeMap::new(),
        checks: Vec::new(),
        info: BTreeMap::new(),
        series: BTreeMap::new(),
        plot,
    }
}

fn plot(x: usize, ys: &[usize], log_x: bool, log_y: bool, y_label: &str) -> PlotSpec {
    PlotSpec {
        x,
        ys: ys.to_vec(),
        log_x,
        log_y,
        y_label: y_label.into(),
    }
}

/// Fits column `y` against column `x` over completed rows and stores the fit.
/// A fit error becomes a failed check named after the fit.
fn fit_columns(record: &mut SweepRecord, name: &str, x: &str, y: &str) -> Option<f64> {
    let xs = record.column(x)?;
    let ys = record.column(y)?;
    let pairs: Vec<(f64, f64)> = xs.into_iter().zip(ys).filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
    match fit_exponent(&pairs) {
        Ok(fit) => {
            record.fits.insert(name.into(), fit);
            Some(fit.slope)
        }
        Err(e) => {
            record.checks.push(Check::new(name, f64::NAN, false, e.to_string()));
            None
        }
    }
}

pub(super) fn run(config: &ScenarioConfig, scenario: Scenario, execution: Execution) -> Result<SweepRecord, HarnessError> {
    config.validate(scenario)?;
    let setup = Setup::new(config)?;
    let mut record = match scenario {
        Scenario::Spectral => spectral(config, &setup, execution)?,
        Scenario::Dispersion => dispersion(config, &setup, execution)?,
        Scenario::ThresholdAdiabatic | Scenario::Breakdown | Scenario::GapCase => {
            sweep(config, scenario, &setup, execution)?
        }
        Scenario::Microscopic => microscopic(config, &setup, execution)?,
        Scenario::Dyson => dyson(config, &setup, execution)?,
    };
    let mut info = setup.info();
    info.append(&mut record.info);
    record.info = info;
    Ok(record)
}

fn spectral(config: &ScenarioConfig, setup: &Setup, execution: Execution) -> Result<SweepRecord, HarnessError> {
    let cfg = &config.spectral;
    let tol = &config.tolerances;
    let model = &setup.model;
    let energies = if cfg.energies.is_empty() {
        let (lo, hi) = (setup.schedule.e_lo(), setup.schedule.e_max());
        (0..cfg.points)
            .map(|k| lo + (hi - lo) * k as f64 / (cfg.points - 1) as f64)
            .collect()
    } else {
        cfg.energies.clone()
    };
    let names = [
        "energy",
        "eigenvalue",
        "dot_weight_sq",
        "continuum_weight",
        "total_weight",
        "resonance_energy",
    ];
    let mut record = empty_record(Scenario::Spectral, &names, plot(0, &[1, 2, 3], false, false, "value"));
    record.rows = table(execution, &energies, names.len(), |&e| {
        if model.tau() == 0.0 {
            // the dot is an eigenvector of the decoupled model at every energy
            return Ok(vec![e, e, 1.0, 0.0, 1.0, f64::NAN]);
        }
        let (eigenvalue, weight) = match model.bound_state(e) {
            Ok(b) => (b.eigenvalue, b.dot_weight_sq),
            Err(SpectralError::NoBoundState { critical, .. }) if e <= critical * (1.0 + 1e-12) => {
                // the eigenvalue sits at the threshold itself
                (0.0, model.critical()?.dot_weight_sq)
            }
            Err(SpectralError::NoBoundState { .. }) => (f64::NAN, 0.0),
            Err(err) => return Err(err.into()),
        };
        let density = SpectralDensity::new(model, e)?;
        let continuum = density.total_weight();
        let resonance = density.resonance().map_or(f64::NAN, |r| r * r);
        Ok(vec![e, eigenvalue, weight, continuum, continuum + weight, resonance])
    });

    // the threshold row is a degenerate limit and is reported separately
    let critical = model.critical().map(|c| c.energy).unwrap_or(f64::NAN);
    let at_threshold = |e: f64| model.tau() > 0.0 && (e - critical).abs() <= 1e-12 * critical.abs().max(1.0);
    let mut worst = 0.0f64;
    for (e, total) in energies.iter().zip(record.column("total_weight").unwrap_or_default()) {
        let err = (total - 1.0).abs();
        if at_threshold(*e) {
            record.info.insert("threshold_sum_rule_error".into(), err);
        } else if err.is_nan() || worst.is_nan() {
            worst = f64::NAN;
        } else {
            worst = worst.max(err);
        }
    }
    record.checks.push(Check::new(
        "sum_rule",
        worst,
        worst <= tol.sum_rule,
        format!("max |∫ρ + dot weight - 1| <= {:e} off the threshold", tol.sum_rule),
    ));

    if model.tau() > 0.0 {
        let critical = model.critical()?;
        let eps = cfg.slope_offset;
        let lambda = model.bound_state(critical.energy - eps)?.eigenvalue;
        let ratio = lambda / (-eps) / critical.dot_weight_sq;
        record.info.insert("eigenvalue_slope".into(), lambda / (-eps));
        record.checks.push(Check::new(
            "threshold_slope",
            (ratio - 1.0).abs(),
            (ratio - 1.0).abs() <= tol.threshold_slope,
            format!(
                "λ(E_c - {eps:e})/(-{eps:e}) = {ratio} × threshold dot weight; relative error <= {}",
                tol.threshold_slope
            ),
        ));

        let scaled = execution.map(&cfg.derivative_offsets, |&d| {
            model
                .projection_derivative_norm(critical.energy - d)
                .map(|n| (d, n * d.powf(cfg.derivative_exponent)))
        });
        let scaled: Vec<(f64, f64)> = scaled.into_iter().collect::<Result<_, _>>()?;
        let (lo, hi) = scaled
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
        let variation = hi / lo;
        record.checks.push(Check::new(
            "projection_derivative",
            variation,
            variation.is_finite() && variation < tol.projection_variation,
            format!(
                "max/min of ‖P′(E)‖ (E_c - E)^{} < {}",
                cfg.derivative_exponent, tol.projection_variation
            ),
        ));
        record.series.insert("projection_derivative_scaled".into(), scaled);
    }
    Ok(record)
}

fn dispersion(config: &ScenarioConfig, setup: &Setup, execution: Execution) -> Result<SweepRecord, HarnessError> {
    let cfg = &config.dispersion;
    let tol = &config.tolerances;
    let energy = cfg.energy.unwrap_or_else(|| setup.schedule.e_max());
    let propagator = StaticPropagator::new(&setup.model, energy).map_err(|e| HarnessError::Model(e.to_string()))?;
    let ratio = (cfg.t_max / cfg.t_min).ln();
    let times: Vec<f64> = (0..cfg.points)
        .map(|k| cfg.t_min * (ratio * k as f64 / (cfg.points - 1) as f64).exp())
        .collect();
    let names = ["time", "modulus", "re", "im"];
    let mut record = empty_record(Scenario::Dispersion, &names, plot(0, &[1], true, true, "|survival amplitude|"));
    record.rows = table(execution, &times, names.len(), |&t| {
        let s = propagator.amplitude(t);
        Ok(vec![t, s.norm(), s.re, s.im])
    });
    record.info.insert("energy".into(), energy);
    record.info.insert("dispersive_infimum".into(), propagator.check().infimum);
    if let Some(r) = propagator.density().resonance() {
        record.info.insert("resonance_energy".into(), r * r);
    }
    if let Some(slope) = fit_columns(&mut record, "decay", "time", "modulus") {
        let off = (slope - tol.dispersion_exponent).abs();
        record.checks.push(Check::new(
            "decay_exponent",
            slope,
            off <= tol.dispersion_slack,
            format!("slope {} ± {}", tol.dispersion_exponent, tol.dispersion_slack),
        ));
    }
    Ok(record)
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn sweep(
    config: &ScenarioConfig,
    scenario: Scenario,
    setup: &Setup,
    execution: Execution,
) -> Result<SweepRecord, HarnessError> {
    let tol = &config.tolerances;
    setup.require_subcritical()?;
    let mut extra = BTreeMap::new();
    match scenario {
        Scenario::Breakdown => {
            extra.insert("dispersive_infimum".to_string(), setup.require_dispersive()?);
        }
        Scenario::GapCase => {
            let gap = setup.model.measure().support_lo();
            if !(gap > setup.schedule.e_max()) {
                return Err(HarnessError::Model(format!(
                    "gap case needs E_max < δ², got E_max = {} and δ² = {gap}",
                    setup.schedule.e_max()
                )));
            }
            extra.insert("gap_edge".to_string(), gap);
        }
        _ => {}
    }
    let critical = setup.critical_energy()?;
    let names = [
        "eta",
        "survival",
        "distance_forward",
        "distance_backward",
        "critical_energy",
        "initial_eigenvalue",
    ];
    let ys: &[usize] = match scenario {
        Scenario::ThresholdAdiabatic => &[2, 3],
        _ => &[1],
    };
    let label = match scenario {
        Scenario::ThresholdAdiabatic => "distance to critical eigenvector",
        _ => "survival probability",
    };
    let mut record = empty_record(scenario, &names, plot(0, ys, true, scenario == Scenario::ThresholdAdiabatic, label));
    record.info = extra;
    let initial = setup.model.bound_state(setup.schedule.e_lo())?.eigenvalue;
    let (model, schedule, options) = (&setup.model, &setup.schedule, &setup.options);
    record.rows = table(execution, &config.etas, names.len(), |&eta| {
        let survival = pulse_survival(model, schedule, eta, options)?;
        let forward = threshold_distance(model, schedule, eta, Side::Forward, options)?;
        let backward = threshold_distance(model, schedule, eta, Side::Backward, options)?;
        Ok(vec![eta, survival, forward.distance, backward.distance, critical, initial])
    });

    let survival = record.column("survival").unwrap_or_default();
    match scenario {
        Scenario::ThresholdAdiabatic => {
            let distance = record.column("distance_forward").unwrap_or_default();
            record.checks.push(Check::new(
                "distance_decreasing",
                distance.last().copied().unwrap_or(f64::NAN),
                strictly_decreasing(&distance),
                "distance at s_c strictly decreases as η decreases",
            ));
            if let Some(slope) = fit_columns(&mut record, "distance_forward", "eta", "distance_forward") {
                record.checks.push(Check::new(
                    "distance_exponent",
                    slope,
                    slope >= tol.threshold_exponent,
                    format!("fitted exponent >= {}", tol.threshold_exponent),
                ));
            }
            fit_columns(&mut record, "distance_backward", "eta", "distance_backward");
        }
        Scenario::Breakdown => {
            record.checks.push(Check::new(
                "survival_decreasing",
                survival.last().copied().unwrap_or(f64::NAN),
                strictly_decreasing(&survival),
                "survival strictly decreases as η decreases",
            ));
            let (first, last) = (survival[0], survival[survival.len() - 1]);
            record.checks.push(Check::new(
                "survival_drop",
                last / first,
                last < tol.breakdown_ratio * first,
                format!("survival(η_min) < {} × survival(η_max)", tol.breakdown_ratio),
            ));
            if survival.len() >= 3 {
                fit_columns(&mut record, "survival", "eta", "survival");
            }
        }
        Scenario::GapCase => {
            let last = survival[survival.len() - 1];
            record.checks.push(Check::new(
                "gap_survival",
                last,
                last >= tol.gap_survival,
                format!("survival at η_min >= {}", tol.gap_survival),
            ));
        }
        _ => unreachable!("not an η sweep"),
    }
    Ok(record)
}

fn microscopic(config: &ScenarioConfig, setup: &Setup, execution: Execution) -> Result<SweepRecord, HarnessError> {
    let tol = &config.tolerances;
    let alphas = config.microscopic.as_ref().map(|m| m.alphas.clone()).unwrap_or_default();
    setup.require_subcritical()?;
    let order = setup
        .model
        .measure()
        .ir_order()
        .ok_or_else(|| HarnessError::Model("microscopic windows need a measure with an infrared order".into()))?;
    let jobs: Vec<(f64, f64)> = config
        .etas
        .iter()
        .flat_map(|&eta| alphas.iter().map(move |&alpha| (eta, alpha)))
        .collect();
    let names = ["eta", "alpha", "window", "survival", "loss"];
    let mut record = empty_record(Scenario::Microscopic, &names, plot(1, &[4], true, true, "1 - survival"));
    let (model, schedule, options) = (&setup.model, &setup.schedule, &setup.options);
    record.rows = table(execution, &jobs, names.len(), |&(eta, alpha)| {
        let survival = microscopic_survival(model, schedule, eta, alpha, options)?;
        Ok(vec![eta, alpha, microscopic_window(order, eta, alpha), survival, 1.0 - survival])
    });

    for (k, &eta) in config.etas.iter().enumerate() {
        let rows = &record.rows[k * alphas.len()..(k + 1) * alphas.len()];
        let losses: Vec<f64> = rows.iter().map(|r| r.values[4]).collect();
        let worst = alphas
            .windows(2)
            .zip(losses.windows(2))
            .map(|(a, l)| {
                let factor = (l[1] / l[0]) / (a[1] / a[0]);
                if factor.is_nan() || factor <= 0.0 {
                    f64::INFINITY
                } else {
                    factor.max(1.0 / factor)
                }
            })
            .fold(1.0, f64::max);
        record.checks.push(Check::new(
            format!("loss_linear_in_window eta={eta:e}"),
            worst,
            alphas.len() >= 2 && worst <= tol.microscopic_factor,
            format!(
                "loss ratios within ×{} of window ratios; largest mismatch ×{worst}",
                tol.microscopic_factor
            ),
        ));
        let pairs: Vec<(f64, f64)> = alphas.iter().copied().zip(losses).collect();
        if let Ok(fit) = fit_exponent(&pairs) {
            record.fits.insert(format!("loss_vs_alpha eta={eta:e}"), fit);
        }
    }
    record.info.insert("ir_order".into(), order as f64);
    Ok(record)
}

fn dyson(config: &ScenarioConfig, setup: &Setup, execution: Execution) -> Result<SweepRecord, HarnessError> {
    setup.require_subcritical()?;
    let names = ["eta", "i1", "i2", "i3", "i4"];
    let mut record = empty_record(Scenario::Dyson, &names, plot(0, &[1, 2, 3, 4], true, true, "term magnitude"));
    record
        .info
        .insert("e_a".into(), setup.schedule.energy(setup.schedule.s_max()));
    if setup.model.tau() > 0.0 {
        record.info.insert("dispersive_infimum".into(), setup.require_dispersive()?);
    }
    let (model, schedule) = (&setup.model, &setup.schedule);
    record.rows = table(execution, &config.etas, names.len(), |&eta| {
        let d = dyson_diagnostics(model, schedule, eta)?;
        Ok(vec![eta, d.i1, d.i2, d.i3, d.i4])
    });
    let sane = record.rows.iter().all(|r| {
        r.values[1..].iter().all(|v| v.is_finite() && *v >= 0.0) && r.values[1] <= 1.0 + 1e-9
    });
    let largest_i1 = record.rows.iter().map(|r| r.values[1]).fold(0.0, f64::max);
    record.checks.push(Check::new(
        "terms_bounded",
        largest_i1,
        sane,
        "every term finite and nonnegative, I1 <= 1",
    ));
    Ok(record)
}

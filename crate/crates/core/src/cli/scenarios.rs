use std::collections::BTreeMap;
use std::error::Error;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{
    DiophSection, HomologicalSection, KamSection, OscillatorSection, RunConfig, Scenario,
    SmallTwistSection,
};
use super::{Artifact, Table, TraceStep, Verdict};
use crate::apseries::{
    write_series, write_series2, APSeries, FrequencyBasis, ModeSeries, MultiIndex,
    SpatialStructure, Spectrum, YDomain,
};
use crate::diophantine::{check_alpha, check_omega, DiophantineError, NonresonanceReport};
use crate::homological::{coefficient_mass, parity_of_solution, solve_difference, Parity};
use crate::kam::{kam_iterate, kam_step, RunStatus, StepControl};
use crate::oscillator::{
    boundedness_experiment, expansion_coefficients, expansion_order, integrate, mean_twist,
    radial_inits, resonant_chart, resonant_component, reversibility_defect, twist_margin_on,
    OscillatorError, OscillatorSpec, PoincareExpansion,
};
use crate::smalltwist::{averaging_transform, resonant_split, twist_condition, TOL_RES};

pub(super) type BoxError = Box<dyn Error + Send + Sync>;

/// What a scenario hands back before stamping.
pub(super) struct Outcome {
    pub verdict: Verdict,
    pub summary: BTreeMap<String, f64>,
    pub steps: Vec<TraceStep>,
    pub notes: Vec<String>,
    pub tables: Vec<(String, Table)>,
    pub files: Vec<Artifact>,
}

impl Outcome {
    fn new(verdict: Verdict) -> Self {
        Self {
            verdict,
            summary: BTreeMap::new(),
            steps: Vec::new(),
            notes: Vec::new(),
            tables: Vec::new(),
            files: Vec::new(),
        }
    }

    fn put(&mut self, name: &str, v: f64) {
        self.summary.insert(name.to_string(), v);
    }

    fn file(&mut self, name: &str, body: String) {
        self.files.push(Artifact {
            name: name.to_string(),
            body,
        });
    }
}

fn metrics(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub(super) fn dispatch(cfg: &RunConfig) -> Result<Outcome, BoxError> {
    let section = |name: &str| -> BoxError { format!("section [{name}] missing").into() };
    let osc = || cfg.oscillator.as_ref().ok_or_else(|| section("oscillator"));
    let st = || cfg.small_twist.as_ref().ok_or_else(|| section("small_twist"));
    let kam = || cfg.kam.as_ref().ok_or_else(|| section("kam"));
    match cfg.scenario {
        Scenario::Homological => homological(
            cfg.homological.as_ref().ok_or_else(|| section("homological"))?,
            cfg.seed,
        ),
        Scenario::KamStep => kam_single(kam()?),
        Scenario::KamRun => kam_run(kam()?),
        Scenario::DiophScan => dioph(cfg.dioph.as_ref().ok_or_else(|| section("dioph"))?),
        Scenario::SmallTwistAvg => small_twist_avg(st()?, osc()?),
        Scenario::SmallTwistSplit => small_twist_split(st()?, osc()?),
        Scenario::SmallTwistChart => small_twist_chart(st()?, osc()?),
        Scenario::OscillatorSimulate => simulate(osc()?),
        Scenario::OscillatorPoincare => poincare(osc()?),
        Scenario::OscillatorExpansion => expansion(osc()?),
        Scenario::OscillatorBounded => bounded(osc()?),
        Scenario::OscillatorResonant => resonant(osc()?),
    }
}

fn homological(c: &HomologicalSection, seed: u64) -> Result<Outcome, BoxError> {
    let basis = FrequencyBasis::from_frequencies(&c.frequencies)?;
    let st = SpatialStructure::singletons_and_window(&basis, c.varrho)?;
    let mut out = Outcome::new(Verdict::Certified);
    match check_alpha(c.alpha, &basis, &st, &c.delta, 0.0, c.kmax, None) {
        Ok(r) => out.put("gamma0_observed", r.gamma_observed),
        Err(DiophantineError::ResonanceFound(r)) => {
            out.verdict = Verdict::Failed;
            out.notes.push(format!("α resonant at k = {}, j = {}", r.argmin_k, r.argmin_j));
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    }
    let spec = Spectrum::new(basis, st, c.kmax)?;
    let pos = spec.positive();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new(&["sample", "modes", "norm", "residual", "bound", "divisor_floor", "parity"]);
    let mut worst: f64 = 0.0;
    for n in 0..c.samples {
        let count = rng.random_range(1..=c.max_modes);
        let modes: Vec<(MultiIndex, Complex64)> = (0..count)
            .map(|_| {
                let i = pos[rng.random_range(0..pos.len())];
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (spec.mode(i).clone(), z)
            })
            .collect();
        let h = APSeries::from_modes(spec.clone(), &modes)?;
        let (sym, anti) = h.parity_decompose(c.alpha);
        let h = match n % 3 {
            0 => h,
            1 => sym,
            _ => anti,
        };
        let sol = solve_difference(&h, c.alpha, c.tol_div)?;
        let parity = match parity_of_solution(&h, c.alpha, &sol.l) {
            Ok(Parity::Odd) => -1.0,
            Ok(Parity::Even) => 1.0,
            Ok(Parity::None) => 0.0,
            Err(e) => {
                out.verdict = Verdict::Failed;
                out.notes.push(format!("sample {n}: {e}"));
                f64::NAN
            }
        };
        let norm = coefficient_mass(&h);
        let bound = 1e-10 * (1.0 + norm);
        if sol.residual > bound {
            out.verdict = Verdict::Failed;
            out.notes.push(format!("sample {n}: residual {:e} above {bound:e}", sol.residual));
        }
        worst = worst.max(sol.residual / bound);
        table.push(vec![n as f64, count as f64, norm, sol.residual, bound, sol.divisor_floor, parity]);
        out.steps.push(TraceStep {
            step: n,
            metrics: metrics(&[
                ("residual", sol.residual),
                ("norm", norm),
                ("divisor_floor", sol.divisor_floor),
                ("parity", parity),
            ]),
        });
    }
    out.put("worst_residual_ratio", worst);
    out.tables.push(("homological.tsv".into(), table));
    Ok(out)
}

fn step_control(k: &KamSection, notes: &mut Vec<String>) -> Result<StepControl, BoxError> {
    let mut ctl = k.control.clone();
    if k.calibrate && ctl.c6 == 0.0 && !k.instance.forcing.is_empty() {
        let cal = k.instance.calibrate(&ctl)?;
        notes.push(format!("c6 calibrated to {:e}", cal.c6));
        ctl.c6 = cal.c6;
    }
    Ok(ctl)
}

fn kam_single(k: &KamSection) -> Result<Outcome, BoxError> {
    let mut out = Outcome::new(Verdict::Certified);
    let ctl = step_control(k, &mut out.notes)?;
    let map = k.instance.build()?;
    let sched = k.instance.schedule();
    let s = kam_step(&map, &sched.strip(1), &ctl)?;
    let m = metrics(&[
        ("eps_in", s.eps_in),
        ("eps_out", s.eps_out),
        ("theta", s.theta),
        ("divisor_floor", s.divisor_floor),
        ("homological_residual", s.homological_residual),
        ("projection_residual", s.projection_residual),
        ("reversibility_in", s.reversibility_in),
        ("reversibility_out", s.reversibility_out),
        ("iterations", s.iterations as f64),
        ("transform_ok", flag(s.estimates.transform_ok())),
        ("derivative_ok", flag(s.estimates.derivative_ok())),
        ("map_ok", flag(s.estimates.map_ok())),
    ]);
    out.summary = m.clone();
    out.put("c6", ctl.c6);
    out.steps.push(TraceStep { step: 0, metrics: m });
    out.verdict = if s.eps_out <= 0.5 * s.eps_in && s.reversibility_out <= 1e-10 {
        Verdict::Certified
    } else if s.eps_out < s.eps_in {
        Verdict::BestEffort
    } else {
        Verdict::Failed
    };
    out.file("f_next.apseries", write_series2(&s.new_map.f));
    out.file("g_next.apseries", write_series2(&s.new_map.g));
    Ok(out)
}

fn kam_run(k: &KamSection) -> Result<Outcome, BoxError> {
    let mut out = Outcome::new(Verdict::Certified);
    let ctl = step_control(k, &mut out.notes)?;
    let run = kam_iterate(&k.instance.build()?, &k.instance.schedule(), &ctl)?;
    out.notes.extend(run.notes.iter().cloned());
    out.notes.push(format!("status {:?}", run.status));
    let mut table = Table::new(&[
        "step",
        "eps_schedule",
        "eps_in",
        "eps_out",
        "theta",
        "divisor_floor",
        "iterations",
        "projection_residual",
        "reversibility",
        "composed_derivative",
        "composed_bound",
        "accepted",
    ]);
    for r in &run.trace {
        let row = [
            ("eps_schedule", r.eps_schedule),
            ("eps_in", r.eps_in),
            ("eps_out", r.eps_out),
            ("theta", r.theta),
            ("divisor_floor", r.divisor_floor),
            ("iterations", r.iterations as f64),
            ("projection_residual", r.projection_residual),
            ("reversibility", r.reversibility),
            ("composed_derivative", r.composed_derivative),
            ("composed_bound", r.composed_bound),
            ("accepted", flag(r.accepted)),
        ];
        let mut cells = vec![r.step as f64];
        cells.extend(row.iter().map(|p| p.1));
        table.push(cells);
        let mut m = metrics(&row);
        m.insert("transform_ok".into(), flag(r.transform_ok));
        m.insert("derivative_ok".into(), flag(r.derivative_ok));
        m.insert("map_ok".into(), flag(r.map_ok));
        out.steps.push(TraceStep { step: r.step, metrics: m });
    }
    let c = &run.curve;
    out.put("conjugacy_defect", c.conjugacy_defect);
    out.put("restriction_defect", c.restriction_defect);
    out.put("invariance_defect", c.invariance_defect);
    out.put("steps", run.trace.len() as f64);
    out.put("c6", ctl.c6);
    out.verdict = match run.status {
        RunStatus::Converged if c.conjugacy_defect <= 1e-8 => Verdict::Certified,
        RunStatus::Converged | RunStatus::ScheduleExhausted => Verdict::BestEffort,
        _ => Verdict::Failed,
    };
    let mut curve = Table::new(&["x", "y"]);
    for j in 0..1024 {
        let x = 0.1 * j as f64;
        curve.push(vec![x, c.phi_curve.eval(x)]);
    }
    out.tables.push(("trace.tsv".into(), table));
    out.tables.push(("curve.tsv".into(), curve));
    out.file("curve.apseries", write_series(&c.phi_curve));
    Ok(out)
}

fn report_metrics(out: &mut Outcome, prefix: &str, r: &NonresonanceReport) {
    out.put(&format!("{prefix}_gamma_observed"), r.gamma_observed);
    out.put(&format!("{prefix}_checked_k"), r.checked_k as f64);
    out.put(&format!("{prefix}_checked_j"), r.checked_j as f64);
}

fn dioph(c: &DiophSection) -> Result<Outcome, BoxError> {
    let basis = FrequencyBasis::from_frequencies(&c.frequencies)?;
    let st = SpatialStructure::singletons_and_window(&basis, c.varrho)?;
    let mut out = Outcome::new(Verdict::Certified);
    let mut scan = |prefix: &str, res: Result<NonresonanceReport, DiophantineError>| -> Result<(), BoxError> {
        match res {
            Ok(r) => report_metrics(&mut out, prefix, &r),
            Err(DiophantineError::ResonanceFound(r)) => {
                report_metrics(&mut out, prefix, &r);
                out.verdict = Verdict::Failed;
                out.notes.push(format!(
                    "{prefix}: resonance witness k = {}, j = {} (observed {:e} < {:e})",
                    r.argmin_k, r.argmin_j, r.gamma_observed, r.threshold
                ));
            }
            Err(e) => return Err(e.into()),
        }
        Ok(())
    };
    scan("omega", check_omega(&basis, &st, &c.delta, c.gamma, c.kmax))?;
    if let Some(alpha) = c.alpha {
        scan("alpha", check_alpha(alpha, &basis, &st, &c.delta, c.gamma0, c.kmax, c.jmax))?;
    }
    Ok(out)
}

/// Builds the oscillator of a config section.
pub fn oscillator_spec(o: &OscillatorSection) -> Result<OscillatorSpec, BoxError> {
    let basis = FrequencyBasis::from_frequencies(&o.frequencies)?;
    let lo = basis.lo();
    let st = SpatialStructure::singletons_and_window(&basis, o.varrho)?;
    let spec = Spectrum::new(basis, st, o.kmax)?;
    let mut f = APSeries::zero(spec.clone());
    for m in &o.forcing {
        f = f.add(&APSeries::sin_mode(spec.clone(), &MultiIndex::dense(lo, &m.k), m.amplitude)?)?;
    }
    Ok(OscillatorSpec::new(o.varpi, o.phi, o.damping, f, o.phi_inf)?)
}

fn domain(s: &SmallTwistSection) -> Result<YDomain, BoxError> {
    Ok(YDomain::new(0.5 * (s.outer.0 + s.outer.1), 0.5 * (s.outer.1 - s.outer.0))?)
}

fn small_twist_avg(s: &SmallTwistSection, o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let pe = PoincareExpansion::new(spec, s.epsilon);
    let map = pe.small_twist(domain(s)?, s.degree, s.strip)?;
    let av = averaging_transform(&map, &s.averaging)?;
    let parity = av.parity_defect()?;
    let mut out = Outcome::new(Verdict::Certified);
    out.put("twist", twist_condition(&map.l));
    out.put("retained", av.retained as f64);
    out.put("divisor_floor", av.divisor_floor);
    out.put("tail", av.tail);
    out.put("tail_bound", av.tail_bound);
    out.put("projection_residual", av.projection_residual);
    out.put("reversibility_in", av.reversibility_in);
    out.put("reversibility_out", av.reversibility_out);
    out.put("parity_defect", parity);
    if av.tail > av.tail_bound || parity > 1e-9 {
        out.verdict = Verdict::BestEffort;
    }
    let mut t = Table::new(&["rho", "twist"]);
    for j in 0..=32 {
        let rho = s.outer.0 + (s.outer.1 - s.outer.0) * j as f64 / 32.0;
        t.push(vec![rho, av.map.twist.mean_at(rho)]);
    }
    out.tables.push(("twist.tsv".into(), t));
    out.file("phi1.apseries", write_series2(&av.map.phi1));
    out.file("phi2.apseries", write_series2(&av.map.phi2));
    Ok(out)
}

fn small_twist_split(s: &SmallTwistSection, o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let alpha = spec.alpha();
    let (l, m) = PoincareExpansion::new(spec, s.epsilon).leading_series(domain(s)?, s.degree)?;
    let sp = resonant_split(&l, &m, alpha, TOL_RES)?;
    let mut out = Outcome::new(Verdict::Certified);
    out.put("periodicity_defect", sp.periodicity_defect);
    out.put("parity_defect", sp.parity_defect);
    out.put("resonant_modes", sp.resonant_modes.len() as f64);
    for k in &sp.resonant_modes {
        out.notes.push(format!("resonant mode {k}"));
    }
    if sp.periodicity_defect > 1e-9 || sp.parity_defect > 1e-9 {
        out.verdict = Verdict::Failed;
    }
    out.file("l_hat.apseries", write_series2(&sp.l_hat));
    out.file("m_hat.apseries", write_series2(&sp.m_hat));
    out.file("l_tilde.apseries", write_series2(&sp.l_tilde));
    out.file("m_tilde.apseries", write_series2(&sp.m_tilde));
    Ok(out)
}

fn small_twist_chart(s: &SmallTwistSection, o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let ch = resonant_chart(&spec, s.outer, s.inner, s.degree, &s.chart)?;
    let rep = ch.chart.verify(s.verify_theta, s.verify_rho)?;
    let mut out = Outcome::new(Verdict::Certified);
    out.put("identity_residual", rep.identity);
    out.put("periodicity_defect", rep.periodicity);
    out.put("tau_shift_defect", rep.tau_shift);
    out.put("max_pi_slope", rep.max_pi_slope);
    out.put("margin", ch.margin.margin);
    out.put("orientation", ch.orientation);
    for k in &ch.modes {
        out.notes.push(format!("resonant mode {k}"));
    }
    if rep.identity > 1e-9 || rep.tau_shift > 1e-9 {
        out.verdict = Verdict::Failed;
    }
    let alpha = spec.alpha();
    let mut t = Table::new(&["theta", "rho", "action", "angle"]);
    for i in 0..s.verify_theta {
        let theta = alpha * i as f64 / s.verify_theta as f64;
        for j in 0..s.verify_rho {
            let rho = s.inner.0 + (s.inner.1 - s.inner.0) * j as f64 / (s.verify_rho - 1).max(1) as f64;
            let tau = ch.chart.time(theta, rho)?;
            t.push(vec![theta, rho, ch.chart.integral.value(theta, rho), tau]);
        }
    }
    out.tables.push(("chart.tsv".into(), t));
    Ok(out)
}

fn simulate(o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let p = &o.simulate;
    let tr = integrate(&spec, p.state, (0.0, p.t_end), p.tol)?;
    let rev = reversibility_defect(&spec, p.state, p.t_end, p.tol, 100)?;
    let mut out = Outcome::new(if rev <= 1e-9 {
        Verdict::Certified
    } else {
        Verdict::BestEffort
    });
    out.put("reversibility_defect", rev);
    out.put("max_radius", tr.max_radius());
    out.put("ode_steps", tr.step_count() as f64);
    let mut t = Table::new(&["t", "x", "y", "dx"]);
    let n = (p.t_end / p.sample_dt).floor() as usize;
    for j in 0..=n {
        let time = (j as f64 * p.sample_dt).min(p.t_end);
        let z = tr.at(time);
        t.push(vec![time, z[0], z[1], spec.velocity(&z)]);
    }
    out.tables.push(("trajectory.tsv".into(), t));
    Ok(out)
}

fn poincare(o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let p = &o.poincare;
    let pe = PoincareExpansion::new(spec.clone(), p.epsilon);
    let mut t = Table::new(&["rho0", "tau0", "rho1", "tau1", "rho1_expansion", "tau1_expansion"]);
    let mut dev: f64 = 0.0;
    for (r, tau) in p.grid.points() {
        let (r1, t1) = pe.numeric(r, tau)?;
        let (r2, t2) = pe.predict(r, tau)?;
        dev = dev.max((r1 - r2).abs()).max((t1 - t2).abs());
        t.push(vec![r, tau, r1, t1, r2, t2]);
    }
    let rev = pe.reversibility_defect(&p.grid)?;
    let mut out = Outcome::new(Verdict::Certified);
    out.put("expansion_deviation", dev);
    out.put("reversibility_defect", rev);
    out.put("symmetry_defect", pe.symmetry_defect(&p.grid)?);
    if rev > 1e-8 {
        out.verdict = Verdict::Failed;
    }
    if p.epsilons.len() >= 2 {
        let fit = expansion_order(&spec, &p.epsilons, &p.grid)?;
        out.put("order_exponent", fit.exponent);
        for (i, (&e, &d)) in fit.eps.iter().zip(&fit.deviation).enumerate() {
            out.steps.push(TraceStep {
                step: i,
                metrics: metrics(&[("epsilon", e), ("deviation", d)]),
            });
        }
        if !(1.8..=2.2).contains(&fit.exponent) {
            out.verdict = Verdict::Failed;
        }
    }
    out.tables.push(("poincare.tsv".into(), t));
    Ok(out)
}

fn expansion(o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let p = &o.expansion;
    let alpha = spec.alpha();
    let mut t = Table::new(&["tau0", "m", "m_by_parts", "l"]);
    for j in 0..p.n_tau {
        let tau = alpha * j as f64 / p.n_tau as f64;
        let c = expansion_coefficients(&spec, p.rho0, tau)?;
        t.push(vec![tau, c.m, c.m_by_parts, c.l]);
    }
    let mut out = Outcome::new(Verdict::Certified);
    out.tables.push(("coefficients.tsv".into(), t));
    let rep = match mean_twist(&spec, p.rho0, p.t_avg) {
        Ok(r) => r,
        Err(OscillatorError::ResonantForcing { k }) => {
            out.verdict = Verdict::BestEffort;
            out.notes.push(format!("resonant forcing at k = {k}; τ₀-average skipped"));
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    out.put("mean_twist", rep.empirical);
    out.put("target_magnitude", rep.target_magnitude);
    out.put("relative_error", rep.relative_error);
    out.put("stated_limit", rep.unscaled_limit);
    out.put("stated_limit_times_rho0", rep.unscaled_limit * p.rho0);
    out.put("brute_force", rep.brute_force);
    out.put(
        "sign_consistent",
        rep.sign_consistent.map_or(f64::NAN, flag),
    );
    out.notes.push(format!(
        "τ₀-average of l: measured {:e}, brute force {:e}, closed-form limit −4ϖ⁻³φ(+∞) = {:e} (×ρ₀: {:e})",
        rep.empirical,
        rep.brute_force,
        rep.unscaled_limit,
        rep.unscaled_limit * p.rho0
    ));
    out.verdict = if rep.degenerate {
        out.notes.push("φ(+∞) = 0: degenerate twist".into());
        Verdict::BestEffort
    } else if rep.relative_error <= 0.01 && rep.sign_consistent == Some(true) {
        Verdict::Certified
    } else {
        Verdict::Failed
    };
    Ok(out)
}

fn bounded(o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let p = &o.bounded;
    let rep = boundedness_experiment(&spec, &radial_inits(&p.radii), p.t_end, p.tol)?;
    let mut out = Outcome::new(Verdict::Certified);
    let mut t = Table::new(&["radius", "sup_abs", "amp_min", "amp_max", "envelope_ratio", "drift_slope"]);
    for (i, s) in rep.orbits.iter().enumerate() {
        t.push(vec![s.start[1], s.sup_abs, s.amp_min, s.amp_max, s.envelope_ratio, s.drift_slope]);
        out.steps.push(TraceStep {
            step: i,
            metrics: metrics(&[
                ("radius", s.start[1]),
                ("envelope_ratio", s.envelope_ratio),
                ("drift_slope", s.drift_slope),
                ("sup_abs", s.sup_abs),
            ]),
        });
    }
    out.put("max_envelope", rep.max_envelope);
    out.put("max_ratio", rep.max_ratio);
    out.put("max_abs_slope", rep.max_abs_slope);
    if rep.max_ratio > 3.0 || rep.max_abs_slope > 1e-5 {
        out.verdict = Verdict::Failed;
    }
    out.tables.push(("orbits.tsv".into(), t));
    Ok(out)
}

fn resonant(o: &OscillatorSection) -> Result<Outcome, BoxError> {
    let spec = oscillator_spec(o)?;
    let comp = resonant_component(&spec)?;
    let mut out = Outcome::new(Verdict::Certified);
    out.put("resonant_modes", comp.modes.len() as f64);
    for k in &comp.modes {
        out.notes.push(format!("resonant mode {k}"));
    }
    match twist_margin_on(&spec, o.resonant.grid) {
        Ok(m) => {
            out.put("margin", m.margin);
            out.put("argmin", m.argmin);
            out.put("sign", m.sign);
            out.put("period", TAU / spec.varpi);
        }
        Err(OscillatorError::MarginZero { tau0, value }) => {
            out.verdict = Verdict::Failed;
            out.notes.push(format!("twist margin vanishes near τ₀ = {tau0} ({value:e})"));
        }
        Err(e) => return Err(e.into()),
    }
    out.file("resonant_forcing.apseries", write_series(&comp.series));
    Ok(out)
}

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use ncprob::convolutions::{clt_iterate, convolve_measures, convolve_moments, ConvolutionError, ConvolutionKind};
use ncprob::graphs::{approx_process, GraphError};
use ncprob::loewner::{
    chain_measure, default_chain_grid, evaluate_chain, half_plane_capacity, sle_driving, DrivingFunction,
    HerglotzField, LoewnerError,
};
use ncprob::markov::{
    convergence_report, is_irreducible, lerw, magnetization, mdp_value_iteration, metropolis_ising,
    mrp_value, expected_rewards, period, second_eigenvalue_modulus, stationary_distribution, IsingState, MarkovError,
    MdpSpec, TransitionMatrix,
};
use ncprob::measures::{LawSpec, Measure, MeasureError, DEFAULT_GRID_POINTS};
use ncprob::numeric::linspace;
use ncprob::randmat::{esd, free_ar1, kolmogorov_distance, sample_gue, NoiseKind, RandmatError};
use ncprob::transforms::{scan_atoms, stieltjes_invert, HerglotzMap, TransformError, DEFAULT_EPS_LADDER};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use crate::output::{num, write, Artifact};
use crate::{Command, CliError, DrivingArgs, LawArgs, LawName, MarkovAction, Noise};

fn usage(e: impl Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        usage(e)
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        runtime(e)
    }
}

impl From<ConvolutionError> for CliError {
    fn from(e: ConvolutionError) -> Self {
        match e {
            ConvolutionError::Transform(_) | ConvolutionError::InvalidMoments(_) => runtime(e),
            _ => usage(e),
        }
    }
}

impl From<LoewnerError> for CliError {
    fn from(e: LoewnerError) -> Self {
        match e {
            LoewnerError::InvalidDriving(_)
            | LoewnerError::InvalidField(_)
            | LoewnerError::BadTimes { .. }
            | LoewnerError::NotUpperHalfPlane(_) => usage(e),
            _ => runtime(e),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Overflow(_) | GraphError::Measure(_) => runtime(e),
            _ => usage(e),
        }
    }
}

impl From<MarkovError> for CliError {
    fn from(e: MarkovError) -> Self {
        match e {
            MarkovError::NotConverged(_) | MarkovError::CapExceeded(_) | MarkovError::Transform(_) => runtime(e),
            _ => usage(e),
        }
    }
}

impl From<RandmatError> for CliError {
    fn from(e: RandmatError) -> Self {
        match e {
            RandmatError::Measure(_) => runtime(e),
            _ => usage(e),
        }
    }
}

fn law_from_args(a: &LawArgs) -> Result<LawSpec, CliError> {
    let var = a.sigma.map(|s| s * s).unwrap_or(a.var);
    let law = match a.law {
        LawName::Dirac => LawSpec::Dirac { c: a.center },
        LawName::Bernoulli => LawSpec::Bernoulli { p: a.p },
        LawName::Normal => LawSpec::Normal { mean: a.center, var },
        LawName::Arcsine => LawSpec::Arcsine { center: a.center, var },
        LawName::Semicircle => LawSpec::Semicircle { center: a.center, var },
        LawName::Poisson => LawSpec::Poisson { rate: a.rate },
        LawName::MarchenkoPastur => LawSpec::MarchenkoPastur { c: a.rate },
        LawName::FreeMeixner => LawSpec::FreeMeixner { a: a.a, c: a.meixner_c, u: a.u },
    };
    law.validate()?;
    Ok(law)
}

/// Inline JSON, or the path of a JSON file when `text` is not an object.
fn parse_law_json(text: &str, flag: &str) -> Result<LawSpec, CliError> {
    let law: LawSpec = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| usage(format!("--{flag}: {e}")))?
    } else {
        read_json(Path::new(text))?
    };
    law.validate()?;
    Ok(law)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn driving_from_args(d: &DrivingArgs) -> Result<DrivingFunction, CliError> {
    let driving = match &d.driving_file {
        Some(path) => read_json(path)?,
        None => DrivingFunction::constant(d.driving_constant.unwrap_or(0.0))?,
    };
    driving.validate()?;
    Ok(driving)
}

fn measure_of(law: &LawSpec) -> Result<Measure, CliError> {
    Ok(match law.to_atomic() {
        Some(a) => Measure::Atomic(a),
        None => Measure::Grid(law.to_grid(DEFAULT_GRID_POINTS)?),
    })
}

fn parse_point(s: &str) -> Result<Complex64, CliError> {
    let bad = || usage(format!("--eval expects 're,im' with im > 0, got '{s}'"));
    let (re, im) = s.split_once(',').ok_or_else(bad)?;
    let z = Complex64::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?);
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(bad())
    }
}

/// Rows `kind,x,value,exact` for a measure; `exact` is filled from `law`.
fn measure_rows(art: &mut Artifact, measure: &Measure, law: Option<&LawSpec>) {
    let exact_density = |x: f64| law.map(|l| num(l.density(x))).unwrap_or_default();
    let exact_atom = |x: f64| {
        law.map(|l| num(l.atoms().iter().filter(|a| (a.0 - x).abs() < 1e-9).map(|a| a.1).sum())).unwrap_or_default()
    };
    if let Measure::Grid(g) = measure {
        for (&x, &d) in g.grid().iter().zip(g.density()) {
            art.row(vec!["density".into(), num(x), num(d), exact_density(x)]);
        }
    }
    for &(x, w) in measure.atoms() {
        art.row(vec!["atom".into(), num(x), num(w), exact_atom(x)]);
    }
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (art, output) = match command {
        Command::Convolve { kind, left, right, order, measure, output } => {
            let (mu, nu) = (parse_law_json(&left, "left")?, parse_law_json(&right, "right")?);
            (convolve(kind, &mu, &nu, order, measure)?, output)
        }
        Command::Invert { law, points, lo, hi, output } => (invert(&law_from_args(&law)?, points, lo, hi)?, output),
        Command::Loewner { driving, t, points, eval, tol, output } => {
            (loewner(&driving_from_args(&driving)?, t, points, &eval, tol)?, output)
        }
        Command::Sle { kappa, horizon, dt, seed, output } => (sle(kappa, horizon, dt, seed)?, output),
        Command::SpidernetApprox { driving, horizon, n, order, output } => {
            (spidernet_approx(&driving_from_args(&driving)?, horizon, n, order)?, output)
        }
        Command::Clt { kind, n, order, base, output } => (clt(kind, n, order, base.as_deref())?, output),
        Command::Markov { action, spec, initial, tol, output } => (markov(action, &spec, initial, tol)?, output),
        Command::Ising { width, height, beta, coupling, field, steps, seed, random_start, split_boundary, output } => {
            let mut state = IsingState::new(width, height.unwrap_or(width), coupling, field, beta)?;
            if random_start {
                state = state.randomized(seed.wrapping_add(1));
            }
            if split_boundary {
                state = state.split_boundary()?;
            }
            (ising(&state, steps, seed), output)
        }
        Command::Lerw { width, steps_cap, seed, output } => (walk(width, steps_cap, seed)?, output),
        Command::Gue { size, seed, output } => (gue(size, seed)?, output),
        Command::FreeAr1 { size, steps, c, noise, seed, spectrum, output } => {
            let noise = match noise {
                Noise::Gue => NoiseKind::Gue,
                Noise::SquaredGue => NoiseKind::SquaredGue,
            };
            (ar1(size, steps, c, noise, seed, spectrum)?, output)
        }
    };
    write(&art, output.format, output.out.as_deref(), stdout)
}

fn convolve(kind: ConvolutionKind, mu: &LawSpec, nu: &LawSpec, order: usize, measure: bool) -> Result<Artifact, CliError> {
    if measure {
        let result = convolve_measures(kind, &measure_of(mu)?, &measure_of(nu)?)?;
        let mut art = Artifact::new(&["kind", "x", "value", "exact"], json!({ "kind": kind, "measure": result }));
        measure_rows(&mut art, &result, None);
        return Ok(art);
    }
    let m = convolve_moments(kind, &mu.truncated_moments(order)?, &nu.truncated_moments(order)?)?;
    let mut art = Artifact::new(&["k", "moment"], json!({ "kind": kind, "moments": m.as_slice() }));
    for (k, v) in m.as_slice().iter().enumerate() {
        art.row(vec![(k + 1).to_string(), num(*v)]);
    }
    Ok(art)
}

fn invert(law: &LawSpec, points: usize, lo: Option<f64>, hi: Option<f64>) -> Result<Artifact, CliError> {
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let (a, b) = match law.continuous_support() {
        Some((a, b)) if a.is_finite() && b.is_finite() => (a, b),
        Some(_) => return Err(usage(format!("{} has unbounded support; give --lo and --hi", law.name()))),
        None => {
            let atoms = law.atoms();
            (atoms.first().map_or(-1.0, |a| a.0), atoms.last().map_or(1.0, |a| a.0))
        }
    };
    let pad = 0.1 * (b - a).max(1.0);
    let (lo, hi) = (lo.unwrap_or(a - pad), hi.unwrap_or(b + pad));
    if !(lo < hi) {
        return Err(usage(format!("need --lo < --hi, got {lo} and {hi}")));
    }
    let grid = linspace(lo, hi, points);
    let g = HerglotzMap::cauchy_of(*law);
    let atoms = scan_atoms(&g, &grid);
    let inv = stieltjes_invert(&g, &grid, &atoms, &DEFAULT_EPS_LADDER)?;
    let measure = Measure::Grid(inv.measure);
    let mut art = Artifact::new(
        &["kind", "x", "value", "exact"],
        json!({ "law": law, "raw_mass": inv.raw_mass, "measure": measure }),
    );
    measure_rows(&mut art, &measure, Some(law));
    Ok(art)
}

fn loewner(driving: &DrivingFunction, t: f64, points: usize, eval: &[String], tol: f64) -> Result<Artifact, CliError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(usage(format!("--t must be positive, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let field = HerglotzField::from_driving(driving, t)?;
    if !eval.is_empty() {
        let mut values = Vec::new();
        let mut art = Artifact::new(&["re", "im", "value_re", "value_im"], json!(null));
        for s in eval {
            let z = parse_point(s)?;
            let w = evaluate_chain(&field, 0.0, t, z, tol)?;
            art.row(vec![num(z.re), num(z.im), num(w.re), num(w.im)]);
            values.push(json!({ "z": [z.re, z.im], "value": [w.re, w.im] }));
        }
        art.json = json!({ "t": t, "driving": driving, "values": values });
        return Ok(art);
    }
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let measure = Measure::Grid(chain_measure(&field, t, &default_chain_grid(&field, t, points))?);
    let capacity = half_plane_capacity(&field, t, tol)?;
    let mut art = Artifact::new(
        &["kind", "x", "value", "exact"],
        json!({ "t": t, "driving": driving, "capacity": capacity, "measure": measure }),
    );
    measure_rows(&mut art, &measure, None);
    Ok(art)
}

fn sle(kappa: f64, horizon: f64, dt: f64, seed: u64) -> Result<Artifact, CliError> {
    let driving = sle_driving(kappa, horizon, dt, seed)?;
    let DrivingFunction::Sampled { times, values } = &driving else {
        return Err(runtime("SLE driving function is not sampled"));
    };
    let mut art = Artifact::new(&["t", "u"], json!({ "kappa": kappa, "seed": seed, "driving": driving }));
    for (t, u) in times.iter().zip(values) {
        art.row(vec![num(*t), num(*u)]);
    }
    Ok(art)
}

fn spidernet_approx(driving: &DrivingFunction, horizon: f64, n: usize, order: usize) -> Result<Artifact, CliError> {
    let steps = approx_process(driving, horizon, n, order)?;
    let mut art = Artifact::new(&["k", "time", "lateral", "vertices", "order", "scaled_moment"], json!(null));
    let mut doc = Vec::new();
    for s in &steps {
        let lateral = s.lateral.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(";");
        for (j, m) in s.scaled.as_slice().iter().enumerate() {
            art.row(vec![
                s.k.to_string(),
                num(s.time),
                lateral.clone(),
                s.graph.vertex_count().to_string(),
                (j + 1).to_string(),
                num(*m),
            ]);
        }
        doc.push(json!({
            "k": s.k,
            "time": s.time,
            "lateral": s.lateral,
            "vertices": s.graph.vertex_count(),
            "scaled_moments": s.scaled.as_slice(),
        }));
    }
    art.json = json!({ "horizon": horizon, "n": n, "driving": driving, "steps": doc });
    Ok(art)
}

fn clt(kind: ConvolutionKind, n: u64, order: usize, base: Option<&str>) -> Result<Artifact, CliError> {
    let base = match base {
        Some(text) => parse_law_json(text, "base")?,
        None => LawSpec::Bernoulli { p: 0.5 },
    };
    let limit = match kind {
        ConvolutionKind::Classical => LawSpec::Normal { mean: 0.0, var: 1.0 },
        ConvolutionKind::Boolean => LawSpec::Bernoulli { p: 0.5 },
        ConvolutionKind::Free => LawSpec::Semicircle { center: 0.0, var: 1.0 },
        ConvolutionKind::Monotone | ConvolutionKind::AntiMonotone => LawSpec::Arcsine { center: 0.0, var: 1.0 },
    };
    let m = clt_iterate(kind, &base.truncated_moments(order)?, n)?;
    let target = limit.truncated_moments(order)?;
    let mut art = Artifact::new(
        &["k", "moment", "limit"],
        json!({ "kind": kind, "n": n, "base": base, "limit": limit, "moments": m.as_slice(), "limit_moments": target.as_slice() }),
    );
    for k in 1..=order {
        art.row(vec![k.to_string(), num(m.get(k)), num(target.get(k))]);
    }
    Ok(art)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardProcessSpec {
    chain: TransitionMatrix,
    rewards: Vec<f64>,
    gamma: f64,
}

fn state_label(p: &TransitionMatrix, s: usize) -> String {
    p.labels()[s].clone()
}

fn markov(action: MarkovAction, spec: &Path, initial: Option<Vec<f64>>, tol: f64) -> Result<Artifact, CliError> {
    match action {
        MarkovAction::Stationary => {
            let p: TransitionMatrix = read_json(spec)?;
            let pi = stationary_distribution(&p)?;
            let periods: Vec<usize> = (0..p.states()).map(|s| period(&p, s)).collect();
            let mut art = Artifact::new(
                &["state", "label", "stationary"],
                json!({ "irreducible": is_irreducible(&p), "periods": periods, "stationary": pi.as_slice() }),
            );
            for s in 0..p.states() {
                art.row(vec![s.to_string(), state_label(&p, s), num(pi[s])]);
            }
            Ok(art)
        }
        MarkovAction::Converge => {
            let p: TransitionMatrix = read_json(spec)?;
            let v = match initial {
                Some(v) => DVector::from_vec(v),
                None => DVector::from_fn(p.states(), |i, _| if i == 0 { 1.0 } else { 0.0 }),
            };
            let report = convergence_report(&p, &v)?;
            let mut art = Artifact::new(
                &["n", "error"],
                json!({
                    "rate": report.rate,
                    "constant": report.constant,
                    "second_eigenvalue_modulus": second_eigenvalue_modulus(&p),
                    "stationary": report.stationary.as_slice(),
                    "errors": report.errors,
                }),
            );
            for (n, e) in report.errors.iter().enumerate() {
                art.row(vec![n.to_string(), num(*e)]);
            }
            Ok(art)
        }
        MarkovAction::Mrp => {
            let spec: RewardProcessSpec = read_json(spec)?;
            let expected = expected_rewards(&spec.chain, &spec.rewards)?;
            let v = mrp_value(&spec.chain, &spec.rewards, spec.gamma)?;
            let mut art = Artifact::new(
                &["state", "label", "expected_reward", "value"],
                json!({ "gamma": spec.gamma, "expected_rewards": expected.as_slice(), "value": v.as_slice() }),
            );
            for s in 0..spec.chain.states() {
                art.row(vec![s.to_string(), state_label(&spec.chain, s), num(expected[s]), num(v[s])]);
            }
            Ok(art)
        }
        MarkovAction::Mdp => {
            let spec: MdpSpec = read_json(spec)?;
            spec.validate()?;
            if !(tol > 0.0) {
                return Err(usage("--tol must be positive"));
            }
            let vi = mdp_value_iteration(&spec, tol)?;
            let mut art = Artifact::new(
                &["state", "value", "action"],
                json!({ "value": vi.value.as_slice(), "policy": vi.policy, "iterations": vi.iterations }),
            );
            for s in 0..spec.states() {
                art.row(vec![s.to_string(), num(vi.value[s]), vi.policy[s].to_string()]);
            }
            Ok(art)
        }
    }
}

fn ising(state: &IsingState, steps: u64, seed: u64) -> Artifact {
    let out = metropolis_ising(state, steps, seed);
    let w = out.width();
    let mut art = Artifact::new(
        &["row", "col", "spin"],
        json!({
            "width": w,
            "height": out.height(),
            "beta": out.beta(),
            "steps": steps,
            "seed": seed,
            "magnetization": magnetization(&out),
            "energy": out.energy(),
            "spins": out.spins(),
        }),
    );
    for (i, s) in out.spins().iter().enumerate() {
        art.row(vec![(i / w).to_string(), (i % w).to_string(), s.to_string()]);
    }
    art
}

fn walk(width: i64, steps_cap: u64, seed: u64) -> Result<Artifact, CliError> {
    let path = lerw(width, steps_cap as usize, seed)?;
    let mut art = Artifact::new(&["step", "x", "y"], json!({ "width": width, "seed": seed, "path": path }));
    for (i, (x, y)) in path.iter().enumerate() {
        art.row(vec![i.to_string(), x.to_string(), y.to_string()]);
    }
    Ok(art)
}

fn gue(size: usize, seed: u64) -> Result<Artifact, CliError> {
    let a = sample_gue(size, seed)?;
    let ev = a.eigenvalues()?;
    let distance = kolmogorov_distance(&esd(&a)?, &LawSpec::Semicircle { center: 0.0, var: 1.0 });
    let mut art = Artifact::new(
        &["index", "eigenvalue"],
        json!({ "N": size, "seed": seed, "kolmogorov_distance": distance, "eigenvalues": ev }),
    );
    for (i, x) in ev.iter().enumerate() {
        art.row(vec![i.to_string(), num(*x)]);
    }
    Ok(art)
}

fn ar1(size: usize, steps: usize, c: f64, noise: NoiseKind, seed: u64, spectrum: bool) -> Result<Artifact, CliError> {
    let s = free_ar1(size, steps, c, noise, seed, spectrum)?;
    let mut art = Artifact::new(&["statistic", "value"], serde_json::to_value(&s)?);
    for (name, v) in [
        ("mean_previous", s.mean_previous),
        ("mean_noise", s.mean_noise),
        ("noise_second_moment", s.noise_second_moment),
        ("previous_second_moment", s.previous_second_moment),
        ("mean_last", s.mean_last),
        ("last_second_moment", s.last_second_moment),
        ("mixed_moment", s.mixed_moment),
    ] {
        art.row(vec![name.into(), num(v)]);
    }
    for x in s.eigenvalues.iter().flatten() {
        art.row(vec!["eigenvalue".into(), num(*x)]);
    }
    Ok(art)
}

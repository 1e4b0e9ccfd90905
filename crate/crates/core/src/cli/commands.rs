use serde::Deserialize;
use serde_json::json;

use super::args::*;
use super::{CliError, Inputs, Outcome};
use crate::annulus::{
    annulus_dual, integrate_pde_with, moments, monge_minimizer, schur_check, spectral_profile,
    stable_pde_step, theta_average, GridFunction, PdeOptions, Scheme,
};
use crate::bracketflow::{align_direction, integrate_flow_with, Direction, FlowOptions};
use crate::linalg::{jacobi_eigh, ComplexMatrix, HermitianMatrix, MatrixJson, SkewHermitianMatrix};
use crate::majorization::{
    birkhoff_decompose, majorizes, rearrangement_step, t_transform_chain, DoublyStochasticMatrix,
    StepFunction,
};
use crate::random::{
    random_doubly_stochastic, random_orbit_point, rng_from_seed, separated_values, uniform_matrix,
};
use crate::schurhorn::{horn_construct, schur_projection};
use crate::transport::{
    orbit_cost_instance, solve_kantorovich, solve_monge, CostMatrix, MarginalVector,
};
use crate::verify::{verify_flow_limit, verify_mkd, verify_schur_horn};

type CmdResult = Result<Outcome, CliError>;

pub(crate) fn execute(cli: &Cli, inputs: &mut Inputs) -> CmdResult {
    let tol = cli.tol;
    match &cli.command {
        Command::Ot(OtCommand::Solve { problem, input }) => ot_solve(*problem, input, tol, inputs),
        Command::Major(c) => major(c, tol, inputs),
        Command::SchurHorn(c) => schur_horn(c, tol, inputs),
        Command::Flow(FlowCommand::Bracket(a)) => flow_bracket(a, cli.seed, tol),
        Command::Annulus(c) => annulus(c, tol, inputs),
        Command::Verify(c) => verify(c, cli.seed, tol),
        Command::Generate(a) => generate(a, cli.seed),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Deserialize)]
struct OtInput {
    cost: CostMatrix,
    #[serde(default)]
    mu_plus: Option<MarginalVector>,
    #[serde(default)]
    mu_minus: Option<MarginalVector>,
}

fn ot_solve(
    problem: Problem,
    input: &std::path::Path,
    tol: Option<f64>,
    inputs: &mut Inputs,
) -> CmdResult {
    let tol = tol.unwrap_or(1e-8);
    let data: OtInput = inputs.read_json(input)?;
    let (rows, cols) = (data.cost.rows(), data.cost.cols());
    let uniform_given = data.mu_plus.is_none() && data.mu_minus.is_none();
    let mu_plus = data
        .mu_plus
        .unwrap_or_else(|| MarginalVector::uniform(rows));
    let mu_minus = data
        .mu_minus
        .unwrap_or_else(|| MarginalVector::uniform(cols));
    let uniform = uniform_given
        || (rows == cols
            && mu_plus
                .as_slice()
                .iter()
                .chain(mu_minus.as_slice())
                .all(|m| (m - 1.0 / rows as f64).abs() <= 1e-15));

    let want = |p: Problem| problem == p || problem == Problem::All;
    let mut report = serde_json::Map::new();
    let mut monge_value = None;
    if want(Problem::Monge) {
        let m = solve_monge(&data.cost)?;
        monge_value = Some(m.value);
        report.insert(
            "monge".into(),
            json!({"value": m.value, "assignment": m.assignment}),
        );
    }
    let mut k_value = None;
    let mut d_value = None;
    if want(Problem::Kantorovich) || want(Problem::Dual) {
        let k = solve_kantorovich(&data.cost, &mu_plus, &mu_minus)?;
        let d = k
            .potentials
            .objective(mu_plus.as_slice(), mu_minus.as_slice());
        let feas = k.potentials.max_violation(&data.cost)?;
        if want(Problem::Kantorovich) {
            k_value = Some(k.value);
            report.insert(
                "kantorovich".into(),
                json!({"value": k.value, "plan": k.plan.to_rows(), "pivots": k.pivots,
                       "marginal_residual": k.plan.marginal_residual()}),
            );
        }
        if want(Problem::Dual) {
            d_value = Some(d);
            report.insert(
                "dual".into(),
                json!({"value": d, "u": k.potentials.u, "v": k.potentials.v, "max_violation": feas}),
            );
        }
    }
    let gap_mk = match (monge_value, k_value) {
        (Some(m), Some(k)) if uniform => Some((m - rows as f64 * k).abs()),
        _ => None,
    };
    let gap_kd = match (k_value, d_value) {
        (Some(k), Some(d)) => Some((k - d).abs()),
        _ => None,
    };
    let passed = gap_mk.is_none_or(|g| g <= tol) && gap_kd.is_none_or(|g| g <= tol);
    report.insert(
        "gaps".into(),
        json!({"monge_vs_scaled_kantorovich": gap_mk, "kantorovich_dual": gap_kd}),
    );
    report.insert("tol".into(), json!(tol));
    report.insert("passed".into(), json!(passed));
    Outcome::new("ot-solve", report, passed)
}

fn major(c: &MajorCommand, tol: Option<f64>, inputs: &mut Inputs) -> CmdResult {
    let tol = tol.unwrap_or(crate::majorization::DEFAULT_TOL);
    match c {
        MajorCommand::Check(p) => {
            let m = majorizes(&p.y, &p.x, tol)?;
            let passed = m.holds;
            Outcome::new(
                "major-check",
                json!({"holds": m.holds, "gaps": m.gaps, "first_violation": m.first_violation,
                       "min_prefix_gap": m.min_prefix_gap(), "total_gap": m.total_gap()}),
                passed,
            )
        }
        MajorCommand::Transform(p) => {
            let chain = t_transform_chain(&p.x, &p.y)?;
            let py = chain.matrix.apply(&p.y)?;
            let residual = max_abs_diff(&py, &p.x);
            Outcome::new(
                "major-transform",
                json!({"transforms": chain.transforms, "matrix": chain.matrix,
                       "residual": residual, "tol": tol}),
                residual <= tol,
            )
        }
        MajorCommand::Birkhoff { input } => {
            let rows: Vec<Vec<f64>> = inputs.read_json(input)?;
            let ds = DoublyStochasticMatrix::new(rows)?;
            let terms = birkhoff_decompose(&ds, 1e-12)?;
            let n = ds.n();
            let mut resum = vec![vec![0.0; n]; n];
            for t in &terms {
                for (i, &j) in t.permutation.as_slice().iter().enumerate() {
                    resum[i][j] += t.weight;
                }
            }
            let residual = ds
                .to_rows()
                .iter()
                .zip(&resum)
                .map(|(a, b)| max_abs_diff(a, b))
                .fold(0.0, f64::max);
            Outcome::new(
                "major-birkhoff",
                json!({"terms": terms, "count": terms.len(), "resum_residual": residual, "tol": tol}),
                residual <= tol,
            )
        }
    }
}

fn schur_horn(c: &SchurHornCommand, tol: Option<f64>, inputs: &mut Inputs) -> CmdResult {
    match c {
        SchurHornCommand::Project { input } => {
            let tol = tol.unwrap_or(1e-10);
            let m: MatrixJson = inputs.read_json(input)?;
            let a = HermitianMatrix::new(ComplexMatrix::from_json(&m)?)?;
            let p = schur_projection(&a)?;
            let cert = majorizes(&p.spectrum, &p.diag, tol)?;
            Outcome::new(
                "schur-horn-project",
                json!({"diag": p.diag, "spectrum": p.spectrum, "witness": p.witness,
                       "holds": cert.holds, "gaps": cert.gaps}),
                cert.holds,
            )
        }
        SchurHornCommand::Construct { spectrum, diag } => {
            let tol = tol.unwrap_or(1e-8);
            let h = horn_construct(spectrum, diag)?;
            let eig = jacobi_eigh(&h)?;
            let mut sorted = spectrum.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let spec_err = max_abs_diff(&eig.values, &sorted);
            let diag_err = max_abs_diff(&h.diagonal(), diag);
            let passed = spec_err <= tol && diag_err <= tol;
            Outcome::new(
                "schur-horn-construct",
                json!({"matrix": h.as_matrix().to_json(), "spectrum_error": spec_err,
                       "diagonal_error": diag_err, "tol": tol}),
                passed,
            )
        }
    }
}

fn parse_direction(s: &str) -> Result<Option<Direction>, CliError> {
    match s {
        "auto" => Ok(None),
        other => {
            let v: i32 = other.parse().map_err(|_| {
                CliError::Input(format!("direction must be auto, 1 or -1, got {other}"))
            })?;
            Ok(Some(Direction::try_from(v)?))
        }
    }
}

fn flow_bracket(a: &BracketArgs, seed: u64, tol: Option<f64>) -> CmdResult {
    let tol = tol.unwrap_or(1e-10);
    let mut rng = rng_from_seed(seed);
    let n =
        a.n.or(a.spectrum.as_ref().map(Vec::len))
            .or(a.target.as_ref().map(Vec::len))
            .unwrap_or(4);
    let spectrum = a
        .spectrum
        .clone()
        .unwrap_or_else(|| separated_values(&mut rng, n, 0.3));
    let target = a
        .target
        .clone()
        .unwrap_or_else(|| separated_values(&mut rng, n, 0.3));
    if spectrum.len() != n || target.len() != n {
        return Err(CliError::Input(format!(
            "spectrum ({}) and target ({}) must both have length {n}",
            spectrum.len(),
            target.len()
        )));
    }
    let direction = match parse_direction(&a.direction)? {
        Some(d) => d,
        None => align_direction(&spectrum, &target)?,
    };
    let l0 = random_orbit_point(&mut rng, &spectrum);
    let nmat = SkewHermitianMatrix::from_imaginary_diagonal(&target);
    let mut opts = FlowOptions::new(a.step, a.t_end, direction);
    opts.sample_every = a.sample_every;
    let trace = integrate_flow_with(&l0, &nmat, &opts)?;
    let last = trace.samples.last().expect("initial sample").clone();
    let drift = trace.max_spectrum_drift();
    let final_diag: Vec<f64> = trace
        .final_state
        .l
        .as_matrix()
        .diag()
        .iter()
        .map(|z| z.im)
        .collect();
    let passed = drift <= tol;
    let report = json!({
        "n": n, "spectrum": spectrum, "target": target, "direction": direction.sign(),
        "step": a.step, "t_end": a.t_end, "steps": trace.steps, "step_halvings": trace.step_halvings,
        "converged": trace.converged, "final": last, "final_diagonal": final_diag,
        "max_spectrum_drift": drift, "tol": tol, "passed": passed,
    });
    let final_json = serde_json::to_string_pretty(&trace.final_state.l.as_matrix().to_json())
        .map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(Outcome::new("flow-bracket", report, passed)?
        .with_file("flow-bracket.csv", trace.to_csv())
        .with_file("flow-bracket-final.json", final_json + "\n"))
}

fn annulus(c: &AnnulusCommand, tol: Option<f64>, inputs: &mut Inputs) -> CmdResult {
    match c {
        AnnulusCommand::Rearrange(g) => {
            let x: GridFunction = inputs.read_json(&g.input)?;
            let p = spectral_profile(&x);
            let gm = moments(&x, 6);
            let pm: Vec<f64> = (1..=6).map(|k| p.profile.integral_pow(k)).collect();
            Outcome::new(
                "annulus-rearrange",
                json!({"profile": p.profile, "psi": p.psi, "grid_moments": gm, "profile_moments": pm}),
                true,
            )
        }
        AnnulusCommand::Schur(g) => {
            let tol = tol.unwrap_or(1e-12);
            let x: GridFunction = inputs.read_json(&g.input)?;
            let cert = schur_check(&x, tol);
            let passed = cert.holds;
            Outcome::new(
                "annulus-schur",
                json!({"theta_average": theta_average(&x), "certificate": cert, "tol": tol}),
                passed,
            )
        }
        AnnulusCommand::Horn { input, target } => {
            let tol = tol.unwrap_or(1e-9);
            let x: GridFunction = inputs.read_json(input)?;
            let target = match target {
                Some(p) => inputs.read_json(p)?,
                None => theta_average(&x),
            };
            let lift = crate::annulus::horn_lift(&spectral_profile(&x).profile, &target, tol)?;
            let grid = serde_json::to_string_pretty(&lift.grid)
                .map_err(|e| CliError::Failure(e.to_string()))?;
            Ok(Outcome::new(
                "annulus-horn",
                json!({"residual": lift.residual, "bound": lift.bound, "nz": lift.grid.nz(),
                       "ntheta": lift.grid.ntheta()}),
                lift.residual <= lift.bound,
            )?
            .with_file("annulus-horn-grid.json", grid + "\n"))
        }
        AnnulusCommand::Monge(g) => {
            let x: GridFunction = inputs.read_json(&g.input)?;
            let m = monge_minimizer(&x);
            Outcome::new("annulus-monge", m, true)
        }
        AnnulusCommand::Dual { input, alpha } => {
            let profile: StepFunction = inputs.read_json(input)?;
            let alpha = match alpha {
                Some(p) => inputs.read_json(p)?,
                None => rearrangement_step(&profile),
            };
            let d = annulus_dual(&profile, &alpha)?;
            let passed = d.weak_duality_holds;
            Outcome::new("annulus-dual", d, passed)
        }
        AnnulusCommand::Flow(a) => annulus_flow(a, tol, inputs),
        AnnulusCommand::Advect { input, step, t_end } => {
            let rho: StepFunction = inputs.read_json(input)?;
            let out = crate::annulus::advect_density(&rho, *step, *t_end)?;
            Outcome::new(
                "annulus-advect",
                json!({"profile": out, "mass_before": rho.integral(), "mass_after": out.integral()}),
                true,
            )
        }
    }
}

fn annulus_flow(a: &PdeArgs, tol: Option<f64>, inputs: &mut Inputs) -> CmdResult {
    let tol = tol.unwrap_or(1e-10);
    let x0 = match &a.input {
        Some(p) => inputs.read_json(p)?,
        None => {
            let amp = a.amplitude;
            GridFunction::from_fn(a.nz, a.ntheta, |z, t| {
                z + amp * (2.0 * std::f64::consts::PI * t).sin() * (std::f64::consts::PI * z).sin()
            })?
        }
    };
    let direction = parse_direction(&a.direction)?.unwrap_or(Direction::Descend);
    let step = a.step.unwrap_or_else(|| stable_pde_step(&x0));
    let mut opts = PdeOptions::new(step, a.t_end, direction);
    opts.scheme = match a.scheme {
        SchemeArg::Centered => Scheme::Centered,
        SchemeArg::Conservative => Scheme::Conservative,
    };
    opts.sample_every = a.sample_every;
    let trace = integrate_pde_with(&x0, &opts)?;
    let (first, last) = (trace.first(), trace.last());
    let i1_drift = (last.moments[0] - first.moments[0]).abs();
    let i2_drift = (last.moments[1] - first.moments[1]).abs();
    let l1 = trace
        .final_state
        .l1_distance(&monge_minimizer(&x0).minimizer)?;
    let passed = !trace.shock && i1_drift <= tol;
    let report = json!({
        "nz": x0.nz(), "ntheta": x0.ntheta(), "step": step, "t_end": a.t_end,
        "direction": direction.sign(), "scheme": opts.scheme, "steps": trace.steps,
        "shock": trace.shock, "i1_drift": i1_drift, "i2_drift": i2_drift,
        "xtheta_ratio": last.xtheta_norm / first.xtheta_norm,
        "l1_to_monge_minimizer": l1, "tol": tol, "passed": passed,
    });
    let final_json = serde_json::to_string_pretty(&trace.final_state)
        .map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(Outcome::new("annulus-flow", report, passed)?
        .with_file("annulus-flow.csv", trace.to_csv())
        .with_file("annulus-flow-final.json", final_json + "\n"))
}

fn verify(c: &VerifyCommand, seed: u64, tol: Option<f64>) -> CmdResult {
    match c {
        VerifyCommand::Mkd { n, instances } => {
            let r = verify_mkd(*n, *instances, seed, tol.unwrap_or(1e-8))?;
            let passed = r.passed;
            Outcome::new("verify-m-k-d", r, passed)
        }
        VerifyCommand::SchurHorn { instances, max_n } => {
            let r = verify_schur_horn(*instances, *max_n, seed)?;
            let passed = r.passed;
            Outcome::new("verify-schur-horn", r, passed)
        }
        VerifyCommand::FlowLimit { instances, step } => {
            let r = verify_flow_limit(*instances, seed, *step)?;
            let passed = r.passed;
            Outcome::new("verify-flow-limit", r, passed)
        }
    }
}

fn generate(a: &GenerateArgs, seed: u64) -> CmdResult {
    let instance = generate_instance(a, seed)?;
    let name = format!(
        "generate-{}",
        match a.kind {
            InstanceKind::Cost => "cost",
            InstanceKind::Orbit => "orbit",
            InstanceKind::Ds => "ds",
            InstanceKind::Grid => "grid",
        }
    );
    Outcome::new(&name, instance, true)
}

/// Deterministic instance of the requested kind as JSON.
///
/// `cost` and `orbit` use the `ot solve` input shape; `orbit` has `c_ij = λ_i n_j`.
/// `ds` is a nested array; `grid` is a smooth increasing-in-`z` field.
pub fn generate_instance(a: &GenerateArgs, seed: u64) -> crate::Result<serde_json::Value> {
    let mut rng = rng_from_seed(seed);
    Ok(match a.kind {
        InstanceKind::Cost => {
            let cols = a.cols.unwrap_or(a.n);
            json!({"cost": CostMatrix::new(uniform_matrix(&mut rng, a.n, cols))?})
        }
        InstanceKind::Orbit => {
            let n = a.spectrum.as_ref().map_or(a.n, Vec::len);
            let lam = a
                .spectrum
                .clone()
                .unwrap_or_else(|| separated_values(&mut rng, n, 0.3));
            let nd = a
                .target
                .clone()
                .unwrap_or_else(|| separated_values(&mut rng, n, 0.3));
            let inst = orbit_cost_instance(&lam, &nd)?;
            json!({"cost": inst.cost, "spectrum": lam, "target": nd})
        }
        InstanceKind::Ds => {
            let terms = a.terms.unwrap_or(a.n + 1);
            json!(random_doubly_stochastic(&mut rng, a.n, terms))
        }
        InstanceKind::Grid => {
            use rand::Rng;
            let amp = rng.random_range(0.0..0.1);
            let phase = rng.random_range(0.0..1.0);
            let x = GridFunction::from_fn(a.nz, a.ntheta, |z, t| {
                z + amp
                    * (2.0 * std::f64::consts::PI * (t + phase)).sin()
                    * (std::f64::consts::PI * z).sin()
            })?;
            json!(x)
        }
    })
}

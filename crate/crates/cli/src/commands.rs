//! One function per subcommand. Each returns a table; non-convergence is
//! reported next to it so the caller can still write the output.

use std::f64::consts::TAU;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cosserat_shear::closed_form::{classify, well_set};
use cosserat_shear::envelope::{energy_relaxed, Envelope};
use cosserat_shear::interface_energy::{
    optimal_profile_auto, surface_energy, surface_energy_closed_zero_couple, surface_energy_reduced,
    surface_energy_reduced_closed_zero_couple,
};
use cosserat_shear::model::{check_volume_constraint, energy_eps, energy_rescaled, potential_w, q};
use cosserat_shear::solver::{check_eps_list, minimize_eps_theta, minimize_relaxed, sweep_row};
use cosserat_shear::{Error, GridField, MaterialParams, SolveResult, SolverConfig, SweepRow};
use serde_json::{json, Value};

use crate::output::{sig6, Table};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<(Table, Option<String>), Failure>;

fn params_meta(t: &mut Table, p: &MaterialParams) {
    t.meta("params", json!({ "mu": p.mu(), "mu_c": p.mu_c(), "gamma": p.gamma(), "theta": p.theta(), "eps": p.eps() }));
}

pub fn regime(p: &MaterialParams) -> Outcome {
    let r = classify(p);
    let wells = well_set(p.gamma(), p)?;
    let a = wells.angles();
    let mut t = Table::new(&["regime", "mu_c_crit", "well_1", "well_2", "minimal_energy", "minimal_w"]);
    t.push(vec![
        r.tag.as_str().into(),
        r.mu_c_crit.into(),
        a[0].into(),
        a.get(1).copied().into(),
        wells.minimal_energy.into(),
        wells.minimal_w.into(),
    ]);
    params_meta(&mut t, p);
    t.meta("regime", json!(r.tag.as_str()));
    t.meta("mu_c_crit", json!(r.mu_c_crit));
    t.meta("wells", json!(a));
    t.meta("minimal_energy", json!(wells.minimal_energy));
    t.meta("minimal_w", json!(wells.minimal_w));
    Ok((t, None))
}

pub fn table2(mu: f64, gammas: &[f64]) -> Outcome {
    let params: Vec<MaterialParams> = gammas
        .iter()
        .map(|&g| MaterialParams::new(mu, 0.0, g, 0.0, 0.0))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let mut t = Table::new(&["gamma", "alpha_plus", "c0", "c0_reduced"]);
    for p in &params {
        t.push(vec![
            p.gamma().into(),
            well_set(p.gamma(), p)?.last().into(),
            surface_energy_closed_zero_couple(p)?.into(),
            surface_energy_reduced_closed_zero_couple(p)?.into(),
        ]);
    }
    t.meta("mu", json!(mu));
    t.meta("mu_c", json!(0.0));
    Ok((t, None))
}

pub fn envelope(p: &MaterialParams, z: f64, samples: usize) -> Outcome {
    let env = Envelope::new(z, p)?;
    let mut t = Table::new(&["alpha", "w", "w_env", "q", "q_env", "branch"]);
    for i in 0..=samples {
        let a = TAU * i as f64 / samples as f64;
        t.push(vec![
            a.into(),
            potential_w(z, a, p).into(),
            env.w_value(a).into(),
            q(z, a, p).into(),
            env.value(a).into(),
            env.branch(a).tag.as_str().into(),
        ]);
    }
    params_meta(&mut t, p);
    t.meta("z", json!(z));
    t.meta("regime", json!(env.regime().as_str()));
    t.meta("wells", json!(env.wells().angles()));
    t.meta("tangent_point", json!(env.tangent_point()));
    let branches: Vec<_> = env
        .branches()
        .iter()
        .map(|b| json!({ "tag": b.tag.as_str(), "alpha_lo": b.alpha_lo, "alpha_hi": b.alpha_hi }))
        .collect();
    t.meta("branches", json!(branches));
    Ok((t, None))
}

/// Reads a field from a CSV file with a header naming `u` and `alpha`, or
/// from the JSON written by `relax --format json` (full precision).
pub fn read_field(path: &Path) -> Result<GridField, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        return read_json_field(&text, path);
    }
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Failure::Usage(format!("{}: no `{name}` column", path.display())))
    };
    let (iu, ia) = (col("u")?, col("alpha")?);
    let (mut u, mut alpha) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |i: usize| {
            cells
                .get(i)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| Failure::Usage(format!("{}: bad value on data row {}", path.display(), k + 1)))
        };
        u.push(num(iu)?);
        alpha.push(num(ia)?);
    }
    GridField::new(u, alpha).map_err(|e| Failure::Usage(e.to_string()))
}

fn read_json_field(text: &str, path: &Path) -> Result<GridField, Failure> {
    let bad = |what: &str| Failure::Usage(format!("{}: {what}", path.display()));
    let v: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
    let columns = v["columns"].as_array().ok_or_else(|| bad("no `columns` array"))?;
    let col = |name: &str| columns.iter().position(|c| c == name).ok_or_else(|| bad(&format!("no `{name}` column")));
    let (iu, ia) = (col("u")?, col("alpha")?);
    let rows = v["rows"].as_array().ok_or_else(|| bad("no `rows` array"))?;
    let (mut u, mut alpha) = (Vec::new(), Vec::new());
    for (k, row) in rows.iter().enumerate() {
        let num = |i: usize| row[i].as_f64().ok_or_else(|| bad(&format!("bad value on data row {}", k + 1)));
        u.push(num(iu)?);
        alpha.push(num(ia)?);
    }
    GridField::new(u, alpha).map_err(|e| Failure::Usage(e.to_string()))
}

pub fn energy(p: &MaterialParams, field: &GridField) -> Outcome {
    let b = energy_eps(field, p)?;
    let rescaled = if p.eps() > 0.0 { Some(energy_rescaled(field, p)?) } else { None };
    let relaxed = energy_relaxed(field, p, false)?;
    let feasible = check_volume_constraint(field, p.theta()).is_ok();
    let mut t = Table::new(&[
        "n",
        "eps",
        "mean_alpha",
        "curvature",
        "shear",
        "coupling",
        "total",
        "rescaled",
        "relaxed",
        "meets_constraint",
    ]);
    t.push(vec![
        field.n().into(),
        p.eps().into(),
        field.mean_alpha().into(),
        b.curvature.into(),
        b.shear.into(),
        b.coupling.into(),
        b.total.into(),
        rescaled.into(),
        relaxed.into(),
        feasible.into(),
    ]);
    params_meta(&mut t, p);
    Ok((t, None))
}

/// Wells at `gamma` when an angle is not given.
fn endpoints(p: &MaterialParams, minus: Option<f64>, plus: Option<f64>) -> Result<(f64, f64), Failure> {
    let wells = well_set(p.gamma(), p)?;
    let a = wells.angles();
    if (minus.is_none() || plus.is_none()) && a.len() < 2 {
        return Err(Failure::Usage(format!(
            "the {} regime has a single well; pass --alpha-minus and --alpha-plus",
            wells.regime.tag.as_str()
        )));
    }
    Ok((minus.unwrap_or(a[0]), plus.unwrap_or_else(|| wells.last())))
}

pub fn surface(p: &MaterialParams, minus: Option<f64>, plus: Option<f64>) -> Outcome {
    let defaults = minus.is_none() && plus.is_none();
    let (am, ap) = endpoints(p, minus, plus)?;
    let c0 = surface_energy(am, ap, p)?;
    let zero_couple = p.mu_c() == 0.0;
    let closed = if zero_couple && defaults { Some(surface_energy_closed_zero_couple(p)?) } else { None };
    let (reduced, reduced_closed) = if zero_couple {
        // wells of the reduced potential are 0 and gamma
        let r = surface_energy_reduced(0.0, p.gamma(), p)?;
        (Some(r), Some(surface_energy_reduced_closed_zero_couple(p)?))
    } else {
        (None, None)
    };
    let mut t = Table::new(&["alpha_minus", "alpha_plus", "c0", "c0_closed", "c0_reduced", "c0_reduced_closed"]);
    t.push(vec![am.into(), ap.into(), c0.into(), closed.into(), reduced.into(), reduced_closed.into()]);
    params_meta(&mut t, p);
    Ok((t, None))
}

pub fn profile(p: &MaterialParams, minus: Option<f64>, plus: Option<f64>, step: f64) -> Outcome {
    let (am, ap) = endpoints(p, minus, plus)?;
    let prof = optimal_profile_auto(am, ap, p, step)?;
    let mut t = Table::new(&["y", "alpha", "v2"]);
    for i in 0..prof.y.len() {
        t.push(vec![prof.y[i].into(), prof.alpha[i].into(), prof.v2[i].into()]);
    }
    params_meta(&mut t, p);
    t.meta("alpha_minus", json!(am));
    t.meta("alpha_plus", json!(ap));
    t.meta("half_width", json!(prof.half_width));
    t.meta("path_energy", json!(prof.path_energy()));
    t.meta("equipartition_defect", json!(prof.equipartition_defect()));
    Ok((t, None))
}

fn field_table(f: &GridField) -> Table {
    let mut t = Table::new(&["x", "u", "alpha"]);
    for i in 0..=f.n() {
        t.push(vec![f.x(i).into(), f.u()[i].into(), f.alpha()[i].into()]);
    }
    t
}

fn solve_meta(t: &mut Table, r: &SolveResult) {
    t.meta("energy", json!(r.energy));
    t.meta("constraint_residual", json!(r.constraint_residual));
    t.meta("grad_norm", json!(r.grad_norm));
    t.meta("iterations", json!(r.iterations));
    t.meta("converged", json!(r.converged));
}

/// Minimizer of `E_eps^theta`, or of the relaxed functional when `eps = 0`.
pub fn relax(p: &MaterialParams, cfg: &SolverConfig) -> Outcome {
    let r = if p.eps() > 0.0 { minimize_eps_theta(p, cfg)? } else { minimize_relaxed(p, cfg)? };
    let mut t = field_table(&r.field);
    params_meta(&mut t, p);
    solve_meta(&mut t, &r);
    let warning = (!r.converged).then(|| {
        format!(
            "not converged after {} iterations (energy {}, residual {}, gradient {})",
            r.iterations,
            sig6(r.energy),
            sig6(r.constraint_residual),
            sig6(r.grad_norm)
        )
    });
    Ok((t, warning))
}

/// Rows are solved concurrently and written in input order.
pub fn gamma_sweep(p: &MaterialParams, eps_list: &[f64], cfg: &SolverConfig, fields: Option<&Path>) -> Outcome {
    check_eps_list(eps_list).map_err(|e| Failure::Usage(e.to_string()))?;
    let relaxed = minimize_relaxed(p, cfg)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(eps_list.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<SweepRow, Error>>>> = Mutex::new(vec![None; eps_list.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&eps) = eps_list.get(k) else { break };
                let row = sweep_row(p, eps, relaxed.energy, cfg);
                slots.lock().expect("no worker panics while holding the lock")[k] = Some(row);
            });
        }
    });
    let rows: Vec<SweepRow> = slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every row was claimed"))
        .collect::<Result<_, _>>()?;

    let mut t = Table::new(&["eps", "energy", "relaxed_energy", "gap", "iterations", "converged"]);
    for r in &rows {
        t.push(vec![
            r.eps.into(),
            r.energy.into(),
            r.relaxed_energy.into(),
            r.gap.into(),
            r.iterations.into(),
            r.converged.into(),
        ]);
    }
    if let Some(dir) = fields {
        std::fs::create_dir_all(dir)?;
        for (k, r) in rows.iter().enumerate() {
            std::fs::write(dir.join(format!("field_{k:03}.csv")), field_table(&r.field).to_csv())?;
        }
    }
    params_meta(&mut t, p);
    t.meta("n", json!(cfg.n));
    t.meta("relaxed_converged", json!(relaxed.converged));
    let failed: Vec<String> = rows.iter().filter(|r| !r.converged).map(|r| format!("eps = {}", sig6(r.eps))).collect();
    let mut warning = None;
    if !relaxed.converged || !failed.is_empty() {
        let mut parts = failed;
        if !relaxed.converged {
            parts.insert(0, "relaxed problem".into());
        }
        warning = Some(format!("not converged: {}", parts.join(", ")));
    }
    Ok((t, warning))
}

use std::path::{Path, PathBuf};

use opinion_kinetics::engine::{histogram, replica_rng, run_with_rng, Checkpoint, MomentRecord, Population, RunOutput};
use opinion_kinetics::moments::{coupled_mean_rhs, integrate, FamilyMeanRates, MeanSolution, PreLimitParams};
use opinion_kinetics::steady::{self, b_follower, b_leader, clustered_grid, l1_distance, stationarity_residual, SteadyDensity};
use opinion_kinetics::{DiffusionShape, Error as CoreError, Histogram};
use rayon::prelude::*;

use crate::config::Scenario;
use crate::error::{CliError, Result};

/// Runs replica `index`: its generator first samples the initial ensemble,
/// then drives the simulation.
pub fn simulate_replica(scenario: &Scenario, index: usize) -> Result<RunOutput> {
    let mut rng = replica_rng(scenario.config.simulation.seed, index as u64);
    let ens = scenario.initial_ensemble(&mut rng)?;
    Ok(run_with_rng(ens, &scenario.model, &scenario.settings, &mut rng)?)
}

pub fn simulate(scenario: &Scenario) -> Result<Vec<RunOutput>> {
    (0..scenario.config.simulation.replicas)
        .into_par_iter()
        .map(|i| simulate_replica(scenario, i))
        .collect()
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(CliError::io(path))?;
    Ok(csv::Writer::from_writer(file))
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_moments(path: &Path, records: &[MomentRecord], families: usize) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["t".to_string(), "m_F".into(), "E_F".into()];
    for p in 1..=families {
        header.extend([format!("m_L_{p}"), format!("E_L_{p}"), format!("psi_{p}")]);
    }
    header.push("rejection_frac".into());
    w.write_record(&header)?;
    for r in records {
        let m = &r.moments;
        let mut row = vec![num(m.t), num(m.m_f), num(m.e_f)];
        for p in 0..families {
            row.extend([num(m.m_l[p]), num(m.e_l[p]), num(m.psi[p])]);
        }
        row.push(num(r.rejection_fraction));
        w.write_record(&row)?;
    }
    w.flush().map_err(CliError::io(path))
}

fn write_histogram_table(path: &Path, followers: &Histogram, leaders: &[Histogram]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["bin_center".to_string(), "density_F".into()];
    header.extend((1..=leaders.len()).map(|p| format!("density_L_{p}")));
    w.write_record(&header)?;
    for i in 0..followers.bins() {
        let mut row = vec![num(followers.bin_center(i)), num(followers.densities()[i])];
        row.extend(leaders.iter().map(|h| num(h.densities()[i])));
        w.write_record(&row)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_checkpoints(dir: &Path, checkpoints: &[Checkpoint]) -> Result<Vec<PathBuf>> {
    checkpoints
        .iter()
        .map(|c| {
            let path = dir.join(format!("hist_{}.csv", c.t));
            write_histogram_table(&path, &c.followers, &c.leaders)?;
            Ok(path)
        })
        .collect()
}

fn replica_dir(out: &Path, index: usize, replicas: usize) -> PathBuf {
    if replicas == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("replica_{index:03}"))
    }
}

/// Writes `moments.csv` and one `hist_<t>.csv` per checkpoint, in `out`
/// or, with several replicas, in `out/replica_NNN`.
pub fn cmd_run(scenario: &Scenario, out: &Path) -> Result<Vec<RunOutput>> {
    let outputs = simulate(scenario)?;
    let families = scenario.config.leaders.len();
    for (i, o) in outputs.iter().enumerate() {
        let dir = replica_dir(out, i, outputs.len());
        ensure_dir(&dir)?;
        write_moments(&dir.join("moments.csv"), &o.records, families)?;
        write_checkpoints(&dir, &o.checkpoints)?;
    }
    Ok(outputs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub m_f: f64,
    pub m_f_oracle: f64,
    pub m_l: Vec<f64>,
    pub m_l_oracle: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub follower_gap: f64,
    pub leader_gap: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.follower_gap <= self.tolerance && self.leader_gap <= self.tolerance
    }
}

/// The mean equations are closed when every follower-leader kernel is the
/// unit kernel and the strategies are fixed.
pub fn oracle_domain(scenario: &Scenario) -> Result<()> {
    for (i, l) in scenario.config.leaders.iter().enumerate() {
        if !l.follower_kernel.is_unit() {
            return Err(CliError::Refused(format!(
                "leaders[{i}].follower_kernel is not the unit kernel; the mean equations are not closed"
            )));
        }
        if l.adaptive.is_some() {
            return Err(CliError::Refused(format!(
                "leaders[{i}] uses an adaptive strategy; psi depends on the follower density"
            )));
        }
    }
    Ok(())
}

/// Oracle means at `times` (ascending, starting at or after 0) from the
/// initial means `m_f0`, `m_l0`.
pub fn oracle_means(scenario: &Scenario, m_f0: f64, m_l0: &[f64], times: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
    let prelimit: Vec<PreLimitParams> = (0..m_l0.len())
        .map(|p| PreLimitParams::from_scaled(&scenario.params, p, &scenario.strategies[p]))
        .collect();
    if prelimit.len() == 1 {
        match MeanSolution::new(m_f0, m_l0[0], &prelimit[0]) {
            Ok(sol) => {
                return Ok(times
                    .iter()
                    .map(|&t| {
                        let (f, l) = sol.eval(t);
                        (f, vec![l])
                    })
                    .collect())
            }
            Err(CoreError::DegenerateEigenvalues(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let rates: Vec<FamilyMeanRates> = prelimit.iter().map(FamilyMeanRates::from).collect();
    let dt = scenario.model.plan().dt;
    let mut state: Vec<f64> = std::iter::once(m_f0).chain(m_l0.iter().copied()).collect();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t > now {
            let traj = integrate(|_, y, dy| coupled_mean_rhs(y, &rates, dy), &state, now, t, dt)?;
            state = traj.last().to_vec();
            now = t;
        }
        out.push((state[0], state[1..].to_vec()));
    }
    Ok(out)
}

/// Runs the scenario and compares replica-averaged means with the oracle at
/// the checkpoints (every recorded row if there are none). Writes
/// `oracle.csv`.
pub fn cmd_compare_oracle(scenario: &Scenario, out: &Path) -> Result<OracleReport> {
    oracle_domain(scenario)?;
    let outputs = simulate(scenario)?;
    let families = scenario.config.leaders.len();
    let n = outputs.len() as f64;
    let rows = outputs[0].records.len();
    let averaged: Vec<(f64, f64, Vec<f64>)> = (0..rows)
        .map(|k| {
            let t = outputs[0].records[k].moments.t;
            let m_f = outputs.iter().map(|o| o.records[k].moments.m_f).sum::<f64>() / n;
            let m_l = (0..families)
                .map(|p| outputs.iter().map(|o| o.records[k].moments.m_l[p]).sum::<f64>() / n)
                .collect();
            (t, m_f, m_l)
        })
        .collect();

    let dt = scenario.model.plan().dt;
    let checkpoints = &scenario.config.simulation.checkpoints;
    let selected: Vec<&(f64, f64, Vec<f64>)> = if checkpoints.is_empty() {
        averaged.iter().collect()
    } else {
        averaged
            .iter()
            .filter(|(t, _, _)| checkpoints.iter().any(|c| (c - t).abs() <= 0.5 * dt))
            .collect()
    };
    let times: Vec<f64> = selected.iter().map(|r| r.0).collect();
    let (_, m_f0, m_l0) = &averaged[0];
    let oracle = oracle_means(scenario, *m_f0, m_l0, &times)?;

    let mut report = OracleReport {
        rows: Vec::with_capacity(selected.len()),
        follower_gap: 0.0,
        leader_gap: 0.0,
        tolerance: scenario.config.output.oracle_tolerance,
    };
    for (row, (f, l)) in selected.into_iter().zip(oracle) {
        report.follower_gap = report.follower_gap.max((row.1 - f).abs());
        for (a, b) in row.2.iter().zip(&l) {
            report.leader_gap = report.leader_gap.max((a - b).abs());
        }
        report.rows.push(OracleRow {
            t: row.0,
            m_f: row.1,
            m_f_oracle: f,
            m_l: row.2.clone(),
            m_l_oracle: l,
        });
    }

    ensure_dir(out)?;
    let path = out.join("oracle.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["t".to_string(), "m_F_mc".into(), "m_F_oracle".into()];
    for p in 1..=families {
        header.extend([format!("m_L_{p}_mc"), format!("m_L_{p}_oracle")]);
    }
    w.write_record(&header)?;
    for r in &report.rows {
        let mut rec = vec![num(r.t), num(r.m_f), num(r.m_f_oracle)];
        for p in 0..families {
            rec.extend([num(r.m_l[p]), num(r.m_l_oracle[p])]);
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(CliError::io(&path))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    pub follower: SteadyDensity,
    pub leader: SteadyDensity,
    pub follower_l1: f64,
    pub leader_l1: f64,
    pub follower_residual: f64,
    pub leader_residual: f64,
    pub follower_histogram: Histogram,
    pub leader_histogram: Histogram,
}

/// The closed forms hold for one leader family, unit kernels everywhere,
/// the quadratic diffusion everywhere and a fixed strategy.
pub fn steady_domain(scenario: &Scenario) -> Result<()> {
    let c = &scenario.config;
    let refuse = |why: String| Err(CliError::Refused(why));
    if c.leaders.len() != 1 {
        return refuse(format!("closed forms need exactly one leader family, found {}", c.leaders.len()));
    }
    let l = &c.leaders[0];
    for (key, unit) in [
        ("followers.kernel", c.followers.kernel.is_unit()),
        ("leaders[0].follower_kernel", l.follower_kernel.is_unit()),
        ("leaders[0].leader_kernel", l.leader_kernel.is_unit()),
    ] {
        if !unit {
            return refuse(format!("{key} is not the unit kernel"));
        }
    }
    for (key, d) in [
        ("followers.diffusion", c.followers.diffusion),
        ("leaders[0].follower_diffusion", l.follower_diffusion),
        ("leaders[0].leader_diffusion", l.leader_diffusion),
    ] {
        if d != DiffusionShape::QuadraticCap {
            return refuse(format!("{key} is not quadratic_cap"));
        }
    }
    if l.adaptive.is_some() {
        return refuse("leaders[0] uses an adaptive strategy".into());
    }
    if !(l.target.abs() < 1.0) {
        return refuse(format!("leaders[0].target = {} must lie strictly inside (-1, 1)", l.target));
    }
    Ok(())
}

/// Normalized closed-form densities: followers with mass 1, leaders with
/// mass `rho`.
pub fn steady_densities(scenario: &Scenario) -> Result<(SteadyDensity, SteadyDensity)> {
    steady_domain(scenario)?;
    let c = &scenario.config;
    let l = &c.leaders[0];
    let fam = scenario.params.family(0).scaling;
    let b_f = b_follower(c.followers.variance, l.follower_variance, c.followers.c_f, fam.c_fl(), fam.rho);
    let s = &scenario.strategies[0];
    let b_l = b_leader(l.leader_variance, fam.rho, scenario.params.kappa(), fam.c_l(), s.psi(), s.mu());
    Ok((
        SteadyDensity::normalize(steady::Population::Follower, l.target, b_f, 1.0)?,
        SteadyDensity::normalize(steady::Population::Leader, l.target, b_l, fam.rho)?,
    ))
}

/// Compares the final ensemble of `run` with the closed forms.
pub fn steady_report(scenario: &Scenario, run: &RunOutput) -> Result<SteadyReport> {
    let (follower, leader) = steady_densities(scenario)?;
    let bins = scenario.config.output.bins;
    let follower_histogram = histogram(&run.ensemble, Population::Followers, bins)?;
    let leader_histogram = histogram(&run.ensemble, Population::Family(0), bins)?;
    let grid = clustered_grid(1000);
    Ok(SteadyReport {
        follower_l1: l1_distance(&follower_histogram, &follower)?,
        leader_l1: l1_distance(&leader_histogram, &leader)?,
        follower_residual: stationarity_residual(&follower, &grid),
        leader_residual: stationarity_residual(&leader, &grid),
        follower,
        leader,
        follower_histogram,
        leader_histogram,
    })
}

/// Writes `steady.csv` (bin_center, density_F, analytic_F, density_L_1,
/// analytic_L_1) and `steady_summary.csv`.
pub fn write_steady(report: &SteadyReport, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let path = out.join("steady.csv");
    let mut w = writer(&path)?;
    w.write_record(["bin_center", "density_F", "analytic_F", "density_L_1", "analytic_L_1"])?;
    for i in 0..report.follower_histogram.bins() {
        let (lo, hi) = report.follower_histogram.bin_edges(i);
        w.write_record([
            num(report.follower_histogram.bin_center(i)),
            num(report.follower_histogram.densities()[i]),
            num(report.follower.cell_average(lo, hi)?),
            num(report.leader_histogram.densities()[i]),
            num(report.leader.cell_average(lo, hi)?),
        ])?;
    }
    w.flush().map_err(CliError::io(&path))?;

    let path = out.join("steady_summary.csv");
    let mut w = writer(&path)?;
    w.write_record(["population", "target", "b", "mass", "l1", "residual"])?;
    for (name, d, l1, res) in [
        ("F", &report.follower, report.follower_l1, report.follower_residual),
        ("L_1", &report.leader, report.leader_l1, report.leader_residual),
    ] {
        w.write_record([name.to_string(), num(d.target()), num(d.b()), num(d.mass()), num(l1), num(res)])?;
    }
    w.flush().map_err(CliError::io(&path))
}

/// Runs replica 0 to the horizon, compares its final histograms with the
/// closed forms and writes both.
pub fn cmd_steady(scenario: &Scenario, out: &Path) -> Result<SteadyReport> {
    steady_domain(scenario)?;
    let run = simulate_replica(scenario, 0)?;
    let report = steady_report(scenario, &run)?;
    write_steady(&report, out)?;
    Ok(report)
}

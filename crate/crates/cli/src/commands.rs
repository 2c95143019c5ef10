//! Command implementations. Each returns its stdout text, any files to
//! write, and whether every asserted identity held.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use cylwalk::dynamics::{beta, constant_force_closed_form, newton2_residual};
use cylwalk::rational::{format_rational, rational_from_int, to_decimal, to_f64};
use cylwalk::sim::{
    convergence_study, estimate_moments, sample_replicas, write_convergence_csv,
    write_ensemble_csv, write_trajectory_csv,
};
use cylwalk::walk::{
    mean_path, moment_reports, recurrence_residual, velocity, walk_trace, write_moment_csv, Vec3,
};
use cylwalk::{EventArena, EventExpression, Rational, StepProbabilityTable};

use crate::config::RunConfig;

/// Settings shared by every command, after flags override the config.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub precision: usize,
}

impl Default for Globals {
    fn default() -> Self {
        Globals { seed: None, out_dir: None, precision: 6 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    /// File name (relative to the output directory) and contents.
    pub files: Vec<(String, String)>,
    pub success: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome { success: true, ..Default::default() }
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.stdout.push_str(text.as_ref());
        self.stdout.push('\n');
    }

    fn check(&mut self, name: &str, passed: bool, details: impl AsRef<str>) {
        let verdict = if passed { "PASS" } else { "FAIL" };
        self.line(format!("CHECK {name}: {verdict} {}", details.as_ref()));
        self.success &= passed;
    }

    /// Writes collected files under `dir`.
    pub fn write_files(&self, dir: &std::path::Path) -> Result<()> {
        if self.files.is_empty() {
            return Ok(());
        }
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn vec3(v: &Vec3) -> String {
    let parts: Vec<String> = v.0.iter().map(format_rational).collect();
    format!("({})", parts.join(", "))
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> cylwalk::Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Exact probability of an event expression.
///
/// Without a config the table is uniform with exactly as many rows as the
/// expression needs.
pub fn measure(
    config: Option<&RunConfig>,
    expression: &str,
    disjoint_planes: bool,
    globals: &Globals,
) -> Result<Outcome> {
    let expr = EventExpression::parse(expression)?;
    let table = match config {
        Some(cfg) => cfg.resolve_table()?.table,
        None => StepProbabilityTable::uniform(expr.max_coordinate() + 1)?,
    };
    let mut arena = EventArena::new();
    let event = expr.eval(&mut arena)?;
    let p = arena.measure(event, &table)?;
    let mut out = Outcome::new();
    out.line(format!("expression: {expr}"));
    out.line(format!("probability: {}", format_rational(&p)));
    out.line(format!("decimal: {}", to_decimal(&p, globals.precision)));
    if disjoint_planes {
        let planes = if event.is_universe() {
            arena.to_disjoint_planes_padded(event, 1)?
        } else {
            arena.to_disjoint_planes(event)?
        };
        out.line(format!("disjoint planes: {}", planes.len()));
        for plane in planes {
            let q = table.plane_probability(plane.letters())?;
            out.line(format!("  {plane} {}", format_rational(&q)));
        }
    }
    Ok(out)
}

/// Samples trajectories and writes exact and ensemble moment tables.
pub fn simulate(config: &RunConfig, globals: &Globals) -> Result<Outcome> {
    let resolved = config.resolve_table()?;
    let table = &resolved.table;
    let cfg = &config.lattice;
    let sim = &config.simulation;
    let steps = sim.steps.unwrap_or(cfg.horizon().min(table.len()));
    let seed = globals.seed.unwrap_or(sim.seed);

    let samples = sample_replicas(table, steps, sim.trajectories, seed)?;
    let stats = estimate_moments(table, cfg, steps, sim.replicas, seed)?;
    let reports = moment_reports(table, cfg)?;

    let mut out = Outcome::new();
    out.files.push((
        "trajectories.csv".into(),
        csv_string(|b| write_trajectory_csv(&samples, cfg, b))?,
    ));
    out.files.push(("moments.csv".into(), csv_string(|b| write_ensemble_csv(&stats, b))?));
    out.files.push((
        "moments_exact.csv".into(),
        csv_string(|b| write_moment_csv(&reports, globals.precision, b))?,
    ));

    out.line(format!("steps: {steps}"));
    out.line(format!("replicas: {}", sim.replicas));
    out.line(format!("seed: {seed}"));
    let exact_mean = cylwalk::walk::mean_position(steps, table, cfg)?;
    let exact_trace = walk_trace(steps, table, cfg)?;
    let within = |est: f64, exact: &Rational, se: f64| (est - to_f64(exact)).abs() <= 4.0 * se;
    let mean_ok = (0..3).all(|i| {
        within(stats.mean_position[steps][i], &exact_mean.0[i], stats.mean_se[steps][i])
    });
    out.check(
        "mean_position",
        mean_ok,
        format!(
            "exact={} empirical=({:.6}, {:.6}, {:.6})",
            vec3(&exact_mean),
            stats.mean_position[steps][0],
            stats.mean_position[steps][1],
            stats.mean_position[steps][2]
        ),
    );
    out.check(
        "trace",
        within(stats.empirical_trace[steps], &exact_trace, stats.trace_se[steps]),
        format!(
            "exact={} empirical={:.6} se={:.6}",
            format_rational(&exact_trace),
            stats.empirical_trace[steps],
            stats.trace_se[steps]
        ),
    );
    for (name, _) in &out.files {
        let line = format!("wrote: {name}");
        out.stdout.push_str(&line);
        out.stdout.push('\n');
    }
    Ok(out)
}

/// Constant velocity, linear mean path and the trace bound for a table
/// whose rows should all share the same directional drift.
pub fn verify_newton1(config: &RunConfig, _globals: &Globals) -> Result<Outcome> {
    let table = config.resolve_table()?.table;
    let cfg = &config.lattice;
    let horizon = cfg.horizon();
    if table.len() < horizon + 1 {
        bail!("table has {} rows; horizon {horizon} needs {}", table.len(), horizon + 1);
    }
    let mut out = Outcome::new();
    let v = velocity(0, &table, cfg)?;
    let first_change = (1..=horizon).find(|&n| velocity(n, &table, cfg).ok().as_ref() != Some(&v));
    out.check(
        "velocity_constant",
        first_change.is_none(),
        match first_change {
            None => format!("v={} for n=0..{horizon}", vec3(&v)),
            Some(n) => format!("v({n})={} differs from v(0)={}", vec3(&velocity(n, &table, cfg)?), vec3(&v)),
        },
    );

    let path = mean_path(horizon, &table, cfg)?;
    let mismatch = path.iter().enumerate().find(|(n, mean)| {
        *mean != &v.scale(&(cfg.tau() * rational_from_int(*n as i64)))
    });
    out.check(
        "mean_position_linear",
        mismatch.is_none(),
        match mismatch {
            None => format!("E(R_n)=n*tau*v for n=0..{horizon}"),
            Some((n, mean)) => format!("E(R_{n})={} differs from n*tau*v", vec3(mean)),
        },
    );

    let trace = walk_trace(horizon, &table, cfg)?;
    let bound = cfg.eps() * cfg.eps() * rational_from_int(horizon as i64);
    out.check(
        "trace_bound",
        trace <= bound,
        format!("Tr(R_{horizon})={} <= N*eps^2={}", format_rational(&trace), format_rational(&bound)),
    );
    Ok(out)
}

/// Force/acceleration proportionality for a forced table, plus the
/// closed-form mean path when the force is constant.
pub fn verify_newton2(config: &RunConfig, _globals: &Globals) -> Result<Outcome> {
    let cfg = &config.lattice;
    let Some((row0, schedule)) = config.schedule()? else {
        bail!("verify-newton2 needs a `forced` table source");
    };
    let mut out = Outcome::new();
    let table = match config.resolve_table() {
        Ok(resolved) => resolved.table,
        Err(e) => match e.downcast_ref::<cylwalk::Error>() {
            Some(overflow @ cylwalk::Error::ProbabilityOverflow { .. }) => {
                out.check("evolve", false, overflow.to_string());
                return Ok(out);
            }
            _ => return Err(e),
        },
    };
    out.check("evolve", true, format!("{} steps, rows sum to 1", schedule.len()));

    let b = beta(cfg, schedule.gamma());
    out.line(format!("beta: {} ({})", format_rational(&b), to_decimal(&b, 6)));
    let symbolic = cfg.tau() / (cfg.c() * schedule.gamma());
    out.check(
        "beta_formula",
        b == symbolic,
        format!("tau^2/(eps*gamma)={} tau/(c*gamma)={}", format_rational(&b), format_rational(&symbolic)),
    );

    let mut bad = None;
    for n in 0..schedule.len() {
        let r = newton2_residual(&table, &schedule, cfg, n)?;
        if !r.is_zero() {
            bad = Some((n, r));
            break;
        }
    }
    out.check(
        "newton2_residual",
        bad.is_none(),
        match &bad {
            None => format!("F(n)=beta*a(n) for n=0..{}", schedule.len().saturating_sub(1)),
            Some((n, r)) => format!("residual at n={n} is {}", vec3(r)),
        },
    );

    let last = table.len().saturating_sub(2);
    let recurrence_bad = (0..last)
        .find(|&n| recurrence_residual(n, &table, cfg).map(|r| !r.is_zero()).unwrap_or(true));
    out.check(
        "recurrence",
        recurrence_bad.is_none(),
        match recurrence_bad {
            None => format!("E(R_n+2)-2E(R_n+1)+E(R_n)=tau^2 a(n) for n<{last}"),
            Some(n) => format!("fails at n={n}"),
        },
    );

    if let Some(force) = schedule.constant_force() {
        let steps = schedule.len();
        let path = mean_path(steps, &table, cfg)?;
        let mut mismatch = None;
        for (n, mean) in path.iter().enumerate() {
            let closed = constant_force_closed_form(&row0, force, schedule.gamma(), cfg, n)?;
            if &closed != mean {
                mismatch = Some(n);
                break;
            }
        }
        out.check(
            "parabola",
            mismatch.is_none(),
            match mismatch {
                None => format!("E(R_n)=eps*n*((n-1)/2*a+b) for n=0..{steps}"),
                Some(n) => format!("closed form differs at n={n}"),
            },
        );
    }
    Ok(out)
}

/// Trace convergence as the step count grows with the total time fixed.
pub fn converge(
    config: &RunConfig,
    n_list: Option<&[usize]>,
    globals: &Globals,
) -> Result<Outcome> {
    let family = config
        .resolve_table()?
        .family
        .context("converge needs a `uniform` or `constant_row` table source")?;
    let block = config.converge.clone();
    let n_list: Vec<usize> = match n_list {
        Some(list) => list.to_vec(),
        None => block.as_ref().map(|b| b.n_list.clone()).unwrap_or_default(),
    };
    if n_list.is_empty() {
        bail!("converge needs an N list (flag --n-list or config converge.n_list)");
    }
    let replicas = block.as_ref().map(|b| b.replicas).unwrap_or(1_000);
    let seed = globals.seed.unwrap_or(config.simulation.seed);
    let total_time = config.total_time()?;
    let rows = convergence_study(config.lattice.c(), &total_time, &n_list, &family, replicas, seed)?;
    let csv = csv_string(|b| write_convergence_csv(&rows, b))?;

    let mut out = Outcome::new();
    if globals.out_dir.is_some() || config.output_dir.is_some() {
        out.files.push(("convergence.csv".into(), csv));
    } else {
        out.stdout.push_str(&csv);
    }
    let below = rows.iter().all(|r| r.exact_trace <= r.bound);
    let mut summary = String::new();
    for r in &rows {
        let _ = write!(summary, " N={}:{}<={}", r.n, format_rational(&r.exact_trace), format_rational(&r.bound));
    }
    out.check("exact_le_bound", below, summary.trim());
    let increasing_n = rows.windows(2).all(|w| w[1].n > w[0].n);
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].bound < w[0].bound && w[1].exact_trace < w[0].exact_trace);
    out.check(
        "strictly_decreasing",
        !increasing_n || decreasing,
        if increasing_n { "exact trace and bound (cC)^2/N over increasing N" } else { "N list not increasing, trend not checked" },
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn cfg(json: &str) -> RunConfig {
        RunConfig::from_json(json, Path::new(".")).unwrap()
    }

    #[test]
    fn measure_examples() {
        let g = Globals::default();
        let out = measure(None, "C(0,3)", false, &g).unwrap();
        assert!(out.stdout.contains("probability: 1/7\n"), "{}", out.stdout);
        let out = measure(None, "D[1,2] | D[1,3]", false, &g).unwrap();
        assert!(out.stdout.contains("probability: 2/49\n"));
        let all = (0..7).map(|i| format!("C(0,{i})")).collect::<Vec<_>>().join(" | ");
        let out = measure(None, &all, true, &g).unwrap();
        assert!(out.stdout.contains("probability: 1\n"));
        assert!(out.stdout.contains("disjoint planes: 7\n"));
        assert!(measure(None, "D[7]", false, &g).is_err());
    }

    #[test]
    fn measure_depth_error_with_config() {
        let c = cfg(r#"{"lattice": {"tau": "1", "c": "1", "horizon": 1}, "table": {"kind": "uniform"}}"#);
        let err = measure(Some(&c), "C(5,0)", false, &Globals::default()).unwrap_err();
        assert!(err.to_string().contains("coordinate 5"), "{err}");
    }

    #[test]
    fn newton1_pass_and_fail() {
        let good = cfg(r#"{"lattice": {"tau": "1/10", "c": "1", "horizon": 10}, "table": {"kind": "uniform"}}"#);
        let out = verify_newton1(&good, &Globals::default()).unwrap();
        assert!(out.success, "{}", out.stdout);
        assert_eq!(out.stdout.lines().filter(|l| l.contains(": PASS")).count(), 3);

        let bad = cfg(r#"{"lattice": {"tau": "1", "c": "1", "horizon": 2}, "table": {"kind": "inline", "rows": [
            ["1/7","1/7","1/7","1/7","1/7","1/7","1/7"],
            ["0","1","0","0","0","0","0"],
            ["1/7","1/7","1/7","1/7","1/7","1/7","1/7"]]}}"#);
        let out = verify_newton1(&bad, &Globals::default()).unwrap();
        assert!(!out.success);
        assert!(out.stdout.contains("CHECK velocity_constant: FAIL"));
    }

    #[test]
    fn newton2_constant_force() {
        let c = cfg(r#"{"lattice": {"tau": "1/10", "c": "2", "horizon": 10},
            "table": {"kind": "forced", "row0": ["1/7","1/7","1/7","1/7","1/7","1/7","1/7"],
                      "schedule": {"gamma": "1/1000", "constant_f": ["1","0","2","0","0","1"], "steps_count": 10}}}"#);
        let out = verify_newton2(&c, &Globals::default()).unwrap();
        assert!(out.success, "{}", out.stdout);
        assert!(out.stdout.contains("CHECK parabola: PASS"));
        // τ/(cγ) = (1/10)/(2/1000) = 50
        assert!(out.stdout.contains("beta: 50 "));
    }

    #[test]
    fn newton2_reports_overflow() {
        let c = cfg(r#"{"lattice": {"tau": "1", "c": "1", "horizon": 3},
            "table": {"kind": "forced", "row0": ["1/7","1/7","1/7","1/7","1/7","1/7","1/7"],
                      "schedule": {"gamma": "1/10", "constant_f": ["1","0","0","0","0","0"], "steps_count": 3}}}"#);
        let out = verify_newton2(&c, &Globals::default()).unwrap();
        assert!(!out.success);
        assert!(out.stdout.contains("CHECK evolve: FAIL"), "{}", out.stdout);
        assert!(out.stdout.contains("after step 1"), "{}", out.stdout);
    }

    #[test]
    fn converge_to_stdout() {
        let c = cfg(r#"{"lattice": {"tau": "1/10", "c": "1", "horizon": 10}, "table": {"kind": "uniform"},
            "converge": {"total_time": "1", "n_list": [10, 100], "replicas": 50}}"#);
        let out = converge(&c, None, &Globals::default()).unwrap();
        assert!(out.success);
        let first = out.stdout.lines().next().unwrap();
        assert_eq!(first, "N,tau,exact_trace,bound,empirical_trace,se");
        assert!(out.stdout.contains("\n10,1.0000000000000001e-1,"));
    }

    #[test]
    fn simulate_files() {
        let c = cfg(r#"{"lattice": {"tau": "1", "c": "1", "horizon": 5}, "table": {"kind": "uniform"},
            "simulation": {"replicas": 2000, "seed": 3, "trajectories": 2}}"#);
        let out = simulate(&c, &Globals::default()).unwrap();
        let names: Vec<&str> = out.files.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["trajectories.csv", "moments.csv", "moments_exact.csv"]);
        assert_eq!(out.files[0].1.lines().count(), 1 + 2 * 6);
        assert_eq!(out, simulate(&c, &Globals::default()).unwrap());
    }
}

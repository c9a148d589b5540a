//! One function per subcommand. Each is pure: it takes parsed arguments and
//! returns a [`Report`]; writing files and manifests happens in [`crate::run`].

use crate::args::{
    BoundsArgs, Command, Common, DensityArgs, Format, OracleArgs, ScanArgs, StabilityArgs,
    TransferArgs,
};
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Report, Table};
use fiid::coupling::{
    estimate_stability, find_p_for_moment, scan_p, CouplingConfig, Host,
};
use fiid::factor::{estimate_tree_density, project_to_graph, Factor, TreeKind};
use fiid::graph::{config_graph_from_pairing, sample_config_model, sample_er, MultiGraph};
use fiid::pgw::{schedule_degree, transfer_density};
use fiid::profiles::{
    all_pairings, asymptotic_rate, brute_force_z, compatible_edge_counts, entropy, entropy_hat,
    er_log_expected_z, log_expected_z, log_expected_z_counts, max_entropy_check, pi_to_rho,
    rate_bound, rho_to_pi, DensityProfile, EdgeProfile, PartitionMeasure,
};
use fiid::rng::{derive, tag, LabelScheme};
use fiid::stats::{run_trials, Accumulator, Estimate};
use rayon::prelude::*;
use serde_json::json;

/// Runs any subcommand except `replay`.
pub fn execute(cmd: &Command, common: &Common) -> CliResult<Report> {
    match cmd {
        Command::Density(a) => density(a, common),
        Command::ScanP(a) => scan(a, common),
        Command::Stability(a) => stability(a, common),
        Command::Bounds(a) => bounds(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::PgwTransfer(a) => pgw_transfer(a, common),
        Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
    }
}

fn parse_factor(s: &str) -> CliResult<Factor> {
    s.parse().map_err(|e| CliError::from_core("--factor", e))
}

fn parse_host(s: &str) -> CliResult<Host> {
    s.parse().map_err(|e| CliError::from_core("--host", e))
}

fn positive_trials(c: &Common) -> CliResult<()> {
    if c.trials == 0 {
        return Err(CliError::Usage("--trials: must be at least 1".into()));
    }
    Ok(())
}

/// Hosts accepted by `density`: the coupling hosts plus PGW trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityHost {
    Tree(TreeKind),
    Graph(Host),
}

impl DensityHost {
    pub fn parse(s: &str) -> CliResult<Self> {
        if let Some(l) = s.strip_prefix("pgw:") {
            let lambda: f64 = l
                .parse()
                .map_err(|_| CliError::Usage(format!("--host: lambda {l:?} is not a number")))?;
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(CliError::Usage(format!("--host: lambda = {lambda} must be positive")));
            }
            return Ok(Self::Tree(TreeKind::Pgw { lambda }));
        }
        Ok(match parse_host(s)? {
            Host::RegularTree { d } => Self::Tree(TreeKind::Regular { d }),
            h => Self::Graph(h),
        })
    }
}

fn sample_host(host: Host, seed: u64) -> MultiGraph {
    match host {
        Host::ConfigModel { n, d } => sample_config_model(n, d, seed),
        Host::Er { n, lambda } => sample_er(n, lambda, seed),
        Host::RegularTree { .. } => unreachable!("trees are handled lazily"),
    }
    .expect("host parameters were validated")
}

/// Mean density and mean non-tree fraction over `trials` sampled graphs.
pub fn graph_density(f: &Factor, host: Host, trials: u64, seed: u64) -> (Estimate, Estimate) {
    let n = host.n().expect("finite host") as f64;
    let (dens, loss) = run_trials(
        trials,
        <(Accumulator, Accumulator)>::default,
        |(dens, loss), t| {
            let ts = derive(seed, tag::TRIAL, t);
            let g = sample_host(host, derive(ts, tag::STRUCTURE, 0));
            let s = project_to_graph(f, &g, &LabelScheme::iid(derive(ts, tag::LABEL, 0)));
            dens.push(s.density());
            loss.push(s.non_tree as f64 / n);
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
        },
    );
    (dens.estimate(), loss.estimate())
}

fn density(a: &DensityArgs, c: &Common) -> CliResult<Report> {
    positive_trials(c)?;
    let f = parse_factor(&a.factor)?;
    let host = DensityHost::parse(&a.host)?;
    let (est, loss) = match host {
        DensityHost::Tree(kind) => (
            estimate_tree_density(&f, kind, c.trials, c.seed),
            Estimate::exact(0.0),
        ),
        DensityHost::Graph(h) => graph_density(&f, h, c.trials, c.seed),
    };
    let mut t = Table::new([
        "kind",
        "params",
        "host",
        "trials",
        "mean",
        "stderr",
        "seed",
        "non_tree_fraction",
    ]);
    t.push(vec![
        serde_json::to_value(f.kind())
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
            .into(),
        f.spec().params.to_string().into(),
        a.host.as_str().into(),
        c.trials.into(),
        est.mean.into(),
        est.std_error.into(),
        c.seed.into(),
        loss.mean.into(),
    ]);
    Ok(Report::csv(t))
}

fn coupling_config(factor: &str, host: &str, p: f64, k: usize, c: &Common) -> CliResult<CouplingConfig> {
    positive_trials(c)?;
    let cfg = CouplingConfig::new(parse_factor(factor)?, parse_host(host)?, p, k, c.trials, c.seed);
    cfg.validate().map_err(|e| CliError::from_core("coupling", e))?;
    Ok(cfg)
}

fn host_columns(h: &Host) -> Vec<Cell> {
    vec![
        h.to_string().into(),
        h.degree_param().into(),
        h.n().unwrap_or(0).into(),
    ]
}

fn scan(a: &ScanArgs, c: &Common) -> CliResult<Report> {
    let mut cfg = coupling_config(&a.factor, &a.host, 0.0, a.k, c)?;
    cfg.inner_trials = a.inner_trials;
    cfg.estimator = a.estimator.into();
    cfg.validate().map_err(|e| CliError::from_core("--inner-trials", e))?;
    let scan = scan_p(&cfg, &a.grid, a.stability).map_err(|e| CliError::from_core("scan", e))?;
    let copies = a.k.max(3);
    let mut header: Vec<String> = ["host", "d_or_lambda", "n", "factor", "p", "k", "trials", "seed"]
        .map(String::from)
        .to_vec();
    for i in 1..=copies {
        header.push(format!("mean_{i}"));
        header.push(format!("stderr_{i}"));
    }
    if a.stability {
        for m in 0..a.k {
            header.push(format!("q_moment_{m}"));
            header.push(format!("q_moment_{m}_stderr"));
        }
    }
    header.extend(["binom_sum_2", "binom_sum_3", "max_jump_from_previous"].map(String::from));
    let mut t = Table::new(header);
    let mut previous: Option<Vec<Estimate>> = None;
    for row in &scan.rows {
        let prefixes = row.intersections.prefixes();
        let mut cells = host_columns(&cfg.host);
        cells.extend([
            cfg.factor.short_name().into(),
            row.p.into(),
            a.k.into(),
            c.trials.into(),
            c.seed.into(),
        ]);
        for e in &prefixes {
            cells.push(e.mean.into());
            cells.push(e.std_error.into());
        }
        if let Some(s) = &row.stability {
            for (_, e) in &s.moments {
                cells.push(e.mean.into());
                cells.push(e.std_error.into());
            }
        }
        let jump = previous.as_ref().map_or(0.0, |prev| {
            prev.iter()
                .zip(&prefixes)
                .map(|(x, y)| (x.mean - y.mean).abs())
                .fold(0.0, f64::max)
        });
        cells.extend([row.binom_sum_2.into(), row.binom_sum_3.into(), jump.into()]);
        t.push(cells);
        previous = Some(prefixes);
    }
    Ok(Report::csv(t))
}

fn stability(a: &StabilityArgs, c: &Common) -> CliResult<Report> {
    let mut cfg = coupling_config(&a.factor, &a.host, a.p, 1, c)?;
    cfg.inner_trials = a.inner_trials;
    cfg.estimator = a.estimator.into();
    cfg.validate().map_err(|e| CliError::from_core("--inner-trials", e))?;
    if let Some(target) = a.target {
        if !(0.0..=1.0).contains(&target) {
            return Err(CliError::Usage(format!("--target: {target} outside [0,1]")));
        }
        let sol = find_p_for_moment(&cfg, a.u, target, a.coarse, a.bisections)
            .map_err(|e| CliError::from_core("--target", e))?;
        let mut t = Table::new([
            "host", "d_or_lambda", "n", "factor", "u", "target", "p", "mean", "stderr",
            "evaluations", "trials", "inner_trials", "seed",
        ]);
        let mut cells = host_columns(&cfg.host);
        cells.extend([
            cfg.factor.short_name().into(),
            a.u.into(),
            target.into(),
            sol.p.into(),
            sol.value.mean.into(),
            sol.value.std_error.into(),
            sol.evaluations.into(),
            c.trials.into(),
            a.inner_trials.into(),
            c.seed.into(),
        ]);
        t.push(cells);
        return Ok(Report::csv(t));
    }
    let orders = if a.moments.is_empty() {
        vec![0.0, 1.0, 2.0]
    } else {
        a.moments.clone()
    };
    let s = estimate_stability(&cfg, &orders).map_err(|e| CliError::from_core("--moments", e))?;
    let mut t = Table::new([
        "host", "d_or_lambda", "n", "factor", "p", "m", "mean", "stderr", "accepted", "attempted",
        "acceptance", "acceptance_stderr", "q_min", "q_max", "inner_trials", "seed",
    ]);
    for (m, e) in &s.moments {
        let mut cells = host_columns(&cfg.host);
        cells.extend([
            cfg.factor.short_name().into(),
            a.p.into(),
            (*m).into(),
            e.mean.into(),
            e.std_error.into(),
            s.accepted.into(),
            s.attempted.into(),
            s.acceptance.mean.into(),
            s.acceptance.std_error.into(),
            s.q_min.into(),
            s.q_max.into(),
            s.inner_trials.into(),
            c.seed.into(),
        ]);
        t.push(cells);
    }
    Ok(Report::csv(t))
}

/// One profile of an exhaustive first-moment comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub counts: Vec<u64>,
    /// Mean number of matching tuples over all pairings.
    pub brute: f64,
    /// `Σ_M exp(ln E[Z(rho, M)])`.
    pub formula: f64,
    pub rel_error: f64,
}

fn cell_vectors(n: u64, k: usize) -> Vec<Vec<u64>> {
    let cells = 1usize << k;
    let mut out = Vec::new();
    let mut cur = vec![0u64; cells];
    fn rec(i: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if i == cur.len() - 1 {
            cur[0] = left;
            out.push(cur.clone());
            return;
        }
        for x in 0..=left {
            cur[i + 1] = x;
            rec(i + 1, left - x, cur, out);
        }
    }
    rec(0, n, &mut cur, &mut out);
    out
}

/// Compares the configuration-model first-moment formula with the average
/// over every pairing, for every integral profile with `k` copies.
pub fn oracle_rows(n: usize, d: usize, k: usize) -> Result<Vec<OracleRow>, fiid::Error> {
    let graphs = all_pairings(n, d)?
        .iter()
        .map(|p| config_graph_from_pairing(n, d, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for counts in cell_vectors(n as u64, k) {
        let pi = PartitionMeasure::new(k, counts.iter().map(|&x| x as f64 / n as f64).collect())?;
        let rho = pi_to_rho(&pi);
        let total: u64 = graphs
            .par_iter()
            .map(|g| brute_force_z(g, &rho))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .sum();
        let brute = total as f64 / graphs.len() as f64;
        let mut formula = 0.0;
        for m in compatible_edge_counts(&counts, d as u64) {
            formula += log_expected_z_counts(&counts, &m, n as u64, d as u64)?.exp();
        }
        let rel_error = if brute == formula {
            0.0
        } else {
            (formula - brute).abs() / brute.abs().max(f64::MIN_POSITIVE)
        };
        rows.push(OracleRow {
            n,
            d,
            k,
            counts,
            brute,
            formula,
            rel_error,
        });
    }
    Ok(rows)
}

/// Relative tolerance for the oracle comparison.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

fn oracle_table(rows: &[OracleRow]) -> Table {
    let mut t = Table::new(["n", "d", "k", "counts", "brute_mean", "formula", "rel_error"]);
    for r in rows {
        let counts: Vec<String> = r.counts.iter().map(u64::to_string).collect();
        t.push(vec![
            r.n.into(),
            r.d.into(),
            r.k.into(),
            counts.join("-").into(),
            r.brute.into(),
            r.formula.into(),
            r.rel_error.into(),
        ]);
    }
    t
}

fn worst(rows: &[OracleRow]) -> f64 {
    rows.iter().map(|r| r.rel_error).fold(0.0, f64::max)
}

fn oracle_check(a: &OracleArgs) -> CliResult<Report> {
    if !(1..=2).contains(&a.k) {
        return Err(CliError::Usage(format!("--k: {} is not 1 or 2", a.k)));
    }
    let rows = oracle_rows(a.n, a.d, a.k).map_err(|e| CliError::from_core("--n/--d", e))?;
    let mut report = Report::csv(oracle_table(&rows));
    let w = worst(&rows);
    if w > ORACLE_TOLERANCE {
        report.guard = Some(format!("oracle relative error {w:e} exceeds {ORACLE_TOLERANCE:e}"));
    }
    Ok(report)
}

/// Small instances used by `bounds --self-test`.
pub const SELF_TEST_CASES: [(usize, usize, usize); 5] =
    [(2, 2, 1), (4, 2, 1), (4, 3, 1), (6, 2, 1), (4, 2, 2)];

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn integral_counts(pi: &PartitionMeasure<f64>, n: u64) -> CliResult<Vec<u64>> {
    pi.pi()
        .iter()
        .enumerate()
        .map(|(t, &p)| {
            let x = p * n as f64;
            let r = x.round();
            if (x - r).abs() > 1e-9 {
                Err(CliError::Usage(format!(
                    "constraint violated: integrality: n*pi({t}) = {x}"
                )))
            } else {
                Ok(r as u64)
            }
        })
        .collect()
}

fn bounds(a: &BoundsArgs) -> CliResult<Report> {
    let core = |field: &'static str| move |e| CliError::from_core(field, e);
    let rho = if !a.rho.is_empty() {
        let len = a.rho.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(CliError::Usage(format!(
                "--rho: {len} values; expected 2^k for some k >= 1"
            )));
        }
        DensityProfile::new(len.trailing_zeros() as usize, a.rho.clone()).map_err(core("--rho"))?
    } else {
        let mut alpha = a.alpha.clone();
        if a.scaled {
            let d = a
                .d
                .ok_or_else(|| CliError::Usage("--scaled: needs --d".into()))? as f64;
            alpha.iter_mut().for_each(|x| *x *= d.ln() / d);
        }
        DensityProfile::symmetric(&alpha).map_err(core("--alpha"))?
    };
    let k = rho.k();
    let pi = rho_to_pi(&rho).map_err(core("profile"))?;
    let mut report = json!({
        "k": k,
        "rho": rho.rho(),
        "pi": pi.pi(),
        "entropy": { "h_pi": entropy(pi.pi()), "h_hat": entropy_hat(&pi) },
    });
    let mut t = Table::new(["n", "d_or_lambda", "k", "description", "value"]);
    let n_cell = Cell::from(a.n);
    let row = |t: &mut Table, dl: Option<f64>, desc: &str, v: f64| {
        t.push(vec![n_cell.clone(), dl.into(), k.into(), desc.into(), v.into()]);
    };
    row(&mut t, None, "entropy_h_pi", entropy(pi.pi()));
    row(&mut t, None, "entropy_h_hat", entropy_hat(&pi));
    if let Some(d) = a.d {
        let df = Some(d as f64);
        let rate = rate_bound(&pi, d);
        report["rate_bound"] = json!(rate);
        row(&mut t, df, "rate_bound", rate);
        if !a.alpha.is_empty() && d >= 3 {
            let alpha: Vec<f64> = if a.scaled {
                a.alpha.clone()
            } else {
                let s = (d as f64).ln() / d as f64;
                a.alpha.iter().map(|x| x / s).collect()
            };
            let ar = asymptotic_rate(&alpha, d).map_err(core("--alpha"))?;
            report["asymptotic"] = json!({
                "alpha": alpha,
                "leading": ar.leading,
                "rate": ar.rate,
                "gap": ar.gap,
                "budget": ar.budget,
                "constant": ar.constant(d),
                "within_budget": ar.within_budget(),
            });
            row(&mut t, df, "asymptotic_leading", ar.leading);
            row(&mut t, df, "asymptotic_gap", ar.gap);
            row(&mut t, df, "asymptotic_budget", ar.budget);
        }
    }
    if let (Some(n), Some(d)) = (a.n, a.d) {
        let df = Some(d as f64);
        let counts = integral_counts(&pi, n)?;
        if (n * d as u64) % 2 == 1 {
            return Err(CliError::Usage("constraint violated: parity: n*d is odd".into()));
        }
        if k <= 2 {
            let logs = compatible_edge_counts(&counts, d as u64)
                .iter()
                .map(|m| log_expected_z_counts(&counts, m, n, d as u64))
                .collect::<Result<Vec<_>, _>>()
                .map_err(core("profile"))?;
            if logs.is_empty() {
                report["config_first_moment"] = json!({ "compatible_edge_profiles": 0 });
            } else {
                let v = log_sum_exp(&logs);
                report["config_first_moment"] =
                    json!({ "compatible_edge_profiles": logs.len(), "log_expected_z": v });
                row(&mut t, df, "config_log_expected_z_total", v);
            }
        }
        if !a.edge_counts.is_empty() {
            let nd = (n * d as u64) as f64;
            let cells = 1usize << k;
            if a.edge_counts.len() != cells * cells {
                return Err(CliError::Usage(format!(
                    "--edge-counts: {} values; expected {}",
                    a.edge_counts.len(),
                    cells * cells
                )));
            }
            let m = EdgeProfile::new(k, a.edge_counts.iter().map(|&x| x as f64 / nd).collect())
                .map_err(core("--edge-counts"))?;
            let lez = log_expected_z(&rho, &m, n, d as u64).map_err(core("--edge-counts"))?;
            let residual = max_entropy_check(&m).map_err(core("--edge-counts"))?;
            report["edge_profile"] = json!({ "log_expected_z": lez, "max_entropy_residual": residual });
            row(&mut t, df, "log_expected_z", lez);
            row(&mut t, df, "max_entropy_residual", residual);
        }
    }
    if let (Some(n), Some(lambda)) = (a.n, a.lambda) {
        let v = er_log_expected_z(&rho, n, lambda).map_err(core("--lambda"))?;
        report["er_log_expected_z"] = json!(v);
        row(&mut t, Some(lambda), "er_log_expected_z", v);
    }
    let mut guard = None;
    if a.self_test {
        let mut rows = Vec::new();
        for (n, d, k) in SELF_TEST_CASES {
            rows.extend(oracle_rows(n, d, k).map_err(core("--self-test"))?);
        }
        let w = worst(&rows);
        let passed = w <= ORACLE_TOLERANCE;
        report["self_test"] = json!({ "profiles": rows.len(), "max_rel_error": w, "passed": passed });
        t.push(vec![Cell::Empty, Cell::Empty, Cell::Empty, "self_test_max_rel_error".into(), w.into()]);
        if !passed {
            guard = Some(format!("self-test relative error {w:e}"));
        }
    }
    Ok(Report {
        table: t,
        json: Some(report),
        default_format: Format::Json,
        guard,
    })
}

fn pgw_transfer(a: &TransferArgs, c: &Common) -> CliResult<Report> {
    positive_trials(c)?;
    let f = parse_factor(&a.factor)?;
    let degrees: Vec<usize> = match a.schedule_u {
        Some(u) => {
            if !(u > 0.5 && u < 1.0) {
                return Err(CliError::Usage(format!("--schedule-u: {u} outside (1/2, 1)")));
            }
            a.lambda
                .iter()
                .map(|&l| schedule_degree(l, u))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::from_core("--lambda", e))?
        }
        None => match a.d.len() {
            1 => vec![a.d[0]; a.lambda.len()],
            len if len == a.lambda.len() => a.d.clone(),
            len => {
                return Err(CliError::Usage(format!(
                    "--d: {len} values for {} lambdas",
                    a.lambda.len()
                )))
            }
        },
    };
    let mut t = Table::new([
        "lambda",
        "d",
        "trials",
        "density_j",
        "stderr",
        "density_i",
        "density_i_stderr",
        "p_e_exact",
        "p_e_mc",
        "p_e_mc_stderr",
        "p_e_lower_bound",
        "lower",
        "lower_stderr",
        "upper",
        "sandwich_ok",
        "p_e_agree",
        "max_kept_degree",
        "j_violations",
        "schedule_u",
        "seed",
    ]);
    for (&lambda, &d) in a.lambda.iter().zip(&degrees) {
        let r = transfer_density(&f, lambda, d, c.trials, c.seed)
            .map_err(|e| CliError::from_core("--lambda/--d", e))?;
        t.push(vec![
            lambda.into(),
            d.into(),
            c.trials.into(),
            r.density_j.mean.into(),
            r.density_j.std_error.into(),
            r.density_i.mean.into(),
            r.density_i.std_error.into(),
            r.p_e_exact.into(),
            r.p_e_mc.mean.into(),
            r.p_e_mc.std_error.into(),
            r.p_e_lower_bound.into(),
            r.lower.into(),
            r.lower_std_error.into(),
            r.upper.into(),
            r.sandwich_ok.into(),
            r.p_e_agree.into(),
            r.max_kept_degree.into(),
            r.j_violations.into(),
            a.schedule_u.into(),
            c.seed.into(),
        ]);
    }
    Ok(Report::csv(t))
}

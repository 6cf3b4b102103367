use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eigenoverlap::bounds::first_order_bounds;
use eigenoverlap::indicator::IndicatorMode;
use eigenoverlap::moments::rescaled_power_moments;
use eigenoverlap::{
    build_exact_indicator, build_gap_indicator, build_threshold_indicator, chebyshev_moments,
    degree_sweep, discretize, eckart_lower, exact_overlap, gen_cluster_model, hankel_consistency_check,
    moments_from_spectrum, mora_upper, power_moments, Basis, BoundResult, CertifyOptions,
    ClusterModelParams, DenseSymmetricMatrix, Direction, Error, IndicatorSpec, MomentVector,
    PointCounts, ScalingWindow, SpectralModel, StateVector, SweepInput,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BoundArgs, CertifyArgs, ClassicArgs, GenModelArgs, InputArgs, ModeArg, MomentsArgs, SweepArgs,
    TargetArgs, WindowArgs, WindowPolicy,
};
use crate::config::{
    parse_degrees, parse_f64_list, parse_usize_list, parse_window_range, InputDescriptor, PointConfig,
    RunConfig,
};
use crate::error::{CliError, CliResult};
use crate::io;

/// A system: its spectral readout and, for matrix input, the matrix itself.
pub struct System {
    pub id: String,
    pub model: SpectralModel,
    pub matrix: Option<(DenseSymmetricMatrix, StateVector)>,
}

impl System {
    fn gap(&self) -> f64 {
        let e = self.model.eigenvalues();
        if e.len() >= 2 {
            e[1] - e[0]
        } else {
            0.0
        }
    }
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn describe_input(input: &InputArgs) -> InputDescriptor {
    InputDescriptor {
        matrix: input.matrix.as_deref().map(path_string),
        state: input.state.as_deref().map(path_string),
        spectrum: input.spectrum.iter().map(|p| path_string(p)).collect(),
        overlap_floor: input.matrix.as_ref().map(|_| input.overlap_floor),
        ..InputDescriptor::default()
    }
}

pub fn load_system(input: &InputArgs) -> CliResult<System> {
    match (&input.matrix, &input.state, &input.spectrum) {
        (Some(m), Some(s), None) => {
            let a = io::read_matrix(m)?;
            let phi = io::read_state(s)?;
            if a.dim() != phi.dim() {
                return Err(CliError::input(format!(
                    "matrix is {0}×{0} but the state has {1} amplitudes",
                    a.dim(),
                    phi.dim()
                )));
            }
            let model = SpectralModel::from_matrix(&a, &phi, input.overlap_floor)?;
            Ok(System {
                id: stem(m),
                model,
                matrix: Some((a, phi)),
            })
        }
        (None, None, Some(p)) => Ok(System {
            id: stem(p),
            model: io::read_spectrum(p)?,
            matrix: None,
        }),
        _ => Err(CliError::input(
            "give either --matrix with --state, or --spectrum",
        )),
    }
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path_string(p))
}

/// Window for `system`; interval grids widen it to the indicator's support.
fn resolve_window(
    args: &WindowArgs,
    system: &System,
    exact: bool,
    outer: Option<[f64; 2]>,
) -> CliResult<(ScalingWindow, String)> {
    if let Some(r) = &args.window_range {
        return Ok((parse_window_range(r)?, "explicit".to_string()));
    }
    let diagonal;
    let (a, phi) = match &system.matrix {
        Some((a, phi)) => (a, phi),
        None => {
            diagonal = system.model.to_diagonal_problem()?;
            (&diagonal.0, &diagonal.1)
        }
    };
    let policy = match args.window {
        WindowPolicy::Auto if exact => WindowPolicy::Spectrum,
        WindowPolicy::Auto if system.matrix.is_some() => WindowPolicy::Gershgorin,
        WindowPolicy::Auto => WindowPolicy::Spectrum,
        p => p,
    };
    let base = match policy {
        WindowPolicy::Gershgorin => ScalingWindow::gershgorin(a)?,
        WindowPolicy::Lanczos => ScalingWindow::lanczos(a, phi, args.lanczos_steps)?,
        _ => ScalingWindow::for_spectrum(&system.model)?,
    };
    let window = match outer {
        Some([lo, hi]) if lo < base.lower() || hi > base.upper() => {
            ScalingWindow::rounded_outward(lo.min(base.lower()), hi.max(base.upper()))?
        }
        _ => base,
    };
    Ok((window, policy.name().to_string()))
}

/// Moments up to `degree` in the grid coordinate of `window`.
fn compute_moments(system: &System, degree: usize, basis: Basis, window: ScalingWindow) -> CliResult<MomentVector> {
    let m = match (&system.matrix, basis) {
        (Some((a, phi)), Basis::Chebyshev) => chebyshev_moments(a, phi, degree, window)?,
        (Some((a, phi)), Basis::Monomial) => rescaled_power_moments(a, phi, degree, window)?,
        (None, b) => moments_from_spectrum(&system.model, degree, b, Some(window))?,
    };
    Ok(m)
}

struct Target {
    spec: IndicatorSpec,
    counts: PointCounts,
    targets: Vec<usize>,
    weights: Option<Vec<f64>>,
}

fn build_target(args: &TargetArgs, model: &SpectralModel) -> CliResult<Target> {
    let weights = args
        .weights
        .as_deref()
        .map(|w| parse_f64_list(w, "weight"))
        .transpose()?;
    let by_role = PointCounts::ByRole {
        target: args.target_points,
        complement: args.complement_points,
    };
    if let Some(cutoff) = args.threshold {
        let below: Vec<usize> = (0..model.len())
            .filter(|&i| model.eigenvalues()[i] < cutoff)
            .collect();
        if below.is_empty() {
            return Err(CliError::input(format!("no level lies below the threshold {cutoff}")));
        }
        let value = match weights.as_deref() {
            None => 1.0,
            Some([v]) => *v,
            Some(_) => return Err(CliError::input("a threshold target takes a single weight")),
        };
        let spec = match args.mode {
            ModeArg::Exact => {
                let v = vec![value; below.len()];
                build_exact_indicator(model, &below, Some(&v))?
            }
            ModeArg::Intervals => build_threshold_indicator(cutoff, model.range(), value)?,
        };
        return Ok(Target {
            spec,
            counts: PointCounts::Uniform {
                total: args.threshold_points,
            },
            targets: below,
            weights: weights.map(|_| vec![value]),
        });
    }
    let targets = parse_usize_list(&args.targets, "target")?;
    if targets.is_empty() {
        return Err(CliError::input("no target levels given"));
    }
    let spec = match args.mode {
        ModeArg::Exact => build_exact_indicator(model, &targets, weights.as_deref())?,
        ModeArg::Intervals => build_gap_indicator(
            model.eigenvalues(),
            args.gamma_lo,
            args.gamma_hi,
            &targets,
            weights.as_deref(),
        )?,
    };
    for m in &spec.merges {
        eprintln!(
            "note: level windows {:?} overlap and were merged into [{}, {}] with value {}",
            m.windows, m.lo, m.hi, m.value
        );
    }
    Ok(Target {
        spec,
        counts: by_role,
        targets,
        weights,
    })
}

fn certify_options(args: &CertifyArgs) -> CertifyOptions {
    CertifyOptions {
        factor: args.refine_factor,
        max_retries: args.max_retries,
        tolerance: args.certify_tol,
    }
}

fn fill_target_config(cfg: &mut RunConfig, args: &TargetArgs, target: &Target) {
    cfg.mode = Some(target.spec.mode);
    cfg.threshold = args.threshold;
    cfg.targets = Some(target.targets.clone());
    cfg.weights = target.weights.clone();
    cfg.points = Some(PointConfig {
        target: args.target_points,
        complement: args.complement_points,
        threshold: args.threshold_points,
    });
    if target.spec.mode == IndicatorMode::Intervals && args.threshold.is_none() {
        cfg.gamma = Some([args.gamma_lo, args.gamma_hi]);
    }
}

/// Lowest-level validation shared by `bound` and `sweep` before any work.
fn precheck(cfg: &RunConfig, args: &TargetArgs) -> CliResult<()> {
    let mut probe = cfg.clone();
    probe.points = Some(PointConfig {
        target: args.target_points,
        complement: args.complement_points,
        threshold: args.threshold_points,
    });
    if args.mode == ModeArg::Intervals && args.threshold.is_none() {
        probe.gamma = Some([args.gamma_lo, args.gamma_hi]);
    }
    probe.validate()
}

struct Solved {
    window: ScalingWindow,
    policy: String,
    results: Vec<BoundResult>,
    reference: Option<f64>,
}

fn solve_system(
    system: &System,
    target: &Target,
    window_args: &WindowArgs,
    moments: Option<&MomentVector>,
    degrees: &[usize],
    basis: Basis,
    certify: &CertifyOptions,
) -> CliResult<Solved> {
    let exact = target.spec.mode == IndicatorMode::ExactPoints;
    let (window, policy) = match moments.and_then(|m| m.window()) {
        Some(w) => (*w, "moments-file".to_string()),
        None => resolve_window(window_args, system, exact, (!exact).then_some(target.spec.outer))?,
    };
    let max_degree = *degrees.iter().max().expect("degrees validated non-empty");
    let m = match moments {
        Some(m) => m.clone(),
        None => compute_moments(system, max_degree, basis, window)?,
    };
    let grid = discretize(&target.spec, &target.counts, window)?;
    let input = SweepInput {
        grid: &grid,
        spec: Some(&target.spec),
        certify: Some(certify),
    };
    let results = degree_sweep(&m, input, degrees, &Direction::BOTH)?;
    for r in results.iter().filter(|r| !r.certified) {
        eprintln!(
            "warning: {} bound at degree {} is uncertified (margin {:e} after {} refinements)",
            r.direction, r.degree, r.certified_margin, r.refinements
        );
    }
    let reference = if system.model.is_complete() {
        let w: Option<Vec<f64>> = match &target.weights {
            Some(w) if w.len() == target.targets.len() => Some(w.clone()),
            Some(w) if w.len() == 1 => Some(vec![w[0]; target.targets.len()]),
            _ => None,
        };
        Some(exact_overlap(&system.model, &target.targets, w.as_deref())?)
    } else {
        None
    };
    Ok(Solved {
        window,
        policy,
        results,
        reference,
    })
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn csv_header(cfg: &RunConfig, comments: &[String], columns: &[&str]) -> String {
    let mut s = format!("# config: {}\n", cfg.to_json());
    for c in comments {
        s.push_str(&format!("# {c}\n"));
    }
    s.push_str(&columns.join(","));
    s.push('\n');
    s
}

pub fn cmd_bound(args: &BoundArgs) -> CliResult<()> {
    let mut cfg = RunConfig::new("bound");
    cfg.input = describe_input(&args.input);
    cfg.input.moments = args.moments.as_deref().map(path_string);
    cfg.degrees = parse_degrees(&args.degrees)?;
    cfg.certify = Some(certify_options(&args.certify));
    precheck(&cfg, &args.target)?;

    let system = load_system(&args.input)?;
    let target = build_target(&args.target, &system.model)?;
    fill_target_config(&mut cfg, &args.target, &target);
    let moments = args.moments.as_deref().map(io::read_moments).transpose()?;
    let basis = moments.as_ref().map_or(args.basis.into(), |m| m.basis());
    cfg.basis = Some(basis);
    let json_path = args.json.clone().unwrap_or_else(|| sidecar_path(&args.output));
    cfg.outputs = vec![path_string(&args.output), path_string(&json_path)];
    cfg.validate()?;

    let solved = solve_system(
        &system,
        &target,
        &args.window,
        moments.as_ref(),
        &cfg.degrees,
        basis,
        cfg.certify.as_ref().expect("set above"),
    )?;
    cfg.window_policy = Some(solved.policy.clone());
    cfg.window = Some(solved.window);

    let mut csv = csv_header(
        &cfg,
        &[],
        &[
            "degree",
            "direction",
            "raw_value",
            "clamped_value",
            "certified_margin",
            "lp_status",
            "basis",
            "grid_points",
            "certified",
        ],
    );
    for r in &solved.results {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.degree,
            r.direction,
            r.raw_value,
            r.value,
            r.certified_margin,
            r.lp_status,
            r.basis,
            r.grid.points,
            r.certified
        )
        .expect("write to string");
    }
    let sidecar = json!({
        "config": cfg,
        "indicator": target.spec,
        "reference_overlap": solved.reference,
        "results": solved.results,
    });
    io::write_atomic(&args.output, csv.as_bytes())?;
    io::write_atomic(&json_path, io::to_json_pretty(&sidecar)?.as_bytes())?;

    println!("degree  direction  value        margin     certified");
    for r in &solved.results {
        println!(
            "{:<7} {:<10} {:<12.8} {:<10.2e} {}",
            r.degree,
            r.direction.name(),
            r.value,
            r.certified_margin,
            r.certified
        );
    }
    if let Some(p) = solved.reference {
        println!("reference overlap: {p}");
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let mut cfg = RunConfig::new("sweep");
    cfg.degrees = parse_degrees(&args.degrees)?;
    cfg.basis = Some(args.basis.into());
    cfg.certify = Some(certify_options(&args.certify));
    cfg.outputs = vec![path_string(&args.output)];
    precheck(&cfg, &args.target)?;

    let mut systems: Vec<(System, f64)> = Vec::new();
    match (&args.gaps, args.spectrum.is_empty()) {
        (Some(gaps), true) => {
            cfg.seed = Some(args.seed);
            for gap in parse_f64_list(gaps, "gap")? {
                let params = ClusterModelParams {
                    seed: args.seed,
                    ..ClusterModelParams::with_gap(args.center2, gap)
                };
                let model = gen_cluster_model(&params)?;
                cfg.input.generated.push(params);
                systems.push((
                    System {
                        id: format!("gap-{gap}"),
                        model,
                        matrix: None,
                    },
                    gap,
                ));
            }
        }
        (None, false) => {
            for p in &args.spectrum {
                let system = System {
                    id: stem(p),
                    model: io::read_spectrum(p)?,
                    matrix: None,
                };
                let gap = system.gap();
                cfg.input.spectrum.push(path_string(p));
                systems.push((system, gap));
            }
        }
        _ => return Err(CliError::input("give either --gaps or one or more --spectrum files")),
    }
    if systems.is_empty() {
        return Err(CliError::input("no systems to sweep"));
    }

    let mut rows = Vec::new();
    let mut windows = Vec::new();
    for (k, (system, gap)) in systems.iter().enumerate() {
        let target = build_target(&args.target, &system.model)?;
        if k == 0 {
            fill_target_config(&mut cfg, &args.target, &target);
            cfg.validate()?;
        }
        let solved = solve_system(
            system,
            &target,
            &args.window,
            None,
            &cfg.degrees,
            args.basis.into(),
            cfg.certify.as_ref().expect("set above"),
        )?;
        cfg.window_policy = Some(solved.policy.clone());
        windows.push(json!({"system_id": system.id, "window": solved.window}));
        for r in solved.results {
            let error = solved.reference.map(|p| (r.raw_value - p).abs());
            rows.push((system.id.clone(), *gap, r, error));
        }
    }

    let comments = [format!("windows: {}", Value::Array(windows))];
    let mut csv = csv_header(
        &cfg,
        &comments,
        &["system_id", "gap", "degree", "direction", "value", "error", "certified_margin"],
    );
    for (id, gap, r, error) in &rows {
        let error = error.map_or(String::new(), |e| e.to_string());
        writeln!(
            csv,
            "{id},{gap},{},{},{},{error},{}",
            r.degree, r.direction, r.raw_value, r.certified_margin
        )
        .expect("write to string");
    }
    io::write_atomic(&args.output, csv.as_bytes())?;
    println!("wrote {} rows for {} systems to {}", rows.len(), systems.len(), args.output.display());
    Ok(())
}

pub fn cmd_moments(args: &MomentsArgs) -> CliResult<()> {
    let mut cfg = RunConfig::new("moments");
    cfg.input = describe_input(&args.input);
    cfg.degrees = vec![args.degree];
    let basis: Basis = args.basis.into();
    cfg.basis = Some(basis);
    cfg.outputs = vec![path_string(&args.output)];
    let system = load_system(&args.input)?;

    let window = match (basis, &args.window.window_range) {
        (Basis::Monomial, None) => None,
        _ => {
            let (w, policy) = resolve_window(&args.window, &system, false, None)?;
            cfg.window_policy = Some(policy);
            Some(w)
        }
    };
    cfg.window = window;
    let m = match (&system.matrix, window) {
        (Some((a, phi)), None) => power_moments(a, phi, args.degree)?,
        (Some(_), Some(w)) => compute_moments(&system, args.degree, basis, w)?,
        (None, w) => moments_from_spectrum(&system.model, args.degree, basis, w)?,
    };
    let hankel = match hankel_consistency_check(&m) {
        Ok(report) => {
            println!(
                "Hankel check (order {}): min eigenvalue {:e}, threshold {:e}: {}",
                report.order,
                report.min_eigenvalue,
                report.threshold,
                if report.pass { "pass" } else { "FAIL" }
            );
            Some(report)
        }
        Err(_) => {
            println!("Hankel check skipped (needs degree ≥ 2)");
            None
        }
    };
    let mut out = serde_json::to_value(&m).map_err(|e| CliError::Numerical(e.to_string()))?;
    let obj = out.as_object_mut().expect("moment vector is an object");
    obj.insert("hankel".into(), json!(hankel));
    obj.insert("config".into(), json!(cfg));
    io::write_atomic(&args.output, io::to_json_pretty(&out)?.as_bytes())?;
    println!("values: {:?}", m.values());
    Ok(())
}

pub fn cmd_gen_model(args: &GenModelArgs) -> CliResult<()> {
    let base = match args.gap {
        Some(gap) => ClusterModelParams::with_gap(args.center2, gap),
        None => ClusterModelParams::fixed_grid(args.center2),
    };
    let params = ClusterModelParams {
        seed: args.seed,
        ..base
    };
    let model = gen_cluster_model(&params)?;
    let mut cfg = RunConfig::new("gen-model");
    cfg.seed = Some(args.seed);
    cfg.outputs = vec![path_string(&args.output)];
    cfg.input.generated.push(params.clone());
    let mut out = serde_json::to_value(&model).map_err(|e| CliError::Numerical(e.to_string()))?;
    let obj = out.as_object_mut().expect("model is an object");
    obj.insert(
        "metadata".into(),
        json!({"generator": "cluster", "params": params, "seed": args.seed}),
    );
    obj.insert("config".into(), json!(cfg));
    io::write_atomic(&args.output, io::to_json_pretty(&out)?.as_bytes())?;
    println!(
        "wrote {} levels (E0 = {}) to {}",
        model.len(),
        model.eigenvalues()[0],
        args.output.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ClassicTable {
    pub mean: f64,
    pub second: f64,
    pub e0: f64,
    pub e1: f64,
    pub ed: f64,
    pub eckart: f64,
    pub eckart_clamped: f64,
    /// `None` when the variance vanishes.
    pub mora_as_printed: Option<f64>,
    pub first_order_lower: f64,
    pub first_order_upper: f64,
    pub s: f64,
    pub trivial_branch: bool,
}

pub fn classic_table(args: &ClassicArgs) -> CliResult<ClassicTable> {
    let have_input = args.input.matrix.is_some() || args.input.spectrum.is_some();
    let system = if have_input { Some(load_system(&args.input)?) } else { None };
    let from_system = |f: &dyn Fn(&System) -> CliResult<f64>, what: &str| -> CliResult<f64> {
        match &system {
            Some(s) => f(s),
            None => Err(CliError::input(format!("missing {what}: give --{what} or an input system"))),
        }
    };
    let level = |k: usize| {
        move |s: &System| -> CliResult<f64> {
            let e = s.model.eigenvalues();
            let idx = if k == usize::MAX { e.len() - 1 } else { k };
            e.get(idx)
                .copied()
                .ok_or_else(|| CliError::input("system has fewer than two levels"))
        }
    };
    let raw_moments = |s: &System| -> CliResult<(f64, f64)> {
        match &s.matrix {
            Some((a, phi)) => {
                let m = power_moments(a, phi, 2)?;
                Ok((m.values()[1], m.values()[2]))
            }
            None => {
                let m = moments_from_spectrum(&s.model, 2, Basis::Monomial, None)?;
                Ok((m.values()[1], m.values()[2]))
            }
        }
    };
    let mean = match args.mean {
        Some(v) => v,
        None => from_system(&|s| raw_moments(s).map(|m| m.0), "mean")?,
    };
    let second = match args.second {
        Some(v) => v,
        None => from_system(&|s| raw_moments(s).map(|m| m.1), "second")?,
    };
    let e0 = match args.e0 {
        Some(v) => v,
        None => from_system(&level(0), "e0")?,
    };
    let e1 = match args.e1 {
        Some(v) => v,
        None => from_system(&level(1), "e1")?,
    };
    let ed = match args.ed {
        Some(v) => v,
        None => from_system(&level(usize::MAX), "ed")?,
    };
    let eckart = eckart_lower(mean, e0, e1)?;
    let fo = first_order_bounds(mean, e0, e1, ed)?;
    let mora = match mora_upper(mean, second, e0) {
        Ok(v) => Some(v),
        Err(Error::ZeroVariance { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(ClassicTable {
        mean,
        second,
        e0,
        e1,
        ed,
        eckart,
        eckart_clamped: eckart.max(0.0),
        mora_as_printed: mora,
        first_order_lower: fo.lower,
        first_order_upper: fo.upper,
        s: fo.s,
        trivial_branch: fo.trivial_lower(),
    })
}

pub fn render_classic(t: &ClassicTable) -> String {
    let mora = t
        .mora_as_printed
        .map_or("undefined (zero variance)".to_string(), |v| format!("{v}"));
    let branch = if t.trivial_branch {
        "s < 0: trivial branch, lower bound 0"
    } else {
        "s >= 0: Eckart branch"
    };
    format!(
        "eckart                 {}\n\
         max(0, eckart)         {}\n\
         mora (as printed)      {} [literature comparator]\n\
         first-order lower      {}\n\
         first-order upper      {}\n\
         s = E1 - <H>           {} ({branch})\n",
        t.eckart, t.eckart_clamped, mora, t.first_order_lower, t.first_order_upper, t.s
    )
}

pub fn cmd_classic(args: &ClassicArgs) -> CliResult<()> {
    let table = classic_table(args)?;
    print!("{}", render_classic(&table));
    if let Some(path) = &args.output {
        let mut cfg = RunConfig::new("classic");
        cfg.input = describe_input(&args.input);
        cfg.outputs = vec![path_string(path)];
        let out = json!({"config": cfg, "table": table});
        io::write_atomic(path, io::to_json_pretty(&out)?.as_bytes())?;
    }
    Ok(())
}

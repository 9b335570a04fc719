use std::error::Error as StdError;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use tvdw::func::{parse_function, tw_on_space, ScalarFn};
use tvdw::lipderiv::{self, DerivativeEstimate};
use tvdw::nets::{build_hierarchy, check_dense, check_separated, greedy_maximal_net, Net};
use tvdw::porosity::{self, SpaceHermeticity};
use tvdw::report::{fmt_f64, json_string, CsvReport};
use tvdw::synth::{region_samples, synthesize, verify_prescribed_sets, RegionSpec, VerifyOptions};
use tvdw::theorems::{self, WitnessRecord};
use tvdw::{Error, MetricSpace, Point, SpaceKind, SpaceSpec};

use crate::args::*;

type Res<T> = Result<T, Box<dyn StdError>>;

/// Runs a subcommand; `Ok(false)` means a verification failed.
pub fn run(cmd: &Command) -> Res<bool> {
    match cmd {
        Command::Net(a) => net(a),
        Command::Hierarchy(a) => hierarchy(a),
        Command::Eval(a) => eval(a),
        Command::Lip(a) => lip(a),
        Command::Hermeticity(a) => hermeticity(a),
        Command::Verify(a) => verify(a),
        Command::Synth(a) => synth(a),
    }
}

fn usage(msg: impl Into<String>) -> Box<dyn StdError> {
    Box::new(Error::Spec(msg.into()))
}

fn load_space(arg: &str) -> Res<Arc<MetricSpace>> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| usage(format!("cannot read space file {arg}: {e}")))?
    };
    let spec: SpaceSpec =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid space spec: {e}")))?;
    Ok(Arc::new(MetricSpace::from_spec(&spec)?))
}

fn parse_point(s: &str, space: &MetricSpace) -> Res<Point> {
    let s = s.trim();
    let bad = || usage(format!("cannot parse point {s:?}"));
    let p = match space.kind() {
        SpaceKind::PointCloud { .. } | SpaceKind::FiniteMatrix { .. } => {
            Point::index(s.trim_start_matches('#').parse().map_err(|_| bad())?)
        }
        SpaceKind::Box { .. } => {
            let c = s
                .trim_matches(|c| c == '(' || c == ')')
                .split(';')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Res<Vec<_>>>()?;
            Point::vector(&c)
        }
        _ => Point::line(s.parse().map_err(|_| bad())?),
    };
    space.validate(&p)?;
    Ok(p)
}

fn parse_points(v: &[String], space: &MetricSpace) -> Res<Vec<Point>> {
    v.iter().map(|s| parse_point(s, space)).collect()
}

/// The first carrier point followed by `n - 1` seeded random points.
fn test_points(space: &MetricSpace, n: usize, seed: u64) -> Res<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let p = match space.kind() {
            SpaceKind::Interval { lo, hi } => Point::line(if i == 0 {
                *lo
            } else {
                rng.gen_range(*lo..=*hi)
            }),
            SpaceKind::LatticeLine => Point::line(if i == 0 { 0.0 } else { rng.gen::<f64>() }),
            SpaceKind::Box { lo, hi } => {
                let c: Vec<f64> = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| if i == 0 { *l } else { rng.gen_range(*l..=*h) })
                    .collect();
                Point::vector(&c)
            }
            _ => {
                let pts = space.materialize()?;
                pts[if i == 0 {
                    0
                } else {
                    rng.gen_range(0..pts.len())
                }]
            }
        };
        out.push(p);
    }
    Ok(out)
}

/// `n` evenly spread points, or every point of a finite space.
fn sweep_points(space: &MetricSpace, n: usize) -> Res<Vec<Point>> {
    Ok(match space.kind() {
        SpaceKind::Interval { lo, hi } => (0..n)
            .map(|i| Point::line(lo + (hi - lo) * (i as f64 + 0.5) / n as f64))
            .collect(),
        SpaceKind::LatticeLine => (0..n)
            .map(|i| Point::line((i as f64 + 0.5) / n as f64))
            .collect(),
        SpaceKind::Box { .. } => test_points(space, n, 0)?,
        _ => {
            let pts = space.materialize()?;
            let stride = pts.len().div_ceil(n.max(1)).max(1);
            pts.into_iter().step_by(stride).collect()
        }
    })
}

fn sink(out: &Option<PathBuf>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Res<()> {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn check_net(net: &Net) -> Res<serde_json::Value> {
    let sep = check_separated(net);
    let dense = check_dense(net, net.space().resolution())?;
    Ok(json!({
        "epsilon": net.epsilon(),
        "separated": sep.passed,
        "min_distance": sep.min_distance,
        "dense": dense.passed,
        "probes": dense.probes,
        "worst_distance": dense.worst.map(|w| w.1),
    }))
}

fn passed(v: &serde_json::Value) -> bool {
    v["separated"] == true && v["dense"] == true
}

fn net(args: &NetArgs) -> Res<bool> {
    let space = load_space(&args.common.space)?;
    let seed = parse_points(&args.seed, &space)?;
    let net = greedy_maximal_net(&space, args.eps, &seed)?;
    emit(&args.common.out, &json_string(&net.to_file())?)?;
    if !args.verify {
        return Ok(true);
    }
    let v = check_net(&net)?;
    eprint!("{}", json_string(&v)?);
    Ok(passed(&v))
}

fn hierarchy(args: &HierarchyArgs) -> Res<bool> {
    let space = load_space(&args.common.space)?;
    let h = build_hierarchy(space, args.a, args.depth, !args.non_monotone)?;
    emit(&args.common.out, &json_string(&h.to_file())?)?;
    if !args.verify || h.is_implicit() {
        return Ok(true);
    }
    let checks = (0..=args.depth)
        .map(|n| check_net(h.level(n)?.as_ref()))
        .collect::<Res<Vec<_>>>()?;
    eprint!("{}", json_string(&checks)?);
    Ok(checks.iter().all(passed))
}

fn eval(args: &EvalArgs) -> Res<bool> {
    let space = load_space(&args.common.space)?;
    let xs = parse_points(&args.x, &space)?;
    let f = tw_on_space(space, args.a, args.b, args.index_start, args.tol)?;
    let results = xs
        .par_iter()
        .map(|x| f.eval(x, args.tol))
        .collect::<Result<Vec<_>, _>>()?;
    let format = args.format.unwrap_or(if xs.len() == 1 {
        Format::Json
    } else {
        Format::Csv
    });
    let mut w = sink(&args.common.out)?;
    match format {
        Format::Json if xs.len() == 1 => w.write_all(json_string(&results[0])?.as_bytes())?,
        Format::Json => w.write_all(json_string(&results)?.as_bytes())?,
        Format::Csv => {
            let mut c = CsvReport::new(w, &["x", "value", "terms_used", "error_bound"])?;
            for (x, r) in xs.iter().zip(&results) {
                c.row([
                    x.to_string(),
                    fmt_f64(r.value),
                    r.terms_used.to_string(),
                    fmt_f64(r.error_bound),
                ])?;
            }
            w = c.finish()?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn parse_schedule(s: &str) -> Res<Vec<f64>> {
    let bad = || usage(format!("cannot parse schedule {s:?}"));
    if let Some(k) = s.strip_prefix("dyadic:") {
        return Ok(lipderiv::dyadic_schedule(k.parse().map_err(|_| bad())?));
    }
    if let Some(rest) = s.strip_prefix("tw:") {
        let p: Vec<&str> = rest.split(',').collect();
        if p.len() != 3 {
            return Err(bad());
        }
        let a = p[0].parse().map_err(|_| bad())?;
        let from = p[1].parse().map_err(|_| bad())?;
        let to = p[2].parse().map_err(|_| bad())?;
        return Ok(lipderiv::tw_schedule(a, from, to));
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

/// Dyadic radii down to the smallest one the space samples at full budget.
fn default_schedule(space: &MetricSpace, budget: usize) -> Vec<f64> {
    let floor = space.resolution() * budget as f64 / 2.0;
    let mut kmax = 5;
    while kmax < 60 && 2f64.powi(-(kmax as i32 + 1)) >= floor {
        kmax += 1;
    }
    lipderiv::dyadic_schedule(kmax)
}

fn one_estimate(
    f: &dyn ScalarFn,
    x: &Point,
    args: &LipArgs,
    sched: &[f64],
) -> Res<DerivativeEstimate> {
    let need_r = || args.r.ok_or_else(|| usage("this functional needs --r"));
    let below = |r: f64| sched.iter().copied().filter(|&p| p < r).collect::<Vec<_>>();
    let (b, t) = (args.budget, args.threshold);
    Ok(match args.functional {
        FunctionalArg::BigLip => lipderiv::estimate_big_lip(f, x, sched, b, t)?,
        FunctionalArg::SmallLip => lipderiv::estimate_lip(f, x, sched, b, t)?,
        FunctionalArg::LLip => lipderiv::estimate_llip(f, x, sched, b, t)?,
        FunctionalArg::LipRBall => lipderiv::lip_r_ball(f, x, need_r()?, b)?,
        FunctionalArg::LipRClosed => lipderiv::lip_r_closed(f, x, need_r()?, b)?,
        FunctionalArg::LipRSup => {
            let r = need_r()?;
            lipderiv::lip_big_r(f, x, r, &below(r), b)?
        }
        FunctionalArg::LipRInf => {
            let r = need_r()?;
            lipderiv::lip_small_r(f, x, r, &below(r), b)?
        }
        FunctionalArg::LLipR => lipderiv::llip_r_pairwise(f, x, need_r()?, b)?,
    })
}

fn lip(args: &LipArgs) -> Res<bool> {
    let space = load_space(&args.common.space)?;
    let xs = parse_points(&args.x, &space)?;
    let f = parse_function(&args.function, space.clone(), args.tol)?;
    let sched = match &args.schedule {
        Some(s) => parse_schedule(s)?,
        None => default_schedule(&space, args.budget),
    };
    let est = xs
        .par_iter()
        .map(|x| one_estimate(f.as_ref(), x, args, &sched).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, String>>()
        .map_err(usage)?;
    let format = args.format.unwrap_or(if xs.len() == 1 {
        Format::Json
    } else {
        Format::Csv
    });
    match format {
        Format::Json if xs.len() == 1 => emit(&args.common.out, &json_string(&est[0])?)?,
        Format::Json => emit(&args.common.out, &json_string(&est)?)?,
        Format::Csv => {
            let mut c = CsvReport::new(
                sink(&args.common.out)?,
                &["x", "functional", "r", "value", "diverged", "witness"],
            )?;
            for e in &est {
                c.row([
                    e.point.to_string(),
                    e.functional.to_string(),
                    fmt_f64(e.radius),
                    fmt_f64(e.value),
                    e.diverged.to_string(),
                    e.witness.to_string(),
                ])?;
            }
            c.finish()?.flush()?;
        }
    }
    Ok(true)
}

fn hermeticity(args: &HermeticityArgs) -> Res<bool> {
    let space = load_space(&args.common.space)?;
    let grid = match (args.rmax, args.rmin) {
        (None, None) => porosity::default_r_grid(&space)?,
        (rmax, rmin) => {
            let d = porosity::default_r_grid(&space)?;
            porosity::r_grid(
                rmax.unwrap_or(d[0]),
                rmin.unwrap_or(*d.last().expect("nonempty")),
            )?
        }
    };
    if !args.all {
        let x = parse_point(args.x.as_deref().expect("required by clap"), &space)?;
        let rep = porosity::hermeticity_at(&space, &x, &grid, args.budget)?;
        emit(&args.common.out, &json_string(&rep)?)?;
        return Ok(true);
    }
    let pts = sweep_points(&space, args.samples)?;
    let reps = pts
        .par_iter()
        .map(|x| porosity::hermeticity_at(&space, x, &grid, args.budget))
        .collect::<Result<Vec<_>, _>>()?;
    let mut c = CsvReport::new(sink(&args.common.out)?, &["x", "H", "p_s"])?;
    for r in &reps {
        c.row([
            r.point.to_string(),
            fmt_f64(r.h_estimate),
            fmt_f64(r.p_s_estimate),
        ])?;
    }
    c.finish()?.flush()?;
    Ok(true)
}

fn estimate_h(space: &MetricSpace) -> Res<f64> {
    let pts = sweep_points(space, 10)?;
    let grid = porosity::default_r_grid(space)?;
    match porosity::hermeticity_of_space(space, &pts, &grid, porosity::DEFAULT_BUDGET)? {
        SpaceHermeticity::Estimate { h, .. } => Ok(h),
        SpaceHermeticity::VacuouslyHermetic => {
            Err(usage("the space has no non-isolated sample points"))
        }
    }
}

fn verify(args: &VerifyArgs) -> Res<bool> {
    let space = load_space(&args.common.space)?;
    if args.theorem == Theorem::Biglip && !(args.b > 2.0) {
        return Err(Box::new(Error::Domain(format!(
            "hypothesis b > 2 fails: b = {}",
            args.b
        ))));
    }
    let xs = test_points(&space, args.points, args.seed)?;
    let finest = args.a.powi(-(args.nmax as i32 + 1));
    let f = tw_on_space(space.clone(), args.a, args.b, 0, 1e-8 * finest)?;
    let records: Vec<Vec<WitnessRecord>> = match args.theorem {
        Theorem::Biglip => xs
            .par_iter()
            .map(|x| theorems::big_lip_witnesses(&f, x, 1..=args.nmax))
            .collect::<Result<_, _>>()?,
        Theorem::Littlelip => {
            let h = match args.h {
                Some(h) => h,
                None => estimate_h(&space)?,
            };
            let lambda = args.lambda.unwrap_or(0.99 * h);
            let rs = lipderiv::tw_schedule(args.a, 1, args.nmax);
            xs.par_iter()
                .map(|x| theorems::little_lip_bounds(&f, x, &rs, lambda, h, args.budget))
                .collect::<Result<_, _>>()?
        }
    };
    let records: Vec<WitnessRecord> = records.into_iter().flatten().collect();
    let cols = [
        "x",
        "n",
        "r",
        "u_n",
        "rho_n",
        "ratio",
        "guaranteed_bound",
        "case_tag",
        "pass",
    ];
    let mut c = CsvReport::new(sink(&args.common.out)?, &cols)?;
    for r in &records {
        c.row([
            r.x.to_string(),
            r.n.to_string(),
            r.r.map(fmt_f64).unwrap_or_default(),
            r.u_n.to_string(),
            fmt_f64(r.rho_n),
            fmt_f64(r.ratio),
            fmt_f64(r.guaranteed_bound),
            r.case_tag.to_string(),
            r.pass.to_string(),
        ])?;
    }
    c.finish()?.flush()?;
    let summary = theorems::summarize(&records);
    let text = json_string(&summary)?;
    match &args.summary {
        Some(p) => fs::write(p, text)?,
        None => eprint!("{text}"),
    }
    Ok(summary.passed == summary.tested)
}

fn synth(args: &SynthArgs) -> Res<bool> {
    let space = load_space(&args.common.space)?;
    let region: RegionSpec = args.g.parse()?;
    let (a, b) = match (args.a, args.b) {
        (Some(a), Some(b)) => (a, b),
        (None, None) => {
            let p = theorems::choose_params(estimate_h(&space)?)?;
            (p.a, p.b)
        }
        _ => return Err(usage("give both --a and --b or neither")),
    };
    let sf = synthesize(space.clone(), region, a, b)?;
    if !args.verify {
        let v = json!({ "a": a, "b": b, "alpha": sf.alpha(), "G": sf.region().to_string() });
        emit(&args.common.out, &json_string(&v)?)?;
        return Ok(true);
    }
    let mut opts = VerifyOptions::for_function(&sf);
    opts.threshold = args.threshold;
    if let Some(c) = args.collar {
        opts.collar = c;
    }
    let samples = region_samples(&space, sf.region(), args.samples, opts.collar)?;
    let rep = verify_prescribed_sets(&sf, &samples, &opts)?;
    emit(&args.common.out, &json_string(&rep)?)?;
    Ok(rep.passed)
}

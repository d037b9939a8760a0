use std::fmt::{Display, Write as _};
use std::fs;
use std::io::Write as _;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use bbs_core::acceptance::{self, Criterion};
use bbs_core::analysis::{
    current_sequence, default_reach, invariance_test, reconstruct_from_current, soliton_sizes, stationary_current,
};
use bbs_core::closedform::{current_kernel, iid_constants, markov_constants, RateFamily, RateFunction};
use bbs_core::config::KvConfig;
use bbs_core::continuum::{invariance_experiment, scaling_experiment_dt, ContinuumReport};
use bbs_core::gen::{perron_condition, SampleKind, SampleSpec};
use bbs_core::rng::replica_rng;
use bbs_core::stats::{autocorrelation, mean, variance};
use bbs_core::tagged::{
    first_particle_after, fifo_formula, lifo_passage, ring_window, stationary_window, tagged_stats, TagModel,
    TaggedTrace,
};
use bbs_core::{evolve, Boundary, ParticleWindow};
use rayon::prelude::*;

use crate::Common;

/// Config lookups that remember every value they hand out, defaults included.
struct Cfg {
    src: KvConfig,
    used: KvConfig,
}

impl Cfg {
    fn get<T: FromStr + Display>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let v = self.src.get_or(key, default)?;
        self.used.set(key, &v);
        Ok(v)
    }

    fn req<T: FromStr + Display>(&mut self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let v: T = self.src.require(key)?;
        self.used.set(key, &v);
        Ok(v)
    }

    fn opt_str(&mut self, key: &str) -> Option<String> {
        let v = self.src.get_str(key).map(str::to_string);
        if let Some(v) = &v {
            self.used.set(key, v);
        }
        v
    }

    fn list<T: FromStr + Display + Clone>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        let v = self.src.get_list(key)?.unwrap_or_else(|| default.to_vec());
        let text: Vec<String> = v.iter().map(ToString::to_string).collect();
        self.used.set(key, text.join(","));
        Ok(v)
    }

    fn spec(&mut self, default_n: usize) -> Result<SampleSpec> {
        if self.src.get_str("n").is_none() {
            self.src.set("n", default_n);
        }
        let spec = SampleSpec::from_config(&self.src)?;
        self.used.merge(&spec.to_config());
        Ok(spec)
    }
}

struct Output {
    report: String,
    csv: Option<String>,
    extra: Vec<(String, String)>,
    ok: bool,
}

impl Output {
    fn report(report: String) -> Self {
        Output { report, csv: None, extra: Vec::new(), ok: true }
    }

    fn with_csv(report: String, csv: String) -> Self {
        Output { report, csv: Some(csv), extra: Vec::new(), ok: true }
    }
}

pub fn run(name: &str, params: &[String], common: &Common) -> Result<bool> {
    let mut src = KvConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        src.merge(&KvConfig::parse(&text)?);
    }
    src.merge(&KvConfig::parse(&params.join("\n"))?);
    if let Ok(s) = std::env::var("BBS_SEED") {
        let seed: u64 = s.parse().with_context(|| format!("BBS_SEED={s} is not a u64"))?;
        src.set("seed", seed);
    }
    if let Some(seed) = common.seed {
        src.set("seed", seed);
    }
    if let Some(r) = common.replicas {
        src.set("replicas", r);
    }
    if let Some(a) = common.alpha {
        src.set("alpha", a);
    }
    if let Some(t) = common.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut cfg = Cfg { src, used: KvConfig::default() };
    cfg.used.set("command", name);

    let out = match name {
        "evolve" => cmd_evolve(&mut cfg)?,
        "sample" => cmd_sample(&mut cfg)?,
        "current" => cmd_current(&mut cfg)?,
        "tagged" => cmd_tagged(&mut cfg)?,
        "invariance-test" => cmd_invariance(&mut cfg)?,
        "reconstruct" => cmd_reconstruct(&mut cfg)?,
        "rate-function" => cmd_rate(&mut cfg)?,
        "constants" => cmd_constants(&mut cfg)?,
        "scaling" => cmd_scaling(&mut cfg)?,
        "selftest" => cmd_selftest(&mut cfg)?,
        other => bail!("unknown command {other}"),
    };

    // a seed from BBS_SEED is allowed to go unused
    let unused: Vec<&String> =
        cfg.src.entries.keys().filter(|k| *k != "seed" && !cfg.used.entries.contains_key(*k)).collect();
    if !unused.is_empty() {
        let keys: Vec<&str> = unused.iter().map(|k| k.as_str()).collect();
        bail!("unknown parameter(s) for {name}: {}", keys.join(", "));
    }

    let mut header = String::new();
    for line in cfg.used.to_string().lines() {
        writeln!(header, "# {line}")?;
    }
    let report: String = out.report.lines().map(|l| format!("# {l}\n")).collect();
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(format!("{name}.report.txt")), format!("{}{}", cfg.used, out.report))?;
            if let Some(csv) = &out.csv {
                fs::write(dir.join(format!("{name}.csv")), csv)?;
            }
            for (file, body) in &out.extra {
                fs::write(dir.join(file), body)?;
            }
            emit(&[&header, &report])?;
        }
        None => emit(&[&header, &report, out.csv.as_deref().unwrap_or("")])?,
    }
    Ok(out.ok)
}

/// Writes to stdout; a reader that hangs up early is not an error.
fn emit(parts: &[&str]) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    for p in parts {
        match stdout.write_all(p.as_bytes()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
            r => r?,
        }
    }
    match stdout.flush() {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

const TWO_SOLITON: &str = "0011100100000000000000000000";

fn cmd_evolve(cfg: &mut Cfg) -> Result<Output> {
    let steps: usize = cfg.get("steps", 10)?;
    let w = match (cfg.opt_str("fixture"), cfg.opt_str("bits")) {
        (Some(f), _) if f == "two-soliton" => ParticleWindow::from_bits(0, TWO_SOLITON, Boundary::Vacuum, Boundary::Vacuum)?,
        (Some(f), _) => bail!("unknown fixture '{f}' (known: two-soliton)"),
        (None, Some(bits)) => {
            let origin: i64 = cfg.get("origin", 0)?;
            let boundary: String = cfg.get("boundary", "vacuum".to_string())?;
            let b: Boundary = boundary.parse()?;
            ParticleWindow::from_bits(origin, &bits, b, b)?
        }
        (None, None) => {
            let spec = cfg.spec(60)?;
            let (w, _) = spec.sample()?;
            ParticleWindow::finite(0, w.cells)
        }
    };
    let trace = evolve(&w, steps)?;
    let first = soliton_sizes(&trace.frames[0]);
    let last = soliton_sizes(&trace.frames[steps]);
    let mut r = String::new();
    writeln!(r, "particles={}", w.particles())?;
    writeln!(r, "solitons_initial={:?}", first.sizes)?;
    writeln!(r, "solitons_final={:?}", last.sizes)?;
    for (j, f) in trace.frames.iter().enumerate() {
        writeln!(r, "frame {j:>3} {}", f.bits())?;
    }
    Ok(Output::with_csv(r, trace.to_csv()))
}

fn cmd_sample(cfg: &mut Cfg) -> Result<Output> {
    let spec = cfg.spec(1000)?;
    let (w, c) = spec.sample()?;
    let census = soliton_sizes(&w);
    let mut r = String::new();
    writeln!(r, "particles={}", w.particles())?;
    writeln!(r, "density={:.6}", w.particles() as f64 / w.len().max(1) as f64)?;
    writeln!(r, "largest_soliton={}", census.max_size())?;
    let mut csv = String::from("site,eta,w\n");
    for (i, &e) in w.cells.iter().enumerate() {
        writeln!(csv, "{},{},{}", w.origin + i as i64, e, c.w[i + 1])?;
    }
    let mut out = Output::with_csv(r, csv);
    out.extra.push(("sample.window".into(), w.to_text()));
    Ok(out)
}

fn cmd_current(cfg: &mut Cfg) -> Result<Output> {
    let given_n = cfg.src.get_str("n").is_some();
    let spec = cfg.spec(1)?;
    if !given_n {
        cfg.src.entries.remove("n");
        cfg.used.entries.remove("n");
    }
    let k: usize = cfg.get("k", 1000)?;
    if k == 0 {
        bail!("k must be positive");
    }
    let reach: usize = cfg.get("reach", default_reach(&spec.kind))?;
    let rec = stationary_current(&spec.kind, k, reach, spec.seed)?;
    let x: Vec<f64> = rec.w0[..k].iter().map(|&v| v as f64).collect();
    let mut r = String::new();
    writeln!(r, "mean={:.6}", mean(&x))?;
    writeln!(r, "variance={:.6}", variance(&x))?;
    writeln!(r, "lag1_autocorrelation={:.6}", autocorrelation(&x, 1))?;
    match &spec.kind {
        SampleKind::IidBernoulli { p } => {
            let c = iid_constants(*p)?;
            writeln!(r, "mean_theory={:.6}\nsigma2_theory={:.6}", c.mu, c.sigma2)?;
        }
        SampleKind::MarkovConfig { p0, p1 } => {
            let c = markov_constants(*p0, *p1)?;
            writeln!(r, "mean_theory={:.6}\nsigma2_theory={:.6}", c.mu, c.sigma2)?;
        }
        _ => {}
    }
    let mut csv = String::from("k,w0,C,mean\n");
    let mut acc = 0i64;
    for (j, &w) in rec.w0[..k].iter().enumerate() {
        acc += w;
        writeln!(csv, "{j},{w},{acc},{:.6}", acc as f64 / (j + 1) as f64)?;
    }
    Ok(Output::with_csv(r, csv))
}

fn cmd_tagged(cfg: &mut Cfg) -> Result<Output> {
    let seed: u64 = cfg.get("seed", 1)?;
    let kind: String = cfg.get("kind", "iid".to_string())?;
    let k: usize = cfg.get("k", 500)?;
    let replicas: usize = cfg.get("replicas", 100)?;
    let (model, ring) = match kind.as_str() {
        "iid" => (TagModel::Iid { p: cfg.get("p", 0.2)? }, Some(cfg.get("N", (8 * k).max(2000))?)),
        "markov" => (TagModel::Markov { p0: cfg.req("p0")?, p1: cfg.req("p1")? }, None),
        "ksym" | "k-symmetric" => (TagModel::KSymmetric { k: cfg.req("K")? }, None),
        other => bail!("unknown kind '{other}' (iid, markov, ksym)"),
    };
    let margin = match model {
        TagModel::Iid { p } => default_reach(&SampleKind::IidBernoulli { p }),
        TagModel::Markov { p0, p1 } => default_reach(&SampleKind::MarkovConfig { p0, p1 }),
        TagModel::KSymmetric { k } => 2 * k + 2,
    } * k
        + 64;
    let runs: Vec<(TaggedTrace, TaggedTrace)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> bbs_core::Result<_> {
            let mut rng = replica_rng(seed, r);
            let (w, entry) = match (model, ring) {
                (TagModel::Iid { p }, Some(n)) => (ring_window(p, -((n / 2) as i64), n, &mut rng)?, 0),
                _ => stationary_window(model, margin, margin, &mut rng)?,
            };
            let tag = first_particle_after(&w, 0)?;
            Ok((fifo_formula(&w, k, 0, entry)?, lifo_passage(&w, k, tag, entry)?))
        })
        .collect::<bbs_core::Result<_>>()?;
    let (fifo, lifo): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let mut r = String::new();
    for (name, traces) in [("fifo", &fifo), ("lifo", &lifo)] {
        let rep = tagged_stats(traces, model)?;
        for line in rep.to_text().lines() {
            writeln!(r, "{name}.{line}")?;
        }
    }
    let mut csv = String::from("replica,fifo_x0,fifo_xk,lifo_x0,lifo_xk\n");
    for (i, (f, l)) in fifo.iter().zip(&lifo).enumerate() {
        writeln!(csv, "{i},{},{},{},{}", f.x[0], f.x[k], l.x[0], l.x[k])?;
    }
    Ok(Output::with_csv(r, csv))
}

fn cmd_invariance(cfg: &mut Cfg) -> Result<Output> {
    let spec = cfg.spec(200_000)?;
    let alpha: f64 = cfg.get("alpha", 0.01)?;
    let max_len: usize = cfg.get("max_len", 5)?;
    let gap: usize = cfg.get("gap", 32)?;
    let rep = invariance_test(&spec.kind, spec.n, spec.seed, max_len, gap)?;
    let mut csv = String::from("comparison,len,stat,df,p_value\n");
    for l in &rep.lines {
        writeln!(csv, "{},{},{:.6},{},{:.6}", l.comparison, l.len, l.result.stat, l.result.df, l.result.p_value)?;
    }
    Ok(Output::with_csv(rep.to_text(alpha), csv))
}

fn cmd_reconstruct(cfg: &mut Cfg) -> Result<Output> {
    let k: usize = cfg.get("k", 200)?;
    let depth: usize = cfg.get("depth", 40)?;
    let w = match cfg.opt_str("bits") {
        Some(bits) => {
            let origin: i64 = cfg.get("origin", 1 - bits.len() as i64)?;
            let boundary: String = cfg.get("boundary", "vacuum".to_string())?;
            let b: Boundary = boundary.parse()?;
            ParticleWindow::from_bits(origin, &bits, b, b)?
        }
        None => {
            let spec = cfg.spec(400)?;
            let (w, _) = spec.sample()?;
            ParticleWindow::finite(1 - w.len() as i64, w.cells)
        }
    };
    let rec = current_sequence(&w, k)?;
    let recon = reconstruct_from_current(&rec, depth)?;
    let truth = evolve(&w, k)?;
    let mut mismatches = 0usize;
    for (d, col) in recon.eta.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            if let (Some(v), Some(f)) = (v, truth.frames.get(j)) {
                mismatches += usize::from(f.get(-(d as i64)).unwrap_or(0) != *v);
            }
        }
    }
    let cells: usize = recon.eta.iter().map(Vec::len).sum();
    let mut r = String::new();
    writeln!(r, "determined={}\ncells={cells}\nmismatches={mismatches}", recon.determined())?;
    writeln!(r, "zeros={}\nodd_gaps={}", rec.zeros().len(), rec.odd_gap_count)?;
    writeln!(r, "ambiguous_columns={:?}\nno_odd_gap_columns={:?}", recon.ambiguous, recon.no_odd_gap)?;
    let mut out = Output::with_csv(r, recon.to_csv());
    out.extra.push(("current.csv".into(), rec.to_csv()));
    Ok(out)
}

fn rate_family(cfg: &mut Cfg) -> Result<RateFamily> {
    let family: String = cfg.get("family", "iid".to_string())?;
    Ok(match family.as_str() {
        "iid" => RateFamily::IidCurrent { p: cfg.get("p", 0.2)? },
        "markov" => RateFamily::MarkovCurrent { p0: cfg.req("p0")?, p1: cfg.req("p1")? },
        "bounded" => RateFamily::BoundedSolitonCurrent { p: cfg.get("p", 0.5)?, k: cfg.req("K")? },
        "lifo" => RateFamily::LifoTagged { p: cfg.get("p", 0.2)? },
        other => bail!("unknown family '{other}' (iid, markov, bounded, lifo)"),
    })
}

fn cmd_rate(cfg: &mut Cfg) -> Result<Output> {
    let rf = RateFunction::new(rate_family(cfg)?)?;
    let mu = rf.mean();
    let from: f64 = cfg.get("from", 0.0)?;
    let to: f64 = cfg.get("to", (3.0 * mu * 1e6).round() / 1e6)?;
    let points: usize = cfg.get("points", 61)?;
    if points < 2 || !(to > from) {
        bail!("need points >= 2 and to > from");
    }
    let mut csv = String::from("x,rate\n");
    for i in 0..points {
        let x = from + (to - from) * i as f64 / (points - 1) as f64;
        writeln!(csv, "{x:.6},{:.9}", rf.rate(x))?;
    }
    Ok(Output::with_csv(format!("mean={mu:.6}\n"), csv))
}

fn cmd_constants(cfg: &mut Cfg) -> Result<Output> {
    let family: String = cfg.get("family", "iid".to_string())?;
    let mut r = String::new();
    match family.as_str() {
        "iid" => {
            let c = iid_constants(cfg.get("p", 0.2)?)?;
            writeln!(r, "mu={:.12}\nsigma2={:.12}\nspeed={:.12}\nsigma_l2={:.12}", c.mu, c.sigma2, c.v, c.sigma_l2)?;
            for x in 0..5 {
                writeln!(r, "pi_{x}={:.12}", c.pi(x))?;
            }
            for m in [1, 3, 5] {
                writeln!(r, "lifo_increment_{m}={:.12}", c.lifo_increment_pmf(m))?;
            }
        }
        "markov" => {
            let c = markov_constants(cfg.req("p0")?, cfg.req("p1")?)?;
            writeln!(r, "rho={:.12}\nq0={:.12}\nq1={:.12}", c.rho, c.q0, c.q1)?;
            writeln!(r, "mu={:.12}\nsigma2={:.12}\nvar_w0={:.12}\ncov1={:.12}", c.mu, c.sigma2, c.var_w0, c.cov1)?;
            writeln!(r, "lifo_speed={:.12}", c.lifo_speed)?;
            for k in 1..=6 {
                writeln!(r, "autocov_{k}={:.12}", c.autocov(k))?;
            }
        }
        "bounded" => {
            let p: f64 = cfg.get("p", 0.5)?;
            let k: usize = cfg.req("K")?;
            let (eig, chain) = perron_condition(p, k)?;
            let cur = current_kernel(&chain)?;
            writeln!(r, "lambda={:.12}\nresidual={:.3e}", eig.lambda, eig.residual)?;
            writeln!(r, "h={}", join(&eig.h))?;
            for i in 0..chain.states() {
                writeln!(r, "carrier_row_{i}={}", join(chain.transition.row(i)))?;
            }
            for i in 0..cur.n {
                writeln!(r, "current_row_{i}={}", join(cur.row(i)))?;
            }
        }
        other => bail!("unknown family '{other}' (iid, markov, bounded)"),
    }
    Ok(Output::report(r))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(",")
}

fn ks_csv(reports: &[&ContinuumReport]) -> String {
    let mut csv = String::from("label,stat,p_value\n");
    for r in reports {
        for l in &r.lines {
            csv.push_str(&format!("{},{:.6},{:.6}\n", l.label, l.result.stat, l.result.p_value));
        }
    }
    csv
}

fn cmd_scaling(cfg: &mut Cfg) -> Result<Output> {
    let seed: u64 = cfg.get("seed", 1)?;
    let c: f64 = cfg.get("c", 1.0)?;
    let dt: f64 = cfg.get("dt", 1.0 / 512.0)?;
    let horizon: f64 = cfg.get("horizon", 8.0)?;
    let ns: Vec<u64> = cfg.list("N", &[64, 128])?;
    let ts: Vec<f64> = cfg.list("t", &[-2.0, -1.0, 1.0, 2.0])?;
    let replicas: usize = cfg.get("replicas", 2000)?;
    let alpha: f64 = cfg.get("alpha", 0.01)?;
    let inv = invariance_experiment(c, dt, horizon, &ts, replicas, seed)?;
    let sc = scaling_experiment_dt(c, &ns, &ts, replicas, seed ^ 1, dt)?;
    let report = format!("{}{}", inv.to_text(alpha), sc.to_text(alpha));
    Ok(Output::with_csv(report, ks_csv(&[&inv, &sc])))
}

fn cmd_selftest(cfg: &mut Cfg) -> Result<Output> {
    let seed: u64 = cfg.get("seed", acceptance::SEED)?;
    let criteria: Vec<Criterion> = acceptance::selftest(seed, |c| eprintln!("{}", c.line()));
    let ok = criteria.iter().all(Criterion::pass_unwaived);
    let mut out = Output::report(acceptance::report_text(&criteria));
    out.ok = ok;
    Ok(out)
}

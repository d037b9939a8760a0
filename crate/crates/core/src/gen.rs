//! Seeded samplers for the invariant random configurations and their carriers.
//!
//! Two-sided stationary chains are realized on a finite window as one-sided
//! chains started from the stationary law. Samples occupy sites `1 ..= n`; the
//! accompanying carrier is stored on sites `0 ..= n`.

use rand::Rng;

use crate::carrier::{local_time, wupdate, CarrierWindow};
use crate::config::KvConfig;
use crate::error::{BbsError, Result};
use crate::linalg::{perron_right, stationary, Matrix};
use crate::rng::{seeded, BbsRng};
use crate::window::{Boundary, ParticleWindow};

/// Finite Markov chain with states labelled `0 .. n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub transition: Matrix,
    pub stationary: Vec<f64>,
}

impl ChainSpec {
    pub fn new(transition: Matrix) -> Result<Self> {
        let stationary = stationary(&transition)?;
        let c = ChainSpec { transition, stationary };
        c.validate()?;
        Ok(c)
    }

    pub fn states(&self) -> usize {
        self.transition.n
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.transition;
        if p.a.iter().any(|&v| !(v >= 0.0)) {
            return Err(BbsError::SpecRejected("negative or NaN transition entry".into()));
        }
        for (i, s) in p.row_sums().iter().enumerate() {
            if (s - 1.0).abs() > 1e-12 {
                return Err(BbsError::SpecRejected(format!("row {i} sums to {s}")));
            }
        }
        let back = p.vec_mul(&self.stationary);
        let defect = back.iter().zip(&self.stationary).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(BbsError::SpecRejected(format!("stationary defect {defect:e}")));
        }
        Ok(())
    }

    /// Cumulative rows for inversion sampling.
    fn cumulative(&self) -> Vec<Vec<f64>> {
        let n = self.states();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                self.transition
                    .row(i)
                    .iter()
                    .map(|v| {
                        acc += v;
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Stationary path of `len` states.
    pub fn sample_path(&self, len: usize, rng: &mut BbsRng) -> Vec<usize> {
        let cum = self.cumulative();
        let mut acc = 0.0;
        let init: Vec<f64> = self
            .stationary
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let draw = |c: &[f64], u: f64| c.iter().position(|&v| u < v).unwrap_or(c.len() - 1);
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut x = draw(&init, rng.random::<f64>());
        out.push(x);
        for _ in 1..len {
            x = draw(&cum[x], rng.random::<f64>());
            out.push(x);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    /// Strictly positive, `h[0] = 1`.
    pub h: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleKind {
    IidBernoulli { p: f64 },
    MarkovConfig { p0: f64, p1: f64 },
    BoundedSoliton { p: f64, k: usize },
    KBoundedSymmetric { k: usize, chain: Option<ChainSpec> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub kind: SampleKind,
    pub n: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(BbsError::Domain("window length n must be at least 1".into()));
        }
        match &self.kind {
            SampleKind::IidBernoulli { p } => check_iid(*p),
            SampleKind::MarkovConfig { p0, p1 } => check_markov(*p0, *p1),
            SampleKind::BoundedSoliton { p, .. } => check_open_unit("p", *p),
            SampleKind::KBoundedSymmetric { k, chain } => match chain {
                Some(c) => check_symmetric(c, *k),
                None => Ok(()),
            },
        }
    }

    /// Reads `kind`, `p`, `p0`, `p1`, `K`, `n`, `seed`, and for the symmetric
    /// family an optional `up` list of up-probabilities for states `1 .. K-1`.
    pub fn from_config(c: &KvConfig) -> Result<Self> {
        let n = c.get_or("n", 10_000usize)?;
        let seed = c.get_or("seed", 1u64)?;
        let kind = match c.get_str("kind").unwrap_or("iid") {
            "iid" => SampleKind::IidBernoulli { p: c.get_or("p", 0.2)? },
            "markov" => SampleKind::MarkovConfig { p0: c.require("p0")?, p1: c.require("p1")? },
            "bounded" | "bounded-soliton" => {
                SampleKind::BoundedSoliton { p: c.get_or("p", 0.5)?, k: c.require("K")? }
            }
            "ksym" | "k-symmetric" => {
                let k: usize = c.require("K")?;
                let chain = match c.get_list::<f64>("up")? {
                    Some(up) => Some(birth_death_chain(k, &up)?),
                    None => None,
                };
                SampleKind::KBoundedSymmetric { k, chain }
            }
            other => return Err(BbsError::Parse(format!("unknown sample kind '{other}'"))),
        };
        let s = SampleSpec { kind, n, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn to_config(&self) -> KvConfig {
        let mut c = KvConfig::default();
        c.set("n", self.n);
        c.set("seed", self.seed);
        match &self.kind {
            SampleKind::IidBernoulli { p } => {
                c.set("kind", "iid");
                c.set("p", p);
            }
            SampleKind::MarkovConfig { p0, p1 } => {
                c.set("kind", "markov");
                c.set("p0", p0);
                c.set("p1", p1);
            }
            SampleKind::BoundedSoliton { p, k } => {
                c.set("kind", "bounded");
                c.set("p", p);
                c.set("K", k);
            }
            SampleKind::KBoundedSymmetric { k, chain } => {
                c.set("kind", "ksym");
                c.set("K", k);
                if let Some(ch) = chain {
                    let up: Vec<String> =
                        (1..*k).map(|x| ch.transition.get(x, x + 1).to_string()).collect();
                    c.set("up", up.join(","));
                }
            }
        }
        c
    }

    /// Configuration and its exact stationary carrier.
    pub fn sample(&self) -> Result<(ParticleWindow, CarrierWindow)> {
        self.validate()?;
        let mut rng = seeded(self.seed);
        match &self.kind {
            SampleKind::IidBernoulli { p } => Ok(stationary_iid(*p, self.n, &mut rng)),
            SampleKind::MarkovConfig { p0, p1 } => Ok(stationary_markov(*p0, *p1, self.n, &mut rng)),
            SampleKind::BoundedSoliton { p, k } => sample_bounded_soliton(*p, *k, self.n, self.seed),
            SampleKind::KBoundedSymmetric { k, chain } => {
                let chain = match chain {
                    Some(c) => c.clone(),
                    None => default_symmetric_chain(*k)?,
                };
                sample_k_symmetric(&chain, *k, self.n, self.seed)
            }
        }
    }
}

fn check_open_unit(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(BbsError::Domain(format!("{name}={p} must lie in (0,1)")))
    }
}

fn check_iid(p: f64) -> Result<()> {
    if (0.0..0.5).contains(&p) {
        Ok(())
    } else {
        Err(BbsError::Domain(format!("p={p} must lie in [0, 1/2)")))
    }
}

fn check_markov(p0: f64, p1: f64) -> Result<()> {
    check_open_unit("p0", p0)?;
    if !(0.0..1.0).contains(&p1) {
        return Err(BbsError::Domain(format!("p1={p1} must lie in [0,1)")));
    }
    if p0 + p1 >= 1.0 {
        return Err(BbsError::Supercritical(p0 + p1));
    }
    Ok(())
}

/// Writes i.i.d. Bernoulli(p) cells.
pub fn fill_iid(rng: &mut BbsRng, p: f64, cells: &mut [u8]) {
    for c in cells.iter_mut() {
        *c = u8::from(rng.random::<f64>() < p);
    }
}

/// Writes a stationary two-state Markov configuration.
pub fn fill_markov(rng: &mut BbsRng, p0: f64, p1: f64, cells: &mut [u8]) {
    let rho = p0 / (1.0 - p1 + p0);
    let mut prev = rng.random::<f64>() < rho;
    for c in cells.iter_mut() {
        *c = u8::from(prev);
        let q = if prev { p1 } else { p0 };
        prev = rng.random::<f64>() < q;
    }
}

pub fn sample_iid(p: f64, n: usize, seed: u64) -> Result<ParticleWindow> {
    if !(0.0..1.0).contains(&p) || n == 0 {
        return Err(BbsError::Domain(format!("sample_iid needs p in [0,1) and n >= 1, got p={p}, n={n}")));
    }
    let mut cells = vec![0u8; n];
    fill_iid(&mut seeded(seed), p, &mut cells);
    Ok(ParticleWindow { origin: 1, cells, left: Boundary::Vacuum, right: Boundary::Open })
}

pub fn sample_markov(p0: f64, p1: f64, n: usize, seed: u64) -> Result<ParticleWindow> {
    check_markov(p0, p1)?;
    let mut cells = vec![0u8; n];
    fill_markov(&mut seeded(seed), p0, p1, &mut cells);
    Ok(ParticleWindow { origin: 1, cells, left: Boundary::Vacuum, right: Boundary::Open })
}

/// Carrier window for loads `w` on sites `start ..`, with the path recovered
/// as S = l - W + W_0 (site 0 must be stored) and M = S + W.
pub fn carrier_from_loads(start: i64, w: Vec<i64>) -> CarrierWindow {
    let ell = local_time(start, &w, 0);
    let w0 = w[(-start) as usize];
    let m = ell.iter().zip(&w).map(|(l, v)| l - v + w0 + v).collect();
    CarrierWindow { start, w, ell, m, i: None }
}

/// Burn-in before site 1 so that the carrier computed from an empty entry has
/// coupled with the stationary one.
fn margin(rho: f64) -> usize {
    let drift = (1.0 - 2.0 * rho).max(1e-3);
    (200.0 / (drift * drift)).ceil() as usize + 64
}

fn with_burn_in(fill: impl FnOnce(&mut [u8]), rho: f64, n: usize) -> (ParticleWindow, CarrierWindow) {
    let pre = margin(rho);
    let mut cells = vec![0u8; pre + n];
    fill(&mut cells);
    let mut w = 0i64;
    for &c in &cells[..pre] {
        w = wupdate(w, c);
    }
    let mut loads = Vec::with_capacity(n + 1);
    loads.push(w);
    for &c in &cells[pre..] {
        w = wupdate(w, c);
        loads.push(w);
    }
    let window = ParticleWindow {
        origin: 1,
        cells: cells[pre..].to_vec(),
        left: Boundary::Vacuum,
        right: Boundary::Open,
    };
    (window, carrier_from_loads(0, loads))
}

/// i.i.d. sample on `1 ..= n` with its stationary carrier on `0 ..= n`.
pub fn stationary_iid(p: f64, n: usize, rng: &mut BbsRng) -> (ParticleWindow, CarrierWindow) {
    with_burn_in(|c| fill_iid(rng, p, c), p, n)
}

/// Markov sample on `1 ..= n` with its stationary carrier on `0 ..= n`.
pub fn stationary_markov(p0: f64, p1: f64, n: usize, rng: &mut BbsRng) -> (ParticleWindow, CarrierWindow) {
    let rho = p0 / (1.0 - p1 + p0);
    with_burn_in(|c| fill_markov(rng, p0, p1, c), rho, n)
}

/// Restriction of the reflected walk kernel to `{0 .. K}`.
pub fn restricted_kernel(p: f64, k: usize) -> Matrix {
    let mut m = Matrix::zeros(k + 1);
    m.set(0, 0, 1.0 - p);
    for x in 0..=k {
        if x < k {
            m.set(x, x + 1, p);
        }
        if x > 0 {
            m.set(x, x - 1, 1.0 - p);
        }
    }
    m
}

/// Perron eigenpair of the restricted kernel and the h-transformed chain
/// P~(x,y) = P(x,y) h(y) / (lambda h(x)) with stationary law proportional to h^2 pi.
pub fn perron_condition(p: f64, k: usize) -> Result<(EigenResult, ChainSpec)> {
    check_open_unit("p", p)?;
    let pk = restricted_kernel(p, k);
    let e = perron_right(&pk, 1e-13, 1_000_000)?;
    let n = k + 1;
    let mut pt = Matrix::zeros(n);
    for x in 0..n {
        for y in 0..n {
            pt.set(x, y, pk.get(x, y) * e.v[y] / (e.lambda * e.v[x]));
        }
        // exact normalization against rounding
        let s: f64 = pt.row(x).iter().sum();
        for y in 0..n {
            pt.set(x, y, pt.get(x, y) / s);
        }
    }
    let r = p / (1.0 - p);
    let mut pi: Vec<f64> = (0..n).map(|x| e.v[x] * e.v[x] * r.powi(x as i32)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    for x in 0..n {
        for y in 0..n {
            let d = (pi[x] * pt.get(x, y) - pi[y] * pt.get(y, x)).abs();
            if d > 1e-12 {
                return Err(BbsError::SpecRejected(format!("detailed balance fails at ({x},{y}): {d:e}")));
            }
        }
    }
    let chain = ChainSpec { transition: pt, stationary: pi };
    chain.validate()?;
    Ok((EigenResult { lambda: e.lambda, h: e.v, residual: e.residual }, chain))
}

fn decode_up_steps(w: &[i64]) -> Vec<u8> {
    w.windows(2).map(|p| u8::from(p[1] == p[0] + 1)).collect()
}

fn sample_carrier_chain(chain: &ChainSpec, n: usize, seed: u64) -> (ParticleWindow, CarrierWindow) {
    let mut rng = seeded(seed);
    let w: Vec<i64> = chain.sample_path(n + 1, &mut rng).into_iter().map(|x| x as i64).collect();
    let cells = decode_up_steps(&w);
    let window = ParticleWindow { origin: 1, cells, left: Boundary::Vacuum, right: Boundary::Open };
    (window, carrier_from_loads(0, w))
}

/// Stationary conditioned carrier on `{0 .. K}` and the configuration read off
/// its up-steps.
pub fn sample_bounded_soliton(p: f64, k: usize, n: usize, seed: u64) -> Result<(ParticleWindow, CarrierWindow)> {
    let (_, chain) = perron_condition(p, k)?;
    Ok(sample_carrier_chain(&chain, n, seed))
}

/// Birth-death carrier chain on `{0 .. K}` moving up from 0 surely, down from
/// K surely, and up with probability `up[x-1]` from interior state x.
pub fn birth_death_chain(k: usize, up: &[f64]) -> Result<ChainSpec> {
    if k == 0 {
        return ChainSpec::new(Matrix::identity(1));
    }
    if up.len() != k.saturating_sub(1) {
        return Err(BbsError::SpecRejected(format!(
            "need {} interior up-probabilities for K={k}, got {}",
            k - 1,
            up.len()
        )));
    }
    let mut m = Matrix::zeros(k + 1);
    m.set(0, 1, 1.0);
    m.set(k, k - 1, 1.0);
    for x in 1..k {
        let u = up[x - 1];
        if !(u > 0.0 && u < 1.0) {
            return Err(BbsError::SpecRejected(format!("up-probability {u} at state {x} must lie in (0,1)")));
        }
        m.set(x, x + 1, u);
        m.set(x, x - 1, 1.0 - u);
    }
    ChainSpec::new(m)
}

/// Reflecting walk with up-probability one half in the interior.
pub fn default_symmetric_chain(k: usize) -> Result<ChainSpec> {
    birth_death_chain(k, &vec![0.5; k.saturating_sub(1)])
}

/// Checks that the chain is a carrier chain on `{0 .. K}` with W =d K - W.
pub fn check_symmetric(chain: &ChainSpec, k: usize) -> Result<()> {
    chain.validate()?;
    let n = chain.states();
    if n != k + 1 {
        return Err(BbsError::SpecRejected(format!("chain has {n} states, expected {}", k + 1)));
    }
    let p = &chain.transition;
    for x in 0..n {
        for y in 0..n {
            let v = p.get(x, y);
            let carrier_step = x.abs_diff(y) == 1 || (x == 0 && y == 0);
            if v > 0.0 && !carrier_step {
                return Err(BbsError::SpecRejected(format!("transition {x}->{y} is not a carrier step")));
            }
            if (v - p.get(k - x, k - y)).abs() > 1e-12 {
                return Err(BbsError::SpecRejected(format!("transition {x}->{y} breaks the K - W symmetry")));
            }
        }
        if (chain.stationary[x] - chain.stationary[k - x]).abs() > 1e-10 {
            return Err(BbsError::SpecRejected("stationary law is not symmetric".into()));
        }
    }
    // irreducible: a birth-death chain with both neighbours reachable
    for x in 0..k {
        if p.get(x, x + 1) <= 0.0 || p.get(x + 1, x) <= 0.0 {
            return Err(BbsError::SpecRejected(format!("chain is reducible between {x} and {}", x + 1)));
        }
    }
    Ok(())
}

pub fn sample_k_symmetric(chain: &ChainSpec, k: usize, n: usize, seed: u64) -> Result<(ParticleWindow, CarrierWindow)> {
    check_symmetric(chain, k)?;
    Ok(sample_carrier_chain(chain, n, seed))
}

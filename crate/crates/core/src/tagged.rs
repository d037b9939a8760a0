//! Tagged particles under first-in-first-out and last-in-first-out carriers.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::closedform::{iid_constants, markov_constants, RateFamily, RateFunction};
use crate::error::{BbsError, Result};
use crate::evolve::{periodic_entry, step_seq};
use crate::gen::{stationary_iid, stationary_markov};
use crate::rng::BbsRng;
use crate::stats::{ks_one_sample, mean, variance, TestResult};
use crate::window::{Boundary, ParticleWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Fifo,
    Lifo,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Fifo => "fifo",
            Scheme::Lifo => "lifo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedTrace {
    pub scheme: Scheme,
    /// X_0 .. X_k.
    pub x: Vec<i64>,
}

impl TaggedTrace {
    pub fn increments(&self) -> Vec<i64> {
        self.x.windows(2).map(|p| p[1] - p[0]).collect()
    }

    pub fn displacement(&self) -> i64 {
        self.x.last().copied().unwrap_or(0) - self.x.first().copied().unwrap_or(0)
    }

    /// CSV with header `k,X`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,X\n");
        for (j, x) in self.x.iter().enumerate() {
            out.push_str(&format!("{j},{x}\n"));
        }
        out
    }
}

pub fn first_particle_after(config: &ParticleWindow, cut: i64) -> Result<i64> {
    config
        .particle_sites()
        .into_iter()
        .find(|&s| s > cut)
        .ok_or(BbsError::NoTaggedParticle)
}

fn check_left(config: &ParticleWindow) -> Result<()> {
    config.validate()?;
    if config.left == Boundary::Open {
        return Err(BbsError::CarrierUndefined("tagging needs a vacuum or periodic left boundary"));
    }
    Ok(())
}

const GHOST: u32 = 1 << 31;

fn pop(carrier: &mut VecDeque<u32>, scheme: Scheme) -> Option<u32> {
    match scheme {
        Scheme::Fifo => carrier.pop_front(),
        Scheme::Lifo => carrier.pop_back(),
    }
}

/// Identity-carrying simulation of the tagged particle at site `tag`.
///
/// On a vacuum-left window, `entry` unnamed particles sit in the carrier when
/// the first sweep enters and later sweeps enter empty. On a ring the sweep
/// enters with placeholders for the load at the seam, which are renamed after
/// the sweep to the particles the carrier holds on leaving. Ring positions
/// are unwrapped.
pub fn track(config: &ParticleWindow, k: usize, scheme: Scheme, tag: i64, entry: u32) -> Result<TaggedTrace> {
    check_left(config)?;
    if tag < config.origin || tag > config.end() || config.get(tag) != Some(1) {
        return Err(BbsError::NoTaggedParticle);
    }
    let ring = config.is_periodic();
    let mut id = 0u32;
    let mut cells: Vec<u32> = config
        .cells
        .iter()
        .map(|&c| {
            if c == 1 {
                id += 1;
                id
            } else {
                0
            }
        })
        .collect();
    let n = cells.len();
    let mut idx = (tag - config.origin) as usize;
    let tag_id = cells[idx];
    let extend = config.right == Boundary::Vacuum;
    let mut x = vec![tag];
    let mut carrier: VecDeque<u32> = VecDeque::new();
    let mut next = vec![0u32; n];
    let mut bits = vec![0u8; n];
    for step in 1..=k {
        carrier.clear();
        let ghosts = if ring {
            for (b, &c) in bits.iter_mut().zip(&cells) {
                *b = u8::from(c != 0);
            }
            periodic_entry(&bits)?
        } else if step == 1 {
            entry
        } else {
            0
        };
        carrier.extend((0..ghosts).map(|g| GHOST | g));
        for (o, &c) in next.iter_mut().zip(&cells) {
            if c != 0 {
                carrier.push_back(c);
                *o = 0;
            } else {
                *o = pop(&mut carrier, scheme).unwrap_or(0);
            }
        }
        if ring {
            let exit: Vec<u32> = carrier.iter().copied().collect();
            if exit.len() != ghosts as usize || exit.iter().any(|&e| e & GHOST != 0) {
                return Err(BbsError::Domain("ring sweep did not close".into()));
            }
            for o in next.iter_mut() {
                if *o & GHOST != 0 {
                    *o = exit[(*o & !GHOST) as usize];
                }
            }
        } else if extend {
            while let Some(d) = pop(&mut carrier, scheme) {
                next.push(d);
                cells.push(0);
                bits.push(0);
            }
        }
        let Some(new_idx) = next.iter().position(|&c| c == tag_id) else {
            return Err(BbsError::SpanExhausted { step });
        };
        let last = *x.last().expect("nonempty");
        let pos = if ring {
            let delta = (new_idx + n - idx) % n;
            if delta == 0 {
                return Err(BbsError::Domain("tagged particle did not move on the ring".into()));
            }
            last + delta as i64
        } else {
            config.origin + new_idx as i64
        };
        idx = new_idx;
        x.push(pos);
        std::mem::swap(&mut cells, &mut next);
        next.resize(cells.len(), 0);
    }
    Ok(TaggedTrace { scheme, x })
}

/// FIFO position from the current: X_k is the site of the (C_k + 1)st particle
/// right of the cut in T^k eta, where C_k counts particles carried across the
/// cut. On a ring the count runs cyclically and positions are unwrapped.
pub fn fifo_formula(config: &ParticleWindow, k: usize, cut: i64, entry: u32) -> Result<TaggedTrace> {
    check_left(config)?;
    let x0 = first_particle_after(config, cut)?;
    let ring = config.is_periodic();
    let config = &if ring {
        if cut < config.origin || cut >= config.end() {
            return Err(BbsError::InvalidWindow("cut must lie inside the ring window".into()));
        }
        config.clone()
    } else {
        config.padded(cut, cut + 1)?
    };
    let split = (cut - config.origin + 1) as usize;
    let mut cells = config.cells.clone();
    let n = cells.len() as i64;
    let total = config.particles() as u64;
    let mut next = vec![0u8; cells.len()];
    let extend = config.right == Boundary::Vacuum;
    let mut c = 0u64;
    let mut x = vec![x0];
    for step in 1..=k {
        let w_in = if ring {
            periodic_entry(&cells)?
        } else if step == 1 {
            entry
        } else {
            0
        };
        let w_cut = step_seq(&cells[..split], w_in, &mut next[..split]);
        let w_out = step_seq(&cells[split..], w_cut, &mut next[split..]);
        c += w_cut as u64;
        if extend {
            next.extend(std::iter::repeat_n(1, w_out as usize));
        }
        let (laps, rank) = if ring { (c / total, c % total) } else { (0, c) };
        let order = next[split..].iter().enumerate().map(|(i, &v)| (cut + 1 + i as i64, v));
        let wrapped = next[..split].iter().enumerate().map(|(i, &v)| (config.origin + n + i as i64, v));
        let mut seen = 0u64;
        let mut pos = None;
        let cyclic: Box<dyn Iterator<Item = (i64, u8)>> =
            if ring { Box::new(order.chain(wrapped)) } else { Box::new(order) };
        for (site, v) in cyclic {
            seen += v as u64;
            if v == 1 && seen == rank + 1 {
                pos = Some(site);
                break;
            }
        }
        match pos {
            Some(p) => x.push(p + laps as i64 * n),
            None => return Err(BbsError::SpanExhausted { step }),
        }
        std::mem::swap(&mut cells, &mut next);
        next.resize(cells.len(), 0);
    }
    Ok(TaggedTrace { scheme: Scheme::Fifo, x })
}

/// LIFO trace from first passages: a particle picked up at X is on top of the
/// stack and is dropped at the first site where the path of the current
/// configuration rises one above its value at X.
pub fn lifo_passage(config: &ParticleWindow, k: usize, tag: i64, entry: u32) -> Result<TaggedTrace> {
    check_left(config)?;
    if tag < config.origin || tag > config.end() || config.get(tag) != Some(1) {
        return Err(BbsError::NoTaggedParticle);
    }
    let ring = config.is_periodic();
    let mut cells = config.cells.clone();
    let n = cells.len();
    let extend = config.right == Boundary::Vacuum;
    let mut next = vec![0u8; n];
    let mut idx = (tag - config.origin) as usize;
    let mut x = vec![tag];
    for step in 1..=k {
        let mut h = 0i64;
        let mut j = idx;
        let mut moved = 0usize;
        loop {
            j += 1;
            moved += 1;
            if j == cells.len() {
                if ring {
                    j = 0;
                } else if extend {
                    // Vacuum beyond the window: every further site is empty.
                    j = cells.len() + (0 - h) as usize;
                    moved += (0 - h) as usize;
                    break;
                } else {
                    return Err(BbsError::SpanExhausted { step });
                }
            }
            h += if cells[j] == 1 { -1 } else { 1 };
            if h == 1 {
                break;
            }
            if moved > 2 * cells.len() {
                return Err(BbsError::Domain("no first passage on the ring".into()));
            }
        }
        let w_in = if ring {
            periodic_entry(&cells)?
        } else if step == 1 {
            entry
        } else {
            0
        };
        let w_out = step_seq(&cells, w_in, &mut next);
        if extend && !ring {
            next.extend(std::iter::repeat_n(1, w_out as usize));
        }
        idx = j;
        x.push(x.last().expect("nonempty") + moved as i64);
        std::mem::swap(&mut cells, &mut next);
        next.resize(cells.len(), 0);
    }
    Ok(TaggedTrace { scheme: Scheme::Lifo, x })
}

/// FIFO trace of the first particle at a site >= 1.
pub fn track_fifo(config: &ParticleWindow, k: usize) -> Result<TaggedTrace> {
    fifo_formula(config, k, 0, 0)
}

/// LIFO trace of the first particle at a site >= 1.
pub fn track_lifo(config: &ParticleWindow, k: usize) -> Result<TaggedTrace> {
    check_left(config)?;
    let tag = first_particle_after(config, 0)?;
    track(config, k, Scheme::Lifo, tag, 0)
}

/// Configuration model behind a set of traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TagModel {
    Iid { p: f64 },
    Markov { p0: f64, p1: f64 },
    KSymmetric { k: usize },
}

/// i.i.d. Bernoulli(p) ring on `origin .. origin + n`, which T leaves invariant.
pub fn ring_window(p: f64, origin: i64, n: usize, rng: &mut BbsRng) -> Result<ParticleWindow> {
    iid_constants(p)?;
    loop {
        let mut cells = vec![0u8; n];
        crate::gen::fill_iid(rng, p, &mut cells);
        if 2 * cells.iter().filter(|&&c| c == 1).count() < n {
            return Ok(ParticleWindow::periodic(origin, cells));
        }
    }
}

/// Stationary window on `-left ..= right` with the carrier load entering at
/// `-left`.
pub fn stationary_window(model: TagModel, left: usize, right: usize, rng: &mut BbsRng) -> Result<(ParticleWindow, u32)> {
    let n = left + right + 1;
    let (mut w, c) = match model {
        TagModel::Iid { p } => {
            iid_constants(p)?;
            stationary_iid(p, n, rng)
        }
        TagModel::Markov { p0, p1 } => {
            markov_constants(p0, p1)?;
            stationary_markov(p0, p1, n, rng)
        }
        TagModel::KSymmetric { k } => {
            let chain = crate::gen::default_symmetric_chain(k)?;
            let seed = rng.random::<u64>();
            crate::gen::sample_k_symmetric(&chain, k, n, seed)?
        }
    };
    w.origin = -(left as i64);
    Ok((w, c.w[0] as u32))
}

/// Palm sample on `-left ..= right` with a particle at 0, from geometric
/// inter-particle gaps (i.i.d.) or the chain run both ways from state 1
/// (two-state Markov, which is reversible).
pub fn palm_window(model: TagModel, left: usize, right: usize, rng: &mut BbsRng) -> Result<ParticleWindow> {
    let n = left + right + 1;
    let mut cells = vec![0u8; n];
    cells[left] = 1;
    match model {
        TagModel::Iid { p } => {
            iid_constants(p)?;
            let g = Geometric::new(p).map_err(|e| BbsError::Domain(e.to_string()))?;
            let mut at = left as u64;
            loop {
                at += 1 + g.sample(rng);
                if at >= n as u64 {
                    break;
                }
                cells[at as usize] = 1;
            }
            let mut at = left as i64;
            loop {
                at -= 1 + g.sample(rng) as i64;
                if at < 0 {
                    break;
                }
                cells[at as usize] = 1;
            }
        }
        TagModel::Markov { p0, p1 } => {
            markov_constants(p0, p1)?;
            let run = |rng: &mut BbsRng, out: &mut [u8]| {
                let mut prev = true;
                for c in out.iter_mut() {
                    prev = rng.random::<f64>() < if prev { p1 } else { p0 };
                    *c = u8::from(prev);
                }
            };
            run(rng, &mut cells[left + 1..]);
            let mut back = vec![0u8; left];
            run(rng, &mut back);
            for (i, v) in back.into_iter().enumerate() {
                cells[left - 1 - i] = v;
            }
        }
        TagModel::KSymmetric { .. } => {
            return Err(BbsError::Domain("Palm sampling is implemented for i.i.d. and Markov models".into()));
        }
    }
    Ok(ParticleWindow { origin: -(left as i64), cells, left: Boundary::Vacuum, right: Boundary::Open })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedReport {
    pub scheme: Scheme,
    pub replicas: usize,
    pub steps: usize,
    pub speed_hat: f64,
    pub speed_se: f64,
    pub speed_theory: Option<f64>,
    /// Standard deviation of X_k - X_0 - k v.
    pub spread: f64,
    /// KS test of the standardized LIFO displacement against the normal law.
    pub clt: Option<TestResult>,
    /// (x, empirical -(1/k) log P(X_k/k >= x), rate function at x).
    pub ldp: Vec<(f64, f64, f64)>,
    /// Histogram of (X_k - X_0 - k v)/sqrt(k): (bin centre, count).
    pub histogram: Vec<(f64, u64)>,
}

impl TaggedReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "scheme={}\nreplicas={}\nsteps={}\nspeed_hat={:.6}\nspeed_se={:.6}\n",
            self.scheme.as_str(),
            self.replicas,
            self.steps,
            self.speed_hat,
            self.speed_se
        );
        if let Some(v) = self.speed_theory {
            s.push_str(&format!("speed_theory={v:.6}\n"));
        }
        s.push_str(&format!("spread={:.6}\nspread_over_sqrt_k={:.6}\n", self.spread, self.spread / (self.steps as f64).sqrt()));
        if let Some(t) = &self.clt {
            s.push_str(&format!("clt_ks_stat={:.6}\nclt_ks_p={:.6}\n", t.stat, t.p_value));
        }
        for (x, e, r) in &self.ldp {
            s.push_str(&format!("ldp_x={x:.6} empirical={e:.6} rate={r:.6}\n"));
        }
        for (c, n) in &self.histogram {
            s.push_str(&format!("hist {c:.3} {n}\n"));
        }
        s
    }
}

fn speed_theory(model: TagModel, scheme: Scheme) -> Result<Option<f64>> {
    Ok(match model {
        TagModel::Iid { p } => Some(iid_constants(p)?.v),
        TagModel::Markov { p0, p1 } => {
            let m = markov_constants(p0, p1)?;
            Some(match scheme {
                Scheme::Lifo => m.lifo_speed,
                Scheme::Fifo => m.mu / m.rho,
            })
        }
        TagModel::KSymmetric { k } => match scheme {
            Scheme::Fifo => Some(k as f64),
            Scheme::Lifo => None,
        },
    })
}

/// Law-of-large-numbers, fluctuation and tail statistics of tagged traces.
pub fn tagged_stats(traces: &[TaggedTrace], model: TagModel) -> Result<TaggedReport> {
    if traces.len() < 30 {
        return Err(BbsError::InsufficientReplicas { need: 30, got: traces.len() });
    }
    let scheme = traces[0].scheme;
    let k = traces[0].x.len() - 1;
    if k == 0 || traces.iter().any(|t| t.x.len() != k + 1 || t.scheme != scheme) {
        return Err(BbsError::Domain("traces must share scheme and length".into()));
    }
    let kf = k as f64;
    let d: Vec<f64> = traces.iter().map(|t| t.displacement() as f64).collect();
    let speeds: Vec<f64> = d.iter().map(|x| x / kf).collect();
    let speed_hat = mean(&speeds);
    let speed_se = (variance(&speeds) / speeds.len() as f64).sqrt();
    let theory = speed_theory(model, scheme)?;
    let v = theory.unwrap_or(speed_hat);
    let fl: Vec<f64> = d.iter().map(|x| (x - kf * v) / kf.sqrt()).collect();
    let spread = (fl.iter().map(|f| f * f).sum::<f64>() / fl.len() as f64).sqrt() * kf.sqrt();
    let mut clt = None;
    let mut ldp = Vec::new();
    if let (Scheme::Lifo, TagModel::Iid { p }) = (scheme, model) {
        let c = iid_constants(p)?;
        let sd = c.sigma_l2.sqrt();
        let z: Vec<f64> = fl.iter().map(|f| f / sd).collect();
        let normal = Normal::standard();
        clt = Some(ks_one_sample(&z, |x| normal.cdf(x)));
        let rate = RateFunction::new(RateFamily::LifoTagged { p })?;
        for a in [1.0, 1.5, 2.0] {
            let x = c.v + a * sd / kf.sqrt();
            let hits = speeds.iter().filter(|&&s| s >= x).count();
            let emp = if hits == 0 { f64::INFINITY } else { -(hits as f64 / speeds.len() as f64).ln() / kf };
            ldp.push((x, emp, rate.rate(x)));
        }
    }
    let histogram = histogram(&fl, 20);
    Ok(TaggedReport { scheme, replicas: traces.len(), steps: k, speed_hat, speed_se, speed_theory: theory, spread, clt, ldp, histogram })
}

fn histogram(x: &[f64], bins: usize) -> Vec<(f64, u64)> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut counts = vec![0u64; bins];
    for &v in x {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts.into_iter().enumerate().map(|(i, c)| (lo + (i as f64 + 0.5) * width, c)).collect()
}

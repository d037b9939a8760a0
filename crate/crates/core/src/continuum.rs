//! Box-ball system on the real line at grid resolution.
//!
//! A continuous path S with S_0 = 0 is stored on the grid t0 + i dt. The
//! running maximum can be fed two extra pieces of information the grid alone
//! misses: the maximum of the path before t0 (`past_max`) and the maximum
//! inside each grid cell (`cell_max`). Both are exact for Brownian samples
//! drawn by [`sample_two_sided_bm`].

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric, Normal};
use rayon::prelude::*;

use crate::error::{BbsError, Result};
use crate::path::PathWindow;
use crate::rng::{derive_seed, replica_rng, BbsRng};
use crate::stats::{ks_one_sample, ks_two_sample, TestResult};

pub const DEFAULT_DT: f64 = 1.0 / 512.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
    /// sup of the path over (-inf, t0]; `None` means the first value.
    pub past_max: Option<f64>,
    /// Maximum over cell [t_i, t_{i+1}], one entry per cell.
    pub cell_max: Option<Vec<f64>>,
}

impl GridPath {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        let g = GridPath { t0, dt, values, past_max: None, cell_max: None };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() || !self.t0.is_finite() {
            return Err(BbsError::Domain(format!("grid needs dt > 0, got {}", self.dt)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(BbsError::InvalidWindow("grid values must be finite".into()));
        }
        let i0 = self.zero_index().ok_or_else(|| BbsError::InvalidWindow("grid does not contain t = 0".into()))?;
        if self.values[i0].abs() > 1e-12 {
            return Err(BbsError::InvalidWindow("path must vanish at t = 0".into()));
        }
        if let Some(cm) = &self.cell_max {
            if cm.len() + 1 != self.values.len() {
                return Err(BbsError::InvalidWindow("need one cell maximum per grid cell".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let i = x.round();
        if (x - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.values.len() {
            return None;
        }
        Some(i as usize)
    }

    pub fn zero_index(&self) -> Option<usize> {
        self.index_of(0.0)
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.index_of(t).map(|i| self.values[i])
    }

    /// Lattice path embedded with unit spacing; the left side is read as vacuum.
    pub fn from_lattice(path: &PathWindow) -> Result<Self> {
        GridPath::new(path.start as f64, 1.0, path.s.iter().map(|&v| v as f64).collect())
    }

    pub fn max_abs_increment(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.time(i), v));
        }
        out
    }
}

pub fn running_max(path: &GridPath) -> Vec<f64> {
    let mut cur = path.past_max.unwrap_or(path.values[0]).max(path.values[0]);
    let mut out = Vec::with_capacity(path.len());
    out.push(cur);
    for i in 1..path.len() {
        cur = cur.max(path.values[i]);
        if let Some(cm) = &path.cell_max {
            cur = cur.max(cm[i - 1]);
        }
        out.push(cur);
    }
    out
}

/// Future minimum from grid values only, the last value closing the window.
pub fn future_min(path: &GridPath) -> Vec<f64> {
    let mut cur = f64::INFINITY;
    let mut out = vec![0.0; path.len()];
    for (o, &v) in out.iter_mut().zip(&path.values).rev() {
        cur = cur.min(v);
        *o = cur;
    }
    out
}

fn plain(path: &GridPath, values: Vec<f64>) -> GridPath {
    GridPath { t0: path.t0, dt: path.dt, values, past_max: None, cell_max: None }
}

/// TS = 2M - S - 2M_0 on the grid.
pub fn grid_t(path: &GridPath) -> GridPath {
    let m = running_max(path);
    let m0 = m[path.zero_index().expect("validated grid contains 0")];
    let values = m.iter().zip(&path.values).map(|(m, s)| 2.0 * m - s - 2.0 * m0).collect();
    plain(path, values)
}

/// T^{-1}S = 2I - S - 2I_0 on the grid.
pub fn grid_tinv(path: &GridPath) -> GridPath {
    let i = future_min(path);
    let i0 = i[path.zero_index().expect("validated grid contains 0")];
    let values = i.iter().zip(&path.values).map(|(i, s)| 2.0 * i - s - 2.0 * i0).collect();
    plain(path, values)
}

/// Two-sided Skorohod decomposition S = A - Y with Y = M - S, A = M.
#[derive(Debug, Clone, PartialEq)]
pub struct SkorohodPair {
    pub y: Vec<f64>,
    pub a: Vec<f64>,
    /// Allowed value of y at a push of a: zero on lattice paths, the largest
    /// excursion of a cell maximum above the cell's lower endpoint otherwise.
    pub tol: f64,
}

impl SkorohodPair {
    pub fn total_variation(&self) -> f64 {
        self.a.last().unwrap_or(&0.0) - self.a.first().unwrap_or(&0.0)
    }

    /// Sum of y dA over the grid.
    pub fn complementarity(&self) -> f64 {
        (1..self.a.len()).map(|i| self.y[i] * (self.a[i] - self.a[i - 1])).sum()
    }

    pub fn holds(&self) -> bool {
        let mono = self.a.windows(2).all(|w| w[1] >= w[0]);
        let pos = self.y.iter().all(|&v| v >= 0.0);
        mono && pos && self.complementarity() <= self.tol * self.total_variation() + 1e-12
    }
}

pub fn skorohod_pair(path: &GridPath) -> SkorohodPair {
    let a = running_max(path);
    let y: Vec<f64> = a.iter().zip(&path.values).map(|(m, s)| m - s).collect();
    let tol = match &path.cell_max {
        None => 0.0,
        Some(cm) => cm
            .iter()
            .zip(path.values.windows(2))
            .map(|(m, w)| m - w[0].min(w[1]))
            .fold(0.0, f64::max),
    };
    SkorohodPair { y, a, tol }
}

/// Lowers A by `delta` on the grid indices `lo..=hi` (keeping S = A - Y) and
/// reports whether the perturbed pair breaks y >= 0, monotonicity of A or
/// complementarity.
pub fn lowering_violates(pair: &SkorohodPair, lo: usize, hi: usize, delta: f64) -> bool {
    let mut p = pair.clone();
    for i in lo..=hi.min(p.a.len() - 1) {
        p.a[i] -= delta;
        p.y[i] -= delta;
    }
    !p.holds()
}

fn bridge_max(a: f64, b: f64, dt: f64, u: f64) -> f64 {
    let d = b - a;
    0.5 * (a + b + (d * d - 2.0 * dt * u.ln()).sqrt())
}

/// Brownian motion with drift `c` on the grid `lo_steps..=hi_steps` (units of
/// `dt`, `lo_steps <= 0 <= hi_steps`), pinned to 0 at t = 0. The past maximum
/// over (-inf, t0] is exact: B_{t0} plus an independent Exp(2c) variable.
pub fn sample_bm_grid(c: f64, lo_steps: i64, hi_steps: i64, dt: f64, rng: &mut BbsRng) -> Result<GridPath> {
    if !(c > 0.0) || !(dt > 0.0) {
        return Err(BbsError::Domain(format!("need drift c > 0 and dt > 0, got c = {c}, dt = {dt}")));
    }
    if lo_steps > 0 || hi_steps < 0 {
        return Err(BbsError::Domain("grid must contain t = 0".into()));
    }
    let n = (hi_steps - lo_steps) as usize;
    let z0 = (-lo_steps) as usize;
    let normal = Normal::new(c * dt, dt.sqrt()).expect("positive variance");
    let mut values = vec![0.0; n + 1];
    for i in z0 + 1..=n {
        values[i] = values[i - 1] + normal.sample(rng);
    }
    for i in (0..z0).rev() {
        values[i] = values[i + 1] - normal.sample(rng);
    }
    let mut cell_max = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = 1.0 - rng.random::<f64>();
        cell_max.push(bridge_max(values[i], values[i + 1], dt, u));
    }
    let past = values[0] + Exp::new(2.0 * c).expect("positive rate").sample(rng);
    Ok(GridPath { t0: lo_steps as f64 * dt, dt, values, past_max: Some(past), cell_max: Some(cell_max) })
}

/// Two-sided Brownian motion with drift `c` on [-horizon, horizon].
pub fn sample_two_sided_bm(c: f64, horizon: f64, dt: f64, seed: u64) -> Result<GridPath> {
    if !(horizon >= 0.0) {
        return Err(BbsError::Domain(format!("horizon must be nonnegative, got {horizon}")));
    }
    let n = (horizon / dt).round() as i64;
    sample_bm_grid(c, -n, n, dt, &mut crate::rng::seeded(seed))
}

/// Scaled lattice marginals S^N_{N^2 t}/N and TS^N_{N^2 t}/N for i.i.d.
/// Bernoulli(p_N) with p_N = 1/2 - c/(2N). The carrier at the left edge is
/// drawn from its stationary geometric law.
pub fn lattice_scaled(c: f64, n: u64, t_list: &[f64], rng: &mut BbsRng) -> Result<(Vec<f64>, Vec<f64>)> {
    if !((n as f64) > c) || !(c > 0.0) {
        return Err(BbsError::Domain(format!("need N > c > 0, got N = {n}, c = {c}")));
    }
    let nf = n as f64;
    let p = 0.5 - c / (2.0 * nf);
    let scale = nf * nf;
    let sites: Vec<i64> = t_list.iter().map(|t| (t * scale).round() as i64).collect();
    let lo = sites.iter().copied().min().unwrap_or(0).min(0);
    let hi = sites.iter().copied().max().unwrap_or(0).max(0);
    let len = (hi - lo) as usize + 1;
    let mut s = vec![0i64; len];
    for i in 1..len {
        s[i] = s[i - 1] + if rng.random::<f64>() < p { -1 } else { 1 };
    }
    let r = p / (1.0 - p);
    let w_entry = Geometric::new(1.0 - r).expect("subcritical density").sample(rng) as i64;
    let mut m = vec![0i64; len];
    let mut cur = s[0] + w_entry;
    for i in 0..len {
        cur = cur.max(s[i]);
        m[i] = cur;
    }
    let z = (-lo) as usize;
    let (s0, m0) = (s[z], m[z]);
    let mut a = Vec::with_capacity(sites.len());
    let mut b = Vec::with_capacity(sites.len());
    for &site in &sites {
        let i = (site - lo) as usize;
        a.push((s[i] - s0) as f64 / nf);
        b.push((2 * (m[i] - m0) - (s[i] - s0)) as f64 / nf);
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsLine {
    pub label: String,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumReport {
    pub header: Vec<(String, String)>,
    pub lines: Vec<KsLine>,
}

impl ContinuumReport {
    pub fn passes(&self, alpha: f64) -> bool {
        self.lines.iter().all(|l| l.result.accepts(alpha))
    }

    pub fn to_text(&self, alpha: f64) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for l in &self.lines {
            let verdict = if l.result.accepts(alpha) { "pass" } else { "fail" };
            out.push_str(&format!(
                "{} = D {:.5} p {:.4} {}\n",
                l.label, l.result.stat, l.result.p_value, verdict
            ));
        }
        out
    }
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() }
}

/// Per replica: values of B, TB and M - B at each time of `t_list`.
fn bm_marginals(c: f64, dt: f64, horizon: f64, t_list: &[f64], replicas: usize, seed: u64) -> Result<Vec<[Vec<f64>; 3]>> {
    let n = (horizon / dt).round() as i64;
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let g = sample_bm_grid(c, -n, n, dt, &mut replica_rng(seed, r))?;
            let tg = grid_t(&g);
            let m = running_max(&g);
            let idx: Vec<usize> = t_list
                .iter()
                .map(|&t| g.index_of(t).ok_or_else(|| BbsError::Domain(format!("time {t} is off the grid"))))
                .collect::<Result<_>>()?;
            Ok([
                idx.iter().map(|&i| g.values[i]).collect(),
                idx.iter().map(|&i| tg.values[i]).collect(),
                idx.iter().map(|&i| m[i] - g.values[i]).collect(),
            ])
        })
        .collect()
}

type Columns = Vec<Vec<f64>>;

fn split3(rows: Vec<[Vec<f64>; 3]>) -> (Columns, Columns, Columns) {
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    let mut w = Vec::with_capacity(rows.len());
    for [x, y, z] in rows {
        a.push(x);
        b.push(y);
        w.push(z);
    }
    (a, b, w)
}

fn check_times(t_list: &[f64], horizon: f64) -> Result<()> {
    if t_list.is_empty() {
        return Err(BbsError::Domain("need at least one time".into()));
    }
    if let Some(t) = t_list.iter().find(|t| t.abs() > horizon) {
        return Err(BbsError::Domain(format!("time {t} outside horizon {horizon}")));
    }
    Ok(())
}

/// Marginals of TB against an independent copy of B, and the reflected part
/// M - B against Exp(2c), for drift-c Brownian motion on [-horizon, horizon].
pub fn invariance_experiment(c: f64, dt: f64, horizon: f64, t_list: &[f64], replicas: usize, seed: u64) -> Result<ContinuumReport> {
    check_times(t_list, horizon)?;
    let (_, tb, w) = split3(bm_marginals(c, dt, horizon, t_list, replicas, derive_seed(seed, 1))?);
    let (b, _, _) = split3(bm_marginals(c, dt, horizon, t_list, replicas, derive_seed(seed, 2))?);
    let mut lines = Vec::new();
    for (j, t) in t_list.iter().enumerate() {
        lines.push(KsLine { label: format!("TB({t}) vs B({t})"), result: ks_two_sample(&column(&tb, j), &column(&b, j)) });
    }
    for (j, t) in t_list.iter().enumerate() {
        lines.push(KsLine { label: format!("M-B({t}) vs Exp(2c)"), result: ks_one_sample(&column(&w, j), exp_cdf(2.0 * c)) });
    }
    let header = vec![
        ("experiment".into(), "invariance".into()),
        ("c".into(), c.to_string()),
        ("dt".into(), dt.to_string()),
        ("horizon".into(), horizon.to_string()),
        ("replicas".into(), replicas.to_string()),
        ("seed".into(), seed.to_string()),
    ];
    Ok(ContinuumReport { header, lines })
}

/// Scaling limit: for each N, scaled lattice S^N and TS^N marginals against B
/// and TB marginals, plus invariance and the reflected Exp(2c) law of the
/// Brownian side.
pub fn scaling_experiment(c: f64, n_list: &[u64], t_list: &[f64], replicas: usize, seed: u64) -> Result<ContinuumReport> {
    scaling_experiment_dt(c, n_list, t_list, replicas, seed, DEFAULT_DT)
}

pub fn scaling_experiment_dt(c: f64, n_list: &[u64], t_list: &[f64], replicas: usize, seed: u64, dt: f64) -> Result<ContinuumReport> {
    if let Some(n) = n_list.iter().find(|&&n| !((n as f64) > c)) {
        return Err(BbsError::Domain(format!("need N > c, got N = {n}, c = {c}")));
    }
    let horizon = t_list.iter().fold(0.0f64, |h, t| h.max(t.abs()));
    check_times(t_list, horizon)?;
    let (b, tb, w) = split3(bm_marginals(c, dt, horizon, t_list, replicas, derive_seed(seed, 1))?);
    let (b2, _, _) = split3(bm_marginals(c, dt, horizon, t_list, replicas, derive_seed(seed, 2))?);
    let mut lines = Vec::new();
    for &n in n_list {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..replicas as u64)
            .into_par_iter()
            .map(|r| lattice_scaled(c, n, t_list, &mut replica_rng(derive_seed(seed, 100 + n), r)))
            .collect::<Result<_>>()?;
        let sn: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
        let tsn: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
        for (j, t) in t_list.iter().enumerate() {
            lines.push(KsLine { label: format!("S^N N={n} t={t} vs B"), result: ks_two_sample(&column(&sn, j), &column(&b, j)) });
            lines.push(KsLine { label: format!("TS^N N={n} t={t} vs TB"), result: ks_two_sample(&column(&tsn, j), &column(&tb, j)) });
        }
    }
    for (j, t) in t_list.iter().enumerate() {
        lines.push(KsLine { label: format!("TB({t}) vs B({t})"), result: ks_two_sample(&column(&tb, j), &column(&b2, j)) });
        lines.push(KsLine { label: format!("M-B({t}) vs Exp(2c)"), result: ks_one_sample(&column(&w, j), exp_cdf(2.0 * c)) });
    }
    let header = vec![
        ("experiment".into(), "scaling".into()),
        ("c".into(), c.to_string()),
        ("N".into(), n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")),
        ("t".into(), t_list.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")),
        ("dt".into(), dt.to_string()),
        ("replicas".into(), replicas.to_string()),
        ("seed".into(), seed.to_string()),
    ];
    Ok(ContinuumReport { header, lines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrier::carrier;
    use crate::path::encode;
    use crate::transform::pitman_t;
    use crate::window::ParticleWindow;

    fn padded_path(bits: &str, pad: usize) -> PathWindow {
        let z = "0".repeat(pad);
        let w = ParticleWindow::from_bits(-(pad as i64), &format!("{z}{bits}{z}"), crate::Boundary::Vacuum, crate::Boundary::Vacuum).unwrap();
        encode(&w).unwrap()
    }

    #[test]
    fn slope_is_fixed() {
        let g = GridPath::new(-1.0, 0.25, (0..9).map(|i| 0.5 * (i as f64 * 0.25 - 1.0)).collect()).unwrap();
        let t = grid_t(&g);
        for (a, b) in t.values.iter().zip(&g.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = skorohod_pair(&g);
        assert!(p.y.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn tent_reflects() {
        let vals: Vec<f64> = (0..9).map(|i| -((i as f64 - 4.0) * 0.25).abs()).collect();
        let mut g = GridPath::new(-1.0, 0.25, vals).unwrap();
        g.past_max = Some(0.0);
        let t = grid_t(&g);
        for (i, v) in t.values.iter().enumerate() {
            assert!((v - (i as f64 - 4.0).abs() * 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_example_matches_pitman() {
        let p = padded_path("1100", 6);
        let g = GridPath::from_lattice(&p).unwrap();
        let t = pitman_t(&p).unwrap();
        let gt = grid_t(&g);
        for (i, v) in gt.values.iter().enumerate() {
            assert_eq!(*v, t.s[i] as f64);
        }
        let w = carrier(&p).unwrap().w;
        let y = skorohod_pair(&g).y;
        assert_eq!(y, w.iter().map(|&v| v as f64).collect::<Vec<_>>());
    }

    #[test]
    fn lattice_round_trip_all_short() {
        for len in 0..=8usize {
            for mask in 0u32..(1 << len) {
                let bits: String = (0..len).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect();
                let p = padded_path(&bits, len + 2);
                let g = GridPath::from_lattice(&p).unwrap();
                let t = grid_t(&g);
                let lat = pitman_t(&p).unwrap();
                assert_eq!(t.values, lat.s[..t.len()].iter().map(|&v| v as f64).collect::<Vec<_>>(), "{bits}");
                assert_eq!(grid_tinv(&t).values, g.values, "{bits}");
                assert_eq!(grid_t(&grid_tinv(&g)).values, g.values, "{bits}");
                let pair = skorohod_pair(&g);
                assert_eq!(pair.complementarity(), 0.0);
            }
        }
    }

    #[test]
    fn brownian_sample_basics() {
        let a = sample_two_sided_bm(1.0, 2.0, DEFAULT_DT, 5).unwrap();
        let b = sample_two_sided_bm(1.0, 2.0, DEFAULT_DT, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.value_at(0.0), Some(0.0));
        assert_eq!(a.len(), 2049);
        let m = running_max(&a);
        assert!(m.windows(2).all(|w| w[1] >= w[0]));
        assert!(m.iter().zip(&a.values).all(|(m, s)| m >= s));
    }

    #[test]
    fn negative_increment_fraction() {
        let (c, dt) = (8.0, 1.0 / 64.0);
        let g = sample_two_sided_bm(c, 200.0, dt, 11).unwrap();
        let n = g.len() - 1;
        let neg = g.values.windows(2).filter(|w| w[1] < w[0]).count() as f64 / n as f64;
        let expect = statrs::function::erf::erfc(c * dt.sqrt() / 2f64.sqrt()) / 2.0;
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((neg - expect).abs() < 4.0 * se, "{neg} vs {expect}");
    }

    #[test]
    fn mean_at_one() {
        let vals: Vec<f64> = (0..400u64)
            .map(|r| sample_two_sided_bm(1.0, 1.0, 1.0 / 64.0, 1000 + r).unwrap().value_at(1.0).unwrap())
            .collect();
        let m = crate::stats::mean(&vals);
        assert!((m - 1.0).abs() < 3.0 / 20.0, "{m}");
    }

    #[test]
    fn complementarity_on_brownian_samples() {
        for r in 0..200u64 {
            let g = sample_two_sided_bm(1.0, 2.0, 1.0 / 256.0, r).unwrap();
            let p = skorohod_pair(&g);
            assert!(p.holds(), "replica {r}");
            assert!(p.tol < 10.0 * g.max_abs_increment().max(g.dt.sqrt()));
        }
    }

    #[test]
    fn lowering_a_breaks_the_pair() {
        let g = sample_two_sided_bm(1.0, 2.0, 1.0 / 256.0, 3).unwrap();
        let p = skorohod_pair(&g);
        let n = p.a.len();
        for (lo, hi) in [(0, n - 1), (10, 200), (n / 2, n - 1), (300, 301)] {
            assert!(lowering_violates(&p, lo, hi, 0.05), "{lo}..{hi}");
        }
    }

    #[test]
    fn reflected_part_is_exponential() {
        let r = invariance_experiment(1.0, 1.0 / 128.0, 2.0, &[1.0], 600, 9).unwrap();
        assert!(r.passes(0.001), "{}", r.to_text(0.01));
    }

    #[test]
    fn scaling_rejects_small_n() {
        assert!(scaling_experiment(2.0, &[2], &[1.0], 10, 1).is_err());
    }

    #[test]
    fn lattice_marginal_mean() {
        let mut rng = crate::rng::seeded(4);
        let rows: Vec<_> = (0..400).map(|_| lattice_scaled(1.0, 16, &[-1.0, 0.0, 1.0], &mut rng).unwrap()).collect();
        for (j, t) in [-1.0, 1.0].into_iter().enumerate() {
            let j = 2 * j;
            let s: Vec<f64> = rows.iter().map(|r| r.0[j]).collect();
            let ts: Vec<f64> = rows.iter().map(|r| r.1[j]).collect();
            assert!((crate::stats::mean(&s) - t).abs() < 0.15);
            assert!((crate::stats::mean(&ts) - t).abs() < 0.15);
        }
        assert!(rows.iter().all(|r| r.0[1] == 0.0 && r.1[1] == 0.0));
    }

    #[test]
    fn report_is_deterministic() {
        let a = scaling_experiment_dt(1.0, &[8], &[-1.0, 1.0], 50, 3, 1.0 / 64.0).unwrap();
        let b = scaling_experiment_dt(1.0, &[8], &[-1.0, 1.0], 50, 3, 1.0 / 64.0).unwrap();
        assert_eq!(a.to_text(0.01), b.to_text(0.01));
    }
}

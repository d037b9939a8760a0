//! Window-scale classification, soliton census, current records and the
//! reconstruction of a configuration from the current through the origin.

use std::collections::BTreeMap;

use crate::carrier::carrier_with_future;
use crate::error::{BbsError, Result};
use crate::evolve::{evolve, run_currents, run_currents_packed, step_seq};
use crate::gen::{SampleKind, SampleSpec};
use crate::stats::{block_counts, chi_square_two_sample, TestResult};
use crate::path::encode;
use crate::window::{Boundary, ParticleWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassGuess {
    SubCriticalLike,
    CriticalLike(i64),
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    /// Leftmost site n with W_n = W_{n-1} = 0, if any.
    pub n_minus: Option<i64>,
    /// Rightmost such site.
    pub n_plus: Option<i64>,
    pub k_hat: i64,
    pub density_hat: f64,
    pub class_guess: ClassGuess,
}

/// Double zeros, the amplitude sup(M - I) and a class estimate on a window.
pub fn boundary_report(config: &ParticleWindow) -> Result<BoundaryReport> {
    let path = encode(config)?;
    let c = carrier_with_future(&path, true)?;
    let i = c.i.as_ref().expect("future minimum requested");
    let n = config.len();
    let density_hat = if n == 0 { 0.0 } else { config.particles() as f64 / n as f64 };
    let mut zeros = Vec::new();
    for j in 1..c.w.len() {
        if c.w[j] == 0 && c.w[j - 1] == 0 {
            zeros.push(c.start + j as i64);
        }
    }
    let amp: Vec<i64> = c.m.iter().zip(i).map(|(m, i)| m - i).collect();
    let k_hat = amp.iter().copied().max().unwrap_or(0).max(0);
    let mid = config.origin + n as i64 / 2;
    let in_left = zeros.iter().any(|&z| z < mid);
    let in_right = zeros.iter().any(|&z| z >= mid);
    let half = amp.len() / 2;
    let band_left = amp[..half.max(1)].iter().copied().max().unwrap_or(0);
    let band_right = amp[half..].iter().copied().max().unwrap_or(0);
    let class_guess = if n > 0 && density_hat < 0.5 - 3.0 * (0.25 / n as f64).sqrt() && in_left && in_right {
        ClassGuess::SubCriticalLike
    } else if zeros.is_empty() && band_left == k_hat && band_right == k_hat {
        ClassGuess::CriticalLike(k_hat)
    } else {
        ClassGuess::Undecided
    };
    Ok(BoundaryReport {
        n_minus: zeros.first().copied(),
        n_plus: zeros.last().copied(),
        k_hat,
        density_hat,
        class_guess,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolitonCensus {
    /// Sizes in decreasing order.
    pub sizes: Vec<usize>,
    /// Set when the window is not of finite support and boundary runs were dropped.
    pub approximate: bool,
}

impl SolitonCensus {
    pub fn counts(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for &s in &self.sizes {
            *m.entry(s).or_insert(0) += 1;
        }
        m
    }

    pub fn max_size(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }
}

/// Soliton census by repeated removal of all adjacent "10" pairs. Round r
/// removes one pair from every soliton of size at least r.
pub fn soliton_sizes(config: &ParticleWindow) -> SolitonCensus {
    let finite = config.left == Boundary::Vacuum && config.right == Boundary::Vacuum;
    let mut seq: Vec<u8> = config.trimmed().cells;
    if finite {
        let ones = seq.iter().filter(|&&c| c == 1).count();
        seq.extend(std::iter::repeat_n(0, ones));
    }
    let mut per_round = Vec::new();
    loop {
        let mut next = Vec::with_capacity(seq.len());
        let mut removed = 0usize;
        let mut j = 0;
        while j < seq.len() {
            if j + 1 < seq.len() && seq[j] == 1 && seq[j + 1] == 0 {
                removed += 1;
                j += 2;
            } else {
                next.push(seq[j]);
                j += 1;
            }
        }
        if removed == 0 {
            break;
        }
        per_round.push(removed);
        seq = next;
    }
    let leftover = seq.contains(&1);
    let mut sizes = Vec::new();
    for r in 0..per_round.len() {
        let at_least = per_round[r];
        let more = per_round.get(r + 1).copied().unwrap_or(0);
        sizes.extend(std::iter::repeat_n(r + 1, at_least - more));
    }
    sizes.reverse();
    SolitonCensus { sizes, approximate: !finite || leftover }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentRecord {
    /// (T^j W)_0 for j = 0 ..= k.
    pub w0: Vec<i64>,
    /// C_j = sum of w0_l over l < j.
    pub c: Vec<i64>,
    /// sigma^{i+1} - sigma^i with sigma^0 = -1.
    pub zero_gaps: Vec<i64>,
    pub odd_gap_count: usize,
}

impl CurrentRecord {
    pub fn from_currents(w0: Vec<i64>) -> Self {
        let mut c = Vec::with_capacity(w0.len());
        let mut acc = 0;
        for &w in &w0 {
            c.push(acc);
            acc += w;
        }
        let zero_gaps = zero_gaps(&w0);
        let odd_gap_count = zero_gaps.iter().filter(|g| *g % 2 == 1).count();
        CurrentRecord { w0, c, zero_gaps, odd_gap_count }
    }

    pub fn zeros(&self) -> Vec<usize> {
        zero_indices(&self.w0)
    }

    /// CSV with header `k,w0,C`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,w0,C\n");
        for (j, (w, c)) in self.w0.iter().zip(&self.c).enumerate() {
            out.push_str(&format!("{j},{w},{c}\n"));
        }
        out
    }
}

fn zero_indices(w: &[i64]) -> Vec<usize> {
    w.iter().enumerate().filter(|(_, &v)| v == 0).map(|(j, _)| j).collect()
}

/// Gaps between successive zeros of a sequence, with a virtual zero at -1.
pub fn zero_gaps(w: &[i64]) -> Vec<i64> {
    let mut prev = -1i64;
    let mut gaps = Vec::new();
    for z in zero_indices(w) {
        gaps.push(z as i64 - prev);
        prev = z as i64;
    }
    gaps
}

/// Indices sigma^i that start an odd gap, i.e. the times k with w^k_n = w^k_{n-1} = 0.
pub fn odd_gap_starts(w: &[i64]) -> Vec<usize> {
    let z = zero_indices(w);
    z.windows(2).filter(|p| (p[1] - p[0]) % 2 == 1).map(|p| p[0]).collect()
}

/// Current record at site 0 over k steps.
pub fn current_sequence(config: &ParticleWindow, k: usize) -> Result<CurrentRecord> {
    config.validate()?;
    let w0 = match config.left {
        Boundary::Open => {
            return Err(BbsError::CarrierUndefined("open left boundary: the past is unknown"));
        }
        Boundary::Vacuum => {
            // Only sites at or left of the origin feed the load at 0.
            let lo = config.origin.min(0);
            let mut cells = config
                .slice(lo, 0)
                .ok_or(BbsError::SpanExhausted { step: 0 })?;
            let mut cur = Vec::with_capacity(k + 1);
            run_currents(&mut cells, k + 1, &mut cur);
            cur.into_iter().map(i64::from).collect()
        }
        Boundary::Periodic => evolve(config, k)?.currents,
    };
    Ok(CurrentRecord::from_currents(w0))
}

/// Sites per step kept left of the origin by [`stationary_current`]: an upper
/// bound on the speed at which the effect of cutting the window travels right.
/// Measured first-difference speeds are about 7 to 9 for i.i.d. p = 0.2 and 10
/// to 14 for the (0.2, 0.3) Markov chain; solitons of bounded families never
/// exceed K.
pub fn default_reach(kind: &SampleKind) -> usize {
    match kind {
        SampleKind::IidBernoulli { p } => {
            let d = 1.0 - 2.0 * p;
            16usize.max((4.0 / d).ceil() as usize)
        }
        SampleKind::MarkovConfig { p0, p1 } => {
            let d = 1.0 - 2.0 * p0 / (p0 + p1);
            24usize.max((4.0 / d).ceil() as usize)
        }
        SampleKind::BoundedSoliton { k, .. } | SampleKind::KBoundedSymmetric { k, .. } => 2 * k + 2,
    }
}

/// Current record (T^j W)_0, j = 0..=k, for a stationary sample on
/// `-(reach (k+1) + 63) ..= 0` with vacuum to its left.
pub fn stationary_current(kind: &SampleKind, k: usize, reach: usize, seed: u64) -> Result<CurrentRecord> {
    let n = reach * (k + 1) + 64;
    let spec = SampleSpec { kind: kind.clone(), n, seed };
    let (w, _) = spec.sample()?;
    let cur = run_currents_packed(&w.cells, k + 1, Some(reach));
    Ok(CurrentRecord::from_currents(cur.into_iter().map(i64::from).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceLine {
    pub comparison: &'static str,
    pub len: usize,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub n: usize,
    pub max_len: usize,
    pub gap: usize,
    pub lines: Vec<InvarianceLine>,
}

impl InvarianceReport {
    /// Tests on blocks of the maximal length, whose law fixes that of every
    /// shorter block.
    pub fn decisive(&self) -> impl Iterator<Item = &InvarianceLine> {
        self.lines.iter().filter(move |l| l.len == self.max_len)
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.decisive().all(|l| l.result.accepts(alpha))
    }

    pub fn to_text(&self, alpha: f64) -> String {
        let mut out = format!("n = {}\nmax_len = {}\ngap = {}\n", self.n, self.max_len, self.gap);
        for l in &self.lines {
            let verdict = if l.result.accepts(alpha) { "accept" } else { "reject" };
            out.push_str(&format!(
                "{} len={} chi2={:.3} df={} p={:.4} {}\n",
                l.comparison, l.len, l.result.stat, l.result.df, l.result.p_value, verdict
            ));
        }
        out
    }
}

/// Empirical check of the three-way symmetry criterion: block laws of eta
/// against T eta, against the reversed configuration, and of the carrier W
/// against its reversal. Each comparison uses independent samples and blocks
/// of length `len` taken every `len + gap` sites.
pub fn invariance_test(kind: &SampleKind, n: usize, seed: u64, max_len: usize, gap: usize) -> Result<InvarianceReport> {
    let sample = |tag: u64| SampleSpec { kind: kind.clone(), n, seed: crate::rng::derive_seed(seed, tag) }.sample();
    let (a, ca) = sample(1)?;
    let (b, cb) = sample(2)?;
    let mut tb = vec![0u8; b.cells.len()];
    step_seq(&b.cells, cb.w[0] as u32, &mut tb);
    let (c, _) = sample(3)?;
    let rc: Vec<u8> = c.cells.iter().rev().copied().collect();
    let (_, cd) = sample(4)?;
    let wa: Vec<i64> = ca.w[1..].to_vec();
    let rwd: Vec<i64> = cd.w[1..].iter().rev().copied().collect();
    let mut lines = Vec::new();
    for len in 1..=max_len {
        let stride = len + gap;
        let base = block_counts(&a.cells, len, stride);
        lines.push(InvarianceLine { comparison: "eta vs T eta", len, result: chi_square_two_sample(&base, &block_counts(&tb, len, stride)) });
        lines.push(InvarianceLine { comparison: "eta vs R eta", len, result: chi_square_two_sample(&base, &block_counts(&rc, len, stride)) });
        lines.push(InvarianceLine {
            comparison: "W vs R W",
            len,
            result: chi_square_two_sample(&block_counts(&wa, len, stride), &block_counts(&rwd, len, stride)),
        });
    }
    Ok(InvarianceReport { n, max_len, gap, lines })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    /// `eta[d][k]` is the value of (T^k eta)_{-d}, `None` where undetermined.
    pub eta: Vec<Vec<Option<u8>>>,
    /// Reconstructed loads `w[d][k]` = (T^k W)_{-d} where known.
    pub w: Vec<Vec<Option<i64>>>,
    /// Columns without a usable zero (site -d).
    pub ambiguous: Vec<i64>,
    /// Columns whose usable range has no odd gap between zeros, so the
    /// column to their left is not guaranteed a zero.
    pub no_odd_gap: Vec<i64>,
}

impl Reconstruction {
    pub fn determined(&self) -> usize {
        self.eta.iter().flatten().filter(|c| c.is_some()).count()
    }

    /// CSV with header `k,n,eta,determined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n,eta,determined\n");
        let steps = self.eta.first().map_or(0, Vec::len);
        for k in 0..steps {
            for (d, col) in self.eta.iter().enumerate() {
                let (v, det) = match col[k] {
                    Some(v) => (v, 1),
                    None => (0, 0),
                };
                out.push_str(&format!("{},{},{},{}\n", k, -(d as i64), v, det));
            }
        }
        out
    }
}

/// Recovers (T^k eta)_n for n = 0, -1, .., -depth from the current at 0.
///
/// Each column is read backwards from its last zero: a zero load forces an
/// empty box, a positive load flips the box between consecutive times. The
/// three local patterns then give the load one site to the left on every time
/// strictly before that zero. Cells after the last zero of a column stay
/// undetermined.
pub fn reconstruct_from_current(record: &CurrentRecord, depth: usize) -> Result<Reconstruction> {
    let len = record.w0.len();
    let mut eta = Vec::with_capacity(depth + 1);
    let mut loads = Vec::with_capacity(depth + 1);
    let mut ambiguous = Vec::new();
    let mut no_odd_gap = Vec::new();
    let mut w: Vec<i64> = record.w0.clone();
    for d in 0..=depth {
        let mut col_w: Vec<Option<i64>> = vec![None; len];
        for (j, &v) in w.iter().enumerate() {
            col_w[j] = Some(v);
        }
        if odd_gap_starts(&w).is_empty() {
            no_odd_gap.push(-(d as i64));
        }
        let last_zero = w.iter().rposition(|&v| v == 0);
        let Some(z) = last_zero else {
            if d == 0 {
                return Err(BbsError::ColumnAmbiguous { column: 0 });
            }
            ambiguous.push(-(d as i64));
            eta.push(vec![None; len]);
            loads.push(col_w);
            w.clear();
            continue;
        };
        let mut col = vec![None; len];
        col[z] = Some(0u8);
        for j in (0..z).rev() {
            col[j] = Some(if w[j] == 0 { 0 } else { 1 - col[j + 1].expect("set above") });
        }
        let mut next = Vec::with_capacity(z);
        for j in 0..z {
            let (a, b) = (col[j].expect("determined"), col[j + 1].expect("determined"));
            let v = match (a, b) {
                (1, _) => w[j] - 1,
                (0, 1) => w[j] + 1,
                _ => {
                    if w[j] != 0 {
                        return Err(BbsError::Domain(format!("record inconsistent at k={j}, n={}", -(d as i64))));
                    }
                    0
                }
            };
            if v < 0 {
                return Err(BbsError::Domain(format!("negative load at k={j}, n={}", -(d as i64) - 1)));
            }
            next.push(v);
        }
        eta.push(col);
        loads.push(col_w);
        w = next;
    }
    Ok(Reconstruction { eta, w: loads, ambiguous, no_odd_gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(bits: &str) -> ParticleWindow {
        ParticleWindow::from_bits(1, bits, Boundary::Vacuum, Boundary::Vacuum).unwrap()
    }

    #[test]
    fn census_examples() {
        assert_eq!(soliton_sizes(&fin("1100")).sizes, vec![2]);
        assert_eq!(soliton_sizes(&fin("110100")).sizes, vec![2, 1]);
        assert!(soliton_sizes(&fin("")).sizes.is_empty());
        assert_eq!(soliton_sizes(&fin("111000101")).sizes, vec![3, 1, 1]);
        assert!(!soliton_sizes(&fin("11")).approximate);
    }

    #[test]
    fn census_open_is_flagged() {
        let w = ParticleWindow::from_bits(1, "0111", Boundary::Vacuum, Boundary::Open).unwrap();
        let c = soliton_sizes(&w);
        assert!(c.approximate);
        assert!(c.sizes.is_empty());
    }

    #[test]
    fn alternating_window_is_critical() {
        let bits: String = (1..=40).map(|n| if n % 2 == 1 { '1' } else { '0' }).collect();
        let w = ParticleWindow::from_bits(1, &bits, Boundary::Vacuum, Boundary::Open).unwrap();
        let r = boundary_report(&w).unwrap();
        assert_eq!(r.k_hat, 1);
        assert_eq!(r.class_guess, ClassGuess::CriticalLike(1));
        assert_eq!(r.n_minus, None);
    }

    #[test]
    fn sparse_window_is_subcritical() {
        let mut cells = vec![0u8; 1000];
        cells[10] = 1;
        cells[700] = 1;
        let r = boundary_report(&ParticleWindow::finite(1, cells)).unwrap();
        assert_eq!(r.class_guess, ClassGuess::SubCriticalLike);
        assert_eq!(r.k_hat, 1);
    }

    #[test]
    fn empty_record() {
        let w = ParticleWindow::finite(-5, vec![0; 6]);
        let r = current_sequence(&w, 6).unwrap();
        assert_eq!(r.w0, vec![0; 7]);
        assert!(r.zero_gaps.iter().all(|&g| g == 1));
        assert_eq!(r.odd_gap_count, 7);
        let rec = reconstruct_from_current(&r, 3).unwrap();
        assert!(rec.eta.iter().flatten().all(|c| c.is_none_or(|v| v == 0)));
    }

    #[test]
    fn particle_left_of_origin() {
        let w = ParticleWindow::finite(-1, vec![1]);
        assert_eq!(current_sequence(&w, 3).unwrap().w0, vec![0, 1, 0, 0]);
        let w = ParticleWindow::finite(0, vec![1]);
        let r = current_sequence(&w, 3).unwrap();
        assert_eq!(r.w0, vec![1, 0, 0, 0]);
        assert_eq!(r.c, vec![0, 1, 1, 1]);
    }

    #[test]
    fn periodic_counterexample_is_ambiguous() {
        // eta_0 = 1 and eta_0 = 0 with the same unit current.
        let a = ParticleWindow::periodic(1, vec![1, 0, 0, 1]);
        let b = ParticleWindow::periodic(-1, vec![1, 0, 0, 1]);
        assert_ne!(a.get(0), b.get(0));
        let ra = current_sequence(&a, 12).unwrap();
        let rb = current_sequence(&b, 12).unwrap();
        assert!(ra.w0.iter().all(|&v| v == 1));
        assert_eq!(ra.w0, rb.w0);
        assert_eq!(
            reconstruct_from_current(&ra, 4),
            Err(BbsError::ColumnAmbiguous { column: 0 })
        );
    }

    #[test]
    fn periodic_phase_with_even_gaps() {
        // eta_0 = 1, eta_1 = eta_2 = 0, eta_3 = 1: the current is 2,0,2,0,..
        let a = ParticleWindow::periodic(0, vec![1, 0, 0, 1]);
        let ra = current_sequence(&a, 12).unwrap();
        assert_eq!(&ra.w0[..4], &[2, 0, 2, 0]);
        let rec = reconstruct_from_current(&ra, 3).unwrap();
        assert_eq!(rec.no_odd_gap, vec![0, -1, -2, -3]);
        assert_eq!(rec.ambiguous, vec![-1, -2, -3]);
        assert_eq!(rec.eta[0][0], Some(1));
    }

    #[test]
    fn round_trip_small() {
        let cells: Vec<u8> = "0110100011101000100110".bytes().map(|b| b - b'0').collect();
        let w = ParticleWindow::finite(-(cells.len() as i64) + 1, cells);
        let k = 30;
        let tr = evolve(&w, k).unwrap();
        let rec = reconstruct_from_current(&CurrentRecord::from_currents(tr.currents.clone()), 10).unwrap();
        assert!(rec.determined() > 0);
        for (d, col) in rec.eta.iter().enumerate() {
            for (j, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    assert_eq!(Some(*v), tr.frames[j].get(-(d as i64)), "k={j} d={d}");
                }
            }
        }
    }
}

//! Multi-step evolution on windows.
//!
//! The kernels run the carrier automaton over a cell slice. The blocked kernel
//! computes the same thing as a two-phase prefix scan over the path: per-block
//! increment and maximum, an exclusive scan of the running maximum across
//! blocks, then an independent fix-up of every block.

use rayon::prelude::*;

use crate::carrier::{max_at, running_max};
use crate::error::{BbsError, Result};
use crate::path::encode;
use crate::transform::{pitman_tinv_truncated, Span};
use crate::window::{Boundary, ParticleWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub enum Backend {
    #[default]
    Sequential,
    Blocked { block: usize },
}


/// Sequential scan. `out[n] = min(1 - cells[n], W_{n-1})`; returns the exit load.
#[inline]
pub fn step_seq(cells: &[u8], w_in: u32, out: &mut [u8]) -> u32 {
    debug_assert_eq!(cells.len(), out.len());
    let mut w = w_in;
    for (o, &c) in out.iter_mut().zip(cells) {
        let drop = u8::from(w > 0) & (c ^ 1);
        *o = drop;
        w = w + c as u32 - drop as u32;
    }
    w
}

#[derive(Clone, Copy, Default)]
struct BlockSummary {
    incr: i64,
    max_prefix: i64,
}

fn summarize(cells: &[u8]) -> BlockSummary {
    let mut s = 0i64;
    let mut mx = i64::MIN;
    for &c in cells {
        s += 1 - 2 * c as i64;
        mx = mx.max(s);
    }
    BlockSummary { incr: s, max_prefix: mx }
}

fn fix_up(cells: &[u8], s_in: i64, m_in: i64, out: &mut [u8]) {
    let mut s = s_in;
    let mut m = m_in;
    for (o, &c) in out.iter_mut().zip(cells) {
        let loaded = m > s;
        *o = u8::from(loaded && c == 0);
        s += 1 - 2 * c as i64;
        m = m.max(s);
    }
}

/// Two-phase blocked scan; bit-identical to [`step_seq`].
pub fn step_blocked(cells: &[u8], w_in: u32, out: &mut [u8], block: usize) -> u32 {
    debug_assert_eq!(cells.len(), out.len());
    let block = block.max(1);
    let summaries: Vec<BlockSummary> = cells.par_chunks(block).map(summarize).collect();
    let mut carries = Vec::with_capacity(summaries.len());
    let mut s = 0i64;
    let mut m = w_in as i64;
    for b in &summaries {
        carries.push((s, m));
        m = m.max(s + b.max_prefix);
        s += b.incr;
    }
    cells
        .par_chunks(block)
        .zip(out.par_chunks_mut(block))
        .zip(carries.par_iter())
        .for_each(|((c, o), &(s_in, m_in))| fix_up(c, s_in, m_in, o));
    (m - s) as u32
}

pub fn step_with(backend: Backend, cells: &[u8], w_in: u32, out: &mut [u8]) -> u32 {
    match backend {
        Backend::Sequential => step_seq(cells, w_in, out),
        Backend::Blocked { block } => step_blocked(cells, w_in, out, block),
    }
}

/// Carrier load entering the first cell of the window.
pub fn entry_load(config: &ParticleWindow) -> Result<u32> {
    match config.left {
        Boundary::Vacuum => Ok(0),
        Boundary::Open => Err(BbsError::CarrierUndefined("open left boundary: the past is unknown")),
        Boundary::Periodic => periodic_entry(&config.cells),
    }
}

/// Load entering a ring at its seam.
pub fn periodic_entry(cells: &[u8]) -> Result<u32> {
    let mut s = 0i64;
    let mut mx = 0i64;
    for &c in cells {
        s += 1 - 2 * c as i64;
        mx = mx.max(s);
    }
    if s < 0 {
        return Err(BbsError::CarrierUndefined("density above one half: the past maximum is infinite"));
    }
    Ok((mx - s).max(0) as u32)
}

/// One step T on a configuration window using the chosen kernel.
pub fn step_window(config: &ParticleWindow, backend: Backend) -> Result<ParticleWindow> {
    let w_in = entry_load(config)?;
    let mut out = vec![0u8; config.len()];
    let w_out = step_with(backend, &config.cells, w_in, &mut out);
    if config.right == Boundary::Vacuum {
        out.extend(std::iter::repeat_n(1, w_out as usize));
    }
    Ok(ParticleWindow { origin: config.origin, cells: out, left: config.left, right: config.right })
}

/// Carrier load (T^j W)_0 at site 0 of a frame.
pub fn load_at_zero(config: &ParticleWindow) -> Result<i64> {
    let path = encode(config)?;
    let m = running_max(&path)?;
    // W_0 = M_0 - S_0 and S_0 = 0.
    max_at(&path, &m, 0).ok_or(BbsError::CarrierUndefined("site 0 lies in an open region"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub frames: Vec<ParticleWindow>,
    /// (T^j W)_0 for each frame.
    pub currents: Vec<i64>,
    pub spans: Vec<Span>,
}

impl EvolutionTrace {
    /// Space-time CSV with header `step,site,eta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,site,eta\n");
        for (k, f) in self.frames.iter().enumerate() {
            for (i, &c) in f.cells.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", k, f.origin + i as i64, c));
            }
        }
        out
    }
}

fn full_span(w: &ParticleWindow) -> Span {
    Span { lo: w.origin, hi: w.end() }
}

/// Frames T^0 eta .. T^k eta. The carrier enters from a vacuum or periodic
/// left boundary, so every frame is exact on its whole window.
pub fn evolve(config: &ParticleWindow, k: usize) -> Result<EvolutionTrace> {
    evolve_with(config, k, Backend::Sequential)
}

pub fn evolve_with(config: &ParticleWindow, k: usize, backend: Backend) -> Result<EvolutionTrace> {
    config.validate()?;
    entry_load(config)?;
    let mut frames = Vec::with_capacity(k + 1);
    let mut currents = Vec::with_capacity(k + 1);
    let mut spans = Vec::with_capacity(k + 1);
    let mut cur = config.clone();
    for j in 0..=k {
        currents.push(load_at_zero(&cur)?);
        spans.push(full_span(&cur));
        let next = if j < k { Some(step_window(&cur, backend)?) } else { None };
        frames.push(cur);
        match next {
            Some(n) => cur = n,
            None => break,
        }
    }
    Ok(EvolutionTrace { frames, currents, spans })
}

/// Frames eta, T^{-1} eta, .., T^{-k} eta. Under an open right boundary each
/// step discards the trailing excursion whose future minimum is unknown.
pub fn evolve_back(config: &ParticleWindow, k: usize) -> Result<EvolutionTrace> {
    config.validate()?;
    let mut frames = vec![config.clone()];
    let mut spans = vec![full_span(config)];
    let mut cur = config.clone();
    for step in 1..=k {
        let (out, span) = pitman_tinv_truncated(&encode(&cur)?)?;
        let frame = crate::path::decode(&out);
        let span = span.intersect(full_span(&frame));
        if span.is_empty() {
            return Err(BbsError::SpanExhausted { step });
        }
        cur = if frame.right == Boundary::Open {
            let hi = (span.hi - frame.origin + 1) as usize;
            ParticleWindow { cells: frame.cells[..hi].to_vec(), ..frame.clone() }
        } else {
            frame.clone()
        };
        frames.push(frame);
        spans.push(span);
    }
    Ok(EvolutionTrace { frames, currents: Vec::new(), spans })
}

/// In-place current simulation on cells for sites `L ..= 0` with an empty
/// carrier entering on the left and an open right edge. Appends (T^j W)_0 for
/// j = 0 .. k-1 to `currents`; `cells` ends holding T^k eta.
pub fn run_currents(cells: &mut Vec<u8>, k: usize, currents: &mut Vec<u32>) {
    let mut buf = vec![0u8; cells.len()];
    let mut lo = 0usize;
    for _ in 0..k {
        while lo < cells.len() && cells[lo] == 0 {
            lo += 1;
        }
        let w = step_seq(&cells[lo..], 0, &mut buf[lo..]);
        currents.push(w);
        std::mem::swap(cells, &mut buf);
    }
    cells[..lo].fill(0);
}

type ByteTable = [[(u8, i8); 256]; 8];

/// Output byte and load change for eight cells entering with load `w < 8`.
fn byte_table() -> &'static ByteTable {
    static TABLE: std::sync::OnceLock<Box<ByteTable>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[(0u8, 0i8); 256]; 8]);
        for w0 in 0..8u32 {
            for b in 0..256u32 {
                let mut w = w0;
                let mut out = 0u8;
                for i in 0..8 {
                    if b >> i & 1 == 1 {
                        w += 1;
                    } else if w > 0 {
                        out |= 1 << i;
                        w -= 1;
                    }
                }
                t[w0 as usize][b as usize] = (out, (w as i32 - w0 as i32) as i8);
            }
        }
        t
    })
}

/// Packs cells eight to a byte (bit i of byte j is cell 8j + i), aligning the
/// last cell to bit 7 of the last byte by padding empty cells on the left.
pub fn pack_right_aligned(cells: &[u8]) -> Vec<u8> {
    let pad = (8 - cells.len() % 8) % 8;
    let mut out = vec![0u8; (cells.len() + pad) / 8];
    for (i, &c) in cells.iter().enumerate() {
        let j = i + pad;
        out[j / 8] |= (c & 1) << (j % 8);
    }
    out
}

/// Same output as [`run_currents`] on bit-packed cells. With `reach = Some(v)`
/// step j only scans the last `v (k - j)` cells, which is the window a
/// disturbance entering from the left at speed below `v` cannot cross in the
/// remaining steps.
pub fn run_currents_packed(cells: &[u8], k: usize, reach: Option<usize>) -> Vec<u32> {
    let table = byte_table();
    let mut a = pack_right_aligned(cells);
    let mut b = vec![0u8; a.len()];
    let n = a.len();
    let mut lo = 0usize;
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        while lo < n && a[lo] == 0 {
            lo += 1;
        }
        if let Some(v) = reach {
            let need = (v * (k - j)).div_ceil(8);
            lo = lo.max(n.saturating_sub(need));
        }
        let mut w = 0u32;
        for (o, &c) in b[lo..].iter_mut().zip(&a[lo..]) {
            if w >= 8 {
                let out = !c;
                *o = out;
                w = w + 2 * c.count_ones() - 8;
            } else {
                let (out, d) = table[w as usize][c as usize];
                *o = out;
                w = (w as i32 + d as i32) as u32;
            }
        }
        out.push(w);
        std::mem::swap(&mut a, &mut b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::automaton_step;

    #[test]
    fn blocked_matches_sequential() {
        let mut x: u64 = 0x9e3779b97f4a7c15;
        let cells: Vec<u8> = (0..10_000)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                u8::from(x % 10 < 4)
            })
            .collect();
        for block in [1, 7, 64, 1000, 20_000] {
            let mut a = vec![0; cells.len()];
            let mut b = vec![0; cells.len()];
            let wa = step_seq(&cells, 3, &mut a);
            let wb = step_blocked(&cells, 3, &mut b, block);
            assert_eq!(a, b);
            assert_eq!(wa, wb);
        }
    }

    #[test]
    fn empty_evolution() {
        let t = evolve(&ParticleWindow::finite(-3, vec![0; 8]), 10).unwrap();
        assert_eq!(t.frames.len(), 11);
        assert!(t.currents.iter().all(|&c| c == 0));
        assert!(t.frames.iter().all(|f| f.particles() == 0));
    }

    #[test]
    fn single_particle_walks() {
        let t = evolve(&ParticleWindow::finite(1, vec![1]), 3).unwrap();
        assert_eq!(t.frames[3].particle_sites(), vec![4]);
        assert!(t.currents.iter().all(|&c| c == 0));
    }

    #[test]
    fn particle_left_of_origin_crosses_on_second_step() {
        let t = evolve(&ParticleWindow::finite(-1, vec![1]), 4).unwrap();
        assert_eq!(t.currents, vec![0, 1, 0, 0, 0]);
        let t = evolve(&ParticleWindow::finite(0, vec![1]), 3).unwrap();
        assert_eq!(t.currents, vec![1, 0, 0, 0]);
    }

    #[test]
    fn periodic_returns_after_period() {
        let w = ParticleWindow::periodic(1, vec![1, 0, 0]);
        let t = evolve(&w, 3).unwrap();
        assert_eq!(t.frames[3].cells, w.cells);
        assert_eq!(t.frames[1].cells, vec![0, 1, 0]);
    }

    #[test]
    fn step_window_matches_automaton() {
        let w = ParticleWindow::finite(1, vec![1, 1, 0, 1, 0, 0, 1]);
        let t = step_window(&w, Backend::Sequential).unwrap();
        assert_eq!(t.cells, automaton_step(&w.cells));
    }

    #[test]
    fn run_currents_matches_trace() {
        let cells: Vec<u8> = "0110100111000101101100".bytes().map(|b| b - b'0').collect();
        let origin = 1 - cells.len() as i64;
        let w = ParticleWindow::new(origin, cells.clone(), Boundary::Vacuum, Boundary::Open).unwrap();
        let t = evolve(&w, 12).unwrap();
        let mut c = cells;
        let mut cur = Vec::new();
        run_currents(&mut c, 12, &mut cur);
        let expect: Vec<u32> = t.currents[..12].iter().map(|&v| v as u32).collect();
        assert_eq!(cur, expect);
        assert_eq!(c, t.frames[12].cells);
    }

    #[test]
    fn inverse_evolution_exhausts_on_open_right() {
        let w = ParticleWindow::new(1, vec![0, 0, 0, 0], Boundary::Vacuum, Boundary::Open).unwrap();
        assert!(matches!(evolve_back(&w, 10), Err(BbsError::SpanExhausted { .. })));
    }

    #[test]
    fn packed_currents_match() {
        let mut x: u64 = 12345;
        for len in [1usize, 7, 8, 9, 64, 301, 2000] {
            for density in [2u64, 4, 6] {
                let cells: Vec<u8> = (0..len)
                    .map(|_| {
                        x ^= x << 13;
                        x ^= x >> 7;
                        x ^= x << 17;
                        u8::from(x % 10 < density)
                    })
                    .collect();
                let mut c = cells.clone();
                let mut cur = Vec::new();
                run_currents(&mut c, 50, &mut cur);
                assert_eq!(run_currents_packed(&cells, 50, None), cur, "len {len}");
                assert_eq!(run_currents_packed(&cells, 50, Some(len)), cur, "len {len}");
            }
        }
    }
}

//! Pitman's transform T S = 2M - S - 2M_0 and its dual T^{-1} S = 2I - S - 2I_0.

use crate::carrier::{future_min, max_at, min_at, running_max};
use crate::error::{BbsError, Result};
use crate::path::{decode, encode, reverse, PathWindow};
use crate::window::{Boundary, ParticleWindow};

/// Inclusive site interval on which a result is exact. `lo > hi` means empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub lo: i64,
    pub hi: i64,
}

impl Span {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, site: i64) -> bool {
        site >= self.lo && site <= self.hi
    }

    pub fn intersect(&self, other: Span) -> Span {
        Span { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }
}

/// One step of the box-ball system on the path. A vacuum right boundary grows
/// the window by the load the carrier still holds at its right edge.
pub fn pitman_t(path: &PathWindow) -> Result<PathWindow> {
    let m = running_max(path)?;
    let m0 = max_at(path, &m, 0).ok_or(BbsError::AnchorUnresolvable)?;
    let mut s: Vec<i64> = m.iter().zip(&path.s).map(|(m, s)| 2 * m - s - 2 * m0).collect();
    if path.right == Boundary::Vacuum {
        let last_s = path.s[path.s.len() - 1];
        let last_m = m[m.len() - 1];
        let load = last_m - last_s;
        for j in 1..=load {
            s.push(2 * last_m - (last_s + j) - 2 * m0);
        }
    }
    Ok(PathWindow { start: path.start, s, left: path.left, right: path.right })
}

/// Exact inverse step. A vacuum left boundary grows the window by the load of
/// the reverse carrier V = S - I at the left edge.
pub fn pitman_tinv(path: &PathWindow) -> Result<PathWindow> {
    let i = future_min(path, false)?;
    Ok(apply_inverse(path, &i))
}

fn apply_inverse(path: &PathWindow, i: &[i64]) -> PathWindow {
    let i0 = min_at(path, i, 0).expect("anchored path determines I_0");
    let mut s: Vec<i64> = i.iter().zip(&path.s).map(|(i, s)| 2 * i - s - 2 * i0).collect();
    let mut start = path.start;
    if path.left == Boundary::Vacuum {
        let first_s = path.s[0];
        let first_i = i[0];
        let load = first_s - first_i;
        let mut prefix: Vec<i64> = (1..=load).rev().map(|j| 2 * first_i - (first_s - j) - 2 * i0).collect();
        start -= load;
        prefix.append(&mut s);
        s = prefix;
    }
    PathWindow { start, s, left: path.left, right: path.right }
}

/// Inverse step that accepts an open right boundary by taking the future
/// minimum from window data. The returned span holds the sites where the
/// output cells are exact provided the path beyond the window never drops
/// below the minimum recorded before its final excursion: the trailing
/// stretch whose window future-minimum equals the last value is discarded.
pub fn pitman_tinv_truncated(path: &PathWindow) -> Result<(PathWindow, Span)> {
    if path.right != Boundary::Open {
        let out = pitman_tinv(path)?;
        let span = Span { lo: out.origin(), hi: out.end() };
        return Ok((out, span));
    }
    let i = future_min(path, true)?;
    let last = path.s[path.s.len() - 1];
    let tau = i.iter().rposition(|&v| v < last).map(|k| path.start + k as i64);
    let out = apply_inverse(path, &i);
    let span = match tau {
        Some(t) => Span { lo: out.origin(), hi: t },
        None => Span { lo: 1, hi: 0 },
    };
    Ok((out, span))
}

/// T^{-1} computed as R T R.
pub fn rtr(path: &PathWindow) -> Result<PathWindow> {
    Ok(reverse(&pitman_t(&reverse(path))?))
}

/// One forward step on a configuration, through the path encoding.
pub fn step_config(config: &ParticleWindow) -> Result<ParticleWindow> {
    Ok(decode(&pitman_t(&encode(config)?)?))
}

/// One inverse step on a configuration, through the path encoding.
pub fn step_back_config(config: &ParticleWindow) -> Result<ParticleWindow> {
    Ok(decode(&pitman_tinv(&encode(config)?)?))
}

/// Literal cell-by-cell automaton: T eta_n = min(1 - eta_n, W_{n-1}), with the
/// carrier entering empty and dropping its remaining load to the right.
pub fn automaton_step(cells: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(cells.len() + cells.len() / 2);
    let mut w = 0i64;
    for &c in cells {
        let load_before = w;
        out.push(u8::from(c == 0 && load_before > 0));
        w = crate::carrier::wupdate(w, c);
    }
    while w > 0 {
        out.push(1);
        w -= 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(origin: i64, bits: &str) -> ParticleWindow {
        ParticleWindow::from_bits(origin, bits, Boundary::Vacuum, Boundary::Vacuum).unwrap()
    }

    fn padded_bits(w: &ParticleWindow, lo: i64, hi: i64) -> String {
        w.slice(lo, hi).unwrap().iter().map(|&c| if c == 1 { '1' } else { '0' }).collect()
    }

    #[test]
    fn two_soliton_moves() {
        let t = step_config(&fin(1, "110000")).unwrap();
        assert_eq!(padded_bits(&t, 1, 6), "001100");
    }

    #[test]
    fn alternating_maps_to_complement() {
        let w = ParticleWindow::from_bits(1, "1010101010", Boundary::Vacuum, Boundary::Open).unwrap();
        let t = step_config(&w).unwrap();
        assert_eq!(t.bits(), "0101010101");
    }

    #[test]
    fn empty_is_fixed() {
        let t = step_config(&fin(-2, "00000")).unwrap();
        assert!(t.cells.iter().all(|&c| c == 0));
    }

    #[test]
    fn inverse_recovers_two_soliton() {
        let w = fin(1, "110000");
        let back = step_back_config(&step_config(&w).unwrap()).unwrap();
        assert_eq!(padded_bits(&back, -3, 10), padded_bits(&w, -3, 10));
    }

    #[test]
    fn inverse_is_rtr() {
        let p = encode(&fin(-3, "1101000110")).unwrap();
        let a = pitman_tinv(&p).unwrap();
        let b = rtr(&p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn open_right_inverse_is_undefined() {
        let w = ParticleWindow::from_bits(1, "10", Boundary::Vacuum, Boundary::Open).unwrap();
        let p = encode(&w).unwrap();
        assert!(matches!(pitman_tinv(&p), Err(BbsError::InverseUndefined(_))));
    }

    #[test]
    fn automaton_agrees_on_small_case() {
        let w = fin(1, "1101001");
        let t = step_config(&w).unwrap();
        let a = automaton_step(&w.cells);
        assert_eq!(padded_bits(&t, 1, a.len() as i64), a.iter().map(|&c| if c == 1 { '1' } else { '0' }).collect::<String>());
    }

    #[test]
    fn periodic_three_cycle() {
        let mut w = ParticleWindow::periodic(1, vec![1, 0, 0]);
        for _ in 0..3 {
            w = step_config(&w).unwrap();
        }
        assert_eq!(w.cells, vec![1, 0, 0]);
    }
}

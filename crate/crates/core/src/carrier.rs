//! Carrier W = M - S, its local time, the future minimum I, and the maps Phi, Psi.

use crate::error::{BbsError, Result};
use crate::path::PathWindow;
use crate::window::Boundary;

/// Carrier data aligned with the sites of a [`PathWindow`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarrierWindow {
    pub start: i64,
    pub w: Vec<i64>,
    /// Local time at zero, anchored at site 0.
    pub ell: Vec<i64>,
    /// Running maximum M.
    pub m: Vec<i64>,
    /// Future minimum I, when requested.
    pub i: Option<Vec<i64>>,
}

impl CarrierWindow {
    pub fn end(&self) -> i64 {
        self.start + self.w.len() as i64 - 1
    }

    pub fn at(&self, site: i64) -> i64 {
        self.w[(site - self.start) as usize]
    }

    /// Reverse carrier V = S - I (needs the future minimum).
    pub fn reverse_carrier(&self, path: &PathWindow) -> Option<Vec<i64>> {
        self.i.as_ref().map(|i| path.s.iter().zip(i).map(|(s, i)| s - i).collect())
    }
}

/// Running maximum at the first stored site, from the left boundary semantics.
pub fn entry_max(path: &PathWindow) -> Result<i64> {
    match path.left {
        Boundary::Vacuum => Ok(path.s[0]),
        Boundary::Periodic => {
            let d = path.drift();
            if d < 0 {
                return Err(BbsError::CarrierUndefined(
                    "density above one half: the past maximum is infinite",
                ));
            }
            let best = path.s[1..].iter().max().copied().unwrap_or(path.s[0]) - d;
            Ok(best.max(path.s[0]))
        }
        Boundary::Open => Err(BbsError::CarrierUndefined("open left boundary: the past is unknown")),
    }
}

/// Future minimum at the last stored site, from the right boundary semantics.
/// Open right boundaries use window data only.
pub fn exit_min(path: &PathWindow, allow_open: bool) -> Result<i64> {
    let last = path.s[path.s.len() - 1];
    match path.right {
        Boundary::Vacuum => Ok(last),
        Boundary::Periodic => {
            let d = path.drift();
            if d < 0 {
                return Err(BbsError::InverseUndefined(
                    "density above one half: the future minimum is minus infinity",
                ));
            }
            let best = path.s[1..].iter().min().copied().unwrap_or(last) + d;
            Ok(best.min(last))
        }
        Boundary::Open if allow_open => Ok(last),
        Boundary::Open => Err(BbsError::InverseUndefined("open right boundary: the future is unknown")),
    }
}

pub fn running_max(path: &PathWindow) -> Result<Vec<i64>> {
    let mut cur = entry_max(path)?;
    Ok(path
        .s
        .iter()
        .map(|&v| {
            cur = cur.max(v);
            cur
        })
        .collect())
}

pub fn future_min(path: &PathWindow, allow_open: bool) -> Result<Vec<i64>> {
    let mut cur = exit_min(path, allow_open)?;
    let mut out = vec![0; path.s.len()];
    for (o, &v) in out.iter_mut().zip(&path.s).rev() {
        cur = cur.min(v);
        *o = cur;
    }
    Ok(out)
}

/// Running maximum at an arbitrary site, extending through the boundaries.
pub fn max_at(path: &PathWindow, m: &[i64], site: i64) -> Option<i64> {
    if path.contains(site) {
        return Some(m[(site - path.start) as usize]);
    }
    if path.is_periodic() {
        let p = path.cells_len() as i64;
        let shift = (site - path.origin()).div_euclid(p);
        let base = site - shift * p;
        return Some(m[(base - path.start) as usize] + shift * path.drift());
    }
    if site < path.start {
        // Vacuum to the left: the path increases, so the maximum is the value.
        return path.value(site);
    }
    let v = path.value(site)?;
    Some(m[m.len() - 1].max(v))
}

/// Future minimum at an arbitrary site, extending through the boundaries.
pub fn min_at(path: &PathWindow, i: &[i64], site: i64) -> Option<i64> {
    if path.contains(site) {
        return Some(i[(site - path.start) as usize]);
    }
    if path.is_periodic() {
        let p = path.cells_len() as i64;
        let shift = (site - path.origin()).div_euclid(p);
        let base = site - shift * p;
        return Some(i[(base - path.start) as usize] + shift * path.drift());
    }
    if site > path.end() {
        return path.value(site);
    }
    let v = path.value(site)?;
    Some(i[0].min(v))
}

/// The minimal carrier W = M - S together with its local time.
pub fn carrier(path: &PathWindow) -> Result<CarrierWindow> {
    let m = running_max(path)?;
    let w: Vec<i64> = m.iter().zip(&path.s).map(|(m, s)| m - s).collect();
    let m0 = max_at(path, &m, 0).ok_or(BbsError::AnchorUnresolvable)?;
    let ell = m.iter().map(|v| v - m0).collect();
    Ok(CarrierWindow { start: path.start, w, ell, m, i: None })
}

/// Carrier with the future minimum filled in.
pub fn carrier_with_future(path: &PathWindow, allow_open: bool) -> Result<CarrierWindow> {
    let mut c = carrier(path)?;
    c.i = Some(future_min(path, allow_open)?);
    Ok(c)
}

/// Carrier recursion: pick up at a particle, drop at an empty box when loaded.
#[inline]
pub fn wupdate(w: i64, eta: u8) -> i64 {
    if eta == 1 {
        w + 1
    } else if w > 0 {
        w - 1
    } else {
        0
    }
}

/// Local time of a carrier-like sequence: count of flat steps at zero,
/// anchored to vanish at `anchor_site`.
pub fn local_time(start: i64, y: &[i64], anchor_site: i64) -> Vec<i64> {
    let mut ell = Vec::with_capacity(y.len());
    let mut acc = 0i64;
    ell.push(0);
    for p in y.windows(2) {
        if p[0] == 0 && p[1] == 0 {
            acc += 1;
        }
        ell.push(acc);
    }
    let idx = anchor_site - start;
    if idx >= 0 && (idx as usize) < y.len() {
        let off = ell[idx as usize];
        for v in ell.iter_mut() {
            *v -= off;
        }
    }
    ell
}

/// Whether `y` is a carrier path: nonnegative, steps in {-1, 0, 1}, flat only at zero.
pub fn is_carrier(y: &[i64]) -> bool {
    y.iter().all(|&v| v >= 0)
        && y.windows(2).all(|p| match p[1] - p[0] {
            1 | -1 => true,
            0 => p[0] == 0,
            _ => false,
        })
}

/// Configuration read off a carrier: a particle wherever the carrier steps up.
pub fn phi_cells(y: &[i64]) -> Vec<u8> {
    y.windows(2).map(|p| u8::from(p[1] == p[0] + 1)).collect()
}

/// Configuration read off a carrier: a particle wherever the carrier steps down.
pub fn psi_cells(y: &[i64]) -> Vec<u8> {
    y.windows(2).map(|p| u8::from(p[1] == p[0] - 1)).collect()
}

/// Path Phi(Y)_n = l(Y)_n - Y_n + Y_0 on sites `start ..`; site 0 must be stored.
pub fn phi_path(start: i64, y: &[i64], left: Boundary, right: Boundary) -> Result<PathWindow> {
    let idx0 = -start;
    if idx0 < 0 || idx0 as usize >= y.len() {
        return Err(BbsError::AnchorUnresolvable);
    }
    let y0 = y[idx0 as usize];
    let ell = local_time(start, y, 0);
    let s = ell.iter().zip(y).map(|(l, v)| l - v + y0).collect();
    PathWindow::new(start, s, left, right)
}

/// Path Psi(Y)_n = l(Y)_n + Y_n - Y_0 on sites `start ..`; site 0 must be stored.
pub fn psi_path(start: i64, y: &[i64], left: Boundary, right: Boundary) -> Result<PathWindow> {
    let idx0 = -start;
    if idx0 < 0 || idx0 as usize >= y.len() {
        return Err(BbsError::AnchorUnresolvable);
    }
    let y0 = y[idx0 as usize];
    let ell = local_time(start, y, 0);
    let s = ell.iter().zip(y).map(|(l, v)| l + v - y0).collect();
    PathWindow::new(start, s, left, right)
}

/// True when no carrier with the same Phi-image lies below `w`. Lowering the
/// entry load by one gives another carrier with the same up-steps unless the
/// boundary rules it out: a vacuum past forces an empty entry, and a periodic
/// carrier that touches zero would merge with the lowered one and lose its
/// periodicity. An open past certifies nothing.
pub fn minimality_certified(w: &[i64], left: Boundary) -> bool {
    match (w.first(), left) {
        (None, _) => true,
        (Some(&w0), Boundary::Vacuum) => w0 == 0,
        (Some(_), Boundary::Periodic) => w.contains(&0),
        (Some(_), Boundary::Open) => false,
    }
}

/// Phi^{-1}: the minimal carrier, checked against its Phi-image and for minimality.
pub fn phi_inverse_minimal(path: &PathWindow) -> Result<CarrierWindow> {
    let c = carrier(path)?;
    let cells: Vec<u8> = path.s.windows(2).map(|p| u8::from(p[1] < p[0])).collect();
    debug_assert_eq!(phi_cells(&c.w), cells);
    if !minimality_certified(&c.w, path.left) {
        return Err(BbsError::CarrierUndefined(
            "window too short to certify the minimal carrier",
        ));
    }
    Ok(c)
}

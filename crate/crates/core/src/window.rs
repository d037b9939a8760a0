//! Finite windows of a 0/1 particle configuration.
//!
//! A window stores cells for sites `origin ..= origin + len - 1`. The boundary
//! flags say what lies outside: `Vacuum` means empty boxes, `Periodic` means the
//! window is one period of a periodic configuration, `Open` means unknown.

use std::fmt;
use std::str::FromStr;

use crate::error::{BbsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Vacuum,
    Periodic,
    Open,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Vacuum => "vacuum",
            Boundary::Periodic => "periodic",
            Boundary::Open => "open",
        }
    }
}

impl FromStr for Boundary {
    type Err = BbsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "vacuum" => Ok(Boundary::Vacuum),
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(BbsError::Parse(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParticleWindow {
    pub origin: i64,
    pub cells: Vec<u8>,
    pub left: Boundary,
    pub right: Boundary,
}

impl ParticleWindow {
    pub fn new(origin: i64, cells: Vec<u8>, left: Boundary, right: Boundary) -> Result<Self> {
        let w = ParticleWindow { origin, cells, left, right };
        w.validate()?;
        Ok(w)
    }

    /// Vacuum on both sides: a finite-support configuration.
    pub fn finite(origin: i64, cells: Vec<u8>) -> Self {
        ParticleWindow { origin, cells, left: Boundary::Vacuum, right: Boundary::Vacuum }
    }

    pub fn periodic(origin: i64, cells: Vec<u8>) -> Self {
        ParticleWindow { origin, cells, left: Boundary::Periodic, right: Boundary::Periodic }
    }

    pub fn from_bits(origin: i64, bits: &str, left: Boundary, right: Boundary) -> Result<Self> {
        let cells = bits
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(BbsError::Parse(format!("cell '{c}' is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(origin, cells, left, right)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.iter().any(|&c| c > 1) {
            return Err(BbsError::InvalidWindow("cells must be 0 or 1".into()));
        }
        let lp = self.left == Boundary::Periodic;
        let rp = self.right == Boundary::Periodic;
        if lp != rp {
            return Err(BbsError::InvalidWindow(
                "periodic boundary must be declared on both sides".into(),
            ));
        }
        if lp && self.cells.is_empty() {
            return Err(BbsError::InvalidWindow("periodic window needs at least one cell".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Last stored site (equals `origin - 1` for an empty window).
    pub fn end(&self) -> i64 {
        self.origin + self.cells.len() as i64 - 1
    }

    pub fn is_periodic(&self) -> bool {
        self.left == Boundary::Periodic
    }

    pub fn particles(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Cell value at `site`, using the boundary semantics outside the window.
    /// Returns `None` where the value is unknown (open side).
    pub fn get(&self, site: i64) -> Option<u8> {
        let n = self.cells.len() as i64;
        if site >= self.origin && site <= self.end() {
            return Some(self.cells[(site - self.origin) as usize]);
        }
        if self.is_periodic() {
            let idx = (site - self.origin).rem_euclid(n);
            return Some(self.cells[idx as usize]);
        }
        let side = if site < self.origin { self.left } else { self.right };
        match side {
            Boundary::Vacuum => Some(0),
            _ => None,
        }
    }

    /// Cells on `lo ..= hi`, filling outside sites from the boundary semantics.
    pub fn slice(&self, lo: i64, hi: i64) -> Option<Vec<u8>> {
        (lo..=hi).map(|s| self.get(s)).collect()
    }

    /// Sites holding a particle, in increasing order.
    pub fn particle_sites(&self) -> Vec<i64> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1)
            .map(|(i, _)| self.origin + i as i64)
            .collect()
    }

    /// Drops empty cells at a vacuum left edge and a vacuum right edge.
    pub fn trimmed(&self) -> ParticleWindow {
        if self.is_periodic() {
            return self.clone();
        }
        let mut lo = 0;
        let mut hi = self.cells.len();
        if self.left == Boundary::Vacuum {
            while lo < hi && self.cells[lo] == 0 {
                lo += 1;
            }
        }
        if self.right == Boundary::Vacuum {
            while hi > lo && self.cells[hi - 1] == 0 {
                hi -= 1;
            }
        }
        ParticleWindow {
            origin: self.origin + lo as i64,
            cells: self.cells[lo..hi].to_vec(),
            left: self.left,
            right: self.right,
        }
    }

    /// Same configuration with boxes `lo ..= hi` stored explicitly. Outside
    /// sites must be determined by the boundary semantics.
    pub fn padded(&self, lo: i64, hi: i64) -> Result<ParticleWindow> {
        let lo = lo.min(self.origin);
        let hi = hi.max(self.end());
        let cells = self
            .slice(lo, hi)
            .ok_or_else(|| BbsError::InvalidWindow("padding into an open side".into()))?;
        Ok(ParticleWindow { origin: lo, cells, left: self.left, right: self.right })
    }

    pub fn bits(&self) -> String {
        self.cells.iter().map(|&c| if c == 1 { '1' } else { '0' }).collect()
    }

    /// Textual window format: a header line followed by the 0/1 string.
    pub fn to_text(&self) -> String {
        format!(
            "origin={} left={} right={}\n{}\n",
            self.origin,
            self.left.as_str(),
            self.right.as_str(),
            self.bits()
        )
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| BbsError::Parse("empty window text".into()))?;
        let mut origin = None;
        let mut left = None;
        let mut right = None;
        for tok in header.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| BbsError::Parse(format!("expected key=value, got '{tok}'")))?;
            match k {
                "origin" => {
                    origin = Some(v.parse::<i64>().map_err(|e| BbsError::Parse(e.to_string()))?)
                }
                "left" => left = Some(v.parse::<Boundary>()?),
                "right" => right = Some(v.parse::<Boundary>()?),
                other => return Err(BbsError::Parse(format!("unknown header key '{other}'"))),
            }
        }
        let bits: String = lines.collect::<Vec<_>>().concat();
        Self::from_bits(
            origin.ok_or_else(|| BbsError::Parse("missing origin".into()))?,
            &bits,
            left.unwrap_or(Boundary::Vacuum),
            right.unwrap_or(Boundary::Vacuum),
        )
    }
}

impl fmt::Display for ParticleWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let w = ParticleWindow::from_bits(-3, "1101001", Boundary::Vacuum, Boundary::Open).unwrap();
        let back = ParticleWindow::parse_text(&w.to_text()).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn periodic_needs_both_sides() {
        let r = ParticleWindow::new(0, vec![1, 0], Boundary::Periodic, Boundary::Vacuum);
        assert!(matches!(r, Err(BbsError::InvalidWindow(_))));
    }

    #[test]
    fn get_uses_boundaries() {
        let w = ParticleWindow::periodic(1, vec![1, 0, 0]);
        assert_eq!(w.get(4), Some(1));
        assert_eq!(w.get(-2), Some(1));
        assert_eq!(w.get(0), Some(0));
        let v = ParticleWindow::from_bits(1, "11", Boundary::Vacuum, Boundary::Open).unwrap();
        assert_eq!(v.get(-5), Some(0));
        assert_eq!(v.get(3), None);
    }

    #[test]
    fn trimming_keeps_configuration() {
        let w = ParticleWindow::finite(-2, vec![0, 0, 1, 0, 1, 0]);
        let t = w.trimmed();
        assert_eq!(t.origin, 0);
        assert_eq!(t.cells, vec![1, 0, 1]);
        for s in -5..8 {
            assert_eq!(w.get(s), t.get(s));
        }
    }
}

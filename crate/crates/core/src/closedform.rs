//! Closed-form constants, moment generating functions and rate functions of
//! the current and tagged-particle limit theorems.

use crate::error::{BbsError, Result};
use crate::gen::{perron_condition, ChainSpec};
use crate::linalg::{perron_right, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidConstants {
    pub p: f64,
    /// Mean current.
    pub mu: f64,
    /// Current variance.
    pub sigma2: f64,
    /// Tagged-particle speed.
    pub v: f64,
    /// LIFO diffusion constant.
    pub sigma_l2: f64,
}

impl IidConstants {
    /// Stationary carrier law ((1-2p)/(1-p)) (p/(1-p))^x.
    pub fn pi(&self, x: u64) -> f64 {
        let p = self.p;
        (1.0 - 2.0 * p) / (1.0 - p) * (p / (1.0 - p)).powi(x as i32)
    }

    pub fn pi_vec(&self, len: usize) -> Vec<f64> {
        (0..len as u64).map(|x| self.pi(x)).collect()
    }

    /// E exp(theta W_0), infinite for theta >= log((1-p)/p).
    pub fn mgf_w(&self, theta: f64) -> f64 {
        let p = self.p;
        if theta >= ((1.0 - p) / p).ln() {
            return f64::INFINITY;
        }
        (1.0 - 2.0 * p) / (1.0 - p - p * theta.exp())
    }

    /// Closed-form current rate function.
    pub fn rate_current(&self, x: f64) -> f64 {
        let p = self.p;
        if x < 0.0 {
            return f64::INFINITY;
        }
        let lead = if x == 0.0 { 0.0 } else { x * ((1.0 - p) * x / (p * (1.0 + x))).ln() };
        lead + ((1.0 - p) / ((1.0 - 2.0 * p) * (1.0 + x))).ln()
    }

    /// Palm law of one LIFO increment, m odd.
    pub fn lifo_increment_pmf(&self, m: u64) -> f64 {
        if m.is_multiple_of(2) {
            return 0.0;
        }
        let p = self.p;
        let k = m.div_ceil(2);
        (ln_binom(m, k) - (m as f64).ln() + k as f64 * (1.0 - p).ln() + (k - 1) as f64 * p.ln()).exp()
    }

    /// E exp(theta (X^L_n - X^L_{n-1})) under the Palm measure.
    pub fn mgf_lifo(&self, theta: f64) -> f64 {
        let p = self.p;
        let cap = -0.5 * (4.0 * p * (1.0 - p)).ln();
        if theta > cap {
            return f64::INFINITY;
        }
        let disc = (1.0 - 4.0 * p * (1.0 - p) * (2.0 * theta).exp()).max(0.0);
        (1.0 - disc.sqrt()) / (2.0 * p * theta.exp())
    }
}

fn ln_binom(n: u64, k: u64) -> f64 {
    statrs::function::factorial::ln_binomial(n, k)
}

pub fn iid_constants(p: f64) -> Result<IidConstants> {
    if !(p > 0.0 && p < 0.5) {
        return Err(BbsError::Domain(format!("p={p} must lie in (0, 1/2)")));
    }
    let d = 1.0 - 2.0 * p;
    Ok(IidConstants {
        p,
        mu: p / d,
        sigma2: p * (1.0 - p) / (d * d),
        v: 1.0 / d,
        sigma_l2: 4.0 * p * (1.0 - p) / (d * d * d),
    })
}

/// Constants of the two-state Markov configuration. Skeleton states are
/// ordered `00, 0, 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovConstants {
    pub p0: f64,
    pub p1: f64,
    pub rho: f64,
    pub q0: f64,
    pub q1: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub var_w0: f64,
    /// Cov(W_0, (TW)_0).
    pub cov1: f64,
    pub lifo_speed: f64,
    pub pstar: Matrix,
    pub pi_x: [f64; 3],
}

impl MarkovConstants {
    /// P(W_0 = m).
    pub fn w0_law(&self, m: u64) -> f64 {
        let (p0, p1) = (self.p0, self.p1);
        if m == 0 {
            (1.0 - p0 - p1) / ((1.0 - p0) * (1.0 + p0 - p1))
        } else {
            p0 * (1.0 - p0 + p1) * (1.0 - p0 - p1) / ((1.0 - p0).powi(2) * (1.0 + p0 - p1))
                * (p1 / (1.0 - p0)).powi(m as i32 - 1)
        }
    }

    /// Invariant law of ((T^k eta)_0, (T^k W)_0) on Sigma.
    pub fn pi_sigma(&self, i: u8, m: u64) -> f64 {
        let (q0, q1) = (self.q0, self.q1);
        match (i, m) {
            (0, 0) => (1.0 - q0 * q1) / (1.0 + q0),
            (1, 0) => 0.0,
            (0, m) => q0 * (1.0 - q1) / (1.0 + q0) * q1.powi(m as i32),
            (_, m) => q0 * (1.0 - q1) / (1.0 + q0) * q1.powi(m as i32 - 1),
        }
    }

    /// Transition probability (i,l) -> (j,m) of the eta/current chain.
    pub fn transition(&self, (i, l): (u8, u64), (j, m): (u8, u64)) -> f64 {
        let (q0, q1) = (self.q0, self.q1);
        if (i, l) == (1, 0) || (j, m) == (1, 0) {
            return 0.0;
        }
        if (i, l) == (0, 0) {
            if (j, m) == (0, 0) {
                return 1.0 - q0;
            }
            let qj = if j == 0 { q0 } else { q1 };
            return (1.0 - qj) * q0 * (1.0 - q1) / (1.0 - q0 * q1) * q1.powi(m as i32 - j as i32);
        }
        if l >= 1 && j == 1 - i && m >= 1 {
            return (q0 * q1).powi(i as i32) * (1.0 - q1) * q1.powi(m as i32 - 1);
        }
        if i == 1 && l >= 1 && (j, m) == (0, 0) {
            return 1.0 - q0 * q1;
        }
        0.0
    }

    /// Cov(W_0, (T^k W)_0), k >= 1.
    pub fn autocov(&self, k: u32) -> f64 {
        if k == 0 {
            return self.var_w0;
        }
        self.cov1 * (-self.q0).powi(k as i32 - 1)
    }

    /// Moment generating function of the current given skeleton state y.
    pub fn mgf_given(&self, y: usize, theta: f64) -> f64 {
        if y == 0 {
            return 1.0;
        }
        let q1 = self.q1;
        if theta >= -q1.ln() {
            return f64::INFINITY;
        }
        (1.0 - q1) * theta.exp() / (1.0 - q1 * theta.exp())
    }
}

pub fn markov_constants(p0: f64, p1: f64) -> Result<MarkovConstants> {
    if !(p0 > 0.0 && p0 < 1.0) || !(0.0..1.0).contains(&p1) {
        return Err(BbsError::Domain(format!("need p0 in (0,1), p1 in [0,1); got {p0}, {p1}")));
    }
    if p0 + p1 >= 1.0 {
        return Err(BbsError::Supercritical(p0 + p1));
    }
    let rho = p0 / (1.0 - p1 + p0);
    let q0 = p0 / (1.0 - p1);
    let q1 = p1 / (1.0 - p0);
    let mu = p0 * (1.0 - p0 + p1) / ((1.0 + p0 - p1) * (1.0 - p0 - p1));
    let sigma2 = q0 * ((1.0 - q0) * (1.0 + q1).powi(2) + 2.0 * q1 * (1.0 + q0).powi(2))
        / ((1.0 + q0).powi(3) * (1.0 - q1).powi(2));
    let den = (1.0 + q0).powi(2) * (1.0 - q1).powi(2);
    let var_w0 = q0 * (1.0 + q1).powi(2) / den;
    let cov1 = q0 * (q1 * (1.0 + q0).powi(2) - q0 * (1.0 + q1).powi(2)) / den;
    let r = 1.0 - q0 * q1;
    let pstar = Matrix::from_rows(&[
        vec![1.0 - q0, (1.0 - q0) * q0 * q1 / r, (1.0 - q1) * q0 / r],
        vec![0.0, 0.0, 1.0],
        vec![r, q0 * q1, 0.0],
    ]);
    let pi_x = [r / (1.0 + q0), q0 * q1 / (1.0 + q0), q0 / (1.0 + q0)];
    Ok(MarkovConstants {
        p0,
        p1,
        rho,
        q0,
        q1,
        mu,
        sigma2,
        var_w0,
        cov1,
        lifo_speed: (1.0 - p0 + p1) / (1.0 - p0 - p1),
        pstar,
        pi_x,
    })
}

/// Largest eigenvalue of P_theta(x,y) = P(x,y) weight(y).
pub fn tilted_eigen_weighted(p: &Matrix, weight: &[f64]) -> Result<f64> {
    if weight.iter().any(|w| !w.is_finite()) {
        return Ok(f64::INFINITY);
    }
    let n = p.n;
    let mut t = p.clone();
    for x in 0..n {
        for y in 0..n {
            t.set(x, y, p.get(x, y) * weight[y]);
        }
    }
    Ok(perron_right(&t, 1e-13, 1_000_000)?.lambda)
}

/// Upsilon(P_theta) with P_theta(x,y) = P(x,y) e^{theta y} for a chain on `0 .. n`.
pub fn tilted_eigen(chain: &ChainSpec, theta: f64) -> Result<f64> {
    let w: Vec<f64> = (0..chain.states()).map(|y| (theta * y as f64).exp()).collect();
    tilted_eigen_weighted(&chain.transition, &w)
}

/// Transition matrix of the current sequence ((T^k W)_0)_k for a reversible
/// stationary carrier chain on `{0 .. K}` whose only flat move is 0 -> 0.
///
/// Reading the carrier backwards from site 0, (TW)_0 + W_0 is the supremum of
/// W_m minus the number of flat steps at zero between m and 0. By reversibility
/// the backward carrier is the same chain, and the free walk Y = W - (flats)
/// rises one level with the ladder kernel G solving G = A + B G^2, where A holds
/// the up-moves and B the down and flat moves. Then
/// P((TW)_0 >= y | W_0 = x) = (G^y 1)(x).
pub fn current_kernel(chain: &ChainSpec) -> Result<Matrix> {
    let p = &chain.transition;
    let n = p.n;
    let mut a = Matrix::zeros(n);
    let mut b = Matrix::zeros(n);
    for x in 0..n {
        for y in 0..n {
            let v = p.get(x, y);
            if v == 0.0 {
                continue;
            }
            if y == x + 1 {
                a.set(x, y, v);
            } else if y + 1 == x || (x == 0 && y == 0) {
                b.set(x, y, v);
            } else {
                return Err(BbsError::SpecRejected(format!("transition {x}->{y} is not a carrier step")));
            }
        }
    }
    let mut g = Matrix::zeros(n);
    let mut converged = false;
    for _ in 0..2_000_000 {
        let g2 = g.mul(&g);
        let bg2 = b.mul(&g2);
        let mut next = a.clone();
        for (o, v) in next.a.iter_mut().zip(&bg2.a) {
            *o += v;
        }
        let diff = next.a.iter().zip(&g.a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        g = next;
        if diff < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(BbsError::EigenFailure(2_000_000));
    }
    // tail[y][x] = P((TW)_0 >= y | W_0 = x)
    let mut tails = vec![vec![1.0; n]];
    for _ in 1..=n {
        let prev = tails.last().expect("nonempty");
        tails.push(g.mul_vec(prev));
    }
    let mut pi = Matrix::zeros(n);
    for x in 0..n {
        for y in 0..n {
            pi.set(x, y, (tails[y][x] - tails[y + 1][x]).max(0.0));
        }
    }
    Ok(pi)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateFamily {
    IidCurrent { p: f64 },
    BoundedSolitonCurrent { k: usize, p: f64 },
    MarkovCurrent { p0: f64, p1: f64 },
    LifoTagged { p: f64 },
}

/// A rate function with its precomputed ingredients.
#[derive(Debug, Clone)]
pub struct RateFunction {
    pub family: RateFamily,
    iid: Option<IidConstants>,
    markov: Option<MarkovConstants>,
    current: Option<Matrix>,
}

impl RateFunction {
    pub fn new(family: RateFamily) -> Result<Self> {
        let mut r = RateFunction { family: family.clone(), iid: None, markov: None, current: None };
        match family {
            RateFamily::IidCurrent { p } | RateFamily::LifoTagged { p } => r.iid = Some(iid_constants(p)?),
            RateFamily::MarkovCurrent { p0, p1 } => r.markov = Some(markov_constants(p0, p1)?),
            RateFamily::BoundedSolitonCurrent { k, p } => {
                if k == 0 {
                    return Err(BbsError::Domain("bounded-soliton current needs K >= 1".into()));
                }
                let (_, chain) = perron_condition(p, k)?;
                r.current = Some(current_kernel(&chain)?);
            }
        }
        Ok(r)
    }

    /// Transition matrix of the current chain (bounded-soliton family).
    pub fn current_matrix(&self) -> Option<&Matrix> {
        self.current.as_ref()
    }

    /// Cumulant generating function; +inf outside its domain.
    pub fn log_mgf(&self, theta: f64) -> f64 {
        match &self.family {
            RateFamily::IidCurrent { .. } => self.iid.expect("iid").mgf_w(theta).ln(),
            RateFamily::LifoTagged { .. } => self.iid.expect("iid").mgf_lifo(theta).ln(),
            RateFamily::MarkovCurrent { .. } => {
                let m = self.markov.as_ref().expect("markov");
                let w: Vec<f64> = (0..3).map(|y| m.mgf_given(y, theta)).collect();
                tilted_eigen_weighted(&m.pstar, &w).map(f64::ln).unwrap_or(f64::INFINITY)
            }
            RateFamily::BoundedSolitonCurrent { .. } => {
                let pi = self.current.as_ref().expect("current kernel");
                let w: Vec<f64> = (0..pi.n).map(|y| (theta * y as f64).exp()).collect();
                tilted_eigen_weighted(pi, &w).map(f64::ln).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Largest theta with a finite cumulant, or +inf.
    fn theta_cap(&self) -> (f64, bool) {
        match &self.family {
            RateFamily::IidCurrent { p } => (((1.0 - p) / p).ln(), false),
            RateFamily::LifoTagged { p } => (-0.5 * (4.0 * p * (1.0 - p)).ln(), true),
            RateFamily::MarkovCurrent { .. } => (-self.markov.as_ref().expect("markov").q1.ln(), false),
            RateFamily::BoundedSolitonCurrent { .. } => (f64::INFINITY, true),
        }
    }

    /// Closed interval outside which the rate is infinite.
    fn support(&self) -> (f64, f64) {
        match &self.family {
            RateFamily::IidCurrent { .. } | RateFamily::MarkovCurrent { .. } => (0.0, f64::INFINITY),
            RateFamily::LifoTagged { .. } => (1.0, f64::INFINITY),
            RateFamily::BoundedSolitonCurrent { k, .. } => (0.0, *k as f64),
        }
    }

    pub fn mean(&self) -> f64 {
        let h = 1e-5;
        (self.log_mgf(h) - self.log_mgf(-h)) / (2.0 * h)
    }

    /// Legendre transform sup_theta (theta x - log M(theta)) by golden-section
    /// search on an automatically bracketed interval.
    pub fn legendre(&self, x: f64) -> f64 {
        let (lo_s, hi_s) = self.support();
        if x < lo_s || x > hi_s {
            return f64::INFINITY;
        }
        let g = |t: f64| {
            let l = self.log_mgf(t);
            if l.is_finite() {
                t * x - l
            } else {
                f64::NEG_INFINITY
            }
        };
        let slope0 = x - self.mean();
        let (mut lo, mut hi);
        if slope0 >= 0.0 {
            lo = 0.0;
            let (cap, closed) = self.theta_cap();
            if cap.is_finite() {
                hi = if closed { cap } else { cap - 1e-12 * cap.abs().max(1.0) };
            } else {
                hi = 1.0;
                while g(2.0 * hi) > g(hi) && hi < 1e3 {
                    hi *= 2.0;
                }
                hi *= 2.0;
            }
        } else {
            hi = 0.0;
            lo = -1.0;
            while g(2.0 * lo) > g(lo) && lo > -1e3 {
                lo *= 2.0;
            }
            lo *= 2.0;
        }
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut a = lo;
        let mut b = hi;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        while (b - a) > 1e-11 * (1.0 + a.abs().max(b.abs())) {
            if gc >= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = g(d);
            }
        }
        let best = [g(a), g(b), gc, gd, g(lo), g(hi)].into_iter().fold(f64::NEG_INFINITY, f64::max);
        best.max(0.0)
    }

    pub fn rate(&self, x: f64) -> f64 {
        match &self.family {
            RateFamily::IidCurrent { .. } => self.iid.expect("iid").rate_current(x),
            _ => self.legendre(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iid_reference_values() {
        let c = iid_constants(0.2).unwrap();
        assert!((c.mu - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.sigma2 - 4.0 / 9.0).abs() < 1e-15);
        assert!((c.v - 5.0 / 3.0).abs() < 1e-15);
        assert!((c.sigma_l2 - 0.64 / 0.216).abs() < 1e-13);
        assert!((c.pi(0) - 0.75).abs() < 1e-15);
        assert!((c.mgf_w(0.0) - 1.0).abs() < 1e-15);
        assert!(iid_constants(0.5).is_err());
    }

    #[test]
    fn lifo_pmf_values() {
        let c = iid_constants(0.2).unwrap();
        assert!((c.lifo_increment_pmf(1) - 0.8).abs() < 1e-12);
        assert!((c.lifo_increment_pmf(3) - 0.128).abs() < 1e-12);
        assert!((c.lifo_increment_pmf(5) - 0.04096).abs() < 1e-12);
        assert!((c.mgf_lifo(0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn markov_reference_values() {
        let m = markov_constants(0.2, 0.3).unwrap();
        assert!((m.q0 - 2.0 / 7.0).abs() < 1e-15);
        assert!((m.q1 - 3.0 / 8.0).abs() < 1e-15);
        assert!((m.rho - 2.0 / 9.0).abs() < 1e-15);
        assert!((m.mu - 22.0 / 45.0).abs() < 1e-14);
        assert!((m.sigma2 - 0.891_41).abs() < 1e-5);
        let s = m.var_w0 + 2.0 * m.cov1 / (1.0 + m.q0);
        assert!((s - m.sigma2).abs() < 1e-13);
        let back = m.pstar.vec_mul(&m.pi_x);
        for (a, b) in back.iter().zip(&m.pi_x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn markov_iid_degeneration() {
        let m = markov_constants(0.3, 0.3).unwrap();
        assert!((m.mu - 0.3 / 0.4).abs() < 1e-14);
        let c = iid_constants(0.3).unwrap();
        assert!((m.sigma2 - c.sigma2).abs() < 1e-12);
    }

    #[test]
    fn rate_zero_at_mean() {
        let r = RateFunction::new(RateFamily::IidCurrent { p: 0.2 }).unwrap();
        assert!(r.rate(1.0 / 3.0).abs() < 1e-14);
        assert_eq!(r.rate(-0.1), f64::INFINITY);
        let l = RateFunction::new(RateFamily::LifoTagged { p: 0.2 }).unwrap();
        assert!(l.rate(5.0 / 3.0) < 1e-12);
        let m = RateFunction::new(RateFamily::MarkovCurrent { p0: 0.2, p1: 0.3 }).unwrap();
        assert!(m.rate(22.0 / 45.0) < 1e-8);
    }

    #[test]
    fn numeric_legendre_matches_closed_form() {
        let r = RateFunction::new(RateFamily::IidCurrent { p: 0.2 }).unwrap();
        for x in [0.05, 0.2, 0.6, 1.5, 3.0] {
            let a = r.rate(x);
            let b = r.legendre(x);
            assert!((a - b).abs() < 1e-8, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn iid_current_kernel_is_product() {
        let (_, chain) = perron_condition(0.2, 50).unwrap();
        let pi = current_kernel(&chain).unwrap();
        let c = iid_constants(0.2).unwrap();
        for x in 0..5 {
            for y in 0..8 {
                assert!((pi.get(x, y) - c.pi(y as u64)).abs() < 1e-9, "{x},{y}");
            }
        }
    }

    #[test]
    fn symmetric_chain_current_alternates() {
        let chain = crate::gen::default_symmetric_chain(3).unwrap();
        let pi = current_kernel(&chain).unwrap();
        for x in 0..4 {
            assert!((pi.get(x, 3 - x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bounded_current_kernel_is_reversible() {
        let (_, chain) = perron_condition(0.5, 3).unwrap();
        let pi = current_kernel(&chain).unwrap();
        for s in pi.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let st = &chain.stationary;
        for x in 0..4 {
            for y in 0..4 {
                assert!((st[x] * pi.get(x, y) - st[y] * pi.get(y, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tilted_eigen_basics() {
        let (_, chain) = perron_condition(0.5, 1).unwrap();
        assert!((tilted_eigen(&chain, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let one = ChainSpec { transition: Matrix::identity(1), stationary: vec![1.0] };
        assert!((tilted_eigen(&one, 0.7).unwrap() - 1.0).abs() < 1e-12);
    }
}

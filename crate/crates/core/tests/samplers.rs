use bbs_core::analysis::soliton_sizes;
use bbs_core::closedform::{iid_constants, markov_constants};
use bbs_core::gen::{default_symmetric_chain, sample_bounded_soliton, sample_k_symmetric, SampleKind, SampleSpec};
use bbs_core::stats::chi_square_gof;
use bbs_core::transform::step_config;
use bbs_core::ParticleWindow;

fn histogram(w: &[i64], top: usize, stride: usize) -> Vec<u64> {
    let mut h = vec![0u64; top];
    for &x in w.iter().step_by(stride) {
        if (x as usize) < top {
            h[x as usize] += 1;
        }
    }
    h
}

#[test]
fn iid_carrier_is_geometric() {
    let (_, c) = SampleSpec { kind: SampleKind::IidBernoulli { p: 0.2 }, n: 400_000, seed: 4 }.sample().unwrap();
    let probs = iid_constants(0.2).unwrap().pi_vec(7);
    // thinned so that successive counts are nearly independent
    let t = chi_square_gof(&histogram(&c.w, 7, 20), &probs);
    assert!(t.accepts(0.001), "{t:?}");
}

#[test]
fn markov_carrier_marginal() {
    let (_, c) =
        SampleSpec { kind: SampleKind::MarkovConfig { p0: 0.2, p1: 0.3 }, n: 400_000, seed: 5 }.sample().unwrap();
    let m = markov_constants(0.2, 0.3).unwrap();
    let probs: Vec<f64> = (0..7).map(|x| m.w0_law(x)).collect();
    let t = chi_square_gof(&histogram(&c.w, 7, 30), &probs);
    assert!(t.accepts(0.001), "{t:?}");
}

#[test]
fn bounded_soliton_samples() {
    for k in 1..=3 {
        let (w, c) = sample_bounded_soliton(0.5, k, 50_000, 6 + k as u64).unwrap();
        assert!(soliton_sizes(&w).max_size() <= k);
        assert!(c.w.iter().all(|&x| (0..=k as i64).contains(&x)));
    }
}

#[test]
fn k_one_symmetric_chain_complements() {
    let chain = default_symmetric_chain(1).unwrap();
    let (w, _) = sample_k_symmetric(&chain, 1, 2000, 3).unwrap();
    let ring = ParticleWindow::periodic(w.origin, w.cells.clone());
    let t = step_config(&ring).unwrap();
    let flipped: Vec<u8> = w.cells.iter().map(|c| 1 - c).collect();
    assert_eq!(t.cells, flipped);
}

#[test]
fn symmetric_carrier_is_reflection_invariant() {
    let k = 3;
    let chain = default_symmetric_chain(k).unwrap();
    let (_, c) = sample_k_symmetric(&chain, k, 200_000, 8).unwrap();
    // odd stride: the walk has period two
    let h = histogram(&c.w, k + 1, 11);
    let total: u64 = h.iter().sum();
    for x in 0..=k {
        let (a, b) = (h[x] as f64, h[k - x] as f64);
        assert!((a - b).abs() <= 4.0 * (a + b).sqrt() + 1.0, "{h:?} of {total}");
    }
}

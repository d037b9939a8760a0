use bbs_core::continuum::{
    grid_t, grid_tinv, invariance_experiment, lattice_scaled, lowering_violates, running_max, sample_two_sided_bm,
    skorohod_pair, GridPath,
};
use bbs_core::rng::seeded;
use bbs_core::stats::ks_one_sample;
use bbs_core::transform::pitman_tinv;
use bbs_core::{encode, pitman_t, ParticleWindow};
use proptest::prelude::*;

fn lattice(c: Vec<u8>, offset: i64) -> (bbs_core::PathWindow, GridPath) {
    let origin = -(offset % c.len() as i64);
    let p = encode(&ParticleWindow::finite(origin, c)).unwrap();
    let g = GridPath::from_lattice(&p).unwrap();
    (p, g)
}

fn cells() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::bool::weighted(0.4).prop_map(u8::from), 1..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn grid_transforms_agree_on_lattice(mut c in cells(), offset in 0i64..200) {
        // room on the right so the image of the window stays inside it
        let n = c.len();
        c.resize(2 * n + 1, 0);
        let (p, g) = lattice(c, offset);
        let t = pitman_t(&p).unwrap();
        let gt = grid_t(&g);
        let ti = pitman_tinv(&p).unwrap();
        let gi = grid_tinv(&g);
        for i in 0..g.len() {
            let site = g.time(i).round() as i64;
            prop_assert_eq!(Some(gt.values[i]), t.value(site).map(|v| v as f64));
            if let Some(v) = ti.value(site) {
                prop_assert_eq!(gi.values[i], v as f64);
            }
        }
        let back = grid_tinv(&gt);
        for (a, b) in back.values.iter().zip(&g.values) {
            prop_assert_eq!(*a, *b);
        }
    }

    #[test]
    fn lattice_skorohod_is_exact_and_minimal(c in cells(), offset in 0i64..200, lo in 0usize..200, span in 0usize..50) {
        let (_, g) = lattice(c, offset);
        let pair = skorohod_pair(&g);
        prop_assert_eq!(pair.tol, 0.0);
        prop_assert!(pair.holds());
        prop_assert_eq!(pair.complementarity(), 0.0);
        let lo = lo % g.len();
        prop_assert!(lowering_violates(&pair, lo, lo + span, 1.0));
    }
}

#[test]
fn brownian_skorohod_pair() {
    for seed in 0..20 {
        let g = sample_two_sided_bm(1.0, 4.0, 1.0 / 256.0, seed).unwrap();
        let pair = skorohod_pair(&g);
        assert!(pair.holds(), "seed {seed}");
        assert!(pair.tol > 0.0 && pair.tol < 0.5);
        assert_eq!(pair.a, running_max(&g));
    }
}

#[test]
fn transform_vanishes_at_zero() {
    let g = sample_two_sided_bm(1.0, 2.0, 1.0 / 128.0, 3).unwrap();
    let t = grid_t(&g);
    assert_eq!(t.value_at(0.0), Some(0.0));
    let m = running_max(&g);
    let m0 = m[g.zero_index().unwrap()];
    for i in 0..g.len() {
        assert!((t.values[i] + g.values[i] - 2.0 * (m[i] - m0)).abs() < 1e-12);
    }
}

#[test]
fn reflected_marginal_small_run() {
    let r = invariance_experiment(1.0, 1.0 / 128.0, 2.0, &[-1.0, 1.0], 400, 5).unwrap();
    assert!(r.passes(0.001), "{}", r.to_text(0.001));
}

#[test]
fn scaled_lattice_marginal() {
    let mut rng = seeded(9);
    let mut s = Vec::new();
    for _ in 0..600 {
        let (a, b) = lattice_scaled(1.0, 32, &[0.0, 1.0], &mut rng).unwrap();
        assert_eq!((a[0], b[0]), (0.0, 0.0));
        s.push(a[1]);
    }
    let n = statrs::distribution::Normal::new(1.0, 1.0).unwrap();
    use statrs::distribution::ContinuousCDF;
    assert!(ks_one_sample(&s, |x| n.cdf(x)).accepts(0.001));
}

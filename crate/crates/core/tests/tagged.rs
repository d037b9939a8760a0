use bbs_core::closedform::iid_constants;
use bbs_core::rng::seeded;
use bbs_core::tagged::{first_particle_after, fifo_formula, lifo_passage, palm_window, ring_window, track, Scheme, TagModel};
use bbs_core::ParticleWindow;
use proptest::prelude::*;

fn window() -> impl Strategy<Value = ParticleWindow> {
    (prop::collection::vec(prop::bool::weighted(0.3).prop_map(u8::from), 1..80), -40i64..0)
        .prop_filter("needs a particle right of the cut", |(c, o)| {
            c.iter().enumerate().any(|(i, &b)| b == 1 && *o + i as i64 > 0)
        })
        .prop_map(|(c, o)| ParticleWindow::finite(o, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fifo_formula_matches_queue(w in window(), k in 1usize..25) {
        let tag = first_particle_after(&w, 0).unwrap();
        let a = fifo_formula(&w, k, 0, 0).unwrap();
        let b = track(&w, k, Scheme::Fifo, tag, 0).unwrap();
        prop_assert_eq!(a.x, b.x);
    }

    #[test]
    fn lifo_passage_matches_stack(w in window(), k in 1usize..25) {
        let tag = first_particle_after(&w, 0).unwrap();
        let a = lifo_passage(&w, k, tag, 0).unwrap();
        let b = track(&w, k, Scheme::Lifo, tag, 0).unwrap();
        prop_assert_eq!(a.x, b.x);
    }

    #[test]
    fn ring_schemes_agree_with_simulation(seed in any::<u64>(), k in 1usize..30) {
        let mut rng = seeded(seed);
        let w = ring_window(0.2, -100, 200, &mut rng).unwrap();
        let Ok(tag) = first_particle_after(&w, 0) else { return Ok(()) };
        prop_assert_eq!(fifo_formula(&w, k, 0, 0).unwrap().x, track(&w, k, Scheme::Fifo, tag, 0).unwrap().x);
        prop_assert_eq!(lifo_passage(&w, k, tag, 0).unwrap().x, track(&w, k, Scheme::Lifo, tag, 0).unwrap().x);
    }
}

#[test]
fn solitons_move_by_size_under_both_schemes() {
    let w = ParticleWindow::finite(0, vec![1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
    let f = track(&w, 2, Scheme::Fifo, 0, 0).unwrap();
    let l = track(&w, 2, Scheme::Lifo, 2, 0).unwrap();
    assert_eq!(f.x, vec![0, 3, 6]);
    assert_eq!(l.x, vec![2, 3, 8]);
}

#[test]
fn palm_increment_mean_is_speed() {
    let c = iid_constants(0.2).unwrap();
    let mut rng = seeded(11);
    let n = 4000;
    let mut sum = 0i64;
    for _ in 0..n {
        let w = palm_window(TagModel::Iid { p: 0.2 }, 0, 400, &mut rng).unwrap();
        sum += lifo_passage(&w, 1, 0, 0).unwrap().displacement();
    }
    let m = sum as f64 / n as f64;
    assert!((m - c.v).abs() < 0.15, "mean increment {m} vs {}", c.v);
}

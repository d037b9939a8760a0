use bbs_core::analysis::soliton_sizes;
use bbs_core::carrier::carrier;
use bbs_core::evolve::{evolve, evolve_back, pack_right_aligned, run_currents, run_currents_packed, step_blocked, step_seq};
use bbs_core::transform::{automaton_step, pitman_tinv, rtr, step_back_config, step_config};
use bbs_core::{decode, encode, pitman_t, ParticleWindow};
use proptest::prelude::*;

fn cells(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::bool::weighted(0.3).prop_map(u8::from), 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn transform_is_automaton(c in cells(160), origin in -80i64..80) {
        let w = ParticleWindow::finite(origin, c);
        let t = step_config(&w).unwrap();
        let lit: Vec<i64> = automaton_step(&w.cells)
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| origin + i as i64)
            .collect();
        prop_assert_eq!(t.particle_sites(), lit);
        prop_assert_eq!(t.particles(), w.particles());
    }

    #[test]
    fn inverse_round_trips(c in cells(160), origin in -80i64..80) {
        let w = ParticleWindow::finite(origin, c);
        let back = step_back_config(&step_config(&w).unwrap()).unwrap();
        prop_assert_eq!(back.particle_sites(), w.particle_sites());
        let fwd = step_config(&step_back_config(&w).unwrap()).unwrap();
        prop_assert_eq!(fwd.particle_sites(), w.particle_sites());
    }

    #[test]
    fn dual_is_conjugated_transform(c in cells(120), origin in -60i64..60) {
        let p = encode(&ParticleWindow::finite(origin, c)).unwrap();
        prop_assert_eq!(
            decode(&pitman_tinv(&p).unwrap()).particle_sites(),
            decode(&rtr(&p).unwrap()).particle_sites()
        );
    }

    #[test]
    fn carrier_is_reflected_path(c in cells(160), origin in -80i64..80) {
        let p = encode(&ParticleWindow::finite(origin, c)).unwrap();
        let cw = carrier(&p).unwrap();
        prop_assert!(cw.w.iter().all(|&w| w >= 0));
        for i in 0..p.s.len() {
            prop_assert_eq!(cw.w[i], cw.m[i] - p.s[i]);
        }
        let t = pitman_t(&p).unwrap();
        for i in 0..p.s.len() {
            prop_assert_eq!(t.s[i] - t.s[0], 2 * (cw.m[i] - cw.m[0]) - (p.s[i] - p.s[0]));
        }
    }

    #[test]
    fn census_is_conserved(c in prop::collection::vec(prop::bool::weighted(0.3).prop_map(u8::from), 1..100), k in 1usize..12) {
        let w = ParticleWindow::finite(0, c);
        let tr = evolve(&w, k).unwrap();
        let first = soliton_sizes(&tr.frames[0]).sizes;
        for f in &tr.frames {
            prop_assert_eq!(&soliton_sizes(f).sizes, &first);
        }
        let back = evolve_back(&tr.frames[k], k).unwrap();
        prop_assert_eq!(back.frames[k].particle_sites(), w.particle_sites());
    }

    #[test]
    fn blocked_matches_sequential(c in cells(3000), w_in in 0u32..40, block in 1usize..700) {
        let mut a = vec![0u8; c.len()];
        let mut b = vec![0u8; c.len()];
        let wa = step_seq(&c, w_in, &mut a);
        let wb = step_blocked(&c, w_in, &mut b, block);
        prop_assert_eq!(a, b);
        prop_assert_eq!(wa, wb);
    }

    #[test]
    fn packed_currents_match_plain(c in cells(600), k in 1usize..40) {
        let mut plain = c.clone();
        let mut cur = Vec::new();
        run_currents(&mut plain, k, &mut cur);
        prop_assert_eq!(run_currents_packed(&c, k, None), cur);
    }
}

#[test]
fn packing_is_right_aligned() {
    let mut c = vec![0u8; 10];
    c[9] = 1;
    c[0] = 1;
    let p = pack_right_aligned(&c);
    assert_eq!(p.len(), 2);
    assert_eq!(p[1] & 0x80, 0x80);
}

#[test]
fn soliton_speeds_in_isolation() {
    // a 3-soliton followed by a 1-soliton far to the right
    let w = ParticleWindow::finite(0, "11100000000000100000000000000000".bytes().map(|b| b - b'0').collect());
    let t = step_config(&w).unwrap();
    assert_eq!(t.particle_sites(), vec![3, 4, 5, 15]);
}

#[test]
fn empty_window_has_no_backward_span() {
    let w = ParticleWindow::finite(0, vec![]);
    assert!(evolve_back(&w, 1).is_err());
    assert_eq!(evolve(&w, 3).unwrap().frames.len(), 4);
}

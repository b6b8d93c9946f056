use std::collections::HashSet;

use num_complex::Complex;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saf_core::beamforming::{beamform, beamform_at, steering_vector, synthesize_snapshot, Snapshot, Target, UvGrid};
use saf_core::geometry::{
    footprints_overlap, spacing_ecdf, thinning_ratio_of, Dimensionality, ElementSize, GridPoint, GridSpec,
    VirtualArray,
};
use saf_core::metrics::{find_peak, grating_lobe_angles, mask_main_lobe, pslr, ufov};
use saf_core::optimizer::{optimize, DesignSpec};

fn points(max: i64, len: usize) -> impl Strategy<Value = Vec<GridPoint>> {
    prop::collection::hash_set((0..max, 0..max), 1..=len)
        .prop_map(|s| s.into_iter().map(|(m, n)| GridPoint::new(m, n)).collect())
}

fn grid(d_y: f64, d_z: f64) -> GridSpec<f64> {
    GridSpec::new(d_y, d_z, 12, 12).unwrap()
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex::new(a, b)), len)
}

fn vrx_and_snapshot() -> impl Strategy<Value = (VirtualArray<f64>, Vec<Complex<f64>>)> {
    (points(12, 5), points(12, 5), 0.3..1.5f64, 0.3..1.5f64).prop_flat_map(|(tx, rx, dy, dz)| {
        let vrx = VirtualArray::from_positions(&grid(dy, dz), &tx, &rx).unwrap();
        let n = vrx.unique_count();
        (Just(vrx), complex_vec(n))
    })
}

fn close(a: Complex<f64>, b: Complex<f64>, scale: f64) -> bool {
    (a - b).norm() <= 1e-9 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn virtual_array_is_the_sum_set(tx in points(12, 6), rx in points(12, 6)) {
        let vrx = VirtualArray::from_positions(&grid(0.5, 0.5), &tx, &rx).unwrap();
        let expected: HashSet<GridPoint> = tx.iter().flat_map(|&t| rx.iter().map(move |&r| t + r)).collect();
        let got: HashSet<GridPoint> = vrx.positions().iter().copied().collect();
        prop_assert_eq!(got.len(), vrx.unique_count());
        prop_assert_eq!(got, expected);
        prop_assert_eq!(vrx.generated_count(), tx.len() * rx.len());
        prop_assert!(vrx.unique_count() <= vrx.generated_count());
        prop_assert!(vrx.unique_count() >= tx.len().max(rx.len()));
    }

    #[test]
    fn virtual_array_ignores_element_order(tx in points(12, 6), rx in points(12, 6), seed in any::<u64>()) {
        let g = grid(0.5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut tx2, mut rx2) = (tx.clone(), rx.clone());
        tx2.shuffle(&mut rng);
        rx2.shuffle(&mut rng);
        prop_assert_eq!(
            VirtualArray::from_positions(&g, &tx, &rx).unwrap(),
            VirtualArray::from_positions(&g, &tx2, &rx2).unwrap()
        );
    }

    #[test]
    fn translating_tx_translates_the_virtual_array(tx in points(12, 6), rx in points(12, 6), dm in -5i64..5, dn in -5i64..5) {
        let g = grid(0.5, 0.5);
        let moved: Vec<GridPoint> = tx.iter().map(|p| p.translated(dm, dn)).collect();
        let a = VirtualArray::from_positions(&g, &tx, &rx).unwrap();
        let b = VirtualArray::from_positions(&g, &moved, &rx).unwrap();
        prop_assert_eq!(a.translated(dm, dn), b);
    }

    #[test]
    fn thinning_ratio_is_a_fraction(tx in points(12, 6), rx in points(12, 6)) {
        let g = grid(0.5, 0.5);
        let vrx = VirtualArray::from_positions(&g, &tx, &rx).unwrap();
        let t = thinning_ratio_of(&vrx, &g.virtual_grid()).unwrap();
        prop_assert!(t > 0.0 && t <= 1.0);
    }

    #[test]
    fn overlap_is_symmetric_and_translation_invariant(
        a in (0i64..20, 0i64..20), b in (0i64..20, 0i64..20),
        wa in 0.1..3.0f64, ha in 0.1..3.0f64, wb in 0.1..3.0f64, hb in 0.1..3.0f64,
        dm in -5i64..5, dn in -5i64..5,
    ) {
        let g = GridSpec::new(0.5, 0.5, 40, 40).unwrap();
        let (sa, sb) = (ElementSize::new(wa, ha).unwrap(), ElementSize::new(wb, hb).unwrap());
        let (pa, pb) = (GridPoint::new(a.0, a.1), GridPoint::new(b.0, b.1));
        let ab = footprints_overlap(&g, pa, &sa, pb, &sb);
        prop_assert_eq!(ab, footprints_overlap(&g, pb, &sb, pa, &sa));
        prop_assert_eq!(ab, footprints_overlap(&g, pa.translated(dm, dn), &sa, pb.translated(dm, dn), &sb));
    }

    #[test]
    fn spacing_ecdf_is_monotone_and_ends_at_one(mut xs in prop::collection::hash_set(0u32..1000, 2..30)
        .prop_map(|s| s.into_iter().map(|x| x as f64 * 0.25).collect::<Vec<_>>())) {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let steps = spacing_ecdf(&xs).unwrap();
        for w in steps.windows(2) {
            prop_assert!(w[1].spacing > w[0].spacing);
            prop_assert!(w[1].cumulative > w[0].cumulative);
        }
        prop_assert!((steps.last().unwrap().cumulative - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steering_vectors_have_unit_magnitude((vrx, _) in vrx_and_snapshot(), u in -1.0..1.0f64, v in -1.0..1.0f64) {
        for a in steering_vector(&vrx, u, v) {
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beamforming_is_linear(
        (vrx, s1) in vrx_and_snapshot(),
        ar in -2.0..2.0f64, ai in -2.0..2.0f64, br in -2.0..2.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s2: Vec<Complex<f64>> = (0..s1.len()).map(|_| Complex::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), 0.0)).collect();
        let (a, b) = (Complex::new(ar, ai), Complex::new(br, 0.0));
        let mixed = Snapshot::new(s1.iter().zip(&s2).map(|(x, y)| a * x + b * y).collect());
        let grid = UvGrid::new(8, 8, 2, 2).unwrap();
        let p1 = beamform(&vrx, &Snapshot::new(s1.clone()), &grid).unwrap();
        let p2 = beamform(&vrx, &Snapshot::new(s2), &grid).unwrap();
        let pm = beamform(&vrx, &mixed, &grid).unwrap();
        let scale = vrx.unique_count() as f64 * 4.0;
        for i in 0..pm.values().len() {
            prop_assert!(close(pm.values()[i], a * p1.values()[i] + b * p2.values()[i], scale));
        }
    }

    #[test]
    fn real_snapshots_give_conjugate_symmetric_patterns(
        (vrx, s) in vrx_and_snapshot(), u in -1.0..1.0f64, v in -1.0..1.0f64,
    ) {
        let real = Snapshot::new(s.iter().map(|x| Complex::new(x.re, 0.0)).collect());
        let plus = beamform_at(&vrx, &real, u, v).unwrap();
        let minus = beamform_at(&vrx, &real, -u, -v).unwrap();
        prop_assert!(close(minus, plus.conj(), vrx.unique_count() as f64));
    }

    #[test]
    fn broadside_response_equals_unique_count((vrx, _) in vrx_and_snapshot()) {
        let s = synthesize_snapshot(&vrx, &[Target::broadside()]);
        let p = beamform_at(&vrx, &s, 0.0, 0.0).unwrap();
        prop_assert!((p.norm() - vrx.unique_count() as f64).abs() < 1e-9);
    }

    #[test]
    fn unit_spacing_patterns_repeat_every_unit_of_u(
        tx in points(12, 5), rx in points(12, 5), u in -1.0..0.0f64, v in -1.0..1.0f64, seed in any::<u64>(),
    ) {
        let vrx = VirtualArray::from_positions(&grid(1.0, 0.5), &tx, &rx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Snapshot::new((0..vrx.unique_count())
            .map(|_| Complex::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0)))
            .collect());
        let a = beamform_at(&vrx, &s, u, v).unwrap();
        let b = beamform_at(&vrx, &s, u + 1.0, v).unwrap();
        prop_assert!(close(a, b, vrx.unique_count() as f64));
    }

    #[test]
    fn pslr_ignores_overall_scale((vrx, _) in vrx_and_snapshot(), k in 1e-3..1e3f64) {
        let p = beamform(&vrx, &synthesize_snapshot(&vrx, &[Target::broadside()]), &UvGrid::covering(&vrx, 2, 2).unwrap()).unwrap();
        if let Ok(base) = pslr(&p, None) {
            let scaled = pslr(&p.scaled(k), None).unwrap();
            prop_assert!(base == scaled || (base - scaled).abs() < 1e-9);
        }
    }

    #[test]
    fn ufov_never_grows_with_spacing(a in 0.05..50.0f64, b in 0.05..50.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(ufov(hi).unwrap() <= ufov(lo).unwrap());
    }

    #[test]
    fn grating_lobes_mirror_with_steering(d in 0.2..5.0f64, phi in -89.0..89.0f64) {
        let mut a: Vec<f64> = grating_lobe_angles(d, phi).unwrap();
        let mut b: Vec<f64> = grating_lobe_angles(d, -phi).unwrap().into_iter().map(|x| -x).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn main_lobe_mask_is_deterministic((vrx, s) in vrx_and_snapshot()) {
        let p = beamform(&vrx, &Snapshot::new(s), &UvGrid::new(8, 8, 2, 2).unwrap()).unwrap();
        let peak = find_peak(&p, None).unwrap();
        let m1 = mask_main_lobe(&p, (peak.iu, peak.iv));
        let m2 = mask_main_lobe(&p, (peak.iu, peak.iv));
        prop_assert!(m1.contains(peak.iu, peak.iv));
        prop_assert!(m1.count() >= 1);
        prop_assert_eq!(m1, m2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimizer_trace_is_monotone(seed in any::<u64>(), intensity in 0usize..4) {
        let spec: DesignSpec<f64> = DesignSpec {
            dimensionality: Dimensionality::Linear,
            n_tx: 3,
            n_rx: 4,
            target_ufov_az: 90.0,
            target_ufov_el: 90.0,
            target_hpbw_az: Some(6.0),
            target_hpbw_el: None,
            tx_size: ElementSize::new(0.5, 0.5).unwrap(),
            rx_size: ElementSize::new(0.5, 0.5).unwrap(),
            zones: vec![],
            enforced_tx: vec![],
            enforced_rx: vec![],
            desired_pslr_db: None,
            k_max: 60,
            seed,
            q_phi: 2,
            q_theta: 2,
            aperture: None,
            grid_spacing: None,
            intensity,
            hia: true,
            plateau_window: 0,
            plateau_db: 0.5,
            batch: 1,
        };
        let design = optimize(&spec).unwrap();
        prop_assert!(design.trace.validate().is_ok());
        let mut best = design.trace.initial_pslr_db;
        for r in &design.trace.records {
            prop_assert!(r.best_pslr_db >= best);
            best = r.best_pslr_db;
        }
        prop_assert!(design.layout.is_feasible());
    }
}

use std::f64::consts::PI;

use kdvb_core::duhamel::a2_explicit;
use kdvb_core::io::run::random_datum;
use kdvb_core::norms::bourgain::CellTable;
use kdvb_core::norms::sobolev_norm;
use kdvb_core::norms::sum::{z_beta_from_costs, SumCosts, SumSpace};
use kdvb_core::semigroup::{airy_propagate, heat_propagate, s_propagate, w_propagate};
use kdvb_core::spectral::cutoff::eta;
use kdvb_core::spectral::field::{frequency_range, physical_l2};
use kdvb_core::{DyadicIndex, FrequencyGrid, SpectralField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(seed: u64, n_modes: usize, band: f64) -> SpectralField {
    let grid = FrequencyGrid::new(4.0 * PI, n_modes).unwrap();
    random_datum(grid, band, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn costs(seed: u64, space: SumSpace) -> SumCosts<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<DyadicIndex> = (-1..3).map(DyadicIndex).collect();
    let mut draw = || -> Vec<f64> { (0..16).map(|_| rng.random_range(0.0f64..1.0).powi(3)).collect() };
    let x = draw();
    let y = draw();
    let rows: Vec<f64> = y.chunks(4).map(|r| r.iter().sum::<f64>() * 0.8).collect();
    SumCosts::from_tables(
        space,
        CellTable::new(blocks.clone(), blocks.clone(), x).unwrap(),
        CellTable::new(blocks.clone(), blocks, y).unwrap(),
        rows,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cubes_on_the_convolution_plane(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let c = -a - b;
        let scale = a.abs().max(b.abs()).max(c.abs()).powi(3).max(1e-300);
        prop_assert!((a.powi(3) + b.powi(3) + c.powi(3) - 3.0 * a * b * c).abs() <= 16.0 * f64::EPSILON * scale);
    }

    #[test]
    fn two_parameter_propagator_on_the_diagonal_is_the_semigroup(seed in 0u64..1000, t in 0.0f64..3.0) {
        let u = field(seed, 64, 6.0);
        let w = w_propagate(&u, t, t);
        let s = s_propagate(&u, t).unwrap();
        prop_assert_eq!(w.coeffs(), s.coeffs());
    }

    #[test]
    fn airy_group_is_unitary(seed in 0u64..1000, t in -5.0f64..5.0) {
        let u = field(seed, 64, 7.0);
        let v = airy_propagate(&u, t);
        prop_assert!((v.l2_norm() / u.l2_norm() - 1.0).abs() <= 1e-12);
        prop_assert!(v.hermitian_defect() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn dissipative_flows_contract(seed in 0u64..1000, t in 0.0f64..3.0, s in -2.0f64..2.0) {
        let u = field(seed, 64, 7.0);
        for v in [s_propagate(&u, t).unwrap(), heat_propagate(&u, t).unwrap()] {
            prop_assert!(v.l2_norm() <= u.l2_norm() * (1.0 + 1e-12));
            prop_assert!(sobolev_norm(&v, s) <= sobolev_norm(&u, s) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn plancherel_is_exact(seed in 0u64..1000, n in 4u32..10) {
        let u = field(seed, 1 << n, 100.0);
        let phys = physical_l2(u.grid(), &u.to_physical_complex());
        prop_assert!((phys / u.l2_norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn littlewood_paley_blocks_sum_to_one(k in 1usize..256) {
        let grid = FrequencyGrid::new(16.0 * PI, 512).unwrap();
        let range = frequency_range(&grid);
        let xi = grid.xi(k);
        let total: f64 = range.weights_at(xi).map(|(_, w)| w).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(range.weights_at(xi).count() <= 2);
    }

    #[test]
    fn projections_keep_real_fields_real(seed in 0u64..1000, e in -2i32..3) {
        let u = field(seed, 64, 7.0);
        let p = u.project(DyadicIndex(e)).unwrap();
        prop_assert!(p.is_real());
        prop_assert!(p.hermitian_defect() <= 1e-14 * u.l2_norm());
        prop_assert!(p.l2_norm() <= u.l2_norm());
    }

    #[test]
    fn cutoff_is_a_plateau_bump(x in -3.0f64..3.0) {
        let v = eta(x);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, eta(-x));
        if x.abs() <= 1.0 { prop_assert_eq!(v, 1.0); }
        if x.abs() >= 2.0 { prop_assert_eq!(v, 0.0); }
        if x.abs() < 2.0 { prop_assert!(v > 0.0); }
    }

    #[test]
    fn sobolev_norms_increase_with_regularity(seed in 0u64..1000, s in -3.0f64..3.0, ds in 0.0f64..2.0) {
        let u = field(seed, 64, 7.0);
        prop_assert!(sobolev_norm(&u, s) <= sobolev_norm(&u, s + ds) * (1.0 + 1e-14));
    }

    #[test]
    fn greedy_split_matches_exhaustive_search(seed in 0u64..10_000, s in -1.5f64..1.0, nonlinear in any::<bool>()) {
        let space = if nonlinear { SumSpace::Nonlinear } else { SumSpace::Resolution };
        let c = costs(seed, space);
        let (greedy, _) = c.greedy(s);
        prop_assert_eq!(greedy, c.brute_force(s).unwrap());
        prop_assert!(greedy <= c.pure_x(s) && greedy <= c.pure_y(s));
    }

    #[test]
    fn z_beta_decreases_in_beta(seed in 0u64..10_000, beta in 1.0f64..50.0, factor in 1.0f64..4.0) {
        let c = costs(seed, SumSpace::Resolution);
        let (s1, _) = c.greedy(-1.0);
        let (z1, _) = z_beta_from_costs(&c, beta).unwrap();
        let (z2, _) = z_beta_from_costs(&c, beta * factor).unwrap();
        prop_assert!(z2 <= z1 * (1.0 + 1e-14) && z1 <= s1 * (1.0 + 1e-14));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn second_coefficient_is_quadratic_and_real(seed in 0u64..1000, c in -3.0f64..3.0, t in 0.01f64..1.0) {
        let h = field(seed, 64, 3.0);
        let a = a2_explicit(t, &h).unwrap();
        let b = a2_explicit(t, &h.scale(c)).unwrap();
        prop_assert!(b.sub(&a.scale(c * c)).unwrap().l2_norm() <= 1e-12 * (c * c * a.l2_norm()).max(1e-300));
        prop_assert!(a.hermitian_defect() <= 1e-12 * a.l2_norm().max(1e-300), "defect {}", a.hermitian_defect() / a.l2_norm());
    }
}

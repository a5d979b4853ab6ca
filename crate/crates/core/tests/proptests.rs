//! Randomized properties over the public API: digit expansions, stencil
//! shape invariants, staged versus composite application, and field
//! file round-trips.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plaquette::coherence::admissible_pairs;
use plaquette::engine::{apply, compose};
use plaquette::field::{read_field, write_field};
use plaquette::index::{d_adic_expand, d_adic_value, CellIndex};
use plaquette::rational::{rat, rat_int};
use plaquette::{Convention, FieldData, IndexBox, Rat, Scale, SchemeKind, StencilFamily};

use std::io::Cursor;

proptest! {
    #[test]
    fn d_adic_expansion_round_trips(d in 2u32..=9, s in 1u32..=6, raw in 0u64..u64::MAX) {
        let i = raw % u64::from(d).pow(s);
        let digits = d_adic_expand(i, d, s).unwrap();
        prop_assert_eq!(digits.len(), s as usize);
        prop_assert!(digits.iter().all(|&g| g < d));
        prop_assert_eq!(d_adic_value(&digits, d), i);
    }

    #[test]
    fn values_above_the_window_are_rejected(d in 2u32..=9, s in 1u32..=6, extra in 0u64..1000) {
        let first_bad = u64::from(d).pow(s);
        prop_assert!(d_adic_expand(first_bad + extra, d, s).is_err());
    }

    #[test]
    fn corner_coarsening_composes(
        coords in prop::collection::vec(-1000i64..=1000, 1..=3),
        d in 1u32..=9,
        e in 1u32..=9,
    ) {
        let cell = CellIndex::new(coords, Convention::Corner);
        prop_assert_eq!(cell.coarse(d).coarse(e), cell.coarse(d * e));
    }

    #[test]
    fn centered_weights_sum_to_one_on_the_full_support(d in 1i64..=16, dim in 1usize..=3) {
        let stencil = StencilFamily::new(SchemeKind::Bf, dim).unwrap().stencil(d).unwrap();
        prop_assert_eq!(stencil.weight_sum(), rat_int(1));
        prop_assert_eq!(stencil.support_size(), ((2 * d - 1) as usize).pow(dim as u32));
    }

    #[test]
    fn centered_weights_are_sign_and_permutation_symmetric(
        d in 2i64..=9,
        dim in 2usize..=3,
        seed in any::<u64>(),
    ) {
        let stencil = StencilFamily::new(SchemeKind::Bf, dim).unwrap().stencil(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset: Vec<i64> = (0..dim).map(|_| rng.gen_range(-(d - 1)..=d - 1)).collect();
        let flipped: Vec<i64> = offset.iter().map(|&c| if rng.gen() { -c } else { c }).collect();
        let mut permuted = flipped.clone();
        permuted.reverse();
        prop_assert_eq!(stencil.weight_at(&offset), stencil.weight_at(&flipped));
        prop_assert_eq!(stencil.weight_at(&flipped), stencil.weight_at(&permuted));
    }

    #[test]
    fn every_catalogue_member_sums_to_one(kind_idx in 0usize..SchemeKind::ALL.len(), d in 1i64..=9) {
        let kind = SchemeKind::ALL[kind_idx];
        let dim = if kind.admits_dim(1) { 1 } else { 2 };
        if kind.admits_factor(d) {
            let stencil = StencilFamily::new(kind, dim).unwrap().stencil(d).unwrap();
            prop_assert_eq!(stencil.weight_sum(), rat_int(1));
        }
    }

    #[test]
    fn rational_fields_round_trip_through_the_file_format(
        dim in 1usize..=3,
        seed in any::<u64>(),
        denom_base in 1i64..=12,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo: Vec<i64> = (0..dim).map(|_| rng.gen_range(-4i64..=0)).collect();
        let hi: Vec<i64> = lo.iter().map(|&l| l + rng.gen_range(0i64..=3)).collect();
        let extent = IndexBox::new(lo, hi).unwrap();
        let scale = Scale::reciprocal(rng.gen_range(1..=64)).unwrap();
        let field = plaquette::CellField::from_fn(scale, Convention::Centered, extent, |_| {
            rat(rng.gen_range(-99..=99), denom_base + rng.gen_range(0..=5))
        });
        let data = FieldData::Rational(field);

        let mut buffer = Vec::new();
        write_field(&mut buffer, &data).unwrap();
        let back = read_field(&mut Cursor::new(&buffer)).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn real_fields_round_trip_through_the_file_format(
        values in prop::collection::vec(-1.0e6f64..1.0e6, 1..=27),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = values.len() as i64;
        let extent = IndexBox::new(vec![0], vec![n - 1]).unwrap();
        let scale = Scale::power_of_two(rng.gen_range(0..=10)).unwrap();
        let field = plaquette::CellField::from_values(
            scale,
            Convention::Corner,
            extent,
            values.clone(),
        )
        .unwrap();
        let data = FieldData::Real(field);

        let mut buffer = Vec::new();
        write_field(&mut buffer, &data).unwrap();
        let back = read_field(&mut Cursor::new(&buffer)).unwrap();
        prop_assert_eq!(back, data);
    }
}

fn random_rational_field(
    scale: Scale,
    convention: Convention,
    extent: IndexBox,
    seed: u64,
) -> plaquette::CellField<Rat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plaquette::CellField::from_fn(scale, convention, extent, |_| {
        rat(rng.gen_range(-8..=8), rng.gen_range(1..=4))
    })
}

/// Applying the factor-d member and then the factor-e member agrees
/// exactly with one application of their composite, on every common
/// cell, for random rational fields across the full small-factor grid.
#[test]
fn staged_application_equals_composite_application() {
    for dim in 1usize..=3 {
        let family = StencilFamily::new(SchemeKind::Bf, dim).unwrap();
        for (d, e) in admissible_pairs(&family, 1, 5) {
            let ed = e * d;
            // Three dimensions get the narrowest extent with nonempty
            // output; the equality compared there is still a full
            // support-wide convolution.
            let half = if dim == 3 { ed } else { 2 * ed };
            let extent = IndexBox::cube(dim, half);
            let scale = Scale::reciprocal((ed * ed) as u64).unwrap();
            let seed = (dim as u64) << 16 | (d as u64) << 8 | e as u64;
            let field = random_rational_field(scale, Convention::Centered, extent, seed);

            let inner = family.stencil(d).unwrap();
            let outer = family.stencil(e).unwrap();
            let staged = apply(&outer, &apply(&inner, &field).unwrap()).unwrap();
            let composite = compose(&outer, &inner).unwrap();
            let direct = apply(&composite, &field).unwrap();

            assert_eq!(staged.scale(), direct.scale(), "dim {dim} pair ({d},{e})");
            let common = staged
                .extent()
                .intersect(direct.extent())
                .expect("staged and direct outputs overlap");
            let mut compared = 0usize;
            for cell in common.iter() {
                assert_eq!(
                    staged.get(&cell).unwrap(),
                    direct.get(&cell).unwrap(),
                    "dim {dim} pair ({d},{e}) cell {cell:?}"
                );
                compared += 1;
            }
            assert!(compared > 0, "dim {dim} pair ({d},{e}) compared no cells");
        }
    }
}

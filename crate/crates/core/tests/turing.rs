mod common;

use common::props;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, rng_seed: RngSeed::Fixed(13), ..ProptestConfig::default() })]

    #[test]
    fn print_parse_round_trip(spec in common::any_spec()) {
        props::print_parse_round_trip(spec)?;
    }

    #[test]
    fn backward_inverts_forward(spec in common::reversible_spec()) {
        props::backward_inverts_forward(spec)?;
    }

    #[test]
    fn reversible_chains_never_collide(spec in common::reversible_spec()) {
        props::reversible_chains_never_collide(spec)?;
    }
}

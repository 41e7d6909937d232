use govroom::bot::{self, RandomBot};
use govroom_core::{replay, Scenario};
use proptest::prelude::*;

fn reference() -> Scenario {
    govroom::scenario_file::load_scenario(
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/reference.json").as_ref(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_play_replays_to_the_same_state(seed in any::<u64>(), guided in 0.0f64..=1.0) {
        let scenario = reference();
        let (report, session) = bot::play(&scenario, &mut RandomBot::new(&scenario, seed, guided), 2000, 3).unwrap();
        let replayed = replay(session.log(), &scenario).unwrap();
        prop_assert_eq!(&replayed, session.state());
        prop_assert_eq!(report.phase, session.state().phase);
        if let Some(total) = report.total_score {
            prop_assert!((0.0..=1.0).contains(&total));
        }
    }
}

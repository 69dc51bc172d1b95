use ilkit::dataset::{read_ilds, write_ilds, ActionColumn, DatasetFile, DatasetMetadata};
use ilkit::envs::EnvDescriptor;
use ilkit::{ActionSpace, Error};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use std::path::Path;

#[derive(Debug, Clone)]
enum Actions {
    Discrete(u32),
    Continuous(Vec<(f64, f64)>),
}

fn space() -> impl Strategy<Value = Actions> {
    prop_oneof![
        (1u32..6).prop_map(Actions::Discrete),
        prop::collection::vec((-5.0f64..0.0, 0.1f64..5.0), 1..4).prop_map(Actions::Continuous),
    ]
}

prop_compose! {
    fn dataset()(
        obs_dim in 1usize..5,
        lens in prop::collection::vec(1usize..9, 0..6),
        acts in space(),
        seed_base in any::<u64>(),
        expert_aer in -1e6f64..1e6,
        threshold in prop::option::of(-50.0f64..0.0),
    )(
        states in prop::collection::vec(-1e3f32..1e3, lens.iter().sum::<usize>() * obs_dim),
        rewards in prop::collection::vec(-10.0f64..10.0, lens.iter().sum::<usize>()),
        raw_actions in prop::collection::vec(0.0f64..1.0, lens.iter().sum::<usize>() * 4),
        obs_dim in Just(obs_dim),
        lens in Just(lens),
        acts in Just(acts),
        seed_base in Just(seed_base),
        expert_aer in Just(expert_aer),
        threshold in Just(threshold),
    ) -> DatasetFile {
        let n: usize = lens.iter().sum();
        let mut starts = Vec::with_capacity(n);
        for &l in &lens {
            starts.push(true);
            starts.extend(std::iter::repeat_n(false, l - 1));
        }
        let mut acc = Vec::with_capacity(n);
        let mut running = 0.0;
        for i in 0..n {
            running = if starts[i] { rewards[i] } else { running + rewards[i] };
            acc.push(running);
        }
        let (action_space, actions) = match &acts {
            Actions::Discrete(k) => (
                ActionSpace::Discrete { n: *k },
                ActionColumn::Discrete((0..n).map(|i| ((raw_actions[i] * *k as f64) as u32).min(k - 1)).collect()),
            ),
            Actions::Continuous(bounds) => {
                let d = bounds.len();
                let values = (0..n * d)
                    .map(|j| {
                        let (lo, hi) = bounds[j % d];
                        (lo + raw_actions[j % (n * 4)] * (hi - lo)) as f32
                    })
                    .collect();
                (
                    ActionSpace::Continuous {
                        low: bounds.iter().map(|b| b.0).collect(),
                        high: bounds.iter().map(|b| b.1).collect(),
                    },
                    ActionColumn::Continuous(values),
                )
            }
        };
        DatasetFile {
            descriptor: EnvDescriptor {
                env_id: "synthetic".into(),
                obs_dim,
                action_space,
                max_steps: 8,
            },
            states,
            actions,
            rewards,
            accumulated_rewards: acc,
            episode_starts: starts,
            metadata: DatasetMetadata {
                env_id: "synthetic".into(),
                expert_id: "synthetic-expert".into(),
                expert_aer,
                random_aer: None,
                master_seed: seed_base,
                acceptance_threshold: threshold,
                max_retries: 5,
                rejected_count: 0,
                episode_seeds: (0..lens.len() as u64).map(|i| seed_base.wrapping_add(i)).collect(),
                created_unix: 0,
                tool_version: ilkit::TOOL_VERSION.into(),
            },
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn read_of_write_is_identity(d in dataset()) {
        let bytes = d.to_bytes().unwrap();
        let back = DatasetFile::from_bytes(&bytes, Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn any_single_byte_flip_is_rejected(d in dataset(), pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let mut bytes = d.to_bytes().unwrap();
        let i = pos.index(bytes.len());
        bytes[i] ^= 1 << bit;
        prop_assert!(DatasetFile::from_bytes(&bytes, Path::new("mem")).is_err());
    }

    #[test]
    fn any_truncation_is_rejected(d in dataset(), cut in 1usize..64) {
        let bytes = d.to_bytes().unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(DatasetFile::from_bytes(&bytes[..keep], Path::new("mem")).is_err());
    }
}

fn sample() -> DatasetFile {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    loop {
        let d = dataset().new_tree(&mut runner).unwrap().current();
        if d.n_episodes() >= 2 && matches!(d.actions, ActionColumn::Discrete(_)) {
            return d;
        }
    }
}

#[test]
fn files_on_disk_roundtrip_and_corruptions_are_classified() {
    let d = sample();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.ilds");
    write_ilds(&d, &path).unwrap();
    assert_eq!(read_ilds(&path).unwrap(), d);
    let good = std::fs::read(&path).unwrap();

    let mut bad = good.clone();
    bad[..4].copy_from_slice(b"NOPE");
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(read_ilds(&path), Err(Error::NotAnIldsFile { .. })));

    std::fs::write(&path, &good[..good.len() - 8]).unwrap();
    assert!(matches!(read_ilds(&path), Err(Error::CorruptFile(_))));

    let mut bad = good.clone();
    let last = bad.len() - 1;
    bad[last] ^= 0xFF;
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(read_ilds(&path), Err(Error::CorruptFile(_))));
}

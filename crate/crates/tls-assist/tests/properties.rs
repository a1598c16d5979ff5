//! Randomized invariants over the perception primitives.

use proptest::prelude::*;

use tls_assist::io::{emit_notice, parse_notice, NoticeDiagnostics, NoticeRecord};
use tls_assist::tlr::{predict_relevance, StateBuffer, StateWeights};
use tls_assist::tsr::{deduplicate, filter_small, prioritize};
use tls_assist::types::{
    sign_priority_rank, BoundingBox, Detection, FrameTag, LightClass, LightState, SignClass, ViewId,
};

fn light_class() -> impl Strategy<Value = LightClass> {
    prop::sample::select(LightClass::ALL.to_vec())
}

fn sign_class() -> impl Strategy<Value = SignClass> {
    prop::sample::select(SignClass::ALL.to_vec())
}

fn light_state() -> impl Strategy<Value = LightState> {
    prop::sample::select(LightState::ALL.to_vec())
}

fn detection<L: Clone + std::fmt::Debug + 'static>(
    label: impl Strategy<Value = L> + 'static,
) -> impl Strategy<Value = Detection<L>> {
    (
        label,
        0.0..1200.0f64,
        0.0..650.0f64,
        1.0..100.0f64,
        1.0..100.0f64,
        0.0..=1.0f64,
    )
        .prop_map(|(l, x, y, w, h, conf)| {
            Detection::new(
                BoundingBox::new(x, y, x + w, y + h, FrameTag::Crop).unwrap(),
                l,
                conf,
                ViewId::FrontCenter,
            )
            .unwrap()
        })
}

proptest! {
    #[test]
    fn relevance_is_permutation_invariant(
        mut dets in prop::collection::vec(detection(light_class()), 0..8),
        seed in any::<u64>(),
    ) {
        let before = predict_relevance(&dets);
        // deterministic shuffle derived from the seed
        let n = dets.len();
        for i in (1..n).rev() {
            dets.swap(i, (seed as usize).wrapping_mul(i) % (i + 1));
        }
        prop_assert_eq!(predict_relevance(&dets), before);
    }

    #[test]
    fn dedup_output_is_a_subset_and_idempotent(
        dets in prop::collection::vec(detection(sign_class()), 0..10),
        thresh in 0.05..=1.0f64,
    ) {
        let once = deduplicate(&dets, thresh);
        prop_assert!(once.iter().all(|d| dets.contains(d)));
        prop_assert_eq!(deduplicate(&once, thresh), once.clone());
    }

    #[test]
    fn size_filter_never_keeps_a_short_box(
        dets in prop::collection::vec(detection(sign_class()), 0..10),
        min_height in 0.0..120.0f64,
    ) {
        let kept = filter_small(&dets, min_height);
        prop_assert!(kept.iter().all(|d| d.bbox.height() >= min_height));
    }

    #[test]
    fn prioritize_never_reports_lower_priority_than_any_input(
        dets in prop::collection::vec(detection(sign_class()), 1..10),
    ) {
        let picked = prioritize(&dets);
        let min_rank = dets.iter().map(|d| sign_priority_rank(d.label)).min().unwrap();
        prop_assert_eq!(picked.rank, min_rank);
    }

    #[test]
    fn buffer_weights_monotone_under_repeats(
        state in light_state(),
        capacity in 1usize..8,
        pushes in 1usize..8,
    ) {
        // pushing the same state never decreases its weight until saturation
        let mut buf = StateBuffer::new(capacity);
        let mut last = 0;
        for _ in 0..pushes {
            buf.push(state);
            let w = buf.weight(state);
            prop_assert!(w >= last);
            last = w;
        }
    }

    #[test]
    fn notice_roundtrip_is_exact(
        frame_index in any::<u64>(),
        state in light_state(),
        sign in sign_class(),
        red in 0u32..100,
        yellow in 0u32..100,
        green in 0u32..100,
        tie_broken in any::<bool>(),
        degraded in any::<bool>(),
    ) {
        let rec = NoticeRecord {
            frame_index,
            light_state: state,
            sign,
            message: "Red light ahead, stop the vehicle!".to_string(),
            suppressed: false,
            diagnostics: NoticeDiagnostics {
                weights: StateWeights { red, yellow, green, no_detection: 0 },
                tie_broken,
                degraded,
            },
        };
        let line = emit_notice(&rec);
        let back = parse_notice(&line).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(emit_notice(&back), line);
    }
}

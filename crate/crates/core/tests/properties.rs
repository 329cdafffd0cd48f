use causal_harness::corpus::{
    compute_stats, parse_corpus, parse_predictions, write_predictions, GoldPair, Prediction, Segment,
};
use causal_harness::evalkit::{score, score_with, token_labels, MetricMode, Span};
use causal_harness::extract::cue_baseline;
use causal_harness::prompt::{render_prompt, template_text, PromptKind};
use causal_harness::text::{char_len, token_count, tokens};
use proptest::prelude::*;

fn field() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z0-9 .,%$]{0,30}",
        "[a-z ;\"\n\r\t']{0,20}",
        "\\PC{0,20}",
    ]
}

fn gold_corpus() -> impl Strategy<Value = Vec<Segment>> {
    prop::collection::vec(("[a-zA-Z]{1,6}( [a-zA-Z%.]{1,6}){1,11}", any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..6)
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (text, a, b))| {
                    let words: Vec<&str> = text.split(' ').collect();
                    let pick = |ix: prop::sample::Index| {
                        let s = ix.index(words.len());
                        words[s..(s + 2).min(words.len())].join(" ")
                    };
                    Segment {
                        id: format!("{i:03}"),
                        gold: Some(GoldPair {
                            cause: pick(a),
                            effect: pick(b),
                        }),
                        text,
                    }
                })
                .collect()
        })
}

proptest! {
    #[test]
    fn predictions_file_round_trips(rows in prop::collection::vec((field(), field(), field(), field()), 0..6)) {
        let preds: Vec<Prediction> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (id, text, cause, effect))| Prediction { id: format!("{i}{id}"), text, cause, effect })
            .collect();
        let written = write_predictions(&preds);
        let (back, warnings) = parse_predictions(&written).unwrap();
        prop_assert!(warnings.is_empty(), "{:?}", warnings);
        prop_assert_eq!(back, preds);
    }

    #[test]
    fn gold_corpus_round_trips(segs in gold_corpus()) {
        let as_preds: Vec<Prediction> = segs.iter().map(|s| Prediction::from_gold(s).unwrap()).collect();
        let (back, warnings) = parse_corpus(&write_predictions(&as_preds), true).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(back, segs);
    }

    #[test]
    fn tokens_partition_non_whitespace(text in "\\PC{0,60}") {
        let toks = tokens(&text);
        prop_assert_eq!(toks.len(), text.split_whitespace().count());
        prop_assert_eq!(toks.len(), token_count(&text));
        let chars: Vec<char> = text.chars().collect();
        for t in &toks {
            let slice: String = chars[t.start..t.end].iter().collect();
            prop_assert_eq!(slice.as_str(), t.text);
        }
    }

    #[test]
    fn one_label_per_token(text in "\\PC{0,60}", a in 0usize..70, b in 0usize..70, c in 0usize..70, d in 0usize..70) {
        let n = char_len(&text);
        let span = |x: usize, y: usize| {
            let (x, y) = (x.min(n), y.min(n));
            Span::new(x.min(y), x.max(y))
        };
        let labels = token_labels(&text, Some(span(a, b)), Some(span(c, d))).unwrap();
        prop_assert_eq!(labels.len(), token_count(&text));
    }

    #[test]
    fn gold_against_itself_is_perfect(segs in gold_corpus()) {
        let preds: Vec<Prediction> = segs.iter().map(|s| Prediction::from_gold(s).unwrap()).collect();
        for mode in [MetricMode::Pooled, MetricMode::PerRowMacro] {
            let r = score_with(&preds, &segs, mode).unwrap();
            prop_assert_eq!(r.weighted.f1, 1.0);
            prop_assert_eq!(r.exact_match, 1.0);
            prop_assert_eq!(r.n_swapped, 0);
        }
    }

    #[test]
    fn scores_are_bounded_and_order_free(segs in gold_corpus(), seed in any::<u64>()) {
        let mut preds: Vec<Prediction> = segs.iter().map(cue_prediction).collect();
        let r1 = score(&preds, &segs).unwrap();
        let k = (seed as usize) % preds.len();
        preds.rotate_left(k);
        let r2 = score(&preds, &segs).unwrap();
        prop_assert_eq!(&r1, &r2);
        for m in [&r1.cause, &r1.effect, &r1.other] {
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        prop_assert!((0.0..=1.0).contains(&r1.weighted.f1));
        let total: u64 = [&r1.cause, &r1.effect, &r1.other].iter().map(|m| m.support).sum();
        prop_assert_eq!(total as usize, segs.iter().map(|s| token_count(&s.text)).sum::<usize>());
    }

    #[test]
    fn cue_output_is_verbatim(text in "[A-Za-z ,.!?]{1,80}( due to | led to | because )?[A-Za-z ,.]{0,40}") {
        let c = cue_baseline(&text);
        prop_assert!(text.contains(c.cause_text.as_str()));
        prop_assert!(text.contains(c.effect_text.as_str()));
        prop_assert_eq!(c.cause_text.trim(), c.cause_text.as_str());
        prop_assert_eq!(c.effect_text.trim(), c.effect_text.as_str());
    }

    #[test]
    fn stats_are_consistent(segs in gold_corpus(), dup in 0usize..3) {
        let mut segs = segs;
        for i in 0..dup.min(segs.len()) {
            let mut copy = segs[i].clone();
            copy.id.push('d');
            segs.push(copy);
        }
        let s = compute_stats(&segs).unwrap();
        let distinct: std::collections::HashSet<&str> = segs.iter().map(|s| s.text.as_str()).collect();
        prop_assert_eq!(s.n_documents, segs.len());
        prop_assert_eq!(s.n_duplicates, segs.len() - distinct.len());
        for l in [Some(s.doc_len), s.cause_len, s.effect_len].into_iter().flatten() {
            prop_assert!(l.min as f64 <= l.avg && l.avg <= l.max as f64);
        }
    }

    #[test]
    fn rendering_only_fills_the_placeholder(ctx in "\\PC{1,80}", kind in prop::sample::select(PromptKind::ALL.to_vec())) {
        prop_assume!(!ctx.trim().is_empty());
        let r = render_prompt(kind, &ctx).unwrap();
        let (head, tail) = template_text(kind).split_once("{}").unwrap();
        prop_assert_eq!(r.text, format!("{head}{ctx}{tail}"));
        prop_assert_eq!(r.context, ctx);
    }
}

fn cue_prediction(seg: &Segment) -> Prediction {
    let c = cue_baseline(&seg.text);
    Prediction {
        id: seg.id.clone(),
        text: seg.text.clone(),
        cause: c.cause_text,
        effect: c.effect_text,
    }
}

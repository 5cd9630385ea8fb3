use colagec::align::{align_tokens, alignment_cost, extract_edits, CostConfig, ExtractConfig};
use colagec::evalmetrics::{f_beta, match_edits, prf, EditMatchConfig};
use colagec::gectrain::{ce_loss, dynamic_loss, loss_weight};
use colagec::judge::{acc, cola_score, mcc, ConfusionCounts, Logits};
use colagec::synth::{gen_corpus, inject, ErrorInjectionSpec, SynthGrammar};
use colagec::textcore::{
    apply_edits, emit_cola_tsv, emit_m2, parse_cola_tsv, parse_m2, AnnotatedPair, ColaInstance, Edit, ErrorType,
    Label, Mode, Origin, Sentence,
};
use proptest::prelude::*;

const ALPHABET: [&str; 6] = ["a", "b", "cat", "dog", ".", "the"];

fn sentence(max: usize) -> impl Strategy<Value = Sentence> {
    prop::collection::vec(0..ALPHABET.len(), 0..=max)
        .prop_map(|ix| Sentence::from_strs(&ix.iter().map(|&i| ALPHABET[i]).collect::<Vec<_>>(), Mode::Word).unwrap())
}

fn counts() -> impl Strategy<Value = ConfusionCounts> {
    (0u64..500, 0u64..500, 0u64..500, 0u64..500).prop_map(|(a, b, c, d)| ConfusionCounts::new(a, b, c, d))
}

fn distribution(v: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, v).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn extracted_edits_reconstruct_target(src in sentence(10), tgt in sentence(10)) {
        let edits = extract_edits(&src, &tgt, &ExtractConfig::default());
        prop_assert_eq!(apply_edits(&src, &edits).unwrap(), tgt);
    }

    #[test]
    fn alignment_cost_bounded_by_rewrite(src in sentence(10), tgt in sentence(10)) {
        let c = CostConfig::default();
        let ops = align_tokens(&src, &tgt, &c);
        let cost = alignment_cost(&ops);
        prop_assert!(cost <= c.delete * src.len() as f64 + c.insert * tgt.len() as f64 + 1e-9);
        prop_assert!(cost >= 0.0);
        if src == tgt {
            prop_assert_eq!(cost, 0.0);
        }
    }

    #[test]
    fn m2_round_trip(src in sentence(8), tgt in sentence(8)) {
        prop_assume!(!src.is_empty());
        let edits = extract_edits(&src, &tgt, &ExtractConfig::default());
        let pair = AnnotatedPair::single(src, edits).unwrap();
        let text = emit_m2(std::slice::from_ref(&pair));
        let back = parse_m2(&text, Mode::Word).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].gold, &pair.gold);
        prop_assert_eq!(emit_m2(&back), text);
    }

    #[test]
    fn cola_tsv_round_trip(items in prop::collection::vec((sentence(6), any::<bool>()), 0..8)) {
        let inst: Vec<ColaInstance> = items
            .into_iter()
            .map(|(s, ok)| ColaInstance::new(s, if ok { Label::Acceptable } else { Label::Unacceptable }, Origin::Synthetic))
            .collect();
        let back = parse_cola_tsv(&emit_cola_tsv(&inst), Mode::Word, Origin::Synthetic).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn cola_score_symmetry(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let s = cola_score(Logits::new(a, b)).unwrap().value();
        let t = cola_score(Logits::new(b, a)).unwrap().value();
        prop_assert!(s > 0.0 && s < 1.0);
        prop_assert!((s + t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mcc_and_acc_under_label_swap(c in counts()) {
        prop_assume!(c.total() > 0);
        let m = mcc(&c).unwrap();
        prop_assert!((-1.0..=1.0).contains(&m));
        prop_assert_eq!(acc(&c).unwrap(), acc(&c.swapped()).unwrap());
        let flipped = ConfusionCounts::new(c.fp, c.tp, c.tn, c.fn_);
        let m2 = mcc(&flipped).unwrap();
        prop_assert!((m + m2).abs() < 1e-12);
    }

    #[test]
    fn f05_monotone(p in 0.0f64..1.0, r in 0.0f64..1.0, dp in 0.0f64..0.5, dr in 0.0f64..0.5) {
        let f = f_beta(p, r, 0.5);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f_beta((p + dp).min(1.0), r, 0.5) >= f - 1e-15);
        prop_assert!(f_beta(p, (r + dr).min(1.0), 0.5) >= f - 1e-15);
    }

    #[test]
    fn prf_bounds(tp in 0u64..100, fp in 0u64..100, fn_ in 0u64..100) {
        let r = prf(&ConfusionCounts::new(tp, fp, fn_, 0), 0.5);
        for x in [r.precision, r.recall, r.f] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn annotator_order_only_matters_for_ties(src in sentence(6), a in sentence(6), b in sentence(6), h in sentence(6)) {
        prop_assume!(!src.is_empty());
        let x = ExtractConfig::default();
        let ga = extract_edits(&src, &a, &x);
        let gb = extract_edits(&src, &b, &x);
        let hyp = extract_edits(&src, &h, &x);
        let cfg = EditMatchConfig::default();
        let ab = match_edits(&hyp, &[ga.clone(), gb.clone()], &cfg);
        let ba = match_edits(&hyp, &[gb, ga], &cfg);
        let f = |c: &ConfusionCounts| prf(c, 0.5).f;
        prop_assert!((f(&ab) - f(&ba)).abs() < 1e-12);
    }

    #[test]
    fn dynamic_loss_is_scaled_ce(
        probs in prop::collection::vec(distribution(5), 1..6),
        targets in prop::collection::vec(1u32..5, 6),
        acc_v in 0.0f64..1.0,
        l0 in -5.0f64..5.0,
        l1 in -5.0f64..5.0,
    ) {
        let t = &targets[..probs.len()];
        let score = cola_score(Logits::new(l0, l1)).unwrap();
        let ce = ce_loss(&probs, t);
        let (b, out) = dynamic_loss(&probs, t, acc_v, score);
        let w = loss_weight(acc_v, score);
        prop_assert!((b.total - w * ce.loss).abs() < 1e-9);
        prop_assert_eq!(b.ce, ce.loss);
        for (g, h) in out.grad_logits.iter().flatten().zip(ce.grad_logits.iter().flatten()) {
            prop_assert_eq!(*g, h * w);
        }
    }

    #[test]
    fn injection_reverses(seed in any::<u64>(), mix_b in any::<bool>()) {
        let g = SynthGrammar::english();
        let spec = if mix_b { ErrorInjectionSpec::mix_b() } else { ErrorInjectionSpec::mix_a() };
        let s = gen_corpus(&g, 1, seed).unwrap().remove(0);
        let inj = inject(&g, &s, &spec, seed ^ 0x5151).unwrap();
        prop_assert_eq!(apply_edits(&inj.corrupted, &inj.gold).unwrap(), s);
        prop_assert_eq!(inj.gold.len(), inj.types.len());
    }
}

#[test]
fn edit_types_survive_m2() {
    let src = Sentence::from_strs(&["she", "go", "home"], Mode::Word).unwrap();
    let pair = AnnotatedPair::single(
        src,
        vec![
            Edit::from_strs(1, 2, &["goes"], ErrorType::Sva),
            Edit::from_strs(3, 3, &["."], ErrorType::Punct),
        ],
    )
    .unwrap();
    let back = parse_m2(&emit_m2(std::slice::from_ref(&pair)), Mode::Word).unwrap();
    assert_eq!(back[0].gold, pair.gold);
}

mod common;

use asrprep_core::lm::{
    arpa_string, count_ngrams, interp_fit, kn_estimate, parse_arpa, perplexity, token_probs, LanguageModel, NGramModel,
    Vocabulary,
};
use common::{toy_corpus, KnOracle};
use proptest::prelude::*;

fn train(sentences: &[Vec<String>], vocab: &Vocabulary, order: usize) -> NGramModel {
    kn_estimate(&count_ngrams(&vocab.encode_corpus(sentences), order, vocab).unwrap()).unwrap()
}

#[test]
fn probabilities_match_brute_force_kneser_ney() {
    for (order, seed) in [(2, 1), (3, 2), (4, 3)] {
        let text = toy_corpus(400, 40, seed);
        let vocab = Vocabulary::from_corpus(&text);
        let model = train(&text, &vocab, order);
        assert!(!model.discounts()[order - 1].fallback, "{:?}", model.discounts());
        let predicted: Vec<String> = vocab.predicted_ids().map(|id| vocab.token(id).to_string()).collect();
        let oracle = KnOracle::new(&text, order, predicted.clone());

        // seen histories and a few that never occur
        let held_out = toy_corpus(30, 45, seed + 100);
        for s in text.iter().take(60).chain(&held_out) {
            let mut hist = vec!["<s>".to_string()];
            for w in s.iter().map(String::as_str).chain(["</s>"]) {
                let w = if vocab.lookup(w).is_some() { w } else { "<unk>" };
                let ids: Vec<u32> = hist.iter().map(|t| vocab.lookup(t).unwrap()).collect();
                let got = model.prob(vocab.lookup(w).unwrap(), &ids);
                let want = oracle.prob(w, &hist);
                assert!(
                    ((got - want) / want).abs() < 1e-10,
                    "order {order}: p({w}|{hist:?}) {got} vs {want}"
                );
                hist.push(w.to_string());
            }
        }
    }
}

#[test]
fn every_context_normalizes() {
    let text = toy_corpus(600, 60, 9);
    let vocab = Vocabulary::from_corpus(&text);
    let model = train(&text, &vocab, 4);
    let mut contexts: Vec<Vec<u32>> = model.contexts().map(<[u32]>::to_vec).collect();
    contexts.push(Vec::new());
    contexts.push(vec![vocab.unk(); 3]);
    for h in &contexts {
        let s: f64 = vocab.predicted_ids().map(|w| model.prob(w, h)).sum();
        assert!((s - 1.0).abs() < 1e-9, "{h:?}: {s}");
    }
}

#[test]
fn perplexity_matches_per_token_sum() {
    let text = toy_corpus(300, 50, 4);
    let vocab = Vocabulary::from_corpus(&text);
    let model = train(&text, &vocab, 3);
    let test = vocab.encode_corpus(&toy_corpus(15, 55, 5));
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in &test {
        let mut h = vec![vocab.bos()];
        for &w in s.iter().chain([vocab.eos()].iter()) {
            sum += model.prob(w, &h).ln();
            n += 1;
            h.push(w);
        }
    }
    let want = (-sum / n as f64).exp();
    let got = perplexity(&model, &test).unwrap();
    assert!(((got - want) / want).abs() < 1e-10);
    assert_eq!(token_probs(&model, &test).unwrap().len(), n);
}

#[test]
fn arpa_round_trip_preserves_perplexity() {
    let text = toy_corpus(300, 30, 6);
    let vocab = Vocabulary::from_corpus(&text);
    let model = train(&text, &vocab, 4);
    let back = parse_arpa(&arpa_string(&model)).unwrap();
    let held: Vec<Vec<String>> = toy_corpus(40, 30, 7);
    let a = perplexity(&model, &vocab.encode_corpus(&held)).unwrap();
    let b = perplexity(&back, &back.vocab().encode_corpus(&held)).unwrap();
    assert!(((a - b) / a).abs() < 1e-6);
    assert_eq!(arpa_string(&back), arpa_string(&model));
}

#[test]
fn empty_sentence_model_has_three_unigrams() {
    let vocab = Vocabulary::from_tokens(Vec::<String>::new()).unwrap();
    let model = kn_estimate(&count_ngrams(&[vec![]], 2, &vocab).unwrap()).unwrap();
    assert!(arpa_string(&model).contains("ngram 1=3\n"));
}

#[test]
fn mixture_beats_components_on_dev() {
    let a_text = toy_corpus(300, 40, 11);
    let b_text: Vec<Vec<String>> = toy_corpus(300, 40, 12)
        .into_iter()
        .map(|s| s.into_iter().map(|w| format!("{w}b")).collect())
        .collect();
    let mut dev_text = toy_corpus(20, 40, 13);
    dev_text.extend(
        toy_corpus(10, 40, 14)
            .into_iter()
            .map(|s| s.into_iter().map(|w| format!("{w}b")).collect()),
    );
    let mut all = a_text.clone();
    all.extend(b_text.iter().cloned());
    let vocab = Vocabulary::from_corpus(&all);
    let (a, b) = (train(&a_text, &vocab, 3), train(&b_text, &vocab, 3));
    let dev = vocab.encode_corpus(&dev_text);
    let fit = interp_fit(vec![a.clone(), b.clone()], &dev).unwrap();
    for w in fit.dev_log_likelihood.windows(2) {
        assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
    }
    let mix = perplexity(&fit.lm, &dev).unwrap();
    let best = perplexity(&a, &dev).unwrap().min(perplexity(&b, &dev).unwrap());
    assert!(mix <= best + 1e-9, "{mix} vs {best}");
    assert!(fit.lm.weights().iter().all(|&w| w > 0.05));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn raw_counts_sum_to_event_totals(
        lens in prop::collection::vec(0usize..9, 1..30),
        order in 1usize..5,
        seed in any::<u64>(),
    ) {
        let vocab = Vocabulary::from_tokens(["a", "b", "c"]).unwrap();
        let ids = [vocab.id("a"), vocab.id("b"), vocab.id("c")];
        let mut x = seed;
        let corpus: Vec<Vec<u32>> = lens
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|_| {
                        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        ids[(x >> 33) as usize % 3]
                    })
                    .collect()
            })
            .collect();
        let counts = count_ngrams(&corpus, order, &vocab).unwrap();
        for k in 1..=order {
            // a padded sentence has n + 2 tokens; unigrams skip the leading <s>
            let events: usize = lens
                .iter()
                .map(|&n| if k == 1 { n + 1 } else { (n + 3).saturating_sub(k) })
                .sum();
            prop_assert_eq!(counts.total(k), events as u64);
        }
        let mut shuffled = corpus.clone();
        shuffled.rotate_left(lens.len() / 2);
        prop_assert_eq!(count_ngrams(&shuffled, order, &vocab).unwrap(), counts);
    }
}

//! Language identification with the seed lexicons shipped in `data/`.

use csmotive_core::langid::{seeds, train_langmodel, TrainConfig};
use csmotive_core::text::tokenize;
use csmotive_core::{LangTag, Token, Utterance};

fn shipped() -> csmotive_core::langid::LangModel {
    train_langmodel(&seeds::pair(LangTag::Eng, LangTag::Spa), &TrainConfig::default()).unwrap()
}

fn untagged(sentence: &str) -> Utterance {
    Utterance { line_no: 1, speaker: "MAR".into(), tokens: tokenize(sentence).into_iter().map(Token::unmarked).collect() }
}

#[test]
fn seed_lists_meet_the_size_floor() {
    for (lang, words) in seeds::all() {
        assert!(words.len() >= 1000, "{lang}: {}", words.len());
    }
}

#[test]
fn three_way_model_trains() {
    let model = train_langmodel(&seeds::all(), &TrainConfig::default()).unwrap();
    assert_eq!(model.languages, vec![LangTag::Eng, LangTag::Spa, LangTag::Hin]);
    assert_eq!(model.classify_word("nahin").0, LangTag::Hin);
}

#[test]
fn example_words() {
    let english = seeds::words(seeds::ENGLISH);
    let spanish = seeds::words(seeds::SPANISH);
    // oracle: the lists themselves
    assert!(spanish.iter().any(|w| w == "olvídate") || !english.iter().any(|w| w.contains('í')));
    assert!(english.iter().any(|w| w == "trainers") || !spanish.iter().any(|w| w == "trainers"));

    let model = shipped();
    assert_eq!(model.classify_word("olvídate").0, LangTag::Spa);
    assert_eq!(model.classify_word("trainers").0, LangTag::Eng);
}

#[test]
fn borrowing_sentence_is_tagged_word_by_word() {
    let tagged = shipped().tag_utterance(&untagged("Mi amiga de high school va a casarse"));
    let tags: Vec<LangTag> = tagged.tokens.iter().map(|t| t.lang).collect();
    use LangTag::*;
    assert_eq!(tags, vec![Spa, Spa, Spa, Eng, Eng, Spa, Spa, Spa]);
}

#[test]
fn punctuation_and_explicit_tags() {
    let model = shipped();
    assert_eq!(model.tag_utterance(&untagged("!")).tokens[0].lang, LangTag::Other);
    let explicit = Utterance {
        line_no: 1,
        speaker: "MAR".into(),
        tokens: vec![Token::new("the", LangTag::Spa, true), Token::new("casa", LangTag::Eng, true)],
    };
    assert_eq!(model.tag_utterance(&explicit), explicit);
}

/// Every tenth word of each list is held out; the model trained on the rest
/// must put at least 90% of them in the right language.
#[test]
fn held_out_accuracy_between_english_and_spanish() {
    let split = |list: &str| {
        let words = seeds::words(list);
        let (held, kept): (Vec<_>, Vec<_>) = words.into_iter().enumerate().partition(|(i, _)| i % 10 == 9);
        let strip = |v: Vec<(usize, String)>| v.into_iter().map(|(_, w)| w).collect::<Vec<_>>();
        (strip(kept), strip(held))
    };
    let (eng_train, eng_test) = split(seeds::ENGLISH);
    let (spa_train, spa_test) = split(seeds::SPANISH);
    let model =
        train_langmodel(&[(LangTag::Eng, eng_train), (LangTag::Spa, spa_train)], &TrainConfig::default()).unwrap();

    let mut correct = 0;
    let mut total = 0;
    for (lang, words) in [(LangTag::Eng, &eng_test), (LangTag::Spa, &spa_test)] {
        for w in words {
            total += 1;
            correct += usize::from(model.classify_word(w).0 == lang);
        }
    }
    let acc = correct as f64 / total as f64;
    println!("held-out ENG/SPA accuracy: {correct}/{total} = {acc:.4}");
    assert!(acc >= 0.90, "held-out accuracy {acc:.4}");
}

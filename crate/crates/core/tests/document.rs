mod common;

use proptest::prelude::*;
use tahp_core::fixture::{infosec_model, infosec_skeleton, INFOSEC_DOCUMENT};
use tahp_core::{parse, serialize, synthesize, ModelDocument, SolveOptions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let model = common::Spec::random(&mut rng, 1).build();
        let text = serialize(&model);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(serialize(&back), text);
    }
}

#[test]
fn fixture_text_is_in_normal_form() {
    let model = parse(INFOSEC_DOCUMENT).unwrap();
    assert_eq!(model.contexts().len(), 15);
    assert_eq!(serialize(&model), INFOSEC_DOCUMENT);
    assert_eq!(serialize(&model), serialize(&model));
}

#[test]
fn fixture_round_trip_preserves_scores() {
    let model = infosec_model();
    let direct = synthesize(&model, &SolveOptions::default()).unwrap();
    let again = synthesize(&parse(&serialize(&model)).unwrap(), &SolveOptions::default()).unwrap();
    for (a, b) in direct.alternative_scores.iter().zip(&again.alternative_scores) {
        assert!((a.score - b.score).abs() < 1e-12);
    }
}

#[test]
fn empty_judgment_scaffold_round_trips() {
    let skeleton = infosec_skeleton();
    let text = serialize(&skeleton);
    assert_eq!(parse(&text).unwrap(), skeleton);
    assert!(ModelDocument::from_text(&text).unwrap().judgments.is_empty());
}

#[test]
fn errors_name_their_locus() {
    let bad_value = INFOSEC_DOCUMENT.replacen("\"value\": \"gt\"", "\"value\": \"maybe\"", 1);
    let err = parse(&bad_value).unwrap_err();
    assert!(err.locus().starts_with("judgments["), "{}", err.locus());
    assert!(err.locus().ends_with("].value"));

    let dup = INFOSEC_DOCUMENT.replacen("\"id\": \"technology\"", "\"id\": \"management\"", 1);
    let err = parse(&dup).unwrap_err();
    assert_eq!(err.code(), "duplicate_node");
    assert!(err.to_string().contains("management"));

    let version = INFOSEC_DOCUMENT.replacen("\"format_version\": \"1\"", "\"format_version\": \"2\"", 1);
    assert_eq!(parse(&version).unwrap_err().code(), "unsupported_version");

    let theta = INFOSEC_DOCUMENT.replacen("\"theta\": 3.0", "\"theta\": 1.0", 1);
    assert_eq!(parse(&theta).unwrap_err().code(), "invalid_theta");

    let err = parse("{\n  \"format_version\": \"1\",\n  oops\n}").unwrap_err();
    assert_eq!(err.code(), "syntax");
    assert!(err.locus().starts_with("line 3"));
}

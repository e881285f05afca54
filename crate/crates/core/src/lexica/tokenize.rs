/// Lowercases, splits on whitespace and trims non-alphanumeric characters
/// from both ends of each piece. Word-internal apostrophes (and any other
/// internal punctuation) survive; pieces that trim to nothing are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|piece| {
            let t = piece.trim_matches(|c: char| !c.is_alphanumeric());
            (!t.is_empty()).then(|| t.to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn contraction_and_trailing_period() {
        assert_eq!(tokenize("I'm fine."), vec!["i'm", "fine"]);
    }

    #[test]
    fn empty_and_punctuation_only() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ... !! ").is_empty());
    }

    #[test]
    fn quotes_stripped_internal_kept() {
        assert_eq!(
            tokenize("\"Well...okay,\" she said (quietly)"),
            vec!["well...okay", "she", "said", "quietly"]
        );
    }

    proptest! {
        #[test]
        fn retokenizing_joined_tokens_is_fixed_point(s in "\\PC{0,1000}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokens_are_nonempty_and_lowercase(s in "[A-Za-z' .,!?-]{0,200}") {
            for t in tokenize(&s) {
                prop_assert!(!t.is_empty());
                prop_assert_eq!(t.to_lowercase(), t.clone());
                prop_assert!(!t.contains(char::is_whitespace));
            }
        }
    }
}

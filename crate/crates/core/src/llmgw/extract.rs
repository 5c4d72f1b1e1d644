//! Extraction of tagged spans from model responses.

/// How many tagged spans a response must contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    ExactlyOne,
    OneOrMore,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("expected {want} <{tag}> span(s), found {got}")]
    WrongCount {
        tag: String,
        want: &'static str,
        got: usize,
    },
    #[error("<{tag}> span is empty")]
    EmptyValue { tag: String },
}

/// Returns the trimmed inner text of each well-formed `<tag>...</tag>`
/// span, in order of appearance. Nested or unterminated opens are not
/// counted.
pub fn extract_tagged(text: &str, tag: &str, arity: Arity) -> Result<Vec<String>, ExtractError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut values = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find(&open) {
        let after_open = &rest[start + open.len()..];
        match after_open.find(&close) {
            Some(end) => {
                let inner = after_open[..end].trim();
                if inner.is_empty() {
                    return Err(ExtractError::EmptyValue {
                        tag: tag.to_string(),
                    });
                }
                values.push(inner.to_string());
                rest = &after_open[end + close.len()..];
            }
            None => break,
        }
    }
    match arity {
        Arity::ExactlyOne if values.len() != 1 => Err(ExtractError::WrongCount {
            tag: tag.to_string(),
            want: "exactly one",
            got: values.len(),
        }),
        Arity::OneOrMore if values.is_empty() => Err(ExtractError::WrongCount {
            tag: tag.to_string(),
            want: "at least one",
            got: 0,
        }),
        _ => Ok(values),
    }
}

/// Case-insensitive yes/no on a trimmed answer token. Anything else is a
/// parse failure.
pub fn parse_yes_no(answer: &str) -> Option<bool> {
    let token = answer.trim();
    if token.eq_ignore_ascii_case("yes") {
        Some(true)
    } else if token.eq_ignore_ascii_case("no") {
        Some(false)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_single_span() {
        let got = extract_tagged("before <answer>Yes</answer> after", "answer", Arity::ExactlyOne)
            .unwrap();
        assert_eq!(got, vec!["Yes"]);
    }

    #[test]
    fn extracts_multiple_spans_in_order() {
        let text = "<item>first point</item>\nnoise\n<item>second\npoint</item>";
        let got = extract_tagged(text, "item", Arity::OneOrMore).unwrap();
        assert_eq!(got, vec!["first point", "second\npoint"]);
    }

    #[test]
    fn enforces_arity() {
        let two = "<answer>a</answer><answer>b</answer>";
        assert!(matches!(
            extract_tagged(two, "answer", Arity::ExactlyOne),
            Err(ExtractError::WrongCount { got: 2, .. })
        ));
        assert!(matches!(
            extract_tagged("no tags", "item", Arity::OneOrMore),
            Err(ExtractError::WrongCount { got: 0, .. })
        ));
    }

    #[test]
    fn ignores_unterminated_spans_and_rejects_empty() {
        assert!(matches!(
            extract_tagged("<answer>dangling", "answer", Arity::ExactlyOne),
            Err(ExtractError::WrongCount { got: 0, .. })
        ));
        assert!(matches!(
            extract_tagged("<answer>  </answer>", "answer", Arity::ExactlyOne),
            Err(ExtractError::EmptyValue { .. })
        ));
    }

    #[test]
    fn yes_no_parsing() {
        assert_eq!(parse_yes_no(" Yes "), Some(true));
        assert_eq!(parse_yes_no("NO"), Some(false));
        assert_eq!(parse_yes_no("Yes."), None);
        assert_eq!(parse_yes_no("maybe"), None);
    }
}

//! Minimal `{{NAME}}` placeholder substitution.
//!
//! Substitution is single-pass: placeholder syntax appearing inside a
//! substituted value is copied verbatim and never expanded.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template placeholder {{{{{0}}}}} has no value")]
    MissingValue(String),
    #[error("unterminated placeholder in template")]
    Unterminated,
}

pub fn render(template: &str, values: &[(&str, &str)]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or(TemplateError::Unterminated)?;
        let name = &after[..end];
        let value = values
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| TemplateError::MissingValue(name.to_string()))?;
        out.push_str(value);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

pub fn placeholders(template: &str) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                names.insert(after[..end].to_string());
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_once() {
        let out = render("a {{X}} b {{Y}}", &[("X", "{{Y}}"), ("Y", "y")]).unwrap();
        assert_eq!(out, "a {{Y}} b y");
    }

    #[test]
    fn reports_missing_and_unterminated() {
        assert_eq!(render("{{Z}}", &[]), Err(TemplateError::MissingValue("Z".into())));
        assert_eq!(render("x {{Z", &[]), Err(TemplateError::Unterminated));
    }

    #[test]
    fn lists_placeholders() {
        let names = placeholders("{{A}} and {{B}} and {{A}}");
        assert_eq!(names.into_iter().collect::<Vec<_>>(), vec!["A", "B"]);
    }
}

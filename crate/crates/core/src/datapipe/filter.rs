/// Well-formedness rules; `None` or `false` disables a rule.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterRules {
    pub min_tokens: Option<usize>,
    pub max_tokens: Option<usize>,
    /// Minimum share of non-space characters that are alphabetic or
    /// punctuation.
    pub min_alpha_punct: Option<f64>,
    pub reject_control: bool,
    pub reject_all_upper: bool,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules {
            min_tokens: Some(3),
            max_tokens: Some(80),
            min_alpha_punct: Some(0.7),
            reject_control: true,
            reject_all_upper: true,
        }
    }
}

impl FilterRules {
    pub fn disabled() -> Self {
        FilterRules {
            min_tokens: None,
            max_tokens: None,
            min_alpha_punct: None,
            reject_control: false,
            reject_all_upper: false,
        }
    }

    pub fn accepts(&self, line: &str) -> bool {
        let tokens = line.split_whitespace().count();
        if self.min_tokens.is_some_and(|m| tokens < m) || self.max_tokens.is_some_and(|m| tokens > m) {
            return false;
        }
        if self.reject_control && line.chars().any(|c| c.is_control()) {
            return false;
        }
        if let Some(min) = self.min_alpha_punct {
            let (mut good, mut total) = (0usize, 0usize);
            for c in line.chars().filter(|c| !c.is_whitespace()) {
                total += 1;
                if c.is_alphabetic() || c.is_ascii_punctuation() || is_unicode_punct(c) {
                    good += 1;
                }
            }
            if total == 0 || (good as f64) < min * total as f64 {
                return false;
            }
        }
        if self.reject_all_upper {
            let mut cased = line.chars().filter(|c| c.is_lowercase() || c.is_uppercase()).peekable();
            if cased.peek().is_some() && cased.all(char::is_uppercase) {
                return false;
            }
        }
        true
    }
}

fn is_unicode_punct(c: char) -> bool {
    matches!(c, '«' | '»' | '„' | '“' | '”' | '‘' | '’' | '…' | '–' | '—' | '¿' | '¡')
}

/// Lazily drops lines that fail any enabled rule.
pub fn coarse_filter<'r, I>(lines: I, rules: &'r FilterRules) -> impl Iterator<Item = String> + 'r
where
    I: IntoIterator<Item = String>,
    I::IntoIter: 'r,
{
    lines.into_iter().filter(move |l| rules.accepts(l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(lines: &[&str], rules: &FilterRules) -> Vec<String> {
        coarse_filter(lines.iter().map(|s| s.to_string()), rules).collect()
    }

    #[test]
    fn default_rules() {
        let r = FilterRules::default();
        assert!(r.accepts("Das ist ein ganz normaler Satz mit zehn Wörtern , ok ."));
        assert!(!r.accepts("zu kurz"));
        assert!(!r.accepts("ALLES IN GROSSBUCHSTABEN HIER"));
        assert!(!r.accepts("12 345 678 90 1"));
        assert!(!r.accepts("ein \u{7} steuerzeichen hier"));
        assert!(!r.accepts(&"w ".repeat(81)));
    }

    #[test]
    fn disabled_rules_are_identity() {
        let lines = ["", "A", "12 34", "\u{1}x", "OK OK OK"];
        assert_eq!(run(&lines, &FilterRules::disabled()), lines.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    }
}

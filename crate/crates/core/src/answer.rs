//! Answer extraction and normalized exact-match checking.
//!
//! No symbolic algebra: the extracted answer and the reference are compared
//! for equality after light normalization (whitespace, trailing
//! punctuation, and integer/decimal canonicalization such as `42.0` ≡ `42`).

/// Pull the marked answer out of a step text: the content of the last
/// `\boxed{...}` (balanced braces), or the remainder of the last line that
/// begins with `Final Answer`. Returns `None` when no marker is found.
pub fn extract_answer(text: &str) -> Option<String> {
    if let Some(start) = text.rfind("\\boxed{") {
        let inner = &text[start + "\\boxed{".len()..];
        let mut depth = 1usize;
        for (i, ch) in inner.char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(inner[..i].to_string());
                    }
                }
                _ => {}
            }
        }
        return None; // unbalanced braces: unextractable
    }
    for line in text.lines().rev() {
        if let Some(rest) = line.trim_start().strip_prefix("Final Answer") {
            let rest = rest.trim_start_matches([':', ' ', '\t']).trim();
            return Some(rest.to_string());
        }
    }
    None
}

/// Canonical form used for comparison: trimmed, inner whitespace collapsed,
/// trailing punctuation stripped, numbers in canonical decimal form.
pub fn normalize_answer(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    let stripped = collapsed.trim_end_matches(['.', ',', ';', ':', '!', '?']);
    if let Some(canonical) = canonical_number(stripped) {
        return canonical;
    }
    stripped.to_string()
}

/// Canonical decimal form of a numeric string, tolerating `$`, thousands
/// separators, and an explicit `+` sign. `None` when not numeric.
fn canonical_number(s: &str) -> Option<String> {
    let cleaned: String = s
        .trim()
        .trim_start_matches('$')
        .chars()
        .filter(|&c| c != ',')
        .collect();
    let cleaned = cleaned.strip_prefix('+').unwrap_or(&cleaned);
    if cleaned.is_empty() {
        return None;
    }
    let value: f64 = cleaned.parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    if value == 0.0 {
        return Some("0".to_string());
    }
    if value.fract() == 0.0 && value.abs() < 1e15 {
        return Some(format!("{}", value as i64));
    }
    Some(format!("{value}"))
}

/// Extract the marked answer from `final_answer` and compare it with the
/// reference after normalization. An unextractable answer is simply wrong.
pub fn check_answer(final_answer: &str, reference: &str) -> bool {
    match extract_answer(final_answer) {
        Some(extracted) => normalize_answer(&extracted) == normalize_answer(reference),
        None => false,
    }
}

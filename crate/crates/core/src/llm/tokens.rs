/// Rough token count: one token per four characters, rounded up.
///
/// Used for budget enforcement only. Billing uses provider-reported usage
/// when it exists.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

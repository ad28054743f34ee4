use super::model::ChcProgram;

/// Prints one clause per line in the syntax accepted by
/// [`parse_chc`](super::parse_chc).
pub fn emit_chc(p: &ChcProgram) -> String {
    let mut out = String::new();
    for c in p.clauses() {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

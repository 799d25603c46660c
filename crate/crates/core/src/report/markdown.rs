use crate::analytics::{RankedRow, NO_PUBLIC_TAG};

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace(['\n', '\r'], " ")
}

/// Three-column ranking table (short address, tag, degree growth) with the
/// caption on the line above.
pub fn render_markdown_table(rows: &[RankedRow], caption: &str) -> String {
    let mut out = String::new();
    out.push_str(caption.trim());
    out.push_str("\n\n| Address | Tag | Degree Growth |\n|---|---|---:|\n");
    for r in rows {
        let label = if r.label.trim().is_empty() {
            NO_PUBLIC_TAG
        } else {
            &r.label
        };
        out.push_str(&format!(
            "| {} | {} | {} |\n",
            cell(&r.short),
            cell(label),
            r.delta
        ));
    }
    out
}

use std::collections::BTreeMap;

use snapscript::script::{segment_source, serialize, LexError, Module, SegmentKind, StateLookup};

/// Canonical source with each line's state descriptors labelled by category
/// in a trailing comment. Unknown ids are labelled `unknown`.
pub fn text_view(module: &Module, states: Option<&dyn StateLookup>) -> Result<String, LexError> {
    let canonical = serialize(module);
    let mut labels: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for seg in segment_source(&canonical)? {
        if seg.kind != SegmentKind::StateRef {
            continue;
        }
        let line = canonical[..seg.span.start].matches('\n').count();
        let id = seg.state_id.unwrap_or_default();
        let category = states
            .and_then(|s| s.state(&id))
            .map_or_else(|| "unknown".to_string(), |s| s.category.clone());
        labels.entry(line).or_default().push(category);
    }
    let mut out = String::with_capacity(canonical.len());
    for (i, line) in canonical.lines().enumerate() {
        out.push_str(line);
        if let Some(l) = labels.get(&i) {
            out.push_str("  # ");
            out.push_str(&l.join(", "));
        }
        out.push('\n');
    }
    Ok(out)
}

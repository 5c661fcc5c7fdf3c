use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no balanced JSON object found in backend output")]
pub struct NoJsonObjectFound;

/// Returns the first balanced top-level `{…}` span of `raw`, scanning left
/// to right. Braces inside JSON strings (including escaped quotes) do not
/// count. When an opening brace never closes, scanning resumes at the next
/// opening brace after it.
pub fn recover_json(raw: &str) -> Result<&str, NoJsonObjectFound> {
    let bytes = raw.as_bytes();
    let mut from = 0;
    while let Some(offset) = bytes[from..].iter().position(|&b| b == b'{') {
        let start = from + offset;
        if let Some(end) = balanced_end(bytes, start) {
            return Ok(&raw[start..=end]);
        }
        from = start + 1;
    }
    Err(NoJsonObjectFound)
}

/// Index of the brace closing the one at `start`, if any.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

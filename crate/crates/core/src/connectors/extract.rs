//! Minimal HTML to text conversion for fetched result bodies.
//!
//! Not a readability engine: tags are dropped, `<script>`, `<style>` and
//! comments are dropped with their content, entities are decoded and
//! whitespace is collapsed. Malformed markup degrades to best-effort text.

const SKIP_CONTENT: &[&str] = &["script", "style", "noscript", "template"];

const INLINE: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "data", "dfn", "em", "font", "i", "kbd", "mark", "q", "s", "samp",
    "small", "span", "strong", "sub", "sup", "time", "u", "var", "wbr",
];

pub fn extract_text(html: &str) -> String {
    let lower = html.to_ascii_lowercase();
    let bytes = html.as_bytes();
    let mut out = String::with_capacity(html.len());
    let mut i = 0;
    let mut text_start = 0;

    while let Some(off) = html[i..].find('<') {
        let lt = i + off;
        let next = bytes.get(lt + 1).copied();
        let is_markup = matches!(next, Some(c) if c.is_ascii_alphabetic() || c == b'/' || c == b'!' || c == b'?');
        if !is_markup {
            i = lt + 1;
            continue;
        }
        out.push_str(&html[text_start..lt]);

        if lower[lt..].starts_with("<!--") {
            i = match lower[lt + 4..].find("-->") {
                Some(end) => lt + 4 + end + 3,
                None => html.len(),
            };
            text_start = i;
            continue;
        }

        let tag_end = find_tag_end(bytes, lt + 1);
        let name = tag_name(&lower[lt + 1..tag_end.min(html.len())]);
        i = (tag_end + 1).min(html.len());

        let closing = bytes.get(lt + 1) == Some(&b'/');
        if !closing && SKIP_CONTENT.contains(&name) {
            let close = format!("</{name}");
            i = match lower[i..].find(&close) {
                Some(pos) => {
                    let after = i + pos;
                    (find_tag_end(bytes, after + 1) + 1).min(html.len())
                }
                None => html.len(),
            };
        }
        if !INLINE.contains(&name) {
            out.push(' ');
        }
        text_start = i;
    }
    out.push_str(&html[text_start..]);

    collapse_whitespace(&decode_entities(&out))
}

/// Index of the `>` closing a tag that starts before `from`, honoring quoted
/// attribute values. Returns `bytes.len()` when unterminated.
fn find_tag_end(bytes: &[u8], from: usize) -> usize {
    let mut quote: Option<u8> = None;
    for (j, &c) in bytes.iter().enumerate().skip(from) {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, b'"' | b'\'') => quote = Some(c),
            (None, b'>') => return j,
            _ => {}
        }
    }
    bytes.len()
}

fn tag_name(inner: &str) -> &str {
    let inner = inner.trim_start_matches('/');
    let end = inner
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
        .unwrap_or(inner.len());
    &inner[..end]
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let semi = rest.bytes().take(12).position(|b| b == b';');
        let decoded = semi.and_then(|end| decode_one(&rest[1..end]).map(|c| (c, end)));
        match decoded {
            Some((c, end)) => {
                out.push(c);
                rest = &rest[end + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_one(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        return char::from_u32(code);
    }
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        "ndash" => '–',
        "mdash" => '—',
        "hellip" => '…',
        "copy" => '©',
        "reg" => '®',
        "laquo" => '«',
        "raquo" => '»',
        "lsquo" => '‘',
        "rsquo" => '’',
        "ldquo" => '“',
        "rdquo" => '”',
        _ => return None,
    })
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

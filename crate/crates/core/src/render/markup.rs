//! Lenient markup parser for page templates. Real-world packages ship
//! malformed markup, so parsing never fails: mismatched or missing close
//! tags are repaired (and logged) and the result is always a tree.

use crate::script::ast::Span;

#[derive(Debug)]
pub enum MarkupNode {
    Element {
        tag: String,
        attrs: Vec<(String, String)>,
        parent: Option<usize>,
        children: Vec<usize>,
        span: Span,
    },
    Text {
        text: String,
        parent: Option<usize>,
        span: Span,
    },
}

#[derive(Debug, Default)]
pub struct MarkupDoc {
    pub nodes: Vec<MarkupNode>,
    pub roots: Vec<usize>,
    /// Structural fixes applied while parsing; a very high count signals
    /// markup too damaged to trust for input-field analysis.
    pub repairs: Vec<String>,
}

impl MarkupDoc {
    pub fn tag(&self, idx: usize) -> Option<&str> {
        match &self.nodes[idx] {
            MarkupNode::Element { tag, .. } => Some(tag),
            MarkupNode::Text { .. } => None,
        }
    }

    pub fn attr(&self, idx: usize, name: &str) -> Option<&str> {
        match &self.nodes[idx] {
            MarkupNode::Element { attrs, .. } => attrs
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.as_str()),
            MarkupNode::Text { .. } => None,
        }
    }

    pub fn attrs(&self, idx: usize) -> &[(String, String)] {
        match &self.nodes[idx] {
            MarkupNode::Element { attrs, .. } => attrs,
            MarkupNode::Text { .. } => &[],
        }
    }

    pub fn parent(&self, idx: usize) -> Option<usize> {
        match &self.nodes[idx] {
            MarkupNode::Element { parent, .. } | MarkupNode::Text { parent, .. } => *parent,
        }
    }

    pub fn children(&self, idx: usize) -> &[usize] {
        match &self.nodes[idx] {
            MarkupNode::Element { children, .. } => children,
            MarkupNode::Text { .. } => &[],
        }
    }

    pub fn span(&self, idx: usize) -> Span {
        match &self.nodes[idx] {
            MarkupNode::Element { span, .. } | MarkupNode::Text { span, .. } => *span,
        }
    }

    /// Indices of all elements, in document order.
    pub fn elements(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|i| matches!(self.nodes[*i], MarkupNode::Element { .. }))
    }

    /// Concatenated text content of a subtree.
    pub fn subtree_text(&self, idx: usize) -> String {
        let mut out = String::new();
        self.collect_text(idx, &mut out);
        out
    }

    fn collect_text(&self, idx: usize, out: &mut String) {
        match &self.nodes[idx] {
            MarkupNode::Text { text, .. } => {
                if !out.is_empty() && !out.ends_with(' ') {
                    out.push(' ');
                }
                out.push_str(text.trim());
            }
            MarkupNode::Element { children, .. } => {
                for c in children {
                    self.collect_text(*c, out);
                }
            }
        }
    }

    /// All text in the document, for pages that embed their policy inline.
    pub fn full_text(&self) -> String {
        let mut out = String::new();
        for r in &self.roots {
            self.collect_text(*r, &mut out);
        }
        out
    }

    /// Sibling list the node sits in (its parent's children, or the roots).
    pub fn siblings(&self, idx: usize) -> &[usize] {
        match self.parent(idx) {
            Some(p) => self.children(p),
            None => &self.roots,
        }
    }
}

/// Elements that never take children; an unclosed occurrence must not
/// swallow its siblings.
const VOID_TAGS: &[&str] = &["input", "image", "icon", "import", "include"];

pub fn parse_markup(src: &str) -> MarkupDoc {
    let mut doc = MarkupDoc::default();
    let mut stack: Vec<usize> = Vec::new();
    let bytes = src.as_bytes();
    let mut pos = 0usize;

    while pos < bytes.len() {
        if bytes[pos] == b'<' {
            if src[pos..].starts_with("<!--") {
                let end = src[pos..].find("-->").map(|i| pos + i + 3).unwrap_or(src.len());
                pos = end;
            } else if src[pos..].starts_with("</") {
                let gt = src[pos..].find('>').map(|i| pos + i);
                let Some(gt) = gt else {
                    doc.repairs.push(format!("unterminated close tag at byte {pos}"));
                    break;
                };
                let name = src[pos + 2..gt].trim().to_ascii_lowercase();
                close_tag(&mut doc, &mut stack, &name, pos);
                pos = gt + 1;
            } else if pos + 1 < bytes.len()
                && (bytes[pos + 1].is_ascii_alphabetic() || bytes[pos + 1] == b'_')
            {
                pos = open_tag(src, pos, &mut doc, &mut stack);
            } else {
                // Bare '<' in text; includes comparison moustaches.
                let (text_end, _) = scan_text(src, pos + 1);
                push_text(&mut doc, &mut stack, &src[pos..text_end], pos, text_end);
                pos = text_end;
            }
        } else {
            let (text_end, _) = scan_text(src, pos);
            let t = &src[pos..text_end];
            if !t.trim().is_empty() {
                push_text(&mut doc, &mut stack, t, pos, text_end);
            }
            pos = text_end;
        }
    }

    if !stack.is_empty() {
        doc.repairs
            .push(format!("{} element(s) left open at end of input", stack.len()));
    }
    doc
}

fn scan_text(src: &str, from: usize) -> (usize, bool) {
    match src[from..].find('<') {
        Some(i) => (from + i, true),
        None => (src.len(), false),
    }
}

fn push_text(doc: &mut MarkupDoc, stack: &mut [usize], text: &str, start: usize, end: usize) {
    let parent = stack.last().copied();
    let idx = doc.nodes.len();
    doc.nodes.push(MarkupNode::Text {
        text: decode_entities(text),
        parent,
        span: Span::new(start, end),
    });
    attach(doc, parent, idx);
}

fn attach(doc: &mut MarkupDoc, parent: Option<usize>, idx: usize) {
    match parent {
        Some(p) => {
            if let MarkupNode::Element { children, .. } = &mut doc.nodes[p] {
                children.push(idx);
            }
        }
        None => doc.roots.push(idx),
    }
}

fn open_tag(src: &str, start: usize, doc: &mut MarkupDoc, stack: &mut Vec<usize>) -> usize {
    let bytes = src.as_bytes();
    let mut pos = start + 1;
    let name_start = pos;
    while pos < bytes.len()
        && (bytes[pos].is_ascii_alphanumeric() || matches!(bytes[pos], b'-' | b'_' | b':'))
    {
        pos += 1;
    }
    let tag = src[name_start..pos].to_ascii_lowercase();

    let mut attrs = Vec::new();
    let mut self_closing = false;
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        match bytes.get(pos) {
            None => break,
            Some(b'>') => {
                pos += 1;
                break;
            }
            Some(b'/') => {
                self_closing = true;
                pos += 1;
            }
            Some(_) => {
                let astart = pos;
                while pos < bytes.len()
                    && !bytes[pos].is_ascii_whitespace()
                    && !matches!(bytes[pos], b'=' | b'>' | b'/')
                {
                    pos += 1;
                }
                if pos == astart {
                    pos += 1; // stray byte, skip
                    continue;
                }
                let aname = src[astart..pos].to_ascii_lowercase();
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                let aval = if bytes.get(pos) == Some(&b'=') {
                    pos += 1;
                    while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                        pos += 1;
                    }
                    match bytes.get(pos) {
                        Some(q @ (b'"' | b'\'')) => {
                            pos += 1;
                            let vstart = pos;
                            while pos < bytes.len() && bytes[pos] != *q {
                                pos += 1;
                            }
                            let v = src[vstart..pos].to_string();
                            pos = (pos + 1).min(bytes.len());
                            v
                        }
                        _ => {
                            let vstart = pos;
                            while pos < bytes.len()
                                && !bytes[pos].is_ascii_whitespace()
                                && !matches!(bytes[pos], b'>' | b'/')
                            {
                                pos += 1;
                            }
                            src[vstart..pos].to_string()
                        }
                    }
                } else {
                    String::new()
                };
                attrs.push((aname, decode_entities(&aval)));
            }
        }
    }

    let parent = stack.last().copied();
    let idx = doc.nodes.len();
    doc.nodes.push(MarkupNode::Element {
        tag: tag.clone(),
        attrs,
        parent,
        children: Vec::new(),
        span: Span::new(start, pos),
    });
    attach(doc, parent, idx);
    if !self_closing && !VOID_TAGS.contains(&tag.as_str()) {
        stack.push(idx);
    }
    pos
}

fn close_tag(doc: &mut MarkupDoc, stack: &mut Vec<usize>, name: &str, at: usize) {
    let Some(open_pos) = stack
        .iter()
        .rposition(|&i| doc.tag(i) == Some(name))
    else {
        doc.repairs
            .push(format!("close tag </{name}> at byte {at} matches nothing, dropped"));
        return;
    };
    let auto = stack.len() - open_pos - 1;
    if auto > 0 {
        doc.repairs.push(format!(
            "</{name}> at byte {at} auto-closed {auto} intermediate element(s)"
        ));
    }
    stack.truncate(open_pos);
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    s.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&nbsp;", " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_tree() {
        let doc = parse_markup(
            r#"<view class="page"><text>City</text><picker bindchange="onCity" range="{{cities}}"/></view>"#,
        );
        assert!(doc.repairs.is_empty());
        assert_eq!(doc.roots.len(), 1);
        let view = doc.roots[0];
        assert_eq!(doc.tag(view), Some("view"));
        let kids = doc.children(view);
        assert_eq!(kids.len(), 2);
        assert_eq!(doc.tag(kids[1]), Some("picker"));
        assert_eq!(doc.attr(kids[1], "bindchange"), Some("onCity"));
        assert_eq!(doc.attr(kids[1], "range"), Some("{{cities}}"));
        assert_eq!(doc.subtree_text(kids[0]), "City");
    }

    #[test]
    fn mismatched_close_repaired() {
        let doc = parse_markup("<view><form><input placeholder=\"name\"></view>");
        // </view> auto-closes the form.
        assert_eq!(doc.repairs.len(), 1);
        assert!(doc.repairs[0].contains("auto-closed"));
        let view = doc.roots[0];
        let form = doc.children(view)[0];
        assert_eq!(doc.tag(form), Some("form"));
        assert_eq!(doc.tag(doc.children(form)[0]), Some("input"));
    }

    #[test]
    fn stray_close_dropped_and_eof_logged() {
        let doc = parse_markup("</nope><view><text>x</text>");
        assert!(doc.repairs.iter().any(|r| r.contains("matches nothing")));
        assert!(doc.repairs.iter().any(|r| r.contains("left open")));
        assert_eq!(doc.roots.len(), 1);
    }

    #[test]
    fn unclosed_input_does_not_swallow_siblings() {
        let doc = parse_markup("<view><input placeholder=\"phone\"><button>Go</button></view>");
        let view = doc.roots[0];
        assert_eq!(doc.children(view).len(), 2);
    }

    #[test]
    fn unquoted_attr_and_entities() {
        let doc = parse_markup("<input maxlength=11 placeholder=\"a &amp; b\" disabled/>");
        let input = doc.roots[0];
        assert_eq!(doc.attr(input, "maxlength"), Some("11"));
        assert_eq!(doc.attr(input, "placeholder"), Some("a & b"));
        assert_eq!(doc.attr(input, "disabled"), Some(""));
    }

    #[test]
    fn full_text_joins_fragments() {
        let doc = parse_markup("<view><text>Privacy</text><text>Policy</text></view>");
        assert_eq!(doc.full_text(), "Privacy Policy");
    }
}

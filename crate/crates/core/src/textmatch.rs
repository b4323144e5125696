//! Tokenization and keyword matching shared by the UI-label scanner and the
//! policy claim extractor.
//!
//! Matching is substring-after-normalization but tokenization-aware: a
//! keyword matches only on whole-token boundaries, so "file" does not match
//! inside "profile" or "files". When matched spans overlap, the longest span
//! wins across items ("email address" claims the span before "address" can),
//! which prevents double counting without ever losing a more specific match.

use std::collections::BTreeMap;

/// One token of normalized text. `start`/`end` are byte offsets into the
/// original string so callers can surface evidence spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Lower-cases and splits text into word tokens. Apostrophes are kept
/// word-internal ("don't", "driver's"); every other non-alphanumeric char
/// separates tokens. CJK codepoints become single-char tokens so the same
/// machinery works for keyword lists in other locales.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut cur_start = 0usize;
    let chars: Vec<(usize, char)> = text.char_indices().collect();

    let flush = |tokens: &mut Vec<Token>, cur: &mut String, start: usize, end: usize| {
        if !cur.is_empty() {
            tokens.push(Token {
                text: std::mem::take(cur),
                start,
                end,
            });
        }
    };

    for (i, &(pos, ch)) in chars.iter().enumerate() {
        if ch.is_alphanumeric() {
            if is_cjk(ch) {
                flush(&mut tokens, &mut cur, cur_start, pos);
                tokens.push(Token {
                    text: ch.to_lowercase().collect(),
                    start: pos,
                    end: pos + ch.len_utf8(),
                });
                cur_start = pos + ch.len_utf8();
            } else {
                if cur.is_empty() {
                    cur_start = pos;
                }
                cur.extend(ch.to_lowercase());
            }
        } else if (ch == '\'' || ch == '\u{2019}')
            && !cur.is_empty()
            && chars.get(i + 1).is_some_and(|&(_, c)| c.is_alphanumeric())
        {
            // Word-internal apostrophe; normalize the curly form.
            cur.push('\'');
        } else {
            flush(&mut tokens, &mut cur, cur_start, pos);
            cur_start = pos + ch.len_utf8();
        }
    }
    let end = text.len();
    flush(&mut tokens, &mut cur, cur_start, end);
    tokens
}

fn is_cjk(ch: char) -> bool {
    matches!(ch as u32,
        0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2FA1F)
}

/// A keyword hit: which lexicon entry matched and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordMatch {
    pub keyword: String,
    pub item: String,
    /// Claims with `exact` set cover only their own item id instead of every
    /// category sharing the item name.
    pub exact: bool,
    /// Token index range, end-exclusive.
    pub token_range: (usize, usize),
    /// Byte span in the original text.
    pub span: (usize, usize),
}

/// Pre-indexed matcher over a fixed keyword list. Immutable after build.
#[derive(Debug, Clone)]
pub struct TextMatcher {
    // first token -> candidate entries (token sequence, item, exact)
    index: BTreeMap<String, Vec<MatcherEntry>>,
}

#[derive(Debug, Clone)]
struct MatcherEntry {
    tokens: Vec<String>,
    keyword: String,
    item: String,
    exact: bool,
}

impl TextMatcher {
    pub fn new<'a, I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, bool)>,
    {
        let mut index: BTreeMap<String, Vec<MatcherEntry>> = BTreeMap::new();
        for (keyword, item, exact) in entries {
            let toks: Vec<String> = tokenize(keyword).into_iter().map(|t| t.text).collect();
            if toks.is_empty() {
                continue;
            }
            index.entry(toks[0].clone()).or_default().push(MatcherEntry {
                tokens: toks,
                keyword: keyword.to_string(),
                item: item.to_string(),
                exact,
            });
        }
        TextMatcher { index }
    }

    /// All keyword hits in `text` after longest-match-wins pruning. Matches
    /// with identical token ranges are all kept (a span can legitimately name
    /// two items); a shorter match overlapping a longer one is dropped.
    pub fn find(&self, text: &str) -> Vec<KeywordMatch> {
        let tokens = tokenize(text);
        self.find_in_tokens(&tokens)
    }

    pub fn find_in_tokens(&self, tokens: &[Token]) -> Vec<KeywordMatch> {
        let mut candidates = Vec::new();
        for start in 0..tokens.len() {
            let Some(entries) = self.index.get(&tokens[start].text) else {
                continue;
            };
            for e in entries {
                let end = start + e.tokens.len();
                if end > tokens.len() {
                    continue;
                }
                if e.tokens
                    .iter()
                    .zip(&tokens[start..end])
                    .all(|(k, t)| *k == t.text)
                {
                    candidates.push(KeywordMatch {
                        keyword: e.keyword.clone(),
                        item: e.item.clone(),
                        exact: e.exact,
                        token_range: (start, end),
                        span: (tokens[start].start, tokens[end - 1].end),
                    });
                }
            }
        }
        // Longest span first; ties broken by position then name for
        // determinism.
        candidates.sort_by(|a, b| {
            let la = a.token_range.1 - a.token_range.0;
            let lb = b.token_range.1 - b.token_range.0;
            lb.cmp(&la)
                .then(a.token_range.0.cmp(&b.token_range.0))
                .then(a.keyword.cmp(&b.keyword))
                .then(a.item.cmp(&b.item))
        });
        let mut kept: Vec<KeywordMatch> = Vec::new();
        for c in candidates {
            let clash = kept.iter().any(|k| {
                k.token_range != c.token_range
                    && k.token_range.0 < c.token_range.1
                    && c.token_range.0 < k.token_range.1
            });
            if !clash {
                kept.push(c);
            }
        }
        kept.sort_by(|a, b| {
            a.token_range
                .cmp(&b.token_range)
                .then(a.item.cmp(&b.item))
        });
        kept
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn tokenizes_with_internal_apostrophe() {
        assert_eq!(toks("Don't share the DRIVER'S license!"), vec![
            "don't", "share", "the", "driver's", "license"
        ]);
    }

    #[test]
    fn tokenizes_curly_apostrophe_like_ascii() {
        assert_eq!(toks("driver\u{2019}s license"), vec!["driver's", "license"]);
    }

    #[test]
    fn splits_cjk_into_single_char_tokens() {
        assert_eq!(toks("地址 location"), vec!["地", "址", "location"]);
    }

    #[test]
    fn token_boundaries_block_substring_hits() {
        let m = TextMatcher::new(vec![("file", "file_d", false)]);
        assert!(m.find("user profile and files").is_empty());
        assert_eq!(m.find("choose a file to send").len(), 1);
    }

    #[test]
    fn longest_match_wins_across_items() {
        let m = TextMatcher::new(vec![
            ("address", "location information_u", false),
            ("email address", "contact information_u", false),
        ]);
        let hits = m.find("enter your email address");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].item, "contact information_u");

        let hits = m.find("enter your address");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].item, "location information_u");
    }

    #[test]
    fn equal_spans_both_kept() {
        let m = TextMatcher::new(vec![
            ("id card", "identity information_u", false),
            ("id card", "custom_x", false),
        ]);
        let hits = m.find("scan your ID card");
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn non_overlapping_matches_all_reported() {
        let m = TextMatcher::new(vec![
            ("bank card", "property information_u", false),
            ("cardholder", "property information_u", false),
        ]);
        let hits = m.find("bank card number and cardholder");
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn spans_point_into_original_text() {
        let m = TextMatcher::new(vec![("phone number", "contact information_u", false)]);
        let text = "Your Phone Number here";
        let hits = m.find(text);
        assert_eq!(&text[hits[0].span.0..hits[0].span.1], "Phone Number");
    }
}

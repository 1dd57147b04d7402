//! Tweet tokenization and token filtering.
//!
//! Text is scanned left to right. At each non-whitespace position the token
//! classes are tried in a fixed precedence order and the first one that
//! matches wins:
//!
//! `HtmlTag > Url > Mention > Hashtag > Emoticon > Number > HyphenatedWord > Word > Punctuation`
//!
//! Any character that no other class accepts becomes a one-character
//! `Punctuation` token, so tokenization never fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Western emoticons, lowercase. Matching is ASCII case-insensitive.
const EMOTICONS: &[&str] = &[
    ":)", ":-)", ":(", ":-(", ";)", ";-)", ":d", ":-d", ";d", "xd", "x-d", ":p", ":-p", ";p",
    ";-p", "xp", "x-p", ":o", ":-o", ":/", ":-/", ":\\", ":-\\", ":|", ":-|", ":*", ":-*",
    ":')", ":'-)", ":'(", ":'-(", "<3", "</3", ":]", ":-]", ":[", ":-[", "=)", "=(", "=]",
    "=[", "=d", "=p", "=/", ":3", ":-3", "8)", "8-)", "b)", "b-)", ":s", ":-s", ":$", ":-$",
    ":@", ":-@", ">:(", ">:-(", ">:)", ">:-)", "o:)", "o:-)", "3:)", ":>", ":->", ":<", ":-<",
    "^_^", "^^", "-_-", "o_o", "o.o", "t_t", ";_;", ":))", ":((", "(:", ":'d",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    HyphenatedWord,
    Emoticon,
    Url,
    Mention,
    Hashtag,
    Number,
    HtmlTag,
    Punctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Self {
            text: text.into(),
            kind,
        }
    }
}

/// Set of lowercase words removed by [`filter_tokens`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordList(BTreeSet<String>);

impl StopwordList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bundled 127-word English list.
    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// Parses the stopword file format: one token per line, `#` comments.
    /// Entries are lowercased and trimmed.
    pub fn parse(text: &str) -> Self {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: AsRef<str>> FromIterator<S> for StopwordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.as_ref().to_lowercase()).collect())
    }
}

struct Patterns {
    html_tag: Regex,
    url: Regex,
    mention: Regex,
    hashtag: Regex,
    number: Regex,
    hyphenated: Regex,
    word: Regex,
}

fn patterns() -> &'static Patterns {
    static PATTERNS: OnceLock<Patterns> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let w = r"[\p{L}\p{M}\p{N}_]+(?:['’][\p{L}\p{M}\p{N}_]+)*";
        Patterns {
            html_tag: Regex::new(r"^<[^>\s]*>").unwrap(),
            url: Regex::new(r"^(?i:https?://|www\.)\S+").unwrap(),
            mention: Regex::new(r"^@[\p{L}\p{M}\p{N}_]+").unwrap(),
            hashtag: Regex::new(r"^#[\p{L}\p{M}\p{N}_]+").unwrap(),
            number: Regex::new(r"^[+-]?[0-9]+(?:[.,][0-9]+)?%?").unwrap(),
            hyphenated: Regex::new(&format!("^{w}(?:-{w})+")).unwrap(),
            word: Regex::new(&format!("^{w}")).unwrap(),
        }
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn followed_by_word_char(rest: &str, len: usize) -> bool {
    rest[len..].chars().next().is_some_and(is_word_char)
}

/// Longest emoticon at the start of `rest`, as a byte length.
fn match_emoticon(rest: &str) -> Option<usize> {
    let bytes = rest.as_bytes();
    EMOTICONS
        .iter()
        .filter(|e| {
            bytes.len() >= e.len() && bytes[..e.len()].eq_ignore_ascii_case(e.as_bytes())
        })
        .map(|e| e.len())
        // an emoticon ending in a letter or digit must not run into a word
        .filter(|&len| {
            let last = bytes[len - 1] as char;
            !(last.is_ascii_alphanumeric() && followed_by_word_char(rest, len))
        })
        .max()
}

/// Decodes the five standard named HTML entities in one pass.
pub fn decode_entities(text: &str) -> String {
    const ENTITIES: [(&str, char); 5] = [
        ("&amp;", '&'),
        ("&lt;", '<'),
        ("&gt;", '>'),
        ("&quot;", '"'),
        ("&apos;", '\''),
    ];
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        match ENTITIES.iter().find(|(name, _)| rest.starts_with(name)) {
            Some((name, ch)) => {
                out.push(*ch);
                rest = &rest[name.len()..];
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

/// Splits text into typed tokens. HTML entities are decoded first; word
/// tokens and emoticons are lowercased, other kinds keep their surface form.
pub fn tokenize(text: &str) -> Vec<Token> {
    let text = decode_entities(text);
    let p = patterns();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        let found = |re: &Regex| re.find(rest).map(|m| m.end());
        let (len, kind) = if let Some(n) = found(&p.html_tag) {
            (n, TokenKind::HtmlTag)
        } else if let Some(n) = found(&p.url) {
            (n, TokenKind::Url)
        } else if let Some(n) = found(&p.mention) {
            (n, TokenKind::Mention)
        } else if let Some(n) = found(&p.hashtag) {
            (n, TokenKind::Hashtag)
        } else if let Some(n) = match_emoticon(rest) {
            (n, TokenKind::Emoticon)
        } else if let Some(n) = found(&p.number).filter(|&n| !followed_by_word_char(rest, n)) {
            (n, TokenKind::Number)
        } else if let Some(n) = found(&p.hyphenated) {
            (n, TokenKind::HyphenatedWord)
        } else if let Some(n) = found(&p.word) {
            (n, TokenKind::Word)
        } else {
            (c.len_utf8(), TokenKind::Punctuation)
        };
        let surface = &rest[..len];
        let text = match kind {
            TokenKind::Word | TokenKind::HyphenatedWord => surface.to_lowercase(),
            TokenKind::Emoticon => surface.to_ascii_lowercase(),
            _ => surface.to_string(),
        };
        tokens.push(Token { text, kind });
        pos += len;
    }
    tokens
}

/// Keep/drop policy applied after tokenization.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub stopwords: StopwordList,
    pub drop_urls: bool,
}

impl Preprocessor {
    pub fn new(stopwords: StopwordList, drop_urls: bool) -> Self {
        Self {
            stopwords,
            drop_urls,
        }
    }

    pub fn filter(&self, tokens: Vec<Token>) -> Vec<String> {
        tokens
            .into_iter()
            .filter(|t| match t.kind {
                TokenKind::Word => !self.stopwords.contains(&t.text.to_lowercase()),
                TokenKind::HyphenatedWord | TokenKind::Emoticon | TokenKind::Number => true,
                TokenKind::Url => !self.drop_urls,
                TokenKind::Mention
                | TokenKind::Hashtag
                | TokenKind::Punctuation
                | TokenKind::HtmlTag => false,
            })
            .map(|t| t.text)
            .collect()
    }

    /// Lowercase, tokenize and filter.
    pub fn process(&self, text: &str) -> Vec<String> {
        self.filter(tokenize(&text.to_lowercase()))
    }
}

pub fn filter_tokens(tokens: Vec<Token>, stopwords: &StopwordList) -> Vec<String> {
    Preprocessor::new(stopwords.clone(), false).filter(tokens)
}

pub fn preprocess(text: &str, stopwords: &StopwordList) -> Vec<String> {
    filter_tokens(tokenize(&text.to_lowercase()), stopwords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use TokenKind::*;

    fn kinds(text: &str) -> Vec<(String, TokenKind)> {
        tokenize(text).into_iter().map(|t| (t.text, t.kind)).collect()
    }

    fn tok(text: &str, kind: TokenKind) -> (String, TokenKind) {
        (text.to_string(), kind)
    }

    #[test]
    fn precedence_on_mixed_tweet() {
        assert_eq!(
            kinds("@user I love-it :) http://t.co/x #fun 123"),
            vec![
                tok("@user", Mention),
                tok("i", Word),
                tok("love-it", HyphenatedWord),
                tok(":)", Emoticon),
                tok("http://t.co/x", Url),
                tok("#fun", Hashtag),
                tok("123", Number),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n ").is_empty());
    }

    #[test]
    fn entities_are_decoded_before_tags() {
        let expected = vec![tok("<b>", HtmlTag), tok("hi", Word), tok("</b>", HtmlTag)];
        assert_eq!(kinds("&lt;b&gt;Hi&lt;/b&gt;"), expected);
        assert_eq!(kinds("<b>Hi</b>"), expected);
        assert_eq!(decode_entities("a &amp;lt; b &foo;"), "a &lt; b &foo;");
        assert_eq!(decode_entities("&quot;x&apos;"), "\"x'");
    }

    #[test]
    fn numbers_and_words() {
        assert_eq!(
            kinds("-3.5 50% 1,000 2day"),
            vec![tok("-3.5", Number), tok("50%", Number), tok("1,000", Number), tok("2day", Word)]
        );
        assert_eq!(kinds("don't"), vec![tok("don't", Word)]);
        assert_eq!(kinds("state-of-the-art!"), vec![tok("state-of-the-art", HyphenatedWord), tok("!", Punctuation)]);
    }

    #[test]
    fn emoticons_case_insensitive_and_bounded() {
        assert_eq!(kinds(":D :d XD"), vec![tok(":d", Emoticon), tok(":d", Emoticon), tok("xd", Emoticon)]);
        assert_eq!(kinds(":Dog"), vec![tok(":", Punctuation), tok("dog", Word)]);
        assert_eq!(kinds("<3 you"), vec![tok("<3", Emoticon), tok("you", Word)]);
        assert_eq!(kinds(":-(("), vec![tok(":-(", Emoticon), tok("(", Punctuation)]);
    }

    #[test]
    fn urls_run_to_whitespace() {
        assert_eq!(kinds("see www.example.com/a?b=1. ok"), vec![
            tok("see", Word),
            tok("www.example.com/a?b=1.", Url),
            tok("ok", Word),
        ]);
        assert_eq!(kinds("HTTPS://X.Y")[0].1, Url);
    }

    #[test]
    fn filter_keep_drop_table() {
        let tokens = tokenize("@user I love-it :) http://t.co/x #fun 123");
        let stop: StopwordList = ["i"].into_iter().collect();
        assert_eq!(filter_tokens(tokens, &stop), vec!["love-it", ":)", "http://t.co/x", "123"]);

        let all_stop: StopwordList = ["the", "a"].into_iter().collect();
        let words = vec![Token::new("the", Word), Token::new("a", Word)];
        assert!(filter_tokens(words, &all_stop).is_empty());
        assert!(filter_tokens(Vec::new(), &all_stop).is_empty());
    }

    #[test]
    fn drop_urls_switch() {
        let pre = Preprocessor::new(StopwordList::empty(), true);
        assert_eq!(pre.process("go http://x.y now"), vec!["go", "now"]);
        let keep = Preprocessor::new(StopwordList::empty(), false);
        assert_eq!(keep.process("go http://x.y now"), vec!["go", "http://x.y", "now"]);
    }

    #[test]
    fn preprocess_examples() {
        assert_eq!(preprocess("GREAT movie", &StopwordList::empty()), vec!["great", "movie"]);
        let so: StopwordList = ["so"].into_iter().collect();
        assert_eq!(preprocess("#Oscars @fan SO good!!!", &so), vec!["good"]);
        assert_eq!(preprocess(":( :( :(", &StopwordList::empty()), vec![":(", ":(", ":("]);
    }

    #[test]
    fn bundled_stopwords() {
        let list = StopwordList::english();
        assert_eq!(list.len(), 127);
        assert!(list.contains("the") && list.contains("i") && !list.contains("good"));
        assert!(list.iter().all(|w| w == w.to_lowercase()));
    }

    #[test]
    fn stopword_file_format() {
        let list = StopwordList::parse("# comment\nThe\n\n  a  \nthe\n");
        assert_eq!(list.iter().collect::<Vec<_>>(), vec!["a", "the"]);
    }

    proptest! {
        #[test]
        fn outputs_have_no_whitespace(s in "\\PC{0,60}") {
            for t in preprocess(&s, &StopwordList::english()) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn tokens_cover_all_non_whitespace(s in "[ a-zA-Z0-9@#:;()<>/.,!?'&_%-]{0,60}") {
            let lower = s.to_lowercase();
            let joined: String = tokenize(&lower).into_iter().map(|t| t.text).collect();
            let expected: String = decode_entities(&lower).chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, expected);
        }

        #[test]
        fn refiltering_output_is_stable(s in "[ a-zA-Z0-9@#:;()/.!-]{0,60}") {
            let stop = StopwordList::english();
            let once = preprocess(&s, &stop);
            let rewrapped = once.iter().map(|t| Token::new(t.clone(), Word)).collect();
            prop_assert_eq!(filter_tokens(rewrapped, &stop), once);
        }

        #[test]
        fn deterministic(s in "\\PC{0,40}") {
            prop_assert_eq!(tokenize(&s), tokenize(&s));
        }
    }
}

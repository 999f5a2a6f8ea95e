//! Text cleaning, tokenization, lemmatization and stop-word removal.
//!
//! The classifier path uses `clean -> tokenize -> lemmatize`; the topic path
//! additionally merges phrases and then strips useless tokens with
//! [`remove_stopwords`].

use std::collections::{BTreeSet, HashMap, HashSet};

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
const BUNDLED_LEMMA_EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.tsv");

static URL: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap());

/// Cleaned, lemmatized (and on the topic path, phrase-merged) tokens of one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDoc {
    pub record_id: String,
    pub tokens: Vec<String>,
    pub phase: Option<String>,
    pub region: Option<String>,
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2018}' | '\u{2019}')
}

/// Strips URLs, replaces everything but letters, digits, apostrophes and
/// whitespace with a space, lowercases, and collapses whitespace.
///
/// Apostrophes survive only inside words (`power's`), never at word edges.
pub fn clean(text: &str) -> String {
    let no_urls = URL.replace_all(text, " ");
    let mut buf = String::with_capacity(no_urls.len());
    for c in no_urls.chars() {
        if is_apostrophe(c) {
            buf.push('\'');
            continue;
        }
        for lc in c.to_lowercase() {
            if lc.is_alphanumeric() {
                buf.push(lc);
            } else {
                buf.push(' ');
            }
        }
    }
    let mut out = String::with_capacity(buf.len());
    for word in buf.split_whitespace() {
        let word = word.trim_matches('\'');
        if word.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// The bundled 179-word English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS).expect("bundled stop-word list is nonempty")
    }

    /// One word per line; blank lines and `#` comments ignored. `None` if empty.
    pub fn parse(text: &str) -> Option<Self> {
        let words: HashSet<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        (!words.is_empty()).then_some(Self { words })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Drops tokens found in `sw` or `extra`, keeping order.
pub fn remove_stopwords(tokens: &[String], sw: &StopwordList, extra: &BTreeSet<String>) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !sw.contains(t) && !extra.contains(t.as_str()))
        .cloned()
        .collect()
}

/// Deterministic rule-based lemmatizer: an exception table consulted first,
/// then `-s/-es/-ies/-ed/-ing` suffix rules with consonant undoubling and
/// silent-e restoration, applied until the word stops changing.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Default for Lemmatizer {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Lemmatizer {
    pub fn bundled() -> Self {
        Self::from_exceptions(BUNDLED_LEMMA_EXCEPTIONS)
    }

    /// Parses `form<TAB>lemma` lines (whitespace-separated also accepted).
    pub fn from_exceptions(text: &str) -> Self {
        let mut exceptions = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            if let (Some(form), Some(lemma)) = (parts.next(), parts.next()) {
                exceptions.insert(form.to_lowercase(), lemma.to_lowercase());
            }
        }
        Self { exceptions }
    }

    pub fn lemmatize(&self, tokens: &[String]) -> Vec<String> {
        tokens.iter().map(|t| self.lemma(t)).collect()
    }

    pub fn lemma(&self, word: &str) -> String {
        let mut current = word.to_owned();
        // Rule steps only shorten the word; exception targets are fixpoints.
        for _ in 0..64 {
            let next = self.step(&current);
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    fn step(&self, w: &str) -> String {
        if let Some(lemma) = self.exceptions.get(w) {
            return lemma.clone();
        }
        if w.len() <= 3 || !w.bytes().all(|b| b.is_ascii_lowercase()) {
            return w.to_owned();
        }
        if let Some(stem) = w.strip_suffix("ies") {
            if w.len() > 4 {
                return format!("{stem}y");
            }
            return w.to_owned();
        }
        if w.ends_with("sses") || w.ends_with("xes") || w.ends_with("ches") || w.ends_with("shes") || w.ends_with("zzes") {
            return w[..w.len() - 2].to_owned();
        }
        if w.ends_with('s') {
            if w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
                return w.to_owned();
            }
            return w[..w.len() - 1].to_owned();
        }
        if let Some(stem) = w.strip_suffix("ied") {
            return format!("{stem}y");
        }
        if w.ends_with("eed") {
            return w.to_owned();
        }
        if let Some(stem) = w.strip_suffix("ed").or_else(|| w.strip_suffix("ing")) {
            if stem.len() < 2 || !has_vowel(stem) {
                return w.to_owned();
            }
            return restore_stem(stem);
        }
        w.to_owned()
    }
}

fn is_consonant(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(bytes, i - 1),
        _ => true,
    }
}

fn has_vowel(stem: &str) -> bool {
    let b = stem.as_bytes();
    (0..b.len()).any(|i| !is_consonant(b, i))
}

/// Number of vowel-consonant sequences, as in `[C](VC)^m[V]`.
fn measure(stem: &str) -> usize {
    let b = stem.as_bytes();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..b.len() {
        let cons = is_consonant(b, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn ends_cvc(stem: &str) -> bool {
    let b = stem.as_bytes();
    let n = b.len();
    n >= 3
        && is_consonant(b, n - 3)
        && !is_consonant(b, n - 2)
        && is_consonant(b, n - 1)
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
}

fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && is_consonant(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_owned();
    }
    if stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz") {
        return format!("{stem}e");
    }
    if measure(stem) == 1 && ends_cvc(stem) {
        return format!("{stem}e");
    }
    stem.to_owned()
}

/// `clean -> tokenize -> lemmatize`, the shared front half of both pipelines.
pub fn preprocess(text: &str, lemmatizer: &Lemmatizer) -> Vec<String> {
    lemmatizer.lemmatize(&tokenize(&clean(text)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    /// Character-level restatement of the cleaning rules, written without the
    /// regex or the word trimming used above.
    fn clean_oracle(text: &str) -> String {
        let mut words = Vec::new();
        for raw in text.split_whitespace() {
            let lower = raw.to_lowercase();
            if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
                continue;
            }
            let mut word = String::new();
            for c in raw.chars().flat_map(char::to_lowercase) {
                if c.is_alphanumeric() || c == '\'' {
                    word.push(c);
                } else {
                    word.push(' ');
                }
            }
            for piece in word.split_whitespace() {
                let piece = piece.trim_matches('\'');
                if !piece.is_empty() {
                    words.push(piece.to_owned());
                }
            }
        }
        words.join(" ")
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean("Still NO power!! https://t.co/x"), "still no power");
        assert_eq!(clean(""), "");
        assert_eq!(clean("@FPL when??"), "fpl when");
        assert_eq!(clean_oracle("@FPL when??"), "fpl when");
        assert_eq!(clean("God\u{2019}s power"), "god's power");
        assert_eq!(clean("'quoted' #Irma www.fpl.com/outages"), "quoted irma");
    }

    #[test]
    fn clean_agrees_with_character_oracle() {
        for s in [
            "Still NO power!! https://t.co/x",
            "@FPL when??",
            "power's back... finally :)",
            "Trees down on Main St. #IrmaHurricane @DukeEnergy",
            "no pwr since last night!!!",
            "  spaced\tout\n text ",
            "'' ' '",
        ] {
            assert_eq!(clean(s), clean_oracle(s), "{s:?}");
        }
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("still no power"), toks(&["still", "no", "power"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize(&clean("power's back")), toks(&["power's", "back"]));
    }

    #[test]
    fn lemmatize_examples() {
        let l = Lemmatizer::bundled();
        assert_eq!(l.lemmatize(&toks(&["powered"])), toks(&["power"]));
        assert_eq!(l.lemmatize(&toks(&["power"])), toks(&["power"]));
        assert_eq!(l.lemmatize(&toks(&["trees", "falling"])), toks(&["tree", "fall"]));
        assert_eq!(l.lemmatize(&toks(&["lost", "went", "has", "getting", "restored"])),
            toks(&["lose", "go", "have", "get", "restore"]));
        assert_eq!(l.lemma("stopped"), "stop");
        assert_eq!(l.lemma("making"), "make");
        assert_eq!(l.lemma("stories"), "story");
        assert_eq!(l.lemma("boxes"), "box");
        assert_eq!(l.lemma("need"), "need");
        assert_eq!(l.lemma("power's"), "power's");
    }

    #[test]
    fn stopword_examples() {
        let sw = StopwordList::english();
        assert_eq!(sw.len(), 179);
        let extra: BTreeSet<String> = ["power".to_string()].into();
        assert_eq!(remove_stopwords(&toks(&["still", "no", "power"]), &sw, &extra), toks(&["still"]));
        assert!(remove_stopwords(&[], &sw, &extra).is_empty());
        assert_eq!(
            remove_stopwords(&toks(&["the", "power", "be", "back"]), &sw, &BTreeSet::new()),
            toks(&["power", "back"])
        );
    }

    #[test]
    fn empty_stopword_list_rejected() {
        assert!(StopwordList::parse("# nothing\n\n").is_none());
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in "\\PC{0,60}") {
            let once = clean(&s);
            prop_assert_eq!(clean(&once), once);
        }

        #[test]
        fn clean_tokens_are_well_formed(s in "[a-zA-Z0-9'!?.,:/#@ ]{0,60}") {
            for t in tokenize(&clean(&s)) {
                prop_assert!(!t.is_empty());
                prop_assert!(t.chars().any(char::is_alphanumeric));
                prop_assert!(!t.starts_with("http"));
            }
        }

        #[test]
        fn lemmatize_is_idempotent(words in proptest::collection::vec("[a-z]{1,12}", 0..8)) {
            let l = Lemmatizer::bundled();
            let once = l.lemmatize(&words);
            prop_assert_eq!(once.len(), words.len());
            prop_assert_eq!(l.lemmatize(&once), once);
        }

        #[test]
        fn stopword_removal_is_subsequence(words in proptest::collection::vec("[a-z]{1,5}", 0..20)) {
            let sw = StopwordList::english();
            let out = remove_stopwords(&words, &sw, &BTreeSet::new());
            let mut it = words.iter();
            for t in &out {
                prop_assert!(it.any(|w| w == t));
            }
        }
    }
}

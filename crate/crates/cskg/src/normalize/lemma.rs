//! Lemma lexicon plus a rule-based suffix stripper used as fallback. The
//! stripper is deliberately small: -ies/-es/-s plurals, -ed/-ied/-eed pasts,
//! and -ing gerunds, with consonant undoubling and final-e restoration. The
//! lexicon carries irregular forms and words these rules would mangle.

use std::collections::HashMap;

use crate::kg::registry::parse_version;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PosClass {
    Verb,
    Noun,
    Adj,
}

impl PosClass {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "v" | "verb" => Some(PosClass::Verb),
            "n" | "noun" => Some(PosClass::Noun),
            "a" | "adj" => Some(PosClass::Adj),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            PosClass::Verb => "v",
            PosClass::Noun => "n",
            PosClass::Adj => "a",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LemmaLexicon {
    map: HashMap<(String, PosClass), String>,
    version: String,
}

impl LemmaLexicon {
    pub fn new() -> Self {
        LemmaLexicon {
            version: "unversioned".to_string(),
            ..Default::default()
        }
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn insert(&mut self, surface: &str, pos: PosClass, lemma: &str) {
        self.map
            .insert((surface.to_lowercase(), pos), lemma.to_lowercase());
    }

    pub fn get(&self, surface: &str, pos: PosClass) -> Option<&str> {
        self.map
            .get(&(surface.to_string(), pos))
            .map(String::as_str)
    }

    /// Parse `surface <TAB> pos <TAB> lemma` lines.
    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut lexicon = LemmaLexicon::new();
        lexicon.version = parse_version(text);
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [surface, pos, lemma] = fields.as_slice() else {
                return Err(Error::data(origin, idx + 1, "expected 3 fields"));
            };
            let pos = PosClass::parse(pos)
                .ok_or_else(|| Error::data(origin, idx + 1, format!("bad pos {pos:?}")))?;
            lexicon.insert(surface, pos, lemma);
        }
        Ok(lexicon)
    }

    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<_> = self
            .map
            .iter()
            .map(|((surface, pos), lemma)| format!("{surface}\t{}\t{lemma}", pos.as_str()))
            .collect();
        rows.sort();
        format!("# version: {}\n{}\n", self.version, rows.join("\n"))
    }
}

/// Lemmatize one lowercase token. The first content word of a concept
/// prefers a verb reading (event-like heads), later words prefer nouns.
pub fn lemmatize(word: &str, first_content: bool, lexicon: &LemmaLexicon) -> String {
    let order = if first_content {
        [PosClass::Verb, PosClass::Noun, PosClass::Adj]
    } else {
        [PosClass::Noun, PosClass::Verb, PosClass::Adj]
    };
    for pos in order {
        if let Some(lemma) = lexicon.get(word, pos) {
            return lemma.to_string();
        }
    }
    suffix_strip(word)
}

/// Rule-based suffix stripping for lowercase tokens not covered by the
/// lexicon. Also serves as the stem function for stem-stage token matching.
pub fn suffix_strip(word: &str) -> String {
    // plurals
    if let Some(stem) = word.strip_suffix("ies") {
        if word.len() >= 5 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        if word.len() >= 4
            && (stem.ends_with("ss")
                || stem.ends_with('x')
                || stem.ends_with('z')
                || stem.ends_with("ch")
                || stem.ends_with("sh")
                || stem.ends_with('o'))
        {
            return stem.to_string();
        }
    }
    if word.len() >= 4
        && word.ends_with('s')
        && !word.ends_with("ss")
        && !word.ends_with("us")
        && !word.ends_with("is")
    {
        return word[..word.len() - 1].to_string();
    }
    // past forms
    if let Some(stem) = word.strip_suffix("ied") {
        if word.len() >= 5 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("eed") {
        if measure(stem) > 0 {
            return format!("{stem}ee");
        }
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if word.len() >= 5 && stem.len() >= 3 && contains_vowel(stem) {
            return restore(stem);
        }
    }
    // gerunds
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 3 && contains_vowel(stem) {
            return restore(stem);
        }
    }
    word.to_string()
}

/// Undouble final consonants and restore a dropped final e.
fn restore(stem: &str) -> String {
    // short stems like "eat" must stay aligned with their bare forms; the
    // at/bl/iz restoration only helps longer stems ("creat", "troubl")
    if stem.len() >= 4
        && (stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz"))
    {
        return format!("{stem}e");
    }
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 2
        && chars[n - 1] == chars[n - 2]
        && !is_plain_vowel(chars[n - 1])
        && !matches!(chars[n - 1], 'l' | 's' | 'z')
    {
        return chars[..n - 1].iter().collect();
    }
    if measure(stem) == 1 && ends_cvc(stem) {
        return format!("{stem}e");
    }
    stem.to_string()
}

fn is_plain_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Vowel/consonant classes with y treated as a vowel after a consonant.
fn letter_classes(word: &str) -> Vec<bool> {
    let mut classes: Vec<bool> = Vec::new();
    for c in word.chars() {
        let vowel = is_plain_vowel(c)
            || (c == 'y' && classes.last().map(|&v| !v).unwrap_or(false));
        classes.push(vowel);
    }
    classes
}

/// Number of vowel-to-consonant transitions (the Porter measure).
fn measure(word: &str) -> usize {
    let classes = letter_classes(word);
    classes.windows(2).filter(|w| w[0] && !w[1]).count()
}

fn contains_vowel(word: &str) -> bool {
    letter_classes(word).into_iter().any(|v| v)
}

fn ends_cvc(word: &str) -> bool {
    let classes = letter_classes(word);
    let chars: Vec<char> = word.chars().collect();
    let n = classes.len();
    n >= 3
        && !classes[n - 3]
        && classes[n - 2]
        && !classes[n - 1]
        && !matches!(chars[n - 1], 'w' | 'x' | 'y')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_rules() {
        let cases = [
            ("eats", "eat"),
            ("greets", "greet"),
            ("watches", "watch"),
            ("makes", "make"),
            ("houses", "house"),
            ("kisses", "kiss"),
            ("boxes", "box"),
            ("goes", "go"),
            ("carries", "carry"),
            ("dies", "die"),
            ("carried", "carry"),
            ("agreed", "agree"),
            ("baked", "bake"),
            ("stopped", "stop"),
            ("called", "call"),
            ("visited", "visit"),
            ("wanted", "want"),
            ("running", "run"),
            ("eating", "eat"),
            ("baking", "bake"),
            ("bring", "bring"),
            ("sing", "sing"),
            ("glass", "glass"),
            ("basis", "basis"),
            ("bus", "bus"),
            ("feed", "feed"),
            ("energy", "energy"),
        ];
        for (input, expected) in cases {
            assert_eq!(suffix_strip(input), expected, "input {input:?}");
        }
    }

    #[test]
    fn suffix_strip_is_idempotent_on_outputs() {
        for word in [
            "eats", "watches", "carried", "running", "stopped", "baked", "goes", "carries",
            "houses", "visited", "agreed", "seeing", "hoping", "hopping",
        ] {
            let once = suffix_strip(word);
            assert_eq!(suffix_strip(&once), once, "word {word:?} -> {once:?}");
        }
    }

    #[test]
    fn lexicon_beats_suffix_rules() {
        let lexicon = crate::data::default_normalizer().lexicon();
        assert_eq!(lemmatize("ate", true, lexicon), "eat");
        assert_eq!(lemmatize("morning", false, lexicon), "morning");
        assert_eq!(lemmatize("people", false, lexicon), "person");
        // verb/noun split picks the reading by position
        assert_eq!(lemmatize("lives", true, lexicon), "live");
        assert_eq!(lemmatize("lives", false, lexicon), "life");
    }
}

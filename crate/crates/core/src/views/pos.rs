use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The 17 Universal POS tags, declared in alphabetical order; the
/// declaration order is the one-hot column order of the syntactic view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl PosTag {
    pub const COUNT: usize = 17;

    pub const ALL: [PosTag; Self::COUNT] = [
        PosTag::Adj,
        PosTag::Adp,
        PosTag::Adv,
        PosTag::Aux,
        PosTag::Cconj,
        PosTag::Det,
        PosTag::Intj,
        PosTag::Noun,
        PosTag::Num,
        PosTag::Part,
        PosTag::Pron,
        PosTag::Propn,
        PosTag::Punct,
        PosTag::Sconj,
        PosTag::Sym,
        PosTag::Verb,
        PosTag::X,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Adj => "ADJ",
            PosTag::Adp => "ADP",
            PosTag::Adv => "ADV",
            PosTag::Aux => "AUX",
            PosTag::Cconj => "CCONJ",
            PosTag::Det => "DET",
            PosTag::Intj => "INTJ",
            PosTag::Noun => "NOUN",
            PosTag::Num => "NUM",
            PosTag::Part => "PART",
            PosTag::Pron => "PRON",
            PosTag::Propn => "PROPN",
            PosTag::Punct => "PUNCT",
            PosTag::Sconj => "SCONJ",
            PosTag::Sym => "SYM",
            PosTag::Verb => "VERB",
            PosTag::X => "X",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownTag(s.to_string()))
    }
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "every", "each", "some", "any", "no",
    "all", "both", "either", "neither", "my", "your", "his", "its", "our", "their", "another",
];
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them", "myself",
    "yourself", "himself", "herself", "itself", "ourselves", "themselves", "mine", "yours",
    "hers", "ours", "theirs", "who", "whom", "what", "which", "someone", "anyone", "everyone",
    "something", "anything", "everything", "nothing", "nobody", "u",
];
const ADPOSITIONS: &[&str] = &[
    "in", "on", "at", "by", "for", "with", "about", "against", "between", "into", "through",
    "during", "before", "after", "above", "below", "to", "from", "up", "down", "of", "off",
    "over", "under", "than", "via", "per", "without", "within", "onto", "across", "inside",
];
const COORDINATORS: &[&str] = &["and", "or", "but", "nor", "yet", "&"];
const SUBORDINATORS: &[&str] = &[
    "if", "because", "while", "although", "though", "unless", "since", "whether", "until",
    "when", "as", "whereas", "once",
];
const AUXILIARIES: &[&str] = &[
    "is", "am", "are", "was", "were", "be", "been", "being", "have", "has", "had", "do",
    "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might", "must",
    "'s", "'re", "'m", "'ve", "'ll", "'d",
];
const PARTICLES: &[&str] = &["not", "n't", "'"];
const INTERJECTIONS: &[&str] = &[
    "hi", "hello", "hey", "thanks", "thx", "ok", "okay", "yes", "yeah", "yep", "nope", "oh",
    "wow", "please", "lol", "ah", "hmm", "bye",
];
const ADVERBS: &[&str] = &[
    "very", "too", "also", "just", "now", "then", "here", "there", "so", "really", "already",
    "still", "never", "always", "often", "again", "maybe", "perhaps", "only", "even", "how",
    "why", "where", "well", "soon", "anyway",
];
const VERBS: &[&str] = &[
    "run", "runs", "ran", "get", "gets", "got", "install", "installs", "use", "uses", "try",
    "tries", "tried", "need", "needs", "know", "knows", "knew", "think", "thinks", "thought",
    "want", "wants", "see", "sees", "saw", "make", "makes", "made", "work", "works", "go",
    "goes", "went", "gone", "say", "says", "said", "look", "looks", "help", "helps", "type",
    "boot", "boots", "remove", "removes", "open", "opens", "find", "finds", "found", "like",
    "likes", "mean", "means", "sit", "sits", "sat", "take", "takes", "took", "give", "gives",
    "gave", "come", "comes", "came", "put", "puts", "let", "lets", "seem", "seems", "keep",
    "keeps", "kept", "tell", "tells", "told", "eat", "eats", "ate",
];
const ADJECTIVES: &[&str] = &[
    "good", "bad", "new", "old", "big", "small", "same", "other", "sure", "right", "wrong",
    "great", "little", "different", "last", "first", "next", "fine",
];

const SYMBOLS: &str = "$%+<=>@^|~#*`\\";

/// (suffix, tag) rules tried in order after the closed-class lexicon.
const SUFFIX_RULES: &[(&str, PosTag)] = &[
    ("ly", PosTag::Adv),
    ("ing", PosTag::Verb),
    ("ed", PosTag::Verb),
    ("tion", PosTag::Noun),
    ("sion", PosTag::Noun),
    ("ness", PosTag::Noun),
    ("ment", PosTag::Noun),
    ("ity", PosTag::Noun),
    ("ous", PosTag::Adj),
    ("ful", PosTag::Adj),
    ("able", PosTag::Adj),
    ("ible", PosTag::Adj),
    ("ive", PosTag::Adj),
    ("less", PosTag::Adj),
    ("ical", PosTag::Adj),
];

/// Tags each token with a rule-based tagger: closed-class lexicon, then
/// character classes (punctuation, symbols, numbers), then suffix rules,
/// with `NOUN` as the fallback. Deterministic and context-free.
pub fn pos_tag<S: AsRef<str>>(tokens: &[S]) -> Vec<PosTag> {
    tokens.iter().map(|t| tag_word(t.as_ref())).collect()
}

fn tag_word(word: &str) -> PosTag {
    let lexicons: [(&[&str], PosTag); 11] = [
        (DETERMINERS, PosTag::Det),
        (PRONOUNS, PosTag::Pron),
        (ADPOSITIONS, PosTag::Adp),
        (COORDINATORS, PosTag::Cconj),
        (SUBORDINATORS, PosTag::Sconj),
        (AUXILIARIES, PosTag::Aux),
        (PARTICLES, PosTag::Part),
        (INTERJECTIONS, PosTag::Intj),
        (ADVERBS, PosTag::Adv),
        (VERBS, PosTag::Verb),
        (ADJECTIVES, PosTag::Adj),
    ];
    for (words, tag) in lexicons {
        if words.contains(&word) {
            return tag;
        }
    }

    let mut chars = word.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if !c.is_alphanumeric() {
            return if c.is_ascii_punctuation() && !SYMBOLS.contains(c) {
                PosTag::Punct
            } else {
                PosTag::Sym
            };
        }
    }
    if word.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',')
        && word.chars().any(|c| c.is_ascii_digit())
    {
        return PosTag::Num;
    }
    if !word.chars().any(char::is_alphabetic) {
        return PosTag::Sym;
    }
    if word.chars().any(|c| c.is_ascii_digit()) {
        return PosTag::X;
    }
    let len = word.chars().count();
    for &(suffix, tag) in SUFFIX_RULES {
        if len > suffix.len() + 2 && word.ends_with(suffix) {
            return tag;
        }
    }
    PosTag::Noun
}

//! Built-in English lexicons and templates, plus loaders for user-supplied
//! TSV gazetteers and line-per-template files.

use std::io::BufRead;

use super::SynthError;

pub const GAZETTEER: &[(&str, &str)] = &[
    ("Argentine", "American"),
    ("Paris", "Madrid"),
    ("Berlin", "Vienna"),
    ("Tokyo", "Osaka"),
    ("Cairo", "Lagos"),
    ("Lima", "Quito"),
    ("Oslo", "Helsinki"),
    ("physics", "botany"),
    ("chemistry", "linguistics"),
    ("medicine", "architecture"),
    ("history", "astronomy"),
    ("1905", "1912"),
    ("1921", "1934"),
    ("1958", "1963"),
    ("1987", "1979"),
    ("2004", "2011"),
];

pub const NEGATIONS: &[(&str, &str)] = &[
    ("is", "is not"),
    ("was", "was not"),
    ("has", "has never"),
    ("won", "lost"),
    ("founded", "dissolved"),
    ("opened", "closed"),
    ("studied", "abandoned"),
];

pub const SUBJECTIVE: &[&str] = &[
    "It is without doubt the most admirable story of the century.",
    "Many readers find this achievement deeply inspiring.",
    "Frankly, the whole affair was rather disappointing.",
    "This is easily the finest example of its kind.",
];

pub const UNVERIFIABLE: &[&str] = &[
    "Some accounts suggest a private diary described these events in detail.",
    "Rumors persist that a second manuscript was hidden by a close friend.",
    "It is said that an unnamed official quietly approved the plan.",
];

pub const INVENTED: &[&str] = &[
    "The project later launched a research station on a floating island.",
    "A statue made of glass was unveiled to mark the occasion.",
    "The group also designed the first solar powered tramway.",
];

/// `{claim}` is replaced with a sentence taken from the reference.
pub const CONTRADICTORY: &[&str] = &[
    "Contrary to the record, it is false that {claim}.",
    "No source confirms the claim that {claim}.",
];

pub const PEOPLE: &[&str] = &[
    "Alvarez", "Okafor", "Lindqvist", "Tanaka", "Moreau", "Petrova", "Haddad", "Kowalski",
];
pub const CITIES: &[&str] = &["Paris", "Berlin", "Tokyo", "Cairo", "Lima", "Oslo"];
pub const ORGS: &[&str] = &["Meridian", "Halcyon", "Northwind", "Aurora", "Keystone"];
pub const FIELDS: &[&str] = &["physics", "chemistry", "medicine", "history"];
pub const YEARS: &[&str] = &["1905", "1921", "1958", "1987", "2004"];

/// Fact sentence patterns for generated reference passages. Slots:
/// `{P}` person, `{C}` city, `{O}` organization, `{F}` field, `{Y}` year.
pub const FACT_PATTERNS: &[&str] = &[
    "{P} was born in {C} in {Y}.",
    "{P} studied {F} at the University of {C}.",
    "The {O} institute is based in {C} and was founded in {Y}.",
    "{P} has won several awards for research in {F}.",
    "In {Y} the {O} institute opened a second office in {C}.",
    "{P} is an Argentine scholar of {F}.",
];

pub fn owned_pairs(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

pub fn owned(lines: &[&str]) -> Vec<String> {
    lines.iter().map(|s| s.to_string()).collect()
}

/// Reads `surface<TAB>replacement` lines; blank lines are skipped.
pub fn load_pairs_tsv<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SynthError::Resource {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                out.push((a.to_string(), b.to_string()))
            }
            _ => {
                return Err(SynthError::Resource {
                    line: i + 1,
                    reason: "expected `surface<TAB>replacement`".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Reads one template per non-blank line.
pub fn load_templates<R: BufRead>(reader: R) -> Result<Vec<String>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SynthError::Resource {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let t = line.trim();
        if !t.is_empty() {
            out.push(t.to_string());
        }
    }
    Ok(out)
}

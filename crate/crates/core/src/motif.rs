//! Flow motifs: canonical labels for windows of consecutive passes.
//!
//! A window of `k` passes touches `k + 1` ball holders. Players are relabelled
//! `A`, `B`, `C`, ... in order of first appearance, so `(2, 4, 5, 6)` and
//! `(7, 1, 3, 9)` are both `ABCD`. Valid labels are restricted-growth strings
//! with no two equal neighbours; for three passes there are five of them:
//! `ABAB`, `ABAC`, `ABCA`, `ABCB` and `ABCD`.
//!
//! [`MotifAlphabet`] maps a window directly to the lexicographic index of its
//! pattern without building the label string, which is what the null model
//! uses in its inner loop.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::possession::Possession;

/// Default number of passes per motif.
pub const DEFAULT_K: usize = 3;

/// Largest supported motif length in passes. The alphabet for `k` has Bell(k)
/// members; k = 10 already gives 115 975.
pub const MAX_K: usize = 10;

/// Canonical motif label such as `ABAC`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MotifPattern(String);

impl MotifPattern {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of passes the pattern spans.
    pub fn k(&self) -> usize {
        self.0.len() - 1
    }

    fn from_letters(letters: &[u8]) -> Self {
        MotifPattern(letters.iter().map(|&l| (b'A' + l) as char).collect())
    }
}

impl FromStr for MotifPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Format(format!("invalid motif pattern `{s}`: {why}"));
        if s.len() < 2 {
            return Err(bad("needs at least two letters"));
        }
        let mut next = b'A';
        let mut prev = 0u8;
        for &c in s.as_bytes() {
            if !c.is_ascii_uppercase() {
                return Err(bad("letters must be A-Z"));
            }
            if c > next {
                return Err(bad("letters must appear in order"));
            }
            if c == next {
                next += 1;
            }
            if c == prev {
                return Err(bad("adjacent letters repeat"));
            }
            prev = c;
        }
        Ok(MotifPattern(s.to_string()))
    }
}

impl TryFrom<String> for MotifPattern {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MotifPattern> for String {
    fn from(p: MotifPattern) -> String {
        p.0
    }
}

impl fmt::Display for MotifPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn check_k(k: usize, min: usize) -> Result<()> {
    if k < min || k > MAX_K {
        return Err(Error::Domain(format!(
            "k must be in {min}..={MAX_K}, got {k}"
        )));
    }
    Ok(())
}

/// Labels a window of ball holders by order of first appearance.
pub fn canonicalize<T: PartialEq>(window: &[T]) -> Result<MotifPattern> {
    if window.len() < 2 {
        return Err(Error::Contract(
            "a motif window needs at least two touches".into(),
        ));
    }
    if window.len() > 26 {
        return Err(Error::Domain(
            "motif windows are limited to 26 touches".into(),
        ));
    }
    let mut letters = Vec::with_capacity(window.len());
    let mut distinct = 0u8;
    for (i, holder) in window.iter().enumerate() {
        if i > 0 && window[i - 1] == *holder {
            return Err(Error::Contract(format!(
                "adjacent duplicate at window position {i}"
            )));
        }
        let letter = match window[..i].iter().position(|h| h == holder) {
            Some(j) => letters[j],
            None => {
                distinct += 1;
                distinct - 1
            }
        };
        letters.push(letter);
    }
    Ok(MotifPattern::from_letters(&letters))
}

/// Every pattern for `k`-pass motifs, in lexicographic order.
pub fn enumerate_patterns(k: usize) -> Result<Vec<MotifPattern>> {
    check_k(k, 1)?;
    let mut out = Vec::new();
    let mut letters = vec![0u8];
    grow(&mut letters, 1, k + 1, &mut out);
    Ok(out)
}

fn grow(letters: &mut Vec<u8>, distinct: u8, len: usize, out: &mut Vec<MotifPattern>) {
    if letters.len() == len {
        out.push(MotifPattern::from_letters(letters));
        return;
    }
    let last = *letters.last().unwrap();
    for c in 0..=distinct {
        if c == last {
            continue;
        }
        letters.push(c);
        grow(letters, distinct.max(c + 1), len, out);
        letters.pop();
    }
}

/// Pattern set for one `k`, with constant-time ranking of touch windows.
#[derive(Debug, Clone)]
pub struct MotifAlphabet {
    k: usize,
    patterns: Vec<MotifPattern>,
    /// `completions[r][m]`: valid suffixes of length `r` after a prefix that
    /// used `m` distinct letters.
    completions: Vec<Vec<u64>>,
}

impl MotifAlphabet {
    pub fn new(k: usize) -> Result<Self> {
        check_k(k, 1)?;
        let patterns = enumerate_patterns(k)?;
        let width = k + 3;
        let mut completions = vec![vec![0u64; width]; k + 1];
        completions[0].iter_mut().for_each(|c| *c = 1);
        for r in 1..=k {
            for m in 1..width - 1 {
                completions[r][m] =
                    (m as u64 - 1) * completions[r - 1][m] + completions[r - 1][m + 1];
            }
        }
        debug_assert_eq!(completions[k - 1][2] as usize, patterns.len());
        Ok(MotifAlphabet {
            k,
            patterns,
            completions,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[MotifPattern] {
        &self.patterns
    }

    pub fn index_of(&self, pattern: &MotifPattern) -> Option<usize> {
        self.patterns.binary_search(pattern).ok()
    }

    /// Lexicographic index of the canonical pattern of `window`.
    ///
    /// `window` must hold `k + 1` holders with no equal neighbours; this is
    /// only checked in debug builds.
    #[inline]
    pub fn rank<T: PartialEq>(&self, window: &[T]) -> usize {
        debug_assert_eq!(window.len(), self.k + 1);
        let mut letters = [0u8; MAX_K + 1];
        let mut distinct = 1usize;
        let mut last = 0usize;
        let mut rank = 0u64;
        for pos in 1..window.len() {
            debug_assert!(window[pos] != window[pos - 1]);
            let letter = match window[..pos].iter().position(|h| *h == window[pos]) {
                Some(j) => letters[j] as usize,
                None => distinct,
            };
            letters[pos] = letter as u8;
            let smaller = letter - usize::from(last < letter);
            rank += smaller as u64 * self.completions[self.k - pos][distinct];
            if letter == distinct {
                distinct += 1;
            }
            last = letter;
        }
        rank as usize
    }

    /// Adds every `k`-pass window of `touches` into `counts`.
    #[inline]
    pub fn accumulate<T: PartialEq>(&self, touches: &[T], counts: &mut [u64]) {
        if touches.len() > self.k {
            for w in touches.windows(self.k + 1) {
                counts[self.rank(w)] += 1;
            }
        }
    }
}

/// Canonical motifs of every `k`-pass window of one possession, in order.
pub fn extract_motifs(possession: &Possession, k: usize) -> Result<Vec<MotifPattern>> {
    check_k(k, 2)?;
    let touches = possession.touch_sequence();
    if touches.len() <= k {
        return Ok(Vec::new());
    }
    touches.windows(k + 1).map(canonicalize).collect()
}

/// Motif occurrence counts of one team in one match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifCountVector {
    pub match_id: String,
    pub team_id: String,
    pub k: usize,
    /// Keyed by every pattern of the alphabet; absent motifs count zero.
    pub counts: BTreeMap<MotifPattern, u64>,
}

impl MotifCountVector {
    pub fn from_dense(
        match_id: impl Into<String>,
        team_id: impl Into<String>,
        alphabet: &MotifAlphabet,
        dense: &[u64],
    ) -> Self {
        MotifCountVector {
            match_id: match_id.into(),
            team_id: team_id.into(),
            k: alphabet.k(),
            counts: alphabet
                .patterns()
                .iter()
                .cloned()
                .zip(dense.iter().copied())
                .collect(),
        }
    }

    pub fn get(&self, pattern: &str) -> u64 {
        self.counts
            .iter()
            .find(|(p, _)| p.as_str() == pattern)
            .map_or(0, |(_, &c)| c)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Counts in alphabet order.
    pub fn dense(&self) -> Vec<u64> {
        self.counts.values().copied().collect()
    }
}

/// Counts motifs over the possessions of one match and team.
///
/// The identifiers of the result come from the first possession; pass
/// `ids` to label an empty match.
pub fn count_motifs(
    possessions: &[Possession],
    k: usize,
    ids: Option<(&str, &str)>,
) -> Result<MotifCountVector> {
    check_k(k, 2)?;
    let alphabet = MotifAlphabet::new(k)?;
    let (match_id, team_id) = match (possessions.first(), ids) {
        (_, Some(ids)) => ids,
        (Some(p), None) => (p.match_id(), p.team_id()),
        (None, None) => ("", ""),
    };
    let mut dense = vec![0u64; alphabet.len()];
    for p in possessions {
        if p.match_id() != match_id || p.team_id() != team_id {
            return Err(Error::Contract(format!(
                "possession of ({}, {}) mixed into ({match_id}, {team_id})",
                p.match_id(),
                p.team_id()
            )));
        }
        alphabet.accumulate(&p.touch_sequence(), &mut dense);
    }
    Ok(MotifCountVector::from_dense(
        match_id, team_id, &alphabet, &dense,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn names(ps: &[MotifPattern]) -> Vec<&str> {
        ps.iter().map(MotifPattern::as_str).collect()
    }

    /// Independent oracle: every sequence over `k + 1` symbols without
    /// adjacent repeats, labelled by a from-scratch first-appearance map.
    fn brute_force_alphabet(k: usize) -> BTreeSet<String> {
        let len = k + 1;
        let symbols = len as u32;
        let mut out = BTreeSet::new();
        for code in 0..symbols.pow(len as u32) {
            let seq: Vec<u32> = (0..len)
                .map(|i| code / symbols.pow(i as u32) % symbols)
                .collect();
            if seq.windows(2).any(|w| w[0] == w[1]) {
                continue;
            }
            let mut seen: Vec<u32> = Vec::new();
            let label: String = seq
                .iter()
                .map(|s| {
                    let idx = seen.iter().position(|x| x == s).unwrap_or_else(|| {
                        seen.push(*s);
                        seen.len() - 1
                    });
                    (b'A' + idx as u8) as char
                })
                .collect();
            out.insert(label);
        }
        out
    }

    #[test]
    fn canonicalize_worked_example() {
        assert_eq!(canonicalize(&[2, 4, 5, 6]).unwrap().as_str(), "ABCD");
        assert_eq!(canonicalize(&[4, 5, 6, 4]).unwrap().as_str(), "ABCA");
        assert_eq!(canonicalize(&[1, 2, 1, 2]).unwrap().as_str(), "ABAB");
    }

    #[test]
    fn canonicalize_rejects_adjacent_duplicates() {
        assert!(matches!(
            canonicalize(&[1, 1, 2, 3]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn alphabet_matches_brute_force() {
        assert_eq!(
            names(&enumerate_patterns(3).unwrap()),
            ["ABAB", "ABAC", "ABCA", "ABCB", "ABCD"]
        );
        assert_eq!(names(&enumerate_patterns(2).unwrap()), ["ABA", "ABC"]);
        assert_eq!(enumerate_patterns(4).unwrap().len(), 15);
        for k in 1..=6 {
            let ours: BTreeSet<String> = enumerate_patterns(k)
                .unwrap()
                .into_iter()
                .map(String::from)
                .collect();
            assert_eq!(ours, brute_force_alphabet(k), "k = {k}");
        }
    }

    #[test]
    fn enumerate_rejects_bad_k() {
        assert!(matches!(enumerate_patterns(0), Err(Error::Domain(_))));
        assert!(matches!(
            enumerate_patterns(MAX_K + 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rank_is_position_in_enumeration() {
        for k in 1..=7 {
            let alphabet = MotifAlphabet::new(k).unwrap();
            for (i, p) in alphabet.patterns().iter().enumerate() {
                assert_eq!(alphabet.rank(p.as_str().as_bytes()), i, "{p}");
            }
        }
    }

    #[test]
    fn four_pass_patterns_use_e() {
        assert_eq!(canonicalize(&[9, 8, 7, 6, 5]).unwrap().as_str(), "ABCDE");
    }

    #[test]
    fn pattern_parsing() {
        assert!("ABAC".parse::<MotifPattern>().is_ok());
        for bad in ["", "A", "BA", "AAB", "ABD", "AB1"] {
            assert!(bad.parse::<MotifPattern>().is_err(), "{bad}");
        }
    }

    #[test]
    fn extract_worked_example() {
        let p = Possession::from_touches("M", "T", &["2", "4", "5", "6", "4", "6"]).unwrap();
        assert_eq!(
            names(&extract_motifs(&p, 3).unwrap()),
            ["ABCD", "ABCA", "ABCB"]
        );
    }

    #[test]
    fn extract_short_and_repeated() {
        let short = Possession::from_touches("M", "T", &["1", "2", "3"]).unwrap();
        assert!(extract_motifs(&short, 3).unwrap().is_empty());
        let pingpong = Possession::from_touches("M", "T", &["1", "2", "1", "2", "1"]).unwrap();
        assert_eq!(
            names(&extract_motifs(&pingpong, 3).unwrap()),
            ["ABAB", "ABAB"]
        );
    }

    #[test]
    fn count_worked_example() {
        let p = Possession::from_touches("M", "T", &["2", "4", "5", "6", "4", "6"]).unwrap();
        let c = count_motifs(&[p], 3, None).unwrap();
        let got: Vec<(&str, u64)> = c.counts.iter().map(|(p, &n)| (p.as_str(), n)).collect();
        assert_eq!(
            got,
            [
                ("ABAB", 0),
                ("ABAC", 0),
                ("ABCA", 1),
                ("ABCB", 1),
                ("ABCD", 1)
            ]
        );
    }

    #[test]
    fn count_empty_has_all_keys() {
        let c = count_motifs(&[], 3, Some(("M", "T"))).unwrap();
        assert_eq!(c.counts.len(), 5);
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn count_38_possessions_of_five() {
        let touches = ["1", "2", "3", "1", "4", "2"];
        let ps: Vec<Possession> = (0..38)
            .map(|_| Possession::from_touches("M", "T", &touches).unwrap())
            .collect();
        assert_eq!(count_motifs(&ps, 3, None).unwrap().total(), 114);
    }

    #[test]
    fn count_rejects_mixed_teams() {
        let a = Possession::from_touches("M", "T", &["1", "2"]).unwrap();
        let b = Possession::from_touches("M", "U", &["1", "2"]).unwrap();
        assert!(matches!(
            count_motifs(&[a, b], 3, None),
            Err(Error::Contract(_))
        ));
    }

    fn arb_touches() -> impl Strategy<Value = Vec<u8>> {
        (0u8..6, proptest::collection::vec(1u8..6, 1..30)).prop_map(|(start, steps)| {
            let mut seq = vec![start];
            for s in steps {
                let last = *seq.last().unwrap();
                seq.push((last + s) % 6);
            }
            seq
        })
    }

    proptest! {
        #[test]
        fn relabeling_invariance(seq in arb_touches(), shift in 1u8..200) {
            prop_assume!(seq.len() >= 4);
            let w = &seq[..4];
            let renamed: Vec<u16> = w.iter().map(|&x| x as u16 * 7 + shift as u16).collect();
            prop_assert_eq!(canonicalize(w).unwrap(), canonicalize(&renamed).unwrap());
        }

        #[test]
        fn extraction_matches_window_oracle(seq in arb_touches(), k in 2usize..5) {
            let ids: Vec<String> = seq.iter().map(|x| format!("p{x}")).collect();
            let p = Possession::from_touches("M", "T", &ids).unwrap();
            let got = extract_motifs(&p, k).unwrap();
            let n = seq.len() - 1;
            prop_assert_eq!(got.len(), (n + 1).saturating_sub(k));
            let alphabet = enumerate_patterns(k).unwrap();
            for (start, motif) in got.iter().enumerate() {
                let window: Vec<u8> = seq[start..start + k + 1].to_vec();
                prop_assert_eq!(motif, &canonicalize(&window).unwrap());
                prop_assert!(alphabet.contains(motif));
            }
            let counts = count_motifs(std::slice::from_ref(&p), k, None).unwrap();
            prop_assert_eq!(counts.total() as usize, got.len());
        }
    }
}

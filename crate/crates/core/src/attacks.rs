//! The seven character-level perturbation attacks: leet substitution, typo
//! transposition, underscore insertion, whitespace removal, zero-width
//! injection, and the two composites.
//!
//! Every attack is a pure function of `(text, targets)`; target tokens must
//! come from [`crate::text::tokenize`] on the same text.

use serde::{Deserialize, Serialize};

use crate::leet::LeetMap;
use crate::text::{levenshtein, validate_token, Token, TokenError};

/// The zero-width space injected by [`perturb_zero_width`].
pub const ZERO_WIDTH_SPACE: char = '\u{200B}';

/// How many zero-width spaces go between each adjacent character pair.
pub const ZERO_WIDTH_REPEAT: usize = 5;

/// The closed set of supported attacks.
///
/// Serialized names are stable identifiers used in reports and on the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "leet")]
    LeetSpeak,
    #[serde(rename = "typo")]
    TypoInsertion,
    #[serde(rename = "underscore")]
    UnderscoreInsertion,
    #[serde(rename = "remove-whitespace")]
    WhitespaceRemoval,
    #[serde(rename = "zero-width")]
    ZeroWidthInsertion,
    #[serde(rename = "underscore-leet")]
    CompositeUnderscoreLeet,
    #[serde(rename = "zero-width-leet")]
    CompositeZeroWidthLeet,
}

impl AttackKind {
    pub const ALL: [AttackKind; 7] = [
        AttackKind::LeetSpeak,
        AttackKind::TypoInsertion,
        AttackKind::UnderscoreInsertion,
        AttackKind::WhitespaceRemoval,
        AttackKind::ZeroWidthInsertion,
        AttackKind::CompositeUnderscoreLeet,
        AttackKind::CompositeZeroWidthLeet,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::LeetSpeak => "leet",
            AttackKind::TypoInsertion => "typo",
            AttackKind::UnderscoreInsertion => "underscore",
            AttackKind::WhitespaceRemoval => "remove-whitespace",
            AttackKind::ZeroWidthInsertion => "zero-width",
            AttackKind::CompositeUnderscoreLeet => "underscore-leet",
            AttackKind::CompositeZeroWidthLeet => "zero-width-leet",
        }
    }

    /// True for attacks that transform the whole text and ignore targets.
    pub fn is_whole_text(&self) -> bool {
        matches!(
            self,
            AttackKind::UnderscoreInsertion | AttackKind::WhitespaceRemoval
        )
    }

    /// How many ranked target words the attack consumes. `None` means the
    /// caller chooses (the leet family takes a configurable top-k).
    pub fn target_arity(&self) -> Option<usize> {
        match self {
            AttackKind::TypoInsertion => Some(2),
            AttackKind::ZeroWidthInsertion => Some(1),
            AttackKind::UnderscoreInsertion | AttackKind::WhitespaceRemoval => Some(0),
            _ => None,
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = AttackKind::ALL.iter().map(|k| k.as_str()).collect();
                format!("unknown attack {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// An original/perturbed text pair with the attack that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationResult {
    pub original: String,
    pub perturbed: String,
    pub attack: AttackKind,
    /// Tokens that were targeted; empty for whole-text attacks.
    pub targets: Vec<Token>,
    /// Levenshtein distance between original and perturbed, in scalars.
    pub edit_distance: usize,
}

impl PerturbationResult {
    fn new(original: &str, perturbed: String, attack: AttackKind, targets: Vec<Token>) -> Self {
        let edit_distance = levenshtein(original, &perturbed);
        PerturbationResult {
            original: original.to_string(),
            perturbed,
            attack,
            targets,
            edit_distance,
        }
    }
}

fn checked_chars(text: &str, targets: &[Token]) -> Result<Vec<char>, TokenError> {
    let chars: Vec<char> = text.chars().collect();
    for t in targets {
        validate_token(&chars, t)?;
    }
    Ok(chars)
}

fn leet_in_place(map: &LeetMap, chars: &mut [char], targets: &[Token]) {
    for t in targets {
        for c in chars[t.start..t.end].iter_mut() {
            if let Some(repl) = map.forward(*c) {
                *c = repl;
            }
        }
    }
}

/// Replace each target word in place by its leet encoding.
pub fn perturb_leet(
    map: &LeetMap,
    text: &str,
    targets: &[Token],
) -> Result<PerturbationResult, TokenError> {
    let mut chars = checked_chars(text, targets)?;
    leet_in_place(map, &mut chars, targets);
    Ok(PerturbationResult::new(
        text,
        chars.into_iter().collect(),
        AttackKind::LeetSpeak,
        targets.to_vec(),
    ))
}

fn transpose_in_place(chars: &mut [char], target: &Token) {
    let len = target.end - target.start;
    if len < 4 {
        // Words shorter than 4 characters are left alone.
        return;
    }
    let (i, j) = if len.is_multiple_of(2) {
        // Interchange the middle two characters.
        (target.start + len / 2 - 1, target.start + len / 2)
    } else {
        // Interchange the two characters surrounding the middle one.
        let mid = target.start + len / 2;
        (mid - 1, mid + 1)
    };
    chars.swap(i, j);
}

/// Introduce a typo in each target word (up to the first two) by the
/// length-dependent transposition rule.
pub fn perturb_typo(text: &str, targets: &[Token]) -> Result<PerturbationResult, TokenError> {
    let targets = &targets[..targets.len().min(2)];
    let mut chars = checked_chars(text, targets)?;
    for t in targets {
        transpose_in_place(&mut chars, t);
    }
    Ok(PerturbationResult::new(
        text,
        chars.into_iter().collect(),
        AttackKind::TypoInsertion,
        targets.to_vec(),
    ))
}

fn underscores(chars: &[char]) -> String {
    chars
        .iter()
        .map(|&c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

/// Replace every whitespace scalar by an underscore, one for one.
pub fn perturb_underscore(text: &str) -> PerturbationResult {
    let chars: Vec<char> = text.chars().collect();
    PerturbationResult::new(
        text,
        underscores(&chars),
        AttackKind::UnderscoreInsertion,
        Vec::new(),
    )
}

/// Delete every whitespace scalar.
pub fn perturb_remove_whitespace(text: &str) -> PerturbationResult {
    let perturbed: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    PerturbationResult::new(text, perturbed, AttackKind::WhitespaceRemoval, Vec::new())
}

fn inject_zero_width(chars: &[char], target: &Token) -> String {
    let mut out = String::with_capacity(chars.len() + target.len() * ZERO_WIDTH_REPEAT * 3);
    for (i, &c) in chars.iter().enumerate() {
        // Strictly between the target's characters, never at its edges.
        if i > target.start && i < target.end {
            for _ in 0..ZERO_WIDTH_REPEAT {
                out.push(ZERO_WIDTH_SPACE);
            }
        }
        out.push(c);
    }
    out
}

/// Insert five zero-width spaces between each adjacent character pair of the
/// target word. The perturbed text renders identically to the original.
pub fn perturb_zero_width(text: &str, target: &Token) -> Result<PerturbationResult, TokenError> {
    let chars = checked_chars(text, std::slice::from_ref(target))?;
    Ok(PerturbationResult::new(
        text,
        inject_zero_width(&chars, target),
        AttackKind::ZeroWidthInsertion,
        vec![target.clone()],
    ))
}

/// Leet-encode the targets, then replace every whitespace scalar by an
/// underscore. Leet goes first because targeting is defined over words of the
/// original text.
pub fn perturb_composite_underscore_leet(
    map: &LeetMap,
    text: &str,
    targets: &[Token],
) -> Result<PerturbationResult, TokenError> {
    let mut chars = checked_chars(text, targets)?;
    leet_in_place(map, &mut chars, targets);
    Ok(PerturbationResult::new(
        text,
        underscores(&chars),
        AttackKind::CompositeUnderscoreLeet,
        targets.to_vec(),
    ))
}

/// Leet-encode the targets, then inject zero-width spaces into the (now
/// leet-encoded) top target word. Leet preserves length, so the top target
/// occupies its original span.
pub fn perturb_composite_zero_width_leet(
    map: &LeetMap,
    text: &str,
    targets: &[Token],
) -> Result<PerturbationResult, TokenError> {
    let mut chars = checked_chars(text, targets)?;
    leet_in_place(map, &mut chars, targets);
    let perturbed = match targets.first() {
        Some(top) => inject_zero_width(&chars, top),
        None => chars.iter().collect(),
    };
    Ok(PerturbationResult::new(
        text,
        perturbed,
        AttackKind::CompositeZeroWidthLeet,
        targets.to_vec(),
    ))
}

/// Dispatch over the closed attack set.
///
/// Whole-text attacks ignore `targets`; the typo attack consumes at most the
/// first two targets and zero-width insertion the first one. Empty targets
/// make the targeted attacks the identity.
pub fn apply_attack(
    map: &LeetMap,
    text: &str,
    kind: AttackKind,
    targets: &[Token],
) -> Result<PerturbationResult, TokenError> {
    match kind {
        AttackKind::LeetSpeak => perturb_leet(map, text, targets),
        AttackKind::TypoInsertion => perturb_typo(text, targets),
        AttackKind::UnderscoreInsertion => Ok(perturb_underscore(text)),
        AttackKind::WhitespaceRemoval => Ok(perturb_remove_whitespace(text)),
        AttackKind::ZeroWidthInsertion => match targets.first() {
            Some(top) => perturb_zero_width(text, top),
            None => Ok(PerturbationResult::new(
                text,
                text.to_string(),
                kind,
                Vec::new(),
            )),
        },
        AttackKind::CompositeUnderscoreLeet => {
            perturb_composite_underscore_leet(map, text, targets)
        }
        AttackKind::CompositeZeroWidthLeet => perturb_composite_zero_width_leet(map, text, targets),
    }
}

//! Raw (unnormalized) interaction-history and text features.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::features::lexicon::{tokenize, Lexicon};
use crate::manifest::{FeatureName, FeatureSet, Manifest};
use crate::model::{Cascade, UserId};

pub const CHARACTER_NAMES: [&str; 5] = [
    "activity",
    "attractiveness",
    "sociability",
    "responsiveness",
    "connectivity",
];
pub const RELATIONSHIP_NAMES: [&str; 5] = [
    "post_influence",
    "comment_influence",
    "direct_post_influence",
    "direct_comment_influence",
    "co_commenting",
];

/// Words longer than this many characters count as long words.
pub const LONG_WORD_LEN: usize = 6;

fn nonempty(corpus: &[Cascade]) -> Result<()> {
    if corpus.is_empty() {
        Err(Error::precondition(
            "feature extraction needs a nonempty corpus",
        ))
    } else {
        Ok(())
    }
}

/// `[#posts, #comments received on own posts, #comments made,
///   #distinct posts commented on, #distinct publishers commented on]`.
pub fn character_features(user: &str, corpus: &[Cascade]) -> Result<[f64; 5]> {
    nonempty(corpus)?;
    let mut posts = 0usize;
    let mut received = 0usize;
    let mut made = 0usize;
    let mut posts_commented = 0usize;
    let mut publishers = BTreeSet::new();
    for c in corpus {
        if c.post.publisher == user {
            posts += 1;
            received += c.comments.len();
        }
        let mine = c.comments.iter().filter(|e| e.publisher == user).count();
        made += mine;
        if mine > 0 {
            posts_commented += 1;
            publishers.insert(c.post.publisher.as_str());
        }
    }
    Ok([
        posts as f64,
        received as f64,
        made as f64,
        posts_commented as f64,
        publishers.len() as f64,
    ])
}

/// Directed counts of `a`'s behaviour toward `b`:
/// comments on b's posts, comments after one of b's comments, first comments
/// on b's posts, comments immediately after b's comment, and cascades where a
/// commented after b had commented.
pub fn relationship_features(a: &str, b: &str, corpus: &[Cascade]) -> Result<[f64; 5]> {
    nonempty(corpus)?;
    let mut out = [0.0; 5];
    for c in corpus {
        let tally = cascade_relationships(c);
        if let Some(v) = tally.get(&(a.to_string(), b.to_string())) {
            for k in 0..5 {
                out[k] += v[k];
            }
        }
    }
    Ok(out)
}

/// Relationship counts contributed by a single cascade, keyed `(a, b)`.
fn cascade_relationships(c: &Cascade) -> BTreeMap<(UserId, UserId), [f64; 5]> {
    let mut out: BTreeMap<(UserId, UserId), [f64; 5]> = BTreeMap::new();
    let owner = &c.post.publisher;
    let mut seen_before: BTreeSet<&str> = BTreeSet::new();
    let mut co: BTreeSet<(&str, &str)> = BTreeSet::new();
    for (i, e) in c.comments.iter().enumerate() {
        let a = e.publisher.as_str();
        out.entry((a.to_string(), owner.clone())).or_default()[0] += 1.0;
        if i == 0 {
            out.entry((a.to_string(), owner.clone())).or_default()[2] += 1.0;
        } else {
            let prev = c.comments[i - 1].publisher.as_str();
            out.entry((a.to_string(), prev.to_string())).or_default()[3] += 1.0;
        }
        for b in &seen_before {
            out.entry((a.to_string(), b.to_string())).or_default()[1] += 1.0;
            co.insert((a, b));
        }
        seen_before.insert(a);
    }
    for (a, b) in co {
        out.entry((a.to_string(), b.to_string())).or_default()[4] += 1.0;
    }
    out
}

/// Raw character features for every user in `users`.
pub fn character_table(users: &[UserId], corpus: &[Cascade]) -> Result<BTreeMap<UserId, [f64; 5]>> {
    nonempty(corpus)?;
    let mut table: BTreeMap<UserId, [f64; 5]> =
        users.iter().map(|u| (u.clone(), [0.0; 5])).collect();
    let mut commented: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in corpus {
        if let Some(v) = table.get_mut(&c.post.publisher) {
            v[0] += 1.0;
            v[1] += c.comments.len() as f64;
        }
        let mut in_this: BTreeSet<&str> = BTreeSet::new();
        for e in &c.comments {
            if let Some(v) = table.get_mut(&e.publisher) {
                v[2] += 1.0;
            }
            in_this.insert(e.publisher.as_str());
        }
        for u in in_this {
            if let Some(v) = table.get_mut(u) {
                v[3] += 1.0;
            }
            commented
                .entry(u)
                .or_default()
                .insert(c.post.publisher.as_str());
        }
    }
    for (u, pubs) in commented {
        if let Some(v) = table.get_mut(u) {
            v[4] = pubs.len() as f64;
        }
    }
    Ok(table)
}

/// Raw nonzero relationship features for all ordered pairs seen in `corpus`.
pub fn relationship_table(corpus: &[Cascade]) -> Result<BTreeMap<(UserId, UserId), [f64; 5]>> {
    nonempty(corpus)?;
    let mut out: BTreeMap<(UserId, UserId), [f64; 5]> = BTreeMap::new();
    for c in corpus {
        for (k, v) in cascade_relationships(c) {
            let slot = out.entry(k).or_default();
            for i in 0..5 {
                slot[i] += v[i];
            }
        }
    }
    Ok(out)
}

/// `[word count, long-word count, hits per lexicon category...]`.
pub fn content_features(text: &str, lexicon: &Lexicon) -> Vec<f64> {
    let mut out = vec![0.0; 2 + lexicon.len()];
    for token in tokenize(text) {
        out[0] += 1.0;
        if token.chars().count() > LONG_WORD_LEN {
            out[1] += 1.0;
        }
        for (slot, hit) in out[2..].iter_mut().zip(lexicon.hits(&token)) {
            if hit {
                *slot += 1.0;
            }
        }
    }
    out
}

/// Manifest of the 20 publisher–user coordinates:
/// `[ChrPub(p), ChrUser(u), RltnPub(p→u), RltnUser(u→p)]`.
pub fn pair_manifest() -> Manifest {
    let mut v = Vec::with_capacity(20);
    for (set, prefix, names) in [
        (FeatureSet::ChrPub, "pub", &CHARACTER_NAMES),
        (FeatureSet::ChrUser, "user", &CHARACTER_NAMES),
        (FeatureSet::RltnPub, "pub", &RELATIONSHIP_NAMES),
        (FeatureSet::RltnUser, "user", &RELATIONSHIP_NAMES),
    ] {
        for n in names.iter() {
            v.push(FeatureName {
                name: format!("{prefix}_{n}"),
                set,
            });
        }
    }
    Manifest::new(v)
}

/// Content manifest for `lexicon`: two structural counts then one entry per category.
pub fn content_manifest(lexicon: &Lexicon) -> Manifest {
    let mut v = vec![
        FeatureName {
            name: "word_count".into(),
            set: FeatureSet::Lng,
        },
        FeatureName {
            name: "long_words".into(),
            set: FeatureSet::Lng,
        },
    ];
    v.extend(lexicon.categories.iter().map(|c| FeatureName {
        name: c.name.clone(),
        set: c.set,
    }));
    Manifest::new(v)
}

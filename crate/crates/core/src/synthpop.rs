//! Seeded synthetic survey populations.
//!
//! Each message has a category and a latent intensity `μ`; each user has a
//! per-category tolerance threshold `τ_c`. A rater perceives
//! `clamp(round(μ + N(0, σ)), 1, 5)` and filters when the perceived level
//! reaches `τ_c`, with the choice flipped with probability `ε`. Message text
//! is assembled from per-category keywords, per-level intensity markers and
//! filler words so that it carries the signal a learner needs; the markers
//! are cumulative, so a per-category threshold on the level is linear in the
//! word counts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::corpus::{Category, Intensity, Message, SurveySet, UserResponse};
use crate::error::{Error, Result};

/// Category mixture following the coded message counts of the reference
/// corpus (general, cruel, religious/racial, orientation, gender, threat,
/// multiple, non-harassment).
pub const REFERENCE_MIXTURE: [f64; 8] = [79.0, 1054.0, 89.0, 11.0, 656.0, 236.0, 106.0, 2382.0];

/// Center of the latent intensity per harassment category.
const INTENSITY_CENTER: [f64; 7] = [2.1, 2.5, 2.9, 2.7, 2.5, 3.5, 3.3];
const INTENSITY_SPREAD: f64 = 1.0;

const KEYWORDS: [&[&str]; 8] = [
    &["loser", "pathetic", "clown"],
    &["ugly", "worthless", "stupid"],
    &["heathen", "infidel", "deport"],
    &["unnatural", "deviant", "closeted"],
    &["bimbo", "hysterical", "sexist"],
    &["hurt", "regret", "bleed"],
    &[],
    &["coffee", "weekend", "concert", "recipe", "garden", "sunset"],
];

/// Intensity markers for levels 2 to 5. A message at level `L` carries one
/// marker for every level from 2 up to `L`.
const MARKERS: [&[&str]; 4] = [
    &["bit", "somewhat"],
    &["really", "seriously"],
    &["totally", "absolutely"],
    &["die", "destroy"],
];

const FILLER: &[&str] = &[
    "the",
    "you",
    "and",
    "today",
    "people",
    "this",
    "that",
    "just",
    "about",
    "know",
    "going",
    "time",
    "again",
    "still",
    "here",
    "there",
    "what",
    "when",
    "why",
    "like",
    "look",
    "said",
    "think",
    "online",
    "post",
    "everyone",
    "always",
    "never",
    "thing",
    "yesterday",
    "tomorrow",
    "city",
    "team",
    "school",
    "work",
    "night",
    "morning",
    "phone",
    "friend",
    "group",
    "story",
    "news",
    "photo",
    "video",
    "show",
    "week",
    "year",
    "home",
    "street",
    "place",
];

/// Generator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_users: usize,
    pub n_messages: usize,
    pub items_per_user: usize,
    pub raters_per_message: usize,
    /// Unnormalized category weights indexed by category code.
    pub category_weights: [f64; 8],
    pub tau_low: f64,
    pub tau_high: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_users: 60,
            n_messages: 900,
            items_per_user: 75,
            raters_per_message: 5,
            category_weights: REFERENCE_MIXTURE,
            tau_low: 1.5,
            tau_high: 5.5,
            sigma: 0.5,
            epsilon: 0.05,
            seed: 7,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_users == 0
            || self.n_messages == 0
            || self.items_per_user == 0
            || self.raters_per_message == 0
        {
            return bad("user, message, item and rater counts must all be at least 1".into());
        }
        if self
            .category_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
            || self.category_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("category weights must be finite, nonnegative and not all zero".into());
        }
        if !(0.0 <= self.tau_low && self.tau_low <= self.tau_high && self.tau_high <= 6.0) {
            return bad(format!(
                "threshold range [{}, {}] must lie in [0, 6]",
                self.tau_low, self.tau_high
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must be in [0, 1], got {}", self.epsilon));
        }
        Ok(())
    }

    /// Mixture weights scaled to sum to one.
    pub fn mixture(&self) -> [f64; 8] {
        let total: f64 = self.category_weights.iter().sum();
        self.category_weights.map(|w| w / total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthUserProfile {
    pub user_id: String,
    /// Tolerance threshold per category code.
    pub thresholds: [f64; 8],
    pub sigma: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthMessage {
    pub id: String,
    pub category: Category,
    /// Latent true intensity in [1, 5].
    pub mu: f64,
}

/// How closely the rater assignment met the design.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentReport {
    /// Every message received exactly `raters_per_message` ratings.
    pub exact: bool,
    pub min_ratings: usize,
    pub max_ratings: usize,
    pub note: Option<String>,
}

/// Ground truth written next to a generated survey.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: GenConfig,
    pub assignment: AssignmentReport,
    pub users: Vec<SynthUserProfile>,
    pub messages: Vec<SynthMessage>,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub survey: SurveySet,
    pub truth: GroundTruth,
}

pub fn generate(config: &GenConfig) -> Result<Generated> {
    generate_inner(config, None)
}

/// Like [`generate`] but with fixed per-user thresholds; `n_users` is taken
/// from `thresholds.len()`.
pub fn generate_with_thresholds(config: &GenConfig, thresholds: &[[f64; 8]]) -> Result<Generated> {
    let config = GenConfig {
        n_users: thresholds.len(),
        ..config.clone()
    };
    generate_inner(&config, Some(thresholds))
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(3)
}

fn generate_inner(config: &GenConfig, fixed: Option<&[[f64; 8]]>) -> Result<Generated> {
    config.validate()?;
    if let Some(t) = fixed {
        if t.iter().flatten().any(|v| !(0.0..=6.0).contains(v)) {
            return Err(Error::Config("thresholds must lie in [0, 6]".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mixture =
        WeightedIndex::new(config.category_weights).map_err(|e| Error::Config(e.to_string()))?;

    let mw = width(config.n_messages);
    let mut synth = Vec::with_capacity(config.n_messages);
    let mut messages = Vec::with_capacity(config.n_messages);
    for i in 0..config.n_messages {
        let category = Category::ALL[mixture.sample(&mut rng)];
        let mu = latent_intensity(category, &mut rng);
        let text = message_text(category, mu, &mut rng);
        let id = format!("s{i:0mw$}");
        let code = category.code() as i64;
        messages.push(Message::new(id.clone(), text, &[code, code, code])?);
        synth.push(SynthMessage { id, category, mu });
    }

    let uw = width(config.n_users);
    let users: Vec<SynthUserProfile> = (0..config.n_users)
        .map(|u| SynthUserProfile {
            user_id: format!("u{u:0uw$}"),
            thresholds: match fixed {
                Some(t) => t[u],
                None => std::array::from_fn(|_| rng.gen_range(config.tau_low..=config.tau_high)),
            },
            sigma: config.sigma,
            epsilon: config.epsilon,
        })
        .collect();

    let (assignment, report) = assign(config, &mut rng)?;
    let noise = Normal::new(0.0, config.sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut responses = Vec::with_capacity(config.n_users * config.items_per_user);
    for (profile, items) in users.iter().zip(&assignment) {
        for &m in items {
            let msg = &synth[m];
            let eps = if config.sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            let level = (msg.mu + eps).round().clamp(1.0, 5.0);
            let mut filter = level >= profile.thresholds[msg.category.code() as usize];
            if rng.gen::<f64>() < config.epsilon {
                filter = !filter;
            }
            responses.push(UserResponse {
                user_id: profile.user_id.clone(),
                message_id: msg.id.clone(),
                intensity: Intensity::new(level as i64).expect("level clamped to 1-5"),
                filter,
            });
        }
    }
    let survey = SurveySet::with_design(
        messages,
        responses,
        config.raters_per_message,
        config.items_per_user,
    )?;
    Ok(Generated {
        survey,
        truth: GroundTruth {
            config: config.clone(),
            assignment: report,
            users,
            messages: synth,
        },
    })
}

fn latent_intensity(category: Category, rng: &mut impl Rng) -> f64 {
    match category {
        Category::NonHarassment => 1.0,
        c => {
            let center = INTENSITY_CENTER[c.code() as usize];
            (center + rng.gen_range(-INTENSITY_SPREAD..=INTENSITY_SPREAD)).clamp(1.0, 5.0)
        }
    }
}

fn message_text(category: Category, mu: f64, rng: &mut impl Rng) -> String {
    let mut words: Vec<&str> = Vec::new();
    let code = category.code() as usize;
    if category == Category::MultipleTypes {
        // keywords of two distinct single-type harassment categories
        let mut pool: Vec<usize> = (0..6).collect();
        pool.shuffle(rng);
        for &c in &pool[..2] {
            words.push(KEYWORDS[c].choose(rng).copied().unwrap_or("x"));
        }
    } else {
        words.extend(KEYWORDS[code].choose_multiple(rng, 2).copied());
    }
    let level = mu.round().clamp(1.0, 5.0) as usize;
    for pool in &MARKERS[..level - 1] {
        words.push(pool.choose(rng).copied().unwrap_or("very"));
    }
    let n_filler = rng.gen_range(0..=2usize);
    for _ in 0..n_filler {
        words.push(FILLER.choose(rng).copied().unwrap_or("the"));
    }
    words.shuffle(rng);
    let mut text = words.join(" ");
    if rng.gen_bool(0.2) {
        text = format!("@someone {text}");
    }
    if rng.gen_bool(0.1) {
        text.push_str(" #mood");
    }
    text
}

/// Deals `items_per_user` distinct messages to each user. When the totals
/// match, every message is dealt exactly `raters_per_message` times.
fn assign(config: &GenConfig, rng: &mut impl Rng) -> Result<(Vec<Vec<usize>>, AssignmentReport)> {
    let (m, items) = (config.n_messages, config.items_per_user);
    if items > m {
        return Err(Error::Infeasible(format!(
            "each user needs {items} distinct messages but only {m} exist"
        )));
    }
    let demand = config.n_users * items;
    let supply = m * config.raters_per_message;
    // repeated fresh permutations, cut to length
    let mut slots = Vec::with_capacity(demand + m);
    while slots.len() < demand {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(rng);
        slots.extend(perm);
    }
    slots.truncate(demand);
    // repair duplicates inside a user's block by swapping with a slot of
    // another block, preferring later ones, without creating a duplicate there
    let block_of = |j: usize| (j / items) * items..(j / items + 1) * items;
    for u in 0..config.n_users {
        let block = u * items..(u + 1) * items;
        let mut seen = std::collections::HashSet::with_capacity(items);
        for pos in block.clone() {
            if seen.insert(slots[pos]) {
                continue;
            }
            let dup = slots[pos];
            let swap = (block.end..demand)
                .chain(0..block.start)
                .find(|&j| !seen.contains(&slots[j]) && !slots[block_of(j)].contains(&dup));
            match swap {
                Some(j) => {
                    slots.swap(pos, j);
                    seen.insert(slots[pos]);
                }
                None => {
                    return Err(Error::Infeasible(format!(
                        "could not give user {u} {items} distinct messages from {m} messages x {} raters",
                        config.raters_per_message
                    )))
                }
            }
        }
    }
    let mut counts = vec![0usize; m];
    for &s in &slots {
        counts[s] += 1;
    }
    let min_ratings = counts.iter().copied().min().unwrap_or(0);
    let max_ratings = counts.iter().copied().max().unwrap_or(0);
    let exact =
        min_ratings == config.raters_per_message && max_ratings == config.raters_per_message;
    let note = (demand != supply).then(|| {
        format!(
            "{} users x {items} items = {demand} ratings but {m} messages x {} raters = {supply}; \
             ratings per message range {min_ratings}..={max_ratings}",
            config.n_users, config.raters_per_message
        )
    });
    let assignment = slots.chunks(items).map(<[usize]>::to_vec).collect();
    Ok((
        assignment,
        AssignmentReport {
            exact,
            min_ratings,
            max_ratings,
            note,
        },
    ))
}

//! Message corpus, survey responses and the aggregate survey analytics.
//!
//! A [`SurveySet`] is immutable once built; all reports in [`report`] are pure
//! functions over it.

mod io;
pub mod report;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use io::{
    load_messages, load_responses, load_survey, parse_messages, parse_responses, write_messages,
    write_responses, LoadedMessages, MESSAGES_FILE, RESPONSES_FILE, RESPONSES_HEADER,
};
pub use report::{
    agreement_distribution, category_frequencies, filter_counts_by_category_intensity,
    filter_rate_by_category, filter_rate_by_category_intensity, user_filter_histogram,
    AgreementDistribution, CategoryFrequencies, CorpusReport, FilterCounts,
};

/// Default number of raters shown each message.
pub const DEFAULT_RATERS_PER_MESSAGE: usize = 5;
/// Default number of messages shown each user.
pub const DEFAULT_ITEMS_PER_USER: usize = 75;

/// Harassment taxonomy. Codes follow the corpus table numbering, with
/// non-harassment as code 7.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    GeneralHarassment = 0,
    CruelStatement = 1,
    ReligiousRacialEthnic = 2,
    SexualOrientation = 3,
    SexGender = 4,
    Threat = 5,
    MultipleTypes = 6,
    NonHarassment = 7,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::GeneralHarassment,
        Category::CruelStatement,
        Category::ReligiousRacialEthnic,
        Category::SexualOrientation,
        Category::SexGender,
        Category::Threat,
        Category::MultipleTypes,
        Category::NonHarassment,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Result<Self> {
        usize::try_from(code)
            .ok()
            .and_then(|c| Self::ALL.get(c).copied())
            .ok_or(Error::InvalidAnnotation(code))
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::GeneralHarassment => "General harassment",
            Category::CruelStatement => "Cruel statement",
            Category::ReligiousRacialEthnic => "Religious/racial/ethnic",
            Category::SexualOrientation => "Sexual orientation",
            Category::SexGender => "Sex/gender",
            Category::Threat => "Threat",
            Category::MultipleTypes => "Multiple types",
            Category::NonHarassment => "Non-harassment",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Categories travel as their integer code, both as values and as map keys.
impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        Category::from_code(code as i64).map_err(serde::de::Error::custom)
    }
}

/// Outcome of resolving annotator labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolved {
    Coded(Category),
    /// No strict majority among annotators, or no annotations at all.
    NonCodable,
}

impl Resolved {
    pub fn category(self) -> Option<Category> {
        match self {
            Resolved::Coded(c) => Some(c),
            Resolved::NonCodable => None,
        }
    }
}

/// Strict-majority label over at most three annotator codes.
pub fn majority_category(annotations: &[i64]) -> Result<Resolved> {
    if annotations.len() > 3 {
        return Err(Error::TooManyAnnotations(annotations.len()));
    }
    let mut counts = [0usize; 8];
    for &a in annotations {
        counts[Category::from_code(a)?.code() as usize] += 1;
    }
    let resolved = counts
        .iter()
        .position(|&c| 2 * c > annotations.len())
        .map(|i| Resolved::Coded(Category::ALL[i]))
        .unwrap_or(Resolved::NonCodable);
    Ok(resolved)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: String,
    pub text: String,
    pub annotations: Vec<Category>,
    pub resolved: Resolved,
}

impl Message {
    /// Builds a message, resolving its category from the annotations.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        annotations: &[i64],
    ) -> Result<Self> {
        let resolved = majority_category(annotations)?;
        let annotations = annotations
            .iter()
            .map(|&a| Category::from_code(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Message {
            id: id.into(),
            text: text.into(),
            annotations,
            resolved,
        })
    }

    pub fn category(&self) -> Option<Category> {
        self.resolved.category()
    }
}

/// Perceived harassment intensity, 1 (None) through 5 (Extreme).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Intensity(u8);

impl Intensity {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn new(level: i64) -> Option<Self> {
        (Self::MIN as i64..=Self::MAX as i64)
            .contains(&level)
            .then_some(Intensity(level as u8))
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Intensity> {
        (Self::MIN..=Self::MAX).map(Intensity)
    }

    pub fn label(self) -> &'static str {
        ["None", "Minimal", "Moderate", "High", "Extreme"][self.0 as usize - 1]
    }
}

impl Serialize for Intensity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for Intensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let level = u8::deserialize(d)?;
        Intensity::new(level as i64)
            .ok_or_else(|| serde::de::Error::custom(format!("intensity {level} outside 1-5")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserResponse {
    pub user_id: String,
    pub message_id: String,
    pub intensity: Intensity,
    pub filter: bool,
}

/// Shortfalls against the survey design targets. Reported, never fatal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignDeviations {
    /// Messages with at least one response but not exactly `raters_per_message`.
    pub messages_off_target: usize,
    /// Users who answered a number of items other than `items_per_user`.
    pub users_off_target: usize,
    pub messages_without_responses: usize,
}

/// Messages plus the responses collected on them.
#[derive(Clone, Debug)]
pub struct SurveySet {
    messages: Vec<Message>,
    responses: Vec<UserResponse>,
    pub raters_per_message: usize,
    pub items_per_user: usize,
    message_index: HashMap<String, usize>,
    by_message: Vec<Vec<usize>>,
    by_user: BTreeMap<String, Vec<usize>>,
}

impl SurveySet {
    pub fn new(messages: Vec<Message>, responses: Vec<UserResponse>) -> Result<Self> {
        Self::with_design(
            messages,
            responses,
            DEFAULT_RATERS_PER_MESSAGE,
            DEFAULT_ITEMS_PER_USER,
        )
    }

    pub fn with_design(
        messages: Vec<Message>,
        responses: Vec<UserResponse>,
        raters_per_message: usize,
        items_per_user: usize,
    ) -> Result<Self> {
        let mut message_index = HashMap::with_capacity(messages.len());
        for (i, m) in messages.iter().enumerate() {
            if message_index.insert(m.id.clone(), i).is_some() {
                return Err(Error::DuplicateMessageId(m.id.clone()));
            }
        }
        let mut by_message = vec![Vec::new(); messages.len()];
        let mut by_user: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut seen = HashSet::with_capacity(responses.len());
        for (i, r) in responses.iter().enumerate() {
            let Some(&m) = message_index.get(&r.message_id) else {
                return Err(Error::UnknownMessage {
                    user: r.user_id.clone(),
                    message: r.message_id.clone(),
                });
            };
            if !seen.insert((r.user_id.as_str(), r.message_id.as_str())) {
                return Err(Error::DuplicateResponse {
                    user: r.user_id.clone(),
                    message: r.message_id.clone(),
                });
            }
            by_message[m].push(i);
            by_user.entry(r.user_id.clone()).or_default().push(i);
        }
        Ok(SurveySet {
            messages,
            responses,
            raters_per_message,
            items_per_user,
            message_index,
            by_message,
            by_user,
        })
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn responses(&self) -> &[UserResponse] {
        &self.responses
    }

    pub fn message(&self, id: &str) -> Option<&Message> {
        self.message_index.get(id).map(|&i| &self.messages[i])
    }

    /// Position of a message in [`Self::messages`].
    pub fn message_position(&self, id: &str) -> Option<usize> {
        self.message_index.get(id).copied()
    }

    /// Responses on the message at `index` in [`Self::messages`].
    pub fn responses_for_message(&self, index: usize) -> impl Iterator<Item = &UserResponse> {
        self.by_message[index].iter().map(|&i| &self.responses[i])
    }

    /// User ids in lexicographic order.
    pub fn user_ids(&self) -> impl Iterator<Item = &str> {
        self.by_user.keys().map(String::as_str)
    }

    pub fn user_count(&self) -> usize {
        self.by_user.len()
    }

    /// One user's responses in file order.
    pub fn user_responses(&self, user_id: &str) -> Vec<&UserResponse> {
        self.by_user
            .get(user_id)
            .map(|idx| idx.iter().map(|&i| &self.responses[i]).collect())
            .unwrap_or_default()
    }

    /// Category of the message a response refers to, if codable.
    pub fn response_category(&self, r: &UserResponse) -> Option<Category> {
        self.message(&r.message_id).and_then(Message::category)
    }

    pub fn deviations(&self) -> DesignDeviations {
        let mut d = DesignDeviations::default();
        for rs in &self.by_message {
            match rs.len() {
                0 => d.messages_without_responses += 1,
                n if n != self.raters_per_message => d.messages_off_target += 1,
                _ => {}
            }
        }
        d.users_off_target = self
            .by_user
            .values()
            .filter(|rs| rs.len() != self.items_per_user)
            .count();
        d
    }
}

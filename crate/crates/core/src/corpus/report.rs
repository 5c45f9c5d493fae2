//! Aggregate survey analytics: category frequencies, filter rates by category
//! and intensity, per-user filter histogram and rater agreement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Category, Intensity, Message, Resolved, SurveySet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryFrequencies {
    /// All eight categories, zero counts included.
    pub counts: BTreeMap<Category, usize>,
    pub non_codable: usize,
    pub total: usize,
}

pub fn category_frequencies(messages: &[Message]) -> CategoryFrequencies {
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    let mut non_codable = 0;
    for m in messages {
        match m.resolved {
            Resolved::Coded(c) => *counts.entry(c).or_default() += 1,
            Resolved::NonCodable => non_codable += 1,
        }
    }
    CategoryFrequencies {
        counts,
        non_codable,
        total: messages.len(),
    }
}

/// Filtered/total response counts for one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub filtered: usize,
    pub total: usize,
}

impl FilterCounts {
    pub fn add(&mut self, filter: bool) {
        self.total += 1;
        self.filtered += filter as usize;
    }

    pub fn rate(&self) -> f64 {
        self.filtered as f64 / self.total as f64
    }
}

fn counts_by_category(survey: &SurveySet) -> BTreeMap<Category, FilterCounts> {
    let mut cells: BTreeMap<Category, FilterCounts> = BTreeMap::new();
    for r in survey.responses() {
        if let Some(c) = survey.response_category(r) {
            cells.entry(c).or_default().add(r.filter);
        }
    }
    cells
}

/// Fraction of responses marked for filtering, per codable category.
/// Categories nobody responded to are absent.
pub fn filter_rate_by_category(survey: &SurveySet) -> BTreeMap<Category, f64> {
    counts_by_category(survey)
        .into_iter()
        .map(|(c, n)| (c, n.rate()))
        .collect()
}

/// Filter counts keyed by category and then by the responder's own intensity.
pub fn filter_counts_by_category_intensity(
    survey: &SurveySet,
) -> BTreeMap<Category, BTreeMap<Intensity, FilterCounts>> {
    let mut cells: BTreeMap<Category, BTreeMap<Intensity, FilterCounts>> = BTreeMap::new();
    for r in survey.responses() {
        if let Some(c) = survey.response_category(r) {
            cells
                .entry(c)
                .or_default()
                .entry(r.intensity)
                .or_default()
                .add(r.filter);
        }
    }
    cells
}

pub fn filter_rate_by_category_intensity(
    survey: &SurveySet,
) -> BTreeMap<Category, BTreeMap<Intensity, f64>> {
    filter_counts_by_category_intensity(survey)
        .into_iter()
        .map(|(c, row)| (c, row.into_iter().map(|(i, n)| (i, n.rate())).collect()))
        .collect()
}

/// Number of users per count of filtered items.
pub fn user_filter_histogram(survey: &SurveySet) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for user in survey.user_ids() {
        let filtered = survey
            .user_responses(user)
            .iter()
            .filter(|r| r.filter)
            .count();
        *hist.entry(filtered).or_insert(0) += 1;
    }
    hist
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementDistribution {
    pub unanimous: f64,
    pub majority: f64,
    pub maximal_disagreement: f64,
    /// Messages with exactly `raters_per_message` responses.
    pub classified: usize,
    /// Messages with at least one response but a different rater count.
    pub unclassified: usize,
    /// Filter votes per classified message.
    pub votes: BTreeMap<String, usize>,
    /// Number of classified messages per filter-vote count.
    pub vote_histogram: BTreeMap<usize, usize>,
}

/// Splits messages rated by exactly `raters_per_message` users into
/// unanimous, majority and maximal-disagreement groups by their filter votes.
pub fn agreement_distribution(survey: &SurveySet) -> AgreementDistribution {
    let raters = survey.raters_per_message;
    let mut votes = BTreeMap::new();
    let mut vote_histogram = BTreeMap::new();
    let (mut unanimous, mut majority, mut split) = (0usize, 0usize, 0usize);
    let mut unclassified = 0;
    for (i, m) in survey.messages().iter().enumerate() {
        let rs: Vec<_> = survey.responses_for_message(i).collect();
        if rs.is_empty() {
            continue;
        }
        if rs.len() != raters {
            unclassified += 1;
            continue;
        }
        let yes = rs.iter().filter(|r| r.filter).count();
        let margin = yes.abs_diff(raters - yes);
        if margin == raters {
            unanimous += 1;
        } else if margin <= 1 {
            split += 1;
        } else {
            majority += 1;
        }
        votes.insert(m.id.clone(), yes);
        *vote_histogram.entry(yes).or_insert(0) += 1;
    }
    let classified = unanimous + majority + split;
    let frac = |n: usize| {
        if classified == 0 {
            0.0
        } else {
            n as f64 / classified as f64
        }
    };
    AgreementDistribution {
        unanimous: frac(unanimous),
        majority: frac(majority),
        maximal_disagreement: frac(split),
        classified,
        unclassified,
        votes,
        vote_histogram,
    }
}

/// The five corpus analytics in one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub category_frequencies: CategoryFrequencies,
    pub filter_rate_by_category: BTreeMap<Category, f64>,
    pub filter_rate_by_category_intensity: BTreeMap<Category, BTreeMap<Intensity, f64>>,
    pub user_filter_histogram: BTreeMap<usize, usize>,
    pub agreement_distribution: AgreementDistribution,
}

impl CorpusReport {
    pub fn build(survey: &SurveySet) -> Self {
        CorpusReport {
            category_frequencies: category_frequencies(survey.messages()),
            filter_rate_by_category: filter_rate_by_category(survey),
            filter_rate_by_category_intensity: filter_rate_by_category_intensity(survey),
            user_filter_histogram: user_filter_histogram(survey),
            agreement_distribution: agreement_distribution(survey),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::UserResponse;
    use proptest::prelude::*;

    fn msg(id: &str, ann: &[i64]) -> Message {
        Message::new(id, format!("text {id}"), ann).unwrap()
    }

    fn resp(user: &str, m: &str, intensity: i64, filter: bool) -> UserResponse {
        UserResponse {
            user_id: user.into(),
            message_id: m.into(),
            intensity: Intensity::new(intensity).unwrap(),
            filter,
        }
    }

    #[test]
    fn frequencies_of_six_message_fixture() {
        let msgs = vec![
            msg("a", &[7]),
            msg("b", &[7]),
            msg("c", &[1]),
            msg("d", &[5]),
            msg("e", &[2, 3, 4]),
            msg("f", &[1]),
        ];
        let f = category_frequencies(&msgs);
        assert_eq!(f.counts[&Category::CruelStatement], 2);
        assert_eq!(f.counts[&Category::Threat], 1);
        assert_eq!(f.counts[&Category::NonHarassment], 2);
        assert_eq!(f.counts[&Category::GeneralHarassment], 0);
        assert_eq!(f.non_codable, 1);
        assert_eq!(f.total, 6);
    }

    #[test]
    fn frequencies_of_empty_corpus() {
        let f = category_frequencies(&[]);
        assert!(f.counts.values().all(|&n| n == 0));
        assert_eq!(f.counts.len(), 8);
        assert_eq!((f.non_codable, f.total), (0, 0));
    }

    #[test]
    fn filter_rates_by_category() {
        let msgs = vec![msg("t", &[5]), msg("n", &[7]), msg("x", &[1, 2, 3])];
        let rs = vec![
            resp("u1", "t", 4, true),
            resp("u2", "t", 4, true),
            resp("u3", "t", 3, false),
            resp("u4", "t", 5, true),
            resp("u1", "n", 1, false),
            resp("u2", "n", 1, false),
            resp("u3", "x", 5, true),
        ];
        let s = SurveySet::new(msgs, rs).unwrap();
        let rates = filter_rate_by_category(&s);
        assert_eq!(rates.len(), 2);
        assert_eq!(rates[&Category::Threat], 0.75);
        assert_eq!(rates[&Category::NonHarassment], 0.0);
    }

    #[test]
    fn single_filtered_response_rate_is_one() {
        let s = SurveySet::new(vec![msg("a", &[0])], vec![resp("u", "a", 2, true)]).unwrap();
        assert_eq!(
            filter_rate_by_category(&s),
            BTreeMap::from([(Category::GeneralHarassment, 1.0)])
        );
    }

    #[test]
    fn filter_rates_by_category_and_intensity() {
        let msgs = vec![msg("a", &[1]), msg("b", &[1]), msg("c", &[6])];
        let rs = vec![
            resp("u1", "a", 2, true),
            resp("u2", "a", 2, false),
            resp("u3", "a", 2, false),
            resp("u4", "b", 2, false),
            resp("u5", "b", 5, true),
            resp("u1", "c", 3, true),
        ];
        let s = SurveySet::new(msgs, rs).unwrap();
        let t = filter_rate_by_category_intensity(&s);
        let lvl = |n| Intensity::new(n).unwrap();
        assert_eq!(t[&Category::CruelStatement][&lvl(2)], 0.25);
        assert_eq!(t[&Category::CruelStatement][&lvl(5)], 1.0);
        let multi = &t[&Category::MultipleTypes];
        assert_eq!(multi.keys().copied().collect::<Vec<_>>(), vec![lvl(3)]);
    }

    #[test]
    fn histogram_examples() {
        let msgs: Vec<_> = (0..75).map(|i| msg(&format!("m{i}"), &[0])).collect();
        let mut rs = Vec::new();
        for i in 0..75 {
            let id = format!("m{i}");
            rs.push(resp("a", &id, 1, false));
            rs.push(resp("b", &id, 1, false));
            rs.push(resp("c", &id, 5, true));
        }
        let s = SurveySet::new(msgs.clone(), rs).unwrap();
        assert_eq!(user_filter_histogram(&s), BTreeMap::from([(0, 2), (75, 1)]));

        let empty = SurveySet::new(msgs.clone(), vec![]).unwrap();
        assert!(user_filter_histogram(&empty).is_empty());

        let rs: Vec<_> = (0..10)
            .map(|i| resp("solo", &format!("m{i}"), 3, i < 4))
            .collect();
        let s = SurveySet::new(msgs, rs).unwrap();
        assert_eq!(user_filter_histogram(&s), BTreeMap::from([(4, 1)]));
    }

    fn voted(id: &str, votes: &str) -> Vec<UserResponse> {
        votes
            .chars()
            .enumerate()
            .map(|(i, v)| resp(&format!("u{i}"), id, 3, v == 'T'))
            .collect()
    }

    #[test]
    fn agreement_examples() {
        let s = SurveySet::new(vec![msg("a", &[0])], voted("a", "TTTTT")).unwrap();
        let a = agreement_distribution(&s);
        assert_eq!(a.unanimous, 1.0);
        assert_eq!(a.votes["a"], 5);

        let mut rs = voted("a", "TTFFF");
        rs.extend(voted("b", "TTTTF"));
        let s = SurveySet::new(vec![msg("a", &[0]), msg("b", &[0])], rs).unwrap();
        let a = agreement_distribution(&s);
        assert_eq!(
            (a.unanimous, a.majority, a.maximal_disagreement),
            (0.0, 0.5, 0.5)
        );
        assert_eq!(a.classified, 2);
    }

    #[test]
    fn agreement_excludes_off_target_rater_counts() {
        let mut rs = voted("a", "TTTT");
        rs.extend(voted("b", "FFFFF"));
        let s = SurveySet::new(vec![msg("a", &[0]), msg("b", &[0]), msg("c", &[0])], rs).unwrap();
        let a = agreement_distribution(&s);
        assert_eq!(a.classified, 1);
        assert_eq!(a.unclassified, 1);
        assert_eq!(a.unanimous, 1.0);
        assert!(!a.votes.contains_key("a"));
        assert_eq!(s.deviations().messages_off_target, 1);
        assert_eq!(s.deviations().messages_without_responses, 1);
    }

    #[test]
    fn agreement_with_nothing_classified_is_all_zero() {
        let s = SurveySet::new(vec![msg("a", &[0])], vec![]).unwrap();
        let a = agreement_distribution(&s);
        assert_eq!(a.classified, 0);
        assert_eq!(a.unanimous + a.majority + a.maximal_disagreement, 0.0);
    }

    #[test]
    fn report_json_uses_expected_keys() {
        let s = SurveySet::new(vec![msg("a", &[5])], voted("a", "TTFTT")).unwrap();
        let v = serde_json::to_value(CorpusReport::build(&s)).unwrap();
        for key in [
            "category_frequencies",
            "filter_rate_by_category",
            "filter_rate_by_category_intensity",
            "user_filter_histogram",
            "agreement_distribution",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["filter_rate_by_category"]["5"], 0.8);
        assert_eq!(v["filter_rate_by_category_intensity"]["5"]["3"], 0.8);
    }

    fn arb_survey() -> impl Strategy<Value = SurveySet> {
        (
            1usize..12,
            prop::collection::vec((0i64..8, 0usize..6, any::<u32>()), 1..12),
        )
            .prop_map(|(users, specs)| {
                let msgs: Vec<_> = specs
                    .iter()
                    .enumerate()
                    .map(|(i, (c, _, _))| msg(&format!("m{i}"), &[*c]))
                    .collect();
                let mut rs = Vec::new();
                for (i, (_, n, bits)) in specs.iter().enumerate() {
                    for u in 0..(*n).min(users) {
                        rs.push(resp(
                            &format!("u{u}"),
                            &format!("m{i}"),
                            1 + (bits >> (u + 8)) as i64 % 5,
                            bits >> u & 1 == 1,
                        ));
                    }
                }
                SurveySet::new(msgs, rs).unwrap()
            })
    }

    proptest! {
        #[test]
        fn agreement_fractions_sum_to_one(s in arb_survey()) {
            let a = agreement_distribution(&s);
            if a.classified > 0 {
                let sum = a.unanimous + a.majority + a.maximal_disagreement;
                prop_assert!((sum - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn frequencies_sum_to_total(s in arb_survey()) {
            let f = category_frequencies(s.messages());
            prop_assert_eq!(f.counts.values().sum::<usize>() + f.non_codable, f.total);
            prop_assert_eq!(f.total, s.messages().len());
        }

        #[test]
        fn rates_are_fractions(s in arb_survey()) {
            for r in filter_rate_by_category(&s).values() {
                prop_assert!((0.0..=1.0).contains(r));
            }
            let hist = user_filter_histogram(&s);
            prop_assert_eq!(hist.values().sum::<usize>(), s.user_count());
        }

        #[test]
        fn report_is_bit_identical_on_rebuild(s in arb_survey()) {
            let a = serde_json::to_string(&CorpusReport::build(&s)).unwrap();
            let b = serde_json::to_string(&CorpusReport::build(&s.clone())).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

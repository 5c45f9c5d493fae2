//! Per-user live sessions: a queue of messages to rate, the accumulated
//! responses, and an agent retrained from scratch after every response.

use std::collections::{BTreeMap, HashSet};

use agentfilter_core::config::RunConfig;
use agentfilter_core::corpus::{Category, Intensity, SurveySet};
use agentfilter_core::filters::{user_seed, AnalyzedCorpus};
use agentfilter_core::learners::{fit, BinaryClassifier, ClassifierModel, TrainingSet};
use agentfilter_core::textfeat::{build_vocabulary, vectorize, FeatureMode, Vocabulary};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Immutable data shared by every session.
pub struct LiveContext {
    pub survey: SurveySet,
    pub corpus: AnalyzedCorpus,
    pub config: RunConfig,
    codable: Vec<usize>,
}

impl LiveContext {
    pub fn new(survey: SurveySet, config: RunConfig) -> Self {
        let corpus = AnalyzedCorpus::new(&survey, &config.features);
        let codable = survey
            .messages()
            .iter()
            .enumerate()
            .filter(|(_, m)| m.category().is_some())
            .map(|(i, _)| i)
            .collect();
        LiveContext {
            survey,
            corpus,
            config,
            codable,
        }
    }

    pub fn is_codable(&self, index: usize) -> bool {
        self.survey.messages()[index].category().is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    /// 1-based position of the response in the session.
    pub item_index: usize,
    pub message_id: String,
    /// The agent's guess, made before the response was seen.
    pub prediction: Option<bool>,
    pub intensity: Intensity,
    pub choice: bool,
    /// Agreement over all predicted items so far.
    pub running_agreement: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Submitted {
    pub accepted: bool,
    pub agent_prediction_was: Option<bool>,
    pub running_agreement: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentView {
    pub user_id: String,
    pub n_responses: usize,
    pub agreement_rate: Option<f64>,
    pub per_category_filter_rate: BTreeMap<Category, f64>,
    pub warmed_up: bool,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Duplicate;

struct Agent {
    vocabulary: Vocabulary,
    mode: FeatureMode,
    model: ClassifierModel,
}

struct Answer {
    message: usize,
    filter: bool,
}

pub struct Session {
    pub user_id: String,
    queue: Vec<usize>,
    history: Vec<Answer>,
    answered: HashSet<usize>,
    agent: Option<Agent>,
    trace: Vec<TraceEntry>,
    predicted: usize,
    hits: usize,
}

impl Session {
    /// Deals up to `items_per_user` codable messages in a per-user order.
    pub fn new(user_id: &str, ctx: &LiveContext) -> Self {
        let mut queue = ctx.codable.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(user_seed(ctx.config.seed, user_id));
        queue.shuffle(&mut rng);
        queue.truncate(ctx.config.synth.items_per_user);
        Session {
            user_id: user_id.to_string(),
            queue,
            history: Vec::new(),
            answered: HashSet::new(),
            agent: None,
            trace: Vec::new(),
            predicted: 0,
            hits: 0,
        }
    }

    pub fn next(&self) -> Option<usize> {
        self.queue.first().copied()
    }

    pub fn n_responses(&self) -> usize {
        self.history.len()
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }

    pub fn has_answered(&self, message: usize) -> bool {
        self.answered.contains(&message)
    }

    pub fn warmed_up(&self, ctx: &LiveContext) -> bool {
        self.history.len() >= ctx.config.serve.warmup
    }

    /// The agent's guess for a message; `None` during warm-up.
    pub fn predict(&self, ctx: &LiveContext, message: usize) -> Option<bool> {
        let agent = self.agent.as_ref()?;
        let v = vectorize(ctx.corpus.tokens(message), &agent.vocabulary, agent.mode);
        Some(agent.model.predict(&v))
    }

    pub fn submit(
        &mut self,
        ctx: &LiveContext,
        message: usize,
        intensity: Intensity,
        filter: bool,
    ) -> Result<Submitted, Duplicate> {
        if self.answered.contains(&message) {
            return Err(Duplicate);
        }
        let prediction = self.predict(ctx, message);
        if let Some(p) = prediction {
            self.predicted += 1;
            self.hits += (p == filter) as usize;
        }
        self.answered.insert(message);
        self.queue.retain(|&m| m != message);
        self.history.push(Answer { message, filter });
        let running_agreement = self.agreement();
        self.trace.push(TraceEntry {
            item_index: self.history.len(),
            message_id: ctx.survey.messages()[message].id.clone(),
            prediction,
            intensity,
            choice: filter,
            running_agreement,
        });
        self.retrain(ctx);
        Ok(Submitted {
            accepted: true,
            agent_prediction_was: prediction,
            running_agreement,
        })
    }

    fn agreement(&self) -> Option<f64> {
        (self.predicted > 0).then(|| self.hits as f64 / self.predicted as f64)
    }

    fn retrain(&mut self, ctx: &LiveContext) {
        if !self.warmed_up(ctx) {
            self.agent = None;
            return;
        }
        let cfg = &ctx.config;
        let docs: Vec<&[String]> = self
            .history
            .iter()
            .map(|a| ctx.corpus.tokens(a.message))
            .collect();
        let vocabulary = build_vocabulary(&docs, cfg.features.min_df);
        let mode = cfg.features.mode.unwrap_or(cfg.learner.default_features());
        let vectors = docs
            .iter()
            .map(|d| vectorize(d, &vocabulary, mode))
            .collect();
        let labels = self.history.iter().map(|a| a.filter).collect();
        let seed = user_seed(cfg.seed, &self.user_id);
        // history is nonempty once warmed up, so neither step can fail
        self.agent = TrainingSet::new(vectors, labels, vocabulary.len())
            .and_then(|set| fit(cfg.learner, &set, seed, &cfg.learners))
            .ok()
            .map(|model| Agent {
                vocabulary,
                mode,
                model,
            });
    }

    pub fn view(&self, ctx: &LiveContext) -> AgentView {
        let mut counts: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
        for a in &self.history {
            if let Some(c) = ctx.survey.messages()[a.message].category() {
                let e = counts.entry(c).or_default();
                e.0 += a.filter as usize;
                e.1 += 1;
            }
        }
        AgentView {
            user_id: self.user_id.clone(),
            n_responses: self.history.len(),
            agreement_rate: self.agreement(),
            per_category_filter_rate: counts
                .into_iter()
                .map(|(c, (f, t))| (c, f as f64 / t as f64))
                .collect(),
            warmed_up: self.warmed_up(ctx),
            trace: self.trace.clone(),
        }
    }
}

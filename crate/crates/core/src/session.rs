//! Review rounds over a trained run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fraglearn_chem::{lipinski_pass, properties, Molecule, PropertyVector};

use crate::config::RunConfig;
use crate::error::{CoreError, Result};
use crate::generator::{generate_batch, item_seed, rank_by, BatchRecord, BatchSidecar, GenerationConfig};
use crate::objective::{ObjectiveSpec, Scorer};
use crate::proxies::{PropertyProvider, ProxyProvider};
use crate::training::{metrics_csv, RunState, Trainer};
use crate::tuning::{
    approve_rules, process_feedback, simulated_chemist, ClarificationExchange, DistilledRule, FeedbackRecord, KnowledgeBase,
    LoopMode, Reason, Reasoner,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundStatus {
    Open,
    Closed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMolecule {
    pub rank: usize,
    pub smiles: String,
    pub properties: PropertyVector,
    pub qed: f64,
    pub sa: f64,
    pub lipinski: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub number: u32,
    pub status: RoundStatus,
    pub mode: LoopMode,
    pub generated: usize,
    pub distinct: usize,
    pub top: Vec<RankedMolecule>,
    pub feedback_ids: Vec<String>,
    pub spec_version_before: u32,
    pub spec_version_after: Option<u32>,
    pub clarifications: Vec<ClarificationExchange>,
    pub pending: Vec<DistilledRule>,
}

impl Round {
    /// Mean molecular weight over the first `n` ranked molecules.
    pub fn mean_mw(&self, n: usize) -> f64 {
        let top: Vec<&RankedMolecule> = self.top.iter().take(n).collect();
        if top.is_empty() {
            return 0.0;
        }
        top.iter().map(|m| m.properties.mol_weight).sum::<f64>() / top.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub round: u32,
    pub sufficient: bool,
    pub reasons: Vec<Reason>,
    pub questions: Vec<String>,
    pub clarification: Option<ClarificationExchange>,
    pub applied: Vec<DistilledRule>,
    pub pending: Vec<DistilledRule>,
    pub objective_version: u32,
    pub round_status: RoundStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub mode: LoopMode,
    pub epoch: u64,
    pub objective_version: u32,
    pub rounds: usize,
    pub open_round: Option<u32>,
    pub vocabulary: usize,
    pub table_entries: usize,
    pub state_digest: String,
}

/// One optimization campaign: run state, knowledge base and rounds.
pub struct Session {
    pub config: RunConfig,
    pub dataset: Vec<Molecule>,
    pub state: RunState,
    pub kb: KnowledgeBase,
    pub rounds: Vec<Round>,
    pub mode: LoopMode,
    provider: ProxyProvider,
    reasoner: Option<Box<dyn Reasoner>>,
    run_dir: Option<PathBuf>,
    /// Responses to mutating requests, by client request id.
    responses: BTreeMap<String, serde_json::Value>,
    clock: Box<dyn Fn() -> u64 + Send + Sync>,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    mode: LoopMode,
    rounds: Vec<Round>,
    responses: BTreeMap<String, serde_json::Value>,
}

fn unix_now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Session {
    pub fn new(config: RunConfig, dataset: Vec<Molecule>, state: RunState, mode: LoopMode) -> Self {
        let provider = ProxyProvider::with_reference(&dataset);
        let kb = KnowledgeBase::new(state.spec.clone());
        Session {
            config,
            dataset,
            state,
            kb,
            rounds: Vec::new(),
            mode,
            provider,
            reasoner: None,
            run_dir: None,
            responses: BTreeMap::new(),
            clock: Box::new(unix_now),
        }
    }

    pub fn with_reasoner(mut self, reasoner: Option<Box<dyn Reasoner>>) -> Self {
        self.reasoner = reasoner;
        self
    }

    /// Persist artifacts under `dir` after every change.
    pub fn with_run_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.run_dir = Some(dir.into());
        self
    }

    /// Timestamps for history entries (seconds).
    pub fn with_clock(mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn provider(&self) -> &dyn PropertyProvider {
        &self.provider
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.state.spec
    }

    pub fn run_dir(&self) -> Option<&Path> {
        self.run_dir.as_deref()
    }

    pub fn open_round(&self) -> Option<&Round> {
        self.rounds.iter().find(|r| r.status == RoundStatus::Open)
    }

    pub fn round(&self, n: u32) -> Result<&Round> {
        self.rounds.iter().find(|r| r.number == n).ok_or(CoreError::UnknownRound(n))
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            mode: self.mode,
            epoch: self.state.epoch,
            objective_version: self.state.spec.version,
            rounds: self.rounds.len(),
            open_round: self.open_round().map(|r| r.number),
            vocabulary: self.state.vocabulary.len(),
            table_entries: self.state.qtable.len(),
            state_digest: self.state.digest(),
        }
    }

    pub fn train(&mut self, epochs: usize) -> Result<()> {
        let trainer = Trainer { config: &self.config, dataset: &self.dataset, provider: &self.provider };
        trainer.train(&mut self.state, epochs)?;
        self.save()
    }

    fn replay(&self, request_id: Option<&str>) -> Option<serde_json::Value> {
        request_id.and_then(|id| self.responses.get(id).cloned())
    }

    fn remember<T: Serialize>(&mut self, request_id: Option<&str>, value: &T) {
        if let Some(id) = request_id {
            self.responses.insert(id.to_string(), serde_json::to_value(value).expect("response serializes"));
        }
    }

    /// Opens the next round: trains between rounds, generates, ranks and
    /// stores the top molecules. In agent-agent mode the simulated reviewer
    /// answers immediately and the round closes.
    pub fn start_round(&mut self, request_id: Option<&str>) -> Result<Round> {
        if let Some(v) = self.replay(request_id) {
            return serde_json::from_value(v).map_err(|e| CoreError::Config(e.to_string()));
        }
        if let Some(open) = self.open_round() {
            return Err(CoreError::RoundAlreadyOpen(open.number));
        }
        let number = self.rounds.len() as u32 + 1;
        let epochs = if self.state.epoch == 0 {
            self.config.epochs
        } else if number > 1 {
            self.config.round.epochs_per_round
        } else {
            0
        };
        let trainer = Trainer { config: &self.config, dataset: &self.dataset, provider: &self.provider };
        trainer.train(&mut self.state, epochs)?;
        let round = self.generate_round(number)?;
        self.rounds.push(round);
        if self.mode == LoopMode::AgentAgent {
            self.autonomous_review(number)?;
        }
        let round = self.round(number)?.clone();
        self.remember(request_id, &round);
        self.save()?;
        Ok(round)
    }

    fn generate_round(&mut self, number: u32) -> Result<Round> {
        let vocab = self.state.active_fragments()?;
        let cfg = GenerationConfig {
            batch_size: self.config.round.generate,
            rng_seed: item_seed(self.state.seed ^ 0x5eed_0f20_u64, number as u64),
            ..self.config.generation
        };
        let batch = generate_batch(&self.state.qtable, &vocab, &cfg)?;
        let mut seen = BTreeSet::new();
        let distinct: Vec<_> = batch.iter().filter(|g| seen.insert(g.smiles.clone())).cloned().collect();
        let scorer = Scorer::new(&self.state.spec, &self.provider)?;
        let top_n = self.config.round.top_n.min(distinct.len());
        let ranked = rank_by(&distinct, top_n, |m| scorer.score(m));
        let top: Vec<RankedMolecule> = ranked
            .iter()
            .enumerate()
            .map(|(i, (g, score))| {
                let p = properties(&g.molecule);
                RankedMolecule {
                    rank: i + 1,
                    smiles: g.smiles.clone(),
                    properties: p,
                    qed: self.provider.qed(&g.molecule),
                    sa: self.provider.sa(&g.molecule),
                    lipinski: lipinski_pass(&p),
                    score: *score,
                }
            })
            .collect();
        if let Some(dir) = &self.run_dir {
            let rdir = dir.join("rounds").join(number.to_string());
            std::fs::create_dir_all(&rdir).map_err(|e| CoreError::io(&rdir, e))?;
            let smiles: Vec<&str> = batch.iter().map(|g| g.smiles.as_str()).collect();
            fraglearn_chem::io::write_smiles_file(&rdir.join("batch.smi"), &smiles)?;
            let sidecar = BatchSidecar {
                seed: cfg.rng_seed,
                strategy: cfg.strategy,
                molecules: ranked.iter().map(|(g, s)| BatchRecord { score: Some(*s), ..BatchRecord::from(g) }).collect(),
            };
            write_json(&rdir.join("batch.json"), &sidecar)?;
            write_json(&rdir.join("top.json"), &top)?;
        }
        Ok(Round {
            number,
            status: RoundStatus::Open,
            mode: self.mode,
            generated: batch.len(),
            distinct: distinct.len(),
            top,
            feedback_ids: Vec::new(),
            spec_version_before: self.state.spec.version,
            spec_version_after: None,
            clarifications: Vec::new(),
            pending: Vec::new(),
        })
    }

    fn autonomous_review(&mut self, number: u32) -> Result<()> {
        let round = self.round(number)?;
        let reviewed: Vec<Molecule> = round
            .top
            .iter()
            .take(self.config.round.review_top)
            .map(|m| fraglearn_chem::parse_smiles(&m.smiles))
            .collect::<std::result::Result<_, _>>()?;
        let record = simulated_chemist(&reviewed, &self.state.spec, &self.kb, &self.config.tuning.chemist, &self.provider, number);
        let response = self.submit_feedback(number, record, None)?;
        if response.round_status == RoundStatus::Open {
            self.skip_round(number)?;
        }
        Ok(())
    }

    /// Runs feedback for an open round through the tuning pipeline. The round
    /// closes once the feedback is sufficient.
    pub fn submit_feedback(&mut self, number: u32, mut record: FeedbackRecord, request_id: Option<&str>) -> Result<FeedbackResponse> {
        if let Some(v) = self.replay(request_id) {
            return serde_json::from_value(v).map_err(|e| CoreError::Config(e.to_string()));
        }
        let round = self.round(number)?;
        if round.status != RoundStatus::Open {
            return Err(CoreError::RoundClosed(number));
        }
        record.round = number;
        let history = round.clarifications.clone();
        let timestamp = (self.clock)();
        let outcome = process_feedback(
            &record,
            &self.state.spec,
            &mut self.kb,
            &history,
            self.reasoner.as_deref(),
            self.mode,
            &self.config.tuning,
            timestamp,
        )?;
        self.state.spec = outcome.spec.clone();
        let idx = self.rounds.iter().position(|r| r.number == number).expect("round exists");
        let round = &mut self.rounds[idx];
        round.feedback_ids.push(record.id.clone());
        if let Some(c) = &outcome.clarification {
            round.clarifications.push(c.clone());
        }
        if outcome.sufficient {
            for c in &mut round.clarifications {
                c.resolved = true;
            }
            round.status = RoundStatus::Closed;
            round.spec_version_after = Some(outcome.spec.version);
            round.pending.extend(outcome.pending.iter().cloned());
        }
        let response = FeedbackResponse {
            round: number,
            sufficient: outcome.sufficient,
            reasons: outcome.reasons,
            questions: outcome.clarification.as_ref().map(|c| c.questions.clone()).unwrap_or_default(),
            clarification: outcome.clarification,
            applied: outcome.applied,
            pending: outcome.pending,
            objective_version: self.state.spec.version,
            round_status: round.status,
        };
        self.remember(request_id, &response);
        self.save()?;
        Ok(response)
    }

    /// Applies rules held back for approval in a closed round.
    pub fn approve_pending(&mut self, number: u32) -> Result<ObjectiveSpec> {
        let idx = self.rounds.iter().position(|r| r.number == number).ok_or(CoreError::UnknownRound(number))?;
        let pending = std::mem::take(&mut self.rounds[idx].pending);
        let source = format!("approval-{number}");
        let timestamp = (self.clock)();
        self.state.spec = approve_rules(&pending, &source, number, &self.state.spec, &mut self.kb, &self.config.tuning, timestamp)?;
        self.rounds[idx].spec_version_after = Some(self.state.spec.version);
        self.save()?;
        Ok(self.state.spec.clone())
    }

    pub fn skip_round(&mut self, number: u32) -> Result<()> {
        let spec_version = self.state.spec.version;
        let round = self.rounds.iter_mut().find(|r| r.number == number).ok_or(CoreError::UnknownRound(number))?;
        if round.status != RoundStatus::Open {
            return Err(CoreError::RoundClosed(number));
        }
        round.status = RoundStatus::Skipped;
        round.spec_version_after = Some(spec_version);
        self.save()
    }

    /// Writes every artifact to the run directory, if one is set.
    pub fn save(&self) -> Result<()> {
        let Some(dir) = &self.run_dir else { return Ok(()) };
        std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
        let cfg_path = dir.join("config.toml");
        std::fs::write(&cfg_path, self.config.to_toml()).map_err(|e| CoreError::io(&cfg_path, e))?;
        self.state.persist(&dir.join("state.json"))?;
        self.state.qtable.persist(&dir.join("qtable.json"))?;
        self.kb.persist(&dir.join("kb.json"))?;
        let metrics = dir.join("metrics.csv");
        std::fs::write(&metrics, metrics_csv(&self.state.history)).map_err(|e| CoreError::io(&metrics, e))?;
        let file = SessionFile { mode: self.mode, rounds: self.rounds.clone(), responses: self.responses.clone() };
        write_json(&dir.join("session.json"), &file)
    }

    /// Reopens a session saved by [`Session::save`].
    pub fn load(dir: &Path, dataset: Vec<Molecule>) -> Result<Self> {
        let config = RunConfig::load(&dir.join("config.toml"))?;
        let state = RunState::restore(&dir.join("state.json"))?;
        let kb = KnowledgeBase::restore(&dir.join("kb.json"))?;
        let path = dir.join("session.json");
        let text = std::fs::read_to_string(&path).map_err(|e| CoreError::io(&path, e))?;
        let file: SessionFile = serde_json::from_str(&text).map_err(|e| CoreError::format(&path, e))?;
        let mut s = Session::new(config, dataset, state, file.mode).with_run_dir(dir);
        s.kb = kb;
        s.rounds = file.rounds;
        s.responses = file.responses;
        Ok(s)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text).map_err(|e| CoreError::io(path, e))
}

//! Game engines, strategies and referees.
//!
//! Four games share one move loop: in each round Player I picks a side and
//! an element there, and Player II answers on the other side. The referee
//! replays the move list to decide the game, so a transcript can always be
//! re-adjudicated from its moves alone.

mod gram;
mod literal;
mod referee;
mod strategy;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{make_algebra, AlgebraElement, AlgebraError, ElementRecord, TracialAlgebra};
use crate::banach::{BanachError, IsometryReport, Variant};
use crate::eval::EvalError;
use crate::formula::FormulaError;
use crate::rng::child_rng;

pub use gram::{
    embed, find_embedding, gram_bridge, gram_deviation, gram_match_respond, gram_matrix, gram_norms, solve_representation, BridgeCheck,
    GramBudget, GramMatch, Representation, RepresentationMethod,
};
pub use literal::parse_element;
pub use referee::{readjudicate, Adjudication};
pub use strategy::{make_strategy, Built, Proposal, Strategy};

pub const REFEREE_VERSION: &str = "eflab-referee/1";
pub const TRANSCRIPT_SCHEMA: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Banach(#[from] BanachError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy `{strategy}` is not available in the {kind} game")]
    Unsupported { strategy: String, kind: GameKind },
    #[error("strategy `{strategy}` cannot play as {player}")]
    Role { strategy: String, player: Player },
    #[error("bad element literal: {0}")]
    BadLiteral(String),
    #[error("script: {0}")]
    Script(String),
    #[error("input unitary {0} is linearly dependent on the earlier ones")]
    DependentInput(usize),
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    Atomic,
    Banach,
    UnitaryGram,
    Representability,
}

impl GameKind {
    /// Whether moves must be unitaries.
    pub fn unitary_moves(self) -> bool {
        matches!(self, GameKind::UnitaryGram | GameKind::Representability)
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameKind::Atomic => "atomic",
            GameKind::Banach => "banach",
            GameKind::UnitaryGram => "unitary-gram",
            GameKind::Representability => "representability",
        })
    }
}

impl std::str::FromStr for GameKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, GameError> {
        match s {
            "atomic" => Ok(GameKind::Atomic),
            "banach" => Ok(GameKind::Banach),
            "unitary-gram" | "unitary" | "vn" => Ok(GameKind::UnitaryGram),
            "representability" => Ok(GameKind::Representability),
            _ => Err(GameError::InvalidConfig(format!("unknown game kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    M,
    N,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::M => Side::N,
            Side::N => Side::M,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::M => "M",
            Side::N => "N",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    #[serde(rename = "player1")]
    One,
    #[serde(rename = "player2")]
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::One => "Player I",
            Player::Two => "Player II",
        })
    }
}

fn default_player1() -> String {
    "haar".into()
}

fn default_player2() -> String {
    "copy".into()
}

fn default_resolution() -> f64 {
    0.25
}

fn default_variant() -> Variant {
    Variant::Definition
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub kind: GameKind,
    pub rounds: usize,
    pub epsilon: f64,
    /// Algebra specs of the two models.
    pub m: String,
    pub n: String,
    /// Quantifier-free formulas (atomic game only). Their free variables,
    /// in natural order, are assigned one per round.
    #[serde(default)]
    pub formulas: Vec<String>,
    pub seed: u64,
    #[serde(default = "default_player1")]
    pub player1: String,
    #[serde(default = "default_player2")]
    pub player2: String,
    /// Almost-isometry variant and direction resolution (banach game only).
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_resolution")]
    pub net_resolution: f64,
}

impl GameConfig {
    pub fn new(kind: GameKind, rounds: usize, epsilon: f64, m: &str, n: &str, seed: u64) -> Self {
        Self {
            kind,
            rounds,
            epsilon,
            m: m.to_string(),
            n: n.to_string(),
            formulas: Vec::new(),
            seed,
            player1: default_player1(),
            player2: if kind == GameKind::Representability { "solver".into() } else { default_player2() },
            variant: default_variant(),
            net_resolution: default_resolution(),
        }
    }

    pub fn players(mut self, p1: &str, p2: &str) -> Self {
        self.player1 = p1.to_string();
        self.player2 = p2.to_string();
        self
    }

    pub fn formulas(mut self, fs: &[&str]) -> Self {
        self.formulas = fs.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.rounds == 0 {
            return Err(GameError::InvalidConfig("at least one round is needed".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(GameError::InvalidConfig(format!("epsilon must be positive (got {})", self.epsilon)));
        }
        if self.kind == GameKind::Banach && !(self.net_resolution > 0.0) {
            return Err(GameError::InvalidConfig("net_resolution must be positive".into()));
        }
        if self.kind != GameKind::Atomic && !self.formulas.is_empty() {
            return Err(GameError::InvalidConfig("formulas are only used by the atomic game".into()));
        }
        Ok(())
    }

    pub fn algebras(&self) -> Result<(Arc<TracialAlgebra>, Arc<TracialAlgebra>), GameError> {
        Ok((Arc::new(make_algebra(&self.m)?), Arc::new(make_algebra(&self.n)?)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum Action {
    Element { element: ElementRecord },
    Stall,
    Forfeit { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub round: usize,
    pub player: Player,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(flatten)]
    pub action: Action,
}

/// One winning condition: Player II needs `value ≤ bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
}

impl Margin {
    pub fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            slack: bound - value,
        }
    }

    pub fn satisfied(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameVerdict {
    pub winner: Player,
    pub forfeit: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramPair {
    pub m: Vec<Vec<(f64, f64)>>,
    pub n: Vec<Vec<(f64, f64)>>,
}

/// The final `T_n: E_n → F_n` of a banach game, in orthonormal bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalMap {
    pub dim: usize,
    pub matrix: Vec<Vec<(f64, f64)>>,
    pub report: Option<IsometryReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub schema_version: u32,
    pub referee_version: String,
    pub config: GameConfig,
    pub moves: Vec<Move>,
    pub margins: Vec<Margin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<GramPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_map: Option<FinalMap>,
    pub verdict: GameVerdict,
}

impl GameTranscript {
    /// The `(M, N)` element pairs of completed rounds, in order.
    pub fn pairs(&self) -> Result<Vec<RoundPair>, GameError> {
        referee::replay_pairs(&self.config, &self.moves)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GameError> {
        serde_json::from_str(s).map_err(|e| GameError::MalformedTranscript(e.to_string()))
    }
}

/// A completed round: the elements on each side and the side Player I
/// chose.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundPair {
    pub side: Side,
    pub m: AlgebraElement,
    pub n: AlgebraElement,
}

/// What a strategy sees.
#[derive(Clone, Debug)]
pub struct PlayState {
    pub kind: GameKind,
    pub m: Arc<TracialAlgebra>,
    pub n: Arc<TracialAlgebra>,
    pub epsilon: f64,
    pub rounds: usize,
    /// 1-based index of the current round.
    pub round: usize,
    pub pairs: Vec<RoundPair>,
}

impl PlayState {
    pub fn algebra(&self, side: Side) -> &Arc<TracialAlgebra> {
        match side {
            Side::M => &self.m,
            Side::N => &self.n,
        }
    }

    /// Elements played so far on `side`.
    pub fn elements(&self, side: Side) -> Vec<AlgebraElement> {
        self.pairs
            .iter()
            .map(|p| match side {
                Side::M => p.m.clone(),
                Side::N => p.n.clone(),
            })
            .collect()
    }
}

fn element_move(round: usize, player: Player, side: Side, x: &AlgebraElement) -> Move {
    Move {
        round,
        player,
        side: Some(side),
        action: Action::Element { element: x.to_record() },
    }
}

fn forfeit_move(round: usize, player: Player, reason: String) -> Move {
    Move {
        round,
        player,
        side: None,
        action: Action::Forfeit { reason },
    }
}

/// Plays a game of any kind and returns the signed transcript.
pub fn play(cfg: &GameConfig) -> Result<GameTranscript, GameError> {
    cfg.validate()?;
    let (m, n) = cfg.algebras()?;
    let mut p1 = make_strategy(&cfg.player1, Player::One, cfg.kind)?;
    let mut p2 = make_strategy(&cfg.player2, Player::Two, cfg.kind)?;
    let mut referee = referee::Referee::new(cfg)?;
    let mut state = PlayState {
        kind: cfg.kind,
        m,
        n,
        epsilon: cfg.epsilon,
        rounds: cfg.rounds,
        round: 0,
        pairs: Vec::new(),
    };
    let mut moves = Vec::new();
    let record = |mv: Move, referee: &mut referee::Referee, moves: &mut Vec<Move>| -> Result<referee::Step, GameError> {
        let step = referee.accept(&mv)?;
        moves.push(mv);
        Ok(step)
    };

    if cfg.kind == GameKind::Representability {
        // Player I lays out all unitaries; Player II answers afterwards.
        let mut us = Vec::new();
        for round in 1..=cfg.rounds {
            state.round = round;
            let mv = match p1.strategy.propose(&state, &mut child_rng(cfg.seed, &[round as u64, 1])) {
                Ok(Proposal::Element(side, x)) => {
                    us.push(x.clone());
                    element_move(round, Player::One, side, &x)
                }
                Ok(Proposal::Stall) => Move {
                    round,
                    player: Player::One,
                    side: None,
                    action: Action::Stall,
                },
                Err(e) => forfeit_move(round, Player::One, e.to_string()),
            };
            if record(mv, &mut referee, &mut moves)? == referee::Step::Forfeit {
                return finish(cfg, moves, referee);
            }
        }
        if let Some(budget) = p2.solver {
            match solve_representation(&us, &state.n, budget, child_rng_seed(cfg.seed, &[0, 2])) {
                Representation::Found { vs, .. } => {
                    for (i, v) in vs.iter().enumerate() {
                        record(element_move(i + 1, Player::Two, Side::N, v), &mut referee, &mut moves)?;
                    }
                }
                Representation::DimensionCount { n, dim } => {
                    let reason = format!("dimension count: {n} unitaries exceed dim {dim} of the target");
                    record(forfeit_move(1, Player::Two, reason), &mut referee, &mut moves)?;
                }
            }
        } else {
            for (i, u) in us.iter().enumerate() {
                state.round = i + 1;
                let mut rng = child_rng(cfg.seed, &[(i + 1) as u64, 2]);
                let mv = match p2.strategy.respond(&state, Side::M, u, &mut rng) {
                    Ok(v) => {
                        state.pairs.push(RoundPair {
                            side: Side::M,
                            m: u.clone(),
                            n: v.clone(),
                        });
                        element_move(i + 1, Player::Two, Side::N, &v)
                    }
                    Err(e) => forfeit_move(i + 1, Player::Two, e.to_string()),
                };
                if record(mv, &mut referee, &mut moves)? == referee::Step::Forfeit {
                    break;
                }
            }
        }
        return finish(cfg, moves, referee);
    }

    for round in 1..=cfg.rounds {
        state.round = round;
        let mv = match p1.strategy.propose(&state, &mut child_rng(cfg.seed, &[round as u64, 1])) {
            Ok(Proposal::Element(side, x)) => element_move(round, Player::One, side, &x),
            Ok(Proposal::Stall) => Move {
                round,
                player: Player::One,
                side: None,
                action: Action::Stall,
            },
            Err(e) => forfeit_move(round, Player::One, e.to_string()),
        };
        let incoming = match (&mv.side, &mv.action) {
            (Some(side), Action::Element { element }) => Some((*side, AlgebraElement::from_record(state.algebra(*side), element)?)),
            _ => None,
        };
        match record(mv, &mut referee, &mut moves)? {
            referee::Step::Forfeit => break,
            referee::Step::Stalled => continue,
            _ => {}
        }
        let (side, x) = incoming.expect("an accepted element move");
        let mut rng = child_rng(cfg.seed, &[round as u64, 2]);
        let reply = match p2.strategy.respond(&state, side, &x, &mut rng) {
            Ok(y) => element_move(round, Player::Two, side.other(), &y),
            Err(e) => forfeit_move(round, Player::Two, e.to_string()),
        };
        let y = match &reply.action {
            Action::Element { element } => Some(AlgebraElement::from_record(state.algebra(side.other()), element)?),
            _ => None,
        };
        if record(reply, &mut referee, &mut moves)? == referee::Step::Forfeit {
            break;
        }
        let y = y.expect("an accepted reply");
        let (pm, pn) = match side {
            Side::M => (x, y),
            Side::N => (y, x),
        };
        state.pairs.push(RoundPair { side, m: pm, n: pn });
    }
    finish(cfg, moves, referee)
}

fn child_rng_seed(seed: u64, path: &[u64]) -> u64 {
    crate::rng::derive_seed(seed, path)
}

fn finish(cfg: &GameConfig, moves: Vec<Move>, referee: referee::Referee) -> Result<GameTranscript, GameError> {
    let adj = referee.finish()?;
    Ok(GameTranscript {
        schema_version: TRANSCRIPT_SCHEMA,
        referee_version: REFEREE_VERSION.to_string(),
        config: cfg.clone(),
        moves,
        margins: adj.margins,
        gram: adj.gram,
        final_map: adj.final_map,
        verdict: adj.verdict,
    })
}

fn expect_kind(cfg: &GameConfig, kind: GameKind) -> Result<(), GameError> {
    if cfg.kind != kind {
        return Err(GameError::InvalidConfig(format!("expected a {kind} game, got {}", cfg.kind)));
    }
    Ok(())
}

/// `𝔊(φ₁,…,φ_k, ε)`: Player II wins iff `|φ_i(ā)^M − φ_i(b̄)^N| ≤ ε` for all `i`.
pub fn play_atomic_game(cfg: &GameConfig) -> Result<GameTranscript, GameError> {
    expect_kind(cfg, GameKind::Atomic)?;
    play(cfg)
}

/// `𝔊(n, ε)`: Player I extends a subspace by at most one dimension per
/// round, Player II names the image vector, and the final map must be an
/// `ε`-almost isometry.
pub fn play_banach_game(cfg: &GameConfig) -> Result<GameTranscript, GameError> {
    expect_kind(cfg, GameKind::Banach)?;
    play(cfg)
}

/// `𝔊_vN(n, ε)`: Player II wins iff the Gram matrices of the played
/// unitaries agree entrywise to within `ε`.
pub fn play_unitary_game(cfg: &GameConfig) -> Result<GameTranscript, GameError> {
    expect_kind(cfg, GameKind::UnitaryGram)?;
    play(cfg)
}

/// `𝔊_ℛ(n, ε)` with a matrix algebra standing in for `ℛ`: Player I names
/// `n` unitaries of `M`, Player II names unitaries of `N`, and wins iff
/// `‖T‖, ‖T⁻¹‖ ≤ 1 + ε` for `T: u_i ↦ v_i`.
pub fn play_representability_game(cfg: &GameConfig) -> Result<GameTranscript, GameError> {
    expect_kind(cfg, GameKind::Representability)?;
    play(cfg)
}

#[cfg(test)]
mod tests;

use std::collections::VecDeque;
use std::sync::Arc;

use super::gram::{gram_deviation, gram_matrix, gram_norms, gram_to_rows};
use super::{
    Action, FinalMap, GameConfig, GameError, GameKind, GameTranscript, GameVerdict, GramPair, Margin, Move, Player, RoundPair, Side, REFEREE_VERSION,
    TRANSCRIPT_SCHEMA,
};
use crate::algebra::{AlgebraElement, TracialAlgebra};
use crate::banach::{check_almost_isometry, IsometryConfig, Subspace, SubspaceMap};
use crate::eval::{eval_qf, Assignment, SORT_TOL, UNITARY_TOL};
use crate::formula::{parse_formula, Formula};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Step {
    AwaitReply,
    Stalled,
    Paired,
    Forfeit,
}

/// Result of refereeing a complete move list.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjudication {
    pub margins: Vec<Margin>,
    pub gram: Option<GramPair>,
    pub final_map: Option<FinalMap>,
    pub verdict: GameVerdict,
}

fn natural_key(name: &str) -> (String, u64, String) {
    let digits = name.len() - name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (stem, num) = name.split_at(name.len() - digits);
    (stem.to_string(), num.parse().unwrap_or(0), name.to_string())
}

pub(crate) struct Referee {
    cfg: GameConfig,
    m: Arc<TracialAlgebra>,
    n: Arc<TracialAlgebra>,
    formulas: Vec<(String, Formula)>,
    vars: Vec<String>,
    pending: VecDeque<(usize, Side, AlgebraElement)>,
    pairs: Vec<RoundPair>,
    span_m: Subspace,
    span_n: Subspace,
    p1_rounds: usize,
    rounds_done: usize,
    forfeit: Option<(Player, String)>,
}

impl Referee {
    pub(crate) fn new(cfg: &GameConfig) -> Result<Self, GameError> {
        cfg.validate()?;
        let (m, n) = cfg.algebras()?;
        let mut formulas = Vec::new();
        let mut vars = Vec::new();
        if cfg.kind == GameKind::Atomic {
            if cfg.formulas.is_empty() {
                return Err(GameError::InvalidConfig("the atomic game needs at least one formula".into()));
            }
            let mut names = std::collections::BTreeSet::new();
            for text in &cfg.formulas {
                let f = parse_formula(text)?;
                if !f.is_quantifier_free() {
                    return Err(GameError::InvalidConfig(format!("formula `{text}` is not quantifier-free")));
                }
                names.extend(f.free_vars());
                formulas.push((text.clone(), f));
            }
            vars = names.into_iter().collect();
            vars.sort_by_key(|v| natural_key(v));
            if vars.len() != cfg.rounds {
                return Err(GameError::InvalidConfig(format!(
                    "{} rounds but the formulas have {} free variables",
                    cfg.rounds,
                    vars.len()
                )));
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            span_m: Subspace::zero(&m),
            span_n: Subspace::zero(&n),
            m,
            n,
            formulas,
            vars,
            pending: VecDeque::new(),
            pairs: Vec::new(),
            p1_rounds: 0,
            rounds_done: 0,
            forfeit: None,
        })
    }

    fn algebra(&self, side: Side) -> &Arc<TracialAlgebra> {
        match side {
            Side::M => &self.m,
            Side::N => &self.n,
        }
    }

    fn span(&self, side: Side) -> &Subspace {
        match side {
            Side::M => &self.span_m,
            Side::N => &self.span_n,
        }
    }

    fn lose(&mut self, player: Player, reason: String) -> Result<Step, GameError> {
        self.forfeit = Some((player, reason));
        Ok(Step::Forfeit)
    }

    /// Reason why `x` is not a legal move, if any.
    fn illegal(&self, x: &AlgebraElement) -> Option<String> {
        match self.cfg.kind {
            k if k.unitary_moves() => {
                let d = x.unitary_defect();
                (d > UNITARY_TOL).then(|| format!("move is not unitary (defect {d:e})"))
            }
            GameKind::Atomic => {
                let op = x.op_norm();
                (op > 1.0 + SORT_TOL).then(|| format!("move violates sort C1 (operator norm {op})"))
            }
            _ => None,
        }
    }

    pub(crate) fn accept(&mut self, mv: &Move) -> Result<Step, GameError> {
        let malformed = |msg: String| Err(GameError::MalformedTranscript(format!("round {}: {msg}", mv.round)));
        if self.forfeit.is_some() {
            return malformed("move after a forfeit".into());
        }
        let repr = self.cfg.kind == GameKind::Representability;
        match &mv.action {
            Action::Forfeit { reason } => self.lose(mv.player, reason.clone()),
            Action::Stall => {
                if mv.player != Player::One || mv.round != self.p1_rounds + 1 || (!repr && !self.pending.is_empty()) {
                    return malformed("stall out of turn".into());
                }
                if self.cfg.kind != GameKind::Banach {
                    return self.lose(Player::One, "stalling is only legal in the banach game".into());
                }
                self.p1_rounds += 1;
                self.rounds_done += 1;
                Ok(Step::Stalled)
            }
            Action::Element { element } => {
                let Some(side) = mv.side else {
                    return malformed("element move without a side".into());
                };
                let x = match AlgebraElement::from_record(self.algebra(side), element) {
                    Ok(x) => x,
                    Err(e) => return self.lose(mv.player, format!("malformed element: {e}")),
                };
                if mv.player == Player::One {
                    if mv.round != self.p1_rounds + 1 || (!repr && !self.pending.is_empty()) {
                        return malformed("Player I moved out of turn".into());
                    }
                    self.p1_rounds += 1;
                    if let Some(reason) = self.illegal(&x) {
                        return self.lose(Player::One, reason);
                    }
                    if repr && side != Side::M {
                        return self.lose(Player::One, "unitaries must be named in M".into());
                    }
                    if self.cfg.kind == GameKind::Banach && self.span(side).contains(&x)? {
                        // Zero-dimensional extension: T_i = T_{i-1}.
                        self.rounds_done += 1;
                        return Ok(Step::Stalled);
                    }
                    if repr {
                        self.span_m = self.span_m.extend(&x).map_err(|_| GameError::DependentInput(mv.round))?;
                    }
                    self.pending.push_back((mv.round, side, x));
                    return Ok(Step::AwaitReply);
                }
                let Some((round, p1_side, p1_x)) = self.pending.pop_front() else {
                    return malformed("Player II moved before Player I".into());
                };
                if round != mv.round || side != p1_side.other() {
                    return malformed("Player II's reply does not match Player I's move".into());
                }
                if let Some(reason) = self.illegal(&x) {
                    return self.lose(Player::Two, reason);
                }
                if self.cfg.kind == GameKind::Banach {
                    let grown = match self.span(side).extend(&x) {
                        Ok(s) => s,
                        Err(_) => {
                            return self.lose(
                                Player::Two,
                                format!(
                                    "Player II's map fails to extend T_{}: the reply lies in the span of earlier replies",
                                    round - 1
                                ),
                            )
                        }
                    };
                    let other = self.span(p1_side).extend(&p1_x)?;
                    match side {
                        Side::M => (self.span_m, self.span_n) = (grown, other),
                        Side::N => (self.span_n, self.span_m) = (grown, other),
                    }
                }
                let (m, n) = match p1_side {
                    Side::M => (p1_x, x),
                    Side::N => (x, p1_x),
                };
                self.pairs.push(RoundPair { side: p1_side, m, n });
                self.rounds_done += 1;
                Ok(Step::Paired)
            }
        }
    }

    pub(crate) fn finish(self) -> Result<Adjudication, GameError> {
        if let Some((player, reason)) = self.forfeit {
            return Ok(Adjudication {
                margins: Vec::new(),
                gram: None,
                final_map: None,
                verdict: GameVerdict {
                    winner: player.other(),
                    forfeit: true,
                    reason: format!("{player} forfeits: {reason}"),
                },
            });
        }
        if self.rounds_done != self.cfg.rounds || !self.pending.is_empty() {
            return Err(GameError::MalformedTranscript(format!(
                "{} of {} rounds completed",
                self.rounds_done, self.cfg.rounds
            )));
        }
        let eps = self.cfg.epsilon;
        let ms: Vec<AlgebraElement> = self.pairs.iter().map(|p| p.m.clone()).collect();
        let ns: Vec<AlgebraElement> = self.pairs.iter().map(|p| p.n.clone()).collect();
        let mut gram = None;
        let mut final_map = None;
        let mut authority = None;
        let margins = match self.cfg.kind {
            GameKind::Atomic => {
                let mut am = Assignment::new();
                let mut an = Assignment::new();
                for (v, p) in self.vars.iter().zip(&self.pairs) {
                    am.bind_unchecked(v, p.m.clone());
                    an.bind_unchecked(v, p.n.clone());
                }
                let mut out = Vec::new();
                for (text, f) in &self.formulas {
                    let a = eval_qf(f, &am, &self.m, false)?;
                    let b = eval_qf(f, &an, &self.n, false)?;
                    out.push(Margin::new(format!("|({text})^M - ({text})^N|"), (a - b).abs(), eps));
                }
                out
            }
            GameKind::UnitaryGram => {
                let gu = gram_matrix(&ms);
                let gv = gram_matrix(&ns);
                let dev = gram_deviation(&gu, &gv);
                gram = Some(GramPair {
                    m: gram_to_rows(&gu),
                    n: gram_to_rows(&gv),
                });
                vec![Margin::new("gram_deviation", dev, eps)]
            }
            GameKind::Representability => {
                let gu = gram_matrix(&ms);
                let gv = gram_matrix(&ns);
                let (t, tinv) = gram_norms(&gu, &gv).unwrap_or((f64::INFINITY, f64::INFINITY));
                gram = Some(GramPair {
                    m: gram_to_rows(&gu),
                    n: gram_to_rows(&gv),
                });
                vec![Margin::new("norm_T", t, 1.0 + eps), Margin::new("norm_Tinv", tinv, 1.0 + eps)]
            }
            GameKind::Banach => {
                if ms.is_empty() {
                    final_map = Some(FinalMap {
                        dim: 0,
                        matrix: Vec::new(),
                        report: None,
                    });
                    Vec::new()
                } else {
                    let t = SubspaceMap::from_pairs(&ms, &ns)?;
                    let icfg = IsometryConfig {
                        seed: self.cfg.seed,
                        ..IsometryConfig::quick()
                    };
                    let report = check_almost_isometry(&t, eps, self.cfg.net_resolution, self.cfg.variant, &icfg)?;
                    authority = Some(report.verdict.passed());
                    final_map = Some(FinalMap {
                        dim: t.dim(),
                        matrix: gram_to_rows(t.matrix()),
                        report: Some(report.clone()),
                    });
                    vec![
                        Margin::new("norm_T", report.norm_t, 1.0 + eps),
                        Margin::new("norm_Tinv", report.norm_tinv, 1.0 + eps),
                        Margin::new("fwd_defect", report.fwd_defect, eps),
                        Margin::new("bwd_defect", report.bwd_defect, eps),
                    ]
                }
            }
        };
        let failing = margins.iter().find(|m| !m.satisfied());
        let ii_wins = authority.unwrap_or(failing.is_none());
        let reason = match (ii_wins, failing) {
            (true, _) if margins.is_empty() => "no conditions to check".to_string(),
            (true, _) => "all conditions hold".to_string(),
            (false, Some(m)) => format!("{} = {} exceeds {}", m.name, m.value, m.bound),
            (false, None) => format!("{} almost-isometry check fails", self.cfg.variant),
        };
        Ok(Adjudication {
            margins,
            gram,
            final_map,
            verdict: GameVerdict {
                winner: if ii_wins { Player::Two } else { Player::One },
                forfeit: false,
                reason,
            },
        })
    }
}

/// Replays a transcript's moves through a fresh referee, optionally at a
/// different `ε`, and returns the re-signed transcript.
pub fn readjudicate(t: &GameTranscript, epsilon: Option<f64>) -> Result<GameTranscript, GameError> {
    let mut cfg = t.config.clone();
    if let Some(e) = epsilon {
        cfg.epsilon = e;
    }
    let mut referee = Referee::new(&cfg)?;
    for mv in &t.moves {
        referee.accept(mv)?;
    }
    let adj = referee.finish()?;
    Ok(GameTranscript {
        schema_version: TRANSCRIPT_SCHEMA,
        referee_version: REFEREE_VERSION.to_string(),
        config: cfg,
        moves: t.moves.clone(),
        margins: adj.margins,
        gram: adj.gram,
        final_map: adj.final_map,
        verdict: adj.verdict,
    })
}

pub(crate) fn replay_pairs(cfg: &GameConfig, moves: &[Move]) -> Result<Vec<RoundPair>, GameError> {
    let mut referee = Referee::new(cfg)?;
    for mv in moves {
        referee.accept(mv)?;
    }
    Ok(referee.pairs)
}

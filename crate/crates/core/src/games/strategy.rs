use std::sync::Arc;

use rand::Rng as _;

use super::gram::{gram_match_respond, GramBudget};
use super::literal::parse_element;
use super::{GameError, GameKind, PlayState, Player, Side};
use crate::algebra::{ginibre, haar_unitary_with, nearest_unitary, random_ball_element, AlgebraElement, TracialAlgebra};
use crate::rng::Rng;

/// A Player I move.
#[derive(Clone, Debug, PartialEq)]
pub enum Proposal {
    Element(Side, AlgebraElement),
    Stall,
}

/// A player. Given the same state and random stream, moves are
/// reproducible.
pub trait Strategy: Send {
    fn id(&self) -> &str;

    /// Player I's move for the current round.
    fn propose(&mut self, state: &PlayState, rng: &mut Rng) -> Result<Proposal, GameError>;

    /// Player II's answer, in the algebra opposite to `side`.
    fn respond(&mut self, state: &PlayState, side: Side, incoming: &AlgebraElement, rng: &mut Rng) -> Result<AlgebraElement, GameError>;
}

#[derive(Clone, Debug)]
enum Kind {
    Haar,
    Regular,
    Greedy { candidates: usize, budget: GramBudget },
    Scripted { steps: Vec<(Option<Side>, String)>, next: usize },
    Copy,
    PerturbedCopy(f64),
    GramMatch(GramBudget),
    Solver(GramBudget),
}

struct Library {
    id: String,
    game: GameKind,
    kind: Kind,
}

fn random_legal(game: GameKind, alg: &Arc<TracialAlgebra>, rng: &mut Rng) -> AlgebraElement {
    if game.unitary_moves() {
        haar_unitary_with(alg, rng).into_element()
    } else {
        random_ball_element(alg, 1.0, rng)
    }
}

fn legalize(game: GameKind, x: &AlgebraElement) -> AlgebraElement {
    if game.unitary_moves() {
        nearest_unitary(x).into_element()
    } else {
        x.clip_to_ball(1.0)
    }
}

fn copy_into(game: GameKind, x: &AlgebraElement, target: &Arc<TracialAlgebra>) -> AlgebraElement {
    match x.transplant(target) {
        Ok(y) => y,
        Err(_) if game.unitary_moves() => AlgebraElement::identity(target),
        Err(_) => AlgebraElement::zero(target),
    }
}

fn random_side(game: GameKind, rng: &mut Rng) -> Side {
    if game == GameKind::Representability || rng.random::<bool>() {
        Side::M
    } else {
        Side::N
    }
}

impl Strategy for Library {
    fn id(&self) -> &str {
        &self.id
    }

    fn propose(&mut self, state: &PlayState, rng: &mut Rng) -> Result<Proposal, GameError> {
        match &mut self.kind {
            Kind::Haar => {
                let side = random_side(self.game, rng);
                Ok(Proposal::Element(side, random_legal(self.game, state.algebra(side), rng)))
            }
            Kind::Regular => {
                let side = if state.round % 2 == 1 || self.game == GameKind::Representability { Side::M } else { Side::N };
                Ok(Proposal::Element(side, random_legal(self.game, state.algebra(side), rng)))
            }
            Kind::Greedy { candidates, budget } => {
                let mut best: Option<(Side, AlgebraElement, f64)> = None;
                for _ in 0..*candidates {
                    let side = random_side(self.game, rng);
                    let u = haar_unitary_with(state.algebra(side), rng).into_element();
                    let other = side.other();
                    let r = gram_match_respond(
                        &state.elements(other),
                        &state.elements(side),
                        &u,
                        state.algebra(other),
                        *budget,
                        rng.random(),
                    );
                    if best.as_ref().map_or(true, |b| r.deviation > b.2) {
                        best = Some((side, u, r.deviation));
                    }
                }
                let (side, u, _) = best.expect("candidates > 0");
                Ok(Proposal::Element(side, u))
            }
            Kind::Scripted { steps, next } => {
                let (side, text) = steps
                    .get(*next)
                    .cloned()
                    .ok_or_else(|| GameError::Script(format!("script exhausted at round {}", state.round)))?;
                *next += 1;
                match side {
                    None => Ok(Proposal::Stall),
                    Some(side) => Ok(Proposal::Element(side, parse_element(&text, state.algebra(side))?)),
                }
            }
            _ => Err(GameError::Role {
                strategy: self.id.clone(),
                player: Player::One,
            }),
        }
    }

    fn respond(&mut self, state: &PlayState, side: Side, incoming: &AlgebraElement, rng: &mut Rng) -> Result<AlgebraElement, GameError> {
        let other = side.other();
        let target = state.algebra(other);
        match &mut self.kind {
            Kind::Copy => Ok(copy_into(self.game, incoming, target)),
            Kind::PerturbedCopy(delta) => {
                let base = copy_into(self.game, incoming, target);
                let g = ginibre(target, rng);
                let noise = g.scale_real(*delta / g.two_norm());
                Ok(legalize(self.game, &(&base + &noise)))
            }
            Kind::Haar => Ok(random_legal(self.game, target, rng)),
            Kind::GramMatch(budget) | Kind::Solver(budget) => {
                let r = gram_match_respond(
                    &state.elements(other),
                    &state.elements(side),
                    incoming,
                    target,
                    *budget,
                    rng.random(),
                );
                Ok(r.element)
            }
            Kind::Scripted { steps, next } => {
                let (step_side, text) = steps
                    .get(*next)
                    .cloned()
                    .ok_or_else(|| GameError::Script(format!("script exhausted at round {}", state.round)))?;
                *next += 1;
                if step_side.is_some_and(|s| s != other) {
                    return Err(GameError::Script(format!("scripted reply must be on side {other}")));
                }
                parse_element(&text, target)
            }
            _ => Err(GameError::Role {
                strategy: self.id.clone(),
                player: Player::Two,
            }),
        }
    }
}

impl Library {
    /// The joint solver budget, when this is the representability solver.
    pub(crate) fn solver_budget(&self) -> Option<GramBudget> {
        match self.kind {
            Kind::Solver(b) => Some(b),
            _ => None,
        }
    }
}

fn parse_script(body: &str, player: Player) -> Result<Vec<(Option<Side>, String)>, GameError> {
    let mut steps = Vec::new();
    for raw in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        if raw == "stall" {
            if player == Player::Two {
                return Err(GameError::Script("Player II cannot stall".into()));
            }
            steps.push((None, String::new()));
            continue;
        }
        let (side, text) = match raw.split_once(':') {
            Some(("M", t)) => (Some(Side::M), t),
            Some(("N", t)) => (Some(Side::N), t),
            _ => (None, raw),
        };
        if player == Player::One && side.is_none() {
            return Err(GameError::Script(format!("Player I step `{raw}` needs a side prefix `M:` or `N:`")));
        }
        steps.push((side, text.trim().to_string()));
    }
    Ok(steps)
}

/// A boxed strategy together with its solver budget, if any.
pub struct Built {
    pub strategy: Box<dyn Strategy>,
    pub solver: Option<GramBudget>,
}

/// Builds a strategy from its identifier.
///
/// Player I: `haar`, `regular` (sides alternate `M`, `N`, …), `greedy` or
/// `greedy:<candidates>`, `scripted:<steps>`. Player II: `copy`,
/// `perturbed-copy:<δ>`, `gram-match` or `gram-match:<R>x<I>`, `haar`,
/// `solver` or `solver:<R>x<I>` (representability), `scripted:<steps>`.
/// Script steps are separated by `;`; a Player I step is `M:<literal>`,
/// `N:<literal>` or `stall`.
pub fn make_strategy(id: &str, player: Player, game: GameKind) -> Result<Built, GameError> {
    let (name, arg) = match id.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (id, None),
    };
    let budget = |arg: Option<&str>| -> Result<GramBudget, GameError> {
        arg.map_or(Ok(GramBudget::default()), |a| a.parse().map_err(GameError::InvalidConfig))
    };
    let unsupported = || GameError::Unsupported {
        strategy: id.to_string(),
        kind: game,
    };
    let role = |p: Player| {
        if p == player {
            Ok(())
        } else {
            Err(GameError::Role {
                strategy: id.to_string(),
                player,
            })
        }
    };
    let kind = match name {
        "haar" => Kind::Haar,
        "regular" => {
            role(Player::One)?;
            Kind::Regular
        }
        "greedy" => {
            role(Player::One)?;
            if game != GameKind::UnitaryGram {
                return Err(unsupported());
            }
            let candidates = match arg {
                Some(a) => a.parse().map_err(|_| GameError::InvalidConfig(format!("bad candidate count `{a}`")))?,
                None => 8,
            };
            Kind::Greedy {
                candidates: usize::max(candidates, 1),
                budget: GramBudget {
                    restarts: 4,
                    iterations: 60,
                },
            }
        }
        "scripted" => Kind::Scripted {
            steps: parse_script(arg.unwrap_or(""), player)?,
            next: 0,
        },
        "copy" => {
            role(Player::Two)?;
            Kind::Copy
        }
        "perturbed-copy" => {
            role(Player::Two)?;
            let delta: f64 = arg
                .ok_or_else(|| GameError::InvalidConfig("perturbed-copy needs `:<delta>`".into()))?
                .parse()
                .map_err(|_| GameError::InvalidConfig(format!("bad delta in `{id}`")))?;
            if !(delta >= 0.0) {
                return Err(GameError::InvalidConfig(format!("delta must be non-negative in `{id}`")));
            }
            Kind::PerturbedCopy(delta)
        }
        "gram-match" => {
            role(Player::Two)?;
            if !game.unitary_moves() {
                return Err(unsupported());
            }
            Kind::GramMatch(budget(arg)?)
        }
        "solver" => {
            role(Player::Two)?;
            if game != GameKind::Representability {
                return Err(unsupported());
            }
            Kind::Solver(budget(arg)?)
        }
        _ => return Err(GameError::UnknownStrategy(id.to_string())),
    };
    let lib = Library {
        id: id.to_string(),
        game,
        kind,
    };
    Ok(Built {
        solver: lib.solver_budget(),
        strategy: Box::new(lib),
    })
}

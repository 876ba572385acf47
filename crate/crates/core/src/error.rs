use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] crate::algebra::AlgebraError),
    #[error(transparent)]
    Banach(#[from] crate::banach::BanachError),
    #[error(transparent)]
    Formula(#[from] crate::formula::FormulaError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Game(#[from] crate::games::GameError),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

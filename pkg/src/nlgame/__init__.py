"""Nonlocal games, quantum strategies, guessing probabilities and classicalization."""

from .errors import (
    HypothesisNotMet,
    InputError,
    NLGameError,
    NumericalError,
)
from .model import (
    Correlation,
    Game,
    SecondPlayerStates,
    Strategy,
    achieved_correlation,
    chsh_game,
    chsh_optimal_strategy,
    expected_score,
    pre_measurement_states,
    second_player_states,
)

__all__ = [
    "HypothesisNotMet",
    "InputError",
    "NLGameError",
    "NumericalError",
    "Correlation",
    "Game",
    "SecondPlayerStates",
    "Strategy",
    "achieved_correlation",
    "chsh_game",
    "chsh_optimal_strategy",
    "expected_score",
    "pre_measurement_states",
    "second_player_states",
]

__version__ = "0.1.0"

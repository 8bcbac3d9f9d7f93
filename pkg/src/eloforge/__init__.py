"""Rating inflation under zero-sum Elo-style updates."""
from .potfn import BUILTINS, PotFunction, make_pot, parse_sigma, validate_pot
from .tails import TailIntegrals
from .dynamics import Move, Permutation, RatingState, Transcript, apply_move, replay
from .strategies import ladder, repeat_win
from .bounds import bound_report, phi, rating_cap, table_row
from .path_engine import Path, make_upset_free
from .search import SearchProblem, compare, solve

__version__ = "0.1.0"

__all__ = [
    "BUILTINS", "PotFunction", "make_pot", "parse_sigma", "validate_pot",
    "TailIntegrals", "Move", "Permutation", "RatingState", "Transcript", "apply_move",
    "replay", "ladder", "repeat_win", "bound_report", "phi", "rating_cap", "table_row",
    "Path", "make_upset_free", "SearchProblem", "compare", "solve",
]

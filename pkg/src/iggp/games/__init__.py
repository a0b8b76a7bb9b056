"""The bundled desk corpus."""
from importlib import resources

from ..parser import parse_program

GAMES = ("rps", "tictactoe", "eightpuzzle", "fizzbuzz")
_CACHE: dict = {}


def game_text(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.gdl").read_text(encoding="utf-8")


def load_game(name: str):
    """Parse a bundled game by name; the parsed program is shared per name."""
    if name not in GAMES:
        raise KeyError(f"unknown bundled game {name!r}; choose from {', '.join(GAMES)}")
    prog = _CACHE.get(name)
    if prog is None:
        prog = _CACHE[name] = parse_program(game_text(name))
    return prog

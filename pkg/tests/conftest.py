import pytest

from iggp.games import GAMES, load_game
from iggp.traces import generate_traces

CORPUS_SEED = 20181


@pytest.fixture(scope="session")
def games():
    return {g: load_game(g) for g in GAMES}


@pytest.fixture(scope="session")
def corpus_traces(games):
    """8 random + 8 intelligent traces per bundled game."""
    out = {}
    for i, (gid, game) in enumerate(sorted(games.items())):
        rnd = generate_traces(game, gid, "random", 8, CORPUS_SEED + i)
        smart = generate_traces(game, gid, "intelligent", 8, CORPUS_SEED + 100 + i,
                                player_options={"playouts": 200})
        out[gid] = (rnd, smart)
    return out

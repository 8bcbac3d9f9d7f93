import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eloforge.bounds import phi_value
from eloforge.dynamics import Move, Permutation, Transcript, replay
from eloforge.path_engine import (Path, RewriteLimitError, commute_upsets_right,
                                  continuous_cost, make_upset_free, random_path,
                                  remove_rank_swaps, strip_trailing_upsets)

IDENT2 = Permutation((0, 1))
IDENT3 = Permutation((0, 1, 2))


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def path(start, moves):
    return Path(tuple(start), tuple(Move(*m) for m in moves), Permutation(tuple(range(len(start)))))


def test_partial_overtake_becomes_smaller_upset(logistic):
    p = path((-0.5, 0.5), [(0, 1, 1.0)])
    stats = {}
    out = remove_rank_swaps(p, logistic, stats)
    assert stats == {"swap_partial": 1, "_max_error": stats["_max_error"]}
    assert out.perm == Permutation((1, 0))
    [m] = out.moves
    assert (m.winner, m.loser) == (0, 1)
    assert m.t == pytest.approx(1.0 / sig(1.0) - 1.0, rel=1e-12)
    assert m.t == pytest.approx(0.368, abs=1e-3)
    assert out.endpoint(logistic) == pytest.approx(p.endpoint(logistic), abs=1e-12)


def test_full_overtake_becomes_reverse_game(logistic):
    # winner 0.2 below: transfer sigma(0.2) ~ 0.55 takes it well past the loser
    p = path((-0.1, 0.1), [(0, 1, 1.0)])
    stats = {}
    out = remove_rank_swaps(p, logistic, stats)
    assert stats["swap_full"] == 1
    [m] = out.moves
    assert (m.winner, m.loser) == (1, 0)
    assert 0 < m.t < 1
    assert out.endpoint(logistic) == pytest.approx(p.endpoint(logistic), abs=1e-12)


def test_exact_overtake_is_a_pure_relabelling(logistic):
    # the transfer equals the gap, so the two ratings trade places
    t = 0.5 / sig(0.5)
    p = path((-0.25, 0.25), [(0, 1, t)])
    stats = {}
    out = remove_rank_swaps(p, logistic, stats)
    assert out.moves == ()
    assert stats["swap_exact"] == 1
    assert out.perm == Permutation((1, 0))
    assert out.endpoint(logistic) == pytest.approx(p.endpoint(logistic), abs=1e-12)


def test_ending_level_is_not_an_overtake(logistic):
    t = 1.0 / (2.0 * sig(1.0))
    p = path((-0.5, 0.5), [(0, 1, t)])
    assert remove_rank_swaps(p, logistic) == p


def test_non_upsets_untouched(logistic):
    p = path((0.0, 0.0, 0.0), [(0, 1, 1.0), (0, 2, 0.5), (1, 2, 0.25)])
    assert remove_rank_swaps(p, logistic) == p
    assert commute_upsets_right(p, logistic) == p


def test_disjoint_pair_swaps_exactly(logistic):
    p = path((0.0, 0.4, -0.4, 0.0), [(0, 1, 0.2), (3, 2, 0.7)])
    out = commute_upsets_right(p, logistic)
    assert out.moves == (Move(3, 2, 0.7), Move(0, 1, 0.2))
    assert np.array_equal(out.endpoint(logistic), p.endpoint(logistic))


def test_shared_winner_pair(logistic):
    # non-overtaking upset 0 beats 1, then 0 beats 2
    p = path((0.0, 0.4, -0.4), [(0, 1, 0.2), (0, 2, 0.7)])
    out = commute_upsets_right(p, logistic)
    assert out.endpoint(logistic) == pytest.approx(p.endpoint(logistic), abs=1e-9)
    st_ = out.states(logistic)
    flags = [r[m.winner] < r[m.loser] for m, r in zip(out.moves, st_)]
    assert flags == sorted(flags)


def test_chain_pair_keeps_smaller_upset(logistic):
    # 0 beats 1 (upset), then 1 beats 2 with a smaller transfer
    p = path((0.0, 0.4, -0.4), [(0, 1, 0.2), (1, 2, 0.1)])
    stats = {}
    out = commute_upsets_right(p, logistic, stats)
    assert stats["commute_chain_keep"] == 1
    assert [(m.winner, m.loser) for m in out.moves] == [(0, 2), (0, 1)]
    assert out.endpoint(logistic) == pytest.approx(p.endpoint(logistic), abs=1e-9)


def test_chain_pair_drops_upset(logistic):
    p = path((0.0, 0.4, -0.4), [(0, 1, 0.05), (1, 2, 1.0)])
    stats = {}
    out = commute_upsets_right(p, logistic, stats)
    assert stats["commute_chain_drop"] == 1
    assert out.upsets(logistic) == 0
    assert out.endpoint(logistic) == pytest.approx(p.endpoint(logistic), abs=1e-9)


def test_commute_rejects_overtaking_upset(logistic):
    with pytest.raises(ValueError, match="rank-swapping"):
        commute_upsets_right(path((-0.5, 0.5), [(0, 1, 1.0)]), logistic)


def test_continuous_cost(logistic, logistic_tails):
    c = continuous_cost((0.0, 0.0), Move(0, 1, 1.0), logistic_tails)
    assert c == pytest.approx(math.e, rel=1e-10)
    assert continuous_cost((0.0, 0.0), Move(0, 1, 1e-12), logistic_tails) < 1e-11
    with pytest.raises(ValueError, match="non-upsets"):
        continuous_cost((0.5, -0.5), Move(1, 0, 1.0), logistic_tails)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 30), st.floats(1e-6, 1.0))
def test_continuous_cost_bounded_by_pot(z, t):
    from conftest import tails
    tl = tails("logistic")
    c = continuous_cost((z / 2, -z / 2), Move(0, 1, t), tl)
    assert c <= tl.sigma.cost_constant * t * (1 + 1e-9)


def test_strip_trailing_upset(logistic):
    p = path((0.0, 0.0), [(0, 1, 1.0), (1, 0, 0.1)])
    out = strip_trailing_upsets(p, 0.5, logistic)
    assert out.moves == (Move(0, 1, 1.0),)
    assert max(out.endpoint(logistic)) >= max(p.endpoint(logistic))
    clean = path((0.0, 0.0), [(0, 1, 1.0)])
    assert strip_trailing_upsets(clean, 0.5, logistic) == clean
    with pytest.raises(ValueError, match="R="):
        strip_trailing_upsets(p, 0.9, logistic)


def test_upset_free_path_unchanged(logistic):
    t = Transcript(3, (Move(0, 1), Move(0, 2), Move(2, 1)))
    out, rep = make_upset_free(t, 0.5, logistic)
    assert out == Path.from_transcript(t)
    assert rep.ratio == 1.0
    assert rep.certified


def test_alternating_two_player_path(logistic):
    m = 6
    moves = [Move(0, 1), Move(1, 0)] * m
    r = replay(Transcript(2, tuple(moves)), logistic).final.ratings
    while max(r) < 2.0:
        moves.append(Move(0, 1) if r[0] >= r[1] else Move(1, 0))
        r = replay(Transcript(2, tuple(moves)), logistic).final.ratings
    out, rep = make_upset_free(Transcript(2, tuple(moves)), 2.0, logistic)
    assert rep.certified, rep.to_dict()
    assert rep.rewritten_len <= logistic.cost_constant * rep.original_len


def test_relabelled_transcript_input(logistic):
    t = Transcript(3, (Move(0, 1), Move(2, 1), Move(0, 2)), ((1, Permutation((2, 0, 1))),))
    out, rep = make_upset_free(t, 0.1, logistic)
    assert rep.certified
    assert rep.steps_applied["perm_push"] == 1


def test_random_hundred_edge_path(logistic, logistic_tails):
    rng = np.random.default_rng(2024)
    t = random_path(rng, logistic, 5, 100, R=1.0)
    out, rep = make_upset_free(t, 1.0, logistic, logistic_tails)
    assert rep.certified, rep.to_dict()
    assert out.upsets(logistic) == 0


def test_rewrite_cap(logistic, logistic_tails):
    rng = np.random.default_rng(5)
    t = random_path(rng, logistic, 4, 40, R=1.0, upset_bias=0.9)
    with pytest.raises(RewriteLimitError) as info:
        make_upset_free(t, 1.0, logistic, logistic_tails, max_rewrites=2)
    assert isinstance(info.value.path, Path)


def test_target_must_be_reached(logistic):
    with pytest.raises(ValueError, match="R="):
        make_upset_free(Transcript(2, (Move(0, 1),)), 1.0, logistic)


def test_report_json_is_stable(logistic, logistic_tails):
    rng = np.random.default_rng(11)
    t = random_path(rng, logistic, 4, 30)
    a = make_upset_free(t, 1.0, logistic, logistic_tails)[1].to_json()
    b = make_upset_free(t, 1.0, logistic, logistic_tails)[1].to_json()
    assert a == b


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 5), length=st.integers(1, 40),
       bias=st.floats(0.0, 1.0))
def test_pipeline_certifies_random_paths(seed, n, length, bias):
    from conftest import pot, tails
    sigma, tl = pot("logistic"), tails("logistic")
    t = random_path(np.random.default_rng(seed), sigma, n, length, upset_bias=bias)
    out, rep = make_upset_free(t, 1.0, sigma, tl)
    assert rep.certified, rep.to_dict()
    # from the origin, an upset-free path raises the potential by at most phi_constant per unit pot
    assert phi_value(out.endpoint(sigma), tl) <= sigma.phi_constant * out.length + 1e-9


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), spec=st.sampled_from(["erf", "alg:p=1", "alg:p=3"]))
def test_pipeline_other_pots(seed, spec):
    from conftest import pot, tails
    sigma, tl = pot(spec), tails(spec)
    t = random_path(np.random.default_rng(seed), sigma, 4, 25)
    _, rep = make_upset_free(t, 1.0, sigma, tl)
    assert rep.certified, rep.to_dict()

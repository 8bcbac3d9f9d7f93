"""Two players, one of whom wins every game.

The winner's rating after k games tracks half the inverse cumulative tail
integral at 2k.  For the logistic pot that is about (1/2) ln(2k), so a
thousandfold increase in games buys only ~3.5 rating points.
"""
from eloforge import TailIntegrals, parse_sigma
from eloforge.bounds import two_player_closed_form
from eloforge.strategies import repeat_win_checkpoints

ks = [10, 100, 1_000, 10_000, 100_000, 1_000_000]

for spec in ("logistic", "erf", "alg:p=2"):
    sigma = parse_sigma(spec)
    tails = TailIntegrals(sigma)
    print(f"\n{spec}")
    print(f"{'k':>9} {'rating':>10} {'estimate':>10} {'closed form':>12}")
    for k, r in repeat_win_checkpoints(sigma, ks).items():
        est = 0.5 * tails.cumulative_inv(2.0 * k)
        print(f"{k:>9} {r:>10.4f} {est:>10.4f} {two_player_closed_form(sigma, k):>12.4f}")

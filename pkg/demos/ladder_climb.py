"""Many players: the ladder pushes the top rating to order k^(1/3).

Each game, the first player whose lead over the next is below the threshold
beats that next player.  Points flow up the ladder and new players are
recruited at the bottom.  The certificate rows are the inequalities that
together force the guarantee.
"""
from eloforge import TailIntegrals, parse_sigma, rating_cap
from eloforge.strategies import ladder, repeat_win

sigma = parse_sigma("logistic")
tails = TailIntegrals(sigma)
print(f"threshold {sigma.threshold:.5f}, rate {sigma.ladder_rate:.5f}")
print(f"{'k':>9} {'two players':>12} {'ladder':>9} {'guarantee':>10} {'cap':>9} {'players':>8}")
for k in (1_000, 10_000, 100_000, 1_000_000):
    run = ladder(sigma, k)
    two, _ = repeat_win(sigma, k, record=False)
    print(f"{k:>9} {two:>12.3f} {run.r1:>9.3f} {run.guarantee:>10.3f} "
          f"{rating_cap(k, tails):>9.1f} {run.players_used:>8}")

run = ladder(sigma, 1_000_000)
print("\ncertificate at k = 1e6")
for row in run.certificate():
    print(f"  {row['name']:<16} {row['lhs']:>14.4f} <= {row['rhs']:<14.4f} margin {row['margin']:.4g}")
check = run.player_check()
print(f"  players when the guarantee is first beaten: {run.players_at_stop} "
      f"(bound {check['rhs']:.2f})")

# the top ratings form a staircase with steps at least the threshold
top = run.final_state.ratings[:8]
print("\ntop of the ladder:", " ".join(f"{r:.2f}" for r in top))

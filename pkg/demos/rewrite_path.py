"""Removing upsets from a game path without making it much longer.

A random transcript mixes upsets and ordinary wins until someone reaches
rating 1.  The rewrite produces an upset-free transcript whose endpoint is
the same up to relabelling and whose total pot is within a constant factor.
"""
import numpy as np

from eloforge import TailIntegrals, parse_sigma
from eloforge.bounds import phi_value
from eloforge.path_engine import Path, make_upset_free, random_path

sigma = parse_sigma("logistic")
tails = TailIntegrals(sigma)
rng = np.random.default_rng(7)

transcript = random_path(rng, sigma, n=5, length=40, R=1.0, upset_bias=0.6)
path, report = make_upset_free(transcript, 1.0, sigma, tails)

upsets_before = Path.from_transcript(transcript).upsets(sigma)

print(f"games: {len(transcript.moves)} -> {len(path.moves)}")
print(f"upsets: {upsets_before} -> {report.upsets}")
print(f"total pot: {report.original_len:.4f} -> {report.rewritten_len:.4f} "
      f"(ratio {report.ratio:.4f}, allowed {report.cost_constant:.4f})")
print(f"endpoint error: {report.endpoint_error:.2e}")
print("rewrites:", {k: v for k, v in report.steps_applied.items() if v})

# an upset-free path from the origin cannot raise the potential faster than phi_constant per pot
end = path.endpoint(sigma)
print(f"potential at the end {phi_value(end, tails):.3f} <= "
      f"{sigma.phi_constant:.3f} x {path.length:.3f} = {sigma.phi_constant * path.length:.3f}")

"""The matching kernel returns a primal matching plus nonnegative duals.

The dual values prove optimality. Every edge is covered, meaning the two
endpoint duals sum to at least its weight. The duals also add up to exactly
the matching value. Breaking either property makes the certificate check fail.
"""

import numpy as np

from gnalign import BipartiteProblem, MatchingResult, solve_mwm, verify_certificate

rng = np.random.default_rng(3)
edges = tuple((a, b, float(rng.integers(0, 10))) for a in range(5) for b in range(6) if rng.random() < 0.6)
problem = BipartiteProblem(5, 6, edges)
result = solve_mwm(problem)

print("matched pairs:", result.matched)
print("matching value:", result.value)
print("left duals: ", np.round(result.duals_left, 3))
print("right duals:", np.round(result.duals_right, 3))
print("dual objective:", result.dual_value)
print("certificate valid:", verify_certificate(problem, result))

bumped = result.duals_left.copy()
bumped[0] += 1.0
tampered = MatchingResult(result.matched, result.value, bumped, result.duals_right)
print("after raising one dual by 1, certificate valid:", verify_certificate(problem, tampered))

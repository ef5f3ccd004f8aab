"""Hot numeric kernels with a numba backend and a pure-Python/numpy fallback.

The two inner loops that dominate runtime live here: the dense simplex
pivot loop used by the game solver, and the attack-sampling accumulation
used by the Monte Carlo simulator.  Both are written in a nopython-compatible
subset so the exact same function body runs either JIT-compiled or as plain
Python.  Because neither backend reorders floating-point operations, results
are bit-identical across backends.

Set ``OST_NUMBA=0`` to force the pure-Python/numpy path (the default is to
use numba when it is importable).  ``ACTIVE_BACKEND`` reports the selection.
"""

import os

import numpy as np

_SIMPLEX_OK = 0
_SIMPLEX_ITER_LIMIT = 1
_SIMPLEX_UNBOUNDED = 2


def _simplex_game_py(payoff, tol, max_iter):
    """Solve the column player's LP for a positive payoff matrix.

    ``payoff`` is the (rows x cols) matrix of a zero-sum game, shifted so
    every entry is strictly positive; the row player maximizes.  Solves

        max sum(y)  s.t.  payoff @ y <= 1,  y >= 0

    by tableau simplex with Bland's rule (lowest-index entering variable,
    lowest basis index on ratio ties), which makes the visited vertex
    deterministic and rules out cycling.

    Returns ``(status, z, y, x)`` where ``z`` is the optimal objective,
    ``y`` the column player's scaled strategy and ``x`` the dual values
    (the row player's scaled strategy).  The game value is ``1 / z``.
    """
    m, n = payoff.shape
    width = n + m + 1
    T = np.zeros((m + 1, width))
    for r in range(m):
        for c in range(n):
            T[r, c] = payoff[r, c]
        T[r, n + r] = 1.0
        T[r, width - 1] = 1.0
    for c in range(n):
        T[m, c] = -1.0

    basis = np.empty(m, dtype=np.int64)
    for r in range(m):
        basis[r] = n + r

    status = _SIMPLEX_ITER_LIMIT
    for _ in range(max_iter):
        enter = -1
        for c in range(n + m):
            if T[m, c] < -tol:
                enter = c
                break
        if enter < 0:
            status = _SIMPLEX_OK
            break

        best = np.inf
        for r in range(m):
            a = T[r, enter]
            if a > tol:
                ratio = T[r, width - 1] / a
                if ratio < best:
                    best = ratio
        if not np.isfinite(best):
            status = _SIMPLEX_UNBOUNDED
            break
        leave = -1
        for r in range(m):
            a = T[r, enter]
            if a > tol and T[r, width - 1] / a <= best + tol:
                if leave < 0 or basis[r] < basis[leave]:
                    leave = r

        piv = T[leave, enter]
        for c in range(width):
            T[leave, c] /= piv
        for r in range(m + 1):
            if r != leave:
                f = T[r, enter]
                if f != 0.0:
                    for c in range(width):
                        T[r, c] -= f * T[leave, c]
        basis[leave] = enter

    z = T[m, width - 1]
    y = np.zeros(n)
    for r in range(m):
        if basis[r] < n:
            y[basis[r]] = T[r, width - 1]
    x = np.zeros(m)
    for r in range(m):
        x[r] = T[m, n + r]
    return status, z, y, x


def _sample_run_means_py(values, cum_defender, cum_attacker, u_defender, u_attacker):
    """Mean defender utility per run of i.i.d. sampled attacks.

    ``u_defender`` / ``u_attacker`` are (runs x attacks) uniforms in [0, 1);
    each is inverted against the cumulative strategy weights (whose last
    entry must be exactly 1.0) to pick a level row / group column, and the
    matching matrix entries are averaged per run.
    """
    runs, attacks = u_defender.shape
    means = np.empty(runs)
    for r in range(runs):
        total = 0.0
        for t in range(attacks):
            j = 0
            x = u_defender[r, t]
            while x >= cum_defender[j]:
                j += 1
            i = 0
            y = u_attacker[r, t]
            while y >= cum_attacker[i]:
                i += 1
            total += values[j, i]
        means[r] = total / attacks
    return means


def _select_backend():
    if os.environ.get("OST_NUMBA", "1") == "0":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


ACTIVE_BACKEND = _select_backend()

if ACTIVE_BACKEND == "numba":
    from numba import njit

    simplex_game = njit(cache=True)(_simplex_game_py)
    sample_run_means = njit(cache=True)(_sample_run_means_py)
else:
    simplex_game = _simplex_game_py
    sample_run_means = _sample_run_means_py

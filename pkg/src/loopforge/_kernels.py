"""Compiled inner loop for long products of closed-form SU(2) factors."""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def su2_chain(alpha, beta, cth, sth, step_gen, axis_coef, cos_kt, sin_kt, gen_k):
    """Right-multiply ``[[alpha, beta], [-conj(beta), conj(alpha)]]`` in place by
    ``cos(theta) I + sin(theta) u(t).X`` for every step.

    alpha, beta: (B, G) complex; cth, sth: (B, S) cos/sin of the step angles;
    step_gen: (S,) generator per step; axis_coef: (J, 6) with
    ``u_i = axis_coef[j, 2i] cos(kt) + axis_coef[j, 2i+1] sin(kt)``;
    cos_kt, sin_kt: (K+1, G) tables; gen_k: (J,) frequency per generator.
    """
    B, G = alpha.shape
    S = step_gen.shape[0]
    for b in range(B):
        for s in range(S):
            c = cth[b, s]
            sn = sth[b, s]
            if sn == 0.0 and c == 1.0:
                continue
            j = step_gen[s]
            k = gen_k[j]
            p1 = axis_coef[j, 0]
            q1 = axis_coef[j, 1]
            p2 = axis_coef[j, 2]
            q2 = axis_coef[j, 3]
            p3 = axis_coef[j, 4]
            q3 = axis_coef[j, 5]
            for g in range(G):
                ck = cos_kt[k, g]
                sk = sin_kt[k, g]
                u1 = sn * (p1 * ck + q1 * sk)
                u2 = sn * (p2 * ck + q2 * sk)
                u3 = sn * (p3 * ck + q3 * sk)
                ar = alpha[b, g].real
                ai = alpha[b, g].imag
                er = beta[b, g].real
                ei = beta[b, g].imag
                alpha[b, g] = complex(ar * c - ai * u3 - er * u1 - ei * u2,
                                      ai * c + ar * u3 - ei * u1 + er * u2)
                beta[b, g] = complex(ar * u1 - ai * u2 + er * c + ei * u3,
                                     ar * u2 + ai * u1 + ei * c - er * u3)


def axis_table(r: np.ndarray, axes: dict) -> np.ndarray:
    """``(J, 6)`` cos/sin coefficients of the axis vector of each generator."""
    coef = np.zeros((len(r), 6))
    for j, rj in enumerate(r):
        a, b = axes[int(rj)]
        if rj % 2:
            coef[j, 2 * a] = 1.0
            coef[j, 2 * b + 1] = -1.0
        else:
            coef[j, 2 * a + 1] = 1.0
            coef[j, 2 * b] = 1.0
    return coef

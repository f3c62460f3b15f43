"""Special functions for the spectral transform pair.

Conical Legendre functions P_{-1/2+it}(cosh r) are the radial eigenfunctions
of the hyperbolic Laplacian; the complete elliptic integral K enters through
the closed form of P_{-1/2}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre_panels

# Beyond this radius the periodic-integrand rule would need ~e^r nodes to
# resolve the sharp minimum of cosh r + sinh r cos(phi) near phi = pi, so the
# adaptive method switches to the cosine representation.
_PERIODIC_R_MAX = 8.0
_START_NODE_CAP = 8192


class ConicalAccuracyError(RuntimeError):
    """Quadrature failed its convergence or reality diagnostics."""


@dataclass(frozen=True)
class ConicalEvalConfig:
    """Evaluation settings for conical Legendre functions.

    quadrature_nodes is the starting node count of the periodic rule;
    'adaptive' doubles it until the result changes by less than abs_tol and
    falls back to the cosine representation at large radii, while
    'fixed_trapezoid_periodic' uses the periodic rule at exactly
    quadrature_nodes everywhere.
    """

    quadrature_nodes: int = 256
    method: str = "adaptive"
    max_nodes: int = 1 << 17
    abs_tol: float = 1e-10
    imag_tol: float = 1e-8

    def __post_init__(self):
        if self.quadrature_nodes < 16:
            raise ValueError("quadrature_nodes must be at least 16")
        if self.method not in ("adaptive", "fixed_trapezoid_periodic"):
            raise ValueError(f"unknown method {self.method!r}")


def conical_p(t: float, r: float, cfg: ConicalEvalConfig | None = None) -> float:
    """P_{-1/2+it}(cosh r), real and even in t."""
    return float(conical_p_table([t], [r], cfg)[0, 0])


def conical_p_table(t_vals, r_vals, cfg: ConicalEvalConfig | None = None) -> np.ndarray:
    """Table of P_{-1/2+it}(cosh r), shape (len(t_vals), len(r_vals)).

    Primary evaluation integrates (cosh r + sinh r cos phi)^(-1/2+it) over a
    uniform periodic grid, doubling the node count until converged; the
    integral is real, and the residual imaginary part is a convergence
    diagnostic.  Large radii use the equivalent cosine representation
    (sqrt(2)/pi) * int_0^r cos(tu) / sqrt(cosh r - cosh u) du with the
    endpoint singularity removed by u = r - v^2.
    """
    cfg = cfg or ConicalEvalConfig()
    t = np.atleast_1d(np.asarray(t_vals, dtype=float))
    r = np.atleast_1d(np.asarray(r_vals, dtype=float))
    if np.any(r < 0.0):
        raise ValueError("conical_p requires r >= 0")
    # evenness in t: evaluate unique |t| only
    tu, inv = np.unique(np.abs(t), return_inverse=True)
    table = np.empty((tu.size, r.size), dtype=float)
    for j, rj in enumerate(r):
        if rj < 1e-14:
            table[:, j] = 1.0
        elif cfg.method == "adaptive" and rj > _PERIODIC_R_MAX:
            table[:, j] = _cosine_column(tu, rj, cfg)
        else:
            table[:, j] = _periodic_column(tu, rj, cfg)
    return table[inv, :]


def conical_p_cosine(t: float, r: float, n_panels: int | None = None) -> float:
    """The cosine representation of P_{-1/2+it}(cosh r), exposed as an oracle."""
    if r <= 0.0:
        return 1.0
    cfg = ConicalEvalConfig()
    return float(_cosine_column(np.atleast_1d(abs(float(t))), float(r), cfg,
                                n_panels=n_panels)[0])


def _periodic_sums(t, log_base, amp, chunk=4096):
    """mean over nodes of amp * exp(i t log_base), chunked to bound memory."""
    n = log_base.size
    acc = np.zeros(t.size, dtype=complex)
    for lo in range(0, n, chunk):
        lb = log_base[lo:lo + chunk]
        am = amp[lo:lo + chunk]
        phase = t[:, None] * lb[None, :]
        acc += (np.cos(phase) @ am) + 1j * (np.sin(phase) @ am)
    return acc / n


def _periodic_column(t, r, cfg: ConicalEvalConfig) -> np.ndarray:
    ch, sh = math.cosh(r), math.sinh(r)
    tmax = float(t[-1]) if t.size else 0.0
    n = max(cfg.quadrature_nodes, 8 * math.ceil(tmax * r))
    n = min(n, _START_NODE_CAP)
    if cfg.method == "fixed_trapezoid_periodic":
        n = cfg.quadrature_nodes

    def node_values(phi):
        base = ch + sh * np.cos(phi)
        return _periodic_sums(t, np.log(base), 1.0 / np.sqrt(base))

    phi = 2.0 * math.pi * np.arange(n) / n
    vals = node_values(phi)
    if cfg.method == "fixed_trapezoid_periodic":
        _check_reality(vals, cfg, r, t)
        return vals.real

    while n < cfg.max_nodes:
        midpoints = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        refined = 0.5 * (vals + node_values(midpoints))
        n *= 2
        delta = np.max(np.abs(refined - vals))
        vals = refined
        if delta < cfg.abs_tol:
            break
    else:
        warnings.warn(
            f"periodic conical rule hit {cfg.max_nodes} nodes at r={r:g} "
            f"(last change {delta:.2e})", RuntimeWarning)
    _check_reality(vals, cfg, r, t)
    return vals.real


def _check_reality(vals, cfg, r, t):
    resid = float(np.max(np.abs(vals.imag)))
    if resid > cfg.imag_tol:
        raise ConicalAccuracyError(
            f"imaginary residual {resid:.3e} exceeds {cfg.imag_tol:g} "
            f"at r={r:g}, |t|<={t[-1] if t.size else 0:g}")


def _cosine_column(t, r, cfg: ConicalEvalConfig, n_panels: int | None = None) -> np.ndarray:
    """(sqrt(2)/pi) int_0^r cos(tu)/sqrt(cosh r - cosh u) du via u = r - v^2.

    cosh r - cosh(r - v^2) is computed as 2 sinh(v^2/2) sinh(r - v^2/2),
    which avoids the cancellation of the direct difference at large r.
    """
    tmax = float(t[-1]) if t.size else 0.0
    if n_panels is None:
        n_panels = max(16, math.ceil(tmax * r / math.pi))

    def evaluate(npan):
        v, w = gauss_legendre_panels(0.0, math.sqrt(r), npan, order=10)
        v2 = v * v
        amp = 2.0 * v / np.sqrt(2.0 * np.sinh(0.5 * v2) * np.sinh(r - 0.5 * v2))
        wamp = w * amp
        return (math.sqrt(2.0) / math.pi) * (np.cos(t[:, None] * (r - v2)[None, :]) @ wamp)

    vals = evaluate(n_panels)
    refined = evaluate(2 * n_panels)
    if np.max(np.abs(refined - vals)) > 1e3 * cfg.abs_tol:
        refined_again = evaluate(4 * n_panels)
        if np.max(np.abs(refined_again - refined)) > 1e3 * cfg.abs_tol:
            raise ConicalAccuracyError(
                f"cosine-representation panels failed to converge at r={r:g}")
        refined = refined_again
    return refined


def elliptic_k(m: float) -> float:
    """Complete elliptic integral K(m) of modulus m via the AGM iteration.

    K(m) = pi / (2 AGM(1, sqrt(1 - m^2))), valid for 0 <= m < 1.
    """
    if not (0.0 <= m < 1.0):
        raise ValueError(f"elliptic_k requires 0 <= m < 1, got {m}")
    a, b = 1.0, math.sqrt(1.0 - m * m)
    while abs(a - b) > 1e-15 * a:
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def elliptic_k_quadrature(m: float, n_panels: int = 64) -> float:
    """K(m) from its defining integral; retained as a test oracle for the AGM."""
    if not (0.0 <= m < 1.0):
        raise ValueError(f"elliptic_k requires 0 <= m < 1, got {m}")
    phi, w = gauss_legendre_panels(0.0, 0.5 * math.pi, n_panels, order=10)
    return float(np.sum(w / np.sqrt(1.0 - (m * np.sin(phi)) ** 2)))
